//! Dense helpers for the small matrices that show up here: LU with partial
//! pivoting for the N x N Krein matrices, a closed-form symmetric 3x3
//! eigensolver for spectral norms, and power iteration for discretized
//! integral operators.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular: |det| = {det:.3e} below tolerance {tol:.3e}")]
    Singular { det: f64, tol: f64 },
    #[error("power iteration stalled: relative change {change:.3e} > {tol:.3e} after {iters} iterations")]
    PowerIterationStall { change: f64, tol: f64, iters: usize },
}

/// Row-major square matrix, just enough structure for our N <= 3 plus
/// regression tests at larger N.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }
}

/// LU factorization with partial pivoting; enough to invert and take
/// determinants of well-scaled small matrices.
pub struct Lu {
    lu: Matrix,
    piv: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(m: &Matrix) -> Self {
        let n = m.n;
        let mut lu = m.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in (k + 1)..n {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, tmp);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let pivot = lu.get(k, k);
            if pivot == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let f = lu.get(i, k) / pivot;
                lu.set(i, k, f);
                for j in (k + 1)..n {
                    lu.set(i, j, lu.get(i, j) - f * lu.get(k, j));
                }
            }
        }
        Self { lu, piv, sign }
    }

    pub fn det(&self) -> f64 {
        let mut d = self.sign;
        for k in 0..self.lu.n {
            d *= self.lu.get(k, k);
        }
        d
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc / self.lu.get(i, i);
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.lu.n;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
            e[j] = 0.0;
        }
        inv
    }
}

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form,
/// ascending order.
pub fn sym3_eigenvalues(m: &Matrix) -> [f64; 3] {
    assert_eq!(m.n, 3);
    let (a, b, c) = (m.get(0, 0), m.get(1, 1), m.get(2, 2));
    let (d, e, f) = (m.get(0, 1), m.get(1, 2), m.get(0, 2));
    let p1 = d * d + e * e + f * f;
    if p1 == 0.0 {
        let mut ev = [a, b, c];
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return ev;
    }
    let q = (a + b + c) / 3.0;
    let p2 = (a - q).powi(2) + (b - q).powi(2) + (c - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    // B = (M - q I)/p, r = det(B)/2 clamped into [-1, 1]
    let (ba, bb, bc) = ((a - q) / p, (b - q) / p, (c - q) / p);
    let (bd, be, bf) = (d / p, e / p, f / p);
    let detb = ba * (bb * bc - be * be) - bd * (bd * bc - be * bf) + bf * (bd * be - bb * bf);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut ev = [e1, e2, e3];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Spectral norm of a symmetric 3x3 matrix.
pub fn sym3_spectral_norm(m: &Matrix) -> f64 {
    let ev = sym3_eigenvalues(m);
    ev[0].abs().max(ev[2].abs())
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration
/// from a fixed deterministic start vector.
pub fn power_iteration_sym(
    m: &Matrix,
    rel_tol: f64,
    max_iters: usize,
) -> Result<f64, LinalgError> {
    let n = m.n;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.01 * ((i as f64) * 0.7).sin())
        .collect();
    let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|t| *t /= nv);
    let mut lambda = 0.0;
    for it in 0..max_iters {
        let mut w = m.mul_vec(&v);
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        w.iter_mut().for_each(|t| *t /= nw);
        let change = (nw - lambda).abs() / nw.max(f64::MIN_POSITIVE);
        lambda = nw;
        v = w;
        if change <= rel_tol && it > 0 {
            return Ok(lambda);
        }
    }
    Err(LinalgError::PowerIterationStall {
        change: rel_tol,
        tol: rel_tol,
        iters: max_iters,
    })
}

//! Krein-formula resolvents for finite arrays of delta interactions,
//! specialized to the Cheon-Shigehara triple
//! `{2/beta - 1/a, beta/a^2, 2/beta - 1/a}` at `{y-a, y, y+a}` and its
//! coupling-disbalanced variant (every coupling multiplied by `alpha`).

use serde::Serialize;
use thiserror::Error;

use crate::kernels::{free_kernel_raw, KernelValue, ModelTag, SpectralPoint};
use crate::linalg::{Lu, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArrayError {
    #[error("invalid coupling config: {0}")]
    InvalidConfig(String),
    #[error("degenerate coupling: 2/beta - 1/a = 0 at beta = {beta}, a = {a}")]
    DegenerateCoupling { beta: f64, a: f64 },
    #[error("singular u: |2a - beta| = {gap:.3e} too small at beta = {beta}, a = {a}")]
    SingularU { beta: f64, a: f64, gap: f64 },
    #[error("gamma matrix singular: |det| = {det:.3e} below tolerance {tol:.3e}; -kappa^2 is at an eigenvalue of the array")]
    SingularGamma { det: f64, tol: f64 },
}

/// Parameters of the Cheon-Shigehara family: delta-prime strength `beta`,
/// spacing `a`, coupling disbalance `alpha` (1 = the balanced scheme) and
/// center `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingConfig {
    pub beta: f64,
    pub a: f64,
    pub alpha: f64,
    pub y: f64,
}

impl CouplingConfig {
    pub fn new(beta: f64, a: f64, alpha: f64, y: f64) -> Result<Self, ArrayError> {
        if !(beta.is_finite() && beta != 0.0) {
            return Err(ArrayError::InvalidConfig(format!("beta = {beta} must be nonzero finite")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(ArrayError::InvalidConfig(format!("a = {a} must be positive finite")));
        }
        if !(alpha.is_finite() && alpha != 0.0) {
            return Err(ArrayError::InvalidConfig(format!("alpha = {alpha} must be nonzero finite")));
        }
        if !y.is_finite() {
            return Err(ArrayError::InvalidConfig(format!("y = {y} must be finite")));
        }
        Ok(Self { beta, a, alpha, y })
    }

    /// Balanced config (`alpha` = 1) centered at the origin.
    pub fn balanced(beta: f64, a: f64) -> Result<Self, ArrayError> {
        Self::new(beta, a, 1.0, 0.0)
    }
}

/// A finite array of delta interactions: nonzero couplings at strictly
/// increasing centers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaArray {
    couplings: Vec<f64>,
    centers: Vec<f64>,
}

impl DeltaArray {
    pub fn new(couplings: Vec<f64>, centers: Vec<f64>) -> Result<Self, ArrayError> {
        if couplings.len() != centers.len() {
            return Err(ArrayError::InvalidConfig(
                "couplings and centers must have equal length".into(),
            ));
        }
        if couplings.iter().any(|c| !c.is_finite() || *c == 0.0) {
            return Err(ArrayError::InvalidConfig("all couplings must be nonzero finite".into()));
        }
        if centers.windows(2).any(|w| !(w[0] < w[1])) || centers.iter().any(|c| !c.is_finite()) {
            return Err(ArrayError::InvalidConfig("centers must be strictly increasing".into()));
        }
        Ok(Self { couplings, centers })
    }

    /// The empty array; its resolvent is the free one.
    pub fn empty() -> Self {
        Self {
            couplings: Vec::new(),
            centers: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
}

/// Scalars `u = 2 beta kappa a / (2a - beta)`, `v = 2 kappa a^2 / beta`,
/// `w = e^{-kappa a}` that assemble the triple-delta Krein matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uvw {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

fn singular_u_gap(beta: f64, a: f64) -> Result<f64, ArrayError> {
    let gap = (2.0 * a - beta).abs();
    if gap < 1e-9 * (1.0 + 2.0 * a.abs() + beta.abs()) {
        Err(ArrayError::SingularU { beta, a, gap })
    } else {
        Ok(gap)
    }
}

/// Evaluate `(u, v, w)` at spacing `a >= 0` (`a = 0` gives the limit values
/// `u = v = 0`, `w = 1`).
pub fn uvw_raw(beta: f64, a: f64, kappa: f64) -> Result<Uvw, ArrayError> {
    singular_u_gap(beta, a)?;
    Ok(Uvw {
        u: 2.0 * beta * kappa * a / (2.0 * a - beta),
        v: 2.0 * kappa * a * a / beta,
        w: (-kappa * a).exp(),
    })
}

/// `(u, v, w)` for a coupling config.
pub fn uvw(cfg: &CouplingConfig, s: SpectralPoint) -> Result<Uvw, ArrayError> {
    uvw_raw(cfg.beta, cfg.a, s.kappa())
}

/// Cheon-Shigehara triple: couplings `alpha * (2/beta - 1/a, beta/a^2,
/// 2/beta - 1/a)` at `{y - a, y, y + a}`.
pub fn cs_couplings(cfg: &CouplingConfig) -> Result<DeltaArray, ArrayError> {
    cs_couplings_perturbed(cfg, 0.0, 0.0)
}

/// Perturbed scheme: outer couplings `2/beta - 1/a + phi1`, center coupling
/// `(beta/a^2)(1 + phi0)`, everything then scaled by `alpha`. The
/// perturbations must be `O(a)` for the approximation property to survive;
/// that is the caller's contract.
pub fn cs_couplings_perturbed(
    cfg: &CouplingConfig,
    phi0: f64,
    phi1: f64,
) -> Result<DeltaArray, ArrayError> {
    let outer = cfg.alpha * (2.0 / cfg.beta - 1.0 / cfg.a + phi1);
    let center = cfg.alpha * (cfg.beta / (cfg.a * cfg.a)) * (1.0 + phi0);
    if outer == 0.0 || center == 0.0 {
        return Err(ArrayError::DegenerateCoupling {
            beta: cfg.beta,
            a: cfg.a,
        });
    }
    DeltaArray::new(
        vec![outer, center, outer],
        vec![cfg.y - cfg.a, cfg.y, cfg.y + cfg.a],
    )
}

/// The N x N Krein matrix `Gamma[j,j'] = delta_{jj'} / coupling_j +
/// G_{i kappa}(y_j - y_{j'})`, stored with the `1/(2 kappa)` prefactor
/// included.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub entries: Matrix,
    pub kappa: f64,
}

pub fn gamma_matrix(arr: &DeltaArray, s: SpectralPoint) -> GammaMatrix {
    let n = arr.len();
    let kappa = s.kappa();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut v = free_kernel_raw(kappa, arr.centers[i] - arr.centers[j]);
            if i == j {
                v += 1.0 / arr.couplings[i];
            }
            m.set(i, j, v);
        }
    }
    GammaMatrix { entries: m, kappa }
}

/// Relative singularity tolerance `1e-12 * max|Gamma|^N`, scaled so the test
/// stays meaningful when the couplings blow up like `1/a^2`.
pub(crate) fn gamma_det_tolerance(gm: &GammaMatrix) -> f64 {
    1e-12 * gm.entries.max_abs().powi(gm.entries.n as i32)
}

/// Inverse of the Krein matrix via LU with partial pivoting.
pub fn gamma_inverse(gm: &GammaMatrix) -> Result<GammaMatrix, ArrayError> {
    let lu = Lu::factor(&gm.entries);
    let det = lu.det();
    let tol = gamma_det_tolerance(gm);
    if det.abs() < tol {
        return Err(ArrayError::SingularGamma {
            det: det.abs(),
            tol,
        });
    }
    Ok(GammaMatrix {
        entries: lu.inverse(),
        kappa: gm.kappa,
    })
}

pub(crate) fn gamma_det(gm: &GammaMatrix) -> f64 {
    Lu::factor(&gm.entries).det()
}

/// Closed-form inverse of the Cheon-Shigehara 3x3 matrix, used as the
/// algebraic cross-check of the LU path. `uvw` are the scalars of the
/// balanced matrix; for the disbalanced triple pass the effective pair
/// `(u/alpha, v/alpha)` that the scaled couplings produce.
pub fn gamma_inverse_closed_form(uvw: Uvw, kappa: f64) -> Matrix {
    let Uvw { u, v, w } = uvw;
    let w2 = w * w;
    let denom = (w2 - 1.0 - u) * ((1.0 + u) * (1.0 + v) - w2 * (1.0 - v));
    let pref = 2.0 * kappa / denom;
    let m01 = -w * (w2 - 1.0 - u);
    let m00 = w2 - (1.0 + u) * (1.0 + v);
    let m02 = w2 * v;
    let m11 = (w2 + 1.0 + u) * (w2 - 1.0 - u);
    Matrix::from_rows(&[
        vec![pref * m00, pref * m01, pref * m02],
        vec![pref * m01, pref * m11, pref * m01],
        vec![pref * m02, pref * m01, pref * m00],
    ])
}

/// Effective `(u, v, w)` scalars of the Krein matrix built from the
/// `alpha`-scaled couplings: scaling every coupling by `alpha` divides the
/// diagonal corrections by `alpha`.
pub fn uvw_effective(cfg: &CouplingConfig, s: SpectralPoint) -> Result<Uvw, ArrayError> {
    let base = uvw(cfg, s)?;
    Ok(Uvw {
        u: base.u / cfg.alpha,
        v: base.v / cfg.alpha,
        w: base.w,
    })
}

/// Resolvent kernel of the delta array:
/// `G(x - x') - sum_{j,j'} [Gamma^{-1}]_{jj'} G(x - y_j) G(x' - y_{j'})`.
pub fn array_resolvent_kernel(
    arr: &DeltaArray,
    s: SpectralPoint,
    x: f64,
    xp: f64,
) -> Result<KernelValue, ArrayError> {
    let prepared = PreparedArrayKernel::new(arr, s)?;
    Ok(KernelValue {
        value: prepared.eval(x, xp),
        model_tag: ModelTag::DeltaArray,
    })
}

/// Array kernel with the Gamma inverse factored once, for bulk evaluation.
#[derive(Debug, Clone)]
pub struct PreparedArrayKernel {
    pub(crate) kappa: f64,
    pub(crate) centers: Vec<f64>,
    pub(crate) gamma_inv: Matrix,
}

impl PreparedArrayKernel {
    pub fn new(arr: &DeltaArray, s: SpectralPoint) -> Result<Self, ArrayError> {
        let kappa = s.kappa();
        if arr.is_empty() {
            return Ok(Self {
                kappa,
                centers: Vec::new(),
                gamma_inv: Matrix::zeros(0),
            });
        }
        let gi = gamma_inverse(&gamma_matrix(arr, s))?;
        Ok(Self {
            kappa,
            centers: arr.centers.clone(),
            gamma_inv: gi.entries,
        })
    }

    pub fn eval(&self, x: f64, xp: f64) -> f64 {
        let n = self.centers.len();
        // pair the off-diagonal terms so the sum is bit-identical under the
        // (x, x') swap even when the inverse entries are large
        let mut stack_x = [0.0f64; 8];
        let mut stack_xp = [0.0f64; 8];
        let (mut heap_x, mut heap_xp);
        let (gx, gxp): (&mut [f64], &mut [f64]) = if n <= 8 {
            (&mut stack_x[..n], &mut stack_xp[..n])
        } else {
            heap_x = vec![0.0; n];
            heap_xp = vec![0.0; n];
            (&mut heap_x, &mut heap_xp)
        };
        for j in 0..n {
            gx[j] = free_kernel_raw(self.kappa, x - self.centers[j]);
            gxp[j] = free_kernel_raw(self.kappa, xp - self.centers[j]);
        }
        let mut corr = 0.0;
        for j in 0..n {
            corr += self.gamma_inv.get(j, j) * gx[j] * gxp[j];
            for jp in (j + 1)..n {
                corr += self.gamma_inv.get(j, jp) * (gx[j] * gxp[jp] + gx[jp] * gxp[j]);
            }
        }
        free_kernel_raw(self.kappa, x - xp) - corr
    }
}

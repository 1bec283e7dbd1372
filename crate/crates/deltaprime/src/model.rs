//! One tagged union over every resolvent-kernel family in the crate, with a
//! prepared evaluator that factors the per-spectral-point work (Krein matrix
//! inversion, transfer-matrix propagation) out of the inner evaluation loop.

use serde::Serialize;
use thiserror::Error;

use crate::delta_arrays::{ArrayError, DeltaArray, PreparedArrayKernel};
use crate::kernels::{
    delta_prime_coefficient, dirichlet_kernel_raw, free_kernel_raw, signed_kernel_raw, KernelError,
    KernelValue, ModelTag, SpectralPoint,
};
use crate::potentials::ScaledPotential;
use crate::schrodinger::{discretize, DecayingSolutionPair, SchrodingerError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Schrodinger(#[from] SchrodingerError),
}

/// A resolvent-kernel family, evaluable at `(x, x')` once a spectral point
/// is chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum KernelModel {
    Free,
    DeltaPrime {
        beta: f64,
        y: f64,
    },
    DeltaArray(DeltaArray),
    Dirichlet {
        y: f64,
    },
    Potential {
        sp: ScaledPotential,
        cells_per_bump: usize,
    },
}

impl KernelModel {
    pub fn tag(&self) -> ModelTag {
        match self {
            Self::Free => ModelTag::Free,
            Self::DeltaPrime { .. } => ModelTag::DeltaPrime,
            Self::DeltaArray(_) => ModelTag::DeltaArray,
            Self::Dirichlet { .. } => ModelTag::Dirichlet,
            Self::Potential { .. } => ModelTag::Potential,
        }
    }

    /// Prepare the model at a spectral point for repeated evaluation.
    pub fn prepare(&self, s: SpectralPoint) -> Result<PreparedKernel, ModelError> {
        let kappa = s.kappa();
        let inner = match self {
            Self::Free => PreparedInner::Free,
            Self::DeltaPrime { beta, y } => PreparedInner::DeltaPrime {
                coef: delta_prime_coefficient(*beta, kappa)?,
                y: *y,
            },
            Self::DeltaArray(arr) => PreparedInner::Array(PreparedArrayKernel::new(arr, s)?),
            Self::Dirichlet { y } => PreparedInner::Dirichlet { y: *y },
            Self::Potential { sp, cells_per_bump } => {
                let pot = discretize(sp, *cells_per_bump);
                PreparedInner::Potential {
                    pair: Box::new(DecayingSolutionPair::build(&pot, s)?),
                    centers: sp.bump_centers(),
                }
            }
        };
        Ok(PreparedKernel {
            tag: self.tag(),
            kappa,
            inner,
        })
    }

    /// Single evaluation; prefer `prepare` for grids of points.
    pub fn evaluate(
        &self,
        s: SpectralPoint,
        x: f64,
        xp: f64,
    ) -> Result<KernelValue, ModelError> {
        Ok(self.prepare(s)?.evaluate(x, xp))
    }
}

#[derive(Debug, Clone)]
enum PreparedInner {
    Free,
    DeltaPrime { coef: f64, y: f64 },
    Array(PreparedArrayKernel),
    Dirichlet { y: f64 },
    Potential {
        pair: Box<DecayingSolutionPair>,
        centers: [f64; 3],
    },
}

/// Envelope data for the analytic truncation-tail bounds of the
/// Hilbert-Schmidt quadrature: the correction `K - G` of each model obeys
/// `|corr| <= exterior_coef * e^{-kappa(|x| + |x'|)}` once both coordinates
/// sit beyond `feature_radius`, and `|corr| <= strip_coef * e^{-kappa |x|}
/// e^{-kappa |x'|} * e^{kappa feature_radius}`-style bounds (folded into
/// `strip_coef`) when only one does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailInfo {
    pub exterior_coef: f64,
    pub strip_coef: f64,
    pub feature_radius: f64,
}

/// A kernel model bound to one spectral point.
#[derive(Debug, Clone)]
pub struct PreparedKernel {
    tag: ModelTag,
    kappa: f64,
    inner: PreparedInner,
}

impl PreparedKernel {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn eval(&self, x: f64, xp: f64) -> f64 {
        match &self.inner {
            PreparedInner::Free => free_kernel_raw(self.kappa, x - xp),
            PreparedInner::DeltaPrime { coef, y } => {
                free_kernel_raw(self.kappa, x - xp)
                    + coef
                        * signed_kernel_raw(self.kappa, x - y)
                        * signed_kernel_raw(self.kappa, xp - y)
            }
            PreparedInner::Array(p) => p.eval(x, xp),
            PreparedInner::Dirichlet { y } => dirichlet_kernel_raw(self.kappa, x - y, xp - y),
            PreparedInner::Potential { pair, .. } => pair.kernel(x, xp),
        }
    }

    pub fn evaluate(&self, x: f64, xp: f64) -> KernelValue {
        KernelValue {
            value: self.eval(x, xp),
            model_tag: self.tag,
        }
    }

    /// Abscissas where the kernel (or its derivative) is discontinuous;
    /// quadrature panels split here.
    pub fn feature_points(&self) -> Vec<f64> {
        match &self.inner {
            PreparedInner::Free => Vec::new(),
            PreparedInner::DeltaPrime { y, .. } | PreparedInner::Dirichlet { y } => vec![*y],
            PreparedInner::Array(p) => p.centers.clone(),
            PreparedInner::Potential { pair, centers } => {
                let (lo, hi) = pair.support_bounds();
                let mut f = vec![lo, hi];
                f.extend_from_slice(centers);
                f
            }
        }
    }

    /// Envelope coefficients for the tail of `K - G`.
    pub fn tail_info(&self) -> TailInfo {
        let kappa = self.kappa;
        match &self.inner {
            PreparedInner::Free => TailInfo {
                exterior_coef: 0.0,
                strip_coef: 0.0,
                feature_radius: 0.0,
            },
            PreparedInner::DeltaPrime { coef, y } => {
                // |corr| = |coef| e^{-kappa(|x-y|+|x'-y|)} / (4 kappa^2) exactly
                let m = coef.abs() / (4.0 * kappa * kappa) * (2.0 * kappa * y.abs()).exp();
                TailInfo {
                    exterior_coef: m,
                    strip_coef: m,
                    feature_radius: 0.0,
                }
            }
            PreparedInner::Dirichlet { y } => {
                let m = (2.0 * kappa * y.abs()).exp() / (2.0 * kappa);
                TailInfo {
                    exterior_coef: m,
                    strip_coef: m,
                    feature_radius: 0.0,
                }
            }
            PreparedInner::Array(p) => {
                let n = p.centers.len();
                if n == 0 {
                    return TailInfo {
                        exterior_coef: 0.0,
                        strip_coef: 0.0,
                        feature_radius: 0.0,
                    };
                }
                let r = p.centers.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                // sandwich values t_s^T Gamma^{-1} t_{s'} with
                // t_s = (e^{s kappa y_j})_j over the four side choices
                let t_plus: Vec<f64> = p.centers.iter().map(|c| (kappa * c).exp()).collect();
                let t_minus: Vec<f64> = p.centers.iter().map(|c| (-kappa * c).exp()).collect();
                let quad = |a: &[f64], b: &[f64]| -> f64 {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            acc += a[i] * p.gamma_inv.get(i, j) * b[j];
                        }
                    }
                    acc.abs()
                };
                let m_ext = quad(&t_plus, &t_plus)
                    .max(quad(&t_plus, &t_minus))
                    .max(quad(&t_minus, &t_minus))
                    / (4.0 * kappa * kappa);
                // entrywise bound for the strips, no cancellation credit
                let mut p_strip = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        p_strip += (kappa * (p.centers[i].abs() + p.centers[j].abs())).exp()
                            * p.gamma_inv.get(i, j).abs();
                    }
                }
                TailInfo {
                    exterior_coef: m_ext,
                    strip_coef: p_strip / (4.0 * kappa * kappa),
                    feature_radius: r,
                }
            }
            PreparedInner::Potential { pair, .. } => {
                let (b0, bm) = pair.support_bounds();
                let r = b0.abs().max(bm.abs());
                let (a_min, b_min, l_min) = pair.exterior_minus_coefs();
                let (a_plu, b_plu, _l_plu) = pair.exterior_plus_coefs();
                let w = pair.wronskian;
                // right-right, left-left and cross-region reflection sizes
                let m_rr = (b_min / (2.0 * kappa * a_min)).abs() * (2.0 * kappa * bm).exp();
                let m_ll = (b_plu / (2.0 * kappa * a_plu)).abs() * (-2.0 * kappa * b0).exp();
                let a_scaled = a_min * l_min.exp();
                let m_cross = ((kappa * (bm - b0)).exp() / (2.0 * kappa * a_scaled)
                    - 1.0 / (2.0 * kappa))
                    .abs();
                let m_ext = m_rr.max(m_ll).max(m_cross);
                // strips: one coordinate inside the support
                let gk = (2.0 * kappa * r).exp() / (2.0 * kappa);
                let strip_right =
                    pair.interior_amplitude(true) * (kappa * (bm + r)).exp() / w.abs() + gk;
                let strip_left =
                    pair.interior_amplitude(false) * (kappa * (r - b0)).exp() / w.abs() + gk;
                TailInfo {
                    exterior_coef: m_ext,
                    strip_coef: strip_right.max(strip_left),
                    feature_radius: r,
                }
            }
        }
    }
}

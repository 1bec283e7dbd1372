//! Bound states of the Cheon-Shigehara triple from its secular equations,
//! plus the operational spectral-safety threshold in the spacing.
//!
//! The negative spectrum of the array sits at the zeros of `det Gamma(i
//! kappa)`, which for the triple factorizes into two scalar equations. With
//! the couplings scaled by `alpha` the diagonal corrections are divided by
//! `alpha`, so the branch residuals use `(u/alpha, v/alpha)`.

use serde::Serialize;

use crate::delta_arrays::{
    cs_couplings, gamma_det, gamma_matrix, uvw_effective, ArrayError, CouplingConfig,
};
use crate::kernels::SpectralPoint;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error("no spacing threshold found: {0}")]
    ThresholdNotFound(String),
}

/// Which secular equation produced a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SecularBranch {
    First,
    Second,
}

/// A negative-energy eigenvalue of the array, located at `kappa_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    pub kappa_star: f64,
    pub energy: f64,
    pub branch: SecularBranch,
}

const KAPPA_MIN: f64 = 1e-3;
const GRID_POINTS: usize = 512;
const BISECT_REL_TOL: f64 = 1e-12;

/// Residuals `LHS - RHS` of the two secular equations at `kappa`.
///
/// Branch one is `e^{-2 kappa a} = 1 + u/alpha`, branch two multiplies the
/// right-hand side by `(1 + v/alpha)/(1 - v/alpha)`.
pub fn secular_residuals(cfg: &CouplingConfig, s: SpectralPoint) -> Result<(f64, f64), ArrayError> {
    let t = uvw_effective(cfg, s)?;
    let lhs = (-2.0 * s.kappa() * cfg.a).exp();
    let r1 = lhs - (1.0 + t.u);
    let r2 = lhs - (1.0 + t.u) * (1.0 + t.v) / (1.0 - t.v);
    Ok((r1, r2))
}

// Pole-free forms sharing the zeros of the residuals, used for bracketing.
fn branch_values(cfg: &CouplingConfig, kappa: f64) -> Result<(f64, f64), ArrayError> {
    let t = crate::delta_arrays::uvw_raw(cfg.beta, cfg.a, kappa)?;
    let (u, v) = (t.u / cfg.alpha, t.v / cfg.alpha);
    let lhs = (-2.0 * kappa * cfg.a).exp();
    let f1 = lhs - (1.0 + u);
    let f2 = lhs * (1.0 - v) - (1.0 + u) * (1.0 + v);
    Ok((f1, f2))
}

fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= BISECT_REL_TOL * mid.abs() {
            return mid;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All roots of `det Gamma(i kappa) = 0` in `(kappa_min, kappa_max]`, found
/// by sign-change bracketing on a log-spaced grid followed by bisection,
/// one scan per secular branch. Results are sorted by `kappa_star`.
pub fn find_bound_states(
    cfg: &CouplingConfig,
    kappa_max: f64,
) -> Result<Vec<BoundState>, ArrayError> {
    if !(kappa_max.is_finite() && kappa_max > KAPPA_MIN) {
        return Err(ArrayError::InvalidConfig(format!(
            "kappa_max = {kappa_max} must exceed {KAPPA_MIN}"
        )));
    }
    // the spacing singularity 2a = beta depends on the config alone; reject
    // it once so the per-kappa residuals below cannot fail
    crate::delta_arrays::uvw_raw(cfg.beta, cfg.a, 1.0)?;
    let log_lo = KAPPA_MIN.ln();
    let log_hi = kappa_max.ln();
    let mut grid = Vec::with_capacity(GRID_POINTS);
    for i in 0..GRID_POINTS {
        let t = i as f64 / (GRID_POINTS - 1) as f64;
        grid.push((log_lo + t * (log_hi - log_lo)).exp());
    }
    let mut out: Vec<BoundState> = Vec::new();
    for branch in [SecularBranch::First, SecularBranch::Second] {
        let eval = |k: f64| -> f64 {
            let (f1, f2) = branch_values(cfg, k).expect("pole-free residual");
            match branch {
                SecularBranch::First => f1,
                SecularBranch::Second => f2,
            }
        };
        let mut prev_k = grid[0];
        let mut prev_f = eval(prev_k);
        for &k in &grid[1..] {
            let f = eval(k);
            if prev_f == 0.0 || prev_f.signum() != f.signum() {
                let root = bisect(prev_k, k, eval);
                out.push(BoundState {
                    kappa_star: root,
                    energy: -root * root,
                    branch,
                });
            }
            prev_k = k;
            prev_f = f;
        }
    }
    out.sort_by(|a, b| a.kappa_star.partial_cmp(&b.kappa_star).unwrap());
    out.dedup_by(|a, b| (a.kappa_star - b.kappa_star).abs() <= 1e-9 * b.kappa_star);
    Ok(out)
}

/// Residual of `det Gamma(i kappa)` at a candidate root, relative to the
/// scale `max|Gamma|^3`; used by callers to validate reported roots.
pub fn det_gamma_at(cfg: &CouplingConfig, kappa: f64) -> Result<(f64, f64), ArrayError> {
    let arr = cs_couplings(cfg)?;
    let gm = gamma_matrix(&arr, SpectralPoint::new(kappa).expect("kappa > 0"));
    let det = gamma_det(&gm);
    let scale = gm.entries.max_abs().powi(3);
    Ok((det, scale))
}

/// Largest spacing `a0` on the geometric grid `0.5 * 2^{-j}` such that no
/// bound state with `kappa_star >= kappa` exists for any grid spacing
/// `a <= a0`. For `alpha = 1` this requires `kappa > -2/beta`, the limiting
/// bound-state position.
pub fn a0_threshold(s: SpectralPoint, beta: f64, alpha: f64) -> Result<f64, SpectraError> {
    let kappa = s.kappa();
    if alpha == 1.0 && kappa <= -2.0 / beta {
        return Err(SpectraError::ThresholdNotFound(format!(
            "kappa = {kappa} does not exceed the limiting root -2/beta = {}",
            -2.0 / beta
        )));
    }
    const CAP: f64 = 0.5;
    const LEVELS: usize = 16;
    let kappa_hi = (2.0 * kappa).max(6.0 / beta.abs()).max(8.0);
    let mut best: Option<f64> = None;
    // ascend from the smallest grid spacing; the property must hold on the
    // whole prefix below the reported threshold
    for j in (0..LEVELS).rev() {
        let a = CAP * 0.5f64.powi(j as i32);
        let cfg = CouplingConfig::new(beta, a, alpha, 0.0)
            .map_err(SpectraError::Array)?;
        let roots = match find_bound_states(&cfg, kappa_hi) {
            Ok(roots) => roots,
            // the degenerate spacing a = beta/2 (outer couplings vanish)
            // leaves a single repulsive center for beta > 0: no roots
            Err(ArrayError::SingularU { .. }) | Err(ArrayError::DegenerateCoupling { .. })
                if beta > 0.0 =>
            {
                Vec::new()
            }
            Err(e) => return Err(SpectraError::Array(e)),
        };
        if roots.iter().any(|r| r.kappa_star >= kappa) {
            break;
        }
        best = Some(a);
    }
    best.ok_or_else(|| {
        SpectraError::ThresholdNotFound(format!(
            "even the smallest grid spacing has a bound state above kappa = {kappa}"
        ))
    })
}

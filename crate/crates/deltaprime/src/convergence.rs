//! Hilbert-Schmidt and operator-norm distances between resolvent kernels,
//! and the convergence studies tying the whole crate together: triple-delta
//! to delta-prime, disbalanced triple to the Dirichlet-decoupled line, and
//! the scaled-potential chains.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::delta_arrays::{cs_couplings, gamma_inverse, gamma_matrix, CouplingConfig};
use crate::kernels::SpectralPoint;
use crate::linalg::{sym3_spectral_norm, LinalgError, Matrix};
use crate::model::{KernelModel, ModelError, PreparedKernel};
use crate::potentials::{tau, tau_alpha, PotentialShape, ScaledPotential};
use crate::quadrature::panel_gauss_nodes;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),
}

/// Least-squares slope of `ln(values)` against `ln(params)`.
pub fn fit_loglog_slope(params: &[f64], values: &[f64]) -> f64 {
    assert_eq!(params.len(), values.len());
    assert!(params.len() >= 2);
    let n = params.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (p, v) in params.iter().zip(values) {
        let (x, y) = (p.ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn grid_nodes(
    a: &PreparedKernel,
    b: &PreparedKernel,
    l: f64,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut features = a.feature_points();
    features.extend(b.feature_points());
    panel_gauss_nodes(-l, l, &features, n.max(200))
}

/// Closed-form bound on the squared Hilbert-Schmidt mass of the difference
/// kernel outside the box `[-L, L]^2`, built from the models' exponential
/// envelopes. Scales as `e^{-2 kappa L}`.
fn tail_bound_sq(a: &PreparedKernel, b: &PreparedKernel, l: f64) -> f64 {
    let kappa = a.kappa();
    let (ta, tb) = (a.tail_info(), b.tail_info());
    let i_full = 1.0 / kappa;
    // exterior mass written without cancellation so it never rounds to zero
    let i_out = (-2.0 * kappa * l).exp() / kappa;
    let i_in = i_full - i_out;
    // both coordinates beyond the feature radius
    let m = ta.exterior_coef + tb.exterior_coef;
    let e2 = i_out * (i_full + i_in);
    // strips where one coordinate sits among the features
    let r = ta.feature_radius.max(tb.feature_radius);
    let p = ta.strip_coef + tb.strip_coef;
    m * m * e2 + p * p * 4.0 * r * i_out
}

/// Hilbert-Schmidt distance between two kernels at one spectral point, via
/// 2D composite Gauss quadrature of `|kA - kB|^2` over `[-L, L]^2` with
/// panels split at the kernels' feature lines. Returns the distance and the
/// (squared-scale) analytic bound on the truncated exterior mass.
pub fn hs_distance(
    ka: &KernelModel,
    kb: &KernelModel,
    s: SpectralPoint,
    l: f64,
    n: usize,
) -> Result<(f64, f64), ConvergenceError> {
    let pa = ka.prepare(s)?;
    let pb = kb.prepare(s)?;
    Ok(hs_distance_prepared(&pa, &pb, l, n))
}

pub(crate) fn hs_distance_prepared(
    pa: &PreparedKernel,
    pb: &PreparedKernel,
    l: f64,
    n: usize,
) -> (f64, f64) {
    let (xs, ws) = grid_nodes(pa, pb, l, n);
    let m = xs.len();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..m {
                let d = pa.eval(xs[i], xs[j]) - pb.eval(xs[i], xs[j]);
                acc += ws[j] * d * d;
            }
            ws[i] * acc
        })
        .collect();
    let total: f64 = rows.iter().sum();
    (total.sqrt(), tail_bound_sq(pa, pb, l))
}

/// Largest singular value of the discretized difference kernel, by power
/// iteration on the weighted grid matrix. A secondary check: the
/// Hilbert-Schmidt norm always dominates it.
pub fn op_norm_estimate(
    ka: &KernelModel,
    kb: &KernelModel,
    s: SpectralPoint,
    l: f64,
    n: usize,
) -> Result<f64, ConvergenceError> {
    let pa = ka.prepare(s)?;
    let pb = kb.prepare(s)?;
    op_norm_prepared(&pa, &pb, l, n).map_err(ConvergenceError::Linalg)
}

pub(crate) fn op_norm_prepared(
    pa: &PreparedKernel,
    pb: &PreparedKernel,
    l: f64,
    n: usize,
) -> Result<f64, LinalgError> {
    let (xs, ws) = grid_nodes(pa, pb, l, n);
    let m = xs.len();
    let sq: Vec<f64> = ws.iter().map(|w| w.sqrt()).collect();
    let mut mat = Matrix::zeros(m);
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| sq[i] * (pa.eval(xs[i], xs[j]) - pb.eval(xs[i], xs[j])) * sq[j])
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            mat.set(i, j, v);
        }
    }
    crate::linalg::power_iteration_sym(&mat, 1e-6, 10_000)
}

/// Measured resolvent-norm constant: `max over the grid of a^p ||Gamma^{-1}||`
/// with `p = 2` for the balanced scheme and `p = 1` under disbalance.
pub fn measure_c_gamma(
    beta: f64,
    alpha: f64,
    s: SpectralPoint,
    a_grid: &[f64],
) -> Result<f64, ConvergenceError> {
    let p = if alpha == 1.0 { 2 } else { 1 };
    let mut best = 0.0f64;
    for &a in a_grid {
        let cfg = CouplingConfig::new(beta, a, alpha, 0.0)
            .map_err(|e| ConvergenceError::InvalidConfig(e.to_string()))?;
        let arr = cs_couplings(&cfg).map_err(ModelError::Array)?;
        let gi = gamma_inverse(&gamma_matrix(&arr, s)).map_err(ModelError::Array)?;
        best = best.max(a.powi(p) * sym3_spectral_norm(&gi.entries));
    }
    Ok(best)
}

/// The five shipped convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StudyId {
    #[serde(rename = "triple-to-deltaprime")]
    TripleToDeltaPrime,
    #[serde(rename = "alpha-to-dirichlet")]
    AlphaToDirichlet,
    #[serde(rename = "potential-to-triple")]
    PotentialToTriple,
    #[serde(rename = "potential-to-deltaprime")]
    PotentialToDeltaPrime,
    #[serde(rename = "potential-to-dirichlet")]
    PotentialToDirichlet,
}

impl StudyId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "triple-to-deltaprime" => Some(Self::TripleToDeltaPrime),
            "alpha-to-dirichlet" => Some(Self::AlphaToDirichlet),
            "potential-to-triple" => Some(Self::PotentialToTriple),
            "potential-to-deltaprime" => Some(Self::PotentialToDeltaPrime),
            "potential-to-dirichlet" => Some(Self::PotentialToDirichlet),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TripleToDeltaPrime => "triple-to-deltaprime",
            Self::AlphaToDirichlet => "alpha-to-dirichlet",
            Self::PotentialToTriple => "potential-to-triple",
            Self::PotentialToDeltaPrime => "potential-to-deltaprime",
            Self::PotentialToDirichlet => "potential-to-dirichlet",
        }
    }

    pub fn is_potential_study(&self) -> bool {
        matches!(
            self,
            Self::PotentialToTriple | Self::PotentialToDeltaPrime | Self::PotentialToDirichlet
        )
    }
}

/// Everything a study run needs; serialized verbatim into the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub study: StudyId,
    pub beta: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub y: f64,
    /// spacings for the delta-family studies, coarse to fine
    pub a_grid: Vec<f64>,
    /// squeeze widths for the potential studies, coarse to fine
    pub eps_grid: Vec<f64>,
    /// spacing rule `a = eps^rule_exponent` for the potential studies
    pub rule_exponent: Option<f64>,
    /// shape specs, e.g. `box:h=0.5`, for the three bumps
    pub shapes: Vec<String>,
    pub cells_per_bump: usize,
    /// quadrature box half-width; derived from kappa when absent
    pub box_halfwidth: Option<f64>,
    /// quadrature nodes per axis
    pub nodes_per_axis: usize,
}

impl StudyConfig {
    pub fn new(study: StudyId, beta: f64, kappa: f64) -> Self {
        Self {
            study,
            beta,
            alpha: 1.0,
            kappa,
            y: 0.0,
            a_grid: (0..5).map(|j| 0.1 * 0.5f64.powi(j)).collect(),
            eps_grid: vec![1e-4, 1e-6, 1e-8],
            rule_exponent: Some(1.0 / 16.0),
            shapes: vec!["box:h=0.5".into()],
            cells_per_bump: 8,
            box_halfwidth: None,
            nodes_per_axis: 420,
        }
    }

    fn shapes_parsed(&self) -> Result<[PotentialShape; 3], ConvergenceError> {
        let bad = |e: crate::potentials::PotentialError| {
            ConvergenceError::InvalidConfig(e.to_string())
        };
        match self.shapes.len() {
            1 => {
                let s = PotentialShape::parse(&self.shapes[0]).map_err(bad)?;
                Ok([s.clone(), s.clone(), s])
            }
            3 => Ok([
                PotentialShape::parse(&self.shapes[0]).map_err(bad)?,
                PotentialShape::parse(&self.shapes[1]).map_err(bad)?,
                PotentialShape::parse(&self.shapes[2]).map_err(bad)?,
            ]),
            n => Err(ConvergenceError::InvalidConfig(format!(
                "need 1 or 3 shape specs, got {n}"
            ))),
        }
    }
}

/// One measured row of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub param: f64,
    pub hs_distance: f64,
    pub op_norm: f64,
    pub tail_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub study_id: StudyId,
    pub fitted_rate: f64,
    pub rows: Vec<StudyRow>,
    pub config: StudyConfig,
    /// measured C_Gamma constant for the potential studies
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_gamma: Option<f64>,
}

fn check_regime(cfg: &StudyConfig) -> Result<(), ConvergenceError> {
    let (kappa, beta, alpha) = (cfg.kappa, cfg.beta, cfg.alpha);
    if !(beta.is_finite() && beta != 0.0) {
        return Err(ConvergenceError::RegimeViolation(format!(
            "beta must be nonzero finite, got {beta}"
        )));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(ConvergenceError::RegimeViolation(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    match cfg.study {
        StudyId::TripleToDeltaPrime => {
            if (2.0 + beta * kappa).abs() < 1e-9 * (1.0 + (beta * kappa).abs()) {
                return Err(ConvergenceError::RegimeViolation(format!(
                    "kappa = {kappa} is the delta-prime resonance -2/beta for beta = {beta}"
                )));
            }
        }
        StudyId::AlphaToDirichlet => {
            if alpha == 0.0 || alpha == 1.0 {
                return Err(ConvergenceError::RegimeViolation(format!(
                    "alpha must lie outside {{0, 1}}, got {alpha}"
                )));
            }
        }
        StudyId::PotentialToTriple | StudyId::PotentialToDeltaPrime => {
            let need = (-2.0 / beta).max(1.0).max(2.0 / beta.abs());
            if kappa <= need {
                return Err(ConvergenceError::RegimeViolation(format!(
                    "kappa = {kappa} must exceed max(-2/beta, 1, 2/|beta|) = {need}"
                )));
            }
        }
        StudyId::PotentialToDirichlet => {
            if kappa <= 1.0 {
                return Err(ConvergenceError::RegimeViolation(format!(
                    "kappa = {kappa} must exceed 1"
                )));
            }
            if alpha == 0.0 || alpha == 1.0 {
                return Err(ConvergenceError::RegimeViolation(format!(
                    "alpha must lie outside {{0, 1}}, got {alpha}"
                )));
            }
        }
    }
    Ok(())
}

/// Run a convergence study: one row per grid parameter (independent rows
/// run in parallel), rate fitted on the finest half of the grid.
pub fn study(cfg: &StudyConfig) -> Result<ConvergenceReport, ConvergenceError> {
    check_regime(cfg)?;
    let s = SpectralPoint::new(cfg.kappa)
        .map_err(|e| ConvergenceError::InvalidConfig(e.to_string()))?;
    let n = cfg.nodes_per_axis;

    let rows: Vec<StudyRow> = if cfg.study.is_potential_study() {
        let shapes = cfg.shapes_parsed()?;
        let exponent = cfg.rule_exponent.ok_or_else(|| {
            ConvergenceError::InvalidConfig("potential studies need a spacing rule".into())
        })?;
        let mut eps_grid = cfg.eps_grid.clone();
        eps_grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if eps_grid.is_empty() {
            return Err(ConvergenceError::InvalidConfig("empty eps grid".into()));
        }
        let a_of = |eps: f64| eps.powf(exponent);
        // one resolvent constant for the whole study, measured on its own
        // spacing grid
        let a_values: Vec<f64> = eps_grid.iter().map(|&e| a_of(e)).collect();
        let c_gamma = measure_c_gamma(cfg.beta, cfg.alpha, s, &a_values)?;
        let rows: Result<Vec<StudyRow>, ConvergenceError> = eps_grid
            .par_iter()
            .map(|&eps| {
                let a = a_of(eps);
                let ccfg = CouplingConfig::new(cfg.beta, a, cfg.alpha, cfg.y)
                    .map_err(|e| ConvergenceError::InvalidConfig(e.to_string()))?;
                let sp = ScaledPotential::new(ccfg, eps, shapes.clone())
                    .map_err(|e| ConvergenceError::InvalidConfig(e.to_string()))?;
                let pot_model = KernelModel::Potential {
                    sp,
                    cells_per_bump: cfg.cells_per_bump,
                };
                let target = match cfg.study {
                    StudyId::PotentialToTriple => KernelModel::DeltaArray(
                        cs_couplings(&ccfg).map_err(ModelError::Array)?,
                    ),
                    StudyId::PotentialToDeltaPrime => KernelModel::DeltaPrime {
                        beta: cfg.beta,
                        y: cfg.y,
                    },
                    StudyId::PotentialToDirichlet => KernelModel::Dirichlet { y: cfg.y },
                    _ => unreachable!(),
                };
                let l = cfg
                    .box_halfwidth
                    .unwrap_or_else(|| default_halfwidth(cfg.kappa, a, eps, cfg.y));
                let pa = pot_model.prepare(s)?;
                let pb = target.prepare(s)?;
                let (hs, tail) = hs_distance_prepared(&pa, &pb, l, n);
                let op = op_norm_prepared(&pa, &pb, l, n)?;
                let t = if cfg.alpha == 1.0 {
                    tau(eps, a, cfg.beta, &shapes, c_gamma)
                } else {
                    tau_alpha(eps, a, cfg.beta, &shapes, c_gamma)
                };
                Ok(StudyRow {
                    param: eps,
                    hs_distance: hs,
                    op_norm: op,
                    tail_bound: tail,
                    tau: Some(t),
                })
            })
            .collect();
        let mut rows = rows?;
        rows.sort_by(|a, b| b.param.partial_cmp(&a.param).unwrap());
        return assemble(cfg, rows, Some(c_gamma));
    } else {
        let mut a_grid = cfg.a_grid.clone();
        a_grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if a_grid.is_empty() {
            return Err(ConvergenceError::InvalidConfig("empty a grid".into()));
        }
        let rows: Result<Vec<StudyRow>, ConvergenceError> = a_grid
            .par_iter()
            .map(|&a| {
                let ccfg = CouplingConfig::new(cfg.beta, a, cfg.alpha, cfg.y)
                    .map_err(|e| ConvergenceError::InvalidConfig(e.to_string()))?;
                let arr = cs_couplings(&ccfg).map_err(ModelError::Array)?;
                let model = KernelModel::DeltaArray(arr);
                let target = match cfg.study {
                    StudyId::TripleToDeltaPrime => KernelModel::DeltaPrime {
                        beta: cfg.beta,
                        y: cfg.y,
                    },
                    StudyId::AlphaToDirichlet => KernelModel::Dirichlet { y: cfg.y },
                    _ => unreachable!(),
                };
                let l = cfg
                    .box_halfwidth
                    .unwrap_or_else(|| default_halfwidth(cfg.kappa, a, 0.0, cfg.y));
                let pa = model.prepare(s)?;
                let pb = target.prepare(s)?;
                let (hs, tail) = hs_distance_prepared(&pa, &pb, l, n);
                let op = op_norm_prepared(&pa, &pb, l, n)?;
                Ok(StudyRow {
                    param: a,
                    hs_distance: hs,
                    op_norm: op,
                    tail_bound: tail,
                    tau: None,
                })
            })
            .collect();
        let mut rows = rows?;
        rows.sort_by(|a, b| b.param.partial_cmp(&a.param).unwrap());
        rows
    };
    assemble(cfg, rows, None)
}

/// Quadrature half-width: deep enough into the exponential tails that the
/// truncated mass is negligible against every acceptance threshold, and wide
/// enough to contain all interaction features.
pub fn default_halfwidth(kappa: f64, a: f64, eps: f64, y: f64) -> f64 {
    (32.0 / kappa).max(4.0 * a + 4.0 * eps) + y.abs()
}

fn assemble(
    cfg: &StudyConfig,
    rows: Vec<StudyRow>,
    c_gamma: Option<f64>,
) -> Result<ConvergenceReport, ConvergenceError> {
    let k = rows.len().div_ceil(2).max(2).min(rows.len());
    let fine = &rows[rows.len() - k..];
    let params: Vec<f64> = fine.iter().map(|r| r.param).collect();
    let dists: Vec<f64> = fine.iter().map(|r| r.hs_distance).collect();
    let fitted_rate = if params.len() >= 2 {
        fit_loglog_slope(&params, &dists)
    } else {
        f64::NAN
    };
    Ok(ConvergenceReport {
        study_id: cfg.study,
        fitted_rate,
        rows,
        config: cfg.clone(),
        c_gamma,
    })
}

/// 17-significant-digit float formatting: exact round trip for binary64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ConvergenceReport {
    /// CSV rows `param,hs_distance,op_norm,tail_bound`, plus a `tau` column
    /// for the potential studies. Deterministic: no timestamps, fixed float
    /// formatting.
    pub fn to_csv(&self) -> String {
        let with_tau = self.rows.iter().any(|r| r.tau.is_some());
        let mut out = String::from(if with_tau {
            "param,hs_distance,op_norm,tail_bound,tau\n"
        } else {
            "param,hs_distance,op_norm,tail_bound\n"
        });
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}",
                format_float(r.param),
                format_float(r.hs_distance),
                format_float(r.op_norm),
                format_float(r.tail_bound)
            ));
            if let Some(t) = r.tau {
                out.push_str(&format!(",{}", format_float(t)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

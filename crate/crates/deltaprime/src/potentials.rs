//! The scaled three-bump potential family, its admissibility moments, the
//! constants `C(a)`, `tau`, `tau_alpha`, and quadrature realizations of the
//! Sobolev-norm estimates that control the potential approximation.

use serde::Serialize;
use thiserror::Error;

use crate::delta_arrays::CouplingConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("shape mass {mass} deviates from 1 beyond 1e-10")]
    NormalizationFailure { mass: f64 },
    #[error("grid too coarse: {samples} samples inside the scaled support, need at least 32")]
    GridTooCoarse { samples: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

/// gamma(3/4), used by the Gaussian sqrt-moment closed form.
const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_177_6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ShapeId {
    /// height `1/(2h)` on `[-h, h]`
    Box { h: f64 },
    /// normal density with width `sigma`
    Gaussian { sigma: f64 },
    /// unit-mass hat on `[-h, h]`
    Triangle { h: f64 },
    /// linear interpolation of caller samples
    Custom,
}

/// A unit-mass bump with its admissibility moments precomputed:
/// `mass = 1`, finite `sqrt_moment = int |x|^{1/2} |V|` and finite L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialShape {
    pub id: ShapeId,
    pub mass: f64,
    pub sqrt_moment: f64,
    pub l2_norm: f64,
    support_radius: f64,
    #[serde(skip)]
    samples: Option<(Vec<f64>, Vec<f64>)>,
}

impl PotentialShape {
    pub fn make_box(h: f64) -> Result<Self, PotentialError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(PotentialError::InvalidShape(format!("box half-width {h}")));
        }
        Ok(Self {
            id: ShapeId::Box { h },
            mass: 1.0,
            sqrt_moment: 2.0 / 3.0 * h.sqrt(),
            l2_norm: (1.0 / (2.0 * h)).sqrt(),
            support_radius: h,
            samples: None,
        })
    }

    pub fn make_gaussian(sigma: f64) -> Result<Self, PotentialError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(PotentialError::InvalidShape(format!("gaussian sigma {sigma}")));
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        Ok(Self {
            id: ShapeId::Gaussian { sigma },
            mass: 1.0,
            sqrt_moment: 2.0f64.powf(0.25) * GAMMA_THREE_QUARTERS / sqrt_pi * sigma.sqrt(),
            l2_norm: (1.0 / (2.0 * sigma * sqrt_pi)).sqrt(),
            // evaluation is exact everywhere; discretization truncates here,
            // leaving tail mass below 1e-8
            support_radius: 6.0 * sigma,
            samples: None,
        })
    }

    pub fn make_triangle(h: f64) -> Result<Self, PotentialError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(PotentialError::InvalidShape(format!("triangle half-width {h}")));
        }
        Ok(Self {
            id: ShapeId::Triangle { h },
            mass: 1.0,
            sqrt_moment: 8.0 / 15.0 * h.sqrt(),
            l2_norm: (2.0 / (3.0 * h)).sqrt(),
            support_radius: h,
            samples: None,
        })
    }

    /// Shape from samples on a strictly increasing grid, linearly
    /// interpolated; the moments come from trapezoid quadrature of the
    /// samples, and the mass must be 1 to within 1e-10.
    pub fn make_custom(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self, PotentialError> {
        if xs.len() != vs.len() || xs.len() < 2 || xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(PotentialError::InvalidShape(
                "custom shape needs equal-length samples on an increasing grid".into(),
            ));
        }
        let mut mass = 0.0;
        let mut sqrt_moment = 0.0;
        let mut l2_sq = 0.0;
        for i in 0..xs.len() - 1 {
            let h = xs[i + 1] - xs[i];
            mass += 0.5 * h * (vs[i] + vs[i + 1]);
            sqrt_moment += 0.5
                * h
                * (xs[i].abs().sqrt() * vs[i].abs() + xs[i + 1].abs().sqrt() * vs[i + 1].abs());
            l2_sq += 0.5 * h * (vs[i] * vs[i] + vs[i + 1] * vs[i + 1]);
        }
        if (mass - 1.0).abs() > 1e-10 {
            return Err(PotentialError::NormalizationFailure { mass });
        }
        let support_radius = xs[0].abs().max(xs[xs.len() - 1].abs());
        Ok(Self {
            id: ShapeId::Custom,
            mass,
            sqrt_moment,
            l2_norm: l2_sq.sqrt(),
            support_radius,
            samples: Some((xs, vs)),
        })
    }

    /// Parse a CLI shape spec: `box:h=<f>`, `gauss:sigma=<f>`,
    /// `triangle:h=<f>`.
    pub fn parse(spec: &str) -> Result<Self, PotentialError> {
        let bad = || PotentialError::InvalidShape(format!("cannot parse shape spec {spec:?}"));
        let (name, arg) = spec.split_once(':').ok_or_else(bad)?;
        let (key, val) = arg.split_once('=').ok_or_else(bad)?;
        let v: f64 = val.parse().map_err(|_| bad())?;
        match (name, key) {
            ("box", "h") => Self::make_box(v),
            ("gauss", "sigma") => Self::make_gaussian(v),
            ("triangle", "h") => Self::make_triangle(v),
            _ => Err(bad()),
        }
    }

    /// Pointwise value of the unit-mass bump.
    pub fn evaluate(&self, x: f64) -> f64 {
        match &self.id {
            ShapeId::Box { h } => {
                if x.abs() <= *h {
                    1.0 / (2.0 * h)
                } else {
                    0.0
                }
            }
            ShapeId::Gaussian { sigma } => {
                (-x * x / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            ShapeId::Triangle { h } => {
                if x.abs() <= *h {
                    (h - x.abs()) / (h * h)
                } else {
                    0.0
                }
            }
            ShapeId::Custom => {
                let (xs, vs) = self.samples.as_ref().expect("custom shape has samples");
                if x <= xs[0] || x >= xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&t| t <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                vs[i] * (1.0 - t) + vs[i + 1] * t
            }
        }
    }

    /// Radius beyond which the bump is zero (or negligible, for Gaussians).
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// The three-bump family: center bump weighted `beta/(eps a^2)`, outer bumps
/// at `y -+ a` weighted `2/beta - 1/a`, all scaled by `alpha` and squeezed
/// to width `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledPotential {
    pub cfg: CouplingConfig,
    pub epsilon: f64,
    pub shapes: [PotentialShape; 3],
}

impl ScaledPotential {
    pub fn new(
        cfg: CouplingConfig,
        epsilon: f64,
        shapes: [PotentialShape; 3],
    ) -> Result<Self, PotentialError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(PotentialError::InvalidShape(format!("epsilon = {epsilon}")));
        }
        Ok(Self {
            cfg,
            epsilon,
            shapes,
        })
    }

    /// All three bumps from a single shape.
    pub fn uniform(
        cfg: CouplingConfig,
        epsilon: f64,
        shape: PotentialShape,
    ) -> Result<Self, PotentialError> {
        Self::new(cfg, epsilon, [shape.clone(), shape.clone(), shape])
    }

    /// Coefficients multiplying `(1/eps) V_j((x - c_j)/eps)` for
    /// `j = -1, 0, +1`, including the disbalance factor.
    pub fn bump_weights(&self) -> [f64; 3] {
        let c = &self.cfg;
        let outer = c.alpha * (2.0 / c.beta - 1.0 / c.a);
        let center = c.alpha * c.beta / (c.a * c.a);
        [outer, center, outer]
    }

    pub fn bump_centers(&self) -> [f64; 3] {
        let c = &self.cfg;
        [c.y - c.a, c.y, c.y + c.a]
    }

    /// Pointwise value of the scaled potential.
    pub fn w_eval(&self, x: f64) -> f64 {
        let weights = self.bump_weights();
        let centers = self.bump_centers();
        let mut acc = 0.0;
        for j in 0..3 {
            acc += weights[j] / self.epsilon * self.shapes[j].evaluate((x - centers[j]) / self.epsilon);
        }
        acc
    }
}

/// The form-bound constant
/// `C(a) = sqrt(2) { |beta|/a^2 m_0 + |2/beta - 1/a| (m_{-1} + m_{+1}) }`
/// built from the sqrt-moments of the shapes.
pub fn c_of_a(beta: f64, a: f64, shapes: &[PotentialShape; 3]) -> f64 {
    std::f64::consts::SQRT_2
        * (beta.abs() / (a * a) * shapes[1].sqrt_moment
            + (2.0 / beta - 1.0 / a).abs() * (shapes[0].sqrt_moment + shapes[2].sqrt_moment))
}

/// Neumann-series smallness parameter `tau = 4 sqrt(eps) C_Gamma C(a) / a^2`
/// for the balanced scheme; `c_gamma` is the measured resolvent constant.
pub fn tau(epsilon: f64, a: f64, beta: f64, shapes: &[PotentialShape; 3], c_gamma: f64) -> f64 {
    4.0 * epsilon.sqrt() * c_gamma * c_of_a(beta, a, shapes) / (a * a)
}

/// Disbalanced variant `tau_alpha = 4 sqrt(eps) C_Gamma_alpha C(a) / a`; the
/// weaker `1/a` reflects the milder blow-up of the disbalanced inverse.
pub fn tau_alpha(epsilon: f64, a: f64, beta: f64, shapes: &[PotentialShape; 3], c_gamma: f64) -> f64 {
    4.0 * epsilon.sqrt() * c_gamma * c_of_a(beta, a, shapes) / a
}

/// `W^{1,2}` norm of a function sampled on a uniform grid: trapezoid on
/// `|f|^2 + |f'|^2` with central differences inside, one-sided at the ends.
pub fn w12_norm(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3, "need at least three samples");
    let mut deriv = vec![0.0; n];
    deriv[0] = (values[1] - values[0]) / step;
    deriv[n - 1] = (values[n - 1] - values[n - 2]) / step;
    for i in 1..n - 1 {
        deriv[i] = (values[i + 1] - values[i - 1]) / (2.0 * step);
    }
    let mut acc = 0.0;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * (values[i] * values[i] + deriv[i] * deriv[i]);
    }
    (acc * step).sqrt()
}

/// Sesquilinear form of one bump against a pair of (real) functions:
/// `t^{(j)}[u,v] = w_j { u(c_j) v(c_j) - int V_j(t) u(c_j + eps t) v(c_j + eps t) dt }`
/// where `w_0 = beta/a^2` and `w_{+-1} = 2/beta - 1/a` (balanced scheme; the
/// disbalance factor belongs to the operator, not the form estimates).
///
/// `t_step` is the quadrature step in units of the unscaled shape variable.
pub fn form_t<U, V>(
    j: i8,
    sp: &ScaledPotential,
    u: U,
    v: V,
    t_step: f64,
) -> Result<f64, PotentialError>
where
    U: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    assert!(matches!(j, -1 | 0 | 1), "bump index must be -1, 0 or +1");
    let idx = (j + 1) as usize;
    let shape = &sp.shapes[idx];
    let weight = match j {
        0 => sp.cfg.beta / (sp.cfg.a * sp.cfg.a),
        _ => 2.0 / sp.cfg.beta - 1.0 / sp.cfg.a,
    };
    let center = sp.bump_centers()[idx];
    let r = shape.support_radius();
    let samples = (2.0 * r / t_step).floor() as usize;
    if samples < 32 {
        return Err(PotentialError::GridTooCoarse { samples });
    }
    let n = samples + 1;
    let integral = crate::quadrature::trapezoid(
        |t| shape.evaluate(t) * u(center + sp.epsilon * t) * v(center + sp.epsilon * t),
        -r,
        r,
        n,
    );
    Ok(weight * (u(center) * v(center) - integral))
}

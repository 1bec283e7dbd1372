//! Resolvent kernel of `H = -d^2/dx^2 + W` for piecewise-constant `W` via
//! exact per-cell transfer matrices.
//!
//! The Cheon-Shigehara scaling makes the wells as deep as `beta/(eps a^2)`,
//! where generic ODE steppers go stiff; the exact cosh/sinh (or cos/sin,
//! inside classically allowed cells) propagator is unconditionally stable.
//! Solutions are stored per breakpoint as (value, derivative, exponent
//! offset), so growth across wide cells never overflows.

use thiserror::Error;

use crate::kernels::{KernelValue, ModelTag, SpectralPoint};
use crate::potentials::ScaledPotential;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchrodingerError {
    #[error("wronskian {w:.3e} below tolerance {tol:.3e}: -kappa^2 is (near) an eigenvalue")]
    EigenvalueHit { w: f64, tol: f64 },
    #[error("exponent offset {0:.1} outside the safe range even in log scaling")]
    OverflowGuard(f64),
}

/// Compactly supported piecewise-constant potential: `values[i]` on
/// `(breakpoints[i], breakpoints[i+1])`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantPotential {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantPotential {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(breakpoints.len(), values.len() + 1, "one value per cell");
        assert!(
            breakpoints.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must increase strictly"
        );
        Self {
            breakpoints,
            values,
        }
    }

    /// Zero potential: no cells at all.
    pub fn free() -> Self {
        Self {
            breakpoints: vec![0.0],
            values: Vec::new(),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        if x <= self.breakpoints[0] || x >= *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        let i = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.values[i.min(self.values.len() - 1)]
    }
}

/// Cell averages of the scaled potential over `cells_per_bump` cells across
/// each bump support; exact for box shapes since their value is constant on
/// aligned cells. Gaussian bumps are truncated at their 6-sigma support.
pub fn discretize(sp: &ScaledPotential, cells_per_bump: usize) -> PiecewiseConstantPotential {
    assert!(cells_per_bump >= 8, "need at least 8 cells per bump");
    let weights = sp.bump_weights();
    let centers = sp.bump_centers();
    let mut cuts: Vec<f64> = Vec::new();
    for j in 0..3 {
        if weights[j] == 0.0 {
            continue;
        }
        let r = sp.shapes[j].support_radius() * sp.epsilon;
        let (lo, hi) = (centers[j] - r, centers[j] + r);
        for k in 0..=cells_per_bump {
            cuts.push(lo + (hi - lo) * k as f64 / cells_per_bump as f64);
        }
    }
    if cuts.is_empty() {
        return PiecewiseConstantPotential::free();
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= f64::EPSILON * a.abs().max(1.0));
    // 5-point Gauss average of the full scaled potential per cell, catching
    // overlapping bumps as well
    const GX: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const GW: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    let mut values = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut avg = 0.0;
        for i in 0..5 {
            avg += GW[i] * sp.w_eval(mid + half * GX[i]);
        }
        values.push(avg / 2.0);
    }
    PiecewiseConstantPotential::new(cuts, values)
}

/// Solution data at one breakpoint: `(value, derivative) * e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionNode {
    pub value: f64,
    pub derivative: f64,
    pub log_scale: f64,
}

/// The two exponentially decaying solutions of `-u'' + (W + kappa^2) u = 0`:
/// `u_minus ~ e^{+kappa x}` to the left, `u_plus ~ e^{-kappa x}` to the
/// right, both normalized to one at the outermost breakpoint on their side.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayingSolutionPair {
    pot: PiecewiseConstantPotential,
    kappa: f64,
    u_minus: Vec<SolutionNode>,
    u_plus: Vec<SolutionNode>,
    /// `u_minus u_plus' - u_minus' u_plus`, constant in `x`; equals
    /// `-2 kappa` for the free line.
    pub wronskian: f64,
    /// worst relative wronskian deviation across breakpoints, the numerical
    /// health check of the propagation
    pub wronskian_drift: f64,
}

const MAX_LOG_SCALE: f64 = 600.0;
const COSH_SPLIT: f64 = 30.0;

/// One exact cell propagation over signed width `h` (negative h propagates
/// leftwards). Returns the new (value, derivative) and an exponent carried
/// out of the hyperbolic regime.
fn propagate(q: f64, h: f64, u: f64, du: f64) -> (f64, f64, f64) {
    if q > 0.0 {
        let mu = q.sqrt();
        let z = mu * h;
        if z.abs() <= COSH_SPLIT {
            let (c, s) = (z.cosh(), z.sinh());
            (u * c + du * s / mu, u * mu * s + du * c, 0.0)
        } else {
            // factor out e^{|z|}: cosh z = e^{|z|}(1 + e^{-2|z|})/2,
            // sinh z = sign(z) e^{|z|}(1 - e^{-2|z|})/2
            let za = z.abs();
            let damp = (-2.0 * za).exp();
            let c = 0.5 * (1.0 + damp);
            let s = z.signum() * 0.5 * (1.0 - damp);
            (u * c + du * s / mu, u * mu * s + du * c, za)
        }
    } else if q < 0.0 {
        let nu = (-q).sqrt();
        let z = nu * h;
        let (c, s) = (z.cos(), z.sin());
        (u * c + du * s / nu, -u * nu * s + du * c, 0.0)
    } else {
        (u + du * h, du, 0.0)
    }
}

impl DecayingSolutionPair {
    /// Propagate the two decaying solutions across all cells.
    pub fn build(
        pot: &PiecewiseConstantPotential,
        s: SpectralPoint,
    ) -> Result<Self, SchrodingerError> {
        let kappa = s.kappa();
        let bps = &pot.breakpoints;
        let m = pot.values.len();
        let k2 = kappa * kappa;

        let mut u_minus = Vec::with_capacity(m + 1);
        u_minus.push(SolutionNode {
            value: 1.0,
            derivative: kappa,
            log_scale: 0.0,
        });
        for i in 0..m {
            let prev = u_minus[i];
            let h = bps[i + 1] - bps[i];
            let (v, dv, extra) = propagate(pot.values[i] + k2, h, prev.value, prev.derivative);
            let scale = v.abs().max(dv.abs()).max(f64::MIN_POSITIVE);
            let log_scale = prev.log_scale + extra + scale.ln();
            if log_scale.abs() > MAX_LOG_SCALE {
                return Err(SchrodingerError::OverflowGuard(log_scale));
            }
            u_minus.push(SolutionNode {
                value: v / scale,
                derivative: dv / scale,
                log_scale,
            });
        }

        let mut u_plus = vec![
            SolutionNode {
                value: 0.0,
                derivative: 0.0,
                log_scale: 0.0
            };
            m + 1
        ];
        u_plus[m] = SolutionNode {
            value: 1.0,
            derivative: -kappa,
            log_scale: 0.0,
        };
        for i in (0..m).rev() {
            let prev = u_plus[i + 1];
            let h = bps[i] - bps[i + 1];
            let (v, dv, extra) = propagate(pot.values[i] + k2, h, prev.value, prev.derivative);
            let scale = v.abs().max(dv.abs()).max(f64::MIN_POSITIVE);
            let log_scale = prev.log_scale + extra + scale.ln();
            if log_scale.abs() > MAX_LOG_SCALE {
                return Err(SchrodingerError::OverflowGuard(log_scale));
            }
            u_plus[i] = SolutionNode {
                value: v / scale,
                derivative: dv / scale,
                log_scale,
            };
        }

        // wronskian per node; constancy is the propagation health check
        let mut w0 = 0.0;
        let mut drift: f64 = 0.0;
        let mut scale0 = 0.0;
        for i in 0..=m {
            let (a, b) = (u_minus[i], u_plus[i]);
            let raw = a.value * b.derivative - a.derivative * b.value;
            let lg = a.log_scale + b.log_scale;
            if lg.abs() > MAX_LOG_SCALE {
                return Err(SchrodingerError::OverflowGuard(lg));
            }
            let w = raw * lg.exp();
            if i == 0 {
                w0 = w;
                scale0 = w.abs();
            } else {
                drift = drift.max((w - w0).abs() / scale0.max(f64::MIN_POSITIVE));
            }
        }
        let tol = 1e-10
            * u_minus
                .iter()
                .zip(&u_plus)
                .map(|(a, b)| {
                    ((a.value * b.derivative).abs() + (a.derivative * b.value).abs())
                        * (a.log_scale + b.log_scale).exp()
                })
                .fold(0.0f64, f64::max);
        if w0.abs() < tol {
            return Err(SchrodingerError::EigenvalueHit { w: w0.abs(), tol });
        }

        Ok(Self {
            pot: pot.clone(),
            kappa,
            u_minus,
            u_plus,
            wronskian: w0,
            wronskian_drift: drift,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `u_minus` at any point, as `(value, log_scale)`.
    pub fn eval_minus(&self, x: f64) -> (f64, f64) {
        let bps = &self.pot.breakpoints;
        let m = self.pot.values.len();
        if m == 0 || x <= bps[0] {
            return ((self.kappa * (x - bps[0])).exp(), 0.0);
        }
        if x >= bps[m] {
            let n = self.u_minus[m];
            let grow = n.value + n.derivative / self.kappa;
            let decay = n.value - n.derivative / self.kappa;
            let d = x - bps[m];
            return (
                0.5 * (grow * (self.kappa * d).exp() + decay * (-self.kappa * d).exp()),
                n.log_scale,
            );
        }
        let i = bps.partition_point(|&b| b <= x) - 1;
        let n = self.u_minus[i];
        let (v, _, extra) = propagate(
            self.pot.values[i] + self.kappa * self.kappa,
            x - bps[i],
            n.value,
            n.derivative,
        );
        (v * extra.exp(), n.log_scale)
    }

    /// `u_plus` at any point, as `(value, log_scale)`.
    pub fn eval_plus(&self, x: f64) -> (f64, f64) {
        let bps = &self.pot.breakpoints;
        let m = self.pot.values.len();
        if m == 0 || x >= bps[m] {
            return ((-self.kappa * (x - bps[m])).exp(), 0.0);
        }
        if x <= bps[0] {
            let n = self.u_plus[0];
            let grow = n.value - n.derivative / self.kappa; // e^{+kappa(b0 - x)} piece
            let decay = n.value + n.derivative / self.kappa;
            let d = bps[0] - x;
            return (
                0.5 * (grow * (self.kappa * d).exp() + decay * (-self.kappa * d).exp()),
                n.log_scale,
            );
        }
        let i = bps.partition_point(|&b| b <= x) - 1;
        let i = i.min(m - 1);
        let n = self.u_plus[i + 1];
        let (v, _, extra) = propagate(
            self.pot.values[i] + self.kappa * self.kappa,
            x - bps[i + 1],
            n.value,
            n.derivative,
        );
        (v * extra.exp(), n.log_scale)
    }

    /// Green's function `G(x, x') = -u_minus(min) u_plus(max) / W`.
    pub fn kernel(&self, x: f64, xp: f64) -> f64 {
        let (lo, hi) = if x <= xp { (x, xp) } else { (xp, x) };
        let (vm, lm) = self.eval_minus(lo);
        let (vp, lp) = self.eval_plus(hi);
        -vm * vp * (lm + lp).exp() / self.wronskian
    }

    /// Exterior representation coefficients used by the tail bounds:
    /// on the right of the support `u_minus = A e^{kappa(x - b_m)} +
    /// B e^{-kappa(x - b_m)}` (times `e^{log}`), mirrored on the left for
    /// `u_plus`.
    pub(crate) fn exterior_minus_coefs(&self) -> (f64, f64, f64) {
        let m = self.pot.values.len();
        let n = self.u_minus[m];
        (
            0.5 * (n.value + n.derivative / self.kappa),
            0.5 * (n.value - n.derivative / self.kappa),
            n.log_scale,
        )
    }

    pub(crate) fn exterior_plus_coefs(&self) -> (f64, f64, f64) {
        let n = self.u_plus[0];
        (
            0.5 * (n.value - n.derivative / self.kappa),
            0.5 * (n.value + n.derivative / self.kappa),
            n.log_scale,
        )
    }

    pub(crate) fn support_bounds(&self) -> (f64, f64) {
        let bps = &self.pot.breakpoints;
        (bps[0], *bps.last().unwrap())
    }

    /// Upper bound on `max over cell i of |u(x)| e^{log}` inside the
    /// support, accounting for within-cell growth.
    pub(crate) fn interior_amplitude(&self, minus: bool) -> f64 {
        let nodes = if minus { &self.u_minus } else { &self.u_plus };
        let mut best = 0.0f64;
        for (i, n) in nodes.iter().enumerate() {
            let q = if i < self.pot.values.len() {
                self.pot.values[i] + self.kappa * self.kappa
            } else {
                self.kappa * self.kappa
            };
            let s = q.abs().sqrt().max(self.kappa);
            let width = if i < self.pot.values.len() {
                self.pot.breakpoints[i + 1] - self.pot.breakpoints[i]
            } else {
                0.0
            };
            let growth = if q > 0.0 { (q.sqrt() * width).exp() } else { 1.0 };
            let amp = (n.value.abs() + n.derivative.abs() / s) * growth * n.log_scale.exp();
            best = best.max(amp);
        }
        best
    }
}

/// Kernel of `(H + kappa^2)^{-1}` for the discretized scaled potential.
pub fn potential_resolvent_kernel(
    sp: &ScaledPotential,
    s: SpectralPoint,
    cells_per_bump: usize,
    x: f64,
    xp: f64,
) -> Result<KernelValue, SchrodingerError> {
    let pair = DecayingSolutionPair::build(&discretize(sp, cells_per_bump), s)?;
    Ok(KernelValue {
        value: pair.kernel(x, xp),
        model_tag: ModelTag::Potential,
    })
}

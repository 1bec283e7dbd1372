//! Truncated power-series (jet) arithmetic in the spacing `a`, with Laurent
//! support, used to certify the small-spacing expansions of the triple-delta
//! resolvent order by order at concrete `(kappa, beta, alpha)`.
//!
//! A jet stores `K` consecutive coefficients starting at its valuation, so a
//! value represents `sum_k coeffs[k] * a^(valuation + k)` and every ring
//! operation keeps `K` coefficients relative to the result valuation.
//! Coefficients are plain binary64: the cancellations in these identities
//! are exact in the algebra and survive doubles to about `1e-12` relative.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("division by a series that vanishes to working order")]
    DivisionByZeroSeries,
    #[error("valuation mismatch: dividend valuation {dividend} below divisor valuation {divisor} in the truncated ring")]
    ValuationMismatch { dividend: i64, divisor: i64 },
    #[error("exponential of a series with a pole (valuation {0})")]
    NegativeValuation(i64),
    #[error("unknown expansion id {0:?}")]
    UnknownExpansionId(String),
    #[error("invalid parameters for this expansion: {0}")]
    InvalidParameters(String),
}

/// Relative threshold below which a stored leading coefficient is treated as
/// cancellation residue when detecting valuations.
const VALUATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    valuation: i64,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Constant jet `c` with `order + 1` coefficients.
    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { valuation: 0, coeffs }
    }

    /// The expansion variable `a`.
    pub fn variable(order: usize) -> Self {
        Self::monomial(1.0, 1, order)
    }

    /// `c * a^power`.
    pub fn monomial(c: f64, power: i64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { valuation: power, coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        Self { valuation: 0, coeffs }
    }

    /// Number of stored coefficients minus one.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    /// Coefficient of `a^power` (zero outside the stored window).
    pub fn coeff(&self, power: i64) -> f64 {
        let idx = power - self.valuation;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// First stored power whose coefficient is not cancellation residue.
    pub fn detected_valuation(&self) -> Option<i64> {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return None;
        }
        self.coeffs
            .iter()
            .position(|c| c.abs() > VALUATION_TOL * scale)
            .map(|i| self.valuation + i as i64)
    }

    /// Plain Taylor coefficients `a^0 .. a^order`; fails when the jet has a
    /// genuine pole.
    pub fn into_taylor(self, order: usize) -> Result<Vec<f64>, SeriesError> {
        if let Some(v) = self.detected_valuation() {
            if v < 0 {
                return Err(SeriesError::ValuationMismatch {
                    dividend: v,
                    divisor: 0,
                });
            }
        }
        Ok((0..=order as i64).map(|p| self.coeff(p)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            valuation: self.valuation,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let val = self.valuation.min(other.valuation);
        let k = self.coeffs.len().min(other.coeffs.len());
        let mut coeffs = vec![0.0; k];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let p = val + i as i64;
            *c = self.coeff(p) + other.coeff(p);
        }
        Self { valuation: val, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.coeffs.len().min(other.coeffs.len());
        let mut coeffs = vec![0.0; k];
        for i in 0..k {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.coeffs.get(j).copied().unwrap_or(0.0)
                    * other.coeffs.get(i - j).copied().unwrap_or(0.0);
            }
            coeffs[i] = acc;
        }
        Self {
            valuation: self.valuation + other.valuation,
            coeffs,
        }
    }

    /// Laurent division: the result valuation is the difference of detected
    /// valuations and may be negative. Leading cancellation residue is
    /// stripped from both operands first, so a ratio of two series that both
    /// vanish to fourth order keeps its full relative window.
    pub fn div_laurent(&self, divisor: &Self) -> Result<Self, SeriesError> {
        let dv = divisor
            .detected_valuation()
            .ok_or(SeriesError::DivisionByZeroSeries)?;
        let dshift = (dv - divisor.valuation) as usize;
        let d = &divisor.coeffs[dshift..];
        let nv = match self.detected_valuation() {
            Some(v) => v,
            None => {
                return Ok(Self {
                    valuation: self.valuation - dv,
                    coeffs: vec![0.0; self.coeffs.len()],
                })
            }
        };
        let nshift = (nv - self.valuation) as usize;
        let n = &self.coeffs[nshift..];
        let k = n.len().min(d.len());
        let mut q = vec![0.0; k];
        for i in 0..k {
            let mut acc = n[i];
            for j in 0..i {
                acc -= q[j] * d[i - j];
            }
            q[i] = acc / d[0];
        }
        Ok(Self {
            valuation: nv - dv,
            coeffs: q,
        })
    }

    /// Truncated-ring division; rejects results with a genuine pole.
    pub fn div(&self, divisor: &Self) -> Result<Self, SeriesError> {
        let dv = divisor
            .detected_valuation()
            .ok_or(SeriesError::DivisionByZeroSeries)?;
        let nv = self.detected_valuation().unwrap_or(i64::MAX);
        if nv < dv {
            return Err(SeriesError::ValuationMismatch {
                dividend: nv,
                divisor: dv,
            });
        }
        self.div_laurent(divisor)
    }

    /// `exp` of a jet without a pole, by the standard derivative recurrence.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if self.valuation < 0 {
            if let Some(v) = self.detected_valuation() {
                if v < 0 {
                    return Err(SeriesError::NegativeValuation(v));
                }
            }
        }
        // rebase to valuation 0
        let k = (self.coeffs.len() as i64 + self.valuation.min(0)).max(1) as usize;
        let g: Vec<f64> = (0..k).map(|i| self.coeff(i as i64)).collect();
        let mut f = vec![0.0; k];
        f[0] = g[0].exp();
        for n in 1..k {
            let mut acc = 0.0;
            for j in 1..=n {
                acc += j as f64 * g[j] * f[n - j];
            }
            f[n] = acc / n as f64;
        }
        Ok(Self {
            valuation: 0,
            coeffs: f,
        })
    }

    /// Evaluate the stored partial sum at a concrete spacing.
    pub fn partial_sum(&self, a: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * a + *c;
        }
        acc * a.powi(self.valuation as i32)
    }
}

/// Which region of the plane `(x, x')` relative to the centers the
/// sandwiched numerator refers to: both coordinates beyond the outer
/// centers on the same side, or on opposite sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NumeratorRegion {
    Outer,
    Mixed,
}

/// Jets of `u`, `v`, `w`, `w^{-1}` in the spacing, with the disbalance
/// substitution `u -> alpha u`, `v -> alpha v` applied.
fn scheme_jets(kappa: f64, beta: f64, alpha: f64, order: usize) -> (Jet, Jet, Jet, Jet) {
    // u = 2 beta kappa a / (2a - beta)
    let num = Jet::monomial(2.0 * beta * kappa, 1, order);
    let mut den = Jet::constant(-beta, order);
    den = den.add(&Jet::monomial(2.0, 1, order));
    let u = num.div(&den).expect("2a - beta has nonzero constant term");
    let v = Jet::monomial(2.0 * kappa / beta, 2, order);
    let w = Jet::monomial(-kappa, 1, order).exp().expect("no pole");
    let w_inv = Jet::constant(1.0, order).div(&w).expect("w(0) = 1");
    (u.scale(alpha), v.scale(alpha), w, w_inv)
}

/// Denominator expansion
/// `D = (w^2 - 1 - u)[(1+u)(1+v) - w^2(1-v)] / (2 kappa)`
/// with `u -> alpha u`, `v -> alpha v`.
pub fn jet_d(kappa: f64, beta: f64, alpha: f64, order: usize) -> Jet {
    assert!(order >= 5, "need at least order 5 to see the a^4 term");
    let (u, v, w, _) = scheme_jets(kappa, beta, alpha, order);
    let one = Jet::constant(1.0, order);
    let w2 = w.mul(&w);
    let first = w2.sub(&one).sub(&u);
    let second = one.add(&u).mul(&one.add(&v)).sub(&w2.mul(&one.sub(&v)));
    first.mul(&second).scale(1.0 / (2.0 * kappa))
}

/// Numerator expansion for the requested region, disbalance substitution
/// applied:
/// outer `N = (w^2 + w^-2)[w^2 - (1+u)(1+v)] + 2 w^2 v + (w^2-1-u)(u-1-w^2)`,
/// mixed `N = (w^4 + 1) v + 2 [w^2 - (1+u)(1+v)] + (w^2-1-u)(u-1-w^2)`.
pub fn jet_n(kappa: f64, beta: f64, alpha: f64, region: NumeratorRegion, order: usize) -> Jet {
    assert!(order >= 5, "need at least order 5 to see the a^4 term");
    let (u, v, w, w_inv) = scheme_jets(kappa, beta, alpha, order);
    let one = Jet::constant(1.0, order);
    let w2 = w.mul(&w);
    let uv_block = w2.sub(&one.add(&u).mul(&one.add(&v)));
    let tail = w2.sub(&one).sub(&u).mul(&u.sub(&one).sub(&w2));
    match region {
        NumeratorRegion::Outer => {
            let w2_plus_wm2 = w2.add(&w_inv.mul(&w_inv));
            w2_plus_wm2
                .mul(&uv_block)
                .add(&w2.mul(&v).scale(2.0))
                .add(&tail)
        }
        NumeratorRegion::Mixed => {
            let w4_plus_1 = w2.mul(&w2).add(&one);
            w4_plus_1
                .mul(&v)
                .add(&uv_block.scale(2.0))
                .add(&tail)
        }
    }
}

/// Direct f64 evaluation of the same expressions at a concrete spacing;
/// serves as the jet-independent oracle in the remainder ratio tests.
pub fn d_exact(kappa: f64, beta: f64, alpha: f64, a: f64) -> f64 {
    let u = alpha * 2.0 * beta * kappa * a / (2.0 * a - beta);
    let v = alpha * 2.0 * kappa * a * a / beta;
    let w2 = (-2.0 * kappa * a).exp();
    (w2 - 1.0 - u) * ((1.0 + u) * (1.0 + v) - w2 * (1.0 - v)) / (2.0 * kappa)
}

pub fn n_exact(kappa: f64, beta: f64, alpha: f64, region: NumeratorRegion, a: f64) -> f64 {
    let u = alpha * 2.0 * beta * kappa * a / (2.0 * a - beta);
    let v = alpha * 2.0 * kappa * a * a / beta;
    let w2 = (-2.0 * kappa * a).exp();
    let uv_block = w2 - (1.0 + u) * (1.0 + v);
    let tail = (w2 - 1.0 - u) * (u - 1.0 - w2);
    match region {
        NumeratorRegion::Outer => (w2 + 1.0 / w2) * uv_block + 2.0 * w2 * v + tail,
        NumeratorRegion::Mixed => (w2 * w2 + 1.0) * v + 2.0 * uv_block + tail,
    }
}

/// 3x3 matrix of Laurent jets for the inverse Krein matrix
/// `Gamma^{-1} = 2 kappa * adj(2 kappa Gamma) / det(2 kappa Gamma)`,
/// where `2 kappa Gamma = [[1+u, w, w^2], [w, 1+v, w], [w^2, w, 1+u]]`
/// (disbalance substitution applied). The balanced case has an `a^{-2}`
/// pole per entry, the disbalanced one `a^{-1}`.
pub fn gamma_inv_jet(
    kappa: f64,
    beta: f64,
    alpha: f64,
    order: usize,
) -> Result<[[Jet; 3]; 3], SeriesError> {
    let (u, v, w, _) = scheme_jets(kappa, beta, alpha, order);
    let one = Jet::constant(1.0, order);
    let du = one.add(&u);
    let dv = one.add(&v);
    let w2 = w.mul(&w);
    let g: [[Jet; 3]; 3] = [
        [du.clone(), w.clone(), w2.clone()],
        [w.clone(), dv.clone(), w.clone()],
        [w2.clone(), w.clone(), du.clone()],
    ];
    let minor = |r0: usize, r1: usize, c0: usize, c1: usize| -> Jet {
        g[r0][c0].mul(&g[r1][c1]).sub(&g[r0][c1].mul(&g[r1][c0]))
    };
    let det = g[0][0]
        .mul(&minor(1, 2, 1, 2))
        .sub(&g[0][1].mul(&minor(1, 2, 0, 2)))
        .add(&g[0][2].mul(&minor(1, 2, 0, 1)));
    let rows = [(1usize, 2usize), (0, 2), (0, 1)];
    let mut out: Vec<Vec<Jet>> = Vec::with_capacity(3);
    for i in 0..3 {
        let mut row = Vec::with_capacity(3);
        for j in 0..3 {
            // adj = transposed cofactors; this matrix is symmetric
            let (r0, r1) = rows[j];
            let (c0, c1) = rows[i];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let cof = minor(r0, r1, c0, c1).scale(sign);
            row.push(cof.div_laurent(&det)?.scale(2.0 * kappa));
        }
        out.push(row);
    }
    let mut it = out.into_iter();
    let (r0, r1, r2) = (
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    );
    let arr = |mut r: Vec<Jet>| -> [Jet; 3] {
        let c = r.pop().unwrap();
        let b = r.pop().unwrap();
        let a = r.pop().unwrap();
        [a, b, c]
    };
    Ok([arr(r0), arr(r1), arr(r2)])
}

/// Leading coefficient matrix of `a^2 Gamma^{-1}` in the balanced scheme:
/// `-beta / (2 kappa^2 (2 + beta kappa))` times the structure matrix below.
pub fn gamma_inv_leading(kappa: f64, beta: f64) -> [[f64; 3]; 3] {
    let c = -beta / (2.0 * kappa * kappa * (2.0 + beta * kappa));
    let a = 2.0 * kappa * (kappa + 1.0 / beta);
    let b = -2.0 * kappa * (kappa + 2.0 / beta);
    let d = 2.0 * kappa / beta;
    let e = 4.0 * kappa * (kappa + 2.0 / beta);
    [
        [c * a, c * b, c * d],
        [c * b, c * e, c * b],
        [c * d, c * b, c * a],
    ]
}

/// The verified small-spacing identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpansionId {
    /// denominator: leading `-2 kappa^2 a^4 (kappa + 2/beta)`
    Dexp,
    /// outer numerator: leading `4 kappa^4 a^4`
    Nexp,
    /// mixed numerator: leading `-4 kappa^4 a^4`
    Nexp2,
    /// correction coefficient `N/(4 kappa^2 D)` tends to `-beta/(2(2+beta kappa))`
    LimKern,
    /// leading `a^{-2}` matrix of the inverse Krein matrix
    GammaInv,
    /// disbalanced denominator: leading `-2 kappa a^2 (1-alpha)^2`
    DAlpha,
    /// disbalanced outer numerator: leading `-4 kappa^2 a^2 (1-alpha)^2`
    NAlpha,
}

impl ExpansionId {
    pub const ALL: [ExpansionId; 7] = [
        ExpansionId::Dexp,
        ExpansionId::Nexp,
        ExpansionId::Nexp2,
        ExpansionId::LimKern,
        ExpansionId::GammaInv,
        ExpansionId::DAlpha,
        ExpansionId::NAlpha,
    ];

    pub fn parse(s: &str) -> Result<Self, SeriesError> {
        match s {
            "dexp" => Ok(Self::Dexp),
            "nexp" => Ok(Self::Nexp),
            "nexp2" => Ok(Self::Nexp2),
            "limkern" => Ok(Self::LimKern),
            "gammainv" => Ok(Self::GammaInv),
            "dalpha" => Ok(Self::DAlpha),
            "nalpha" => Ok(Self::NAlpha),
            other => Err(SeriesError::UnknownExpansionId(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dexp => "dexp",
            Self::Nexp => "nexp",
            Self::Nexp2 => "nexp2",
            Self::LimKern => "limkern",
            Self::GammaInv => "gammainv",
            Self::DAlpha => "dalpha",
            Self::NAlpha => "nalpha",
        }
    }
}

/// Per-order line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientCheck {
    /// label of the checked quantity (order, or matrix entry)
    pub label: String,
    pub order: i64,
    pub computed: f64,
    pub reference: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub id: ExpansionId,
    pub kappa: f64,
    pub beta: f64,
    pub alpha: f64,
    pub rows: Vec<CoefficientCheck>,
    pub pass: bool,
}

const SUBLEADING_REL_TOL: f64 = 1e-10;
const LEADING_REL_TOL: f64 = 1e-9;

fn check_jet_leading(
    jet: &Jet,
    leading_order: i64,
    reference: f64,
    rows: &mut Vec<CoefficientCheck>,
) -> bool {
    let lead = jet.coeff(leading_order);
    let mut pass = (lead - reference).abs() <= LEADING_REL_TOL * reference.abs();
    let scale = lead.abs().max(reference.abs());
    let mut p = jet.valuation();
    while p < leading_order {
        let c = jet.coeff(p);
        let ok = c.abs() <= SUBLEADING_REL_TOL * scale;
        pass &= ok;
        rows.push(CoefficientCheck {
            label: format!("a^{p}"),
            order: p,
            computed: c,
            reference: 0.0,
            abs_err: c.abs(),
            rel_err: c.abs() / scale,
        });
        p += 1;
    }
    rows.push(CoefficientCheck {
        label: format!("a^{leading_order}"),
        order: leading_order,
        computed: lead,
        reference,
        abs_err: (lead - reference).abs(),
        rel_err: (lead - reference).abs() / reference.abs().max(f64::MIN_POSITIVE),
    });
    pass
}

/// Verify one expansion identity at concrete parameters: all orders below
/// the leading one must vanish (relative to the leading scale) and the
/// leading coefficient must match its closed form.
pub fn verify_expansion(
    id: ExpansionId,
    kappa: f64,
    beta: f64,
    alpha: f64,
    order: usize,
) -> Result<VerificationReport, SeriesError> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(SeriesError::InvalidParameters(format!("kappa = {kappa}")));
    }
    if !(beta.is_finite() && beta != 0.0) {
        return Err(SeriesError::InvalidParameters(format!("beta = {beta}")));
    }
    let needs_alpha_one = matches!(
        id,
        ExpansionId::Dexp | ExpansionId::Nexp | ExpansionId::Nexp2 | ExpansionId::LimKern | ExpansionId::GammaInv
    );
    if needs_alpha_one && alpha != 1.0 {
        return Err(SeriesError::InvalidParameters(format!(
            "{} is a balanced-scheme identity, alpha must be 1 (got {alpha})",
            id.name()
        )));
    }
    if matches!(id, ExpansionId::DAlpha | ExpansionId::NAlpha) && (alpha == 1.0 || alpha == 0.0) {
        return Err(SeriesError::InvalidParameters(format!(
            "{} requires alpha outside {{0, 1}} (got {alpha})",
            id.name()
        )));
    }
    if matches!(id, ExpansionId::LimKern | ExpansionId::GammaInv)
        && (2.0 + beta * kappa).abs() < 1e-9 * (1.0 + (beta * kappa).abs())
    {
        return Err(SeriesError::InvalidParameters(format!(
            "kappa = {kappa} resonant with beta = {beta}"
        )));
    }
    let order = order.max(5);
    let mut rows = Vec::new();
    let pass = match id {
        ExpansionId::Dexp => {
            let jet = jet_d(kappa, beta, 1.0, order);
            let reference = -2.0 * kappa * kappa * (kappa + 2.0 / beta);
            check_jet_leading(&jet, 4, reference, &mut rows)
        }
        ExpansionId::Nexp => {
            let jet = jet_n(kappa, beta, 1.0, NumeratorRegion::Outer, order);
            check_jet_leading(&jet, 4, 4.0 * kappa.powi(4), &mut rows)
        }
        ExpansionId::Nexp2 => {
            let jet = jet_n(kappa, beta, 1.0, NumeratorRegion::Mixed, order);
            check_jet_leading(&jet, 4, -4.0 * kappa.powi(4), &mut rows)
        }
        ExpansionId::LimKern => {
            let n = jet_n(kappa, beta, 1.0, NumeratorRegion::Outer, order);
            let d = jet_d(kappa, beta, 1.0, order);
            let ratio = n.div_laurent(&d)?.scale(1.0 / (4.0 * kappa * kappa));
            let reference = -beta / (2.0 * (2.0 + beta * kappa));
            check_jet_leading(&ratio, 0, reference, &mut rows)
        }
        ExpansionId::GammaInv => {
            let inv = gamma_inv_jet(kappa, beta, 1.0, order)?;
            let lead = gamma_inv_leading(kappa, beta);
            let mut pass = true;
            for (i, row) in inv.iter().enumerate() {
                for (j, jet) in row.iter().enumerate() {
                    let computed = jet.coeff(-2);
                    let reference = lead[i][j];
                    let ok = (computed - reference).abs() <= LEADING_REL_TOL * reference.abs();
                    pass &= ok;
                    // pole junk below a^{-2} must be residue only
                    let junk = (jet.valuation()..-2)
                        .map(|p| jet.coeff(p).abs())
                        .fold(0.0f64, f64::max);
                    pass &= junk <= SUBLEADING_REL_TOL * jet.max_abs_coeff();
                    rows.push(CoefficientCheck {
                        label: format!("({i},{j}) a^-2"),
                        order: -2,
                        computed,
                        reference,
                        abs_err: (computed - reference).abs(),
                        rel_err: (computed - reference).abs()
                            / reference.abs().max(f64::MIN_POSITIVE),
                    });
                }
            }
            pass
        }
        ExpansionId::DAlpha => {
            let jet = jet_d(kappa, beta, alpha, order);
            let reference = -2.0 * kappa * (1.0 - alpha) * (1.0 - alpha);
            check_jet_leading(&jet, 2, reference, &mut rows)
        }
        ExpansionId::NAlpha => {
            let jet = jet_n(kappa, beta, alpha, NumeratorRegion::Outer, order);
            let reference = -4.0 * kappa * kappa * (1.0 - alpha) * (1.0 - alpha);
            check_jet_leading(&jet, 2, reference, &mut rows)
        }
    };
    Ok(VerificationReport {
        id,
        kappa,
        beta,
        alpha,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exp_jet_matches_taylor() {
        let j = Jet::monomial(-1.0, 1, 3).exp().unwrap();
        let expect = [1.0, -1.0, 0.5, -1.0 / 6.0];
        for (p, e) in expect.iter().enumerate() {
            assert_relative_eq!(j.coeff(p as i64), e, max_relative = 1e-14);
        }
    }

    #[test]
    fn difference_of_squares() {
        let one = Jet::constant(1.0, 2);
        let a = Jet::variable(2);
        let prod = one.add(&a).mul(&one.sub(&a));
        assert_eq!(prod.coeff(0), 1.0);
        assert_eq!(prod.coeff(1), 0.0);
        assert_eq!(prod.coeff(2), -1.0);
    }

    #[test]
    fn valuation_cancellation_in_division() {
        // a^4 c / a^4 d = c/d as a constant jet
        let n = Jet::monomial(3.0, 4, 4);
        let d = Jet::monomial(1.5, 4, 4);
        let q = n.div(&d).unwrap();
        assert_eq!(q.valuation(), 0);
        assert_relative_eq!(q.coeff(0), 2.0);
    }

    #[test]
    fn taylor_division_rejects_poles() {
        let n = Jet::variable(4);
        let d = Jet::monomial(1.0, 2, 4);
        assert!(matches!(
            n.div(&d),
            Err(SeriesError::ValuationMismatch { .. })
        ));
        assert!(n.div_laurent(&d).is_ok());
        let zero = Jet::constant(0.0, 4);
        assert!(matches!(
            n.div(&zero),
            Err(SeriesError::DivisionByZeroSeries)
        ));
    }

    #[test]
    fn geometric_series_via_div() {
        let one = Jet::constant(1.0, 5);
        let q = one.div(&one.sub(&Jet::variable(5))).unwrap();
        for p in 0..=5 {
            assert_relative_eq!(q.coeff(p), 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn jet_d_leading_coefficient() {
        // kappa=3, beta=-1: a^0..a^3 cancel, a^4 coefficient -18
        let jet = jet_d(3.0, -1.0, 1.0, 6);
        let lead = jet.coeff(4);
        assert_relative_eq!(lead, -18.0, max_relative = 1e-10);
        for p in 0..4 {
            assert!(jet.coeff(p).abs() <= 1e-12 * jet.max_abs_coeff(), "order {p}");
        }
    }

    #[test]
    fn jet_n_leading_coefficients() {
        let outer = jet_n(3.0, -1.0, 1.0, NumeratorRegion::Outer, 6);
        assert_relative_eq!(outer.coeff(4), 324.0, max_relative = 1e-10);
        // cancellation witness: everything below a^4 is residue
        for p in 0..4 {
            assert!(outer.coeff(p).abs() <= 1e-10 * outer.coeff(4).abs(), "order {p}");
        }
        let mixed = jet_n(3.0, -1.0, 1.0, NumeratorRegion::Mixed, 6);
        assert_relative_eq!(mixed.coeff(4), -324.0, max_relative = 1e-10);
    }

    #[test]
    fn verify_expansion_all_pass() {
        for id in ExpansionId::ALL {
            let alpha = match id {
                ExpansionId::DAlpha | ExpansionId::NAlpha => 2.0,
                _ => 1.0,
            };
            let rep = verify_expansion(id, 3.0, -1.0, alpha, 6).unwrap();
            assert!(rep.pass, "{:?} failed: {:#?}", id, rep.rows);
        }
    }

    #[test]
    fn disbalanced_leading_coefficients() {
        // both bracket factors vanish linearly in a with slope (1-alpha),
        // so the leading coefficients carry (1-alpha)^2
        let rep = verify_expansion(ExpansionId::DAlpha, 1.0, -1.0, 2.0, 5).unwrap();
        let lead = rep.rows.last().unwrap();
        assert_relative_eq!(lead.computed, -2.0, max_relative = 1e-9);
        let rep = verify_expansion(ExpansionId::NAlpha, 1.0, -1.0, 2.0, 5).unwrap();
        let lead = rep.rows.last().unwrap();
        assert_relative_eq!(lead.computed, -4.0, max_relative = 1e-9);
        // the ratio N/D still tends to 2 kappa, the substance of the
        // Dirichlet limit
        let n = jet_n(1.0, -1.0, 2.0, NumeratorRegion::Outer, 6);
        let d = jet_d(1.0, -1.0, 2.0, 6);
        let ratio = n.div_laurent(&d).unwrap();
        assert_relative_eq!(ratio.coeff(0), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn limkern_constant() {
        let rep = verify_expansion(ExpansionId::LimKern, 3.0, -1.0, 1.0, 6).unwrap();
        let lead = rep.rows.last().unwrap();
        assert_relative_eq!(lead.computed, -0.5, max_relative = 1e-9);
    }

    #[test]
    fn gamma_inv_jet_leading_entries() {
        let inv = gamma_inv_jet(3.0, -1.0, 1.0, 6).unwrap();
        // corner entries at kappa=3, beta=-1: diagonal -2/3, corners 1/3
        assert_relative_eq!(inv[0][0].coeff(-2), -2.0 / 3.0, max_relative = 1e-9);
        assert_relative_eq!(inv[0][2].coeff(-2), 1.0 / 3.0, max_relative = 1e-9);
        assert_relative_eq!(inv[1][1].coeff(-2), -2.0 / 3.0, max_relative = 1e-9);
        // disbalance weakens the pole to a^{-1}
        let inv2 = gamma_inv_jet(3.0, -1.0, 2.0, 6).unwrap();
        for row in &inv2 {
            for jet in row {
                let v = jet.detected_valuation().unwrap();
                assert!(v >= -1, "valuation {v}");
            }
        }
        assert_eq!(inv2[0][0].detected_valuation().unwrap(), -1);
    }

    #[test]
    fn gamma_inv_jet_matches_numeric_inverse() {
        // numeric Gamma^{-1} at small a against the jet partial sums
        let (kappa, beta) = (3.0, -1.0);
        let a = 2e-3;
        let inv = gamma_inv_jet(kappa, beta, 1.0, 8).unwrap();
        let cfg = crate::delta_arrays::CouplingConfig::balanced(beta, a).unwrap();
        let s = crate::kernels::SpectralPoint::new(kappa).unwrap();
        let arr = crate::delta_arrays::cs_couplings(&cfg).unwrap();
        let gm = crate::delta_arrays::gamma_matrix(&arr, s);
        let gi = crate::delta_arrays::gamma_inverse(&gm).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let jet_val = inv[i][j].partial_sum(a);
                let num = gi.entries.get(i, j);
                assert_relative_eq!(jet_val, num, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn remainder_scales_at_the_truncation_order() {
        // partial sums at halving spacings: the remainder against the exact
        // expression shrinks like a^(M+1), so successive error ratios sit
        // near 2^(M+1)
        let (kappa, beta) = (2.0, -1.0);
        let m = 5;
        let jet = jet_d(kappa, beta, 1.0, m);
        let errs: Vec<f64> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&a| (d_exact(kappa, beta, 1.0, a) - jet.partial_sum(a)).abs())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            let expect = 2.0f64.powi(m as i32 + 1);
            assert!(
                ratio > expect / 2.0 && ratio < expect * 2.0,
                "ratio {ratio} vs 2^{}",
                m + 1
            );
        }
    }

    #[test]
    fn unknown_expansion_id() {
        assert!(matches!(
            ExpansionId::parse("bogus"),
            Err(SeriesError::UnknownExpansionId(_))
        ));
        assert_eq!(ExpansionId::parse("dalpha").unwrap(), ExpansionId::DAlpha);
    }

    proptest! {
        #[test]
        fn mul_is_commutative_and_distributive(
            xs in proptest::collection::vec(-2.0f64..2.0, 5),
            ys in proptest::collection::vec(-2.0f64..2.0, 5),
            zs in proptest::collection::vec(-2.0f64..2.0, 5),
        ) {
            let (a, b, c) = (Jet::from_coeffs(xs), Jet::from_coeffs(ys), Jet::from_coeffs(zs));
            let ab = a.mul(&b);
            let ba = b.mul(&a);
            for p in 0..5 {
                prop_assert!((ab.coeff(p) - ba.coeff(p)).abs() <= 1e-13);
            }
            let lhs = a.mul(&b.add(&c));
            let rhs = a.mul(&b).add(&a.mul(&c));
            for p in 0..5 {
                prop_assert!((lhs.coeff(p) - rhs.coeff(p)).abs() <= 1e-13 * (1.0 + lhs.coeff(p).abs()));
            }
            let assoc_l = a.mul(&b).mul(&c);
            let assoc_r = a.mul(&b.mul(&c));
            for p in 0..5 {
                prop_assert!((assoc_l.coeff(p) - assoc_r.coeff(p)).abs() <= 1e-13 * (1.0 + assoc_l.coeff(p).abs()));
            }
        }

        #[test]
        fn div_inverts_mul(
            xs in proptest::collection::vec(-2.0f64..2.0, 6),
            mut ys in proptest::collection::vec(-2.0f64..2.0, 6),
        ) {
            prop_assume!(ys[0].abs() > 0.1);
            ys[0] = ys[0].signum() * ys[0].abs().max(0.5);
            let (a, b) = (Jet::from_coeffs(xs), Jet::from_coeffs(ys));
            let q = a.mul(&b).div(&b).unwrap();
            for p in 0..6 {
                prop_assert!((q.coeff(p) - a.coeff(p)).abs() <= 1e-10 * (1.0 + a.coeff(p).abs()));
            }
        }
    }
}

//! Closed-form resolvent kernels of the exactly solvable operators on the
//! line: the free Laplacian, the delta-prime point interaction and the
//! Dirichlet-decoupled Laplacian.
//!
//! The spectral parameter is always `k = i kappa` with `kappa > 0`, i.e. the
//! energy `-kappa^2` sits below the continuous spectrum, where every kernel
//! is real and exponentially decaying.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("delta-prime coupling beta must be nonzero and finite, got {0}")]
    InvalidBeta(f64),
    #[error("spectral point kappa = {kappa} is resonant for beta = {beta}: |2 + beta*kappa| = {gap:.3e} below guard")]
    ResonantSpectralPoint { beta: f64, kappa: f64, gap: f64 },
}

/// Spectral parameter `kappa > 0`; the resolvents are evaluated at
/// `k = i kappa`, i.e. at energy `-kappa^2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct SpectralPoint {
    kappa: f64,
}

impl SpectralPoint {
    pub fn new(kappa: f64) -> Result<Self, KernelError> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(KernelError::InvalidKappa(kappa));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn energy(&self) -> f64 {
        -self.kappa * self.kappa
    }
}

/// Which kernel family produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelTag {
    Free,
    Signed,
    DeltaPrime,
    DeltaArray,
    Dirichlet,
    Potential,
}

/// A single kernel evaluation, tagged with its model of origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub model_tag: ModelTag,
}

impl KernelValue {
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Free-resolvent kernel `e^{-kappa |x - x'|} / (2 kappa)`.
pub fn free_kernel(s: SpectralPoint, x: f64, xp: f64) -> KernelValue {
    KernelValue {
        value: free_kernel_raw(s.kappa, x - xp),
        model_tag: ModelTag::Free,
    }
}

pub(crate) fn free_kernel_raw(kappa: f64, d: f64) -> f64 {
    (-kappa * d.abs()).exp() / (2.0 * kappa)
}

/// Signed companion kernel `sgn(x - x') e^{-kappa |x - x'|} / (2 kappa)`,
/// with `sgn(0) := 0` so the kernel stays antisymmetric at coincidence.
pub fn signed_kernel(s: SpectralPoint, x: f64, xp: f64) -> KernelValue {
    KernelValue {
        value: signed_kernel_raw(s.kappa, x - xp),
        model_tag: ModelTag::Signed,
    }
}

pub(crate) fn signed_kernel_raw(kappa: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.signum() * (-kappa * d.abs()).exp() / (2.0 * kappa)
    }
}

/// Relative guard deciding when `-kappa^2` is too close to the delta-prime
/// eigenvalue `kappa = -2/beta`.
pub(crate) fn resonance_gap(beta: f64, kappa: f64) -> Option<f64> {
    let gap = (2.0 + beta * kappa).abs();
    if gap < 1e-9 * (1.0 + (beta * kappa).abs()) {
        Some(gap)
    } else {
        None
    }
}

/// Coefficient of the rank-one correction in the delta-prime resolvent:
/// `K(x,x') = G(x-x') + c * gt(x-y) gt(x'-y)` with `c = 2 beta kappa^2 / (2 + beta kappa)`.
pub(crate) fn delta_prime_coefficient(beta: f64, kappa: f64) -> Result<f64, KernelError> {
    if !(beta.is_finite() && beta != 0.0) {
        return Err(KernelError::InvalidBeta(beta));
    }
    if let Some(gap) = resonance_gap(beta, kappa) {
        return Err(KernelError::ResonantSpectralPoint { beta, kappa, gap });
    }
    Ok(2.0 * beta * kappa * kappa / (2.0 + beta * kappa))
}

/// Resolvent kernel of the delta-prime interaction of strength `beta` at `y`.
///
/// Fails with `ResonantSpectralPoint` when `kappa` is at (or numerically
/// near) `-2/beta`, the bound-state position for `beta < 0`.
pub fn delta_prime_kernel(
    beta: f64,
    y: f64,
    s: SpectralPoint,
    x: f64,
    xp: f64,
) -> Result<KernelValue, KernelError> {
    let c = delta_prime_coefficient(beta, s.kappa)?;
    let value = free_kernel_raw(s.kappa, x - xp)
        + c * signed_kernel_raw(s.kappa, x - y) * signed_kernel_raw(s.kappa, xp - y);
    Ok(KernelValue {
        value,
        model_tag: ModelTag::DeltaPrime,
    })
}

/// Resolvent kernel of the Laplacian with Dirichlet decoupling at `y`:
/// zero across the split point, half-line Dirichlet Green's function on
/// either side.
pub fn dirichlet_kernel(y: f64, s: SpectralPoint, x: f64, xp: f64) -> KernelValue {
    KernelValue {
        value: dirichlet_kernel_raw(s.kappa, x - y, xp - y),
        model_tag: ModelTag::Dirichlet,
    }
}

pub(crate) fn dirichlet_kernel_raw(kappa: f64, x: f64, xp: f64) -> f64 {
    if x * xp <= 0.0 {
        return 0.0;
    }
    let lo = x.abs().min(xp.abs());
    let hi = x.abs().max(xp.abs());
    // (1/kappa) e^{-kappa hi} sinh(kappa lo), written to avoid overflow in sinh
    ((-kappa * (hi - lo)).exp() - (-kappa * (hi + lo)).exp()) / (2.0 * kappa)
}

//! Gaussian wave packets, superpositions, and their closed-form free
//! evolution.
//!
//! Everything runs in natural units with `hbar = m = 1`: lengths in `l0`,
//! times in `t0`, momenta in `hbar/l0` and energies in `E0 = hbar/t0`.
//! The closed-form evolution here is the reference path for the memoryless
//! engine and the fidelity oracle for the spectral propagator, so it samples
//! the formula verbatim and is never renormalized.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, WaveFunction};

/// Reduced Planck constant in natural units.
pub const HBAR: f64 = 1.0;
/// Particle mass in natural units.
pub const MASS: f64 = 1.0;

/// Margin (in units of the instantaneous width) below which grid truncation
/// is a hard error.
pub const HARD_SUPPORT_MARGIN: f64 = 5.0;
/// Margin below which a truncation warning is logged; at 8 widths the lost
/// mass is under 1e-12.
pub const SOFT_SUPPORT_MARGIN: f64 = 8.0;

/// Parameters of one Gaussian packet: `psi(x, 0) ~ (pi sigma0^2)^(-1/4)
/// exp(-(x - x0)^2 / (2 sigma0^2) + i p0 (x - x0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    /// Mean position at t = 0 in `l0`.
    pub x0: f64,
    /// Mean momentum in `hbar/l0`.
    pub p0: f64,
    /// Width parameter in `l0`.
    pub sigma0: f64,
    /// Superposition coefficient; overall normalization happens downstream.
    pub weight: Complex64,
}

impl GaussianSpec {
    pub fn new(x0: f64, p0: f64, sigma0: f64) -> Self {
        Self { x0, p0, sigma0, weight: Complex64::new(1.0, 0.0) }
    }

    pub fn with_weight(mut self, weight: Complex64) -> Self {
        self.weight = weight;
        self
    }

    /// Mean position under free evolution.
    pub fn mean_position(&self, t: f64) -> f64 {
        self.x0 + self.p0 * t / MASS
    }

    /// Width parameter at time `t`: `sigma0 sqrt(1 + t^2 / sigma0^4)`.
    pub fn width_at(&self, t: f64) -> f64 {
        let s2 = self.sigma0 * self.sigma0;
        self.sigma0 * (1.0 + (t * HBAR / (MASS * s2)).powi(2)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0) {
            return Err(Error::Config(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        Ok(())
    }

    /// Initial amplitude at position `x`.
    fn amplitude_at_origin_time(&self, x: f64) -> Complex64 {
        let s2 = self.sigma0 * self.sigma0;
        let norm = (PI * s2).powf(-0.25);
        let arg =
            Complex64::new(-(x - self.x0).powi(2) / (2.0 * s2), self.p0 * (x - self.x0) / HBAR);
        norm * arg.exp()
    }

    /// Free-evolution amplitude at `(x, t)`: a spreading Gaussian whose mean
    /// moves at `p0/m` and whose complex width is `sigma0 + i t / (m sigma0)`.
    fn amplitude_at(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.sigma0 * self.sigma0;
        let xr = x - self.x0 - self.p0 * t / MASS;
        let gauss = Complex64::new(-xr * xr / (2.0 * s2), 0.0)
            / Complex64::new(1.0, HBAR * t / (MASS * s2));
        let phase = Complex64::new(0.0, self.p0 / HBAR * (x - self.x0 - 0.5 * self.p0 * t / MASS));
        let denom = Complex64::new(self.sigma0, HBAR * t / (MASS * self.sigma0));
        (gauss + phase).exp() / (PI.sqrt() * denom).sqrt()
    }

    pub(crate) fn check_support(&self, grid: &SpatialGrid, t: f64) -> Result<()> {
        let mean = self.mean_position(t);
        let width = self.width_at(t);
        let margin = (mean - grid.x_min()).min(grid.x_max() - mean);
        if margin < HARD_SUPPORT_MARGIN * width {
            return Err(Error::PacketEscapesGrid(format!(
                "packet mean {mean:.3} at t = {t:.3} leaves only {margin:.3} l0 of grid \
                 margin ({:.2} widths, need {HARD_SUPPORT_MARGIN})",
                margin / width,
            )));
        }
        if margin < SOFT_SUPPORT_MARGIN * width {
            log::warn!(
                "packet mean {mean:.3} at t = {t:.3} has only {:.2} widths of grid margin; \
                 truncated mass may exceed 1e-12",
                margin / width
            );
        }
        Ok(())
    }
}

/// A non-empty superposition of Gaussian packets.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    packets: Vec<GaussianSpec>,
}

impl InitialState {
    pub fn new(packets: Vec<GaussianSpec>) -> Result<Self> {
        if packets.is_empty() {
            return Err(Error::Usage("initial state needs at least one packet".into()));
        }
        for p in &packets {
            p.validate()?;
        }
        Ok(Self { packets })
    }

    pub fn single(spec: GaussianSpec) -> Result<Self> {
        Self::new(vec![spec])
    }

    pub fn packets(&self) -> &[GaussianSpec] {
        &self.packets
    }
}

/// Sample one packet at t = 0 and renormalize on the grid.
///
/// The renormalization absorbs the (sub-1e-12, given the support margins)
/// mass lost to grid truncation, so downstream probability bookkeeping can
/// start from an exactly unit-norm state.
pub fn make_gaussian(spec: &GaussianSpec, grid: &Arc<SpatialGrid>) -> Result<WaveFunction> {
    spec.validate()?;
    spec.check_support(grid, 0.0)?;
    let amps: Vec<Complex64> = grid.positions().map(|x| spec.amplitude_at_origin_time(x)).collect();
    WaveFunction::new(Arc::clone(grid), amps)?.normalized()
}

/// Weighted sum of the packets at t = 0, rescaled to unit norm.
///
/// The rescaling uses the actual grid norm, so interference cross-terms are
/// accounted for exactly rather than assuming orthogonal components.
pub fn make_superposition(state: &InitialState, grid: &Arc<SpatialGrid>) -> Result<WaveFunction> {
    analytic_superposition_evolution(state, 0.0, grid)?.normalized()
}

/// Closed-form free evolution of a single packet, sampled verbatim.
///
/// No renormalization: unitarity of the formula itself is part of what this
/// oracle is used to check, and its norm stays within 1e-8 of one on any
/// grid that satisfies the support margins.
pub fn analytic_free_evolution(
    spec: &GaussianSpec,
    t: f64,
    grid: &Arc<SpatialGrid>,
) -> Result<WaveFunction> {
    spec.validate()?;
    spec.check_support(grid, t)?;
    let amps: Vec<Complex64> = grid.positions().map(|x| spec.amplitude_at(x, t)).collect();
    WaveFunction::new(Arc::clone(grid), amps)
}

/// Raw (unnormalized) superposition amplitude at one point, weights applied.
pub(crate) fn superposition_amplitude(state: &InitialState, x: f64, t: f64) -> Complex64 {
    state.packets().iter().map(|p| p.weight * p.amplitude_at(x, t)).sum()
}

/// Grid norm of the raw superposition at t = 0; the shared normalization
/// constant for all later times is `1/sqrt` of this.
pub(crate) fn superposition_norm0(state: &InitialState, grid: &Arc<SpatialGrid>) -> Result<f64> {
    let psi = raw_superposition_at(state, 0.0, grid)?;
    let norm0 = psi.norm_squared();
    if norm0 <= 0.0 {
        return Err(Error::Usage("superposition has zero norm".into()));
    }
    Ok(norm0)
}

fn raw_superposition_at(
    state: &InitialState,
    t: f64,
    grid: &Arc<SpatialGrid>,
) -> Result<WaveFunction> {
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.len()];
    for spec in state.packets() {
        spec.check_support(grid, t)?;
        for (a, x) in amps.iter_mut().zip(grid.positions()) {
            *a += spec.weight * spec.amplitude_at(x, t);
        }
    }
    WaveFunction::new(Arc::clone(grid), amps)
}

/// Closed-form free evolution of a superposition.
///
/// Each component evolves independently; one shared normalization constant is
/// fixed from the t = 0 grid norm and reused at all times, which is exact
/// because free evolution is unitary.
pub fn analytic_superposition_evolution(
    state: &InitialState,
    t: f64,
    grid: &Arc<SpatialGrid>,
) -> Result<WaveFunction> {
    let scale = Complex64::new(1.0 / superposition_norm0(state, grid)?.sqrt(), 0.0);
    Ok(raw_superposition_at(state, t, grid)?.scaled(scale))
}

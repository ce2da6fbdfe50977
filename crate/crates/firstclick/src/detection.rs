//! Detector geometry and the click / no-click projection pair.
//!
//! The projectors are sharp masks on the samples in `[a, b)`: no fractional
//! boundary weights, so the projector algebra (`K^2 = K`, `K0 K1 = 0`,
//! `K0 + K1 = 1`) holds exactly on the grid. Neither projector renormalizes:
//! sub-normalized branches carry their joint probabilities directly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::WaveFunction;

/// How the detector couples to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// Projects on the whole region `[a, b)`.
    FiniteSize,
    /// Ideal point-like readout of the density at the left boundary `a`;
    /// used only as a memoryless reference, never for back-action.
    PointLikeAtA,
}

/// A detector occupying `[a, b)`, optionally with a time resolution for
/// first-click runs.
///
/// Point-like detectors ignore `b` for projection but keep it so the region
/// length `b - a` stays reportable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub a: f64,
    pub b: f64,
    pub kind: DetectorKind,
    /// Spacing between detection attempts in `t0`.
    pub delta_t: Option<f64>,
}

impl DetectorSpec {
    pub fn finite(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, DetectorKind::FiniteSize, None)
    }

    pub fn point_like(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, DetectorKind::PointLikeAtA, None)
    }

    pub fn new(a: f64, b: f64, kind: DetectorKind, delta_t: Option<f64>) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Config(format!("detector needs a < b, got [{a}, {b}]")));
        }
        if let Some(dt) = delta_t {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("time resolution must be positive, got {dt}")));
            }
        }
        Ok(Self { a, b, kind, delta_t })
    }

    pub fn with_delta_t(mut self, delta_t: f64) -> Result<Self> {
        if !(delta_t > 0.0) {
            return Err(Error::Config(format!("time resolution must be positive, got {delta_t}")));
        }
        self.delta_t = Some(delta_t);
        Ok(self)
    }

    pub fn with_kind(mut self, kind: DetectorKind) -> Self {
        self.kind = kind;
        self
    }

    /// Region length, reported for both detector kinds.
    pub fn region_length(&self) -> f64 {
        self.b - self.a
    }

    fn require_covered(&self, psi: &WaveFunction) -> Result<()> {
        let g = psi.grid();
        if self.a < g.x_min() || self.b > g.x_max() {
            return Err(Error::Config(format!(
                "detector [{}, {}] extends outside grid [{}, {})",
                self.a,
                self.b,
                g.x_min(),
                g.x_max()
            )));
        }
        Ok(())
    }
}

/// Click projector: keep amplitudes inside `[a, b)`, zero the rest.
pub fn apply_k1(det: &DetectorSpec, psi: &WaveFunction) -> Result<WaveFunction> {
    if det.kind != DetectorKind::FiniteSize {
        return Err(Error::Usage("click projector requires a finite-size detector".into()));
    }
    det.require_covered(psi)?;
    let range = psi.grid().index_range(det.a, det.b)?;
    let zero = Complex64::new(0.0, 0.0);
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, a)| if range.contains(&j) { *a } else { zero })
        .collect();
    WaveFunction::new(psi.grid().clone(), amps)
}

/// No-click projector: complement mask of [`apply_k1`].
pub fn apply_k0(det: &DetectorSpec, psi: &WaveFunction) -> Result<WaveFunction> {
    if det.kind != DetectorKind::FiniteSize {
        return Err(Error::Usage("no-click projector requires a finite-size detector".into()));
    }
    det.require_covered(psi)?;
    let range = psi.grid().index_range(det.a, det.b)?;
    let zero = Complex64::new(0.0, 0.0);
    let amps = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(j, a)| if range.contains(&j) { zero } else { *a })
        .collect();
    WaveFunction::new(psi.grid().clone(), amps)
}

/// Probability density `|psi(a)|^2` read at the grid sample nearest to the
/// left boundary (ties resolve to the smaller index).
pub fn point_density(det: &DetectorSpec, psi: &WaveFunction) -> Result<f64> {
    if det.kind != DetectorKind::PointLikeAtA {
        return Err(Error::Usage("point density requires a point-like detector".into()));
    }
    let j = psi.grid().nearest_index(det.a)?;
    Ok(psi.amplitudes()[j].norm_sqr())
}

//! Free evolution `U(dt) = exp(-i p^2 dt / 2m)` by the spectral method, plus
//! a dense-matrix brute-force oracle for small grids.
//!
//! The propagator is the hot loop of a first-click run, so everything that
//! can be precomputed is: the FFT plans and the momentum phase table are
//! built once per `(grid, dt)` and each step then costs two transforms and
//! one complex multiply per sample. Momentum-space evolution is exact for
//! free dynamics; the only numerical errors are discretization, pad
//! truncation and round-off.
//!
//! Zero samples are appended on both sides of the grid before each
//! transform and stripped afterwards. Whatever probability mass ends up in
//! those guard bands is truncated and reported as leaked mass; a single step
//! leaking more than [`WRAP_GUARD_MAX_LEAK`] aborts the run, since from that
//! point on the periodic transform would fold escaping tails back into the
//! physical window as spurious arrivals.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{dft_momenta, SpatialGrid, WaveFunction};
use crate::packet::{HBAR, MASS};

/// Mass allowed into the pad region per step before the wrap-around guard
/// aborts.
pub const WRAP_GUARD_MAX_LEAK: f64 = 1e-6;

/// Largest grid the dense oracle accepts.
pub const DENSE_ORACLE_MAX_POINTS: usize = 256;

/// Cached spectral propagator for one `(grid, dt)` pair.
pub struct SpectralPropagator {
    grid: Arc<SpatialGrid>,
    dt: f64,
    pad_points: usize,
    padded_len: usize,
    phases: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPropagator")
            .field("dt", &self.dt)
            .field("pad_points", &self.pad_points)
            .field("padded_len", &self.padded_len)
            .finish()
    }
}

fn kinetic_phase(p: f64, dt: f64) -> Complex64 {
    Complex64::from_polar(1.0, -p * p * dt / (2.0 * MASS * HBAR))
}

impl SpectralPropagator {
    /// Build the phase cache for `dt` with `pad_points` zero samples per
    /// side. The padded length `n + 2 pad_points` must be a power of two.
    ///
    /// The default padding doubles the domain (`pad_points = n/2`), which
    /// keeps wrap-around images a full grid length away.
    pub fn new(grid: Arc<SpatialGrid>, dt: f64, pad_points: Option<usize>) -> Result<Self> {
        let n = grid.len();
        let pad_points = pad_points.unwrap_or(n / 2);
        let padded_len = n + 2 * pad_points;
        if !padded_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "padded length {padded_len} (= {n} + 2*{pad_points}) must be a power of two"
            )));
        }
        if !dt.is_finite() {
            return Err(Error::Config(format!("time step must be finite, got {dt}")));
        }
        let phases =
            dft_momenta(padded_len, grid.dx()).iter().map(|&p| kinetic_phase(p, dt)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(padded_len);
        let inv = planner.plan_fft_inverse(padded_len);
        Ok(Self { grid, dt, pad_points, padded_len, phases, fwd, inv })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn pad_points(&self) -> usize {
        self.pad_points
    }

    /// Cached phase table over the padded momentum grid.
    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    /// Advance one step, discarding the leak report.
    pub fn step(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.step_with_leak(psi).map(|(out, _)| out)
    }

    /// Advance one step and report the probability mass truncated from the
    /// pad region.
    pub fn step_with_leak(&self, psi: &WaveFunction) -> Result<(WaveFunction, f64)> {
        if psi.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::Usage("state lives on a different grid".into()));
        }
        let n = self.grid.len();
        let pad = self.pad_points;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.padded_len];
        buf[pad..pad + n].copy_from_slice(psi.amplitudes());

        // Scratch is per invocation so shared propagators stay thread-safe.
        let mut scratch =
            vec![
                Complex64::new(0.0, 0.0);
                self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len())
            ];
        self.fwd.process_with_scratch(&mut buf, &mut scratch);
        for (b, ph) in buf.iter_mut().zip(&self.phases) {
            *b *= ph;
        }
        self.inv.process_with_scratch(&mut buf, &mut scratch);

        let scale = 1.0 / self.padded_len as f64;
        let leaked =
            buf[..pad].iter().chain(&buf[pad + n..]).map(|c| (c * scale).norm_sqr()).sum::<f64>()
                * self.grid.dx();
        if leaked > WRAP_GUARD_MAX_LEAK {
            return Err(Error::WrapAroundGuard { leaked, limit: WRAP_GUARD_MAX_LEAK });
        }
        let amps = buf[pad..pad + n].iter().map(|c| c * scale).collect();
        Ok((WaveFunction::new(Arc::clone(&self.grid), amps)?, leaked))
    }
}

/// Brute-force free evolution: build the full `n x n` step matrix from
/// explicit DFT synthesis/analysis matrices and a diagonal phase, then apply
/// it by direct matrix-vector product.
///
/// Deliberately independent of the FFT path (and of any padding) so the two
/// routes check each other. Guarded to small grids because of the `O(n^3)`
/// matrix assembly.
pub fn dense_oracle_step(
    grid: &Arc<SpatialGrid>,
    dt: f64,
    psi: &WaveFunction,
) -> Result<WaveFunction> {
    let n = grid.len();
    if n > DENSE_ORACLE_MAX_POINTS {
        return Err(Error::Usage(format!(
            "dense oracle is limited to {DENSE_ORACLE_MAX_POINTS} points, got {n}"
        )));
    }
    if psi.grid().as_ref() != grid.as_ref() {
        return Err(Error::Usage("state lives on a different grid".into()));
    }
    // Twiddle with exact integer reduction of j*k mod n keeps angles small.
    let twiddle = |j: usize, k: usize, sign: f64| -> Complex64 {
        let r = (j * k) % n;
        Complex64::from_polar(1.0, sign * std::f64::consts::TAU * r as f64 / n as f64)
    };
    let phases: Vec<Complex64> =
        dft_momenta(n, grid.dx()).iter().map(|&p| kinetic_phase(p, dt)).collect();
    // Rows of D * A: analysis matrix scaled by the diagonal phase.
    let mut da = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for j in 0..n {
            da[k * n + j] = phases[k] * twiddle(k, j, -1.0);
        }
    }
    // U = S * (D A) / n with S the synthesis matrix.
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for k in 0..n {
            let s = twiddle(j, k, 1.0);
            for m in 0..n {
                u[j * n + m] += s * da[k * n + m];
            }
        }
    }
    let scale = 1.0 / n as f64;
    let amps: Vec<Complex64> = (0..n)
        .map(|j| {
            u[j * n..(j + 1) * n]
                .iter()
                .zip(psi.amplitudes())
                .map(|(ujm, am)| ujm * am)
                .sum::<Complex64>()
                * scale
        })
        .collect();
    WaveFunction::new(Arc::clone(grid), amps)
}

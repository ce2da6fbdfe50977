//! Uniform 1-D position grid, its conjugate momentum grid, and the
//! quadrature primitives everything else is built on.
//!
//! Conventions, fixed once and used everywhere:
//! * samples are left-closed / right-open: `x_j = x_min + j*dx` for
//!   `j = 0..n-1`, and `x_max` itself is not a sample;
//! * all integrals are plain Riemann sums with weight `dx`, which is the
//!   measure implied by the discrete Fourier transform;
//! * the forward transform is unnormalized and the inverse carries `1/n`,
//!   so `sum |psi_j|^2 dx = dx^2 * sum |psi~_k|^2 dp / (2 pi)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance within which a state is considered normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Uniform spatial discretization together with its momentum samples.
///
/// Momenta are stored in standard DFT layout: `p_k = 2 pi f_k / (n dx)` with
/// `f_k = k` for `k < n/2` and `f_k = k - n` otherwise, so `max |p| = pi/dx`.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
    momenta: Vec<f64>,
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.x_min == other.x_min && self.x_max == other.x_max && self.n_points == other.n_points
    }
}

/// Momentum samples in DFT order for an arbitrary transform length.
pub(crate) fn dft_momenta(len: usize, dx: f64) -> Vec<f64> {
    let span = len as f64 * dx;
    (0..len)
        .map(|k| {
            let f = if k < len / 2 { k as f64 } else { k as f64 - len as f64 };
            std::f64::consts::TAU * f / span
        })
        .collect()
}

impl SpatialGrid {
    /// Build a grid over `[x_min, x_max)` with `n_points` samples.
    ///
    /// `n_points` must be a power of two and at least 8 so that the spectral
    /// propagator and the dense transform oracle agree exactly on layout.
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::Config(format!("grid needs x_max > x_min, got [{x_min}, {x_max}]")));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        let dx = (x_max - x_min) / n_points as f64;
        let momenta = dft_momenta(n_points, dx);
        Ok(Self { x_min, x_max, n_points, dx, momenta })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Position of sample `j`.
    pub fn position(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    /// Iterator over all sample positions.
    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.position(j))
    }

    /// Momentum samples in DFT order.
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    /// Index range of samples falling in `[a, b)`.
    ///
    /// A sample exactly at `a` is inside, one exactly at `b` is outside.
    pub fn index_range(&self, a: f64, b: f64) -> Result<std::ops::Range<usize>> {
        if !(a < b) {
            return Err(Error::Usage(format!("interval needs a < b, got [{a}, {b})")));
        }
        // Smallest j with position(j) >= x, corrected for round-off in the
        // initial division.
        let first_at_or_after = |x: f64| -> usize {
            let mut j =
                ((x - self.x_min) / self.dx).ceil().clamp(0.0, self.n_points as f64) as usize;
            while j > 0 && self.position(j - 1) >= x {
                j -= 1;
            }
            while j < self.n_points && self.position(j) < x {
                j += 1;
            }
            j
        };
        let lo = first_at_or_after(a);
        let hi = first_at_or_after(b).max(lo);
        Ok(lo..hi)
    }

    /// Same lattice widened by `pad` samples on each side.
    ///
    /// The spacing is carried over bit-exactly, so every sample of `self`
    /// stays a sample of the widened grid and interval masks keep selecting
    /// the same physical points.
    pub fn with_guard_bands(&self, pad: usize) -> Result<SpatialGrid> {
        if pad == 0 {
            return Ok(self.clone());
        }
        let n_points = self.n_points + 2 * pad;
        if !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "padded length {n_points} (= {} + 2*{pad}) must be a power of two",
                self.n_points
            )));
        }
        let x_min = self.x_min - pad as f64 * self.dx;
        let x_max = x_min + n_points as f64 * self.dx;
        let momenta = dft_momenta(n_points, self.dx);
        Ok(SpatialGrid { x_min, x_max, n_points, dx: self.dx, momenta })
    }

    /// Index of the sample nearest to `x`; ties resolve to the smaller index.
    pub fn nearest_index(&self, x: f64) -> Result<usize> {
        if x < self.x_min || x >= self.x_max {
            return Err(Error::Config(format!(
                "position {x} outside grid [{}, {})",
                self.x_min, self.x_max
            )));
        }
        let raw = (x - self.x_min) / self.dx;
        let floor = raw.floor();
        let frac = raw - floor;
        let mut j = if frac > 0.5 { floor as usize + 1 } else { floor as usize };
        j = j.min(self.n_points - 1);
        Ok(j)
    }
}

/// Complex amplitudes sampled on a [`SpatialGrid`].
///
/// Snapshots are immutable values: every transformation returns a new
/// `WaveFunction` and never mutates its input.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Arc<SpatialGrid>,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Arc<SpatialGrid>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Usage(format!(
                "amplitude count {} does not match grid size {}",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn zero(grid: Arc<SpatialGrid>) -> Self {
        let n = grid.len();
        Self { grid, amplitudes: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `sum_j |psi_j|^2 dx`.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Inner product `<self|psi> = sum_j conj(self_j) psi_j dx`.
    pub fn overlap(&self, psi: &WaveFunction) -> Result<Complex64> {
        if self.grid.as_ref() != psi.grid.as_ref() {
            return Err(Error::Usage("overlap of states on different grids".into()));
        }
        let s: Complex64 =
            self.amplitudes.iter().zip(&psi.amplitudes).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.dx())
    }

    /// Probability carried by samples in `[a, b)`.
    pub fn probability_in(&self, a: f64, b: f64) -> Result<f64> {
        let range = self.grid.index_range(a, b)?;
        Ok(self.amplitudes[range].iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx())
    }

    /// New snapshot scaled by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> WaveFunction {
        WaveFunction {
            grid: Arc::clone(&self.grid),
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// New snapshot rescaled to unit norm.
    pub fn normalized(&self) -> Result<WaveFunction> {
        let n2 = self.norm_squared();
        if n2 <= 0.0 {
            return Err(Error::Usage("cannot normalize a zero state".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// Pointwise sum of two snapshots on the same grid.
    pub fn add(&self, other: &WaveFunction) -> Result<WaveFunction> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::Usage("sum of states on different grids".into()));
        }
        Ok(WaveFunction {
            grid: Arc::clone(&self.grid),
            amplitudes: self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a + b).collect(),
        })
    }
}

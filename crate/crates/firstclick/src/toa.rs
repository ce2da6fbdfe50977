//! The two arrival-time engines and their summary statistics.
//!
//! * The memoryless distribution is the Bayes-normalized probability of
//!   finding the particle in the detector region at time t, with no
//!   back-action: repeated detections of the same particle are allowed.
//! * The first-click distribution conditions on the detector *not* having
//!   fired at any earlier attempt. Attempts are spaced by the detector's
//!   time resolution; each null outcome projects the state onto the
//!   complement of the detector region before the next free-evolution step.
//!
//! Branches are never renormalized between attempts, so the recorded click
//! weights are joint probabilities and `sum(w) + survival` must come back
//! as 1 up to round-off. That single identity exercises projector
//! completeness, propagator unitarity and the domain bookkeeping at once,
//! so a violation beyond [`CONSERVATION_ABORT_TOLERANCE`] aborts the run.
//!
//! Each projection cuts sharp edges into the state, and the free propagator
//! radiates a slowly decaying (~1/distance) amplitude tail from every such
//! edge. Truncating that tail at the grid boundary would silently absorb
//! probability at a level far above round-off, so a first-click run instead
//! evolves unitarily on a widened run domain: the detection window plus
//! guard bands ([`PropagationConfig::pad_points`] samples per side).
//! Amplitude that crosses into the bands stays part of the never-clicked
//! branch (it left the window without a detection) and is reported as
//! escaped mass; only when mass approaches the outer rim of the bands:
//! where periodic wrap-around would fold it back toward the detector: does
//! the run abort.

use std::sync::Arc;

use crate::detection::{apply_k0, apply_k1, point_density, DetectorKind, DetectorSpec};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, WaveFunction};
use crate::packet::{analytic_superposition_evolution, SOFT_SUPPORT_MARGIN};
use crate::packet::{superposition_amplitude, superposition_norm0, InitialState};
use crate::propagator::SpectralPropagator;

/// Abort threshold for the detection-history probability balance.
pub const CONSERVATION_ABORT_TOLERANCE: f64 = 1e-8;

/// Probability density (per l0) allowed at any sample in the outer quarter
/// of the guard bands before a first-click run aborts with a wrap-around
/// error.
///
/// Projection edges radiate a broadband 1/k^2 momentum tail that
/// legitimately fills the bands as a diffuse, low-density background; a
/// packet about to wrap arrives as localized density orders of magnitude
/// above that floor, which is what this guard fires on.
pub const RIM_GUARD_MAX_DENSITY: f64 = 1e-2;

/// Bayes denominators at or below this are treated as "never reaches the
/// detector".
pub const NORMALIZATION_FLOOR: f64 = 1e-15;

/// Minimum number of attempts a resolution-sweep entry is widened to, so
/// summary statistics stay defined even for very coarse resolutions.
pub const MIN_SWEEP_ATTEMPTS: usize = 3;

/// Simulation window `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    t_start: f64,
    t_end: f64,
}

impl TimeWindow {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::Config(format!(
                "window needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        Ok(Self { t_start, t_end })
    }

    /// Window centered on t = 0 with total duration `total`.
    pub fn centered(total: f64) -> Result<Self> {
        Self::new(-0.5 * total, 0.5 * total)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Attempt times `t_i = t_start + i delta_t` for `i = 0..n-1`; the first
    /// attempt happens at `t_start` and `t_end` itself is never probed.
    ///
    /// `delta_t` must divide the window duration (up to round-off).
    pub fn attempt_times(&self, delta_t: f64) -> Result<Vec<f64>> {
        if !(delta_t > 0.0) {
            return Err(Error::Config(format!("time resolution must be positive, got {delta_t}")));
        }
        let ratio = self.duration() / delta_t;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::Config(format!(
                "window duration {} is not an integer multiple of delta_t {delta_t}",
                self.duration()
            )));
        }
        Ok((0..n as usize).map(|i| self.t_start + i as f64 * delta_t).collect())
    }
}

/// Memoryless arrival-time curve on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaDistribution {
    /// Midpoints of the time bins, sorted ascending.
    pub times: Vec<f64>,
    /// Normalized probability density per sample, integrating to 1 over the
    /// window.
    pub density: Vec<f64>,
    /// Bayes denominator before the division.
    pub normalization_integral: f64,
}

/// Outcome of a first-click run.
#[derive(Debug, Clone)]
pub struct FirstClickResult {
    pub attempt_times: Vec<f64>,
    /// Joint probability of the first click happening at attempt i.
    pub click_weights: Vec<f64>,
    /// `click_weights` normalized over the clicking branches.
    pub conditional_pmf: Vec<f64>,
    /// `conditional_pmf / delta_t`, comparable to a density.
    pub conditional_density: Vec<f64>,
    /// Weight of the branch that never clicked, including any mass that
    /// left the detection window.
    pub survival_probability: f64,
    pub delta_t: f64,
    /// Never-clicked mass sitting outside the detection window at the end
    /// of the run (a subset of `survival_probability`).
    pub escaped_mass: f64,
    /// Signed deviation of `sum(w) + survival` from 1.
    pub conservation_residual: f64,
    conditioned_states: Option<Vec<WaveFunction>>,
    survival_snapshot: Option<WaveFunction>,
}

impl FirstClickResult {
    pub fn total_click_probability(&self) -> f64 {
        self.click_weights.iter().sum()
    }

    /// Per-attempt clicked branches `K1 |psi_c(t_i)>`, unnormalized.
    pub fn conditioned_states(&self) -> Result<&[WaveFunction]> {
        self.conditioned_states
            .as_deref()
            .ok_or_else(|| Error::Usage("snapshots were not recorded for this run".into()))
    }

    /// The never-clicked branch evolved to the end of the window,
    /// unnormalized; its norm equals the survival probability.
    pub fn survival_state(&self) -> Result<&WaveFunction> {
        self.survival_snapshot
            .as_ref()
            .ok_or_else(|| Error::Usage("snapshots were not recorded for this run".into()))
    }
}

/// Propagation options for a first-click run.
#[derive(Debug, Clone, Copy, Default)]
pub struct PropagationConfig {
    /// Guard-band samples added on each side of the detection window for
    /// the run domain; `None` doubles the domain, `Some(0)` runs purely
    /// periodic on the window itself.
    pub pad_points: Option<usize>,
    /// Keep per-attempt clicked branches and the survival state.
    pub record_snapshots: bool,
}

// The memoryless numerator evaluates the closed form directly at the
// detector samples, so no grid-support constraint applies beyond the
// detector itself being covered.
fn numerator_at(
    state: &InitialState,
    det: &DetectorSpec,
    grid: &Arc<SpatialGrid>,
    inv_norm0: f64,
    t: f64,
) -> Result<f64> {
    match det.kind {
        DetectorKind::FiniteSize => {
            if det.a < grid.x_min() || det.b > grid.x_max() {
                return Err(Error::Config(format!(
                    "detector [{}, {}] extends outside grid [{}, {})",
                    det.a,
                    det.b,
                    grid.x_min(),
                    grid.x_max()
                )));
            }
            let range = grid.index_range(det.a, det.b)?;
            Ok(range
                .map(|j| {
                    (superposition_amplitude(state, grid.position(j), t) * inv_norm0).norm_sqr()
                })
                .sum::<f64>()
                * grid.dx())
        }
        DetectorKind::PointLikeAtA => {
            let j = grid.nearest_index(det.a)?;
            Ok((superposition_amplitude(state, grid.position(j), t) * inv_norm0).norm_sqr())
        }
    }
}

/// Memoryless arrival-time distribution via the closed-form evolution.
///
/// The numerator is the probability in the detector region (or the boundary
/// density for a point-like detector) at each of `time_samples` midpoint
/// times; the denominator is its Riemann sum over the window.
pub fn memoryless_distribution(
    state: &InitialState,
    det: &DetectorSpec,
    window: &TimeWindow,
    time_samples: usize,
    grid: &Arc<SpatialGrid>,
) -> Result<ToaDistribution> {
    if time_samples < 16 {
        return Err(Error::Usage(format!(
            "memoryless curve needs at least 16 time samples, got {time_samples}"
        )));
    }
    let dt = window.duration() / time_samples as f64;
    let inv_norm0 = 1.0 / superposition_norm0(state, grid)?.sqrt();
    let times: Vec<f64> =
        (0..time_samples).map(|k| window.t_start() + (k as f64 + 0.5) * dt).collect();
    let numerators: Vec<f64> = times
        .iter()
        .map(|&t| numerator_at(state, det, grid, inv_norm0, t))
        .collect::<Result<_>>()?;
    let normalization_integral: f64 = numerators.iter().sum::<f64>() * dt;
    if normalization_integral <= NORMALIZATION_FLOOR {
        return Err(Error::NeverReachesDetector(normalization_integral));
    }
    let density = numerators.iter().map(|n| n / normalization_integral).collect();
    Ok(ToaDistribution { times, density, normalization_integral })
}

/// Same distribution computed with the spectral propagator instead of the
/// closed form; a cross-check route, not the production path.
pub fn memoryless_distribution_spectral(
    state: &InitialState,
    det: &DetectorSpec,
    window: &TimeWindow,
    time_samples: usize,
    grid: &Arc<SpatialGrid>,
    pad_points: Option<usize>,
) -> Result<ToaDistribution> {
    if time_samples < 16 {
        return Err(Error::Usage(format!(
            "memoryless curve needs at least 16 time samples, got {time_samples}"
        )));
    }
    let dt = window.duration() / time_samples as f64;
    let half = SpectralPropagator::new(Arc::clone(grid), 0.5 * dt, pad_points)?;
    let full = SpectralPropagator::new(Arc::clone(grid), dt, pad_points)?;
    let mut psi = analytic_superposition_evolution(state, window.t_start(), grid)?;
    psi = half.step(&psi)?;
    let mut times = Vec::with_capacity(time_samples);
    let mut numerators = Vec::with_capacity(time_samples);
    for k in 0..time_samples {
        times.push(window.t_start() + (k as f64 + 0.5) * dt);
        let num = match det.kind {
            DetectorKind::FiniteSize => psi.probability_in(det.a, det.b)?,
            DetectorKind::PointLikeAtA => point_density(det, &psi)?,
        };
        numerators.push(num);
        if k + 1 < time_samples {
            psi = full.step(&psi)?;
        }
    }
    let normalization_integral: f64 = numerators.iter().sum::<f64>() * dt;
    if normalization_integral <= NORMALIZATION_FLOOR {
        return Err(Error::NeverReachesDetector(normalization_integral));
    }
    let density = numerators.iter().map(|n| n / normalization_integral).collect();
    Ok(ToaDistribution { times, density, normalization_integral })
}

/// First-click distribution over the attempt schedule of the window.
///
/// Starting from the state prepared at `t_start` on the run domain (window
/// plus guard bands), each attempt records the clicked branch weight,
/// projects onto the no-click subspace and evolves by one resolution step.
/// The survival probability is read right after the last projection;
/// unitarity makes any further evolution irrelevant to it.
pub fn first_click_distribution(
    state: &InitialState,
    det: &DetectorSpec,
    window: &TimeWindow,
    grid: &Arc<SpatialGrid>,
    config: &PropagationConfig,
) -> Result<FirstClickResult> {
    if det.kind != DetectorKind::FiniteSize {
        return Err(Error::Usage("first-click runs need a finite-size detector".into()));
    }
    let delta_t = det
        .delta_t
        .ok_or_else(|| Error::Config("detector has no time resolution configured".into()))?;
    let attempt_times = window.attempt_times(delta_t)?;
    let n = attempt_times.len();
    let pad = config.pad_points.unwrap_or(grid.len() / 2);
    let run_grid = Arc::new(grid.with_guard_bands(pad)?);
    // All steps share one resolution, so the whole run costs one phase
    // table and two transforms plus one multiply per attempt. The run
    // domain is fixed and periodic; nothing is truncated between attempts.
    let prop = SpectralPropagator::new(Arc::clone(&run_grid), delta_t, Some(0))?;
    let rim = pad / 4;

    // Prepare at t_start and pin the norm to exactly one, so the history
    // tree starts from unit probability.
    let mut psi =
        analytic_superposition_evolution(state, window.t_start(), &run_grid)?.normalized()?;

    let mut click_weights = Vec::with_capacity(n);
    let mut conditioned_states = config.record_snapshots.then(Vec::new);
    for i in 0..n {
        let clicked = apply_k1(det, &psi)?;
        click_weights.push(clicked.norm_squared());
        if let Some(states) = conditioned_states.as_mut() {
            states.push(clicked);
        }
        psi = apply_k0(det, &psi)?;
        if i + 1 < n {
            psi = prop.step(&psi)?;
            if rim > 0 {
                let amps = psi.amplitudes();
                let rim_peak = amps[..rim]
                    .iter()
                    .chain(&amps[run_grid.len() - rim..])
                    .map(|a| a.norm_sqr())
                    .fold(0.0, f64::max);
                if rim_peak > RIM_GUARD_MAX_DENSITY {
                    return Err(Error::WrapAroundGuard {
                        leaked: rim_peak,
                        limit: RIM_GUARD_MAX_DENSITY,
                    });
                }
            }
        }
    }
    let survival_probability = psi.norm_squared();
    let escaped_mass = if pad > 0 {
        psi.probability_in(run_grid.x_min(), grid.x_min())?
            + psi.probability_in(grid.x_max(), run_grid.x_max())?
    } else {
        0.0
    };
    let total: f64 = click_weights.iter().sum();
    let conservation_residual = total + survival_probability - 1.0;
    if conservation_residual.abs() > CONSERVATION_ABORT_TOLERANCE {
        return Err(Error::ConsistencyFailure {
            residual: conservation_residual.abs(),
            escaped: escaped_mass,
        });
    }
    let conditional_pmf: Vec<f64> =
        if total > 0.0 { click_weights.iter().map(|w| w / total).collect() } else { vec![0.0; n] };
    let conditional_density = conditional_pmf.iter().map(|p| p / delta_t).collect();
    let survival_snapshot = if config.record_snapshots {
        // Evolve the never-clicked branch to the end of the window.
        Some(prop.step(&psi)?)
    } else {
        None
    };
    Ok(FirstClickResult {
        attempt_times,
        click_weights,
        conditional_pmf,
        conditional_density,
        survival_probability,
        delta_t,
        escaped_mass,
        conservation_residual,
        conditioned_states,
        survival_snapshot,
    })
}

/// Summary statistics of a sampled distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub peak_time: f64,
    pub peak_height: f64,
    /// Full width at half maximum, by linear interpolation around the
    /// global peak; clamped to the sampled range when a flank never drops
    /// below half maximum.
    pub fwhm: f64,
    pub mean_arrival: f64,
    /// Strict local maxima with topographic prominence of at least 5% of
    /// the peak height.
    pub local_maxima_count: usize,
}

/// Fraction of the peak height a local maximum must rise above its
/// surroundings to count as a fringe.
pub const PROMINENCE_FRACTION: f64 = 0.05;

/// Compute [`DistributionStats`] for uniformly sampled `(times, density)`.
pub fn stats(times: &[f64], density: &[f64]) -> Result<DistributionStats> {
    if times.len() != density.len() {
        return Err(Error::Usage("times and density lengths differ".into()));
    }
    if times.len() < 3 {
        return Err(Error::Usage("statistics need at least 3 samples".into()));
    }
    let (peak_idx, &peak_height) = density
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("density must not contain NaN"))
        .expect("non-empty");
    if peak_height <= 0.0 {
        return Err(Error::Usage("cannot summarize an all-zero density".into()));
    }
    let peak_time = times[peak_idx];
    let half = 0.5 * peak_height;

    let mut left = times[0];
    for j in (0..peak_idx).rev() {
        if density[j] < half {
            let frac = (half - density[j]) / (density[j + 1] - density[j]);
            left = times[j] + frac * (times[j + 1] - times[j]);
            break;
        }
    }
    let mut right = times[times.len() - 1];
    for j in peak_idx + 1..times.len() {
        if density[j] < half {
            let frac = (half - density[j - 1]) / (density[j] - density[j - 1]);
            right = times[j - 1] + frac * (times[j] - times[j - 1]);
            break;
        }
    }
    let fwhm = right - left;

    let dt = times[1] - times[0];
    let mean_arrival = times.iter().zip(density).map(|(t, d)| t * d).sum::<f64>() * dt;

    let mut local_maxima_count = 0;
    for i in 1..density.len() - 1 {
        if !(density[i] > density[i - 1] && density[i] > density[i + 1]) {
            continue;
        }
        let mut left_min = density[i];
        for j in (0..i).rev() {
            if density[j] > density[i] {
                break;
            }
            left_min = left_min.min(density[j]);
        }
        let mut right_min = density[i];
        for &d in &density[i + 1..] {
            if d > density[i] {
                break;
            }
            right_min = right_min.min(d);
        }
        let prominence = density[i] - left_min.max(right_min);
        if prominence >= PROMINENCE_FRACTION * peak_height {
            local_maxima_count += 1;
        }
    }

    Ok(DistributionStats { peak_time, peak_height, fwhm, mean_arrival, local_maxima_count })
}

/// One entry of a resolution sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub delta_t: f64,
    /// Possibly widened window actually used for this entry.
    pub window: TimeWindow,
    /// Possibly widened grid actually used for this entry.
    pub grid: Arc<SpatialGrid>,
    pub result: FirstClickResult,
    pub stats: DistributionStats,
}

/// Widen the window so the attempt schedule has at least
/// [`MIN_SWEEP_ATTEMPTS`] entries and its duration is an exact multiple of
/// `delta_t`; the start (and with it the attempt-at-`t_start` convention) is
/// preserved.
pub fn sweep_window(window: &TimeWindow, delta_t: f64) -> Result<TimeWindow> {
    if !(delta_t > 0.0) {
        return Err(Error::Config(format!("time resolution must be positive, got {delta_t}")));
    }
    let ratio = window.duration() / delta_t;
    let rounded = ratio.round();
    let n = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    };
    let n = n.max(MIN_SWEEP_ATTEMPTS);
    TimeWindow::new(window.t_start(), window.t_start() + n as f64 * delta_t)
}

/// Extend a grid (preserving its spacing and sample lattice) until every
/// packet keeps a comfortable support margin over the whole span of attempt
/// times. Returns the input grid unchanged when it already suffices.
pub fn fit_grid_to_window(
    state: &InitialState,
    base: &Arc<SpatialGrid>,
    window: &TimeWindow,
) -> Result<Arc<SpatialGrid>> {
    // Slightly above the soft margin so extended runs stay warning-free.
    let margin = SOFT_SUPPORT_MARGIN + 0.5;
    let mut lo = base.x_min();
    let mut hi = base.x_max();
    let steps = 64;
    for k in 0..=steps {
        let t = window.t_start() + window.duration() * k as f64 / steps as f64;
        for p in state.packets() {
            let w = p.width_at(t);
            lo = lo.min(p.mean_position(t) - margin * w);
            hi = hi.max(p.mean_position(t) + margin * w);
        }
    }
    if lo >= base.x_min() && hi <= base.x_max() {
        return Ok(Arc::clone(base));
    }
    let dx = base.dx();
    let extra_left = ((base.x_min() - lo) / dx).ceil().max(0.0);
    let x_min = base.x_min() - extra_left * dx;
    let needed = ((hi - x_min) / dx).ceil() as usize;
    let n = needed.next_power_of_two().max(base.len());
    Ok(Arc::new(SpatialGrid::new(x_min, x_min + n as f64 * dx, n)?))
}

/// Independent first-click runs for each resolution in `delta_ts`.
///
/// Coarse resolutions may need a longer window (to keep at least
/// [`MIN_SWEEP_ATTEMPTS`] attempts) and with it a larger grid; both
/// adjustments are recorded in the returned entries.
pub fn resolution_sweep(
    state: &InitialState,
    det: &DetectorSpec,
    window: &TimeWindow,
    grid: &Arc<SpatialGrid>,
    delta_ts: &[f64],
    config: &PropagationConfig,
) -> Result<Vec<SweepEntry>> {
    delta_ts
        .iter()
        .map(|&delta_t| {
            let entry_window = sweep_window(window, delta_t)?;
            // A widened window can carry the packets far beyond the base
            // grid, so the detection window itself must grow with it. For
            // unwidened entries the guard bands absorb marginal overshoot.
            let entry_grid = if entry_window.duration() > window.duration() {
                fit_grid_to_window(state, grid, &entry_window)?
            } else {
                Arc::clone(grid)
            };
            let entry_det = det.with_kind(DetectorKind::FiniteSize).with_delta_t(delta_t)?;
            let result =
                first_click_distribution(state, &entry_det, &entry_window, &entry_grid, config)?;
            let entry_stats = stats(&result.attempt_times, &result.conditional_density)?;
            Ok(SweepEntry {
                delta_t,
                window: entry_window,
                grid: entry_grid,
                result,
                stats: entry_stats,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::GaussianSpec;

    fn grid(x_min: f64, x_max: f64, n: usize) -> Arc<SpatialGrid> {
        Arc::new(SpatialGrid::new(x_min, x_max, n).unwrap())
    }

    fn single(x0: f64, p0: f64, sigma0: f64) -> InitialState {
        InitialState::single(GaussianSpec::new(x0, p0, sigma0)).unwrap()
    }

    #[test]
    fn window_validation_and_attempt_schedule() {
        assert!(TimeWindow::new(1.0, 1.0).is_err());
        let w = TimeWindow::centered(8.0).unwrap();
        assert_eq!(w.t_start(), -4.0);
        assert_eq!(w.duration(), 8.0);
        let times = w.attempt_times(1.0).unwrap();
        assert_eq!(times, vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let times = w.attempt_times(1.0 / 7.0).unwrap();
        assert_eq!(times.len(), 56);
        assert!((times[55] - (4.0 - 1.0 / 7.0)).abs() < 1e-12);
        assert!(w.attempt_times(3.0).is_err());
        assert!(w.attempt_times(0.0).is_err());
    }

    #[test]
    fn whole_grid_detector_gives_uniform_memoryless_density() {
        let g = grid(-64.0, 64.0, 1024);
        let state = single(0.0, 1.5, 1.0);
        let det = DetectorSpec::finite(-64.0, 64.0).unwrap();
        let w = TimeWindow::centered(4.0).unwrap();
        let dist = memoryless_distribution(&state, &det, &w, 64, &g).unwrap();
        for d in &dist.density {
            assert!((d - 0.25).abs() < 1e-10);
        }
        let integral: f64 = dist.density.iter().sum::<f64>() * (4.0 / 64.0);
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn memoryless_density_is_normalized() {
        let g = grid(-60.0, 120.0, 2048);
        let state = single(5.0, 7.0, 1.0);
        let det = DetectorSpec::finite(10.0, 11.0).unwrap();
        let w = TimeWindow::centered(8.0).unwrap();
        let dist = memoryless_distribution(&state, &det, &w, 512, &g).unwrap();
        let dt = 8.0 / 512.0;
        let integral: f64 = dist.density.iter().sum::<f64>() * dt;
        assert!((integral - 1.0).abs() < 1e-12);
        assert!(dist.normalization_integral > 0.0);
    }

    #[test]
    fn mirrored_setup_reproduces_the_distribution() {
        // Parity: flipping x0, p0 and the detector about the origin leaves
        // the arrival curve unchanged sample by sample.
        let g = grid(-60.0, 120.0, 4096);
        let gm = grid(-120.0, 60.0, 4096);
        let w = TimeWindow::centered(8.0).unwrap();
        let orig = memoryless_distribution(
            &single(5.0, 7.0, 1.0),
            &DetectorSpec::finite(10.0, 11.0).unwrap(),
            &w,
            256,
            &g,
        )
        .unwrap();
        let mirrored = memoryless_distribution(
            &single(-5.0, -7.0, 1.0),
            &DetectorSpec::finite(-11.0, -10.0).unwrap(),
            &w,
            256,
            &gm,
        )
        .unwrap();
        for (a, b) in orig.density.iter().zip(&mirrored.density) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn unreachable_detector_is_reported() {
        let g = grid(-64.0, 64.0, 1024);
        // Packet speeding away from the detector region.
        let state = single(0.0, -5.0, 1.0);
        let det = DetectorSpec::finite(40.0, 50.0).unwrap();
        let w = TimeWindow::new(0.0, 2.0).unwrap();
        match memoryless_distribution(&state, &det, &w, 64, &g) {
            Err(Error::NeverReachesDetector(_)) => {}
            other => panic!("expected never-reaches error, got {other:?}"),
        }
    }

    #[test]
    fn first_click_on_whole_grid_detector_clicks_immediately() {
        let g = grid(-16.0, 16.0, 256);
        let state = single(0.0, 1.0, 1.0);
        let det = DetectorSpec::finite(-16.0, 16.0).unwrap().with_delta_t(0.5).unwrap();
        let w = TimeWindow::new(0.0, 2.0).unwrap();
        let cfg = PropagationConfig { pad_points: Some(0), ..Default::default() };
        let fc = first_click_distribution(&state, &det, &w, &g, &cfg).unwrap();
        assert_eq!(fc.click_weights.len(), 4);
        assert!((fc.click_weights[0] - 1.0).abs() < 1e-12);
        for w in &fc.click_weights[1..] {
            assert_eq!(*w, 0.0);
        }
        assert_eq!(fc.survival_probability, 0.0);
        assert!((fc.conditional_pmf[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_click_on_unreachable_detector_survives() {
        let g = grid(-64.0, 64.0, 1024);
        let state = single(0.0, -3.0, 1.0);
        let det = DetectorSpec::finite(40.0, 50.0).unwrap().with_delta_t(0.25).unwrap();
        let w = TimeWindow::new(0.0, 2.0).unwrap();
        let fc = first_click_distribution(&state, &det, &w, &g, &Default::default()).unwrap();
        for w in &fc.click_weights {
            assert!(*w <= 1e-10);
        }
        assert!((fc.survival_probability - 1.0).abs() < 1e-8);
    }

    #[test]
    fn probability_is_conserved_across_the_history_tree() {
        let g = grid(-60.0, 120.0, 2048);
        let state = single(5.0, 7.0, 1.0);
        let det = DetectorSpec::finite(10.0, 11.0).unwrap().with_delta_t(0.25).unwrap();
        let w = TimeWindow::centered(8.0).unwrap();
        let fc = first_click_distribution(&state, &det, &w, &g, &Default::default()).unwrap();
        assert!(fc.conservation_residual.abs() < 1e-10);
        let pmf_sum: f64 = fc.conditional_pmf.iter().sum();
        assert!((pmf_sum - 1.0).abs() < 1e-12);
        for (p, d) in fc.conditional_pmf.iter().zip(&fc.conditional_density) {
            assert_eq!(*d, p / 0.25);
        }
        assert!(fc.total_click_probability() > 0.5);
    }

    #[test]
    fn conditional_pmf_ignores_global_phase_and_scale_of_weights() {
        let g = grid(-60.0, 120.0, 2048);
        let det = DetectorSpec::finite(10.0, 11.0).unwrap().with_delta_t(0.5).unwrap();
        let w = TimeWindow::centered(8.0).unwrap();
        let base = InitialState::new(vec![
            GaussianSpec::new(5.0, 7.0, 1.0),
            GaussianSpec::new(-1.0, 8.0, 1.0),
        ])
        .unwrap();
        let phase = num_complex::Complex64::from_polar(2.7, 1.234);
        let rescaled = InitialState::new(
            base.packets().iter().map(|p| p.with_weight(p.weight * phase)).collect(),
        )
        .unwrap();
        let a = first_click_distribution(&base, &det, &w, &g, &Default::default()).unwrap();
        let b = first_click_distribution(&rescaled, &det, &w, &g, &Default::default()).unwrap();
        for (x, y) in a.conditional_pmf.iter().zip(&b.conditional_pmf) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn snapshots_expose_branches_consistently() {
        let g = grid(-32.0, 32.0, 512);
        let state = single(-5.0, 4.0, 1.0);
        let det = DetectorSpec::finite(0.0, 2.0).unwrap().with_delta_t(0.25).unwrap();
        let w = TimeWindow::new(-1.0, 3.0).unwrap();
        let plain = first_click_distribution(&state, &det, &w, &g, &Default::default()).unwrap();
        assert!(plain.survival_state().is_err());
        assert!(plain.conditioned_states().is_err());
        let cfg = PropagationConfig { record_snapshots: true, ..Default::default() };
        let fc = first_click_distribution(&state, &det, &w, &g, &cfg).unwrap();
        let states = fc.conditioned_states().unwrap();
        assert_eq!(states.len(), fc.attempt_times.len());
        for (s, w) in states.iter().zip(&fc.click_weights) {
            assert!((s.norm_squared() - w).abs() < 1e-12);
        }
        let survival = fc.survival_state().unwrap();
        assert!((survival.norm_squared() - fc.survival_probability).abs() < 1e-10);
    }

    #[test]
    fn survival_state_of_whole_grid_detector_is_zero() {
        let g = grid(-16.0, 16.0, 256);
        let state = single(0.0, 1.0, 1.0);
        let det = DetectorSpec::finite(-16.0, 16.0).unwrap().with_delta_t(0.5).unwrap();
        let w = TimeWindow::new(0.0, 1.0).unwrap();
        let cfg = PropagationConfig { pad_points: Some(0), record_snapshots: true };
        let fc = first_click_distribution(&state, &det, &w, &g, &cfg).unwrap();
        assert_eq!(fc.survival_state().unwrap().norm_squared(), 0.0);
    }

    #[test]
    fn guard_fires_before_an_escaping_packet_wraps() {
        // The window is long enough for the packet bulk to march through
        // the guard bands; the run must abort rather than let it wrap back.
        let g = grid(-15.0, 25.0, 512);
        let state = single(7.0, 5.0, 1.0);
        let det = DetectorSpec::finite(-2.0, -1.0).unwrap().with_delta_t(0.5).unwrap();
        let w = TimeWindow::new(0.0, 8.0).unwrap();
        match first_click_distribution(&state, &det, &w, &g, &Default::default()) {
            Err(Error::WrapAroundGuard { .. }) => {}
            other => panic!("expected wrap-around guard, got {other:?}"),
        }
    }

    #[test]
    fn stats_of_symmetric_triangle() {
        let times: Vec<f64> = (0..9).map(|k| 0.25 * k as f64).collect();
        let density: Vec<f64> = times.iter().map(|t| 1.0 - (t - 1.0).abs()).collect();
        let s = stats(&times, &density).unwrap();
        assert_eq!(s.peak_time, 1.0);
        assert_eq!(s.peak_height, 1.0);
        assert!((s.fwhm - 1.0).abs() < 1e-14);
        assert!((s.mean_arrival - 1.0).abs() < 1e-14);
        assert_eq!(s.local_maxima_count, 1);
    }

    #[test]
    fn stats_of_gaussian_density_matches_closed_form_fwhm() {
        let sigma = 0.3;
        let times: Vec<f64> = (0..2000).map(|k| -3.0 + 6.0 * k as f64 / 2000.0).collect();
        let density: Vec<f64> = times
            .iter()
            .map(|t| (-0.5 * (t / sigma).powi(2)).exp() / (sigma * (std::f64::consts::TAU).sqrt()))
            .collect();
        let s = stats(&times, &density).unwrap();
        let expected = 2.0 * (2.0 * 2.0_f64.ln()).sqrt() * sigma;
        assert!((s.fwhm - expected).abs() < 2.0 * 6.0 / 2000.0);
        assert!(s.mean_arrival.abs() < 1e-6);
    }

    #[test]
    fn stats_counts_prominent_fringes_only() {
        let density = vec![0.0, 1.0, 0.2, 0.8, 0.79, 0.8001, 0.0, 0.01, 0.0];
        let times: Vec<f64> = (0..9).map(|k| k as f64).collect();
        // The 0.8001 bump over 0.79 and the 0.01 blip lack prominence.
        let s = stats(&times, &density).unwrap();
        assert_eq!(s.local_maxima_count, 2);
    }

    #[test]
    fn stats_rejects_degenerate_input() {
        assert!(stats(&[0.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(stats(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0]).is_err());
        assert!(stats(&[0.0, 1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn sweep_singleton_matches_direct_run() {
        let g = grid(-60.0, 120.0, 2048);
        let state = single(5.0, 7.0, 1.0);
        let det = DetectorSpec::finite(10.0, 11.0).unwrap();
        let w = TimeWindow::centered(8.0).unwrap();
        let entries = resolution_sweep(&state, &det, &w, &g, &[0.5], &Default::default()).unwrap();
        assert_eq!(entries.len(), 1);
        let direct = first_click_distribution(
            &state,
            &det.with_delta_t(0.5).unwrap(),
            &w,
            &g,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(entries[0].result.click_weights, direct.click_weights);
        assert_eq!(entries[0].window, w);
        assert!(Arc::ptr_eq(&entries[0].grid, &g));
    }

    #[test]
    fn sweep_widens_window_and_grid_for_coarse_resolutions() {
        let g = grid(-60.0, 120.0, 2048);
        let state = single(5.0, 7.0, 1.0);
        let det = DetectorSpec::finite(10.0, 11.0).unwrap();
        let w = TimeWindow::centered(8.0).unwrap();
        let entries = resolution_sweep(&state, &det, &w, &g, &[70.0], &Default::default()).unwrap();
        let entry = &entries[0];
        assert_eq!(entry.result.attempt_times.len(), MIN_SWEEP_ATTEMPTS);
        assert_eq!(entry.window.duration(), 210.0);
        // Ballistic flight to the last attempt at t = 136 needs x ~ 960+.
        assert!(entry.grid.x_max() > 960.0);
        assert_eq!(entry.grid.dx(), g.dx());
        assert!(entry.result.conservation_residual.abs() < 1e-10);
    }
}

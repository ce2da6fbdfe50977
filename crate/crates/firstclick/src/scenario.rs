//! Named, parameter-complete scenarios and the report runner.
//!
//! Three demonstration scenarios ship with the crate:
//! * `fig1`: a single right-moving packet and a finite detector, comparing
//!   both memoryless references against the first-click curve;
//! * `fig2`: the same setup swept over coarser detector time resolutions;
//! * `fig3`: two packets satisfying the overtaking condition, so they reach
//!   the detector simultaneously and interfere.
//!
//! Reports are pure functions of the scenario: no clock, no RNG, no
//! iteration-order dependence, so identical configs produce identical bytes
//! downstream.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::detection::{DetectorKind, DetectorSpec};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, WaveFunction};
use crate::packet::{GaussianSpec, InitialState};
use crate::toa::{
    memoryless_distribution, resolution_sweep, stats, DistributionStats, PropagationConfig,
    TimeWindow,
};

/// Which probability engine to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    MemorylessPoint,
    MemorylessFinite,
    FirstClick,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] =
        [EngineKind::MemorylessPoint, EngineKind::MemorylessFinite, EngineKind::FirstClick];

    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::MemorylessPoint => "memoryless-point",
            EngineKind::MemorylessFinite => "memoryless-finite",
            EngineKind::FirstClick => "first-click",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memoryless-point" => Ok(EngineKind::MemorylessPoint),
            "memoryless-finite" => Ok(EngineKind::MemorylessFinite),
            "first-click" => Ok(EngineKind::FirstClick),
            other => Err(Error::Config(format!(
                "unknown engine '{other}' (expected memoryless-point, memoryless-finite \
                 or first-click)"
            ))),
        }
    }
}

/// Grid parameters in serializable form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.x_min, self.x_max, self.n_points)
    }
}

/// Everything needed to reproduce one report.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub packets: Vec<GaussianSpec>,
    /// Detector region `[a, b)`; the point-like engine reads at `a`.
    pub detector_a: f64,
    pub detector_b: f64,
    pub window: TimeWindow,
    pub grid: GridSpec,
    /// Detector time resolutions for the first-click engine, one run each.
    pub delta_ts: Vec<f64>,
    pub engines: Vec<EngineKind>,
    /// Number of memoryless time samples over the window.
    pub time_samples: usize,
}

impl Scenario {
    pub fn initial_state(&self) -> Result<InitialState> {
        InitialState::new(self.packets.clone())
    }

    pub fn detector(&self, kind: DetectorKind) -> Result<DetectorSpec> {
        DetectorSpec::new(self.detector_a, self.detector_b, kind, None)
    }
}

/// Single packet heading into a finite-size detector.
pub fn scenario_fig1() -> Scenario {
    Scenario {
        name: "fig1".into(),
        packets: vec![GaussianSpec::new(5.0, 7.0, 1.0)],
        detector_a: 10.0,
        detector_b: 11.0,
        window: TimeWindow::centered(8.0).expect("static window"),
        grid: GridSpec { x_min: -60.0, x_max: 120.0, n_points: 8192 },
        delta_ts: vec![0.01],
        engines: EngineKind::ALL.to_vec(),
        time_samples: 2048,
    }
}

/// The fig1 setup swept over detector time resolutions: one fine run, the
/// detector transit time `(b - a) / p0`, and a deliberately coarse one.
pub fn scenario_fig2() -> Scenario {
    Scenario {
        name: "fig2".into(),
        delta_ts: vec![1.0 / 7.0, 1.0, 70.0],
        engines: vec![EngineKind::MemorylessFinite, EngineKind::FirstClick],
        ..scenario_fig1()
    }
}

/// Two packets obeying the overtaking condition `x1 / p1 = x0 / p0`, so both
/// arrive at the detector's left edge at t = 3 and interfere there.
///
/// The window is longer than fig1's: the slower packet's low-momentum tail
/// keeps arriving past t = 4, and T = 10 is what it takes to keep at least
/// 99.99% of the arrival mass inside the window.
pub fn scenario_fig3() -> Scenario {
    Scenario {
        name: "fig3".into(),
        packets: vec![GaussianSpec::new(-30.0, 10.0, 1.0), GaussianSpec::new(-45.0, 15.0, 1.0)],
        detector_a: 0.0,
        detector_b: 1.0,
        window: TimeWindow::centered(10.0).expect("static window"),
        grid: GridSpec { x_min: -120.0, x_max: 80.0, n_points: 16384 },
        delta_ts: vec![0.01],
        engines: EngineKind::ALL.to_vec(),
        time_samples: 2048,
    }
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    match name {
        "fig1" => Ok(scenario_fig1()),
        "fig2" => Ok(scenario_fig2()),
        "fig3" => Ok(scenario_fig3()),
        other => {
            Err(Error::Config(format!("unknown scenario '{other}' (bundled: fig1, fig2, fig3)")))
        }
    }
}

/// First-click bookkeeping attached to a report curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstClickCurve {
    /// Joint click weight per attempt.
    pub weights: Vec<f64>,
    pub pmf: Vec<f64>,
    /// Probability that no click happened up to and including attempt i.
    pub survival_cumulative: Vec<f64>,
    pub survival_probability: f64,
    pub conservation_residual: f64,
    /// Never-clicked mass outside the detection window at the end.
    pub escaped_mass: f64,
    /// Never-clicked branch at the end of the window, when snapshots were
    /// requested.
    pub survival_state: Option<WaveFunction>,
}

/// One engine curve of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub engine: EngineKind,
    pub label: String,
    pub delta_t: Option<f64>,
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    pub stats: DistributionStats,
    pub normalization_integral: Option<f64>,
    pub first_click: Option<FirstClickCurve>,
}

/// Deterministic result of running every engine of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub curves: Vec<CurveReport>,
}

impl ScenarioReport {
    pub fn curve(&self, engine: EngineKind) -> Option<&CurveReport> {
        self.curves.iter().find(|c| c.engine == engine)
    }
}

/// Run every configured engine of a scenario.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    run_scenario_with(scenario, &PropagationConfig::default())
}

/// Run with explicit propagation options (padding, snapshot recording).
pub fn run_scenario_with(
    scenario: &Scenario,
    config: &PropagationConfig,
) -> Result<ScenarioReport> {
    let grid = Arc::new(scenario.grid.build()?);
    let state = scenario.initial_state()?;
    let mut curves = Vec::new();
    for engine in &scenario.engines {
        match engine {
            EngineKind::MemorylessPoint | EngineKind::MemorylessFinite => {
                let kind = if *engine == EngineKind::MemorylessPoint {
                    DetectorKind::PointLikeAtA
                } else {
                    DetectorKind::FiniteSize
                };
                let det = scenario.detector(kind)?;
                let dist = memoryless_distribution(
                    &state,
                    &det,
                    &scenario.window,
                    scenario.time_samples,
                    &grid,
                )?;
                let curve_stats = stats(&dist.times, &dist.density)?;
                curves.push(CurveReport {
                    engine: *engine,
                    label: engine.name().to_string(),
                    delta_t: None,
                    times: dist.times,
                    density: dist.density,
                    stats: curve_stats,
                    normalization_integral: Some(dist.normalization_integral),
                    first_click: None,
                });
            }
            EngineKind::FirstClick => {
                if scenario.delta_ts.is_empty() {
                    return Err(Error::Config(
                        "first-click engine requested but no delta_ts configured".into(),
                    ));
                }
                let det = scenario.detector(DetectorKind::FiniteSize)?;
                let entries = resolution_sweep(
                    &state,
                    &det,
                    &scenario.window,
                    &grid,
                    &scenario.delta_ts,
                    config,
                )?;
                for entry in entries {
                    let mut acc = 1.0;
                    let survival_cumulative: Vec<f64> = entry
                        .result
                        .click_weights
                        .iter()
                        .map(|w| {
                            acc -= w;
                            acc
                        })
                        .collect();
                    let survival_state = entry.result.survival_state().ok().cloned();
                    curves.push(CurveReport {
                        engine: EngineKind::FirstClick,
                        label: format!("first-click dt={}", entry.delta_t),
                        delta_t: Some(entry.delta_t),
                        times: entry.result.attempt_times.clone(),
                        density: entry.result.conditional_density.clone(),
                        stats: entry.stats,
                        normalization_integral: None,
                        first_click: Some(FirstClickCurve {
                            weights: entry.result.click_weights.clone(),
                            pmf: entry.result.conditional_pmf.clone(),
                            survival_cumulative,
                            survival_probability: entry.result.survival_probability,
                            conservation_residual: entry.result.conservation_residual,
                            escaped_mass: entry.result.escaped_mass,
                            survival_state,
                        }),
                    });
                }
            }
        }
    }
    Ok(ScenarioReport { scenario: scenario.clone(), curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_parameters_match_their_captions() {
        let s = scenario_fig1();
        assert_eq!(s.packets, vec![GaussianSpec::new(5.0, 7.0, 1.0)]);
        assert_eq!((s.detector_a, s.detector_b), (10.0, 11.0));
        assert_eq!(s.window, TimeWindow::centered(8.0).unwrap());
        assert_eq!(s.engines.len(), 3);

        let s = scenario_fig2();
        assert_eq!(s.delta_ts, vec![1.0 / 7.0, 1.0, 70.0]);
        // Transit-time resolution equals region length over momentum.
        assert_eq!(s.delta_ts[0], (s.detector_b - s.detector_a) / 7.0);

        let s = scenario_fig3();
        assert_eq!(s.packets[0], GaussianSpec::new(-30.0, 10.0, 1.0));
        assert_eq!(s.packets[1], GaussianSpec::new(-45.0, 15.0, 1.0));
        assert_eq!((s.detector_a, s.detector_b), (0.0, 1.0));
        // Overtaking condition in exact arithmetic.
        assert_eq!(s.packets[1].x0, s.packets[1].p0 * s.packets[0].x0 / s.packets[0].p0);
    }

    #[test]
    fn engine_names_round_trip() {
        for engine in EngineKind::ALL {
            assert_eq!(engine.name().parse::<EngineKind>().unwrap(), engine);
        }
        assert!("point".parse::<EngineKind>().is_err());
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        assert!(builtin_scenario("fig4").is_err());
        assert_eq!(builtin_scenario("fig2").unwrap().name, "fig2");
    }

    #[test]
    fn small_scenario_report_is_deterministic() {
        let scenario = Scenario {
            name: "tiny".into(),
            packets: vec![GaussianSpec::new(-5.0, 4.0, 1.0)],
            detector_a: 0.0,
            detector_b: 1.0,
            window: TimeWindow::new(-1.0, 3.0).unwrap(),
            grid: GridSpec { x_min: -32.0, x_max: 32.0, n_points: 1024 },
            delta_ts: vec![0.25],
            engines: EngineKind::ALL.to_vec(),
            time_samples: 128,
        };
        let a = run_scenario(&scenario).unwrap();
        let b = run_scenario(&scenario).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curves.len(), 3);
        let fc = a.curve(EngineKind::FirstClick).unwrap();
        let info = fc.first_click.as_ref().unwrap();
        assert!(info.conservation_residual.abs() < 1e-10);
        let last = *info.survival_cumulative.last().unwrap();
        assert!((last - info.survival_probability).abs() < 1e-10);
    }
}

//! Strict key-value config format for scenarios.
//!
//! The format is flat INI-style sections; see the bundled files under
//! `configs/` for worked examples:
//!
//! ```text
//! [packet.0]           # one section per packet, indices contiguous from 0
//! x0 = 5               # mean position [l0]
//! p0 = 7               # mean momentum [hbar/l0]
//! sigma0 = 1           # width [l0]
//! weight_re = 1        # optional complex weight, defaults to 1 + 0i
//! weight_im = 0
//!
//! [detector]
//! a = 10               # region [a, b) in l0
//! b = 11
//!
//! [window]
//! t_start = -4         # in t0
//! t_end = 4
//!
//! [grid]
//! x_min = -60
//! x_max = 120
//! n_points = 8192      # power of two
//!
//! [run]
//! name = fig1
//! engines = memoryless-point, memoryless-finite, first-click
//! delta_ts = 0.01      # first-click resolutions, comma separated
//! time_samples = 2048  # optional, memoryless sampling
//! csv = true           # optional output switches
//! svg = true
//! snapshots = false
//! out_dir = out/fig1   # optional
//! ```
//!
//! Parsing is strict: unknown sections or keys, duplicate keys, missing
//! required keys and out-of-range values are all rejected with the offending
//! key and line number. All quantities are in natural units.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::packet::GaussianSpec;
use crate::scenario::{EngineKind, GridSpec, Scenario};
use crate::toa::TimeWindow;

/// Output switches accompanying a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub out_dir: Option<PathBuf>,
    pub csv: bool,
    pub svg: bool,
    pub snapshots: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { out_dir: None, csv: true, svg: true, snapshots: false }
    }
}

/// A parsed config: the scenario plus its output options.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub output: OutputOptions,
}

struct Section {
    line: usize,
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn reject_leftovers(&self, name: &str) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.iter().next() {
            return Err(Error::Parse {
                line: *line,
                msg: format!("unknown key '{key}' in section [{name}]"),
            });
        }
        Ok(())
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.insert(name.clone(), Section { line: line_no, entries: BTreeMap::new() });
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let Some(section) = current.as_ref() else {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("key '{key}' appears before any section header"),
            });
        };
        let entries = &mut sections.get_mut(section).expect("section exists").entries;
        if entries.contains_key(&key) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key '{key}' in section [{section}]"),
            });
        }
        entries.insert(key, (line_no, value));
    }
    Ok(sections)
}

fn parse_f64(key: &str, line: usize, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, msg: format!("key '{key}': '{value}' is not a number") })
}

fn parse_usize(key: &str, line: usize, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| Error::Parse {
        line,
        msg: format!("key '{key}': '{value}' is not a non-negative integer"),
    })
}

fn parse_bool(key: &str, line: usize, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Parse {
            line,
            msg: format!("key '{key}': '{value}' is not 'true' or 'false'"),
        }),
    }
}

fn require(section: &mut Section, name: &str, key: &str) -> Result<(usize, String)> {
    section.take(key).ok_or_else(|| Error::Parse {
        line: section.line,
        msg: format!("missing required key '{key}' in section [{name}]"),
    })
}

fn require_f64(section: &mut Section, name: &str, key: &str) -> Result<(usize, f64)> {
    let (line, value) = require(section, name, key)?;
    Ok((line, parse_f64(key, line, &value)?))
}

/// Parse a config text into a scenario plus output options.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut sections = split_sections(text)?;

    // Packets: contiguous indices from 0.
    let mut packets = Vec::new();
    loop {
        let name = format!("packet.{}", packets.len());
        let Some(mut section) = sections.remove(&name) else {
            break;
        };
        let (_, x0) = require_f64(&mut section, &name, "x0")?;
        let (_, p0) = require_f64(&mut section, &name, "p0")?;
        let (sigma_line, sigma0) = require_f64(&mut section, &name, "sigma0")?;
        if !(sigma0 > 0.0) {
            return Err(Error::Parse {
                line: sigma_line,
                msg: format!("key 'sigma0': width must be positive, got {sigma0}"),
            });
        }
        let weight_re = match section.take("weight_re") {
            Some((line, v)) => parse_f64("weight_re", line, &v)?,
            None => 1.0,
        };
        let weight_im = match section.take("weight_im") {
            Some((line, v)) => parse_f64("weight_im", line, &v)?,
            None => 0.0,
        };
        section.reject_leftovers(&name)?;
        packets.push(
            GaussianSpec::new(x0, p0, sigma0).with_weight(Complex64::new(weight_re, weight_im)),
        );
    }
    if packets.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "no [packet.0] section found; at least one packet is required".into(),
        });
    }
    for name in sections.keys() {
        if name.starts_with("packet.") {
            return Err(Error::Parse {
                line: sections[name].line,
                msg: format!(
                    "packet sections must be contiguous from packet.0; found stray [{name}]"
                ),
            });
        }
    }

    let mut detector = sections
        .remove("detector")
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing [detector] section".into() })?;
    let (a_line, a) = require_f64(&mut detector, "detector", "a")?;
    let (_, b) = require_f64(&mut detector, "detector", "b")?;
    if !(a < b) {
        return Err(Error::Parse {
            line: a_line,
            msg: format!("key 'a': detector needs a < b, got [{a}, {b}]"),
        });
    }
    detector.reject_leftovers("detector")?;

    let mut window = sections
        .remove("window")
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing [window] section".into() })?;
    let (t_line, t_start) = require_f64(&mut window, "window", "t_start")?;
    let (_, t_end) = require_f64(&mut window, "window", "t_end")?;
    window.reject_leftovers("window")?;
    let window = TimeWindow::new(t_start, t_end)
        .map_err(|e| Error::Parse { line: t_line, msg: format!("key 't_start': {e}") })?;

    let mut grid = sections
        .remove("grid")
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing [grid] section".into() })?;
    let (x_line, x_min) = require_f64(&mut grid, "grid", "x_min")?;
    let (_, x_max) = require_f64(&mut grid, "grid", "x_max")?;
    let (n_line, n_value) = require(&mut grid, "grid", "n_points")?;
    let n_points = parse_usize("n_points", n_line, &n_value)?;
    grid.reject_leftovers("grid")?;
    let grid = GridSpec { x_min, x_max, n_points };
    grid.build().map_err(|e| Error::Parse { line: x_line, msg: format!("key 'x_min': {e}") })?;

    let mut run = sections
        .remove("run")
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing [run] section".into() })?;
    let name = match run.take("name") {
        Some((_, v)) => v,
        None => "run".to_string(),
    };
    let (engines_line, engines_value) = require(&mut run, "run", "engines")?;
    let engines: Vec<EngineKind> = engines_value
        .split(',')
        .map(|s| {
            s.trim().parse::<EngineKind>().map_err(|e| Error::Parse {
                line: engines_line,
                msg: format!("key 'engines': {e}"),
            })
        })
        .collect::<Result<_>>()?;
    if engines.is_empty() {
        return Err(Error::Parse {
            line: engines_line,
            msg: "key 'engines': at least one engine is required".into(),
        });
    }
    let delta_ts = match run.take("delta_ts") {
        Some((line, v)) => v
            .split(',')
            .map(|s| {
                let dt = parse_f64("delta_ts", line, s.trim())?;
                if !(dt > 0.0) {
                    return Err(Error::Parse {
                        line,
                        msg: format!("key 'delta_ts': resolutions must be positive, got {dt}"),
                    });
                }
                Ok(dt)
            })
            .collect::<Result<Vec<f64>>>()?,
        None => Vec::new(),
    };
    if engines.contains(&EngineKind::FirstClick) && delta_ts.is_empty() {
        return Err(Error::Parse {
            line: engines_line,
            msg: "key 'engines': first-click engine requires 'delta_ts'".into(),
        });
    }
    let time_samples = match run.take("time_samples") {
        Some((line, v)) => {
            let n = parse_usize("time_samples", line, &v)?;
            if n < 16 {
                return Err(Error::Parse {
                    line,
                    msg: format!("key 'time_samples': need at least 16, got {n}"),
                });
            }
            n
        }
        None => 2048,
    };
    let mut output = OutputOptions::default();
    if let Some((line, v)) = run.take("csv") {
        output.csv = parse_bool("csv", line, &v)?;
    }
    if let Some((line, v)) = run.take("svg") {
        output.svg = parse_bool("svg", line, &v)?;
    }
    if let Some((line, v)) = run.take("snapshots") {
        output.snapshots = parse_bool("snapshots", line, &v)?;
    }
    if let Some((_, v)) = run.take("out_dir") {
        output.out_dir = Some(PathBuf::from(v));
    }
    run.reject_leftovers("run")?;

    if let Some((name, section)) = sections.iter().next() {
        return Err(Error::Parse { line: section.line, msg: format!("unknown section [{name}]") });
    }

    let scenario = Scenario {
        name,
        packets,
        detector_a: a,
        detector_b: b,
        window,
        grid,
        delta_ts,
        engines,
        time_samples,
    };
    Ok(RunConfig { scenario, output })
}

/// Canonical config text for a scenario; parsing it back yields the scenario
/// bit-identically (floats print in shortest round-trip form).
pub fn scenario_to_config(scenario: &Scenario) -> String {
    let mut out = String::new();
    for (i, p) in scenario.packets.iter().enumerate() {
        let _ = writeln!(out, "[packet.{i}]");
        let _ = writeln!(out, "x0 = {}", p.x0);
        let _ = writeln!(out, "p0 = {}", p.p0);
        let _ = writeln!(out, "sigma0 = {}", p.sigma0);
        let _ = writeln!(out, "weight_re = {}", p.weight.re);
        let _ = writeln!(out, "weight_im = {}", p.weight.im);
        out.push('\n');
    }
    let _ = writeln!(out, "[detector]");
    let _ = writeln!(out, "a = {}", scenario.detector_a);
    let _ = writeln!(out, "b = {}", scenario.detector_b);
    out.push('\n');
    let _ = writeln!(out, "[window]");
    let _ = writeln!(out, "t_start = {}", scenario.window.t_start());
    let _ = writeln!(out, "t_end = {}", scenario.window.t_end());
    out.push('\n');
    let _ = writeln!(out, "[grid]");
    let _ = writeln!(out, "x_min = {}", scenario.grid.x_min);
    let _ = writeln!(out, "x_max = {}", scenario.grid.x_max);
    let _ = writeln!(out, "n_points = {}", scenario.grid.n_points);
    out.push('\n');
    let _ = writeln!(out, "[run]");
    let _ = writeln!(out, "name = {}", scenario.name);
    let engines: Vec<&str> = scenario.engines.iter().map(|e| e.name()).collect();
    let _ = writeln!(out, "engines = {}", engines.join(", "));
    if !scenario.delta_ts.is_empty() {
        let dts: Vec<String> = scenario.delta_ts.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "delta_ts = {}", dts.join(", "));
    }
    let _ = writeln!(out, "time_samples = {}", scenario.time_samples);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{scenario_fig1, scenario_fig2, scenario_fig3};

    #[test]
    fn bundled_scenarios_round_trip_bit_identically() {
        for scenario in [scenario_fig1(), scenario_fig2(), scenario_fig3()] {
            let text = scenario_to_config(&scenario);
            let parsed = parse_config(&text).unwrap();
            assert_eq!(parsed.scenario, scenario);
            // Serializing again reproduces the exact bytes.
            assert_eq!(scenario_to_config(&parsed.scenario), text);
        }
    }

    #[test]
    fn shipped_configs_match_the_builtin_scenarios() {
        let cases = [
            (include_str!("../configs/fig1.cfg"), scenario_fig1()),
            (include_str!("../configs/fig2.cfg"), scenario_fig2()),
            (include_str!("../configs/fig3.cfg"), scenario_fig3()),
        ];
        for (text, scenario) in cases {
            let parsed = parse_config(text).unwrap();
            assert_eq!(parsed.scenario, scenario);
        }
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let mut text = scenario_to_config(&scenario_fig1());
        text = text.replace("sigma0 = 1", "sigma = 1");
        match parse_config(&text) {
            Err(Error::Parse { line, msg }) => {
                assert!(msg.contains("sigma0") || msg.contains("'sigma'"), "{msg}");
                assert!(line > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_values_name_the_key() {
        let base = scenario_to_config(&scenario_fig1());
        let cases = [
            ("sigma0 = 1", "sigma0 = -2", "sigma0"),
            ("a = 10", "a = 12", "a"),
            ("delta_ts = 0.01", "delta_ts = 0", "delta_ts"),
            ("n_points = 8192", "n_points = 1000", "x_min"),
        ];
        for (from, to, key) in cases {
            let text = base.replace(from, to);
            match parse_config(&text) {
                Err(Error::Parse { msg, .. }) => {
                    assert!(msg.contains(key), "case {to}: message '{msg}'")
                }
                other => panic!("case {to}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn structural_problems_are_rejected() {
        assert!(parse_config("").is_err());
        assert!(parse_config("x0 = 1").is_err());
        let base = scenario_to_config(&scenario_fig1());
        assert!(parse_config(&base.replace("[detector]", "[detektor]")).is_err());
        assert!(parse_config(&base.replace("[packet.0]", "[packet.1]")).is_err());
        let doubled = format!("{base}\n[detector]\na = 1\nb = 2\n");
        assert!(parse_config(&doubled).is_err());
        // Missing required key.
        assert!(parse_config(&base.replace("p0 = 7\n", "")).is_err());
        // First-click without resolutions.
        assert!(parse_config(&base.replace("delta_ts = 0.01\n", "")).is_err());
    }

    #[test]
    fn output_options_parse_with_defaults() {
        let mut text = scenario_to_config(&scenario_fig1());
        let parsed = parse_config(&text).unwrap();
        assert_eq!(parsed.output, OutputOptions::default());
        text.push_str("csv = false\nsnapshots = true\nout_dir = somewhere/else\n");
        let parsed = parse_config(&text).unwrap();
        assert!(!parsed.output.csv);
        assert!(parsed.output.svg);
        assert!(parsed.output.snapshots);
        assert_eq!(parsed.output.out_dir, Some(PathBuf::from("somewhere/else")));
    }
}

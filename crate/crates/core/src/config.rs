//! Run configuration: flat `key = value` files with `#` comments.
//!
//! Parsing is strict. Unknown and repeated keys are errors, and every
//! physical quantity must be given explicitly. Only output and study
//! settings have defaults.

use std::collections::BTreeMap;
use std::path::Path;

use crate::assembly::PhysicalParams;
use crate::error::ConfigError;
use crate::mesh::ChannelGeometry;
use crate::run::Scheme;

const REQUIRED: &[&str] = &[
    "length",
    "radius",
    "thickness",
    "nx",
    "ny_fluid",
    "ny_solid",
    "dt",
    "final_time",
    "rho_f",
    "rho_s",
    "mu",
    "lame1",
    "lame2",
    "c0",
    "alpha",
    "beta_p",
    "scheme",
    "inlet_amplitude",
    "inlet_half_period",
];

const OPTIONAL: &[&str] = &[
    "snapshot_times",
    "vtk",
    "series_csv",
    "ledger_csv",
    "deterministic",
    "converge_levels",
    "converge_pitch",
    "converge_dt",
    "converge_schemes",
    "reference_pitch",
    "reference_dt",
    "sweep_alphas",
    "energy_seed",
];

/// Pressure pulse applied at the inlet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InletPulse {
    pub amplitude: f64,
    pub half_period: f64,
}

impl InletPulse {
    pub fn pressure(&self, t: f64) -> f64 {
        inlet_pressure(t, self.amplitude, self.half_period)
    }
}

/// Half sine wave: `amplitude sin(pi t / half_period)` on `[0, half_period]`, zero after.
pub fn inlet_pressure(t: f64, amplitude: f64, half_period: f64) -> f64 {
    if (0.0..=half_period).contains(&t) {
        amplitude * (std::f64::consts::PI * t / half_period).sin()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub snapshot_times: Vec<f64>,
    pub vtk: bool,
    pub series_csv: String,
    pub ledger_csv: String,
}

/// Settings of the refinement study, the alpha sweep and the energy check.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    /// Number of refinement levels; level `i` uses pitch and step halved `i` times.
    pub levels: usize,
    pub base_pitch: f64,
    pub base_dt: f64,
    pub schemes: Vec<Scheme>,
    pub reference_pitch: f64,
    pub reference_dt: f64,
    pub alphas: Vec<f64>,
    pub energy_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: ChannelGeometry,
    pub dt: f64,
    pub final_time: f64,
    pub params: PhysicalParams,
    pub scheme: Scheme,
    pub inlet: InletPulse,
    pub outputs: OutputSpec,
    pub study: StudySpec,
    /// Run independent studies one after another rather than on worker threads.
    pub deterministic: bool,
}

impl RunConfig {
    /// Structured grid with the given pitch on the configured channel.
    pub fn geometry_for_pitch(&self, pitch: f64) -> Result<ChannelGeometry, ConfigError> {
        let cells = |extent: f64, key: &str| -> Result<usize, ConfigError> {
            let n = extent / pitch;
            let r = n.round();
            if r < 1.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
                return Err(ConfigError::Invalid {
                    key: key.into(),
                    reason: format!("pitch {pitch} does not divide {extent}"),
                });
            }
            Ok(r as usize)
        };
        let g = &self.geometry;
        Ok(ChannelGeometry {
            nx: cells(g.length, "length")?,
            ny_fluid: cells(g.radius, "radius")?,
            ny_solid: cells(g.thickness, "thickness")?,
            ..*g
        })
    }

    /// Pitch and step of refinement level `i`.
    pub fn level(&self, i: usize) -> (f64, f64) {
        let f = 0.5f64.powi(i as i32);
        (self.study.base_pitch * f, self.study.base_dt * f)
    }
}

/// Parses `loose`, `loose_<k>c` or `monolithic`.
pub fn parse_scheme(s: &str) -> Option<Scheme> {
    match s {
        "loose" => Some(Scheme::Loose { corrections: 0 }),
        "monolithic" => Some(Scheme::Monolithic),
        _ => {
            let k = s.strip_prefix("loose_")?.strip_suffix('c')?;
            k.parse().ok().map(|corrections| Scheme::Loose { corrections })
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut kv = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        if !REQUIRED.contains(&k) && !OPTIONAL.contains(&k) {
            return Err(ConfigError::UnknownKey(k.into()));
        }
        if kv.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(k.into()));
        }
    }
    let missing: Vec<String> = REQUIRED.iter().filter(|k| !kv.contains_key(**k)).map(|k| k.to_string()).collect();
    if !missing.is_empty() {
        return Err(ConfigError::MissingKeys(missing));
    }
    let r = Reader { kv: &kv };

    let geometry = ChannelGeometry {
        length: r.positive("length")?,
        radius: r.positive("radius")?,
        thickness: r.positive("thickness")?,
        nx: r.count("nx")?,
        ny_fluid: r.count("ny_fluid")?,
        ny_solid: r.count("ny_solid")?,
    };
    let dt = r.positive("dt")?;
    let final_time = r.positive("final_time")?;
    let params = PhysicalParams {
        rho_f: r.positive("rho_f")?,
        rho_s: r.positive("rho_s")?,
        mu: r.positive("mu")?,
        lame1: r.positive("lame1")?,
        lame2: r.non_negative("lame2")?,
        c0: r.non_negative("c0")?,
        alpha: r.positive("alpha")?,
        beta_p: r.positive("beta_p")?,
    };
    let scheme = r.scheme("scheme")?;
    let inlet = InletPulse { amplitude: r.float("inlet_amplitude")?, half_period: r.positive("inlet_half_period")? };

    let snapshot_times = r.float_list_or("snapshot_times", Vec::new())?;
    if let Some(t) = snapshot_times.iter().find(|t| !(0.0..=final_time).contains(*t)) {
        return Err(ConfigError::Invalid {
            key: "snapshot_times".into(),
            reason: format!("{t} lies outside [0, {final_time}]"),
        });
    }
    let outputs = OutputSpec {
        snapshot_times,
        vtk: r.bool_or("vtk", false)?,
        series_csv: r.string_or("series_csv", "series.csv"),
        ledger_csv: r.string_or("ledger_csv", "ledger.csv"),
    };

    let study = StudySpec {
        levels: r.count_or("converge_levels", 3)?,
        base_pitch: r.positive_or("converge_pitch", 0.1)?,
        base_dt: r.positive_or("converge_dt", 5e-4)?,
        schemes: match kv.get("converge_schemes") {
            Some(v) => v
                .split(',')
                .map(|s| parse_scheme(s.trim()).ok_or_else(|| r.type_error("converge_schemes", v, "scheme list")))
                .collect::<Result<_, _>>()?,
            None => vec![Scheme::Loose { corrections: 0 }, Scheme::Loose { corrections: 1 }, Scheme::Monolithic],
        },
        reference_pitch: r.positive_or("reference_pitch", 0.0125)?,
        reference_dt: r.positive_or("reference_dt", 1.25e-5)?,
        alphas: r.float_list_or("sweep_alphas", vec![50.0, 500.0, 5000.0])?,
        energy_seed: match kv.get("energy_seed") {
            Some(v) => v.parse().map_err(|_| r.type_error("energy_seed", v, "unsigned integer"))?,
            None => 0,
        },
    };
    if study.levels < 2 {
        return Err(ConfigError::Invalid { key: "converge_levels".into(), reason: "need at least two levels".into() });
    }
    if let Some(a) = study.alphas.iter().find(|a| !(**a > 0.0)) {
        return Err(ConfigError::Invalid { key: "sweep_alphas".into(), reason: format!("{a} is not positive") });
    }

    let cfg = RunConfig {
        geometry,
        dt,
        final_time,
        params,
        scheme,
        inlet,
        outputs,
        study,
        deterministic: r.bool_or("deterministic", true)?,
    };
    // levels and reference must map to whole cell counts
    for i in 0..cfg.study.levels {
        cfg.geometry_for_pitch(cfg.level(i).0)?;
    }
    cfg.geometry_for_pitch(cfg.study.reference_pitch)?;
    let finest = cfg.level(cfg.study.levels - 1);
    if cfg.study.reference_pitch >= finest.0 || cfg.study.reference_dt >= finest.1 {
        return Err(ConfigError::Invalid {
            key: "reference_pitch".into(),
            reason: "reference must be strictly finer than every level".into(),
        });
    }
    Ok(cfg)
}

struct Reader<'a> {
    kv: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn type_error(&self, key: &str, value: &str, expected: &'static str) -> ConfigError {
        ConfigError::Type { key: key.into(), value: value.into(), expected }
    }

    fn float(&self, key: &str) -> Result<f64, ConfigError> {
        let v = &self.kv[key];
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.type_error(key, v, "finite number")),
        }
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let x = self.float(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(ConfigError::Invalid { key: key.into(), reason: format!("must be positive, got {x}") })
        }
    }

    fn non_negative(&self, key: &str) -> Result<f64, ConfigError> {
        let x = self.float(key)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(ConfigError::Invalid { key: key.into(), reason: format!("must be non-negative, got {x}") })
        }
    }

    fn positive_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        if self.kv.contains_key(key) {
            self.positive(key)
        } else {
            Ok(default)
        }
    }

    fn count(&self, key: &str) -> Result<usize, ConfigError> {
        let v = &self.kv[key];
        match v.parse::<usize>() {
            Ok(0) => Err(ConfigError::Invalid { key: key.into(), reason: "must be at least 1".into() }),
            Ok(n) => Ok(n),
            Err(_) => Err(self.type_error(key, v, "positive integer")),
        }
    }

    fn count_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        if self.kv.contains_key(key) {
            self.count(key)
        } else {
            Ok(default)
        }
    }

    fn scheme(&self, key: &str) -> Result<Scheme, ConfigError> {
        let v = &self.kv[key];
        parse_scheme(v).ok_or_else(|| self.type_error(key, v, "loose, loose_<k>c or monolithic"))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.kv.get(key).map(String::as_str) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(self.type_error(key, v, "true or false")),
        }
    }

    fn string_or(&self, key: &str, default: &str) -> String {
        self.kv.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    fn float_list_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        let Some(v) = self.kv.get(key) else { return Ok(default) };
        v.split(',')
            .map(|s| match s.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.type_error(key, v, "comma-separated numbers")),
            })
            .collect()
    }
}

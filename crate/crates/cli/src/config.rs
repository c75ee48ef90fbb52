use std::fmt;
use std::path::PathBuf;

use parabifurc_core::sequences::DEFAULT_A_THRESHOLD;
use parabifurc_core::{Family, GridSpec, Precision};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Compose,
    Check,
    Rate,
    Counterexample,
    Identities,
    Planar,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Compose => "compose",
            Command::Check => "check",
            Command::Rate => "rate",
            Command::Counterexample => "counterexample",
            Command::Identities => "identities",
            Command::Planar => "planar",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "compose" => Command::Compose,
            "check" => Command::Check,
            "rate" => Command::Rate,
            "counterexample" => Command::Counterexample,
            "identities" => Command::Identities,
            "planar" => Command::Planar,
            _ => return Err(format!("unknown command {s:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Constant,
    AlphaForm,
    Example1,
    Example2,
    Example3,
    Theorem5Linear,
    Theorem7Band,
    Counterexample,
    Custom,
}

/// Family name plus whichever parameters it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub name: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
}

impl FamilyConfig {
    pub fn named(name: FamilyName) -> Self {
        Self {
            name,
            offset: None,
            amplitude: None,
            a: None,
            c: None,
            eps: None,
        }
    }
}

/// Doubling schedule `start, 2 start, ...`, each rounded up to an admissible N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub start: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapName {
    H,
    L,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarConfig {
    pub map: MapName,
    /// `[re, im]`
    pub z: [f64; 2],
    /// `[re, im]`
    pub w: [f64; 2],
    pub n_values: Vec<usize>,
    /// Defaults to 1 for H and 2 for L.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<usize>,
}

impl PlanarConfig {
    pub fn multiplier(&self) -> usize {
        self.multiplier.unwrap_or(match self.map {
            MapName::H => 1,
            MapName::L => 2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub center: [f64; 2],
    pub radius: f64,
    pub points_per_side: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            center: [g.center_re, g.center_im],
            radius: g.radius,
            points_per_side: g.points_per_side,
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            center_re: self.center[0],
            center_im: self.center[1],
            radius: self.radius,
            points_per_side: self.points_per_side,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    StructuredText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_precision")]
    pub precision: Precision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_threshold")]
    pub a_threshold: f64,
    /// Explicit list of N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    /// Single N given through `m` (`N = 2m+1` for Example1, `4m+2` for Example2, else `m`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planar: Option<PlanarConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_precision() -> Precision {
    Precision::Standard
}

fn default_threshold() -> f64 {
    DEFAULT_A_THRESHOLD
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            precision: Precision::Standard,
            seed: None,
            a_threshold: DEFAULT_A_THRESHOLD,
            ns: None,
            m: None,
            schedule: None,
            family: None,
            grid: GridConfig::default(),
            planar: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// The core family, if the config names one with all required parameters.
    pub fn family(&self) -> Result<Family, Violation> {
        let fc = self
            .family
            .as_ref()
            .ok_or_else(|| Violation::new("family", "family required"))?;
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| Violation::new("family", format!("{name} required for {:?}", fc.name)))
        };
        Ok(match fc.name {
            FamilyName::Constant => Family::Constant {
                offset: fc.offset.unwrap_or(0.0),
            },
            FamilyName::AlphaForm => Family::AlphaForm {
                amplitude: need(fc.amplitude, "amplitude")?,
                offset: fc.offset.unwrap_or(0.0),
            },
            FamilyName::Example1 => Family::Example1,
            FamilyName::Example2 => Family::Example2,
            FamilyName::Example3 => Family::Example3,
            FamilyName::Theorem5Linear => Family::Theorem5Linear {
                a: need(fc.a, "a")?,
            },
            FamilyName::Theorem7Band => Family::Theorem7Band {
                c: need(fc.c, "c")?,
                seed: self.seed.ok_or_else(|| Violation::new("seed", "seed required"))?,
            },
            FamilyName::Counterexample => Family::Counterexample,
            FamilyName::Custom => Family::Custom {
                eps: fc
                    .eps
                    .clone()
                    .ok_or_else(|| Violation::new("family", "eps required for Custom"))?,
            },
        })
    }

    /// The N values the command runs over.
    pub fn ns(&self, family: &Family) -> Result<Vec<usize>, Violation> {
        let given = [self.ns.is_some(), self.m.is_some(), self.schedule.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        if given != 1 {
            return Err(Violation::new("ns", "exactly one of ns, m, schedule required"));
        }
        let ns = if let Some(ns) = &self.ns {
            ns.clone()
        } else if let Some(m) = self.m {
            vec![match family {
                Family::Example1 => 2 * m + 1,
                Family::Example2 => 4 * m + 2,
                _ => m,
            }]
        } else {
            let s = self.schedule.expect("checked above");
            if s.count == 0 || s.start == 0 {
                return Err(Violation::new("schedule", "start and count must be positive"));
            }
            family.doubling_schedule(s.start, s.count)
        };
        if ns.is_empty() {
            return Err(Violation::new("ns", "at least one N required"));
        }
        Ok(ns)
    }
}

/// One reason a config cannot run, naming the field at fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every reason `config` cannot run; empty if it can.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();

    let g = &config.grid;
    if !(g.radius > 0.0 && g.radius.is_finite()) || !g.center.iter().all(|c| c.is_finite()) {
        out.push(Violation::new("grid", "radius must be positive and finite"));
    } else if g.points_per_side == 0 || config.grid.spec().points_f64().is_empty() {
        out.push(Violation::new("grid", "grid has no points"));
    } else if (g.center[0] - 1.0).hypot(g.center[1]) <= g.radius {
        out.push(Violation::new("grid", "grid touches fiber pole z = 1"));
    }

    if !(config.a_threshold > 0.0 && config.a_threshold.is_finite()) {
        out.push(Violation::new("a_threshold", "must be positive"));
    }

    match config.command {
        Command::Planar => {
            if config.precision != Precision::Standard {
                out.push(Violation::new("precision", "planar runs in std precision only"));
            }
            match &config.planar {
                None => out.push(Violation::new("planar", "planar section required")),
                Some(p) => {
                    if p.n_values.is_empty() || p.n_values.contains(&0) {
                        out.push(Violation::new("planar.n_values", "need positive n values"));
                    }
                    if p.multiplier() == 0 {
                        out.push(Violation::new("planar.multiplier", "must be positive"));
                    }
                    if !p.z.iter().chain(&p.w).all(|v| v.is_finite()) {
                        out.push(Violation::new("planar", "z and w must be finite"));
                    }
                }
            }
        }
        Command::Counterexample => {
            if let Some(fc) = &config.family {
                if fc.name != FamilyName::Counterexample {
                    out.push(Violation::new("family", "counterexample uses the Counterexample family"));
                }
            }
            check_ns(config, &Family::Counterexample, &mut out);
        }
        _ => match config.family() {
            Err(v) => out.push(v),
            Ok(family) => check_ns(config, &family, &mut out),
        },
    }
    out
}

fn check_ns(config: &ExperimentConfig, family: &Family, out: &mut Vec<Violation>) {
    match config.ns(family) {
        Err(v) => out.push(v),
        Ok(ns) => {
            for n in ns {
                if let Err(e) = family.check_n(n) {
                    out.push(Violation::new("ns", e.to_string()));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_family(command: Command, name: FamilyName) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(command);
        c.family = Some(FamilyConfig::named(name));
        c
    }

    #[test]
    fn example1_even_n() {
        let mut c = with_family(Command::Check, FamilyName::Example1);
        c.ns = Some(vec![100]);
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("Example1 requires N = 2m+1"), "{}", v[0]);
        c.ns = Some(vec![101]);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn grid_at_pole() {
        let mut c = with_family(Command::Rate, FamilyName::Constant);
        c.ns = Some(vec![100]);
        c.grid = GridConfig {
            center: [1.0, 0.0],
            radius: 0.5,
            points_per_side: 10,
        };
        let v = validate(&c);
        assert!(v.iter().any(|v| v.message == "grid touches fiber pole z = 1"), "{v:?}");
    }

    #[test]
    fn band_needs_seed() {
        let mut c = with_family(Command::Rate, FamilyName::Theorem7Band);
        c.family.as_mut().unwrap().c = Some(2.0);
        c.ns = Some(vec![100]);
        let v = validate(&c);
        assert_eq!(v, vec![Violation::new("seed", "seed required")]);
        c.seed = Some(3);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn m_maps_to_n() {
        let mut c = with_family(Command::Identities, FamilyName::Example1);
        c.m = Some(50);
        assert_eq!(c.ns(&Family::Example1).unwrap(), vec![101]);
        assert_eq!(c.ns(&Family::Example2).unwrap(), vec![202]);
        c.ns = Some(vec![101]);
        assert!(c.ns(&Family::Example1).is_err());
    }

    #[test]
    fn parses_minimal_toml() {
        let c = ExperimentConfig::from_toml(
            "command = \"check\"\nns = [200]\n[family]\nname = \"counterexample\"\n",
        )
        .unwrap();
        assert_eq!(c.command, Command::Check);
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.a_threshold, DEFAULT_A_THRESHOLD);
        assert!(ExperimentConfig::from_toml("command = \"check\"\nbogus = 1\n").is_err());
    }
}

//! Run configuration: TOML on disk, compiled-in presets, and conversion to core problems.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use kss_core::{DiscretizationKind, DustyGasParams, ErrorNorm, FieldSpec, ProblemSpec};
use serde::{Deserialize, Deserializer, Serialize};

use crate::expr::{self, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Convergence,
    StabilityScan,
    SingleRun,
    DustyGas,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Convergence => "convergence",
            Self::StabilityScan => "stability-scan",
            Self::SingleRun => "single-run",
            Self::DustyGas => "dusty-gas",
        })
    }
}

/// A number written either literally or as a constant expression like `"pi/128"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Self::Num(v) => Ok(*v),
            Self::Expr(s) => expr::constant(s),
        }
    }
}

/// A coefficient or initial datum: a constant, an expression in `x, y`, or a
/// file of grid samples (row-major in 2-D, separated by commas or whitespace).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSource {
    Value(f64),
    Expr(String),
    File { file: PathBuf },
}

impl FieldSource {
    fn expr(s: &str) -> Self {
        Self::Expr(s.to_string())
    }

    /// Relative sample files are resolved against `base`.
    pub fn to_spec(&self, base: &Path) -> Result<FieldSpec> {
        Ok(match self {
            Self::Value(v) => FieldSpec::Constant(*v),
            Self::Expr(s) => {
                let f = Field::parse(s)?;
                FieldSpec::function(move |x, y| f.eval(x, y))
            }
            Self::File { file } => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("cannot read sample file {}", path.display()))?;
                FieldSpec::Samples(Arc::new(parse_samples(&text).with_context(|| path.display().to_string())?))
            }
        })
    }
}

fn parse_samples(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad sample '{t}'")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub p: FieldSource,
    pub q: FieldSource,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            p: FieldSource::Value(1.0),
            q: FieldSource::Value(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub u: FieldSource,
    #[serde(default = "zero_field")]
    pub ut: FieldSource,
}

fn zero_field() -> FieldSource {
    FieldSource::Value(0.0)
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            u: zero_field(),
            ut: zero_field(),
        }
    }
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

fn default_norm() -> ErrorNorm {
    ErrorNorm::Max
}

fn default_true() -> bool {
    true
}

/// Everything one invocation needs. `n`, `dt` and `cfl` accept a scalar or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub name: String,
    pub kind: DiscretizationKind,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty", deserialize_with = "one_or_many")]
    pub dt: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Vec::is_empty", deserialize_with = "one_or_many")]
    pub cfl: Vec<Scalar>,
    pub final_time: f64,
    /// Norm of the relative errors in convergence tables.
    #[serde(default = "default_norm")]
    pub error_norm: ErrorNorm,
    /// Stability scans also integrate to `final_time` and flag blow-up.
    #[serde(default = "default_true")]
    pub long_run: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    /// Relative front threshold for dusty-gas runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_threshold: Option<f64>,
    #[serde(default)]
    pub coefficients: Coefficients,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dusty: Option<DustyGasParams>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            bail!("n: at least one grid size is required");
        }
        if let Some(bad) = self.n.iter().find(|&&n| n < 4 || n % 2 != 0) {
            bail!("n: grid sizes must be even and at least 4, got {bad}");
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            bail!("final_time: must be positive, got {}", self.final_time);
        }
        for (label, list) in [("dt", &self.dt), ("cfl", &self.cfl)] {
            for s in list {
                let v = s.value().with_context(|| format!("{label}: {s:?}"))?;
                if !(v > 0.0 && v.is_finite()) {
                    bail!("{label}: values must be positive, got {v}");
                }
            }
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(t > 0.0 && t <= self.final_time)) {
            bail!("snapshot_times: {t} is outside (0, final_time]");
        }
        if let Some(th) = self.front_threshold {
            if !(th > 0.0 && th < 1.0) {
                bail!("front_threshold: must lie in (0, 1), got {th}");
            }
        }
        match self.experiment {
            Experiment::Convergence | Experiment::StabilityScan if self.dt.is_empty() => {
                bail!("dt: {} needs a list of time steps", self.experiment)
            }
            Experiment::SingleRun if self.dt.is_empty() == self.cfl.is_empty() => {
                bail!("single-run needs exactly one of dt and cfl")
            }
            Experiment::DustyGas => {
                if self.cfl.is_empty() {
                    bail!("cfl: dusty-gas needs a CFL number");
                }
                if self.kind != DiscretizationKind::FdDirichlet1d {
                    bail!("kind: dusty-gas runs on fd-dirichlet-1d");
                }
                if let Some(p) = &self.dusty {
                    p.validate()?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn dts(&self) -> Result<Vec<f64>> {
        self.dt.iter().map(Scalar::value).collect()
    }

    pub fn cfls(&self) -> Result<Vec<f64>> {
        self.cfl.iter().map(Scalar::value).collect()
    }

    /// The problem with fields resolved; sample files are read relative to `base`.
    pub fn problem(&self, base: &Path) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            name: self.name.clone(),
            kind: self.kind,
            p: self.coefficients.p.to_spec(base).context("coefficients.p")?,
            q: self.coefficients.q.to_spec(base).context("coefficients.q")?,
            u0: self.initial.u.to_spec(base).context("initial.u")?,
            ut0: self.initial.ut.to_spec(base).context("initial.ut")?,
            final_time: self.final_time,
        })
    }
}

const Q_TRIG: &str = "1 + 0.5*sin(x) + 0.25*cos(2*x) + 0.125*sin(3*x)";
const Q_TRIG_2D: &str = "1 + 0.5*sin(x)*cos(y) + 0.25*cos(2*y) + 0.125*sin(3*x)";
const P_VARIABLE: &str = "1 - 0.5*sin(x) + 0.25*cos(2*x)";

pub const PRESETS: [&str; 9] = [
    "table1",
    "table2",
    "table3",
    "table4",
    "fig1",
    "fig2",
    "stability",
    "stability-constant",
    "dusty",
];

fn base(experiment: Experiment, name: &str, kind: DiscretizationKind, n: Vec<usize>, final_time: f64) -> RunConfig {
    RunConfig {
        experiment,
        name: name.to_string(),
        kind,
        n,
        dt: vec![],
        cfl: vec![],
        final_time,
        error_norm: ErrorNorm::Max,
        long_run: true,
        snapshot_times: vec![],
        front_threshold: None,
        coefficients: Coefficients {
            p: FieldSource::Value(1.0),
            q: FieldSource::expr(Q_TRIG),
        },
        initial: Initial {
            u: FieldSource::expr("gaussian(x)"),
            ut: zero_field(),
        },
        dusty: None,
    }
}

fn steps(denominators: &[u32]) -> Vec<Scalar> {
    denominators.iter().map(|d| Scalar::Expr(format!("pi/{d}"))).collect()
}

/// The compiled-in configuration called `name`.
pub fn preset(name: &str) -> Option<RunConfig> {
    use DiscretizationKind::*;
    use Experiment::*;
    let one_d = || vec![256, 512, 1024, 2048];
    let variable_speed = |name: &str, experiment: Experiment, n: Vec<usize>| {
        let mut c = base(experiment, name, SpectralPeriodic1d, n, 1.0);
        c.coefficients.p = FieldSource::expr(P_VARIABLE);
        c
    };
    let config = match name {
        "table1" => {
            let mut c = base(Convergence, name, SpectralPeriodic1d, one_d(), 10.0);
            c.initial.u = FieldSource::expr("triangle(x)");
            c.dt = steps(&[128, 256, 512]);
            c
        }
        "table2" | "table3" => {
            let kind = if name == "table2" { FdPeriodic1d } else { FdDirichlet1d };
            let mut c = base(Convergence, name, kind, one_d(), 10.0);
            c.dt = steps(&[128, 256, 512]);
            c
        }
        "table4" => {
            let mut c = base(Convergence, name, FdPeriodic2d, vec![16, 32, 64, 128], 10.0);
            c.coefficients.q = FieldSource::expr(Q_TRIG_2D);
            c.initial.u = FieldSource::expr("exp(-((x - pi)^2 + (y - pi)^2))");
            c.dt = steps(&[8, 16, 32]);
            c
        }
        "fig1" | "fig2" => {
            let mut c = variable_speed(name, SingleRun, vec![256]);
            c.cfl = vec![Scalar::Num(if name == "fig1" { 1.74 } else { 0.87 })];
            c.snapshot_times = vec![0.25, 0.5, 0.75, 1.0];
            c
        }
        "stability" => {
            let mut c = variable_speed(name, StabilityScan, vec![32, 64, 128, 256]);
            c.dt = steps(&[128, 256, 512]);
            c
        }
        "stability-constant" => {
            let mut c = base(StabilityScan, name, SpectralPeriodic1d, vec![32, 64, 128, 256], 10.0);
            c.initial.u = FieldSource::expr("triangle(x)");
            c.dt = steps(&[128, 256, 512]);
            c
        }
        "dusty" => {
            let mut c = base(DustyGas, name, FdDirichlet1d, vec![16384], 2.0);
            c.cfl = vec![Scalar::Num(10.0)];
            c.snapshot_times = vec![0.5, 1.0, 1.5, 2.0];
            c.front_threshold = Some(kss_core::dusty::DEFAULT_FRONT_THRESHOLD);
            c.coefficients = Coefficients::default();
            c.initial = Initial::default();
            c.dusty = Some(DustyGasParams::default());
            c
        }
        _ => return None,
    };
    Some(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            assert_eq!(c.name, name);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn scalars_and_lists() {
        let c = RunConfig::from_toml(
            "experiment = 'single-run'\nname = 'x'\nkind = 'fd-periodic-1d'\nn = 64\ncfl = 0.5\nfinal_time = 1.0\n",
        )
        .unwrap();
        assert_eq!(c.n, vec![64]);
        assert_eq!(c.cfls().unwrap(), vec![0.5]);
        assert_eq!(c.initial, Initial::default());
    }

    #[test]
    fn sample_files_parse() {
        assert_eq!(parse_samples("# header\n1, 2\n3 4.5\n").unwrap(), vec![1.0, 2.0, 3.0, 4.5]);
        assert!(parse_samples("1, x").is_err());
    }
}

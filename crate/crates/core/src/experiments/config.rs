//! Experiment configuration files (TOML). Unknown keys are rejected and
//! every error names a line or a field path.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::examples::ExampleKind;
use crate::lattice::flow::LatticeFlowOptions;
use crate::stability::{parse_ratio, FixtureEntry, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    KempfNess,
    VortexThreshold,
    Pair,
    Triple,
    CoherentSystem,
    TwistedTriple,
    Higgs,
    InvariantSuite,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::KempfNess,
        Mode::VortexThreshold,
        Mode::Pair,
        Mode::Triple,
        Mode::CoherentSystem,
        Mode::TwistedTriple,
        Mode::Higgs,
        Mode::InvariantSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::KempfNess => "kempf_ness",
            Mode::VortexThreshold => "vortex_threshold",
            Mode::Pair => "pair",
            Mode::Triple => "triple",
            Mode::CoherentSystem => "coherent_system",
            Mode::TwistedTriple => "twisted_triple",
            Mode::Higgs => "higgs",
            Mode::InvariantSuite => "invariant_suite",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Fixture kind of the per-kind stability modes.
    pub fn kind(self) -> Option<ExampleKind> {
        match self {
            Mode::Pair => Some(ExampleKind::PairTensor),
            Mode::Triple => Some(ExampleKind::TripleFixedE2),
            Mode::CoherentSystem => Some(ExampleKind::CoherentSystem),
            Mode::TwistedTriple => Some(ExampleKind::TwistedTriple),
            Mode::Higgs => Some(ExampleKind::Higgs),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rational written either as an integer or as a string "p/q".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio(pub Rational);

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(i) => Ok(Ratio(Rational::from_integer(i))),
            Repr::Text(t) => parse_ratio(&t).map(Ratio).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    /// Sites per side.
    pub n: usize,
    /// Overall scale of Φ when fixtures are assembled on the lattice.
    pub amplitude: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { n: 32, amplitude: 1.0 }
    }
}

/// A fixture given inline or by a path to a GPWB1 fixture file. The kind
/// follows from the mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<FixtureEntry>,
    /// Central constants in 2π units.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Ratio>>,
    #[serde(default)]
    pub smooth: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchSection {
    /// Number of random fixtures when no fixture is given (default 100 for
    /// kempf_ness, 10 otherwise).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Random cone samples per fixture for the SSC cross-check (0 = skip).
    pub ssc_trials: usize,
    /// Override of the c-values of every fixture (2π units).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Ratio>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Degree d of the line bundle.
    pub degree: i64,
    /// Scan range of c in units of 2π.
    pub c_min: f64,
    pub c_max: f64,
    /// Stop when (hi − lo)/hi falls below this.
    pub rel_width: f64,
    pub max_bisections: usize,
    /// Cross-check the solvable endpoint with the scalar Newton solver.
    pub newton: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            degree: 1,
            c_min: 0.1,
            c_max: 3.0,
            rel_width: 0.05,
            max_bisections: 30,
            newton: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    /// Run the lattice heat flow on every fixture (default: only for an
    /// explicit fixture).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    pub max_iter: usize,
    pub step: f64,
    pub tol: f64,
    pub tau: f64,
    pub blowup: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        let o = LatticeFlowOptions::default();
        Self {
            enabled: None,
            max_iter: o.max_iter,
            step: o.step,
            tol: o.tol,
            tau: o.tau,
            blowup: o.blowup,
        }
    }
}

impl FlowSection {
    pub fn options(&self) -> LatticeFlowOptions {
        LatticeFlowOptions {
            max_iter: self.max_iter,
            step: self.step,
            tol: self.tol,
            tau: self.tau,
            blowup: self.blowup,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write one trajectory CSV per flow.
    pub csv: bool,
    /// Write GPWB1 snapshots of final flow states.
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            snapshots: false,
        }
    }
}

/// Sizes of the invariant suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteSection {
    /// Random instances per representation class.
    pub moment_instances: usize,
    pub kempf_ness_fixtures: usize,
    pub psi_instances: usize,
    pub psi_panels: usize,
    /// Fixtures per cross-check of the stability module.
    pub fixtures: usize,
    pub ssc_trials: usize,
    /// Lattice size of the discrete identities.
    pub n: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            moment_instances: 200,
            kempf_ness_fixtures: 100,
            psi_instances: 50,
            psi_panels: 512,
            fixtures: 50,
            ssc_trials: 200,
            n: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<FixtureSection>,
    #[serde(default)]
    pub batch: BatchSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub suite: SuiteSection,
}

pub(crate) fn config_err<T>(location: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        location: location.into(),
        message: message.into(),
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl ExperimentConfig {
    /// Defaults for a mode.
    pub fn for_mode(mode: Mode) -> Self {
        Self {
            mode,
            seed: 0,
            lattice: LatticeSection::default(),
            fixture: None,
            batch: BatchSection::default(),
            scan: ScanSection::default(),
            flow: FlowSection::default(),
            output: OutputSection::default(),
            suite: SuiteSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).or_else(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(text, span.start);
                    format!("line {l}, column {c}")
                }
                None => "config".to_string(),
            };
            config_err(location, e.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::format::load(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config { location, message } => Error::Config {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice.n < 4 {
            return config_err("lattice.n", format!("must be at least 4, got {}", self.lattice.n));
        }
        if !(self.lattice.amplitude.is_finite() && self.lattice.amplitude > 0.0) {
            return config_err("lattice.amplitude", "must be positive");
        }
        let f = &self.flow;
        if !(f.tol > 0.0 && f.tol.is_finite()) {
            return config_err("flow.tol", "must be positive");
        }
        if !(f.step > 0.0 && f.step <= 1.0) {
            return config_err("flow.step", "must lie in (0, 1]");
        }
        if !(f.tau >= 0.0 && f.tau.is_finite()) {
            return config_err("flow.tau", "must be non-negative");
        }
        if !(f.blowup > 0.0) {
            return config_err("flow.blowup", "must be positive");
        }
        if f.max_iter == 0 {
            return config_err("flow.max_iter", "must be positive");
        }
        let s = &self.scan;
        if !(s.c_min > 0.0 && s.c_min < s.c_max && s.c_max.is_finite()) {
            return config_err(
                "scan",
                format!("need 0 < c_min < c_max, got [{}, {}]", s.c_min, s.c_max),
            );
        }
        if !(s.rel_width > 0.0 && s.rel_width < 1.0) {
            return config_err("scan.rel_width", "must lie in (0, 1)");
        }
        if s.degree < 1 {
            return config_err("scan.degree", "must be at least 1");
        }
        if self.suite.n < 4 {
            return config_err("suite.n", "must be at least 4");
        }
        if self.suite.psi_panels == 0 {
            return config_err("suite.psi_panels", "must be positive");
        }
        if self.batch.count == Some(0) {
            return config_err("batch.count", "must be positive");
        }
        match (&self.fixture, self.mode.kind()) {
            (Some(_), None) => {
                return config_err("fixture", format!("mode {} takes no fixture", self.mode));
            }
            (Some(fx), Some(_)) => match (&fx.path, &fx.degrees) {
                (Some(_), Some(_)) => return config_err("fixture", "give either path or degrees, not both"),
                (None, None) => return config_err("fixture", "needs path or degrees"),
                (Some(_), None) if fx.c.is_some() || !fx.support.is_empty() || fx.smooth => {
                    return config_err("fixture", "a fixture file already holds support, c and smooth")
                }
                (None, Some(_)) if fx.c.is_none() => return config_err("fixture.c", "missing"),
                _ => {}
            },
            _ => {}
        }
        if self.batch.c.is_some() && self.mode.kind().is_none() {
            return config_err("batch.c", format!("mode {} takes no c override", self.mode));
        }
        Ok(())
    }

    /// Canonical TOML of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

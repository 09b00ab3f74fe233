//! TOML experiment configuration.
//!
//! ```toml
//! seed = 2024
//! output_dir = "report"          # optional, --out wins
//!
//! [system]
//! kind = "shift"                 # or "baker"
//! window = [-10, 10]             # shift only
//! # m = 2                        # baker only, 1..=6
//!
//! [profile]
//! family = "gumbel"              # gumbel { a }, logistic, custom { table = [[s, λ], ...] }
//! a = 1.0
//!
//! [[experiments]]
//! kind = "lyapunov"
//! max_t = 6
//! samples = 20
//! ```
//!
//! Each experiment may override `system` and `profile`, and set `name` and
//! `gate`. The remaining keys depend on `kind`; see [`ExperimentSpec`].

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::sync::Arc;

use lambda_core::rigging::SpectrumFamily;
use lambda_core::{AgeWindow, CascadeSystem, Profile, Rational64, SingularSpectrum, SystemKind, TowerType};
use serde::{Deserialize, Serialize, Serializer};
use toml::Spanned;

/// Largest baker resolution accepted.
pub const BAKER_CAP: i64 = lambda_core::cascade::BAKER_MAX_M;
/// Largest shift window length accepted.
pub const SHIFT_CAP: usize = 401;
pub const MAX_SAMPLES: usize = 100_000;
pub const MAX_TRUNCATION: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn messages(&self) -> Vec<String> {
        self.0.iter().map(|e| e.message.clone()).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    system: Option<Spanned<RawSystem>>,
    profile: Option<Spanned<ProfileDecl>>,
    #[serde(default)]
    experiments: Vec<Spanned<RawExperiment>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    kind: SystemKind,
    window: Option<[i64; 2]>,
    m: Option<Spanned<i64>>,
}

/// A cascade system declaration.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemDecl {
    Shift { window: [i64; 2] },
    Baker { m: i64 },
}

impl SystemDecl {
    pub fn build(&self) -> lambda_core::Result<Arc<CascadeSystem>> {
        Ok(Arc::new(match *self {
            SystemDecl::Shift { window: [lo, hi] } => CascadeSystem::shift(AgeWindow::new(lo, hi)?),
            SystemDecl::Baker { m } => CascadeSystem::baker(m)?,
        }))
    }

    pub fn window(&self) -> [i64; 2] {
        match *self {
            SystemDecl::Shift { window } => window,
            SystemDecl::Baker { m } => [-m, m],
        }
    }

    pub fn is_baker(&self) -> bool {
        matches!(self, SystemDecl::Baker { .. })
    }
}

/// λ profile as written in a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileDecl {
    Gumbel { a: f64 },
    Logistic,
    Custom { table: Vec<(f64, f64)> },
}

impl ProfileDecl {
    pub fn build(&self) -> lambda_core::Result<Profile> {
        match self {
            ProfileDecl::Gumbel { a } => Profile::gumbel(*a),
            ProfileDecl::Logistic => Ok(Profile::Logistic),
            ProfileDecl::Custom { table } => Profile::custom(table.clone()),
        }
    }
}

/// Singular spectrum as written in a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumDecl {
    Power { alpha: f64, truncation: Option<usize> },
    Geometric { q: f64, truncation: Option<usize> },
    Raw { values: Vec<f64> },
}

impl SpectrumDecl {
    pub const DEFAULT_TRUNCATION: usize = 1000;

    pub fn build(&self) -> lambda_core::Result<SingularSpectrum> {
        match self {
            SpectrumDecl::Power { alpha, truncation } => {
                SingularSpectrum::new(SpectrumFamily::Power { alpha: *alpha }, truncation.unwrap_or(Self::DEFAULT_TRUNCATION))
            }
            SpectrumDecl::Geometric { q, truncation } => {
                SingularSpectrum::new(SpectrumFamily::Geometric { q: *q }, truncation.unwrap_or(Self::DEFAULT_TRUNCATION))
            }
            SpectrumDecl::Raw { values } => SingularSpectrum::raw(values.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Covariance,
    Imprimitivity,
    Admissibility,
    Lyapunov,
    Positivity,
    Tower,
    Classify,
    Kothe,
    Theorem,
    Normalization,
    Isometry,
    Asymmetry,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Covariance => "covariance",
            Self::Imprimitivity => "imprimitivity",
            Self::Admissibility => "admissibility",
            Self::Lyapunov => "lyapunov",
            Self::Positivity => "positivity",
            Self::Tower => "tower",
            Self::Classify => "classify",
            Self::Kothe => "kothe",
            Self::Theorem => "theorem",
            Self::Normalization => "normalization",
            Self::Isometry => "isometry",
            Self::Asymmetry => "asymmetry",
        }
    }

    /// Parameter keys understood by this kind, besides the common ones.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::Covariance | Self::Imprimitivity | Self::Asymmetry => &["t"],
            Self::Admissibility => &["t", "grid"],
            Self::Lyapunov => &["max_t", "samples", "max_ratio"],
            Self::Positivity => &["t", "modes", "profiles"],
            Self::Tower => &["tower", "cutoff", "samples"],
            Self::Classify => &["spectrum", "expect_nuclear"],
            Self::Kothe => &["spectrum", "n1", "n2", "expect_nuclear"],
            Self::Theorem => &["t", "samples"],
            Self::Normalization | Self::Isometry => &["samples"],
        }
    }

    /// Probes that report rather than assert default to ungated.
    fn gated_by_default(self) -> bool {
        !matches!(self, Self::Positivity | Self::Asymmetry)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: ExperimentKind,
    name: Option<String>,
    gate: Option<bool>,
    system: Option<RawSystem>,
    profile: Option<ProfileDecl>,
    t: Option<Vec<i64>>,
    grid: Option<[i64; 2]>,
    max_t: Option<i64>,
    samples: Option<usize>,
    max_ratio: Option<f64>,
    modes: Option<Vec<Vec<i64>>>,
    profiles: Option<Vec<ProfileDecl>>,
    tower: Option<TowerType>,
    cutoff: Option<u32>,
    spectrum: Option<SpectrumDecl>,
    n1: Option<String>,
    n2: Option<String>,
    expect_nuclear: Option<bool>,
}

impl RawExperiment {
    fn provided(&self) -> Vec<&'static str> {
        [
            ("t", self.t.is_some()),
            ("grid", self.grid.is_some()),
            ("max_t", self.max_t.is_some()),
            ("samples", self.samples.is_some()),
            ("max_ratio", self.max_ratio.is_some()),
            ("modes", self.modes.is_some()),
            ("profiles", self.profiles.is_some()),
            ("tower", self.tower.is_some()),
            ("cutoff", self.cutoff.is_some()),
            ("spectrum", self.spectrum.is_some()),
            ("n1", self.n1.is_some()),
            ("n2", self.n2.is_some()),
            ("expect_nuclear", self.expect_nuclear.is_some()),
        ]
        .into_iter()
        .filter_map(|(k, set)| set.then_some(k))
        .collect()
    }
}

fn grade<S: Serializer>(g: &Rational64, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(g)
}

/// Validated parameters per experiment kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExperimentSpec {
    Covariance { t: Vec<i64> },
    Imprimitivity { t: Vec<i64> },
    Admissibility { grid: [i64; 2], t: Vec<i64> },
    Lyapunov { max_t: i64, samples: usize, max_ratio: Option<f64> },
    Positivity { t: Vec<i64>, modes: Vec<Vec<i64>>, profiles: Vec<ProfileDecl> },
    Tower { tower: TowerType, cutoff: u32, samples: usize },
    Classify { spectrum: SpectrumDecl, expect_nuclear: Option<bool> },
    Kothe {
        spectrum: SpectrumDecl,
        #[serde(serialize_with = "grade")]
        n1: Rational64,
        #[serde(serialize_with = "grade")]
        n2: Rational64,
        expect_nuclear: Option<bool>,
    },
    Theorem { t: Vec<i64>, samples: usize },
    Normalization { samples: usize },
    Isometry { samples: usize },
    Asymmetry { t: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Experiment {
    pub name: String,
    pub gate: bool,
    pub system: SystemDecl,
    pub profile: ProfileDecl,
    pub spec: ExperimentSpec,
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self.spec {
            ExperimentSpec::Covariance { .. } => ExperimentKind::Covariance,
            ExperimentSpec::Imprimitivity { .. } => ExperimentKind::Imprimitivity,
            ExperimentSpec::Admissibility { .. } => ExperimentKind::Admissibility,
            ExperimentSpec::Lyapunov { .. } => ExperimentKind::Lyapunov,
            ExperimentSpec::Positivity { .. } => ExperimentKind::Positivity,
            ExperimentSpec::Tower { .. } => ExperimentKind::Tower,
            ExperimentSpec::Classify { .. } => ExperimentKind::Classify,
            ExperimentSpec::Kothe { .. } => ExperimentKind::Kothe,
            ExperimentSpec::Theorem { .. } => ExperimentKind::Theorem,
            ExperimentSpec::Normalization { .. } => ExperimentKind::Normalization,
            ExperimentSpec::Isometry { .. } => ExperimentKind::Isometry,
            ExperimentSpec::Asymmetry { .. } => ExperimentKind::Asymmetry,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    pub system: SystemDecl,
    pub profile: ProfileDecl,
    pub experiments: Vec<Experiment>,
}

pub const DEFAULT_SEED: u64 = 0;

struct Ctx<'a> {
    text: &'a str,
    errors: Vec<ConfigError>,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(ConfigError { line, message: message.into() });
    }

    fn system(&mut self, raw: &RawSystem, line: usize) -> Option<SystemDecl> {
        match raw.kind {
            SystemKind::Shift => {
                if raw.m.is_some() {
                    self.err(Some(line), "shift systems take `window`, not `m`");
                }
                let Some([lo, hi]) = raw.window else {
                    self.err(Some(line), "shift system requires `window = [lo, hi]`");
                    return None;
                };
                if let Err(e) = AgeWindow::new(lo, hi) {
                    self.err(Some(line), e.to_string());
                    return None;
                }
                if (hi - lo + 1) as usize > SHIFT_CAP {
                    self.err(Some(line), format!("window length exceeds desk-scale cap {SHIFT_CAP}"));
                    return None;
                }
                Some(SystemDecl::Shift { window: [lo, hi] })
            }
            SystemKind::Baker => {
                if raw.window.is_some() {
                    self.err(Some(line), "baker systems take `m`, not `window`");
                }
                let Some(m) = &raw.m else {
                    self.err(Some(line), "baker system requires `m`");
                    return None;
                };
                let m_line = Some(self.line(m.span()));
                let m = *m.get_ref();
                if m > BAKER_CAP {
                    self.err(m_line, format!("m exceeds desk-scale cap {BAKER_CAP}"));
                    return None;
                }
                if m < 1 {
                    self.err(m_line, "m must be at least 1");
                    return None;
                }
                Some(SystemDecl::Baker { m })
            }
        }
    }

    fn profile(&mut self, p: &ProfileDecl, line: usize) -> bool {
        match p.build() {
            Ok(_) => true,
            Err(e) => {
                self.err(Some(line), e.to_string());
                false
            }
        }
    }
}

/// Parses and validates a config, collecting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigErrors(vec![ConfigError { line, message: e.message().trim().to_string() }])
    })?;
    let mut ctx = Ctx { text, errors: Vec::new() };

    let system = match &raw.system {
        Some(s) => {
            let line = ctx.line(s.span());
            ctx.system(s.get_ref(), line)
        }
        None => {
            ctx.err(None, "system required");
            None
        }
    };
    let profile = match &raw.profile {
        Some(p) => {
            let line = ctx.line(p.span());
            ctx.profile(p.get_ref(), line).then(|| p.get_ref().clone())
        }
        None => {
            ctx.err(None, "profile required");
            None
        }
    };

    let mut experiments = Vec::new();
    for (i, spanned) in raw.experiments.iter().enumerate() {
        let line = ctx.line(spanned.span());
        let e = spanned.get_ref();
        let kind = e.kind;
        for key in e.provided() {
            if !kind.keys().contains(&key) {
                ctx.err(Some(line), format!("key `{key}` is not used by experiment kind `{}`", kind.as_str()));
            }
        }
        let sys = match &e.system {
            Some(s) => ctx.system(s, line),
            None => system.clone(),
        };
        let prof = match &e.profile {
            Some(p) => ctx.profile(p, line).then(|| p.clone()),
            None => profile.clone(),
        };
        let (Some(sys), Some(prof)) = (sys, prof) else { continue };
        if let Some(spec) = validate_spec(&mut ctx, e, &sys, &prof, line) {
            experiments.push(Experiment {
                name: e.name.clone().unwrap_or_else(|| format!("{}-{}", kind.as_str(), i + 1)),
                gate: e.gate.unwrap_or(kind.gated_by_default()),
                system: sys,
                profile: prof,
                spec,
            });
        }
    }

    let mut seen = std::collections::BTreeSet::new();
    for e in &experiments {
        if !seen.insert(e.name.clone()) {
            ctx.err(None, format!("experiment name `{}` is used twice", e.name));
        }
    }

    if !ctx.errors.is_empty() {
        return Err(ConfigErrors(ctx.errors));
    }
    Ok(ExperimentConfig {
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        output_dir: raw.output_dir,
        system: system.expect("no errors"),
        profile: profile.expect("no errors"),
        experiments,
    })
}

fn validate_spec(
    ctx: &mut Ctx<'_>,
    e: &RawExperiment,
    sys: &SystemDecl,
    prof: &ProfileDecl,
    line: usize,
) -> Option<ExperimentSpec> {
    let [lo, hi] = sys.window();
    let span = hi - lo;
    let before = ctx.errors.len();
    let times = |ctx: &mut Ctx<'_>, default: &[i64], min: i64, max: i64| -> Vec<i64> {
        let t = e.t.clone().unwrap_or_else(|| default.to_vec());
        if t.is_empty() {
            ctx.err(Some(line), "`t` must not be empty");
        }
        if let Some(bad) = t.iter().find(|&&x| x < min || x > max) {
            ctx.err(Some(line), format!("t = {bad} outside {min}..={max} for window [{lo}, {hi}]"));
        }
        t
    };
    let samples = |ctx: &mut Ctx<'_>, default: usize| -> usize {
        let s = e.samples.unwrap_or(default);
        if s == 0 || s > MAX_SAMPLES {
            ctx.err(Some(line), format!("samples = {s} outside 1..={MAX_SAMPLES}"));
        }
        s
    };
    let spectrum = |ctx: &mut Ctx<'_>| -> Option<SpectrumDecl> {
        let Some(s) = e.spectrum.clone() else {
            ctx.err(Some(line), "`spectrum` required");
            return None;
        };
        let too_long = match &s {
            SpectrumDecl::Power { truncation, .. } | SpectrumDecl::Geometric { truncation, .. } => {
                truncation.is_some_and(|k| k > MAX_TRUNCATION)
            }
            SpectrumDecl::Raw { values } => values.len() > MAX_TRUNCATION,
        };
        if too_long {
            ctx.err(Some(line), format!("spectrum truncation exceeds {MAX_TRUNCATION}"));
        }
        if let Err(err) = s.build() {
            ctx.err(Some(line), err.to_string());
        }
        Some(s)
    };

    let spec = match e.kind {
        ExperimentKind::Covariance => ExperimentSpec::Covariance { t: times(ctx, &[0, 1, 2, 3], 0, span) },
        ExperimentKind::Imprimitivity => ExperimentSpec::Imprimitivity { t: times(ctx, &[1, 2], 0, span) },
        ExperimentKind::Asymmetry => ExperimentSpec::Asymmetry { t: times(ctx, &[0, 1, 2], 0, span) },
        ExperimentKind::Admissibility => {
            let grid = e.grid.unwrap_or([-20, 20]);
            if grid[0] > -20 || grid[1] < 20 {
                ctx.err(Some(line), "admissibility grid must cover [-20, 20]");
            }
            if grid[1] - grid[0] > 100_000 {
                ctx.err(Some(line), "admissibility grid is too long");
            }
            ExperimentSpec::Admissibility { grid, t: times(ctx, &[1, 2], 1, 1000) }
        }
        ExperimentKind::Lyapunov => {
            let max_t = e.max_t.unwrap_or(5);
            if max_t < 0 || lo + max_t > hi - max_t {
                ctx.err(
                    Some(line),
                    format!("max_t = {max_t} leaves no ages at least max_t from both ends of [{lo}, {hi}]"),
                );
            }
            if let Some(r) = e.max_ratio {
                if !(r > 0.0) {
                    ctx.err(Some(line), "max_ratio must be positive");
                }
            }
            ExperimentSpec::Lyapunov { max_t, samples: samples(ctx, 20), max_ratio: e.max_ratio }
        }
        ExperimentKind::Positivity => {
            if !sys.is_baker() {
                ctx.err(Some(line), "positivity probe needs a baker system");
            }
            let modes = e.modes.clone().unwrap_or_else(|| vec![vec![0]]);
            for s in &modes {
                if s.is_empty() || s.iter().any(|&i| i < lo || i > hi) {
                    ctx.err(Some(line), format!("mode {s:?} must be a nonempty subset of [{lo}, {hi}]"));
                }
            }
            let profiles = e.profiles.clone().unwrap_or_else(|| vec![prof.clone()]);
            for p in &profiles {
                ctx.profile(p, line);
            }
            ExperimentSpec::Positivity { t: times(ctx, &[1], 0, span), modes, profiles }
        }
        ExperimentKind::Tower => {
            let cutoff = e.cutoff.unwrap_or(3);
            if cutoff < 1 {
                ctx.err(Some(line), "cutoff must be at least 1");
            }
            ExperimentSpec::Tower { tower: e.tower.unwrap_or(TowerType::B), cutoff, samples: samples(ctx, 16) }
        }
        ExperimentKind::Classify => {
            ExperimentSpec::Classify { spectrum: spectrum(ctx)?, expect_nuclear: e.expect_nuclear }
        }
        ExperimentKind::Kothe => {
            let spectrum = spectrum(ctx)?;
            let mut grade = |key: &str, v: &Option<String>, default: Rational64| -> Rational64 {
                match v {
                    None => default,
                    Some(s) => s.trim().parse().unwrap_or_else(|_| {
                        ctx.err(Some(line), format!("`{key}` = {s:?} is not a fraction like \"1/2\""));
                        default
                    }),
                }
            };
            let n1 = grade("n1", &e.n1, Rational64::from_integer(0));
            let n2 = grade("n2", &e.n2, Rational64::new(1, 2));
            if !(Rational64::from_integer(0) <= n1 && n1 < n2 && n2 < Rational64::from_integer(1)) {
                ctx.err(Some(line), format!("need 0 <= n1 < n2 < 1, got n1 = {n1}, n2 = {n2}"));
            }
            ExperimentSpec::Kothe { spectrum, n1, n2, expect_nuclear: e.expect_nuclear }
        }
        ExperimentKind::Theorem => {
            ExperimentSpec::Theorem { t: times(ctx, &[1, 2], 1, span), samples: samples(ctx, 16) }
        }
        ExperimentKind::Normalization => ExperimentSpec::Normalization { samples: samples(ctx, 50) },
        ExperimentKind::Isometry => ExperimentSpec::Isometry { samples: samples(ctx, 100) },
    };
    (ctx.errors.len() == before).then_some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
kind = "shift"
window = [-10, 10]

[profile]
family = "gumbel"
a = 1.0

[[experiments]]
kind = "lyapunov"
max_t = 5
"#;

    #[test]
    fn minimal_config_is_valid() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.experiments.len(), 1);
        assert_eq!(c.experiments[0].name, "lyapunov-1");
        assert!(c.experiments[0].gate);
        assert_eq!(c.experiments[0].spec, ExperimentSpec::Lyapunov { max_t: 5, samples: 20, max_ratio: None });
    }

    #[test]
    fn baker_cap_is_enforced_with_line() {
        let text = "[system]\nkind = \"baker\"\nm = 12\n\n[profile]\nfamily = \"logistic\"\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.0[0].message, "m exceeds desk-scale cap 6");
        assert_eq!(err.0[0].line, Some(3));
    }

    #[test]
    fn missing_profile_is_reported() {
        let err = parse_config("[system]\nkind = \"shift\"\nwindow = [-2, 2]\n").unwrap_err();
        assert_eq!(err.messages(), vec!["profile required"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("max_t = 5", "max_t = 5\nbogus = 1");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0[0].message.contains("bogus"), "{err}");
        assert!(err.0[0].line.is_some());
        let text = MINIMAL.replace("max_t = 5", "max_t = 5\ncutoff = 2");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("`cutoff` is not used by experiment kind `lyapunov`"), "{err}");
        let text = MINIMAL.replace("a = 1.0", "a = 1.0\nb = 2.0");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn out_of_range_parameters() {
        let text = MINIMAL.replace("max_t = 5", "max_t = 11");
        assert!(parse_config(&text).unwrap_err().to_string().contains("max_t = 11"));
        let text = MINIMAL.replace("a = 1.0", "a = -1.0");
        assert!(parse_config(&text).is_err());
        let text = MINIMAL.replace("kind = \"lyapunov\"\nmax_t = 5", "kind = \"positivity\"");
        assert!(parse_config(&text).unwrap_err().to_string().contains("baker"));
        let text = MINIMAL.replace("kind = \"lyapunov\"\nmax_t = 5", "kind = \"kothe\"\nspectrum = { family = \"geometric\", q = 0.5 }\nn1 = \"1/2\"\nn2 = \"1/3\"");
        assert!(parse_config(&text).unwrap_err().to_string().contains("n1 < n2"));
    }

    #[test]
    fn overrides_and_defaults() {
        let text = format!(
            "{MINIMAL}\n[[experiments]]\nkind = \"positivity\"\nsystem = {{ kind = \"baker\", m = 2 }}\nprofiles = [{{ family = \"gumbel\", a = 2.0 }}]\n\n[[experiments]]\nkind = \"kothe\"\nspectrum = {{ family = \"geometric\", q = 0.5, truncation = 64 }}\n"
        );
        let c = parse_config(&text).unwrap();
        let p = &c.experiments[1];
        assert_eq!(p.system, SystemDecl::Baker { m: 2 });
        assert!(!p.gate);
        let k = &c.experiments[2];
        assert_eq!(k.kind(), ExperimentKind::Kothe);
        match &k.spec {
            ExperimentSpec::Kothe { n1, n2, .. } => assert_eq!((*n1, *n2), (Rational64::from_integer(0), Rational64::new(1, 2))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_experiment_list_is_valid() {
        let text = "[system]\nkind = \"shift\"\nwindow = [-2, 2]\n[profile]\nfamily = \"logistic\"\n";
        assert!(parse_config(text).unwrap().experiments.is_empty());
    }
}

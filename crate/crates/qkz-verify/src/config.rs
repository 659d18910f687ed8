//! Run configuration: file format, defaults and validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qkz::Complex64;
use qkz::contour_quadrature::QuadOptions;
use qkz::qkz_operators::ModelParams;
use qkz::sampling::DEFAULT_Z_BOX;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VerifyError};
use crate::report::Cplx;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Barnes,
    Detm,
    Identities,
    Spectrum,
    DetIntegral,
    Shift,
    MuOde,
    Vanishing,
    Kernel,
    Grassmann,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Barnes,
        Suite::Detm,
        Suite::Identities,
        Suite::Spectrum,
        Suite::DetIntegral,
        Suite::Shift,
        Suite::MuOde,
        Suite::Vanishing,
        Suite::Kernel,
        Suite::Grassmann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Barnes => "barnes",
            Suite::Detm => "detm",
            Suite::Identities => "identities",
            Suite::Spectrum => "spectrum",
            Suite::DetIntegral => "det-integral",
            Suite::Shift => "shift",
            Suite::MuOde => "mu-ode",
            Suite::Vanishing => "vanishing",
            Suite::Kernel => "kernel",
            Suite::Grassmann => "grassmann",
        }
    }

    /// Mixed into the seed so a suite draws the same inputs alone or in `all`.
    pub fn seed_tag(self) -> u64 {
        (Suite::ALL.iter().position(|&s| s == self).expect("listed") as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A suite name or `all`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection(pub Vec<Suite>);

impl FromStr for Selection {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Selection(Suite::ALL.to_vec()));
        }
        Suite::ALL
            .iter()
            .find(|x| x.name() == s)
            .map(|&x| Selection(vec![x]))
            .ok_or_else(|| VerifyError::invalid("suite", format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl FromStr for Format {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(VerifyError::invalid("format", format!("expected json or text, got {s:?}"))),
        }
    }
}

// ---- file format ----

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub suite: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub model: RawModel,
    pub quadrature: RawQuadrature,
    pub analysis: RawAnalysis,
    pub output: RawOutput,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawModel {
    pub n: Option<usize>,
    pub ell: Option<usize>,
    /// Explicit (n, ℓ) pairs replacing each suite's default list.
    pub cases: Option<Vec<(usize, usize)>>,
    pub hbar: Option<Cplx>,
    pub p: Option<Cplx>,
    pub mu: Option<Cplx>,
    pub z: Option<RawZ>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum RawZ {
    Random { spread: Option<f64> },
    Explicit { values: Vec<Cplx> },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawQuadrature {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_depth: Option<u32>,
    pub initial_panels: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawAnalysis {
    pub rank_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawOutput {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Command-line values; each one present replaces the file value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub suite: Option<Selection>,
    pub n: Option<usize>,
    pub ell: Option<usize>,
    pub mu_re: Option<f64>,
    pub mu_im: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

// ---- validated config ----

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ZSpec {
    Random { spread: f64 },
    Explicit { values: Vec<Cplx> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub initial_panels: usize,
}

impl QuadConfig {
    pub fn options(&self) -> QuadOptions {
        QuadOptions { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_depth: self.max_depth, initial_panels: self.initial_panels, parallel: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub n: Option<usize>,
    pub ell: Option<usize>,
    pub cases: Option<Vec<(usize, usize)>>,
    pub hbar: Cplx,
    pub p: Cplx,
    pub mu: Cplx,
    /// Whether μ was given; otherwise suites use their own μ values.
    pub mu_explicit: bool,
    pub z: ZSpec,
    pub quadrature: QuadConfig,
    pub rank_threshold: f64,
    pub seed: u64,
    pub samples: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        resolve(RawConfig::default(), Overrides::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn for_suite(suite: Suite) -> Self {
        Self { suites: vec![suite], ..Self::default() }
    }

    pub fn hbar_c(&self) -> Complex64 {
        self.hbar.into()
    }

    pub fn mu_c(&self) -> Complex64 {
        self.mu.into()
    }

    pub fn quad(&self) -> QuadOptions {
        self.quadrature.options()
    }

    pub fn explicit_z(&self) -> Option<Vec<Complex64>> {
        match &self.z {
            ZSpec::Explicit { values } => Some(values.iter().map(|&c| c.into()).collect()),
            ZSpec::Random { .. } => None,
        }
    }

    /// The cases a suite runs: its defaults, narrowed by `n`/`ℓ`, or the
    /// configured list. A fully specified (n, ℓ) absent from the defaults is
    /// run on its own.
    pub fn cases(&self, defaults: &[(usize, usize)]) -> Vec<(usize, usize)> {
        if let Some(c) = &self.cases {
            return c.clone();
        }
        let keep: Vec<(usize, usize)> =
            defaults.iter().copied().filter(|&(n, l)| self.n.is_none_or(|x| x == n) && self.ell.is_none_or(|x| x == l)).collect();
        match (keep.is_empty(), self.n, self.ell) {
            (true, Some(n), Some(l)) => vec![(n, l)],
            _ => keep,
        }
    }

    /// The n values of a suite indexed by n alone.
    pub fn ns(&self, defaults: std::ops::RangeInclusive<usize>) -> Vec<usize> {
        match self.n {
            Some(n) => vec![n],
            None => defaults.collect(),
        }
    }

    /// The weights 0..=n, or just the configured ℓ.
    pub fn ells(&self, n: usize) -> Vec<usize> {
        match self.ell {
            Some(l) if l <= n => vec![l],
            Some(_) => Vec::new(),
            None => (0..=n).collect(),
        }
    }
}

pub fn load_config(path: Option<&Path>, overrides: Overrides) -> Result<RunConfig> {
    let raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| VerifyError::Io { path: p.to_path_buf(), source: e })?;
            parse_config(&text)?
        }
        None => RawConfig::default(),
    };
    resolve(raw, overrides)
}

pub fn parse_config(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| {
        let location = e.span().map(|s| line_col(text, s.start));
        VerifyError::Parse { location, message: e.message().to_string() }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(VerifyError::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

pub fn resolve(raw: RawConfig, ov: Overrides) -> Result<RunConfig> {
    let suites = match ov.suite {
        Some(s) => s.0,
        None => match raw.suite {
            Some(s) => s.parse::<Selection>()?.0,
            None => Suite::ALL.to_vec(),
        },
    };

    let hbar: Complex64 = raw.model.hbar.map_or(Complex64::new(1.0, 0.0), Into::into);
    if !(hbar.norm() > 0.0 && hbar.re.is_finite() && hbar.im.is_finite()) {
        return Err(VerifyError::invalid("model.hbar", "ħ must be finite and nonzero"));
    }
    let p = 2.0 * hbar;
    if let Some(given) = raw.model.p {
        let given: Complex64 = given.into();
        if (given - p).norm() > 1e-12 * p.norm() {
            return Err(VerifyError::invalid("model.p", format!("p must equal 2ħ = {p}, got {given}")));
        }
    }

    let mut mu: Option<Complex64> = raw.model.mu.map(Into::into);
    if ov.mu_re.is_some() || ov.mu_im.is_some() {
        let base = mu.unwrap_or(Complex64::new(0.0, PI));
        mu = Some(Complex64::new(ov.mu_re.unwrap_or(if raw.model.mu.is_some() { base.re } else { 0.0 }), ov.mu_im.unwrap_or(base.im)));
    }
    let mu_explicit = mu.is_some();
    let mu = mu.unwrap_or(Complex64::new(0.0, PI));
    if !(mu.re.is_finite() && mu.im >= 0.0 && mu.im < 2.0 * PI) {
        return Err(VerifyError::invalid("model.mu", format!("Im μ must lie in [0, 2π), got μ = {mu}")));
    }

    let mut n = ov.n.or(raw.model.n);
    let ell = ov.ell.or(raw.model.ell);
    let z = match raw.model.z {
        None => ZSpec::Random { spread: DEFAULT_Z_BOX },
        Some(RawZ::Random { spread }) => ZSpec::Random { spread: positive("model.z.spread", spread.unwrap_or(DEFAULT_Z_BOX))? },
        Some(RawZ::Explicit { values }) => {
            match n {
                Some(k) if k != values.len() => {
                    return Err(VerifyError::invalid("model.z", format!("{} values given for n = {k}", values.len())));
                }
                None => n = Some(values.len()),
                _ => {}
            }
            let zc: Vec<Complex64> = values.iter().map(|&c| c.into()).collect();
            ModelParams::new(zc.len(), 0, hbar, mu, zc).map_err(|e| VerifyError::invalid("model.z", e.to_string()))?;
            ZSpec::Explicit { values }
        }
    };
    if let (Some(k), Some(l)) = (n, ell) {
        if l > k {
            return Err(VerifyError::invalid("model.ell", format!("ℓ = {l} exceeds n = {k}")));
        }
    }
    if n == Some(0) {
        return Err(VerifyError::invalid("model.n", "n must be at least 1"));
    }
    if let Some(cases) = &raw.model.cases {
        for &(k, l) in cases {
            if k == 0 || l > k {
                return Err(VerifyError::invalid("model.cases", format!("invalid case (n = {k}, ℓ = {l})")));
            }
            if let ZSpec::Explicit { values } = &z {
                if values.len() != k {
                    return Err(VerifyError::invalid("model.z", format!("{} values given for case n = {k}", values.len())));
                }
            }
        }
    }

    let rel_tol = positive("quadrature.rel_tol", ov.tol.or(raw.quadrature.rel_tol).unwrap_or(DEFAULT_QUAD_TOL))?;
    let abs_tol = raw.quadrature.abs_tol.unwrap_or(rel_tol * 1e-2);
    if !(abs_tol.is_finite() && abs_tol >= 0.0) {
        return Err(VerifyError::invalid("quadrature.abs_tol", "must be finite and non-negative"));
    }
    let defaults = QuadOptions::default();
    let max_depth = raw.quadrature.max_depth.unwrap_or(defaults.max_depth);
    let initial_panels = raw.quadrature.initial_panels.unwrap_or(defaults.initial_panels);
    if initial_panels == 0 || max_depth > 30 {
        return Err(VerifyError::invalid("quadrature", "need initial_panels ≥ 1 and max_depth ≤ 30"));
    }

    let rank_threshold = raw.analysis.rank_threshold.unwrap_or(DEFAULT_RANK_THRESHOLD);
    if !(rank_threshold > 0.0 && rank_threshold < 1.0) {
        return Err(VerifyError::invalid("analysis.rank_threshold", "must lie in (0, 1)"));
    }
    let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(VerifyError::invalid("samples", "must be at least 1"));
    }

    Ok(RunConfig {
        suites,
        n,
        ell,
        cases: raw.model.cases,
        hbar: hbar.into(),
        p: p.into(),
        mu: mu.into(),
        mu_explicit,
        z,
        quadrature: QuadConfig { rel_tol, abs_tol, max_depth, initial_panels },
        rank_threshold,
        seed: ov.seed.or(raw.seed).unwrap_or(DEFAULT_SEED),
        samples,
        output: ov.out.or(raw.output.path),
        format: ov.format.or(raw.output.format).unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from(text: &str) -> Result<RunConfig> {
        resolve(parse_config(text)?, Overrides::default())
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = from("suite = \"barnes\"").unwrap();
        assert_eq!(c.suites, vec![Suite::Barnes]);
        assert_eq!(c.hbar, Cplx { re: 1.0, im: 0.0 });
        assert_eq!(c.p, Cplx { re: 2.0, im: 0.0 });
        assert_eq!(c.mu, Cplx { re: 0.0, im: PI });
        assert!(!c.mu_explicit);
        assert_eq!(c.seed, 42);
        assert_eq!(c.z, ZSpec::Random { spread: 0.4 });
    }

    #[test]
    fn mu_outside_the_strip_is_rejected() {
        let e = from("[model]\nmu = { re = 0.0, im = 7.853981633974483 }").unwrap_err();
        assert!(matches!(e, VerifyError::Invalid { field: "model.mu", .. }), "{e}");
        let e = from("[model]\nmu = { re = 0.0, im = -0.1 }").unwrap_err();
        assert!(matches!(e, VerifyError::Invalid { field: "model.mu", .. }));
        assert!(from("[model]\nmu = { re = 0.0, im = 0.0 }").is_ok());
    }

    #[test]
    fn z_length_must_match_n() {
        let text = "[model]\nn = 3\nz = { mode = \"explicit\", values = [{ re = 0.1, im = 0.0 }, { re = -0.1, im = 0.05 }] }";
        let e = from(text).unwrap_err();
        assert!(matches!(e, VerifyError::Invalid { field: "model.z", .. }), "{e}");
        let ok = from("[model]\nz = { mode = \"explicit\", values = [{ re = 0.1, im = 0.0 }, { re = -0.1, im = 0.05 }] }").unwrap();
        assert_eq!(ok.n, Some(2));
    }

    #[test]
    fn non_generic_z_is_rejected() {
        // z₁ − z₂ + ħ = 0
        let text = "[model]\nz = { mode = \"explicit\", values = [{ re = 0.0, im = 0.0 }, { re = 1.0, im = 0.0 }] }";
        assert!(matches!(from(text).unwrap_err(), VerifyError::Invalid { field: "model.z", .. }));
    }

    #[test]
    fn p_must_be_twice_hbar() {
        assert!(matches!(from("[model]\np = { re = 3.0, im = 0.0 }").unwrap_err(), VerifyError::Invalid { field: "model.p", .. }));
        let c = from("[model]\nhbar = { re = 0.5, im = 0.25 }\np = { re = 1.0, im = 0.5 }").unwrap();
        assert_eq!(c.p, Cplx { re: 1.0, im: 0.5 });
    }

    #[test]
    fn parse_errors_carry_a_location() {
        match parse_config("seed = 1\n[model]\nn = \"four\"\n").unwrap_err() {
            VerifyError::Parse { location: Some((line, _)), .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse_config("bogus = 1").unwrap_err(), VerifyError::Parse { .. }));
    }

    #[test]
    fn flags_override_the_file() {
        let raw = parse_config("seed = 7\n[model]\nmu = { re = 0.5, im = 1.0 }").unwrap();
        let ov = Overrides { seed: Some(9), mu_im: Some(2.0), n: Some(3), ell: Some(1), suite: Some("shift".parse().unwrap()), ..Default::default() };
        let c = resolve(raw, ov).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.mu, Cplx { re: 0.5, im: 2.0 });
        assert!(c.mu_explicit);
        assert_eq!(c.suites, vec![Suite::Shift]);
        assert_eq!(c.cases(&[(2, 1), (3, 1)]), vec![(3, 1)]);
        assert_eq!(c.cases(&[(2, 1)]), vec![(3, 1)]);
    }

    #[test]
    fn case_narrowing() {
        let c = RunConfig { n: Some(4), ..RunConfig::default() };
        assert_eq!(c.cases(&[(2, 1), (4, 1), (4, 2)]), vec![(4, 1), (4, 2)]);
        assert_eq!(c.ns(1..=6), vec![4]);
        assert_eq!(RunConfig::default().ns(1..=3), vec![1, 2, 3]);
        assert!("nope".parse::<Selection>().is_err());
        assert_eq!("all".parse::<Selection>().unwrap().0.len(), 10);
    }
}

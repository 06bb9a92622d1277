//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! tolerance = 1e-11
//! scheme = "adiabatic"            # or "interaction", "direct"
//! time_pairs = [[0.0, 0.5], [0.3, 1.3], [0.2, 1.7]]
//!
//! [modes]
//! n_min = 0
//! n_max = 500
//!
//! [[backgrounds]]
//! name = "quadratic"
//! kind = "sampled"                # massless | constant | power-law | tabulated | sampled
//! mass = 1.0
//! domain = [0.0, 2.0]
//! coefficients = [0.0, 0.0, 0.1]
//! points = 201
//!
//! [[families]]
//! kind = "library"                # or identity, diagonal-phase, constant-mixing, ...
//!
//! [averaging]
//! d = 0.5
//! n0 = 10
//! delta = 0.2
//! profile = { kind = "zero" }
//! ```
//!
//! Every field except `backgrounds` and `families` has a default.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frw_dirac::averaging_bound::{lower_bound, PhaseProfile, ProfileKind};
use frw_dirac::background::BackgroundModel;
use frw_dirac::complex_structure::{
    family_library, FamilyKind, ListedEntry, StructureFamily, DEFAULT_CONVENTION_FLOOR,
};
use frw_dirac::mode_dynamics::{check_tolerance, Scheme};
use frw_dirac::num_complex::Complex;
use frw_dirac::summability::Thresholds;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerance: f64,
    pub scheme: Scheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub time_pairs: Vec<[f64; 2]>,
    pub modes: ModeRange,
    pub thresholds: Thresholds<f64>,
    pub backgrounds: Vec<NamedBackground>,
    pub families: Vec<FamilyBlock>,
    /// Family names to run; empty runs all of them.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub select: Vec<String>,
    pub averaging: AveragingConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRange {
    pub n_min: u64,
    pub n_max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedBackground {
    pub name: String,
    #[serde(flatten)]
    pub spec: BackgroundSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackgroundSpec {
    Massless {
        domain: [f64; 2],
    },
    Constant {
        mass: f64,
        alpha: f64,
        domain: [f64; 2],
    },
    PowerLaw {
        mass: f64,
        exponent: f64,
        offset: f64,
        domain: [f64; 2],
    },
    /// Knots given inline or as an `eta,alpha` CSV (path relative to the config file).
    Tabulated {
        mass: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        samples_eta: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        samples_alpha: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        roundtrip_tolerance: Option<f64>,
    },
    /// α(η) = ∑ cₖ ηᵏ sampled on `points` equally spaced knots and splined.
    Sampled {
        mass: f64,
        domain: [f64; 2],
        coefficients: Vec<f64>,
        points: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cut: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// The shipped family library, seeded with the run seed.
    Library,
    Identity,
    DiagonalPhase { rate_f: f64, offset_f: f64, rate_g: f64, offset_g: f64 },
    ConstantMixing { angle: f64 },
    PowerDecay { amplitude: f64, exponent: f64 },
    Swap,
    RandomizedPhase {
        modulus: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Per-mode [κᶠ, λᶠ, λᵍ, κᵍ], each as [re, im].
    Listed { entries: Vec<[[f64; 2]; 4]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AveragingConfig {
    pub d: f64,
    pub n0: u64,
    pub delta: f64,
    /// Largest mode of the ω list ω_{n0}..=ω_{omega_n_max}.
    pub omega_n_max: u64,
    pub excisions: usize,
    pub profile: ProfileKind<f64>,
    pub start: f64,
    pub length: f64,
    /// Family whose partial sums are checked against I_δ/(Λ − δ).
    pub family: String,
    pub m_max: u64,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        Self {
            d: 0.5,
            n0: 10,
            delta: 0.2,
            omega_n_max: 50,
            excisions: 100,
            profile: ProfileKind::Zero,
            start: 0.0,
            length: 1.0,
            family: "power-decay-p2".into(),
            m_max: 500,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            tolerance: 1e-11,
            scheme: Scheme::default(),
            output_dir: None,
            threads: None,
            time_pairs: vec![[0.0, 0.5], [0.3, 1.3], [0.2, 1.7]],
            modes: ModeRange { n_min: 0, n_max: 500 },
            thresholds: Thresholds::default(),
            backgrounds: Vec::new(),
            families: Vec::new(),
            select: Vec::new(),
            averaging: AveragingConfig::default(),
        }
    }
}

/// Everything built from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub backgrounds: Vec<(String, BackgroundModel<f64>)>,
    pub families: Vec<StructureFamily<f64>>,
    /// The family used by the bounded-sum check, whether selected or not.
    pub averaging_family: Option<StructureFamily<f64>>,
    pub time_pairs: Vec<(f64, f64)>,
    pub profile: PhaseProfile<f64>,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_max: Option<u64>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub families: Vec<String>,
    pub d: Option<f64>,
    pub delta: Option<f64>,
    pub n0: Option<u64>,
}

impl RunConfig {
    /// Three backgrounds, the family library and the default averaging setup.
    pub fn standard() -> Self {
        Self {
            backgrounds: vec![
                NamedBackground { name: "massless".into(), spec: BackgroundSpec::Massless { domain: [0.0, 2.0] } },
                NamedBackground {
                    name: "constant".into(),
                    spec: BackgroundSpec::Constant { mass: 1.0, alpha: 0.0, domain: [0.0, 2.0] },
                },
                NamedBackground {
                    name: "quadratic".into(),
                    spec: BackgroundSpec::Sampled {
                        mass: 1.0,
                        domain: [0.0, 2.0],
                        coefficients: vec![0.0, 0.0, 0.1],
                        points: 201,
                    },
                },
            ],
            families: vec![FamilyBlock { name: None, spec: FamilySpec::Library, convention_floor: None, n_cut: None }],
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing configuration")
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).context("serialising configuration")
    }

    /// Reads a config file; relative `samples_file` paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for bg in &mut cfg.backgrounds {
            if let BackgroundSpec::Tabulated { samples_file: Some(f), .. } = &mut bg.spec {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n_max {
            self.modes.n_max = v;
        }
        if let Some(v) = o.tolerance {
            self.tolerance = v;
        }
        if let Some(v) = &o.out {
            self.output_dir = Some(v.clone());
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.threads {
            self.threads = Some(v);
        }
        if let Some(v) = o.d {
            self.averaging.d = v;
        }
        if let Some(v) = o.delta {
            self.averaging.delta = v;
        }
        if let Some(v) = o.n0 {
            self.averaging.n0 = v;
        }
        if !o.families.is_empty() {
            self.select = o.families.clone();
        }
    }

    /// Builds every block, reporting all violations at once.
    pub fn validate(&self) -> Result<Resolved> {
        let mut errors = Vec::new();
        if let Err(e) = check_tolerance(self.tolerance) {
            errors.push(format!("tolerance: {e}"));
        }
        if self.modes.n_min > self.modes.n_max {
            errors.push(format!("modes.n_min = {} exceeds modes.n_max = {}", self.modes.n_min, self.modes.n_max));
        }
        if self.time_pairs.is_empty() {
            errors.push("time_pairs must not be empty".into());
        }
        if self.threads == Some(0) {
            errors.push("threads must be positive".into());
        }
        let th = &self.thresholds;
        if !(th.margin > 0.0 && th.margin < 1.0) {
            errors.push(format!("thresholds.margin = {} must lie in (0, 1)", th.margin));
        }
        if !(th.cauchy_epsilon > 0.0) {
            errors.push(format!("thresholds.cauchy_epsilon = {} must be positive", th.cauchy_epsilon));
        }
        if !(th.divergence_ratio > 0.0) {
            errors.push(format!("thresholds.divergence_ratio = {} must be positive", th.divergence_ratio));
        }
        if !(th.oscillation_residual > 0.0) {
            errors.push(format!("thresholds.oscillation_residual = {} must be positive", th.oscillation_residual));
        }
        if th.fit_bins < 3 {
            errors.push(format!("thresholds.fit_bins = {} must be at least 3", th.fit_bins));
        }

        if self.backgrounds.is_empty() {
            errors.push("at least one [[backgrounds]] block is required".into());
        }
        let mut backgrounds = Vec::new();
        for (i, nb) in self.backgrounds.iter().enumerate() {
            if backgrounds.iter().any(|(n, _): &(String, _)| *n == nb.name) {
                errors.push(format!("backgrounds[{i}]: duplicate name {:?}", nb.name));
            }
            match build_background(&nb.spec) {
                Ok(bg) => {
                    for (j, p) in self.time_pairs.iter().enumerate() {
                        for t in p {
                            if let Err(e) = bg.check_domain(*t) {
                                errors.push(format!("time_pairs[{j}] on background {:?}: {e}", nb.name));
                            }
                        }
                    }
                    backgrounds.push((nb.name.clone(), bg));
                }
                Err(e) => errors.push(format!("backgrounds[{i}] ({}): {e:#}", nb.name)),
            }
        }

        if self.families.is_empty() {
            errors.push("at least one [[families]] block is required".into());
        }
        let mut families: Vec<StructureFamily<f64>> = Vec::new();
        for (i, fb) in self.families.iter().enumerate() {
            for fam in build_families(fb, self.seed) {
                if families.iter().any(|f| f.name == fam.name) {
                    errors.push(format!("families[{i}]: duplicate family name {:?}", fam.name));
                    continue;
                }
                if let Err(e) = fam.validate(self.modes.n_min) {
                    errors.push(format!("families[{i}] ({}): {e}", fam.name));
                }
                families.push(fam);
            }
        }

        let av = &self.averaging;
        if !(av.d > 0.0 && av.d < 1.0) {
            errors.push(format!("averaging.d = {} must lie in (0, 1)", av.d));
        }
        if !(av.delta > 0.0) {
            errors.push(format!("averaging.delta = {} must be positive", av.delta));
        }
        if av.omega_n_max < av.n0 {
            errors.push(format!("averaging.omega_n_max = {} is below averaging.n0 = {}", av.omega_n_max, av.n0));
        }
        if av.m_max < av.n0 {
            errors.push(format!("averaging.m_max = {} is below averaging.n0 = {}", av.m_max, av.n0));
        }
        let profile = match PhaseProfile::new(av.profile.clone(), av.start, av.length) {
            Ok(p) => {
                if av.d > 0.0 && av.d < 1.0 {
                    match lower_bound(&p, av.d, av.n0) {
                        Ok(l) if !(av.delta < l) => {
                            errors.push(format!("averaging.delta = {} must be below Lambda_n0 = {l}", av.delta))
                        }
                        Ok(_) => {}
                        Err(e) => errors.push(format!("averaging: {e}")),
                    }
                }
                Some(p)
            }
            Err(e) => {
                errors.push(format!("averaging.profile: {e}"));
                None
            }
        };
        let averaging_family = families.iter().find(|f| f.name == av.family).cloned();
        if averaging_family.is_none() && !families.is_empty() {
            errors.push(format!("averaging.family = {:?} names no configured family", av.family));
        }
        for name in &self.select {
            if !families.iter().any(|f| &f.name == name) {
                errors.push(format!("select: unknown family {name:?}"));
            }
        }
        if !self.select.is_empty() {
            families.retain(|f| self.select.contains(&f.name));
        }

        if !errors.is_empty() {
            bail!("invalid configuration:\n  - {}", errors.join("\n  - "));
        }
        Ok(Resolved {
            backgrounds,
            families,
            averaging_family,
            time_pairs: self.time_pairs.iter().map(|p| (p[0], p[1])).collect(),
            profile: profile.expect("validated"),
        })
    }
}

fn build_background(spec: &BackgroundSpec) -> Result<BackgroundModel<f64>> {
    let bg = match spec {
        BackgroundSpec::Massless { domain } => BackgroundModel::massless((domain[0], domain[1]))?,
        BackgroundSpec::Constant { mass, alpha, domain } => BackgroundModel::constant(*alpha, (domain[0], domain[1]), *mass)?,
        BackgroundSpec::PowerLaw { mass, exponent, offset, domain } => {
            BackgroundModel::power_law(*exponent, *offset, (domain[0], domain[1]), *mass)?
        }
        BackgroundSpec::Tabulated { mass, samples_eta, samples_alpha, samples_file, roundtrip_tolerance } => {
            let (etas, alphas) = match samples_file {
                Some(path) => {
                    if !samples_eta.is_empty() || !samples_alpha.is_empty() {
                        bail!("give either samples_file or inline samples, not both");
                    }
                    read_samples(path)?
                }
                None => (samples_eta.clone(), samples_alpha.clone()),
            };
            let tol = roundtrip_tolerance.unwrap_or(frw_dirac::background::DEFAULT_ROUNDTRIP_TOLERANCE);
            BackgroundModel::tabulated_with_tolerance(etas, alphas, *mass, tol)?
        }
        BackgroundSpec::Sampled { mass, domain, coefficients, points } => {
            let c = coefficients.clone();
            let f = move |t: f64| c.iter().rev().fold(0.0, |acc, &k| acc * t + k);
            BackgroundModel::tabulate_fn(f, (domain[0], domain[1]), *points, *mass)?
        }
    };
    Ok(bg)
}

fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let (mut etas, mut alphas) = (Vec::new(), Vec::new());
    for (i, row) in rdr.records().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), i + 1))?;
        let parse = |k: usize| -> Result<f64> {
            let field = row.get(k).with_context(|| format!("{} row {}: missing column {k}", path.display(), i + 1))?;
            field.trim().parse().with_context(|| format!("{} row {}: bad number {field:?}", path.display(), i + 1))
        };
        etas.push(parse(0)?);
        alphas.push(parse(1)?);
    }
    Ok((etas, alphas))
}

fn complex(v: [f64; 2]) -> Complex<f64> {
    Complex::new(v[0], v[1])
}

fn build_families(block: &FamilyBlock, seed: u64) -> Vec<StructureFamily<f64>> {
    let kind = match &block.spec {
        FamilySpec::Library => {
            return family_library(seed)
                .into_iter()
                .map(|f| match (block.convention_floor, block.n_cut) {
                    (None, None) => f,
                    (floor, cut) => {
                        let (fl, nc) = (floor.unwrap_or(f.convention_floor), cut.unwrap_or(f.n_cut));
                        f.with_convention(fl, nc)
                    }
                })
                .collect();
        }
        FamilySpec::Identity => FamilyKind::Identity,
        FamilySpec::DiagonalPhase { rate_f, offset_f, rate_g, offset_g } => {
            FamilyKind::DiagonalPhase { rate_f: *rate_f, offset_f: *offset_f, rate_g: *rate_g, offset_g: *offset_g }
        }
        FamilySpec::ConstantMixing { angle } => FamilyKind::ConstantMixing { angle: *angle },
        FamilySpec::PowerDecay { amplitude, exponent } => FamilyKind::PowerDecay { amplitude: *amplitude, exponent: *exponent },
        FamilySpec::Swap => FamilyKind::Swap,
        FamilySpec::RandomizedPhase { modulus, seed: s } => {
            FamilyKind::RandomizedPhase { modulus: *modulus, seed: s.unwrap_or(seed) }
        }
        FamilySpec::Listed { entries } => FamilyKind::Listed(
            entries
                .iter()
                .map(|e| ListedEntry {
                    kappa_f: complex(e[0]),
                    lambda_f: complex(e[1]),
                    lambda_g: complex(e[2]),
                    kappa_g: complex(e[3]),
                })
                .collect(),
        ),
    };
    let name = block.name.clone().unwrap_or_else(|| default_name(&block.spec));
    vec![StructureFamily::new(name, kind)
        .with_convention(block.convention_floor.unwrap_or(DEFAULT_CONVENTION_FLOOR), block.n_cut.unwrap_or(0))]
}

fn default_name(spec: &FamilySpec) -> String {
    match spec {
        FamilySpec::Library => "library".into(),
        FamilySpec::Identity => "identity".into(),
        FamilySpec::DiagonalPhase { .. } => "diagonal-phase".into(),
        FamilySpec::ConstantMixing { .. } => "constant-mixing".into(),
        FamilySpec::PowerDecay { exponent, .. } => format!("power-decay-p{exponent}"),
        FamilySpec::Swap => "swap".into(),
        FamilySpec::RandomizedPhase { .. } => "randomized-phase".into(),
        FamilySpec::Listed { .. } => "listed".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_config_round_trips_through_toml() {
        let mut cfg = RunConfig::standard();
        cfg.families.push(FamilyBlock {
            name: Some("listed".into()),
            spec: FamilySpec::Listed { entries: vec![[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]] },
            convention_floor: Some(0.4),
            n_cut: Some(3),
        });
        cfg.averaging.profile = ProfileKind::Sinusoid { amplitude: 1.0, frequency: 2.0, phase: 0.1 };
        cfg.output_dir = Some("out/x".into());
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn shipped_config_parses_and_validates() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/standard.toml");
        let cfg = RunConfig::load(&path).unwrap();
        let r = cfg.validate().unwrap();
        assert_eq!(r.backgrounds.len(), 3);
        assert!(r.families.len() >= 7);
        let tab = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tabulated.toml");
        RunConfig::load(&tab).unwrap().validate().unwrap();
    }

    #[test]
    fn standard_validates() {
        let r = RunConfig::standard().validate().unwrap();
        assert_eq!(r.time_pairs.len(), 3);
        assert_eq!(r.families.len(), 7);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut cfg = RunConfig::standard();
        cfg.tolerance = 1.0;
        cfg.averaging.d = 1.0;
        cfg.modes = ModeRange { n_min: 5, n_max: 1 };
        cfg.time_pairs.push([0.0, 9.0]);
        let msg = format!("{:#}", cfg.validate().unwrap_err());
        for needle in ["tolerance", "averaging.d = 1 must lie in (0, 1)", "modes.n_min", "time_pairs[3]"] {
            assert!(msg.contains(needle), "missing {needle:?} in {msg}");
        }
    }

    #[test]
    fn overrides_beat_file_values() {
        let mut cfg = RunConfig::standard();
        cfg.apply(&Overrides { n_max: Some(64), tolerance: Some(1e-9), seed: Some(3), d: Some(0.25), ..Default::default() });
        assert_eq!((cfg.modes.n_max, cfg.tolerance, cfg.seed, cfg.averaging.d), (64, 1e-9, 3, 0.25));
        cfg.apply(&Overrides { families: vec!["identity".into(), "swap".into()], ..Default::default() });
        let r = cfg.validate().unwrap();
        assert_eq!(r.families.len(), 2);
        assert!(r.averaging_family.is_some());
        cfg.select.push("nope".into());
        assert!(format!("{:#}", cfg.validate().unwrap_err()).contains("unknown family"));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let text = "[[backgrounds]]\nname = \"x\"\nkind = \"wobbly\"\n";
        assert!(RunConfig::from_toml_str(text).is_err());
    }
}

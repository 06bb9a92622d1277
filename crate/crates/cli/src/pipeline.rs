//! Subcommand execution.

use std::path::PathBuf;

use anyhow::{Context, Result};
use frw_dirac::averaging_bound::{
    adversarial_excisions, bounded_sum_conclusion, family_i_delta, family_partial_sums, lower_bound,
    verify_bound_chain, BoundVerification, Excision,
};
use frw_dirac::bogoliubov::{asymptote_residual, BogoliubovSweep};
use frw_dirac::complex_structure::StructureFamily;
use frw_dirac::mode_dynamics::{propagate_with, ModePropagator, PropagatorOptions};
use frw_dirac::spectrum::{degeneracy, omega, ModeIndex};
use frw_dirac::summability::{
    dynamics_sequence, dynamics_unitarity_from, equivalence, equivalence_sequence, mixed_conditions_from,
    mixed_sequences, sine_weighted_conditions_from, sine_weighted_sequences, uniqueness_verdict_from,
    MixedConditions, SineWeightedReports, SummabilityReport, TheoremVerdict, VerdictRecord, WeightedSequence,
};
use frw_dirac::{Error, Real};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Resolved, RunConfig};
use crate::output::{float, ArtifactWriter, FileRecord};

/// Environment variable naming the output directory when neither `--out`
/// nor `output_dir` is given.
pub const OUT_ENV: &str = "FRW_DIRAC_OUT";
pub const DEFAULT_OUT: &str = "frw-dirac-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Bogoliubov,
    Unitarity,
    Equivalence,
    Conditions,
    Verdict,
    BoundDemo,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Bogoliubov => "bogoliubov",
            Command::Unitarity => "unitarity",
            Command::Equivalence => "equivalence",
            Command::Conditions => "conditions",
            Command::Verdict => "verdict",
            Command::BoundDemo => "bound-demo",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// 0, or 2 when a counterexample candidate or bound violation was found.
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub files: Vec<FileRecord>,
    pub summary: Vec<String>,
}

pub fn output_dir(config: &RunConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// The config as embedded in artifacts: location and thread count do not
/// affect results and are left out so payloads compare across directories.
fn embedded(config: &RunConfig) -> RunConfig {
    RunConfig { output_dir: None, threads: None, ..config.clone() }
}

struct Run<'a> {
    config: &'a RunConfig,
    resolved: Resolved,
    options: PropagatorOptions<f64>,
    writer: ArtifactWriter,
    sweeps: Option<Vec<Vec<BogoliubovSweep<f64>>>>,
    summary: Vec<String>,
    alarm: bool,
}

pub fn run(command: Command, config: &RunConfig) -> Result<Outcome> {
    let resolved = config.validate()?;
    let out_dir = output_dir(config);
    let writer = ArtifactWriter::new(&out_dir, &embedded(config))?;
    let options = PropagatorOptions::new(config.tolerance).with_scheme(config.scheme);
    let mut r = Run { config, resolved, options, writer, sweeps: None, summary: Vec::new(), alarm: false };
    let work = |r: &mut Run| -> Result<()> {
        match command {
            Command::Evolve => r.evolve(),
            Command::Bogoliubov => r.bogoliubov(),
            Command::Unitarity => r.unitarity(),
            Command::Equivalence => r.equivalence(),
            Command::Conditions => r.conditions(),
            Command::Verdict => r.verdict(),
            Command::BoundDemo => r.bound_demo(),
            Command::All => {
                r.evolve()?;
                r.bogoliubov()?;
                r.unitarity()?;
                r.equivalence()?;
                r.conditions()?;
                r.verdict()?;
                r.bound_demo()
            }
        }
    };
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().context("building thread pool")?;
            pool.install(|| work(&mut r))?;
        }
        None => work(&mut r)?,
    }
    let Run { writer, summary, alarm, .. } = r;
    let files = writer.finish(command.name())?;
    Ok(Outcome { exit_code: if alarm { 2 } else { 0 }, out_dir, files, summary })
}

#[derive(Serialize)]
struct PairSummary {
    background: String,
    eta0: f64,
    eta: f64,
    modes: usize,
    max_unitarity_defect: f64,
    max_determinant_defect: f64,
    max_beta: f64,
    total_steps: usize,
}

#[derive(Serialize)]
struct DynamicsEntry<'a> {
    background: &'a str,
    eta0: f64,
    eta: f64,
    report: SummabilityReport<f64>,
}

#[derive(Serialize)]
struct ConditionsEntry<'a> {
    family: &'a str,
    background: &'a str,
    mixed: MixedConditions<f64>,
    sine_weighted: SineWeightedReports<f64>,
}

#[derive(Serialize)]
struct VerdictEntry<'a> {
    background: &'a str,
    record: VerdictRecord<f64>,
}

#[derive(Serialize)]
struct BoundedSum {
    family: String,
    n0: u64,
    m_max: u64,
    excision_kind: String,
    excision_measure: f64,
    i_delta: f64,
    bound: Option<f64>,
    final_partial_sum: f64,
    violation: Option<String>,
}

#[derive(Serialize)]
struct BoundDemo {
    lambda_n0: f64,
    verification: BoundVerification<f64>,
    bounded_sum: BoundedSum,
}

fn summand_rows(rows: &mut Vec<Vec<String>>, family: &str, background: &str, pair: Option<(f64, f64)>, seq: &WeightedSequence<f64>) {
    let (a, b) = match pair {
        Some((a, b)) => (float(a), float(b)),
        None => (String::new(), String::new()),
    };
    for &(n, v) in seq.terms() {
        rows.push(vec![seq.label().into(), family.into(), background.into(), a.clone(), b.clone(), n.to_string(), float(v)]);
    }
}

const SUMMAND_HEADER: [&str; 7] = ["criterion", "family", "background", "eta0", "eta", "n", "summand"];

impl Run<'_> {
    fn modes(&self) -> std::ops::RangeInclusive<u64> {
        self.config.modes.n_min..=self.config.modes.n_max
    }

    fn ensure_sweeps(&mut self) -> Result<()> {
        if self.sweeps.is_some() {
            return Ok(());
        }
        let (lo, hi) = (self.config.modes.n_min, self.config.modes.n_max);
        let mut all = Vec::with_capacity(self.resolved.backgrounds.len());
        for (name, bg) in &self.resolved.backgrounds {
            let row = self
                .resolved
                .time_pairs
                .iter()
                .map(|&(a, b)| {
                    BogoliubovSweep::compute_range(bg, a, b, lo, hi, &self.options)
                        .with_context(|| format!("background {name}, time pair ({a}, {b})"))
                })
                .collect::<Result<Vec<_>>>()?;
            all.push(row);
        }
        self.sweeps = Some(all);
        Ok(())
    }

    fn sweeps(&self) -> &[Vec<BogoliubovSweep<f64>>] {
        self.sweeps.as_deref().expect("sweeps computed")
    }

    fn evolve(&mut self) -> Result<()> {
        let mut rows = Vec::new();
        let mut summaries = Vec::new();
        for (name, bg) in &self.resolved.backgrounds {
            for &(a, b) in &self.resolved.time_pairs {
                let props: Vec<ModePropagator<f64>> = self
                    .modes()
                    .into_par_iter()
                    .map(|n| propagate_with(bg, ModeIndex(n), a, b, &self.options))
                    .collect::<frw_dirac::Result<_>>()
                    .with_context(|| format!("background {name}, time pair ({a}, {b})"))?;
                let mut s = PairSummary {
                    background: name.clone(),
                    eta0: a,
                    eta: b,
                    modes: props.len(),
                    max_unitarity_defect: 0.0,
                    max_determinant_defect: 0.0,
                    max_beta: 0.0,
                    total_steps: 0,
                };
                for p in &props {
                    let n = p.mode;
                    let (u, d) = (p.unitarity_defect(), p.determinant_defect());
                    s.max_unitarity_defect = s.max_unitarity_defect.max(u);
                    s.max_determinant_defect = s.max_determinant_defect.max(d);
                    s.total_steps += p.steps;
                    let mut row = vec![name.clone(), float(a), float(b), n.0.to_string(), float(omega(n)), degeneracy(n).to_string()];
                    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        let z = p.matrix.get(i, j);
                        row.push(float(z.re));
                        row.push(float(z.im));
                    }
                    row.extend([float(u), float(d), p.steps.to_string()]);
                    rows.push(row);
                }
                summaries.push(s);
            }
        }
        let header = [
            "background", "eta0", "eta", "n", "omega", "degeneracy", "phi00_re", "phi00_im", "phi01_re", "phi01_im",
            "phi10_re", "phi10_im", "phi11_re", "phi11_im", "unitarity_defect", "determinant_defect", "steps",
        ];
        self.writer.write_csv("evolve.csv", &header, &rows)?;
        for s in &summaries {
            self.summary.push(format!(
                "evolve {} ({}, {}): max unitarity defect {:.3e}",
                s.background, s.eta0, s.eta, s.max_unitarity_defect
            ));
        }
        self.writer.write_json("evolve.json", &summaries)
    }

    fn bogoliubov(&mut self) -> Result<()> {
        self.ensure_sweeps()?;
        let mut rows = Vec::new();
        let mut summaries = Vec::new();
        for ((name, _), per_pair) in self.resolved.backgrounds.iter().zip(self.sweeps()) {
            for sweep in per_pair {
                let mut s = PairSummary {
                    background: name.clone(),
                    eta0: sweep.eta0,
                    eta: sweep.eta,
                    modes: sweep.matrices.len(),
                    max_unitarity_defect: 0.0,
                    max_determinant_defect: 0.0,
                    max_beta: 0.0,
                    total_steps: 0,
                };
                for b in &sweep.matrices {
                    let n = b.mode;
                    let u = b.unitarity_defect();
                    s.max_unitarity_defect = s.max_unitarity_defect.max(u);
                    s.max_determinant_defect = s.max_determinant_defect.max(b.matrix.determinant_defect());
                    s.max_beta = s.max_beta.max(b.beta_f().norm()).max(b.beta_g().norm());
                    let mut row =
                        vec![name.clone(), float(sweep.eta0), float(sweep.eta), n.0.to_string(), float(omega(n)), degeneracy(n).to_string()];
                    for z in [b.alpha_f(), b.beta_f(), b.beta_g(), b.alpha_g()] {
                        row.push(float(z.re));
                        row.push(float(z.im));
                    }
                    row.extend([float(u), float(asymptote_residual(b))]);
                    rows.push(row);
                }
                summaries.push(s);
            }
        }
        let header = [
            "background", "eta0", "eta", "n", "omega", "degeneracy", "alpha_f_re", "alpha_f_im", "beta_f_re", "beta_f_im",
            "beta_g_re", "beta_g_im", "alpha_g_re", "alpha_g_im", "unitarity_defect", "asymptote_residual",
        ];
        self.writer.write_csv("bogoliubov.csv", &header, &rows)?;
        for s in &summaries {
            self.summary.push(format!(
                "bogoliubov {} ({}, {}): max |beta| {:.3e}, max unitarity defect {:.3e}",
                s.background, s.eta0, s.eta, s.max_beta, s.max_unitarity_defect
            ));
        }
        self.writer.write_json("bogoliubov.json", &summaries)
    }

    fn unitarity(&mut self) -> Result<()> {
        self.ensure_sweeps()?;
        let th = self.config.thresholds;
        let mut entries = Vec::new();
        let mut rows = Vec::new();
        for ((name, _), per_pair) in self.resolved.backgrounds.iter().zip(self.sweeps()) {
            for sweep in per_pair {
                let seq = dynamics_sequence(sweep)?;
                summand_rows(&mut rows, "", name, Some((sweep.eta0, sweep.eta)), &seq);
                let report = dynamics_unitarity_from(sweep, &th)?;
                entries.push(DynamicsEntry { background: name, eta0: sweep.eta0, eta: sweep.eta, report });
            }
        }
        for e in &entries {
            self.summary.push(format!(
                "unitarity {} ({}, {}): {} (tail exponent {})",
                e.background,
                e.eta0,
                e.eta,
                e.report.verdict,
                exponent_text(&e.report)
            ));
        }
        self.writer.write_csv("unitarity.csv", &SUMMAND_HEADER, &rows)?;
        self.writer.write_json("unitarity.json", &entries)
    }

    fn equivalence(&mut self) -> Result<()> {
        let th = self.config.thresholds;
        let n_max = self.config.modes.n_max;
        let mut rows = Vec::new();
        let mut reports = Vec::new();
        for fam in &self.resolved.families {
            let seq = equivalence_sequence(fam, n_max)?;
            summand_rows(&mut rows, &fam.name, "", None, &seq);
            let report = equivalence(fam, n_max, &th)?;
            let convention = fam.check_convention(n_max)?;
            self.summary.push(format!(
                "equivalence {}: {} (tail exponent {}){}",
                fam.name,
                report.verdict,
                exponent_text(&report),
                if convention.compliant { "" } else { ", convention violated" }
            ));
            reports.push(serde_json::json!({ "family": fam.name, "report": report, "convention": convention }));
        }
        self.writer.write_csv("equivalence.csv", &SUMMAND_HEADER, &rows)?;
        self.writer.write_json("equivalence.json", &reports)
    }

    fn conditions(&mut self) -> Result<()> {
        self.ensure_sweeps()?;
        let th = self.config.thresholds;
        let mut rows = Vec::new();
        let mut entries = Vec::new();
        for fam in &self.resolved.families {
            for ((name, _), per_pair) in self.resolved.backgrounds.iter().zip(self.sweeps()) {
                for sweep in per_pair {
                    let pair = Some((sweep.eta0, sweep.eta));
                    let [mf, mg, ..] = mixed_sequences(fam, sweep)?;
                    let (sf, sg) = sine_weighted_sequences(fam, sweep)?;
                    for s in [&mf, &mg, &sf, &sg] {
                        summand_rows(&mut rows, &fam.name, name, pair, s);
                    }
                    entries.push(ConditionsEntry {
                        family: &fam.name,
                        background: name,
                        mixed: mixed_conditions_from(fam, sweep, &th)?,
                        sine_weighted: sine_weighted_conditions_from(fam, sweep, &th)?,
                    });
                }
            }
        }
        self.writer.write_csv("conditions.csv", &SUMMAND_HEADER, &rows)?;
        self.writer.write_json("conditions.json", &entries)
    }

    fn verdict(&mut self) -> Result<()> {
        self.ensure_sweeps()?;
        let th = self.config.thresholds;
        let mut entries = Vec::new();
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        let mut alarm = false;
        for fam in &self.resolved.families {
            for ((name, _), per_pair) in self.resolved.backgrounds.iter().zip(self.sweeps()) {
                let record = uniqueness_verdict_from(fam, per_pair, &th)
                    .with_context(|| format!("family {}, background {name}", fam.name))?;
                let sine: Vec<String> =
                    record.sine_weighted.iter().map(|r| format!("{}/{}", r.f.verdict, r.g.verdict)).collect();
                rows.push(vec![
                    fam.name.clone(),
                    name.clone(),
                    record.verdict.to_string(),
                    record.reason.clone(),
                    record.convention.compliant.to_string(),
                    record.equivalence.verdict.to_string(),
                    sine.join(";"),
                ]);
                lines.push(format!("verdict {}/{}: {} ({})", fam.name, name, record.verdict, record.reason));
                alarm |= record.verdict == TheoremVerdict::CounterexampleCandidate;
                entries.push(VerdictEntry { background: name, record });
            }
        }
        self.summary.extend(lines);
        self.alarm |= alarm;
        let header = ["family", "background", "verdict", "reason", "convention_compliant", "equivalence", "sine_weighted"];
        self.writer.write_csv("verdict.csv", &header, &rows)?;
        self.writer.write_json("verdict.json", &entries)
    }

    fn bound_demo(&mut self) -> Result<()> {
        let av = &self.config.averaging;
        let profile = &self.resolved.profile;
        let lambda = lower_bound(profile, av.d, av.n0)?;
        let omegas: Vec<f64> = (av.n0..=av.omega_n_max).map(|n| omega(ModeIndex(n))).collect();
        let verification = verify_bound_chain(profile, av.d, av.n0, av.delta, &omegas, av.excisions, self.config.seed)?;
        if !verification.passed {
            self.alarm = true;
        }
        let family: &StructureFamily<f64> = self
            .resolved
            .averaging_family
            .as_ref()
            .with_context(|| format!("averaging.family {:?} is not configured", av.family))?;
        let w0 = omega(ModeIndex(av.n0));
        let excision = adversarial_excisions(profile, w0, av.delta, 8, self.config.seed)
            .into_iter()
            .find(|e| e.kind == "peak-comb")
            .map(|e| (e.kind, e.set))
            .unwrap_or_else(|| ("none".into(), Excision::none()));
        let i_delta = family_i_delta(family, profile, av.n0, av.m_max, &excision.1)?;
        let sums = family_partial_sums(family, av.n0, av.m_max)?;
        let (bound, violation) = match bounded_sum_conclusion(&sums, i_delta, lambda, av.delta) {
            Ok(b) => (Some(b), None),
            Err(e @ Error::BoundViolation { .. }) => {
                self.alarm = true;
                (None, Some(e.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let bounded_sum = BoundedSum {
            family: family.name.clone(),
            n0: av.n0,
            m_max: av.m_max,
            excision_kind: excision.0,
            excision_measure: excision.1.measure(),
            i_delta,
            bound,
            final_partial_sum: sums.last().map_or(0.0, |s| s.1),
            violation,
        };
        self.summary.push(format!(
            "bound-demo: Lambda_n0 = {:.12}, worst margin {:.3e}, chain {}, bounded sum {}",
            lambda,
            verification.worst_margin,
            if verification.passed { "passed" } else { "FAILED" },
            if bounded_sum.violation.is_none() { "holds" } else { "VIOLATED" }
        ));
        let rows: Vec<Vec<String>> = verification
            .checks
            .iter()
            .map(|c| {
                vec![
                    float(c.omega),
                    float(c.full_integral),
                    float(c.min_excised_integral),
                    float(c.min_margin),
                    c.worst_kind.clone(),
                    c.excisions.to_string(),
                ]
            })
            .collect();
        self.writer.write_csv(
            "bound.csv",
            &["omega", "full_integral", "min_excised_integral", "min_margin", "worst_kind", "excisions"],
            &rows,
        )?;
        let sum_rows: Vec<Vec<String>> = sums
            .iter()
            .map(|&(m, s)| vec![m.to_string(), float(s), bound.map(float).unwrap_or_default()])
            .collect();
        self.writer.write_csv("bound_sums.csv", &["m", "partial_sum", "bound"], &sum_rows)?;
        self.writer.write_json("bound.json", &BoundDemo { lambda_n0: lambda, verification, bounded_sum })
    }
}

fn exponent_text<T: Real>(r: &SummabilityReport<T>) -> String {
    match r.tail_exponent {
        Some(s) => format!("{:.3}", s.as_f64()),
        None => "vanishing".into(),
    }
}

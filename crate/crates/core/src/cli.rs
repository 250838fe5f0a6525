//! Command-line configuration and the `souq` subcommands.
//!
//! Each subcommand reads its inputs, computes a [`Report`] and writes it
//! atomically to `--out`. The binary is a thin wrapper around [`run`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use crate::axioms::{run_axiom_suite, AxiomResult, SuiteError};
use crate::eval::{accuracy_rejection_curve, auroc, default_grid, Cohort, EvalError, ScoredInstance};
use crate::io::{self, num, IoError, OutputFormat, Predictions, Report};
use crate::measures::{measure, Family, MeasureError};
use crate::simplex::{seeded_rng, DirichletSecondOrder, ProbVector, SimplexError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    UnknownFamily(String),
    #[error("instance '{0}' has no label")]
    MissingLabel(String),
    #[error("instance '{instance}' has label {label}, but there are only {k} classes")]
    BadLabel { instance: String, label: usize, k: usize },
    #[error("prediction files disagree on the class count: {expected} vs {got}")]
    ClassMismatch { expected: usize, got: usize },
    #[error("concentration must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("instance '{instance}': {source}")]
    Measure {
        instance: String,
        #[source]
        source: MeasureError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Measure,
    Arc,
    Ood,
    Axioms,
    Simulate,
}

/// Raw command-line arguments.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "souq",
    version,
    about = "Aleatoric and epistemic uncertainty of ensemble predictions"
)]
pub struct Args {
    /// Subcommand to run.
    #[arg(value_enum)]
    pub task: Task,
    /// Measure family: ent, lent or var. `arc` and `axioms` use all three when omitted.
    #[arg(long)]
    pub family: Option<String>,
    /// Predictions CSV (the in-distribution file for `ood`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Labels CSV. For `simulate`, where to write the sampled labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Out-of-distribution predictions CSV.
    #[arg(long)]
    pub ood: Option<PathBuf>,
    /// Rejection fractions as `start:stop:step`, stop inclusive.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Random cases per axiom.
    #[arg(long, default_value_t = 500)]
    pub cases: usize,
    /// Number of classes to simulate.
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Number of instances to simulate.
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    /// Ensemble members per simulated instance.
    #[arg(long, default_value_t = 5)]
    pub members: usize,
    /// Dirichlet concentration of the simulated ensembles.
    #[arg(long, default_value_t = 1000.0)]
    pub alpha0: f64,
    /// Prefix for simulated instance ids.
    #[arg(long, default_value = "x")]
    pub id_prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub classes: usize,
    pub instances: usize,
    pub members: usize,
    pub alpha0: f64,
    pub id_prefix: String,
    pub labels_out: Option<PathBuf>,
}

/// Validated configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub families: Vec<Family>,
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub ood: Option<PathBuf>,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub cases: usize,
    pub simulate: SimulateConfig,
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<Self, CliError> {
        let family = args
            .family
            .as_deref()
            .map(|s| s.parse::<Family>().map_err(CliError::UnknownFamily))
            .transpose()?;
        let families = match (args.task, family) {
            (_, Some(f)) => vec![f],
            (Task::Measure, None) => vec![Family::Variance],
            (_, None) => Family::ALL.to_vec(),
        };
        let grid = match &args.grid {
            Some(spec) => parse_grid(spec)?,
            None => default_grid(),
        };
        let config = RunConfig {
            task: args.task,
            families,
            input: args.input,
            labels: args.labels,
            ood: args.ood,
            grid,
            seed: args.seed,
            out: args.out,
            format: args.format,
            cases: args.cases,
            simulate: SimulateConfig {
                classes: args.classes,
                instances: args.instances,
                members: args.members,
                alpha0: args.alpha0,
                id_prefix: args.id_prefix,
                labels_out: None,
            },
        };
        config.finish()
    }

    fn finish(mut self) -> Result<Self, CliError> {
        let need = |opt: &Option<PathBuf>, name: &str| {
            if opt.is_none() {
                Err(CliError::Config(format!("{} requires --{name}", self.task_name())))
            } else {
                Ok(())
            }
        };
        match self.task {
            Task::Measure => need(&self.input, "input")?,
            Task::Arc => {
                need(&self.input, "input")?;
                need(&self.labels, "labels")?;
            }
            Task::Ood => {
                need(&self.input, "input")?;
                need(&self.ood, "ood")?;
            }
            Task::Axioms => {
                if self.cases == 0 {
                    return Err(CliError::Config("--cases must be at least 1".into()));
                }
            }
            Task::Simulate => {
                let s = &self.simulate;
                if s.classes < 2 {
                    return Err(CliError::Config("--classes must be at least 2".into()));
                }
                if s.instances == 0 || s.members == 0 {
                    return Err(CliError::Config("--instances and --members must be at least 1".into()));
                }
                if !(s.alpha0.is_finite() && s.alpha0 > 0.0) {
                    return Err(CliError::BadAlpha(s.alpha0));
                }
                self.simulate.labels_out = self.labels.take();
            }
        }
        Ok(self)
    }

    fn task_name(&self) -> &'static str {
        match self.task {
            Task::Measure => "measure",
            Task::Arc => "arc",
            Task::Ood => "ood",
            Task::Axioms => "axioms",
            Task::Simulate => "simulate",
        }
    }
}

/// Parses `start:stop:step` into fractions rounded to 12 decimals.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("bad --grid '{spec}', expected start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0, or 2 when a claimed axiom came back violated.
    pub exit_code: u8,
    pub written: Vec<PathBuf>,
}

pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let (report, exit_code) = match config.task {
        Task::Measure => (cmd_measure(config)?, 0),
        Task::Arc => (cmd_arc(config)?, 0),
        Task::Ood => (cmd_ood(config)?, 0),
        Task::Axioms => {
            let (report, unexpected) = cmd_axioms(config)?;
            (report, if unexpected { 2 } else { 0 })
        }
        Task::Simulate => return cmd_simulate(config),
    };
    io::write_atomic(&config.out, &report.render(config.format)?)?;
    Ok(Outcome {
        exit_code,
        written: vec![config.out.clone()],
    })
}

fn required<'a>(path: &'a Option<PathBuf>, name: &str) -> Result<&'a PathBuf, CliError> {
    path.as_ref()
        .ok_or_else(|| CliError::Config(format!("missing --{name}")))
}

fn single_family(config: &RunConfig) -> Result<Family, CliError> {
    match config.families[..] {
        [f] => Ok(f),
        _ => Err(CliError::Config("exactly one --family is required".into())),
    }
}

/// Per-instance global and per-label triples.
pub fn cmd_measure(config: &RunConfig) -> Result<Report, CliError> {
    let family = single_family(config)?;
    let preds = io::load_predictions(required(&config.input, "input")?)?;
    let mut columns: Vec<String> = ["instance_id", "predicted", "tu", "au", "eu"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if family.is_label_wise() {
        for c in &preds.class_names {
            columns.extend([format!("tu_{c}"), format!("au_{c}"), format!("eu_{c}")]);
        }
    }
    let mut report = Report::new(columns);
    report
        .meta("family", family.short_name())
        .meta("instances", preds.instances.len())
        .meta("classes", preds.num_classes())
        .meta("members", preds.members.len());
    for (id, q) in &preds.instances {
        let r = measure(q, family).map_err(|source| CliError::Measure {
            instance: id.clone(),
            source,
        })?;
        let mut row = vec![
            Value::from(id.as_str()),
            Value::from(q.mean().argmax()),
            num(r.global.total),
            num(r.global.aleatoric),
            num(r.global.epistemic),
        ];
        for t in &r.per_label {
            row.extend([num(t.total), num(t.aleatoric), num(t.epistemic)]);
        }
        report.push_row(row);
    }
    Ok(report)
}

/// Global triples for every instance under each family in `families`.
fn score_instances(
    preds: &Predictions,
    families: &[Family],
) -> Result<Vec<Vec<crate::measures::UncertaintyTriple>>, CliError> {
    preds
        .instances
        .iter()
        .map(|(id, q)| {
            families
                .iter()
                .map(|&f| {
                    measure(q, f).map(|r| r.global).map_err(|source| CliError::Measure {
                        instance: id.clone(),
                        source,
                    })
                })
                .collect()
        })
        .collect()
}

/// Accuracy-rejection curves for TU, AU and EU of each configured family.
pub fn cmd_arc(config: &RunConfig) -> Result<Report, CliError> {
    let preds = io::load_predictions(required(&config.input, "input")?)?;
    let labels = io::load_labels(required(&config.labels, "labels")?)?;
    let k = preds.num_classes();
    let mut truth = Vec::with_capacity(preds.instances.len());
    for id in preds.instances.keys() {
        let label = *labels.get(id).ok_or_else(|| CliError::MissingLabel(id.clone()))?;
        if label >= k {
            return Err(CliError::BadLabel {
                instance: id.clone(),
                label,
                k,
            });
        }
        truth.push(label);
    }
    let predicted: Vec<usize> = preds.instances.values().map(|q| q.mean().argmax()).collect();
    let scores = score_instances(&preds, &config.families)?;

    let mut columns = vec!["fraction".to_string()];
    let mut curves = Vec::new();
    for (fi, family) in config.families.iter().enumerate() {
        for (name, pick) in QUANTITIES {
            let score_name = format!("{name}_{}", family.short_name());
            let items: Vec<ScoredInstance> = preds
                .instances
                .keys()
                .enumerate()
                .map(|(i, id)| {
                    ScoredInstance::new(id.as_str(), pick(&scores[i][fi]), predicted[i]).with_truth(truth[i])
                })
                .collect();
            curves.push(accuracy_rejection_curve(&items, &config.grid, &score_name)?);
            columns.push(score_name);
        }
    }
    let mut report = Report::new(columns);
    let names: Vec<&str> = config.families.iter().map(|f| f.short_name()).collect();
    report
        .meta("n", preds.instances.len())
        .meta("family", names.join(","))
        .meta("seed", config.seed)
        .meta(
            "note",
            "curves from one set of predictions; for run-level spread, repeat over simulated cohorts with different seeds",
        );
    for (gi, &f) in config.grid.iter().enumerate() {
        let mut row = vec![num(f)];
        row.extend(curves.iter().map(|c| num(c.points[gi].1)));
        report.push_row(row);
    }
    Ok(report)
}

type Pick = fn(&crate::measures::UncertaintyTriple) -> f64;

const QUANTITIES: [(&str, Pick); 3] = [("tu", |t| t.total), ("au", |t| t.aleatoric), ("eu", |t| t.epistemic)];

/// AUROC of global EU under each family, out-of-distribution as positive.
pub fn cmd_ood(config: &RunConfig) -> Result<Report, CliError> {
    let id_preds = io::load_predictions(required(&config.input, "input")?)?;
    let ood_preds = io::load_predictions(required(&config.ood, "ood")?)?;
    if id_preds.num_classes() != ood_preds.num_classes() {
        return Err(CliError::ClassMismatch {
            expected: id_preds.num_classes(),
            got: ood_preds.num_classes(),
        });
    }
    let families = [Family::Variance, Family::LabelEntropy, Family::GlobalEntropy];
    let id_scores = score_instances(&id_preds, &families)?;
    let ood_scores = score_instances(&ood_preds, &families)?;
    let mut report = Report::new(vec!["score".into(), "auroc".into()]);
    report
        .meta("n_id", id_preds.instances.len())
        .meta("n_ood", ood_preds.instances.len())
        .meta("seed", config.seed);
    for (fi, family) in families.iter().enumerate() {
        let cohort_items = |preds: &Predictions, scores: &[Vec<crate::measures::UncertaintyTriple>], c| {
            preds
                .instances
                .iter()
                .zip(scores)
                .map(move |((id, q), s)| {
                    ScoredInstance::new(id.as_str(), s[fi].epistemic, q.mean().argmax()).with_cohort(c)
                })
                .collect::<Vec<_>>()
        };
        let mut items = cohort_items(&id_preds, &id_scores, Cohort::InDistribution);
        items.extend(cohort_items(&ood_preds, &ood_scores, Cohort::OutOfDistribution));
        let area = auroc(&items)?;
        report.push_row(vec![Value::from(format!("eu_{}", family.short_name())), num(area)]);
    }
    Ok(report)
}

/// Runs the axiom suite; the flag is set when a claimed axiom failed.
pub fn cmd_axioms(config: &RunConfig) -> Result<(Report, bool), CliError> {
    let columns = [
        "family",
        "axiom",
        "verdict",
        "checked",
        "claimed",
        "expected_violation",
        "cases",
        "worst",
        "note",
        "witness",
    ];
    let mut report = Report::new(columns.iter().map(|s| s.to_string()).collect());
    report.meta("cases", config.cases).meta("seed", config.seed);
    let mut unexpected = false;
    for &family in &config.families {
        for result in run_axiom_suite(family, config.cases, config.seed)? {
            unexpected |= result.is_unexpected_violation();
            report.push_row(axiom_row(&result)?);
        }
    }
    Ok((report, unexpected))
}

fn axiom_row(r: &AxiomResult) -> Result<Vec<Value>, CliError> {
    let to_value = |v: serde_json::Result<Value>| v.map_err(|e| IoError::Serialize(e.to_string()));
    let checked: Vec<&str> = r.checked.iter().map(|q| q.short_name()).collect();
    let mut note = r.note.clone();
    if r.expected_violation {
        if !note.is_empty() {
            note.push_str("; ");
        }
        note.push_str("expected violation for this family");
    }
    Ok(vec![
        Value::from(r.family.short_name()),
        to_value(serde_json::to_value(r.axiom))?,
        to_value(serde_json::to_value(r.verdict))?,
        Value::from(checked.join("|")),
        Value::from(r.claimed),
        Value::from(r.expected_violation),
        Value::from(r.cases),
        num(r.worst),
        Value::from(note),
        to_value(serde_json::to_value(&r.witness))?,
    ])
}

/// One simulated instance: member predictions and a sampled label.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedInstance {
    pub instance_id: String,
    pub members: Vec<(String, ProbVector)>,
    pub label: usize,
}

/// Draws a cohort: per instance a mean `pi ~ Dir(1, ..., 1)`, members
/// `theta_m ~ Dir(alpha0 * pi)` and a label `y ~ Cat(pi)`.
pub fn simulate_cohort(cfg: &SimulateConfig, seed: u64) -> Result<Vec<SimulatedInstance>, CliError> {
    use rand::Rng;

    if !(cfg.alpha0.is_finite() && cfg.alpha0 > 0.0) {
        return Err(CliError::BadAlpha(cfg.alpha0));
    }
    let mut rng = seeded_rng(seed);
    let prior = DirichletSecondOrder::new(vec![1.0; cfg.classes])?;
    let id_width = digits(cfg.instances.saturating_sub(1));
    let member_width = digits(cfg.members.saturating_sub(1));
    let mut out = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let pi = prior.draw(&mut rng);
        let alpha: Vec<f64> = pi
            .as_slice()
            .iter()
            .map(|&p| (cfg.alpha0 * p).max(f64::MIN_POSITIVE))
            .collect();
        let d = DirichletSecondOrder::new(alpha)?;
        let members = (0..cfg.members)
            .map(|m| (format!("m{m:0member_width$}"), d.draw(&mut rng)))
            .collect();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = cfg.classes - 1;
        for (c, &p) in pi.as_slice().iter().enumerate() {
            acc += p;
            if u < acc {
                label = c;
                break;
            }
        }
        out.push(SimulatedInstance {
            instance_id: format!("{}{i:0id_width$}", cfg.id_prefix),
            members,
            label,
        });
    }
    Ok(out)
}

fn digits(n: usize) -> usize {
    n.to_string().len()
}

/// Writes a simulated predictions file and, optionally, its labels.
pub fn cmd_simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = &config.simulate;
    let cohort = simulate_cohort(cfg, config.seed)?;
    let class_names: Vec<String> = (0..cfg.classes).map(|c| c.to_string()).collect();
    let rows: Vec<(String, Vec<(String, ProbVector)>)> = cohort
        .iter()
        .map(|s| (s.instance_id.clone(), s.members.clone()))
        .collect();
    let mut buf = Vec::new();
    io::write_predictions(&mut buf, &class_names, &rows)?;
    io::write_atomic(&config.out, &buf)?;
    let mut written = vec![config.out.clone()];
    if let Some(path) = &cfg.labels_out {
        let mut text = String::from("instance_id,label\n");
        for s in &cohort {
            text.push_str(&format!("{},{}\n", s.instance_id, s.label));
        }
        io::write_atomic(path, text.as_bytes())?;
        written.push(path.clone());
    }
    Ok(Outcome { exit_code: 0, written })
}

/// Labels keyed by instance id, as produced alongside a simulated cohort.
pub fn simulated_labels(cohort: &[SimulatedInstance]) -> BTreeMap<String, usize> {
    cohort.iter().map(|s| (s.instance_id.clone(), s.label)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("souq").chain(list.iter().copied())).unwrap()
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:0.2:0.05").unwrap(), vec![0.0, 0.05, 0.1, 0.15, 0.2]);
        assert_eq!(parse_grid("0:0.95:0.05").unwrap(), default_grid());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a:1:0.1").is_err());
    }

    #[test]
    fn task_requirements() {
        let err = RunConfig::from_args(args(&["arc", "--input", "p.csv", "--out", "o.csv"])).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let err = RunConfig::from_args(args(&["ood", "--input", "p.csv", "--out", "o.csv"])).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let err = RunConfig::from_args(args(&["axioms", "--cases", "0", "--out", "o.csv"])).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let err =
            RunConfig::from_args(args(&["measure", "--family", "foo", "--input", "p", "--out", "o"])).unwrap_err();
        assert!(matches!(err, CliError::UnknownFamily(_)));
        let err = RunConfig::from_args(args(&["simulate", "--alpha0", "0", "--out", "o"])).unwrap_err();
        assert!(matches!(err, CliError::BadAlpha(_)));
    }

    #[test]
    fn family_defaults() {
        let c = RunConfig::from_args(args(&["axioms", "--out", "o"])).unwrap();
        assert_eq!(c.families, Family::ALL.to_vec());
        let c = RunConfig::from_args(args(&["measure", "--input", "p", "--out", "o"])).unwrap();
        assert_eq!(c.families, vec![Family::Variance]);
        let c = RunConfig::from_args(args(&["simulate", "--labels", "l.csv", "--out", "o"])).unwrap();
        assert_eq!(c.simulate.labels_out, Some(PathBuf::from("l.csv")));
    }

    #[test]
    fn simulation_is_seeded() {
        let cfg = SimulateConfig {
            classes: 3,
            instances: 12,
            members: 4,
            alpha0: 50.0,
            id_prefix: "s".into(),
            labels_out: None,
        };
        let a = simulate_cohort(&cfg, 9).unwrap();
        assert_eq!(a, simulate_cohort(&cfg, 9).unwrap());
        assert_ne!(a, simulate_cohort(&cfg, 10).unwrap());
        assert_eq!(a[0].instance_id, "s00");
        assert_eq!(a[11].members[3].0, "m3");
        assert!(a.iter().all(|s| s.label < 3));
    }
}

//! Experiment harness: repeated runs over grids of prior laws, bag counts,
//! size imbalance and training-set sizes, summarized as mean and standard
//! deviation of the test AUC.
//!
//! Each run is keyed by its cell and seed and seeds every random choice, so
//! a report is reproducible from the experiment digest and the seed list.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bagdata::{
    read_bags, read_labeled_csv, synthesize_collection, BagCollection, GaussianPoolSpec,
    ImbalanceMode, Instance, PriorKind, PriorSpec,
};
use crate::baseline::{train_pairwise, PairwiseConfig};
use crate::scorer::ModelSpec;
use crate::trainer::{train, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Minmax,
    Pairwise,
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Solver::Minmax => "minmax",
            Solver::Pairwise => "pairwise",
        })
    }
}

/// Where training bags come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSpec {
    /// Bags synthesized from a Gaussian pool for every cell and seed.
    Gaussian(GaussianPoolSpec),
    /// Fixed bag files; the prior, `m` and imbalance axes do not apply.
    BagDir { dir: PathBuf, test: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub data: DataSpec,
    pub priors: Vec<PriorKind>,
    pub ms: Vec<usize>,
    pub imbalance: Vec<ImbalanceMode>,
    /// Training-set sizes; empty means the pool's own `n_train`.
    pub n_train: Vec<usize>,
    /// Fixed held-out size shared by every `n_train`; `None` uses a fifth of
    /// each run's pool.
    pub test_size: Option<usize>,
    pub repeats: usize,
    pub base_seed: u64,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub pairwise: PairwiseConfig,
    pub solvers: Vec<Solver>,
    /// Run cells on the rayon pool.
    pub parallel: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            data: DataSpec::Gaussian(GaussianPoolSpec::default()),
            priors: vec![PriorKind::Uniform],
            ms: vec![10],
            imbalance: vec![ImbalanceMode::None],
            n_train: Vec::new(),
            test_size: None,
            repeats: 3,
            base_seed: 0,
            model: ModelSpec::linear(),
            train: TrainConfig::default(),
            pairwise: PairwiseConfig::default(),
            solvers: vec![Solver::Minmax],
            parallel: true,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be >= 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidParameter("no solver selected".into()));
        }
        if let DataSpec::Gaussian(pool) = &self.data {
            pool.validate()?;
            if self.priors.is_empty() || self.ms.is_empty() || self.imbalance.is_empty() {
                return Err(Error::InvalidParameter("empty experiment grid".into()));
            }
            if let Some(&m) = self.ms.iter().find(|&&m| m < 2) {
                return Err(Error::TooFewBags(m));
            }
        }
        self.train.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64)
            .map(|r| self.base_seed + r)
            .collect()
    }

    fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        match &self.data {
            DataSpec::Gaussian(pool) => {
                let ns = if self.n_train.is_empty() {
                    vec![pool.n_train]
                } else {
                    self.n_train.clone()
                };
                for prior in &self.priors {
                    for &m in &self.ms {
                        for imb in &self.imbalance {
                            for &n in &ns {
                                for &solver in &self.solvers {
                                    out.push(CellKey {
                                        prior: prior.short_name().to_string(),
                                        prior_kind: prior.clone(),
                                        m,
                                        imbalance: imb.clone(),
                                        n_train: n,
                                        solver,
                                    });
                                }
                            }
                        }
                    }
                }
            }
            DataSpec::BagDir { .. } => {
                for &solver in &self.solvers {
                    out.push(CellKey {
                        prior: "files".into(),
                        prior_kind: PriorKind::Explicit(Vec::new()),
                        m: 0,
                        imbalance: ImbalanceMode::None,
                        n_train: 0,
                        solver,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    /// Table label of the prior law (`D_u`, ...).
    pub prior: String,
    pub prior_kind: PriorKind,
    pub m: usize,
    pub imbalance: ImbalanceMode,
    pub n_train: usize,
    pub solver: Solver,
}

impl CellKey {
    fn slug(&self) -> String {
        let imb = self.imbalance.to_string().replace('=', "");
        format!(
            "{}_m{}_{}_n{}_{}",
            self.prior, self.m, imb, self.n_train, self.solver
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: usize,
    pub seed: u64,
    pub test_auc: Option<f64>,
    pub bag_sizes: Vec<usize>,
    /// Training log CSV.
    pub log: String,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    /// `None` when any run of the cell failed.
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
    pub aucs: Vec<f64>,
    pub seconds: f64,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl MachineInfo {
    pub fn current() -> Self {
        MachineInfo {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub digest: String,
    pub seeds: Vec<u64>,
    pub bayes_auc: Option<f64>,
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunRecord>,
    pub machine: MachineInfo,
    pub spec: ExperimentSpec,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let cells = spec.cells();
    let seeds = spec.seeds();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let fixed = match &spec.data {
        DataSpec::BagDir { dir, test } => {
            let bags = read_bags(dir)?;
            let test = test.as_deref().map(read_labeled_csv).transpose()?;
            Some((bags, test))
        }
        DataSpec::Gaussian(_) => None,
    };
    let run = |&(c, seed): &(usize, u64)| run_one(spec, &cells[c], c, seed, fixed.as_ref());
    let runs: Vec<RunRecord> = if spec.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };

    let summaries = cells
        .iter()
        .enumerate()
        .map(|(c, key)| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.cell == c).collect();
            let diagnostics: Vec<String> = mine
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| format!("seed {}: {e}", r.seed)))
                .collect();
            let aucs: Vec<f64> = mine.iter().filter_map(|r| r.test_auc).collect();
            let ok = diagnostics.is_empty() && aucs.len() == mine.len();
            let (mean, std) = if ok {
                mean_std(&aucs)
            } else {
                (f64::NAN, f64::NAN)
            };
            CellSummary {
                key: key.clone(),
                mean_auc: ok.then_some(mean),
                std_auc: ok.then_some(std),
                aucs,
                seconds: mine.iter().map(|r| r.seconds).sum(),
                diagnostics,
            }
        })
        .collect();

    Ok(ExperimentReport {
        name: spec.name.clone(),
        digest: spec.digest(),
        seeds,
        bayes_auc: match &spec.data {
            DataSpec::Gaussian(p) => Some(p.bayes_auc()),
            DataSpec::BagDir { .. } => None,
        },
        cells: summaries,
        runs,
        machine: MachineInfo::current(),
        spec: spec.clone(),
    })
}

fn run_one(
    spec: &ExperimentSpec,
    key: &CellKey,
    cell: usize,
    seed: u64,
    fixed: Option<&(BagCollection, Option<Vec<Instance>>)>,
) -> RunRecord {
    let start = Instant::now();
    let outcome = (|| -> Result<(Vec<usize>, Option<f64>, String)> {
        let (owned, test): (Option<BagCollection>, Option<Vec<Instance>>);
        let bags = match (&spec.data, fixed) {
            (_, Some((bags, t))) => {
                test = t.clone();
                bags
            }
            (DataSpec::Gaussian(pool), None) => {
                let pool_spec = pool.with_train_size(key.n_train);
                let data = pool_spec.generate(seed)?;
                let priors = PriorSpec::new(key.prior_kind.clone(), key.m);
                owned = Some(synthesize_collection(
                    &data.train,
                    &priors,
                    &key.imbalance,
                    key.n_train,
                    seed,
                )?);
                test = Some(match spec.test_size {
                    Some(t) => shared_test_set(pool, t, seed)?,
                    None => data.test,
                });
                owned.as_ref().unwrap()
            }
            (DataSpec::BagDir { .. }, None) => unreachable!("bag files are loaded up front"),
        };
        let test = test.as_deref();
        let d = bags.d();
        match key.solver {
            Solver::Minmax => {
                let model = spec.model.build(d, bags.m() - 1, seed)?;
                let cfg = TrainConfig {
                    seed,
                    ..spec.train.clone()
                };
                let out = train(bags, model, &cfg, test)?;
                let auc = out.log.last().and_then(|r| r.test_auc);
                Ok((bags.sizes(), auc, out.log.to_csv()))
            }
            Solver::Pairwise => {
                let model = spec.model.build(d, 1, seed)?;
                let cfg = PairwiseConfig {
                    seed,
                    ..spec.pairwise.clone()
                };
                let out = train_pairwise(bags, model, &cfg, test)?;
                let auc = out.log.rows.last().and_then(|r| r.test_auc);
                Ok((bags.sizes(), auc, out.log.to_csv()))
            }
        }
    })();
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((bag_sizes, test_auc, log)) => RunRecord {
            cell,
            seed,
            test_auc,
            bag_sizes,
            log,
            seconds,
            error: None,
        },
        Err(e) => RunRecord {
            cell,
            seed,
            test_auc: None,
            bag_sizes: Vec::new(),
            log: String::new(),
            seconds,
            error: Some(e.to_string()),
        },
    }
}

/// Held-out set drawn independently of the training pool, same for every
/// training size under one seed.
fn shared_test_set(pool: &GaussianPoolSpec, size: usize, seed: u64) -> Result<Vec<Instance>> {
    let spec = GaussianPoolSpec {
        n_train: size,
        n_test: 0,
        ..pool.clone()
    };
    Ok(spec.generate(seed ^ 0x7e57_5e7_u64.rotate_left(32))?.train)
}

/// One cell per reduction ratio plus the random-size regime.
pub fn run_imbalance_sweep(base: &ExperimentSpec, taus: &[f64]) -> Result<ExperimentReport> {
    let mut imbalance: Vec<ImbalanceMode> = taus
        .iter()
        .map(|&tau| ImbalanceMode::SizeReduction { tau })
        .collect();
    imbalance.push(ImbalanceMode::Random);
    run_experiment(&ExperimentSpec {
        imbalance,
        ..base.clone()
    })
}

pub const IMBALANCE_TAUS: [f64; 4] = [0.8, 0.6, 0.4, 0.2];
pub const EXCESS_RISK_NS: [usize; 4] = [100, 400, 1600, 6400];

/// `gap(n) = Bayes AUC - mean test AUC` per training size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskTrend {
    pub report: ExperimentReport,
    pub ns: Vec<usize>,
    pub gaps: Vec<f64>,
}

impl ExcessRiskTrend {
    pub fn non_increasing(&self) -> bool {
        self.gaps.windows(2).all(|w| w[1] <= w[0])
    }

    /// Largest-n gap is under half the smallest-n gap.
    pub fn halves(&self) -> bool {
        match (self.gaps.first(), self.gaps.last()) {
            (Some(&g0), Some(&gl)) => gl < g0 / 2.0,
            _ => false,
        }
    }
}

/// Runs a single prior law and `m` over increasing training sizes with a
/// shared held-out set per seed.
pub fn run_excess_risk_trend(
    base: &ExperimentSpec,
    ns: &[usize],
    m: usize,
    repeats: usize,
) -> Result<ExcessRiskTrend> {
    let pool = match &base.data {
        DataSpec::Gaussian(p) => p.clone(),
        DataSpec::BagDir { .. } => {
            return Err(Error::InvalidParameter(
                "excess-risk trend needs a Gaussian pool".into(),
            ))
        }
    };
    let spec = ExperimentSpec {
        ms: vec![m],
        n_train: ns.to_vec(),
        repeats,
        test_size: base.test_size.or(Some(
            pool.n_test.max(ns.iter().copied().max().unwrap_or(0) / 4),
        )),
        solvers: vec![Solver::Minmax],
        imbalance: vec![ImbalanceMode::None],
        priors: base.priors.first().cloned().into_iter().collect(),
        ..base.clone()
    };
    let report = run_experiment(&spec)?;
    let bayes = pool.bayes_auc();
    let gaps = report
        .cells
        .iter()
        .map(|c| c.mean_auc.map_or(f64::NAN, |a| bayes - a))
        .collect();
    Ok(ExcessRiskTrend {
        report,
        ns: ns.to_vec(),
        gaps,
    })
}

/// Both solvers on the same cells; returns the report and the largest
/// absolute difference of cell means.
pub fn run_equivalence(base: &ExperimentSpec) -> Result<(ExperimentReport, f64)> {
    let spec = ExperimentSpec {
        solvers: vec![Solver::Minmax, Solver::Pairwise],
        ..base.clone()
    };
    let report = run_experiment(&spec)?;
    let mut worst: f64 = 0.0;
    for pair in report.cells.chunks(2) {
        match (pair[0].mean_auc, pair.get(1).and_then(|c| c.mean_auc)) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            _ => worst = f64::NAN,
        }
    }
    Ok((report, worst))
}

impl ExperimentReport {
    /// Cell table without timings: identical across reruns of the same spec.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "prior,m,imbalance,n_train,solver,mean_auc,std_auc,runs,seeds,bayes_auc,digest\n",
        );
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        for c in &self.cells {
            let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.key.prior,
                c.key.m,
                c.key.imbalance,
                c.key.n_train,
                c.key.solver,
                fmt(c.mean_auc),
                fmt(c.std_auc),
                c.aucs.len(),
                seeds.join(";"),
                fmt(self.bayes_auc),
                self.digest
            );
        }
        out
    }

    /// Rows are prior laws, columns are `(m, imbalance, n, solver)` combinations.
    pub fn to_markdown(&self) -> String {
        let mut rows: Vec<&str> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        for c in &self.cells {
            if !rows.contains(&c.key.prior.as_str()) {
                rows.push(&c.key.prior);
            }
            let col = column_label(&c.key);
            if !cols.contains(&col) {
                cols.push(col);
            }
        }
        let mut out = format!("# {}\n\n", self.name);
        if let Some(b) = self.bayes_auc {
            let _ = writeln!(out, "Bayes AUC: {b:.4}\n");
        }
        let _ = writeln!(out, "| prior | {} |", cols.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(cols.len()));
        for r in &rows {
            let mut line = format!("| {r} |");
            for col in &cols {
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.key.prior == *r && column_label(&c.key) == *col);
                let text = match cell {
                    Some(CellSummary {
                        mean_auc: Some(m),
                        std_auc: Some(s),
                        ..
                    }) => format!(" {m:.3} ± {s:.3} |"),
                    Some(_) => " failed |".to_string(),
                    None => " |".to_string(),
                };
                line.push_str(&text);
            }
            out.push_str(&line);
            out.push('\n');
        }
        let diags: Vec<String> = self
            .cells
            .iter()
            .flat_map(|c| {
                c.diagnostics
                    .iter()
                    .map(move |d| format!("- {}: {d}", c.key.slug()))
            })
            .collect();
        if !diags.is_empty() {
            out.push_str("\nFailures:\n\n");
            out.push_str(&diags.join("\n"));
            out.push('\n');
        }
        let total: f64 = self.cells.iter().map(|c| c.seconds).sum();
        let _ =
            write!(
            out,
            "\nSeeds: {:?}. Digest: `{}`.\nMachine: {} {} with {} threads; {:.1} s of run time.\n",
            self.seeds, self.digest, self.machine.os, self.machine.arch, self.machine.threads, total
        );
        out
    }

    /// Writes `report.csv`, `report.md`, `spec.json` and one log per run under `runs/`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let runs = dir.join("runs");
        std::fs::create_dir_all(&runs)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        std::fs::write(dir.join("report.md"), self.to_markdown())?;
        std::fs::write(
            dir.join("spec.json"),
            serde_json::to_string_pretty(&self.spec)?,
        )?;
        for r in &self.runs {
            let name = format!("{}_seed{}.csv", self.cells[r.cell].key.slug(), r.seed);
            let body = match &r.error {
                Some(e) => format!("error,{e}\n"),
                None => r.log.clone(),
            };
            std::fs::write(runs.join(name), body)?;
        }
        Ok(())
    }
}

fn column_label(k: &CellKey) -> String {
    let mut parts = vec![format!("m={}", k.m)];
    if k.imbalance != ImbalanceMode::None {
        parts.push(k.imbalance.to_string());
    }
    if k.n_train > 0 {
        parts.push(format!("n={}", k.n_train));
    }
    parts.push(k.solver.to_string());
    parts.join(" ")
}

/// The named suites behind `umauc reproduce`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Priors,
    Imbalance,
    ExcessRisk,
    Equivalence,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "priors" => Ok(Suite::Priors),
            "imbalance" => Ok(Suite::Imbalance),
            "excess-risk" => Ok(Suite::ExcessRisk),
            "equivalence" => Ok(Suite::Equivalence),
            other => Err(Error::InvalidParameter(format!(
                "unknown suite `{other}` (priors, imbalance, excess-risk, equivalence)"
            ))),
        }
    }
}

impl Suite {
    /// Default spec for the suite.
    pub fn spec(self) -> ExperimentSpec {
        match self {
            Suite::Priors => ExperimentSpec {
                name: "prior laws".into(),
                priors: vec![
                    PriorKind::Uniform,
                    PriorKind::Biased,
                    PriorKind::Concentrated,
                    PriorKind::BiasedConcentrated,
                ],
                ms: vec![2, 4, 10],
                ..Default::default()
            },
            Suite::Imbalance => ExperimentSpec {
                name: "size imbalance".into(),
                ms: vec![10],
                ..Default::default()
            },
            Suite::ExcessRisk => ExperimentSpec {
                name: "excess risk".into(),
                ms: vec![4],
                repeats: 5,
                ..Default::default()
            },
            Suite::Equivalence => ExperimentSpec {
                name: "solver equivalence".into(),
                data: DataSpec::Gaussian(GaussianPoolSpec::default().with_train_size(600)),
                ms: vec![3],
                solvers: vec![Solver::Minmax, Solver::Pairwise],
                ..Default::default()
            },
        }
    }

    pub fn run(self, spec: &ExperimentSpec) -> Result<ExperimentReport> {
        match self {
            Suite::Priors => run_experiment(spec),
            Suite::Imbalance => run_imbalance_sweep(spec, &IMBALANCE_TAUS),
            Suite::ExcessRisk => {
                let m = spec.ms.first().copied().unwrap_or(4);
                Ok(run_excess_risk_trend(spec, &EXCESS_RISK_NS, m, spec.repeats)?.report)
            }
            Suite::Equivalence => Ok(run_equivalence(spec)?.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bagdata::{apply_imbalance, write_bags};

    fn small(repeats: usize) -> ExperimentSpec {
        ExperimentSpec {
            data: DataSpec::Gaussian(GaussianPoolSpec::default().with_train_size(400)),
            ms: vec![3],
            repeats,
            train: TrainConfig {
                epochs: 5,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[1.0]), (1.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reruns_match() {
        let spec = small(1);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let strip = |r: &ExperimentReport| {
            r.runs
                .iter()
                .map(|r| (r.test_auc, r.bag_sizes.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.digest, spec.digest());
    }

    #[test]
    fn failing_cell_is_recorded_others_continue() {
        let spec = ExperimentSpec {
            priors: vec![PriorKind::Uniform, PriorKind::Explicit(vec![0.5, 0.5, 0.5])],
            ..small(2)
        };
        let rep = run_experiment(&spec).unwrap();
        assert!(rep.cells[0].mean_auc.is_some());
        assert!(rep.cells[1].mean_auc.is_none());
        assert_eq!(rep.cells[1].diagnostics.len(), 2);
        assert!(rep.to_markdown().contains("failed"));
    }

    #[test]
    fn unit_tau_equals_no_imbalance() {
        let a = apply_imbalance(&ImbalanceMode::SizeReduction { tau: 1.0 }, 10, 4000, 3).unwrap();
        assert_eq!(
            a,
            apply_imbalance(&ImbalanceMode::None, 10, 4000, 3).unwrap()
        );
    }

    #[test]
    fn imbalance_sweep_cells_and_sizes() {
        let rep = run_imbalance_sweep(&small(1), &[0.8, 0.2]).unwrap();
        assert_eq!(rep.cells.len(), 3);
        let random = rep
            .runs
            .iter()
            .find(|r| rep.cells[r.cell].key.imbalance == ImbalanceMode::Random)
            .unwrap();
        assert_eq!(random.bag_sizes.iter().sum::<usize>(), 400);
    }

    #[test]
    fn outputs_written() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&small(2)).unwrap();
        rep.write(dir.path()).unwrap();
        for f in ["report.csv", "report.md", "spec.json"] {
            assert!(dir.path().join(f).exists());
        }
        assert_eq!(
            std::fs::read_dir(dir.path().join("runs")).unwrap().count(),
            2
        );
        let back: ExperimentSpec =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("spec.json")).unwrap())
                .unwrap();
        assert_eq!(back.digest(), rep.digest);
    }

    #[test]
    fn excess_risk_has_std_for_every_n() {
        let base = ExperimentSpec {
            train: TrainConfig {
                epochs: 2,
                batch_size: 16,
                ..Default::default()
            },
            ..small(2)
        };
        let t = run_excess_risk_trend(&base, &[100, 200], 3, 2).unwrap();
        assert_eq!(t.gaps.len(), 2);
        assert!(t.report.cells.iter().all(|c| c.std_auc.is_some()));
    }

    #[test]
    fn bag_dir_ignores_prior_metadata() {
        let pool = GaussianPoolSpec::default()
            .with_train_size(300)
            .generate(1)
            .unwrap();
        let bags =
            crate::bagdata::synthesize_bags(&pool.train, &[0.9, 0.5, 0.1], &[100, 100, 100], 1)
                .unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_bags(&bags, d1.path()).unwrap();
        write_bags(
            &bags
                .clone()
                .with_true_priors(Some(vec![0.7, 0.6, 0.2]))
                .unwrap(),
            d2.path(),
        )
        .unwrap();
        let spec = |dir: &Path| ExperimentSpec {
            data: DataSpec::BagDir {
                dir: dir.to_path_buf(),
                test: None,
            },
            repeats: 2,
            train: TrainConfig {
                epochs: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = run_experiment(&spec(d1.path())).unwrap();
        let b = run_experiment(&spec(d2.path())).unwrap();
        let logs = |r: &ExperimentReport| {
            r.runs
                .iter()
                .map(|x| {
                    x.log
                        .lines()
                        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(logs(&a), logs(&b));
    }

    #[test]
    fn suites_parse() {
        for s in ["priors", "imbalance", "excess-risk", "equivalence"] {
            let suite: Suite = s.parse().unwrap();
            suite.spec().validate().unwrap();
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}

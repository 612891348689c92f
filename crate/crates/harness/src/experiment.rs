use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use shufflelab::analysis::variance_decomposition;
use shufflelab::data::{parse_csv, parse_libsvm, standardize, Dataset, LabelColumn};
use shufflelab::optimize::{run_trial, Schedule, TrialRecord};
use shufflelab::problems::make_problem;
use shufflelab::rngcore::{mix64, GOLDEN_GAMMA};
use shufflelab::shuffling::SchemeKind;
use shufflelab::DynProblem;

use crate::config::{DataFormat, DataSource, ExperimentConfig};
use crate::error::{HarnessError, Result};

const INIT_TAG: u64 = 0x1;
const SHUFFLE_TAG: u64 = 0x2;

/// Folds `parts` into `base` with the SplitMix64 finalizer:
/// `h₀ = mix64(base)`, `h ← mix64((h + GOLDEN_GAMMA) ⊕ part)`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(base), |h, &p| mix64(h.wrapping_add(GOLDEN_GAMMA) ^ p))
}

/// Seed of the start point for initialization `init`.
pub fn init_seed(base: u64, init: usize) -> u64 {
    derive_seed(base, &[INIT_TAG, init as u64])
}

/// Base seed of the ordering stream for run `run` of initialization `init`.
///
/// Deliberately independent of the scheme and the step size: every scheme
/// and grid point sees the same start points and the same underlying
/// random stream, so rows differ only through the scheme logic.
pub fn shuffle_seed(base: u64, init: usize, run: usize) -> u64 {
    derive_seed(base, &[SHUFFLE_TAG, init as u64, run as u64])
}

/// Gradient-variance split at the final iterates of the selected grid
/// point, averaged over its non-diverged trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub block_size: usize,
    pub sigma2_ind: f64,
    pub sigma2_within: f64,
    pub sigma2_blk: f64,
}

/// One `(scheme, schedule)` cell of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub task: String,
    pub schedule: String,
    pub scheme: String,
    /// `None` when every trial at the selected grid point diverged.
    pub mean_best_loss: Option<f64>,
    pub std_best_loss: Option<f64>,
    pub selected_gamma0: f64,
    pub divergence_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

/// A trial together with its position in the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub scheme: String,
    pub schedule: String,
    pub gamma_index: usize,
    pub gamma0: f64,
    pub init: usize,
    pub run: usize,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<SummaryRow>,
    /// Every trial, in grid order (scheme, schedule, γ0, init, run).
    pub trials: Vec<TraceEntry>,
}

/// Mean and population standard deviation of the best-so-far losses of the
/// non-diverged trials, plus the divergence count.
pub fn summarize(records: &[&TrialRecord]) -> (Option<f64>, Option<f64>, usize) {
    let finals: Vec<f64> = records.iter().filter(|r| !r.is_diverged()).filter_map(|r| r.final_best()).collect();
    let diverged = records.len() - finals.len();
    if finals.is_empty() {
        return (None, None, diverged);
    }
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()), diverged)
}

/// Index of the grid point with the lowest mean; ties and all-diverged
/// grids fall back to the smallest step size.
pub fn select_grid_point(grid: &[f64], means: &[Option<f64>]) -> usize {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let mut best = order[0];
    for &i in &order[1..] {
        match (means[i], means[best]) {
            (Some(m), Some(b)) if m < b => best = i,
            (Some(_), None) => best = i,
            _ => {}
        }
    }
    best
}

pub fn load_dataset(src: &DataSource) -> Result<Dataset> {
    let text = std::fs::read_to_string(&src.path).map_err(|e| HarnessError::io(&src.path, e))?;
    let wrap = |e: shufflelab::Error| HarnessError::config(format!("{}: {e}", src.path.display()));
    let mut ds = match src.format {
        DataFormat::Libsvm => parse_libsvm(&text).map_err(wrap)?,
        DataFormat::Csv => {
            let label = match src.label_column.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(src.label_column.clone()),
            };
            parse_csv(&text, label, src.header).map_err(wrap)?
        }
    };
    if let Some(t) = src.binarize {
        ds = ds.binarize_labels(t);
    }
    if src.standardize {
        ds = standardize(&ds).map_err(wrap)?;
    }
    Ok(ds)
}

/// Builds the problem of `cfg`, reading its dataset if it has one.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<DynProblem> {
    let data = cfg.data.as_ref().map(load_dataset).transpose()?;
    make_problem(&cfg.problem, data.as_ref()).map_err(|e| HarnessError::config(e.to_string()))
}

struct Job {
    scheme: usize,
    schedule: usize,
    gamma: usize,
    init: usize,
    run: usize,
}

fn diagnostics_for(
    problem: &DynProblem,
    scheme: &SchemeKind,
    records: &[&TrialRecord],
) -> Result<Option<Diagnostics>> {
    let n = problem.num_components();
    let b = match scheme {
        SchemeKind::Block(_) | SchemeKind::Apr(_) => scheme.nominal_block_size(n),
        _ => None,
    };
    let Some(b) = b.filter(|b| n % b == 0) else {
        return Ok(None);
    };
    let alive: Vec<_> = records.iter().filter(|r| !r.is_diverged()).collect();
    if alive.is_empty() {
        return Ok(None);
    }
    let mut acc = Diagnostics {
        block_size: b,
        sigma2_ind: 0.0,
        sigma2_within: 0.0,
        sigma2_blk: 0.0,
    };
    for r in &alive {
        let v = variance_decomposition(problem, &r.final_w, b)?;
        acc.sigma2_ind += v.sigma2_ind;
        acc.sigma2_within += v.sigma2_within;
        acc.sigma2_blk += v.sigma2_blk;
    }
    let k = alive.len() as f64;
    acc.sigma2_ind /= k;
    acc.sigma2_within /= k;
    acc.sigma2_blk /= k;
    Ok(Some(acc))
}

/// Runs every `(scheme, schedule, γ0, init, run)` trial of `cfg` and
/// reduces them to one row per `(scheme, schedule)`.
///
/// Trials run on a pool of `cfg.workers` threads (all cores when unset);
/// results are gathered in grid order, so the output does not depend on
/// scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    run_experiment_on(cfg, &problem)
}

/// As [`run_experiment`], with an already built problem.
pub fn run_experiment_on(cfg: &ExperimentConfig, problem: &DynProblem) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for scheme in 0..cfg.schemes.len() {
        for schedule in 0..cfg.schedules.len() {
            for gamma in 0..cfg.grid.len() {
                for init in 0..cfg.inits {
                    for run in 0..cfg.runs {
                        jobs.push(Job { scheme, schedule, gamma, init, run });
                    }
                }
            }
        }
    }

    let run_job = |job: &Job| -> Result<TraceEntry> {
        let scheme = &cfg.schemes[job.scheme];
        let schedule = cfg.schedules[job.schedule];
        let gamma0 = cfg.grid[job.gamma];
        let record = run_trial(
            problem,
            scheme,
            &cfg.optimizer_config(schedule, gamma0),
            shuffle_seed(cfg.base_seed, job.init, job.run),
            init_seed(cfg.base_seed, job.init),
        )?;
        Ok(TraceEntry {
            scheme: scheme.to_string(),
            schedule: schedule.name(),
            gamma_index: job.gamma,
            gamma0,
            init: job.init,
            run: job.run,
            record,
        })
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start worker pool: {e}")))?;
    let trials: Vec<TraceEntry> = pool.install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>())?;

    let reps = cfg.repetitions();
    let per_cell = reps * cfg.grid.len();
    let mut rows = Vec::new();
    for (cell, chunk) in trials.chunks(per_cell).enumerate() {
        let scheme = &cfg.schemes[cell / cfg.schedules.len()];
        let schedule: Schedule<f64> = cfg.schedules[cell % cfg.schedules.len()];
        let stats: Vec<_> = chunk
            .chunks(reps)
            .map(|g| summarize(&g.iter().map(|t| &t.record).collect::<Vec<_>>()))
            .collect();
        let means: Vec<Option<f64>> = stats.iter().map(|s| s.0).collect();
        let pick = select_grid_point(&cfg.grid, &means);
        let (mean, std, diverged) = stats[pick];
        let selected: Vec<&TrialRecord> = chunk[pick * reps..(pick + 1) * reps].iter().map(|t| &t.record).collect();
        let diagnostics = if cfg.diagnostics {
            diagnostics_for(problem, scheme, &selected)?
        } else {
            None
        };
        rows.push(SummaryRow {
            dataset: cfg.dataset.clone(),
            task: cfg.task.clone(),
            schedule: schedule.name(),
            scheme: scheme.to_string(),
            mean_best_loss: mean,
            std_best_loss: std,
            selected_gamma0: cfg.grid[pick],
            divergence_count: diverged,
            diagnostics,
        });
    }
    Ok(ExperimentOutput { rows, trials })
}

/// Writes one JSON object per trial, one per line.
pub fn write_trace(trials: &[TraceEntry], path: &Path) -> Result<()> {
    let mut out = String::new();
    for t in trials {
        out.push_str(&serde_json::to_string(t).map_err(|e| HarnessError::Serialize(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let mut seen = std::collections::HashSet::new();
        for init in 0..5 {
            assert!(seen.insert(init_seed(42, init)));
            for run in 0..5 {
                assert!(seen.insert(shuffle_seed(42, init, run)));
            }
        }
        assert_eq!(derive_seed(42, &[]), mix64(42));
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    }

    #[test]
    fn grid_selection() {
        let grid = [0.5, 0.1, 0.01];
        assert_eq!(select_grid_point(&grid, &[Some(3.0), Some(1.0), Some(2.0)]), 1);
        assert_eq!(select_grid_point(&grid, &[Some(1.0), Some(1.0), Some(1.0)]), 2);
        assert_eq!(select_grid_point(&grid, &[Some(1.0), Some(1.0), Some(2.0)]), 1);
        assert_eq!(select_grid_point(&grid, &[None, None, None]), 2);
        assert_eq!(select_grid_point(&grid, &[Some(5.0), None, None]), 0);
    }

    #[test]
    fn single_trial_row() {
        let cfg = ExperimentConfig::parse(
            "problem = quadratic n=6 d=2 seed=1\nschemes = rr\ngrid = 0.05\nepochs = 1\ninits = 1\nruns = 1\nbase_seed = 3\n",
            None,
            &[],
        )
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].mean_best_loss, Some(out.trials[0].record.per_epoch_loss[0]));
        assert_eq!(out.rows[0].std_best_loss, Some(0.0));
        assert_eq!(out.rows[0].divergence_count, 0);
    }

    #[test]
    fn divergent_grid_points_are_counted() {
        let cfg = ExperimentConfig::parse(
            "problem = quadratic n=6 d=2 seed=1\nschemes = rr\ngrid = 100, 50\nepochs = 30\ninits = 2\nruns = 1\nbase_seed = 3\n",
            None,
            &[],
        )
        .unwrap();
        let out = run_experiment(&cfg).unwrap();
        let row = &out.rows[0];
        assert_eq!(row.mean_best_loss, None);
        assert_eq!(row.divergence_count, 2);
        assert_eq!(row.selected_gamma0, 50.0);
    }
}

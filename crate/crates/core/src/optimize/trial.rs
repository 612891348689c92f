use serde::{Deserialize, Serialize};

use super::config::{OptimizerConfig, OptimizerKind};
use super::epoch::{run_adam_epoch, run_epoch, AdamState};
use crate::problems::FiniteSum;
use crate::rngcore::SeededGenerator;
use crate::shuffling::{SchemeKind, Shuffler};
use crate::{Error, Result, Scalar};

/// Where a trial's randomness and settings came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub base_seed: u64,
    pub init_seed: u64,
    pub scheme: String,
    pub config: OptimizerConfig<f64>,
}

/// Point at which a trial was aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergencePoint {
    pub epoch: usize,
    pub step: usize,
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Full training loss `F(w_e)` after each completed epoch.
    pub per_epoch_loss: Vec<f64>,
    /// Running minimum of `per_epoch_loss`.
    pub best_so_far: Vec<f64>,
    /// Iterate after the last completed epoch (the start point if none completed).
    pub final_w: Vec<f64>,
    /// Set when the run was cut short by a non-finite or exploding iterate.
    pub diverged: Option<DivergencePoint>,
    pub provenance: Provenance,
}

impl TrialRecord {
    pub fn is_diverged(&self) -> bool {
        self.diverged.is_some()
    }

    /// Best-so-far loss at the end of the run.
    pub fn final_best(&self) -> Option<f64> {
        self.best_so_far.last().copied()
    }
}

/// Trains `problem` for `config.epochs` epochs under the ordering `scheme`.
///
/// The start point is drawn from `init_seed`, the orderings from
/// `base_seed`. APR receives `F(w_0)` before the first epoch and the mean
/// pre-step loss of the previous epoch afterwards. Divergence ends the run
/// early and is reported in the record, not as an error.
pub fn run_trial<T: Scalar, P: FiniteSum<T> + ?Sized>(
    problem: &P,
    scheme: &SchemeKind,
    config: &OptimizerConfig<T>,
    base_seed: u64,
    init_seed: u64,
) -> Result<TrialRecord> {
    config.validate()?;
    let n = problem.num_components();
    let mut shuffler = Shuffler::new(scheme.clone(), base_seed)?;
    let mut w = problem.initial_point(&mut SeededGenerator::new(init_seed));
    let mut adam = match config.kind {
        OptimizerKind::Adam(params) => Some(AdamState::new(problem.dim(), params)),
        OptimizerKind::Sgd => None,
    };

    let mut feedback = problem.full_loss(&w).as_f64();
    let mut per_epoch_loss = Vec::with_capacity(config.epochs);
    let mut best_so_far: Vec<f64> = Vec::with_capacity(config.epochs);
    let mut diverged = None;

    for epoch in 0..config.epochs {
        if scheme.needs_feedback() && feedback < 0.0 {
            return Err(Error::Config(format!(
                "scheme {scheme} needs a non-negative training loss, got {feedback} before epoch {epoch}"
            )));
        }
        let pi = shuffler.next_permutation(n, Some(feedback))?;
        let gamma = config.step_size(epoch);
        let outcome = match adam.take() {
            None => run_epoch(problem, &w, &pi, gamma, config.batch_size),
            Some(state) => run_adam_epoch(problem, &w, state, &pi, gamma, config.batch_size).map(|(w, s, l)| {
                adam = Some(s);
                (w, l)
            }),
        };
        let (next, mean_loss) = match outcome {
            Ok(r) => r,
            Err(Error::Divergence { step }) => {
                diverged = Some(DivergencePoint { epoch, step });
                break;
            }
            Err(e) => return Err(e),
        };
        let loss = problem.full_loss(&next).as_f64();
        if !loss.is_finite() {
            diverged = Some(DivergencePoint {
                epoch,
                step: n.div_ceil(config.batch_size),
            });
            break;
        }
        w = next;
        feedback = mean_loss.as_f64();
        per_epoch_loss.push(loss);
        best_so_far.push(best_so_far.last().map_or(loss, |b| b.min(loss)));
    }

    Ok(TrialRecord {
        per_epoch_loss,
        best_so_far,
        final_w: w.iter().map(|x| x.as_f64()).collect(),
        diverged,
        provenance: Provenance {
            base_seed,
            init_seed,
            scheme: scheme.to_string(),
            config: config.to_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::optimize::{AdamParams, Schedule};
    use crate::problems::{LogisticRegression, QuadComponent, QuadraticEnsemble};

    fn mean_problem() -> QuadraticEnsemble<f64> {
        let comp = |a: f64, b: f64| QuadComponent {
            a: Matrix::from_row_major(1, 1, vec![a]),
            b: vec![b],
        };
        QuadraticEnsemble::new(vec![comp(1.0, -1.0), comp(2.0, 0.5), comp(1.5, 2.0)]).unwrap()
    }

    #[test]
    fn incremental_gradient_decreases_loss() {
        let p = mean_problem();
        let rec = run_trial(&p, &SchemeKind::Ig, &OptimizerConfig::sgd(1e-3, 50), 1, 2).unwrap();
        assert!(rec.per_epoch_loss.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(rec.best_so_far, rec.per_epoch_loss);
    }

    #[test]
    fn feedback_scheme_rejects_negative_objective() {
        // mean_problem's minimum is below zero.
        let p = mean_problem();
        let cfg = OptimizerConfig::sgd(0.1, 30);
        assert!(matches!(run_trial(&p, &SchemeKind::Apr(Default::default()), &cfg, 1, 2), Err(Error::Config(_))));
        assert!(run_trial(&p, &SchemeKind::Rr, &cfg, 1, 2).is_ok());
    }

    #[test]
    fn single_epoch() {
        let p = mean_problem();
        let rec = run_trial(&p, &SchemeKind::Rr, &OptimizerConfig::sgd(0.1, 1), 1, 2).unwrap();
        assert_eq!(rec.best_so_far, vec![rec.per_epoch_loss[0]]);
    }

    #[test]
    fn best_so_far_is_prefix_minimum() {
        let p = LogisticRegression::<f64>::synthetic(60, 3, 4, 1e-4).unwrap();
        for scheme in ["ig", "so", "rr", "apr", "block:0.1", "paired:rr"] {
            for gamma in [0.5, 3.0] {
                let rec = run_trial(&p, &scheme.parse().unwrap(), &OptimizerConfig::sgd(gamma, 20), 5, 6).unwrap();
                let mut min = f64::INFINITY;
                for (l, b) in rec.per_epoch_loss.iter().zip(&rec.best_so_far) {
                    min = min.min(*l);
                    assert_eq!(*b, min);
                }
            }
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let p = LogisticRegression::<f64>::synthetic(50, 4, 1, 1e-4).unwrap();
        let cfg = OptimizerConfig {
            batch_size: 8,
            schedule: Schedule::Poly { alpha: 0.5 },
            ..OptimizerConfig::sgd(0.2, 15)
        };
        for scheme in ["rr", "apr", "block:5"] {
            let kind: SchemeKind = scheme.parse().unwrap();
            let a = run_trial(&p, &kind, &cfg, 9, 10).unwrap();
            let b = run_trial(&p, &kind, &cfg, 9, 10).unwrap();
            assert_eq!(a, b);
            let c = run_trial(&p, &kind, &cfg, 9, 11).unwrap();
            assert_ne!(a.final_w, c.final_w);
        }
    }

    #[test]
    fn divergence_truncates_record() {
        let p = mean_problem();
        let rec = run_trial(&p, &SchemeKind::Rr, &OptimizerConfig::sgd(5.0, 100), 1, 2).unwrap();
        let point = rec.diverged.expect("step 5 on curvature 2 must diverge");
        assert_eq!(rec.per_epoch_loss.len(), point.epoch);
        assert!(rec.final_w.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn adam_trial_runs() {
        let p = LogisticRegression::<f64>::synthetic(40, 3, 2, 1e-4).unwrap();
        let cfg = OptimizerConfig {
            kind: OptimizerKind::Adam(AdamParams::default()),
            ..OptimizerConfig::sgd(1e-2, 10)
        };
        let rec = run_trial(&p, &SchemeKind::Rr, &cfg, 3, 4).unwrap();
        assert!(rec.diverged.is_none());
        assert!(rec.per_epoch_loss.last().unwrap() < &std::f64::consts::LN_2);
    }

    #[test]
    fn f32_trial() {
        let p = QuadraticEnsemble::<f32>::random(10, 3, 1).unwrap();
        let rec = run_trial(&p, &SchemeKind::Rr, &OptimizerConfig::sgd(0.01f32, 5), 1, 1).unwrap();
        assert_eq!(rec.per_epoch_loss.len(), 5);
        assert_eq!(rec.provenance.scheme, "rr");
    }
}

//! Numerical checks of the variance identities, epoch-map expansion and
//! the APR controller, reported as named pass/fail entries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use shufflelab::analysis::{
    all_permutations, block_means, fit_loglog_slope, order_sensitivity, permutation_variance,
    population_variance, prefix_closed_form, prefix_moments_exhaustive, prefix_second_moment_mc,
    reversal_pair_sum, second_order_term, trajectory_radius, epoch_map_exact, variance_decomposition_of,
    Sampling,
};
use shufflelab::linalg::{distance, mean_vector, norm};
use shufflelab::problems::{QuadLin, QuadraticEnsemble};
use shufflelab::shuffling::{reverse, uniform_permutation, AprParams, AprState, Permutation, Regime, Transform};
use shufflelab::SeededGenerator;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Variance,
    EpochMap,
    Apr,
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Suite::All),
            "variance" => Ok(Suite::Variance),
            "epochmap" => Ok(Suite::EpochMap),
            "apr" => Ok(Suite::Apr),
            other => Err(HarnessError::config(format!("unknown check suite {other:?}"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Variance => "variance",
            Suite::EpochMap => "epochmap",
            Suite::Apr => "apr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: String,
    /// The property being verified.
    pub reference: String,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, reference: &str, measured: f64, tolerance: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            measured,
            tolerance: tolerance.into(),
            reference: reference.into(),
            detail: String::new(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    fn failed(name: &str, reference: &str, err: impl fmt::Display) -> Self {
        Self::new(name, reference, f64::NAN, "-", false).with_detail(format!("error: {err}"))
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<20} measured={:<12.6e} tol={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, "  ({})", self.detail)?;
        }
        Ok(())
    }
}

type Check = fn() -> shufflelab::Result<CheckResult>;

const VARIANCE: &[(&str, &str, Check)] = &[
    ("variance-decomp", "sigma2_ind = sigma2_within + sigma2_blk for equal blocks", variance_decomp),
    ("blk-le-ind", "sigma2_blk <= sigma2_ind, strictly when within-block variance is positive", blk_le_ind),
    ("wor-prefix", "prefix-mean second moment (m-k)/(k(m-1)) sigma^2 under sampling without replacement", wor_prefix),
    ("rr-prefix-mc", "sample-level random-reshuffling prefix variance, Monte Carlo", rr_prefix_mc),
    ("block-prefix", "block-level prefix variance uses sigma2_blk in place of sigma2_ind", block_prefix),
];

const EPOCHMAP: &[(&str, &str, Check)] = &[
    ("order-lb", "two-component instance: T_(2,1) - T_(1,2) = gamma^2 a b", order_lb),
    ("paired-rev-cancel", "B_pi + B_rev(pi) = sum_{i!=j} H_i g_j for every ordering", paired_rev_cancel),
    ("paired-rev-slope", "symmetrized order sensitivity is third order in gamma", paired_rev_slope),
    ("perm-var", "two-component instance: Var_pi(T_pi) = gamma^4 (ab)^2 / 4", perm_var),
    ("perm-var-slope", "Var_pi(T_pi) is fourth order in gamma; Var_pi(Tbar_pi) <= C_rem^2 gamma^6 n^6", perm_var_slope),
    ("remainder-bound", "||T_pi - (w - gamma sum g + gamma^2 B_pi)|| <= C_rem gamma^3 n^3", remainder_bound),
    ("order-ub", "||T_pi - T_pi'|| <= L G gamma^2 n(n-1) + 2 C_rem gamma^3 n^3", order_ub),
];

const APR: &[(&str, &str, Check)] = &[(
    "apr-trace",
    "APR regime and transform schedule for a scripted loss sequence",
    apr_trace,
)];

/// Runs the selected checks. Failures and internal errors become failing
/// entries; nothing aborts the report.
pub fn run_theory_checks(suite: Suite) -> Vec<CheckResult> {
    let groups: Vec<&[(&str, &str, Check)]> = match suite {
        Suite::All => vec![VARIANCE, EPOCHMAP, APR],
        Suite::Variance => vec![VARIANCE],
        Suite::EpochMap => vec![EPOCHMAP],
        Suite::Apr => vec![APR],
    };
    groups
        .into_iter()
        .flatten()
        .map(|(name, reference, check)| match check() {
            Ok(r) => r,
            Err(e) => CheckResult::failed(name, reference, e),
        })
        .collect()
}

fn reference_of(name: &str) -> &'static str {
    VARIANCE
        .iter()
        .chain(EPOCHMAP)
        .chain(APR)
        .find(|(n, _, _)| *n == name)
        .map_or("", |(_, r, _)| r)
}

fn result(name: &str, measured: f64, tolerance: impl Into<String>, passed: bool) -> CheckResult {
    CheckResult::new(name, reference_of(name), measured, tolerance, passed)
}

fn population(gen: &mut SeededGenerator, m: usize, d: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..d).map(|_| gen.next_gaussian()).collect()).collect()
}

fn uniform_in(gen: &mut SeededGenerator, lo: usize, hi: usize) -> usize {
    lo + gen.next_uint_below(hi - lo + 1).expect("non-empty range")
}

fn variance_decomp() -> shufflelab::Result<CheckResult> {
    let mut gen = SeededGenerator::new(0xDEC0);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..200 {
        let n = uniform_in(&mut gen, 4, 64);
        let d = uniform_in(&mut gen, 1, 10);
        let g = population(&mut gen, n, d);
        for b in (1..=n).filter(|b| n.is_multiple_of(*b)) {
            worst = worst.max(variance_decomposition_of(&g, b)?.identity_error());
            cases += 1;
        }
    }
    Ok(result("variance-decomp", worst, "<= 1e-10 relative", worst <= 1e-10)
        .with_detail(format!("{cases} (population, block size) pairs")))
}

fn blk_le_ind() -> shufflelab::Result<CheckResult> {
    let mut gen = SeededGenerator::new(0xB1C);
    let mut violations = 0usize;
    for t in 0..100 {
        let n = 12;
        let mut g = population(&mut gen, n, 3);
        // Every other population has identical gradients inside each block.
        let coherent = t % 2 == 0;
        if coherent {
            for r in 0..4 {
                for i in 1..3 {
                    g[3 * r + i] = g[3 * r].clone();
                }
            }
        }
        let v = variance_decomposition_of(&g, 3)?;
        let ok = if coherent {
            v.sigma2_within <= 1e-14 * v.sigma2_ind && (v.sigma2_blk - v.sigma2_ind).abs() <= 1e-12 * v.sigma2_ind
        } else {
            v.sigma2_within > 0.0 && v.sigma2_blk < v.sigma2_ind
        };
        violations += usize::from(!ok);
    }
    Ok(result("blk-le-ind", violations as f64, "0 violations", violations == 0))
}

fn wor_prefix() -> shufflelab::Result<CheckResult> {
    let mut gen = SeededGenerator::new(0x9F1);
    let (mut worst, mut worst_mean) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        for m in 2..=6 {
            let x = population(&mut gen, m, 3);
            let sigma2 = population_variance(&x);
            let xbar = mean_vector(&x);
            for k in 1..=m {
                let (second, mean) = prefix_moments_exhaustive(&x, k)?;
                let closed = prefix_closed_form(m, k, sigma2);
                let err = if k == m { second.abs() } else { (second - closed).abs() / closed };
                worst = worst.max(err);
                worst_mean = worst_mean.max(distance(&mean, &xbar));
            }
        }
    }
    let pass = worst <= 1e-10 && worst_mean <= 1e-12;
    Ok(result("wor-prefix", worst, "<= 1e-10 relative; prefix mean <= 1e-12", pass)
        .with_detail(format!("max prefix-mean deviation {worst_mean:.3e}")))
}

fn rr_prefix_mc() -> shufflelab::Result<CheckResult> {
    let mut gen = SeededGenerator::new(0x3C);
    let x = population(&mut gen, 50, 4);
    let (est, se) = prefix_second_moment_mc(&x, 10, 20_000, 77)?;
    let closed = prefix_closed_form(50, 10, population_variance(&x));
    let z = (est - closed).abs() / se;
    Ok(result("rr-prefix-mc", z, "<= 4 standard errors", z <= 4.0)
        .with_detail(format!("estimate {est:.6e}, closed form {closed:.6e}")))
}

fn block_prefix() -> shufflelab::Result<CheckResult> {
    let mut gen = SeededGenerator::new(0xB10C);
    let mut coherent_err = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for k_blocks in 2..=5 {
        for b in [2, 3] {
            let base = population(&mut gen, k_blocks, 2);
            let coherent: Vec<Vec<f64>> = base.iter().flat_map(|g| std::iter::repeat_n(g.clone(), b)).collect();
            let incoherent = population(&mut gen, k_blocks * b, 2);
            for (grads, is_coherent) in [(coherent, true), (incoherent, false)] {
                let v = variance_decomposition_of(&grads, b)?;
                let blocks = block_means(&grads, b)?;
                for k in 1..k_blocks {
                    let (exact, _) = prefix_moments_exhaustive(&blocks, k)?;
                    let with_ind = prefix_closed_form(k_blocks, k, v.sigma2_ind);
                    if is_coherent {
                        coherent_err = coherent_err.max((exact - with_ind).abs() / with_ind);
                    } else {
                        min_gap = min_gap.min((with_ind - exact) / with_ind);
                    }
                }
            }
        }
    }
    let pass = coherent_err <= 1e-10 && min_gap > 0.0;
    Ok(result("block-prefix", coherent_err, "coherent <= 1e-10 relative; incoherent strictly smaller", pass)
        .with_detail(format!("smallest relative reduction for incoherent blocks {min_gap:.3e}")))
}

fn perm(v: &[usize]) -> Permutation {
    Permutation::new(v.to_vec()).expect("literal permutation")
}

fn order_lb() -> shufflelab::Result<CheckResult> {
    let p = QuadLin::<f64>::new(2.0, 3.0, 1.0)?;
    let mut worst = 0.0f64;
    let mut points = Vec::new();
    for gamma in [1e-1, 1e-2, 1e-3, 1e-4] {
        let s = order_sensitivity(&p, &[1.0], &perm(&[1, 0]), &perm(&[0, 1]), gamma, false)?;
        worst = worst.max((s - 6.0 * gamma * gamma).abs());
        points.push((gamma, s));
    }
    let (slope, _) = fit_loglog_slope(&points)?;
    let pass = worst <= 1e-13 && (slope - 2.0).abs() <= 1e-3;
    Ok(result("order-lb", worst, "<= 1e-13 absolute; slope 2 +- 0.001", pass).with_detail(format!("slope {slope:.6}")))
}

fn paired_rev_cancel() -> shufflelab::Result<CheckResult> {
    let mut gen = SeededGenerator::new(0x2E7);
    let mut worst = 0.0f64;
    let mut tested = 0usize;
    for n in 2..=8 {
        let p = QuadraticEnsemble::<f64>::random(n, 3, 1000 + n as u64)?;
        let w: Vec<f64> = (0..3).map(|_| gen.next_gaussian()).collect();
        let target = reversal_pair_sum(&p, &w)?;
        let perms = if n <= 5 {
            all_permutations(n)?
        } else {
            (0..100).map(|s| uniform_permutation(n, gen.next_u64() ^ s)).collect::<shufflelab::Result<_>>()?
        };
        for pi in &perms {
            let a = second_order_term(&p, &w, pi)?;
            let b = second_order_term(&p, &w, &reverse(pi))?;
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            worst = worst.max(distance(&sum, &target) / norm(&target).max(1.0));
            tested += 1;
        }
    }
    Ok(result("paired-rev-cancel", worst, "<= 1e-12 (relative to max(1, norm))", worst <= 1e-12)
        .with_detail(format!("{tested} orderings")))
}

fn slope_over<F: FnMut(f64) -> shufflelab::Result<f64>>(grid: &[f64], mut f: F) -> shufflelab::Result<f64> {
    let pts = grid.iter().map(|&g| f(g).map(|v| (g, v))).collect::<shufflelab::Result<Vec<_>>>()?;
    Ok(fit_loglog_slope(&pts)?.0)
}

fn paired_rev_slope() -> shufflelab::Result<CheckResult> {
    let grid = [0.02, 0.01, 0.005, 0.0025];
    let mut min_slope = f64::INFINITY;
    let mut max_slope = f64::NEG_INFINITY;
    for seed in 0..5u64 {
        let p = QuadraticEnsemble::<f64>::random(4, 3, 500 + seed)?;
        let w = vec![0.5, -0.3, 0.2];
        let (a, b) = (perm(&[0, 1, 2, 3]), perm(&[2, 0, 3, 1]));
        let s = slope_over(&grid, |g| order_sensitivity(&p, &w, &a, &b, g, true))?;
        min_slope = min_slope.min(s);
        max_slope = max_slope.max(s);
    }
    let pass = min_slope >= 2.7 && max_slope <= 3.3;
    Ok(result("paired-rev-slope", min_slope, "slope in [2.7, 3.3]", pass)
        .with_detail(format!("slopes over 5 ensembles in [{min_slope:.4}, {max_slope:.4}]")))
}

fn perm_var() -> shufflelab::Result<CheckResult> {
    let p = QuadLin::<f64>::new(2.0, 3.0, 1.0)?;
    let mut worst = 0.0f64;
    // Dyadic step sizes keep both endpoints exactly representable.
    for k in 2..=14 {
        let gamma = 0.5f64.powi(k);
        let v = permutation_variance(&p, &[1.0], gamma, Sampling::Exhaustive, false)?;
        let expect = gamma.powi(4) * 36.0 / 4.0;
        worst = worst.max((v - expect).abs() / expect);
    }
    Ok(result("perm-var", worst, "<= 1e-12 relative", worst <= 1e-12))
}

fn perm_var_slope() -> shufflelab::Result<CheckResult> {
    let grid = [0.01, 0.005, 0.0025, 0.00125];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut bound_ok = true;
    let mut worst_ratio = 0.0f64;
    let perms = all_permutations(4)?;
    for seed in 0..5u64 {
        let p = QuadraticEnsemble::<f64>::random(4, 3, 700 + seed)?;
        let w = vec![0.3, 0.1, -0.6];
        let s = slope_over(&grid, |g| permutation_variance(&p, &w, g, Sampling::Exhaustive, false))?;
        lo = lo.min(s);
        hi = hi.max(s);
        for &g in &grid {
            let radius = trajectory_radius(&p, &w, &perms, g)?;
            let c = p.smoothness_on_ball(&w, radius);
            let var_bar = permutation_variance(&p, &w, g, Sampling::Exhaustive, true)?;
            let bound = (c.c_rem() * g.powi(3) * 64.0).powi(2);
            bound_ok &= var_bar <= bound;
            worst_ratio = worst_ratio.max(var_bar / bound);
        }
    }
    let pass = lo >= 3.8 && hi <= 4.2 && bound_ok;
    Ok(result("perm-var-slope", lo, "slope in [3.8, 4.2]; symmetrized variance within bound", pass)
        .with_detail(format!("slopes in [{lo:.4}, {hi:.4}], max Var(Tbar)/bound {worst_ratio:.3e}")))
}

fn bound_sweep(name: &str, upper: bool) -> shufflelab::Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut tested = 0usize;
    for (n, d) in [(3, 2), (4, 3), (5, 2)] {
        let p = QuadraticEnsemble::<f64>::random(n, d, 900 + n as u64)?;
        let w = vec![0.4; d];
        let perms = all_permutations(n)?;
        for gamma in [0.05, 0.02, 0.01, 0.001] {
            let radius = trajectory_radius(&p, &w, &perms, gamma)?;
            let c = p.smoothness_on_ball(&w, radius);
            for (i, pi) in perms.iter().enumerate() {
                if upper {
                    let other = &perms[(i * 7 + 1) % perms.len()];
                    let s = order_sensitivity(&p, &w, pi, other, gamma, false)?;
                    worst = worst.max(s / c.order_sensitivity_bound(gamma, n));
                } else {
                    let r = epoch_map_exact(&p, &w, pi, gamma, Some(&c))?;
                    worst = worst.max(r.remainder_norm / r.remainder_bound.expect("constants supplied"));
                }
                tested += 1;
            }
        }
    }
    Ok(result(name, worst, "measured / bound <= 1", worst <= 1.0).with_detail(format!("{tested} configurations")))
}

fn remainder_bound() -> shufflelab::Result<CheckResult> {
    bound_sweep("remainder-bound", false)
}

fn order_ub() -> shufflelab::Result<CheckResult> {
    bound_sweep("order-ub", true)
}

/// Loss fed to APR at each epoch, and the regime/transform it must produce.
pub const APR_SCRIPT: &[(f64, Regime, Transform)] = &[
    (1.0, Regime::Initial, Transform::None),
    (0.5, Regime::Strong, Transform::None),
    (0.5, Regime::Mild, Transform::None),
    (0.4, Regime::Strong, Transform::Reverse),
    (0.8, Regime::Fallback, Transform::EvenOdd),
    (0.76, Regime::Mild, Transform::None),
    (0.5, Regime::Strong, Transform::Reverse),
    (1.0, Regime::Fallback, Transform::EvenOdd),
    (1.0, Regime::Mild, Transform::None),
    (2.0, Regime::Fallback, Transform::None),
    (1.0, Regime::Strong, Transform::None),
];

fn apr_trace() -> shufflelab::Result<CheckResult> {
    let n = 100;
    let mut state = AprState::new(AprParams::default(), 2024)?;
    let mut mismatches = Vec::new();
    for (e, &(loss, regime, transform)) in APR_SCRIPT.iter().enumerate() {
        let pi = state.next_permutation(n, loss)?;
        let step = state.last_step().expect("step recorded");
        if !pi.is_valid() || pi.len() != n || step.regime != regime || step.transform != transform {
            mismatches.push(format!("epoch {e}: got {:?}/{:?}", step.regime, step.transform));
        }
    }
    Ok(result("apr-trace", mismatches.len() as f64, "0 mismatches", mismatches.is_empty())
        .with_detail(if mismatches.is_empty() {
            format!("{} epochs", APR_SCRIPT.len())
        } else {
            mismatches.join("; ")
        }))
}

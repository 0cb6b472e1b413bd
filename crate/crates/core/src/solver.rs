//! Exact recovery from noiseless shuffled measurements.
//!
//! Every ordered selection of `N` rows of `A` is a candidate `B̂`; the
//! candidate is feasible when `B̂ x̂ = y` has a least-squares solution with
//! residual at most `residual_tol * (1 + |y|)`. By default the whole candidate
//! set is examined so that uniqueness is certified rather than assumed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densela::{self, check_finite, dist_inf, norm2, norm_inf, Mat};
use crate::error::{Error, Result};
use crate::model::{
    self, apply_selection, count_selections, enumerate_selections, Selection, Stream,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Feasibility threshold relative to `1 + |y|`.
    pub residual_tol: f64,
    /// Two feasible solutions closer than `uniqueness_tol * (1 + max |x|_inf)`
    /// in infinity norm are the same solution.
    pub uniqueness_tol: f64,
    pub prune: bool,
    /// Stop at the first feasible candidate in lexicographic order.
    pub first_hit: bool,
    pub max_nodes: Option<u64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            residual_tol: 1e-9,
            uniqueness_tol: 1e-6,
            prune: true,
            first_hit: false,
            max_nodes: None,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.uniqueness_tol > 0.0) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unique,
    Ambiguous,
    Infeasible,
    BudgetExhausted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Unique => "unique",
            Status::Ambiguous => "ambiguous",
            Status::Infeasible => "infeasible",
            Status::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub status: Status,
    pub x_hat: Option<Vec<f64>>,
    pub witness_selections: Vec<Selection>,
    pub distinct_solutions: Vec<Vec<f64>>,
    pub nodes_explored: u64,
    pub nodes_pruned: u64,
}

struct Problem<'a> {
    a: &'a Mat,
    y: &'a [f64],
    threshold: f64,
}

fn prepare<'a>(a: &'a Mat, y: &'a [f64], cfg: &SolveConfig) -> Result<Problem<'a>> {
    cfg.validate()?;
    check_finite(y, "measurement")?;
    let (m, k, n) = (a.rows(), a.cols(), y.len());
    if n == 0 || n > m {
        return Err(Error::dim(format!("{n} measurements from {m} rows")));
    }
    if k > n {
        return Err(Error::Precondition(format!(
            "{k} unknowns from {n} measurements leaves every candidate underdetermined"
        )));
    }
    Ok(Problem {
        a,
        y,
        threshold: cfg.residual_tol * (1.0 + norm2(y)),
    })
}

fn zero_report(k: usize) -> RecoveryReport {
    RecoveryReport {
        status: Status::Unique,
        x_hat: Some(vec![0.0; k]),
        witness_selections: Vec::new(),
        distinct_solutions: vec![vec![0.0; k]],
        nodes_explored: 0,
        nodes_pruned: 0,
    }
}

/// Feasible candidates in enumeration order, merged into solution classes.
#[derive(Default)]
struct Collector {
    witnesses: Vec<Selection>,
    classes: Vec<Vec<f64>>,
}

impl Collector {
    fn add(&mut self, sel: Selection, x: Vec<f64>, tol: f64) {
        let same = |c: &Vec<f64>| dist_inf(c, &x) <= tol * (1.0 + norm_inf(c).max(norm_inf(&x)));
        if !self.classes.iter().any(same) {
            self.classes.push(x);
        }
        self.witnesses.push(sel);
    }

    fn finish(self, exhausted: bool, explored: u64, pruned: u64) -> RecoveryReport {
        let status = if exhausted {
            Status::BudgetExhausted
        } else {
            match self.classes.len() {
                0 => Status::Infeasible,
                1 => Status::Unique,
                _ => Status::Ambiguous,
            }
        };
        let x_hat = match status {
            Status::Unique | Status::Ambiguous => self.classes.first().cloned(),
            _ => None,
        };
        RecoveryReport {
            status,
            x_hat,
            witness_selections: self.witnesses,
            distinct_solutions: self.classes,
            nodes_explored: explored,
            nodes_pruned: pruned,
        }
    }
}

/// Least-squares fit of a full candidate; `Some(solution)` when feasible.
fn feasible(p: &Problem<'_>, sel: &Selection) -> Result<Option<Vec<f64>>> {
    let b_hat = apply_selection(sel, p.a)?;
    let fit = densela::lstsq(&b_hat, p.y)?;
    Ok((fit.residual_norm <= p.threshold).then_some(fit.solution))
}

/// Plain enumeration over all `M!/(M-N)!` candidates in lexicographic order.
pub fn recover(a: &Mat, y: &[f64], cfg: &SolveConfig) -> Result<RecoveryReport> {
    let p = prepare(a, y, cfg)?;
    if y.iter().all(|v| *v == 0.0) {
        return Ok(zero_report(a.cols()));
    }
    let mut found = Collector::default();
    let mut explored = 0u64;
    for sel in enumerate_selections(a.rows(), y.len())? {
        if cfg.max_nodes.is_some_and(|cap| explored >= cap) {
            return Ok(found.finish(true, explored, 0));
        }
        explored += 1;
        if let Some(x) = feasible(&p, &sel)? {
            found.add(sel, x, cfg.uniqueness_tol);
            if cfg.first_hit {
                break;
            }
        }
    }
    Ok(found.finish(false, explored, 0))
}

/// Depth-first search over partial selections.
///
/// Slots are filled left to right. Once `j > K` slots are filled the partial
/// system is overdetermined, and it is cut as soon as its least-squares
/// residual exceeds the full-system threshold: adding equations never lowers
/// the residual. Complete candidates are tested exactly as in [`recover`], so
/// the two agree on status and solutions.
pub fn recover_with_pruning(a: &Mat, y: &[f64], cfg: &SolveConfig) -> Result<RecoveryReport> {
    let p = prepare(a, y, cfg)?;
    if y.iter().all(|v| *v == 0.0) {
        return Ok(zero_report(a.cols()));
    }
    let mut search = Search {
        p: &p,
        cfg,
        picks: Vec::with_capacity(y.len()),
        used: vec![false; a.rows()],
        found: Collector::default(),
        explored: 0,
        pruned: 0,
        exhausted: false,
        done: false,
    };
    search.descend()?;
    let Search {
        found,
        exhausted,
        explored,
        pruned,
        ..
    } = search;
    Ok(found.finish(exhausted, explored, pruned))
}

/// Dispatches on `cfg.prune`.
pub fn solve(a: &Mat, y: &[f64], cfg: &SolveConfig) -> Result<RecoveryReport> {
    if cfg.prune {
        recover_with_pruning(a, y, cfg)
    } else {
        recover(a, y, cfg)
    }
}

struct Search<'a> {
    p: &'a Problem<'a>,
    cfg: &'a SolveConfig,
    picks: Vec<usize>,
    used: Vec<bool>,
    found: Collector,
    explored: u64,
    pruned: u64,
    exhausted: bool,
    done: bool,
}

impl Search<'_> {
    fn descend(&mut self) -> Result<()> {
        let m = self.p.a.rows();
        let n = self.p.y.len();
        let k = self.p.a.cols();
        for row in 0..m {
            if self.used[row] {
                continue;
            }
            if self.cfg.max_nodes.is_some_and(|cap| self.explored >= cap) {
                self.exhausted = true;
                self.done = true;
            }
            if self.done {
                return Ok(());
            }
            self.explored += 1;
            self.picks.push(row);
            self.used[row] = true;

            let depth = self.picks.len();
            if depth == n {
                let sel = Selection::new(m, self.picks.clone())?;
                if let Some(x) = feasible(self.p, &sel)? {
                    self.found.add(sel, x, self.cfg.uniqueness_tol);
                    self.done = self.cfg.first_hit;
                }
            } else if depth > k && self.partial_residual()? > self.p.threshold {
                self.pruned += 1;
            } else {
                self.descend()?;
            }

            self.used[row] = false;
            self.picks.pop();
        }
        Ok(())
    }

    fn partial_residual(&self) -> Result<f64> {
        let rows = self.p.a.select_rows(&self.picks)?;
        let fit = densela::lstsq(&rows, &self.p.y[..self.picks.len()])?;
        Ok(fit.residual_norm)
    }
}

/// Outcome of a null-space containment check over selection pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullspaceCheck {
    pub passed: bool,
    pub exhaustive: bool,
    pub pairs_checked: u64,
    /// Largest `|z1 + z2|` over all null vectors `(z1; z2)` seen.
    pub max_violation: f64,
}

/// Ordered selection pairs beyond this count are sampled instead of enumerated.
pub const NULLSPACE_PAIR_BUDGET: u64 = 250_000;

/// Checks that every null vector `(z1; z2)` of `[S1 A, S2 A]` has
/// `z1 = -z2`, over all ordered pairs of `n`-row selections.
pub fn check_nullspace_property(a: &Mat, n: usize, rank_tol: f64) -> Result<bool> {
    Ok(nullspace_property(a, n, rank_tol, NULLSPACE_PAIR_BUDGET, 0)?.passed)
}

/// Like [`check_nullspace_property`], reporting detail. When the pair count
/// exceeds `max_pairs`, `max_pairs` pairs are drawn uniformly using `seed`.
pub fn nullspace_property(
    a: &Mat,
    n: usize,
    rank_tol: f64,
    max_pairs: u64,
    seed: u64,
) -> Result<NullspaceCheck> {
    let k = a.cols();
    if n < 2 * k {
        return Err(Error::Precondition(format!(
            "null-space property is only claimed for n >= 2K = {}, got n = {n}",
            2 * k
        )));
    }
    if n > a.rows() {
        return Err(Error::dim(format!(
            "cannot select {n} of {} rows",
            a.rows()
        )));
    }
    let bound = 10.0 * rank_tol;
    let mut max_violation = 0.0f64;
    let mut check = |s1: &Selection, s2: &Selection| -> Result<()> {
        let c = apply_selection(s1, a)?.hcat(&apply_selection(s2, a)?)?;
        for z in densela::nullspace(&c, rank_tol)? {
            let v = norm2(&(0..k).map(|i| z[i] + z[k + i]).collect::<Vec<_>>());
            max_violation = max_violation.max(v);
        }
        Ok(())
    };

    let per_side = count_selections(a.rows(), n);
    let total = per_side.saturating_mul(per_side);
    let (exhaustive, pairs_checked) = if total <= max_pairs as u128 {
        let all: Vec<Selection> = enumerate_selections(a.rows(), n)?.collect();
        for s1 in &all {
            for s2 in &all {
                check(s1, s2)?;
            }
        }
        (true, total as u64)
    } else {
        let mut rng = model::rng_for(seed, Stream::Selection);
        for _ in 0..max_pairs {
            let s1 = Selection::random(a.rows(), n, rng.gen())?;
            let s2 = Selection::random(a.rows(), n, rng.gen())?;
            check(&s1, &s2)?;
        }
        (false, max_pairs)
    };
    Ok(NullspaceCheck {
        passed: max_violation <= bound,
        exhaustive,
        pairs_checked,
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::default_rank_tol;
    use crate::model::{gen_matrix, EntryDist};

    fn golden_4x2() -> Mat {
        Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0], [1.0, -1.0]]).unwrap()
    }

    fn ambiguous_3x2() -> Mat {
        Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0]]).unwrap()
    }

    fn both(a: &Mat, y: &[f64]) -> [RecoveryReport; 2] {
        let cfg = SolveConfig::default();
        [
            recover(a, y, &cfg).unwrap(),
            recover_with_pruning(a, y, &cfg).unwrap(),
        ]
    }

    #[test]
    fn golden_matrix_unique_for_every_shuffle() {
        let a = golden_4x2();
        let y0 = [1.0, -3.0, -5.0, 4.0];
        for p in enumerate_selections(4, 4).unwrap() {
            let y = p.permute_vec(&y0).unwrap();
            for r in both(&a, &y) {
                assert_eq!(r.status, Status::Unique, "shuffle {p}");
                assert!(dist_inf(r.x_hat.as_ref().unwrap(), &[1.0, -3.0]) < 1e-10);
            }
        }
    }

    #[test]
    fn three_row_matrix_is_ambiguous() {
        for r in both(&ambiguous_3x2(), &[1.0, -3.0, -5.0]) {
            assert_eq!(r.status, Status::Ambiguous);
            assert_eq!(r.distinct_solutions.len(), 2);
            let has = |t: [f64; 2]| r.distinct_solutions.iter().any(|s| dist_inf(s, &t) < 1e-10);
            assert!(has([1.0, -3.0]) && has([-5.0, 1.0]));
        }
    }

    #[test]
    fn zero_measurement_returns_zero() {
        for r in both(&golden_4x2(), &[0.0; 4]) {
            assert_eq!(r.status, Status::Unique);
            assert_eq!(r.x_hat, Some(vec![0.0, 0.0]));
        }
    }

    #[test]
    fn scalar_unknown_picks_larger_magnitude() {
        let a = Mat::from_rows(&[[2.5], [-0.7]]).unwrap();
        let t = -1.3;
        for y in [[2.5 * t, -0.7 * t], [-0.7 * t, 2.5 * t]] {
            for r in both(&a, &y) {
                assert_eq!(r.status, Status::Unique);
                assert!((r.x_hat.unwrap()[0] - t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_hit_stops_early() {
        let cfg = SolveConfig {
            first_hit: true,
            ..SolveConfig::default()
        };
        let r = recover(&ambiguous_3x2(), &[1.0, -3.0, -5.0], &cfg).unwrap();
        assert_eq!(r.status, Status::Unique);
        assert_eq!(r.witness_selections, vec![Selection::identity(3)]);
        assert_eq!(r.nodes_explored, 1);
        let p = recover_with_pruning(&ambiguous_3x2(), &[1.0, -3.0, -5.0], &cfg).unwrap();
        assert_eq!(p.x_hat, r.x_hat);
    }

    #[test]
    fn budget_exhaustion() {
        let cfg = SolveConfig {
            max_nodes: Some(3),
            prune: false,
            ..SolveConfig::default()
        };
        let r = recover(&golden_4x2(), &[4.0, -5.0, -3.0, 1.0], &cfg).unwrap();
        assert_eq!(r.status, Status::BudgetExhausted);
        assert_eq!(r.nodes_explored, 3);
        let r = recover_with_pruning(&golden_4x2(), &[4.0, -5.0, -3.0, 1.0], &cfg).unwrap();
        assert_eq!(r.status, Status::BudgetExhausted);
        assert!(r.x_hat.is_none());
    }

    #[test]
    fn pruning_matches_enumeration_on_random_instance() {
        let a = gen_matrix(6, 3, EntryDist::Gaussian, 42).unwrap();
        let sel = Selection::random(6, 6, 42).unwrap();
        let x = [0.4, -1.1, 2.0];
        let y = apply_selection(&sel, &a).unwrap().matvec(&x).unwrap();
        let [plain, pruned] = both(&a, &y);
        assert_eq!(plain.status, Status::Unique);
        assert_eq!(plain.status, pruned.status);
        assert_eq!(plain.x_hat, pruned.x_hat);
        assert_eq!(plain.witness_selections, pruned.witness_selections);
        assert!(pruned.nodes_pruned > 0);
        assert_eq!(plain.nodes_explored, 720);
    }

    #[test]
    fn input_errors() {
        let cfg = SolveConfig::default();
        let a = ambiguous_3x2();
        assert!(matches!(
            recover(&a, &[1.0], &cfg),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            recover(&a, &[1.0, 2.0, 3.0, 4.0], &cfg),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            recover(&a, &[1.0, f64::NAN, 3.0], &cfg),
            Err(Error::NonFinite(_))
        ));
        let bad = SolveConfig {
            residual_tol: 0.0,
            ..cfg
        };
        assert!(recover(&a, &[1.0, 2.0, 3.0], &bad).is_err());
    }

    #[test]
    fn nullspace_property_examples() {
        let tol = default_rank_tol(4, 4);
        assert!(check_nullspace_property(&golden_4x2(), 4, tol).unwrap());
        let g = gen_matrix(4, 2, EntryDist::Gaussian, 17).unwrap();
        let r = nullspace_property(&g, 4, tol, NULLSPACE_PAIR_BUDGET, 0).unwrap();
        assert!(r.passed && r.exhaustive);
        assert_eq!(r.pairs_checked, 576);
        assert!(matches!(
            check_nullspace_property(&ambiguous_3x2(), 3, tol),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn nullspace_property_fails_below_threshold_rows() {
        // Same check on an N < 2K pair set is not guaranteed; the ambiguous
        // matrix exhibits a violating null vector for the pair (I, Pi).
        let a = ambiguous_3x2();
        let c = a.hcat(&a.select_rows(&[1, 2, 0]).unwrap()).unwrap();
        let z = &densela::nullspace(&c, 1e-10).unwrap()[0];
        assert!(((z[0] + z[2]).powi(2) + (z[1] + z[3]).powi(2)).sqrt() > 0.1);
    }

    #[test]
    fn sampled_nullspace_check() {
        let a = gen_matrix(7, 2, EntryDist::Gaussian, 5).unwrap();
        let r = nullspace_property(&a, 5, default_rank_tol(5, 4), 2_000, 9).unwrap();
        assert!(!r.exhaustive);
        assert_eq!(r.pairs_checked, 2_000);
        assert!(r.passed);
    }
}

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use unlabeled_sensing::adversary::{construct, odd_reduced_matrix, rank_witness_assignment};
use unlabeled_sensing::cycles::decompose;
use unlabeled_sensing::densela::{default_rank_tol, det, dist_inf, lstsq, norm2, norm_inf, Mat};
use unlabeled_sensing::harness::experiment::{golden_matrix, GOLDEN_SIGNAL};
use unlabeled_sensing::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use unlabeled_sensing::model::{
    apply_selection, enumerate_selections, gen_matrix, gen_signal, sub_seed, EntryDist, Selection,
};
use unlabeled_sensing::solver::{
    nullspace_property, recover, recover_with_pruning, solve, RecoveryReport, SolveConfig, Status,
    NULLSPACE_PAIR_BUDGET,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, limit: Duration) -> Result<f64, String> {
    let s = start.elapsed().as_secs_f64();
    ensure(start.elapsed() <= limit, || {
        format!("took {s:.2}s, budget {:.0}s", limit.as_secs_f64())
    })?;
    Ok(s)
}

fn exact_campaign(k: usize, n: usize, m: usize, trials: usize) -> Result<(), String> {
    let cfg = ExperimentConfig::new(ExperimentKind::MontecarloExact, k, n, m, trials, 1);
    let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure(rep.aggregates.success_rate == 1.0, || {
        format!(
            "k={k} n={n} m={m}: {}/{} successes",
            rep.aggregates.successes, rep.aggregates.trials
        )
    })
}

fn c1() -> Outcome {
    let start = Instant::now();
    for k in 1..=3 {
        exact_campaign(k, 2 * k, 2 * k, 200)?;
    }
    let s = within_budget(start, Duration::from_secs(10))?;
    Ok(format!("K=1,2,3 x 200 trials all exact in {s:.2}s"))
}

fn c2() -> Outcome {
    let start = Instant::now();
    exact_campaign(2, 4, 6, 100)?;
    let s = within_budget(start, Duration::from_secs(30))?;
    Ok(format!("K=2 N=4 M=6 x 100 trials all exact in {s:.2}s"))
}

fn c3() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let a = gen_matrix(4, 2, EntryDist::Gaussian, seed).map_err(|e| e.to_string())?;
        let chk = nullspace_property(&a, 4, default_rank_tol(4, 4), NULLSPACE_PAIR_BUDGET, seed)
            .map_err(|e| e.to_string())?;
        ensure(chk.exhaustive && chk.pairs_checked == 576, || {
            format!("seed {seed}: checked {} pairs", chk.pairs_checked)
        })?;
        ensure(chk.max_violation <= 1e-8, || {
            format!("seed {seed}: violation {:.3e}", chk.max_violation)
        })?;
        worst = worst.max(chk.max_violation);
    }
    Ok(format!("20 seeds x 576 pairs, worst |z1+z2| = {worst:.2e}"))
}

fn contains(sols: &[Vec<f64>], v: &[f64]) -> bool {
    sols.iter()
        .any(|s| dist_inf(s, v) <= 1e-6 * (1.0 + norm_inf(s).max(norm_inf(v))))
}

fn c4() -> Outcome {
    let mut pairs = 0;
    let mut solver_checked = 0;
    for k in 2..=4usize {
        for n in 2..2 * k {
            for d in 0..100u64 {
                let seed = sub_seed(1000 * k as u64 + n as u64, d);
                let b = gen_matrix(n, k, EntryDist::Gaussian, seed).map_err(|e| e.to_string())?;
                let p = construct(&b).map_err(|e| format!("k={k} n={n} draw {d}: {e}"))?;
                let bx = b.matvec(&p.x).map_err(|e| e.to_string())?;
                let pbx = apply_selection(&p.pi, &b)
                    .and_then(|pb| pb.matvec(&p.x_hat))
                    .map_err(|e| e.to_string())?;
                let res = norm2(&bx.iter().zip(&pbx).map(|(u, v)| u - v).collect::<Vec<_>>());
                ensure(res <= 1e-8 * (1.0 + norm2(&bx)), || {
                    format!("k={k} n={n} draw {d}: residual {res:.3e}")
                })?;
                let sep = dist_inf(&p.x, &p.x_hat);
                ensure(sep >= 0.5, || {
                    format!("k={k} n={n} draw {d}: separation {sep}")
                })?;
                pairs += 1;
                if k == 2 && n == 3 {
                    let rep = solve(&b, &bx, &SolveConfig::default()).map_err(|e| e.to_string())?;
                    ensure(
                        rep.status == Status::Ambiguous
                            && contains(&rep.distinct_solutions, &p.x)
                            && contains(&rep.distinct_solutions, &p.x_hat),
                        || format!("k=2 n=3 draw {d}: solver returned {:?}", rep.status),
                    )?;
                    solver_checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{pairs} verified pairs, {solver_checked} solver ambiguity checks at K=2 N=3"
    ))
}

fn expect_unique(a: &Mat, y: &[f64], x: &[f64], what: &str) -> Result<(), String> {
    let rep = solve(a, y, &SolveConfig::default()).map_err(|e| e.to_string())?;
    ensure(rep.status == Status::Unique, || {
        format!("{what}: status {:?}", rep.status)
    })?;
    let xh = rep.x_hat.unwrap_or_default();
    ensure(
        xh.len() == x.len() && dist_inf(&xh, x) <= 1e-8 * (1.0 + norm2(x)),
        || format!("{what}: got {xh:?}, want {x:?}"),
    )
}

fn c5() -> Outcome {
    let err = |e: unlabeled_sensing::Error| e.to_string();
    let a3 = Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 2.0]]).map_err(err)?;
    let rep = solve(&a3, &[1.0, -3.0, -5.0], &SolveConfig::default()).map_err(err)?;
    ensure(
        rep.status == Status::Ambiguous
            && contains(&rep.distinct_solutions, &[1.0, -3.0])
            && contains(&rep.distinct_solutions, &[-5.0, 1.0]),
        || {
            format!(
                "3x2 instance: {:?} {:?}",
                rep.status, rep.distinct_solutions
            )
        },
    )?;

    let a4 = golden_matrix();
    let y4 = a4.matvec(&GOLDEN_SIGNAL).map_err(err)?;
    for (i, order) in enumerate_selections(4, 4).map_err(err)?.enumerate() {
        let y = order.permute_vec(&y4).map_err(err)?;
        expect_unique(&a4, &y, &GOLDEN_SIGNAL, &format!("4x2 order {i}"))?;
    }

    let alpha = 0.75;
    let ac = Mat::from_rows(&[[1.0, 0.0], [0.0, 1.0], [alpha, 1.0 - alpha]]).map_err(err)?;
    for t in 0..100u64 {
        let x = gen_signal(2, 0.1, 10.0, sub_seed(75, t)).map_err(err)?;
        let sel = Selection::random(3, 3, sub_seed(76, t)).map_err(err)?;
        let y = apply_selection(&sel, &ac)
            .and_then(|b| b.matvec(&x))
            .map_err(err)?;
        expect_unique(&ac, &y, &x, &format!("convex-row draw {t}"))?;
    }

    let a1 = Mat::from_rows(&[[2.0], [0.5]]).map_err(err)?;
    let t = -1.7;
    expect_unique(&a1, &[2.0 * t, 0.5 * t], &[t], "K=1 in order")?;
    expect_unique(&a1, &[0.5 * t, 2.0 * t], &[t], "K=1 swapped")?;
    Ok("3x2 ambiguous, 4x2 unique in all 24 orders, 100 convex-row draws, K=1 both orders".into())
}

fn c6() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::SnrSweep, 2, 4, 4, 20, 1);
    cfg.golden = true;
    let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let rows = rep.aggregates.per_snr.ok_or("no per-SNR rows")?;
    ensure(rows.len() == 6, || format!("{} SNR rows", rows.len()))?;
    for w in rows.windows(2) {
        ensure(w[1].mean_rel_error < w[0].mean_rel_error, || {
            format!("mean error not decreasing: {:?} -> {:?}", w[0], w[1])
        })?;
    }
    let last = rows.last().expect("non-empty");
    ensure(last.max_rel_error <= 1e-4, || {
        format!("max error {:.3e} at the top SNR", last.max_rel_error)
    })?;
    let s = within_budget(start, Duration::from_secs(5))?;
    Ok(format!(
        "mean error {:.2e} -> {:.2e}, max at 1e12 {:.2e}, {s:.2}s",
        rows[0].mean_rel_error, last.mean_rel_error, last.max_rel_error
    ))
}

fn c7() -> Outcome {
    let err = |e: unlabeled_sensing::Error| e.to_string();
    let (k, n, m) = (2usize, 4usize, 6usize);
    let (mut few_cycles, mut feasible) = (0, 0);
    for t in 0..200u64 {
        let s = sub_seed(7, t);
        let a = gen_matrix(m, k, EntryDist::Gaussian, s).map_err(err)?;
        let x = gen_signal(k, 0.1, 10.0, s).map_err(err)?;
        let ts = Selection::random(m, n, s).map_err(err)?;
        let cs = if t % 4 == 0 {
            ts.clone()
        } else {
            Selection::random(m, n, sub_seed(s, 1)).map_err(err)?
        };
        let d = decompose(&ts, &cs).map_err(err)?;
        let y = apply_selection(&ts, &a)
            .and_then(|b| b.matvec(&x))
            .map_err(err)?;
        let fit = apply_selection(&cs, &a)
            .and_then(|bh| lstsq(&bh, &y))
            .map_err(err)?;
        let ok = fit.residual_norm <= 1e-9 * (1.0 + norm2(&y));
        if d.n_complete < k {
            few_cycles += 1;
            ensure(!ok, || {
                format!("triple {t}: feasible with {} complete cycles", d.n_complete)
            })?;
        }
        if ok {
            feasible += 1;
            ensure(d.n_complete >= k, || {
                format!("triple {t}: feasible below rank")
            })?;
            ensure(
                dist_inf(&fit.solution, &x) <= 1e-8 * (1.0 + norm2(&x)),
                || format!("triple {t}: feasible solution {:?} != {x:?}", fit.solution),
            )?;
        }
    }
    Ok(format!(
        "200 triples, {few_cycles} with too few complete cycles (all infeasible), {feasible} feasible (all exact)"
    ))
}

fn c8() -> Outcome {
    for k in 2..=6 {
        let b = rank_witness_assignment(k).map_err(|e| e.to_string())?;
        let g = odd_reduced_matrix(&b).map_err(|e| e.to_string())?;
        let dim = 2 * k - 1;
        ensure(g.rows() == dim && g.cols() == dim, || {
            format!("k={k}: G is {}x{}", g.rows(), g.cols())
        })?;
        let mut col_hits = vec![0; dim];
        for i in 0..dim {
            let row = g.row(i);
            ensure(row.iter().all(|&v| v == 0.0 || v == 1.0), || {
                format!("k={k}: row {i} has entries outside {{0,1}}")
            })?;
            let ones: Vec<usize> = (0..dim).filter(|&j| row[j] == 1.0).collect();
            ensure(ones.len() == 1, || {
                format!("k={k}: row {i} has {} ones", ones.len())
            })?;
            col_hits[ones[0]] += 1;
        }
        ensure(col_hits.iter().all(|&c| c == 1), || {
            format!("k={k}: column hits {col_hits:?}")
        })?;
        let dt = det(&g).map_err(|e| e.to_string())?;
        ensure(dt.abs() == 1.0, || format!("k={k}: |det| = {dt}"))?;
    }
    Ok("k=2..6 reduced matrices are permutation matrices with |det| = 1".into())
}

fn same_solution_set(a: &RecoveryReport, b: &RecoveryReport) -> bool {
    a.distinct_solutions.len() == b.distinct_solutions.len()
        && a.distinct_solutions
            .iter()
            .all(|s| contains(&b.distinct_solutions, s))
}

fn c9() -> Outcome {
    let err = |e: unlabeled_sensing::Error| e.to_string();
    let shapes = [(1usize, 2usize, 3usize), (2, 4, 5), (2, 3, 3), (3, 6, 6)];
    let cfg = SolveConfig::default();
    let (mut k3, mut k3_pruned) = (0, 0);
    let mut by_status = [0usize; 3];
    for i in 0..500u64 {
        let (k, n, m) = shapes[i as usize % shapes.len()];
        let s = sub_seed(9, i);
        let a = gen_matrix(m, k, EntryDist::Gaussian, s).map_err(err)?;
        let mut y = if n < 2 * k {
            // Known-ambiguous measurements on the same sensing matrix.
            a.matvec(&construct(&a).map_err(err)?.x).map_err(err)?
        } else {
            let x = gen_signal(k, 0.1, 10.0, s).map_err(err)?;
            let sel = Selection::random(m, n, s).map_err(err)?;
            apply_selection(&sel, &a)
                .and_then(|b| b.matvec(&x))
                .map_err(err)?
        };
        if i % 10 == 7 {
            y[0] += 1e-3;
        }
        let full = recover(&a, &y, &cfg).map_err(err)?;
        let pruned = recover_with_pruning(&a, &y, &cfg).map_err(err)?;
        ensure(full.status == pruned.status, || {
            format!("instance {i}: {:?} vs {:?}", full.status, pruned.status)
        })?;
        ensure(same_solution_set(&full, &pruned), || {
            format!("instance {i}: solution sets differ")
        })?;
        let xs_match = match (&full.x_hat, &pruned.x_hat) {
            (Some(u), Some(v)) => contains(std::slice::from_ref(u), v),
            (None, None) => true,
            _ => false,
        };
        ensure(xs_match, || format!("instance {i}: x_hat differs"))?;
        match full.status {
            Status::Unique => by_status[0] += 1,
            Status::Ambiguous => by_status[1] += 1,
            _ => by_status[2] += 1,
        }
        if k == 3 {
            k3 += 1;
            if pruned.nodes_pruned > 0 {
                k3_pruned += 1;
            }
        }
    }
    ensure(k3_pruned * 10 >= k3 * 9, || {
        format!("pruning active on only {k3_pruned}/{k3} K=3 instances")
    })?;
    Ok(format!(
        "500 instances agree ({} unique, {} ambiguous, {} infeasible); pruning active on {k3_pruned}/{k3} K=3",
        by_status[0], by_status[1], by_status[2]
    ))
}

fn cli_json(args: &[String], dir: &std::path::Path, tag: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("{tag}.json"));
    let status = Command::new(env!("CARGO_BIN_EXE_unlabeled-sensing"))
        .args(args)
        .arg("--no-timing")
        .arg("--json")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.code() == Some(0), || {
        format!("{args:?} exited {status}")
    })?;
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn c10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs: Vec<Vec<String>> = Vec::new();
    let mc = |kind: &str, k: usize, n: usize, m: usize, trials: usize| -> Vec<String> {
        format!("montecarlo --kind {kind} --k {k} --n {n} --m {m} --trials {trials} --seed 1")
            .split_whitespace()
            .map(String::from)
            .collect()
    };
    for k in 1..=3 {
        runs.push(mc("montecarlo_exact", k, 2 * k, 2 * k, 200));
    }
    for k in 2..=4 {
        for n in 2..2 * k {
            runs.push(mc("converse", k, n, n, 100));
        }
    }
    let mut sweep = mc("snr_sweep", 2, 4, 4, 20);
    sweep.push("--golden".into());
    runs.push(sweep);
    for (i, args) in runs.iter().enumerate() {
        let first = cli_json(args, dir.path(), &format!("{i}a"))?;
        let second = cli_json(args, dir.path(), &format!("{i}b"))?;
        ensure(first == second, || format!("{args:?}: outputs differ"))?;
    }
    Ok(format!(
        "{} CLI campaigns byte-identical across two runs",
        runs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact recovery, M = N = 2K", c1),
        ("exact recovery, M > N", c2),
        ("null-space containment", c3),
        ("ambiguous pairs below 2K", c4),
        ("worked examples", c5),
        ("local stability sweep", c6),
        ("cycle count vs feasibility", c7),
        ("rank witness", c8),
        ("pruning equivalence", c9),
        ("CLI determinism", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {:>2} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

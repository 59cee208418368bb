//! Release gate: one test per shipping criterion, each printing a single
//! PASS or FAIL line. Run with `--nocapture` to see the lines on success.

use std::collections::VecDeque;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use benders_ttf::bcg::{run_bcg, solve_subproblem_dual, sub_lower_bound};
use benders_ttf::cli::{
    normalized_gap, solve_instance, worker_count, write_bench_csv, BenchRow, SolverKind,
};
use benders_ttf::columns::{skeleton_cost, ColumnPool, LocalAssignment};
use benders_ttf::lp_core::{solve_primal_dual, LinearProgram, LpStatus, Sense};
use benders_ttf::model::{
    generate_instance, CostModel, DetId, Instance, PartId, PricingMode, SolverConfig,
};
use benders_ttf::oracle::{enumerate_all_locals, enumerate_all_skeletons, solve_exact};
use benders_ttf::pcg::run_pcg;
use benders_ttf::pricing::{price_local, price_skeleton, PotentialVector};
use benders_ttf::rounding::{check_solution, round_joint, round_two_stage};

/// Serializes the wall-clock-sensitive criteria so parallel test threads do
/// not distort their runtime budgets.
static TIME_SLOT: Mutex<()> = Mutex::new(());

fn criterion(n: usize, name: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match &outcome {
        Ok(()) => println!("ACCEPTANCE {n} ({name}): PASS"),
        Err(_) => println!("ACCEPTANCE {n} ({name}): FAIL"),
    }
    if let Err(e) = outcome {
        resume_unwind(e);
    }
}

fn full_pool(inst: &Instance) -> ColumnPool {
    let mut pool = ColumnPool::new(inst.n_parts());
    for s in enumerate_all_skeletons(inst).expect("within enumeration guard") {
        pool.add_skeleton(s);
    }
    for l in enumerate_all_locals(inst, usize::MAX).expect("within enumeration guard") {
        pool.add_local(l);
    }
    pool
}

#[test]
fn criterion_1_oracle_equivalence() {
    criterion(1, "oracle equivalence", || {
        let _slot = TIME_SLOT.lock().unwrap_or_else(|p| p.into_inner());
        let started = Instant::now();
        let config = SolverConfig::default();
        let shapes = [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (4, 1), (4, 2)];
        for trial in 0..100u64 {
            let (parts, dpp) = shapes[trial as usize % shapes.len()];
            let inst = generate_instance(parts, dpp, 1.0, 1000 + trial);
            let exact = solve_exact(&inst, &config).unwrap();
            check_solution(&inst, &exact).expect("exact solution verifies");

            let out = run_bcg(&inst, &config).unwrap();
            assert!(
                out.master.objective <= exact.objective + 1e-6,
                "relaxation stays below the integral optimum (trial {trial})"
            );
            let rounded = round_two_stage(&inst, &out.pool, &out.rows, &config).unwrap();
            check_solution(&inst, &rounded.solution).expect("rounded solution verifies");

            let ilp = round_joint(&inst, &full_pool(&inst), &config).unwrap();
            check_solution(&inst, &ilp).expect("joint solution verifies");
            assert!(
                (ilp.objective - exact.objective).abs() <= 1e-6,
                "joint selection over all columns matches the oracle (trial {trial}): \
                 {} vs {}",
                ilp.objective,
                exact.objective
            );
        }
        assert!(started.elapsed().as_secs_f64() < 60.0, "runtime budget");
    });
}

#[test]
fn criterion_2_both_solvers_reach_one_objective() {
    criterion(2, "decomposition and column generation agree", || {
        let _slot = TIME_SLOT.lock().unwrap_or_else(|p| p.into_inner());
        let started = Instant::now();
        let config = SolverConfig { time_cap_seconds: f64::INFINITY, ..Default::default() };
        let shapes = [(2, 5), (3, 3), (4, 2), (5, 2), (2, 4), (3, 2)];
        for trial in 0..50u64 {
            let (parts, dpp) = shapes[trial as usize % shapes.len()];
            let inst = generate_instance(parts, dpp, 1.0, 2000 + trial);
            let b = run_bcg(&inst, &config).unwrap();
            let p = run_pcg(&inst, &config).unwrap();
            assert!(!b.timed_out && !p.timed_out, "no cap, both converge");
            let diff = (b.master.objective - p.objective).abs();
            assert!(
                diff <= 1e-6 * (1.0 + b.master.objective.abs()),
                "objectives differ by {diff} on trial {trial}"
            );
        }
        assert!(started.elapsed().as_secs_f64() < 120.0, "runtime budget");
    });
}

/// Re-runs one sub-problem's inner loop from an empty pool, recording the
/// anytime bound at every iterate, and checks each against the converged
/// objective.
fn inner_bounds_hold(inst: &Instance, part: PartId, gm: &[f64], config: &SolverConfig) {
    let n = inst.n_detections();
    let dets = inst.dets_of_part(part).to_vec();
    let nr = dets.len();
    let eps = config.bias_for(inst);
    let slot = |d: DetId| dets.binary_search(&d).unwrap();

    let mut objective = Vec::with_capacity(3 * nr);
    for &d in &dets {
        objective.push(1.0 - gm[d.0] + eps);
    }
    objective.extend(std::iter::repeat(1.0).take(nr));
    for &d in &dets {
        objective.push(gm[d.0] + eps);
    }

    let mut locals: Vec<LocalAssignment> = Vec::new();
    let mut bounds = Vec::new();
    let converged;
    let mut rounds = 0;
    loop {
        rounds += 1;
        assert!(rounds <= 10_000, "inner loop runaway");
        let mut lp = LinearProgram::new(objective.clone());
        for l in &locals {
            let mut coeffs = vec![0.0; 3 * nr];
            for &d in &l.local_dets {
                coeffs[slot(d)] += 1.0;
                coeffs[nr + slot(d)] += 1.0;
            }
            coeffs[nr + slot(l.global_det)] += 1.0;
            coeffs[2 * nr + slot(l.global_det)] += 1.0;
            lp.add_row(coeffs, Sense::Ge, -l.cost);
        }
        let sol = solve_primal_dual(&lp, config).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);

        let mut lam1 = vec![0.0; n];
        let mut lam2 = vec![0.0; n];
        let mut lam3 = vec![0.0; n];
        for (k, &d) in dets.iter().enumerate() {
            lam1[d.0] = sol.x[k];
            lam2[d.0] = sol.x[nr + k];
            lam3[d.0] = sol.x[2 * nr + k];
        }
        bounds.push(sub_lower_bound(inst, part, gm, &lam1, &lam2, &lam3, config).unwrap());

        let mut added = false;
        for &g in &dets {
            let (set, value) = price_local(
                inst,
                part,
                &lam1,
                &lam2,
                &lam3,
                g,
                config.pricing_mode,
                config.max_locals_per_assignment,
            )
            .unwrap();
            if !set.is_empty() && value < -config.lp_tolerance {
                let la = LocalAssignment::new(inst, part, g, set).unwrap();
                let known = locals
                    .iter()
                    .any(|ex| ex.global_det == la.global_det && ex.local_dets == la.local_dets);
                if !known {
                    locals.push(la);
                    added = true;
                }
            }
        }
        if !added {
            converged = dets
                .iter()
                .map(|&d| {
                    lam1[d.0] * (gm[d.0] - 1.0) - lam2[d.0] - lam3[d.0] * gm[d.0]
                })
                .sum::<f64>();
            break;
        }
    }

    for (t, b) in bounds.iter().enumerate() {
        assert!(
            *b <= converged + 1e-6,
            "inner bound {b} at iterate {t} exceeds converged value {converged}"
        );
    }

    // The production path must land on the same converged value.
    let mut pool = ColumnPool::new(inst.n_parts());
    let (_, production) = solve_subproblem_dual(inst, part, gm, &mut pool, config).unwrap();
    assert!(
        (production - converged).abs() <= 1e-9,
        "replica diverged from the solver: {production} vs {converged}"
    );
}

#[test]
fn criterion_3_anytime_bounds_are_valid() {
    criterion(3, "anytime bounds never overshoot", || {
        let config = SolverConfig::default();
        let shapes = [(2, 3), (3, 2), (3, 3), (4, 2), (5, 2)];
        for trial in 0..30u64 {
            let (parts, dpp) = shapes[trial as usize % shapes.len()];
            let inst = generate_instance(parts, dpp, 1.0, 3000 + trial);
            let out = run_bcg(&inst, &config).unwrap();
            for rec in &out.trace {
                assert!(
                    rec.lower_bound <= out.master.objective + 1e-6,
                    "master bound {} at iteration {} exceeds final objective {}",
                    rec.lower_bound,
                    rec.iter,
                    out.master.objective
                );
            }

            let n = inst.n_detections();
            let final_marginals = out.pool.skeleton_marginals(&inst, &out.master.gamma);
            let mut rng = ChaCha8Rng::seed_from_u64(97 + trial);
            let random_marginals: Vec<f64> =
                (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
            for gm in [vec![0.0; n], final_marginals, random_marginals] {
                for p in 0..inst.n_parts() {
                    inner_bounds_hold(&inst, PartId(p), &gm, &config);
                }
            }
        }
    });
}

fn without_same_part_pairs(inst: &Instance) -> Instance {
    let costs = CostModel {
        theta: inst.costs.theta.clone(),
        phi: inst
            .costs
            .phi
            .iter()
            .copied()
            .filter(|&(a, b, _)| inst.part_of(a) != inst.part_of(b))
            .collect(),
        omega: inst.costs.omega,
    };
    Instance::new(inst.name.clone(), inst.graph.clone(), inst.detections.clone(), costs)
}

#[test]
fn criterion_4_pricing_matches_enumeration() {
    criterion(4, "pricing equals brute force", || {
        let shapes = [(2, 3), (3, 3), (3, 2), (4, 2), (2, 4), (5, 2)];
        let mut rng = ChaCha8Rng::seed_from_u64(4004);

        for trial in 0..200u64 {
            let (parts, dpp) = shapes[trial as usize % shapes.len()];
            let inst = generate_instance(parts, dpp, 1.0, 40_000 + trial);
            let n = inst.n_detections();
            let delta =
                PotentialVector::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
            let all = enumerate_all_skeletons(&inst).unwrap();
            for d in inst.major_detections() {
                let (set, value) = price_skeleton(&inst, &delta, d).unwrap();
                let brute = all
                    .iter()
                    .filter(|s| s.contains(d))
                    .map(|s| s.cost + s.members.iter().map(|m| delta.delta[m.0]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    (value - brute).abs() <= 1e-9,
                    "pricing value {value} vs enumeration {brute} (trial {trial})"
                );
                let achieved = skeleton_cost(&inst, &set).unwrap()
                    + set.iter().map(|m| delta.delta[m.0]).sum::<f64>();
                assert!((achieved - value).abs() <= 1e-9, "reported set attains the value");
            }
        }

        for trial in 0..200u64 {
            let parts = 2 + (trial as usize % 2);
            let inst = without_same_part_pairs(&generate_instance(parts, 3, 1.0, 50_000 + trial));
            inst.ensure_valid().unwrap();
            let n = inst.n_detections();
            let lam1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.8)).collect();
            let lam2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.8)).collect();
            let lam3: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.8)).collect();
            for p in 0..inst.n_parts() {
                for &d in inst.dets_of_part(PartId(p)) {
                    let exact = price_local(
                        &inst, PartId(p), &lam1, &lam2, &lam3, d,
                        PricingMode::ExactEnumeration, usize::MAX,
                    )
                    .unwrap();
                    let fast = price_local(
                        &inst, PartId(p), &lam1, &lam2, &lam3, d,
                        PricingMode::SeparableFast, usize::MAX,
                    )
                    .unwrap();
                    assert_eq!(exact.0, fast.0, "mode sets agree (trial {trial})");
                    assert!((exact.1 - fast.1).abs() <= 1e-12, "mode values agree");
                }
            }
        }
    });
}

#[test]
fn criterion_5_bias_size_does_not_move_the_objective() {
    criterion(5, "bias robustness", || {
        for trial in 0..20u64 {
            let inst = generate_instance(3, 3, 1.0, 5000 + trial);
            let eps = 1e-6 * (1.0 + inst.max_abs_cost());
            let coarse = run_bcg(
                &inst,
                &SolverConfig { bias_epsilon: Some(eps), ..Default::default() },
            )
            .unwrap();
            let fine = run_bcg(
                &inst,
                &SolverConfig { bias_epsilon: Some(eps / 10.0), ..Default::default() },
            )
            .unwrap();
            let diff = (coarse.master.objective - fine.master.objective).abs();
            let budget = 10.0 * eps * inst.n_detections() as f64;
            assert!(diff <= budget, "objective moved by {diff} > {budget} on trial {trial}");
        }
    });
}

/// Exact rational reference for tiny LPs over integer data: every candidate
/// vertex is the meet of `n` active constraints, solved in i128 arithmetic.
mod exact_lp {
    use benders_ttf::lp_core::Sense;

    pub struct IntLp {
        pub c: Vec<i64>,
        pub rows: Vec<(Vec<i64>, Sense, i64)>,
    }

    /// Fraction-free Gaussian elimination; exact for integer matrices.
    fn det(mut a: Vec<Vec<i128>>) -> i128 {
        let n = a.len();
        if n == 0 {
            return 1;
        }
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k][k] == 0 {
                let Some(swap) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                    return 0;
                };
                a.swap(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
                a[i][k] = 0;
            }
            prev = a[k][k];
        }
        sign * a[n - 1][n - 1]
    }

    /// Cramer solve of `a x = b`: numerators plus a positive denominator.
    fn solve_square(a: &[Vec<i128>], b: &[i128]) -> Option<(Vec<i128>, i128)> {
        let n = b.len();
        let d = det(a.to_vec());
        if d == 0 {
            return None;
        }
        let mut nums = Vec::with_capacity(n);
        for j in 0..n {
            let mut aj = a.to_vec();
            for i in 0..n {
                aj[i][j] = b[i];
            }
            nums.push(det(aj));
        }
        if d < 0 {
            Some((nums.iter().map(|v| -v).collect(), -d))
        } else {
            Some((nums, d))
        }
    }

    fn combinations(total: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..total {
                cur.push(i);
                rec(i + 1, total, k, cur, out);
                cur.pop();
            }
        }
        rec(0, total, k, &mut cur, &mut out);
        out
    }

    /// Minimum of `c'x` over the rows plus `x >= 0`, as `(num, den)` with
    /// `den > 0`, or `None` when infeasible. The caller must keep the
    /// feasible set bounded.
    pub fn minimize(lp: &IntLp) -> Option<(i128, i128)> {
        let n = lp.c.len();
        let mut cons: Vec<(Vec<i128>, Sense, i128)> = lp
            .rows
            .iter()
            .map(|(a, s, r)| (a.iter().map(|&v| v as i128).collect(), *s, *r as i128))
            .collect();
        for j in 0..n {
            let mut e = vec![0i128; n];
            e[j] = 1;
            cons.push((e, Sense::Ge, 0));
        }

        let mut best: Option<(i128, i128)> = None;
        for subset in combinations(cons.len(), n) {
            let a: Vec<Vec<i128>> = subset.iter().map(|&i| cons[i].0.clone()).collect();
            let b: Vec<i128> = subset.iter().map(|&i| cons[i].2).collect();
            let Some((nums, den)) = solve_square(&a, &b) else { continue };
            let feasible = cons.iter().all(|(a, s, r)| {
                let lhs: i128 = a.iter().zip(&nums).map(|(ai, ni)| ai * ni).sum();
                let rhs = r * den;
                match s {
                    Sense::Le => lhs <= rhs,
                    Sense::Ge => lhs >= rhs,
                    Sense::Eq => lhs == rhs,
                }
            });
            if !feasible {
                continue;
            }
            let num: i128 = lp.c.iter().zip(&nums).map(|(&c, ni)| c as i128 * ni).sum();
            best = match best {
                None => Some((num, den)),
                Some((bn, bd)) if num * bd < bn * den => Some((num, den)),
                keep => keep,
            };
        }
        best
    }
}

#[test]
fn criterion_6_lp_core_soundness() {
    criterion(6, "LP certificates and rational oracle", || {
        let config = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(600_000);
        let mut optimal = 0usize;
        let mut infeasible = 0usize;

        for trial in 0..1000 {
            let n = rng.random_range(1..=3usize);
            let m = rng.random_range(1..=4usize);
            let c: Vec<i64> = (0..n).map(|_| rng.random_range(-5..=5)).collect();
            let mut rows: Vec<(Vec<i64>, Sense, i64)> = (0..m)
                .map(|_| {
                    let coeffs: Vec<i64> = (0..n).map(|_| rng.random_range(-4..=4)).collect();
                    let sense = match rng.random_range(0..10) {
                        0..=4 => Sense::Le,
                        5..=7 => Sense::Ge,
                        _ => Sense::Eq,
                    };
                    (coeffs, sense, rng.random_range(-6..=6))
                })
                .collect();
            // Box row keeps the feasible set bounded, so a finite optimum
            // sits on a vertex whenever one exists.
            rows.push((vec![1; n], Sense::Le, rng.random_range(4..=12)));

            let reference = exact_lp::minimize(&exact_lp::IntLp { c: c.clone(), rows: rows.clone() });

            let mut lp = LinearProgram::new(c.iter().map(|&v| v as f64).collect());
            for (coeffs, sense, rhs) in &rows {
                lp.add_row(coeffs.iter().map(|&v| v as f64).collect(), *sense, *rhs as f64);
            }
            let sol = solve_primal_dual(&lp, &config).unwrap();

            match reference {
                None => {
                    infeasible += 1;
                    assert_eq!(
                        sol.status,
                        LpStatus::Infeasible,
                        "oracle found no vertex on trial {trial}"
                    );
                }
                Some((num, den)) => {
                    optimal += 1;
                    assert_eq!(sol.status, LpStatus::Optimal, "trial {trial}");
                    let exact = num as f64 / den as f64;
                    assert!(
                        (sol.objective - exact).abs() <= 1e-6,
                        "objective {} vs exact {exact} on trial {trial}",
                        sol.objective
                    );
                    assert!(
                        (sol.objective - sol.dual_objective).abs() <= 1e-7,
                        "duality gap on trial {trial}"
                    );

                    // Complementary slackness and dual feasibility.
                    let y_signed: Vec<f64> = lp
                        .rows
                        .iter()
                        .zip(&sol.y)
                        .map(|(r, &yi)| match r.sense {
                            Sense::Le => -yi,
                            Sense::Ge | Sense::Eq => yi,
                        })
                        .collect();
                    for (i, row) in lp.rows.iter().enumerate() {
                        let lhs: f64 =
                            row.coeffs.iter().zip(&sol.x).map(|(a, v)| a * v).sum();
                        let slack = row.rhs - lhs;
                        if row.sense != Sense::Eq {
                            assert!(sol.y[i] >= -1e-7);
                            assert!(
                                (sol.y[i] * slack).abs() <= 1e-7 * (1.0 + row.rhs.abs()),
                                "row {i} slack priced on trial {trial}"
                            );
                        }
                    }
                    for j in 0..lp.n_vars() {
                        let priced: f64 = lp
                            .rows
                            .iter()
                            .zip(&y_signed)
                            .map(|(r, yi)| r.coeffs[j] * yi)
                            .sum();
                        let rc = lp.objective[j] - priced;
                        assert!(rc >= -1e-7, "reduced cost sign on trial {trial}");
                        assert!(
                            (sol.x[j] * rc).abs() <= 1e-7 * (1.0 + sol.x[j].abs()),
                            "variable {j} priced on trial {trial}"
                        );
                    }
                }
            }
        }
        assert!(optimal >= 100 && infeasible >= 100, "both branches exercised");
    });
}

#[test]
fn criterion_7_desk_scale_gap_metrics() {
    criterion(7, "normalized gaps at desk scale", || {
        let _slot = TIME_SLOT.lock().unwrap_or_else(|p| p.into_inner());
        let config = SolverConfig { time_cap_seconds: 5.0, ..Default::default() };
        let dir = tempfile::tempdir().unwrap();

        let queue: Mutex<VecDeque<u64>> = Mutex::new((0..100).collect());
        let rows: Mutex<Vec<BenchRow>> = Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..worker_count() {
                scope.spawn(|| loop {
                    let next = queue.lock().unwrap().pop_front();
                    let Some(seed) = next else { break };
                    let inst = generate_instance(5, 4, 1.0, 70_000 + seed);
                    let started = Instant::now();
                    let r = solve_instance(&inst, SolverKind::Bcg, &config).unwrap();
                    check_solution(&inst, &r.solution).expect("bench solution verifies");
                    let ub = r.solution.objective;
                    let lb = r.lower_bound;
                    rows.lock().unwrap().push(BenchRow {
                        name: inst.name.clone(),
                        n_detections: inst.n_detections(),
                        n_parts: inst.n_parts(),
                        solver: SolverKind::Bcg.name().to_string(),
                        ub,
                        lb,
                        normalized_gap: normalized_gap(ub, lb, config.lp_tolerance),
                        time_s: started.elapsed().as_secs_f64(),
                        iters: r.stats.iterations,
                        n_cols: r.stats.n_columns,
                        n_rows: r.stats.n_rows,
                    });
                });
            }
        });
        let mut rows = rows.into_inner().unwrap();
        rows.sort_by(|a, b| a.name.cmp(&b.name));
        assert_eq!(rows.len(), 100);

        let csv = dir.path().join("bench.csv");
        write_bench_csv(&csv, &rows).unwrap();
        assert!(dir.path().join("bench_gap_hist.csv").exists());
        assert!(dir.path().join("bench_time_hist.csv").exists());

        let mut tight = 0usize;
        for r in &rows {
            match r.normalized_gap {
                Some(g) => {
                    assert!(g >= -1e-9, "gap {g} below zero on {}", r.name);
                    if g.abs() <= 1e-9 {
                        tight += 1;
                    }
                }
                None => {
                    assert!(r.ub.abs() <= 1e-9, "undefined gap only at a zero optimum");
                    tight += 1;
                }
            }
        }
        assert!(tight >= 70, "only {tight} of 100 instances closed the gap");
    });
}

#[test]
fn criterion_8_every_emitted_solution_verifies() {
    criterion(8, "constraint checker on all emitted solutions", || {
        // Criteria 1 and 7 already run the checker on their own emissions;
        // this sweep covers every emitting pipeline on a fresh mix.
        let config = SolverConfig::default();
        let shapes = [(2, 2), (3, 2), (3, 3), (4, 2), (5, 3)];
        let mut checked = 0usize;
        for trial in 0..40u64 {
            let (parts, dpp) = shapes[trial as usize % shapes.len()];
            let inst = generate_instance(parts, dpp, 1.0, 8000 + trial);
            for kind in [SolverKind::Bcg, SolverKind::Pcg] {
                let r = solve_instance(&inst, kind, &config).unwrap();
                check_solution(&inst, &r.solution).expect("solver output verifies");
                assert!(r.solution.is_feasible);
                checked += 1;
            }
            if inst.n_detections() <= 12 {
                let exact = solve_exact(&inst, &config).unwrap();
                check_solution(&inst, &exact).expect("oracle output verifies");
                checked += 1;
            }
        }
        assert!(checked >= 100, "swept {checked} solutions");
    });
}

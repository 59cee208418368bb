//! Decomposition solver. A restricted master LP selects skeletons and one
//! value variable per part; each part's value is constrained from above by
//! rows, each row a dual-feasible point of that part's local-assignment
//! subproblem. Rows and columns are generated until neither side can
//! improve the LP.

use std::time::Instant;

use crate::columns::{ColumnPool, LocalAssignment, Skeleton};
use crate::lp_core::{solve_primal_dual, LinearProgram, LpStatus, Sense};
use crate::model::{DetId, Instance, PartId, SolverConfig};
use crate::pricing::{price_all_skeletons, price_local, price_skeleton, PotentialVector};
use crate::Error;

const MAX_OUTER_ITERS: usize = 10_000;
const MAX_INNER_ITERS: usize = 10_000;

/// One dual-feasible point of a part's subproblem, stored as a master
/// constraint `ell_r + sum_d coeff_d * (G gamma)_d <= -const_term`.
#[derive(Clone, Debug)]
pub struct BendersRow {
    pub part: PartId,
    /// Detections of `part`, the index base for the lambda and coeff slots.
    pub dets: Vec<DetId>,
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
    pub lam3: Vec<f64>,
    /// `-(sum lam1 + sum lam2)`.
    pub const_term: f64,
    /// `lam1_d - lam3_d` per detection of the part.
    pub coeff: Vec<f64>,
}

impl BendersRow {
    pub fn new(
        part: PartId,
        dets: Vec<DetId>,
        lam1: Vec<f64>,
        lam2: Vec<f64>,
        lam3: Vec<f64>,
    ) -> BendersRow {
        assert_eq!(dets.len(), lam1.len());
        assert_eq!(dets.len(), lam2.len());
        assert_eq!(dets.len(), lam3.len());
        let const_term = -(lam1.iter().sum::<f64>() + lam2.iter().sum::<f64>());
        let coeff: Vec<f64> = lam1.iter().zip(&lam3).map(|(a, c)| a - c).collect();
        BendersRow { part, dets, lam1, lam2, lam3, const_term, coeff }
    }

    pub fn zero(inst: &Instance, part: PartId) -> BendersRow {
        let dets = inst.dets_of_part(part).to_vec();
        let n = dets.len();
        BendersRow::new(part, dets, vec![0.0; n], vec![0.0; n], vec![0.0; n])
    }

    /// Upper bound this row places on `ell` at the given per-detection
    /// skeleton marginals.
    pub fn ell_bound(&self, marginals: &[f64]) -> f64 {
        -self.const_term
            - self
                .coeff
                .iter()
                .zip(&self.dets)
                .map(|(c, d)| c * marginals[d.0])
                .sum::<f64>()
    }
}

/// Row pool with near-duplicate suppression: a row whose constraint matches
/// an existing one coefficient-wise cannot change the LP.
#[derive(Clone, Debug, Default)]
pub struct BendersRows {
    pub rows: Vec<BendersRow>,
}

impl BendersRows {
    pub fn new() -> BendersRows {
        BendersRows { rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn add(&mut self, row: BendersRow, tol: f64) -> bool {
        let dup = self.rows.iter().any(|r| {
            r.part == row.part
                && (r.const_term - row.const_term).abs() <= tol
                && r.coeff
                    .iter()
                    .zip(&row.coeff)
                    .all(|(a, b)| (a - b).abs() <= tol)
        });
        if dup {
            return false;
        }
        self.rows.push(row);
        true
    }
}

#[derive(Clone, Debug)]
pub struct MasterSolution {
    /// Per pooled skeleton, in pool order.
    pub gamma: Vec<f64>,
    /// Per part.
    pub ell: Vec<f64>,
    /// Dual of each detection's packing row.
    pub mu0: Vec<f64>,
    /// Dual of each pooled row, aligned with `BendersRows::rows`.
    pub mu_rows: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundsRecord {
    pub iter: usize,
    pub objective: f64,
    pub lower_bound: f64,
    pub wall_time: f64,
}

#[derive(Debug)]
pub struct BcgOutcome {
    pub pool: ColumnPool,
    pub rows: BendersRows,
    pub master: MasterSolution,
    pub trace: Vec<BoundsRecord>,
    pub iterations: usize,
    pub timed_out: bool,
}

/// Master program over pooled columns: variables are gamma then one ell
/// per part, rows are per-detection packing then the pooled value rows.
pub(crate) fn master_lp(inst: &Instance, pool: &ColumnPool, rows: &BendersRows) -> LinearProgram {
    let n_skel = pool.n_skeletons();
    let n_det = inst.n_detections();
    let n_parts = inst.n_parts();

    let mut objective = Vec::with_capacity(n_skel + n_parts);
    for s in &pool.skeletons {
        objective.push(s.cost);
    }
    objective.extend(std::iter::repeat(-1.0).take(n_parts));
    let mut lp = LinearProgram::new(objective);

    for d in 0..n_det {
        let mut coeffs = vec![0.0; n_skel + n_parts];
        for (gi, s) in pool.skeletons.iter().enumerate() {
            if s.contains(DetId(d)) {
                coeffs[gi] = 1.0;
            }
        }
        lp.add_row(coeffs, Sense::Le, 1.0);
    }
    for row in &rows.rows {
        let mut coeffs = vec![0.0; n_skel + n_parts];
        for (gi, s) in pool.skeletons.iter().enumerate() {
            let w: f64 = s
                .members
                .iter()
                .filter_map(|d| {
                    row.dets.binary_search(d).ok().map(|k| row.coeff[k])
                })
                .sum();
            coeffs[gi] = w;
        }
        coeffs[n_skel + row.part.0] = 1.0;
        lp.add_row(coeffs, Sense::Le, -row.const_term);
    }
    lp
}

/// Restricted master: `min cost(gamma) - sum ell` subject to per-detection
/// packing rows and the pooled value rows, all variables nonnegative.
pub fn solve_master_restricted(
    inst: &Instance,
    pool: &ColumnPool,
    rows: &BendersRows,
    config: &SolverConfig,
) -> Result<MasterSolution, Error> {
    let n_skel = pool.n_skeletons();
    let n_det = inst.n_detections();
    let lp = master_lp(inst, pool, rows);
    let sol = solve_primal_dual(&lp, config)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => {
            return Err(Error::Solver(
                "restricted master is unbounded: a part is missing its initial row".into(),
            ))
        }
        LpStatus::Infeasible => {
            return Err(Error::Solver("restricted master is infeasible".into()))
        }
    }
    Ok(MasterSolution {
        gamma: sol.x[..n_skel].to_vec(),
        ell: sol.x[n_skel..].to_vec(),
        mu0: sol.y[..n_det].to_vec(),
        mu_rows: sol.y[n_det..].to_vec(),
        objective: sol.objective,
    })
}

/// Dual subproblem for one part at fixed skeleton marginals, solved by
/// column generation over pooled local assignments. The objective carries a
/// small negative bias on the lambda1/lambda3 slots so the maximizer stays
/// unique and bounded even where a marginal sits exactly at 0 or 1; the
/// returned objective is the unbiased value, never above zero at
/// convergence. Newly priced local assignments are added to the pool.
pub fn solve_subproblem_dual(
    inst: &Instance,
    part: PartId,
    gamma_marginals: &[f64],
    pool: &mut ColumnPool,
    config: &SolverConfig,
) -> Result<(BendersRow, f64), Error> {
    let n = inst.n_detections();
    if gamma_marginals.len() != n {
        return Err(Error::Config("marginals must cover all detections".into()));
    }
    let dets = inst.dets_of_part(part).to_vec();
    let nr = dets.len();
    let eps = config.bias_for(inst);
    let tol = config.lp_tolerance;
    debug_assert!(dets
        .iter()
        .all(|d| (-tol..=1.0 + tol).contains(&gamma_marginals[d.0])));

    // Variables: lam1 | lam2 | lam3, each indexed like `dets`. Minimizing
    // the negated biased objective keeps lp_core's `min` convention.
    let mut objective = Vec::with_capacity(3 * nr);
    for &d in &dets {
        objective.push(1.0 - gamma_marginals[d.0] + eps);
    }
    objective.extend(std::iter::repeat(1.0).take(nr));
    for &d in &dets {
        objective.push(gamma_marginals[d.0] + eps);
    }

    let slot = |d: DetId| dets.binary_search(&d).expect("detection of this part");
    let mut lam1 = vec![0.0; n];
    let mut lam2 = vec![0.0; n];
    let mut lam3 = vec![0.0; n];
    let mut iters = 0usize;
    loop {
        let locals: Vec<LocalAssignment> = pool.locals_of_part(part).to_vec();
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
        let sol = solve_primal_dual(&lp, config)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver(format!(
                "subproblem dual for part {part} is {:?}",
                sol.status
            )));
        }
        for (k, &d) in dets.iter().enumerate() {
            lam1[d.0] = sol.x[k];
            lam2[d.0] = sol.x[nr + k];
            lam3[d.0] = sol.x[2 * nr + k];
        }

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
            )?;
            if !set.is_empty() && value < -tol {
                let la = LocalAssignment::new(inst, part, g, set)?;
                if pool.add_local(la) {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
        iters += 1;
        if iters > MAX_INNER_ITERS {
            return Err(Error::Numerical(format!(
                "subproblem column generation for part {part} did not converge"
            )));
        }
    }

    let objective_unbiased: f64 = dets
        .iter()
        .map(|&d| {
            lam1[d.0] * (gamma_marginals[d.0] - 1.0)
                - lam2[d.0]
                - lam3[d.0] * gamma_marginals[d.0]
        })
        .sum();
    let row = BendersRow::new(
        part,
        dets.clone(),
        dets.iter().map(|d| lam1[d.0]).collect(),
        dets.iter().map(|d| lam2[d.0]).collect(),
        dets.iter().map(|d| lam3[d.0]).collect(),
    );
    Ok((row, objective_unbiased))
}

/// One row per part, generated at all-zero skeleton marginals. Locals
/// priced along the way are kept in the pool.
pub fn init_rows(
    inst: &Instance,
    pool: &mut ColumnPool,
    config: &SolverConfig,
) -> Result<BendersRows, Error> {
    let zeros = vec![0.0; inst.n_detections()];
    let mut rows = BendersRows::new();
    for p in 0..inst.n_parts() {
        let (row, _) = solve_subproblem_dual(inst, PartId(p), &zeros, pool, config)?;
        rows.add(row, config.lp_tolerance);
    }
    Ok(rows)
}

/// Valid lower bound on one part's subproblem value at the given marginals,
/// from any nonnegative lambda: the dual objective plus, per global
/// detection, the clamped best residual over that global's local sets.
pub fn sub_lower_bound(
    inst: &Instance,
    part: PartId,
    gamma_marginals: &[f64],
    lam1: &[f64],
    lam2: &[f64],
    lam3: &[f64],
    config: &SolverConfig,
) -> Result<f64, Error> {
    let mut bound = 0.0;
    for &d in inst.dets_of_part(part) {
        bound += lam1[d.0] * (gamma_marginals[d.0] - 1.0)
            - lam2[d.0]
            - lam3[d.0] * gamma_marginals[d.0];
    }
    for &g in inst.dets_of_part(part) {
        let (_, value) = price_local(
            inst,
            part,
            lam1,
            lam2,
            lam3,
            g,
            config.pricing_mode,
            config.max_locals_per_assignment,
        )?;
        bound += value.min(0.0);
    }
    Ok(bound)
}

/// Folds the master duals into one per-detection potential:
/// `mu0_d + sum over rows of the part of mu_row * (lam1_d - lam3_d)`.
pub fn master_potentials(
    inst: &Instance,
    rows: &BendersRows,
    mu0: &[f64],
    mu_rows: &[f64],
) -> PotentialVector {
    let mut delta = mu0.to_vec();
    delta.resize(inst.n_detections(), 0.0);
    for (i, row) in rows.rows.iter().enumerate() {
        for (k, &d) in row.dets.iter().enumerate() {
            delta[d.0] += mu_rows[i] * row.coeff[k];
        }
    }
    PotentialVector::new(delta)
}

/// Valid lower bound on the full LP optimum from any master duals with
/// `mu >= 0` and row weights summing to at least one per part. Skeleton
/// terms are grouped by their star-root detection and clamped at zero,
/// since selecting nothing is always allowed.
pub fn master_lower_bound(
    inst: &Instance,
    rows: &BendersRows,
    mu0: &[f64],
    mu_rows: &[f64],
    config: &SolverConfig,
) -> Result<f64, Error> {
    let chk = (1e3 * config.lp_tolerance).max(1e-9);
    if mu0.len() != inst.n_detections() || mu_rows.len() != rows.len() {
        return Err(Error::Config("dual vectors do not match rows/detections".into()));
    }
    if mu0.iter().chain(mu_rows).any(|&v| v < -chk) {
        return Err(Error::Config("negative dual weight".into()));
    }
    for p in 0..inst.n_parts() {
        let sum: f64 = rows
            .rows
            .iter()
            .zip(mu_rows)
            .filter(|(r, _)| r.part.0 == p)
            .map(|(_, &m)| m)
            .sum();
        if sum < 1.0 - chk {
            return Err(Error::Config(format!(
                "row weights for part {p} sum to {sum}, need at least 1"
            )));
        }
    }

    let mut bound = -mu0.iter().sum::<f64>();
    for (row, &m) in rows.rows.iter().zip(mu_rows) {
        bound += m * row.const_term;
    }
    let delta = master_potentials(inst, rows, mu0, mu_rows);
    for &d in inst.dets_of_part(inst.graph.star_root) {
        let (_, rc) = price_skeleton(inst, &delta, d)?;
        bound += rc.min(0.0);
    }
    Ok(bound)
}

/// Full driver: initial rows at zero marginals, then alternate master
/// solves with skeleton pricing and per-part subproblems. Stops when no new
/// column entered the pools and every fresh row is already implied by the
/// master within tolerance; the literal no-new-columns test alone can stop
/// while a fresh row still cuts the master point, which would leave the LP
/// unsolved.
pub fn run_bcg(inst: &Instance, config: &SolverConfig) -> Result<BcgOutcome, Error> {
    inst.ensure_valid()?;
    config.check()?;
    let start = Instant::now();
    let mut pool = ColumnPool::new(inst.n_parts());
    let mut rows = init_rows(inst, &mut pool, config)?;
    let mut trace: Vec<BoundsRecord> = Vec::new();
    let mut timed_out = false;
    let mut iter = 0usize;

    let master = loop {
        iter += 1;
        let master = solve_master_restricted(inst, &pool, &rows, config)?;
        let lower = master_lower_bound(inst, &rows, &master.mu0, &master.mu_rows, config)?;
        trace.push(BoundsRecord {
            iter,
            objective: master.objective,
            lower_bound: lower,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if start.elapsed().as_secs_f64() > config.time_cap_seconds {
            timed_out = true;
            break master;
        }

        let mut did_change = false;
        // Marginals refer to the pool the master was solved over, so take
        // them before pricing appends columns.
        let marginals = pool.skeleton_marginals(inst, &master.gamma);
        let delta = master_potentials(inst, &rows, &master.mu0, &master.mu_rows);
        for (members, _) in price_all_skeletons(inst, &delta, config.lp_tolerance)? {
            if pool.add_skeleton(Skeleton::new(inst, members)?) {
                did_change = true;
            }
        }
        let mut worst_violation = f64::NEG_INFINITY;
        for p in 0..inst.n_parts() {
            let before = pool.n_locals();
            let (row, _) = solve_subproblem_dual(inst, PartId(p), &marginals, &mut pool, config)?;
            if pool.n_locals() > before {
                did_change = true;
            }
            worst_violation = worst_violation.max(master.ell[p] - row.ell_bound(&marginals));
            rows.add(row, config.lp_tolerance);
        }

        if !did_change && worst_violation <= config.lp_tolerance {
            break master;
        }
        if iter >= MAX_OUTER_ITERS {
            return Err(Error::Numerical(
                "outer loop exceeded the iteration cap without converging".into(),
            ));
        }
    };

    Ok(BcgOutcome { pool, rows, master, trace, iterations: iter, timed_out })
}

//! Integral finishing. A small branch-and-bound turns the fractional LP
//! into a binary selection: first skeletons against the pooled value rows,
//! then each part's local assignments with the skeletons fixed. A joint
//! one-shot variant over both pools backs the exactness tests.

use crate::bcg::{master_lp, BendersRows};
use crate::columns::{ColumnPool, LocalAssignment, Skeleton};
use crate::lp_core::{solve_primal_dual, LinearProgram, LpStatus, Sense};
use crate::model::{DetId, Instance, PartId, SolverConfig};
use crate::pcg::joint_lp;
use crate::Error;

const MAX_NODES: usize = 200_000;
const INT_TOL: f64 = 1e-6;

/// One skeleton with the local assignments grouped onto it.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub skeleton: Vec<DetId>,
    /// `(global detection, its local detections)`, ascending by global.
    pub locals: Vec<(DetId, Vec<DetId>)>,
}

#[derive(Clone, Debug)]
pub struct IntegralSolution {
    pub chosen_skeletons: Vec<Skeleton>,
    /// Indexed by part.
    pub chosen_locals: Vec<Vec<LocalAssignment>>,
    pub objective: f64,
    pub is_feasible: bool,
}

impl IntegralSolution {
    pub fn new(
        inst: &Instance,
        chosen_skeletons: Vec<Skeleton>,
        chosen_locals: Vec<Vec<LocalAssignment>>,
        objective: f64,
    ) -> IntegralSolution {
        let mut sol = IntegralSolution {
            chosen_skeletons,
            chosen_locals,
            objective,
            is_feasible: false,
        };
        sol.is_feasible = check_solution(inst, &sol).is_ok();
        sol
    }

    pub fn empty(n_parts: usize) -> IntegralSolution {
        IntegralSolution {
            chosen_skeletons: Vec::new(),
            chosen_locals: vec![Vec::new(); n_parts],
            objective: 0.0,
            is_feasible: true,
        }
    }

    /// Groups each chosen local assignment onto the skeleton containing its
    /// global detection. Only meaningful for feasible solutions, where that
    /// skeleton exists and is unique.
    pub fn poses(&self) -> Vec<Pose> {
        let mut poses: Vec<Pose> = self
            .chosen_skeletons
            .iter()
            .map(|s| Pose { skeleton: s.members.clone(), locals: Vec::new() })
            .collect();
        for la in self.chosen_locals.iter().flatten() {
            if let Some(p) = poses.iter_mut().find(|p| p.skeleton.contains(&la.global_det)) {
                p.locals.push((la.global_det, la.local_dets.clone()));
            }
        }
        for p in &mut poses {
            p.locals.sort_by_key(|(g, _)| *g);
        }
        poses
    }
}

/// Exact (integer-count) check of the three packing families: a detection
/// is used by at most one skeleton or local slot, at most one local or
/// global slot, and can only be a global if a chosen skeleton contains it.
pub fn check_solution(inst: &Instance, sol: &IntegralSolution) -> Result<(), String> {
    let n = inst.n_detections();
    let mut g = vec![0usize; n];
    let mut l = vec![0usize; n];
    let mut m = vec![0usize; n];
    for s in &sol.chosen_skeletons {
        for &d in &s.members {
            if d.0 >= n {
                return Err(format!("skeleton references unknown detection {d}"));
            }
            g[d.0] += 1;
        }
    }
    if sol.chosen_locals.len() != inst.n_parts() {
        return Err("local assignments must be indexed by part".into());
    }
    for (p, assignments) in sol.chosen_locals.iter().enumerate() {
        for la in assignments {
            if la.part.0 != p {
                return Err(format!("local assignment of part {} filed under part {p}", la.part));
            }
            m[la.global_det.0] += 1;
            for &d in &la.local_dets {
                l[d.0] += 1;
            }
        }
    }
    for d in 0..n {
        if g[d] + l[d] > 1 {
            return Err(format!(
                "detection {d} used by {} skeletons and {} local slots",
                g[d], l[d]
            ));
        }
        if l[d] + m[d] > 1 {
            return Err(format!(
                "detection {d} used by {} local and {} global slots",
                l[d], m[d]
            ));
        }
        if m[d] > g[d] {
            return Err(format!(
                "detection {d} is a global in {} assignments but appears in {} skeletons",
                m[d], g[d]
            ));
        }
    }
    Ok(())
}

#[derive(Debug)]
pub struct MilpResult {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Depth-first branch and bound restricting the listed variables to {0,1}.
/// Requires the all-zero point to be feasible with objective 0, which seeds
/// the incumbent. Branches on the most fractional variable (lowest index on
/// ties), 1-branch first; nodes are pruned once their relaxation cannot
/// improve the incumbent by more than the LP tolerance.
pub fn solve_binary_milp(
    base: &LinearProgram,
    binaries: &[usize],
    config: &SolverConfig,
) -> Result<MilpResult, Error> {
    let n_vars = base.objective.len();
    let mut best = MilpResult { x: vec![0.0; n_vars], objective: 0.0 };
    let mut stack: Vec<Vec<(usize, bool)>> = vec![Vec::new()];
    let mut nodes = 0usize;

    while let Some(fixed) = stack.pop() {
        nodes += 1;
        if nodes > MAX_NODES {
            return Err(Error::Numerical("branch and bound exceeded the node cap".into()));
        }
        let mut lp = base.clone();
        for &(v, one) in &fixed {
            let mut coeffs = vec![0.0; n_vars];
            coeffs[v] = 1.0;
            if one {
                lp.add_row(coeffs, Sense::Ge, 1.0);
            } else {
                lp.add_row(coeffs, Sense::Le, 0.0);
            }
        }
        let sol = solve_primal_dual(&lp, config)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(Error::Solver("unbounded relaxation during rounding".into()))
            }
            LpStatus::Optimal => {}
        }
        if sol.objective >= best.objective - config.lp_tolerance {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        for &v in binaries {
            let frac = (sol.x[v] - sol.x[v].round()).abs();
            if frac > INT_TOL && branch.map_or(true, |(_, f)| frac > f) {
                branch = Some((v, frac));
            }
        }
        match branch {
            None => {
                best = MilpResult { x: sol.x, objective: sol.objective };
            }
            Some((v, _)) => {
                let mut zero = fixed.clone();
                zero.push((v, false));
                let mut one = fixed;
                one.push((v, true));
                stack.push(zero);
                stack.push(one);
            }
        }
    }
    Ok(best)
}

#[derive(Debug)]
pub struct MasterIlpSolution {
    /// Per pooled skeleton.
    pub selected: Vec<bool>,
    pub ell: Vec<f64>,
    /// `cost(selected) - sum ell`, with ell still bounded by the pooled
    /// rows, so this can undercut the true integral value.
    pub objective: f64,
}

pub fn solve_master_ilp(
    inst: &Instance,
    pool: &ColumnPool,
    rows: &BendersRows,
    config: &SolverConfig,
) -> Result<MasterIlpSolution, Error> {
    let n_skel = pool.n_skeletons();
    let lp = master_lp(inst, pool, rows);
    let binaries: Vec<usize> = (0..n_skel).collect();
    let r = solve_binary_milp(&lp, &binaries, config)?;
    Ok(MasterIlpSolution {
        selected: r.x[..n_skel].iter().map(|&v| v > 0.5).collect(),
        ell: r.x[n_skel..].to_vec(),
        objective: r.objective,
    })
}

/// Best binary local selection for one part with the skeleton choice
/// fixed: locals must avoid skeleton-used detections, stay disjoint, and
/// attach only to globals some chosen skeleton contains.
pub fn solve_sub_ilp(
    inst: &Instance,
    part: PartId,
    chosen_skeletons: &[Skeleton],
    pool: &ColumnPool,
    config: &SolverConfig,
) -> Result<Vec<bool>, Error> {
    let locals = pool.locals_of_part(part);
    if locals.is_empty() {
        return Ok(Vec::new());
    }
    let used = |d: DetId| chosen_skeletons.iter().any(|s| s.contains(d)) as usize as f64;
    let mut lp = LinearProgram::new(locals.iter().map(|l| l.cost).collect());
    for &d in inst.dets_of_part(part) {
        let as_local: Vec<f64> = locals
            .iter()
            .map(|l| l.local_dets.contains(&d) as usize as f64)
            .collect();
        let as_global: Vec<f64> = locals
            .iter()
            .map(|l| (l.global_det == d) as usize as f64)
            .collect();
        lp.add_row(as_local.clone(), Sense::Le, 1.0 - used(d));
        lp.add_row(
            as_local.iter().zip(&as_global).map(|(a, b)| a + b).collect(),
            Sense::Le,
            1.0,
        );
        lp.add_row(as_global, Sense::Le, used(d));
    }
    let binaries: Vec<usize> = (0..locals.len()).collect();
    let r = solve_binary_milp(&lp, &binaries, config)?;
    Ok(r.x.iter().map(|&v| v > 0.5).collect())
}

/// Assembles the binary selections into a checked solution with the
/// re-evaluated objective. A constraint violation here is a solver bug and
/// is surfaced as an error.
pub fn extract_poses(
    inst: &Instance,
    pool: &ColumnPool,
    selected_skeletons: &[bool],
    selected_locals: &[Vec<bool>],
) -> Result<IntegralSolution, Error> {
    let chosen_skeletons: Vec<Skeleton> = pool
        .skeletons
        .iter()
        .zip(selected_skeletons)
        .filter(|(_, &keep)| keep)
        .map(|(s, _)| s.clone())
        .collect();
    let mut chosen_locals: Vec<Vec<LocalAssignment>> = Vec::with_capacity(inst.n_parts());
    for p in 0..inst.n_parts() {
        let flags = selected_locals.get(p).map(|v| v.as_slice()).unwrap_or(&[]);
        chosen_locals.push(
            pool.locals_of_part(PartId(p))
                .iter()
                .zip(flags)
                .filter(|(_, &keep)| keep)
                .map(|(l, _)| l.clone())
                .collect(),
        );
    }
    let objective = chosen_skeletons.iter().map(|s| s.cost).sum::<f64>()
        + chosen_locals.iter().flatten().map(|l| l.cost).sum::<f64>();
    let sol = IntegralSolution::new(inst, chosen_skeletons, chosen_locals, objective);
    if let Err(msg) = check_solution(inst, &sol) {
        return Err(Error::Solver(format!("rounding produced an invalid solution: {msg}")));
    }
    Ok(sol)
}

#[derive(Debug)]
pub struct RoundedSolution {
    pub solution: IntegralSolution,
    /// Master ILP objective, where each part's value is still the pooled
    /// row bound rather than the re-solved local selection.
    pub row_based_objective: f64,
}

/// Two-stage rounding: master ILP picks skeletons, then each part's local
/// assignments are re-solved exactly with those skeletons fixed.
pub fn round_two_stage(
    inst: &Instance,
    pool: &ColumnPool,
    rows: &BendersRows,
    config: &SolverConfig,
) -> Result<RoundedSolution, Error> {
    let master = solve_master_ilp(inst, pool, rows, config)?;
    let chosen: Vec<Skeleton> = pool
        .skeletons
        .iter()
        .zip(&master.selected)
        .filter(|(_, &keep)| keep)
        .map(|(s, _)| s.clone())
        .collect();
    let mut selected_locals = Vec::with_capacity(inst.n_parts());
    for p in 0..inst.n_parts() {
        selected_locals.push(solve_sub_ilp(inst, PartId(p), &chosen, pool, config)?);
    }
    let solution = extract_poses(inst, pool, &master.selected, &selected_locals)?;
    Ok(RoundedSolution { solution, row_based_objective: master.objective })
}

/// One-shot ILP over both pools with the three packing families; exact
/// whenever the pools contain every column.
pub fn round_joint(
    inst: &Instance,
    pool: &ColumnPool,
    config: &SolverConfig,
) -> Result<IntegralSolution, Error> {
    let n_skel = pool.n_skeletons();
    let (lp, offsets) = joint_lp(inst, pool);
    let binaries: Vec<usize> = (0..lp.objective.len()).collect();
    let r = solve_binary_milp(&lp, &binaries, config)?;
    let selected_skeletons: Vec<bool> = r.x[..n_skel].iter().map(|&v| v > 0.5).collect();
    let selected_locals: Vec<Vec<bool>> = (0..inst.n_parts())
        .map(|p| {
            r.x[n_skel + offsets[p]..n_skel + offsets[p + 1]]
                .iter()
                .map(|&v| v > 0.5)
                .collect()
        })
        .collect();
    extract_poses(inst, pool, &selected_skeletons, &selected_locals)
}

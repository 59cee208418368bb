//! Baseline solver: one LP over pooled skeletons and local assignments
//! with all three packing families, grown by the same pricers as the
//! decomposition solver. Slower, but solves the identical relaxation, so
//! any objective disagreement isolates a bug.

use std::time::Instant;

use crate::bcg::BoundsRecord;
use crate::columns::{ColumnPool, LocalAssignment, Skeleton};
use crate::lp_core::{solve_primal_dual, LinearProgram, LpStatus, Sense};
use crate::model::{Instance, PartId, SolverConfig};
use crate::pricing::{price_all_skeletons, price_local, price_skeleton, PotentialVector};
use crate::Error;

const MAX_OUTER_ITERS: usize = 10_000;

/// Optimal restricted primal/dual pair. `psi` follows the pool's per-part
/// local order; the lambda vectors are the duals of the three constraint
/// families, indexed by detection.
#[derive(Clone, Debug)]
pub struct PcgRestricted {
    pub gamma: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub lam1: Vec<f64>,
    pub lam2: Vec<f64>,
    pub lam3: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug)]
pub struct PcgOutcome {
    pub pool: ColumnPool,
    pub restricted: PcgRestricted,
    pub objective: f64,
    pub trace: Vec<BoundsRecord>,
    pub iterations: usize,
    pub timed_out: bool,
}

/// LP over the pooled columns: variables are gamma then psi (parts in
/// order), rows are the three families per detection, in family order.
/// Returns the program and the psi offset of each part.
pub(crate) fn joint_lp(inst: &Instance, pool: &ColumnPool) -> (LinearProgram, Vec<usize>) {
    let n = inst.n_detections();
    let n_skel = pool.n_skeletons();
    let mut offsets = Vec::with_capacity(inst.n_parts() + 1);
    let mut total = 0usize;
    for p in 0..inst.n_parts() {
        offsets.push(total);
        total += pool.locals_of_part(PartId(p)).len();
    }
    offsets.push(total);

    let mut objective = Vec::with_capacity(n_skel + total);
    for s in &pool.skeletons {
        objective.push(s.cost);
    }
    for p in 0..inst.n_parts() {
        for l in pool.locals_of_part(PartId(p)) {
            objective.push(l.cost);
        }
    }
    let mut lp = LinearProgram::new(objective);

    let psi_cols = |d: usize, as_local: bool| -> Vec<usize> {
        let p = inst.part_of(crate::model::DetId(d));
        pool.locals_of_part(p)
            .iter()
            .enumerate()
            .filter(|(_, l)| {
                if as_local {
                    l.local_dets.contains(&crate::model::DetId(d))
                } else {
                    l.global_det == crate::model::DetId(d)
                }
            })
            .map(|(j, _)| n_skel + offsets[p.0] + j)
            .collect()
    };

    for d in 0..n {
        let mut coeffs = vec![0.0; n_skel + total];
        for (gi, s) in pool.skeletons.iter().enumerate() {
            if s.contains(crate::model::DetId(d)) {
                coeffs[gi] = 1.0;
            }
        }
        for c in psi_cols(d, true) {
            coeffs[c] += 1.0;
        }
        lp.add_row(coeffs, Sense::Le, 1.0);
    }
    for d in 0..n {
        let mut coeffs = vec![0.0; n_skel + total];
        for c in psi_cols(d, true) {
            coeffs[c] += 1.0;
        }
        for c in psi_cols(d, false) {
            coeffs[c] += 1.0;
        }
        lp.add_row(coeffs, Sense::Le, 1.0);
    }
    for d in 0..n {
        let mut coeffs = vec![0.0; n_skel + total];
        for (gi, s) in pool.skeletons.iter().enumerate() {
            if s.contains(crate::model::DetId(d)) {
                coeffs[gi] = -1.0;
            }
        }
        for c in psi_cols(d, false) {
            coeffs[c] += 1.0;
        }
        lp.add_row(coeffs, Sense::Le, 0.0);
    }
    (lp, offsets)
}

pub fn solve_restricted_pcg(
    inst: &Instance,
    pool: &ColumnPool,
    config: &SolverConfig,
) -> Result<PcgRestricted, Error> {
    let n = inst.n_detections();
    let n_skel = pool.n_skeletons();
    let (lp, offsets) = joint_lp(inst, pool);
    let sol = solve_primal_dual(&lp, config)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("restricted LP is {:?}", sol.status)));
    }
    let psi = (0..inst.n_parts())
        .map(|p| sol.x[n_skel + offsets[p]..n_skel + offsets[p + 1]].to_vec())
        .collect();
    Ok(PcgRestricted {
        gamma: sol.x[..n_skel].to_vec(),
        psi,
        lam1: sol.y[..n].to_vec(),
        lam2: sol.y[n..2 * n].to_vec(),
        lam3: sol.y[2 * n..3 * n].to_vec(),
        objective: sol.objective,
    })
}

/// Valid lower bound on the full LP optimum from restricted duals: the
/// restricted objective plus every clamped pricing minimum, one per
/// star-root detection for skeletons and one per global detection for
/// local assignments. Each group's primal mass is capped at one by the
/// packing rows, so the discounts cannot overshoot.
fn anytime_lower_bound(
    inst: &Instance,
    r: &PcgRestricted,
    config: &SolverConfig,
) -> Result<f64, Error> {
    let delta = PotentialVector::new(
        r.lam1.iter().zip(&r.lam3).map(|(a, c)| a - c).collect(),
    );
    let mut bound = r.objective;
    for &d in inst.dets_of_part(inst.graph.star_root) {
        let (_, rc) = price_skeleton(inst, &delta, d)?;
        bound += rc.min(0.0);
    }
    for p in 0..inst.n_parts() {
        for &g in inst.dets_of_part(PartId(p)) {
            let (_, value) = price_local(
                inst,
                PartId(p),
                &r.lam1,
                &r.lam2,
                &r.lam3,
                g,
                config.pricing_mode,
                config.max_locals_per_assignment,
            )?;
            bound += value.min(0.0);
        }
    }
    Ok(bound)
}

pub fn run_pcg(inst: &Instance, config: &SolverConfig) -> Result<PcgOutcome, Error> {
    inst.ensure_valid()?;
    config.check()?;
    let start = Instant::now();
    let tol = config.lp_tolerance;
    let mut pool = ColumnPool::new(inst.n_parts());
    let mut trace: Vec<BoundsRecord> = Vec::new();
    let mut timed_out = false;
    let mut iter = 0usize;

    let restricted = loop {
        iter += 1;
        let r = solve_restricted_pcg(inst, &pool, config)?;
        let lower = anytime_lower_bound(inst, &r, config)?;
        trace.push(BoundsRecord {
            iter,
            objective: r.objective,
            lower_bound: lower,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if start.elapsed().as_secs_f64() > config.time_cap_seconds {
            timed_out = true;
            break r;
        }

        let mut did_change = false;
        let delta = PotentialVector::new(
            r.lam1.iter().zip(&r.lam3).map(|(a, c)| a - c).collect(),
        );
        for (members, _) in price_all_skeletons(inst, &delta, tol)? {
            if pool.add_skeleton(Skeleton::new(inst, members)?) {
                did_change = true;
            }
        }
        for p in 0..inst.n_parts() {
            let part = PartId(p);
            for &g in inst.dets_of_part(part) {
                let (set, value) = price_local(
                    inst,
                    part,
                    &r.lam1,
                    &r.lam2,
                    &r.lam3,
                    g,
                    config.pricing_mode,
                    config.max_locals_per_assignment,
                )?;
                if !set.is_empty() && value < -tol {
                    let la = LocalAssignment::new(inst, part, g, set)?;
                    if pool.add_local(la) {
                        did_change = true;
                    }
                }
            }
        }
        if !did_change {
            break r;
        }
        if iter >= MAX_OUTER_ITERS {
            return Err(Error::Numerical(
                "column generation exceeded the iteration cap without converging".into(),
            ));
        }
    };

    Ok(PcgOutcome {
        pool,
        objective: restricted.objective,
        restricted,
        trace,
        iterations: iter,
        timed_out,
    })
}

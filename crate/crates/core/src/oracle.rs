//! Exhaustive reference solver: enumerates every column and searches all
//! feasible selections. Only for tiny instances; the search shares nothing
//! with the LP-based solvers beyond the cost definitions.

use std::collections::HashMap;

use crate::columns::{LocalAssignment, Skeleton};
use crate::model::{DetId, Instance, PartId, SolverConfig};
use crate::rounding::IntegralSolution;
use crate::Error;

const ENUM_GUARD: u64 = 1_000_000;
const MAX_ORACLE_DETS: usize = 24;

/// Every valid skeleton (at most one detection per part, at least one major
/// detection), in a deterministic order.
pub fn enumerate_all_skeletons(inst: &Instance) -> Result<Vec<Skeleton>, Error> {
    let mut combos: u64 = 1;
    for p in 0..inst.n_parts() {
        combos = combos.saturating_mul(1 + inst.dets_of_part(PartId(p)).len() as u64);
        if combos > ENUM_GUARD {
            return Err(Error::SizeGuard(format!(
                "skeleton enumeration exceeds {ENUM_GUARD} combinations"
            )));
        }
    }
    let mut out = Vec::new();
    let mut members: Vec<DetId> = Vec::new();
    fn rec(
        inst: &Instance,
        p: usize,
        members: &mut Vec<DetId>,
        out: &mut Vec<Skeleton>,
    ) -> Result<(), Error> {
        if p == inst.n_parts() {
            if members
                .iter()
                .any(|&d| inst.graph.is_major(inst.part_of(d)))
            {
                out.push(Skeleton::new(inst, members.clone())?);
            }
            return Ok(());
        }
        rec(inst, p + 1, members, out)?;
        for &d in inst.dets_of_part(PartId(p)) {
            members.push(d);
            rec(inst, p + 1, members, out)?;
            members.pop();
        }
        Ok(())
    }
    rec(inst, 0, &mut members, &mut out)?;
    Ok(out)
}

/// Every local assignment with a nonempty local set of size at most
/// `max_locals`, grouped by part order then global detection, local sets in
/// lexicographic order.
pub fn enumerate_all_locals(
    inst: &Instance,
    max_locals: usize,
) -> Result<Vec<LocalAssignment>, Error> {
    let mut count: u64 = 0;
    for p in 0..inst.n_parts() {
        let n = inst.dets_of_part(PartId(p)).len() as u64;
        if n > 0 {
            let per_global = if n - 1 >= 63 {
                u64::MAX
            } else {
                (1u64 << (n - 1)) - 1
            };
            count = count.saturating_add(n.saturating_mul(per_global));
        }
        if count > ENUM_GUARD {
            return Err(Error::SizeGuard(format!(
                "local-assignment enumeration exceeds {ENUM_GUARD} columns"
            )));
        }
    }
    let mut out = Vec::new();
    for p in 0..inst.n_parts() {
        let dets = inst.dets_of_part(PartId(p));
        for &g in dets {
            let others: Vec<DetId> = dets.iter().copied().filter(|&d| d != g).collect();
            let mut set: Vec<DetId> = Vec::new();
            fn rec(
                inst: &Instance,
                p: PartId,
                g: DetId,
                others: &[DetId],
                from: usize,
                cap: usize,
                set: &mut Vec<DetId>,
                out: &mut Vec<LocalAssignment>,
            ) -> Result<(), Error> {
                if !set.is_empty() {
                    out.push(LocalAssignment::new(inst, p, g, set.clone())?);
                }
                if set.len() == cap {
                    return Ok(());
                }
                for i in from..others.len() {
                    set.push(others[i]);
                    rec(inst, p, g, others, i + 1, cap, set, out)?;
                    set.pop();
                }
                Ok(())
            }
            rec(inst, PartId(p), g, &others, 0, max_locals, &mut set, &mut out)?;
        }
    }
    Ok(out)
}

struct PartLocals {
    /// Local assignments of one part grouped by global detection:
    /// `(global, [(local-set mask, index into the flat list)])`.
    by_global: Vec<(DetId, Vec<(u64, usize)>)>,
    all: Vec<LocalAssignment>,
    part_mask: u64,
}

fn mask_of(dets: &[DetId]) -> u64 {
    dets.iter().fold(0u64, |m, d| m | (1u64 << d.0))
}

/// Exact optimum by depth-first search over disjoint skeleton selections,
/// with the per-part local choice memoized on the detections the skeletons
/// use.
pub fn solve_exact(inst: &Instance, config: &SolverConfig) -> Result<IntegralSolution, Error> {
    inst.ensure_valid()?;
    if inst.n_detections() > MAX_ORACLE_DETS {
        return Err(Error::SizeGuard(format!(
            "exhaustive search capped at {MAX_ORACLE_DETS} detections"
        )));
    }
    let skeletons = enumerate_all_skeletons(inst)?;
    let skel_masks: Vec<u64> = skeletons.iter().map(|s| mask_of(&s.members)).collect();
    let locals = enumerate_all_locals(inst, config.max_locals_per_assignment)?;

    let mut parts: Vec<PartLocals> = (0..inst.n_parts())
        .map(|p| PartLocals {
            by_global: inst
                .dets_of_part(PartId(p))
                .iter()
                .map(|&g| (g, Vec::new()))
                .collect(),
            all: Vec::new(),
            part_mask: mask_of(inst.dets_of_part(PartId(p))),
        })
        .collect();
    for l in locals {
        let pl = &mut parts[l.part.0];
        let idx = pl.all.len();
        let m = mask_of(&l.local_dets);
        pl.by_global
            .iter_mut()
            .find(|(g, _)| *g == l.global_det)
            .expect("global belongs to part")
            .1
            .push((m, idx));
        pl.all.push(l);
    }

    // Best local selection for one part given which of its detections the
    // skeletons use: globals must be used detections, local sets must avoid
    // them and each other.
    fn best_locals(
        pl: &PartLocals,
        used: u64,
        memo: &mut HashMap<u64, (f64, Vec<usize>)>,
    ) -> (f64, Vec<usize>) {
        if let Some(hit) = memo.get(&used) {
            return hit.clone();
        }
        fn rec(pl: &PartLocals, used: u64, gi: usize, taken: u64) -> (f64, Vec<usize>) {
            if gi == pl.by_global.len() {
                return (0.0, Vec::new());
            }
            let (g, options) = &pl.by_global[gi];
            let mut best = rec(pl, used, gi + 1, taken);
            if used & (1u64 << g.0) != 0 {
                for &(m, idx) in options {
                    if m & (used | taken) != 0 {
                        continue;
                    }
                    let (rest, mut chosen) = rec(pl, used, gi + 1, taken | m);
                    let v = pl.all[idx].cost + rest;
                    if v < best.0 {
                        chosen.push(idx);
                        best = (v, chosen);
                    }
                }
            }
            best
        }
        let r = rec(pl, used, 0, 0);
        memo.insert(used, r.clone());
        r
    }

    struct Search<'a> {
        skeletons: &'a [Skeleton],
        skel_masks: &'a [u64],
        parts: &'a [PartLocals],
        memos: Vec<HashMap<u64, (f64, Vec<usize>)>>,
        best: f64,
        best_skels: Vec<usize>,
        best_locals: Vec<Vec<usize>>,
    }

    impl Search<'_> {
        fn leaf(&mut self, chosen: &[usize], used: u64, skel_cost: f64) {
            let mut total = skel_cost;
            let mut locs = Vec::with_capacity(self.parts.len());
            for (p, pl) in self.parts.iter().enumerate() {
                let (v, idxs) = best_locals(pl, used & pl.part_mask, &mut self.memos[p]);
                total += v;
                locs.push(idxs);
            }
            if total < self.best {
                self.best = total;
                self.best_skels = chosen.to_vec();
                self.best_locals = locs;
            }
        }

        fn dfs(&mut self, i: usize, chosen: &mut Vec<usize>, used: u64, skel_cost: f64) {
            if i == self.skeletons.len() {
                self.leaf(chosen, used, skel_cost);
                return;
            }
            self.dfs(i + 1, chosen, used, skel_cost);
            if self.skel_masks[i] & used == 0 {
                chosen.push(i);
                self.dfs(
                    i + 1,
                    chosen,
                    used | self.skel_masks[i],
                    skel_cost + self.skeletons[i].cost,
                );
                chosen.pop();
            }
        }
    }

    let mut search = Search {
        skeletons: &skeletons,
        skel_masks: &skel_masks,
        parts: &parts,
        memos: vec![HashMap::new(); parts.len()],
        best: f64::INFINITY,
        best_skels: Vec::new(),
        best_locals: vec![Vec::new(); parts.len()],
    };
    search.dfs(0, &mut Vec::new(), 0, 0.0);

    let chosen_skeletons: Vec<Skeleton> = search
        .best_skels
        .iter()
        .map(|&i| skeletons[i].clone())
        .collect();
    let chosen_locals: Vec<Vec<LocalAssignment>> = search
        .best_locals
        .iter()
        .enumerate()
        .map(|(p, idxs)| {
            let mut v: Vec<LocalAssignment> =
                idxs.iter().map(|&i| parts[p].all[i].clone()).collect();
            v.sort_by_key(|l| l.global_det);
            v
        })
        .collect();
    let objective = chosen_skeletons.iter().map(|s| s.cost).sum::<f64>()
        + chosen_locals
            .iter()
            .flatten()
            .map(|l| l.cost)
            .sum::<f64>();
    Ok(IntegralSolution::new(inst, chosen_skeletons, chosen_locals, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, CostModel, Detection, PartGraph};
    use crate::rounding::check_solution;
    use crate::testutil::i3;

    #[test]
    fn fixture_enumeration_counts() {
        let inst = i3();
        let skels = enumerate_all_skeletons(&inst).unwrap();
        assert_eq!(skels.len(), 4);
        let members: Vec<Vec<usize>> = skels
            .iter()
            .map(|s| s.members.iter().map(|d| d.0).collect())
            .collect();
        assert!(members.contains(&vec![0]));
        assert!(members.contains(&vec![2]));
        assert!(members.contains(&vec![0, 1]));
        assert!(members.contains(&vec![1, 2]));
        let locals = enumerate_all_locals(&inst, usize::MAX).unwrap();
        assert_eq!(locals.len(), 2);
        assert!(locals.iter().all(|l| l.part == PartId(0)));
    }

    #[test]
    fn fixture_exact_optimum() {
        let inst = i3();
        let sol = solve_exact(&inst, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 1.9).abs() < 1e-12, "objective {}", sol.objective);
        assert!(sol.is_feasible);
        assert_eq!(sol.chosen_skeletons.len(), 1);
        assert_eq!(sol.chosen_skeletons[0].members, vec![DetId(0), DetId(1)]);
        let neck = &sol.chosen_locals[0];
        assert_eq!(neck.len(), 1);
        assert_eq!(neck[0].global_det, DetId(0));
        assert_eq!(neck[0].local_dets, vec![DetId(2)]);
        assert!(check_solution(&inst, &sol).is_ok());
    }

    #[test]
    fn single_detection_instance() {
        let graph = PartGraph {
            part_names: vec!["p0".into()],
            major: vec![true],
            tree_edges: vec![],
            star_root: PartId(0),
        };
        let detections = vec![Detection { id: DetId(0), part: PartId(0) }];
        let costs = CostModel { theta: vec![-2.0], phi: vec![], omega: 1.0 };
        let inst = Instance::new("one", graph, detections, costs);
        assert_eq!(enumerate_all_skeletons(&inst).unwrap().len(), 1);
        assert!(enumerate_all_locals(&inst, usize::MAX).unwrap().is_empty());
        let sol = solve_exact(&inst, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-12);
        assert_eq!(sol.chosen_skeletons.len(), 1);
    }

    #[test]
    fn unattractive_costs_give_empty_solution() {
        let mut inst = i3();
        inst.costs.theta = vec![0.5, 0.2, 0.1];
        let inst = Instance::new("pos", inst.graph, inst.detections, inst.costs);
        let sol = solve_exact(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.chosen_skeletons.is_empty());
        assert!(sol.chosen_locals.iter().all(|v| v.is_empty()));
    }

    #[test]
    fn relabeling_detections_preserves_optimum() {
        for seed in 0..20u64 {
            let inst = generate_instance(3, 2, 1.0, seed);
            let base = solve_exact(&inst, &SolverConfig::default()).unwrap();
            // reverse the ids
            let n = inst.n_detections();
            let perm = |d: DetId| DetId(n - 1 - d.0);
            let detections: Vec<Detection> = inst
                .detections
                .iter()
                .map(|d| Detection { id: perm(d.id), part: d.part })
                .collect();
            let mut theta = vec![0.0; n];
            for d in 0..n {
                theta[perm(DetId(d)).0] = inst.costs.theta[d];
            }
            let phi: Vec<(DetId, DetId, f64)> = inst
                .costs
                .phi
                .iter()
                .map(|&(a, b, w)| (perm(a), perm(b), w))
                .collect();
            let relabeled = Instance::new(
                "perm",
                inst.graph.clone(),
                detections,
                CostModel { theta, phi, omega: inst.costs.omega },
            );
            let permuted = solve_exact(&relabeled, &SolverConfig::default()).unwrap();
            assert!(
                (base.objective - permuted.objective).abs() < 1e-9,
                "seed {seed}: {} vs {}",
                base.objective,
                permuted.objective
            );
        }
    }

    #[test]
    fn enumeration_guard_trips() {
        let inst = generate_instance(10, 4, 1.0, 1);
        assert!(matches!(
            enumerate_all_skeletons(&inst),
            Err(Error::SizeGuard(_))
        ));
        assert!(matches!(
            solve_exact(&inst, &SolverConfig::default()),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn local_cap_limits_enumeration() {
        let inst = generate_instance(1, 4, 1.0, 3);
        let unbounded = enumerate_all_locals(&inst, usize::MAX).unwrap();
        assert_eq!(unbounded.len(), 4 * 7);
        let capped = enumerate_all_locals(&inst, 1).unwrap();
        assert_eq!(capped.len(), 4 * 3);
        assert!(capped.iter().all(|l| l.local_dets.len() <= 1));
    }
}

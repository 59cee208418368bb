//! Skeleton and local-assignment columns, their costs, and a deduplicating
//! column pool shared by the solvers.

use std::collections::HashSet;

use crate::model::{DetId, Instance, PartId};
use crate::Error;

/// A pose skeleton: at most one detection per part, at least one detection
/// of a major part. `cost` caches the instance cost of the member set.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub members: Vec<DetId>,
    pub cost: f64,
}

impl Skeleton {
    pub fn new(inst: &Instance, mut members: Vec<DetId>) -> Result<Skeleton, Error> {
        members.sort();
        let cost = skeleton_cost(inst, &members)?;
        Ok(Skeleton { members, cost })
    }

    pub fn contains(&self, d: DetId) -> bool {
        self.members.binary_search(&d).is_ok()
    }
}

/// One global detection plus local detections of the same part that it pays
/// for. The global detection's unary cost lives in the skeleton, not here.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalAssignment {
    pub part: PartId,
    pub global_det: DetId,
    pub local_dets: Vec<DetId>,
    pub cost: f64,
}

impl LocalAssignment {
    pub fn new(
        inst: &Instance,
        part: PartId,
        global_det: DetId,
        mut local_dets: Vec<DetId>,
    ) -> Result<LocalAssignment, Error> {
        local_dets.sort();
        let cost = local_cost(inst, part, global_det, &local_dets)?;
        Ok(LocalAssignment { part, global_det, local_dets, cost })
    }
}

/// Cost of a skeleton: the instancing cost, the unary cost of every member,
/// and each unordered member pair's pairwise cost counted once.
pub fn skeleton_cost(inst: &Instance, members: &[DetId]) -> Result<f64, Error> {
    if members.is_empty() {
        return Err(Error::Solver("skeleton must have at least one member".into()));
    }
    let mut part_seen = HashSet::new();
    let mut has_major = false;
    for &d in members {
        if d.0 >= inst.n_detections() {
            return Err(Error::Solver(format!("skeleton references unknown detection {d}")));
        }
        let p = inst.part_of(d);
        if !part_seen.insert(p) {
            return Err(Error::Solver(format!("skeleton has two detections of part {p}")));
        }
        has_major |= inst.graph.is_major(p);
    }
    if !has_major {
        return Err(Error::Solver("skeleton has no major-part detection".into()));
    }
    let mut cost = inst.costs.omega;
    for &d in members {
        cost += inst.theta(d);
    }
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            cost += inst.phi(a, b);
        }
    }
    Ok(cost)
}

/// Cost of a local assignment: unary costs of the locals plus every unordered
/// pair within `{global} ∪ locals` that touches a local, counted once.
pub fn local_cost(
    inst: &Instance,
    part: PartId,
    global_det: DetId,
    local_dets: &[DetId],
) -> Result<f64, Error> {
    if global_det.0 >= inst.n_detections() || inst.part_of(global_det) != part {
        return Err(Error::Solver(format!(
            "global detection {global_det} is not a detection of part {part}"
        )));
    }
    let mut seen = HashSet::new();
    for &d in local_dets {
        if d.0 >= inst.n_detections() || inst.part_of(d) != part {
            return Err(Error::Solver(format!(
                "local detection {d} is not a detection of part {part}"
            )));
        }
        if d == global_det || !seen.insert(d) {
            return Err(Error::Solver(format!("detection {d} repeated in local assignment")));
        }
    }
    let mut cost = 0.0;
    for &d in local_dets {
        cost += inst.theta(d) + inst.phi(global_det, d);
    }
    for (i, &a) in local_dets.iter().enumerate() {
        for &b in &local_dets[i + 1..] {
            cost += inst.phi(a, b);
        }
    }
    Ok(cost)
}

/// Deduplicating pool of generated columns.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    pub skeletons: Vec<Skeleton>,
    pub locals_by_part: Vec<Vec<LocalAssignment>>,
    skeleton_keys: HashSet<Vec<DetId>>,
    local_keys: HashSet<(PartId, DetId, Vec<DetId>)>,
}

impl ColumnPool {
    pub fn new(n_parts: usize) -> ColumnPool {
        ColumnPool {
            skeletons: Vec::new(),
            locals_by_part: vec![Vec::new(); n_parts],
            skeleton_keys: HashSet::new(),
            local_keys: HashSet::new(),
        }
    }

    /// Inserts a skeleton unless an identical member set is already pooled.
    pub fn add_skeleton(&mut self, s: Skeleton) -> bool {
        if self.skeleton_keys.contains(&s.members) {
            return false;
        }
        self.skeleton_keys.insert(s.members.clone());
        self.skeletons.push(s);
        true
    }

    pub fn add_local(&mut self, l: LocalAssignment) -> bool {
        let key = (l.part, l.global_det, l.local_dets.clone());
        if self.local_keys.contains(&key) {
            return false;
        }
        self.local_keys.insert(key);
        self.locals_by_part[l.part.0].push(l);
        true
    }

    pub fn locals_of_part(&self, p: PartId) -> &[LocalAssignment] {
        &self.locals_by_part[p.0]
    }

    pub fn n_skeletons(&self) -> usize {
        self.skeletons.len()
    }

    pub fn n_locals(&self) -> usize {
        self.locals_by_part.iter().map(|v| v.len()).sum()
    }

    /// Detection-usage marginals of a fractional skeleton selection, clipped
    /// to `[0, 1]`.
    pub fn skeleton_marginals(&self, inst: &Instance, gamma: &[f64]) -> Vec<f64> {
        let mut gm = vec![0.0; inst.n_detections()];
        for (g, s) in self.skeletons.iter().enumerate() {
            if gamma[g] != 0.0 {
                for &d in &s.members {
                    gm[d.0] += gamma[g];
                }
            }
        }
        for v in &mut gm {
            *v = v.clamp(0.0, 1.0);
        }
        gm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::i3;

    #[test]
    fn skeleton_costs_on_fixture() {
        let inst = i3();
        assert!((skeleton_cost(&inst, &[DetId(0)]).unwrap() + 0.7).abs() < 1e-12);
        assert!((skeleton_cost(&inst, &[DetId(0), DetId(1)]).unwrap() + 1.4).abs() < 1e-12);
        assert!((skeleton_cost(&inst, &[DetId(2)]).unwrap() + 0.1).abs() < 1e-12);
        assert!((skeleton_cost(&inst, &[DetId(1), DetId(2)]).unwrap() + 0.6).abs() < 1e-12);
    }

    #[test]
    fn skeleton_cost_rejects_bad_member_sets() {
        let inst = i3();
        assert!(skeleton_cost(&inst, &[]).is_err());
        assert!(skeleton_cost(&inst, &[DetId(0), DetId(2)]).is_err()); // same part twice
        assert!(skeleton_cost(&inst, &[DetId(1)]).is_err()); // no major detection
        assert!(skeleton_cost(&inst, &[DetId(7)]).is_err());
    }

    #[test]
    fn local_costs_on_fixture() {
        let inst = i3();
        assert!((local_cost(&inst, PartId(0), DetId(0), &[DetId(2)]).unwrap() + 0.5).abs() < 1e-12);
        assert!((local_cost(&inst, PartId(0), DetId(2), &[DetId(0)]).unwrap() + 1.1).abs() < 1e-12);
        assert_eq!(local_cost(&inst, PartId(0), DetId(0), &[]).unwrap(), 0.0);
    }

    #[test]
    fn local_cost_rejects_cross_part_and_repeats() {
        let inst = i3();
        assert!(local_cost(&inst, PartId(0), DetId(1), &[]).is_err());
        assert!(local_cost(&inst, PartId(0), DetId(0), &[DetId(1)]).is_err());
        assert!(local_cost(&inst, PartId(0), DetId(0), &[DetId(0)]).is_err());
        assert!(local_cost(&inst, PartId(0), DetId(0), &[DetId(2), DetId(2)]).is_err());
    }

    #[test]
    fn pool_deduplicates() {
        let inst = i3();
        let mut pool = ColumnPool::new(inst.n_parts());
        let s = Skeleton::new(&inst, vec![DetId(1), DetId(0)]).unwrap();
        assert_eq!(s.members, vec![DetId(0), DetId(1)]); // sorted on build
        assert!(pool.add_skeleton(s.clone()));
        assert!(!pool.add_skeleton(s));
        let l = LocalAssignment::new(&inst, PartId(0), DetId(0), vec![DetId(2)]).unwrap();
        assert!(pool.add_local(l.clone()));
        assert!(!pool.add_local(l));
        assert_eq!(pool.n_skeletons(), 1);
        assert_eq!(pool.n_locals(), 1);
    }

    #[test]
    fn marginals_are_clipped() {
        let inst = i3();
        let mut pool = ColumnPool::new(inst.n_parts());
        pool.add_skeleton(Skeleton::new(&inst, vec![DetId(0), DetId(1)]).unwrap());
        pool.add_skeleton(Skeleton::new(&inst, vec![DetId(2), DetId(1)]).unwrap());
        let gm = pool.skeleton_marginals(&inst, &[0.8, 0.7]);
        assert_eq!(gm, vec![0.8, 1.0, 0.7]);
    }
}

//! Column pricing. Skeletons are priced by a tree dynamic program
//! conditioned on one star-root detection; local assignments are priced per
//! global detection either by subset enumeration or by a separable
//! threshold rule.

use std::collections::HashMap;

use crate::model::{DetId, Instance, PartId, PricingMode};
use crate::Error;

/// Per-detection dual potential added to the unary cost during skeleton
/// pricing.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialVector {
    pub delta: Vec<f64>,
}

impl PotentialVector {
    pub fn new(delta: Vec<f64>) -> Self {
        PotentialVector { delta }
    }

    pub fn zeros(n: usize) -> Self {
        PotentialVector { delta: vec![0.0; n] }
    }
}

/// Minimum of `cost(skeleton) + sum of delta over members` over all
/// skeletons containing `d_star`, which must be a star-root detection so
/// that every star pairwise term can be folded into the unaries.
///
/// Each non-root part either contributes one detection or stays absent;
/// absence removes the part's unary and pairwise terms. Ties prefer absence
/// first and then the lowest detection id, so results are reproducible.
pub fn price_skeleton(
    inst: &Instance,
    potentials: &PotentialVector,
    d_star: DetId,
) -> Result<(Vec<DetId>, f64), Error> {
    let n = inst.n_detections();
    if potentials.delta.len() != n {
        return Err(Error::Config(format!(
            "potential vector has length {}, instance has {} detections",
            potentials.delta.len(),
            n
        )));
    }
    if d_star.0 >= n {
        return Err(Error::Config(format!("unknown detection {d_star}")));
    }
    let root = inst.graph.star_root;
    if inst.part_of(d_star) != root {
        return Err(Error::Config(format!(
            "skeleton pricing must condition on a detection of the star-root \
             part {root}, got {d_star} of part {}",
            inst.part_of(d_star)
        )));
    }
    debug_assert!(potentials.delta.iter().all(|v| v.is_finite()));
    let (parent, order) = inst
        .graph
        .rooted_at(root)
        .ok_or_else(|| Error::Config("part tree does not span all parts".into()))?;

    // Conditioning makes every pair involving d_star unary; pairs with other
    // star-root detections cannot co-occur with d_star.
    let mut unary: Vec<f64> = (0..n)
        .map(|d| inst.theta(DetId(d)) + potentials.delta[d])
        .collect();
    for &(d, w) in inst.phi_neighbors(d_star) {
        unary[d.0] += w;
    }

    let mut children: Vec<Vec<PartId>> = vec![Vec::new(); inst.n_parts()];
    for &p in &order {
        if let Some(pp) = parent[p.0] {
            children[pp.0].push(p);
        }
    }

    // node_val[d]: best subtree value with detection d chosen for its part.
    // entry_nopair[p]: best way to enter part p's subtree when no pairwise
    // term with the parent applies (parent absent, or parent is the root
    // whose star terms were folded). entry_pair[(p, c)]: the same with the
    // parent fixed to detection c. Choices record Some(det) or None=absent.
    let mut node_val: Vec<f64> = vec![f64::INFINITY; n];
    let mut entry_nopair: Vec<(f64, Option<DetId>)> = vec![(0.0, None); inst.n_parts()];
    let mut entry_pair: HashMap<(PartId, DetId), (f64, Option<DetId>)> = HashMap::new();

    for &p in order.iter().rev() {
        if p == root {
            continue;
        }
        let absent_val: f64 = children[p.0].iter().map(|&q| entry_nopair[q.0].0).sum();
        for &c in inst.dets_of_part(p) {
            let mut v = unary[c.0];
            for &q in &children[p.0] {
                v += entry_pair[&(q, c)].0;
            }
            node_val[c.0] = v;
        }
        let pick = |pair_with: Option<DetId>| -> (f64, Option<DetId>) {
            let mut best = (absent_val, None);
            for &c in inst.dets_of_part(p) {
                let w = match pair_with {
                    Some(cp) => node_val[c.0] + inst.phi(cp, c),
                    None => node_val[c.0],
                };
                if w < best.0 {
                    best = (w, Some(c));
                }
            }
            best
        };
        entry_nopair[p.0] = pick(None);
        if let Some(pp) = parent[p.0] {
            if pp != root {
                for &cp in inst.dets_of_part(pp) {
                    let e = pick(Some(cp));
                    entry_pair.insert((p, cp), e);
                }
            }
        }
    }

    let mut total = unary[d_star.0];
    for &q in &children[root.0] {
        total += entry_nopair[q.0].0;
    }
    let reduced_cost = inst.costs.omega + total;

    let mut members = vec![d_star];
    let mut stack: Vec<(PartId, Option<DetId>)> =
        children[root.0].iter().map(|&q| (q, None)).collect();
    while let Some((q, pair_with)) = stack.pop() {
        let choice = match pair_with {
            Some(cp) => entry_pair[&(q, cp)].1,
            None => entry_nopair[q.0].1,
        };
        match choice {
            Some(c) => {
                members.push(c);
                for &gc in &children[q.0] {
                    stack.push((gc, Some(c)));
                }
            }
            None => {
                for &gc in &children[q.0] {
                    stack.push((gc, None));
                }
            }
        }
    }
    members.sort();
    Ok((members, reduced_cost))
}

/// Prices one skeleton per star-root detection and keeps those whose
/// reduced cost beats `-tol`. Detections of other major parts cannot anchor
/// the conditioning; instances with several major parts are flagged by
/// `Instance::warnings`.
pub fn price_all_skeletons(
    inst: &Instance,
    potentials: &PotentialVector,
    tol: f64,
) -> Result<Vec<(Vec<DetId>, f64)>, Error> {
    let mut out = Vec::new();
    for &d in inst.dets_of_part(inst.graph.star_root) {
        let (members, rc) = price_skeleton(inst, potentials, d)?;
        if rc < -tol {
            out.push((members, rc));
        }
    }
    Ok(out)
}

/// Minimum of
/// `(lam2+lam3)[d_star] + sum over locals of (lam1+lam2) + cost(locals)`
/// over local sets for global `d_star`, the empty set included. Lambda
/// slices are indexed by detection id; entries outside the part are
/// ignored.
///
/// `ExactEnumeration` scans subsets of size at most `max_locals` in
/// lexicographic order and keeps the first minimizer. `SeparableFast`
/// thresholds each candidate independently and ignores `max_locals`; it is
/// rejected when any two candidates share a pairwise cost, which the
/// threshold rule cannot represent.
pub fn price_local(
    inst: &Instance,
    part: PartId,
    lam1: &[f64],
    lam2: &[f64],
    lam3: &[f64],
    d_star: DetId,
    mode: PricingMode,
    max_locals: usize,
) -> Result<(Vec<DetId>, f64), Error> {
    let n = inst.n_detections();
    if part.0 >= inst.n_parts() {
        return Err(Error::Config(format!("unknown part {part}")));
    }
    if d_star.0 >= n || inst.part_of(d_star) != part {
        return Err(Error::Config(format!(
            "global detection {d_star} does not belong to part {part}"
        )));
    }
    if lam1.len() != n || lam2.len() != n || lam3.len() != n {
        return Err(Error::Config("lambda vectors must cover all detections".into()));
    }
    let base = lam2[d_star.0] + lam3[d_star.0];
    let others: Vec<DetId> = inst
        .dets_of_part(part)
        .iter()
        .copied()
        .filter(|&d| d != d_star)
        .collect();
    let weight =
        |d: DetId| inst.theta(d) + inst.phi(d, d_star) + lam1[d.0] + lam2[d.0];

    match mode {
        PricingMode::SeparableFast => {
            for (i, &a) in others.iter().enumerate() {
                for &b in &others[i + 1..] {
                    if inst.phi(a, b) != 0.0 {
                        return Err(Error::Config(format!(
                            "separable pricing is invalid for part {part}: \
                             detections {a} and {b} share a pairwise cost"
                        )));
                    }
                }
            }
            let mut set = Vec::new();
            let mut value = base;
            for &d in &others {
                let w = weight(d);
                if w < 0.0 {
                    set.push(d);
                    value += w;
                }
            }
            Ok((set, value))
        }
        PricingMode::ExactEnumeration => {
            let mut best_set: Vec<DetId> = Vec::new();
            let mut best_val = base;
            let mut prefix: Vec<DetId> = Vec::new();
            fn rec(
                inst: &Instance,
                others: &[DetId],
                from: usize,
                cap: usize,
                value: f64,
                prefix: &mut Vec<DetId>,
                best_set: &mut Vec<DetId>,
                best_val: &mut f64,
                weight: &dyn Fn(DetId) -> f64,
            ) {
                if prefix.len() == cap {
                    return;
                }
                for i in from..others.len() {
                    let d = others[i];
                    let mut v = value + weight(d);
                    for &e in prefix.iter() {
                        v += inst.phi(e, d);
                    }
                    prefix.push(d);
                    if v < *best_val {
                        *best_val = v;
                        *best_set = prefix.clone();
                    }
                    rec(inst, others, i + 1, cap, v, prefix, best_set, best_val, weight);
                    prefix.pop();
                }
            }
            rec(
                inst,
                &others,
                0,
                max_locals,
                base,
                &mut prefix,
                &mut best_set,
                &mut best_val,
                &weight,
            );
            Ok((best_set, best_val))
        }
    }
}

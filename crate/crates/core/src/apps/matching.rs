//! Stochastic bipartite matching with patience constraints.
//!
//! Edges succeed independently with known probabilities once probed,
//! successes commit, and every node `v` tolerates at most `t_v` probes.
//! The pipeline solves the natural LP, rounds the fractional solution
//! with bipartite cycle/path dependent rounding (exact marginals,
//! per-node degree preservation, negative correlation), and resolves
//! the rounded edge set with a uniformly random permutation scan that
//! probes an edge only while both endpoints are unmatched.

use crate::model::uniform_member;
use crate::set::{self, Mask};
use crate::submodular::lp::DenseLp;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;

/// A bipartite instance: sides `A` and `B`, edges `(u, v)` with
/// activation probability, weight, and per-node patience.
#[derive(Clone, Debug)]
pub struct MatchingInstance {
    pub a_nodes: usize,
    pub b_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    pub t_a: Vec<u32>,
    pub t_b: Vec<u32>,
}

impl MatchingInstance {
    pub fn new(
        a_nodes: usize,
        b_nodes: usize,
        edges: Vec<(usize, usize)>,
        p: Vec<f64>,
        w: Vec<f64>,
        t_a: Vec<u32>,
        t_b: Vec<u32>,
    ) -> Result<Self> {
        if a_nodes == 0 || b_nodes == 0 {
            return Err(Error::Domain("empty node side".into()));
        }
        if edges.is_empty() || edges.len() > 64 {
            return Err(Error::Domain(format!("{} edges outside 1..=64", edges.len())));
        }
        if p.len() != edges.len() || w.len() != edges.len() {
            return Err(Error::Inconsistent("edge attribute length mismatch".into()));
        }
        if t_a.len() != a_nodes || t_b.len() != b_nodes {
            return Err(Error::Inconsistent("patience length mismatch".into()));
        }
        for &(u, v) in &edges {
            if u >= a_nodes || v >= b_nodes {
                return Err(Error::Inconsistent(format!(
                    "edge ({u}, {v}) outside {a_nodes}x{b_nodes}"
                )));
            }
        }
        for (e, &pe) in p.iter().enumerate() {
            if !(pe > 0.0 && pe <= 1.0) {
                return Err(Error::Domain(format!("p[{e}] = {pe} outside (0, 1]")));
            }
        }
        for (e, &we) in w.iter().enumerate() {
            if !(we > 0.0 && we.is_finite()) {
                return Err(Error::Domain(format!("w[{e}] = {we} not positive")));
            }
        }
        if t_a.iter().chain(t_b.iter()).any(|&t| t == 0) {
            return Err(Error::Domain("zero patience".into()));
        }
        Ok(MatchingInstance {
            a_nodes,
            b_nodes,
            edges,
            p,
            w,
            t_a,
            t_b,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges incident to A-side node `u`.
    pub fn delta_a(&self, u: usize) -> Mask {
        set::from_elems(
            (0..self.n_edges()).filter(|&e| self.edges[e].0 == u),
        )
    }

    /// Edges incident to B-side node `v`.
    pub fn delta_b(&self, v: usize) -> Mask {
        set::from_elems(
            (0..self.n_edges()).filter(|&e| self.edges[e].1 == v),
        )
    }

    /// Edges sharing an endpoint with `e`, excluding `e` itself.
    pub fn neighbors(&self, e: usize) -> Mask {
        let (u, v) = self.edges[e];
        (self.delta_a(u) | self.delta_b(v)) & !set::bit(e)
    }

    /// `Σ w_e p_e x_e`, the LP objective at `x`.
    pub fn lp_value(&self, x: &[f64]) -> f64 {
        (0..self.n_edges())
            .map(|e| self.w[e] * self.p[e] * x[e])
            .sum()
    }
}

/// Maximize `Σ w_e p_e x_e` subject to `Σ_{δ(v)} p_e x_e ≤ 1`,
/// `Σ_{δ(v)} x_e ≤ t_v` per node, and the unit box.
pub fn solve_matching_lp(instance: &MatchingInstance) -> Result<Vec<f64>> {
    let n = instance.n_edges();
    let mut lp = DenseLp::new(n);
    lp.maximize(
        (0..n)
            .map(|e| instance.w[e] * instance.p[e])
            .collect(),
    );
    let node_rows = |delta: Mask, t: u32, lp: &mut DenseLp| {
        let mut prow = vec![0.0; n];
        let mut trow = vec![0.0; n];
        for e in set::iter(delta) {
            prow[e] = instance.p[e];
            trow[e] = 1.0;
        }
        lp.add_le(prow, 1.0);
        lp.add_le(trow, t as f64);
    };
    for u in 0..instance.a_nodes {
        node_rows(instance.delta_a(u), instance.t_a[u], &mut lp);
    }
    for v in 0..instance.b_nodes {
        node_rows(instance.delta_b(v), instance.t_b[v], &mut lp);
    }
    for e in 0..n {
        let mut row = vec![0.0; n];
        row[e] = 1.0;
        lp.add_le(row, 1.0);
    }
    let mut x = lp.solve()?.x;
    // Pivoting can overshoot the box by an ulp; snap back.
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(x)
}

/// Dependent rounding of a fractional edge vector on a bipartite graph:
/// walks alternate along cycles first, then maximal paths, shifting
/// mass with compensating probabilities. The output preserves every
/// marginal exactly and every node degree up to rounding
/// (`Σ_{δ(v)} X̂ ≤ ⌈Σ_{δ(v)} x⌉`). Non-bipartite graphs are rejected.
pub fn gkps_round<R: Rng>(
    n_nodes: usize,
    edges: &[(usize, usize)],
    x: &[f64],
    rng: &mut R,
) -> Result<Mask> {
    if edges.len() != x.len() {
        return Err(Error::Inconsistent("edge/point length mismatch".into()));
    }
    if edges.len() > 64 {
        return Err(Error::Capability(format!("{} edges exceed the mask", edges.len())));
    }
    for &(u, v) in edges {
        if u >= n_nodes || v >= n_nodes {
            return Err(Error::Inconsistent("edge endpoint outside the graph".into()));
        }
        if u == v {
            return Err(Error::Capability("self-loop is not bipartite".into()));
        }
    }
    for (e, &xe) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&xe) || !xe.is_finite() {
            return Err(Error::Domain(format!("x[{e}] = {xe} outside [0, 1]")));
        }
    }
    // Two-color the whole graph; an odd cycle makes alternation impossible.
    let mut color = vec![-1i8; n_nodes];
    for start in 0..n_nodes {
        if color[start] >= 0 {
            continue;
        }
        color[start] = 0;
        let mut queue = vec![start];
        while let Some(node) = queue.pop() {
            for &(u, v) in edges {
                let other = if u == node {
                    v
                } else if v == node {
                    u
                } else {
                    continue;
                };
                if color[other] < 0 {
                    color[other] = 1 - color[node];
                    queue.push(other);
                } else if color[other] == color[node] {
                    return Err(Error::Capability("graph is not bipartite".into()));
                }
            }
        }
    }

    const INT_EPS: f64 = 1e-12;
    let mut y = x.to_vec();
    let degrees_before: Vec<f64> = (0..n_nodes)
        .map(|v| {
            edges
                .iter()
                .zip(&y)
                .filter(|((a, b), _)| *a == v || *b == v)
                .map(|(_, &ye)| ye)
                .sum()
        })
        .collect();
    let fractional = |y: &[f64], e: usize| y[e] > INT_EPS && y[e] < 1.0 - INT_EPS;
    loop {
        let frac: Vec<usize> = (0..y.len()).filter(|&e| fractional(&y, e)).collect();
        if frac.is_empty() {
            break;
        }
        // Fractional degree per node.
        let mut deg = vec![0usize; n_nodes];
        for &e in &frac {
            deg[edges[e].0] += 1;
            deg[edges[e].1] += 1;
        }
        // Prefer a path endpoint (degree one); otherwise every touched
        // node has degree >= 2 and walking must close a cycle.
        let start = (0..n_nodes)
            .find(|&v| deg[v] == 1)
            .or_else(|| (0..n_nodes).find(|&v| deg[v] >= 1))
            .expect("fractional edge implies a touched node");
        let mut walk: Vec<usize> = Vec::new();
        let mut used: Mask = 0;
        let mut visited_at = vec![usize::MAX; n_nodes];
        let mut node = start;
        visited_at[start] = 0;
        let cycle = loop {
            let next = frac
                .iter()
                .copied()
                .find(|&e| !set::contains(used, e) && (edges[e].0 == node || edges[e].1 == node));
            let Some(e) = next else { break false };
            used |= set::bit(e);
            walk.push(e);
            node = if edges[e].0 == node { edges[e].1 } else { edges[e].0 };
            if visited_at[node] != usize::MAX {
                // Drop the stem before the first visit of `node`.
                walk.drain(..visited_at[node]);
                break true;
            }
            visited_at[node] = walk.len();
        };
        debug_assert!(!walk.is_empty());
        debug_assert!(!cycle || walk.len() % 2 == 0);
        // Alternate: even walk positions move with the +alpha branch.
        let mut alpha = f64::INFINITY;
        let mut beta = f64::INFINITY;
        for (i, &e) in walk.iter().enumerate() {
            if i % 2 == 0 {
                alpha = alpha.min(1.0 - y[e]);
                beta = beta.min(y[e]);
            } else {
                alpha = alpha.min(y[e]);
                beta = beta.min(1.0 - y[e]);
            }
        }
        debug_assert!(alpha > 0.0 && beta > 0.0);
        let take_alpha = rng.gen_bool((beta / (alpha + beta)).clamp(0.0, 1.0));
        let shift = if take_alpha { alpha } else { -beta };
        for (i, &e) in walk.iter().enumerate() {
            y[e] += if i % 2 == 0 { shift } else { -shift };
            y[e] = y[e].clamp(0.0, 1.0);
        }
    }
    let rounded = set::from_elems(
        (0..y.len()).filter(|&e| y[e] > 0.5),
    );
    for v in 0..n_nodes {
        let after = edges
            .iter()
            .enumerate()
            .filter(|(e, (a, b))| (*a == v || *b == v) && set::contains(rounded, *e))
            .count();
        debug_assert!(
            (after as f64) <= degrees_before[v].ceil() + INT_EPS,
            "node {v}: rounded degree {after} over ceil({})",
            degrees_before[v]
        );
    }
    Ok(rounded)
}

/// Round a matching instance's fractional point over its own bipartite
/// graph (B-side nodes shifted past the A side).
pub fn gkps_round_instance<R: Rng>(
    instance: &MatchingInstance,
    x: &[f64],
    rng: &mut R,
) -> Result<Mask> {
    let shifted: Vec<(usize, usize)> = instance
        .edges
        .iter()
        .map(|&(u, v)| (u, instance.a_nodes + v))
        .collect();
    gkps_round(instance.a_nodes + instance.b_nodes, &shifted, x, rng)
}

/// One resolved matching run.
#[derive(Clone, Debug)]
pub struct MatchingRun {
    pub e_hat: Mask,
    pub probed: Mask,
    pub matched: Mask,
    pub value: f64,
}

fn finish_run(instance: &MatchingInstance, e_hat: Mask, probed: Mask, matched: Mask) -> MatchingRun {
    // The output is a matching and the probes respect every patience.
    let mut seen_a = vec![0u32; instance.a_nodes];
    let mut seen_b = vec![0u32; instance.b_nodes];
    let mut matched_a = 0u64;
    let mut matched_b = 0u64;
    for e in set::iter(probed) {
        let (u, v) = instance.edges[e];
        seen_a[u] += 1;
        seen_b[v] += 1;
        if set::contains(matched, e) {
            assert!(
                !set::contains(matched_a, u) && !set::contains(matched_b, v),
                "matched edges share node"
            );
            matched_a |= set::bit(u as usize);
            matched_b |= set::bit(v as usize);
        }
    }
    for (u, &seen) in seen_a.iter().enumerate() {
        assert!(seen <= instance.t_a[u], "node {u} probed past patience");
    }
    for (v, &seen) in seen_b.iter().enumerate() {
        assert!(seen <= instance.t_b[v], "node {v} probed past patience");
    }
    let value = set::iter(matched).map(|e| instance.w[e]).sum();
    MatchingRun {
        e_hat,
        probed,
        matched,
        value,
    }
}

/// Scan the rounded edges in a uniformly random order, probing each one
/// whose endpoints are both still unmatched; a success matches the edge
/// and removes both endpoints. Equivalent to repeatedly probing a
/// uniform safe edge, and never probes a node past its patience as long
/// as the rounded degrees respect the patience rows.
pub fn run_matching<R: Rng>(
    instance: &MatchingInstance,
    e_hat: Mask,
    rng: &mut R,
) -> Result<MatchingRun> {
    if e_hat & !set::full(instance.n_edges()) != 0 {
        return Err(Error::Inconsistent("rounded set outside the edge list".into()));
    }
    let mut order: Vec<usize> = set::iter(e_hat).collect();
    order.shuffle(rng);
    let mut free_a = set::full(instance.a_nodes.min(64));
    let mut free_b = set::full(instance.b_nodes.min(64));
    let mut probed: Mask = 0;
    let mut matched: Mask = 0;
    for e in order {
        let (u, v) = instance.edges[e];
        if !set::contains(free_a, u) || !set::contains(free_b, v) {
            continue;
        }
        probed |= set::bit(e);
        if rng.gen_bool(instance.p[e]) {
            matched |= set::bit(e);
            free_a &= !set::bit(u);
            free_b &= !set::bit(v);
        }
    }
    Ok(finish_run(instance, e_hat, probed, matched))
}

/// The repeated-uniform-pick formulation: draw a uniformly random safe
/// edge, probe it, repeat until no safe edge remains. Distributionally
/// identical to the permutation scan.
pub fn run_matching_repick<R: Rng>(
    instance: &MatchingInstance,
    e_hat: Mask,
    rng: &mut R,
) -> Result<MatchingRun> {
    if e_hat & !set::full(instance.n_edges()) != 0 {
        return Err(Error::Inconsistent("rounded set outside the edge list".into()));
    }
    let mut free_a = set::full(instance.a_nodes.min(64));
    let mut free_b = set::full(instance.b_nodes.min(64));
    let mut probed: Mask = 0;
    let mut matched: Mask = 0;
    loop {
        let safe = set::from_elems(set::iter(e_hat & !probed).filter(|&e| {
            let (u, v) = instance.edges[e];
            set::contains(free_a, u) && set::contains(free_b, v)
        }));
        if safe == 0 {
            break;
        }
        let e = uniform_member(safe, rng);
        let (u, v) = instance.edges[e];
        probed |= set::bit(e);
        if rng.gen_bool(instance.p[e]) {
            matched |= set::bit(e);
            free_a &= !set::bit(u);
            free_b &= !set::bit(v);
        }
    }
    Ok(finish_run(instance, e_hat, probed, matched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;
    use crate::model::{ProbingInstance, RandomSource};
    use crate::oracle::{brute_force_opt, chi_square_equal, hoeffding_ci};
    use crate::submodular::SubmodularFunction;

    fn two_path() -> MatchingInstance {
        // a0 - b0 - a1: two edges sharing b0.
        MatchingInstance::new(
            2,
            1,
            vec![(0, 0), (1, 0)],
            vec![0.7, 0.5],
            vec![1.0, 2.0],
            vec![1, 1],
            vec![2],
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_malformed_instances() {
        assert!(MatchingInstance::new(1, 1, vec![(0, 0)], vec![1.0], vec![1.0], vec![1], vec![1]).is_ok());
        assert!(MatchingInstance::new(1, 1, vec![(0, 1)], vec![1.0], vec![1.0], vec![1], vec![1]).is_err());
        assert!(MatchingInstance::new(1, 1, vec![(0, 0)], vec![0.0], vec![1.0], vec![1], vec![1]).is_err());
        assert!(MatchingInstance::new(1, 1, vec![(0, 0)], vec![1.0], vec![-1.0], vec![1], vec![1]).is_err());
        assert!(MatchingInstance::new(1, 1, vec![(0, 0)], vec![1.0], vec![1.0], vec![0], vec![1]).is_err());
    }

    #[test]
    fn lp_on_hand_instances() {
        // Single sure edge: x = 1.
        let single =
            MatchingInstance::new(1, 1, vec![(0, 0)], vec![1.0], vec![3.0], vec![1], vec![1])
                .unwrap();
        let x = solve_matching_lp(&single).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);
        // Two edges at one B node with p = 1: expected-probe row binds.
        let inst = MatchingInstance::new(
            2,
            1,
            vec![(0, 0), (1, 0)],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1, 1],
            vec![2],
        )
        .unwrap();
        let x2 = solve_matching_lp(&inst).unwrap();
        assert!((x2[0] + x2[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_dominates_the_adaptive_optimum() {
        // Sparse random 4x4 instances; the adaptive optimum comes from
        // the probing DP over the edge ground set with per-node
        // matching matroids inside and patience matroids outside.
        let mut rng = RandomSource::new(41).rng();
        for _ in 0..8 {
            let a_nodes = 4;
            let b_nodes = 4;
            let mut edges = Vec::new();
            for u in 0..a_nodes {
                for v in 0..b_nodes {
                    if edges.len() < 9 && rng.gen_bool(0.45) {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                edges.push((0, 0));
            }
            let m = edges.len();
            let p: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..2.5)).collect();
            let t_a: Vec<u32> = (0..a_nodes).map(|_| rng.gen_range(1..3)).collect();
            let t_b: Vec<u32> = (0..b_nodes).map(|_| rng.gen_range(1..3)).collect();
            let inst =
                MatchingInstance::new(a_nodes, b_nodes, edges.clone(), p.clone(), w.clone(), t_a.clone(), t_b.clone())
                    .unwrap();
            let x = solve_matching_lp(&inst).unwrap();
            let lp_value = inst.lp_value(&x);

            let inner = vec![
                Matroid::partition(
                    m,
                    (0..a_nodes)
                        .map(|u| (inst.delta_a(u), 1))
                        .filter(|&(d, _)| d != 0)
                        .collect(),
                )
                .unwrap(),
                Matroid::partition(
                    m,
                    (0..b_nodes)
                        .map(|v| (inst.delta_b(v), 1))
                        .filter(|&(d, _)| d != 0)
                        .collect(),
                )
                .unwrap(),
            ];
            let outer = vec![
                Matroid::partition(
                    m,
                    (0..a_nodes)
                        .map(|u| (inst.delta_a(u), t_a[u] as usize))
                        .filter(|&(d, _)| d != 0)
                        .collect(),
                )
                .unwrap(),
                Matroid::partition(
                    m,
                    (0..b_nodes)
                        .map(|v| (inst.delta_b(v), t_b[v] as usize))
                        .filter(|&(d, _)| d != 0)
                        .collect(),
                )
                .unwrap(),
            ];
            let probing = ProbingInstance::new(
                p,
                inner,
                outer,
                SubmodularFunction::linear(w).unwrap(),
            )
            .unwrap();
            let opt = brute_force_opt(&probing).unwrap().value;
            assert!(
                lp_value >= opt - 1e-7,
                "LP {lp_value} below adaptive optimum {opt} on {edges:?}"
            );
        }
    }

    #[test]
    fn gkps_preserves_marginals_and_degrees() {
        let inst = MatchingInstance::new(
            2,
            2,
            vec![(0, 0), (0, 1), (1, 0), (1, 1)],
            vec![0.9; 4],
            vec![1.0; 4],
            vec![2, 2],
            vec![2, 2],
        )
        .unwrap();
        let x = vec![0.3, 0.55, 0.45, 0.7];
        let mut rng = RandomSource::new(42).rng();
        let runs = 60_000;
        let mut hits = vec![0u32; 4];
        for _ in 0..runs {
            let rounded = gkps_round_instance(&inst, &x, &mut rng).unwrap();
            for e in set::iter(rounded) {
                hits[e] += 1;
            }
            // Degree preservation per node: ceil of the fractional degree.
            for u in 0..2 {
                let deg = set::iter(rounded & inst.delta_a(u)).count();
                let frac: f64 = set::iter(inst.delta_a(u)).map(|e| x[e]).sum();
                assert!(deg as f64 <= frac.ceil() + 1e-9);
            }
            for v in 0..2 {
                let deg = set::iter(rounded & inst.delta_b(v)).count();
                let frac: f64 = set::iter(inst.delta_b(v)).map(|e| x[e]).sum();
                assert!(deg as f64 <= frac.ceil() + 1e-9);
            }
        }
        let ci = hoeffding_ci(runs, 0.99).unwrap();
        for e in 0..4 {
            let freq = hits[e] as f64 / runs as f64;
            assert!(
                (freq - x[e]).abs() < 2.0 * ci,
                "edge {e}: marginal {freq} vs {}",
                x[e]
            );
        }
    }

    #[test]
    fn gkps_rounds_stars_to_at_most_one_edge() {
        // Fractional star summing to one: negative correlation forces
        // exactly one rounded edge, never two.
        let edges = vec![(0, 1), (0, 2), (0, 3)];
        let x = vec![0.5, 0.3, 0.2];
        let mut rng = RandomSource::new(43).rng();
        for _ in 0..5000 {
            let rounded = gkps_round(4, &edges, &x, &mut rng).unwrap();
            assert_eq!(set::card(rounded), 1);
        }
    }

    #[test]
    fn gkps_negative_correlation_on_a_star() {
        // Conditioned on one edge rounding to one, the incident
        // activation mass stays below 2 - 2 p_e x_e.
        let inst = MatchingInstance::new(
            3,
            1,
            vec![(0, 0), (1, 0), (2, 0)],
            vec![0.8, 0.6, 0.9],
            vec![1.0; 3],
            vec![1, 1, 1],
            vec![3],
        )
        .unwrap();
        let x = vec![0.45, 0.5, 0.55];
        let mut rng = RandomSource::new(44).rng();
        let runs = 40_000;
        let mut cond_runs = 0u32;
        let mut cond_mass = 0.0;
        for _ in 0..runs {
            let rounded = gkps_round_instance(&inst, &x, &mut rng).unwrap();
            if set::contains(rounded, 0) {
                cond_runs += 1;
                cond_mass += set::iter(rounded & inst.neighbors(0))
                    .map(|f| inst.p[f] * x[f])
                    .sum::<f64>();
            }
        }
        assert!(cond_runs > 0);
        let ci = hoeffding_ci(cond_runs as usize, 0.99).unwrap();
        let bound = 2.0 - 2.0 * inst.p[0] * x[0];
        assert!(
            cond_mass / cond_runs as f64 <= bound + 3.0 * ci,
            "conditional mass {} over {bound}",
            cond_mass / cond_runs as f64
        );
    }

    #[test]
    fn gkps_rejects_non_bipartite_graphs() {
        let triangle = vec![(0, 1), (1, 2), (2, 0)];
        let mut rng = RandomSource::new(45).rng();
        let err = gkps_round(3, &triangle, &[0.5, 0.5, 0.5], &mut rng).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
        let loop_edge = vec![(0, 0)];
        let err2 = gkps_round(1, &loop_edge, &[0.5], &mut rng).unwrap_err();
        assert!(matches!(err2, Error::Capability(_)));
    }

    #[test]
    fn gkps_passes_integral_points_through() {
        let edges = vec![(0, 2), (1, 3)];
        let mut rng = RandomSource::new(46).rng();
        let rounded = gkps_round(4, &edges, &[1.0, 0.0], &mut rng).unwrap();
        assert_eq!(rounded, 0b01);
    }

    #[test]
    fn run_matching_hand_law_on_the_two_path() {
        // Both edges rounded: edge 0 is probed unless edge 1 goes first
        // AND succeeds; Pr[probe 0] = 1/2 + 1/2 (1 - p_1) = 0.75.
        let inst = two_path();
        let mut rng = RandomSource::new(47).rng();
        let runs = 40_000;
        let mut probes0 = 0u32;
        for _ in 0..runs {
            let run = run_matching(&inst, 0b11, &mut rng).unwrap();
            if set::contains(run.probed, 0) {
                probes0 += 1;
            }
        }
        let freq = probes0 as f64 / runs as f64;
        let ci = hoeffding_ci(runs, 0.99).unwrap();
        assert!((freq - 0.75).abs() < 2.0 * ci, "probe law {freq} vs 0.75");
    }

    #[test]
    fn permutation_scan_matches_the_repick_formulation() {
        // Outcome histogram over (probed, matched) masks on a two-edge
        // instance, compared by chi-square.
        let inst = two_path();
        let mut rng = RandomSource::new(48).rng();
        let runs = 30_000;
        let index = |run: &MatchingRun| (run.probed as usize) * 4 + run.matched as usize;
        let mut perm = vec![0u64; 16];
        let mut repick = vec![0u64; 16];
        for _ in 0..runs {
            perm[index(&run_matching(&inst, 0b11, &mut rng).unwrap())] += 1;
            repick[index(&run_matching_repick(&inst, 0b11, &mut rng).unwrap())] += 1;
        }
        let res = chi_square_equal(&perm, &repick).unwrap();
        assert!(
            res.p_value > 0.01,
            "formulations diverge: chi-square p = {}",
            res.p_value
        );
    }

    #[test]
    fn end_to_end_guarantee_on_a_small_instance() {
        let inst = MatchingInstance::new(
            2,
            2,
            vec![(0, 0), (0, 1), (1, 0), (1, 1)],
            vec![0.75, 0.6, 0.5, 0.9],
            vec![1.0, 2.0, 1.5, 1.0],
            vec![1, 2],
            vec![2, 1],
        )
        .unwrap();
        let x = solve_matching_lp(&inst).unwrap();
        let lp_value = inst.lp_value(&x);
        let mut rng = RandomSource::new(49).rng();
        let runs = 40_000;
        let mut weight = 0.0;
        let mut probed_given_hat = vec![0u32; 4];
        let mut hat = vec![0u32; 4];
        for _ in 0..runs {
            let rounded = gkps_round_instance(&inst, &x, &mut rng).unwrap();
            let run = run_matching(&inst, rounded, &mut rng).unwrap();
            weight += run.value;
            for e in set::iter(rounded) {
                hat[e] += 1;
                if set::contains(run.probed, e) {
                    probed_given_hat[e] += 1;
                }
            }
        }
        let ci = hoeffding_ci(runs, 0.99).unwrap();
        for e in 0..4 {
            if hat[e] == 0 {
                continue;
            }
            let cond = probed_given_hat[e] as f64 / hat[e] as f64;
            let cond_ci = hoeffding_ci(hat[e] as usize, 0.99).unwrap();
            let denom = 1.0 + set::iter(inst.neighbors(e))
                .map(|f| inst.p[f] * x[f])
                .sum::<f64>();
            assert!(cond >= 1.0 / 3.0 - 3.0 * cond_ci, "edge {e}: {cond} < 1/3");
            assert!(
                cond >= 1.0 / denom - 3.0 * cond_ci,
                "edge {e}: {cond} < 1/{denom}"
            );
        }
        let mean_weight = weight / runs as f64;
        let wmax: f64 = inst.w.iter().cloned().fold(0.0, f64::max) * 2.0;
        assert!(
            mean_weight >= (1.0 / 3.0) * lp_value - 3.0 * ci * wmax,
            "weight {mean_weight} below LP/3 = {}",
            lp_value / 3.0
        );
    }
}

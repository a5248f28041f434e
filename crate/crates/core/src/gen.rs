//! Random instance generators for experiments and regression suites.
//!
//! Everything here is seeded through the caller's RNG, so a fixed seed
//! reproduces the exact instance. Transversal constraints come from
//! random bipartite graphs, objectives from a few submodular families
//! (including non-monotone cuts), and fractional points from convex
//! mixtures of random polytope vertices.

use crate::apps::kset::{KSetColumn, KSetInstance, KSetOutcome};
use crate::apps::matching::MatchingInstance;
use crate::greedy::ProbingPolytope;
use crate::matroid::Matroid;
use crate::model::ProbingInstance;
use crate::set::{self, Mask};
use crate::submodular::SubmodularFunction;
use crate::{Error, Result};
use rand::Rng;
use std::str::FromStr;

/// Objective families the generator can draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveFamily {
    /// Nonnegative modular weights (monotone).
    Linear,
    /// Weighted coverage (monotone).
    Coverage,
    /// Weighted directed cut (non-monotone).
    DirectedCut,
    /// Coverage plus directed cut, stored as an explicit value table
    /// (non-monotone).
    MixedTable,
}

impl FromStr for ObjectiveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ObjectiveFamily::Linear),
            "coverage" => Ok(ObjectiveFamily::Coverage),
            "cut" => Ok(ObjectiveFamily::DirectedCut),
            "mixed" => Ok(ObjectiveFamily::MixedTable),
            other => Err(Error::Parse(format!(
                "unknown objective family {other:?} (expected linear|coverage|cut|mixed)"
            ))),
        }
    }
}

/// Parameters for [`random_instance`].
#[derive(Clone, Debug)]
pub struct InstanceSpec {
    pub n: usize,
    pub k_in: usize,
    pub k_out: usize,
    pub objective: ObjectiveFamily,
    pub p_range: (f64, f64),
}

impl InstanceSpec {
    pub fn new(n: usize, k_in: usize, k_out: usize, objective: ObjectiveFamily) -> Self {
        InstanceSpec {
            n,
            k_in,
            k_out,
            objective,
            p_range: (0.2, 1.0),
        }
    }
}

/// A random transversal matroid on `n` elements: a bipartite graph with
/// `1..=max_vertices` right vertices and density-1/2 edges, redrawn
/// until some element is matchable.
pub fn random_transversal<R: Rng>(n: usize, max_vertices: usize, rng: &mut R) -> Result<Matroid> {
    if n == 0 || max_vertices == 0 {
        return Err(Error::Domain("degenerate transversal spec".into()));
    }
    for _ in 0..64 {
        let vertices = rng.gen_range(1..=max_vertices);
        let mut edges = Vec::new();
        for e in 0..n {
            for v in 0..vertices {
                if rng.gen_bool(0.5) {
                    edges.push((e, v));
                }
            }
        }
        if !edges.is_empty() {
            return Matroid::transversal(n, vertices, &edges);
        }
    }
    Err(Error::Inconsistent(
        "could not draw a transversal matroid with positive rank".into(),
    ))
}

/// A random objective from the chosen family, scaled to modest values.
pub fn random_objective<R: Rng>(
    family: ObjectiveFamily,
    n: usize,
    rng: &mut R,
) -> Result<SubmodularFunction> {
    match family {
        ObjectiveFamily::Linear => {
            let w = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
            SubmodularFunction::linear(w)
        }
        ObjectiveFamily::Coverage => {
            let items = rng.gen_range(2..=2 * n.max(1));
            let item_weights = (0..items).map(|_| rng.gen_range(0.2..1.5)).collect();
            let covers = (0..n)
                .map(|_| {
                    set::from_elems((0..items).filter(|_| rng.gen_bool(0.4)))
                })
                .collect();
            SubmodularFunction::coverage(n, item_weights, covers)
        }
        ObjectiveFamily::DirectedCut => {
            let mut arcs = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(0.4) {
                        arcs.push((u, v, rng.gen_range(0.2..1.5)));
                    }
                }
            }
            if arcs.is_empty() && n >= 2 {
                arcs.push((0, 1, 1.0));
            }
            SubmodularFunction::cut_directed(n, arcs)
        }
        ObjectiveFamily::MixedTable => {
            let cover = random_objective(ObjectiveFamily::Coverage, n, rng)?;
            let cut = random_objective(ObjectiveFamily::DirectedCut, n, rng)?;
            let values = (0..(1u64 << n))
                .map(|s| cover.value(s as Mask) * 0.5 + cut.value(s as Mask))
                .collect();
            SubmodularFunction::table(n, values)
        }
    }
}

/// A full random probing instance with transversal inner/outer
/// constraints and activation probabilities drawn from `p_range`.
pub fn random_instance<R: Rng>(spec: &InstanceSpec, rng: &mut R) -> Result<ProbingInstance> {
    if spec.n == 0 || spec.n > 16 {
        return Err(Error::Domain(format!("n = {} outside 1..=16", spec.n)));
    }
    let (lo, hi) = spec.p_range;
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Domain(format!("p range ({lo}, {hi}) invalid")));
    }
    let p = (0..spec.n)
        .map(|_| if lo == hi { lo } else { rng.gen_range(lo..hi) })
        .collect();
    let max_vertices = spec.n.min(4);
    let inner = (0..spec.k_in)
        .map(|_| random_transversal(spec.n, max_vertices, rng))
        .collect::<Result<Vec<_>>>()?;
    let outer = (0..spec.k_out)
        .map(|_| random_transversal(spec.n, max_vertices, rng))
        .collect::<Result<Vec<_>>>()?;
    let objective = random_objective(spec.objective, spec.n, rng)?;
    ProbingInstance::new(p, inner, outer, objective)
}

/// A point of `b·P̃` built as a convex mixture of random vertices of
/// the probing relaxation, scaled by `b`. Mixtures give fractional
/// interior points, which exercise the decomposition much harder than
/// vertex (0/1) points.
pub fn random_point<R: Rng>(
    instance: &ProbingInstance,
    b: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0 < b && b <= 1.0) {
        return Err(Error::Domain(format!("b = {b} outside (0, 1]")));
    }
    let polytope = ProbingPolytope::new(instance)?;
    let n = instance.n();
    let mixes = 3;
    let mut weights = Vec::with_capacity(mixes);
    let mut total = 0.0;
    for _ in 0..mixes {
        let w = rng.gen_range(0.1..1.0);
        weights.push(w);
        total += w;
    }
    let mut x = vec![0.0; n];
    for &wi in &weights {
        let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let vertex = polytope.linear_max(&obj)?;
        for e in 0..n {
            x[e] += (wi / total) * vertex[e];
        }
    }
    for v in &mut x {
        *v = (*v * b).clamp(0.0, 1.0);
    }
    Ok(x)
}

/// A random packing instance: supports of size at most `k`, correlated
/// outcome tables (joint value/unit rows), small integer capacities.
pub fn random_kset<R: Rng>(n: usize, d: usize, k: usize, rng: &mut R) -> Result<KSetInstance> {
    if n == 0 || d == 0 || k == 0 || k > d {
        return Err(Error::Domain(format!("bad packing shape n={n} d={d} k={k}")));
    }
    let capacities = (0..d).map(|_| rng.gen_range(1..=2usize)).collect();
    let columns = (0..n)
        .map(|_| {
            let size = rng.gen_range(1..=k);
            let mut support: Mask = 0;
            while set::card(support) < size {
                support |= set::bit(rng.gen_range(0..d));
            }
            let rows = rng.gen_range(2..=4usize);
            let raw: Vec<u32> = (0..rows).map(|_| rng.gen_range(1..=5u32)).collect();
            let total: u32 = raw.iter().sum();
            let outcomes = raw
                .iter()
                .map(|&wgt| {
                    let units = set::from_elems(
                        set::iter(support).filter(|_| rng.gen_bool(0.6)),
                    );
                    KSetOutcome {
                        prob: wgt as f64 / total as f64,
                        value: rng.gen_range(0.0..2.5),
                        units,
                    }
                })
                .collect();
            KSetColumn { support, outcomes }
        })
        .collect();
    KSetInstance::new(d, capacities, columns)
}

/// A random bipartite matching instance with bounded patience.
pub fn random_matching<R: Rng>(
    a_nodes: usize,
    b_nodes: usize,
    max_edges: usize,
    rng: &mut R,
) -> Result<MatchingInstance> {
    if a_nodes == 0 || b_nodes == 0 || max_edges == 0 {
        return Err(Error::Domain("degenerate matching spec".into()));
    }
    let mut edges = Vec::new();
    for u in 0..a_nodes {
        for v in 0..b_nodes {
            if edges.len() < max_edges && rng.gen_bool(0.5) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((rng.gen_range(0..a_nodes), rng.gen_range(0..b_nodes)));
    }
    let m = edges.len();
    let p = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
    let w = (0..m).map(|_| rng.gen_range(0.5..2.5)).collect();
    let t_a = (0..a_nodes).map(|_| rng.gen_range(1..=2u32)).collect();
    let t_b = (0..b_nodes).map(|_| rng.gen_range(1..=2u32)).collect();
    MatchingInstance::new(a_nodes, b_nodes, edges, p, w, t_a, t_b)
}

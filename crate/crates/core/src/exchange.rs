//! Exchange structures for transversal matroids: support sets with
//! explicit injections into vertices, critical-set assignments, the
//! induced blocking sets, and the one-step update the probing scheme
//! performs after each pick.
//!
//! The setup: a point in a transversal matroid's polytope is decomposed
//! into a convex combination of independent "support" sets. Each support
//! set carries an injection of its members into the vertex side of the
//! bipartite graph. Every element with positive marginal draws one
//! *critical* support set (with probability proportional to the set
//! weights among the sets containing it) and remembers the vertex it
//! occupies there. An element blocks another when it sits, inside its own
//! critical set, on the vertex the other element occupies in *its*
//! critical set. When the scheme picks an element, every support set
//! evicts the occupant of the picked element's critical vertex; an
//! element evicted from its own critical set becomes unavailable.
//!
//! Two structural facts are checkable after every update and the checks
//! are wired into the scheme's verified mode:
//!
//! * every support set's member-to-vertex map stays a valid injection
//!   along graph edges (so support sets stay independent), and
//! * for any two support sets `B`, `A` and any `b` in `B`, either `b`'s
//!   vertex is free in `A` and `A + b` is independent, or it is taken by
//!   some `a` and `A - a + b` is independent.

use crate::matroid::{ConvexDecomposition, Matroid};
use crate::set::{self, Mask};
use crate::{Error, Result};
use rand::Rng;

/// One support set: an independent set with an explicit injection of its
/// members into vertices.
#[derive(Clone, Debug)]
pub struct SupportSet {
    /// Convex weight of this set in the decomposition.
    pub beta: f64,
    /// Current members.
    pub members: Mask,
    vertex_of: Vec<Option<u32>>,
    elem_at: Vec<Option<u32>>,
}

impl SupportSet {
    fn new(beta: f64, n: usize, vertices: usize) -> Self {
        SupportSet {
            beta,
            members: 0,
            vertex_of: vec![None; n],
            elem_at: vec![None; vertices],
        }
    }

    pub fn contains(&self, e: usize) -> bool {
        set::contains(self.members, e)
    }

    /// The vertex element `e` currently occupies in this set.
    pub fn vertex_of(&self, e: usize) -> Option<usize> {
        self.vertex_of.get(e).copied().flatten().map(|v| v as usize)
    }

    /// The element currently occupying vertex `v` in this set.
    pub fn occupant(&self, v: usize) -> Option<usize> {
        self.elem_at.get(v).copied().flatten().map(|e| e as usize)
    }

    fn insert(&mut self, e: usize, v: usize) {
        debug_assert!(self.vertex_of[e].is_none() && self.elem_at[v].is_none());
        self.vertex_of[e] = Some(v as u32);
        self.elem_at[v] = Some(e as u32);
        self.members |= set::bit(e);
    }

    fn remove(&mut self, e: usize) {
        let v = self.vertex_of[e].expect("removing a non-member") as usize;
        self.vertex_of[e] = None;
        self.elem_at[v] = None;
        self.members &= !set::bit(e);
    }
}

/// All support sets of one transversal matroid, plus the graph they are
/// injected into.
#[derive(Clone, Debug)]
pub struct SupportState {
    n: usize,
    vertices: usize,
    /// Element-to-vertex adjacency of the underlying transversal matroid.
    adj: Vec<Mask>,
    pub sets: Vec<SupportSet>,
}

/// Build the initial support state from a convex decomposition of a
/// polytope point: one support set per decomposition term, each injected
/// into the vertices by deterministic lowest-index augmenting paths.
///
/// The matroid must be transversal (use [`Matroid::to_transversal`]
/// first if it is declared as uniform or partition).
pub fn build_initial_state(
    matroid: &Matroid,
    decomposition: &ConvexDecomposition,
) -> Result<SupportState> {
    let Matroid::Transversal { n, vertices, adj } = matroid else {
        return Err(Error::Domain(
            "support states require a transversal matroid".into(),
        ));
    };
    if decomposition.ground_size() != *n {
        return Err(Error::Inconsistent(
            "decomposition ground set does not match the matroid".into(),
        ));
    }
    let mut sets = Vec::with_capacity(decomposition.terms.len());
    for &(beta, members) in &decomposition.terms {
        let elems = set::to_vec(members);
        let matched = crate::matroid::match_elements(adj, *vertices, &elems);
        let mut s = SupportSet::new(beta, *n, *vertices);
        for (i, &e) in elems.iter().enumerate() {
            let Some(v) = matched[i] else {
                return Err(Error::Inconsistent(format!(
                    "decomposition set {:?} is not independent in the matroid",
                    elems
                )));
            };
            s.insert(e, v);
        }
        sets.push(s);
    }
    Ok(SupportState {
        n: *n,
        vertices: *vertices,
        adj: adj.clone(),
        sets,
    })
}

impl SupportState {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    /// Total weight of the sets currently containing `e`.
    pub fn weight_on(&self, e: usize) -> f64 {
        self.sets
            .iter()
            .filter(|s| s.contains(e))
            .map(|s| s.beta)
            .sum()
    }

    /// Check that every support set is a valid injection along graph
    /// edges (member and vertex maps are mutually inverse, every matched
    /// pair is an edge). Panics on violation — this is a structural
    /// invariant, not an input condition.
    pub fn assert_injections(&self) {
        for (i, s) in self.sets.iter().enumerate() {
            for e in 0..self.n {
                match s.vertex_of[e] {
                    Some(v) => {
                        assert!(
                            s.contains(e),
                            "set {i}: element {e} has a vertex but is not a member"
                        );
                        assert_eq!(
                            s.elem_at[v as usize],
                            Some(e as u32),
                            "set {i}: maps of element {e} and vertex {v} disagree"
                        );
                        assert!(
                            set::contains(self.adj[e], v as usize),
                            "set {i}: element {e} matched to non-adjacent vertex {v}"
                        );
                    }
                    None => assert!(
                        !s.contains(e),
                        "set {i}: member {e} has no vertex"
                    ),
                }
            }
            for v in 0..self.vertices {
                if let Some(e) = s.elem_at[v] {
                    assert_eq!(
                        s.vertex_of[e as usize],
                        Some(v as u32),
                        "set {i}: vertex {v} points at element {e} which disagrees"
                    );
                }
            }
        }
    }

    /// Check the exchange property between every ordered pair of support
    /// sets against an independence table (mask-indexed). Panics on
    /// violation.
    pub fn assert_exchange(&self, indep: &[bool]) {
        for (bi, b) in self.sets.iter().enumerate() {
            for (ai, a) in self.sets.iter().enumerate() {
                if ai == bi {
                    continue;
                }
                for e in set::iter(b.members) {
                    let v = b.vertex_of[e].unwrap() as usize;
                    let target = match a.elem_at[v] {
                        Some(f) => a.members & !set::bit(f as usize) | set::bit(e),
                        None => a.members | set::bit(e),
                    };
                    assert!(
                        indep[target as usize],
                        "exchange fails: set {bi} element {e} into set {ai} (target {target:#b})"
                    );
                }
            }
        }
    }
}

/// The element-level mapping between two support sets: `apply(e)` sends a
/// member `e` of the `from` set to whatever occupies `e`'s vertex in the
/// `to` set (or nothing, when that vertex is free there).
#[derive(Clone, Copy, Debug)]
pub struct TransversalMapping {
    pub from: usize,
    pub to: usize,
}

impl TransversalMapping {
    pub fn apply(&self, state: &SupportState, e: usize) -> Result<Option<usize>> {
        let from = state
            .sets
            .get(self.from)
            .ok_or_else(|| Error::Domain(format!("no support set {}", self.from)))?;
        let to = state
            .sets
            .get(self.to)
            .ok_or_else(|| Error::Domain(format!("no support set {}", self.to)))?;
        let v = from
            .vertex_of(e)
            .ok_or_else(|| Error::Domain(format!("element {e} is not in set {}", self.from)))?;
        Ok(to.occupant(v))
    }
}

/// Each element's critical support set (an index into the state's sets)
/// and the vertex it occupied there when the assignment was drawn.
/// Elements with no positive marginal have no critical set.
#[derive(Clone, Debug)]
pub struct CriticalAssignment {
    pub critical: Vec<Option<usize>>,
    kappa: Vec<Option<u32>>,
}

impl CriticalAssignment {
    /// The critical vertex of `e` (fixed at assignment time).
    pub fn kappa(&self, e: usize) -> Option<usize> {
        self.kappa.get(e).copied().flatten().map(|v| v as usize)
    }
}

/// Draw a critical set for every element with positive marginal: set `i`
/// containing `e` is chosen with probability `beta_i / marginal[e]`.
///
/// Requires the state's weights to reproduce the marginals: for every
/// element with `marginal[e] > 0`, the total weight of sets containing
/// `e` must equal `marginal[e]` within `1e-9` (this is exactly what a
/// convex decomposition of the marginal vector guarantees).
pub fn choose_critical_sets<R: Rng>(
    state: &SupportState,
    marginal: &[f64],
    rng: &mut R,
) -> Result<CriticalAssignment> {
    let n = state.n;
    if marginal.len() != n {
        return Err(Error::Inconsistent("marginal dimension mismatch".into()));
    }
    let mut critical = vec![None; n];
    let mut kappa = vec![None; n];
    for e in 0..n {
        let me = marginal[e];
        if me <= 0.0 {
            continue;
        }
        let total = state.weight_on(e);
        if (total - me).abs() > 1e-9 {
            return Err(Error::Inconsistent(format!(
                "support weight on element {e} is {total}, marginal says {me}"
            )));
        }
        let mut u = rng.gen_range(0.0..me);
        let mut chosen = None;
        for (i, s) in state.sets.iter().enumerate() {
            if !s.contains(e) {
                continue;
            }
            if u < s.beta {
                chosen = Some(i);
                break;
            }
            u -= s.beta;
        }
        // Float dust can push u past the last set; fall back to it.
        let i = chosen.unwrap_or_else(|| {
            state
                .sets
                .iter()
                .enumerate()
                .rev()
                .find(|(_, s)| s.contains(e))
                .map(|(i, _)| i)
                .expect("positive marginal but no containing set")
        });
        critical[e] = Some(i);
        kappa[e] = state.sets[i].vertex_of[e];
    }
    Ok(CriticalAssignment { critical, kappa })
}

/// The current blocking set of `e`: elements `f != e` that occupy, inside
/// their own critical set, the vertex `e` was assigned in `e`'s critical
/// set. Empty when `e` has no critical set.
pub fn blocking_set(state: &SupportState, criticals: &CriticalAssignment, e: usize) -> Mask {
    let Some(kappa) = criticals.kappa(e) else {
        return 0;
    };
    let mut out: Mask = 0;
    for f in 0..state.n {
        if f == e {
            continue;
        }
        let Some(cf) = criticals.critical[f] else {
            continue;
        };
        if state.sets[cf].vertex_of(f) == Some(kappa) {
            out |= set::bit(f);
        }
    }
    out
}

/// One eviction performed by [`update_state`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Eviction {
    pub element: usize,
    pub set_index: usize,
    /// Was the element evicted from its own critical set? (That is what
    /// makes it unavailable.)
    pub from_critical: bool,
}

/// Apply one pick to the state: in every support set, evict the occupant
/// of the chosen element's critical vertex; when `insert` is set, put the
/// chosen element on that vertex in every set it is not already in.
///
/// Within one set the two sub-cases are: the chosen element already sits
/// on its critical vertex there (nothing happens), or somebody else does
/// (they are evicted; the chosen element keeps whatever vertex it already
/// had in that set and is only inserted when missing entirely).
///
/// Returns the evictions in `(set index)` order so the caller can mark
/// elements evicted from their own critical set as unavailable.
pub fn update_state(
    state: &mut SupportState,
    criticals: &CriticalAssignment,
    chosen: usize,
    insert: bool,
) -> Vec<Eviction> {
    let Some(kappa) = criticals.kappa(chosen) else {
        return Vec::new();
    };
    let mut evictions = Vec::new();
    for (i, s) in state.sets.iter_mut().enumerate() {
        match s.occupant(kappa) {
            Some(f) if f == chosen => {}
            Some(f) => {
                s.remove(f);
                evictions.push(Eviction {
                    element: f,
                    set_index: i,
                    from_critical: criticals.critical[f] == Some(i),
                });
                if insert && !s.contains(chosen) {
                    s.insert(chosen, kappa);
                }
            }
            None => {
                if insert && !s.contains(chosen) {
                    s.insert(chosen, kappa);
                }
            }
        }
    }
    evictions
}

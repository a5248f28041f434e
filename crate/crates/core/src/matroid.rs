//! Matroid oracles over a ground set `0..n`, polytope membership, and
//! convex decomposition of polytope points into independent sets.
//!
//! Four variants cover everything the toolkit needs:
//!
//! * `Transversal` — elements are matched to vertices of a bipartite
//!   graph; a set is independent iff it has a perfect matching into the
//!   vertices. This is the variant the probing scheme's exchange
//!   structures are built on.
//! * `Uniform` — at most `rank` elements of a designated subset;
//!   elements outside the subset are unconstrained.
//! * `Partition` — a capacity per block of a disjoint partition.
//! * `Enumerated` — an explicit independence family, validated against
//!   the matroid axioms at construction (small ground sets only).
//!
//! Membership in the matroid polytope and convex decomposition both work
//! by explicit subset enumeration, which keeps them exact; they are
//! capped at desk scale (documented per method).

use crate::set::{self, Mask};
use crate::submodular::lp::DenseLp;
use crate::{Error, Result};

/// Ground-set cap for `in_polytope` / `enumerate_independent`.
const SUBSET_ENUM_CAP: usize = 20;
/// Support cap for `decompose` (the LP has one column per independent
/// subset of the support).
const DECOMPOSE_CAP: usize = 12;
/// Ground-set cap for the `Enumerated` variant (axiom validation is
/// quadratic in the family size).
const ENUMERATED_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub enum Matroid {
    Transversal {
        n: usize,
        vertices: usize,
        /// Adjacent vertices per element, as a mask over `0..vertices`.
        adj: Vec<Mask>,
    },
    Uniform {
        n: usize,
        subset: Mask,
        rank: usize,
    },
    Partition {
        n: usize,
        /// Disjoint blocks with capacities; elements outside every block
        /// are unconstrained.
        blocks: Vec<(Mask, usize)>,
    },
    Enumerated {
        n: usize,
        /// Sorted list of independent sets (always contains the empty set).
        family: Vec<Mask>,
    },
}

impl Matroid {
    /// A transversal matroid from an edge list `(element, vertex)`.
    pub fn transversal(n: usize, vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > 64 || vertices > 64 {
            return Err(Error::Capability(format!(
                "transversal matroid with {n} elements / {vertices} vertices exceeds the 64-bit mask"
            )));
        }
        let mut adj = vec![0u64; n];
        for &(e, v) in edges {
            if e >= n {
                return Err(Error::Domain(format!(
                    "edge ({e}, {v}) mentions element {e} outside 0..{n}"
                )));
            }
            if v >= vertices {
                return Err(Error::Domain(format!(
                    "edge ({e}, {v}) mentions vertex {v} outside 0..{vertices}"
                )));
            }
            adj[e] |= set::bit(v);
        }
        Ok(Matroid::Transversal { n, vertices, adj })
    }

    /// The uniform matroid encoded as a transversal matroid: `copies`
    /// parallel vertices, each adjacent to exactly `members`. A set is
    /// independent iff it holds at most `copies` members (elements outside
    /// `members` have no vertex and no constraint — they can never carry
    /// positive marginal in a decomposition over this matroid).
    pub fn transversal_star(n: usize, members: Mask, copies: usize) -> Result<Self> {
        if n < 64 && members >> n != 0 {
            return Err(Error::Domain(
                "star members outside the ground set".into(),
            ));
        }
        let mut edges = Vec::new();
        for e in set::iter(members) {
            for v in 0..copies {
                edges.push((e, v));
            }
        }
        Matroid::transversal(n, copies.max(1), &edges)
    }

    pub fn uniform(n: usize, subset: Mask, rank: usize) -> Result<Self> {
        if n > 64 {
            return Err(Error::Capability(format!("{n} elements exceed the mask")));
        }
        if n < 64 && subset >> n != 0 {
            return Err(Error::Domain("subset outside the ground set".into()));
        }
        Ok(Matroid::Uniform { n, subset, rank })
    }

    pub fn partition(n: usize, blocks: Vec<(Mask, usize)>) -> Result<Self> {
        if n > 64 {
            return Err(Error::Capability(format!("{n} elements exceed the mask")));
        }
        let mut seen: Mask = 0;
        for (block, _) in &blocks {
            if n < 64 && block >> n != 0 {
                return Err(Error::Domain("block outside the ground set".into()));
            }
            if block & seen != 0 {
                return Err(Error::Inconsistent("partition blocks overlap".into()));
            }
            seen |= block;
        }
        Ok(Matroid::Partition { n, blocks })
    }

    /// An explicit independence family. Validates the matroid axioms
    /// (nonempty & downward closed & exchange); ground sets above
    /// 10 elements are rejected because validation enumerates pairs.
    pub fn enumerated(n: usize, family: Vec<Mask>) -> Result<Self> {
        if n > ENUMERATED_CAP {
            return Err(Error::Capability(format!(
                "enumerated matroid on {n} > {ENUMERATED_CAP} elements"
            )));
        }
        let mut family = family;
        family.sort_unstable();
        family.dedup();
        let ground = set::full(n);
        let mut member = vec![false; 1 << n];
        for &a in &family {
            if a & !ground != 0 {
                return Err(Error::Domain(
                    "independent set outside the ground set".into(),
                ));
            }
            member[a as usize] = true;
        }
        if !member[0] {
            return Err(Error::Inconsistent(
                "independence family must contain the empty set".into(),
            ));
        }
        for &a in &family {
            for e in set::iter(a) {
                if !member[(a & !set::bit(e)) as usize] {
                    return Err(Error::Inconsistent(format!(
                        "family is not downward closed at {a:#b} minus {e}"
                    )));
                }
            }
        }
        for &a in &family {
            for &b in &family {
                if set::card(a) >= set::card(b) {
                    continue;
                }
                let ok = set::iter(b & !a).any(|e| member[(a | set::bit(e)) as usize]);
                if !ok {
                    return Err(Error::Inconsistent(format!(
                        "exchange axiom fails for {a:#b} and {b:#b}"
                    )));
                }
            }
        }
        Ok(Matroid::Enumerated { n, family })
    }

    pub fn ground_size(&self) -> usize {
        match self {
            Matroid::Transversal { n, .. }
            | Matroid::Uniform { n, .. }
            | Matroid::Partition { n, .. }
            | Matroid::Enumerated { n, .. } => *n,
        }
    }

    /// Re-encode as an equivalent transversal matroid (the probing
    /// scheme's exchange structures require one). Uniform constraints
    /// become a star of parallel vertices; partition blocks get one star
    /// each; unconstrained elements get a private vertex. `Enumerated`
    /// matroids are rejected — they need not be transversal.
    pub fn to_transversal(&self) -> Result<Matroid> {
        match self {
            Matroid::Transversal { .. } => Ok(self.clone()),
            Matroid::Uniform { n, subset, rank } => {
                let n = *n;
                let mut edges = Vec::new();
                let mut vertices = *rank;
                for e in set::iter(subset & set::full(n)) {
                    for v in 0..*rank {
                        edges.push((e, v));
                    }
                }
                for e in 0..n {
                    if !set::contains(*subset, e) {
                        edges.push((e, vertices));
                        vertices += 1;
                    }
                }
                Matroid::transversal(n, vertices.max(1), &edges)
            }
            Matroid::Partition { n, blocks } => {
                let n = *n;
                let mut edges = Vec::new();
                let mut vertices = 0;
                let mut covered: Mask = 0;
                for (block, cap) in blocks {
                    covered |= block;
                    for e in set::iter(*block) {
                        for v in vertices..vertices + cap {
                            edges.push((e, v));
                        }
                    }
                    vertices += cap;
                }
                for e in 0..n {
                    if !set::contains(covered, e) {
                        edges.push((e, vertices));
                        vertices += 1;
                    }
                }
                Matroid::transversal(n, vertices.max(1), &edges)
            }
            Matroid::Enumerated { .. } => Err(Error::Capability(
                "enumerated matroids have no transversal encoding here".into(),
            )),
        }
    }

    fn check_subset(&self, s: Mask) -> Result<()> {
        let n = self.ground_size();
        if n < 64 && s >> n != 0 {
            return Err(Error::Domain(format!(
                "set {s:#b} mentions elements outside 0..{n}"
            )));
        }
        Ok(())
    }

    pub fn is_independent(&self, s: Mask) -> Result<bool> {
        self.check_subset(s)?;
        Ok(match self {
            Matroid::Transversal { adj, vertices, .. } => {
                let elems = set::to_vec(s);
                matching_size(adj, *vertices, &elems) == elems.len()
            }
            Matroid::Uniform { subset, rank, .. } => set::card(s & subset) <= *rank,
            Matroid::Partition { blocks, .. } => blocks
                .iter()
                .all(|(block, cap)| set::card(s & block) <= *cap),
            Matroid::Enumerated { family, .. } => family.binary_search(&s).is_ok(),
        })
    }

    pub fn rank(&self, s: Mask) -> Result<usize> {
        self.check_subset(s)?;
        Ok(match self {
            Matroid::Transversal { adj, vertices, .. } => {
                matching_size(adj, *vertices, &set::to_vec(s))
            }
            Matroid::Uniform { subset, rank, .. } => {
                set::card(s & subset).min(*rank) + set::card(s & !subset)
            }
            Matroid::Partition { blocks, .. } => {
                let mut covered: Mask = 0;
                let mut r = 0;
                for (block, cap) in blocks {
                    covered |= block;
                    r += set::card(s & block).min(*cap);
                }
                r + set::card(s & !covered)
            }
            Matroid::Enumerated { family, .. } => {
                // Greedy works in a matroid; membership is a binary search.
                let mut cur: Mask = 0;
                for e in set::iter(s) {
                    if family.binary_search(&(cur | set::bit(e))).is_ok() {
                        cur |= set::bit(e);
                    }
                }
                set::card(cur)
            }
        })
    }

    /// Is `y` in the independent-set polytope (all rank constraints and
    /// `y >= 0`)? Exact by subset enumeration over the support of `y`;
    /// supports beyond 20 elements are a capability error. Coordinates
    /// more negative than `-1e-9` are a domain error; rank constraints
    /// are checked with a `1e-9` slack.
    pub fn in_polytope(&self, y: &[f64]) -> Result<bool> {
        Ok(self.polytope_violation(y)?.is_none())
    }

    /// The first violated rank constraint, if any: `(subset, sum, rank)`.
    pub fn polytope_violation(&self, y: &[f64]) -> Result<Option<(Mask, f64, usize)>> {
        let n = self.ground_size();
        if y.len() != n {
            return Err(Error::Inconsistent(format!(
                "point has {} coordinates, matroid has {n}",
                y.len()
            )));
        }
        let mut supp: Mask = 0;
        for (e, &v) in y.iter().enumerate() {
            if !v.is_finite() || v < -1e-9 {
                return Err(Error::Domain(format!("coordinate y[{e}] = {v}")));
            }
            if v > 0.0 {
                supp |= set::bit(e);
            }
        }
        if set::card(supp) > SUBSET_ENUM_CAP {
            return Err(Error::Capability(format!(
                "support of {} elements exceeds the enumeration cap {SUBSET_ENUM_CAP}",
                set::card(supp)
            )));
        }
        // Restricting to the support is exact: a violated constraint stays
        // violated after dropping zero coordinates, and rank is monotone.
        for a in set::subsets(supp) {
            if a == 0 {
                continue;
            }
            let sum: f64 = set::iter(a).map(|e| y[e]).sum();
            let r = self.rank(a)?;
            if sum > r as f64 + 1e-9 {
                return Ok(Some((a, sum, r)));
            }
        }
        Ok(None)
    }

    /// All independent subsets of `within`, ascending as masks. Capped at
    /// 20 elements.
    pub fn enumerate_independent(&self, within: Mask) -> Result<Vec<Mask>> {
        self.check_subset(within)?;
        if set::card(within) > SUBSET_ENUM_CAP {
            return Err(Error::Capability(format!(
                "enumeration over {} elements exceeds the cap {SUBSET_ENUM_CAP}",
                set::card(within)
            )));
        }
        let elems = set::to_vec(within);
        let k = elems.len();
        let mut out = Vec::new();
        // Walk compressed masks; downward closure prunes the oracle calls.
        let mut indep = vec![false; 1usize << k];
        for cm in 0..(1usize << k) {
            if cm != 0 {
                let low = cm & cm.wrapping_neg();
                if !indep[cm & !low] {
                    continue;
                }
            }
            let full: Mask = (0..k)
                .filter(|&i| cm >> i & 1 == 1)
                .map(|i| set::bit(elems[i]))
                .sum();
            if self.is_independent(full)? {
                indep[cm] = true;
                out.push(full);
            }
        }
        Ok(out)
    }

    /// Independence of every subset of the ground set as a lookup table
    /// (index = mask). Capped at 20 elements.
    pub fn independence_table(&self) -> Result<Vec<bool>> {
        let n = self.ground_size();
        if n > SUBSET_ENUM_CAP {
            return Err(Error::Capability(format!(
                "table over {n} elements exceeds the cap {SUBSET_ENUM_CAP}"
            )));
        }
        let mut table = vec![false; 1usize << n];
        table[0] = true;
        for m in 1..(1u64 << n) {
            let low = m & m.wrapping_neg();
            if table[(m & !low) as usize] {
                table[m as usize] = self.is_independent(m)?;
            }
        }
        Ok(table)
    }

    /// Write `y` as a convex combination of (indicator vectors of)
    /// independent sets. The combination uses at most `|support| + 1`
    /// sets (it comes from a basic solution of the feasibility LP) and
    /// reproduces `y` coordinatewise within `1e-9`.
    ///
    /// Errors: a point outside the polytope is `Infeasible` (naming the
    /// violated rank constraint), supports beyond 12 elements are a
    /// capability error.
    pub fn decompose(&self, y: &[f64]) -> Result<ConvexDecomposition> {
        if let Some((a, sum, r)) = self.polytope_violation(y)? {
            return Err(Error::Infeasible(format!(
                "rank constraint violated on {:?}: sum {sum:.12} > rank {r}",
                set::to_vec(a)
            )));
        }
        let n = self.ground_size();
        let supp: Mask = y
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-12)
            .map(|(e, _)| set::bit(e))
            .sum();
        if set::card(supp) > DECOMPOSE_CAP {
            return Err(Error::Capability(format!(
                "decomposition support {} exceeds the cap {DECOMPOSE_CAP}",
                set::card(supp)
            )));
        }
        let family = self.enumerate_independent(supp)?;
        let cols = family.len();
        let mut lp = DenseLp::new(cols);
        // One marginal equality per support element, plus total mass one.
        for e in set::iter(supp) {
            let row: Vec<f64> = family
                .iter()
                .map(|&b| if set::contains(b, e) { 1.0 } else { 0.0 })
                .collect();
            lp.add_eq(row, y[e]);
        }
        lp.add_eq(vec![1.0; cols], 1.0);
        let sol = lp.solve().map_err(|err| match err {
            Error::Infeasible(msg) => Error::Infeasible(format!(
                "no convex decomposition (point should be in the polytope): {msg}"
            )),
            other => other,
        })?;
        let mut terms: Vec<(f64, Mask)> = sol
            .x
            .iter()
            .zip(&family)
            .filter(|(&beta, _)| beta > 1e-12)
            .map(|(&beta, &b)| (beta, b))
            .collect();
        terms.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let dec = ConvexDecomposition { n, terms };
        dec.verify(y, 1e-9)?;
        Ok(dec)
    }
}

/// A convex combination of independent sets: `sum beta_B * 1_B = y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDecomposition {
    n: usize,
    /// `(weight, set)` pairs with positive weights summing to one.
    pub terms: Vec<(f64, Mask)>,
}

impl ConvexDecomposition {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    /// The marginal this combination puts on element `e`.
    pub fn marginal(&self, e: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(_, b)| set::contains(*b, e))
            .map(|(beta, _)| beta)
            .sum()
    }

    /// Check that the combination reproduces `y` within `tol` and the
    /// weights form a distribution.
    pub fn verify(&self, y: &[f64], tol: f64) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::Inconsistent("dimension mismatch".into()));
        }
        let total: f64 = self.terms.iter().map(|(beta, _)| beta).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::Inconsistent(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for (e, &ye) in y.iter().enumerate() {
            let got = self.marginal(e);
            if (got - ye).abs() > tol {
                return Err(Error::Inconsistent(format!(
                    "marginal of element {e} is {got}, expected {ye}"
                )));
            }
        }
        Ok(())
    }
}

/// Size of a maximum matching of `elems` into vertices, processing
/// elements in the given order and scanning vertices in ascending order
/// (so results are deterministic).
fn matching_size(adj: &[Mask], vertices: usize, elems: &[usize]) -> usize {
    match_elements(adj, vertices, elems)
        .iter()
        .filter(|v| v.is_some())
        .count()
}

/// Kuhn's augmenting-path matching. Returns, per element of `elems`, the
/// vertex it ends up matched to (or `None`). Deterministic: elements are
/// processed in slice order, vertices tried lowest-index first.
pub(crate) fn match_elements(adj: &[Mask], vertices: usize, elems: &[usize]) -> Vec<Option<usize>> {
    let k = elems.len();
    let mut vertex_owner: Vec<Option<usize>> = vec![None; vertices]; // index into elems
    for i in 0..k {
        let mut visited: Mask = 0;
        try_augment(adj, elems, i, &mut vertex_owner, &mut visited);
    }
    let mut out = vec![None; k];
    for (v, owner) in vertex_owner.iter().enumerate() {
        if let Some(i) = owner {
            out[*i] = Some(v);
        }
    }
    out
}

fn try_augment(
    adj: &[Mask],
    elems: &[usize],
    i: usize,
    vertex_owner: &mut [Option<usize>],
    visited: &mut Mask,
) -> bool {
    for v in set::iter(adj[elems[i]] & !*visited) {
        *visited |= set::bit(v);
        if vertex_owner[v].is_none()
            || try_augment(adj, elems, vertex_owner[v].unwrap(), vertex_owner, visited)
        {
            vertex_owner[v] = Some(i);
            return true;
        }
    }
    false
}

//! Nonnegative submodular objectives, their multilinear extension, a
//! concave LP upper extension, and order-based pruning.
//!
//! Desk-scale exactness is the point: the multilinear extension is
//! computed by full enumeration (capped at 20 elements), and the concave
//! extension is the optimum of a small LP with one column per subset of
//! the support (capped at 12). The LP solver itself lives in [`lp`].

pub mod lp;

use crate::set::{self, Mask};
use crate::{Error, Result};
use lp::DenseLp;
use rand::Rng;

/// Ground-set cap for exact enumeration (`value_table`, `Multilinear`).
const ENUM_CAP: usize = 20;
/// Support cap for the concave extension LP (one column per subset).
const FPLUS_CAP: usize = 12;
/// Submodularity of explicit tables is verified exhaustively up to here.
const TABLE_CHECK_CAP: usize = 8;

/// A nonnegative submodular set function with `f(empty) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum SubmodularFunction {
    /// Explicit table indexed by subset mask.
    Table { n: usize, values: Vec<f64> },
    /// `f(S) = sum of weights over S` (modular, nonnegative weights).
    Linear { weights: Vec<f64> },
    /// Weighted coverage: `f(S) = weight of the union of covers[e], e in S`.
    Coverage {
        n: usize,
        item_weights: Vec<f64>,
        covers: Vec<Mask>,
    },
    /// Weighted directed cut: arcs `(u, v, w)` with `u in S`, `v not in S`.
    DirectedCut {
        n: usize,
        arcs: Vec<(usize, usize, f64)>,
    },
    /// Weighted undirected cut.
    UndirectedCut {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
    },
}

impl SubmodularFunction {
    /// An explicit table over `2^n` subsets. Requires `f(empty) = 0`,
    /// nonnegative finite entries, and (for `n <= 8`, where the check is
    /// exhaustive) submodularity; larger tables are accepted unchecked.
    pub fn table(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > ENUM_CAP {
            return Err(Error::Capability(format!(
                "table over {n} > {ENUM_CAP} elements"
            )));
        }
        if values.len() != 1 << n {
            return Err(Error::Inconsistent(format!(
                "table has {} entries, expected {}",
                values.len(),
                1u64 << n
            )));
        }
        for (m, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::Domain(format!("f({m:#b}) = {v} is not nonnegative")));
            }
        }
        if values[0].abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "f(empty) = {} must be zero",
                values[0]
            )));
        }
        let mut values = values;
        values[0] = 0.0;
        if n <= TABLE_CHECK_CAP {
            check_submodular(n, |s| values[s as usize])?;
        }
        Ok(SubmodularFunction::Table { n, values })
    }

    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        for (e, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("weight[{e}] = {w}")));
            }
        }
        Ok(SubmodularFunction::Linear { weights })
    }

    pub fn coverage(n: usize, item_weights: Vec<f64>, covers: Vec<Mask>) -> Result<Self> {
        if covers.len() != n {
            return Err(Error::Inconsistent(format!(
                "{} cover sets for {n} elements",
                covers.len()
            )));
        }
        let items = item_weights.len();
        if items > 64 {
            return Err(Error::Capability("more than 64 coverage items".into()));
        }
        for (i, &w) in item_weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("item weight[{i}] = {w}")));
            }
        }
        for (e, &c) in covers.iter().enumerate() {
            if items < 64 && c >> items != 0 {
                return Err(Error::Domain(format!(
                    "cover of element {e} mentions items outside 0..{items}"
                )));
            }
        }
        Ok(SubmodularFunction::Coverage {
            n,
            item_weights,
            covers,
        })
    }

    pub fn cut_directed(n: usize, arcs: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(u, v, w) in &arcs {
            if u >= n || v >= n || u == v {
                return Err(Error::Domain(format!("bad arc ({u}, {v})")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("arc weight {w}")));
            }
        }
        Ok(SubmodularFunction::DirectedCut { n, arcs })
    }

    pub fn cut_undirected(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(u, v, w) in &edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Domain(format!("bad edge ({u}, {v})")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("edge weight {w}")));
            }
        }
        Ok(SubmodularFunction::UndirectedCut { n, edges })
    }

    pub fn ground_size(&self) -> usize {
        match self {
            SubmodularFunction::Table { n, .. }
            | SubmodularFunction::Coverage { n, .. }
            | SubmodularFunction::DirectedCut { n, .. }
            | SubmodularFunction::UndirectedCut { n, .. } => *n,
            SubmodularFunction::Linear { weights } => weights.len(),
        }
    }

    /// `f(S)`. Panics if `S` mentions elements outside the ground set:
    /// callers hold validated masks.
    pub fn value(&self, s: Mask) -> f64 {
        let n = self.ground_size();
        assert!(
            n == 64 || s >> n == 0,
            "set {s:#b} outside ground 0..{n}"
        );
        match self {
            SubmodularFunction::Table { values, .. } => values[s as usize],
            SubmodularFunction::Linear { weights } => set::iter(s).map(|e| weights[e]).sum(),
            SubmodularFunction::Coverage {
                item_weights,
                covers,
                ..
            } => {
                let mut covered: Mask = 0;
                for e in set::iter(s) {
                    covered |= covers[e];
                }
                set::iter(covered).map(|i| item_weights[i]).sum()
            }
            SubmodularFunction::DirectedCut { arcs, .. } => arcs
                .iter()
                .filter(|&&(u, v, _)| set::contains(s, u) && !set::contains(s, v))
                .map(|&(_, _, w)| w)
                .sum(),
            SubmodularFunction::UndirectedCut { edges, .. } => edges
                .iter()
                .filter(|&&(u, v, _)| set::contains(s, u) != set::contains(s, v))
                .map(|&(_, _, w)| w)
                .sum(),
        }
    }

    /// Marginal `f(S + e) - f(S)`.
    pub fn marginal(&self, s: Mask, e: usize) -> f64 {
        self.value(s | set::bit(e)) - self.value(s)
    }

    /// All `2^n` values as a mask-indexed table (capped at 20 elements).
    pub fn value_table(&self) -> Result<Vec<f64>> {
        let n = self.ground_size();
        if n > ENUM_CAP {
            return Err(Error::Capability(format!(
                "value table over {n} > {ENUM_CAP} elements"
            )));
        }
        Ok((0..1u64 << n).map(|m| self.value(m)).collect())
    }

    /// A cheap upper bound on `max_S f(S)`, used to scale statistical
    /// confidence intervals.
    pub fn upper_bound(&self) -> f64 {
        match self {
            SubmodularFunction::Table { values, .. } => {
                values.iter().cloned().fold(0.0, f64::max)
            }
            SubmodularFunction::Linear { weights } => weights.iter().sum(),
            SubmodularFunction::Coverage { item_weights, .. } => item_weights.iter().sum(),
            SubmodularFunction::DirectedCut { arcs, .. } => {
                arcs.iter().map(|&(_, _, w)| w).sum()
            }
            SubmodularFunction::UndirectedCut { edges, .. } => {
                edges.iter().map(|&(_, _, w)| w).sum()
            }
        }
    }

    /// Is the function monotone? Exhaustive, capped at 20 elements.
    pub fn is_monotone(&self) -> Result<bool> {
        let n = self.ground_size();
        let table = self.value_table()?;
        for m in 0..1u64 << n {
            for e in 0..n {
                if !set::contains(m, e) && table[(m | set::bit(e)) as usize] < table[m as usize] - 1e-12
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Verify the diminishing-returns inequality exhaustively.
fn check_submodular(n: usize, f: impl Fn(Mask) -> f64) -> Result<()> {
    for m in 0..1u64 << n {
        for e in 0..n {
            if set::contains(m, e) {
                continue;
            }
            for g in (e + 1)..n {
                if set::contains(m, g) {
                    continue;
                }
                let be = set::bit(e);
                let bg = set::bit(g);
                // f(S+e) - f(S) >= f(S+g+e) - f(S+g)
                let lhs = f(m | be) - f(m);
                let rhs = f(m | bg | be) - f(m | bg);
                if lhs + 1e-9 < rhs {
                    return Err(Error::Inconsistent(format!(
                        "not submodular: adding {e} to {m:#b} vs to {:#b}",
                        m | bg
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Exact multilinear extension `F(y) = E[f(R(y))]` by enumeration.
///
/// Construction precomputes the full value table, so repeated evaluations
/// (the continuous-greedy inner loop) cost `O(2^n)` each.
#[derive(Clone, Debug)]
pub struct Multilinear {
    n: usize,
    table: Vec<f64>,
    /// Scratch for the weight cascade, reused across evaluations.
    weights: std::cell::RefCell<Vec<f64>>,
}

impl Multilinear {
    pub fn new(f: &SubmodularFunction) -> Result<Self> {
        let n = f.ground_size();
        let table = f.value_table()?;
        Ok(Multilinear {
            n,
            table,
            weights: std::cell::RefCell::new(vec![0.0; 1 << n]),
        })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    /// `F(y)`. Coordinates must lie in `[0, 1]`.
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let n = self.n;
        if y.len() != n {
            return Err(Error::Inconsistent("dimension mismatch".into()));
        }
        for (e, &v) in y.iter().enumerate() {
            if !(0.0..=1.0 + 1e-12).contains(&v) || !v.is_finite() {
                return Err(Error::Domain(format!("y[{e}] = {v} outside [0, 1]")));
            }
        }
        let mut w = self.weights.borrow_mut();
        // Cascade the product measure over elements: after step e the
        // first 2^(e+1) cells hold the probabilities of masks over 0..=e.
        w[0] = 1.0;
        for (e, &ye) in y.iter().enumerate() {
            let ye = ye.clamp(0.0, 1.0);
            let half = 1usize << e;
            for m in (0..half).rev() {
                let base = w[m];
                w[m | half] = base * ye;
                w[m] = base * (1.0 - ye);
            }
        }
        Ok(w.iter().zip(&self.table).map(|(wi, fi)| wi * fi).sum())
    }

    /// The vector of upgrades `F(y or 1_e) - F(y)` for all `e`.
    pub fn upgrade_marginals(&self, y: &[f64]) -> Result<Vec<f64>> {
        let base = self.eval(y)?;
        let mut out = Vec::with_capacity(self.n);
        let mut y1 = y.to_vec();
        for e in 0..self.n {
            let saved = y1[e];
            y1[e] = 1.0;
            out.push(self.eval(&y1)? - base);
            y1[e] = saved;
        }
        Ok(out)
    }
}

/// Monte-Carlo estimate of `F(y)`: `(mean, standard error)` over
/// `samples` independent draws of `R(y)`.
pub fn multilinear_sampled<R: Rng>(
    f: &SubmodularFunction,
    y: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::Domain("samples must be positive".into()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let r = crate::model::sample_r_of_x(y, rng)?;
        let v = f.value(r);
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sumsq / samples as f64 - mean * mean).max(0.0);
    let stderr = (var / samples as f64).sqrt();
    Ok((mean, stderr))
}

/// The concave upper extension at `y` together with the optimal
/// distribution witnessing it.
#[derive(Clone, Debug)]
pub struct FPlus {
    pub value: f64,
    /// `(alpha_A, A)` with positive weights; `sum alpha <= 1` and the
    /// per-element marginals are at most `y`.
    pub alpha: Vec<(f64, Mask)>,
}

/// `f+(y)`: maximize `sum alpha_A f(A)` over distributions with total
/// mass at most one and per-element marginals at most `y`. Always at
/// least the multilinear extension at `y`. Support is capped at 12
/// elements.
pub fn f_plus(f: &SubmodularFunction, y: &[f64]) -> Result<FPlus> {
    let n = f.ground_size();
    if y.len() != n {
        return Err(Error::Inconsistent("dimension mismatch".into()));
    }
    let mut supp_elems = Vec::new();
    for (e, &v) in y.iter().enumerate() {
        if !v.is_finite() || !(0.0..=1.0 + 1e-12).contains(&v) {
            return Err(Error::Domain(format!("y[{e}] = {v} outside [0, 1]")));
        }
        if v > 0.0 {
            supp_elems.push(e);
        }
    }
    if supp_elems.len() > FPLUS_CAP {
        return Err(Error::Capability(format!(
            "support of {} elements exceeds the cap {FPLUS_CAP}",
            supp_elems.len()
        )));
    }
    // Columns: all subsets of the support (zero coordinates force zero
    // weight on any set containing them, so this restriction is exact).
    let k = supp_elems.len();
    let cols = 1usize << k;
    let expand = |cm: usize| -> Mask {
        let mut m = 0;
        for (i, &e) in supp_elems.iter().enumerate() {
            if cm >> i & 1 == 1 {
                m |= set::bit(e);
            }
        }
        m
    };
    let sets: Vec<Mask> = (0..cols).map(expand).collect();
    let mut lp = DenseLp::new(cols);
    lp.maximize(sets.iter().map(|&a| f.value(a)).collect());
    lp.add_le(vec![1.0; cols], 1.0);
    for (i, &e) in supp_elems.iter().enumerate() {
        let row: Vec<f64> = (0..cols)
            .map(|cm| if cm >> i & 1 == 1 { 1.0 } else { 0.0 })
            .collect();
        lp.add_le(row, y[e]);
    }
    let sol = lp.solve()?;
    let mut alpha: Vec<(f64, Mask)> = sol
        .x
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 1e-12)
        .map(|(cm, &a)| (a, sets[cm]))
        .collect();
    alpha.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(FPlus {
        value: sol.value,
        alpha,
    })
}

/// Order-based pruning: scan the members of `s` in the given element
/// order, keeping an element only when its marginal gain on the kept
/// prefix is nonnegative. For submodular `f`, `f(prune) >= f(s)`.
///
/// `order` must be a permutation of the ground set (panics otherwise).
pub fn prune_eta(f: &SubmodularFunction, s: Mask, order: &[usize]) -> Mask {
    let n = f.ground_size();
    assert_eq!(order.len(), n, "order must list every element once");
    debug_assert!(
        {
            let mut seen = vec![false; n];
            order.iter().all(|&e| {
                e < n && !std::mem::replace(&mut seen[e], true)
            })
        },
        "order must be a permutation of 0..{n}"
    );
    let mut kept: Mask = 0;
    for &e in order {
        if set::contains(s, e) && f.marginal(kept, e) >= 0.0 {
            kept |= set::bit(e);
        }
    }
    kept
}

//! Brute-force and statistical oracles.
//!
//! Everything the statistical experiments lean on lives here: exact
//! optimal adaptive probing values by dynamic programming over
//! (probed, active) pairs, the LP-based relaxation-dominance check,
//! Hoeffding confidence intervals, a two-sample chi-square equality
//! test, and exact (enumerated) balance values for permutation-greedy
//! contention resolution at tiny scale. All exact routines carry hard
//! ground-set caps and return capability errors beyond them.

use crate::matroid::Matroid;
use crate::model::ProbingInstance;
use crate::set::{self, Mask};
use crate::submodular::f_plus;
use crate::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::{BTreeMap, HashMap};

/// Ground-set cap for the adaptive-optimum DP (states are 3^n).
const DP_CAP: usize = 10;
/// Ground-set cap for exact permutation-greedy balance values.
const PERMUTATION_CAP: usize = 6;

/// What one element did at one step of a scheme run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PickKind {
    /// A real probe of an available element.
    Probe { active: bool },
    /// A simulated probe forced by the pruning criterion (the element was
    /// available; on success it is kept virtually, not committed).
    PrunedSimulation { active: bool },
    /// A simulated probe of an unavailable element (a fresh coin; drives
    /// evictions only).
    UnavailableSimulation { active: bool },
}

impl PickKind {
    pub fn active(&self) -> bool {
        match *self {
            PickKind::Probe { active }
            | PickKind::PrunedSimulation { active }
            | PickKind::UnavailableSimulation { active } => active,
        }
    }
}

/// Step-by-step record of one scheme run: which element was picked at
/// each step and with what role, plus per-element first-probe and
/// unavailability step indices.
#[derive(Clone, Debug)]
pub struct ProcessTrace {
    pub picks: Vec<(usize, PickKind)>,
    pub probed_at: Vec<Option<u32>>,
    pub unavailable_at: Vec<Option<u32>>,
}

impl ProcessTrace {
    pub fn new(n: usize) -> Self {
        ProcessTrace {
            picks: Vec::new(),
            probed_at: vec![None; n],
            unavailable_at: vec![None; n],
        }
    }

    pub fn steps(&self) -> usize {
        self.picks.len()
    }

    pub fn was_probed(&self, e: usize) -> bool {
        self.probed_at[e].is_some()
    }

    /// The step at which `e` stopped being available (probed or blocked).
    pub fn stopping_time(&self, e: usize) -> Option<u32> {
        self.unavailable_at[e]
    }
}

/// Value of the best adaptive probing policy, along with the probability
/// that it probes each element (its probe marginals).
#[derive(Clone, Debug)]
pub struct PolicyValue {
    pub value: f64,
    pub probe_marginals: Vec<f64>,
}

/// Exact optimum over all adaptive probing policies by memoized dynamic
/// programming on (probed set, active subset). A policy may stop any
/// time; probing `e` is allowed only if the probed set stays independent
/// in every outer constraint and a success would keep the success set
/// independent in every inner constraint (commitment: successes cannot
/// be discarded). Capped at 10 elements.
///
/// The probe marginals come from a deterministic optimal policy: ties
/// prefer stopping, then the lowest-index element.
pub fn brute_force_opt(instance: &ProbingInstance) -> Result<PolicyValue> {
    let n = instance.n();
    if n > DP_CAP {
        return Err(Error::Capability(format!(
            "adaptive optimum DP over {n} > {DP_CAP} elements"
        )));
    }
    let inner: Vec<Vec<bool>> = instance
        .inner
        .iter()
        .map(|m| m.independence_table())
        .collect::<Result<_>>()?;
    let outer: Vec<Vec<bool>> = instance
        .outer
        .iter()
        .map(|m| m.independence_table())
        .collect::<Result<_>>()?;
    let fvals = instance.objective.value_table()?;
    let ok = |tables: &[Vec<bool>], s: Mask| tables.iter().all(|t| t[s as usize]);

    let mut memo: HashMap<(Mask, Mask), f64> = HashMap::new();
    let full = set::full(n);

    fn value(
        probed: Mask,
        active: Mask,
        n: usize,
        full: Mask,
        p: &[f64],
        fvals: &[f64],
        inner: &[Vec<bool>],
        outer: &[Vec<bool>],
        memo: &mut HashMap<(Mask, Mask), f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&(probed, active)) {
            return v;
        }
        let ok = |tables: &[Vec<bool>], s: Mask| tables.iter().all(|t| t[s as usize]);
        let mut best = fvals[active as usize];
        for e in set::iter(full & !probed) {
            let be = set::bit(e);
            if !ok(outer, probed | be) || !ok(inner, active | be) {
                continue;
            }
            let hit = value(probed | be, active | be, n, full, p, fvals, inner, outer, memo);
            let miss = value(probed | be, active, n, full, p, fvals, inner, outer, memo);
            let v = p[e] * hit + (1.0 - p[e]) * miss;
            if v > best {
                best = v;
            }
        }
        memo.insert((probed, active), best);
        best
    }

    let opt = value(
        0, 0, n, full, &instance.p, &fvals, &inner, &outer, &mut memo,
    );

    // Forward pass under a deterministic optimal policy. States are
    // grouped by probed-set size so each is expanded once with its full
    // reach probability.
    let mut probe_marginals = vec![0.0; n];
    let mut layer: BTreeMap<(Mask, Mask), f64> = BTreeMap::new();
    layer.insert((0, 0), 1.0);
    while let Some(((probed, active), reach)) = layer.pop_first() {
        if reach == 0.0 {
            continue;
        }
        let stop = fvals[active as usize];
        let mut action: Option<(usize, f64)> = None;
        let mut best = stop + 1e-12; // strict improvement beats stopping
        for e in set::iter(full & !probed) {
            let be = set::bit(e);
            if !ok(&outer, probed | be) || !ok(&inner, active | be) {
                continue;
            }
            let hit = memo[&(probed | be, active | be)];
            let miss = memo[&(probed | be, active)];
            let v = instance.p[e] * hit + (1.0 - instance.p[e]) * miss;
            if v > best {
                best = v;
                action = Some((e, v));
            }
        }
        if let Some((e, _)) = action {
            let be = set::bit(e);
            probe_marginals[e] += reach;
            *layer.entry((probed | be, active | be)).or_insert(0.0) += reach * instance.p[e];
            *layer.entry((probed | be, active)).or_insert(0.0) += reach * (1.0 - instance.p[e]);
        }
    }

    Ok(PolicyValue {
        value: opt,
        probe_marginals,
    })
}

/// Outcome of checking the relaxation upper bound against the exact
/// adaptive optimum on one instance.
#[derive(Clone, Debug)]
pub struct RelaxationReport {
    pub opt_value: f64,
    pub probe_marginals: Vec<f64>,
    /// `f+` evaluated at the optimal policy's success marginals
    /// (probe marginals scaled by activation probabilities).
    pub f_plus_at_marginals: f64,
    /// Are the probe marginals inside every outer polytope and the
    /// success marginals inside every inner polytope?
    pub marginals_feasible: bool,
    /// `f_plus_at_marginals >= opt_value - 1e-7`.
    pub holds: bool,
}

/// Verify that the concave relaxation dominates the adaptive optimum:
/// the optimal policy's probe marginals give a feasible point whose
/// `f+` value is at least the policy's expected outcome.
pub fn verify_relaxation_bound(instance: &ProbingInstance) -> Result<RelaxationReport> {
    let opt = brute_force_opt(instance)?;
    let z = instance.scale_by_p(&opt.probe_marginals);
    let fp = f_plus(&instance.objective, &z)?;
    let mut feasible = true;
    for m in &instance.outer {
        feasible &= m.in_polytope(&opt.probe_marginals)?;
    }
    for m in &instance.inner {
        feasible &= m.in_polytope(&z)?;
    }
    Ok(RelaxationReport {
        opt_value: opt.value,
        probe_marginals: opt.probe_marginals,
        f_plus_at_marginals: fp.value,
        marginals_feasible: feasible,
        holds: fp.value >= opt.value - 1e-7,
    })
}

/// Two-sided Hoeffding confidence half-width for the mean of `samples`
/// i.i.d. observations in `[0, 1]`, at the given confidence level
/// (e.g. `0.99`). Scale by the observation range for wider-valued data.
pub fn hoeffding_ci(samples: usize, level: f64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Domain("no samples".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Domain(format!("confidence level {level}")));
    }
    Ok(((2.0 / (1.0 - level)).ln() / (2.0 * samples as f64)).sqrt())
}

/// Result of the two-sample chi-square equality test.
#[derive(Clone, Debug)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-sample chi-square test that two histograms (same bin layout) come
/// from the same distribution. Bins empty in both samples are dropped.
pub fn chi_square_equal(a: &[u64], b: &[u64]) -> Result<ChiSquareResult> {
    if a.len() != b.len() {
        return Err(Error::Inconsistent(format!(
            "histograms have {} and {} bins",
            a.len(),
            b.len()
        )));
    }
    let n1: u64 = a.iter().sum();
    let n2: u64 = b.iter().sum();
    if n1 == 0 || n2 == 0 {
        return Err(Error::Domain("empty sample".into()));
    }
    let k1 = (n2 as f64 / n1 as f64).sqrt();
    let k2 = (n1 as f64 / n2 as f64).sqrt();
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&ai, &bi) in a.iter().zip(b) {
        if ai + bi == 0 {
            continue;
        }
        used += 1;
        let d = k1 * ai as f64 - k2 * bi as f64;
        statistic += d * d / (ai + bi) as f64;
    }
    if used <= 1 {
        return Ok(ChiSquareResult {
            statistic,
            df: 0,
            p_value: 1.0,
        });
    }
    let df = used - 1;
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::Domain(format!("chi-square with df {df}: {e}")))?;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// All permutations of a small slice.
fn permutations(elems: &[usize]) -> Vec<Vec<usize>> {
    if elems.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &e) in elems.iter().enumerate() {
        let mut rest: Vec<usize> = elems.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            let mut perm = Vec::with_capacity(elems.len());
            perm.push(e);
            perm.append(&mut tail);
            out.push(perm);
        }
    }
    out
}

/// Exact balance of the permutation-greedy contention resolution scheme
/// at point `z` for element `e`: the probability, over `R(z)` conditioned
/// on `e in R(z)` and a uniformly random scan order, that greedily
/// packing the feasible prefix keeps `e`. Feasibility is independence in
/// every listed matroid. Exact by full enumeration; supports of more
/// than 6 elements are a capability error.
pub fn permutation_greedy_balance(matroids: &[Matroid], z: &[f64], e: usize) -> Result<f64> {
    let n = z.len();
    if e >= n {
        return Err(Error::Domain(format!("element {e} outside 0..{n}")));
    }
    for (i, &v) in z.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(Error::Domain(format!("z[{i}] = {v} outside [0, 1]")));
        }
    }
    if z[e] <= 0.0 {
        return Err(Error::Domain(format!(
            "balance of element {e} with z[{e}] = 0 is undefined"
        )));
    }
    let others: Vec<usize> = (0..n).filter(|&f| f != e && z[f] > 0.0).collect();
    if others.len() + 1 > PERMUTATION_CAP {
        return Err(Error::Capability(format!(
            "support of {} elements exceeds the exact-balance cap {PERMUTATION_CAP}",
            others.len() + 1
        )));
    }
    let mut total = 0.0;
    let others_mask = set::from_elems(others.iter().copied());
    for a in set::subsets(others_mask) {
        let mut w = 1.0;
        for &f in &others {
            w *= if set::contains(a, f) { z[f] } else { 1.0 - z[f] };
        }
        if w == 0.0 {
            continue;
        }
        let members: Vec<usize> = set::to_vec(a | set::bit(e));
        let perms = permutations(&members);
        let mut kept = 0usize;
        for perm in &perms {
            let mut t: Mask = 0;
            for &g in perm {
                let cand = t | set::bit(g);
                let feas = matroids
                    .iter()
                    .map(|m| m.is_independent(cand))
                    .collect::<Result<Vec<bool>>>()?
                    .into_iter()
                    .all(|b| b);
                if feas {
                    t = cand;
                }
            }
            if set::contains(t, e) {
                kept += 1;
            }
        }
        total += w * kept as f64 / perms.len() as f64;
    }
    Ok(total)
}

/// The balance constant of the permutation-greedy scheme at `z`: the
/// minimum conditional keep probability over the support.
pub fn min_permutation_greedy_balance(matroids: &[Matroid], z: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut any = false;
    for (e, &v) in z.iter().enumerate() {
        if v > 0.0 {
            any = true;
            best = best.min(permutation_greedy_balance(matroids, z, e)?);
        }
    }
    if !any {
        return Err(Error::Domain("z has empty support".into()));
    }
    Ok(best)
}

//! Stochastic k-set packing.
//!
//! Columns occupy up to `k` of `d` capacitated coordinates; probing a
//! column reveals a correlated draw of (value, occupied units) from its
//! outcome table and commits it unconditionally — there is no
//! success/failure gate. The resolution scheme runs one support-set
//! exchange structure per coordinate (a uniform matroid of rank `b_j`
//! encoded as parallel vertices) and guarantees every column is probed
//! with probability at least `x_e / (k + 1)` while the realized loads
//! never exceed the capacities.

use crate::exchange::{
    build_initial_state, choose_critical_sets, update_state, CriticalAssignment, SupportState,
};
use crate::matroid::Matroid;
use crate::model::{sample_r_of_x, uniform_member};
use crate::set::{self, Mask};
use crate::submodular::lp::DenseLp;
use crate::{Error, Result};
use rand::Rng;

/// Caps for the packing LP (dense simplex).
const KSET_LP_N_CAP: usize = 50;
const KSET_LP_D_CAP: usize = 20;

/// One possible realization of a column: probability, packed value, and
/// which coordinates receive a unit.
#[derive(Clone, Debug)]
pub struct KSetOutcome {
    pub prob: f64,
    pub value: f64,
    /// Occupied coordinates, a subset of the column's support.
    pub units: Mask,
}

/// A column: its coordinate support and the joint outcome distribution.
#[derive(Clone, Debug)]
pub struct KSetColumn {
    pub support: Mask,
    pub outcomes: Vec<KSetOutcome>,
}

impl KSetColumn {
    pub fn expected_value(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob * o.value).sum()
    }

    /// `Pr[the column puts a unit on coordinate j]`.
    pub fn unit_probability(&self, j: usize) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| set::contains(o.units, j))
            .map(|o| o.prob)
            .sum()
    }
}

/// A packing instance: `d` capacitated coordinates and up to 64 columns.
#[derive(Clone, Debug)]
pub struct KSetInstance {
    pub d: usize,
    pub capacities: Vec<usize>,
    pub columns: Vec<KSetColumn>,
}

impl KSetInstance {
    pub fn new(d: usize, capacities: Vec<usize>, columns: Vec<KSetColumn>) -> Result<Self> {
        if d == 0 || d > 64 {
            return Err(Error::Domain(format!("coordinate count {d} outside 1..=64")));
        }
        if capacities.len() != d {
            return Err(Error::Inconsistent(format!(
                "{} capacities for {d} coordinates",
                capacities.len()
            )));
        }
        if capacities.iter().any(|&b| b == 0) {
            return Err(Error::Domain("zero capacity".into()));
        }
        if columns.is_empty() || columns.len() > 64 {
            return Err(Error::Domain(format!(
                "{} columns outside 1..=64",
                columns.len()
            )));
        }
        for (e, col) in columns.iter().enumerate() {
            if col.support & !set::full(d) != 0 {
                return Err(Error::Inconsistent(format!(
                    "column {e} supported outside the {d} coordinates"
                )));
            }
            if col.outcomes.is_empty() {
                return Err(Error::Inconsistent(format!("column {e} has no outcomes")));
            }
            let mut total = 0.0;
            for o in &col.outcomes {
                if !(0.0..=1.0).contains(&o.prob) || !o.prob.is_finite() {
                    return Err(Error::Domain(format!(
                        "column {e}: outcome probability {}",
                        o.prob
                    )));
                }
                if !o.value.is_finite() || o.value < 0.0 {
                    return Err(Error::Domain(format!(
                        "column {e}: outcome value {}",
                        o.value
                    )));
                }
                if o.units & !col.support != 0 {
                    return Err(Error::Inconsistent(format!(
                        "column {e}: outcome occupies coordinates outside its support"
                    )));
                }
                total += o.prob;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Inconsistent(format!(
                    "column {e}: outcome probabilities sum to {total}"
                )));
            }
        }
        Ok(KSetInstance {
            d,
            capacities,
            columns,
        })
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    /// Largest coordinate support over the columns.
    pub fn k(&self) -> usize {
        self.columns
            .iter()
            .map(|c| set::card(c.support) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Columns whose support contains coordinate `j`.
    pub fn members_of(&self, j: usize) -> Mask {
        set::from_elems(
            (0..self.n()).filter(|&e| set::contains(self.columns[e].support, j)),
        )
    }
}

/// Maximize `Σ E[v_e]·x_e` subject to the expected-load constraints
/// `Σ_e Pr[unit on j]·x_e ≤ b_j` and the unit box.
pub fn solve_kset_lp(instance: &KSetInstance) -> Result<Vec<f64>> {
    let n = instance.n();
    if n > KSET_LP_N_CAP || instance.d > KSET_LP_D_CAP {
        return Err(Error::Capability(format!(
            "packing LP at {n} columns × {} coordinates exceeds {KSET_LP_N_CAP}×{KSET_LP_D_CAP}",
            instance.d
        )));
    }
    let mut lp = DenseLp::new(n);
    lp.maximize(
        instance
            .columns
            .iter()
            .map(|c| c.expected_value())
            .collect(),
    );
    for j in 0..instance.d {
        let coeffs: Vec<f64> = instance
            .columns
            .iter()
            .map(|c| c.unit_probability(j))
            .collect();
        lp.add_le(coeffs, instance.capacities[j] as f64);
    }
    for e in 0..n {
        let mut coeffs = vec![0.0; n];
        coeffs[e] = 1.0;
        lp.add_le(coeffs, 1.0);
    }
    let mut x = lp.solve()?.x;
    // Pivoting can overshoot the box by an ulp; snap back.
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(x)
}

/// One resolved packing run.
#[derive(Clone, Debug)]
pub struct KSetRun {
    pub a: Mask,
    pub probed: Mask,
    /// Sum of realized values over the probed columns.
    pub value: f64,
    /// Realized units per coordinate; never exceeds the capacities.
    pub loads: Vec<u32>,
}

/// A packing instance with a fractional point decomposed per coordinate
/// and ready for repeated runs.
pub struct KSetScheme {
    instance: KSetInstance,
    x: Vec<f64>,
    support: Mask,
    states0: Vec<SupportState>,
    marginals: Vec<Vec<f64>>,
}

impl KSetScheme {
    pub fn prepare(instance: &KSetInstance, x: &[f64]) -> Result<KSetScheme> {
        let n = instance.n();
        if x.len() != n {
            return Err(Error::Inconsistent("point dimension mismatch".into()));
        }
        for (e, &v) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Domain(format!("x[{e}] = {v} outside [0, 1]")));
            }
        }
        let mut states0 = Vec::with_capacity(instance.d);
        let mut marginals = Vec::with_capacity(instance.d);
        for j in 0..instance.d {
            let members = instance.members_of(j);
            let marginal: Vec<f64> = (0..n)
                .map(|e| {
                    if set::contains(members, e) {
                        instance.columns[e].unit_probability(j) * x[e]
                    } else {
                        0.0
                    }
                })
                .collect();
            let load: f64 = marginal.iter().sum();
            if load > instance.capacities[j] as f64 + 1e-9 {
                return Err(Error::Infeasible(format!(
                    "expected load {load} on coordinate {j} exceeds capacity {}",
                    instance.capacities[j]
                )));
            }
            let star = Matroid::transversal_star(n, members, instance.capacities[j])?;
            let dec = star.decompose(&marginal)?;
            states0.push(build_initial_state(&star, &dec)?);
            marginals.push(marginal);
        }
        let support = set::from_elems((0..n).filter(|&e| x[e] > 0.0));
        Ok(KSetScheme {
            instance: instance.clone(),
            x: x.to_vec(),
            support,
            states0,
            marginals,
        })
    }

    pub fn support(&self) -> Mask {
        self.support
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Draw critical sets for every coordinate.
    pub fn draw_criticals<R: Rng>(&self, rng: &mut R) -> Result<Vec<CriticalAssignment>> {
        self.states0
            .iter()
            .zip(&self.marginals)
            .map(|(st, m)| choose_critical_sets(st, m, rng))
            .collect()
    }

    fn draw_outcome<'a, R: Rng>(&'a self, e: usize, rng: &mut R) -> &'a KSetOutcome {
        let outcomes = &self.instance.columns[e].outcomes;
        let mut u = rng.gen::<f64>();
        for o in outcomes {
            if u < o.prob {
                return o;
            }
            u -= o.prob;
        }
        outcomes.last().expect("validated nonempty")
    }

    /// Resolve one candidate set: uniform re-picks from `a`, a real
    /// probe (and unconditional commitment) for available columns, a
    /// fresh simulated draw for unavailable ones; either way the
    /// realized units evict the occupants of the column's critical
    /// vertices, and only real probes insert.
    pub fn run<R: Rng>(
        &self,
        criticals: &[CriticalAssignment],
        a: Mask,
        rng: &mut R,
    ) -> Result<KSetRun> {
        if a & !self.support != 0 {
            return Err(Error::Domain(
                "candidate set contains columns outside supp(x)".into(),
            ));
        }
        let mut states: Vec<SupportState> = self.states0.clone();
        let mut available = a;
        let mut probed: Mask = 0;
        let mut value = 0.0;
        let mut loads = vec![0u32; self.instance.d];
        let cards = set::card(a) as u64;
        let budget = 1000 * cards * cards + 1000;
        let mut steps = 0u64;
        while available != 0 {
            if steps >= budget {
                return Err(Error::Inconsistent(format!(
                    "packing run did not drain availability within {budget} picks"
                )));
            }
            steps += 1;
            let e = uniform_member(a, rng);
            let outcome = self.draw_outcome(e, rng);
            let is_avail = set::contains(available, e);
            if is_avail {
                probed |= set::bit(e);
                value += outcome.value;
                for j in set::iter(outcome.units) {
                    loads[j] += 1;
                }
                available &= !set::bit(e);
            }
            for j in set::iter(outcome.units) {
                for ev in update_state(&mut states[j], &criticals[j], e, is_avail) {
                    if ev.from_critical {
                        available &= !set::bit(ev.element);
                    }
                }
            }
        }
        for (j, &load) in loads.iter().enumerate() {
            assert!(
                load as usize <= self.instance.capacities[j],
                "coordinate {j} loaded {load} over capacity {}",
                self.instance.capacities[j]
            );
        }
        Ok(KSetRun {
            a,
            probed,
            value,
            loads,
        })
    }
}

/// One-shot run: prepare, draw criticals, sample `R(x)`, resolve. For
/// bulk replications prepare a [`KSetScheme`] once instead.
pub fn run_kset<R: Rng>(instance: &KSetInstance, x: &[f64], rng: &mut R) -> Result<KSetRun> {
    let scheme = KSetScheme::prepare(instance, x)?;
    let criticals = scheme.draw_criticals(rng)?;
    let a = sample_r_of_x(x, rng)? & scheme.support;
    scheme.run(&criticals, a, rng)
}

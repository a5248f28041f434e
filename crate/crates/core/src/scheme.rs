//! Randomized contention resolution for stochastic probing.
//!
//! Given a fractional point `x` with `(1/b)·(p·x)` inside every inner
//! matroid polytope and `(1/b)·x` inside every outer one, the scheme
//! probes a random subset of the sampled candidates so that every
//! candidate that would turn out active is kept with probability at
//! least `1 / (1 + b·(k_in + k_out))`, while the committed successes
//! stay independent in every inner matroid and the probed set stays
//! independent in every outer matroid.
//!
//! The machinery follows the support-set exchange structure from
//! [`crate::exchange`]: each constraint is represented as a transversal
//! system, the scaled marginal vector is decomposed into a convex
//! combination of independent sets, each element draws a critical set
//! and keeps a fixed critical vertex, and picks evict the occupants of
//! that vertex. An element stops being available once it is picked or
//! evicted from one of its own critical sets; picks of unavailable
//! elements are re-simulated with fresh coins so the eviction pressure
//! each element exerts stays constant over time. That invariance is
//! what makes the conditional law of "e gets really probed" come out in
//! closed form, and the verified run mode asserts it step by step.

use crate::exchange::{
    blocking_set, build_initial_state, choose_critical_sets, update_state, CriticalAssignment,
    SupportState,
};
use crate::matroid::Matroid;
use crate::model::{sample_r_of_x, uniform_member, ProbeTrace, ProbingInstance};
use crate::oracle::{PickKind, ProcessTrace};
use crate::set::{self, Mask};
use crate::submodular::SubmodularFunction;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::OnceLock;

/// Tuning of the scheme: the scaling constant of the fractional point.
#[derive(Clone, Copy, Debug)]
pub struct SchemeParams {
    /// Scaling in `(0, 1]`: the input point must satisfy `x ∈ b·P`.
    /// Smaller `b` leaves more slack and a better balance constant.
    pub b: f64,
}

impl SchemeParams {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::Domain(format!("scaling b = {b} outside (0, 1]")));
        }
        Ok(SchemeParams { b })
    }
}

/// One constraint prepared for the run loop: its transversal form, the
/// initial support state realizing the scaled marginal vector, and a
/// lazily built independence table for verified runs.
struct PreparedMatroid {
    original: Matroid,
    transversal: Matroid,
    marginal: Vec<f64>,
    state0: SupportState,
    table: OnceLock<Vec<bool>>,
}

impl PreparedMatroid {
    fn prepare(m: &Matroid, marginal: Vec<f64>) -> Result<PreparedMatroid> {
        let transversal = m.to_transversal()?;
        let dec = transversal.decompose(&marginal)?;
        let state0 = build_initial_state(&transversal, &dec)?;
        Ok(PreparedMatroid {
            original: m.clone(),
            transversal,
            marginal,
            state0,
            table: OnceLock::new(),
        })
    }

    fn table(&self) -> Result<&[bool]> {
        if self.table.get().is_none() {
            let t = self.transversal.independence_table()?;
            let _ = self.table.set(t);
        }
        Ok(self.table.get().expect("just set"))
    }
}

/// How a run should behave beyond the plain scheme.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Simulate instead of probing when committing the element would
    /// strictly decrease the objective on the kept-plus-virtual set.
    pub prune: bool,
    /// Check structural invariants at every step (slow; desk scale only).
    pub verify: bool,
    /// Elements whose activation coin is conditioned to be active: their
    /// first probe (or pruning simulation) succeeds deterministically.
    /// Fresh re-simulations of unavailable elements are not affected.
    pub forced_active: Mask,
}

impl RunOptions {
    pub fn plain() -> Self {
        RunOptions::default()
    }

    pub fn pruned() -> Self {
        RunOptions {
            prune: true,
            ..RunOptions::default()
        }
    }
}

/// Which side of the constraint system an eviction came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSide {
    Inner,
    Outer,
}

/// One element knocked out of a support set during a run.
#[derive(Clone, Copy, Debug)]
pub struct BlockingEvent {
    pub step: u32,
    /// The picked element whose update caused the eviction.
    pub by: usize,
    pub evicted: usize,
    pub side: ConstraintSide,
    pub matroid_index: usize,
    /// Evictions from the element's own critical set are the ones that
    /// end its availability.
    pub from_critical: bool,
}

/// Everything one run produced. `s` is the committed output (the really
/// probed, active, kept elements); `s_virt` collects successes of
/// pruning simulations. For plain runs `s_virt` is empty.
#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub a: Mask,
    pub s: Mask,
    pub s_virt: Mask,
    /// Real probes only, in order, with outcomes.
    pub trace: ProbeTrace,
    pub process: ProcessTrace,
    pub blockings: Vec<BlockingEvent>,
}

impl SchemeRun {
    /// Committed and virtual successes together: distributed like the
    /// plain scheme's output.
    pub fn combined(&self) -> Mask {
        self.s | self.s_virt
    }
}

/// A probing instance with a fractional point decomposed and ready to
/// run. Preparing once and drawing many plans amortizes the LP work.
pub struct Scheme {
    n: usize,
    b: f64,
    p: Vec<f64>,
    x: Vec<f64>,
    support: Mask,
    inner: Vec<PreparedMatroid>,
    outer: Vec<PreparedMatroid>,
    objective: SubmodularFunction,
}

impl Scheme {
    /// Validate `x ∈ b·P` and decompose the scaled marginals of every
    /// constraint. Constraints must be transversal-representable
    /// (transversal, uniform, or partition).
    pub fn prepare(
        instance: &ProbingInstance,
        x: &[f64],
        params: SchemeParams,
    ) -> Result<Scheme> {
        let n = instance.n();
        if x.len() != n {
            return Err(Error::Inconsistent(format!(
                "point has {} coordinates, ground set {n}",
                x.len()
            )));
        }
        for (e, &v) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Domain(format!("x[{e}] = {v} outside [0, 1]")));
            }
        }
        let b = params.b;
        let inner_marginal: Vec<f64> = (0..n).map(|e| instance.p[e] * x[e] / b).collect();
        let outer_marginal: Vec<f64> = (0..n).map(|e| x[e] / b).collect();
        let inner = instance
            .inner
            .iter()
            .map(|m| PreparedMatroid::prepare(m, inner_marginal.clone()))
            .collect::<Result<Vec<_>>>()?;
        let outer = instance
            .outer
            .iter()
            .map(|m| PreparedMatroid::prepare(m, outer_marginal.clone()))
            .collect::<Result<Vec<_>>>()?;
        let support = set::from_elems((0..n).filter(|&e| x[e] > 0.0));
        Ok(Scheme {
            n,
            b,
            p: instance.p.clone(),
            x: x.to_vec(),
            support,
            inner,
            outer,
            objective: instance.objective.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> Mask {
        self.support
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// The guaranteed conditional keep probability for active candidates:
    /// `1 / (1 + b·(k_in + k_out))`.
    pub fn balance(&self) -> f64 {
        1.0 / (1.0 + self.b * (self.inner.len() + self.outer.len()) as f64)
    }

    /// Draw the per-run structure: a critical set (and vertex) for every
    /// element in every constraint. The closed-form law is conditional
    /// on this draw.
    pub fn draw_plan<R: Rng>(&self, rng: &mut R) -> Result<SchemePlan<'_>> {
        let inner_criticals = self
            .inner
            .iter()
            .map(|pm| choose_critical_sets(&pm.state0, &pm.marginal, rng))
            .collect::<Result<Vec<_>>>()?;
        let outer_criticals = self
            .outer
            .iter()
            .map(|pm| choose_critical_sets(&pm.state0, &pm.marginal, rng))
            .collect::<Result<Vec<_>>>()?;
        let gamma = |pms: &[PreparedMatroid], crits: &[CriticalAssignment]| -> Vec<Vec<Mask>> {
            pms.iter()
                .zip(crits)
                .map(|(pm, cr)| {
                    (0..self.n)
                        .map(|e| blocking_set(&pm.state0, cr, e))
                        .collect()
                })
                .collect()
        };
        let gamma_inner = gamma(&self.inner, &inner_criticals);
        let gamma_outer = gamma(&self.outer, &outer_criticals);
        Ok(SchemePlan {
            base: self,
            inner_criticals,
            outer_criticals,
            gamma_inner,
            gamma_outer,
        })
    }
}

/// A drawn critical structure over a prepared scheme. Runs against the
/// same plan share the conditioning of the closed-form law.
pub struct SchemePlan<'a> {
    base: &'a Scheme,
    inner_criticals: Vec<CriticalAssignment>,
    outer_criticals: Vec<CriticalAssignment>,
    gamma_inner: Vec<Vec<Mask>>,
    gamma_outer: Vec<Vec<Mask>>,
}

impl<'a> SchemePlan<'a> {
    /// Initial blocking set of `e` in inner constraint `j`.
    pub fn gamma_inner(&self, j: usize, e: usize) -> Mask {
        self.gamma_inner[j][e]
    }

    /// Initial blocking set of `e` in outer constraint `j`.
    pub fn gamma_outer(&self, j: usize, e: usize) -> Mask {
        self.gamma_outer[j][e]
    }

    /// Union of inner blocking sets of `e`.
    pub fn gamma_inner_union(&self, e: usize) -> Mask {
        self.gamma_inner.iter().fold(0, |m, g| m | g[e])
    }

    /// Union of outer blocking sets of `e`.
    pub fn gamma_outer_union(&self, e: usize) -> Mask {
        self.gamma_outer.iter().fold(0, |m, g| m | g[e])
    }

    /// Exact probability that `e` gets really probed when the scheme
    /// runs on input set `a` under this plan: `0` if `e ∉ a`, otherwise
    /// `1 / (1 + Σ_{f ∈ Γin(e) ∩ a \ Γout(e)} p_f + |Γout(e) ∩ a|)`,
    /// where the gammas are the initial blocking-set unions. Outer
    /// blockers evict on every pick, so they count with weight one;
    /// inner blockers need a success, so they count with weight `p_f`.
    pub fn conditional_probe_probability(&self, e: usize, a: Mask) -> f64 {
        if !set::contains(a, e) || !set::contains(self.base.support, e) {
            return 0.0;
        }
        let out = self.gamma_outer_union(e) & a;
        let inn = self.gamma_inner_union(e) & a & !out;
        let mut denom = 1.0 + set::card(out) as f64;
        for f in set::iter(inn) {
            denom += self.base.p[f];
        }
        1.0 / denom
    }

    /// Probability that `e` ends up in the plain scheme's output on
    /// input `a`: the probe probability times the activation probability.
    pub fn conditional_keep_probability(&self, e: usize, a: Mask) -> f64 {
        self.base.p[e] * self.conditional_probe_probability(e, a)
    }

    /// Execute one run on candidate set `a ⊆ supp(x)`.
    pub fn run<R: Rng>(&self, a: Mask, opts: &RunOptions, rng: &mut R) -> Result<SchemeRun> {
        let base = self.base;
        if a & !base.support != 0 {
            return Err(Error::Domain(
                "candidate set contains elements outside supp(x)".into(),
            ));
        }
        let mut inner_states: Vec<SupportState> =
            base.inner.iter().map(|pm| pm.state0.clone()).collect();
        let mut outer_states: Vec<SupportState> =
            base.outer.iter().map(|pm| pm.state0.clone()).collect();

        let mut available = a;
        let mut s: Mask = 0;
        let mut s_virt: Mask = 0;
        let mut trace = ProbeTrace::new();
        let mut process = ProcessTrace::new(base.n);
        let mut blockings = Vec::new();
        // Chronological record of available-element picks for the replay
        // check: (element, coin, was pruned).
        let mut entries: Vec<(usize, bool, bool)> = Vec::new();

        let cards = set::card(a) as u64;
        let budget = 1000 * cards * cards + 1000;
        let mut step: u32 = 0;
        while available != 0 {
            if step as u64 >= budget {
                return Err(Error::Inconsistent(format!(
                    "run did not drain availability within {budget} picks"
                )));
            }
            step += 1;
            let e = uniform_member(a, rng);
            let be = set::bit(e);
            let is_avail = set::contains(available, e);
            let success;
            let insert;

            if is_avail {
                let pruned = opts.prune && base.objective.marginal(s | s_virt, e) < 0.0;
                let active = set::contains(opts.forced_active, e) || rng.gen_bool(base.p[e]);
                entries.push((e, active, pruned));
                if pruned {
                    process.picks.push((e, PickKind::PrunedSimulation { active }));
                    if active {
                        s_virt |= be;
                    }
                } else {
                    trace.record(e, active);
                    process.probed_at[e] = Some(step);
                    process.picks.push((e, PickKind::Probe { active }));
                    if active {
                        s |= be;
                    }
                }
                available &= !be;
                process.unavailable_at[e] = Some(step);
                success = active;
                insert = true;
            } else {
                let active = rng.gen_bool(base.p[e]);
                process
                    .picks
                    .push((e, PickKind::UnavailableSimulation { active }));
                success = active;
                insert = false;
            }

            if success {
                for (j, st) in inner_states.iter_mut().enumerate() {
                    for ev in update_state(st, &self.inner_criticals[j], e, insert) {
                        blockings.push(BlockingEvent {
                            step,
                            by: e,
                            evicted: ev.element,
                            side: ConstraintSide::Inner,
                            matroid_index: j,
                            from_critical: ev.from_critical,
                        });
                        if ev.from_critical && set::contains(available, ev.element) {
                            available &= !set::bit(ev.element);
                            process.unavailable_at[ev.element] = Some(step);
                        }
                    }
                }
            }
            // Outer constraints see every pick, success or not: probing
            // was the irreversible action there.
            for (j, st) in outer_states.iter_mut().enumerate() {
                for ev in update_state(st, &self.outer_criticals[j], e, true) {
                    blockings.push(BlockingEvent {
                        step,
                        by: e,
                        evicted: ev.element,
                        side: ConstraintSide::Outer,
                        matroid_index: j,
                        from_critical: ev.from_critical,
                    });
                    if ev.from_critical && set::contains(available, ev.element) {
                        available &= !set::bit(ev.element);
                        process.unavailable_at[ev.element] = Some(step);
                    }
                }
            }

            if opts.verify {
                self.assert_step_invariants(&inner_states, &outer_states, available)?;
            }
        }

        let run = SchemeRun {
            a,
            s,
            s_virt,
            trace,
            process,
            blockings,
        };
        if opts.verify {
            self.assert_run_invariants(&run, &entries, opts)?;
        }
        Ok(run)
    }

    fn assert_step_invariants(
        &self,
        inner_states: &[SupportState],
        outer_states: &[SupportState],
        available: Mask,
    ) -> Result<()> {
        let base = self.base;
        let sides = [
            (&base.inner, inner_states, &self.inner_criticals, &self.gamma_inner),
            (&base.outer, outer_states, &self.outer_criticals, &self.gamma_outer),
        ];
        for (pms, states, crits, gammas) in sides {
            for (j, st) in states.iter().enumerate() {
                st.assert_injections();
                st.assert_exchange(pms[j].table()?);
                for e in set::iter(available) {
                    // Available elements still occupy their critical
                    // vertex, and their blocking set has not moved.
                    if let (Some(i), Some(kappa)) =
                        (crits[j].critical[e], crits[j].kappa(e))
                    {
                        assert_eq!(
                            st.sets[i].vertex_of(e),
                            Some(kappa),
                            "available element {e} lost its critical vertex"
                        );
                    }
                    assert_eq!(
                        blocking_set(st, &crits[j], e),
                        gammas[j][e],
                        "blocking set of available element {e} drifted"
                    );
                }
            }
        }
        Ok(())
    }

    fn assert_run_invariants(
        &self,
        run: &SchemeRun,
        entries: &[(usize, bool, bool)],
        opts: &RunOptions,
    ) -> Result<()> {
        let base = self.base;
        assert_eq!(run.s & !run.a, 0, "kept elements outside the input set");
        assert_eq!(run.s & run.s_virt, 0, "virtual and committed sets overlap");
        let inner_orig: Vec<Matroid> =
            base.inner.iter().map(|pm| pm.original.clone()).collect();
        let outer_orig: Vec<Matroid> =
            base.outer.iter().map(|pm| pm.original.clone()).collect();
        assert!(
            run.trace.replay_feasible(&inner_orig, &outer_orig)?,
            "probe trace violates a constraint prefix"
        );
        assert_eq!(run.trace.s, run.s, "trace successes disagree with s");
        // Replay the pruning decisions: committed elements are exactly
        // the active entries whose marginal against the running combined
        // set was nonnegative at their turn.
        let mut combined: Mask = 0;
        let mut committed: Mask = 0;
        for &(e, active, pruned) in entries {
            let neg = base.objective.marginal(combined, e) < 0.0;
            assert_eq!(
                pruned,
                opts.prune && neg,
                "pruning decision for element {e} diverged on replay"
            );
            if active {
                combined |= set::bit(e);
                if !pruned {
                    committed |= set::bit(e);
                }
            }
        }
        assert_eq!(combined, run.combined(), "combined set replay mismatch");
        assert_eq!(committed, run.s, "committed set replay mismatch");
        if opts.prune {
            let fk = base.objective.value(run.s);
            let fc = base.objective.value(run.combined());
            assert!(
                fk >= fc - 1e-9,
                "pruned value {fk} below combined value {fc}"
            );
        }
        Ok(())
    }
}

/// One-shot plain run: prepare, draw a plan, sample `R(x)`, resolve.
pub fn run_scheme<R: Rng>(
    instance: &ProbingInstance,
    x: &[f64],
    params: SchemeParams,
    rng: &mut R,
) -> Result<SchemeRun> {
    let scheme = Scheme::prepare(instance, x, params)?;
    let plan = scheme.draw_plan(rng)?;
    let a = sample_r_of_x(x, rng)? & scheme.support;
    plan.run(a, &RunOptions::plain(), rng)
}

/// One-shot run with on-the-fly pruning: elements whose commitment would
/// strictly lower the objective are simulated instead of probed, so the
/// committed set never carries a negative-marginal prefix while
/// `s | s_virt` keeps the plain output law.
pub fn run_scheme_with_pruning<R: Rng>(
    instance: &ProbingInstance,
    x: &[f64],
    params: SchemeParams,
    rng: &mut R,
) -> Result<SchemeRun> {
    let scheme = Scheme::prepare(instance, x, params)?;
    let plan = scheme.draw_plan(rng)?;
    let a = sample_r_of_x(x, rng)? & scheme.support;
    plan.run(a, &RunOptions::pruned(), rng)
}

/// A selection rule that keeps an independent subset of a sampled set
/// without probing anything.
pub trait ClassicScheme {
    fn select<R: Rng>(&self, r: Mask, rng: &mut R) -> Result<Mask>;
}

/// A selection rule that commits to a scan order up front and admits
/// elements greedily against what it kept so far.
pub trait OrderedScheme {
    fn order<R: Rng>(&self, rng: &mut R) -> Result<Vec<usize>>;
    fn admits(&self, kept: Mask, e: usize) -> Result<bool>;
}

/// Uniform-random-order greedy over a list of matroids: scan a shuffled
/// order, keep whatever stays independent everywhere. Usable both as a
/// classic rule and as an ordered one.
pub struct PermutationGreedy {
    pub n: usize,
    pub matroids: Vec<Matroid>,
}

impl PermutationGreedy {
    pub fn new(n: usize, matroids: Vec<Matroid>) -> Result<Self> {
        for m in &matroids {
            if m.ground_size() != n {
                return Err(Error::Inconsistent(
                    "matroid ground size mismatch".into(),
                ));
            }
        }
        Ok(PermutationGreedy { n, matroids })
    }

    fn independent(&self, s: Mask) -> Result<bool> {
        for m in &self.matroids {
            if !m.is_independent(s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl ClassicScheme for PermutationGreedy {
    fn select<R: Rng>(&self, r: Mask, rng: &mut R) -> Result<Mask> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        let mut kept: Mask = 0;
        for e in order {
            if set::contains(r, e) && self.independent(kept | set::bit(e))? {
                kept |= set::bit(e);
            }
        }
        Ok(kept)
    }
}

impl OrderedScheme for PermutationGreedy {
    fn order<R: Rng>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        Ok(order)
    }

    fn admits(&self, kept: Mask, e: usize) -> Result<bool> {
        self.independent(kept | set::bit(e))
    }
}

/// Result of one combined inner/outer run.
#[derive(Clone, Debug)]
pub struct CombinedRun {
    pub a: Mask,
    /// What the outer rule allowed to be really probed.
    pub selected: Mask,
    /// Everything the inner scan admitted and found active (really or in
    /// simulation).
    pub kept: Mask,
    /// The output: admitted, really probed, active.
    pub s: Mask,
    pub trace: ProbeTrace,
}

/// Compose an outer selection rule with an ordered inner rule on the
/// candidate set `a`: the outer rule picks which candidates may really
/// be probed; the inner scan walks its order and flips a coin for every
/// element it can still admit — a real probe when selected, a
/// simulation otherwise — and keeps successes either way. The output is
/// the admitted really-probed successes, so each active candidate
/// survives both filters independently.
///
/// `forced_active` conditions an element's first coin to come up active
/// no matter whether that coin belongs to a probe or a simulation.
pub fn combined_scheme<R: Rng>(
    outer: &impl ClassicScheme,
    inner: &impl OrderedScheme,
    p: &[f64],
    a: Mask,
    forced_active: Mask,
    rng: &mut R,
) -> Result<CombinedRun> {
    let selected = outer.select(a, rng)?;
    if selected & !a != 0 {
        return Err(Error::Inconsistent(
            "outer rule selected outside its input".into(),
        ));
    }
    let order = inner.order(rng)?;
    let mut kept: Mask = 0;
    let mut s: Mask = 0;
    let mut trace = ProbeTrace::new();
    for e in order {
        if !set::contains(a, e) || !inner.admits(kept, e)? {
            continue;
        }
        let active = set::contains(forced_active, e) || rng.gen_bool(p[e]);
        if set::contains(selected, e) {
            trace.record(e, active);
        }
        if active {
            kept |= set::bit(e);
            if set::contains(selected, e) {
                s |= set::bit(e);
            }
        }
    }
    Ok(CombinedRun {
        a,
        selected,
        kept,
        s,
        trace,
    })
}

//! Measured continuous greedy over the probing relaxation.
//!
//! The relaxation lives in probe space: a point `x` is feasible when `x`
//! sits in every outer matroid polytope and the success marginals `p·x`
//! sit in every inner one. The ascent maximizes `G(x) = F(p·x)`, the
//! multilinear extension of the objective evaluated at the success
//! marginals, by walking `T = b` units of time in steps of `δ`: each
//! step solves a linear maximization of the upgrade marginals over the
//! relaxation and moves `y ← y + δ·I·(1−y)`. The final point is inside
//! `b` times the relaxation, ready to hand to the resolution scheme.

use crate::matroid::Matroid;
use crate::model::ProbingInstance;
use crate::set::{self, Mask};
use crate::submodular::lp::DenseLp;
use crate::submodular::{Multilinear, SubmodularFunction};
use crate::{Error, Result};
use rand::Rng;

/// Ground-set cap for the explicit row description of the relaxation.
const POLYTOPE_CAP: usize = 12;

/// The probing relaxation of an instance, with an explicit inequality
/// description (one row per rank-deficient flat of each constraint)
/// cached for linear maximization. Desk scale: at most 12 elements.
pub struct ProbingPolytope {
    n: usize,
    p: Vec<f64>,
    inner: Vec<Matroid>,
    outer: Vec<Matroid>,
    /// Cached `Σ coeffs·x ≤ rhs` rows (rank rows of both families).
    rows: Vec<(Vec<f64>, f64)>,
}

impl ProbingPolytope {
    pub fn new(instance: &ProbingInstance) -> Result<Self> {
        let n = instance.n();
        if n > POLYTOPE_CAP {
            return Err(Error::Capability(format!(
                "relaxation rows over {n} > {POLYTOPE_CAP} elements"
            )));
        }
        let mut rows = Vec::new();
        for m in &instance.outer {
            for (mask, rank) in deficient_flats(m)? {
                let mut coeffs = vec![0.0; n];
                for e in set::iter(mask) {
                    coeffs[e] = 1.0;
                }
                rows.push((coeffs, rank as f64));
            }
        }
        for m in &instance.inner {
            for (mask, rank) in deficient_flats(m)? {
                let mut coeffs = vec![0.0; n];
                for e in set::iter(mask) {
                    coeffs[e] = instance.p[e];
                }
                rows.push((coeffs, rank as f64));
            }
        }
        Ok(ProbingPolytope {
            n,
            p: instance.p.clone(),
            inner: instance.inner.clone(),
            outer: instance.outer.clone(),
            rows: rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Exact membership via the constraint oracles (not the cached rows).
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::Inconsistent("dimension mismatch".into()));
        }
        if x.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
            return Ok(false);
        }
        let clamped: Vec<f64> = x.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
        for m in &self.outer {
            if !m.in_polytope(&clamped)? {
                return Ok(false);
            }
        }
        let z: Vec<f64> = clamped.iter().zip(&self.p).map(|(xi, pi)| xi * pi).collect();
        for m in &self.inner {
            if !m.in_polytope(&z)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Membership of `x` in `b` times the relaxation.
    pub fn contains_scaled(&self, x: &[f64], b: f64) -> Result<bool> {
        let scaled: Vec<f64> = x.iter().map(|&v| v / b).collect();
        self.contains(&scaled)
    }

    /// Maximize `Σ w_e x_e` over the relaxation. Solved as a dense LP
    /// over the cached rank rows plus the unit box; the optimum lands on
    /// a vertex and the deterministic lowest-index pivot rule fixes
    /// which one when several are optimal.
    pub fn linear_max(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.n {
            return Err(Error::Inconsistent("weight dimension mismatch".into()));
        }
        let mut lp = DenseLp::new(self.n);
        lp.maximize(w.to_vec());
        for (coeffs, rhs) in &self.rows {
            lp.add_le(coeffs.clone(), *rhs);
        }
        for e in 0..self.n {
            let mut coeffs = vec![0.0; self.n];
            coeffs[e] = 1.0;
            lp.add_le(coeffs, 1.0);
        }
        let sol = lp.solve()?;
        Ok(sol.x)
    }
}

/// Rank-deficient flats of a matroid: closed sets whose rank is below
/// their size. Together with the unit box they cut out the matroid
/// polytope — every other rank row is implied.
fn deficient_flats(m: &Matroid) -> Result<Vec<(Mask, usize)>> {
    let n = m.ground_size();
    let full = set::full(n);
    let mut out = Vec::new();
    for a in set::subsets(full) {
        let r = m.rank(a)?;
        if r >= set::card(a) as usize {
            continue;
        }
        let closed = set::iter(full & !a).try_fold(true, |acc, e| -> Result<bool> {
            Ok(acc && m.rank(a | set::bit(e))? > r)
        })?;
        if closed {
            out.push((a, r));
        }
    }
    Ok(out)
}

/// How the ascent estimates its upgrade marginals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// Exact multilinear evaluation (table-backed, small ground sets).
    Exact,
    /// Common-random-numbers sampling with this many samples per step.
    Sampled(usize),
}

/// Ascent configuration.
#[derive(Clone, Copy, Debug)]
pub struct GreedyConfig {
    /// Stopping time in `(0, 1]`; the output lies in `b` times the
    /// relaxation.
    pub b: f64,
    /// Step size; must divide `b` evenly.
    pub delta: f64,
    pub gradient: GradientMode,
}

impl GreedyConfig {
    pub fn new(b: f64, delta: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::Domain(format!("stopping time b = {b} outside (0, 1]")));
        }
        if !(delta > 0.0 && delta <= b) {
            return Err(Error::Domain(format!("step size {delta} outside (0, b]")));
        }
        let steps = b / delta;
        if (steps - steps.round()).abs() > 1e-12 * steps.max(1.0) {
            return Err(Error::Domain(format!(
                "step size {delta} does not divide b = {b}"
            )));
        }
        Ok(GreedyConfig {
            b,
            delta,
            gradient: GradientMode::Exact,
        })
    }

    pub fn with_gradient(mut self, gradient: GradientMode) -> Self {
        self.gradient = gradient;
        self
    }
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            b: 1.0,
            delta: 0.01,
            gradient: GradientMode::Exact,
        }
    }
}

/// One ascent step as recorded for the step-bound checks: the time at
/// the start of the step, the relaxation value there, and the gain the
/// step achieved.
#[derive(Clone, Copy, Debug)]
pub struct StepLog {
    pub t: f64,
    pub value: f64,
    pub gain: f64,
}

/// Result of one ascent: the point, its relaxation value `G(y)`, and
/// the per-step log.
#[derive(Clone, Debug)]
pub struct GreedyRun {
    pub y: Vec<f64>,
    pub value: f64,
    pub steps: Vec<StepLog>,
}

/// Measured continuous greedy for `G(x) = F(p·x)` over the probing
/// relaxation. Runs `b/δ` steps; each step linearly maximizes the
/// upgrade marginals `G(y ∨ 1_e) − G(y)` over the relaxation and
/// advances `y ← y + δ·I·(1−y)`. The output satisfies the membership
/// guarantee `y ∈ b·P` by construction (it is dominated coordinate-wise
/// by `b` times the average of the chosen vertices), and that is
/// re-checked against the exact constraint oracles before returning.
pub fn measured_continuous_greedy<R: Rng>(
    f: &SubmodularFunction,
    polytope: &ProbingPolytope,
    config: &GreedyConfig,
    rng: &mut R,
) -> Result<GreedyRun> {
    let n = polytope.n;
    if f.ground_size() != n {
        return Err(Error::Inconsistent(
            "objective ground size does not match the relaxation".into(),
        ));
    }
    let ml = Multilinear::new(f)?;
    let p = &polytope.p;
    let steps_count = (config.b / config.delta).round() as usize;
    let delta = config.delta;

    let mut y = vec![0.0; n];
    let mut values = Vec::with_capacity(steps_count + 1);
    let mut times = Vec::with_capacity(steps_count);
    // Running bound 1 - (1-δ)^k on every coordinate.
    let mut cap_residual = 1.0;
    for k in 0..steps_count {
        let t = k as f64 * delta;
        let z: Vec<f64> = y.iter().zip(p).map(|(yi, pi)| yi * pi).collect();
        let value = ml.eval(&z)?;
        values.push(value);
        times.push(t);

        let w = match config.gradient {
            GradientMode::Exact => {
                let mut w = Vec::with_capacity(n);
                for e in 0..n {
                    let mut zu = z.clone();
                    zu[e] = p[e];
                    w.push(ml.eval(&zu)? - value);
                }
                w
            }
            GradientMode::Sampled(samples) => {
                sampled_upgrade_weights(f, &z, p, samples, rng)?
            }
        };
        let dir = polytope.linear_max(&w)?;
        for e in 0..n {
            y[e] += delta * dir[e] * (1.0 - y[e]);
        }
        cap_residual *= 1.0 - delta;
        let cap = 1.0 - cap_residual;
        for (e, &ye) in y.iter().enumerate() {
            assert!(
                ye <= cap + 1e-12,
                "coordinate {e} = {ye} above the step-count cap {cap}"
            );
        }
    }
    let z: Vec<f64> = y.iter().zip(p).map(|(yi, pi)| yi * pi).collect();
    let value = ml.eval(&z)?;
    values.push(value);

    if !polytope.contains_scaled(&y, config.b)? {
        return Err(Error::Inconsistent(
            "ascent left b times the relaxation".into(),
        ));
    }

    let steps = times
        .iter()
        .enumerate()
        .map(|(k, &t)| StepLog {
            t,
            value: values[k],
            gain: values[k + 1] - values[k],
        })
        .collect();
    Ok(GreedyRun { y, value, steps })
}

/// Upgrade marginals `G(y ∨ 1_e) − G(y)` in success space, estimated
/// with common random numbers: one uniform vector decides the base set
/// for all coordinates of one sample, so the estimates are coupled and
/// the chosen direction is stable across steps. Deterministic for a
/// fixed rng state (fixed accumulation order).
fn sampled_upgrade_weights<R: Rng>(
    f: &SubmodularFunction,
    z: &[f64],
    p: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::Domain("zero gradient samples".into()));
    }
    let n = z.len();
    let mut acc = vec![0.0; n];
    let mut u = vec![0.0; n];
    for _ in 0..samples {
        let mut base: Mask = 0;
        for e in 0..n {
            u[e] = rng.gen::<f64>();
            if u[e] < z[e] {
                base |= set::bit(e);
            }
        }
        for e in 0..n {
            // Upgrading z_e to p_e flips e on exactly when z_e ≤ u_e < p_e.
            if u[e] >= z[e] && u[e] < p[e] {
                acc[e] += f.marginal(base, e);
            }
        }
    }
    Ok(acc.iter().map(|a| a / samples as f64).collect())
}

/// `max_{x ∈ P} f⁺(p·x)`, solved as one joint LP over the distribution
/// weights and the point: maximize `Σ_A α_A f(A)` subject to
/// `Σ α_A ≤ 1`, `Σ_{A∋e} α_A ≤ p_e x_e`, and the relaxation rows on
/// `x`. Columns range over subsets of the activatable support, so the
/// relaxation cap bounds the size.
pub struct FPlusMax {
    pub x: Vec<f64>,
    pub value: f64,
}

pub fn max_f_plus_over(f: &SubmodularFunction, polytope: &ProbingPolytope) -> Result<FPlusMax> {
    let n = polytope.n;
    if f.ground_size() != n {
        return Err(Error::Inconsistent(
            "objective ground size does not match the relaxation".into(),
        ));
    }
    let supp = set::from_elems((0..n).filter(|&e| polytope.p[e] > 0.0));
    let subsets: Vec<Mask> = set::subsets(supp).collect();
    let cols = subsets.len() + n; // α_A first, then x
    let mut objective = vec![0.0; cols];
    for (i, &a) in subsets.iter().enumerate() {
        objective[i] = f.value(a);
    }
    let mut lp = DenseLp::new(cols);
    lp.maximize(objective);
    // Σ α_A ≤ 1.
    let mut mass = vec![0.0; cols];
    for i in 0..subsets.len() {
        mass[i] = 1.0;
    }
    lp.add_le(mass, 1.0);
    // Σ_{A∋e} α_A − p_e x_e ≤ 0.
    for e in 0..n {
        let mut row = vec![0.0; cols];
        for (i, &a) in subsets.iter().enumerate() {
            if set::contains(a, e) {
                row[i] = 1.0;
            }
        }
        row[subsets.len() + e] = -polytope.p[e];
        lp.add_le(row, 0.0);
    }
    // Relaxation rows and box on x.
    for (coeffs, rhs) in &polytope.rows {
        let mut row = vec![0.0; cols];
        row[subsets.len()..].copy_from_slice(coeffs);
        lp.add_le(row, *rhs);
    }
    for e in 0..n {
        let mut row = vec![0.0; cols];
        row[subsets.len() + e] = 1.0;
        lp.add_le(row, 1.0);
    }
    let sol = lp.solve()?;
    Ok(FPlusMax {
        x: sol.x[subsets.len()..].to_vec(),
        value: sol.value,
    })
}

/// Full pipeline: build the relaxation, run the ascent, and report the
/// comparison value `f⁺(p·x⁺)` alongside.
pub struct GreedyOutcome {
    pub run: GreedyRun,
    pub x_plus: Vec<f64>,
    pub f_plus_value: f64,
}

pub fn greedy_probing_point<R: Rng>(
    instance: &ProbingInstance,
    config: &GreedyConfig,
    rng: &mut R,
) -> Result<GreedyOutcome> {
    let polytope = ProbingPolytope::new(instance)?;
    let plus = max_f_plus_over(&instance.objective, &polytope)?;
    let run = measured_continuous_greedy(&instance.objective, &polytope, config, rng)?;
    Ok(GreedyOutcome {
        run,
        x_plus: plus.x,
        f_plus_value: plus.value,
    })
}

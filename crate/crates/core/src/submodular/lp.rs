//! A small dense linear-programming solver.
//!
//! Two-phase primal simplex on the full tableau with Bland's anti-cycling
//! rule (entering variable: lowest index with improving reduced cost;
//! leaving variable: minimum ratio, ties broken by lowest basis index).
//! Bland's rule makes every solve deterministic and termination
//! unconditional, which matters more here than speed: the solver backs
//! convex decompositions, the concave objective extension, and the
//! application LPs, all at desk scale.
//!
//! Variables are nonnegative. Rows may be `<=`, `>=`, or `==`; right-hand
//! sides are normalized to be nonnegative internally. Every solve checks
//! strong duality and panics if the gap exceeds `1e-7` (relative to the
//! optimum's magnitude), so a silently wrong basis cannot leak into
//! downstream numbers.

use crate::{Error, Result};

/// Row sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
struct LpRow {
    coeffs: Vec<f64>,
    cmp: Cmp,
    rhs: f64,
}

/// A dense LP: maximize `objective . x` subject to the added rows and
/// `x >= 0`.
#[derive(Clone, Debug)]
pub struct DenseLp {
    n: usize,
    objective: Vec<f64>,
    rows: Vec<LpRow>,
}

/// Solver output. `dual` is indexed by row, in the orientation the rows
/// were added (a `<=` row has a nonnegative dual at optimality).
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub dual: Vec<f64>,
    pub dual_value: f64,
}

const PIVOT_EPS: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

impl DenseLp {
    /// An LP over `n` nonnegative variables with a zero objective (a pure
    /// feasibility program until [`Self::maximize`] is called).
    pub fn new(n: usize) -> Self {
        DenseLp {
            n,
            objective: vec![0.0; n],
            rows: Vec::new(),
        }
    }

    pub fn maximize(&mut self, objective: Vec<f64>) -> &mut Self {
        assert_eq!(objective.len(), self.n, "objective length mismatch");
        self.objective = objective;
        self
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_row(coeffs, Cmp::Le, rhs)
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_row(coeffs, Cmp::Ge, rhs)
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_row(coeffs, Cmp::Eq, rhs)
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n, "row length mismatch");
        assert!(
            coeffs.iter().all(|c| c.is_finite()) && rhs.is_finite(),
            "non-finite LP data"
        );
        self.rows.push(LpRow { coeffs, cmp, rhs });
        self
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Solve to optimality.
    ///
    /// Errors: [`Error::Infeasible`] when phase 1 cannot clear the
    /// artificial variables, [`Error::Lp`] on an unbounded program or an
    /// exhausted iteration budget. Panics if the primal/dual gap of a
    /// claimed optimum exceeds `1e-7` (relative).
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.n;
        let m = self.rows.len();

        // Normalize rhs >= 0, remembering which rows were negated.
        let mut cmp = Vec::with_capacity(m);
        let mut negated = vec![false; m];
        let mut data: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs: Vec<f64> = Vec::with_capacity(m);
        for (i, row) in self.rows.iter().enumerate() {
            let mut c = row.coeffs.clone();
            let mut r = row.rhs;
            let mut sense = row.cmp;
            if r < 0.0 {
                for v in &mut c {
                    *v = -*v;
                }
                r = -r;
                sense = match sense {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Ge => Cmp::Le,
                    Cmp::Eq => Cmp::Eq,
                };
                negated[i] = true;
            }
            data.push(c);
            rhs.push(r);
            cmp.push(sense);
        }

        // Column layout: structural | slacks/surpluses | artificials | rhs.
        let mut slack_col = vec![usize::MAX; m];
        let mut art_col = vec![usize::MAX; m];
        let mut ncols = n;
        for i in 0..m {
            if matches!(cmp[i], Cmp::Le | Cmp::Ge) {
                slack_col[i] = ncols;
                ncols += 1;
            }
        }
        let first_art = ncols;
        for i in 0..m {
            if matches!(cmp[i], Cmp::Ge | Cmp::Eq) {
                art_col[i] = ncols;
                ncols += 1;
            }
        }
        let rc = ncols; // rhs column index

        let mut t: Vec<Vec<f64>> = vec![vec![0.0; ncols + 1]; m + 1];
        let mut basis = vec![usize::MAX; m];
        let mut active = vec![true; m];
        for i in 0..m {
            t[i][..n].copy_from_slice(&data[i]);
            match cmp[i] {
                Cmp::Le => {
                    t[i][slack_col[i]] = 1.0;
                    basis[i] = slack_col[i];
                }
                Cmp::Ge => {
                    t[i][slack_col[i]] = -1.0;
                    t[i][art_col[i]] = 1.0;
                    basis[i] = art_col[i];
                }
                Cmp::Eq => {
                    t[i][art_col[i]] = 1.0;
                    basis[i] = art_col[i];
                }
            }
            t[i][rc] = rhs[i];
        }

        let mut locked = vec![false; ncols];
        let budget = 20_000 + 200 * (m + ncols);

        // Phase 1: maximize -(sum of artificials).
        if first_art < ncols {
            let mut cost = vec![0.0; ncols];
            for c in cost.iter_mut().take(ncols).skip(first_art) {
                *c = -1.0;
            }
            rebuild_objective_row(&mut t, &basis, &active, &cost, m, rc);
            simplex(&mut t, &mut basis, &active, &locked, m, rc, budget, true)?;
            let art_sum = t[m][rc]; // -value; value = -sum(art) so this is +sum
            if art_sum > FEAS_TOL {
                return Err(Error::Infeasible(format!(
                    "phase 1 left artificial mass {art_sum:.3e}"
                )));
            }
            // Drive remaining artificials out of the basis or drop the
            // rows they certify as redundant.
            for r in 0..m {
                if !active[r] || basis[r] < first_art {
                    continue;
                }
                let mut pivoted = false;
                for j in 0..first_art {
                    if t[r][j].abs() > FEAS_TOL {
                        pivot(&mut t, &mut basis, r, j, m);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    active[r] = false;
                }
            }
            for l in locked.iter_mut().take(ncols).skip(first_art) {
                *l = true;
            }
        }

        // Phase 2: the real objective.
        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&self.objective);
        rebuild_objective_row(&mut t, &basis, &active, &cost, m, rc);
        simplex(&mut t, &mut basis, &active, &locked, m, rc, budget, false)?;

        let mut x = vec![0.0; n];
        for i in 0..m {
            if active[i] && basis[i] < n {
                x[basis[i]] = t[i][rc].max(0.0);
            }
        }
        let value: f64 = x
            .iter()
            .zip(&self.objective)
            .map(|(xi, ci)| xi * ci)
            .sum();

        // Read duals off the reduced costs of each row's unit column.
        let mut dual = vec![0.0; m];
        for i in 0..m {
            if !active[i] {
                continue;
            }
            let y = match cmp[i] {
                Cmp::Le => -t[m][slack_col[i]],
                Cmp::Ge => t[m][slack_col[i]],
                Cmp::Eq => -t[m][art_col[i]],
            };
            dual[i] = if negated[i] { -y } else { y };
        }
        let dual_value: f64 = dual
            .iter()
            .zip(&self.rows)
            .map(|(y, row)| y * row.rhs)
            .sum();

        let scale = 1.0_f64.max(value.abs()).max(dual_value.abs());
        let gap = (value - dual_value).abs();
        assert!(
            gap <= 1e-7 * scale,
            "LP duality gap {gap:.3e} exceeds tolerance (primal {value}, dual {dual_value})"
        );

        Ok(LpSolution {
            value,
            x,
            dual,
            dual_value,
        })
    }
}

/// Recompute the objective row `t[m]` for basis costs `cost`:
/// `t[m][j] = cost[j] - cost_B . B^-1 A_j` and `t[m][rhs] = -value`.
fn rebuild_objective_row(
    t: &mut [Vec<f64>],
    basis: &[usize],
    active: &[bool],
    cost: &[f64],
    m: usize,
    rc: usize,
) {
    for j in 0..=rc {
        t[m][j] = if j < rc { cost[j] } else { 0.0 };
    }
    for i in 0..m {
        if !active[i] {
            continue;
        }
        let cb = cost[basis[i]];
        if cb != 0.0 {
            for j in 0..=rc {
                t[m][j] -= cb * t[i][j];
            }
        }
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize, m: usize) {
    let piv = t[r][c];
    debug_assert!(piv.abs() > 0.0);
    let inv = 1.0 / piv;
    for v in t[r].iter_mut() {
        *v *= inv;
    }
    let row_r = t[r].clone();
    for (i, row) in t.iter_mut().enumerate().take(m + 1) {
        if i == r {
            continue;
        }
        let f = row[c];
        if f != 0.0 {
            for (v, rv) in row.iter_mut().zip(&row_r) {
                *v -= f * rv;
            }
            row[c] = 0.0; // exact zero, not accumulated noise
        }
    }
    basis[r] = c;
}

/// Run primal simplex to optimality under Bland's rule.
#[allow(clippy::too_many_arguments)]
fn simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    active: &[bool],
    locked: &[bool],
    m: usize,
    rc: usize,
    budget: usize,
    phase_one: bool,
) -> Result<()> {
    for _ in 0..budget {
        // Bland: the lowest-index improving column enters.
        let mut entering = None;
        for j in 0..rc {
            if !locked[j] && t[m][j] > COST_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(c) = entering else {
            return Ok(());
        };
        // Minimum-ratio row; ties go to the smallest basic variable index.
        let mut best: Option<(f64, usize, usize)> = None; // (ratio, basis var, row)
        for i in 0..m {
            if !active[i] || t[i][c] <= PIVOT_EPS {
                continue;
            }
            let ratio = t[i][rc].max(0.0) / t[i][c];
            let cand = (ratio, basis[i], i);
            best = match best {
                None => Some(cand),
                Some(cur) => {
                    if ratio < cur.0 - 1e-12 || ((ratio - cur.0).abs() <= 1e-12 && basis[i] < cur.1)
                    {
                        Some(cand)
                    } else {
                        Some(cur)
                    }
                }
            };
        }
        let Some((_, _, r)) = best else {
            if phase_one {
                // Phase 1 is bounded by construction; a missing ratio row
                // is numerical trouble, not unboundedness.
                return Err(Error::Lp("phase 1 lost boundedness".into()));
            }
            return Err(Error::Lp("objective is unbounded over the feasible region".into()));
        };
        pivot(t, basis, r, c, m);
    }
    Err(Error::Lp("iteration budget exhausted".into()))
}

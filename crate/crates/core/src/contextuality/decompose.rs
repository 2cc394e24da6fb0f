use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::lp::{maximize, to_rational, LpScalar};
use super::scenario::{EmpiricalModel, GlobalAssignment};
use crate::error::{Error, Result};

/// Largest assignment space handed to the dense LP.
pub const LP_LIMIT: u128 = 10_000;
/// Up to this many assignments the LP runs in exact rational arithmetic.
pub const EXACT_LIMIT: u128 = 16;
/// Contextual fractions below this count as zero.
pub const FRACTION_TOL: f64 = 1e-9;
/// Every deterministic model scores within `[-LOCAL_BOUND, LOCAL_BOUND]`
/// under a certificate functional.
pub const LOCAL_BOUND: f64 = 2.0;
/// Box bound on certificate coefficients.
const COEFFICIENT_BOUND: f64 = 4.0;

/// Rows are (context, joint outcome) pairs in table order; columns are
/// global assignments. Entry 1 when the assignment restricts to that outcome.
struct Incidence {
    assignments: Vec<GlobalAssignment>,
    p: Vec<f64>,
    columns: Vec<Vec<usize>>,
    rows: usize,
}

impl Incidence {
    fn new(model: &EmpiricalModel) -> Result<Self> {
        let sc = model.scenario();
        let size = sc.assignment_count();
        if size > LP_LIMIT {
            return Err(Error::CombinatorialGuard { size, limit: LP_LIMIT });
        }
        let assignments = sc.assignments(LP_LIMIT)?;
        let offsets: Vec<usize> = (0..sc.contexts().len())
            .scan(0, |acc, c| {
                let o = *acc;
                *acc += sc.context_size(c);
                Some(o)
            })
            .collect();
        let p: Vec<f64> = model.tables().iter().flatten().map(|v| v.max(0.0)).collect();
        let columns = assignments
            .iter()
            .map(|g| (0..sc.contexts().len()).map(|c| offsets[c] + sc.restrict(c, &g.0)).collect())
            .collect();
        Ok(Self { assignments, rows: p.len(), p, columns })
    }

    fn exact(&self) -> bool {
        self.assignments.len() as u128 <= EXACT_LIMIT
    }

    fn dense<T: LpScalar>(&self) -> Vec<Vec<T>> {
        let mut a = vec![vec![T::zero(); self.assignments.len()]; self.rows];
        for (g, rows) in self.columns.iter().enumerate() {
            for &r in rows {
                a[r][g] = T::one();
            }
        }
        a
    }
}

/// Solution of `max 1.b  s.t.  M b <= p, b >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionLp {
    pub contextual_fraction: f64,
    /// Weight of the largest noncontextual sub-model, `1 - contextual_fraction`.
    pub noncontextual_weight: f64,
    /// Nonzero weights of the noncontextual part.
    pub weights: Vec<(GlobalAssignment, f64)>,
    /// Dual solution: one coefficient per table entry with `M^T y >= 1` and `p.y = 1 - CF`.
    pub dual: Vec<f64>,
    pub duality_gap: f64,
    pub exact: bool,
    pub pivots: usize,
}

fn solve_fraction<T: LpScalar>(inc: &Incidence, a: Vec<Vec<T>>, b: Vec<T>) -> Result<FractionLp> {
    let c = vec![T::one(); inc.assignments.len()];
    let sol = maximize(&a, &b, &c)?;
    let gap = sol.duality_gap(&b);
    let value = sol.objective.to_f64();
    let weights = inc
        .assignments
        .iter()
        .zip(&sol.x)
        .filter(|(_, w)| w.is_pos())
        .map(|(g, w)| (g.clone(), w.to_f64()))
        .collect();
    Ok(FractionLp {
        contextual_fraction: (1.0 - value).clamp(0.0, 1.0),
        noncontextual_weight: value,
        weights,
        dual: sol.y.iter().map(LpScalar::to_f64).collect(),
        duality_gap: gap,
        exact: false,
        pivots: sol.pivots,
    })
}

fn fraction_lp(inc: &Incidence) -> Result<FractionLp> {
    if inc.exact() {
        let mut r = solve_fraction::<BigRational>(inc, inc.dense(), to_rational(&inc.p))?;
        r.exact = true;
        Ok(r)
    } else {
        solve_fraction::<f64>(inc, inc.dense(), inc.p.clone())
    }
}

/// Full contextual-fraction LP with weights and dual.
pub fn contextual_fraction_lp(model: &EmpiricalModel) -> Result<FractionLp> {
    fraction_lp(&Incidence::new(model)?)
}

/// `1 - max{w : model = w * noncontextual + (1 - w) * other}`.
pub fn contextual_fraction(model: &EmpiricalModel) -> Result<f64> {
    Ok(contextual_fraction_lp(model)?.contextual_fraction)
}

/// A linear functional on the tables that stays within `[-2, 2]` on every
/// deterministic global assignment but exceeds 2 on the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// One coefficient per table entry, tables concatenated in context order.
    pub coefficients: Vec<f64>,
    /// Functional evaluated on the model.
    pub value: f64,
    /// Largest value over deterministic global assignments.
    pub local_bound: f64,
    pub duality_gap: f64,
}

fn solve_certificate<T: LpScalar>(inc: &Incidence) -> Result<(Vec<f64>, f64)> {
    let r = inc.rows;
    let g = inc.assignments.len();
    let n = 2 * r;
    let mut a: Vec<Vec<T>> = Vec::with_capacity(2 * g + n);
    let mut b: Vec<T> = Vec::with_capacity(2 * g + n);
    for rows in &inc.columns {
        // (F+ - F-) . M_g <= 2  and  -(F+ - F-) . M_g <= 2
        let mut up = vec![T::zero(); n];
        let mut down = vec![T::zero(); n];
        for &row in rows {
            up[row] = T::one();
            up[r + row] = -T::one();
            down[row] = -T::one();
            down[r + row] = T::one();
        }
        a.push(up);
        a.push(down);
        b.push(T::from_f64(LOCAL_BOUND));
        b.push(T::from_f64(LOCAL_BOUND));
    }
    for k in 0..n {
        let mut row = vec![T::zero(); n];
        row[k] = T::one();
        a.push(row);
        b.push(T::from_f64(COEFFICIENT_BOUND));
    }
    let p: Vec<T> = inc.p.iter().map(|&v| T::from_f64(v)).collect();
    let c: Vec<T> = p.iter().cloned().chain(p.iter().map(|v| -v.clone())).collect();
    let sol = maximize(&a, &b, &c)?;
    let f = (0..r).map(|k| (sol.x[k].clone() - sol.x[r + k].clone()).to_f64()).collect();
    Ok((f, sol.duality_gap(&b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "feasible")]
pub enum Decomposition {
    /// Convex weights over deterministic global assignments reproducing every table.
    #[serde(rename = "true")]
    Feasible { weights: Vec<(GlobalAssignment, f64)> },
    #[serde(rename = "false")]
    Infeasible { contextual_fraction: f64, certificate: Certificate },
}

impl Decomposition {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Decomposition::Feasible { .. })
    }
}

/// Write the model as a mixture of deterministic global assignments, or
/// return a Bell-type functional separating it from all such mixtures.
pub fn noncontextual_decompose(model: &EmpiricalModel) -> Result<Decomposition> {
    let inc = Incidence::new(model)?;
    let fraction = fraction_lp(&inc)?;
    if fraction.contextual_fraction <= FRACTION_TOL {
        return Ok(Decomposition::Feasible { weights: fraction.weights });
    }
    let (coefficients, duality_gap) =
        if inc.exact() { solve_certificate::<BigRational>(&inc)? } else { solve_certificate::<f64>(&inc)? };
    let value = coefficients.iter().zip(&inc.p).map(|(f, p)| f * p).sum();
    let local_bound = inc
        .columns
        .iter()
        .map(|rows| rows.iter().map(|&r| coefficients[r]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Decomposition::Infeasible {
        contextual_fraction: fraction.contextual_fraction,
        certificate: Certificate { coefficients, value, local_bound, duality_gap },
    })
}

//! Finite measurement scenarios and their empirical models.
//!
//! A scenario lists observables and the contexts in which they can be
//! measured together; an empirical model gives a probability table per
//! context. Contextuality is the failure of those tables to come from one
//! context-independent assignment of values:
//!
//! * probabilistic: no convex mixture of global assignments reproduces the tables
//!   (checked by LP, quantified by the contextual fraction);
//! * logical: some possible joint outcome extends to no global assignment
//!   consistent with the supports;
//! * strong: no global assignment is consistent with the supports at all.
//!
//! Obstructions are decided by direct enumeration and linear programming;
//! nothing here computes cohomology.

mod chsh;
mod decompose;
pub mod fixtures;
mod lp;
mod scenario;

use serde::{Deserialize, Serialize};

pub use chsh::{chsh_value, measurement_basis, quantum_model_from_state, singlet, STATE_NORM_TOL};
pub use decompose::{
    contextual_fraction, contextual_fraction_lp, noncontextual_decompose, Certificate, Decomposition, FractionLp,
    EXACT_LIMIT, FRACTION_TOL, LOCAL_BOUND, LP_LIMIT,
};
pub use lp::{maximize, LpScalar, LpSolution};
pub use scenario::{
    check_no_signalling, enumerate_global_sections, EmpiricalModel, GlobalAssignment, ModelJson, NoSignallingReport,
    Observable, Scenario, ENUMERATION_LIMIT, SUPPORT_EPS, TABLE_TOL,
};

use crate::error::Result;

/// Marginal agreement demanded of a model before analysis.
pub const NO_SIGNALLING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NonContextual,
    ProbabilisticallyContextual,
    LogicallyContextual,
    StronglyContextual,
}

/// Every support element of every context extends to some global section.
fn supports_covered(model: &EmpiricalModel, sections: &[GlobalAssignment]) -> bool {
    let sc = model.scenario();
    (0..sc.contexts().len()).all(|c| {
        (0..sc.context_size(c))
            .filter(|&k| model.in_support(c, k))
            .all(|k| sections.iter().any(|g| sc.restrict(c, &g.0) == k))
    })
}

fn classify_with(model: &EmpiricalModel, fraction: f64, sections: &[GlobalAssignment]) -> Classification {
    if fraction <= FRACTION_TOL {
        Classification::NonContextual
    } else if sections.is_empty() {
        Classification::StronglyContextual
    } else if !supports_covered(model, sections) {
        Classification::LogicallyContextual
    } else {
        Classification::ProbabilisticallyContextual
    }
}

/// Strongest form of contextuality the model exhibits.
pub fn classify(model: &EmpiricalModel) -> Result<Classification> {
    let sections = enumerate_global_sections(model)?;
    Ok(classify_with(model, contextual_fraction(model)?, &sections))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub name: String,
    pub no_signalling: NoSignallingReport,
    pub assignment_count: u128,
    pub global_sections: Vec<GlobalAssignment>,
    pub contextual_fraction: f64,
    pub duality_gap: f64,
    pub exact_lp: bool,
    pub classification: Classification,
    /// Present for bipartite two-setting two-outcome scenarios.
    pub chsh: Option<f64>,
    pub decomposition: Decomposition,
}

/// Run every check on one model.
pub fn analyze(model: &EmpiricalModel) -> Result<AnalysisReport> {
    let no_signalling = check_no_signalling(model, NO_SIGNALLING_TOL);
    let sections = enumerate_global_sections(model)?;
    let lp = contextual_fraction_lp(model)?;
    let decomposition = noncontextual_decompose(model)?;
    Ok(AnalysisReport {
        name: model.name.clone(),
        no_signalling,
        assignment_count: model.scenario().assignment_count(),
        classification: classify_with(model, lp.contextual_fraction, &sections),
        global_sections: sections,
        contextual_fraction: lp.contextual_fraction,
        duality_gap: lp.duality_gap,
        exact_lp: lp.exact,
        chsh: chsh_value(model).ok(),
        decomposition,
    })
}

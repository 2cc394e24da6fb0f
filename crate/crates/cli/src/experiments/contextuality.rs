use sllab_core::contextuality::{analyze, fixtures, AnalysisReport, Classification, EmpiricalModel, FRACTION_TOL};

use super::{round9, Summary};
use crate::config::Contextuality;
use crate::error::{CliError, CliResult};
use crate::output::Artifacts;

/// Primal-dual gap allowed on every LP.
pub const GAP_TOL: f64 = 1e-9;

pub(super) fn load_models(p: &Contextuality) -> CliResult<Vec<EmpiricalModel>> {
    if p.models.is_empty() {
        return Err(CliError::Config("params.models: need at least one model".into()));
    }
    p.models
        .iter()
        .map(|m| {
            if m.ends_with(".json") {
                let text = std::fs::read_to_string(m).map_err(|e| CliError::Config(format!("params.models: {m}: {e}")))?;
                EmpiricalModel::from_json_str(&text).map_err(|e| CliError::Config(format!("params.models: {m}: {e}")))
            } else {
                fixtures::by_name(m)
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "params.models: unknown fixture `{m}`, expected one of {}",
                            fixtures::NAMES.join(", ")
                        ))
                    })?
                    .map_err(CliError::from)
            }
        })
        .collect()
}

pub fn describe(c: Classification) -> &'static str {
    match c {
        Classification::NonContextual => "noncontextual",
        Classification::ProbabilisticallyContextual => "probabilistically contextual",
        Classification::LogicallyContextual => "logically contextual",
        Classification::StronglyContextual => "strongly contextual",
    }
}

pub(super) fn run(p: &Contextuality, art: &mut Artifacts) -> CliResult<Summary> {
    let models = load_models(p)?;
    let reports = models.iter().map(analyze).collect::<Result<Vec<AnalysisReport>, _>>()?;
    let mut s = Summary::new("contextuality", "contextuality: global sections and Bell-type bounds", None);
    let mut table = String::from("model,classification,contextual_fraction,chsh,global_sections,assignments,max_signalling\n");
    for r in &reports {
        let chsh = r.chsh.map(|c| c.to_string()).unwrap_or_default();
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.name,
            describe(r.classification),
            r.contextual_fraction,
            chsh,
            r.global_sections.len(),
            r.assignment_count,
            r.no_signalling.max_mismatch
        ));
        let mut line = format!("{}: {}, CF = {:?}", r.name, describe(r.classification), round9(r.contextual_fraction));
        if let Some(c) = r.chsh {
            line.push_str(&format!(", CHSH = {:?}", round9(c)));
        }
        line.push_str(&format!(", {} global sections of {}", r.global_sections.len(), r.assignment_count));
        s.line(line);
        if !r.no_signalling.consistent {
            s.warn(format!("{}: signalling, marginal mismatch {:.3e}", r.name, r.no_signalling.max_mismatch));
        }
        s.check(
            &format!("{}: LP optimality", r.name),
            r.duality_gap < GAP_TOL,
            format!("primal-dual gap {:.1e}", r.duality_gap),
        );
        // feasible decomposition => some global section => CHSH within the local bound
        let feasible = r.decomposition.is_feasible();
        let consistent = (feasible == (r.contextual_fraction <= FRACTION_TOL))
            && (!feasible || !r.global_sections.is_empty())
            && (!feasible || r.chsh.is_none_or(|c| c <= 2.0 + 1e-9));
        s.check(&format!("{}: hierarchy", r.name), consistent, describe(r.classification).to_string());
        s.metric(&r.name, serde_json::json!({
            "classification": describe(r.classification),
            "contextual_fraction": r.contextual_fraction,
            "chsh": r.chsh,
            "global_sections": r.global_sections.len(),
        }));
    }
    art.write("models.csv", table.as_bytes())?;
    art.write_json("analysis.json", &reports)?;
    Ok(s)
}

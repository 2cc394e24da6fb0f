use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities below this count as outside a context's support.
pub const SUPPORT_EPS: f64 = 1e-12;
/// Normalization tolerance of context tables.
pub const TABLE_TOL: f64 = 1e-9;
/// Largest assignment space enumerated for global sections.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observable {
    pub name: String,
    pub outcomes: usize,
}

/// Observables and the contexts (maximal jointly measurable subsets) that cover them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    observables: Vec<Observable>,
    /// Observable indices per context, in the order used by the tables.
    contexts: Vec<Vec<usize>>,
}

impl Scenario {
    pub fn new(observables: Vec<Observable>, contexts: Vec<Vec<usize>>) -> Result<Self> {
        if observables.is_empty() || contexts.is_empty() {
            return Err(Error::InvalidInput("scenario needs observables and contexts".into()));
        }
        if let Some(o) = observables.iter().find(|o| o.outcomes == 0) {
            return Err(Error::InvalidInput(format!("observable {} has no outcomes", o.name)));
        }
        let mut names: Vec<&str> = observables.iter().map(|o| o.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("observable names must be unique".into()));
        }
        let mut covered = vec![false; observables.len()];
        for c in &contexts {
            if c.is_empty() {
                return Err(Error::InvalidInput("empty context".into()));
            }
            let mut s = c.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput("observable repeated inside a context".into()));
            }
            for &o in c {
                *covered.get_mut(o).ok_or_else(|| Error::InvalidInput(format!("unknown observable {o}")))? = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidInput(format!("observable {} is in no context", observables[i].name)));
        }
        for (i, a) in contexts.iter().enumerate() {
            for (j, b) in contexts.iter().enumerate() {
                if i != j && a.iter().all(|o| b.contains(o)) {
                    return Err(Error::InvalidInput(if a.len() == b.len() {
                        format!("contexts {i} and {j} are identical")
                    } else {
                        format!("context {i} is contained in context {j}")
                    }));
                }
            }
        }
        Ok(Self { observables, contexts })
    }

    /// Build from observable names and contexts given by name.
    pub fn from_names(observables: &[(&str, usize)], contexts: &[&[&str]]) -> Result<Self> {
        let obs: Vec<Observable> =
            observables.iter().map(|(n, k)| Observable { name: n.to_string(), outcomes: *k }).collect();
        let index: BTreeMap<&str, usize> = observables.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
        let ctx = contexts
            .iter()
            .map(|c| {
                c.iter()
                    .map(|n| index.get(n).copied().ok_or_else(|| Error::InvalidInput(format!("unknown observable {n}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(obs, ctx)
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    /// Number of joint outcomes of context `c`.
    pub fn context_size(&self, c: usize) -> usize {
        self.contexts[c].iter().map(|&o| self.observables[o].outcomes).product()
    }

    /// Outcomes of the context's observables for a joint index; the first
    /// observable is the most significant digit.
    pub fn decode(&self, c: usize, mut idx: usize) -> Vec<usize> {
        let ctx = &self.contexts[c];
        let mut out = vec![0; ctx.len()];
        for (k, &o) in ctx.iter().enumerate().rev() {
            let n = self.observables[o].outcomes;
            out[k] = idx % n;
            idx /= n;
        }
        out
    }

    /// Joint index of context `c` picked out by a global assignment.
    pub fn restrict(&self, c: usize, assignment: &[usize]) -> usize {
        self.contexts[c].iter().fold(0, |acc, &o| acc * self.observables[o].outcomes + assignment[o])
    }

    /// Size of the space of global assignments.
    pub fn assignment_count(&self) -> u128 {
        self.observables.iter().map(|o| o.outcomes as u128).product()
    }

    /// Every global assignment, in lexicographic order (first observable most significant).
    pub fn assignments(&self, limit: u128) -> Result<Vec<GlobalAssignment>> {
        let size = self.assignment_count();
        if size > limit {
            return Err(Error::CombinatorialGuard { size, limit });
        }
        let n = self.observables.len();
        let mut out = Vec::with_capacity(size as usize);
        let mut cur = vec![0usize; n];
        loop {
            out.push(GlobalAssignment(cur.clone()));
            let mut k = n;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < self.observables[k].outcomes {
                    break;
                }
                cur[k] = 0;
            }
        }
    }
}

/// An outcome for every observable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalAssignment(pub Vec<usize>);

/// A probability table per context.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    pub name: String,
    scenario: Scenario,
    tables: Vec<Vec<f64>>,
}

impl EmpiricalModel {
    pub fn new(name: impl Into<String>, scenario: Scenario, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != scenario.contexts().len() {
            return Err(Error::InvalidInput("one table per context".into()));
        }
        for (c, t) in tables.iter().enumerate() {
            if t.len() != scenario.context_size(c) {
                return Err(Error::InvalidInput(format!(
                    "table {c} has {} entries, expected {}",
                    t.len(),
                    scenario.context_size(c)
                )));
            }
            if t.iter().any(|p| !p.is_finite() || *p < -TABLE_TOL) {
                return Err(Error::InvalidInput(format!("table {c} has a negative or non-finite entry")));
            }
            let s: f64 = t.iter().sum();
            if (s - 1.0).abs() > TABLE_TOL {
                return Err(Error::InvalidInput(format!("table {c} sums to {s}")));
            }
        }
        Ok(Self { name: name.into(), scenario, tables })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn in_support(&self, c: usize, idx: usize) -> bool {
        self.tables[c][idx] > SUPPORT_EPS
    }

    /// Marginal of context `c` on the observables `onto` (a subset, any order).
    fn marginal(&self, c: usize, onto: &[usize]) -> Vec<f64> {
        let sc = &self.scenario;
        let size: usize = onto.iter().map(|&o| sc.observables[o].outcomes).product();
        let mut out = vec![0.0; size];
        let ctx = &sc.contexts[c];
        for (idx, p) in self.tables[c].iter().enumerate() {
            let outcomes = sc.decode(c, idx);
            let key = onto.iter().fold(0, |acc, o| {
                let pos = ctx.iter().position(|x| x == o).expect("marginal onto a sub-context");
                acc * sc.observables[*o].outcomes + outcomes[pos]
            });
            out[key] += p;
        }
        out
    }

    pub fn to_json(&self) -> ModelJson {
        let sc = &self.scenario;
        ModelJson {
            name: self.name.clone(),
            description: None,
            observables: sc.observables.clone(),
            contexts: sc
                .contexts
                .iter()
                .map(|c| c.iter().map(|&o| sc.observables[o].name.clone()).collect())
                .collect(),
            tables: self.tables.clone(),
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let obs: Vec<(&str, usize)> = json.observables.iter().map(|o| (o.name.as_str(), o.outcomes)).collect();
        let ctx: Vec<Vec<&str>> = json.contexts.iter().map(|c| c.iter().map(String::as_str).collect()).collect();
        let ctx_refs: Vec<&[&str]> = ctx.iter().map(Vec::as_slice).collect();
        let scenario = Scenario::from_names(&obs, &ctx_refs)?;
        Self::new(json.name.clone(), scenario, json.tables.clone())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: ModelJson = serde_json::from_str(s)?;
        Self::from_json(&json)
    }
}

/// On-disk form of an empirical model. Tables list joint outcomes of a
/// context in lexicographic order, first observable most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub observables: Vec<Observable>,
    pub contexts: Vec<Vec<String>>,
    pub tables: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignallingReport {
    pub max_mismatch: f64,
    /// Context pair and shared observables where the mismatch is largest.
    pub witness: Option<(usize, usize, Vec<usize>)>,
    pub tolerance: f64,
    pub consistent: bool,
}

/// Compare marginals of every pair of overlapping contexts on their intersection.
pub fn check_no_signalling(model: &EmpiricalModel, tol: f64) -> NoSignallingReport {
    let ctx = model.scenario.contexts();
    let mut max_mismatch = 0.0f64;
    let mut witness = None;
    for i in 0..ctx.len() {
        for j in i + 1..ctx.len() {
            let shared: Vec<usize> = ctx[i].iter().copied().filter(|o| ctx[j].contains(o)).collect();
            if shared.is_empty() {
                continue;
            }
            let a = model.marginal(i, &shared);
            let b = model.marginal(j, &shared);
            let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if witness.is_none() || d > max_mismatch {
                max_mismatch = d;
                witness = Some((i, j, shared));
            }
        }
    }
    NoSignallingReport { max_mismatch, witness, tolerance: tol, consistent: max_mismatch <= tol }
}

/// Global assignments whose restriction to every context has nonzero probability.
pub fn enumerate_global_sections(model: &EmpiricalModel) -> Result<Vec<GlobalAssignment>> {
    let sc = &model.scenario;
    let size = sc.assignment_count();
    if size > ENUMERATION_LIMIT {
        return Err(Error::CombinatorialGuard { size, limit: ENUMERATION_LIMIT });
    }
    let all = sc.assignments(ENUMERATION_LIMIT)?;
    Ok(all
        .into_iter()
        .filter(|g| (0..sc.contexts.len()).all(|c| model.in_support(c, sc.restrict(c, &g.0))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Scenario {
        Scenario::from_names(
            &[("A0", 2), ("A1", 2), ("B0", 2), ("B1", 2)],
            &[&["A0", "B0"], &["A0", "B1"], &["A1", "B0"], &["A1", "B1"]],
        )
        .unwrap()
    }

    #[test]
    fn scenario_invariants() {
        assert!(Scenario::from_names(&[("A", 2), ("B", 2)], &[&["A"]]).is_err());
        assert!(Scenario::from_names(&[("A", 2), ("B", 2)], &[&["A", "B"], &["A"]]).is_err());
        assert!(Scenario::from_names(&[("A", 2), ("B", 2)], &[&["A", "B"], &["B", "A"]]).is_err());
        assert!(Scenario::from_names(&[("A", 2), ("A", 2)], &[&["A"]]).is_err());
        assert!(Scenario::from_names(&[("A", 0)], &[&["A"]]).is_err());
        assert!(Scenario::from_names(&[("A", 2)], &[&["C"]]).is_err());
        assert_eq!(square().assignment_count(), 16);
    }

    #[test]
    fn joint_index_layout() {
        let s = Scenario::from_names(&[("A", 2), ("B", 3)], &[&["A", "B"]]).unwrap();
        assert_eq!(s.context_size(0), 6);
        assert_eq!(s.decode(0, 4), vec![1, 1]);
        assert_eq!(s.restrict(0, &[1, 2]), 5);
        let all = s.assignments(100).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[1].0, vec![0, 1]);
        assert!(matches!(s.assignments(5), Err(Error::CombinatorialGuard { size: 6, limit: 5 })));
    }

    #[test]
    fn tables_are_validated() {
        assert!(EmpiricalModel::new("x", square(), vec![vec![0.25; 4]; 3]).is_err());
        assert!(EmpiricalModel::new("x", square(), vec![vec![0.3; 4]; 4]).is_err());
        let mut t = vec![vec![0.25; 4]; 4];
        t[0] = vec![0.5, 0.5, -0.1, 0.1];
        assert!(EmpiricalModel::new("x", square(), t).is_err());
    }

    #[test]
    fn signalling_table_is_reported() {
        let mut t = vec![vec![0.25; 4]; 4];
        // context (A0, B0) biases A0 towards 0: marginal (0.75, 0.25) against (0.5, 0.5)
        t[0] = vec![0.5, 0.25, 0.125, 0.125];
        let m = EmpiricalModel::new("biased", square(), t).unwrap();
        let r = check_no_signalling(&m, 1e-12);
        assert!((r.max_mismatch - 0.25).abs() < 1e-15);
        assert!(!r.consistent);
        let (i, j, shared) = r.witness.unwrap();
        assert_eq!((i, j), (0, 1));
        assert_eq!(shared, vec![0]);
    }

    #[test]
    fn single_context_sections_match_support() {
        let s = Scenario::from_names(&[("A", 2), ("B", 2)], &[&["A", "B"]]).unwrap();
        let m = EmpiricalModel::new("one", s, vec![vec![0.2, 0.0, 0.3, 0.5]]).unwrap();
        assert_eq!(enumerate_global_sections(&m).unwrap().len(), 3);
    }

    #[test]
    fn json_round_trip() {
        let m = EmpiricalModel::new("u", square(), vec![vec![0.25; 4]; 4]).unwrap();
        let text = serde_json::to_string(&m.to_json()).unwrap();
        assert_eq!(EmpiricalModel::from_json_str(&text).unwrap(), m);
        assert!(EmpiricalModel::from_json_str(r#"{"name":"x","observables":[],"contexts":[],"tables":[],"extra":1}"#).is_err());
    }
}

//! Reference empirical models. The same tables ship as JSON under `fixtures/`.

use std::f64::consts::FRAC_PI_4;
use std::f64::consts::FRAC_PI_8;

use num_complex::Complex64 as C64;

use super::chsh::{quantum_model_from_state, singlet};
use super::scenario::{EmpiricalModel, Scenario};
use crate::error::Result;

pub const NAMES: [&str; 6] = ["pr_box", "singlet_chsh", "hardy", "ks_cycle5", "classical_correlated", "product_state"];

fn bell_square() -> Result<Scenario> {
    Scenario::from_names(
        &[("A0", 2), ("A1", 2), ("B0", 2), ("B1", 2)],
        &[&["A0", "B0"], &["A0", "B1"], &["A1", "B0"], &["A1", "B1"]],
    )
}

fn named(mut m: EmpiricalModel, name: &str) -> EmpiricalModel {
    m.name = name.to_string();
    m
}

/// Popescu-Rohrlich box: `a XOR b = i AND j`, uniform otherwise.
pub fn pr_box() -> Result<EmpiricalModel> {
    let tables = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (0..4).map(|k| if (k >> 1 ^ k & 1) == (i & j) { 0.5 } else { 0.0 }).collect())
        .collect();
    EmpiricalModel::new("pr_box", bell_square()?, tables)
}

/// Singlet at `theta_A = (0, pi/4)`, `theta_B = (pi/8, 3 pi/8)`.
pub fn singlet_chsh() -> Result<EmpiricalModel> {
    let m = quantum_model_from_state(singlet(), [0.0, FRAC_PI_4], [FRAC_PI_8, 3.0 * FRAC_PI_8])?;
    Ok(named(m, "singlet_chsh"))
}

/// `(|01> + |10> + |11>) / sqrt 3` measured in the Z (`theta = 0`) and X
/// (`theta = pi/4`) bases. `p(X=1, X=1) = 1/12` but every global assignment
/// extending it hits a zero.
pub fn hardy() -> Result<EmpiricalModel> {
    let a = 1.0 / 3f64.sqrt();
    let z = C64::new(0.0, 0.0);
    let state = [z, C64::new(a, 0.0), C64::new(a, 0.0), C64::new(a, 0.0)];
    Ok(named(quantum_model_from_state(state, [0.0, FRAC_PI_4], [0.0, FRAC_PI_4])?, "hardy"))
}

/// Five binary observables on a cycle, each neighbouring pair perfectly
/// anticorrelated. An odd cycle cannot be 2-coloured, so no global section exists.
pub fn ks_cycle5() -> Result<EmpiricalModel> {
    let names = ["O0", "O1", "O2", "O3", "O4"];
    let obs: Vec<(&str, usize)> = names.iter().map(|n| (*n, 2)).collect();
    let ctx: Vec<[&str; 2]> = (0..5).map(|i| [names[i], names[(i + 1) % 5]]).collect();
    let refs: Vec<&[&str]> = ctx.iter().map(|c| c.as_slice()).collect();
    let scenario = Scenario::from_names(&obs, &refs)?;
    EmpiricalModel::new("ks_cycle5", scenario, vec![vec![0.0, 0.5, 0.5, 0.0]; 5])
}

/// `A = B = C`, a fair coin, seen through contexts `{A, B}` and `{B, C}`.
pub fn classical_correlated() -> Result<EmpiricalModel> {
    let scenario = Scenario::from_names(&[("A", 2), ("B", 2), ("C", 2)], &[&["A", "B"], &["B", "C"]])?;
    EmpiricalModel::new("classical_correlated", scenario, vec![vec![0.5, 0.0, 0.0, 0.5]; 2])
}

/// `|00>` at the CHSH angles.
pub fn product_state() -> Result<EmpiricalModel> {
    let z = C64::new(0.0, 0.0);
    let state = [C64::new(1.0, 0.0), z, z, z];
    let m = quantum_model_from_state(state, [0.0, FRAC_PI_4], [FRAC_PI_8, 3.0 * FRAC_PI_8])?;
    Ok(named(m, "product_state"))
}

pub fn by_name(name: &str) -> Option<Result<EmpiricalModel>> {
    Some(match name {
        "pr_box" => pr_box(),
        "singlet_chsh" => singlet_chsh(),
        "hardy" => hardy(),
        "ks_cycle5" => ks_cycle5(),
        "classical_correlated" => classical_correlated(),
        "product_state" => product_state(),
        _ => return None,
    })
}

pub fn all() -> Result<Vec<EmpiricalModel>> {
    NAMES.iter().map(|n| by_name(n).expect("listed fixture")).collect()
}

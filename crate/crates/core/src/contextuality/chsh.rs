use num_complex::Complex64 as C64;

use super::scenario::{EmpiricalModel, Scenario};
use crate::error::{Error, Result};

/// Tolerance on `<psi|psi> = 1` for Born-rule models.
pub const STATE_NORM_TOL: f64 = 1e-12;

/// Correlator `sum (-1)^(a+b) p(a, b)` of a two-outcome, two-observable context.
fn correlator(table: &[f64]) -> f64 {
    table[0] - table[1] - table[2] + table[3]
}

/// Check for four binary observables in four two-element contexts, every
/// observable in exactly two of them. Returns the correlators in context order.
fn chsh_correlators(model: &EmpiricalModel) -> Result<[f64; 4]> {
    let sc = model.scenario();
    let shape_err = || Error::InvalidInput("CHSH needs a bipartite two-setting two-outcome scenario".into());
    if sc.observables().len() != 4 || sc.contexts().len() != 4 {
        return Err(shape_err());
    }
    if sc.observables().iter().any(|o| o.outcomes != 2) || sc.contexts().iter().any(|c| c.len() != 2) {
        return Err(shape_err());
    }
    for o in 0..4 {
        if sc.contexts().iter().filter(|c| c.contains(&o)).count() != 2 {
            return Err(shape_err());
        }
    }
    let t = model.tables();
    Ok([correlator(&t[0]), correlator(&t[1]), correlator(&t[2]), correlator(&t[3])])
}

/// Largest `|sum_c s_c E_c|` over sign patterns with an odd number of minus
/// signs. Any context labelling of a four-cycle gives the same value, so the
/// parties need not be identified.
pub fn chsh_value(model: &EmpiricalModel) -> Result<f64> {
    let e = chsh_correlators(model)?;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..16 {
        if mask.count_ones() % 2 == 1 {
            let s: f64 = (0..4).map(|c| if mask >> c & 1 == 1 { -e[c] } else { e[c] }).sum();
            best = best.max(s.abs());
        }
    }
    Ok(best)
}

/// Eigenvectors of a qubit measurement at angle `theta`: outcome 0 is
/// `cos t |0> + sin t |1>`, outcome 1 is `-sin t |0> + cos t |1>`.
pub fn measurement_basis(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

/// Born-rule model for two qubits. `state[2i + j]` is the amplitude of `|ij>`.
/// Observables `A0, A1, B0, B1`; context `(Ai, Bj)` holds `p(a, b) = |<a_i b_j|psi>|^2`.
/// With these bases the singlet gives `E = -cos 2(theta_A - theta_B)`.
pub fn quantum_model_from_state(state: [C64; 4], angles_a: [f64; 2], angles_b: [f64; 2]) -> Result<EmpiricalModel> {
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::InvalidInput(format!("state has norm^2 {norm}, expected 1")));
    }
    let scenario = Scenario::from_names(
        &[("A0", 2), ("A1", 2), ("B0", 2), ("B1", 2)],
        &[&["A0", "B0"], &["A0", "B1"], &["A1", "B0"], &["A1", "B1"]],
    )?;
    let mut tables = Vec::with_capacity(4);
    for ta in angles_a {
        for tb in angles_b {
            let (ea, eb) = (measurement_basis(ta), measurement_basis(tb));
            let mut t = vec![0.0; 4];
            for a in 0..2 {
                for b in 0..2 {
                    let mut amp = C64::new(0.0, 0.0);
                    for i in 0..2 {
                        for j in 0..2 {
                            amp += ea[a][i] * eb[b][j] * state[2 * i + j];
                        }
                    }
                    t[2 * a + b] = amp.norm_sqr();
                }
            }
            tables.push(t);
        }
    }
    EmpiricalModel::new("quantum", scenario, tables)
}

/// `(|01> - |10>) / sqrt 2`.
pub fn singlet() -> [C64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, 0.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_shape() {
        let sc = Scenario::from_names(&[("A", 2), ("B", 2), ("C", 2)], &[&["A", "B"], &["B", "C"]]).unwrap();
        let m = EmpiricalModel::new("x", sc, vec![vec![0.25; 4]; 2]).unwrap();
        assert!(chsh_value(&m).is_err());
    }

    #[test]
    fn rejects_unnormalized_state() {
        let mut s = singlet();
        s[0] = C64::new(0.1, 0.0);
        assert!(quantum_model_from_state(s, [0.0, 1.0], [0.0, 1.0]).is_err());
    }

    #[test]
    fn equal_angles_anticorrelate() {
        let m = quantum_model_from_state(singlet(), [0.3, 1.1], [0.3, 1.1]).unwrap();
        for c in [0, 3] {
            let t = &m.tables()[c];
            assert!(t[0] + t[3] < 1e-15);
        }
    }
}

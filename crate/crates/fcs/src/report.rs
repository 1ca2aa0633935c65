//! Full diagnostic evaluation of a parameter point: the quantities reported
//! for each optimal chain (concurrence, matrix elements, purities, Bloch
//! length, next-nearest-neighbour entanglement).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::{
    next_nearest, partial_trace, reduced_density, solve_invariant_state, KrausPair,
};
use crate::entanglement::concurrence_spectrum;
use crate::error::FcsError;
use crate::params::{
    bloch_length_sq, build_pair_extended, ellipse_residual_of_state, PairExtension,
    ParameterVector,
};

/// The distinguished elements of the structured two-site matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbcElements {
    pub a: f64,
    pub b: Complex64,
    pub c: Complex64,
}

/// Everything recomputable from one parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateReport {
    pub params: ParameterVector<f64>,
    pub concurrence: f64,
    pub assistance: f64,
    pub lambdas: [f64; 4],
    pub elements: AbcElements,
    pub purity12: f64,
    pub purity1: f64,
    pub purity123: f64,
    pub bloch_length_sq: f64,
    /// Only for b=2: residual of the invariant-state ellipse.
    pub ellipse_residual: Option<f64>,
    pub next_nearest_concurrence: f64,
    pub next_nearest_assistance: f64,
    pub unitality_residual: f64,
    pub fixed_point_residual: f64,
    /// Measured rank of the fixed-point map (`b^2 - 1` for a unique state).
    pub nullspace_rank: usize,
    /// Two-site density matrix, row-major `(re, im)` pairs.
    pub rho12: Vec<(f64, f64)>,
}

/// Evaluates the full diagnostic set for a default (real, nilpotent) pair.
pub fn evaluate(params: &ParameterVector<f64>) -> Result<StateReport, FcsError> {
    evaluate_extended(params, &PairExtension::default())
}

/// As [`evaluate`] with landscape-probe extensions enabled.
pub fn evaluate_extended(
    params: &ParameterVector<f64>,
    ext: &PairExtension<f64>,
) -> Result<StateReport, FcsError> {
    let pair = build_pair_extended(params, ext)?;
    evaluate_pair(&pair, params)
}

fn evaluate_pair(
    pair: &KrausPair<f64>,
    params: &ParameterVector<f64>,
) -> Result<StateReport, FcsError> {
    let aux = solve_invariant_state(pair)?;
    let r12 = reduced_density(pair, &aux, 2)?;
    let r123 = reduced_density(pair, &aux, 3)?;
    let r1 = partial_trace(&r12, &[1])?;
    let spec = concurrence_spectrum(&r12.rho)?;
    let nn = next_nearest(pair, &aux)?;
    let nn_spec = concurrence_spectrum(&nn.rho)?;
    let ellipse = if pair.b == 2 {
        Some(ellipse_residual_of_state(&aux.rho)?)
    } else {
        None
    };
    let rho12 = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (r12.rho[(i, j)].re, r12.rho[(i, j)].im))
        .collect();
    Ok(StateReport {
        params: params.clone(),
        concurrence: spec.concurrence,
        assistance: spec.assistance,
        lambdas: spec.lambdas,
        elements: AbcElements {
            a: r12.rho[(1, 1)].re,
            b: r12.rho[(1, 2)],
            c: r12.rho[(1, 3)],
        },
        purity12: r12.purity(),
        purity1: r1.purity(),
        purity123: r123.purity(),
        bloch_length_sq: bloch_length_sq(&aux.rho),
        ellipse_residual: ellipse,
        next_nearest_concurrence: nn_spec.concurrence,
        next_nearest_assistance: nn_spec.assistance,
        unitality_residual: pair.unitality_residual(),
        fixed_point_residual: aux.fixed_point_residual,
        nullspace_rank: aux.rank,
        rho12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_b2() -> ParameterVector<f64> {
        ParameterVector::new(2, vec![0.427079], vec![0.571859]).unwrap()
    }

    #[test]
    fn b2_reference_column() {
        let rep = evaluate(&reference_b2()).unwrap();
        assert_abs_diff_eq!(rep.concurrence, 0.414214, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.assistance, 0.585787, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.elements.a, 0.292893, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.elements.b.re, 0.207107, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.elements.c.re, 0.174155, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.purity12, 0.550252, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.purity1, 0.646446, epsilon = 1e-5);
        assert_abs_diff_eq!(rep.bloch_length_sq, 0.5, epsilon = 1e-5);
        assert!(rep.next_nearest_concurrence <= 1e-6);
        assert!(rep.ellipse_residual.unwrap().abs() <= 1e-9);
        assert_eq!(rep.nullspace_rank, 3);
    }

    #[test]
    fn report_round_trips_through_json() {
        let rep = evaluate(&reference_b2()).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: StateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(rep.concurrence, back.concurrence);
        assert_eq!(rep.rho12, back.rho12);
    }
}

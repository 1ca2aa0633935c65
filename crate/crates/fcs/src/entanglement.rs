//! Two-qubit entanglement and mixedness measures: spin flip, Wootters
//! concurrence, concurrence of assistance, closed-form b=2 expressions and
//! the MEMS / Werner reference curves.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::FcsError;
use crate::{real, CMatrix, Real};

/// Square roots of the eigenvalues of `rho * spin_flip(rho)` in decreasing
/// order, plus the two derived measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct ConcurrenceSpectrum<R: Real> {
    pub lambdas: [R; 4],
    /// `max(0, l1 - l2 - l3 - l4)`.
    pub concurrence: R,
    /// `l1 + l2 + l3 + l4`.
    pub assistance: R,
}

fn expect_4x4<R: Real>(rho: &CMatrix<R>) -> Result<(), FcsError> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(FcsError::BadShape {
            expected: 4,
            rows: rho.nrows(),
            cols: rho.ncols(),
        });
    }
    Ok(())
}

fn sigma_yy<R: Real>() -> CMatrix<R> {
    let o = R::zero();
    let l = R::one();
    let c = Complex::new;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c(o, o), c(o, o), c(o, o), c(-l, o),
            c(o, o), c(o, o), c(l, o), c(o, o),
            c(o, o), c(l, o), c(o, o), c(o, o),
            c(-l, o), c(o, o), c(o, o), c(o, o),
        ],
    )
}

/// The spin-flipped state `(sigma_y x sigma_y) rho* (sigma_y x sigma_y)`,
/// with `rho*` the complex conjugate in the standard basis.
pub fn spin_flip<R: Real>(rho: &CMatrix<R>) -> Result<CMatrix<R>, FcsError> {
    expect_4x4(rho)?;
    let yy = sigma_yy::<R>();
    Ok(&yy * rho.map(|x| x.conj()) * &yy)
}

fn hermitian_sqrt<R: Real>(rho: &CMatrix<R>) -> CMatrix<R> {
    let eig = crate::linalg::hermitian_eigen(rho);
    let n = rho.nrows();
    let mut diag = CMatrix::<R>::zeros(n, n);
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        let clipped = if ev < R::zero() { R::zero() } else { ev };
        diag[(k, k)] = Complex::new(clipped.sqrt(), R::zero());
    }
    &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
}

/// Wootters spectrum of a two-qubit density matrix.
///
/// The square roots of the eigenvalues of `rho * rho~` are computed as the
/// singular values of `K = sqrt(rho) * (sigma_y x sigma_y) * conj(sqrt(rho))`,
/// since `K K^dag = sqrt(rho) * rho~ * sqrt(rho)`. Working on `K` instead of
/// the Hermitian product avoids squaring, so the analytically-zero lambdas
/// come out at round-off level rather than at its square root.
pub fn concurrence_spectrum<R: Real>(
    rho: &CMatrix<R>,
) -> Result<ConcurrenceSpectrum<R>, FcsError> {
    expect_4x4(rho)?;
    let root = hermitian_sqrt(rho);
    let k = &root * sigma_yy::<R>() * root.map(|x| x.conj());
    let svd = k.svd(false, false);
    let mut lambdas: Vec<R> = svd.singular_values.iter().cloned().collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let lambdas = [lambdas[0], lambdas[1], lambdas[2], lambdas[3]];
    let diff = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(ConcurrenceSpectrum {
        lambdas,
        concurrence: if diff > R::zero() { diff } else { R::zero() },
        assistance: lambdas[0] + lambdas[1] + lambdas[2] + lambdas[3],
    })
}

/// Wootters concurrence, `max(0, l1 - l2 - l3 - l4)`.
pub fn concurrence<R: Real>(rho: &CMatrix<R>) -> Result<R, FcsError> {
    Ok(concurrence_spectrum(rho)?.concurrence)
}

/// `Tr rho^2`.
pub fn purity<R: Real>(rho: &CMatrix<R>) -> R {
    (rho * rho).trace().re
}

/// The structured two-site matrix arising from a nilpotent generator:
/// zero first row and column, `A` on the two middle diagonal entries,
/// `B` and `C` off-diagonal, `1 - 2A` in the corner.
pub fn abc_state<R: Real>(a: R, b: Complex<R>, c: Complex<R>) -> CMatrix<R> {
    let o = Complex::new(R::zero(), R::zero());
    let ar = Complex::new(a, R::zero());
    let corner = Complex::new(R::one() - a - a, R::zero());
    DMatrix::from_row_slice(
        4,
        4,
        &[
            o, o, o, o,
            o, ar, b, c,
            o, b.conj(), ar, c,
            o, c.conj(), c.conj(), corner,
        ],
    )
}

/// Closed-form two-site purity of the [`abc_state`] family:
/// `1 - 4A + 6A^2 + 2|B|^2 + 4|C|^2`.
pub fn abc_purity12<R: Real>(a: R, b: Complex<R>, c: Complex<R>) -> R {
    let four = real::<R>(4.0);
    let six = real::<R>(6.0);
    let two = real::<R>(2.0);
    R::one() - four * a + six * a * a + two * b.norm_sqr() + four * c.norm_sqr()
}

/// Closed-form one-site purity of the [`abc_state`] family:
/// `1 - 2A + 2A^2 + 2|C|^2`.
pub fn abc_purity1<R: Real>(a: R, c: Complex<R>) -> R {
    let two = real::<R>(2.0);
    R::one() - two * a + two * a * a + two * c.norm_sqr()
}

fn b2_closed_form<R: Real>(alpha1: R, phi1: R, with_cos_phi_sq: bool) -> R {
    let ca2 = alpha1.cos() * alpha1.cos();
    let sa = alpha1.sin();
    let sp2 = phi1.sin() * phi1.sin();
    let cp2 = phi1.cos() * phi1.cos();
    let two = real::<R>(2.0);
    let mut num = ca2 * (R::one() + sa) * sp2;
    if with_cos_phi_sq {
        num *= cp2;
    }
    let den = ca2 * cp2 * (sa - R::one()) - two * (R::one() + sa) * sp2;
    if den == R::zero() {
        return R::zero();
    }
    two * (num / den).abs()
}

/// Closed-form b=2 nearest-neighbour concurrence, `2|B|` as a function of
/// the two angles.
pub fn analytic_concurrence_b2<R: Real>(alpha1: R, phi1: R) -> R {
    b2_closed_form(alpha1, phi1, true)
}

/// Closed-form b=2 concurrence of assistance, `2A`.
pub fn analytic_assistance_b2<R: Real>(alpha1: R, phi1: R) -> R {
    b2_closed_form(alpha1, phi1, false)
}

fn bell_psi_plus<R: Real>() -> CMatrix<R> {
    let h = real::<R>(0.5);
    let mut rho = CMatrix::<R>::zeros(4, 4);
    for i in [1usize, 2] {
        for j in [1usize, 2] {
            rho[(i, j)] = Complex::new(h, R::zero());
        }
    }
    rho
}

fn bell_psi_minus<R: Real>() -> CMatrix<R> {
    let h = real::<R>(0.5);
    let mut rho = CMatrix::<R>::zeros(4, 4);
    rho[(1, 1)] = Complex::new(h, R::zero());
    rho[(2, 2)] = Complex::new(h, R::zero());
    rho[(1, 2)] = Complex::new(-h, R::zero());
    rho[(2, 1)] = Complex::new(-h, R::zero());
    rho
}

fn proj_11<R: Real>() -> CMatrix<R> {
    let mut rho = CMatrix::<R>::zeros(4, 4);
    rho[(3, 3)] = Complex::new(R::one(), R::zero());
    rho
}

/// The maximally entangled mixed state for mixing parameter `q`.
///
/// Two branches joined at `q = 2/3`: a psi+/psi-/|11> mixture below and a
/// psi+/|11> mixture above.
pub fn mems_state<R: Real>(q: R) -> Result<CMatrix<R>, FcsError> {
    if q < R::zero() || q > R::one() {
        return Err(FcsError::OutOfRange {
            value: crate::as_f64(q),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let third = real::<R>(1.0 / 3.0);
    let half = real::<R>(0.5);
    Ok(if q <= real(2.0 / 3.0) {
        bell_psi_plus::<R>().scale(third + half * q)
            + bell_psi_minus::<R>().scale(third - half * q)
            + proj_11::<R>().scale(third)
    } else {
        bell_psi_plus::<R>().scale(q) + proj_11::<R>().scale(R::one() - q)
    })
}

/// `(purity, concurrence)` of the MEMS family at `q`; the concurrence
/// equals `q` on both branches.
pub fn mems_point<R: Real>(q: R) -> Result<(R, R), FcsError> {
    let rho = mems_state(q)?;
    Ok((purity(&rho), concurrence(&rho)?))
}

/// The Werner (isotropic) state `(1-p)/4 * 1 + p |psi+><psi+|`.
pub fn werner_state<R: Real>(p: R) -> Result<CMatrix<R>, FcsError> {
    if p < R::zero() || p > R::one() {
        return Err(FcsError::OutOfRange {
            value: crate::as_f64(p),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let quarter = real::<R>(0.25);
    Ok(CMatrix::<R>::identity(4, 4).scale(quarter * (R::one() - p))
        + bell_psi_plus::<R>().scale(p))
}

/// `(purity, concurrence)` of the Werner family at `p`; the concurrence is
/// `max(0, (3p - 1)/2)`.
pub fn werner_point<R: Real>(p: R) -> Result<(R, R), FcsError> {
    let rho = werner_state(p)?;
    Ok((purity(&rho), concurrence(&rho)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    #[test]
    fn bell_state_is_spin_flip_invariant() {
        let psi = bell_psi_plus::<f64>();
        assert!((spin_flip(&psi).unwrap() - &psi).norm() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_spin_flip_invariant() {
        let mixed = CMatrix::<f64>::identity(4, 4).scale(0.25);
        assert!((spin_flip(&mixed).unwrap() - &mixed).norm() < 1e-15);
    }

    #[test]
    fn spin_flip_swaps_product_basis_extremes() {
        let mut zz = CMatrix::<f64>::zeros(4, 4);
        zz[(0, 0)] = Complex::new(1.0, 0.0);
        let flipped = spin_flip(&zz).unwrap();
        assert_abs_diff_eq!(flipped[(3, 3)].re, 1.0);
        assert!(flipped[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn spin_flip_rejects_wrong_shape() {
        let bad = CMatrix::<f64>::identity(3, 3);
        assert!(matches!(spin_flip(&bad), Err(FcsError::BadShape { .. })));
    }

    #[test]
    fn bell_state_is_maximally_entangled() {
        let spec = concurrence_spectrum(&bell_psi_plus::<f64>()).unwrap();
        assert_abs_diff_eq!(spec.concurrence, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.assistance, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn abc_spectrum_is_analytic_and_c_independent() {
        let a = 0.3;
        let b = Complex::new(0.216, 0.0);
        let c = Complex::new(0.097378, 0.0);
        let spec = concurrence_spectrum(&abc_state(a, b, c)).unwrap();
        assert_abs_diff_eq!(spec.lambdas[0], a + b.norm(), epsilon = 1e-10);
        assert_abs_diff_eq!(spec.lambdas[1], a - b.norm(), epsilon = 1e-10);
        assert!(spec.lambdas[2] < 1e-10 && spec.lambdas[3] < 1e-10);
        assert_abs_diff_eq!(spec.concurrence, 0.432, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.assistance, 0.6, epsilon = 1e-10);

        let spec0 = concurrence_spectrum(&abc_state(a, b, Complex::new(0.0, 0.0))).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(spec.lambdas[k], spec0.lambdas[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn abc_eigenvalues_include_zero_and_a_minus_b() {
        let a = 0.29;
        let b = Complex::new(0.2, 0.0);
        let c = Complex::new(0.17, 0.0);
        let eig = SymmetricEigen::new(abc_state(a, b, c));
        let mut evs: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        evs.sort_by(f64::total_cmp);
        assert!(evs.iter().any(|&e| e.abs() < 1e-10));
        assert!(evs.iter().any(|&e| (e - (a - b.norm())).abs() < 1e-10));
    }

    #[test]
    fn closed_form_purities_match_traces() {
        let a = 0.292893;
        let b = Complex::new(0.207107, 0.0);
        let c = Complex::new(0.174155, 0.0);
        let rho = abc_state(a, b, c);
        assert_abs_diff_eq!(purity(&rho), abc_purity12(a, b, c), epsilon = 1e-12);
        let two_site = crate::chain::ReducedState { n: 2, rho };
        let one_site = crate::chain::partial_trace(&two_site, &[1]).unwrap();
        assert_abs_diff_eq!(one_site.purity(), abc_purity1(a, c), epsilon = 1e-12);
    }

    #[test]
    fn analytic_b2_optimum() {
        let c = analytic_concurrence_b2(0.427079, 0.571859);
        assert_abs_diff_eq!(c, 2.0f64.sqrt() - 1.0, epsilon = 1e-6);
        let ass = analytic_assistance_b2(0.427079, 0.571859);
        assert_abs_diff_eq!(ass, 0.585787, epsilon = 1e-6);
    }

    #[test]
    fn analytic_b2_vanishes_without_rotation() {
        assert_eq!(analytic_concurrence_b2(0.7, 0.0), 0.0);
        // the two closed forms differ exactly by the cos^2 phi factor
        assert_abs_diff_eq!(
            analytic_concurrence_b2(0.0, 0.9),
            analytic_assistance_b2(0.0, 0.9) * 0.9f64.cos().powi(2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn mems_endpoints_and_branch_junction() {
        let (p1, c1) = mems_point(1.0f64).unwrap();
        assert_abs_diff_eq!(p1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c1, 1.0, epsilon = 1e-12);

        let (p0, c0) = mems_point(0.0f64).unwrap();
        assert_abs_diff_eq!(p0, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c0, 0.0, epsilon = 1e-12);

        let q = 2.0 / 3.0;
        let low = mems_state(q - 1e-16).unwrap();
        let high = mems_state(q + 1e-16).unwrap();
        assert!((low - high).norm() < 1e-12);
        assert!(mems_point(1.5f64).is_err());
    }

    #[test]
    fn mems_concurrence_equals_q() {
        for q in [0.1, 0.434467, 0.66, 0.8] {
            let (_, c) = mems_point(q).unwrap();
            assert_abs_diff_eq!(c, q, epsilon = 1e-10);
        }
    }

    #[test]
    fn werner_endpoints_and_threshold() {
        let (p, c) = werner_point(0.0f64).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
        assert_eq!(c, 0.0);
        let (p, c) = werner_point(1.0f64).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
        let (_, c) = werner_point(1.0 / 3.0).unwrap();
        assert!(c < 1e-10);
        for p in [0.4, 0.7, 0.95] {
            let (_, c) = werner_point(p).unwrap();
            assert_abs_diff_eq!(c, (3.0 * p - 1.0) / 2.0, epsilon = 1e-10);
        }
        assert!(werner_point(-0.1f64).is_err());
    }

    proptest! {
        #[test]
        fn spectrum_is_ordered_and_bounded(a in 0.0f64..0.45, bmag in 0.0f64..0.2, cmag in 0.0f64..0.15) {
            let rho = abc_state(a, Complex::new(bmag, 0.0), Complex::new(cmag, 0.0));
            let eig = SymmetricEigen::new(rho.clone());
            prop_assume!(eig.eigenvalues.iter().all(|&e| e >= -1e-12));
            let spec = concurrence_spectrum(&rho).unwrap();
            prop_assert!(spec.lambdas.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(spec.concurrence >= 0.0);
            prop_assert!(spec.assistance >= spec.concurrence);
            prop_assert!(spec.assistance <= 1.0 + 1e-10);
        }

        #[test]
        fn concurrence_is_conjugation_invariant(a in 0.0f64..0.45, bim in -0.2f64..0.2, cim in -0.15f64..0.15) {
            let rho = abc_state(a, Complex::new(0.1, bim), Complex::new(0.05, cim));
            let eig = SymmetricEigen::new(rho.clone());
            prop_assume!(eig.eigenvalues.iter().all(|&e| e >= -1e-12));
            let c1 = concurrence(&rho).unwrap();
            let c2 = concurrence(&rho.map(|x| x.conj())).unwrap();
            prop_assert!((c1 - c2).abs() <= 1e-10);
        }
    }
}

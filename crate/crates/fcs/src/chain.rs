//! Invariant auxiliary state and exact reduced density matrices for finite
//! windows of the infinite chain.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex;

use crate::error::FcsError;
use crate::{as_f64, real, CMatrix, Real};

/// Default cap on the window length of [`reduced_density`]; the cost is
/// `4^n` trace evaluations of `b x b` products.
pub const DEFAULT_WINDOW_CAP: usize = 6;

/// Relative singular-value threshold below which a direction counts as
/// nullspace of the fixed-point map.
const NULLSPACE_TOL: f64 = 1e-9;

/// The two `b x b` Kraus matrices defining the completely positive map of
/// the chain, one per qubit basis state.
///
/// A valid pair is unital: `v1 v1^dag + v2 v2^dag = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair<R: Real> {
    pub b: usize,
    pub v1: CMatrix<R>,
    pub v2: CMatrix<R>,
}

impl<R: Real> KrausPair<R> {
    /// Panics if the matrices are not square with matching dimension >= 2.
    pub fn new(v1: CMatrix<R>, v2: CMatrix<R>) -> Self {
        let b = v1.nrows();
        assert!(b >= 2, "auxiliary dimension must be at least 2");
        assert_eq!((v1.nrows(), v1.ncols()), (b, b));
        assert_eq!((v2.nrows(), v2.ncols()), (b, b));
        Self { b, v1, v2 }
    }

    /// Frobenius residual of the unitality condition; 0 means exactly unital.
    pub fn unitality_residual(&self) -> R {
        let sum = &self.v1 * self.v1.adjoint() + &self.v2 * self.v2.adjoint();
        (sum - CMatrix::<R>::identity(self.b, self.b)).norm()
    }

    /// Frobenius norm of `v1 * v1`; 0 for a nilpotent generator.
    pub fn nilpotency_residual(&self) -> R {
        (&self.v1 * &self.v1).norm()
    }

    fn kraus(&self, bit: usize) -> &CMatrix<R> {
        if bit == 0 {
            &self.v1
        } else {
            &self.v2
        }
    }

    /// Adjoint (Heisenberg-to-Schrodinger) action `sum_j v_j^dag X v_j`.
    /// Trace preserving whenever the pair is unital.
    pub fn adjoint_map(&self, x: &CMatrix<R>) -> CMatrix<R> {
        self.v1.adjoint() * x * &self.v1 + self.v2.adjoint() * x * &self.v2
    }
}

/// Frobenius residual of `v1 v1^dag + v2 v2^dag - 1`.
pub fn check_unitality<R: Real>(pair: &KrausPair<R>) -> R {
    pair.unitality_residual()
}

/// The auxiliary `b x b` density matrix fixed under the adjoint map,
/// together with solve diagnostics.
#[derive(Debug, Clone)]
pub struct AuxiliaryState<R: Real> {
    pub rho: CMatrix<R>,
    /// Measured rank of the fixed-point map on the `b^2`-dimensional matrix
    /// space (must be `b^2 - 1` for a unique invariant state).
    pub rank: usize,
    /// Frobenius residual of the fixed-point condition.
    pub fixed_point_residual: R,
    /// Smallest eigenvalue of the solution before clipping.
    pub min_eigenvalue: R,
}

/// Column-major vectorization of `x` into column `col` of `m`.
fn set_vec_column<R: Real>(m: &mut CMatrix<R>, col: usize, x: &CMatrix<R>) {
    let b = x.nrows();
    for j in 0..b {
        for i in 0..b {
            m[(j * b + i, col)] = x[(i, j)];
        }
    }
}

fn unvec<R: Real>(v: &nalgebra::DVector<Complex<R>>, b: usize) -> CMatrix<R> {
    DMatrix::from_fn(b, b, |i, j| v[j * b + i])
}

fn hermitize<R: Real>(x: &CMatrix<R>) -> CMatrix<R> {
    (x + x.adjoint()).scale(real(0.5))
}

/// Solves the translation-invariance condition for the auxiliary state.
///
/// The nullspace of `L(rho) = sum_j v_j^dag rho v_j - rho` is located by a
/// singular value decomposition of its `b^2 x b^2` matrix, assembled
/// column-by-column on matrix units. Singular values below `1e-9` times the
/// largest count as zero; dimension 0 or > 1 is an error. The candidate
/// vector is then polished by repeated squaring of the averaged transfer
/// map `(T + 1)/2`, which resolves nearly-degenerate fixed-point directions
/// far beyond the accuracy of the raw singular vector. The result is
/// Hermitized, trace-normalized with positive sign, and validated to be
/// positive semidefinite (eigenvalues in `[-1e-10, 0)` are clipped to zero,
/// anything below `-1e-8` is rejected).
pub fn solve_invariant_state<R: Real>(pair: &KrausPair<R>) -> Result<AuxiliaryState<R>, FcsError> {
    let b = pair.b;
    let n = b * b;

    // matrix of L acting on vectorized matrices
    let mut l_mat = CMatrix::<R>::zeros(n, n);
    let mut unit = CMatrix::<R>::zeros(b, b);
    for j in 0..b {
        for i in 0..b {
            unit[(i, j)] = Complex::new(R::one(), R::zero());
            let image = pair.adjoint_map(&unit) - &unit;
            set_vec_column(&mut l_mat, j * b + i, &image);
            unit[(i, j)] = Complex::new(R::zero(), R::zero());
        }
    }

    let svd = SVD::new(l_mat, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let s_max = svd
        .singular_values
        .iter()
        .cloned()
        .fold(R::zero(), |m, x| if x > m { x } else { m });
    let tol = s_max * real(NULLSPACE_TOL);
    let null_dim = svd.singular_values.iter().filter(|&&s| s <= tol).count();
    if null_dim == 0 {
        let smallest = svd
            .singular_values
            .iter()
            .cloned()
            .fold(s_max, |m, x| if x < m { x } else { m });
        return Err(FcsError::NullspaceEmpty {
            smallest: as_f64(smallest / s_max),
        });
    }
    if null_dim > 1 {
        return Err(FcsError::NullspaceDegenerate { dim: null_dim });
    }
    let rank = n - null_dim;

    let (min_idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, s_max), |(bi, bs), (i, &s)| {
            if s < bs {
                (i, s)
            } else {
                (bi, bs)
            }
        });
    let null_vec = v_t.row(min_idx).transpose().map(|x| x.conj());
    let mut rho = hermitize(&unvec(&null_vec, b));
    if rho.trace().re < R::zero() {
        rho.neg_mut();
    }
    // fall back to the maximally mixed seed if hermitization cancelled the
    // candidate (raw vector with an unlucky phase)
    if rho.trace().re < real(1e-3) {
        rho = CMatrix::<R>::identity(b, b).scale(R::one() / real(b as f64));
    }
    rho = rho.scale(R::one() / rho.trace().re);

    // polish: repeated squaring of (T + 1)/2 projects onto the fixed space
    let mut transfer = CMatrix::<R>::zeros(n, n);
    for j in 0..b {
        for i in 0..b {
            unit[(i, j)] = Complex::new(R::one(), R::zero());
            let image = pair.adjoint_map(&unit);
            unit[(i, j)] = Complex::new(R::zero(), R::zero());
            set_vec_column(&mut transfer, j * b + i, &image);
        }
    }
    let half = Complex::new(real::<R>(0.5), R::zero());
    let mut averaged = (&transfer + CMatrix::<R>::identity(n, n)).map(|x| x * half);
    // Repeated squaring drives the averaged map to the rank-one projector
    // onto the fixed point, resolving directions the nullspace vector is
    // poor in when the spectral gap is tiny. The iterate stabilizes after
    // ~log2(1/gap) squarings, so exit as soon as it stops moving.
    for _ in 0..60 {
        let next = &averaged * &averaged;
        let moved = (&next - &averaged).norm();
        // each squaring injects ~n*eps relative round-off, so the plateau
        // sits above machine epsilon
        let done = moved <= next.norm() * real::<R>(1e-13);
        averaged = next;
        if done {
            break;
        }
    }
    let mut vec_rho = nalgebra::DVector::from_fn(n, |k, _| rho[(k % b, k / b)]);
    vec_rho = &averaged * vec_rho;
    rho = hermitize(&unvec(&vec_rho, b));
    rho = rho.scale(R::one() / rho.trace().re);

    let eig = crate::linalg::hermitian_eigen(&rho);
    let min_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(R::one(), |m, x| if x < m { x } else { m });
    if min_eig < real(-1e-8) {
        return Err(FcsError::NotPositive {
            min_eig: as_f64(min_eig),
        });
    }
    if min_eig < R::zero() {
        // clip round-off negatives and renormalize
        let mut diag = CMatrix::<R>::zeros(b, b);
        for (k, &ev) in eig.eigenvalues.iter().enumerate() {
            diag[(k, k)] = Complex::new(if ev < R::zero() { R::zero() } else { ev }, R::zero());
        }
        rho = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
        rho = hermitize(&rho).scale(R::one() / rho.trace().re);
    }

    let fixed_point_residual = (pair.adjoint_map(&rho) - &rho).norm();
    Ok(AuxiliaryState {
        rho,
        rank,
        fixed_point_residual,
        min_eigenvalue: min_eig,
    })
}

/// A `2^n x 2^n` density matrix for an `n`-site window of the chain.
/// Basis ordering: site 1 is the most significant bit of `|s_1 s_2 ... s_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState<R: Real> {
    pub n: usize,
    pub rho: CMatrix<R>,
}

impl<R: Real> ReducedState<R> {
    pub fn purity(&self) -> R {
        (&self.rho * &self.rho).trace().re
    }
}

/// Reduced density matrix of an `n`-site window, default cap
/// [`DEFAULT_WINDOW_CAP`].
pub fn reduced_density<R: Real>(
    pair: &KrausPair<R>,
    aux: &AuxiliaryState<R>,
    n: usize,
) -> Result<ReducedState<R>, FcsError> {
    reduced_density_capped(pair, aux, n, DEFAULT_WINDOW_CAP)
}

/// As [`reduced_density`] with an explicit window cap.
///
/// Entry `<s|rho|t> = Tr(v_sn^dag ... v_s1^dag rho_B v_t1 ... v_tn)`: the
/// matrix element is the trace against the ordered Kraus product for `t`
/// and the adjoint of the ordered product for `s`.
pub fn reduced_density_capped<R: Real>(
    pair: &KrausPair<R>,
    aux: &AuxiliaryState<R>,
    n: usize,
    cap: usize,
) -> Result<ReducedState<R>, FcsError> {
    if n < 1 || n > cap {
        return Err(FcsError::CapExceeded { n, cap });
    }
    let dim = 1usize << n;
    // ordered products v_{s1} ... v_{sn}, built one site at a time
    let mut products: Vec<CMatrix<R>> = vec![CMatrix::<R>::identity(pair.b, pair.b)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(products.len() * 2);
        for p in &products {
            next.push(p * &pair.v1);
            next.push(p * &pair.v2);
        }
        products = next;
    }
    let rho = DMatrix::from_fn(dim, dim, |s, t| {
        (products[s].adjoint() * &aux.rho * &products[t]).trace()
    });
    Ok(ReducedState { n, rho })
}

/// Partial trace keeping the listed sites (1-based, strictly increasing).
pub fn partial_trace<R: Real>(
    state: &ReducedState<R>,
    keep: &[usize],
) -> Result<ReducedState<R>, FcsError> {
    let n = state.n;
    if keep.is_empty() {
        return Err(FcsError::BadSubset {
            reason: "empty subset".into(),
        });
    }
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(FcsError::BadSubset {
                reason: format!("sites must be strictly increasing, got {keep:?}"),
            });
        }
    }
    if keep[0] < 1 || *keep.last().unwrap() > n {
        return Err(FcsError::BadSubset {
            reason: format!("sites {keep:?} out of range 1..={n}"),
        });
    }
    if keep.len() == n {
        return Ok(state.clone());
    }
    let kept: Vec<usize> = keep.iter().map(|&s| s - 1).collect();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let m = kept.len();
    let dim = 1usize << m;
    // site q occupies bit n-1-q of the big index (site 1 most significant)
    let expand = |idx: usize, env: usize| -> usize {
        let mut full = 0usize;
        for (k, &q) in kept.iter().enumerate() {
            full |= ((idx >> (m - 1 - k)) & 1) << (n - 1 - q);
        }
        for (k, &q) in traced.iter().enumerate() {
            full |= ((env >> (traced.len() - 1 - k)) & 1) << (n - 1 - q);
        }
        full
    };
    let env_dim = 1usize << traced.len();
    let rho = DMatrix::from_fn(dim, dim, |s, t| {
        let mut acc = Complex::new(R::zero(), R::zero());
        for env in 0..env_dim {
            acc += state.rho[(expand(s, env), expand(t, env))];
        }
        acc
    });
    Ok(ReducedState { n: m, rho })
}

/// Next-nearest-neighbour state, computed directly as the two-term sum over
/// the traced middle site. Agrees entrywise with
/// `partial_trace(reduced_density(.., 3), {1, 3})`.
pub fn next_nearest<R: Real>(
    pair: &KrausPair<R>,
    aux: &AuxiliaryState<R>,
) -> Result<ReducedState<R>, FcsError> {
    let rho = DMatrix::from_fn(4, 4, |s, t| {
        let (s1, s3) = ((s >> 1) & 1, s & 1);
        let (t1, t3) = ((t >> 1) & 1, t & 1);
        let mut acc = Complex::new(R::zero(), R::zero());
        for m in 0..2 {
            let left = pair.kraus(s1) * pair.kraus(m) * pair.kraus(s3);
            let right = pair.kraus(t1) * pair.kraus(m) * pair.kraus(t3);
            acc += (left.adjoint() * &aux.rho * right).trace();
        }
        acc
    });
    Ok(ReducedState { n: 2, rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_pair, ParameterVector};
    use approx::assert_abs_diff_eq;

    fn pair2(alpha: f64, phi: f64) -> KrausPair<f64> {
        build_pair(&ParameterVector::new(2, vec![alpha], vec![phi]).unwrap())
    }

    fn identity_channel(b: usize) -> KrausPair<f64> {
        KrausPair::new(CMatrix::<f64>::zeros(b, b), CMatrix::<f64>::identity(b, b))
    }

    #[test]
    fn identity_kraus_pair_is_exactly_unital() {
        assert_eq!(check_unitality(&identity_channel(2)), 0.0);
    }

    #[test]
    fn optimal_b2_pair_is_unital() {
        assert!(check_unitality(&pair2(0.427079, 0.571859)) <= 1e-14);
    }

    #[test]
    fn doubly_identity_pair_has_sqrt_b_residual() {
        for b in 2..=4usize {
            let pair = KrausPair::new(
                CMatrix::<f64>::identity(b, b),
                CMatrix::<f64>::identity(b, b),
            );
            assert_abs_diff_eq!(check_unitality(&pair), (b as f64).sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_angles_give_pure_spin_up() {
        let aux = solve_invariant_state(&pair2(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(aux.rho[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert!(aux.rho[(1, 1)].norm() < 1e-12);
        assert_eq!(aux.rank, 3);
    }

    #[test]
    fn optimal_b2_state_has_half_bloch_length() {
        let aux = solve_invariant_state(&pair2(0.427079, 0.571859)).unwrap();
        let bl = crate::params::bloch_length_sq(&aux.rho);
        assert_abs_diff_eq!(bl, 0.5, epsilon = 1e-5);
        assert!(aux.fixed_point_residual <= 1e-9);
    }

    #[test]
    fn identity_channel_has_degenerate_nullspace() {
        match solve_invariant_state(&identity_channel(2)) {
            Err(FcsError::NullspaceDegenerate { dim }) => assert_eq!(dim, 4),
            other => panic!("expected degenerate nullspace, got {other:?}"),
        }
    }

    #[test]
    fn one_site_state_at_zero_angles_is_spin_down() {
        let pair = pair2(0.0, 0.0);
        let aux = solve_invariant_state(&pair).unwrap();
        let r1 = reduced_density(&pair, &aux, 1).unwrap();
        // rho_B = |up><up| and v1 maps it to the other level
        assert!(r1.rho[(0, 0)].norm() < 1e-12);
        assert_abs_diff_eq!(r1.rho[(1, 1)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_site_state_reproduces_reference_elements() {
        let pair = pair2(0.427079, 0.571859);
        let aux = solve_invariant_state(&pair).unwrap();
        let r12 = reduced_density(&pair, &aux, 2).unwrap();
        assert_abs_diff_eq!(r12.rho[(1, 1)].re, 0.292893, epsilon = 1e-5);
        assert_abs_diff_eq!(r12.rho[(1, 2)].re, 0.207107, epsilon = 1e-5);
        assert_abs_diff_eq!(r12.rho[(1, 3)].re, 0.174155, epsilon = 1e-5);
        assert!(r12.rho[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn nilpotent_generator_zeroes_the_top_left_entry() {
        let pair = pair2(1.234, -0.777);
        let aux = solve_invariant_state(&pair).unwrap();
        let r12 = reduced_density(&pair, &aux, 2).unwrap();
        assert!(r12.rho[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn window_cap_is_enforced() {
        let pair = pair2(0.427079, 0.571859);
        let aux = solve_invariant_state(&pair).unwrap();
        assert!(matches!(
            reduced_density(&pair, &aux, 7),
            Err(FcsError::CapExceeded { n: 7, cap: 6 })
        ));
        assert!(reduced_density_capped(&pair, &aux, 2, 2).is_ok());
        assert!(reduced_density(&pair, &aux, 0).is_err());
    }

    #[test]
    fn marginals_are_consistent_both_ways() {
        let pair = pair2(0.9, 0.4);
        let aux = solve_invariant_state(&pair).unwrap();
        for n in 1..=3usize {
            let small = reduced_density(&pair, &aux, n).unwrap();
            let big = reduced_density(&pair, &aux, n + 1).unwrap();
            let keep_front: Vec<usize> = (1..=n).collect();
            let keep_back: Vec<usize> = (2..=n + 1).collect();
            let front = partial_trace(&big, &keep_front).unwrap();
            let back = partial_trace(&big, &keep_back).unwrap();
            assert!((&front.rho - &small.rho).norm() <= 1e-10);
            assert!((&back.rho - &small.rho).norm() <= 1e-10);
        }
    }

    #[test]
    fn partial_trace_identity_and_bad_subsets() {
        let pair = pair2(0.9, 0.4);
        let aux = solve_invariant_state(&pair).unwrap();
        let r12 = reduced_density(&pair, &aux, 2).unwrap();
        let same = partial_trace(&r12, &[1, 2]).unwrap();
        assert_eq!(same.rho, r12.rho);
        assert!(partial_trace(&r12, &[]).is_err());
        assert!(partial_trace(&r12, &[0]).is_err());
        assert!(partial_trace(&r12, &[3]).is_err());
        assert!(partial_trace(&r12, &[2, 1]).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let pair = pair2(2.1, 1.3);
        let aux = solve_invariant_state(&pair).unwrap();
        let r123 = reduced_density(&pair, &aux, 3).unwrap();
        let r13 = partial_trace(&r123, &[1, 3]).unwrap();
        assert_abs_diff_eq!(r13.rho.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn next_nearest_matches_partial_trace_route() {
        for (a, p) in [(0.427079, 0.571859), (0.88563, 0.25066), (2.7, -1.1)] {
            let pair = pair2(a, p);
            let aux = solve_invariant_state(&pair).unwrap();
            let direct = next_nearest(&pair, &aux).unwrap();
            let r123 = reduced_density(&pair, &aux, 3).unwrap();
            let traced = partial_trace(&r123, &[1, 3]).unwrap();
            assert!((&direct.rho - &traced.rho).norm() <= 1e-12);
        }
    }

    #[test]
    fn marginal_trace_of_optimal_pair_state_has_reference_purity() {
        let pair = pair2(0.427079, 0.571859);
        let aux = solve_invariant_state(&pair).unwrap();
        let r12 = reduced_density(&pair, &aux, 2).unwrap();
        let r1 = partial_trace(&r12, &[1]).unwrap();
        assert_abs_diff_eq!(r1.purity(), 0.646446, epsilon = 1e-5);
    }
}

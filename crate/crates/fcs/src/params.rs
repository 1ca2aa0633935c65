//! Angle parametrization of Kraus pairs and Bloch-vector diagnostics.
//!
//! A pair is generated from unconstrained angles: `v1` is a strictly lower
//! bidiagonal nilpotent matrix with `cos(alpha_k)` weights, and
//! `v2 = diag(1, sin(alpha_1), 1, sin(alpha_2), ...) * R` with `R` in `SO(b)`
//! built from plane rotations. The pair is unital by construction.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::chain::KrausPair;
use crate::error::FcsError;
use crate::{as_f64, real, CMatrix, Real};

/// Unconstrained angles generating a Kraus pair for auxiliary dimension `b`.
///
/// `alpha` has length `b/2` (integer division) and weights the nilpotent
/// generator; `phi` has length `b(b-1)/2` and parametrizes the rotation
/// factor of `v2`. All angles are radians, periodic with `2*pi`, and no
/// range restriction is enforced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct ParameterVector<R: Real> {
    pub b: usize,
    pub alpha: Vec<R>,
    pub phi: Vec<R>,
}

/// Number of `alpha` angles for dimension `b`.
pub fn alpha_count(b: usize) -> usize {
    b / 2
}

/// Number of `phi` angles for dimension `b`.
pub fn phi_count(b: usize) -> usize {
    b * (b - 1) / 2
}

impl<R: Real> ParameterVector<R> {
    pub fn new(b: usize, alpha: Vec<R>, phi: Vec<R>) -> Result<Self, FcsError> {
        if b < 2 || alpha.len() != alpha_count(b) || phi.len() != phi_count(b) {
            return Err(FcsError::BadParameterCount {
                b,
                expected_alpha: alpha_count(b),
                expected_phi: phi_count(b),
                got_alpha: alpha.len(),
                got_phi: phi.len(),
            });
        }
        Ok(Self { b, alpha, phi })
    }

    /// Total number of free angles.
    pub fn dim(&self) -> usize {
        self.alpha.len() + self.phi.len()
    }

    /// Splits a flat angle slice `[alpha.. , phi..]` for dimension `b`.
    pub fn from_flat(b: usize, flat: &[R]) -> Result<Self, FcsError> {
        let na = alpha_count(b);
        if flat.len() != na + phi_count(b) {
            return Err(FcsError::BadParameterCount {
                b,
                expected_alpha: na,
                expected_phi: phi_count(b),
                got_alpha: flat.len().min(na),
                got_phi: flat.len().saturating_sub(na),
            });
        }
        Ok(Self {
            b,
            alpha: flat[..na].to_vec(),
            phi: flat[na..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<R> {
        let mut out = self.alpha.clone();
        out.extend_from_slice(&self.phi);
        out
    }
}

/// The nilpotent generator: `cos(alpha_k)` at row `2k`, column `2k-1`
/// (1-based), zeros elsewhere. Satisfies `v1 * v1 = 0` exactly.
pub fn build_v1<R: Real>(params: &ParameterVector<R>) -> CMatrix<R> {
    let b = params.b;
    let mut v1 = DMatrix::zeros(b, b);
    for (k, &a) in params.alpha.iter().enumerate() {
        v1[(2 * k + 1, 2 * k)] = Complex::new(a.cos(), R::zero());
    }
    v1
}

/// Plane ordering of the rotation factors: `(1,2), (1,3), ..., (1,b),
/// (2,3), ..., (b-1,b)` in 1-based row indices.
pub(crate) fn plane_order(b: usize) -> Vec<(usize, usize)> {
    let mut planes = Vec::with_capacity(phi_count(b));
    for i in 0..b {
        for j in (i + 1)..b {
            planes.push((i, j));
        }
    }
    planes
}

/// Product of `b(b-1)/2` plane rotations, each with `+sin` above the
/// diagonal. Orthogonal with determinant `+1`.
pub fn build_rotation<R: Real>(params: &ParameterVector<R>) -> DMatrix<R> {
    let b = params.b;
    let mut r = DMatrix::identity(b, b);
    for ((i, j), &phi) in plane_order(b).iter().zip(&params.phi) {
        let (s, c) = (phi.sin(), phi.cos());
        // right-multiply by the (i, j) plane rotation: only columns i, j change
        for row in 0..b {
            let (ri, rj) = (r[(row, *i)], r[(row, *j)]);
            r[(row, *i)] = ri * c - rj * s;
            r[(row, *j)] = ri * s + rj * c;
        }
    }
    r
}

/// The unitality-completing partner: `diag(1, sin(alpha_1), 1, ...) * R`.
pub fn build_v2<R: Real>(params: &ParameterVector<R>) -> CMatrix<R> {
    let b = params.b;
    let r = build_rotation(params);
    let mut v2 = DMatrix::zeros(b, b);
    for row in 0..b {
        let d = if row % 2 == 1 {
            params.alpha[row / 2].sin()
        } else {
            R::one()
        };
        for col in 0..b {
            v2[(row, col)] = Complex::new(d * r[(row, col)], R::zero());
        }
    }
    v2
}

/// Builds the default (real, nilpotent) Kraus pair for the given angles.
pub fn build_pair<R: Real>(params: &ParameterVector<R>) -> KrausPair<R> {
    KrausPair::new(build_v1(params), build_v2(params))
}

/// Opt-in extensions of the default parametrization, used only for
/// robustness probes of the optimization landscape.
#[derive(Debug, Clone, Default)]
pub struct PairExtension<R: Real> {
    /// Extra phases, one per plane rotation, turning `R` into a complex
    /// unitary. `None` keeps the real orthogonal default.
    pub r_phases: Option<Vec<R>>,
    /// Superdiagonal weights added to `v1`, making it non-nilpotent in
    /// general. `v1` is rescaled to spectral norm at most 1 and `v2` becomes
    /// the Hermitian square root completion `(1 - v1 v1^dag)^{1/2} R`.
    pub v1_upper: Option<Vec<R>>,
}

impl<R: Real> PairExtension<R> {
    pub fn is_default(&self) -> bool {
        self.r_phases.is_none() && self.v1_upper.is_none()
    }

    /// Number of additional free parameters for dimension `b`.
    pub fn extra_dim(b: usize, complex_r: bool, non_nilpotent: bool) -> usize {
        (if complex_r { phi_count(b) } else { 0 }) + (if non_nilpotent { b - 1 } else { 0 })
    }
}

/// Complex-unitary variant of [`build_rotation`]: each plane factor carries
/// a phase `psi` on its off-diagonal entries.
pub fn build_unitary<R: Real>(params: &ParameterVector<R>, psi: &[R]) -> CMatrix<R> {
    let b = params.b;
    let mut r: CMatrix<R> = DMatrix::identity(b, b);
    for (((i, j), &phi), &ps) in plane_order(b).iter().zip(&params.phi).zip(psi) {
        let c = Complex::new(phi.cos(), R::zero());
        let s_up = Complex::new(ps.cos(), ps.sin()) * phi.sin();
        let s_dn = Complex::new(ps.cos(), -ps.sin()) * phi.sin();
        for row in 0..b {
            let (ri, rj) = (r[(row, *i)], r[(row, *j)]);
            r[(row, *i)] = ri * c - rj * s_dn;
            r[(row, *j)] = ri * s_up + rj * c;
        }
    }
    r
}

/// Builds a Kraus pair with the requested extensions enabled.
///
/// With `v1_upper` present the pair is completed through the Hermitian
/// square root of `1 - v1 v1^dag`, after rescaling `v1` so the completion
/// exists; unitality still holds to machine precision.
pub fn build_pair_extended<R: Real>(
    params: &ParameterVector<R>,
    ext: &PairExtension<R>,
) -> Result<KrausPair<R>, FcsError> {
    if ext.is_default() {
        return Ok(build_pair(params));
    }
    let b = params.b;
    let r: CMatrix<R> = match &ext.r_phases {
        Some(psi) => build_unitary(params, psi),
        None => build_rotation(params).map(|x| Complex::new(x, R::zero())),
    };
    let mut v1 = build_v1(params);
    match &ext.v1_upper {
        None => {
            let mut v2 = DMatrix::zeros(b, b);
            for row in 0..b {
                let d = if row % 2 == 1 {
                    params.alpha[row / 2].sin()
                } else {
                    R::one()
                };
                for col in 0..b {
                    v2[(row, col)] = r[(row, col)] * d;
                }
            }
            Ok(KrausPair::new(v1, v2))
        }
        Some(upper) => {
            for (j, &u) in upper.iter().enumerate().take(b - 1) {
                v1[(j, j + 1)] += Complex::new(u, R::zero());
            }
            let gram = &v1 * v1.adjoint();
            let eig = crate::linalg::hermitian_eigen(&gram);
            let lmax = eig
                .eigenvalues
                .iter()
                .cloned()
                .fold(R::zero(), |m, x| if x > m { x } else { m });
            if lmax > R::one() {
                let scale = Complex::new((lmax * (R::one() + real(1e-14))).sqrt(), R::zero());
                v1.apply(|x| *x /= scale);
            }
            let gram = &v1 * v1.adjoint();
            let eig = crate::linalg::hermitian_eigen(&(CMatrix::<R>::identity(b, b) - gram));
            let min_eig = eig
                .eigenvalues
                .iter()
                .cloned()
                .fold(R::one(), |m, x| if x < m { x } else { m });
            if min_eig < real(-1e-10) {
                return Err(FcsError::InvalidCompletion {
                    min_eig: as_f64(min_eig),
                });
            }
            let mut sqrt_diag = CMatrix::<R>::zeros(b, b);
            for (k, &ev) in eig.eigenvalues.iter().enumerate() {
                let clipped = if ev < R::zero() { R::zero() } else { ev };
                sqrt_diag[(k, k)] = Complex::new(clipped.sqrt(), R::zero());
            }
            let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint();
            Ok(KrausPair::new(v1, root * r))
        }
    }
}

/// Bloch decomposition of a `b x b` density matrix, `b` in {2, 3}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct BlochVector<R: Real> {
    pub b: usize,
    /// Pauli components for b=2 (length 3), Gell-Mann components for b=3
    /// (length 8).
    pub components: Vec<R>,
    pub length_sq: R,
}

/// `(b * Tr rho^2 - 1) / (b - 1)`: squared generalized Bloch length, valid
/// for any dimension.
pub fn bloch_length_sq<R: Real>(rho: &CMatrix<R>) -> R {
    let b = real::<R>(rho.nrows() as f64);
    let purity = (rho * rho).trace().re;
    (b * purity - R::one()) / (b - R::one())
}

fn pauli_matrices<R: Real>() -> [CMatrix<R>; 3] {
    let o = R::zero();
    let l = R::one();
    let c = Complex::new;
    [
        DMatrix::from_row_slice(2, 2, &[c(o, o), c(l, o), c(l, o), c(o, o)]),
        DMatrix::from_row_slice(2, 2, &[c(o, o), c(o, -l), c(o, l), c(o, o)]),
        DMatrix::from_row_slice(2, 2, &[c(l, o), c(o, o), c(o, o), c(-l, o)]),
    ]
}

/// The eight Gell-Mann matrices in the standard ordering.
pub fn gell_mann_matrices<R: Real>() -> [CMatrix<R>; 8] {
    let o = R::zero();
    let l = R::one();
    let q = real::<R>(1.0 / 3.0f64.sqrt());
    let c = Complex::new;
    let m = |rows: &[Complex<R>]| DMatrix::from_row_slice(3, 3, rows);
    [
        m(&[c(o, o), c(l, o), c(o, o), c(l, o), c(o, o), c(o, o), c(o, o), c(o, o), c(o, o)]),
        m(&[c(o, o), c(o, -l), c(o, o), c(o, l), c(o, o), c(o, o), c(o, o), c(o, o), c(o, o)]),
        m(&[c(l, o), c(o, o), c(o, o), c(o, o), c(-l, o), c(o, o), c(o, o), c(o, o), c(o, o)]),
        m(&[c(o, o), c(o, o), c(l, o), c(o, o), c(o, o), c(o, o), c(l, o), c(o, o), c(o, o)]),
        m(&[c(o, o), c(o, o), c(o, -l), c(o, o), c(o, o), c(o, o), c(o, l), c(o, o), c(o, o)]),
        m(&[c(o, o), c(o, o), c(o, o), c(o, o), c(o, o), c(l, o), c(o, o), c(l, o), c(o, o)]),
        m(&[c(o, o), c(o, o), c(o, o), c(o, o), c(o, o), c(o, -l), c(o, o), c(o, l), c(o, o)]),
        m(&[c(q, o), c(o, o), c(o, o), c(o, o), c(q, o), c(o, o), c(o, o), c(o, o), c(-(q + q), o)]),
    ]
}

/// Component decomposition in the Pauli basis (b=2, `n_i = Tr(rho sigma_i)`)
/// or the Gell-Mann basis (b=3, `n_i = sqrt(3)/2 * Tr(rho lambda_i)`).
pub fn bloch_decompose<R: Real>(rho: &CMatrix<R>) -> Result<BlochVector<R>, FcsError> {
    let b = rho.nrows();
    if rho.ncols() != b {
        return Err(FcsError::BadShape {
            expected: b,
            rows: rho.nrows(),
            cols: rho.ncols(),
        });
    }
    let components: Vec<R> = match b {
        2 => pauli_matrices::<R>()
            .iter()
            .map(|s| (rho * s).trace().re)
            .collect(),
        3 => {
            let scale = real::<R>(3.0f64.sqrt() / 2.0);
            gell_mann_matrices::<R>()
                .iter()
                .map(|l| (rho * l).trace().re * scale)
                .collect()
        }
        _ => return Err(FcsError::UnsupportedDimension { b }),
    };
    let length_sq = components.iter().map(|&x| x * x).fold(R::zero(), |a, x| a + x);
    Ok(BlochVector {
        b,
        components,
        length_sq,
    })
}

/// [`ellipse_residual`] evaluated directly on a 2x2 density matrix.
pub fn ellipse_residual_of_state<R: Real>(rho: &CMatrix<R>) -> Result<R, FcsError> {
    Ok(ellipse_residual(&bloch_decompose(rho)?))
}

/// Residual of the b=2 invariant-state ellipse
/// `n1^2 / (1/2) + (n3 - 1/2)^2 / (1/4) = 1`; zero on the ellipse.
pub fn ellipse_residual<R: Real>(bloch: &BlochVector<R>) -> R {
    let n1 = bloch.components[0];
    let n3 = bloch.components[2];
    let half = real::<R>(0.5);
    let quarter = real::<R>(0.25);
    n1 * n1 / half + (n3 - half) * (n3 - half) / quarter - R::one()
}

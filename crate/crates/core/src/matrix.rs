//! Small dense spectral toolkit for ML-matrices (nonnegative off-diagonal).
//!
//! The Perron root of an ML-matrix `A` is found by shifting to the
//! nonnegative matrix `A + σI` and running power iteration, with the
//! Collatz–Wielandt bounds `min_i (Bv)_i / v_i <= ρ(B) <= max_i (Bv)_i / v_i`
//! serving as the stopping rule. When those bounds fail to close (reducible
//! input, zero entries in the iterate) we fall back to a Schur-based dense
//! eigen-solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual accepted from the eigen-solver.
pub const EIGEN_TOL: f64 = 1e-12;
/// Power iteration budget.
pub const MAX_POWER_ITERS: usize = 10_000;

/// A square matrix whose off-diagonal entries are all nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlMatrix(DMatrix<f64>);

impl MlMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_finite(&m)?;
        let k = m.nrows();
        for i in 0..k {
            for j in 0..k {
                if i != j && m[(i, j)] < 0.0 {
                    return Err(Error::param(format!(
                        "not an ML-matrix: entry ({}, {}) = {} is negative",
                        i + 1,
                        j + 1,
                        m[(i, j)]
                    )));
                }
            }
        }
        Ok(MlMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for MlMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Build a dense matrix from row vectors, rejecting ragged input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::param("matrix must have at least one row"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != k {
            return Err(Error::param(format!("row {} has {} entries, expected {}", i + 1, r.len(), k)));
        }
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::param(format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if let Some(x) = m.iter().find(|x| !x.is_finite()) {
        return Err(Error::param(format!("matrix entry {x} is not finite")));
    }
    Ok(())
}

/// Spectral abscissa of an ML-matrix with its Perron vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    /// Largest real part over the spectrum.
    pub abscissa: f64,
    pub right_vector: DVector<f64>,
    pub left_vector: DVector<f64>,
    /// `max(‖A r − λ r‖∞, ‖Aᵀ l − λ l‖∞)` for the normalized vectors.
    pub residual: f64,
}

/// Largest real part of the spectrum of `a`, with right and left eigenvectors.
///
/// For irreducible input both vectors are strictly positive.
pub fn spectral_abscissa(a: &MlMatrix) -> Result<SpectralData> {
    let m = a.as_matrix();
    let k = m.nrows();
    let sigma = (0..k).map(|i| m[(i, i)].abs()).fold(0.0, f64::max) + 1.0;
    let shifted = m + DMatrix::identity(k, k) * sigma;
    let scale = shifted.abs().row_sum().max().max(1.0);

    let right = power_iterate(&shifted, scale);
    let left = power_iterate(&shifted.transpose(), scale);
    if let (Some((rho, r)), Some((_, l))) = (right, left) {
        let abscissa = rho - sigma;
        let residual = eigen_residual(m, abscissa, &r).max(eigen_residual(&m.transpose(), abscissa, &l));
        if residual <= EIGEN_TOL * scale {
            return Ok(SpectralData { abscissa, right_vector: r, left_vector: l, residual });
        }
    }
    dense_fallback(m, scale)
}

/// Perron pair of an irreducible ML-matrix; both vectors strictly positive
/// and normalized to sum 1.
pub fn perron_pair(a: &MlMatrix) -> Result<SpectralData> {
    if let Some((i, j)) = unreachable_pair(a) {
        return Err(Error::param(format!("matrix is reducible: type {} cannot reach type {}", i + 1, j + 1)));
    }
    let data = spectral_abscissa(a)?;
    if data.right_vector.iter().chain(data.left_vector.iter()).any(|&x| x <= 0.0) {
        return Err(Error::numeric("Perron vector has non-positive entries", data.residual));
    }
    Ok(data)
}

/// Whether the directed graph of positive off-diagonal entries is strongly connected.
pub fn is_irreducible(a: &MlMatrix) -> bool {
    unreachable_pair(a).is_none()
}

/// First pair `(i, j)` such that `j` is not reachable from `i`.
pub fn unreachable_pair(a: &MlMatrix) -> Option<(usize, usize)> {
    let k = a.dim();
    for start in 0..k {
        let reach = reachable_from(a.as_matrix(), start);
        if let Some(j) = reach.iter().position(|&r| !r) {
            return Some((start, j));
        }
    }
    None
}

/// Types reachable from `start` along positive off-diagonal entries (including `start`).
pub fn reachable_from(m: &DMatrix<f64>, start: usize) -> Vec<bool> {
    let k = m.nrows();
    let mut seen = vec![false; k];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if j != i && !seen[j] && m[(i, j)] > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn power_iterate(b: &DMatrix<f64>, scale: f64) -> Option<(f64, DVector<f64>)> {
    let k = b.nrows();
    let mut v = DVector::from_element(k, 1.0 / k as f64);
    for _ in 0..MAX_POWER_ITERS {
        let w = b * &v;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..k {
            if v[i] <= f64::MIN_POSITIVE {
                // Collatz-Wielandt bounds need a positive iterate.
                return None;
            }
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let total = w.sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        v = w / total;
        if hi - lo <= 0.1 * EIGEN_TOL * scale {
            let rho = 0.5 * (hi + lo);
            normalize_vector(&mut v);
            return Some((rho, v));
        }
    }
    None
}

fn dense_fallback(m: &DMatrix<f64>, scale: f64) -> Result<SpectralData> {
    let eig = m.clone().complex_eigenvalues();
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let k = m.nrows();
    let shifted = m - DMatrix::identity(k, k) * abscissa;
    let r = null_vector(&shifted);
    let l = null_vector(&shifted.transpose());
    let residual = eigen_residual(m, abscissa, &r).max(eigen_residual(&m.transpose(), abscissa, &l));
    if residual > 1e3 * EIGEN_TOL * scale || !abscissa.is_finite() {
        return Err(Error::numeric("eigen-solve did not converge", residual));
    }
    Ok(SpectralData { abscissa, right_vector: r, left_vector: l, residual })
}

fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let mut v = v_t.row(idx).transpose();
    normalize_vector(&mut v);
    v
}

/// Sign fixed by the first nonzero entry, then scaled to sum 1 when possible.
fn normalize_vector(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 0.0) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
    for x in v.iter_mut() {
        if x.abs() < 1e-300 {
            *x = 0.0;
        }
    }
    let s = v.sum();
    if s > 0.0 {
        *v /= s;
    }
}

fn eigen_residual(m: &DMatrix<f64>, lambda: f64, v: &DVector<f64>) -> f64 {
    let norm = v.amax();
    if norm == 0.0 {
        return f64::INFINITY;
    }
    (m * v - v * lambda).amax() / norm
}

// Padé [13/13] coefficients for exp.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(t·a)` by scaling and squaring with a degree-13 Padé approximant.
pub fn mat_exp(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    check_square_finite(a)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(format!("mat_exp needs finite t >= 0, got {t}")));
    }
    let k = a.nrows();
    let id = DMatrix::<f64>::identity(k, k);
    let at = a * t;
    let norm1 = at.abs().column_sum().max();
    if norm1 == 0.0 {
        return Ok(id);
    }
    let s = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    if s > 1000 {
        return Err(Error::numeric(format!("mat_exp overflow: ‖tA‖₁ = {norm1:e} is too large, rescale"), norm1));
    }
    let x = at * 2f64.powi(-s);
    let b = &PADE13;
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let u_inner = &x6 * (&x6 * b[13] + &x4 * b[11] + &x2 * b[9]) + &x6 * b[7] + &x4 * b[5] + &x2 * b[3] + &id * b[1];
    let u = &x * u_inner;
    let v = &x6 * (&x6 * b[12] + &x4 * b[10] + &x2 * b[8]) + &x6 * b[6] + &x4 * b[4] + &x2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::numeric("Padé denominator is singular", f64::NAN))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric(format!("mat_exp overflow for ‖tA‖₁ = {norm1:e}"), f64::INFINITY));
    }
    Ok(r)
}

/// Solve `m x = rhs` by LU with partial pivoting.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = m.clone().lu();
    let x = lu.solve(rhs).ok_or_else(|| Error::numeric("singular matrix in linear solve", f64::NAN))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("linear solve produced non-finite values", f64::INFINITY));
    }
    Ok(x)
}

/// Smallest real part over the spectrum of `phi` when `-phi` is an ML-matrix,
/// i.e. `-λ(-Φ)`.
pub fn bottom_eigenvalue(phi: &DMatrix<f64>) -> Result<f64> {
    let neg = MlMatrix::new(-phi)?;
    Ok(-spectral_abscissa(&neg)?.abscissa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::*;
    use proptest::prelude::*;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    fn ml(rows: &[&[f64]]) -> MlMatrix {
        MlMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_abscissa() {
        let d = spectral_abscissa(&ml(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!(close(d.abscissa, 1.0, 1e-12));
        assert!(d.right_vector.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn conservative_generator() {
        let d = perron_pair(&ml(&[&[-1.0, 1.0], &[1.0, -1.0]])).unwrap();
        assert!(close(d.abscissa, 0.0, 1e-12));
        for i in 0..2 {
            assert!(close(d.right_vector[i], 0.5, 1e-12));
            assert!(close(d.left_vector[i], 0.5, 1e-12));
        }
    }

    #[test]
    fn asymmetric_rows() {
        // eigenvalues of [[-2,1],[2,-1]] are {0, -3}
        let d = spectral_abscissa(&ml(&[&[-2.0, 1.0], &[2.0, -1.0]])).unwrap();
        assert!(close(d.abscissa, 0.0, 1e-12));
    }

    #[test]
    fn sqrt_two_root() {
        let d = perron_pair(&ml(&[&[0.0, 2.0], &[1.0, 0.0]])).unwrap();
        assert!(close(d.abscissa, 2f64.sqrt(), 1e-12));
        let r = &d.right_vector;
        assert!(close(r[0] / r[1], 2f64.sqrt(), 1e-10));
        assert!(close(r.sum(), 1.0, 1e-14));
    }

    #[test]
    fn reducible_pair_is_named() {
        let err = perron_pair(&ml(&[&[-1.0, 1.0], &[0.0, 0.0]])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("type 2 cannot reach type 1"), "{msg}");
    }

    #[test]
    fn reducible_still_has_abscissa() {
        let d = spectral_abscissa(&ml(&[&[-1.0, 1.0], &[0.0, 0.0]])).unwrap();
        assert!(close(d.abscissa, 0.0, 1e-10));
        let d = spectral_abscissa(&ml(&[&[-3.0, 0.0], &[0.0, -1.0]])).unwrap();
        assert!(close(d.abscissa, -1.0, 1e-10));
    }

    #[test]
    fn non_ml_rejected() {
        assert!(MlMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).is_err());
        assert!(MlMatrix::from_rows(&[vec![0.0, 1.0]]).is_err());
        assert!(MlMatrix::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&ml(&[&[-1.0, 1.0], &[1.0, -1.0]])));
        assert!(!is_irreducible(&ml(&[&[-1.0, 1.0], &[0.0, 0.0]])));
        assert!(is_irreducible(&ml(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]])));
        assert!(is_irreducible(&ml(&[&[5.0]])));
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(mat_exp(&z, 7.0).unwrap(), DMatrix::identity(3, 3));
        let d = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let e = mat_exp(&d, 1.0).unwrap();
        assert!(close(e[(0, 0)], (-1f64).exp(), 1e-15));
        assert!(close(e[(1, 1)], (-2f64).exp(), 1e-15));
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn exp_symmetric_generator() {
        let g = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        for &t in &[0.1, 0.5, 1.0, 3.0, 20.0] {
            let e = mat_exp(&g, t).unwrap();
            let d = (1.0 + (-2.0 * t).exp()) / 2.0;
            let o = (1.0 - (-2.0 * t).exp()) / 2.0;
            assert!(close(e[(0, 0)], d, 1e-14));
            assert!(close(e[(1, 1)], d, 1e-14));
            assert!(close(e[(0, 1)], o, 1e-14));
            assert!(close(e[(1, 0)], o, 1e-14));
        }
    }

    #[test]
    fn exp_matches_nalgebra_reference() {
        let a = DMatrix::from_row_slice(3, 3, &[-4.0, 1.5, 2.5, 0.3, -1.0, 0.7, 3.0, 0.0, -3.0]);
        for &t in &[0.01, 1.0, 6.0] {
            let mine = mat_exp(&a, t).unwrap();
            let reference = (&a * t).exp();
            assert!((mine - reference).amax() < 1e-12);
        }
    }

    #[test]
    fn exp_overflow_is_an_error() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(mat_exp(&a, 1e6).is_err());
    }

    #[test]
    fn bottom_eigenvalue_of_m_matrix() {
        let phi = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 3.0]);
        // eigenvalues (5 ± √5)/2
        assert!(close(bottom_eigenvalue(&phi).unwrap(), (5.0 - 5f64.sqrt()) / 2.0, 1e-12));
    }

    /// Random irreducible ML-matrix: positive off-diagonal, diagonal in [-3, 0].
    fn ml_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (2usize..5).prop_flat_map(|k| {
            prop::collection::vec(0.05f64..2.0, k * k).prop_flat_map(move |off| {
                prop::collection::vec(-3.0f64..0.0, k)
                    .prop_map(move |diag| DMatrix::from_fn(k, k, |i, j| if i == j { diag[i] } else { off[i * k + j] }))
            })
        })
    }

    proptest! {
        #[test]
        fn monotone_dominance(b in ml_strategy(), bump in 0.01f64..0.5, pos in 0usize..25) {
            let k = b.nrows();
            let mut a = b.clone();
            a[(pos / k % k, pos % k)] += bump;
            let ea = mat_exp(&a, 1.0).unwrap();
            let eb = mat_exp(&b, 1.0).unwrap();
            for (x, y) in ea.iter().zip(eb.iter()) {
                prop_assert!(x > y);
            }
            let sa = spectral_abscissa(&MlMatrix::new(a).unwrap()).unwrap().abscissa;
            let sb = spectral_abscissa(&MlMatrix::new(b).unwrap()).unwrap().abscissa;
            prop_assert!(sa > sb);
        }

        #[test]
        fn abscissa_continuity(a in ml_strategy(), pos in 0usize..25) {
            let k = a.nrows();
            let mut p = a.clone();
            p[(pos / k % k, pos % k)] += 1e-8;
            let s0 = spectral_abscissa(&MlMatrix::new(a).unwrap()).unwrap().abscissa;
            let s1 = spectral_abscissa(&MlMatrix::new(p).unwrap()).unwrap().abscissa;
            prop_assert!((s1 - s0).abs() <= 1e-5);
        }

        #[test]
        fn shift_equivariance(a in ml_strategy(), c in -5.0f64..5.0) {
            let k = a.nrows();
            let s0 = spectral_abscissa(&MlMatrix::new(a.clone()).unwrap()).unwrap().abscissa;
            let shifted = a + DMatrix::identity(k, k) * c;
            let s1 = spectral_abscissa(&MlMatrix::new(shifted).unwrap()).unwrap().abscissa;
            prop_assert!((s1 - (s0 + c)).abs() <= 1e-10 * (1.0 + s0.abs() + c.abs()));
        }

        #[test]
        fn exp_semigroup(a in ml_strategy(), s in 0.0f64..1.5, t in 0.0f64..1.5) {
            let lhs = mat_exp(&a, s + t).unwrap();
            let rhs = mat_exp(&a, s).unwrap() * mat_exp(&a, t).unwrap();
            prop_assert!((&lhs - &rhs).amax() <= 1e-10 * lhs.amax().max(1.0));
        }
    }
}

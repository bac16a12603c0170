//! Composite-index bookkeeping and the two realignments that define
//! 2-unitarity, plus the elementary matrix builders used throughout.
//!
//! A matrix of order `N = d²` is addressed by a four-index `(j,k; l,m)`:
//! row `(j,k)`, column `(l,m)`, each pair flattened row-major as `j·d + k`.
//! Reshuffling and partial transpose rearrange that four-index:
//!
//! ```text
//! X^R_{jk;lm} = X_{jl;km}        X^Γ_{jk;lm} = X_{jm;lk}
//! ```
//!
//! Both are entry permutations, hence involutions that preserve every
//! entrywise norm.

use num_traits::Zero;

use crate::{cmod, first_non_finite, max_abs, CMatrix, Complex, Error, Real, Result};

/// The `(d, N = d²)` pair fixing the composite-index convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BipartiteShape {
    d: usize,
    n: usize,
}

impl BipartiteShape {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig(format!(
                "local dimension must be at least 2, got {d}"
            )));
        }
        Ok(Self { d, n: d * d })
    }

    /// Infers the shape from a square matrix of order d².
    pub fn of_matrix<T: Real>(m: &CMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch {
                rows: m.nrows(),
                cols: m.ncols(),
                n: m.nrows(),
            });
        }
        let n = m.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d < 2 || d * d != n {
            return Err(Error::NotASquare { n });
        }
        Ok(Self { d, n })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major composite index: `(j,k) -> j·d + k`.
    #[inline]
    pub fn compose(&self, j: usize, k: usize) -> Result<usize> {
        if j >= self.d || k >= self.d {
            return Err(Error::IndexOutOfRange { j, k, d: self.d });
        }
        Ok(j * self.d + k)
    }

    /// Inverse of [`compose`](Self::compose).
    #[inline]
    pub fn decompose(&self, flat: usize) -> (usize, usize) {
        (flat / self.d, flat % self.d)
    }

    fn check<T: Real>(&self, x: &CMatrix<T>) -> Result<()> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::ShapeMismatch {
                rows: x.nrows(),
                cols: x.ncols(),
                n: self.n,
            });
        }
        Ok(())
    }
}

/// `Y_{jk;lm} = X_{jl;km}`.
pub fn reshuffle<T: Real>(x: &CMatrix<T>, shape: BipartiteShape) -> Result<CMatrix<T>> {
    shape.check(x)?;
    let d = shape.d();
    let mut y = CMatrix::<T>::zeros(shape.n(), shape.n());
    for j in 0..d {
        for k in 0..d {
            for l in 0..d {
                for m in 0..d {
                    y[(j * d + k, l * d + m)] = x[(j * d + l, k * d + m)];
                }
            }
        }
    }
    Ok(y)
}

/// `Y_{jk;lm} = X_{jm;lk}` (transpose on the second tensor factor).
pub fn partial_transpose<T: Real>(x: &CMatrix<T>, shape: BipartiteShape) -> Result<CMatrix<T>> {
    shape.check(x)?;
    let d = shape.d();
    let mut y = CMatrix::<T>::zeros(shape.n(), shape.n());
    for j in 0..d {
        for k in 0..d {
            for l in 0..d {
                for m in 0..d {
                    y[(j * d + k, l * d + m)] = x[(j * d + m, l * d + k)];
                }
            }
        }
    }
    Ok(y)
}

/// Kronecker product consistent with the row-major composite index:
/// `(A ⊗ B)[(j,k),(l,m)] = A[j,l]·B[k,m]`.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Fourier matrix with unimodular entries `exp(i·2π·jk/d)`.
pub fn fourier_unimodular<T: Real>(d: usize) -> CMatrix<T> {
    let step = T::two_pi() / T::from_usize(d).unwrap();
    CMatrix::<T>::from_fn(d, d, |j, k| {
        let phase = step * T::from_usize((j * k) % d).unwrap();
        Complex::new(phase.cos(), phase.sin())
    })
}

/// Unitary Fourier matrix, `fourier_unimodular(d) / √d`.
pub fn fourier_unitary<T: Real>(d: usize) -> CMatrix<T> {
    let scale = T::one() / T::from_usize(d).unwrap().sqrt();
    fourier_unimodular::<T>(d) * Complex::new(scale, T::zero())
}

/// Cyclic shift: `X|k⟩ = |k+1 mod d⟩`.
pub fn shift_x<T: Real>(d: usize) -> CMatrix<T> {
    CMatrix::<T>::from_fn(d, d, |row, col| {
        if row == (col + 1) % d {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::zero()
        }
    })
}

/// Anti-diagonal permutation: `A|k⟩ = |d−1−k⟩`.
pub fn anti_diagonal_a<T: Real>(d: usize) -> CMatrix<T> {
    CMatrix::<T>::from_fn(d, d, |row, col| {
        if row + col == d - 1 {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::zero()
        }
    })
}

/// Generalized CNOT: `P = Σ_j |j⟩⟨j| ⊗ X^j`, so `P|j,k⟩ = |j, (k+j) mod d⟩`.
pub fn controlled_shift_p<T: Real>(d: usize) -> CMatrix<T> {
    let n = d * d;
    let mut p = CMatrix::<T>::zeros(n, n);
    for j in 0..d {
        for k in 0..d {
            p[(j * d + (k + j) % d, j * d + k)] = Complex::new(T::one(), T::zero());
        }
    }
    p
}

/// Result of a unitarity check.
#[derive(Clone, Copy, Debug)]
pub struct UnitarityReport<T> {
    /// `‖(U/s)(U/s)† − I‖_max`.
    pub residual: T,
    pub pass: bool,
}

/// Checks `(U/scale)(U/scale)† = I` in the max norm.
pub fn is_unitary<T: Real>(u: &CMatrix<T>, scale: T, tol: T) -> Result<UnitarityReport<T>> {
    if u.nrows() != u.ncols() {
        return Err(Error::ShapeMismatch {
            rows: u.nrows(),
            cols: u.ncols(),
            n: u.nrows(),
        });
    }
    if let Some((row, col)) = first_non_finite(u) {
        return Err(Error::NonFinite { row, col });
    }
    let residual = unitarity_residual(u, scale);
    Ok(UnitarityReport {
        residual,
        pass: residual <= tol,
    })
}

fn unitarity_residual<T: Real>(u: &CMatrix<T>, scale: T) -> T {
    let n = u.nrows();
    let gram = u * u.adjoint();
    let s2 = scale * scale;
    let mut worst = T::zero();
    for row in 0..n {
        for col in 0..n {
            let mut g = gram[(row, col)] / Complex::new(s2, T::zero());
            if row == col {
                g.re -= T::one();
            }
            worst = worst.max(cmod(g));
        }
    }
    worst
}

/// Residuals of the three unitarity conditions defining 2-unitarity.
#[derive(Clone, Copy, Debug)]
pub struct TwoUnitarityReport<T> {
    pub u_residual: T,
    pub reshuffle_residual: T,
    pub transpose_residual: T,
    pub pass: bool,
}

impl<T: Real> TwoUnitarityReport<T> {
    pub fn worst(&self) -> T {
        self.u_residual
            .max(self.reshuffle_residual)
            .max(self.transpose_residual)
    }
}

/// Checks that `U`, `U^R` and `U^Γ` are all unitary at the given scale.
pub fn is_two_unitary<T: Real>(
    u: &CMatrix<T>,
    shape: BipartiteShape,
    scale: T,
    tol: T,
) -> Result<TwoUnitarityReport<T>> {
    shape.check(u)?;
    if let Some((row, col)) = first_non_finite(u) {
        return Err(Error::NonFinite { row, col });
    }
    let u_residual = unitarity_residual(u, scale);
    let reshuffle_residual = unitarity_residual(&reshuffle(u, shape)?, scale);
    let transpose_residual = unitarity_residual(&partial_transpose(u, shape)?, scale);
    let pass = u_residual <= tol && reshuffle_residual <= tol && transpose_residual <= tol;
    Ok(TwoUnitarityReport {
        u_residual,
        reshuffle_residual,
        transpose_residual,
        pass,
    })
}

/// A permutation of `{0, …, n−1}`, stored as the image list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Validates that `image` is a bijection on `{0, …, n−1}`.
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::InvalidConfig(format!(
                    "not a permutation of 0..{n}: image {v} repeated or out of range"
                )));
            }
            seen[v] = true;
        }
        Ok(Self(image))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    /// Matrix with `M e_c = e_{π(c)}`, i.e. `M[π(c), c] = 1`.
    pub fn to_matrix<T: Real>(&self) -> CMatrix<T> {
        let n = self.0.len();
        let mut m = CMatrix::<T>::zeros(n, n);
        for (col, &row) in self.0.iter().enumerate() {
            m[(row, col)] = Complex::new(T::one(), T::zero());
        }
        m
    }
}

/// Frobenius distance between two matrices of equal shape.
pub fn distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    crate::frobenius(&(a - b))
}

/// Max-abs distance between two matrices of equal shape.
pub fn max_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    max_abs(&(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CMat;
    use proptest::prelude::*;

    fn shape(d: usize) -> BipartiteShape {
        BipartiteShape::new(d).unwrap()
    }

    /// Independent oracle: apply an index rearrangement by enumerating all
    /// quadruples directly from its defining equation.
    fn rearrange_by_quadruples(
        x: &CMat,
        d: usize,
        rule: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize),
    ) -> CMat {
        let mut y = CMat::zeros(d * d, d * d);
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    for m in 0..d {
                        let (a, b, c, e) = rule(j, k, l, m);
                        y[(j * d + k, l * d + m)] = x[(a * d + b, c * d + e)];
                    }
                }
            }
        }
        y
    }

    fn counting_matrix(n: usize) -> CMat {
        CMat::from_fn(n, n, |r, c| C64::new((r * n + c + 1) as f64, 0.0))
    }

    fn random_cmatrix(n: usize, seed: u64) -> CMat {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    use crate::C64;

    #[test]
    fn compose_index_convention() {
        let s = shape(6);
        assert_eq!(s.compose(0, 0).unwrap(), 0);
        assert_eq!(s.compose(1, 0).unwrap(), 6);
        assert_eq!(s.compose(5, 5).unwrap(), 35);
        assert!(matches!(
            s.compose(6, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn compose_decompose_round_trip() {
        for d in 2..=8 {
            let s = shape(d);
            for flat in 0..d * d {
                let (j, k) = s.decompose(flat);
                assert_eq!(s.compose(j, k).unwrap(), flat);
            }
        }
    }

    #[test]
    fn reshuffle_entry_bookkeeping() {
        // d=2, entries 1..16 row-major: Y[(0,1),(0,0)] = X[(0,0),(1,0)] = 3.
        let x = counting_matrix(4);
        let y = reshuffle(&x, shape(2)).unwrap();
        assert_eq!(y[(1, 0)].re, 3.0);
    }

    #[test]
    fn partial_transpose_entry_bookkeeping() {
        // d=2, entries 1..16: Y[(0,1),(0,0)] = X[(0,0),(0,1)] = 2.
        let x = counting_matrix(4);
        let y = partial_transpose(&x, shape(2)).unwrap();
        assert_eq!(y[(1, 0)].re, 2.0);
    }

    #[test]
    fn realignments_match_quadruple_enumeration() {
        for d in [2usize, 3] {
            let s = shape(d);
            let x = random_cmatrix(d * d, 17 + d as u64);
            let r_oracle = rearrange_by_quadruples(&x, d, |j, k, l, m| (j, l, k, m));
            let g_oracle = rearrange_by_quadruples(&x, d, |j, k, l, m| (j, m, l, k));
            assert_eq!(reshuffle(&x, s).unwrap(), r_oracle);
            assert_eq!(partial_transpose(&x, s).unwrap(), g_oracle);
        }
    }

    #[test]
    fn partial_transpose_of_identity_is_identity() {
        // Enumerating Γ over all quadruples of I₃₆ gives I₃₆ back; the
        // SWAP pattern appears for the composition Γ∘R instead.
        let s = shape(6);
        let id = CMat::identity(36, 36);
        let g_oracle = rearrange_by_quadruples(&id, 6, |j, k, l, m| (j, m, l, k));
        assert_eq!(partial_transpose(&id, s).unwrap(), g_oracle);
        assert_eq!(g_oracle, id);

        // the SWAP pattern (ones at ((j,k),(k,j))) arises from Γ∘R of I
        let swap = CMat::from_fn(36, 36, |row, col| {
            let (j, k) = s.decompose(row);
            let (l, m) = s.decompose(col);
            if j == m && k == l {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let gr = partial_transpose(&reshuffle(&id, s).unwrap(), s).unwrap();
        assert_eq!(gr, swap);
    }

    #[test]
    fn composed_realignments_are_fixed_permutations() {
        for d in [2usize, 3] {
            let s = shape(d);
            let x = random_cmatrix(d * d, 23 + d as u64);
            let gr = partial_transpose(&reshuffle(&x, s).unwrap(), s).unwrap();
            let rg = reshuffle(&partial_transpose(&x, s).unwrap(), s).unwrap();
            let gr_oracle = rearrange_by_quadruples(&x, d, |j, k, l, m| (j, l, m, k));
            let rg_oracle = rearrange_by_quadruples(&x, d, |j, k, l, m| (j, m, k, l));
            assert_eq!(gr, gr_oracle);
            assert_eq!(rg, rg_oracle);
        }
    }

    #[test]
    fn kron_matches_identity_blocks() {
        let i2 = CMat::identity(2, 2);
        let i3 = CMat::identity(3, 3);
        assert_eq!(kron(&i2, &i3), CMat::identity(6, 6));
    }

    #[test]
    fn kron_associates() {
        let a = random_cmatrix(2, 1);
        let b = random_cmatrix(3, 2);
        let c = random_cmatrix(2, 3);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        assert!(max_distance(&left, &right) < 1e-13);
    }

    #[test]
    fn fourier_conventions() {
        let f2 = fourier_unimodular::<f64>(2);
        assert!((f2[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((f2[(1, 1)].re + 1.0).abs() < 1e-14);
        assert!(f2[(1, 1)].im.abs() < 1e-14);

        let f6 = fourier_unitary::<f64>(6);
        let report = is_unitary(&f6, 1.0, 1e-13).unwrap();
        assert!(report.pass, "residual {}", report.residual);

        // first row of F₃⊗F₃ in the unimodular convention is all ones
        let f3 = fourier_unimodular::<f64>(3);
        let ff = kron(&f3, &f3);
        for c in 0..9 {
            assert!(cmod(ff[(0, c)] - C64::new(1.0, 0.0)) < 1e-14);
        }
    }

    #[test]
    fn fourier_unitary_over_a_range_of_orders() {
        for d in 2..=12 {
            let f = fourier_unitary::<f64>(d);
            let report = is_unitary(&f, 1.0, 1e-12).unwrap();
            assert!(report.pass, "d={d} residual {}", report.residual);
        }
    }

    #[test]
    fn kernels_are_scalar_generic() {
        // the same code paths run in single precision at f32 tolerances
        let f = fourier_unitary::<f32>(6);
        assert!(is_unitary(&f, 1.0f32, 1e-5).unwrap().pass);
        let s = shape(3);
        let f3 = fourier_unimodular::<f32>(3);
        let w = kron(&f3, &f3);
        let r = reshuffle(&w, s).unwrap();
        assert_eq!(reshuffle(&r, s).unwrap(), w);
        let h =
            crate::constructions::hadamard36(&crate::constructions::AffineParams::<f32>::zero());
        assert!(crate::hadamard::is_chm(&h, 1e-4f32).unwrap().pass);
    }

    #[test]
    fn permutation_builders() {
        let x = shift_x::<f64>(6);
        let mut e0 = crate::CVec::zeros(6);
        e0[0] = C64::new(1.0, 0.0);
        let moved = &x * &e0;
        assert!(cmod(moved[1] - C64::new(1.0, 0.0)) < 1e-15);

        // P(6): column (j,k)=(2,3) has its 1 at row (2,5)
        let p = controlled_shift_p::<f64>(6);
        assert_eq!(p[(2 * 6 + 5, 2 * 6 + 3)].re, 1.0);
        assert_eq!(
            p.column(2 * 6 + 3).iter().filter(|z| z.re != 0.0).count(),
            1
        );

        let a = anti_diagonal_a::<f64>(6);
        assert_eq!(&a * &a, CMat::identity(6, 6));
    }

    #[test]
    fn is_unitary_identity_and_nan() {
        let id = CMat::identity(36, 36);
        let report = is_unitary(&id, 1.0, 1e-12).unwrap();
        assert_eq!(report.residual, 0.0);
        assert!(report.pass);

        let mut bad = id;
        bad[(3, 4)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(
            is_unitary(&bad, 1.0, 1e-12),
            Err(Error::NonFinite { row: 3, col: 4 })
        ));
    }

    #[test]
    fn swap_is_not_two_unitary() {
        // SWAP at d=2: U unitary and R-invariant, but the partial transpose
        // collapses to the rank-1 ones pattern, so SWAP is not 2-unitary.
        let d = 2;
        let s = shape(d);
        let mut swap = CMat::zeros(4, 4);
        for j in 0..d {
            for k in 0..d {
                swap[(j * d + k, k * d + j)] = C64::new(1.0, 0.0);
            }
        }
        let report = is_two_unitary(&swap, s, 1.0, 1e-12).unwrap();
        assert!(report.u_residual <= 1e-12);
        assert!(report.reshuffle_residual <= 1e-12);
        assert!(report.transpose_residual > 0.5);
        assert!(!report.pass);
        assert_eq!(reshuffle(&swap, s).unwrap(), swap);

        // confirm rank deficiency of SWAP^Γ by SVD
        let g = partial_transpose(&swap, s).unwrap();
        let svd = crate::kernels::svd(&g).unwrap();
        let rank = svd.singular_values.iter().filter(|&&x| x > 1e-12).count();
        assert_eq!(rank, 1, "the ones pattern has rank 1");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn realignments_are_norm_preserving_involutions(seed in 0u64..1000) {
            let s = shape(6);
            let x = random_cmatrix(36, seed);
            let r = reshuffle(&x, s).unwrap();
            let g = partial_transpose(&x, s).unwrap();
            prop_assert_eq!(reshuffle(&r, s).unwrap(), x.clone());
            prop_assert_eq!(partial_transpose(&g, s).unwrap(), x.clone());
            // entry permutations preserve the multiset of entries exactly,
            // hence every entrywise norm
            let key = |m: &CMat| {
                let mut v: Vec<(u64, u64)> = m
                    .iter()
                    .map(|z| (z.re.to_bits(), z.im.to_bits()))
                    .collect();
                v.sort_unstable();
                v
            };
            prop_assert_eq!(key(&r), key(&x));
            prop_assert_eq!(key(&g), key(&x));
        }
    }
}

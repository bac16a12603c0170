//! Complex-Hadamard predicates and transforms: the CHM check, Butson
//! detection, dephasing, symmetry, and the defect — the one-directional
//! discriminator between Hadamard equivalence classes.

use nalgebra::DMatrix;

use crate::kernels::{rank_from_singular_values, singular_values_real, ThresholdPolicy};
use crate::{cmod, CMatrix, CVector, Complex, Error, RMatrix, Real, Result};

/// Residuals of the two CHM clauses.
#[derive(Clone, Copy, Debug)]
pub struct ChmReport<T> {
    /// `max | |H_jk| − 1 |`.
    pub unimodularity_residual: T,
    /// `‖HH†/n − I‖_max`.
    pub orthogonality_residual: T,
    pub pass: bool,
}

/// A complex Hadamard matrix has unimodular entries and orthogonal rows,
/// `HH† = n·I`.
pub fn is_chm<T: Real>(h: &CMatrix<T>, tol: T) -> Result<ChmReport<T>> {
    if h.nrows() != h.ncols() {
        return Err(Error::ShapeMismatch {
            rows: h.nrows(),
            cols: h.ncols(),
            n: h.nrows(),
        });
    }
    let n = h.nrows();
    let mut unimodularity_residual = T::zero();
    for z in h.iter() {
        unimodularity_residual = unimodularity_residual.max((cmod(*z) - T::one()).abs());
    }
    let scale = T::from_usize(n).unwrap().sqrt();
    let orthogonality_residual = crate::tensor::is_unitary(h, scale, tol)?.residual;
    let pass = unimodularity_residual <= tol && orthogonality_residual <= tol;
    Ok(ChmReport {
        unimodularity_residual,
        orthogonality_residual,
        pass,
    })
}

/// Exact integer form of a Butson-type CHM: entries `exp(i2π·m_jk/q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ButsonMatrix {
    n: usize,
    q: i64,
    exponents: DMatrix<i64>,
}

impl ButsonMatrix {
    pub fn new(q: i64, exponents: DMatrix<i64>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidConfig(format!("root order {q} < 2")));
        }
        if exponents.nrows() != exponents.ncols() {
            return Err(Error::ShapeMismatch {
                rows: exponents.nrows(),
                cols: exponents.ncols(),
                n: exponents.nrows(),
            });
        }
        for (index, &m) in exponents.iter().enumerate() {
            if m < 0 || m >= q {
                return Err(Error::ExponentRange { value: m, q, index });
            }
        }
        Ok(Self {
            n: exponents.nrows(),
            q,
            exponents,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// The root order the exponents are expressed in.
    pub fn q(&self) -> i64 {
        self.q
    }

    /// The smallest root order that still represents every entry; may be
    /// lower than [`q`](Self::q) when all exponents share a factor with it.
    pub fn minimal_q(&self) -> i64 {
        let mut g = self.q;
        for &m in self.exponents.iter() {
            g = gcd(g, m);
            if g == 1 {
                return self.q;
            }
        }
        self.q / g
    }

    pub fn exponents(&self) -> &DMatrix<i64> {
        &self.exponents
    }

    /// Realizes the unimodular complex matrix `exp(i2π·m/q)`.
    pub fn realize<T: Real>(&self) -> CMatrix<T> {
        let step = T::two_pi() / T::from_i64(self.q).unwrap();
        CMatrix::<T>::from_fn(self.n, self.n, |r, c| {
            let phase = step * T::from_i64(self.exponents[(r, c)]).unwrap();
            Complex::new(phase.cos(), phase.sin())
        })
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub const DEFAULT_Q_MAX: i64 = 240;

/// Finds the minimal root order `q ≤ q_max` such that every phase of `h`
/// is within `tol·2π/q` of a multiple of `2π/q`, together with the rounded
/// exponent array. Returns `None` when no root order fits.
pub fn to_butson<T: Real>(h: &CMatrix<T>, q_max: i64, tol: T) -> Option<ButsonMatrix> {
    if h.nrows() != h.ncols() {
        return None;
    }
    let n = h.nrows();
    let two_pi = T::two_pi();
    'outer: for q in 2..=q_max {
        let qf = T::from_i64(q).unwrap();
        let step = two_pi / qf;
        let allowed = tol * step;
        let mut exponents = DMatrix::<i64>::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let z = h[(r, c)];
                let phase = z.im.atan2(z.re);
                let ratio = phase / step;
                let rounded = ratio.round();
                if (ratio - rounded).abs() * step > allowed {
                    continue 'outer;
                }
                let m = num_traits::ToPrimitive::to_i64(&rounded).unwrap_or(0);
                exponents[(r, c)] = m.rem_euclid(q);
            }
        }
        return ButsonMatrix::new(q, exponents).ok();
    }
    None
}

/// A dephased CHM together with the diagonal phases that produced it:
/// `normalized = D₁ · H · D₂`.
#[derive(Clone, Debug)]
pub struct Dephased<T: Real> {
    pub matrix: CMatrix<T>,
    pub row_phases: CVector<T>,
    pub col_phases: CVector<T>,
}

/// Brings a CHM to normalized form: all-ones first row and first column.
pub fn dephase<T: Real>(h: &CMatrix<T>) -> Result<Dephased<T>> {
    if h.nrows() != h.ncols() {
        return Err(Error::ShapeMismatch {
            rows: h.nrows(),
            cols: h.ncols(),
            n: h.nrows(),
        });
    }
    let n = h.nrows();
    let unit = |z: Complex<T>| {
        let m = cmod(z);
        Complex::new(z.re / m, z.im / m)
    };
    // D₂ clears row 0, then D₁ clears column 0; the corner stays 1.
    let col_phases = CVector::<T>::from_fn(n, |k, _| unit(h[(0, k)]).conj());
    let row_phases = CVector::<T>::from_fn(n, |j, _| (unit(h[(j, 0)]) * col_phases[0]).conj());
    let matrix = CMatrix::<T>::from_fn(n, n, |j, k| row_phases[j] * h[(j, k)] * col_phases[k]);
    Ok(Dephased {
        matrix,
        row_phases,
        col_phases,
    })
}

/// `‖H − Hᵀ‖_max ≤ tol`.
pub fn is_symmetric<T: Real>(h: &CMatrix<T>, tol: T) -> bool {
    if h.nrows() != h.ncols() {
        return false;
    }
    let n = h.nrows();
    let mut worst = T::zero();
    for r in 0..n {
        for c in (r + 1)..n {
            worst = worst.max(cmod(h[(r, c)] - h[(c, r)]));
        }
    }
    worst <= tol
}

/// Required spectral gap between kept and dropped singular values for a
/// defect to be reported as a definite integer.
pub const DEFECT_GAP_REQUIREMENT: f64 = 1e3;

/// Defect of a CHM: the dimension of first-order Hadamard-preserving phase
/// deformations beyond the trivial row/column enphasings.
#[derive(Clone, Debug)]
pub struct DefectReport<T> {
    /// `nullity − (2n − 1)` when the spectral gap is clear, `None` when the
    /// spectrum does not separate cleanly ("indeterminate").
    pub defect: Option<usize>,
    /// Real dimension of the solution space of the linearized system.
    pub nullity: usize,
    /// Trivial enphasing dimension subtracted, always `2n − 1`.
    pub trivial_dim: usize,
    /// Spectral gap ratio at the rank cut.
    pub gap_ratio: T,
    /// Singular spectrum of the linearized system, descending.
    pub singular_values: Vec<T>,
}

/// Computes the defect of a CHM `h` by ranking the linearized
/// orthogonality-preservation system with an SVD.
///
/// Unknowns are real phase perturbations `R ∈ ℝ^{n×n}`; every row pair
/// `j < k` contributes the complex equation
/// `Σ_m H_jm·conj(H_km)·(R_jm − R_km) = 0`, i.e. two real rows. The
/// reported defect is the system's nullity minus the `2n − 1` trivial
/// enphasing directions, provided the singular spectrum shows a gap of at
/// least [`DEFECT_GAP_REQUIREMENT`] at the cut.
pub fn defect<T: Real>(h: &CMatrix<T>) -> Result<DefectReport<T>> {
    if h.nrows() != h.ncols() {
        return Err(Error::ShapeMismatch {
            rows: h.nrows(),
            cols: h.ncols(),
            n: h.nrows(),
        });
    }
    let n = h.nrows();
    let pairs = n * (n - 1) / 2;
    let mut system = RMatrix::<T>::zeros(2 * pairs, n * n);
    let mut row = 0;
    for j in 0..n {
        for k in (j + 1)..n {
            for m in 0..n {
                let g = h[(j, m)] * h[(k, m)].conj();
                // coefficient +g on R_jm, −g on R_km
                system[(row, j * n + m)] = g.re;
                system[(row, k * n + m)] = -g.re;
                system[(row + 1, j * n + m)] = g.im;
                system[(row + 1, k * n + m)] = -g.im;
            }
            row += 2;
        }
    }
    let values = singular_values_real(&system)?;
    let report = rank_from_singular_values(values, 2 * pairs, n * n, ThresholdPolicy::Default);
    let trivial_dim = 2 * n - 1;
    let gap_ok = report.gap_ratio >= T::from_f64(DEFECT_GAP_REQUIREMENT).unwrap();
    let defect = if gap_ok && report.nullity >= trivial_dim {
        Some(report.nullity - trivial_dim)
    } else {
        None
    };
    Ok(DefectReport {
        defect,
        nullity: report.nullity,
        trivial_dim,
        gap_ratio: report.gap_ratio,
        singular_values: report.singular_values,
    })
}

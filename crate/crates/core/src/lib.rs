//! Two-unitary complex Hadamard matrices of order 36.
//!
//! A unitary `U` of order `d²` is 2-unitary when its reshuffling `U^R` and
//! partial transpose `U^Γ` are unitary as well. This crate builds the known
//! explicit families of 2-unitary complex Hadamard matrices at `d = 6`
//! (the 19-parameter affine family, the biunimodular triple and its
//! one-parameter deformation), provides the diagnostics that tell them apart
//! (Butson detection, matrix defect, symmetry), and implements the
//! Sinkhorn-style fixed-point search that produces such matrices numerically.
//!
//! All numerical kernels are generic over the real scalar via [`Real`];
//! concrete `f64` aliases are exported at the crate root.

pub mod constructions;
pub mod hadamard;
pub mod io;
pub mod kernels;
pub mod sinkhorn;
pub mod tensor;

mod error;

pub use error::Error;

/// Scalar trait for all numerical kernels. `f32` and `f64` qualify.
pub trait Real:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy
{
}
impl<T> Real for T where
    T: nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy
{
}

/// Complex number over a generic real scalar.
pub type Complex<T> = nalgebra::Complex<T>;
/// Dense complex matrix, the universal carrier.
pub type CMatrix<T> = nalgebra::DMatrix<Complex<T>>;
/// Dense complex vector.
pub type CVector<T> = nalgebra::DVector<Complex<T>>;
/// Dense real matrix (phase tables, defect systems).
pub type RMatrix<T> = nalgebra::DMatrix<T>;

/// Concrete double-precision aliases.
pub type C64 = Complex<f64>;
pub type CMat = CMatrix<f64>;
pub type CVec = CVector<f64>;
pub type RMat = RMatrix<f64>;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Modulus of a complex entry without requiring `num_traits::Float`.
#[inline]
pub fn cmod<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Max-abs entry of a complex matrix.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, &z| acc.max(cmod(z)))
}

/// Frobenius norm of a complex matrix.
pub fn frobenius<T: Real>(m: &CMatrix<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, &z| acc + z.re * z.re + z.im * z.im)
        .sqrt()
}

/// Returns the position of the first non-finite entry, if any.
pub fn first_non_finite<T: Real>(m: &CMatrix<T>) -> Option<(usize, usize)> {
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let z = m[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Some((row, col));
            }
        }
    }
    None
}

//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All physics code is written against [`Real`] so that the same builders,
//! propagators and fits run in `f32` or `f64`. The dense symmetric
//! eigensolver is a per-type hook because it dispatches to the matching
//! LAPACK routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, Zero};

use crate::error::{Error, Result};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Amplitude<Self>
    + 'static
{
    /// Eigen-decomposition of a dense symmetric `n × n` matrix stored
    /// column-major in `matrix`.
    ///
    /// Returns eigenvalues in ascending order. With `vectors` set, `matrix`
    /// is overwritten by the orthonormal eigenvectors (column `k` pairs with
    /// eigenvalue `k`); otherwise its contents are unspecified on return.
    fn symmetric_eigen(matrix: &mut [Self], n: usize, vectors: bool) -> Result<Vec<Self>>;

    /// Lossless-enough conversion used for literals and configuration values.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($t:ty, $syev:ident, $syevd:ident) => {
        impl Real for $t {
            fn symmetric_eigen(matrix: &mut [Self], n: usize, vectors: bool) -> Result<Vec<Self>> {
                if matrix.len() != n * n {
                    return Err(Error::parameter(format!(
                        "dense matrix buffer has {} entries, expected {}",
                        matrix.len(),
                        n * n
                    )));
                }
                if n == 0 {
                    return Ok(Vec::new());
                }
                let order = i32::try_from(n)
                    .map_err(|_| Error::resource(format!("matrix order {n} exceeds LAPACK range")))?;
                let uplo = b'L' as std::ffi::c_char;
                let mut values = vec![0.0 as $t; n];
                let mut info = 0i32;
                let mut query = [0.0 as $t; 1];
                if vectors {
                    let jobz = b'V' as std::ffi::c_char;
                    let mut iquery = [0i32; 1];
                    let minus_one = -1i32;
                    // SAFETY: pointers reference live buffers of the sizes LAPACK expects.
                    unsafe {
                        lapack_sys::$syevd(
                            &jobz, &uplo, &order, matrix.as_mut_ptr(), &order, values.as_mut_ptr(),
                            query.as_mut_ptr(), &minus_one, iquery.as_mut_ptr(), &minus_one, &mut info,
                        );
                    }
                    if info != 0 {
                        return Err(Error::numerical(format!("workspace query failed (info = {info})")));
                    }
                    let lwork = query[0] as i32;
                    let liwork = iquery[0];
                    let mut work = vec![0.0 as $t; lwork.max(1) as usize];
                    let mut iwork = vec![0i32; liwork.max(1) as usize];
                    unsafe {
                        lapack_sys::$syevd(
                            &jobz, &uplo, &order, matrix.as_mut_ptr(), &order, values.as_mut_ptr(),
                            work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
                        );
                    }
                } else {
                    // Two-stage tridiagonalization is BLAS3-bound and several
                    // times faster than the one-stage reduction for large n.
                    let jobz = b'N' as std::ffi::c_char;
                    let minus_one = -1i32;
                    unsafe {
                        lapack_sys::$syev(
                            &jobz, &uplo, &order, matrix.as_mut_ptr(), &order, values.as_mut_ptr(),
                            query.as_mut_ptr(), &minus_one, &mut info,
                        );
                    }
                    if info != 0 {
                        return Err(Error::numerical(format!("workspace query failed (info = {info})")));
                    }
                    let lwork = query[0] as i32;
                    let mut work = vec![0.0 as $t; lwork.max(1) as usize];
                    unsafe {
                        lapack_sys::$syev(
                            &jobz, &uplo, &order, matrix.as_mut_ptr(), &order, values.as_mut_ptr(),
                            work.as_mut_ptr(), &lwork, &mut info,
                        );
                    }
                }
                if info != 0 {
                    return Err(Error::numerical(format!(
                        "symmetric eigensolver failed to converge (info = {info})"
                    )));
                }
                Ok(values)
            }
        }
    };
}

impl_real!(f64, dsyev_2stage_, dsyevd_);
impl_real!(f32, ssyev_2stage_, ssyevd_);

/// Entry type of a state vector: a real scalar or a complex number over one.
///
/// Eigenstates of the (real symmetric) Hamiltonians are real, evolved states
/// are complex; observables accept both.
pub trait Amplitude<T: Real>:
    Copy
    + Zero
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<T, Output = Self>
    + Mul<Output = Self>
    + Debug
    + Send
    + Sync
    + 'static
{
    fn norm_sqr(self) -> T;
    fn conj(self) -> Self;
    fn from_real(x: T) -> Self;

    /// Eigenvalues of the Gram matrix `M M†` of a row-major `rows × cols`
    /// block, equivalently the squared singular values of `M`.
    fn gram_eigenvalues(block: &[Self], rows: usize, cols: usize) -> Result<Vec<T>>;
}

/// `G = M Mᵀ` (or `Mᵀ M` when that is smaller), returned column-major.
fn real_gram<T: Real>(block: &[T], rows: usize, cols: usize) -> (Vec<T>, usize) {
    if rows <= cols {
        let mut g = vec![T::zero(); rows * rows];
        for i in 0..rows {
            let ri = &block[i * cols..(i + 1) * cols];
            for j in 0..=i {
                let rj = &block[j * cols..(j + 1) * cols];
                let s: T = ri.iter().zip(rj).map(|(&a, &b)| a * b).sum();
                g[i + j * rows] = s;
                g[j + i * rows] = s;
            }
        }
        (g, rows)
    } else {
        let mut g = vec![T::zero(); cols * cols];
        for r in 0..rows {
            let row = &block[r * cols..(r + 1) * cols];
            for i in 0..cols {
                let a = row[i];
                if a == T::zero() {
                    continue;
                }
                for j in 0..=i {
                    g[i + j * cols] += a * row[j];
                }
            }
        }
        for i in 0..cols {
            for j in 0..i {
                g[j + i * cols] = g[i + j * cols];
            }
        }
        (g, cols)
    }
}

macro_rules! impl_real_amplitude {
    ($t:ty) => {
        impl Amplitude<$t> for $t {
            fn norm_sqr(self) -> $t {
                self * self
            }
            fn conj(self) -> Self {
                self
            }
            fn from_real(x: $t) -> Self {
                x
            }
            fn gram_eigenvalues(block: &[Self], rows: usize, cols: usize) -> Result<Vec<$t>> {
                if rows == 1 || cols == 1 {
                    return Ok(vec![block.iter().map(|&a| a * a).sum()]);
                }
                let (mut g, n) = real_gram(block, rows, cols);
                <$t as Real>::symmetric_eigen(&mut g, n, false)
            }
        }
    };
}

impl_real_amplitude!(f64);
impl_real_amplitude!(f32);

impl<T: Real> Amplitude<T> for Complex<T> {
    fn norm_sqr(self) -> T {
        Complex::norm_sqr(&self)
    }
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn from_real(x: T) -> Self {
        Complex::new(x, T::zero())
    }
    fn gram_eigenvalues(block: &[Self], rows: usize, cols: usize) -> Result<Vec<T>> {
        if rows == 1 || cols == 1 {
            return Ok(vec![block.iter().map(|a| a.norm_sqr()).sum()]);
        }
        // Hermitian G = A + iB embeds into the real symmetric [[A, -B], [B, A]],
        // whose spectrum is that of G with every eigenvalue doubled.
        let (k, transpose) = if rows <= cols { (rows, false) } else { (cols, true) };
        let mut herm = vec![Complex::<T>::zero(); k * k];
        if !transpose {
            for i in 0..rows {
                let ri = &block[i * cols..(i + 1) * cols];
                for j in 0..=i {
                    let rj = &block[j * cols..(j + 1) * cols];
                    let mut s = Complex::zero();
                    for (a, b) in ri.iter().zip(rj) {
                        s += a * b.conj();
                    }
                    herm[i + j * k] = s;
                    herm[j + i * k] = s.conj();
                }
            }
        } else {
            for r in 0..rows {
                let row = &block[r * cols..(r + 1) * cols];
                for i in 0..cols {
                    let a = row[i].conj();
                    for j in 0..=i {
                        herm[i + j * k] += a * row[j];
                    }
                }
            }
            for i in 0..k {
                for j in 0..i {
                    herm[j + i * k] = herm[i + j * k].conj();
                }
            }
        }
        let n = 2 * k;
        let mut real = vec![T::zero(); n * n];
        for col in 0..k {
            for row in 0..k {
                let z = herm[row + col * k];
                real[row + col * n] = z.re;
                real[(row + k) + (col + k) * n] = z.re;
                real[(row + k) + col * n] = z.im;
                real[row + (col + k) * n] = -z.im;
            }
        }
        let doubled = T::symmetric_eigen(&mut real, n, false)?;
        Ok(doubled.chunks(2).map(|pair| (pair[0] + pair[1]) / T::of(2.0)).collect())
    }
}

/// Euclidean norm of a state vector.
pub fn norm<T: Real, A: Amplitude<T>>(psi: &[A]) -> T {
    psi.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
}

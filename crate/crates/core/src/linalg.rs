//! Small dense kernels shared by the Lanczos, Krylov and Chebyshev code.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::rng::indexed_stream;
use crate::scalar::Real;

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// `diag` has length `n`, `off` length `n - 1`. Returns ascending eigenvalues
/// and, when `vectors` is set, the orthonormal eigenvectors as a column-major
/// `n × n` matrix in matching order.
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T], vectors: bool) -> Result<(Vec<T>, Option<Vec<T>>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), vectors.then(Vec::new)));
    }
    if off.len() + 1 != n {
        return Err(Error::parameter(format!(
            "tridiagonal matrix of order {n} needs {} off-diagonal entries, got {}",
            n - 1,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off.iter().copied().chain(std::iter::once(T::zero())).collect();
    let mut z = if vectors {
        let mut id = vec![T::zero(); n * n];
        for i in 0..n {
            id[i + i * n] = T::one();
        }
        Some(id)
    } else {
        None
    };
    let two = T::of(2.0);
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::numerical(format!("tridiagonal QL did not converge for eigenvalue {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    for k in 0..n {
                        let zk1 = z[k + (i + 1) * n];
                        let zk = z[k + i * n];
                        z[k + (i + 1) * n] = s * zk + c * zk1;
                        z[k + i * n] = c * zk - s * zk1;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let values = order.iter().map(|&k| d[k]).collect();
    let vecs = z.map(|z| {
        let mut sorted = vec![T::zero(); n * n];
        for (dst, &src) in order.iter().enumerate() {
            sorted[dst * n..(dst + 1) * n].copy_from_slice(&z[src * n..(src + 1) * n]);
        }
        sorted
    });
    Ok((values, vecs))
}

/// Spectral edges estimated by Lanczos, widened by the Ritz residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> SpectralBounds<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    /// Bounds widened symmetrically by `fraction` of the width.
    pub fn padded(&self, fraction: T) -> Self {
        let pad = self.width() * fraction;
        SpectralBounds { lower: self.lower - pad, upper: self.upper + pad }
    }
}

/// Extremal eigenvalues of `h` from a Lanczos run started on a random vector.
///
/// Each edge is the extreme Ritz value moved outward by its residual norm, so
/// the returned interval contains the spectrum up to rounding.
pub fn lanczos_extremes<T: Real>(h: &SparseHamiltonian<T>, max_steps: usize, seed: u64) -> Result<SpectralBounds<T>> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::parameter("empty Hamiltonian"));
    }
    if n == 1 {
        let e = h.get(0, 0);
        return Ok(SpectralBounds { lower: e, upper: e });
    }
    let mut rng = indexed_stream(seed, 0);
    let mut v: Vec<T> = (0..n).map(|_| T::of(rng.random::<f64>() - 0.5)).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut prev = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut alphas = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let steps = max_steps.max(2).min(n);
    let mut last: Option<(T, T)> = None;
    for k in 0..steps {
        h.apply_into(&v, &mut w);
        let a = dot(&w, &v);
        let b_prev = betas.last().copied().unwrap_or_else(T::zero);
        for i in 0..n {
            w[i] = w[i] - a * v[i] - b_prev * prev[i];
        }
        alphas.push(a);
        let b = dot(&w, &w).sqrt();
        let (ritz, vecs) = tridiagonal_eigen(&alphas, &betas, true)?;
        let vecs = vecs.unwrap_or_default();
        let m = ritz.len();
        let res_lo = (b * vecs[m - 1]).abs();
        let res_hi = (b * vecs[(m - 1) * m + m - 1]).abs();
        let bounds = (ritz[0] - res_lo, ritz[m - 1] + res_hi);
        let scale = ritz[m - 1].abs().max(ritz[0].abs()).max(T::one());
        let tiny = T::of(1e-10) * scale;
        if b <= tiny || k + 1 == steps {
            return Ok(SpectralBounds { lower: bounds.0, upper: bounds.1 });
        }
        if let Some((lo, hi)) = last {
            if (lo - bounds.0).abs() <= tiny && (hi - bounds.1).abs() <= tiny && res_lo.max(res_hi) <= tiny * T::of(1e4) {
                return Ok(SpectralBounds { lower: bounds.0, upper: bounds.1 });
            }
        }
        last = Some(bounds);
        betas.push(b);
        std::mem::swap(&mut prev, &mut v);
        for i in 0..n {
            v[i] = w[i] / b;
        }
    }
    unreachable!("loop returns on its final step")
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

//! Diagonalization, normalized energies, kernel-polynomial density of states,
//! level-spacing statistics and eigenstate-expansion diagnostics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FockState, SectorBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::linalg::{dot, lanczos_extremes};
use crate::rng::indexed_stream;
use crate::scalar::Real;

/// Largest dimension `full_spectrum` accepts by default.
pub const DEFAULT_DENSE_CAP: usize = 50_000;

/// Ascending spectrum of one Hamiltonian, optionally with eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenSolution<T> {
    energies: Vec<T>,
    vectors: Option<Vec<T>>,
}

impl<T: Real> EigenSolution<T> {
    /// Spectrum without vectors; `energies` is sorted on construction.
    pub fn from_energies(mut energies: Vec<T>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::parameter("empty spectrum"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::numerical("non-finite eigenvalue"));
        }
        energies.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(EigenSolution { energies, vectors: None })
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn e_min(&self) -> T {
        self.energies[0]
    }

    pub fn e_max(&self) -> T {
        self.energies[self.energies.len() - 1]
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    /// Eigenvector `k` (column `k` of the column-major vector matrix).
    pub fn vector(&self, k: usize) -> Option<&[T]> {
        let n = self.dim();
        self.vectors.as_ref().map(|v| &v[k * n..(k + 1) * n])
    }

    fn require_vectors(&self) -> Result<&[T]> {
        self.vectors
            .as_deref()
            .ok_or_else(|| Error::parameter("eigenvectors were not computed for this solution"))
    }

    /// Normalized energies of all levels.
    pub fn normalized(&self) -> Result<Vec<T>> {
        let (lo, hi) = (self.e_min(), self.e_max());
        self.energies.iter().map(|&e| normalized_energy(e, lo, hi)).collect()
    }
}

/// Dense diagonalization with the default size cap.
pub fn full_spectrum<T: Real>(h: &SparseHamiltonian<T>, want_vectors: bool) -> Result<EigenSolution<T>> {
    full_spectrum_capped(h, want_vectors, DEFAULT_DENSE_CAP)
}

/// Dense diagonalization refusing sectors larger than `cap`.
pub fn full_spectrum_capped<T: Real>(
    h: &SparseHamiltonian<T>,
    want_vectors: bool,
    cap: usize,
) -> Result<EigenSolution<T>> {
    let n = h.dim();
    if n > cap {
        return Err(Error::resource(format!(
            "dimension {n} exceeds the dense cap {cap}; use the Chebyshev density of states \
             or Krylov propagation instead of full diagonalization"
        )));
    }
    let mut dense = h.to_dense();
    let energies = T::symmetric_eigen(&mut dense, n, want_vectors)?;
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::numerical("non-finite eigenvalue"));
    }
    Ok(EigenSolution { energies, vectors: want_vectors.then_some(dense) })
}

/// `ε = (E - e_min) / (e_max - e_min)`.
pub fn normalized_energy<T: Real>(e: T, e_min: T, e_max: T) -> Result<T> {
    if !(e_max > e_min) {
        return Err(Error::parameter(format!("degenerate spectral edges [{e_min}, {e_max}]")));
    }
    Ok((e - e_min) / (e_max - e_min))
}

/// Binned density of states on the normalized-energy axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DosProfile<T> {
    /// `bins + 1` edges spanning `[0, 1]`.
    pub bin_edges: Vec<T>,
    /// States per unit ε in each bin.
    pub density: Vec<T>,
    pub total_states: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> DosProfile<T> {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn centers(&self) -> Vec<T> {
        self.bin_edges.windows(2).map(|w| (w[0] + w[1]) / T::of(2.0)).collect()
    }

    /// Number of states in each bin.
    pub fn counts(&self) -> Vec<T> {
        self.bin_edges.windows(2).zip(&self.density).map(|(w, &d)| d * (w[1] - w[0])).collect()
    }

    /// Bin counts divided by the total, summing to one.
    pub fn fractions(&self) -> Vec<T> {
        let total = T::of(self.total_states as f64);
        self.counts().into_iter().map(|c| c / total).collect()
    }
}

fn uniform_edges<T: Real>(bins: usize) -> Vec<T> {
    (0..=bins).map(|k| T::of(k as f64 / bins as f64)).collect()
}

/// Exact histogram of a spectrum on `bins` uniform normalized-energy bins.
pub fn level_histogram<T: Real>(sol: &EigenSolution<T>, bins: usize) -> Result<DosProfile<T>> {
    if bins == 0 {
        return Err(Error::parameter("histogram needs at least one bin"));
    }
    let edges = uniform_edges::<T>(bins);
    let width = T::of(1.0 / bins as f64);
    let mut counts = vec![0usize; bins];
    if sol.e_max() > sol.e_min() {
        for eps in sol.normalized()? {
            let k = (eps.to_f64_lossy() * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
            counts[k] += 1;
        }
    } else {
        counts[0] = sol.dim();
    }
    Ok(DosProfile {
        bin_edges: edges,
        density: counts.into_iter().map(|c| T::of(c as f64) / width).collect(),
        total_states: sol.dim(),
        warnings: Vec::new(),
    })
}

/// Kernel-polynomial settings for [`dos_chebyshev`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSettings {
    pub moments: usize,
    pub probes: usize,
    pub bins: usize,
    /// Fraction of the Lanczos width added on both sides before rescaling.
    pub padding: f64,
    pub lanczos_steps: usize,
}

impl Default for ChebyshevSettings {
    fn default() -> Self {
        ChebyshevSettings { moments: 512, probes: 32, bins: 101, padding: 0.01, lanczos_steps: 300 }
    }
}

/// Density of states from stochastic Chebyshev moments with Jackson damping.
pub fn dos_chebyshev<T: Real>(
    h: &SparseHamiltonian<T>,
    moments: usize,
    probes: usize,
    bins: usize,
    seed: u64,
) -> Result<DosProfile<T>> {
    dos_chebyshev_with(h, ChebyshevSettings { moments, probes, bins, ..Default::default() }, seed)
}

pub fn dos_chebyshev_with<T: Real>(
    h: &SparseHamiltonian<T>,
    settings: ChebyshevSettings,
    seed: u64,
) -> Result<DosProfile<T>> {
    let ChebyshevSettings { moments, probes, bins, padding, lanczos_steps } = settings;
    if moments < 2 || probes == 0 || bins == 0 {
        return Err(Error::parameter("Chebyshev expansion needs ≥ 2 moments, ≥ 1 probe and ≥ 1 bin"));
    }
    let mut warnings = Vec::new();
    if moments < 64 {
        warnings.push(format!("only {moments} Chebyshev moments; resolution is coarse"));
    }
    if probes < 8 {
        warnings.push(format!("only {probes} stochastic probes; trace estimate is noisy"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let dim = h.dim();
    let bounds = lanczos_extremes(h, lanczos_steps, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let edges = uniform_edges::<T>(bins);
    let tiny = T::of(1e-12) * bounds.upper.abs().max(bounds.lower.abs()).max(T::one());
    if bounds.width() <= tiny {
        warnings.push("spectrum is a single point; all states placed in the first bin".into());
        let mut density = vec![T::zero(); bins];
        density[0] = T::of(dim as f64) * T::of(bins as f64);
        return Ok(DosProfile { bin_edges: edges, density, total_states: dim, warnings });
    }
    let padded = bounds.padded(T::of(padding));
    let center = (padded.upper + padded.lower) / T::of(2.0);
    let half = padded.width() / T::of(2.0);

    let per_probe: Vec<Vec<T>> = (0..probes)
        .into_par_iter()
        .map(|p| probe_moments(h, moments, center, half, seed, p as u64))
        .collect();
    let mut mu = vec![T::zero(); moments];
    for m in &per_probe {
        for (acc, &x) in mu.iter_mut().zip(m) {
            *acc += x;
        }
    }
    let r = T::of(probes as f64);
    mu.iter_mut().for_each(|x| *x /= r);
    let kernel = jackson_kernel::<T>(moments);

    // Bin edges on the rescaled axis; the outermost edges run to ±1 so that
    // weight between the true and the padded edges lands in the end bins.
    let theta: Vec<T> = edges
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            if k == 0 {
                T::PI()
            } else if k == bins {
                T::zero()
            } else {
                let e = bounds.lower + eps * bounds.width();
                ((e - center) / half).max(-T::one()).min(T::one()).acos()
            }
        })
        .collect();
    let mut counts: Vec<T> = theta
        .windows(2)
        .map(|w| {
            let (hi, lo) = (w[0], w[1]);
            let mut s = kernel[0] * mu[0] * (hi - lo);
            for n in 1..moments {
                let nt = T::of(n as f64);
                s += T::of(2.0) * kernel[n] * mu[n] * ((nt * hi).sin() - (nt * lo).sin()) / nt;
            }
            s / T::PI()
        })
        .collect();
    let negative: T = counts.iter().filter(|&&c| c < T::zero()).map(|&c| -c).sum();
    counts.iter_mut().for_each(|c| *c = c.max(T::zero()));
    let total: T = counts.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::numerical("Chebyshev density integrates to a non-positive total"));
    }
    let dim_t = T::of(dim as f64);
    if negative > T::of(1e-3) * dim_t {
        warnings.push(format!("clipped negative density worth {negative} states"));
    }
    let width = T::of(1.0 / bins as f64);
    let density = counts.into_iter().map(|c| c * dim_t / total / width).collect();
    Ok(DosProfile { bin_edges: edges, density, total_states: dim, warnings })
}

/// `⟨r|T_n(H̃)|r⟩` for one Rademacher probe, by the doubling recursion.
fn probe_moments<T: Real>(h: &SparseHamiltonian<T>, moments: usize, center: T, half: T, seed: u64, probe: u64) -> Vec<T> {
    let n = h.dim();
    let mut rng = indexed_stream(seed, probe);
    let r: Vec<T> = (0..n).map(|_| if rng.random::<bool>() { T::one() } else { -T::one() }).collect();
    let apply = |x: &[T], out: &mut [T]| {
        h.apply_into(x, out);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = (*o - center * xi) / half;
        }
    };
    let mut mu = vec![T::zero(); moments];
    let mut prev = r.clone();
    let mut cur = vec![T::zero(); n];
    apply(&prev, &mut cur);
    mu[0] = dot(&r, &r);
    mu[1] = dot(&r, &cur);
    let (mu0, mu1) = (mu[0], mu[1]);
    let two = T::of(2.0);
    let mut next = vec![T::zero(); n];
    // invariant: prev = v_{k-1}, cur = v_k
    let mut k = 1;
    while 2 * k < moments {
        mu[2 * k] = two * dot(&cur, &cur) - mu0;
        if 2 * k + 1 < moments {
            apply(&cur, &mut next);
            for i in 0..n {
                next[i] = two * next[i] - prev[i];
            }
            mu[2 * k + 1] = two * dot(&next, &cur) - mu1;
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        k += 1;
    }
    mu
}

fn jackson_kernel<T: Real>(moments: usize) -> Vec<T> {
    let np1 = (moments + 1) as f64;
    let q = std::f64::consts::PI / np1;
    (0..moments)
        .map(|n| {
            let n = n as f64;
            T::of(((np1 - n) * (q * n).cos() + (q * n).sin() / q.tan()) / np1)
        })
        .collect()
}

/// Center of the bin with the largest 3-bin averaged density; ties go to lower ε.
pub fn max_dos_energy<T: Real>(profile: &DosProfile<T>) -> T {
    let d = &profile.density;
    let smoothed: Vec<T> = (0..d.len())
        .map(|k| {
            if k == 0 || k + 1 == d.len() {
                d[k]
            } else {
                (d[k - 1] + d[k] + d[k + 1]) / T::of(3.0)
            }
        })
        .collect();
    let mut best = 0;
    for k in 1..smoothed.len() {
        if smoothed[k] > smoothed[best] {
            best = k;
        }
    }
    profile.centers()[best]
}

/// How [`select_window_states`] chooses eigenstates around `ε*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode<T> {
    /// Every state with `|ε - ε*| ≤ w`.
    HalfWidth(T),
    /// The `k` states closest to `ε*`.
    NearestCount(usize),
}

/// Eigenstate indices (ascending energy) inside the window around `eps_star`.
pub fn select_window_states<T: Real>(sol: &EigenSolution<T>, eps_star: T, mode: WindowMode<T>) -> Result<Vec<usize>> {
    let eps = sol.normalized()?;
    let picked: Vec<usize> = match mode {
        WindowMode::HalfWidth(w) => (0..eps.len()).filter(|&i| (eps[i] - eps_star).abs() <= w).collect(),
        WindowMode::NearestCount(k) => {
            // grow a contiguous block from the closest level outwards
            let start = match eps.binary_search_by(|e| e.partial_cmp(&eps_star).expect("finite")) {
                Ok(i) | Err(i) => i,
            };
            let (mut lo, mut hi) = (start, start); // block is lo..hi
            while hi - lo < k.min(eps.len()) {
                let take_low = match (lo > 0, hi < eps.len()) {
                    (true, true) => (eps_star - eps[lo - 1]) <= (eps[hi] - eps_star),
                    (true, false) => true,
                    (false, _) => false,
                };
                if take_low {
                    lo -= 1;
                } else {
                    hi += 1;
                }
            }
            (lo..hi).collect()
        }
    };
    if picked.is_empty() {
        return Err(Error::EmptySelection(format!("no eigenstates in window {mode:?} around ε* = {eps_star}")));
    }
    Ok(picked)
}

/// Mean consecutive-gap ratio and bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RStatistics {
    pub mean: f64,
    /// Number of ratios averaged.
    pub samples: usize,
    /// Levels dropped as exact degeneracies.
    pub merged: usize,
}

/// `⟨r⟩ = mean of min(δₙ, δₙ₊₁) / max(δₙ, δₙ₊₁)` over an ascending spectrum.
pub fn r_statistics<T: Real>(energies: &[T]) -> Result<RStatistics> {
    if energies.len() < 3 {
        return Err(Error::parameter(format!("need at least 3 levels, got {}", energies.len())));
    }
    if energies.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::parameter("energies must be sorted ascending"));
    }
    let span = energies[energies.len() - 1] - energies[0];
    let threshold = T::of(1e-12) * span;
    let mut distinct = vec![energies[0]];
    for &e in &energies[1..] {
        if e - *distinct.last().expect("non-empty") > threshold {
            distinct.push(e);
        }
    }
    let merged = energies.len() - distinct.len();
    if distinct.len() < 3 {
        return Err(Error::parameter(format!("only {} distinct levels after merging degeneracies", distinct.len())));
    }
    let gaps: Vec<T> = distinct.windows(2).map(|w| w[1] - w[0]).collect();
    let sum: f64 = gaps.windows(2).map(|g| (g[0].min(g[1]) / g[0].max(g[1])).to_f64_lossy()).sum();
    let samples = gaps.len() - 1;
    Ok(RStatistics { mean: sum / samples as f64, samples, merged })
}

/// `⟨E_n|ψ⟩` for every eigenstate.
pub fn eigen_overlaps<T: Real>(psi: &[T], sol: &EigenSolution<T>) -> Result<Vec<T>> {
    let vecs = sol.require_vectors()?;
    let n = sol.dim();
    if psi.len() != n {
        return Err(Error::parameter(format!("state of length {} for a {n}-dimensional solution", psi.len())));
    }
    Ok(vecs.chunks_exact(n).map(|v| dot(v, psi)).collect())
}

/// Eigenstate with the largest `|⟨E_n|ψ₀⟩|` and its signed coefficient.
pub fn dominant_eigenstate_overlap<T: Real>(psi0: &[T], sol: &EigenSolution<T>) -> Result<(usize, T)> {
    let c = eigen_overlaps(psi0, sol)?;
    let mut best = 0;
    for k in 1..c.len() {
        if c[k].abs() > c[best].abs() {
            best = k;
        }
    }
    Ok((best, c[best]))
}

/// Leading Fock components of one eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct FockExpansion<T> {
    /// `(a_k, |i_k⟩)` by descending `|a_k|`.
    pub components: Vec<(T, FockState)>,
    /// Set when `top_k` exceeded the dimension and was reduced.
    pub clipped: bool,
}

pub fn eigenstate_fock_expansion<T: Real>(
    sol: &EigenSolution<T>,
    basis: &SectorBasis,
    index: usize,
    top_k: usize,
) -> Result<FockExpansion<T>> {
    sol.require_vectors()?;
    if basis.dim() != sol.dim() {
        return Err(Error::parameter("basis and eigen-solution dimensions differ"));
    }
    if index >= sol.dim() {
        return Err(Error::parameter(format!("eigenstate {index} out of range 0..{}", sol.dim())));
    }
    let v = sol.vector(index).expect("vectors checked");
    let clipped = top_k > v.len();
    if clipped {
        log::warn!("top_k = {top_k} exceeds dimension {}; clipped", v.len());
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        v[b].abs().partial_cmp(&v[a].abs()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let components = order
        .into_iter()
        .take(top_k.min(v.len()))
        .map(|i| (v[i], basis.state(i).clone()))
        .collect();
    Ok(FockExpansion { components, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_boson_sector, enumerate_spin_sector};
    use crate::hamiltonian::{build_all_to_all_xx, build_bose_hubbard, PotentialSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn bh(sites: usize, u: f64, gamma: f64, alpha: f64) -> SparseHamiltonian<f64> {
        let basis = Arc::new(enumerate_boson_sector(sites, sites / 2, (sites / 2) as u8).unwrap());
        build_bose_hubbard(basis, 1.0, u, PotentialSpec::new(gamma, alpha, sites)).unwrap()
    }

    #[test]
    fn two_site_xx_spectrum() {
        let basis = Arc::new(enumerate_spin_sector(2, 1).unwrap());
        let h = build_all_to_all_xx(basis, 0.5, PotentialSpec::new(0.0, 0.0, 2)).unwrap();
        let sol = full_spectrum(&h, true).unwrap();
        assert!((sol.energies()[0] + 2.0f64).abs() < 1e-14 && (sol.energies()[1] - 2.0f64).abs() < 1e-14);
    }

    #[test]
    fn diagonal_hamiltonian_gives_sorted_diagonal() {
        let basis = Arc::new(enumerate_boson_sector(6, 3, 3).unwrap());
        let h = build_bose_hubbard(basis, 0.0f64, 0.0, PotentialSpec::new(1.3, 2.0, 6)).unwrap();
        let sol = full_spectrum(&h, false).unwrap();
        let mut d = h.diagonal();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in sol.energies().iter().zip(&d) {
            assert!((a - b).abs() < 1e-12f64);
        }
    }

    #[test]
    fn trace_identity_and_eigenpairs() {
        let h = bh(8, 4.0, 2.0, 2.0);
        let sol = full_spectrum(&h, true).unwrap();
        let sum: f64 = sol.energies().iter().sum();
        assert!((sum - h.trace()).abs() <= 1e-9 * h.trace().abs().max(1.0));
        let n = sol.dim();
        for k in (0..n).step_by(17) {
            let v = sol.vector(k).unwrap();
            let hv = crate::hamiltonian::matvec(&h, v).unwrap();
            let e = sol.energies()[k];
            let res = hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-8 * e.abs().max(1.0));
            for j in (0..n).step_by(29) {
                let o = dot(v, sol.vector(j).unwrap());
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((o - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let h = bh(6, 4.0, 1.0, 2.0);
        let err = full_spectrum_capped(&h, true, 10).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn normalized_energy_examples() {
        assert_eq!(normalized_energy(-3.0, -3.0, 5.0).unwrap(), 0.0);
        assert_eq!(normalized_energy(5.0, -3.0, 5.0).unwrap(), 1.0);
        assert_eq!(normalized_energy(1.0, -3.0, 5.0).unwrap(), 0.5);
        assert!(normalized_energy(1.0, 2.0, 2.0).is_err());
    }

    fn total_variation(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
    }

    /// Oracle histogram computed directly from the sorted spectrum.
    fn exact_fractions(energies: &[f64], bins: usize) -> Vec<f64> {
        let (lo, hi) = (energies[0], energies[energies.len() - 1]);
        let mut h = vec![0.0; bins];
        for &e in energies {
            let k = (((e - lo) / (hi - lo)) * bins as f64).floor().min((bins - 1) as f64) as usize;
            h[k] += 1.0 / energies.len() as f64;
        }
        h
    }

    #[test]
    fn chebyshev_dos_matches_exact_histogram() {
        let h = bh(10, 4.0, 2.0, 2.0);
        let sol = full_spectrum(&h, false).unwrap();
        let dos = dos_chebyshev(&h, 512, 32, 50, 17).unwrap();
        let integral: f64 = dos.counts().iter().sum();
        assert!((integral - h.dim() as f64).abs() <= 1e-6 * h.dim() as f64);
        assert!(dos.density.iter().all(|&d| d >= 0.0));
        let tv = total_variation(&dos.fractions(), &exact_fractions(sol.energies(), 50));
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn chebyshev_counts_on_dyadic_intervals() {
        let h = bh(8, 4.0, 2.0, 2.0);
        let sol = full_spectrum(&h, false).unwrap();
        let eps = sol.normalized().unwrap();
        let finest = 64;
        let counts = dos_chebyshev(&h, 512, 32, finest, 3).unwrap().counts();
        for level in 0..=6 {
            let parts = 1usize << level;
            let span = finest / parts;
            for k in 0..parts {
                let (lo, hi) = (k as f64 / parts as f64, (k + 1) as f64 / parts as f64);
                let est: f64 = counts[k * span..(k + 1) * span].iter().sum();
                let exact = eps.iter().filter(|&&e| e >= lo && (e < hi || k + 1 == parts)).count() as f64;
                assert!((est - exact).abs() < 0.01 * sol.dim() as f64, "[{lo}, {hi}): {est} vs {exact}");
            }
        }
    }

    #[test]
    fn chebyshev_dos_is_deterministic_and_flags_small_inputs() {
        let h = bh(6, 4.0, 1.0, 2.0);
        let a = dos_chebyshev(&h, 128, 8, 20, 5).unwrap();
        let b = dos_chebyshev(&h, 128, 8, 20, 5).unwrap();
        assert_eq!(a.density, b.density);
        let c = dos_chebyshev(&h, 32, 4, 20, 5).unwrap();
        assert_eq!(c.warnings.len(), 2);
    }

    #[test]
    fn point_spectrum_lands_in_one_bin() {
        let basis = Arc::new(enumerate_boson_sector(4, 2, 1).unwrap());
        let h = build_bose_hubbard(basis, 0.0, 4.0, PotentialSpec::new(0.0, 0.0, 4)).unwrap();
        let dos = dos_chebyshev(&h, 64, 8, 10, 1).unwrap();
        let counts = dos.counts();
        assert_eq!(counts.iter().filter(|&&c| c > 0.0).count(), 1);
        assert!((counts.iter().sum::<f64>() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn chebyshev_probe_noise_shrinks_with_probe_count() {
        let h = bh(8, 4.0, 2.0, 2.0);
        let exact = exact_fractions(full_spectrum(&h, false).unwrap().energies(), 20);
        let tv = |probes, seed| total_variation(&dos_chebyshev(&h, 256, probes, 20, seed).unwrap().fractions(), &exact);
        let small: f64 = (0..4).map(|s| tv(4, 100 + s)).sum::<f64>() / 4.0;
        let large: f64 = (0..4).map(|s| tv(64, 200 + s)).sum::<f64>() / 4.0;
        assert!(large < small, "tv with 64 probes {large} vs 4 probes {small}");
    }

    #[test]
    fn max_dos_prefers_lower_bin_on_ties() {
        let p = DosProfile {
            bin_edges: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            density: vec![0.0, 4.0, 4.0, 0.0],
            total_states: 2,
            warnings: vec![],
        };
        assert_eq!(max_dos_energy(&p), 0.375);
        let single = DosProfile { bin_edges: vec![0.0, 0.5, 1.0], density: vec![1.0, 3.0], total_states: 2, warnings: vec![] };
        assert_eq!(max_dos_energy(&single), 0.75);
    }

    #[test]
    fn window_selection() {
        let sol = EigenSolution::from_energies((0..11).map(|k| k as f64).collect()).unwrap();
        assert_eq!(select_window_states(&sol, 0.5, WindowMode::HalfWidth(1.0)).unwrap().len(), 11);
        assert_eq!(select_window_states(&sol, 0.5, WindowMode::HalfWidth(0.0)).unwrap(), vec![5]);
        assert!(matches!(
            select_window_states(&sol, 0.55, WindowMode::HalfWidth(0.0)),
            Err(Error::EmptySelection(_))
        ));
        assert_eq!(select_window_states(&sol, 0.52, WindowMode::NearestCount(3)).unwrap(), vec![4, 5, 6]);
        assert_eq!(select_window_states(&sol, 0.0, WindowMode::NearestCount(2)).unwrap(), vec![0, 1]);
        assert_eq!(select_window_states(&sol, 1.0, WindowMode::NearestCount(50)).unwrap().len(), 11);
    }

    #[test]
    fn nearest_count_is_contiguous_at_l10() {
        let h = bh(10, 4.0, 2.0, 2.0);
        let sol = full_spectrum(&h, false).unwrap();
        let eps = sol.normalized().unwrap();
        let sel = select_window_states(&sol, 0.6, WindowMode::NearestCount(500)).unwrap();
        assert_eq!(sel.len(), 500);
        assert!(sel.windows(2).all(|w| w[1] == w[0] + 1));
        let worst_in = sel.iter().map(|&i| (eps[i] - 0.6).abs()).fold(0.0, f64::max);
        let best_out = (0..eps.len())
            .filter(|i| !sel.contains(i))
            .map(|i| (eps[i] - 0.6).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(worst_in <= best_out);
    }

    #[test]
    fn r_of_equal_spacing_and_errors() {
        let e: Vec<f64> = (0..20).map(|k| 0.5 * k as f64).collect();
        assert_eq!(r_statistics(&e).unwrap().mean, 1.0);
        assert!(r_statistics(&[1.0, 2.0]).is_err());
        assert!(r_statistics(&[1.0, 1.0, 1.0, 2.0]).is_err());
        let s = r_statistics(&[0.0, 1.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.merged, s.samples, s.mean), (1, 2, 1.0));
    }

    #[test]
    fn r_of_poisson_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut e = vec![0.0f64];
        for _ in 0..200_000 {
            let gap: f64 = -(1.0 - rng.random::<f64>()).ln();
            e.push(e.last().unwrap() + gap);
        }
        let r = r_statistics(&e).unwrap().mean;
        assert!((r - (2.0 * 2f64.ln() - 1.0)).abs() < 0.004, "{r}");
    }

    #[test]
    fn overlaps_and_expansion() {
        let h = bh(6, 4.0, 1.5, 2.0);
        let sol = full_spectrum(&h, true).unwrap();
        let v7 = sol.vector(7).unwrap().to_vec();
        let (k, c) = dominant_eigenstate_overlap(&v7, &sol).unwrap();
        assert_eq!(k, 7);
        assert!((c.abs() - 1.0).abs() < 1e-12);

        let mix: Vec<f64> = sol.vector(2).unwrap().iter().zip(sol.vector(9).unwrap()).map(|(a, b)| 0.6 * a + 0.8 * b).collect();
        let (k, c) = dominant_eigenstate_overlap(&mix, &sol).unwrap();
        assert_eq!(k, 9);
        assert!((c - 0.8).abs() < 1e-12);

        let psi: Vec<f64> = (0..sol.dim()).map(|i| (i * 7 % 11) as f64 - 5.0).collect();
        let nrm = dot(&psi, &psi).sqrt();
        let psi: Vec<f64> = psi.iter().map(|x| x / nrm).collect();
        let total: f64 = eigen_overlaps(&psi, &sol).unwrap().iter().map(|c| c * c).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let basis = h.basis();
        let full = eigenstate_fock_expansion(&sol, basis, 3, sol.dim()).unwrap();
        let norm: f64 = full.components.iter().map(|(a, _)| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-12 && !full.clipped);
        assert!(full.components.windows(2).all(|w| w[0].0.abs() >= w[1].0.abs()));
        assert!(eigenstate_fock_expansion(&sol, basis, 3, sol.dim() + 5).unwrap().clipped);
    }

    #[test]
    fn product_eigenstates_without_hopping() {
        let basis = Arc::new(enumerate_boson_sector(5, 2, 2).unwrap());
        let h = build_bose_hubbard(Arc::clone(&basis), 0.0f64, 4.0, PotentialSpec::new(1.1, 2.0, 5)).unwrap();
        let sol = full_spectrum(&h, true).unwrap();
        let ex = eigenstate_fock_expansion(&sol, &basis, 4, 1).unwrap();
        assert!((ex.components[0].0.abs() - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn strong_field_eigenstates_stay_near_product_states() {
        let h = bh(8, 4.0, 8.0, 2.0);
        let basis = h.basis();
        let sol = full_spectrum(&h, true).unwrap();
        let eps = sol.normalized().unwrap();
        let e_lo = sol.e_min();
        let width = sol.e_max() - e_lo;
        // mid-window 0/1 product state
        let diag = h.diagonal();
        let start = basis
            .states()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.occupations().iter().all(|&n| n <= 1))
            .min_by(|(a, _), (b, _)| {
                let da = ((diag[*a] - e_lo) / width - 0.5).abs();
                let db = ((diag[*b] - e_lo) / width - 0.5).abs();
                da.partial_cmp(&db).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let mut psi = vec![0.0; sol.dim()];
        psi[start] = 1.0;
        let (k, _) = dominant_eigenstate_overlap(&psi, &sol).unwrap();
        assert!(eps[k] > 0.0);
        let ex = eigenstate_fock_expansion(&sol, basis, k, 3).unwrap();
        assert_eq!(&ex.components[0].1, basis.state(start));
    }

    proptest! {
        #[test]
        fn r_and_window_are_affine_invariant(a in 0.1f64..10.0, b in -50.0f64..50.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut e: Vec<f64> = (0..60).map(|_| rng.random::<f64>() * 10.0).collect();
            e.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let t: Vec<f64> = e.iter().map(|x| a * x + b).collect();
            let r1 = r_statistics(&e).unwrap().mean;
            let r2 = r_statistics(&t).unwrap().mean;
            prop_assert!((r1 - r2).abs() < 1e-9);
            let s1 = select_window_states(&EigenSolution::from_energies(e).unwrap(), 0.4, WindowMode::NearestCount(9)).unwrap();
            let s2 = select_window_states(&EigenSolution::from_energies(t).unwrap(), 0.4, WindowMode::NearestCount(9)).unwrap();
            prop_assert_eq!(s1, s2);
        }
    }
}

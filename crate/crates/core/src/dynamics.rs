//! Quench dynamics: initial-state sampling, Krylov propagation, observable
//! time series, averaging and smoothing.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::linalg::{tridiagonal_eigen, SpectralBounds};
use crate::observables::{imbalance_from_occupations, participation_entropy, site_occupations, Bipartition, InitialPattern};
use crate::rng::indexed_stream;
use crate::scalar::{norm, Real};
use crate::spectral::EigenSolution;

/// Strictly increasing sample times in units of `1/J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct TimeGrid<T>(Vec<T>);

impl<T: Real> TimeGrid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::parameter("time grid is empty"));
        }
        if points[0] < T::zero() || points.iter().any(|t| !t.is_finite()) {
            return Err(Error::parameter("time grid must start at t ≥ 0 and be finite"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::parameter("time grid must be strictly increasing"));
        }
        Ok(TimeGrid(points))
    }

    /// `points` logarithmically spaced values from `t_min` to `t_max`,
    /// preceded by `t = 0` when `with_zero` is set.
    pub fn log_spaced(t_min: T, t_max: T, points: usize, with_zero: bool) -> Result<Self> {
        if !(t_min > T::zero()) || !(t_max > t_min) || points < 2 {
            return Err(Error::parameter("log grid needs 0 < t_min < t_max and at least 2 points"));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let step = (b - a) / T::of((points - 1) as f64);
        let mut ts: Vec<T> = Vec::with_capacity(points + 1);
        if with_zero {
            ts.push(T::zero());
        }
        ts.extend((0..points).map(|k| if k + 1 == points { t_max } else { (a + step * T::of(k as f64)).exp() }));
        Self::new(ts)
    }

    pub fn points(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T: Real> Default for TimeGrid<T> {
    fn default() -> Self {
        Self::log_spaced(T::of(0.1), T::of(1e3), 200, true).expect("valid default grid")
    }
}

impl<T: Real> TryFrom<Vec<T>> for TimeGrid<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T> From<TimeGrid<T>> for Vec<T> {
    fn from(g: TimeGrid<T>) -> Vec<T> {
        g.0
    }
}

/// Observable families that [`evolve_observables`] can record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    EntanglementEntropy,
    ParticipationEntropy,
    Imbalance,
    Occupations,
}

/// Label of one recorded series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesTag {
    EntanglementEntropy,
    ParticipationEntropy,
    Imbalance,
    Occupation(usize),
}

impl fmt::Display for SeriesTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesTag::EntanglementEntropy => write!(f, "ee"),
            SeriesTag::ParticipationEntropy => write!(f, "pe"),
            SeriesTag::Imbalance => write!(f, "imbalance"),
            SeriesTag::Occupation(j) => write!(f, "n{j}"),
        }
    }
}

/// Step-size control of [`krylov_propagate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovSettings {
    /// Krylov subspace dimension `m`.
    pub dim: usize,
    /// Local error allowed per unit time.
    pub tol: f64,
    /// Halvings allowed for one sub-step before giving up.
    pub max_subdivisions: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        KrylovSettings { dim: 30, tol: 1e-10, max_subdivisions: 40 }
    }
}

/// Provenance of a [`TimeSeries`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub tag: Option<SeriesTag>,
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    pub patterns: Vec<String>,
    pub seeds: Vec<u64>,
    pub members: usize,
    pub propagator: String,
    pub krylov: Option<KrylovSettings>,
    pub smoothing_window: Option<usize>,
}

/// One observable sampled on a time grid, with an optional smoothed copy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct TimeSeries<T> {
    pub grid: TimeGrid<T>,
    pub values: Vec<T>,
    pub smoothed: Option<Vec<T>>,
    pub meta: SeriesMeta,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(grid: TimeGrid<T>, values: Vec<T>, meta: SeriesMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::parameter(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        Ok(TimeSeries { grid, values, smoothed: None, meta })
    }

    pub fn last(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Value at the grid point closest to `t`.
    pub fn at(&self, t: T) -> T {
        let pts = self.grid.points();
        let k = (0..pts.len())
            .min_by(|&a, &b| (pts[a] - t).abs().partial_cmp(&(pts[b] - t).abs()).expect("finite"))
            .expect("non-empty grid");
        self.values[k]
    }
}

/// Product states drawn from an energy window.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialSample<T> {
    pub patterns: Vec<InitialPattern>,
    /// Normalized energy of each returned pattern.
    pub energies: Vec<T>,
    /// Number of half-filled 0/1 patterns inside the window.
    pub qualifying: usize,
    pub warning: Option<String>,
}

/// Draw `count` distinct half-filled 0/1 product states whose normalized
/// energy `(⟨ψ|H|ψ⟩ − E_min)/(E_max − E_min)` lies within `half_width` of
/// `eps_star`, uniformly among all qualifying patterns.
pub fn sample_initial_states<T: Real>(
    h: &SparseHamiltonian<T>,
    edges: SpectralBounds<T>,
    eps_star: T,
    half_width: T,
    count: usize,
    seed: u64,
) -> Result<InitialSample<T>> {
    let basis = h.basis();
    if 2 * basis.particles() != basis.sites() {
        return Err(Error::parameter("initial patterns need a half-filled sector"));
    }
    if !(edges.upper > edges.lower) {
        return Err(Error::parameter("degenerate spectral edges"));
    }
    let width = edges.width();
    let mut candidates = Vec::new();
    for (k, state) in basis.states().iter().enumerate() {
        if state.occupations().iter().any(|&n| n > 1) {
            continue;
        }
        let eps = (h.get(k, k) - edges.lower) / width;
        if (eps - eps_star).abs() <= half_width {
            candidates.push((k, eps));
        }
    }
    let qualifying = candidates.len();
    let mut warning = None;
    let chosen: Vec<usize> = if qualifying <= count {
        if qualifying < count {
            let msg = format!("only {qualifying} patterns qualify in ε* = {eps_star} ± {half_width}, {count} requested");
            log::warn!("{msg}");
            warning = Some(msg);
        }
        (0..qualifying).collect()
    } else {
        let mut rng = indexed_stream(seed, 0);
        sample(&mut rng, qualifying, count).into_vec()
    };
    let mut patterns = Vec::with_capacity(chosen.len());
    let mut energies = Vec::with_capacity(chosen.len());
    for i in chosen {
        let (k, eps) = candidates[i];
        patterns.push(InitialPattern::new(basis.state(k).clone())?);
        energies.push(eps);
    }
    Ok(InitialSample { patterns, energies, qualifying, warning })
}

type CVec<T> = Vec<Complex<T>>;

fn cdot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Orthonormal Lanczos basis of the Krylov space of `psi`.
struct KrylovSpace<T> {
    vectors: Vec<CVec<T>>,
    alpha: Vec<T>,
    beta: Vec<T>,
    /// `β_m` coupling out of the space, zero on an invariant subspace.
    leak: T,
}

fn krylov_space<T: Real>(h: &SparseHamiltonian<T>, psi: &[Complex<T>], m: usize) -> KrylovSpace<T> {
    let n = psi.len();
    let nrm = norm::<T, Complex<T>>(psi);
    let mut vectors: Vec<CVec<T>> = vec![psi.iter().map(|&z| z / nrm).collect()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![Complex::new(T::zero(), T::zero()); n];
    let mut scale = T::zero();
    loop {
        let j = vectors.len() - 1;
        h.apply_into(&vectors[j], &mut w);
        let a = cdot(&vectors[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &vectors {
                let c = cdot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= *vi * c;
                }
            }
        }
        let b = norm::<T, Complex<T>>(&w);
        scale = scale.max(a.abs()).max(b);
        if b <= T::of(1e-12) * scale.max(T::one()) || n == vectors.len() {
            return KrylovSpace { vectors, alpha, beta, leak: T::zero() };
        }
        if vectors.len() == m {
            return KrylovSpace { vectors, alpha, beta, leak: b };
        }
        beta.push(b);
        vectors.push(w.iter().map(|&z| z / b).collect());
    }
}

impl<T: Real> KrylovSpace<T> {
    /// Coefficients of `exp(-i T τ) e₁` for each τ, via one eigendecomposition.
    fn exponentiate(&self, theta: &[T], z: &[T], tau: T) -> CVec<T> {
        let k = theta.len();
        (0..k)
            .map(|row| {
                (0..k).fold(Complex::new(T::zero(), T::zero()), |acc, col| {
                    let phase = Complex::new(T::zero(), -theta[col] * tau).exp();
                    acc + phase * (z[row + col * k] * z[col * k])
                })
            })
            .collect()
    }
}

/// `exp(-i H Δt) ψ` by adaptive Krylov sub-steps.
pub fn krylov_propagate<T: Real>(
    h: &SparseHamiltonian<T>,
    psi: &[Complex<T>],
    dt: T,
    settings: &KrylovSettings,
) -> Result<CVec<T>> {
    KrylovPropagator::new(h, *settings)?.evolve(psi, dt)
}

/// Advances states in time by a fixed Hamiltonian.
pub trait Propagator<T: Real> {
    fn evolve(&mut self, psi: &[Complex<T>], dt: T) -> Result<CVec<T>>;

    /// Short description recorded in series metadata.
    fn describe(&self) -> String;
}

/// Krylov-subspace propagator with adaptive step halving.
pub struct KrylovPropagator<'a, T> {
    h: &'a SparseHamiltonian<T>,
    settings: KrylovSettings,
    last_step: Option<T>,
}

impl<'a, T: Real> KrylovPropagator<'a, T> {
    pub fn new(h: &'a SparseHamiltonian<T>, settings: KrylovSettings) -> Result<Self> {
        if settings.dim < 8 {
            return Err(Error::parameter(format!("Krylov dimension {} below 8", settings.dim)));
        }
        if !(settings.tol > 0.0) {
            return Err(Error::parameter("Krylov tolerance must be positive"));
        }
        Ok(KrylovPropagator { h, settings, last_step: None })
    }

    pub fn settings(&self) -> &KrylovSettings {
        &self.settings
    }
}

impl<T: Real> Propagator<T> for KrylovPropagator<'_, T> {
    fn evolve(&mut self, psi: &[Complex<T>], dt: T) -> Result<CVec<T>> {
        if psi.len() != self.h.dim() {
            return Err(Error::parameter(format!("state of length {} for dimension {}", psi.len(), self.h.dim())));
        }
        if dt < T::zero() {
            return Err(Error::parameter("negative time step"));
        }
        let mut state = psi.to_vec();
        let mut remaining = dt;
        let tol = T::of(self.settings.tol);
        while remaining > T::zero() {
            let space = krylov_space(self.h, &state, self.settings.dim);
            let (theta, z) = tridiagonal_eigen(&space.alpha, &space.beta, true)?;
            let z = z.expect("vectors requested");
            let nrm = norm::<T, Complex<T>>(&state);
            let k = theta.len();
            let mut tau = match self.last_step {
                Some(s) => remaining.min(s * T::of(2.0)),
                None => remaining,
            };
            let mut halvings = 0;
            let coeffs = loop {
                let c = space.exponentiate(&theta, &z, tau);
                let err = space.leak * c[k - 1].norm() * nrm;
                if err <= tol * tau || space.leak == T::zero() {
                    break c;
                }
                halvings += 1;
                if halvings > self.settings.max_subdivisions {
                    return Err(Error::numerical(format!(
                        "Krylov step did not reach tolerance {} after {halvings} halvings \
                         (step {tau}, error estimate {err}, remaining time {remaining})",
                        self.settings.tol
                    )));
                }
                tau /= T::of(2.0);
            };
            let mut next = vec![Complex::new(T::zero(), T::zero()); state.len()];
            for (v, &c) in space.vectors.iter().zip(&coeffs) {
                let c = c * nrm;
                for (o, &x) in next.iter_mut().zip(v) {
                    *o += x * c;
                }
            }
            state = next;
            remaining = if tau >= remaining { T::zero() } else { remaining - tau };
            if space.leak > T::zero() {
                self.last_step = Some(tau);
            }
        }
        Ok(state)
    }

    fn describe(&self) -> String {
        format!("krylov(m={}, tol={})", self.settings.dim, self.settings.tol)
    }
}

/// Propagator through a full eigendecomposition; the reference oracle.
pub struct ExactPropagator<'a, T> {
    sol: &'a EigenSolution<T>,
}

impl<'a, T: Real> ExactPropagator<'a, T> {
    pub fn new(sol: &'a EigenSolution<T>) -> Result<Self> {
        if !sol.has_vectors() {
            return Err(Error::parameter("exact propagation needs eigenvectors"));
        }
        Ok(ExactPropagator { sol })
    }
}

impl<T: Real> Propagator<T> for ExactPropagator<'_, T> {
    fn evolve(&mut self, psi: &[Complex<T>], dt: T) -> Result<CVec<T>> {
        let n = self.sol.dim();
        if psi.len() != n {
            return Err(Error::parameter(format!("state of length {} for dimension {n}", psi.len())));
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        for (k, &e) in self.sol.energies().iter().enumerate() {
            let v = self.sol.vector(k).expect("vectors checked");
            let c = psi.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |acc, (&p, &x)| acc + p * x);
            let c = c * Complex::new(T::zero(), -e * dt).exp();
            for (o, &x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        "exact".into()
    }
}

/// Largest deviations seen along one trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub norm: f64,
    /// Relative to `max(1, |E₀|)`.
    pub energy: f64,
    pub particles: f64,
}

/// Recorded series of one trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub series: BTreeMap<SeriesTag, TimeSeries<T>>,
    pub drift: Drift,
}

/// Evolve the pattern state through `grid`, recording the requested observables.
pub fn evolve_observables<T: Real, P: Propagator<T>>(
    h: &SparseHamiltonian<T>,
    propagator: &mut P,
    pattern: &InitialPattern,
    grid: &TimeGrid<T>,
    observables: &[Observable],
) -> Result<Trajectory<T>> {
    let basis = h.basis();
    let sites = basis.sites();
    let wants = |o: Observable| observables.contains(&o);
    let part = if wants(Observable::EntanglementEntropy) { Some(Bipartition::new(basis, sites / 2)?) } else { None };
    let mut psi: CVec<T> = pattern.vector::<T>(basis)?.into_iter().map(|x| Complex::new(x, T::zero())).collect();
    let energy_of = |v: &[Complex<T>]| -> T {
        let mut hv = vec![Complex::new(T::zero(), T::zero()); v.len()];
        h.apply_into(v, &mut hv);
        cdot(v, &hv).re
    };
    let e0 = energy_of(&psi);
    let particles = T::of(basis.particles() as f64);
    let mut tags: Vec<SeriesTag> = Vec::new();
    if wants(Observable::EntanglementEntropy) {
        tags.push(SeriesTag::EntanglementEntropy);
    }
    if wants(Observable::ParticipationEntropy) {
        tags.push(SeriesTag::ParticipationEntropy);
    }
    if wants(Observable::Imbalance) {
        tags.push(SeriesTag::Imbalance);
    }
    if wants(Observable::Occupations) {
        tags.extend((0..sites).map(SeriesTag::Occupation));
    }
    let mut values: BTreeMap<SeriesTag, Vec<T>> = tags.iter().map(|&t| (t, Vec::with_capacity(grid.len()))).collect();
    let mut drift = Drift::default();
    let mut now = T::zero();
    for &t in grid.points() {
        if t > now {
            psi = propagator.evolve(&psi, t - now)?;
            now = t;
        }
        let occ: Vec<T> = site_occupations(&psi, basis)?;
        let n2: T = psi.iter().map(|z| z.norm_sqr()).sum();
        drift.norm = drift.norm.max((n2.sqrt() - T::one()).abs().to_f64_lossy());
        let e = energy_of(&psi);
        drift.energy = drift.energy.max(((e - e0).abs() / e0.abs().max(T::one())).to_f64_lossy());
        let total: T = occ.iter().copied().sum();
        drift.particles = drift.particles.max((total - particles * n2).abs().to_f64_lossy());
        // observables of the unit-normalized state, so drift never leaks in
        let unit: CVec<T> = psi.iter().map(|&z| z / n2.sqrt()).collect();
        for (tag, series) in values.iter_mut() {
            let v = match tag {
                SeriesTag::EntanglementEntropy => part.as_ref().expect("built when requested").entropy(&unit)?,
                SeriesTag::ParticipationEntropy => participation_entropy(&unit)?,
                SeriesTag::Imbalance => imbalance_from_occupations(&occ, pattern)?,
                SeriesTag::Occupation(j) => occ[*j] / n2,
            };
            series.push(v);
        }
    }
    let mut meta = SeriesMeta {
        model: h.model().tag().to_string(),
        parameters: h.model().summary().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        patterns: vec![pattern.to_string()],
        members: 1,
        propagator: propagator.describe(),
        ..Default::default()
    };
    let series = values
        .into_iter()
        .map(|(tag, v)| {
            meta.tag = Some(tag);
            TimeSeries::new(grid.clone(), v, meta.clone()).map(|s| (tag, s))
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory { series, drift })
}

/// Pointwise mean of series on a common grid.
pub fn average_over_initial_states<T: Real>(series: &[TimeSeries<T>]) -> Result<TimeSeries<T>> {
    let first = series.first().ok_or_else(|| Error::parameter("no series to average"))?;
    for s in &series[1..] {
        if s.grid != first.grid {
            return Err(Error::parameter("series live on different time grids"));
        }
        if s.meta.tag != first.meta.tag {
            return Err(Error::parameter("series record different observables"));
        }
    }
    let k = T::of(series.len() as f64);
    let mean = |pick: &dyn Fn(&TimeSeries<T>) -> &[T]| -> Vec<T> {
        (0..first.values.len()).map(|i| series.iter().map(|s| pick(s)[i]).sum::<T>() / k).collect()
    };
    let values = mean(&|s| &s.values);
    let same_window = series.iter().all(|s| s.smoothed.is_some() && s.meta.smoothing_window == first.meta.smoothing_window);
    let smoothed = same_window.then(|| mean(&|s| s.smoothed.as_deref().expect("checked")));
    let mut meta = first.meta.clone();
    meta.members = series.iter().map(|s| s.meta.members).sum();
    meta.patterns = series.iter().flat_map(|s| s.meta.patterns.iter().cloned()).collect();
    meta.seeds = series.iter().flat_map(|s| s.meta.seeds.iter().copied()).collect();
    if !same_window {
        meta.smoothing_window = None;
    }
    Ok(TimeSeries { grid: first.grid.clone(), values, smoothed, meta })
}

/// Centered moving average over `window` grid points; near the ends the
/// window shrinks symmetrically. Raw values are kept alongside.
pub fn smooth_series<T: Real>(series: &TimeSeries<T>, window: usize) -> Result<TimeSeries<T>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::parameter(format!("smoothing window must be odd and ≥ 1, got {window}")));
    }
    let v = &series.values;
    let n = v.len();
    let half = window / 2;
    let smoothed = (0..n)
        .map(|i| {
            let r = half.min(i).min(n - 1 - i);
            v[i - r..=i + r].iter().copied().sum::<T>() / T::of((2 * r + 1) as f64)
        })
        .collect();
    let mut out = series.clone();
    out.smoothed = Some(smoothed);
    out.meta.smoothing_window = Some(window);
    Ok(out)
}

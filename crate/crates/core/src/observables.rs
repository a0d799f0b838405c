//! Entanglement entropy, participation entropy, Page values and imbalance.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FockState, SectorBasis};
use crate::error::{Error, Result};
use crate::rng::indexed_stream;
use crate::scalar::{Amplitude, Real};

const NORM_TOLERANCE: f64 = 1e-8;

fn check_normalized<T: Real, A: Amplitude<T>>(psi: &[A], dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::parameter(format!("state of length {} in a {dim}-dimensional sector", psi.len())));
    }
    let n2: T = psi.iter().map(|a| a.norm_sqr()).sum();
    if (n2.to_f64_lossy() - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::parameter(format!("state is not normalized (|ψ|² = {n2})")));
    }
    Ok(())
}

/// Half-filled product state with occupations in {0, 1}.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InitialPattern(FockState);

impl InitialPattern {
    pub fn new(state: FockState) -> Result<Self> {
        let occ = state.occupations();
        if occ.iter().any(|&n| n > 1) {
            return Err(Error::parameter(format!("pattern {state} has an occupation above 1")));
        }
        if 2 * state.particles() != occ.len() {
            return Err(Error::parameter(format!("pattern {state} is not half filled")));
        }
        Ok(InitialPattern(state))
    }

    pub fn parse(digits: &str) -> Result<Self> {
        Self::new(FockState::parse(digits)?)
    }

    pub fn state(&self) -> &FockState {
        &self.0
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.0.sites()).filter(|&j| self.0.occupations()[j] == 1).collect()
    }

    pub fn zeros(&self) -> Vec<usize> {
        (0..self.0.sites()).filter(|&j| self.0.occupations()[j] == 0).collect()
    }

    /// The pattern as a unit vector of `basis`.
    pub fn vector<T: Real>(&self, basis: &SectorBasis) -> Result<Vec<T>> {
        let k = basis.index_of(&self.0)?;
        let mut v = vec![T::zero(); basis.dim()];
        v[k] = T::one();
        Ok(v)
    }
}

impl fmt::Display for InitialPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for InitialPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

impl TryFrom<String> for InitialPattern {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<InitialPattern> for String {
    fn from(p: InitialPattern) -> String {
        p.to_string()
    }
}

/// Squared Schmidt coefficients across one cut.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteSchmidt<T> {
    pub cut: usize,
    pub lambdas: Vec<T>,
}

impl<T: Real> BipartiteSchmidt<T> {
    /// `-Σ λ ln λ` in nats.
    pub fn entropy(&self) -> T {
        self.lambdas.iter().filter(|&&l| l > T::zero()).map(|&l| -l * l.ln()).sum()
    }
}

/// Reshaping map from a sector basis to per-block coefficient matrices,
/// one block per particle number of the left fragment.
#[derive(Clone, Debug)]
pub struct Bipartition {
    cut: usize,
    dim: usize,
    /// `(rows, cols)` of each block.
    shapes: Vec<(usize, usize)>,
    /// For each basis state: block, row, column.
    slots: Vec<(usize, usize, usize)>,
}

impl Bipartition {
    pub fn new(basis: &SectorBasis, cut: usize) -> Result<Self> {
        if cut == 0 || cut >= basis.sites() {
            return Err(Error::parameter(format!("cut {cut} outside 1..{}", basis.sites())));
        }
        let mut blocks: HashMap<usize, usize> = HashMap::new();
        let mut shapes = Vec::new();
        let mut rows: Vec<HashMap<&[u8], usize>> = Vec::new();
        let mut cols: Vec<HashMap<&[u8], usize>> = Vec::new();
        let mut slots = Vec::with_capacity(basis.dim());
        for state in basis.states() {
            let (left, right) = state.occupations().split_at(cut);
            let nl: usize = left.iter().map(|&n| n as usize).sum();
            let b = *blocks.entry(nl).or_insert_with(|| {
                shapes.push((0, 0));
                rows.push(HashMap::new());
                cols.push(HashMap::new());
                shapes.len() - 1
            });
            let next_row = rows[b].len();
            let r = *rows[b].entry(left).or_insert(next_row);
            let next_col = cols[b].len();
            let c = *cols[b].entry(right).or_insert(next_col);
            slots.push((b, r, c));
        }
        for (b, shape) in shapes.iter_mut().enumerate() {
            *shape = (rows[b].len(), cols[b].len());
        }
        Ok(Bipartition { cut, dim: basis.dim(), shapes, slots })
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    /// Largest possible Schmidt rank.
    pub fn max_rank(&self) -> usize {
        self.shapes.iter().map(|&(r, c)| r.min(c)).sum()
    }

    pub fn schmidt<T: Real, A: Amplitude<T>>(&self, psi: &[A]) -> Result<BipartiteSchmidt<T>> {
        check_normalized::<T, A>(psi, self.dim)?;
        self.schmidt_unchecked(psi)
    }

    fn schmidt_unchecked<T: Real, A: Amplitude<T>>(&self, psi: &[A]) -> Result<BipartiteSchmidt<T>> {
        let mut mats: Vec<Vec<A>> = self.shapes.iter().map(|&(r, c)| vec![A::zero(); r * c]).collect();
        for (&a, &(b, r, c)) in psi.iter().zip(&self.slots) {
            mats[b][r * self.shapes[b].1 + c] = a;
        }
        let mut lambdas = Vec::with_capacity(self.max_rank());
        for (m, &(rows, cols)) in mats.iter().zip(&self.shapes) {
            lambdas.extend(A::gram_eigenvalues(m, rows, cols)?.into_iter().map(|l| l.max(T::zero())));
        }
        Ok(BipartiteSchmidt { cut: self.cut, lambdas })
    }

    /// Entanglement entropy of a normalized state.
    pub fn entropy<T: Real, A: Amplitude<T>>(&self, psi: &[A]) -> Result<T> {
        Ok(self.schmidt(psi)?.entropy())
    }
}

/// Von Neumann entropy of the sites left of `cut`, in nats.
pub fn entanglement_entropy<T: Real, A: Amplitude<T>>(psi: &[A], basis: &SectorBasis, cut: usize) -> Result<T> {
    Bipartition::new(basis, cut)?.entropy(psi)
}

/// `-Σ p ln p` of the Fock-basis weights, in nats.
pub fn participation_entropy<T: Real, A: Amplitude<T>>(psi: &[A]) -> Result<T> {
    check_normalized::<T, A>(psi, psi.len())?;
    let floor = T::of(1e-30);
    Ok(psi
        .iter()
        .map(|a| a.norm_sqr())
        .filter(|&p| p >= floor)
        .map(|p| -p * p.ln())
        .sum())
}

/// Random-state ensemble used for Page values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageEnsemble {
    /// Independent standard-normal real components.
    #[default]
    Real,
    /// Independent standard-normal real and imaginary parts.
    Complex,
}

/// Monte-Carlo estimate of the mean entanglement entropy of random states.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PageEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub ensemble: PageEnsemble,
    /// Per-sample entropies in sample order.
    pub values: Vec<f64>,
}

/// Page value of a sector by sampling random normalized states.
pub fn page_value_monte_carlo(
    basis: &SectorBasis,
    cut: usize,
    samples: usize,
    seed: u64,
    ensemble: PageEnsemble,
) -> Result<PageEstimate> {
    if samples < 1000 {
        return Err(Error::parameter(format!("Page sampling needs at least 1000 samples, got {samples}")));
    }
    let part = Bipartition::new(basis, cut)?;
    let dim = basis.dim();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_stream(seed, i as u64);
            match ensemble {
                PageEnsemble::Real => {
                    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    normalize(&mut v);
                    part.schmidt_unchecked::<f64, f64>(&v).map(|s| s.entropy())
                }
                PageEnsemble::Complex => {
                    let mut v: Vec<Complex<f64>> =
                        (0..dim).map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
                    normalize(&mut v);
                    part.schmidt_unchecked::<f64, Complex<f64>>(&v).map(|s| s.entropy())
                }
            }
        })
        .collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(PageEstimate { mean, std_error: (var / n).sqrt(), samples, ensemble, values })
}

fn normalize<A: Amplitude<f64>>(v: &mut [A]) {
    let n = crate::scalar::norm::<f64, A>(v);
    v.iter_mut().for_each(|a| *a = *a * (1.0 / n));
}

/// Closed form `½ (L ln 2 − 1)` for a spin chain cut in half.
pub fn page_value_spin_formula(sites: usize) -> f64 {
    0.5 * (sites as f64 * std::f64::consts::LN_2 - 1.0)
}

/// `⟨n̂_j⟩` for every site.
pub fn site_occupations<T: Real, A: Amplitude<T>>(psi: &[A], basis: &SectorBasis) -> Result<Vec<T>> {
    if psi.len() != basis.dim() {
        return Err(Error::parameter(format!("state of length {} in a {}-dimensional sector", psi.len(), basis.dim())));
    }
    let mut occ = vec![T::zero(); basis.sites()];
    for (a, state) in psi.iter().zip(basis.states()) {
        let p = a.norm_sqr();
        if p == T::zero() {
            continue;
        }
        for (o, &n) in occ.iter_mut().zip(state.occupations()) {
            if n > 0 {
                *o += p * T::of(n as f64);
            }
        }
    }
    Ok(occ)
}

/// `(N₁ − N₀)/(N₁ + N₀)` from site occupations and the initial pattern.
pub fn imbalance_from_occupations<T: Real>(occ: &[T], pattern: &InitialPattern) -> Result<T> {
    if occ.len() != pattern.state().sites() {
        return Err(Error::parameter("pattern and occupations cover different numbers of sites"));
    }
    let scale = T::of(2.0 / occ.len() as f64);
    let n1: T = pattern.ones().into_iter().map(|j| occ[j]).sum::<T>() * scale;
    let n0: T = pattern.zeros().into_iter().map(|j| occ[j]).sum::<T>() * scale;
    if n1 + n0 == T::zero() {
        return Err(Error::numerical("imbalance undefined: no particles"));
    }
    Ok((n1 - n0) / (n1 + n0))
}

pub fn imbalance<T: Real, A: Amplitude<T>>(psi: &[A], pattern: &InitialPattern, basis: &SectorBasis) -> Result<T> {
    check_normalized::<T, A>(psi, basis.dim())?;
    imbalance_from_occupations(&site_occupations(psi, basis)?, pattern)
}

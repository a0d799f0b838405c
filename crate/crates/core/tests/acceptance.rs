//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary: `cargo test --test acceptance [-- FILTER]`, where
//! a filter is a substring of a criterion name or its bare number.
//! The full-scale regression is skipped unless `--ignored` or
//! `--include-ignored` is given.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Exp1, StandardNormal};
use stark_mbl::basis::{enumerate_boson_sector, enumerate_spin_sector, SectorBasis};
use num_complex::Complex;
use stark_mbl::dynamics::{
    average_over_initial_states, evolve_observables, sample_initial_states, smooth_series, ExactPropagator,
    KrylovPropagator, KrylovSettings, Observable, Propagator, SeriesMeta, SeriesTag, TimeGrid, TimeSeries,
};
use stark_mbl::hamiltonian::{build_all_to_all_xx, build_bose_hubbard, PotentialSpec, SparseHamiltonian};
use stark_mbl::linalg::{lanczos_extremes, tridiagonal_eigen};
use stark_mbl::observables::{
    entanglement_entropy, page_value_monte_carlo, participation_entropy, InitialPattern, PageEnsemble,
};
use stark_mbl::scaling::{
    bkt_collapse, bkt_variable, cost_function, fit_critical_exponent, fit_power_decay, powerlaw_collapse,
    powerlaw_variable, CollapsePoint, Crossing, SearchBox, SearchSettings,
};
use stark_mbl::spectral::{
    dos_chebyshev, full_spectrum, full_spectrum_capped, level_histogram, max_dos_energy, r_statistics,
    select_window_states, EigenSolution, WindowMode,
};

/// Named sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    items: Vec<(String, bool)>,
}

impl Checks {
    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.items.push((label.into(), ok));
    }

    fn near(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        self.check(format!("{what} = {} (target {target} ± {})", num(value), num(tol)), (value - target).abs() <= tol);
    }

    fn within(&mut self, what: &str, value: f64, lo: f64, hi: f64) {
        self.check(format!("{what} = {value:.4} in [{lo}, {hi}]"), value >= lo && value <= hi);
    }

    fn below(&mut self, what: &str, value: f64, limit: f64) {
        self.check(format!("{what} = {value:.3e} < {limit:e}"), value < limit);
    }

    fn passed(&self) -> bool {
        self.items.iter().all(|(_, ok)| *ok)
    }

    fn summary(&self) -> String {
        self.items
            .iter()
            .map(|(l, ok)| if *ok { l.clone() } else { format!("[fail] {l}") })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.2e}")
    } else {
        format!("{}", (x * 1e4).round() / 1e4 + 0.0)
    }
}

fn bh(sites: usize, hopping: f64, u: f64, gamma: f64, alpha: f64) -> SparseHamiltonian<f64> {
    let basis = Arc::new(enumerate_boson_sector(sites, sites / 2, (sites / 2) as u8).unwrap());
    build_bose_hubbard(basis, hopping, u, PotentialSpec::new(gamma, alpha, sites)).unwrap()
}

fn xx(sites: usize, g: f64, gamma: f64, alpha: f64) -> SparseHamiltonian<f64> {
    let basis = Arc::new(enumerate_spin_sector(sites, sites / 2).unwrap());
    build_all_to_all_xx(basis, g, PotentialSpec::new(gamma, alpha, sites)).unwrap()
}

fn mean_r_in_window(sol: &EigenSolution<f64>, eps_star: f64, half_width: f64) -> f64 {
    let idx = select_window_states(sol, eps_star, WindowMode::HalfWidth(half_width)).unwrap();
    let levels: Vec<f64> = idx.iter().map(|&i| sol.energies()[i]).collect();
    r_statistics(&levels).unwrap().mean
}

fn histogram_peak(sol: &EigenSolution<f64>) -> f64 {
    max_dos_energy(&level_histogram(sol, 101).unwrap())
}

/// Eigenvalues of a GOE matrix via its tridiagonal β = 1 Hermite model.
fn goe_eigenvalues(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let diag: Vec<f64> = (0..n).map(|_| 2f64.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
    let off: Vec<f64> = (1..n).map(|k| rng.sample::<f64, _>(ChiSquared::new((n - k) as f64).unwrap()).sqrt()).collect();
    tridiagonal_eigen(&diag, &off, false).unwrap().0
}

fn criterion_1() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut level = 0.0;
    let poisson: Vec<f64> = (0..1_000_000)
        .map(|_| {
            level += rng.sample::<f64, _>(Exp1);
            level
        })
        .collect();
    c.near("Poisson <r>", r_statistics(&poisson).unwrap().mean, 0.3863, 0.002);

    let (n, mut sum, mut count) = (1000, 0.0, 0usize);
    for _ in 0..200 {
        let ev = goe_eigenvalues(n, &mut rng);
        let r = r_statistics(&ev[n / 4..3 * n / 4]).unwrap();
        sum += r.mean * r.samples as f64;
        count += r.samples;
    }
    c.near("GOE <r>", sum / count as f64, 0.5307, 0.003);

    let small: f64 = (0..200_000).map(|_| r_statistics(&goe_eigenvalues(3, &mut rng)).unwrap().mean).sum::<f64>() / 200_000.0;
    c.check(format!("3x3 surmise <r> = {small:.4} (reference 4 - 2 sqrt 3 = {:.4})", 4.0 - 2.0 * 3f64.sqrt()), true);
    c
}

fn criterion_2(full: bool) -> Checks {
    let mut c = Checks::default();
    let mut targets = vec![(10, 3.5084, 0.01), (12, 4.3572, 0.01)];
    if full {
        targets.push((14, 5.2046, 0.02));
    }
    for (l, target, tol) in targets {
        let basis = enumerate_boson_sector(l, l / 2, (l / 2) as u8).unwrap();
        let est = page_value_monte_carlo(&basis, l / 2, 100_000, 2024 + l as u64, PageEnsemble::Real).unwrap();
        c.near(&format!("Page L={l}"), est.mean, target, tol);
    }
    c
}

/// Ascending eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = cs * akp - sn * akq;
                    row[q] = sn * akp + cs * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = cs * apk - sn * aqk;
                    *y = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Nearest-neighbor XX chain `Σ h_j σᶻ_j + Σ (σˣσˣ + σʸσʸ)` on bit strings.
fn xx_chain_oracle(sites: usize, fields: &[f64]) -> Vec<f64> {
    let states: Vec<u32> = (0u32..1 << sites).filter(|s| s.count_ones() as usize == sites / 2).collect();
    let index: BTreeMap<u32, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = states.len();
    let mut m = vec![vec![0.0; n]; n];
    for (a, &s) in states.iter().enumerate() {
        m[a][a] = (0..sites).map(|j| if s >> j & 1 == 1 { fields[j] } else { -fields[j] }).sum();
        for j in 0..sites - 1 {
            if (s >> j & 1) != (s >> (j + 1) & 1) {
                // σˣσˣ + σʸσʸ = 2(σ⁺σ⁻ + σ⁻σ⁺) on the flipped pair
                m[index[&(s ^ (0b11 << j))]][a] += 2.0;
            }
        }
    }
    jacobi_eigenvalues(m)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_3() -> Checks {
    let mut c = Checks::default();
    let (l, gamma, alpha) = (8, 1.3, 2.0);
    let hard_core = Arc::new(enumerate_boson_sector(l, l / 2, 1).unwrap());
    let spec = PotentialSpec::new(gamma, alpha, l);
    // n = (σᶻ + 1)/2: the spin field is half the boson field, up to a sector constant.
    let shift: f64 = spec.fields().iter().sum::<f64>() / 2.0;
    let bose = full_spectrum(&build_bose_hubbard(hard_core, 2.0, 4.0, spec).unwrap(), false).unwrap();
    let half = PotentialSpec::new(gamma / 2.0, alpha / 2.0, l);
    let spin = full_spectrum(&xx(l, 0.0, gamma / 2.0, alpha / 2.0), false).unwrap();
    let shifted: Vec<f64> = spin.energies().iter().map(|e| e + shift).collect();
    c.below("max |BH(max_occ=1) - XX(g=0)|", max_abs_diff(bose.energies(), &shifted), 1e-10);
    let oracle: Vec<f64> = xx_chain_oracle(l, &half.fields()).into_iter().map(|e| e + shift).collect();
    c.below("max |BH(max_occ=1) - dense XX chain|", max_abs_diff(bose.energies(), &oracle), 1e-10);
    c
}

fn complex_state(pattern: &InitialPattern, basis: &SectorBasis) -> Vec<Complex<f64>> {
    pattern.vector::<f64>(basis).unwrap().into_iter().map(|x| Complex::new(x, 0.0)).collect()
}

fn criterion_4() -> Checks {
    let mut c = Checks::default();
    let cases = [("BH L=8", bh(8, 1.0, 4.0, 1.0, 2.0), "10101010"), ("XX L=10", xx(10, 0.5, 0.6, 2.0), "1010101010")];
    for (name, h, pat) in cases {
        assert!(h.dim() <= 1000);
        let pattern = InitialPattern::parse(pat).unwrap();
        let psi = complex_state(&pattern, h.basis());
        let sol = full_spectrum(&h, true).unwrap();
        let exact = ExactPropagator::new(&sol).unwrap().evolve(&psi, 10.0).unwrap();
        let krylov = KrylovPropagator::new(&h, KrylovSettings::default()).unwrap().evolve(&psi, 10.0).unwrap();
        let overlap: Complex<f64> = exact.iter().zip(&krylov).map(|(a, b)| a.conj() * b).sum();
        c.below(&format!("{name} infidelity at t=10"), 1.0 - overlap.norm_sqr(), 1e-8);
        let mut prop = KrylovPropagator::new(&h, KrylovSettings::default()).unwrap();
        let traj = evolve_observables(&h, &mut prop, &pattern, &TimeGrid::default(), &[Observable::Imbalance]).unwrap();
        c.below(&format!("{name} norm drift to t=1e3"), traj.drift.norm, 1e-6);
        c.below(&format!("{name} energy drift to t=1e3"), traj.drift.energy, 1e-6);
    }
    c
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

fn criterion_5() -> Checks {
    let mut c = Checks::default();
    let mut peaks = Vec::new();
    for gamma in [1.0, 4.0, 7.0] {
        let h = bh(8, 1.0, 4.0, gamma, 2.0);
        let sol = full_spectrum(&h, false).unwrap();
        let exact = level_histogram(&sol, 50).unwrap().fractions();
        let kpm = dos_chebyshev(&h, 512, 32, 50, 5).unwrap().fractions();
        c.below(&format!("TV(gamma={gamma})"), total_variation(&kpm, &exact), 0.02);
        peaks.push(max_dos_energy(&dos_chebyshev(&h, 512, 32, 101, 5).unwrap()));
    }
    c.check(
        format!("eps* over gamma 1, 4, 7 = {:.3}, {:.3}, {:.3} decreasing", peaks[0], peaks[1], peaks[2]),
        peaks.windows(2).all(|w| w[1] < w[0]),
    );
    c
}

fn criterion_6() -> Checks {
    let mut c = Checks::default();
    for (gamma, lo, hi) in [(1.0, 0.50, 0.54), (6.0, 0.37, 0.41)] {
        let sol = full_spectrum(&bh(12, 1.0, 4.0, gamma, 2.0), false).unwrap();
        c.within(&format!("BH L=12 gamma={gamma} <r>"), mean_r_in_window(&sol, histogram_peak(&sol), 0.05), lo, hi);
    }
    for (g, lo, hi) in [(0.5, 0.50, 0.54), (0.05, 0.37, 0.42)] {
        let sol = full_spectrum(&xx(14, g, 0.2, 2.0), false).unwrap();
        c.within(&format!("XX L=14 g={g} <r>"), mean_r_in_window(&sol, 0.5, 0.02), lo, hi);
    }
    c
}

fn tanh_data(noise: f64, seed: u64) -> Vec<CollapsePoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for l in [10usize, 12, 14, 16] {
        for k in 0..=20 {
            let gamma = 2.0 + 0.1 * k as f64;
            let eta: f64 = rng.sample(StandardNormal);
            out.push(CollapsePoint { size: l, gamma, y: powerlaw_variable(l, gamma, 3.0, 1.2).tanh() + noise * eta });
        }
    }
    out
}

fn bkt_data(b: f64, noise: f64, seed: u64) -> Vec<CollapsePoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for l in [10usize, 12, 14, 16] {
        for k in 0..=20 {
            let gamma = 2.0 + 0.1 * k as f64;
            let eta: f64 = rng.sample(StandardNormal);
            if let Some(x) = bkt_variable(l, gamma, 3.0, b, b) {
                out.push(CollapsePoint { size: l, gamma, y: x.tanh() + noise * eta });
            }
        }
    }
    out
}

fn criterion_7() -> Checks {
    let mut c = Checks::default();
    c.near("cost(monotone)", cost_function(&[0.0, 0.2, 0.2, 0.9]).unwrap(), 0.0, 1e-15);
    c.near("cost(0,1,0)", cost_function(&[0.0, 1.0, 0.0]).unwrap(), 1.0, 0.0);
    c.near("cost(0,1,0,1,0)", cost_function(&[0.0, 1.0, 0.0, 1.0, 0.0]).unwrap(), 3.0, 0.0);

    let sb = SearchBox::bose_hubbard();
    let settings = SearchSettings::default();
    for (tag, noise, tol) in [("clean", 0.0, 0.05), ("1% noise", 0.01, 0.15)] {
        let fit = powerlaw_collapse(&tanh_data(noise, 1), &sb, settings).unwrap();
        c.near(&format!("power-law {tag} gamma_c"), fit.get("gamma_c").unwrap(), 3.0, tol);
        c.near(&format!("power-law {tag} nu"), fit.get("nu").unwrap(), 1.2, tol);
    }
    for (tag, noise, scale) in [("clean", 0.0, 1.0), ("1% noise", 0.01, 3.0)] {
        let data = bkt_data(1.5, noise, 1);
        let fit = bkt_collapse(&data, true, Crossing::Fixed, &sb, settings).unwrap();
        c.near(&format!("BKT {tag} gamma0"), fit.get("gamma0").unwrap(), 3.0, 0.1 * scale);
        c.near(&format!("BKT {tag} b"), fit.get("b").unwrap(), 1.5, 0.15 * scale);
        if noise == 0.0 {
            let free = bkt_collapse(&data, false, Crossing::Fixed, &sb, settings).unwrap();
            c.check(format!("BKT nesting cost {:.4} <= {:.4}", free.cost, fit.cost), free.cost <= fit.cost);
            let (bm, bp) = (free.get("b_minus").unwrap(), free.get("b_plus").unwrap());
            c.check(format!("BKT b- = {bm:.3} ~ b+ = {bp:.3}"), (bm - bp).abs() <= 0.3);
        }
    }
    c
}

fn series(ts: &[f64], mut f: impl FnMut(f64) -> f64) -> TimeSeries<f64> {
    TimeSeries::new(TimeGrid::new(ts.to_vec()).unwrap(), ts.iter().map(|&t| f(t)).collect(), SeriesMeta::default()).unwrap()
}

fn criterion_8() -> Checks {
    let mut c = Checks::default();
    let grid: TimeGrid<f64> = TimeGrid::default();
    let ts = grid.points();
    let exact = fit_power_decay(&series(ts, |t| t.powf(-0.3)), 200.0).unwrap();
    c.near("exact power-law xi", exact.exponent, 0.3, 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let noisy = series(ts, |t| 0.8 * t.powf(-0.15) * (1.0 + 0.01 * rng.sample::<f64, _>(StandardNormal)));
    c.near("noisy power-law xi", fit_power_decay(&noisy, 200.0).unwrap().exponent, 0.15, 0.005);

    let points: Vec<(f64, f64)> = (0..=24)
        .map(|k| {
            let g = 2.0 + 0.25 * k as f64;
            (g, if g < 3.5 { 0.5 * (3.5 - g).powf(1.1) + 0.02 } else { 0.02 })
        })
        .collect();
    let fit = fit_critical_exponent(&points, (1.0, 6.0), (0.3, 3.0), 3.6, SearchSettings::default()).unwrap();
    c.near("critical gamma_c", fit.gamma_c, 3.5, 0.05);
    c.near("critical nu", fit.nu, 1.1, 0.1);
    c
}

/// Window-averaged eigenstate EE and PE, normalized by Page and ln dim.
fn eigen_point(h: &SparseHamiltonian<f64>, page: f64) -> (f64, f64) {
    let sol = full_spectrum_capped(h, true, 80_000).unwrap();
    let idx = select_window_states(&sol, histogram_peak(&sol), WindowMode::HalfWidth(0.05)).unwrap();
    let l = h.basis().sites();
    let (mut ee, mut pe) = (0.0, 0.0);
    for &k in &idx {
        let v = sol.vector(k).unwrap();
        ee += entanglement_entropy::<f64, f64>(v, h.basis(), l / 2).unwrap();
        pe += participation_entropy::<f64, f64>(v).unwrap();
    }
    let n = idx.len() as f64;
    (ee / n / page, pe / n / (h.dim() as f64).ln())
}

struct Quench {
    ee: TimeSeries<f64>,
    pe: TimeSeries<f64>,
    imbalance: TimeSeries<f64>,
}

/// Averaged and smoothed dynamics from product states sampled around the DoS peak,
/// or from the given patterns.
fn quench(h: &SparseHamiltonian<f64>, states: usize, patterns: &[&str], seed: u64) -> Quench {
    let patterns: Vec<InitialPattern> = if patterns.is_empty() {
        let edges = lanczos_extremes(h, 300, seed).unwrap();
        let eps_star = max_dos_energy(&dos_chebyshev(h, 512, 32, 101, seed).unwrap());
        sample_initial_states(h, edges, eps_star, 0.05, states, seed).unwrap().patterns
    } else {
        patterns.iter().map(|p| InitialPattern::parse(p).unwrap()).collect()
    };
    let grid = TimeGrid::default();
    let obs = [Observable::EntanglementEntropy, Observable::ParticipationEntropy, Observable::Imbalance];
    let runs: Vec<_> = patterns
        .iter()
        .map(|p| {
            let mut prop = KrylovPropagator::new(h, KrylovSettings::default()).unwrap();
            evolve_observables(h, &mut prop, p, &grid, &obs).unwrap()
        })
        .collect();
    let avg = |tag: SeriesTag| {
        let members: Vec<_> = runs.iter().map(|r| r.series[&tag].clone()).collect();
        smooth_series(&average_over_initial_states(&members).unwrap(), 11).unwrap()
    };
    Quench {
        ee: avg(SeriesTag::EntanglementEntropy),
        pe: avg(SeriesTag::ParticipationEntropy),
        imbalance: avg(SeriesTag::Imbalance),
    }
}

fn late(s: &TimeSeries<f64>) -> f64 {
    *s.smoothed.as_ref().unwrap().last().unwrap()
}

fn criterion_10() -> Checks {
    let mut c = Checks::default();
    let basis = enumerate_boson_sector(10, 5, 5).unwrap();
    let page = page_value_monte_carlo(&basis, 5, 10_000, 77, PageEnsemble::Real).unwrap().mean;
    let ergodic = quench(&bh(10, 1.0, 4.0, 1.0, 2.0), 10, &[], 101);
    let localized = quench(&bh(10, 1.0, 4.0, 5.0, 2.0), 10, &[], 105);
    c.within("EE(1e3)/Page at gamma=1", late(&ergodic.ee) / page, 0.85, f64::INFINITY);
    c.within("EE(1e3)/Page at gamma=5", late(&localized.ee) / page, f64::NEG_INFINITY, 0.5);
    c.within("I(1e3) at gamma=1", late(&ergodic.imbalance), f64::NEG_INFINITY, 0.1);
    c.within("I(1e3) at gamma=5", late(&localized.imbalance), 0.5, f64::INFINITY);
    let cdw = ["1010101010"];
    let free = late(&quench(&bh(10, 1.0, 0.0, 2.0, 2.0), 1, &cdw, 0).pe);
    let interacting = late(&quench(&bh(10, 1.0, 4.0, 2.0, 2.0), 1, &cdw, 0).pe);
    c.check(format!("PE(1e3) at gamma=2: U=0 {free:.3} < U=4 {interacting:.3}"), free < interacting);
    c
}

/// Sweep for the full-scale collapse: normalized (EE, PE) per (L, γ).
fn collapse_sweep(
    sizes: &[usize],
    gammas: &[f64],
    build: impl Fn(usize, f64) -> SparseHamiltonian<f64>,
    page_basis: impl Fn(usize) -> SectorBasis,
) -> (Vec<CollapsePoint<f64>>, Vec<CollapsePoint<f64>>) {
    let (mut ee, mut pe) = (Vec::new(), Vec::new());
    for &l in sizes {
        let page = page_value_monte_carlo(&page_basis(l), l / 2, 100_000, 900 + l as u64, PageEnsemble::Real).unwrap().mean;
        for &gamma in gammas {
            let (e, p) = eigen_point(&build(l, gamma), page);
            ee.push(CollapsePoint { size: l, gamma, y: e });
            pe.push(CollapsePoint { size: l, gamma, y: p });
        }
    }
    (ee, pe)
}

/// Imbalance exponents ξ(γ) at late times for the critical fit.
fn exponents(gammas: &[f64], build: impl Fn(f64) -> SparseHamiltonian<f64>) -> Vec<(f64, f64)> {
    gammas
        .iter()
        .map(|&g| {
            let q = quench(&build(g), 50, &[], 500 + (g * 100.0) as u64);
            (g, fit_power_decay(&q.imbalance, 200.0).unwrap().exponent)
        })
        .collect()
}

fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

fn criterion_9() -> Checks {
    let mut c = Checks::default();
    let settings = SearchSettings::default();
    let bh_box = SearchBox::bose_hubbard();
    let (ee, pe) = collapse_sweep(
        &[10, 12, 14],
        &range(1.0, 6.0, 0.25),
        |l, g| bh(l, 1.0, 4.0, g, 2.0),
        |l| enumerate_boson_sector(l, l / 2, (l / 2) as u8).unwrap(),
    );
    let ee_fit = powerlaw_collapse(&ee, &bh_box, settings).unwrap();
    c.near("BH EE gamma_c", ee_fit.get("gamma_c").unwrap(), 2.58, 0.3);
    c.near("BH EE nu", ee_fit.get("nu").unwrap(), 0.95, 0.3);
    let pe_fit = powerlaw_collapse(&pe, &bh_box, settings).unwrap();
    c.near("BH PE gamma_c", pe_fit.get("gamma_c").unwrap(), 3.40, 0.3);
    c.near("cost EE power-law", ee_fit.cost, 0.213, 0.05);
    c.near("cost PE power-law", pe_fit.cost, 0.264, 0.05);
    for (name, data, eq, ne) in [("EE", &ee, 0.293, 0.279), ("PE", &pe, 0.275, 0.264)] {
        let e = bkt_collapse(data, true, Crossing::Linear, &bh_box, settings).unwrap();
        let n = bkt_collapse(data, false, Crossing::Linear, &bh_box, settings).unwrap();
        c.near(&format!("cost {name} BKT b+=b-"), e.cost, eq, 0.05);
        c.near(&format!("cost {name} BKT b+!=b-"), n.cost, ne, 0.05);
    }

    let (xx_ee, _) = collapse_sweep(
        &[12, 14, 16, 18],
        &range(0.2, 2.0, 0.1),
        |l, g| xx(l, 0.5, g, 2.0),
        |l| enumerate_spin_sector(l, l / 2).unwrap(),
    );
    let xx_fit = powerlaw_collapse(&xx_ee, &SearchBox::all_to_all_xx(), settings).unwrap();
    c.near("XX EE gamma_c", xx_fit.get("gamma_c").unwrap(), 0.73, 0.15);

    let bh_xi = exponents(&range(2.0, 8.0, 0.5), |g| bh(14, 1.0, 4.0, g, 2.0));
    let fit = fit_critical_exponent(&bh_xi, (1.0, 6.0), (0.3, 3.0), 3.6, settings).unwrap();
    c.near("BH imbalance gamma_c", fit.gamma_c, 3.59, 0.5);
    let xx_xi = exponents(&range(0.8, 2.0, 0.1), |g| xx(18, 0.5, g, 2.0));
    let fit = fit_critical_exponent(&xx_xi, (0.3, 2.0), (0.3, 3.0), 1.2, settings).unwrap();
    c.near("XX imbalance gamma_c", fit.gamma_c, 1.20, 0.5);
    c
}

type Criterion<'a> = (&'a str, bool, Box<dyn Fn() -> Checks>);

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ignored = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let criteria: Vec<Criterion> = vec![
        ("criterion_1_reference_distributions", false, Box::new(criterion_1)),
        ("criterion_2_page_values", false, Box::new(move || criterion_2(ignored))),
        ("criterion_3_hard_core_equivalence", false, Box::new(criterion_3)),
        ("criterion_4_propagator_oracle", false, Box::new(criterion_4)),
        ("criterion_5_dos_oracle", false, Box::new(criterion_5)),
        ("criterion_6_phase_diagram_crossover", false, Box::new(criterion_6)),
        ("criterion_7_collapse_self_consistency", false, Box::new(criterion_7)),
        ("criterion_8_exponent_fits", false, Box::new(criterion_8)),
        ("criterion_9_full_scale_regression", true, Box::new(criterion_9)),
        ("criterion_10_qualitative_dynamics", false, Box::new(criterion_10)),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, extended, run) in &criteria {
        let number = name.split('_').nth(1).unwrap_or_default();
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str()) || f.as_str() == number) {
            continue;
        }
        if *extended && !ignored {
            println!("SKIP {name} (extended suite; pass --ignored)");
            continue;
        }
        let start = Instant::now();
        let checks = run();
        ran += 1;
        let verdict = if checks.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), checks.summary());
        if !checks.passed() {
            failed.push(*name);
        }
    }
    println!("\nacceptance: {} run, {} passed, {} failed", ran, ran - failed.len(), failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}

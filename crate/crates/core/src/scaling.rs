//! Finite-size scaling collapse and decay-exponent fits.
//!
//! The collapse quality is the total variation of the observable along the
//! sorted scaling variable, `C = Σ|y_{j+1} − y_j| / (max y − min y) − 1`,
//! which vanishes exactly when the collapsed data are monotone.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One `(L, γ, y)` sample entering a collapse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint<T> {
    #[serde(rename = "L")]
    pub size: usize,
    pub gamma: T,
    pub y: T,
}

/// `Σ|X_{j+1} − X_j| / (max − min) − 1`.
pub fn cost_function<T: Real>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::parameter("cost function needs at least two values"));
    }
    let (lo, hi) = values.iter().fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::parameter("cost function undefined for constant data"));
    }
    let variation: T = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(variation / (hi - lo) - T::one())
}

/// Rectangular search region for the fits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub gamma_c: (f64, f64),
    pub nu: (f64, f64),
    pub b: (f64, f64),
    pub gamma1: (f64, f64),
}

impl SearchBox {
    /// Bose-Hubbard chain defaults.
    pub fn bose_hubbard() -> Self {
        SearchBox { gamma_c: (1.0, 6.0), nu: (0.3, 3.0), b: (0.1, 10.0), gamma1: (-0.2, 0.2) }
    }

    /// All-to-all XX model defaults.
    pub fn all_to_all_xx() -> Self {
        SearchBox { gamma_c: (0.3, 2.0), ..Self::bose_hubbard() }
    }
}

impl Default for SearchBox {
    fn default() -> Self {
        Self::bose_hubbard()
    }
}

/// Optimizer resolution: grid points per axis and simplex restarts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub grid_points: usize,
    pub starts: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings { grid_points: 50, starts: 5 }
    }
}

/// Critical-point model for `bkt_collapse`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    /// `γc` independent of `L`.
    Fixed,
    /// `γc = γ0 + γ1 L`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ansatz {
    PowerLaw,
    Bkt { equal_b: bool, crossing: Crossing },
}

/// What the search did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    /// `(name, lower, upper)` per parameter.
    pub bounds: Vec<(String, f64, f64)>,
    pub grid_points: usize,
    pub starts: usize,
    pub evaluations: usize,
    /// Best cost on the coarse grid, before refinement.
    pub grid_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct CollapseResult<T> {
    pub ansatz: Ansatz,
    pub parameters: BTreeMap<String, T>,
    pub cost: T,
    pub search: SearchSummary,
}

impl<T: Real> CollapseResult<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.parameters.get(name).copied()
    }
}

struct Optimum {
    params: Vec<f64>,
    cost: f64,
    evaluations: usize,
    grid_cost: f64,
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => a.1 < b.1,
    }
}

fn sanitize(c: f64) -> f64 {
    if c.is_nan() {
        f64::INFINITY
    } else {
        c
    }
}

/// Coarse grid over the box, then Nelder-Mead from the best cells and from
/// any extra `seeds`. Ties go to the lowest parameter vector.
fn minimize<F>(f: F, bounds: &[(f64, f64)], settings: SearchSettings, seeds: &[Vec<f64>]) -> Optimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    let g = settings.grid_points.max(2);
    let total = g.pow(dim as u32);
    let point = |mut idx: usize| -> Vec<f64> {
        let mut p = vec![0.0; dim];
        for d in (0..dim).rev() {
            let k = idx % g;
            idx /= g;
            let (lo, hi) = bounds[d];
            p[d] = lo + (hi - lo) * k as f64 / (g - 1) as f64;
        }
        p
    };
    let keep = settings.starts.max(1);
    let merge = |mut a: Vec<(f64, usize)>, b: Vec<(f64, usize)>| {
        a.extend(b);
        a.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("sanitized").then(x.1.cmp(&y.1)));
        a.truncate(keep);
        a
    };
    let best_cells = (0..total)
        .into_par_iter()
        .fold(Vec::new, |acc, i| merge(acc, vec![(sanitize(f(&point(i))), i)]))
        .reduce(Vec::new, merge);
    let grid_cost = best_cells[0].0;
    let mut evaluations = total;
    let steps: Vec<f64> = bounds.iter().map(|&(lo, hi)| (hi - lo) / (g - 1) as f64).collect();
    let mut starts: Vec<Vec<f64>> = best_cells.iter().map(|&(_, i)| point(i)).collect();
    starts.extend(seeds.iter().cloned());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let (p, c, n) = nelder_mead(&f, &start, &steps, bounds);
        evaluations += n;
        if best.as_ref().is_none_or(|(bc, bp)| better((c, &p), (*bc, bp))) {
            best = Some((c, p));
        }
    }
    let (cost, params) = best.expect("at least one start");
    Optimum { params, cost, evaluations, grid_cost }
}

fn clamp_into(p: &mut [f64], bounds: &[(f64, f64)]) {
    for (x, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *x = x.clamp(lo, hi);
    }
}

/// Box-clamped Nelder-Mead. Returns the best vertex, its cost and the
/// number of evaluations.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], steps: &[f64], bounds: &[(f64, f64)]) -> (Vec<f64>, f64, usize) {
    let n = start.len();
    let mut evals = 0;
    let mut eval = |p: &[f64]| {
        evals += 1;
        sanitize(f(p))
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp_into(&mut x0, bounds);
    let c0 = eval(&x0);
    simplex.push((x0.clone(), c0));
    for d in 0..n {
        let mut p = x0.clone();
        p[d] += steps[d];
        if p[d] > bounds[d].1 {
            p[d] = x0[d] - steps[d];
        }
        clamp_into(&mut p, bounds);
        let c = eval(&p);
        simplex.push((p, c));
    }
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| {
            if better((a.1, &a.0), (b.1, &b.0)) {
                std::cmp::Ordering::Less
            } else if better((b.1, &b.0), (a.1, &a.0)) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
    };
    let scale: Vec<f64> = bounds.iter().map(|&(lo, hi)| (hi - lo).max(f64::MIN_POSITIVE)).collect();
    for _ in 0..200 * n {
        order(&mut simplex);
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).zip(&scale).map(|((a, b), s)| ((a - b) / s).abs()))
            .fold(0.0, f64::max);
        if diameter < 1e-10 || (spread.is_finite() && spread <= 1e-15 && diameter < 1e-6) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|d| simplex[..n].iter().map(|(p, _)| p[d]).sum::<f64>() / n as f64).collect();
        let toward = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|d| centroid[d] + t * (simplex[n].0[d] - centroid[d])).collect();
            clamp_into(&mut p, bounds);
            p
        };
        let reflected = toward(-1.0);
        let cr = eval(&reflected);
        if cr < simplex[0].1 {
            let expanded = toward(-2.0);
            let ce = eval(&expanded);
            simplex[n] = if ce < cr { (expanded, ce) } else { (reflected, cr) };
        } else if cr < simplex[n - 1].1 {
            simplex[n] = (reflected, cr);
        } else {
            let contracted = if cr < simplex[n].1 { toward(-0.5) } else { toward(0.5) };
            let cc = eval(&contracted);
            if cc < simplex[n].1.min(cr) {
                simplex[n] = (contracted, cc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    clamp_into(&mut p, bounds);
                    let c = eval(&p);
                    *vertex = (p, c);
                }
            }
        }
    }
    order(&mut simplex);
    let (p, c) = simplex.swap_remove(0);
    (p, c, evals)
}

/// Cost of the data ordered by `scaled(point)`; points mapped to `None` are
/// left out.
fn collapse_cost<T: Real>(data: &[CollapsePoint<T>], scaled: impl Fn(&CollapsePoint<T>) -> Option<f64>) -> f64 {
    let mut keyed: Vec<(f64, usize, f64, f64)> = data
        .iter()
        .filter_map(|p| scaled(p).map(|x| (x, p.size, p.gamma.to_f64_lossy(), p.y.to_f64_lossy())))
        .collect();
    if keyed.len() < 2 {
        return f64::INFINITY;
    }
    keyed.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal))
    });
    let ys: Vec<f64> = keyed.iter().map(|k| k.3).collect();
    cost_function(&ys).unwrap_or(f64::INFINITY)
}

fn validate_collapse_data<T: Real>(data: &[CollapsePoint<T>]) -> Result<()> {
    let mut per_size: BTreeMap<usize, usize> = BTreeMap::new();
    for p in data {
        if !p.gamma.is_finite() || !p.y.is_finite() {
            return Err(Error::parameter("collapse data contain non-finite values"));
        }
        *per_size.entry(p.size).or_default() += 1;
    }
    if per_size.len() < 2 {
        return Err(Error::parameter("collapse needs at least two system sizes"));
    }
    if let Some((l, n)) = per_size.iter().find(|(_, &n)| n < 5) {
        return Err(Error::parameter(format!("system size {l} has only {n} points; at least 5 required")));
    }
    let y0 = data[0].y;
    if data.iter().all(|p| p.y == y0) {
        return Err(Error::parameter("collapse data are constant"));
    }
    Ok(())
}

/// Scaling variable `L^{1/ν}(γ − γc)`.
pub fn powerlaw_variable(size: usize, gamma: f64, gamma_c: f64, nu: f64) -> f64 {
    (size as f64).powf(1.0 / nu) * (gamma - gamma_c)
}

/// Scaling variable `sgn(γ − γc) L / exp(b_± / √|γ − γc|)`, or `None`
/// within `1e-6` of the crossing.
pub fn bkt_variable(size: usize, gamma: f64, gamma_c: f64, b_minus: f64, b_plus: f64) -> Option<f64> {
    let d = gamma - gamma_c;
    if d.abs() < 1e-6 {
        return None;
    }
    let b = if d < 0.0 { b_minus } else { b_plus };
    Some(d.signum() * size as f64 * (-b / d.abs().sqrt()).exp())
}

fn to_result<T: Real>(ansatz: Ansatz, names: &[&str], bounds: &[(f64, f64)], settings: SearchSettings, opt: Optimum) -> CollapseResult<T> {
    CollapseResult {
        ansatz,
        parameters: names.iter().zip(&opt.params).map(|(n, &v)| (n.to_string(), T::of(v))).collect(),
        cost: T::of(opt.cost),
        search: SearchSummary {
            bounds: names.iter().zip(bounds).map(|(n, &(lo, hi))| (n.to_string(), lo, hi)).collect(),
            grid_points: settings.grid_points,
            starts: settings.starts,
            evaluations: opt.evaluations,
            grid_cost: opt.grid_cost,
        },
    }
}

/// Collapse under `y = f[L^{1/ν}(γ − γc)]`.
pub fn powerlaw_collapse<T: Real>(
    data: &[CollapsePoint<T>],
    search: &SearchBox,
    settings: SearchSettings,
) -> Result<CollapseResult<T>> {
    validate_collapse_data(data)?;
    let bounds = [search.gamma_c, search.nu];
    let opt = minimize(
        |p: &[f64]| collapse_cost(data, |q| Some(powerlaw_variable(q.size, q.gamma.to_f64_lossy(), p[0], p[1]))),
        &bounds,
        settings,
        &[],
    );
    Ok(to_result(Ansatz::PowerLaw, &["gamma_c", "nu"], &bounds, settings, opt))
}

fn bkt_layout(search: &SearchBox, equal_b: bool, crossing: Crossing) -> (Vec<&'static str>, Vec<(f64, f64)>) {
    let mut names = vec!["gamma0"];
    let mut bounds = vec![search.gamma_c];
    if crossing == Crossing::Linear {
        names.push("gamma1");
        bounds.push(search.gamma1);
    }
    if equal_b {
        names.push("b");
        bounds.push(search.b);
    } else {
        names.extend(["b_minus", "b_plus"]);
        bounds.extend([search.b, search.b]);
    }
    (names, bounds)
}

fn bkt_unpack(p: &[f64], equal_b: bool, crossing: Crossing) -> (f64, f64, f64, f64) {
    let (g1, rest) = match crossing {
        Crossing::Fixed => (0.0, &p[1..]),
        Crossing::Linear => (p[1], &p[2..]),
    };
    let (bm, bp) = if equal_b { (rest[0], rest[0]) } else { (rest[0], rest[1]) };
    (p[0], g1, bm, bp)
}

fn bkt_cost<T: Real>(data: &[CollapsePoint<T>], p: &[f64], equal_b: bool, crossing: Crossing) -> f64 {
    let (g0, g1, bm, bp) = bkt_unpack(p, equal_b, crossing);
    collapse_cost(data, |q| bkt_variable(q.size, q.gamma.to_f64_lossy(), g0 + g1 * q.size as f64, bm, bp))
}

/// Collapse under the BKT ansatz with `ξ = exp(b_± / √|γ − γc(L)|)`.
///
/// The unequal-`b` search is seeded with the equal-`b` optimum, so its cost
/// never exceeds the equal-`b` cost.
pub fn bkt_collapse<T: Real>(
    data: &[CollapsePoint<T>],
    equal_b: bool,
    crossing: Crossing,
    search: &SearchBox,
    settings: SearchSettings,
) -> Result<CollapseResult<T>> {
    validate_collapse_data(data)?;
    let (names, bounds) = bkt_layout(search, equal_b, crossing);
    let seeds = if equal_b {
        Vec::new()
    } else {
        let nested = bkt_collapse(data, true, crossing, search, settings)?;
        let mut seed: Vec<f64> = vec![nested.get("gamma0").expect("fitted").to_f64_lossy()];
        if crossing == Crossing::Linear {
            seed.push(nested.get("gamma1").expect("fitted").to_f64_lossy());
        }
        let b = nested.get("b").expect("fitted").to_f64_lossy();
        seed.extend([b, b]);
        vec![seed]
    };
    let opt = minimize(|p: &[f64]| bkt_cost(data, p, equal_b, crossing), &bounds, settings, &seeds);
    Ok(to_result(Ansatz::Bkt { equal_b, crossing }, &names, &bounds, settings, opt))
}

/// `(L, γ, x, y)` rows of a fitted collapse, sorted by `x`.
pub fn collapsed_coordinates<T: Real>(data: &[CollapsePoint<T>], result: &CollapseResult<T>) -> Vec<(usize, T, T, T)> {
    let p = |n: &str| result.get(n).map(|v| v.to_f64_lossy());
    let mut rows: Vec<(usize, T, T, T)> = data
        .iter()
        .filter_map(|q| {
            let g = q.gamma.to_f64_lossy();
            let x = match result.ansatz {
                Ansatz::PowerLaw => Some(powerlaw_variable(q.size, g, p("gamma_c")?, p("nu")?)),
                Ansatz::Bkt { equal_b, .. } => {
                    let gc = p("gamma0")? + p("gamma1").unwrap_or(0.0) * q.size as f64;
                    let (bm, bp) = if equal_b { (p("b")?, p("b")?) } else { (p("b_minus")?, p("b_plus")?) };
                    bkt_variable(q.size, g, gc, bm, bp)
                }
            }?;
            Some((q.size, q.gamma, T::of(x), q.y))
        })
        .collect();
    rows.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    rows
}

/// Least-squares line through `(ln t, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// `ξ` in `y ∝ t^{−ξ}`.
    pub exponent: f64,
    pub amplitude: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
    pub points: usize,
}

/// Fit `y(t) = A t^{−ξ}` to the raw values at `t ≥ t_min`.
pub fn fit_power_decay<T: Real>(series: &TimeSeries<T>, t_min: T) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = series
        .grid
        .points()
        .iter()
        .zip(&series.values)
        .filter(|(&t, &y)| t >= t_min && t > T::zero() && y > T::zero())
        .map(|(&t, &y)| (t.to_f64_lossy().ln(), y.to_f64_lossy().ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::fit(format!("only {} positive points with t ≥ {t_min}; need 10", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::fit("fit window spans a single time"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(PowerFit { exponent: -slope, amplitude: intercept.exp(), residual, points: pts.len() })
}

/// Piecewise fit `ξ(γ) = A|γ − γc|^ν + ξ̄` below `γc` and `ξ̄` above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalFit {
    pub gamma_c: f64,
    pub nu: f64,
    pub amplitude: f64,
    pub plateau: f64,
    /// Sum of squared residuals.
    pub residual: f64,
}

/// `ξ̄` is the mean over points with `γ ≥ plateau_from` and is held fixed;
/// `A` is solved in closed form for each `(γc, ν)` on the search.
pub fn fit_critical_exponent(
    points: &[(f64, f64)],
    gamma_c: (f64, f64),
    nu: (f64, f64),
    plateau_from: f64,
    settings: SearchSettings,
) -> Result<CriticalFit> {
    if points.len() < 6 {
        return Err(Error::parameter(format!("need at least 6 points, got {}", points.len())));
    }
    let plateau_pts: Vec<f64> = points.iter().filter(|p| p.0 >= plateau_from).map(|p| p.1).collect();
    if plateau_pts.is_empty() {
        return Err(Error::parameter(format!("no points with γ ≥ {plateau_from} to define the plateau")));
    }
    let plateau = plateau_pts.iter().sum::<f64>() / plateau_pts.len() as f64;
    if points.iter().all(|p| p.0 >= plateau_from) {
        return Err(Error::fit("all points lie on the plateau; no critical branch to fit"));
    }
    if points.iter().all(|p| (p.1 - plateau).abs() < 1e-14 * plateau.abs().max(1.0)) {
        return Err(Error::fit("exponents are constant; no critical branch to fit"));
    }
    let amplitude = |gc: f64, v: f64| -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for &(g, xi) in points {
            if g < gc {
                let u = (gc - g).powf(v);
                num += u * (xi - plateau);
                den += u * u;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let sse = |gc: f64, v: f64| -> f64 {
        let a = amplitude(gc, v);
        points
            .iter()
            .map(|&(g, xi)| {
                let model = if g < gc { a * (gc - g).powf(v) + plateau } else { plateau };
                (xi - model).powi(2)
            })
            .sum()
    };
    let opt = minimize(|p: &[f64]| sse(p[0], p[1]), &[gamma_c, nu], settings, &[]);
    let (gc, v) = (opt.params[0], opt.params[1]);
    Ok(CriticalFit { gamma_c: gc, nu: v, amplitude: amplitude(gc, v), plateau, residual: opt.cost })
}

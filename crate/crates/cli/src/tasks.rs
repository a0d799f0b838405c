//! Expansion of a config into jobs, and their execution.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use stark_mbl::basis::{enumerate_boson_sector, enumerate_spin_sector};
use stark_mbl::dynamics::{
    average_over_initial_states, evolve_observables, sample_initial_states, smooth_series, Drift, ExactPropagator,
    KrylovPropagator, KrylovSettings, Observable, Propagator, SeriesMeta, SeriesTag, TimeGrid, TimeSeries, Trajectory,
};
use stark_mbl::hamiltonian::{build_all_to_all_xx, build_bose_hubbard, PotentialSpec, SparseHamiltonian};
use stark_mbl::io;
use stark_mbl::linalg::lanczos_extremes;
use stark_mbl::observables::{entanglement_entropy, page_value_monte_carlo, participation_entropy, InitialPattern};
use stark_mbl::rng::substream_seed;
use stark_mbl::scaling::{
    bkt_collapse, collapsed_coordinates, fit_critical_exponent, fit_power_decay, powerlaw_collapse, CollapsePoint,
    CollapseResult, SearchBox, SearchSettings,
};
use stark_mbl::spectral::{
    dominant_eigenstate_overlap, dos_chebyshev_with, eigenstate_fock_expansion, full_spectrum_capped,
    level_histogram, max_dos_energy, r_statistics, select_window_states, ChebyshevSettings, EigenSolution,
    WindowMode,
};
use stark_mbl::Error;

use crate::config::{AnsatzKind, CollapseObservable, ModelKind, PropagatorKind, RunConfig, TaskKind};
use crate::error::{CliError, CliResult};
use crate::manifest::{checksum_entries, still_valid, RunManifest, TaskRecord, TaskStatus};

/// One parameter tuple of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point {
    pub model: ModelKind,
    #[serde(rename = "L")]
    pub sites: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// `U` for the Bose-Hubbard chain, `g` for the XX model.
    pub coupling: f64,
    #[serde(rename = "J")]
    pub hopping: f64,
}

impl Point {
    fn coupling_name(&self) -> &'static str {
        match self.model {
            ModelKind::BoseHubbard => "U",
            ModelKind::AllToAllXx => "g",
        }
    }

    /// Sweep values shared by every size and field strength.
    pub fn group(&self) -> String {
        format!("alpha{}_{}{}", self.alpha, self.coupling_name(), self.coupling)
    }

    pub fn label(&self) -> String {
        format!("L{}_gamma{}_{}", self.sites, self.gamma, self.group())
    }

    pub fn dir(&self, out: &Path) -> PathBuf {
        out.join(self.model.tag()).join(self.label())
    }

    pub fn build(&self) -> stark_mbl::Result<SparseHamiltonian<f64>> {
        let l = self.sites;
        let spec = PotentialSpec::new(self.gamma, self.alpha, l);
        match self.model {
            ModelKind::BoseHubbard => {
                let basis = Arc::new(enumerate_boson_sector(l, l / 2, (l / 2) as u8)?);
                build_bose_hubbard(basis, self.hopping, self.coupling, spec)
            }
            ModelKind::AllToAllXx => build_all_to_all_xx(Arc::new(enumerate_spin_sector(l, l / 2)?), self.coupling, spec),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Job {
    Point(TaskKind, Point),
    Page { model: ModelKind, sites: usize },
    /// All sizes and field strengths at one `(α, U|g)`.
    Collapse { members: Vec<Point> },
    /// All field strengths at one `(L, α, U|g)`.
    Fit { members: Vec<Point> },
}

impl Job {
    pub fn kind(&self) -> TaskKind {
        match self {
            Job::Point(k, _) => *k,
            Job::Page { .. } => TaskKind::Pagevalue,
            Job::Collapse { .. } => TaskKind::Collapse,
            Job::Fit { .. } => TaskKind::Fitimbalance,
        }
    }

    pub fn id(&self) -> String {
        let kind = self.kind().name();
        match self {
            Job::Point(_, p) => format!("{kind}/{}/{}", p.model.tag(), p.label()),
            Job::Page { model, sites } => format!("{kind}/{}/L{sites}", model.tag()),
            Job::Collapse { members } => format!("{kind}/{}/{}", members[0].model.tag(), members[0].group()),
            Job::Fit { members } => {
                format!("{kind}/{}/L{}_{}", members[0].model.tag(), members[0].sites, members[0].group())
            }
        }
    }

    fn dir(&self, out: &Path) -> PathBuf {
        match self {
            Job::Point(_, p) => p.dir(out),
            Job::Page { model, sites } => out.join(model.tag()).join(format!("L{sites}")),
            Job::Collapse { members } => out.join(members[0].model.tag()).join(members[0].group()),
            Job::Fit { members } => {
                out.join(members[0].model.tag()).join(format!("L{}_{}", members[0].sites, members[0].group()))
            }
        }
    }

    /// Files read by aggregate jobs.
    fn inputs(&self, out: &Path) -> Vec<PathBuf> {
        match self {
            Job::Collapse { members } => {
                let sizes: BTreeSet<usize> = members.iter().map(|p| p.sites).collect();
                members
                    .iter()
                    .map(|p| p.dir(out).join("eigenobs.json"))
                    .chain(sizes.into_iter().map(|l| page_dir(out, members[0].model, l).join("page.json")))
                    .collect()
            }
            Job::Fit { members } => members.iter().map(|p| p.dir(out).join("imbalance.csv")).collect(),
            _ => Vec::new(),
        }
    }

    fn fingerprint(&self, cfg: &RunConfig, out: &Path) -> String {
        let seed = substream_seed(cfg.seed(), &[self.kind().name(), &self.id()]);
        let section = match self {
            Job::Point(TaskKind::Spectrum | TaskKind::Dos | TaskKind::Rstat, p) => json!([p, cfg.spectral]),
            Job::Point(TaskKind::Eigenobs, p) => json!([p, cfg.spectral, cfg.eigenobs]),
            Job::Point(_, p) => json!([p, cfg.spectral, cfg.dynamics]),
            Job::Page { model, sites } => json!([model, sites, cfg.page]),
            Job::Collapse { members } => json!([members, cfg.collapse, cfg.search_box()]),
            Job::Fit { members } => json!([members, cfg.fit, cfg.default_search_box()]),
        };
        let inputs: Vec<String> =
            self.inputs(out).iter().map(|f| io::file_sha256(f).unwrap_or_else(|_| "missing".into())).collect();
        let text = json!({"id": self.id(), "seed": seed, "section": section, "inputs": inputs, "version": env!("CARGO_PKG_VERSION")});
        io::sha256_hex(text.to_string().as_bytes())
    }
}

fn page_dir(out: &Path, model: ModelKind, sites: usize) -> PathBuf {
    out.join(model.tag()).join(format!("L{sites}"))
}

pub fn points(cfg: &RunConfig) -> Vec<Point> {
    let couplings = match cfg.model {
        ModelKind::BoseHubbard => cfg.interactions(),
        ModelKind::AllToAllXx => cfg.couplings(),
    };
    let mut out = Vec::new();
    for &sites in &cfg.grid.sizes {
        for &gamma in &cfg.grid.gamma {
            for &alpha in &cfg.grid.alpha {
                for &coupling in &couplings {
                    out.push(Point { model: cfg.model, sites, gamma, alpha, coupling, hopping: cfg.grid.hopping });
                }
            }
        }
    }
    out
}

/// Requested tasks plus everything aggregates depend on.
pub fn effective_tasks(cfg: &RunConfig) -> BTreeSet<TaskKind> {
    let mut tasks: BTreeSet<TaskKind> = cfg.tasks.iter().copied().collect();
    if tasks.contains(&TaskKind::Collapse) {
        tasks.extend([TaskKind::Eigenobs, TaskKind::Pagevalue]);
    }
    if tasks.contains(&TaskKind::Fitimbalance) {
        tasks.insert(TaskKind::Dynamics);
    }
    tasks
}

/// Jobs in two phases: independent ones first, then aggregates.
pub fn plan(cfg: &RunConfig) -> CliResult<(Vec<Job>, Vec<Job>)> {
    let tasks = effective_tasks(cfg);
    if tasks.contains(&TaskKind::Fitimbalance) && !cfg.dynamics.observables.contains(&Observable::Imbalance) {
        return Err(CliError::config("fitimbalance needs `imbalance` among dynamics.observables"));
    }
    let pts = points(cfg);
    let mut first = Vec::new();
    for kind in [TaskKind::Spectrum, TaskKind::Dos, TaskKind::Rstat, TaskKind::Eigenobs, TaskKind::Dynamics] {
        if tasks.contains(&kind) {
            first.extend(pts.iter().map(|&p| Job::Point(kind, p)));
        }
    }
    if tasks.contains(&TaskKind::Pagevalue) {
        let sizes: BTreeSet<usize> = cfg.grid.sizes.iter().copied().collect();
        first.extend(sizes.into_iter().map(|sites| Job::Page { model: cfg.model, sites }));
    }
    let mut second = Vec::new();
    if tasks.contains(&TaskKind::Collapse) {
        let groups: Vec<String> = dedup(pts.iter().map(|p| p.group()));
        for g in groups {
            second.push(Job::Collapse { members: pts.iter().filter(|p| p.group() == g).copied().collect() });
        }
    }
    if tasks.contains(&TaskKind::Fitimbalance) {
        let keys: Vec<(usize, String)> = dedup(pts.iter().map(|p| (p.sites, p.group())));
        for (l, g) in keys {
            second.push(Job::Fit { members: pts.iter().filter(|p| p.sites == l && p.group() == g).copied().collect() });
        }
    }
    Ok((first, second))
}

fn dedup<K: PartialEq>(it: impl Iterator<Item = K>) -> Vec<K> {
    let mut out: Vec<K> = Vec::new();
    for k in it {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Run every planned job, skipping those whose outputs are already current.
pub fn run_experiment(cfg: &RunConfig, out: &Path) -> CliResult<RunManifest> {
    cfg.validate()?;
    let (first, second) = plan(cfg)?;
    std::fs::create_dir_all(out)?;
    let previous = RunManifest::load(out);
    let mut manifest = RunManifest::new(cfg.hash(), cfg.seed());
    for phase in [first, second] {
        let records: Vec<TaskRecord> =
            phase.par_iter().map(|job| execute(job, cfg, out, previous.as_ref())).collect::<CliResult<_>>()?;
        manifest.tasks.extend(records);
    }
    manifest.save(out)?;
    Ok(manifest)
}

fn execute(job: &Job, cfg: &RunConfig, out: &Path, previous: Option<&RunManifest>) -> CliResult<TaskRecord> {
    let id = job.id();
    let fingerprint = job.fingerprint(cfg, out);
    if let Some(prev) = previous.and_then(|m| m.find(&id)) {
        if still_valid(out, prev, &fingerprint) {
            info!("{id}: up to date, skipped");
            return Ok(TaskRecord { status: TaskStatus::Skipped, ..prev.clone() });
        }
    }
    info!("{id}: running");
    let dir = job.dir(out);
    std::fs::create_dir_all(&dir)?;
    let seed = substream_seed(cfg.seed(), &[job.kind().name(), &id]);
    let mut written = Vec::new();
    let result = match job {
        Job::Point(kind, p) => run_point(*kind, p, cfg, &dir, seed, &mut written),
        Job::Page { model, sites } => run_page(*model, *sites, cfg, &dir, seed, &mut written),
        Job::Collapse { members } => run_collapse(members, cfg, out, &dir, &mut written),
        Job::Fit { members } => run_fit(members, cfg, out, &dir, &mut written),
    };
    let outputs = checksum_entries(out, &written)?;
    let kind = job.kind().name().to_string();
    Ok(match result {
        Ok(()) => TaskRecord { id, kind, fingerprint, status: TaskStatus::Done, error: None, outputs },
        Err(e) => {
            warn!("{id}: failed: {e}");
            TaskRecord { id, kind, fingerprint, status: TaskStatus::Failed, error: Some(e.to_string()), outputs }
        }
    })
}

type Written = Vec<PathBuf>;

fn record(written: &mut Written, path: PathBuf) -> PathBuf {
    written.push(path.clone());
    path
}

fn write_json(written: &mut Written, path: PathBuf, value: &impl Serialize) -> stark_mbl::Result<()> {
    io::write_json(&record(written, path), value)
}

fn window_mode(cfg: &RunConfig) -> WindowMode<f64> {
    match cfg.spectral.nearest_count {
        Some(k) => WindowMode::NearestCount(k),
        None => WindowMode::HalfWidth(cfg.window_half_width()),
    }
}

/// Window centre: fixed if configured, else the maximum of the level histogram.
fn eps_star_exact(cfg: &RunConfig, sol: &EigenSolution<f64>) -> stark_mbl::Result<f64> {
    match cfg.fixed_eps_star() {
        Some(e) => Ok(e),
        None => Ok(max_dos_energy(&level_histogram(sol, cfg.spectral.dos_bins)?)),
    }
}

fn chebyshev(cfg: &RunConfig) -> ChebyshevSettings {
    ChebyshevSettings {
        moments: cfg.spectral.moments,
        probes: cfg.spectral.probes,
        bins: cfg.spectral.dos_bins,
        ..Default::default()
    }
}

fn run_point(kind: TaskKind, p: &Point, cfg: &RunConfig, dir: &Path, seed: u64, w: &mut Written) -> stark_mbl::Result<()> {
    let h = p.build()?;
    let meta = json!({"point": p, "seed": seed, "dim": h.dim()});
    match kind {
        TaskKind::Spectrum => {
            let sol = full_spectrum_capped(&h, false, cfg.spectral.dense_cap)?;
            let path = record(w, dir.join("spectrum.csv"));
            w.push(io::sidecar_path(&path));
            io::write_spectrum(&path, &sol, &meta)?;
            if cfg.spectral.dump_matrix {
                io::write_hamiltonian_coo(&record(w, dir.join("hamiltonian.coo")), &h)?;
            }
        }
        TaskKind::Dos => {
            let dos = dos_chebyshev_with(&h, chebyshev(cfg), seed)?;
            let eps_star = max_dos_energy(&dos);
            let path = record(w, dir.join("dos.csv"));
            w.push(io::sidecar_path(&path));
            let meta = json!({"point": p, "seed": seed, "dim": h.dim(), "settings": chebyshev(cfg), "eps_star": eps_star});
            io::write_dos(&path, &dos, &meta)?;
        }
        TaskKind::Rstat => {
            let sol = full_spectrum_capped(&h, false, cfg.spectral.dense_cap)?;
            let eps_star = eps_star_exact(cfg, &sol)?;
            let mode = window_mode(cfg);
            let idx = select_window_states(&sol, eps_star, mode)?;
            let levels: Vec<f64> = idx.iter().map(|&i| sol.energies()[i]).collect();
            let r = r_statistics(&levels)?;
            write_json(
                w,
                dir.join("rstat.json"),
                &json!({"point": p, "dim": h.dim(), "eps_star": eps_star, "window": mode, "levels": levels.len(),
                        "r_mean": r.mean, "ratios": r.samples, "merged": r.merged}),
            )?;
        }
        TaskKind::Eigenobs => run_eigenobs(p, &h, cfg, dir, w)?,
        TaskKind::Dynamics => run_dynamics(p, &h, cfg, dir, seed, w)?,
        TaskKind::Pagevalue | TaskKind::Collapse | TaskKind::Fitimbalance => unreachable!("not a point task"),
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EigenobsRecord {
    eps_star: f64,
    states: usize,
    ee_mean: f64,
    pe_mean: f64,
    ln_dim: f64,
}

fn run_eigenobs(p: &Point, h: &SparseHamiltonian<f64>, cfg: &RunConfig, dir: &Path, w: &mut Written) -> stark_mbl::Result<()> {
    let sol = full_spectrum_capped(h, true, cfg.spectral.dense_cap)?;
    let eps_star = eps_star_exact(cfg, &sol)?;
    let idx = select_window_states(&sol, eps_star, window_mode(cfg))?;
    let eps = sol.normalized()?;
    let basis = h.basis();
    let rows: Vec<(usize, f64, f64, f64)> = idx
        .par_iter()
        .map(|&k| {
            let v = sol.vector(k).expect("vectors requested");
            Ok((k, eps[k], entanglement_entropy::<f64, f64>(v, basis, p.sites / 2)?, participation_entropy::<f64, f64>(v)?))
        })
        .collect::<stark_mbl::Result<_>>()?;
    let n = rows.len() as f64;
    let rec = EigenobsRecord {
        eps_star,
        states: rows.len(),
        ee_mean: rows.iter().map(|r| r.2).sum::<f64>() / n,
        pe_mean: rows.iter().map(|r| r.3).sum::<f64>() / n,
        ln_dim: (h.dim() as f64).ln(),
    };
    let mut csv = csv::Writer::from_path(record(w, dir.join("eigenobs.csv"))).map_err(Error::from)?;
    csv.write_record(["index", "epsilon", "ee", "pe"]).map_err(Error::from)?;
    for (k, e, ee, pe) in &rows {
        csv.write_record([k.to_string(), e.to_string(), ee.to_string(), pe.to_string()]).map_err(Error::from)?;
    }
    csv.flush()?;
    write_json(w, dir.join("eigenobs.json"), &rec)?;
    let patterns: Vec<&String> = cfg.eigenobs.patterns.iter().filter(|s| s.len() == p.sites).collect();
    if !patterns.is_empty() {
        let top_k = cfg.eigenobs.top_k.unwrap_or(3);
        let mut entries = Vec::new();
        for s in patterns {
            let pattern = InitialPattern::parse(s)?;
            let (index, overlap) = dominant_eigenstate_overlap(&pattern.vector::<f64>(basis)?, &sol)?;
            let exp = eigenstate_fock_expansion(&sol, basis, index, top_k)?;
            let comps: Vec<_> = exp.components.iter().map(|(a, st)| json!({"amplitude": a, "state": st.to_string()})).collect();
            entries.push(json!({"pattern": s, "eigenstate": index, "epsilon": eps[index], "overlap": overlap, "components": comps, "clipped": exp.clipped}));
        }
        write_json(w, dir.join("expansion.json"), &entries)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PageRecord {
    #[serde(rename = "L")]
    sites: usize,
    dim: usize,
    mean: f64,
    std_error: f64,
    samples: usize,
    ensemble: stark_mbl::observables::PageEnsemble,
    seed: u64,
}

fn run_page(model: ModelKind, sites: usize, cfg: &RunConfig, dir: &Path, seed: u64, w: &mut Written) -> stark_mbl::Result<()> {
    let basis = match model {
        ModelKind::BoseHubbard => enumerate_boson_sector(sites, sites / 2, (sites / 2) as u8)?,
        ModelKind::AllToAllXx => enumerate_spin_sector(sites, sites / 2)?,
    };
    let est = page_value_monte_carlo(&basis, sites / 2, cfg.page.samples, seed, cfg.page.ensemble)?;
    let (lo, hi) = est.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let bins = 50;
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0usize; bins];
    for v in &est.values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let mut csv = csv::Writer::from_path(record(w, dir.join("page_histogram.csv"))).map_err(Error::from)?;
    csv.write_record(["ee", "count"]).map_err(Error::from)?;
    for (k, c) in counts.iter().enumerate() {
        csv.write_record([(lo + (k as f64 + 0.5) * width).to_string(), c.to_string()]).map_err(Error::from)?;
    }
    csv.flush()?;
    let rec = PageRecord {
        sites,
        dim: basis.dim(),
        mean: est.mean,
        std_error: est.std_error,
        samples: est.samples,
        ensemble: est.ensemble,
        seed,
    };
    write_json(w, dir.join("page.json"), &rec)
}

fn run_dynamics(
    p: &Point,
    h: &SparseHamiltonian<f64>,
    cfg: &RunConfig,
    dir: &Path,
    seed: u64,
    w: &mut Written,
) -> stark_mbl::Result<()> {
    let d = &cfg.dynamics;
    let edges = lanczos_extremes(h, 300, substream_seed(seed, &["edges"]))?;
    let eps_star = match d.eps_star {
        Some(e) => e,
        None => max_dos_energy(&dos_chebyshev_with(h, chebyshev(cfg), substream_seed(seed, &["dos"]))?),
    };
    let explicit: Vec<&String> = d.patterns.iter().filter(|s| s.len() == p.sites).collect();
    let (patterns, energies, note) = if explicit.is_empty() {
        let sample = sample_initial_states(h, edges, eps_star, d.half_width, d.initial_states, substream_seed(seed, &["initial"]))?;
        (sample.patterns, sample.energies, json!({"qualifying": sample.qualifying, "warning": sample.warning}))
    } else {
        let ps = explicit.iter().map(|s| InitialPattern::parse(s)).collect::<stark_mbl::Result<Vec<_>>>()?;
        let es = ps
            .iter()
            .map(|q| Ok((h.get(h.basis().index_of(q.state())?, h.basis().index_of(q.state())?) - edges.lower) / edges.width()))
            .collect::<stark_mbl::Result<Vec<f64>>>()?;
        (ps, es, json!({"explicit": true}))
    };
    let grid = TimeGrid::log_spaced(d.t_min, d.t_max, d.points, true)?;
    let krylov = KrylovSettings { dim: d.krylov_dim, tol: d.tolerance, ..Default::default() };
    let exact = match d.propagator {
        PropagatorKind::Exact => Some(full_spectrum_capped(h, true, cfg.spectral.dense_cap)?),
        PropagatorKind::Krylov => None,
    };
    let parameters = h.model().summary().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut runs: Vec<Trajectory<f64>> = Vec::with_capacity(patterns.len());
    for pattern in &patterns {
        let traj = match &exact {
            Some(sol) => evolve_observables(h, &mut ExactPropagator::new(sol)?, pattern, &grid, &d.observables)?,
            None => evolve_observables(h, &mut KrylovPropagator::new(h, krylov)?, pattern, &grid, &d.observables)?,
        };
        runs.push(traj);
    }
    let describe = match &exact {
        Some(sol) => ExactPropagator::new(sol)?.describe(),
        None => KrylovPropagator::new(h, krylov)?.describe(),
    };
    let mut drift = Drift::default();
    for t in &runs {
        drift.norm = drift.norm.max(t.drift.norm);
        drift.energy = drift.energy.max(t.drift.energy);
        drift.particles = drift.particles.max(t.drift.particles);
    }
    let tags: Vec<SeriesTag> = runs[0].series.keys().copied().collect();
    for tag in tags {
        let members: Vec<TimeSeries<f64>> = runs
            .iter()
            .zip(&patterns)
            .map(|(t, pat)| {
                let mut s = t.series[&tag].clone();
                s.meta = SeriesMeta {
                    tag: Some(tag),
                    model: p.model.tag().into(),
                    parameters: std::collections::BTreeMap::clone(&parameters),
                    patterns: vec![pat.state().to_string()],
                    seeds: vec![seed],
                    members: 1,
                    propagator: describe.clone(),
                    krylov: exact.is_none().then_some(krylov),
                    smoothing_window: None,
                };
                s
            })
            .collect();
        let mut avg = average_over_initial_states(&members)?;
        avg.meta.seeds = vec![seed];
        if let Some(win) = d.smoothing_window {
            avg = smooth_series(&avg, win)?;
        }
        let path = record(w, dir.join(format!("{tag}.csv")));
        w.push(io::sidecar_path(&path));
        io::write_series(&path, &avg)?;
    }
    let pats: Vec<String> = patterns.iter().map(|q| q.state().to_string()).collect();
    write_json(
        w,
        dir.join("dynamics.json"),
        &json!({"point": p, "dim": h.dim(), "eps_star": eps_star, "edges": [edges.lower, edges.upper],
                "patterns": pats, "pattern_epsilon": energies, "sampling": note, "drift": drift,
                "propagator": describe}),
    )
}

type CollapseData = Vec<CollapsePoint<f64>>;

/// Entanglement and participation entropies normalized by their ergodic values.
fn load_collapse_data(members: &[Point], out: &Path) -> stark_mbl::Result<(CollapseData, CollapseData)> {
    let (mut ee, mut pe) = (Vec::new(), Vec::new());
    for p in members {
        let obs: EigenobsRecord = io::read_json(&p.dir(out).join("eigenobs.json"))?;
        let page: PageRecord = io::read_json(&page_dir(out, p.model, p.sites).join("page.json"))?;
        ee.push(CollapsePoint { size: p.sites, gamma: p.gamma, y: obs.ee_mean / page.mean });
        pe.push(CollapsePoint { size: p.sites, gamma: p.gamma, y: obs.pe_mean / obs.ln_dim });
    }
    Ok((ee, pe))
}

/// Fit every ansatz to `data`, writing `<stem>_<ansatz>.json/.csv`.
pub fn collapse_points(
    data: &[CollapsePoint<f64>],
    ansatz: &[AnsatzKind],
    cfg: &RunConfig,
    dir: &Path,
    stem: &str,
    w: &mut Written,
) -> stark_mbl::Result<Vec<(AnsatzKind, CollapseResult<f64>)>> {
    let search: SearchBox = cfg.search_box();
    let settings = SearchSettings { grid_points: cfg.collapse.grid_points, starts: cfg.collapse.starts };
    let mut results = Vec::new();
    for &a in ansatz {
        let res = match a {
            AnsatzKind::Powerlaw => powerlaw_collapse(data, &search, settings)?,
            AnsatzKind::BktEqual => bkt_collapse(data, true, cfg.collapse.crossing, &search, settings)?,
            AnsatzKind::BktUnequal => bkt_collapse(data, false, cfg.collapse.crossing, &search, settings)?,
        };
        let json_path = record(w, dir.join(format!("{stem}_{}.json", a.name())));
        let csv_path = record(w, dir.join(format!("{stem}_{}.csv", a.name())));
        io::write_collapse(&json_path, &csv_path, &res, &collapsed_coordinates(data, &res))?;
        results.push((a, res));
    }
    Ok(results)
}

fn run_collapse(members: &[Point], cfg: &RunConfig, out: &Path, dir: &Path, w: &mut Written) -> stark_mbl::Result<()> {
    let (ee, pe) = load_collapse_data(members, out)?;
    let mut summary = serde_json::Map::new();
    for obs in &cfg.collapse.observables {
        let (name, data) = match obs {
            CollapseObservable::Ee => ("ee", &ee),
            CollapseObservable::Pe => ("pe", &pe),
        };
        io::write_collapse_points(&record(w, dir.join(format!("collapse_{name}_input.csv"))), data)?;
        let results = collapse_points(data, &cfg.collapse.ansatz, cfg, dir, &format!("collapse_{name}"), w)?;
        let costs: serde_json::Map<String, serde_json::Value> =
            results.iter().map(|(a, r)| (a.name().to_string(), json!({"cost": r.cost, "parameters": r.parameters}))).collect();
        summary.insert(name.to_string(), costs.into());
    }
    write_json(w, dir.join("collapse_summary.json"), &summary)
}

/// Critical fit of `(γ, ξ)` pairs with the configured boxes and plateau.
pub fn fit_exponents(points: &[(f64, f64)], cfg: &RunConfig) -> stark_mbl::Result<stark_mbl::scaling::CriticalFit> {
    let boxes = cfg.default_search_box();
    let selected: Vec<(f64, f64)> = match cfg.fit.gamma_range {
        Some((lo, hi)) => points.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi).collect(),
        None => points.to_vec(),
    };
    fit_critical_exponent(
        &selected,
        cfg.fit.gamma_c.unwrap_or(boxes.gamma_c),
        cfg.fit.nu.unwrap_or(boxes.nu),
        cfg.plateau_from(),
        SearchSettings { grid_points: cfg.fit.grid_points, starts: 5 },
    )
}

fn read_series(path: &Path) -> stark_mbl::Result<TimeSeries<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::parameter(format!("{}: {e}", path.display())));
        ts.push(num(0)?);
        vs.push(num(1)?);
    }
    TimeSeries::new(TimeGrid::new(ts)?, vs, SeriesMeta::default())
}

fn run_fit(members: &[Point], cfg: &RunConfig, out: &Path, dir: &Path, w: &mut Written) -> stark_mbl::Result<()> {
    let mut decays = Vec::new();
    let mut points = Vec::new();
    for p in members {
        let series = read_series(&p.dir(out).join("imbalance.csv"))?;
        let fit = fit_power_decay(&series, cfg.fit.t_min)?;
        decays.push(json!({"gamma": p.gamma, "fit": fit}));
        points.push((p.gamma, fit.exponent));
    }
    io::write_exponent_points(&record(w, dir.join("xi.csv")), &points)?;
    let critical = fit_exponents(&points, cfg)?;
    write_json(
        w,
        dir.join("fit.json"),
        &json!({"t_min": cfg.fit.t_min, "plateau_from": cfg.plateau_from(), "decays": decays, "critical": critical}),
    )
}

//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stark_mbl::dynamics::Observable;
use stark_mbl::io::sha256_hex;
use stark_mbl::observables::PageEnsemble;
use stark_mbl::scaling::{Crossing, SearchBox};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BoseHubbard,
    AllToAllXx,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::BoseHubbard => "bose_hubbard",
            ModelKind::AllToAllXx => "all_to_all_xx",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Spectrum,
    Dos,
    Rstat,
    Eigenobs,
    Pagevalue,
    Dynamics,
    Collapse,
    Fitimbalance,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Spectrum => "spectrum",
            TaskKind::Dos => "dos",
            TaskKind::Rstat => "rstat",
            TaskKind::Eigenobs => "eigenobs",
            TaskKind::Pagevalue => "pagevalue",
            TaskKind::Dynamics => "dynamics",
            TaskKind::Collapse => "collapse",
            TaskKind::Fitimbalance => "fitimbalance",
        }
    }
}

/// Parameter lists swept as a Cartesian product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    pub gamma: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    /// Bose-Hubbard interaction; defaults to `[4.0]`.
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<Vec<f64>>,
    /// Bose-Hubbard hopping.
    #[serde(rename = "J", default = "default_hopping")]
    pub hopping: f64,
    /// XX non-local coupling; defaults to `[0.5]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
}

fn default_alpha() -> Vec<f64> {
    vec![2.0]
}

fn default_hopping() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub dos_bins: usize,
    pub moments: usize,
    pub probes: usize,
    /// Fixed window centre; otherwise the maximum of the level histogram.
    pub eps_star: Option<f64>,
    pub half_width: Option<f64>,
    pub nearest_count: Option<usize>,
    pub dense_cap: usize,
    /// Also write the Hamiltonian in coordinate format.
    pub dump_matrix: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            dos_bins: 101,
            moments: 512,
            probes: 32,
            eps_star: None,
            half_width: None,
            nearest_count: None,
            dense_cap: stark_mbl::spectral::DEFAULT_DENSE_CAP,
            dump_matrix: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenobsConfig {
    /// Product states whose dominant eigenstate is expanded in the Fock basis.
    pub patterns: Vec<String>,
    pub top_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PageConfig {
    pub samples: usize,
    pub ensemble: PageEnsemble,
}

impl Default for PageConfig {
    fn default() -> Self {
        PageConfig { samples: 10_000, ensemble: PageEnsemble::Real }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorKind {
    Krylov,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub krylov_dim: usize,
    pub tolerance: f64,
    pub propagator: PropagatorKind,
    pub initial_states: usize,
    /// Half-width of the energy window for sampled initial states.
    pub half_width: f64,
    /// Window centre; otherwise the maximum of the Chebyshev density of states.
    pub eps_star: Option<f64>,
    /// Explicit initial states; sampling is skipped when non-empty.
    pub patterns: Vec<String>,
    pub observables: Vec<Observable>,
    pub smoothing_window: Option<usize>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            t_min: 0.1,
            t_max: 1e3,
            points: 200,
            krylov_dim: 30,
            tolerance: 1e-10,
            propagator: PropagatorKind::Krylov,
            initial_states: 10,
            half_width: 0.05,
            eps_star: None,
            patterns: Vec::new(),
            observables: vec![Observable::EntanglementEntropy, Observable::ParticipationEntropy, Observable::Imbalance],
            smoothing_window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseObservable {
    Ee,
    Pe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    Powerlaw,
    BktEqual,
    BktUnequal,
}

impl AnsatzKind {
    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Powerlaw => "powerlaw",
            AnsatzKind::BktEqual => "bkt_equal",
            AnsatzKind::BktUnequal => "bkt_unequal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxOverrides {
    pub gamma_c: Option<(f64, f64)>,
    pub nu: Option<(f64, f64)>,
    pub b: Option<(f64, f64)>,
    pub gamma1: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseConfig {
    pub observables: Vec<CollapseObservable>,
    pub ansatz: Vec<AnsatzKind>,
    /// Crossing model of the BKT ansatz.
    pub crossing: Crossing,
    pub grid_points: usize,
    pub starts: usize,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub search_box: Option<BoxOverrides>,
}

impl Default for CollapseConfig {
    fn default() -> Self {
        CollapseConfig {
            observables: vec![CollapseObservable::Ee, CollapseObservable::Pe],
            ansatz: vec![AnsatzKind::Powerlaw],
            crossing: Crossing::Linear,
            grid_points: 50,
            starts: 5,
            search_box: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub t_min: f64,
    /// Plateau set `γ ≥ plateau_from`; model default when absent.
    pub plateau_from: Option<f64>,
    /// Only exponents with γ in this range enter the critical fit.
    pub gamma_range: Option<(f64, f64)>,
    pub gamma_c: Option<(f64, f64)>,
    pub nu: Option<(f64, f64)>,
    pub grid_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { t_min: 200.0, plateau_from: None, gamma_range: None, gamma_c: None, nu: None, grid_points: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tasks: Vec<TaskKind>,
    pub grid: ParamGrid,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub eigenobs: EigenobsConfig,
    #[serde(default)]
    pub page: PageConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub collapse: CollapseConfig,
    #[serde(default)]
    pub fit: FitConfig,
}

fn finite(name: &str, xs: &[f64]) -> CliResult<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(CliError::config(format!("{name} contains non-finite value {x}"))),
        None => Ok(()),
    }
}

fn check_range(name: &str, r: Option<(f64, f64)>) -> CliResult<()> {
    match r {
        Some((lo, hi)) if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
            Err(CliError::config(format!("{name} range must satisfy lower < upper, got ({lo}, {hi})")))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn interactions(&self) -> Vec<f64> {
        self.grid.interaction.clone().unwrap_or_else(|| vec![4.0])
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.grid.g.clone().unwrap_or_else(|| vec![0.5])
    }

    pub fn default_search_box(&self) -> SearchBox {
        match self.model {
            ModelKind::BoseHubbard => SearchBox::bose_hubbard(),
            ModelKind::AllToAllXx => SearchBox::all_to_all_xx(),
        }
    }

    pub fn search_box(&self) -> SearchBox {
        let mut b = self.default_search_box();
        if let Some(o) = self.collapse.search_box {
            b.gamma_c = o.gamma_c.unwrap_or(b.gamma_c);
            b.nu = o.nu.unwrap_or(b.nu);
            b.b = o.b.unwrap_or(b.b);
            b.gamma1 = o.gamma1.unwrap_or(b.gamma1);
        }
        b
    }

    /// Window centre used by eigenstate tasks when no DoS maximum is wanted.
    pub fn fixed_eps_star(&self) -> Option<f64> {
        self.spectral.eps_star.or(match self.model {
            ModelKind::BoseHubbard => None,
            ModelKind::AllToAllXx => Some(0.5),
        })
    }

    pub fn window_half_width(&self) -> f64 {
        self.spectral.half_width.unwrap_or(match self.model {
            ModelKind::BoseHubbard => 0.05,
            ModelKind::AllToAllXx => 0.02,
        })
    }

    pub fn plateau_from(&self) -> f64 {
        self.fit.plateau_from.unwrap_or(match self.model {
            ModelKind::BoseHubbard => 3.6,
            ModelKind::AllToAllXx => 1.2,
        })
    }

    /// SHA-256 of the canonical JSON form: keys sorted, output path left out.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out");
        }
        sha256_hex(value.to_string().as_bytes())
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seed.is_none() {
            return bad("a seed is required (config `seed` or --seed)".into());
        }
        let g = &self.grid;
        if g.sizes.is_empty() || g.gamma.is_empty() || g.alpha.is_empty() {
            return bad("grid lists L, gamma and alpha must be non-empty".into());
        }
        if let Some(&l) = g.sizes.iter().find(|&&l| l < 4 || l % 2 == 1 || l > 24) {
            return bad(format!("L = {l} must be even and within 4..=24"));
        }
        finite("gamma", &g.gamma)?;
        finite("alpha", &g.alpha)?;
        if g.gamma.iter().any(|&x| x < 0.0) {
            return bad("gamma must be non-negative".into());
        }
        match self.model {
            ModelKind::BoseHubbard => {
                if g.g.is_some() {
                    return bad("`g` is an all_to_all_xx parameter".into());
                }
                if !(g.hopping.is_finite() && g.hopping > 0.0) {
                    return bad(format!("J must be positive, got {}", g.hopping));
                }
                if let Some(u) = &g.interaction {
                    if u.is_empty() {
                        return bad("U list is empty".into());
                    }
                    finite("U", u)?;
                }
            }
            ModelKind::AllToAllXx => {
                if g.interaction.is_some() {
                    return bad("`U` is a bose_hubbard parameter".into());
                }
                if let Some(c) = &g.g {
                    if c.is_empty() {
                        return bad("g list is empty".into());
                    }
                    finite("g", c)?;
                }
            }
        }
        let s = &self.spectral;
        if s.dos_bins < 3 || s.moments < 2 || s.probes == 0 {
            return bad("spectral: dos_bins ≥ 3, moments ≥ 2 and probes ≥ 1 required".into());
        }
        if s.half_width.is_some() && s.nearest_count.is_some() {
            return bad("spectral: half_width and nearest_count are mutually exclusive".into());
        }
        if let Some(w) = s.half_width {
            if !(w > 0.0 && w <= 0.5) {
                return bad(format!("spectral.half_width = {w} outside (0, 0.5]"));
            }
        }
        if s.nearest_count == Some(0) {
            return bad("spectral.nearest_count must be positive".into());
        }
        if let Some(e) = s.eps_star {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("spectral.eps_star = {e} outside [0, 1]"));
            }
        }
        if self.page.samples < 1000 {
            return bad(format!("page.samples = {} below 1000", self.page.samples));
        }
        let d = &self.dynamics;
        if !(d.t_min > 0.0 && d.t_max > d.t_min && d.points >= 2) {
            return bad("dynamics: need 0 < t_min < t_max and points ≥ 2".into());
        }
        if d.krylov_dim < 8 || !(d.tolerance > 0.0) {
            return bad("dynamics: krylov_dim ≥ 8 and tolerance > 0 required".into());
        }
        if d.patterns.is_empty() && d.initial_states == 0 {
            return bad("dynamics: initial_states must be positive".into());
        }
        if !(d.half_width > 0.0 && d.half_width <= 0.5) {
            return bad(format!("dynamics.half_width = {} outside (0, 0.5]", d.half_width));
        }
        if d.observables.is_empty() {
            return bad("dynamics.observables is empty".into());
        }
        if let Some(w) = d.smoothing_window {
            if w == 0 || w % 2 == 0 {
                return bad(format!("dynamics.smoothing_window = {w} must be odd"));
            }
        }
        for p in d.patterns.iter().chain(&self.eigenobs.patterns) {
            if !p.chars().all(|c| c == '0' || c == '1') || 2 * p.matches('1').count() != p.len() {
                return bad(format!("pattern {p:?} must be a half-filled 0/1 string"));
            }
            if !g.sizes.contains(&p.len()) {
                return bad(format!("pattern {p:?} matches no L in the grid"));
            }
        }
        let c = &self.collapse;
        if c.grid_points < 50 || c.starts == 0 {
            return bad("collapse: grid_points ≥ 50 and starts ≥ 1 required".into());
        }
        if c.observables.is_empty() || c.ansatz.is_empty() {
            return bad("collapse: observables and ansatz lists must be non-empty".into());
        }
        if let Some(o) = c.search_box {
            check_range("collapse.box.gamma_c", o.gamma_c)?;
            check_range("collapse.box.nu", o.nu)?;
            check_range("collapse.box.b", o.b)?;
            check_range("collapse.box.gamma1", o.gamma1)?;
        }
        let f = &self.fit;
        if !(f.t_min > 0.0) || f.grid_points < 50 {
            return bad("fit: t_min > 0 and grid_points ≥ 50 required".into());
        }
        check_range("fit.gamma_range", f.gamma_range)?;
        check_range("fit.gamma_c", f.gamma_c)?;
        check_range("fit.nu", f.nu)?;
        Ok(())
    }
}

//! Canned configurations named after the published figures.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const TAGS: [&str; 13] =
    ["fig2", "fig3", "fig6", "fig8", "fig9", "fig10", "figS1", "figS2", "figS3", "figS4", "figS5", "figS6", "tableI"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Scale {
    Desk,
    Full,
}

fn range(lo: f64, hi: f64, step: f64) -> String {
    let n = ((hi - lo) / step).round() as usize;
    let vals: Vec<String> = (0..=n).map(|k| format!("{}", ((lo + step * k as f64) * 1e6).round() / 1e6)).collect();
    format!("[{}]", vals.join(", "))
}

fn bh_eigen(seed: u64, desk: bool, ansatz: &str, crossing: &str) -> String {
    let (sizes, gammas, samples, cap, note) = if desk {
        ("[8, 10]", range(1.0, 6.0, 0.5), 10_000, 50_000, "desk: L = 8, 10 instead of 10, 12, 14; collapse parameters drift with the smaller sizes")
    } else {
        ("[10, 12, 14]", range(1.0, 6.0, 0.25), 100_000, 80_000, "full sizes; L = 14 needs about 48 GB for dense diagonalization")
    };
    format!(
        r#"model = "bose_hubbard"
seed = {seed}
description = "{note}"
tasks = ["eigenobs", "pagevalue", "collapse"]
[grid]
L = {sizes}
gamma = {gammas}
U = [4.0]
[spectral]
dense_cap = {cap}
[page]
samples = {samples}
[collapse]
ansatz = {ansatz}
crossing = "{crossing}"
"#
    )
}

fn xx_eigen(seed: u64, desk: bool) -> String {
    let (sizes, gammas, note) = if desk {
        ("[10, 12]", range(0.2, 2.0, 0.2), "desk: L = 10, 12 instead of 12 to 18")
    } else {
        ("[12, 14, 16, 18]", range(0.2, 2.0, 0.1), "full sizes")
    };
    format!(
        r#"model = "all_to_all_xx"
seed = {seed}
description = "{note}"
tasks = ["eigenobs", "pagevalue", "collapse"]
[grid]
L = {sizes}
gamma = {gammas}
g = [0.5]
[spectral]
dense_cap = 50000
[page]
samples = {samples}
[collapse]
ansatz = ["powerlaw"]
"#,
        samples = if desk { 10_000 } else { 100_000 }
    )
}

struct Imbalance<'a> {
    model: &'a str,
    sizes: &'a str,
    gammas: String,
    coupling: &'a str,
    states: usize,
    fit: &'a str,
    note: &'a str,
}

fn imbalance(seed: u64, run: Imbalance) -> String {
    let Imbalance { model, sizes, gammas, coupling, states, fit, note } = run;
    format!(
        r#"model = "{model}"
seed = {seed}
description = "{note}"
tasks = ["dynamics", "fitimbalance"]
[grid]
L = {sizes}
gamma = {gammas}
{coupling}
[dynamics]
initial_states = {states}
observables = ["imbalance"]
smoothing_window = 11
[fit]
gamma_range = {fit}
"#
    )
}

/// `(name, config)` pairs for a figure tag.
pub fn canned(tag: &str, scale: Scale, seed: u64) -> CliResult<Vec<(String, RunConfig)>> {
    let desk = scale == Scale::Desk;
    let texts: Vec<(&str, String)> = match tag {
        "fig2" => {
            let (l, us, gs) = if desk {
                (10, "[1.0, 2.0, 4.0, 6.0, 8.0]".to_string(), range(1.0, 8.0, 1.0))
            } else {
                (12, range(1.0, 10.0, 1.0), range(0.5, 8.0, 0.5))
            };
            vec![(
                "rstat",
                format!(
                    "model = \"bose_hubbard\"\nseed = {seed}\ntasks = [\"rstat\"]\n[grid]\nL = [{l}]\ngamma = {gs}\nU = {us}\n"
                ),
            )]
        }
        "fig3" => vec![("collapse", bh_eigen(seed, desk, "[\"powerlaw\"]", "fixed"))],
        "figS3" => vec![("bkt", bh_eigen(seed, desk, "[\"bkt_equal\", \"bkt_unequal\"]", "linear"))],
        "tableI" => vec![("costs", bh_eigen(seed, desk, "[\"powerlaw\", \"bkt_equal\", \"bkt_unequal\"]", "linear"))],
        "fig6" => {
            let (sizes, states, note) =
                if desk { ("[10]", 5, "desk: L = 10 with 5 initial states") } else { ("[14]", 50, "full size") };
            vec![("imbalance", imbalance(seed, Imbalance { model: "bose_hubbard", sizes, gammas: range(1.0, 8.0, 0.5), coupling: "U = [4.0]", states, fit: "[2.0, 8.0]", note }))]
        }
        "fig8" => {
            let l = if desk { 12 } else { 16 };
            vec![(
                "rstat",
                format!(
                    "model = \"all_to_all_xx\"\nseed = {seed}\ntasks = [\"rstat\"]\n[grid]\nL = [{l}]\ngamma = [0.2]\ng = {}\n",
                    "[0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0]"
                ),
            )]
        }
        "fig9" => vec![("collapse", xx_eigen(seed, desk))],
        "fig10" => {
            let (sizes, states, note) =
                if desk { ("[12]", 5, "desk: L = 12 with 5 initial states") } else { ("[18]", 50, "full size") };
            vec![("imbalance", imbalance(seed, Imbalance { model: "all_to_all_xx", sizes, gammas: range(0.2, 2.0, 0.2), coupling: "g = [0.5]", states, fit: "[0.8, 2.0]", note }))]
        }
        "figS1" => {
            let (lb, lx) = if desk { (10, 14) } else { (14, 18) };
            vec![
                ("bose_hubbard", format!("model = \"bose_hubbard\"\nseed = {seed}\ntasks = [\"dos\"]\n[grid]\nL = [{lb}]\ngamma = {}\n", range(1.0, 7.0, 1.0))),
                ("all_to_all_xx", format!("model = \"all_to_all_xx\"\nseed = {seed}\ntasks = [\"dos\"]\n[grid]\nL = [{lx}]\ngamma = {}\ng = [0.5]\n", range(0.2, 2.0, 0.3))),
            ]
        }
        "figS2" => {
            let (sizes, samples) = if desk { ("[10]", 10_000) } else { ("[8, 10, 12, 14]", 100_000) };
            vec![(
                "page",
                format!("model = \"bose_hubbard\"\nseed = {seed}\ntasks = [\"pagevalue\"]\n[grid]\nL = {sizes}\ngamma = [0.0]\n[page]\nsamples = {samples}\n"),
            )]
        }
        "figS4" => {
            let (l, cdw) = if desk { (10, "1010101010") } else { (14, "10101010101010") };
            vec![(
                "anharmonicity",
                format!(
                    "model = \"bose_hubbard\"\nseed = {seed}\ntasks = [\"dynamics\"]\n[grid]\nL = [{l}]\ngamma = [2.0]\nU = [0.0, 1.0, 4.0, 20.0, 500.0]\n[dynamics]\npatterns = [\"{cdw}\"]\nobservables = [\"entanglement_entropy\", \"participation_entropy\"]\nsmoothing_window = 11\n"
                ),
            )]
        }
        "figS5" => {
            let (l, states) = if desk { (10, 5) } else { (14, 500) };
            vec![(
                "curvature",
                format!(
                    "model = \"bose_hubbard\"\nseed = {seed}\ntasks = [\"dynamics\"]\n[grid]\nL = [{l}]\ngamma = [1.0, 2.0, 3.0, 4.0]\nalpha = [0.0, 2.0]\n[dynamics]\ninitial_states = {states}\nobservables = [\"imbalance\"]\n"
                ),
            )]
        }
        "figS6" => {
            let (l, pattern, cap) = if desk { (10, "1100100101", 50_000) } else { (14, "11001001010011", 80_000) };
            vec![(
                "expansion",
                format!(
                    "model = \"bose_hubbard\"\nseed = {seed}\ntasks = [\"eigenobs\"]\n[grid]\nL = [{l}]\ngamma = [2.0]\nalpha = [0.0, 2.0]\n[spectral]\ndense_cap = {cap}\n[eigenobs]\npatterns = [\"{pattern}\"]\ntop_k = 3\n"
                ),
            )]
        }
        _ => return Err(CliError::config(format!("unknown figure tag {tag:?}; valid tags: {}", TAGS.join(", ")))),
    };
    texts
        .into_iter()
        .map(|(name, text)| {
            let cfg = RunConfig::from_toml(&text)?;
            cfg.validate()?;
            Ok((name.to_string(), cfg))
        })
        .collect()
}

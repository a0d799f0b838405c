//! Fixed-particle-number Fock sectors.
//!
//! States are ordered lexicographically on their occupation tuples with site 0
//! the most significant digit, largest tuple first: for two bosons on two
//! sites the order is `(2,0), (1,1), (0,2)`. Spin-1/2 sectors are the
//! `max_occ = 1` case of the same enumeration.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Occupation-number configuration of an `L`-site chain.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockState(Vec<u8>);

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        FockState(occupations)
    }

    /// Parse a compact digit string such as `"1010"`.
    pub fn parse(digits: &str) -> Result<Self> {
        digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::parameter(format!("invalid occupation digit {c:?} in {digits:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(FockState)
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn particles(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn concat(&self, other: &FockState) -> FockState {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FockState(v)
    }

    pub fn reversed(&self) -> FockState {
        FockState(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&n| n < 10) {
            for n in &self.0 {
                write!(f, "{n}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}⟩")
    }
}

/// All Fock states of `sites` sites holding `particles` particles with at
/// most `max_occ` per site, with a state → ordinal map.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    sites: usize,
    particles: usize,
    max_occ: u8,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

/// Bosonic sector of `sites` sites, `particles` bosons, occupancy cap `max_occ`.
pub fn enumerate_boson_sector(sites: usize, particles: usize, max_occ: u8) -> Result<SectorBasis> {
    if sites < 2 {
        return Err(Error::parameter(format!("boson sector needs at least 2 sites, got {sites}")));
    }
    if max_occ < 1 {
        return Err(Error::parameter("max_occ must be at least 1"));
    }
    if particles > sites * max_occ as usize {
        return Err(Error::parameter(format!(
            "{particles} particles exceed the capacity {} of {sites} sites with max_occ {max_occ}",
            sites * max_occ as usize
        )));
    }
    Ok(SectorBasis::build(sites, particles, max_occ))
}

/// Spin-1/2 sector with `up` up-spins; identical to the hard-core boson sector.
pub fn enumerate_spin_sector(sites: usize, up: usize) -> Result<SectorBasis> {
    if sites == 0 {
        return Err(Error::parameter("spin sector needs at least 1 site"));
    }
    if up > sites {
        return Err(Error::parameter(format!("{up} up-spins exceed {sites} sites")));
    }
    Ok(SectorBasis::build(sites, up, 1))
}

/// Number of compositions of `particles` into `sites` parts each ≤ `max_occ`.
pub fn sector_dimension(sites: usize, particles: usize, max_occ: u8) -> u128 {
    // ways[n] = number of ways to place n particles on the sites seen so far
    let mut ways = vec![0u128; particles + 1];
    ways[0] = 1;
    for _ in 0..sites {
        let mut next = vec![0u128; particles + 1];
        for (n, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=(max_occ as usize).min(particles - n) {
                next[n + k] += w;
            }
        }
        ways = next;
    }
    ways[particles]
}

impl SectorBasis {
    fn build(sites: usize, particles: usize, max_occ: u8) -> Self {
        let mut states = Vec::new();
        let mut current = vec![0u8; sites];
        fill(&mut current, 0, particles, max_occ, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        SectorBasis { sites, particles, max_occ, states, index }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn max_occ(&self) -> u8 {
        self.max_occ
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &FockState {
        &self.states[index]
    }

    /// Ordinal of `state` in the sector.
    pub fn index_of(&self, state: &FockState) -> Result<usize> {
        self.index
            .get(state)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("{state:?} is not in the sector (L={}, N={}, max_occ={})", self.sites, self.particles, self.max_occ)))
    }

    /// Ordinal lookup on a raw occupation slice.
    pub fn find(&self, occupations: &[u8]) -> Option<usize> {
        self.index.get(occupations).copied()
    }
}

impl std::borrow::Borrow<[u8]> for FockState {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

fn fill(current: &mut [u8], site: usize, remaining: usize, cap: u8, out: &mut Vec<FockState>) {
    let sites = current.len();
    if site == sites - 1 {
        if remaining <= cap as usize {
            current[site] = remaining as u8;
            out.push(FockState(current.to_vec()));
        }
        return;
    }
    let rest_capacity = (sites - site - 1) * cap as usize;
    let hi = remaining.min(cap as usize);
    let lo = remaining.saturating_sub(rest_capacity);
    if lo > hi {
        return;
    }
    for n in (lo..=hi).rev() {
        current[site] = n as u8;
        fill(current, site + 1, remaining - n, cap, out);
    }
}

/// Split a state into the fragments left and right of `cut`.
pub fn bipartition_split(state: &FockState, cut: usize) -> Result<(FockState, FockState)> {
    if cut == 0 || cut >= state.sites() {
        return Err(Error::parameter(format!(
            "cut {cut} outside 1..{} for a {}-site state",
            state.sites(),
            state.sites()
        )));
    }
    let (l, r) = state.0.split_at(cut);
    Ok((FockState(l.to_vec()), FockState(r.to_vec())))
}

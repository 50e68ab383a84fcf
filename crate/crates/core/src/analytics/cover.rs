use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{DwtError, Result};
use crate::weightfn::{Psi, WeightSpec, DEFAULT_PSI_CAP};

/// Window length used by the accumulation test at a depth.
pub trait WindowFn {
    fn window(&self, r: usize) -> Result<u64>;
}

/// `Ψ(r)` from the weight function; depth 0 uses `Ψ(1)`.
#[derive(Debug, Clone)]
pub struct PsiWindow<'a> {
    pub spec: &'a WeightSpec,
    pub cap: u64,
}

impl<'a> PsiWindow<'a> {
    pub fn new(spec: &'a WeightSpec) -> Self {
        Self { spec, cap: DEFAULT_PSI_CAP }
    }
}

impl WindowFn for PsiWindow<'_> {
    fn window(&self, r: usize) -> Result<u64> {
        match self.spec.psi(r.max(1) as u64, self.cap)? {
            Psi::Finite(w) => Ok(w),
            Psi::Unbounded => Err(DwtError::UnboundedWindow { depth: r }),
        }
    }
}

/// The same window at every depth.
#[derive(Debug, Clone, Copy)]
pub struct ConstantWindow(pub u64);

impl WindowFn for ConstantWindow {
    fn window(&self, _r: usize) -> Result<u64> {
        Ok(self.0)
    }
}

/// Windows looked up at most once per depth.
struct WindowCache<'a> {
    inner: &'a dyn WindowFn,
    values: Vec<Option<u64>>,
}

impl<'a> WindowCache<'a> {
    fn new(inner: &'a dyn WindowFn, depths: usize) -> Self {
        Self { inner, values: vec![None; depths] }
    }

    fn get(&mut self, r: usize) -> Result<u64> {
        if let Some(w) = self.values[r] {
            return Ok(w);
        }
        let w = self.inner.window(r)?;
        self.values[r] = Some(w);
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulationEvent {
    pub r: usize,
    /// `N_r`.
    pub s: u64,
    pub window: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverMap {
    /// Covering depth for every `r = 0..=d`.
    pub assignment: Vec<usize>,
    /// Depths assigned to each covering depth.
    pub covered: BTreeMap<usize, Vec<usize>>,
    pub m: usize,
    /// Vertices at depths whose covering depth is at most `m`.
    pub cover_mass: u64,
    /// Largest window seen at any visited depth.
    pub max_window: u64,
}

impl CoverMap {
    /// CSV with header `r,s,r'`, one row per depth.
    pub fn write_csv<W: Write>(&self, profile: &[u64], mut out: W) -> Result<()> {
        writeln!(out, "r,s,r'")?;
        for (r, &target) in self.assignment.iter().enumerate() {
            writeln!(out, "{r},{},{target}", profile[r])?;
        }
        Ok(())
    }
}

/// CSV with header `r,s,r'`; every accumulation covers itself.
pub fn write_accumulations_csv<W: Write>(events: &[AccumulationEvent], mut out: W) -> Result<()> {
    writeln!(out, "r,s,r'")?;
    for e in events {
        writeln!(out, "{},{},{}", e.r, e.s, e.r)?;
    }
    Ok(())
}

fn check_profile(profile: &[u64]) -> Result<()> {
    if profile.is_empty() || profile.contains(&0) {
        return Err(DwtError::Domain(
            "profile must be non-empty with every depth up to the maximum occupied".into(),
        ));
    }
    Ok(())
}

fn count(profile: &[u64], r: usize) -> u64 {
    profile.get(r).copied().unwrap_or(0)
}

/// Whether `r` is an accumulation of size exactly `N_r`: `N_{r-1} ≤ N_r`
/// and `N_{r+i} ≤ N_r` for `1 ≤ i ≤ window`. Missing depths count 0.
pub fn is_accumulation(profile: &[u64], r: usize, window: u64) -> bool {
    let s = count(profile, r);
    if s == 0 || (r > 0 && count(profile, r - 1) > s) {
        return false;
    }
    let last = r.saturating_add(window as usize).min(profile.len().saturating_sub(1));
    profile.get(r + 1..=last).is_none_or(|w| w.iter().all(|&c| c <= s))
}

/// Every accumulation at depths `1..=d`.
pub fn find_accumulations(profile: &[u64], windows: &dyn WindowFn) -> Result<Vec<AccumulationEvent>> {
    check_profile(profile)?;
    let mut out = Vec::new();
    for r in 1..profile.len() {
        let window = windows.window(r)?;
        if is_accumulation(profile, r, window) {
            out.push(AccumulationEvent { r, s: profile[r], window });
        }
    }
    Ok(out)
}

fn walk(profile: &[u64], cache: &mut WindowCache, start: usize) -> Result<usize> {
    let max_count = profile.iter().copied().max().unwrap_or(0);
    let budget = (profile.len() as u64).saturating_mul(max_count).max(1);
    let mut r = start;
    let mut steps = 0u64;
    loop {
        let window = cache.get(r)?;
        if is_accumulation(profile, r, window) {
            return Ok(r);
        }
        // The smallest maximiser of N over {r-1, r+1, ..., r+window}.
        let mut best = None;
        let candidates =
            (r.checked_sub(1)).into_iter().chain(r + 1..=r.saturating_add(window as usize));
        for c in candidates {
            let n = count(profile, c);
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((c, n));
            }
        }
        r = best.expect("window is non-empty").0;
        steps += 1;
        if steps > budget {
            return Err(DwtError::Internal(format!(
                "covering walk from depth {start} exceeded {budget} steps"
            )));
        }
    }
}

/// Run the covering walker from depth `r` until it stands on an
/// accumulation.
pub fn covering_walk(profile: &[u64], windows: &dyn WindowFn, r: usize) -> Result<usize> {
    check_profile(profile)?;
    if r >= profile.len() {
        return Err(DwtError::Domain(format!("start depth {r} exceeds the maximum depth")));
    }
    walk(profile, &mut WindowCache::new(windows, profile.len() + 1), r)
}

/// Walk from every depth and total the vertices covered within `[0, m]`.
pub fn cover_map(profile: &[u64], windows: &dyn WindowFn, m: usize) -> Result<CoverMap> {
    check_profile(profile)?;
    if m >= profile.len() {
        return Err(DwtError::Domain(format!("prefix bound {m} exceeds the maximum depth")));
    }
    let mut cache = WindowCache::new(windows, profile.len() + 1);
    let mut assignment = Vec::with_capacity(profile.len());
    let mut covered: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut cover_mass = 0;
    for r in 0..profile.len() {
        let target = walk(profile, &mut cache, r)?;
        assignment.push(target);
        covered.entry(target).or_default().push(r);
        if target <= m {
            cover_mass += profile[r];
        }
    }
    let max_window = cache.values.iter().flatten().copied().max().unwrap_or(0);
    Ok(CoverMap { assignment, covered, m, cover_mass, max_window })
}

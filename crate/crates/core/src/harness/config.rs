use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{DwtError, Result};
use crate::weightfn::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// `d(T_n) / ln n` for one spec at one or more sizes.
    DepthLaw,
    /// Mean depth along a doubling size grid and the fitted exponent, per
    /// grid parameter.
    BetaGrid,
    /// `d(T_n) / n` per grid parameter.
    NuGrid,
    /// `(n - d(T_n)) / I_n` for one spec.
    SuperExpRatio,
    /// `n - d(T_n)` at each checkpoint, and whether it stayed constant.
    SuperExpStabilize,
    /// One of the named verification suites.
    VerifySuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::DepthLaw => "depth_law",
            Self::BetaGrid => "beta_grid",
            Self::NuGrid => "nu_grid",
            Self::SuperExpRatio => "super_exp_ratio",
            Self::SuperExpStabilize => "super_exp_stabilize",
            Self::VerifySuite => "verify_suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Depth,
    DOverLnN,
    DOverN,
    Z,
    ZOverIN,
    /// 1 when `n - d` is the same at every checkpoint of a sample.
    ZStable,
    BetaHat,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Self::Depth => "depth",
            Self::DOverLnN => "d_over_ln_n",
            Self::DOverN => "d_over_n",
            Self::Z => "z",
            Self::ZOverIN => "z_over_i_n",
            Self::ZStable => "z_stable",
            Self::BetaHat => "beta_hat",
        }
    }
}

/// A one-parameter family of weight specs, e.g. `exponential` over `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub family: String,
    pub param: String,
    /// Explicit values; otherwise `start, start + step, ..., stop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Further fixed params of the family.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed: BTreeMap<String, f64>,
}

impl ParamGrid {
    pub fn range(family: &str, param: &str, start: f64, stop: f64, step: f64) -> Self {
        Self {
            family: family.into(),
            param: param.into(),
            values: None,
            start: Some(start),
            stop: Some(stop),
            step: Some(step),
            fixed: BTreeMap::new(),
        }
    }

    /// Grid values; ranged values are rounded to 9 decimals so that
    /// `0.1 + 2 · 0.1` prints as `0.3`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(DwtError::Config("grid values are empty".into()));
            }
            return Ok(v.clone());
        }
        let (Some(start), Some(stop), Some(step)) = (self.start, self.stop, self.step) else {
            return Err(DwtError::Config("grid needs values or start/stop/step".into()));
        };
        if !(step > 0.0) || !(stop >= start) {
            return Err(DwtError::Config(format!("bad grid range {start}..{stop} step {step}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
    }

    pub fn spec_at(&self, value: f64) -> Result<WeightSpec> {
        let mut params = self.fixed.clone();
        params.insert(self.param.clone(), value);
        let raw = serde_json::json!({ "family": self.family, "params": params });
        serde_json::from_value(raw).map_err(|e| DwtError::Config(e.to_string()))
    }
}

/// A declarative experiment. Two runs of an equal config produce identical
/// CSV output regardless of worker count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Output file stem; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<ParamGrid>,
    /// Final tree size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Checkpoint sizes within each run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker count; not part of the result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Overrides the kind's default statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Vec<Statistic>>,
    /// Suite name for `verify_suite`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    /// Store per-sample values in the manifest.
    #[serde(default)]
    pub keep_values: bool,
}

fn default_samples() -> u64 {
    50
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            name: None,
            spec: None,
            grid: None,
            n: None,
            n_grid: None,
            samples: default_samples(),
            seed: 0,
            threads: None,
            out_dir: None,
            statistics: None,
            suite: None,
            keep_values: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| DwtError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.name())
    }

    pub fn statistics(&self) -> Vec<Statistic> {
        if let Some(s) = &self.statistics {
            return s.clone();
        }
        match self.kind {
            ExperimentKind::DepthLaw => vec![Statistic::DOverLnN],
            ExperimentKind::BetaGrid => vec![Statistic::Depth, Statistic::BetaHat],
            ExperimentKind::NuGrid => vec![Statistic::DOverN],
            ExperimentKind::SuperExpRatio => vec![Statistic::ZOverIN],
            ExperimentKind::SuperExpStabilize => vec![Statistic::Z, Statistic::ZStable],
            ExperimentKind::VerifySuite => Vec::new(),
        }
    }

    /// Sorted, de-duplicated sizes at which statistics are recorded. The
    /// beta grid defaults to `n/64, n/32, ..., n`.
    pub fn checkpoints(&self) -> Result<Vec<u64>> {
        let mut sizes = match (&self.n_grid, self.n) {
            (Some(g), n) => {
                let mut g = g.clone();
                g.extend(n);
                g
            }
            (None, Some(n)) if self.kind == ExperimentKind::BetaGrid => {
                (0..=6).rev().map(|s| (n >> s).max(1)).collect()
            }
            (None, Some(n)) => vec![n],
            (None, None) => return Err(DwtError::Config(format!("{} needs n or n_grid", self.kind.name()))),
        };
        sizes.sort_unstable();
        sizes.dedup();
        if sizes[0] == 0 {
            return Err(DwtError::Config("tree sizes must be >= 1".into()));
        }
        Ok(sizes)
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(DwtError::Config(format!("{} needs {what}", self.kind.name())))
            }
        };
        match self.kind {
            DepthLaw | SuperExpRatio | SuperExpStabilize => need(self.spec.is_some(), "a spec")?,
            BetaGrid | NuGrid => {
                need(self.grid.is_some(), "a grid")?;
                self.grid.as_ref().unwrap().values()?;
            }
            VerifySuite => {
                need(self.suite.is_some(), "a suite")?;
                return super::verify::suite_names()
                    .contains(&self.suite.as_deref().unwrap())
                    .then_some(())
                    .ok_or_else(|| DwtError::Config(format!("unknown suite {}", self.suite.as_deref().unwrap())));
            }
        }
        need(self.samples >= 1, "samples >= 1")?;
        let sizes = self.checkpoints()?;
        if self.kind == BetaGrid
            && self.statistics().contains(&Statistic::BetaHat)
            && sizes.len() < 3
        {
            return Err(DwtError::Config("beta_hat needs at least 3 checkpoint sizes".into()));
        }
        if self.kind == SuperExpStabilize && sizes.len() < 2 {
            return Err(DwtError::Config("super_exp_stabilize needs at least 2 checkpoint sizes".into()));
        }
        if let Some(grid) = &self.grid {
            for v in grid.values()? {
                grid.spec_at(v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values() {
        let g = ParamGrid::range("exponential", "c", 1.1, 15.0, 0.1);
        let v = g.values().unwrap();
        assert_eq!(v.len(), 140);
        assert_eq!(v[0], 1.1);
        assert_eq!(v[2], 1.3);
        assert_eq!(*v.last().unwrap(), 15.0);
        let g = ParamGrid::range("subexp_quotient", "c", 0.1, 2.5, 0.1);
        assert_eq!(g.values().unwrap().len(), 25);
        assert_eq!(g.spec_at(0.3).unwrap(), WeightSpec::subexp_quotient(0.3).unwrap());
    }

    #[test]
    fn parse_and_validate() {
        let c = ExperimentConfig::from_json(
            r#"{"kind": "nu_grid", "grid": {"family": "exponential", "param": "c", "start": 1.1, "stop": 1.5, "step": 0.1}, "n": 1000, "samples": 4, "seed": 9}"#,
        )
        .unwrap();
        assert_eq!(c.name(), "nu_grid");
        assert_eq!(c.checkpoints().unwrap(), vec![1000]);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);

        for bad in [
            r#"{"kind": "depth_law", "n": 10}"#,
            r#"{"kind": "depth_law", "spec": {"family": "nope"}, "n": 10}"#,
            r#"{"kind": "depth_law", "spec": {"family": "constant"}}"#,
            r#"{"kind": "depth_law", "spec": {"family": "constant"}, "n": 10, "bogus": 1}"#,
            r#"{"kind": "verify_suite", "suite": "nope"}"#,
            r#"{"kind": "super_exp_stabilize", "spec": {"family": "constant"}, "n": 10}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(DwtError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn beta_checkpoints_double() {
        let mut c = ExperimentConfig::new(ExperimentKind::BetaGrid);
        c.n = Some(20_000);
        assert_eq!(c.checkpoints().unwrap(), vec![312, 625, 1250, 2500, 5000, 10_000, 20_000]);
    }
}

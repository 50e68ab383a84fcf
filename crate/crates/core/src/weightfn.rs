//! Weight-function families and the scalars derived from them.
//!
//! Every family is evaluated as a natural log so that super-exponential
//! weights such as `(k!)^a` never overflow. A [`WeightSpec`] is a family
//! together with a positive multiplicative `scale`; the scale never changes
//! the law of the discrete tree, so samplers and the ratio-based quantities
//! (`I_n`, `Ψ`, regime flags) work with [`WeightSpec::shape_log_weight`]
//! and only holding-time rates and geometric means see the scale.
//!
//! # JSON form
//!
//! ```json
//! {"family": "exponential", "params": {"c": 2.0}}
//! {"family": "factorial_power", "params": {"a": 1.0, "scale": 4.0}}
//! {"family": "table", "params": {"limit": 1.0}, "values": [2.0, 0.5]}
//! {"family": "custom", "values": [1.0, 3.0], "extrapolation": "geometric"}
//! ```
//!
//! | family            | params       | f(k)                          |
//! |-------------------|--------------|-------------------------------|
//! | `constant`        | `value` (1)  | value                         |
//! | `table`           | `limit`      | `values[k]`, then `limit`     |
//! | `periodic`        | (none)       | `values[k mod len]`           |
//! | `logarithmic`     | (none)       | `ln(k + 2)`                   |
//! | `polynomial`      | `alpha`      | `(k + 1)^alpha`               |
//! | `stretched_exp`   | `beta`       | `exp(k^beta)`                 |
//! | `exponential`     | `c`          | `c^k`                         |
//! | `subexp_quotient` | `c`          | `exp(c k / ln(k + 2))`        |
//! | `superexp`        | `a`          | `exp(a k ln k)`, 1 at k ≤ 1   |
//! | `factorial_power` | `a`          | `(k!)^a`                      |
//! | `custom`          | (none)       | `values[k]`, then extrapolated|
//!
//! Every family also accepts an optional `scale` param (default 1).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DwtError, Result};
use crate::numeric::ln_factorial;

/// How a `custom` table continues past its last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    HoldLast,
    /// Continue with the ratio of the last two entries.
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Constant { value: f64 },
    Table { values: Vec<f64>, limit: f64 },
    Periodic { values: Vec<f64> },
    Logarithmic,
    Polynomial { alpha: f64 },
    StretchedExp { beta: f64 },
    Exponential { c: f64 },
    SubExpQuotient { c: f64 },
    SuperExp { a: f64 },
    FactorialPower { a: f64 },
    Custom { values: Vec<f64>, rule: Extrapolation },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Table { .. } => "table",
            Family::Periodic { .. } => "periodic",
            Family::Logarithmic => "logarithmic",
            Family::Polynomial { .. } => "polynomial",
            Family::StretchedExp { .. } => "stretched_exp",
            Family::Exponential { .. } => "exponential",
            Family::SubExpQuotient { .. } => "subexp_quotient",
            Family::SuperExp { .. } => "superexp",
            Family::FactorialPower { .. } => "factorial_power",
            Family::Custom { .. } => "custom",
        }
    }

    fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(DwtError::Config(format!("{name} must be finite and > 0, got {v}")))
            }
        }
        fn table(values: &[f64]) -> Result<()> {
            if values.is_empty() {
                return Err(DwtError::Config("weight table must not be empty".into()));
            }
            values.iter().try_for_each(|&v| positive("table entry", v))
        }
        match self {
            Family::Constant { value } => positive("value", *value),
            Family::Table { values, limit } => {
                table(values)?;
                positive("limit", *limit)
            }
            Family::Periodic { values } => table(values),
            Family::Logarithmic => Ok(()),
            Family::Polynomial { alpha } => {
                if alpha.is_finite() && *alpha >= 0.0 {
                    Ok(())
                } else {
                    Err(DwtError::Config(format!("alpha must be >= 0, got {alpha}")))
                }
            }
            Family::StretchedExp { beta } => {
                if *beta > 0.0 && *beta < 1.0 {
                    Ok(())
                } else {
                    Err(DwtError::Config(format!("beta must lie in (0, 1), got {beta}")))
                }
            }
            Family::Exponential { c } | Family::SubExpQuotient { c } => positive("c", *c),
            Family::SuperExp { a } | Family::FactorialPower { a } => positive("a", *a),
            Family::Custom { values, rule } => {
                table(values)?;
                if *rule == Extrapolation::Geometric && values.len() < 2 {
                    return Err(DwtError::Config(
                        "geometric extrapolation needs at least two entries".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn log_weight(&self, k: u64) -> f64 {
        let x = k as f64;
        match self {
            Family::Constant { value } => value.ln(),
            Family::Table { values, limit } => match usize::try_from(k).ok().and_then(|i| values.get(i)) {
                Some(v) => v.ln(),
                None => limit.ln(),
            },
            Family::Periodic { values } => values[(k % values.len() as u64) as usize].ln(),
            Family::Logarithmic => (x + 2.0).ln().ln(),
            Family::Polynomial { alpha } => alpha * (x + 1.0).ln(),
            Family::StretchedExp { beta } => x.powf(*beta),
            Family::Exponential { c } => x * c.ln(),
            Family::SubExpQuotient { c } => c * x / (x + 2.0).ln(),
            Family::SuperExp { a } => {
                if k <= 1 {
                    0.0
                } else {
                    a * x * x.ln()
                }
            }
            Family::FactorialPower { a } => a * ln_factorial(k),
            Family::Custom { values, rule } => {
                let len = values.len() as u64;
                if k < len {
                    return values[k as usize].ln();
                }
                let last = values[values.len() - 1].ln();
                match rule {
                    Extrapolation::HoldLast => last,
                    Extrapolation::Geometric => {
                        let step = last - values[values.len() - 2].ln();
                        last + (k - len + 1) as f64 * step
                    }
                }
            }
        }
    }
}

/// A weight function `f(k) = scale · family(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct WeightSpec {
    family: Family,
    scale: f64,
}

impl WeightSpec {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Self { family, scale: 1.0 })
    }

    /// Multiply the weight function by `scale`.
    pub fn scaled(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DwtError::Config(format!("scale must be finite and > 0, got {scale}")));
        }
        self.scale *= scale;
        Ok(self)
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Family::Constant { value })
    }
    pub fn logarithmic() -> Self {
        Self { family: Family::Logarithmic, scale: 1.0 }
    }
    pub fn polynomial(alpha: f64) -> Result<Self> {
        Self::new(Family::Polynomial { alpha })
    }
    pub fn stretched_exp(beta: f64) -> Result<Self> {
        Self::new(Family::StretchedExp { beta })
    }
    pub fn exponential(c: f64) -> Result<Self> {
        Self::new(Family::Exponential { c })
    }
    pub fn subexp_quotient(c: f64) -> Result<Self> {
        Self::new(Family::SubExpQuotient { c })
    }
    pub fn superexp(a: f64) -> Result<Self> {
        Self::new(Family::SuperExp { a })
    }
    pub fn factorial_power(a: f64) -> Result<Self> {
        Self::new(Family::FactorialPower { a })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `ln f(k)`.
    pub fn log_weight(&self, k: u64) -> f64 {
        self.family.log_weight(k) + self.scale.ln()
    }

    /// `ln f(k) - ln scale`: the part of the log weight that determines the
    /// attachment law.
    pub fn shape_log_weight(&self, k: u64) -> f64 {
        self.family.log_weight(k)
    }

    /// `f(k)`; may overflow to infinity for fast-growing families.
    pub fn weight(&self, k: u64) -> f64 {
        self.log_weight(k).exp()
    }

    /// `ln(f(i) / f(j))`, scale-free.
    pub fn log_ratio(&self, i: u64, j: u64) -> f64 {
        self.family.log_weight(i) - self.family.log_weight(j)
    }

    /// `ℓ_k = (f(0) ⋯ f(k-1))^{1/k}`.
    pub fn geometric_mean_weight(&self, k: u64) -> Result<f64> {
        Ok(self.log_geometric_mean_weight(k)?.exp())
    }

    pub fn log_geometric_mean_weight(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(DwtError::Domain("geometric mean weight needs k >= 1".into()));
        }
        let sum: f64 = (0..k).map(|j| self.log_weight(j)).sum();
        Ok(sum / k as f64)
    }

    /// `I_n = Σ_{j=0}^{n} f(j)/f(j+1)`, summed left to right so that
    /// `I_n = I_{n-1} + f(n)/f(n+1)` holds bit for bit.
    pub fn tail_ratio_sum(&self, n: u64) -> f64 {
        let mut sum = 0.0;
        let mut prev = self.shape_log_weight(0);
        for j in 0..=n {
            let next = self.shape_log_weight(j + 1);
            sum += (prev - next).exp();
            prev = next;
        }
        sum
    }

    /// `Ψ(k)`: the smallest `ℓ ≤ cap` with
    /// `∏_{j=1}^{ℓ} f(k+j-1) / ((2 f(k-1))^ℓ (ℓ+1)!) ≥ 8`.
    pub fn psi(&self, k: u64, cap: u64) -> Result<Psi> {
        if k == 0 {
            return Err(DwtError::Domain("Psi is defined for k >= 1".into()));
        }
        if cap == 0 {
            return Err(DwtError::Domain("Psi cap must be >= 1".into()));
        }
        let threshold = 8f64.ln();
        let base = self.shape_log_weight(k - 1);
        let ln2 = 2f64.ln();
        let mut log_lhs = 0.0;
        let mut log_fact = 0.0; // ln((ℓ+1)!)
        for ell in 1..=cap {
            log_lhs += self.shape_log_weight(k + ell - 1) - base - ln2;
            log_fact += ((ell + 1) as f64).ln();
            if log_lhs - log_fact >= threshold {
                return Ok(Psi::Finite(ell));
            }
        }
        Ok(Psi::Unbounded)
    }

    /// Numerical check of the growth regime at a finite horizon.
    pub fn classify_regime(&self, horizon: u64, tol: f64) -> Result<RegimeReport> {
        if horizon < 10 {
            return Err(DwtError::Domain("regime horizon must be >= 10".into()));
        }
        let ratio = |k: u64| self.log_ratio(k + 1, k).exp();

        let last_ratio = ratio(horizon);
        let eg_max_deviation = (horizon / 2..=horizon)
            .map(|k| (ratio(k) - last_ratio).abs())
            .fold(0.0, f64::max);
        let eg_converged = last_ratio.is_finite() && eg_max_deviation <= tol;

        let monotone = (0..horizon).all(|k| self.log_ratio(k + 1, k) >= 0.0);
        let root = (horizon as f64).sqrt().floor() as u64;
        let divergent = self.log_ratio(horizon, root).exp() > 1.0 + tol;
        let wsv_residuals = self.wsv_residuals(horizon);
        let wsv = monotone
            && divergent
            && wsv_residuals.iter().all(|r| r.is_finite() && r.abs() <= tol);

        Ok(RegimeReport {
            eg_limit: eg_converged.then_some(last_ratio),
            eg_last_ratio: last_ratio,
            eg_max_deviation,
            eg_converged,
            wsv,
            wsv_monotone: monotone,
            wsv_divergent: divergent,
            wsv_residuals,
            d_holds: last_ratio > 1.0 / tol,
            d_last_ratio: last_ratio,
            horizon,
            tolerance: tol,
        })
    }

    /// `f(k/f(k))/f(k) - 1` and `f(k f(k))/f(k) - 1`, with `f` extended to
    /// the reals by linear interpolation. Evaluated on the unscaled family so
    /// that the report does not depend on `scale`.
    pub fn wsv_residuals(&self, k: u64) -> [f64; 2] {
        let fk = self.shape_log_weight(k).exp();
        let x = k as f64;
        [
            self.interpolated_ratio(x / fk, k) - 1.0,
            self.interpolated_ratio(x * fk, k) - 1.0,
        ]
    }

    /// `f(x)/f(k)` with linear interpolation between integer points.
    fn interpolated_ratio(&self, x: f64, k: u64) -> f64 {
        if !(0.0..9.0e18).contains(&x) {
            return f64::INFINITY;
        }
        let lo = x.floor() as u64;
        let t = x - lo as f64;
        let a = self.log_ratio(lo, k).exp();
        if t == 0.0 {
            return a;
        }
        let b = self.log_ratio(lo + 1, k).exp();
        a + t * (b - a)
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let raw = RawSpec::from(self.clone());
        write!(f, "{}", raw.family)?;
        for (k, v) in &raw.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Default search cap for [`WeightSpec::psi`].
pub const DEFAULT_PSI_CAP: u64 = 10_000;

/// Result of [`WeightSpec::psi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Psi {
    Finite(u64),
    Unbounded,
}

impl Psi {
    pub fn finite(self) -> Option<u64> {
        match self {
            Psi::Finite(v) => Some(v),
            Psi::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// Estimated `lim f(k+1)/f(k)`, present when the ratios settled.
    pub eg_limit: Option<f64>,
    pub eg_last_ratio: f64,
    pub eg_max_deviation: f64,
    pub eg_converged: bool,
    pub wsv: bool,
    pub wsv_monotone: bool,
    pub wsv_divergent: bool,
    pub wsv_residuals: [f64; 2],
    pub d_holds: bool,
    pub d_last_ratio: f64,
    pub horizon: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpec {
    family: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extrapolation: Option<String>,
}

impl TryFrom<RawSpec> for WeightSpec {
    type Error = DwtError;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let mut params = raw.params;
        let scale = params.remove("scale").unwrap_or(1.0);
        let mut take = |name: &str| {
            params
                .remove(name)
                .ok_or_else(|| DwtError::Config(format!("family {} needs param {name}", raw.family)))
        };
        let values = || {
            raw.values
                .clone()
                .ok_or_else(|| DwtError::Config(format!("family {} needs values", raw.family)))
        };
        let family = match raw.family.as_str() {
            "constant" => Family::Constant { value: take("value").unwrap_or(1.0) },
            "table" => Family::Table { values: values()?, limit: take("limit")? },
            "periodic" => Family::Periodic { values: values()? },
            "logarithmic" => Family::Logarithmic,
            "polynomial" => Family::Polynomial { alpha: take("alpha")? },
            "stretched_exp" => Family::StretchedExp { beta: take("beta")? },
            "exponential" => Family::Exponential { c: take("c")? },
            "subexp_quotient" => Family::SubExpQuotient { c: take("c")? },
            "superexp" => Family::SuperExp { a: take("a")? },
            "factorial_power" => Family::FactorialPower { a: take("a")? },
            "custom" => {
                let rule = match raw.extrapolation.as_deref() {
                    None | Some("hold_last") => Extrapolation::HoldLast,
                    Some("geometric") => Extrapolation::Geometric,
                    Some(other) => {
                        return Err(DwtError::Config(format!("unknown extrapolation rule {other}")))
                    }
                };
                Family::Custom { values: values()?, rule }
            }
            other => return Err(DwtError::Config(format!("unknown weight family {other}"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(DwtError::Config(format!(
                "unexpected param {extra} for family {}",
                raw.family
            )));
        }
        WeightSpec::new(family)?.scaled(scale)
    }
}

impl From<WeightSpec> for RawSpec {
    fn from(spec: WeightSpec) -> Self {
        let mut params = BTreeMap::new();
        let mut values = None;
        let mut extrapolation = None;
        match &spec.family {
            Family::Constant { value } => {
                params.insert("value".into(), *value);
            }
            Family::Table { values: v, limit } => {
                values = Some(v.clone());
                params.insert("limit".into(), *limit);
            }
            Family::Periodic { values: v } => values = Some(v.clone()),
            Family::Logarithmic => {}
            Family::Polynomial { alpha } => {
                params.insert("alpha".into(), *alpha);
            }
            Family::StretchedExp { beta } => {
                params.insert("beta".into(), *beta);
            }
            Family::Exponential { c } | Family::SubExpQuotient { c } => {
                params.insert("c".into(), *c);
            }
            Family::SuperExp { a } | Family::FactorialPower { a } => {
                params.insert("a".into(), *a);
            }
            Family::Custom { values: v, rule } => {
                values = Some(v.clone());
                extrapolation = Some(
                    match rule {
                        Extrapolation::HoldLast => "hold_last",
                        Extrapolation::Geometric => "geometric",
                    }
                    .to_string(),
                );
            }
        }
        if spec.scale != 1.0 {
            params.insert("scale".into(), spec.scale);
        }
        RawSpec { family: spec.family.name().to_string(), params, values, extrapolation }
    }
}

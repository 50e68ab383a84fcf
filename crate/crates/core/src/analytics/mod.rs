//! Closed-form expectations, accumulation detection, the covering walk and
//! exact moments of the ladder tails.

mod cover;
mod moments;

pub use cover::{
    covering_walk, cover_map, find_accumulations, is_accumulation, write_accumulations_csv,
    AccumulationEvent, ConstantWindow, CoverMap, PsiWindow, WindowFn,
};
pub use moments::{
    a_value, a_value_bounded, moment_bound_check, moment_g, BoundCheckReport, BoundCheckRequest,
    PairCheck, ProductCheck,
};

use crate::error::{DwtError, Result};
use crate::numeric::ln_factorial;
use crate::weightfn::WeightSpec;

/// `E[N_k(t)] = (t ℓ_k)^k / k!` in the branching embedding.
pub fn expected_level_count(spec: &WeightSpec, k: u64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(DwtError::Domain(format!("time must be >= 0, got {t}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let log_l = spec.log_geometric_mean_weight(k)?;
    Ok((k as f64 * (t.ln() + log_l) - ln_factorial(k)).exp())
}

/// `P(τ_{1,k} ≤ t) ≤ (t ℓ_k)^k / k! ≤ (e t ℓ_k / k)^k`, returned as
/// `(exact, loose)`.
pub fn markov_depth_bound(spec: &WeightSpec, k: u64, t: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(DwtError::Domain("the depth bound needs k >= 1".into()));
    }
    if !(t >= 0.0) {
        return Err(DwtError::Domain(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let kf = k as f64;
    let log_tl = t.ln() + spec.log_geometric_mean_weight(k)?;
    let exact = (kf * log_tl - ln_factorial(k)).exp();
    let loose = (kf * (1.0 + log_tl - kf.ln())).exp();
    Ok((exact, loose))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_count_examples() {
        for spec in [WeightSpec::constant(1.0).unwrap(), WeightSpec::superexp(2.0).unwrap()] {
            assert_eq!(expected_level_count(&spec, 0, 7.3).unwrap(), 1.0);
        }
        let one = WeightSpec::constant(1.0).unwrap();
        assert!((expected_level_count(&one, 2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let exp2 = WeightSpec::exponential(2.0).unwrap();
        assert!((expected_level_count(&exp2, 2, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let lin = WeightSpec::polynomial(1.0).unwrap();
        for k in 1..=10 {
            assert!((expected_level_count(&lin, k, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(expected_level_count(&one, 3, 0.0).unwrap(), 0.0);
        assert!(expected_level_count(&one, 3, -1.0).is_err());
    }

    #[test]
    fn markov_bound_examples() {
        let one = WeightSpec::constant(1.0).unwrap();
        let (exact, loose) = markov_depth_bound(&one, 10, 1.0).unwrap();
        assert!((exact - 1.0 / 3_628_800.0).abs() < 1e-12 * exact);
        let direct = (std::f64::consts::E / 10.0).powi(10);
        assert!((loose - direct).abs() < 1e-12 * direct);
        assert!(exact <= loose);
        let exp2 = WeightSpec::exponential(2.0).unwrap();
        assert_eq!(markov_depth_bound(&exp2, 1, 0.0).unwrap(), (0.0, 0.0));
        assert!(markov_depth_bound(&exp2, 0, 1.0).is_err());
        for k in 1..40 {
            for t in [0.01, 0.5, 3.0, 40.0] {
                let (e, l) = markov_depth_bound(&exp2, k, t).unwrap();
                assert!(e <= l * (1.0 + 1e-12));
            }
        }
    }
}

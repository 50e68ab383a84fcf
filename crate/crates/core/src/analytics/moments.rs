use serde::{Deserialize, Serialize};

use crate::branching::LadderPlan;
use crate::error::{DwtError, Result};
use crate::numeric::ln_factorial;
use crate::rng::stream;
use crate::weightfn::WeightSpec;

/// `A_{k,ℓ}` with every inner sum truncated at `j_cap`.
///
/// See [`a_value_bounded`] for the truncation certificate.
pub fn a_value(spec: &WeightSpec, k: u64, ell: u32, j_cap: u64, tol: f64) -> Result<f64> {
    Ok(a_value_bounded(spec, k, ell, j_cap, tol)?.0)
}

/// `A_{k,ℓ}` truncated at `j_cap`, together with a bound on the discarded
/// part.
///
/// Uses `A_{j,ℓ} = A_{j,ℓ-1} + (f(j)/f(j+1))^ℓ A_{j+1,ℓ}`, which follows
/// from `A_{j,ℓ} = Σ_{i≥j} (f(j)/f(i))^ℓ A_{i,ℓ-1}` by splitting off the
/// `i = j` term. The truncated table starts from `A_{j_cap,ℓ} = 1`.
///
/// The error table obeys the same recursion with boundary value
/// `e_{j_cap,ℓ} = e_{j_cap,ℓ-1} + B_{ℓ-1} q^ℓ / (1 - q^ℓ)`, where
/// `q = f(j_cap)/f(j_cap+1)` and `B_m = Π_{i≤m} 1/(1 - q^i)` bounds every
/// `A_{j,m}` with `j ≥ j_cap`. This is valid when the ratios `f(j)/f(j+1)`
/// do not increase past `j_cap`; `q < 1/2` is required.
pub fn a_value_bounded(spec: &WeightSpec, k: u64, ell: u32, j_cap: u64, tol: f64) -> Result<(f64, f64)> {
    if ell == 0 {
        return Ok((1.0, 0.0));
    }
    if j_cap < k {
        return Err(DwtError::Config(format!("j_cap {j_cap} is below k {k}")));
    }
    let q = spec.log_ratio(j_cap, j_cap + 1).exp();
    if !(q < 0.5) {
        return Err(DwtError::ToleranceUnreachable {
            tol,
            detail: format!("ratio f({j_cap})/f({}) = {q} is not below 1/2", j_cap + 1),
        });
    }
    let len = (j_cap - k) as usize;
    // log_r[i] = ln(f(k+i)/f(k+i+1)) for i < len.
    let log_r: Vec<f64> = (0..len as u64).map(|i| spec.log_ratio(k + i, k + i + 1)).collect();

    let mut a = vec![1.0; len + 1];
    let mut err = vec![0.0; len + 1];
    let mut b_prev = 1.0;
    for l in 1..=ell {
        let lf = l as f64;
        let ql = q.powi(l as i32);
        err[len] += b_prev * ql / (1.0 - ql);
        b_prev /= 1.0 - ql;
        for i in (0..len).rev() {
            let step = (lf * log_r[i]).exp();
            a[i] += step * a[i + 1];
            err[i] += step * err[i + 1];
        }
    }
    if err[0] > tol {
        return Err(DwtError::ToleranceUnreachable {
            tol,
            detail: format!("discarded tail of A_{{{k},{ell}}} may reach {:e} at j_cap {j_cap}", err[0]),
        });
    }
    Ok((a[0], err[0]))
}

/// `E[G_k^ℓ] = ℓ! (f(k-1)/f(k))^ℓ A_{k,ℓ}`.
pub fn moment_g(spec: &WeightSpec, k: u64, ell: u32, j_cap: u64, tol: f64) -> Result<f64> {
    if k == 0 {
        return Err(DwtError::Domain("G_k is defined for k >= 1".into()));
    }
    let a = a_value(spec, k, ell, j_cap, tol)?;
    let lf = ell as f64;
    Ok((ln_factorial(ell as u64) + lf * spec.log_ratio(k - 1, k)).exp() * a)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckRequest {
    /// Pairs `(k, ℓ)` with `1 ≤ k < ℓ`.
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    /// Sets `B` given as `(j, a_j)` with distinct `j ≥ 1` and `a_j ∈ {1, 2}`.
    #[serde(default)]
    pub products: Vec<Vec<(usize, u8)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub k: usize,
    pub l: usize,
    /// Monte Carlo `E[G_k G_ℓ]`.
    pub estimate: f64,
    pub stderr: f64,
    pub mean_gk: f64,
    pub mean_gl: f64,
    /// `f(k-1)/f(k) · f(ℓ-1)/f(ℓ)`.
    pub a2_base: f64,
    /// Smallest `C` with `estimate ≤ C f(ℓ-1)/f(ℓ)`.
    pub a1_constant: f64,
    /// Smallest `C ≥ 0` with
    /// `estimate ≤ a2_base (1 + C f(k)/f(k+1) + C f(ℓ)/f(ℓ+1))`.
    pub a2_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    pub set: Vec<(usize, u8)>,
    /// Monte Carlo `E[Π G_j^{a_j}]`.
    pub estimate: f64,
    pub stderr: f64,
    /// `c_d[d-1]`: smallest `C_d` with
    /// `estimate ≤ C_d 2^{-|B|} Π_{j∈I} (f(j-1)/f(j))^{a_j}` for every
    /// `I ⊆ B` of size `d`.
    pub c_d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub spec: WeightSpec,
    pub mc_samples: u64,
    pub seed: u64,
    pub truncation_k: usize,
    pub tail_bound: f64,
    pub pairs: Vec<PairCheck>,
    pub products: Vec<ProductCheck>,
}

struct Moments {
    sum: f64,
    sum_sq: f64,
    n: f64,
}

impl Moments {
    fn new() -> Self {
        Self { sum: 0.0, sum_sq: 0.0, n: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.n += 1.0;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn stderr(&self) -> f64 {
        let mean = self.mean();
        let var = ((self.sum_sq - self.n * mean * mean) / (self.n - 1.0)).max(0.0);
        (var / self.n).sqrt()
    }
}

fn validate(req: &BoundCheckRequest) -> Result<usize> {
    let mut top = 1;
    for &(k, l) in &req.pairs {
        if !(1 <= k && k < l) {
            return Err(DwtError::Config(format!("pair ({k}, {l}) needs 1 <= k < l")));
        }
        top = top.max(l);
    }
    for set in &req.products {
        if set.is_empty() {
            return Err(DwtError::Config("product set B is empty".into()));
        }
        let mut seen: Vec<usize> = set.iter().map(|&(j, _)| j).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != set.len() || seen[0] == 0 {
            return Err(DwtError::Config("product set indices must be distinct and >= 1".into()));
        }
        if set.iter().any(|&(_, a)| !(1..=2).contains(&a)) {
            return Err(DwtError::Config("product exponents must be 1 or 2".into()));
        }
        top = top.max(*seen.last().unwrap());
    }
    Ok(top)
}

/// Monte Carlo estimates of joint moments of the ladder gaps `G_j`,
/// with the smallest constants under which each bound shape holds on the
/// sampled grid. The report is diagnostic only.
pub fn moment_bound_check(
    spec: &WeightSpec,
    req: &BoundCheckRequest,
    mc_samples: u64,
    seed: u64,
    tail_tol: f64,
) -> Result<BoundCheckReport> {
    if mc_samples < 2 {
        return Err(DwtError::Config("need at least 2 Monte Carlo samples".into()));
    }
    let top = validate(req)?;
    let plan = LadderPlan::new(spec, top + 1, tail_tol)?;
    let mut rng = stream(seed, 0);
    let mut pair_stats: Vec<[Moments; 3]> =
        req.pairs.iter().map(|_| [Moments::new(), Moments::new(), Moments::new()]).collect();
    let mut product_stats: Vec<Moments> = req.products.iter().map(|_| Moments::new()).collect();
    for _ in 0..mc_samples {
        let ladder = plan.sample(&mut rng);
        let g = |j: usize| ladder.g(spec, j);
        for (stats, &(k, l)) in pair_stats.iter_mut().zip(&req.pairs) {
            let (gk, gl) = (g(k), g(l));
            stats[0].push(gk * gl);
            stats[1].push(gk);
            stats[2].push(gl);
        }
        for (stats, set) in product_stats.iter_mut().zip(&req.products) {
            stats.push(set.iter().map(|&(j, a)| g(j).powi(a as i32)).product());
        }
    }
    let ratio = |j: usize| spec.log_ratio(j as u64 - 1, j as u64).exp();
    let pairs = req
        .pairs
        .iter()
        .zip(&pair_stats)
        .map(|(&(k, l), s)| {
            let estimate = s[0].mean();
            let a2_base = ratio(k) * ratio(l);
            let spread = spec.log_ratio(k as u64, k as u64 + 1).exp()
                + spec.log_ratio(l as u64, l as u64 + 1).exp();
            PairCheck {
                k,
                l,
                estimate,
                stderr: s[0].stderr(),
                mean_gk: s[1].mean(),
                mean_gl: s[2].mean(),
                a2_base,
                a1_constant: estimate / ratio(l),
                a2_constant: ((estimate / a2_base - 1.0) / spread).max(0.0),
            }
        })
        .collect();
    let products = req
        .products
        .iter()
        .zip(&product_stats)
        .map(|(set, s)| {
            let estimate = s.mean();
            let mut factors: Vec<f64> = set.iter().map(|&(j, a)| ratio(j).powi(a as i32)).collect();
            factors.sort_by(f64::total_cmp);
            let scale = estimate * 2f64.powi(set.len() as i32);
            let mut smallest = 1.0;
            let c_d = factors
                .iter()
                .map(|f| {
                    smallest *= f;
                    scale / smallest
                })
                .collect();
            ProductCheck { set: set.clone(), estimate, stderr: s.stderr(), c_d }
        })
        .collect();
    Ok(BoundCheckReport {
        spec: spec.clone(),
        mc_samples,
        seed,
        truncation_k: plan.truncation_k,
        tail_bound: plan.tail_bound,
        pairs,
        products,
    })
}

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;

use super::emit::CSV_HEADER;
use super::stats::{estimate_beta, smooth3, BetaFit};
use crate::error::{DwtError, Result};

/// A parsed line of an experiment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub param: Option<f64>,
    pub n: u64,
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl CsvRow {
    fn parse(line: &str, lineno: usize) -> Result<Self> {
        let bad = |what: &str| DwtError::Config(format!("line {lineno}: bad {what} in `{line}`"));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad("field count"));
        }
        let param = match fields[0] {
            "" => None,
            s => Some(s.parse().map_err(|_| bad("param"))?),
        };
        Ok(Self {
            param,
            n: fields[1].parse().map_err(|_| bad("n"))?,
            statistic: fields[2].to_string(),
            mean: fields[3].parse().map_err(|_| bad("mean"))?,
            stderr: fields[4].parse().map_err(|_| bad("stderr"))?,
            samples: fields[5].parse().map_err(|_| bad("samples"))?,
            seed: fields[6].parse().map_err(|_| bad("seed"))?,
        })
    }
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<CsvRow>> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(DwtError::Config(format!("unexpected header `{h}`"))),
        None => return Err(DwtError::Config("empty CSV".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(CsvRow::parse(line.trim(), i + 2)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeCheck {
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub holds: bool,
    /// Index pairs (into `smoothed`) where the shape is broken.
    pub breaks: Vec<usize>,
}

fn shape(values: &[f64], ok: impl Fn(f64, f64) -> bool) -> ShapeCheck {
    let smoothed = smooth3(values);
    let breaks: Vec<usize> = smoothed.windows(2).enumerate().filter(|(_, w)| !ok(w[0], w[1])).map(|(i, _)| i).collect();
    ShapeCheck { raw: values.to_vec(), smoothed, holds: breaks.is_empty(), breaks }
}

/// Non-increasing after 3-point smoothing.
pub fn shape_non_increasing(values: &[f64]) -> ShapeCheck {
    shape(values, |a, b| b <= a)
}

/// Non-decreasing after 3-point smoothing.
pub fn shape_non_decreasing(values: &[f64]) -> ShapeCheck {
    shape(values, |a, b| b >= a)
}

/// Fits recovered from an experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    /// Log-log fit of mean depth against n per grid parameter.
    pub beta: Vec<(Option<f64>, BetaFit)>,
    /// Mean d/n at the largest n per grid parameter.
    pub nu: Vec<(Option<f64>, f64)>,
    pub beta_shape: Option<ShapeCheck>,
    pub nu_shape: Option<ShapeCheck>,
}

type Series = (Option<f64>, Vec<(f64, f64)>);

fn key(p: Option<f64>) -> (bool, u64) {
    // Orders None first, then by value; the grid never holds NaN.
    (p.is_some(), p.map_or(0, |v| v.to_bits() ^ if v < 0.0 { u64::MAX } else { 1 << 63 }))
}

/// β fits need a `depth` series with at least three sizes; ν comes from
/// `d_over_n` rows. Either may be empty.
pub fn analyze_csv<R: BufRead>(input: R) -> Result<Analysis> {
    let rows = read_csv(input)?;
    let mut depth: BTreeMap<(bool, u64), Series> = BTreeMap::new();
    let mut beta_rows: BTreeMap<(bool, u64), (Option<f64>, f64)> = BTreeMap::new();
    let mut nu: BTreeMap<(bool, u64), (Option<f64>, u64, f64)> = BTreeMap::new();
    for r in &rows {
        match r.statistic.as_str() {
            "depth" => depth.entry(key(r.param)).or_insert((r.param, Vec::new())).1.push((r.n as f64, r.mean)),
            "beta_hat" => {
                beta_rows.insert(key(r.param), (r.param, r.mean));
            }
            "d_over_n" => {
                let e = nu.entry(key(r.param)).or_insert((r.param, 0, 0.0));
                if r.n >= e.1 {
                    *e = (r.param, r.n, r.mean);
                }
            }
            _ => {}
        }
    }
    let mut beta = Vec::new();
    for (_, (p, series)) in depth {
        if series.len() >= 3 {
            beta.push((p, estimate_beta(&series)?));
        }
    }
    let beta_values: Vec<f64> = if beta_rows.is_empty() {
        beta.iter().map(|(_, f)| f.slope).collect()
    } else {
        beta_rows.values().map(|&(_, b)| b).collect()
    };
    let nu: Vec<(Option<f64>, f64)> = nu.into_values().map(|(p, _, m)| (p, m)).collect();
    let nu_values: Vec<f64> = nu.iter().map(|&(_, m)| m).collect();
    Ok(Analysis {
        beta_shape: (beta_values.len() > 1).then(|| shape_non_increasing(&beta_values)),
        nu_shape: (nu_values.len() > 1).then(|| shape_non_decreasing(&nu_values)),
        beta,
        nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_parameters_in_order() {
        let csv = format!("{CSV_HEADER}\n2.5,100,d_over_n,0.5,0.01,10,1\n-1,100,d_over_n,0.2,0.01,10,1\n0.1,100,d_over_n,0.3,0.01,10,1\n");
        let a = analyze_csv(csv.as_bytes()).unwrap();
        let params: Vec<f64> = a.nu.iter().map(|(p, _)| p.unwrap()).collect();
        assert_eq!(params, vec![-1.0, 0.1, 2.5]);
        assert!(a.nu_shape.unwrap().holds);
    }

    #[test]
    fn fits_beta_from_depth_series() {
        let mut csv = format!("{CSV_HEADER}\n");
        for n in [100u64, 1000, 10000] {
            csv.push_str(&format!(",{n},depth,{},0,5,3\n", (n as f64).sqrt()));
        }
        let a = analyze_csv(csv.as_bytes()).unwrap();
        assert!((a.beta[0].1.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn smoothing_absorbs_single_wiggle() {
        let v = [0.9, 0.8, 0.81, 0.7, 0.6, 0.5];
        assert!(shape_non_increasing(&v).holds);
        assert!(!shape_non_increasing(&[0.1, 0.5, 0.9]).holds);
    }
}

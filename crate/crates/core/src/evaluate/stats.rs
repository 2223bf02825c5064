use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{GeolocError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    /// Two-sided, from the t approximation with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(GeolocError::Misaligned(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(GeolocError::TooFewObservations { needed: 3, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(GeolocError::InvalidParameter("non-finite value in spearman input".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(GeolocError::ConstantInput);
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y));
    let n = x.len();
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    Ok(Correlation { rho, p_value, n })
}

/// Spearman over two keyed series that must share the same key set.
pub fn spearman_keyed(x: &BTreeMap<String, f64>, y: &BTreeMap<String, f64>) -> Result<Correlation> {
    if !x.keys().eq(y.keys()) {
        let only: Vec<&String> = x
            .keys()
            .filter(|k| !y.contains_key(*k))
            .chain(y.keys().filter(|k| !x.contains_key(*k)))
            .collect();
        return Err(GeolocError::Misaligned(format!("keys present on one side only: {only:?}")));
    }
    let xs: Vec<f64> = x.values().copied().collect();
    let ys: Vec<f64> = y.values().copied().collect();
    spearman(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionTest {
    pub z: f64,
    pub p_value: f64,
    /// Pooled proportion was 0 or 1; `p_value` is 1 by convention.
    pub degenerate: bool,
}

/// Two-sided two-proportion z-test with pooled variance.
pub fn proportion_test(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<ProportionTest> {
    let mut problems = Vec::new();
    if n1 == 0 || n2 == 0 {
        problems.push(format!("sample sizes must be positive (n1 = {n1}, n2 = {n2})"));
    }
    if k1 > n1 {
        problems.push(format!("k1 = {k1} exceeds n1 = {n1}"));
    }
    if k2 > n2 {
        problems.push(format!("k2 = {k2} exceeds n2 = {n2}"));
    }
    if !problems.is_empty() {
        return Err(GeolocError::InvalidParameter(problems.join("; ")));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1f + n2f);
    if pooled <= 0.0 || pooled >= 1.0 {
        return Ok(ProportionTest { z: 0.0, p_value: 1.0, degenerate: true });
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = (k1 as f64 / n1f - k2 as f64 / n2f) / se;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(ProportionTest {
        z,
        p_value: (2.0 * normal.cdf(-z.abs())).min(1.0),
        degenerate: false,
    })
}

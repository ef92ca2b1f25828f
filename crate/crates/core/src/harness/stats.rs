//! Summary statistics and empirical distributions.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let s = sorted(xs);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Histogram density: `density[k] * (edges[k+1] - edges[k])` sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdf {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

/// Empirical CDF at the sorted samples: `probability[k] = (k + 1) / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cdf {
    pub value: Vec<f64>,
    pub probability: Vec<f64>,
}

/// `bins` equal-width bins over `[lo, hi]`; the last bin is closed. A
/// degenerate range is widened to unit width around the value.
pub fn histogram(xs: &[f64], bins: usize, lo: f64, hi: f64) -> Pdf {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| if k == bins { hi } else { lo + width * k as f64 }).collect();
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let k = (((x - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[k] += 1;
    }
    let n = xs.len().max(1) as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (n * (e[1] - e[0])))
        .collect();
    Pdf { edges, density }
}

pub fn empirical_cdf(xs: &[f64]) -> Cdf {
    let value = sorted(xs);
    let n = value.len() as f64;
    let probability = (1..=value.len()).map(|k| k as f64 / n).collect();
    Cdf { value, probability }
}

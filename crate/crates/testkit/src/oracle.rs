//! Reference computations written independently of the library code.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let choose2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut table: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rows: HashMap<usize, f64> = HashMap::new();
    let mut cols: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_rows: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_cols: f64 = cols.values().map(|&v| choose2(v)).sum();
    let expected = sum_rows * sum_cols / choose2(n);
    let max = (sum_rows + sum_cols) / 2.0;
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Isotropic Gaussian blobs, `per` points around each center, with their
/// true labels. Points are interleaved so no label order is implied.
pub fn blobs(centers: &[Vec<f64>], per: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per {
        for (c, center) in centers.iter().enumerate() {
            points.push(center.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    (points, labels)
}

/// Centers spread on a circle of the given radius in the first two
/// dimensions.
pub fn ring_centers(k: usize, d: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / k as f64;
            let mut c = vec![0.0; d];
            c[0] = radius * t.cos();
            if d > 1 {
                c[1] = radius * t.sin();
            }
            c
        })
        .collect()
}

/// Diagonal Gaussian mixture parameters for the reference EM.
#[derive(Debug, Clone)]
pub struct RefMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

fn density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut p = 1.0;
    for i in 0..x.len() {
        let z = x[i] - mean[i];
        p *= (-z * z / (2.0 * var[i])).exp() / (2.0 * std::f64::consts::PI * var[i]).sqrt();
    }
    p
}

/// Log-likelihood computed straight from the mixture density.
pub fn log_likelihood(m: &RefMixture, data: &[Vec<f64>]) -> f64 {
    data.iter()
        .map(|x| {
            let p: f64 = (0..m.weights.len()).map(|j| m.weights[j] * density(x, &m.means[j], &m.variances[j])).sum();
            p.ln()
        })
        .sum()
}

/// Textbook EM iterations from `init`; returns the log-likelihood before
/// the first step and after each step.
pub fn reference_em(init: RefMixture, data: &[Vec<f64>], floor: f64, steps: usize) -> (RefMixture, Vec<f64>) {
    let mut m = init;
    let mut history = vec![log_likelihood(&m, data)];
    let (n, d, k) = (data.len(), data[0].len(), m.weights.len());
    for _ in 0..steps {
        let mut resp = vec![vec![0.0; k]; n];
        for (i, x) in data.iter().enumerate() {
            let joint: Vec<f64> = (0..k).map(|j| m.weights[j] * density(x, &m.means[j], &m.variances[j])).collect();
            let total: f64 = joint.iter().sum();
            for j in 0..k {
                resp[i][j] = joint[j] / total;
            }
        }
        for j in 0..k {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            m.weights[j] = nj / n as f64;
            for c in 0..d {
                let mean = resp.iter().zip(data).map(|(r, x)| r[j] * x[c]).sum::<f64>() / nj;
                m.means[j][c] = mean;
            }
            for c in 0..d {
                let var = resp.iter().zip(data).map(|(r, x)| r[j] * (x[c] - m.means[j][c]).powi(2)).sum::<f64>() / nj;
                m.variances[j][c] = var.max(floor);
            }
        }
        history.push(log_likelihood(&m, data));
    }
    (m, history)
}

/// BIC with free parameters counted as k means and k variances per
/// dimension plus k-1 weights.
pub fn reference_bic(k: usize, d: usize, n: usize, ll: f64) -> f64 {
    let means = k * d;
    let variances = k * d;
    let weights = k - 1;
    (means + variances + weights) as f64 * (n as f64).ln() - 2.0 * ll
}

/// A random numeric token in one of the supported styles, with the number
/// it denotes computed from its parts.
pub fn random_numeric_token(rng: &mut ChaCha8Rng) -> (String, f64) {
    use rand::Rng;
    const SCALES: [(&str, f64); 8] = [
        ("", 1.0),
        (" thousand", 1e3),
        ("K", 1e3),
        (" million", 1e6),
        ("M", 1e6),
        (" billion", 1e9),
        ("B", 1e9),
        (" trillion", 1e12),
    ];
    let negative = rng.random_bool(0.2);
    let int: u64 = rng.random_range(0..10_000_000);
    let frac: Option<u32> = rng.random_bool(0.5).then(|| rng.random_range(0..1000));
    let int_s = int.to_string();
    let grouped = if rng.random_bool(0.5) {
        let mut g = String::new();
        for (i, ch) in int_s.chars().enumerate() {
            if i > 0 && (int_s.len() - i).is_multiple_of(3) {
                g.push(',');
            }
            g.push(ch);
        }
        g
    } else {
        int_s.clone()
    };
    let frac_s = frac.map(|f| format!(".{f:03}")).unwrap_or_default();
    let exact: f64 = format!("{int_s}{frac_s}").parse().unwrap();
    let sign = if negative { "-" } else { "" };
    let body = format!("{grouped}{frac_s}");
    let (token, factor) = match rng.random_range(0..4) {
        0 => (format!("{sign}{body}%"), 1.0),
        1 => {
            let (s, f) = SCALES[rng.random_range(0..SCALES.len())];
            (format!("{sign}${body}{s}"), f)
        }
        2 => {
            let (s, f) = SCALES[rng.random_range(0..SCALES.len())];
            (format!("{sign}{body}{s} hours"), f)
        }
        _ => {
            let (s, f) = SCALES[rng.random_range(0..SCALES.len())];
            (format!("{sign}{body}{s}"), f)
        }
    };
    (token, exact * factor * if negative { -1.0 } else { 1.0 })
}

//! Diagonal-covariance Gaussian mixture fitted by EM, with the component
//! count chosen by BIC.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::OrganizationError;

pub const K_MAX: usize = 10;
pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 200;
pub const RESTARTS: u64 = 3;
pub const MAX_REDUCED_DIM: usize = 16;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Linear map onto the leading principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub mean: Vec<f64>,
    /// One unit vector per output dimension; all-zero for directions the
    /// data does not span.
    pub components: Vec<Vec<f64>>,
}

impl Projection {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect()
    }
}

/// Principal components via the n×n Gram matrix, which stays small even
/// for high-dimensional embeddings.
pub fn pca(data: &[Vec<f64>], dims: usize) -> Projection {
    let n = data.len();
    let d = data[0].len();
    let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);
    let gram = &centered * centered.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(1.0);
    let components = order
        .iter()
        .take(dims)
        .map(|&i| {
            let lambda = eig.eigenvalues[i];
            if lambda <= 1e-12 * top {
                return vec![0.0; d];
            }
            let u = eig.eigenvectors.column(i);
            let mut c: Vec<f64> = (0..d).map(|j| (0..n).map(|r| centered[(r, j)] * u[r]).sum::<f64>() / lambda.sqrt()).collect();
            let pivot = c
                .iter()
                .enumerate()
                .fold(0, |best, (j, v)| if v.abs() > c[best].abs() + 1e-12 { j } else { best });
            if c[pivot] < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            c
        })
        .collect();
    Projection { mean, components }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmParams {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k())
            .map(|j| {
                if self.weights[j] <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = x
                    .iter()
                    .zip(&self.means[j])
                    .zip(&self.variances[j])
                    .map(|((x, m), v)| -0.5 * (LN_2PI + v.ln()) - (x - m).powi(2) / (2.0 * v))
                    .sum();
                self.weights[j].ln() + ll
            })
            .collect()
    }

    /// Responsibilities and total log-likelihood.
    pub fn e_step(&self, data: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let mut total = 0.0;
        let resp = data
            .iter()
            .map(|x| {
                let lj = self.log_joint(x);
                let max = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + lj.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
                total += lse;
                lj.iter().map(|l| (l - lse).exp()).collect()
            })
            .collect();
        (resp, total)
    }

    fn m_step(&mut self, data: &[Vec<f64>], resp: &[Vec<f64>], floor: f64) {
        let n = data.len() as f64;
        let d = data[0].len();
        for j in 0..self.k() {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            if nj < 1e-12 {
                self.weights[j] = 0.0;
                continue;
            }
            self.weights[j] = nj / n;
            let mean: Vec<f64> = (0..d).map(|c| resp.iter().zip(data).map(|(r, x)| r[j] * x[c]).sum::<f64>() / nj).collect();
            let var: Vec<f64> = (0..d)
                .map(|c| {
                    let v = resp.iter().zip(data).map(|(r, x)| r[j] * (x[c] - mean[c]).powi(2)).sum::<f64>() / nj;
                    v.max(floor)
                })
                .collect();
            self.means[j] = mean;
            self.variances[j] = var;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmRun {
    pub params: GmmParams,
    pub log_likelihood: f64,
    /// Log-likelihood at the initial parameters, then after every M-step.
    pub history: Vec<f64>,
}

/// EM from fixed initial parameters until the log-likelihood gain drops
/// below `tol` or `max_iter` M-steps were taken.
pub fn em_from_init(data: &[Vec<f64>], init: GmmParams, floor: f64, tol: f64, max_iter: usize) -> EmRun {
    let mut params = init;
    let (mut resp, mut ll) = params.e_step(data);
    let mut history = vec![ll];
    for _ in 0..max_iter {
        params.m_step(data, &resp, floor);
        let (r, next) = params.e_step(data);
        resp = r;
        history.push(next);
        let gain = next - ll;
        ll = next;
        if gain < tol {
            break;
        }
    }
    EmRun { params, log_likelihood: ll, history }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// k-means++ seeding: means at D²-sampled points, shared data variance,
/// uniform weights.
pub fn kmeans_pp_init(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng, floor: f64) -> GmmParams {
    let n = data.len();
    let d = data[0].len();
    let mut centers = vec![data[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = data
            .iter()
            .map(|x| centers.iter().map(|c| sq_dist(x, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let idx = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            Err(_) => rng.random_range(0..n),
        };
        centers.push(data[idx].clone());
    }
    let mean: Vec<f64> = (0..d).map(|c| data.iter().map(|x| x[c]).sum::<f64>() / n as f64).collect();
    let var: Vec<f64> = (0..d)
        .map(|c| (data.iter().map(|x| (x[c] - mean[c]).powi(2)).sum::<f64>() / n as f64).max(floor))
        .collect();
    GmmParams { weights: vec![1.0 / k as f64; k], means: centers, variances: vec![var; k] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub bic: f64,
    pub seed: u64,
    /// Present when the input was projected before fitting.
    pub projection: Option<Projection>,
    pub history: Vec<f64>,
}

impl GmmModel {
    pub fn params(&self) -> GmmParams {
        GmmParams { weights: self.weights.clone(), means: self.means.clone(), variances: self.variances.clone() }
    }

    /// Input vectors in the space the model was fitted in.
    pub fn transform(&self, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match &self.projection {
            Some(p) => vectors.iter().map(|v| p.project(v)).collect(),
            None => vectors.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicRow {
    pub k: usize,
    pub log_likelihood: f64,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub model: GmmModel,
    pub table: Vec<BicRow>,
}

pub fn bic(k: usize, d: usize, n: usize, log_likelihood: f64) -> f64 {
    let p = (k * 2 * d + (k - 1)) as f64;
    p * (n as f64).ln() - 2.0 * log_likelihood
}

fn best_of_restarts(data: &[Vec<f64>], k: usize, seed: u64) -> EmRun {
    let mut best: Option<EmRun> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 * 64 + restart);
        let init = kmeans_pp_init(data, k, &mut rng, VARIANCE_FLOOR);
        let run = em_from_init(data, init, VARIANCE_FLOOR, TOLERANCE, MAX_ITERATIONS);
        if best.as_ref().is_none_or(|b| run.log_likelihood > b.log_likelihood) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

/// Fits mixtures for k = 1..=min(k_max, n) and keeps the lowest BIC.
pub fn fit_gmm(vectors: &[Vec<f64>], k_max: usize, seed: u64) -> Result<GmmFit, OrganizationError> {
    let n = vectors.len();
    if n == 0 {
        return Err(OrganizationError::DegenerateInput("no vectors to cluster".into()));
    }
    let d = vectors[0].len();
    if d == 0 || vectors.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
        return Err(OrganizationError::DegenerateInput("vectors must share one nonzero dimension and be finite".into()));
    }
    let reduced = MAX_REDUCED_DIM.min(n - 1);
    let projection = (n > 1 && d > reduced).then(|| pca(vectors, reduced));
    let data = match &projection {
        Some(p) => vectors.iter().map(|v| p.project(v)).collect(),
        None => vectors.to_vec(),
    };
    let dim = data[0].len();
    let mut table = Vec::new();
    let mut best: Option<(usize, EmRun, f64)> = None;
    for k in 1..=k_max.max(1).min(n) {
        let run = best_of_restarts(&data, k, seed);
        let score = bic(k, dim, n, run.log_likelihood);
        table.push(BicRow { k, log_likelihood: run.log_likelihood, bic: score });
        if best.as_ref().is_none_or(|(_, _, b)| score < *b) {
            best = Some((k, run, score));
        }
    }
    let (k, run, score) = best.expect("k range is non-empty");
    Ok(GmmFit {
        model: GmmModel {
            k,
            weights: run.params.weights,
            means: run.params.means,
            variances: run.params.variances,
            log_likelihood: run.log_likelihood,
            bic: score,
            seed,
            projection,
            history: run.history,
        },
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Compacted cluster index per vector.
    pub labels: Vec<usize>,
    /// n × k responsibilities over the model's components.
    pub responsibilities: Vec<Vec<f64>>,
    /// Model component behind each compacted cluster index.
    pub components: Vec<usize>,
}

impl Assignment {
    pub fn cluster_count(&self) -> usize {
        self.components.len()
    }
}

/// Hard assignment by maximal responsibility, ties to the lower component;
/// components that receive no vector are dropped and indices compacted.
pub fn assign_clusters(model: &GmmModel, vectors: &[Vec<f64>]) -> Assignment {
    let data = model.transform(vectors);
    let (responsibilities, _) = model.params().e_step(&data);
    let raw: Vec<usize> = responsibilities
        .iter()
        .map(|r| r.iter().enumerate().fold(0, |best, (j, v)| if *v > r[best] { j } else { best }))
        .collect();
    let mut components: Vec<usize> = raw.clone();
    components.sort_unstable();
    components.dedup();
    let labels = raw.iter().map(|c| components.binary_search(c).unwrap()).collect();
    Assignment { labels, responsibilities, components }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_input() {
        let fit = fit_gmm(&[vec![0.6, 0.8]], K_MAX, 7).unwrap();
        assert_eq!(fit.model.k, 1);
        assert_eq!(fit.model.means[0], vec![0.6, 0.8]);
        assert!(fit.model.projection.is_none());
        assert!(matches!(fit_gmm(&[], K_MAX, 7), Err(OrganizationError::DegenerateInput(_))));
    }

    #[test]
    fn point_at_a_mean_is_assigned_to_it() {
        let model = GmmModel {
            k: 2,
            weights: vec![0.5, 0.5],
            means: vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            variances: vec![vec![0.01, 0.01]; 2],
            log_likelihood: 0.0,
            bic: 0.0,
            seed: 0,
            projection: None,
            history: vec![],
        };
        let a = assign_clusters(&model, &[vec![2.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(a.labels[0], 1);
        assert!(a.responsibilities[0][1] > 0.99);
        // Equidistant point: tie goes to the lower index.
        let mut sym = model.clone();
        sym.means = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let a = assign_clusters(&sym, &[vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(a.labels, vec![0, 1]);
        assert!((a.responsibilities[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pca_recovers_the_dominant_direction() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let p = pca(&data, 2);
        let c = &p.components[0];
        let norm = 5f64.sqrt();
        assert!((c[0] - 1.0 / norm).abs() < 1e-9 && (c[1] - 2.0 / norm).abs() < 1e-9);
        assert!(p.components[1].iter().all(|v| *v == 0.0));
    }
}

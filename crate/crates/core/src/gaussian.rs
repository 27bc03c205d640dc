//! Gaussian realization of a decomposition: source α sends a Gaussian vector
//! with covariance `M_α` and every party outputs the sum of what it receives.
//!
//! Sampling uses `ChaCha8Rng` seeded with the model seed, stream `α` for
//! source α, and word position `2 k s` for sample `s` of a source with `k`
//! parties, so every sample is reproducible independently of chunking.
//! Normals come from the inverse CDF, `z = -√2 erfc⁻¹(2u)`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc_inv;

use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::network::Network;
use crate::numeric::pairwise_sum_by;

const PSD_TOL: f64 = 1e-8;
const REAL_TOL: f64 = 1e-12;
const CHUNK: usize = 8192;

#[derive(Clone, Debug)]
struct SourceFactor {
    parties: Vec<usize>,
    /// `k × k` real factor `F` with `F Fᵀ = M_α` restricted to the block.
    factor: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct GaussianNetworkModel {
    net: Network,
    terms: Vec<HermitianMatrix>,
    factors: Vec<SourceFactor>,
    seed: u64,
}

impl GaussianNetworkModel {
    /// `terms[α]` is a full `n × n` real PSD matrix supported on α's block.
    pub fn new(net: &Network, terms: Vec<HermitianMatrix>, seed: u64) -> Result<Self> {
        let n = net.n_parties();
        if terms.len() != net.n_sources() {
            return Err(Error::Dimension(format!(
                "{} terms for {} sources",
                terms.len(),
                net.n_sources()
            )));
        }
        let mut factors = Vec::with_capacity(terms.len());
        for (alpha, term) in terms.iter().enumerate() {
            let name = &net.source(alpha).name;
            if term.n() != n {
                return Err(Error::Dimension(format!("term '{name}' is {}x{}, expected {n}x{n}", term.n(), term.n())));
            }
            let scale = term.max_abs().max(1.0);
            if !term.is_real(REAL_TOL * scale) {
                return Err(Error::Unsupported(format!("term '{name}' is complex; only real Gaussian sources are sampled")));
            }
            let block = net.block(alpha);
            for i in 0..n {
                for j in 0..n {
                    let inside = block.contains(&i) && block.contains(&j);
                    if !inside && term.get(i, j).norm() > REAL_TOL * scale {
                        return Err(Error::Model(format!(
                            "invalid source covariance: term '{name}' has entry ({}, {}) outside its block",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
            let sub = term.principal_submatrix(block);
            let eig = sub.eigen();
            let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if lambda_min < -PSD_TOL * scale {
                return Err(Error::Model(format!(
                    "invalid source covariance: term '{name}' has eigenvalue {lambda_min:.3e}"
                )));
            }
            let k = block.len();
            let factor = DMatrix::from_fn(k, k, |i, c| eig.eigenvectors[(i, c)].re * eig.eigenvalues[c].max(0.0).sqrt());
            factors.push(SourceFactor { parties: block.to_vec(), factor });
        }
        Ok(Self { net: net.clone(), terms, factors, seed })
    }

    pub fn from_decomposition(net: &Network, d: &Decomposition, seed: u64) -> Result<Self> {
        Self::new(net, d.terms.clone(), seed)
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn terms(&self) -> &[HermitianMatrix] {
        &self.terms
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `Σ_α M_α`, the population covariance of the outputs.
    pub fn population_covariance(&self) -> HermitianMatrix {
        let mut total = HermitianMatrix::zeros(self.net.n_parties());
        for t in &self.terms {
            total += t;
        }
        total
    }
}

/// `count` samples of `n` real outputs, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    n: usize,
    data: Vec<f64>,
}

impl SampleBatch {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.is_empty() || data.len() % n != 0 {
            return Err(Error::Dimension(format!("{} values do not form samples of length {n}", data.len())));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn sample(&self, s: usize) -> &[f64] {
        &self.data[s * self.n..(s + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One sample per line, comma separated, no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in 0..self.count() {
            let row: Vec<String> = self.sample(s).iter().map(|x| format!("{x:e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

fn sample_chunk(model: &GaussianNetworkModel, start: usize, len: usize) -> Vec<f64> {
    let n = model.net.n_parties();
    let mut out = vec![0.0; len * n];
    let mut z = Vec::new();
    for (alpha, f) in model.factors.iter().enumerate() {
        let k = f.parties.len();
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        rng.set_stream(alpha as u64);
        rng.set_word_pos(2 * k as u128 * start as u128);
        for s in 0..len {
            z.clear();
            z.extend((0..k).map(|_| standard_normal(&mut rng)));
            let row = &mut out[s * n..(s + 1) * n];
            for (a, &p) in f.parties.iter().enumerate() {
                row[p] += (0..k).map(|c| f.factor[(a, c)] * z[c]).sum::<f64>();
            }
        }
    }
    out
}

pub fn sample(model: &GaussianNetworkModel, count: usize) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let n = model.net.n_parties();
    let chunks: Vec<Vec<f64>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            sample_chunk(model, start, CHUNK.min(count - start))
        })
        .collect();
    SampleBatch::new(n, chunks.concat())
}

/// Unbiased estimate with `1/(count - 1)`, using pairwise sums.
pub fn sample_covariance(batch: &SampleBatch) -> Result<HermitianMatrix> {
    let count = batch.count();
    if count < 2 {
        return Err(Error::InvalidArgument(format!("covariance needs at least 2 samples, got {count}")));
    }
    let n = batch.n;
    let x = &batch.data;
    let means: Vec<f64> = (0..n)
        .map(|i| pairwise_sum_by(count, &|s| x[s * n + i].into()).re / count as f64)
        .collect();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let sum = pairwise_sum_by(count, &|s| ((x[s * n + i] - means[i]) * (x[s * n + j] - means[j])).into()).re;
            rows[i][j] = sum / (count - 1) as f64;
            rows[j][i] = rows[i][j];
        }
    }
    HermitianMatrix::from_real_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::catalog::path3;

    fn real(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn path_terms() -> Vec<HermitianMatrix> {
        vec![
            real(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]),
            real(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]]),
        ]
    }

    #[test]
    fn zero_terms_give_zero_outputs() {
        let net = path3();
        let model = GaussianNetworkModel::new(&net, vec![HermitianMatrix::zeros(3); 2], 7).unwrap();
        let batch = sample(&model, 100).unwrap();
        assert!(batch.data().iter().all(|&x| x == 0.0));
        assert_eq!(sample_covariance(&batch).unwrap(), HermitianMatrix::zeros(3));
    }

    #[test]
    fn rank_one_source_is_perfectly_correlated() {
        let net = Network::from_names(&["A1", "A2"], &[("alpha", &["A1", "A2"])]).unwrap();
        let model = GaussianNetworkModel::new(&net, vec![real(&[&[1.0, 1.0], &[1.0, 1.0]])], 3).unwrap();
        let batch = sample(&model, 20_000).unwrap();
        for s in 0..batch.count() {
            let v = batch.sample(s);
            assert!((v[0] - v[1]).abs() < 1e-12);
        }
        let cov = sample_covariance(&batch).unwrap();
        assert!((cov.get(0, 0).re - 1.0).abs() < 5.0 * (2.0 / 20_000f64).sqrt());
    }

    #[test]
    fn hand_covariance() {
        let batch = SampleBatch::new(2, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let cov = sample_covariance(&batch).unwrap();
        assert_eq!(cov, real(&[&[2.0, -2.0], &[-2.0, 2.0]]));
        let constant = SampleBatch::new(2, vec![3.0, 4.0, 3.0, 4.0, 3.0, 4.0]).unwrap();
        assert_eq!(sample_covariance(&constant).unwrap(), HermitianMatrix::zeros(2));
        assert!(sample_covariance(&SampleBatch::new(2, vec![1.0, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn path_model_matches_population_covariance() {
        let net = path3();
        let model = GaussianNetworkModel::new(&net, path_terms(), 11).unwrap();
        let m = model.population_covariance();
        let count = 200_000;
        let cov = sample_covariance(&sample(&model, count).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let (mii, mjj, mij) = (m.get(i, i).re, m.get(j, j).re, m.get(i, j).re);
                let se = ((mii * mjj + mij * mij) / count as f64).sqrt();
                assert!((cov.get(i, j).re - mij).abs() <= 5.0 * se, "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn reproducible_and_chunk_independent() {
        let net = path3();
        let model = GaussianNetworkModel::new(&net, path_terms(), 99).unwrap();
        let a = sample(&model, CHUNK + 17).unwrap();
        let b = sample(&model, CHUNK + 17).unwrap();
        assert_eq!(a, b);
        let short = sample(&model, 5).unwrap();
        assert_eq!(short.data(), &a.data()[..15]);
        let tail = sample_chunk(&model, CHUNK, 17);
        assert_eq!(&tail[..], &a.data()[3 * CHUNK..]);
        let other = GaussianNetworkModel::new(&net, path_terms(), 100).unwrap();
        assert_ne!(sample(&other, 5).unwrap(), short);
    }

    #[test]
    fn invalid_terms() {
        let net = path3();
        let mut bad = path_terms();
        bad[0] = real(&[&[1.0, 2.0, 0.0], &[2.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        let err = GaussianNetworkModel::new(&net, bad, 0).unwrap_err();
        assert!(err.to_string().contains("invalid source covariance"), "{err}");
        let mut off = path_terms();
        off[0] = real(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.0], &[0.5, 0.0, 1.0]]);
        assert!(GaussianNetworkModel::new(&net, off, 0).unwrap_err().to_string().contains("invalid source covariance"));
        assert!(GaussianNetworkModel::new(&net, path_terms()[..1].to_vec(), 0).is_err());
        let model = GaussianNetworkModel::new(&net, path_terms(), 0).unwrap();
        assert!(sample(&model, 0).is_err());
    }

    #[test]
    fn csv_output() {
        let batch = SampleBatch::new(2, vec![1.0, -0.5, 0.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1e0,-5e-1\n0e0,2e0\n");
    }
}

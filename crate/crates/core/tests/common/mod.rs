#![allow(dead_code)]

use std::collections::BTreeMap;

use netcov::inflate::InflationSpec;
use netcov::linalg::{CMatrix, HermitianMatrix};
use netcov::network::{catalog, Network};
use netcov::permutation::Permutation;
use netcov::simulate::{ClassicalModel, OutputFunctions, PartyResponse, SourceDistribution};
use netcov::witness::TwistedGramSpec;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut (impl Rng + ?Sized)) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn complex_normal(rng: &mut (impl Rng + ?Sized)) -> Complex64 {
    Complex64::new(normal(rng), normal(rng)) / 2f64.sqrt()
}

pub fn party_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("A{i}")).collect()
}

/// Random graph on `n` vertices with every vertex covered; one source per edge.
pub fn random_bipartite(rng: &mut (impl Rng + ?Sized), n: usize) -> Network {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    for i in 0..n {
        if !edges.iter().any(|&(a, b)| a == i || b == i) {
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let sources = edges
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| (format!("s{}", k + 1), vec![a, b]))
        .collect();
    Network::new(party_names(n), sources).unwrap()
}

/// Path, cycle, star or random graph with at most `max_n` parties.
pub fn random_bipartite_family(rng: &mut (impl Rng + ?Sized), max_n: usize) -> Network {
    match rng.random_range(0..4) {
        0 => catalog::path(rng.random_range(2..=max_n)),
        1 => catalog::cycle(rng.random_range(3..=max_n)),
        2 => catalog::star(rng.random_range(3..=max_n)),
        _ => {
            let n = rng.random_range(2..=max_n);
            random_bipartite(rng, n)
        }
    }
}

/// Random network in which any two parties share at most one source.
pub fn random_ndcs(rng: &mut (impl Rng + ?Sized), max_n: usize) -> Network {
    let n = rng.random_range(2..=max_n);
    let mut sources: Vec<Vec<usize>> = Vec::new();
    for _ in 0..rng.random_range(1..=2 * n) {
        let size = rng.random_range(2..=3.min(n));
        let mut s: Vec<usize> = Vec::new();
        while s.len() < size {
            let p = rng.random_range(0..n);
            if !s.contains(&p) {
                s.push(p);
            }
        }
        s.sort_unstable();
        let shared_pair = sources
            .iter()
            .any(|t| t.iter().filter(|p| s.contains(p)).count() > 1);
        if !shared_pair {
            sources.push(s);
        }
    }
    for i in 0..n {
        if !sources.iter().any(|s| s.contains(&i)) {
            sources.push(vec![i]);
        }
    }
    let sources = sources
        .into_iter()
        .enumerate()
        .map(|(k, s)| (format!("s{}", k + 1), s))
        .collect();
    Network::new(party_names(n), sources).unwrap()
}

pub fn random_psd(rng: &mut (impl Rng + ?Sized), n: usize, rank: usize, complex: bool) -> HermitianMatrix {
    let x = CMatrix::from_fn(n, rank, |_, _| {
        if complex {
            complex_normal(rng)
        } else {
            Complex64::new(normal(rng), 0.0)
        }
    });
    HermitianMatrix::hermitian_part(&x * x.adjoint())
}

/// `Σ_α` of random PSD terms supported on the α-blocks.
pub fn random_feasible(rng: &mut (impl Rng + ?Sized), net: &Network, complex: bool) -> HermitianMatrix {
    let n = net.n_parties();
    let mut m = HermitianMatrix::zeros(n);
    for alpha in 0..net.n_sources() {
        let block = net.block(alpha);
        let rank = rng.random_range(1..=block.len());
        let term = random_psd(rng, block.len(), rank, complex);
        m += &HermitianMatrix::embed(&term, block, n);
    }
    m
}

/// Random PSD matrix with the network's zero pattern: a random Gram matrix
/// restricted to the support, shifted just enough to be PSD.
pub fn random_supported_psd(rng: &mut (impl Rng + ?Sized), net: &Network, complex: bool) -> HermitianMatrix {
    let n = net.n_parties();
    let g = random_psd(rng, n, n, complex);
    let raw = CMatrix::from_fn(n, n, |i, j| {
        if net.connected(i, j) {
            g.get(i, j)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let m = HermitianMatrix::hermitian_part(raw);
    let shift = (-m.min_eigenvalue()).max(0.0) * (1.0 + 0.2 * rng.random::<f64>());
    &m + &HermitianMatrix::identity(n).scale(shift)
}

/// A block-feasible matrix plus a random Hermitian perturbation on the
/// support, shifted to be PSD when needed. Lands on either side of the cone.
pub fn random_perturbed(rng: &mut (impl Rng + ?Sized), net: &Network, complex: bool) -> HermitianMatrix {
    let n = net.n_parties();
    let f = random_feasible(rng, net, complex);
    let raw = CMatrix::from_fn(n, n, |i, j| {
        if net.connected(i, j) {
            if complex {
                complex_normal(rng)
            } else {
                Complex64::new(normal(rng), 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let h = HermitianMatrix::hermitian_part(raw);
    let t = rng.random::<f64>() * f.frobenius_norm() / h.frobenius_norm().max(1e-300);
    let m = &f + &h.scale(t);
    let deficit = (-m.min_eigenvalue()).max(0.0);
    &m + &HermitianMatrix::identity(n).scale(deficit * (1.0 + 0.1 * rng.random::<f64>()))
}

/// Random probability vector; about a third of the time a point mass.
pub fn random_pmf(rng: &mut (impl Rng + ?Sized), k: usize) -> Vec<f64> {
    if rng.random_bool(0.3) {
        let mut p = vec![0.0; k];
        p[rng.random_range(0..k)] = 1.0;
        return p;
    }
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Each source draws a signal from an alphabet of at most `max_alphabet`
/// letters. Either every adjacent party sees the whole signal (slot
/// alphabets all equal, diagonal pmf) or the signal is split into parts
/// whose alphabet sizes multiply to at most `max_alphabet`.
pub fn random_source(rng: &mut (impl Rng + ?Sized), slots: usize, max_alphabet: usize) -> SourceDistribution {
    if rng.random_bool(0.5) {
        let k = rng.random_range(2..=max_alphabet);
        let weights = random_pmf(rng, k);
        let size = k.pow(slots as u32);
        let mut pmf = vec![0.0; size];
        for (letter, w) in weights.into_iter().enumerate() {
            let index = (0..slots).fold(0, |acc, _| acc * k + letter);
            pmf[index] = w;
        }
        SourceDistribution { alphabets: vec![k; slots], pmf }
    } else {
        let k = rng.random_range(2..=max_alphabet);
        let mut alphabets = vec![1; slots];
        let first = rng.random_range(0..slots);
        if k == 4 && slots > 1 && rng.random_bool(0.5) {
            let second = (first + rng.random_range(1..slots)) % slots;
            alphabets[first] = 2;
            alphabets[second] = 2;
        } else {
            alphabets[first] = k;
        }
        let size = alphabets.iter().product();
        let pmf = random_pmf(rng, size);
        SourceDistribution { alphabets, pmf }
    }
}

pub fn random_model(rng: &mut (impl Rng + ?Sized), net: &Network, max_alphabet: usize, max_output: usize) -> ClassicalModel {
    let sources: Vec<SourceDistribution> =
        (0..net.n_sources()).map(|alpha| random_source(rng, net.block(alpha).len(), max_alphabet)).collect();
    let responses = (0..net.n_parties())
        .map(|i| {
            let inputs: usize = net
                .sources_of(i)
                .iter()
                .map(|&alpha| {
                    let slot = net.block(alpha).iter().position(|&p| p == i).unwrap();
                    sources[alpha].alphabets[slot]
                })
                .product();
            let alphabet = rng.random_range(2..=max_output);
            let table = (0..inputs).flat_map(|_| random_pmf(rng, alphabet)).collect();
            PartyResponse { alphabet, table }
        })
        .collect();
    ClassicalModel::new(net, sources, responses).unwrap()
}

pub fn random_functions(rng: &mut (impl Rng + ?Sized), alphabets: &[usize], complex: bool) -> OutputFunctions {
    let values = alphabets
        .iter()
        .map(|&k| {
            (0..k)
                .map(|_| if complex { complex_normal(rng) } else { Complex64::new(normal(rng), 0.0) })
                .collect()
        })
        .collect();
    OutputFunctions::new(values).unwrap()
}

pub fn random_permutation(rng: &mut (impl Rng + ?Sized), d: usize) -> Permutation {
    let mut images: Vec<u32> = (0..d as u32).collect();
    images.shuffle(rng);
    Permutation::new(images).unwrap()
}

pub fn random_unit_vector(rng: &mut (impl Rng + ?Sized), d: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d).map(|_| complex_normal(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_perms(rng: &mut (impl Rng + ?Sized), net: &Network, d: usize) -> BTreeMap<(usize, usize), Permutation> {
    let mut perms = BTreeMap::new();
    for alpha in 0..net.n_sources() {
        for &i in net.block(alpha) {
            perms.insert((i, alpha), random_permutation(rng, d));
        }
    }
    perms
}

pub fn random_twisted_spec(rng: &mut (impl Rng + ?Sized), net: &Network, d: usize) -> TwistedGramSpec {
    let vectors = (0..net.n_parties()).map(|_| random_unit_vector(rng, d)).collect();
    let perms = random_perms(rng, net, d);
    TwistedGramSpec::new(net, d, vectors, perms).unwrap()
}

pub fn random_inflation_spec(rng: &mut (impl Rng + ?Sized), net: &Network, d: usize) -> InflationSpec {
    let perms = random_perms(rng, net, d);
    InflationSpec::new(net, d, perms).unwrap()
}

/// Unit-diagonal Hermitian matrix whose bipartite blocks are PSD with
/// rank two: off-diagonal moduli drawn below one. Entries between parties
/// without a common source are zero.
pub fn random_unit_dual(rng: &mut (impl Rng + ?Sized), net: &Network) -> HermitianMatrix {
    let n = net.n_parties();
    let mut raw = CMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if net.connected(i, j) {
                let z = Complex64::from_polar(0.95 * rng.random::<f64>(), std::f64::consts::TAU * rng.random::<f64>());
                raw[(i, j)] = z;
                raw[(j, i)] = z.conj();
            }
        }
    }
    HermitianMatrix::new(raw).unwrap()
}

//! Exact simulation of classical networks with finite alphabets.
//!
//! Layout conventions:
//!
//! * A source sends one signal per adjacent party ("slot"); slots follow
//!   ascending party index. Its pmf is row-major over the slot values, first
//!   slot most significant.
//! * A party's input is the tuple of slot values it receives, one per
//!   adjacent source in ascending source index, first source most
//!   significant. Its response table is row-major over (input, output).
//! * A joint distribution table is row-major over the parties' outputs,
//!   first party most significant.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::network::Network;
use crate::numeric::{pairwise_sum, pairwise_sum_complex};

pub const DEFAULT_TABLE_CAP: usize = 10_000_000;
const PMF_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SourceDistribution {
    /// One alphabet size per adjacent party, ascending party index.
    pub alphabets: Vec<usize>,
    pub pmf: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartyResponse {
    pub alphabet: usize,
    /// `table[input * alphabet + a] = p(a | input)`.
    pub table: Vec<f64>,
}

/// Source distributions and party responses, validated against a network.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalModel {
    sources: Vec<SourceDistribution>,
    responses: Vec<PartyResponse>,
    /// Per party: (source, slot) pairs in input order.
    inputs: Vec<Vec<(usize, usize)>>,
    input_sizes: Vec<usize>,
}

/// `values[i][a] = f_i(a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFunctions {
    pub values: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    /// Original party indices covered by the table, ascending.
    parties: Vec<usize>,
    alphabets: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDeviation {
    pub i: usize,
    pub j: usize,
    /// `max |p(a_i, a_j) - p(a_i) p(a_j)|`.
    pub deviation: f64,
}

fn checked_product(sizes: &[usize], what: &str) -> Result<usize> {
    sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).ok_or_else(|| {
        Error::TooLarge(format!("{what} overflows: sizes {sizes:?}"))
    })
}

fn check_pmf(values: &[f64], what: &str) -> Result<()> {
    if let Some(x) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Model(format!("{what} has an invalid probability {x}")));
    }
    let total = pairwise_sum(values);
    if (total - 1.0).abs() > PMF_TOL {
        return Err(Error::Model(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl ClassicalModel {
    /// `sources[α]` and `responses[i]` follow network order.
    pub fn new(
        net: &Network,
        sources: Vec<SourceDistribution>,
        responses: Vec<PartyResponse>,
    ) -> Result<Self> {
        if sources.len() != net.n_sources() {
            return Err(Error::Model(format!(
                "{} source distributions for {} sources",
                sources.len(),
                net.n_sources()
            )));
        }
        if responses.len() != net.n_parties() {
            return Err(Error::Model(format!(
                "{} responses for {} parties",
                responses.len(),
                net.n_parties()
            )));
        }
        for (alpha, s) in sources.iter().enumerate() {
            let name = &net.source(alpha).name;
            if s.alphabets.len() != net.block(alpha).len() {
                return Err(Error::Model(format!(
                    "source '{name}' has {} slots but {} adjacent parties",
                    s.alphabets.len(),
                    net.block(alpha).len()
                )));
            }
            if s.alphabets.contains(&0) {
                return Err(Error::Model(format!("source '{name}' has an empty alphabet")));
            }
            let size = checked_product(&s.alphabets, "source alphabet")?;
            if s.pmf.len() != size {
                return Err(Error::Model(format!(
                    "source '{name}' pmf has {} entries, expected {size}",
                    s.pmf.len()
                )));
            }
            check_pmf(&s.pmf, &format!("pmf of source '{name}'"))?;
        }

        let mut inputs = Vec::with_capacity(net.n_parties());
        let mut input_sizes = Vec::with_capacity(net.n_parties());
        for (i, r) in responses.iter().enumerate() {
            let name = net.party_name(i);
            let slots: Vec<(usize, usize)> = net
                .sources_of(i)
                .iter()
                .map(|&alpha| {
                    let slot = net.block(alpha).iter().position(|&p| p == i).expect("adjacent");
                    (alpha, slot)
                })
                .collect();
            let sizes: Vec<usize> = slots.iter().map(|&(a, k)| sources[a].alphabets[k]).collect();
            let input_size = checked_product(&sizes, "party input alphabet")?;
            if r.alphabet == 0 {
                return Err(Error::Model(format!("party '{name}' has an empty output alphabet")));
            }
            let expected = input_size.checked_mul(r.alphabet).ok_or_else(|| {
                Error::TooLarge(format!("response table of party '{name}' overflows"))
            })?;
            if r.table.len() != expected {
                return Err(Error::Model(format!(
                    "response table of party '{name}' has {} entries, expected {expected}",
                    r.table.len()
                )));
            }
            for (input, row) in r.table.chunks(r.alphabet).enumerate() {
                check_pmf(row, &format!("response of party '{name}' to input {input}"))?;
            }
            inputs.push(slots);
            input_sizes.push(input_size);
        }
        Ok(Self { sources, responses, inputs, input_sizes })
    }

    pub fn sources(&self) -> &[SourceDistribution] {
        &self.sources
    }

    pub fn responses(&self) -> &[PartyResponse] {
        &self.responses
    }

    pub fn output_alphabets(&self) -> Vec<usize> {
        self.responses.iter().map(|r| r.alphabet).collect()
    }

    /// Number of joint signal tuples, `Π_α |pmf_α|`.
    pub fn signal_tuples(&self) -> Option<usize> {
        self.sources.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.pmf.len()))
    }

    /// Calls `visit(weight, inputs)` for every signal tuple of positive
    /// probability, where `inputs[i]` is party i's input index.
    fn for_each_signal_tuple(&self, mut visit: impl FnMut(f64, &[usize])) {
        let m = self.sources.len();
        let n = self.responses.len();
        let mut idx = vec![0usize; m];
        // slot values of each source for the current joint index
        let mut slot_values: Vec<Vec<usize>> =
            self.sources.iter().map(|s| vec![0; s.alphabets.len()]).collect();
        let mut party_inputs = vec![0usize; n];
        loop {
            let weight: f64 = idx.iter().zip(&self.sources).map(|(&k, s)| s.pmf[k]).product();
            if weight > 0.0 {
                for (alpha, s) in self.sources.iter().enumerate() {
                    let mut rest = idx[alpha];
                    for k in (0..s.alphabets.len()).rev() {
                        slot_values[alpha][k] = rest % s.alphabets[k];
                        rest /= s.alphabets[k];
                    }
                }
                for (i, slots) in self.inputs.iter().enumerate() {
                    let mut input = 0;
                    for &(alpha, k) in slots {
                        input = input * self.sources[alpha].alphabets[k] + slot_values[alpha][k];
                    }
                    party_inputs[i] = input;
                }
                visit(weight, &party_inputs);
            }
            // advance the mixed-radix counter, last source fastest
            let mut alpha = m;
            loop {
                if alpha == 0 {
                    return;
                }
                alpha -= 1;
                idx[alpha] += 1;
                if idx[alpha] < self.sources[alpha].pmf.len() {
                    break;
                }
                idx[alpha] = 0;
            }
        }
    }
}

impl OutputFunctions {
    pub fn new(values: Vec<Vec<Complex64>>) -> Result<Self> {
        if values.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("output function values must be finite".into()));
        }
        Ok(Self { values })
    }

    /// `f(a) = (-1)^a` for every party.
    pub fn parity(alphabets: &[usize]) -> Self {
        let values = alphabets
            .iter()
            .map(|&k| (0..k).map(|a| Complex64::new(if a % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect())
            .collect();
        Self { values }
    }

    fn check(&self, alphabets: &[usize]) -> Result<()> {
        if self.values.len() != alphabets.len() {
            return Err(Error::Model(format!(
                "{} output functions for {} parties",
                self.values.len(),
                alphabets.len()
            )));
        }
        for (i, (f, &k)) in self.values.iter().zip(alphabets).enumerate() {
            if f.len() != k {
                return Err(Error::Model(format!(
                    "output function {} has {} values for an alphabet of {k}",
                    i + 1,
                    f.len()
                )));
            }
        }
        Ok(())
    }
}

impl JointDistribution {
    /// Dense table over `alphabets` (row-major, first party most significant).
    pub fn new(alphabets: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if alphabets.is_empty() || alphabets.contains(&0) {
            return Err(Error::Model("joint distribution needs nonempty alphabets".into()));
        }
        let size = checked_product(&alphabets, "joint table")?;
        if probs.len() != size {
            return Err(Error::Model(format!(
                "joint table has {} entries, expected {size}",
                probs.len()
            )));
        }
        if let Some(x) = probs.iter().find(|x| !x.is_finite() || **x < -1e-15) {
            return Err(Error::Model(format!("invalid joint probability {x}")));
        }
        let probs: Vec<f64> = probs.into_iter().map(|x| x.max(0.0)).collect();
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("joint table sums to {total}, not 1")));
        }
        Ok(Self { parties: (0..alphabets.len()).collect(), alphabets, probs })
    }

    pub fn parties(&self) -> &[usize] {
        &self.parties
    }

    pub fn alphabets(&self) -> &[usize] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of an outcome tuple (one letter per covered party).
    pub fn prob(&self, letters: &[usize]) -> f64 {
        let mut idx = 0;
        for (&a, &k) in letters.iter().zip(&self.alphabets) {
            idx = idx * k + a;
        }
        self.probs[idx]
    }

    fn decode(&self, mut idx: usize, letters: &mut [usize]) {
        for k in (0..self.alphabets.len()).rev() {
            letters[k] = idx % self.alphabets[k];
            idx /= self.alphabets[k];
        }
    }
}

/// Exact output distribution with the default table cap.
pub fn build_joint_distribution(net: &Network, model: &ClassicalModel) -> Result<JointDistribution> {
    build_joint_distribution_capped(net, model, DEFAULT_TABLE_CAP)
}

/// `p(a) = Σ_s Π_α pmf_α(s_α) Π_i p(a_i | s)`, enumerated densely.
pub fn build_joint_distribution_capped(
    net: &Network,
    model: &ClassicalModel,
    cap: usize,
) -> Result<JointDistribution> {
    check_model(net, model)?;
    let alphabets = model.output_alphabets();
    let size = checked_product(&alphabets, "joint table").ok().filter(|&s| s <= cap);
    let tuples = model.signal_tuples().filter(|&t| t <= cap);
    let (Some(size), Some(_)) = (size, tuples) else {
        return Err(Error::TooLarge(format!(
            "joint table or signal enumeration too large (cap {cap} entries)"
        )));
    };

    let mut probs = vec![0.0; size];
    let mut term = Vec::with_capacity(size);
    let mut next = Vec::with_capacity(size);
    model.for_each_signal_tuple(|weight, inputs| {
        term.clear();
        term.push(weight);
        for (i, r) in model.responses.iter().enumerate() {
            let row = &r.table[inputs[i] * r.alphabet..(inputs[i] + 1) * r.alphabet];
            next.clear();
            for &t in &term {
                next.extend(row.iter().map(|&q| t * q));
            }
            std::mem::swap(&mut term, &mut next);
        }
        for (p, t) in probs.iter_mut().zip(&term) {
            *p += t;
        }
    });
    JointDistribution::new(alphabets, probs)
}

fn check_model(net: &Network, model: &ClassicalModel) -> Result<()> {
    if model.sources.len() != net.n_sources() || model.responses.len() != net.n_parties() {
        return Err(Error::Model("model was built for a different network".into()));
    }
    for (alpha, s) in model.sources.iter().enumerate() {
        if s.alphabets.len() != net.block(alpha).len() {
            return Err(Error::Model("model was built for a different network".into()));
        }
    }
    Ok(())
}

/// Distribution of the parties in `subset` (indices into `p.parties()`
/// order, i.e. original party indices for a full distribution).
pub fn marginal(p: &JointDistribution, subset: &[usize]) -> Result<JointDistribution> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("marginal over an empty subset".into()));
    }
    let mut keep: Vec<usize> = Vec::with_capacity(subset.len());
    for &party in subset {
        let pos = p.parties.iter().position(|&q| q == party).ok_or_else(|| {
            Error::InvalidArgument(format!("party {party} is not covered by the distribution"))
        })?;
        if !keep.contains(&pos) {
            keep.push(pos);
        }
    }
    keep.sort_unstable();
    let alphabets: Vec<usize> = keep.iter().map(|&k| p.alphabets[k]).collect();
    let size: usize = alphabets.iter().product();
    let mut probs = vec![0.0; size];
    let mut letters = vec![0; p.alphabets.len()];
    for (idx, &prob) in p.probs.iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        p.decode(idx, &mut letters);
        let mut target = 0;
        for &k in &keep {
            target = target * p.alphabets[k] + letters[k];
        }
        probs[target] += prob;
    }
    Ok(JointDistribution { parties: keep.iter().map(|&k| p.parties[k]).collect(), alphabets, probs })
}

/// `max |p(a_i, a_j) - p(a_i) p(a_j)|` for every pair without a common source.
pub fn independence_deviations(p: &JointDistribution, net: &Network) -> Result<Vec<PairDeviation>> {
    if p.parties.len() != net.n_parties() {
        return Err(Error::Dimension(format!(
            "distribution covers {} parties, network has {}",
            p.parties.len(),
            net.n_parties()
        )));
    }
    let n = net.n_parties();
    let singles: Vec<JointDistribution> =
        (0..n).map(|i| marginal(p, &[i])).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if net.connected(i, j) {
                continue;
            }
            let pair = marginal(p, &[i, j])?;
            let mut deviation: f64 = 0.0;
            for a in 0..p.alphabets[i] {
                for b in 0..p.alphabets[j] {
                    let d = pair.prob(&[a, b]) - singles[i].probs[a] * singles[j].probs[b];
                    deviation = deviation.max(d.abs());
                }
            }
            out.push(PairDeviation { i, j, deviation });
        }
    }
    Ok(out)
}

/// Pairs without a common source whose outputs are correlated beyond `tol`.
pub fn check_independence(p: &JointDistribution, net: &Network, tol: f64) -> Result<Vec<PairDeviation>> {
    Ok(independence_deviations(p, net)?.into_iter().filter(|d| d.deviation > tol).collect())
}

/// `C_ij = E[conj(f_i - E f_i) (f_j - E f_j)]` under `p`, accumulated as
/// `Σ_a p(a) x(a) x(a)†` with centered values so the result is PSD up to
/// rounding relative to its own size.
pub fn covariance_matrix(p: &JointDistribution, f: &OutputFunctions) -> Result<HermitianMatrix> {
    f.check(&p.alphabets)?;
    let n = p.alphabets.len();
    let mut means = Vec::with_capacity(n);
    for i in 0..n {
        let m = marginal(p, &[p.parties[i]])?;
        let terms: Vec<Complex64> = m.probs.iter().zip(&f.values[i]).map(|(&q, &v)| v * q).collect();
        let mass = pairwise_sum(&m.probs);
        means.push(pairwise_sum_complex(&terms) / mass);
    }
    let mut c = CMatrix::zeros(n, n);
    let mut letters = vec![0usize; n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (index, &q) in p.probs.iter().enumerate() {
        if q > 0.0 {
            let mut rest = index;
            for i in (0..n).rev() {
                letters[i] = rest % p.alphabets[i];
                rest /= p.alphabets[i];
            }
            for i in 0..n {
                x[i] = f.values[i][letters[i]] - means[i];
            }
            for i in 0..n {
                for j in i..n {
                    c[(i, j)] += x[i].conj() * x[j] * q;
                }
            }
        }
    }
    for i in 0..n {
        c[(i, i)] = Complex64::new(c[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            c[(j, i)] = c[(i, j)].conj();
        }
    }
    Ok(HermitianMatrix::hermitian_part(c))
}

/// Covariance computed directly from the model, without the output table:
/// outputs are conditionally independent given the signals, so
/// `E[conj(f_i) f_j] = E_s[conj(g_i(s)) g_j(s)]` for `i ≠ j` with
/// `g_i(s) = E[f_i | s]`.
pub fn covariance_from_model(
    net: &Network,
    model: &ClassicalModel,
    f: &OutputFunctions,
) -> Result<HermitianMatrix> {
    covariance_from_model_capped(net, model, f, DEFAULT_TABLE_CAP)
}

pub fn covariance_from_model_capped(
    net: &Network,
    model: &ClassicalModel,
    f: &OutputFunctions,
    cap: usize,
) -> Result<HermitianMatrix> {
    check_model(net, model)?;
    f.check(&model.output_alphabets())?;
    if model.signal_tuples().is_none_or(|t| t > cap) {
        return Err(Error::TooLarge(format!("signal enumeration too large (cap {cap} tuples)")));
    }
    let n = net.n_parties();
    let cond_mean: Vec<Vec<Complex64>> = model
        .responses
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.table
                .chunks(r.alphabet)
                .map(|row| {
                    let t: Vec<Complex64> = row.iter().zip(&f.values[i]).map(|(&q, &v)| v * q).collect();
                    pairwise_sum_complex(&t)
                })
                .collect()
        })
        .collect();

    let mut mean = vec![Complex64::new(0.0, 0.0); n];
    let mut mass = 0.0;
    model.for_each_signal_tuple(|weight, inputs| {
        mass += weight;
        for i in 0..n {
            mean[i] += cond_mean[i][inputs[i]] * weight;
        }
    });
    mean.iter_mut().for_each(|m| *m /= mass);

    // conditional variance around the unconditional mean, per input
    let spread: Vec<Vec<f64>> = model
        .responses
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.table
                .chunks(r.alphabet)
                .map(|row| {
                    let s: Vec<f64> = row
                        .iter()
                        .zip(&f.values[i])
                        .map(|(&q, &v)| q * (v - mean[i]).norm_sqr())
                        .collect();
                    pairwise_sum(&s)
                })
                .collect()
        })
        .collect();

    // C = Σ_s w(s) [x(s) x(s)† off the diagonal, E|f_i - mean_i|² on it],
    // x_i(s) = E[f_i | s] - mean_i
    let mut c = CMatrix::zeros(n, n);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    model.for_each_signal_tuple(|weight, inputs| {
        for i in 0..n {
            x[i] = cond_mean[i][inputs[i]] - mean[i];
        }
        for i in 0..n {
            c[(i, i)] += Complex64::from(spread[i][inputs[i]] * weight);
            for j in (i + 1)..n {
                c[(i, j)] += x[i].conj() * x[j] * weight;
            }
        }
    });
    for i in 0..n {
        c[(i, i)] = Complex64::new(c[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            c[(j, i)] = c[(i, j)].conj();
        }
    }
    Ok(HermitianMatrix::hermitian_part(c))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModelJson {
    pub alphabets: Vec<usize>,
    pub pmf: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseJson {
    pub alphabet: usize,
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionJson {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub sources: BTreeMap<String, SourceModelJson>,
    pub responses: BTreeMap<String, ResponseJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<BTreeMap<String, FunctionJson>>,
}

impl ModelJson {
    pub fn into_model(self, net: &Network) -> Result<(ClassicalModel, Option<OutputFunctions>)> {
        for name in self.sources.keys() {
            if net.source_index(name).is_none() {
                return Err(Error::Parse(format!("unknown source '{name}' in model")));
            }
        }
        for name in self.responses.keys() {
            if net.party_index(name).is_none() {
                return Err(Error::Parse(format!("unknown party '{name}' in model responses")));
            }
        }
        let mut sources = Vec::with_capacity(net.n_sources());
        for s in net.sources() {
            let json = self
                .sources
                .get(&s.name)
                .ok_or_else(|| Error::Parse(format!("missing model for source '{}'", s.name)))?;
            sources.push(SourceDistribution { alphabets: json.alphabets.clone(), pmf: json.pmf.clone() });
        }
        let mut responses = Vec::with_capacity(net.n_parties());
        for name in net.party_names() {
            let json = self
                .responses
                .get(name)
                .ok_or_else(|| Error::Parse(format!("missing response for party '{name}'")))?;
            responses.push(PartyResponse { alphabet: json.alphabet, table: json.table.clone() });
        }
        let model = ClassicalModel::new(net, sources, responses)?;

        let functions = match self.functions {
            None => None,
            Some(map) => {
                for name in map.keys() {
                    if net.party_index(name).is_none() {
                        return Err(Error::Parse(format!("unknown party '{name}' in model functions")));
                    }
                }
                let mut values = Vec::with_capacity(net.n_parties());
                for name in net.party_names() {
                    let json = map
                        .get(name)
                        .ok_or_else(|| Error::Parse(format!("missing function for party '{name}'")))?;
                    if json.im.as_ref().is_some_and(|im| im.len() != json.re.len()) {
                        return Err(Error::Parse(format!(
                            "function of party '{name}' has mismatched re/im lengths"
                        )));
                    }
                    let im = json.im.clone().unwrap_or_else(|| vec![0.0; json.re.len()]);
                    values.push(json.re.iter().zip(im).map(|(&a, b)| Complex64::new(a, b)).collect());
                }
                let f = OutputFunctions::new(values)?;
                f.check(&model.output_alphabets())?;
                Some(f)
            }
        };
        Ok((model, functions))
    }

    pub fn from_model(net: &Network, model: &ClassicalModel, f: Option<&OutputFunctions>) -> Self {
        let sources = net
            .sources()
            .iter()
            .zip(&model.sources)
            .map(|(s, d)| (s.name.clone(), SourceModelJson { alphabets: d.alphabets.clone(), pmf: d.pmf.clone() }))
            .collect();
        let responses = net
            .party_names()
            .iter()
            .zip(&model.responses)
            .map(|(name, r)| (name.clone(), ResponseJson { alphabet: r.alphabet, table: r.table.clone() }))
            .collect();
        let functions = f.map(|f| {
            net.party_names()
                .iter()
                .zip(&f.values)
                .map(|(name, v)| {
                    let re = v.iter().map(|z| z.re).collect();
                    let im = v.iter().map(|z| z.im).collect();
                    (name.clone(), FunctionJson { re, im: Some(im) })
                })
                .collect()
        });
        Self { sources, responses, functions }
    }
}

pub fn parse_model(text: &str, net: &Network) -> Result<(ClassicalModel, Option<OutputFunctions>)> {
    let json: ModelJson = serde_json::from_str(text)?;
    json.into_model(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::catalog::{path3, triangle};
    use proptest::prelude::*;

    fn uniform_bits(slots: usize) -> SourceDistribution {
        let size = 1 << slots;
        SourceDistribution { alphabets: vec![2; slots], pmf: vec![1.0 / size as f64; size] }
    }

    /// One uniform bit sent to both adjacent parties.
    fn shared_bit() -> SourceDistribution {
        SourceDistribution { alphabets: vec![2, 2], pmf: vec![0.5, 0.0, 0.0, 0.5] }
    }

    fn copy_response(inputs: usize) -> PartyResponse {
        // deterministic: output = input index
        let mut table = vec![0.0; inputs * inputs];
        for x in 0..inputs {
            table[x * inputs + x] = 1.0;
        }
        PartyResponse { alphabet: inputs, table }
    }

    /// A1 outputs s_α, A2 outputs the pair (s_α, s_β), A3 outputs s_β.
    fn path_model() -> ClassicalModel {
        ClassicalModel::new(
            &path3(),
            vec![shared_bit(), shared_bit()],
            vec![copy_response(2), copy_response(4), copy_response(2)],
        )
        .unwrap()
    }

    fn path_functions() -> OutputFunctions {
        let pm = |a: usize| if a % 2 == 0 { 1.0 } else { -1.0 };
        let pair = (0..4).map(|a| Complex64::from(pm(a / 2) + pm(a % 2))).collect();
        OutputFunctions::new(vec![
            vec![Complex64::from(1.0), Complex64::from(-1.0)],
            pair,
            vec![Complex64::from(1.0), Complex64::from(-1.0)],
        ])
        .unwrap()
    }

    fn bit_pair() -> (Network, ClassicalModel) {
        let net = Network::from_names(&["A1", "A2"], &[("alpha", &["A1", "A2"])]).unwrap();
        let model = ClassicalModel::new(&net, vec![shared_bit()], vec![copy_response(2), copy_response(2)]).unwrap();
        (net, model)
    }

    #[test]
    fn path_distribution_is_uniform_on_consistent_support() {
        let p = build_joint_distribution(&path3(), &path_model()).unwrap();
        assert_eq!(p.alphabets(), &[2, 4, 2]);
        for a1 in 0..2 {
            for a2 in 0..4 {
                for a3 in 0..2 {
                    let consistent = a2 / 2 == a1 && a2 % 2 == a3;
                    let expected = if consistent { 0.25 } else { 0.0 };
                    assert_eq!(p.prob(&[a1, a2, a3]), expected);
                }
            }
        }
        assert!(check_independence(&p, &path3(), 1e-12).unwrap().is_empty());
    }

    #[test]
    fn path_covariance() {
        let net = path3();
        let c = covariance_matrix(&build_joint_distribution(&net, &path_model()).unwrap(), &path_functions())
            .unwrap();
        let expected = [[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((c.get(i, j) - Complex64::from(expected[i][j])).norm() < 1e-14);
            }
        }
        let direct = covariance_from_model(&net, &path_model(), &path_functions()).unwrap();
        assert!((&c - &direct).max_abs() < 1e-14);
    }

    #[test]
    fn perfect_correlation() {
        let (net, model) = bit_pair();
        let p = build_joint_distribution(&net, &model).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.0, 0.0, 0.5]);
        let first = marginal(&p, &[0]).unwrap();
        assert_eq!(first.probs(), &[0.5, 0.5]);
        assert_eq!(marginal(&p, &[0, 1]).unwrap(), p);
        let c = covariance_matrix(&p, &OutputFunctions::parity(&[2, 2])).unwrap();
        assert!((&c - &HermitianMatrix::ones(2)).max_abs() < 1e-15);
        assert!(marginal(&p, &[]).is_err());
    }

    #[test]
    fn constant_outputs_give_a_point_mass() {
        let net = triangle();
        let constant = PartyResponse { alphabet: 2, table: [1.0, 0.0].repeat(4) };
        let model =
            ClassicalModel::new(&net, vec![uniform_bits(2); 3], vec![constant.clone(), constant.clone(), constant])
                .unwrap();
        let p = build_joint_distribution(&net, &model).unwrap();
        assert_eq!(p.prob(&[0, 0, 0]), 1.0);
        // every pair shares a source
        assert!(independence_deviations(&p, &net).unwrap().is_empty());
    }

    #[test]
    fn independent_bits_have_identity_covariance() {
        let net = Network::from_names(&["A1", "A2"], &[("a", &["A1"]), ("b", &["A2"])]).unwrap();
        let model =
            ClassicalModel::new(&net, vec![uniform_bits(1), uniform_bits(1)], vec![copy_response(2), copy_response(2)])
                .unwrap();
        let p = build_joint_distribution(&net, &model).unwrap();
        let c = covariance_matrix(&p, &OutputFunctions::parity(&[2, 2])).unwrap();
        assert!((&c - &HermitianMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn correlated_pair_without_source_is_flagged() {
        let p = JointDistribution::new(
            vec![2, 2, 2],
            vec![0.25, 0.0, 0.25, 0.0, 0.0, 0.25, 0.0, 0.25],
        )
        .unwrap();
        let v = check_independence(&p, &path3(), 1e-12).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].i, v[0].j), (0, 2));
        assert!((v[0].deviation - 0.25).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        let net = path3();
        let bad_pmf = SourceDistribution { alphabets: vec![2, 2], pmf: vec![0.5, 0.5, 0.5, 0.0] };
        let err = ClassicalModel::new(&net, vec![bad_pmf, uniform_bits(2)], vec![copy_response(2), copy_response(4), copy_response(2)]);
        assert!(err.is_err());
        let short = PartyResponse { alphabet: 2, table: vec![1.0, 0.0] };
        assert!(ClassicalModel::new(&net, vec![uniform_bits(2); 2], vec![short, copy_response(4), copy_response(2)]).is_err());
        let huge = SourceDistribution { alphabets: vec![usize::MAX, 2], pmf: vec![1.0] };
        assert!(ClassicalModel::new(&net, vec![huge, uniform_bits(2)], vec![copy_response(2), copy_response(4), copy_response(2)]).is_err());
    }

    #[test]
    fn table_cap() {
        let err = build_joint_distribution_capped(&path3(), &path_model(), 8).unwrap_err();
        assert!(err.to_string().contains("too large"));
    }

    #[test]
    fn model_json_round_trip() {
        let net = path3();
        let json = ModelJson::from_model(&net, &path_model(), Some(&path_functions()));
        let text = serde_json::to_string(&json).unwrap();
        let (model, f) = parse_model(&text, &net).unwrap();
        assert_eq!(model, path_model());
        assert_eq!(f.unwrap(), path_functions());
        assert!(parse_model(r#"{"sources":{},"responses":{}}"#, &net).is_err());
    }

    fn arb_model() -> impl Strategy<Value = (ClassicalModel, OutputFunctions, u64)> {
        // random model on the path network, alphabets up to 3
        (any::<u64>(), prop::collection::vec(1usize..=3, 4), prop::collection::vec(1usize..=3, 3)).prop_map(
            |(seed, slots, outs)| {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut pmf = |k: usize| {
                    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / s).collect::<Vec<f64>>()
                };
                let sources = vec![
                    SourceDistribution { alphabets: vec![slots[0], slots[1]], pmf: pmf(slots[0] * slots[1]) },
                    SourceDistribution { alphabets: vec![slots[2], slots[3]], pmf: pmf(slots[2] * slots[3]) },
                ];
                let input_sizes = [slots[0], slots[1] * slots[2], slots[3]];
                let responses = (0..3)
                    .map(|i| PartyResponse {
                        alphabet: outs[i],
                        table: (0..input_sizes[i]).flat_map(|_| pmf(outs[i])).collect(),
                    })
                    .collect();
                let model = ClassicalModel::new(&path3(), sources, responses).unwrap();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
                let values = outs
                    .iter()
                    .map(|&k| (0..k).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
                    .collect();
                (model, OutputFunctions::new(values).unwrap(), seed)
            },
        )
    }

    proptest! {
        #[test]
        fn covariance_properties((model, f, seed) in arb_model()) {
            let net = path3();
            let p = build_joint_distribution(&net, &model).unwrap();
            let c = covariance_matrix(&p, &f).unwrap();
            prop_assert!(c.is_psd(1e-9));
            prop_assert!(c.get(0, 2).norm() < 1e-10);
            prop_assert!(check_independence(&p, &net, 1e-12).unwrap().is_empty());
            let direct = covariance_from_model(&net, &model, &f).unwrap();
            prop_assert!((&c - &direct).max_abs() < 1e-12);

            let scale = Complex64::from_polar(1.5, (seed % 7) as f64);
            let mut scaled = f.clone();
            for v in &mut scaled.values[1] {
                *v *= scale;
            }
            let cs = covariance_matrix(&p, &scaled).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let mut expected = c.get(i, j);
                    if i == 1 { expected *= scale.conj(); }
                    if j == 1 { expected *= scale; }
                    prop_assert!((cs.get(i, j) - expected).norm() < 1e-12);
                }
            }
        }
    }
}

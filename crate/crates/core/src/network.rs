//! Bipartite source/party networks.
//!
//! A network is a list of named parties and a list of named sources, each
//! source being adjacent to a set of parties. Party order in the input fixes
//! row/column order of every matrix downstream; source order fixes the order
//! of decomposition terms and solver sweeps.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Source {
    pub name: String,
    /// Adjacent party indices, ascending.
    pub parties: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    party_names: Vec<String>,
    sources: Vec<Source>,
    /// For each party, the adjacent source indices, ascending.
    party_sources: Vec<Vec<usize>>,
}

/// Pairs of parties sharing more than one source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NdcsReport {
    pub is_ndcs: bool,
    pub violations: Vec<NdcsViolation>,
}

/// Parties `i < j` with two distinct common sources `alpha < beta`
/// (the first two, when there are more).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NdcsViolation {
    pub i: usize,
    pub j: usize,
    pub alpha: usize,
    pub beta: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkJson {
    pub parties: Vec<String>,
    pub sources: Vec<SourceJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceJson {
    pub name: String,
    pub parties: Vec<String>,
}

impl Network {
    /// Builds and validates a network from party names and
    /// `(source name, adjacent party indices)` pairs.
    pub fn new(party_names: Vec<String>, sources: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let n = party_names.len();
        if n == 0 {
            return Err(Error::Network("a network needs at least one party".into()));
        }
        let mut seen = HashMap::new();
        for (i, name) in party_names.iter().enumerate() {
            if let Some(prev) = seen.insert(name.as_str(), i) {
                return Err(Error::Network(format!(
                    "duplicate party name '{name}' (positions {prev} and {i})"
                )));
            }
        }
        if sources.is_empty() {
            return Err(Error::Network("a network needs at least one source".into()));
        }

        let mut source_names = HashMap::new();
        let mut checked = Vec::with_capacity(sources.len());
        for (alpha, (name, parties)) in sources.into_iter().enumerate() {
            if let Some(prev) = source_names.insert(name.clone(), alpha) {
                return Err(Error::Network(format!(
                    "duplicate source name '{name}' (positions {prev} and {alpha})"
                )));
            }
            if parties.is_empty() {
                return Err(Error::Network(format!("isolated source '{name}' has no parties")));
            }
            let mut set = BTreeSet::new();
            for &i in &parties {
                if i >= n {
                    return Err(Error::Network(format!(
                        "unknown party index {i} in source '{name}'"
                    )));
                }
                if !set.insert(i) {
                    return Err(Error::Network(format!(
                        "duplicate party '{}' in source '{name}'",
                        party_names[i]
                    )));
                }
            }
            checked.push(Source { name, parties: set.into_iter().collect() });
        }

        let mut party_sources = vec![Vec::new(); n];
        for (alpha, s) in checked.iter().enumerate() {
            for &i in &s.parties {
                party_sources[i].push(alpha);
            }
        }
        if let Some(i) = party_sources.iter().position(Vec::is_empty) {
            return Err(Error::Network(format!(
                "isolated party '{}' is not adjacent to any source",
                party_names[i]
            )));
        }

        for (a, sa) in checked.iter().enumerate() {
            for (b, sb) in checked.iter().enumerate() {
                if a != b && is_subset(&sa.parties, &sb.parties) {
                    return Err(Error::Network(format!(
                        "redundant source: parties of '{}' are contained in those of '{}'",
                        sa.name, sb.name
                    )));
                }
            }
        }

        Ok(Self { party_names, sources: checked, party_sources })
    }

    /// Convenience constructor from names.
    pub fn from_names(parties: &[&str], sources: &[(&str, &[&str])]) -> Result<Self> {
        let json = NetworkJson {
            parties: parties.iter().map(|s| s.to_string()).collect(),
            sources: sources
                .iter()
                .map(|(name, ps)| SourceJson {
                    name: name.to_string(),
                    parties: ps.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        };
        Self::from_json(json)
    }

    pub fn from_json(json: NetworkJson) -> Result<Self> {
        let index: HashMap<&str, usize> =
            json.parties.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let mut sources = Vec::with_capacity(json.sources.len());
        for s in &json.sources {
            let mut parties = Vec::with_capacity(s.parties.len());
            for p in &s.parties {
                let i = *index.get(p.as_str()).ok_or_else(|| {
                    Error::Network(format!("unknown party '{p}' in source '{}'", s.name))
                })?;
                parties.push(i);
            }
            sources.push((s.name.clone(), parties));
        }
        Self::new(json.parties.clone(), sources)
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            parties: self.party_names.clone(),
            sources: self
                .sources
                .iter()
                .map(|s| SourceJson {
                    name: s.name.clone(),
                    parties: s.parties.iter().map(|&i| self.party_names[i].clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn n_parties(&self) -> usize {
        self.party_names.len()
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn party_names(&self) -> &[String] {
        &self.party_names
    }

    pub fn party_name(&self, i: usize) -> &str {
        &self.party_names[i]
    }

    pub fn party_index(&self, name: &str) -> Option<usize> {
        self.party_names.iter().position(|p| p == name)
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn source(&self, alpha: usize) -> &Source {
        &self.sources[alpha]
    }

    pub fn source_index(&self, name: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.name == name)
    }

    /// Parties adjacent to `alpha`, ascending: the index set of the α-block.
    pub fn block(&self, alpha: usize) -> &[usize] {
        &self.sources[alpha].parties
    }

    /// Sources adjacent to party `i`, ascending.
    pub fn sources_of(&self, i: usize) -> &[usize] {
        &self.party_sources[i]
    }

    pub fn is_adjacent(&self, alpha: usize, i: usize) -> bool {
        self.sources[alpha].parties.binary_search(&i).is_ok()
    }

    pub fn common_sources(&self, i: usize, j: usize) -> Vec<usize> {
        let (a, b) = (&self.party_sources[i], &self.party_sources[j]);
        a.iter().copied().filter(|s| b.binary_search(s).is_ok()).collect()
    }

    /// True when `i` and `j` share at least one source (or `i == j`).
    pub fn connected(&self, i: usize, j: usize) -> bool {
        i == j || !self.common_sources(i, j).is_empty()
    }

    pub fn is_ndcs(&self) -> NdcsReport {
        let n = self.n_parties();
        let mut violations = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let common = self.common_sources(i, j);
                if common.len() >= 2 {
                    violations.push(NdcsViolation { i, j, alpha: common[0], beta: common[1] });
                }
            }
        }
        NdcsReport { is_ndcs: violations.is_empty(), violations }
    }

    /// The unique common source of `i != j`, if any. Errors when the pair
    /// shares more than one source.
    pub fn common_source(&self, i: usize, j: usize) -> Result<Option<usize>> {
        let common = self.common_sources(i, j);
        match common.as_slice() {
            [] => Ok(None),
            [alpha] => Ok(Some(*alpha)),
            _ => Err(Error::Unsupported(format!(
                "ambiguous common source: parties '{}' and '{}' share {} sources",
                self.party_names[i],
                self.party_names[j],
                common.len()
            ))),
        }
    }

    pub fn all_bipartite(&self) -> bool {
        self.sources.iter().all(|s| s.parties.len() == 2)
    }

    /// Errors with `what` unless every source has exactly two parties.
    pub(crate) fn require_bipartite(&self, what: &str) -> Result<()> {
        match self.sources.iter().find(|s| s.parties.len() != 2) {
            None => Ok(()),
            Some(s) => Err(Error::Unsupported(format!(
                "{what}: source '{}' has {} parties",
                s.name,
                s.parties.len()
            ))),
        }
    }

    pub(crate) fn require_ndcs(&self, what: &str) -> Result<()> {
        let report = self.is_ndcs();
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Unsupported(format!(
                "{what}: parties '{}' and '{}' share sources '{}' and '{}'",
                self.party_names[v.i],
                self.party_names[v.j],
                self.sources[v.alpha].name,
                self.sources[v.beta].name
            ))),
        }
    }
}

/// Parses and validates network JSON:
/// `{"parties": [...], "sources": [{"name": ..., "parties": [...]}, ...]}`.
pub fn parse_network(text: &str) -> Result<Network> {
    let json: NetworkJson = serde_json::from_str(text)?;
    Network::from_json(json)
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Small named networks used in examples and tests.
pub mod catalog {
    use super::Network;

    /// `A1 - alpha - A2 - beta - A3`.
    pub fn path3() -> Network {
        Network::from_names(
            &["A1", "A2", "A3"],
            &[("alpha", &["A1", "A2"]), ("beta", &["A2", "A3"])],
        )
        .expect("path network is valid")
    }

    /// Three parties, one bipartite source per pair: `alpha = {A1, A2}`,
    /// `beta = {A2, A3}`, `gamma = {A1, A3}`.
    pub fn triangle() -> Network {
        Network::from_names(
            &["A1", "A2", "A3"],
            &[
                ("alpha", &["A1", "A2"]),
                ("beta", &["A2", "A3"]),
                ("gamma", &["A1", "A3"]),
            ],
        )
        .expect("triangle network is valid")
    }

    /// Path on `n` parties with bipartite sources `s{k} = {A{k}, A{k+1}}`.
    pub fn path(n: usize) -> Network {
        assert!(n >= 2);
        let parties: Vec<String> = (1..=n).map(|k| format!("A{k}")).collect();
        let sources = (0..n - 1).map(|k| (format!("s{}", k + 1), vec![k, k + 1])).collect();
        Network::new(parties, sources).expect("path network is valid")
    }

    /// Cycle on `n >= 3` parties.
    pub fn cycle(n: usize) -> Network {
        assert!(n >= 3);
        let parties: Vec<String> = (1..=n).map(|k| format!("A{k}")).collect();
        let sources = (0..n).map(|k| (format!("s{}", k + 1), vec![k, (k + 1) % n])).collect();
        Network::new(parties, sources).expect("cycle network is valid")
    }

    /// Star: party `A1` is the hub, one bipartite source to each leaf.
    pub fn star(n: usize) -> Network {
        assert!(n >= 2);
        let parties: Vec<String> = (1..=n).map(|k| format!("A{k}")).collect();
        let sources = (1..n).map(|k| (format!("s{k}"), vec![0, k])).collect();
        Network::new(parties, sources).expect("star network is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;

    fn err_message(r: Result<Network>) -> String {
        r.expect_err("expected an error").to_string()
    }

    #[test]
    fn parses_path_and_triangle() {
        let path = parse_network(
            r#"{"parties": ["A1","A2","A3"],
                "sources": [{"name":"alpha","parties":["A1","A2"]},
                            {"name":"beta","parties":["A2","A3"]}]}"#,
        )
        .unwrap();
        assert_eq!(path.n_parties(), 3);
        assert_eq!(path.n_sources(), 2);
        assert_eq!(path, path3());
        assert_eq!(triangle().n_sources(), 3);
    }

    #[test]
    fn rejects_invalid_networks() {
        let redundant = err_message(Network::from_names(
            &["A1", "A2", "A3"],
            &[("small", &["A1", "A2"]), ("big", &["A1", "A2", "A3"])],
        ));
        assert!(redundant.contains("redundant source"), "{redundant}");
        assert!(redundant.contains("small") && redundant.contains("big"), "{redundant}");

        let identical = err_message(Network::from_names(
            &["A1", "A2"],
            &[("a", &["A1", "A2"]), ("b", &["A2", "A1"])],
        ));
        assert!(identical.contains("redundant source"), "{identical}");

        let isolated = err_message(Network::from_names(&["A1", "A2", "A3"], &[("a", &["A1", "A2"])]));
        assert!(isolated.contains("isolated"), "{isolated}");

        let empty_source = err_message(Network::from_names(&["A1"], &[("a", &["A1"]), ("b", &[])]));
        assert!(empty_source.contains("isolated"), "{empty_source}");

        let unknown = err_message(Network::from_names(&["A1", "A2"], &[("a", &["A1", "B"])]));
        assert!(unknown.contains("unknown party"), "{unknown}");

        let duplicate = err_message(Network::from_names(&["A1", "A1"], &[("a", &["A1"])]));
        assert!(duplicate.contains("duplicate"), "{duplicate}");

        assert!(parse_network("{\"parties\": [").is_err());
        assert!(parse_network(r#"{"parties": [], "sources": []}"#).is_err());
    }

    #[test]
    fn ndcs_detection() {
        assert!(triangle().is_ndcs().is_ndcs);
        let single = Network::from_names(&["A1", "A2"], &[("a", &["A1", "A2"])]).unwrap();
        assert!(single.is_ndcs().is_ndcs);

        let double = Network::from_names(
            &["A1", "A2", "A3", "A4"],
            &[("a", &["A1", "A2", "A3"]), ("b", &["A1", "A2", "A4"])],
        )
        .unwrap();
        let report = double.is_ndcs();
        assert!(!report.is_ndcs);
        assert_eq!(report.violations, vec![NdcsViolation { i: 0, j: 1, alpha: 0, beta: 1 }]);
        assert!(double.common_source(0, 1).unwrap_err().to_string().contains("ambiguous"));
    }

    #[test]
    fn common_source_examples() {
        let path = path3();
        assert_eq!(path.common_source(0, 1).unwrap(), Some(0));
        assert_eq!(path.common_source(0, 2).unwrap(), None);
        let tri = triangle();
        assert_eq!(tri.common_source(0, 2).unwrap(), Some(2));
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(tri.common_source(i, j).unwrap(), tri.common_source(j, i).unwrap());
                }
            }
        }
    }

    #[test]
    fn bipartite_detection() {
        assert!(path3().all_bipartite());
        assert!(triangle().all_bipartite());
        let tripartite = Network::from_names(&["A1", "A2", "A3"], &[("a", &["A1", "A2", "A3"])]).unwrap();
        assert!(!tripartite.all_bipartite());
        for net in [path(5), cycle(6), star(7)] {
            assert!(net.all_bipartite());
            assert!(net.is_ndcs().is_ndcs);
        }
    }

    #[test]
    fn json_round_trip() {
        let tri = triangle();
        let text = serde_json::to_string(&tri.to_json()).unwrap();
        assert_eq!(parse_network(&text).unwrap(), tri);
    }
}

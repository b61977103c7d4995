use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::checker::CheckerSpec;
use crate::error::{Error, Result};
use crate::generators::{GeneratorConfig, GeneratorId};
use crate::model::AssetTree;

/// Simulation parameters, as read from a TOML file or a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub max_iterations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    /// Generator ids in selection order. Empty means "the distribution's keys".
    #[serde(default)]
    pub generators: Vec<String>,
    /// Selection probability per generator id. Empty means uniform.
    #[serde(default)]
    pub distribution: BTreeMap<String, f64>,
    pub max_retries: u32,
    #[serde(default)]
    pub checker: CheckerSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_discard_prob")]
    pub sensibility_discard_prob: f64,
}

fn default_discard_prob() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    UniformGenerators,
    UniformOperations,
    GrowingSystem,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::UniformGenerators,
        Preset::UniformOperations,
        Preset::GrowingSystem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::UniformGenerators => "uniform-generators",
            Preset::UniformOperations => "uniform-operations",
            Preset::GrowingSystem => "growing-system",
        }
    }

    pub fn probabilities(self) -> [(GeneratorId, f64); 7] {
        use GeneratorId::*;
        let ops = 0.98 / 3.0;
        match self {
            Preset::UniformGenerators => [
                (RemoveFeature, 0.196),
                (MutAdd, 0.196),
                (MutReplace, 0.196),
                (MutDelete, 0.196),
                (Transplant, 0.196),
                (CloneVariant, 0.01),
                (CloneFeature, 0.01),
            ],
            Preset::UniformOperations => [
                (RemoveFeature, ops),
                (MutAdd, ops / 3.0),
                (MutReplace, ops / 3.0),
                (MutDelete, ops / 3.0),
                (Transplant, ops),
                (CloneVariant, 0.01),
                (CloneFeature, 0.01),
            ],
            Preset::GrowingSystem => [
                (RemoveFeature, 0.09),
                (MutAdd, 0.2),
                (MutReplace, 0.2),
                (MutDelete, 0.2),
                (Transplant, 0.29),
                (CloneVariant, 0.01),
                (CloneFeature, 0.01),
            ],
        }
    }

    pub fn config(self) -> RunConfig {
        let probs = self.probabilities();
        RunConfig {
            max_iterations: 200,
            termination: None,
            generators: probs.iter().map(|(g, _)| g.to_string()).collect(),
            distribution: probs.iter().map(|(g, p)| (g.to_string(), *p)).collect(),
            max_retries: 50,
            checker: CheckerSpec::Bundled,
            seed: 0,
            sensibility_discard_prob: 0.5,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

impl RunConfig {
    /// Parses a TOML document. Keys it sets override those of `base`.
    pub fn from_toml(text: &str, base: Option<Preset>) -> Result<RunConfig> {
        let overlay: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut table = match base {
            Some(p) => match toml::Value::try_from(p.config()).map_err(|e| Error::Config(e.to_string()))? {
                toml::Value::Table(t) => t,
                _ => unreachable!("a struct serializes to a table"),
            },
            None => toml::Table::new(),
        };
        table.extend(overlay);
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_retries < 1 {
            return Err(Error::Config("max_retries must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.sensibility_discard_prob) {
            return Err(Error::Config("sensibility_discard_prob must lie in [0, 1]".into()));
        }
        if let CheckerSpec::External { cmd, timeout_s } = &self.checker {
            if cmd.trim().is_empty() || *timeout_s == 0 {
                return Err(Error::Config("external checker needs a command and a positive timeout".into()));
            }
        }
        self.selection().map(|_| ())
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            sensibility_discard_prob: self.sensibility_discard_prob,
        }
    }

    /// The validated categorical distribution over generators.
    pub fn selection(&self) -> Result<Distribution> {
        let mut order = Vec::new();
        for g in &self.generators {
            let id: GeneratorId = g.parse()?;
            if order.contains(&id) {
                return Err(Error::BadDistribution(format!("generator `{g}` listed twice")));
            }
            order.push(id);
        }
        let mut probs = BTreeMap::new();
        for (g, p) in &self.distribution {
            let id: GeneratorId = g.parse()?;
            if !order.is_empty() && !order.contains(&id) {
                return Err(Error::BadDistribution(format!("`{g}` is not in the generator list")));
            }
            probs.insert(id, *p);
        }
        if order.is_empty() {
            order = if probs.is_empty() {
                GeneratorId::ALL.to_vec()
            } else {
                GeneratorId::ALL.into_iter().filter(|g| probs.contains_key(g)).collect()
            };
        }
        let entries = if probs.is_empty() {
            let p = 1.0 / order.len() as f64;
            order.iter().map(|g| (*g, p)).collect()
        } else {
            order.iter().map(|g| (*g, probs.get(g).copied().unwrap_or(0.0))).collect()
        };
        Distribution::new(entries)
    }
}

/// Categorical distribution over generators, in selection order.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    entries: Vec<(GeneratorId, f64)>,
}

impl Distribution {
    pub fn new(entries: Vec<(GeneratorId, f64)>) -> Result<Distribution> {
        if entries.is_empty() {
            return Err(Error::BadDistribution("no generators".into()));
        }
        let mut seen = BTreeSet::new();
        for (g, p) in &entries {
            if !seen.insert(*g) {
                return Err(Error::BadDistribution(format!("generator `{g}` listed twice")));
            }
            if !p.is_finite() || !(0.0..=1.0).contains(p) {
                return Err(Error::BadDistribution(format!("probability of `{g}` is {p}")));
            }
        }
        let sum: f64 = entries.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Distribution { entries })
    }

    pub fn entries(&self) -> &[(GeneratorId, f64)] {
        &self.entries
    }

    /// One categorical draw.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> GeneratorId {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (g, p) in &self.entries {
            acc += p;
            if u < acc {
                return *g;
            }
        }
        self.entries
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(g, _)| *g)
            .expect("probabilities sum to one")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeMetrics {
    pub distinct_feature_count: u64,
    pub total_feature_count: u64,
    pub total_loc: u64,
    pub repository_count: u64,
}

impl TreeMetrics {
    pub fn of(tree: &AssetTree) -> TreeMetrics {
        TreeMetrics {
            distinct_feature_count: tree.distinct_feature_count() as u64,
            total_feature_count: tree.total_feature_count() as u64,
            total_loc: tree.loc_per_repository().values().map(|n| *n as u64).sum(),
            repository_count: tree.repositories().count() as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    DistinctFeatureCount,
    TotalFeatureCount,
    TotalLoc,
    RepositoryCount,
}

impl Metric {
    const ALL: [Metric; 4] = [
        Metric::DistinctFeatureCount,
        Metric::TotalFeatureCount,
        Metric::TotalLoc,
        Metric::RepositoryCount,
    ];

    fn name(self) -> &'static str {
        match self {
            Metric::DistinctFeatureCount => "distinctFeatureCount",
            Metric::TotalFeatureCount => "totalFeatureCount",
            Metric::TotalLoc => "totalLoc",
            Metric::RepositoryCount => "repositoryCount",
        }
    }

    fn read(self, m: &TreeMetrics) -> u64 {
        match self {
            Metric::DistinctFeatureCount => m.distinct_feature_count,
            Metric::TotalFeatureCount => m.total_feature_count,
            Metric::TotalLoc => m.total_loc,
            Metric::RepositoryCount => m.repository_count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl Comparison {
    const ALL: [(Comparison, &'static str); 5] = [
        (Comparison::Ge, ">="),
        (Comparison::Le, "<="),
        (Comparison::Eq, "=="),
        (Comparison::Gt, ">"),
        (Comparison::Lt, "<"),
    ];

    fn symbol(self) -> &'static str {
        Comparison::ALL.iter().find(|(c, _)| *c == self).expect("listed").1
    }
}

/// Stop condition such as `distinctFeatureCount >= 10`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Termination {
    pub metric: Metric,
    pub comparison: Comparison,
    pub value: u64,
}

impl Termination {
    pub fn holds(&self, m: &TreeMetrics) -> bool {
        let x = self.metric.read(m);
        match self.comparison {
            Comparison::Ge => x >= self.value,
            Comparison::Gt => x > self.value,
            Comparison::Le => x <= self.value,
            Comparison::Lt => x < self.value,
            Comparison::Eq => x == self.value,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.metric.name(), self.comparison.symbol(), self.value)
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed termination predicate `{s}`"));
        let (comparison, sym, at) = Comparison::ALL
            .iter()
            .filter_map(|(c, sym)| s.find(sym).map(|i| (*c, *sym, i)))
            .min_by_key(|(_, sym, i)| (*i, std::cmp::Reverse(sym.len())))
            .ok_or_else(bad)?;
        let name = s[..at].trim();
        let metric = Metric::ALL.into_iter().find(|m| m.name() == name).ok_or_else(bad)?;
        let value = s[at + sym.len()..].trim().parse().map_err(|_| bad())?;
        Ok(Termination {
            metric,
            comparison,
            value,
        })
    }
}

impl Serialize for Termination {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Termination {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

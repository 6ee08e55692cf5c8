//! Model specification files.
//!
//! A spec is a TOML document with a mandatory `format = 1` header. See the
//! README for the full grammar; the shape is
//!
//! ```toml
//! format = 1
//! dictionary = ["a", "b", "c"]
//! family = [["a", "a b"], ["c", "b c"]]   # or the string "chain"
//!
//! [domain]
//! kind = "length-bounded"                # fixed-length | explicit | reachable
//! max_len = 8
//!
//! [support]                              # optional; default: every component
//! contains = ["a c"]
//!
//! [measure]                              # optional
//! xi = [0.2, 0.2, 0.2]
//! mu = [{ contains = "a c", weight = 1.0 }]
//!
//! [[params.pairs]]                       # optional
//! y0 = "a"
//! y1 = "a b"
//! value = -1.3862943611198906
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use msp_core::{
    build_graph, chain_pair_family, components, components_containing, enumerate_domain,
    pairs_from_family, reachable_component, ComponentMixtureSpec, ComponentPartition, Dictionary,
    Domain, DomainSpec, ExponentialFamilyModel, PairFamily, ParamVector, Sentence, SubProbability,
    SubstitutePair, DEFAULT_BUDGET,
};
use num::{BigRational, ToPrimitive, Zero};
use serde::Deserialize;

use crate::Failure;

pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub format: i64,
    pub dictionary: Vec<String>,
    pub family: FamilySpec,
    pub domain: DomainSection,
    #[serde(default)]
    pub support: Option<SupportSection>,
    #[serde(default)]
    pub measure: Option<MeasureSection>,
    #[serde(default)]
    pub params: Option<ParamsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    /// `"chain"`: the 3-word windows `(a y b, a y' b)`.
    Named(String),
    Sets(Vec<Vec<String>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: String,
    pub max_len: Option<usize>,
    pub length: Option<usize>,
    pub sentences: Option<Vec<String>>,
    pub start: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportSection {
    pub contains: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub xi: Vec<f64>,
    pub mu: Vec<MixtureWeight>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureWeight {
    pub contains: String,
    pub weight: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default)]
    pub pairs: Vec<PairValue>,
    #[serde(default)]
    pub components: Vec<ComponentValue>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairValue {
    pub y0: String,
    pub y1: String,
    pub value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentValue {
    pub contains: String,
    pub value: f64,
}

/// A spec with every reference resolved and the domain enumerated.
pub struct Loaded {
    pub spec: ModelSpec,
    pub dict: Dictionary,
    pub pairs: PairFamily,
    pub domain_spec: DomainSpec,
    pub domain: Domain,
    pub partition: ComponentPartition,
    /// Partition indices of the selected support components, ascending.
    pub selection: Vec<usize>,
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

impl ModelSpec {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let spec: ModelSpec =
            toml::from_str(text).map_err(|e| invalid(format!("spec file: {e}")))?;
        if spec.format != FORMAT_VERSION {
            return Err(invalid(format!(
                "unsupported spec format {} (expected {FORMAT_VERSION})",
                spec.format
            )));
        }
        Ok(spec)
    }

    /// Validates references and builds dictionary, pairs, domain and
    /// partition. `max_len` overrides the domain's length bound.
    pub fn load(self, max_len: Option<usize>) -> Result<Loaded, Failure> {
        let dict = Dictionary::new(self.dictionary.iter().map(String::as_str))?;
        let pairs = match &self.family {
            FamilySpec::Named(name) if name == "chain" => {
                let len = match self.domain.kind.as_str() {
                    "fixed-length" => max_len.or(self.domain.length),
                    _ => None,
                }
                .ok_or_else(|| invalid("family \"chain\" needs a fixed-length domain"))?;
                chain_pair_family(dict.len(), len)?
            }
            FamilySpec::Named(name) => {
                return Err(invalid(format!("unknown family {name:?}")));
            }
            FamilySpec::Sets(sets) => {
                let parsed: Vec<Vec<Sentence>> = sets
                    .iter()
                    .map(|set| set.iter().map(|t| dict.parse_nonempty(t)).collect())
                    .collect::<Result<_, _>>()?;
                pairs_from_family(&dict, &parsed)?
            }
        };
        let d = &self.domain;
        let need = |v: Option<usize>, key: &str| {
            max_len
                .or(v)
                .ok_or_else(|| invalid(format!("domain kind {:?} needs `{key}`", d.kind)))
        };
        let (domain_spec, domain) = match d.kind.as_str() {
            "length-bounded" => {
                let spec = DomainSpec::length_bounded(dict.clone(), need(d.max_len, "max_len")?)?;
                let domain = enumerate_domain(&spec, DEFAULT_BUDGET)?;
                (spec, domain)
            }
            "fixed-length" => {
                let spec = DomainSpec::fixed_length(dict.clone(), need(d.length, "length")?)?;
                let domain = enumerate_domain(&spec, DEFAULT_BUDGET)?;
                (spec, domain)
            }
            "explicit" => {
                let list = d
                    .sentences
                    .as_ref()
                    .ok_or_else(|| invalid("domain kind \"explicit\" needs `sentences`"))?;
                let sentences = list
                    .iter()
                    .map(|t| dict.parse_nonempty(t))
                    .collect::<Result<Vec<_>, _>>()?;
                let spec = DomainSpec::explicit(dict.clone(), sentences)?;
                let domain = enumerate_domain(&spec, DEFAULT_BUDGET)?;
                (spec, domain)
            }
            "reachable" => {
                let start = d
                    .start
                    .as_ref()
                    .ok_or_else(|| invalid("domain kind \"reachable\" needs `start`"))?;
                let start = dict.parse_nonempty(start)?;
                let spec = DomainSpec::length_bounded(dict.clone(), need(d.max_len, "max_len")?)?;
                let domain = reachable_component(&spec, &pairs, &start, DEFAULT_BUDGET)?;
                (spec, domain)
            }
            other => return Err(invalid(format!("unknown domain kind {other:?}"))),
        };
        let partition = components(&domain, &build_graph(&domain, &pairs));
        let selection = match &self.support {
            None => (0..partition.len()).collect(),
            Some(s) => {
                let sentences = s
                    .contains
                    .iter()
                    .map(|t| dict.parse_nonempty(t))
                    .collect::<Result<Vec<_>, _>>()?;
                let set: BTreeSet<usize> = components_containing(&domain, &partition, &sentences)?
                    .into_iter()
                    .collect();
                set.into_iter().collect()
            }
        };
        let loaded = Loaded {
            spec: self,
            dict,
            pairs,
            domain_spec,
            domain,
            partition,
            selection,
        };
        loaded.check_sections()?;
        Ok(loaded)
    }
}

impl Loaded {
    /// Resolves the optional sections once so that reference errors surface
    /// before any command runs.
    fn check_sections(&self) -> Result<(), Failure> {
        if self.spec.measure.is_some() {
            self.mixture()?;
        }
        if let Some(p) = &self.spec.params {
            for v in &p.pairs {
                self.pair_index(&v.y0, &v.y1)?;
            }
            for c in &p.components {
                self.component_index(&c.contains)?;
            }
        }
        Ok(())
    }

    pub fn component_index(&self, text: &str) -> Result<usize, Failure> {
        let s = self.dict.parse_nonempty(text)?;
        let i = self
            .domain
            .index_of(&s)
            .ok_or_else(|| invalid(format!("{text:?} is outside the domain")))?;
        Ok(self.partition.component_of(i))
    }

    /// Index of the pair `{y0, y1}` and the sign to apply to a value given
    /// in that orientation.
    pub fn pair_index(&self, y0: &str, y1: &str) -> Result<(usize, f64), Failure> {
        let a = self.dict.parse_nonempty(y0)?;
        let b = self.dict.parse_nonempty(y1)?;
        self.pairs
            .lookup(&a, &b)
            .ok_or_else(|| invalid(format!("({y0}, {y1}) is not a pair of the family")))
    }

    pub fn model(&self) -> Result<ExponentialFamilyModel, Failure> {
        Ok(ExponentialFamilyModel::build(
            &self.domain,
            &self.pairs,
            &self.selection,
        )?)
    }

    pub fn mixture(&self) -> Result<ComponentMixtureSpec, Failure> {
        let m = self
            .spec
            .measure
            .as_ref()
            .ok_or_else(|| invalid("this command needs a [measure] section"))?;
        if m.xi.len() != self.dict.len() {
            return Err(invalid(format!(
                "xi has {} weights for {} words",
                m.xi.len(),
                self.dict.len()
            )));
        }
        let xi = SubProbability::new(m.xi.clone())?;
        let mut mu = Vec::new();
        for w in &m.mu {
            let c = self.component_index(&w.contains)?;
            if mu.iter().any(|&(k, _)| k == c) {
                return Err(invalid(format!(
                    "two mu entries name the component of {:?}",
                    w.contains
                )));
            }
            mu.push((c, w.weight));
        }
        Ok(ComponentMixtureSpec::new(mu, xi)?)
    }

    /// Parameters from `[params]`. Values may be given for any pairs: a
    /// free coordinate left unset is solved from a determined pair whose
    /// row has it as the only unknown, and anything still unset is 0. Every
    /// given value must then agree with the implied one within `tol`.
    pub fn params(&self, model: &ExponentialFamilyModel, tol: f64) -> Result<ParamVector, Failure> {
        let mut beta = model.zero_params();
        let Some(section) = &self.spec.params else {
            return Ok(beta);
        };
        let mut known = vec![false; beta.free.len()];
        let mut given = Vec::new();
        for v in &section.pairs {
            let (i, sign) = self.pair_index(&v.y0, &v.y1)?;
            let value = sign * v.value;
            if let Some(k) = model.free_pairs().iter().position(|&f| f == i) {
                beta.free[k] = value;
                known[k] = true;
            }
            given.push((i, value, v));
        }
        let e = model.dependency();
        loop {
            let mut progress = false;
            for &(i, value, _) in &given {
                let Some(j) = model.determined_pairs().iter().position(|&d| d == i) else {
                    continue;
                };
                let unknown: Vec<usize> = (0..known.len())
                    .filter(|&k| !known[k] && !e[k][j].is_zero())
                    .collect();
                if let [k] = unknown[..] {
                    let rest: f64 = (0..known.len())
                        .filter(|&q| q != k)
                        .map(|q| ratio_to_f64(&e[q][j]) * beta.free[q])
                        .sum();
                    beta.free[k] = (value - rest) / ratio_to_f64(&e[k][j]);
                    known[k] = true;
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        for c in &section.components {
            let k = self.component_index(&c.contains)?;
            let slot = model
                .components()
                .iter()
                .position(|mc| mc.partition_index == k)
                .ok_or_else(|| {
                    invalid(format!(
                        "the component of {:?} is not in the support",
                        c.contains
                    ))
                })?;
            beta.components[slot] = c.value;
        }
        let implied = model.exponents_from_params(&beta);
        for (i, value, v) in given {
            if !model.active_pairs().contains(&i) {
                continue;
            }
            if (implied.value(i) - value).abs() > tol {
                return Err(invalid(format!(
                    "β({}, {}) = {} contradicts the value {} implied by the other pairs",
                    v.y0,
                    v.y1,
                    v.value,
                    implied.value(i)
                )));
            }
        }
        Ok(beta)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn pair_label(dict: &Dictionary, p: &SubstitutePair) -> (String, String) {
    (dict.render(p.y0()), dict.render(p.y1()))
}

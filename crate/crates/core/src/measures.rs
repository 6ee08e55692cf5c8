//! Explicit measures on finite domains: the independent process, the
//! component-mixture construction and the substitute-property verifier.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::exp_family::{ExponentialFamilyModel, ParamVector};
use crate::exponents::{ExponentStatus, ExponentTable};
use crate::graph::{build_graph, ComponentPartition, Domain};
use crate::logspace::log_sum_exp;
use crate::strings::{Context, PairFamily, Sentence};

/// Log-space tolerance used by every verification step.
pub const LOG_TOLERANCE: f64 = 1e-9;
/// Probabilities at or below this are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Word weights `ξ` with total strictly below one; `r = 1 − Σ ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubProbability {
    weights: Vec<f64>,
    r: f64,
}

impl SubProbability {
    /// Weights indexed by word id. Zero weights are allowed (the word then
    /// never appears); the total must leave a positive stopping mass.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSubProbability("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSubProbability(format!(
                "weight {w} is not a finite non-negative number"
            )));
        }
        let total: f64 = weights.iter().sum();
        let r = 1.0 - total;
        if r <= 0.0 || total <= 0.0 {
            return Err(Error::InvalidSubProbability(format!(
                "total weight {total} must lie strictly between 0 and 1"
            )));
        }
        Ok(SubProbability { weights, r })
    }

    /// Every word gets `weight`.
    pub fn uniform(n_words: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; n_words])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, id: u32) -> f64 {
        self.weights.get(id as usize).copied().unwrap_or(0.0)
    }

    /// Stopping mass `r = 1 − Σ ξ`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Whether every word has positive weight.
    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }
}

/// `log P(S̃_ξ = s) = log(r / (1 − r)) + Σ_j log ξ(s_j)`; `-inf` when some
/// word has zero weight.
pub fn indep_logprob(xi: &SubProbability, s: &Sentence) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySentence("independent process"));
    }
    let mut lp = (xi.r / (1.0 - xi.r)).ln();
    for &w in s.ids() {
        if w as usize >= xi.weights.len() {
            return Err(Error::WordIdOutOfRange {
                id: w,
                size: xi.weights.len(),
            });
        }
        lp += xi.weights[w as usize].ln();
    }
    Ok(lp)
}

/// `log P(ℓ(S̃_ξ) = len) = log r + (len − 1) log(1 − r)`.
pub fn indep_length_logprob(xi: &SubProbability, len: usize) -> Result<f64> {
    if len == 0 {
        return Err(Error::EmptySentence("length law"));
    }
    Ok(xi.r.ln() + (len - 1) as f64 * (1.0 - xi.r).ln())
}

/// A probability table over finitely many sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    table: BTreeMap<Sentence, f64>,
}

impl FiniteMeasure {
    /// Validates non-negative finite entries without duplicates summing to
    /// one within `1e−9`.
    pub fn new<I: IntoIterator<Item = (Sentence, f64)>>(entries: I) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (s, p) in entries {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "probability {p} of {s} is not a finite non-negative number"
                )));
            }
            if s.is_empty() {
                return Err(Error::EmptySentence("measure entry"));
            }
            if table.insert(s.clone(), p).is_some() {
                return Err(Error::InvalidMeasure(format!("sentence {s} listed twice")));
            }
        }
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > LOG_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FiniteMeasure { table })
    }

    /// Scales non-negative weights to total one.
    pub fn normalized<I: IntoIterator<Item = (Sentence, f64)>>(weights: I) -> Result<Self> {
        let entries: Vec<(Sentence, f64)> = weights.into_iter().collect();
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!("total weight {total}")));
        }
        Self::new(entries.into_iter().map(|(s, w)| (s, w / total)))
    }

    pub(crate) fn from_entries_unchecked<I: IntoIterator<Item = (Sentence, f64)>>(
        entries: I,
    ) -> Self {
        FiniteMeasure {
            table: entries.into_iter().collect(),
        }
    }

    /// `P(s)`, zero for unlisted sentences.
    pub fn prob(&self, s: &Sentence) -> f64 {
        self.table.get(s).copied().unwrap_or(0.0)
    }

    pub fn log_prob(&self, s: &Sentence) -> f64 {
        self.prob(s).ln()
    }

    /// Listed entries in sentence order, zeros included.
    pub fn entries(&self) -> impl Iterator<Item = (&Sentence, f64)> {
        self.table.iter().map(|(s, &p)| (s, p))
    }

    /// Sentences with probability above [`ZERO_THRESHOLD`].
    pub fn support(&self) -> impl Iterator<Item = &Sentence> {
        self.table
            .iter()
            .filter(|(_, &p)| p > ZERO_THRESHOLD)
            .map(|(s, _)| s)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.table.values().sum()
    }
}

/// Mixture weights over components and the word law used inside them.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMixtureSpec {
    /// `(partition component index, μ(C))`.
    pub mu: Vec<(usize, f64)>,
    pub xi: SubProbability,
}

impl ComponentMixtureSpec {
    pub fn new(mu: Vec<(usize, f64)>, xi: SubProbability) -> Result<Self> {
        let mut seen = HashSet::new();
        for &(c, w) in &mu {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "mixture weight {w} of component {c} is not a finite non-negative number"
                )));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidMeasure(format!(
                    "component {c} weighted twice"
                )));
            }
        }
        let total: f64 = mu.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > LOG_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(ComponentMixtureSpec { mu, xi })
    }

    /// Components with positive weight, ascending.
    pub fn selected(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .mu
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(c, _)| *c)
            .collect();
        out.sort_unstable();
        out
    }
}

/// `P(s) = μ(C(s)) · P(S̃_ξ = s | S̃_ξ ∈ C(s))`.
pub fn bproc_measure(
    spec: &ComponentMixtureSpec,
    domain: &Domain,
    partition: &ComponentPartition,
) -> Result<FiniteMeasure> {
    let mut entries = Vec::new();
    for &(c, mu) in &spec.mu {
        if c >= partition.len() {
            return Err(Error::InvalidMeasure(format!(
                "component {c} does not exist ({} components)",
                partition.len()
            )));
        }
        if mu == 0.0 {
            continue;
        }
        let members = partition.members(c);
        let lps = members
            .iter()
            .map(|&s| indep_logprob(&spec.xi, domain.sentence(s)))
            .collect::<Result<Vec<f64>>>()?;
        let lz = log_sum_exp(lps.iter().copied());
        if lz == f64::NEG_INFINITY {
            return Err(Error::InvalidMeasure(format!(
                "component {c} has zero mass under the word law"
            )));
        }
        for (&s, lp) in members.iter().zip(lps) {
            entries.push((domain.sentence(s).clone(), mu * (lp - lz).exp()));
        }
    }
    Ok(FiniteMeasure::from_entries_unchecked(entries))
}

/// A witness against the substitute property.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Exactly one of `α(x, y0)`, `α(x, y1)` has positive probability.
    Mixed {
        pair: usize,
        context: Context,
        /// The side (0 or 1) with zero probability.
        zero_side: u8,
    },
    /// Two contexts give log-ratios further apart than the tolerance.
    Inconsistent {
        pair: usize,
        low: Context,
        high: Context,
        spread: f64,
    },
    /// Positive mass on a sentence outside the scanned domain.
    OutsideDomain { sentence: Sentence, prob: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Mixed {
                pair,
                context,
                zero_side,
            } => write!(
                f,
                "pair {pair}: mixed positivity at context ({}, {}), side {zero_side} has zero mass",
                context.left, context.right
            ),
            Violation::Inconsistent {
                pair,
                low,
                high,
                spread,
            } => write!(
                f,
                "pair {pair}: log-ratio differs by {spread:e} between contexts ({}, {}) and ({}, {})",
                low.left, low.right, high.left, high.right
            ),
            Violation::OutsideDomain { sentence, prob } => {
                write!(f, "mass {prob} on {sentence} outside the domain")
            }
        }
    }
}

/// Per-pair outcome of the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    /// Mean log-ratio `log P(α(x, y1)) − log P(α(x, y0))` over the
    /// both-positive contexts; 0 when there are none.
    pub exponent: f64,
    pub status: ExponentStatus,
    pub positive_contexts: usize,
    pub zero_contexts: usize,
    pub mixed_contexts: usize,
    /// `max − min` of the per-context log-ratios.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pairs: PairFamily,
    pub reports: Vec<PairReport>,
    pub violations: Vec<Violation>,
    /// Largest residual `|log P(α(x1,y0))P(α(x2,y1)) − log P(α(x1,y1))P(α(x2,y0))|`
    /// over in-support quadruples.
    pub swap_residual: f64,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn pairs(&self) -> &PairFamily {
        &self.pairs
    }

    /// The measured exponents; `None` when a violation was found.
    pub fn exponents(&self) -> Option<ExponentTable> {
        self.passed().then(|| {
            ExponentTable::new(
                self.pairs.clone(),
                self.reports.iter().map(|r| r.exponent).collect(),
                self.reports.iter().map(|r| r.status).collect(),
            )
        })
    }
}

/// Scans every context `x` with both `α(x, y0)` and `α(x, y1)` in `domain`.
///
/// The swap residual of a pair is the spread of its log-ratios: for two
/// in-support contexts the swap identity reads `r(x1) = r(x2)`.
pub fn verify_substitute(p: &FiniteMeasure, pairs: &PairFamily, domain: &Domain) -> Verdict {
    let mut violations = Vec::new();
    for (s, prob) in p.entries() {
        if prob > ZERO_THRESHOLD && !domain.contains(s) {
            violations.push(Violation::OutsideDomain {
                sentence: s.clone(),
                prob,
            });
        }
    }

    struct Scan {
        ratios: Vec<(f64, usize)>,
        zero: usize,
        mixed: usize,
    }
    let mut scans: Vec<Scan> = (0..pairs.len())
        .map(|_| Scan {
            ratios: Vec::new(),
            zero: 0,
            mixed: 0,
        })
        .collect();
    let edges = build_graph(domain, pairs);
    for (ei, e) in edges.iter().enumerate() {
        let p0 = p.prob(domain.sentence(e.from));
        let p1 = p.prob(domain.sentence(e.to));
        let scan = &mut scans[e.pair];
        match (p0 > ZERO_THRESHOLD, p1 > ZERO_THRESHOLD) {
            (true, true) => scan.ratios.push((p1.ln() - p0.ln(), ei)),
            (false, false) => scan.zero += 1,
            (pos0, _) => {
                scan.mixed += 1;
                violations.push(Violation::Mixed {
                    pair: e.pair,
                    context: e.context.clone(),
                    zero_side: if pos0 { 1 } else { 0 },
                });
            }
        }
    }

    let mut swap_residual: f64 = 0.0;
    let mut reports = Vec::with_capacity(pairs.len());
    for (pair, scan) in scans.into_iter().enumerate() {
        let mut report = PairReport {
            exponent: 0.0,
            status: ExponentStatus::Inactive,
            positive_contexts: scan.ratios.len(),
            zero_contexts: scan.zero,
            mixed_contexts: scan.mixed,
            spread: 0.0,
        };
        if !scan.ratios.is_empty() {
            let cmp = |a: &&(f64, usize), b: &&(f64, usize)| a.0.total_cmp(&b.0);
            let lo = scan.ratios.iter().min_by(cmp).expect("non-empty");
            let hi = scan.ratios.iter().max_by(cmp).expect("non-empty");
            report.spread = hi.0 - lo.0;
            report.exponent =
                scan.ratios.iter().map(|r| r.0).sum::<f64>() / scan.ratios.len() as f64;
            report.status = ExponentStatus::Active;
            swap_residual = swap_residual.max(report.spread);
            if report.spread > LOG_TOLERANCE {
                violations.push(Violation::Inconsistent {
                    pair,
                    low: edges[lo.1].context.clone(),
                    high: edges[hi.1].context.clone(),
                    spread: report.spread,
                });
            }
        }
        reports.push(report);
    }
    Verdict {
        pairs: pairs.clone(),
        reports,
        violations,
        swap_residual,
    }
}

/// Parameters of `model` reproducing a verified measure: free coordinates
/// are the measured exponents, component coordinates `log P(s_C)`.
pub fn params_from_measure(
    p: &FiniteMeasure,
    model: &ExponentialFamilyModel,
    domain: &Domain,
) -> Result<ParamVector> {
    let verdict = verify_substitute(p, model.pairs(), domain);
    if let Some(v) = verdict.violations.first() {
        return Err(Error::Verification(v.to_string()));
    }
    let support: HashSet<&Sentence> = p.support().collect();
    let expected: HashSet<&Sentence> = model.support().iter().collect();
    if support != expected {
        let stray = support
            .symmetric_difference(&expected)
            .min()
            .expect("sets differ");
        return Err(Error::InvalidMeasure(format!(
            "measure support differs from the model support at {stray}"
        )));
    }
    let free = model
        .free_pairs()
        .iter()
        .map(|&f| verdict.reports[f].exponent)
        .collect();
    let components = model
        .components()
        .iter()
        .map(|c| p.log_prob(&c.reference))
        .collect();
    let beta = ParamVector::new(free, components);
    let log_z = model.log_partition(&beta);
    if log_z.abs() > LOG_TOLERANCE {
        return Err(Error::Verification(format!(
            "recovered parameters give log Z = {log_z:e}"
        )));
    }
    let worst = model
        .support()
        .iter()
        .zip(model.log_probs(&beta))
        .map(|(s, lp)| (lp - p.log_prob(s)).abs())
        .fold(0.0, f64::max);
    if worst > LOG_TOLERANCE {
        return Err(Error::Verification(format!(
            "recovered parameters miss the measure by {worst:e} in log space"
        )));
    }
    Ok(beta)
}

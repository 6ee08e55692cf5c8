//! Seeded samplers: finite tables, the independent process, its
//! restriction to a component, and a swap-move Metropolis–Hastings chain.
//!
//! All randomness comes from [`SeededRng`], a ChaCha8 stream seeded with
//! `rand_chacha`'s `seed_from_u64`. Draws use two primitives only:
//! [`SeededRng::uniform`] (a `f64` in `[0, 1)`) and [`SeededRng::below`]
//! (an integer in `0..n`), so traces are reproducible bit for bit.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exponents::ExponentTable;
use crate::graph::Domain;
use crate::measures::{indep_logprob, FiniteMeasure, SubProbability};
use crate::strings::Sentence;

/// Default component size up to which conditioned sampling enumerates.
pub const DEFAULT_EXACT_LIMIT: usize = 100_000;

#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Uniform in `0..n`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

/// Index drawn proportionally to non-negative `weights` with positive total.
fn categorical(weights: &[f64], total: f64, rng: &mut SeededRng) -> usize {
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// One draw of `S̃_ξ`: words i.i.d. from `ξ / (1 − r)`, stopping after
/// each word with probability `r`.
pub fn sample_indep(xi: &SubProbability, rng: &mut SeededRng) -> Sentence {
    let total = 1.0 - xi.r();
    let mut ids = Vec::new();
    loop {
        ids.push(categorical(xi.weights(), total, rng) as u32);
        if rng.uniform() < xi.r() {
            return Sentence::new(ids);
        }
    }
}

/// Inverse-CDF sampler over an explicit table.
#[derive(Debug, Clone)]
pub struct FiniteSampler {
    items: Vec<Sentence>,
    cumulative: Vec<f64>,
}

impl FiniteSampler {
    pub fn new(measure: &FiniteMeasure) -> Result<Self> {
        Self::from_weights(measure.entries().map(|(s, p)| (s.clone(), p)))
    }

    /// Sampler proportional to non-negative weights.
    pub fn from_weights<I: IntoIterator<Item = (Sentence, f64)>>(weights: I) -> Result<Self> {
        let mut items = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (s, w) in weights {
            if w > 0.0 {
                acc += w;
                items.push(s);
                cumulative.push(acc);
            }
        }
        if items.is_empty() || !acc.is_finite() {
            return Err(Error::InvalidMeasure("nothing to sample from".into()));
        }
        Ok(FiniteSampler { items, cumulative })
    }

    pub fn sample(&self, rng: &mut SeededRng) -> &Sentence {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.uniform() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.items[i.min(self.items.len() - 1)]
    }
}

/// Draws from `P(S̃_ξ = s | S̃_ξ ∈ C)` for a finite set `C`.
#[derive(Debug, Clone)]
pub enum ConditionedSampler {
    Exact(FiniteSampler),
    Rejection {
        xi: SubProbability,
        members: HashSet<Sentence>,
    },
}

impl ConditionedSampler {
    /// Enumerates when `|C| ≤ exact_limit`, otherwise falls back to
    /// rejection from [`sample_indep`].
    pub fn new(xi: &SubProbability, component: &[Sentence], exact_limit: usize) -> Result<Self> {
        if component.len() <= exact_limit {
            Self::exact(xi, component)
        } else {
            Self::rejection(xi, component)
        }
    }

    pub fn exact(xi: &SubProbability, component: &[Sentence]) -> Result<Self> {
        let weights = component
            .iter()
            .map(|s| Ok((s.clone(), indep_logprob(xi, s)?.exp())))
            .collect::<Result<Vec<_>>>()?;
        FiniteSampler::from_weights(weights)
            .map(ConditionedSampler::Exact)
            .map_err(|_| Error::InvalidMeasure("component has zero mass under ξ".into()))
    }

    pub fn rejection(xi: &SubProbability, component: &[Sentence]) -> Result<Self> {
        if component.is_empty() {
            return Err(Error::InvalidMeasure("empty component".into()));
        }
        Ok(ConditionedSampler::Rejection {
            xi: xi.clone(),
            members: component.iter().cloned().collect(),
        })
    }

    /// One draw; rejection gives up after `max_tries` proposals.
    pub fn sample(&self, rng: &mut SeededRng, max_tries: usize) -> Result<Sentence> {
        match self {
            ConditionedSampler::Exact(s) => Ok(s.sample(rng).clone()),
            ConditionedSampler::Rejection { xi, members } => {
                for _ in 0..max_tries {
                    let s = sample_indep(xi, rng);
                    if members.contains(&s) {
                        return Ok(s);
                    }
                }
                Err(Error::SamplingBudget {
                    tries: max_tries,
                    rate: 0.0,
                })
            }
        }
    }
}

/// Convenience wrapper: one conditioned draw with the default exact limit.
pub fn sample_conditioned(
    xi: &SubProbability,
    component: &[Sentence],
    rng: &mut SeededRng,
    max_tries: usize,
) -> Result<Sentence> {
    ConditionedSampler::new(xi, component, DEFAULT_EXACT_LIMIT)?.sample(rng, max_tries)
}

/// An available substitution at a state.
#[derive(Debug, Clone, PartialEq)]
struct Move {
    target: Sentence,
    /// `log P(target) − log P(state)` under the exponents.
    log_ratio: f64,
}

/// Moves per state, cached.
struct MoveSet<'a> {
    exponents: &'a ExponentTable,
    domain: &'a Domain,
    cache: HashMap<Sentence, Vec<Move>>,
}

impl<'a> MoveSet<'a> {
    fn new(exponents: &'a ExponentTable, domain: &'a Domain) -> Result<Self> {
        if let Some(v) = exponents.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "exponent {v} is not finite"
            )));
        }
        Ok(MoveSet {
            exponents,
            domain,
            cache: HashMap::new(),
        })
    }

    fn moves(&mut self, s: &Sentence) -> &[Move] {
        if !self.cache.contains_key(s) {
            let mut out = Vec::new();
            for (i, p) in self.exponents.pairs().iter().enumerate() {
                let beta = self.exponents.value(i);
                for (from, to, sign) in [(p.y0(), p.y1(), 1.0), (p.y1(), p.y0(), -1.0)] {
                    for pos in s.positions(from) {
                        let t = s.splice(pos, from.len(), to);
                        if self.domain.contains(&t) {
                            out.push(Move {
                                target: t,
                                log_ratio: sign * beta,
                            });
                        }
                    }
                }
            }
            self.cache.insert(s.clone(), out);
        }
        &self.cache[s]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcTrace {
    /// `states[0]` is the start; `states[t]` the state after step `t`.
    pub states: Vec<Sentence>,
    /// Proposed state at each step; `None` when no move exists.
    pub proposals: Vec<Option<Sentence>>,
    pub accepted: Vec<bool>,
    /// No move was available at the start.
    pub frozen: bool,
    /// Visit frequencies over `states[1..]` (the start is excluded).
    pub frequencies: BTreeMap<Sentence, f64>,
}

impl McmcTrace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }
}

/// Metropolis–Hastings over single substitutions.
///
/// Each step lists every (pair, direction, occurrence) whose result lies
/// in `domain`, proposes one uniformly (`below(m(s))`), and accepts when
/// `uniform() < exp(β) · m(s) / m(s')` where `β` is the signed exponent of
/// the move. The move-count factor corrects the proposal asymmetry.
pub fn swap_mcmc(
    start: &Sentence,
    exponents: &ExponentTable,
    domain: &Domain,
    steps: usize,
    rng: &mut SeededRng,
) -> Result<McmcTrace> {
    if !domain.contains(start) {
        return Err(Error::InvalidDomain(format!(
            "start {start} is not in the domain"
        )));
    }
    let mut moves = MoveSet::new(exponents, domain)?;
    let frozen = moves.moves(start).is_empty();
    let mut states = Vec::with_capacity(steps + 1);
    let mut proposals = Vec::with_capacity(steps);
    let mut accepted = Vec::with_capacity(steps);
    let mut counts: BTreeMap<Sentence, usize> = BTreeMap::new();
    let mut current = start.clone();
    states.push(current.clone());
    for _ in 0..steps {
        let available = moves.moves(&current);
        let m = available.len();
        if m == 0 {
            proposals.push(None);
            accepted.push(false);
        } else {
            let mv = available[rng.below(m)].clone();
            let m_target = moves.moves(&mv.target).len();
            let log_a = mv.log_ratio + (m as f64).ln() - (m_target as f64).ln();
            let u = rng.uniform();
            let ok = log_a >= 0.0 || u < log_a.exp();
            proposals.push(Some(mv.target.clone()));
            accepted.push(ok);
            if ok {
                current = mv.target;
            }
        }
        *counts.entry(current.clone()).or_insert(0) += 1;
        states.push(current.clone());
    }
    let frequencies = counts
        .into_iter()
        .map(|(s, c)| (s, c as f64 / steps as f64))
        .collect();
    Ok(McmcTrace {
        states,
        proposals,
        accepted,
        frozen,
        frequencies,
    })
}

/// The one-step transition matrix of [`swap_mcmc`] over `states`, which
/// must be closed under moves (e.g. a whole component).
pub fn mcmc_transition_matrix(
    states: &[Sentence],
    exponents: &ExponentTable,
    domain: &Domain,
) -> Result<Vec<Vec<f64>>> {
    let index: HashMap<&Sentence, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut moves = MoveSet::new(exponents, domain)?;
    let n = states.len();
    let mut t = vec![vec![0.0; n]; n];
    for (i, s) in states.iter().enumerate() {
        let available = moves.moves(s).to_vec();
        let m = available.len() as f64;
        for mv in &available {
            let j = *index.get(&mv.target).ok_or_else(|| {
                Error::InvalidDomain(format!("move target {} is not listed", mv.target))
            })?;
            let m_target = moves.moves(&mv.target).len() as f64;
            let a = (mv.log_ratio + m.ln() - m_target.ln()).exp().min(1.0);
            t[i][j] += a / m;
        }
        let off: f64 = t[i]
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, x)| x)
            .sum();
        t[i][i] += 1.0 - off;
    }
    Ok(t)
}

//! Estimation from corpora: a context-pooled moment estimator of the
//! exponents, and exact maximum likelihood on a finite support.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exp_family::{ExponentialFamilyModel, ParamVector};
use crate::graph::{build_graph, Domain};
use crate::logspace::log_sum_exp;
use crate::strings::{PairFamily, Sentence};

/// Sentences with positive (possibly fractional) counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    counts: BTreeMap<Sentence, f64>,
}

impl Corpus {
    /// Repeated sentences have their counts added.
    pub fn new<I: IntoIterator<Item = (Sentence, f64)>>(entries: I) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for (s, n) in entries {
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::InvalidCorpus(format!(
                    "count {n} for {s} is not positive"
                )));
            }
            if s.is_empty() {
                return Err(Error::EmptySentence("corpus entry"));
            }
            *counts.entry(s).or_insert(0.0) += n;
        }
        Ok(Corpus { counts })
    }

    /// One count per listed sentence.
    pub fn from_sentences<I: IntoIterator<Item = Sentence>>(sentences: I) -> Result<Self> {
        Self::new(sentences.into_iter().map(|s| (s, 1.0)))
    }

    pub fn count(&self, s: &Sentence) -> f64 {
        self.counts.get(s).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Sentence, f64)> {
        self.counts.iter().map(|(s, &n)| (s, n))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalExponent {
    pub pair: usize,
    /// `None` when no context has both sides observed.
    pub estimate: Option<f64>,
    /// Delta-method standard error `sqrt(1/N1 + 1/N0)`.
    pub std_error: Option<f64>,
    pub contexts: usize,
    /// Pooled counts of the `y0` and `y1` sides.
    pub n0: f64,
    pub n1: f64,
}

impl EmpiricalExponent {
    pub fn is_estimable(&self) -> bool {
        self.estimate.is_some()
    }
}

/// `β̂ = log(Σ_x n(α(x, y1)) / Σ_x n(α(x, y0)))` over the contexts of
/// `domain` where both sides were observed.
pub fn empirical_exponents(
    corpus: &Corpus,
    pairs: &PairFamily,
    domain: &Domain,
) -> Result<Vec<EmpiricalExponent>> {
    if corpus.total() <= 0.0 {
        return Err(Error::EmptyCorpus);
    }
    let mut out: Vec<EmpiricalExponent> = (0..pairs.len())
        .map(|pair| EmpiricalExponent {
            pair,
            estimate: None,
            std_error: None,
            contexts: 0,
            n0: 0.0,
            n1: 0.0,
        })
        .collect();
    for e in build_graph(domain, pairs) {
        let n0 = corpus.count(domain.sentence(e.from));
        let n1 = corpus.count(domain.sentence(e.to));
        if n0 > 0.0 && n1 > 0.0 {
            let r = &mut out[e.pair];
            r.contexts += 1;
            r.n0 += n0;
            r.n1 += n1;
        }
    }
    for r in &mut out {
        if r.contexts > 0 {
            r.estimate = Some((r.n1 / r.n0).ln());
            r.std_error = Some((1.0 / r.n1 + 1.0 / r.n0).sqrt());
        }
    }
    Ok(out)
}

pub const DEFAULT_FIT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_FIT_ITERATIONS: usize = 500;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Canonical parameters; components without observations get `-inf`.
    pub params: ParamVector,
    /// Average log-likelihood per observation.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Sup-norm of the score at the returned point.
    pub gradient_norm: f64,
    /// Average log-likelihood after each accepted step, starting at 0.
    pub history: Vec<f64>,
}

/// Sufficient statistics of the observed components, one row per support
/// state: `−U_f` for every free pair, then an indicator per optimised
/// component coordinate.
struct Problem<'a> {
    model: &'a ExponentialFamilyModel,
    stats: Vec<Vec<f64>>,
    /// Empirical frequency of each row.
    freq: Vec<f64>,
    /// Observed components; the last one is pinned at 0.
    observed: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn dim(&self) -> usize {
        self.model.free_pairs().len() + self.observed.len() - 1
    }

    fn params(&self, theta: &[f64]) -> ParamVector {
        let nf = self.model.free_pairs().len();
        let mut comps = vec![f64::NEG_INFINITY; self.model.components().len()];
        for (k, &c) in self.observed.iter().enumerate() {
            comps[c] = if k + 1 == self.observed.len() {
                0.0
            } else {
                theta[nf + k]
            };
        }
        ParamVector::new(theta[..nf].to_vec(), comps)
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        self.stats
            .iter()
            .map(|t| t.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Average log-likelihood and the model probability of each row.
    fn evaluate(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let w = self.log_weights(theta);
        let log_z = log_sum_exp(w.iter().copied());
        let ll = w
            .iter()
            .zip(&self.freq)
            .filter(|(_, &f)| f > 0.0)
            .map(|(x, f)| f * (x - log_z))
            .sum();
        (ll, w.iter().map(|x| (x - log_z).exp()).collect())
    }

    /// Score and Fisher information.
    fn derivatives(&self, probs: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim();
        let mut emp = DVector::zeros(d);
        let mut mean = DVector::zeros(d);
        let mut second = DMatrix::zeros(d, d);
        for ((t, &p), &f) in self.stats.iter().zip(probs).zip(&self.freq) {
            let t = DVector::from_column_slice(t);
            emp += &t * f;
            mean += &t * p;
            second += &t * t.transpose() * p;
        }
        let fisher = second - &mean * mean.transpose();
        (emp - mean, fisher)
    }
}

/// Maximum-likelihood parameters of `model` for `corpus`.
///
/// The average log-likelihood is concave in the parameters. Each iteration
/// takes the Fisher-scoring direction (the plain score when the
/// information matrix is singular) with Armijo backtracking by halving,
/// and stops once the score's sup-norm is at most `tol`. Components
/// without observations have zero mass at the optimum and are returned
/// with coordinate `-inf`; the last observed component is pinned at 0.
pub fn mle_fit(
    corpus: &Corpus,
    model: &ExponentialFamilyModel,
    tol: f64,
    max_iter: usize,
) -> Result<FitReport> {
    let total = corpus.total();
    if total <= 0.0 {
        return Err(Error::EmptyCorpus);
    }
    let mut comp_counts = vec![0.0; model.components().len()];
    let mut state_freq = vec![0.0; model.support().len()];
    for (s, n) in corpus.entries() {
        let i = model
            .support_index(s)
            .ok_or_else(|| Error::OutsideSupport(s.to_string()))?;
        state_freq[i] = n / total;
        comp_counts[model.component_of_state(i)] += n;
    }
    let observed: Vec<usize> = (0..comp_counts.len())
        .filter(|&c| comp_counts[c] > 0.0)
        .collect();
    let mut stats = Vec::new();
    let mut freq = Vec::new();
    for (k, &c) in observed.iter().enumerate() {
        for i in model.components()[c].range.clone() {
            let mut t: Vec<f64> = model
                .energies(i)
                .iter()
                .map(|u| -crate::exp_family::ratio_to_f64(u))
                .collect();
            t.extend((0..observed.len() - 1).map(|j| if j == k { 1.0 } else { 0.0 }));
            stats.push(t);
            freq.push(state_freq[i]);
        }
    }
    let problem = Problem {
        model,
        stats,
        freq,
        observed,
    };
    let d = problem.dim();
    let mut theta = vec![0.0; d];
    let (mut ll, mut probs) = problem.evaluate(&theta);
    let mut history = vec![ll];
    for it in 0..=max_iter {
        let (grad, fisher) = problem.derivatives(&probs);
        let gnorm = grad.amax();
        if gnorm <= tol {
            let params = problem.params(&theta);
            return Ok(FitReport {
                params: canonical(&params),
                log_likelihood: ll,
                iterations: it,
                gradient_norm: gnorm,
                history,
            });
        }
        if it == max_iter {
            return Err(Error::NoConvergence {
                what: "maximum-likelihood fit",
                iterations: max_iter,
                last: gnorm,
            });
        }
        let scale = fisher.diagonal().amax().max(1.0);
        let ridge = DMatrix::identity(d, d) * (1e-12 * scale);
        let newton = (fisher + ridge).cholesky().map(|ch| ch.solve(&grad));
        let mut stepped = false;
        for dir in newton.into_iter().chain(std::iter::once(grad.clone())) {
            let slope = grad.dot(&dir);
            // also skips a NaN slope
            if slope.is_nan() || slope <= 0.0 {
                continue;
            }
            let mut t = 1.0;
            while t > 1e-30 {
                let cand: Vec<f64> = theta
                    .iter()
                    .zip(dir.iter())
                    .map(|(x, s)| x + t * s)
                    .collect();
                let (cll, cprobs) = problem.evaluate(&cand);
                if cll >= ll + ARMIJO * t * slope {
                    theta = cand;
                    ll = cll;
                    probs = cprobs;
                    history.push(ll);
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
            if stepped {
                break;
            }
        }
        if !stepped {
            return Err(Error::NoConvergence {
                what: "maximum-likelihood line search",
                iterations: it,
                last: gnorm,
            });
        }
    }
    unreachable!("the loop returns at max_iter")
}

/// Shift making the last finite component coordinate 0.
fn canonical(beta: &ParamVector) -> ParamVector {
    match beta.components.iter().rev().find(|c| c.is_finite()) {
        Some(&shift) => ParamVector::new(
            beta.free.clone(),
            beta.components.iter().map(|c| c - shift).collect(),
        ),
        None => beta.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_family::components_containing;
    use crate::graph::{components, enumerate_domain, DomainSpec, DEFAULT_BUDGET};
    use crate::measures::params_from_measure;
    use crate::samplers::{FiniteSampler, SeededRng};
    use crate::strings::{pairs_from_family, Dictionary};

    struct Fx {
        dict: Dictionary,
        pairs: PairFamily,
        domain: Domain,
    }

    fn fixture_a(max_len: usize) -> Fx {
        let dict = Dictionary::new(["a", "b", "c"]).unwrap();
        let p = |s: &str| dict.parse(s).unwrap();
        let pairs =
            pairs_from_family(&dict, &[vec![p("a"), p("a b")], vec![p("c"), p("b c")]]).unwrap();
        let domain = enumerate_domain(
            &DomainSpec::length_bounded(dict.clone(), max_len).unwrap(),
            DEFAULT_BUDGET,
        )
        .unwrap();
        Fx {
            dict,
            pairs,
            domain,
        }
    }

    impl Fx {
        fn model(&self, starts: &[&str]) -> ExponentialFamilyModel {
            let part = components(&self.domain, &build_graph(&self.domain, &self.pairs));
            let s: Vec<Sentence> = starts.iter().map(|t| self.dict.parse(t).unwrap()).collect();
            let sel = components_containing(&self.domain, &part, &s).unwrap();
            ExponentialFamilyModel::build(&self.domain, &self.pairs, &sel).unwrap()
        }
    }

    fn exact_corpus(model: &ExponentialFamilyModel, beta: &ParamVector, n: f64) -> Corpus {
        Corpus::new(
            model
                .support()
                .iter()
                .cloned()
                .zip(model.log_probs(beta).into_iter().map(|lp| n * lp.exp())),
        )
        .unwrap()
    }

    #[test]
    fn plug_in_fixed_point() {
        let fx = fixture_a(6);
        let m1 = fx.model(&["a c"]);
        let beta1 = ParamVector::new(vec![-0.8], vec![0.0]);
        let corpus = exact_corpus(&m1, &beta1, 1000.0);
        let est = empirical_exponents(&corpus, &fx.pairs, &fx.domain).unwrap();
        let truth = m1.exponents_from_params(&beta1);
        for (e, t) in est.iter().zip(truth.values()) {
            assert!((e.estimate.unwrap() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn inestimable_and_empty() {
        let fx = fixture_a(4);
        let corpus = Corpus::from_sentences([fx.dict.parse("a c").unwrap()]).unwrap();
        let est = empirical_exponents(&corpus, &fx.pairs, &fx.domain).unwrap();
        assert!(est.iter().all(|e| !e.is_estimable()));
        assert!(matches!(
            empirical_exponents(&Corpus::default(), &fx.pairs, &fx.domain),
            Err(Error::EmptyCorpus)
        ));
        assert!(Corpus::new([(fx.dict.parse("a").unwrap(), 0.0)]).is_err());
    }

    #[test]
    fn mle_on_exact_distribution() {
        let fx = fixture_a(6);
        let m = fx.model(&["a c", "c a"]);
        let beta = ParamVector::new(vec![-0.8, 0.3], vec![0.5, 0.0]);
        // on C1 ∪ C2 the free pairs are shared, so use consistent truth
        assert_eq!(m.free_pairs().len(), 1);
        let beta = ParamVector::new(vec![beta.free[0]], beta.components);
        let corpus = exact_corpus(&m, &beta, 1.0);
        let fit = mle_fit(&corpus, &m, DEFAULT_FIT_TOLERANCE, DEFAULT_FIT_ITERATIONS).unwrap();
        let truth = m.canonicalize(&beta);
        for (a, b) in fit.params.free.iter().zip(&truth.free) {
            assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in fit.params.components.iter().zip(&truth.components) {
            assert!((a - b).abs() < 1e-6);
        }
        // agrees with the reverse construction
        let measure = m.to_measure(&beta);
        let rec = m.canonicalize(&params_from_measure(&measure, &m, &fx.domain).unwrap());
        for (a, b) in fit.params.free.iter().zip(&rec.free) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn mle_from_samples() {
        let fx = fixture_a(7);
        let m = fx.model(&["a c"]);
        let beta = ParamVector::new(vec![0.25f64.ln()], vec![0.0]);
        let sampler = FiniteSampler::new(&m.to_measure(&beta)).unwrap();
        let mut rng = SeededRng::new(2024);
        let corpus =
            Corpus::from_sentences((0..100_000).map(|_| sampler.sample(&mut rng).clone())).unwrap();
        let fit = mle_fit(&corpus, &m, DEFAULT_FIT_TOLERANCE, DEFAULT_FIT_ITERATIONS).unwrap();
        assert!((fit.params.free[0] - beta.free[0]).abs() <= 0.05);
        let est = empirical_exponents(&corpus, m.pairs(), &fx.domain).unwrap();
        assert!((est[1].estimate.unwrap() - beta.free[0]).abs() <= 0.05);
    }

    #[test]
    fn unobserved_component_gets_zero_mass() {
        let fx = fixture_a(5);
        let m = fx.model(&["a c", "c a"]);
        let c1 = m.support_index(&fx.dict.parse("a c").unwrap()).unwrap();
        let k = m.component_of_state(c1);
        let corpus = Corpus::new(
            m.components()[k]
                .range
                .clone()
                .map(|i| (m.support()[i].clone(), 1.0 + i as f64)),
        )
        .unwrap();
        let fit = mle_fit(&corpus, &m, DEFAULT_FIT_TOLERANCE, DEFAULT_FIT_ITERATIONS).unwrap();
        assert!((m.component_mass(&fit.params, k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_support_is_rejected() {
        let fx = fixture_a(4);
        let m = fx.model(&["a c"]);
        let corpus = Corpus::from_sentences([fx.dict.parse("c a").unwrap()]).unwrap();
        assert!(matches!(
            mle_fit(&corpus, &m, 1e-8, 100),
            Err(Error::OutsideSupport(_))
        ));
    }

    #[test]
    fn likelihood_increases_along_iterations() {
        let fx = fixture_a(6);
        let m = fx.model(&["c a"]);
        let corpus = Corpus::new(
            m.support()
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), 1.0 + (i % 3) as f64)),
        )
        .unwrap();
        let fit = mle_fit(&corpus, &m, 1e-10, 200).unwrap();
        assert!(fit.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(fit.iterations > 0);
        // at the optimum the model matches the empirical energy means
        let probs: Vec<f64> = m.log_probs(&fit.params).into_iter().map(f64::exp).collect();
        let total = corpus.total();
        for f in 0..m.free_pairs().len() {
            let u = |i: usize| crate::exp_family::ratio_to_f64(&m.energies(i)[f]);
            let emp: f64 = m
                .support()
                .iter()
                .enumerate()
                .map(|(i, s)| corpus.count(s) / total * u(i))
                .sum();
            let model: f64 = probs.iter().enumerate().map(|(i, p)| p * u(i)).sum();
            assert!((emp - model).abs() < 1e-9);
        }
    }
}

//! Positive Markov chains as substitute measures on `D^L`, and back.
//!
//! The family substitutes the middle word of every three-word window
//! `a y b`. A chain with transition matrix `M` has exponents
//! `β(ayb, ay'b) = log(M(a,y')M(y',b) / (M(a,y)M(y,b)))`. Conversely, from
//! exponents and an anchor word `c`, the positive matrix
//! `A(a,b) = exp β(acc, abc)` has Perron eigenpair `(λ, ψ)` and
//! `M(a,b) = A(a,b)ψ(b) / (λψ(a))` reproduces the exponents.

use crate::error::{Error, Result};
use crate::exponents::{ExponentStatus, ExponentTable};
use crate::measures::{FiniteMeasure, LOG_TOLERANCE, ZERO_THRESHOLD};
use crate::strings::{PairFamily, Sentence, SubstitutePair, WordId};

/// Row-sum tolerance for transition matrices.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
/// Relative-change threshold of the power iteration.
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

/// All pairs `(a y b, a y' b)` with `y ≠ y'` over `n_words` words.
pub fn chain_pair_family(n_words: usize, len: usize) -> Result<PairFamily> {
    if len < 3 {
        return Err(Error::InvalidDomain(format!(
            "chain sentences need length at least 3, got {len}"
        )));
    }
    let n = n_words as WordId;
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for y in 0..n {
                for y2 in y + 1..n {
                    pairs.push(SubstitutePair::new(
                        Sentence::new(vec![a, y, b]),
                        Sentence::new(vec![a, y2, b]),
                    )?);
                }
            }
        }
    }
    Ok(PairFamily::new(pairs))
}

/// A strictly positive row-stochastic matrix with a positive initial law.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    m: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(m: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        let n = m.len();
        if n == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has non-positive entry {x}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {sum}")));
            }
        }
        if initial.len() != n
            || initial.iter().any(|x| !(x.is_finite() && *x > 0.0))
            || (initial.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOLERANCE
        {
            return Err(Error::InvalidMatrix(
                "initial law must be a positive probability vector of matching size".into(),
            ));
        }
        Ok(TransitionMatrix { m, initial })
    }

    /// Matrix with the uniform initial law.
    pub fn with_uniform_initial(m: Vec<Vec<f64>>) -> Result<Self> {
        let n = m.len();
        Self::new(m, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn size(&self) -> usize {
        self.m.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.m[a][b]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `log Π M(s_j, s_{j+1})`, without the initial law.
    pub fn path_log_weight(&self, ids: &[WordId]) -> f64 {
        ids.windows(2)
            .map(|w| self.m[w[0] as usize][w[1] as usize].ln())
            .sum()
    }
}

/// Exponents of the chain law over [`chain_pair_family`].
pub fn chain_to_exponents(m: &TransitionMatrix, len: usize) -> Result<ExponentTable> {
    let pairs = chain_pair_family(m.size(), len)?;
    let values = pairs
        .iter()
        .map(|p| {
            let (y0, y1) = (p.y0().ids(), p.y1().ids());
            m.path_log_weight(y1) - m.path_log_weight(y0)
        })
        .collect();
    let n = pairs.len();
    Ok(ExponentTable::new(
        pairs,
        values,
        vec![ExponentStatus::Active; n],
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub a: Vec<Vec<f64>>,
    pub lambda: f64,
    /// Positive, unit Euclidean norm.
    pub psi: Vec<f64>,
    pub iterations: usize,
}

fn window(a: usize, y: usize, b: usize) -> Sentence {
    Sentence::new(vec![a as WordId, y as WordId, b as WordId])
}

/// Dense `β(ayb, ay'b)` lookup, indexed `[a][y][y'][b]`.
struct ChainExponents {
    n: usize,
    values: Vec<f64>,
}

impl ChainExponents {
    fn from_table(table: &ExponentTable, n: usize) -> Result<Self> {
        let mut values = vec![0.0; n * n * n * n];
        for a in 0..n {
            for y in 0..n {
                for y2 in 0..n {
                    for b in 0..n {
                        let (s, t) = (window(a, y, b), window(a, y2, b));
                        let v = table
                            .between(&s, &t)
                            .ok_or_else(|| Error::MissingExponent(format!("({s}, {t})")))?;
                        if !v.is_finite() {
                            return Err(Error::InvalidParameters(format!(
                                "exponent of ({s}, {t}) is {v}"
                            )));
                        }
                        values[((a * n + y) * n + y2) * n + b] = v;
                    }
                }
            }
        }
        Ok(ChainExponents { n, values })
    }

    fn get(&self, a: usize, y: usize, y2: usize, b: usize) -> f64 {
        let n = self.n;
        self.values[((a * n + y) * n + y2) * n + b]
    }

    /// `β(acc, ay'c) + β(y'cc, y'bc) − β(acc, ayc) − β(ycc, ybc)`.
    fn decomposed(&self, a: usize, y: usize, y2: usize, b: usize, c: usize) -> f64 {
        self.get(a, c, y2, c) + self.get(y2, c, b, c) - self.get(a, c, y, c) - self.get(y, c, b, c)
    }

    /// Largest residual of the decomposition over all quadruples.
    fn worst_residual(&self, c: usize) -> (f64, [u32; 4]) {
        let n = self.n;
        let mut worst = (0.0, [0u32; 4]);
        for a in 0..n {
            for y in 0..n {
                for y2 in 0..n {
                    for b in 0..n {
                        let r = (self.get(a, y, y2, b) - self.decomposed(a, y, y2, b, c)).abs();
                        if r > worst.0 {
                            worst = (r, [a as u32, y as u32, y2 as u32, b as u32]);
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Largest residual of `β(ayb, ay'b) = β(acc, ay'c) + β(y'cc, y'bc)
/// − β(acc, ayc) − β(ycc, ybc)` over all `(a, y, y', b)`, with the
/// quadruple attaining it.
pub fn decomposition_residual(
    table: &ExponentTable,
    n_words: usize,
    anchor: WordId,
) -> Result<(f64, [u32; 4])> {
    check_anchor(anchor, n_words)?;
    Ok(ChainExponents::from_table(table, n_words)?.worst_residual(anchor as usize))
}

fn check_anchor(anchor: WordId, n_words: usize) -> Result<()> {
    if anchor as usize >= n_words {
        return Err(Error::WordIdOutOfRange {
            id: anchor,
            size: n_words,
        });
    }
    Ok(())
}

/// Power iteration from the all-ones vector for a strictly positive matrix.
pub fn perron(a: &[Vec<f64>]) -> Result<PerronData> {
    let n = a.len();
    let mut psi = vec![1.0 / (n as f64).sqrt(); n];
    let mul = |v: &[f64]| -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
            .collect()
    };
    let mut change = f64::INFINITY;
    for it in 1..=POWER_MAX_ITERATIONS {
        let mut w = mul(&psi);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut w {
            *x /= norm;
        }
        let max = w.iter().copied().fold(0.0, f64::max);
        change = w
            .iter()
            .zip(&psi)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / max;
        psi = w;
        if change <= POWER_TOLERANCE {
            let apsi = mul(&psi);
            let lambda = apsi.iter().zip(&psi).map(|(x, y)| x * y).sum::<f64>();
            return Ok(PerronData {
                a: a.to_vec(),
                lambda,
                psi,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iterations: POWER_MAX_ITERATIONS,
        last: change,
    })
}

/// Transition matrix reproducing the exponents, via the anchor word.
///
/// The exponents are checked against the anchor decomposition first, so
/// an inconsistent table fails instead of producing a meaningless matrix.
/// Exponents say nothing about the initial law, which is set uniform.
pub fn exponents_to_chain(
    table: &ExponentTable,
    n_words: usize,
    anchor: WordId,
) -> Result<(TransitionMatrix, PerronData)> {
    check_anchor(anchor, n_words)?;
    let ex = ChainExponents::from_table(table, n_words)?;
    let c = anchor as usize;
    let (residual, quadruple) = ex.worst_residual(c);
    if residual > LOG_TOLERANCE {
        return Err(Error::InconsistentExponents {
            residual,
            quadruple,
        });
    }
    let n = n_words;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|x| (0..n).map(|b| ex.get(x, c, b, c).exp()).collect())
        .collect();
    let pf = perron(&a)?;
    let m: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let row: Vec<f64> = (0..n)
                .map(|b| a[x][b] * pf.psi[b] / (pf.lambda * pf.psi[x]))
                .collect();
            let sum: f64 = row.iter().sum();
            row.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    let chain = TransitionMatrix::with_uniform_initial(m)?;

    let mut worst = (0.0, [0u32; 4]);
    for x in 0..n {
        for y in 0..n {
            for y2 in 0..n {
                for b in 0..n {
                    let got = chain.path_log_weight(&[x as u32, y2 as u32, b as u32])
                        - chain.path_log_weight(&[x as u32, y as u32, b as u32]);
                    let r = (got - ex.get(x, y, y2, b)).abs();
                    if r > worst.0 {
                        worst = (r, [x as u32, y as u32, y2 as u32, b as u32]);
                    }
                }
            }
        }
    }
    if worst.0 > LOG_TOLERANCE {
        return Err(Error::InconsistentExponents {
            residual: worst.0,
            quadruple: worst.1,
        });
    }
    Ok((chain, pf))
}

/// Every word sequence of length `len` over `n_words` words, in
/// lexicographic order.
pub fn all_sequences(n_words: usize, len: usize) -> Vec<Vec<WordId>> {
    let mut out = Vec::new();
    if n_words == 0 {
        return out;
    }
    let mut cur = vec![0 as WordId; len];
    loop {
        out.push(cur.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as usize) < n_words {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Law of `(X_1, …, X_len)` under the chain.
pub fn chain_law(m: &TransitionMatrix, len: usize) -> Result<FiniteMeasure> {
    if len == 0 {
        return Err(Error::EmptySentence("chain law"));
    }
    FiniteMeasure::new(all_sequences(m.size(), len).into_iter().map(|ids| {
        let p = m.initial()[ids[0] as usize] * m.path_log_weight(&ids).exp();
        (Sentence::new(ids), p)
    }))
}

/// Largest `|log P(s | s_1 = a, s_L = b) − log P_M(s | X_1 = a, X_L = b)|`
/// over the interiors of `D^len`.
pub fn conditional_equivalence(
    p: &FiniteMeasure,
    m: &TransitionMatrix,
    len: usize,
    a: WordId,
    b: WordId,
) -> Result<f64> {
    let n = m.size();
    if len < 2 {
        return Err(Error::InvalidDomain(format!(
            "endpoint conditioning needs length at least 2, got {len}"
        )));
    }
    check_anchor(a, n)?;
    check_anchor(b, n)?;
    let sentences: Vec<Vec<WordId>> = all_sequences(n, len - 2)
        .into_iter()
        .map(|mid| {
            let mut ids = Vec::with_capacity(len);
            ids.push(a);
            ids.extend(mid);
            ids.push(b);
            ids
        })
        .collect();
    let probs: Vec<f64> = sentences
        .iter()
        .map(|ids| p.prob(&Sentence::new(ids.clone())))
        .collect();
    let mass: f64 = probs.iter().sum();
    if mass <= ZERO_THRESHOLD {
        return Err(Error::InvalidMeasure(format!(
            "no mass on sentences from {a} to {b}"
        )));
    }
    let weights: Vec<f64> = sentences.iter().map(|ids| m.path_log_weight(ids)).collect();
    let log_z = crate::logspace::log_sum_exp(weights.iter().copied());
    let mut worst: f64 = 0.0;
    for (pr, w) in probs.iter().zip(&weights) {
        let lhs = (pr / mass).ln();
        let d = (lhs - (w - log_z)).abs();
        worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, components, enumerate_domain, DomainSpec};
    use crate::measures::verify_substitute;
    use crate::strings::Dictionary;
    use proptest::prelude::*;

    fn m2() -> TransitionMatrix {
        TransitionMatrix::with_uniform_initial(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    #[test]
    fn family_examples() {
        let f = chain_pair_family(2, 3).unwrap();
        let got: Vec<(Vec<u32>, Vec<u32>)> = f
            .iter()
            .map(|p| (p.y0().ids().to_vec(), p.y1().ids().to_vec()))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec![0, 0, 0], vec![0, 1, 0]),
                (vec![0, 0, 1], vec![0, 1, 1]),
                (vec![1, 0, 0], vec![1, 1, 0]),
                (vec![1, 0, 1], vec![1, 1, 1]),
            ]
        );
        assert!(chain_pair_family(1, 3).unwrap().is_empty());
        assert!(chain_pair_family(2, 2).is_err());
    }

    #[test]
    fn components_are_endpoint_classes() {
        let d = Dictionary::new(["0", "1", "2"]).unwrap();
        for len in 3..=5 {
            let dom =
                enumerate_domain(&DomainSpec::fixed_length(d.clone(), len).unwrap(), 1000).unwrap();
            let part = components(
                &dom,
                &build_graph(&dom, &chain_pair_family(3, len).unwrap()),
            );
            assert_eq!(part.len(), 9);
            for c in part.components() {
                let first = dom.sentence(c[0]).ids().to_vec();
                assert_eq!(c.len(), 3usize.pow(len as u32 - 2));
                for &s in c {
                    let ids = dom.sentence(s).ids();
                    assert_eq!((ids[0], ids[len - 1]), (first[0], first[len - 1]));
                }
            }
        }
    }

    #[test]
    fn exponent_example() {
        let t = chain_to_exponents(&m2(), 3).unwrap();
        let expected = (0.3f64 * 0.4 / (0.7 * 0.7)).ln();
        assert!((t.value(0) - expected).abs() < 1e-15);
        let (s, s2) = (Sentence::new(vec![0, 0, 0]), Sentence::new(vec![0, 1, 0]));
        assert_eq!(t.between(&s2, &s).unwrap(), -t.between(&s, &s2).unwrap());

        let uniform = TransitionMatrix::with_uniform_initial(vec![vec![0.5; 2]; 2]).unwrap();
        assert!(chain_to_exponents(&uniform, 4)
            .unwrap()
            .values()
            .iter()
            .all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn matrix_validation() {
        assert!(
            TransitionMatrix::with_uniform_initial(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).is_err()
        );
        assert!(
            TransitionMatrix::with_uniform_initial(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err()
        );
        assert!(TransitionMatrix::with_uniform_initial(vec![vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![1.0]], vec![0.5]).is_err());
    }

    #[test]
    fn zero_exponents_give_uniform_chain() {
        let pairs = chain_pair_family(3, 3).unwrap();
        let n = pairs.len();
        let t = ExponentTable::new(pairs, vec![0.0; n], vec![ExponentStatus::Active; n]);
        let (m, pf) = exponents_to_chain(&t, 3, 0).unwrap();
        for row in m.rows() {
            for &x in row {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        assert!((pf.lambda - 3.0).abs() < 1e-10);
    }

    #[test]
    fn round_trip_and_perron_closed_form() {
        let m = TransitionMatrix::with_uniform_initial(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.6, 0.1, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let t = chain_to_exponents(&m, 4).unwrap();
        for anchor in 0..3 {
            let (back, pf) = exponents_to_chain(&t, 3, anchor).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    assert!((back.get(a, b) - m.get(a, b)).abs() < 1e-9);
                }
            }
            let c = anchor as usize;
            // closed form: λ = 1/M(c,c), ψ(a) ∝ 1/M(a,c)
            assert!((pf.lambda - 1.0 / m.get(c, c)).abs() < 1e-9);
            let raw: Vec<f64> = (0..3).map(|a| 1.0 / m.get(a, c)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (psi, r) in pf.psi.iter().zip(&raw) {
                assert!((psi - r / norm).abs() < 1e-9);
            }
            // A ψ = λ ψ
            for a in 0..3 {
                let lhs: f64 = (0..3).map(|b| pf.a[a][b] * pf.psi[b]).sum();
                assert!((lhs - pf.lambda * pf.psi[a]).abs() < 1e-10);
            }
        }
        let (r, _) = decomposition_residual(&t, 3, 1).unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn inconsistent_exponents_fail() {
        let mut t = chain_to_exponents(&m2(), 3).unwrap();
        let mut v = t.values().to_vec();
        v[1] += 0.5;
        t = ExponentTable::new(t.pairs().clone(), v, vec![ExponentStatus::Active; 4]);
        assert!(matches!(
            exponents_to_chain(&t, 2, 0),
            Err(Error::InconsistentExponents { .. })
        ));
    }

    #[test]
    fn missing_exponent_fails() {
        let pairs = chain_pair_family(2, 3).unwrap().without(0);
        let t = ExponentTable::new(pairs, vec![0.0; 3], vec![ExponentStatus::Active; 3]);
        assert!(matches!(
            exponents_to_chain(&t, 2, 0),
            Err(Error::MissingExponent(_))
        ));
    }

    #[test]
    fn chain_law_is_substitute() {
        let m =
            TransitionMatrix::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]], vec![0.9, 0.1]).unwrap();
        let d = Dictionary::new(["0", "1"]).unwrap();
        let len = 5;
        let law = chain_law(&m, len).unwrap();
        let dom = enumerate_domain(&DomainSpec::fixed_length(d, len).unwrap(), 100).unwrap();
        let pairs = chain_pair_family(2, len).unwrap();
        let v = verify_substitute(&law, &pairs, &dom);
        assert!(v.passed());
        let expected = chain_to_exponents(&m, len).unwrap();
        for (i, r) in v.reports.iter().enumerate() {
            assert!((r.exponent - expected.value(i)).abs() < 1e-12);
        }
        assert!(conditional_equivalence(&law, &m, len, 0, 1).unwrap() <= 1e-12);
    }

    #[test]
    fn endpoint_conditional_is_matrix_power() {
        let m = TransitionMatrix::with_uniform_initial(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.6, 0.1, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        for len in 2..=5 {
            // M^{len-1} by repeated multiplication
            let mut pow = m.rows().to_vec();
            for _ in 2..len {
                pow = pow
                    .iter()
                    .map(|row| {
                        (0..3)
                            .map(|j| (0..3).map(|k| row[k] * m.get(k, j)).sum())
                            .collect()
                    })
                    .collect();
            }
            for a in 0..3u32 {
                for b in 0..3u32 {
                    let brute: f64 = all_sequences(3, len - 2)
                        .into_iter()
                        .map(|mid| {
                            let mut ids = vec![a];
                            ids.extend(mid);
                            ids.push(b);
                            m.path_log_weight(&ids).exp()
                        })
                        .sum();
                    assert!((brute - pow[a as usize][b as usize]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_endpoint_mass_fails() {
        let p = FiniteMeasure::new([(Sentence::new(vec![0, 0, 0]), 1.0)]).unwrap();
        assert!(conditional_equivalence(&p, &m2(), 3, 1, 1).is_err());
    }

    fn stochastic(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|x| x / s).collect()
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn recovered_matrix_is_anchor_invariant(
            rows in (2usize..=4).prop_flat_map(stochastic),
        ) {
            let n = rows.len();
            let m = TransitionMatrix::with_uniform_initial(rows).unwrap();
            let t = chain_to_exponents(&m, 3).unwrap();
            let (first, _) = exponents_to_chain(&t, n, 0).unwrap();
            for c in 1..n as u32 {
                let (other, _) = exponents_to_chain(&t, n, c).unwrap();
                for a in 0..n {
                    for b in 0..n {
                        prop_assert!((first.get(a, b) - other.get(a, b)).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}

//! Fixtures shared by the benchmarks.

use msp_core::{
    enumerate_domain, pairs_from_family, Dictionary, Domain, DomainSpec, PairFamily,
    TransitionMatrix, DEFAULT_BUDGET,
};

/// `D = {a, b, c}` with the substitute sets `{a, ab}` and `{c, bc}` over
/// all sentences up to `max_len`.
pub fn fixture_a(max_len: usize) -> (Dictionary, PairFamily, Domain) {
    let dict = Dictionary::new(["a", "b", "c"]).expect("valid dictionary");
    let p = |s: &str| dict.parse(s).expect("known words");
    let pairs = pairs_from_family(&dict, &[vec![p("a"), p("a b")], vec![p("c"), p("b c")]])
        .expect("valid family");
    let spec = DomainSpec::length_bounded(dict.clone(), max_len).expect("positive bound");
    let domain = enumerate_domain(&spec, DEFAULT_BUDGET).expect("within budget");
    (dict, pairs, domain)
}

/// A strictly positive `n × n` transition matrix with uneven rows.
pub fn skewed_matrix(n: usize) -> TransitionMatrix {
    let rows = (0..n)
        .map(|a| {
            let raw: Vec<f64> = (0..n).map(|b| 1.0 + ((a * 7 + b * 3) % 5) as f64).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    TransitionMatrix::with_uniform_initial(rows).expect("stochastic rows")
}

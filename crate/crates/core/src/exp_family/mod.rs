//! Exponential-family representation of the substitute measures supported
//! on a chosen set of components.
//!
//! Construction runs in four steps:
//!
//! 1. fundamental cycles of the selected components give loop vectors over
//!    the active pairs;
//! 2. exact elimination ([`loop_span`]) finds the rank of the cycle space;
//! 3. pivot columns become determined pairs, the rest are free
//!    ([`select_free_pairs`]), with the dependency matrix `e`;
//! 4. each state's free energies are read off its BFS tree path
//!    ([`state_energies`]).
//!
//! With parameters `β` the model assigns
//! `log P_β(s) = −Σ_f β_f U_f(s) + β_C(s) − log Z_β`, where `C(s)` is the
//! component of `s`.

mod prune;
mod span;

use std::collections::HashMap;

use num::{BigRational, Zero};

pub use prune::prune_redundant_pairs;
pub(crate) use span::ratio_to_f64;
pub use span::{format_ratio, loop_span, parse_ratio, select_free_pairs, FreeSelection, LoopSpan};

use crate::error::{Error, Result};
use crate::exponents::{ExponentStatus, ExponentTable};
use crate::graph::{
    build_graph, components, fundamental_cycles, ComponentPartition, Domain, Edge, LoopVector,
};
use crate::logspace::log_sum_exp;
use crate::measures::FiniteMeasure;
use crate::strings::{Dictionary, PairFamily, Sentence};

/// Free energies of the support states.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    /// Domain state indices, grouped by component in selection order; each
    /// group starts with its reference state and follows ascending order.
    pub states: Vec<usize>,
    /// `values[k][i]` is `U_{free[i]}(states[k])`.
    pub values: Vec<Vec<BigRational>>,
}

/// `U_f(s) = U_f(π_s) + Σ_j e[f][j] U_j(π_s)` for every free pair `f` and
/// every state of the selected components.
pub fn state_energies(
    partition: &ComponentPartition,
    edges: &[Edge],
    selection: &[usize],
    free: &FreeSelection,
    n_pairs: usize,
) -> EnergyTable {
    let counts = partition.path_counts(edges, selection, n_pairs);
    let mut states = Vec::new();
    let mut values = Vec::new();
    for &c in selection {
        for &s in partition.members(c) {
            let path = counts[s].as_ref().expect("selected state has a path");
            let row = free
                .free
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    let mut u = BigRational::from_integer(path[f].into());
                    for (j, &d) in free.determined.iter().enumerate() {
                        if path[d] != 0 {
                            u += &free.dependency[i][j] * BigRational::from_integer(path[d].into());
                        }
                    }
                    u
                })
                .collect();
            states.push(s);
            values.push(row);
        }
    }
    EnergyTable { states, values }
}

/// Parameters: one real per free pair, one per support component.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub free: Vec<f64>,
    pub components: Vec<f64>,
}

impl ParamVector {
    pub fn new(free: Vec<f64>, components: Vec<f64>) -> Self {
        ParamVector { free, components }
    }

    pub fn is_finite(&self) -> bool {
        self.free
            .iter()
            .chain(&self.components)
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComponent {
    /// Index in the domain's component partition.
    pub partition_index: usize,
    pub reference: Sentence,
    /// Range of this component's states in [`ExponentialFamilyModel::support`].
    pub range: std::ops::Range<usize>,
}

/// The exponential family of substitute measures with a fixed support.
#[derive(Debug, Clone)]
pub struct ExponentialFamilyModel {
    pairs: PairFamily,
    active: Vec<usize>,
    loops: Vec<LoopVector>,
    rank: usize,
    selection: FreeSelection,
    components: Vec<ModelComponent>,
    support: Vec<Sentence>,
    support_index: HashMap<Sentence, usize>,
    state_component: Vec<usize>,
    energies: Vec<Vec<BigRational>>,
    neg_energies: Vec<Vec<f64>>,
}

impl ExponentialFamilyModel {
    /// Builds the graph and partition of `domain`, then the model supported
    /// on the given components.
    pub fn build(domain: &Domain, pairs: &PairFamily, selection: &[usize]) -> Result<Self> {
        let edges = build_graph(domain, pairs);
        let partition = components(domain, &edges);
        Self::from_parts(domain, pairs, &edges, &partition, selection)
    }

    /// Model supported on every component of `domain`.
    pub fn build_full(domain: &Domain, pairs: &PairFamily) -> Result<Self> {
        let edges = build_graph(domain, pairs);
        let partition = components(domain, &edges);
        let all: Vec<usize> = (0..partition.len()).collect();
        Self::from_parts(domain, pairs, &edges, &partition, &all)
    }

    pub fn from_parts(
        domain: &Domain,
        pairs: &PairFamily,
        edges: &[Edge],
        partition: &ComponentPartition,
        selection: &[usize],
    ) -> Result<Self> {
        let mut selection = selection.to_vec();
        selection.sort_unstable();
        selection.dedup();
        if selection.is_empty() {
            return Err(Error::InvalidModel("support selects no component".into()));
        }
        if let Some(&bad) = selection.iter().find(|&&c| c >= partition.len()) {
            return Err(Error::InvalidModel(format!(
                "component {bad} does not exist ({} components)",
                partition.len()
            )));
        }
        let cycles = fundamental_cycles(partition, edges, &selection, pairs.len());
        let span = loop_span(&cycles.loops, cycles.active_pairs.len());
        let free = select_free_pairs(&span, &cycles.active_pairs);
        let table = state_energies(partition, edges, &selection, &free, pairs.len());

        let mut model_components = Vec::with_capacity(selection.len());
        let mut start = 0;
        let mut state_component = Vec::with_capacity(table.states.len());
        for (k, &c) in selection.iter().enumerate() {
            let size = partition.members(c).len();
            model_components.push(ModelComponent {
                partition_index: c,
                reference: domain.sentence(partition.reference(c)).clone(),
                range: start..start + size,
            });
            state_component.extend(std::iter::repeat_n(k, size));
            start += size;
        }
        let support: Vec<Sentence> = table
            .states
            .iter()
            .map(|&s| domain.sentence(s).clone())
            .collect();
        let support_index = support
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let neg_energies = table
            .values
            .iter()
            .map(|row| row.iter().map(|u| -ratio_to_f64(u)).collect())
            .collect();
        Ok(ExponentialFamilyModel {
            pairs: pairs.clone(),
            active: cycles.active_pairs,
            loops: cycles.loops,
            rank: span.rank(),
            selection: free,
            components: model_components,
            support,
            support_index,
            state_component,
            energies: table.values,
            neg_energies,
        })
    }

    pub fn pairs(&self) -> &PairFamily {
        &self.pairs
    }

    pub fn active_pairs(&self) -> &[usize] {
        &self.active
    }

    pub fn free_pairs(&self) -> &[usize] {
        &self.selection.free
    }

    pub fn determined_pairs(&self) -> &[usize] {
        &self.selection.determined
    }

    /// `e[i][j]` over free × determined pairs.
    pub fn dependency(&self) -> &[Vec<BigRational>] {
        &self.selection.dependency
    }

    pub fn loops(&self) -> &[LoopVector] {
        &self.loops
    }

    pub fn loop_rank(&self) -> usize {
        self.rank
    }

    pub fn components(&self) -> &[ModelComponent] {
        &self.components
    }

    /// Support states grouped by component.
    pub fn support(&self) -> &[Sentence] {
        &self.support
    }

    pub fn support_index(&self, s: &Sentence) -> Option<usize> {
        self.support_index.get(s).copied()
    }

    /// Model component (position in [`Self::components`]) of support state `i`.
    pub fn component_of_state(&self, i: usize) -> usize {
        self.state_component[i]
    }

    /// Exact free energies of support state `i`, in free-pair order.
    pub fn energies(&self, i: usize) -> &[BigRational] {
        &self.energies[i]
    }

    /// Number of canonical parameters: `|F| + |C| − 1`.
    pub fn dimension(&self) -> usize {
        self.selection.free.len() + self.components.len() - 1
    }

    pub fn zero_params(&self) -> ParamVector {
        ParamVector::new(
            vec![0.0; self.selection.free.len()],
            vec![0.0; self.components.len()],
        )
    }

    pub fn check_params(&self, beta: &ParamVector) -> Result<()> {
        if beta.free.len() != self.selection.free.len()
            || beta.components.len() != self.components.len()
        {
            return Err(Error::InvalidParameters(format!(
                "expected {} free and {} component coordinates, got {} and {}",
                self.selection.free.len(),
                self.components.len(),
                beta.free.len(),
                beta.components.len()
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameters("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// `−Σ_f β_f U_f(s)` for support state `i`.
    fn free_log_weight(&self, beta: &ParamVector, i: usize) -> f64 {
        debug_assert_eq!(beta.free.len(), self.selection.free.len());
        self.neg_energies[i]
            .iter()
            .zip(&beta.free)
            .map(|(u, b)| u * b)
            .sum()
    }

    /// Unnormalised log weight of support state `i`.
    pub fn log_weight(&self, beta: &ParamVector, i: usize) -> f64 {
        self.free_log_weight(beta, i) + beta.components[self.state_component[i]]
    }

    pub fn log_partition(&self, beta: &ParamVector) -> f64 {
        log_sum_exp((0..self.support.len()).map(|i| self.log_weight(beta, i)))
    }

    /// `log Z_{β_F, C}`: the free-energy partition sum over component `k`.
    pub fn component_log_partition(&self, beta: &ParamVector, k: usize) -> f64 {
        log_sum_exp(
            self.components[k]
                .range
                .clone()
                .map(|i| self.free_log_weight(beta, i)),
        )
    }

    /// `log P_β(s)`; `-inf` outside the support.
    pub fn log_prob(&self, beta: &ParamVector, s: &Sentence) -> f64 {
        match self.support_index(s) {
            Some(i) => self.log_weight(beta, i) - self.log_partition(beta),
            None => f64::NEG_INFINITY,
        }
    }

    /// Log-probabilities of every support state, in support order.
    pub fn log_probs(&self, beta: &ParamVector) -> Vec<f64> {
        let w: Vec<f64> = (0..self.support.len())
            .map(|i| self.log_weight(beta, i))
            .collect();
        let z = log_sum_exp(w.iter().copied());
        w.into_iter().map(|x| x - z).collect()
    }

    /// `P_β(C) = exp(β_C) Z_{β_F, C} / Z_β`.
    pub fn component_mass(&self, beta: &ParamVector, k: usize) -> f64 {
        (beta.components[k] + self.component_log_partition(beta, k) - self.log_partition(beta))
            .exp()
    }

    pub fn to_measure(&self, beta: &ParamVector) -> FiniteMeasure {
        FiniteMeasure::from_entries_unchecked(
            self.support
                .iter()
                .cloned()
                .zip(self.log_probs(beta).into_iter().map(f64::exp)),
        )
    }

    /// Exponent of every pair under `P_β`: free pairs carry their
    /// coordinate, determined pairs `Σ β_f e[f][j]`, inactive pairs 0.
    pub fn exponents_from_params(&self, beta: &ParamVector) -> ExponentTable {
        let n = self.pairs.len();
        let mut values = vec![0.0; n];
        let mut status = vec![ExponentStatus::Inactive; n];
        for (i, &f) in self.selection.free.iter().enumerate() {
            values[f] = beta.free[i];
            status[f] = ExponentStatus::Free;
        }
        for (j, &d) in self.selection.determined.iter().enumerate() {
            values[d] = self
                .selection
                .dependency
                .iter()
                .zip(&beta.free)
                .map(|(row, b)| ratio_to_f64(&row[j]) * b)
                .sum();
            status[d] = ExponentStatus::Determined;
        }
        ExponentTable::new(self.pairs.clone(), values, status)
    }

    /// Exact-rational version of [`Self::exponents_from_params`] for the
    /// free coordinates alone.
    pub fn exponents_exact(&self, free: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(free.len(), self.selection.free.len());
        let mut values = vec![BigRational::zero(); self.pairs.len()];
        for (i, &f) in self.selection.free.iter().enumerate() {
            values[f] = free[i].clone();
        }
        for (j, &d) in self.selection.determined.iter().enumerate() {
            values[d] = self
                .selection
                .dependency
                .iter()
                .zip(free)
                .map(|(row, b)| &row[j] * b)
                .sum();
        }
        values
    }

    /// Shifts component coordinates so the last one is 0. Leaves `P_β`
    /// unchanged and is idempotent.
    pub fn canonicalize(&self, beta: &ParamVector) -> ParamVector {
        let shift = beta.components.last().copied().unwrap_or(0.0);
        ParamVector::new(
            beta.free.clone(),
            beta.components.iter().map(|c| c - shift).collect(),
        )
    }

    /// One line per determined pair, `β(y0,y1) = <combination of free pairs>`.
    pub fn constraint_lines(&self, dict: &Dictionary) -> Vec<String> {
        let name = |i: usize| {
            let p = self.pairs.get(i).expect("pair index");
            format!(
                "β({},{})",
                dict.render_compact(p.y0()),
                dict.render_compact(p.y1())
            )
        };
        let one = BigRational::from_integer(1.into());
        self.selection
            .determined
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                let mut rhs = String::new();
                for (i, &f) in self.selection.free.iter().enumerate() {
                    let c = &self.selection.dependency[i][j];
                    if c.is_zero() {
                        continue;
                    }
                    let negative = *c < BigRational::zero();
                    let mag = if negative { -c.clone() } else { c.clone() };
                    let sign = match (rhs.is_empty(), negative) {
                        (true, false) => "",
                        (true, true) => "-",
                        (false, false) => " + ",
                        (false, true) => " - ",
                    };
                    rhs.push_str(sign);
                    if mag != one {
                        rhs.push_str(&format!("{mag}*"));
                    }
                    rhs.push_str(&name(f));
                }
                if rhs.is_empty() {
                    rhs.push('0');
                }
                format!("{} = {}", name(d), rhs)
            })
            .collect()
    }
}

/// Partition indices of the components containing the given sentences.
pub fn components_containing(
    domain: &Domain,
    partition: &ComponentPartition,
    sentences: &[Sentence],
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for s in sentences {
        let i = domain
            .index_of(s)
            .ok_or_else(|| Error::InvalidModel(format!("sentence {s} is not in the domain")))?;
        out.push(partition.component_of(i));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_domain, DomainSpec, DEFAULT_BUDGET};
    use crate::strings::pairs_from_family;

    struct Fixture {
        dict: Dictionary,
        pairs: PairFamily,
        domain: Domain,
        edges: Vec<Edge>,
        partition: ComponentPartition,
    }

    impl Fixture {
        fn a(max_len: usize) -> Self {
            let dict = Dictionary::new(["a", "b", "c"]).unwrap();
            let p = |s: &str| dict.parse(s).unwrap();
            let pairs = pairs_from_family(&dict, &[vec![p("a"), p("a b")], vec![p("c"), p("b c")]])
                .unwrap();
            let domain = enumerate_domain(
                &DomainSpec::length_bounded(dict.clone(), max_len).unwrap(),
                DEFAULT_BUDGET,
            )
            .unwrap();
            let edges = build_graph(&domain, &pairs);
            let partition = components(&domain, &edges);
            Fixture {
                dict,
                pairs,
                domain,
                edges,
                partition,
            }
        }

        fn s(&self, text: &str) -> Sentence {
            self.dict.parse(text).unwrap()
        }

        fn model_of(&self, texts: &[&str]) -> ExponentialFamilyModel {
            let sents: Vec<Sentence> = texts.iter().map(|t| self.s(t)).collect();
            let sel = components_containing(&self.domain, &self.partition, &sents).unwrap();
            ExponentialFamilyModel::from_parts(
                &self.domain,
                &self.pairs,
                &self.edges,
                &self.partition,
                &sel,
            )
            .unwrap()
        }
    }

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    /// Signed pair counts along the explicit walk ab^n c → … → ac that only
    /// uses pair 0 (a, ab), written without the BFS forest.
    fn c1_energy_oracle(n: i64) -> i64 {
        // each step a b^{k+1} c → a b^k c traverses (a, ab) backwards (+1);
        // from ac the forward direction therefore sums to −n, and e = 1
        // adds the (c, bc) count (0 on this walk) to the free energy
        -n
    }

    #[test]
    fn fixture_a_model() {
        let fx = Fixture::a(6);
        let m = fx.model_of(&["a c"]);
        assert_eq!(m.active_pairs(), &[0, 1]);
        assert_eq!(m.loop_rank(), 1);
        assert_eq!(m.determined_pairs(), &[0]);
        assert_eq!(m.free_pairs(), &[1]);
        assert_eq!(m.dependency(), &[vec![int(1)]]);
        assert_eq!(m.constraint_lines(&fx.dict), vec!["β(a,ab) = β(c,bc)"]);
        assert_eq!(m.dimension(), 1);
        for n in 0..=3 {
            let mut text = String::from("a");
            for _ in 0..n {
                text.push_str(" b");
            }
            text.push_str(" c");
            let i = m.support_index(&fx.s(&text)).unwrap();
            assert_eq!(m.energies(i), &[int(c1_energy_oracle(n))]);
        }
    }

    #[test]
    fn reference_states_have_zero_energy() {
        let fx = Fixture::a(5);
        let all: Vec<usize> = (0..fx.partition.len()).collect();
        let m = ExponentialFamilyModel::from_parts(
            &fx.domain,
            &fx.pairs,
            &fx.edges,
            &fx.partition,
            &all,
        )
        .unwrap();
        for comp in m.components() {
            let i = m.support_index(&comp.reference).unwrap();
            assert_eq!(i, comp.range.start);
            assert!(m.energies(i).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn c2_model_has_two_free_pairs() {
        let fx = Fixture::a(6);
        let m = fx.model_of(&["c a"]);
        assert_eq!(m.loop_rank(), 0);
        assert_eq!(m.free_pairs(), &[0, 1]);
        assert!(m.determined_pairs().is_empty());
        assert!(m.constraint_lines(&fx.dict).is_empty());
        let text = |mm: usize, n: usize| {
            let mut parts = vec!["b"; mm];
            parts.extend(["c", "a"]);
            parts.extend(std::iter::repeat_n("b", n));
            parts.join(" ")
        };
        for mm in 0..=2 {
            for n in 0..=2 {
                let i = m.support_index(&fx.s(&text(mm, n))).unwrap();
                assert_eq!(m.energies(i), &[int(-(n as i64)), int(-(mm as i64))]);
            }
        }
    }

    #[test]
    fn zero_params_give_uniform_law() {
        let fx = Fixture::a(5);
        let m = fx.model_of(&["a c", "c a", "b"]);
        let beta = m.zero_params();
        let n = m.support().len() as f64;
        for s in m.support() {
            assert!((m.log_prob(&beta, s) + n.ln()).abs() < 1e-12);
        }
        assert_eq!(m.log_prob(&beta, &fx.s("a a")), f64::NEG_INFINITY);
        let table = m.exponents_from_params(&beta);
        assert!(table.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn truncated_geometric_law_on_c1() {
        let fx = Fixture::a(8);
        let m = fx.model_of(&["a c"]);
        let r: f64 = 0.3;
        let beta = ParamVector::new(vec![(1.0 - r).ln()], vec![0.0]);
        let big_n = 6;
        let norm: f64 = (0..=big_n).map(|n| (1.0 - r).powi(n)).sum();
        for n in 0..=big_n {
            let mut parts = vec!["a"];
            parts.extend(std::iter::repeat_n("b", n as usize));
            parts.push("c");
            let lp = m.log_prob(&beta, &fx.s(&parts.join(" ")));
            let expected = ((1.0 - r).powi(n) / norm).ln();
            assert!((lp - expected).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn component_mass_decomposition() {
        let fx = Fixture::a(5);
        let m = fx.model_of(&["a c", "c a", "c a c a"]);
        assert_eq!(m.free_pairs().len(), 1);
        let beta = ParamVector::new(vec![0.4], vec![0.3, -0.2, 1.5]);
        let probs = m.log_probs(&beta);
        let mut total = 0.0;
        for (k, comp) in m.components().iter().enumerate() {
            let direct: f64 = comp.range.clone().map(|i| probs[i].exp()).sum();
            let formula = m.component_mass(&beta, k);
            assert!((direct.ln() - formula.ln()).abs() < 1e-12);
            total += formula;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponents_and_loop_kill() {
        let fx = Fixture::a(6);
        let m = fx.model_of(&["a c", "c a c a"]);
        let t = -0.7;
        let table = m.exponents_from_params(&ParamVector::new(vec![t], vec![0.0, 0.0]));
        assert_eq!(table.value(0), t);
        assert_eq!(table.status(0), ExponentStatus::Determined);
        assert_eq!(table.status(1), ExponentStatus::Free);
        let p = |s: &str| fx.s(s);
        assert_eq!(table.between(&p("a b"), &p("a")), Some(-t));

        for free in [int(3), BigRational::new(7.into(), (-2).into())] {
            let exps = m.exponents_exact(std::slice::from_ref(&free));
            for l in m.loops() {
                let dot: BigRational = l
                    .counts
                    .iter()
                    .zip(m.active_pairs())
                    .map(|(&c, &i)| &exps[i] * int(c))
                    .sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn canonicalization() {
        let fx = Fixture::a(5);
        let m = fx.model_of(&["a c", "c a"]);
        let beta = ParamVector::new(vec![0.2], vec![1.0, 2.5]);
        let canon = m.canonicalize(&beta);
        assert_eq!(canon.components, vec![-1.5, 0.0]);
        assert_eq!(m.canonicalize(&canon), canon);
        let shifted = ParamVector::new(beta.free.clone(), vec![4.0, 5.5]);
        assert_eq!(m.canonicalize(&shifted), canon);
        for s in m.support() {
            assert!((m.log_prob(&beta, s) - m.log_prob(&canon, s)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_selection_is_rejected() {
        let fx = Fixture::a(3);
        assert!(ExponentialFamilyModel::from_parts(
            &fx.domain,
            &fx.pairs,
            &fx.edges,
            &fx.partition,
            &[]
        )
        .is_err());
        assert!(ExponentialFamilyModel::from_parts(
            &fx.domain,
            &fx.pairs,
            &fx.edges,
            &fx.partition,
            &[10_000]
        )
        .is_err());
    }

    #[test]
    fn no_active_pairs() {
        let fx = Fixture::a(3);
        let m = fx.model_of(&["b"]);
        assert!(m.active_pairs().is_empty());
        assert!(m.free_pairs().is_empty());
        assert_eq!(m.dimension(), 0);
    }

    #[test]
    fn canonical_vectors_identify_distributions() {
        // two canonical vectors are equal iff they give the same law
        let fx = Fixture::a(5);
        let m = fx.model_of(&["a c", "c a"]);
        let grid = [-0.5, 0.0, 0.7];
        let mut seen: Vec<(ParamVector, Vec<f64>)> = Vec::new();
        for &f0 in &grid {
            for &c1 in &grid {
                for &c0 in &grid {
                    let beta = m.canonicalize(&ParamVector::new(vec![f0], vec![c0, c1]));
                    let law = m.log_probs(&beta);
                    for (other, other_law) in &seen {
                        let same_law = law
                            .iter()
                            .zip(other_law)
                            .all(|(a, b)| (a - b).abs() < 1e-12);
                        assert_eq!(same_law, other == &beta);
                    }
                    seen.push((beta, law));
                }
            }
        }
        assert_eq!(m.dimension(), 2);
    }

    /// Every closed walk of at most four edges has a count vector equal to
    /// the integer combination of fundamental loops given by the non-tree
    /// edges it crosses.
    #[test]
    fn closed_walks_lie_in_integer_loop_span() {
        let fx = Fixture::a(4);
        assert!(fx.domain.len() <= 150);
        let all: Vec<usize> = (0..fx.partition.len()).collect();
        let cycles = fundamental_cycles(&fx.partition, &fx.edges, &all, fx.pairs.len());
        let loop_of_edge: HashMap<usize, &LoopVector> =
            cycles.loops.iter().map(|l| (l.edge, l)).collect();
        let width = cycles.active_pairs.len();
        let pos: HashMap<usize, usize> = cycles
            .active_pairs
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, k))
            .collect();
        let mut adjacency: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); fx.domain.len()];
        for (ei, e) in fx.edges.iter().enumerate() {
            adjacency[e.from].push((ei, e.to, -1));
            adjacency[e.to].push((ei, e.from, 1));
        }
        let mut checked = 0;
        // walks as (current state, counts, loop coefficients per non-tree edge)
        for start in 0..fx.domain.len() {
            let mut stack = vec![(start, vec![0i64; width], HashMap::<usize, i64>::new(), 0)];
            while let Some((v, counts, coeffs, len)) = stack.pop() {
                if len > 0 && v == start {
                    let mut combo = vec![0i64; width];
                    for (e, k) in &coeffs {
                        for (c, l) in combo.iter_mut().zip(&loop_of_edge[e].counts) {
                            *c += k * l;
                        }
                    }
                    assert_eq!(combo, counts);
                    checked += 1;
                }
                if len == 4 {
                    continue;
                }
                for &(ei, next, sign) in &adjacency[v] {
                    let mut c = counts.clone();
                    c[pos[&fx.edges[ei].pair]] += sign;
                    let mut k = coeffs.clone();
                    if loop_of_edge.contains_key(&ei) {
                        // the loop crosses its edge backwards (σ = 1)
                        *k.entry(ei).or_insert(0) += sign;
                    }
                    stack.push((next, c, k, len + 1));
                }
            }
        }
        assert!(checked > 100);
    }
}

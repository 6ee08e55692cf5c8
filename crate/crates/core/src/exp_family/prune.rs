//! Greedy removal of pairs that do not change the model on a finite domain.

use std::collections::BTreeMap;

use super::span::{to_rational, LoopSpan};
use crate::graph::{build_graph, components, ComponentPartition, Domain, Edge};
use crate::strings::PairFamily;

/// Drops pairs, last first, whose removal leaves the component partition
/// and the family of substitute measures on `domain` unchanged.
///
/// With the partition fixed, removing pair `p` can only enlarge the model.
/// It stays equal iff every `p`-edge moves the log-probability by the same
/// amount under every admissible exponent vector of the reduced family,
/// i.e. iff the reduced path-count differences `U'(π_to) − U'(π_from)` of
/// all `p`-edges agree modulo the loops of the components involved. For
/// two edges in different components the loops of both count, since a
/// support may select either.
pub fn prune_redundant_pairs(domain: &Domain, pairs: &PairFamily) -> PairFamily {
    let mut current = pairs.clone();
    for p in (0..pairs.len()).rev() {
        if is_redundant(domain, &current, p) {
            current = current.without(p);
        }
    }
    current
}

fn is_redundant(domain: &Domain, pairs: &PairFamily, p: usize) -> bool {
    let edges = build_graph(domain, pairs);
    let p_edges: Vec<&Edge> = edges.iter().filter(|e| e.pair == p).collect();
    let reduced = pairs.without(p);
    if p_edges.is_empty() {
        return true;
    }
    let full_partition = components(domain, &edges);
    let reduced_edges = build_graph(domain, &reduced);
    let partition = components(domain, &reduced_edges);
    if partition.components() != full_partition.components() {
        return false;
    }

    let width = reduced.len();
    let all: Vec<usize> = (0..partition.len()).collect();
    let counts = partition.path_counts(&reduced_edges, &all, width);
    let spans = component_spans(&partition, &reduced_edges, &counts, width);

    // representative difference per component, checked within the component
    let mut reps: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    for e in p_edges {
        let to = counts[e.to].as_ref().expect("every state has a path");
        let from = counts[e.from].as_ref().expect("every state has a path");
        let d: Vec<i64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        let c = partition.component_of(e.from);
        match reps.get(&c) {
            None => {
                reps.insert(c, d);
            }
            Some(r) => {
                if !spans[c].contains(&to_rational(&difference(&d, r))) {
                    return false;
                }
            }
        }
    }
    let reps: Vec<(usize, Vec<i64>)> = reps.into_iter().collect();
    for (i, (c, r)) in reps.iter().enumerate() {
        for (c2, r2) in &reps[i + 1..] {
            let joint = spans[*c].union(&spans[*c2]);
            if !joint.contains(&to_rational(&difference(r, r2))) {
                return false;
            }
        }
    }
    true
}

fn difference(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Loop span of every component over the full pair width.
fn component_spans(
    partition: &ComponentPartition,
    edges: &[Edge],
    counts: &[Option<Vec<i64>>],
    width: usize,
) -> Vec<LoopSpan> {
    let mut spans = vec![LoopSpan::empty(width); partition.len()];
    for (ei, e) in edges.iter().enumerate() {
        if partition.is_tree_edge(ei, e) {
            continue;
        }
        let to = counts[e.to].as_ref().expect("every state has a path");
        let from = counts[e.from].as_ref().expect("every state has a path");
        let mut v = difference(to, from);
        v[e.pair] += 1;
        if v.iter().any(|&x| x != 0) {
            spans[partition.component_of(e.from)].push(&to_rational(&v));
        }
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{enumerate_domain, reachable_component, DomainSpec, DEFAULT_BUDGET};
    use crate::strings::{pairs_from_family, Dictionary};

    fn fixture() -> (Dictionary, PairFamily) {
        let d = Dictionary::new(["a", "b", "c"]).unwrap();
        let p = |s: &str| d.parse(s).unwrap();
        let pairs =
            pairs_from_family(&d, &[vec![p("a"), p("a b")], vec![p("c"), p("b c")]]).unwrap();
        (d, pairs)
    }

    fn component(start: &str, max_len: usize) -> (Dictionary, PairFamily, Domain) {
        let (d, pairs) = fixture();
        let spec = DomainSpec::length_bounded(d.clone(), max_len).unwrap();
        let dom =
            reachable_component(&spec, &pairs, &d.parse(start).unwrap(), DEFAULT_BUDGET).unwrap();
        (d, pairs, dom)
    }

    #[test]
    fn c1_keeps_one_pair() {
        let (d, pairs, dom) = component("a c", 6);
        let pruned = prune_redundant_pairs(&dom, &pairs);
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned.pairs()[0].y0(), &d.parse("a").unwrap());
        // either pair alone gives the same partition
        for i in 0..2 {
            let alone = pairs.without(i);
            let p1 = components(&dom, &build_graph(&dom, &alone));
            let p2 = components(&dom, &build_graph(&dom, &pairs));
            assert_eq!(p1.components(), p2.components());
        }
    }

    #[test]
    fn c2_keeps_both() {
        let (_, pairs, dom) = component("c a", 6);
        assert_eq!(prune_redundant_pairs(&dom, &pairs), pairs);
    }

    #[test]
    fn empty_family() {
        let (d, _) = fixture();
        let dom = enumerate_domain(&DomainSpec::length_bounded(d, 2).unwrap(), 100).unwrap();
        let empty = PairFamily::new(Vec::new());
        assert!(prune_redundant_pairs(&dom, &empty).is_empty());
    }

    #[test]
    fn unused_pair_is_dropped() {
        let (d, _) = fixture();
        let p = |s: &str| d.parse(s).unwrap();
        let pairs =
            pairs_from_family(&d, &[vec![p("a"), p("b")], vec![p("a a a"), p("b b b")]]).unwrap();
        let dom =
            enumerate_domain(&DomainSpec::length_bounded(d.clone(), 2).unwrap(), 100).unwrap();
        let pruned = prune_redundant_pairs(&dom, &pairs);
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned.pairs()[0].y1(), &p("b"));
    }

    #[test]
    fn implied_pair_is_dropped() {
        // (aa, bb) only ever links states that (a, b) already links by two
        // forward steps, so it carries no extra freedom
        let d = Dictionary::new(["a", "b"]).unwrap();
        let p = |s: &str| d.parse(s).unwrap();
        let pairs =
            pairs_from_family(&d, &[vec![p("a"), p("b")], vec![p("a a"), p("b b")]]).unwrap();
        let dom =
            enumerate_domain(&DomainSpec::length_bounded(d.clone(), 3).unwrap(), 100).unwrap();
        assert_eq!(prune_redundant_pairs(&dom, &pairs), pairs.without(1));
    }

    #[test]
    fn tying_pair_is_not_redundant() {
        // (a, b) forces β(ac, bc) = β(ad, bd); without it the two are free
        let d = Dictionary::new(["a", "b", "c", "d"]).unwrap();
        let p = |s: &str| d.parse(s).unwrap();
        let pairs = pairs_from_family(
            &d,
            &[
                vec![p("a"), p("b")],
                vec![p("a c"), p("b c")],
                vec![p("a d"), p("b d")],
            ],
        )
        .unwrap();
        assert_eq!(pairs.pairs()[0].y0(), &p("a"));
        let dom = Domain::from_sentences(vec![p("a c"), p("b c"), p("a d"), p("b d")]).unwrap();
        assert!(!is_redundant(&dom, &pairs, 0));
        assert!(is_redundant(&dom, &pairs, 2));
    }
}

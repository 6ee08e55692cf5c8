//! Markov substitute processes on finite word sequences.
//!
//! A measure `P` on sentences is a Markov substitute measure for a family
//! of substitute pairs when, for every pair `(y, y')` and every two-sided
//! context `x` with both results in the domain,
//! `P(α(x, y')) = exp(β(y, y')) · P(α(x, y))` with a context-free
//! exponent `β`. This crate works on finite domains and provides:
//!
//! - [`strings`]: dictionaries, sentences, the insertion operator and pair
//!   families;
//! - [`graph`]: domain enumeration, the substitution multigraph, its
//!   components, BFS forests and fundamental cycles;
//! - [`exp_family`]: the exponential-family representation (free pairs,
//!   dependency matrix, energies, `P_β`) and pair pruning;
//! - [`measures`]: the independent process, component mixtures, the
//!   substitute-property verifier and parameter recovery;
//! - [`samplers`]: seeded exact, conditioned and swap-move MCMC samplers;
//! - [`chain`]: the bridge between positive Markov chains and exponents;
//! - [`inference`]: exponent estimates and exact maximum likelihood;
//! - [`formats`]: the tab-separated file formats.

pub mod chain;
pub mod error;
pub mod exp_family;
pub mod exponents;
pub mod formats;
pub mod graph;
pub mod inference;
pub mod logspace;
pub mod measures;
pub mod samplers;
pub mod strings;

pub use chain::{
    chain_law, chain_pair_family, chain_to_exponents, conditional_equivalence, exponents_to_chain,
    PerronData, TransitionMatrix,
};
pub use error::{Error, Result};
pub use exp_family::{
    components_containing, loop_span, prune_redundant_pairs, select_free_pairs, state_energies,
    ExponentialFamilyModel, FreeSelection, LoopSpan, ParamVector,
};
pub use exponents::{ExponentStatus, ExponentTable};
pub use graph::{
    build_graph, components, enumerate_domain, fundamental_cycles, reachable_component,
    ComponentPartition, Domain, DomainKind, DomainSpec, Edge, LoopVector, Orientation,
    DEFAULT_BUDGET,
};
pub use inference::{empirical_exponents, mle_fit, Corpus, EmpiricalExponent, FitReport};
pub use measures::{
    bproc_measure, indep_length_logprob, indep_logprob, params_from_measure, verify_substitute,
    ComponentMixtureSpec, FiniteMeasure, SubProbability, Verdict, Violation,
};
pub use samplers::{
    sample_conditioned, sample_indep, swap_mcmc, ConditionedSampler, FiniteSampler, McmcTrace,
    SeededRng,
};
pub use strings::{
    insert, occurrences, pairs_from_family, Context, Dictionary, PairFamily, Sentence,
    SubstitutePair, WordId,
};

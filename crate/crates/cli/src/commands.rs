use std::io::Read;
use std::path::Path;

use msp_core::exp_family::format_ratio;
use msp_core::formats::{
    read_corpus, read_exponents, read_matrix, read_measure, write_corpus, write_energy_table,
    write_exponents, write_matrix, write_trace,
};
use msp_core::inference::{DEFAULT_FIT_ITERATIONS, DEFAULT_FIT_TOLERANCE};
use msp_core::{
    bproc_measure, chain_to_exponents, empirical_exponents, exponents_to_chain, mle_fit,
    prune_redundant_pairs, swap_mcmc, verify_substitute, Context, Corpus, Dictionary, Domain,
    ExponentialFamilyModel, FiniteMeasure, FiniteSampler, SeededRng, Violation,
};
use serde_json::{json, Value};

use crate::spec::{pair_label, Loaded, ModelSpec};
use crate::{Failure, Flags};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_DRAWS: usize = 100;
pub const DEFAULT_MCMC_STEPS: usize = 1000;

pub struct Output {
    pub text: String,
    pub json: Value,
    /// A check failed; the report is still printed and the exit code is 2.
    pub failed: bool,
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn load(flags: &Flags) -> Result<Loaded, Failure> {
    let path = flags
        .spec
        .as_ref()
        .ok_or_else(|| invalid("--spec is required"))?;
    ModelSpec::read(path)?.load(flags.max_len)
}

fn read_input(path: Option<&Path>) -> Result<String, Failure> {
    let mut text = String::new();
    match path {
        Some(p) => {
            text = std::fs::read_to_string(p)
                .map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?
        }
        None => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| invalid(format!("cannot read standard input: {e}")))?;
        }
    }
    Ok(text)
}

fn require_seed(flags: &Flags, command: &str) -> Result<u64, Failure> {
    flags.seed.ok_or_else(|| {
        invalid(format!(
            "{command} is randomized and needs an explicit --seed"
        ))
    })
}

/// Reals in JSON: non-finite values become strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn run(command: &str, input: Option<&Path>, flags: &Flags) -> Result<Output, Failure> {
    match command {
        "components" => components(&load(flags)?),
        "expfam" => expfam(&load(flags)?),
        "prob" => prob(&load(flags)?, flags),
        "verify" => verify(&load(flags)?, input),
        "sample" => sample(&load(flags)?, flags),
        "mcmc" => mcmc(&load(flags)?, flags),
        "chain-to-exp" => chain_to_exp(&load(flags)?, input),
        "exp-to-chain" => exp_to_chain(&load(flags)?, input, flags),
        "fit" => fit(&load(flags)?, input, flags),
        "prune" => prune(&load(flags)?),
        other => Err(invalid(format!("unknown command {other}"))),
    }
}

fn truncation_header(l: &Loaded) -> String {
    format!(
        "# domain\t{}\t{} sentences\n# truncation\tcomponents are computed inside {}; substitutions leaving it are dropped\n",
        l.domain_spec.describe(),
        l.domain.len(),
        l.domain_spec.describe()
    )
}

fn render_all<'a>(
    dict: &Dictionary,
    it: impl Iterator<Item = &'a msp_core::Sentence>,
) -> Vec<String> {
    it.map(|s| dict.render(s)).collect()
}

fn components(l: &Loaded) -> Result<Output, Failure> {
    let mut text = truncation_header(l);
    text.push_str("# component\treference\tsize\tmembers\n");
    let mut rows = Vec::new();
    for c in 0..l.partition.len() {
        let members = render_all(
            &l.dict,
            l.partition.members(c).iter().map(|&i| l.domain.sentence(i)),
        );
        let reference = l.dict.render(l.domain.sentence(l.partition.reference(c)));
        text.push_str(&format!(
            "{c}\t{reference}\t{}\t{}\n",
            members.len(),
            members.join(", ")
        ));
        rows.push(json!({"component": c, "reference": reference, "members": members}));
    }
    Ok(Output {
        text,
        json: json!({
            "command": "components",
            "domain": l.domain_spec.describe(),
            "domain_size": l.domain.len(),
            "truncation": l.domain_spec.describe(),
            "components": rows,
        }),
        failed: false,
    })
}

fn expfam(l: &Loaded) -> Result<Output, Failure> {
    let model = l.model()?;
    let dict = &l.dict;
    let mut text = truncation_header(l);
    text.push_str(&format!(
        "dimension\t{}\nfree_pairs\t{}\nloop_rank\t{}\n",
        model.dimension(),
        model.free_pairs().len(),
        model.loop_rank()
    ));
    let label = |i: usize| pair_label(dict, &model.pairs().pairs()[i]);
    let mut free = Vec::new();
    for &f in model.free_pairs() {
        let (a, b) = label(f);
        text.push_str(&format!("free\t{a}\t{b}\n"));
        free.push(json!([a, b]));
    }
    // row j of the dependency matrix: coefficients of the free pairs
    let mut determined = Vec::new();
    for (j, &d) in model.determined_pairs().iter().enumerate() {
        let (a, b) = label(d);
        let coeffs: Vec<String> = model
            .dependency()
            .iter()
            .map(|row| format_ratio(&row[j]))
            .collect();
        text.push_str(&format!("determined\t{a}\t{b}\t{}\n", coeffs.join("\t")));
        determined.push(json!({"pair": [a, b], "coefficients": coeffs}));
    }
    let mut inactive = Vec::new();
    for i in 0..model.pairs().len() {
        if !model.active_pairs().contains(&i) {
            let (a, b) = label(i);
            text.push_str(&format!("inactive\t{a}\t{b}\n"));
            inactive.push(json!([a, b]));
        }
    }
    let constraints = model.constraint_lines(dict);
    for c in &constraints {
        text.push_str(&format!("constraint\t{c}\n"));
    }
    let mut comps = Vec::new();
    for (k, c) in model.components().iter().enumerate() {
        let reference = dict.render(&c.reference);
        text.push_str(&format!("component\t{k}\t{reference}\t{}\n", c.range.len()));
        comps.push(json!({"index": k, "reference": reference, "size": c.range.len()}));
    }
    text.push_str(&write_energy_table(&model, dict));
    let energies: Vec<Value> = model
        .support()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            json!({
                "sentence": dict.render(s),
                "component": model.component_of_state(i),
                "energies": model.energies(i).iter().map(format_ratio).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Output {
        text,
        json: json!({
            "command": "expfam",
            "domain": l.domain_spec.describe(),
            "dimension": model.dimension(),
            "loop_rank": model.loop_rank(),
            "free": free,
            "determined": determined,
            "inactive": inactive,
            "constraints": constraints,
            "components": comps,
            "energies": energies,
        }),
        failed: false,
    })
}

/// The spec's measure: the component mixture when `[measure]` is present,
/// otherwise `P_β` with the `[params]` values.
fn spec_measure(l: &Loaded, tol: f64) -> Result<FiniteMeasure, Failure> {
    if l.spec.measure.is_some() {
        Ok(bproc_measure(&l.mixture()?, &l.domain, &l.partition)?)
    } else {
        let model = l.model()?;
        Ok(model.to_measure(&l.params(&model, tol)?))
    }
}

fn prob(l: &Loaded, flags: &Flags) -> Result<Output, Failure> {
    let p = spec_measure(l, flags.tol.unwrap_or(DEFAULT_TOL))?;
    let input = read_input(None)?;
    let mut text = String::from("# sentence\tlog_probability\n");
    let mut rows = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let s = l
            .dict
            .parse_nonempty(line)
            .map_err(|e| invalid(format!("line {}: {e}", n + 1)))?;
        let lp = p.log_prob(&s);
        let rendered = l.dict.render(&s);
        text.push_str(&format!("{rendered}\t{lp}\n"));
        rows.push(json!({"sentence": rendered, "log_probability": num(lp)}));
    }
    Ok(Output {
        text,
        json: json!({"command": "prob", "results": rows}),
        failed: false,
    })
}

fn context_text(dict: &Dictionary, x: &Context) -> String {
    format!("({} _ {})", dict.render(&x.left), dict.render(&x.right))
        .replace("( _", "(_")
        .replace("_ )", "_)")
}

fn violation_text(l: &Loaded, v: &Violation) -> String {
    let pair = |i: usize| {
        let (a, b) = pair_label(&l.dict, &l.pairs.pairs()[i]);
        format!("({a}, {b})")
    };
    match v {
        Violation::Mixed {
            pair: i,
            context,
            zero_side,
        } => format!(
            "mixed\t{}\t{}\tzero mass on side {zero_side}",
            pair(*i),
            context_text(&l.dict, context)
        ),
        Violation::Inconsistent {
            pair: i,
            low,
            high,
            spread,
        } => format!(
            "inconsistent\t{}\t{} vs {}\tspread {spread:e}",
            pair(*i),
            context_text(&l.dict, low),
            context_text(&l.dict, high)
        ),
        Violation::OutsideDomain { sentence, prob } => {
            format!("outside\t{}\t\tmass {prob}", l.dict.render(sentence))
        }
    }
}

fn verify(l: &Loaded, input: Option<&Path>) -> Result<Output, Failure> {
    let p = read_measure(&read_input(input)?, &l.dict)?;
    let verdict = verify_substitute(&p, &l.pairs, &l.domain);
    let mut text = String::from("# y0\ty1\tstatus\texponent\tpositive\tzero\tmixed\tspread\n");
    let mut pairs = Vec::new();
    for (i, r) in verdict.reports.iter().enumerate() {
        let (a, b) = pair_label(&l.dict, &l.pairs.pairs()[i]);
        text.push_str(&format!(
            "pair\t{a}\t{b}\t{}\t{}\t{}\t{}\t{}\t{:e}\n",
            r.status.as_str(),
            r.exponent,
            r.positive_contexts,
            r.zero_contexts,
            r.mixed_contexts,
            r.spread
        ));
        pairs.push(json!({
            "pair": [a, b],
            "status": r.status.as_str(),
            "exponent": num(r.exponent),
            "positive_contexts": r.positive_contexts,
            "zero_contexts": r.zero_contexts,
            "mixed_contexts": r.mixed_contexts,
            "spread": num(r.spread),
        }));
    }
    let mut violations = Vec::new();
    for v in &verdict.violations {
        let line = violation_text(l, v);
        text.push_str(&format!("violation\t{line}\n"));
        violations.push(json!(line));
    }
    let passed = verdict.passed();
    text.push_str(&format!("swap_residual\t{:e}\n", verdict.swap_residual));
    text.push_str(&format!(
        "verdict\t{}\n",
        if passed { "pass" } else { "fail" }
    ));
    Ok(Output {
        text,
        json: json!({
            "command": "verify",
            "pairs": pairs,
            "violations": violations,
            "swap_residual": num(verdict.swap_residual),
            "passed": passed,
        }),
        failed: !passed,
    })
}

fn sample(l: &Loaded, flags: &Flags) -> Result<Output, Failure> {
    let seed = require_seed(flags, "sample")?;
    let draws = flags.steps.unwrap_or(DEFAULT_DRAWS);
    let p = spec_measure(l, flags.tol.unwrap_or(DEFAULT_TOL))?;
    let sampler = FiniteSampler::new(&p)?;
    let mut rng = SeededRng::new(seed);
    let corpus = Corpus::from_sentences((0..draws).map(|_| sampler.sample(&mut rng).clone()))?;
    let text = format!("# seed\t{seed}\n# draws\t{draws}\n") + &write_corpus(&corpus, &l.dict);
    let counts: Vec<Value> = corpus
        .entries()
        .map(|(s, n)| json!({"sentence": l.dict.render(s), "count": n}))
        .collect();
    Ok(Output {
        text,
        json: json!({"command": "sample", "seed": seed, "draws": draws, "counts": counts}),
        failed: false,
    })
}

fn mcmc(l: &Loaded, flags: &Flags) -> Result<Output, Failure> {
    let seed = require_seed(flags, "mcmc")?;
    let steps = flags.steps.unwrap_or(DEFAULT_MCMC_STEPS);
    let model = l.model()?;
    let beta = l.params(&model, flags.tol.unwrap_or(DEFAULT_TOL))?;
    let start = match &l.spec.support {
        Some(s) => l.dict.parse_nonempty(&s.contains[0])?,
        None => model.components()[0].reference.clone(),
    };
    let mut rng = SeededRng::new(seed);
    let trace = swap_mcmc(
        &start,
        &model.exponents_from_params(&beta),
        &l.domain,
        steps,
        &mut rng,
    )?;
    let text = format!(
        "# seed\t{seed}\n# steps\t{steps}\n# acceptance_rate\t{}\n# frozen\t{}\n",
        trace.acceptance_rate(),
        trace.frozen
    ) + &write_trace(&trace, &l.dict);
    let frequencies: Vec<Value> = trace
        .frequencies
        .iter()
        .map(|(s, f)| json!({"sentence": l.dict.render(s), "frequency": f}))
        .collect();
    Ok(Output {
        text,
        json: json!({
            "command": "mcmc",
            "seed": seed,
            "steps": steps,
            "acceptance_rate": trace.acceptance_rate(),
            "frozen": trace.frozen,
            "states": render_all(&l.dict, trace.states.iter()),
            "accepted": trace.accepted,
            "frequencies": frequencies,
        }),
        failed: false,
    })
}

fn chain_len(l: &Loaded) -> Result<usize, Failure> {
    match l.domain.sentences() {
        [first, ..] if l.domain.sentences().iter().all(|s| s.len() == first.len()) => {
            Ok(first.len())
        }
        _ => Err(invalid("chain commands need a fixed-length domain")),
    }
}

fn exponent_json(dict: &Dictionary, t: &msp_core::ExponentTable) -> Vec<Value> {
    t.pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (a, b) = pair_label(dict, p);
            json!({"pair": [a, b], "value": num(t.value(i)), "status": t.status(i).as_str()})
        })
        .collect()
}

fn chain_to_exp(l: &Loaded, input: Option<&Path>) -> Result<Output, Failure> {
    let m = read_matrix(&read_input(input)?)?;
    if m.size() != l.dict.len() {
        return Err(invalid(format!(
            "matrix is {0}x{0} but the dictionary has {1} words",
            m.size(),
            l.dict.len()
        )));
    }
    let len = chain_len(l)?;
    let table = chain_to_exponents(&m, len)?;
    Ok(Output {
        text: write_exponents(&table, &l.dict),
        json: json!({"command": "chain-to-exp", "length": len, "exponents": exponent_json(&l.dict, &table)}),
        failed: false,
    })
}

fn exp_to_chain(l: &Loaded, input: Option<&Path>, flags: &Flags) -> Result<Output, Failure> {
    let table = read_exponents(&read_input(input)?, &l.dict)?;
    let anchor = match &flags.anchor {
        Some(w) => l
            .dict
            .id(w)
            .ok_or_else(|| invalid(format!("anchor {w:?} is not in the dictionary")))?,
        None => 0,
    };
    let (m, pf) = exponents_to_chain(&table, l.dict.len(), anchor)?;
    let anchor_word = l.dict.word(anchor).expect("anchor id").to_string();
    let psi: Vec<String> = pf.psi.iter().map(f64::to_string).collect();
    let text = format!(
        "# anchor\t{anchor_word}\n# lambda\t{}\n# psi\t{}\n# power_iterations\t{}\n",
        pf.lambda,
        psi.join("\t"),
        pf.iterations
    ) + &write_matrix(&m);
    Ok(Output {
        text,
        json: json!({
            "command": "exp-to-chain",
            "anchor": anchor_word,
            "lambda": num(pf.lambda),
            "psi": pf.psi,
            "power_iterations": pf.iterations,
            "matrix": m.rows(),
        }),
        failed: false,
    })
}

fn fit(l: &Loaded, input: Option<&Path>, flags: &Flags) -> Result<Output, Failure> {
    let corpus = read_corpus(&read_input(input)?, &l.dict)?;
    let model: ExponentialFamilyModel = l.model()?;
    let tol = flags.tol.unwrap_or(DEFAULT_FIT_TOLERANCE);
    let max_iter = flags.steps.unwrap_or(DEFAULT_FIT_ITERATIONS);
    let report = mle_fit(&corpus, &model, tol, max_iter)?;
    let dict = &l.dict;
    let mut text = format!(
        "log_likelihood\t{}\niterations\t{}\ngradient_norm\t{:e}\n",
        report.log_likelihood, report.iterations, report.gradient_norm
    );
    let mut free = Vec::new();
    for (k, &f) in model.free_pairs().iter().enumerate() {
        let (a, b) = pair_label(dict, &model.pairs().pairs()[f]);
        text.push_str(&format!("free\t{a}\t{b}\t{}\n", report.params.free[k]));
        free.push(json!({"pair": [a, b], "value": num(report.params.free[k])}));
    }
    let mut comps = Vec::new();
    for (k, c) in model.components().iter().enumerate() {
        let reference = dict.render(&c.reference);
        text.push_str(&format!(
            "component\t{k}\t{reference}\t{}\n",
            report.params.components[k]
        ));
        comps.push(json!({"reference": reference, "value": num(report.params.components[k])}));
    }
    let mut empirical = Vec::new();
    for e in empirical_exponents(&corpus, model.pairs(), &l.domain)? {
        let (a, b) = pair_label(dict, &model.pairs().pairs()[e.pair]);
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| v.to_string());
        text.push_str(&format!(
            "empirical\t{a}\t{b}\t{}\t{}\t{}\n",
            fmt(e.estimate),
            fmt(e.std_error),
            e.contexts
        ));
        empirical.push(json!({
            "pair": [a, b],
            "estimate": e.estimate.map(num),
            "std_error": e.std_error.map(num),
            "contexts": e.contexts,
        }));
    }
    Ok(Output {
        text,
        json: json!({
            "command": "fit",
            "log_likelihood": num(report.log_likelihood),
            "iterations": report.iterations,
            "gradient_norm": num(report.gradient_norm),
            "free": free,
            "components": comps,
            "empirical": empirical,
        }),
        failed: false,
    })
}

/// Prunes over the selected support, which is the whole domain when the
/// spec has no `[support]` section.
fn prune(l: &Loaded) -> Result<Output, Failure> {
    let support = Domain::from_sentences(
        l.selection
            .iter()
            .flat_map(|&c| l.partition.members(c))
            .map(|&i| l.domain.sentence(i).clone())
            .collect(),
    )?;
    let kept = prune_redundant_pairs(&support, &l.pairs);
    let mut text = truncation_header(l) + &format!("# support\t{} sentences\n", support.len());
    let (mut k, mut d) = (Vec::new(), Vec::new());
    for p in l.pairs.iter() {
        let (a, b) = pair_label(&l.dict, p);
        if kept.index_of(p).is_some() {
            text.push_str(&format!("kept\t{a}\t{b}\n"));
            k.push(json!([a, b]));
        } else {
            text.push_str(&format!("dropped\t{a}\t{b}\n"));
            d.push(json!([a, b]));
        }
    }
    Ok(Output {
        text,
        json: json!({
            "command": "prune",
            "domain": l.domain_spec.describe(),
            "support_size": support.len(),
            "kept": k,
            "dropped": d,
        }),
        failed: false,
    })
}

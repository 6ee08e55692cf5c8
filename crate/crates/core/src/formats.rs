//! Tab-separated text formats.
//!
//! Every format is one record per line, fields separated by a single tab.
//! Blank lines and lines starting with `#` are ignored on input; writers
//! emit one `#` header naming the columns. Sentences are space-joined
//! tokens. Reals are written in Rust's shortest round-trip notation, exact
//! rationals as `p/q`.
//!
//! | format    | columns                                          |
//! |-----------|--------------------------------------------------|
//! | measure   | sentence, probability                            |
//! | matrix    | one row of the transition matrix per line        |
//! | corpus    | count, sentence                                  |
//! | energies  | sentence, component, one `p/q` per free pair     |
//! | exponents | y0, y1, value, status                            |
//! | trace     | step, sentence, accepted (`1` or `0`)            |

use num::BigRational;

use crate::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::exp_family::{format_ratio, parse_ratio, ExponentialFamilyModel};
use crate::exponents::{ExponentStatus, ExponentTable};
use crate::inference::Corpus;
use crate::measures::FiniteMeasure;
use crate::samplers::McmcTrace;
use crate::strings::{Dictionary, PairFamily, Sentence, SubstitutePair};

/// Non-comment lines with their 1-based line numbers, split on tabs.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn expect_fields(line: usize, fields: &[&str], n: usize) -> Result<()> {
    if fields.len() != n {
        return Err(format_err(
            line,
            format!("expected {n} tab-separated fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

fn parse_f64(line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| format_err(line, format!("{field:?} is not a number")))
}

fn parse_sentence(line: usize, dict: &Dictionary, field: &str) -> Result<Sentence> {
    dict.parse_nonempty(field)
        .map_err(|e| format_err(line, e.to_string()))
}

pub fn read_measure(text: &str, dict: &Dictionary) -> Result<FiniteMeasure> {
    let mut entries = Vec::new();
    for (line, f) in records(text) {
        expect_fields(line, &f, 2)?;
        entries.push((parse_sentence(line, dict, f[0])?, parse_f64(line, f[1])?));
    }
    FiniteMeasure::new(entries)
}

pub fn write_measure(m: &FiniteMeasure, dict: &Dictionary) -> String {
    let mut out = String::from("# sentence\tprobability\n");
    for (s, p) in m.entries() {
        out.push_str(&format!("{}\t{}\n", dict.render(s), p));
    }
    out
}

/// Rows of a transition matrix; the initial law is set uniform.
pub fn read_matrix(text: &str) -> Result<TransitionMatrix> {
    let mut rows = Vec::new();
    for (line, f) in records(text) {
        rows.push(
            f.iter()
                .map(|x| parse_f64(line, x))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    TransitionMatrix::with_uniform_initial(rows)
}

pub fn write_matrix(m: &TransitionMatrix) -> String {
    let mut out = String::from("# transition matrix, one row per line\n");
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

pub fn read_corpus(text: &str, dict: &Dictionary) -> Result<Corpus> {
    let mut entries = Vec::new();
    for (line, f) in records(text) {
        expect_fields(line, &f, 2)?;
        entries.push((parse_sentence(line, dict, f[1])?, parse_f64(line, f[0])?));
    }
    Corpus::new(entries)
}

pub fn write_corpus(c: &Corpus, dict: &Dictionary) -> String {
    let mut out = String::from("# count\tsentence\n");
    for (s, n) in c.entries() {
        out.push_str(&format!("{}\t{}\n", n, dict.render(s)));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub sentence: Sentence,
    /// Position of the component in the model.
    pub component: usize,
    pub energies: Vec<BigRational>,
}

/// Support states in model order with their exact free energies.
pub fn write_energy_table(model: &ExponentialFamilyModel, dict: &Dictionary) -> String {
    let mut header = String::from("# sentence\tcomponent");
    for &f in model.free_pairs() {
        let p = &model.pairs().pairs()[f];
        header.push_str(&format!(
            "\tU({},{})",
            dict.render_compact(p.y0()),
            dict.render_compact(p.y1())
        ));
    }
    let mut out = header + "\n";
    for (i, s) in model.support().iter().enumerate() {
        out.push_str(&dict.render(s));
        out.push_str(&format!("\t{}", model.component_of_state(i)));
        for u in model.energies(i) {
            out.push('\t');
            out.push_str(&format_ratio(u));
        }
        out.push('\n');
    }
    out
}

pub fn read_energy_table(text: &str, dict: &Dictionary) -> Result<Vec<EnergyRow>> {
    let mut rows = Vec::new();
    for (line, f) in records(text) {
        if f.len() < 2 {
            return Err(format_err(line, "expected a sentence and a component"));
        }
        let component = f[1]
            .trim()
            .parse()
            .map_err(|_| format_err(line, format!("{:?} is not a component index", f[1])))?;
        let energies = f[2..]
            .iter()
            .map(|x| parse_ratio(x).ok_or_else(|| format_err(line, format!("{x:?} is not p/q"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(EnergyRow {
            sentence: parse_sentence(line, dict, f[0])?,
            component,
            energies,
        });
    }
    Ok(rows)
}

pub fn write_exponents(t: &ExponentTable, dict: &Dictionary) -> String {
    let mut out = String::from("# y0\ty1\tvalue\tstatus\n");
    for (i, p) in t.pairs().iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            dict.render(p.y0()),
            dict.render(p.y1()),
            t.value(i),
            t.status(i).as_str()
        ));
    }
    out
}

/// Rows may list a pair in either orientation; the value is negated when
/// the row is flipped relative to the canonical order.
pub fn read_exponents(text: &str, dict: &Dictionary) -> Result<ExponentTable> {
    let mut rows: Vec<(SubstitutePair, f64, ExponentStatus)> = Vec::new();
    for (line, f) in records(text) {
        if f.len() != 3 && f.len() != 4 {
            return Err(format_err(
                line,
                "expected y0, y1, value and optional status",
            ));
        }
        let (pair, flipped) = SubstitutePair::oriented(
            parse_sentence(line, dict, f[0])?,
            parse_sentence(line, dict, f[1])?,
        )
        .map_err(|e| format_err(line, e.to_string()))?;
        let value = parse_f64(line, f[2])?;
        let status = match f.get(3) {
            None => ExponentStatus::Active,
            Some(s) => ExponentStatus::parse(s.trim())
                .ok_or_else(|| format_err(line, format!("unknown status {s:?}")))?,
        };
        if rows.iter().any(|(p, _, _)| *p == pair) {
            return Err(format_err(line, "pair listed twice"));
        }
        rows.push((pair, if flipped { -value } else { value }, status));
    }
    let pairs = PairFamily::new(rows.iter().map(|r| r.0.clone()).collect());
    let mut values = vec![0.0; pairs.len()];
    let mut status = vec![ExponentStatus::Active; pairs.len()];
    for (p, v, s) in rows {
        let i = pairs.index_of(&p).expect("pair was inserted");
        values[i] = v;
        status[i] = s;
    }
    Ok(ExponentTable::new(pairs, values, status))
}

pub fn write_trace(t: &McmcTrace, dict: &Dictionary) -> String {
    let mut out = String::from("# step\tsentence\taccepted\n");
    out.push_str(&format!("0\t{}\t1\n", dict.render(&t.states[0])));
    for (k, (s, &a)) in t.states[1..].iter().zip(&t.accepted).enumerate() {
        out.push_str(&format!("{}\t{}\t{}\n", k + 1, dict.render(s), a as u8));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub sentence: Sentence,
    pub accepted: bool,
}

pub fn read_trace(text: &str, dict: &Dictionary) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for (line, f) in records(text) {
        expect_fields(line, &f, 3)?;
        let step = f[0]
            .trim()
            .parse()
            .map_err(|_| format_err(line, format!("{:?} is not a step number", f[0])))?;
        let accepted = match f[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(format_err(line, format!("{other:?} is not 0 or 1"))),
        };
        rows.push(TraceRow {
            step,
            sentence: parse_sentence(line, dict, f[1])?,
            accepted,
        });
    }
    Ok(rows)
}

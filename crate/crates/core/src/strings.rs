//! Word-level string algebra.
//!
//! Sentences are sequences of word ids drawn from a [`Dictionary`]. The
//! insertion operator [`insert`] places a syntagm inside a two-sided
//! [`Context`]; [`occurrences`] inverts it for a fixed syntagm. Substitute
//! sets are reduced to a canonically ordered [`PairFamily`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub type WordId = u32;

/// Ordered list of distinct tokens; word ids follow list order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Dictionary {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for word in words {
            let word: String = word.into();
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidToken(word));
            }
            if index.contains_key(&word) {
                return Err(Error::DuplicateWord(word));
            }
            index.insert(word.clone(), list.len() as WordId);
            list.push(word);
        }
        if list.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(Dictionary { words: list, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.index.get(token).copied()
    }

    /// Splits on whitespace and maps every token to its id. Blank text
    /// yields the empty sentence.
    pub fn parse(&self, text: &str) -> Result<Sentence> {
        text.split_whitespace()
            .map(|tok| {
                self.id(tok)
                    .ok_or_else(|| Error::UnknownWord(tok.to_string()))
            })
            .collect::<Result<Vec<_>>>()
            .map(Sentence)
    }

    /// Like [`Dictionary::parse`] but rejects the empty sentence.
    pub fn parse_nonempty(&self, text: &str) -> Result<Sentence> {
        let s = self.parse(text)?;
        if s.is_empty() {
            return Err(Error::EmptySentence("parsed text"));
        }
        Ok(s)
    }

    pub fn check(&self, s: &Sentence) -> Result<()> {
        match s.0.iter().find(|&&id| id as usize >= self.words.len()) {
            Some(&id) => Err(Error::WordIdOutOfRange {
                id,
                size: self.words.len(),
            }),
            None => Ok(()),
        }
    }

    /// Space-joined tokens; the empty sentence renders as "".
    pub fn render(&self, s: &Sentence) -> String {
        self.tokens(s).collect::<Vec<_>>().join(" ")
    }

    /// Concatenates tokens without separators when every dictionary word is
    /// a single character ("a b c" becomes "abc"), otherwise space-joins.
    pub fn render_compact(&self, s: &Sentence) -> String {
        if self.words.iter().all(|w| w.chars().count() == 1) {
            self.tokens(s).collect()
        } else {
            self.render(s)
        }
    }

    fn tokens<'a>(&'a self, s: &'a Sentence) -> impl Iterator<Item = &'a str> + 'a {
        s.0.iter().map(move |&id| self.word(id).unwrap_or("<?>"))
    }
}

/// A finite word sequence. The empty sentence stands for ε.
///
/// Sentences are totally ordered by length first, then lexicographically by
/// word id. Every deterministic ordering in the crate derives from this.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Sentence(Vec<WordId>);

impl Sentence {
    pub fn new(ids: Vec<WordId>) -> Self {
        Sentence(ids)
    }

    pub fn empty() -> Self {
        Sentence(Vec::new())
    }

    pub fn ids(&self) -> &[WordId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_ids(self) -> Vec<WordId> {
        self.0
    }

    /// Start positions of `y` inside `self`, overlapping matches included.
    pub(crate) fn positions<'a>(&'a self, y: &'a Sentence) -> impl Iterator<Item = usize> + 'a {
        let n = self.0.len();
        let m = y.0.len();
        let last = if m == 0 || m > n { 0 } else { n - m + 1 };
        (0..last).filter(move |&p| self.0[p..p + m] == y.0[..])
    }

    /// Replaces the `old_len` words starting at `pos` with `new`.
    pub(crate) fn splice(&self, pos: usize, old_len: usize, new: &Sentence) -> Sentence {
        let mut ids = Vec::with_capacity(self.0.len() - old_len + new.0.len());
        ids.extend_from_slice(&self.0[..pos]);
        ids.extend_from_slice(&new.0);
        ids.extend_from_slice(&self.0[pos + old_len..]);
        Sentence(ids)
    }
}

impl Ord for Sentence {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Sentence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<WordId>> for Sentence {
    fn from(ids: Vec<WordId>) -> Self {
        Sentence(ids)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Two-sided insertion context `(left, right)`; either side may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Context {
    pub left: Sentence,
    pub right: Sentence,
}

impl Context {
    pub fn new(left: Sentence, right: Sentence) -> Self {
        Context { left, right }
    }
}

/// The insertion operator: `left · y · right`.
pub fn insert(x: &Context, y: &Sentence) -> Result<Sentence> {
    if y.is_empty() {
        return Err(Error::EmptySentence("inserted syntagm"));
    }
    let mut ids = Vec::with_capacity(x.left.len() + y.len() + x.right.len());
    ids.extend_from_slice(x.left.ids());
    ids.extend_from_slice(y.ids());
    ids.extend_from_slice(x.right.ids());
    Ok(Sentence(ids))
}

/// Every context `x` with `insert(x, y) == s`, by increasing left length.
/// An empty `y` has no occurrences.
pub fn occurrences(s: &Sentence, y: &Sentence) -> Vec<Context> {
    s.positions(y)
        .map(|p| Context {
            left: Sentence(s.0[..p].to_vec()),
            right: Sentence(s.0[p + y.len()..].to_vec()),
        })
        .collect()
}

/// An unordered pair `{y0, y1}` stored with `y0 < y1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubstitutePair {
    y0: Sentence,
    y1: Sentence,
}

impl SubstitutePair {
    /// Builds the canonically oriented pair; both members must be non-empty
    /// and distinct.
    pub fn new(a: Sentence, b: Sentence) -> Result<Self> {
        Self::oriented(a, b).map(|(p, _)| p)
    }

    /// Like [`SubstitutePair::new`], also reporting whether `(a, b)` was
    /// flipped to reach canonical orientation.
    pub fn oriented(a: Sentence, b: Sentence) -> Result<(Self, bool)> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptySentence("substitute pair member"));
        }
        match a.cmp(&b) {
            Ordering::Less => Ok((SubstitutePair { y0: a, y1: b }, false)),
            Ordering::Greater => Ok((SubstitutePair { y0: b, y1: a }, true)),
            Ordering::Equal => Err(Error::DegeneratePair),
        }
    }

    pub fn y0(&self) -> &Sentence {
        &self.y0
    }

    pub fn y1(&self) -> &Sentence {
        &self.y1
    }

    /// `y_σ` for σ ∈ {0, 1}.
    pub fn side(&self, sigma: u8) -> &Sentence {
        if sigma == 0 {
            &self.y0
        } else {
            &self.y1
        }
    }
}

/// Duplicate-free, sorted list of substitute pairs. Positions in the list are
/// the pair indices used everywhere else.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairFamily {
    pairs: Vec<SubstitutePair>,
}

impl PairFamily {
    pub fn new(mut pairs: Vec<SubstitutePair>) -> Self {
        pairs.sort();
        pairs.dedup();
        PairFamily { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[SubstitutePair] {
        &self.pairs
    }

    pub fn get(&self, i: usize) -> Option<&SubstitutePair> {
        self.pairs.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SubstitutePair> {
        self.pairs.iter()
    }

    pub fn index_of(&self, pair: &SubstitutePair) -> Option<usize> {
        self.pairs.binary_search(pair).ok()
    }

    /// Pair index and orientation sign for an ordered `(y, y')`: `+1` when
    /// `(y, y') = (y0, y1)`, `-1` when reversed.
    pub fn lookup(&self, y: &Sentence, y_prime: &Sentence) -> Option<(usize, f64)> {
        let (pair, flipped) = SubstitutePair::oriented(y.clone(), y_prime.clone()).ok()?;
        let i = self.index_of(&pair)?;
        Some((i, if flipped { -1.0 } else { 1.0 }))
    }

    /// The family with pair `i` removed.
    pub fn without(&self, i: usize) -> PairFamily {
        let mut pairs = self.pairs.clone();
        pairs.remove(i);
        PairFamily { pairs }
    }

    /// Views each pair as a two-element set.
    pub fn as_sets(&self) -> Vec<Vec<Sentence>> {
        self.pairs
            .iter()
            .map(|p| vec![p.y0.clone(), p.y1.clone()])
            .collect()
    }
}

impl<'a> IntoIterator for &'a PairFamily {
    type Item = &'a SubstitutePair;
    type IntoIter = std::slice::Iter<'a, SubstitutePair>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

/// All unordered pairs of distinct members within each set, canonically
/// oriented, deduplicated and sorted.
pub fn pairs_from_family(dict: &Dictionary, family: &[Vec<Sentence>]) -> Result<PairFamily> {
    let mut pairs = Vec::new();
    for set in family {
        for s in set {
            if s.is_empty() {
                return Err(Error::EmptySentence("substitute set member"));
            }
            dict.check(s)?;
        }
        for (i, a) in set.iter().enumerate() {
            for b in &set[i + 1..] {
                if a != b {
                    pairs.push(SubstitutePair::new(a.clone(), b.clone())?);
                }
            }
        }
    }
    Ok(PairFamily::new(pairs))
}

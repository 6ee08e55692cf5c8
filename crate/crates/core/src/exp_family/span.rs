//! Exact-rational cycle-space elimination and free-pair selection.

use num::{BigRational, One, Signed, Zero};

use crate::graph::LoopVector;

/// Reduced row echelon basis of the span of the loop vectors.
///
/// Columns are positions in the active-pair list. Every row has a leading
/// 1 in its pivot column and zeros in every other pivot column.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpan {
    width: usize,
    rows: Vec<Vec<BigRational>>,
    pivots: Vec<usize>,
}

impl LoopSpan {
    pub fn empty(width: usize) -> Self {
        LoopSpan {
            width,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    /// Pivot column of each basis row, ascending.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the basis; the result is zero iff `v` lies in
    /// the span.
    pub fn reduce(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.width);
        let mut r = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if r[p].is_zero() {
                continue;
            }
            let f = r[p].clone();
            for (x, y) in r.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        r
    }

    pub fn contains(&self, v: &[BigRational]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds a vector to the span, keeping the basis fully reduced.
    /// Returns whether the rank grew.
    pub fn push(&mut self, v: &[BigRational]) -> bool {
        let mut r = self.reduce(v);
        let Some(pivot) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let lead = r[pivot].clone();
        for x in r.iter_mut() {
            *x /= &lead;
        }
        for row in self.rows.iter_mut() {
            if row[pivot].is_zero() {
                continue;
            }
            let f = row[pivot].clone();
            for (x, y) in row.iter_mut().zip(&r) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        let at = self.pivots.partition_point(|&p| p < pivot);
        self.pivots.insert(at, pivot);
        self.rows.insert(at, r);
        true
    }

    /// Span of the union of two spans of the same width.
    pub fn union(&self, other: &LoopSpan) -> LoopSpan {
        let mut out = self.clone();
        for row in &other.rows {
            out.push(row);
        }
        out
    }
}

pub(crate) fn to_rational(v: &[i64]) -> Vec<BigRational> {
    v.iter()
        .map(|&x| BigRational::from_integer(x.into()))
        .collect()
}

/// Exact Gaussian elimination of the loop vectors.
pub fn loop_span(loops: &[LoopVector], width: usize) -> LoopSpan {
    let mut span = LoopSpan::empty(width);
    for l in loops {
        if !l.is_zero() {
            span.push(&to_rational(&l.counts));
        }
    }
    span
}

/// Split of the active pairs into free and determined ones.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeSelection {
    /// Pair indices carrying parameters.
    pub free: Vec<usize>,
    /// Pair indices whose exponents follow from the free ones.
    pub determined: Vec<usize>,
    /// `e[i][j]`: coefficient of free pair `free[i]` in the exponent of
    /// determined pair `determined[j]`, i.e. `β_j = Σ_i β_i e[i][j]`.
    pub dependency: Vec<Vec<BigRational>>,
}

/// Pivot columns become the determined pairs; the rest are free.
///
/// A reduced basis row `r` with pivot `p` states that
/// `β_p + Σ_f r[f] β_f = 0` must hold for every admissible exponent
/// vector, hence `e[f][p] = −r[f]`.
pub fn select_free_pairs(span: &LoopSpan, active: &[usize]) -> FreeSelection {
    assert_eq!(span.width(), active.len());
    let pivots = span.pivots();
    let free_cols: Vec<usize> = (0..active.len())
        .filter(|c| pivots.binary_search(c).is_err())
        .collect();
    let dependency = free_cols
        .iter()
        .map(|&f| span.basis().iter().map(|row| -row[f].clone()).collect())
        .collect();
    FreeSelection {
        free: free_cols.iter().map(|&c| active[c]).collect(),
        determined: pivots.iter().map(|&c| active[c]).collect(),
        dependency,
    }
}

/// Renders an exact rational as `p/q`, always with an explicit denominator.
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer.
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse().ok()?, d.trim().parse().ok()?),
        None => (s.trim().parse().ok()?, One::one()),
    };
    if num::BigInt::is_zero(&d) {
        return None;
    }
    Some(BigRational::new(n, d))
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[i64]) -> LoopVector {
        LoopVector {
            counts: v.to_vec(),
            edge: 0,
        }
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Rank by fraction-free integer elimination, independent of the
    /// rational path.
    fn rank_oracle(rows: &[Vec<i64>]) -> usize {
        let mut m: Vec<Vec<i128>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| x as i128).collect())
            .collect();
        let width = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for col in 0..width {
            let Some(p) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(rank, p);
            for r in 0..m.len() {
                if r != rank && m[r][col] != 0 {
                    let (a, b) = (m[rank][col], m[r][col]);
                    let pivot = m[rank].clone();
                    for (x, p) in m[r].iter_mut().zip(&pivot) {
                        *x = *x * a - p * b;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn span_examples() {
        let s = loop_span(&[lv(&[-1, 1])], 2);
        assert_eq!(s.rank(), 1);
        assert_eq!(rank_oracle(&[vec![-1, 1]]), 1);
        // the stored row is the normalised multiple of (−1, +1)
        assert_eq!(s.basis(), &[vec![q(1, 1), q(-1, 1)]]);
        assert!(s.contains(&[q(-1, 1), q(1, 1)]));

        assert_eq!(loop_span(&[], 2).rank(), 0);
        assert_eq!(loop_span(&[lv(&[0, 0]), lv(&[0, 0])], 2).rank(), 0);
        assert_eq!(loop_span(&[lv(&[1, 0]), lv(&[0, 1])], 2).rank(), 2);
    }

    #[test]
    fn span_matches_rank_oracle() {
        let cases: Vec<Vec<Vec<i64>>> = vec![
            vec![vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]],
            vec![vec![0, 0, 5, -5], vec![1, -1, 0, 0], vec![1, -1, 5, -5]],
            vec![vec![3, 0, 0], vec![0, 0, 7], vec![1, 1, 1], vec![2, -1, 4]],
        ];
        for rows in cases {
            let loops: Vec<LoopVector> = rows.iter().map(|r| lv(r)).collect();
            let s = loop_span(&loops, rows[0].len());
            assert_eq!(s.rank(), rank_oracle(&rows));
            for r in &rows {
                assert!(s.contains(&to_rational(r)));
            }
        }
    }

    #[test]
    fn free_selection_examples() {
        // fixture A: one loop (−1, +1) over pairs 0 and 1
        let s = loop_span(&[lv(&[-1, 1])], 2);
        let sel = select_free_pairs(&s, &[0, 1]);
        assert_eq!(sel.determined, vec![0]);
        assert_eq!(sel.free, vec![1]);
        assert_eq!(sel.dependency, vec![vec![q(1, 1)]]);

        let sel = select_free_pairs(&loop_span(&[lv(&[0, 0])], 2), &[0, 1]);
        assert_eq!(sel.free, vec![0, 1]);
        assert!(sel.determined.is_empty());

        let sel = select_free_pairs(&LoopSpan::empty(0), &[]);
        assert!(sel.free.is_empty() && sel.determined.is_empty());
    }

    #[test]
    fn dependency_kills_every_loop() {
        let rows = vec![vec![2, -1, 0, 3], vec![0, 1, 1, -1], vec![2, 0, 1, 2]];
        let loops: Vec<LoopVector> = rows.iter().map(|r| lv(r)).collect();
        let span = loop_span(&loops, 4);
        let active = [3, 5, 8, 9];
        let sel = select_free_pairs(&span, &active);
        assert_eq!(sel.free.len(), 4 - span.rank());
        // any free values, here 1..=k, induce exponents orthogonal to loops
        let free_vals: Vec<BigRational> = (1..=sel.free.len() as i64).map(|i| q(i, 3)).collect();
        let mut beta = vec![BigRational::zero(); 4];
        for (i, f) in sel.free.iter().enumerate() {
            beta[active.iter().position(|a| a == f).unwrap()] = free_vals[i].clone();
        }
        for (j, d) in sel.determined.iter().enumerate() {
            let v: BigRational = (0..sel.free.len())
                .map(|i| &free_vals[i] * &sel.dependency[i][j])
                .sum();
            beta[active.iter().position(|a| a == d).unwrap()] = v;
        }
        for r in &rows {
            let dot: BigRational = r
                .iter()
                .zip(&beta)
                .map(|(&c, b)| b * BigRational::from_integer(c.into()))
                .sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn ratio_round_trip() {
        for r in [q(-3, 4), q(0, 1), q(5, 1)] {
            assert_eq!(parse_ratio(&format_ratio(&r)), Some(r));
        }
        assert_eq!(parse_ratio("7"), Some(q(7, 1)));
        assert_eq!(parse_ratio("1/0"), None);
    }
}

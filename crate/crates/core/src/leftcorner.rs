//! Left-corner expectations.
//!
//! `P[X][Y] = ⊕_Z p(X → Y Z)` is the one-step left-corner matrix and
//! `E_lc(Y|X) = P*[X][Y]`. The pair expectation
//! `E_lc(Y Z|X) = ⊕_{X'} E_lc(X'|X) ⊗ p(X' → Y Z)` is stored per
//! `(X, distinct right-hand side)`.

use crate::error::{Error, Result};
use crate::grammar::WeightedGrammar;
use crate::linalg::SquareMatrix;
use crate::semiring::{Semiring, SemiringKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosureMethod {
    /// `(I − P)⁻¹` by a real linear solve; probability semiring only.
    Inversion,
    /// Lehmann's algorithm; any complete semiring.
    Lehmann,
}

impl ClosureMethod {
    pub fn default_for<S: Semiring>() -> Self {
        if S::KIND == SemiringKind::Prob {
            ClosureMethod::Inversion
        } else {
            ClosureMethod::Lehmann
        }
    }
}

pub fn build_p_matrix<S: Semiring>(g: &WeightedGrammar<S>) -> SquareMatrix<S> {
    let mut p: SquareMatrix<S> = SquareMatrix::zeros(g.num_nonterminals());
    for &(x, y, _, w) in g.binary_rules() {
        let cur = p.get(x, y);
        p.set(x, y, cur.add(w));
    }
    p
}

pub fn closure<S: Semiring>(m: &SquareMatrix<S>, method: ClosureMethod) -> Result<SquareMatrix<S>> {
    match method {
        ClosureMethod::Lehmann => m.lehmann_closure(),
        ClosureMethod::Inversion => S::closure_by_inversion(m).unwrap_or(Err(Error::Unsupported {
            operation: "closure by inversion",
            semiring: S::KIND.name(),
        })),
    }
}

/// `E_lc(Y Z|X)` keyed by `X` and the distinct binary right-hand sides.
#[derive(Clone, Debug, PartialEq)]
pub struct PairExpectations<S> {
    nt: usize,
    pairs: Vec<(usize, usize)>,
    /// `Y·|N| + Z` → position in `pairs`.
    pair_index: Vec<Option<usize>>,
    /// `X·|pairs| + pair`.
    values: Vec<S>,
}

impl<S: Semiring> PairExpectations<S> {
    /// Distinct `(Y, Z)` right-hand sides, in order of first use.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `E_lc(Y Z|X)` for every pair, in [`Self::pairs`] order.
    #[inline(always)]
    pub fn row(&self, x: usize) -> &[S] {
        let n = self.pairs.len();
        &self.values[x * n..(x + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> S {
        match self.pair_index[y * self.nt + z] {
            Some(p) => self.values[x * self.pairs.len() + p],
            None => S::zero(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LeftCornerTables<S: Semiring> {
    pub p_matrix: SquareMatrix<S>,
    pub e_lc: SquareMatrix<S>,
    pair: Option<PairExpectations<S>>,
}

impl<S: Semiring> LeftCornerTables<S> {
    /// `P` and `P*` only. This is all the factored prefix algorithms need.
    pub fn closure_only(g: &WeightedGrammar<S>, method: ClosureMethod) -> Result<Self> {
        let p_matrix = build_p_matrix(g);
        let e_lc = closure(&p_matrix, method)?;
        Ok(LeftCornerTables {
            p_matrix,
            e_lc,
            pair: None,
        })
    }

    /// `E_lc(Y Z|X)`, present when built by [`left_corner_expectations`].
    pub fn pair_expectations(&self) -> Option<&PairExpectations<S>> {
        self.pair.as_ref()
    }

    #[inline(always)]
    pub fn e_lc(&self, x: usize, y: usize) -> S {
        self.e_lc.get(x, y)
    }
}

/// `P`, `P*` and the pair expectations. The pair table is one pass over the
/// binary rules for every nonterminal: O(|R||N|).
pub fn left_corner_expectations<S: Semiring>(
    g: &WeightedGrammar<S>,
    method: ClosureMethod,
) -> Result<LeftCornerTables<S>> {
    let mut tables = LeftCornerTables::closure_only(g, method)?;
    let nt = g.num_nonterminals();
    let mut pairs = Vec::new();
    let mut pair_index = vec![None; nt * nt];
    let rule_pair: Vec<usize> = g
        .binary_rules()
        .iter()
        .map(|&(_, y, z, _)| {
            *pair_index[y * nt + z].get_or_insert_with(|| {
                pairs.push((y, z));
                pairs.len() - 1
            })
        })
        .collect();
    let np = pairs.len();
    let mut values = vec![S::zero(); nt * np];
    for (&(x_prime, _, _, w), &p) in g.binary_rules().iter().zip(&rule_pair) {
        for x in 0..nt {
            let e = tables.e_lc.get(x, x_prime);
            if e.is_zero() {
                continue;
            }
            let v = &mut values[x * np + p];
            *v = v.add(e.mul(w));
        }
    }
    tables.pair = Some(PairExpectations {
        nt,
        pairs,
        pair_index,
        values,
    });
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Grammar;
    use crate::semiring::{rel_close, LogProb, Prob};

    fn weighted(text: &str) -> WeightedGrammar<Prob> {
        Grammar::parse(text).unwrap().weighted()
    }

    #[test]
    fn g1_expectations() {
        let g = weighted("S -> S S : 0.4\nS -> 'a' : 0.6");
        assert_eq!(build_p_matrix(&g).get(0, 0), Prob(0.4));
        for method in [ClosureMethod::Inversion, ClosureMethod::Lehmann] {
            let t = left_corner_expectations(&g, method).unwrap();
            assert!(rel_close(t.e_lc(0, 0).0, 5.0 / 3.0, 1e-14));
            let pair = t.pair_expectations().unwrap();
            assert!(rel_close(pair.get(0, 0, 0).0, 2.0 / 3.0, 1e-14));
        }
    }

    #[test]
    fn lexical_only() {
        let g = weighted("S -> 'a' : 0.5\nS -> 'b' : 0.5");
        let t = left_corner_expectations(&g, ClosureMethod::Inversion).unwrap();
        assert_eq!(t.p_matrix, SquareMatrix::zeros(1));
        assert_eq!(t.e_lc, SquareMatrix::identity(1));
        assert!(t.pair_expectations().unwrap().is_empty());
    }

    #[test]
    fn single_left_corner_entry() {
        let g = weighted("S -> A B : 1.0\nA -> 'a' : 1.0\nB -> 'b' : 1.0");
        let p = build_p_matrix(&g);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if (i, j) == (0, 1) { 1.0 } else { 0.0 };
                assert_eq!(p.get(i, j).0, expect);
            }
        }
    }

    #[test]
    fn divergent_grammar_rejected_by_both_methods() {
        let g = weighted("S -> S S : 1.0");
        assert!(left_corner_expectations(&g, ClosureMethod::Inversion).is_err());
        assert!(left_corner_expectations(&g, ClosureMethod::Lehmann).is_err());
    }

    #[test]
    fn inversion_unsupported_outside_prob() {
        let g = Grammar::parse("S -> S S : 0.4\nS -> 'a' : 0.6")
            .unwrap()
            .weighted::<LogProb>();
        assert!(matches!(
            left_corner_expectations(&g, ClosureMethod::Inversion),
            Err(Error::Unsupported { .. })
        ));
        let t = left_corner_expectations(&g, ClosureMethod::default_for::<LogProb>()).unwrap();
        assert!(rel_close(t.e_lc(0, 0).0.exp(), 5.0 / 3.0, 1e-12));
    }
}

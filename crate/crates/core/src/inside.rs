//! Inside charts: textbook CKY and the factored variant for dense grammars.

use crate::error::Result;
use crate::grammar::WeightedGrammar;
use crate::semiring::Semiring;

/// Dense triangular chart indexed by 1-based span `(i, k)` and nonterminal.
/// Holds inside weights β or prefix weights p_π.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart<S> {
    n: usize,
    nt: usize,
    values: Vec<S>,
}

impl<S: Semiring> Chart<S> {
    pub fn new(n: usize, nt: usize) -> Self {
        Chart {
            n,
            nt,
            values: vec![S::zero(); n * n * nt],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nt
    }

    #[inline(always)]
    fn offset(&self, i: usize, k: usize) -> usize {
        debug_assert!(
            1 <= i && i <= k && k <= self.n,
            "span ({i},{k}) of {}",
            self.n
        );
        ((i - 1) * self.n + (k - 1)) * self.nt
    }

    #[inline(always)]
    pub fn get(&self, i: usize, k: usize, x: usize) -> S {
        self.values[self.offset(i, k) + x]
    }

    pub fn set(&mut self, i: usize, k: usize, x: usize, value: S) {
        let o = self.offset(i, k);
        self.values[o + x] = value;
    }

    /// All nonterminals' values for span `(i, k)`.
    #[inline(always)]
    pub fn span(&self, i: usize, k: usize) -> &[S] {
        let o = self.offset(i, k);
        &self.values[o..o + self.nt]
    }

    #[inline(always)]
    pub fn span_mut(&mut self, i: usize, k: usize) -> &mut [S] {
        let o = self.offset(i, k);
        &mut self.values[o..o + self.nt]
    }

    /// Every upper-triangular `(i, k, x)` with its value.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize, usize), S)> + '_ {
        (1..=self.n).flat_map(move |i| {
            (i..=self.n)
                .flat_map(move |k| (0..self.nt).map(move |x| ((i, k, x), self.get(i, k, x))))
        })
    }
}

/// Dense chart indexed by 1-based span `(i, j)` and a nonterminal pair
/// `(X, Z)`. Holds γ and δ.
#[derive(Clone, Debug, PartialEq)]
pub struct PairChart<S> {
    n: usize,
    nt: usize,
    values: Vec<S>,
}

impl<S: Semiring> PairChart<S> {
    pub fn new(n: usize, nt: usize) -> Self {
        PairChart {
            n,
            nt,
            values: vec![S::zero(); n * n * nt * nt],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline(always)]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(1 <= i && i <= j && j <= self.n);
        ((i - 1) * self.n + (j - 1)) * self.nt * self.nt
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, x: usize, z: usize) -> S {
        self.values[self.offset(i, j) + x * self.nt + z]
    }

    /// Row-major `|N| × |N|` block for span `(i, j)`.
    #[inline(always)]
    pub fn block(&self, i: usize, j: usize) -> &[S] {
        let o = self.offset(i, j);
        &self.values[o..o + self.nt * self.nt]
    }

    #[inline(always)]
    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut [S] {
        let o = self.offset(i, j);
        let len = self.nt * self.nt;
        &mut self.values[o..o + len]
    }

    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), S)> + '_ {
        let nt = self.nt;
        (1..=self.n).flat_map(move |i| {
            (i..=self.n).flat_map(move |j| {
                (0..nt * nt)
                    .map(move |xz| ((i, j, xz / nt, xz % nt), self.get(i, j, xz / nt, xz % nt)))
            })
        })
    }
}

fn init_lexical<S: Semiring>(tokens: &[usize], g: &WeightedGrammar<S>, chart: &mut Chart<S>) {
    for (pos, &a) in tokens.iter().enumerate() {
        let k = pos + 1;
        chart.span_mut(k, k).copy_from_slice(g.lexical_column(a));
    }
}

/// CKY over the rule list: for every span and every rule `X → Y Z`,
/// `β(i,k|X) ⊕= p(X→Y Z) ⊗ ⊕_j β(i,j|Y) ⊗ β(j+1,k|Z)`.
/// O(N³|R|), i.e. O(N³|N|³) for dense grammars.
pub fn cky<S: Semiring>(tokens: &[usize], g: &WeightedGrammar<S>) -> Result<Chart<S>> {
    g.check_tokens(tokens)?;
    let n = tokens.len();
    let mut beta = Chart::new(n, g.num_nonterminals());
    init_lexical(tokens, g, &mut beta);
    for len in 2..=n {
        for i in 1..=n + 1 - len {
            let k = i + len - 1;
            for &(x, y, z, p) in g.binary_rules() {
                let mut sum = S::zero();
                for j in i..k {
                    sum = sum.add(beta.get(i, j, y).mul(beta.get(j + 1, k, z)));
                }
                let cur = beta.get(i, k, x);
                beta.set(i, k, x, cur.add(p.mul(sum)));
            }
        }
    }
    Ok(beta)
}

/// `γ_ij(X,Z) = ⊕_Y p(X→Y Z) ⊗ β(i,j|Y)` for one finished span.
fn fill_gamma<S: Semiring>(g: &WeightedGrammar<S>, beta_ij: &[S], block: &mut [S]) {
    let nt = g.num_nonterminals();
    block.fill(S::zero());
    for x in 0..nt {
        let row = &mut block[x * nt..(x + 1) * nt];
        for (y, &b) in beta_ij.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for (acc, &w) in row.iter_mut().zip(g.binary_row(x, y)) {
                *acc = acc.add(w.mul(b));
            }
        }
    }
}

/// Factored CKY. Folds the left child into the rule weights once per span
/// (the γ chart, O(N²|N|³)) and then combines with the right child
/// (O(N³|N|²)): `β(i,k|X) = ⊕_j ⊕_Z γ_ij(X,Z) ⊗ β(j+1,k|Z)`.
///
/// Spans are processed by increasing length; γ for a span is written as
/// soon as its β is final, so every γ cell is written exactly once.
pub fn cky_factored<S: Semiring>(
    tokens: &[usize],
    g: &WeightedGrammar<S>,
) -> Result<(Chart<S>, PairChart<S>)> {
    g.check_tokens(tokens)?;
    let n = tokens.len();
    let nt = g.num_nonterminals();
    let mut beta = Chart::new(n, nt);
    let mut gamma = PairChart::new(n, nt);
    init_lexical(tokens, g, &mut beta);
    for k in 1..=n {
        fill_gamma(g, beta.span(k, k), gamma.block_mut(k, k));
    }
    let mut acc = vec![S::zero(); nt];
    for len in 2..=n {
        for i in 1..=n + 1 - len {
            let k = i + len - 1;
            acc.fill(S::zero());
            for j in i..k {
                let block = gamma.block(i, j);
                let right = beta.span(j + 1, k);
                for (x, out) in acc.iter_mut().enumerate() {
                    let row = &block[x * nt..(x + 1) * nt];
                    let mut s = *out;
                    for (&gxz, &bz) in row.iter().zip(right) {
                        s = s.add(gxz.mul(bz));
                    }
                    *out = s;
                }
            }
            beta.span_mut(i, k).copy_from_slice(&acc);
            fill_gamma(g, beta.span(i, k), gamma.block_mut(i, k));
        }
    }
    Ok((beta, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Grammar;
    use crate::semiring::{rel_close, Boolean, Prob, Viterbi};

    const G1: &str = "S -> S S : 0.4\nS -> 'a' : 0.6\n";

    fn g1() -> WeightedGrammar<Prob> {
        Grammar::parse(G1).unwrap().weighted()
    }

    #[test]
    fn g1_inside_values() {
        let g = g1();
        assert_eq!(cky(&[0], &g).unwrap().get(1, 1, 0), Prob(0.6));
        let b2 = cky(&[0, 0], &g).unwrap().get(1, 2, 0).0;
        assert!(rel_close(b2, 0.4 * 0.6 * 0.6, 1e-15));
        // two binary trees over three leaves
        let b3 = cky(&[0, 0, 0], &g).unwrap().get(1, 3, 0).0;
        assert!(rel_close(b3, 2.0 * 0.4 * 0.4 * 0.6 * 0.6 * 0.6, 1e-15));
        assert!(rel_close(b3, 0.06912, 1e-12));
    }

    #[test]
    fn factored_g1() {
        let g = g1();
        let (beta, gamma) = cky_factored(&[0, 0], &g).unwrap();
        assert_eq!(beta, cky(&[0, 0], &g).unwrap());
        assert!(rel_close(gamma.get(1, 1, 0, 0).0, 0.24, 1e-15));
    }

    #[test]
    fn factored_single_token_is_lexical_only() {
        let g = Grammar::parse("S -> A B : 1\nA -> 'a' : 1\nB -> 'a' : 0.5\nB -> 'b' : 0.5")
            .unwrap()
            .weighted::<Prob>();
        let (beta, _) = cky_factored(&[0], &g).unwrap();
        assert_eq!(beta.span(1, 1), &[Prob(0.0), Prob(1.0), Prob(0.5)]);
    }

    #[test]
    fn unknown_token_rejected() {
        let g = g1();
        assert!(cky(&[0, 3], &g).is_err());
        assert!(cky_factored(&[7], &g).is_err());
    }

    #[test]
    fn boolean_recognizes_and_viterbi_bounded_by_prob() {
        let text = "S -> A B : 0.5\nS -> A T : 0.5\nT -> S B : 1\nA -> 'a' : 1\nB -> 'b' : 1";
        let grammar = Grammar::parse(text).unwrap();
        let gb = grammar.weighted::<Boolean>();
        let a = 0;
        let b = 1;
        let accept = |w: &[usize]| cky(w, &gb).unwrap().get(1, w.len(), 0).0;
        assert!(accept(&[a, b]));
        assert!(accept(&[a, a, b, b]));
        assert!(!accept(&[a, b, b]));
        assert!(!accept(&[b, a]));

        let gp = grammar.weighted::<Prob>();
        let gv = grammar.weighted::<Viterbi>();
        let w = [a, a, a, b, b, b];
        let p = cky(&w, &gp).unwrap();
        let v = cky(&w, &gv).unwrap();
        for ((_, pv), (_, vv)) in p.cells().zip(v.cells()) {
            assert!(vv.0 <= pv.0 + 1e-12);
        }
    }
}

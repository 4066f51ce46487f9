//! All-prefix weights `p_π(w₁…w_k | S)` for `k = 1..n`.
//!
//! Three routes compute the same chart:
//!
//! * [`jl`]: Jelinek–Lafferty. Uses the pair expectations `E_lc(Y Z|X)`
//!   and sums over `(X, Y, Z)` for every split point: O(N³|N|³ + |N|⁴).
//! * [`fast_jl`]: folds the left child and the left-corner expectation into
//!   two pair charts, `γ_ij(X', Z) = ⊕_Y p(X'→Y Z) ⊗ β(i,j|Y)` and
//!   `δ_ij(X, Z) = ⊕_{X'} E_lc(X'|X) ⊗ γ_ij(X', Z)`, after which
//!   `p_π(i,k|X) = ⊕_j ⊕_Z δ_ij(X,Z) ⊗ p_π(j+1,k|Z)`: O(N²|N|³ + N³|N|²).
//! * [`fast_semiring_jl`]: the same dataflow over any complete semiring,
//!   with `P*` from Lehmann's algorithm.
//!
//! The base case for every route is
//! `p_π(k,k|X) = ⊕_Y E_lc(Y|X) ⊗ p(Y → w_k)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, WeightedGrammar};
use crate::inside::{cky, cky_factored, Chart, PairChart};
use crate::leftcorner::{left_corner_expectations, ClosureMethod, LeftCornerTables};
use crate::semiring::{Prob, Semiring, SemiringKind};

#[derive(Clone, Debug)]
pub struct PrefixResult<S> {
    /// `p_π(i,k|X)` for every span.
    pub chart: Chart<S>,
    /// `β(i,k|X)`.
    pub inside: Chart<S>,
    /// `p_π(1,k|S)` for `k = 1..n`.
    pub per_prefix: Vec<S>,
    /// `p_π(1,k|S) ⊘ p_π(1,k−1|S)` with `p_π(1,0|S) = 𝟏`; only for
    /// semirings with division.
    pub per_token_conditional: Option<Vec<S>>,
    pub gamma: Option<PairChart<S>>,
    pub delta: Option<PairChart<S>>,
}

/// Chain-rule conditionals from prefix weights. The empty prefix has weight 𝟏.
pub fn conditionals<S: Semiring>(per_prefix: &[S]) -> Option<Vec<S>> {
    let mut prev = S::one();
    let mut out = Vec::with_capacity(per_prefix.len());
    for &v in per_prefix {
        out.push(v.div(prev)?);
        prev = v;
    }
    Some(out)
}

fn base_case<S: Semiring>(
    tokens: &[usize],
    g: &WeightedGrammar<S>,
    e_lc: &crate::linalg::SquareMatrix<S>,
    chart: &mut Chart<S>,
) {
    for (pos, &a) in tokens.iter().enumerate() {
        let k = pos + 1;
        let lex = g.lexical_column(a);
        let out = chart.span_mut(k, k);
        for (x, o) in out.iter_mut().enumerate() {
            let mut s = S::zero();
            for (&e, &p) in e_lc.row(x).iter().zip(lex) {
                s = s.add(e.mul(p));
            }
            *o = s;
        }
    }
}

fn finish<S: Semiring>(
    start: usize,
    chart: Chart<S>,
    inside: Chart<S>,
    gamma: Option<PairChart<S>>,
    delta: Option<PairChart<S>>,
) -> PrefixResult<S> {
    let per_prefix: Vec<S> = (1..=chart.len()).map(|k| chart.get(1, k, start)).collect();
    PrefixResult {
        per_token_conditional: conditionals(&per_prefix),
        per_prefix,
        chart,
        inside,
        gamma,
        delta,
    }
}

fn jl_impl<S: Semiring>(
    tokens: &[usize],
    g: &WeightedGrammar<S>,
    lc: &LeftCornerTables<S>,
) -> Result<PrefixResult<S>> {
    let pair = lc.pair_expectations().ok_or(Error::Unsupported {
        operation: "Jelinek-Lafferty without pair expectations",
        semiring: S::KIND.name(),
    })?;
    let beta = cky(tokens, g)?;
    let n = tokens.len();
    let nt = g.num_nonterminals();
    let mut chart = Chart::new(n, nt);
    base_case(tokens, g, &lc.e_lc, &mut chart);
    let pairs = pair.pairs();
    for len in 2..=n {
        for i in 1..=n + 1 - len {
            let k = i + len - 1;
            for x in 0..nt {
                let mut acc = S::zero();
                for (&e, &(y, z)) in pair.row(x).iter().zip(pairs) {
                    if e.is_zero() {
                        continue;
                    }
                    let mut s = S::zero();
                    for j in i..k {
                        s = s.add(beta.get(i, j, y).mul(chart.get(j + 1, k, z)));
                    }
                    acc = acc.add(e.mul(s));
                }
                chart.set(i, k, x, acc);
            }
        }
    }
    Ok(finish(g.start(), chart, beta, None, None))
}

/// Jelinek–Lafferty over the probability semiring. `lc` must come from
/// [`left_corner_expectations`] so that it carries the pair table.
pub fn jl(
    tokens: &[usize],
    g: &WeightedGrammar<Prob>,
    lc: &LeftCornerTables<Prob>,
) -> Result<PrefixResult<Prob>> {
    jl_impl(tokens, g, lc)
}

/// `δ_ij = E_lc · γ_ij` for every span.
fn delta_chart<S: Semiring>(
    e_lc: &crate::linalg::SquareMatrix<S>,
    gamma: &PairChart<S>,
    nt: usize,
) -> PairChart<S> {
    let n = gamma.len();
    let mut delta: PairChart<S> = PairChart::new(n, nt);
    for i in 1..=n {
        for j in i..=n {
            let g_block = gamma.block(i, j);
            let d_block = delta.block_mut(i, j);
            for x in 0..nt {
                let out = &mut d_block[x * nt..(x + 1) * nt];
                for (x_prime, &e) in e_lc.row(x).iter().enumerate() {
                    if e.is_zero() {
                        continue;
                    }
                    let g_row = &g_block[x_prime * nt..(x_prime + 1) * nt];
                    for (o, &gv) in out.iter_mut().zip(g_row) {
                        *o = o.add(e.mul(gv));
                    }
                }
            }
        }
    }
    delta
}

fn factored_impl<S: Semiring>(
    tokens: &[usize],
    g: &WeightedGrammar<S>,
    lc: &LeftCornerTables<S>,
) -> Result<PrefixResult<S>> {
    let (beta, gamma) = cky_factored(tokens, g)?;
    let n = tokens.len();
    let nt = g.num_nonterminals();
    let delta = delta_chart(&lc.e_lc, &gamma, nt);
    let mut chart = Chart::new(n, nt);
    base_case(tokens, g, &lc.e_lc, &mut chart);
    let mut acc = vec![S::zero(); nt];
    for len in 2..=n {
        for i in 1..=n + 1 - len {
            let k = i + len - 1;
            acc.fill(S::zero());
            for j in i..k {
                let d_block = delta.block(i, j);
                let right = chart.span(j + 1, k);
                for (x, out) in acc.iter_mut().enumerate() {
                    let row = &d_block[x * nt..(x + 1) * nt];
                    let mut s = *out;
                    for (&d, &p) in row.iter().zip(right) {
                        s = s.add(d.mul(p));
                    }
                    *out = s;
                }
            }
            chart.span_mut(i, k).copy_from_slice(&acc);
        }
    }
    Ok(finish(g.start(), chart, beta, Some(gamma), Some(delta)))
}

/// The factored algorithm over the probability semiring. `lc` may come from
/// either closure method; the pair table is not used.
pub fn fast_jl(
    tokens: &[usize],
    g: &WeightedGrammar<Prob>,
    lc: &LeftCornerTables<Prob>,
) -> Result<PrefixResult<Prob>> {
    factored_impl(tokens, g, lc)
}

/// The factored algorithm over any supported semiring.
pub fn fast_semiring_jl<S: Semiring>(
    tokens: &[usize],
    g: &WeightedGrammar<S>,
    lc: &LeftCornerTables<S>,
) -> Result<PrefixResult<S>> {
    factored_impl(tokens, g, lc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Cky,
    Jl,
    FastJl,
    SemiringFastJl,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cky => "cky",
            Algorithm::Jl => "jl",
            Algorithm::FastJl => "fastjl",
            Algorithm::SemiringFastJl => "semiring-fastjl",
        }
    }

    /// Whether the algorithm is defined over the given semiring.
    pub fn supports(self, kind: SemiringKind) -> bool {
        match self {
            Algorithm::Jl | Algorithm::FastJl => kind == SemiringKind::Prob,
            Algorithm::Cky | Algorithm::SemiringFastJl => true,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cky" => Ok(Algorithm::Cky),
            "jl" => Ok(Algorithm::Jl),
            "fastjl" | "fast-jl" => Ok(Algorithm::FastJl),
            "semiring-fastjl" | "semiring-fast-jl" => Ok(Algorithm::SemiringFastJl),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// A grammar prepared once for many sentences: the weighted view and the
/// left-corner tables the chosen algorithm needs.
#[derive(Clone, Debug)]
pub struct Scorer<S: Semiring> {
    algo: Algorithm,
    grammar: WeightedGrammar<S>,
    tables: Option<LeftCornerTables<S>>,
}

impl<S: Semiring> Scorer<S> {
    pub fn new(grammar: &Grammar, algo: Algorithm) -> Result<Self> {
        if !algo.supports(S::KIND) {
            return Err(Error::Unsupported {
                operation: algo.name(),
                semiring: S::KIND.name(),
            });
        }
        let weighted = grammar.weighted::<S>();
        let tables = match algo {
            Algorithm::Cky => None,
            Algorithm::Jl => Some(left_corner_expectations(
                &weighted,
                ClosureMethod::Inversion,
            )?),
            Algorithm::FastJl => Some(LeftCornerTables::closure_only(
                &weighted,
                ClosureMethod::Inversion,
            )?),
            Algorithm::SemiringFastJl => Some(LeftCornerTables::closure_only(
                &weighted,
                ClosureMethod::Lehmann,
            )?),
        };
        Ok(Scorer {
            algo,
            grammar: weighted,
            tables,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algo
    }

    pub fn grammar(&self) -> &WeightedGrammar<S> {
        &self.grammar
    }

    pub fn tables(&self) -> Option<&LeftCornerTables<S>> {
        self.tables.as_ref()
    }

    /// Full prefix result. For [`Algorithm::Cky`] the "prefix" chart is the
    /// inside chart, so `per_prefix[k]` is the weight of `w₁…w_k` as a
    /// complete sentence and no conditionals are reported.
    pub fn run(&self, tokens: &[usize]) -> Result<PrefixResult<S>> {
        match (self.algo, &self.tables) {
            (Algorithm::Cky, _) => {
                let (beta, gamma) = cky_factored(tokens, &self.grammar)?;
                let mut result =
                    finish(self.grammar.start(), beta.clone(), beta, Some(gamma), None);
                result.per_token_conditional = None;
                Ok(result)
            }
            (Algorithm::Jl, Some(t)) => jl_impl(tokens, &self.grammar, t),
            (_, Some(t)) => factored_impl(tokens, &self.grammar, t),
            (_, None) => unreachable!("left-corner tables are built for every prefix algorithm"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{rel_close, Boolean, LogProb, Viterbi};

    const G1: &str = "S -> S S : 0.4\nS -> 'a' : 0.6\n";

    fn scorer<S: Semiring>(text: &str, algo: Algorithm) -> Scorer<S> {
        Scorer::new(&Grammar::parse(text).unwrap(), algo).unwrap()
    }

    #[test]
    fn g1_jl_values() {
        let s = scorer::<Prob>(G1, Algorithm::Jl);
        let r = s.run(&[0, 0, 0]).unwrap();
        let expect = [1.0, 0.4, 0.256];
        for (v, e) in r.per_prefix.iter().zip(expect) {
            assert!(rel_close(v.0, e, 1e-12), "{v:?} vs {e}");
        }
    }

    #[test]
    fn g1_fast_jl_hand_evaluation() {
        let s = scorer::<Prob>(G1, Algorithm::FastJl);
        let r = s.run(&[0, 0]).unwrap();
        let delta = r.delta.as_ref().unwrap();
        assert!(rel_close(delta.get(1, 1, 0, 0).0, 0.4, 1e-14));
        assert!(rel_close(r.chart.get(2, 2, 0).0, 1.0, 1e-14));
        assert!(rel_close(r.per_prefix[1].0, 0.4, 1e-14));
        let cond = r.per_token_conditional.unwrap();
        assert!(rel_close(cond[0].0, 1.0, 1e-14));
        assert!(rel_close(cond[1].0, 0.4, 1e-14));
    }

    #[test]
    fn single_token_is_base_case() {
        let s = scorer::<Prob>(G1, Algorithm::FastJl);
        let r = s.run(&[0]).unwrap();
        assert_eq!(r.per_prefix.len(), 1);
        let base = s.tables().unwrap().e_lc(0, 0).0 * 0.6;
        assert_eq!(r.per_prefix[0].0, base);
    }

    #[test]
    fn empty_sentence_gives_empty_result() {
        let s = scorer::<Prob>(G1, Algorithm::FastJl);
        let r = s.run(&[]).unwrap();
        assert!(r.per_prefix.is_empty());
    }

    #[test]
    fn algorithm_semiring_pairs() {
        let g = Grammar::parse(G1).unwrap();
        assert!(Scorer::<LogProb>::new(&g, Algorithm::Jl).is_err());
        assert!(Scorer::<Boolean>::new(&g, Algorithm::FastJl).is_err());
        assert!(Scorer::<Viterbi>::new(&g, Algorithm::SemiringFastJl).is_ok());
        assert!(Scorer::<Boolean>::new(&g, Algorithm::Cky).is_ok());
    }

    #[test]
    fn log_semiring_g1() {
        let s = scorer::<LogProb>(G1, Algorithm::SemiringFastJl);
        let r = s.run(&[0, 0]).unwrap();
        assert!((r.per_prefix[1].0 - 0.4f64.ln()).abs() < 1e-9);
        assert!(r.per_token_conditional.is_some());
    }

    #[test]
    fn viterbi_g1_is_best_single_derivation() {
        let s = scorer::<Viterbi>(G1, Algorithm::SemiringFastJl);
        let r = s.run(&[0, 0]).unwrap();
        // best tree with yield starting "a a" is the tree for "a a" itself
        assert!(rel_close(r.per_prefix[1].0, 0.4 * 0.6 * 0.6, 1e-14));
        assert!(r.per_token_conditional.is_none());
    }

    #[test]
    fn cky_mode_reports_inside_weights() {
        let s = scorer::<Prob>(G1, Algorithm::Cky);
        let r = s.run(&[0, 0, 0]).unwrap();
        assert!(rel_close(r.per_prefix[2].0, 0.06912, 1e-12));
        assert!(r.per_token_conditional.is_none());
    }
}

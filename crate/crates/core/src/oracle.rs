//! Brute-force ground truth and random grammar fixtures.
//!
//! Nothing here touches the chart code in [`crate::inside`] or
//! [`crate::prefix`]: trees are enumerated explicitly, and truncated sums
//! use a separate top-down memoized recursion over explicit split points.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grammar::{BinaryRule, Grammar, LexicalRule};

/// Longest yield [`enumerate_trees`] accepts.
pub const MAX_ENUMERATION_LEN: usize = 8;
/// Resampling budget of the random grammar generators.
pub const MAX_GENERATION_ATTEMPTS: usize = 10;

/// A derivation (sub)tree. `rule` indexes [`Grammar::binary_rules`] for
/// nodes and [`Grammar::lexical_rules`] for leaves.
#[derive(Clone, Debug, PartialEq)]
pub enum DerivationTree {
    Leaf {
        lhs: usize,
        rule: usize,
        terminal: usize,
        weight: f64,
    },
    Node {
        lhs: usize,
        rule: usize,
        left: Box<DerivationTree>,
        right: Box<DerivationTree>,
        weight: f64,
    },
}

impl DerivationTree {
    pub fn root(&self) -> usize {
        match self {
            DerivationTree::Leaf { lhs, .. } | DerivationTree::Node { lhs, .. } => *lhs,
        }
    }

    /// Product of all rule weights in the tree.
    pub fn weight(&self) -> f64 {
        match self {
            DerivationTree::Leaf { weight, .. } | DerivationTree::Node { weight, .. } => *weight,
        }
    }

    pub fn yield_tokens(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield(&self, out: &mut Vec<usize>) {
        match self {
            DerivationTree::Leaf { terminal, .. } => out.push(*terminal),
            DerivationTree::Node { left, right, .. } => {
                left.collect_yield(out);
                right.collect_yield(out);
            }
        }
    }

    /// Rule weights multiplied afresh from `g`, for checking `weight()`.
    pub fn recompute_weight(&self, g: &Grammar) -> f64 {
        match self {
            DerivationTree::Leaf { rule, .. } => g.lexical_rules()[*rule].weight,
            DerivationTree::Node {
                rule, left, right, ..
            } => {
                g.binary_rules()[*rule].weight
                    * left.recompute_weight(g)
                    * right.recompute_weight(g)
            }
        }
    }
}

struct RulesByLhs {
    binary: Vec<Vec<usize>>,
    lexical: Vec<Vec<usize>>,
}

impl RulesByLhs {
    fn new(g: &Grammar) -> Self {
        let nt = g.num_nonterminals();
        let mut binary = vec![Vec::new(); nt];
        let mut lexical = vec![Vec::new(); nt];
        for (i, r) in g.binary_rules().iter().enumerate() {
            binary[r.lhs].push(i);
        }
        for (i, r) in g.lexical_rules().iter().enumerate() {
            lexical[r.lhs].push(i);
        }
        RulesByLhs { binary, lexical }
    }
}

/// Every derivation subtree rooted at `root` whose yield is exactly
/// `tokens`. Token indices outside Σ simply match no rule.
pub fn enumerate_trees(g: &Grammar, root: usize, tokens: &[usize]) -> Result<Vec<DerivationTree>> {
    if tokens.len() > MAX_ENUMERATION_LEN {
        return Err(Error::YieldTooLong {
            len: tokens.len(),
            max: MAX_ENUMERATION_LEN,
        });
    }
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let rules = RulesByLhs::new(g);
    Ok(trees_for(g, &rules, root, tokens))
}

fn trees_for(g: &Grammar, rules: &RulesByLhs, x: usize, tokens: &[usize]) -> Vec<DerivationTree> {
    let mut out = Vec::new();
    if let [t] = tokens {
        for &r in &rules.lexical[x] {
            let rule = g.lexical_rules()[r];
            if rule.terminal == *t {
                out.push(DerivationTree::Leaf {
                    lhs: x,
                    rule: r,
                    terminal: *t,
                    weight: rule.weight,
                });
            }
        }
        return out;
    }
    for &r in &rules.binary[x] {
        let rule = g.binary_rules()[r];
        for split in 1..tokens.len() {
            let lefts = trees_for(g, rules, rule.left, &tokens[..split]);
            if lefts.is_empty() {
                continue;
            }
            let rights = trees_for(g, rules, rule.right, &tokens[split..]);
            for l in &lefts {
                for rt in &rights {
                    out.push(DerivationTree::Node {
                        lhs: x,
                        rule: r,
                        weight: rule.weight * l.weight() * rt.weight(),
                        left: Box::new(l.clone()),
                        right: Box::new(rt.clone()),
                    });
                }
            }
        }
    }
    out
}

/// Total weight of [`enumerate_trees`], i.e. `p(root ⇒* tokens)`.
pub fn enumerated_weight(g: &Grammar, root: usize, tokens: &[usize]) -> Result<f64> {
    Ok(enumerate_trees(g, root, tokens)?
        .iter()
        .map(|t| t.weight())
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Sum,
    Max,
}

/// Top-down memoized total (or best) tree weight over strings that start
/// with a fixed prefix and continue with arbitrary terminals.
///
/// Spans inside the free continuation only depend on their length, so
/// they come from a per-length table built bottom-up; spans that touch the
/// prefix are memoized on `(X, from, to)`.
pub struct PatternWeight<'g> {
    g: &'g Grammar,
    rules: RulesByLhs,
    prefix: Vec<usize>,
    combine: Combine,
    /// `free[m][x]`: weight of `x` deriving any string of length `m`.
    free: Vec<Vec<f64>>,
    memo: HashMap<(usize, usize, usize), f64>,
}

impl<'g> PatternWeight<'g> {
    /// Supports totals up to `max_total_len` (at least the prefix length).
    pub fn new(g: &'g Grammar, prefix: &[usize], max_total_len: usize, combine: Combine) -> Self {
        let rules = RulesByLhs::new(g);
        let free_len = max_total_len.saturating_sub(prefix.len());
        let nt = g.num_nonterminals();
        let mut free = vec![vec![0.0; nt]; free_len + 1];
        let join = |a: f64, b: f64| match combine {
            Combine::Sum => a + b,
            Combine::Max => a.max(b),
        };
        if free_len >= 1 {
            for l in g.lexical_rules() {
                free[1][l.lhs] = join(free[1][l.lhs], l.weight);
            }
        }
        for m in 2..=free_len {
            for x in 0..nt {
                let mut total = 0.0;
                for &r in &rules.binary[x] {
                    let b = g.binary_rules()[r];
                    for j in 1..m {
                        total = join(total, b.weight * free[j][b.left] * free[m - j][b.right]);
                    }
                }
                free[m][x] = total;
            }
        }
        PatternWeight {
            g,
            rules,
            prefix: prefix.to_vec(),
            combine,
            free,
            memo: HashMap::new(),
        }
    }

    fn join(&self, a: f64, b: f64) -> f64 {
        match self.combine {
            Combine::Sum => a + b,
            Combine::Max => a.max(b),
        }
    }

    /// Weight of `x` deriving positions `[from, to)` of the pattern.
    pub fn weight(&mut self, x: usize, from: usize, to: usize) -> f64 {
        if from >= self.prefix.len() {
            return self.free[to - from][x];
        }
        if let Some(&v) = self.memo.get(&(x, from, to)) {
            return v;
        }
        let mut total = 0.0;
        if to - from == 1 {
            let t = self.prefix[from];
            for &r in &self.rules.lexical[x] {
                let rule = self.g.lexical_rules()[r];
                if rule.terminal == t {
                    total = self.join(total, rule.weight);
                }
            }
        } else {
            for idx in 0..self.rules.binary[x].len() {
                let rule = self.g.binary_rules()[self.rules.binary[x][idx]];
                for split in from + 1..to {
                    let l = self.weight(rule.left, from, split);
                    if l == 0.0 {
                        continue;
                    }
                    let r = self.weight(rule.right, split, to);
                    total = self.join(total, rule.weight * l * r);
                }
            }
        }
        self.memo.insert((x, from, to), total);
        total
    }

    /// Weight of the start symbol over strings of exactly `total_len`
    /// positions (`total_len ≥ 1`, at least the prefix length).
    pub fn root_weight(&mut self, total_len: usize) -> f64 {
        if total_len == 0 || total_len < self.prefix.len() {
            return 0.0;
        }
        self.weight(self.g.start(), 0, total_len)
    }
}

/// `p(S ⇒* tokens)` by the memoized recursion.
pub fn string_weight(g: &Grammar, tokens: &[usize]) -> f64 {
    PatternWeight::new(g, tokens, tokens.len(), Combine::Sum).root_weight(tokens.len())
}

/// Mass of all strings of each length `0..=max_len` under the start symbol.
/// Index 0 is the ε weight.
pub fn length_distribution(g: &Grammar, max_len: usize) -> Vec<f64> {
    let mut pattern = PatternWeight::new(g, &[], max_len, Combine::Sum);
    let mut out: Vec<f64> = (0..=max_len).map(|m| pattern.root_weight(m)).collect();
    out[0] = g.epsilon_weight().unwrap_or(0.0);
    out
}

/// Bracket for the prefix probability of `tokens`:
/// `lower ≤ p_π(tokens|S) ≤ lower + tail_bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrefixBracket {
    /// Mass of strings with this prefix and total length ≤ `max_total_len`.
    pub lower: f64,
    /// `1 −` mass of all strings of length ≤ `max_total_len`.
    pub tail_bound: f64,
}

impl PrefixBracket {
    pub fn upper(&self) -> f64 {
        self.lower + self.tail_bound
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper() + slack
    }
}

/// Truncated prefix-probability sum for a tight grammar.
/// Out-of-alphabet tokens give `lower = 0`.
pub fn prefix_oracle(g: &Grammar, tokens: &[usize], max_total_len: usize) -> PrefixBracket {
    let lengths = length_distribution(g, max_total_len);
    let tail_bound = (1.0 - lengths.iter().sum::<f64>()).max(0.0);
    if tokens.iter().any(|&t| t >= g.num_terminals()) {
        return PrefixBracket {
            lower: 0.0,
            tail_bound,
        };
    }
    let n = tokens.len();
    let mut pattern = PatternWeight::new(g, tokens, max_total_len, Combine::Sum);
    let mut lower = if n == 0 { lengths[0] } else { 0.0 };
    for total in n.max(1)..=max_total_len {
        lower += pattern.root_weight(total);
    }
    PrefixBracket { lower, tail_bound }
}

/// Best single tree over strings `tokens · u` with `|tokens · u| ≤ max_total_len`.
pub fn prefix_oracle_max(g: &Grammar, tokens: &[usize], max_total_len: usize) -> f64 {
    let n = tokens.len();
    let mut pattern = PatternWeight::new(g, tokens, max_total_len, Combine::Max);
    (n.max(1)..=max_total_len)
        .map(|total| pattern.root_weight(total))
        .fold(0.0, f64::max)
}

fn nonterminal_names(n: usize) -> Vec<String> {
    std::iter::once("S".to_string())
        .chain((1..n).map(|i| format!("N{i}")))
        .collect()
}

fn terminal_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect()
    } else {
        (0..n).map(|i| format!("t{i}")).collect()
    }
}

/// Positive weights scaled to sum to `total`.
fn normalized(rng: &mut ChaCha8Rng, count: usize, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w * total / sum).collect()
}

fn check_args(num_nt: usize, num_terminals: usize, lexical_mass: f64) -> Result<()> {
    if num_nt == 0 || num_terminals == 0 || !(lexical_mass > 0.0 && lexical_mass < 1.0) {
        return Err(Error::InsufficientData {
            what: "random grammar".into(),
            reason: format!(
                "need num_nt >= 1, num_terminals >= 1, lexical_mass in (0,1); got {num_nt}, {num_terminals}, {lexical_mass}"
            ),
        });
    }
    Ok(())
}

/// A grammar with every rule `X → Y Z` and `X → a`. Each left-hand side puts
/// a share of at least `lexical_mass` on its lexical rules. Non-tight draws
/// are resampled; the result is a function of the arguments only.
pub fn random_dense_grammar(
    num_nt: usize,
    num_terminals: usize,
    seed: u64,
    lexical_mass: f64,
) -> Result<Grammar> {
    check_args(num_nt, num_terminals, lexical_mass)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut binary = Vec::with_capacity(num_nt.pow(3));
        let mut lexical = Vec::with_capacity(num_nt * num_terminals);
        for x in 0..num_nt {
            let share = rng.gen_range(lexical_mass..(1.0 + lexical_mass) / 2.0);
            let lex = normalized(&mut rng, num_terminals, share);
            let bin = normalized(&mut rng, num_nt * num_nt, 1.0 - share);
            for (yz, weight) in bin.into_iter().enumerate() {
                binary.push(BinaryRule {
                    lhs: x,
                    left: yz / num_nt,
                    right: yz % num_nt,
                    weight,
                });
            }
            for (terminal, weight) in lex.into_iter().enumerate() {
                lexical.push(LexicalRule {
                    lhs: x,
                    terminal,
                    weight,
                });
            }
        }
        let g = Grammar::from_rules(
            nonterminal_names(num_nt),
            terminal_names(num_terminals),
            0,
            binary,
            lexical,
            None,
        )?;
        if g.tightness_estimate().tight {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// Like [`random_dense_grammar`] but each nonterminal gets only
/// `binary_per_nt` binary rules and a random subset of the terminals.
/// A chain `S → … N1`, `N1 → … N2`, … keeps every nonterminal reachable and
/// every terminal has at least one lexical rule.
pub fn random_sparse_grammar(
    num_nt: usize,
    num_terminals: usize,
    binary_per_nt: usize,
    seed: u64,
    lexical_mass: f64,
) -> Result<Grammar> {
    check_args(num_nt, num_terminals, lexical_mass)?;
    let binary_per_nt = binary_per_nt.clamp(1, num_nt * num_nt);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut binary = Vec::new();
        let mut lexical = Vec::new();
        for x in 0..num_nt {
            let mut pairs: Vec<(usize, usize)> = (0..num_nt * num_nt)
                .map(|yz| (yz / num_nt, yz % num_nt))
                .collect();
            pairs.shuffle(&mut rng);
            if x + 1 < num_nt {
                let chain = pairs
                    .iter()
                    .position(|&(_, z)| z == x + 1)
                    .expect("some pair ends in the next nonterminal");
                pairs.swap(0, chain);
            }
            pairs.truncate(binary_per_nt);

            let mut terms: Vec<usize> = (0..num_terminals)
                .filter(|t| t % num_nt == x || rng.gen_bool(0.5))
                .collect();
            if terms.is_empty() {
                terms.push(rng.gen_range(0..num_terminals));
            }

            let share = rng.gen_range(lexical_mass..(1.0 + lexical_mass) / 2.0);
            let lex = normalized(&mut rng, terms.len(), share);
            let bin = normalized(&mut rng, pairs.len(), 1.0 - share);
            for ((left, right), weight) in pairs.into_iter().zip(bin) {
                binary.push(BinaryRule {
                    lhs: x,
                    left,
                    right,
                    weight,
                });
            }
            for (terminal, weight) in terms.into_iter().zip(lex) {
                lexical.push(LexicalRule {
                    lhs: x,
                    terminal,
                    weight,
                });
            }
        }
        let g = Grammar::from_rules(
            nonterminal_names(num_nt),
            terminal_names(num_terminals),
            0,
            binary,
            lexical,
            None,
        )?;
        if g.tightness_estimate().tight {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::rel_close;

    fn g1() -> Grammar {
        Grammar::parse("S -> S S : 0.4\nS -> 'a' : 0.6").unwrap()
    }

    #[test]
    fn g1_trees() {
        let g = g1();
        let one = enumerate_trees(&g, 0, &[0]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].weight(), 0.6);
        let three = enumerate_trees(&g, 0, &[0, 0, 0]).unwrap();
        assert_eq!(three.len(), 2);
        let total: f64 = three.iter().map(|t| t.weight()).sum();
        assert!(rel_close(total, 0.06912, 1e-12));
        for t in &three {
            assert_eq!(t.yield_tokens(), vec![0, 0, 0]);
            assert!(rel_close(t.weight(), t.recompute_weight(&g), 1e-15));
        }
    }

    #[test]
    fn unknown_token_has_no_trees() {
        assert!(enumerate_trees(&g1(), 0, &[0, 5]).unwrap().is_empty());
    }

    #[test]
    fn long_yield_rejected() {
        let err = enumerate_trees(&g1(), 0, &[0; 9]).unwrap_err();
        assert_eq!(err, Error::YieldTooLong { len: 9, max: 8 });
    }

    #[test]
    fn catalan_counts() {
        // G1 has one tree per binary bracketing
        let g = g1();
        let catalan = [1, 1, 2, 5, 14, 42, 132, 429];
        for (n, &c) in catalan.iter().enumerate() {
            assert_eq!(enumerate_trees(&g, 0, &vec![0; n + 1]).unwrap().len(), c);
        }
    }

    #[test]
    fn memoized_recursion_matches_enumeration() {
        let g = random_sparse_grammar(3, 2, 3, 7, 0.5).unwrap();
        for tokens in [vec![0], vec![1, 0], vec![0, 1, 1, 0], vec![1, 1, 0, 0, 1]] {
            let a = enumerated_weight(&g, 0, &tokens).unwrap();
            let b = string_weight(&g, &tokens);
            assert!(rel_close(a, b, 1e-12), "{tokens:?}: {a} vs {b}");
        }
    }

    #[test]
    fn g1_prefix_brackets() {
        let g = g1();
        let b = prefix_oracle(&g, &[0], 9);
        assert!(b.contains(1.0, 0.0), "{b:?}");
        let b = prefix_oracle(&g, &[0, 0], 11);
        assert!(b.contains(0.4, 0.0), "{b:?}");
        let b = prefix_oracle(&g, &[0, 0, 0], 400);
        assert!(b.tail_bound < 1e-6, "{b:?}");
        assert!(b.contains(0.256, 1e-14), "{b:?}");
        let unknown = prefix_oracle(&g, &[2], 9);
        assert_eq!(unknown.lower, 0.0);
    }

    #[test]
    fn g1_viterbi_oracle() {
        let best = prefix_oracle_max(&g1(), &[0, 0], 12);
        assert!(rel_close(best, 0.144, 1e-14));
    }

    #[test]
    fn length_distribution_of_g1() {
        let d = length_distribution(&g1(), 3);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.6);
        assert!(rel_close(d[2], 0.144, 1e-14));
        assert!(rel_close(d[3], 0.06912, 1e-12));
    }

    #[test]
    fn generator_shapes() {
        let g = random_dense_grammar(1, 1, 3, 0.6).unwrap();
        assert_eq!(g.binary_rules().len(), 1);
        assert_eq!(g.lexical_rules().len(), 1);
        assert!(g.validate().passed());

        let a = random_dense_grammar(4, 3, 11, 0.6).unwrap();
        let b = random_dense_grammar(4, 3, 11, 0.6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.binary_rules().len(), 64);
        assert_eq!(a.lexical_rules().len(), 12);
        assert_ne!(a, random_dense_grammar(4, 3, 12, 0.6).unwrap());
    }

    #[test]
    fn dense_fixture_is_tight() {
        let g = random_dense_grammar(8, 4, 1, 0.6).unwrap();
        let t = g.tightness_estimate();
        assert!(t.extinction[0] > 1.0 - 1e-6);
        assert!(g.validate().passed());
    }

    #[test]
    fn sparse_generator_is_valid() {
        for seed in 0..20 {
            let g = random_sparse_grammar(4, 3, 2, seed, 0.5).unwrap();
            assert!(g.validate().passed(), "seed {seed}");
            assert_eq!(g.binary_rules().len(), 8);
        }
    }

    #[test]
    fn bad_generator_arguments() {
        assert!(random_dense_grammar(0, 1, 0, 0.5).is_err());
        assert!(random_dense_grammar(1, 1, 0, 1.0).is_err());
    }
}

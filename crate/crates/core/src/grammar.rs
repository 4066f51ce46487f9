//! Weighted context-free grammars in Chomsky normal form.
//!
//! Text format, one item per line:
//!
//! ```text
//! # comment
//! @start S
//! S -> S S : 0.4
//! S -> 'a' : 0.6
//! S -> : 0.0          # S -> ε
//! ```
//!
//! Weights are probabilities. A [`Grammar`] keeps them as `f64`;
//! [`Grammar::weighted`] converts them once into a dense per-semiring view.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::semiring::Semiring;

/// Absolute tolerance on `Σ p(X → α) = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Fixed-point iteration for extinction probabilities stops below this change.
pub const EXTINCTION_EPSILON: f64 = 1e-12;
pub const EXTINCTION_MAX_ITERATIONS: usize = 10_000;
/// A grammar is reported tight when the start symbol's extinction
/// probability exceeds `1 − TIGHTNESS_SLACK`.
pub const TIGHTNESS_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryRule {
    pub lhs: usize,
    pub left: usize,
    pub right: usize,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LexicalRule {
    pub lhs: usize,
    pub terminal: usize,
    pub weight: f64,
}

/// Position of a rule in the source, so serialization can preserve order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RuleRef {
    Binary(usize),
    Lexical(usize),
    Epsilon,
}

#[derive(Clone, Debug)]
pub struct Grammar {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    start: usize,
    binary: Vec<BinaryRule>,
    lexical: Vec<LexicalRule>,
    epsilon: Option<f64>,
    order: Vec<RuleRef>,
    /// `(left, right)` flattened as `left * |N| + right` → `(lhs, weight)`.
    binary_by_rhs: Vec<Vec<(usize, f64)>>,
    nt_index: HashMap<String, usize>,
    terminal_index: HashMap<String, usize>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.nonterminals == other.nonterminals
            && self.terminals == other.terminals
            && self.start == other.start
            && self.binary == other.binary
            && self.lexical == other.lexical
            && self.epsilon == other.epsilon
    }
}

impl Grammar {
    /// Builds a grammar from already-indexed rules. Rule order is binary
    /// rules, then lexical rules, then the ε rule.
    pub fn from_rules(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        start: usize,
        binary: Vec<BinaryRule>,
        lexical: Vec<LexicalRule>,
        epsilon: Option<f64>,
    ) -> Result<Grammar> {
        let mut order: Vec<RuleRef> = (0..binary.len()).map(RuleRef::Binary).collect();
        order.extend((0..lexical.len()).map(RuleRef::Lexical));
        if epsilon.is_some() {
            order.push(RuleRef::Epsilon);
        }
        Self::assemble(
            nonterminals,
            terminals,
            start,
            binary,
            lexical,
            epsilon,
            order,
        )
    }

    fn assemble(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        start: usize,
        binary: Vec<BinaryRule>,
        lexical: Vec<LexicalRule>,
        epsilon: Option<f64>,
        order: Vec<RuleRef>,
    ) -> Result<Grammar> {
        let nt = nonterminals.len();
        if start >= nt {
            return Err(Error::UnknownStartSymbol(format!("#{start}")));
        }
        let nt_index: HashMap<String, usize> = nonterminals
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let terminal_index: HashMap<String, usize> = terminals
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        if nt_index.len() != nt || terminal_index.len() != terminals.len() {
            return Err(Error::Syntax {
                line: 0,
                reason: "symbol names must be distinct".into(),
            });
        }
        if let Some(name) = terminals.iter().find(|t| nt_index.contains_key(*t)) {
            return Err(Error::Syntax {
                line: 0,
                reason: format!("{name:?} is both a terminal and a nonterminal"),
            });
        }

        let mut seen = HashSet::new();
        let mut binary_by_rhs = vec![Vec::new(); nt * nt];
        for r in &binary {
            if r.lhs >= nt || r.left >= nt || r.right >= nt {
                return Err(Error::Syntax {
                    line: 0,
                    reason: format!("binary rule {r:?} references an unknown nonterminal"),
                });
            }
            if !seen.insert((r.lhs, Some((r.left, r.right)), None)) {
                return Err(Error::DuplicateRule {
                    line: 0,
                    rule: format!(
                        "{} -> {} {}",
                        nonterminals[r.lhs], nonterminals[r.left], nonterminals[r.right]
                    ),
                });
            }
            binary_by_rhs[r.left * nt + r.right].push((r.lhs, r.weight));
        }
        for r in &lexical {
            if r.lhs >= nt || r.terminal >= terminals.len() {
                return Err(Error::Syntax {
                    line: 0,
                    reason: format!("lexical rule {r:?} references an unknown symbol"),
                });
            }
            if !seen.insert((r.lhs, None, Some(r.terminal))) {
                return Err(Error::DuplicateRule {
                    line: 0,
                    rule: format!(
                        "{} -> {}",
                        nonterminals[r.lhs],
                        quote_terminal(&terminals[r.terminal])
                    ),
                });
            }
        }

        Ok(Grammar {
            nonterminals,
            terminals,
            start,
            binary,
            lexical,
            epsilon,
            order,
            binary_by_rhs,
            nt_index,
            terminal_index,
        })
    }

    pub fn parse(text: &str) -> Result<Grammar> {
        Parser::default().run(text)
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn binary_rules(&self) -> &[BinaryRule] {
        &self.binary
    }

    pub fn lexical_rules(&self) -> &[LexicalRule] {
        &self.lexical
    }

    pub fn epsilon_weight(&self) -> Option<f64> {
        self.epsilon
    }

    /// All `(lhs, weight)` with a rule `lhs → left right`.
    pub fn binary_by_rhs(&self, left: usize, right: usize) -> &[(usize, f64)] {
        &self.binary_by_rhs[left * self.nonterminals.len() + right]
    }

    pub fn nonterminal_index(&self, name: &str) -> Option<usize> {
        self.nt_index.get(name).copied()
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminal_index.get(name).copied()
    }

    /// Splits a sentence on whitespace and maps tokens into Σ.
    /// Positions in errors are 1-based.
    pub fn tokenize(&self, sentence: &str) -> Result<Vec<usize>> {
        sentence
            .split_whitespace()
            .enumerate()
            .map(|(i, tok)| {
                self.terminal_index(tok).ok_or_else(|| Error::UnknownToken {
                    position: i + 1,
                    token: tok.to_string(),
                })
            })
            .collect()
    }

    /// Renders the grammar in the text format; rules keep their source order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "@start {}", self.nonterminals[self.start]);
        for r in &self.order {
            match *r {
                RuleRef::Binary(i) => {
                    let b = &self.binary[i];
                    let _ = writeln!(
                        out,
                        "{} -> {} {} : {}",
                        self.nonterminals[b.lhs],
                        self.nonterminals[b.left],
                        self.nonterminals[b.right],
                        b.weight
                    );
                }
                RuleRef::Lexical(i) => {
                    let l = &self.lexical[i];
                    let _ = writeln!(
                        out,
                        "{} -> {} : {}",
                        self.nonterminals[l.lhs],
                        quote_terminal(&self.terminals[l.terminal]),
                        l.weight
                    );
                }
                RuleRef::Epsilon => {
                    let _ = writeln!(
                        out,
                        "{} -> : {}",
                        self.nonterminals[self.start],
                        self.epsilon.unwrap_or(0.0)
                    );
                }
            }
        }
        out
    }

    /// Per-nonterminal total rule weight, ε included for the start symbol.
    pub fn rule_mass(&self) -> Vec<(f64, usize)> {
        let mut mass = vec![(0.0, 0usize); self.nonterminals.len()];
        for b in &self.binary {
            mass[b.lhs].0 += b.weight;
            mass[b.lhs].1 += 1;
        }
        for l in &self.lexical {
            mass[l.lhs].0 += l.weight;
            mass[l.lhs].1 += 1;
        }
        if let Some(e) = self.epsilon {
            mass[self.start].0 += e;
            mass[self.start].1 += 1;
        }
        mass
    }

    /// Nonterminals not reachable from the start symbol.
    pub fn unreachable(&self) -> Vec<usize> {
        let n = self.nonterminals.len();
        let mut children = vec![Vec::new(); n];
        for b in &self.binary {
            children[b.lhs].push(b.left);
            children[b.lhs].push(b.right);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start] = true;
        while let Some(x) = queue.pop_front() {
            for &c in &children[x] {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        (0..n).filter(|&x| !seen[x]).collect()
    }

    /// Extinction probabilities `q_X`: the probability that a derivation
    /// from `X` terminates. Iterates
    /// `q_X ← Σ p(X→Y Z)·q_Y·q_Z + Σ p(X→a) (+ p(S→ε))` from zero.
    pub fn tightness_estimate(&self) -> Tightness {
        let n = self.nonterminals.len();
        let mut base = vec![0.0; n];
        for l in &self.lexical {
            base[l.lhs] += l.weight;
        }
        if let Some(e) = self.epsilon {
            base[self.start] += e;
        }
        let mut q = vec![0.0; n];
        let mut iterations = 0;
        while iterations < EXTINCTION_MAX_ITERATIONS {
            iterations += 1;
            let mut next = base.clone();
            for b in &self.binary {
                next[b.lhs] += b.weight * q[b.left] * q[b.right];
            }
            let change = next
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            q = next;
            if change < EXTINCTION_EPSILON {
                break;
            }
        }
        let tight = q[self.start] > 1.0 - TIGHTNESS_SLACK;
        Tightness {
            extinction: q,
            tight,
            iterations,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let normalization_failures = self
            .rule_mass()
            .into_iter()
            .enumerate()
            .filter(|(_, (total, count))| {
                *count > 0 && (total - 1.0).abs() > NORMALIZATION_TOLERANCE
            })
            .map(|(x, (total, _))| NormalizationFailure {
                nonterminal: self.nonterminals[x].clone(),
                total,
            })
            .collect();
        let unreachable = self
            .unreachable()
            .into_iter()
            .map(|x| self.nonterminals[x].clone())
            .collect();
        ValidationReport {
            // every constructor only admits the three CNF shapes
            cnf_shape: true,
            normalization_failures,
            unreachable,
            tightness: self.tightness_estimate(),
        }
    }

    /// Converts the weights into `S` and lays them out densely.
    pub fn weighted<S: Semiring>(&self) -> WeightedGrammar<S> {
        let nt = self.nonterminals.len();
        let mut cube = vec![S::zero(); nt * nt * nt];
        let binary: Vec<_> = self
            .binary
            .iter()
            .map(|b| {
                let w = S::from_prob(b.weight);
                cube[(b.lhs * nt + b.left) * nt + b.right] = w;
                (b.lhs, b.left, b.right, w)
            })
            .collect();
        let mut lexical = vec![S::zero(); self.terminals.len() * nt];
        for l in &self.lexical {
            lexical[l.terminal * nt + l.lhs] = S::from_prob(l.weight);
        }
        WeightedGrammar {
            num_nt: nt,
            num_terminals: self.terminals.len(),
            start: self.start,
            binary,
            cube,
            lexical,
            epsilon: self.epsilon.map(S::from_prob),
        }
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn quote_terminal(t: &str) -> String {
    format!("'{}'", t.replace('\'', "\\'"))
}

/// Semiring-valued, densely indexed copy of a grammar's weights.
#[derive(Clone, Debug)]
pub struct WeightedGrammar<S> {
    num_nt: usize,
    num_terminals: usize,
    start: usize,
    binary: Vec<(usize, usize, usize, S)>,
    /// `p(X → Y Z)` at `(X·|N| + Y)·|N| + Z`.
    cube: Vec<S>,
    /// `p(X → a)` at `a·|N| + X`.
    lexical: Vec<S>,
    epsilon: Option<S>,
}

impl<S: Semiring> WeightedGrammar<S> {
    pub fn num_nonterminals(&self) -> usize {
        self.num_nt
    }

    pub fn num_terminals(&self) -> usize {
        self.num_terminals
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Binary rules `(lhs, left, right, weight)` in source order.
    pub fn binary_rules(&self) -> &[(usize, usize, usize, S)] {
        &self.binary
    }

    #[inline(always)]
    pub fn binary_weight(&self, lhs: usize, left: usize, right: usize) -> S {
        self.cube[(lhs * self.num_nt + left) * self.num_nt + right]
    }

    /// `p(lhs → left Z)` for every `Z`.
    #[inline(always)]
    pub fn binary_row(&self, lhs: usize, left: usize) -> &[S] {
        let start = (lhs * self.num_nt + left) * self.num_nt;
        &self.cube[start..start + self.num_nt]
    }

    /// `p(X → terminal)` for every `X`.
    #[inline(always)]
    pub fn lexical_column(&self, terminal: usize) -> &[S] {
        &self.lexical[terminal * self.num_nt..(terminal + 1) * self.num_nt]
    }

    pub fn epsilon_weight(&self) -> Option<S> {
        self.epsilon
    }

    /// Rejects token indices outside Σ (positions are 1-based).
    pub fn check_tokens(&self, tokens: &[usize]) -> Result<()> {
        match tokens.iter().position(|&t| t >= self.num_terminals) {
            Some(p) => Err(Error::UnknownToken {
                position: p + 1,
                token: format!("#{}", tokens[p]),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tightness {
    pub extinction: Vec<f64>,
    pub tight: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationFailure {
    pub nonterminal: String,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub cnf_shape: bool,
    pub normalization_failures: Vec<NormalizationFailure>,
    /// Names of nonterminals not reachable from the start symbol.
    pub unreachable: Vec<String>,
    pub tightness: Tightness,
}

impl ValidationReport {
    pub fn local_normalization(&self) -> bool {
        self.normalization_failures.is_empty()
    }

    pub fn trim(&self) -> bool {
        self.unreachable.is_empty()
    }

    /// Hard checks only; tightness is diagnostic.
    pub fn passed(&self) -> bool {
        self.cnf_shape && self.local_normalization() && self.trim()
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cnf_shape: {}", pass(self.cnf_shape))?;
        writeln!(
            f,
            "local_normalization: {}",
            pass(self.local_normalization())
        )?;
        for nf in &self.normalization_failures {
            writeln!(f, "  {} sums to {}", nf.nonterminal, nf.total)?;
        }
        writeln!(f, "trim: {}", pass(self.trim()))?;
        for name in &self.unreachable {
            writeln!(f, "  unreachable: {name}")?;
        }
        writeln!(
            f,
            "tight: {} (after {} iterations)",
            if self.tightness.tight {
                "yes"
            } else {
                "NO (warning)"
            },
            self.tightness.iterations
        )
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
enum RhsToken {
    Nonterminal(String),
    Terminal(String),
}

#[derive(Default)]
struct Parser {
    nonterminals: Vec<String>,
    nt_index: HashMap<String, usize>,
    terminals: Vec<String>,
    terminal_index: HashMap<String, usize>,
    binary: Vec<BinaryRule>,
    lexical: Vec<LexicalRule>,
    epsilon: Option<(usize, usize, f64)>,
    order: Vec<RuleRef>,
    seen: HashSet<(usize, Vec<RhsToken>)>,
    declared_start: Option<(usize, String)>,
}

fn syntax(line: usize, reason: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        reason: reason.into(),
    }
}

/// Drops a trailing `#` comment that is not inside a quoted terminal.
fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if in_quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '\'' {
                in_quote = false;
            }
        } else if c == '\'' {
            in_quote = true;
        } else if c == '#' {
            return &line[..i];
        }
    }
    line
}

/// Byte offset of the last `:` outside quotes.
fn weight_separator(rhs: &str) -> Option<usize> {
    let mut in_quote = false;
    let mut escaped = false;
    let mut last = None;
    for (i, c) in rhs.char_indices() {
        if in_quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '\'' {
                in_quote = false;
            }
        } else if c == '\'' {
            in_quote = true;
        } else if c == ':' {
            last = Some(i);
        }
    }
    last
}

fn rhs_tokens(line: usize, rhs: &str) -> Result<Vec<RhsToken>> {
    let mut tokens = Vec::new();
    let mut chars = rhs.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '\'' {
            chars.next();
            let mut term = String::new();
            loop {
                match chars.next() {
                    None => return Err(syntax(line, "unterminated terminal")),
                    Some('\\') if chars.peek() == Some(&'\'') => {
                        chars.next();
                        term.push('\'');
                    }
                    Some('\'') => break,
                    Some(ch) => term.push(ch),
                }
            }
            if term.is_empty() {
                return Err(syntax(line, "empty terminal"));
            }
            tokens.push(RhsToken::Terminal(term));
        } else {
            let mut name = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                if ch == '\'' {
                    return Err(syntax(line, format!("quote inside symbol name {name:?}")));
                }
                name.push(ch);
                chars.next();
            }
            tokens.push(RhsToken::Nonterminal(name));
        }
    }
    Ok(tokens)
}

fn valid_symbol(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('@')
        && !name
            .chars()
            .any(|c| c.is_whitespace() || c == '\'' || c == ':' || c == '#')
}

impl Parser {
    fn nonterminal(&mut self, name: &str) -> usize {
        if let Some(&i) = self.nt_index.get(name) {
            return i;
        }
        let i = self.nonterminals.len();
        self.nonterminals.push(name.to_string());
        self.nt_index.insert(name.to_string(), i);
        i
    }

    fn terminal(&mut self, name: &str) -> usize {
        if let Some(&i) = self.terminal_index.get(name) {
            return i;
        }
        let i = self.terminals.len();
        self.terminals.push(name.to_string());
        self.terminal_index.insert(name.to_string(), i);
        i
    }

    fn run(mut self, text: &str) -> Result<Grammar> {
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('@') {
                self.directive(line_no, rest)?;
            } else {
                self.rule(line_no, line)?;
            }
        }
        if self.order.is_empty() {
            return Err(syntax(last_line.max(1), "grammar has no rules"));
        }

        let start = match &self.declared_start {
            Some((_, name)) => *self
                .nt_index
                .get(name)
                .ok_or_else(|| Error::UnknownStartSymbol(name.clone()))?,
            None => match self.order[0] {
                RuleRef::Binary(i) => self.binary[i].lhs,
                RuleRef::Lexical(i) => self.lexical[i].lhs,
                RuleRef::Epsilon => self.epsilon.expect("epsilon rule recorded").1,
            },
        };
        let epsilon = match self.epsilon {
            Some((line, lhs, _)) if lhs != start => {
                return Err(syntax(
                    line,
                    format!(
                        "only the start symbol may rewrite to ε, not {}",
                        self.nonterminals[lhs]
                    ),
                ))
            }
            Some((_, _, w)) => Some(w),
            None => None,
        };
        if let Some(t) = self
            .terminals
            .iter()
            .find(|t| self.nt_index.contains_key(*t))
        {
            return Err(syntax(
                0,
                format!("{t:?} is used both as a terminal and as a nonterminal"),
            ));
        }

        Grammar::assemble(
            self.nonterminals,
            self.terminals,
            start,
            self.binary,
            self.lexical,
            epsilon,
            self.order,
        )
    }

    fn directive(&mut self, line: usize, rest: &str) -> Result<()> {
        let mut parts = rest.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some("start"), Some(sym), None) if valid_symbol(sym) => {
                if self.declared_start.is_some() {
                    return Err(syntax(line, "duplicate @start"));
                }
                self.declared_start = Some((line, sym.to_string()));
                Ok(())
            }
            (Some("start"), _, _) => Err(syntax(line, "expected `@start SYMBOL`")),
            _ => Err(syntax(line, format!("unknown directive @{rest}"))),
        }
    }

    fn rule(&mut self, line: usize, text: &str) -> Result<()> {
        let (lhs, rest) = text
            .split_once("->")
            .ok_or_else(|| syntax(line, "expected `LHS -> RHS : weight`"))?;
        let lhs = lhs.trim();
        if !valid_symbol(lhs) {
            return Err(syntax(line, format!("invalid left-hand side {lhs:?}")));
        }
        let sep = weight_separator(rest).ok_or_else(|| syntax(line, "missing `: weight`"))?;
        let weight_text = rest[sep + 1..].trim();
        let weight: f64 = weight_text
            .parse()
            .map_err(|_| syntax(line, format!("invalid weight {weight_text:?}")))?;
        if !weight.is_finite() || weight < 0.0 {
            return Err(syntax(
                line,
                format!("weight must be finite and >= 0, got {weight}"),
            ));
        }
        let rhs = rhs_tokens(line, &rest[..sep])?;

        let lhs_idx = self.nonterminal(lhs);
        let rule_text = format!("{} ->{}", lhs, rest[..sep].trim_end());
        match rhs.as_slice() {
            [] => {
                if self.epsilon.is_some() {
                    return Err(Error::DuplicateRule {
                        line,
                        rule: rule_text,
                    });
                }
                self.epsilon = Some((line, lhs_idx, weight));
                self.order.push(RuleRef::Epsilon);
                return Ok(());
            }
            [RhsToken::Terminal(t)] => {
                let terminal = self.terminal(t);
                if !self
                    .seen
                    .insert((lhs_idx, vec![RhsToken::Terminal(t.clone())]))
                {
                    return Err(Error::DuplicateRule {
                        line,
                        rule: rule_text,
                    });
                }
                self.order.push(RuleRef::Lexical(self.lexical.len()));
                self.lexical.push(LexicalRule {
                    lhs: lhs_idx,
                    terminal,
                    weight,
                });
            }
            [RhsToken::Nonterminal(y), RhsToken::Nonterminal(z)] => {
                for name in [y, z] {
                    if !valid_symbol(name) {
                        return Err(syntax(line, format!("invalid nonterminal {name:?}")));
                    }
                }
                let left = self.nonterminal(y);
                let right = self.nonterminal(z);
                let key = vec![
                    RhsToken::Nonterminal(y.clone()),
                    RhsToken::Nonterminal(z.clone()),
                ];
                if !self.seen.insert((lhs_idx, key)) {
                    return Err(Error::DuplicateRule {
                        line,
                        rule: rule_text,
                    });
                }
                self.order.push(RuleRef::Binary(self.binary.len()));
                self.binary.push(BinaryRule {
                    lhs: lhs_idx,
                    left,
                    right,
                    weight,
                });
            }
            _ => {
                return Err(syntax(
                    line,
                    "right-hand side must be `Y Z`, `'a'`, or empty (CNF)",
                ))
            }
        }
        Ok(())
    }
}

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use pcfg_prefix::bench::{fit_exponents, run_grid_with, write_csv, Axis, BenchAlgo, GridConfig};
use pcfg_prefix::oracle::{prefix_oracle, random_dense_grammar, string_weight};
use pcfg_prefix::{
    Algorithm, Boolean, ClosureMethod, Error, Grammar, LeftCornerTables, LogProb, Prob, Scorer,
    Semiring, SemiringKind, Viterbi,
};
use rayon::prelude::*;

use crate::output::Table;
use crate::{BenchArgs, CheckArgs, OracleArgs, ScoreArgs, ValidationFailed};

const SCORE_HEADER: [&str; 6] = [
    "sentence_id",
    "k",
    "token",
    "prefix_value",
    "conditional_value",
    "status",
];
const ORACLE_HEADER: [&str; 8] = [
    "sentence_id",
    "k",
    "token",
    "inside_oracle",
    "prefix_lower",
    "prefix_upper",
    "fastjl_value",
    "status",
];

fn load_grammar(path: &Path) -> Result<Grammar> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read grammar {}", path.display()))?;
    Grammar::parse(&text).with_context(|| format!("in grammar {}", path.display()))
}

fn input_lines(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            fs::File::open(p).with_context(|| format!("cannot read input {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

/// Non-blank input lines with their 1-based line numbers.
fn sentences(reader: Box<dyn BufRead>) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, line)| line.map(|l| (i + 1, l)).context("cannot read input line"))
        .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty()))
}

/// Closure and solver failures say something about the grammar, not the
/// invocation.
fn classify(e: Error) -> anyhow::Error {
    match e {
        Error::NonConvergent { .. } | Error::Singular | Error::NegativeEntry { .. } => {
            ValidationFailed(format!("left-corner closure failed: {e}")).into()
        }
        other => other.into(),
    }
}

pub fn check(args: CheckArgs) -> Result<()> {
    let grammar = load_grammar(&args.grammar)?;
    let report = grammar.validate();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "grammar: {} nonterminals, {} terminals, {} binary rules, {} lexical rules, start {}",
        grammar.num_nonterminals(),
        grammar.num_terminals(),
        grammar.binary_rules().len(),
        grammar.lexical_rules().len(),
        grammar.nonterminals()[grammar.start()],
    )?;
    write!(out, "{report}")?;
    writeln!(
        out,
        "extinction probability of {}: {}",
        grammar.nonterminals()[grammar.start()],
        Prob(report.tightness.extinction[grammar.start()]).render(args.precision)
    )?;
    if args.left_corner {
        let weighted = grammar.weighted::<Prob>();
        let tables = LeftCornerTables::closure_only(&weighted, ClosureMethod::Inversion)
            .map_err(classify)?;
        writeln!(out, "left-corner expectations (row X, column Y):")?;
        let mut header = vec!["X"];
        header.extend(grammar.nonterminals().iter().map(String::as_str));
        let mut table = Table::new(&mut out, args.output, &header)?;
        for (x, name) in grammar.nonterminals().iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(
                (0..grammar.num_nonterminals()).map(|y| tables.e_lc(x, y).render(args.precision)),
            );
            table.row(row)?;
        }
        table.finish()?;
    }
    if !report.passed() {
        return Err(ValidationFailed("grammar failed validation".into()).into());
    }
    Ok(())
}

struct LineOutput {
    rows: Vec<Vec<String>>,
    ok: bool,
}

fn score_line<S: Semiring>(
    scorer: &Scorer<S>,
    grammar: &Grammar,
    id: usize,
    line: &str,
    precision: usize,
) -> LineOutput {
    let error_row = |k: String, token: String, e: &Error| {
        eprintln!("line {id}: {e}");
        LineOutput {
            rows: vec![vec![
                id.to_string(),
                k,
                token,
                String::new(),
                String::new(),
                "ERROR".into(),
            ]],
            ok: false,
        }
    };
    let tokens = match grammar.tokenize(line) {
        Ok(t) => t,
        Err(e) => {
            let (k, token) = match &e {
                Error::UnknownToken { position, token } => (position.to_string(), token.clone()),
                _ => (String::new(), String::new()),
            };
            return error_row(k, token, &e);
        }
    };
    let result = match scorer.run(&tokens) {
        Ok(r) => r,
        Err(e) => return error_row(String::new(), String::new(), &e),
    };
    let rows = line
        .split_whitespace()
        .enumerate()
        .map(|(i, word)| {
            let conditional = result
                .per_token_conditional
                .as_ref()
                .map(|c| c[i].render(precision))
                .unwrap_or_default();
            vec![
                id.to_string(),
                (i + 1).to_string(),
                word.to_string(),
                result.per_prefix[i].render(precision),
                conditional,
                "ok".into(),
            ]
        })
        .collect();
    LineOutput { rows, ok: true }
}

fn score_with<S: Semiring>(args: &ScoreArgs, grammar: &Grammar) -> Result<()> {
    let scorer = Scorer::<S>::new(grammar, args.algo).map_err(classify)?;
    let lines = sentences(input_lines(args.input.as_deref())?);
    let stdout = io::stdout();
    let mut table = Table::new(stdout.lock(), args.output, &SCORE_HEADER)?;
    let (mut seen, mut succeeded) = (0usize, 0usize);
    let mut emit = |out: LineOutput, table: &mut Table<_>| -> Result<()> {
        seen += 1;
        succeeded += usize::from(out.ok);
        for row in out.rows {
            table.row(row)?;
        }
        Ok(())
    };
    if args.jobs == 1 {
        for item in lines {
            let (id, line) = item?;
            emit(
                score_line(&scorer, grammar, id, &line, args.precision),
                &mut table,
            )?;
        }
    } else {
        let all: Vec<(usize, String)> = lines.collect::<Result<_>>()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs as usize)
            .build()
            .context("cannot start worker threads")?;
        let outputs: Vec<LineOutput> = pool.install(|| {
            all.par_iter()
                .map(|(id, line)| score_line(&scorer, grammar, *id, line, args.precision))
                .collect()
        });
        for out in outputs {
            emit(out, &mut table)?;
        }
    }
    table.finish()?;
    if seen > 0 && succeeded == 0 {
        return Err(ValidationFailed("no input line could be scored".into()).into());
    }
    Ok(())
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let kind = SemiringKind::from(args.semiring);
    if !args.algo.supports(kind) {
        bail!(
            "algorithm {} requires the prob semiring, got {kind}",
            args.algo
        );
    }
    let grammar = load_grammar(&args.grammar)?;
    let report = grammar.validate();
    if !report.passed() {
        eprint!("{report}");
        return Err(ValidationFailed("grammar failed validation".into()).into());
    }
    match kind {
        SemiringKind::Prob => score_with::<Prob>(&args, &grammar),
        SemiringKind::Log => score_with::<LogProb>(&args, &grammar),
        SemiringKind::Viterbi => score_with::<Viterbi>(&args, &grammar),
        SemiringKind::Boolean => score_with::<Boolean>(&args, &grammar),
    }
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    let grammar = match &args.grammar {
        Some(path) => load_grammar(path)?,
        None => {
            let g = random_dense_grammar(args.num_nt, args.num_terminals, args.seed, 0.6)?;
            eprint!("# random grammar, seed {}\n{}", args.seed, g.to_text());
            g
        }
    };
    let scorer = Scorer::<Prob>::new(&grammar, Algorithm::FastJl).map_err(classify)?;
    let stdout = io::stdout();
    let mut table = Table::new(stdout.lock(), args.output, &ORACLE_HEADER)?;
    let mut outside = 0usize;
    for item in sentences(input_lines(args.input.as_deref())?) {
        let (id, line) = item?;
        let tokens = match grammar.tokenize(&line) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("line {id}: {e}");
                let mut row = vec![id.to_string(), String::new(), String::new()];
                row.extend(std::iter::repeat_n(String::new(), 4));
                row.push("ERROR".into());
                table.row(row)?;
                continue;
            }
        };
        let result = scorer.run(&tokens)?;
        for (i, word) in line.split_whitespace().enumerate() {
            let prefix = &tokens[..=i];
            let bracket = prefix_oracle(&grammar, prefix, args.max_len.max(prefix.len()));
            let value = result.per_prefix[i].0;
            let inside_ok = bracket.contains(value, 1e-12);
            outside += usize::from(!inside_ok);
            table.row(vec![
                id.to_string(),
                (i + 1).to_string(),
                word.to_string(),
                Prob(string_weight(&grammar, prefix)).render(args.precision),
                Prob(bracket.lower).render(args.precision),
                Prob(bracket.upper()).render(args.precision),
                Prob(value).render(args.precision),
                if inside_ok { "ok" } else { "OUTSIDE" }.into(),
            ])?;
        }
    }
    table.finish()?;
    if outside > 0 {
        return Err(ValidationFailed(format!(
            "{outside} prefix values outside the oracle bracket"
        ))
        .into());
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let algos = if args.algos.is_empty() {
        BenchAlgo::ALL.to_vec()
    } else {
        args.algos.clone()
    };
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let mut config = GridConfig::new(&args.nt, &args.len, &seeds, &algos);
    config.repeats = args.repeats;
    config.num_terminals = args.num_terminals;
    let records = run_grid_with(&config)?;
    for r in records.iter().filter(|r| r.max_rel_diff > 1e-9) {
        eprintln!(
            "warning: {} disagrees with the reference at nt={} len={} seed={} (rel diff {:e})",
            r.algo, r.num_nt, r.sentence_len, r.seed, r.max_rel_diff
        );
    }
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            write_csv(&records, io::BufWriter::new(file))?;
        }
        None => write_csv(&records, io::stdout().lock())?,
    }
    for (axis, name, fixed) in [
        (Axis::Len, "sentence length", args.nt.len()),
        (Axis::Nt, "nonterminals", args.len.len()),
    ] {
        if fixed != 1 {
            continue;
        }
        if let Ok(slopes) = fit_exponents(&records, axis) {
            for (algo, slope) in slopes {
                eprintln!("slope of {algo} per-sentence time vs {name}: {slope:.2}");
            }
        }
    }
    Ok(())
}

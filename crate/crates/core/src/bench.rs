//! Timing harness for the inside and prefix algorithms on dense random
//! grammars.
//!
//! Each grid point times two phases separately: `precompute` (weighted view
//! and left-corner tables, amortized over sentences) and `per_sentence`
//! (chart allocation and filling). Both are medians over `repeats` runs.
//! Every run is also a correctness sweep: charts of algorithms computing
//! the same quantity are compared and the largest relative difference is
//! kept on the record.

use std::collections::BTreeMap;
use std::fmt;
use std::hint::black_box;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, WeightedGrammar};
use crate::inside::{cky, cky_factored, Chart};
use crate::leftcorner::{left_corner_expectations, ClosureMethod, LeftCornerTables};
use crate::oracle::random_dense_grammar;
use crate::prefix::{fast_jl, fast_semiring_jl, jl};
use crate::semiring::{rel_diff, Prob};

pub const CSV_HEADER: &str = "algo,num_nt,sentence_len,seed,phase,wall_time_ns,repeats";
pub const MIN_REPEATS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchAlgo {
    Cky,
    CkyFactored,
    Jl,
    FastJl,
    FastSemiringJl,
}

impl BenchAlgo {
    pub const ALL: [BenchAlgo; 5] = [
        BenchAlgo::Cky,
        BenchAlgo::CkyFactored,
        BenchAlgo::Jl,
        BenchAlgo::FastJl,
        BenchAlgo::FastSemiringJl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchAlgo::Cky => "cky",
            BenchAlgo::CkyFactored => "cky_factored",
            BenchAlgo::Jl => "jl",
            BenchAlgo::FastJl => "fast_jl",
            BenchAlgo::FastSemiringJl => "fast_semiring_jl",
        }
    }

    fn is_prefix(self) -> bool {
        matches!(
            self,
            BenchAlgo::Jl | BenchAlgo::FastJl | BenchAlgo::FastSemiringJl
        )
    }
}

impl fmt::Display for BenchAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchAlgo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BenchAlgo::ALL
            .into_iter()
            .find(|a| a.name() == s || a.name().replace('_', "") == s.replace(['_', '-'], ""))
            .ok_or_else(|| format!("unknown benchmark algorithm {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub algo: BenchAlgo,
    pub num_nt: usize,
    pub sentence_len: usize,
    pub seed: u64,
    /// Median precompute time.
    pub precompute_ns: u64,
    /// Median per-sentence time.
    pub wall_time_ns: u64,
    pub repeats: usize,
    /// Largest relative chart difference against the first algorithm of the
    /// same kind (inside or prefix) at this grid point.
    pub max_rel_diff: f64,
}

#[derive(Clone, Debug)]
pub struct GridConfig {
    pub nt_values: Vec<usize>,
    pub len_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algos: Vec<BenchAlgo>,
    pub repeats: usize,
    pub num_terminals: usize,
    pub lexical_mass: f64,
}

impl GridConfig {
    pub fn new(
        nt_values: &[usize],
        len_values: &[usize],
        seeds: &[u64],
        algos: &[BenchAlgo],
    ) -> Self {
        GridConfig {
            nt_values: nt_values.to_vec(),
            len_values: len_values.to_vec(),
            seeds: seeds.to_vec(),
            algos: algos.to_vec(),
            repeats: MIN_REPEATS,
            num_terminals: 4,
            lexical_mass: 0.6,
        }
    }
}

fn median(mut xs: Vec<u64>) -> u64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn time_median<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(u64, T)> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let t0 = Instant::now();
        let out = black_box(f()?);
        times.push(t0.elapsed().as_nanos() as u64);
        last = Some(out);
    }
    Ok((median(times), last.expect("at least one repeat")))
}

fn chart_diff(a: &Chart<Prob>, b: &Chart<Prob>) -> f64 {
    a.cells()
        .zip(b.cells())
        .map(|((_, x), (_, y))| rel_diff(x.0, y.0))
        .fold(0.0, f64::max)
}

/// Uniform random sentence over Σ, deterministic per seed.
pub fn random_sentence(num_terminals: usize, len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    (0..len).map(|_| rng.gen_range(0..num_terminals)).collect()
}

/// Runs one algorithm on one grammar/sentence: returns (precompute ns,
/// per-sentence ns, chart).
fn measure(
    algo: BenchAlgo,
    grammar: &Grammar,
    tokens: &[usize],
    repeats: usize,
) -> Result<(u64, u64, Chart<Prob>)> {
    let weighted = |g: &Grammar| -> WeightedGrammar<Prob> { g.weighted() };
    match algo {
        BenchAlgo::Cky | BenchAlgo::CkyFactored => {
            let (pre, wg) = time_median(repeats, || Ok(weighted(grammar)))?;
            let (per, chart) = time_median(repeats, || {
                if algo == BenchAlgo::Cky {
                    cky(tokens, &wg)
                } else {
                    cky_factored(tokens, &wg).map(|(beta, _)| beta)
                }
            })?;
            Ok((pre, per, chart))
        }
        BenchAlgo::Jl => {
            let (pre, (wg, lc)) = time_median(repeats, || {
                let wg = weighted(grammar);
                let lc = left_corner_expectations(&wg, ClosureMethod::Inversion)?;
                Ok((wg, lc))
            })?;
            let (per, r) = time_median(repeats, || jl(tokens, &wg, &lc))?;
            Ok((pre, per, r.chart))
        }
        BenchAlgo::FastJl | BenchAlgo::FastSemiringJl => {
            let method = if algo == BenchAlgo::FastJl {
                ClosureMethod::Inversion
            } else {
                ClosureMethod::Lehmann
            };
            let (pre, (wg, lc)) = time_median(repeats, || {
                let wg = weighted(grammar);
                let lc = LeftCornerTables::closure_only(&wg, method)?;
                Ok((wg, lc))
            })?;
            let (per, r) = time_median(repeats, || {
                if algo == BenchAlgo::FastJl {
                    fast_jl(tokens, &wg, &lc)
                } else {
                    fast_semiring_jl(tokens, &wg, &lc)
                }
            })?;
            Ok((pre, per, r.chart))
        }
    }
}

/// Full factorial grid with the default settings of [`GridConfig::new`].
pub fn run_grid(
    nt_values: &[usize],
    len_values: &[usize],
    seeds: &[u64],
    algos: &[BenchAlgo],
) -> Result<Vec<BenchRecord>> {
    run_grid_with(&GridConfig::new(nt_values, len_values, seeds, algos))
}

pub fn run_grid_with(config: &GridConfig) -> Result<Vec<BenchRecord>> {
    let repeats = config.repeats.max(MIN_REPEATS);
    let mut records = Vec::new();
    if config.algos.is_empty() {
        return Ok(records);
    }
    for &num_nt in &config.nt_values {
        for &seed in &config.seeds {
            let grammar =
                random_dense_grammar(num_nt, config.num_terminals, seed, config.lexical_mass)?;
            for &len in &config.len_values {
                let tokens = random_sentence(config.num_terminals, len, seed);
                let mut inside_ref: Option<Chart<Prob>> = None;
                let mut prefix_ref: Option<Chart<Prob>> = None;
                for &algo in &config.algos {
                    let (pre, per, chart) = measure(algo, &grammar, &tokens, repeats)?;
                    let reference = if algo.is_prefix() {
                        &mut prefix_ref
                    } else {
                        &mut inside_ref
                    };
                    let max_rel_diff = match reference {
                        Some(r) => chart_diff(r, &chart),
                        None => {
                            *reference = Some(chart);
                            0.0
                        }
                    };
                    records.push(BenchRecord {
                        algo,
                        num_nt,
                        sentence_len: len,
                        seed,
                        precompute_ns: pre,
                        wall_time_ns: per,
                        repeats,
                        max_rel_diff,
                    });
                }
            }
        }
    }
    Ok(records)
}

/// One CSV row per record and phase.
pub fn write_csv<W: Write>(records: &[BenchRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        for (phase, ns) in [
            ("precompute", r.precompute_ns),
            ("per_sentence", r.wall_time_ns),
        ] {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.algo, r.num_nt, r.sentence_len, r.seed, phase, ns, r.repeats
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Number of nonterminals.
    Nt,
    /// Sentence length.
    Len,
}

type Coordinate = fn(&BenchRecord) -> usize;

/// Least-squares slope of `ln(per-sentence time)` against `ln(axis value)`
/// for every algorithm in `records`.
pub fn fit_exponents(records: &[BenchRecord], axis: Axis) -> Result<BTreeMap<BenchAlgo, f64>> {
    let mut by_algo: BTreeMap<BenchAlgo, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        by_algo.entry(r.algo).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (algo, rs) in by_algo {
        let (value, other): (Coordinate, Coordinate) = match axis {
            Axis::Nt => (|r| r.num_nt, |r| r.sentence_len),
            Axis::Len => (|r| r.sentence_len, |r| r.num_nt),
        };
        let insufficient = |reason: String| Error::InsufficientData {
            what: format!("{algo} exponent"),
            reason,
        };
        if rs.iter().any(|r| other(r) != other(rs[0])) {
            return Err(insufficient("the other axis is not fixed".into()));
        }
        let mut distinct: Vec<usize> = rs.iter().map(|r| value(r)).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 4 {
            return Err(insufficient(format!(
                "{} distinct axis values, need at least 4",
                distinct.len()
            )));
        }
        let points: Vec<(f64, f64)> = rs
            .iter()
            .map(|r| ((value(r) as f64).ln(), (r.wall_time_ns.max(1) as f64).ln()))
            .collect();
        out.insert(algo, least_squares_slope(&points));
    }
    Ok(out)
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Median over seeds of `time(numerator) / time(denominator)` at a given
/// `(num_nt, sentence_len)`.
pub fn median_time_ratio(
    records: &[BenchRecord],
    numerator: BenchAlgo,
    denominator: BenchAlgo,
    num_nt: usize,
    sentence_len: usize,
) -> Option<f64> {
    let at = |algo: BenchAlgo, seed: u64| {
        records.iter().find(|r| {
            r.algo == algo && r.num_nt == num_nt && r.sentence_len == sentence_len && r.seed == seed
        })
    };
    let mut ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.algo == numerator && r.num_nt == num_nt && r.sentence_len == sentence_len)
        .filter_map(|r| {
            at(denominator, r.seed).map(|d| r.wall_time_ns as f64 / d.wall_time_ns.max(1) as f64)
        })
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    Some(if n % 2 == 1 {
        ratios[n / 2]
    } else {
        (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(xs: &[usize], f: impl Fn(f64) -> f64) -> Vec<BenchRecord> {
        xs.iter()
            .map(|&x| BenchRecord {
                algo: BenchAlgo::FastJl,
                num_nt: 16,
                sentence_len: x,
                seed: 0,
                precompute_ns: 0,
                wall_time_ns: f(x as f64) as u64,
                repeats: 5,
                max_rel_diff: 0.0,
            })
            .collect()
    }

    #[test]
    fn cubic_slope_recovered() {
        let records = synthetic(&[8, 16, 32, 64], |x| 7.0 * x.powi(3));
        let slopes = fit_exponents(&records, Axis::Len).unwrap();
        assert!((slopes[&BenchAlgo::FastJl] - 3.0).abs() < 0.05);
    }

    #[test]
    fn too_few_points() {
        let records = synthetic(&[8, 16, 32], |x| x);
        assert!(matches!(
            fit_exponents(&records, Axis::Len),
            Err(Error::InsufficientData { .. })
        ));
        let mut mixed = synthetic(&[8, 16, 32, 64], |x| x);
        mixed[0].num_nt = 8;
        assert!(fit_exponents(&mixed, Axis::Len).is_err());
    }

    #[test]
    fn empty_algo_list() {
        assert!(run_grid(&[2], &[4], &[0], &[]).unwrap().is_empty());
    }

    #[test]
    fn small_grid_agrees_and_writes_csv() {
        let records = run_grid(&[2, 3], &[5], &[1], &BenchAlgo::ALL).unwrap();
        assert_eq!(records.len(), 10);
        for r in &records {
            assert!(r.max_rel_diff < 1e-9, "{r:?}");
            assert_eq!(r.repeats, MIN_REPEATS);
        }
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(text.lines().count(), 1 + 2 * records.len());
        assert!(text.contains("fast_semiring_jl,3,5,1,per_sentence,"));
    }

    #[test]
    fn algo_names_parse() {
        for a in BenchAlgo::ALL {
            assert_eq!(a.name().parse::<BenchAlgo>().unwrap(), a);
        }
        assert_eq!("fastjl".parse::<BenchAlgo>().unwrap(), BenchAlgo::FastJl);
        assert!("earley".parse::<BenchAlgo>().is_err());
    }
}

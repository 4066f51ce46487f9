use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const G1: &str = "S -> S S : 0.4\nS -> 'a' : 0.6\n";

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcfg-prefix"))
        .args(args)
        .output()
        .unwrap()
}

fn score(grammar: &Path, input: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "score",
        "--grammar",
        grammar.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn score_g1_prefixes_and_conditionals() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let input = write(&dir, "in.txt", "a a\n");
    let out = score(&g, &input, &["--algo", "fastjl"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "sentence_id,k,token,prefix_value,conditional_value,status\n\
         1,1,a,1.000000000000,1.000000000000,ok\n\
         1,2,a,0.400000000000,0.400000000000,ok\n"
    );
}

#[test]
fn empty_input_prints_header_only() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let input = write(&dir, "in.txt", "");
    let out = score(&g, &input, &[]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "sentence_id,k,token,prefix_value,conditional_value,status\n"
    );
}

#[test]
fn unknown_token_gives_error_row_and_continues() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let input = write(&dir, "in.txt", "b\na\n");
    let out = score(&g, &input, &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("1,1,b,,,ERROR\n"), "{text}");
    assert!(text.contains("2,1,a,1.000000000000,1.000000000000,ok\n"));
    let only_bad = write(&dir, "bad.txt", "b\n");
    assert_eq!(score(&g, &only_bad, &[]).status.code(), Some(1));
}

#[test]
fn jl_and_fastjl_rows_identical_at_precision_nine() {
    let dir = TempDir::new().unwrap();
    let fixtures = [
        G1,
        "S -> A B : 0.3\nS -> S A : 0.2\nS -> 'a' : 0.5\nA -> A A : 0.25\nA -> 'a' : 0.5\nA -> 'b' : 0.25\nB -> 'b' : 1.0\n",
    ];
    let input = write(&dir, "in.txt", "a\na a a\na b a b\nb a a b a\n");
    for (i, text) in fixtures.iter().enumerate() {
        let g = write(&dir, &format!("g{i}.txt"), text);
        let a = score(&g, &input, &["--algo", "jl", "--precision", "9"]);
        let b = score(&g, &input, &["--algo", "fastjl", "--precision", "9"]);
        assert!(a.status.success());
        assert_eq!(stdout(&a), stdout(&b));
    }
}

#[test]
fn semiring_outputs() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let input = write(&dir, "in.txt", "a a\n");
    let log = stdout(&score(
        &g,
        &input,
        &[
            "--algo",
            "semiring-fastjl",
            "--semiring",
            "log",
            "--precision",
            "6",
        ],
    ));
    assert!(log.contains(&format!("1,2,a,{:.6},", 0.4f64.ln())), "{log}");
    let boolean = stdout(&score(
        &g,
        &input,
        &["--algo", "semiring-fastjl", "--semiring", "boolean"],
    ));
    assert!(boolean.ends_with("1,2,a,true,,ok\n"), "{boolean}");
    let viterbi = stdout(&score(
        &g,
        &input,
        &["--algo", "cky", "--semiring", "viterbi", "--precision", "3"],
    ));
    assert!(viterbi.contains("1,2,a,0.144,,ok"), "{viterbi}");
    let bad = score(&g, &input, &["--algo", "jl", "--semiring", "log"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn parallel_output_keeps_input_order() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let lines: Vec<String> = (1..40).map(|n| vec!["a"; n % 9 + 1].join(" ")).collect();
    let input = write(&dir, "in.txt", &lines.join("\n"));
    let serial = score(&g, &input, &[]);
    let parallel = score(&g, &input, &["--jobs", "4"]);
    assert_eq!(stdout(&serial), stdout(&parallel));
}

#[test]
fn tsv_and_human_formats() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let input = write(&dir, "in.txt", "a\n");
    let tsv = stdout(&score(&g, &input, &["--output", "tsv", "--precision", "2"]));
    assert_eq!(
        tsv,
        "sentence_id\tk\ttoken\tprefix_value\tconditional_value\tstatus\n1\t1\ta\t1.00\t1.00\tok\n"
    );
    let human = stdout(&score(
        &g,
        &input,
        &["--output", "human", "--precision", "2"],
    ));
    assert!(human
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1            1  a"));
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "g1.txt", G1);
    let out = run(&[
        "check",
        "--grammar",
        good.to_str().unwrap(),
        "--left-corner",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("tight: yes"), "{text}");
    assert!(text.contains("1.666666666667"));

    let light = write(&dir, "light.txt", "S -> S S : 0.4\nS -> 'a' : 0.5\n");
    let out = run(&["check", "--grammar", light.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("S sums to 0.9"));

    let out = run(&[
        "check",
        "--grammar",
        dir.path().join("missing.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let broken = write(&dir, "broken.txt", "S -> S S 0.4\n");
    assert_eq!(
        run(&["check", "--grammar", broken.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oracle_brackets_g1() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g1.txt", G1);
    let input = write(&dir, "in.txt", "a a a\n");
    let out = run(&[
        "oracle",
        "--grammar",
        g.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--max-len",
        "600",
        "--precision",
        "6",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("1,3,a,0.069120,0.256000,0.256000,0.256000,ok"),
        "{text}"
    );
}

#[test]
fn bench_writes_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--nt",
        "2",
        "--len",
        "4",
        "--algos",
        "cky,fast_jl",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "algo,num_nt,sentence_len,seed,phase,wall_time_ns,repeats"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("cky,2,4,0,precompute,"));
    assert!(lines[4].starts_with("fast_jl,2,4,0,per_sentence,") && lines[4].ends_with(",5"));
}

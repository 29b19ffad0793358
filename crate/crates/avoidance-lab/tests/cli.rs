use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use avoidance_lab::cli::run;
use avoidance_lab::encodings::{BitString, NatString};
use avoidance_lab::formats::*;
use avoidance_lab::Error;
use num_bigint::BigUint;
use proptest::prelude::*;

static COUNTER: AtomicUsize = AtomicUsize::new(0);

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("avoidance-lab-cli-{}-{}", std::process::id(), COUNTER.fetch_add(1, Ordering::SeqCst)));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn put(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> Result<String, Error> {
    let mut out = Vec::new();
    let mut full = vec!["avoidance-lab"];
    full.extend_from_slice(args);
    run(full, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn s(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn header_names_subcommand() {
    let out = cli(&["series", "classify", "logpow k=1 a=2"]).unwrap();
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), format!("avoidance-lab series classify {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines.next().unwrap(), "class FastGrowing");
}

#[test]
fn series_sum_geometric() {
    let out = cli(&["series", "sum", "geom 2", "-k", "10"]).unwrap();
    assert!(out.contains("bracket [2, 2]"), "{out}");
}

#[test]
fn malformed_expression_is_an_error() {
    assert!(matches!(cli(&["series", "sum", "add n ("]), Err(Error::Parse { .. })));
    assert!(matches!(cli(&["series", "frobnicate", "n"]), Err(Error::Parse { .. })));
    assert!(matches!(cli(&["orderfn", "eval", "n", "-k", "0"]), Err(Error::Parse { .. })));
}

#[test]
fn l2c_round_trip() {
    let input = put("in.nat", "0 1 3 2\n5 7 0 1 9 12\n");
    let bits = scratch("out.bits");
    let back = scratch("back.nat");
    cli(&["transform", "l2c", "--p", "exp2", s(&input), s(&bits)]).unwrap();
    let packed = parse_bits(&std::fs::read_to_string(&bits).unwrap()).unwrap();
    assert_eq!(packed.len(), 45);
    cli(&["transform", "l2c-unpack", "--p", "exp2", s(&bits), s(&back)]).unwrap();
    let got = parse_nats(&std::fs::read_to_string(&back).unwrap()).unwrap();
    let want: Vec<BigUint> = [0u64, 1, 3, 2, 5, 7, 0, 1, 9, 12].iter().map(|&v| BigUint::from(v)).collect();
    assert_eq!(got, want);
}

#[test]
fn spread_prints_worked_offsets() {
    let input = put("x.bits", "1011 0011 1000 1011\n");
    let out_path = scratch("psi.bits");
    let out = cli(&["transform", "spread", "--a", "sqrt", "--stages", "3", s(&input), s(&out_path)]).unwrap();
    assert!(out.contains("m0 4\n"));
    assert!(out.contains("stage 0 mod 2^4 offsets 0 1 2 3\n"));
    assert!(out.contains("stage 1 mod 2^5 offsets 4 5 6 7 8 9\n"));
    assert!(out.contains("stage 2 mod 2^6 offsets 10 11 12 13 14 15 20 21\n"));
    let psi = parse_bits(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(psi.len(), 64);
    assert_eq!(psi.bits()[10], 1);
    assert_eq!(psi.bits()[11], 0);
    let seg = put("seg.bits", &format_bits(&BitString(psi.bits()[3..35].to_vec())));
    let rec = scratch("rec.bits");
    cli(&["transform", "recover", "--offset", "3", "--m", "5", s(&seg), s(&rec)]).unwrap();
    assert_eq!(parse_bits(&std::fs::read_to_string(&rec).unwrap()).unwrap(), BitString::parse("101100").unwrap());
}

#[test]
fn empty_input_gives_empty_output() {
    let e = put("e.bits", "");
    for sub in ["spread", "l2c-unpack"] {
        let o = scratch("o");
        let mut args = vec!["transform", sub, s(&e), s(&o)];
        if sub == "l2c-unpack" {
            args.extend(["--p", "exp2"]);
        }
        cli(&args).unwrap();
        assert_eq!(std::fs::read_to_string(&o).unwrap(), "");
    }
    let en = put("e.nat", "");
    let o = scratch("o.bits");
    cli(&["transform", "l2c", "--p", "exp2", s(&en), s(&o)]).unwrap();
    assert_eq!(std::fs::read_to_string(&o).unwrap(), "");
}

#[test]
fn bushy_commands() {
    let full = put("full.txt", "0 0\n0 1\n1 0\n1 1\n");
    let out = cli(&["bushy", "big", s(&full), "-k", "2"]).unwrap();
    assert!(out.lines().nth(1).unwrap().starts_with("big"));
    let out = cli(&["bushy", "closure", s(&full), "-k", "2", "--check"]).unwrap();
    assert!(out.contains("\n-\n") && out.ends_with("idempotent pass\n"), "{out}");
    let half = put("half.txt", "0 0\n1 1\n");
    let out = cli(&["bushy", "big", s(&half), "-k", "2"]).unwrap();
    assert!(out.lines().nth(1).unwrap().starts_with("small"));
    let f = put("fn.txt", "- : 0 1\n");
    let out = cli(&["bushy", "forcing", "--p2", "2 4 8 16 32 64", "--psi", "0", "--functional", s(&f), "--target", "0:2", "--target", "1:2", "--depth", "6"]).unwrap();
    let stages: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(stages.len(), 3);
    assert!(stages.iter().all(|l| l.starts_with("step4 stage=")));
}

#[test]
fn output_is_deterministic() {
    let a = cli(&["weights", "kc", "--random", "20", "--seed", "9"]).unwrap();
    let b = cli(&["weights", "kc", "--random", "20", "--seed", "9"]).unwrap();
    assert_eq!(a, b);
    let c = cli(&["weights", "kc", "--random", "20", "--seed", "10"]).unwrap();
    assert_ne!(a, c);
}

#[test]
fn machine_and_check_commands() {
    let p = put("p.txt", "INC 0\nINC 0\nHALT\n");
    assert!(cli(&["machine", "run", s(&p), "5"]).unwrap().contains("halted value=7 steps=3"));
    let nu = put("nu.txt", "1\n1 0\n1 1\n");
    assert!(cli(&["machine", "lz", s(&nu)]).unwrap().ends_with("semimeasure matches\n"));
    let x = put("x.nat", "0 1 0 1\n");
    let out = cli(&["check", "avoid", s(&x), "--p", "affine 0 9 n", "-s", "50"]).unwrap();
    assert_eq!(out.lines().count(), 2);
    let w = put("w.bits", "0101");
    assert!(cli(&["check", "shift", s(&w), "--delta", "1/2", "--c", "2"]).unwrap().ends_with("consistent\n"));
}

#[test]
fn format_errors_carry_line_numbers() {
    assert_eq!(parse_bits("0101\n01x1\n"), Err(Error::Parse { pos: 2, msg: "unexpected 'x' in bit file".into() }));
    assert!(matches!(parse_nats("1 2\n# note\n3 -4\n"), Err(Error::Parse { pos: 3, .. })));
    assert!(matches!(parse_words("0 1\n\n2 a\n"), Err(Error::Parse { pos: 3, .. })));
    assert!(matches!(parse_functional("0 1 : 2\n"), Err(Error::Parse { pos: 1, .. })));
    let bad = put("bad.nat", "1\n2\nx\n");
    let o = scratch("o");
    assert!(matches!(cli(&["transform", "reindex", "--a", "1", "--b", "0", s(&bad), s(&o)]), Err(Error::Parse { pos: 3, .. })));
    assert!(matches!(cli(&["transform", "reindex", "--a", "1", "--b", "0", "/nonexistent/x.nat", s(&o)]), Err(Error::Io(_))));
}

#[test]
fn format_examples() {
    assert_eq!(parse_words("-\n0 2\n# c\n1\n").unwrap(), vec![NatString::new(), NatString(vec![0, 2]), NatString(vec![1])]);
    assert_eq!(parse_staged("1\n-\n3 0 1\n").unwrap(), vec![Some((NatString::new(), 1)), None, Some((NatString(vec![0, 1]), 3))]);
    assert_eq!(parse_functional("- : 0 1\n1 2 : 3 4\n").unwrap(), vec![(NatString::new(), 0, 1), (NatString(vec![1, 2]), 3, 4)]);
    assert_eq!(parse_bit_lines("0\n-\n110\n").unwrap(), vec![BitString::parse("0").unwrap(), BitString::new(), BitString::parse("110").unwrap()]);
}

proptest! {
    #[test]
    fn bits_round_trip(bits in proptest::collection::vec(0u8..2, 0..300)) {
        let b = BitString(bits);
        prop_assert_eq!(parse_bits(&format_bits(&b)).unwrap(), b);
    }

    #[test]
    fn words_round_trip(ws in proptest::collection::vec(proptest::collection::vec(0u64..1000, 0..6), 0..20)) {
        let ws: Vec<NatString> = ws.into_iter().map(NatString).collect();
        prop_assert_eq!(parse_words(&format_words(&ws)).unwrap(), ws);
    }

    #[test]
    fn staged_round_trip(steps in proptest::collection::vec(proptest::option::of((proptest::collection::vec(0u64..3, 0..4), 0u64..9)), 0..12)) {
        let steps: Vec<Option<(NatString, u64)>> = steps.into_iter().map(|s| s.map(|(w, n)| (NatString(w), n))).collect();
        prop_assert_eq!(parse_staged(&format_staged(&steps)).unwrap(), steps);
    }

    #[test]
    fn nats_round_trip(xs in proptest::collection::vec(any::<u64>(), 0..50)) {
        let xs: Vec<BigUint> = xs.into_iter().map(BigUint::from).collect();
        prop_assert_eq!(parse_nats(&format_nats(&xs)).unwrap(), xs);
    }
}

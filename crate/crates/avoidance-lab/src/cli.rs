//! Batch front end. Every report starts with `avoidance-lab <cmd> <version>`;
//! errors are returned to the caller, which prints them on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bushy::{closure, forcing_step4, is_big, is_closed, BadSet, MockFunctional, Step4Target};
use crate::encodings::{BoundFamily, NatString};
use crate::error::{Error, Result};
use crate::formats::*;
use crate::machine::{lz_build, machine_semimeasure, Program, Psi, Registry, StagedSemimeasure};
use crate::orderfn::{check_convex, generalized_inverse, parse, OrderFn};
use crate::reductions::*;
use crate::series::{analyze, classify, sum_reciprocal};
use crate::weights::{dwt, kc_allocate, kraft_check, pwt, sparse_decode, sparse_encode, Weight, WeightedSet};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "avoidance-lab", version, about = "Exact workbench for avoidance, partial randomness and bushy forcing")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub cmd: Cmd,
}

/// Shared numeric knobs.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Precision: brackets of width at most 2^-k.
    #[arg(short = 'k', global = true, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    /// Horizon.
    #[arg(short = 'N', global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
    /// Step budget.
    #[arg(short = 's', global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Growth class or reciprocal-sum bracket.
    Series {
        #[arg(value_parser = ["classify", "sum"])]
        mode: String,
        expr: String,
        #[arg(long, default_value_t = 0)]
        from: u64,
    },
    /// Order-function expressions.
    #[command(subcommand)]
    Orderfn(OrderfnCmd),
    /// Weights and prefix codes.
    #[command(subcommand)]
    Weights(WeightsCmd),
    /// Counter programs and machine constructions.
    #[command(subcommand)]
    Machine(MachineCmd),
    /// Bad sets and bushy forcing.
    #[command(subcommand)]
    Bushy(BushyCmd),
    /// Sequence transforms between files.
    #[command(subcommand)]
    Transform(TransformCmd),
    /// Finite avoidance and complexity checks.
    #[command(subcommand)]
    Check(CheckCmd),
}

#[derive(Subcommand, Debug)]
pub enum OrderfnCmd {
    /// Values at 0..N.
    Eval { expr: String },
    /// Least n with f(n) >= x.
    Inverse { expr: String, x: String },
    /// Convexity on [0, N).
    Convex { expr: String },
}

#[derive(Subcommand, Debug)]
pub enum WeightsCmd {
    /// Direct weight of a list of bit strings.
    Dwt {
        file: PathBuf,
        /// Weight exponent as a function of length (default: the length).
        #[arg(long)]
        f: Option<String>,
    },
    /// Prefix-free weight.
    Pwt {
        file: PathBuf,
        #[arg(long)]
        f: Option<String>,
    },
    /// Prefix-freeness and Kraft sum of a code list.
    Kraft { file: PathBuf },
    /// Online allocation for the lengths in a .nat file, or for `--random`
    /// admissible lengths drawn from the seed.
    Kc {
        file: Option<PathBuf>,
        #[arg(long)]
        random: Option<usize>,
    },
    /// Sparse-string code.
    Sparse {
        file: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        alpha: String,
        /// Decode a code of a string of this length instead.
        #[arg(long)]
        decode: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MachineCmd {
    /// Run a counter program.
    Run { program: PathBuf, x: BigUint },
    /// K_s of a .bits string against the program index space.
    Kbound { bits: PathBuf },
    /// Levin-Zvonkin construction for a staged semimeasure file.
    Lz {
        file: PathBuf,
        /// Branching bounds; the last entry repeats.
        #[arg(long, default_value = "2")]
        h: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum BushyCmd {
    /// Whether the bad set is k-big above a stem.
    Big {
        file: PathBuf,
        #[arg(long, default_value = "2")]
        h: String,
        #[arg(long, default_value = "-")]
        stem: String,
    },
    /// The k-closure.
    Closure {
        file: PathBuf,
        #[arg(long, default_value = "2")]
        h: String,
        /// Also check idempotence.
        #[arg(long)]
        check: bool,
    },
    /// Replay the alternation of agreements and absorptions.
    Forcing {
        #[arg(long)]
        p2: String,
        /// ψ values, `-` for divergent.
        #[arg(long, default_value = "")]
        psi: String,
        #[arg(long)]
        functional: Option<PathBuf>,
        /// Targets `theta:qu`.
        #[arg(long)]
        target: Vec<String>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum TransformCmd {
    /// Complex sequence to a bounded avoiding sequence.
    C2l {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        f: String,
        #[arg(long)]
        h: String,
    },
    /// Pack a bounded sequence into bits.
    L2c {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        p: String,
    },
    /// Inverse of l2c.
    #[command(name = "l2c-unpack")]
    L2cUnpack {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        p: String,
    },
    /// Spread a sequence over arithmetic progressions.
    Spread {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "sqrt", value_parser = ["sqrt", "adjusted"])]
        a: String,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        #[arg(long, default_value_t = 0)]
        fill: u8,
    },
    /// Read a prefix back from a window of a spread sequence.
    Recover {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "sqrt", value_parser = ["sqrt", "adjusted"])]
        a: String,
        #[arg(long, default_value_t = 3)]
        stages: usize,
        /// Window start modulo 2^m.
        #[arg(long = "offset")]
        k_mod: u64,
        #[arg(long)]
        m: u32,
    },
    /// Affine reindexing of a .nat sequence.
    Reindex {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        push: bool,
        #[arg(long, default_value_t = BigUint::from(0u32))]
        fill: BigUint,
    },
}

#[derive(Subcommand, Debug)]
pub enum CheckCmd {
    /// Avoidance of ψ and the bound p on a .nat prefix.
    Avoid {
        file: PathBuf,
        #[arg(long)]
        p: String,
        /// `lin` or a program index.
        #[arg(long, default_value = "lin")]
        psi: String,
    },
    /// K(τ) >= δ|τ| − c on every substring, against K_s.
    Shift {
        file: PathBuf,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        c: u64,
        /// Program files to locate in the index space.
        #[arg(long)]
        program: Vec<PathBuf>,
    },
}

fn expr(s: &str) -> Result<OrderFn> {
    parse(s)
}

fn rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse { pos: 0, msg: format!("{s:?} is not a rational") };
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (num_bigint::BigInt, num_bigint::BigInt) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0.into() {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

/// `"2 3 4"`: `h(0)=2, h(1)=3, h(n)=4` for `n ≥ 2`.
pub fn family(s: &str) -> Result<BoundFamily> {
    let v: Vec<u64> = s.split_whitespace().map(|t| t.parse().map_err(|_| Error::Parse { pos: 0, msg: format!("{t:?} is not a bound") })).collect::<Result<_>>()?;
    match v.split_last() {
        Some((&last, head)) if last >= 1 && head.iter().all(|&x| x >= 1) => Ok(BoundFamily::table(head, BoundFamily::constant(last))),
        _ => Err(Error::Domain(format!("bad bound list {s:?}"))),
    }
}

fn coefficients(name: &str) -> Coefficients {
    let a = Coefficients::ceil_sqrt();
    if name == "adjusted" {
        a.adjusted()
    } else {
        a
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn read(p: &Path) -> Result<String> {
    read_file(p)
}

/// Parses `args` (program name first) and writes the report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            return write!(out, "{e}").map_err(io);
        }
        Err(e) => return Err(Error::Parse { pos: 0, msg: e.to_string().trim().to_string() }),
    };
    execute(&cli, out)
}

fn name(cmd: &Cmd) -> String {
    let sub = match cmd {
        Cmd::Series { mode, .. } => return format!("series {mode}"),
        Cmd::Orderfn(c) => match c {
            OrderfnCmd::Eval { .. } => "orderfn eval",
            OrderfnCmd::Inverse { .. } => "orderfn inverse",
            OrderfnCmd::Convex { .. } => "orderfn convex",
        },
        Cmd::Weights(c) => match c {
            WeightsCmd::Dwt { .. } => "weights dwt",
            WeightsCmd::Pwt { .. } => "weights pwt",
            WeightsCmd::Kraft { .. } => "weights kraft",
            WeightsCmd::Kc { .. } => "weights kc",
            WeightsCmd::Sparse { .. } => "weights sparse",
        },
        Cmd::Machine(c) => match c {
            MachineCmd::Run { .. } => "machine run",
            MachineCmd::Kbound { .. } => "machine kbound",
            MachineCmd::Lz { .. } => "machine lz",
        },
        Cmd::Bushy(c) => match c {
            BushyCmd::Big { .. } => "bushy big",
            BushyCmd::Closure { .. } => "bushy closure",
            BushyCmd::Forcing { .. } => "bushy forcing",
        },
        Cmd::Transform(c) => match c {
            TransformCmd::C2l { .. } => "transform c2l",
            TransformCmd::L2c { .. } => "transform l2c",
            TransformCmd::L2cUnpack { .. } => "transform l2c-unpack",
            TransformCmd::Spread { .. } => "transform spread",
            TransformCmd::Recover { .. } => "transform recover",
            TransformCmd::Reindex { .. } => "transform reindex",
        },
        Cmd::Check(c) => match c {
            CheckCmd::Avoid { .. } => "check avoid",
            CheckCmd::Shift { .. } => "check shift",
        },
    };
    sub.to_string()
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut body = String::new();
    let cfg = &cli.config;
    match &cli.cmd {
        Cmd::Series { mode, expr: e, from } => {
            let p = expr(e)?;
            if mode == "classify" {
                let c = classify(&p);
                body += &format!("class {:?}\ncertificate {}\n", c.tag, c.certificate);
            } else {
                let iv = sum_reciprocal(&p, *from, cfg.k)?;
                let r = analyze(&p, *from, cfg.k).ok();
                body += &format!("sum 1/({p}) from {from}\nbracket {iv}\n");
                if let Some(r) = r {
                    body += &format!("method {:?}\n", r.method);
                }
            }
        }
        Cmd::Orderfn(c) => body += &orderfn_cmd(c, cfg)?,
        Cmd::Weights(c) => body += &weights_cmd(c, cfg)?,
        Cmd::Machine(c) => body += &machine_cmd(c, cfg)?,
        Cmd::Bushy(c) => body += &bushy_cmd(c, cfg)?,
        Cmd::Transform(c) => body += &transform_cmd(c, cfg)?,
        Cmd::Check(c) => body += &check_cmd(c, cfg)?,
    }
    write!(out, "avoidance-lab {} {VERSION}\n{body}", name(&cli.cmd)).map_err(io)
}

fn orderfn_cmd(c: &OrderfnCmd, cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    match c {
        OrderfnCmd::Eval { expr: e } => {
            let f = expr(e)?;
            for n in 0..cfg.horizon.unwrap_or(16) {
                let at = BigUint::from(n);
                match f.exact_at(&at)? {
                    Some(q) => s += &format!("{n} {q}\n"),
                    None => s += &format!("{n} {}\n", f.eval_at(&at, cfg.k)?),
                }
            }
        }
        OrderfnCmd::Inverse { expr: e, x } => {
            let f = expr(e)?;
            s += &format!("{}\n", generalized_inverse(&f, &rational(x)?)?);
        }
        OrderfnCmd::Convex { expr: e } => {
            let v = check_convex(&expr(e)?, cfg.horizon.unwrap_or(64))?;
            s += &format!("{v:?}\n");
        }
    }
    Ok(s)
}

fn weight(f: &Option<String>) -> Result<Weight> {
    Ok(match f {
        None => Weight::Length,
        Some(e) => Weight::OfLength(expr(e)?),
    })
}

fn weights_cmd(c: &WeightsCmd, cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    match c {
        WeightsCmd::Dwt { file, f } | WeightsCmd::Pwt { file, f } => {
            let set = WeightedSet::new(parse_bit_lines(&read(file)?)?, weight(f)?);
            let iv = if matches!(c, WeightsCmd::Dwt { .. }) { dwt(&set, cfg.k)? } else { pwt(&set, cfg.k)? };
            s += &format!("weight {iv}\n");
        }
        WeightsCmd::Kraft { file } => {
            s += &format!("{:?}\n", kraft_check(&parse_bit_lines(&read(file)?)?));
        }
        WeightsCmd::Kc { file, random } => {
            let lengths: Vec<usize> = match (file, random) {
                (Some(f), None) => parse_nats(&read(f)?)?.iter().map(|v| v.to_usize().ok_or_else(|| Error::Domain(format!("length {v} too large")))).collect::<Result<_>>()?,
                (None, Some(m)) => random_lengths(*m, cfg.seed),
                _ => return Err(Error::Precondition("give a length file or --random".into())),
            };
            let alloc = kc_allocate(lengths)?;
            for (d, code) in alloc.lengths.iter().zip(&alloc.codes) {
                s += &format!("{d} {code}\n");
            }
        }
        WeightsCmd::Sparse { file, q, alpha, decode } => {
            let bits = parse_bits(&read(file)?)?;
            let alpha = rational(alpha)?;
            match decode {
                Some(p) => s += &format_bits(&sparse_decode(&bits, *p, *q, &alpha)?),
                None => match sparse_encode(&bits, *q, &alpha)? {
                    Some(code) => s += &format_bits(&code),
                    None => s += "not sparse\n",
                },
            }
        }
    }
    Ok(s)
}

/// Lengths `≤ 16` whose Kraft sum stays at most one.
pub fn random_lengths(m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = 0u64;
    let mut out = Vec::new();
    while out.len() < m {
        let d = rng.gen_range(1..=16usize);
        let cost = 1u64 << (16 - d);
        if used + cost > 1 << 16 {
            if used == 1 << 16 {
                break;
            }
            continue;
        }
        used += cost;
        out.push(d);
    }
    out
}

fn machine_cmd(c: &MachineCmd, cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    match c {
        MachineCmd::Run { program, x } => {
            let p = Program::parse(&read(program)?)?;
            match p.run(x, cfg.budget) {
                Some((v, t)) => s += &format!("halted value={v} steps={t}\n"),
                None => s += &format!("no halt within {} steps\n", cfg.budget),
            }
        }
        MachineCmd::Kbound { bits } => {
            let sigma = parse_bits(&read(bits)?)?;
            match Registry::new().k_bound(&sigma, cfg.budget) {
                Some(k) => s += &format!("K_s = {k}\n"),
                None => s += "K_s = inf\n",
            }
        }
        MachineCmd::Lz { file, h } => {
            let nu = StagedSemimeasure::new(family(h)?, parse_staged(&read(file)?)?);
            let stages = nu.stages();
            let m = lz_build(&nu, stages)?;
            for (tau, sigma, st) in &m.pairs {
                s += &format!("stage {st} {tau} -> {sigma}\n");
            }
            let table = nu.table();
            let last = &table[stages];
            let ok = last.iter().all(|(w, v)| &machine_semimeasure(&m, w) == v);
            s += &format!("semimeasure {}\n", if ok { "matches" } else { "differs" });
        }
    }
    Ok(s)
}

fn word(s: &str) -> Result<NatString> {
    Ok(parse_words(s)?.into_iter().next().unwrap_or_default())
}

fn bushy_cmd(c: &BushyCmd, cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    match c {
        BushyCmd::Big { file, h, stem } => {
            let h = family(h)?;
            let b = BadSet::new(parse_words(&read(file)?)?, &h)?;
            let stem = word(stem)?;
            let verdict = if is_big(&b, &stem, cfg.k as u64) { "big" } else { "small" };
            s += &format!("{verdict} k={} stem={stem}\n", cfg.k);
        }
        BushyCmd::Closure { file, h, check } => {
            let h = family(h)?;
            let b = BadSet::new(parse_words(&read(file)?)?, &h)?;
            let cl = closure(&b, cfg.k as u64);
            s += &format_words(cl.strings());
            if *check {
                s += &format!("idempotent {}\n", if is_closed(&cl, cfg.k as u64) { "pass" } else { "fail" });
            }
        }
        BushyCmd::Forcing { p2, psi, functional, target, depth } => {
            let p2 = family(p2)?;
            let psi: Vec<Option<u64>> = psi.split_whitespace().map(|t| if t == "-" { Ok(None) } else { t.parse().map(Some).map_err(|_| Error::Parse { pos: 0, msg: format!("bad psi value {t:?}") }) }).collect::<Result<_>>()?;
            let gamma = match functional {
                Some(f) => MockFunctional::new(parse_functional(&read(f)?)?)?,
                None => MockFunctional::default(),
            };
            let targets = target
                .iter()
                .map(|t| {
                    let (a, b) = t.split_once(':').ok_or_else(|| Error::Parse { pos: 0, msg: format!("target {t:?} is not theta:qu") })?;
                    let num = |x: &str| x.parse::<u64>().map_err(|_| Error::Parse { pos: 0, msg: format!("bad target {t:?}") });
                    Ok(Step4Target { gamma: gamma.clone(), theta: num(a)?, qu: num(b)? })
                })
                .collect::<Result<Vec<_>>>()?;
            for r in forcing_step4(&p2, &psi, &targets, *depth)? {
                s += &format!("{r}\n");
            }
        }
    }
    Ok(s)
}

fn transform_cmd(c: &TransformCmd, cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    match c {
        TransformCmd::C2l { input, output, f, h } => {
            let x = parse_bits(&read(input)?)?;
            let (f, h) = (expr(f)?, expr(h)?);
            let n = match cfg.horizon {
                Some(n) => n,
                None => (0..=x.len() as u64).take_while(|&i| inverse_at(&f, &h, i).is_ok_and(|l| l <= x.len() as u64)).count() as u64,
            };
            let y = complex_to_lua(&x, &f, &h, n)?;
            write_file(output, &format_nats(&y))?;
            s += &format!("wrote {} values\n", y.len());
        }
        TransformCmd::L2c { input, output, p } => {
            let x = parse_nats(&read(input)?)?;
            let n = cfg.horizon.unwrap_or(x.len() as u64);
            let y = lua_to_complex(&x, &expr(p)?, n)?;
            write_file(output, &format_bits(&y))?;
            s += &format!("wrote {} bits\n", y.len());
        }
        TransformCmd::L2cUnpack { input, output, p } => {
            let y = parse_bits(&read(input)?)?;
            let p = expr(p)?;
            let n = match cfg.horizon {
                Some(n) => n,
                None if y.is_empty() => 0,
                None => pack_offsets(&p, y.len() as u64 + 1)?.iter().rposition(|&q| q <= y.len() as u64).unwrap() as u64,
            };
            let x = lua_unpack(&y, &p, n)?;
            write_file(output, &format_nats(&x))?;
            s += &format!("wrote {} values\n", x.len());
        }
        TransformCmd::Spread { input, output, a, stages, fill } => {
            let x = parse_bits(&read(input)?)?;
            let plan = rumyantsev_plan(&coefficients(a), *stages)?;
            s += &plan_trace(&plan);
            let n = if x.is_empty() { 0 } else { cfg.horizon.unwrap_or(1 << plan.stages.last().map_or(0, |st| st.exp)) };
            let y = rumyantsev_apply(&plan, &x, n, Some(*fill))?;
            write_file(output, &format_bits(&y))?;
            s += &format!("wrote {} bits\n", y.len());
        }
        TransformCmd::Recover { input, output, a, stages, k_mod, m } => {
            let seg = parse_bits(&read(input)?)?;
            let plan = rumyantsev_plan(&coefficients(a), *stages)?;
            let x = rumyantsev_recover(&plan, &seg, *k_mod, *m)?;
            write_file(output, &format_bits(&x))?;
            s += &format!("wrote {} bits\n", x.len());
        }
        TransformCmd::Reindex { input, output, a, b, push, fill } => {
            let x = parse_nats(&read(input)?)?;
            let y = if *push { affine_pushforward(&x, *a, *b, fill.clone())? } else { affine_pullback(&x, *a, *b)? };
            write_file(output, &format_nats(&y))?;
            s += &format!("wrote {} values\n", y.len());
        }
    }
    Ok(s)
}

/// One line per stage: `stage s mod 2^e offsets o1 o2 …`.
pub fn plan_trace(plan: &ProgressionMap) -> String {
    let mut s = format!("m0 {}\n", plan.m0);
    for (i, st) in plan.stages.iter().enumerate() {
        let offs: Vec<String> = st.offsets.iter().map(u64::to_string).collect();
        s += &format!("stage {i} mod 2^{} offsets {}\n", st.exp, offs.join(" "));
    }
    s + &format!("coverage {}\n", plan.coverage(plan.stages.len()))
}

fn check_cmd(c: &CheckCmd, cfg: &RunConfig) -> Result<String> {
    let mut s = String::new();
    match c {
        CheckCmd::Avoid { file, p, psi } => {
            let x: Vec<u64> = parse_nats(&read(file)?)?.iter().map(|v| v.to_u64().ok_or_else(|| Error::Domain(format!("value {v} too large")))).collect::<Result<_>>()?;
            let psi = if psi == "lin" { Psi::LinUniversal } else { Psi::Registered(psi.parse().map_err(|_| Error::Parse { pos: 0, msg: format!("bad psi {psi:?}") })?) };
            let n = cfg.horizon.unwrap_or(x.len() as u64);
            let r = Registry::new().avoidance_check(&x, &psi, &expr(p)?, n, cfg.budget)?;
            s += &format!("{:?} unresolved={}\n", r.verdict, r.unresolved);
        }
        CheckCmd::Shift { file, delta, c, program } => {
            let w = parse_bits(&read(file)?)?;
            let reg = Registry::new();
            for p in program {
                let prog = Program::parse(&read(p)?)?;
                let idx = prog.index()?;
                s += &format!("program {} index {idx}\n", p.display());
            }
            match shift_complex_check(&w, &rational(delta)?, *c, &reg, cfg.budget) {
                ShiftVerdict::Violated { start, tau, k } => s += &format!("violated at {start} tau={tau} K_s={k}\n"),
                ShiftVerdict::Unresolved(open) => s += &format!("unresolved {} substrings\n", open.len()),
                ShiftVerdict::Consistent => s += "consistent\n",
            }
        }
    }
    Ok(s)
}

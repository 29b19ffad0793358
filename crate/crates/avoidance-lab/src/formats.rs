//! Plain-text fixtures.
//!
//! * `.bits`: ASCII `0`/`1`, whitespace ignored.
//! * `.nat`: whitespace-separated decimals.
//! * word files (bad sets, code lists): one word per line, letters separated
//!   by spaces; a line holding only `-` is the empty word.
//! * staged semimeasure: one line per stage, `n w0 w1 …` for an increment of
//!   `n/2^{s+1}` at `⟨w0, w1, …⟩`, or `-` for a stage with no change.
//! * functional tables: `w0 w1 … : x v` for `Γ^{⟨w…⟩}(x) = v`.
//!
//! `#` starts a comment in every format except `.bits`. Error positions are
//! 1-based line numbers.

use std::fs;
use std::path::Path;

use num_bigint::BigUint;

use crate::encodings::{BitString, NatString};
use crate::error::{Error, Result};

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { pos: line, msg: msg.into() })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim())).filter(|(_, l)| !l.is_empty())
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_bits(text: &str) -> Result<BitString> {
    let mut out = BitString::new();
    for (ln, line) in text.lines().enumerate() {
        for c in line.chars() {
            match c {
                '0' => out.push(0),
                '1' => out.push(1),
                c if c.is_whitespace() => {}
                c => return perr(ln + 1, format!("unexpected {c:?} in bit file")),
            }
        }
    }
    Ok(out)
}

/// 64 bits per line.
pub fn format_bits(b: &BitString) -> String {
    let mut s = String::new();
    for chunk in b.bits().chunks(64) {
        s.extend(chunk.iter().map(|&x| if x == 1 { '1' } else { '0' }));
        s.push('\n');
    }
    s
}

pub fn parse_nats(text: &str) -> Result<Vec<BigUint>> {
    let mut out = Vec::new();
    for (ln, line) in lines(text) {
        for tok in line.split_whitespace() {
            match tok.parse::<BigUint>() {
                Ok(v) => out.push(v),
                Err(_) => return perr(ln, format!("{tok:?} is not a natural number")),
            }
        }
    }
    Ok(out)
}

pub fn format_nats(xs: &[BigUint]) -> String {
    xs.iter().map(|x| format!("{x}\n")).collect()
}

fn parse_word(ln: usize, line: &str) -> Result<NatString> {
    if line == "-" {
        return Ok(NatString::new());
    }
    line.split_whitespace()
        .map(|t| t.parse::<u64>().or_else(|_| perr(ln, format!("{t:?} is not a letter"))))
        .collect::<Result<Vec<u64>>>()
        .map(NatString)
}

fn format_word(w: &NatString) -> String {
    if w.is_empty() {
        "-".into()
    } else {
        w.0.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
    }
}

pub fn parse_words(text: &str) -> Result<Vec<NatString>> {
    lines(text).map(|(ln, l)| parse_word(ln, l)).collect()
}

pub fn format_words<'a>(ws: impl IntoIterator<Item = &'a NatString>) -> String {
    ws.into_iter().map(|w| format_word(w) + "\n").collect()
}

/// Binary strings, one per line; `-` is the empty string.
pub fn parse_bit_lines(text: &str) -> Result<Vec<BitString>> {
    lines(text).map(|(ln, l)| if l == "-" { Ok(BitString::new()) } else { parse_bits(l).map_err(|_| Error::Parse { pos: ln, msg: format!("{l:?} is not a bit string") }) }).collect()
}

pub type Increments = Vec<Option<(NatString, u64)>>;

pub fn parse_staged(text: &str) -> Result<Increments> {
    lines(text)
        .map(|(ln, l)| {
            if l == "-" {
                return Ok(None);
            }
            let mut it = l.splitn(2, char::is_whitespace);
            let n = it.next().unwrap();
            let n = n.parse::<u64>().or_else(|_| perr(ln, format!("{n:?} is not an increment")))?;
            let w = it.next().map(str::trim).unwrap_or("-");
            Ok(Some((parse_word(ln, if w.is_empty() { "-" } else { w })?, n)))
        })
        .collect()
}

pub fn format_staged(steps: &[Option<(NatString, u64)>]) -> String {
    steps
        .iter()
        .map(|s| match s {
            None => "-\n".to_string(),
            Some((w, n)) if w.is_empty() => format!("{n}\n"),
            Some((w, n)) => format!("{n} {}\n", format_word(w)),
        })
        .collect()
}

pub fn parse_functional(text: &str) -> Result<Vec<(NatString, u64, u64)>> {
    lines(text)
        .map(|(ln, l)| {
            let (w, rest) = l.split_once(':').ok_or_else(|| Error::Parse { pos: ln, msg: "expected `word : x v`".into() })?;
            let w = w.trim();
            let word = parse_word(ln, if w.is_empty() { "-" } else { w })?;
            let nums: Vec<u64> = rest.split_whitespace().map(|t| t.parse().or_else(|_| perr(ln, format!("{t:?} is not a number")))).collect::<Result<_>>()?;
            match nums[..] {
                [x, v] => Ok((word, x, v)),
                _ => perr(ln, "expected two numbers after `:`"),
            }
        })
        .collect()
}

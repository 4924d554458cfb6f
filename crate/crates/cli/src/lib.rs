//! Argument handling and output formatting for the `rootcount` binary.

use std::fmt;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value};

use rootcount_core::{
    brute_force_count, count_roots_with, poincare_truncated, CountOptions, CountResult, Engine,
    Error, OracleBudget, PieceStatus, PrimePowerModulus,
};

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rootcount",
    version,
    about = "Count roots of integer polynomials modulo prime powers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print N_t(f), the number of roots of f in Z/(p^t).
    Count(CountArgs),
    /// Print N_0(f), ..., N_T(f).
    Series(SeriesArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub prime: String,
    #[arg(long)]
    pub exp: u32,
    /// Coefficients "c0,c1,..." (constant first) or an expression like "x^3+2*x-7".
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    #[arg(long)]
    pub json: bool,
    /// Include one record per evaluated tree piece.
    #[arg(long)]
    pub trace: bool,
    /// Check the count against exhaustive enumeration when p^t is small enough.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    pub force_engine: EngineArg,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[arg(long)]
    pub prime: String,
    #[arg(long)]
    pub max_exp: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Tree,
    Smallp,
    Auto,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Tree => Engine::Tree,
            EngineArg::Smallp => Engine::SmallPrime,
            EngineArg::Auto => Engine::Auto,
        }
    }
}

/// What the binary should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: 0,
        }
    }

    fn invalid(message: impl fmt::Display) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
            code: EXIT_INVALID,
        }
    }
}

// ----- polynomial input -----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based character column.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at column {}: {}",
            self.position, self.message
        )
    }
}

impl std::error::Error for ParseError {}

/// Integer polynomial read from the command line, coefficients constant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialInput {
    pub coefficients: Vec<BigInt>,
}

impl PolynomialInput {
    /// Accepts `"c0,c1,..."` or a sum of terms `[c][*]x[^e]` and constants.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let coefficients = if text.contains(',') {
            parse_list(text)?
        } else {
            parse_expression(text)?
        };
        Ok(PolynomialInput { coefficients })
    }
}

fn err(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        position,
        message: message.into(),
    }
}

fn parse_list(text: &str) -> Result<Vec<BigInt>, ParseError> {
    let mut out = Vec::new();
    let mut start = 0;
    for field in text.split(',') {
        let trimmed = field.trim();
        let offset = start + field.len() - field.trim_start().len();
        if trimmed.is_empty() {
            return Err(err(offset + 1, "expected an integer coefficient"));
        }
        let value: BigInt = trimmed.parse().map_err(|_| {
            let bad = trimmed
                .char_indices()
                .find(|&(i, c)| !(c.is_ascii_digit() || (i == 0 && (c == '-' || c == '+'))))
                .map_or(trimmed.len(), |(i, _)| i);
            err(offset + bad + 1, format!("invalid integer '{trimmed}'"))
        })?;
        out.push(value);
        start += field.len() + 1;
    }
    Ok(out)
}

struct Lexer<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    text: &'a str,
}

impl Lexer<'_> {
    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn number(&mut self) -> Option<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        let from = self.chars[start].0;
        let to = self
            .chars
            .get(self.pos)
            .map_or(self.text.len(), |&(i, _)| i);
        Some(self.text[from..to].parse().expect("digits"))
    }
}

fn parse_expression(text: &str) -> Result<Vec<BigInt>, ParseError> {
    let mut lx = Lexer {
        chars: text.char_indices().collect(),
        pos: 0,
        text,
    };
    let mut coeffs: Vec<BigInt> = Vec::new();
    let mut first = true;
    loop {
        lx.skip_ws();
        let mut sign = BigInt::from(1);
        match lx.peek() {
            Some('+') => lx.pos += 1,
            Some('-') => {
                lx.pos += 1;
                sign = BigInt::from(-1);
            }
            None if first => return Err(err(lx.column(), "empty polynomial")),
            Some(c) if !first => {
                return Err(err(
                    lx.column(),
                    format!("expected '+' or '-', found '{c}'"),
                ))
            }
            _ => {}
        }
        first = false;
        lx.skip_ws();
        let coeff = lx.number();
        lx.skip_ws();
        let mut exponent = 0usize;
        let mut has_star = false;
        if coeff.is_some() && lx.peek() == Some('*') {
            lx.pos += 1;
            has_star = true;
            lx.skip_ws();
        }
        if lx.peek() == Some('x') {
            lx.pos += 1;
            exponent = 1;
            lx.skip_ws();
            if lx.peek() == Some('^') {
                lx.pos += 1;
                lx.skip_ws();
                let col = lx.column();
                let e = lx
                    .number()
                    .ok_or_else(|| err(col, "expected an exponent"))?;
                exponent = e
                    .try_into()
                    .ok()
                    .filter(|&e: &usize| e <= 1_000_000)
                    .ok_or_else(|| err(col, "exponent too large"))?;
            }
        } else if has_star {
            return Err(err(lx.column(), "expected 'x' after '*'"));
        } else if coeff.is_none() {
            return Err(match lx.peek() {
                Some(c) => err(lx.column(), format!("unexpected character '{c}'")),
                None => err(lx.column(), "expected a term"),
            });
        }
        let value = sign * coeff.unwrap_or_else(|| BigInt::from(1));
        if coeffs.len() <= exponent {
            coeffs.resize(exponent + 1, BigInt::zero());
        }
        coeffs[exponent] += value;
        lx.skip_ws();
        if lx.peek().is_none() {
            return Ok(coeffs);
        }
    }
}

// ----- commands ---------------------------------------------------------------------

fn parse_modulus(prime: &str, exp: u32) -> Result<PrimePowerModulus, String> {
    let p: BigUint = prime
        .trim()
        .parse()
        .map_err(|_| format!("invalid prime '{prime}'"))?;
    PrimePowerModulus::new(p, exp).map_err(|e| e.to_string())
}

fn needs_normalization(f: &[BigInt], modulus: &PrimePowerModulus) -> bool {
    let q = BigInt::from(modulus.q().clone());
    f.iter().any(|c| c.is_negative() || *c >= q)
}

fn status_json(status: &PieceStatus) -> (Value, String) {
    match status {
        PieceStatus::TerminalCount(c) => (json!("count"), c.to_string()),
        PieceStatus::TerminalEmpty => (json!("empty"), "0".into()),
        PieceStatus::Expanded { count, .. } => (json!("expanded"), count.to_string()),
    }
}

fn stats_json(r: &CountResult, normalized: bool, verified: Option<&str>) -> Value {
    let mut stats = Map::new();
    stats.insert("method".into(), json!(r.method.to_string()));
    stats.insert("nodes".into(), json!(r.stats.nodes));
    stats.insert("max_level".into(), json!(r.stats.max_level));
    stats.insert("splits".into(), json!(r.stats.splits));
    stats.insert("content_valuation".into(), json!(r.stats.content_valuation));
    stats.insert(
        "elapsed_us".into(),
        json!(r.stats.elapsed.as_micros() as u64),
    );
    if normalized {
        stats.insert("notice".into(), json!("coefficients reduced modulo p^t"));
    }
    if let Some(v) = verified {
        stats.insert("verify".into(), json!(v));
    }
    Value::Object(stats)
}

fn trace_json(r: &CountResult) -> Value {
    let nodes = r
        .trace
        .iter()
        .map(|rec| {
            let (status, contribution) = status_json(&rec.status);
            let mut children = 0;
            if let PieceStatus::Expanded { children: c, .. } = rec.status {
                children = c;
            }
            json!({
                "node": rec.node,
                "parent": rec.parent,
                "level": rec.level,
                "ideal": rec.ideal,
                "degrees": rec.degrees,
                "s": rec.s,
                "status": status,
                "contribution": contribution,
                "children": children,
            })
        })
        .collect();
    Value::Array(nodes)
}

fn leaves_json(r: &CountResult) -> Value {
    Value::Array(
        r.per_leaf
            .iter()
            .map(|l| json!({"descriptor": l.descriptor, "count": l.count.to_string()}))
            .collect(),
    )
}

pub fn cmd_count(args: &CountArgs) -> Outcome {
    let modulus = match parse_modulus(&args.prime, args.exp) {
        Ok(m) => m,
        Err(e) => return Outcome::invalid(e),
    };
    let f = match PolynomialInput::parse(&args.poly) {
        Ok(f) => f.coefficients,
        Err(e) => return Outcome::invalid(e),
    };
    let options = CountOptions {
        engine: args.force_engine.into(),
        trace: args.trace,
    };
    let result = match count_roots_with(&f, &modulus, options) {
        Ok(r) => r,
        Err(
            e @ (Error::SmallPrimeOnly { .. } | Error::NotPrime(_) | Error::InvalidExponent(_)),
        ) => return Outcome::invalid(e),
        Err(e) => {
            return Outcome {
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
                code: 1,
            }
        }
    };

    let mut stderr = String::new();
    let mut verified = None;
    if args.verify {
        match brute_force_count(&f, &modulus, OracleBudget::default()) {
            Ok(n) if n == result.total => verified = Some("ok"),
            Ok(n) => {
                return Outcome {
                    stdout: String::new(),
                    stderr: format!(
                        "verification failed: engine counted {}, enumeration found {n}\n",
                        result.total
                    ),
                    code: EXIT_MISMATCH,
                }
            }
            Err(e) => {
                stderr.push_str(&format!("verification skipped: {e}\n"));
                verified = Some("skipped");
            }
        }
    }
    let normalized = needs_normalization(&f, &modulus);

    let stdout = if args.json {
        let mut obj = Map::new();
        obj.insert("p".into(), json!(modulus.p().to_string()));
        obj.insert("t".into(), json!(modulus.t()));
        obj.insert("count".into(), json!(result.total.to_string()));
        obj.insert("stats".into(), stats_json(&result, normalized, verified));
        if args.trace {
            obj.insert("tree".into(), trace_json(&result));
            obj.insert("leaves".into(), leaves_json(&result));
        }
        format!("{}\n", Value::Object(obj))
    } else {
        let mut s = format!("{}\n", result.total);
        if args.trace {
            for rec in &result.trace {
                let (status, contribution) = status_json(&rec.status);
                s.push_str(&format!(
                    "node {} level {} s={} degrees={:?} {} {} contribution={}\n",
                    rec.node,
                    rec.level,
                    rec.s,
                    rec.degrees,
                    rec.ideal,
                    status.as_str().unwrap_or_default(),
                    contribution
                ));
            }
            for leaf in &result.per_leaf {
                s.push_str(&format!("leaf {}: {}\n", leaf.descriptor, leaf.count));
            }
        }
        if normalized {
            stderr.push_str("note: coefficients reduced modulo p^t\n");
        }
        s
    };
    Outcome {
        stdout,
        stderr,
        code: 0,
    }
}

pub fn cmd_series(args: &SeriesArgs) -> Outcome {
    // The prime is checked even when only N_0 is requested.
    let p = match parse_modulus(&args.prime, 1) {
        Ok(m) => m.p().clone(),
        Err(e) => return Outcome::invalid(e),
    };
    let f = match PolynomialInput::parse(&args.poly) {
        Ok(f) => f.coefficients,
        Err(e) => return Outcome::invalid(e),
    };
    let series = match poincare_truncated(&f, &p, args.max_exp) {
        Ok(s) => s,
        Err(e) => return Outcome::invalid(e),
    };
    let stdout = if args.json {
        let coeffs: Vec<String> = series.iter().map(|n| n.to_string()).collect();
        format!("{}\n", json!({"p": p.to_string(), "coefficients": coeffs}))
    } else {
        series.iter().map(|n| format!("{n}\n")).collect()
    };
    Outcome::ok(stdout)
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Count(a) => cmd_count(a),
        Command::Series(a) => cmd_series(a),
    }
}

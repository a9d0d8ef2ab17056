//! OpenQASM 2 text export and a parser for the subset it emits.
//!
//! Angles are written with 17 significant digits. `crz` lines carry the full
//! rotation angle θ of `I ⊕ Rz(θ)`.

use thiserror::Error;

use crate::angle::Angle;
use crate::circuit::{Circuit, Gate, Space, Wires};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum QasmError {
    #[error("gate {index} ({name}) needs a logical export")]
    LogicalGate { index: usize, name: &'static str },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no qreg declaration")]
    MissingQreg,
}

/// Renders `c` as OpenQASM 2. Without `logical`, any `crz`, `cp` or `swap`
/// is an error.
pub fn to_qasm(c: &Circuit, logical: bool) -> Result<String, QasmError> {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", c.width()));
    for (index, g) in c.gates().iter().enumerate() {
        if g.is_logical_only() && !logical {
            return Err(QasmError::LogicalGate { index, name: g.name() });
        }
        out.push_str(g.name());
        if let Some(theta) = g.theta() {
            out.push_str(&format!("({theta:.16e})"));
        }
        match g.wires() {
            Wires::One(q) => out.push_str(&format!(" q[{q}];\n")),
            Wires::Two(a, b) => out.push_str(&format!(" q[{a}],q[{b}];\n")),
        }
    }
    Ok(out)
}

/// Parses the subset written by [`to_qasm`]. Angle arguments may be
/// arithmetic expressions over numbers and `pi`. The result is a physical
/// circuit unless it contains a logical-only gate.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let mut width = None;
    let mut gates = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| QasmError::Parse { line, msg };
        let stmt = raw.split("//").next().unwrap().trim();
        if stmt.is_empty() || stmt.starts_with("OPENQASM") || stmt.starts_with("include") {
            continue;
        }
        let stmt = stmt.strip_suffix(';').ok_or_else(|| err("missing ';'".into()))?.trim();
        if let Some(rest) = stmt.strip_prefix("qreg") {
            if width.is_some() {
                return Err(err("only one qreg is supported".into()));
            }
            width = Some(register_index(rest.trim(), "q").map_err(err)?);
            continue;
        }
        let n = width.ok_or(QasmError::MissingQreg)?;
        let (head, args) = split_head(stmt).map_err(err)?;
        let (name, param) = match head.find('(') {
            Some(open) => {
                let close = head.rfind(')').ok_or_else(|| err("unclosed '('".into()))?;
                (head[..open].trim(), Some(eval(&head[open + 1..close]).map_err(err)?))
            }
            None => (head.trim(), None),
        };
        let wires = args
            .split(',')
            .map(|a| register_index(a.trim(), "q"))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        if let Some(&w) = wires.iter().find(|&&w| w >= n) {
            return Err(err(format!("wire {w} outside q[{n}]")));
        }
        let gate = build(name, param, &wires).map_err(err)?;
        gates.push(gate);
    }
    let width = width.ok_or(QasmError::MissingQreg)?;
    let space = if gates.iter().any(Gate::is_logical_only) {
        Space::Logical
    } else {
        Space::Physical
    };
    Ok(Circuit::from_gates(width, gates).set_space(space))
}

/// Splits `name(args) q[0],q[1]` into the head and the operand list.
fn split_head(stmt: &str) -> Result<(&str, &str), String> {
    let name_end = stmt
        .find(|c: char| c == '(' || c.is_whitespace())
        .ok_or("missing operands")?;
    let cut = if stmt[name_end..].starts_with('(') {
        let mut depth = 0;
        let close = stmt[name_end..]
            .char_indices()
            .find(|&(_, c)| {
                depth += match c {
                    '(' => 1,
                    ')' => -1,
                    _ => 0,
                };
                depth == 0
            })
            .ok_or("unclosed '('")?
            .0;
        name_end + close + 1
    } else {
        name_end
    };
    Ok((&stmt[..cut], stmt[cut..].trim()))
}

fn register_index(s: &str, reg: &str) -> Result<usize, String> {
    s.strip_prefix(reg)
        .and_then(|r| r.trim().strip_prefix('['))
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| format!("expected {reg}[index], found '{s}'"))
}

fn build(name: &str, param: Option<f64>, w: &[usize]) -> Result<Gate, String> {
    let one = |f: fn(usize) -> Gate| match (w, param) {
        ([q], None) => Ok(f(*q)),
        _ => Err(format!("{name} takes one qubit and no angle")),
    };
    let rot = |f: fn(usize, Angle) -> Gate| match (w, param) {
        ([q], Some(a)) => Ok(f(*q, Angle::new(a))),
        _ => Err(format!("{name} takes one qubit and an angle")),
    };
    let two = |f: &dyn Fn(usize, usize, Option<f64>) -> Gate, wants_angle: bool| match w {
        [a, b] if a != b && param.is_some() == wants_angle => Ok(f(*a, *b, param)),
        _ => Err(format!("{name} takes two distinct qubits")),
    };
    match name {
        "h" => one(Gate::H),
        "x" => one(Gate::X),
        "sx" => one(Gate::SX),
        "sxdg" => one(Gate::SXdg),
        "s" => one(Gate::S),
        "sdg" => one(Gate::Sdg),
        "rz" => rot(Gate::Rz),
        "ry" => rot(Gate::Ry),
        "cx" => two(&|a, b, _| Gate::CX(a, b), false),
        "swap" => two(&|a, b, _| Gate::Swap(a, b), false),
        "crz" => two(&|a, b, t| Gate::crz(a, b, t.unwrap()), true),
        "cp" => two(&|a, b, t| Gate::CP(a, b, Angle::new(t.unwrap())), true),
        _ => Err(format!("unsupported gate '{name}'")),
    }
}

/// Evaluates `+ - * /`, parentheses, numbers and `pi`.
fn eval(s: &str) -> Result<f64, String> {
    let toks = tokenize(s)?;
    let mut p = ExprParser { toks, i: 0 };
    let v = p.sum()?;
    if p.i != p.toks.len() {
        return Err(format!("trailing input in '{s}'"));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if s[i..].starts_with("pi") {
            out.push(Tok::Num(std::f64::consts::PI));
            i += 2;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'.') {
                // exponent signs belong to the literal
                if (b[i] == b'e' || b[i] == b'E') && i + 1 < b.len() && (b[i + 1] == b'-' || b[i + 1] == b'+') {
                    i += 1;
                }
                i += 1;
            }
            let lit = &s[start..i];
            out.push(Tok::Num(lit.parse().map_err(|_| format!("bad number '{lit}'"))?));
        } else {
            return Err(format!("unexpected '{c}' in angle"));
        }
    }
    Ok(out)
}

struct ExprParser {
    toks: Vec<Tok>,
    i: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<f64, String> {
        let mut v = self.product()?;
        loop {
            if self.eat('+') {
                v += self.product()?;
            } else if self.eat('-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, String> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        if self.eat('(') {
            let v = self.sum()?;
            if !self.eat(')') {
                return Err("missing ')'".into());
            }
            return Ok(v);
        }
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.i += 1;
                Ok(v)
            }
            _ => Err("expected a number".into()),
        }
    }
}

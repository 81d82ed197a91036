//! OpenQASM 2.0 subset: `qreg`, `rx`, `rz`, `h`, `s`, `cx`.
//!
//! The parser recognises the native sequences that [`to_qasm`] emits for
//! propagator gates and rebuilds those gates with their exact angles, so a
//! compressible circuit survives a round trip as a compressible circuit. Any
//! other native gate becomes a one-gate [`GateParams::Native`] pair gate.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, CircuitError, GateParams, PairGate};
use crate::propagators::{Angles3, NativeGate};

pub const HEADER: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QasmError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}, column {col}: {source}")]
    Circuit {
        line: usize,
        col: usize,
        #[source]
        source: CircuitError,
    },
}

/// Serialize a circuit, lowering every gate to native gates.
pub fn to_qasm(c: &Circuit) -> String {
    let mut out = String::from(HEADER);
    writeln!(out, "qreg q[{}];", c.num_qubits()).unwrap();
    for g in c.lower() {
        match g {
            NativeGate::Rx { qubit, angle } => writeln!(out, "rx({angle:?}) q[{qubit}];"),
            NativeGate::Rz { qubit, angle } => writeln!(out, "rz({angle:?}) q[{qubit}];"),
            NativeGate::H { qubit } => writeln!(out, "h q[{qubit}];"),
            NativeGate::S { qubit } => writeln!(out, "s q[{qubit}];"),
            NativeGate::Cx { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
        }
        .unwrap();
    }
    out
}

/// Parse a circuit written by [`to_qasm`] or any program in the same subset.
pub fn from_qasm(text: &str) -> Result<Circuit, QasmError> {
    let program = Parser::new(text).program()?;
    let n = program.num_qubits;
    let ops = &program.ops;
    let mut gates = Vec::new();
    let mut k = 0;
    while k < ops.len() {
        if let Some((len, gate)) = match_propagator(&ops[k..]) {
            gates.push(gate);
            k += len;
            continue;
        }
        let op = &ops[k];
        let gate = PairGate::from_native(op.gate, n).map_err(|source| QasmError::Circuit {
            line: op.line,
            col: op.col,
            source,
        })?;
        gates.push(gate);
        k += 1;
    }
    Circuit::from_gates(n, gates).map_err(|source| QasmError::Circuit {
        line: 1,
        col: 1,
        source,
    })
}

#[derive(Debug, Clone, Copy)]
struct Op {
    gate: NativeGate,
    line: usize,
    col: usize,
}

struct Program {
    num_qubits: usize,
    ops: Vec<Op>,
}

/// One slot of a sequence template, relative to the pair's first qubit.
#[derive(Clone, Copy)]
enum Slot {
    Cx,
    H0,
    S0,
    /// Rotation fixed to a constant angle.
    RxConst(usize, f64),
    RzConst(usize, f64),
    /// Rotation whose angle is captured into the given variable.
    RxVar(usize, usize),
    RzVar(usize, usize),
}

/// Emitted sequences and how captured angles map back to `(θx, θy, θz)`:
/// each entry of the map is `(variable, scale)` or `None` for zero.
struct Template {
    slots: &'static [Slot],
    map: [Option<(usize, f64)>; 3],
}

const TEMPLATES: &[Template] = {
    use Slot::*;
    const H: f64 = FRAC_PI_2;
    &[
        // General three-CX circuit.
        Template {
            slots: &[
                Cx,
                RxVar(0, 0),
                RzVar(1, 1),
                H0,
                Cx,
                S0,
                RzVar(1, 2),
                H0,
                Cx,
                RxConst(0, -H),
                RxConst(1, H),
            ],
            map: [Some((0, -0.5)), Some((2, 0.5)), Some((1, -0.5))],
        },
        // XY under RX(π/2) dressing.
        Template {
            slots: &[
                RxConst(0, H),
                RxConst(1, H),
                Cx,
                RxVar(0, 0),
                RzVar(1, 1),
                Cx,
                RxConst(0, -H),
                RxConst(1, -H),
            ],
            map: [Some((0, -0.5)), Some((1, -0.5)), None],
        },
        // YZ under RZ(π/2) dressing.
        Template {
            slots: &[
                RzConst(0, H),
                RzConst(1, H),
                Cx,
                RxVar(0, 0),
                RzVar(1, 1),
                Cx,
                RzConst(0, -H),
                RzConst(1, -H),
            ],
            map: [None, Some((0, -0.5)), Some((1, -0.5))],
        },
        // Y under RZ(π/2) dressing.
        Template {
            slots: &[
                RzConst(0, H),
                RzConst(1, H),
                Cx,
                RxVar(0, 0),
                Cx,
                RzConst(0, -H),
                RzConst(1, -H),
            ],
            map: [None, Some((0, -0.5)), None],
        },
        Template {
            slots: &[Cx, RxVar(0, 0), RzVar(1, 1), Cx],
            map: [Some((0, -0.5)), None, Some((1, -0.5))],
        },
        Template {
            slots: &[Cx, RxVar(0, 0), Cx],
            map: [Some((0, -0.5)), None, None],
        },
        Template {
            slots: &[Cx, RzVar(1, 0), Cx],
            map: [None, None, Some((0, -0.5))],
        },
    ]
};

/// Dressing angles written by hand as `pi/2` may differ from the constant in
/// the last place.
const CONST_TOL: f64 = 4.0 * f64::EPSILON;

fn match_propagator(ops: &[Op]) -> Option<(usize, PairGate)> {
    let pair = match ops.first()?.gate {
        NativeGate::Cx { control, target } if target == control + 1 => control,
        NativeGate::Rx { qubit, .. } | NativeGate::Rz { qubit, .. } => qubit,
        _ => return None,
    };
    'template: for t in TEMPLATES {
        if ops.len() < t.slots.len() {
            continue;
        }
        let mut vars = [0.0f64; 3];
        for (slot, op) in t.slots.iter().zip(ops) {
            let ok = match (*slot, op.gate) {
                (Slot::Cx, NativeGate::Cx { control, target }) => {
                    control == pair && target == pair + 1
                }
                (Slot::H0, NativeGate::H { qubit }) | (Slot::S0, NativeGate::S { qubit }) => {
                    qubit == pair
                }
                (Slot::RxConst(q, v), NativeGate::Rx { qubit, angle })
                | (Slot::RzConst(q, v), NativeGate::Rz { qubit, angle }) => {
                    qubit == pair + q && (angle - v).abs() <= CONST_TOL
                }
                (Slot::RxVar(q, var), NativeGate::Rx { qubit, angle })
                | (Slot::RzVar(q, var), NativeGate::Rz { qubit, angle }) => {
                    vars[var] = angle;
                    qubit == pair + q
                }
                _ => false,
            };
            if !ok {
                continue 'template;
            }
        }
        let theta = t
            .map
            .map(|m| m.map_or(0.0, |(var, scale)| vars[var] * scale));
        let a = Angles3::new(theta[0], theta[1], theta[2]);
        return Some((t.slots.len(), PairGate::new(pair, GateParams::Xyz(a))));
    }
    None
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, QasmError> {
        Err(QasmError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while !matches!(self.peek(), None | Some(b'\n')) {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), QasmError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected '{}'", c as char))
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.bump();
        }
        if start == self.pos {
            return self.error("expected identifier");
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number_literal(&mut self) -> Result<f64, QasmError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(b) = self.peek() {
            let prev = self.pos.checked_sub(1).map(|p| self.src[p]);
            let exp_sign = matches!(b, b'+' | b'-') && matches!(prev, Some(b'e' | b'E'));
            if b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E') || exp_sign {
                self.bump();
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => Ok(v),
            Err(_) => self.error(format!("invalid number '{text}'")),
        }
    }

    fn integer(&mut self) -> Result<usize, QasmError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<usize>() {
            Ok(v) => Ok(v),
            Err(_) => self.error("expected integer"),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.bump();
                    v += self.term()?;
                }
                Some(b'-') => {
                    self.bump();
                    v -= self.term()?;
                }
                _ => return Ok(v),
            }
        }
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.bump();
                    v *= self.factor()?;
                }
                Some(b'/') => {
                    self.bump();
                    v /= self.factor()?;
                }
                _ => return Ok(v),
            }
        }
    }

    // factor := '-' factor | '(' expr ')' | 'pi' | number
    fn factor(&mut self) -> Result<f64, QasmError> {
        self.skip_ws();
        match self.peek() {
            Some(b'-') => {
                self.bump();
                Ok(-self.factor()?)
            }
            Some(b'+') => {
                self.bump();
                self.factor()
            }
            Some(b'(') => {
                self.bump();
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(b) if b.is_ascii_alphabetic() => {
                let name = self.ident()?;
                if name == "pi" {
                    Ok(PI)
                } else {
                    self.error(format!("unknown constant '{name}'"))
                }
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number_literal(),
            _ => self.error("expected expression"),
        }
    }

    fn qubit(&mut self, reg: &str, size: usize) -> Result<usize, QasmError> {
        let name = self.ident()?;
        if name != reg {
            return self.error(format!("unknown register '{name}'"));
        }
        self.expect(b'[')?;
        let idx = self.integer()?;
        self.expect(b']')?;
        if idx >= size {
            return self.error(format!("qubit index {idx} out of range for {reg}[{size}]"));
        }
        Ok(idx)
    }

    fn program(&mut self) -> Result<Program, QasmError> {
        let kw = self.ident()?;
        if kw != "OPENQASM" {
            return self.error("expected 'OPENQASM 2.0;' header");
        }
        let version = self.number_literal()?;
        if version != 2.0 {
            return self.error(format!("unsupported OpenQASM version {version}"));
        }
        self.expect(b';')?;

        let mut reg: Option<(String, usize)> = None;
        let mut ops = Vec::new();
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                break;
            }
            let (line, col) = (self.line, self.col);
            let name = self.ident()?;
            match name.as_str() {
                "include" => {
                    self.skip_ws();
                    if self.bump() != Some(b'"') {
                        return self.error("expected quoted file name");
                    }
                    while !matches!(self.peek(), None | Some(b'"')) {
                        self.bump();
                    }
                    self.expect(b'"')?;
                    self.expect(b';')?;
                }
                "qreg" => {
                    if reg.is_some() {
                        return self.error("only one qreg is supported");
                    }
                    let r = self.ident()?;
                    self.expect(b'[')?;
                    let size = self.integer()?;
                    self.expect(b']')?;
                    self.expect(b';')?;
                    reg = Some((r, size));
                }
                "rx" | "rz" | "h" | "s" | "cx" => {
                    let Some((r, size)) = reg.clone() else {
                        return self.error("gate before qreg declaration");
                    };
                    let gate = match name.as_str() {
                        "rx" | "rz" => {
                            self.expect(b'(')?;
                            let angle = self.expr()?;
                            self.expect(b')')?;
                            let qubit = self.qubit(&r, size)?;
                            if name == "rx" {
                                NativeGate::Rx { qubit, angle }
                            } else {
                                NativeGate::Rz { qubit, angle }
                            }
                        }
                        "h" => NativeGate::H {
                            qubit: self.qubit(&r, size)?,
                        },
                        "s" => NativeGate::S {
                            qubit: self.qubit(&r, size)?,
                        },
                        _ => {
                            let control = self.qubit(&r, size)?;
                            self.expect(b',')?;
                            let target = self.qubit(&r, size)?;
                            if control == target {
                                return self.error("cx control and target coincide");
                            }
                            NativeGate::Cx { control, target }
                        }
                    };
                    self.expect(b';')?;
                    ops.push(Op { gate, line, col });
                }
                other => {
                    return Err(QasmError::Syntax {
                        line,
                        col,
                        message: format!("unknown gate or statement '{other}'"),
                    })
                }
            }
        }
        let Some((_, num_qubits)) = reg else {
            return self.error("missing qreg declaration");
        };
        if num_qubits < 2 {
            return self.error("register must hold at least 2 qubits");
        }
        Ok(Program { num_qubits, ops })
    }
}

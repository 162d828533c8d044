// SPDX-License-Identifier: Apache-2.0

//! Bit-vector values with unknown bits, and evaluation of Verilog
//! expressions over them.
//!
//! Width rules follow Verilog's context-determined sizing for arithmetic
//! and bitwise operators; all arithmetic is unsigned. Any unknown bit in
//! an operand makes the whole result unknown, except where a known operand
//! decides `&&`, `||` or `?:` on its own.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::verilog::number::parse_literal;
use crate::verilog::{BinaryOp, Expr, SliceKind, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Value {
    pub width: u32,
    pub bits: BigUint,
    /// Set bits are x or z.
    pub xmask: BigUint,
}

fn mask(width: u32) -> BigUint {
    (BigUint::one() << width) - 1u32
}

impl Value {
    pub fn new(width: u32, bits: BigUint) -> Value {
        let bits = bits & mask(width);
        Value { width, bits, xmask: BigUint::zero() }
    }

    pub fn from_u64(width: u32, v: u64) -> Value {
        Value::new(width, BigUint::from(v))
    }

    pub fn zero(width: u32) -> Value {
        Value::new(width, BigUint::zero())
    }

    pub fn unknown(width: u32) -> Value {
        Value { width, bits: BigUint::zero(), xmask: mask(width) }
    }

    pub fn bit(b: bool) -> Value {
        Value::from_u64(1, b as u64)
    }

    pub fn is_known(&self) -> bool {
        self.xmask.is_zero()
    }

    /// Truth value: `None` when any bit is unknown.
    pub fn truth(&self) -> Option<bool> {
        if self.is_known() {
            Some(!self.bits.is_zero())
        } else if !self.bits.is_zero() {
            // a known 1 bit decides it
            Some(true)
        } else {
            None
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        if self.is_known() {
            self.bits.to_u64()
        } else {
            None
        }
    }

    /// Zero-extend or truncate.
    pub fn resize(&self, width: u32) -> Value {
        let m = mask(width);
        Value { width, bits: &self.bits & &m, xmask: &self.xmask & &m }
    }

    pub fn get_bit(&self, i: u32) -> Option<bool> {
        if self.xmask.bit(i as u64) {
            None
        } else {
            Some(self.bits.bit(i as u64))
        }
    }

    /// Parse VCD value text (`b0101`, `1`, `x`, ...) for a signal of
    /// `width` bits. Shorter vectors are extended per VCD rules.
    pub fn from_vcd(text: &str, width: u32) -> Option<Value> {
        let digits = text.strip_prefix(['b', 'B']).unwrap_or(text);
        if digits.is_empty() {
            return None;
        }
        let mut bits = BigUint::zero();
        let mut xmask = BigUint::zero();
        let first = digits.chars().next().unwrap().to_ascii_lowercase();
        let n = digits.len() as u32;
        // left-extend with the leading digit when it is x/z, else 0
        let fill_x = matches!(first, 'x' | 'z');
        for c in digits.chars() {
            bits <<= 1;
            xmask <<= 1;
            match c.to_ascii_lowercase() {
                '0' => {}
                '1' => bits |= BigUint::one(),
                'x' | 'z' => xmask |= BigUint::one(),
                _ => return None,
            }
        }
        if n < width && fill_x {
            xmask |= mask(width) ^ mask(n);
        }
        Some(Value { width, bits: bits & mask(width), xmask: xmask & mask(width) })
    }

    /// Binary digits, MSB first, with `x` for unknown bits.
    pub fn to_bin(&self) -> String {
        (0..self.width.max(1))
            .rev()
            .map(|i| match self.get_bit(i) {
                None => 'x',
                Some(true) => '1',
                Some(false) => '0',
            })
            .collect()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_known() {
            write!(f, "{}'h{:x}", self.width, self.bits)
        } else {
            write!(f, "{}'b{}", self.width, self.to_bin())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("unsupported expression: {0}")]
    Unsupported(String),
}

pub type EvalResult = Result<Value, EvalError>;

/// Signal lookup for expression evaluation.
pub trait EvalEnv {
    /// Current value of a signal or constant.
    fn signal(&self, name: &str) -> Option<Value>;

    /// Declared `(msb, lsb)` of a vector, when known.
    fn range(&self, _name: &str) -> Option<(i64, i64)> {
        None
    }

    /// Element of an unpacked array, `None` if `name` is not an array.
    fn element(&self, _name: &str, _index: Option<u64>) -> Option<Value> {
        None
    }

    fn is_array(&self, _name: &str) -> bool {
        false
    }

    /// Value of `e` sampled `depth` clock ticks ago, sized to `width`.
    fn past(&self, _e: &Expr, _depth: u32, _width: u32) -> EvalResult {
        Err(EvalError::Unsupported("sampled-value functions need a clocked context".into()))
    }
}

fn literal_value(text: &str, ctx: u32) -> EvalResult {
    let lit = parse_literal(text).ok_or_else(|| EvalError::Unsupported(format!("literal `{text}`")))?;
    if let Some(fill) = lit.fill {
        let w = ctx.max(1);
        return Ok(match fill {
            '0' => Value::zero(w),
            '1' => Value::new(w, mask(w)),
            _ => Value::unknown(w),
        });
    }
    let w = lit.width.unwrap_or_else(|| 32.max(lit.value.bits() as u32));
    Ok(Value { width: w, bits: lit.value & mask(w), xmask: lit.unknown & mask(w) })
}

/// Self-determined width of an expression.
pub fn self_width(e: &Expr, env: &dyn EvalEnv) -> Result<u32, EvalError> {
    Ok(match e {
        Expr::Number { text, .. } => literal_value(text, 1)?.width,
        Expr::Name { .. } => {
            let n = e.as_name().unwrap();
            if env.is_array(&n) {
                return Err(EvalError::Unsupported(format!("array `{n}` used without an index")));
            }
            env.signal(&n).ok_or(EvalError::UnknownSignal(n))?.width
        }
        Expr::Str { .. } => return Err(EvalError::Unsupported("string".into())),
        Expr::Index { base, .. } => {
            if let Some(n) = base.as_name() {
                if env.is_array(&n) {
                    return Ok(env.element(&n, None).map(|v| v.width).unwrap_or(1));
                }
            }
            1
        }
        Expr::Slice { kind, left, right, .. } => match kind {
            SliceKind::Range => {
                let l = const_value(left, env)?;
                let r = const_value(right, env)?;
                (l - r).unsigned_abs() as u32 + 1
            }
            _ => const_value(right, env)? as u32,
        },
        Expr::Concat { items } => {
            let mut w = 0;
            for i in items {
                w += self_width(i, env)?;
            }
            w
        }
        Expr::Replicate { count, items } => {
            let mut w = 0;
            for i in items {
                w += self_width(i, env)?;
            }
            w * const_value(count, env)? as u32
        }
        Expr::Unary { op, operand, .. } => match op {
            UnaryOp::Plus | UnaryOp::Minus | UnaryOp::BitNot => self_width(operand, env)?,
            _ => 1,
        },
        Expr::Binary { op, lhs, rhs, .. } => {
            use BinaryOp::*;
            match op {
                Add | Sub | Mul | Div | Mod | BitAnd | BitOr | BitXor | BitXnor => {
                    self_width(lhs, env)?.max(self_width(rhs, env)?)
                }
                Pow | Shl | Shr | AShl | AShr => self_width(lhs, env)?,
                _ => 1,
            }
        }
        Expr::Ternary { then_expr, else_expr, .. } => self_width(then_expr, env)?.max(self_width(else_expr, env)?),
        Expr::Call { name, args } => match name.as_str() {
            "$past" => self_width(&args[0], env)?,
            "$rose" | "$fell" | "$stable" => 1,
            "$bits" | "$clog2" => 32,
            "$signed" | "$unsigned" => self_width(&args[0], env)?,
            _ => return Err(EvalError::Unsupported(format!("call to `{name}`"))),
        },
        Expr::Paren { inner } => self_width(inner, env)?,
    })
}

fn const_value(e: &Expr, env: &dyn EvalEnv) -> Result<i64, EvalError> {
    let v = eval(e, env, 0)?;
    v.to_u64()
        .map(|x| x as i64)
        .ok_or_else(|| EvalError::Unsupported(format!("non-constant bound `{}`", crate::verilog::expr_text(e))))
}

/// Evaluate `e` at width `max(ctx, self_width(e))`.
pub fn eval(e: &Expr, env: &dyn EvalEnv, ctx: u32) -> EvalResult {
    let w = ctx.max(self_width(e, env)?);
    let v = eval_inner(e, env, w)?;
    Ok(if v.width == w { v } else { v.resize(w) })
}

fn bit_offset(env: &dyn EvalEnv, name: Option<&str>, index: i64, width: u32) -> Option<u32> {
    let (msb, lsb) = name.and_then(|n| env.range(n)).unwrap_or((width as i64 - 1, 0));
    let off = if msb >= lsb { index - lsb } else { lsb - index };
    if off < 0 || off >= width as i64 {
        None
    } else {
        Some(off as u32)
    }
}

fn extract(v: &Value, off: u32, width: u32) -> Value {
    let m = mask(width);
    Value { width, bits: (&v.bits >> off) & &m, xmask: (&v.xmask >> off) & &m }
}

fn eval_inner(e: &Expr, env: &dyn EvalEnv, w: u32) -> EvalResult {
    match e {
        Expr::Number { text, .. } => literal_value(text, w),
        Expr::Name { .. } => {
            let n = e.as_name().unwrap();
            env.signal(&n).ok_or(EvalError::UnknownSignal(n))
        }
        Expr::Str { .. } => Err(EvalError::Unsupported("string".into())),
        Expr::Paren { inner } => eval(inner, env, w),
        Expr::Index { base, index } => {
            let iv = eval(index, env, 0)?;
            let name = base.as_name();
            if let Some(n) = &name {
                if env.is_array(n) {
                    return env.element(n, iv.to_u64()).ok_or(EvalError::UnknownSignal(n.clone()));
                }
            }
            let bv = eval(base, env, 0)?;
            let Some(i) = iv.to_u64() else { return Ok(Value::unknown(1)) };
            match bit_offset(env, name.as_deref(), i as i64, bv.width) {
                Some(off) => Ok(extract(&bv, off, 1)),
                None => Ok(Value::unknown(1)),
            }
        }
        Expr::Slice { base, kind, left, right } => {
            let bv = eval(base, env, 0)?;
            let name = base.as_name();
            let (hi, lo) = match kind {
                SliceKind::Range => (const_value(left, env)?, const_value(right, env)?),
                SliceKind::Up | SliceKind::Down => {
                    let b = eval(left, env, 0)?;
                    let width = const_value(right, env)?;
                    let Some(b) = b.to_u64() else { return Ok(Value::unknown(width as u32)) };
                    let b = b as i64;
                    if *kind == SliceKind::Up {
                        (b + width - 1, b)
                    } else {
                        (b, b - width + 1)
                    }
                }
            };
            let width = (hi - lo).unsigned_abs() as u32 + 1;
            let a = bit_offset(env, name.as_deref(), hi, bv.width);
            let b = bit_offset(env, name.as_deref(), lo, bv.width);
            match (a, b) {
                (Some(a), Some(b)) => Ok(extract(&bv, a.min(b), width)),
                _ => Ok(Value::unknown(width)),
            }
        }
        Expr::Concat { items } => {
            let mut out = Value::zero(0);
            for i in items {
                let v = eval(i, env, 0)?;
                out = Value {
                    width: out.width + v.width,
                    bits: (out.bits << v.width) | v.bits,
                    xmask: (out.xmask << v.width) | v.xmask,
                };
            }
            Ok(out)
        }
        Expr::Replicate { count, items } => {
            let n = const_value(count, env)?;
            let one = eval_inner(&Expr::Concat { items: items.clone() }, env, 0)?;
            let mut out = Value::zero(0);
            for _ in 0..n {
                out = Value {
                    width: out.width + one.width,
                    bits: (out.bits << one.width) | &one.bits,
                    xmask: (out.xmask << one.width) | &one.xmask,
                };
            }
            Ok(out)
        }
        Expr::Unary { op, operand, .. } => {
            match op {
                UnaryOp::Plus => eval(operand, env, w),
                UnaryOp::Minus => {
                    let v = eval(operand, env, w)?;
                    if !v.is_known() {
                        return Ok(Value::unknown(w));
                    }
                    let m = mask(w);
                    Ok(Value::new(w, ((&m ^ &v.bits) + 1u32) & m))
                }
                UnaryOp::BitNot => {
                    let v = eval(operand, env, w)?;
                    if !v.is_known() {
                        return Ok(Value::unknown(w));
                    }
                    Ok(Value::new(w, mask(w) ^ v.bits))
                }
                UnaryOp::LogicNot => {
                    let v = eval(operand, env, 0)?;
                    Ok(match v.truth() {
                        Some(t) => Value::bit(!t),
                        None => Value::unknown(1),
                    })
                }
                _ => {
                    let v = eval(operand, env, 0)?;
                    if !v.is_known() {
                        return Ok(Value::unknown(1));
                    }
                    let all = v.bits == mask(v.width);
                    let any = !v.bits.is_zero();
                    let parity = v.bits.count_ones() % 2 == 1;
                    Ok(Value::bit(match op {
                        UnaryOp::RedAnd => all,
                        UnaryOp::RedNand => !all,
                        UnaryOp::RedOr => any,
                        UnaryOp::RedNor => !any,
                        UnaryOp::RedXor => parity,
                        UnaryOp::RedXnor => !parity,
                        _ => unreachable!(),
                    }))
                }
            }
        }
        Expr::Binary { op, lhs, rhs, .. } => eval_binary(*op, lhs, rhs, env, w),
        Expr::Ternary { cond, then_expr, else_expr, .. } => {
            let c = eval(cond, env, 0)?;
            match c.truth() {
                Some(true) => eval(then_expr, env, w),
                Some(false) => eval(else_expr, env, w),
                None => {
                    let a = eval(then_expr, env, w)?;
                    let b = eval(else_expr, env, w)?;
                    Ok(if a == b && a.is_known() { a } else { Value::unknown(w) })
                }
            }
        }
        Expr::Call { name, args } => match name.as_str() {
            "$past" => {
                let depth = match args.get(1) {
                    Some(d) => const_value(d, env)? as u32,
                    None => 1,
                };
                env.past(&args[0], depth, w)
            }
            "$rose" | "$fell" => {
                let now = eval(&args[0], env, 0)?;
                let before = env.past(&args[0], 1, now.width)?;
                let (a, b) = (before.get_bit(0), now.get_bit(0));
                Ok(match (a, b) {
                    (Some(a), Some(b)) => Value::bit(if name == "$rose" { !a && b } else { a && !b }),
                    _ => Value::unknown(1),
                })
            }
            "$stable" => {
                let now = eval(&args[0], env, 0)?;
                let before = env.past(&args[0], 1, now.width)?;
                if now.is_known() && before.is_known() {
                    Ok(Value::bit(now.bits == before.bits))
                } else {
                    Ok(Value::unknown(1))
                }
            }
            "$bits" => Ok(Value::from_u64(32, self_width(&args[0], env)? as u64)),
            "$clog2" => {
                let v = const_value(&args[0], env)?;
                Ok(Value::from_u64(32, crate::verilog::widths::clog2(v) as u64))
            }
            "$signed" | "$unsigned" => eval(&args[0], env, w),
            _ => Err(EvalError::Unsupported(format!("call to `{name}`"))),
        },
    }
}

fn eval_binary(op: BinaryOp, lhs: &Expr, rhs: &Expr, env: &dyn EvalEnv, w: u32) -> EvalResult {
    use BinaryOp::*;
    match op {
        LogicAnd | LogicOr => {
            let a = eval(lhs, env, 0)?.truth();
            let b = eval(rhs, env, 0)?.truth();
            let r = if op == LogicAnd {
                match (a, b) {
                    (Some(false), _) | (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                }
            } else {
                match (a, b) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                }
            };
            Ok(r.map(Value::bit).unwrap_or(Value::unknown(1)))
        }
        Eq | Ne | CaseEq | CaseNe | Lt | Le | Gt | Ge => {
            let cw = self_width(lhs, env)?.max(self_width(rhs, env)?);
            let a = eval(lhs, env, cw)?;
            let b = eval(rhs, env, cw)?;
            if matches!(op, CaseEq | CaseNe) {
                let same = a.bits == b.bits && a.xmask == b.xmask;
                return Ok(Value::bit(same == (op == CaseEq)));
            }
            if !a.is_known() || !b.is_known() {
                return Ok(Value::unknown(1));
            }
            Ok(Value::bit(match op {
                Eq => a.bits == b.bits,
                Ne => a.bits != b.bits,
                Lt => a.bits < b.bits,
                Le => a.bits <= b.bits,
                Gt => a.bits > b.bits,
                Ge => a.bits >= b.bits,
                _ => unreachable!(),
            }))
        }
        Shl | Shr | AShl | AShr | Pow => {
            let a = eval(lhs, env, w)?;
            let b = eval(rhs, env, 0)?;
            let (Some(_), Some(n)) = (a.is_known().then_some(()), b.to_u64()) else {
                return Ok(Value::unknown(w));
            };
            let m = mask(w);
            Ok(Value::new(
                w,
                match op {
                    Shl | AShl => (a.bits << n.min(u32::MAX as u64)) & m,
                    Shr | AShr => a.bits >> n.min(u32::MAX as u64),
                    _ => num_traits::pow::Pow::pow(&a.bits, n.min(4096) as u32) & m,
                },
            ))
        }
        _ => {
            let a = eval(lhs, env, w)?;
            let b = eval(rhs, env, w)?;
            if !a.is_known() || !b.is_known() {
                return Ok(Value::unknown(w));
            }
            let m = mask(w);
            let bits = match op {
                Add => (a.bits + b.bits) & m,
                Sub => ((a.bits + (&m + 1u32)) - b.bits) & m,
                Mul => (a.bits * b.bits) & m,
                Div | Mod if b.bits.is_zero() => return Ok(Value::unknown(w)),
                Div => a.bits / b.bits,
                Mod => a.bits % b.bits,
                BitAnd => a.bits & b.bits,
                BitOr => a.bits | b.bits,
                BitXor => a.bits ^ b.bits,
                BitXnor => (a.bits ^ b.bits) ^ m,
                _ => unreachable!(),
            };
            Ok(Value::new(w, bits))
        }
    }
}

/// Evaluation over a fixed set of named values.
#[derive(Debug, Default, Clone)]
pub struct MapEnv {
    pub values: std::collections::BTreeMap<String, Value>,
}

impl EvalEnv for MapEnv {
    fn signal(&self, name: &str) -> Option<Value> {
        self.values.get(name).cloned()
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Constant evaluation of parameter expressions and declared widths.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::ast::*;
use super::number::parse_literal;

pub type ParamEnv = BTreeMap<String, i64>;

/// Evaluate a constant expression over integer parameters.
pub fn eval_const(e: &Expr, env: &ParamEnv) -> Result<i64, String> {
    match e {
        Expr::Number { text, .. } => {
            let lit = parse_literal(text).ok_or_else(|| format!("`{text}` is not an integer constant"))?;
            if lit.has_unknown() || lit.fill.is_some() {
                return Err(format!("`{text}` has unknown bits"));
            }
            lit.value.to_i64().ok_or_else(|| format!("`{text}` is too large"))
        }
        Expr::Name { parts, .. } if parts.len() == 1 => env
            .get(&parts[0].name)
            .copied()
            .ok_or_else(|| format!("unknown constant `{}`", parts[0])),
        Expr::Paren { inner } => eval_const(inner, env),
        Expr::Unary { op, operand, .. } => {
            let v = eval_const(operand, env)?;
            Ok(match op {
                UnaryOp::Plus => v,
                UnaryOp::Minus => v.wrapping_neg(),
                UnaryOp::LogicNot => (v == 0) as i64,
                UnaryOp::BitNot => !v,
                _ => return Err(format!("reduction `{}` in a constant expression", op.symbol())),
            })
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let a = eval_const(lhs, env)?;
            let b = eval_const(rhs, env)?;
            use BinaryOp::*;
            Ok(match op {
                Add => a.wrapping_add(b),
                Sub => a.wrapping_sub(b),
                Mul => a.wrapping_mul(b),
                Div | Mod if b == 0 => return Err("division by zero in a constant expression".into()),
                Div => a / b,
                Mod => a % b,
                Pow => {
                    if b < 0 {
                        0
                    } else {
                        a.checked_pow(b.min(u32::MAX as i64) as u32).ok_or("constant overflow")?
                    }
                }
                Shl | AShl => a.checked_shl(b as u32).unwrap_or(0),
                Shr => ((a as u64).checked_shr(b as u32).unwrap_or(0)) as i64,
                AShr => a >> b.min(63),
                Lt => (a < b) as i64,
                Le => (a <= b) as i64,
                Gt => (a > b) as i64,
                Ge => (a >= b) as i64,
                Eq | CaseEq => (a == b) as i64,
                Ne | CaseNe => (a != b) as i64,
                BitAnd => a & b,
                BitOr => a | b,
                BitXor => a ^ b,
                BitXnor => !(a ^ b),
                LogicAnd => (a != 0 && b != 0) as i64,
                LogicOr => (a != 0 || b != 0) as i64,
            })
        }
        Expr::Ternary { cond, then_expr, else_expr, .. } => {
            if eval_const(cond, env)? != 0 {
                eval_const(then_expr, env)
            } else {
                eval_const(else_expr, env)
            }
        }
        Expr::Call { name, args } if name == "$clog2" && args.len() == 1 => {
            let v = eval_const(&args[0], env)?;
            Ok(clog2(v))
        }
        _ => Err("unsupported constant expression".into()),
    }
}

pub fn clog2(v: i64) -> i64 {
    if v <= 1 {
        0
    } else {
        64 - ((v - 1) as u64).leading_zeros() as i64
    }
}

/// Parameter values for a module, with overrides applied to overridable
/// parameters. Returns the environment and any evaluation failures.
pub fn module_env(m: &ModuleDecl, overrides: &ParamEnv) -> (ParamEnv, Vec<String>) {
    let mut env = ParamEnv::new();
    let mut errors = Vec::new();
    let mut visit = |p: &ParamDecl, env: &mut ParamEnv| {
        for (name, value) in &p.assigns {
            if !p.local {
                if let Some(v) = overrides.get(&name.name) {
                    env.insert(name.name.clone(), *v);
                    continue;
                }
            }
            if matches!(value, Expr::Str { .. }) {
                continue;
            }
            match eval_const(value, env) {
                Ok(v) => {
                    env.insert(name.name.clone(), v);
                }
                Err(e) => errors.push(format!("parameter `{name}`: {e}")),
            }
        }
    };
    for p in &m.header_params {
        visit(p, &mut env);
    }
    for item in &m.items {
        if let ItemKind::Param(p) = &item.kind {
            visit(p, &mut env);
        }
    }
    (env, errors)
}

/// Width of a declaration with the given range under `env`.
pub fn range_width(range: Option<&Range>, kind: Option<NetKind>, env: &ParamEnv) -> Result<Width, String> {
    match range {
        None if kind == Some(NetKind::Integer) => Ok(Width::Range { msb: 31, lsb: 0 }),
        None => Ok(Width::Scalar),
        Some(r) => Ok(Width::Range { msb: eval_const(&r.msb, env)?, lsb: eval_const(&r.lsb, env)? }),
    }
}

/// Fill in `width` on every port and net declaration, evaluating ranges
/// with default parameter values. Unevaluable ranges become
/// [`Width::Unknown`] with a diagnostic.
pub fn resolve_widths(unit: &mut SourceUnit) {
    let mut diags = Vec::new();
    for m in &mut unit.modules {
        let (env, errors) = module_env(m, &ParamEnv::new());
        for e in errors {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                file: m.file.clone(),
                line: m.lines.start,
                col: 1,
                message: format!("in `{}`: {e}", m.name),
            });
        }
        let file = m.file.clone();
        let line = m.lines.start;
        let mname = m.name.name.clone();
        let mut report = |what: &str, e: String| {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                file: file.clone(),
                line,
                col: 1,
                message: format!("width of `{mname}.{what}` is unknown: {e}"),
            });
        };
        for p in &mut m.ports {
            p.width = Some(range_width(p.range.as_ref(), p.net_kind, &env).unwrap_or_else(|e| {
                report(&p.name.name, e);
                Width::Unknown
            }));
        }
        for item in &mut m.items {
            if let ItemKind::Net(n) = &mut item.kind {
                n.width = Some(range_width(n.range.as_ref(), Some(n.kind), &env).unwrap_or_else(|e| {
                    report(&n.names[0].name.name, e);
                    Width::Unknown
                }));
            }
        }
    }
    unit.diagnostics.extend(diags);
}

/// Widths of every port and net of `m` for an instance with the given
/// override expressions, evaluated in the parent's environment.
pub fn instance_widths(
    m: &ModuleDecl,
    overrides: &[ParamOverride],
    parent_env: &ParamEnv,
) -> BTreeMap<String, Width> {
    let mut ov = ParamEnv::new();
    for o in overrides {
        if let (Some(n), Ok(v)) = (&o.name, eval_const(&o.value, parent_env)) {
            ov.insert(n.name.clone(), v);
        }
    }
    let (env, _) = module_env(m, &ov);
    let mut out = BTreeMap::new();
    for p in &m.ports {
        out.insert(
            p.name.name.clone(),
            range_width(p.range.as_ref(), p.net_kind, &env).unwrap_or(Width::Unknown),
        );
    }
    for item in &m.items {
        if let ItemKind::Net(n) = &item.kind {
            let w = range_width(n.range.as_ref(), Some(n.kind), &env).unwrap_or(Width::Unknown);
            for nm in &n.names {
                out.entry(nm.name.name.clone()).or_insert(w);
            }
        }
    }
    out
}

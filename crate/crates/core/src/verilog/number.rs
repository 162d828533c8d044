// SPDX-License-Identifier: Apache-2.0

//! Verilog integer literal decoding.

use num_bigint::BigUint;
use num_traits::Zero;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    /// Declared width, if sized.
    pub width: Option<u32>,
    pub signed: bool,
    pub base: u32,
    /// Value with x/z digits read as 0.
    pub value: BigUint,
    /// Bits that are x or z.
    pub unknown: BigUint,
    /// `'0`/`'1` style fill literal.
    pub fill: Option<char>,
}

impl Literal {
    pub fn has_unknown(&self) -> bool {
        !self.unknown.is_zero()
    }

    /// Width in bits as Verilog sizes it: declared, or 32 for unsized.
    pub fn bit_width(&self) -> u32 {
        self.width.unwrap_or(32)
    }
}

/// Decode the raw text of an integer literal. Real literals return `None`.
pub fn parse_literal(text: &str) -> Option<Literal> {
    let t: String = text.chars().filter(|c| *c != '_' && !c.is_whitespace()).collect();
    let Some(tick) = t.find('\'') else {
        if !t.chars().all(|c| c.is_ascii_digit()) || t.is_empty() {
            return None;
        }
        return Some(Literal {
            width: None,
            signed: true,
            base: 10,
            value: t.parse().ok()?,
            unknown: BigUint::zero(),
            fill: None,
        });
    };
    let width = if tick == 0 { None } else { Some(t[..tick].parse::<u32>().ok()?) };
    let mut rest = &t[tick + 1..];
    if rest.len() == 1 && matches!(rest, "0" | "1" | "x" | "X" | "z" | "Z") && width.is_none() {
        let c = rest.chars().next().unwrap().to_ascii_lowercase();
        return Some(Literal {
            width: None,
            signed: false,
            base: 2,
            value: BigUint::zero(),
            unknown: BigUint::zero(),
            fill: Some(c),
        });
    }
    let mut signed = false;
    if rest.starts_with(['s', 'S']) {
        signed = true;
        rest = &rest[1..];
    }
    let mut chars = rest.chars();
    let base = match chars.next()?.to_ascii_lowercase() {
        'b' => 2,
        'o' => 8,
        'd' => 10,
        'h' => 16,
        _ => return None,
    };
    let digits = chars.as_str();
    if digits.is_empty() {
        return None;
    }
    let bits_per = match base {
        2 => 1,
        8 => 3,
        16 => 4,
        _ => 0,
    };
    let mut value = BigUint::zero();
    let mut unknown = BigUint::zero();
    if base == 10 {
        if digits.len() == 1 && matches!(digits, "x" | "X" | "z" | "Z" | "?") {
            let w = width.unwrap_or(32);
            unknown = (BigUint::from(1u8) << w) - 1u8;
        } else {
            value = digits.parse().ok()?;
        }
    } else {
        let full = (1u32 << bits_per) - 1;
        for c in digits.chars() {
            value <<= bits_per;
            unknown <<= bits_per;
            match c.to_ascii_lowercase() {
                'x' | 'z' | '?' => unknown |= BigUint::from(full),
                d => {
                    let v = d.to_digit(base)?;
                    value |= BigUint::from(v);
                }
            }
        }
    }
    if let Some(w) = width {
        let mask = (BigUint::from(1u8) << w) - 1u8;
        value &= &mask;
        unknown &= &mask;
    }
    Some(Literal { width, signed, base, value, unknown, fill: None })
}

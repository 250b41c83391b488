//! Arithmetic terms over real variables, with two evaluators: an interval
//! enclosure (used by the narrowing operators) and a plain pointwise
//! evaluator (used by the brute-force oracles, deliberately sharing no code
//! with the interval path).

use crate::boxes::{BoxAssignment, Var, VarSet};
use crate::interval::{self, Interval};
use num_bigint::BigInt;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnaryFn {
    Sqrt,
    Abs,
    Sin,
    Cos,
    Exp,
    Log,
}

impl UnaryFn {
    pub fn name(&self) -> &'static str {
        match self {
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Abs => "abs",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
        }
    }

    pub fn from_name(s: &str) -> Option<UnaryFn> {
        Some(match s {
            "sqrt" => UnaryFn::Sqrt,
            "abs" => UnaryFn::Abs,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "exp" => UnaryFn::Exp,
            "log" => UnaryFn::Log,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    /// A decimal literal, kept with its spelling so printing and reparsing
    /// reproduce the same enclosure.
    Const { text: Arc<str>, value: Interval },
    Var(Var),
    Add(Arc<Term>, Arc<Term>),
    Sub(Arc<Term>, Arc<Term>),
    Mul(Arc<Term>, Arc<Term>),
    Div(Arc<Term>, Arc<Term>),
    Neg(Arc<Term>),
    Pow(Arc<Term>, i32),
    Fn(UnaryFn, Arc<Term>),
}

/// Result of interval evaluation: a range that contains every value the term
/// takes on the box, plus whether the term is guaranteed to be defined at
/// every point of the box. The range is empty exactly when the box is empty
/// or the term is defined nowhere on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Enclosure {
    pub range: Interval,
    pub defined_everywhere: bool,
}

impl Enclosure {
    fn total(range: Interval) -> Enclosure {
        Enclosure {
            range,
            defined_everywhere: true,
        }
    }
}

impl Term {
    /// Literal with the value semantics of its shortest decimal spelling
    /// (i.e. exactly what the parser would produce for that text).
    pub fn constant(v: f64) -> Arc<Term> {
        if v < 0.0 {
            return Arc::new(Term::Neg(Term::constant(-v)));
        }
        let text = format!("{}", v);
        let value = enclose_decimal(&text).expect("display form is a valid literal");
        Arc::new(Term::Const {
            text: text.into(),
            value,
        })
    }

    /// Literal denoting exactly the given machine number: the text is the
    /// full decimal expansion, so the enclosure is the point interval.
    pub fn constant_point(v: f64) -> Arc<Term> {
        if v < 0.0 {
            return Arc::new(Term::Neg(Term::constant_point(-v)));
        }
        let mut text = format!("{:.1079}", v);
        while text.ends_with('0') {
            text.pop();
        }
        if text.ends_with('.') {
            text.pop();
        }
        let value = enclose_decimal(&text).expect("expansion is a valid literal");
        debug_assert!(value.is_point() && value.lo() == v);
        Arc::new(Term::Const {
            text: text.into(),
            value,
        })
    }

    pub fn var(name: &str) -> Arc<Term> {
        Arc::new(Term::Var(Var::new(name)))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Term::Const { value, .. } if value.is_point() && value.lo() == 0.0)
    }

    pub fn collect_vars(&self, out: &mut VarSet) {
        match self {
            Term::Const { .. } => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Add(l, r) | Term::Sub(l, r) | Term::Mul(l, r) | Term::Div(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Term::Neg(t) | Term::Pow(t, _) | Term::Fn(_, t) => t.collect_vars(out),
        }
    }

    pub fn vars(&self) -> VarSet {
        let mut s = VarSet::new();
        self.collect_vars(&mut s);
        s
    }

    /// Interval enclosure of the term over a box. Partial functions evaluate
    /// on the intersection with their natural domain; the flag records when
    /// some point of the box may fall outside it.
    pub fn eval(&self, b: &BoxAssignment) -> Enclosure {
        if b.is_empty() {
            return Enclosure::total(interval::EMPTY);
        }
        match self {
            Term::Const { value, .. } => Enclosure::total(*value),
            Term::Var(v) => Enclosure::total(b.get(v)),
            Term::Add(l, r) => {
                let (x, y) = (l.eval(b), r.eval(b));
                Enclosure {
                    range: x.range.add(&y.range),
                    defined_everywhere: x.defined_everywhere && y.defined_everywhere,
                }
            }
            Term::Sub(l, r) => {
                let (x, y) = (l.eval(b), r.eval(b));
                Enclosure {
                    range: x.range.sub(&y.range),
                    defined_everywhere: x.defined_everywhere && y.defined_everywhere,
                }
            }
            Term::Mul(l, r) => {
                let (x, y) = (l.eval(b), r.eval(b));
                Enclosure {
                    range: x.range.mul(&y.range),
                    defined_everywhere: x.defined_everywhere && y.defined_everywhere,
                }
            }
            Term::Div(l, r) => {
                let (x, y) = (l.eval(b), r.eval(b));
                let defined =
                    x.defined_everywhere && y.defined_everywhere && !y.range.contains(0.0);
                Enclosure {
                    range: x.range.div(&y.range),
                    defined_everywhere: defined,
                }
            }
            Term::Neg(t) => {
                let x = t.eval(b);
                Enclosure {
                    range: x.range.neg(),
                    defined_everywhere: x.defined_everywhere,
                }
            }
            Term::Pow(t, n) => {
                let x = t.eval(b);
                let defined =
                    x.defined_everywhere && (*n >= 0 || !x.range.contains(0.0));
                Enclosure {
                    range: x.range.powi(*n),
                    defined_everywhere: defined,
                }
            }
            Term::Fn(f, t) => {
                let x = t.eval(b);
                match f {
                    UnaryFn::Abs => Enclosure {
                        range: x.range.abs(),
                        defined_everywhere: x.defined_everywhere,
                    },
                    UnaryFn::Sin => Enclosure {
                        range: x.range.sin(),
                        defined_everywhere: x.defined_everywhere,
                    },
                    UnaryFn::Cos => Enclosure {
                        range: x.range.cos(),
                        defined_everywhere: x.defined_everywhere,
                    },
                    UnaryFn::Exp => Enclosure {
                        range: x.range.exp(),
                        defined_everywhere: x.defined_everywhere,
                    },
                    UnaryFn::Sqrt => Enclosure {
                        range: x.range.sqrt(),
                        defined_everywhere: x.defined_everywhere
                            && !x.range.is_empty()
                            && x.range.lo() >= 0.0,
                    },
                    UnaryFn::Log => Enclosure {
                        range: x.range.ln(),
                        defined_everywhere: x.defined_everywhere
                            && !x.range.is_empty()
                            && x.range.lo() > 0.0,
                    },
                }
            }
        }
    }

    /// Plain floating-point evaluation at a point; NaN propagates from
    /// undefined applications and unbound variables.
    pub fn eval_point(&self, env: &BTreeMap<Var, f64>) -> f64 {
        match self {
            Term::Const { value, .. } => value.midpoint(),
            Term::Var(v) => env.get(v).copied().unwrap_or(f64::NAN),
            Term::Add(l, r) => l.eval_point(env) + r.eval_point(env),
            Term::Sub(l, r) => l.eval_point(env) - r.eval_point(env),
            Term::Mul(l, r) => l.eval_point(env) * r.eval_point(env),
            Term::Div(l, r) => {
                let d = r.eval_point(env);
                if d == 0.0 {
                    f64::NAN
                } else {
                    l.eval_point(env) / d
                }
            }
            Term::Neg(t) => -t.eval_point(env),
            Term::Pow(t, n) => t.eval_point(env).powi(*n),
            Term::Fn(f, t) => {
                let x = t.eval_point(env);
                match f {
                    UnaryFn::Sqrt => x.sqrt(),
                    UnaryFn::Abs => x.abs(),
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Log => x.ln(),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Add(..) | Term::Sub(..) => 1,
            Term::Mul(..) | Term::Div(..) => 2,
            Term::Neg(..) => 3,
            Term::Pow(..) => 4,
            Term::Const { .. } | Term::Var(..) | Term::Fn(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Term::Const { text, .. } => write!(f, "{}", text)?,
            Term::Var(v) => write!(f, "{}", v)?,
            Term::Add(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                r.fmt_prec(f, 2)?;
            }
            Term::Sub(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                r.fmt_prec(f, 2)?;
            }
            Term::Mul(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, " * ")?;
                r.fmt_prec(f, 3)?;
            }
            Term::Div(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, " / ")?;
                r.fmt_prec(f, 3)?;
            }
            Term::Neg(t) => {
                write!(f, "-")?;
                t.fmt_prec(f, 4)?;
            }
            Term::Pow(t, n) => {
                t.fmt_prec(f, 5)?;
                write!(f, "^{}", n)?;
            }
            Term::Fn(func, t) => {
                write!(f, "{}(", func.name())?;
                t.fmt_prec(f, 1)?;
                write!(f, ")")?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Tightest machine interval containing the real number a decimal literal
/// denotes (with optional sign and exponent). Exactly representable literals
/// give point intervals.
pub fn enclose_decimal(text: &str) -> Result<Interval, String> {
    let (neg, rest) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa_text, exp) = match rest.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = rest[i + 1..]
                .parse()
                .map_err(|_| format!("bad exponent in literal '{}'", text))?;
            (&rest[..i], e)
        }
        None => (rest, 0),
    };
    if exp.abs() > 20_000 {
        return Err(format!("exponent out of range in literal '{}'", text));
    }
    let (int_part, frac_part) = match mantissa_text.find('.') {
        Some(i) => (&mantissa_text[..i], &mantissa_text[i + 1..]),
        None => (mantissa_text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("malformed literal '{}'", text));
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(format!("malformed literal '{}'", text));
    }

    let digits: BigInt = format!("{}{}", int_part, frac_part)
        .parse()
        .map_err(|_| format!("malformed literal '{}'", text))?;
    let e10 = exp - frac_part.len() as i64;
    let v: f64 = text.parse().map_err(|_| format!("malformed literal '{}'", text))?;

    if v.is_infinite() {
        // magnitude beyond f64::MAX: the enclosure is half-open at infinity
        return Ok(if neg {
            Interval::new(f64::NEG_INFINITY, -f64::MAX)
        } else {
            Interval::new(f64::MAX, f64::INFINITY)
        });
    }

    use std::cmp::Ordering;
    let ord = cmp_decimal_to_f64(neg, &digits, e10, v);
    Ok(match ord {
        Ordering::Equal => Interval::point(v),
        Ordering::Greater => Interval::new(v, v.next_up()),
        Ordering::Less => Interval::new(v.next_down(), v),
    })
}

/// Compares the exact rational `(-1)^neg * digits * 10^e10` with the finite
/// float `v`, using integer arithmetic throughout.
fn cmp_decimal_to_f64(neg: bool, digits: &BigInt, e10: i64, v: f64) -> std::cmp::Ordering {
    use num_bigint::Sign;
    let signed_digits = if neg && digits.sign() != Sign::NoSign {
        -digits.clone()
    } else {
        digits.clone()
    };

    // v = mv * 2^e2 exactly
    let bits = v.abs().to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mv, e2) = if raw_exp == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1 << 52), raw_exp - 1075)
    };
    let mut rv = BigInt::from(mv);
    if v.is_sign_negative() {
        rv = -rv;
    }

    // clear negative exponents on both sides before comparing
    let a = (-e10).max(0) as u32;
    let b = (-e2).max(0) as u32;
    let lhs = signed_digits * BigInt::from(10).pow(e10.max(0) as u32) * BigInt::from(2).pow(b);
    let rhs = rv * BigInt::from(2).pow(e2.max(0) as u32) * BigInt::from(10).pow(a);
    lhs.cmp(&rhs)
}

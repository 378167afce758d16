//! Exact arithmetic in real quadratic fields.
//!
//! A [`Quadratic`] is a number `a + b·√D` with rational `a`, `b` and a fixed
//! square-free-or-not (but non-square) radicand `D`. Comparisons, floors and
//! fractional parts are decided exactly, which is what the Sturmian coder and
//! the circle partitions rely on: two cut points compare equal only when they
//! are symbolically identical.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quadratic {
    rational: BigRational,
    surd: BigRational,
    radicand: u64,
}

fn is_perfect_square(d: u64) -> bool {
    let r = d.sqrt();
    r * r == d
}

impl Quadratic {
    /// `(p + q·√D) / r`.
    pub fn new(p: i64, q: i64, radicand: u64, r: i64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidQuadratic("denominator r must be nonzero".into()));
        }
        let den = BigInt::from(r);
        if q == 0 || radicand == 0 {
            return Ok(Self::rational(BigRational::new(BigInt::from(p), den)));
        }
        if is_perfect_square(radicand) {
            let root = radicand.sqrt() as i64;
            let num = BigInt::from(p) + BigInt::from(q) * BigInt::from(root);
            return Ok(Self::rational(BigRational::new(num, den)));
        }
        Ok(Self {
            rational: BigRational::new(BigInt::from(p), den.clone()),
            surd: BigRational::new(BigInt::from(q), den),
            radicand,
        })
    }

    pub fn rational(value: BigRational) -> Self {
        Self {
            rational: value,
            surd: BigRational::zero(),
            radicand: 0,
        }
    }

    pub fn integer(value: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    /// True iff the number has a nonzero surd part, which certifies
    /// irrationality because the radicand is never a perfect square.
    pub fn is_irrational(&self) -> bool {
        !self.surd.is_zero()
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.surd
    }

    fn field(&self, other: &Self) -> u64 {
        match (self.surd.is_zero(), other.surd.is_zero()) {
            (true, _) => other.radicand,
            (_, true) => self.radicand,
            _ => {
                assert_eq!(
                    self.radicand, other.radicand,
                    "mixing quadratic fields Q(sqrt {}) and Q(sqrt {})",
                    self.radicand, other.radicand
                );
                self.radicand
            }
        }
    }

    fn normalized(mut self) -> Self {
        if self.surd.is_zero() {
            self.radicand = 0;
        }
        self
    }

    pub fn signum(&self) -> Ordering {
        let sa = self.rational.cmp(&BigRational::zero());
        let sb = self.surd.cmp(&BigRational::zero());
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        // Opposite signs: compare a^2 against b^2 D.
        let a2 = &self.rational * &self.rational;
        let b2d = &self.surd * &self.surd * BigRational::from_integer(BigInt::from(self.radicand));
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("radicand is not a perfect square"),
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.rational.to_f64().unwrap_or(f64::NAN);
        if self.surd.is_zero() {
            return a;
        }
        let b = self.surd.to_f64().unwrap_or(f64::NAN);
        a + b * (self.radicand as f64).sqrt()
    }

    pub fn floor(&self) -> BigInt {
        let mut guess = BigInt::from(self.to_f64().floor() as i64);
        loop {
            let g = Self::rational(BigRational::from_integer(guess.clone()));
            if *self < g {
                guess -= 1;
                continue;
            }
            let g1 = Self::rational(BigRational::from_integer(&guess + 1));
            if *self >= g1 {
                guess += 1;
                continue;
            }
            return guess;
        }
    }

    /// Fractional part, the representative of `self mod 1` in `[0, 1)`.
    pub fn fract(&self) -> Self {
        let fl = self.floor();
        self.clone() - Self::rational(BigRational::from_integer(fl))
    }

    pub fn scale(&self, factor: i64) -> Self {
        let f = BigRational::from_integer(BigInt::from(factor));
        Self {
            rational: &self.rational * &f,
            surd: &self.surd * &f,
            radicand: self.radicand,
        }
        .normalized()
    }
}

impl Add for Quadratic {
    type Output = Quadratic;
    fn add(self, rhs: Self) -> Self {
        let radicand = self.field(&rhs);
        Self {
            rational: self.rational + rhs.rational,
            surd: self.surd + rhs.surd,
            radicand,
        }
        .normalized()
    }
}

impl Sub for Quadratic {
    type Output = Quadratic;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for Quadratic {
    type Output = Quadratic;
    fn neg(self) -> Self {
        Self {
            rational: -self.rational,
            surd: -self.surd,
            radicand: self.radicand,
        }
    }
}

impl Mul for Quadratic {
    type Output = Quadratic;
    fn mul(self, rhs: Self) -> Self {
        let radicand = self.field(&rhs);
        let d = BigRational::from_integer(BigInt::from(radicand));
        Self {
            rational: &self.rational * &rhs.rational + &self.surd * &rhs.surd * d,
            surd: &self.rational * &rhs.surd + &self.surd * &rhs.rational,
            radicand,
        }
        .normalized()
    }
}

impl PartialOrd for Quadratic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quadratic {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum()
    }
}

impl fmt::Display for Quadratic {
    /// Canonical `p+q*sqrt(D)/r` form with a common denominator.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = num_integer::Integer::lcm(self.rational.denom(), self.surd.denom());
        let p = self.rational.numer() * (&den / self.rational.denom());
        let q = self.surd.numer() * (&den / self.surd.denom());
        if q.is_zero() {
            if den.is_one() {
                write!(f, "{p}")
            } else {
                write!(f, "{p}/{den}")
            }
        } else {
            let sign = if q.is_negative() { '-' } else { '+' };
            write!(f, "{p}{sign}{}*sqrt({})/{den}", q.abs(), self.radicand)
        }
    }
}

fn parse_int(s: &str, whole: &str) -> Result<i64> {
    s.parse::<i64>()
        .map_err(|_| Error::InvalidQuadratic(format!("cannot parse integer {s:?} in {whole:?}")))
}

impl FromStr for Quadratic {
    type Err = Error;

    /// Accepts `p`, `p/r`, `p+q*sqrt(D)/r`, `(p+q*sqrt(D))/r`, and the
    /// obvious variants with omitted `p`, `q` or `r`.
    fn from_str(input: &str) -> Result<Self> {
        let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::InvalidQuadratic("empty expression".into()));
        }
        let (body, r) = match s.rfind('/') {
            Some(pos) if !s[pos + 1..].contains(')') => {
                (s[..pos].to_string(), parse_int(&s[pos + 1..], input)?)
            }
            _ => (s.clone(), 1),
        };
        let body = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .map(str::to_string)
            .unwrap_or(body);
        let Some(sq) = body.find("sqrt(") else {
            return Quadratic::new(parse_int(&body, input)?, 0, 0, r);
        };
        let close = body[sq..]
            .find(')')
            .map(|c| c + sq)
            .ok_or_else(|| Error::InvalidQuadratic(format!("unclosed sqrt in {input:?}")))?;
        if close + 1 != body.len() {
            return Err(Error::InvalidQuadratic(format!(
                "unexpected text after sqrt(..) in {input:?}"
            )));
        }
        let d = body[sq + 5..close]
            .parse::<u64>()
            .map_err(|_| Error::InvalidQuadratic(format!("bad radicand in {input:?}")))?;
        let head = &body[..sq];
        let head = head.strip_suffix('*').unwrap_or(head);
        // Split the head into the rational term and the coefficient of the surd.
        let split = head
            .char_indices()
            .skip(1)
            .filter(|(_, c)| *c == '+' || *c == '-')
            .map(|(i, _)| i)
            .last();
        let (p_str, q_str) = match split {
            Some(i) => (&head[..i], &head[i..]),
            None => ("0", head),
        };
        let q = match q_str {
            "" | "+" => 1,
            "-" => -1,
            other => parse_int(other.strip_prefix('+').unwrap_or(other), input)?,
        };
        let p = parse_int(p_str, input)?;
        Quadratic::new(p, q, d, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Quadratic {
        Quadratic::new(1, 1, 5, 2).unwrap()
    }

    #[test]
    fn comparisons_are_exact() {
        let phi = golden();
        assert!(phi > Quadratic::integer(1));
        assert!(phi < Quadratic::integer(2));
        // phi^2 = phi + 1 exactly.
        assert_eq!(phi.clone() * phi.clone(), phi.clone() + Quadratic::one());
        let theta = Quadratic::integer(2) - phi;
        assert_eq!(theta, Quadratic::new(3, -1, 5, 2).unwrap());
        assert!(theta.is_irrational());
    }

    #[test]
    fn floor_and_fract() {
        let theta = Quadratic::new(3, -1, 5, 2).unwrap();
        for n in -50i64..50 {
            let x = theta.scale(n);
            let expected = (n as f64 * theta.to_f64()).floor() as i64;
            assert_eq!(x.floor(), BigInt::from(expected), "n = {n}");
            let fr = x.fract();
            assert!(fr >= Quadratic::zero() && fr < Quadratic::one());
        }
        assert_eq!(Quadratic::integer(-3).floor(), BigInt::from(-3));
    }

    #[test]
    fn perfect_square_radicand_folds_to_rational() {
        let q = Quadratic::new(1, 2, 9, 7).unwrap();
        assert!(!q.is_irrational());
        assert_eq!(q, Quadratic::rational(BigRational::new(7.into(), 7.into())));
    }

    #[test]
    fn parse_forms() {
        let theta = Quadratic::new(3, -1, 5, 2).unwrap();
        assert_eq!("3-1*sqrt(5)/2".parse::<Quadratic>().unwrap(), theta);
        assert_eq!("(3-sqrt(5))/2".parse::<Quadratic>().unwrap(), theta);
        assert_eq!("3 - sqrt(5) / 2".parse::<Quadratic>().unwrap(), theta);
        assert_eq!("0".parse::<Quadratic>().unwrap(), Quadratic::zero());
        assert_eq!("1/2".parse::<Quadratic>().unwrap().to_f64(), 0.5);
        assert_eq!(
            "sqrt(2)".parse::<Quadratic>().unwrap(),
            Quadratic::new(0, 1, 2, 1).unwrap()
        );
        assert_eq!(
            "-2*sqrt(3)/5".parse::<Quadratic>().unwrap(),
            Quadratic::new(0, -2, 3, 5).unwrap()
        );
        assert!("1+sqrt(x)".parse::<Quadratic>().is_err());
        assert!("".parse::<Quadratic>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for q in [
            Quadratic::new(3, -1, 5, 2).unwrap(),
            Quadratic::new(-7, 4, 13, 3).unwrap(),
            Quadratic::new(5, 0, 0, 4).unwrap(),
            Quadratic::integer(-2),
        ] {
            assert_eq!(q.to_string().parse::<Quadratic>().unwrap(), q);
        }
    }
}

use std::fmt;
use std::str::FromStr;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact complex number `re + i·im` with rational parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Self::real(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::real(BigRational::new(num.into(), den.into()))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    /// `i^n`.
    pub fn i_pow(n: u32) -> Self {
        match n % 4 {
            0 => Self::int(1),
            1 => Self::i(),
            2 => Self::int(-1),
            _ => -Self::i(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(Self::new(&self.re / &n, -&self.im / &n))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self::new(&self.re * q, &self.im * q)
    }

    pub fn to_complex(&self) -> Complex64 {
        let f = |q: &BigRational| q.to_f64().unwrap_or(f64::NAN);
        Complex64::new(f(&self.re), f(&self.im))
    }
}

impl From<i64> for GaussRat {
    fn from(n: i64) -> Self {
        Self::int(n)
    }
}

impl Add for &GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        &self + &o
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, o: &GaussRat) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl Sub for &GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, o: GaussRat) -> GaussRat {
        &self * &o
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re, -self.im)
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "({} {sign} {}i)", self.re, self.im.abs())
            }
        }
    }
}

/// Parses a rational (`3`, `-1/2`) or a rational multiple of `i` (`2/3i`, `-i`).
impl FromStr for GaussRat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        let s = s.trim();
        let bad = || crate::error::Error::InvalidInput(format!("not a Gaussian rational: `{s}`"));
        let (body, imaginary) = match s.strip_suffix('i') {
            Some(b) => (b.trim(), true),
            None => (s, false),
        };
        let q: BigRational = match body {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            b => b.parse().map_err(|_| bad())?,
        };
        Ok(if imaginary {
            Self::new(BigRational::zero(), q)
        } else {
            Self::real(q)
        })
    }
}

/// JSON integers when they fit in `i64`, decimal strings otherwise.
fn int_to_json(n: &BigInt) -> serde_json::Value {
    match n.to_i64() {
        Some(v) => v.into(),
        None => n.to_string().into(),
    }
}

fn int_from_json(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

#[derive(Serialize, Deserialize)]
struct GaussRatJson {
    re: [serde_json::Value; 2],
    im: [serde_json::Value; 2],
}

impl Serialize for GaussRat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pair = |q: &BigRational| [int_to_json(q.numer()), int_to_json(q.denom())];
        GaussRatJson {
            re: pair(&self.re),
            im: pair(&self.im),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GaussRatJson::deserialize(d)?;
        let rat = |p: &[serde_json::Value; 2]| -> Result<BigRational, D::Error> {
            let num = int_from_json(&p[0]).ok_or_else(|| D::Error::custom("bad numerator"))?;
            let den = int_from_json(&p[1]).ok_or_else(|| D::Error::custom("bad denominator"))?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            Ok(BigRational::new(num, den))
        };
        Ok(GaussRat::new(rat(&j.re)?, rat(&j.im)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse() {
        assert_eq!("-1/2".parse::<GaussRat>().unwrap(), GaussRat::ratio(-1, 2));
        assert_eq!("-i".parse::<GaussRat>().unwrap(), -GaussRat::i());
        assert_eq!("2/3i".parse::<GaussRat>().unwrap(), &GaussRat::ratio(2, 3) * &GaussRat::i());
        assert!("x".parse::<GaussRat>().is_err());
    }

    #[test]
    fn field_arithmetic() {
        let a = GaussRat::new(BigRational::new(1.into(), 2.into()), BigRational::from_integer(3.into()));
        let b = a.inv().unwrap();
        assert!((&a * &b).is_one());
        assert_eq!(&GaussRat::i() * &GaussRat::i(), GaussRat::int(-1));
        assert_eq!(GaussRat::i_pow(7), -GaussRat::i());
        assert!(GaussRat::zero().inv().is_none());
    }

    #[test]
    fn json_round_trip() {
        let big = BigInt::from(10).pow(30);
        let a = GaussRat::new(BigRational::new(big, 7.into()), BigRational::new((-2).into(), 3.into()));
        let s = serde_json::to_string(&a).unwrap();
        let b: GaussRat = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        let c: GaussRat = serde_json::from_str(r#"{"re":[1,2],"im":[0,1]}"#).unwrap();
        assert_eq!(c, GaussRat::ratio(1, 2));
    }
}

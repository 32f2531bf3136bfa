//! Exact dyadic rationals `m * 2^e` and fraction-free determinants.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact value `mant * 2^exp`. Not normalized; comparisons align exponents.
#[derive(Clone, Debug)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic { mant: BigInt::from(v), exp: 0 }
    }

    pub fn pow2(e: i64) -> Self {
        Dyadic { mant: BigInt::one(), exp: e }
    }

    /// Exact value of a finite binary64.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite value {x} has no dyadic form")));
        }
        let (m, e, s) = Float::integer_decode(x);
        let mut mant = BigInt::from(m);
        if s < 0 {
            mant = -mant;
        }
        Ok(Dyadic { mant, exp: e as i64 })
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Multiply by `2^k` exactly.
    pub fn scale2(&self, k: i64) -> Self {
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        if a.exp == b.exp {
            (a.mant.clone(), b.mant.clone(), a.exp)
        } else if a.exp > b.exp {
            (&a.mant << (a.exp - b.exp) as usize, b.mant.clone(), b.exp)
        } else {
            (a.mant.clone(), &b.mant << (b.exp - a.exp) as usize, a.exp)
        }
    }

    /// Natural log of a positive value.
    pub fn ln(&self) -> f64 {
        if self.signum() <= 0 {
            return f64::NAN;
        }
        let bits = self.mant.bits() as i64;
        let shift = (bits - 64).max(0);
        let top = (&self.mant >> shift as usize).to_u64().unwrap_or(u64::MAX);
        (top as f64).ln() + (shift + self.exp) as f64 * std::f64::consts::LN_2
    }

    /// Nearest binary64 (may overflow to infinity).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let shift = (bits - 64).max(0);
        let top = (&self.mant.abs() >> shift as usize).to_u64().unwrap_or(u64::MAX) as f64;
        let v = top * pow2_f64(shift + self.exp);
        if self.signum() < 0 {
            -v
        } else {
            v
        }
    }

    /// Drop trailing zero bits of the mantissa.
    pub fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        if let Some(tz) = self.mant.trailing_zeros() {
            if tz > 0 {
                self.mant >>= tz as usize;
                self.exp += tz as i64;
            }
        }
    }

    /// Number of significant bits after normalization.
    pub fn significant_bits(&self) -> u64 {
        let mut c = self.clone();
        c.normalize();
        c.mant.bits()
    }
}

fn pow2_f64(e: i64) -> f64 {
    if e > 2000 {
        f64::INFINITY
    } else if e < -2000 {
        0.0
    } else {
        // split to avoid intermediate overflow/underflow in powi
        let h = e / 2;
        2f64.powi(h as i32) * 2f64.powi((e - h) as i32)
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::aligned(self, other);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut c = self.clone();
        c.normalize();
        write!(f, "{}*2^{}", c.mant, c.exp)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = Dyadic::aligned(self, rhs);
        Dyadic { mant: a + b, exp: e }
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -self.mant, exp: self.exp }
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic { mant: &self.mant * &rhs.mant, exp: self.exp + rhs.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl MulAssign<&Dyadic> for Dyadic {
    fn mul_assign(&mut self, rhs: &Dyadic) {
        self.mant *= &rhs.mant;
        self.exp += rhs.exp;
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |a, b| &a + &b)
    }
}

impl std::iter::Product for Dyadic {
    fn product<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::one(), |a, b| &a * &b)
    }
}

/// Determinant of a square matrix of dyadics, exact (Bareiss on a common exponent).
pub fn determinant(rows: &[Vec<Dyadic>]) -> Dyadic {
    let r = rows.len();
    if r == 0 {
        return Dyadic::one();
    }
    assert!(rows.iter().all(|row| row.len() == r), "determinant needs a square matrix");
    let e0 = rows.iter().flatten().filter(|d| !d.is_zero()).map(|d| d.exp).min().unwrap_or(0);
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|d| if d.is_zero() { BigInt::zero() } else { &d.mant << (d.exp - e0) as usize })
                .collect()
        })
        .collect();
    let det = bareiss(&mut m);
    Dyadic { mant: det, exp: e0 * r as i64 }
}

fn bareiss(m: &mut [Vec<BigInt>]) -> BigInt {
    let n = m.len();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

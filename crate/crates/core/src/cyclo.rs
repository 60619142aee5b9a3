//! Exact arithmetic in cyclotomic fields.
//!
//! An element of `Q(zeta_n)` is stored as its residue modulo the cyclotomic
//! polynomial `Phi_n`: a dense vector of `phi(n)` rational coefficients in the
//! power basis `1, zeta_n, ..., zeta_n^(phi(n)-1)`. That representation is
//! canonical inside a fixed conductor, so equality is coefficient-wise once
//! both sides live in the same field.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::arith::{divisors, euler_phi, gcd, lcm, rem_euclid, units_mod};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycloError {
    #[error("conductor must be positive")]
    ZeroConductor,
    #[error("galois exponent {j} is not a unit modulo {n}")]
    NotAutomorphism { j: i64, n: u64 },
    #[error("cannot lift conductor {from} to {to}: {from} does not divide {to}")]
    NotDivisor { from: u64, to: u64 },
}

/// Monic `Phi_n` with its nonzero non-leading terms kept for reduction.
#[derive(Debug)]
struct CyclotomicPoly {
    degree: usize,
    coeffs: Vec<BigInt>,
    tail: Vec<(usize, BigInt)>,
}

fn phi_table() -> &'static RwLock<HashMap<u64, Arc<CyclotomicPoly>>> {
    static TABLE: OnceLock<RwLock<HashMap<u64, Arc<CyclotomicPoly>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cyclotomic_poly(n: u64) -> Arc<CyclotomicPoly> {
    if let Some(p) = phi_table().read().expect("phi table poisoned").get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by every Phi_d with d a proper divisor of n.
    let mut num: Vec<BigInt> = vec![BigInt::zero(); n as usize + 1];
    num[0] = BigInt::from(-1);
    num[n as usize] = BigInt::one();
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let div = cyclotomic_poly(d);
        num = divide_monic(&num, &div.coeffs);
    }
    let degree = num.len() - 1;
    debug_assert_eq!(degree as u64, euler_phi(n));
    let tail = num[..degree]
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i, c.clone()))
        .collect();
    let poly = Arc::new(CyclotomicPoly {
        degree,
        coeffs: num,
        tail,
    });
    phi_table()
        .write()
        .expect("phi table poisoned")
        .entry(n)
        .or_insert(poly)
        .clone()
}

/// Exact quotient of `num` by a monic `den`; the remainder must vanish.
fn divide_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dd = den.len() - 1;
    let mut rem = num.to_vec();
    let mut quot = vec![BigInt::zero(); num.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= &c * dj;
        }
        quot[i] = c;
    }
    debug_assert!(rem.iter().all(Zero::is_zero));
    quot
}

/// Reduce a vector of exponent coefficients (any length) modulo `Phi_n`.
fn reduce(n: u64, mut v: Vec<Rational>) -> Vec<Rational> {
    let poly = cyclotomic_poly(n);
    let deg = poly.degree;
    // Fold exponents >= n back using zeta^n = 1.
    let n_us = n as usize;
    if v.len() > n_us {
        let extra: Vec<Rational> = v.drain(n_us..).collect();
        for (i, c) in extra.into_iter().enumerate() {
            v[(n_us + i) % n_us] += c;
        }
    }
    for i in (deg..v.len()).rev() {
        if v[i].is_zero() {
            continue;
        }
        let c = std::mem::replace(&mut v[i], Rational::zero());
        for (j, a) in &poly.tail {
            let term = &c * Rational::from_integer(a.clone());
            v[i - deg + j] -= term;
        }
    }
    v.resize(deg, Rational::zero());
    v
}

fn root_trace_table() -> &'static RwLock<HashMap<u64, Arc<Vec<Rational>>>> {
    static TABLE: OnceLock<RwLock<HashMap<u64, Arc<Vec<Rational>>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `Tr(zeta_m^e)` over `Q(zeta_m)` for every `e` in `0..m`, memoized.
fn root_traces(m: u64) -> Arc<Vec<Rational>> {
    if let Some(t) = root_trace_table().read().expect("trace table poisoned").get(&m) {
        return t.clone();
    }
    let t: Vec<Rational> = (0..m as i64)
        .map(|e| CyclotomicNumber::root(m, e).trace())
        .collect();
    root_trace_table()
        .write()
        .expect("trace table poisoned")
        .entry(m)
        .or_insert(Arc::new(t))
        .clone()
}

/// An exact element of the cyclotomic field `Q(zeta_n)`.
#[derive(Clone, Debug)]
pub struct CyclotomicNumber {
    conductor: u64,
    coeffs: Vec<Rational>,
}

impl CyclotomicNumber {
    /// `zeta_n^e`; `e` is taken modulo `n`.
    pub fn root(n: u64, e: i64) -> Self {
        assert!(n >= 1, "conductor must be positive");
        let mut v = vec![Rational::zero(); n as usize];
        v[rem_euclid(e, n) as usize] = Rational::one();
        Self {
            conductor: n,
            coeffs: reduce(n, v),
        }
    }

    pub fn rational(q: Rational) -> Self {
        Self {
            conductor: 1,
            coeffs: vec![q],
        }
    }

    pub fn integer(i: i64) -> Self {
        Self::rational(Rational::from_integer(BigInt::from(i)))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    /// Builds `sum q_i * zeta_n^(e_i)`.
    pub fn from_terms<'a, I>(n: u64, terms: I) -> Result<Self, CycloError>
    where
        I: IntoIterator<Item = (&'a Rational, i64)>,
    {
        if n == 0 {
            return Err(CycloError::ZeroConductor);
        }
        let mut v = vec![Rational::zero(); n as usize];
        for (q, e) in terms {
            v[rem_euclid(e, n) as usize] += q;
        }
        Ok(Self {
            conductor: n,
            coeffs: reduce(n, v),
        })
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// Coefficients in the power basis of `Q(zeta_n)`, length `phi(n)`.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().skip(1).all(Zero::is_zero)
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.is_rational().then(|| self.coeffs[0].clone())
    }

    /// True when the value is a rational integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational()
            .filter(|q| q.is_integer())
            .map(|q| q.to_integer())
    }

    /// True when every power-basis coefficient is integral. Since `Z[zeta_n]`
    /// has the power basis as a Z-basis, this is exactly algebraic integrality.
    pub fn is_algebraic_integer(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// Same element represented in `Q(zeta_m)`; requires `conductor | m`.
    pub fn lift(&self, m: u64) -> Result<Self, CycloError> {
        if m == 0 || !m.is_multiple_of(self.conductor) {
            return Err(CycloError::NotDivisor {
                from: self.conductor,
                to: m,
            });
        }
        if m == self.conductor {
            return Ok(self.clone());
        }
        let step = (m / self.conductor) as usize;
        let mut v = vec![Rational::zero(); m as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                v[i * step] = c.clone();
            }
        }
        Ok(Self {
            conductor: m,
            coeffs: reduce(m, v),
        })
    }

    /// The automorphism `zeta_n -> zeta_n^j`.
    pub fn galois(&self, j: i64) -> Result<Self, CycloError> {
        let n = self.conductor;
        let jr = rem_euclid(j, n);
        if gcd(jr, n) != 1 {
            return Err(CycloError::NotAutomorphism { j, n });
        }
        let mut v = vec![Rational::zero(); n as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                v[(i as u64 * jr % n) as usize] += c;
            }
        }
        Ok(Self {
            conductor: n,
            coeffs: reduce(n, v),
        })
    }

    /// Complex conjugate, i.e. the automorphism `zeta -> zeta^-1`.
    pub fn conj(&self) -> Self {
        self.galois(-1).expect("-1 is always a unit")
    }

    /// Trace from `Q(zeta_n)` to `Q`, the sum of all Galois conjugates, where
    /// `n` is the stored conductor.
    pub fn trace(&self) -> Rational {
        let n = self.conductor;
        // Sum the conjugates as exponent vectors and reduce once.
        let mut v = vec![Rational::zero(); n as usize];
        for j in units_mod(n) {
            for (i, c) in self.coeffs.iter().enumerate() {
                if !c.is_zero() {
                    v[(i as u64 * j % n) as usize] += c;
                }
            }
        }
        let r = reduce(n, v);
        debug_assert!(r.iter().skip(1).all(Zero::is_zero));
        r.into_iter().next().expect("phi(n) >= 1")
    }

    /// `Tr_{Q(zeta_m)/Q}(self * zeta_m^shift)` for a multiple `m` of the
    /// conductor. Uses linearity over memoized traces of single roots, so it
    /// avoids building the product in `Q(zeta_m)`.
    pub fn twisted_trace(&self, m: u64, shift: i64) -> Result<Rational, CycloError> {
        if m == 0 || !m.is_multiple_of(self.conductor) {
            return Err(CycloError::NotDivisor {
                from: self.conductor,
                to: m,
            });
        }
        let table = root_traces(m);
        let step = m / self.conductor;
        let s = rem_euclid(shift, m);
        let mut acc = Rational::zero();
        for (c, i) in self.terms() {
            acc += c * &table[((i as u64 * step + s) % m) as usize];
        }
        Ok(acc)
    }

    /// Multiply by `zeta_n^e` in the current conductor.
    pub fn mul_root(&self, e: i64) -> Self {
        let n = self.conductor;
        let s = rem_euclid(e, n);
        let mut v = vec![Rational::zero(); n as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                v[((i as u64 + s) % n) as usize] = c.clone();
            }
        }
        Self {
            conductor: n,
            coeffs: reduce(n, v),
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
    }

    /// Nonzero `(coefficient, exponent)` pairs of the power-basis expansion.
    pub fn terms(&self) -> impl Iterator<Item = (&Rational, usize)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (c, i))
    }

    fn aligned(a: &Self, b: &Self) -> (Self, Self) {
        let m = lcm(a.conductor, b.conductor);
        (
            a.lift(m).expect("lcm is a multiple"),
            b.lift(m).expect("lcm is a multiple"),
        )
    }
}

impl PartialEq for CyclotomicNumber {
    fn eq(&self, other: &Self) -> bool {
        if self.conductor == other.conductor {
            return self.coeffs == other.coeffs;
        }
        let (a, b) = Self::aligned(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CyclotomicNumber {}

impl<'a> Add<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn add(self, rhs: &'a CyclotomicNumber) -> CyclotomicNumber {
        let (mut a, b) = CyclotomicNumber::aligned(self, rhs);
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs) {
            *x += y;
        }
        a
    }
}

impl Add for CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn neg(self) -> Self {
        -&self
    }
}

impl<'a> Sub<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn sub(self, rhs: &'a CyclotomicNumber) -> CyclotomicNumber {
        self + &(-rhs)
    }
}

impl Sub for CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl<'a> Mul<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn mul(self, rhs: &'a CyclotomicNumber) -> CyclotomicNumber {
        let (a, b) = CyclotomicNumber::aligned(self, rhs);
        let n = a.conductor;
        let mut v = vec![Rational::zero(); n as usize];
        for (x, i) in a.terms() {
            for (y, j) in b.terms() {
                v[(i + j) % n as usize] += x * y;
            }
        }
        CyclotomicNumber {
            conductor: n,
            coeffs: reduce(n, v),
        }
    }
}

impl Mul for CyclotomicNumber {
    type Output = CyclotomicNumber;

    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return write!(f, "{q}");
        }
        let mut first = true;
        for (c, e) in self.terms() {
            let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let zeta = match e {
                0 => String::new(),
                1 => format!("E({})", self.conductor),
                _ => format!("E({})^{e}", self.conductor),
            };
            match (mag.is_one(), e) {
                (true, 0) => write!(f, "{sign}1")?,
                (true, _) => write!(f, "{sign}{zeta}")?,
                (false, 0) => write!(f, "{sign}{mag}")?,
                (false, _) => write!(f, "{sign}{mag}*{zeta}")?,
            }
            first = false;
        }
        Ok(())
    }
}

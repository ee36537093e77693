//! Exact arithmetic in `F0 = Q_p` and in its unramified quadratic extension
//! `F = F0(δ)` with `δ² = ε`, plus a truncated fallback used for norm equations.
//!
//! Elements are stored as pairs of rationals. Any rational is accepted; its
//! p-adic valuation is `v_p(numerator) - v_p(denominator)`, which is exact.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc = 1u128 % m128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

fn is_nonresidue(e: i64, p: u64) -> bool {
    let r = e.rem_euclid(p as i64) as u64;
    r != 0 && pow_mod(r, (p - 1) / 2, p) == p - 1
}

/// Residue characteristic, the non-square `ε` with `δ² = ε`, and the
/// working precision `N` for truncated elements. `q = p` and `ϖ = p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PrimeConfig {
    pub p: u64,
    pub epsilon: i64,
    pub precision: u32,
}

impl PrimeConfig {
    pub fn new(p: u64, epsilon: i64, precision: u32) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::InvalidConfig(format!("p = {p} is not an odd prime")));
        }
        if !is_nonresidue(epsilon, p) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {epsilon} is not a non-square mod {p}"
            )));
        }
        if precision == 0 {
            return Err(Error::InvalidConfig("precision must be positive".into()));
        }
        Ok(PrimeConfig { p, epsilon, precision })
    }

    /// Uses the smallest positive non-residue and precision 32.
    pub fn for_prime(p: u64) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::InvalidConfig(format!("p = {p} is not an odd prime")));
        }
        let epsilon = (2..p as i64)
            .find(|&e| is_nonresidue(e, p))
            .expect("odd primes have non-residues");
        Self::new(p, epsilon, 32)
    }

    pub fn with_precision(self, precision: u32) -> Result<Self> {
        Self::new(self.p, self.epsilon, precision)
    }

    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }
}

impl Default for PrimeConfig {
    fn default() -> Self {
        PrimeConfig { p: 3, epsilon: 2, precision: 32 }
    }
}

/// Valuation with a distinguished value for zero. `Finite(_) < Infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Valuation::Infinity
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

pub fn vp_bigint(n: &BigInt, p: u64) -> u64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

pub fn vp_rational(r: &Rational, p: u64) -> Valuation {
    if r.is_zero() {
        return Valuation::Infinity;
    }
    Valuation::Finite(vp_bigint(r.numer(), p) as i64 - vp_bigint(r.denom(), p) as i64)
}

pub(crate) fn mod_inv(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Residue of a p-integral rational modulo `m = p^k`.
pub(crate) fn rational_mod(r: &Rational, m: &BigInt) -> Option<BigInt> {
    let inv = mod_inv(r.denom(), m)?;
    Some((r.numer() * inv).mod_floor(m))
}

/// `x + yδ`. Operations between elements built from different configs panic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    x: Rational,
    y: Rational,
    cfg: PrimeConfig,
}

impl FieldElement {
    pub fn new(x: Rational, y: Rational, cfg: PrimeConfig) -> Self {
        FieldElement { x, y, cfg }
    }

    pub fn from_rational(x: Rational, cfg: PrimeConfig) -> Self {
        Self::new(x, Rational::zero(), cfg)
    }

    pub fn from_int(n: i64, cfg: PrimeConfig) -> Self {
        Self::from_rational(int(n), cfg)
    }

    pub fn zero(cfg: PrimeConfig) -> Self {
        Self::from_int(0, cfg)
    }

    pub fn one(cfg: PrimeConfig) -> Self {
        Self::from_int(1, cfg)
    }

    pub fn delta(cfg: PrimeConfig) -> Self {
        Self::new(Rational::zero(), Rational::one(), cfg)
    }

    /// `ϖ^k = p^k`, any sign of `k`.
    pub fn p_power(k: i64, cfg: PrimeConfig) -> Self {
        let pk = num_traits::pow(cfg.p_big(), k.unsigned_abs() as usize);
        let r = if k >= 0 {
            Rational::from_integer(pk)
        } else {
            Rational::new(BigInt::one(), pk)
        };
        Self::from_rational(r, cfg)
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }

    pub fn config(&self) -> PrimeConfig {
        self.cfg
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.x.is_one() && self.y.is_zero()
    }

    /// True when the element lies in `F0`.
    pub fn is_base(&self) -> bool {
        self.y.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.x.clone(), -self.y.clone(), self.cfg)
    }

    pub fn norm_rational(&self) -> Rational {
        &self.x * &self.x - Rational::from_integer(self.cfg.epsilon.into()) * &self.y * &self.y
    }

    pub fn norm(&self) -> Self {
        Self::from_rational(self.norm_rational(), self.cfg)
    }

    pub fn trace(&self) -> Self {
        Self::from_rational(&self.x + &self.x, self.cfg)
    }

    pub fn val(&self) -> Valuation {
        let vx = vp_rational(&self.x, self.cfg.p);
        let vy = vp_rational(&self.y, self.cfg.p);
        vx.min(vy)
    }

    /// Valuation as an integer; zero is rejected.
    pub fn val_finite(&self) -> Result<i64> {
        self.val()
            .finite()
            .ok_or_else(|| Error::InvalidInput("valuation of zero requested".into()))
    }

    pub fn is_integral(&self) -> bool {
        self.val() >= Valuation::Finite(0)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm_rational();
        Ok(Self::new(&self.x / &n, -&self.y / &n, self.cfg))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one(self.cfg);
        for _ in 0..k.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(&self.x * r, &self.y * r, self.cfg)
    }

    /// `(-1)^val(a)` for `a` in `F0^×`.
    pub fn eta(&self) -> Result<i8> {
        if !self.is_base() {
            return Err(Error::InvalidInput("eta is defined on F0 only".into()));
        }
        match self.val() {
            Valuation::Infinity => Err(Error::InvalidInput("eta of zero".into())),
            Valuation::Finite(v) => Ok(if v.rem_euclid(2) == 0 { 1 } else { -1 }),
        }
    }

    /// Parses `a`, `a+b*d`, `b*d` or `d` where `d` stands for δ and the
    /// coefficients are rationals such as `3/4`.
    pub fn parse(text: &str, cfg: PrimeConfig) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty field element".into()));
        }
        let mut x = Rational::zero();
        let mut y = Rational::zero();
        for (neg, term) in split_signed_terms(&s) {
            if term.is_empty() {
                return Err(Error::Parse(format!("dangling sign in {text:?}")));
            }
            let (is_delta, coeff) = match term.strip_suffix('d') {
                Some(rest) => (true, rest.strip_suffix('*').unwrap_or(rest)),
                None => (false, term),
            };
            let mut c = if coeff.is_empty() {
                if !is_delta {
                    return Err(Error::Parse(format!("bad term in {text:?}")));
                }
                Rational::one()
            } else {
                Rational::from_str(coeff)
                    .map_err(|_| Error::Parse(format!("bad rational {coeff:?} in {text:?}")))?
            };
            if neg {
                c = -c;
            }
            if is_delta {
                y += c;
            } else {
                x += c;
            }
        }
        Ok(Self::new(x, y, cfg))
    }
}

/// Splits `a+b-c` into signed pieces; a sign directly after `^` or `/` is part
/// of the piece.
pub(crate) fn split_signed_terms(s: &str) -> Vec<(bool, &str)> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut neg = false;
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        neg = bytes[i] == b'-';
        i += 1;
        start = i;
    }
    while i < bytes.len() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && i > start && bytes[i - 1] != b'^' && bytes[i - 1] != b'/' {
            out.push((neg, &s[start..i]));
            neg = c == b'-';
            start = i + 1;
        }
        i += 1;
    }
    out.push((neg, &s[start..]));
    out
}

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ypart = |y: &Rational| {
            if y.is_one() {
                "d".to_string()
            } else {
                format!("{}*d", fmt_rational(y))
            }
        };
        match (self.x.is_zero(), self.y.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.x)),
            (true, false) => {
                if self.y.is_negative() {
                    write!(f, "-{}", ypart(&-self.y.clone()))
                } else {
                    write!(f, "{}", ypart(&self.y))
                }
            }
            (false, false) => {
                let sign = if self.y.is_negative() { "-" } else { "+" };
                write!(f, "{} {} {}", fmt_rational(&self.x), sign, ypart(&self.y.abs()))
            }
        }
    }
}

fn check_cfg(a: &PrimeConfig, b: &PrimeConfig) {
    assert_eq!(a, b, "field elements from different prime configurations");
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, o: &FieldElement) -> FieldElement {
        check_cfg(&self.cfg, &o.cfg);
        FieldElement::new(&self.x + &o.x, &self.y + &o.y, self.cfg)
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, o: &FieldElement) -> FieldElement {
        check_cfg(&self.cfg, &o.cfg);
        FieldElement::new(&self.x - &o.x, &self.y - &o.y, self.cfg)
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, o: &FieldElement) -> FieldElement {
        check_cfg(&self.cfg, &o.cfg);
        let eps = Rational::from_integer(self.cfg.epsilon.into());
        FieldElement::new(
            &self.x * &o.x + eps * &self.y * &o.y,
            &self.x * &o.y + &self.y * &o.x,
            self.cfg,
        )
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::new(-self.x.clone(), -self.y.clone(), self.cfg)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, o: FieldElement) -> FieldElement { (&self).$m(&o) }
        }
        impl<'a> $tr<&'a FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, o: &FieldElement) -> FieldElement { (&self).$m(o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// Determinant over `F` by Gaussian elimination.
pub fn det(m: &[Vec<FieldElement>]) -> Result<FieldElement> {
    let n = m.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let cfg = m[0][0].config();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: m.iter().map(Vec::len).max().unwrap_or(0) });
    }
    let mut a: Vec<Vec<FieldElement>> = m.to_vec();
    let mut d = FieldElement::one(cfg);
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Ok(FieldElement::zero(cfg));
        };
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let inv = a[col][col].inv()?;
        d = &d * &a[col][col];
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
        }
    }
    Ok(d)
}

/// `(-1)^{val det M}`.
pub fn eta_tilde_det(m: &[Vec<FieldElement>]) -> Result<i8> {
    let d = det(m)?;
    match d.val() {
        Valuation::Infinity => Err(Error::InvalidInput("singular matrix".into())),
        Valuation::Finite(v) => Ok(if v.rem_euclid(2) == 0 { 1 } else { -1 }),
    }
}

/// An element of `F` known modulo `ϖ^abs_precision`; exact elements carry
/// `abs_precision = i64::MAX`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedElement {
    approx: FieldElement,
    abs_precision: i64,
}

const EXACT: i64 = i64::MAX;

impl TruncatedElement {
    pub fn exact(e: FieldElement) -> Self {
        TruncatedElement { approx: e, abs_precision: EXACT }
    }

    pub fn new(approx: FieldElement, abs_precision: i64) -> Self {
        TruncatedElement { approx, abs_precision }
    }

    pub fn approx(&self) -> &FieldElement {
        &self.approx
    }

    pub fn abs_precision(&self) -> i64 {
        self.abs_precision
    }

    pub fn is_exact(&self) -> bool {
        self.abs_precision == EXACT
    }

    pub fn config(&self) -> PrimeConfig {
        self.approx.config()
    }

    /// Residues of the two coordinates modulo `p^abs_precision`, for
    /// elements that are integral.
    pub fn residues(&self) -> Result<(BigInt, BigInt)> {
        if self.is_exact() || self.abs_precision < 0 || !self.approx.is_integral() {
            return Err(Error::InvalidInput("residues need a finite precision and an integral element".into()));
        }
        let m = num_traits::pow(self.config().p_big(), self.abs_precision as usize);
        let x = rational_mod(self.approx.x(), &m).expect("p-integral");
        let y = rational_mod(self.approx.y(), &m).expect("p-integral");
        Ok((x, y))
    }

    /// The valuation, provided it is certified by the known precision.
    pub fn valuation(&self) -> Result<i64> {
        match self.approx.val() {
            Valuation::Finite(v) if v < self.abs_precision => Ok(v),
            _ => Err(Error::Precision(format!(
                "valuation not determined modulo p^{}",
                self.abs_precision
            ))),
        }
    }

    pub fn is_zero_to_precision(&self) -> bool {
        match self.approx.val() {
            Valuation::Infinity => true,
            Valuation::Finite(v) => v >= self.abs_precision,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.approx + &o.approx, self.abs_precision.min(o.abs_precision))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(&self.approx - &o.approx, self.abs_precision.min(o.abs_precision))
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.approx, self.abs_precision)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.approx.conj(), self.abs_precision)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let v = |e: &FieldElement| e.val().finite().unwrap_or(EXACT / 4);
        let prec = match (self.is_exact(), o.is_exact()) {
            (true, true) => EXACT,
            (true, false) => o.abs_precision.saturating_add(v(&self.approx)),
            (false, true) => self.abs_precision.saturating_add(v(&o.approx)),
            (false, false) => self
                .abs_precision
                .saturating_add(v(&o.approx))
                .min(o.abs_precision.saturating_add(v(&self.approx))),
        };
        Self::new(&self.approx * &o.approx, prec)
    }
}

fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    // Tonelli-Shanks
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1)?;
    let mulm = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mulm(tt, tt);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulm(b, b);
        t = mulm(t, c);
        r = mulm(r, b);
    }
    Some(r)
}

/// Solves `x² - εy² ≡ target (mod p^n)` by lifting a residue-field solution.
pub fn solve_norm(target: &FieldElement, n: u32) -> Result<TruncatedElement> {
    if n < 1 {
        return Err(Error::Precision("solve_norm needs n >= 1".into()));
    }
    let cfg = target.config();
    if !target.is_base() || target.val() != Valuation::Finite(0) {
        return Err(Error::InvalidInput(format!("{target} is not a unit of F0")));
    }
    let p = cfg.p;
    let pb = cfg.p_big();
    let modulus = num_traits::pow(pb.clone(), n as usize);
    let t = rational_mod(target.x(), &modulus).expect("unit has p-coprime denominator");
    let eps = BigInt::from(cfg.epsilon);
    let t_mod_p = t.mod_floor(&pb).to_u64().expect("small");
    let eps_mod_p = cfg.epsilon.rem_euclid(p as i64) as u64;
    let (y0, x0) = (0..p)
        .find_map(|y| {
            let s = (t_mod_p as u128 + eps_mod_p as u128 * (y as u128 * y as u128)) % p as u128;
            if s == 0 {
                return None;
            }
            sqrt_mod_prime(s as u64, p).map(|x| (y, x))
        })
        .expect("the norm map is onto the units of the residue field");
    let yb = BigInt::from(y0);
    let s = (&t + &eps * &yb * &yb).mod_floor(&modulus);
    let mut x = BigInt::from(x0);
    for _ in 0..2 * (n as usize + 2) {
        let f = (&x * &x - &s).mod_floor(&modulus);
        if f.is_zero() {
            break;
        }
        let d = mod_inv(&(BigInt::from(2) * &x), &modulus).expect("2x is a unit");
        x = (&x - f * d).mod_floor(&modulus);
    }
    debug_assert!((&x * &x - &s).mod_floor(&modulus).is_zero());
    let approx = FieldElement::new(Rational::from_integer(x), Rational::from_integer(yb), cfg);
    Ok(TruncatedElement::new(approx, n as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PrimeConfig {
        PrimeConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(PrimeConfig::new(3, 2, 32).is_ok());
        assert!(PrimeConfig::new(3, 1, 32).is_err());
        assert!(PrimeConfig::new(4, 3, 32).is_err());
        assert!(PrimeConfig::new(2, 3, 32).is_err());
        assert_eq!(PrimeConfig::for_prime(7).unwrap().epsilon, 3);
        assert_eq!(PrimeConfig::for_prime(17).unwrap().epsilon, 3);
    }

    #[test]
    fn basic_arithmetic() {
        let c = cfg();
        let one = FieldElement::one(c);
        let d = FieldElement::delta(c);
        assert_eq!(&(&one + &d) * &(&one - &d), FieldElement::from_int(1 - c.epsilon, c));
        assert_eq!(d.inv().unwrap(), FieldElement::new(int(0), rat(1, c.epsilon), c));
        let s = FieldElement::from_int(3, c) + FieldElement::from_int(9, c);
        assert_eq!(s.val(), Valuation::Finite(1));
        assert_eq!(FieldElement::zero(c).val(), Valuation::Infinity);
        assert_eq!(FieldElement::zero(c).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn conj_norm_trace() {
        let c = cfg();
        let a = FieldElement::new(int(1), int(2), c);
        assert_eq!(a.conj(), FieldElement::new(int(1), int(-2), c));
        assert_eq!(FieldElement::delta(c).conj(), -FieldElement::delta(c));
        assert_eq!(a.norm(), FieldElement::from_int(1 - 4 * c.epsilon, c));
        assert_eq!(a.trace(), FieldElement::from_int(2, c));
        let u = FieldElement::new(rat(5, 7), int(1), c);
        let x = &FieldElement::p_power(3, c) * &u;
        assert_eq!(x.val(), Valuation::Finite(3));
    }

    #[test]
    fn eta_values() {
        let c = cfg();
        assert_eq!(FieldElement::from_int(3, c).eta().unwrap(), -1);
        assert_eq!(FieldElement::from_int(5, c).eta().unwrap(), 1);
        assert!(FieldElement::zero(c).eta().is_err());
        let m = vec![
            vec![FieldElement::from_int(3, c), FieldElement::zero(c)],
            vec![FieldElement::zero(c), FieldElement::p_power(-1, c)],
        ];
        assert_eq!(eta_tilde_det(&m).unwrap(), 1);
    }

    #[test]
    fn parse_and_display() {
        let c = cfg();
        for s in ["0", "3", "d", "-d", "1/2 + 3*d", "1 - d", "-2/9 - 5/4*d"] {
            let e = FieldElement::parse(s, c).unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert_eq!(
            FieldElement::parse("1/3-2*d", c).unwrap(),
            FieldElement::new(rat(1, 3), int(-2), c)
        );
        assert!(FieldElement::parse("1+", c).is_err());
        assert!(FieldElement::parse("x", c).is_err());
    }

    #[test]
    fn solve_norm_examples() {
        let c = cfg();
        let one = solve_norm(&FieldElement::one(c), 10).unwrap();
        assert!(one.approx().norm().sub(&FieldElement::one(c)).val() >= Valuation::Finite(10));
        let eps = FieldElement::from_int(c.epsilon, c);
        let e = solve_norm(&eps, 20).unwrap();
        assert!((&e.approx().norm() - &eps).val() >= Valuation::Finite(20));
        assert!(solve_norm(&FieldElement::from_int(3, c), 4).is_err());
        assert!(solve_norm(&eps, 0).is_err());
    }

    #[test]
    fn sqrt_mod_prime_all_residues() {
        for p in [3u64, 5, 7, 13, 17, 41] {
            for a in 1..p {
                if let Some(r) = sqrt_mod_prime(a, p) {
                    assert_eq!(r * r % p, a);
                }
            }
        }
    }

    #[test]
    fn truncated_precision() {
        let c = cfg();
        let t = TruncatedElement::new(FieldElement::from_int(27, c), 3);
        assert!(t.valuation().is_err());
        let u = TruncatedElement::new(FieldElement::from_int(9, c), 3);
        assert_eq!(u.valuation().unwrap(), 2);
        let prod = u.mul(&TruncatedElement::exact(FieldElement::from_int(3, c)));
        assert_eq!(prod.abs_precision(), 4);
        assert_eq!(prod.valuation().unwrap(), 3);
    }
}

//! Laurent polynomials over `Q[q, q^-1]` and the two Satake target rings:
//! symmetric Laurent polynomials in `x_1..x_n` (σ-basis) and polynomials in
//! `𝔰_1..𝔰_m`, the elementary symmetric functions of `y_s = u_s + u_s^-1`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::localfield::{int, split_signed_terms, Rational};

/// Element of `Q[q, q^-1]`, stored sparsely by exponent of `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct QLaurent {
    terms: BTreeMap<i64, Rational>,
}

impl QLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(0, c)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(int(n))
    }

    pub fn q_pow(k: i64) -> Self {
        Self::monomial(k, Rational::one())
    }

    pub fn monomial(k: i64, c: Rational) -> Self {
        let mut s = Self::zero();
        s.add_term(k, c);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&i64, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: i64) -> Rational {
        self.terms.get(&k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, k: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(k).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        QLaurent { terms: self.terms.iter().map(|(k, c)| (*k, c * r)).collect() }
    }

    pub fn shift(&self, k: i64) -> Self {
        QLaurent { terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// The substitution `q ↦ -q`.
    pub fn substitute_neg_q(&self) -> Self {
        QLaurent {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (*k, if k.rem_euclid(2) == 1 { -c.clone() } else { c.clone() }))
                .collect(),
        }
    }

    pub fn eval(&self, q: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for (k, c) in &self.terms {
            acc += c * rational_pow(q, *k);
        }
        acc
    }
}

pub(crate) fn rational_pow(q: &Rational, k: i64) -> Rational {
    let mut acc = Rational::one();
    let base = if k < 0 { q.recip() } else { q.clone() };
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

impl Add for &QLaurent {
    type Output = QLaurent;
    fn add(self, o: &QLaurent) -> QLaurent {
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(*k, c.clone());
        }
        r
    }
}

impl Sub for &QLaurent {
    type Output = QLaurent;
    fn sub(self, o: &QLaurent) -> QLaurent {
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(*k, -c.clone());
        }
        r
    }
}

impl Mul for &QLaurent {
    type Output = QLaurent;
    fn mul(self, o: &QLaurent) -> QLaurent {
        let mut r = QLaurent::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                r.add_term(k1 + k2, c1 * c2);
            }
        }
        r
    }
}

impl Neg for &QLaurent {
    type Output = QLaurent;
    fn neg(self) -> QLaurent {
        self.scale(&-Rational::one())
    }
}

fn fmt_coeff_abs(c: &Rational) -> String {
    let a = c.abs();
    if a.is_integer() {
        a.numer().to_string()
    } else {
        format!("{}/{}", a.numer(), a.denom())
    }
}

fn q_factor(k: i64) -> Option<String> {
    match k {
        0 => None,
        1 => Some("q".into()),
        _ => Some(format!("q^{k}")),
    }
}

impl fmt::Display for QLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<TextTerm> = self
            .terms
            .iter()
            .rev()
            .map(|(k, c)| TextTerm { coeff: c.clone(), qexp: *k, factors: vec![] })
            .collect();
        write!(f, "{}", render_terms(&terms))
    }
}

pub(crate) struct TextTerm {
    pub(crate) coeff: Rational,
    pub(crate) qexp: i64,
    pub(crate) factors: Vec<String>,
}

pub(crate) fn render_terms(terms: &[TextTerm]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        let neg = t.coeff.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut parts: Vec<String> = Vec::new();
        if !t.coeff.abs().is_one() {
            parts.push(fmt_coeff_abs(&t.coeff));
        }
        if let Some(qf) = q_factor(t.qexp) {
            parts.push(qf);
        }
        parts.extend(t.factors.iter().cloned());
        if parts.is_empty() {
            parts.push("1".into());
        }
        out.push_str(&parts.join("*"));
    }
    out
}

/// Laurent polynomial in `nvars` variables with `QLaurent` coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPoly {
    nvars: usize,
    terms: BTreeMap<Vec<i32>, QLaurent>,
}

impl LPoly {
    pub fn zero(nvars: usize) -> Self {
        LPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, QLaurent::one())
    }

    pub fn constant(nvars: usize, c: QLaurent) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, QLaurent::one())
    }

    pub fn monomial(nvars: usize, exps: Vec<i32>, c: QLaurent) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Self::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Vec<i32>, &QLaurent)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[i32]) -> QLaurent {
        self.terms.get(exps).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, exps: Vec<i32>, c: QLaurent) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(e) => {
                *e = &*e + &c;
                if e.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn scale(&self, c: &QLaurent) -> Self {
        let mut r = Self::zero(self.nvars);
        for (e, k) in &self.terms {
            r.add_term(e.clone(), k * c);
        }
        r
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplies by the monomial `x^shift`.
    pub fn shift(&self, shift: &[i32]) -> Self {
        LPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(shift).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    /// Applies a monomial substitution `x^e ↦ ±x'^{f(e)}` and collects terms.
    pub fn map_monomials(&self, nvars: usize, f: impl Fn(&[i32]) -> (Vec<i32>, bool)) -> Self {
        let mut r = Self::zero(nvars);
        for (e, c) in &self.terms {
            let (ne, negate) = f(e);
            r.add_term(ne, if negate { -c } else { c.clone() });
        }
        r
    }

    pub fn map_coeffs(&self, f: impl Fn(&QLaurent) -> QLaurent) -> Self {
        let mut r = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            r.add_term(e.clone(), f(c));
        }
        r
    }

    pub fn swap_vars(&self, i: usize, j: usize) -> Self {
        self.map_monomials(self.nvars, |e| {
            let mut e = e.to_vec();
            e.swap(i, j);
            (e, false)
        })
    }

    pub fn invert_var(&self, i: usize) -> Self {
        self.map_monomials(self.nvars, |e| {
            let mut e = e.to_vec();
            e[i] = -e[i];
            (e, false)
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.nvars.saturating_sub(1)).all(|i| self.swap_vars(i, i + 1) == *self)
    }

    /// Invariance under permutations and the inversions `u_s ↦ u_s^-1`.
    pub fn is_signed_symmetric(&self) -> bool {
        self.is_symmetric() && (self.nvars == 0 || self.invert_var(0) == *self)
    }

    /// The lexicographically largest monomial and its coefficient.
    pub fn leading(&self) -> Option<(&Vec<i32>, &QLaurent)> {
        self.terms.iter().next_back()
    }

    pub fn min_exponent(&self) -> i32 {
        self.terms.keys().flat_map(|e| e.iter().copied()).min().unwrap_or(0)
    }

    pub fn specialize(&self, q: &Rational) -> Self {
        self.map_coeffs(|c| QLaurent::constant(c.eval(q)))
    }

    pub fn eval(&self, point: &[Rational], q: &Rational) -> Result<Rational> {
        if point.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: point.len() });
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.eval(q);
            for (x, k) in point.iter().zip(e) {
                if x.is_zero() && *k < 0 {
                    return Err(Error::DivisionByZero);
                }
                t *= rational_pow(x, *k as i64);
            }
            acc += t;
        }
        Ok(acc)
    }
}

impl Add for &LPoly {
    type Output = LPoly;
    fn add(self, o: &LPoly) -> LPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }
}

impl Sub for &LPoly {
    type Output = LPoly;
    fn sub(self, o: &LPoly) -> LPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), -c);
        }
        r
    }
}

impl Mul for &LPoly {
    type Output = LPoly;
    fn mul(self, o: &LPoly) -> LPoly {
        assert_eq!(self.nvars, o.nvars);
        let mut r = LPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<i32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                r.add_term(e, c1 * c2);
            }
        }
        r
    }
}

impl Neg for &LPoly {
    type Output = LPoly;
    fn neg(self) -> LPoly {
        self.scale(&-&QLaurent::one())
    }
}

/// Elementary symmetric polynomial `e_k` in the given variables.
pub fn elementary(nvars: usize, k: usize) -> LPoly {
    let mut p = LPoly::zero(nvars);
    if k > nvars {
        return p;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut e = vec![0; nvars];
        for &i in &idx {
            e[i] = 1;
        }
        p.add_term(e, QLaurent::one());
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return p;
            }
            i -= 1;
            if idx[i] < nvars - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `e_k(u_1 + u_1^-1, ..., u_m + u_m^-1)`.
fn frak_expansion(m: usize, k: usize) -> LPoly {
    let ys: Vec<LPoly> = (0..m)
        .map(|i| {
            let mut e = vec![0; m];
            e[i] = 1;
            let mut y = LPoly::monomial(m, e.clone(), QLaurent::one());
            e[i] = -1;
            y.add_term(e, QLaurent::one());
            y
        })
        .collect();
    let mut p = LPoly::zero(m);
    for (mono, _) in elementary(m, k).terms() {
        let mut t = LPoly::one(m);
        for (i, &b) in mono.iter().enumerate() {
            if b == 1 {
                t = &t * &ys[i];
            }
        }
        p = &p + &t;
    }
    p
}

fn graded_lex_desc(a: &[i32], b: &[i32]) -> Ordering {
    let da: i64 = a.iter().map(|&x| x as i64).sum();
    let db: i64 = b.iter().map(|&x| x as i64).sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

fn poly_text(poly: &LPoly, name: impl Fn(usize) -> String) -> String {
    let mut monos: Vec<&Vec<i32>> = poly.terms.keys().collect();
    monos.sort_by(|a, b| graded_lex_desc(a, b));
    let mut terms = Vec::new();
    for mono in monos {
        let coeff = &poly.terms[mono];
        let factors: Vec<String> = mono
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(i, &e)| if e == 1 { name(i) } else { format!("{}^{}", name(i), e) })
            .collect();
        for (k, c) in coeff.terms().rev() {
            terms.push(TextTerm { coeff: c.clone(), qexp: *k, factors: factors.clone() });
        }
    }
    render_terms(&terms)
}

fn parse_poly(text: &str, prefix: &str, nvars: usize) -> Result<LPoly> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut poly = LPoly::zero(nvars);
    if s == "0" {
        return Ok(poly);
    }
    for (neg, term) in split_signed_terms(&s) {
        if term.is_empty() {
            return Err(Error::Parse(format!("dangling sign in {text:?}")));
        }
        let mut coeff = Rational::one();
        let mut qexp = 0i64;
        let mut exps = vec![0i32; nvars];
        for factor in term.split('*') {
            let (base, exp) = match factor.split_once('^') {
                Some((b, e)) => (
                    b,
                    e.parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad exponent in {factor:?}")))?,
                ),
                None => (factor, 1),
            };
            if base.is_empty() {
                return Err(Error::Parse(format!("empty factor in {term:?}")));
            }
            if base.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                if exp != 1 {
                    return Err(Error::Parse(format!("exponent on a number in {factor:?}")));
                }
                coeff *= Rational::from_str(base)
                    .map_err(|_| Error::Parse(format!("bad rational {base:?}")))?;
            } else if base == "q" {
                qexp += exp;
            } else {
                let idx = base
                    .strip_prefix(prefix)
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| i >= 1 && i <= nvars)
                    .ok_or_else(|| Error::Parse(format!("unknown variable {base:?}")))?;
                exps[idx - 1] += exp as i32;
            }
        }
        if neg {
            coeff = -coeff;
        }
        poly.add_term(exps, QLaurent::monomial(qexp, coeff));
    }
    Ok(poly)
}

/// GL_n Satake image: polynomial in `σ_1..σ_{n-1}` and `σ_n^{±1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GLSatakeElement {
    n: usize,
    poly: LPoly,
}

impl GLSatakeElement {
    pub fn from_sigma_poly(n: usize, poly: LPoly) -> Result<Self> {
        if poly.nvars() != n {
            return Err(Error::DimensionMismatch { expected: n, got: poly.nvars() });
        }
        if poly.terms().any(|(e, _)| e[..n.saturating_sub(1)].iter().any(|&x| x < 0)) {
            return Err(Error::InvalidInput("only σ_n may carry a negative exponent".into()));
        }
        Ok(GLSatakeElement { n, poly })
    }

    pub fn zero(n: usize) -> Self {
        GLSatakeElement { n, poly: LPoly::zero(n) }
    }

    pub fn one(n: usize) -> Self {
        GLSatakeElement { n, poly: LPoly::one(n) }
    }

    pub fn constant(n: usize, c: QLaurent) -> Self {
        GLSatakeElement { n, poly: LPoly::constant(n, c) }
    }

    /// `σ_i`, with `σ_0 = 1`.
    pub fn sigma(n: usize, i: usize) -> Result<Self> {
        if i > n {
            return Err(Error::Range(format!("σ_{i} with n = {n}")));
        }
        if i == 0 {
            return Ok(Self::one(n));
        }
        Ok(GLSatakeElement { n, poly: LPoly::var(n, i - 1) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma_poly(&self) -> &LPoly {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Expands to a symmetric Laurent polynomial in `x_1..x_n`.
    pub fn expand(&self) -> LPoly {
        let n = self.n;
        let es: Vec<LPoly> = (1..n).map(|k| elementary(n, k)).collect();
        let mut cache: HashMap<(usize, i32), LPoly> = HashMap::new();
        let mut out = LPoly::zero(n);
        for (mono, c) in self.poly.terms() {
            let mut t = LPoly::constant(n, c.clone());
            for (k, &b) in mono.iter().enumerate().take(n.saturating_sub(1)) {
                if b > 0 {
                    let pw = cache.entry((k, b)).or_insert_with(|| es[k].pow(b as u32));
                    t = &t * pw;
                }
            }
            if n > 0 {
                t = t.shift(&vec![mono[n - 1]; n]);
            }
            out = &out + &t;
        }
        out
    }

    pub fn scale(&self, c: &QLaurent) -> Self {
        GLSatakeElement { n: self.n, poly: self.poly.scale(c) }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(GLSatakeElement { n: self.n, poly: &self.poly + &o.poly })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(GLSatakeElement { n: self.n, poly: &self.poly - &o.poly })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(GLSatakeElement { n: self.n, poly: &self.poly * &o.poly })
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.n != o.n {
            return Err(Error::RankMismatch(self.n, o.n));
        }
        Ok(())
    }

    /// `x_i ↦ -x_i`, i.e. `σ_i ↦ (-1)^i σ_i`.
    pub fn negate_variables(&self) -> Self {
        let poly = self.poly.map_monomials(self.n, |e| {
            let parity: i64 = e.iter().enumerate().map(|(i, &b)| (i as i64 + 1) * b as i64).sum();
            (e.to_vec(), parity.rem_euclid(2) == 1)
        });
        GLSatakeElement { n: self.n, poly }
    }

    pub fn specialize(&self, q: &Rational) -> Self {
        GLSatakeElement { n: self.n, poly: self.poly.specialize(q) }
    }

    /// Evaluates at the Satake parameter `(x_1..x_n)`.
    pub fn evaluate(&self, point: &[Rational], q: &Rational) -> Result<Rational> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: point.len() });
        }
        if point.iter().any(Zero::is_zero) {
            return Err(Error::InvalidInput("Satake parameters must be nonzero".into()));
        }
        let sig: Vec<Rational> = (1..=self.n)
            .map(|k| elementary(self.n, k).eval(point, q).expect("sizes match"))
            .collect();
        self.poly.eval(&sig, q)
    }

    pub fn to_text(&self) -> String {
        poly_text(&self.poly, |i| format!("sigma{}", i + 1))
    }

    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Self::from_sigma_poly(n, parse_poly(text, "sigma", n)?)
    }
}

impl fmt::Display for GLSatakeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Rewrites a symmetric Laurent polynomial in `x_1..x_n` in the σ-basis.
pub fn reduce_symmetric(p: &LPoly) -> Result<GLSatakeElement> {
    let n = p.nvars();
    if !p.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if n == 0 {
        return Ok(GLSatakeElement { n, poly: p.clone() });
    }
    let low = p.min_exponent().min(0);
    let mut rest = p.shift(&vec![-low; n]);
    let es: Vec<LPoly> = (1..=n).map(|k| elementary(n, k)).collect();
    let mut out = LPoly::zero(n);
    while let Some((alpha, c)) = rest.leading() {
        let alpha = alpha.clone();
        let c = c.clone();
        if alpha.windows(2).any(|w| w[0] < w[1]) || alpha[n - 1] < 0 {
            return Err(Error::NotSymmetric);
        }
        let beta: Vec<i32> = (0..n)
            .map(|i| if i + 1 < n { alpha[i] - alpha[i + 1] } else { alpha[i] })
            .collect();
        let mut t = LPoly::constant(n, c.clone());
        for (k, &b) in beta.iter().enumerate() {
            if b > 0 {
                t = &t * &es[k].pow(b as u32);
            }
        }
        rest = &rest - &t;
        out.add_term(beta, c);
    }
    let mut shift = vec![0; n];
    shift[n - 1] = low;
    GLSatakeElement::from_sigma_poly(n, out.shift(&shift))
}

/// Unitary Satake image: polynomial in `𝔰_1..𝔰_m`, `m = ⌊n/2⌋`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct USatakeElement {
    n: usize,
    poly: LPoly,
}

impl USatakeElement {
    pub fn from_frak_poly(n: usize, poly: LPoly) -> Result<Self> {
        if poly.nvars() != n / 2 {
            return Err(Error::DimensionMismatch { expected: n / 2, got: poly.nvars() });
        }
        if poly.terms().any(|(e, _)| e.iter().any(|&x| x < 0)) {
            return Err(Error::InvalidInput("negative exponent of 𝔰".into()));
        }
        Ok(USatakeElement { n, poly })
    }

    pub fn zero(n: usize) -> Self {
        USatakeElement { n, poly: LPoly::zero(n / 2) }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, QLaurent::one())
    }

    pub fn constant(n: usize, c: QLaurent) -> Self {
        USatakeElement { n, poly: LPoly::constant(n / 2, c) }
    }

    /// `𝔰_s`, with `𝔰_0 = 1`.
    pub fn frak(n: usize, s: usize) -> Result<Self> {
        let m = n / 2;
        if s > m {
            return Err(Error::Range(format!("𝔰_{s} with m = {m}")));
        }
        if s == 0 {
            return Ok(Self::one(n));
        }
        Ok(USatakeElement { n, poly: LPoly::var(m, s - 1) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.n / 2
    }

    pub fn frak_poly(&self) -> &LPoly {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Expands to a `W_n`-invariant Laurent polynomial in `u_1..u_m`.
    pub fn expand(&self) -> LPoly {
        let m = self.m();
        let fr: Vec<LPoly> = (1..=m).map(|k| frak_expansion(m, k)).collect();
        let mut out = LPoly::zero(m);
        for (mono, c) in self.poly.terms() {
            let mut t = LPoly::constant(m, c.clone());
            for (k, &b) in mono.iter().enumerate() {
                if b > 0 {
                    t = &t * &fr[k].pow(b as u32);
                }
            }
            out = &out + &t;
        }
        out
    }

    pub fn scale(&self, c: &QLaurent) -> Self {
        USatakeElement { n: self.n, poly: self.poly.scale(c) }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(USatakeElement { n: self.n, poly: &self.poly + &o.poly })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(USatakeElement { n: self.n, poly: &self.poly - &o.poly })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(USatakeElement { n: self.n, poly: &self.poly * &o.poly })
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.n != o.n {
            return Err(Error::RankMismatch(self.n, o.n));
        }
        Ok(())
    }

    pub fn specialize(&self, q: &Rational) -> Self {
        USatakeElement { n: self.n, poly: self.poly.specialize(q) }
    }

    /// Evaluates at `(u_1..u_m)`.
    pub fn evaluate(&self, point: &[Rational], q: &Rational) -> Result<Rational> {
        let m = self.m();
        if point.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: point.len() });
        }
        if point.iter().any(Zero::is_zero) {
            return Err(Error::InvalidInput("Satake parameters must be nonzero".into()));
        }
        let ys: Vec<Rational> = point.iter().map(|u| u + u.recip()).collect();
        let fr: Vec<Rational> = (1..=m)
            .map(|k| elementary(m, k).eval(&ys, q).expect("sizes match"))
            .collect();
        self.poly.eval(&fr, q)
    }

    /// For `m = 1` and numeric coefficients: the polynomial in `𝔰_1`.
    pub fn to_univariate(&self, q: &Rational) -> Result<UniPoly> {
        if self.m() != 1 {
            return Err(Error::InvalidInput("univariate form needs m = 1".into()));
        }
        let mut coeffs = Vec::new();
        for (e, c) in self.poly.terms() {
            let d = e[0] as usize;
            if coeffs.len() <= d {
                coeffs.resize(d + 1, Rational::zero());
            }
            coeffs[d] += c.eval(q);
        }
        Ok(UniPoly::new(coeffs))
    }

    pub fn to_text(&self) -> String {
        poly_text(&self.poly, |i| format!("s{}", i + 1))
    }

    pub fn parse(text: &str, n: usize) -> Result<Self> {
        Self::from_frak_poly(n, parse_poly(text, "s", n / 2)?)
    }
}

impl fmt::Display for USatakeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Rewrites a `W_n`-invariant Laurent polynomial in `u_1..u_m` in the
/// 𝔰-basis. `n` only fixes the rank label (`m = ⌊n/2⌋`).
pub fn reduce_signed_symmetric(p: &LPoly, n: usize) -> Result<USatakeElement> {
    let m = n / 2;
    if p.nvars() != m {
        return Err(Error::DimensionMismatch { expected: m, got: p.nvars() });
    }
    if !p.is_signed_symmetric() {
        return Err(Error::NotInvariant);
    }
    let fr: Vec<LPoly> = (1..=m).map(|k| frak_expansion(m, k)).collect();
    let mut rest = p.clone();
    let mut out = LPoly::zero(m);
    while let Some((alpha, c)) = rest.leading() {
        let alpha = alpha.clone();
        let c = c.clone();
        if alpha.windows(2).any(|w| w[0] < w[1]) || alpha.last().is_some_and(|&x| x < 0) {
            return Err(Error::NotInvariant);
        }
        let beta: Vec<i32> = (0..m)
            .map(|i| if i + 1 < m { alpha[i] - alpha[i + 1] } else { alpha[i] })
            .collect();
        let mut t = LPoly::constant(m, c.clone());
        for (k, &b) in beta.iter().enumerate() {
            if b > 0 {
                t = &t * &fr[k].pow(b as u32);
            }
        }
        rest = &rest - &t;
        out.add_term(beta, c);
    }
    USatakeElement::from_frak_poly(n, out)
}

/// Dense univariate polynomial over `Q`, coefficients from low to high degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| int(x)).collect())
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self::new(vec![Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            None => self.clone(),
            Some(l) => {
                let l = l.clone();
                Self::new(self.coeffs.iter().map(|c| c / &l).collect())
            }
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * r).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
                        + o.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
                })
                .collect(),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn divrem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let lead = d.coeffs[dd].clone();
        let mut r = self.coeffs.clone();
        let mut q = vec![Rational::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let f = r.last().expect("nonempty") / &lead;
            for (i, c) in d.coeffs.iter().enumerate() {
                r[k + i] -= &f * c;
            }
            q[k] = f;
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Ok((Self::new(q), Self::new(r)))
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// `(g, s, t)` with `s·a + t·b = g`, `g` monic.
    pub fn ext_gcd(a: &Self, b: &Self) -> Result<(Self, Self, Self)> {
        if a.is_zero() || b.is_zero() {
            return Err(Error::InvalidInput("gcd of a zero polynomial".into()));
        }
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (Self::one(), Self::zero());
        let (mut t0, mut t1) = (Self::zero(), Self::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1)?;
            let s2 = s0.sub(&q.mul(&s1));
            let t2 = t0.sub(&q.mul(&t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
            t0 = t1;
            t1 = t2;
        }
        let lead = r0.coeffs.last().expect("nonzero").recip();
        Ok((r0.scale(&lead), s0.scale(&lead), t0.scale(&lead)))
    }

    pub fn to_text(&self, var: &str) -> String {
        let terms: Vec<TextTerm> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| TextTerm {
                coeff: c.clone(),
                qexp: 0,
                factors: match d {
                    0 => vec![],
                    1 => vec![var.to_string()],
                    _ => vec![format!("{var}^{d}")],
                },
            })
            .collect();
        render_terms(&terms)
    }
}

/// Monic gcd over `Q`.
pub fn gcd_univariate(p: &UniPoly, q: &UniPoly) -> Result<UniPoly> {
    Ok(UniPoly::ext_gcd(p, q)?.0)
}

//! Orbits and orbital integrals in the rank-one case `n = 1`: the symmetric
//! space `S_2`, the unitary groups of the split and non-split hermitian
//! planes, and the homogeneous side on `GL_2`.
//!
//! Orbital integrals are Laurent polynomials in `Z = q^{-s}` with integer
//! coefficients. Derivatives at `s = 0` are reported as rational multiples
//! of `log q`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hecke::{bc_s_eta_inverse, r_eta_star, SModuleElement};
use crate::localfield::{
    int, solve_norm, vp_rational, FieldElement, PrimeConfig, Rational, TruncatedElement, Valuation,
};
use crate::symfun::{render_terms, TextTerm};

pub type Mat2 = [[FieldElement; 2]; 2];

fn sign(k: i64) -> i64 {
    if k.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| &(&x[i][0] * &y[0][j]) + &(&x[i][1] * &y[1][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn mat_conj(x: &Mat2) -> Mat2 {
    [[x[0][0].conj(), x[0][1].conj()], [x[1][0].conj(), x[1][1].conj()]]
}

fn mat_det(x: &Mat2) -> FieldElement {
    &(&x[0][0] * &x[1][1]) - &(&x[0][1] * &x[1][0])
}

fn mat_inv(x: &Mat2) -> Result<Mat2> {
    let di = mat_det(x).inv()?;
    Ok([
        [&x[1][1] * &di, -&(&x[0][1] * &di)],
        [-&(&x[1][0] * &di), &x[0][0] * &di],
    ])
}

fn is_identity(x: &Mat2) -> bool {
    x[0][0].is_one() && x[1][1].is_one() && x[0][1].is_zero() && x[1][0].is_zero()
}

/// `h^{-1} γ h` for `h = diag(ϖ^k, 1)`.
fn conjugate_by_power(g: &Mat2, k: i64) -> Mat2 {
    let cfg = g[0][0].config();
    let pk = FieldElement::p_power(k, cfg);
    let pmk = FieldElement::p_power(-k, cfg);
    [[g[0][0].clone(), &g[0][1] * &pmk], [&g[1][0] * &pk, g[1][1].clone()]]
}

/// A regular semisimple `γ ∈ S_2(F_0)`, i.e. `γ γ̄ = 1` and `bc ≠ 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SOrbit {
    gamma: Mat2,
    r: i64,
}

impl SOrbit {
    pub fn from_matrix(gamma: Mat2) -> Result<Self> {
        if !is_identity(&mat_mul(&gamma, &mat_conj(&gamma))) {
            return Err(Error::InvalidInput("matrix does not satisfy γ·conj(γ) = 1".into()));
        }
        if gamma[0][1].is_zero() || gamma[1][0].is_zero() {
            return Err(Error::InvalidInput("not regular semisimple: bc = 0".into()));
        }
        let a = &gamma[0][0];
        let one = FieldElement::one(a.config());
        let r = (&one - &(a * &a.conj())).val_finite()?;
        Ok(SOrbit { gamma, r })
    }

    pub fn gamma(&self) -> &Mat2 {
        &self.gamma
    }

    pub fn a(&self) -> &FieldElement {
        &self.gamma[0][0]
    }

    pub fn b(&self) -> &FieldElement {
        &self.gamma[0][1]
    }

    pub fn c(&self) -> &FieldElement {
        &self.gamma[1][0]
    }

    pub fn d(&self) -> &FieldElement {
        &self.gamma[1][1]
    }

    pub fn bc(&self) -> FieldElement {
        self.b() * self.c()
    }

    pub fn config(&self) -> PrimeConfig {
        self.a().config()
    }

    /// `r = v(1 - a ā)`.
    pub fn r(&self) -> i64 {
        self.r
    }

    pub fn is_normalized(&self) -> bool {
        self.c().val() == Valuation::Finite(0)
    }

    /// The conjugate by `diag(ϖ^j, 1)` with `v(c) = 0`, and `j`.
    pub fn normalize(&self) -> (SOrbit, i64) {
        let j = -self.c().val_finite().expect("c ≠ 0");
        let gamma = conjugate_by_power(&self.gamma, j);
        (SOrbit { gamma, r: self.r }, j)
    }
}

/// `γ(a, b) = [[a, b], [(1 - Na)/b̄, -ā b / b̄]]`.
pub fn make_gamma(a: FieldElement, b: FieldElement) -> Result<SOrbit> {
    let cfg = a.config();
    if b.is_zero() {
        return Err(Error::InvalidInput("b = 0".into()));
    }
    let one = FieldElement::one(cfg);
    let one_minus_na = &one - &a.norm();
    if one_minus_na.is_zero() {
        return Err(Error::InvalidInput("Na = 1: not regular semisimple".into()));
    }
    let bbar_inv = b.conj().inv()?;
    let c = &one_minus_na * &bbar_inv;
    let d = -&(&(&a.conj() * &b) * &bbar_inv);
    SOrbit::from_matrix([[a, b], [c, d]])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchClass {
    Split,
    Nonsplit,
}

impl fmt::Display for MatchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchClass::Split => "split",
            MatchClass::Nonsplit => "nonsplit",
        })
    }
}

/// Split exactly when `r` is even.
pub fn match_class(orbit: &SOrbit) -> MatchClass {
    if orbit.r.rem_euclid(2) == 0 {
        MatchClass::Split
    } else {
        MatchClass::Nonsplit
    }
}

/// `ω(γ) = (-1)^{v(b)}`.
pub fn transfer_factor(orbit: &SOrbit) -> i8 {
    sign(orbit.b().val_finite().expect("b ≠ 0")) as i8
}

/// `Σ c_k Z^k`, finitely supported.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct OrbitalValue {
    laurent: BTreeMap<i64, i64>,
}

impl OrbitalValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(k: i64, c: i64) -> Self {
        let mut v = Self::zero();
        v.add_term(k, c);
        v
    }

    pub fn add_term(&mut self, k: i64, c: i64) {
        let e = self.laurent.entry(k).or_insert(0);
        *e += c;
        if *e == 0 {
            self.laurent.remove(&k);
        }
    }

    pub fn coeff(&self, k: i64) -> i64 {
        self.laurent.get(&k).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (i64, i64)> + '_ {
        self.laurent.iter().map(|(k, c)| (*k, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.laurent.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (k, c) in o.terms() {
            r.add_term(k, c);
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1))
    }

    pub fn scale(&self, c: i64) -> Self {
        let mut r = Self::zero();
        for (k, a) in self.terms() {
            r.add_term(k, a * c);
        }
        r
    }

    /// Multiplication by `Z^j`.
    pub fn shift(&self, j: i64) -> Self {
        Self { laurent: self.laurent.iter().map(|(k, c)| (k + j, *c)).collect() }
    }

    /// `Z ↦ Z^e`.
    pub fn substitute_power(&self, e: i64) -> Self {
        Self { laurent: self.laurent.iter().map(|(k, c)| (k * e, *c)).collect() }
    }

    /// The value at `s = 0`.
    pub fn value_at_0(&self) -> Rational {
        int(self.laurent.values().sum())
    }

    /// The derivative at `s = 0` in units of `log q`: `-Σ k c_k`.
    pub fn derivative_at_0(&self) -> Rational {
        int(-self.laurent.iter().map(|(k, c)| k * c).sum::<i64>())
    }
}

impl fmt::Display for OrbitalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<TextTerm> = self
            .terms()
            .map(|(k, c)| TextTerm {
                coeff: int(c),
                qexp: 0,
                factors: match k {
                    0 => vec![],
                    1 => vec!["Z".into()],
                    _ => vec![format!("Z^{k}")],
                },
            })
            .collect();
        f.write_str(&render_terms(&terms))
    }
}

impl Serialize for OrbitalValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn value_at_0(v: &OrbitalValue) -> Rational {
    v.value_at_0()
}

pub fn derivative_at_0(v: &OrbitalValue) -> Rational {
    v.derivative_at_0()
}

/// `Orb(γ, φ'_m, s)` from the closed form; `γ` must be normalized.
pub fn orb_s_closed(orbit: &SOrbit, m: usize) -> Result<OrbitalValue> {
    if !orbit.is_normalized() {
        return Err(Error::NotNormalized(orbit.c().val_finite()?));
    }
    let r = orbit.r;
    let m = m as i64;
    let mut v = OrbitalValue::zero();
    if m == 0 {
        for i in 0..=r {
            v.add_term(i, sign(i));
        }
    } else if r == -2 * m {
        v.add_term(-m, sign(m));
    } else if r > -2 * m {
        v.add_term(-m, sign(m));
        v.add_term(r + m, sign(m) * sign(r));
    }
    Ok(v)
}

/// `Orb(γ, φ'_m, s)` by summing over `h = diag(ϖ^k, 1)`: the integrand is
/// `1[min entry valuation of h^{-1}γh = -m] (-1)^k Z^k`.
pub fn orb_s_oracle(orbit: &SOrbit, m: usize) -> OrbitalValue {
    let m = m as i64;
    let vb = orbit.b().val_finite().expect("b ≠ 0");
    let vc = orbit.c().val_finite().expect("c ≠ 0");
    let bound = vb.abs() + vc.abs() + m + 2;
    let mut v = OrbitalValue::zero();
    for k in -bound..=bound {
        let x = conjugate_by_power(&orbit.gamma, k);
        let min = x.iter().flatten().map(FieldElement::val).min().expect("four entries");
        if min == Valuation::Finite(-m) {
            v.add_term(k, sign(k));
        }
    }
    v
}

/// `Orb(γ, φ'_m, s)` for any `γ`, through the normalized conjugate.
pub fn orb_s(orbit: &SOrbit, m: usize) -> OrbitalValue {
    let (n, j) = orbit.normalize();
    orb_s_closed(&n, m).expect("normalized").shift(j).scale(sign(j))
}

/// `Orb(γ, Σ c_i φ'_i, s)` for integer coefficients.
pub fn orb_s_combination(orbit: &SOrbit, coeffs: &BTreeMap<usize, Rational>) -> Result<OrbitalValue> {
    let mut v = OrbitalValue::zero();
    for (i, c) in coeffs {
        if !c.is_integer() {
            return Err(Error::InvalidInput(format!("non-integral coefficient {c}")));
        }
        let c = c.to_integer().to_i64().ok_or_else(|| Error::Range("coefficient overflow".into()))?;
        v = v.add(&orb_s(orbit, *i).scale(c));
    }
    Ok(v)
}

/// `Orb(γ, φ', s)` for `φ'` in the `φ'_i` basis, with `q = p`.
pub fn orb_s_module(orbit: &SOrbit, element: &SModuleElement) -> Result<OrbitalValue> {
    let q = int(orbit.config().p as i64);
    orb_s_combination(orbit, &element.specialize(&q))
}

/// `Orb(γ, φ̃'_m, s)`.
pub fn orb_s_tilde(orbit: &SOrbit, m: usize) -> OrbitalValue {
    orb_s_module(orbit, &bc_s_eta_inverse(m)).expect("integer coefficients")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HermitianKind {
    /// Identity Gram matrix, the split plane `W_0`.
    Split,
    /// Gram matrix `diag(1, p)`, the non-split plane.
    Nonsplit,
}

/// `g` unitary for the Gram matrix of `kind`, known to the stored precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UOrbit {
    g: [[TruncatedElement; 2]; 2],
    kind: HermitianKind,
}

impl UOrbit {
    pub fn new(g: [[TruncatedElement; 2]; 2], kind: HermitianKind) -> Result<Self> {
        let u = UOrbit { g, kind };
        u.check_unitary()?;
        Ok(u)
    }

    pub fn exact(g: Mat2, kind: HermitianKind) -> Result<Self> {
        Self::new(g.map(|row| row.map(TruncatedElement::exact)), kind)
    }

    pub fn entries(&self) -> &[[TruncatedElement; 2]; 2] {
        &self.g
    }

    pub fn kind(&self) -> HermitianKind {
        self.kind
    }

    pub fn config(&self) -> PrimeConfig {
        self.g[0][0].config()
    }

    pub fn gram(&self) -> [FieldElement; 2] {
        let cfg = self.config();
        match self.kind {
            HermitianKind::Split => [FieldElement::one(cfg), FieldElement::one(cfg)],
            HermitianKind::Nonsplit => [FieldElement::one(cfg), FieldElement::from_int(cfg.p as i64, cfg)],
        }
    }

    fn check_unitary(&self) -> Result<()> {
        let gram = self.gram().map(TruncatedElement::exact);
        for i in 0..2 {
            for j in 0..2 {
                let mut s = TruncatedElement::exact(FieldElement::zero(self.config()));
                for (k, gk) in gram.iter().enumerate() {
                    s = s.add(&self.g[k][i].conj().mul(gk).mul(&self.g[k][j]));
                }
                let target = if i == j { gram[i].clone() } else { TruncatedElement::exact(FieldElement::zero(self.config())) };
                if !s.sub(&target).is_zero_to_precision() {
                    return Err(Error::InvalidInput("matrix is not unitary for the hermitian form".into()));
                }
            }
        }
        Ok(())
    }

    /// `(a, d, bc)`.
    pub fn invariants(&self) -> (TruncatedElement, TruncatedElement, TruncatedElement) {
        (self.g[0][0].clone(), self.g[1][1].clone(), self.g[0][1].mul(&self.g[1][0]))
    }

    /// `v(1 - a ā)`.
    pub fn r(&self) -> Result<i64> {
        let one = TruncatedElement::exact(FieldElement::one(self.config()));
        let a = &self.g[0][0];
        one.sub(&a.mul(&a.conj())).valuation()
    }

    /// Whether the invariants agree with those of `γ` to the known precision.
    pub fn matches(&self, orbit: &SOrbit) -> bool {
        let (a, d, bc) = self.invariants();
        let eq = |x: &TruncatedElement, y: &FieldElement| {
            x.sub(&TruncatedElement::exact(y.clone())).is_zero_to_precision()
        };
        eq(&a, orbit.a()) && eq(&d, orbit.d()) && eq(&bc, &orbit.bc())
    }

    fn matching(orbit: &SOrbit, precision: u32, kind: HermitianKind) -> Result<Self> {
        let cfg = orbit.config();
        let r = orbit.r;
        let (shift, gram2) = match kind {
            HermitianKind::Split => (0, 1),
            HermitianKind::Nonsplit => (1, cfg.p as i64),
        };
        if (r - shift).rem_euclid(2) != 0 {
            return Err(Error::InvalidInput(format!("r = {r} does not match the {kind:?} plane")));
        }
        let a = orbit.a().clone();
        let one = FieldElement::one(cfg);
        let one_minus_na = &one - &a.norm();
        let unit = &one_minus_na * &FieldElement::p_power(-r, cfg);
        let n = precision.max(r.unsigned_abs() as u32 + 8);
        // x x̄ = (1 - a ā) / gram2
        let x0 = solve_norm(&unit, n)?;
        let x = TruncatedElement::exact(FieldElement::p_power((r - shift) / 2, cfg)).mul(&x0);
        let lambda = -&orbit.b().checked_div(&orbit.b().conj())?;
        let lam = TruncatedElement::exact(lambda);
        let ex = |e: FieldElement| TruncatedElement::exact(e);
        let g = match kind {
            HermitianKind::Split => [
                [ex(a.clone()), x.clone()],
                [lam.mul(&x.conj()).neg(), ex(&orbit.b().checked_div(&orbit.b().conj())? * &-&a.conj())],
            ],
            HermitianKind::Nonsplit => [
                [ex(a.clone()), lam.mul(&ex(FieldElement::from_int(gram2, cfg))).mul(&x.conj()).neg()],
                [x.clone(), lam.mul(&ex(a.conj()))],
            ],
        };
        let u = UOrbit::new(g, kind)?;
        if !u.matches(orbit) {
            return Err(Error::Mismatch("constructed unitary element does not match γ".into()));
        }
        Ok(u)
    }

    /// A split-plane element with the invariants of `γ`; needs `r` even.
    pub fn matching_split(orbit: &SOrbit, precision: u32) -> Result<Self> {
        Self::matching(orbit, precision, HermitianKind::Split)
    }

    /// A non-split-plane element with the invariants of `γ`; needs `r` odd.
    pub fn matching_nonsplit(orbit: &SOrbit, precision: u32) -> Result<Self> {
        Self::matching(orbit, precision, HermitianKind::Nonsplit)
    }
}

fn known_val(e: &TruncatedElement) -> Result<Valuation> {
    if e.is_exact() {
        Ok(e.approx().val())
    } else {
        e.valuation().map(Valuation::Finite)
    }
}

/// `Orb(g, φ_m) ∈ {0, 1}` on the split plane, by two criteria that must
/// agree: `r = -2m` (`r ≥ 0` for `m = 0`), and all entries of valuation
/// `-m` (all entries integral for `m = 0`).
pub fn orb_u_support(g: &UOrbit, m: usize) -> Result<u8> {
    if g.kind != HermitianKind::Split {
        return Err(Error::InvalidInput("orb_U_support needs the split plane".into()));
    }
    let m = m as i64;
    let r = g.r()?;
    let vals = g
        .g
        .iter()
        .flatten()
        .map(known_val)
        .collect::<Result<Vec<_>>>()?;
    let (by_r, by_entries) = if m == 0 {
        (r >= 0, vals.iter().all(|v| *v >= Valuation::Finite(0)))
    } else {
        (r == -2 * m, vals.iter().all(|v| *v == Valuation::Finite(-m)))
    };
    if by_r != by_entries {
        return Err(Error::CriteriaDisagree(format!("r = {r}, entry valuations {vals:?}, m = {m}")));
    }
    Ok(u8::from(by_r))
}

/// Volume of `{h ∈ GL_2(F_0) : x h ∈ M_2(O_F), v(det x h) = m}` for the
/// Haar measure with `vol(GL_2(O_{F_0})) = 1`, via `h = diag(α, β) n(z) k`.
fn iwasawa_volume(x: &Mat2, m: i64) -> Result<Rational> {
    let cfg = x[0][0].config();
    let p = cfg.p;
    let vdet = mat_det(x).val_finite()?;
    let mu = x[0][0].val().min(x[1][0].val()).finite().expect("invertible");
    let total = m - vdet;
    let mut vol = Rational::zero();
    // first column integral: a ≥ -μ; eliminating z from the second column
    // forces b ≥ μ - v(det x)
    for a in -mu..=total - mu + vdet {
        let b = total - a;
        let pa = FieldElement::p_power(a, cfg);
        let pb = FieldElement::p_power(b, cfg);
        // balls z ∈ c + p^ρ Z_p, from A z + B ∈ Z_p coordinatewise
        let mut balls: Vec<(Rational, i64)> = Vec::new();
        let mut empty = false;
        for row in x {
            let aa = &row[0] * &pa;
            let bb = &row[1] * &pb;
            for (ac, bc) in [(aa.x(), bb.x()), (aa.y(), bb.y())] {
                if ac.is_zero() {
                    if vp_rational(bc, p) < Valuation::Finite(0) {
                        empty = true;
                    }
                } else {
                    let rho = -vp_rational(ac, p).finite().expect("nonzero");
                    balls.push((-(bc / ac), rho));
                }
            }
        }
        if empty {
            continue;
        }
        let (c0, rho0) = balls.iter().max_by_key(|b| b.1).cloned().expect("first column is nonzero");
        if balls.iter().all(|(c, rho)| vp_rational(&(&c0 - c), p) >= Valuation::Finite(*rho)) {
            vol += crate::symfun::rational_pow(&int(p as i64), -rho0);
        }
    }
    Ok(vol)
}

/// `Orb((1, g), 1_{K'♭} ⊗ f'_m, s)` summed over `h' = ϖ^k` with the inner
/// `GL_2(F_0)` integral done by the Iwasawa decomposition; the result is in
/// `Z' = q^{-s}`. Asserts agreement with `η̃(g)^{-1} Orb(γ, r^η_*(f'_m), 2s)`.
pub fn homogeneous_orb_oracle(g: &Mat2, m: usize) -> Result<OrbitalValue> {
    let lhs = homogeneous_orb_sum(g, m)?;
    let rhs = homogeneous_orb_closed(g, m)?;
    if lhs != rhs {
        return Err(Error::Mismatch(format!("homogeneous {lhs} vs inhomogeneous {rhs}")));
    }
    Ok(lhs)
}

/// `γ = g ḡ^{-1}` as an orbit.
pub fn symmetric_image(g: &Mat2) -> Result<SOrbit> {
    SOrbit::from_matrix(mat_mul(g, &mat_inv(&mat_conj(g))?))
}

/// The homogeneous side by direct summation.
pub fn homogeneous_orb_sum(g: &Mat2, m: usize) -> Result<OrbitalValue> {
    let gamma = symmetric_image(g)?;
    let m = m as i64;
    let vdet = mat_det(g).val_finite()?;
    // x h integral with v(det) = m bounds the entries of x x̄^{-1} below by -m
    let lo = -m - gamma.c().val_finite()?;
    let hi = gamma.b().val_finite()? + m;
    let mut v = OrbitalValue::zero();
    for k in lo..=hi {
        let pk = FieldElement::p_power(-k, g[0][0].config());
        let x = [[&g[0][0] * &pk, &g[0][1] * &pk], [g[1][0].clone(), g[1][1].clone()]];
        let j = iwasawa_volume(&x, m)?;
        if !j.is_integer() {
            return Err(Error::Mismatch(format!("non-integral volume {j}")));
        }
        let j = j.to_integer().to_i64().ok_or_else(|| Error::Range("volume overflow".into()))?;
        v.add_term(2 * k, sign(m - vdet + k) * j);
    }
    Ok(v)
}

/// `η̃(g)^{-1} Orb(γ, r^η_*(f'_m), 2s)` in `Z' = q^{-s}`.
pub fn homogeneous_orb_closed(g: &Mat2, m: usize) -> Result<OrbitalValue> {
    let gamma = symmetric_image(g)?;
    let vdet = mat_det(g).val_finite()?;
    Ok(orb_s_module(&gamma, &r_eta_star(m as i64))?.substitute_power(2).scale(sign(vdet)))
}

/// Seeded sampler of orbits with prescribed `r`.
pub struct OrbitSampler {
    cfg: PrimeConfig,
    rng: ChaCha8Rng,
    bound: i64,
}

impl OrbitSampler {
    pub fn new(cfg: PrimeConfig, seed: u64) -> Self {
        OrbitSampler { cfg, rng: ChaCha8Rng::seed_from_u64(seed), bound: 12 }
    }

    fn coprime(&mut self, allow_p: bool) -> BigInt {
        let p = self.cfg.p as i64;
        loop {
            let n = self.rng.gen_range(-self.bound..=self.bound);
            if n != 0 && (allow_p || n % p != 0) {
                return BigInt::from(n);
            }
        }
    }

    /// A `p`-adic unit of `F_0`.
    pub fn unit_rational(&mut self) -> Rational {
        let num = self.coprime(false);
        let den = self.coprime(false).abs();
        Rational::new(num, den)
    }

    /// A `p`-integral rational, possibly zero.
    pub fn integral_rational(&mut self) -> Rational {
        if self.rng.gen_bool(0.2) {
            return Rational::zero();
        }
        let num = self.coprime(true);
        let den = self.coprime(false).abs();
        Rational::new(num, den)
    }

    /// A unit of `F`.
    pub fn unit(&mut self) -> FieldElement {
        loop {
            let e = FieldElement::new(self.integral_rational(), self.integral_rational(), self.cfg);
            if e.val() == Valuation::Finite(0) {
                return e;
            }
        }
    }

    /// A normalized orbit with `v(1 - a ā) = r`; odd `r` must be positive.
    pub fn orbit_with_r(&mut self, r: i64) -> Result<SOrbit> {
        let cfg = self.cfg;
        let one = FieldElement::one(cfg);
        let a = match r {
            r if r < 0 && r % 2 != 0 => {
                return Err(Error::Range(format!("v(1 - aā) = {r} is impossible")));
            }
            r if r < 0 => &FieldElement::p_power(r / 2, cfg) * &self.unit(),
            0 => loop {
                let a = if self.rng.gen_bool(0.5) {
                    &FieldElement::p_power(1, cfg) * &self.unit()
                } else {
                    self.unit()
                };
                if (&one - &a.norm()).val() == Valuation::Finite(0) {
                    break a;
                }
            },
            r => {
                let z = self.unit();
                let lambda = z.checked_div(&z.conj())?;
                let w = FieldElement::new(self.unit_rational(), self.integral_rational(), cfg);
                &lambda * &(&one + &(&FieldElement::p_power(r, cfg) * &w))
            }
        };
        let b = &FieldElement::p_power(r, cfg) * &self.unit();
        let orbit = make_gamma(a, b)?;
        debug_assert!(orbit.is_normalized() && orbit.r() == r);
        Ok(orbit)
    }

    /// An invertible `g ∈ GL_2(F)` with `g ḡ^{-1}` regular semisimple.
    pub fn gl2(&mut self) -> Mat2 {
        loop {
            let mut e = || {
                let s = self.rng.gen_range(-1..=1);
                let u = FieldElement::new(self.integral_rational(), self.integral_rational(), self.cfg);
                &FieldElement::p_power(s, self.cfg) * &u
            };
            let g = [[e(), e()], [e(), e()]];
            if !mat_det(&g).is_zero() && symmetric_image(&g).is_ok() {
                return g;
            }
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// One JSON record per orbit and `m`.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub p: u64,
    pub a: String,
    pub b: String,
    pub r: i64,
    pub m: usize,
    pub laurent: OrbitalValue,
    pub value0: String,
    pub dvalue0_logq: String,
    pub omega: i8,
}

/// Record for `Orb(γ, φ̃'_m, s)`.
pub fn orbit_record(orbit: &SOrbit, m: usize) -> OrbitRecord {
    let v = orb_s_tilde(orbit, m);
    OrbitRecord {
        p: orbit.config().p,
        a: orbit.a().to_string(),
        b: orbit.b().to_string(),
        r: orbit.r(),
        m,
        value0: crate::rational_string(&v.value_at_0()),
        dvalue0_logq: crate::rational_string(&v.derivative_at_0()),
        laurent: v,
        omega: transfer_factor(orbit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PrimeConfig {
        PrimeConfig::default()
    }

    fn fe(s: &str) -> FieldElement {
        FieldElement::parse(s, cfg()).unwrap()
    }

    #[test]
    fn gamma_construction() {
        let g = make_gamma(fe("0"), fe("1")).unwrap();
        assert!(g.a().is_zero() && g.d().is_zero());
        assert!(make_gamma(fe("1"), fe("1")).is_err());
        assert!(make_gamma(fe("2"), fe("0")).is_err());
        // v(c) = v(1 - Na) - v(b)
        let g = make_gamma(fe("4"), fe("3")).unwrap();
        assert_eq!(g.r(), 1);
        assert!(g.is_normalized());
        assert_eq!(match_class(&g), MatchClass::Nonsplit);
        assert_eq!(transfer_factor(&g), -1);
    }

    #[test]
    fn closed_form_examples() {
        let mut s = OrbitSampler::new(cfg(), 1);
        let g1 = s.orbit_with_r(1).unwrap();
        assert_eq!(orb_s_closed(&g1, 1).unwrap().to_string(), "-Z^-1 + Z^2");
        assert_eq!(orb_s_closed(&g1, 0).unwrap().to_string(), "1 - Z");
        let gm2 = s.orbit_with_r(-2).unwrap();
        assert_eq!(orb_s_closed(&gm2, 1).unwrap().to_string(), "-Z^-1");
        assert!(orb_s_closed(&gm2, 0).unwrap().is_zero());
        let unnormalized = make_gamma(fe("4"), fe("1")).unwrap();
        assert_eq!(orb_s_closed(&unnormalized, 1), Err(Error::NotNormalized(1)));
    }

    #[test]
    fn oracle_agrees() {
        let mut s = OrbitSampler::new(cfg(), 2);
        for r in [-6, -4, -2, 0, 1, 2, 3, 4, 5] {
            let o = s.orbit_with_r(r).unwrap();
            for m in 0..5 {
                assert_eq!(orb_s_oracle(&o, m), orb_s_closed(&o, m).unwrap(), "r={r} m={m}");
            }
        }
        let o = make_gamma(fe("4"), fe("1/9")).unwrap();
        for m in 0..4 {
            assert_eq!(orb_s_oracle(&o, m), orb_s(&o, m));
        }
    }

    #[test]
    fn tilde_values() {
        let mut s = OrbitSampler::new(cfg(), 3);
        let g1 = s.orbit_with_r(1).unwrap();
        let v = orb_s_tilde(&g1, 1);
        assert_eq!((v.value_at_0(), v.derivative_at_0()), (int(0), int(1)));
        let g3 = s.orbit_with_r(3).unwrap();
        let v = orb_s_tilde(&g3, 0);
        assert_eq!((v.value_at_0(), v.derivative_at_0()), (int(0), int(2)));
    }

    #[test]
    fn matched_unitary_elements() {
        let mut s = OrbitSampler::new(cfg(), 4);
        for r in [-4, -2, 0, 2, 4] {
            let o = s.orbit_with_r(r).unwrap();
            let g = UOrbit::matching_split(&o, 16).unwrap();
            assert_eq!(g.r().unwrap(), r);
            for m in 0..4usize {
                let expect = u8::from(if m == 0 { r >= 0 } else { r == -2 * m as i64 });
                assert_eq!(orb_u_support(&g, m).unwrap(), expect);
            }
            assert!(UOrbit::matching_nonsplit(&o, 16).is_err());
        }
        for r in [1, 3] {
            let o = s.orbit_with_r(r).unwrap();
            let g = UOrbit::matching_nonsplit(&o, 16).unwrap();
            assert_eq!(g.r().unwrap(), r);
            assert!(orb_u_support(&g, 0).is_err());
        }
    }

    #[test]
    fn homogeneous_side() {
        let mut s = OrbitSampler::new(cfg(), 5);
        for _ in 0..6 {
            let g = s.gl2();
            for m in 0..4 {
                homogeneous_orb_oracle(&g, m).unwrap();
            }
        }
    }
}

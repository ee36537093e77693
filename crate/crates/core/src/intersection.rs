//! The geometric side in rank one: fundamental matrices of the lattices
//! `⟨g u₀, ϖ^m u₀⟩`, the Kudla–Rapoport pairing in the `(0, odd)` case and
//! `Int(g, φ_m)`.

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{at_distance, standard_selfdual, EnumOptions, LatticeContext};
use crate::localfield::{rat, FieldElement, Rational};
use crate::orbital::{HermitianKind, Mat2, UOrbit};
use crate::symfun::QLaurent;

/// A nonsingular hermitian `2 × 2` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalMatrix {
    a: Mat2,
}

impl FundamentalMatrix {
    pub fn new(a: Mat2) -> Result<Self> {
        for i in 0..2 {
            for j in 0..2 {
                if a[i][j] != a[j][i].conj() {
                    return Err(Error::InvalidInput("matrix is not hermitian".into()));
                }
            }
        }
        let f = FundamentalMatrix { a };
        if f.det().is_zero() {
            return Err(Error::InvalidInput("singular fundamental matrix".into()));
        }
        Ok(f)
    }

    /// `[[1, ā ϖ^m], [a ϖ^m, ϖ^{2m}]]`, the Gram matrix of `(g u₀, ϖ^m u₀)`
    /// when `(g u₀, u₀) = ā` and `(u₀, u₀) = 1`.
    pub fn for_element(a: &FieldElement, m: u32) -> Result<Self> {
        let cfg = a.config();
        let pm = FieldElement::p_power(m as i64, cfg);
        Self::new([
            [FieldElement::one(cfg), &a.conj() * &pm],
            [a * &pm, FieldElement::p_power(2 * m as i64, cfg)],
        ])
    }

    /// From a non-split-plane element; its `(1,1)` entry carries the pairing.
    pub fn from_unitary(g: &UOrbit, m: u32) -> Result<Self> {
        if g.kind() != HermitianKind::Nonsplit {
            return Err(Error::InvalidInput("the fundamental matrix lives on the non-split plane".into()));
        }
        let a = &g.entries()[0][0];
        if !a.is_exact() {
            return Err(Error::Precision("the (1,1) entry must be exact".into()));
        }
        Self::for_element(a.approx(), m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.a
    }

    pub fn det(&self) -> FieldElement {
        &(&self.a[0][0] * &self.a[1][1]) - &(&self.a[0][1] * &self.a[1][0])
    }

    /// `(a₁, a₂)`: `a₁` the minimal entry valuation, `a₁ + a₂ = v(det A)`.
    pub fn invariants(&self) -> (i64, i64) {
        let a1 = self.a.iter().flatten().map(|e| e.val()).min().and_then(|v| v.finite()).expect("nonzero");
        let d = self.det().val_finite().expect("nonsingular");
        (a1, d - a1)
    }
}

pub fn fundamental_invariants(a: &FundamentalMatrix) -> (i64, i64) {
    a.invariants()
}

/// `⟨𝒵(x), 𝒵(y)⟩` for fundamental invariants `(0, r)` with `r` odd: `(r+1)/2`.
pub fn kr_pairing(invariants: (i64, i64)) -> Result<Rational> {
    let (a1, r) = invariants;
    if a1 != 0 || r.rem_euclid(2) != 1 || r < 0 {
        return Err(Error::UnimplementedRegime(format!("pairing for invariants ({a1}, {r})")));
    }
    Ok(rat(r + 1, 2))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectionResult {
    pub r: i64,
    pub m: u32,
    #[serde(serialize_with = "crate::serialize_rational")]
    pub value: Rational,
}

/// `Int(g, φ_m)` for `v(1 - aā) = r` odd: `(r+1)/2` for `m = 0` and the
/// difference `kr(0, 2m+r) - kr(0, 2m-2+r)` for `m ≥ 1`.
pub fn int_g_phi(r: i64, m: u32) -> Result<IntersectionResult> {
    if r < 1 || r % 2 == 0 {
        return Err(Error::Range(format!("Int(g, φ_m) needs r odd and positive, got {r}")));
    }
    let mi = m as i64;
    let value = if m == 0 {
        kr_pairing((0, r))?
    } else {
        kr_pairing((0, 2 * mi + r))? - kr_pairing((0, 2 * (mi - 1) + r))?
    };
    Ok(IntersectionResult { r, m, value })
}

/// `Int(g, φ_m)` from the fundamental matrices of `⟨g u₀, ϖ^j u₀⟩`, where
/// `a = (g u₀, u₀)` conjugated.
pub fn int_from_fundamental(a: &FieldElement, m: u32) -> Result<Rational> {
    let kr = |j: u32| -> Result<Rational> { kr_pairing(FundamentalMatrix::for_element(a, j)?.invariants()) };
    if m == 0 {
        kr(0)
    } else {
        Ok(kr(m)? - kr(m - 1)?)
    }
}

/// `Int(g, φ_m)` from the fundamental matrices of a non-split-plane element.
pub fn int_from_unitary(g: &UOrbit, m: u32) -> Result<Rational> {
    let kr = |j: u32| -> Result<Rational> { kr_pairing(FundamentalMatrix::from_unitary(g, j)?.invariants()) };
    if m == 0 {
        kr(0)
    } else {
        Ok(kr(m)? - kr(m - 1)?)
    }
}

/// `q^{2m-1}(q+1)`.
pub fn degree_tm(m: u32, q: u64) -> Result<BigInt> {
    if m == 0 {
        return Err(Error::Range("degree of T_m needs m ≥ 1".into()));
    }
    Ok(num_traits::pow(BigInt::from(q), 2 * m as usize - 1) * BigInt::from(q + 1))
}

pub fn degree_tm_symbolic(m: u32) -> Result<QLaurent> {
    if m == 0 {
        return Err(Error::Range("degree of T_m needs m ≥ 1".into()));
    }
    let mut d = QLaurent::zero();
    d.add_term(2 * m as i64, Rational::from_integer(1.into()));
    d.add_term(2 * m as i64 - 1, Rational::from_integer(1.into()));
    Ok(d)
}

/// Number of self-dual lattices at relative position `(m, -m)` from `Ξ` in
/// the split plane.
pub fn degree_tm_by_lattices(m: u32, q: u64, opts: &EnumOptions) -> Result<u64> {
    let ctx = LatticeContext::new(2, q, m.max(1))?;
    Ok(at_distance(&standard_selfdual(&ctx), m, opts)?.len() as u64)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionRecord {
    pub r: i64,
    pub m: u32,
    pub int_value: String,
    pub degree: Option<String>,
}

pub fn intersection_record(r: i64, m: u32, q: u64) -> Result<IntersectionRecord> {
    let v = int_g_phi(r, m)?;
    Ok(IntersectionRecord {
        r,
        m,
        int_value: crate::rational_string(&v.value),
        degree: degree_tm(m, q).ok().map(|d| d.to_string()),
    })
}

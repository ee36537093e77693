//! Verification harness: the fundamental lemma in both parity branches, the
//! arithmetic fundamental lemma for `n = 1`, the kernel of `∂Orb` on the
//! unitary Hecke algebra, and the set-level commutativity check.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::hecke::{bc_s_eta, bc_s_eta_inverse, sat_u2_phi};
use crate::intersection::{int_from_unitary, int_g_phi};
use crate::lattice::{commutativity_check, standard_selfdual, EnumOptions, LatticeContext};
use crate::localfield::{int, is_prime, PrimeConfig, Rational};
use crate::orbital::{
    orb_s_module, orb_s_tilde, orb_u_support, transfer_factor, OrbitSampler, SOrbit, UOrbit,
};
use crate::rational_string;
use crate::symfun::UniPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ReportKind {
    Fl,
    Afl,
    Kernel,
    Comm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Case {
    pub inputs: Value,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

impl Case {
    fn new(inputs: Value, lhs: String, rhs: String) -> Self {
        let pass = lhs == rhs;
        Case { inputs, lhs, rhs, pass }
    }

    fn rational(inputs: Value, lhs: &Rational, rhs: &Rational) -> Self {
        Case { inputs, lhs: rational_string(lhs), rhs: rational_string(rhs), pass: lhs == rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedCase {
    pub inputs: Value,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub kind: ReportKind,
    pub parameters: Map<String, Value>,
    pub cases: Vec<Case>,
    pub skipped: Vec<SkippedCase>,
    pub summary: Summary,
}

impl VerificationReport {
    fn new(kind: ReportKind, parameters: Value, cases: Vec<Case>, skipped: Vec<SkippedCase>) -> Self {
        let passed = cases.iter().filter(|c| c.pass).count();
        let summary = Summary {
            total: cases.len() + skipped.len(),
            passed,
            failed: cases.len() - passed,
            skipped: skipped.len(),
        };
        let parameters = match parameters {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        VerificationReport { kind, parameters, cases, skipped, summary }
    }

    /// No failed case and at least one case run.
    pub fn passed(&self) -> bool {
        self.summary.failed == 0 && !self.cases.is_empty()
    }
}

fn orbit_inputs(o: &SOrbit, m: usize) -> Value {
    json!({ "a": o.a().to_string(), "b": o.b().to_string(), "r": o.r(), "m": m })
}

/// Even values of `r` covering `r < -2m`, `r = -2m` and `r > -2m`.
fn even_r(m_max: usize, i: usize) -> i64 {
    let span = 2 * m_max as i64 + 2;
    let count = span as usize + 1;
    -span + 2 * (i % count) as i64
}

/// FL for `φ_m` and `φ̃'_m`, `m ≤ m_max`, over `sample_size` orbits of
/// alternating parity.
pub fn fl_check(cfg: PrimeConfig, sample_size: usize, m_max: usize, seed: u64) -> Result<VerificationReport> {
    let mut sampler = OrbitSampler::new(cfg, seed);
    let mut orbits = Vec::with_capacity(sample_size);
    for i in 0..sample_size {
        let r = if i % 2 == 0 { 2 * ((i / 2) % 6) as i64 + 1 } else { even_r(m_max, i / 2) };
        orbits.push(sampler.orbit_with_r(r)?);
    }
    let per_orbit: Vec<(Vec<Case>, Vec<SkippedCase>)> = orbits
        .par_iter()
        .map(|o| {
            let mut cases = Vec::new();
            let mut skipped = Vec::new();
            let omega = int(transfer_factor(o) as i64);
            if o.r() % 2 != 0 {
                for m in 0..=m_max {
                    let v = orb_s_tilde(o, m).value_at_0();
                    cases.push(Case::rational(orbit_inputs(o, m), &v, &int(0)));
                }
                return (cases, skipped);
            }
            let g = match UOrbit::matching_split(o, cfg.precision) {
                Ok(g) => g,
                Err(e) => {
                    skipped.push(SkippedCase { inputs: orbit_inputs(o, 0), reason: e.to_string() });
                    return (cases, skipped);
                }
            };
            for m in 0..=m_max {
                match orb_u_support(&g, m) {
                    Ok(u) => {
                        let rhs = &omega * &orb_s_tilde(o, m).value_at_0();
                        cases.push(Case::rational(orbit_inputs(o, m), &int(u as i64), &rhs));
                    }
                    Err(e) => skipped.push(SkippedCase { inputs: orbit_inputs(o, m), reason: e.to_string() }),
                }
            }
            (cases, skipped)
        })
        .collect();
    let (cases, skipped): (Vec<_>, Vec<_>) = per_orbit.into_iter().unzip();
    Ok(VerificationReport::new(
        ReportKind::Fl,
        json!({ "p": cfg.p, "seed": seed, "sample_size": sample_size, "m_max": m_max }),
        cases.into_iter().flatten().collect(),
        skipped.into_iter().flatten().collect(),
    ))
}

fn check_odd_r(r: i64) -> Result<()> {
    if r < 1 || r % 2 == 0 {
        return Err(Error::Range(format!("r must be odd and positive, got {r}")));
    }
    Ok(())
}

/// `Int(g, φ_m) = -ω(γ) ∂Orb(γ, φ̃'_m)` (in units of `log q`) for each `r`
/// in `r_list` and `m ≤ m_max`.
pub fn afl_check(cfg: PrimeConfig, r_list: &[i64], m_max: usize, seed: u64) -> Result<VerificationReport> {
    for &r in r_list {
        check_odd_r(r)?;
    }
    let mut sampler = OrbitSampler::new(cfg, seed);
    let mut cases = Vec::new();
    for &r in r_list {
        let o = sampler.orbit_with_r(r)?;
        let g = UOrbit::matching_nonsplit(&o, cfg.precision)?;
        let omega = int(transfer_factor(&o) as i64);
        let rows: Vec<Result<Case>> = (0..=m_max)
            .into_par_iter()
            .map(|m| {
                let lhs = int_g_phi(r, m as u32)?.value;
                let via_matrix = int_from_unitary(&g, m as u32)?;
                let rhs = -(&omega * &orb_s_tilde(&o, m).derivative_at_0());
                let mut inputs = orbit_inputs(&o, m);
                inputs["omega"] = json!(transfer_factor(&o));
                inputs["int_fundamental"] = json!(rational_string(&via_matrix));
                let mut case = Case::rational(inputs, &lhs, &rhs);
                case.pass &= via_matrix == lhs;
                Ok(case)
            })
            .collect();
        for c in rows {
            cases.push(c?);
        }
    }
    Ok(VerificationReport::new(
        ReportKind::Afl,
        json!({ "p": cfg.p, "seed": seed, "r_list": r_list, "m_max": m_max }),
        cases,
        Vec::new(),
    ))
}

fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != int(0)) else { continue };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for r in 0..m.len() {
            if r != rank && m[r][c] != int(0) {
                let f = &m[r][c] / &pivot;
                for k in c..cols {
                    let t = &f * &m[rank][k];
                    m[r][k] -= t;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn profile_text(p: &[Rational]) -> String {
    p.iter().map(rational_string).collect::<Vec<_>>().join(",")
}

/// The kernel of `∂Orb` on `ℋ_K` for `n = 1`: the `∂Orb` profile of `φ_m`
/// over the non-split-matching orbits is constant in `m ≥ 1`, and
/// `φ_m - φ_1` is killed for `2 ≤ m ≤ m_max`.
pub fn kernel_check(cfg: PrimeConfig, m_max: usize, seed: u64) -> Result<VerificationReport> {
    if m_max < 3 {
        return Err(Error::Range(format!("kernel_check needs m_max ≥ 3, got {m_max}")));
    }
    let mut sampler = OrbitSampler::new(cfg, seed);
    let rs: Vec<i64> = (1..=2 * m_max as i64).filter(|r| r % 2 == 1).collect();
    let orbits = rs.iter().map(|&r| sampler.orbit_with_r(r)).collect::<Result<Vec<_>>>()?;
    let profiles: Vec<Vec<Rational>> = (0..=m_max)
        .map(|m| {
            orbits
                .iter()
                .map(|o| -(&int(transfer_factor(o) as i64) * &orb_s_tilde(o, m).derivative_at_0()))
                .collect()
        })
        .collect();
    let mut cases = Vec::new();
    for m in 2..=m_max {
        cases.push(Case::new(
            json!({ "check": "profile", "m": m, "r": rs }),
            profile_text(&profiles[m]),
            profile_text(&profiles[1]),
        ));
    }
    let distinct = |b: bool| if b { "distinct" } else { "equal" }.to_string();
    cases.push(Case::new(
        json!({ "check": "profile phi_0 vs phi_1", "r": rs }),
        distinct(profiles[0] != profiles[1]),
        distinct(true),
    ));
    cases.push(Case::new(
        json!({ "check": "image rank", "m_max": m_max }),
        rank(&profiles).to_string(),
        "2".into(),
    ));
    for m in 2..=m_max {
        let lift = bc_s_eta_inverse(m).sub(&bc_s_eta_inverse(1));
        let image = bc_s_eta(&lift);
        let target = sat_u2_phi(m as i64).sub(&sat_u2_phi(1))?;
        cases.push(Case::new(
            json!({ "check": "lift", "m": m }),
            image.sat().to_text(),
            target.sat().to_text(),
        ));
        for o in &orbits {
            let d = orb_s_module(o, &lift)?.derivative_at_0();
            let mut inputs = orbit_inputs(o, m);
            inputs["check"] = json!("kernel");
            cases.push(Case::rational(inputs, &d, &int(0)));
        }
    }
    Ok(VerificationReport::new(
        ReportKind::Kernel,
        json!({ "p": cfg.p, "seed": seed, "m_max": m_max, "r": rs }),
        cases,
        Vec::new(),
    ))
}

/// `P_m`: `Sat(φ_m - φ_1)` at `q` as a polynomial in `𝔰_1`.
pub fn kernel_polynomial(m: i64, q: u64) -> Result<UniPoly> {
    sat_u2_phi(m).sub(&sat_u2_phi(1))?.sat().to_univariate(&int(q as i64))
}

/// `gcd(P_2, P_3) = 1` with a Bézout certificate `P_2 R_2 + P_3 R_3 = 1`,
/// at each `q`.
pub fn coprimality_check(q_values: &[u64]) -> Result<VerificationReport> {
    if q_values.is_empty() {
        return Err(Error::Range("no values of q given".into()));
    }
    let mut cases = Vec::new();
    for &q in q_values {
        if q == 2 || !is_prime(q) {
            return Err(Error::Range(format!("q = {q} is not an odd prime")));
        }
        let p2 = kernel_polynomial(2, q)?;
        let p3 = kernel_polynomial(3, q)?;
        let (g, r2, r3) = UniPoly::ext_gcd(&p2, &p3)?;
        let combo = p2.mul(&r2).add(&p3.mul(&r3));
        let inputs = json!({
            "q": q,
            "P2": p2.to_text("s1"),
            "P3": p3.to_text("s1"),
            "R2": r2.to_text("s1"),
            "R3": r3.to_text("s1"),
        });
        cases.push(Case::new(inputs.clone(), g.to_text("s1"), "1".into()));
        cases.push(Case::new(inputs, combo.to_text("s1"), "1".into()));
        let self_gcd = UniPoly::ext_gcd(&p2, &p2)?.0;
        cases.push(Case::new(
            json!({ "q": q, "check": "gcd(P2, P2) has the degree of P2" }),
            format!("{:?}", self_gcd.degree()),
            format!("{:?}", p2.degree()),
        ));
    }
    Ok(VerificationReport::new(ReportKind::Kernel, json!({ "q_values": q_values, "check": "coprimality" }), cases, Vec::new()))
}

/// The commutativity check seeded at the standard self-dual lattice.
pub fn comm_check(n: usize, p: u64, t: usize, t2: usize, opts: &EnumOptions) -> Result<VerificationReport> {
    let ctx = LatticeContext::new(n, p, 2)?;
    let rep = commutativity_check(&standard_selfdual(&ctx), t, t2, opts)?;
    let inputs = json!({ "n": n, "p": p, "t": t, "t2": t2 });
    let cases = vec![
        Case::new(inputs.clone(), rep.left_set_size.to_string(), rep.right_set_size.to_string()),
        Case::new(inputs, rep.equal.to_string(), "true".into()),
    ];
    Ok(VerificationReport::new(
        ReportKind::Comm,
        json!({ "n": n, "p": p, "t": t, "t2": t2, "budget": opts.budget }),
        cases,
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_reports_pass() {
        let cfg = PrimeConfig::default();
        let fl = fl_check(cfg, 20, 3, 0).unwrap();
        assert!(fl.passed(), "{:?}", fl.cases.iter().find(|c| !c.pass));
        assert_eq!(fl.summary.skipped, 0);
        let afl = afl_check(cfg, &[1, 3], 3, 0).unwrap();
        assert!(afl.passed());
        assert!(afl_check(cfg, &[2], 3, 0).is_err());
        let k = kernel_check(cfg, 3, 0).unwrap();
        assert!(k.passed(), "{:?}", k.cases.iter().find(|c| !c.pass));
        let c = coprimality_check(&[3]).unwrap();
        assert!(c.passed());
        assert!(coprimality_check(&[4]).is_err());
    }

    #[test]
    fn even_r_covers_the_three_regimes() {
        let rs: Vec<i64> = (0..9).map(|i| even_r(3, i)).collect();
        assert_eq!(rs, vec![-8, -6, -4, -2, 0, 2, 4, 6, 8]);
    }
}

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use hecke_afl::afl::{afl_check, fl_check};
use hecke_afl::intersection::{int_g_phi, kr_pairing};
use hecke_afl::lattice::{enum_vertex_in, standard_selfdual, EnumOptions, Lattice, LatticeContext, VertexLattice};
use hecke_afl::localfield::{int, rat};
use hecke_afl::orbital::{homogeneous_orb_oracle, orb_s_closed, orb_s_oracle, orb_s_tilde, OrbitSampler};
use hecke_afl::{FieldElement, PrimeConfig, Rational};

fn pool() -> &'static (Arc<LatticeContext>, Vec<VertexLattice>) {
    static POOL: OnceLock<(Arc<LatticeContext>, Vec<VertexLattice>)> = OnceLock::new();
    POOL.get_or_init(|| {
        let ctx = LatticeContext::new(3, 3, 2).unwrap();
        let xi = standard_selfdual(&ctx);
        let mut all = vec![xi.clone()];
        all.extend(enum_vertex_in(&xi, 2, &EnumOptions::default()).unwrap());
        (ctx, all)
    })
}

/// `col_i += c col_j`, or `col_i *= c` when `i == j` (then `c` is a unit).
#[derive(Clone, Debug)]
struct Move {
    i: usize,
    j: usize,
    x: i64,
    y: i64,
}

fn moves() -> impl Strategy<Value = Vec<Move>> {
    prop::collection::vec((0usize..3, 0usize..3, -9i64..10, -9i64..10), 1..8).prop_map(|v| {
        v.into_iter()
            .map(|(i, j, x, y)| {
                let x = if i == j && x % 3 == 0 { x + 1 } else { x };
                Move { i, j, x, y }
            })
            .collect()
    })
}

fn rebase(basis: &[Vec<FieldElement>], moves: &[Move], cfg: PrimeConfig) -> Vec<Vec<FieldElement>> {
    let mut b = basis.to_vec();
    for mv in moves {
        let c = FieldElement::new(int(mv.x), int(mv.y), cfg);
        if mv.i == mv.j {
            b[mv.i] = b[mv.i].iter().map(|e| e * &c).collect();
        } else {
            let add: Vec<FieldElement> = b[mv.j].iter().map(|e| e * &c).collect();
            b[mv.i] = b[mv.i].iter().zip(&add).map(|(e, a)| e + a).collect();
        }
    }
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonical_form_ignores_unimodular_rebasing(idx in any::<prop::sample::Index>(), mv in moves()) {
        let (ctx, all) = pool();
        let l = idx.get(all);
        let rebased = rebase(&l.basis(), &mv, ctx.config());
        let again = Lattice::from_basis(ctx, &rebased).unwrap();
        prop_assert_eq!(&again, l.lattice());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn duality_and_lattice_operations(a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (_, all) = pool();
        let (l, m) = (a.get(all).lattice(), b.get(all).lattice());
        prop_assert_eq!(&l.dual().dual(), l);
        prop_assert_eq!(l.intersection(m).dual(), l.dual().sum(&m.dual()));
        prop_assert!(l.sum(m).contains(l) && l.contains(&l.intersection(m)));
        prop_assert_eq!(a.get(all).type_t(), l.vertex_type().unwrap());
    }

    #[test]
    fn closed_orbital_integral_depends_only_on_r(seed in any::<u64>(), r in -8i64..9) {
        prop_assume!(r >= 0 || r % 2 == 0);
        let mut s = OrbitSampler::new(PrimeConfig::default(), seed);
        let (o1, o2) = (s.orbit_with_r(r).unwrap(), s.orbit_with_r(r).unwrap());
        for m in 0..=5 {
            let v = orb_s_closed(&o1, m).unwrap();
            prop_assert_eq!(&orb_s_oracle(&o1, m), &v);
            prop_assert_eq!(&orb_s_oracle(&o2, m), &v);
        }
    }

    #[test]
    fn transfer_vanishes_on_nonsplit_orbits(seed in any::<u64>(), k in 0i64..6) {
        let mut s = OrbitSampler::new(PrimeConfig::default(), seed);
        let o = s.orbit_with_r(2 * k + 1).unwrap();
        for m in 0..=6 {
            prop_assert_eq!(orb_s_tilde(&o, m).value_at_0(), int(0));
        }
    }

    #[test]
    fn homogeneous_side_matches(seed in any::<u64>()) {
        let mut s = OrbitSampler::new(PrimeConfig::default(), seed);
        let g = s.gl2();
        for m in 0..=3 {
            prop_assert!(homogeneous_orb_oracle(&g, m).is_ok());
        }
    }

    #[test]
    fn intersection_numbers(k in 0i64..20, m in 0u32..10) {
        let r = 2 * k + 1;
        let mut total = int_g_phi(r, 0).unwrap().value;
        for j in 1..=m {
            let v = int_g_phi(r, j).unwrap().value;
            prop_assert_eq!(&v, &int(1));
            total += v;
        }
        prop_assert_eq!(total, kr_pairing((0, 2 * m as i64 + r)).unwrap());
        let step = kr_pairing((0, r + 2)).unwrap() - kr_pairing((0, r)).unwrap();
        prop_assert_eq!(step, rat(1, 1));
    }
}

#[test]
fn tilde_values_separate_the_basis() {
    let mut s = OrbitSampler::new(PrimeConfig::default(), 3);
    let orbits: Vec<_> = (-12..=12)
        .filter(|r: &i64| *r >= 0 || r % 2 == 0)
        .map(|r| s.orbit_with_r(r).unwrap())
        .collect();
    let profiles: Vec<Vec<Rational>> =
        (0..=6).map(|m| orbits.iter().map(|o| orb_s_tilde(o, m).value_at_0()).collect()).collect();
    for i in 0..profiles.len() {
        for j in 0..i {
            assert_ne!(profiles[i], profiles[j], "φ̃'_{i} and φ̃'_{j} have the same profile");
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let cfg = PrimeConfig::default();
    let a = serde_json::to_string(&fl_check(cfg, 30, 4, 9).unwrap()).unwrap();
    let b = serde_json::to_string(&fl_check(cfg, 30, 4, 9).unwrap()).unwrap();
    assert_eq!(a, b);
    let a = serde_json::to_string(&afl_check(cfg, &[1, 3], 3, 9).unwrap()).unwrap();
    let b = serde_json::to_string(&afl_check(cfg, &[1, 3], 3, 9).unwrap()).unwrap();
    assert_eq!(a, b);
}

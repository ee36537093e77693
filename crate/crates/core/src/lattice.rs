//! Vertex lattices in the split hermitian space `F^n` (antidiagonal unit
//! Gram matrix `J`) and the lattice-model correspondences `ℕ^[t]`, `𝕋_{≤t}`
//! and `𝕋_t`.
//!
//! A lattice `L` with `ϖ^K Ξ ⊆ L ⊆ ϖ^{-K} Ξ` is stored through the module
//! `ϖ^K L / ϖ^{2K} Ξ` inside `(O_F/p^{2K})^n`, in column Hermite form: upper
//! triangular, pivots exactly `p^{e_i}`, entries above a pivot reduced
//! coordinatewise mod `p^{e_i}`. The form is unique, so equal lattices have
//! equal keys.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use indexmap::IndexSet;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localfield::{det, pow_mod, rational_mod, FieldElement, PrimeConfig, Rational};

pub const MAX_RANK: usize = 8;

type El = [u32; 2];
type Vector = [El; MAX_RANK];
const ZERO: El = [0, 0];
const ZERO_VEC: Vector = [ZERO; MAX_RANK];

/// Canonical form: `n` pivot exponents followed by the `(x, y)` pairs above
/// each pivot, column by column.
pub type Key = Box<[u16]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnumOptions {
    /// Cap on the size of any stored set of canonical forms.
    pub budget: u64,
    pub seed: u64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { budget: 5_000_000, seed: 0 }
    }
}

fn check_budget(len: usize, opts: &EnumOptions) -> Result<()> {
    if len as u64 > opts.budget {
        return Err(Error::Budget(opts.budget));
    }
    Ok(())
}

/// The residue field `F_{q²} = F_p[δ]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Fq2 {
    p: u32,
    eps: u32,
}

impl Fq2 {
    fn add(&self, a: El, b: El) -> El {
        [(a[0] + b[0]) % self.p, (a[1] + b[1]) % self.p]
    }

    fn sub(&self, a: El, b: El) -> El {
        [(a[0] + self.p - b[0]) % self.p, (a[1] + self.p - b[1]) % self.p]
    }

    fn neg(&self, a: El) -> El {
        self.sub(ZERO, a)
    }

    fn mul(&self, a: El, b: El) -> El {
        let p = self.p as u64;
        let (a0, a1, b0, b1) = (a[0] as u64, a[1] as u64, b[0] as u64, b[1] as u64);
        [((a0 * b0 + self.eps as u64 * (a1 * b1 % p)) % p) as u32, ((a0 * b1 + a1 * b0) % p) as u32]
    }

    fn conj(&self, a: El) -> El {
        [a[0], (self.p - a[1]) % self.p]
    }

    fn norm(&self, a: El) -> u32 {
        self.mul(a, self.conj(a))[0]
    }

    fn inv(&self, a: El) -> El {
        let n = self.norm(a) as u64;
        let ni = pow_mod(n, self.p as u64 - 2, self.p as u64) as u32;
        self.mul(self.conj(a), [ni, 0])
    }

    fn size(&self) -> u32 {
        self.p * self.p
    }

    fn element(&self, i: u32) -> El {
        [i % self.p, i / self.p]
    }

    /// `fibers[a]` lists all `λ` with `N(λ) = a`.
    fn norm_fibers(&self) -> Vec<Vec<El>> {
        let mut f = vec![Vec::new(); self.p as usize];
        for i in 0..self.size() {
            let e = self.element(i);
            f[self.norm(e) as usize].push(e);
        }
        f
    }

    /// Identity-form pairing `Σ conj(v_c) w_c`.
    fn dot(&self, v: &Vector, w: &Vector, len: usize) -> El {
        let mut s = ZERO;
        for c in 0..len {
            s = self.add(s, self.mul(self.conj(v[c]), w[c]));
        }
        s
    }
}

/// Totally isotropic `d`-dimensional subspaces of `F_{q²}^dim` for the
/// identity form, as RREF row bases, with a basis of each orthogonal.
struct IsoList {
    spaces: Vec<Vec<Vector>>,
    perps: Vec<Vec<Vector>>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

struct IsoSearch<'a> {
    fq: Fq2,
    dim: usize,
    pivots: &'a [usize],
    fibers: &'a [Vec<El>],
    budget: u64,
}

impl IsoSearch<'_> {
    fn rec(&self, rows: &mut Vec<Vector>, out: &mut Vec<Vec<Vector>>) -> Result<()> {
        let k = rows.len();
        if k == self.pivots.len() {
            out.push(rows.clone());
            check_budget(out.len(), &EnumOptions { budget: self.budget, seed: 0 })?;
            return Ok(());
        }
        let piv = self.pivots[k];
        let free: Vec<usize> =
            (piv + 1..self.dim).filter(|c| !self.pivots.contains(c)).collect();
        let Some((&last, head)) = free.split_last() else {
            // a pivot vector with no free entries has norm 1
            return Ok(());
        };
        let q2 = self.fq.size() as u64;
        let total = q2.pow(head.len() as u32);
        for idx in 0..total {
            let mut row = ZERO_VEC;
            row[piv] = [1, 0];
            let mut rem = idx;
            let mut s = 1u32;
            for &c in head {
                let e = self.fq.element((rem % q2) as u32);
                rem /= q2;
                row[c] = e;
                s = (s + self.fq.norm(e)) % self.fq.p;
            }
            let target = (self.fq.p - s) % self.fq.p;
            for &x in &self.fibers[target as usize] {
                row[last] = x;
                if rows.iter().all(|r| self.fq.dot(r, &row, self.dim) == ZERO) {
                    rows.push(row);
                    self.rec(rows, out)?;
                    rows.pop();
                }
            }
        }
        Ok(())
    }
}

fn build_iso_list(fq: Fq2, dim: usize, d: usize, budget: u64) -> Result<IsoList> {
    let fibers = fq.norm_fibers();
    let mut spaces = Vec::new();
    if 2 * d <= dim {
        for pivots in combinations(dim, d) {
            let search = IsoSearch { fq, dim, pivots: &pivots, fibers: &fibers, budget };
            search.rec(&mut Vec::new(), &mut spaces)?;
        }
    }
    let perps = spaces
        .iter()
        .map(|rows: &Vec<Vector>| {
            let pivots: Vec<usize> =
                rows.iter().map(|r| r.iter().position(|e| *e != ZERO).expect("nonzero row")).collect();
            (0..dim)
                .filter(|c| !pivots.contains(c))
                .map(|f| {
                    let mut x = ZERO_VEC;
                    x[f] = [1, 0];
                    for (j, r) in rows.iter().enumerate() {
                        x[pivots[j]] = fq.neg(fq.conj(r[f]));
                    }
                    x
                })
                .collect()
        })
        .collect();
    Ok(IsoList { spaces, perps })
}

type IsoCache = Mutex<HashMap<(Fq2, usize, usize), Arc<IsoList>>>;

fn iso_list(fq: Fq2, dim: usize, d: usize, budget: u64) -> Result<Arc<IsoList>> {
    static CACHE: OnceLock<IsoCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(l) = cache.lock().expect("cache lock").get(&(fq, dim, d)) {
        return Ok(l.clone());
    }
    let l = Arc::new(build_iso_list(fq, dim, d, budget)?);
    cache.lock().expect("cache lock").insert((fq, dim, d), l.clone());
    Ok(l)
}

/// Finds `P̄` with `P̄^* Ḡ P̄ = diag(I_r, 0)`; returns its columns and `r`.
fn standardize(fq: &Fq2, g: &[[El; MAX_RANK]; MAX_RANK], n: usize) -> (Vec<Vector>, usize) {
    let h = |v: &Vector, w: &Vector| -> El {
        let mut s = ZERO;
        for a in 0..n {
            if v[a] == ZERO {
                continue;
            }
            let mut t = ZERO;
            for b in 0..n {
                t = fq.add(t, fq.mul(g[a][b], w[b]));
            }
            s = fq.add(s, fq.mul(fq.conj(v[a]), t));
        }
        s
    };
    let fibers = fq.norm_fibers();
    let mut work: Vec<Vector> = (0..n)
        .map(|i| {
            let mut v = ZERO_VEC;
            v[i] = [1, 0];
            v
        })
        .collect();
    let mut good = Vec::new();
    loop {
        let pick = work.iter().position(|w| h(w, w) != ZERO);
        let i = match pick {
            Some(i) => i,
            None => {
                let mut pair = None;
                'outer: for i in 0..work.len() {
                    for j in 0..work.len() {
                        if i != j && h(&work[i], &work[j]) != ZERO {
                            pair = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                let Some((i, j)) = pair else { break };
                // h(w_i + c w_j) = Tr(c h_ij) = 2 for c = h_ij^-1
                let c = fq.inv(h(&work[i], &work[j]));
                let wj = work[j];
                for k in 0..n {
                    work[i][k] = fq.add(work[i][k], fq.mul(c, wj[k]));
                }
                i
            }
        };
        let w = work.swap_remove(i);
        let a = h(&w, &w)[0];
        let a_inv = fq.inv([a, 0])[0];
        let lambda = fibers[a_inv as usize][0];
        let mut v = ZERO_VEC;
        for k in 0..n {
            v[k] = fq.mul(lambda, w[k]);
        }
        for wk in work.iter_mut() {
            let c = h(&v, wk);
            if c != ZERO {
                for k in 0..n {
                    wk[k] = fq.sub(wk[k], fq.mul(c, v[k]));
                }
            }
        }
        good.push(v);
    }
    let r = good.len();
    good.extend(work);
    (good, r)
}

type Big = [i128; 2];

/// Arithmetic in `O_F / p^cap` on exact integer pairs.
struct ModRing {
    p: i128,
    eps: i128,
    q: i128,
    cap: u32,
}

impl ModRing {
    fn new(p: u64, eps: u64, cap: u32) -> Self {
        ModRing { p: p as i128, eps: eps as i128, q: (p as i128).pow(cap), cap }
    }

    fn red(&self, a: Big) -> Big {
        [a[0].rem_euclid(self.q), a[1].rem_euclid(self.q)]
    }

    fn mul(&self, a: Big, b: Big) -> Big {
        self.red([a[0] * b[0] + self.eps * (a[1] * b[1] % self.q), a[0] * b[1] + a[1] * b[0]])
    }

    fn vp(&self, mut x: i128) -> u32 {
        if x == 0 {
            return self.cap;
        }
        let mut v = 0;
        while x % self.p == 0 && v < self.cap {
            x /= self.p;
            v += 1;
        }
        v
    }

    fn val(&self, a: Big) -> u32 {
        self.vp(a[0]).min(self.vp(a[1]))
    }

    fn inv_int(&self, a: i128) -> i128 {
        let (mut r0, mut r1) = (a.rem_euclid(self.q), self.q);
        let (mut s0, mut s1) = (1i128, 0i128);
        while r1 != 0 {
            let t = r0 / r1;
            (r0, r1) = (r1, r0 - t * r1);
            (s0, s1) = (s1, s0 - t * s1);
        }
        debug_assert_eq!(r0, 1);
        s0.rem_euclid(self.q)
    }

    fn unit_inv(&self, a: Big) -> Big {
        let n = (a[0] * a[0] - self.eps * a[1] % self.q * a[1]).rem_euclid(self.q);
        let ni = self.inv_int(n);
        self.red([a[0] * ni, -a[1] * ni])
    }

    /// Valuations of the elementary divisors, capped at `cap`.
    fn smith_valuations(&self, mut m: Vec<Vec<Big>>) -> Vec<u32> {
        let n = m.len();
        for row in m.iter_mut() {
            for e in row.iter_mut() {
                *e = self.red(*e);
            }
        }
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            let mut best = (self.cap, k, k);
            for (i, row) in m.iter().enumerate().skip(k) {
                for (j, e) in row.iter().enumerate().skip(k) {
                    let v = self.val(*e);
                    if v < best.0 {
                        best = (v, i, j);
                    }
                }
            }
            let (v, bi, bj) = best;
            if v >= self.cap {
                vals.extend(std::iter::repeat(self.cap).take(n - k));
                break;
            }
            m.swap(k, bi);
            for row in m.iter_mut() {
                row.swap(k, bj);
            }
            let pv = self.p.pow(v);
            let unit = [m[k][k][0] / pv, m[k][k][1] / pv];
            let uinv = self.unit_inv(unit);
            for i in k + 1..n {
                let e = m[i][k];
                if e == [0, 0] {
                    continue;
                }
                let f = self.mul([e[0] / pv, e[1] / pv], uinv);
                for j in k..n {
                    let t = self.mul(f, m[k][j]);
                    m[i][j] = self.red([m[i][j][0] - t[0], m[i][j][1] - t[1]]);
                }
            }
            vals.push(v);
        }
        vals
    }
}

fn cmul(eps: i128, a: Big, b: Big) -> Big {
    [a[0] * b[0] + eps * a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn cconj(a: Big) -> Big {
    [a[0], -a[1]]
}

/// Working window and residue tables for one `(n, p, K)`.
#[derive(Debug)]
pub struct LatticeContext {
    n: usize,
    p: u64,
    eps: u64,
    radius: u32,
    emax: u32,
    modulus: u64,
    pows: Vec<u64>,
    vtab: Vec<u8>,
    invtab: Vec<u32>,
    fq: Fq2,
}

impl LatticeContext {
    /// Window `ϖ^K Ξ ⊆ L ⊆ ϖ^{-K} Ξ` with `K = radius`; needs `p^{2K} ≤ 2^16`.
    pub fn new(n: usize, p: u64, radius: u32) -> Result<Arc<Self>> {
        let cfg = PrimeConfig::for_prime(p)?;
        if n == 0 || n > MAX_RANK {
            return Err(Error::Range(format!("lattice rank {n} outside 1..={MAX_RANK}")));
        }
        if radius == 0 {
            return Err(Error::InvalidConfig("window radius must be positive".into()));
        }
        let emax = 2 * radius;
        let modulus = (p as u128).pow(emax);
        if modulus > 1 << 16 {
            return Err(Error::InvalidConfig(format!("p^{emax} exceeds the 16-bit residue range")));
        }
        let modulus = modulus as u64;
        let pows: Vec<u64> = (0..=emax).map(|i| p.pow(i)).collect();
        let mut vtab = vec![emax as u8; modulus as usize];
        let mut invtab = vec![0u32; modulus as usize];
        for x in 1..modulus {
            let mut v = 0;
            let mut y = x;
            while y % p == 0 {
                y /= p;
                v += 1;
            }
            vtab[x as usize] = v as u8;
            if v == 0 {
                let r = ModRing::new(p, 0, emax);
                invtab[x as usize] = r.inv_int(x as i128) as u32;
            }
        }
        let eps = cfg.epsilon as u64;
        Ok(Arc::new(LatticeContext {
            n,
            p,
            eps,
            radius,
            emax,
            modulus,
            pows,
            vtab,
            invtab,
            fq: Fq2 { p: p as u32, eps: (eps % p) as u32 },
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn epsilon(&self) -> u64 {
        self.eps
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn config(&self) -> PrimeConfig {
        PrimeConfig::new(self.p, self.eps as i64, 32).expect("validated at construction")
    }

    #[inline]
    fn rsub(&self, a: El, b: El) -> El {
        let m = self.modulus as u32;
        [(a[0] + m - b[0]) % m, (a[1] + m - b[1]) % m]
    }

    #[inline]
    fn rmul(&self, a: El, b: El) -> El {
        let m = self.modulus;
        let (a0, a1, b0, b1) = (a[0] as u64, a[1] as u64, b[0] as u64, b[1] as u64);
        [((a0 * b0 + self.eps * (a1 * b1 % m)) % m) as u32, ((a0 * b1 + a1 * b0) % m) as u32]
    }

    #[inline]
    fn rval(&self, a: El) -> u32 {
        self.vtab[a[0] as usize].min(self.vtab[a[1] as usize]) as u32
    }

    fn runit_inv(&self, a: El) -> El {
        let m = self.modulus;
        let (a0, a1) = (a[0] as u64 % m, a[1] as u64 % m);
        let n = (a0 * a0 % m + m - self.eps * (a1 * a1 % m) % m) % m;
        let ni = self.invtab[n as usize];
        self.rmul([a0 as u32, ((m - a1) % m) as u32], [ni, 0])
    }

    /// Column Hermite form of the span of `pool` plus `p^{2K} O^n`.
    fn canonical(&self, pool: &mut Vec<Vector>) -> Key {
        let n = self.n;
        let emax = self.emax;
        let mut cols = [ZERO_VEC; MAX_RANK];
        let mut exps = [emax; MAX_RANK];
        for i in (0..n).rev() {
            let mut best = None;
            let mut bv = emax;
            for (j, g) in pool.iter().enumerate() {
                let v = self.rval(g[i]);
                if v < bv {
                    bv = v;
                    best = Some(j);
                    if v == 0 {
                        break;
                    }
                }
            }
            let Some(j) = best else { continue };
            let mut g = pool.swap_remove(j);
            let e = bv;
            let pe = self.pows[e as usize] as u32;
            let uinv = self.runit_inv([g[i][0] / pe, g[i][1] / pe]);
            for r in 0..i {
                g[r] = self.rmul(g[r], uinv);
            }
            g[i] = [pe, 0];
            for h in pool.iter_mut() {
                let hi = h[i];
                if hi != ZERO {
                    let c = [hi[0] / pe, hi[1] / pe];
                    for r in 0..i {
                        h[r] = self.rsub(h[r], self.rmul(c, g[r]));
                    }
                    h[i] = ZERO;
                }
            }
            if e > 0 {
                let f = [self.pows[(emax - e) as usize] as u32, 0];
                let mut comp = ZERO_VEC;
                let mut nonzero = false;
                for r in 0..i {
                    comp[r] = self.rmul(g[r], f);
                    nonzero |= comp[r] != ZERO;
                }
                if nonzero {
                    pool.push(comp);
                }
            }
            cols[i] = g;
            exps[i] = e;
        }
        for i in 1..n {
            if exps[i] == emax {
                continue;
            }
            for r in (0..i).rev() {
                let er = exps[r];
                if er == emax {
                    continue;
                }
                let pe = self.pows[er as usize] as u32;
                let x = cols[i][r];
                let c = [x[0] / pe, x[1] / pe];
                if c != ZERO {
                    let col_r = cols[r];
                    for k in 0..=r {
                        cols[i][k] = self.rsub(cols[i][k], self.rmul(c, col_r[k]));
                    }
                }
            }
        }
        let mut key = Vec::with_capacity(n * n);
        key.extend(exps[..n].iter().map(|&e| e as u16));
        for (i, col) in cols.iter().enumerate().take(n) {
            for e in col.iter().take(i) {
                key.push(e[0] as u16);
                key.push(e[1] as u16);
            }
        }
        key.into_boxed_slice()
    }

    fn exps(&self, key: &Key) -> Vec<u32> {
        key[..self.n].iter().map(|&e| e as u32).collect()
    }

    /// Columns of the Hermite basis reduced mod `p^{2K}`.
    fn residue_columns(&self, key: &Key) -> Vec<Vector> {
        let n = self.n;
        let mut cols = vec![ZERO_VEC; n];
        let mut pos = n;
        for (i, col) in cols.iter_mut().enumerate() {
            for r in 0..i {
                col[r] = [key[pos] as u32, key[pos + 1] as u32];
                pos += 2;
            }
            col[i] = [(self.pows[key[i] as usize] % self.modulus) as u32, 0];
        }
        cols
    }

    /// Exact integer Hermite basis `H` of `ϖ^K L`, as columns.
    fn true_columns(&self, key: &Key) -> Vec<Vec<Big>> {
        let n = self.n;
        let res = self.residue_columns(key);
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|r| match r.cmp(&i) {
                        std::cmp::Ordering::Less => [res[i][r][0] as i128, res[i][r][1] as i128],
                        std::cmp::Ordering::Equal => [self.pows[key[i] as usize] as i128, 0],
                        std::cmp::Ordering::Greater => [0, 0],
                    })
                    .collect()
            })
            .collect()
    }

    /// `H^* J H`, exactly.
    fn gram_scaled(&self, h: &[Vec<Big>]) -> Vec<Vec<Big>> {
        let n = self.n;
        let eps = self.eps as i128;
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let mut s = [0i128, 0];
                        for k in 0..n {
                            let t = cmul(eps, cconj(h[a][k]), h[b][n - 1 - k]);
                            s = [s[0] + t[0], s[1] + t[1]];
                        }
                        s
                    })
                    .collect()
            })
            .collect()
    }

    /// Type of a vertex lattice, `None` if not a vertex lattice.
    fn vertex_type(&self, key: &Key) -> Option<usize> {
        let h = self.true_columns(key);
        let m = self.gram_scaled(&h);
        let pm = self.modulus as i128;
        let mut g = m;
        for row in g.iter_mut() {
            for e in row.iter_mut() {
                if e[0] % pm != 0 || e[1] % pm != 0 {
                    return None;
                }
                *e = [e[0] / pm, e[1] / pm];
            }
        }
        let vals = ModRing::new(self.p, self.eps, 2).smith_valuations(g);
        if vals.iter().any(|&v| v > 1) {
            return None;
        }
        Some(vals.iter().filter(|&&v| v == 1).count())
    }

    fn canonical_of(&self, vectors: &[Vector]) -> Key {
        let mut pool = vectors.to_vec();
        self.canonical(&mut pool)
    }

    fn sum_keys(&self, a: &Key, b: &Key) -> Key {
        let mut pool = self.residue_columns(a);
        pool.extend(self.residue_columns(b));
        self.canonical(&mut pool)
    }

    fn contains_key(&self, a: &Key, b: &Key) -> bool {
        self.sum_keys(a, b) == *a
    }

    fn dual_key(&self, key: &Key) -> Key {
        let n = self.n;
        let h = self.true_columns(key);
        let pm = self.modulus as i128;
        let eps = self.eps as i128;
        // H^* X = p^{2K} I, H^* lower triangular with diagonal p^{e_i}
        let mut pool = Vec::with_capacity(n);
        for c in 0..n {
            let mut x = vec![[0i128, 0]; n];
            for i in 0..n {
                let mut s = if i == c { [pm, 0] } else { [0, 0] };
                for j in 0..i {
                    let t = cmul(eps, cconj(h[i][j]), x[j]);
                    s = [s[0] - t[0], s[1] - t[1]];
                }
                let d = self.pows[key[i] as usize] as i128;
                debug_assert!(s[0] % d == 0 && s[1] % d == 0);
                x[i] = [s[0] / d, s[1] / d];
            }
            let mut v = ZERO_VEC;
            for k in 0..n {
                let e = x[n - 1 - k];
                v[k] = [e[0].rem_euclid(pm) as u32, e[1].rem_euclid(pm) as u32];
            }
            pool.push(v);
        }
        self.canonical(&mut pool)
    }

    fn intersection_key(&self, a: &Key, b: &Key) -> Key {
        self.dual_key(&self.sum_keys(&self.dual_key(a), &self.dual_key(b)))
    }

    /// `ϖ^j Ξ`, for `|j| ≤ K`.
    fn scaled_standard_key(&self, j: i32) -> Key {
        let n = self.n;
        let mut key = vec![0u16; n * n];
        for e in key.iter_mut().take(n) {
            *e = (self.radius as i32 + j) as u16;
        }
        key.into_boxed_slice()
    }

    fn standard_vertex_key(&self, t: usize) -> Key {
        let n = self.n;
        let mut key = vec![0u16; n * n];
        for (i, e) in key.iter_mut().take(n).enumerate() {
            *e = self.radius as u16 + u16::from(i < t / 2);
        }
        key.into_boxed_slice()
    }

    /// Elementary divisors of `b` relative to `a`, descending.
    fn relative_key(&self, a: &Key, b: &Key) -> Vec<i64> {
        let n = self.n;
        let ha = self.true_columns(a);
        let hb = self.true_columns(b);
        let pm = self.modulus as i128;
        let eps = self.eps as i128;
        // H_a Y = p^{2K} H_b by back substitution
        let mut y = vec![vec![[0i128, 0]; n]; n];
        for c in 0..n {
            for i in (0..n).rev() {
                let mut s = [pm * hb[c][i][0], pm * hb[c][i][1]];
                for j in i + 1..n {
                    let t = cmul(eps, ha[j][i], y[j][c]);
                    s = [s[0] - t[0], s[1] - t[1]];
                }
                let d = self.pows[a[i] as usize] as i128;
                y[i][c] = [s[0] / d, s[1] / d];
            }
        }
        let ring = ModRing::new(self.p, self.eps, 4 * self.radius + 1);
        let mut v: Vec<i64> = ring
            .smith_valuations(y)
            .into_iter()
            .map(|x| x as i64 - self.emax as i64)
            .collect();
        v.sort_unstable_by(|x, y| y.cmp(x));
        v
    }

    /// Sublattices of `A` between `A` and `ϖA` attached to isotropic
    /// subspaces of the residue form of `scale · h` on `A/ϖA`.
    fn sub_enumeration(
        &self,
        a: &Key,
        scale_p: bool,
        iso_dim: usize,
        use_perp: bool,
        opts: &EnumOptions,
    ) -> Result<Vec<Key>> {
        let n = self.n;
        if !self.contains_key(a, &self.scaled_standard_key(self.radius as i32 - 1)) {
            return Err(Error::OutOfRange(self.radius));
        }
        let h = self.true_columns(a);
        let m = self.gram_scaled(&h);
        let shift = if scale_p { self.emax - 1 } else { self.emax };
        let d = self.pows[shift as usize] as i128;
        let p = self.p as i128;
        let mut g = [[ZERO; MAX_RANK]; MAX_RANK];
        for i in 0..n {
            for j in 0..n {
                let e = m[i][j];
                if e[0] % d != 0 || e[1] % d != 0 {
                    return Err(Error::Lattice("residue form is not integral".into()));
                }
                g[i][j] = [(e[0] / d).rem_euclid(p) as u32, (e[1] / d).rem_euclid(p) as u32];
            }
        }
        let (pbar, r) = standardize(&self.fq, &g, n);
        let hres = self.residue_columns(a);
        let bprime: Vec<Vector> = pbar
            .iter()
            .map(|col| {
                let mut v = ZERO_VEC;
                for (c, &coef) in col.iter().enumerate().take(n) {
                    if coef == ZERO {
                        continue;
                    }
                    for k in 0..n {
                        v[k] = self.radd(v[k], self.rmul(hres[c][k], coef));
                    }
                }
                v
            })
            .collect();
        let pf = [(self.p % self.modulus) as u32, 0];
        let mut base: Vec<Vector> = bprime[r..].to_vec();
        for col in &hres {
            let mut v = ZERO_VEC;
            for k in 0..n {
                v[k] = self.rmul(col[k], pf);
            }
            base.push(v);
        }
        let list = iso_list(self.fq, r, iso_dim, opts.budget)?;
        check_budget(list.spaces.len(), opts)?;
        let mut out = Vec::with_capacity(list.spaces.len());
        let mut pool = Vec::with_capacity(base.len() + n);
        for idx in 0..list.spaces.len() {
            let xs = if use_perp { &list.perps[idx] } else { &list.spaces[idx] };
            pool.clear();
            pool.extend_from_slice(&base);
            for x in xs {
                let mut v = ZERO_VEC;
                for (c, &coef) in x.iter().enumerate().take(r) {
                    if coef == ZERO {
                        continue;
                    }
                    for k in 0..n {
                        v[k] = self.radd(v[k], self.rmul(bprime[c][k], coef));
                    }
                }
                pool.push(v);
            }
            out.push(self.canonical(&mut pool));
        }
        Ok(out)
    }

    #[inline]
    fn radd(&self, a: El, b: El) -> El {
        let m = self.modulus as u32;
        [(a[0] + b[0]) % m, (a[1] + b[1]) % m]
    }

    /// Type-`t` vertex lattices inside the type-`t_prime` vertex lattice `l`.
    fn vertex_in_keys(&self, l: &Key, t_prime: usize, t: usize, opts: &EnumOptions) -> Result<Vec<Key>> {
        if t < t_prime || (t - t_prime) % 2 != 0 || t > self.n {
            return Err(Error::Range(format!("type {t} inside type {t_prime}")));
        }
        self.sub_enumeration(l, false, (t - t_prime) / 2, true, opts)
    }

    /// Self-dual lattices `Λ` with `m ⊆ Λ ⊆ m^∨`, `m` of type `t`.
    fn selfdual_over_keys(&self, m: &Key, t: usize, opts: &EnumOptions) -> Result<Vec<Key>> {
        self.sub_enumeration(&self.dual_key(m), true, t / 2, false, opts)
    }

    /// `{Λ' : Λ ⟺^t Λ'}`, sorted and duplicate-free.
    fn image_keys(&self, l: &Key, t: usize, opts: &EnumOptions) -> Result<Vec<Key>> {
        let mut set = HashSet::new();
        for m in self.vertex_in_keys(l, 0, t, opts)? {
            for k in self.selfdual_over_keys(&m, t, opts)? {
                set.insert(k);
            }
            check_budget(set.len(), opts)?;
        }
        let mut v: Vec<Key> = set.into_iter().collect();
        v.sort_unstable();
        Ok(v)
    }
}

/// A lattice inside the working window of a [`LatticeContext`].
#[derive(Clone, Debug)]
pub struct Lattice {
    ctx: Arc<LatticeContext>,
    key: Key,
}

impl PartialEq for Lattice {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key
    }
}

impl Eq for Lattice {}

impl std::hash::Hash for Lattice {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl Lattice {
    /// Columns of `basis` span the lattice; must lie in the window.
    pub fn from_basis(ctx: &Arc<LatticeContext>, basis: &[Vec<FieldElement>]) -> Result<Self> {
        let n = ctx.n;
        if basis.len() != n || basis.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: basis.len() });
        }
        let cfg = ctx.config();
        let scale = FieldElement::p_power(ctx.radius as i64, cfg);
        let pm = BigInt::from(ctx.modulus);
        let mut pool = Vec::with_capacity(n);
        let mut scaled = Vec::with_capacity(n);
        for col in basis {
            let mut v = ZERO_VEC;
            let mut sc = Vec::with_capacity(n);
            for (k, e) in col.iter().enumerate() {
                let w = &FieldElement::new(e.x().clone(), e.y().clone(), cfg) * &scale;
                if !w.is_integral() {
                    return Err(Error::OutOfRange(ctx.radius));
                }
                let x = rational_mod(w.x(), &pm).ok_or(Error::DivisionByZero)?;
                let y = rational_mod(w.y(), &pm).ok_or(Error::DivisionByZero)?;
                v[k] = [x.to_u32().expect("reduced"), y.to_u32().expect("reduced")];
                sc.push(w);
            }
            pool.push(v);
            scaled.push(sc);
        }
        // rows of the transposed matrix; the determinant is the same
        let dv = det(&scaled)?.val();
        let key = ctx.canonical(&mut pool);
        let index: i64 = ctx.exps(&key).iter().map(|&e| e as i64).sum();
        match dv.finite() {
            Some(v) if v == index => Ok(Lattice { ctx: ctx.clone(), key }),
            Some(_) => Err(Error::OutOfRange(ctx.radius)),
            None => Err(Error::Lattice("singular basis".into())),
        }
    }

    pub fn from_key(ctx: &Arc<LatticeContext>, key: Key) -> Result<Self> {
        if key.len() != ctx.n * ctx.n {
            return Err(Error::Lattice("malformed key".into()));
        }
        let canon = ctx.canonical_of(&ctx.residue_columns(&key));
        if canon != key {
            return Err(Error::Lattice("key is not in canonical form".into()));
        }
        Ok(Lattice { ctx: ctx.clone(), key })
    }

    pub fn key(&self) -> &Key {
        &self.key
    }

    pub fn context(&self) -> &Arc<LatticeContext> {
        &self.ctx
    }

    /// Hermite basis columns, scaled back by `ϖ^{-K}`.
    pub fn basis(&self) -> Vec<Vec<FieldElement>> {
        let cfg = self.ctx.config();
        let inv = FieldElement::p_power(-(self.ctx.radius as i64), cfg);
        self.ctx
            .true_columns(&self.key)
            .into_iter()
            .map(|col| {
                col.into_iter()
                    .map(|e| {
                        let f = FieldElement::new(
                            Rational::from_integer(BigInt::from(e[0])),
                            Rational::from_integer(BigInt::from(e[1])),
                            cfg,
                        );
                        &f * &inv
                    })
                    .collect()
            })
            .collect()
    }

    pub fn dual(&self) -> Lattice {
        Lattice { ctx: self.ctx.clone(), key: self.ctx.dual_key(&self.key) }
    }

    pub fn sum(&self, o: &Lattice) -> Lattice {
        Lattice { ctx: self.ctx.clone(), key: self.ctx.sum_keys(&self.key, &o.key) }
    }

    pub fn intersection(&self, o: &Lattice) -> Lattice {
        Lattice { ctx: self.ctx.clone(), key: self.ctx.intersection_key(&self.key, &o.key) }
    }

    /// `o ⊆ self`.
    pub fn contains(&self, o: &Lattice) -> bool {
        self.ctx.contains_key(&self.key, &o.key)
    }

    pub fn vertex_type(&self) -> Option<usize> {
        self.ctx.vertex_type(&self.key)
    }

    pub fn to_vertex(&self) -> Result<VertexLattice> {
        VertexLattice::from_lattice(self.clone())
    }
}

/// A vertex lattice `Λ ⊆ Λ^∨ ⊆ ϖ^{-1}Λ` together with its type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexLattice {
    lattice: Lattice,
    type_t: usize,
}

impl VertexLattice {
    pub fn from_lattice(lattice: Lattice) -> Result<Self> {
        let type_t = lattice
            .vertex_type()
            .ok_or_else(|| Error::Lattice("not a vertex lattice".into()))?;
        Ok(VertexLattice { lattice, type_t })
    }

    pub fn from_basis(ctx: &Arc<LatticeContext>, basis: &[Vec<FieldElement>]) -> Result<Self> {
        Self::from_lattice(Lattice::from_basis(ctx, basis)?)
    }

    fn from_trusted(ctx: &Arc<LatticeContext>, key: Key, type_t: usize) -> Self {
        debug_assert_eq!(ctx.vertex_type(&key), Some(type_t));
        VertexLattice { lattice: Lattice { ctx: ctx.clone(), key }, type_t }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn key(&self) -> &Key {
        &self.lattice.key
    }

    pub fn type_t(&self) -> usize {
        self.type_t
    }

    pub fn context(&self) -> &Arc<LatticeContext> {
        &self.lattice.ctx
    }

    pub fn dual(&self) -> Lattice {
        self.lattice.dual()
    }

    pub fn basis(&self) -> Vec<Vec<FieldElement>> {
        self.lattice.basis()
    }
}

/// `(Λ, Λ')` with an optional middle lattice `M ⊆ Λ ∩ Λ'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrespondencePair {
    pub left: VertexLattice,
    pub right: VertexLattice,
    pub witness: Option<VertexLattice>,
}

/// The standard lattice `Ξ = O_F^n`.
pub fn standard_selfdual(ctx: &Arc<LatticeContext>) -> VertexLattice {
    VertexLattice::from_trusted(ctx, ctx.scaled_standard_key(0), 0)
}

/// `Ξ_t = ϖ O^{t/2} ⊕ O^{n-t/2}`, a member of the standard chain.
pub fn standard_vertex(ctx: &Arc<LatticeContext>, t: usize) -> Result<VertexLattice> {
    if t % 2 != 0 || t > ctx.n {
        return Err(Error::Range(format!("vertex type {t} in rank {}", ctx.n)));
    }
    Ok(VertexLattice::from_trusted(ctx, ctx.standard_vertex_key(t), t))
}

pub fn dual(l: &Lattice) -> Lattice {
    l.dual()
}

pub fn type_of(l: &Lattice) -> Result<usize> {
    l.vertex_type().ok_or_else(|| Error::Lattice("not a vertex lattice".into()))
}

/// All type-`t` vertex lattices contained in `l` (of type `t' ≤ t`), sorted.
pub fn enum_vertex_in(l: &VertexLattice, t: usize, opts: &EnumOptions) -> Result<Vec<VertexLattice>> {
    let ctx = l.context();
    let mut keys = ctx.vertex_in_keys(l.key(), l.type_t, t, opts)?;
    keys.sort_unstable();
    Ok(keys.into_iter().map(|k| VertexLattice::from_trusted(ctx, k, t)).collect())
}

/// All self-dual lattices between `m` and `m^∨`, sorted.
pub fn enum_selfdual_over(m: &VertexLattice, opts: &EnumOptions) -> Result<Vec<VertexLattice>> {
    let ctx = m.context();
    let mut keys = ctx.selfdual_over_keys(m.key(), m.type_t, opts)?;
    keys.sort_unstable();
    Ok(keys.into_iter().map(|k| VertexLattice::from_trusted(ctx, k, 0)).collect())
}

/// `{Λ' : Λ ⟺^t Λ'}`: self-dual lattices sharing a type-`t` sublattice with `l`.
pub fn correspondence_image(l: &VertexLattice, t: usize, opts: &EnumOptions) -> Result<Vec<VertexLattice>> {
    check_selfdual(l)?;
    let ctx = l.context();
    Ok(ctx
        .image_keys(l.key(), t, opts)?
        .into_iter()
        .map(|k| VertexLattice::from_trusted(ctx, k, 0))
        .collect())
}

fn check_selfdual(l: &VertexLattice) -> Result<()> {
    if l.type_t != 0 {
        return Err(Error::Lattice(format!("expected a self-dual lattice, got type {}", l.type_t)));
    }
    Ok(())
}

/// `𝕋_{≤t}` over `l`: all `(l, M, Λ')` with `M` of type `t` in `l ∩ Λ'`.
pub fn t_leq(l: &VertexLattice, t: usize, opts: &EnumOptions) -> Result<Vec<CorrespondencePair>> {
    check_selfdual(l)?;
    let mut out = Vec::new();
    for m in enum_vertex_in(l, t, opts)? {
        for r in enum_selfdual_over(&m, opts)? {
            out.push(CorrespondencePair { left: l.clone(), right: r, witness: Some(m.clone()) });
            check_budget(out.len(), opts)?;
        }
    }
    out.sort_by(|a, b| {
        (a.right.key(), a.witness.as_ref().map(|w| w.key()))
            .cmp(&(b.right.key(), b.witness.as_ref().map(|w| w.key())))
    });
    Ok(out)
}

/// Support of `f^[t]` at `l`: `{Λ' : l ∩ Λ' is a vertex lattice of type t}`.
pub fn t_exact_support(l: &VertexLattice, t: usize, opts: &EnumOptions) -> Result<Vec<VertexLattice>> {
    let ctx = l.context();
    Ok(correspondence_image(l, t, opts)?
        .into_iter()
        .filter(|r| ctx.vertex_type(&ctx.intersection_key(l.key(), r.key())) == Some(t))
        .collect())
}

/// One block of the partition of `𝕋_{≤t}` by the type of `Λ ∩ Λ'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionClass {
    pub t_prime: usize,
    /// Number of distinct `Λ'` in the block.
    pub pairs: u64,
    /// Distinct witness counts seen across the block.
    pub multiplicities: BTreeSet<u64>,
}

pub fn witness_partition(l: &VertexLattice, t: usize, opts: &EnumOptions) -> Result<Vec<PartitionClass>> {
    let ctx = l.context();
    let mut counts: BTreeMap<Key, u64> = BTreeMap::new();
    for pair in t_leq(l, t, opts)? {
        *counts.entry(pair.right.key().clone()).or_default() += 1;
    }
    let mut classes: BTreeMap<usize, PartitionClass> = BTreeMap::new();
    for (k, mult) in counts {
        let tp = ctx
            .vertex_type(&ctx.intersection_key(l.key(), &k))
            .ok_or_else(|| Error::Lattice("intersection is not a vertex lattice".into()))?;
        let c = classes.entry(tp).or_insert_with(|| PartitionClass {
            t_prime: tp,
            pairs: 0,
            multiplicities: BTreeSet::new(),
        });
        c.pairs += 1;
        c.multiplicities.insert(mult);
    }
    Ok(classes.into_values().collect())
}

/// Elementary divisor exponents of `b` relative to `a`, descending.
pub fn elementary_divisors(a: &Lattice, b: &Lattice) -> Vec<i64> {
    a.ctx.relative_key(&a.key, &b.key)
}

/// `(m, -m)` for self-dual lattices in rank two.
pub fn relative_position(a: &VertexLattice, b: &VertexLattice) -> Result<(i64, i64)> {
    if a.context().n != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.context().n });
    }
    check_selfdual(a)?;
    check_selfdual(b)?;
    let v = elementary_divisors(a.lattice(), b.lattice());
    Ok((v[0], v[1]))
}

/// Self-dual lattices at relative position `(m, -m)` from `l` (rank two),
/// reached by `m` steps of `⟺^2`.
pub fn at_distance(l: &VertexLattice, m: u32, opts: &EnumOptions) -> Result<Vec<VertexLattice>> {
    let ctx = l.context();
    if ctx.n != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ctx.n });
    }
    check_selfdual(l)?;
    if m > ctx.radius {
        return Err(Error::OutOfRange(ctx.radius));
    }
    let mut frontier: BTreeSet<Key> = BTreeSet::from([l.key().clone()]);
    let mut all = frontier.clone();
    for _ in 0..m {
        let mut next = BTreeSet::new();
        for k in &frontier {
            for r in ctx.image_keys(k, 2, opts)? {
                if !all.contains(&r) {
                    next.insert(r);
                }
            }
        }
        all.extend(next.iter().cloned());
        check_budget(all.len(), opts)?;
        frontier = next;
    }
    Ok(all
        .into_iter()
        .filter(|k| ctx.relative_key(l.key(), k).first() == Some(&(m as i64)))
        .map(|k| VertexLattice::from_trusted(ctx, k, 0))
        .collect())
}

fn random_vertex(ctx: &Arc<LatticeContext>, t: usize, depth: u32, rng: &mut ChaCha8Rng, opts: &EnumOptions) -> Result<Key> {
    let mut l = ctx.scaled_standard_key(0);
    if ctx.n >= 2 {
        for _ in 0..depth {
            let ms = ctx.vertex_in_keys(&l, 0, 2, opts)?;
            let m = ms.choose(rng).expect("type-2 lattices exist for n ≥ 2");
            let ls = ctx.selfdual_over_keys(m, 2, opts)?;
            l = ls.choose(rng).expect("nonempty").clone();
        }
    }
    if t == 0 {
        return Ok(l);
    }
    let cands = ctx.vertex_in_keys(&l, 0, t, opts)?;
    Ok(cands.choose(rng).ok_or_else(|| Error::Lattice(format!("no type-{t} lattice")))?.clone())
}

/// `m(t', t)`: type-`t` vertex lattices inside a type-`t'` one, counted at
/// three seeded random base points which must agree.
pub fn m_count(n: usize, t_prime: usize, t: usize, p: u64, opts: &EnumOptions) -> Result<u64> {
    if t_prime > t || t % 2 != 0 || t_prime % 2 != 0 || t > n {
        return Err(Error::Range(format!("m({t_prime}, {t}) in rank {n}")));
    }
    let radius = if (p as u128).pow(6) <= 1 << 16 { 3 } else { 2 };
    let ctx = LatticeContext::new(n, p, radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut counts = Vec::new();
    for _ in 0..3 {
        let base = random_vertex(&ctx, t_prime, radius - 2, &mut rng, opts)?;
        counts.push(ctx.vertex_in_keys(&base, t_prime, t, opts)?.len() as u64);
    }
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(Error::Mismatch(format!("m({t_prime}, {t}) depends on the base point: {counts:?}")));
    }
    Ok(counts[0])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommReport {
    pub n: usize,
    pub p: u64,
    pub t: usize,
    pub t2: usize,
    pub left_set_size: u64,
    pub right_set_size: u64,
    pub equal: bool,
}

const CHUNK: usize = 64;

/// Compares `{Λ₂ : Λ ⟺^t · ⟺^{t2} Λ₂}` with `{Λ₂ : Λ ⟺^{t2} · ⟺^t Λ₂}`.
/// The first set is stored, the second streamed against it.
pub fn commutativity_check(l: &VertexLattice, t: usize, t2: usize, opts: &EnumOptions) -> Result<CommReport> {
    check_selfdual(l)?;
    let ctx = l.context();
    let first = ctx.image_keys(l.key(), t, opts)?;
    let mut left: IndexSet<Key> = IndexSet::new();
    for chunk in first.chunks(CHUNK) {
        let parts: Vec<Result<Vec<Key>>> =
            chunk.par_iter().map(|k| ctx.image_keys(k, t2, opts)).collect();
        for part in parts {
            left.extend(part?);
            check_budget(left.len(), opts)?;
        }
    }
    let mut seen = vec![false; left.len()];
    let mut extra: HashSet<Key> = HashSet::new();
    let second = ctx.image_keys(l.key(), t2, opts)?;
    for chunk in second.chunks(CHUNK) {
        let parts: Vec<Result<Vec<Key>>> =
            chunk.par_iter().map(|k| ctx.image_keys(k, t, opts)).collect();
        for part in parts {
            for k in part? {
                match left.get_index_of(&k) {
                    Some(i) => seen[i] = true,
                    None => {
                        extra.insert(k);
                        check_budget(extra.len(), opts)?;
                    }
                }
            }
        }
    }
    let hit = seen.iter().filter(|&&s| s).count() as u64;
    Ok(CommReport {
        n: ctx.n,
        p: ctx.p,
        t,
        t2,
        left_set_size: left.len() as u64,
        right_set_size: hit + extra.len() as u64,
        equal: extra.is_empty() && hit == left.len() as u64,
    })
}

//! Coefficient-ring arithmetic: the degree-truncated Lazard ring, the
//! additive and multiplicative specializations, formal sums and inverses,
//! equivariant power-series variables and projective-space classes.
//!
//! Elements are sparse integer polynomials over a mixed generator alphabet:
//!
//! - `a{i}{j}`: universal formal-group-law coefficients, degree `i+j-1`,
//!   canonicalized to `i <= j` (the law is commutative);
//! - `beta`: the degree-1 parameter of the multiplicative law;
//! - `xi{k}`: equivariant variables attached to the lattice coordinates;
//! - `r{k}`: ray variables of a Stanley-Reisner algebra;
//! - `oxi{k}`: orbit-ring variables (dual coordinates on an orbit).
//!
//! Invariants:
//! - monomials are sorted, exponents positive, coefficients nonzero;
//! - the Lazard part of every stored element is in normal form modulo the
//!   associativity ideal (a per-degree integer-lattice reduction, see
//!   [`LazardTable`]), and within the configured truncation bounds.
//!
//! The associativity ideal does *not* admit a monomial basis in every
//! degree (in degree 3 the relation is `2*a11*a12 + 3*a13 - 2*a22 = 0`,
//! which has no unit pivot), so the normal form is a lattice projection
//! computed from Smith-normal-form transforms, not a monomial rewriting.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::{snf, IMat};

/// A single polynomial generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    /// Universal law coefficient a_{ij}, stored with i <= j.
    A(u8, u8),
    /// Multiplicative-law parameter, degree 1.
    Beta,
    /// Orbit-ring variable dual to ray `k`.
    OXi(u32),
    /// Ray variable for ray index `k`.
    Ray(u32),
    /// Equivariant variable for lattice coordinate `k` (1-based in names).
    Xi(u32),
}

impl Gen {
    pub fn name(&self) -> String {
        match self {
            Gen::A(i, j) => format!("a{}{}", i, j),
            Gen::Beta => "beta".to_string(),
            Gen::OXi(k) => format!("oxi{}", k),
            Gen::Ray(k) => format!("r{}", k),
            Gen::Xi(k) => format!("xi{}", k),
        }
    }

    pub fn parse(s: &str) -> Result<Gen> {
        if s == "beta" {
            return Ok(Gen::Beta);
        }
        let bad = || Error::BadInput(format!("unknown generator `{}`", s));
        if let Some(rest) = s.strip_prefix("oxi") {
            return rest.parse().map(Gen::OXi).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("xi") {
            return rest.parse().map(Gen::Xi).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix('r') {
            return rest.parse().map(Gen::Ray).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix('a') {
            let digits: Vec<u32> = rest
                .chars()
                .map(|c| c.to_digit(10))
                .collect::<Option<_>>()
                .ok_or_else(bad)?;
            if digits.len() != 2 || digits[0] == 0 || digits[1] == 0 {
                return Err(bad());
            }
            return Ok(Gen::A(digits[0] as u8, digits[1] as u8));
        }
        Err(bad())
    }

    /// Homological degree contributed per exponent unit by the coefficient
    /// part (Lazard generators, beta).
    fn lazard_degree(&self) -> u32 {
        match self {
            Gen::A(i, j) => (*i as u32) + (*j as u32) - 1,
            Gen::Beta => 1,
            _ => 0,
        }
    }

    fn is_var(&self) -> bool {
        matches!(self, Gen::Xi(_) | Gen::Ray(_) | Gen::OXi(_))
    }
}

/// Sorted exponent list; the unit monomial is the empty list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mono(pub Vec<(Gen, u32)>);

impl Mono {
    pub fn one() -> Mono {
        Mono(Vec::new())
    }

    pub fn gen(g: Gen) -> Mono {
        Mono(vec![(g, 1)])
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out: Vec<(Gen, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    pub fn lazard_deg(&self) -> u32 {
        self.0.iter().map(|(g, e)| g.lazard_degree() * e).sum()
    }

    pub fn var_deg(&self) -> u32 {
        self.0
            .iter()
            .filter(|(g, _)| g.is_var())
            .map(|(_, e)| e)
            .sum()
    }

    pub fn ray_deg(&self) -> u32 {
        self.0
            .iter()
            .filter(|(g, _)| matches!(g, Gen::Ray(_)))
            .map(|(_, e)| e)
            .sum()
    }

    pub fn xi_deg(&self) -> u32 {
        self.0
            .iter()
            .filter(|(g, _)| matches!(g, Gen::Xi(_) | Gen::OXi(_)))
            .map(|(_, e)| e)
            .sum()
    }

    /// Rays that occur with positive exponent.
    pub fn ray_support(&self) -> Vec<u32> {
        self.0
            .iter()
            .filter_map(|(g, _)| match g {
                Gen::Ray(k) => Some(*k),
                _ => None,
            })
            .collect()
    }

    /// Split into (coefficient part: A/beta, variable part: xi/ray/oxi).
    pub fn split(&self) -> (Mono, Mono) {
        let mut coeff = Vec::new();
        let mut var = Vec::new();
        for &(g, e) in &self.0 {
            if g.is_var() {
                var.push((g, e));
            } else {
                coeff.push((g, e));
            }
        }
        (Mono(coeff), Mono(var))
    }

    pub fn exponent_of(&self, g: Gen) -> u32 {
        self.0
            .iter()
            .find(|(h, _)| *h == g)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    /// Remove one power of `g`; panics if absent.
    pub fn divide_once(&self, g: Gen) -> Mono {
        let mut out = self.0.clone();
        let pos = out
            .iter()
            .position(|(h, _)| *h == g)
            .expect("divide_once: missing generator");
        if out[pos].1 == 1 {
            out.remove(pos);
        } else {
            out[pos].1 -= 1;
        }
        Mono(out)
    }
}

/// Truncation bounds for stored monomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trunc {
    /// Bound on the Lazard (coefficient) degree.
    pub lazard: u32,
    /// Bound on the total xi-degree (equivariant variables).
    pub xi: u32,
    /// Bound on the total ray-degree.
    pub ray: u32,
}

impl Trunc {
    fn keeps(&self, m: &Mono) -> bool {
        m.lazard_deg() <= self.lazard && m.xi_deg() <= self.xi && m.ray_deg() <= self.ray
    }
}

/// Sparse polynomial with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Mono, BigInt>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Poly {
        Poly::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn gen(g: Gen) -> Poly {
        let mut p = Poly::zero();
        p.terms.insert(Mono::gen(g), BigInt::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Mono, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_raw(&self, other: &Poly, trunc: &Trunc) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.mul(m2);
                if trunc.keeps(&m) {
                    out.add_term(m, c1 * c2);
                }
            }
        }
        out
    }

    pub fn truncate(&self, trunc: &Trunc) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| trunc.keeps(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// The coefficient-only part of degree 0 in the variables.
    pub fn constant_part(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.var_deg() == 0)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn has_constant_term(&self) -> bool {
        self.terms.keys().any(|m| m.var_deg() == 0)
    }

    /// Substitute 0 for every generator matched by `kill`.
    pub fn kill_gens<F: Fn(&Gen) -> bool>(&self, kill: F) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| !m.0.iter().any(|(g, _)| kill(g)))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homological degree of a coefficient element (`lazard - xi`);
    /// `None` for 0, an error-free mix is the caller's responsibility.
    pub fn homogeneous_coeff_degree(&self) -> Option<i64> {
        let mut deg = None;
        for m in self.terms.keys() {
            let d = m.lazard_deg() as i64 - m.xi_deg() as i64;
            match deg {
                None => deg = Some(d),
                Some(e) if e == d => {}
                _ => return None,
            }
        }
        deg
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || m.0.is_empty() {
                parts.push(mag.to_string());
            }
            for (g, e) in &m.0 {
                if *e == 1 {
                    parts.push(g.name());
                } else {
                    parts.push(format!("{}^{}", g.name(), e));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// JSON form per the external interface: an object mapping the compact JSON
/// text of the sorted `[generator, exponent]` list to the coefficient.
pub fn poly_to_json(p: &Poly) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (m, c) in &p.terms {
        let key: Vec<serde_json::Value> =
            m.0.iter()
                .map(|(g, e)| serde_json::json!([g.name(), e]))
                .collect();
        let key = serde_json::Value::Array(key).to_string();
        let val = match i64::try_from(c.clone()) {
            Ok(v) => serde_json::json!(v),
            Err(_) => serde_json::json!(c.to_string()),
        };
        map.insert(key, val);
    }
    serde_json::Value::Object(map)
}

pub fn poly_from_json(v: &serde_json::Value) -> Result<Poly> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::BadInput("ring element must be a JSON object".into()))?;
    let mut p = Poly::zero();
    for (key, val) in obj {
        let list: Vec<(String, u32)> = serde_json::from_str(key)
            .map_err(|_| Error::BadInput(format!("bad monomial key `{}`", key)))?;
        let mut gens = Vec::new();
        for (name, e) in list {
            gens.push((Gen::parse(&name)?, e));
        }
        gens.sort_by_key(|(g, _)| *g);
        let coeff: BigInt =
            match val {
                serde_json::Value::Number(n) => BigInt::from(n.as_i64().ok_or_else(|| {
                    Error::BadInput(format!("coefficient {} is not an integer", n))
                })?),
                serde_json::Value::String(s) => s
                    .parse()
                    .map_err(|_| Error::BadInput(format!("bad coefficient `{}`", s)))?,
                _ => return Err(Error::BadInput("bad coefficient type".into())),
            };
        p.add_term(Mono(gens), coeff);
    }
    Ok(p)
}

/// Per-degree normal-form data for the truncated Lazard ring.
///
/// For each degree `d <= max_deg` we store the monomial list, a projection
/// onto a complement of the associativity-relation lattice, and integer
/// coordinates on the quotient. The quotient is free in every degree
/// (checked at construction), with ranks 1, 1, 2, 3, 5, ... .
pub struct LazardTable {
    pub max_deg: u32,
    degrees: Vec<DegreeTable>,
}

struct DegreeTable {
    monos: Vec<Mono>,
    index: BTreeMap<Mono, usize>,
    /// Full coordinate transform: coords = vt * w (column vectors).
    vt: IMat,
    /// Rows `rel_rank..` of `v^-1`: a lattice complement of the relations.
    comp_rows: Vec<Vec<BigInt>>,
    rel_rank: usize,
}

impl DegreeTable {
    fn rank(&self) -> usize {
        self.comp_rows.len()
    }

    fn reduce_vec(&self, w: &[BigInt]) -> Vec<BigInt> {
        let coords = self.coords(w);
        let mut out = vec![BigInt::zero(); self.monos.len()];
        for (ci, row) in coords.iter().zip(&self.comp_rows) {
            if ci.is_zero() {
                continue;
            }
            for (o, r) in out.iter_mut().zip(row) {
                *o += ci * r;
            }
        }
        out
    }

    fn coords(&self, w: &[BigInt]) -> Vec<BigInt> {
        let full = self.vt.mul_vec(w);
        full[self.rel_rank..].to_vec()
    }

    fn from_coords(&self, c: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(c.len(), self.rank());
        let mut out = vec![BigInt::zero(); self.monos.len()];
        for (ci, row) in c.iter().zip(&self.comp_rows) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += ci * r;
            }
        }
        out
    }
}

/// Three-variable polynomial with `Poly` coefficients, for expanding the
/// associativity identity.
type TriPoly = BTreeMap<(u16, u16, u16), Poly>;

fn tri_add(a: &TriPoly, b: &TriPoly) -> TriPoly {
    let mut out = a.clone();
    for (k, p) in b {
        let e = out.entry(*k).or_insert_with(Poly::zero);
        *e = e.add(p);
        if e.is_zero() {
            out.remove(k);
        }
    }
    out
}

fn tri_mul(a: &TriPoly, b: &TriPoly, dmax: u16, trunc: &Trunc) -> TriPoly {
    let mut out = TriPoly::new();
    for ((p1, q1, r1), c1) in a {
        for ((p2, q2, r2), c2) in b {
            let key = (p1 + p2, q1 + q2, r1 + r2);
            if key.0 + key.1 + key.2 > dmax {
                continue;
            }
            let prod = c1.mul_raw(c2, trunc);
            if prod.is_zero() {
                continue;
            }
            let e = out.entry(key).or_insert_with(Poly::zero);
            *e = e.add(&prod);
            if e.is_zero() {
                out.remove(&key);
            }
        }
    }
    out
}

fn canonical_a(i: u32, j: u32) -> Gen {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    Gen::A(i as u8, j as u8)
}

impl LazardTable {
    pub fn new(max_deg: u32) -> LazardTable {
        assert!(max_deg <= 9, "truncation degrees above 9 are not supported");
        let trunc = Trunc {
            lazard: max_deg,
            xi: u32::MAX,
            ray: u32::MAX,
        };
        let dmax = (max_deg + 1) as u16;

        // Universal law applied to two TriPoly arguments, truncated in
        // total (x,y,z)-degree.
        let f_of = |u: &TriPoly, v: &TriPoly| -> TriPoly {
            let mut out = tri_add(u, v);
            let mut upow: Vec<TriPoly> = vec![u.clone()];
            let mut vpow: Vec<TriPoly> = vec![v.clone()];
            for i in 1..=dmax {
                for j in 1..=(dmax - i) {
                    if i + j > dmax || (i + j - 1) as u32 > max_deg {
                        continue;
                    }
                    while (upow.len() as u16) < i {
                        let next = tri_mul(upow.last().unwrap(), u, dmax, &trunc);
                        upow.push(next);
                    }
                    while (vpow.len() as u16) < j {
                        let next = tri_mul(vpow.last().unwrap(), v, dmax, &trunc);
                        vpow.push(next);
                    }
                    let coeff = Poly::gen(canonical_a(i as u32, j as u32));
                    let prod = tri_mul(
                        &upow[(i - 1) as usize],
                        &vpow[(j - 1) as usize],
                        dmax,
                        &trunc,
                    );
                    let mut scaled = TriPoly::new();
                    for (k, p) in &prod {
                        let cp = p.mul_raw(&coeff, &trunc);
                        if !cp.is_zero() {
                            scaled.insert(*k, cp);
                        }
                    }
                    out = tri_add(&out, &scaled);
                }
            }
            out
        };

        let x: TriPoly = BTreeMap::from([((1u16, 0u16, 0u16), Poly::one())]);
        let y: TriPoly = BTreeMap::from([((0, 1, 0), Poly::one())]);
        let z: TriPoly = BTreeMap::from([((0, 0, 1), Poly::one())]);
        let lhs = f_of(&f_of(&x, &y), &z);
        let rhs = f_of(&x, &f_of(&y, &z));
        let mut relations: BTreeMap<u32, Vec<Poly>> = BTreeMap::new();
        let diff = tri_add(&lhs, &rhs.iter().map(|(k, p)| (*k, p.neg())).collect());
        let mut seen: BTreeMap<u32, Vec<Poly>> = BTreeMap::new();
        for ((p, q, r), c) in &diff {
            if c.is_zero() {
                continue;
            }
            let d = (p + q + r) as u32 - 1;
            if d > max_deg {
                continue;
            }
            let slot = seen.entry(d).or_default();
            let negc = c.neg();
            if !slot.contains(c) && !slot.contains(&negc) {
                slot.push(c.clone());
                relations.entry(d).or_default().push(c.clone());
            }
        }

        // Monomials of each Lazard degree over the canonical generators.
        let gens: Vec<(Gen, u32)> = {
            let mut v = Vec::new();
            for i in 1..=max_deg + 1 {
                for j in i..=max_deg + 1 {
                    if i + j - 1 <= max_deg {
                        v.push((Gen::A(i as u8, j as u8), i + j - 1));
                    }
                }
            }
            v
        };
        fn monos_of_degree(gens: &[(Gen, u32)], d: u32) -> Vec<Mono> {
            let mut out = Vec::new();
            fn rec(
                gens: &[(Gen, u32)],
                idx: usize,
                rem: u32,
                cur: &mut Vec<(Gen, u32)>,
                out: &mut Vec<Mono>,
            ) {
                if rem == 0 {
                    out.push(Mono(cur.clone()));
                    return;
                }
                if idx >= gens.len() {
                    return;
                }
                rec(gens, idx + 1, rem, cur, out);
                let (g, dg) = gens[idx];
                if dg <= rem {
                    let max_e = rem / dg;
                    for e in 1..=max_e {
                        if dg * e <= rem {
                            cur.push((g, e));
                            rec(gens, idx + 1, rem - dg * e, cur, out);
                            cur.pop();
                        }
                    }
                }
            }
            let mut cur = Vec::new();
            rec(gens, 0, d, &mut cur, &mut out);
            out.sort();
            out
        }

        let mut degrees = Vec::new();
        for d in 0..=max_deg {
            let monos = monos_of_degree(&gens, d);
            let index: BTreeMap<Mono, usize> = monos.iter().cloned().zip(0..).collect();
            let m = monos.len();
            // Degree-d slice of the associativity ideal: monomial multiples
            // of lower-degree relation generators.
            let mut rows: Vec<Vec<BigInt>> = Vec::new();
            for (dp, rels) in &relations {
                if *dp > d {
                    continue;
                }
                for mult in monos_of_degree(&gens, d - dp) {
                    for r in rels {
                        let prod = r.mul_raw(
                            &Poly {
                                terms: BTreeMap::from([(mult.clone(), BigInt::one())]),
                            },
                            &trunc,
                        );
                        let mut row = vec![BigInt::zero(); m];
                        let mut ok = true;
                        for (mono, c) in &prod.terms {
                            match index.get(mono) {
                                Some(i) => row[*i] += c,
                                None => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        if ok && row.iter().any(|x| !x.is_zero()) {
                            rows.push(row);
                        }
                    }
                }
            }
            let table = if rows.is_empty() {
                DegreeTable {
                    monos,
                    index,
                    vt: IMat::identity(m),
                    comp_rows: IMat::identity(m).to_rows(),
                    rel_rank: 0,
                }
            } else {
                let r = IMat::from_rows(rows);
                let s = snf(&r);
                for i in 0..s.rank {
                    assert!(
                        s.d[(i, i)].is_one(),
                        "Lazard quotient has torsion in degree {}: divisor {}",
                        d,
                        s.d[(i, i)]
                    );
                }
                let comp_rows = (s.rank..m).map(|i| s.vinv.row(i).to_vec()).collect();
                DegreeTable {
                    monos,
                    index,
                    vt: s.v.transpose(),
                    comp_rows,
                    rel_rank: s.rank,
                }
            };
            degrees.push(table);
        }
        LazardTable { max_deg, degrees }
    }

    pub fn rank(&self, d: u32) -> usize {
        if d > self.max_deg {
            0
        } else {
            self.degrees[d as usize].rank()
        }
    }

    fn vectorize(&self, d: u32, terms: &[(Mono, BigInt)]) -> Vec<BigInt> {
        let t = &self.degrees[d as usize];
        let mut w = vec![BigInt::zero(); t.monos.len()];
        for (m, c) in terms {
            let i = t.index[m];
            w[i] += c;
        }
        w
    }

    /// Normal form of a polynomial whose monomials are pure Lazard monomials.
    fn reduce_pure(&self, p: &Poly) -> Poly {
        let mut by_deg: BTreeMap<u32, Vec<(Mono, BigInt)>> = BTreeMap::new();
        for (m, c) in &p.terms {
            by_deg
                .entry(m.lazard_deg())
                .or_default()
                .push((m.clone(), c.clone()));
        }
        let mut out = Poly::zero();
        for (d, terms) in by_deg {
            if d > self.max_deg {
                continue;
            }
            let t = &self.degrees[d as usize];
            let w = self.vectorize(d, &terms);
            let red = t.reduce_vec(&w);
            for (i, c) in red.into_iter().enumerate() {
                out.add_term(t.monos[i].clone(), c);
            }
        }
        out
    }

    pub fn coords(&self, d: u32, terms: &[(Mono, BigInt)]) -> Vec<BigInt> {
        let t = &self.degrees[d as usize];
        t.coords(&self.vectorize(d, terms))
    }

    pub fn basis_poly(&self, d: u32, idx: usize) -> Poly {
        let t = &self.degrees[d as usize];
        let mut c = vec![BigInt::zero(); t.rank()];
        c[idx] = BigInt::one();
        let w = t.from_coords(&c);
        let mut p = Poly::zero();
        for (i, coeff) in w.into_iter().enumerate() {
            p.add_term(t.monos[i].clone(), coeff);
        }
        p
    }
}

/// Which formal group law drives the theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryKind {
    /// Chow groups: F(x,y) = x + y.
    Additive,
    /// K-theory style: F(x,y) = x + y - b*beta*x*y with `beta` a formal
    /// degree-1 parameter and `b` an integer scale.
    Multiplicative { beta_coeff: BigInt },
    /// Algebraic cobordism: the universal law over the truncated Lazard ring.
    Universal,
}

impl TheoryKind {
    pub fn name(&self) -> &'static str {
        match self {
            TheoryKind::Additive => "chow",
            TheoryKind::Multiplicative { .. } => "ktheory",
            TheoryKind::Universal => "cobordism",
        }
    }
}

/// A formal group law together with truncation bounds and (for the
/// universal law) the shared normal-form table.
#[derive(Clone)]
pub struct Theory {
    pub kind: TheoryKind,
    pub trunc: Trunc,
    lazard: Option<Arc<LazardTable>>,
}

impl Theory {
    pub fn new(kind: TheoryKind, trunc: Trunc) -> Theory {
        let lazard = match kind {
            TheoryKind::Universal => Some(Arc::new(LazardTable::new(trunc.lazard))),
            _ => None,
        };
        Theory {
            kind,
            trunc,
            lazard,
        }
    }

    pub fn additive(d: u32) -> Theory {
        Theory::new(
            TheoryKind::Additive,
            Trunc {
                lazard: d,
                xi: d,
                ray: d,
            },
        )
    }

    pub fn multiplicative(d: u32, beta_coeff: i64) -> Theory {
        Theory::new(
            TheoryKind::Multiplicative {
                beta_coeff: BigInt::from(beta_coeff),
            },
            Trunc {
                lazard: d,
                xi: d,
                ray: d,
            },
        )
    }

    pub fn universal(d: u32) -> Theory {
        Theory::new(
            TheoryKind::Universal,
            Trunc {
                lazard: d,
                xi: d,
                ray: d,
            },
        )
    }

    /// Formal-group-law coefficient a(i,j) as a ring element.
    pub fn a(&self, i: u32, j: u32) -> Poly {
        if i == 0 || j == 0 || i + j - 1 > self.trunc.lazard {
            return Poly::zero();
        }
        match &self.kind {
            TheoryKind::Additive => Poly::zero(),
            TheoryKind::Multiplicative { beta_coeff } => {
                if (i, j) == (1, 1) {
                    Poly::gen(Gen::Beta).scale(&-beta_coeff.clone())
                } else {
                    Poly::zero()
                }
            }
            TheoryKind::Universal => Poly::gen(canonical_a(i, j)),
        }
    }

    /// Normal form: Lazard reduction on the coefficient part plus truncation.
    pub fn reduce(&self, p: &Poly) -> Poly {
        let p = p.truncate(&self.trunc);
        let Some(table) = &self.lazard else { return p };
        // Group terms by variable part, reduce each coefficient part.
        let mut by_var: BTreeMap<Mono, Poly> = BTreeMap::new();
        for (m, c) in &p.terms {
            let (coeff, var) = m.split();
            by_var
                .entry(var)
                .or_insert_with(Poly::zero)
                .add_term(coeff, c.clone());
        }
        let mut out = Poly::zero();
        for (var, coeff_poly) in by_var {
            let red = table.reduce_pure(&coeff_poly);
            for (m, c) in red.terms {
                out.add_term(m.mul(&var), c);
            }
        }
        out
    }

    pub fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        self.reduce(&a.mul_raw(b, &self.trunc))
    }

    fn var_bound(&self) -> u32 {
        self.trunc
            .xi
            .saturating_add(self.trunc.ray)
            .min(self.trunc.lazard + 1)
            .max(1)
    }

    /// Formal sum p +_F q. Arguments must have no constant term.
    pub fn f_add(&self, p: &Poly, q: &Poly) -> Result<Poly> {
        if p.has_constant_term() || q.has_constant_term() {
            return Err(Error::BadInput(
                "formal sum of a series with constant term".into(),
            ));
        }
        let bound = self.var_bound();
        let mut out = p.add(q);
        let mut ppow = vec![p.clone()];
        let mut qpow = vec![q.clone()];
        for i in 1..=bound {
            for j in 1..=bound.saturating_sub(i) {
                let c = self.a(i, j);
                if c.is_zero() {
                    continue;
                }
                while (ppow.len() as u32) < i {
                    let next = ppow.last().unwrap().mul_raw(p, &self.trunc);
                    ppow.push(next);
                }
                while (qpow.len() as u32) < j {
                    let next = qpow.last().unwrap().mul_raw(q, &self.trunc);
                    qpow.push(next);
                }
                let term = ppow[(i - 1) as usize]
                    .mul_raw(&qpow[(j - 1) as usize], &self.trunc)
                    .mul_raw(&c, &self.trunc);
                out = out.add(&term);
            }
        }
        Ok(self.reduce(&out))
    }

    /// Formal inverse: the series g with p +_F g = 0.
    pub fn f_neg(&self, p: &Poly) -> Result<Poly> {
        if p.has_constant_term() {
            return Err(Error::BadInput(
                "formal inverse of a series with constant term".into(),
            ));
        }
        let bound = self.var_bound();
        let mut g = p.neg();
        for _ in 0..=bound {
            // g <- -p - sum a_ij p^i g^j, converging in the variable filtration
            let sum = self.f_add(p, &g)?;
            let correction = sum.sub(p).sub(&g);
            g = p.neg().sub(&correction);
            g = self.reduce(&g);
        }
        debug_assert!(self.f_add(p, &g).unwrap().is_zero());
        Ok(g)
    }

    /// k-fold formal sum (negative k via the formal inverse).
    pub fn f_int_mul(&self, k: &BigInt, p: &Poly) -> Result<Poly> {
        if k.is_negative() {
            let pos = self.f_int_mul(&-k.clone(), p)?;
            return self.f_neg(&pos);
        }
        let mut acc = Poly::zero();
        let mut k = k.clone();
        while !k.is_zero() {
            acc = self.f_add(&acc, p)?;
            k -= 1;
        }
        Ok(acc)
    }

    /// Logarithm coefficients m_1..m_n (m_1 = 1): the unique series
    /// l(x) = sum m_k x^k with l(F(x,y)) = l(x) + l(y) over the
    /// rationalized coefficient ring. Computed from l'(x) = 1/F_y(x, 0).
    pub fn logarithm(&self, n: u32) -> Vec<RatPoly> {
        // c_k: coefficients of l'(x) = sum c_k x^k; integer polynomials.
        let mut c: Vec<Poly> = vec![Poly::one()];
        for k in 1..=n.saturating_sub(1) {
            let mut acc = Poly::zero();
            for j in 1..=k {
                let f = self.a(j, 1);
                if f.is_zero() {
                    continue;
                }
                acc = acc.add(&self.mul(&f, &c[(k - j) as usize]));
            }
            c.push(self.reduce(&acc.neg()));
        }
        (1..=n)
            .map(|k| {
                RatPoly::from_poly(&c[(k - 1) as usize])
                    .scale(&BigRational::new(BigInt::one(), BigInt::from(k)))
            })
            .collect()
    }

    /// Class of projective n-space: (n+1) times the x^{n+1} logarithm
    /// coefficient, which must clear denominators into the integral ring.
    pub fn pn_class(&self, n: u32) -> Result<Poly> {
        if n > self.trunc.lazard {
            return Err(Error::BadInput(format!(
                "projective-space class P^{} exceeds truncation degree {}",
                n, self.trunc.lazard
            )));
        }
        if n == 0 {
            return Ok(Poly::one());
        }
        let logs = self.logarithm(n + 1);
        let scaled = logs[n as usize].scale(&BigRational::from(BigInt::from(n + 1)));
        let p = scaled
            .to_poly()
            .ok_or_else(|| Error::NonIntegral(format!("class of P^{} is not integral", n)))?;
        Ok(self.reduce(&p))
    }

    /// Chern class of the line bundle attached to the linear form `m`:
    /// the formal sum of m_k ·_F xi_k.
    pub fn xi_of_form(&self, m: &[BigInt]) -> Result<Poly> {
        let mut acc = Poly::zero();
        for (k, coeff) in m.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let term = self.f_int_mul(coeff, &Poly::gen(Gen::Xi(k as u32 + 1)))?;
            acc = self.f_add(&acc, &term)?;
        }
        Ok(acc)
    }

    /// Specialize every Lazard generator (and beta) to zero: the additive
    /// image of a computation.
    pub fn additive_specialization(p: &Poly) -> Poly {
        p.kill_gens(|g| matches!(g, Gen::A(_, _) | Gen::Beta))
    }

    /// Rank of the degree-d piece of the coefficient ring.
    pub fn coeff_rank(&self, d: u32) -> usize {
        if d > self.trunc.lazard {
            return 0;
        }
        match &self.kind {
            TheoryKind::Additive => {
                if d == 0 {
                    1
                } else {
                    0
                }
            }
            TheoryKind::Multiplicative { .. } => 1,
            TheoryKind::Universal => self.lazard.as_ref().unwrap().rank(d),
        }
    }

    /// Integer coordinates of a pure-coefficient element concentrated in
    /// degree d.
    pub fn coeff_coords(&self, p: &Poly, d: u32) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.coeff_rank(d)];
        if out.is_empty() {
            return out;
        }
        match &self.kind {
            TheoryKind::Additive => {
                if let Some(c) = p.terms.get(&Mono::one()) {
                    out[0] = c.clone();
                }
            }
            TheoryKind::Multiplicative { .. } => {
                let m = if d == 0 {
                    Mono::one()
                } else {
                    Mono(vec![(Gen::Beta, d)])
                };
                if let Some(c) = p.terms.get(&m) {
                    out[0] = c.clone();
                }
            }
            TheoryKind::Universal => {
                let terms: Vec<(Mono, BigInt)> = p
                    .terms
                    .iter()
                    .filter(|(m, _)| m.lazard_deg() == d && m.var_deg() == 0)
                    .map(|(m, c)| (m.clone(), c.clone()))
                    .collect();
                out = self.lazard.as_ref().unwrap().coords(d, &terms);
            }
        }
        out
    }

    /// Inverse of `coeff_coords`: the idx-th basis element of degree d.
    pub fn coeff_basis(&self, d: u32, idx: usize) -> Poly {
        match &self.kind {
            TheoryKind::Additive => {
                assert!(d == 0 && idx == 0);
                Poly::one()
            }
            TheoryKind::Multiplicative { .. } => {
                assert!(idx == 0);
                if d == 0 {
                    Poly::one()
                } else {
                    Poly {
                        terms: BTreeMap::from([(Mono(vec![(Gen::Beta, d)]), BigInt::one())]),
                    }
                }
            }
            TheoryKind::Universal => self.lazard.as_ref().unwrap().basis_poly(d, idx),
        }
    }
}

/// Sparse polynomial with rational coefficients; only used inside the
/// logarithm and projective-space classes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RatPoly {
    pub terms: BTreeMap<Mono, BigRational>,
}

impl RatPoly {
    pub fn from_poly(p: &Poly) -> RatPoly {
        RatPoly {
            terms: p
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), BigRational::from(c.clone())))
                .collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> RatPoly {
        if k.is_zero() {
            return RatPoly::default();
        }
        RatPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let e = out.terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                out.terms.remove(m);
            }
        }
        out
    }

    /// Integer form if all denominators are 1.
    pub fn to_poly(&self) -> Option<Poly> {
        let mut p = Poly::zero();
        for (m, c) in &self.terms {
            if !c.denom().is_one() {
                return None;
            }
            p.add_term(m.clone(), c.numer().clone());
        }
        Some(p)
    }

    pub fn mul(&self, other: &RatPoly, trunc: &Trunc) -> RatPoly {
        let mut out = RatPoly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.mul(m2);
                if !trunc.keeps(&m) {
                    continue;
                }
                let e = out.terms.entry(m).or_insert_with(BigRational::zero);
                *e += c1 * c2;
                if e.is_zero() {
                    out.terms.remove(&m1.mul(m2));
                }
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }
}

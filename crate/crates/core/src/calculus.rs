//! The smooth-case engine: Stanley-Reisner rings, divisor classes from
//! linear forms, the intersection product `c ∩ [V_τ]` with formal-group-law
//! corrections, equivariant and non-equivariant module presentations, orbit
//! restriction and gluing, and presentation simplification.
//!
//! Degree bookkeeping is homological: the generator `[V_σ]` has degree
//! `n - dim σ`; ray and ξ variables act with cohomological degree 1.
//! Self-intersections are eliminated by substituting a ray for the solved
//! divisor relation of a fixed linear form `m` with `<m, v_ρ> = 1` that
//! vanishes on the other rays of the cone; the substitution only involves
//! rays outside the cone, so the recursion terminates.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fan::{dot, Cone, Fan, LatticeVector};
use crate::matrix::{elementary_divisors, hnf, kernel, solve, IMat};
use crate::ring::{Gen, Mono, Poly, Theory};

/// Drop monomials whose ray support does not span a cone of the fan.
pub fn sr_reduce(fan: &Fan, p: &Poly) -> Poly {
    Poly {
        terms: p
            .terms
            .iter()
            .filter(|(m, _)| {
                let sup = m.ray_support();
                sup.is_empty()
                    || fan
                        .cones
                        .contains(&Cone::new(sup.iter().map(|&r| r as usize).collect()))
            })
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect(),
    }
}

/// Product in the Stanley-Reisner algebra.
pub fn sr_mul(fan: &Fan, theory: &Theory, a: &Poly, b: &Poly) -> Poly {
    sr_reduce(fan, &theory.mul(a, b))
}

/// The divisor class of a linear form: the formal sum over all rays of
/// `<m, v_ρ> ·_F ρ`, Stanley-Reisner reduced.
pub fn divisor_class(fan: &Fan, theory: &Theory, m: &[BigInt]) -> Result<Poly> {
    let mut acc = Poly::zero();
    for (i, v) in fan.rays.iter().enumerate() {
        let c = dot(m, v);
        if c.is_zero() {
            continue;
        }
        let term = theory.f_int_mul(&c, &Poly::gen(Gen::Ray(i as u32)))?;
        acc = sr_reduce(fan, &theory.f_add(&acc, &term)?);
    }
    Ok(acc)
}

/// Presentation of the Stanley-Reisner cohomology ring.
#[derive(Debug, Clone)]
pub struct SrRing {
    pub equivariant: bool,
    pub ray_count: usize,
    /// Minimal non-faces: the monomial generators of the SR ideal.
    pub ideal: Vec<Vec<usize>>,
    /// Non-equivariant mode only: for each basis form, the divisor class
    /// set to zero.
    pub linear_relations: Vec<(LatticeVector, Poly)>,
}

pub fn sr_ring(fan: &Fan, theory: &Theory, equivariant: bool) -> Result<SrRing> {
    if !fan.is_smooth() {
        return Err(Error::NotSmooth(
            "Stanley-Reisner ring requires a smooth fan".into(),
        ));
    }
    let r = fan.rays.len();
    assert!(r <= 20, "too many rays for non-face enumeration");
    let mut nonfaces: Vec<Vec<usize>> = Vec::new();
    for mask in 1u32..(1u32 << r) {
        let set: Vec<usize> = (0..r).filter(|i| mask & (1 << i) != 0).collect();
        if fan.cones.contains(&Cone(set.clone())) {
            continue;
        }
        if nonfaces.iter().any(|nf| nf.iter().all(|x| set.contains(x))) {
            continue;
        }
        nonfaces.retain(|nf| !set.iter().all(|x| nf.contains(x)));
        nonfaces.push(set);
    }
    nonfaces.sort();
    let mut linear = Vec::new();
    if !equivariant {
        for m in IMat::identity(fan.rank).to_rows() {
            linear.push((m.clone(), divisor_class(fan, theory, &m)?));
        }
    }
    Ok(SrRing {
        equivariant,
        ray_count: r,
        ideal: nonfaces,
        linear_relations: linear,
    })
}

/// Cap-product engine with cached self-intersection substitutions.
pub struct CapEngine<'a> {
    pub fan: &'a Fan,
    pub theory: &'a Theory,
    pub equivariant: bool,
    subst: RefCell<BTreeMap<(u32, Cone), Poly>>,
    memo: RefCell<BTreeMap<(Cone, Vec<(u32, u32)>), BTreeMap<Cone, Poly>>>,
}

impl<'a> CapEngine<'a> {
    pub fn new(fan: &'a Fan, theory: &'a Theory, equivariant: bool) -> CapEngine<'a> {
        CapEngine {
            fan,
            theory,
            equivariant,
            subst: RefCell::new(BTreeMap::new()),
            memo: RefCell::new(BTreeMap::new()),
        }
    }

    /// The fixed linear form for reducing a self-intersection of `ray` on
    /// the orbit closure of `cone`: `<m, v_ray> = 1`, vanishing on the
    /// other rays of the cone; minimal max-norm, ties lexicographic.
    pub fn m_choice(&self, ray: usize, cone: &Cone) -> Result<LatticeVector> {
        let mut rows = vec![self.fan.rays[ray].clone()];
        for &r in &cone.0 {
            if r != ray {
                rows.push(self.fan.rays[r].clone());
            }
        }
        let mut rhs = vec![BigInt::zero(); rows.len()];
        rhs[0] = BigInt::one();
        let a = IMat::from_rows(rows);
        let particular = solve(&a, &rhs).ok_or_else(|| {
            Error::NotSmooth(format!(
                "no dual form for ray {} on cone {}",
                ray,
                cone.label()
            ))
        })?;
        let lattice = kernel(&a);
        Ok(min_max_norm(&particular, &lattice))
    }

    /// Replacement series for one power of `ray` on the orbit closure of
    /// `cone`: the divisor relation of `m_choice` solved for the ray. Only
    /// rays outside `cone` (and, in equivariant mode, ξ variables) occur.
    fn subst_series(&self, ray: usize, cone: &Cone) -> Result<Poly> {
        let key = (ray as u32, cone.clone());
        if let Some(p) = self.subst.borrow().get(&key) {
            return Ok(p.clone());
        }
        let m = self.m_choice(ray, cone)?;
        let mut s = Poly::zero();
        for (i, v) in self.fan.rays.iter().enumerate() {
            if i == ray {
                continue;
            }
            let c = dot(&m, v);
            if c.is_zero() {
                continue;
            }
            let term = self.theory.f_int_mul(&c, &Poly::gen(Gen::Ray(i as u32)))?;
            s = sr_reduce(self.fan, &self.theory.f_add(&s, &term)?);
        }
        let neg = self.theory.f_neg(&s)?;
        let repl = if self.equivariant {
            let xi = self.theory.xi_of_form(&m)?;
            self.theory.f_add(&xi, &neg)?
        } else {
            neg
        };
        let repl = sr_reduce(self.fan, &repl);
        debug_assert!(repl.terms.keys().all(|mo| mo
            .ray_support()
            .iter()
            .all(|r| !cone.contains_ray(*r as usize))));
        self.subst.borrow_mut().insert(key, repl.clone());
        Ok(repl)
    }

    /// Cap a pure ray monomial against `[V_cone]`.
    fn cap_core(&self, cone: &Cone, rays: &[(u32, u32)]) -> Result<BTreeMap<Cone, Poly>> {
        if rays.is_empty() {
            return Ok(BTreeMap::from([(cone.clone(), Poly::one())]));
        }
        let total: u32 = rays.iter().map(|(_, e)| e).sum();
        if total as usize > self.fan.rank - self.fan.dim_of(cone) {
            return Ok(BTreeMap::new());
        }
        let key = (cone.clone(), rays.to_vec());
        if let Some(r) = self.memo.borrow().get(&key) {
            return Ok(r.clone());
        }
        // Transverse rays first, then self-intersections.
        let chosen = rays
            .iter()
            .map(|(r, _)| *r)
            .find(|r| !cone.contains_ray(*r as usize))
            .unwrap_or(rays[0].0);
        let remove_one = |rays: &[(u32, u32)], r: u32| -> Vec<(u32, u32)> {
            rays.iter()
                .filter_map(|&(s, e)| {
                    if s == r {
                        if e > 1 {
                            Some((s, e - 1))
                        } else {
                            None
                        }
                    } else {
                        Some((s, e))
                    }
                })
                .collect()
        };
        let rest = remove_one(rays, chosen);
        let mut out: BTreeMap<Cone, Poly> = BTreeMap::new();
        if !cone.contains_ray(chosen as usize) {
            let bigger = cone.union_with(chosen as usize);
            if self.fan.cones.contains(&bigger) {
                out = self.cap_core(&bigger, &rest)?;
            }
        } else {
            let repl = self.subst_series(chosen as usize, cone)?;
            for (mono, coeff) in &repl.terms {
                let mut merged: BTreeMap<u32, u32> = rest.iter().copied().collect();
                let mut scalar = Mono::one();
                for &(g, e) in &mono.0 {
                    match g {
                        Gen::Ray(r) => {
                            *merged.entry(r).or_insert(0) += e;
                        }
                        _ => scalar = scalar.mul(&Mono(vec![(g, e)])),
                    }
                }
                let merged: Vec<(u32, u32)> = merged.into_iter().collect();
                let sub = self.cap_core(cone, &merged)?;
                let factor = Poly {
                    terms: BTreeMap::from([(scalar, coeff.clone())]),
                };
                for (c, p) in sub {
                    let add = self.theory.mul(&p, &factor);
                    let entry = out.entry(c).or_insert_with(Poly::zero);
                    *entry = entry.add(&add);
                }
            }
            out.retain(|_, p| !p.is_zero());
        }
        self.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// `class ∩ [V_cone]` expressed over the generators `[V_σ]`, `σ ⊇ cone`.
    pub fn cap(&self, class: &Poly, cone: &Cone) -> Result<BTreeMap<Cone, Poly>> {
        let mut out: BTreeMap<Cone, Poly> = BTreeMap::new();
        for (mono, coeff) in &sr_reduce(self.fan, class).terms {
            let mut rays: BTreeMap<u32, u32> = BTreeMap::new();
            let mut scalar = Mono::one();
            for &(g, e) in &mono.0 {
                match g {
                    Gen::Ray(r) => {
                        rays.insert(r, e);
                    }
                    _ => scalar = scalar.mul(&Mono(vec![(g, e)])),
                }
            }
            let rays: Vec<(u32, u32)> = rays.into_iter().collect();
            let core = self.cap_core(cone, &rays)?;
            let factor = Poly {
                terms: BTreeMap::from([(scalar, coeff.clone())]),
            };
            for (c, p) in core {
                let add = self.theory.mul(&p, &factor);
                let entry = out.entry(c).or_insert_with(Poly::zero);
                *entry = entry.add(&add);
            }
        }
        out.retain(|_, p| !p.is_zero());
        Ok(out)
    }
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    let two_r: BigInt = &r * 2;
    if two_r.abs() > b.abs() {
        if r.is_negative() == b.is_negative() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Minimal max-norm representative of `particular + lattice`, ties broken
/// lexicographically. The lattice basis comes in Hermite normal form, so a
/// bounded branch-and-bound over pivot coordinates is exact.
fn min_max_norm(particular: &[BigInt], lattice: &[Vec<BigInt>]) -> LatticeVector {
    if lattice.is_empty() {
        return particular.to_vec();
    }
    let h = hnf(&IMat::from_rows(lattice.to_vec()));
    let rows = h.to_rows();
    let pivots: Vec<usize> = rows
        .iter()
        .map(|r| r.iter().position(|x| !x.is_zero()).unwrap())
        .collect();
    // Greedy size reduction for an initial bound.
    let mut start = particular.to_vec();
    for (row, &p) in rows.iter().zip(&pivots).rev() {
        let q = div_round(&start[p], &row[p]);
        for (s, r) in start.iter_mut().zip(row) {
            *s -= &q * r;
        }
    }
    let mut best = start.clone();
    let mut best_norm = start
        .iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(BigInt::zero);

    fn search(
        rows: &[Vec<BigInt>],
        pivots: &[usize],
        level: usize,
        current: Vec<BigInt>,
        best: &mut Vec<BigInt>,
        best_norm: &mut BigInt,
    ) {
        if level == rows.len() {
            let n = current
                .iter()
                .map(|x| x.abs())
                .max()
                .unwrap_or_else(BigInt::zero);
            if n < *best_norm || (n == *best_norm && current < *best) {
                *best_norm = n;
                *best = current;
            }
            return;
        }
        let p = pivots[level];
        let pivot = &rows[level][p]; // positive in HNF
                                     // |current[p] + c*pivot| <= best_norm bounds c exactly: later rows
                                     // vanish at this pivot column.
        let lo_num: BigInt = -best_norm.clone() - &current[p];
        let hi_num: BigInt = best_norm.clone() - &current[p];
        let lo = -(-lo_num).div_floor(pivot);
        let hi = hi_num.div_floor(pivot);
        let mut c = lo;
        while c <= hi {
            let cand: Vec<BigInt> = current
                .iter()
                .zip(&rows[level])
                .map(|(x, r)| x + &c * r)
                .collect();
            search(rows, pivots, level + 1, cand, best, best_norm);
            c += 1;
        }
    }
    search(&rows, &pivots, 0, start, &mut best, &mut best_norm);
    best
}

/// Theory descriptor carried by presentations and reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoryDesc {
    pub name: String,
    pub truncation: u32,
    pub equivariant: bool,
}

/// Generator label: a cone of the fan, or a pair for tensor products.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GenLabel {
    Cone(Cone),
    Pair(Box<GenLabel>, Box<GenLabel>),
}

impl GenLabel {
    pub fn label(&self) -> String {
        match self {
            GenLabel::Cone(c) => c.label(),
            GenLabel::Pair(a, b) => format!("({}x{})", a.label(), b.label()),
        }
    }

    pub fn as_cone(&self) -> Option<&Cone> {
        match self {
            GenLabel::Cone(c) => Some(c),
            _ => None,
        }
    }
}

/// A graded module presentation: cone-labeled generators with homological
/// degrees, and relation vectors with coefficient-ring entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    pub desc: TheoryDesc,
    pub rank: usize,
    pub generators: Vec<(GenLabel, i64)>,
    pub relations: Vec<Vec<Poly>>,
}

impl Presentation {
    pub fn generator_index(&self, c: &Cone) -> Option<usize> {
        self.generators
            .iter()
            .position(|(g, _)| g.as_cone() == Some(c))
    }

    /// Homological degree of a relation vector (None for the zero row).
    pub fn relation_degree(&self, rel: &[Poly]) -> Option<i64> {
        for (entry, (_, gdeg)) in rel.iter().zip(&self.generators) {
            if !entry.is_zero() {
                let cd = entry.homogeneous_coeff_degree()?;
                return Some(cd + gdeg);
            }
        }
        None
    }

    /// Per-degree generator counts.
    pub fn generator_ranks(&self) -> BTreeMap<i64, usize> {
        let mut out = BTreeMap::new();
        for (_, d) in &self.generators {
            *out.entry(*d).or_insert(0) += 1;
        }
        out
    }

    /// Entrywise substitution of 0 for every ξ variable.
    pub fn kill_xi(&self) -> Presentation {
        let mut out = self.clone();
        out.desc.equivariant = false;
        for rel in &mut out.relations {
            for e in rel.iter_mut() {
                *e = e.kill_gens(|g| matches!(g, Gen::Xi(_)));
            }
        }
        out
    }

    /// Entrywise additive specialization (all Lazard generators to zero).
    pub fn additive_specialization(&self) -> Presentation {
        let mut out = self.clone();
        out.desc.name = "chow".to_string();
        for rel in &mut out.relations {
            for e in rel.iter_mut() {
                *e = Theory::additive_specialization(e);
            }
        }
        out
    }
}

/// The presentation of `B^T_*(X)` (equivariant) or `B_*(X)` for a smooth
/// fan: generators are all cones; for each cone τ and basis form m ⊥ τ one
/// relation `ξ_m [V_τ] - (Σ_F <m,v_ρ> ·_F ρ) ∩ [V_τ] = 0` (the ξ term is
/// dropped in non-equivariant mode).
pub fn presentation(fan: &Fan, theory: &Theory, equivariant: bool) -> Result<Presentation> {
    if !fan.is_smooth() {
        return Err(Error::NotSmooth(
            "presentation requires a smooth fan".into(),
        ));
    }
    let n = fan.rank as i64;
    let generators: Vec<(GenLabel, i64)> = fan
        .cones
        .iter()
        .map(|c| (GenLabel::Cone(c.clone()), n - fan.dim_of(c) as i64))
        .collect();
    let index: BTreeMap<Cone, usize> = fan
        .cones
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    let engine = CapEngine::new(fan, theory, equivariant);
    let mut relations = Vec::new();
    for tau in fan.cones.iter() {
        for m in fan.orthogonal_forms(tau) {
            let dc = divisor_class(fan, theory, &m)?;
            let capped = engine.cap(&dc, tau)?;
            let mut rel = vec![Poly::zero(); generators.len()];
            if equivariant {
                rel[index[tau]] = theory.xi_of_form(&m)?;
            }
            for (c, p) in capped {
                let i = index[&c];
                rel[i] = rel[i].sub(&p);
            }
            relations.push(rel);
        }
    }
    Ok(Presentation {
        desc: TheoryDesc {
            name: theory.kind.name().to_string(),
            truncation: theory.trunc.lazard,
            equivariant,
        },
        rank: fan.rank,
        generators,
        relations,
    })
}

pub fn equivariant_presentation(fan: &Fan, theory: &Theory) -> Result<Presentation> {
    presentation(fan, theory, true)
}

pub fn nonequivariant_presentation(fan: &Fan, theory: &Theory) -> Result<Presentation> {
    presentation(fan, theory, false)
}

fn unit_value(p: &Poly) -> Option<BigInt> {
    if p.terms.len() != 1 {
        return None;
    }
    let (m, c) = p.terms.iter().next().unwrap();
    if m.0.is_empty() && (c.is_one() || (-c).is_one()) {
        Some(c.clone())
    } else {
        None
    }
}

/// Eliminate generators pivoted by unit coefficients (first relation in
/// listed order, earliest generator in canonical order), then put the
/// residual relations into per-degree Hermite normal form over the integer
/// coordinates of the coefficient ring. The graded isomorphism class is
/// preserved.
pub fn simplify(p: &Presentation, theory: &Theory) -> Presentation {
    let mut gens = p.generators.clone();
    let mut rels = p.relations.clone();
    'outer: loop {
        for ri in 0..rels.len() {
            for gi in 0..gens.len() {
                if let Some(sign) = unit_value(&rels[ri][gi]) {
                    let row = rels.remove(ri);
                    for r in &mut rels {
                        let c = r[gi].clone();
                        if c.is_zero() {
                            continue;
                        }
                        let factor = c.scale(&sign); // sign^2 = 1
                        for (j, e) in r.iter_mut().enumerate() {
                            *e = theory.reduce(&e.sub(&theory.mul(&factor, &row[j])));
                        }
                        debug_assert!(r[gi].is_zero());
                    }
                    gens.remove(gi);
                    for r in &mut rels {
                        r.remove(gi);
                    }
                    continue 'outer;
                }
            }
        }
        break;
    }
    rels.retain(|r| r.iter().any(|e| !e.is_zero()));
    let skeleton = Presentation {
        desc: p.desc.clone(),
        rank: p.rank,
        generators: gens.clone(),
        relations: Vec::new(),
    };
    let mut by_degree: BTreeMap<i64, Vec<Vec<Poly>>> = BTreeMap::new();
    for r in rels {
        let d = skeleton
            .relation_degree(&r)
            .expect("nonzero relation has a degree");
        by_degree.entry(d).or_default().push(r);
    }
    let mut out_rels = Vec::new();
    for (d, rows) in by_degree {
        let (mat, cols) = flatten(&skeleton, theory, &rows, d);
        let h = hnf(&mat);
        for i in 0..h.rows {
            out_rels.push(unflatten(&skeleton, theory, h.row(i), &cols, d));
        }
    }
    Presentation {
        desc: p.desc.clone(),
        rank: p.rank,
        generators: gens,
        relations: out_rels,
    }
}

/// Column key for the integer coordinates of a degree-homogeneous relation
/// space: (generator index, ξ monomial, coefficient-basis index).
type ColKey = (usize, Mono, usize);

fn flatten(
    p: &Presentation,
    theory: &Theory,
    rows: &[Vec<Poly>],
    degree: i64,
) -> (IMat, Vec<ColKey>) {
    let mut cols: Vec<ColKey> = Vec::new();
    let mut colidx: BTreeMap<ColKey, usize> = BTreeMap::new();
    for (gi, (_, gdeg)) in p.generators.iter().enumerate() {
        let base = degree - gdeg;
        let mut xi_monos: Vec<Mono> = vec![Mono::one()];
        for row in rows {
            if let Some(entry) = row.get(gi) {
                for m in entry.terms.keys() {
                    let (_, var) = m.split();
                    if !var.0.is_empty() && !xi_monos.contains(&var) {
                        xi_monos.push(var);
                    }
                }
            }
        }
        xi_monos.sort();
        for xi in xi_monos {
            let e = base + xi.xi_deg() as i64;
            if e < 0 || e as u32 > theory.trunc.lazard {
                continue;
            }
            for k in 0..theory.coeff_rank(e as u32) {
                let key = (gi, xi.clone(), k);
                colidx.insert(key.clone(), cols.len());
                cols.push(key);
            }
        }
    }
    let mut mat = IMat::zero(rows.len(), cols.len());
    for (i, row) in rows.iter().enumerate() {
        for (gi, entry) in row.iter().enumerate() {
            if entry.is_zero() {
                continue;
            }
            let gdeg = p.generators[gi].1;
            let mut by_xi: BTreeMap<Mono, Poly> = BTreeMap::new();
            for (m, c) in &entry.terms {
                let (coeff, var) = m.split();
                assert!(
                    var.ray_deg() == 0,
                    "relation entries cannot contain ray variables"
                );
                by_xi
                    .entry(var)
                    .or_insert_with(Poly::zero)
                    .add_term(coeff, c.clone());
            }
            for (xi, cpoly) in by_xi {
                let e = degree - gdeg + xi.xi_deg() as i64;
                assert!(e >= 0, "negative coefficient degree in relation entry");
                for (k, val) in theory
                    .coeff_coords(&cpoly, e as u32)
                    .into_iter()
                    .enumerate()
                {
                    if val.is_zero() {
                        continue;
                    }
                    let j = colidx[&(gi, xi.clone(), k)];
                    mat[(i, j)] = val;
                }
            }
        }
    }
    (mat, cols)
}

fn unflatten(
    p: &Presentation,
    theory: &Theory,
    row: &[BigInt],
    cols: &[ColKey],
    degree: i64,
) -> Vec<Poly> {
    let mut rel = vec![Poly::zero(); p.generators.len()];
    for (val, (gi, xi, k)) in row.iter().zip(cols) {
        if val.is_zero() {
            continue;
        }
        let gdeg = p.generators[*gi].1;
        let e = degree - gdeg + xi.xi_deg() as i64;
        let basis = theory.coeff_basis(e as u32, *k);
        for (m, c) in &basis.terms {
            rel[*gi].add_term(m.mul(xi), c * val);
        }
    }
    rel
}

/// Per-degree invariants of the graded module: free rank and torsion
/// elementary divisors of each graded piece, treated as a finitely
/// generated abelian group in coefficient-ring coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedInvariants(pub BTreeMap<i64, (usize, Vec<BigInt>)>);

pub fn graded_invariants(p: &Presentation, theory: &Theory) -> GradedInvariants {
    assert!(
        !p.desc.equivariant,
        "graded invariants use non-equivariant coordinates"
    );
    let n = p.rank as i64;
    let mut out = BTreeMap::new();
    for d in 0..=n {
        let mut ncols = 0usize;
        let mut col_of: Vec<Option<(usize, u32)>> = Vec::new();
        for (_, gdeg) in &p.generators {
            let e = d - gdeg;
            if e < 0 || e as u32 > theory.trunc.lazard {
                col_of.push(None);
                continue;
            }
            let r = theory.coeff_rank(e as u32);
            col_of.push(Some((ncols, e as u32)));
            ncols += r;
        }
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for rel in &p.relations {
            let Some(rd) = p.relation_degree(rel) else {
                continue;
            };
            let e = d - rd;
            if e < 0 || e as u32 > theory.trunc.lazard {
                continue;
            }
            for b in 0..theory.coeff_rank(e as u32) {
                let mu = theory.coeff_basis(e as u32, b);
                let mut row = vec![BigInt::zero(); ncols];
                for (gi, entry) in rel.iter().enumerate() {
                    if entry.is_zero() {
                        continue;
                    }
                    let Some((start, ce)) = col_of[gi] else {
                        continue;
                    };
                    let prod = theory.mul(&mu, entry);
                    for (k, v) in theory.coeff_coords(&prod, ce).into_iter().enumerate() {
                        row[start + k] = v;
                    }
                }
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
        let divs = if rows.is_empty() || ncols == 0 {
            Vec::new()
        } else {
            elementary_divisors(&IMat::from_rows(rows))
        };
        let torsion: Vec<BigInt> = divs.iter().filter(|x| !x.is_one()).cloned().collect();
        out.insert(d, (ncols - divs.len(), torsion));
    }
    GradedInvariants(out)
}

/// An element of the orbit ring of a cone: a polynomial in the `oxi`
/// variables dual to the cone's rays (smooth case).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitElement {
    pub cone: Cone,
    pub value: Poly,
}

/// Restrict a Stanley-Reisner class to the orbit of `cone`: monomials
/// supported outside the cone die; a ray of the cone becomes the orbit
/// coordinate dual to it; an ambient ξ form re-expands in the orbit
/// coordinates through the formal group law.
pub fn restrict_to_orbit(
    fan: &Fan,
    theory: &Theory,
    class: &Poly,
    cone: &Cone,
) -> Result<OrbitElement> {
    if !fan.is_smooth() {
        return Err(Error::NotSmooth(
            "orbit restriction requires a smooth fan".into(),
        ));
    }
    if !fan.cones.contains(cone) {
        return Err(Error::BadInput(format!(
            "cone {} is not in the fan",
            cone.label()
        )));
    }
    let mut out = Poly::zero();
    for (mono, coeff) in &class.terms {
        let sup = mono.ray_support();
        if sup.iter().any(|r| !cone.contains_ray(*r as usize)) {
            continue;
        }
        let mut base = Mono::one();
        let mut xi_factors: Vec<(u32, u32)> = Vec::new();
        for &(g, e) in &mono.0 {
            match g {
                Gen::Ray(r) => base = base.mul(&Mono(vec![(Gen::OXi(r), e)])),
                Gen::Xi(k) => xi_factors.push((k, e)),
                Gen::OXi(_) => {
                    return Err(Error::BadInput(
                        "orbit variables in an ambient class".into(),
                    ))
                }
                _ => base = base.mul(&Mono(vec![(g, e)])),
            }
        }
        let mut acc = Poly::zero();
        acc.add_term(base, coeff.clone());
        for (k, e) in xi_factors {
            let form = standard_form(fan.rank, k as usize - 1);
            let image = orbit_xi_of_form(fan, theory, cone, &form)?;
            for _ in 0..e {
                acc = theory.mul(&acc, &image);
            }
        }
        out = out.add(&acc);
    }
    Ok(OrbitElement {
        cone: cone.clone(),
        value: theory.reduce(&out),
    })
}

fn standard_form(rank: usize, i: usize) -> LatticeVector {
    let mut v = vec![BigInt::zero(); rank];
    v[i] = BigInt::one();
    v
}

/// Image of ξ_m in the orbit ring of a smooth cone: the formal sum of
/// `<m, v_ρ> ·_F oxi_ρ` over the cone's rays.
pub fn orbit_xi_of_form(fan: &Fan, theory: &Theory, cone: &Cone, m: &[BigInt]) -> Result<Poly> {
    let mut acc = Poly::zero();
    for &r in &cone.0 {
        let c = dot(m, &fan.rays[r]);
        if c.is_zero() {
            continue;
        }
        let term = theory.f_int_mul(&c, &Poly::gen(Gen::OXi(r as u32)))?;
        acc = theory.f_add(&acc, &term)?;
    }
    Ok(acc)
}

/// Restriction O_σ -> O_τ for a face τ ⊆ σ: orbit coordinates of rays
/// outside τ go to zero, the rest keep their names (dual bases align in
/// the smooth case).
pub fn orbit_restrict_to_face(elem: &OrbitElement, face: &Cone) -> OrbitElement {
    let value = elem.value.kill_gens(|g| match g {
        Gen::OXi(r) => !face.contains_ray(*r as usize),
        _ => false,
    });
    OrbitElement {
        cone: face.clone(),
        value,
    }
}

/// Check that a per-cone family respects every face-restriction map.
pub fn check_gluing(fan: &Fan, family: &BTreeMap<Cone, OrbitElement>) -> Result<bool> {
    for c in &fan.cones {
        if !family.contains_key(c) {
            return Err(Error::BadInput(format!(
                "family is missing the cone {}",
                c.label()
            )));
        }
    }
    for sigma in &fan.cones {
        for tau in fan.faces_of(sigma) {
            if tau == *sigma {
                continue;
            }
            let restricted = orbit_restrict_to_face(&family[sigma], &tau);
            if restricted.value != family[&tau].value {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

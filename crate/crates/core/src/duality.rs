//! Künneth tensor presentations and instance verification, and the
//! universal-coefficient dual module with the Kronecker pairing.
//!
//! Graded-isomorphism testing throughout is by per-degree elementary
//! divisors over the integers in coefficient-ring coordinates: each graded
//! piece is a finitely generated abelian group at fixed truncation.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::calculus::{
    graded_invariants, simplify, sr_reduce, CapEngine, GenLabel, GradedInvariants, Presentation,
};
use crate::descent::singular_presentation;
use crate::error::{Error, Result};
use crate::fan::{Cone, Fan};
use crate::matrix::{elementary_divisors, hnf, kernel, IMat};
use crate::ring::{Gen, Mono, Poly, Theory};

/// Product fan: rays of the factors in complementary coordinate blocks,
/// maximal cones the pairwise products.
pub fn product_fan(a: &Fan, b: &Fan) -> Result<Fan> {
    let rank = a.rank + b.rank;
    let mut rays = Vec::new();
    for r in &a.rays {
        let mut v = r.clone();
        v.extend(std::iter::repeat(BigInt::zero()).take(b.rank));
        rays.push(v);
    }
    for r in &b.rays {
        let mut v: Vec<BigInt> = std::iter::repeat(BigInt::zero()).take(a.rank).collect();
        v.extend(r.iter().cloned());
        rays.push(v);
    }
    let mut maximal = Vec::new();
    for ca in &a.maximal {
        for cb in &b.maximal {
            let mut ids = ca.0.clone();
            ids.extend(cb.0.iter().map(|i| i + a.rays.len()));
            maximal.push(ids);
        }
    }
    Fan::new(rank, rays, maximal)
}

/// Tensor product of two presentations over the coefficient ring:
/// generators are pairs with added degrees; relations are `r ⊗ g` and
/// `g ⊗ r`.
pub fn tensor_presentation(a: &Presentation, b: &Presentation) -> Result<Presentation> {
    if a.desc != b.desc {
        return Err(Error::Mismatch(format!(
            "tensor factors disagree: {:?} vs {:?}",
            a.desc, b.desc
        )));
    }
    let na = a.generators.len();
    let nb = b.generators.len();
    let mut generators = Vec::with_capacity(na * nb);
    for (la, da) in &a.generators {
        for (lb, db) in &b.generators {
            generators.push((
                GenLabel::Pair(Box::new(la.clone()), Box::new(lb.clone())),
                da + db,
            ));
        }
    }
    let pos = |ia: usize, ib: usize| ia * nb + ib;
    let mut relations = Vec::new();
    for r in &a.relations {
        for ib in 0..nb {
            let mut rel = vec![Poly::zero(); na * nb];
            for (ia, e) in r.iter().enumerate() {
                if !e.is_zero() {
                    rel[pos(ia, ib)] = e.clone();
                }
            }
            relations.push(rel);
        }
    }
    for ia in 0..na {
        for r in &b.relations {
            let mut rel = vec![Poly::zero(); na * nb];
            for (ib, e) in r.iter().enumerate() {
                if !e.is_zero() {
                    rel[pos(ia, ib)] = e.clone();
                }
            }
            relations.push(rel);
        }
    }
    Ok(Presentation {
        desc: a.desc.clone(),
        rank: a.rank + b.rank,
        generators,
        relations,
    })
}

/// Künneth comparison report.
#[derive(Clone, Debug)]
pub struct KunnethReport {
    pub holds: bool,
    pub tensor: GradedInvariants,
    pub product: GradedInvariants,
}

/// Compare the tensor of the factor presentations with the presentation of
/// the product fan, up to graded isomorphism.
pub fn check_kunneth(fan_x: &Fan, fan_y: &Fan, theory: &Theory) -> Result<KunnethReport> {
    let px = singular_presentation(fan_x, theory)?;
    let py = singular_presentation(fan_y, theory)?;
    let t = tensor_presentation(&px, &py)?;
    let product = product_fan(fan_x, fan_y)?;
    let pp = singular_presentation(&product, theory)?;
    let ti = graded_invariants(&t, theory);
    let pi = graded_invariants(&pp, theory);
    Ok(KunnethReport {
        holds: ti == pi,
        tensor: ti,
        product: pi,
    })
}

/// The Kronecker-dual module: for each degree, the free rank and torsion
/// (always empty for a Hom into the free coefficient ring) of the group of
/// degree-preserving coefficient-linear functionals annihilating all
/// relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualModule {
    pub degrees: BTreeMap<i64, (usize, Vec<BigInt>)>,
}

/// Solve `functional ∘ relations = 0` degreewise. `complete` is the
/// completeness flag of the underlying fan; without it the computation
/// proceeds only when explicitly allowed, and the caller must surface the
/// caveat.
pub fn dual_module(
    p: &Presentation,
    theory: &Theory,
    complete: bool,
    allow_noncomplete: bool,
) -> Result<DualModule> {
    if !complete && !allow_noncomplete {
        return Err(Error::NotComplete(
            "Kronecker duality requires a complete fan (pass the explicit flag to proceed)".into(),
        ));
    }
    let n = p.rank as i64;
    let mut degrees = BTreeMap::new();
    for k in 0..=n {
        // Unknowns: phi(g) in coefficient degree deg(g) - k.
        let mut ncols = 0usize;
        let mut col_of: Vec<Option<(usize, u32)>> = Vec::new();
        for (_, gdeg) in &p.generators {
            let e = gdeg - k;
            if e < 0 || e as u32 > theory.trunc.lazard {
                col_of.push(None);
                continue;
            }
            let r = theory.coeff_rank(e as u32);
            col_of.push(Some((ncols, e as u32)));
            ncols += r;
        }
        // Constraints: one block per relation, valued in degree rd - k.
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for rel in &p.relations {
            let Some(rd) = p.relation_degree(rel) else {
                continue;
            };
            let target = rd - k;
            if target < 0 || target as u32 > theory.trunc.lazard {
                continue;
            }
            let tdim = theory.coeff_rank(target as u32);
            let mut block: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); ncols]; tdim];
            for (gi, entry) in rel.iter().enumerate() {
                if entry.is_zero() {
                    continue;
                }
                let Some((start, e)) = col_of[gi] else {
                    continue;
                };
                for b in 0..theory.coeff_rank(e) {
                    let basis = theory.coeff_basis(e, b);
                    let prod = theory.mul(entry, &basis);
                    for (t, v) in theory
                        .coeff_coords(&prod, target as u32)
                        .into_iter()
                        .enumerate()
                    {
                        block[t][start + b] = v;
                    }
                }
            }
            rows.extend(block);
        }
        let free = if ncols == 0 {
            0
        } else if rows.is_empty() {
            ncols
        } else {
            let mat = IMat::from_rows(rows);
            let ker = kernel(&mat);
            // recheck by direct evaluation: kernel functionals annihilate
            // every constraint row
            for kv in &ker {
                for row in mat.to_rows() {
                    let s: BigInt = row.iter().zip(kv).map(|(a, b)| a * b).sum();
                    assert!(s.is_zero(), "dual functional fails to kill a relation");
                }
            }
            ker.len()
        };
        degrees.insert(k, (free, Vec::new()));
    }
    Ok(DualModule { degrees })
}

/// Kronecker pairing: the point-class coefficient of `class ∩ [V_cone]`,
/// i.e. the pushforward to the point of its degree-0 component.
pub fn kronecker_pairing(fan: &Fan, theory: &Theory, class: &Poly, cone: &Cone) -> Result<Poly> {
    if !fan.is_smooth() {
        return Err(Error::NotSmooth(
            "Kronecker pairing requires a smooth fan".into(),
        ));
    }
    if !fan.is_complete() {
        return Err(Error::NotComplete(
            "Kronecker pairing requires a complete fan".into(),
        ));
    }
    let engine = CapEngine::new(fan, theory, false);
    let capped = engine.cap(class, cone)?;
    let mut out = Poly::zero();
    for (c, p) in capped {
        if fan.dim_of(&c) == fan.rank {
            out = out.add(&p);
        }
    }
    Ok(theory.reduce(&out))
}

/// A monomial basis of the degree-k piece of the non-equivariant additive
/// cohomology ring (Stanley-Reisner ring modulo the linear relations),
/// used as the cohomology side of the pairing matrix. Errors if no subset
/// of monomials forms an integral basis.
pub fn cohomology_monomial_basis(fan: &Fan, degree: u32) -> Result<Vec<Mono>> {
    if !fan.is_smooth() {
        return Err(Error::NotSmooth(
            "monomial basis requires a smooth fan".into(),
        ));
    }
    if degree == 0 {
        return Ok(vec![Mono::one()]);
    }
    let th = Theory::additive(fan.rank as u32);
    let monos = sr_monomials(fan, degree);
    let lower = sr_monomials(fan, degree - 1);
    let index: BTreeMap<&Mono, usize> = monos.iter().zip(0..).collect();
    let mut rows = Vec::new();
    for mu in &lower {
        for i in 0..fan.rank {
            let mut m = vec![BigInt::zero(); fan.rank];
            m[i] = BigInt::one();
            let lin = crate::calculus::divisor_class(fan, &th, &m)?;
            let mu_poly = Poly {
                terms: BTreeMap::from([(mu.clone(), BigInt::one())]),
            };
            let prod = sr_reduce(fan, &mu_poly.mul_raw(&lin, &th.trunc));
            let mut row = vec![BigInt::zero(); monos.len()];
            for (mono, c) in &prod.terms {
                row[index[mono]] += c;
            }
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Ok(monos);
    }
    let h = hnf(&IMat::from_rows(rows));
    let mut pivot_cols = Vec::new();
    for i in 0..h.rows {
        let j = (0..h.cols).find(|&j| !h[(i, j)].is_zero()).unwrap();
        if !h[(i, j)].is_one() {
            return Err(Error::Unsupported(
                "no monomial basis: non-unit pivot in the cohomology lattice".into(),
            ));
        }
        pivot_cols.push(j);
    }
    Ok(monos
        .into_iter()
        .enumerate()
        .filter(|(j, _)| !pivot_cols.contains(j))
        .map(|(_, m)| m)
        .collect())
}

/// Stanley-Reisner surviving ray monomials of a given total degree.
fn sr_monomials(fan: &Fan, degree: u32) -> Vec<Mono> {
    let mut out = Vec::new();
    let r = fan.rays.len();
    fn rec(
        fan: &Fan,
        ray: usize,
        r: usize,
        left: u32,
        cur: &mut Vec<(Gen, u32)>,
        out: &mut Vec<Mono>,
    ) {
        if left == 0 {
            let sup: Vec<usize> = cur
                .iter()
                .map(|(g, _)| match g {
                    Gen::Ray(k) => *k as usize,
                    _ => unreachable!(),
                })
                .collect();
            if fan.cones.contains(&Cone::new(sup)) {
                out.push(Mono(cur.clone()));
            }
            return;
        }
        if ray == r {
            return;
        }
        rec(fan, ray + 1, r, left, cur, out);
        for e in 1..=left {
            cur.push((Gen::Ray(ray as u32), e));
            rec(fan, ray + 1, r, left - e, cur, out);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    rec(fan, 0, r, degree, &mut cur, &mut out);
    out.sort();
    out
}

/// Degreewise Kronecker pairing matrices between the additive monomial
/// basis of cohomology and the generators of the simplified presentation;
/// each must be square and unimodular for a smooth complete fan.
pub fn kronecker_matrices(
    fan: &Fan,
    theory: &Theory,
) -> Result<BTreeMap<i64, (Vec<Mono>, Vec<GenLabel>, IMat)>> {
    let pres = simplify(
        &crate::calculus::nonequivariant_presentation(fan, theory)?,
        theory,
    );
    let mut out = BTreeMap::new();
    for k in 0..=fan.rank as i64 {
        let basis = cohomology_monomial_basis(fan, k as u32)?;
        let gens: Vec<GenLabel> = pres
            .generators
            .iter()
            .filter(|(_, d)| *d == k)
            .map(|(l, _)| l.clone())
            .collect();
        let mut mat = IMat::zero(basis.len(), gens.len());
        for (bi, mono) in basis.iter().enumerate() {
            let class = Poly {
                terms: BTreeMap::from([(mono.clone(), BigInt::one())]),
            };
            for (gj, label) in gens.iter().enumerate() {
                let cone = label.as_cone().ok_or_else(|| {
                    Error::BadInput("pairing needs cone-labeled generators".into())
                })?;
                let val = kronecker_pairing(fan, theory, &class, cone)?;
                if val.is_zero() {
                    continue;
                }
                if val.terms.len() != 1 || !val.terms.contains_key(&Mono::one()) {
                    return Err(Error::NonIntegral(
                        "pairing of matched degrees must be an integer".into(),
                    ));
                }
                mat[(bi, gj)] = val.terms[&Mono::one()].clone();
            }
        }
        out.insert(k, (basis, gens, mat));
    }
    Ok(out)
}

/// A square integer matrix is unimodular iff it has full rank and all
/// elementary divisors 1.
pub fn is_unimodular(m: &IMat) -> bool {
    if m.rows != m.cols {
        return false;
    }
    if m.rows == 0 {
        return true;
    }
    let divs = elementary_divisors(m);
    divs.len() == m.rows && divs.iter().all(|d| d.is_one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::nonequivariant_presentation;
    use crate::fan::parse_fan;

    fn p1() -> Fan {
        parse_fan(r#"{"dim":1,"rays":[[1],[-1]],"cones":[[0],[1]]}"#).unwrap()
    }

    fn p2() -> Fan {
        parse_fan(r#"{"dim":2,"rays":[[1,0],[0,1],[-1,-1]],"cones":[[0,1],[1,2],[0,2]]}"#).unwrap()
    }

    fn point() -> Fan {
        parse_fan(r#"{"dim":0,"rays":[],"cones":[[]]}"#).unwrap()
    }

    fn example1(n: i64, m: i64) -> Fan {
        parse_fan(&format!(
            r#"{{"dim":2,"rays":[[1,0],[-1,{}],[-1,0],[-1,{}]],"cones":[[0,1],[1,2],[2,3],[3,0]]}}"#,
            n, -m
        ))
        .unwrap()
    }

    #[test]
    fn product_fan_of_lines_is_a_square() {
        let f = product_fan(&p1(), &p1()).unwrap();
        assert_eq!(f.rank, 2);
        assert_eq!(f.maximal.len(), 4);
        assert!(f.is_smooth());
        assert!(f.is_complete());
    }

    #[test]
    fn tensor_with_point_is_identity() {
        let th = Theory::universal(1);
        let a = singular_presentation(&p1(), &th).unwrap();
        let pt = singular_presentation(&point(), &th).unwrap();
        let t = tensor_presentation(&a, &pt).unwrap();
        assert_eq!(t.generators.len(), a.generators.len());
        assert_eq!(t.relations.len(), a.relations.len());
        assert_eq!(graded_invariants(&t, &th), graded_invariants(&a, &th));
    }

    #[test]
    fn tensor_of_lines_has_square_ranks() {
        let th = Theory::additive(2);
        let a = singular_presentation(&p1(), &th).unwrap();
        let t = tensor_presentation(&a, &a).unwrap();
        let inv = graded_invariants(&t, &th);
        assert_eq!(inv.0[&0], (1, vec![]));
        assert_eq!(inv.0[&1], (2, vec![]));
        assert_eq!(inv.0[&2], (1, vec![]));
    }

    #[test]
    fn tensor_requires_matching_theories() {
        let th1 = Theory::universal(1);
        let th2 = Theory::additive(1);
        let a = singular_presentation(&p1(), &th1).unwrap();
        let b = singular_presentation(&p1(), &th2).unwrap();
        assert!(tensor_presentation(&a, &b).is_err());
    }

    #[test]
    fn kunneth_for_p1_squared() {
        // additive: graded ranks are exactly (1,2,1)
        let th = Theory::additive(2);
        let rep = check_kunneth(&p1(), &p1(), &th).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.product.0[&0], (1, vec![]));
        assert_eq!(rep.product.0[&1], (2, vec![]));
        assert_eq!(rep.product.0[&2], (1, vec![]));
        // universal: the degree-1 piece also counts a11 times the point
        let th = Theory::universal(2);
        let rep = check_kunneth(&p1(), &p1(), &th).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.product.0[&1], (3, vec![]));
    }

    #[test]
    fn tensor_is_symmetric_up_to_graded_isomorphism() {
        let th = Theory::universal(3);
        let a = singular_presentation(&p2(), &th).unwrap();
        let b = singular_presentation(&p1(), &th).unwrap();
        let ab = tensor_presentation(&a, &b).unwrap();
        let ba = tensor_presentation(&b, &a).unwrap();
        assert_eq!(graded_invariants(&ab, &th), graded_invariants(&ba, &th));
    }

    #[test]
    fn kunneth_with_a_point_always_holds() {
        for th in [Theory::additive(2), Theory::universal(2)] {
            let rep = check_kunneth(&p2(), &point(), &th).unwrap();
            assert!(rep.holds);
        }
    }

    #[test]
    fn kunneth_negative_control() {
        let th = Theory::additive(2);
        let a = singular_presentation(&p1(), &th).unwrap();
        let product = product_fan(&p1(), &p1()).unwrap();
        let pp = singular_presentation(&product, &th).unwrap();
        // corrupt a factor: an extra free summand
        let mut bad = a.clone();
        bad.generators.push(bad.generators[0].clone());
        for r in &mut bad.relations {
            r.push(Poly::zero());
        }
        let t = tensor_presentation(&bad, &a).unwrap();
        assert_ne!(
            graded_invariants(&t, &th),
            graded_invariants(&pp, &th),
            "corrupted factor must break the comparison"
        );
    }

    #[test]
    fn dual_of_free_presentation() {
        let th = Theory::additive(2);
        let p = singular_presentation(&p2(), &th).unwrap();
        let d = dual_module(&p, &th, true, false).unwrap();
        for k in 0..=2 {
            assert_eq!(d.degrees[&k], (1, vec![]));
        }
    }

    #[test]
    fn dual_of_example1_has_rank_drop() {
        // the single degree-1 relation is primitive, so the dual in that
        // degree is free of rank one less than the generator count
        let f = example1(2, 3);
        // additive: three degree-1 generators, one primitive constraint
        let th = Theory::additive(2);
        let p = singular_presentation(&f, &th).unwrap();
        let gens_deg1 = p.generators.iter().filter(|(_, d)| *d == 1).count();
        assert_eq!(gens_deg1, 3);
        let d = dual_module(&p, &th, true, false).unwrap();
        assert_eq!(d.degrees[&1].0, gens_deg1 - 1);
        // universal: the fundamental class contributes one more unknown
        // (phi(s) of Lazard degree 1), still a single primitive constraint
        let th = Theory::universal(2);
        let p = singular_presentation(&f, &th).unwrap();
        let d = dual_module(&p, &th, true, false).unwrap();
        assert_eq!(d.degrees[&1].0, 3);
        // k = 0: 6 unknown coordinates (phi(s) in L_2, three in L_1, one
        // in L_0) cut by the single primitive constraint
        assert_eq!(d.degrees[&0].0, 5);
    }

    #[test]
    fn dual_gating_on_noncomplete_fans() {
        let th = Theory::additive(2);
        let f = parse_fan(r#"{"dim":2,"rays":[[1,0],[0,1]],"cones":[[0,1]]}"#).unwrap();
        let p = nonequivariant_presentation(&f, &th).unwrap();
        assert!(dual_module(&p, &th, f.is_complete(), false).is_err());
        assert!(dual_module(&p, &th, f.is_complete(), true).is_ok());
    }

    #[test]
    fn kronecker_pairing_examples() {
        let f = p2();
        let th = Theory::additive(2);
        let pt = Cone(vec![0, 1]);
        let v = kronecker_pairing(&f, &th, &Poly::one(), &pt).unwrap();
        assert_eq!(v, Poly::one());
        // universal, D = 1 on P^1: <ρ+, [P^1]> = 1
        let f = p1();
        let th = Theory::universal(1);
        let v = kronecker_pairing(&f, &th, &Poly::gen(Gen::Ray(0)), &Cone::empty()).unwrap();
        assert_eq!(v, Poly::one());
    }

    #[test]
    fn kronecker_matrices_unimodular_on_smooth_complete_surfaces() {
        let hirzebruch = parse_fan(
            r#"{"dim":2,"rays":[[1,0],[0,1],[-1,1],[0,-1]],"cones":[[0,1],[1,2],[2,3],[0,3]]}"#,
        )
        .unwrap();
        for f in [p2(), hirzebruch] {
            for th in [Theory::additive(2), Theory::universal(2)] {
                let mats = kronecker_matrices(&f, &th).unwrap();
                for (k, (basis, gens, m)) in &mats {
                    assert_eq!(basis.len(), gens.len(), "degree {}", k);
                    assert!(is_unimodular(m), "degree {} not unimodular", k);
                }
            }
        }
    }

    #[test]
    fn cohomology_basis_sizes_on_p2() {
        let f = p2();
        for (k, expected) in [(0u32, 1usize), (1, 1), (2, 1)] {
            let basis = cohomology_monomial_basis(&f, k).unwrap();
            assert_eq!(basis.len(), expected, "degree {}", k);
        }
    }
}

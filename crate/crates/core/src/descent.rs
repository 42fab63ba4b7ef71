//! Presentations for singular toric varieties: resolve, present the smooth
//! model, then impose the descent relations — identifications for lifts
//! whose orbit closures are isomorphic over the base, and fiber-class
//! relations for contracted orbit closures (fibers that are products of
//! projective spaces contribute the corresponding products of
//! projective-space classes).
//!
//! Only those two relation shapes are implemented; any other orbit-closure
//! comparison is a hard error naming the cone, never a silent
//! approximation.

use std::collections::BTreeMap;

use crate::calculus::{nonequivariant_presentation, simplify, GenLabel, Presentation};
use crate::error::{Error, Result};
use crate::fan::{classify_cone_map, Cone, ConeMapClass, Fan, SubdivisionMap};
use crate::ring::{Poly, Theory};

/// One descent relation on the resolution's generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DescentRelation {
    /// `[source] - [rep] = 0`: both lift the same cone isomorphically.
    Identify { source: Cone, rep: Cone },
    /// `[source] - class · [rep] = 0`: the orbit closure of `source`
    /// contracts onto that of `rep`'s target with the given fiber.
    Contract {
        source: Cone,
        rep: Cone,
        fiber: Vec<u32>,
        class: Poly,
    },
}

impl DescentRelation {
    pub fn source(&self) -> &Cone {
        match self {
            DescentRelation::Identify { source, .. } => source,
            DescentRelation::Contract { source, .. } => source,
        }
    }
}

/// A resolution together with the chosen representative lift of every
/// target cone and the extra relations to impose.
#[derive(Clone, Debug)]
pub struct DescentPlan {
    pub map: SubdivisionMap,
    /// target cone -> lexicographically smallest same-dimension lift
    pub representatives: BTreeMap<Cone, Cone>,
    pub extra_relations: Vec<DescentRelation>,
}

/// Build the descent plan for a smooth resolution.
pub fn build_plan(map: &SubdivisionMap, theory: &Theory) -> Result<DescentPlan> {
    if !map.source.is_smooth() {
        return Err(Error::NotSmooth(
            "descent requires a smooth resolution".into(),
        ));
    }
    // Same-dimension lifts of every target cone.
    let mut lifts: BTreeMap<Cone, Vec<Cone>> = BTreeMap::new();
    let mut contracted: Vec<(Cone, Cone)> = Vec::new();
    for c in &map.source.cones {
        let img = map.image(c).clone();
        if map.source.dim_of(c) == map.target.dim_of(&img) {
            lifts.entry(img).or_default().push(c.clone());
        } else {
            contracted.push((c.clone(), img));
        }
    }
    let mut representatives: BTreeMap<Cone, Cone> = BTreeMap::new();
    for t in &map.target.cones {
        let ls = lifts.get(t).ok_or_else(|| {
            Error::Unsupported(format!(
                "target cone {} has no same-dimension lift",
                t.label()
            ))
        })?;
        representatives.insert(t.clone(), ls.iter().min().unwrap().clone());
    }
    let mut extra = Vec::new();
    for (t, ls) in &lifts {
        if ls.len() < 2 {
            continue;
        }
        // Multiple lifts can only be identified when each maps
        // isomorphically onto the target orbit closure.
        for l in ls {
            match classify_cone_map(map, l) {
                ConeMapClass::Isomorphism => {}
                other => {
                    return Err(Error::Unsupported(format!(
                        "cone {} over {} is merely birational ({})",
                        l.label(),
                        t.label(),
                        describe(&other)
                    )))
                }
            }
        }
        let rep = &representatives[t];
        for l in ls {
            if l != rep {
                extra.push(DescentRelation::Identify {
                    source: l.clone(),
                    rep: rep.clone(),
                });
            }
        }
    }
    for (c, img) in contracted {
        match classify_cone_map(map, &c) {
            ConeMapClass::Fibration(dims) => {
                let mut class = Poly::one();
                for d in &dims {
                    class = theory.mul(&class, &theory.pn_class(*d)?);
                }
                extra.push(DescentRelation::Contract {
                    source: c,
                    rep: representatives[&img].clone(),
                    fiber: dims,
                    class,
                });
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "contracted cone {} is not a recognized fibration ({})",
                    c.label(),
                    describe(&other)
                )))
            }
        }
    }
    extra.sort_by(|a, b| a.source().cmp(b.source()));
    Ok(DescentPlan {
        map: map.clone(),
        representatives,
        extra_relations: extra,
    })
}

fn describe(c: &ConeMapClass) -> String {
    match c {
        ConeMapClass::Isomorphism => "isomorphism".into(),
        ConeMapClass::Fibration(d) => format!("fibration {:?}", d),
        ConeMapClass::Unsupported(s) => s.clone(),
    }
}

/// Apply the plan to a presentation of the resolution: eliminate every
/// non-representative generator by its descent relation, then relabel the
/// surviving generators by their target cones.
pub fn apply_plan(
    pres: &Presentation,
    plan: &DescentPlan,
    theory: &Theory,
) -> Result<Presentation> {
    let mut subst: BTreeMap<Cone, (Cone, Poly)> = BTreeMap::new();
    for rel in &plan.extra_relations {
        match rel {
            DescentRelation::Identify { source, rep } => {
                subst.insert(source.clone(), (rep.clone(), Poly::one()));
            }
            DescentRelation::Contract {
                source, rep, class, ..
            } => {
                subst.insert(source.clone(), (rep.clone(), class.clone()));
            }
        }
    }
    let mut keep: Vec<usize> = Vec::new();
    let mut target_of: Vec<Option<usize>> = vec![None; pres.generators.len()];
    for (i, (label, _)) in pres.generators.iter().enumerate() {
        let cone = label
            .as_cone()
            .ok_or_else(|| Error::BadInput("descent needs cone-labeled generators".into()))?;
        if !subst.contains_key(cone) {
            keep.push(i);
        }
    }
    let pos_of_cone: BTreeMap<&Cone, usize> = pres
        .generators
        .iter()
        .enumerate()
        .filter_map(|(i, (l, _))| l.as_cone().map(|c| (c, i)))
        .collect();
    for (i, (label, _)) in pres.generators.iter().enumerate() {
        if let Some(cone) = label.as_cone() {
            if let Some((rep, _)) = subst.get(cone) {
                target_of[i] = Some(pos_of_cone[rep]);
            }
        }
    }
    // Rewrite relations: entries on eliminated generators move to their
    // representative, scaled by the fiber class.
    let mut new_rels: Vec<Vec<Poly>> = Vec::new();
    for rel in &pres.relations {
        let mut moved = rel.clone();
        for (i, entry) in rel.iter().enumerate() {
            if entry.is_zero() {
                continue;
            }
            if let Some(rep_pos) = target_of[i] {
                let cone = pres.generators[i].0.as_cone().unwrap();
                let (_, class) = &subst[cone];
                let add = theory.mul(entry, class);
                moved[rep_pos] = moved[rep_pos].add(&add);
                moved[i] = Poly::zero();
            }
        }
        let compact: Vec<Poly> = keep.iter().map(|&i| moved[i].clone()).collect();
        if compact.iter().any(|p| !p.is_zero()) {
            new_rels.push(compact);
        }
    }
    // Relabel survivors by their target cones.
    let rep_to_target: BTreeMap<&Cone, &Cone> =
        plan.representatives.iter().map(|(t, r)| (r, t)).collect();
    let mut generators = Vec::new();
    for &i in &keep {
        let (label, deg) = &pres.generators[i];
        let cone = label.as_cone().unwrap();
        let target = rep_to_target.get(cone).ok_or_else(|| {
            Error::Unsupported(format!(
                "surviving generator {} is not a chosen representative",
                cone.label()
            ))
        })?;
        generators.push((GenLabel::Cone((*target).clone()), *deg));
    }
    Ok(Presentation {
        desc: pres.desc.clone(),
        rank: pres.rank,
        generators,
        relations: new_rels,
    })
}

/// Presentation of the homology of a (possibly singular) toric variety:
/// resolve, present the resolution, impose the descent relations, simplify.
/// Smooth input short-circuits to the smooth presentation.
pub fn singular_presentation(fan: &Fan, theory: &Theory) -> Result<Presentation> {
    singular_presentation_seeded(fan, theory, None).map(|(p, _)| p)
}

pub fn singular_presentation_seeded(
    fan: &Fan,
    theory: &Theory,
    seed: Option<u64>,
) -> Result<(Presentation, Option<DescentPlan>)> {
    if fan.is_smooth() {
        let p = nonequivariant_presentation(fan, theory)?;
        return Ok((simplify(&p, theory), None));
    }
    let (_resolution, map) = fan.resolve_seeded(seed)?;
    let plan = build_plan(&map, theory)?;
    let pres = nonequivariant_presentation(&map.source, theory)?;
    let descended = apply_plan(&pres, &plan, theory)?;
    Ok((simplify(&descended, theory), Some(plan)))
}

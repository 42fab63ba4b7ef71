//! Serialization of presentations, plans and reports: deterministic JSON
//! (byte-identical across runs) and a human-readable text mode that prints
//! relations with cone labels for side-by-side checking.

use num_bigint::BigInt;
use serde_json::{json, Map, Value};

use crate::calculus::{GenLabel, GradedInvariants, Presentation, SrRing, TheoryDesc};
use crate::descent::{DescentPlan, DescentRelation};
use crate::duality::{DualModule, KunnethReport};
use crate::error::{Error, Result};
use crate::fan::Cone;
use crate::ring::{poly_from_json, poly_to_json, Poly};

fn label_to_json(l: &GenLabel) -> Value {
    match l {
        GenLabel::Cone(c) => json!({ "cone": c.0 }),
        GenLabel::Pair(a, b) => json!({ "pair": [label_to_json(a), label_to_json(b)] }),
    }
}

fn label_from_json(v: &Value) -> Result<GenLabel> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::BadInput("generator label must be an object".into()))?;
    if let Some(c) = obj.get("cone") {
        let ids: Vec<usize> = serde_json::from_value(c.clone())
            .map_err(|_| Error::BadInput("bad cone label".into()))?;
        return Ok(GenLabel::Cone(Cone::new(ids)));
    }
    if let Some(p) = obj.get("pair") {
        let arr = p
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| Error::BadInput("bad pair label".into()))?;
        return Ok(GenLabel::Pair(
            Box::new(label_from_json(&arr[0])?),
            Box::new(label_from_json(&arr[1])?),
        ));
    }
    Err(Error::BadInput("unknown generator label".into()))
}

pub fn presentation_to_json(p: &Presentation) -> Value {
    let generators: Vec<Value> = p
        .generators
        .iter()
        .map(|(l, d)| {
            let mut o = label_to_json(l).as_object().unwrap().clone();
            o.insert("degree".into(), json!(d));
            Value::Object(o)
        })
        .collect();
    let relations: Vec<Value> = p
        .relations
        .iter()
        .map(|r| Value::Array(r.iter().map(poly_to_json).collect()))
        .collect();
    json!({
        "theory": p.desc.name,
        "truncation": p.desc.truncation,
        "equivariant": p.desc.equivariant,
        "rank": p.rank,
        "generators": generators,
        "relations": relations,
    })
}

pub fn presentation_from_json(v: &Value) -> Result<Presentation> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::BadInput("presentation must be an object".into()))?;
    let get = |k: &str| {
        obj.get(k)
            .ok_or_else(|| Error::BadInput(format!("missing `{}`", k)))
    };
    let desc = TheoryDesc {
        name: get("theory")?
            .as_str()
            .ok_or_else(|| Error::BadInput("bad theory".into()))?
            .to_string(),
        truncation: get("truncation")?
            .as_u64()
            .ok_or_else(|| Error::BadInput("bad truncation".into()))? as u32,
        equivariant: get("equivariant")?
            .as_bool()
            .ok_or_else(|| Error::BadInput("bad equivariant flag".into()))?,
    };
    let rank = get("rank")?
        .as_u64()
        .ok_or_else(|| Error::BadInput("bad rank".into()))? as usize;
    let mut generators = Vec::new();
    for g in get("generators")?
        .as_array()
        .ok_or_else(|| Error::BadInput("bad generators".into()))?
    {
        let label = label_from_json(g)?;
        let degree = g
            .get("degree")
            .and_then(|d| d.as_i64())
            .ok_or_else(|| Error::BadInput("bad generator degree".into()))?;
        generators.push((label, degree));
    }
    let mut relations = Vec::new();
    for r in get("relations")?
        .as_array()
        .ok_or_else(|| Error::BadInput("bad relations".into()))?
    {
        let row = r
            .as_array()
            .ok_or_else(|| Error::BadInput("bad relation row".into()))?;
        if row.len() != generators.len() {
            return Err(Error::BadInput("relation length mismatch".into()));
        }
        relations.push(
            row.iter()
                .map(poly_from_json)
                .collect::<Result<Vec<Poly>>>()?,
        );
    }
    Ok(Presentation {
        desc,
        rank,
        generators,
        relations,
    })
}

/// Text rendering: `<gen(deg), ... | relations>` with coefficient-ring
/// entries spelled out against cone labels.
pub fn presentation_to_text(p: &Presentation) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "theory {} (truncation {}{})\n",
        p.desc.name,
        p.desc.truncation,
        if p.desc.equivariant {
            ", equivariant"
        } else {
            ""
        }
    ));
    out.push_str("generators:\n");
    for (l, d) in &p.generators {
        out.push_str(&format!("  V{}  degree {}\n", l.label(), d));
    }
    if p.relations.is_empty() {
        out.push_str("relations: none (free module)\n");
        return out;
    }
    out.push_str("relations:\n");
    for r in &p.relations {
        let parts: Vec<String> = r
            .iter()
            .zip(&p.generators)
            .filter(|(e, _)| !e.is_zero())
            .map(|(e, (l, _))| format!("({})*V{}", e, l.label()))
            .collect();
        out.push_str(&format!("  {} = 0\n", parts.join(" + ")));
    }
    out
}

pub fn invariants_to_json(inv: &GradedInvariants) -> Value {
    let mut map = Map::new();
    for (d, (free, torsion)) in &inv.0 {
        map.insert(
            d.to_string(),
            json!({
                "free_rank": free,
                "torsion": torsion.iter().map(big_to_json).collect::<Vec<_>>(),
            }),
        );
    }
    Value::Object(map)
}

fn big_to_json(x: &BigInt) -> Value {
    match i64::try_from(x.clone()) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

pub fn dual_to_json(d: &DualModule, caveats: &[String]) -> Value {
    let mut map = Map::new();
    for (k, (free, torsion)) in &d.degrees {
        map.insert(
            k.to_string(),
            json!({
                "free_rank": free,
                "torsion": torsion.iter().map(big_to_json).collect::<Vec<_>>(),
            }),
        );
    }
    json!({
        "degrees": Value::Object(map),
        "caveats": caveats,
    })
}

pub fn kunneth_to_json(r: &KunnethReport) -> Value {
    json!({
        "holds": r.holds,
        "tensor": invariants_to_json(&r.tensor),
        "product": invariants_to_json(&r.product),
    })
}

pub fn sr_ring_to_json(r: &SrRing) -> Value {
    json!({
        "equivariant": r.equivariant,
        "ray_count": r.ray_count,
        "sr_ideal": r.ideal,
        "linear_relations": r
            .linear_relations
            .iter()
            .map(|(m, p)| {
                json!({
                    "form": m.iter().map(big_to_json).collect::<Vec<_>>(),
                    "class": poly_to_json(p),
                })
            })
            .collect::<Vec<_>>(),
    })
}

pub fn plan_to_json(plan: &DescentPlan) -> Value {
    let reps: Vec<Value> = plan
        .representatives
        .iter()
        .map(|(t, r)| json!({ "target": t.0, "rep": r.0 }))
        .collect();
    let rels: Vec<Value> = plan
        .extra_relations
        .iter()
        .map(|r| match r {
            DescentRelation::Identify { source, rep } => {
                json!({ "kind": "identify", "source": source.0, "rep": rep.0 })
            }
            DescentRelation::Contract {
                source,
                rep,
                fiber,
                class,
            } => json!({
                "kind": "contract",
                "source": source.0,
                "rep": rep.0,
                "fiber": fiber,
                "class": poly_to_json(class),
            }),
        })
        .collect();
    json!({
        "representatives": reps,
        "extra_relations": rels,
    })
}

//! Lattice and fan combinatorics: parsing, face closure, smoothness and
//! completeness tests, star subdivisions, toric resolution, and the
//! classification of orbit-closure maps under a subdivision.
//!
//! Cones are stored as sorted sets of ray indices. A `Fan` keeps the full
//! face-closed cone set plus per-cone geometry (span equations and facet
//! inequalities, both with ambient integer normals), so membership tests
//! and face enumeration are exact. All values are immutable after
//! construction.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{elementary_divisors, hnf, kernel, snf, solve, IMat};

pub type LatticeVector = Vec<BigInt>;

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Divide out the gcd of the coordinates; errors on the zero vector.
pub fn primitivize(v: &[BigInt]) -> Result<LatticeVector> {
    let mut g = BigInt::zero();
    for x in v {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return Err(Error::BadFan("zero vector cannot be primitivized".into()));
    }
    Ok(v.iter().map(|x| x / &g).collect())
}

fn is_zero_vec(v: &[BigInt]) -> bool {
    v.iter().all(|x| x.is_zero())
}

/// A cone of a fan: sorted ray indices. Ordered by dimension-of-index-set
/// first, then lexicographically, which is also the canonical generator
/// order of module presentations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cone(pub Vec<usize>);

impl Cone {
    pub fn new(mut ids: Vec<usize>) -> Cone {
        ids.sort_unstable();
        ids.dedup();
        Cone(ids)
    }

    pub fn empty() -> Cone {
        Cone(Vec::new())
    }

    pub fn contains_ray(&self, r: usize) -> bool {
        self.0.binary_search(&r).is_ok()
    }

    pub fn is_subset_of(&self, other: &Cone) -> bool {
        self.0.iter().all(|r| other.contains_ray(*r))
    }

    pub fn union_with(&self, r: usize) -> Cone {
        let mut ids = self.0.clone();
        ids.push(r);
        Cone::new(ids)
    }

    pub fn label(&self) -> String {
        let ids: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        format!("[{}]", ids.join(","))
    }
}

impl PartialOrd for Cone {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cone {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Exact description of a pointed rational cone: the linear span cut out
/// by integer equations plus facet inequalities with ambient normals.
#[derive(Clone, Debug)]
pub struct ConeGeom {
    pub dim: usize,
    span_eqs: Vec<LatticeVector>,
    facet_normals: Vec<LatticeVector>,
}

impl ConeGeom {
    /// Build from ambient generators; errors if the cone is not strictly
    /// convex (contains a line).
    pub fn new(rank: usize, gens: &[LatticeVector]) -> Result<ConeGeom> {
        if gens.is_empty() {
            let span_eqs = IMat::identity(rank).to_rows();
            return Ok(ConeGeom {
                dim: 0,
                span_eqs,
                facet_normals: Vec::new(),
            });
        }
        let b = hnf(&IMat::from_rows(gens.to_vec()));
        let d = b.rows;
        let span_eqs = kernel(&b);
        // Coordinates of the generators in the span basis.
        let bt = b.transpose();
        let coords: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|g| solve(&bt, g).expect("generator lies in its own row lattice"))
            .collect();
        let mut span_normals: Vec<Vec<BigInt>> = Vec::new();
        if d == 1 {
            let pos = coords.iter().any(|c| c[0].is_positive());
            let neg = coords.iter().any(|c| c[0].is_negative());
            if pos && neg {
                return Err(Error::BadFan("cone is not strictly convex".into()));
            }
            span_normals.push(vec![if neg { -BigInt::one() } else { BigInt::one() }]);
        } else {
            // Candidate facet hyperplanes are spanned by (d-1)-subsets.
            let k = coords.len();
            let mut subset = vec![0usize; d - 1];
            fn subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
                let mut out = Vec::new();
                let mut cur = Vec::new();
                fn rec(
                    start: usize,
                    k: usize,
                    size: usize,
                    cur: &mut Vec<usize>,
                    out: &mut Vec<Vec<usize>>,
                ) {
                    if cur.len() == size {
                        out.push(cur.clone());
                        return;
                    }
                    for i in start..k {
                        cur.push(i);
                        rec(i + 1, k, size, cur, out);
                        cur.pop();
                    }
                }
                rec(0, k, size, &mut cur, &mut out);
                out
            }
            let _ = &mut subset;
            for sel in subsets(k, d - 1) {
                let rows: Vec<Vec<BigInt>> = sel.iter().map(|&i| coords[i].clone()).collect();
                let m = IMat::from_rows(rows);
                let ker = kernel(&m);
                if ker.len() != 1 {
                    continue;
                }
                let w = &ker[0];
                let mut pos = false;
                let mut neg = false;
                for c in &coords {
                    let v = dot(w, c);
                    if v.is_positive() {
                        pos = true;
                    } else if v.is_negative() {
                        neg = true;
                    }
                }
                let oriented = if !neg {
                    Some(w.clone())
                } else if !pos {
                    Some(w.iter().map(|x| -x.clone()).collect())
                } else {
                    None
                };
                if let Some(w) = oriented {
                    if !span_normals.contains(&w) {
                        span_normals.push(w);
                    }
                }
            }
            // Strict convexity: the sum of facet normals is positive on
            // every generator of a pointed cone.
            let mut total = vec![BigInt::zero(); d];
            for w in &span_normals {
                for (t, x) in total.iter_mut().zip(w) {
                    *t += x;
                }
            }
            for c in &coords {
                if !dot(&total, c).is_positive() {
                    return Err(Error::BadFan("cone is not strictly convex".into()));
                }
            }
        }
        span_normals.sort();
        // Lift each span normal to an ambient normal: solve b * w = w_span
        // over the rationals and clear denominators.
        let mut facet_normals = Vec::new();
        for ws in &span_normals {
            facet_normals.push(lift_normal(&b, ws)?);
        }
        Ok(ConeGeom {
            dim: d,
            span_eqs,
            facet_normals,
        })
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        if self.dim == 0 {
            return is_zero_vec(x);
        }
        self.span_eqs.iter().all(|w| dot(w, x).is_zero())
            && self.facet_normals.iter().all(|w| !dot(w, x).is_negative())
    }

    /// Ray-index subsets of `gens` lying on each intersection of facets:
    /// the faces of the cone, as subsets of the generator list.
    fn face_subsets(&self, gens: &[LatticeVector]) -> BTreeSet<Vec<usize>> {
        let mut out = BTreeSet::new();
        out.insert((0..gens.len()).collect::<Vec<_>>());
        let f = self.facet_normals.len();
        assert!(f <= 20, "facet enumeration blowup");
        for mask in 0u32..(1u32 << f) {
            let members: Vec<usize> = (0..gens.len())
                .filter(|&i| {
                    (0..f).all(|j| {
                        mask & (1 << j) == 0 || dot(&self.facet_normals[j], &gens[i]).is_zero()
                    })
                })
                .collect();
            out.insert(members);
        }
        out
    }
}

fn lift_normal(b: &IMat, w_span: &[BigInt]) -> Result<LatticeVector> {
    // Rational solution of b * w = w_span, scaled to a primitive integer
    // vector (positive scaling keeps the halfspace).
    let s = snf(b);
    let ub = s.u.mul_vec(w_span);
    let mut y: Vec<BigRational> = vec![BigRational::zero(); b.cols];
    for i in 0..b.rows {
        if i < s.rank {
            y[i] = BigRational::new(ub[i].clone(), s.d[(i, i)].clone());
        } else if !ub[i].is_zero() {
            return Err(Error::BadFan("inconsistent span system".into()));
        }
    }
    let mut x = vec![BigRational::zero(); b.cols];
    for i in 0..b.cols {
        for j in 0..b.cols {
            if !s.v[(i, j)].is_zero() && !y[j].is_zero() {
                x[i] += BigRational::from(s.v[(i, j)].clone()) * y[j].clone();
            }
        }
    }
    let mut denom = BigInt::one();
    for xi in &x {
        denom = denom.lcm(xi.denom());
    }
    let ints: Vec<BigInt> = x
        .iter()
        .map(|xi| (xi * BigRational::from(denom.clone())).to_integer())
        .collect();
    primitivize(&ints)
}

/// A fan: primitive rays plus a face-closed cone set.
#[derive(Clone, Debug)]
pub struct Fan {
    pub rank: usize,
    pub rays: Vec<LatticeVector>,
    pub cones: BTreeSet<Cone>,
    pub maximal: Vec<Cone>,
    geom: BTreeMap<Cone, ConeGeom>,
}

impl PartialEq for Fan {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.rays == other.rays && self.cones == other.cones
    }
}
impl Eq for Fan {}

impl Fan {
    /// Build a fan from (possibly imprimitive) rays and a list of cones;
    /// faces are synthesized, rays are primitivized and deduplicated, and
    /// the pairwise common-face condition is checked for the listed cones.
    pub fn new(rank: usize, raw_rays: Vec<LatticeVector>, listed: Vec<Vec<usize>>) -> Result<Fan> {
        let mut rays: Vec<LatticeVector> = Vec::new();
        let mut remap: Vec<usize> = Vec::new();
        for (i, r) in raw_rays.iter().enumerate() {
            if r.len() != rank {
                return Err(Error::BadFan(format!(
                    "ray {} has {} coordinates, expected {}",
                    i,
                    r.len(),
                    rank
                )));
            }
            if is_zero_vec(r) {
                return Err(Error::BadFan(format!("ray {} is the zero vector", i)));
            }
            let p = primitivize(r)?;
            match rays.iter().position(|q| *q == p) {
                Some(j) => remap.push(j),
                None => {
                    rays.push(p);
                    remap.push(rays.len() - 1);
                }
            }
        }
        let mut listed_cones: Vec<Cone> = Vec::new();
        for c in &listed {
            for &idx in c {
                if idx >= raw_rays.len() {
                    return Err(Error::BadFan(format!("cone refers to missing ray {}", idx)));
                }
            }
            let cone = Cone::new(c.iter().map(|&i| remap[i]).collect());
            if !listed_cones.contains(&cone) {
                listed_cones.push(cone);
            }
        }
        // Geometry and face closure.
        let mut geom: BTreeMap<Cone, ConeGeom> = BTreeMap::new();
        let mut cones: BTreeSet<Cone> = BTreeSet::new();
        cones.insert(Cone::empty());
        let mut queue: Vec<Cone> = listed_cones.clone();
        while let Some(c) = queue.pop() {
            if cones.contains(&c) && geom.contains_key(&c) {
                continue;
            }
            let gens: Vec<LatticeVector> = c.0.iter().map(|&i| rays[i].clone()).collect();
            let g = ConeGeom::new(rank, &gens)?;
            if g.dim == 0 && !c.0.is_empty() {
                return Err(Error::BadFan("nonempty cone of dimension zero".into()));
            }
            for sub in g.face_subsets(&gens) {
                let face = Cone::new(sub.iter().map(|&i| c.0[i]).collect());
                if !cones.contains(&face) {
                    queue.push(face.clone());
                }
                cones.insert(face);
            }
            cones.insert(c.clone());
            geom.insert(c, g);
        }
        for c in cones.clone() {
            if let std::collections::btree_map::Entry::Vacant(e) = geom.entry(c.clone()) {
                let gens: Vec<LatticeVector> = c.0.iter().map(|&i| rays[i].clone()).collect();
                e.insert(ConeGeom::new(rank, &gens)?);
            }
        }
        // Every ray must occur as a 1-cone.
        for (i, _) in rays.iter().enumerate() {
            if !cones.contains(&Cone(vec![i])) {
                return Err(Error::BadFan(format!(
                    "ray {} is not contained in any cone",
                    i
                )));
            }
        }
        let maximal: Vec<Cone> = cones
            .iter()
            .filter(|c| !cones.iter().any(|d| *c != d && c.is_subset_of(d)))
            .cloned()
            .collect();
        let fan = Fan {
            rank,
            rays,
            cones,
            maximal,
            geom,
        };
        fan.check_pairwise(&listed_cones)?;
        Ok(fan)
    }

    fn check_pairwise(&self, listed: &[Cone]) -> Result<()> {
        for (i, a) in listed.iter().enumerate() {
            for b in listed.iter().skip(i + 1) {
                let common =
                    Cone::new(a.0.iter().copied().filter(|r| b.contains_ray(*r)).collect());
                if !self.cones.contains(&common) {
                    return Err(Error::BadFan(format!(
                        "cones {} and {} do not meet in a common face",
                        a.label(),
                        b.label()
                    )));
                }
                // Geometric check: every generator of the intersection cone
                // lies in the common face.
                let inter = self.intersect_cones(a, b);
                let cg = &self.geom[&common];
                for v in &inter {
                    if !cg.contains(v) {
                        return Err(Error::BadFan(format!(
                            "cones {} and {} overlap beyond their common face",
                            a.label(),
                            b.label()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Generators of cone(a) ∩ cone(b) by double-description cuts.
    fn intersect_cones(&self, a: &Cone, b: &Cone) -> Vec<LatticeVector> {
        let mut gens: Vec<LatticeVector> = a.0.iter().map(|&i| self.rays[i].clone()).collect();
        let gb = &self.geom[b];
        let mut halfspaces: Vec<LatticeVector> = Vec::new();
        for w in &gb.span_eqs {
            halfspaces.push(w.clone());
            halfspaces.push(w.iter().map(|x| -x.clone()).collect());
        }
        halfspaces.extend(gb.facet_normals.iter().cloned());
        for w in &halfspaces {
            let mut keep: Vec<LatticeVector> = Vec::new();
            let mut plus: Vec<(LatticeVector, BigInt)> = Vec::new();
            let mut minus: Vec<(LatticeVector, BigInt)> = Vec::new();
            for g in &gens {
                let v = dot(w, g);
                if !v.is_negative() {
                    keep.push(g.clone());
                }
                if v.is_positive() {
                    plus.push((g.clone(), v.clone()));
                }
                if v.is_negative() {
                    minus.push((g.clone(), v));
                }
            }
            for (gp, vp) in &plus {
                for (gm, vm) in &minus {
                    let combo: Vec<BigInt> = gp
                        .iter()
                        .zip(gm)
                        .map(|(p, m)| &vp.clone() * m - vm * p)
                        .collect();
                    // vp*gm - vm*gp is a nonnegative combination on the wall
                    if !is_zero_vec(&combo) {
                        keep.push(primitivize(&combo).unwrap());
                    }
                }
            }
            keep.sort();
            keep.dedup();
            gens = keep;
        }
        gens
    }

    pub fn geom(&self, c: &Cone) -> &ConeGeom {
        &self.geom[c]
    }

    pub fn dim_of(&self, c: &Cone) -> usize {
        self.geom[c].dim
    }

    pub fn contains_point(&self, c: &Cone, x: &[BigInt]) -> bool {
        self.geom[c].contains(x)
    }

    pub fn faces_of(&self, c: &Cone) -> Vec<Cone> {
        self.cones
            .iter()
            .filter(|t| t.is_subset_of(c))
            .cloned()
            .collect()
    }

    pub fn in_support(&self, x: &[BigInt]) -> bool {
        self.maximal.iter().any(|c| self.contains_point(c, x))
    }

    /// The unique cone containing `x` in its relative interior; `None` if
    /// `x` is outside the support.
    pub fn minimal_containing_cone(&self, x: &[BigInt]) -> Option<Cone> {
        let mut best: Option<&Cone> = None;
        for c in &self.cones {
            if self.contains_point(c, x) {
                best = match best {
                    None => Some(c),
                    Some(b) => {
                        if self.dim_of(c) < self.dim_of(b) {
                            Some(c)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
        }
        best.cloned()
    }

    /// An interior point of the cone: the sum of its primitive rays.
    pub fn relint_point(&self, c: &Cone) -> LatticeVector {
        let mut x = vec![BigInt::zero(); self.rank];
        for &i in &c.0 {
            for (xj, rj) in x.iter_mut().zip(&self.rays[i]) {
                *xj += rj;
            }
        }
        x
    }

    pub fn is_simplicial(&self, c: &Cone) -> bool {
        self.dim_of(c) == c.0.len()
    }

    /// A cone is smooth iff its ray generators extend to a lattice basis:
    /// Smith normal form of the generator matrix has all invariant
    /// factors 1 (and full rank equal to the ray count).
    pub fn cone_is_smooth(&self, c: &Cone) -> bool {
        if c.0.is_empty() {
            return true;
        }
        let m = IMat::from_rows(c.0.iter().map(|&i| self.rays[i].clone()).collect());
        let divs = elementary_divisors(&m);
        divs.len() == c.0.len() && divs.iter().all(|d| d.is_one())
    }

    pub fn smoothness(&self) -> (BTreeMap<Cone, bool>, bool) {
        let per: BTreeMap<Cone, bool> = self
            .cones
            .iter()
            .map(|c| (c.clone(), self.cone_is_smooth(c)))
            .collect();
        let all = per.values().all(|&b| b);
        (per, all)
    }

    pub fn is_smooth(&self) -> bool {
        self.maximal.iter().all(|c| self.cone_is_smooth(c))
    }

    /// Pure full-dimensional + every facet shared by exactly two maximal
    /// cones + connected dual graph.
    pub fn is_complete(&self) -> bool {
        if self.maximal.iter().any(|c| self.dim_of(c) != self.rank) {
            return false;
        }
        if self.rank == 0 {
            return true;
        }
        // facet -> incident maximal cones
        let mut incidence: BTreeMap<Cone, Vec<usize>> = BTreeMap::new();
        for (mi, m) in self.maximal.iter().enumerate() {
            for f in self.faces_of(m) {
                if self.dim_of(&f) + 1 == self.rank {
                    incidence.entry(f).or_default().push(mi);
                }
            }
        }
        if incidence.values().any(|v| v.len() != 2) {
            return false;
        }
        // connectivity of the dual graph
        let n = self.maximal.len();
        if n == 0 {
            return false;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in incidence.values() {
            adj[v[0]].push(v[1]);
            adj[v[1]].push(v[0]);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// HNF basis of the linear forms vanishing on the cone.
    pub fn orthogonal_forms(&self, c: &Cone) -> Vec<LatticeVector> {
        if c.0.is_empty() {
            return IMat::identity(self.rank).to_rows();
        }
        let m = IMat::from_rows(c.0.iter().map(|&i| self.rays[i].clone()).collect());
        kernel(&m)
    }

    fn star_subdivide_impl(&self, new_ray: &LatticeVector, allow_existing: bool) -> Result<Fan> {
        let v = primitivize(new_ray)?;
        if !self.in_support(&v) {
            return Err(Error::BadInput(format!(
                "subdivision ray {:?} lies outside the fan support",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>()
            )));
        }
        let existing = self.rays.iter().position(|r| *r == v);
        if existing.is_some() && !allow_existing {
            return Err(Error::BadInput(
                "subdivision ray equals an existing ray".into(),
            ));
        }
        let mut rays = self.rays.clone();
        let v_id = match existing {
            Some(i) => i,
            None => {
                rays.push(v.clone());
                rays.len() - 1
            }
        };
        let mut new_maximal: Vec<Vec<usize>> = Vec::new();
        for m in &self.maximal {
            if !self.contains_point(m, &v) {
                new_maximal.push(m.0.clone());
                continue;
            }
            // Replace by joins of v with the facets of m not containing v.
            let md = self.dim_of(m);
            for f in self.faces_of(m) {
                if self.dim_of(&f) + 1 == md && !self.contains_point(&f, &v) {
                    let mut ids = f.0.clone();
                    ids.push(v_id);
                    new_maximal.push(ids);
                }
            }
        }
        Fan::new(self.rank, rays, new_maximal)
    }

    /// Star subdivision at a new primitive ray in the support.
    pub fn star_subdivide(&self, new_ray: &LatticeVector) -> Result<(Fan, SubdivisionMap)> {
        let out = self.star_subdivide_impl(new_ray, false)?;
        let map = SubdivisionMap::between(&out, self)?;
        Ok((out, map))
    }

    /// Nonzero lattice points of the fundamental parallelepiped of a
    /// simplicial cone.
    pub fn parallelepiped_points(&self, c: &Cone) -> Vec<LatticeVector> {
        assert!(self.is_simplicial(c));
        let k = c.0.len();
        if k == 0 {
            return Vec::new();
        }
        let gens: Vec<LatticeVector> = c.0.iter().map(|&i| self.rays[i].clone()).collect();
        // Basis of the saturated span lattice.
        let gm = IMat::from_rows(gens.clone());
        let s = snf(&gm);
        // Rows of (v^-1 scaled) span the saturation: with U A V = D, the
        // saturation of the row space is spanned by the first k rows of
        // V^-1 (invariant factors divided out).
        let basis: Vec<LatticeVector> = (0..k).map(|i| s.vinv.row(i).to_vec()).collect();
        let bt = IMat::from_rows(basis.clone()).transpose();
        // Generator coordinates in that basis: integer k x k matrix.
        let a_rows: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|g| solve(&bt, g).expect("generator in saturated span"))
            .collect();
        let a = IMat::from_rows(a_rows).transpose(); // columns = generators
        let sa = snf(&a);
        let mut dvals: Vec<BigInt> = Vec::new();
        for i in 0..k {
            dvals.push(sa.d[(i, i)].clone());
        }
        // Enumerate residues c in prod [0, d_i), representative y = U^-1 c;
        // normalize into the parallelepiped via t = A^-1 y, t -> t - floor t.
        let uinv = invert_unimodular(&sa.u);
        let mut out = Vec::new();
        let mut counters = vec![BigInt::zero(); k];
        loop {
            if counters.iter().any(|x| !x.is_zero()) {
                let y = uinv.mul_vec(&counters);
                // t = A^{-1} y over the rationals
                let t = rational_solve(&a, &y);
                let frac: Vec<BigRational> = t
                    .iter()
                    .map(|x| x - BigRational::from(x.floor().to_integer()))
                    .collect();
                let y2: Vec<BigRational> = (0..k)
                    .map(|i| {
                        let mut s = BigRational::zero();
                        for j in 0..k {
                            s += BigRational::from(a[(i, j)].clone()) * frac[j].clone();
                        }
                        s
                    })
                    .collect();
                let y2int: Vec<BigInt> = y2.iter().map(|x| x.to_integer()).collect();
                if y2int.iter().any(|x| !x.is_zero()) {
                    let mut amb = vec![BigInt::zero(); self.rank];
                    for (ci, row) in y2int.iter().zip(&basis) {
                        for (aj, bj) in amb.iter_mut().zip(row) {
                            *aj += ci * bj;
                        }
                    }
                    out.push(amb);
                }
            }
            // increment counters in the mixed-radix system d
            let mut pos = 0;
            loop {
                if pos == k {
                    out.sort();
                    out.dedup();
                    return out;
                }
                counters[pos] += 1;
                if counters[pos] < dvals[pos] {
                    break;
                }
                counters[pos] = BigInt::zero();
                pos += 1;
            }
        }
    }

    /// Toric resolution: triangulate non-simplicial cones by pulling at
    /// their lexicographically smallest ray, then repeatedly star-subdivide
    /// a non-smooth simplicial cone at the fundamental-parallelepiped point
    /// with the smallest coordinate sum (ties lexicographic). The optional
    /// seed scrambles tie-breaking between equally eligible cones, for
    /// resolution-independence experiments.
    pub fn resolve_seeded(&self, seed: Option<u64>) -> Result<(Fan, SubdivisionMap)> {
        let mut fan = self.clone();
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > 10_000 {
                return Err(Error::Unsupported("resolution did not terminate".into()));
            }
            if let Some(c) = pick(
                fan.maximal.iter().filter(|c| !fan.is_simplicial(c)),
                seed,
                steps,
            ) {
                let ray = c.0.iter().map(|&i| fan.rays[i].clone()).min().unwrap();
                fan = fan.star_subdivide_impl(&ray, true)?;
                continue;
            }
            let non_smooth: Vec<Cone> = fan
                .cones
                .iter()
                .filter(|c| !fan.cone_is_smooth(c))
                .cloned()
                .collect();
            if non_smooth.is_empty() {
                break;
            }
            let target = pick(
                non_smooth.iter().filter(|c| {
                    // minimal dimension first for a small resolution
                    let dmin = non_smooth.iter().map(|d| d.0.len()).min().unwrap();
                    c.0.len() == dmin
                }),
                seed,
                steps,
            )
            .unwrap()
            .clone();
            let pts = fan.parallelepiped_points(&target);
            let chosen = pts
                .into_iter()
                .min_by(|a, b| {
                    let sa: BigInt = a.iter().sum();
                    let sb: BigInt = b.iter().sum();
                    sa.cmp(&sb).then_with(|| a.cmp(b))
                })
                .expect("non-smooth simplicial cone has a parallelepiped point");
            fan = fan.star_subdivide_impl(&primitivize(&chosen)?, true)?;
        }
        let map = SubdivisionMap::between(&fan, self)?;
        Ok((fan, map))
    }

    pub fn resolve(&self) -> Result<(Fan, SubdivisionMap)> {
        self.resolve_seeded(None)
    }

    pub fn to_file(&self) -> FanFile {
        FanFile {
            dim: self.rank,
            rays: self
                .rays
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|x| i64::try_from(x.clone()).expect("ray coordinate out of i64 range"))
                        .collect()
                })
                .collect(),
            cones: self.maximal.iter().map(|c| c.0.clone()).collect(),
        }
    }
}

/// Deterministic choice among equally eligible items: lexicographically
/// smallest without a seed, otherwise keyed by a splitmix-style hash.
fn pick<'a, I: Iterator<Item = &'a Cone>>(
    items: I,
    seed: Option<u64>,
    step: usize,
) -> Option<&'a Cone> {
    let mut v: Vec<&Cone> = items.collect();
    if v.is_empty() {
        return None;
    }
    v.sort();
    match seed {
        None => Some(v[0]),
        Some(s) => {
            let mut h = s.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(step as u64);
            h ^= h >> 30;
            h = h.wrapping_mul(0xbf58476d1ce4e5b9);
            h ^= h >> 27;
            Some(v[(h as usize) % v.len()])
        }
    }
}

fn invert_unimodular(u: &IMat) -> IMat {
    let n = u.rows;
    // Solve u * X = I column by column; entries stay integral.
    let mut cols: Vec<Vec<BigInt>> = Vec::new();
    for j in 0..n {
        let mut e = vec![BigInt::zero(); n];
        e[j] = BigInt::one();
        cols.push(solve(u, &e).expect("unimodular matrix inverts over the integers"));
    }
    let mut out = IMat::zero(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = col[i].clone();
        }
    }
    out
}

fn rational_solve(a: &IMat, b: &[BigInt]) -> Vec<BigRational> {
    let s = snf(a);
    let ub = s.u.mul_vec(b);
    let mut y = vec![BigRational::zero(); a.cols];
    for i in 0..s.rank {
        y[i] = BigRational::new(ub[i].clone(), s.d[(i, i)].clone());
    }
    (0..a.cols)
        .map(|i| {
            let mut acc = BigRational::zero();
            for j in 0..a.cols {
                if !s.v[(i, j)].is_zero() {
                    acc += BigRational::from(s.v[(i, j)].clone()) * y[j].clone();
                }
            }
            acc
        })
        .collect()
}

/// A subdivision `source -> target`: every source cone is contained in a
/// unique minimal target cone.
#[derive(Clone, Debug)]
pub struct SubdivisionMap {
    pub source: Fan,
    pub target: Fan,
    pub cone_image: BTreeMap<Cone, Cone>,
}

impl SubdivisionMap {
    pub fn between(source: &Fan, target: &Fan) -> Result<SubdivisionMap> {
        let mut cone_image = BTreeMap::new();
        for c in &source.cones {
            let x = source.relint_point(c);
            let img = target.minimal_containing_cone(&x).ok_or_else(|| {
                Error::BadInput(format!(
                    "source cone {} leaves the target support",
                    c.label()
                ))
            })?;
            for &i in &c.0 {
                if !target.contains_point(&img, &source.rays[i]) {
                    return Err(Error::BadInput(format!(
                        "source cone {} is not contained in its image {}",
                        c.label(),
                        img.label()
                    )));
                }
            }
            cone_image.insert(c.clone(), img);
        }
        Ok(SubdivisionMap {
            source: source.clone(),
            target: target.clone(),
            cone_image,
        })
    }

    pub fn image(&self, c: &Cone) -> &Cone {
        &self.cone_image[c]
    }
}

/// Result of comparing an orbit closure of the source with the orbit
/// closure of its image cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConeMapClass {
    Isomorphism,
    /// Fiber is a product of projective spaces of these dimensions.
    Fibration(Vec<u32>),
    Unsupported(String),
}

/// Quotient of the ambient lattice by the saturated span of `gens`:
/// coordinates are the last `n - r` entries of `u * x`.
struct QuotientMap {
    r: usize,
    u: IMat,
}

impl QuotientMap {
    fn new(rank: usize, gens: &[LatticeVector]) -> QuotientMap {
        if gens.is_empty() {
            return QuotientMap {
                r: 0,
                u: IMat::identity(rank),
            };
        }
        let cols = IMat::from_rows(gens.to_vec()).transpose();
        let s = snf(&cols);
        QuotientMap { r: s.rank, u: s.u }
    }

    fn dim(&self) -> usize {
        self.u.rows - self.r
    }

    fn apply(&self, x: &[BigInt]) -> LatticeVector {
        let y = self.u.mul_vec(x);
        y[self.r..].to_vec()
    }
}

/// Quotient image of a cone: primitive, deduplicated nonzero ray images.
fn quotient_cone_rays(q: &QuotientMap, fan: &Fan, c: &Cone) -> Vec<LatticeVector> {
    let mut out: Vec<LatticeVector> = Vec::new();
    for &i in &c.0 {
        let img = q.apply(&fan.rays[i]);
        if is_zero_vec(&img) {
            continue;
        }
        let p = primitivize(&img).unwrap();
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn same_cone(rank: usize, a: &[LatticeVector], b: &[LatticeVector]) -> bool {
    let ga = match ConeGeom::new(rank, a) {
        Ok(g) => g,
        Err(_) => return false,
    };
    let gb = match ConeGeom::new(rank, b) {
        Ok(g) => g,
        Err(_) => return false,
    };
    a.iter().all(|v| gb.contains(v)) && b.iter().all(|v| ga.contains(v))
}

/// Classify the map `V_cone -> V_image` induced by a subdivision.
pub fn classify_cone_map(map: &SubdivisionMap, cone: &Cone) -> ConeMapClass {
    let src = &map.source;
    let tgt = &map.target;
    let img = map.image(cone);
    let d_src = src.dim_of(cone);
    let d_tgt = tgt.dim_of(img);
    let src_star: Vec<&Cone> = src.cones.iter().filter(|t| cone.is_subset_of(t)).collect();
    let tgt_star: Vec<&Cone> = tgt.cones.iter().filter(|t| img.is_subset_of(t)).collect();
    let gens_src: Vec<LatticeVector> = cone.0.iter().map(|&i| src.rays[i].clone()).collect();
    let q = QuotientMap::new(src.rank, &gens_src);

    if d_src == d_tgt {
        // Same quotient lattice on both sides; isomorphism iff the star
        // fans agree cone by cone.
        if src_star.len() != tgt_star.len() {
            return ConeMapClass::Unsupported(format!(
                "cone {} maps birationally but star sizes differ",
                cone.label()
            ));
        }
        let nq = q.dim();
        let mut used = vec![false; tgt_star.len()];
        for t in &src_star {
            let it = map.image(t);
            let Some(pos) = tgt_star.iter().position(|s| *s == it) else {
                return ConeMapClass::Unsupported(format!(
                    "star cone {} maps outside the target star",
                    t.label()
                ));
            };
            if used[pos] {
                return ConeMapClass::Unsupported(format!(
                    "two star cones of {} share the image {}",
                    cone.label(),
                    it.label()
                ));
            }
            used[pos] = true;
            let qa = quotient_cone_rays(&q, src, t);
            let qb = quotient_cone_rays(&q, tgt, it);
            if !same_cone(nq, &qa, &qb) {
                return ConeMapClass::Unsupported(format!(
                    "star cone {} differs from its image {} in the quotient",
                    t.label(),
                    it.label()
                ));
            }
        }
        if used.iter().all(|&b| b) {
            ConeMapClass::Isomorphism
        } else {
            ConeMapClass::Unsupported(format!("star of {} misses target cones", cone.label()))
        }
    } else {
        classify_fibration(map, cone, &q, &src_star, &tgt_star)
    }
}

fn classify_fibration(
    map: &SubdivisionMap,
    cone: &Cone,
    q: &QuotientMap,
    src_star: &[&Cone],
    tgt_star: &[&Cone],
) -> ConeMapClass {
    let src = &map.source;
    let tgt = &map.target;
    let img = map.image(cone);
    let nq = q.dim();
    // Vertical sublattice: image of the target cone's span in the quotient.
    let img_gens: Vec<LatticeVector> = img.0.iter().map(|&i| tgt.rays[i].clone()).collect();
    let vert_gens: Vec<LatticeVector> = img_gens.iter().map(|g| q.apply(g)).collect();
    let vq = QuotientMap::new(nq, &vert_gens);
    let vdim = vq.r;
    if vdim != tgt.dim_of(img) - src.dim_of(cone) {
        return ConeMapClass::Unsupported(format!(
            "vertical lattice of {} has unexpected rank",
            cone.label()
        ));
    }
    // Target-side quotient, shared by source and target star cones.
    let qt = QuotientMap::new(tgt.rank, &img_gens);

    // Split every source star cone into vertical and horizontal ray parts.
    let is_vertical = |v: &LatticeVector| is_zero_vec(&vq.apply(v));
    let mut fiber_cones: BTreeSet<Vec<LatticeVector>> = BTreeSet::new();
    let mut pairs: BTreeSet<(Vec<LatticeVector>, Cone)> = BTreeSet::new();
    let mut lifts: BTreeMap<Cone, BTreeSet<Vec<LatticeVector>>> = BTreeMap::new();
    for t in src_star {
        let qrays = quotient_cone_rays(q, src, t);
        let vert: Vec<LatticeVector> = qrays.iter().filter(|v| is_vertical(v)).cloned().collect();
        let hor: Vec<LatticeVector> = qrays.iter().filter(|v| !is_vertical(v)).cloned().collect();
        let eta = map.image(t).clone();
        if !img.is_subset_of(&eta) {
            return ConeMapClass::Unsupported(format!(
                "star image of {} is inconsistent",
                t.label()
            ));
        }
        // Horizontal consistency: modulo the target cone, the source star
        // cone and its image cut out the same cone.
        let ha = {
            let mut v: Vec<LatticeVector> =
                t.0.iter()
                    .map(|&i| qt.apply(&src.rays[i]))
                    .filter(|x| !is_zero_vec(x))
                    .map(|x| primitivize(&x).unwrap())
                    .collect();
            v.sort();
            v.dedup();
            v
        };
        let hb = quotient_cone_rays(&qt, tgt, &eta);
        if !same_cone(qt.dim(), &ha, &hb) {
            return ConeMapClass::Unsupported(format!(
                "star cone {} does not project onto its image {}",
                t.label(),
                eta.label()
            ));
        }
        if map.image(t) == img {
            fiber_cones.insert(vert.clone());
        }
        if !pairs.insert((vert, eta.clone())) {
            return ConeMapClass::Unsupported(format!(
                "star of {} is not a product: duplicate (fiber, base) pair",
                cone.label()
            ));
        }
        lifts.entry(eta).or_default().insert(hor);
    }
    // Local triviality: one horizontal lift per base cone.
    for (eta, hs) in &lifts {
        if hs.len() != 1 {
            return ConeMapClass::Unsupported(format!(
                "multiple horizontal lifts over {}",
                eta.label()
            ));
        }
    }
    if pairs.len() != fiber_cones.len() * tgt_star.len() {
        return ConeMapClass::Unsupported(format!(
            "star of {} is not a product of fiber and base",
            cone.label()
        ));
    }
    // The fiber fan must be a product of boundary fans of simplices.
    let mut rays: Vec<LatticeVector> = Vec::new();
    for c in &fiber_cones {
        for v in c {
            if !rays.contains(v) {
                rays.push(v.clone());
            }
        }
    }
    rays.sort();
    let ray_idx = |v: &LatticeVector| rays.iter().position(|r| r == v).unwrap();
    let cone_sets: BTreeSet<BTreeSet<usize>> = fiber_cones
        .iter()
        .map(|c| c.iter().map(ray_idx).collect())
        .collect();
    // Minimal non-faces partition the rays into the simplex factors.
    let m = rays.len();
    if m > 20 {
        return ConeMapClass::Unsupported("fiber fan too large".into());
    }
    let mut nonfaces: Vec<BTreeSet<usize>> = Vec::new();
    for mask in 1u32..(1 << m) {
        let set: BTreeSet<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if cone_sets.contains(&set) {
            continue;
        }
        if nonfaces.iter().any(|nf| nf.is_subset(&set)) {
            continue;
        }
        nonfaces.retain(|nf| !set.is_subset(nf));
        nonfaces.push(set);
    }
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for g in &nonfaces {
        for &i in g {
            if !seen.insert(i) {
                return ConeMapClass::Unsupported("fiber factors are not disjoint".into());
            }
        }
    }
    if seen.len() != m || nonfaces.is_empty() {
        return ConeMapClass::Unsupported(
            "fiber fan is not a product of simplex boundaries".into(),
        );
    }
    // Each factor: rays sum to zero; dropping one gives a lattice basis
    // of the whole vertical lattice when combined across factors.
    let vcoords = |v: &LatticeVector| -> LatticeVector {
        let y = vq.u.mul_vec(v);
        y[..vq.r].to_vec()
    };
    let mut basis_rows: Vec<LatticeVector> = Vec::new();
    let mut dims: Vec<u32> = Vec::new();
    for g in &nonfaces {
        let mut sum = vec![BigInt::zero(); vq.r];
        for &i in g {
            let c = vcoords(&rays[i]);
            for (s, x) in sum.iter_mut().zip(&c) {
                *s += x;
            }
        }
        if !is_zero_vec(&sum) {
            return ConeMapClass::Unsupported("fiber factor rays do not sum to zero".into());
        }
        let mut ids: Vec<usize> = g.iter().copied().collect();
        ids.pop();
        for i in ids {
            basis_rows.push(vcoords(&rays[i]));
        }
        dims.push((g.len() - 1) as u32);
    }
    if basis_rows.len() != vq.r {
        return ConeMapClass::Unsupported("fiber rank mismatch".into());
    }
    let divs = elementary_divisors(&IMat::from_rows(basis_rows));
    if divs.len() != vq.r || !divs.iter().all(|d| d.is_one()) {
        return ConeMapClass::Unsupported("fiber is not unimodular".into());
    }
    // Cone set must be exactly the proper-subset products.
    let expected: usize = nonfaces.iter().map(|g| (1usize << g.len()) - 1).product();
    if cone_sets.len() != expected {
        return ConeMapClass::Unsupported("fiber cone set is not the full product".into());
    }
    dims.sort_unstable();
    ConeMapClass::Fibration(dims)
}

/// JSON schema of a fan file.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct FanFile {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub cones: Vec<Vec<usize>>,
}

pub fn parse_fan(text: &str) -> Result<Fan> {
    let file: FanFile = serde_json::from_str(text)?;
    let rays: Vec<LatticeVector> = file
        .rays
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    Fan::new(file.dim, rays, file.cones)
}

pub fn fan_to_json(fan: &Fan) -> serde_json::Value {
    serde_json::to_value(fan.to_file()).expect("fan serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fan_from(text: &str) -> Fan {
        parse_fan(text).unwrap()
    }

    pub(crate) fn p1() -> Fan {
        fan_from(r#"{"dim":1,"rays":[[1],[-1]],"cones":[[0],[1]]}"#)
    }

    pub(crate) fn p2() -> Fan {
        fan_from(r#"{"dim":2,"rays":[[1,0],[0,1],[-1,-1]],"cones":[[0,1],[1,2],[0,2]]}"#)
    }

    fn a2() -> Fan {
        fan_from(r#"{"dim":2,"rays":[[1,0],[0,1]],"cones":[[0,1]]}"#)
    }

    fn cube() -> Fan {
        // Fan over the cube with vertices (±1,±1,±1), written in a basis of
        // the lattice generated by the vertices.
        fan_from(
            r#"{"dim":3,
                "rays":[[1,0,0],[-1,1,1],[1,-1,0],[1,0,-1],[-1,0,1],[-1,1,0],[1,-1,-1],[-1,0,0]],
                "cones":[[0,2,3,6],[1,4,5,7],[0,1,3,5],[2,4,6,7],[0,1,2,4],[3,5,6,7]]}"#,
        )
    }

    fn example1(n: i64, m: i64) -> Fan {
        let text = format!(
            r#"{{"dim":2,"rays":[[1,0],[-1,{}],[-1,0],[-1,{}]],"cones":[[0,1],[1,2],[2,3],[3,0]]}}"#,
            n, -m
        );
        fan_from(&text)
    }

    #[test]
    fn parse_p1_has_three_cones() {
        let f = p1();
        assert_eq!(f.cones.len(), 3);
        assert_eq!(f.maximal.len(), 2);
    }

    #[test]
    fn parse_p2_face_closure_count() {
        let f = p2();
        assert_eq!(f.cones.len(), 7); // 1 + 3 + 3
    }

    #[test]
    fn parse_cube_has_27_cones() {
        let f = cube();
        assert_eq!(f.cones.len(), 27); // 1 + 8 + 12 + 6
        assert_eq!(f.maximal.len(), 6);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_fan(r#"{"dim":1,"rays":[[0]],"cones":[[0]]}"#).is_err());
        assert!(parse_fan(r#"{"dim":2,"rays":[[1,0]],"cones":[[0]],"extra":1}"#).is_err());
        assert!(parse_fan(r#"{"dim":2,"rays":[[1]],"cones":[[0]]}"#).is_err());
        // overlapping cones that do not meet in a face
        assert!(
            parse_fan(r#"{"dim":2,"rays":[[1,0],[0,1],[1,2]],"cones":[[0,1],[0,2]]}"#).is_err()
        );
        // a ray missing from every cone
        assert!(parse_fan(r#"{"dim":1,"rays":[[1],[-1]],"cones":[[0]]}"#).is_err());
        // a cone containing a line
        assert!(parse_fan(r#"{"dim":1,"rays":[[1],[-1]],"cones":[[0,1]]}"#).is_err());
    }

    #[test]
    fn rays_are_primitivized_and_deduped() {
        let f = fan_from(r#"{"dim":1,"rays":[[2],[-3],[1]],"cones":[[0],[1],[2]]}"#);
        assert_eq!(f.rays.len(), 2);
        assert_eq!(f.rays[0], vec![BigInt::from(1)]);
    }

    #[test]
    fn smoothness_examples() {
        let (per, all) = p2().smoothness();
        assert!(all);
        assert!(per.values().all(|&b| b));
        let f = fan_from(r#"{"dim":2,"rays":[[1,0],[1,2]],"cones":[[0,1]]}"#);
        assert!(!f.is_smooth());
        assert!(f.cone_is_smooth(&Cone(vec![0])));
        // non-simplicial cube cones are not smooth
        let c = cube();
        assert!(!c.is_smooth());
        assert!(!c.cone_is_smooth(&Cone(vec![0, 2, 3, 6])));
    }

    #[test]
    fn completeness_examples() {
        assert!(p1().is_complete());
        assert!(p2().is_complete());
        assert!(!a2().is_complete());
        assert!(cube().is_complete());
        assert!(example1(2, 3).is_complete());
        // torus fan: only the zero cone, not pure of top dimension
        let t = fan_from(r#"{"dim":2,"rays":[],"cones":[[]]}"#);
        assert!(!t.is_complete());
    }

    #[test]
    fn star_subdivide_quadrant() {
        let f = a2();
        let (g, map) = f
            .star_subdivide(&vec![BigInt::from(1), BigInt::from(1)])
            .unwrap();
        assert_eq!(g.maximal.len(), 2);
        assert!(g.is_smooth());
        // support preserved on sample points
        for pt in [[3, 1], [1, 3], [2, 2], [5, 0]] {
            let v: Vec<BigInt> = pt.iter().map(|&x| BigInt::from(x)).collect();
            assert_eq!(f.in_support(&v), g.in_support(&v));
        }
        // cone_image is monotone under inclusion
        for a in &g.cones {
            for b in &g.cones {
                if a.is_subset_of(b) {
                    assert!(map.image(a).is_subset_of(map.image(b)));
                }
            }
        }
        assert!(f
            .star_subdivide(&vec![BigInt::from(1), BigInt::from(-1)])
            .is_err());
        assert!(f
            .star_subdivide(&vec![BigInt::from(1), BigInt::from(0)])
            .is_err());
    }

    #[test]
    fn subdividing_p2_gives_four_maximal_cones() {
        let f = p2();
        let (g, _) = f
            .star_subdivide(&vec![BigInt::from(1), BigInt::from(1)])
            .unwrap();
        assert_eq!(g.maximal.len(), 4);
    }

    #[test]
    fn parallelepiped_point_of_112_cone() {
        let f = fan_from(r#"{"dim":2,"rays":[[1,0],[1,2]],"cones":[[0,1]]}"#);
        let pts = f.parallelepiped_points(&Cone(vec![0, 1]));
        assert_eq!(pts, vec![vec![BigInt::from(1), BigInt::from(1)]]);
        let (g, _) = f.resolve().unwrap();
        assert!(g.is_smooth());
        assert!(g.rays.contains(&vec![BigInt::from(1), BigInt::from(1)]));
        assert_eq!(g.maximal.len(), 2);
    }

    #[test]
    fn resolve_smooth_fan_is_identity() {
        let f = p2();
        let (g, map) = f.resolve().unwrap();
        assert_eq!(f, g);
        for c in &g.cones {
            assert_eq!(map.image(c), c);
        }
    }

    #[test]
    fn resolve_example1() {
        // (n,m) = (2,1): the two singular cones are fixed by adding
        // (0,1) and (-1,1); the m-side cones are already smooth.
        let f = example1(2, 1);
        let (g, _) = f.resolve().unwrap();
        assert!(g.is_smooth());
        let added: Vec<Vec<i64>> = g
            .rays
            .iter()
            .skip(4)
            .map(|r| {
                r.iter()
                    .map(|x| i64::try_from(x.clone()).unwrap())
                    .collect()
            })
            .collect();
        assert!(added.contains(&vec![0, 1]));
        assert!(added.contains(&vec![-1, 1]));
        assert_eq!(added.len(), 2);
        // (n,m) = (2,3): the resolution adds (0,1), (-1,1), (0,-1),
        // (-1,-1), (-1,-2).
        let f = example1(2, 3);
        let (g, map) = f.resolve().unwrap();
        assert!(g.is_smooth());
        assert_eq!(g.rays.len(), 9);
        for v in [[0, 1], [-1, 1], [0, -1], [-1, -1], [-1, -2]] {
            let v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            assert!(g.rays.contains(&v));
        }
        // face closure idempotence: rebuilding from maximal cones is stable
        let rebuilt = Fan::new(
            g.rank,
            g.rays.clone(),
            g.maximal.iter().map(|c| c.0.clone()).collect(),
        )
        .unwrap();
        assert_eq!(g, rebuilt);
        // monotone cone images
        for a in &g.cones {
            for b in &g.cones {
                if a.is_subset_of(b) {
                    assert!(map.image(a).is_subset_of(map.image(b)));
                }
            }
        }
    }

    #[test]
    fn resolve_cube_is_a_triangulation() {
        let f = cube();
        let (g, _) = f.resolve().unwrap();
        assert!(g.is_smooth());
        assert_eq!(g.rays.len(), 8, "cube resolves by diagonals, no new rays");
        assert_eq!(g.maximal.len(), 12);
    }

    #[test]
    fn classify_identity_and_contractions() {
        let f = example1(2, 3);
        let (g, map) = f.resolve().unwrap();
        // the fundamental cone maps isomorphically nowhere (star changed):
        // but each original ray does
        for v in [[1i64, 0], [-1, 2], [-1, 0], [-1, -3]] {
            let v: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            let id = g.rays.iter().position(|r| *r == v).unwrap();
            assert_eq!(
                classify_cone_map(&map, &Cone(vec![id])),
                ConeMapClass::Isomorphism
            );
        }
        // an added ray is a contracted projective line
        let v: Vec<BigInt> = vec![BigInt::from(0), BigInt::from(1)];
        let id = g.rays.iter().position(|r| *r == v).unwrap();
        assert_eq!(
            classify_cone_map(&map, &Cone(vec![id])),
            ConeMapClass::Fibration(vec![1])
        );
        // 2-cones are points over points
        for c in g.cones.iter().filter(|c| c.0.len() == 2) {
            assert_eq!(classify_cone_map(&map, c), ConeMapClass::Isomorphism);
        }
    }

    #[test]
    fn fan_json_round_trip() {
        for f in [p1(), p2(), cube(), example1(3, 2)] {
            let text = serde_json::to_string(&fan_to_json(&f)).unwrap();
            let g = parse_fan(&text).unwrap();
            assert_eq!(f, g);
        }
    }

    #[test]
    fn smoothness_agrees_with_determinant_on_full_simplicial_cones() {
        // cross-check: |det| of the generator matrix vs the SNF route
        fn det(rows: &[Vec<BigInt>]) -> BigInt {
            let n = rows.len();
            if n == 1 {
                return rows[0][0].clone();
            }
            let mut acc = BigInt::zero();
            for j in 0..n {
                let minor: Vec<Vec<BigInt>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(k, _)| *k != j)
                            .map(|(_, x)| x.clone())
                            .collect()
                    })
                    .collect();
                let term = &rows[0][j] * det(&minor);
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
        for fan in [
            p2(),
            example1(2, 3),
            example1(1, 1),
            cube().resolve().unwrap().0,
        ] {
            for c in &fan.cones {
                if c.0.len() == fan.rank && fan.is_simplicial(c) {
                    let rows: Vec<Vec<BigInt>> = c.0.iter().map(|&i| fan.rays[i].clone()).collect();
                    let d = det(&rows).abs();
                    assert_eq!(
                        fan.cone_is_smooth(c),
                        d == BigInt::one(),
                        "cone {} with |det| {}",
                        c.label(),
                        d
                    );
                }
            }
        }
    }
}

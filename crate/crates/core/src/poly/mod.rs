//! Exact polytopes: vertex and facet descriptions over the rationals and the
//! conversions between them.

mod dd;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::rat::{self, Q};

pub type RationalVector = Vec<Q>;

/// a . x <= rhs
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearInequality {
    pub coeffs: RationalVector,
    pub rhs: Q,
}

impl LinearInequality {
    pub fn new(coeffs: RationalVector, rhs: Q) -> Self {
        LinearInequality { coeffs, rhs }.normalized()
    }

    pub fn from_ints(coeffs: &[i64], rhs: i64) -> Self {
        Self::new(coeffs.iter().map(|&x| rat::q(x)).collect(), rat::q(rhs))
    }

    /// Positive rescaling to coprime integers. The sense is never flipped.
    pub fn normalized(self) -> Self {
        let mut all = self.coeffs.clone();
        all.push(self.rhs.clone());
        if all.iter().all(|x| x.is_zero()) {
            return self;
        }
        let ints = rat::primitive(&all);
        let (rhs, coeffs) = ints.split_last().unwrap();
        LinearInequality {
            coeffs: coeffs.iter().map(|x| Q::from_integer(x.clone())).collect(),
            rhs: Q::from_integer(rhs.clone()),
        }
    }

    pub fn slack(&self, x: &[Q]) -> Q {
        &self.rhs - rat::dot(&self.coeffs, x)
    }

    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        !self.slack(x).is_negative()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "coeffs": self.coeffs.iter().map(rat::to_pair).collect::<Vec<_>>(),
            "rhs": rat::to_pair(&self.rhs),
        })
    }

    /// `rhs a1 a2 ...` for integer-normalized inequalities.
    pub fn to_text(&self) -> String {
        let mut parts = vec![self.rhs.to_string()];
        parts.extend(self.coeffs.iter().map(|x| x.to_string()));
        parts.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalPolytope {
    pub dim_ambient: usize,
    pub vertices: Option<Vec<RationalVector>>,
    pub facets: Option<Vec<LinearInequality>>,
    /// Equations a . x = b cutting out the affine hull (empty when full-dimensional).
    pub equations: Vec<(RationalVector, Q)>,
    pub affine_hull_dim: Option<usize>,
}

impl RationalPolytope {
    pub fn from_vertices(vertices: Vec<RationalVector>) -> Result<Self> {
        let dim = check_dims(&vertices)?;
        let mut v = vertices;
        v.sort();
        v.dedup();
        let hull = affine_rank(&v);
        Ok(RationalPolytope {
            dim_ambient: dim,
            vertices: Some(v),
            facets: None,
            equations: Vec::new(),
            affine_hull_dim: Some(hull),
        })
    }

    pub fn facet_count(&self) -> usize {
        self.facets.as_ref().map_or(0, |f| f.len())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "dim": self.dim_ambient,
            "affine_hull_dim": self.affine_hull_dim,
            "vertices": self.vertices.as_ref().map(|vs| vs.iter()
                .map(|v| v.iter().map(rat::to_pair).collect::<Vec<_>>()).collect::<Vec<_>>()),
            "facets": self.facets.as_ref().map(|fs| fs.iter().map(|f| f.to_json()).collect::<Vec<_>>()),
            "equations": self.equations.iter().map(|(a, b)| json!({
                "coeffs": a.iter().map(rat::to_pair).collect::<Vec<_>>(),
                "rhs": rat::to_pair(b),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn facets_text(&self) -> String {
        self.facets
            .as_ref()
            .map(|fs| fs.iter().map(|f| f.to_text() + "\n").collect())
            .unwrap_or_default()
    }
}

fn check_dims(points: &[RationalVector]) -> Result<usize> {
    let dim = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::InvalidInput("empty point set".into()))?;
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    Ok(dim)
}

fn homogenize(points: &[RationalVector]) -> Vec<Vec<Q>> {
    points
        .iter()
        .map(|p| {
            let mut r = Vec::with_capacity(p.len() + 1);
            r.push(Q::one());
            r.extend(p.iter().cloned());
            r
        })
        .collect()
}

/// Dimension of the affine span (0 for a single point).
pub fn affine_rank(points: &[RationalVector]) -> usize {
    if points.is_empty() {
        return 0;
    }
    rat::rank(&homogenize(points)) - 1
}

/// Greedy pick of affinely independent points, returning their indices.
pub fn affinely_independent_subset(points: &[RationalVector], idx: &[usize]) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for &i in idx {
        let mut trial = rows.clone();
        trial.push(homogenize(std::slice::from_ref(&points[i])).remove(0));
        if rat::rank(&trial) > rows.len() {
            rows = trial;
            chosen.push(i);
        }
    }
    chosen
}

fn cap_error(e: dd::DdError, cap: usize) -> Error {
    match e {
        dd::DdError::Cap {
            rays,
            rows_done,
            rows,
        } => Error::CapExceeded {
            what: "double-description rays",
            reached: rays as u128,
            limit: cap as u128,
            progress: format!("{rows_done} of {rows} constraints processed"),
        },
        dd::DdError::Overflow => unreachable!("bigint fallback cannot overflow"),
    }
}

fn to_int_row(v: &[Q]) -> Vec<BigInt> {
    rat::primitive(v)
}

/// Complete irredundant facet list of conv(vertices) within its affine hull.
pub fn hull_facets(vertices: &[RationalVector], caps: &Caps) -> Result<RationalPolytope> {
    let dim = check_dims(vertices)?;
    let mut verts = vertices.to_vec();
    verts.sort();
    verts.dedup();
    let hom = homogenize(&verts);

    // equations of the affine hull: (c0, a) with c0 + a.v = 0
    let eqs: Vec<(RationalVector, Q)> = rat::nullspace(&hom, dim + 1)
        .into_iter()
        .map(|ns| {
            let b = -ns[0].clone();
            (ns[1..].to_vec(), b)
        })
        .collect();
    let hull_dim = dim - eqs.len();

    // coordinates on which the projection stays injective
    let mut coords: Vec<usize> = Vec::new();
    let mut cur = rat::rank(&homogenize(&verts.iter().map(|_| vec![]).collect::<Vec<_>>()));
    for k in 0..dim {
        if coords.len() == hull_dim {
            break;
        }
        let mut trial = coords.clone();
        trial.push(k);
        let proj: Vec<RationalVector> = verts
            .iter()
            .map(|v| trial.iter().map(|&t| v[t].clone()).collect())
            .collect();
        let r = rat::rank(&homogenize(&proj));
        if r > cur {
            cur = r;
            coords = trial;
        }
    }

    let mut facets = Vec::new();
    if hull_dim > 0 {
        let rows: Vec<Vec<BigInt>> = verts
            .iter()
            .map(|v| {
                let mut r = vec![Q::one()];
                r.extend(coords.iter().map(|&t| v[t].clone()));
                to_int_row(&r)
            })
            .collect();
        let rays = dd::extreme_rays(&rows, caps.max_rays).map_err(|e| cap_error(e, caps.max_rays))?;
        for ray in rays {
            // y0 + a.v >= 0  <=>  -a.v <= y0
            let mut coeffs = vec![Q::zero(); dim];
            for (i, &t) in coords.iter().enumerate() {
                coeffs[t] = -Q::from_integer(ray.v[i + 1].clone());
            }
            facets.push(LinearInequality::new(coeffs, Q::from_integer(ray.v[0].clone())));
        }
        facets.sort();
    }
    Ok(RationalPolytope {
        dim_ambient: dim,
        vertices: Some(verts),
        facets: Some(facets),
        equations: eqs,
        affine_hull_dim: Some(hull_dim),
    })
}

/// Deterministic correlators of the n-partite linear functions.
pub fn lhv_vertices(scen: crate::ffun::Scenario, caps: &Caps) -> Result<Vec<RationalVector>> {
    Ok(crate::ffun::enumerate_lhv_vertex_functions(scen, caps)?
        .map(|f| f.correlator())
        .collect())
}

/// The LHV polytope with its facets.
pub fn lhv_polytope(scen: crate::ffun::Scenario, caps: &Caps) -> Result<RationalPolytope> {
    hull_facets(&lhv_vertices(scen, caps)?, caps)
}

/// Vertices of {x : eqs, ineqs}; the set must be bounded.
pub fn vertices_from_constraints(
    dim: usize,
    equations: &[(RationalVector, Q)],
    inequalities: &[LinearInequality],
    caps: &Caps,
) -> Result<RationalPolytope> {
    let (x0, basis) = if equations.is_empty() {
        let basis = (0..dim)
            .map(|i| {
                let mut e = vec![Q::zero(); dim];
                e[i] = Q::one();
                e
            })
            .collect();
        (vec![Q::zero(); dim], basis)
    } else {
        let a: Vec<Vec<Q>> = equations.iter().map(|(a, _)| a.clone()).collect();
        let b: Vec<Q> = equations.iter().map(|(_, b)| b.clone()).collect();
        let Some(x0) = rat::solve(&a, &b) else {
            return Ok(RationalPolytope {
                dim_ambient: dim,
                vertices: Some(Vec::new()),
                facets: Some(inequalities.to_vec()),
                equations: equations.to_vec(),
                affine_hull_dim: None,
            });
        };
        (x0, rat::nullspace(&a, dim))
    };
    let k = basis.len();
    let point = |lam: &Q, t: &[Q]| -> RationalVector {
        (0..dim)
            .map(|i| {
                let mut v = &x0[i] * lam;
                for (j, bj) in basis.iter().enumerate() {
                    v += &bj[i] * &t[j];
                }
                v
            })
            .collect()
    };
    let mut verts: Vec<RationalVector> = Vec::new();
    if k == 0 {
        if inequalities.iter().all(|h| h.satisfied_by(&x0)) {
            verts.push(x0.clone());
        }
    } else {
        // rhs - a.(x0 lam + B t) >= 0, plus lam >= 0
        let mut rows: Vec<Vec<BigInt>> = inequalities
            .iter()
            .map(|h| {
                let mut r = vec![&h.rhs - rat::dot(&h.coeffs, &x0)];
                r.extend(basis.iter().map(|bj| -rat::dot(&h.coeffs, bj)));
                to_int_row(&r)
            })
            .collect();
        let mut lam = vec![BigInt::zero(); k + 1];
        lam[0] = BigInt::one();
        rows.push(lam);
        if rat::rank(&rows.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect::<Vec<_>>()) < k + 1 {
            return Err(Error::InvalidInput("constraint set is unbounded".into()));
        }
        let rays = dd::extreme_rays(&rows, caps.max_rays).map_err(|e| cap_error(e, caps.max_rays))?;
        for ray in rays {
            if ray.v[0].is_zero() {
                return Err(Error::InvalidInput("constraint set is unbounded".into()));
            }
            let l = Q::from_integer(ray.v[0].clone());
            let t: Vec<Q> = ray.v[1..].iter().map(|x| Q::from_integer(x.clone()) / &l).collect();
            verts.push(point(&Q::one(), &t));
        }
    }
    verts.sort();
    verts.dedup();
    let hull = if verts.is_empty() { None } else { Some(affine_rank(&verts)) };
    Ok(RationalPolytope {
        dim_ambient: dim,
        vertices: Some(verts),
        facets: Some(inequalities.to_vec()),
        equations: equations.to_vec(),
        affine_hull_dim: hull,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetCertificate {
    pub is_facet: bool,
    pub valid: bool,
    /// Indices (into the polytope's vertex list) of tight vertices.
    pub tight: Vec<usize>,
    /// Affinely independent subset of the tight vertices.
    pub independent: Vec<usize>,
}

/// Valid and tight on affine_hull_dim affinely independent vertices.
pub fn is_facet_defining(ineq: &LinearInequality, poly: &RationalPolytope) -> Result<FacetCertificate> {
    let verts = poly
        .vertices
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("polytope has no vertex list".into()))?;
    if ineq.coeffs.len() != poly.dim_ambient {
        return Err(Error::DimensionMismatch {
            expected: poly.dim_ambient,
            got: ineq.coeffs.len(),
        });
    }
    let hull = poly.affine_hull_dim.unwrap_or_else(|| affine_rank(verts));
    let slacks: Vec<Q> = verts.iter().map(|v| ineq.slack(v)).collect();
    let valid = slacks.iter().all(|s| !s.is_negative());
    let tight: Vec<usize> = (0..verts.len()).filter(|&i| slacks[i].is_zero()).collect();
    let independent = affinely_independent_subset(verts, &tight);
    // a facet of a hull_dim-dimensional polytope is hit by hull_dim independent
    // vertices and must not be tight everywhere
    let is_facet = valid && independent.len() == hull && tight.len() < verts.len();
    Ok(FacetCertificate {
        is_facet,
        valid,
        tight,
        independent,
    })
}

/// Exact membership. Uses facets and equations when present, otherwise
/// computes them first.
pub fn contains(poly: &RationalPolytope, point: &[Q], caps: &Caps) -> Result<bool> {
    if point.len() != poly.dim_ambient {
        return Err(Error::DimensionMismatch {
            expected: poly.dim_ambient,
            got: point.len(),
        });
    }
    let owned;
    let p = if poly.facets.is_some() {
        poly
    } else {
        let verts = poly
            .vertices
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("polytope has neither representation".into()))?;
        owned = hull_facets(verts, caps)?;
        &owned
    };
    let on_hull = p
        .equations
        .iter()
        .all(|(a, b)| rat::dot(a, point) == *b);
    Ok(on_hull && p.facets.as_ref().unwrap().iter().all(|f| f.satisfied_by(point)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn pts(v: &[&[i64]]) -> Vec<RationalVector> {
        v.iter().map(|p| p.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn unit_square() {
        let sq = pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]);
        let p = hull_facets(&sq, &Caps::default()).unwrap();
        assert_eq!(p.facet_count(), 4);
        let x1 = LinearInequality::from_ints(&[1, 0], 1);
        assert!(is_facet_defining(&x1, &p).unwrap().is_facet);
        let diag = LinearInequality::from_ints(&[1, 1], 2);
        assert!(!is_facet_defining(&diag, &p).unwrap().is_facet);
        assert!(contains(&p, &[crate::rat::qr(1, 2), crate::rat::qr(1, 3)], &Caps::default()).unwrap());
        assert!(!contains(&p, &[q(2), q(0)], &Caps::default()).unwrap());
    }

    #[test]
    fn lower_dimensional_hull() {
        // a triangle living in the plane z = 1 in R^3
        let tri = pts(&[&[0, 0, 1], &[1, 0, 1], &[0, 1, 1]]);
        let p = hull_facets(&tri, &Caps::default()).unwrap();
        assert_eq!(p.affine_hull_dim, Some(2));
        assert_eq!(p.facet_count(), 3);
        assert_eq!(p.equations.len(), 1);
        assert!(!contains(&p, &[q(0), q(0), q(0)], &Caps::default()).unwrap());
    }

    #[test]
    fn affine_rank_examples() {
        assert_eq!(affine_rank(&pts(&[&[1, 2], &[1, 2], &[1, 2]])), 0);
        assert_eq!(affine_rank(&pts(&[&[0, 0], &[1, 1], &[2, 2]])), 1);
    }

    #[test]
    fn h_to_v_square() {
        let ineqs = vec![
            LinearInequality::from_ints(&[1, 0], 1),
            LinearInequality::from_ints(&[0, 1], 1),
            LinearInequality::from_ints(&[-1, 0], 0),
            LinearInequality::from_ints(&[0, -1], 0),
        ];
        let p = vertices_from_constraints(2, &[], &ineqs, &Caps::default()).unwrap();
        assert_eq!(p.vertices.unwrap().len(), 4);
    }
}

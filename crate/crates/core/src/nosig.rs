//! Full output distributions p(m|s), the non-signalling polytope at small
//! scale, uniqueness of the non-signalling box behind a correlator vertex, and
//! the Svetlichny (bipartite-linear) correlator hull.

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::ffun::{self, FiniteFunction, Scenario};
use crate::poly::{self, LinearInequality, RationalPolytope, RationalVector};
use crate::rat::{self, q, Q};

/// p(m|s) stored densely at index s * d^n + m.
#[derive(Debug, Clone, PartialEq)]
pub struct FullDistribution {
    pub scenario: Scenario,
    pub probs: Vec<Q>,
}

fn outputs(scen: Scenario) -> usize {
    scen.d.pow(scen.n as u32)
}

fn check_size(scen: Scenario, caps: &Caps) -> Result<usize> {
    let total = (outputs(scen) as u128) * scen.inputs() as u128;
    if total > caps.max_table as u128 {
        return Err(Error::CapExceeded { what: "distribution entries", reached: total, limit: caps.max_table as u128, progress: String::new() });
    }
    Ok(total as usize)
}

impl FullDistribution {
    pub fn new(scenario: Scenario, probs: Vec<Q>) -> Result<Self> {
        let want = outputs(scenario) * scenario.inputs();
        if probs.len() != want {
            return Err(Error::DimensionMismatch { expected: want, got: probs.len() });
        }
        let out = FullDistribution { scenario, probs };
        if out.probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidInput("negative probability".into()));
        }
        let mo = outputs(scenario);
        for s in 0..scenario.inputs() {
            let tot = out.probs[s * mo..(s + 1) * mo].iter().fold(Q::zero(), |a, b| a + b);
            if !tot.is_one() {
                return Err(Error::InvalidInput(format!("p(.|s={s}) sums to {tot}")));
            }
        }
        Ok(out)
    }

    pub fn get(&self, m: &[usize], s: &[usize]) -> &Q {
        let scen = self.scenario;
        &self.probs[scen.index(s) * outputs(scen) + ffun::index_of(m, scen.d)]
    }

    /// p(k|s) = sum over m with [sum m]_d = k, for k = 1..d-1.
    pub fn correlator(&self) -> RationalVector {
        let scen = self.scenario;
        let (d, mo) = (scen.d, outputs(scen));
        let mut out = vec![Q::zero(); scen.corr_dim()];
        for s in 0..scen.inputs() {
            for m in 0..mo {
                let k = ffun::digits_of(m, scen.n, d).iter().sum::<usize>() % d;
                if k != 0 {
                    out[s * (d - 1) + k - 1] += &self.probs[s * mo + m];
                }
            }
        }
        out
    }

    pub fn is_non_signalling(&self) -> bool {
        ns_equalities(self.scenario).iter().all(|(a, b)| rat::dot(a, &self.probs) == *b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let s = self.scenario;
        json!({
            "scenario": [s.n, s.c, s.d],
            "probs": self.probs.iter().map(rat::to_pair).collect::<Vec<_>>(),
        })
    }
}

/// Normalization and every marginal equality: for each proper non-empty
/// party set J, the marginal on the complement may not depend on s_J.
fn ns_equalities(scen: Scenario) -> Vec<(Vec<Q>, Q)> {
    let Scenario { n, d, .. } = scen;
    let mo = outputs(scen);
    let total = mo * scen.inputs();
    let mut eqs = Vec::new();
    for s in 0..scen.inputs() {
        let mut a = vec![Q::zero(); total];
        for m in 0..mo {
            a[s * mo + m] = Q::one();
        }
        eqs.push((a, Q::one()));
    }
    for jmask in 1..(1usize << n) - 1 {
        let in_j = |j: usize| jmask >> j & 1 == 1;
        for s in 0..scen.inputs() {
            let sd = scen.digits(s);
            // compare s with the input that zeroes s_J
            let base: Vec<usize> = (0..n).map(|j| if in_j(j) { 0 } else { sd[j] }).collect();
            if base == sd {
                continue;
            }
            let s0 = scen.index(&base);
            // one equality per value of m on the complement
            let rest: Vec<usize> = (0..n).filter(|&j| !in_j(j)).collect();
            for mr in 0..d.pow(rest.len() as u32) {
                let mrd = ffun::digits_of(mr, rest.len(), d);
                let mut a = vec![Q::zero(); total];
                for m in 0..mo {
                    let md = ffun::digits_of(m, n, d);
                    if rest.iter().zip(&mrd).all(|(&j, &v)| md[j] == v) {
                        a[s * mo + m] += Q::one();
                        a[s0 * mo + m] -= Q::one();
                    }
                }
                eqs.push((a, Q::zero()));
            }
        }
    }
    eqs
}

#[derive(Debug, Clone)]
pub struct NsSystem {
    pub scenario: Scenario,
    pub variables: usize,
    /// irredundant equalities (row-reduced)
    pub equations: Vec<(Vec<Q>, Q)>,
    pub positivity: Vec<LinearInequality>,
}

impl NsSystem {
    pub fn dimension(&self) -> usize {
        self.variables - self.equations.len()
    }
}

fn reduce(eqs: Vec<(Vec<Q>, Q)>) -> Vec<(Vec<Q>, Q)> {
    let mut m: Vec<Vec<Q>> = eqs
        .into_iter()
        .map(|(mut a, b)| {
            a.push(b);
            a
        })
        .collect();
    let piv = rat::rref(&mut m);
    m.truncate(piv.len());
    m.into_iter()
        .map(|mut r| {
            let b = r.pop().unwrap();
            (r, b)
        })
        .collect()
}

pub fn ns_constraints(scen: Scenario, caps: &Caps) -> Result<NsSystem> {
    let total = check_size(scen, caps)?;
    let equations = reduce(ns_equalities(scen));
    let positivity = (0..total)
        .map(|i| {
            let mut a = vec![Q::zero(); total];
            a[i] = -Q::one();
            LinearInequality::new(a, Q::zero())
        })
        .collect();
    Ok(NsSystem { scenario: scen, variables: total, equations, positivity })
}

/// p(m|s) = d^{1-n} on outputs with [sum m]_d = f(s).
pub fn genbox(f: &FiniteFunction) -> FullDistribution {
    let scen = f.scenario;
    let mo = outputs(scen);
    let w = rat::qr(1, (scen.d as i64).pow(scen.n as u32 - 1));
    let mut probs = vec![Q::zero(); mo * scen.inputs()];
    for s in 0..scen.inputs() {
        for m in 0..mo {
            if ffun::digits_of(m, scen.n, scen.d).iter().sum::<usize>() % scen.d == f.table[s] {
                probs[s * mo + m] = w.clone();
            }
        }
    }
    FullDistribution { scenario: scen, probs }
}

/// For f = f1(s_J) + f2(s_Jc), the box uniform on outputs with
/// [sum_J m]_d = f1 and [sum_Jc m]_d = f2, each with weight d^{2-n}.
pub fn split_box(f: &FiniteFunction, part: &[usize]) -> Result<FullDistribution> {
    let scen = f.scenario;
    let n = scen.n;
    if part.is_empty() || part.len() >= n {
        return Err(Error::InvalidInput("split needs a proper non-empty party set".into()));
    }
    let in_j: Vec<bool> = (0..n).map(|j| part.contains(&j)).collect();
    // f1(s_J) = f(s_J, 0) and f2(s_Jc) = f(0, s_Jc) - f(0)
    let d = scen.d;
    let f0 = f.table[0];
    let f1 = |s: &[usize]| f.eval(&(0..n).map(|j| if in_j[j] { s[j] } else { 0 }).collect::<Vec<_>>());
    let f2 = |s: &[usize]| (f.eval(&(0..n).map(|j| if in_j[j] { 0 } else { s[j] }).collect::<Vec<_>>()) + d - f0) % d;
    for s in 0..scen.inputs() {
        let sd = scen.digits(s);
        if (f1(&sd) + f2(&sd)) % d != f.table[s] {
            return Err(Error::InvalidInput(format!("f does not split across {part:?}")));
        }
    }
    let mo = outputs(scen);
    let w = Q::one() / q((d as i64).pow(n as u32 - 2));
    let mut probs = vec![Q::zero(); mo * scen.inputs()];
    for s in 0..scen.inputs() {
        let sd = scen.digits(s);
        for m in 0..mo {
            let md = ffun::digits_of(m, n, d);
            let a: usize = (0..n).filter(|&j| in_j[j]).map(|j| md[j]).sum::<usize>() % d;
            let b: usize = (0..n).filter(|&j| !in_j[j]).map(|j| md[j]).sum::<usize>() % d;
            if a == f1(&sd) % d && b == f2(&sd) {
                probs[s * mo + m] = w.clone();
            }
        }
    }
    Ok(FullDistribution { scenario: scen, probs })
}

#[derive(Debug, Clone)]
pub struct UniquenessVerdict {
    pub vertex_count: usize,
    pub vertices: Vec<FullDistribution>,
    pub unique: bool,
    /// the single compatible box is the uniform-parity box
    pub equals_genbox: bool,
    /// a second compatible box exhibited for bipartite-linear f
    pub split_witness: Option<(Vec<usize>, FullDistribution)>,
}

/// All non-signalling boxes whose correlator is the vertex of f.
pub fn compatible_ns_polytope(f: &FiniteFunction, caps: &Caps) -> Result<RationalPolytope> {
    let scen = f.scenario;
    let sys = ns_constraints(scen, caps)?;
    let mo = outputs(scen);
    let mut eqs = sys.equations.clone();
    for s in 0..scen.inputs() {
        let mut a = vec![Q::zero(); sys.variables];
        for m in 0..mo {
            if ffun::digits_of(m, scen.n, scen.d).iter().sum::<usize>() % scen.d == f.table[s] {
                a[s * mo + m] = Q::one();
            }
        }
        eqs.push((a, Q::one()));
    }
    let eqs = reduce(eqs);
    poly::vertices_from_constraints(sys.variables, &eqs, &sys.positivity, caps)
}

pub fn unique_ns_box_check(f: &FiniteFunction, caps: &Caps) -> Result<UniquenessVerdict> {
    f.scenario.require_prime_d()?;
    let p = compatible_ns_polytope(f, caps)?;
    let vertices: Vec<FullDistribution> = p
        .vertices
        .unwrap_or_default()
        .into_iter()
        .map(|v| FullDistribution { scenario: f.scenario, probs: v })
        .collect();
    let unique = vertices.len() == 1;
    let equals_genbox = unique && vertices[0] == genbox(f);
    let split_witness = if f.scenario.n >= 2 {
        let cls = ffun::classify(f);
        cls.bipartite_linear_partitions.first().and_then(|part| {
            let b = split_box(f, part).ok()?;
            (b != genbox(f)).then(|| (part.clone(), b))
        })
    } else {
        None
    };
    Ok(UniquenessVerdict { vertex_count: vertices.len(), vertices, unique, equals_genbox, split_witness })
}

/// Vertices of the whole non-signalling polytope.
pub fn ns_vertices(scen: Scenario, caps: &Caps) -> Result<Vec<RationalVector>> {
    let sys = ns_constraints(scen, caps)?;
    Ok(poly::vertices_from_constraints(sys.variables, &sys.equations, &sys.positivity, caps)?
        .vertices
        .unwrap_or_default())
}

/// Correlator polytope of the bipartite-linear functions.
pub fn svetlichny_hull(scen: Scenario, with_facets: bool, caps: &Caps) -> Result<RationalPolytope> {
    if scen.n < 2 {
        return Err(Error::InvalidInput("the Svetlichny hull needs n >= 2".into()));
    }
    let verts: Vec<RationalVector> = ffun::enumerate_bipartite_linear_functions(scen, caps)?
        .iter()
        .map(|f| f.correlator())
        .collect();
    if with_facets {
        poly::hull_facets(&verts, caps)
    } else {
        RationalPolytope::from_vertices(verts)
    }
}

/// max of a linear functional over a vertex list.
pub fn max_over(coeffs: &[Q], verts: &[RationalVector]) -> Option<Q> {
    verts.iter().map(|v| rat::dot(coeffs, v)).max()
}

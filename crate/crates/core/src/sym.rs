//! Symmetries of the LHV polytope: party permutations, cyclic input shifts and
//! input-dependent output shifts, acting on inequalities stored on the full
//! (k, s) coefficient grid.
//!
//! A grid cell (k, s) has index `s * d + k`. An op sends (k, s) to
//! (k + sum_j b_j(s_j), sigma.s + a) with (sigma.s)_j = s_{sigma(j)}, and an
//! inequality is pushed forward by beta'(T(k,s)) = beta(k,s).

use std::collections::{HashMap, HashSet};

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::ffun::Scenario;
use crate::ineq::BellInequality;
use crate::poly::LinearInequality;
use crate::rat::{self, q, Q};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymmetryOp {
    pub scenario: Scenario,
    pub party_perm: Vec<usize>,
    pub input_shift: Vec<usize>,
    /// output_shift[j][v] = b(v, j)
    pub output_shift: Vec<Vec<usize>>,
}

impl SymmetryOp {
    pub fn identity(scenario: Scenario) -> Self {
        let Scenario { n, c, .. } = scenario;
        SymmetryOp {
            scenario,
            party_perm: (0..n).collect(),
            input_shift: vec![0; n],
            output_shift: vec![vec![0; c]; n],
        }
    }

    pub fn new(
        scenario: Scenario,
        party_perm: Vec<usize>,
        input_shift: Vec<usize>,
        output_shift: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let Scenario { n, c, d } = scenario;
        let mut seen = vec![false; n];
        let perm_ok = party_perm.len() == n
            && party_perm.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true));
        if !perm_ok {
            return Err(Error::InvalidInput(format!("not a permutation of {n} parties: {party_perm:?}")));
        }
        if input_shift.len() != n || input_shift.iter().any(|&a| a >= c) {
            return Err(Error::InvalidInput("input shift out of range".into()));
        }
        if output_shift.len() != n || output_shift.iter().any(|b| b.len() != c || b.iter().any(|&x| x >= d)) {
            return Err(Error::InvalidInput("output shift out of range".into()));
        }
        Ok(SymmetryOp { scenario, party_perm, input_shift, output_shift })
    }

    pub fn random<R: Rng>(scenario: Scenario, rng: &mut R) -> Self {
        let Scenario { n, c, d } = scenario;
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        SymmetryOp {
            scenario,
            party_perm: perm,
            input_shift: (0..n).map(|_| rng.gen_range(0..c)).collect(),
            output_shift: (0..n).map(|_| (0..c).map(|_| rng.gen_range(0..d)).collect()).collect(),
        }
    }

    /// Image of the grid cell (k, s).
    pub fn map_cell(&self, k: usize, s: &[usize]) -> (usize, Vec<usize>) {
        let Scenario { n, c, d } = self.scenario;
        let shift: usize = (0..n).map(|j| self.output_shift[j][s[j]]).sum();
        let t: Vec<usize> = (0..n).map(|j| (s[self.party_perm[j]] + self.input_shift[j]) % c).collect();
        ((k + shift) % d, t)
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &SymmetryOp) -> SymmetryOp {
        let Scenario { n, c, d } = self.scenario;
        let s1 = &self.party_perm;
        let mut inv1 = vec![0; n];
        for (j, &p) in s1.iter().enumerate() {
            inv1[p] = j;
        }
        let party_perm = (0..n).map(|j| s1[other.party_perm[j]]).collect();
        let input_shift = (0..n)
            .map(|j| (self.input_shift[other.party_perm[j]] + other.input_shift[j]) % c)
            .collect();
        let output_shift = (0..n)
            .map(|l| {
                let j = inv1[l];
                (0..c)
                    .map(|v| (self.output_shift[l][v] + other.output_shift[j][(v + self.input_shift[j]) % c]) % d)
                    .collect()
            })
            .collect();
        SymmetryOp { scenario: self.scenario, party_perm, input_shift, output_shift }
    }

    pub fn inverse(&self) -> SymmetryOp {
        let Scenario { n, c, d } = self.scenario;
        let mut inv = vec![0; n];
        for (j, &p) in self.party_perm.iter().enumerate() {
            inv[p] = j;
        }
        let input_shift = (0..n).map(|j| (c - self.input_shift[inv[j]]) % c).collect();
        let output_shift = (0..n)
            .map(|j| {
                let l = self.party_perm[j];
                (0..c)
                    .map(|w| (d - self.output_shift[l][(w + c - self.input_shift[j]) % c]) % d)
                    .collect()
            })
            .collect();
        SymmetryOp { scenario: self.scenario, party_perm: inv, input_shift, output_shift }
    }

    /// Cell permutation on grid indices.
    fn cell_map(&self) -> Vec<usize> {
        let Scenario { c, d, .. } = self.scenario;
        let m = self.scenario.inputs();
        let n = self.scenario.n;
        let mut out = vec![0; m * d];
        for si in 0..m {
            let s = crate::ffun::digits_of(si, n, c);
            for k in 0..d {
                let (k2, t) = self.map_cell(k, &s);
                out[si * d + k] = crate::ffun::index_of(&t, c) * d + k2;
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "party_perm": self.party_perm,
            "input_shift": self.input_shift,
            "output_shift": self.output_shift,
        })
    }
}

/// Adjacent transpositions, unit input shifts per party and unit single-point
/// output shifts.
pub fn generators(scenario: Scenario) -> Vec<SymmetryOp> {
    let Scenario { n, c, d } = scenario;
    let id = SymmetryOp::identity(scenario);
    let mut gens = Vec::new();
    for j in 0..n.saturating_sub(1) {
        let mut g = id.clone();
        g.party_perm.swap(j, j + 1);
        gens.push(g);
    }
    if c > 1 {
        for j in 0..n {
            let mut g = id.clone();
            g.input_shift[j] = 1;
            gens.push(g);
        }
    }
    if d > 1 {
        for j in 0..n {
            for v in 0..c {
                let mut g = id.clone();
                g.output_shift[j][v] = 1;
                gens.push(g);
            }
        }
    }
    gens
}

/// Normalized full-grid integer encoding of an inequality: the k=0 entry of
/// every input row is zero and all entries (with the bound) are coprime.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridForm {
    pub coeffs: Vec<i64>,
    pub rhs: i64,
}

impl GridForm {
    fn normalize(mut self, d: usize) -> Self {
        for row in self.coeffs.chunks_mut(d) {
            let z = row[0];
            if z != 0 {
                for x in row.iter_mut() {
                    *x -= z;
                }
                self.rhs -= z;
            }
        }
        let g = self.coeffs.iter().fold(self.rhs.abs(), |g, x| g.gcd(x));
        if g > 1 {
            for x in self.coeffs.iter_mut() {
                *x /= g;
            }
            self.rhs /= g;
        }
        self
    }

    fn permuted(&self, cells: &[usize], d: usize) -> Self {
        let mut out = vec![0; self.coeffs.len()];
        for (i, &t) in cells.iter().enumerate() {
            out[t] = self.coeffs[i];
        }
        GridForm { coeffs: out, rhs: self.rhs }.normalize(d)
    }

    /// Reduced (k != 0) coefficients.
    pub fn reduced(&self, d: usize) -> Vec<Q> {
        self.coeffs
            .chunks(d)
            .flat_map(|row| row[1..].iter().map(|&x| q(x)))
            .collect()
    }
}

pub fn grid_form(scenario: Scenario, coeffs: &[Q], rhs: &Q) -> Result<GridForm> {
    if coeffs.len() != scenario.corr_dim() {
        return Err(Error::DimensionMismatch { expected: scenario.corr_dim(), got: coeffs.len() });
    }
    let mut all = coeffs.to_vec();
    all.push(rhs.clone());
    let ints = if all.iter().all(|x| x.is_zero()) {
        vec![num_bigint::BigInt::zero(); all.len()]
    } else {
        rat::primitive(&all)
    };
    let as_i64 = |x: &num_bigint::BigInt| {
        x.to_i64().ok_or_else(|| Error::Unsupported("coefficient exceeds 64 bits".into()))
    };
    let d = scenario.d;
    let mut grid = Vec::with_capacity(scenario.inputs() * d);
    for s in 0..scenario.inputs() {
        grid.push(0);
        for k in 1..d {
            grid.push(as_i64(&ints[s * (d - 1) + k - 1])?);
        }
    }
    let rhs = as_i64(ints.last().unwrap())?;
    Ok(GridForm { coeffs: grid, rhs }.normalize(d))
}

fn check_scenario(op: &SymmetryOp, s: Scenario) -> Result<()> {
    if op.scenario != s {
        return Err(Error::ScenarioMismatch { expected: op.scenario.to_string(), got: s.to_string() });
    }
    Ok(())
}

pub fn apply_linear(op: &SymmetryOp, scenario: Scenario, ineq: &LinearInequality) -> Result<LinearInequality> {
    check_scenario(op, scenario)?;
    let g = grid_form(scenario, &ineq.coeffs, &ineq.rhs)?.permuted(&op.cell_map(), scenario.d);
    Ok(LinearInequality::new(g.reduced(scenario.d), q(g.rhs)))
}

pub fn apply(op: &SymmetryOp, ineq: &BellInequality, caps: &Caps) -> Result<BellInequality> {
    check_scenario(op, ineq.scenario)?;
    let scen = ineq.scenario;
    let g = grid_form(scen, &ineq.coeffs, &ineq.lhv_bound)?.permuted(&op.cell_map(), scen.d);
    let mut out = BellInequality::new(scen, g.reduced(scen.d), caps)?;
    out.tags = ineq.tags.iter().filter(|t| !t.starts_with("stated_bound=")).cloned().collect();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Orbit {
    pub representative: BellInequality,
    /// Number of input inequalities in this orbit.
    pub size: usize,
    /// Size of the full orbit reached by the generator walk.
    pub full_size: usize,
    /// Indices of input members.
    pub members: Option<Vec<usize>>,
}

impl Orbit {
    pub fn is_trivial(&self) -> bool {
        self.representative.tags.contains("trivial")
    }
}

struct Walker {
    cell_maps: Vec<Vec<usize>>,
    d: usize,
    limit: usize,
}

impl Walker {
    fn new(scenario: Scenario, caps: &Caps) -> Self {
        Walker {
            cell_maps: generators(scenario).iter().map(|g| g.cell_map()).collect(),
            d: scenario.d,
            limit: caps.max_orbit,
        }
    }

    fn orbit(&self, start: GridForm) -> Result<HashSet<GridForm>> {
        let mut seen: HashSet<GridForm> = HashSet::new();
        seen.insert(start.clone());
        let mut frontier = vec![start];
        while !frontier.is_empty() {
            let images: Vec<GridForm> = frontier
                .par_iter()
                .flat_map_iter(|g| self.cell_maps.iter().map(move |m| g.permuted(m, self.d)))
                .collect();
            frontier = images.into_iter().filter(|g| seen.insert(g.clone())).collect();
            if seen.len() > self.limit {
                return Err(Error::CapExceeded {
                    what: "orbit size",
                    reached: seen.len() as u128,
                    limit: self.limit as u128,
                    progress: format!("frontier {}", frontier.len()),
                });
            }
        }
        Ok(seen)
    }
}

/// Lexicographic minimum of the orbit under the full-grid encoding.
pub fn canonical_grid(scenario: Scenario, g: GridForm, caps: &Caps) -> Result<GridForm> {
    Ok(Walker::new(scenario, caps).orbit(g)?.into_iter().min().unwrap())
}

pub fn canonical_form(ineq: &BellInequality, caps: &Caps) -> Result<BellInequality> {
    let scen = ineq.scenario;
    let g = canonical_grid(scen, grid_form(scen, &ineq.coeffs, &ineq.lhv_bound)?, caps)?;
    BellInequality::new(scen, g.reduced(scen.d), caps)
}

fn is_trivial_grid(g: &GridForm) -> bool {
    // a single non-zero coefficient: positivity or normalization
    g.coeffs.iter().filter(|&&x| x != 0).count() == 1
}

fn orbits_of_grids(scenario: Scenario, grids: Vec<GridForm>, caps: &Caps) -> Result<Vec<Orbit>> {
    let walker = Walker::new(scenario, caps);
    let mut owner: HashMap<GridForm, usize> = HashMap::new();
    let mut reps: Vec<(GridForm, usize)> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, g) in grids.into_iter().enumerate() {
        let id = match owner.get(&g) {
            Some(&id) => id,
            None => {
                let orbit = walker.orbit(g)?;
                let id = reps.len();
                let rep = orbit.iter().min().unwrap().clone();
                reps.push((rep, orbit.len()));
                members.push(Vec::new());
                for h in orbit {
                    owner.insert(h, id);
                }
                id
            }
        };
        members[id].push(i);
    }
    let mut out: Vec<Orbit> = reps
        .into_iter()
        .zip(members)
        .map(|((rep, full), m)| {
            let mut r = BellInequality::new(scenario, rep.reduced(scenario.d), caps)?;
            if is_trivial_grid(&rep) {
                r.tags.insert("trivial".into());
            }
            Ok(Orbit { representative: r, size: m.len(), full_size: full, members: Some(m) })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| {
        let ka = grid_form(scenario, &a.representative.coeffs, &a.representative.lhv_bound).ok();
        let kb = grid_form(scenario, &b.representative.coeffs, &b.representative.lhv_bound).ok();
        ka.cmp(&kb)
    });
    Ok(out)
}

pub fn orbits(ineqs: &[BellInequality], scenario: Scenario, caps: &Caps) -> Result<Vec<Orbit>> {
    let grids = ineqs
        .iter()
        .map(|i| {
            if i.scenario != scenario {
                return Err(Error::ScenarioMismatch { expected: scenario.to_string(), got: i.scenario.to_string() });
            }
            grid_form(scenario, &i.coeffs, &i.lhv_bound)
        })
        .collect::<Result<Vec<_>>>()?;
    orbits_of_grids(scenario, grids, caps)
}

/// Orbits of raw facet inequalities, skipping the per-input bound recomputation.
pub fn orbits_linear(ineqs: &[LinearInequality], scenario: Scenario, caps: &Caps) -> Result<Vec<Orbit>> {
    let grids = ineqs
        .iter()
        .map(|i| grid_form(scenario, &i.coeffs, &i.rhs))
        .collect::<Result<Vec<_>>>()?;
    orbits_of_grids(scenario, grids, caps)
}

pub fn orbit_report(scenario: Scenario, orbits: &[Orbit]) -> serde_json::Value {
    json!({
        "scenario": [scenario.n, scenario.c, scenario.d],
        "orbit_count": orbits.len(),
        "orbits": orbits.iter().map(|o| json!({
            "size": o.size,
            "full_size": o.full_size,
            "trivial": o.is_trivial(),
            "representative": o.representative.to_json(),
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ineq::{catalog, CatalogId};
    use crate::rat::qr;
    use rand::SeedableRng;

    fn caps() -> Caps {
        Caps::default()
    }

    fn acts_same(a: &SymmetryOp, b: &SymmetryOp) -> bool {
        a.cell_map() == b.cell_map()
    }

    #[test]
    fn group_axioms_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for scen in [Scenario::new(2, 2, 2).unwrap(), Scenario::new(3, 3, 2).unwrap(), Scenario::new(3, 2, 3).unwrap()] {
            let id = SymmetryOp::identity(scen);
            for _ in 0..30 {
                let x = SymmetryOp::random(scen, &mut rng);
                let y = SymmetryOp::random(scen, &mut rng);
                let z = SymmetryOp::random(scen, &mut rng);
                // composition acts as sequential application
                let xy = x.then(&y);
                let (mx, my, mxy) = (x.cell_map(), y.cell_map(), xy.cell_map());
                assert!((0..mx.len()).all(|i| my[mx[i]] == mxy[i]));
                assert_eq!(x.then(&y).then(&z), x.then(&y.then(&z)));
                assert!(acts_same(&x.then(&x.inverse()), &id));
                assert!(acts_same(&x.inverse().then(&x), &id));
                assert_eq!(x.then(&id), x);
            }
        }
    }

    #[test]
    fn identity_on_chsh() {
        let chsh = catalog(CatalogId::Chsh, &caps()).unwrap();
        let out = apply(&SymmetryOp::identity(chsh.scenario), &chsh, &caps()).unwrap();
        assert_eq!(out.coeffs, chsh.coeffs);
        assert_eq!(out.lhv_bound, chsh.lhv_bound);
    }

    #[test]
    fn mermin_output_flip() {
        let m = catalog(CatalogId::Mermin(3), &caps()).unwrap();
        let mut op = SymmetryOp::identity(m.scenario);
        op.output_shift = vec![vec![1, 1]; 3];
        let out = apply(&op, &m, &caps()).unwrap();
        let mut want = vec![q(0); 8];
        want[0] = q(-1);
        want[3] = q(-1);
        want[5] = q(-1);
        want[6] = q(1);
        assert_eq!(out.coeffs, want);
        assert_eq!(out.lhv_bound, q(0));
    }

    #[test]
    fn chsh_orbit_single_canonical() {
        let chsh = catalog(CatalogId::Chsh, &caps()).unwrap();
        let g = grid_form(chsh.scenario, &chsh.coeffs, &chsh.lhv_bound).unwrap();
        let orbit = Walker::new(chsh.scenario, &caps()).orbit(g).unwrap();
        assert_eq!(orbit.len(), 8);
        let canon: HashSet<Vec<Q>> = orbit
            .iter()
            .map(|h| {
                let b = BellInequality::new(chsh.scenario, h.reduced(2), &caps()).unwrap();
                canonical_form(&b, &caps()).unwrap().coeffs
            })
            .collect();
        assert_eq!(canon.len(), 1);
        let c1 = canonical_form(&chsh, &caps()).unwrap();
        assert_eq!(canonical_form(&c1, &caps()).unwrap(), c1);
    }

    #[test]
    fn positivity_and_normalization_share_orbit() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let pos = BellInequality::new(s, vec![q(-1), q(0), q(0), q(0)], &caps()).unwrap();
        let norm = BellInequality::new(s, vec![q(0), q(0), q(0), q(1)], &caps()).unwrap();
        assert_eq!(pos.lhv_bound, q(0));
        assert_eq!(norm.lhv_bound, q(1));
        assert_eq!(canonical_form(&pos, &caps()).unwrap(), canonical_form(&norm, &caps()).unwrap());
    }

    #[test]
    fn scaling_does_not_change_encoding() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let a = grid_form(s, &[qr(1, 4), qr(1, 4), qr(1, 4), qr(-1, 4)], &qr(1, 2)).unwrap();
        let b = grid_form(s, &[q(1), q(1), q(1), q(-1)], &q(2)).unwrap();
        assert_eq!(a, b);
    }
}

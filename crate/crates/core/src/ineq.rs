//! Bell inequalities sum_{k!=0,s} beta_{k,s} p(k|s) <= gamma, a catalog of the
//! standard families, and non-trivial inequalities built from non-local games.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::ffun::{self, FiniteFunction, Scenario};
use crate::rat::{self, q, qr, Q};

#[derive(Debug, Clone, PartialEq)]
pub struct BellInequality {
    pub scenario: Scenario,
    /// beta_{k,s} for k=1..d-1, ordered by s then k.
    pub coeffs: Vec<Q>,
    /// max over n-partite linear vertices, always recomputed.
    pub lhv_bound: Q,
    /// max over all deterministic correlators.
    pub algebraic_bound: Q,
    pub tags: BTreeSet<String>,
}

impl BellInequality {
    pub fn new(scenario: Scenario, coeffs: Vec<Q>, caps: &Caps) -> Result<Self> {
        if coeffs.len() != scenario.corr_dim() {
            return Err(Error::DimensionMismatch {
                expected: scenario.corr_dim(),
                got: coeffs.len(),
            });
        }
        let mut out = BellInequality {
            scenario,
            coeffs,
            lhv_bound: Q::zero(),
            algebraic_bound: Q::zero(),
            tags: BTreeSet::new(),
        };
        out.lhv_bound = out.max_over_linear(caps)?;
        out.algebraic_bound = out.max_over_all();
        Ok(out)
    }

    pub fn from_ints(scenario: Scenario, coeffs: &[i64], caps: &Caps) -> Result<Self> {
        Self::new(scenario, coeffs.iter().map(|&x| q(x)).collect(), caps)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.insert(tag.into());
        self
    }

    pub fn coeff(&self, k: usize, s: usize) -> Q {
        if k == 0 {
            Q::zero()
        } else {
            self.coeffs[s * (self.scenario.d - 1) + k - 1].clone()
        }
    }

    /// Value on the deterministic correlator of f.
    pub fn value_of_function(&self, f: &FiniteFunction) -> Q {
        f.table
            .iter()
            .enumerate()
            .fold(Q::zero(), |acc, (s, &k)| acc + self.coeff(k, s))
    }

    pub fn evaluate(&self, p: &[Q]) -> Q {
        rat::dot(&self.coeffs, p)
    }

    pub fn evaluate_f64(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(b, x)| rat::to_f64(b) * x).sum()
    }

    fn max_over_linear(&self, caps: &Caps) -> Result<Q> {
        let mut best: Option<Q> = None;
        for f in ffun::enumerate_lhv_vertex_functions(self.scenario, caps)? {
            let v = self.value_of_function(&f);
            if best.as_ref().is_none_or(|b| v > *b) {
                best = Some(v);
            }
        }
        Ok(best.unwrap())
    }

    fn max_over_all(&self) -> Q {
        let dm = self.scenario.d - 1;
        (0..self.scenario.inputs())
            .map(|s| {
                self.coeffs[s * dm..(s + 1) * dm]
                    .iter()
                    .fold(Q::zero(), |m, x| if *x > m { x.clone() } else { m })
            })
            .fold(Q::zero(), |a, b| a + b)
    }

    pub fn is_nontrivial(&self) -> bool {
        self.lhv_bound < self.algebraic_bound
    }

    /// The inequality as a half-space over correlator vectors.
    pub fn as_linear(&self) -> crate::poly::LinearInequality {
        crate::poly::LinearInequality::new(self.coeffs.clone(), self.lhv_bound.clone())
    }

    /// Coefficient on p(1|s) for (n,2,2) inequalities.
    pub fn binary_coeffs(&self) -> Result<Vec<f64>> {
        let s = self.scenario;
        if s.c != 2 || s.d != 2 {
            return Err(Error::ScenarioMismatch {
                expected: "(n,2,2)".into(),
                got: s.to_string(),
            });
        }
        Ok(self.coeffs.iter().map(rat::to_f64).collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let s = self.scenario;
        json!({
            "scenario": [s.n, s.c, s.d],
            "coeffs": self.coeffs.iter().map(rat::to_pair).collect::<Vec<_>>(),
            "lhv_bound": rat::to_pair(&self.lhv_bound),
            "algebraic_bound": rat::to_pair(&self.algebraic_bound),
            "tags": self.tags,
        })
    }

    /// `coefficient vector ; bound` in the style of the facet tables.
    pub fn to_csv_row(&self) -> String {
        let c: Vec<String> = self.coeffs.iter().map(|x| x.to_string()).collect();
        format!("\"{}\",{}", c.join(","), self.lhv_bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub target: FiniteFunction,
    pub input_dist: Vec<Q>,
}

impl GameSpec {
    pub fn new(target: FiniteFunction, input_dist: Vec<Q>) -> Result<Self> {
        if input_dist.len() != target.scenario.inputs() {
            return Err(Error::DimensionMismatch {
                expected: target.scenario.inputs(),
                got: input_dist.len(),
            });
        }
        if input_dist.iter().any(|x| x.is_negative()) {
            return Err(Error::InvalidInput("negative input probability".into()));
        }
        let total = input_dist.iter().fold(Q::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(Error::InvalidInput(format!("input distribution sums to {total}")));
        }
        Ok(GameSpec { target, input_dist })
    }

    pub fn uniform(target: FiniteFunction) -> Self {
        let m = target.scenario.inputs() as i64;
        let input_dist = vec![qr(1, m); m as usize];
        GameSpec { target, input_dist }
    }

    pub fn scenario(&self) -> Scenario {
        self.target.scenario
    }
}

/// sum_s pi(s) sum_{k!=0} (delta^k_f - delta^0_f) p(k|s) <= max_g sum pi [f=g] - sum pi [f=0].
pub fn nontrivial_from_function(game: &GameSpec, caps: &Caps) -> Result<BellInequality> {
    let scen = game.scenario();
    let f = &game.target;
    let positive = game.input_dist.iter().all(|x| x.is_positive());
    if positive && ffun::is_npartite_linear(f) {
        return Err(Error::InvalidInput(
            "target is n-partite linear: no non-trivial inequality exists for it".into(),
        ));
    }
    let dm = scen.d - 1;
    let mut coeffs = vec![Q::zero(); scen.corr_dim()];
    for (s, &fs) in f.table.iter().enumerate() {
        let w = &game.input_dist[s];
        for k in 1..scen.d {
            let mut c = Q::zero();
            if fs == k {
                c += w;
            }
            if fs == 0 {
                c -= w;
            }
            coeffs[s * dm + k - 1] = c;
        }
    }
    let mut out = BellInequality::new(scen, coeffs, caps)?.with_tag("nontrivial-game");
    if !positive {
        out.tags.insert("validity-only".into());
    }
    Ok(out)
}

/// Average success sum_s pi(s) p(f(s)|s) with p(0|s) = 1 - sum_{k!=0} p(k|s).
pub fn nlg_success(game: &GameSpec, correlators: &[f64]) -> Result<f64> {
    let scen = game.scenario();
    if correlators.len() != scen.corr_dim() {
        return Err(Error::DimensionMismatch {
            expected: scen.corr_dim(),
            got: correlators.len(),
        });
    }
    let dm = scen.d - 1;
    Ok(game
        .target
        .table
        .iter()
        .enumerate()
        .map(|(s, &fs)| {
            let row = &correlators[s * dm..(s + 1) * dm];
            let p = if fs == 0 { 1.0 - row.iter().sum::<f64>() } else { row[fs - 1] };
            rat::to_f64(&game.input_dist[s]) * p
        })
        .sum())
}

pub fn nlg_success_exact(game: &GameSpec, correlators: &[Q]) -> Result<Q> {
    let scen = game.scenario();
    if correlators.len() != scen.corr_dim() {
        return Err(Error::DimensionMismatch {
            expected: scen.corr_dim(),
            got: correlators.len(),
        });
    }
    let dm = scen.d - 1;
    Ok(game.target.table.iter().enumerate().fold(Q::zero(), |acc, (s, &fs)| {
        let row = &correlators[s * dm..(s + 1) * dm];
        let p = if fs == 0 {
            Q::one() - row.iter().fold(Q::zero(), |a, b| a + b)
        } else {
            row[fs - 1].clone()
        };
        acc + &game.input_dist[s] * p
    }))
}

pub fn classical_bound(game: &GameSpec, caps: &Caps) -> Result<Q> {
    Ok(ffun::max_overlap(&game.target, Some(&game.input_dist), caps)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogId {
    Chsh,
    Cglmp(usize),
    Mermin(usize),
    MerminKlyshko(usize),
    Svetlichny3,
    GenNew(usize),
    Named(&'static str),
}

/// Named facet inequalities beyond the parametric families.
pub const NAMED_IDS: [&str; 20] = [
    "C1_d4", "C2_d4", "I1_d5", "I2_d5", "I3_d5", "C_c3", "B1", "B2", "B3", "B4", "B5", "B6",
    "B7", "B8", "B9", "B10", "B11", "C1_c4", "C2_c4", "C3_c4",
];

/// Named entries: (scenario, coefficient numerators, common denominator, stated bound).
fn named_data(id: &str) -> Option<(Scenario, Vec<i64>, i64, Q)> {
    let s224 = Scenario { n: 2, c: 2, d: 4 };
    let s225 = Scenario { n: 2, c: 2, d: 5 };
    let s232 = Scenario { n: 2, c: 3, d: 2 };
    let s242 = Scenario { n: 2, c: 4, d: 2 };
    let v = |x: &[i64]| x.to_vec();
    Some(match id {
        "C1_d4" => (
            s224,
            // sum_s (-1)^{s1 s2} [p(1|s) + p(3|s)]
            v(&[1, 0, 1, 1, 0, 1, 1, 0, 1, -1, 0, -1]),
            1,
            q(2),
        ),
        "C2_d4" => (s224, v(&[1, 2, 1, 1, 2, 1, 1, 2, 1, -1, -2, -1]), 1, q(4)),
        "I1_d5" => (
            s225,
            v(&[6, 2, 3, 4, 4, -2, 2, 1, 4, -2, 2, 1, -4, 2, -2, -1]),
            2,
            q(5),
        ),
        "I2_d5" => (
            s225,
            v(&[3, 1, -1, -3, 2, -1, -4, -2, 2, -1, -4, -2, -2, 1, 4, 2]),
            1,
            q(5),
        ),
        "I3_d5" => (
            s225,
            v(&[2, -1, 1, -2, 3, 1, -1, 2, 3, 1, -1, 2, -3, -1, 1, -2]),
            1,
            q(5),
        ),
        "C_c3" => {
            // sum_s (-1)^{s1 s2} prod_j (delta_0 + delta_1)(s_j) p(1|s)
            let c: Vec<i64> = (0..9)
                .map(|i| {
                    let (a, b) = (i / 3, i % 3);
                    if a > 1 || b > 1 {
                        0
                    } else if a * b == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            (s232, c, 1, q(2))
        }
        "B1" => (s242, v(&[2, 2, 1, 1, 2, -1, -1, -2, 1, -1, -2, 2, 1, -2, 2, 1]), 1, q(8)),
        "B2" => (s242, v(&[2, 2, 1, 1, 2, -1, -1, -2, 1, -2, 2, 1, 1, -1, -2, 2]), 1, q(8)),
        "B3" => (s242, v(&[2, 2, 1, 1, 2, -1, -2, -1, 1, -2, 1, 2, 1, -1, 2, -2]), 1, q(8)),
        "B4" => (s242, v(&[2, 2, 1, 1, 1, -1, 2, -2, 1, -2, 1, 2, 2, -1, -2, -1]), 1, q(8)),
        "B5" => (s242, v(&[2, 2, 1, 1, 1, -2, 2, 1, 1, -1, -2, 2, 2, -1, -1, -2]), 1, q(8)),
        "B6" => (s242, v(&[2, 1, 1, 0, 1, -1, -1, 1, 1, -1, -1, -1, 0, 1, -1, 0]), 1, q(4)),
        "B7" => (s242, v(&[2, 1, 1, 0, 1, -1, -1, 1, 0, 1, -1, 0, 1, -1, -1, -1]), 1, q(4)),
        "B8" => (s242, v(&[2, 1, 1, 0, 0, 1, -1, 0, 1, -1, -1, 1, 1, -1, -1, -1]), 1, q(4)),
        "B9" => (s242, v(&[2, 1, 0, 1, 1, -1, 1, -1, 0, 1, 0, -1, 1, -1, -1, -1]), 1, q(4)),
        "B10" => (s242, v(&[2, 1, 0, 1, 0, 1, 0, -1, 1, -1, 1, -1, 1, -1, -1, -1]), 1, q(4)),
        "B11" => (s242, v(&[2, 0, 1, 1, 0, 0, 1, -1, 1, 1, -1, -1, 1, -1, -1, -1]), 1, q(4)),
        "C1_c4" => (s242, v(&[1, 1, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]), 1, q(2)),
        "C2_c4" => (s242, v(&[1, 1, 0, 0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0]), 1, q(2)),
        "C3_c4" => (s242, v(&[1, 0, 1, 0, 0, 0, 0, 0, 1, 0, -1, 0, 0, 0, 0, 0]), 1, q(2)),
        _ => return None,
    })
}

/// Weight (d-k) on p(k|s) for k >= 2; this is the form with LHV bound d and
/// algebraic maximum 2d-1.
fn cglmp_coeffs(d: usize) -> Vec<Q> {
    let dm = d - 1;
    let mut c = vec![Q::zero(); 4 * dm];
    for s in 0..4 {
        let sign: i64 = if (s / 2 + s % 2) % 2 == 0 { 1 } else { -1 };
        c[s * dm] -= q(sign);
        for k in 2..d {
            c[s * dm + k - 1] += q(sign * (d as i64 - k as i64));
        }
    }
    c[0] += q(d as i64);
    c
}

/// p(1|s) coefficients from an expectation-form expression sum_s w_s E(s) <= b,
/// using E(s) = 1 - 2 p(1|s).
fn from_expectation(scen: Scenario, w: &[Q], caps: &Caps) -> Result<BellInequality> {
    let coeffs: Vec<Q> = w.iter().map(|x| -(x * q(2))).collect();
    BellInequality::new(scen, coeffs, caps)
}

fn mk_function(s: &[usize]) -> usize {
    let n = s.len();
    let mut v = 0;
    for j in 0..n.saturating_sub(1) {
        let tail: usize = s[j + 1..].iter().sum();
        v += s[j] * tail;
    }
    v % 2
}

pub fn catalog(id: CatalogId, caps: &Caps) -> Result<BellInequality> {
    match id {
        CatalogId::Chsh => Ok(BellInequality::from_ints(Scenario::new(2, 2, 2)?, &[1, 1, 1, -1], caps)?
            .with_tag("chsh")
            .with_tag("facet")
            .with_tag("stated_bound=2")),
        CatalogId::Cglmp(d) => {
            if !(2..=5).contains(&d) {
                return Err(Error::Unsupported(format!("cglmp d={d}; supported 2..=5")));
            }
            let scen = Scenario::new(2, 2, d)?;
            Ok(BellInequality::new(scen, cglmp_coeffs(d), caps)?
                .with_tag(format!("cglmp{d}"))
                .with_tag("facet")
                .with_tag(format!("stated_bound={d}")))
        }
        CatalogId::Mermin(n) => {
            if n != 3 {
                return Err(Error::Unsupported(format!(
                    "mermin is catalogued for n=3; use mermin_klyshko for n={n}"
                )));
            }
            let mut c = vec![0i64; 8];
            c[0] = 1;
            c[3] = 1;
            c[5] = 1;
            c[6] = -1;
            Ok(BellInequality::from_ints(Scenario::new(3, 2, 2)?, &c, caps)?
                .with_tag("mermin")
                .with_tag("facet")
                .with_tag("stated_bound=2"))
        }
        CatalogId::MerminKlyshko(n) => {
            if !(2..=10).contains(&n) {
                return Err(Error::Unsupported(format!("mermin_klyshko n={n}; supported 2..=10")));
            }
            let scen = Scenario::new(n, 2, 2)?;
            let w: Vec<Q> = (0..scen.inputs())
                .map(|i| {
                    let s = scen.digits(i);
                    let sign = if mk_function(&s) == 1 { q(-1) } else { q(1) };
                    if n % 2 == 0 {
                        sign / q(1i64 << (n / 2 - 1))
                    } else {
                        let parity = s[..n - 1].iter().sum::<usize>() % 2;
                        if s[n - 1] != parity {
                            Q::zero()
                        } else {
                            sign * q(2) / q(1i64 << ((n - 1) / 2))
                        }
                    }
                })
                .collect();
            // expectation form: sum w E <= 2, i.e. sum (-2w) p <= 2 - sum w
            let shift = w.iter().fold(Q::zero(), |a, b| a + b);
            Ok(from_expectation(scen, &w, caps)?
                .with_tag(format!("mermin_klyshko{n}"))
                .with_tag(format!("stated_bound={}", q(2) - shift)))
        }
        CatalogId::Svetlichny3 => Ok(BellInequality::from_ints(
            Scenario::new(3, 2, 2)?,
            &[1, 1, 1, -1, 1, -1, -1, -1],
            caps,
        )?
        .with_tag("svetlichny3")
        .with_tag("stated_bound=2")),
        CatalogId::GenNew(n) => {
            if !(2..=12).contains(&n) {
                return Err(Error::Unsupported(format!("gen_new n={n}")));
            }
            let scen = Scenario::new(n, 2, 2)?;
            let m = scen.inputs();
            let scale = qr(1, 1i64 << (n - 1));
            let mut c = vec![scale.clone(); m];
            c[m - 1] = scale * (Q::one() - q(1i64 << (n - 1)));
            Ok(BellInequality::new(scen, c, caps)?
                .with_tag(format!("gen_new{n}"))
                .with_tag("facet")
                .with_tag("stated_bound=1"))
        }
        CatalogId::Named(name) => {
            let (scen, nums, den, stated) = named_data(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown table entry {name}")))?;
            let coeffs = nums.iter().map(|&x| qr(x, den)).collect();
            Ok(BellInequality::new(scen, coeffs, caps)?
                .with_tag(name.to_string())
                .with_tag("facet")
                .with_tag(format!("stated_bound={stated}")))
        }
    }
}

pub fn parse_catalog_id(name: &str, param: Option<usize>) -> Result<CatalogId> {
    let need = |p: Option<usize>| p.ok_or_else(|| Error::InvalidInput(format!("{name} needs a parameter")));
    Ok(match name {
        "chsh" => CatalogId::Chsh,
        "cglmp" => CatalogId::Cglmp(need(param)?),
        "mermin" => CatalogId::Mermin(param.unwrap_or(3)),
        "mermin_klyshko" | "mk" => CatalogId::MerminKlyshko(need(param)?),
        "svetlichny3" => CatalogId::Svetlichny3,
        "gen_new" => CatalogId::GenNew(need(param)?),
        other => match NAMED_IDS.iter().find(|x| **x == other) {
            Some(id) => CatalogId::Named(id),
            None => return Err(Error::InvalidInput(format!("unknown catalog id {other}"))),
        },
    })
}

/// The stated bound carried in tags, if any.
pub fn stated_bound(ineq: &BellInequality) -> Option<Q> {
    ineq.tags.iter().find_map(|t| {
        let v = t.strip_prefix("stated_bound=")?;
        let mut it = v.split('/');
        let n: i64 = it.next()?.parse().ok()?;
        let d: i64 = it.next().map_or(Some(1), |x| x.parse().ok())?;
        Some(qr(n, d))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn chsh_bounds() {
        let c = catalog(CatalogId::Chsh, &caps()).unwrap();
        assert_eq!(c.lhv_bound, q(2));
        assert_eq!(c.algebraic_bound, q(3));
    }

    #[test]
    fn cglmp_reduces_to_chsh() {
        let c = catalog(CatalogId::Cglmp(2), &caps()).unwrap();
        assert_eq!(c.coeffs, vec![q(1), q(1), q(1), q(-1)]);
        for d in 2..=5 {
            let c = catalog(CatalogId::Cglmp(d), &caps()).unwrap();
            assert_eq!(c.lhv_bound, q(d as i64));
            let top = 2 * d as i64 - 1;
            assert_eq!(c.algebraic_bound, q(top));
            let f = FiniteFunction::from_fn(c.scenario, |x| (x[0] * x[1] + 1) % d);
            assert_eq!(c.value_of_function(&f), q(top));
        }
    }

    #[test]
    fn svetlichny_and_gen_new() {
        let s = catalog(CatalogId::Svetlichny3, &caps()).unwrap();
        assert_eq!(s.lhv_bound, q(2));
        assert_eq!(s.algebraic_bound, q(4));
        let g = catalog(CatalogId::GenNew(3), &caps()).unwrap();
        assert_eq!(g.lhv_bound, q(1));
        assert_eq!(g.coeffs[7], qr(-3, 4));
        assert_eq!(g.coeffs[0], qr(1, 4));
        let g2 = catalog(CatalogId::GenNew(2), &caps()).unwrap();
        let chsh = catalog(CatalogId::Chsh, &caps()).unwrap();
        let scaled: Vec<Q> = chsh.coeffs.iter().map(|x| x / q(2)).collect();
        assert_eq!(g2.coeffs, scaled);
    }

    #[test]
    fn mermin_klyshko_small_cases() {
        // n=2 is CHSH in expectation form: E00+E01+E10-E11 <= 2
        let mk2 = catalog(CatalogId::MerminKlyshko(2), &caps()).unwrap();
        assert_eq!(mk2.coeffs, vec![q(-2), q(-2), q(-2), q(2)]);
        assert_eq!(mk2.lhv_bound, q(0));
        for n in 2..=5 {
            let mk = catalog(CatalogId::MerminKlyshko(n), &caps()).unwrap();
            assert_eq!(Some(mk.lhv_bound.clone()), stated_bound(&mk), "n={n}");
        }
    }

    #[test]
    fn named_bounds_recompute() {
        for id in NAMED_IDS.iter() {
            let t = catalog(CatalogId::Named(id), &caps()).unwrap();
            assert_eq!(Some(t.lhv_bound.clone()), stated_bound(&t), "{id}");
        }
    }

    #[test]
    fn games() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let pr = FiniteFunction::from_fn(s, |x| x[0] * x[1] + 1);
        let g = GameSpec::uniform(pr);
        let ineq = nontrivial_from_function(&g, &caps()).unwrap();
        assert_eq!(ineq.coeffs, vec![qr(1, 4), qr(1, 4), qr(1, 4), qr(-1, 4)]);
        assert_eq!(ineq.lhv_bound, qr(1, 2));
        assert_eq!(classical_bound(&g, &caps()).unwrap(), qr(3, 4));

        let s3 = Scenario::new(3, 2, 2).unwrap();
        let nand = FiniteFunction::from_fn(s3, |x| x[0] * x[1] * x[2] + 1);
        let g = GameSpec::uniform(nand.clone());
        assert_eq!(nontrivial_from_function(&g, &caps()).unwrap().lhv_bound, qr(6, 8));
        assert_eq!(classical_bound(&g, &caps()).unwrap(), qr(7, 8));
        let mut w = vec![qr(1, 10); 8];
        w[7] = qr(3, 10);
        let g = GameSpec::new(nand, w).unwrap();
        assert_eq!(classical_bound(&g, &caps()).unwrap(), qr(7, 10));

        let s233 = Scenario::new(2, 3, 3).unwrap();
        let f = FiniteFunction::from_fn(s233, |x| x[0] * x[0] * x[1] * x[1] + 1);
        let ineq = nontrivial_from_function(&GameSpec::uniform(f), &caps()).unwrap();
        assert_eq!(ineq.lhv_bound, qr(8, 9));
        assert!(ineq.is_nontrivial());
    }

    #[test]
    fn linear_target_refused() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let f = FiniteFunction::from_fn(s, |x| x[0] + x[1]);
        assert!(nontrivial_from_function(&GameSpec::uniform(f), &caps()).is_err());
    }
}

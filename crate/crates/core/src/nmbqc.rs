//! Non-adaptive measurement-based computation on a GHZ resource: site j
//! measures with input s_j = (P x)_j, and the output parity must equal f(x).
//!
//! With GHZ measurements the parity is deterministic exactly when
//! n phi + s(x).theta = pi f(x) (mod 2 pi) for every x. Taking x = 0 fixes
//! n phi = pi f(0), and the rest becomes S theta' = b' (mod 2) over real theta'
//! with b'_x = f(x) xor f(0). That holds iff u.b' is even for every integer u
//! in the left kernel of S, which a saturated kernel basis decides.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::ffun::{self, DigitString, FiniteFunction, Scenario};
use crate::lattice;
use crate::qopt::{self, nm, AngleConfig};
use crate::rat::{self, Q};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PMatrix {
    pub xbits: usize,
    pub rows: Vec<Vec<u8>>,
}

impl PMatrix {
    pub fn new(xbits: usize, rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("P needs at least one row".into()));
        }
        for r in &rows {
            if r.len() != xbits || r.iter().any(|&b| b > 1) {
                return Err(Error::InvalidInput(format!("row {r:?} is not a {xbits}-bit row")));
            }
            if r.iter().all(|&b| b == 0) {
                return Err(Error::InvalidInput("P may not contain an all-zero row".into()));
            }
        }
        Ok(PMatrix { xbits, rows })
    }

    /// Rows given as integers, most significant bit = x_1.
    pub fn from_masks(xbits: usize, masks: &[usize]) -> Result<Self> {
        Self::new(xbits, masks.iter().map(|&m| ffun::digits_of(m, xbits, 2).iter().map(|&b| b as u8).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &[usize]) -> Vec<usize> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(&p, &b)| p as usize * b).sum::<usize>() % 2)
            .collect()
    }

    /// The 2^k x n matrix of s(x) rows, x in integer order.
    pub fn s_matrix(&self) -> Vec<Vec<usize>> {
        DigitString::all(self.xbits, 2).map(|x| self.apply(&x.digits)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AchievabilityVerdict {
    pub achievable: bool,
    /// theta_j in radians, with phi completing the GHZ configuration
    pub witness: Option<AngleConfig>,
    /// integer covector u with u.S = 0 and u.b' odd
    pub obstruction: Option<Vec<BigInt>>,
}

fn check_boolean(p: &PMatrix, f: &FiniteFunction) -> Result<()> {
    let s = f.scenario;
    if s.c != 2 || s.d != 2 || s.n != p.xbits {
        return Err(Error::ScenarioMismatch { expected: format!("({},2,2)", p.xbits), got: s.to_string() });
    }
    Ok(())
}

fn target_bits(f: &FiniteFunction) -> Vec<i64> {
    let f0 = f.table[0];
    f.table.iter().map(|&v| (v ^ f0) as i64).collect()
}

pub fn decide_deterministic(p: &PMatrix, f: &FiniteFunction) -> Result<AchievabilityVerdict> {
    check_boolean(p, f)?;
    let s = p.s_matrix();
    let n = p.n();
    let b = target_bits(f);
    let s_int: Vec<Vec<BigInt>> = s.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    let kernel = lattice::left_kernel(&s_int, n);
    for u in &kernel {
        let ub: BigInt = u.iter().zip(&b).map(|(x, &y)| x * y).sum();
        if ub.is_odd() {
            return Ok(AchievabilityVerdict { achievable: false, witness: None, obstruction: Some(u.clone()) });
        }
    }
    // v in the integer lattice of colspace(S) with v = b' (mod 2), then S theta' = v over Q
    let m = b.len();
    let lat = if kernel.is_empty() {
        lattice::identity(m)
    } else {
        lattice::right_kernel(&kernel, m)
    };
    let lat_mod2: Vec<Vec<u8>> = lat.iter().map(|r| r.iter().map(|x| x.is_odd() as u8).collect()).collect();
    let b2: Vec<u8> = b.iter().map(|&x| x as u8).collect();
    let coeffs = lattice::solve_mod2(&lat_mod2, &b2)
        .ok_or_else(|| Error::InvalidInput("parity lattice inconsistent with kernel test".into()))?;
    let mut v = vec![BigInt::zero(); m];
    for (c, row) in coeffs.iter().zip(&lat) {
        if *c == 1 {
            for (x, y) in v.iter_mut().zip(row) {
                *x += y;
            }
        }
    }
    let s_q: Vec<Vec<Q>> = s.iter().map(|r| r.iter().map(|&x| rat::q(x as i64)).collect()).collect();
    let v_q: Vec<Q> = v.iter().map(|x| Q::from_integer(x.clone())).collect();
    let theta_p = rat::solve(&s_q, &v_q).ok_or_else(|| Error::InvalidInput("lattice point outside column space".into()))?;
    let thetas: Vec<f64> = theta_p.iter().map(|t| PI * rat::to_f64(t)).collect();
    let phi = PI * f.table[0] as f64 / n as f64;
    Ok(AchievabilityVerdict { achievable: true, witness: Some(AngleConfig { thetas, phi }), obstruction: None })
}

/// cos(n phi + s(x).theta) = (-1)^{f(x)} for every x.
pub fn witness_reproduces(p: &PMatrix, f: &FiniteFunction, w: &AngleConfig, tol: f64) -> bool {
    DigitString::all(p.xbits, 2).all(|x| {
        let s = DigitString { digits: p.apply(&x.digits), base: 2 };
        let want = if f.table[x.index()] == 1 { -1.0 } else { 1.0 };
        (qopt::ghz_expectation(w, &s) - want).abs() <= tol
    })
}

/// Exact check that u.S = 0 and u.b' is odd.
pub fn obstruction_valid(p: &PMatrix, f: &FiniteFunction, u: &[BigInt]) -> bool {
    let s = p.s_matrix();
    let b = target_bits(f);
    let zero_on_s = (0..p.n()).all(|j| u.iter().zip(&s).map(|(x, r)| x * BigInt::from(r[j])).sum::<BigInt>().is_zero());
    let ub: BigInt = u.iter().zip(&b).map(|(x, &y)| x * y).sum();
    zero_on_s && ub.is_odd()
}

/// Numerical cross-check: max_theta |sum_x (-1)^{f(x)} e^{i s(x).theta}| reaches 2^k.
pub fn ghz_oracle_achievable(p: &PMatrix, f: &FiniteFunction, restarts: usize, seed: u64) -> bool {
    let s = p.s_matrix();
    let signs: Vec<f64> = f.table.iter().map(|&v| if v == 1 { -1.0 } else { 1.0 }).collect();
    let total = s.len() as f64;
    let obj = |theta: &[f64]| {
        let z: num_complex::Complex64 = s
            .iter()
            .zip(&signs)
            .map(|(row, sg)| {
                let arg: f64 = row.iter().zip(theta).map(|(&b, t)| b as f64 * t).sum();
                num_complex::Complex64::from_polar(*sg, arg)
            })
            .sum();
        -z.norm()
    };
    let starts = nm::start_points(p.n(), restarts, -PI, PI, seed);
    let ms = nm::multi_start(&obj, &starts, &nm::NmOptions::default());
    -ms.best.fx >= total - 1e-6
}

fn subsets(pool: usize, size: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if visit(&idx) {
            return;
        }
        let Some(i) = (0..size).rev().find(|&i| idx[i] < pool - size + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Smallest number of sites admitting a deterministic GHZ computation of f,
/// with a P attaining it. Repeated rows never help (they repeat a column of
/// S), so only sets of distinct nonzero rows are searched.
pub fn minimal_n(f: &FiniteFunction, caps: &Caps) -> Result<(usize, PMatrix)> {
    let k = f.scenario.n;
    if k > 4 {
        return Err(Error::Unsupported(format!("minimal_n supports |x| <= 4, got {k}")));
    }
    let types = (1usize << k) - 1;
    let total: u128 = 1u128 << types;
    if total > caps.max_functions as u128 {
        return Err(Error::CapExceeded { what: "P candidates", reached: total, limit: caps.max_functions as u128, progress: String::new() });
    }
    for n in 1..=types {
        let mut found: Option<PMatrix> = None;
        let mut err: Option<Error> = None;
        subsets(types, n, |idx| {
            let masks: Vec<usize> = idx.iter().map(|&i| i + 1).collect();
            let p = PMatrix::from_masks(k, &masks).expect("nonzero rows");
            match decide_deterministic(&p, f) {
                Ok(v) if v.achievable => {
                    found = Some(p);
                    true
                }
                Ok(_) => false,
                Err(e) => {
                    err = Some(e);
                    true
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if let Some(p) = found {
            return Ok((n, p));
        }
    }
    Err(Error::NotAchievable("no P over distinct nonzero rows works".into()))
}

#[derive(Debug, Clone)]
pub struct ParadoxRow {
    pub x: Vec<usize>,
    pub s: Vec<usize>,
    /// the value every quantum run produces for p(1|s)
    pub quantum: f64,
    /// the value LHV is forced to once the determining inputs are fixed
    pub lhv_forced: usize,
}

#[derive(Debug, Clone)]
pub struct ParadoxReport {
    pub rows: Vec<ParadoxRow>,
    /// inputs whose deterministic values pin down the LHV parity function
    pub determining: Vec<Vec<usize>>,
    /// first x where the LHV completion disagrees with the quantum prediction
    pub conflict: Option<Vec<usize>>,
    pub witness: AngleConfig,
}

impl ParadoxReport {
    pub fn is_degenerate(&self) -> bool {
        self.conflict.is_none()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "degenerate": self.is_degenerate(),
            "determining_inputs": self.determining,
            "conflict": self.conflict,
            "witness": {"thetas": self.witness.thetas, "phi": self.witness.phi},
            "rows": self.rows.iter().map(|r| json!({
                "x": r.x, "s": r.s, "quantum_p1": r.quantum, "lhv_forced_p1": r.lhv_forced,
            })).collect::<Vec<_>>(),
        })
    }
}

/// LHV parities are affine in x, so their values on {0, e_1, ..., e_k} force
/// every other entry; quantum runs follow f instead.
pub fn ghz_paradox(p: &PMatrix, f: &FiniteFunction) -> Result<ParadoxReport> {
    let verdict = decide_deterministic(p, f)?;
    let witness = verdict.witness.ok_or_else(|| Error::NotAchievable("f is not deterministic for this P".into()))?;
    let k = p.xbits;
    let f0 = f.table[0];
    let unit = |i: usize| -> Vec<usize> { (0..k).map(|j| (j == i) as usize).collect() };
    let slope: Vec<usize> = (0..k).map(|i| f.eval(&unit(i)) ^ f0).collect();
    let mut determining = vec![vec![0; k]];
    determining.extend((0..k).map(unit));
    let mut rows = Vec::new();
    let mut conflict = None;
    for x in DigitString::all(k, 2) {
        let s = p.apply(&x.digits);
        let sd = DigitString { digits: s.clone(), base: 2 };
        let quantum = (1.0 - qopt::ghz_expectation(&witness, &sd)) / 2.0;
        let lhv = x.digits.iter().zip(&slope).map(|(a, b)| a * b).sum::<usize>() % 2 ^ f0;
        if conflict.is_none() && lhv != f.table[x.index()] {
            conflict = Some(x.digits.clone());
        }
        rows.push(ParadoxRow { x: x.digits, s, quantum, lhv_forced: lhv });
    }
    Ok(ParadoxReport { rows, determining, conflict, witness })
}

/// p(m|s(x)) = 2^{1-n} on outputs with parity f(x), for inputs in the image of P.
#[derive(Debug, Clone)]
pub struct PartialBox {
    pub n: usize,
    /// (x, s) pairs, deduplicated on s
    pub inputs: Vec<(Vec<usize>, Vec<usize>)>,
    /// probs[i][m] for the i-th input and output string m in integer order
    pub probs: Vec<Vec<Q>>,
}

impl PartialBox {
    /// For every proper party subset J and any two listed inputs that agree
    /// on J, the marginals on J agree.
    pub fn is_non_signalling(&self) -> bool {
        let n = self.n;
        for mask in 1..(1usize << n) - 1 {
            let in_j = |j: usize| mask >> (n - 1 - j) & 1 == 1;
            let marginal = |i: usize| -> Vec<Q> {
                let mut out = vec![Q::zero(); 1 << n];
                for (m, p) in self.probs[i].iter().enumerate() {
                    let key = m & mask;
                    out[key] += p;
                }
                out
            };
            for a in 0..self.inputs.len() {
                for b in a + 1..self.inputs.len() {
                    let (sa, sb) = (&self.inputs[a].1, &self.inputs[b].1);
                    if (0..n).all(|j| !in_j(j) || sa[j] == sb[j]) && marginal(a) != marginal(b) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "inputs": self.inputs.iter().map(|(x, s)| json!({"x": x, "s": s})).collect::<Vec<_>>(),
            "probs": self.probs.iter().map(|r| r.iter().map(rat::to_pair).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

pub fn generalized_pr_box(p: &PMatrix, f: &FiniteFunction) -> Result<PartialBox> {
    check_boolean(p, f)?;
    let n = p.n();
    let weight = rat::qr(1, 1i64 << (n - 1));
    let mut inputs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut probs = Vec::new();
    for x in DigitString::all(p.xbits, 2) {
        let s = p.apply(&x.digits);
        let fx = f.table[x.index()];
        if let Some(i) = inputs.iter().position(|(_, t)| *t == s) {
            let fy = f.table[ffun::index_of(&inputs[i].0, 2)];
            if fy != fx {
                return Err(Error::InvalidInput(format!("inputs {:?} and {:?} share s but differ in f", inputs[i].0, x.digits)));
            }
            continue;
        }
        let row = (0..1usize << n)
            .map(|m| if (m.count_ones() as usize) % 2 == fx { weight.clone() } else { Q::zero() })
            .collect();
        inputs.push((x.digits, s));
        probs.push(row);
    }
    Ok(PartialBox { n, inputs, probs })
}

/// Build the (k,2,2) Boolean function from a hex truth table (bit i = f(x_i)).
pub fn function_from_hex(xbits: usize, hex: &str) -> Result<FiniteFunction> {
    let v = u64::from_str_radix(hex.trim_start_matches("0x"), 16)
        .map_err(|e| Error::InvalidInput(format!("bad hex truth table {hex}: {e}")))?;
    let scen = Scenario::new(xbits, 2, 2)?;
    let len = scen.inputs();
    if len < 64 && v >> len != 0 {
        return Err(Error::InvalidInput(format!("truth table {hex} has more than {len} bits")));
    }
    FiniteFunction::new(scen, (0..len).map(|i| (v >> i & 1) as usize).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nand(k: usize) -> FiniteFunction {
        FiniteFunction::from_fn(Scenario::new(k, 2, 2).unwrap(), |x| 1 ^ x.iter().product::<usize>())
    }

    #[test]
    fn nand2_full_p() {
        let p = PMatrix::from_masks(2, &[0b10, 0b01, 0b11]).unwrap();
        let v = decide_deterministic(&p, &nand(2)).unwrap();
        assert!(v.achievable);
        assert!(witness_reproduces(&p, &nand(2), v.witness.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn nand3_six_sites_fail() {
        for drop in 1..8usize {
            let masks: Vec<usize> = (1..8).filter(|&m| m != drop).collect();
            let p = PMatrix::from_masks(3, &masks).unwrap();
            let v = decide_deterministic(&p, &nand(3)).unwrap();
            assert!(!v.achievable);
            assert!(obstruction_valid(&p, &nand(3), v.obstruction.as_ref().unwrap()));
        }
    }

    #[test]
    fn minimal_counts() {
        let caps = Caps::default();
        assert_eq!(minimal_n(&nand(2), &caps).unwrap().0, 3);
        assert_eq!(minimal_n(&nand(3), &caps).unwrap().0, 7);
        let lin = FiniteFunction::from_fn(Scenario::new(3, 2, 2).unwrap(), |x| x[0] ^ x[2] ^ 1);
        assert_eq!(minimal_n(&lin, &caps).unwrap().0, 1);
    }

    #[test]
    fn subset_walk_counts() {
        let mut c = 0;
        subsets(5, 2, |_| {
            c += 1;
            false
        });
        assert_eq!(c, 10);
        let mut c = 0;
        subsets(3, 3, |_| {
            c += 1;
            false
        });
        assert_eq!(c, 1);
    }

    #[test]
    fn ghz_rows() {
        let p = PMatrix::from_masks(2, &[0b10, 0b01, 0b11]).unwrap();
        let r = ghz_paradox(&p, &nand(2)).unwrap();
        assert_eq!(r.conflict, Some(vec![1, 1]));
        let last = r.rows.last().unwrap();
        assert_eq!(last.s, vec![1, 1, 0]);
        assert_eq!(last.lhv_forced, 1);
        assert!(last.quantum.abs() < 1e-9);
        for row in &r.rows[..3] {
            assert!((row.quantum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pr_box() {
        let p = PMatrix::from_masks(2, &[0b10, 0b01]).unwrap();
        let f = nand(2);
        let b = generalized_pr_box(&p, &f).unwrap();
        assert!(b.is_non_signalling());
        let half = rat::qr(1, 2);
        assert_eq!(b.probs[3], vec![half.clone(), Q::zero(), Q::zero(), half.clone()]);
        assert_eq!(b.probs[0], vec![Q::zero(), half.clone(), half, Q::zero()]);
    }
}

//! Functions Z_c^n -> Z_d stored as truth tables, and their classification.
//!
//! Input strings are ordered by integer value with the first party as the most
//! significant digit, so for c=2 the string s=100 has index 4.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::rat::Q;
use num_traits::Zero;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub c: usize,
    pub d: usize,
}

impl Scenario {
    pub fn new(n: usize, c: usize, d: usize) -> Result<Self> {
        if n < 1 || c < 2 || d < 2 {
            return Err(Error::InvalidScenario(format!(
                "need n>=1, c>=2, d>=2, got ({n},{c},{d})"
            )));
        }
        if d > 255 {
            return Err(Error::InvalidScenario(format!("d={d} exceeds 255")));
        }
        Ok(Scenario { n, c, d })
    }

    /// Number of input strings, c^n. Saturates instead of overflowing.
    pub fn inputs(&self) -> usize {
        (0..self.n).fold(1usize, |acc, _| acc.saturating_mul(self.c))
    }

    /// Length of the correlator vector, (d-1)c^n.
    pub fn corr_dim(&self) -> usize {
        (self.d - 1).saturating_mul(self.inputs())
    }

    /// d^{n(c-1)+1}, the number of n-partite linear functions.
    pub fn vertex_count(&self) -> Option<u128> {
        let e = u32::try_from(self.n * (self.c - 1) + 1).ok()?;
        (self.d as u128).checked_pow(e)
    }

    pub fn d_is_prime(&self) -> bool {
        is_prime(self.d)
    }

    pub fn require_prime_d(&self) -> Result<()> {
        if self.d_is_prime() {
            Ok(())
        } else {
            Err(Error::CompositeD(self.d))
        }
    }

    pub fn digits(&self, idx: usize) -> Vec<usize> {
        digits_of(idx, self.n, self.c)
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        index_of(digits, self.c)
    }

    pub fn check_table(&self, caps: &Caps) -> Result<()> {
        let t = self.inputs();
        if t > caps.max_table {
            return Err(Error::CapExceeded {
                what: "truth table length",
                reached: t as u128,
                limit: caps.max_table as u128,
                progress: "none".into(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.n, self.c, self.d)
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim_matches(|c| c == '(' || c == ')').split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidScenario(format!("expected n,c,d, got {s:?}")));
        }
        let p = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidScenario(format!("bad integer {x:?}")))
        };
        Scenario::new(p(parts[0])?, p(parts[1])?, p(parts[2])?)
    }
}

pub fn is_prime(d: usize) -> bool {
    d >= 2 && (2..).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

/// Digits of `idx` in base `base`, most significant first.
pub fn digits_of(mut idx: usize, len: usize, base: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

pub fn index_of(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * base + x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    Inputs,
    Outputs,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitString {
    pub digits: Vec<usize>,
    pub base: usize,
}

impl DigitString {
    pub fn new(digits: Vec<usize>, base: usize) -> Result<Self> {
        if let Some(&bad) = digits.iter().find(|&&x| x >= base) {
            return Err(Error::InvalidInput(format!("digit {bad} outside Z_{base}")));
        }
        Ok(DigitString { digits, base })
    }

    pub fn index(&self) -> usize {
        index_of(&self.digits, self.base)
    }

    /// Every string of length `len` in integer order.
    pub fn all(len: usize, base: usize) -> impl Iterator<Item = DigitString> {
        let total = (0..len).fold(1usize, |a, _| a * base);
        (0..total).map(move |i| DigitString {
            digits: digits_of(i, len, base),
            base,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FiniteFunction {
    pub scenario: Scenario,
    pub table: Vec<usize>,
}

impl FiniteFunction {
    pub fn new(scenario: Scenario, table: Vec<usize>) -> Result<Self> {
        if table.len() != scenario.inputs() {
            return Err(Error::DimensionMismatch {
                expected: scenario.inputs(),
                got: table.len(),
            });
        }
        if table.iter().any(|&v| v >= scenario.d) {
            return Err(Error::InvalidInput(format!(
                "table entry outside Z_{}",
                scenario.d
            )));
        }
        Ok(FiniteFunction { scenario, table })
    }

    /// Build from a closure over input digits; values are reduced mod d.
    pub fn from_fn(scenario: Scenario, f: impl Fn(&[usize]) -> usize) -> Self {
        let table = (0..scenario.inputs())
            .map(|i| f(&scenario.digits(i)) % scenario.d)
            .collect();
        FiniteFunction { scenario, table }
    }

    pub fn constant(scenario: Scenario, v: usize) -> Self {
        FiniteFunction {
            scenario,
            table: vec![v % scenario.d; scenario.inputs()],
        }
    }

    pub fn eval(&self, s: &[usize]) -> usize {
        self.table[self.scenario.index(s)]
    }

    pub fn add(&self, other: &FiniteFunction) -> FiniteFunction {
        let d = self.scenario.d;
        FiniteFunction {
            scenario: self.scenario,
            table: self
                .table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| (a + b) % d)
                .collect(),
        }
    }

    pub fn sub(&self, other: &FiniteFunction) -> FiniteFunction {
        let d = self.scenario.d;
        FiniteFunction {
            scenario: self.scenario,
            table: self
                .table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| (a + d - b) % d)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|&v| v == 0)
    }

    /// Deterministic correlator p(k|s) = [f(s)=k] for k=1..d-1, ordered by s then k.
    pub fn correlator(&self) -> Vec<Q> {
        let d = self.scenario.d;
        let mut v = vec![Q::zero(); self.scenario.corr_dim()];
        for (i, &val) in self.table.iter().enumerate() {
            if val > 0 {
                v[i * (d - 1) + val - 1] = num_traits::One::one();
            }
        }
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        let s = self.scenario;
        serde_json::json!({ "scenario": [s.n, s.c, s.d], "table": self.table })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("function json: {m}"));
        let sc = v.get("scenario").and_then(|x| x.as_array()).ok_or_else(|| bad("scenario"))?;
        let num = |i: usize| -> Result<usize> {
            sc.get(i)
                .and_then(|x| x.as_u64())
                .map(|x| x as usize)
                .ok_or_else(|| bad("scenario entry"))
        };
        let scen = Scenario::new(num(0)?, num(1)?, num(2)?)?;
        let table = v
            .get("table")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("table"))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| bad("table entry")))
            .collect::<Result<Vec<_>>>()?;
        FiniteFunction::new(scen, table)
    }
}

/// Per-site maps g_j with g_j(0)=0 plus a constant, the coefficient tuple that
/// fixes the enumeration order.
fn linear_from_params(scen: Scenario, params: &[usize]) -> FiniteFunction {
    let (n, c, d) = (scen.n, scen.c, scen.d);
    let alpha = params[0];
    let table = (0..scen.inputs())
        .map(|i| {
            let s = scen.digits(i);
            let mut v = alpha;
            for j in 0..n {
                if s[j] > 0 {
                    v += params[1 + j * (c - 1) + s[j] - 1];
                }
            }
            v % d
        })
        .collect();
    FiniteFunction {
        scenario: scen,
        table,
    }
}

/// Streams the n-partite linear functions [sum_j g_j(s_j)]_d.
pub struct LinearFunctions {
    scen: Scenario,
    params: Vec<usize>,
    done: bool,
}

impl Iterator for LinearFunctions {
    type Item = FiniteFunction;
    fn next(&mut self) -> Option<FiniteFunction> {
        if self.done {
            return None;
        }
        let f = linear_from_params(self.scen, &self.params);
        // odometer, last coordinate fastest
        let mut i = self.params.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.params[i] += 1;
            if self.params[i] < self.scen.d {
                break;
            }
            self.params[i] = 0;
        }
        Some(f)
    }
}

pub fn enumerate_lhv_vertex_functions(scen: Scenario, caps: &Caps) -> Result<LinearFunctions> {
    scen.check_table(caps)?;
    let count = scen.vertex_count().unwrap_or(u128::MAX);
    if count > caps.max_functions {
        return Err(Error::CapExceeded {
            what: "n-partite linear functions",
            reached: count,
            limit: caps.max_functions,
            progress: "none".into(),
        });
    }
    Ok(LinearFunctions {
        scen,
        params: vec![0; scen.n * (scen.c - 1) + 1],
        done: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionClassReport {
    pub is_npartite_linear: bool,
    pub is_affine: bool,
    /// Party subsets J (0-based, containing party 0, proper) across which f splits.
    pub bipartite_linear_partitions: Vec<Vec<usize>>,
    pub linear_part: FiniteFunction,
    pub nonlinear_part: FiniteFunction,
}

/// The n-partite linear function agreeing with f on every string with at most
/// one non-zero digit.
pub fn linear_part(f: &FiniteFunction) -> FiniteFunction {
    let scen = f.scenario;
    let d = scen.d;
    let f0 = f.table[0];
    let mut params = vec![f0];
    for j in 0..scen.n {
        for v in 1..scen.c {
            let mut s = vec![0; scen.n];
            s[j] = v;
            params.push((f.eval(&s) + d - f0) % d);
        }
    }
    linear_from_params(scen, &params)
}

fn splits_across(f: &FiniteFunction, part: &[usize]) -> bool {
    let scen = f.scenario;
    let d = scen.d;
    let f0 = f.table[0];
    (0..scen.inputs()).all(|i| {
        let s = scen.digits(i);
        let mut left = vec![0; scen.n];
        let mut right = vec![0; scen.n];
        for j in 0..scen.n {
            if part.contains(&j) {
                left[j] = s[j];
            } else {
                right[j] = s[j];
            }
        }
        (f.eval(&left) + f.eval(&right) + d - f0) % d == f.table[i]
    })
}

/// Proper subsets of parties containing party 0, one per bipartition.
pub fn bipartitions(n: usize) -> Vec<Vec<usize>> {
    if n < 2 {
        return Vec::new();
    }
    (0..(1usize << (n - 1)) - 1)
        .map(|mask| {
            let mut j = vec![0];
            j.extend((1..n).filter(|&k| mask >> (k - 1) & 1 == 1));
            j
        })
        .collect()
}

pub fn is_affine(f: &FiniteFunction) -> bool {
    let scen = f.scenario;
    let d = scen.d;
    let f0 = f.table[0];
    let slopes: Vec<usize> = (0..scen.n)
        .map(|j| {
            let mut s = vec![0; scen.n];
            s[j] = 1;
            (f.eval(&s) + d - f0) % d
        })
        .collect();
    (0..scen.inputs()).all(|i| {
        let s = scen.digits(i);
        let v = s.iter().zip(&slopes).fold(f0, |acc, (x, a)| (acc + x * a) % d);
        v == f.table[i]
    })
}

pub fn classify(f: &FiniteFunction) -> FunctionClassReport {
    let lin = linear_part(f);
    let non = f.sub(&lin);
    FunctionClassReport {
        is_npartite_linear: non.is_zero(),
        is_affine: is_affine(f),
        bipartite_linear_partitions: bipartitions(f.scenario.n)
            .into_iter()
            .filter(|p| splits_across(f, p))
            .collect(),
        linear_part: lin,
        nonlinear_part: non,
    }
}

pub fn is_npartite_linear(f: &FiniteFunction) -> bool {
    linear_part(f) == *f
}

pub fn is_bipartite_linear(f: &FiniteFunction) -> bool {
    bipartitions(f.scenario.n).iter().any(|p| splits_across(f, p))
}

/// max over n-partite linear g of sum_s w(s)[f(s)=g(s)], with the first maximizer
/// in enumeration order. `None` weights means weight 1 everywhere.
pub fn max_overlap(
    f: &FiniteFunction,
    weights: Option<&[Q]>,
    caps: &Caps,
) -> Result<(Q, FiniteFunction)> {
    let scen = f.scenario;
    if let Some(w) = weights {
        if w.len() != scen.inputs() {
            return Err(Error::DimensionMismatch {
                expected: scen.inputs(),
                got: w.len(),
            });
        }
        if w.iter().any(|x| *x < Q::zero()) {
            return Err(Error::InvalidInput("negative weight".into()));
        }
    }
    let mut best: Option<(Q, FiniteFunction)> = None;
    for g in enumerate_lhv_vertex_functions(scen, caps)? {
        let val = match weights {
            None => Q::from_integer(
                f.table.iter().zip(&g.table).filter(|(a, b)| a == b).count().into(),
            ),
            Some(w) => f
                .table
                .iter()
                .zip(&g.table)
                .zip(w)
                .filter(|((a, b), _)| a == b)
                .fold(Q::zero(), |acc, (_, x)| acc + x),
        };
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, g));
        }
    }
    Ok(best.expect("at least one linear function"))
}

/// Functions splitting across some bipartition, deduplicated and sorted by table.
pub fn enumerate_bipartite_linear_functions(
    scen: Scenario,
    caps: &Caps,
) -> Result<Vec<FiniteFunction>> {
    if scen.n < 2 {
        return Err(Error::InvalidScenario("bipartite linear functions need n >= 2".into()));
    }
    scen.check_table(caps)?;
    let d = scen.d as u128;
    let mut total: u128 = 0;
    for part in bipartitions(scen.n) {
        let a = scen.c.pow(part.len() as u32) as u32;
        let b = scen.c.pow((scen.n - part.len()) as u32) as u32;
        let cnt = d
            .checked_pow(a - 1)
            .and_then(|x| x.checked_mul(d.checked_pow(b)?))
            .unwrap_or(u128::MAX);
        total = total.saturating_add(cnt);
    }
    if total > caps.max_functions {
        return Err(Error::CapExceeded {
            what: "bipartite linear candidates",
            reached: total,
            limit: caps.max_functions,
            progress: "none".into(),
        });
    }
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for part in bipartitions(scen.n) {
        let rest: Vec<usize> = (0..scen.n).filter(|j| !part.contains(j)).collect();
        let la = scen.c.pow(part.len() as u32);
        let lb = scen.c.pow(rest.len() as u32);
        let mut t1 = vec![0usize; la];
        loop {
            let mut t2 = vec![0usize; lb];
            loop {
                let table = (0..scen.inputs())
                    .map(|i| {
                        let s = scen.digits(i);
                        let ia = index_of(&part.iter().map(|&j| s[j]).collect::<Vec<_>>(), scen.c);
                        let ib = index_of(&rest.iter().map(|&j| s[j]).collect::<Vec<_>>(), scen.c);
                        (t1[ia] + t2[ib]) % scen.d
                    })
                    .collect();
                seen.insert(table);
                if !odometer(&mut t2, scen.d, 0) {
                    break;
                }
            }
            // t1(0)=0 fixes the constant into t2
            if !odometer(&mut t1, scen.d, 1) {
                break;
            }
        }
    }
    let mut out: Vec<FiniteFunction> = seen
        .into_iter()
        .map(|table| FiniteFunction {
            scenario: scen,
            table,
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Advance digits[from..] as a base-`base` counter; false on wrap-around.
pub(crate) fn odometer(digits: &mut [usize], base: usize, from: usize) -> bool {
    let mut i = digits.len();
    while i > from {
        i -= 1;
        digits[i] += 1;
        if digits[i] < base {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// Every function Z_c^n -> Z_d, in table order.
pub fn enumerate_all_functions(scen: Scenario, caps: &Caps) -> Result<Vec<FiniteFunction>> {
    let len = scen.inputs() as u32;
    let count = (scen.d as u128).checked_pow(len).unwrap_or(u128::MAX);
    if count > caps.max_functions {
        return Err(Error::CapExceeded {
            what: "functions",
            reached: count,
            limit: caps.max_functions,
            progress: "none".into(),
        });
    }
    let mut t = vec![0usize; scen.inputs()];
    let mut out = Vec::with_capacity(count as usize);
    loop {
        out.push(FiniteFunction {
            scenario: scen,
            table: t.clone(),
        });
        if !odometer(&mut t, scen.d, 0) {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(n: usize, c: usize, d: usize) -> Scenario {
        Scenario::new(n, c, d).unwrap()
    }

    #[test]
    fn digit_order_is_integer_order() {
        let s = sc(3, 2, 2);
        assert_eq!(s.digits(4), vec![1, 0, 0]);
        assert_eq!(s.index(&[1, 0, 0]), 4);
    }

    #[test]
    fn vertex_counts() {
        let caps = Caps::default();
        for (n, c, d, want) in [(2, 2, 2, 8), (3, 2, 2, 16), (1, 3, 3, 27), (2, 2, 3, 27)] {
            let fs: Vec<_> = enumerate_lhv_vertex_functions(sc(n, c, d), &caps).unwrap().collect();
            assert_eq!(fs.len(), want);
            let uniq: HashSet<_> = fs.iter().map(|f| f.table.clone()).collect();
            assert_eq!(uniq.len(), want);
        }
    }

    #[test]
    fn classify_examples() {
        let s = sc(2, 2, 2);
        let xor = FiniteFunction::from_fn(s, |x| x[0] + x[1]);
        assert!(classify(&xor).is_npartite_linear);
        let pr = FiniteFunction::from_fn(s, |x| x[0] * x[1] + 1);
        let r = classify(&pr);
        assert!(!r.is_npartite_linear);
        assert_eq!(r.linear_part.add(&r.nonlinear_part), pr);

        let s3 = sc(3, 2, 2);
        let maj = FiniteFunction::from_fn(s3, |x| x[0] * x[1] + x[0] * x[2] + x[1] * x[2] + 1);
        assert!(classify(&maj).bipartite_linear_partitions.is_empty());
        let prod = FiniteFunction::from_fn(s3, |x| x[0] * x[1]);
        assert_eq!(classify(&prod).bipartite_linear_partitions, vec![vec![0, 1]]);
    }

    #[test]
    fn affine_is_stricter_than_linear_for_d3() {
        let s = sc(2, 3, 3);
        let sq = FiniteFunction::from_fn(s, |x| x[0] * x[0]);
        assert!(is_npartite_linear(&sq));
        assert!(!is_affine(&sq));
    }

    #[test]
    fn overlap_examples() {
        let caps = Caps::default();
        let pr = FiniteFunction::from_fn(sc(2, 2, 2), |x| x[0] * x[1] + 1);
        assert_eq!(max_overlap(&pr, None, &caps).unwrap().0, Q::from_integer(3.into()));
        let nand = FiniteFunction::from_fn(sc(3, 2, 2), |x| x[0] * x[1] * x[2] + 1);
        assert_eq!(max_overlap(&nand, None, &caps).unwrap().0, Q::from_integer(7.into()));
    }

    #[test]
    fn bipartite_sets() {
        let caps = Caps::default();
        let two = enumerate_bipartite_linear_functions(sc(2, 2, 2), &caps).unwrap();
        assert_eq!(two.len(), 8);
        let three = enumerate_bipartite_linear_functions(sc(3, 2, 2), &caps).unwrap();
        // brute-force oracle over all 256 functions
        let oracle = enumerate_all_functions(sc(3, 2, 2), &caps)
            .unwrap()
            .into_iter()
            .filter(is_bipartite_linear)
            .count();
        assert_eq!(three.len(), oracle);
        let prod = FiniteFunction::from_fn(sc(3, 2, 2), |x| x[0] * x[1]);
        let maj = FiniteFunction::from_fn(sc(3, 2, 2), |x| x[0] * x[1] + x[0] * x[2] + x[1] * x[2]);
        assert!(three.contains(&prod));
        assert!(!three.contains(&maj));
    }
}

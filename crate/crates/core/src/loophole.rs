//! Post-selection and loopholes.
//!
//! Detection post-selection: local strategies whose detectors fire on shared
//! random bits, the weighted expectation space they generate, and the
//! efficiency thresholds for CHSH and the Mermin-Klyshko family.
//!
//! Data post-selection: rules s_j = g_j(x) or s_j = g_j(x, m without m_j),
//! their classification, and brute-force hulls of the deterministic local
//! strategies under each rule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde_json::json;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::ffun::{self, FiniteFunction, Scenario};
use crate::poly;
use crate::qopt::{self, nm, AngleConfig};
use crate::rat::{self, qr, Q};

// ---------------------------------------------------------------- detection

/// One deterministic detection strategy for (n,2,2). Sites in `input_detect`
/// fire iff s_j equals a uniform shared bit y_j (t_j = s_j + y_j + 1); the
/// others always fire. Outputs are m_j = alpha_j(y) s_j + beta_j(y) where y
/// runs over the shared bits of the input-detecting sites (first such site
/// is the most significant bit of the table index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionStrategy {
    pub n: usize,
    pub input_detect: Vec<bool>,
    pub alpha: Vec<Vec<u8>>,
    pub beta: Vec<Vec<u8>>,
    /// average over the n cyclic relabellings of the sites
    pub mix_cyclic: bool,
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyStats {
    pub p_joint: Q,
    /// p(t = 1 | s) E~(s), indexed by s
    pub ebar: Vec<Q>,
    /// p(t_j = 1 | s_j = 0) and p(t_j = 1 | s_j = 1)
    pub site_detection: Vec<[Q; 2]>,
}

impl StrategyStats {
    pub fn detection_independent_of_input(&self) -> bool {
        self.site_detection.iter().all(|[a, b]| a == b)
    }

    pub fn detection_uniform(&self) -> bool {
        self.site_detection.windows(2).all(|w| w[0] == w[1])
    }
}

fn bit(x: usize, i: usize, len: usize) -> usize {
    x >> (len - 1 - i) & 1
}

impl DetectionStrategy {
    pub fn new(n: usize, input_detect: Vec<bool>, alpha: Vec<Vec<u8>>, beta: Vec<Vec<u8>>, mix_cyclic: bool) -> Result<Self> {
        if n == 0 || n > 16 {
            return Err(Error::InvalidInput(format!("detection strategies need 1 <= n <= 16, got {n}")));
        }
        let k = input_detect.iter().filter(|&&b| b).count();
        let ok = input_detect.len() == n
            && alpha.len() == n
            && beta.len() == n
            && alpha.iter().chain(&beta).all(|t| t.len() == 1 << k && t.iter().all(|&b| b < 2));
        if !ok {
            return Err(Error::InvalidInput("output tables must have 2^k binary entries per site".into()));
        }
        Ok(DetectionStrategy { n, input_detect, alpha, beta, mix_cyclic, tags: BTreeSet::new() })
    }

    fn detecting(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.input_detect[j]).collect()
    }

    /// Parity of the outputs when the detecting sites see y, or None if
    /// some detector stays dark.
    fn outcome(&self, s: usize, y: usize) -> Option<usize> {
        let k_sites = self.detecting();
        let k = k_sites.len();
        for (i, &j) in k_sites.iter().enumerate() {
            if bit(s, j, self.n) != bit(y, i, k) {
                return None;
            }
        }
        let mut par = 0;
        for j in 0..self.n {
            par ^= (self.alpha[j][y] as usize & bit(s, j, self.n)) ^ self.beta[j][y] as usize;
        }
        Some(par)
    }

    fn stats_unmixed(&self) -> StrategyStats {
        let n = self.n;
        let k = self.detecting().len();
        let wy = qr(1, 1 << k);
        let mut ebar = vec![Q::zero(); 1 << n];
        let mut accepted = Q::zero();
        for (s, e) in ebar.iter_mut().enumerate() {
            for y in 0..1usize << k {
                if let Some(par) = self.outcome(s, y) {
                    let sign = if par == 0 { Q::one() } else { -Q::one() };
                    *e += &wy * sign;
                    accepted += &wy;
                }
            }
        }
        let p_joint = accepted / Q::from_integer((1i64 << n).into());
        let half = qr(1, 2);
        let site_detection = (0..n)
            .map(|j| if self.input_detect[j] { [half.clone(), half.clone()] } else { [Q::one(), Q::one()] })
            .collect();
        StrategyStats { p_joint, ebar, site_detection }
    }

    fn rotated(&self, r: usize) -> DetectionStrategy {
        // site j takes the role of site (j + r) mod n
        let n = self.n;
        let src = |j: usize| (j + n - r) % n;
        let input_detect: Vec<bool> = (0..n).map(|j| self.input_detect[src(j)]).collect();
        // the y table is indexed in detecting-site order, which rotation permutes
        let old: Vec<usize> = self.detecting();
        let new: Vec<usize> = (0..n).filter(|&j| input_detect[j]).collect();
        let k = old.len();
        let remap = |ynew: usize| -> usize {
            let mut yold = 0;
            for (i, &j) in new.iter().enumerate() {
                let pos = old.iter().position(|&o| o == src(j)).unwrap();
                yold |= bit(ynew, i, k) << (k - 1 - pos);
            }
            yold
        };
        let table = |t: &Vec<Vec<u8>>| -> Vec<Vec<u8>> {
            (0..n).map(|j| (0..1usize << k).map(|y| t[src(j)][remap(y)]).collect()).collect()
        };
        DetectionStrategy {
            n,
            input_detect,
            alpha: table(&self.alpha),
            beta: table(&self.beta),
            mix_cyclic: false,
            tags: self.tags.clone(),
        }
    }

    pub fn stats(&self) -> StrategyStats {
        if !self.mix_cyclic {
            return self.stats_unmixed();
        }
        let n = self.n;
        let parts: Vec<StrategyStats> = (0..n).map(|r| self.rotated(r).stats_unmixed()).collect();
        let w = qr(1, n as i64);
        let mut out = StrategyStats {
            p_joint: Q::zero(),
            ebar: vec![Q::zero(); 1 << n],
            site_detection: vec![[Q::zero(), Q::zero()]; n],
        };
        for p in &parts {
            out.p_joint += &p.p_joint * &w;
            for (a, b) in out.ebar.iter_mut().zip(&p.ebar) {
                *a += b * &w;
            }
            for (a, b) in out.site_detection.iter_mut().zip(&p.site_detection) {
                a[0] += &b[0] * &w;
                a[1] += &b[1] * &w;
            }
        }
        out
    }

    /// Every site always fires and outputs a s_j + b.
    pub fn all_detect(alpha: &[u8], beta: &[u8]) -> Result<Self> {
        let n = alpha.len();
        DetectionStrategy::new(
            n,
            vec![false; n],
            alpha.iter().map(|&a| vec![a]).collect(),
            beta.iter().map(|&b| vec![b]).collect(),
            false,
        )
    }

    /// The two-site strategy behind the CHSH threshold: one detector fires
    /// on s_1 = y, the other site outputs y s_2, so the accepted parity is
    /// s_1 s_2 with p(t = 1) = 1/2 and symmetric efficiencies.
    pub fn gm() -> Self {
        let mut s = DetectionStrategy::new(2, vec![true, false], vec![vec![0, 0], vec![0, 1]], vec![vec![0, 0], vec![0, 0]], true)
            .expect("valid");
        s.tags.insert("gm".into());
        s
    }

    /// Sites 2..n fire on s_k = y_k; site j < n outputs s_j (sum_{k>j} y_k)
    /// and site n outputs 0, so the accepted parity is
    /// sum_{j<k} s_j s_k with p(t = 1) = 2^{1-n}.
    pub fn mk(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("the MK strategy needs n >= 2".into()));
        }
        let k = n - 1;
        let mut alpha = vec![vec![0u8; 1 << k]; n];
        for (j, row) in alpha.iter_mut().enumerate().take(n - 1) {
            for (y, a) in row.iter_mut().enumerate() {
                // y bit i belongs to site i + 1
                let mut par = 0;
                for site in j + 1..n {
                    par ^= bit(y, site - 1, k);
                }
                *a = par as u8;
            }
        }
        let mut input_detect = vec![true; n];
        input_detect[0] = false;
        let mut s = DetectionStrategy::new(n, input_detect, alpha, vec![vec![0u8; 1 << k]; n], true)?;
        s.tags.insert("mk".into());
        Ok(s)
    }

    /// Only the first detector is imperfect (t_1 = s_1 + b + 1) and the
    /// second site outputs b s_2: the accepted parity is s_1 s_2.
    pub fn asymmetric_demo(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("the demonstration needs n >= 2".into()));
        }
        let mut input_detect = vec![false; n];
        input_detect[0] = true;
        let mut alpha = vec![vec![0u8; 2]; n];
        alpha[1] = vec![0, 1];
        let mut s = DetectionStrategy::new(n, input_detect, alpha, vec![vec![0u8; 2]; n], false)?;
        s.tags.insert("non-uniform-eta".into());
        Ok(s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "input_detect": self.input_detect,
            "alpha": self.alpha,
            "beta": self.beta,
            "mix_cyclic": self.mix_cyclic,
            "tags": self.tags,
        })
    }
}

/// A point (p(t=1), p(t=1) (-1)^f) of the weighted expectation space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PostselectedPoint {
    pub p_joint: Q,
    pub f: FiniteFunction,
}

impl PostselectedPoint {
    pub fn ebar(&self) -> Vec<Q> {
        self.f
            .table
            .iter()
            .map(|&v| if v == 0 { self.p_joint.clone() } else { -self.p_joint.clone() })
            .collect()
    }

    pub fn ebar_f64(&self) -> Vec<f64> {
        let p = rat::to_f64(&self.p_joint);
        self.f.table.iter().map(|&v| if v == 0 { p } else { -p }).collect()
    }
}

/// Truth tables (bit s set iff f(s) = 1) spanned by the given monomials.
fn span(monomials: &[u32], n: usize) -> Vec<u32> {
    let table = |t: u32| -> u32 {
        (0..1u32 << n).filter(|&s| s & t == t).fold(0, |acc, s| acc | 1 << s)
    };
    let gens: Vec<u32> = monomials.iter().map(|&t| table(t)).collect();
    let mut out = vec![0u32];
    for g in gens {
        let extra: Vec<u32> = out.iter().map(|v| v ^ g).collect();
        out.extend(extra);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Extreme points of the weighted expectation space of (n,2,2) detection
/// strategies. With k input-detecting sites, p(t=1) = 2^{-k} and the
/// accepted parity is any sum of terms each depending on one site's input
/// and the k detected inputs; every f appears at the largest p it reaches
/// and at the floor p = 2^{-n}. Intermediate copies are convex
/// combinations of these two.
pub fn postselected_lhv_points(n: usize, caps: &Caps) -> Result<Vec<PostselectedPoint>> {
    if !(1..=4).contains(&n) {
        return Err(Error::CapExceeded {
            what: "post-selected strategy parties",
            reached: n as u128,
            limit: 4,
            progress: "n <= 4 is enumerated exhaustively".into(),
        });
    }
    let scen = Scenario::new(n, 2, 2)?;
    scen.check_table(caps)?;
    // variable i is bit i of a monomial mask; input s has bit (n-1-j) for site j,
    // so site j corresponds to variable n-1-j
    let mut best: HashMap<u32, usize> = HashMap::new();
    for kmask in 0..1u32 << n {
        let k = kmask.count_ones() as usize;
        let monos: Vec<u32> = (0..1u32 << n).filter(|t| (t & !kmask).count_ones() <= 1).collect();
        for f in span(&monos, n) {
            let e = best.entry(f).or_insert(k);
            *e = (*e).min(k);
        }
    }
    let to_fn = |f: u32| FiniteFunction::new(scen, (0..1usize << n).map(|s| (f >> s & 1) as usize).collect()).expect("binary");
    let floor = qr(1, 1 << n);
    let mut out = Vec::new();
    for (&f, &k) in &best {
        out.push(PostselectedPoint { p_joint: qr(1, 1 << k), f: to_fn(f) });
        if k < n {
            out.push(PostselectedPoint { p_joint: floor.clone(), f: to_fn(f) });
        }
    }
    out.sort_by(|a, b| b.p_joint.cmp(&a.p_joint).then_with(|| a.f.cmp(&b.f)));
    Ok(out)
}

/// max over the points of sum_s c_s Ebar(s).
pub fn max_expectation(coeffs: &[Q], points: &[PostselectedPoint]) -> Option<Q> {
    points.iter().map(|p| rat::dot(coeffs, &p.ebar())).max()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub n: usize,
    pub p_joint_required: f64,
    pub eta_required: f64,
    pub residual: f64,
}

impl ThresholdReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "p_joint_required": qopt_round(self.p_joint_required),
            "eta_required": qopt_round(self.eta_required),
            "residual": self.residual,
        })
    }
}

fn qopt_round(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

/// p(t = 1) for n sites of efficiency eta, normalised over events where at
/// least one site fires.
pub fn p_joint(eta: f64, n: usize) -> f64 {
    eta.powi(n as i32) / (1.0 - (1.0 - eta).powi(n as i32))
}

/// Tsirelson's bound on CHSH needs p(t=1) > 1/sqrt 2, i.e. eta > 2/(sqrt 2 + 1).
pub fn gm_threshold() -> ThresholdReport {
    let eta = 2.0 / (std::f64::consts::SQRT_2 + 1.0);
    ThresholdReport { n: 2, p_joint_required: std::f64::consts::FRAC_1_SQRT_2, eta_required: eta, residual: 0.0 }
}

/// Solves p_joint(eta, n) = 2^{(1-n)/2} by bisection.
pub fn mk_threshold(n: usize) -> Result<ThresholdReport> {
    if n < 2 {
        return Err(Error::InvalidInput("the MK threshold needs n >= 2".into()));
    }
    let target = 2f64.powf((1.0 - n as f64) / 2.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p_joint(mid, n) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    Ok(ThresholdReport { n, p_joint_required: target, eta_required: eta, residual: (p_joint(eta, n) - target).abs() })
}

// ------------------------------------------------------------ data rules

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleForm {
    Input,
    OutputInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleClass {
    Li,
    Loi,
    Ai,
    Pi,
    General,
}

impl RuleClass {
    pub fn label(&self) -> &'static str {
        match self {
            RuleClass::Li => "LI",
            RuleClass::Loi => "LOI",
            RuleClass::Ai => "AI",
            RuleClass::Pi => "PI",
            RuleClass::General => "general",
        }
    }
}

/// Accept a run iff s_j = g_j(x) for every site (input form), or
/// s_j = g_j(x, m without m_j) (output-input form; arguments are x then the
/// other sites' outputs in site order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostSelectionRule {
    pub d: usize,
    pub xbits: usize,
    pub form: RuleForm,
    pub g: Vec<FiniteFunction>,
}

/// A linear rule row: s_j = a.x + c.m + b (c has one entry per site; entry j is ignored).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearRow {
    pub x: Vec<usize>,
    pub m: Vec<usize>,
    pub b: usize,
}

impl PostSelectionRule {
    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn new(d: usize, xbits: usize, form: RuleForm, g: Vec<FiniteFunction>) -> Result<Self> {
        if g.is_empty() || xbits == 0 {
            return Err(Error::InvalidInput("a rule needs at least one site and one x digit".into()));
        }
        let arity = match form {
            RuleForm::Input => xbits,
            RuleForm::OutputInput => xbits + g.len() - 1,
        };
        let want = Scenario::new(arity, d, d)?;
        for (j, gj) in g.iter().enumerate() {
            if gj.scenario != want {
                return Err(Error::ScenarioMismatch {
                    expected: format!("g_{} over {} digits mod {}", j + 1, arity, d),
                    got: format!("{:?}", gj.scenario),
                });
            }
        }
        Ok(PostSelectionRule { d, xbits, form, g })
    }

    pub fn input(d: usize, xbits: usize, g: Vec<FiniteFunction>) -> Result<Self> {
        Self::new(d, xbits, RuleForm::Input, g)
    }

    pub fn linear(d: usize, xbits: usize, rows: &[LinearRow]) -> Result<Self> {
        let n = rows.len();
        let output_input = rows.iter().enumerate().any(|(j, r)| r.m.iter().enumerate().any(|(i, &c)| i != j && c % d != 0));
        let arity = if output_input { xbits + n - 1 } else { xbits };
        let scen = Scenario::new(arity, d, d)?;
        let mut g = Vec::with_capacity(n);
        for (j, r) in rows.iter().enumerate() {
            if r.x.len() != xbits || (output_input && r.m.len() != n) {
                return Err(Error::InvalidInput(format!("rule row {} has the wrong length", j + 1)));
            }
            let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            g.push(FiniteFunction::from_fn(scen, |a| {
                let mut v = r.b;
                for (t, c) in a[..xbits].iter().zip(&r.x) {
                    v += t * c;
                }
                if output_input {
                    for (t, &i) in a[xbits..].iter().zip(&others) {
                        v += t * r.m[i];
                    }
                }
                v
            }));
        }
        Self::new(d, xbits, if output_input { RuleForm::OutputInput } else { RuleForm::Input }, g)
    }

    /// g_j(x, m without m_j).
    pub fn eval(&self, j: usize, x: &[usize], m: &[usize]) -> usize {
        match self.form {
            RuleForm::Input => self.g[j].eval(x),
            RuleForm::OutputInput => {
                let mut a = x.to_vec();
                a.extend(m.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
                self.g[j].eval(&a)
            }
        }
    }

    fn depends_on_outputs(&self) -> bool {
        if self.form == RuleForm::Input {
            return false;
        }
        let d = self.d;
        self.g.iter().any(|gj| {
            let scen = gj.scenario;
            (0..scen.inputs()).any(|i| {
                let mut a = scen.digits(i);
                let v = gj.table[i];
                a[self.xbits..].iter_mut().for_each(|t| *t = 0);
                gj.eval(&a) != v
            })
        }) && d >= 2
    }

    /// The x-part of each g_j (outputs set to zero).
    fn input_part(&self) -> Vec<FiniteFunction> {
        let scen = Scenario::new(self.xbits, self.d, self.d).expect("valid");
        self.g
            .iter()
            .map(|gj| {
                FiniteFunction::from_fn(scen, |x| {
                    let mut a = x.to_vec();
                    a.resize(gj.scenario.n, 0);
                    gj.eval(&a)
                })
            })
            .collect()
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| Error::InvalidInput(format!("rule: missing field '{k}'")));
        let num = |k: &str| -> Result<usize> {
            field(k)?.as_u64().map(|x| x as usize).ok_or_else(|| Error::InvalidInput(format!("rule: field '{k}' must be an integer")))
        };
        let d = num("d")?;
        let xbits = num("xbits")?;
        let g = field("g")?.as_array().ok_or_else(|| Error::InvalidInput("rule: field 'g' must be an array".into()))?;
        let ints = |e: &serde_json::Value, k: &str, j: usize| -> Result<Vec<usize>> {
            match e.get(k) {
                None => Ok(Vec::new()),
                Some(a) => a
                    .as_array()
                    .ok_or_else(|| Error::InvalidInput(format!("rule: g[{j}].{k} must be an array")))?
                    .iter()
                    .map(|t| t.as_u64().map(|x| x as usize).ok_or_else(|| Error::InvalidInput(format!("rule: g[{j}].{k} entries must be integers"))))
                    .collect(),
            }
        };
        if g.iter().all(|e| e.get("table").is_none()) {
            let n = g.len();
            let rows = g
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let mut m = ints(e, "m", j)?;
                    if m.is_empty() {
                        m = vec![0; n];
                    }
                    Ok(LinearRow { x: ints(e, "x", j)?, m, b: e.get("b").and_then(|b| b.as_u64()).unwrap_or(0) as usize })
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::linear(d, xbits, &rows);
        }
        let form = match v.get("form").and_then(|f| f.as_str()).unwrap_or("input") {
            "input" => RuleForm::Input,
            "output-input" => RuleForm::OutputInput,
            other => return Err(Error::InvalidInput(format!("rule: unknown form '{other}'"))),
        };
        let arity = if form == RuleForm::Input { xbits } else { xbits + g.len() - 1 };
        let scen = Scenario::new(arity, d, d)?;
        let g = g
            .iter()
            .enumerate()
            .map(|(j, e)| FiniteFunction::new(scen, ints(e, "table", j)?).map_err(|err| Error::InvalidInput(format!("rule: g[{j}]: {err}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, xbits, form, g)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "d": self.d,
            "xbits": self.xbits,
            "form": match self.form { RuleForm::Input => "input", RuleForm::OutputInput => "output-input" },
            "g": self.g.iter().map(|g| json!({ "table": g.table })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleVerdict {
    pub class: RuleClass,
    pub loophole_free: bool,
}

/// Class from a syntactic test on each g_j; only the binary linear
/// classes are loophole-free.
pub fn classify_rule(rule: &PostSelectionRule) -> Result<RuleVerdict> {
    if !ffun::is_prime(rule.d) {
        return Err(Error::CompositeD(rule.d));
    }
    let class = if rule.depends_on_outputs() {
        if rule.d == 2 && rule.g.iter().all(ffun::is_affine) {
            RuleClass::Loi
        } else {
            RuleClass::General
        }
    } else {
        let g = rule.input_part();
        if g.iter().all(ffun::is_affine) {
            if rule.d == 2 {
                RuleClass::Li
            } else {
                RuleClass::Ai
            }
        } else if g.iter().all(ffun::is_npartite_linear) {
            RuleClass::Pi
        } else {
            RuleClass::General
        }
    };
    Ok(RuleVerdict { class, loophole_free: matches!(class, RuleClass::Li | RuleClass::Loi) })
}

/// One achievable conditional correlator under a rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RulePoint {
    /// phi_j as a table over Z_d: m_j = phi_j(s_j)
    pub assignment: Vec<Vec<usize>>,
    /// p(k|x) at index x * (d-1) + (k-1)
    pub correlator: Vec<Q>,
    /// probability that a uniformly random s is accepted, per x
    pub acceptance: Vec<Q>,
}

impl RulePoint {
    /// The function when the point is deterministic.
    pub fn function(&self, xscen: Scenario) -> Option<FiniteFunction> {
        let dm = xscen.d - 1;
        let mut table = Vec::with_capacity(xscen.inputs());
        for x in 0..xscen.inputs() {
            let row = &self.correlator[x * dm..(x + 1) * dm];
            let total: Q = row.iter().fold(Q::zero(), |a, b| a + b);
            if total.is_zero() {
                table.push(0);
            } else if total.is_one() && row.iter().filter(|p| !p.is_zero()).count() == 1 {
                table.push(1 + row.iter().position(|p| !p.is_zero()).unwrap());
            } else {
                return None;
            }
        }
        FiniteFunction::new(xscen, table).ok()
    }
}

#[derive(Debug, Clone)]
pub struct RuleHull {
    pub verdict: RuleVerdict,
    pub points: Vec<RulePoint>,
    /// indices of points outside the hull of n-partite linear functions on x
    pub outside: Vec<usize>,
    pub exceeds_linear_hull: bool,
    /// every function on x is reached, so the hull is the whole correlator polytope
    pub reaches_all_functions: bool,
    /// assignments skipped because some x had zero acceptance
    pub excluded_assignments: u128,
}

impl RuleHull {
    pub fn achieves(&self, f: &FiniteFunction) -> bool {
        let target = f.correlator();
        self.points.iter().any(|p| p.correlator == target)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "class": self.verdict.class.label(),
            "loophole_free": self.verdict.loophole_free,
            "points": self.points.len(),
            "outside_linear_hull": self.outside.len(),
            "exceeds_linear_hull": self.exceeds_linear_hull,
            "reaches_all_functions": self.reaches_all_functions,
            "excluded_assignments": self.excluded_assignments.to_string(),
            "sample_outside": self.outside.iter().take(8).map(|&i| {
                let p = &self.points[i];
                json!({
                    "assignment": p.assignment,
                    "correlator": p.correlator.iter().map(rat::to_pair).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

fn all_maps(d: usize) -> Vec<Vec<usize>> {
    (0..d.pow(d as u32)).map(|i| ffun::digits_of(i, d, d)).collect()
}

fn check_rule_scale(rule: &PostSelectionRule) -> Result<()> {
    let n = rule.n();
    let max_n = if rule.form == RuleForm::Input && rule.d == 3 { 6 } else { 4 };
    if rule.xbits > 2 || rule.d > 3 || n > max_n {
        return Err(Error::CapExceeded {
            what: "post-selection brute force",
            reached: n as u128,
            limit: max_n as u128,
            progress: format!("supported: |x| <= 2, d <= 3, n <= {max_n}; got |x|={}, d={}", rule.xbits, rule.d),
        });
    }
    Ok(())
}

/// Hull of deterministic local strategies (m_j = phi_j(s_j)) after
/// post-selection, over x.
pub fn lhv_space_under_rule(rule: &PostSelectionRule, caps: &Caps) -> Result<RuleHull> {
    check_rule_scale(rule)?;
    let verdict = classify_rule(rule)?;
    let (d, n) = (rule.d, rule.n());
    let xscen = Scenario::new(rule.xbits, d, d)?;
    let nx = xscen.inputs();
    let maps = all_maps(d);
    let mut points: Vec<RulePoint> = Vec::new();
    let mut excluded = 0u128;
    if rule.form == RuleForm::Input {
        // deterministic: f(x) = sum_j phi_j(g_j(x)); grow the sumset site by site
        let mut reach: BTreeMap<Vec<usize>, Vec<Vec<usize>>> = BTreeMap::new();
        reach.insert(vec![0; nx], Vec::new());
        for j in 0..n {
            let mut next = BTreeMap::new();
            for (f, asg) in &reach {
                for phi in &maps {
                    let g: Vec<usize> = (0..nx).map(|x| (f[x] + phi[rule.g[j].table[x]]) % d).collect();
                    next.entry(g).or_insert_with(|| {
                        let mut a = asg.clone();
                        a.push(phi.clone());
                        a
                    });
                }
            }
            reach = next;
            if reach.len() as u128 > caps.max_functions {
                return Err(Error::CapExceeded { what: "reachable functions", reached: reach.len() as u128, limit: caps.max_functions, progress: format!("after site {}", j + 1) });
            }
        }
        let acc = vec![Q::new(1.into(), (d as i64).pow(n as u32).into()); nx];
        for (f, asg) in reach {
            let fun = FiniteFunction::new(xscen, f).expect("reduced");
            points.push(RulePoint { assignment: asg, correlator: fun.correlator(), acceptance: acc.clone() });
        }
    } else {
        let total = (maps.len() as u128).pow(n as u32);
        if total > caps.max_functions {
            return Err(Error::CapExceeded { what: "local assignments", reached: total, limit: caps.max_functions, progress: String::new() });
        }
        let sscen = Scenario::new(n, d, d)?;
        let mut seen: BTreeSet<Vec<Q>> = BTreeSet::new();
        for a in 0..total as usize {
            let asg: Vec<Vec<usize>> = ffun::digits_of(a, n, maps.len()).into_iter().map(|i| maps[i].clone()).collect();
            let mut corr = vec![Q::zero(); nx * (d - 1)];
            let mut acc = Vec::with_capacity(nx);
            let mut ok = true;
            for x in 0..nx {
                let xd = xscen.digits(x);
                let mut hits = vec![0i64; d];
                for s in 0..sscen.inputs() {
                    let sd = sscen.digits(s);
                    let m: Vec<usize> = (0..n).map(|j| asg[j][sd[j]]).collect();
                    if (0..n).all(|j| rule.eval(j, &xd, &m) == sd[j]) {
                        hits[m.iter().sum::<usize>() % d] += 1;
                    }
                }
                let cnt: i64 = hits.iter().sum();
                if cnt == 0 {
                    ok = false;
                    break;
                }
                for k in 1..d {
                    corr[x * (d - 1) + k - 1] = qr(hits[k], cnt);
                }
                acc.push(qr(cnt, sscen.inputs() as i64));
            }
            if !ok {
                excluded += 1;
                continue;
            }
            if seen.insert(corr.clone()) {
                points.push(RulePoint { assignment: asg, correlator: corr, acceptance: acc });
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("the rule accepts nothing for some x under every assignment".into()));
        }
    }
    let inside = linear_hull_test(xscen, caps)?;
    let outside: Vec<usize> = (0..points.len()).filter(|&i| !inside(&points[i])).collect();
    let functions: BTreeSet<Vec<usize>> = points.iter().filter_map(|p| p.function(xscen)).map(|f| f.table).collect();
    let all = (d as u128).checked_pow(nx as u32).is_some_and(|t| functions.len() as u128 == t);
    Ok(RuleHull { verdict, exceeds_linear_hull: !outside.is_empty(), outside, points, reaches_all_functions: all, excluded_assignments: excluded })
}

type InsideTest = Box<dyn Fn(&RulePoint) -> bool>;

/// Membership in the hull of n-partite linear functions on x: a function
/// test for deterministic points, facets for the rest (binary only).
fn linear_hull_test(xscen: Scenario, caps: &Caps) -> Result<InsideTest> {
    let facets = if xscen.d == 2 { Some(poly::lhv_polytope(xscen, caps)?.facets.unwrap_or_default()) } else { None };
    Ok(Box::new(move |p: &RulePoint| match p.function(xscen) {
        Some(f) => ffun::is_npartite_linear(&f),
        None => match &facets {
            Some(fs) => fs.iter().all(|h| h.satisfied_by(&p.correlator)),
            None => false,
        },
    }))
}

#[derive(Debug, Clone)]
pub struct ExhaustiveReport {
    pub n: usize,
    pub class: RuleClass,
    pub rules: u64,
    pub points_checked: u64,
    pub all_inside: bool,
    pub first_violation: Option<String>,
}

/// Every binary LI (`output_input = false`) or LOI rule on two x bits with n
/// sites, against every deterministic assignment. Rule constants are fixed to
/// zero for LOI at n = 4: shifting s_j by b_j is a relabelling of phi_j, so
/// it does not change the hull.
pub fn exhaustive_linear_rules(n: usize, output_input: bool) -> Result<ExhaustiveReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::CapExceeded { what: "exhaustive rule parties", reached: n as u128, limit: 4, progress: String::new() });
    }
    let xs = 4usize;
    // CHSH-type facets of the binary square in expectation form:
    // sum_x (-1)^{h(x)} E(x) <= 2 for the eight nonlinear h
    let chsh: Vec<[i64; 4]> = (0..16u32)
        .filter(|h| h.count_ones() % 2 == 1)
        .map(|h| std::array::from_fn(|x| if h >> x & 1 == 1 { -1 } else { 1 }))
        .collect();
    let inside = |num: &[i64; 4], den: &[i64; 4]| -> bool {
        // E(x) = num / den, compare with a common denominator of 2^n
        let l = 1i64 << n;
        let e: [i64; 4] = std::array::from_fn(|x| num[x] * (l / den[x]));
        chsh.iter().all(|c| (0..4).map(|x| c[x] * e[x]).sum::<i64>() <= 2 * l)
    };
    let cmasks: Vec<Vec<u32>> = if output_input {
        // row j: which other outputs enter g_j
        let per: Vec<Vec<u32>> = (0..n).map(|j| (0..1u32 << n).filter(|c| c >> j & 1 == 0).collect()).collect();
        let mut all = vec![Vec::new()];
        for p in &per {
            all = all.iter().flat_map(|pre| p.iter().map(move |&c| { let mut v = pre.clone(); v.push(c); v })).collect();
        }
        all
    } else {
        vec![vec![0; n]]
    };
    let offsets = if output_input && n == 4 { 1u32 } else { 1 << n };
    let mut rules = 0u64;
    let mut checked = 0u64;
    let mut bucket_cnt = vec![0i64; 1 << n];
    let mut bucket_one = vec![0i64; 1 << n];
    for cm in &cmasks {
        for alpha in 0..1u32 << n {
            for beta in 0..1u32 << n {
                // key(s) = s + C m(s); accepted for x iff key = A x + b
                bucket_cnt.iter_mut().for_each(|c| *c = 0);
                bucket_one.iter_mut().for_each(|c| *c = 0);
                for s in 0..1u32 << n {
                    let m = (alpha & s) ^ beta;
                    let mut key = s;
                    for (j, &c) in cm.iter().enumerate() {
                        key ^= ((c & m).count_ones() & 1) << j;
                    }
                    bucket_cnt[key as usize] += 1;
                    bucket_one[key as usize] += (m.count_ones() & 1) as i64;
                }
                for a in 0..1u32 << (2 * n) {
                    for b in 0..offsets {
                        let mut num = [0i64; 4];
                        let mut den = [0i64; 4];
                        let mut ok = true;
                        for x in 0..xs as u32 {
                            let (x1, x2) = (x >> 1 & 1, x & 1);
                            let mut key = b;
                            for j in 0..n {
                                let (a1, a2) = (a >> (2 * j + 1) & 1, a >> (2 * j) & 1);
                                key ^= ((a1 & x1) ^ (a2 & x2)) << j;
                            }
                            let c = bucket_cnt[key as usize];
                            if c == 0 {
                                ok = false;
                                break;
                            }
                            num[x as usize] = c - 2 * bucket_one[key as usize];
                            den[x as usize] = c;
                        }
                        if alpha == 0 && beta == 0 {
                            rules += 1;
                        }
                        if !ok {
                            continue;
                        }
                        checked += 1;
                        if !inside(&num, &den) {
                            return Ok(ExhaustiveReport {
                                n,
                                class: if output_input { RuleClass::Loi } else { RuleClass::Li },
                                rules,
                                points_checked: checked,
                                all_inside: false,
                                first_violation: Some(format!("A={a:b} b={b:b} C={cm:?} alpha={alpha:b} beta={beta:b}")),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ExhaustiveReport { n, class: if output_input { RuleClass::Loi } else { RuleClass::Li }, rules, points_checked: checked, all_inside: true, first_violation: None })
}

/// Functions on x reachable with n sites under all AI (or PI) rules at
/// once: the n-fold sumset of {phi(h(x))} over local maps phi and affine
/// (or n-partite linear) h.
pub fn reachable_under_all_rules(d: usize, xbits: usize, n: usize, partite: bool) -> Result<BTreeSet<Vec<usize>>> {
    if xbits > 2 || d > 3 || n > 6 {
        return Err(Error::CapExceeded { what: "rule closure", reached: n as u128, limit: 6, progress: "|x| <= 2, d <= 3".into() });
    }
    let xscen = Scenario::new(xbits, d, d)?;
    let nx = xscen.inputs();
    let hs: Vec<Vec<usize>> = ffun::enumerate_all_functions(xscen, &Caps::default())?
        .into_iter()
        .filter(|h| if partite { ffun::is_npartite_linear(h) } else { ffun::is_affine(h) })
        .map(|h| h.table)
        .collect();
    let mut atoms: BTreeSet<Vec<usize>> = BTreeSet::new();
    for h in &hs {
        for phi in all_maps(d) {
            atoms.insert(h.iter().map(|&v| phi[v]).collect());
        }
    }
    let mut reach: BTreeSet<Vec<usize>> = BTreeSet::from([vec![0; nx]]);
    for _ in 0..n {
        reach = reach.iter().flat_map(|f| atoms.iter().map(move |a| (0..nx).map(|x| (f[x] + a[x]) % d).collect())).collect();
    }
    Ok(reach)
}

fn inv_mod(a: usize, p: usize) -> Option<usize> {
    (1..p).find(|&b| a * b % p == 1)
}

/// Coefficients a_z of f(x) = sum_z a_z x1^z1 x2^z2 over Z_p, p prime.
pub fn polynomial_coefficients(f: &FiniteFunction) -> Result<Vec<Vec<usize>>> {
    let scen = f.scenario;
    let p = scen.d;
    if scen.n != 2 || scen.c != p || !ffun::is_prime(p) {
        return Err(Error::InvalidInput("need a function on two digits of Z_p, p prime".into()));
    }
    // 1 - (x - c)^{p-1} as a polynomial in x
    let binom = |n: usize, k: usize| -> usize { (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1)) % p };
    let pw = |b: usize, e: usize| -> usize { (0..e).fold(1usize, |acc, _| acc * b % p) };
    let delta = |c: usize| -> Vec<usize> {
        let mut poly = vec![0usize; p];
        poly[0] = 1;
        for (i, slot) in poly.iter_mut().enumerate() {
            // binom(p-1, i) (-c)^{p-1-i}
            let t = binom(p - 1, i) * pw((p - c % p) % p, p - 1 - i) % p;
            *slot = (*slot + p - t) % p;
        }
        poly
    };
    let mut a = vec![vec![0usize; p]; p];
    for c1 in 0..p {
        for c2 in 0..p {
            let v = f.eval(&[c1, c2]);
            if v == 0 {
                continue;
            }
            let (u, w) = (delta(c1), delta(c2));
            for i in 0..p {
                for j in 0..p {
                    a[i][j] = (a[i][j] + v * u[i] % p * w[j]) % p;
                }
            }
        }
    }
    Ok(a)
}

/// A PI protocol reproducing f on two digits of Z_d (d prime, d >= 3):
/// monomials in one digit use one site, and c x1^y1 x2^y2 uses triples
/// (x1^y1 + x2^y2)^2 - x1^{2y1} - x2^{2y2} = 2 x1^y1 x2^y2, repeated
/// c / 2 times mod d.
#[derive(Debug, Clone)]
pub struct PiProtocol {
    pub rule: PostSelectionRule,
    pub assignment: Vec<Vec<usize>>,
    pub verified: bool,
}

pub fn pi_protocol(f: &FiniteFunction) -> Result<PiProtocol> {
    let d = f.scenario.d;
    if d < 3 {
        return Err(Error::InvalidInput("the PI construction needs d >= 3".into()));
    }
    let a = polynomial_coefficients(f)?;
    let xscen = f.scenario;
    let pw = |b: usize, e: usize| -> usize { (0..e).fold(1usize, |acc, _| acc * b % d) };
    let inv2 = inv_mod(2, d).expect("d odd prime");
    let mut g: Vec<FiniteFunction> = Vec::new();
    let mut phis: Vec<Vec<usize>> = Vec::new();
    let ident: Vec<usize> = (0..d).collect();
    let square: Vec<usize> = (0..d).map(|v| v * v % d).collect();
    let neg: Vec<usize> = (0..d).map(|v| (d - v) % d).collect();
    for (z1, row) in a.iter().enumerate() {
        for (z2, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if z1 == 0 || z2 == 0 {
                g.push(FiniteFunction::from_fn(xscen, |x| c * pw(x[0], z1) * pw(x[1], z2)));
                phis.push(ident.clone());
                continue;
            }
            for _ in 0..c * inv2 % d {
                g.push(FiniteFunction::from_fn(xscen, |x| pw(x[0], z1) + pw(x[1], z2)));
                phis.push(square.clone());
                g.push(FiniteFunction::from_fn(xscen, |x| pw(x[0], 2 * z1)));
                phis.push(neg.clone());
                g.push(FiniteFunction::from_fn(xscen, |x| pw(x[1], 2 * z2)));
                phis.push(neg.clone());
            }
        }
    }
    if g.is_empty() {
        g.push(FiniteFunction::constant(xscen, 0));
        phis.push(vec![0; d]);
    }
    let rule = PostSelectionRule::input(d, 2, g)?;
    let verified = (0..xscen.inputs()).all(|x| {
        let xd = xscen.digits(x);
        let out: usize = (0..rule.n()).map(|j| phis[j][rule.eval(j, &xd, &[])]).sum();
        out % d == f.table[x]
    });
    Ok(PiProtocol { rule, assignment: phis, verified })
}

// ------------------------------------------------- quantum under LOI / AI

/// The triple-block LOI schedule computing prod_j x_j with n = 3(|x|-1)
/// parties, and its verification on GHZ blocks.
#[derive(Debug, Clone)]
pub struct LoiProtocol {
    pub xbits: usize,
    pub n: usize,
    pub rule: PostSelectionRule,
    /// measurement angles per block: site j measures cos a X + sin a Y with
    /// a = s_j theta_j
    pub block_angles: AngleConfig,
    /// every x gives the product with probability 1
    pub verified: bool,
    /// smallest deviation of |E| from 1 over all blocks and inputs
    pub worst_deviation: f64,
}

pub fn loi_product_protocol(xbits: usize, caps: &Caps) -> Result<LoiProtocol> {
    if xbits < 2 {
        return Err(Error::InvalidInput("the product protocol needs |x| >= 2".into()));
    }
    let blocks = xbits - 1;
    let n = 3 * blocks;
    let arity = xbits + n - 1;
    if arity >= 63 || (1usize << arity) > caps.max_table {
        return Err(Error::CapExceeded { what: "rule table", reached: 1u128 << arity.min(120), limit: caps.max_table as u128, progress: format!("|x|={xbits}") });
    }
    let mut rows = Vec::with_capacity(n);
    let unit = |i: usize, len: usize| -> Vec<usize> { (0..len).map(|t| usize::from(t == i)).collect() };
    // first block: s1 = x1, s2 = x2, s3 = x1 + x2
    rows.push(LinearRow { x: unit(0, xbits), m: vec![0; n], b: 0 });
    rows.push(LinearRow { x: unit(1, xbits), m: vec![0; n], b: 0 });
    rows.push(LinearRow { x: (0..xbits).map(|t| usize::from(t < 2)).collect(), m: vec![0; n], b: 0 });
    for k in 1..blocks {
        let j = 3 * k;
        let prefix: Vec<usize> = (0..n).map(|i| usize::from(i < j)).collect();
        rows.push(LinearRow { x: vec![0; xbits], m: prefix.clone(), b: 0 });
        rows.push(LinearRow { x: unit(k + 1, xbits), m: vec![0; n], b: 1 });
        rows.push(LinearRow { x: unit(k + 1, xbits), m: prefix, b: 1 });
    }
    let rule = PostSelectionRule::linear(2, xbits, &rows)?;
    let half = std::f64::consts::FRAC_PI_2;
    let block_angles = AngleConfig::new(vec![half, half, -half], 0.0);
    let xscen = Scenario::new(xbits, 2, 2)?;
    // each block may only read outputs of earlier blocks
    let mut verified = !(0..blocks).any(|b| rule_reads_later_outputs(&rule, 3 * b, xbits));
    let mut worst = 0.0f64;
    for x in 0..xscen.inputs() {
        let xd = xscen.digits(x);
        let target = xd.iter().product::<usize>();
        // branch over outcome patterns of earlier blocks
        let mut branches: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
        for b in 0..blocks {
            let mut next = Vec::new();
            for (m, pr) in branches {
                let mut full = m.clone();
                full.resize(n, 0);
                let s: Vec<usize> = (0..3).map(|t| rule.eval(3 * b + t, &xd, &full)).collect();
                let e = qopt::ghz_expectation(&block_angles, &ffun::DigitString::new(s.clone(), 2)?);
                worst = worst.max((1.0 - e.abs()).abs());
                for pattern in 0..8usize {
                    let mb: Vec<usize> = (0..3).map(|t| pattern >> (2 - t) & 1).collect();
                    let parity = mb.iter().sum::<usize>() % 2;
                    let sign = if parity == 0 { 1.0 } else { -1.0 };
                    let p = (1.0 + sign * e) / 8.0;
                    if p > 1e-12 {
                        let mut mm = m.clone();
                        mm.extend(&mb);
                        next.push((mm, pr * p));
                    }
                }
            }
            branches = next;
        }
        let total: f64 = branches.iter().map(|(_, p)| p).sum();
        let good: f64 = branches.iter().filter(|(m, _)| m.iter().sum::<usize>() % 2 == target).map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 || (good - 1.0).abs() > 1e-9 {
            verified = false;
        }
    }
    Ok(LoiProtocol { xbits, n, rule, block_angles, verified: verified && worst < 1e-12, worst_deviation: worst })
}

/// Does any site of the block starting at `first` read outputs of its own
/// block or later ones?
fn rule_reads_later_outputs(rule: &PostSelectionRule, first: usize, xbits: usize) -> bool {
    if rule.form == RuleForm::Input {
        return false;
    }
    let n = rule.n();
    (first..first + 3).any(|j| {
        let gj = &rule.g[j];
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        (0..gj.scenario.inputs()).any(|i| {
            let a = gj.scenario.digits(i);
            let mut cut = a.clone();
            for (pos, &site) in others.iter().enumerate() {
                if site >= first {
                    cut[xbits + pos] = 0;
                }
            }
            gj.eval(&cut) != gj.table[i]
        })
    })
}

/// The d = 3 AI example: rule s = (x1, x2, x1 + x2) on a three-site GHZ
/// state, target f = (x1 x2)^2 + 1, value (1/9) sum_x p(f(x)|x).
#[derive(Debug, Clone)]
pub struct AiQuantumReport {
    pub value: f64,
    pub stage1_value: f64,
    pub lhv_bound: Q,
    /// phases[j][v][k] of the measurement basis for site j and input v
    pub phases: Vec<Vec<Vec<f64>>>,
    pub restarts_used: usize,
}

impl AiQuantumReport {
    pub fn violates(&self) -> bool {
        self.value > rat::to_f64(&self.lhv_bound) + 1e-9
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "value": qopt_round(self.value),
            "stage1_value": qopt_round(self.stage1_value),
            "lhv_bound": rat::to_pair(&self.lhv_bound),
            "restarts_used": self.restarts_used,
            "phases": self.phases,
        })
    }
}

fn ai_target(x1: usize, x2: usize) -> usize {
    ((x1 * x2).pow(2) + 1) % 3
}

fn ai_phases(p: &[f64]) -> Vec<Vec<Vec<f64>>> {
    (0..3).map(|j| (0..3).map(|v| vec![0.0, p[(j * 3 + v) * 2], p[(j * 3 + v) * 2 + 1]]).collect()).collect()
}

/// p(K|s) for the d-dimensional three-site GHZ state measured in bases
/// u_k = D(phases) F e_k: (1/d) |sum_k e^{-i Phi_k} w^{-kK}|^2 / d.
pub fn ghz3_correlator(phases: &[Vec<Vec<f64>>], s: &[usize], kk: usize, d: usize) -> f64 {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    let z: Complex64 = (0..d)
        .map(|k| {
            let phi: f64 = (0..s.len()).map(|j| phases[j][s[j]][k]).sum();
            Complex64::from_polar(1.0, -phi - w * (k * kk) as f64)
        })
        .sum();
    z.norm_sqr() / (d * d) as f64
}

fn ai_value(phases: &[Vec<Vec<f64>>]) -> f64 {
    let mut tot = 0.0;
    for x1 in 0..3 {
        for x2 in 0..3 {
            tot += ghz3_correlator(phases, &[x1, x2, (x1 + x2) % 3], ai_target(x1, x2), 3);
        }
    }
    tot / 9.0
}

/// Top eigenvalue of the Bell operator at fixed measurements: the best
/// state for those measurements.
fn ai_operator_value(phases: &[Vec<Vec<f64>>]) -> Result<f64> {
    let d = 3usize;
    let w = 2.0 * std::f64::consts::PI / d as f64;
    let vec_for = |ph: &[f64], k: usize| -> Vec<Complex64> {
        (0..d).map(|m| Complex64::from_polar(1.0 / (d as f64).sqrt(), ph[m] + w * (m * k) as f64)).collect()
    };
    let dim = d * d * d;
    let mut h = vec![Complex64::new(0.0, 0.0); dim * dim];
    for x1 in 0..3 {
        for x2 in 0..3 {
            let s = [x1, x2, (x1 + x2) % 3];
            let t = ai_target(x1, x2);
            for m1 in 0..d {
                for m2 in 0..d {
                    let m3 = (3 * d + t - m1 - m2) % d;
                    let (a, b, c) = (vec_for(&phases[0][s[0]], m1), vec_for(&phases[1][s[1]], m2), vec_for(&phases[2][s[2]], m3));
                    let v: Vec<Complex64> = (0..dim).map(|i| a[i / 9] * b[i / 3 % 3] * c[i % 3]).collect();
                    for r in 0..dim {
                        for col in 0..dim {
                            h[r * dim + col] += v[r] * v[col].conj() / 9.0;
                        }
                    }
                }
            }
        }
    }
    let (lam, _, _) = qopt::jacobi::top_eigen(&h, dim, 1e-9)?;
    Ok(lam)
}

pub fn ai_quantum_example(restarts: usize, seed: u64) -> Result<AiQuantumReport> {
    let opts = nm::NmOptions::default();
    let starts = nm::start_points(18, restarts.max(1), -std::f64::consts::PI, std::f64::consts::PI, seed);
    let f = |p: &[f64]| -ai_value(&ai_phases(p));
    let ms = nm::multi_start(&f, &starts, &opts);
    let phases = ai_phases(&ms.best.x);
    let stage1 = -ms.best.fx;
    let op = ai_operator_value(&phases)?;
    Ok(AiQuantumReport { value: stage1.max(op), stage1_value: stage1, lhv_bound: qr(8, 9), phases, restarts_used: starts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> Caps {
        Caps::default()
    }

    #[test]
    fn gm_and_mk() {
        let g = gm_threshold();
        assert!((p_joint(g.eta_required, 2) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let m2 = mk_threshold(2).unwrap();
        assert!((m2.eta_required - g.eta_required).abs() < 1e-12);
        let m3 = mk_threshold(3).unwrap();
        assert!((m3.eta_required - (21f64.sqrt() - 3.0) / 2.0).abs() < 1e-9);
        assert!(m3.residual < 1e-12);
    }

    #[test]
    fn strategies() {
        let gm = DetectionStrategy::gm().stats();
        assert_eq!(gm.p_joint, qr(1, 2));
        assert!(gm.detection_independent_of_input() && gm.detection_uniform());
        // 1/2 (-1)^{s1 s2}
        assert_eq!(gm.ebar, vec![qr(1, 2), qr(1, 2), qr(1, 2), qr(-1, 2)]);
        let mk = DetectionStrategy::mk(3).unwrap().stats();
        assert_eq!(mk.p_joint, qr(1, 4));
        assert!(mk.detection_uniform());
        let demo = DetectionStrategy::asymmetric_demo(3).unwrap().stats();
        assert!(!demo.detection_uniform());
        let plain = DetectionStrategy::all_detect(&[1, 0], &[0, 1]).unwrap().stats();
        assert_eq!(plain.p_joint, Q::one());
    }

    #[test]
    fn postselected_two_sites() {
        let pts = postselected_lhv_points(2, &caps()).unwrap();
        let at = |p: Q| pts.iter().filter(|x| x.p_joint == p).count();
        assert_eq!(at(Q::one()), 8);
        assert_eq!(at(qr(1, 2)), 8);
        assert_eq!(at(qr(1, 4)), 16);
        let chsh = [1, 1, 1, -1].map(|v| Q::from_integer(v.into()));
        assert_eq!(max_expectation(&chsh, &pts), Some(Q::from_integer(2.into())));
    }

    #[test]
    fn rule_classes() {
        let r = PostSelectionRule::linear(2, 2, &[
            LinearRow { x: vec![1, 0], m: vec![], b: 0 },
            LinearRow { x: vec![0, 1], m: vec![], b: 0 },
            LinearRow { x: vec![1, 1], m: vec![], b: 0 },
        ])
        .unwrap();
        assert_eq!(classify_rule(&r).unwrap().class, RuleClass::Li);
        let h = lhv_space_under_rule(&r, &caps()).unwrap();
        assert!(!h.exceeds_linear_hull);
        assert_eq!(h.points.len(), 8);

        let loi = PostSelectionRule::linear(2, 2, &[
            LinearRow { x: vec![1, 0], m: vec![0, 1], b: 0 },
            LinearRow { x: vec![0, 1], m: vec![0, 0], b: 0 },
        ])
        .unwrap();
        assert_eq!(classify_rule(&loi).unwrap(), RuleVerdict { class: RuleClass::Loi, loophole_free: true });
        assert!(!lhv_space_under_rule(&loi, &caps()).unwrap().exceeds_linear_hull);

        let xs = Scenario::new(2, 2, 2).unwrap();
        let gen = PostSelectionRule::input(2, 2, vec![FiniteFunction::from_fn(xs, |x| x[0] * x[1]), FiniteFunction::from_fn(xs, |x| x[1])]).unwrap();
        assert_eq!(classify_rule(&gen).unwrap().class, RuleClass::General);
        assert!(lhv_space_under_rule(&gen, &caps()).unwrap().exceeds_linear_hull);
    }

    #[test]
    fn linear_rules_stay_inside_small() {
        for oi in [false, true] {
            for n in 1..=3 {
                assert!(exhaustive_linear_rules(n, oi).unwrap().all_inside, "n={n} oi={oi}");
            }
        }
    }

    #[test]
    fn ai_and_pi() {
        let xs = Scenario::new(2, 3, 3).unwrap();
        let rule = PostSelectionRule::linear(3, 2, &[
            LinearRow { x: vec![1, 0], m: vec![], b: 0 },
            LinearRow { x: vec![0, 1], m: vec![], b: 0 },
            LinearRow { x: vec![1, 1], m: vec![], b: 0 },
        ])
        .unwrap();
        assert_eq!(classify_rule(&rule).unwrap().class, RuleClass::Ai);
        let h = lhv_space_under_rule(&rule, &caps()).unwrap();
        assert!(h.exceeds_linear_hull && !h.reaches_all_functions);
        let f = FiniteFunction::from_fn(xs, |x| ai_target(x[0], x[1]));
        assert!(!h.achieves(&f));

        let prod = FiniteFunction::from_fn(xs, |x| x[0] * x[1]);
        let p = pi_protocol(&prod).unwrap();
        assert!(p.verified);
        assert_eq!(p.rule.n(), 6);
        assert_eq!(classify_rule(&p.rule).unwrap().class, RuleClass::Pi);
    }

    #[test]
    fn polynomial_round_trip() {
        let xs = Scenario::new(2, 3, 3).unwrap();
        let f = FiniteFunction::from_fn(xs, |x| ai_target(x[0], x[1]));
        let a = polynomial_coefficients(&f).unwrap();
        for x1 in 0..3 {
            for x2 in 0..3 {
                let mut v = 0;
                for (z1, row) in a.iter().enumerate() {
                    for (z2, &c) in row.iter().enumerate() {
                        v += c * x1usize_pow(x1, z1) * x1usize_pow(x2, z2);
                    }
                }
                assert_eq!(v % 3, f.eval(&[x1, x2]));
            }
        }
    }

    fn x1usize_pow(b: usize, e: usize) -> usize {
        b.pow(e as u32)
    }

    #[test]
    fn loi_blocks() {
        for xb in 2..=4 {
            let p = loi_product_protocol(xb, &caps()).unwrap();
            assert_eq!(p.n, 3 * (xb - 1));
            assert!(p.verified, "|x|={xb}");
            assert_eq!(classify_rule(&p.rule).unwrap().class, if xb == 2 { RuleClass::Li } else { RuleClass::Loi });
        }
    }

    #[test]
    fn ghz3_closed_form_matches_dense() {
        let phases: Vec<Vec<Vec<f64>>> = (0..3).map(|j| (0..3).map(|v| vec![0.0, 0.3 * j as f64 + v as f64, -0.7 + 0.2 * v as f64]).collect()).collect();
        let d = 3usize;
        let w = 2.0 * std::f64::consts::PI / 3.0;
        let s = [2usize, 0, 1];
        let u = |ph: &[f64], k: usize| -> Vec<Complex64> { (0..d).map(|m| Complex64::from_polar(1.0 / 3f64.sqrt(), ph[m] + w * (m * k) as f64)).collect() };
        for kk in 0..3 {
            let mut dense = 0.0;
            for m1 in 0..3 {
                for m2 in 0..3 {
                    let m3 = (6 + kk - m1 - m2) % 3;
                    let (a, b, c) = (u(&phases[0][s[0]], m1), u(&phases[1][s[1]], m2), u(&phases[2][s[2]], m3));
                    let amp: Complex64 = (0..3).map(|k| (a[k] * b[k] * c[k]).conj()).sum::<Complex64>() / 3f64.sqrt();
                    dense += amp.norm_sqr();
                }
            }
            assert!((dense - ghz3_correlator(&phases, &s, kk, 3)).abs() < 1e-12);
        }
    }
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use bellscope::ineq::{self, catalog, parse_catalog_id};
use bellscope::loophole::{self, DetectionStrategy, PostSelectionRule};
use bellscope::nmbqc::{self, PMatrix};
use bellscope::qopt::{self, QoptOptions};
use bellscope::{ffun, nosig, poly, rat, sym, BellInequality, Caps, FiniteFunction, GameSpec, Q, Scenario};
use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::render::{self, csv_field, fmt12, Format, Report};
use crate::tables::{self, TableOptions};
use crate::{need_scenario, Command, Global, Outcome};

#[derive(Args, Debug)]
pub struct IneqArgs {
    /// chsh, cglmp, mermin, mermin_klyshko, svetlichny3, gen_new or a table entry (C1_d4, B1, ...)
    #[arg(long, conflicts_with = "ineq")]
    pub catalog: Option<String>,
    /// outputs, for cglmp
    #[arg(long)]
    pub d: Option<usize>,
    /// parties, for mermin / mermin_klyshko / gen_new
    #[arg(long)]
    pub n: Option<usize>,
    /// inequality JSON: {"scenario":[n,c,d], "coeffs":[...]}; entries are integers or [num,den]
    #[arg(long)]
    pub ineq: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Ww,
    Mbs,
}

#[derive(Args, Debug)]
pub struct FunctionArgs {
    /// truth table digits in input order, comma separated
    #[arg(long, conflicts_with = "hex")]
    pub table: Option<String>,
    /// binary truth table as hex, bit i = f(input i)
    #[arg(long)]
    pub hex: Option<String>,
    /// input weights, comma separated rationals (default uniform)
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Args, Debug)]
pub struct BoolTarget {
    /// number of input bits
    #[arg(long)]
    pub xbits: usize,
    /// hex truth table, bit i = f(x) with x_1 the most significant bit of i
    #[arg(long)]
    pub f: String,
}

#[derive(Subcommand, Debug)]
pub enum NmbqcCmd {
    /// Decide deterministic computability for a fixed P
    Decide {
        #[command(flatten)]
        target: BoolTarget,
        /// rows of P as bit strings, comma separated (e.g. 10,01,11)
        #[arg(long)]
        p: String,
    },
    /// Fewest parties over all P
    Minimal {
        #[command(flatten)]
        target: BoolTarget,
    },
    /// GHZ paradox table for a deterministic computation
    Paradox {
        #[command(flatten)]
        target: BoolTarget,
        #[arg(long)]
        p: String,
    },
    /// The partial non-signalling box of the computation
    PrBox {
        #[command(flatten)]
        target: BoolTarget,
        #[arg(long)]
        p: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum NosigCmd {
    /// Equalities and dimension of the non-signalling polytope
    Constraints,
    /// Vertices of the non-signalling polytope
    Vertices,
    /// Is the non-signalling box realising the vertex of f unique?
    Unique(FunctionArgs),
}

#[derive(Subcommand, Debug)]
pub enum LoopholeCmd {
    /// CHSH efficiency threshold
    Gm,
    /// Mermin-Klyshko efficiency threshold
    Mk {
        #[arg(long)]
        n: usize,
    },
    /// Class of a post-selection rule
    Classify {
        #[arg(long)]
        rule: PathBuf,
    },
    /// Deterministic LHV correlators surviving a post-selection rule
    Hull {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long)]
        xbits: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Extreme points of the detection post-selected expectation space
    Points {
        #[arg(long)]
        n: usize,
    },
    /// Statistics of a named detection strategy
    Strategy {
        #[arg(long, value_enum)]
        name: StrategyName,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// All binary linear rules on two x bits against all local strategies
    Exhaustive {
        #[arg(long)]
        n: usize,
        /// rules may also read the other sites' outputs
        #[arg(long)]
        output_input: bool,
    },
    /// Product of |x| bits from GHZ triples under a linear output-input rule
    Loi {
        #[arg(long)]
        xbits: usize,
    },
    /// n-partite linear rule reproducing a function of two Z_d digits
    Pi(FunctionArgs),
    /// The d = 3 affine-rule quantum example
    AiQuantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    Gm,
    Mk,
    Demo,
}

fn caps(g: &Global) -> Caps {
    let c = Caps::default();
    match g.cap_rays {
        Some(r) => c.with_rays(r),
        None => c,
    }
}

fn qopts(g: &Global) -> QoptOptions {
    QoptOptions { restarts: g.restarts, seed: g.seed, ..QoptOptions::default() }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .enumerate()
        .map(|(i, p)| p.trim().parse::<T>().map_err(|e| anyhow!("{what} entry {} ('{}'): {e}", i + 1, p.trim())))
        .collect()
}

fn function_from(args: &FunctionArgs, scen: Scenario) -> anyhow::Result<FiniteFunction> {
    match (&args.table, &args.hex) {
        (Some(t), _) => Ok(FiniteFunction::new(scen, parse_list(t, "--table")?)?),
        (None, Some(h)) => {
            if scen.c != 2 || scen.d != 2 {
                bail!("--hex needs an (n,2,2) scenario");
            }
            Ok(nmbqc::function_from_hex(scen.n, h)?)
        }
        (None, None) => bail!("give the target as --table or --hex"),
    }
}

fn game_from(args: &FunctionArgs, scen: Scenario) -> anyhow::Result<GameSpec> {
    let f = function_from(args, scen)?;
    match &args.weights {
        None => Ok(GameSpec::uniform(f)),
        Some(w) => Ok(GameSpec::new(f, parse_list::<Q>(w, "--weights")?)?),
    }
}

fn pmatrix(xbits: usize, rows: &str) -> anyhow::Result<PMatrix> {
    let rows = rows
        .split(',')
        .enumerate()
        .map(|(i, r)| {
            r.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    _ => Err(anyhow!("--p row {}: '{}' is not a bit string", i + 1, r.trim())),
                })
                .collect::<anyhow::Result<Vec<u8>>>()
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(PMatrix::new(xbits, rows)?)
}

fn ineq_from(args: &IneqArgs, caps: &Caps) -> anyhow::Result<BellInequality> {
    if let Some(path) = &args.ineq {
        let v = read_json(path)?;
        let field = |k: &str| v.get(k).ok_or_else(|| anyhow!("{}: missing field '{k}'", path.display()));
        let sc: Vec<usize> = serde_json::from_value(field("scenario")?.clone())
            .map_err(|e| anyhow!("{}: field 'scenario': {e}", path.display()))?;
        let [n, c, d] = sc[..] else { bail!("{}: field 'scenario' must be [n,c,d]", path.display()) };
        let coeffs = field("coeffs")?
            .as_array()
            .ok_or_else(|| anyhow!("{}: field 'coeffs' must be an array", path.display()))?
            .iter()
            .enumerate()
            .map(|(i, x)| match x.as_i64() {
                Some(k) => Ok(rat::q(k)),
                None => rat::from_pair(x).ok_or_else(|| anyhow!("{}: coeffs[{i}] must be an integer or [num,den]", path.display())),
            })
            .collect::<anyhow::Result<Vec<Q>>>()?;
        return Ok(BellInequality::new(Scenario::new(n, c, d)?, coeffs, caps)?);
    }
    let name = args.catalog.as_deref().ok_or_else(|| anyhow!("give --catalog NAME or --ineq FILE"))?;
    let id = parse_catalog_id(name, args.d.or(args.n))?;
    Ok(catalog(id, caps)?)
}

fn ineq_text(i: &BellInequality) -> String {
    let s = i.scenario;
    let dm = s.d - 1;
    let mut terms = Vec::new();
    for (idx, c) in i.coeffs.iter().enumerate() {
        if c == &Q::from_integer(0.into()) {
            continue;
        }
        let digits: String = ffun::digits_of(idx / dm, s.n, s.c).iter().map(|x| x.to_string()).collect();
        terms.push(format!("{c} p({}|{digits})", idx % dm + 1));
    }
    format!("{} <= {}\n", terms.join(" + ").replace("+ -", "- "), i.lhv_bound)
}

pub fn dispatch(cmd: &Command, g: &Global) -> anyhow::Result<Outcome> {
    let caps = caps(g);
    let plan = |steps: Vec<String>| Ok(Outcome::Planned(steps));
    match cmd {
        Command::Vertices { list } => {
            let scen = need_scenario(g)?;
            if g.dry_run {
                return plan(vec![format!("ffun::Scenario::vertex_count({scen})"), format!("list: {list}")]);
            }
            let count = scen.vertex_count().ok_or_else(|| anyhow!("vertex count overflows"))?;
            let mut out = json!({"scenario": [scen.n, scen.c, scen.d], "vertices": render::count(count)});
            let mut csv = format!("n,c,d,vertices\n{},{},{},{count}\n", scen.n, scen.c, scen.d);
            if *list {
                let fs: Vec<FiniteFunction> = ffun::enumerate_lhv_vertex_functions(scen, &caps)?.collect();
                out["functions"] = Value::Array(fs.iter().map(|f| json!(f.table)).collect());
                csv = String::from("table\n");
                for f in &fs {
                    let t: Vec<String> = f.table.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(csv, "{}", csv_field(&t.join(",")));
                }
            }
            Ok(Outcome::Done(Report::new(out).text(format!("{count}\n")).csv(csv)))
        }
        Command::Facets { facet_file } => {
            let scen = need_scenario(g)?;
            if g.dry_run {
                return plan(vec![format!("poly::lhv_vertices({scen})"), "poly::hull_facets (double description)".into(), "write facet file".into()]);
            }
            let p = poly::lhv_polytope(scen, &caps)?;
            let ext = match g.output {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Text => "txt",
            };
            let path = facet_file.clone().unwrap_or_else(|| PathBuf::from(format!("facets-{}-{}-{}.{ext}", scen.n, scen.c, scen.d)));
            let body = match g.output {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&p.to_json())?;
                    s.push('\n');
                    s
                }
                Format::Csv => {
                    let mut s = String::from("coeffs,rhs\n");
                    for f in p.facets.iter().flatten() {
                        let c: Vec<String> = f.coeffs.iter().map(|x| x.to_string()).collect();
                        let _ = writeln!(s, "{},{}", csv_field(&c.join(",")), f.rhs);
                    }
                    s
                }
                Format::Text => p.facets_text(),
            };
            render::write_atomic(&path, &body)?;
            let n = p.facet_count();
            let out = json!({"scenario": [scen.n, scen.c, scen.d], "facets": n, "facet_file": path.display().to_string(), "affine_hull_dim": p.affine_hull_dim});
            Ok(Outcome::Done(Report::new(out).text(format!("{n}\n")).csv(format!("n,c,d,facets\n{},{},{},{n}\n", scen.n, scen.c, scen.d))))
        }
        Command::Orbits => {
            let scen = need_scenario(g)?;
            if g.dry_run {
                return plan(vec![format!("poly::lhv_polytope({scen})"), "sym::orbits_linear(facets)".into()]);
            }
            let p = poly::lhv_polytope(scen, &caps)?;
            let orbits = sym::orbits_linear(p.facets.as_deref().unwrap_or_default(), scen, &caps)?;
            let mut csv = String::from("orbit,size,trivial,lhv_bound,coeffs\n");
            let mut text = format!("{} facets, {} orbits\n", p.facet_count(), orbits.len());
            for (i, o) in orbits.iter().enumerate() {
                let r = &o.representative;
                let c: Vec<String> = r.coeffs.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(csv, "{},{},{},{},{}", i + 1, o.size, o.is_trivial(), r.lhv_bound, csv_field(&c.join(",")));
                let _ = write!(text, "[{}] size {}{}: {}", i + 1, o.size, if o.is_trivial() { " (trivial)" } else { "" }, ineq_text(r));
            }
            Ok(Outcome::Done(Report::new(sym::orbit_report(scen, &orbits)).csv(csv).text(text)))
        }
        Command::Qbound(a) => {
            if g.dry_run {
                return plan(vec!["ineq::catalog / read inequality".into(), format!("qopt::{:?} bound, {} restarts, seed {:#x}", a.method, g.restarts, g.seed)]);
            }
            let i = ineq_from(a, &caps)?;
            let s = i.scenario;
            let method = match a.method {
                Method::Auto if s.c == 2 && s.d == 2 => Method::Ww,
                Method::Auto => Method::Mbs,
                m => m,
            };
            let r = match method {
                Method::Ww => qopt::ww_bound(&i, &qopts(g))?,
                _ => qopt::mbs_bound(&i, &qopts(g))?,
            };
            let mut out = r.to_json();
            out["scenario"] = json!([s.n, s.c, s.d]);
            out["lhv_bound"] = rat::to_pair(&i.lhv_bound);
            out["algebraic_bound"] = rat::to_pair(&i.algebraic_bound);
            let mut text = format!("quantum bound {} ({})\nlhv bound {}\n", fmt12(r.value), r.certified_kind.label(), i.lhv_bound);
            if let Some(e) = r.optimal_state_entropy {
                let _ = writeln!(text, "entanglement {}", fmt12(e));
            }
            let csv = format!(
                "n,c,d,lhv_bound,quantum_bound,entanglement\n{},{},{},{},{},{}\n",
                s.n,
                s.c,
                s.d,
                i.lhv_bound,
                fmt12(r.value),
                r.optimal_state_entropy.map(fmt12).unwrap_or_default()
            );
            Ok(Outcome::Done(Report::new(out).text(text).csv(csv)))
        }
        Command::Nontrivial(a) => {
            let scen = need_scenario(g)?;
            if g.dry_run {
                return plan(vec!["read target function".into(), "ineq::nontrivial_from_function".into()]);
            }
            let game = game_from(a, scen)?;
            let i = ineq::nontrivial_from_function(&game, &caps)?;
            let csv = format!("coeffs,bound\n{}\n", i.to_csv_row());
            Ok(Outcome::Done(Report::new(i.to_json()).text(ineq_text(&i)).csv(csv)))
        }
        Command::Game(a) => {
            let scen = need_scenario(g)?;
            if g.dry_run {
                let mut p = vec!["read target function".into(), "ineq::classical_bound".into()];
                if scen.c == 2 && scen.d == 2 {
                    p.push("qopt::ww_bound on the game's Bell expression".into());
                }
                return plan(p);
            }
            let game = game_from(a, scen)?;
            let classical = ineq::classical_bound(&game, &caps)?;
            let mut out = json!({"scenario": [scen.n, scen.c, scen.d], "target": game.target.table, "classical_success": rat::to_pair(&classical)});
            let mut text = format!("classical success {classical} ({})\n", fmt12(rat::to_f64(&classical)));
            if scen.c == 2 && scen.d == 2 {
                // success = sum pi [f = 0] + sum pi (-1)^f p(1|s), linear in the correlators
                let coeffs: Vec<Q> = game
                    .target
                    .table
                    .iter()
                    .zip(&game.input_dist)
                    .map(|(&f, w)| if f == 1 { w.clone() } else { -w.clone() })
                    .collect();
                let i = BellInequality::new(scen, coeffs, &caps)?;
                let r = qopt::ww_bound(&i, &qopts(g))?;
                let zero: Q = game.target.table.iter().zip(&game.input_dist).filter(|(f, _)| **f == 0).map(|(_, w)| w.clone()).sum();
                let q = rat::to_f64(&zero) + r.value;
                out["quantum_success"] = json!(q);
                out["quantum_report"] = r.to_json();
                let _ = writeln!(text, "quantum success {} (GHZ family)", fmt12(q));
            }
            Ok(Outcome::Done(Report::new(out).text(text)))
        }
        Command::Nmbqc(c) => nmbqc_cmd(c, g, &caps),
        Command::Nosig(c) => nosig_cmd(c, g, &caps),
        Command::Svetlichny { facets } => {
            let scen = need_scenario(g)?;
            if g.dry_run {
                let mut p = vec![format!("ffun::enumerate_bipartite_linear_functions({scen})")];
                if *facets {
                    p.push("poly::hull_facets".into());
                }
                return plan(p);
            }
            let p = nosig::svetlichny_hull(scen, *facets, &caps)?;
            let nv = p.vertices.as_ref().map_or(0, |v| v.len());
            let lhv = scen.vertex_count().unwrap_or(0);
            let mut out = json!({"scenario": [scen.n, scen.c, scen.d], "vertices": nv, "lhv_vertices": render::count(lhv)});
            let mut text = format!("{nv} bipartite-linear vertices ({lhv} n-partite linear)\n");
            if *facets {
                out["facets"] = json!(p.facet_count());
                out["polytope"] = p.to_json();
                let _ = writeln!(text, "{} facets", p.facet_count());
            }
            if (scen.n, scen.c, scen.d) == (3, 2, 2) {
                let sv = catalog(ineq::CatalogId::Svetlichny3, &caps)?;
                let m = nosig::max_over(&sv.coeffs, p.vertices.as_deref().unwrap_or_default()).unwrap_or_default();
                out["svetlichny_max"] = rat::to_pair(&m);
                out["svetlichny_algebraic"] = rat::to_pair(&sv.algebraic_bound);
                let _ = writeln!(text, "Svetlichny expression: {m} over the hull, {} algebraic", sv.algebraic_bound);
            }
            Ok(Outcome::Done(Report::new(out).text(text)))
        }
        Command::Loophole(c) => loophole_cmd(c, g, &caps),
        Command::ReproduceTables { table } => {
            if g.dry_run {
                return plan(tables::plan(*table, g.long_running));
            }
            let opts = TableOptions { caps, long_running: g.long_running, qopt: qopts(g) };
            let r = match table {
                1 | 2 => tables::counts(*table, &opts)?,
                _ => tables::bounds(&opts)?,
            };
            Ok(Outcome::Done(r))
        }
    }
}

fn bool_target(t: &BoolTarget) -> anyhow::Result<FiniteFunction> {
    Ok(nmbqc::function_from_hex(t.xbits, &t.f)?)
}

fn nmbqc_cmd(c: &NmbqcCmd, g: &Global, caps: &Caps) -> anyhow::Result<Outcome> {
    if g.dry_run {
        let step = match c {
            NmbqcCmd::Decide { .. } => "nmbqc::decide_deterministic (integer left kernel / parity lattice)",
            NmbqcCmd::Minimal { .. } => "nmbqc::minimal_n (sets of distinct nonzero rows)",
            NmbqcCmd::Paradox { .. } => "nmbqc::ghz_paradox",
            NmbqcCmd::PrBox { .. } => "nmbqc::generalized_pr_box",
        };
        return Ok(Outcome::Planned(vec!["parse f and P".into(), step.into()]));
    }
    let out = match c {
        NmbqcCmd::Decide { target, p } => {
            let f = bool_target(target)?;
            let pm = pmatrix(target.xbits, p)?;
            let v = nmbqc::decide_deterministic(&pm, &f)?;
            let mut out = json!({"xbits": target.xbits, "n": pm.n(), "achievable": v.achievable});
            let mut text = format!("{}\n", if v.achievable { "achievable" } else { "not achievable" });
            if let Some(w) = &v.witness {
                let ok = nmbqc::witness_reproduces(&pm, &f, w, 1e-9);
                out["witness"] = json!({"thetas": w.thetas, "phi": w.phi, "verified": ok});
                let th: Vec<String> = w.thetas.iter().map(|x| fmt12(*x)).collect();
                let _ = writeln!(text, "witness thetas [{}] phi {} (verified: {ok})", th.join(", "), fmt12(w.phi));
            }
            if let Some(u) = &v.obstruction {
                let ok = nmbqc::obstruction_valid(&pm, &f, u);
                out["obstruction"] = json!({"u": u.iter().map(|x| x.to_string()).collect::<Vec<_>>(), "verified": ok});
                let _ = writeln!(text, "obstruction u = [{}] (verified: {ok})", u.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
            }
            Report::new(out).text(text)
        }
        NmbqcCmd::Minimal { target } => {
            let f = bool_target(target)?;
            let (n, pm) = nmbqc::minimal_n(&f, caps)?;
            let rows: Vec<String> = pm.rows.iter().map(|r| r.iter().map(|b| b.to_string()).collect()).collect();
            Report::new(json!({"xbits": target.xbits, "minimal_n": n, "p": rows})).text(format!("{n}\nP = {}\n", rows.join(",")))
        }
        NmbqcCmd::Paradox { target, p } => {
            let f = bool_target(target)?;
            let r = nmbqc::ghz_paradox(&pmatrix(target.xbits, p)?, &f)?;
            let mut text = String::from("x s quantum_p1 lhv_forced\n");
            for row in &r.rows {
                let bits = |v: &[usize]| v.iter().map(|b| b.to_string()).collect::<String>();
                let _ = writeln!(text, "{} {} {} {}", bits(&row.x), bits(&row.s), fmt12(row.quantum), row.lhv_forced);
            }
            let _ = writeln!(text, "conflict: {:?}", r.conflict);
            Report::new(r.to_json()).text(text)
        }
        NmbqcCmd::PrBox { target, p } => {
            let f = bool_target(target)?;
            let b = nmbqc::generalized_pr_box(&pmatrix(target.xbits, p)?, &f)?;
            Report::new(b.to_json())
        }
    };
    Ok(Outcome::Done(out))
}

fn nosig_cmd(c: &NosigCmd, g: &Global, caps: &Caps) -> anyhow::Result<Outcome> {
    let scen = need_scenario(g)?;
    if g.dry_run {
        let step = match c {
            NosigCmd::Constraints => "nosig::ns_constraints",
            NosigCmd::Vertices => "nosig::ns_vertices (double description on the constraint system)",
            NosigCmd::Unique(_) => "nosig::unique_ns_box_check",
        };
        return Ok(Outcome::Planned(vec![format!("{step}({scen})")]));
    }
    let out = match c {
        NosigCmd::Constraints => {
            let sys = nosig::ns_constraints(scen, caps)?;
            Report::new(json!({
                "scenario": [scen.n, scen.c, scen.d],
                "variables": sys.variables,
                "equations": sys.equations.len(),
                "dimension": sys.dimension(),
            }))
            .text(format!("{} variables, {} independent equalities, dimension {}\n", sys.variables, sys.equations.len(), sys.dimension()))
        }
        NosigCmd::Vertices => {
            let v = nosig::ns_vertices(scen, caps)?;
            let vs: Vec<Value> = v.iter().map(|x| Value::Array(x.iter().map(rat::to_pair).collect())).collect();
            Report::new(json!({"scenario": [scen.n, scen.c, scen.d], "vertex_count": v.len(), "vertices": vs})).text(format!("{}\n", v.len()))
        }
        NosigCmd::Unique(a) => {
            let f = function_from(a, scen)?;
            let v = nosig::unique_ns_box_check(&f, caps)?;
            let mut out = json!({
                "scenario": [scen.n, scen.c, scen.d],
                "target": f.table,
                "vertex_count": v.vertex_count,
                "unique": v.unique,
                "equals_genbox": v.equals_genbox,
                "vertices": v.vertices.iter().map(|b| b.to_json()).collect::<Vec<_>>(),
            });
            let mut text = format!("{} compatible non-signalling vertices; unique: {}; uniform-parity box: {}\n", v.vertex_count, v.unique, v.equals_genbox);
            if let Some((part, b)) = &v.split_witness {
                out["split_witness"] = json!({"parties": part, "box": b.to_json()});
                let _ = writeln!(text, "splits across parties {part:?}");
            }
            Report::new(out).text(text)
        }
    };
    Ok(Outcome::Done(out))
}

fn read_rule(path: &Path) -> anyhow::Result<PostSelectionRule> {
    let v = read_json(path)?;
    PostSelectionRule::from_json(&v).with_context(|| format!("{}", path.display()))
}

fn loophole_cmd(c: &LoopholeCmd, g: &Global, caps: &Caps) -> anyhow::Result<Outcome> {
    if g.dry_run {
        let step = match c {
            LoopholeCmd::Gm => "loophole::gm_threshold",
            LoopholeCmd::Mk { .. } => "loophole::mk_threshold (bisection)",
            LoopholeCmd::Classify { .. } => "loophole::classify_rule",
            LoopholeCmd::Hull { .. } => "loophole::lhv_space_under_rule",
            LoopholeCmd::Points { .. } => "loophole::postselected_lhv_points",
            LoopholeCmd::Strategy { .. } => "loophole::DetectionStrategy::stats",
            LoopholeCmd::Exhaustive { .. } => "loophole::exhaustive_linear_rules",
            LoopholeCmd::Loi { .. } => "loophole::loi_product_protocol",
            LoopholeCmd::Pi(_) => "loophole::pi_protocol",
            LoopholeCmd::AiQuantum => "loophole::ai_quantum_example",
        };
        return Ok(Outcome::Planned(vec![step.into()]));
    }
    let out = match c {
        LoopholeCmd::Gm => {
            let r = loophole::gm_threshold();
            Report::new(r.to_json()).text(format!("eta > {}\n", fmt12(r.eta_required)))
        }
        LoopholeCmd::Mk { n } => {
            let r = loophole::mk_threshold(*n)?;
            Report::new(r.to_json()).text(format!("eta > {}\n", fmt12(r.eta_required)))
        }
        LoopholeCmd::Classify { rule } => {
            let r = read_rule(rule)?;
            let v = loophole::classify_rule(&r)?;
            Report::new(json!({"class": v.class.label(), "loophole_free": v.loophole_free, "n": r.n(), "xbits": r.xbits, "d": r.d}))
                .text(format!("{} ({})\n", v.class.label(), if v.loophole_free { "loophole-free" } else { "loophole" }))
        }
        LoopholeCmd::Hull { rule, xbits, n } => {
            let r = read_rule(rule)?;
            if xbits.is_some_and(|x| x != r.xbits) || n.is_some_and(|k| k != r.n()) {
                bail!("{}: rule has |x| = {} and n = {}, which disagrees with the flags", rule.display(), r.xbits, r.n());
            }
            let h = loophole::lhv_space_under_rule(&r, caps)?;
            let text = format!(
                "{} ({}): {} distinct points, {} outside the linear hull\n",
                h.verdict.class.label(),
                if h.verdict.loophole_free { "loophole-free" } else { "loophole" },
                h.points.len(),
                h.outside.len()
            );
            Report::new(h.to_json()).text(text)
        }
        LoopholeCmd::Points { n } => {
            let pts = loophole::postselected_lhv_points(*n, caps)?;
            let mut csv = String::from("p_joint,f\n");
            for p in &pts {
                let t: Vec<String> = p.f.table.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(csv, "{},{}", p.p_joint, t.join(""));
            }
            let vs: Vec<Value> = pts.iter().map(|p| json!({"p_joint": rat::to_pair(&p.p_joint), "f": p.f.table})).collect();
            Report::new(json!({"n": n, "count": pts.len(), "points": vs})).csv(csv).text(format!("{} extreme points\n", pts.len()))
        }
        LoopholeCmd::Strategy { name, n } => {
            let s = match name {
                StrategyName::Gm => DetectionStrategy::gm(),
                StrategyName::Mk => DetectionStrategy::mk(*n)?,
                StrategyName::Demo => DetectionStrategy::asymmetric_demo(*n)?,
            };
            let st = s.stats();
            let site: Vec<Value> = st.site_detection.iter().map(|[a, b]| json!([rat::to_pair(a), rat::to_pair(b)])).collect();
            Report::new(json!({
                "strategy": s.to_json(),
                "p_joint": rat::to_pair(&st.p_joint),
                "ebar": st.ebar.iter().map(rat::to_pair).collect::<Vec<_>>(),
                "site_detection": site,
                "input_independent_detection": st.detection_independent_of_input(),
                "uniform_detection": st.detection_uniform(),
            }))
        }
        LoopholeCmd::Exhaustive { n, output_input } => {
            let r = loophole::exhaustive_linear_rules(*n, *output_input)?;
            let out = json!({
                "n": r.n,
                "class": r.class.label(),
                "rules": r.rules,
                "points_checked": r.points_checked,
                "all_inside": r.all_inside,
                "first_violation": r.first_violation,
            });
            Report::new(out).text(format!(
                "{} rules, {} points: {}\n",
                r.rules,
                r.points_checked,
                if r.all_inside { "all inside the linear hull" } else { "VIOLATION" }
            ))
        }
        LoopholeCmd::Loi { xbits } => {
            let p = loophole::loi_product_protocol(*xbits, caps)?;
            Report::new(json!({
                "xbits": p.xbits,
                "n": p.n,
                "verified": p.verified,
                "worst_deviation": p.worst_deviation,
                "rule": p.rule.to_json(),
                "block_angles": {"thetas": p.block_angles.thetas, "phi": p.block_angles.phi},
            }))
            .text(format!("n = {} parties, verified: {}\n", p.n, p.verified))
        }
        LoopholeCmd::Pi(a) => {
            let scen = need_scenario(g)?;
            let f = function_from(a, scen)?;
            let p = loophole::pi_protocol(&f)?;
            Report::new(json!({"n": p.rule.n(), "verified": p.verified, "rule": p.rule.to_json(), "assignment": p.assignment}))
                .text(format!("n = {} parties, verified: {}\n", p.rule.n(), p.verified))
        }
        LoopholeCmd::AiQuantum => {
            let r = loophole::ai_quantum_example(g.restarts, g.seed)?;
            Report::new(r.to_json()).text(format!("{} (LHV {}, stage 1 {})\n", fmt12(r.value), r.lhv_bound, fmt12(r.stage1_value)))
        }
    };
    Ok(Outcome::Done(out))
}

//! Table reproduction against the published counts and bounds.

use std::fmt::Write as _;

use bellscope::ineq::{catalog, CatalogId};
use bellscope::qopt::{self, QoptOptions};
use bellscope::{poly, rat, sym, Caps, Error, Scenario};
use serde_json::json;

use crate::render::{self, fmt12, Report};

/// (n, c, d, vertices, facets, orbits, long-running)
pub const COUNT_ROWS: [(usize, usize, usize, u128, usize, usize, bool); 8] = [
    (2, 2, 2, 8, 16, 2, false),
    (2, 2, 3, 27, 66, 2, false),
    (2, 2, 4, 64, 216, 4, false),
    (2, 2, 5, 125, 1020, 5, false),
    (3, 2, 2, 16, 256, 5, false),
    (3, 2, 3, 81, 125_412, 63, true),
    (2, 3, 2, 32, 90, 2, false),
    (2, 4, 2, 128, 27_968, 15, true),
];

/// (label, catalog id, quantum bound, entanglement)
pub const BOUND_ROWS: [(&str, CatalogId, f64, f64); 13] = [
    ("C_d=2", CatalogId::Chsh, 2.4142, 1.000),
    ("C_CGLMP", CatalogId::Cglmp(3), 3.9149, 1.555),
    ("C_CGLMP", CatalogId::Cglmp(4), 5.4594, 1.938),
    ("C1_d=4", CatalogId::Named("C1_d4"), 2.4142, 1.000),
    ("C2_d=4", CatalogId::Named("C2_d4"), 4.8284, 2.000),
    ("I1", CatalogId::Named("I1_d5"), 6.3145, 2.310),
    ("I2", CatalogId::Named("I2_d5"), 7.6290, 2.310),
    ("I3", CatalogId::Named("I3_d5"), 7.0314, 2.230),
    ("C_CGLMP", CatalogId::Cglmp(5), 7.0314, 2.230),
    ("C_c=3", CatalogId::Named("C_c3"), 2.4142, 1.000),
    ("B1-B5", CatalogId::Named("B1"), 9.7570, 1.000),
    ("B6-B11", CatalogId::Named("B6"), 5.0825, 1.000),
    ("C1-C3_c=4", CatalogId::Named("C1_c4"), 2.4142, 1.000),
];

pub const VALUE_TOL: f64 = 1e-3;
pub const ENTROPY_TOL: f64 = 5e-3;

pub struct TableOptions {
    pub caps: Caps,
    pub long_running: bool,
    pub qopt: QoptOptions,
}

pub fn plan(which: u8, long_running: bool) -> Vec<String> {
    let mut out = Vec::new();
    match which {
        1 | 2 => {
            for (n, c, d, _, _, _, long) in COUNT_ROWS {
                if long && !long_running {
                    out.push(format!("skip ({n},{c},{d}): needs --long-running"));
                    continue;
                }
                out.push(format!("poly::lhv_polytope(({n},{c},{d}))"));
                if which == 2 {
                    out.push(format!("sym::orbits_linear(facets of ({n},{c},{d}))"));
                }
            }
        }
        _ => {
            for (label, id, _, _) in BOUND_ROWS {
                let d5 = matches!(id, CatalogId::Cglmp(5)) || label.starts_with('I');
                if d5 && !long_running {
                    out.push(format!("skip {label} ({id:?}): needs --long-running"));
                } else {
                    out.push(format!("qopt::mbs_bound(catalog({id:?}))"));
                }
            }
        }
    }
    out
}

fn cap_skip(e: &Error) -> Option<String> {
    matches!(e, Error::CapExceeded { .. }).then(|| e.to_string())
}

pub fn counts(which: u8, opts: &TableOptions) -> anyhow::Result<Report> {
    let mut csv = if which == 1 {
        String::from("n,c,d,vertices,facets,expected_vertices,expected_facets,status\n")
    } else {
        String::from("n,c,d,facets,orbits,expected_facets,expected_orbits,status\n")
    };
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    let mut skipped = Vec::new();
    for (n, c, d, ev, ef, eo, long) in COUNT_ROWS {
        let scen = Scenario::new(n, c, d)?;
        let tag = format!("({n},{c},{d})");
        if long && !opts.long_running {
            skipped.push(format!("{tag}: needs --long-running"));
            push_count_row(&mut csv, which, (n, c, d), None, (ev, ef, eo), "skipped");
            rows.push(json!({"scenario": [n, c, d], "status": "skipped", "reason": "needs --long-running"}));
            continue;
        }
        let vertices = scen.vertex_count().unwrap_or(0);
        let polytope = match poly::lhv_polytope(scen, &opts.caps) {
            Ok(p) => p,
            Err(e) => match cap_skip(&e) {
                Some(msg) => {
                    skipped.push(format!("{tag}: {msg}"));
                    push_count_row(&mut csv, which, (n, c, d), None, (ev, ef, eo), "cap-exceeded");
                    rows.push(json!({"scenario": [n, c, d], "status": "cap-exceeded", "reason": msg}));
                    continue;
                }
                None => return Err(e.into()),
            },
        };
        let facets = polytope.facet_count();
        let orbits = if which == 2 {
            let fs = polytope.facets.clone().unwrap_or_default();
            match sym::orbits_linear(&fs, scen, &opts.caps) {
                Ok(o) => Some(o.len()),
                Err(e) => match cap_skip(&e) {
                    Some(msg) => {
                        skipped.push(format!("{tag}: {msg}"));
                        push_count_row(&mut csv, which, (n, c, d), None, (ev, ef, eo), "cap-exceeded");
                        rows.push(json!({"scenario": [n, c, d], "status": "cap-exceeded", "reason": msg}));
                        continue;
                    }
                    None => return Err(e.into()),
                },
            }
        } else {
            None
        };
        let ok = facets == ef && if which == 1 { vertices == ev } else { orbits == Some(eo) };
        if !ok {
            mismatches.push(match which {
                1 => format!("{tag}: vertices {vertices} (expected {ev}), facets {facets} (expected {ef})"),
                _ => format!("{tag}: facets {facets} (expected {ef}), orbits {} (expected {eo})", orbits.unwrap_or(0)),
            });
        }
        let status = if ok { "match" } else { "MISMATCH" };
        push_count_row(&mut csv, which, (n, c, d), Some((vertices, facets, orbits.unwrap_or(0))), (ev, ef, eo), status);
        rows.push(if which == 1 {
            json!({"scenario": [n, c, d], "vertices": render::count(vertices), "facets": facets, "expected_vertices": render::count(ev), "expected_facets": ef, "status": status})
        } else {
            json!({"scenario": [n, c, d], "facets": facets, "orbits": orbits, "expected_facets": ef, "expected_orbits": eo, "status": status})
        });
    }
    let mut report = Report::new(json!({"table": which, "rows": rows, "skipped": skipped, "mismatches": mismatches}))
        .csv(csv.clone())
        .text(with_diff(csv, &skipped, &mismatches));
    report.mismatches = mismatches;
    Ok(report)
}

fn push_count_row(
    csv: &mut String,
    which: u8,
    (n, c, d): (usize, usize, usize),
    got: Option<(u128, usize, usize)>,
    (ev, ef, eo): (u128, usize, usize),
    status: &str,
) {
    let _ = match (which, got) {
        (1, Some((v, f, _))) => writeln!(csv, "{n},{c},{d},{v},{f},{ev},{ef},{status}"),
        (1, None) => writeln!(csv, "{n},{c},{d},,,{ev},{ef},{status}"),
        (_, Some((_, f, o))) => writeln!(csv, "{n},{c},{d},{f},{o},{ef},{eo},{status}"),
        (_, None) => writeln!(csv, "{n},{c},{d},,,{ef},{eo},{status}"),
    };
}

fn with_diff(csv: String, skipped: &[String], mismatches: &[String]) -> String {
    let mut out = csv;
    for s in skipped {
        let _ = writeln!(out, "# skipped {s}");
    }
    if mismatches.is_empty() {
        out.push_str("# diff: all computed rows match\n");
    }
    for m in mismatches {
        let _ = writeln!(out, "# mismatch {m}");
    }
    out
}

pub fn bounds(opts: &TableOptions) -> anyhow::Result<Report> {
    let mut csv = String::from("n,c,d,orbit,lhv_bound,quantum_bound,entanglement,expected_quantum,expected_entanglement,status\n");
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    let mut skipped = Vec::new();
    for (label, id, eq, ee) in BOUND_ROWS {
        let ineq = catalog(id, &opts.caps)?;
        let s = ineq.scenario;
        if s.d == 5 && !opts.long_running {
            skipped.push(format!("{label} ({},{},{}): needs --long-running", s.n, s.c, s.d));
            let _ = writeln!(csv, "{},{},{},{label},{},,,{eq},{ee},skipped", s.n, s.c, s.d, ineq.lhv_bound);
            rows.push(json!({"scenario": [s.n, s.c, s.d], "orbit": label, "status": "skipped"}));
            continue;
        }
        let r = qopt::mbs_bound(&ineq, &opts.qopt)?;
        let ent = r.optimal_state_entropy.unwrap_or(f64::NAN);
        let ok = (r.value - eq).abs() <= VALUE_TOL && (ent - ee).abs() <= ENTROPY_TOL;
        if !ok {
            mismatches.push(format!("{label} ({},{},{}): {} / {} (expected {eq} / {ee})", s.n, s.c, s.d, fmt12(r.value), fmt12(ent)));
        }
        let status = if ok { "match" } else { "MISMATCH" };
        let _ = writeln!(
            csv,
            "{},{},{},{label},{},{:.4},{:.3},{eq},{ee},{status}",
            s.n, s.c, s.d, ineq.lhv_bound, r.value, ent
        );
        rows.push(json!({
            "scenario": [s.n, s.c, s.d],
            "orbit": label,
            "lhv_bound": rat::to_pair(&ineq.lhv_bound),
            "quantum_bound": r.value,
            "entanglement": ent,
            "expected_quantum": eq,
            "expected_entanglement": ee,
            "status": status,
            "report": r.to_json(),
        }));
    }
    let mut report = Report::new(json!({"table": 3, "rows": rows, "skipped": skipped, "mismatches": mismatches}))
        .csv(csv.clone())
        .text(with_diff(csv, &skipped, &mismatches));
    report.mismatches = mismatches;
    Ok(report)
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

mod commands;
mod render;
mod tables;

use render::Format;

#[derive(Parser, Debug)]
#[command(name = "bellscope", version, about = "Correlator polytopes, Bell inequalities, quantum bounds and post-selection")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Scenario as n,c,d
    #[arg(long, global = true, value_parser = parse_scenario)]
    pub scenario: Option<bellscope::Scenario>,
    /// Seed for optimizer restarts
    #[arg(long, global = true, default_value_t = 0x5eed_2012)]
    pub seed: u64,
    /// Optimizer restarts
    #[arg(long, global = true, default_value_t = 64)]
    pub restarts: usize,
    /// Largest intermediate ray count in double description
    #[arg(long, global = true, env = bellscope::caps::CAP_RAYS_ENV)]
    pub cap_rays: Option<usize>,
    /// Allow the rows that take hours
    #[arg(long, global = true)]
    pub long_running: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub output: Format,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Compare the rendered result with this file; exit 3 on difference
    #[arg(long, global = true)]
    pub golden: Option<PathBuf>,
    /// Print the module calls that would run, and stop
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count (or list) the deterministic LHV correlators
    Vertices {
        #[arg(long)]
        list: bool,
    },
    /// Facets of the LHV polytope; prints the count and writes the facet file
    Facets {
        /// facet file (default facets-n-c-d.txt, or .json/.csv to match --output)
        #[arg(long)]
        facet_file: Option<PathBuf>,
    },
    /// Orbits of the facets under relabelling symmetries
    Orbits,
    /// Quantum bound of a catalog or file inequality
    Qbound(commands::IneqArgs),
    /// Non-trivial Bell inequality from a target function
    Nontrivial(commands::FunctionArgs),
    /// Classical value of the non-local game for a target function
    Game(commands::FunctionArgs),
    #[command(subcommand)]
    Nmbqc(commands::NmbqcCmd),
    #[command(subcommand)]
    Nosig(commands::NosigCmd),
    /// Svetlichny (bipartite-linear) correlator polytope
    Svetlichny {
        #[arg(long)]
        facets: bool,
    },
    #[command(subcommand)]
    Loophole(commands::LoopholeCmd),
    /// Recompute a published table and diff it against the expected values
    ReproduceTables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        table: u8,
    },
}

fn parse_scenario(s: &str) -> Result<bellscope::Scenario, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad scenario part '{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [n, c, d] => bellscope::Scenario::new(n, c, d).map_err(|e| e.to_string()),
        _ => Err(format!("scenario must be n,c,d, got '{s}'")),
    }
}

pub enum Outcome {
    Planned(Vec<String>),
    Done(render::Report),
}

const EXIT_CAP: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

fn main() -> ExitCode {
    // clap exits 2 on usage errors, which would read as a cap hit
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let cap = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<bellscope::Error>(), Some(bellscope::Error::CapExceeded { .. })));
            ExitCode::from(if cap { EXIT_CAP } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("starting worker pool")?;
    }
    let outcome = commands::dispatch(&cli.command, g)?;
    let report = match outcome {
        Outcome::Planned(steps) => {
            let mut s = String::from("plan:\n");
            for st in steps {
                s.push_str("  ");
                s.push_str(&st);
                s.push('\n');
            }
            print!("{s}");
            return Ok(0);
        }
        Outcome::Done(r) => r,
    };
    let rendered = report.render(g.output);
    match &g.out {
        Some(p) => render::write_atomic(p, &rendered)?,
        None => print!("{rendered}"),
    }
    let mut code = 0;
    if !report.mismatches.is_empty() {
        for m in &report.mismatches {
            eprintln!("mismatch: {m}");
        }
        code = EXIT_MISMATCH;
    }
    if let Some(golden) = &g.golden {
        let want = std::fs::read_to_string(golden).with_context(|| format!("reading golden file {}", golden.display()))?;
        if let Some(line) = first_difference(&want, &rendered) {
            eprintln!("golden mismatch against {} at line {line}", golden.display());
            code = EXIT_MISMATCH;
        }
    }
    Ok(code)
}

fn first_difference(a: &str, b: &str) -> Option<usize> {
    let mut la = a.lines();
    let mut lb = b.lines();
    let mut i = 1;
    loop {
        match (la.next(), lb.next()) {
            (None, None) => return None,
            (x, y) if x != y => return Some(i),
            _ => i += 1,
        }
    }
}

pub fn need_scenario(g: &Global) -> anyhow::Result<bellscope::Scenario> {
    g.scenario.ok_or_else(|| anyhow!("--scenario n,c,d is required"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_parsing() {
        assert_eq!(parse_scenario("2,3,2").unwrap(), bellscope::Scenario::new(2, 3, 2).unwrap());
        assert!(parse_scenario("2,3").is_err());
        assert!(parse_scenario("2,1,2").is_err());
    }

    #[test]
    fn differences() {
        assert_eq!(first_difference("a\nb\n", "a\nb\n"), None);
        assert_eq!(first_difference("a\nb\n", "a\nc\n"), Some(2));
        assert_eq!(first_difference("a\n", "a\nb\n"), Some(2));
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

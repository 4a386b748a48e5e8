//! `weq` command-line driver. [`run`] does all the work so tests can call it
//! without spawning a process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use weq::oracle::enumerate_solutions;
use weq::pad::PadFormula;
use weq::problem::{parse_phi, Problem};
use weq::solver::{self, Solver, SolverOptions, Verdict};
use weq::{LengthVector, Var};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "weq", version, about = "Quadratic word equations with length and regular constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide the problem and print a witness when it is satisfiable.
    Solve {
        file: PathBuf,
        /// Extra length constraint, conjoined with the file's `phi:` lines.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Report the syntactic class and the shape of the counter system.
    Classify { file: PathBuf },
    /// Length membership over the box [0, B]^V.
    Lengths {
        file: PathBuf,
        #[arg(long, value_name = "B")]
        grid: u64,
    },
    /// Write the rewrite graph, or the counter system, in DOT.
    Graph {
        file: PathBuf,
        /// Output path, `-` for standard output.
        #[arg(long, value_name = "PATH")]
        dot: PathBuf,
        #[arg(long)]
        counters: bool,
    },
    /// Build the reachability formula of the counter system.
    Accelerate {
        file: PathBuf,
        /// Print the formula itself rather than its size.
        #[arg(long)]
        emit_formula: bool,
    },
    /// Brute-force table of solution length vectors.
    Oracle {
        file: PathBuf,
        #[arg(long, value_name = "N")]
        max_len: u64,
    },
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 Sat, 1 Unsat, 2 Unknown, 3 error. Subcommands other than
/// `solve` exit 0 on success.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn options() -> Result<SolverOptions> {
    let mut opts = SolverOptions::default();
    if let Ok(v) = std::env::var("WEQ_BUDGET") {
        opts.node_cap = v.trim().parse().with_context(|| format!("WEQ_BUDGET must be a node count, got `{v}`"))?;
    }
    Ok(opts)
}

fn load(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Problem::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Solve { file, phi } => {
            let mut p = load(&file)?;
            if let Some(text) = phi {
                let extra = parse_phi(&text, &p.signature).context("parsing --phi")?;
                p.length_constraint = PadFormula::and([p.length_constraint.clone(), extra]);
            }
            solve(&p, out)
        }
        Command::Classify { file } => {
            let p = load(&file)?;
            let report = match Solver::with_options(&p, options()?) {
                Ok(s) => s.classify(),
                Err(_) => solver::classify(&p),
            };
            writeln!(out, "{report}")?;
            Ok(0)
        }
        Command::Lengths { file, grid } => {
            let p = load(&file)?;
            lengths(&p, grid, out)?;
            Ok(0)
        }
        Command::Graph { file, dot, counters } => {
            let p = load(&file)?;
            let cap = options()?.node_cap;
            let text = if counters {
                let cs = weq::counter::CounterSystem::build_with_constraints(&p.rewriter(), p.root_state(), cap)?;
                cs.to_dot(&p.signature)
            } else {
                p.rewriter().build_graph(p.root_state(), cap)?.to_dot(&p.signature)
            };
            if dot.as_os_str() == "-" {
                out.write_all(text.as_bytes())?;
            } else {
                std::fs::write(&dot, text).with_context(|| format!("writing {}", dot.display()))?;
            }
            Ok(0)
        }
        Command::Accelerate { file, emit_formula } => {
            let p = load(&file)?;
            let s = Solver::with_options(&p, options()?)?;
            let (pool, lambda) = s.reachability_formula()?;
            if emit_formula {
                writeln!(out, "{}", lambda.display(&pool))?;
            } else {
                writeln!(out, "reachability formula with {} nodes", lambda.size())?;
            }
            Ok(0)
        }
        Command::Oracle { file, max_len } => {
            let p = load(&file)?;
            let found = enumerate_solutions(&p, max_len)?;
            let vars: Vec<Var> = p.variables().into_iter().collect();
            header(&p, &vars, out)?;
            for lv in &found {
                row(&vars, lv, out)?;
                writeln!(out)?;
            }
            writeln!(out, "{} length vectors with solutions up to length {max_len}", found.len())?;
            Ok(0)
        }
    }
}

fn solve(p: &Problem, out: &mut dyn Write) -> Result<i32> {
    let s = Solver::with_options(p, options()?)?;
    let sig = &p.signature;
    match s.solve()? {
        Verdict::Sat { lengths, witness } => {
            writeln!(out, "sat")?;
            for (&x, n) in &lengths.0 {
                writeln!(out, "  |{}| = {n}", sig.var_name(x))?;
            }
            match witness {
                Some(w) => {
                    for (x, word) in w.iter() {
                        writeln!(out, "  {} = {}", sig.var_name(x), sig.fmt_text(word))?;
                    }
                }
                None => writeln!(out, "  (no witness)")?,
            }
            Ok(EXIT_SAT)
        }
        Verdict::Unsat => {
            writeln!(out, "unsat")?;
            Ok(EXIT_UNSAT)
        }
        Verdict::Unknown(reason) => {
            writeln!(out, "unknown ({reason:?})")?;
            Ok(EXIT_UNKNOWN)
        }
    }
}

fn header(p: &Problem, vars: &[Var], out: &mut dyn Write) -> Result<()> {
    let names: Vec<String> = vars.iter().map(|&x| format!("{:>4}", format!("|{}|", p.signature.var_name(x)))).collect();
    writeln!(out, "{}", names.join(" "))?;
    Ok(())
}

fn row(vars: &[Var], lv: &LengthVector, out: &mut dyn Write) -> Result<()> {
    let cells: Vec<String> = vars.iter().map(|x| format!("{:>4}", lv.0[x])).collect();
    write!(out, "{}", cells.join(" "))?;
    Ok(())
}

/// Two variables print as a matrix, `#` marking members; otherwise every
/// vector gets a row.
fn lengths(p: &Problem, bound: u64, out: &mut dyn Write) -> Result<()> {
    let s = Solver::with_options(p, options()?)?;
    let mut membership = s.membership();
    let vars: Vec<Var> = p.variables().into_iter().collect();
    let sig = &p.signature;
    if vars.len() == 2 {
        let (x, y) = (vars[0], vars[1]);
        writeln!(out, "rows |{}|, columns |{}|", sig.var_name(x), sig.var_name(y))?;
        let cols: String = (0..=bound).map(|j| format!("{:>3}", j)).collect();
        writeln!(out, "    {cols}")?;
        for i in 0..=bound {
            let mut line = format!("{i:>3} ");
            for j in 0..=bound {
                let lv = LengthVector([(x, i), (y, j)].into_iter().collect());
                line.push_str(if membership.check(&lv)? { "  #" } else { "  ." });
            }
            writeln!(out, "{line}")?;
        }
        return Ok(());
    }
    if vars.len() > 4 {
        bail!("{} variables; the grid is only printed for at most four", vars.len());
    }
    let mut names: Vec<String> = vars.iter().map(|&x| format!("{:>4}", format!("|{}|", sig.var_name(x)))).collect();
    names.push("  in".into());
    writeln!(out, "{}", names.join(" "))?;
    let mut values = vec![0u64; vars.len()];
    loop {
        let lv = LengthVector(vars.iter().copied().zip(values.iter().copied()).collect());
        let member = membership.check(&lv)?;
        row(&vars, &lv, out)?;
        writeln!(out, "    {}", if member { "yes" } else { "no" })?;
        let Some(i) = values.iter().rposition(|&v| v < bound) else { break };
        values[i] += 1;
        values[i + 1..].iter_mut().for_each(|v| *v = 0);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_goes_to_stdout_and_succeeds() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["weq", "--help"], &mut out, &mut err), 0);
        let text = String::from_utf8(out).unwrap();
        for sub in ["solve", "classify", "lengths", "graph", "accelerate", "oracle"] {
            assert!(text.contains(sub), "{text}");
        }
        assert!(err.is_empty());
    }

    #[test]
    fn missing_arguments_are_errors() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["weq", "lengths", "f.weq"], &mut out, &mut err), EXIT_ERROR);
        assert!(String::from_utf8(err).unwrap().contains("--grid"));
    }
}

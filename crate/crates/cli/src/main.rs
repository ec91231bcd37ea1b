//! `jetflow` command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use jetflow::export::{self, Solution};
use jetflow::integrate::{integrate_first_order, integrate_second_order, integrate_sheet, Trajectory};
use jetflow::problem::Problem;
use jetflow::prolong::{reduce_order_ode, reduce_order_pde, FirstOrderODESystem, SecondOrderSystem};
use jetflow::report::{Check, Report};
use jetflow::sampling::DEFAULT_SEED;
use jetflow::verify::{self, Suite};
use jetflow::{parse, Error};

#[derive(Parser)]
#[command(name = "jetflow", version, about = "Prolongations, Lagrangians and Hamilton systems of first-order flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a problem file and check its metrics at sample points.
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Causal type of the field from sampled potential energy.
    Classify {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Integrate a system and write the samples.
    Integrate {
        file: PathBuf,
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run verification suites and report every check.
    Verify {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Reduce a higher-order equation to a first-order system and print it.
    Reduce {
        /// Right-hand side `F` of `x^(r) = F`, or of `∂²x/∂(t^p)² = F` with `--params`.
        expr: String,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Number of parameters for a PDE reduction.
        #[arg(long)]
        params: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Eq2,
    Eq3,
    Eq5,
    Geodesic,
    Sheet,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Prolongation,
    Variational,
    Hamilton,
    Forms,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Prolongation => Suite::Prolongation,
            SuiteArg::Variational => Suite::Variational,
            SuiteArg::Hamilton => Suite::Hamilton,
            SuiteArg::Forms => Suite::Forms,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Failure with its exit code.
enum Fail {
    Check(String),
    Input(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Integrability { .. } | Error::BlowUp { .. } => Fail::Check(e.to_string()),
            other => Fail::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file, json } => validate(&file, json),
        Command::Classify { file, samples, seed } => classify(&file, samples, seed),
        Command::Integrate {
            file,
            system,
            out,
            format,
        } => integrate(&file, system, &out, format),
        Command::Verify { file, suite, out, json } => run_verify(&file, suite.into(), out.as_ref(), json),
        Command::Reduce { expr, order, params } => reduce(&expr, order, params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: &Report, json: bool) -> Result<(), Fail> {
    if json {
        println!("{}", report.to_json());
    } else {
        println!("{report}");
    }
    if report.pass {
        Ok(())
    } else {
        Err(Fail::Check(format!("{} check(s) failed", report.checks.iter().filter(|c| !c.pass).count())))
    }
}

fn validate(file: &PathBuf, json: bool) -> Result<(), Fail> {
    let pr = Problem::load(file)?;
    let pts = pr.sampler(DEFAULT_SEED).base_points(verify::SAMPLES);
    let first_failure = |f: &dyn Fn(&jetflow::BasePoint) -> jetflow::Result<()>| {
        pts.iter().find_map(|b| f(b).err())
    };
    let as_check = |name: &str, err: Option<Error>| match err {
        None => Check::at_most(name, 0.0, 0.0),
        Some(e) => Check::at_most(name, 0.0, 1.0).with_note(e.to_string()),
    };
    let checks = vec![
        as_check(
            "metric_h.signature",
            first_failure(&|b| pr.metrics.h.verify_signature(&b.coords())),
        ),
        as_check(
            "metric_g.signature",
            first_failure(&|b| pr.metrics.g.verify_signature(&b.coords())),
        ),
        as_check(
            "field_X.evaluates",
            first_failure(&|b| pr.field.value_at(&b.coords()).map(|_| ())),
        ),
    ];
    emit(&Report::new(pr.name(), "validate", checks), json)
}

fn classify(file: &PathBuf, samples: usize, seed: u64) -> Result<(), Fail> {
    let pr = Problem::load(file)?;
    let class = pr.field.classify(&pr.sampler(seed).base_points(samples))?;
    println!("{}", serde_json::to_string_pretty(&class).expect("serializable"));
    Ok(())
}

fn write_solution(sol: &Solution, out: &PathBuf, format: Format) -> Result<(), Fail> {
    let mut w = BufWriter::new(File::create(out)?);
    match (format, sol) {
        (Format::Json, _) => w.write_all(export::to_json(sol).as_bytes())?,
        (Format::Csv, Solution::Trajectory(t)) => export::write_trajectory_csv(t, &mut w)?,
        (Format::Csv, Solution::Sheet(s)) => export::write_sheet_csv(s, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn integrate(file: &PathBuf, system: SystemArg, out: &PathBuf, format: Format) -> Result<(), Fail> {
    let pr = Problem::load(file)?;
    let int = pr.integration()?;
    let ini = pr.initial()?;
    let step = int.step;
    if let SystemArg::Sheet = system {
        let grid = pr.grid()?;
        let sheet = integrate_sheet(&pr.field, &ini.t0, &ini.x0, &vec![step; pr.p()], &grid)?;
        return write_solution(&Solution::Sheet(sheet), out, format);
    }
    if pr.p() != 1 {
        return Err(Fail::Input(format!(
            "system {} needs p = 1; use --system sheet for p = {}",
            system_name(system),
            pr.p()
        )));
    }
    let n_steps = pr.n_steps()?;
    let second = |sys: SecondOrderSystem| -> jetflow::Result<Trajectory> {
        let jp = pr.initial_jet()?;
        integrate_second_order(&sys, jp.t[0], &jp.x, &jp.v, step, n_steps)
    };
    let traj = match system {
        SystemArg::Eq2 => integrate_first_order(
            &FirstOrderODESystem::from_field(&pr.field)?,
            ini.t0[0],
            &ini.x0,
            step,
            n_steps,
        ),
        SystemArg::Eq3 => second(SecondOrderSystem::eq3(&pr.field)?),
        SystemArg::Eq5 => second(SecondOrderSystem::eq5(&pr.field)?),
        SystemArg::Geodesic => second(SecondOrderSystem::geodesic(&pr.metrics)),
        SystemArg::Sheet => unreachable!(),
    };
    match traj {
        Ok(t) => write_solution(&Solution::Trajectory(t), out, format),
        Err(Error::BlowUp { last_good, prefix }) => {
            write_solution(&Solution::Trajectory(*prefix), out, format)?;
            Err(Fail::Check(format!(
                "integration blew up after sample {last_good}; wrote the finite prefix"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn system_name(s: SystemArg) -> &'static str {
    match s {
        SystemArg::Eq2 => "eq2",
        SystemArg::Eq3 => "eq3",
        SystemArg::Eq5 => "eq5",
        SystemArg::Geodesic => "geodesic",
        SystemArg::Sheet => "sheet",
    }
}

fn run_verify(file: &PathBuf, suite: Suite, out: Option<&PathBuf>, json: bool) -> Result<(), Fail> {
    let pr = Problem::load(file)?;
    let report = verify::run(&pr, suite)?;
    if let Some(path) = out {
        std::fs::write(path, report.to_json())?;
    }
    emit(&report, json)
}

fn reduce(src: &str, order: usize, params: Option<usize>) -> Result<(), Fail> {
    let f = parse(src).map_err(|e| Fail::Input(e.to_string()))?;
    match params {
        None => print!("{}", reduce_order_ode(&f, order)?),
        Some(p) => {
            let sys = reduce_order_pde(&f, p, order)?;
            println!("# {} equations", sys.equations.len());
            print!("{sys}");
        }
    }
    Ok(())
}

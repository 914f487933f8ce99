//! Command-line driver. Every command reads its inputs from files, writes
//! its results to files and prints a short report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::compose::{master, prune};
use crate::conformance::{run_test, Mutant, ReferenceSut, DEFAULT_TIMEOUT};
use crate::json;
use crate::parser::parse_spec;
use crate::render::render_test;
use crate::sts::{Signature, Sts};
use crate::symbolic::{count_satisfying_inputs, default_plan, Backtracking, Domains};
use crate::testgen::{coverage_of, generate_switch_coverage};
use crate::translate::{translate_suite, SuiteContext};
use crate::value::SamplingPlan;
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "pickles", version, about = "Model-based testing for PicklesDSL specifications")]
pub struct Cli {
    /// Sampling plan: JSON object from variable paths to decimal strings.
    #[arg(long, global = true)]
    pub samples: Option<PathBuf>,
    /// Number of scenarios a test may run in sequence.
    #[arg(long, global = true, default_value_t = 3)]
    pub depth: usize,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate a specification into a pruned master model.
    TranslateSpec {
        spec: PathBuf,
        /// Also write one model per scenario into this directory.
        #[arg(long)]
        per_scenario_dir: Option<PathBuf>,
    },
    /// Generate a test suite covering every switch of a model.
    Generate { model: PathBuf },
    /// Write each test of a suite as a Pickles test case.
    RenderTests { model: PathBuf, tests: PathBuf },
    /// Count the parameter values an input switch accepts.
    CountInputs {
        model: PathBuf,
        #[arg(long)]
        switch: usize,
        /// JSON object fixing the location variables.
        #[arg(long)]
        fixed: PathBuf,
    },
    /// Run Pickles test cases against the bundled reference controller.
    Run {
        model: PathBuf,
        #[arg(required = true)]
        tests: Vec<PathBuf>,
        #[arg(long, value_enum)]
        mutant: Option<MutantArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MutantArg {
    NoneInsidePartial,
    OneInsideAvailable,
    ManyInsideAvailable,
    AccessLostStaysEnabled,
}

impl From<MutantArg> for Mutant {
    fn from(m: MutantArg) -> Self {
        match m {
            MutantArg::NoneInsidePartial => Mutant::NoneInsidePartial,
            MutantArg::OneInsideAvailable => Mutant::OneInsideAvailable,
            MutantArg::ManyInsideAvailable => Mutant::ManyInsideAvailable,
            MutantArg::AccessLostStaysEnabled => Mutant::AccessLostStaysEnabled,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn read_text(path: &Path) -> Result<String, Error> {
    String::from_utf8(read(path)?).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn json_err(path: &Path) -> impl Fn(json::JsonError) -> Error + '_ {
    move |source| Error::Json { path: path.display().to_string(), source }
}

fn load_model(path: &Path) -> Result<Sts, Error> {
    json::import_sts(&read(path)?).map_err(json_err(path))
}

fn domains_for(sts: &Sts, samples: Option<&Path>) -> Result<Domains, Error> {
    let plan: SamplingPlan = match samples {
        Some(p) => json::import_plan(&read(p)?).map_err(json_err(p))?,
        None => default_plan(&sts.signature, sts.switches.iter().map(|s| &s.guard)),
    };
    Ok(Domains::new(sts.signature.clone(), plan))
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Runs one command, writing its report to `report`.
pub fn execute(cli: &Cli, report: &mut dyn Write) -> Result<(), Error> {
    let mut say =
        |s: String| report.write_all(s.as_bytes()).map_err(|source| Error::Io { path: "<report>".into(), source });
    match &cli.command {
        Command::TranslateSpec { spec, per_scenario_dir } => {
            let text = read_text(spec)?;
            let ast = parse_spec(&text).map_err(|source| Error::Parse { path: spec.display().to_string(), source })?;
            let r = translate_suite(&ast)?;
            if let Some(dir) = per_scenario_dir {
                fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
                for (i, s) in r.all().iter().enumerate() {
                    write(&dir.join(format!("scenario_{:02}.json", i + 1)), &json::export_sts(s))?;
                }
            }
            let m = master(&r.primary, &r.all(), cli.depth)?;
            let domains = domains_for(&m, cli.samples.as_deref())?;
            let (pruned, rep) = prune(&m, &domains, &Backtracking, m.switches.len())?;
            let out = out_path(cli, "master.json");
            write(&out, &json::export_sts(&pruned))?;
            say(format!(
                "master model: {} locations, {} switches before pruning\n",
                m.locations.len(),
                m.switches.len()
            ))?;
            say(rep.render())?;
            say(format!("wrote {}\n", out.display()))
        }
        Command::Generate { model } => {
            let m = load_model(model)?;
            let domains = domains_for(&m, cli.samples.as_deref())?;
            let suite = generate_switch_coverage(&m, &domains, &Backtracking, cli.depth)?;
            if suite.is_empty() {
                say("warning: the model has no satisfiable switches; the suite is empty\n".into())?;
            }
            let out = out_path(cli, "tests.json");
            write(&out, &json::export_tests(&suite, &m))?;
            say(coverage_of(&suite, &m)?.render())?;
            say(format!("wrote {}\n", out.display()))
        }
        Command::RenderTests { model, tests } => {
            let m = load_model(model)?;
            let suite = json::import_tests(&read(tests)?, &m).map_err(json_err(tests))?;
            let dir = out_path(cli, ".");
            fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
            let stem = tests.file_stem().and_then(|s| s.to_str()).unwrap_or("suite");
            for (k, t) in suite.iter().enumerate() {
                let path = dir.join(format!("{stem}_test_{}.pickles", k + 1));
                write(&path, render_test(t, &m)?.as_bytes())?;
            }
            say(format!("wrote {} test cases to {}\n", suite.len(), dir.display()))
        }
        Command::CountInputs { model, switch, fixed } => {
            let m = load_model(model)?;
            let values = json::import_valuation(&read(fixed)?, &m.signature).map_err(json_err(fixed))?;
            let domains = domains_for(&m, cli.samples.as_deref())?;
            let n = count_satisfying_inputs(&m, *switch, &values, &domains)?;
            say(format!("{n}\n"))
        }
        Command::Run { model, tests, mutant } => {
            let m = load_model(model)?;
            let ctx = SuiteContext::from_signature(m.signature.clone());
            let mut failed = 0;
            for path in tests {
                let text = read_text(path)?;
                let mut sut = reference_sut(&m.signature)?;
                if let Some(mu) = mutant {
                    sut = sut.mutated((*mu).into());
                }
                let run = run_test(&text, &mut sut, &ctx, DEFAULT_TIMEOUT)?;
                if !run.verdict.passed() {
                    failed += 1;
                }
                say(format!("{}: {}\n", path.display(), run.verdict))?;
            }
            say(format!("{} of {} tests passed\n", tests.len() - failed, tests.len()))?;
            if failed > 0 {
                return Err(Error::Usage(format!("{failed} tests failed")));
            }
            Ok(())
        }
    }
}

fn reference_sut(sig: &Arc<Signature>) -> Result<ReferenceSut, Error> {
    ReferenceSut::new(sig).map_err(|e| Error::Usage(e.to_string()))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn main_with_args<I, T>(args: I, report: &mut dyn Write, errors: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(errors, "{e}");
                return 1;
            }
            let _ = write!(report, "{e}");
            return 0;
        }
    };
    match execute(&cli, report) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(errors, "error: {e}");
            e.exit_code()
        }
    }
}

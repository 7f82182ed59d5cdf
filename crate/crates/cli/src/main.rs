//! `fsmmint`: identify, generate, benchmark and verify FSMs.
//!
//! Exit codes: 0 found / check passed, 1 unsatisfiable / check failed,
//! 2 usage or input error, 3 resource limit or solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fsmmint::bmc::{assemble_qbf, negated_spec};
use fsmmint::encode::{encode_base, Completeness, EncodingContext};
use fsmmint::harness::{self, bench_csv, run_bench, BenchConfig, HarnessError, InstanceSpec};
use fsmmint::ltl::{parse_ltl_file, Ltl};
use fsmmint::model::{
    fsm_from_json, fsm_to_dot, fsm_to_json, inconsistent_pairs, parse_scenarios, register_json_symbols, Alphabet,
    AlphabetBuilder, Fsm, FsmJson, Scenario, ScenarioTree, ScenarioVerdict,
};
use fsmmint::par::Execution;
use fsmmint::sat::{CnfProblem, ExternalSolver};
use fsmmint::synth::{find_minimum, identify, Limits, Method, Outcome, SynthError, SynthesisRequest, SynthesisStats};
use fsmmint::verifier::{ModelChecker, Verdict};

const QBF_ENV: &str = "FSMMINT_QBF_SOLVER";

#[derive(Parser)]
#[command(name = "fsmmint", version, about = "Exact minimum FSM identification from scenarios and LTL properties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find an FSM for a scenario file and optional LTL properties.
    Identify(IdentifyArgs),
    /// Write a random instance directory.
    Generate(GenerateArgs),
    /// Solve random instances and print solved counts as CSV.
    Bench(BenchArgs),
    /// Check an FSM against scenarios and properties.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Iterative,
    Exponential,
    Qsat,
    Backtracking,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Iterative => Method::Iterative,
            MethodArg::Exponential => Method::Exponential,
            MethodArg::Qsat => Method::Qsat,
            MethodArg::Backtracking => Method::Backtracking,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Four events, four actions, four formulas.
    Paper,
    /// Two events, two actions, four formulas.
    Small,
}

#[derive(Args)]
struct SolverArgs {
    /// QBF solver command; `{file}` is replaced by the input path, otherwise
    /// the input is piped to stdin. Defaults to $FSMMINT_QBF_SOLVER.
    #[arg(long, value_name = "CMD")]
    qbf_solver: Option<String>,
    /// External SAT solver command used instead of the embedded one.
    #[arg(long, value_name = "CMD")]
    sat_solver: Option<String>,
    /// Wall-clock limit in seconds.
    #[arg(long, value_name = "SECONDS")]
    timeout: Option<f64>,
    /// Clause cap for the exponential method's expansion.
    #[arg(long, value_name = "N")]
    expansion_budget: Option<usize>,
}

impl SolverArgs {
    fn timeout(&self) -> Result<Option<Duration>, Failure> {
        self.timeout
            .map(|s| Duration::try_from_secs_f64(s).map_err(|e| Failure::usage(format!("--timeout: {e}"))))
            .transpose()
    }

    fn limits(&self) -> Result<Limits, Failure> {
        let mut limits = Limits {
            timeout: self.timeout()?,
            ..Limits::default()
        };
        if let Some(b) = self.expansion_budget {
            limits.expansion_budget = b;
        }
        Ok(limits)
    }

    fn qbf(&self) -> Result<Option<ExternalSolver>, Failure> {
        let cmd = self.qbf_solver.clone().or_else(|| std::env::var(QBF_ENV).ok());
        Ok(cmd
            .filter(|c| !c.trim().is_empty())
            .map(ExternalSolver::new))
    }
}

#[derive(Args)]
struct IdentifyArgs {
    /// Scenario file: one scenario per line, `e1(z1,z2); e2()`.
    #[arg(long)]
    scenarios: PathBuf,
    /// LTL file: one formula per line.
    #[arg(long)]
    ltl: Option<PathBuf>,
    /// Number of states.
    #[arg(long, value_name = "N", conflicts_with = "min_states", required_unless_present = "min_states")]
    states: Option<usize>,
    /// Search for the smallest number of states.
    #[arg(long)]
    min_states: bool,
    /// Largest size tried by --min-states.
    #[arg(long, value_name = "N", default_value_t = 20)]
    max_states: usize,
    /// Require a transition for every state and event.
    #[arg(long)]
    complete: bool,
    #[arg(long, value_enum, default_value = "iterative")]
    method: MethodArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Disable BFS symmetry breaking.
    #[arg(long)]
    no_symmetry: bool,
    /// Directory for output files; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the FSM in Graphviz format.
    #[arg(long)]
    dot: bool,
    /// Emit the FSM as JSON.
    #[arg(long)]
    json: bool,
    /// Write the DIMACS base encoding at --states and exit.
    #[arg(long, value_name = "FILE", requires = "states")]
    dump_cnf: Option<PathBuf>,
    /// Write the QDIMACS problem at --states and --bound and exit.
    #[arg(long, value_name = "FILE", requires = "states")]
    dump_qbf: Option<PathBuf>,
    /// Path length for --dump-qbf.
    #[arg(long, value_name = "K", default_value_t = 1)]
    bound: usize,
    /// Seed recorded with the output; the solvers are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long, value_enum, default_value = "paper")]
    preset: Preset,
    /// Override the number of events.
    #[arg(long)]
    events: Option<usize>,
    /// Override the number of actions.
    #[arg(long)]
    actions: Option<usize>,
    /// Override the number of formulas.
    #[arg(long)]
    formulas: Option<usize>,
    /// Generate complete FSMs.
    #[arg(long)]
    complete: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ShapeArgs {
    fn spec(&self, states: usize) -> InstanceSpec {
        let mut spec = match self.preset {
            Preset::Paper => InstanceSpec::standard(states, self.seed),
            Preset::Small => InstanceSpec::scaled(states, 2, 2, self.seed),
        }
        .with_complete(self.complete);
        if let Some(e) = self.events {
            spec.events = e;
        }
        if let Some(a) = self.actions {
            spec.actions = a;
        }
        if let Some(f) = self.formulas {
            spec.formula_count = f;
        }
        spec
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// States of the reference FSM.
    #[arg(long)]
    states: usize,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Skip the hard-instance filter.
    #[arg(long)]
    easy: bool,
    #[arg(long, default_value = "instance")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Sizes as `3..8` (inclusive) or `3,5,7`.
    #[arg(long, default_value = "3..5")]
    sizes: String,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Comma-separated methods.
    #[arg(long, default_value = "iterative,backtracking")]
    methods: String,
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Skip the hard-instance filter.
    #[arg(long)]
    easy: bool,
    /// Run instances one after another.
    #[arg(long)]
    sequential: bool,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// FSM in the JSON format written by `identify --json`.
    #[arg(long)]
    fsm: PathBuf,
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    ltl: Option<PathBuf>,
    /// Also require every transition to exist.
    #[arg(long)]
    complete: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn resource(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::NoQbfSolver | SynthError::Model(_) => Failure::usage(e.to_string()),
            _ => Failure::resource(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidSpec(_) | HarnessError::Io(_) => Failure::usage(e.to_string()),
            HarnessError::Synth(s) => s.into(),
            _ => Failure::resource(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Parses scenario and LTL files, collecting the alphabet from both.
fn load_inputs(
    mut symbols: AlphabetBuilder,
    scenarios: Option<&Path>,
    ltl: Option<&Path>,
) -> Result<(Alphabet, Vec<Scenario>, Vec<Ltl>), Failure> {
    let scenarios = match scenarios {
        Some(p) => parse_scenarios(&read(p)?, &mut symbols).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let formulas = match ltl {
        Some(p) => parse_ltl_file(&read(p)?, &mut symbols).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let alphabet = symbols.build().map_err(|e| Failure::usage(e.to_string()))?;
    Ok((alphabet, scenarios, formulas))
}

fn mode(complete: bool) -> Completeness {
    if complete {
        Completeness::Complete
    } else {
        Completeness::AtLeastOne
    }
}

fn print_stats(stats: &SynthesisStats) {
    println!("iterations: {}", stats.iterations);
    println!("counterexamples: {}", stats.counterexamples);
    if let Some(k) = stats.final_k {
        println!("bound: {k}");
    }
    println!("seconds: {:.3}", stats.elapsed.as_secs_f64());
}

fn emit_fsm(args: &IdentifyArgs, fsm: &Fsm, alphabet: &Alphabet) -> Result<(), Failure> {
    let dot = fsm_to_dot(fsm, alphabet);
    let json = serde_json::to_string_pretty(&fsm_to_json(fsm, alphabet)).expect("FSM JSON is serializable") + "\n";
    match &args.out {
        Some(dir) => {
            // Without an explicit choice both formats are written.
            let both = !args.dot && !args.json;
            if args.dot || both {
                write(&dir.join("fsm.dot"), &dot)?;
            }
            if args.json || both {
                write(&dir.join("fsm.json"), &json)?;
            }
        }
        None => {
            if args.dot {
                print!("{dot}");
            }
            if args.json {
                print!("{json}");
            }
        }
    }
    Ok(())
}

fn dump(args: &IdentifyArgs, alphabet: &Alphabet, scenarios: &[Scenario], formulas: &[Ltl]) -> Result<(), Failure> {
    let states = args.states.expect("clap requires --states");
    let tree = ScenarioTree::build(alphabet, scenarios).map_err(|e| Failure::usage(e.to_string()))?;
    let graph = inconsistent_pairs(&tree);
    let ctx = EncodingContext {
        num_events: alphabet.num_events(),
        num_actions: alphabet.num_actions(),
        states,
        tree: &tree,
        graph: &graph,
        mode: mode(args.complete),
    };
    if let Some(path) = &args.dump_cnf {
        let mut p = CnfProblem::store_only();
        encode_base(&ctx, &mut p, !args.no_symmetry);
        write(path, &p.to_dimacs())?;
    }
    if let Some(path) = &args.dump_qbf {
        let qbf = assemble_qbf(&ctx, &negated_spec(formulas), args.bound, !args.no_symmetry);
        write(path, &qbf.to_qdimacs().map_err(|e| Failure::resource(e.to_string()))?)?;
    }
    Ok(())
}

fn run_identify(args: &IdentifyArgs) -> Result<u8, Failure> {
    let (alphabet, scenarios, formulas) = load_inputs(AlphabetBuilder::new(), Some(&args.scenarios), args.ltl.as_deref())?;
    if args.dump_cnf.is_some() || args.dump_qbf.is_some() {
        dump(args, &alphabet, &scenarios, &formulas)?;
        return Ok(0);
    }
    let limits = args.solver.limits()?;
    let mut req = SynthesisRequest::new(&alphabet, &scenarios, &formulas, args.states.unwrap_or(1))
        .with_method(args.method.into())
        .with_mode(mode(args.complete));
    req.limits = limits;
    req.symmetry = !args.no_symmetry;
    req.qbf_solver = args.solver.qbf()?.map(|s| s.with_timeout(limits.timeout));
    req.sat_solver = args
        .solver
        .sat_solver
        .as_ref()
        .map(|c| ExternalSolver::new(c.clone()).with_timeout(limits.timeout));
    if let Some(seed) = args.seed {
        println!("seed: {seed}");
    }

    let (result, states) = if args.min_states {
        let min = find_minimum(&req, args.max_states)?;
        println!("lower bound: {}", min.lower_bound);
        for a in &min.attempts {
            println!("  |S|={}: {} ({:.3}s)", a.states, a.outcome, a.stats.elapsed.as_secs_f64());
        }
        let states = min.states;
        (min.result, states)
    } else {
        let states = args.states;
        (identify(&req)?, states)
    };

    println!("result: {}", result.outcome.label());
    print_stats(&result.stats);
    match &result.outcome {
        Outcome::Found(fsm) => {
            println!("states: {}", states.unwrap_or(fsm.state_count()));
            emit_fsm(args, fsm, &alphabet)?;
            Ok(0)
        }
        Outcome::Unsatisfiable => Ok(1),
        Outcome::Timeout | Outcome::BudgetExceeded => Ok(3),
    }
}

fn run_generate(args: &GenerateArgs) -> Result<u8, Failure> {
    let spec = args.shape.spec(args.states);
    let inst = if args.easy {
        harness::make_instance(&spec)?
    } else {
        harness::make_hard_instance(&spec)?
    };
    inst.write_to(&args.out)?;
    println!("wrote {} (hard: {})", args.out.display(), inst.hard);
    Ok(0)
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::usage(format!("invalid --sizes `{text}`"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let sizes: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

fn run_bench_cmd(args: &BenchArgs) -> Result<u8, Failure> {
    let methods = args
        .methods
        .split(',')
        .map(|m| m.trim().parse::<Method>().map_err(Failure::usage))
        .collect::<Result<Vec<_>, _>>()?;
    let limits = args.solver.limits()?;
    let cfg = BenchConfig {
        sizes: parse_sizes(&args.sizes)?,
        runs: args.runs,
        methods,
        template: args.shape.spec(1),
        hard: !args.easy,
        limits,
        qbf_solver: args.solver.qbf()?.map(|s| s.with_timeout(limits.timeout)),
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let csv = bench_csv(&run_bench(&cfg)?);
    match &args.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let json: FsmJson =
        serde_json::from_str(&read(&args.fsm)?).map_err(|e| Failure::usage(format!("{}: {e}", args.fsm.display())))?;
    let mut symbols = AlphabetBuilder::new();
    register_json_symbols(&json, &mut symbols).map_err(|e| Failure::usage(e.to_string()))?;
    let (alphabet, scenarios, formulas) = load_inputs(symbols, args.scenarios.as_deref(), args.ltl.as_deref())?;
    let fsm = fsm_from_json(&json, &alphabet).map_err(|e| Failure::usage(e.to_string()))?;

    let mut ok = true;
    for (i, sc) in scenarios.iter().enumerate() {
        match fsm.run_scenario(sc) {
            ScenarioVerdict::Accept => println!("scenario {}: accepted", i + 1),
            ScenarioVerdict::Reject(pos) => {
                ok = false;
                println!("scenario {}: rejected at element {pos}", i + 1);
            }
        }
    }
    let dead = fsm.dead_states();
    if !dead.is_empty() {
        ok = false;
        let names: Vec<String> = dead.iter().map(|s| (s + 1).to_string()).collect();
        println!("states without outgoing transitions: {}", names.join(", "));
    }
    if args.complete && !fsm.is_complete() {
        ok = false;
        println!("fsm is not complete");
    }
    let verdicts = ModelChecker::new(&formulas).check_partial(&fsm);
    for (f, v) in formulas.iter().zip(verdicts) {
        match v {
            Verdict::Holds => println!("holds: {}", f.display(&alphabet)),
            Verdict::Violated(cex) => {
                ok = false;
                println!("violated: {}", f.display(&alphabet));
                println!("  counterexample: {}", cex.display(&alphabet));
            }
        }
    }
    println!("{}", if ok { "ok" } else { "failed" });
    Ok(if ok { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Identify(a) => run_identify(a),
        Command::Generate(a) => run_generate(a),
        Command::Bench(a) => run_bench_cmd(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_ranges() {
        assert_eq!(parse_sizes("3..5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_sizes("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_sizes("2,7").unwrap(), vec![2, 7]);
        assert!(parse_sizes("0..2").is_err());
        assert!(parse_sizes("x").is_err());
        assert!(parse_sizes("5..3").is_err());
    }

    #[test]
    fn arguments_parse() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

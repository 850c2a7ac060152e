use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use zkplan::eval::{summary_table, write_reports, BUILTIN_TASK_NAMES, DEFAULT_TRIALS};
use zkplan::gateway::{BackendMode, ReplayBackend};
use zkplan::planner::extract_xml;
use zkplan::{
    builtin_task, load_scene, parse_bt, run_batch, run_task, BatchSummary, ChatBackend, RunConfig, RunError, RunResult,
    SubTaskStatus, TaskRequest, TaskRun, TaskSpec, Transcript,
};

const EXIT_TASK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "zkplan", version, about = "Plan, execute and refine behavior trees for household tasks")]
struct Cli {
    /// Write structured JSON logs to this file.
    #[arg(long, global = true, value_name = "PATH")]
    log_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one task end to end and print a summary.
    Run(RunArgs),
    /// Run batches of trials and write report files.
    Eval(EvalArgs),
    /// Check that a file holds a valid behavior tree.
    ValidateBt {
        path: PathBuf,
        /// Extract the tree from surrounding prose or code fences first.
        #[arg(long)]
        extract: bool,
    },
    /// Print the text views a scene renders from the agent's pose.
    RenderScene { path: PathBuf },
    /// Re-run a task against a recorded transcript instead of a live backend.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Scripted,
    Replay,
}

#[derive(Args, Clone)]
struct TaskArgs {
    /// Built-in task name.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_TASK_NAMES))]
    task: Option<String>,
    /// Free-form instruction; needs --scene and at least one --goal.
    #[arg(long, conflicts_with = "task")]
    instruction: Option<String>,
    /// Scene file; replaces the built-in scene when given with --task.
    #[arg(long, value_name = "PATH")]
    scene: Option<PathBuf>,
    /// Goal literal for the oracle, e.g. `In(apple, fridge)=true`. Repeatable.
    #[arg(long = "goal", value_name = "LITERAL")]
    goals: Vec<String>,
}

#[derive(Args, Clone)]
struct BackendArgs {
    /// Run configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Fixture file, directory, or bundled set name (golden, flawed_fixed, flawed).
    #[arg(long, value_name = "SOURCE")]
    fixtures: Option<String>,
    /// Override the refinement budget per sub-task.
    #[arg(long, value_name = "N")]
    max_refinements: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Transcript to replay when --backend replay is chosen.
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
    /// Record the gateway transcript here.
    #[arg(long, value_name = "PATH")]
    transcript_out: Option<PathBuf>,
    /// Print the full run result as JSON instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// `all` or a comma-separated list of built-in task names.
    #[arg(long, default_value = "all")]
    tasks: String,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    n: usize,
    /// Seed for start-heading jitter; trials are identical without it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = "reports")]
    out_dir: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// Recorded transcript (one JSON record per line).
    transcript: PathBuf,
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// Errors that map to the usage exit code and print the subcommand help.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| usage(e.to_string())),
        None => Ok(RunConfig::default()),
    }
}

fn apply_backend_args(config: &mut RunConfig, args: &BackendArgs) {
    if let Some(mode) = args.backend {
        config.backend.mode = match mode {
            BackendArg::Http => BackendMode::Http,
            BackendArg::Scripted => BackendMode::Scripted,
            BackendArg::Replay => BackendMode::Replay,
        };
    }
    if let Some(fixtures) = &args.fixtures {
        config.backend.fixtures = Some(fixtures.clone());
    }
    if let Some(k) = args.max_refinements {
        config.max_refinements = k;
    }
}

fn resolve_task(args: &TaskArgs) -> anyhow::Result<TaskSpec> {
    let goals: Vec<&str> = args.goals.iter().map(String::as_str).collect();
    match (&args.task, &args.instruction) {
        (Some(name), None) => {
            let mut spec = builtin_task(name).ok_or_else(|| usage(format!("unknown task `{name}`")))?;
            if let Some(scene) = &args.scene {
                spec.scene_text = fs::read_to_string(scene)
                    .with_context(|| scene.display().to_string())
                    .map_err(|e| usage(format!("{e:#}")))?;
                spec.scene_path = scene.display().to_string();
            }
            if !goals.is_empty() {
                spec.goals =
                    goals.iter().map(|g| g.parse()).collect::<Result<_, _>>().map_err(|e| usage(format!("{e}")))?;
            }
            Ok(spec)
        }
        (None, Some(instruction)) => {
            let scene = args.scene.as_ref().ok_or_else(|| usage("--instruction needs --scene"))?;
            if goals.is_empty() {
                return Err(usage("--instruction needs at least one --goal for the oracle"));
            }
            TaskSpec::from_parts("custom", instruction, scene, &goals).map_err(usage)
        }
        _ => Err(usage("give either --task or --instruction")),
    }
}

fn exit_for(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) | RunError::UnresolvableGoal(_) => EXIT_USAGE,
        RunError::Planner(_) => EXIT_TASK_FAILED,
    }
}

fn execute(
    spec: &TaskSpec,
    config: &RunConfig,
    backend: Arc<dyn ChatBackend>,
) -> anyhow::Result<Result<TaskRun, RunError>> {
    let world = spec.load_world(config.sensor).map_err(|e| usage(format!("{}: {e}", spec.scene_path)))?;
    let request = TaskRequest::new(&spec.instruction).map_err(|e| usage(e.to_string()))?;
    tracing::info!(task = %spec.name, backend = backend.name(), "starting run");
    Ok(run_task(&request, world, &spec.goals, config, backend))
}

fn print_summary(spec: &TaskSpec, result: &RunResult) {
    println!("task: {} ({})", spec.name, spec.instruction);
    if let Some(ctx) = &result.task_context {
        println!("task id: {}", ctx.task_id);
    }
    for outcome in &result.subtask_outcomes {
        let status = match outcome.subtask.status {
            SubTaskStatus::Done => "done",
            SubTaskStatus::Failed => "failed",
            SubTaskStatus::Pending => "pending",
        };
        println!("  [{status}] {} ({} attempt(s))", outcome.subtask, outcome.attempts.len());
    }
    let m = &result.metrics;
    println!(
        "oracle={} success={} refinements={} llm_calls={} knowledge_bytes={}",
        result.oracle, result.success, m.refinement_count, m.llm_calls, m.knowledge_bytes
    );
    println!("planning_ms={:.2} action_ms={:.2} total_ms={:.2}", m.planning_ms, m.action_ms, m.total_ms);
    if let Some(failure) = &result.failure {
        println!("failure: {failure}");
    }
}

fn report(spec: &TaskSpec, run: &TaskRun, json: bool) -> anyhow::Result<u8> {
    if json {
        println!("{}", serde_json::to_string_pretty(&run.result)?);
    } else {
        print_summary(spec, &run.result);
    }
    Ok(if run.result.success { 0 } else { EXIT_TASK_FAILED })
}

fn cmd_run(args: RunArgs) -> anyhow::Result<u8> {
    let spec = resolve_task(&args.task)?;
    let mut config = load_config(args.backend.config.as_deref())?;
    apply_backend_args(&mut config, &args.backend);
    if let Some(t) = &args.transcript {
        config.backend.transcript = Some(t.clone());
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    let backend = config.backend.build(&spec.name).map_err(|e| usage(e.to_string()))?;
    let run = match execute(&spec, &config, backend)? {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_for(&e));
        }
    };
    if let Some(path) = &args.transcript_out {
        run.transcript.record(path).with_context(|| format!("writing {}", path.display()))?;
    }
    report(&spec, &run, args.json)
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<u8> {
    let mut config = load_config(args.backend.config.as_deref())?;
    apply_backend_args(&mut config, &args.backend);
    config.validate().map_err(|e| usage(e.to_string()))?;
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let names: Vec<String> = if args.tasks == "all" {
        BUILTIN_TASK_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.tasks.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    let mut batches = Vec::new();
    for name in &names {
        let spec = builtin_task(name).ok_or_else(|| usage(format!("unknown task `{name}`")))?;
        tracing::info!(task = %name, n = args.n, "starting batch");
        batches.push(run_batch(&spec, &config, args.n, args.seed)?);
    }
    write_reports(&args.out_dir, &batches)?;
    let summaries: Vec<BatchSummary> = batches.iter().map(|b| b.summary.clone()).collect();
    print!("{}", summary_table(&summaries));
    println!("reports written to {}", args.out_dir.display());
    Ok(0)
}

fn cmd_validate(path: &Path, extract: bool) -> anyhow::Result<u8> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let xml = if extract {
        match extract_xml(&text) {
            Ok(xml) => xml,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return Ok(EXIT_USAGE);
            }
        }
    } else {
        text
    };
    match parse_bt(&xml) {
        Ok(tree) => {
            println!("valid: {} nodes, depth {}", tree.root.size(), tree.root.depth());
            println!("{}", tree.canonical());
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}: {e:?}", path.display());
            eprintln!("{e}");
            Ok(EXIT_USAGE)
        }
    }
}

fn cmd_render(path: &Path) -> anyhow::Result<u8> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let world = load_scene(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    for view in world.render_views() {
        println!("{}\n", view.text);
    }
    Ok(0)
}

fn cmd_replay(args: ReplayArgs) -> anyhow::Result<u8> {
    let spec = resolve_task(&args.task)?;
    let mut config = load_config(args.config.as_deref())?;
    config.backend = zkplan::BackendConfig::replay(&args.transcript);
    let transcript = Transcript::load(&args.transcript).map_err(|e| usage(e.to_string()))?;
    let recorded = transcript.len();
    let backend = Arc::new(ReplayBackend::new(transcript));
    let run = match execute(&spec, &config, backend.clone())? {
        Ok(run) => run,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_for(&e));
        }
    };
    let code = report(&spec, &run, args.json)?;
    if backend.remaining() > 0 {
        eprintln!("warning: {} of {recorded} recorded calls were not used", backend.remaining());
    }
    Ok(code)
}

fn init_logging(path: &Path) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating log file {}", path.display()))?;
    tracing_subscriber::fmt()
        .json()
        .with_ansi(false)
        .with_max_level(tracing::Level::DEBUG)
        .with_writer(Mutex::new(file))
        .try_init()
        .map_err(|e| anyhow!(e))
}

fn subcommand_help(name: Option<&str>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match name.and_then(|n| cmd.find_subcommand_mut(n)) {
        Some(sub) => sub.render_long_help().to_string(),
        None => cmd.render_long_help().to_string(),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let sub = argv.iter().skip(1).find(|a| !a.starts_with('-')).map(String::as_str);
            eprintln!("\n{}", subcommand_help(sub));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(path) = &cli.log_file {
        if let Err(e) = init_logging(path) {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let name = match &cli.command {
        Command::Run(_) => "run",
        Command::Eval(_) => "eval",
        Command::ValidateBt { .. } => "validate-bt",
        Command::RenderScene { .. } => "render-scene",
        Command::Replay(_) => "replay",
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
        Command::ValidateBt { path, extract } => cmd_validate(&path, extract),
        Command::RenderScene { path } => cmd_render(&path),
        Command::Replay(args) => cmd_replay(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}\n\n{}", subcommand_help(Some(name)));
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_TASK_FAILED)
        }
    }
}

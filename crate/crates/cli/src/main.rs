//! `paraschema`: batch front end. Exit status 0 on success, 1 on a domain
//! error or failed check, 2 on a usage error.

mod cmd;
mod report;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::{Format, Report};

#[derive(Parser)]
#[command(
    name = "paraschema",
    version,
    about = "Program schemas, loop separation, dependence, ring simulation, set definitions and DPS"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Step budget for executions and runs.
    #[arg(long, global = true, default_value_t = 100_000)]
    fuel: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Replay the built-in example of the subcommand instead of reading input.
    #[arg(long, global = true)]
    selftest: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Program schemas.
    #[command(subcommand)]
    Schema(SchemaCmd),
    /// Loop transforms.
    #[command(name = "loop", subcommand)]
    Loop(LoopCmd),
    /// Dependence analysis and wavefronts.
    #[command(subcommand)]
    Dep(DepCmd),
    /// Ring simulations and priority loops.
    #[command(subcommand)]
    Ring(RingCmd),
    /// Set-definition systems.
    #[command(subcommand)]
    Setdef(SetdefCmd),
    /// Data processing specifications.
    #[command(subcommand)]
    Dps(DpsCmd),
}

#[derive(Args, Clone)]
pub struct Input {
    /// Input file.
    pub file: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum SchemaCmd {
    /// Check the L-schema conditions.
    Validate(Input),
    /// Execute under an interpretation.
    Run {
        #[command(flatten)]
        input: Input,
        /// Interpretation file; builtins are used when absent.
        #[arg(long)]
        interp: Option<PathBuf>,
        /// Seeded standard interpretation with a finite strict diagram.
        #[arg(long, conflicts_with = "interp")]
        standard: bool,
        /// Seeded total standard interpretation.
        #[arg(long, conflicts_with_all = ["interp", "standard"])]
        total: bool,
        /// Print every executed label.
        #[arg(long)]
        trace: bool,
    },
    /// Ind, Arg and Val of a label.
    Iosets {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        label: Option<String>,
    },
}

#[derive(Subcommand)]
pub enum LoopCmd {
    /// Report backward edges and rewrite to forward orientation.
    Forward(Input),
    /// Split a loop body into controllers and a kernel.
    Separate {
        #[command(flatten)]
        input: Input,
        #[arg(long = "loop", default_value = "m0")]
        label: String,
        /// Compare original and separated runs on this many seeded total
        /// interpretations.
        #[arg(long, default_value_t = 0)]
        check: u64,
    },
    /// Controller depth witness of a separated loop.
    Depth {
        #[command(flatten)]
        input: Input,
        #[arg(long = "loop", default_value = "m0")]
        label: String,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
    },
}

#[derive(Args, Clone)]
pub struct Params {
    /// Parameter override, `NAME=VALUE`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, i64)>,
}

fn parse_param(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|e| format!("{e}"))?))
}

#[derive(Subcommand)]
pub enum DepCmd {
    /// Connection equations of a loop nest.
    Equations {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
    },
    /// Solve one connection equation within bounds.
    Solve {
        /// Equations such as `x^2 = 2*y`, separated by `;`.
        #[arg(long = "eq")]
        equation: Option<String>,
        /// Bounds such as `x=1..10, y=1..10`.
        #[arg(long)]
        bounds: Option<String>,
    },
    /// Wavefront layers of a program with predecessors.
    Wavefront {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        /// Also list the immediate-predecessor edges.
        #[arg(long)]
        edges: bool,
    },
    /// Dependence cone of one iteration point.
    Cone {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        /// Point such as `2,2,2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<i64>,
    },
    /// Execute by wavefronts and compare with sequential execution.
    Exec {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        params: Params,
        /// Number of seeded within-layer shuffles.
        #[arg(long, default_value_t = 1)]
        shuffles: u64,
    },
}

#[derive(Subcommand)]
pub enum RingCmd {
    /// Local equalization of counts.
    Equalize {
        /// Start counts, one per module.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Vec<i64>,
        /// Seeded random counts on this many modules instead.
        #[arg(long, conflicts_with = "start")]
        random: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        max_phases: usize,
    },
    /// Odd-even merge sort of fragments.
    Sort {
        /// Fragments separated by `;`, values by `,`.
        #[arg(long, allow_hyphen_values = true)]
        fragments: Option<String>,
        /// Seeded random fragments on this many modules instead.
        #[arg(long, conflicts_with = "fragments")]
        random: Option<usize>,
        #[arg(long, default_value_t = 3)]
        len: usize,
    },
    /// Handshake automata on a ring.
    Handshake {
        /// Computation time of each module.
        #[arg(long, value_delimiter = ',', default_value = "1,1,1,1")]
        costs: Vec<u64>,
        #[arg(long, default_value_t = 12)]
        steps: usize,
        #[arg(long)]
        no_flags: bool,
    },
    /// Execution diagram of the two-list loop.
    Diagram {
        #[arg(long, value_enum, default_value_t = cmd::ring::DiagramKind::Shared)]
        kind: cmd::ring::DiagramKind,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, default_value_t = 2)]
        a_len: usize,
        #[arg(long, default_value_t = 16)]
        b_len: usize,
    },
    /// Fault detection under the alternation contract.
    Fault {
        #[arg(long, default_value_t = 6)]
        modules: usize,
        #[arg(long, default_value_t = 10)]
        phases: usize,
        /// `MODULE@PHASE`: the module goes silent.
        #[arg(long)]
        silent: Option<String>,
        /// `MODULE@PHASE`: the module reports a wrong state.
        #[arg(long, conflicts_with = "silent")]
        wrong: Option<String>,
    },
    /// Priority loop: certified level and parallel runs.
    Priority {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Parallel level; the certified level when absent.
        #[arg(long)]
        level: Option<u32>,
        /// Number of seeded parallel runs to compare.
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
}

#[derive(Subcommand)]
pub enum SetdefCmd {
    /// Check whether a family is agreed and selected.
    Check {
        #[command(flatten)]
        input: Input,
        /// Family such as `S = {a, b}; T = {c}`.
        #[arg(long)]
        family: Option<String>,
    },
    /// Selection algorithm for a one-form system.
    Solve {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 16)]
        cap: usize,
    },
    /// All agreed and selected families by enumeration.
    Variants {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 16)]
        cap: usize,
    },
    /// Propositional encoding, or the Horn export with `--horn`.
    Encode {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        horn: bool,
        #[arg(long, default_value_t = 16)]
        cap: usize,
    },
}

#[derive(Subcommand)]
pub enum DpsCmd {
    /// Run a specification to quiescence or until fuel runs out.
    Run(Input),
    /// Build and run a partial recursive function.
    Pr {
        /// Function such as `add`, `root` or `primrec(proj(1, 1), compose(succ, proj(2, 3)))`.
        spec: Option<String>,
        #[arg(long, value_delimiter = ',')]
        args: Vec<i64>,
    },
    /// Run a Petri net through its encoding and check it against the net.
    Petri {
        #[command(flatten)]
        input: Input,
        /// Number of firings.
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

pub type Res<T> = Result<T, CliError>;

pub fn domain<E: Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

/// Run settings shared by every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub fuel: u64,
    pub selftest: bool,
}

impl Ctx {
    /// Input text: the fixture under `--selftest`, otherwise the file.
    pub fn input(&self, input: &Input, fixture: &str) -> Res<String> {
        if self.selftest {
            return Ok(fixture.to_string());
        }
        let Some(path) = &input.file else {
            return Err(CliError::Usage("an input file is required unless --selftest is given".into()));
        };
        std::fs::read_to_string(path).map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Schema(c) => match c {
            SchemaCmd::Validate(_) => "schema validate",
            SchemaCmd::Run { .. } => "schema run",
            SchemaCmd::Iosets { .. } => "schema iosets",
        },
        Command::Loop(c) => match c {
            LoopCmd::Forward(_) => "loop forward",
            LoopCmd::Separate { .. } => "loop separate",
            LoopCmd::Depth { .. } => "loop depth",
        },
        Command::Dep(c) => match c {
            DepCmd::Equations { .. } => "dep equations",
            DepCmd::Solve { .. } => "dep solve",
            DepCmd::Wavefront { .. } => "dep wavefront",
            DepCmd::Cone { .. } => "dep cone",
            DepCmd::Exec { .. } => "dep exec",
        },
        Command::Ring(c) => match c {
            RingCmd::Equalize { .. } => "ring equalize",
            RingCmd::Sort { .. } => "ring sort",
            RingCmd::Handshake { .. } => "ring handshake",
            RingCmd::Diagram { .. } => "ring diagram",
            RingCmd::Fault { .. } => "ring fault",
            RingCmd::Priority { .. } => "ring priority",
        },
        Command::Setdef(c) => match c {
            SetdefCmd::Check { .. } => "setdef check",
            SetdefCmd::Solve { .. } => "setdef solve",
            SetdefCmd::Variants { .. } => "setdef variants",
            SetdefCmd::Encode { .. } => "setdef encode",
        },
        Command::Dps(c) => match c {
            DpsCmd::Run(_) => "dps run",
            DpsCmd::Pr { .. } => "dps pr",
            DpsCmd::Petri { .. } => "dps petri",
        },
    }
}

fn dispatch(cli: &Cli, r: &mut Report) -> Res<()> {
    let ctx = Ctx { seed: cli.seed, fuel: cli.fuel, selftest: cli.selftest };
    match &cli.command {
        Command::Schema(c) => cmd::schema::run(&ctx, c, r),
        Command::Loop(c) => cmd::schema::run_loop(&ctx, c, r),
        Command::Dep(c) => cmd::dep::run(&ctx, c, r),
        Command::Ring(c) => cmd::ring::run(&ctx, c, r),
        Command::Setdef(c) => cmd::setdef::run(&ctx, c, r),
        Command::Dps(c) => cmd::dps::run(&ctx, c, r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = Report::new(name(&cli.command), cli.seed, cli.fuel);
    match dispatch(&cli, &mut report) {
        Ok(()) => {
            print!("{}", report.render(cli.format));
            if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

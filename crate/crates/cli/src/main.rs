//! Command-line driver: apply networks to datasets, compute capacities,
//! enumerate feature values, extract and compile programs, verify
//! equivalence, and run the alternative dataset encodings.
//!
//! Exit codes: 0 on success (including a VERIFIED report), 1 when a
//! verification counterexample is found, 2 on usage, parse, or input
//! errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gnnlog::capacity::{bound_aggregation, layer_capacities};
use gnnlog::codec::canonical_transform;
use gnnlog::compile::compile;
use gnnlog::encodings::{kgnn_encode, mgnn_decode, mgnn_encode_with};
use gnnlog::extract::extract_program;
use gnnlog::gnn::{forward_trace, LayerTrace};
use gnnlog::gnn_json::{parse_gnn, print_gnn};
use gnnlog::rational::print_q;
use gnnlog::text::{parse_dataset, parse_program, print_dataset, print_program};
use gnnlog::values::{NextValue, Probe, ValueEnumerator};
use gnnlog::verify::{check_equivalence, check_isomorphism_invariance, check_monotonicity};
use gnnlog::{Dataset, ExecMode, Gnn, Program, Signature};

#[derive(Parser)]
#[command(name = "gnnlog", version, about = "Exact toolchain between max-sum GNNs and Datalog")]
struct Cli {
    /// Write the main output to this path instead of stdout.
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Run sweeps on a single thread (results are identical either way).
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a network to a dataset and print the transformed dataset.
    Apply {
        /// Network description (JSON).
        gnn: PathBuf,
        /// Input dataset (facts, one per line).
        dataset: PathBuf,
        /// Also print the per-layer vertex labellings to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Apply a program's single-step consequence operator to a dataset.
    Consequences {
        /// Program (rules, one per line).
        program: PathBuf,
        /// Input dataset.
        dataset: PathBuf,
    },
    /// Report per-layer aggregation capacities and the overall capacity.
    Capacity {
        gnn: PathBuf,
    },
    /// List the first values a feature component can take, in increasing order.
    EnumerateValues {
        gnn: PathBuf,
        /// Layer (0 = network input).
        #[arg(long)]
        layer: usize,
        /// Component position within the layer, 1-based.
        #[arg(long)]
        position: usize,
        /// How many values to list.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Extract an equivalent program from a monotonic max-sum network.
    Extract {
        gnn: PathBuf,
        /// Abort if the rule-body space exceeds this many candidates.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Compile an inequality-free tree-shaped program into a network (JSON).
    Compile {
        program: PathBuf,
        /// Body depth bound (default: tightest over the program).
        #[arg(long)]
        depth: Option<usize>,
        /// Body fan-out bound (default: tightest over the program).
        #[arg(long)]
        fanout: Option<usize>,
        /// Number of unary predicates (default: inferred from the program).
        #[arg(long)]
        delta: Option<usize>,
        /// Comma-separated edge colours (default: inferred from the program).
        #[arg(long, value_delimiter = ',')]
        colors: Option<Vec<String>>,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Differentially test a network against a program; also checks
    /// monotonicity and renaming-invariance of the network.
    Verify {
        gnn: PathBuf,
        program: PathBuf,
        /// Exhaustively check every dataset with up to this many constants.
        #[arg(long, default_value_t = 2)]
        max_constants: usize,
        /// Random datasets over larger universes to try afterwards.
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-encode a dataset for a network pipeline.
    Encode(EncodeArgs),
    /// Read application facts back off a pair-vertex dataset.
    Decode {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        scheme: DecodeScheme,
        /// Number of unary input predicates A1..Aeps.
        #[arg(long)]
        eps: usize,
        /// Total number of labels (unary plus binary input predicates).
        #[arg(long)]
        delta: usize,
    },
}

#[derive(Args)]
struct EncodeArgs {
    dataset: PathBuf,
    #[arg(long, value_enum)]
    scheme: EncodeScheme,
    /// mgnn: number of unary input predicates A1..Aeps.
    #[arg(long)]
    eps: Option<usize>,
    /// mgnn: total number of labels (unary plus binary input predicates).
    #[arg(long)]
    delta: Option<usize>,
    /// mgnn: materialize pair terms beyond co-occurring pairs.
    #[arg(long)]
    extensions: bool,
    /// kgnn2: number of vertex labels A1..Adelta1.
    #[arg(long)]
    delta1: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodeScheme {
    Mgnn,
    Kgnn2,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecodeScheme {
    Mgnn,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_gnn(path: &Path) -> Result<Gnn> {
    parse_gnn(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> Result<Program> {
    parse_program(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn render_trace(trace: &LayerTrace) -> String {
    let mut out = String::new();
    for (layer, values) in trace.iter().enumerate() {
        write!(out, "layer {layer}:").unwrap();
        for (term, vector) in values {
            let entries: Vec<String> = vector.iter().map(print_q).collect();
            write!(out, " {term}=[{}]", entries.join(",")).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Infer the smallest signature whose predicates cover the program.
fn inferred_signature(program: &Program) -> (usize, Vec<String>) {
    let mut delta = 0usize;
    let mut colours: Vec<String> = Vec::new();
    let mut note = |atom: &gnnlog::Atom| {
        if let Some(i) = Signature::parse_unary_predicate(&atom.predicate) {
            delta = delta.max(i);
        }
        if let Some(c) = Signature::parse_edge_predicate(&atom.predicate) {
            if !colours.iter().any(|have| have.as_str() == c) {
                colours.push(c.to_string());
            }
        }
    };
    for rule in program.iter() {
        note(&rule.head);
        for literal in &rule.body {
            if let gnnlog::logic::Literal::Atom(atom) = literal {
                note(atom);
            }
        }
    }
    colours.sort();
    (delta, colours)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mode = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let mut exit = ExitCode::SUCCESS;
    let output = match cli.command {
        Command::Apply { gnn, dataset, trace } => {
            let gnn = load_gnn(&gnn)?;
            let dataset = load_dataset(&dataset)?;
            if trace {
                let graph = gnnlog::codec::encode(gnn.signature(), &dataset)?;
                eprint!("{}", render_trace(&forward_trace(&gnn, &graph)?));
            }
            print_dataset(&canonical_transform(&gnn, &dataset)?)
        }
        Command::Consequences { program, dataset } => {
            let program = load_program(&program)?;
            let dataset = load_dataset(&dataset)?;
            print_dataset(&program.immediate_consequences(&dataset))
        }
        Command::Capacity { gnn } => {
            let gnn = load_gnn(&gnn)?;
            let report = layer_capacities(&gnn)?;
            let bounded = bound_aggregation(&gnn, &report);
            let mut text = report.to_string();
            text.push('\n');
            writeln!(
                text,
                "aggregation bounds after capping: {}",
                bounded
                    .layers()
                    .iter()
                    .map(|l| match l.agg {
                        gnnlog::gnn::AggregationSpec::Finite(k) => k.to_string(),
                        gnnlog::gnn::AggregationSpec::Infinite => "inf".into(),
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            )
            .unwrap();
            text
        }
        Command::EnumerateValues { gnn, layer, position, count } => {
            let gnn = load_gnn(&gnn)?;
            if layer > gnn.num_layers() {
                return Err(anyhow!(
                    "layer {layer} out of range; the network has layers 0..={}",
                    gnn.num_layers()
                ));
            }
            let width = gnn.dims()[layer];
            if !(1..=width).contains(&position) {
                return Err(anyhow!("position {position} out of range 1..={width}"));
            }
            let mut enumerator = ValueEnumerator::new(&gnn);
            let mut text = String::new();
            let mut probe = Probe::Start;
            for _ in 0..count {
                match enumerator.next(layer, position, probe) {
                    NextValue::Value(v) => {
                        writeln!(text, "{}", print_q(&v)).unwrap();
                        probe = Probe::After(v);
                    }
                    NextValue::End => {
                        writeln!(text, "(end)").unwrap();
                        break;
                    }
                }
            }
            text
        }
        Command::Extract { gnn, budget } => {
            let gnn = load_gnn(&gnn)?;
            print_program(&extract_program(&gnn, budget, mode)?)
        }
        Command::Compile { program, depth, fanout, delta, colors, budget } => {
            let program = load_program(&program)?;
            let (inferred_delta, inferred_colours) = inferred_signature(&program);
            let delta = delta.unwrap_or(inferred_delta);
            let colours = colors.unwrap_or(inferred_colours);
            if delta == 0 {
                return Err(anyhow!(
                    "the program mentions no unary predicate; pass --delta explicitly"
                ));
            }
            let sig = Signature::new(colours, delta);
            let compiled = compile(&sig, &program, depth, fanout, budget)?;
            print_gnn(&compiled.gnn)
        }
        Command::Verify { gnn, program, max_constants, trials, seed } => {
            let gnn = load_gnn(&gnn)?;
            let program = load_program(&program)?;
            let mut text = String::new();
            let equivalence =
                check_equivalence(&gnn, &program, max_constants, trials, seed, mode)?;
            writeln!(text, "equivalence: {equivalence}").unwrap();
            let monotonicity = check_monotonicity(&gnn, trials, seed, mode);
            writeln!(text, "monotonicity: {monotonicity}").unwrap();
            let invariance = check_isomorphism_invariance(&gnn, trials, seed, mode);
            writeln!(text, "renaming invariance: {invariance}").unwrap();
            if !(equivalence.is_verified() && monotonicity.is_verified() && invariance.is_verified())
            {
                exit = ExitCode::from(1);
            }
            text
        }
        Command::Encode(args) => match args.scheme {
            EncodeScheme::Mgnn => {
                let eps = args.eps.ok_or_else(|| anyhow!("--scheme mgnn requires --eps"))?;
                let delta =
                    args.delta.ok_or_else(|| anyhow!("--scheme mgnn requires --delta"))?;
                let dataset = load_dataset(&args.dataset)?;
                print_dataset(&mgnn_encode_with(eps, delta, &dataset, args.extensions)?)
            }
            EncodeScheme::Kgnn2 => {
                let delta1 =
                    args.delta1.ok_or_else(|| anyhow!("--scheme kgnn2 requires --delta1"))?;
                let dataset = load_dataset(&args.dataset)?;
                let encoded = kgnn_encode(delta1, &dataset)?;
                let mut text = print_dataset(&encoded.dataset);
                writeln!(
                    text,
                    "% signature: colours {:?}, delta {}",
                    encoded.signature.colours(),
                    encoded.signature.delta()
                )
                .unwrap();
                for ((i, j, connected), flat) in &encoded.mapping {
                    writeln!(
                        text,
                        "% U{flat} = pair label (first {i}, second {j}, {})",
                        if *connected { "connected" } else { "unconnected" }
                    )
                    .unwrap();
                }
                text
            }
        },
        Command::Decode { dataset, scheme: DecodeScheme::Mgnn, eps, delta } => {
            let dataset = load_dataset(&dataset)?;
            print_dataset(&mgnn_decode(eps, delta, &dataset))
        }
    };
    match cli.output {
        Some(path) => fs::write(&path, output)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{output}"),
    }
    Ok(exit)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

//! Command-line front end: run memory calls on files, verify the sparse
//! operators against the dense oracle, and benchmark the pipeline.
//!
//! Exit codes: 0 success, 1 malformed input, 2 shape/resource errors,
//! 3 verification tolerance violation. Diagnostics go to standard error;
//! data goes to standard output or `--out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwqram::error::Error;
use qwqram::io;
use qwqram::oracle::verify_operators;
use qwqram::pipeline::{qram_traced_with, qram_with};
use qwqram::state::{AddressSuperposition, Exec, MemoryTable, TreeShape};

#[derive(Parser)]
#[command(
    name = "qwqram",
    version,
    about = "Quantum-walk bucket-brigade qRAM simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one memory call on a memory table and an address superposition.
    Run(RunArgs),
    /// Cross-check every operator against the dense-matrix oracle.
    Verify(VerifyArgs),
    /// Time the pipeline and report its step count.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dump,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// Address width (tree depth).
    #[arg(long)]
    n: u32,
    /// Data width.
    #[arg(long)]
    m: u32,
    /// Memory table file (ADDRESS<TAB>DATA lines).
    #[arg(long)]
    memory: PathBuf,
    /// Address superposition file (ADDRESS<TAB>RE[<TAB>IM] lines).
    #[arg(long)]
    addresses: PathBuf,
    /// Emit the full labeled trace instead of only the final state.
    #[arg(long)]
    trace: bool,
    /// Output path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep input amplitudes as written instead of normalizing them.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, value_enum, default_value = "dump")]
    format: Format,
    /// Apply operators entry-parallel (output stays byte-identical).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    m: u32,
    /// Random states per sparse/dense equivalence check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest dense dimension the oracle may materialize.
    #[arg(long, default_value_t = 4096)]
    cap: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    m: u32,
    /// Number of distinct addresses in the input superposition.
    #[arg(long, default_value_t = 4)]
    address_count: usize,
    /// Number of timed pipeline executions.
    #[arg(long, default_value_t = 100)]
    repetitions: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    parallel: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    ExitCode::from(code as u8)
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    err.exit_code()
}

fn read_input(path: &Path) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        1
    })
}

fn write_output(out: &Option<PathBuf>, text: &str) -> i32 {
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
            0
        }
        None => {
            print!("{text}");
            0
        }
    }
}

fn cmd_run(args: &RunArgs) -> i32 {
    let shape = match TreeShape::new(args.n, args.m) {
        Ok(shape) => shape,
        Err(e) => return fail(&e),
    };
    let memory_text = match read_input(&args.memory) {
        Ok(text) => text,
        Err(code) => return code,
    };
    let addresses_text = match read_input(&args.addresses) {
        Ok(text) => text,
        Err(code) => return code,
    };
    let memory = match io::parse_memory(&memory_text, shape) {
        Ok(memory) => memory,
        Err(e) => return fail(&e),
    };
    let addrs = match io::parse_addresses(&addresses_text, shape, !args.no_normalize) {
        Ok(addrs) => addrs,
        Err(e) => return fail(&e),
    };
    let exec = if args.parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    };
    // The superposition is already canonical; don't normalize twice.
    let text = if args.trace {
        match qram_traced_with(shape, &addrs, &memory, false, exec) {
            Ok((_, trace)) => match args.format {
                Format::Dump => io::serialize_trace(&trace),
                Format::Json => io::trace_to_json(&trace),
            },
            Err(e) => return fail(&e),
        }
    } else {
        match qram_with(shape, &addrs, &memory, false, exec) {
            Ok(state) => match args.format {
                Format::Dump => io::serialize_state(&state),
                Format::Json => io::state_to_json(&state),
            },
            Err(e) => return fail(&e),
        }
    };
    write_output(&args.out, &text)
}

fn cmd_verify(args: &VerifyArgs) -> i32 {
    let shape = match TreeShape::new(args.n, args.m) {
        Ok(shape) => shape,
        Err(e) => return fail(&e),
    };
    let checks = match verify_operators(shape, args.trials, args.seed, args.cap) {
        Ok(checks) => checks,
        Err(e) => return fail(&e),
    };
    let mut violations = 0usize;
    for check in &checks {
        if !check.passed() {
            violations += 1;
        }
        println!(
            "{}: max deviation {:.3e} (tolerance {:.0e}) {}",
            check.name,
            check.deviation,
            check.tolerance,
            if check.passed() { "ok" } else { "FAIL" }
        );
    }
    if violations == 0 {
        println!("verify: PASS ({} checks)", checks.len());
        0
    } else {
        println!("verify: FAIL ({} of {} checks)", violations, checks.len());
        3
    }
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let shape = match TreeShape::new(args.n, args.m) {
        Ok(shape) => shape,
        Err(e) => return fail(&e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let wanted = args.address_count.max(1).min(shape.leaf_count() as usize);
    let mut addresses: std::collections::BTreeSet<u64> = std::collections::BTreeSet::new();
    while addresses.len() < wanted {
        addresses.insert(rng.gen_range(0..shape.leaf_count()));
    }
    let addresses: Vec<u64> = addresses.into_iter().collect();
    let mut memory = MemoryTable::new(shape);
    for address in &addresses {
        let value = rng.gen_range(0..shape.data_count());
        memory.set(*address, value).expect("sampled in range");
    }
    let addrs = AddressSuperposition::uniform(&addresses).expect("nonempty by construction");
    let exec = if args.parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    };

    // One traced call pins down the structural claims before timing.
    let (_, trace) = match qram_traced_with(shape, &addrs, &memory, true, exec) {
        Ok(result) => result,
        Err(e) => return fail(&e),
    };
    let steps = trace.len() - 1;
    let support_sizes: std::collections::BTreeSet<usize> =
        trace.steps().map(|(_, state)| state.len()).collect();

    let repetitions = args.repetitions.max(1);
    let mut total = Duration::ZERO;
    let mut best = Duration::MAX;
    for _ in 0..repetitions {
        let started = Instant::now();
        let out = qram_with(shape, &addrs, &memory, true, exec);
        let elapsed = started.elapsed();
        if let Err(e) = out {
            return fail(&e);
        }
        total += elapsed;
        best = best.min(elapsed);
    }
    let mean = total / repetitions as u32;

    println!(
        "n={} m={} addresses={} repetitions={repetitions}",
        shape.n(),
        shape.m(),
        addresses.len()
    );
    println!(
        "pipeline steps: {steps} (expected 2n+1 = {})",
        2 * shape.n() + 1
    );
    println!(
        "support size through pipeline: {}",
        support_sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    println!("mean time per call: {:.3e} s", mean.as_secs_f64());
    println!("min time per call: {:.3e} s", best.as_secs_f64());
    if steps != (2 * shape.n() + 1) as usize {
        eprintln!("error: step count mismatch");
        return 3;
    }
    0
}

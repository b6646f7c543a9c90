use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sokorl::bench::{
    ablate, benchmark, cap_sweep, solved_count, stratified_subset, write_ablation_csv,
    write_bench_csv, BenchConfig, ABLATION_ROWS,
};
use sokorl::features::FeatureSet;
use sokorl::levels::{parse_collection, Level};
use sokorl::lurd::replay;
use sokorl::pipeline::{check_compatible, solve, train_both, SolveConfig, TrainConfig};
use sokorl::search::Problem;
use sokorl::value::{load_weights, save_weights, Weights};

const EXIT_UNSOLVED: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "sokorl", version, about = "Sokoban solver with backward-agent hint features")]
struct Cli {
    /// Directory searched for level files given by bare name.
    #[arg(long, env = "SOKORL_DATA", default_value = "data", global = true)]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the backward agent, then the forward agent.
    Train(TrainCmd),
    /// Solve one level and print its LURD solution.
    Solve(SolveCmd),
    /// Solve every level of a collection and report per-level results.
    Benchmark(BenchCmd),
    /// Train and benchmark each row of the feature grid.
    Ablate(AblateCmd),
    /// Replay a LURD string, printing every intermediate board.
    Replay(ReplayCmd),
}

#[derive(Args, Clone)]
struct TrainOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.98)]
    alpha_decay: f64,
    /// Backward training cap (expansions per episode).
    #[arg(long, default_value_t = 50)]
    backward_train_cap: usize,
    /// Forward training cap (expansions per episode).
    #[arg(long, default_value_t = 100)]
    forward_train_cap: usize,
    /// Backward cap for the training levels' trajectories.
    #[arg(long, default_value_t = 50)]
    hint_cap: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    /// Drop both hint features (Overlap and Perm).
    #[arg(long)]
    no_hints: bool,
    #[arg(long)]
    no_overlap: bool,
    #[arg(long)]
    no_perm: bool,
    #[arg(long)]
    no_connectivity: bool,
    /// Disable static dead-square pruning.
    #[arg(long)]
    no_dead_squares: bool,
    #[arg(long)]
    no_transposition: bool,
}

impl TrainOpts {
    fn features(&self) -> FeatureSet {
        let hints = !self.no_hints;
        FeatureSet::with_options(hints && !self.no_overlap, hints && !self.no_perm, !self.no_connectivity)
    }

    fn config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            alpha0: self.alpha0,
            alpha_decay: self.alpha_decay,
            backward_cap: self.backward_train_cap,
            forward_cap: self.forward_train_cap,
            hint_cap: self.hint_cap,
            epsilon: self.epsilon,
            gamma: self.gamma,
            features: self.features(),
            seed: self.seed,
            dead_square_pruning: !self.no_dead_squares,
            transposition: !self.no_transposition,
        }
    }
}

#[derive(Args, Clone)]
struct SolveOpts {
    #[arg(long, default_value_t = 10_000)]
    backward_cap: usize,
    #[arg(long, default_value_t = 50_000)]
    forward_cap: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget per level in seconds; 0 disables it.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long)]
    no_dead_squares: bool,
    #[arg(long)]
    no_transposition: bool,
}

impl SolveOpts {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            backward_cap: self.backward_cap,
            forward_cap: self.forward_cap,
            epsilon: self.epsilon,
            seed: self.seed,
            time_limit: (self.time_limit > 0.0).then(|| Duration::from_secs_f64(self.time_limit)),
            dead_square_pruning: !self.no_dead_squares,
            transposition: !self.no_transposition,
        }
    }
}

#[derive(Args)]
struct WeightOpts {
    /// Directory holding backward.weights and forward.weights.
    #[arg(long)]
    weights_dir: Option<PathBuf>,
    #[arg(long)]
    backward: Option<PathBuf>,
    #[arg(long)]
    forward: Option<PathBuf>,
}

impl WeightOpts {
    fn load(&self) -> Result<(Weights, Weights)> {
        let pick = |explicit: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
            match (explicit, &self.weights_dir) {
                (Some(p), _) => Ok(p.clone()),
                (None, Some(dir)) => Ok(dir.join(name)),
                (None, None) => bail!("give --weights-dir or --{}", name.trim_end_matches(".weights")),
            }
        };
        let bp = pick(&self.backward, "backward.weights")?;
        let fp = pick(&self.forward, "forward.weights")?;
        let bw = load_weights(&bp).with_context(|| format!("loading {}", bp.display()))?;
        let fw = load_weights(&fp).with_context(|| format!("loading {}", fp.display()))?;
        check_compatible(&bw, &fw)?;
        Ok((bw, fw))
    }
}

#[derive(Args)]
struct TrainCmd {
    /// Training collection (XSB).
    #[arg(long)]
    levels: PathBuf,
    #[arg(long, default_value = "run")]
    out_dir: PathBuf,
    #[command(flatten)]
    train: TrainOpts,
}

#[derive(Args)]
struct SolveCmd {
    /// Level or collection file.
    #[arg(long)]
    level: PathBuf,
    /// 1-based level number within a collection.
    #[arg(long, default_value_t = 1)]
    index: usize,
    #[command(flatten)]
    weights: WeightOpts,
    #[command(flatten)]
    solve: SolveOpts,
}

#[derive(Args)]
struct BenchCmd {
    #[arg(long)]
    levels: PathBuf,
    #[command(flatten)]
    weights: WeightOpts,
    #[command(flatten)]
    solve: SolveOpts,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Per-level CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated forward caps to report solved counts for.
    #[arg(long, value_delimiter = ',')]
    cap_sweep: Vec<usize>,
    /// Leave the wall-time column empty so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Only run an evenly spread subset of this many levels.
    #[arg(long)]
    subset: Option<usize>,
    /// Write `level<TAB>LURD` lines for every solved level.
    #[arg(long)]
    solutions: Option<PathBuf>,
}

#[derive(Args)]
struct AblateCmd {
    /// Test collection.
    #[arg(long)]
    levels: PathBuf,
    /// Training collection.
    #[arg(long)]
    train_levels: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    train: TrainOpts,
    #[command(flatten)]
    caps: CapOpts,
}

/// Inference budgets for ablation; seed, epsilon and pruning flags come from
/// the training options.
#[derive(Args, Clone)]
struct CapOpts {
    #[arg(long, default_value_t = 10_000)]
    backward_cap: usize,
    #[arg(long, default_value_t = 50_000)]
    forward_cap: usize,
    /// Wall-clock budget per level in seconds; 0 disables it.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
}

impl CapOpts {
    fn config(&self, train: &TrainOpts) -> SolveConfig {
        SolveOpts {
            backward_cap: self.backward_cap,
            forward_cap: self.forward_cap,
            epsilon: train.epsilon,
            seed: train.seed,
            time_limit: self.time_limit,
            no_dead_squares: train.no_dead_squares,
            no_transposition: train.no_transposition,
        }
        .config()
    }
}

#[derive(Args)]
struct ReplayCmd {
    #[arg(long)]
    level: PathBuf,
    #[arg(long, default_value_t = 1)]
    index: usize,
    /// LURD string to play.
    #[arg(long)]
    lurd: String,
    /// Pause between frames in milliseconds.
    #[arg(long, default_value_t = 0)]
    delay: u64,
}

fn resolve(data_dir: &Path, path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    let in_data = data_dir.join(path);
    if in_data.exists() {
        return in_data;
    }
    let with_ext = data_dir.join(path).with_extension("xsb");
    if with_ext.exists() {
        with_ext
    } else {
        path.to_path_buf()
    }
}

fn read_levels(data_dir: &Path, path: &Path) -> Result<Vec<Level>> {
    let path = resolve(data_dir, path);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let levels = parse_collection(&text).with_context(|| format!("parsing {}", path.display()))?;
    if levels.is_empty() {
        bail!("{} holds no levels", path.display());
    }
    Ok(levels)
}

fn pick_level(data_dir: &Path, path: &Path, index: usize) -> Result<Level> {
    let mut levels = read_levels(data_dir, path)?;
    if index == 0 || index > levels.len() {
        bail!("level {index} out of range 1..={}", levels.len());
    }
    Ok(levels.swap_remove(index - 1))
}

fn problems(levels: Vec<Level>, subset: Option<usize>) -> Vec<Problem> {
    let levels = match subset {
        Some(n) => {
            let keep = stratified_subset(levels.len(), n);
            levels
                .into_iter()
                .enumerate()
                .filter(|(i, _)| keep.contains(i))
                .map(|(_, l)| l)
                .collect()
        }
        None => levels,
    };
    levels.into_iter().map(Problem::new).collect()
}

fn train(data_dir: &Path, cmd: &TrainCmd) -> Result<()> {
    let problems = problems(read_levels(data_dir, &cmd.levels)?, None);
    let config = cmd.train.config();
    let trained = train_both(&problems, &config)?;
    fs::create_dir_all(&cmd.out_dir)?;
    save_weights(&trained.backward, &cmd.out_dir.join("backward.weights"))?;
    save_weights(&trained.forward, &cmd.out_dir.join("forward.weights"))?;
    trained
        .backward_report
        .write_csv(fs::File::create(cmd.out_dir.join("backward_report.csv"))?)?;
    trained
        .forward_report
        .write_csv(fs::File::create(cmd.out_dir.join("forward_report.csv"))?)?;
    println!(
        "trained on {} levels in {:.1}s (backward {:.1}s, forward {:.1}s); weights in {}",
        problems.len(),
        (trained.backward_report.elapsed + trained.forward_report.elapsed).as_secs_f64(),
        trained.backward_report.elapsed.as_secs_f64(),
        trained.forward_report.elapsed.as_secs_f64(),
        cmd.out_dir.display()
    );
    Ok(())
}

fn solve_cmd(data_dir: &Path, cmd: &SolveCmd) -> Result<bool> {
    let level = pick_level(data_dir, &cmd.level, cmd.index)?;
    let (bw, fw) = cmd.weights.load()?;
    let s = solve(&Problem::new(level), &bw, &fw, &cmd.solve.config())?;
    match &s.lurd {
        Some(lurd) => println!("{lurd}"),
        None => println!("FAILED"),
    }
    eprintln!(
        "solved={} backward_nodes={} forward_nodes={} pushes={} time={:.3}s",
        s.solved(),
        s.backward.as_ref().map_or(0, |b| b.expansions),
        s.forward.expansions,
        s.forward.solution.as_ref().map_or(0, Vec::len),
        s.elapsed.as_secs_f64()
    );
    Ok(s.solved())
}

fn bench_cmd(data_dir: &Path, cmd: &BenchCmd) -> Result<()> {
    let problems = problems(read_levels(data_dir, &cmd.levels)?, cmd.subset);
    let (bw, fw) = cmd.weights.load()?;
    let mut solve = cmd.solve.config();
    if let Some(&max) = cmd.cap_sweep.iter().max() {
        solve.forward_cap = solve.forward_cap.max(max);
    }
    let config = BenchConfig {
        solve,
        workers: cmd.workers,
    };
    let rows = benchmark(&problems, &bw, &fw, &config)?;
    match &cmd.out {
        Some(path) => write_bench_csv(&rows, !cmd.no_timing, fs::File::create(path)?)?,
        None => write_bench_csv(&rows, !cmd.no_timing, std::io::stdout())?,
    }
    if let Some(path) = &cmd.solutions {
        let text: String = rows
            .iter()
            .filter_map(|r| r.lurd.as_ref().map(|l| format!("{}\t{}\n", r.level, l)))
            .collect();
        fs::write(path, text)?;
    }
    for (cap, solved) in cap_sweep(&rows, &cmd.cap_sweep) {
        eprintln!("cap {cap}: solved {solved}/{}", rows.len());
    }
    eprintln!("solved {}/{}", solved_count(&rows), rows.len());
    Ok(())
}

fn ablate_cmd(data_dir: &Path, cmd: &AblateCmd) -> Result<()> {
    let training = problems(read_levels(data_dir, &cmd.train_levels)?, None);
    let test = problems(read_levels(data_dir, &cmd.levels)?, cmd.subset);
    let bench = BenchConfig {
        solve: cmd.caps.config(&cmd.train),
        workers: cmd.workers,
    };
    let rows = ablate(&training, &test, &cmd.train.config(), &bench, &ABLATION_ROWS)?;
    match &cmd.out {
        Some(path) => write_ablation_csv(&rows, fs::File::create(path)?)?,
        None => write_ablation_csv(&rows, std::io::stdout())?,
    }
    Ok(())
}

fn replay_cmd(data_dir: &Path, cmd: &ReplayCmd) -> Result<bool> {
    let level = pick_level(data_dir, &cmd.level, cmd.index)?;
    let r = replay(&level, &cmd.lurd)?;
    for (i, frame) in r.frames.iter().enumerate() {
        if i > 0 && cmd.delay > 0 {
            thread::sleep(Duration::from_millis(cmd.delay));
        }
        println!("step {i}");
        print!("{frame}");
        println!();
    }
    println!("{} pushes, {}", r.pushes, if r.solved { "solved" } else { "not solved" });
    Ok(r.solved)
}

fn run(cli: &Cli) -> Result<bool> {
    let data = &cli.data_dir;
    match &cli.command {
        Command::Train(cmd) => train(data, cmd).map(|_| true),
        Command::Solve(cmd) => solve_cmd(data, cmd),
        Command::Benchmark(cmd) => bench_cmd(data, cmd).map(|_| true),
        Command::Ablate(cmd) => ablate_cmd(data, cmd).map(|_| true),
        Command::Replay(cmd) => replay_cmd(data, cmd),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_UNSOLVED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}

//! Benchmark runs over level collections: per-level results, solved counts
//! against node budgets, and the feature ablation grid.

use std::io;
use std::time::Duration;

use rayon::prelude::*;

use crate::features::FeatureSet;
use crate::pipeline::{derive_seed, solve, train_both, PipelineError, SolveConfig, TrainConfig, Trained};
use crate::search::Problem;
use crate::value::Weights;

const BENCH_STREAM: u64 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// 1-based position in the collection.
    pub level: usize,
    pub name: String,
    pub solved: bool,
    pub backward_nodes: usize,
    pub forward_nodes: usize,
    pub pushes: Option<usize>,
    pub wall_time_s: f64,
    pub lurd: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub solve: SolveConfig,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

/// Solves every level with frozen weights. Each level's search is seeded from
/// the run seed and the level's position, so results do not depend on the
/// number of workers or their scheduling.
pub fn benchmark(
    problems: &[Problem],
    backward: &Weights,
    forward: &Weights,
    config: &BenchConfig,
) -> Result<Vec<BenchRow>, PipelineError> {
    let run = || {
        problems
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let solve_config = SolveConfig {
                    seed: derive_seed(config.solve.seed, BENCH_STREAM, i as u64),
                    ..config.solve.clone()
                };
                let s = solve(p, backward, forward, &solve_config)?;
                log::debug!("level {} solved {} in {:?}", i + 1, s.solved(), s.elapsed);
                Ok(BenchRow {
                    level: i + 1,
                    name: p.level.name().unwrap_or("").to_string(),
                    solved: s.solved(),
                    backward_nodes: s.backward.as_ref().map_or(0, |b| b.expansions),
                    forward_nodes: s.forward.expansions,
                    pushes: s.forward.solution.as_ref().map(Vec::len),
                    wall_time_s: s.elapsed.as_secs_f64(),
                    lurd: s.lurd,
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()
    };
    if config.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("thread pool")
            .install(run)
    }
}

pub fn solved_count(rows: &[BenchRow]) -> usize {
    rows.iter().filter(|r| r.solved).count()
}

/// Writes benchmark rows as CSV. Without `timing` the wall-time column is
/// left empty so the output depends on the seed alone.
pub fn write_bench_csv<W: io::Write>(rows: &[BenchRow], timing: bool, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "name", "solved", "backward_nodes", "forward_nodes", "pushes", "wall_time_s"])?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.name.clone(),
            r.solved.to_string(),
            r.backward_nodes.to_string(),
            r.forward_nodes.to_string(),
            r.pushes.map(|p| p.to_string()).unwrap_or_default(),
            if timing { format!("{:.3}", r.wall_time_s) } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn bench_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut buf = Vec::new();
    write_bench_csv(rows, timing, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Solved counts at smaller forward caps, read off one run at the largest
/// cap. A seeded search stopped at cap `c` is a prefix of the same search
/// with a larger cap, so a level counts as solved at `c` when it was solved
/// within `c` expansions.
pub fn cap_sweep(rows: &[BenchRow], caps: &[usize]) -> Vec<(usize, usize)> {
    caps.iter()
        .map(|&c| {
            let n = rows
                .iter()
                .filter(|r| r.solved && r.forward_nodes <= c)
                .count();
            (c, n)
        })
        .collect()
}

/// Feature rows of the ablation grid as (overlap, perm, connectivity), in
/// table order: two rows without hints, four with.
pub const ABLATION_ROWS: [(bool, bool, bool); 6] = [
    (false, false, false),
    (false, false, true),
    (true, false, false),
    (true, false, true),
    (true, true, false),
    (true, true, true),
];

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub overlap: bool,
    pub perm: bool,
    pub connectivity: bool,
    pub solved: usize,
    pub total: usize,
    pub trained: Trained,
    pub rows: Vec<BenchRow>,
}

impl AblationRow {
    pub fn has_hints(&self) -> bool {
        self.overlap || self.perm
    }
}

/// Trains and benchmarks every configuration of the grid with the same seed.
pub fn ablate(
    training: &[Problem],
    test: &[Problem],
    train_config: &TrainConfig,
    bench_config: &BenchConfig,
    grid: &[(bool, bool, bool)],
) -> Result<Vec<AblationRow>, PipelineError> {
    grid.iter()
        .map(|&(overlap, perm, connectivity)| {
            let config = TrainConfig {
                features: FeatureSet::with_options(overlap, perm, connectivity),
                ..train_config.clone()
            };
            let trained = train_both(training, &config)?;
            let rows = benchmark(test, &trained.backward, &trained.forward, bench_config)?;
            log::info!(
                "ablation overlap={overlap} perm={perm} connectivity={connectivity}: solved {}/{}",
                solved_count(&rows),
                rows.len()
            );
            Ok(AblationRow {
                overlap,
                perm,
                connectivity,
                solved: solved_count(&rows),
                total: rows.len(),
                trained,
                rows,
            })
        })
        .collect()
}

pub fn write_ablation_csv<W: io::Write>(rows: &[AblationRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "overlap", "perm", "connectivity", "solved", "total"])?;
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    for r in rows {
        w.write_record([
            if r.has_hints() { "with_hints" } else { "no_hints" }.to_string(),
            yes_no(r.overlap).to_string(),
            yes_no(r.perm).to_string(),
            yes_no(r.connectivity).to_string(),
            r.solved.to_string(),
            r.total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Every `stride`-th level starting from the first, which spreads a subset
/// evenly over a collection ordered by difficulty.
pub fn stratified_subset(count: usize, size: usize) -> Vec<usize> {
    if size == 0 || count == 0 {
        return Vec::new();
    }
    let size = size.min(count);
    (0..size).map(|k| k * count / size).collect()
}

pub fn default_time_limit() -> Duration {
    Duration::from_secs(600)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::parse_xsb;

    fn row(solved: bool, nodes: usize) -> BenchRow {
        BenchRow {
            level: 1,
            name: String::new(),
            solved,
            backward_nodes: 0,
            forward_nodes: nodes,
            pushes: solved.then_some(3),
            wall_time_s: 0.5,
            lurd: None,
        }
    }

    #[test]
    fn sweep_counts() {
        let rows = [row(true, 10), row(true, 5000), row(false, 50000)];
        assert_eq!(
            cap_sweep(&rows, &[1000, 5000, 10000, 50000]),
            vec![(1000, 1), (5000, 2), (10000, 2), (50000, 2)]
        );
    }

    #[test]
    fn subset() {
        let s = stratified_subset(90, 15);
        assert_eq!(s.len(), 15);
        assert_eq!(s[0], 0);
        assert_eq!(s[1], 6);
        assert_eq!(s[14], 84);
        assert_eq!(stratified_subset(3, 15), vec![0, 1, 2]);
    }

    #[test]
    fn csv_layout() {
        let csv = bench_csv(&[row(true, 4)], false);
        assert_eq!(
            csv,
            "level,name,solved,backward_nodes,forward_nodes,pushes,wall_time_s\n1,,true,0,4,3,\n"
        );
        assert!(bench_csv(&[row(true, 4)], true).ends_with("0.500\n"));
    }

    #[test]
    fn corridor_benchmark() {
        let problems = vec![Problem::new(parse_xsb("#####\n#@$.#\n#####").unwrap())];
        let bw = Weights::zeros(FeatureSet::core(), 0.95);
        let fw = Weights::zeros(FeatureSet::with_options(true, true, false), 0.95);
        let config = BenchConfig {
            solve: SolveConfig::default(),
            workers: 1,
        };
        let rows = benchmark(&problems, &bw, &fw, &config).unwrap();
        assert_eq!(solved_count(&rows), 1);
        assert_eq!(rows[0].lurd.as_deref(), Some("R"));
        assert_eq!(rows[0].pushes, Some(1));
    }
}

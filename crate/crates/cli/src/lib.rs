//! Library side of the `iddp` command: flag parsing, input loading, the
//! three subcommands and output formatting.

pub mod bench;
pub mod error;
pub mod format;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use iddp::heuristics::HeuristicKind;
use iddp::seqio::{self, build_cost_model, Alphabet, EndGapMode, RawMatrix};
use iddp::{Algorithm, AlignConfig, Problem, UpperBound};

pub use error::{CliError, Result};
use format::{format_alignment, format_gapped_fasta, format_stats, BLOCK_WIDTH};

#[derive(Debug, Parser)]
#[command(name = "iddp", version, about = "Optimal multiple sequence alignment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align the sequences of a FASTA file.
    Align(RunConfig),
    /// Solve by dense dynamic programming over the whole lattice.
    Oracle(RunConfig),
    /// Run every instance of a manifest and write a results table.
    Bench(bench::BenchArgs),
}

/// Problem and search settings shared by all subcommands.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// FASTA file with the sequences.
    #[arg(long)]
    pub input: PathBuf,
    /// Substitution matrix; a unit mismatch matrix over the input residues when omitted.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub gap_open: i64,
    #[arg(long, default_value_t = 9)]
    pub gap_extend: i64,
    /// charged, open_free or all_free.
    #[arg(long, default_value = "open_free")]
    pub end_gap_mode: EndGapMode,
    /// dijkstra, astar, pea or iddp.
    #[arg(long, default_value = "iddp")]
    pub algorithm: Algorithm,
    /// zero, pair, allM, one or oneM. Defaults to all3 for four or more sequences, pair otherwise.
    #[arg(long)]
    pub heuristic: Option<HeuristicKind>,
    /// PEA* successor slack.
    #[arg(long, default_value_t = 0)]
    pub pea_c: i64,
    /// Slack of the pairwise tables above each pairwise optimum.
    #[arg(long, default_value_t = 300)]
    pub delta_pair: i64,
    /// Initial slack of the larger subset tables.
    #[arg(long, default_value_t = 20)]
    pub delta_m: i64,
    /// Budget in footprint units (64 per search record, 24 per table value).
    #[arg(long)]
    pub memory_cap: Option<u64>,
    /// `star` or a cost in user units.
    #[arg(long, default_value = "star")]
    pub upper_bound_mode: UpperBound,
    /// Keep the initial subset tables for the whole run.
    #[arg(long)]
    pub no_adaptive: bool,
    /// Block-formatted alignment; stdout when omitted.
    #[arg(long)]
    pub alignment_out: Option<PathBuf>,
    /// Gapped FASTA output.
    #[arg(long)]
    pub fasta_out: Option<PathBuf>,
    /// Stats record; stdout after the alignment when omitted.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gap-open", self.gap_open),
            ("gap-extend", self.gap_extend),
            ("pea-c", self.pea_c),
            ("delta-pair", self.delta_pair),
            ("delta-m", self.delta_m),
        ] {
            if v < 0 {
                return Err(CliError::Usage(format!(
                    "--{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.algorithm == Algorithm::Dijkstra
            && self.heuristic.is_some_and(|h| h != HeuristicKind::Zero)
        {
            return Err(CliError::Usage(
                "dijkstra takes no heuristic; use --heuristic zero or omit it".into(),
            ));
        }
        if self.pea_c > 0 && self.algorithm != Algorithm::Pea {
            return Err(CliError::Usage(
                "--pea-c applies to --algorithm pea only".into(),
            ));
        }
        if let UpperBound::Given(u) = self.upper_bound_mode {
            if u < 0 {
                return Err(CliError::Usage(format!(
                    "upper bound must be non-negative, got {u}"
                )));
            }
        }
        Ok(())
    }

    pub fn align_config(&self) -> AlignConfig {
        let heuristic = match self.algorithm {
            Algorithm::Dijkstra => Some(HeuristicKind::Zero),
            _ => self.heuristic,
        };
        AlignConfig {
            algorithm: self.algorithm,
            heuristic,
            pea_c: self.pea_c,
            delta_pair: self.delta_pair,
            delta_m: self.delta_m,
            memory_cap: self.memory_cap,
            upper: self.upper_bound_mode,
            adaptive: !self.no_adaptive,
        }
    }
}

/// A parsed problem plus what is needed to print it.
pub struct Loaded {
    pub problem: Problem,
    pub alphabet: Alphabet,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Residue symbols of a FASTA text, upper-cased, in order of first use.
fn residue_symbols(text: &str) -> Vec<u8> {
    let mut seen = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('>')) {
        for c in line.bytes().filter(|c| c.is_ascii_alphabetic()) {
            let c = c.to_ascii_uppercase();
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
    }
    seen
}

pub fn load(cfg: &RunConfig) -> Result<Loaded> {
    cfg.validate()?;
    let fasta = read(&cfg.input)?;
    let matrix = match &cfg.matrix {
        Some(path) => {
            let text = read(path)?;
            seqio::parse_cost_matrix(&text)
                .map_err(|e| CliError::core(path.display().to_string(), e))?
        }
        None => RawMatrix::unit(&residue_symbols(&fasta))
            .map_err(|e| CliError::core("unit matrix", e))?,
    };
    let input = cfg.input.display().to_string();
    let seqs = seqio::parse_fasta(&fasta, &matrix.alphabet)
        .map_err(|e| CliError::core(input.clone(), e))?;
    let cost = build_cost_model(&matrix, cfg.gap_open, cfg.gap_extend, cfg.end_gap_mode)
        .map_err(|e| CliError::core("cost model", e))?;
    let problem = Problem::new(seqs, cost).map_err(|e| CliError::core(input, e))?;
    Ok(Loaded {
        problem,
        alphabet: matrix.alphabet,
    })
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut String) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}

/// Emit the three outputs of a solved run; returns what belongs on stdout.
fn emit(
    cfg: &RunConfig,
    loaded: &Loaded,
    alignment: &iddp::lattice::Alignment,
    stats: &str,
) -> Result<String> {
    let rows = alignment.render_rows(&loaded.problem, &loaded.alphabet);
    let names = loaded.problem.ids().to_vec();
    let mut stdout = String::new();
    write_or_print(
        cfg.alignment_out.as_deref(),
        &format_alignment(&rows, &names, BLOCK_WIDTH),
        &mut stdout,
    )?;
    if let Some(p) = &cfg.fasta_out {
        fs::write(p, format_gapped_fasta(&rows, &names)).map_err(|e| CliError::io(p, e))?;
    }
    if !stdout.is_empty() && cfg.stats_out.is_none() {
        stdout.push('\n');
    }
    write_or_print(cfg.stats_out.as_deref(), stats, &mut stdout)?;
    Ok(stdout)
}

/// Search outcome of one configured run.
pub struct Outcome {
    pub report: iddp::Report<iddp::Score>,
    /// Cost in user units.
    pub cost: i64,
}

/// Solve and re-score the alignment column by column.
pub fn solve(loaded: &Loaded, cfg: &RunConfig) -> Result<Outcome> {
    let mut report = iddp::align(&loaded.problem, &cfg.align_config())
        .map_err(|e| CliError::core("search", e))?;
    let sol = &mut report.solution;
    sol.stats.algorithm = cfg.algorithm.to_string();
    let rescored = iddp::oracle::sp_cost(&loaded.problem, &sol.alignment);
    if rescored != sol.cost {
        return Err(CliError::core(
            "search",
            iddp::Error::Reconstruction(format!(
                "alignment scores {rescored}, search reported {}",
                sol.cost
            )),
        ));
    }
    let cost = sol.user_cost();
    Ok(Outcome { report, cost })
}

/// `align`: returns the stdout text.
pub fn cmd_align(cfg: &RunConfig) -> Result<String> {
    let loaded = load(cfg)?;
    let Outcome { report, cost } = solve(&loaded, cfg)?;
    let sol = &report.solution;
    log::info!(
        "{} with {} heuristic: cost {cost}, {} expansions in {} iterations",
        cfg.algorithm,
        report.heuristic,
        sol.stats.expansions,
        sol.stats.iterations
    );
    emit(
        cfg,
        &loaded,
        &sol.alignment,
        &format_stats(&sol.stats, cost),
    )
}

/// `oracle`: dense DP, prints `g_star=` and the alignment.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<String> {
    let loaded = load(cfg)?;
    let (g, _, alignment) =
        iddp::oracle::full_dp(&loaded.problem).map_err(|e| CliError::core("oracle", e))?;
    let g_star = g / iddp::seqio::SCALE;
    emit(cfg, &loaded, &alignment, &format!("g_star={g_star}\n"))
}

//! Manifest-driven batch runs.
//!
//! A manifest holds one instance per line: a FASTA path (relative to the
//! manifest) followed by any `align` flags overriding the bench-wide ones.
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::format::{stats_values, STATS_KEYS};
use crate::{load, solve, RunConfig};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Instance list.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Results table; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Flags applied to every instance before its own overrides, given after `--`.
    #[arg(last = true)]
    pub defaults: Vec<String>,
}

#[derive(Debug, Parser)]
#[command(
    name = "manifest-line",
    no_binary_name = true,
    args_override_self = true
)]
struct Line {
    #[command(flatten)]
    cfg: RunConfig,
}

/// One manifest entry, resolved.
#[derive(Debug, Clone)]
pub struct Instance {
    pub line: usize,
    pub name: String,
    pub cfg: RunConfig,
}

fn split_line(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_owned).collect()
}

/// Parse the manifest text; `dir` anchors relative paths.
pub fn parse_manifest(text: &str, dir: &Path, defaults: &[String]) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut words = split_line(raw);
        let path = dir.join(words.remove(0));
        let mut argv = defaults.to_vec();
        argv.push("--input".into());
        argv.push(path.display().to_string());
        argv.extend(words);
        let parsed = Line::try_parse_from(&argv).map_err(|e| {
            CliError::Usage(format!("manifest line {}: {}", i + 1, e.to_string().trim()))
        })?;
        let mut cfg = parsed.cfg;
        for p in [
            &mut cfg.matrix,
            &mut cfg.alignment_out,
            &mut cfg.fasta_out,
            &mut cfg.stats_out,
        ]
        .into_iter()
        .flatten()
        {
            *p = dir.join(&*p);
        }
        let name = path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        out.push(Instance {
            line: i + 1,
            name,
            cfg,
        });
    }
    Ok(out)
}

/// Columns of the results table.
pub fn header() -> String {
    let mut cols = vec!["instance", "k", "heuristic", "delta_pair", "status"];
    cols.extend(STATS_KEYS);
    cols.join("\t")
}

fn run_one(inst: &Instance) -> String {
    let mut row = vec![inst.name.clone()];
    let result = load(&inst.cfg).and_then(|loaded| {
        let k = loaded.problem.k();
        solve(&loaded, &inst.cfg).map(|o| (k, o))
    });
    match result {
        Ok((k, o)) => {
            row.extend([
                k.to_string(),
                o.report.heuristic.to_string(),
                inst.cfg.delta_pair.to_string(),
                "optimal".into(),
            ]);
            row.extend(stats_values(&o.report.solution.stats, o.cost));
        }
        Err(e) => {
            log::warn!("{} (manifest line {}): {e}", inst.name, inst.line);
            row.extend([
                "".into(),
                "".into(),
                inst.cfg.delta_pair.to_string(),
                e.status().into(),
            ]);
            row.push(inst.cfg.algorithm.to_string());
            row.extend(std::iter::repeat_n(String::new(), STATS_KEYS.len() - 1));
        }
    }
    row.join("\t")
}

/// Run every instance and return the table text, rows in manifest order.
pub fn run(instances: &[Instance], jobs: usize) -> Result<String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let rows: Vec<String> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                log::info!("running {}", inst.name);
                run_one(inst)
            })
            .collect()
    });
    let mut table = header();
    table.push('\n');
    for r in rows {
        let _ = writeln!(table, "{r}");
    }
    Ok(table)
}

/// `bench`: returns the table when it goes to stdout.
pub fn cmd_bench(args: &BenchArgs) -> Result<String> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| CliError::io(&args.manifest, e))?;
    let dir = args.manifest.parent().unwrap_or(Path::new("."));
    let instances = parse_manifest(&text, dir, &args.defaults)?;
    if instances.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no instances",
            args.manifest.display()
        )));
    }
    let table = run(&instances, args.jobs)?;
    match &args.output {
        Some(p) => {
            fs::write(p, table).map_err(|e| CliError::io(p, e))?;
            Ok(String::new())
        }
        None => Ok(table),
    }
}

//! Text renderings of alignments and run statistics.

use std::fmt::Write;

use iddp::search::SearchStats;

/// Default block width for [`format_alignment`].
pub const BLOCK_WIDTH: usize = 64;

/// Wrapped alignment blocks, each row prefixed by its padded id.
///
/// `rows` are already rendered (lower case, `_` gaps).
pub fn format_alignment(rows: &[String], names: &[String], width: usize) -> String {
    let width = width.max(1);
    let pad = names.iter().map(|n| n.chars().count()).max().unwrap_or(0);
    let len = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
    let chars: Vec<Vec<char>> = rows.iter().map(|r| r.chars().collect()).collect();
    let mut out = String::new();
    let mut start = 0;
    while start < len {
        if start > 0 {
            out.push('\n');
        }
        let end = (start + width).min(len);
        for (name, row) in names.iter().zip(&chars) {
            let chunk: String = row[start.min(row.len())..end.min(row.len())]
                .iter()
                .collect();
            let _ = writeln!(out, "{name:<pad$}  {chunk}");
        }
        start = end;
    }
    out
}

/// Gapped FASTA with `-` gaps and upper-case residues, 60 columns a line.
pub fn format_gapped_fasta(rows: &[String], names: &[String]) -> String {
    let mut out = String::new();
    for (name, row) in names.iter().zip(rows) {
        let _ = writeln!(out, ">{name}");
        let chars: Vec<char> = row
            .chars()
            .map(|c| {
                if c == '_' {
                    '-'
                } else {
                    c.to_ascii_uppercase()
                }
            })
            .collect();
        for line in chars.chunks(60) {
            out.extend(line);
            out.push('\n');
        }
    }
    out
}

/// Keys of [`format_stats`], in output order.
pub const STATS_KEYS: [&str; 11] = [
    "algo",
    "cost",
    "expansions",
    "expansions_last_iter",
    "max_open",
    "max_open_closed",
    "heu_entries",
    "heu_miss_rate",
    "nu",
    "time_ms",
    "peak_mem_units",
];

/// Stats values as strings, keyed like [`STATS_KEYS`].
pub fn stats_values(stats: &SearchStats, cost: i64) -> [String; 11] {
    [
        stats.algorithm.clone(),
        cost.to_string(),
        stats.expansions.to_string(),
        stats.expansions_last_iter.to_string(),
        stats.max_open.to_string(),
        stats.max_open_closed.to_string(),
        stats.heu_entries.to_string(),
        format!("{:.4}", stats.miss_rate()),
        format!("{:.4}", stats.nu()),
        stats.time.as_millis().to_string(),
        stats.peak_mem_units.to_string(),
    ]
}

/// One `key=value` line per statistic. `cost` is in user units.
pub fn format_stats(stats: &SearchStats, cost: i64) -> String {
    let mut out = String::new();
    for (k, v) in STATS_KEYS.iter().zip(stats_values(stats, cost)) {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn short_alignment_is_one_block() {
        let text = format_alignment(&names(&["ab_", "abc"]), &names(&["x", "long"]), BLOCK_WIDTH);
        assert_eq!(text, "x     ab_\nlong  abc\n");
    }

    #[test]
    fn wide_alignment_wraps() {
        let row = "a".repeat(70);
        let text = format_alignment(&[row.clone(), row], &names(&["s1", "s2"]), 64);
        let blocks: Vec<&str> = text.split("\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].lines().next().unwrap().len(), 4 + 64);
        assert_eq!(blocks[1].lines().next().unwrap().len(), 4 + 6);
    }

    #[test]
    fn fasta_uses_dashes() {
        assert_eq!(
            format_gapped_fasta(&names(&["a_c"]), &names(&["s"])),
            ">s\nA-C\n"
        );
    }

    #[test]
    fn single_pass_nu_is_one() {
        let stats = SearchStats {
            algorithm: "dijkstra".into(),
            expansions: 10,
            ..Default::default()
        };
        let text = format_stats(&stats, 3);
        assert!(text.lines().any(|l| l == "nu=1.0000"));
        assert!(text.starts_with("algo=dijkstra\ncost=3\n"));
        assert_eq!(text.lines().count(), STATS_KEYS.len());
    }
}

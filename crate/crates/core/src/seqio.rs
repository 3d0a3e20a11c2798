//! Sequence and substitution-matrix input, and the scaled cost model.
//!
//! Matrix files are plain ASCII:
//!
//! ```text
//! # comment
//!    A  B
//! A  0  1
//! B  1  0
//! ```
//!
//! The first data line names the residues; each following line repeats the
//! row symbol and lists one integer per column. Gap penalties are not part of
//! the file.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Cost;

/// Character used for gaps when rendering alignments.
pub const GAP_CHAR: char = '_';

const NO_SYMBOL: u8 = u8::MAX;

/// Ordered residue alphabet with case-insensitive lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<u8>,
    lookup: [u8; 256],
}

impl Alphabet {
    pub fn new(symbols: &[u8]) -> Result<Self> {
        if symbols.len() >= NO_SYMBOL as usize {
            return Err(Error::MatrixFormat {
                line: 0,
                msg: "alphabet too large".into(),
            });
        }
        let mut lookup = [NO_SYMBOL; 256];
        let mut canon = Vec::with_capacity(symbols.len());
        for (i, &s) in symbols.iter().enumerate() {
            let up = s.to_ascii_uppercase();
            if up as char == GAP_CHAR || !up.is_ascii_graphic() {
                return Err(Error::MatrixFormat {
                    line: 0,
                    msg: format!("invalid residue symbol '{}'", s as char),
                });
            }
            if lookup[up as usize] != NO_SYMBOL {
                return Err(Error::MatrixFormat {
                    line: 0,
                    msg: format!("duplicate residue symbol '{}'", s as char),
                });
            }
            lookup[up as usize] = i as u8;
            lookup[up.to_ascii_lowercase() as usize] = i as u8;
            canon.push(up);
        }
        Ok(Self {
            symbols: canon,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, c: u8) -> Option<u8> {
        match self.lookup[c as usize] {
            NO_SYMBOL => None,
            i => Some(i),
        }
    }

    /// Canonical (upper-case) symbol for an index.
    pub fn symbol(&self, idx: u8) -> char {
        self.symbols[idx as usize] as char
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub id: String,
    pub residues: Vec<u8>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// Parse FASTA text against an alphabet. Residues are case-folded; the id is
/// the header up to the first whitespace.
pub fn parse_fasta(text: &str, alphabet: &Alphabet) -> Result<Vec<Sequence>> {
    let mut out: Vec<Sequence> = Vec::new();
    let mut current: Option<Sequence> = None;

    let finish = |seq: Sequence, out: &mut Vec<Sequence>| -> Result<()> {
        if seq.residues.is_empty() {
            return Err(Error::EmptyRecord(seq.id));
        }
        out.push(seq);
        Ok(())
    };

    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            if let Some(seq) = current.take() {
                finish(seq, &mut out)?;
            }
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            current = Some(Sequence {
                id,
                residues: Vec::new(),
            });
        } else if line.starts_with(';') {
            continue;
        } else {
            match current.as_mut() {
                Some(seq) => {
                    for c in line.bytes().filter(|c| !c.is_ascii_whitespace()) {
                        match alphabet.index_of(c) {
                            Some(idx) => seq.residues.push(idx),
                            None => {
                                return Err(Error::UnknownResidue {
                                    record: seq.id.clone(),
                                    offset: seq.residues.len(),
                                    ch: c as char,
                                })
                            }
                        }
                    }
                }
                None if line.trim().is_empty() => {}
                None => {
                    return Err(Error::MalformedFasta(
                        "sequence data before the first '>' header".into(),
                    ))
                }
            }
        }
    }
    if let Some(seq) = current.take() {
        finish(seq, &mut out)?;
    }
    if out.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(out)
}

/// Residue-residue penalty matrix in user units, as read from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMatrix {
    pub alphabet: Alphabet,
    values: Vec<i64>,
}

impl RawMatrix {
    pub fn new(alphabet: Alphabet, values: Vec<i64>) -> Result<Self> {
        let n = alphabet.len();
        if values.len() != n * n {
            return Err(Error::MatrixFormat {
                line: 0,
                msg: format!("expected {} entries, got {}", n * n, values.len()),
            });
        }
        let m = Self { alphabet, values };
        m.check_symmetric()?;
        Ok(m)
    }

    /// Unit mismatch matrix: 0 on the diagonal, 1 elsewhere.
    pub fn unit(symbols: &[u8]) -> Result<Self> {
        let alphabet = Alphabet::new(symbols)?;
        let n = alphabet.len();
        let values = (0..n * n).map(|i| i64::from(i / n != i % n)).collect();
        Self::new(alphabet, values)
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn get(&self, a: u8, b: u8) -> i64 {
        self.values[a as usize * self.size() + b as usize]
    }

    fn check_symmetric(&self) -> Result<()> {
        let n = self.size();
        for a in 0..n {
            for b in (a + 1)..n {
                if self.values[a * n + b] != self.values[b * n + a] {
                    return Err(Error::AsymmetricMatrix {
                        a: self.alphabet.symbol(a as u8),
                        b: self.alphabet.symbol(b as u8),
                    });
                }
            }
        }
        Ok(())
    }

    /// Serialize in the same format `parse_cost_matrix` reads.
    pub fn to_text(&self) -> String {
        let n = self.size();
        let width = self
            .values
            .iter()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1)
            .max(1)
            + 1;
        let mut s = String::new();
        s.push(' ');
        for &c in self.alphabet.symbols() {
            let _ = write!(s, "{:>width$}", c as char);
        }
        s.push('\n');
        for a in 0..n {
            s.push(self.alphabet.symbol(a as u8));
            for b in 0..n {
                let _ = write!(s, "{:>width$}", self.values[a * n + b]);
            }
            s.push('\n');
        }
        s
    }
}

/// Parse a whitespace-separated residue cost matrix.
pub fn parse_cost_matrix(text: &str) -> Result<RawMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::MatrixFormat {
        line: 0,
        msg: "empty matrix file".into(),
    })?;
    let mut symbols = Vec::new();
    for tok in header.split_whitespace() {
        let b = tok.as_bytes();
        if b.len() != 1 {
            return Err(Error::MatrixFormat {
                line: hline,
                msg: format!("header token '{tok}' is not a single symbol"),
            });
        }
        symbols.push(b[0]);
    }
    let alphabet = Alphabet::new(&symbols).map_err(|e| match e {
        Error::MatrixFormat { msg, .. } => Error::MatrixFormat { line: hline, msg },
        other => other,
    })?;
    let n = alphabet.len();

    let mut values = vec![0i64; n * n];
    let mut rows = 0usize;
    for (lineno, line) in lines {
        if rows == n {
            return Err(Error::MatrixFormat {
                line: lineno,
                msg: format!("row count mismatch: more than {n} rows"),
            });
        }
        let mut toks = line.split_whitespace();
        let label = toks.next().unwrap_or_default();
        let expected = alphabet.symbol(rows as u8);
        if label.len() != 1 || !label.eq_ignore_ascii_case(&expected.to_string()) {
            return Err(Error::MatrixFormat {
                line: lineno,
                msg: format!("expected row label '{expected}', found '{label}'"),
            });
        }
        let mut cols = 0usize;
        for tok in toks {
            if cols == n {
                return Err(Error::MatrixFormat {
                    line: lineno,
                    msg: format!("row has more than {n} entries"),
                });
            }
            values[rows * n + cols] = i64::from_str(tok).map_err(|_| Error::MatrixFormat {
                line: lineno,
                msg: format!("non-integer entry '{tok}'"),
            })?;
            cols += 1;
        }
        if cols != n {
            return Err(Error::MatrixFormat {
                line: lineno,
                msg: format!("row has {cols} entries, expected {n}"),
            });
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::MatrixFormat {
            line: 0,
            msg: format!("row count mismatch: {rows} rows for {n} symbols"),
        });
    }
    RawMatrix::new(alphabet, values)
}

/// How gaps touching either end of a sequence are charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndGapMode {
    /// End gaps are charged like interior gaps.
    Charged,
    /// End gaps pay extension only, no opening penalty.
    OpenFree,
    /// End gaps are free.
    AllFree,
}

impl FromStr for EndGapMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "charged" => Ok(Self::Charged),
            "open_free" => Ok(Self::OpenFree),
            "all_free" => Ok(Self::AllFree),
            other => Err(format!("unknown end-gap mode '{other}'")),
        }
    }
}

impl std::fmt::Display for EndGapMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Charged => "charged",
            Self::OpenFree => "open_free",
            Self::AllFree => "all_free",
        })
    }
}

/// Substitution and affine gap penalties in scaled units (twice the user
/// units), so that half of a gap-opening penalty is still an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel<S> {
    n: usize,
    sub: Vec<S>,
    pub gap_extend: S,
    pub gap_open: S,
    pub half_open: S,
    pub end_gap_mode: EndGapMode,
}

/// Scale factor between user units and internal units.
pub const SCALE: i64 = 2;

impl<S: Cost> CostModel<S> {
    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> S {
        self.sub[a as usize * self.n + b as usize]
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    /// Largest single substitution or extension penalty.
    pub fn max_pair_penalty(&self) -> S {
        self.sub.iter().copied().fold(self.gap_extend, S::max)
    }

    pub fn to_user(v: S) -> i64 {
        v.as_i64() / SCALE
    }
}

/// Build the scaled cost model from user-unit penalties.
pub fn build_cost_model<S: Cost>(
    matrix: &RawMatrix,
    gap_open: i64,
    gap_extend: i64,
    end_gap_mode: EndGapMode,
) -> Result<CostModel<S>> {
    for &v in matrix.values.iter().chain([gap_open, gap_extend].iter()) {
        if v < 0 {
            return Err(Error::NegativePenalty { value: v });
        }
    }
    let scale = |v: i64| -> Result<S> {
        v.checked_mul(SCALE)
            .and_then(S::from_i64)
            .ok_or_else(|| Error::InvalidProblem(format!("penalty {v} overflows the cost type")))
    };
    let sub = matrix
        .values
        .iter()
        .map(|&v| scale(v))
        .collect::<Result<Vec<_>>>()?;
    Ok(CostModel {
        n: matrix.size(),
        sub,
        gap_extend: scale(gap_extend)?,
        gap_open: scale(gap_open)?,
        half_open: S::from_i64(gap_open)
            .ok_or_else(|| Error::InvalidProblem("gap_open overflows the cost type".into()))?,
        end_gap_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(b"AB").unwrap()
    }

    fn a_to(last: u8) -> Alphabet {
        Alphabet::new(&(b'A'..=last).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn fasta_two_records() {
        let seqs = parse_fasta(">s1\nAB\n>s2\nBA", &ab()).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(
            seqs[0],
            Sequence {
                id: "s1".into(),
                residues: vec![0, 1]
            }
        );
        assert_eq!(
            seqs[1],
            Sequence {
                id: "s2".into(),
                residues: vec![1, 0]
            }
        );
    }

    #[test]
    fn fasta_multiline_and_case_folding() {
        let alpha = a_to(b'D');
        let seqs = parse_fasta(">x description here\nab\ncd\n", &alpha).unwrap();
        assert_eq!(seqs[0].id, "x");
        assert_eq!(seqs[0].residues, vec![0, 1, 2, 3]);
    }

    #[test]
    fn fasta_unknown_residue_reports_offset() {
        let err = parse_fasta(">x\nAZ!", &a_to(b'Z')).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownResidue {
                record: "x".into(),
                offset: 2,
                ch: '!'
            }
        );
        // Without Z in the alphabet the first offender is Z itself.
        let err = parse_fasta(">x\nAZ!", &a_to(b'Y')).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownResidue {
                record: "x".into(),
                offset: 1,
                ch: 'Z'
            }
        );
    }

    #[test]
    fn fasta_errors() {
        assert_eq!(
            parse_fasta(">a\n>b\nA", &ab()).unwrap_err(),
            Error::EmptyRecord("a".into())
        );
        assert_eq!(parse_fasta("\n\n", &ab()).unwrap_err(), Error::NoRecords);
        assert!(matches!(
            parse_fasta("AB\n>a\nA", &ab()),
            Err(Error::MalformedFasta(_))
        ));
    }

    #[test]
    fn matrix_unit() {
        let m = parse_cost_matrix("A B\nA 0 1\nB 1 0").unwrap();
        assert_eq!(m.alphabet.symbols(), b"AB");
        assert_eq!(m.get(0, 0), 0);
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m, RawMatrix::unit(b"AB").unwrap());
    }

    #[test]
    fn matrix_asymmetric() {
        let err = parse_cost_matrix("A B\nA 0 1\nB 2 0").unwrap_err();
        assert_eq!(err, Error::AsymmetricMatrix { a: 'A', b: 'B' });
    }

    #[test]
    fn matrix_format_errors() {
        assert!(matches!(
            parse_cost_matrix("A B\nA 0 1"),
            Err(Error::MatrixFormat { .. })
        ));
        assert!(matches!(
            parse_cost_matrix("A B\nA 0 x\nB 1 0"),
            Err(Error::MatrixFormat { line: 2, .. })
        ));
        assert!(matches!(
            parse_cost_matrix("A B\nA 0 1\nB 1 0\nC 1 1"),
            Err(Error::MatrixFormat { .. })
        ));
        assert!(matches!(
            parse_cost_matrix("A B\nA 0 1 1\nB 1 0"),
            Err(Error::MatrixFormat { .. })
        ));
        assert!(matches!(
            parse_cost_matrix("A B\nB 0 1\nA 1 0"),
            Err(Error::MatrixFormat { .. })
        ));
    }

    #[test]
    fn matrix_comments_are_ignored() {
        let m = parse_cost_matrix("# cost matrix\n  A B\n# mid\nA 0 3\n\nB 3 0\n").unwrap();
        assert_eq!(m.get(1, 0), 3);
    }

    #[test]
    fn cost_model_scaling() {
        let m = RawMatrix::unit(b"AB").unwrap();
        let cm: CostModel<i64> = build_cost_model(&m, 1, 1, EndGapMode::Charged).unwrap();
        assert_eq!(cm.sub(0, 1), 2);
        assert_eq!(cm.sub(1, 1), 0);
        assert_eq!(cm.gap_open, 2);
        assert_eq!(cm.half_open, 1);
        assert_eq!(cm.gap_extend, 2);
    }

    #[test]
    fn cost_model_odd_open_keeps_half_exact() {
        let m = RawMatrix::unit(b"AB").unwrap();
        let cm: CostModel<i32> = build_cost_model(&m, 9, 8, EndGapMode::OpenFree).unwrap();
        assert_eq!(cm.half_open * 2, cm.gap_open);
        assert_eq!(cm.gap_open, 18);
        assert_eq!(cm.gap_extend, 16);
    }

    #[test]
    fn cost_model_rejects_negative() {
        let alpha = ab();
        let m = RawMatrix::new(alpha, vec![0, -1, -1, 0]).unwrap();
        assert_eq!(
            build_cost_model::<i64>(&m, 1, 1, EndGapMode::Charged).unwrap_err(),
            Error::NegativePenalty { value: -1 }
        );
        let m = RawMatrix::unit(b"AB").unwrap();
        assert!(build_cost_model::<i64>(&m, -8, 1, EndGapMode::Charged).is_err());
    }

    #[test]
    fn end_gap_mode_parse() {
        assert_eq!(
            "open-free".parse::<EndGapMode>().unwrap(),
            EndGapMode::OpenFree
        );
        assert_eq!(
            "ALL_FREE".parse::<EndGapMode>().unwrap(),
            EndGapMode::AllFree
        );
        assert!("none".parse::<EndGapMode>().is_err());
    }
}

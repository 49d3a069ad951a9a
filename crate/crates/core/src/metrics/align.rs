//! Minimum-edit-distance alignment with operation backtrace.

use serde::{Deserialize, Serialize};

/// One aligned step. `Match`/`Substitute` consume a token from both sides,
/// `Delete` consumes only from the reference, `Insert` only from the
/// hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignOp {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Integer edit counts from one alignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub matches: usize,
    pub reference_tokens: usize,
}

impl ErrorCounts {
    pub fn total_errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn add(&mut self, other: &ErrorCounts) {
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.matches += other.matches;
        self.reference_tokens += other.reference_tokens;
    }
}

/// Full alignment: the operation sequence plus derived counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    pub counts: ErrorCounts,
}

impl Alignment {
    pub fn distance(&self) -> usize {
        self.counts.total_errors()
    }
}

/// Align `reference` against `hypothesis` with unit costs and recover one
/// minimal operation sequence. Backtrace ties break in the fixed order
/// match > substitute > delete > insert so equal-cost alignments are
/// reproducible across runs.
pub fn align_tokens(reference: &[String], hypothesis: &[String]) -> Alignment {
    let n = reference.len();
    let m = hypothesis.len();
    // dist[i][j] = edit distance between reference[..i] and hypothesis[..j].
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = dist[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = dist[i - 1][j] + 1;
            let ins = dist[i][j - 1] + 1;
            dist[i][j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i][j];
        if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] && here == dist[i - 1][j - 1] {
            ops.push(AlignOp::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && here == dist[i - 1][j - 1] + 1 {
            ops.push(AlignOp::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && here == dist[i - 1][j] + 1 {
            ops.push(AlignOp::Delete);
            i -= 1;
        } else {
            ops.push(AlignOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();

    let mut counts = ErrorCounts {
        reference_tokens: n,
        ..ErrorCounts::default()
    };
    for op in &ops {
        match op {
            AlignOp::Match => counts.matches += 1,
            AlignOp::Substitute => counts.substitutions += 1,
            AlignOp::Delete => counts.deletions += 1,
            AlignOp::Insert => counts.insertions += 1,
        }
    }
    debug_assert_eq!(counts.total_errors(), dist[n][m]);

    Alignment { ops, counts }
}

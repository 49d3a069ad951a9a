//! Fixed-width table rendering for corpus reports.

use rllm_core::{CorpusReport, FlowCounts};

/// One row per system, in result-table column order: error decomposition,
/// total, change against the baseline, noun recall, token cost. The Change
/// and Nouns columns appear only when some row has a value for them.
pub fn render_table(rows: &[(String, CorpusReport)]) -> String {
    let show_change = rows.iter().any(|(_, r)| r.change.is_some());
    let show_nouns = rows.iter().any(|(_, r)| r.noun_recall.is_some());

    let mut header: Vec<String> =
        ["System", "Utts", "Sub", "Del", "Ins", "Total"].iter().map(|s| s.to_string()).collect();
    if show_change {
        header.push("Change".to_string());
    }
    if show_nouns {
        header.push("Nouns".to_string());
    }
    header.push("Tokens(in/out)".to_string());

    let mut body: Vec<Vec<String>> = Vec::new();
    for (name, report) in rows {
        let rounded = report.rounded();
        let mut row = vec![
            name.clone(),
            report.utterances.to_string(),
            format!("{:.2}", rounded.rates.substitution),
            format!("{:.2}", rounded.rates.deletion),
            format!("{:.2}", rounded.rates.insertion),
            format!("{:.2}", rounded.rates.total),
        ];
        if show_change {
            row.push(report.change.map(|c| c.render()).unwrap_or_else(|| "-".to_string()));
        }
        if show_nouns {
            row.push(
                rounded.noun_recall.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".to_string()),
            );
        }
        row.push(format!("{}/{}", report.tokens.tokens_in, report.tokens.tokens_out));
        body.push(row);
    }
    render_columns(&header, &body)
}

/// The sentence accounting behind a row: gate path, then quality movement.
pub fn render_flow(name: &str, flow: &FlowCounts) -> String {
    format!(
        "flow {name}: detected {} -> confident {} -> corrected {}; abandoned {}, rejected {}; fixed {}, broken {}",
        flow.detected,
        flow.confident,
        flow.corrected,
        flow.abandoned,
        flow.rejected,
        flow.fixed_sentences,
        flow.broken_sentences,
    )
}

fn render_columns(header: &[String], body: &[Vec<String>]) -> String {
    let width = |s: &str| s.chars().count();
    let mut widths: Vec<usize> = header.iter().map(|h| width(h)).collect();
    for row in body {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(width(cell));
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(body.iter().map(Vec::as_slice)) {
        let mut line = String::new();
        for (col, cell) in row.iter().enumerate() {
            if col > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if col + 1 < row.len() {
                for _ in 0..widths[col].saturating_sub(width(cell)) {
                    line.push(' ');
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

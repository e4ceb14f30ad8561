//! Markdown report assembly from a run manifest: one section per analysis
//! stage, with tables pulled from the stages' CSV outputs.

use std::fmt::Write as _;
use std::path::Path;

use super::manifest::{RunManifest, StageRun};
use super::PipelineError;

const MAX_TABLE_ROWS: usize = 20;

fn find_output<'a>(run: &'a StageRun, suffix: &str) -> Option<&'a str> {
    run.outputs
        .iter()
        .map(|f| f.path.as_str())
        .find(|p| p.ends_with(suffix))
}

fn csv_table(path: &str, max_rows: usize) -> String {
    let Ok(mut reader) = csv::Reader::from_path(Path::new(path)) else {
        return format!("_missing file: {path}_\n");
    };
    let headers: Vec<String> = reader
        .headers()
        .map(|h| h.iter().map(|s| s.to_string()).collect())
        .unwrap_or_default();
    if headers.is_empty() {
        return format!("_empty file: {path}_\n");
    }
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", headers.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; headers.len()].join("|"));
    let mut shown = 0usize;
    let mut total = 0usize;
    for row in reader.records().flatten() {
        total += 1;
        if shown < max_rows {
            let cells: Vec<&str> = row.iter().collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
            shown += 1;
        }
    }
    if total > shown {
        let _ = writeln!(
            out,
            "\n_{shown} of {total} rows shown; full data in `{path}`._"
        );
    }
    out
}

fn last_run<'a>(manifest: &'a RunManifest, stage: &str) -> Option<&'a StageRun> {
    manifest.runs.iter().rev().find(|r| r.stage == stage)
}

/// Render the report. Sections appear only for stages present in the
/// manifest; a full run produces all seven.
pub fn render(manifest: &RunManifest) -> Result<String, PipelineError> {
    let mut out = String::new();
    let _ = writeln!(out, "# Tweet archive analysis report\n");
    let _ = writeln!(out, "Generated by cascadescope {}.\n", manifest.version);

    if let Some(run) = last_run(manifest, "ingest") {
        let _ = writeln!(
            out,
            "Corpus: {} records kept ({} lines, {} skipped, {} quarantined).\n",
            run.params.get("kept").cloned().unwrap_or_default(),
            run.params.get("lines").cloned().unwrap_or_default(),
            run.params.get("skipped").cloned().unwrap_or_default(),
            run.params.get("quarantined").cloned().unwrap_or_default(),
        );
    }

    let mut sections = 0usize;

    if let Some(run) = last_run(manifest, "keywords") {
        sections += 1;
        let _ = writeln!(out, "## Keyword rates\n");
        if let Some(path) = find_output(run, "rates.csv") {
            out.push_str(&csv_table(path, MAX_TABLE_ROWS));
        } else if let Some(path) = run.outputs.first().map(|f| f.path.as_str()) {
            let _ = writeln!(out, "Per-minute counts in `{path}`.");
        }
        out.push('\n');
    }

    let topic_run = last_run(manifest, "sweep").or_else(|| last_run(manifest, "lda"));
    if let Some(run) = topic_run {
        sections += 1;
        let _ = writeln!(out, "## Topics\n");
        if run.stage == "sweep" {
            if let Some(path) = find_output(run, ".csv") {
                out.push_str(&csv_table(path, MAX_TABLE_ROWS));
            }
        }
        let model_path = manifest
            .runs
            .iter()
            .rev()
            .filter(|r| r.stage == "lda" || r.stage == "sweep")
            .find_map(|r| find_output(r, ".json"));
        if let Some(path) = model_path {
            match crate::topics::load_model(Path::new(path)) {
                Ok(model) => {
                    let _ = writeln!(out, "\n| topic | top terms | C_v |");
                    let _ = writeln!(out, "|---|---|---|");
                    for (i, terms) in model.top_terms.iter().enumerate() {
                        let cv = model
                            .coherence
                            .as_ref()
                            .and_then(|c| c.per_topic.get(i).copied().flatten())
                            .map(|v| format!("{v:.3}"))
                            .unwrap_or_else(|| "-".to_string());
                        let preview: Vec<&str> =
                            terms.iter().take(10).map(String::as_str).collect();
                        let _ = writeln!(out, "| {i} | {} | {cv} |", preview.join(", "));
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "_model file unreadable: {e}_");
                }
            }
        }
        out.push('\n');
    }

    if let Some(run) = last_run(manifest, "lda") {
        if let Some(path) = find_output(run, "series.csv") {
            sections += 1;
            let _ = writeln!(out, "## Topic time series\n");
            let _ = writeln!(out, "Per-minute topic counts in `{path}`.\n");
        }
    }

    if let Some(run) = last_run(manifest, "changepoint") {
        sections += 1;
        let _ = writeln!(out, "## Changepoints\n");
        if let Some(path) = find_output(run, ".csv") {
            out.push_str(&csv_table(path, MAX_TABLE_ROWS));
        }
        if let Some(offset) = run
            .params
            .get("event_offset_minutes")
            .and_then(|v| v.as_i64())
        {
            let _ = writeln!(
                out,
                "\nNearest breakpoint is {offset} minutes from the marked event."
            );
        }
        if let Some(svg) = find_output(run, ".svg") {
            let _ = writeln!(out, "\n![changepoints]({svg})");
        }
        out.push('\n');
    }

    if let Some(run) = last_run(manifest, "umap") {
        sections += 1;
        let _ = writeln!(out, "## UMAP scatter\n");
        let _ = writeln!(
            out,
            "{} rows embedded (n_neighbors {}, min_dist {}).\n",
            run.params.get("rows").cloned().unwrap_or_default(),
            run.params.get("n_neighbors").cloned().unwrap_or_default(),
            run.params.get("min_dist").cloned().unwrap_or_default(),
        );
        if let Some(svg) = find_output(run, ".svg") {
            let _ = writeln!(out, "![umap]({svg})\n");
        }
    }

    if let Some(run) = last_run(manifest, "retweets") {
        sections += 1;
        let _ = writeln!(out, "## Retweet timing\n");
        let median = run
            .params
            .get("median_s")
            .and_then(|v| v.as_f64())
            .unwrap_or(f64::NAN);
        let mean = run
            .params
            .get("mean_s")
            .and_then(|v| v.as_f64())
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{} events; median time-to-retweet {:.2} h, mean {:.2} h.\n",
            run.params.get("events").cloned().unwrap_or_default(),
            median / 3600.0,
            mean / 3600.0,
        );
        if let Some(path) = find_output(run, "log_hist.csv") {
            out.push_str(&csv_table(path, MAX_TABLE_ROWS));
            out.push('\n');
        }
    }

    if let Some(run) = last_run(manifest, "cascade") {
        sections += 1;
        let _ = writeln!(out, "## Cascade networks\n");
        if let Some(path) = find_output(run, "cascade_stats.csv") {
            out.push_str(&csv_table(path, MAX_TABLE_ROWS));
        }
        out.push('\n');
    }

    if sections == 0 {
        return Err(PipelineError::Usage(
            "nothing to report: no analysis stages in manifest".to_string(),
        ));
    }
    Ok(out)
}

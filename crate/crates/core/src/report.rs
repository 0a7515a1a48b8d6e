//! Report files: `assignments.csv`, `topics.json-lines`, `run_meta.json`.
//!
//! Everything except `run_meta.json` is a pure function of the report
//! without its timings, so repeated runs produce identical bytes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::DocId;
use crate::pipeline::{GridSearch, PipelineConfig, Topic, TopicReport};

pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const TOPICS_FILE: &str = "topics.json-lines";
pub const RUN_META_FILE: &str = "run_meta.json";
pub const ASSIGNMENTS_HEADER: [&str; 4] = ["topic_label", "article_id", "title", "cluster_m"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, ReportError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Six significant digits, printed as the shortest decimal that parses
/// back to the rounded value (`1.0`, `0.823315`).
pub fn format_membership(v: f64) -> String {
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float");
    format!("{rounded:?}")
}

/// Members in CSV order: representatives first, then the rest, both by
/// membership descending.
pub fn csv_rows(topic: &Topic) -> impl Iterator<Item = [String; 4]> + '_ {
    topic
        .representatives
        .iter()
        .chain(
            topic
                .members
                .iter()
                .filter(|m| !topic.representatives.iter().any(|r| r.row == m.row)),
        )
        .map(|m| {
            [
                topic.label.clone(),
                m.article_id.to_string(),
                m.title.clone(),
                format_membership(m.membership),
            ]
        })
}

pub fn write_assignments<W: Write>(report: &TopicReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ASSIGNMENTS_HEADER)?;
    for topic in &report.topics {
        for row in csv_rows(topic) {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunLine<'a> {
    kind: &'static str,
    seed: u64,
    n_documents: usize,
    embedding_dim: usize,
    n_topics: usize,
    phase1_mcs: usize,
    phase1_clusters: usize,
    phase1_retained: usize,
    phase1_grid: &'a Option<GridSearch>,
    phase1_kl: (f64, f64),
    config: &'a PipelineConfig,
}

#[derive(Serialize)]
struct MemberLine<'a> {
    article_id: &'a DocId,
    title: &'a str,
    membership: f64,
    p_any: f64,
    membership_vector: &'a [f64],
}

#[derive(Serialize)]
struct TopicLine<'a> {
    kind: &'static str,
    label: &'a str,
    phase1_parent: Option<usize>,
    phase2_cluster: Option<usize>,
    chosen_mcs: usize,
    persistence: f64,
    exemplar_ids: &'a [DocId],
    representatives: Vec<&'a DocId>,
    members: Vec<MemberLine<'a>>,
}

/// One `run` line followed by one `topic` line per topic.
pub fn write_topics<W: Write>(report: &TopicReport, mut out: W) -> io::Result<()> {
    let meta = &report.run_metadata;
    let run = RunLine {
        kind: "run",
        seed: meta.seed,
        n_documents: meta.n_documents,
        embedding_dim: meta.embedding_dim,
        n_topics: report.topics.len(),
        phase1_mcs: meta.phase1_mcs,
        phase1_clusters: meta.phase1_clusters,
        phase1_retained: meta.phase1_retained,
        phase1_grid: &meta.phase1_grid,
        phase1_kl: meta.phase1_kl,
        config: &meta.config,
    };
    serde_json::to_writer(&mut out, &run)?;
    out.write_all(b"\n")?;
    for t in &report.topics {
        let line = TopicLine {
            kind: "topic",
            label: &t.label,
            phase1_parent: t.phase1_parent,
            phase2_cluster: t.phase2_cluster,
            chosen_mcs: t.chosen_mcs,
            persistence: t.persistence,
            exemplar_ids: &t.exemplar_ids,
            representatives: t.representatives.iter().map(|m| &m.article_id).collect(),
            members: t
                .members
                .iter()
                .map(|m| MemberLine {
                    article_id: &m.article_id,
                    title: &m.title,
                    membership: m.membership,
                    p_any: m.p_any,
                    membership_vector: &m.membership_vector,
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes the three report files into `out_dir`, creating it if needed.
pub fn write_report(report: &TopicReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let path = out_dir.join(ASSIGNMENTS_FILE);
    let file = File::create(&path).map_err(io_err(&path))?;
    write_assignments(report, BufWriter::new(file)).map_err(|source| ReportError::Csv {
        path: path.clone(),
        source,
    })?;

    let path = out_dir.join(TOPICS_FILE);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    write_topics(report, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(&path))?;

    let path = out_dir.join(RUN_META_FILE);
    let text = serde_json::to_string_pretty(&report.run_metadata)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(())
}

/// A parsed `assignments.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub topic_label: String,
    pub article_id: String,
    pub title: String,
    pub cluster_m: f64,
}

pub fn read_assignments(path: &Path) -> std::result::Result<Vec<AssignmentRow>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

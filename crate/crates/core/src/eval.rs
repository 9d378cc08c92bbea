//! Batch encoding with a trained policy and retrieval metrics.
//!
//! Both paths are embarrassingly parallel over items and run through
//! [`crate::par`], so the parallel and sequential modes give identical
//! output.

use crate::codebook::Codebook;
use crate::data::Dataset;
use crate::env::{state_dim, EnvConfig, Environment};
use crate::hamming::{rank_by_distance, BinaryCode, LabelSet};
use crate::par;
use crate::qnet::{argmax, QNetError, QNetwork};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Net(#[from] QNetError),
    #[error("width mismatch: query codes are {query} bits, database codes {database}")]
    WidthMismatch { query: usize, database: usize },
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("{side} has {codes} codes but {labels} label lines")]
    LabelCountMismatch {
        side: &'static str,
        codes: usize,
        labels: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("codes file: {0}")]
    Format(String),
}

/// Encodes every dataset item by greedy rollout: reset from
/// `(run_seed, item_id)`, follow argmax actions in eval mode until the
/// terminate action or the step cap. Deterministic, label-free.
pub fn encode_dataset(
    net: &QNetwork,
    dataset: &Dataset,
    book: &Codebook,
    config: EnvConfig,
    run_seed: u64,
) -> Result<Vec<BinaryCode>, EvalError> {
    let b = book.width();
    net.check_io_dims(state_dim(dataset.feature_dim(), b), b + 1)?;
    let env = Environment::new(config, book);
    Ok(par::map_indexed(dataset.len(), |item| {
        let mut state = env.reset(dataset.feature(item).to_vec(), item as u64, run_seed);
        loop {
            let q = net
                .forward_eval(&state.encode_vector())
                .expect("dims checked once up front");
            let action = argmax(&q);
            if action == env.terminate_action() {
                break;
            }
            state = env
                .step_unrewarded(&state, action)
                .expect("action in range, episode live");
            if state.is_done() {
                break;
            }
        }
        state.code().clone()
    }))
}

/// Retrieval quality summary.
#[derive(Debug, Clone)]
pub struct RetrievalReport {
    pub map: f64,
    pub precision_at_k: Vec<(usize, f64)>,
    pub per_query_ap: Vec<f64>,
    pub top_k: usize,
    pub num_queries: usize,
    pub num_database: usize,
}

impl RetrievalReport {
    /// Tab-separated key-value block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "queries\t{}", self.num_queries);
        let _ = writeln!(s, "database\t{}", self.num_database);
        let _ = writeln!(s, "top_k\t{}", self.top_k);
        let _ = writeln!(s, "map\t{:.6}", self.map);
        for (k, p) in &self.precision_at_k {
            let _ = writeln!(s, "precision_at_{k}\t{p:.6}");
        }
        s
    }
}

/// Mean average precision of Hamming ranking, relevance = at least one
/// shared class label.
///
/// Per query: rank the database (ascending distance, ties by index),
/// walk the top_k prefix, and average precision at the relevant ranks,
/// normalized by min(total relevant, top_k) so a perfect prefix scores
/// 1. Queries with no relevant items contribute AP 0.
pub fn mean_average_precision(
    query_codes: &[BinaryCode],
    query_labels: &[LabelSet],
    db_codes: &[BinaryCode],
    db_labels: &[LabelSet],
    top_k: usize,
) -> Result<RetrievalReport, EvalError> {
    if query_codes.is_empty() {
        return Err(EvalError::EmptySet("query"));
    }
    if db_codes.is_empty() {
        return Err(EvalError::EmptySet("database"));
    }
    if query_codes.len() != query_labels.len() {
        return Err(EvalError::LabelCountMismatch {
            side: "query",
            codes: query_codes.len(),
            labels: query_labels.len(),
        });
    }
    if db_codes.len() != db_labels.len() {
        return Err(EvalError::LabelCountMismatch {
            side: "database",
            codes: db_codes.len(),
            labels: db_labels.len(),
        });
    }
    let qw = query_codes[0].width();
    let dw = db_codes[0].width();
    if qw != dw
        || query_codes.iter().any(|c| c.width() != qw)
        || db_codes.iter().any(|c| c.width() != dw)
    {
        return Err(EvalError::WidthMismatch {
            query: qw,
            database: dw,
        });
    }
    let top_k = top_k.max(1).min(db_codes.len());
    let prec_ks: Vec<usize> = [1usize, 5, 10, 50, 100]
        .into_iter()
        .filter(|&k| k <= top_k)
        .collect();

    // (AP, hits at each precision cut) per query.
    let per_query: Vec<(f64, Vec<usize>)> = par::map_indexed(query_codes.len(), |qi| {
        let query = &query_codes[qi];
        let qlabels = &query_labels[qi];
        let total_relevant = db_labels.iter().filter(|l| l.shares_class(qlabels)).count();
        let ranked = rank_by_distance(query, db_codes, top_k);
        let mut hits = 0usize;
        let mut ap_sum = 0.0;
        let mut cut_hits = vec![0usize; prec_ks.len()];
        for (rank0, &idx) in ranked.iter().enumerate() {
            if db_labels[idx].shares_class(qlabels) {
                hits += 1;
                ap_sum += hits as f64 / (rank0 + 1) as f64;
            }
            for (ci, &k) in prec_ks.iter().enumerate() {
                if rank0 + 1 == k {
                    cut_hits[ci] = hits;
                }
            }
        }
        let denom = total_relevant.min(top_k);
        let ap = if denom == 0 { 0.0 } else { ap_sum / denom as f64 };
        (ap, cut_hits)
    });

    let per_query_ap: Vec<f64> = per_query.iter().map(|(ap, _)| *ap).collect();
    let map = per_query_ap.iter().sum::<f64>() / per_query_ap.len() as f64;
    let precision_at_k = prec_ks
        .iter()
        .enumerate()
        .map(|(ci, &k)| {
            let mean = per_query
                .iter()
                .map(|(_, cuts)| cuts[ci] as f64 / k as f64)
                .sum::<f64>()
                / per_query.len() as f64;
            (k, mean)
        })
        .collect();

    Ok(RetrievalReport {
        map,
        precision_at_k,
        per_query_ap,
        top_k,
        num_queries: query_codes.len(),
        num_database: db_codes.len(),
    })
}

/// Writes codes in the export format: one '0'/'1' line per item.
pub fn write_codes_file(path: &Path, codes: &[BinaryCode]) -> Result<(), EvalError> {
    let mut out = String::new();
    for c in codes {
        out.push_str(&c.to_text());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_codes_file(path: &Path) -> Result<Vec<BinaryCode>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    let mut codes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let code = BinaryCode::from_text(line)
            .map_err(|e| EvalError::Format(format!("line {}: {e}", lineno + 1)))?;
        codes.push(code);
    }
    if codes.is_empty() {
        return Err(EvalError::Format("no codes in file".into()));
    }
    Ok(codes)
}

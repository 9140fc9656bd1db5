pub mod bench;
pub mod generate;
pub mod ingest;
pub mod solve;

use std::path::Path;

use crate::csvio::{format_f64, write_csv};
use crate::error::Result;
use crate::runner::TraceRow;

/// Writes trace rows sorted by (label, seed, t). Ground-truth columns are
/// present only when every row carries them (generated instances).
pub fn write_trace_csv(path: &Path, mut rows: Vec<TraceRow>) -> Result<()> {
    rows.sort_by(|a, b| {
        (&a.label, a.seed, a.t).cmp(&(&b.label, b.seed, b.t))
    });
    let with_truth = rows.iter().all(|r| r.err_sq_to_star.is_some());
    let header: Vec<&str> = if with_truth {
        vec![
            "label",
            "seed",
            "t",
            "f",
            "gamma",
            "grad_ht_norm_sq",
            "err_sq_to_star",
            "support_size",
            "tp",
            "fp",
            "fn",
        ]
    } else {
        vec![
            "label",
            "seed",
            "t",
            "f",
            "gamma",
            "grad_ht_norm_sq",
            "support_size",
        ]
    };
    let out_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.label.clone(),
                r.seed.to_string(),
                r.t.to_string(),
                format_f64(r.f),
                format_f64(r.gamma),
                format_f64(r.grad_ht_norm_sq),
            ];
            if with_truth {
                cells.push(format_f64(r.err_sq_to_star.unwrap()));
                cells.push(r.support_size.to_string());
                cells.push(r.tp.unwrap().to_string());
                cells.push(r.fp.unwrap().to_string());
                cells.push(r.fn_.unwrap().to_string());
            } else {
                cells.push(r.support_size.to_string());
            }
            cells
        })
        .collect();
    write_csv(path, &header, &out_rows)
}

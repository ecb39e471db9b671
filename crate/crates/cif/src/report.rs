//! Text formats for the training loss log and evaluation reports.

use std::fmt::Write as _;

use cif_core::metrics::EvalReport;
use cif_core::train::EpochReport;

use crate::error::{Error, Result};

/// `epoch <k> lr <v> nll <v>`, with shortest round-trip reals.
pub fn loss_line(r: &EpochReport) -> String {
    format!("epoch {} lr {:?} nll {:?}", r.epoch, r.lr, r.nll)
}

/// `(epoch, lr, nll)` per line of a loss log.
pub fn parse_loss_log(text: &str) -> Result<Vec<(usize, f64, f64)>> {
    text.lines()
        .enumerate()
        .map(|(k, line)| {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Invalid(format!("loss log line {}: `{line}`", k + 1));
            if f.len() != 6 || f[0] != "epoch" || f[2] != "lr" || f[4] != "nll" {
                return Err(bad());
            }
            Ok((f[1].parse().map_err(|_| bad())?, f[3].parse().map_err(|_| bad())?, f[5].parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Key-value summary followed by the per-reference table.
pub fn format_eval(report: &EvalReport, reference_ids: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mmd_cd {:?}", report.mmd_cd);
    let _ = writeln!(s, "cov_cd {:?}", report.cov_cd);
    let _ = writeln!(s, "n_generated {}", report.n_generated);
    let _ = writeln!(s, "n_reference {}", report.n_reference);
    let width = reference_ids.iter().map(String::len).max().unwrap_or(0).max("reference".len());
    let _ = writeln!(s, "{:<width$}  nearest_generated_cd", "reference");
    for (id, d) in reference_ids.iter().zip(&report.nearest_generated) {
        let _ = writeln!(s, "{id:<width$}  {d:.6e}");
    }
    s
}

/// Reads `mmd_cd` and `cov_cd` back from [`format_eval`] output.
pub fn parse_eval_summary(text: &str) -> Option<(f64, f64)> {
    let value = |key: &str| text.lines().find_map(|l| l.strip_prefix(key).and_then(|v| v.trim().parse::<f64>().ok()));
    Some((value("mmd_cd ")?, value("cov_cd ")?))
}

//! Trace CSVs and summary statistics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use manifold_zo_core::solvers::IterRecord;

use crate::error::HarnessError;

pub const CSV_HEADER: &str = "iter,f,grad_norm,step_norm,calls,flags";

/// One CSV line; floats carry 17 significant digits.
pub fn csv_line(r: &IterRecord) -> String {
    format!("{},{:.16e},{:.16e},{:.16e},{},{}", r.iter, r.f, r.grad_norm, r.step_norm, r.calls, r.flags)
}

/// Writes every `every`-th record and always the last one.
pub fn write_trace(path: &Path, records: &[IterRecord], every: usize) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = String::with_capacity(64 * records.len() / every.max(1) + 64);
    body.push_str(CSV_HEADER);
    body.push('\n');
    let last = records.len().saturating_sub(1);
    for (i, r) in records.iter().enumerate() {
        if i % every == 0 || i == last {
            body.push_str(&csv_line(r));
            body.push('\n');
        }
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary types serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Linear-interpolation quantile of sorted data; `None` when it touches an
/// infinite entry.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if !a.is_finite() || !b.is_finite() {
        return None;
    }
    Some(a + frac * (b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_keeps_full_precision() {
        let r = IterRecord { iter: 3, f: 0.1, grad_norm: 1.0 / 3.0, step_norm: 0.0, calls: 12, flags: 5 };
        let line = csv_line(&r);
        assert_eq!(line, "3,1.0000000000000001e-1,3.3333333333333331e-1,0.0000000000000000e0,12,5");
        let back: Vec<f64> = line.split(',').skip(1).take(3).map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, 0.0]);
    }

    #[test]
    fn quantiles_interpolate_and_refuse_infinity() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), Some(2.5));
        assert_eq!(quantile(&v, 0.25), Some(1.75));
        assert_eq!(quantile(&[1.0, 2.0, f64::INFINITY], 0.5), Some(2.0));
        assert_eq!(quantile(&[1.0, f64::INFINITY, f64::INFINITY], 0.5), None);
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn trace_cadence_keeps_last_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let recs: Vec<IterRecord> = (0..5)
            .map(|i| IterRecord { iter: i, f: 1.0, grad_norm: 1.0, step_norm: 1.0, calls: i as u64, flags: 0 })
            .collect();
        write_trace(&path, &recs, 3).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let iters: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(iters, vec!["0", "3", "4"]);
    }
}

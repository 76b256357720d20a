//! Results CSV and the per-attempt summary table.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::run::EpisodeResult;

pub const RESULTS_HEADER: [&str; 6] = ["trial", "success", "attempts", "sim_time", "strategies", "reasons"];

pub fn write_results_csv<W: Write>(results: &[EpisodeResult], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| io::Error::other(e);
    w.write_record(RESULTS_HEADER).map_err(to_io)?;
    for r in results {
        w.write_record([
            r.trial.to_string(),
            r.success.to_string(),
            r.attempts_consumed.to_string(),
            format!("{:.3}", r.sim_time),
            r.strategy_sequence.join(";"),
            r.failure_reasons.join(";"),
        ])
        .map_err(to_io)?;
    }
    w.flush()
}

pub fn results_csv(results: &[EpisodeResult]) -> String {
    let mut buf = Vec::new();
    write_results_csv(results, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// `foo.csv` → `foo.summary.txt`
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.txt")
}

/// Writes the CSV to `path` and the summary next to it.
pub fn emit_results(results: &[EpisodeResult], num_attempts: u32, title: &str, path: &Path) -> io::Result<String> {
    let file = std::fs::File::create(path)?;
    write_results_csv(results, io::BufWriter::new(file))?;
    let text = summary(results, num_attempts, title);
    std::fs::write(summary_path(path), &text)?;
    Ok(text)
}

/// Fastest successful time, else the fastest failure flagged as such.
pub fn fastest_time(results: &[EpisodeResult]) -> Option<(f64, bool)> {
    let min = |ok: bool| {
        results
            .iter()
            .filter(|r| r.success == ok)
            .map(|r| r.sim_time)
            .min_by(f64::total_cmp)
    };
    min(true).map(|t| (t, true)).or_else(|| min(false).map(|t| (t, false)))
}

/// Table in the layout of the experiment reports: successes on and by each
/// attempt, then the fastest time. One block per device.
pub fn summary(results: &[EpisodeResult], num_attempts: u32, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let mut devices: Vec<&str> = Vec::new();
    for r in results {
        if !devices.contains(&r.device_id.as_str()) {
            devices.push(&r.device_id);
        }
    }
    if devices.is_empty() {
        let _ = writeln!(out, "no trials");
    }
    for device in devices {
        let rows: Vec<&EpisodeResult> = results.iter().filter(|r| r.device_id == device).collect();
        let owned: Vec<EpisodeResult> = rows.iter().map(|r| (*r).clone()).collect();
        let _ = writeln!(out, "device {device}: {} trials", rows.len());
        let _ = writeln!(out, "  attempt  successes  cumulative");
        let mut cumulative = 0;
        for n in 1..=num_attempts {
            let at = rows.iter().filter(|r| r.success && r.attempts_consumed == n).count();
            cumulative += at;
            let _ = writeln!(out, "  {n:>7}  {at:>9}  {cumulative:>10}");
        }
        match fastest_time(&owned) {
            Some((t, true)) => {
                let _ = writeln!(out, "  fastest time: {t:.1} s");
            }
            Some((t, false)) => {
                let _ = writeln!(out, "  fastest time: {t:.1} s (Fail)");
            }
            None => {}
        }
        for r in &rows {
            let _ = writeln!(
                out,
                "  trial {:>2}: {:<7} {:>8.1} s  attempts {}  strategies [{}]",
                r.trial,
                if r.success { "success" } else { "FAIL" },
                r.sim_time,
                r.attempts_consumed,
                r.strategy_sequence.join(" -> ")
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(trial: u32, success: bool, time: f64) -> EpisodeResult {
        EpisodeResult {
            trial,
            device_id: "d".into(),
            success,
            attempts_consumed: 1,
            sim_time: time,
            strategy_sequence: vec!["low_torque".into()],
            failure_reasons: vec![],
            selections: vec![],
            segments: vec![],
            max_torque: 0.0,
            tree_ticks: 0,
            errors: vec![],
            progress: 0.0,
            rotation: 0.0,
        }
    }

    #[test]
    fn empty_results_header_only() {
        assert_eq!(results_csv(&[]), "trial,success,attempts,sim_time,strategies,reasons\n");
    }

    #[test]
    fn fastest_is_min_over_successes() {
        let rs = [result(1, true, 90.0), result(2, false, 10.0), result(3, true, 83.2)];
        assert_eq!(fastest_time(&rs), Some((83.2, true)));
        assert!(summary(&rs, 5, "t").contains("fastest time: 83.2 s\n"));
    }

    #[test]
    fn failed_only_is_flagged() {
        let rs = [result(1, false, 60.0), result(2, false, 52.0)];
        assert_eq!(fastest_time(&rs), Some((52.0, false)));
        assert!(summary(&rs, 5, "t").contains("fastest time: 52.0 s (Fail)"));
    }

    #[test]
    fn row_format() {
        let mut r = result(1, true, 26.3);
        r.failure_reasons = vec!["regrasp".into(), "genuine".into()];
        assert_eq!(
            results_csv(&[r]).lines().nth(1).unwrap(),
            "1,true,1,26.300,low_torque,regrasp;genuine"
        );
    }
}

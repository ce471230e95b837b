use std::io::Write;

use csv::{Terminator, WriterBuilder};

use super::BenchRecord;
use crate::error::Result;
use crate::solvers::{ParetoFront, TrajectoryPoint, STOP_NEVER};

pub const RECORD_COLUMNS: [&str; 12] = [
    "dataset",
    "trial",
    "query_prop",
    "method",
    "log_p_hat",
    "rank",
    "runtime_ms",
    "cert",
    "epsilon",
    "delta",
    "draws",
    "timed_out",
];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Rounds to three significant figures, without exponent notation.
pub fn format_sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(exp - 2);
    let rounded = (x / scale).round() * scale;
    // rounding may carry into the next decade (999.5 -> 1000)
    let exp = rounded.abs().log10().floor() as i32;
    let decimals = (2 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Writes benchmark records. With `timing` off, `runtime_ms` is written as 0
/// so repeated runs produce byte-identical files.
pub fn write_records_csv<W: Write>(w: W, records: &[BenchRecord], timing: bool) -> Result<()> {
    let mut out = writer(w);
    out.write_record(RECORD_COLUMNS)?;
    for r in records {
        out.write_record([
            r.dataset.clone(),
            r.trial.to_string(),
            r.query_prop.to_string(),
            r.method.name().to_string(),
            opt(r.log_p_hat),
            opt(r.rank),
            if timing { format_sig3(r.runtime_ms) } else { "0".into() },
            r.cert.clone(),
            opt(r.epsilon),
            opt(r.delta),
            r.draws.to_string(),
            r.timed_out.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_pareto_csv<W: Write>(w: W, front: &ParetoFront) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["epsilon", "delta"])?;
    for (eps, delta) in &front.points {
        out.write_record([eps.to_string(), delta.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// `stop_time` is written as `inf` while no finite stop time exists.
pub fn write_trajectory_csv<W: Write>(w: W, points: &[TrajectoryPoint]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["m", "p_hat", "p_check", "miss_bound", "stop_time"])?;
    for p in points {
        let stop = if p.stop_time == STOP_NEVER {
            "inf".to_string()
        } else {
            p.stop_time.to_string()
        };
        out.write_record([
            p.m.to_string(),
            p.p_hat.to_string(),
            p.p_check.to_string(),
            p.miss_bound.to_string(),
            stop,
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_figures() {
        assert_eq!(format_sig3(12.345), "12.3");
        assert_eq!(format_sig3(0.012345), "0.0123");
        assert_eq!(format_sig3(123456.0), "123000");
        assert_eq!(format_sig3(999.6), "1000");
        assert_eq!(format_sig3(1.0), "1.00");
        assert_eq!(format_sig3(0.0), "0");
    }

    #[test]
    fn pareto_csv_layout() {
        let front = ParetoFront::compute(0.5, 10, 4).unwrap();
        let mut buf = Vec::new();
        write_pareto_csv(&mut buf, &front).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("epsilon,delta"));
        assert_eq!(lines.next(), Some("0,0.0009765625"));
        assert!(!text.contains('\r'));
    }
}

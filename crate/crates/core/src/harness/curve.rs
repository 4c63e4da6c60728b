use std::io::{BufRead, BufReader, Read, Write};

use crate::epoch::EpochLog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMetric {
    Ndcg,
    Mrr,
    Map,
}

impl CurveMetric {
    fn pick(self, log: &EpochLog) -> Option<f64> {
        match self {
            CurveMetric::Ndcg => log.ndcg,
            CurveMetric::Mrr => log.mrr,
            CurveMetric::Map => log.map,
        }
    }
}

impl std::str::FromStr for CurveMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ndcg" => Ok(CurveMetric::Ndcg),
            "mrr" => Ok(CurveMetric::Mrr),
            "map" => Ok(CurveMetric::Map),
            other => Err(Error::config(format!("unknown curve metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub run: String,
    pub wall_clock_s: f64,
    pub value: f64,
}

/// One point per evaluated record, sorted by run label and then by time.
/// Records without the metric are skipped.
pub fn emit_convergence_curve(runs: &[(String, Vec<EpochLog>)], metric: CurveMetric) -> Result<Vec<CurvePoint>> {
    if runs.is_empty() || runs.iter().all(|(_, logs)| logs.is_empty()) {
        return Err(Error::precondition("no epoch logs to plot"));
    }
    let mut out = Vec::new();
    for (run, logs) in runs {
        if run.is_empty() || run.contains([',', '\n', '\r']) {
            return Err(Error::precondition(format!("run label '{run}' must be non-empty without commas or newlines")));
        }
        for log in logs {
            if let Some(value) = metric.pick(log) {
                out.push(CurvePoint { run: run.clone(), wall_clock_s: log.wall_clock_s, value });
            }
        }
    }
    out.sort_by(|a, b| a.run.cmp(&b.run).then(a.wall_clock_s.total_cmp(&b.wall_clock_s)));
    Ok(out)
}

pub const CURVE_HEADER: &str = "run,wall_clock_s,metric";

pub fn write_curve<W: Write>(points: &[CurvePoint], mut w: W) -> Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for p in points {
        // `{:?}` on f64 prints the shortest string that parses back exactly
        writeln!(w, "{},{:?},{:?}", p.run, p.wall_clock_s, p.value)?;
    }
    Ok(())
}

pub fn read_curve<R: Read>(r: R) -> Result<Vec<CurvePoint>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(CURVE_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("expected header '{CURVE_HEADER}'") });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Parse { line: i + 2, message: m.to_string() };
        let mut f = line.split(',');
        let (Some(run), Some(t), Some(v), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(bad("expected three fields"));
        };
        out.push(CurvePoint {
            run: run.to_string(),
            wall_clock_s: t.trim().parse().map_err(|_| bad("bad time"))?,
            value: v.trim().parse().map_err(|_| bad("bad metric value"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(t: f64, v: f64) -> EpochLog {
        EpochLog { wall_clock_s: t, ndcg: Some(v), ..Default::default() }
    }

    #[test]
    fn sorted_by_run_then_time() {
        let runs = vec![
            ("sm".to_string(), vec![log(0.2, 0.1), log(0.1, 0.05)]),
            ("rg2".to_string(), vec![log(0.05, 0.3), log(0.01, 0.2)]),
        ];
        let pts = emit_convergence_curve(&runs, CurveMetric::Ndcg).unwrap();
        let order: Vec<(&str, f64)> = pts.iter().map(|p| (p.run.as_str(), p.wall_clock_s)).collect();
        assert_eq!(order, vec![("rg2", 0.01), ("rg2", 0.05), ("sm", 0.1), ("sm", 0.2)]);
        let mut buf = Vec::new();
        write_curve(&pts, &mut buf).unwrap();
        assert_eq!(read_curve(&buf[..]).unwrap(), pts);
    }

    #[test]
    fn empty_logs_rejected() {
        assert!(emit_convergence_curve(&[], CurveMetric::Map).is_err());
        assert!(emit_convergence_curve(&[("a,b".into(), vec![log(1.0, 1.0)])], CurveMetric::Ndcg).is_err());
    }
}

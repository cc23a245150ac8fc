//! Sweeps over `(q, a)` at fixed `(n, p)`.
//!
//! Records come out row-major (`q` outer, `a` inner) whether points are
//! evaluated in parallel or serially, and the CSV writer prints every float
//! with 17 significant digits so two runs can be diffed byte for byte.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DomainReason, Error, Result};
use crate::extremal::s_rad;
use crate::params::{critical_exponent, CknParams};
use crate::second_variation::{a_star, classify, discriminant_d, Classification};
use crate::spectral::{mu_min, LogGrid, DEFAULT_PENCIL_NODES};

/// Exact CSV header.
pub const CSV_HEADER: &str = "q,a,D,a_star,classification,s_rad,mu_min,error";

/// `steps` equally spaced values from `lo` to `hi` inclusive (`lo` alone when `steps == 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanFormat {
    #[default]
    Csv,
    Json,
}

/// Spectral grid settings for scans; unset fields fall back to the adaptive defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GridOverride {
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub s_halfwidth: Option<f64>,
}

impl GridOverride {
    pub fn grid_for(&self, params: &CknParams) -> Result<LogGrid> {
        let count = self.count.unwrap_or(DEFAULT_PENCIL_NODES);
        match self.s_halfwidth {
            Some(s) => LogGrid::symmetric(s, count),
            None => LogGrid::for_pencil(params, count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanJob {
    pub n: u32,
    pub p: f64,
    pub q_range: AxisRange,
    pub a_range: AxisRange,
    #[serde(default)]
    pub with_spectral: bool,
    #[serde(default)]
    pub grid_override: Option<GridOverride>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: ScanFormat,
}

impl ScanJob {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason, detail: String| Err(Error::domain(reason, detail));
        for (name, r) in [("q", &self.q_range), ("a", &self.a_range)] {
            if r.steps == 0 || !(r.lo <= r.hi) || !r.lo.is_finite() || !r.hi.is_finite() {
                return bad(
                    DomainReason::InvalidInput,
                    format!("{name} range must have lo <= hi and steps >= 1, got {r:?}"),
                );
            }
        }
        // corners of the box are admissible iff every point is
        CknParams::validate(self.n, self.p, self.q_range.lo, self.a_range.lo)?;
        let p_star = critical_exponent(self.n, self.p);
        if self.q_range.hi >= p_star {
            return bad(
                DomainReason::QNotBelowCritical,
                format!("q_hi = {} must be below p* = {p_star}", self.q_range.hi),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub q: f64,
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub a_star: f64,
    pub classification: Classification,
    pub s_rad: f64,
    pub mu_min: Option<f64>,
    pub error: Option<String>,
}

fn evaluate_point(job: &ScanJob, q: f64, a: f64) -> ScanRecord {
    let prm = match CknParams::validate(job.n, job.p, q, a) {
        Ok(prm) => prm,
        Err(e) => {
            return ScanRecord {
                q,
                a,
                d: f64::NAN,
                a_star: f64::NAN,
                classification: Classification::Inconclusive,
                s_rad: f64::NAN,
                mu_min: None,
                error: Some(e.to_string()),
            }
        }
    };
    let mut record = ScanRecord {
        q,
        a,
        d: discriminant_d(&prm),
        a_star: a_star(job.n, job.p, q).unwrap_or(f64::NAN),
        classification: classify(&prm),
        s_rad: s_rad(&prm),
        mu_min: None,
        error: None,
    };
    if job.with_spectral {
        let grid_override = job.grid_override.unwrap_or_default();
        match grid_override.grid_for(&prm).and_then(|g| mu_min(&prm, &g)) {
            Ok(rep) => record.mu_min = Some(rep.mu_min),
            Err(e) => record.error = Some(e.to_string()),
        }
    }
    record
}

fn points(job: &ScanJob) -> Vec<(f64, f64)> {
    let a_values = job.a_range.values();
    job.q_range
        .values()
        .into_iter()
        .flat_map(|q| a_values.iter().map(move |&a| (q, a)))
        .collect()
}

/// Evaluates every grid point in parallel; output order is row-major.
pub fn run_scan(job: &ScanJob) -> Result<Vec<ScanRecord>> {
    job.validate()?;
    Ok(points(job)
        .into_par_iter()
        .map(|(q, a)| evaluate_point(job, q, a))
        .collect())
}

/// Sequential evaluation; identical output to [`run_scan`].
pub fn run_scan_serial(job: &ScanJob) -> Result<Vec<ScanRecord>> {
    job.validate()?;
    Ok(points(job)
        .into_iter()
        .map(|(q, a)| evaluate_point(job, q, a))
        .collect())
}

/// 17 significant digits; enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

pub fn to_csv(records: &[ScanRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(160 * (records.len() + 1)));
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(CSV_HEADER.split(','))?;
        for r in records {
            w.write_record([
                format_float(r.q),
                format_float(r.a),
                format_float(r.d),
                format_float(r.a_star),
                r.classification.to_string(),
                format_float(r.s_rad),
                r.mu_min.map(format_float).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("flushed")).expect("fields are UTF-8")
}

pub fn to_json(records: &[ScanRecord]) -> Result<String> {
    serde_json::to_string_pretty(records).map_err(|e| Error::Serialization(e.to_string()))
}

/// Parses output of [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ScanRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(csv_error)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Serialization(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Serialization(format!("bad number {s:?}: {e}")))
    };
    let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
    rd.records()
        .map(|row| {
            let f = row.map_err(csv_error)?;
            Ok(ScanRecord {
                q: num(&f[0])?,
                a: num(&f[1])?,
                d: num(&f[2])?,
                a_star: num(&f[3])?,
                classification: f[4].parse().map_err(Error::Serialization)?,
                s_rad: num(&f[5])?,
                mu_min: opt(&f[6]).map(|s| num(&s)).transpose()?,
                error: opt(&f[7]),
            })
        })
        .collect()
}

/// Renders records in `format`.
pub fn render(records: &[ScanRecord], format: ScanFormat) -> Result<String> {
    match format {
        ScanFormat::Csv => Ok(to_csv(records)),
        ScanFormat::Json => to_json(records),
    }
}

/// Writes records to `path` in `format`.
pub fn emit(records: &[ScanRecord], format: ScanFormat, path: &Path) -> Result<()> {
    let text = render(records, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(q: AxisRange, a: AxisRange) -> ScanJob {
        ScanJob {
            n: 3,
            p: 2.0,
            q_range: q,
            a_range: a,
            with_spectral: false,
            grid_override: None,
            output_path: None,
            format: ScanFormat::Csv,
        }
    }

    fn single(v: f64) -> AxisRange {
        AxisRange { lo: v, hi: v, steps: 1 }
    }

    #[test]
    fn single_point_breaking() {
        let recs = run_scan(&job(single(3.0), single(2.0))).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].classification, Classification::SymmetryBreaking);
        assert!(recs[0].mu_min.is_none());
    }

    #[test]
    fn header_only_for_empty() {
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn two_by_two_order() {
        let j = job(
            AxisRange { lo: 2.5, hi: 4.0, steps: 2 },
            AxisRange { lo: 0.0, hi: 1.0, steps: 2 },
        );
        let recs = run_scan(&j).unwrap();
        let got: Vec<(f64, f64)> = recs.iter().map(|r| (r.q, r.a)).collect();
        assert_eq!(got, vec![(2.5, 0.0), (2.5, 1.0), (4.0, 0.0), (4.0, 1.0)]);
        assert_eq!(to_csv(&recs).lines().count(), 5);
    }

    #[test]
    fn invalid_jobs_rejected() {
        let bad_q = job(AxisRange { lo: 3.0, hi: 6.0, steps: 3 }, single(0.0));
        assert_eq!(bad_q.validate().unwrap_err().reason(), Some(DomainReason::QNotBelowCritical));
        let bad_a = job(single(3.0), AxisRange { lo: -1.0, hi: 1.0, steps: 3 });
        assert_eq!(bad_a.validate().unwrap_err().reason(), Some(DomainReason::ANotAboveHardy));
        let zero = job(AxisRange { lo: 3.0, hi: 4.0, steps: 0 }, single(0.0));
        assert!(zero.validate().is_err());
    }

    #[test]
    fn spectral_errors_are_captured() {
        let mut j = job(single(3.0), AxisRange { lo: 0.0, hi: 2.0, steps: 2 });
        j.with_spectral = true;
        j.grid_override = Some(GridOverride { count: Some(64), s_halfwidth: Some(3.0) });
        let recs = run_scan(&j).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.error.is_some() && r.mu_min.is_none()));
        let back = parse_csv(&to_csv(&recs)).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn job_json_defaults() {
        let text = r#"{"n":3,"p":2.5,"q_range":{"lo":3,"hi":10,"steps":4},"a_range":{"lo":0,"hi":5,"steps":3}}"#;
        let j: ScanJob = serde_json::from_str(text).unwrap();
        assert!(!j.with_spectral);
        assert_eq!(j.format, ScanFormat::Csv);
        assert!(j.output_path.is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn csv_and_json_round_trip(
                q_lo in 2.1f64..4.0, q_w in 0.0f64..1.5, q_steps in 1usize..5,
                a_lo in -0.9f64..2.0, a_w in 0.0f64..3.0, a_steps in 1usize..5,
            ) {
                let j = job(
                    AxisRange { lo: q_lo, hi: q_lo + q_w, steps: q_steps },
                    AxisRange { lo: a_lo, hi: a_lo + a_w, steps: a_steps },
                );
                let recs = run_scan(&j).unwrap();
                let from_csv = parse_csv(&to_csv(&recs)).unwrap();
                let from_json: Vec<ScanRecord> = serde_json::from_str(&to_json(&recs).unwrap()).unwrap();
                prop_assert_eq!(&from_csv, &recs);
                prop_assert_eq!(&from_json, &recs);
            }
        }
    }
}

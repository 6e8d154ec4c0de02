//! Doubly truncated samples: storage, ingestion and the existence diagnostic.
//!
//! A record `(x, u, v)` is observable only when `u <= x <= v`. All interval
//! memberships in this crate use closed inequalities.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Covariate matrix with one row per record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Covariates {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Covariates {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument("covariates need at least one column".into()));
        }
        let bad: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.len() != names.len() || r.iter().any(|z| !z.is_finite()))
            .map(|(i, _)| i + 1)
            .collect();
        if !bad.is_empty() {
            return Err(Error::Validation {
                rows: bad,
                reason: "covariate rows must be finite and match the column count".into(),
            });
        }
        Ok(Self { names, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }
}

/// Aligned records `(x_i, u_i, v_i)` with optional covariates and event labels.
///
/// Construction validates `u_i <= x_i <= v_i`, finiteness and equal lengths;
/// the value is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSample {
    x: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    covariates: Option<Covariates>,
    events: Option<Vec<i64>>,
}

impl TruncatedSample {
    pub fn new(x: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("a sample needs at least one record".into()));
        }
        if u.len() != x.len() || v.len() != x.len() {
            return Err(Error::InvalidArgument(format!(
                "length mismatch: x={}, u={}, v={}",
                x.len(),
                u.len(),
                v.len()
            )));
        }
        let bad = invalid_rows(&x, &u, &v);
        if !bad.is_empty() {
            return Err(Error::Validation {
                rows: bad,
                reason: "records must be finite and satisfy u <= x <= v".into(),
            });
        }
        Ok(Self {
            x,
            u,
            v,
            covariates: None,
            events: None,
        })
    }

    pub fn with_covariates(mut self, covariates: Covariates) -> Result<Self> {
        if covariates.rows.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} covariate rows for {} records",
                covariates.rows.len(),
                self.len()
            )));
        }
        self.covariates = Some(covariates);
        Ok(self)
    }

    pub fn with_events(mut self, events: Vec<i64>) -> Result<Self> {
        if events.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} event labels for {} records",
                events.len(),
                self.len()
            )));
        }
        self.events = Some(events);
        Ok(self)
    }

    /// Returns a copy with the event labels replaced.
    pub fn relabel_events(&self, events: Vec<i64>) -> Result<Self> {
        self.clone().with_events(events)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn covariates(&self) -> Option<&Covariates> {
        self.covariates.as_ref()
    }

    pub fn events(&self) -> Option<&[i64]> {
        self.events.as_deref()
    }

    /// New sample made of the records at `indices` (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Self {
        let pick = |src: &[f64]| indices.iter().map(|&i| src[i]).collect::<Vec<_>>();
        Self {
            x: pick(&self.x),
            u: pick(&self.u),
            v: pick(&self.v),
            covariates: self.covariates.as_ref().map(|c| Covariates {
                names: c.names.clone(),
                rows: indices.iter().map(|&i| c.rows[i].clone()).collect(),
            }),
            events: self
                .events
                .as_ref()
                .map(|e| indices.iter().map(|&i| e[i]).collect()),
        }
    }

    /// True when every window contains every event value.
    pub fn windows_cover_all(&self) -> bool {
        let lo = self.x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.u.iter().all(|&u| u <= lo) && self.v.iter().all(|&v| v >= hi)
    }

    /// Serializes as comma-separated text with a header row.
    ///
    /// Numbers use the shortest representation that parses back to the same
    /// `f64`, so `parse_sample(&s.to_csv_string(), ..)` reproduces `s` exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x,u,v");
        if let Some(c) = &self.covariates {
            for name in &c.names {
                out.push(',');
                out.push_str(name);
            }
        }
        if self.events.is_some() {
            out.push_str(",event");
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{},{},{}", self.x[i], self.u[i], self.v[i]);
            if let Some(c) = &self.covariates {
                for z in &c.rows[i] {
                    let _ = write!(out, ",{z}");
                }
            }
            if let Some(e) = &self.events {
                let _ = write!(out, ",{}", e[i]);
            }
            out.push('\n');
        }
        out
    }
}

fn invalid_rows(x: &[f64], u: &[f64], v: &[f64]) -> Vec<usize> {
    (0..x.len())
        .filter(|&i| !row_is_valid(x[i], u[i], v[i]))
        .map(|i| i + 1)
        .collect()
}

fn row_is_valid(x: f64, u: f64, v: f64) -> bool {
    x.is_finite() && u.is_finite() && v.is_finite() && u <= x && x <= v
}

/// Maps logical fields onto header names.
///
/// By default `x`, `u`, `v` are read from columns of the same name, every
/// column named `z` or starting with `z` becomes a covariate, and a column
/// named `event` supplies event labels.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnMap {
    pub x: String,
    pub u: String,
    pub v: String,
    pub z: Option<Vec<String>>,
    pub event: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            x: "x".into(),
            u: "u".into(),
            v: "v".into(),
            z: None,
            event: None,
        }
    }
}

impl ColumnMap {
    /// Parses `x=age,u=lo,v=hi,z=z1;z2,event=group`. Unmentioned fields keep
    /// their defaults; an empty `z=` disables covariates.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = Self::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("bad column mapping `{part}`")))?;
            let value = value.trim().to_string();
            match key.trim() {
                "x" => map.x = value,
                "u" => map.u = value,
                "v" => map.v = value,
                "z" => {
                    map.z = Some(
                        value
                            .split(';')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect(),
                    )
                }
                "event" => map.event = Some(value),
                other => {
                    return Err(Error::InvalidArgument(format!("unknown logical column `{other}`")))
                }
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadOptions {
    pub columns: ColumnMap,
    /// Drop rows violating `u <= x <= v` instead of failing.
    pub drop_invalid: bool,
}

/// What ingestion did besides producing the sample.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    /// File line numbers of dropped rows.
    pub dropped_lines: Vec<usize>,
}

impl LoadReport {
    pub fn summary(&self) -> String {
        if self.dropped_lines.is_empty() {
            format!("read {} rows", self.rows_read)
        } else {
            format!(
                "read {} rows, dropped {} invalid row(s) at lines {:?}",
                self.rows_read,
                self.dropped_lines.len(),
                self.dropped_lines
            )
        }
    }
}

pub fn load_sample(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<TruncatedSample> {
    load_sample_with_report(path, opts).map(|(s, _)| s)
}

pub fn load_sample_with_report(
    path: impl AsRef<Path>,
    opts: &LoadOptions,
) -> Result<(TruncatedSample, LoadReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_sample_with_report(&text, opts)
}

pub fn parse_sample(text: &str, opts: &LoadOptions) -> Result<TruncatedSample> {
    parse_sample_with_report(text, opts).map(|(s, _)| s)
}

/// Parses delimited text. The delimiter is a comma when the header contains
/// one, whitespace otherwise. Rows with exactly one more field than the
/// header are taken to carry a leading row label, which is discarded.
pub fn parse_sample_with_report(text: &str, opts: &LoadOptions) -> Result<(TruncatedSample, LoadReport)> {
    let (header, rows) = tokenize(text)?;
    let cols = &opts.columns;
    let index_of = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}` (header: {header:?})")))
    };
    let ix = index_of(&cols.x)?;
    let iu = index_of(&cols.u)?;
    let iv = index_of(&cols.v)?;
    let z_names: Vec<String> = match &cols.z {
        Some(names) => names.clone(),
        None => header
            .iter()
            .filter(|h| h.starts_with('z'))
            .cloned()
            .collect(),
    };
    let iz: Vec<usize> = z_names.iter().map(|n| index_of(n)).collect::<Result<_>>()?;
    let ie = match &cols.event {
        Some(name) => Some(index_of(name)?),
        None => header.iter().position(|h| h == "event"),
    };

    let mut x = Vec::new();
    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut z = Vec::new();
    let mut events = Vec::new();
    let mut report = LoadReport::default();
    let mut invalid = Vec::new();

    for (line, mut fields) in rows {
        if fields.len() == header.len() + 1 {
            fields.remove(0);
        }
        if fields.len() != header.len() {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        report.rows_read += 1;
        let num = |k: usize| -> Result<f64> {
            fields[k].parse::<f64>().map_err(|_| Error::Parse {
                row: line,
                message: format!("non-numeric value `{}` in column `{}`", fields[k], header[k]),
            })
        };
        let (xi, ui, vi) = (num(ix)?, num(iu)?, num(iv)?);
        let zi: Vec<f64> = iz.iter().map(|&k| num(k)).collect::<Result<_>>()?;
        let ei = match ie {
            Some(k) => {
                let raw = num(k)?;
                if raw.fract() != 0.0 || !raw.is_finite() {
                    return Err(Error::Parse {
                        row: line,
                        message: format!("event label `{}` is not an integer", fields[k]),
                    });
                }
                Some(raw as i64)
            }
            None => None,
        };
        if !row_is_valid(xi, ui, vi) || zi.iter().any(|z| !z.is_finite()) {
            if opts.drop_invalid {
                report.dropped_lines.push(line);
                continue;
            }
            invalid.push(line);
            continue;
        }
        x.push(xi);
        u.push(ui);
        v.push(vi);
        z.push(zi);
        if let Some(e) = ei {
            events.push(e);
        }
    }

    if !invalid.is_empty() {
        return Err(Error::Validation {
            rows: invalid,
            reason: "u <= x <= v violated or non-finite value".into(),
        });
    }
    if x.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    let mut sample = TruncatedSample::new(x, u, v)?;
    if !z_names.is_empty() {
        sample = sample.with_covariates(Covariates::new(z_names, z)?)?;
    }
    if ie.is_some() {
        sample = sample.with_events(events)?;
    }
    Ok((sample, report))
}

type Rows = Vec<(usize, Vec<String>)>;

fn tokenize(text: &str) -> Result<(Vec<String>, Rows)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, head) = lines.next().ok_or_else(|| Error::Schema("empty input".into()))?;
    let comma = head.contains(',');
    let split = |l: &str| -> Vec<String> {
        if comma {
            l.split(',').map(unquote).collect()
        } else {
            l.split_whitespace().map(unquote).collect()
        }
    };
    if comma {
        // Quoted headers and cells are common in exported CSV; let the csv
        // reader handle them.
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse {
                row: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let fields: Vec<String> = rec.iter().map(str::to_string).collect();
            if fields.iter().all(|f| f.is_empty()) {
                continue;
            }
            records.push((line, fields));
        }
        let mut it = records.into_iter();
        let (_, header) = it.next().ok_or_else(|| Error::Schema("empty input".into()))?;
        return Ok((header, it.collect()));
    }
    let header = split(head);
    let rows = lines.map(|(n, l)| (n, split(l))).collect();
    Ok((header, rows))
}

fn unquote(s: &str) -> String {
    s.trim().trim_matches('"').to_string()
}

pub fn write_sample(sample: &TruncatedSample, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sample.to_csv_string()).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Per-record coverage counts behind the existence/uniqueness condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExistenceReport {
    /// `s1[i]` = number of windows containing `x_i`.
    pub s1: Vec<usize>,
    /// `s2[i]` = number of event values inside window `i`.
    pub s2: Vec<usize>,
    pub ok: bool,
    /// Zero-based indices of records with `s1 == 1` or `s2 == 1`.
    pub violating_indices: Vec<usize>,
}

/// Computes `S1_i = #{k : u_k <= x_i <= v_k}` and `S2_i = #{k : u_i <= x_k <= v_i}`.
///
/// The NPMLE is guaranteed to exist and be unique only when both counts
/// exceed one for every record. Runs in O(n log n) using sorted limits.
pub fn existence_check(sample: &TruncatedSample) -> ExistenceReport {
    let sorted = |xs: &[f64]| {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let us = sorted(sample.u());
    let vs = sorted(sample.v());
    let xs = sorted(sample.x());
    let count_le = |s: &[f64], t: f64| s.partition_point(|&a| a <= t);
    let count_lt = |s: &[f64], t: f64| s.partition_point(|&a| a < t);

    let s1: Vec<usize> = sample
        .x()
        .iter()
        // u_k <= v_k, so {v_k < x} is a subset of {u_k <= x}
        .map(|&x| count_le(&us, x) - count_lt(&vs, x))
        .collect();
    let s2: Vec<usize> = sample
        .u()
        .iter()
        .zip(sample.v())
        .map(|(&u, &v)| count_le(&xs, v) - count_lt(&xs, u))
        .collect();
    let violating_indices: Vec<usize> = (0..sample.len())
        .filter(|&i| s1[i] <= 1 || s2[i] <= 1)
        .collect();
    ExistenceReport {
        ok: violating_indices.is_empty(),
        s1,
        s2,
        violating_indices,
    }
}

/// Groups record indices by event label, in ascending label order.
pub(crate) fn indices_by_label(labels: &[i64]) -> Vec<(i64, Vec<usize>)> {
    let mut groups: HashMap<i64, Vec<usize>> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<_> = groups.into_iter().collect();
    out.sort_by_key(|(l, _)| *l);
    out
}

/// Merges labels: every label at or above `cap` becomes `cap`.
pub fn cap_labels(labels: &[i64], cap: i64) -> Vec<i64> {
    labels.iter().map(|&l| l.min(cap)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(rows: &[(f64, f64, f64)]) -> TruncatedSample {
        TruncatedSample::new(
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
        )
        .unwrap()
    }

    fn brute_force(s: &TruncatedSample) -> (Vec<usize>, Vec<usize>) {
        let n = s.len();
        let inside = |k: usize, x: f64| s.u()[k] <= x && x <= s.v()[k];
        let s1 = (0..n).map(|i| (0..n).filter(|&k| inside(k, s.x()[i])).count()).collect();
        let s2 = (0..n).map(|i| (0..n).filter(|&k| inside(i, s.x()[k])).count()).collect();
        (s1, s2)
    }

    #[test]
    fn existence_on_overlapping_windows() {
        let s = d(&[(1.0, 0.0, 2.5), (2.0, 0.5, 3.0), (3.0, 1.5, 4.0)]);
        let r = existence_check(&s);
        assert_eq!(r.s1, vec![2, 3, 2]);
        assert_eq!(r.s2, vec![2, 3, 2]);
        assert!(r.ok);
        assert!(r.violating_indices.is_empty());
    }

    #[test]
    fn existence_violation() {
        let s = d(&[(1.0, 0.0, 1.5), (2.0, 1.0, 3.0), (3.0, 2.5, 3.5)]);
        let r = existence_check(&s);
        assert_eq!(r.s1, vec![2, 1, 2]);
        assert_eq!(r.s2, vec![1, 3, 1]);
        assert!(!r.ok);
        assert_eq!(r.violating_indices, vec![0, 1, 2]);
    }

    #[test]
    fn single_record_covers_only_itself() {
        let r = existence_check(&d(&[(1.0, 0.0, 2.0)]));
        assert_eq!((r.s1, r.s2, r.ok), (vec![1], vec![1], false));
    }

    #[test]
    fn existence_matches_brute_force_with_ties() {
        let s = d(&[
            (1.0, 1.0, 1.0),
            (1.0, 0.0, 2.0),
            (2.0, 1.0, 2.0),
            (2.0, 2.0, 5.0),
            (4.0, 3.0, 4.0),
        ]);
        let r = existence_check(&s);
        let (s1, s2) = brute_force(&s);
        assert_eq!(r.s1, s1);
        assert_eq!(r.s2, s2);
    }

    #[test]
    fn loads_whitespace_with_row_labels() {
        let text = "x     u    v z\n1  6 -1643  182 4\n2  7   -24 1801 2\n";
        let s = parse_sample(text, &LoadOptions::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.x(), &[6.0, 7.0]);
        assert_eq!(s.u(), &[-1643.0, -24.0]);
        assert_eq!(s.covariates().unwrap().rows(), &[vec![4.0], vec![2.0]]);
    }

    #[test]
    fn loads_minimal_csv() {
        let s = parse_sample("x,u,v\n1,0,2\n", &LoadOptions::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.covariates().is_none());
    }

    #[test]
    fn rejects_unobservable_row() {
        let err = parse_sample("x,u,v\n1,2,3\n", &LoadOptions::default()).unwrap_err();
        match err {
            Error::Validation { rows, .. } => assert_eq!(rows, vec![2]),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn drop_invalid_reports_lines() {
        let opts = LoadOptions {
            drop_invalid: true,
            ..Default::default()
        };
        let (s, rep) = parse_sample_with_report("x,u,v\n1,2,3\n1,0,2\n5,0,4\n", &opts).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(rep.dropped_lines, vec![2, 4]);
        assert_eq!(rep.rows_read, 3);
    }

    #[test]
    fn schema_and_parse_errors() {
        assert!(matches!(
            parse_sample("x,u\n1,0\n", &LoadOptions::default()),
            Err(Error::Schema(_))
        ));
        match parse_sample("x,u,v\n1,0,2\n1,abc,2\n", &LoadOptions::default()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn column_map_overrides_names() {
        let opts = LoadOptions {
            columns: ColumnMap::parse("x=age,u=lo,v=hi,z=,event=grp").unwrap(),
            ..Default::default()
        };
        let s = parse_sample("age,lo,hi,grp,zed\n3,1,4,2,9\n", &opts).unwrap();
        assert_eq!(s.x(), &[3.0]);
        assert_eq!(s.events(), Some(&[2i64][..]));
        assert!(s.covariates().is_none());
    }

    #[test]
    fn quoted_csv_header() {
        let s = parse_sample("\"x\",\"u\",\"v\",\"z1\"\n1,0,2,0.5\n", &LoadOptions::default()).unwrap();
        assert_eq!(s.covariates().unwrap().names(), &["z1".to_string()]);
    }

    #[test]
    fn label_capping() {
        assert_eq!(cap_labels(&[1, 5, 7, 12, 3], 5), vec![1, 5, 5, 5, 3]);
    }
}

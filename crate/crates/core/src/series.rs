//! Monthly time series: ingestion, deflation, returns and descriptive statistics.
//!
//! Conventions used by [`describe`]:
//!
//! * `std_dev` uses the `n - 1` denominator;
//! * skewness and kurtosis use the biased `n`-denominator central moments,
//!   `S = m3 / m2^1.5` and `K = m4 / m2^2` (raw kurtosis, 3 under normality);
//! * Jarque-Bera is `n/6 * (S^2 + (K - 3)^2 / 4)` with a chi-square(2) p-value.

use std::cmp::Ordering;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Period {
    pub year: i32,
    pub month: u32,
}

impl Period {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    /// Months since year 0, used for offsets and gap detection.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: (ord.rem_euclid(12) + 1) as u32,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// `2008m12` style label used in report tables.
    pub fn label(self) -> String {
        format!("{}m{}", self.year, self.month)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Period {
    type Err = String;

    /// Accepts `YYYY-MM` or `YYYY-MM-DD`; the day is validated but dropped.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != 2 && parts.len() != 3 {
            return Err(format!("expected YYYY-MM or YYYY-MM-DD, got {s:?}"));
        }
        if parts[0].len() != 4 || parts[1].len() != 2 {
            return Err(format!("expected YYYY-MM or YYYY-MM-DD, got {s:?}"));
        }
        let year: i32 = parts[0].parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = parts[1].parse().map_err(|_| format!("bad month in {s:?}"))?;
        if parts.len() == 3 {
            let day: u32 = parts[2].parse().map_err(|_| format!("bad day in {s:?}"))?;
            if parts[2].len() != 2 || !(1..=31).contains(&day) {
                return Err(format!("bad day in {s:?}"));
            }
        }
        Period::new(year, month).ok_or_else(|| format!("month out of range in {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Frequency {
    #[default]
    Monthly,
}

/// Gap-free monthly series of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    name: String,
    start: Period,
    values: Vec<f64>,
    frequency: Frequency,
}

impl Series {
    pub fn new(name: impl Into<String>, start: Period, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::TooShort {
                op: "Series::new",
                need: 1,
                got: 0,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name, index });
        }
        Ok(Self {
            name,
            start,
            values,
            frequency: Frequency::Monthly,
        })
    }

    /// Series starting at 2000-01; convenient for simulated data.
    pub fn from_values(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(name, Period { year: 2000, month: 1 }, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> Period {
        self.start
    }

    pub fn end(&self) -> Period {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self, index: usize) -> Period {
        self.start.offset(index as i64)
    }

    pub fn timestamps(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.values.len()).map(move |i| self.period(i))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same timestamps, new values (must have equal length).
    pub fn with_values(&self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: self.values.len(),
                right: values.len(),
            });
        }
        Series::new(name, self.start, values)
    }

    /// Sub-series `[from, from + len)`.
    pub fn slice(&self, from: usize, len: usize) -> Result<Self> {
        if from + len > self.values.len() || len == 0 {
            return Err(Error::InvalidArgument(format!(
                "slice {from}..{} out of range for length {}",
                from + len,
                self.values.len()
            )));
        }
        Series::new(
            self.name.clone(),
            self.period(from),
            self.values[from..from + len].to_vec(),
        )
    }

    pub fn ln(&self) -> Result<Self> {
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NonpositiveValue { index, value });
        }
        Series::new(
            format!("ln_{}", self.name),
            self.start,
            self.values.iter().map(|v| v.ln()).collect(),
        )
    }

    fn range_label(&self) -> String {
        format!("{}..{} ({})", self.start, self.end(), self.name)
    }
}

/// One mapped value column: `column` in the file becomes series `name`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub column: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub columns: Vec<ColumnMap>,
}

impl CsvSchema {
    pub fn new(date_column: impl Into<String>) -> Self {
        Self {
            date_column: date_column.into(),
            columns: Vec::new(),
        }
    }

    pub fn column(mut self, column: impl Into<String>, name: impl Into<String>) -> Self {
        self.columns.push(ColumnMap {
            column: column.into(),
            name: name.into(),
        });
        self
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Vec<Series>> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: label.clone(),
        message: e.to_string(),
    })?;
    load_csv_reader(file, &label, schema)
}

/// Reads the CSV layout from any reader; `source` labels error messages.
pub fn load_csv_reader<R: Read>(reader: R, source: &str, schema: &CsvSchema) -> Result<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let io_err = |e: csv::Error| Error::Io {
        path: source.to_string(),
        message: e.to_string(),
    };
    let headers = rdr.headers().map_err(io_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: source.to_string(),
                column: name.to_string(),
            })
    };
    let date_idx = find(&schema.date_column)?;
    let value_idx = schema
        .columns
        .iter()
        .map(|c| find(&c.column))
        .collect::<Result<Vec<_>>>()?;

    // (period, data row number, values)
    let mut rows: Vec<(Period, usize, Vec<f64>)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(io_err)?;
        let row = i + 2; // 1-based, header is row 1
        let cell = |idx: usize, column: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::UnparseableCell {
                path: source.to_string(),
                row,
                column: column.to_string(),
                value: String::new(),
            })
        };
        let raw_date = cell(date_idx, &schema.date_column)?;
        let period: Period = raw_date.parse().map_err(|_| Error::UnparseableCell {
            path: source.to_string(),
            row,
            column: schema.date_column.clone(),
            value: raw_date.to_string(),
        })?;
        let mut values = Vec::with_capacity(value_idx.len());
        for (map, &idx) in schema.columns.iter().zip(&value_idx) {
            let raw = cell(idx, &map.column)?;
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::UnparseableCell {
                    path: source.to_string(),
                    row,
                    column: map.column.clone(),
                    value: raw.to_string(),
                })?;
            values.push(v);
        }
        rows.push((period, row, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: source.to_string(),
        });
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    for pair in rows.windows(2) {
        let (p0, p1) = (pair[0].0, pair[1].0);
        if p0 == p1 {
            return Err(Error::DuplicateTimestamp {
                path: source.to_string(),
                row: pair[1].1,
                period: p1,
            });
        }
        if p1.ordinal() != p0.ordinal() + 1 {
            return Err(Error::NonContiguous {
                path: source.to_string(),
                before: p0,
                after: p1,
            });
        }
    }
    let start = rows[0].0;
    schema
        .columns
        .iter()
        .enumerate()
        .map(|(k, map)| Series::new(map.name.clone(), start, rows.iter().map(|r| r.2[k]).collect()))
        .collect()
}

/// Real price in index points: `100 * nominal / cpi`.
pub fn deflate(nominal: &Series, cpi: &Series) -> Result<Series> {
    if nominal.start != cpi.start || nominal.len() != cpi.len() {
        return Err(Error::TimestampMismatch {
            left: nominal.range_label(),
            right: cpi.range_label(),
        });
    }
    if let Some(index) = cpi.values.iter().position(|&c| c <= 0.0) {
        return Err(Error::NonpositiveDeflator { index });
    }
    let values = nominal
        .values
        .iter()
        .zip(&cpi.values)
        .map(|(n, c)| 100.0 * n / c)
        .collect();
    Series::new(format!("{}_real", nominal.name), nominal.start, values)
}

/// Percent log returns `100 * (ln s_t - ln s_{t-1})`, dated at `t`.
pub fn log_returns(s: &Series) -> Result<Series> {
    if s.len() < 2 {
        return Err(Error::TooShort {
            op: "log_returns",
            need: 2,
            got: s.len(),
        });
    }
    if let Some((index, &value)) = s.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NonpositiveValue { index, value });
    }
    let values = s
        .values
        .windows(2)
        .map(|w| 100.0 * (w[1].ln() - w[0].ln()))
        .collect();
    Series::new(format!("{}_ret", s.name), s.period(1), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jarque_bera_stat: f64,
    pub jarque_bera_p: f64,
}

pub fn describe(s: &Series) -> Result<SummaryStats> {
    describe_values(s.values())
}

pub fn describe_values(x: &[f64]) -> Result<SummaryStats> {
    let n = x.len();
    if n < 4 {
        return Err(Error::TooShort {
            op: "describe",
            need: 4,
            got: n,
        });
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std_dev = (m2 / (nf - 1.0)).sqrt();
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    let jb = if m2 > 0.0 {
        nf / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0)
    } else {
        0.0
    };
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(SummaryStats {
        n,
        mean,
        median,
        max: sorted[n - 1],
        min: sorted[0],
        std_dev,
        skewness,
        kurtosis,
        jarque_bera_stat: jb,
        // chi-square(2) survival function
        jarque_bera_p: (-jb / 2.0).exp(),
    })
}

/// Ranks starting at 1 with ties receiving their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman(x: &Series, y: &Series) -> Result<f64> {
    spearman_values(x.values(), y.values())
}

pub fn spearman_values(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort {
            op: "spearman",
            need: 3,
            got: x.len(),
        });
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

//! Traffic counters and the CSV report schema.
//!
//! Amplification ratios divide storage-side bytes by client-side bytes.
//! When a workload has no bytes on the natural denominator side (a pure
//! write run still induces storage reads through read-modify-write), the
//! ratio falls back to the other side's client bytes; with no client bytes
//! at all it is undefined and stays empty in the CSV rather than claiming
//! zero.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::backend::{IoEffects, IoOp, IoRequest};

/// Column order of every report CSV.
pub const CSV_HEADER: [&str; 17] = [
    "backend",
    "k",
    "m",
    "r",
    "workload",
    "pattern",
    "block_bytes",
    "client_read_bytes",
    "client_write_bytes",
    "storage_read_bytes",
    "storage_write_bytes",
    "private_net_bytes",
    "public_net_bytes",
    "read_amp",
    "write_amp",
    "rel_net_traffic",
    "pg_conflicts",
];

/// Running totals over a workload phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub client_read_bytes: u64,
    pub client_write_bytes: u64,
    pub storage_read_bytes: u64,
    pub storage_write_bytes: u64,
    pub private_net_bytes: u64,
    pub public_net_bytes: u64,
    pub pg_conflicts: u64,
    pub requests: u64,
    /// Metadata operations are tallied but bypass the data pool.
    pub metadata_requests: u64,
}

impl Counters {
    /// Fold one executed client request into the totals.
    pub fn absorb(&mut self, req: &IoRequest, fx: &IoEffects) {
        match req.op {
            IoOp::Read => self.client_read_bytes += req.length,
            IoOp::Write => self.client_write_bytes += req.length,
        }
        self.requests += 1;
        self.add_effects(fx);
    }

    /// Fold effects that have no client request behind them (repair,
    /// object initialization done out of band, heartbeats).
    pub fn add_effects(&mut self, fx: &IoEffects) {
        self.storage_read_bytes += fx.storage_read_bytes();
        self.storage_write_bytes += fx.storage_write_bytes();
        self.private_net_bytes += fx.private_net_bytes;
        self.public_net_bytes += fx.public_net_bytes;
        if fx.pg_conflict {
            self.pg_conflicts += 1;
        }
    }

    fn denominator(&self, preferred: u64, fallback: u64) -> Option<f64> {
        if preferred > 0 {
            Some(preferred as f64)
        } else if fallback > 0 {
            Some(fallback as f64)
        } else {
            None
        }
    }

    /// Storage reads per client byte. Falls back to written client bytes
    /// for write-only workloads whose reads are all induced.
    pub fn read_amp(&self) -> Option<f64> {
        self.denominator(self.client_read_bytes, self.client_write_bytes)
            .map(|d| self.storage_read_bytes as f64 / d)
    }

    /// Storage writes per client byte, with the symmetric fallback.
    pub fn write_amp(&self) -> Option<f64> {
        self.denominator(self.client_write_bytes, self.client_read_bytes)
            .map(|d| self.storage_write_bytes as f64 / d)
    }

    /// Private network bytes per client byte moved in either direction.
    pub fn rel_net_traffic(&self) -> Option<f64> {
        let denom = self.client_read_bytes + self.client_write_bytes;
        if denom == 0 {
            None
        } else {
            Some(self.private_net_bytes as f64 / denom as f64)
        }
    }
}

/// One row of the results CSV: a backend crossed with a workload.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub backend: String,
    pub k: Option<u32>,
    pub m: Option<u32>,
    pub r: Option<u32>,
    pub workload: String,
    pub pattern: String,
    pub block_bytes: String,
    pub client_read_bytes: u64,
    pub client_write_bytes: u64,
    pub storage_read_bytes: u64,
    pub storage_write_bytes: u64,
    pub private_net_bytes: u64,
    pub public_net_bytes: u64,
    pub read_amp: Option<f64>,
    pub write_amp: Option<f64>,
    pub rel_net_traffic: Option<f64>,
    pub pg_conflicts: u64,
}

impl ReportRow {
    fn record(&self) -> Vec<String> {
        fn opt_u32(v: Option<u32>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn opt_ratio(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.6}")).unwrap_or_default()
        }
        vec![
            self.backend.clone(),
            opt_u32(self.k),
            opt_u32(self.m),
            opt_u32(self.r),
            self.workload.clone(),
            self.pattern.clone(),
            self.block_bytes.clone(),
            self.client_read_bytes.to_string(),
            self.client_write_bytes.to_string(),
            self.storage_read_bytes.to_string(),
            self.storage_write_bytes.to_string(),
            self.private_net_bytes.to_string(),
            self.public_net_bytes.to_string(),
            opt_ratio(self.read_amp),
            opt_ratio(self.write_amp),
            opt_ratio(self.rel_net_traffic),
            self.pg_conflicts.to_string(),
        ]
    }
}

#[derive(Debug)]
pub enum MetricsError {
    Io(std::io::Error),
    Format { line: u64, reason: String },
}

impl std::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricsError::Io(e) => write!(f, "{e}"),
            MetricsError::Format { line, reason } => {
                write!(f, "malformed results csv at line {line}: {reason}")
            }
        }
    }
}

impl std::error::Error for MetricsError {}

impl From<std::io::Error> for MetricsError {
    fn from(e: std::io::Error) -> MetricsError {
        MetricsError::Io(e)
    }
}

impl From<csv::Error> for MetricsError {
    fn from(e: csv::Error) -> MetricsError {
        match e.position() {
            Some(p) => MetricsError::Format { line: p.line(), reason: e.to_string() },
            None => MetricsError::Format { line: 0, reason: e.to_string() },
        }
    }
}

/// Write rows to `path` atomically: a temp file in the same directory is
/// renamed over the target so readers never see a half-written report.
pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<(), MetricsError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(CSV_HEADER)?;
    for row in rows {
        wtr.write_record(row.record())?;
    }
    let bytes = wtr.into_inner().map_err(|e| MetricsError::Format {
        line: 0,
        reason: e.to_string(),
    })?;
    write_atomic(path, &bytes)?;
    Ok(())
}

/// Replace `path` contents by writing a sibling temp file and renaming it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{stem}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Read a results CSV back, checking the header matches the schema.
pub fn read_report(path: &Path) -> Result<Vec<ReportRow>, MetricsError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => {
            MetricsError::Io(std::io::Error::other(format!("{}: {e}", path.display())))
        }
        _ => e.into(),
    })?;
    {
        let headers = rdr.headers()?;
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(MetricsError::Format {
                line: 1,
                reason: format!("unexpected header: {}", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = (i + 2) as u64;
        if record.len() != CSV_HEADER.len() {
            return Err(MetricsError::Format {
                line,
                reason: format!("{} fields, expected {}", record.len(), CSV_HEADER.len()),
            });
        }
        let field = |idx: usize| record.get(idx).unwrap_or_default();
        let parse_u64 = |idx: usize| -> Result<u64, MetricsError> {
            field(idx).parse().map_err(|_| MetricsError::Format {
                line,
                reason: format!("bad integer in column {}", CSV_HEADER[idx]),
            })
        };
        let parse_opt_u32 = |idx: usize| -> Result<Option<u32>, MetricsError> {
            let s = field(idx);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| MetricsError::Format {
                line,
                reason: format!("bad integer in column {}", CSV_HEADER[idx]),
            })
        };
        let parse_opt_f64 = |idx: usize| -> Result<Option<f64>, MetricsError> {
            let s = field(idx);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| MetricsError::Format {
                line,
                reason: format!("bad ratio in column {}", CSV_HEADER[idx]),
            })
        };
        rows.push(ReportRow {
            backend: field(0).to_string(),
            k: parse_opt_u32(1)?,
            m: parse_opt_u32(2)?,
            r: parse_opt_u32(3)?,
            workload: field(4).to_string(),
            pattern: field(5).to_string(),
            block_bytes: field(6).to_string(),
            client_read_bytes: parse_u64(7)?,
            client_write_bytes: parse_u64(8)?,
            storage_read_bytes: parse_u64(9)?,
            storage_write_bytes: parse_u64(10)?,
            private_net_bytes: parse_u64(11)?,
            public_net_bytes: parse_u64(12)?,
            read_amp: parse_opt_f64(13)?,
            write_amp: parse_opt_f64(14)?,
            rel_net_traffic: parse_opt_f64(15)?,
            pg_conflicts: parse_u64(16)?,
        });
    }
    Ok(rows)
}

//! Client workload generation and trace replay.
//!
//! A workload spec pins a request mix (read fraction, random fraction,
//! block sizes, metadata share) over a logical file. Generation is fully
//! deterministic per seed, so the same event stream can replay against
//! several backends for a like-for-like comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{IoOp, IoRequest};

const MIB: u64 = 1024 * 1024;

/// Spatial access pattern of a workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pattern {
    Sequential,
    Random,
    /// Per-request coin flip: this fraction of requests jump to a random
    /// block-aligned offset, the rest continue sequentially.
    Mixed { random_fraction: f64 },
}

impl Pattern {
    pub fn label(&self) -> &'static str {
        match self {
            Pattern::Sequential => "sequential",
            Pattern::Random => "random",
            Pattern::Mixed { .. } => "mixed",
        }
    }

    fn random_fraction(&self) -> f64 {
        match self {
            Pattern::Sequential => 0.0,
            Pattern::Random => 1.0,
            Pattern::Mixed { random_fraction } => *random_fraction,
        }
    }
}

/// Request size distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockSizes {
    Fixed(u64),
    /// (bytes, weight) pairs; weights need not sum to one.
    Weighted(Vec<(u64, f64)>),
}

impl BlockSizes {
    pub fn label(&self) -> String {
        match self {
            BlockSizes::Fixed(b) => b.to_string(),
            BlockSizes::Weighted(_) => "mixed".to_string(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            BlockSizes::Fixed(b) => *b,
            BlockSizes::Weighted(pairs) => {
                let total: f64 = pairs.iter().map(|(_, w)| w).sum();
                let mut pick = rng.gen::<f64>() * total;
                for (bytes, w) in pairs {
                    pick -= w;
                    if pick <= 0.0 {
                        return *bytes;
                    }
                }
                pairs.last().expect("validated non-empty").0
            }
        }
    }

    fn sizes(&self) -> Vec<u64> {
        match self {
            BlockSizes::Fixed(b) => vec![*b],
            BlockSizes::Weighted(pairs) => pairs.iter().map(|(b, _)| *b).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub name: String,
    /// Fraction of requests that are reads.
    pub read_fraction: f64,
    pub pattern: Pattern,
    pub blocks: BlockSizes,
    /// Fraction of requests that are metadata operations; they are counted
    /// but never touch the data pool.
    pub metadata_fraction: f64,
    /// Stop once this many data bytes have been requested.
    pub total_bytes: u64,
    /// Size of the logical file requests address.
    pub file_bytes: u64,
    /// Write the whole file once before measuring, so reads and overwrites
    /// hit initialized objects.
    pub prefill: bool,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let frac = |v: f64, what: &str| {
            if !(0.0..=1.0).contains(&v) {
                Err(WorkloadError::Invalid(format!("{what} {v} outside [0, 1]")))
            } else {
                Ok(())
            }
        };
        frac(self.read_fraction, "read_fraction")?;
        frac(self.metadata_fraction, "metadata_fraction")?;
        frac(self.pattern.random_fraction(), "random_fraction")?;
        if self.total_bytes == 0 {
            return Err(WorkloadError::Invalid("total_bytes must be positive".into()));
        }
        if self.file_bytes == 0 {
            return Err(WorkloadError::Invalid("file_bytes must be positive".into()));
        }
        let sizes = self.blocks.sizes();
        if sizes.is_empty() {
            return Err(WorkloadError::Invalid("no block sizes given".into()));
        }
        for b in sizes {
            if b == 0 {
                return Err(WorkloadError::Invalid("block size 0".into()));
            }
            if b > self.file_bytes {
                return Err(WorkloadError::Invalid(format!(
                    "block size {b} exceeds file size {}",
                    self.file_bytes
                )));
            }
        }
        if let BlockSizes::Weighted(pairs) = &self.blocks {
            if pairs.iter().any(|(_, w)| *w < 0.0) || pairs.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
                return Err(WorkloadError::Invalid("block weights must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One generated client request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkloadEvent {
    pub request: IoRequest,
    /// Metadata operation: tallied but not executed against the data pool.
    pub metadata: bool,
    /// The offset was drawn randomly rather than continuing the cursor.
    pub random: bool,
}

#[derive(Debug)]
pub enum WorkloadError {
    Invalid(String),
    Trace { line: usize, reason: String },
}

impl std::fmt::Display for WorkloadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorkloadError::Invalid(reason) => write!(f, "invalid workload: {reason}"),
            WorkloadError::Trace { line, reason } => {
                write!(f, "trace line {line}: {reason}")
            }
        }
    }
}

impl std::error::Error for WorkloadError {}

/// Materialize the request stream for a spec. The same (spec, seed) pair
/// always yields the same events.
pub fn generate(spec: &WorkloadSpec, seed: u64) -> Result<Vec<WorkloadEvent>, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut cursor = 0u64;
    let mut issued = 0u64;
    while issued < spec.total_bytes {
        let metadata = spec.metadata_fraction > 0.0 && rng.gen_bool(spec.metadata_fraction);
        let op = if rng.gen_bool(spec.read_fraction) { IoOp::Read } else { IoOp::Write };
        let length = spec.blocks.sample(&mut rng);
        let f = spec.pattern.random_fraction();
        let random = f > 0.0 && (f >= 1.0 || rng.gen_bool(f));
        let file_offset = if random {
            let slots = spec.file_bytes / length;
            debug_assert!(slots > 0, "validated block size <= file size");
            rng.gen_range(0..slots) * length
        } else {
            if cursor + length > spec.file_bytes {
                cursor = 0;
            }
            let at = cursor;
            cursor += length;
            at
        };
        events.push(WorkloadEvent {
            request: IoRequest { op, file_offset, length },
            metadata,
            random,
        });
        if !metadata {
            issued += length;
        }
    }
    Ok(events)
}

/// Built-in workload mixes modeled on common storage consumers. Fractions
/// follow the dominant process of each trace family; volumes default to a
/// 64 MiB measurement window over a 1 TiB file.
pub fn preset(name: &str) -> Option<WorkloadSpec> {
    let base = WorkloadSpec {
        name: name.to_string(),
        read_fraction: 0.5,
        pattern: Pattern::Random,
        blocks: BlockSizes::Fixed(4096),
        metadata_fraction: 0.0,
        total_bytes: 64 * MIB,
        file_bytes: 1024 * 1024 * MIB,
        prefill: false,
    };
    let spec = match name {
        // OLTP database: read-heavy point lookups
        "db" => WorkloadSpec {
            read_fraction: 0.8,
            pattern: Pattern::Mixed { random_fraction: 0.99 },
            blocks: BlockSizes::Fixed(8192),
            ..base
        },
        // virtual desktops: write-dominated small random I/O
        "vdi" => WorkloadSpec {
            read_fraction: 0.263,
            pattern: Pattern::Mixed { random_fraction: 0.848 },
            blocks: BlockSizes::Fixed(4096),
            metadata_fraction: 0.01,
            ..base
        },
        // chip design scratch: metadata-churny mid-size transfers
        "eda" => WorkloadSpec {
            read_fraction: 0.375,
            pattern: Pattern::Mixed { random_fraction: 0.575 },
            blocks: BlockSizes::Fixed(65536),
            metadata_fraction: 0.60,
            ..base
        },
        // video archiving: large sequential writes
        "vda" => WorkloadSpec {
            read_fraction: 0.0,
            pattern: Pattern::Sequential,
            blocks: BlockSizes::Fixed(524288),
            ..base
        },
        _ => return None,
    };
    Some(spec)
}

pub const PRESET_NAMES: [&str; 4] = ["db", "vdi", "eda", "vda"];

/// Parse a `timestamp,op,offset,length` trace. Blank lines and `#` comments
/// are skipped; `op` is `R` or `W` (any case, `read`/`write` spelled out
/// also accepted). Timestamps order the file but are not simulated.
pub fn parse_trace(text: &str) -> Result<Vec<WorkloadEvent>, WorkloadError> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(WorkloadError::Trace {
                line,
                reason: format!("{} fields, expected timestamp,op,offset,length", fields.len()),
            });
        }
        fields[0].parse::<f64>().map_err(|_| WorkloadError::Trace {
            line,
            reason: format!("bad timestamp {:?}", fields[0]),
        })?;
        let op = match fields[1].to_ascii_lowercase().as_str() {
            "r" | "read" => IoOp::Read,
            "w" | "write" => IoOp::Write,
            other => {
                return Err(WorkloadError::Trace { line, reason: format!("bad op {other:?}") })
            }
        };
        let file_offset = fields[2].parse::<u64>().map_err(|_| WorkloadError::Trace {
            line,
            reason: format!("bad offset {:?}", fields[2]),
        })?;
        let length = fields[3].parse::<u64>().map_err(|_| WorkloadError::Trace {
            line,
            reason: format!("bad length {:?}", fields[3]),
        })?;
        if length == 0 {
            return Err(WorkloadError::Trace { line, reason: "zero-length request".into() });
        }
        events.push(WorkloadEvent {
            request: IoRequest { op, file_offset, length },
            metadata: false,
            random: false,
        });
    }
    Ok(events)
}

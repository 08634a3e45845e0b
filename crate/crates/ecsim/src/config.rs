//! Run configuration: an INI-style file with repeatable `[backend]` and
//! `[workload]` sections, command-line `--set` overrides, and resolution
//! into validated simulator types.
//!
//! ```text
//! [cluster]
//! nodes = 4
//! osds_per_node = 6
//!
//! [backend]
//! mode = rs
//! k = 6
//! m = 3
//!
//! [backend]
//! mode = replication
//! replicas = 3
//!
//! [workload]
//! preset = db
//!
//! [run]
//! seed = 42
//! output_dir = results
//! ```
//!
//! Later keys win within a section, so `--set backend.0.k=10` appends a
//! key that overrides the file.

use std::path::PathBuf;

use crate::backend::{BackendConfig, Mode, NetLocality, DEFAULT_HEARTBEAT_MSG_BYTES};
use crate::codec::CodeParams;
use crate::gf256;
use crate::placement::ClusterMap;
use crate::workload::{preset, BlockSizes, Pattern, WorkloadSpec};

const MIB: u64 = 1024 * 1024;

#[derive(Debug)]
pub enum ConfigError {
    Syntax { origin: String, reason: String },
    Value { origin: String, reason: String },
    Missing(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Syntax { origin, reason } => write!(f, "config {origin}: {reason}"),
            ConfigError::Value { origin, reason } => write!(f, "config {origin}: {reason}"),
            ConfigError::Missing(what) => write!(f, "config: {what}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct KeyVal {
    key: String,
    value: String,
    origin: String,
}

/// Parsed but untyped configuration: sections in file order.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    cluster: Vec<KeyVal>,
    backends: Vec<Vec<KeyVal>>,
    workloads: Vec<Vec<KeyVal>>,
    run: Vec<KeyVal>,
    failure: Option<Vec<KeyVal>>,
}

/// Parse the INI-style text. Unknown sections are rejected here; unknown
/// keys are rejected during resolution so overrides get the same checks.
pub fn parse(text: &str) -> Result<FileConfig, ConfigError> {
    enum Cursor {
        None,
        Cluster,
        Run,
        Failure,
        Backend(usize),
        Workload(usize),
    }
    let mut cfg = FileConfig::default();
    let mut cursor = Cursor::None;
    for (i, raw) in text.lines().enumerate() {
        let origin = format!("line {}", i + 1);
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            cursor = match name.trim() {
                "cluster" => Cursor::Cluster,
                "run" => Cursor::Run,
                "failure" => {
                    cfg.failure.get_or_insert_with(Vec::new);
                    Cursor::Failure
                }
                "backend" => {
                    cfg.backends.push(Vec::new());
                    Cursor::Backend(cfg.backends.len() - 1)
                }
                "workload" => {
                    cfg.workloads.push(Vec::new());
                    Cursor::Workload(cfg.workloads.len() - 1)
                }
                other => {
                    return Err(ConfigError::Syntax {
                        origin,
                        reason: format!("unknown section [{other}]"),
                    })
                }
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                origin,
                reason: format!("expected key = value, got {line:?}"),
            });
        };
        let kv = KeyVal {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            origin: origin.clone(),
        };
        match cursor {
            Cursor::None => {
                return Err(ConfigError::Syntax {
                    origin,
                    reason: "key outside any [section]".into(),
                })
            }
            Cursor::Cluster => cfg.cluster.push(kv),
            Cursor::Run => cfg.run.push(kv),
            Cursor::Failure => cfg.failure.as_mut().expect("created at header").push(kv),
            Cursor::Backend(i) => cfg.backends[i].push(kv),
            Cursor::Workload(i) => cfg.workloads[i].push(kv),
        }
    }
    Ok(cfg)
}

/// Apply `--set section[.index].key=value` overrides. Overrides append to
/// the section, and later keys win during resolution. Indexes address
/// repeated sections and default to 0; sections absent from the file are
/// created.
pub fn apply_overrides(cfg: &mut FileConfig, sets: &[String]) -> Result<(), ConfigError> {
    for (i, set) in sets.iter().enumerate() {
        let origin = format!("--set #{}", i + 1);
        let err = |reason: String| ConfigError::Syntax { origin: origin.clone(), reason };
        let Some((path, value)) = set.split_once('=') else {
            return Err(err(format!("expected section.key=value, got {set:?}")));
        };
        let parts: Vec<&str> = path.trim().split('.').collect();
        let (section, index, key) = match parts.as_slice() {
            [section, key] => (*section, 0usize, *key),
            [section, index, key] => {
                let idx = index.parse::<usize>().map_err(|_| {
                    err(format!("section index {index:?} is not a number"))
                })?;
                (*section, idx, *key)
            }
            _ => return Err(err(format!("expected section.key or section.index.key, got {path:?}"))),
        };
        let kv = KeyVal {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            origin: origin.clone(),
        };
        let push_indexed = |list: &mut Vec<Vec<KeyVal>>| -> Result<(), ConfigError> {
            while list.len() <= index {
                list.push(Vec::new());
            }
            list[index].push(kv.clone());
            Ok(())
        };
        match section {
            "cluster" => cfg.cluster.push(kv),
            "run" => cfg.run.push(kv),
            "failure" => cfg.failure.get_or_insert_with(Vec::new).push(kv),
            "backend" => push_indexed(&mut cfg.backends)?,
            "workload" => push_indexed(&mut cfg.workloads)?,
            other => return Err(err(format!("unknown section {other:?}"))),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// resolved configuration

#[derive(Debug, Clone)]
pub struct ClusterSettings {
    pub nodes: u32,
    pub osds_per_node: u32,
    pub pg_meta: u32,
    pub placement_seed: u64,
}

impl ClusterSettings {
    pub fn map_for(&self, pg_count_data: u32) -> Result<ClusterMap, ConfigError> {
        ClusterMap::new(self.nodes, self.osds_per_node, pg_count_data, self.pg_meta, self.placement_seed)
            .map_err(|e| ConfigError::Value { origin: "[cluster]".into(), reason: e.to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct BackendSpec {
    pub label: String,
    pub cfg: BackendConfig,
    pub pg_count: u32,
}

#[derive(Debug, Clone)]
pub struct WorkloadEntry {
    pub spec: WorkloadSpec,
    /// Replay this trace file instead of generating requests.
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub queue_depth: u64,
    pub heartbeat_s: f64,
    pub heartbeat_msg_bytes: u64,
    pub net_locality: NetLocality,
    pub verify_payload: bool,
}

#[derive(Debug, Clone)]
pub struct FailureSpec {
    pub osds: Vec<u32>,
    /// Inject the failures after this many data requests.
    pub fail_after: u64,
    /// Repair the failed OSDs after this many data requests, if set.
    pub repair_after: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub cluster: ClusterSettings,
    pub backends: Vec<BackendSpec>,
    pub workloads: Vec<WorkloadEntry>,
    pub run: RunSettings,
    pub failure: Option<FailureSpec>,
}

struct Section<'a> {
    name: String,
    kvs: &'a [KeyVal],
}

impl<'a> Section<'a> {
    fn get(&self, key: &str) -> Option<&'a KeyVal> {
        self.kvs.iter().rev().find(|kv| kv.key == key)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for kv in self.kvs {
            if !allowed.contains(&kv.key.as_str()) {
                return Err(ConfigError::Syntax {
                    origin: kv.origin.clone(),
                    reason: format!("unknown key {:?} in {}", kv.key, self.name),
                });
            }
        }
        Ok(())
    }

    fn value_err(&self, kv: &KeyVal, reason: String) -> ConfigError {
        ConfigError::Value {
            origin: kv.origin.clone(),
            reason: format!("{} in {}: {reason}", kv.key, self.name),
        }
    }

    fn parse<T, F>(&self, key: &str, default: T, f: F) -> Result<T, ConfigError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match self.get(key) {
            None => Ok(default),
            Some(kv) => f(&kv.value).map_err(|reason| self.value_err(kv, reason)),
        }
    }

    fn require<T, F>(&self, key: &str, f: F) -> Result<T, ConfigError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match self.get(key) {
            None => Err(ConfigError::Missing(format!("{} requires key {key}", self.name))),
            Some(kv) => f(&kv.value).map_err(|reason| self.value_err(kv, reason)),
        }
    }
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("{s:?} is not an unsigned integer"))
}

fn parse_u32(s: &str) -> Result<u32, String> {
    s.parse().map_err(|_| format!("{s:?} is not an unsigned integer"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("{s:?} is not a number"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("{s:?} is not a boolean")),
    }
}

/// Byte sizes accept binary suffixes: `4096`, `8K`, `4M`, `1G`, `1T`.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let (digits, mult) = match t.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => {
            let mult: u64 = match c.to_ascii_uppercase() {
                'K' => 1 << 10,
                'M' => 1 << 20,
                'G' => 1 << 30,
                'T' => 1 << 40,
                _ => return Err(format!("unknown size suffix {c:?}")),
            };
            (&t[..i], mult)
        }
        _ => (t, 1),
    };
    let n: u64 = digits.trim().parse().map_err(|_| format!("{s:?} is not a size"))?;
    n.checked_mul(mult).ok_or_else(|| format!("size {s:?} overflows"))
}

/// `4096` is a fixed size; `4096:3,65536:1` weights several sizes.
fn parse_blocks(s: &str) -> Result<BlockSizes, String> {
    if !s.contains(',') && !s.contains(':') {
        return Ok(BlockSizes::Fixed(parse_bytes(s)?));
    }
    let mut pairs = Vec::new();
    for part in s.split(',') {
        let (size, weight) = match part.split_once(':') {
            Some((size, weight)) => {
                (parse_bytes(size)?, weight.trim().parse::<f64>().map_err(|_| {
                    format!("{weight:?} is not a weight")
                })?)
            }
            None => (parse_bytes(part)?, 1.0),
        };
        pairs.push((size, weight));
    }
    Ok(BlockSizes::Weighted(pairs))
}

fn resolve_cluster(kvs: &[KeyVal]) -> Result<ClusterSettings, ConfigError> {
    let s = Section { name: "[cluster]".into(), kvs };
    s.check_keys(&["nodes", "osds_per_node", "pg_meta", "placement_seed"])?;
    Ok(ClusterSettings {
        nodes: s.parse("nodes", 4, parse_u32)?,
        osds_per_node: s.parse("osds_per_node", 6, parse_u32)?,
        pg_meta: s.parse("pg_meta", 128, parse_u32)?,
        placement_seed: s.parse("placement_seed", 1, parse_u64)?,
    })
}

fn resolve_backend(
    index: usize,
    kvs: &[KeyVal],
    locality: NetLocality,
) -> Result<BackendSpec, ConfigError> {
    let s = Section { name: format!("[backend] #{index}"), kvs };
    s.check_keys(&[
        "mode", "k", "m", "chunk_bytes", "replicas", "pgs", "object_bytes", "min_io_bytes", "name",
    ])?;
    let mode_key = s.require("mode", |v| Ok(v.to_string()))?;
    let reject = |key: &str| -> Result<(), ConfigError> {
        match s.get(key) {
            Some(kv) => Err(s.value_err(kv, format!("not valid for mode {mode_key}"))),
            None => Ok(()),
        }
    };
    let (mode, default_pgs) = match mode_key.as_str() {
        "rs" => {
            reject("replicas")?;
            let k = s.require("k", |v| parse_u32(v).map(|x| x as usize))?;
            let m = s.require("m", |v| parse_u32(v).map(|x| x as usize))?;
            let chunk = s.parse("chunk_bytes", 4096, |v| parse_bytes(v).map(|x| x as usize))?;
            let params = CodeParams::new(k, m, chunk).map_err(|e| ConfigError::Value {
                origin: s.name.clone(),
                reason: e.to_string(),
            })?;
            (Mode::Erasure { params }, 256)
        }
        "replication" => {
            for key in ["k", "m", "chunk_bytes"] {
                reject(key)?;
            }
            let replicas = s.parse("replicas", 3, parse_u32)?;
            (Mode::Replication { replicas }, 512)
        }
        other => {
            let kv = s.get("mode").expect("mode required above");
            return Err(s.value_err(kv, format!("unknown mode {other:?}, expected rs or replication")));
        }
    };
    let cfg = BackendConfig {
        mode,
        object_bytes: s.parse("object_bytes", 4 * MIB, parse_bytes)?,
        min_io_bytes: s.parse("min_io_bytes", 4096, parse_bytes)?,
        net_locality: locality,
    };
    let label = match s.get("name") {
        Some(kv) => kv.value.clone(),
        None => cfg.mode.label(),
    };
    Ok(BackendSpec { label, cfg, pg_count: s.parse("pgs", default_pgs, parse_u32)? })
}

fn resolve_workload(index: usize, kvs: &[KeyVal]) -> Result<WorkloadEntry, ConfigError> {
    let s = Section { name: format!("[workload] #{index}"), kvs };
    s.check_keys(&[
        "preset", "name", "pattern", "read_fraction", "random_fraction", "block_bytes",
        "metadata_fraction", "total_bytes", "file_bytes", "prefill", "trace",
    ])?;
    let mut spec = match s.get("preset") {
        Some(kv) => preset(&kv.value).ok_or_else(|| {
            s.value_err(kv, format!("unknown preset {:?}, expected db, vdi, eda or vda", kv.value))
        })?,
        None => WorkloadSpec {
            name: format!("workload{index}"),
            read_fraction: 0.5,
            pattern: Pattern::Random,
            blocks: BlockSizes::Fixed(4096),
            metadata_fraction: 0.0,
            total_bytes: 64 * MIB,
            file_bytes: 1024 * 1024 * MIB,
            prefill: false,
        },
    };
    if let Some(kv) = s.get("name") {
        spec.name = kv.value.clone();
    }
    spec.read_fraction = s.parse("read_fraction", spec.read_fraction, parse_f64)?;
    spec.metadata_fraction = s.parse("metadata_fraction", spec.metadata_fraction, parse_f64)?;
    spec.total_bytes = s.parse("total_bytes", spec.total_bytes, parse_bytes)?;
    spec.file_bytes = s.parse("file_bytes", spec.file_bytes, parse_bytes)?;
    spec.prefill = s.parse("prefill", spec.prefill, parse_bool)?;
    if let Some(kv) = s.get("block_bytes") {
        spec.blocks = parse_blocks(&kv.value).map_err(|reason| s.value_err(kv, reason))?;
    }
    let random_fraction = s.parse("random_fraction", f64::NAN, parse_f64)?;
    if let Some(kv) = s.get("pattern") {
        spec.pattern = match kv.value.as_str() {
            "sequential" => Pattern::Sequential,
            "random" => Pattern::Random,
            "mixed" => Pattern::Mixed {
                random_fraction: if random_fraction.is_nan() { 0.5 } else { random_fraction },
            },
            other => {
                return Err(s.value_err(
                    kv,
                    format!("unknown pattern {other:?}, expected sequential, random or mixed"),
                ))
            }
        };
    } else if !random_fraction.is_nan() {
        spec.pattern = Pattern::Mixed { random_fraction };
    }
    let trace = s.get("trace").map(|kv| PathBuf::from(&kv.value));
    if trace.is_none() {
        spec.validate().map_err(|e| ConfigError::Value {
            origin: s.name.clone(),
            reason: e.to_string(),
        })?;
    }
    Ok(WorkloadEntry { spec, trace })
}

fn resolve_run(kvs: &[KeyVal]) -> Result<RunSettings, ConfigError> {
    let s = Section { name: "[run]".into(), kvs };
    s.check_keys(&[
        "seed", "output_dir", "queue_depth", "heartbeat_s", "heartbeat_msg_bytes",
        "net_locality", "verify_payload",
    ])?;
    let heartbeat_s = s.parse("heartbeat_s", 0.0, parse_f64)?;
    if heartbeat_s < 0.0 {
        return Err(ConfigError::Value {
            origin: "[run]".into(),
            reason: format!("heartbeat_s {heartbeat_s} must not be negative"),
        });
    }
    let queue_depth = s.parse("queue_depth", 256, parse_u64)?;
    if queue_depth == 0 {
        return Err(ConfigError::Value {
            origin: "[run]".into(),
            reason: "queue_depth must be positive".into(),
        });
    }
    Ok(RunSettings {
        seed: s.parse("seed", 42, parse_u64)?,
        output_dir: PathBuf::from(
            s.parse("output_dir", "results".to_string(), |v| Ok(v.to_string()))?,
        ),
        queue_depth,
        heartbeat_s,
        heartbeat_msg_bytes: s.parse("heartbeat_msg_bytes", DEFAULT_HEARTBEAT_MSG_BYTES, parse_bytes)?,
        net_locality: s.parse("net_locality", NetLocality::Osd, |v| match v {
            "osd" => Ok(NetLocality::Osd),
            "node" => Ok(NetLocality::Node),
            other => Err(format!("unknown net_locality {other:?}, expected osd or node")),
        })?,
        verify_payload: s.parse("verify_payload", false, parse_bool)?,
    })
}

fn resolve_failure(kvs: &[KeyVal]) -> Result<FailureSpec, ConfigError> {
    let s = Section { name: "[failure]".into(), kvs };
    s.check_keys(&["osd", "fail_after", "repair_after"])?;
    let osds = s.require("osd", |v| {
        v.split(',')
            .map(|part| part.trim().parse::<u32>().map_err(|_| format!("bad osd id {part:?}")))
            .collect::<Result<Vec<u32>, String>>()
    })?;
    if osds.is_empty() {
        return Err(ConfigError::Value {
            origin: "[failure]".into(),
            reason: "osd list is empty".into(),
        });
    }
    let fail_after = s.parse("fail_after", 0, parse_u64)?;
    let repair_after = match s.get("repair_after") {
        None => None,
        Some(kv) => Some(parse_u64(&kv.value).map_err(|r| s.value_err(kv, r))?),
    };
    if let Some(r) = repair_after {
        if r < fail_after {
            return Err(ConfigError::Value {
                origin: "[failure]".into(),
                reason: format!("repair_after {r} precedes fail_after {fail_after}"),
            });
        }
    }
    Ok(FailureSpec { osds, fail_after, repair_after })
}

/// Resolve and validate the full configuration.
pub fn resolve(cfg: &FileConfig) -> Result<RunConfig, ConfigError> {
    let cluster = resolve_cluster(&cfg.cluster)?;
    let run = resolve_run(&cfg.run)?;
    if cfg.backends.is_empty() {
        return Err(ConfigError::Missing("at least one [backend] section is required".into()));
    }
    if cfg.workloads.is_empty() {
        return Err(ConfigError::Missing("at least one [workload] section is required".into()));
    }
    let backends = cfg
        .backends
        .iter()
        .enumerate()
        .map(|(i, kvs)| resolve_backend(i, kvs, run.net_locality))
        .collect::<Result<Vec<_>, _>>()?;
    let workloads = cfg
        .workloads
        .iter()
        .enumerate()
        .map(|(i, kvs)| resolve_workload(i, kvs))
        .collect::<Result<Vec<_>, _>>()?;
    let failure = cfg.failure.as_deref().map(resolve_failure).transpose()?;
    let total_osds = cluster.nodes as u64 * cluster.osds_per_node as u64;
    if let Some(f) = &failure {
        for osd in &f.osds {
            if u64::from(*osd) >= total_osds {
                return Err(ConfigError::Value {
                    origin: "[failure]".into(),
                    reason: format!("osd {osd} outside the cluster of {total_osds}"),
                });
            }
        }
    }
    for b in &backends {
        if b.cfg.mode.placement_width() as u64 > total_osds {
            return Err(ConfigError::Value {
                origin: format!("[backend] {}", b.label),
                reason: format!(
                    "placement width {} exceeds the {total_osds} OSDs in the cluster",
                    b.cfg.mode.placement_width()
                ),
            });
        }
        b.cfg.validate().map_err(|e| ConfigError::Value {
            origin: format!("[backend] {}", b.label),
            reason: e.to_string(),
        })?;
    }
    Ok(RunConfig { cluster, backends, workloads, run, failure })
}

/// Render every resolved setting, including the arithmetic constants the
/// simulation depends on, as a reference for reproducing a run. The output
/// is deterministic: no timestamps, no paths beyond what the config named.
pub fn manifest(cfg: &RunConfig) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "resolved simulator configuration");
    let _ = writeln!(out);
    let _ = writeln!(out, "[field]");
    let _ = writeln!(out, "reduction_polynomial = {:#x}", gf256::REDUCTION_POLY);
    let _ = writeln!(out, "generator = {}", gf256::GENERATOR);
    let _ = writeln!(out);
    let _ = writeln!(out, "[cluster]");
    let _ = writeln!(out, "nodes = {}", cfg.cluster.nodes);
    let _ = writeln!(out, "osds_per_node = {}", cfg.cluster.osds_per_node);
    let _ = writeln!(out, "total_osds = {}", cfg.cluster.nodes * cfg.cluster.osds_per_node);
    let _ = writeln!(out, "pg_meta = {}", cfg.cluster.pg_meta);
    let _ = writeln!(out, "placement_seed = {}", cfg.cluster.placement_seed);
    for (i, b) in cfg.backends.iter().enumerate() {
        let _ = writeln!(out);
        let _ = writeln!(out, "[backend.{i}]");
        let _ = writeln!(out, "label = {}", b.label);
        match &b.cfg.mode {
            Mode::Erasure { params } => {
                let _ = writeln!(out, "mode = rs");
                let _ = writeln!(out, "k = {}", params.k);
                let _ = writeln!(out, "m = {}", params.m);
                let _ = writeln!(out, "chunk_bytes = {}", params.chunk_bytes);
                let _ = writeln!(out, "stripe_width_bytes = {}", params.stripe_width_bytes());
            }
            Mode::Replication { replicas } => {
                let _ = writeln!(out, "mode = replication");
                let _ = writeln!(out, "replicas = {replicas}");
            }
        }
        let _ = writeln!(out, "pgs = {}", b.pg_count);
        let _ = writeln!(out, "object_bytes = {}", b.cfg.object_bytes);
        let _ = writeln!(out, "min_io_bytes = {}", b.cfg.min_io_bytes);
    }
    for (i, w) in cfg.workloads.iter().enumerate() {
        let _ = writeln!(out);
        let _ = writeln!(out, "[workload.{i}]");
        let _ = writeln!(out, "name = {}", w.spec.name);
        if let Some(trace) = &w.trace {
            let _ = writeln!(out, "trace = {}", trace.display());
            continue;
        }
        let _ = writeln!(out, "pattern = {}", w.spec.pattern.label());
        if let Pattern::Mixed { random_fraction } = w.spec.pattern {
            let _ = writeln!(out, "random_fraction = {random_fraction}");
        }
        let _ = writeln!(out, "read_fraction = {}", w.spec.read_fraction);
        match &w.spec.blocks {
            BlockSizes::Fixed(b) => {
                let _ = writeln!(out, "block_bytes = {b}");
            }
            BlockSizes::Weighted(pairs) => {
                let rendered: Vec<String> =
                    pairs.iter().map(|(b, w)| format!("{b}:{w}")).collect();
                let _ = writeln!(out, "block_bytes = {}", rendered.join(","));
            }
        }
        let _ = writeln!(out, "metadata_fraction = {}", w.spec.metadata_fraction);
        let _ = writeln!(out, "total_bytes = {}", w.spec.total_bytes);
        let _ = writeln!(out, "file_bytes = {}", w.spec.file_bytes);
        let _ = writeln!(out, "prefill = {}", w.spec.prefill);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[run]");
    let _ = writeln!(out, "seed = {}", cfg.run.seed);
    let _ = writeln!(out, "output_dir = {}", cfg.run.output_dir.display());
    let _ = writeln!(out, "queue_depth = {}", cfg.run.queue_depth);
    let _ = writeln!(out, "heartbeat_s = {}", cfg.run.heartbeat_s);
    let _ = writeln!(out, "heartbeat_msg_bytes = {}", cfg.run.heartbeat_msg_bytes);
    let _ = writeln!(
        out,
        "net_locality = {}",
        match cfg.run.net_locality {
            NetLocality::Osd => "osd",
            NetLocality::Node => "node",
        }
    );
    let _ = writeln!(out, "verify_payload = {}", cfg.run.verify_payload);
    if let Some(f) = &cfg.failure {
        let _ = writeln!(out);
        let _ = writeln!(out, "[failure]");
        let rendered: Vec<String> = f.osds.iter().map(|o| o.to_string()).collect();
        let _ = writeln!(out, "osd = {}", rendered.join(","));
        let _ = writeln!(out, "fail_after = {}", f.fail_after);
        if let Some(r) = f.repair_after {
            let _ = writeln!(out, "repair_after = {r}");
        }
    }
    out
}

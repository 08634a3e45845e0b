//! The experiment harness: runs every configured backend against every
//! workload, accounts the phases separately, and writes the report files.
//!
//! Each backend x workload cell simulates on a fresh cluster. Workload
//! events are generated once per workload and replayed identically against
//! every backend, so rows are comparable. Prefill and repair traffic are
//! reported in the summary but kept out of the measured workload rows.
//!
//! Output files (all written atomically):
//! - `results.csv`: one row per backend x workload
//! - `<backend label>.csv`: that backend's rows, for the compare verb
//! - `manifest.txt`: resolved configuration, byte-stable across runs
//! - `summary.txt`: backend-vs-backend ratios, prefill, repair, heartbeat

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::backend::{heartbeat_traffic, Backend, BackendError, IoEffects, Mode};
use crate::config::{
    manifest, BackendSpec, ClusterSettings, ConfigError, FailureSpec, RunConfig, RunSettings,
    WorkloadEntry,
};
use crate::metrics::{
    read_report, write_atomic, write_report, Counters, MetricsError, ReportRow,
};
use crate::placement::OsdId;
use crate::workload::{generate, parse_trace, WorkloadError, WorkloadEvent};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Workload(WorkloadError),
    Usage(String),
    Backend(BackendError),
    Metrics(MetricsError),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Workload(e) => write!(f, "{e}"),
            RunError::Usage(reason) => write!(f, "{reason}"),
            RunError::Backend(e) => write!(f, "{e}"),
            RunError::Metrics(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> RunError {
        RunError::Config(e)
    }
}

impl From<WorkloadError> for RunError {
    fn from(e: WorkloadError) -> RunError {
        RunError::Workload(e)
    }
}

impl From<BackendError> for RunError {
    fn from(e: BackendError) -> RunError {
        RunError::Backend(e)
    }
}

impl From<MetricsError> for RunError {
    fn from(e: MetricsError) -> RunError {
        RunError::Metrics(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> RunError {
        RunError::Io(e)
    }
}

impl RunError {
    /// Process exit code: 0 success, 2 configuration or usage, 3 data
    /// loss, 4 I/O, 1 internal inconsistency.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Workload(_) | RunError::Usage(_) => 2,
            RunError::Io(_) | RunError::Metrics(MetricsError::Io(_)) => 4,
            RunError::Metrics(MetricsError::Format { .. }) => 2,
            RunError::Backend(e) => match e {
                BackendError::DataLoss { .. } => 3,
                BackendError::VerifyMismatch { .. } | BackendError::Codec(_) => 1,
                _ => 2,
            },
        }
    }
}

/// Repair traffic of one failed OSD, reported beside the workload rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSummary {
    pub backend: String,
    pub workload: String,
    pub osd: u32,
    pub storage_read_bytes: u64,
    pub storage_write_bytes: u64,
    pub private_net_bytes: u64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<ReportRow>,
    pub repairs: Vec<RepairSummary>,
    pub summary: String,
    pub results_csv: PathBuf,
}

struct CellOutcome {
    measured: Counters,
    prefill: Counters,
    repairs: Vec<RepairSummary>,
    heartbeat_bytes: u64,
}

/// Execute the full backend x workload grid and write the report files.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    fs::create_dir_all(&cfg.run.output_dir)?;
    let mut event_sets: Vec<Vec<WorkloadEvent>> = Vec::new();
    for (i, w) in cfg.workloads.iter().enumerate() {
        let events = match &w.trace {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    RunError::Io(std::io::Error::new(
                        e.kind(),
                        format!("trace {}: {e}", path.display()),
                    ))
                })?;
                parse_trace(&text)?
            }
            // offset the seed per workload, keeping it equal across backends
            None => generate(&w.spec, cfg.run.seed.wrapping_add(i as u64))?,
        };
        event_sets.push(events);
    }

    let mut rows = Vec::new();
    let mut repairs = Vec::new();
    let mut prefill_notes: Vec<(String, String, Counters)> = Vec::new();
    let mut per_backend: BTreeMap<String, Vec<ReportRow>> = BTreeMap::new();
    let mut heartbeat_bytes = 0u64;
    for b in &cfg.backends {
        for (wi, w) in cfg.workloads.iter().enumerate() {
            let cell = run_cell(b, w, &event_sets[wi], &cfg.run, &cfg.cluster, cfg.failure.as_ref())?;
            let row = make_row(b, w, &cell.measured);
            per_backend.entry(b.label.clone()).or_default().push(row.clone());
            rows.push(row);
            repairs.extend(cell.repairs);
            if cell.prefill.requests > 0 {
                prefill_notes.push((b.label.clone(), w.spec.name.clone(), cell.prefill));
            }
            heartbeat_bytes = cell.heartbeat_bytes;
        }
    }

    let results_csv = cfg.run.output_dir.join("results.csv");
    write_report(&results_csv, &rows)?;
    for (label, backend_rows) in &per_backend {
        write_report(&cfg.run.output_dir.join(format!("{label}.csv")), backend_rows)?;
    }
    write_atomic(&cfg.run.output_dir.join("manifest.txt"), manifest(cfg).as_bytes())?;
    let summary = render_summary(cfg, &rows, &repairs, &prefill_notes, heartbeat_bytes);
    write_atomic(&cfg.run.output_dir.join("summary.txt"), summary.as_bytes())?;
    Ok(RunOutcome { rows, repairs, summary, results_csv })
}

/// Run one backend against one workload on a fresh cluster.
fn run_cell(
    bspec: &BackendSpec,
    wentry: &WorkloadEntry,
    events: &[WorkloadEvent],
    settings: &RunSettings,
    cluster: &ClusterSettings,
    failure: Option<&FailureSpec>,
) -> Result<CellOutcome, RunError> {
    let map = cluster.map_for(bspec.pg_count)?;
    let mut backend = Backend::new(bspec.cfg.clone(), map, 0)?;
    if settings.verify_payload {
        backend.enable_verification(wentry.spec.file_bytes)?;
    }

    let mut prefill = Counters::default();
    if wentry.spec.prefill {
        prefill_file(&mut backend, wentry.spec.file_bytes, &mut prefill)?;
    }

    // failure scenarios model device loss and erasure-coded recovery;
    // replication cells run them too, minus the repair (which is an
    // erasure-only operation here), unless no failure is configured
    let failure = failure.filter(|_| matches!(bspec.cfg.mode, Mode::Erasure { .. }));
    let mut measured = Counters::default();
    let mut repairs = Vec::new();
    let mut data_requests = 0u64;
    let mut failed_pending = failure.map(|f| f.fail_after);
    let mut repair_pending = failure.and_then(|f| f.repair_after);
    backend.begin_batch();
    for event in events {
        if let (Some(f), Some(at)) = (failure, failed_pending) {
            if data_requests >= at {
                for osd in &f.osds {
                    backend.fail_osd(OsdId(*osd))?;
                }
                failed_pending = None;
            }
        }
        if let (Some(f), Some(at)) = (failure, repair_pending) {
            if data_requests >= at {
                repairs.extend(repair_all(&mut backend, f, bspec, wentry)?);
                repair_pending = None;
            }
        }
        if event.metadata {
            measured.metadata_requests += 1;
            continue;
        }
        if data_requests > 0 && data_requests % settings.queue_depth == 0 {
            backend.begin_batch();
        }
        let effects = backend.execute(&event.request)?;
        measured.absorb(&event.request, &effects);
        data_requests += 1;
    }
    // thresholds beyond the stream still run, so a configured failure
    // scenario always completes
    if let Some(f) = failure {
        if failed_pending.is_some() {
            for osd in &f.osds {
                backend.fail_osd(OsdId(*osd))?;
            }
        }
        if repair_pending.is_some() {
            repairs.extend(repair_all(&mut backend, f, bspec, wentry)?);
        }
    }

    let heartbeat_bytes = if settings.heartbeat_s > 0.0 {
        let hb = heartbeat_traffic(backend.cluster(), settings.heartbeat_s, settings.heartbeat_msg_bytes);
        measured.private_net_bytes += hb;
        hb
    } else {
        0
    };
    Ok(CellOutcome { measured, prefill, repairs, heartbeat_bytes })
}

fn repair_all(
    backend: &mut Backend,
    failure: &FailureSpec,
    bspec: &BackendSpec,
    wentry: &WorkloadEntry,
) -> Result<Vec<RepairSummary>, RunError> {
    let mut out = Vec::new();
    for osd in &failure.osds {
        let fx: IoEffects = backend.repair_osd(OsdId(*osd))?;
        out.push(RepairSummary {
            backend: bspec.label.clone(),
            workload: wentry.spec.name.clone(),
            osd: *osd,
            storage_read_bytes: fx.storage_read_bytes(),
            storage_write_bytes: fx.storage_write_bytes(),
            private_net_bytes: fx.private_net_bytes,
        });
    }
    Ok(out)
}

/// Write the whole file once, in object-sized sequential requests.
fn prefill_file(
    backend: &mut Backend,
    file_bytes: u64,
    counters: &mut Counters,
) -> Result<(), RunError> {
    let step = backend.config().object_bytes;
    let mut offset = 0u64;
    backend.begin_batch();
    while offset < file_bytes {
        let length = step.min(file_bytes - offset);
        let req = crate::backend::IoRequest {
            op: crate::backend::IoOp::Write,
            file_offset: offset,
            length,
        };
        let fx = backend.execute(&req)?;
        counters.absorb(&req, &fx);
        offset += length;
    }
    Ok(())
}

fn make_row(b: &BackendSpec, w: &WorkloadEntry, c: &Counters) -> ReportRow {
    let (k, m, r) = match &b.cfg.mode {
        Mode::Erasure { params } => (Some(params.k as u32), Some(params.m as u32), None),
        Mode::Replication { replicas } => (None, None, Some(*replicas)),
    };
    let (pattern, block_bytes) = match &w.trace {
        Some(_) => ("trace".to_string(), "trace".to_string()),
        None => (w.spec.pattern.label().to_string(), w.spec.blocks.label()),
    };
    ReportRow {
        backend: b.label.clone(),
        k,
        m,
        r,
        workload: w.spec.name.clone(),
        pattern,
        block_bytes,
        client_read_bytes: c.client_read_bytes,
        client_write_bytes: c.client_write_bytes,
        storage_read_bytes: c.storage_read_bytes,
        storage_write_bytes: c.storage_write_bytes,
        private_net_bytes: c.private_net_bytes,
        public_net_bytes: c.public_net_bytes,
        read_amp: c.read_amp(),
        write_amp: c.write_amp(),
        rel_net_traffic: c.rel_net_traffic(),
        pg_conflicts: c.pg_conflicts,
    }
}

fn ratio_text(num: Option<f64>, den: Option<f64>) -> String {
    match (num, den) {
        (Some(n), Some(d)) if d != 0.0 => format!("{n:.6}/{d:.6} = {:.6}", n / d),
        (Some(n), Some(d)) => format!("{n:.6}/{d:.6} = n/a"),
        _ => "n/a".to_string(),
    }
}

fn render_summary(
    cfg: &RunConfig,
    rows: &[ReportRow],
    repairs: &[RepairSummary],
    prefill_notes: &[(String, String, Counters)],
    heartbeat_bytes: u64,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run summary");
    for w in &cfg.workloads {
        let wrows: Vec<&ReportRow> =
            rows.iter().filter(|r| r.workload == w.spec.name).collect();
        if wrows.is_empty() {
            continue;
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "workload {} (pattern {}, block {})",
            w.spec.name, wrows[0].pattern, wrows[0].block_bytes
        );
        for r in &wrows {
            let _ = writeln!(
                out,
                "  {}: read_amp {}, write_amp {}, rel_net_traffic {}, pg_conflicts {}",
                r.backend,
                r.read_amp.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
                r.write_amp.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
                r.rel_net_traffic.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
                r.pg_conflicts,
            );
        }
        for i in 0..wrows.len() {
            for j in (i + 1)..wrows.len() {
                let (a, b) = (wrows[i], wrows[j]);
                let _ = writeln!(
                    out,
                    "  {} over {}: read_amp {}, write_amp {}, rel_net_traffic {}",
                    a.backend,
                    b.backend,
                    ratio_text(a.read_amp, b.read_amp),
                    ratio_text(a.write_amp, b.write_amp),
                    ratio_text(a.rel_net_traffic, b.rel_net_traffic),
                );
            }
        }
    }
    if !prefill_notes.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "prefill (excluded from the rows above)");
        for (backend, workload, c) in prefill_notes {
            let _ = writeln!(
                out,
                "  {backend} workload {workload}: client {} B, storage writes {} B, storage reads {} B",
                c.client_write_bytes, c.storage_write_bytes, c.storage_read_bytes,
            );
        }
    }
    if !repairs.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "repair (reported separately from workload rows)");
        for r in repairs {
            let _ = writeln!(
                out,
                "  {} workload {} osd.{}: storage reads {} B, storage writes {} B, private {} B",
                r.backend, r.workload, r.osd, r.storage_read_bytes, r.storage_write_bytes,
                r.private_net_bytes,
            );
        }
        let _ = writeln!(
            out,
            "  note: rebuilding a failed device reads k survivor chunks per lost chunk. \
             For RS(10,4) with 256 MiB chunks that is 10 x 256 MiB = 2.5 GiB per lost chunk; \
             operators often quote about 2 GB for this shape, a known discrepancy against \
             the k x B floor accounted here."
        );
    }
    if heartbeat_bytes > 0 {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "heartbeat: {heartbeat_bytes} B over {} s included in each row's private traffic",
            cfg.run.heartbeat_s,
        );
    }
    if cfg.run.verify_payload {
        let _ = writeln!(out);
        let _ = writeln!(out, "payload verification: enabled, every read checked against the write history");
    }
    out
}

/// Replace the configured workloads with a single trace file.
pub fn with_trace(cfg: &RunConfig, trace: &Path, name: Option<String>) -> RunConfig {
    let mut cfg = cfg.clone();
    let stem = trace
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string());
    let mut spec = match cfg.workloads.first() {
        Some(w) => w.spec.clone(),
        None => crate::workload::WorkloadSpec {
            name: stem.clone(),
            read_fraction: 0.5,
            pattern: crate::workload::Pattern::Random,
            blocks: crate::workload::BlockSizes::Fixed(4096),
            metadata_fraction: 0.0,
            total_bytes: 1,
            file_bytes: 1,
            prefill: false,
        },
    };
    spec.name = name.unwrap_or(stem);
    cfg.workloads = vec![WorkloadEntry { spec, trace: Some(trace.to_path_buf()) }];
    cfg
}

/// Compare two or more results files row by row.
///
/// Rows align on (workload, pattern, block_bytes); each later file's
/// ratios divide by the first file's. Files with several rows for the same
/// key (a multi-backend results.csv) are rejected; pass the per-backend
/// files the run wrote instead.
pub fn compare(paths: &[PathBuf]) -> Result<String, RunError> {
    if paths.len() < 2 {
        return Err(RunError::Usage(
            "compare needs at least two results files (a baseline and one or more to compare)"
                .to_string(),
        ));
    }
    let mut tables = Vec::new();
    for path in paths {
        let rows = read_report(path)?;
        let mut keyed: BTreeMap<(String, String, String), ReportRow> = BTreeMap::new();
        let mut order = Vec::new();
        for row in rows {
            let key = (row.workload.clone(), row.pattern.clone(), row.block_bytes.clone());
            if keyed.insert(key.clone(), row).is_some() {
                return Err(RunError::Usage(format!(
                    "{}: several rows for workload {} pattern {} block {}; \
                     compare the per-backend files the run writes",
                    path.display(),
                    key.0,
                    key.1,
                    key.2
                )));
            }
            order.push(key);
        }
        tables.push((path, keyed, order));
    }
    let mut out = String::new();
    let (base_path, base, base_order) = &tables[0];
    let _ = writeln!(out, "baseline: {}", base_path.display());
    for key in base_order {
        let a = &base[key];
        let _ = writeln!(out);
        let _ = writeln!(out, "workload {} (pattern {}, block {})", key.0, key.1, key.2);
        let _ = writeln!(
            out,
            "  {}: read_amp {}, write_amp {}, rel_net_traffic {}",
            base_path.display(),
            a.read_amp.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
            a.write_amp.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
            a.rel_net_traffic.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into()),
        );
        for (path, keyed, _) in &tables[1..] {
            match keyed.get(key) {
                None => {
                    let _ = writeln!(out, "  {}: no matching row", path.display());
                }
                Some(b) => {
                    let _ = writeln!(
                        out,
                        "  {}: read_amp {}, write_amp {}, rel_net_traffic {}",
                        path.display(),
                        ratio_text(b.read_amp, a.read_amp),
                        ratio_text(b.write_amp, a.write_amp),
                        ratio_text(b.rel_net_traffic, a.rel_net_traffic),
                    );
                }
            }
        }
    }
    for (path, _, order) in &tables[1..] {
        let extra: Vec<&(String, String, String)> =
            order.iter().filter(|k| !base.contains_key(*k)).collect();
        if !extra.is_empty() {
            let _ = writeln!(out);
            for k in extra {
                let _ = writeln!(
                    out,
                    "note: {} has workload {} pattern {} block {} absent from the baseline",
                    path.display(),
                    k.0,
                    k.1,
                    k.2
                );
            }
        }
    }
    Ok(out)
}

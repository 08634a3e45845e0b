//! The PG backend: byte-exact accounting of client I/O against a replicated
//! or erasure-coded object store.
//!
//! Every operation returns [`IoEffects`]: which OSD read or wrote how many
//! bytes, how much payload crossed the private (replication/recovery)
//! network and the public (client) network. Costs follow the data path of a
//! Ceph-style cluster: the primary OSD of a placement group fronts client
//! traffic, fan-out to peer OSDs rides the private network, and chunks or
//! replicas resident on the primary itself move for free.
//!
//! With payload verification enabled the backend additionally stores real
//! chunk bytes, runs every read back through concatenation or decode, and
//! compares against a flat mirror of the client file, so the whole stack
//! from request splitting down to field arithmetic is checked end to end.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::codec::{Chunk, CodecError, CodeParams, RsCodec};
use crate::placement::{
    object_of, osds_of, pg_of, splitmix64, ClusterMap, ObjectId, OsdId, PgId, PlacementError,
};

/// Default heartbeat payload. Every OSD pings every other OSD once per
/// 6-second interval; 3043 bytes per message puts a 24-OSD cluster at the
/// observed 280 KB/s idle floor (24 * 23 * 3043 / 6 = 279,956 B/s).
pub const DEFAULT_HEARTBEAT_MSG_BYTES: u64 = 3043;

/// Heartbeat interval in seconds.
pub const HEARTBEAT_INTERVAL_S: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoOp {
    Read,
    Write,
}

/// One client request against the simulated file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IoRequest {
    pub op: IoOp,
    pub file_offset: u64,
    pub length: u64,
}

/// Which distance counts as a network hop for private traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetLocality {
    /// Payload between distinct OSDs is network traffic even on one node.
    Osd,
    /// Only payload between distinct nodes is network traffic.
    Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    Replication { replicas: u32 },
    Erasure { params: CodeParams },
}

impl Mode {
    /// OSDs each object occupies: r replicas or k+m chunks.
    pub fn placement_width(&self) -> usize {
        match self {
            Mode::Replication { replicas } => *replicas as usize,
            Mode::Erasure { params } => params.total_chunks(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Mode::Replication { replicas } => format!("rep{replicas}"),
            Mode::Erasure { params } => format!("rs{}_{}", params.k, params.m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendConfig {
    pub mode: Mode,
    /// Fixed object size the client file is split into.
    pub object_bytes: u64,
    /// Minimum unit of device I/O; replication rounds extents to it.
    pub min_io_bytes: u64,
    pub net_locality: NetLocality,
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.object_bytes == 0 {
            return Err(BackendError::InvalidConfig("object_bytes must be positive".into()));
        }
        if self.min_io_bytes == 0 {
            return Err(BackendError::InvalidConfig("min_io_bytes must be positive".into()));
        }
        match &self.mode {
            Mode::Replication { replicas } => {
                if *replicas == 0 {
                    return Err(BackendError::InvalidConfig("replicas must be >= 1".into()));
                }
            }
            Mode::Erasure { params } => {
                if params.chunk_bytes as u64 % self.min_io_bytes != 0 {
                    return Err(BackendError::InvalidConfig(format!(
                        "chunk_bytes {} is not a multiple of min_io_bytes {}",
                        params.chunk_bytes, self.min_io_bytes
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Byte movements caused by one operation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IoEffects {
    /// Bytes read and written per OSD.
    pub per_osd: BTreeMap<OsdId, OsdTraffic>,
    /// Payload between OSDs: fan-out copies, peer chunks, recovery pulls.
    pub private_net_bytes: u64,
    /// Payload between client and primary.
    pub public_net_bytes: u64,
    /// The request hit a PG already busy in the current batch.
    pub pg_conflict: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OsdTraffic {
    pub read_bytes: u64,
    pub write_bytes: u64,
}

impl IoEffects {
    pub fn read(&mut self, osd: OsdId, bytes: u64) {
        self.per_osd.entry(osd).or_default().read_bytes += bytes;
    }

    pub fn write(&mut self, osd: OsdId, bytes: u64) {
        self.per_osd.entry(osd).or_default().write_bytes += bytes;
    }

    pub fn storage_read_bytes(&self) -> u64 {
        self.per_osd.values().map(|t| t.read_bytes).sum()
    }

    pub fn storage_write_bytes(&self) -> u64 {
        self.per_osd.values().map(|t| t.write_bytes).sum()
    }

    pub fn merge(&mut self, other: &IoEffects) {
        for (osd, t) in &other.per_osd {
            let e = self.per_osd.entry(*osd).or_default();
            e.read_bytes += t.read_bytes;
            e.write_bytes += t.write_bytes;
        }
        self.private_net_bytes += other.private_net_bytes;
        self.public_net_bytes += other.public_net_bytes;
        self.pg_conflict |= other.pg_conflict;
    }
}

#[derive(Debug)]
pub enum BackendError {
    InvalidConfig(String),
    BadRequest(&'static str),
    /// Fewer healthy chunks than the k the code needs.
    DataLoss { pg: u32, needed: usize, available: usize },
    AlreadyInitialized { object: u64 },
    /// Repair applies to erasure-coded pools only.
    NotErasure,
    NotFailed { osd: u32 },
    AlreadyRepaired { osd: u32 },
    UnknownOsd { osd: u32 },
    /// No healthy spare OSD left to take over a repaired shard.
    NoReplacement,
    /// Payload verification found stored data diverging from the write
    /// history. Always a bug in the store model or the codec.
    VerifyMismatch { object: u64, detail: String },
    Placement(PlacementError),
    Codec(CodecError),
}

impl std::fmt::Display for BackendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendError::InvalidConfig(reason) => write!(f, "invalid backend config: {reason}"),
            BackendError::BadRequest(reason) => write!(f, "bad request: {reason}"),
            BackendError::DataLoss { pg, needed, available } => write!(
                f,
                "data loss in pg {pg}: {available} healthy chunks, {needed} needed"
            ),
            BackendError::AlreadyInitialized { object } => {
                write!(f, "object {object} initialized twice")
            }
            BackendError::NotErasure => write!(f, "operation defined for erasure-coded pools only"),
            BackendError::NotFailed { osd } => write!(f, "osd.{osd} is not failed"),
            BackendError::AlreadyRepaired { osd } => write!(f, "osd.{osd} was already repaired"),
            BackendError::UnknownOsd { osd } => write!(f, "osd.{osd} is not in the cluster"),
            BackendError::NoReplacement => write!(f, "no healthy OSD available as repair target"),
            BackendError::VerifyMismatch { object, detail } => {
                write!(f, "payload verification failed on object {object}: {detail}")
            }
            BackendError::Placement(e) => write!(f, "{e}"),
            BackendError::Codec(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BackendError {}

impl From<PlacementError> for BackendError {
    fn from(e: PlacementError) -> BackendError {
        BackendError::Placement(e)
    }
}

impl From<CodecError> for BackendError {
    fn from(e: CodecError) -> BackendError {
        BackendError::Codec(e)
    }
}

/// Per-object bookkeeping. Chunk payloads are kept only under payload
/// verification; accounting runs on geometry alone.
#[derive(Debug, Clone)]
struct ObjectState {
    /// Stripes the object occupies (erasure) including tail padding.
    stripes: u64,
    /// stripes * (k+m) chunk payloads, stripe-major (verification only).
    shards: Option<Vec<Vec<u8>>>,
    /// r copies of the object payload (replication verification only).
    replicas: Option<Vec<Vec<u8>>>,
}

struct VerifyState {
    file_bytes: u64,
    /// Ground truth: the client file as the write history left it.
    mirror: Vec<u8>,
}

pub struct Backend {
    cfg: BackendConfig,
    cluster: ClusterMap,
    pool: u32,
    codec: Option<RsCodec>,
    objects: BTreeMap<u64, ObjectState>,
    /// Materialized OSD list per PG; repair rewrites entries in place.
    pg_lists: BTreeMap<u32, Vec<OsdId>>,
    failed: BTreeSet<OsdId>,
    repaired: BTreeSet<OsdId>,
    batch_pgs: HashSet<u32>,
    verify: Option<VerifyState>,
    write_seq: u64,
}

impl Backend {
    pub fn new(cfg: BackendConfig, cluster: ClusterMap, pool: u32) -> Result<Backend, BackendError> {
        cfg.validate()?;
        let width = cfg.mode.placement_width();
        let total = cluster.total_osds() as usize;
        if width > total {
            return Err(BackendError::Placement(PlacementError::WidthExceedsCluster {
                width,
                total,
            }));
        }
        let codec = match &cfg.mode {
            Mode::Erasure { params } => Some(RsCodec::new(*params)?),
            Mode::Replication { .. } => None,
        };
        Ok(Backend {
            cfg,
            cluster,
            pool,
            codec,
            objects: BTreeMap::new(),
            pg_lists: BTreeMap::new(),
            failed: BTreeSet::new(),
            repaired: BTreeSet::new(),
            batch_pgs: HashSet::new(),
            verify: None,
            write_seq: 0,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    pub fn cluster(&self) -> &ClusterMap {
        &self.cluster
    }

    /// Keep payloads and check every read against the write history.
    /// Intended for small geometries; the mirror is materialized in memory.
    pub fn enable_verification(&mut self, file_bytes: u64) -> Result<(), BackendError> {
        const LIMIT: u64 = 1 << 30;
        if file_bytes > LIMIT {
            return Err(BackendError::InvalidConfig(format!(
                "payload verification mirrors the file in memory; {file_bytes} bytes exceeds the {LIMIT} limit"
            )));
        }
        if !self.objects.is_empty() {
            return Err(BackendError::InvalidConfig(
                "enable verification before issuing I/O".into(),
            ));
        }
        self.verify = Some(VerifyState { file_bytes, mirror: vec![0; file_bytes as usize] });
        Ok(())
    }

    /// Start a new queue-depth batch for PG conflict tracking.
    pub fn begin_batch(&mut self) {
        self.batch_pgs.clear();
    }

    pub fn fail_osd(&mut self, osd: OsdId) -> Result<(), BackendError> {
        if osd.0 >= self.cluster.total_osds() {
            return Err(BackendError::UnknownOsd { osd: osd.0 });
        }
        self.failed.insert(osd);
        Ok(())
    }

    pub fn failed_osds(&self) -> &BTreeSet<OsdId> {
        &self.failed
    }

    /// Route a request through the mode-appropriate path.
    pub fn execute(&mut self, req: &IoRequest) -> Result<IoEffects, BackendError> {
        match (req.op, &self.cfg.mode) {
            (IoOp::Read, Mode::Replication { .. }) => self.repl_read(req),
            (IoOp::Write, Mode::Replication { .. }) => self.repl_write(req),
            (IoOp::Write, Mode::Erasure { .. }) => self.ec_write(req),
            (IoOp::Read, Mode::Erasure { .. }) => {
                if self.failed.is_empty() {
                    self.ec_read(req)
                } else {
                    self.ec_degraded_read(req)
                }
            }
        }
    }

    // ------------------------------------------------------------------
    // replication

    /// Write under r-way replication.
    ///
    /// The extent rounds to the minimum I/O unit. Every replica writes the
    /// rounded extent; when the request covers only part of a unit each
    /// replica first reads the untouched remainder to rebuild the full unit.
    /// The primary forwards the rounded extent to the other r-1 replicas
    /// over the private network.
    pub fn repl_write(&mut self, req: &IoRequest) -> Result<IoEffects, BackendError> {
        let replicas = self.replicas()?;
        self.check_request(req)?;
        self.write_seq += 1;
        let seq = self.write_seq;
        let mut effects = IoEffects::default();
        let mut pgs = Vec::new();
        if self.verify.is_some() {
            self.mirror_write(req, seq);
        }
        for (obj, intra, len) in self.segments(req) {
            let (pg, list) = self.object_osds_inner(obj)?;
            pgs.push(pg.0);
            let primary = list[0];
            let (lo, hi) = self.round_extent(intra, len);
            let rounded = hi - lo;
            let remainder = rounded - len;
            for osd in &list {
                effects.write(*osd, rounded);
                if remainder > 0 {
                    effects.read(*osd, remainder);
                }
                if *osd != primary && !self.is_local(*osd, primary) {
                    effects.private_net_bytes += rounded;
                }
            }
            effects.public_net_bytes += len;
            if self.verify.is_some() {
                self.verify_repl_write(obj, intra, len, seq, replicas)?;
            }
        }
        effects.pg_conflict = self.note_pgs(&pgs);
        Ok(effects)
    }

    /// Read under replication: the primary serves the extent rounded to the
    /// minimum I/O unit; no payload crosses the private network.
    pub fn repl_read(&mut self, req: &IoRequest) -> Result<IoEffects, BackendError> {
        let replicas = self.replicas()?;
        self.check_request(req)?;
        let mut effects = IoEffects::default();
        let mut pgs = Vec::new();
        for (obj, intra, len) in self.segments(req) {
            let (pg, list) = self.object_osds_inner(obj)?;
            pgs.push(pg.0);
            let (lo, hi) = self.round_extent(intra, len);
            effects.read(list[0], hi - lo);
            effects.public_net_bytes += len;
            if self.verify.is_some() {
                self.verify_repl_read(obj, intra, len, replicas)?;
            }
        }
        effects.pg_conflict = self.note_pgs(&pgs);
        Ok(effects)
    }

    // ------------------------------------------------------------------
    // erasure coding

    /// Create an object's stripes: data and coding chunks for the padded
    /// object size land on their OSDs. A no-op under replication.
    pub fn initialize_object(&mut self, object_index: u64) -> Result<IoEffects, BackendError> {
        if self.codec.is_none() {
            return Ok(IoEffects::default());
        }
        if self.objects.contains_key(&object_index) {
            return Err(BackendError::AlreadyInitialized { object: object_index });
        }
        let mut effects = IoEffects::default();
        self.init_object_inner(object_index, &mut effects)?;
        Ok(effects)
    }

    fn init_object_inner(
        &mut self,
        object_index: u64,
        effects: &mut IoEffects,
    ) -> Result<(), BackendError> {
        let params = *self.codec.as_ref().expect("erasure mode").params();
        let (total, cb) = (params.total_chunks(), params.chunk_bytes as u64);
        let stripes = self.cfg.object_bytes.div_ceil(params.stripe_width_bytes());
        let (_, list) = self.object_osds_inner(object_index)?;
        let primary = self.acting_primary(&list);
        for osd in list.iter().take(total) {
            if self.failed.contains(osd) {
                continue;
            }
            effects.write(*osd, stripes * cb);
            if !self.is_local(*osd, primary) {
                effects.private_net_bytes += stripes * cb;
            }
        }
        let shards = self.verify.as_ref().map(|_| {
            vec![vec![0u8; params.chunk_bytes]; (stripes as usize) * total]
        });
        self.objects.insert(object_index, ObjectState { stripes, shards, replicas: None });
        Ok(())
    }

    /// Write to an erasure-coded object.
    ///
    /// Uninitialized objects are created first, at full cost. Whole-stripe
    /// spans write k+m chunks with no reads. Partial stripes read the data
    /// chunks the write does not fully cover, merge, re-encode, and write
    /// the touched data chunks plus all m coding chunks.
    pub fn ec_write(&mut self, req: &IoRequest) -> Result<IoEffects, BackendError> {
        let params = *self.codec_params()?;
        self.check_request(req)?;
        self.write_seq += 1;
        let seq = self.write_seq;
        let mut effects = IoEffects::default();
        let mut pgs = Vec::new();
        if self.verify.is_some() {
            self.mirror_write(req, seq);
        }
        for (obj, intra, len) in self.segments(req) {
            if !self.objects.contains_key(&obj) {
                self.init_object_inner(obj, &mut effects)?;
            }
            let (pg, list) = self.object_osds_inner(obj)?;
            pgs.push(pg.0);
            self.ec_write_segment(&params, pg, &list, obj, intra, len, &mut effects)?;
            effects.public_net_bytes += len;
        }
        effects.pg_conflict = self.note_pgs(&pgs);
        Ok(effects)
    }

    #[allow(clippy::too_many_arguments)]
    fn ec_write_segment(
        &mut self,
        params: &CodeParams,
        pg: PgId,
        list: &[OsdId],
        obj: u64,
        intra: u64,
        len: u64,
        effects: &mut IoEffects,
    ) -> Result<(), BackendError> {
        let (k, cb) = (params.k, params.chunk_bytes as u64);
        let width = params.stripe_width_bytes();
        let primary = self.acting_primary(list);
        let end = intra + len;
        let first = intra / width;
        let last = (end - 1) / width;
        let mut stripe = first;
        while stripe <= last {
            let s_start = stripe * width;
            let cov_a = intra.max(s_start) - s_start;
            let cov_b = end.min(s_start + width) - s_start;
            let full = cov_a == 0 && cov_b == width;
            if full && self.verify.is_none() {
                // only the first and last stripes can be partial, so the
                // full stripes form one run; charge it in a single step
                let last_full = if end == (last + 1) * width { last } else { last - 1 };
                let count = last_full - stripe + 1;
                self.charge_full_stripes(params, list, primary, count, effects);
                stripe = last_full + 1;
                continue;
            }
            if full {
                self.charge_full_stripes(params, list, primary, 1, effects);
            } else {
                // chunks the write touches and the subset it fully covers
                let fully_covered = |j: u64| cov_a <= j * cb && (j + 1) * cb <= cov_b;
                let t0 = cov_a / cb;
                let t1 = (cov_b - 1) / cb;
                let needed: Vec<usize> =
                    (0..k as u64).filter(|&j| !fully_covered(j)).map(|j| j as usize).collect();
                let unhealthy_needed =
                    needed.iter().any(|&j| self.failed.contains(&list[j]));
                if unhealthy_needed {
                    // degraded read-modify-write: pull any k healthy chunks
                    // and decode instead of reading peers directly
                    let selection = self.healthy_selection(params, pg, list)?;
                    for &i in &selection {
                        effects.read(list[i], cb);
                        if !self.is_local(list[i], primary) {
                            effects.private_net_bytes += cb;
                        }
                    }
                } else {
                    for &j in &needed {
                        effects.read(list[j], cb);
                        if !self.is_local(list[j], primary) {
                            effects.private_net_bytes += cb;
                        }
                    }
                }
                // touched data chunks plus every coding chunk get rewritten
                let mut targets: Vec<usize> = (t0..=t1).map(|j| j as usize).collect();
                targets.extend(k..params.total_chunks());
                for j in targets {
                    if self.failed.contains(&list[j]) {
                        continue;
                    }
                    effects.write(list[j], cb);
                    if !self.is_local(list[j], primary) {
                        effects.private_net_bytes += cb;
                    }
                }
            }
            if self.verify.is_some() {
                self.verify_ec_write_stripe(params, obj, stripe)?;
            }
            stripe += 1;
        }
        Ok(())
    }

    fn charge_full_stripes(
        &self,
        params: &CodeParams,
        list: &[OsdId],
        primary: OsdId,
        count: u64,
        effects: &mut IoEffects,
    ) {
        let cb = params.chunk_bytes as u64;
        for osd in list.iter().take(params.total_chunks()) {
            if self.failed.contains(osd) {
                continue;
            }
            effects.write(*osd, count * cb);
            if !self.is_local(*osd, primary) {
                effects.private_net_bytes += count * cb;
            }
        }
    }

    /// Read from a healthy erasure-coded object: every stripe the request
    /// touches is rebuilt from all k data chunks, so small reads cost a full
    /// stripe of device reads.
    pub fn ec_read(&mut self, req: &IoRequest) -> Result<IoEffects, BackendError> {
        let params = *self.codec_params()?;
        self.check_request(req)?;
        let mut effects = IoEffects::default();
        let mut pgs = Vec::new();
        for (obj, intra, len) in self.segments(req) {
            let (pg, list) = self.object_osds_inner(obj)?;
            pgs.push(pg.0);
            let primary = list[0];
            let cb = params.chunk_bytes as u64;
            let width = params.stripe_width_bytes();
            let stripes = span(intra, len, width);
            for j in 0..params.k {
                effects.read(list[j], stripes * cb);
                if !self.is_local(list[j], primary) {
                    effects.private_net_bytes += stripes * cb;
                }
            }
            effects.public_net_bytes += len;
            if self.verify.is_some() {
                let selection: Vec<usize> = (0..params.k).collect();
                self.verify_ec_read(&params, obj, intra, len, &selection)?;
            }
        }
        effects.pg_conflict = self.note_pgs(&pgs);
        Ok(effects)
    }

    /// Read with failed OSDs present: each touched stripe pulls the first k
    /// healthy chunks in index order and reconstructs through decode when
    /// coding chunks are among them.
    pub fn ec_degraded_read(&mut self, req: &IoRequest) -> Result<IoEffects, BackendError> {
        let params = *self.codec_params()?;
        self.check_request(req)?;
        let mut effects = IoEffects::default();
        let mut pgs = Vec::new();
        for (obj, intra, len) in self.segments(req) {
            let (pg, list) = self.object_osds_inner(obj)?;
            pgs.push(pg.0);
            let primary = self.acting_primary(&list);
            let selection = self.healthy_selection(&params, pg, &list)?;
            let cb = params.chunk_bytes as u64;
            let stripes = span(intra, len, params.stripe_width_bytes());
            for &i in &selection {
                effects.read(list[i], stripes * cb);
                if !self.is_local(list[i], primary) {
                    effects.private_net_bytes += stripes * cb;
                }
            }
            effects.public_net_bytes += len;
            if self.verify.is_some() {
                self.verify_ec_read(&params, obj, intra, len, &selection)?;
            }
        }
        effects.pg_conflict = self.note_pgs(&pgs);
        Ok(effects)
    }

    /// Reconstruct everything a failed OSD held.
    ///
    /// For each chunk resident on the failed OSD the repair pulls k healthy
    /// chunks of its stripe over the private network, decodes, and writes
    /// the rebuilt chunk to a healthy spare, which takes over the shard slot
    /// in the PG's OSD list.
    pub fn repair_osd(&mut self, osd: OsdId) -> Result<IoEffects, BackendError> {
        let params = *self.codec_params().map_err(|_| BackendError::NotErasure)?;
        if osd.0 >= self.cluster.total_osds() {
            return Err(BackendError::UnknownOsd { osd: osd.0 });
        }
        if self.repaired.contains(&osd) {
            return Err(BackendError::AlreadyRepaired { osd: osd.0 });
        }
        if !self.failed.contains(&osd) {
            return Err(BackendError::NotFailed { osd: osd.0 });
        }
        let (k, cb) = (params.k, params.chunk_bytes as u64);
        // group initialized objects by PG so each PG rebuilds onto one spare
        let mut by_pg: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for &obj in self.objects.keys() {
            let pg = pg_of(ObjectId { pool: self.pool, index: obj }, self.cluster.pg_count_data);
            by_pg.entry(pg.0).or_default().push(obj);
        }
        let mut effects = IoEffects::default();
        for (pg, objs) in by_pg {
            let (_, list) = self.object_osds_inner(objs[0])?;
            let Some(slot) = list.iter().position(|o| *o == osd) else {
                continue;
            };
            let selection = self.healthy_selection(&params, PgId(pg), &list)?;
            let spare = self.pick_replacement(&list)?;
            let total_stripes: u64 = objs.iter().map(|o| self.objects[o].stripes).sum();
            for &i in &selection {
                effects.read(list[i], total_stripes * cb);
            }
            effects.private_net_bytes += total_stripes * cb * k as u64;
            effects.write(spare, total_stripes * cb);
            if self.verify.is_some() {
                for &obj in &objs {
                    self.verify_repair(&params, obj, slot, &selection)?;
                }
            }
            let entry = self.pg_lists.get_mut(&pg).expect("list materialized above");
            entry[slot] = spare;
        }
        self.repaired.insert(osd);
        Ok(effects)
    }

    // ------------------------------------------------------------------
    // shared plumbing

    fn replicas(&self) -> Result<u32, BackendError> {
        match &self.cfg.mode {
            Mode::Replication { replicas } => Ok(*replicas),
            Mode::Erasure { .. } => Err(BackendError::BadRequest(
                "replication path invoked on an erasure-coded pool",
            )),
        }
    }

    fn codec_params(&self) -> Result<&CodeParams, BackendError> {
        self.codec
            .as_ref()
            .map(|c| c.params())
            .ok_or(BackendError::BadRequest("erasure path invoked on a replicated pool"))
    }

    fn check_request(&self, req: &IoRequest) -> Result<(), BackendError> {
        if req.length == 0 {
            return Err(BackendError::BadRequest("zero-length request"));
        }
        if let Some(v) = &self.verify {
            if req.file_offset + req.length > v.file_bytes {
                return Err(BackendError::BadRequest("request beyond the verified file size"));
            }
        }
        Ok(())
    }

    fn segments(&self, req: &IoRequest) -> Vec<(u64, u64, u64)> {
        let ob = self.cfg.object_bytes;
        let mut out = Vec::new();
        let mut off = req.file_offset;
        let mut remaining = req.length;
        while remaining > 0 {
            let (obj, intra) = object_of(self.pool, off, ob);
            let take = remaining.min(ob - intra);
            out.push((obj.index, intra, take));
            off += take;
            remaining -= take;
        }
        out
    }

    fn round_extent(&self, off: u64, len: u64) -> (u64, u64) {
        let u = self.cfg.min_io_bytes;
        let lo = off - off % u;
        let hi = (off + len).div_ceil(u) * u;
        (lo, hi)
    }

    /// PG and (possibly repair-patched) OSD list for an object.
    fn object_osds_inner(&mut self, obj: u64) -> Result<(PgId, Vec<OsdId>), BackendError> {
        let pg = pg_of(ObjectId { pool: self.pool, index: obj }, self.cluster.pg_count_data);
        if let Some(list) = self.pg_lists.get(&pg.0) {
            return Ok((pg, list.clone()));
        }
        let width = self.cfg.mode.placement_width();
        let mut list = osds_of(&self.cluster, pg, width)?;
        // PGs first touched after a repair never see the repaired OSD
        for j in 0..list.len() {
            if self.repaired.contains(&list[j]) {
                list[j] = self.pick_replacement(&list)?;
            }
        }
        self.pg_lists.insert(pg.0, list.clone());
        Ok((pg, list))
    }

    /// Public view of an object's PG OSD list (primary first).
    pub fn object_osds(&mut self, object_index: u64) -> Result<Vec<OsdId>, BackendError> {
        Ok(self.object_osds_inner(object_index)?.1)
    }

    fn acting_primary(&self, list: &[OsdId]) -> OsdId {
        list.iter().find(|o| !self.failed.contains(o)).copied().unwrap_or(list[0])
    }

    fn is_local(&self, osd: OsdId, primary: OsdId) -> bool {
        match self.cfg.net_locality {
            NetLocality::Osd => osd == primary,
            NetLocality::Node => self.cluster.node_of(osd) == self.cluster.node_of(primary),
        }
    }

    /// First k chunk slots whose OSDs are healthy, in index order.
    fn healthy_selection(
        &self,
        params: &CodeParams,
        pg: PgId,
        list: &[OsdId],
    ) -> Result<Vec<usize>, BackendError> {
        let selection: Vec<usize> = (0..params.total_chunks())
            .filter(|&i| !self.failed.contains(&list[i]))
            .take(params.k)
            .collect();
        if selection.len() < params.k {
            return Err(BackendError::DataLoss {
                pg: pg.0,
                needed: params.k,
                available: selection.len(),
            });
        }
        Ok(selection)
    }

    /// Healthy OSD outside the list, preferring the least-loaded node.
    fn pick_replacement(&self, list: &[OsdId]) -> Result<OsdId, BackendError> {
        let mut best: Option<(usize, u32)> = None;
        for id in 0..self.cluster.total_osds() {
            let osd = OsdId(id);
            if self.failed.contains(&osd) || list.contains(&osd) {
                continue;
            }
            let node = self.cluster.node_of(osd);
            let load = list.iter().filter(|o| self.cluster.node_of(**o) == node).count();
            if best.map_or(true, |(bl, _)| load < bl) {
                best = Some((load, id));
            }
        }
        best.map(|(_, id)| OsdId(id)).ok_or(BackendError::NoReplacement)
    }

    fn note_pgs(&mut self, pgs: &[u32]) -> bool {
        let mut conflict = false;
        for pg in pgs {
            conflict |= !self.batch_pgs.insert(*pg);
        }
        conflict
    }

    // ------------------------------------------------------------------
    // payload verification

    fn pattern_byte(seq: u64, abs: u64) -> u8 {
        splitmix64(seq).to_le_bytes()[(abs % 8) as usize]
    }

    fn mirror_write(&mut self, req: &IoRequest, seq: u64) {
        let v = self.verify.as_mut().expect("verification enabled");
        for i in 0..req.length {
            let abs = req.file_offset + i;
            v.mirror[abs as usize] = Self::pattern_byte(seq, abs);
        }
    }

    fn verify_repl_write(
        &mut self,
        obj: u64,
        intra: u64,
        len: u64,
        seq: u64,
        replicas: u32,
    ) -> Result<(), BackendError> {
        let ob = self.cfg.object_bytes as usize;
        let state = self.objects.entry(obj).or_insert_with(|| ObjectState {
            stripes: 0,
            shards: None,
            replicas: Some(vec![vec![0u8; ob]; replicas as usize]),
        });
        let bufs = state.replicas.as_mut().expect("replication verify state");
        let base = obj * self.cfg.object_bytes;
        for copy in bufs.iter_mut() {
            for i in 0..len {
                let abs = base + intra + i;
                copy[(intra + i) as usize] = Self::pattern_byte(seq, abs);
            }
        }
        Ok(())
    }

    fn verify_repl_read(
        &mut self,
        obj: u64,
        intra: u64,
        len: u64,
        _replicas: u32,
    ) -> Result<(), BackendError> {
        let v = self.verify.as_ref().expect("verification enabled");
        let base = (obj * self.cfg.object_bytes) as usize;
        let want = &v.mirror[base + intra as usize..base + (intra + len) as usize];
        let Some(state) = self.objects.get(&obj) else {
            // never written: all replicas implicitly zero
            if want.iter().any(|&b| b != 0) {
                return Err(BackendError::VerifyMismatch {
                    object: obj,
                    detail: "mirror nonzero for unwritten object".into(),
                });
            }
            return Ok(());
        };
        for (i, copy) in state.replicas.as_ref().expect("replication verify state").iter().enumerate() {
            let got = &copy[intra as usize..(intra + len) as usize];
            if got != want {
                return Err(BackendError::VerifyMismatch {
                    object: obj,
                    detail: format!("replica {i} diverges from write history"),
                });
            }
        }
        Ok(())
    }

    /// Merge the mirror's bytes into a stripe's data chunks and re-encode
    /// its coding chunks. The stored chunks always carry the logical stripe
    /// content; writes whose target OSD is failed still update the logical
    /// state and are healed later by repair.
    fn verify_ec_write_stripe(
        &mut self,
        params: &CodeParams,
        obj: u64,
        stripe: u64,
    ) -> Result<(), BackendError> {
        let (k, total, cb) = (params.k, params.total_chunks(), params.chunk_bytes);
        let width = params.stripe_width_bytes();
        let file_bytes = self.verify.as_ref().expect("verification enabled").file_bytes;
        let base = obj * self.cfg.object_bytes + stripe * width;
        {
            let v = self.verify.as_ref().expect("verification enabled");
            let state = self.objects.get_mut(&obj).expect("initialized before write");
            let shards = state.shards.as_mut().expect("erasure verify state");
            for j in 0..k {
                let chunk_base = base + (j * cb) as u64;
                let dst = &mut shards[stripe as usize * total + j];
                for b in 0..cb {
                    let abs = chunk_base + b as u64;
                    // stripes may pad past both object and file end
                    dst[b] = if abs < file_bytes && (stripe * width + (j * cb + b) as u64) < self.cfg.object_bytes {
                        v.mirror[abs as usize]
                    } else {
                        0
                    };
                }
            }
        }
        let codec = self.codec.as_ref().expect("erasure mode");
        let state = self.objects.get(&obj).expect("initialized");
        let shards = state.shards.as_ref().expect("erasure verify state");
        let data: Vec<Chunk> = (0..k)
            .map(|j| Chunk::new(j, shards[stripe as usize * total + j].clone()))
            .collect();
        let coding = codec.encode(&data)?;
        let state = self.objects.get_mut(&obj).expect("initialized");
        let shards = state.shards.as_mut().expect("erasure verify state");
        for c in coding {
            shards[stripe as usize * total + c.index] = c.payload;
        }
        Ok(())
    }

    /// Rebuild the requested range from stored chunks along the same path
    /// the read effects were charged for, and compare with the mirror.
    fn verify_ec_read(
        &mut self,
        params: &CodeParams,
        obj: u64,
        intra: u64,
        len: u64,
        selection: &[usize],
    ) -> Result<(), BackendError> {
        let (k, total, cb) = (params.k, params.total_chunks(), params.chunk_bytes);
        let width = params.stripe_width_bytes();
        let v = self.verify.as_ref().expect("verification enabled");
        let base = obj * self.cfg.object_bytes;
        let want = &v.mirror[(base + intra) as usize..(base + intra + len) as usize];
        let codec = self.codec.as_ref().expect("erasure mode");
        let state = self.objects.get(&obj);
        let first = intra / width;
        let last = (intra + len - 1) / width;
        let mut got = Vec::with_capacity(len as usize);
        for stripe in first..=last {
            let payload = match state.and_then(|st| st.shards.as_ref()) {
                None => vec![0u8; k * cb],
                Some(shards) => {
                    let chunk = |i: usize| {
                        Chunk::new(i, shards[stripe as usize * total + i].clone())
                    };
                    if selection.iter().all(|&i| i < k) {
                        let data: Vec<Chunk> = (0..k).map(chunk).collect();
                        codec.concatenate(&data)?
                    } else {
                        let available: Vec<Chunk> =
                            selection.iter().map(|&i| chunk(i)).collect();
                        let decoded = codec.decode(&available)?;
                        codec.concatenate(&decoded)?
                    }
                }
            };
            let s_start = stripe * width;
            let a = intra.max(s_start) - s_start;
            let b = (intra + len).min(s_start + width) - s_start;
            got.extend_from_slice(&payload[a as usize..b as usize]);
        }
        if got != want {
            return Err(BackendError::VerifyMismatch {
                object: obj,
                detail: format!("read of [{intra}, {}) diverges from write history", intra + len),
            });
        }
        Ok(())
    }

    /// Decode the lost shard from the healthy selection and check it equals
    /// the logical content the store tracked all along.
    fn verify_repair(
        &mut self,
        params: &CodeParams,
        obj: u64,
        slot: usize,
        selection: &[usize],
    ) -> Result<(), BackendError> {
        let total = params.total_chunks();
        let codec = self.codec.as_ref().expect("erasure mode");
        let state = self.objects.get(&obj).expect("initialized objects only");
        let shards = state.shards.as_ref().expect("erasure verify state");
        for stripe in 0..state.stripes as usize {
            let available: Vec<Chunk> = selection
                .iter()
                .map(|&i| Chunk::new(i, shards[stripe * total + i].clone()))
                .collect();
            let decoded = codec.decode(&available)?;
            let rebuilt: Vec<u8> = if slot < params.k {
                decoded[slot].payload.clone()
            } else {
                // coding shard: re-encode the decoded data
                codec.encode(&decoded)?.swap_remove(slot - params.k).payload
            };
            if rebuilt != shards[stripe * total + slot] {
                return Err(BackendError::VerifyMismatch {
                    object: obj,
                    detail: format!("repair of shard {slot} stripe {stripe} diverges"),
                });
            }
        }
        Ok(())
    }

    /// Read bytes back through the verification store without charging any
    /// I/O; available only with verification enabled.
    pub fn read_back(&mut self, file_offset: u64, length: u64) -> Result<Vec<u8>, BackendError> {
        let v = self.verify.as_ref().ok_or(BackendError::BadRequest(
            "read_back requires payload verification",
        ))?;
        if file_offset + length > v.file_bytes {
            return Err(BackendError::BadRequest("request beyond the verified file size"));
        }
        Ok(v.mirror[file_offset as usize..(file_offset + length) as usize].to_vec())
    }
}

/// Number of stripes a byte range [off, off+len) touches.
fn span(off: u64, len: u64, width: u64) -> u64 {
    debug_assert!(len > 0);
    (off + len - 1) / width - off / width + 1
}

/// Total heartbeat bytes a cluster exchanges over a time window: every OSD
/// pings every other OSD each interval.
pub fn heartbeat_traffic(map: &ClusterMap, duration_s: f64, msg_bytes: u64) -> u64 {
    let n = map.total_osds() as f64;
    (n * (n - 1.0) * msg_bytes as f64 * (duration_s / HEARTBEAT_INTERVAL_S)).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodeParams;
    use crate::placement::ClusterMap;

    const KIB: u64 = 1024;
    const MIB: u64 = 1024 * 1024;

    fn cluster() -> ClusterMap {
        ClusterMap::new(4, 6, 256, 128, 7).unwrap()
    }

    fn repl_backend(replicas: u32) -> Backend {
        let cfg = BackendConfig {
            mode: Mode::Replication { replicas },
            object_bytes: 4 * MIB,
            min_io_bytes: 4096,
            net_locality: NetLocality::Osd,
        };
        Backend::new(cfg, ClusterMap::new(4, 6, 512, 128, 7).unwrap(), 1).unwrap()
    }

    fn ec_backend(k: usize, m: usize) -> Backend {
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(k, m, 4096).unwrap() },
            object_bytes: 4 * MIB,
            min_io_bytes: 4096,
            net_locality: NetLocality::Osd,
        };
        Backend::new(cfg, cluster(), 2).unwrap()
    }

    fn write(off: u64, len: u64) -> IoRequest {
        IoRequest { op: IoOp::Write, file_offset: off, length: len }
    }

    fn read(off: u64, len: u64) -> IoRequest {
        IoRequest { op: IoOp::Read, file_offset: off, length: len }
    }

    #[test]
    fn repl_write_aligned_fans_out_r_copies() {
        let mut b = repl_backend(3);
        let fx = b.repl_write(&write(0, 8 * KIB)).unwrap();
        assert_eq!(fx.storage_write_bytes(), 24 * KIB);
        assert_eq!(fx.storage_read_bytes(), 0);
        assert_eq!(fx.private_net_bytes, 16 * KIB);
        assert_eq!(fx.public_net_bytes, 8 * KIB);
        assert_eq!(fx.per_osd.len(), 3, "three distinct replicas");
    }

    #[test]
    fn repl_write_subunit_reads_remainder_on_every_replica() {
        let mut b = repl_backend(3);
        let fx = b.repl_write(&write(0, KIB)).unwrap();
        // each replica rebuilds its 4 KiB unit from the untouched 3 KiB
        assert_eq!(fx.storage_read_bytes(), 9 * KIB);
        assert_eq!(fx.storage_write_bytes(), 12 * KIB);
        assert_eq!(fx.private_net_bytes, 2 * 4 * KIB);
    }

    #[test]
    fn repl_write_single_copy_stays_off_the_network() {
        let mut b = repl_backend(1);
        let fx = b.repl_write(&write(4096, 4096)).unwrap();
        assert_eq!(fx.private_net_bytes, 0);
        assert_eq!(fx.storage_write_bytes(), 4 * KIB);
    }

    #[test]
    fn repl_read_rounds_to_min_io() {
        let mut b = repl_backend(3);
        let fx = b.repl_read(&read(0, MIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), MIB);
        assert_eq!(fx.private_net_bytes, 0);
        assert_eq!(fx.public_net_bytes, MIB);
        assert_eq!(fx.per_osd.len(), 1, "primary serves alone");

        let fx = b.repl_read(&read(0, KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 4 * KIB);
    }

    #[test]
    fn repl_write_straddling_units_reads_both_remainders() {
        let mut b = repl_backend(2);
        // [3584, 4608) covers the tail of unit 0 and head of unit 1
        let fx = b.repl_write(&write(3584, KIB)).unwrap();
        assert_eq!(fx.storage_write_bytes(), 2 * 8 * KIB);
        assert_eq!(fx.storage_read_bytes(), 2 * 7 * KIB);
    }

    #[test]
    fn initialize_object_writes_padded_stripes() {
        let mut b = ec_backend(6, 3);
        let fx = b.initialize_object(0).unwrap();
        // ceil(4 MiB / 24 KiB) = 171 stripes of 9 chunks
        assert_eq!(fx.storage_write_bytes(), 171 * 9 * 4096);
        assert_eq!(fx.storage_write_bytes(), 6156 * KIB);
        assert_eq!(fx.storage_read_bytes(), 0);
        // 8 of 9 chunks leave the primary
        assert_eq!(fx.private_net_bytes, 171 * 8 * 4096);

        let mut b = ec_backend(4, 2);
        let fx = b.initialize_object(0).unwrap();
        assert_eq!(fx.storage_write_bytes(), 256 * 6 * 4096);
        assert_eq!(fx.storage_write_bytes(), 6 * MIB);
    }

    #[test]
    fn initialize_object_twice_is_an_error() {
        let mut b = ec_backend(6, 3);
        b.initialize_object(5).unwrap();
        assert!(matches!(
            b.initialize_object(5),
            Err(BackendError::AlreadyInitialized { object: 5 })
        ));
    }

    #[test]
    fn initialize_object_noop_under_replication() {
        let mut b = repl_backend(3);
        let fx = b.initialize_object(0).unwrap();
        assert_eq!(fx, IoEffects::default());
    }

    #[test]
    fn ec_write_full_stripe_needs_no_reads() {
        let mut b = ec_backend(6, 3);
        b.initialize_object(0).unwrap();
        let fx = b.ec_write(&write(0, 24 * KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 0);
        assert_eq!(fx.storage_write_bytes(), 36 * KIB);
        assert_eq!(fx.private_net_bytes, 8 * 4096);
        assert_eq!(fx.public_net_bytes, 24 * KIB);
    }

    #[test]
    fn ec_write_chunk_update_reads_peers_rewrites_coding() {
        let mut b = ec_backend(6, 3);
        b.initialize_object(0).unwrap();
        let fx = b.ec_write(&write(0, 4 * KIB)).unwrap();
        // 5 uncovered data chunks in, 1 data + 3 coding out
        assert_eq!(fx.storage_read_bytes(), 20 * KIB);
        assert_eq!(fx.storage_write_bytes(), 16 * KIB);
        assert_eq!(fx.private_net_bytes, 8 * 4096);
    }

    #[test]
    fn ec_write_to_pristine_object_charges_initialization() {
        let mut b = ec_backend(6, 3);
        let fx = b.ec_write(&write(0, 4 * KIB)).unwrap();
        assert_eq!(fx.storage_write_bytes(), 171 * 9 * 4096 + 16 * KIB);
        assert_eq!(fx.storage_read_bytes(), 20 * KIB);
        let amp = fx.storage_write_bytes() as f64 / (4.0 * KIB as f64);
        assert!(amp > 1000.0, "first-write amplification {amp}");
    }

    #[test]
    fn ec_write_subchunk_reads_all_data_chunks() {
        let mut b = ec_backend(6, 3);
        b.initialize_object(0).unwrap();
        // 1 KiB write fully covers no chunk: all 6 data chunks read
        let fx = b.ec_write(&write(0, KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 24 * KIB);
        assert_eq!(fx.storage_write_bytes(), 16 * KIB);
    }

    #[test]
    fn ec_write_amplification_shrinks_with_request_size() {
        let mut prev = f64::INFINITY;
        for blocks in 1..=6u64 {
            let mut b = ec_backend(6, 3);
            b.initialize_object(0).unwrap();
            let len = blocks * 4 * KIB;
            let fx = b.ec_write(&write(0, len)).unwrap();
            let amp = fx.storage_write_bytes() as f64 / len as f64;
            assert!(amp <= prev, "write amp must not grow with size");
            prev = amp;
        }
        assert_eq!(prev, 1.5, "whole-stripe write amp is (k+m)/k");
    }

    #[test]
    fn ec_read_touches_every_data_chunk_of_the_stripe() {
        let mut b = ec_backend(6, 3);
        let fx = b.ec_read(&read(0, 4 * KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 24 * KIB);
        assert_eq!(fx.private_net_bytes, 5 * 4096);
        assert_eq!(fx.public_net_bytes, 4 * KIB);
    }

    #[test]
    fn ec_read_of_exact_stripe_is_flat() {
        let mut b = ec_backend(6, 3);
        let fx = b.ec_read(&read(0, 24 * KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 24 * KIB);
    }

    #[test]
    fn ec_read_straddling_two_stripes_reads_both() {
        let mut b = ec_backend(6, 3);
        let fx = b.ec_read(&read(0, 32 * KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 48 * KIB);
    }

    #[test]
    fn ec_read_span_matches_brute_force_enumeration() {
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(2, 1, 64).unwrap() },
            object_bytes: 500,
            min_io_bytes: 64,
            net_locality: NetLocality::Osd,
        };
        let mut b = Backend::new(cfg, cluster(), 0).unwrap();
        let width = 128u64;
        let file = 1000u64;
        for off in 0..file {
            for len in (1..=(file - off)).step_by(13) {
                let fx = b.ec_read(&read(off, len)).unwrap();
                // independent span count per object segment
                let mut expect = 0u64;
                let mut o = off;
                let mut rem = len;
                while rem > 0 {
                    let intra = o % 500;
                    let take = rem.min(500 - intra);
                    let first = intra / width;
                    let last = (intra + take - 1) / width;
                    expect += (last - first + 1) * width;
                    o += take;
                    rem -= take;
                }
                assert_eq!(fx.storage_read_bytes(), expect, "off {off} len {len}");
            }
        }
    }

    #[test]
    fn ec_requests_split_at_object_boundaries() {
        let mut b = ec_backend(6, 3);
        // last 16 KiB of object 0 sit in stripe 170; next 8 KiB open object 1
        let fx = b.ec_read(&read(4 * MIB - 16 * KIB, 24 * KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 2 * 24 * KIB);
    }

    #[test]
    fn degraded_read_without_failures_equals_ec_read() {
        let mut healthy = ec_backend(6, 3);
        let mut degraded = ec_backend(6, 3);
        let a = healthy.ec_read(&read(8192, 4 * KIB)).unwrap();
        let d = degraded.ec_degraded_read(&read(8192, 4 * KIB)).unwrap();
        assert_eq!(a, d);
    }

    #[test]
    fn degraded_read_pulls_coding_chunk_for_failed_data_osd() {
        let mut b = ec_backend(6, 3);
        let list = b.object_osds(0).unwrap();
        b.fail_osd(list[2]).unwrap();
        let fx = b.execute(&read(0, 4 * KIB)).unwrap();
        assert_eq!(fx.storage_read_bytes(), 24 * KIB, "still k chunks");
        assert!(fx.per_osd.contains_key(&list[6]), "first coding chunk substitutes");
        assert!(!fx.per_osd.contains_key(&list[2]));
    }

    #[test]
    fn degraded_read_beyond_tolerance_is_data_loss() {
        let mut b = ec_backend(6, 3);
        let list = b.object_osds(0).unwrap();
        for osd in &list[..4] {
            b.fail_osd(*osd).unwrap();
        }
        match b.ec_degraded_read(&read(0, 4 * KIB)) {
            Err(BackendError::DataLoss { needed: 6, available: 5, .. }) => {}
            other => panic!("expected data loss, got {other:?}"),
        }
    }

    #[test]
    fn repair_of_empty_osd_reports_nothing() {
        let mut b = ec_backend(6, 3);
        b.fail_osd(OsdId(3)).unwrap();
        let fx = b.repair_osd(OsdId(3)).unwrap();
        assert_eq!(fx, IoEffects::default());
    }

    #[test]
    fn repair_reads_k_times_the_lost_bytes() {
        // RS(10,4) with 256 MiB chunks, one-stripe objects: losing one chunk
        // pulls k survivor chunks
        let chunk = 256 * MIB;
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(10, 4, chunk as usize).unwrap() },
            object_bytes: 10 * chunk,
            min_io_bytes: 4096,
            net_locality: NetLocality::Osd,
        };
        let mut b = Backend::new(cfg, cluster(), 0).unwrap();
        b.initialize_object(0).unwrap();
        let victim = b.object_osds(0).unwrap()[0];
        b.fail_osd(victim).unwrap();
        let fx = b.repair_osd(victim).unwrap();
        assert_eq!(fx.storage_read_bytes(), 10 * chunk);
        assert_eq!(fx.storage_read_bytes(), 2_684_354_560);
        assert_eq!(fx.storage_write_bytes(), chunk);
        assert_eq!(fx.private_net_bytes, 10 * chunk);
    }

    #[test]
    fn repair_covers_every_resident_chunk() {
        // a 1000-stripe object: the failed OSD holds 1000 chunks of 4 KiB
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(6, 3, 4096).unwrap() },
            object_bytes: 1000 * 24576,
            min_io_bytes: 4096,
            net_locality: NetLocality::Osd,
        };
        let mut b = Backend::new(cfg, cluster(), 0).unwrap();
        b.initialize_object(0).unwrap();
        let victim = b.object_osds(0).unwrap()[4];
        b.fail_osd(victim).unwrap();
        let fx = b.repair_osd(victim).unwrap();
        assert_eq!(fx.storage_read_bytes(), 24_576_000);
        assert_eq!(fx.storage_write_bytes(), 4_096_000);
    }

    #[test]
    fn repair_replaces_the_shard_slot() {
        let mut b = ec_backend(6, 3);
        b.initialize_object(0).unwrap();
        let before = b.object_osds(0).unwrap();
        let victim = before[1];
        b.fail_osd(victim).unwrap();
        b.repair_osd(victim).unwrap();
        let after = b.object_osds(0).unwrap();
        assert_ne!(after[1], victim);
        assert_eq!(after.len(), before.len());
        let mut dedup = after.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), after.len(), "list stays distinct");
        // reads no longer touch the dead OSD
        let fx = b.execute(&read(0, 4 * KIB)).unwrap();
        assert!(!fx.per_osd.contains_key(&victim));
    }

    #[test]
    fn repair_demands_a_failed_erasure_osd() {
        let mut b = ec_backend(6, 3);
        assert!(matches!(b.repair_osd(OsdId(1)), Err(BackendError::NotFailed { osd: 1 })));
        b.fail_osd(OsdId(1)).unwrap();
        b.repair_osd(OsdId(1)).unwrap();
        assert!(matches!(b.repair_osd(OsdId(1)), Err(BackendError::AlreadyRepaired { osd: 1 })));
        let mut r = repl_backend(3);
        r.fail_osd(OsdId(1)).unwrap();
        assert!(matches!(r.repair_osd(OsdId(1)), Err(BackendError::NotErasure)));
    }

    #[test]
    fn node_locality_zeroes_private_traffic_on_one_node() {
        let one_node = ClusterMap::new(1, 9, 64, 16, 3).unwrap();
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(6, 3, 4096).unwrap() },
            object_bytes: 4 * MIB,
            min_io_bytes: 4096,
            net_locality: NetLocality::Node,
        };
        let mut b = Backend::new(cfg, one_node, 0).unwrap();
        let fx = b.ec_write(&write(0, 24 * KIB)).unwrap();
        assert_eq!(fx.private_net_bytes, 0);
        let cfg_osd = BackendConfig { net_locality: NetLocality::Osd, ..b.cfg.clone() };
        let mut b2 = Backend::new(cfg_osd, one_node, 0).unwrap();
        let fx2 = b2.ec_write(&write(0, 24 * KIB)).unwrap();
        assert!(fx2.private_net_bytes > 0);
    }

    #[test]
    fn batch_tracking_flags_pg_conflicts() {
        let mut b = ec_backend(6, 3);
        b.begin_batch();
        let first = b.ec_write(&write(0, 4 * KIB)).unwrap();
        assert!(!first.pg_conflict);
        let second = b.ec_write(&write(8192, 4 * KIB)).unwrap();
        assert!(second.pg_conflict, "same object means same pg");
        b.begin_batch();
        let third = b.ec_write(&write(16384, 4 * KIB)).unwrap();
        assert!(!third.pg_conflict, "new batch forgets in-flight pgs");
    }

    #[test]
    fn zero_length_requests_are_rejected() {
        let mut b = ec_backend(6, 3);
        assert!(matches!(b.ec_read(&read(0, 0)), Err(BackendError::BadRequest(_))));
    }

    #[test]
    fn effects_merge_accumulates() {
        let mut b = ec_backend(6, 3);
        let mut total = IoEffects::default();
        let a = b.ec_read(&read(0, 4 * KIB)).unwrap();
        let c = b.ec_read(&read(0, 24 * KIB)).unwrap();
        total.merge(&a);
        total.merge(&c);
        assert_eq!(total.storage_read_bytes(), a.storage_read_bytes() + c.storage_read_bytes());
        assert_eq!(total.public_net_bytes, a.public_net_bytes + c.public_net_bytes);
    }

    #[test]
    fn heartbeat_matches_the_idle_floor() {
        let map = cluster();
        let six_s = heartbeat_traffic(&map, 6.0, DEFAULT_HEARTBEAT_MSG_BYTES);
        assert_eq!(six_s, 24 * 23 * DEFAULT_HEARTBEAT_MSG_BYTES);
        let per_s = six_s as f64 / 6.0;
        assert!((per_s - 280_000.0).abs() / 280_000.0 < 0.01, "{per_s} B/s");
        assert_eq!(heartbeat_traffic(&map, 0.0, DEFAULT_HEARTBEAT_MSG_BYTES), 0);
        let two = ClusterMap::new(1, 2, 8, 8, 0).unwrap();
        assert_eq!(heartbeat_traffic(&two, 6.0, DEFAULT_HEARTBEAT_MSG_BYTES), 2 * 3043);
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(6, 3, 4096).unwrap() },
            object_bytes: 4 * MIB,
            min_io_bytes: 4000,
            net_locality: NetLocality::Osd,
        };
        assert!(matches!(
            Backend::new(cfg, cluster(), 0),
            Err(BackendError::InvalidConfig(_))
        ));
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(20, 5, 4096).unwrap() },
            object_bytes: 4 * MIB,
            min_io_bytes: 4096,
            net_locality: NetLocality::Osd,
        };
        assert!(matches!(Backend::new(cfg, cluster(), 0), Err(BackendError::Placement(_))));
    }

    // ------------------------------------------------------------------
    // verification-mode round trips

    fn small_verified_ec() -> Backend {
        let cfg = BackendConfig {
            mode: Mode::Erasure { params: CodeParams::new(4, 2, 64).unwrap() },
            object_bytes: 1024,
            min_io_bytes: 64,
            net_locality: NetLocality::Osd,
        };
        let mut b = Backend::new(cfg, cluster(), 0).unwrap();
        b.enable_verification(8192).unwrap();
        b
    }

    #[test]
    fn verified_writes_read_back_exactly() {
        let mut b = small_verified_ec();
        b.ec_write(&write(100, 700)).unwrap();
        b.ec_write(&write(500, 100)).unwrap();
        b.ec_read(&read(0, 2048)).unwrap();
        let back = b.read_back(100, 700).unwrap();
        assert_eq!(back.len(), 700);
        assert!(back.iter().any(|&x| x != 0));
    }

    #[test]
    fn verified_degraded_read_decodes_the_same_bytes() {
        let mut b = small_verified_ec();
        b.ec_write(&write(0, 4096)).unwrap();
        let list = b.object_osds(0).unwrap();
        b.fail_osd(list[0]).unwrap();
        // acting primary moved, shard 0 must come out of decode
        b.execute(&read(0, 1024)).unwrap();
        b.execute(&write(64, 64)).unwrap();
        b.execute(&read(0, 1024)).unwrap();
    }

    #[test]
    fn verified_repair_rebuilds_dirty_shards() {
        let mut b = small_verified_ec();
        b.ec_write(&write(0, 4096)).unwrap();
        let list = b.object_osds(0).unwrap();
        b.fail_osd(list[1]).unwrap();
        // overwrite part of the failed shard while it is down
        b.execute(&write(0, 2048)).unwrap();
        b.repair_osd(list[1]).unwrap();
        b.execute(&read(0, 4096)).unwrap();
    }

    #[test]
    fn verified_replication_catches_its_own_copies() {
        let cfg = BackendConfig {
            mode: Mode::Replication { replicas: 3 },
            object_bytes: 1024,
            min_io_bytes: 64,
            net_locality: NetLocality::Osd,
        };
        let mut b = Backend::new(cfg, cluster(), 0).unwrap();
        b.enable_verification(4096).unwrap();
        b.repl_write(&write(10, 500)).unwrap();
        b.repl_read(&read(0, 1000)).unwrap();
        b.repl_write(&write(200, 100)).unwrap();
        b.repl_read(&read(100, 300)).unwrap();
    }
}

//! Deterministic model of a flash storage cluster under replication and
//! Reed-Solomon erasure coding.
//!
//! The crate simulates the write, read, repair and heartbeat byte flows of a
//! Ceph-like object store: client files split into objects, objects hash to
//! placement groups, placement groups map to OSDs spread across nodes. Every
//! operation reports exactly which bytes moved where, so I/O amplification
//! and network traffic of the two redundancy schemes can be compared without
//! standing up a cluster.

pub mod backend;
pub mod codec;
pub mod config;
pub mod experiment;
pub mod gf256;
pub mod matrix;
pub mod metrics;
pub mod placement;
pub mod selftest;
pub mod workload;

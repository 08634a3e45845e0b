//! Built-in verification suites, reachable from the CLI.
//!
//! The field checks go through [`peasant_mul`], a shift-and-reduce
//! multiplier that shares no code or tables with the lookup path in
//! [`crate::gf256`]. Keeping the second route alive makes a table-generation
//! bug unable to confirm itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{Chunk, CodeParams, RsCodec};
use crate::gf256;
use crate::matrix::GfMatrix;

/// Russian-peasant multiplication in GF(2^8): add-and-shift with modular
/// reduction by the field polynomial whenever the accumulator leaves the
/// field. Independent of the log/antilog tables by construction.
pub fn peasant_mul(a: u8, b: u8) -> u8 {
    let mut acc: u16 = 0;
    let mut a = a as u16;
    let mut b = b as u16;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        if a & 0x100 != 0 {
            a ^= crate::gf256::REDUCTION_POLY;
        }
        b >>= 1;
    }
    acc as u8
}

/// One completed suite: its name and how many checks it made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub name: &'static str,
    pub checks: u64,
}

/// First failing check, with enough context to chase it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestFailure {
    pub suite: &'static str,
    pub detail: String,
}

impl std::fmt::Display for SelftestFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "suite {}: {}", self.suite, self.detail)
    }
}

impl std::error::Error for SelftestFailure {}

const GEOMETRIES: [(usize, usize); 3] = [(4, 2), (6, 3), (10, 4)];

/// Run every verification suite, stopping at the first failure.
pub fn run_selftest() -> Result<Vec<Suite>, SelftestFailure> {
    Ok(vec![
        field_multiplication()?,
        field_inverses()?,
        generator_form()?,
        generator_survives_any_erasure()?,
        codec_round_trips()?,
    ])
}

/// Table-driven multiplication equals the shift-and-reduce oracle on all
/// 65,536 operand pairs.
fn field_multiplication() -> Result<Suite, SelftestFailure> {
    let mut checks = 0;
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            let table = gf256::mul(a, b);
            let oracle = peasant_mul(a, b);
            if table != oracle {
                return Err(SelftestFailure {
                    suite: "field-multiplication",
                    detail: format!("{a:#04x} * {b:#04x}: table {table:#04x}, oracle {oracle:#04x}"),
                });
            }
            checks += 1;
        }
    }
    Ok(Suite { name: "field-multiplication", checks })
}

/// Every nonzero element has an inverse and the product checks out on the
/// oracle path; zero has none.
fn field_inverses() -> Result<Suite, SelftestFailure> {
    let fail = |detail: String| SelftestFailure { suite: "field-inverses", detail };
    if gf256::inv(0).is_ok() {
        return Err(fail("zero reported an inverse".into()));
    }
    let mut checks = 1;
    for a in 1..=255u8 {
        let inv = gf256::inv(a).map_err(|e| fail(format!("inv({a:#04x}): {e}")))?;
        if peasant_mul(a, inv) != 1 {
            return Err(fail(format!("{a:#04x} * inv {inv:#04x} != 1 on the oracle path")));
        }
        checks += 1;
    }
    Ok(Suite { name: "field-inverses", checks })
}

/// The derived generator is systematic (identity top block) and its first
/// coding row is all ones, making coding chunk 0 a plain parity.
fn generator_form() -> Result<Suite, SelftestFailure> {
    let fail = |detail: String| SelftestFailure { suite: "generator-form", detail };
    let mut checks = 0;
    for (k, m) in GEOMETRIES {
        let codec = codec_for(k, m, "generator-form")?;
        let g = codec.generator();
        for row in 0..k {
            for col in 0..k {
                let want = u8::from(row == col);
                if g.get(row, col) != want {
                    return Err(fail(format!(
                        "rs({k},{m}) generator[{row}][{col}] = {}, expected {want}",
                        g.get(row, col)
                    )));
                }
                checks += 1;
            }
        }
        for col in 0..k {
            if g.get(k, col) != 1 {
                return Err(fail(format!("rs({k},{m}) coding row 0 column {col} is not 1")));
            }
            checks += 1;
        }
    }
    Ok(Suite { name: "generator-form", checks })
}

/// Every k-row subset of the generator inverts, and the inverse multiplies
/// back to identity: any k surviving chunks can rebuild the stripe.
fn generator_survives_any_erasure() -> Result<Suite, SelftestFailure> {
    let fail = |detail: String| SelftestFailure { suite: "generator-inversions", detail };
    let mut checks = 0;
    for (k, m) in GEOMETRIES {
        let codec = codec_for(k, m, "generator-inversions")?;
        let g = codec.generator();
        let total = k + m;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let rows: Vec<usize> = (0..total).filter(|i| mask & (1 << i) != 0).collect();
            let sub = g.select_rows(&rows);
            let inv = sub.inverted().map_err(|e| {
                fail(format!("rs({k},{m}) rows {rows:?} are singular: {e}"))
            })?;
            let product = inv.mul(&sub);
            if product != GfMatrix::identity(k) {
                return Err(fail(format!(
                    "rs({k},{m}) rows {rows:?}: inverse does not multiply back to identity"
                )));
            }
            checks += 1;
        }
    }
    Ok(Suite { name: "generator-inversions", checks })
}

/// Encode random stripes and recover them through every erasure pattern of
/// size up to m, byte for byte.
fn codec_round_trips() -> Result<Suite, SelftestFailure> {
    let fail = |detail: String| SelftestFailure { suite: "codec-round-trips", detail };
    let chunk_bytes = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    let mut checks = 0;
    for (k, m) in GEOMETRIES {
        let codec = codec_for(k, m, "codec-round-trips")?;
        let data: Vec<Chunk> = (0..k)
            .map(|i| {
                let mut payload = vec![0u8; chunk_bytes];
                rng.fill(payload.as_mut_slice());
                Chunk::new(i, payload)
            })
            .collect();
        let coding = codec
            .encode(&data)
            .map_err(|e| fail(format!("rs({k},{m}) encode: {e}")))?;
        let mut all = data.clone();
        all.extend(coding);
        let total = k + m;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize > m {
                continue;
            }
            let available: Vec<Chunk> = all
                .iter()
                .filter(|c| mask & (1 << c.index) == 0)
                .cloned()
                .collect();
            let decoded = codec
                .decode(&available)
                .map_err(|e| fail(format!("rs({k},{m}) erasures {mask:#b}: {e}")))?;
            for (got, want) in decoded.iter().zip(&data) {
                if got.payload != want.payload {
                    return Err(fail(format!(
                        "rs({k},{m}) erasures {mask:#b}: data chunk {} corrupted",
                        want.index
                    )));
                }
            }
            checks += 1;
        }
    }
    Ok(Suite { name: "codec-round-trips", checks })
}

fn codec_for(k: usize, m: usize, suite: &'static str) -> Result<RsCodec, SelftestFailure> {
    let params = CodeParams::new(k, m, 64).map_err(|e| SelftestFailure {
        suite,
        detail: format!("rs({k},{m}) params: {e}"),
    })?;
    RsCodec::new(params).map_err(|e| SelftestFailure {
        suite,
        detail: format!("rs({k},{m}) codec: {e}"),
    })
}

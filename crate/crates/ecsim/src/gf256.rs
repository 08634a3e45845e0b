//! Arithmetic over GF(2^8).
//!
//! The field is F_2[x] / (x^8 + x^4 + x^3 + x^2 + 1), reduction polynomial
//! 0x11d. Addition is XOR. Multiplication, inversion and division go through
//! log/antilog tables built from the generator element 2, whose powers cycle
//! through all 255 nonzero elements.

/// Reduction polynomial for the field, x^8 + x^4 + x^3 + x^2 + 1.
pub const REDUCTION_POLY: u16 = 0x11d;

/// Generator element whose powers enumerate the multiplicative group.
pub const GENERATOR: u8 = 2;

/// Log/antilog tables for the field.
///
/// `exp` is doubled to 512 entries so products of logs (at most 254 + 254)
/// index without a modulo reduction.
pub struct GfTables {
    log: [u8; 256],
    exp: [u8; 512],
}

impl GfTables {
    pub const fn new() -> GfTables {
        let mut log = [0u8; 256];
        let mut exp = [0u8; 512];
        let mut x: u16 = 1;
        let mut i = 0;
        while i < 255 {
            exp[i] = x as u8;
            exp[i + 255] = x as u8;
            log[x as usize] = i as u8;
            // multiply by the generator, reducing on overflow past bit 7
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= REDUCTION_POLY;
            }
            i += 1;
        }
        // pad the tail so every log-sum in [0, 509] is in range
        exp[510] = exp[255];
        exp[511] = exp[256];
        GfTables { log, exp }
    }

    /// Discrete log of a nonzero element, in [0, 254].
    #[inline]
    pub fn log(&self, a: u8) -> u8 {
        debug_assert!(a != 0, "log of zero is undefined");
        self.log[a as usize]
    }

    /// Power of the generator: antilog(e) for e in [0, 254].
    #[inline]
    pub fn antilog(&self, e: usize) -> u8 {
        self.exp[e]
    }
}

static TABLES: GfTables = GfTables::new();

/// Shared table instance.
pub fn tables() -> &'static GfTables {
    &TABLES
}

/// Error for inversion or division by zero, which has no inverse in the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivideByZero;

impl std::fmt::Display for DivideByZero {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "zero has no multiplicative inverse in GF(2^8)")
    }
}

impl std::error::Error for DivideByZero {}

/// Field addition; identical to subtraction in characteristic 2.
#[inline]
pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

/// Field multiplication via the log/antilog tables.
#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = &TABLES;
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

/// Multiplicative inverse of a nonzero element.
#[inline]
pub fn inv(a: u8) -> Result<u8, DivideByZero> {
    if a == 0 {
        return Err(DivideByZero);
    }
    let t = &TABLES;
    Ok(t.exp[255 - t.log[a as usize] as usize])
}

/// Field division a / b.
#[inline]
pub fn div(a: u8, b: u8) -> Result<u8, DivideByZero> {
    Ok(mul(a, inv(b)?))
}

/// dst[i] ^= factor * src[i], the workhorse of stripe encode/decode.
pub fn mul_slice_acc(factor: u8, src: &[u8], dst: &mut [u8]) {
    debug_assert_eq!(src.len(), dst.len());
    match factor {
        0 => {}
        1 => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= s;
            }
        }
        _ => {
            let t = &TABLES;
            let lf = t.log[factor as usize] as usize;
            for (d, s) in dst.iter_mut().zip(src) {
                if *s != 0 {
                    *d ^= t.exp[lf + t.log[*s as usize] as usize];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selftest::peasant_mul;

    #[test]
    fn add_is_xor() {
        assert_eq!(add(0x53, 0xCA), 0x99);
        assert_eq!(add(0x00, 0x00), 0x00);
        for a in 0..=255u8 {
            assert_eq!(add(a, a), 0, "element is its own additive inverse");
        }
    }

    #[test]
    fn mul_known_values() {
        // 0x80 * 2 overflows to 0x100, one reduction by the polynomial
        assert_eq!(mul(0x02, 0x80), 0x1D);
        assert_eq!(mul(0x00, 0xFF), 0x00);
        assert_eq!(mul(0x01, 0xAB), 0xAB);
    }

    #[test]
    fn mul_matches_shift_and_reduce_oracle_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(
                    mul(a, b),
                    peasant_mul(a, b),
                    "table product disagrees with oracle at ({a:#04x}, {b:#04x})"
                );
            }
        }
    }

    #[test]
    fn inv_known_values() {
        assert_eq!(inv(0x02), Ok(0x8E));
        assert_eq!(inv(0x01), Ok(0x01));
        assert_eq!(inv(0x00), Err(DivideByZero));
    }

    #[test]
    fn every_nonzero_element_has_a_working_inverse() {
        for a in 1..=255u8 {
            let ai = inv(a).unwrap();
            // check through the oracle so a shared table bug cannot self-confirm
            assert_eq!(peasant_mul(a, ai), 1, "{a:#04x} * inv != 1");
        }
    }

    #[test]
    fn div_known_values() {
        assert_eq!(div(0x1D, 0x02), Ok(0x80));
        assert_eq!(div(0xAB, 0xAB), Ok(0x01));
        assert_eq!(div(0x01, 0x00), Err(DivideByZero));
    }

    #[test]
    fn div_right_inverts_mul() {
        for a in 0..=255u8 {
            for b in 1..=255u8 {
                assert_eq!(div(mul(a, b), b), Ok(a));
            }
        }
    }

    #[test]
    fn log_antilog_tables_are_inverse_bijections() {
        let t = tables();
        for a in 1..=255u8 {
            assert!(t.log(a) <= 254);
            assert_eq!(t.antilog(t.log(a) as usize), a);
        }
        for e in 0..=254usize {
            assert_eq!(t.log(t.antilog(e)) as usize, e);
        }
    }

    #[test]
    fn generator_powers_cycle_through_all_nonzero_elements() {
        let mut seen = [false; 256];
        let mut x = 1u8;
        for _ in 0..255 {
            assert!(!seen[x as usize], "generator cycle shorter than 255");
            seen[x as usize] = true;
            x = mul(x, GENERATOR);
        }
        assert_eq!(x, 1, "generator order is not 255");
        assert!(!seen[0]);
    }
}

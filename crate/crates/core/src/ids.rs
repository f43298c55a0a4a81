//! Sortable session identifiers.

use rand::Rng;

const CROCKFORD: &[u8; 32] = b"0123456789ABCDEFGHJKMNPQRSTVWXYZ";

/// A 26-character ULID-style id: 48 bits of millisecond time followed by 80
/// random bits, Crockford base32. Ids sort by time.
pub fn ulid<R: Rng + ?Sized>(unix_ms: u64, rng: &mut R) -> String {
    let random: u128 = rng.random::<u128>() >> 48;
    let value = ((unix_ms as u128 & 0xFFFF_FFFF_FFFF) << 80) | random;
    (0..26)
        .rev()
        .map(|i| CROCKFORD[((value >> (5 * i)) & 31) as usize] as char)
        .collect()
}

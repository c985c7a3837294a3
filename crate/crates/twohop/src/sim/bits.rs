//! Minimal bit-string message representation.
//!
//! A positive integer `m` is transmitted as its shortest binary
//! representation, which always starts with a `1` bit; the single bit
//! `"0"` is reserved as the degenerate message, and two-bit `"10"`/`"11"`
//! prefixes mark the primed/double-primed branches in the unequal-budget
//! schemes. Decoding therefore rejects payloads with a leading zero.

use num_bigint::BigUint;

use super::SimError;

/// An ordered sequence of bits, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits }
    }

    /// The degenerate single-bit message `"0"`.
    pub fn zero_flag() -> Self {
        Self { bits: vec![0] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// New bit string with `prefix` bits prepended.
    pub fn with_prefix(&self, prefix: &[u8]) -> Self {
        let mut bits = prefix.to_vec();
        bits.extend_from_slice(&self.bits);
        Self::from_bits(bits)
    }

    /// Remainder after a given prefix, or `None` if it does not match.
    pub fn strip_prefix(&self, prefix: &[u8]) -> Option<Self> {
        self.bits
            .strip_prefix(prefix)
            .map(|rest| Self { bits: rest.to_vec() })
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Shortest binary representation of a positive integer.
pub fn string_encode(m: &BigUint) -> BitString {
    assert!(*m >= BigUint::from(1u8), "messages are positive integers");
    BitString::from_bits(m.to_radix_be(2))
}

/// Inverse of [`string_encode`]; rejects empty or leading-zero payloads
/// (those encodings are reserved for flags).
pub fn string_decode(b: &BitString) -> Result<BigUint, SimError> {
    if b.is_empty() || b.bits()[0] != 1 {
        return Err(SimError::InvalidPayload);
    }
    Ok(BigUint::from_radix_be(b.bits(), 2).expect("bits are binary digits"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(string_encode(&BigUint::from(1u8)).to_string(), "1");
        assert_eq!(string_encode(&BigUint::from(6u8)).to_string(), "110");
    }

    #[test]
    fn round_trip_exhaustive() {
        for m in 1u32..=4096 {
            let m = BigUint::from(m);
            assert_eq!(string_decode(&string_encode(&m)).unwrap(), m);
        }
    }

    #[test]
    fn decode_rejects_flag_like_payloads() {
        assert!(string_decode(&BitString::zero_flag()).is_err());
        assert!(string_decode(&BitString::from_bits(vec![0, 1, 1])).is_err());
        assert!(string_decode(&BitString::from_bits(vec![])).is_err());
    }

    #[test]
    fn prefix_round_trip() {
        let payload = string_encode(&BigUint::from(13u8));
        let framed = payload.with_prefix(&[1, 0]);
        assert_eq!(framed.len(), payload.len() + 2);
        assert_eq!(framed.strip_prefix(&[1, 0]).unwrap(), payload);
        assert!(framed.strip_prefix(&[1, 1]).is_none());
    }
}

//! Bit-sequence helpers shared across modules.
//!
//! Binary sequences are slices of `u8` restricted to the values 0 and 1;
//! boundaries that accept external data validate with [`validate_bits`].

use crate::error::{Error, Result};

/// One binary symbol, stored as 0 or 1.
pub type Bit = u8;

/// Checks that every symbol is 0 or 1.
pub fn validate_bits(seq: &[Bit]) -> Result<()> {
    if let Some(pos) = seq.iter().position(|&b| b > 1) {
        return Err(Error::InvalidSymbol(format!(
            "symbol {} at position {} is not binary",
            seq[pos], pos
        )));
    }
    Ok(())
}

/// Parses a string of '0'/'1' characters into a bit vector.
pub fn parse_bits(s: &str) -> Result<Vec<Bit>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidSymbol(format!(
                "character {other:?} is not a binary digit"
            ))),
        })
        .collect()
}

/// Renders a bit sequence as a '0'/'1' string.
pub fn format_bits(bits: &[Bit]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

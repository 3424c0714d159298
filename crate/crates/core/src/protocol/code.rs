//! Elias delta code for positive integers.

use super::ProtocolError;

/// Bit string exchanged between the parties.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Message { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ProtocolError::Decode(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Message::from_bits)
    }
}

impl std::fmt::Display for Message {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn floor_log2(x: u64) -> u32 {
    63 - x.leading_zeros()
}

/// `⌊log₂ i⌋ + 2⌊log₂(⌊log₂ i⌋ + 1)⌋ + 1`.
pub fn elias_delta_length(i: u64) -> usize {
    assert!(i >= 1, "Elias delta encodes positive integers");
    let n = floor_log2(i);
    (n + 2 * floor_log2(n as u64 + 1) + 1) as usize
}

pub fn elias_delta_encode(i: u64) -> Message {
    assert!(i >= 1, "Elias delta encodes positive integers");
    let n = floor_log2(i);
    let len = n as u64 + 1;
    let l = floor_log2(len);
    let mut bits = Vec::with_capacity(elias_delta_length(i));
    bits.extend(std::iter::repeat_n(false, l as usize));
    bits.extend((0..=l).rev().map(|b| (len >> b) & 1 == 1));
    bits.extend((0..n).rev().map(|b| (i >> b) & 1 == 1));
    Message::from_bits(bits)
}

/// Decodes one integer that must span the whole message.
pub fn elias_delta_decode(msg: &Message) -> Result<u64, ProtocolError> {
    let bits = msg.bits();
    let zeros = bits.iter().take_while(|&&b| !b).count();
    if zeros > 6 {
        return Err(ProtocolError::Decode("length prefix exceeds 64-bit integers".into()));
    }
    let read = |from: usize, count: usize| -> Result<u64, ProtocolError> {
        let chunk = bits
            .get(from..from + count)
            .ok_or_else(|| ProtocolError::Decode("message ends inside a field".into()))?;
        Ok(chunk.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    };
    let len = read(zeros, zeros + 1)?;
    if len == 0 || len > 64 {
        return Err(ProtocolError::Decode(format!("invalid bit length {len}")));
    }
    let start = 2 * zeros + 1;
    let tail = len as usize - 1;
    let low = read(start, tail)?;
    if start + tail != bits.len() {
        return Err(ProtocolError::Decode(format!(
            "{} trailing bits after the index",
            bits.len() - start - tail
        )));
    }
    Ok((1u64 << tail) | low)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_codewords() {
        assert_eq!(elias_delta_encode(1).to_string(), "1");
        assert_eq!(elias_delta_encode(2).to_string(), "0100");
        assert_eq!(elias_delta_encode(3).to_string(), "0101");
        assert_eq!(elias_delta_encode(4).to_string(), "01100");
        assert_eq!(elias_delta_encode(10).to_string(), "00100010");
        assert_eq!(elias_delta_encode(17).to_string(), "001010001");
    }

    #[test]
    fn malformed_messages() {
        assert!(elias_delta_decode(&Message::parse("").unwrap()).is_err());
        assert!(elias_delta_decode(&Message::parse("010").unwrap()).is_err());
        assert!(elias_delta_decode(&Message::parse("11").unwrap()).is_err());
        assert!(elias_delta_decode(&Message::parse("0000000").unwrap()).is_err());
        assert!(Message::parse("01x").is_err());
    }

    #[test]
    fn length_matches_formula_exhaustively() {
        for i in 1..5000u64 {
            let m = elias_delta_encode(i);
            assert_eq!(m.len(), elias_delta_length(i));
            assert_eq!(elias_delta_decode(&m).unwrap(), i);
        }
    }

    proptest! {
        #[test]
        fn round_trip(i in 1u64..=u64::MAX) {
            let m = elias_delta_encode(i);
            prop_assert_eq!(m.len(), elias_delta_length(i));
            prop_assert_eq!(elias_delta_decode(&m).unwrap(), i);
        }

        #[test]
        fn prefix_free(a in 1u64..100_000, b in 1u64..100_000) {
            prop_assume!(a != b);
            let (x, y) = (elias_delta_encode(a), elias_delta_encode(b));
            let n = x.len().min(y.len());
            prop_assert_ne!(&x.bits()[..n], &y.bits()[..n]);
        }
    }
}

//! The subset of RLP needed for CREATE address derivation.

pub fn encode_bytes(bytes: &[u8]) -> Vec<u8> {
    match bytes {
        [b] if *b < 0x80 => vec![*b],
        _ => {
            let mut out = length_prefix(bytes.len(), 0x80);
            out.extend_from_slice(bytes);
            out
        }
    }
}

/// Minimal big-endian encoding; zero is the empty string.
pub fn encode_u64(value: u64) -> Vec<u8> {
    let be = value.to_be_bytes();
    let first = be.iter().position(|&b| b != 0).unwrap_or(be.len());
    encode_bytes(&be[first..])
}

pub fn encode_list(items: &[Vec<u8>]) -> Vec<u8> {
    let payload: Vec<u8> = items.concat();
    let mut out = length_prefix(payload.len(), 0xc0);
    out.extend(payload);
    out
}

fn length_prefix(len: usize, offset: u8) -> Vec<u8> {
    if len < 56 {
        vec![offset + len as u8]
    } else {
        let be = (len as u64).to_be_bytes();
        let first = be.iter().position(|&b| b != 0).unwrap_or(be.len());
        let mut out = vec![offset + 55 + (be.len() - first) as u8];
        out.extend_from_slice(&be[first..]);
        out
    }
}

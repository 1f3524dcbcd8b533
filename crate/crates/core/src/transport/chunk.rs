//! MTU-sized packetisation of the BLE-UART byte stream.

/// Default payload per notification (the ATT default MTU minus overhead).
pub const DEFAULT_MTU: usize = 20;

/// One link-layer payload, 1..=mtu bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk(Vec<u8>);

impl Chunk {
    pub fn new(payload: Vec<u8>, mtu: usize) -> Option<Chunk> {
        (!payload.is_empty() && payload.len() <= mtu).then_some(Chunk(payload))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[u8]> for Chunk {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// Splits `payload` into full chunks followed by at most one short one.
///
/// # Panics
///
/// If `mtu` is zero.
pub fn chunk(payload: &[u8], mtu: usize) -> Vec<Chunk> {
    assert!(mtu >= 1, "mtu must be at least 1");
    payload.chunks(mtu).map(|c| Chunk(c.to_vec())).collect()
}

pub fn reassemble<C: AsRef<[u8]>>(chunks: &[C]) -> Vec<u8> {
    chunks.iter().flat_map(|c| c.as_ref().iter().copied()).collect()
}

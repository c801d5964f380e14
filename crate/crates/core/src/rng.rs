//! Counter-based randomness: every tree node derives its own stream from
//! `(seed, level, index)`, so realizations can be deepened or evaluated in
//! parallel without sharing generator state.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of one node of the weight tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeKey {
    pub seed: u64,
    pub level: u32,
    pub index: u64,
}

impl NodeKey {
    pub fn new(seed: u64, level: u32, index: u64) -> Self {
        Self { seed, level, index }
    }
}

/// SplitMix64 stream whose starting state is a hash of a [`NodeKey`].
#[derive(Debug, Clone)]
pub struct KeyedRng {
    state: u64,
}

impl KeyedRng {
    pub fn for_node(key: NodeKey) -> Self {
        let a = mix64(key.seed.wrapping_add(GOLDEN));
        let b = mix64(a ^ (u64::from(key.level).wrapping_mul(0xD6E8_FEB8_6659_FD93)));
        let c = mix64(b ^ key.index.wrapping_mul(GOLDEN) ^ 0xA076_1D64_78BD_642F);
        Self { state: c }
    }

    /// Plain stream for Monte Carlo loops that are not tree-structured.
    pub fn from_seed(seed: u64) -> Self {
        Self::for_node(NodeKey::new(seed, u32::MAX, u64::MAX))
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for KeyedRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

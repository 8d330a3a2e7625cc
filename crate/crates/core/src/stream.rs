//! Keyed random streams.
//!
//! A stream is identified by `(base_seed, path)`, e.g. `[experiment, degree,
//! n, replication, method]`. The key is hashed into a 256-bit ChaCha seed, so
//! a stream's output depends only on its key and never on which thread
//! consumed it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed out by [`RandomStream::rng`].
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RandomStream {
    base_seed: u64,
    path: Vec<u64>,
}

impl RandomStream {
    pub fn new(base_seed: u64) -> Self {
        Self {
            base_seed,
            path: Vec::new(),
        }
    }

    pub fn with_path(base_seed: u64, path: &[u64]) -> Self {
        Self {
            base_seed,
            path: path.to_vec(),
        }
    }

    /// Sub-stream `index` below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            base_seed: self.base_seed,
            path,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Dotted rendering of the path, e.g. `"2.1.100.7"`.
    pub fn path_string(&self) -> String {
        self.path
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(".")
    }

    /// 256-bit key derived from `(base_seed, path)`.
    ///
    /// The path length is absorbed first so that `[a]` and `[a, 0]` differ.
    pub fn key(&self) -> [u8; 32] {
        let mut h = splitmix(self.base_seed ^ splitmix(self.path.len() as u64));
        for (pos, &elem) in self.path.iter().enumerate() {
            h = splitmix(h ^ splitmix(elem.wrapping_add((pos as u64 + 1).wrapping_mul(GOLDEN))));
        }
        let mut key = [0u8; 32];
        for (k, chunk) in key.chunks_exact_mut(8).enumerate() {
            h = splitmix(h.wrapping_add(k as u64));
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.key())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn first(stream: &RandomStream, k: usize) -> Vec<u64> {
        let mut rng = stream.rng();
        (0..k).map(|_| rng.random::<u64>()).collect()
    }

    #[test]
    fn same_key_same_sequence() {
        let a = RandomStream::with_path(7, &[1, 2, 3]);
        let b = RandomStream::new(7).child(1).child(2).child(3);
        assert_eq!(a, b);
        assert_eq!(first(&a, 16), first(&b, 16));
    }

    #[test]
    fn distinct_paths_differ() {
        let base = RandomStream::new(7);
        let keys = [
            base.key(),
            base.child(0).key(),
            base.child(0).child(0).key(),
            base.child(1).key(),
            RandomStream::new(8).key(),
            RandomStream::with_path(7, &[0, 1]).key(),
            RandomStream::with_path(7, &[1, 0]).key(),
        ];
        for i in 0..keys.len() {
            for j in 0..i {
                assert_ne!(keys[i], keys[j], "{i} vs {j}");
            }
        }
    }

    #[test]
    fn consumption_order_is_irrelevant() {
        let base = RandomStream::new(99);
        let forward: Vec<_> = (0..8).map(|r| first(&base.child(r), 4)).collect();
        let mut backward: Vec<_> = (0..8).rev().map(|r| first(&base.child(r), 4)).collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn sibling_streams_look_uncorrelated() {
        let base = RandomStream::new(3);
        let n = 20_000;
        let mut a = base.child(0).rng();
        let mut b = base.child(1).rng();
        let (mut sab, mut sa, mut sb, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let u: f64 = a.random();
            let v: f64 = b.random();
            sab += u * v;
            sa += u;
            sb += v;
            saa += u * u;
            sbb += v * v;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 4.0 / nf.sqrt(), "corr = {corr}");
    }
}

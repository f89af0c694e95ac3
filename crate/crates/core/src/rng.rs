//! Counter-based deterministic randomness.
//!
//! Every stream is a pure function of its key: value `i` depends only on
//! `(key, i)`, never on how many threads consumed neighbouring streams.
//! Path `m` of an ensemble draws from the stream keyed by
//! (seed root, m, generator id), which is what makes simulations bit-exact
//! under any parallel schedule.

/// 64-bit avalanche mixer (splitmix64 finalizer).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic counter stream with Box-Muller normals.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0, spare_normal: None }
    }

    /// Stream key derived from a seed root, a stream index (e.g. path id),
    /// and a generator label.
    pub fn from_parts(seed_root: u64, stream: u64, label: &str) -> Self {
        let k = mix(seed_root ^ GOLDEN)
            ^ mix(stream.wrapping_mul(GOLDEN).wrapping_add(0x6a09_e667_f3bc_c909))
            ^ fnv1a(label.as_bytes());
        CounterRng::new(mix(k))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let z = self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN).wrapping_add(GOLDEN));
        self.counter += 1;
        mix(z)
    }

    /// Uniform in (0, 1]: 53 mantissa bits, zero excluded so logs are safe.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Box-Muller; the paired draw is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * th.sin());
        r * th.cos()
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }
}

/// Deterministic subsample of `cap` indices from `0..n`, sorted ascending.
/// Partial Fisher-Yates keyed by `key`; independent of thread scheduling.
pub fn subsample_indices(n: usize, cap: usize, key: u64) -> Vec<usize> {
    if cap >= n {
        return (0..n).collect();
    }
    let mut rng = CounterRng::new(mix(key ^ 0x5353_5353_5353_5353));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..cap {
        let j = i + (rng.next_u64() % (n - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mut picked = idx[..cap].to_vec();
    picked.sort_unstable();
    picked
}

//! Counter-based random number generation (Philox 4x64-10).
//!
//! Every consumer derives a substream from the experiment seed and a list of
//! integer labels (replica, sweep, site, trial, ...). Draws within a substream
//! are indexed by a counter, so results never depend on thread scheduling or on
//! how many variates another substream consumed.

const PHILOX_M0: u64 = 0xD2E7470EE14C6C93;
const PHILOX_M1: u64 = 0xCA5A826395121157;
const PHILOX_W0: u64 = 0x9E3779B97F4A7C15;
const PHILOX_W1: u64 = 0xBB67AE8584CAA73B;

#[inline]
fn mulwide(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// One Philox 4x64-10 block: 256-bit counter, 128-bit key, 256-bit output.
#[inline]
pub fn philox4x64(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = counter;
    let (mut k0, mut k1) = (key[0], key[1]);
    for _ in 0..10 {
        let (hi0, lo0) = mulwide(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulwide(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0];
        k0 = k0.wrapping_add(PHILOX_W0);
        k1 = k1.wrapping_add(PHILOX_W1);
    }
    c
}

/// Named top-level stream labels, recorded in run manifests.
pub mod stream {
    pub const HEAT_BATH: u64 = 1;
    pub const LANGEVIN: u64 = 2;
    pub const MALA: u64 = 3;
    pub const DGFF: u64 = 4;
    pub const INIT: u64 = 5;
    pub const WALK: u64 = 6;
    pub const SKOROKHOD: u64 = 7;
    pub const BOOTSTRAP: u64 = 8;
    pub const ANALYSIS: u64 = 9;
}

/// A deterministic substream of the experiment's randomness.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: [u64; 2],
    counter: u64,
    buf: [u64; 4],
    buf_pos: usize,
    spare_normal: Option<f64>,
}

impl CounterRng {
    /// Root stream for a 128-bit seed.
    pub fn root(seed: u128) -> CounterRng {
        CounterRng {
            key: [(seed >> 64) as u64, seed as u64],
            counter: 0,
            buf: [0; 4],
            buf_pos: 4,
            spare_normal: None,
        }
    }

    /// Derive an independent substream labelled by `ids`.
    ///
    /// The child key is produced by running Philox blocks over the label words
    /// under the parent key, so distinct label lists give unrelated keys.
    pub fn substream(&self, ids: &[u64]) -> CounterRng {
        let mut key = self.key;
        let tag = 0x5eed_0000_0000_0000u64 ^ ids.len() as u64;
        for (i, chunk) in ids.chunks(2).enumerate() {
            let c0 = chunk[0];
            let c1 = if chunk.len() > 1 { chunk[1] } else { 0 };
            let out = philox4x64([c0, c1, i as u64, tag], key);
            key = [out[0], out[1]];
        }
        CounterRng {
            key,
            counter: 0,
            buf: [0; 4],
            buf_pos: 4,
            spare_normal: None,
        }
    }

    /// Jump directly to a block counter (used by resume).
    pub fn with_counter(mut self, counter: u64) -> CounterRng {
        self.counter = counter;
        self.buf_pos = 4;
        self.spare_normal = None;
        self
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if self.buf_pos == 4 {
            self.buf = philox4x64([self.counter, 0, 0, 0], self.key);
            self.counter = self.counter.wrapping_add(1);
            self.buf_pos = 0;
        }
        let v = self.buf[self.buf_pos];
        self.buf_pos += 1;
        v
    }

    /// Uniform in (0, 1) with 53-bit resolution, never exactly 0.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (caches the second variate).
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(mag * s);
        mag * c
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Exponential with rate 1.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }
}

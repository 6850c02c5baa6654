//! Seeded randomness and Laplace sampling.
//!
//! [`RngStream`] wraps a ChaCha20 generator. Streams are derived from a
//! master seed with [`derive_seed`], so every trial of an experiment owns an
//! independent, reproducible sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Open01};

use crate::error::{Error, Result};

/// One Laplace draw as recorded by an instrumented stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseDraw {
    pub scale: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha20Rng,
    ledger: Option<Vec<NoiseDraw>>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
            ledger: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream; depends only on this stream's seed and `label`.
    pub fn fork(&self, label: u64) -> Self {
        let mut child = Self::new(derive_seed(self.seed, &[label]));
        if self.ledger.is_some() {
            child.ledger = Some(Vec::new());
        }
        child
    }

    /// Records every subsequent Laplace draw.
    pub fn with_ledger(mut self) -> Self {
        self.ledger = Some(Vec::new());
        self
    }

    pub fn ledger(&self) -> &[NoiseDraw] {
        self.ledger.as_deref().unwrap_or(&[])
    }

    pub fn take_ledger(&mut self) -> Vec<NoiseDraw> {
        self.ledger.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.inner)
    }

    pub fn uniform_usize(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        self.inner.random_range(lo..=hi_inclusive)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> Result<f64> {
        let dist = Normal::new(mean, std_dev)
            .map_err(|e| Error::Parameter(format!("normal distribution: {e}")))?;
        Ok(dist.sample(&mut self.inner))
    }

    /// One draw from Laplace(0, scale) by inverting the CDF.
    pub fn laplace(&mut self, scale: f64) -> Result<f64> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "Laplace scale must be positive and finite, got {scale}"
            )));
        }
        let u = self.uniform_open() - 0.5;
        let value = -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        if let Some(ledger) = self.ledger.as_mut() {
            ledger.push(NoiseDraw { scale, value });
        }
        Ok(value)
    }
}

impl rand::RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn laplace_sample(scale: f64, rng: &mut RngStream) -> Result<f64> {
    rng.laplace(scale)
}

/// Mixes a master seed with a path of labels (splitmix64 finalizer per step).
///
/// The derivation is part of the reproducibility contract: a seed depends
/// only on `master` and the labels, never on how many other streams exist.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut h = splitmix(master ^ 0x5DEE_CE66_D1CE_4E5B);
    for &label in labels {
        h = splitmix(h ^ splitmix(label.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    h
}

/// Stable 64-bit label for a string (FNV-1a).
pub fn label(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

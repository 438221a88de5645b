//! Seeded, replayable streams of standard complex Gaussians.
//!
//! A [`Seed`] is a pure description of a stream: the pair `(root, replicate_index)`
//! always produces the same sequence of draws, no matter which thread creates the
//! stream or how many workers are running. Streams are backed by ChaCha8 with the
//! replicate index selecting the ChaCha stream, so distinct replicates never overlap.
//!
//! Draws are standard complex Gaussians: real and imaginary parts are independent
//! real normals with mean 0 and variance 1/2, so `E|X|^2 = 1` and `E[X^2] = 0`.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::f64::consts::TAU;

/// Identifies one reproducible stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub root: u64,
    pub replicate_index: u64,
}

impl Seed {
    pub const fn new(root: u64) -> Self {
        Self {
            root,
            replicate_index: 0,
        }
    }

    pub const fn with_replicate(root: u64, replicate_index: u64) -> Self {
        Self {
            root,
            replicate_index,
        }
    }

    /// Child seed for replicate `replicate`. See [`split`].
    pub fn split(self, replicate: u64) -> Seed {
        split(self, replicate)
    }

    pub fn stream(self) -> GaussianStream {
        GaussianStream::new(self)
    }
}

impl std::fmt::Display for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.root, self.replicate_index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child `replicate` from `seed`.
///
/// The child's root mixes both halves of the parent, so splitting is hierarchical:
/// `split(split(s, a), b)` and `split(split(s, a'), b)` differ whenever `a != a'`.
pub fn split(seed: Seed, replicate: u64) -> Seed {
    let root = splitmix64(seed.root ^ splitmix64(seed.replicate_index.wrapping_add(0xA076_1D64_78BD_642F)));
    Seed {
        root,
        replicate_index: replicate,
    }
}

/// Source of the variables X(1), X(2), ... in order.
///
/// Implemented by [`GaussianStream`] for sampling and by [`FixedValues`] for
/// forcing particular values in tests and exact computations.
pub trait ComplexSource {
    fn next_complex(&mut self) -> Complex64;

    fn take_n(&mut self, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| self.next_complex()).collect()
    }
}

/// Forward-only stream of standard complex Gaussians.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    seed: Seed,
    position: u64,
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: Seed) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.root);
        rng.set_stream(seed.replicate_index);
        Self {
            seed,
            position: 0,
            rng,
        }
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    /// Number of draws emitted so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Uniform on (0, 1].
    fn open_unit(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        1.0 - bits as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    fn half_open_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Returns X(position + 1) and advances the position.
    ///
    /// Box–Muller in polar form: modulus `sqrt(-ln u1)` and uniform phase
    /// `2 pi u2` give a complex Gaussian with `E|X|^2 = 1`.
    pub fn next_complex_gaussian(&mut self) -> Complex64 {
        let u1 = self.open_unit();
        let u2 = self.half_open_unit();
        self.position += 1;
        Complex64::from_polar((-u1.ln()).sqrt(), TAU * u2)
    }

    /// Uniformly distributed point on the unit circle. Consumes one draw.
    pub fn next_unit_phase(&mut self) -> Complex64 {
        let _ = self.open_unit();
        let u2 = self.half_open_unit();
        self.position += 1;
        Complex64::from_polar(1.0, TAU * u2)
    }
}

impl ComplexSource for GaussianStream {
    fn next_complex(&mut self) -> Complex64 {
        self.next_complex_gaussian()
    }
}

/// A prescribed sequence X(1), X(2), ...; zero once exhausted.
#[derive(Debug, Clone)]
pub struct FixedValues {
    values: Vec<Complex64>,
    position: usize,
}

impl FixedValues {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self {
            values,
            position: 0,
        }
    }
}

impl ComplexSource for FixedValues {
    fn next_complex(&mut self) -> Complex64 {
        let v = self
            .values
            .get(self.position)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0));
        self.position += 1;
        v
    }
}

//! Seeded random streams and the samplers built on them: Gaussian noise,
//! the relative Gaussian perturbation of an instance, the uniform sampler on
//! `{α : Σα_i = 1, α_i ≥ 1/d²}` and uniform `d`-subsets.
//!
//! A stream is a ChaCha8 generator keyed by `(master_seed, stream_id)`;
//! equal keys give equal sample sequences, so trials can run on any thread.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Mat;
use crate::lp::{Basis, LinearProgram};

/// SplitMix64 finalizer.
pub fn avalanche(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives the stream id of trial `index` under `master_seed`.
pub fn mix(master_seed: u64, index: u64) -> u64 {
    avalanche(master_seed ^ avalanche(index))
}

/// Parses a 64-bit seed written in decimal or as `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64, std::num::ParseIntError> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// The stream owned by trial `index`.
    pub fn for_trial(master_seed: u64, index: u64) -> Self {
        Self::new(master_seed, mix(master_seed, index))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn gaussian(&mut self, mean: f64, sd: f64) -> f64 {
        assert!(sd >= 0.0, "standard deviation must be nonnegative");
        if sd == 0.0 {
            return mean;
        }
        mean + sd * self.standard_normal()
    }

    /// Independent Gaussian coordinates about `center`.
    pub fn gaussian_vec(&mut self, center: &[f64], sd: f64) -> Vec<f64> {
        center.iter().map(|&c| self.gaussian(c, sd)).collect()
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Relative Gaussian perturbation: every entry of `A` and `y` receives noise
/// of standard deviation `sigma · max_i ‖(y_i, a_i)‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    sigma: f64,
    scale: f64,
}

impl PerturbationSpec {
    /// # Panics
    /// If `sigma` is negative or not finite, or the instance is all zeros.
    pub fn new(sigma: f64, base: &LinearProgram) -> Self {
        assert!(
            sigma >= 0.0 && sigma.is_finite(),
            "sigma must be finite and >= 0"
        );
        let scale = base.scale();
        assert!(scale > 0.0, "instance has zero scale");
        Self { sigma, scale }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Per-entry standard deviation.
    pub fn sd(&self) -> f64 {
        self.sigma * self.scale
    }
}

/// Perturbs constraints and right-hand sides; the objective is kept.
pub fn perturb(
    base: &LinearProgram,
    spec: &PerturbationSpec,
    stream: &mut RngStream,
) -> LinearProgram {
    let sd = spec.sd();
    let (n, d) = (base.n(), base.d());
    let mut a = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        a.extend(stream.gaussian_vec(base.row(i), sd));
        y.push(stream.gaussian(base.y()[i], sd));
    }
    let a = Mat::new(n, d, a).expect("perturbation keeps entries finite");
    LinearProgram::new(a, y, base.z().to_vec()).expect("perturbation keeps the shape")
}

/// Uniform sample from `{α : Σα_i = 1, α_i ≥ 1/d²}`: an affine image of a
/// uniform point on the standard simplex, drawn from sorted-uniform spacings.
pub fn sample_alpha(stream: &mut RngStream, d: usize) -> Vec<f64> {
    assert!(d >= 2, "sample_alpha needs d >= 2");
    let mut cuts: Vec<f64> = (0..d - 1).map(|_| stream.uniform()).collect();
    cuts.sort_by(f64::total_cmp);
    let floor = 1.0 / (d * d) as f64;
    let stretch = 1.0 - 1.0 / d as f64;
    let mut prev = 0.0;
    let mut alpha = Vec::with_capacity(d);
    for c in cuts.into_iter().chain(std::iter::once(1.0)) {
        alpha.push(floor + stretch * (c - prev));
        prev = c;
    }
    alpha
}

/// A uniformly random `d`-subset of `0..n`.
pub fn sample_dset(stream: &mut RngStream, n: usize, d: usize) -> Basis {
    assert!(d <= n, "cannot draw {d} indices from {n}");
    let mut v = rand::seq::index::sample(stream.rng(), n, d).into_vec();
    v.sort_unstable();
    Basis::from_sorted(v)
}

/// `count` independent uniform `d`-subsets (with replacement).
pub fn sample_dsets(stream: &mut RngStream, n: usize, d: usize, count: usize) -> Vec<Basis> {
    (0..count).map(|_| sample_dset(stream, n, d)).collect()
}

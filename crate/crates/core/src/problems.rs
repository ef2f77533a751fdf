//! Seeded generation of simulated sparse-recovery instances: K-sparse
//! images, random frequency subsampling, complex Gaussian noise at a target
//! PSNR, and assembly into a ready-to-solve [`LassoProblem`].
//!
//! Everything here is a pure function of its inputs and a seed, so instances
//! reproduce bit-for-bit across runs and platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{FourierOperator, FrequencySampleSet, LinOp};
use crate::solvers::LassoProblem;

/// A nonnegative image with exactly K lit pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseImage {
    n: usize,
    values: Vec<f64>,
    support: Vec<usize>,
}

impl SparseImage {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Flattened row-major pixel values, length n^2.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sorted indices of the lit pixels.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }
}

/// Measurement-noise request: target PSNR in dB and a draw seed.
/// `psnr_db = f64::INFINITY` means noiseless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub psnr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless(&self) -> bool {
        self.psnr_db == f64::INFINITY
    }

    /// Noise RMS for a clean signal with the given peak magnitude:
    /// `sigma = peak / 10^(psnr_db / 20)`.
    pub fn sigma_for_peak(&self, peak: f64) -> f64 {
        if self.noiseless() {
            0.0
        } else {
            peak / 10f64.powf(self.psnr_db / 20.0)
        }
    }
}

/// Draws K distinct pixels uniformly at random and lights them with
/// amplitudes uniform on [1, 10).
pub fn gen_sparse_image(n: usize, k: usize, seed: u64) -> Result<SparseImage> {
    gen_sparse_image_with(n, k, (1.0, 10.0), seed)
}

/// [`gen_sparse_image`] with an explicit amplitude range `[lo, hi)`;
/// amplitudes must stay strictly positive so the support is unambiguous.
pub fn gen_sparse_image_with(
    n: usize,
    k: usize,
    amp_range: (f64, f64),
    seed: u64,
) -> Result<SparseImage> {
    if n == 0 {
        return Err(Error::invalid("image side must be at least 1"));
    }
    if k > n * n {
        return Err(Error::invalid(format!(
            "sparsity {k} exceeds the pixel count {}",
            n * n
        )));
    }
    let (lo, hi) = amp_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(format!(
            "amplitude range must satisfy 0 < lo < hi, got [{lo}, {hi})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = rand::seq::index::sample(&mut rng, n * n, k).into_vec();
    support.sort_unstable();

    let mut values = vec![0.0; n * n];
    for &j in &support {
        values[j] = rng.gen_range(lo..hi);
    }
    Ok(SparseImage { n, values, support })
}

/// Draws L distinct frequency pairs uniformly without replacement from the
/// full n x n grid, in draw order.
pub fn sample_frequencies(n: usize, l: usize, seed: u64) -> Result<FrequencySampleSet> {
    if n == 0 {
        return Err(Error::invalid("grid side must be at least 1"));
    }
    if l == 0 || l > n * n {
        return Err(Error::invalid(format!(
            "measurement count must lie in [1, {}], got {l}",
            n * n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = rand::seq::index::sample(&mut rng, n * n, l)
        .iter()
        .map(|t| [t / n, t % n])
        .collect();
    FrequencySampleSet::new(n, coords)
}

/// Adds circular complex Gaussian noise scaled to the requested PSNR:
/// `w = sigma (g1 + i g2) / sqrt(2)` per entry with g1, g2 standard normal
/// and `sigma = max |clean| / 10^(psnr_db/20)`.
pub fn add_complex_noise(clean: &[Complex64], spec: &NoiseSpec) -> Result<Vec<Complex64>> {
    if spec.psnr_db.is_nan() || spec.psnr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!(
            "psnr_db must be a real value or +infinity, got {}",
            spec.psnr_db
        )));
    }
    if spec.noiseless() {
        return Ok(clean.to_vec());
    }
    let peak = clean.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::invalid(
            "finite PSNR is undefined for an all-zero clean signal",
        ));
    }
    let sigma = spec.sigma_for_peak(peak);

    // Box-Muller in polar form: one complex normal per uniform pair, with
    // real and imaginary parts each N(0, sigma^2 / 2).
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(clean
        .iter()
        .map(|c| {
            let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1], keeps ln finite
            let u2: f64 = rng.gen();
            let radius = sigma * (-u1.ln()).sqrt();
            c + Complex64::from_polar(radius, std::f64::consts::TAU * u2)
        })
        .collect())
}

/// Builds the measurement operator, simulates `y = G x0 + w`, and picks
/// `lambda = lambda_factor * ||G* y||_inf`.
///
/// A zero clean signal (K = 0) is treated as noiseless since PSNR is
/// relative to the clean peak; in that degenerate case `||G* y||_inf = 0`
/// and lambda falls back to 1 so the problem stays well-posed.
pub fn assemble_problem(
    image: SparseImage,
    freqs: FrequencySampleSet,
    noise: &NoiseSpec,
    lambda_factor: f64,
) -> Result<(LassoProblem, SparseImage)> {
    if image.n() != freqs.n() {
        return Err(Error::invalid(format!(
            "image side {} does not match frequency grid side {}",
            image.n(),
            freqs.n()
        )));
    }
    if !(lambda_factor > 0.0 && lambda_factor < 1.0) {
        return Err(Error::invalid(format!(
            "lambda_factor must lie in (0, 1), got {lambda_factor}"
        )));
    }

    let op = FourierOperator::new(freqs);
    let clean = op.forward(image.values());
    let peak = clean.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let y = if noise.noiseless() || peak == 0.0 {
        clean
    } else {
        add_complex_noise(&clean, noise)?
    };

    let lam_base = op
        .adjoint(&y)
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let lambda = if lam_base > 0.0 {
        lambda_factor * lam_base
    } else {
        1.0
    };

    let problem = LassoProblem::new(Box::new(op), y, lambda)?;
    Ok((problem, image))
}

//! Fourier measurement operators on square real images.
//!
//! The forward map samples the 2-D discrete Fourier transform of an n x n
//! real image at an explicit list of integer frequency pairs:
//!
//! ```text
//! (G x)[l] = (1/n) * sum_{p,q} x[p,q] * exp(-i 2 pi (u_l p + v_l q) / n)
//! ```
//!
//! Images are flattened row-major, `(p, q) -> p * n + q`. The adjoint maps a
//! complex measurement vector back to a real image, `G* z = Re(conj(G)^T z)`,
//! which is the adjoint for the inner product `<a, b> = Re(conj(a)^T b)`.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated set of 2-D integer frequencies on an n x n grid.
///
/// Serialized as `{"n": 8, "coords": [[0, 0], [3, 5], ...]}`. Deserialization
/// re-runs validation, so a parsed value is always well formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFrequencySampleSet")]
pub struct FrequencySampleSet {
    n: usize,
    coords: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
struct RawFrequencySampleSet {
    n: usize,
    coords: Vec<[usize; 2]>,
}

impl TryFrom<RawFrequencySampleSet> for FrequencySampleSet {
    type Error = Error;

    fn try_from(raw: RawFrequencySampleSet) -> Result<Self> {
        FrequencySampleSet::new(raw.n, raw.coords)
    }
}

impl FrequencySampleSet {
    /// Builds a sample set, checking that `n >= 1`, that the list is
    /// nonempty, that every coordinate lies in `[0, n)`, and that no
    /// frequency pair repeats.
    pub fn new(n: usize, coords: Vec<[usize; 2]>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("grid side n must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("frequency list must be nonempty"));
        }
        let mut seen = HashSet::with_capacity(coords.len());
        for (l, &[u, v]) in coords.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "frequency {l} = ({u}, {v}) out of range for n = {n}"
                )));
            }
            if !seen.insert([u, v]) {
                return Err(Error::invalid(format!(
                    "duplicate frequency ({u}, {v}) at position {l}"
                )));
            }
        }
        Ok(FrequencySampleSet { n, coords })
    }

    /// Grid side length n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sampled frequencies L.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Flattened image length n^2.
    pub fn grid_len(&self) -> usize {
        self.n * self.n
    }

    /// The `(u, v)` pairs in sampling order.
    pub fn coords(&self) -> &[[usize; 2]] {
        &self.coords
    }
}

/// A linear map from real images to complex measurements.
///
/// `forward` and `adjoint` panic on dimension mismatch; sized inputs are the
/// caller's contract. Use [`dft_forward`] / [`dft_adjoint`] for the checked
/// entry points.
pub trait LinOp {
    /// Length of the real input vector.
    fn input_dim(&self) -> usize;

    /// Length of the complex output vector.
    fn output_dim(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Vec<Complex64>;

    fn adjoint(&self, z: &[Complex64]) -> Vec<f64>;

    /// Column `j` of the operator, i.e. the image of the `j`-th unit vector.
    fn column(&self, j: usize) -> Vec<Complex64> {
        assert!(j < self.input_dim(), "column index out of range");
        let mut e = vec![0.0; self.input_dim()];
        e[j] = 1.0;
        self.forward(&e)
    }
}

/// Partial 2-D DFT at an explicit frequency list, evaluated separably.
///
/// The transform is split into a row stage and a column stage so a forward
/// application costs O(n^2 * V + L * n) where V is the number of distinct
/// column frequencies, instead of O(L * n^2) for the naive double sum.
#[derive(Debug, Clone)]
pub struct FourierOperator {
    freqs: FrequencySampleSet,
    /// twiddle[t] = exp(-i 2 pi t / n)
    twiddle: Vec<Complex64>,
    /// Sorted distinct v values appearing in the frequency list.
    v_active: Vec<usize>,
    /// Frequencies grouped by u: (u, [(v, measurement index)]).
    by_u: Vec<(usize, Vec<(usize, usize)>)>,
}

impl FourierOperator {
    pub fn new(freqs: FrequencySampleSet) -> Self {
        let n = freqs.n();
        let step = -std::f64::consts::TAU / n as f64;
        let twiddle = (0..n)
            .map(|t| Complex64::from_polar(1.0, step * t as f64))
            .collect();

        let mut v_active: Vec<usize> = freqs.coords().iter().map(|c| c[1]).collect();
        v_active.sort_unstable();
        v_active.dedup();

        let mut order: Vec<usize> = (0..freqs.len()).collect();
        order.sort_unstable_by_key(|&l| freqs.coords()[l][0]);
        let mut by_u: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
        for l in order {
            let [u, v] = freqs.coords()[l];
            match by_u.last_mut() {
                Some((last_u, list)) if *last_u == u => list.push((v, l)),
                _ => by_u.push((u, vec![(v, l)])),
            }
        }

        FourierOperator {
            freqs,
            twiddle,
            v_active,
            by_u,
        }
    }

    pub fn freqs(&self) -> &FrequencySampleSet {
        &self.freqs
    }
}

impl LinOp for FourierOperator {
    fn input_dim(&self) -> usize {
        self.freqs.grid_len()
    }

    fn output_dim(&self) -> usize {
        self.freqs.len()
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let n = self.freqs.n();
        assert_eq!(x.len(), n * n, "image length must be n^2");

        // Row stage: partial DFT of each image row at the active column
        // frequencies. row_stage[p * n + v] = sum_q x[p, q] w[(v q) mod n].
        let mut row_stage = vec![Complex64::ZERO; n * n];
        for p in 0..n {
            let row = &x[p * n..(p + 1) * n];
            for &v in &self.v_active {
                let mut idx = 0usize;
                let mut acc = Complex64::ZERO;
                for &xq in row {
                    acc += self.twiddle[idx] * xq;
                    idx += v;
                    if idx >= n {
                        idx -= n;
                    }
                }
                row_stage[p * n + v] = acc;
            }
        }

        // Column stage: for each measurement, transform down the rows.
        let scale = 1.0 / n as f64;
        self.freqs
            .coords()
            .iter()
            .map(|&[u, v]| {
                let mut idx = 0usize;
                let mut acc = Complex64::ZERO;
                for p in 0..n {
                    acc += self.twiddle[idx] * row_stage[p * n + v];
                    idx += u;
                    if idx >= n {
                        idx -= n;
                    }
                }
                acc * scale
            })
            .collect()
    }

    fn adjoint(&self, z: &[Complex64]) -> Vec<f64> {
        let n = self.freqs.n();
        assert_eq!(z.len(), self.freqs.len(), "measurement length must be L");

        // Row stage of the conjugate transform, grouped by distinct u:
        // b[u][q] = sum over measurements with that u of z[l] conj(w[(v q) mod n]).
        let mut b = vec![Complex64::ZERO; self.by_u.len() * n];
        for (bi, (_, list)) in self.by_u.iter().enumerate() {
            let brow = &mut b[bi * n..(bi + 1) * n];
            for &(v, l) in list {
                let zl = z[l];
                let mut idx = 0usize;
                for slot in brow.iter_mut() {
                    *slot += zl * self.twiddle[idx].conj();
                    idx += v;
                    if idx >= n {
                        idx -= n;
                    }
                }
            }
        }

        // Column stage: out[p, q] = (1/n) Re( sum_u b[u][q] conj(w[(u p) mod n]) ).
        let scale = 1.0 / n as f64;
        let mut out = vec![0.0; n * n];
        for p in 0..n {
            let orow = &mut out[p * n..(p + 1) * n];
            for (bi, (u, _)) in self.by_u.iter().enumerate() {
                let w = self.twiddle[u * p % n];
                let brow = &b[bi * n..(bi + 1) * n];
                for (o, bq) in orow.iter_mut().zip(brow) {
                    // Re(bq * conj(w))
                    *o += bq.re * w.re + bq.im * w.im;
                }
            }
            for o in orow.iter_mut() {
                *o *= scale;
            }
        }
        out
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        let n = self.freqs.n();
        assert!(j < n * n, "column index out of range");
        let (p, q) = (j / n, j % n);
        let scale = 1.0 / n as f64;
        self.freqs
            .coords()
            .iter()
            .map(|&[u, v]| self.twiddle[(u * p + v * q) % n] * scale)
            .collect()
    }
}

/// An explicit complex matrix, stored row-major.
///
/// Used for restrictions of a larger operator to a column subset, where the
/// submatrix is small enough to materialize.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl DenseOperator {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "dense operator needs {} entries for {} x {}, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        Ok(DenseOperator {
            rows,
            cols,
            entries,
        })
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

impl LinOp for DenseOperator {
    fn input_dim(&self) -> usize {
        self.cols
    }

    fn output_dim(&self) -> usize {
        self.rows
    }

    fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "input length must match column count");
        (0..self.rows)
            .map(|r| {
                let row = &self.entries[r * self.cols..(r + 1) * self.cols];
                row.iter()
                    .zip(x)
                    .fold(Complex64::ZERO, |acc, (e, &xi)| acc + e * xi)
            })
            .collect()
    }

    fn adjoint(&self, z: &[Complex64]) -> Vec<f64> {
        assert_eq!(z.len(), self.rows, "input length must match row count");
        let mut out = vec![0.0; self.cols];
        for (r, zr) in z.iter().enumerate() {
            let row = &self.entries[r * self.cols..(r + 1) * self.cols];
            for (o, e) in out.iter_mut().zip(row) {
                // Re(conj(e) * z)
                *o += e.re * zr.re + e.im * zr.im;
            }
        }
        out
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        assert!(j < self.cols, "column index out of range");
        (0..self.rows)
            .map(|r| self.entries[r * self.cols + j])
            .collect()
    }
}

/// Checked forward transform: samples the DFT of `x` at `freqs`.
pub fn dft_forward(x: &[f64], freqs: &FrequencySampleSet) -> Result<Vec<Complex64>> {
    if x.len() != freqs.grid_len() {
        return Err(Error::invalid(format!(
            "image has length {}, expected n^2 = {}",
            x.len(),
            freqs.grid_len()
        )));
    }
    Ok(FourierOperator::new(freqs.clone()).forward(x))
}

/// Checked adjoint transform: maps measurements back to a real image.
pub fn dft_adjoint(z: &[Complex64], freqs: &FrequencySampleSet) -> Result<Vec<f64>> {
    if z.len() != freqs.len() {
        return Err(Error::invalid(format!(
            "measurement vector has length {}, expected L = {}",
            z.len(),
            freqs.len()
        )));
    }
    Ok(FourierOperator::new(freqs.clone()).adjoint(z))
}

/// Real part of the hermitian inner product, `Re(conj(a)^T b)`.
pub fn hermitian_inner(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "inner product length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(herm_re(a, b))
}

pub(crate) fn herm_re(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Materializes the restriction of `op` to a column subset.
///
/// `support` must be strictly increasing and within `op.input_dim()`. The
/// returned operator applied to `v` equals `op` applied to the zero-padded
/// embedding of `v`.
pub fn restrict_columns(op: &dyn LinOp, support: &[usize]) -> Result<DenseOperator> {
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid(
                "support indices must be strictly increasing",
            ));
        }
    }
    if let Some(&last) = support.last() {
        if last >= op.input_dim() {
            return Err(Error::invalid(format!(
                "support index {} out of range for input dimension {}",
                last,
                op.input_dim()
            )));
        }
    }

    let rows = op.output_dim();
    let cols = support.len();
    let mut entries = vec![Complex64::ZERO; rows * cols];
    for (i, &j) in support.iter().enumerate() {
        for (r, value) in op.column(j).into_iter().enumerate() {
            entries[r * cols + i] = value;
        }
    }
    DenseOperator::new(rows, cols, entries)
}

/// Largest eigenvalue of `G* G` (the squared operator norm for the real
/// inner product), estimated by power iteration with Rayleigh quotients.
///
/// The start vector is drawn from a fixed internal seed so results are
/// reproducible. Returns 0 for a zero operator. Note the estimate converges
/// from below, so callers deriving step sizes should leave a margin.
pub fn operator_norm_sq(op: &dyn LinOp, tol: f64, max_iter: usize) -> f64 {
    assert!(tol > 0.0, "tolerance must be positive");
    let dim = op.input_dim();
    if dim == 0 || op.output_dim() == 0 {
        return 0.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = norm2(&v);
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }

    let mut lam = 0.0;
    for _ in 0..max_iter {
        let s = op.adjoint(&op.forward(&v));
        let lam_next: f64 = v.iter().zip(&s).map(|(a, b)| a * b).sum();
        let ns = norm2(&s);
        if ns == 0.0 {
            return 0.0;
        }
        v = s;
        v.iter_mut().for_each(|x| *x /= ns);
        if (lam_next - lam).abs() <= tol * lam_next.abs().max(f64::MIN_POSITIVE) {
            return lam_next;
        }
        lam = lam_next;
    }
    lam
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

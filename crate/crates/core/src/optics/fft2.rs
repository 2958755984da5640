//! Square 2-D FFT helpers on row-major complex buffers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(&self.fwd, buf);
    }

    /// Unnormalized inverse; divide by `n²` to undo `forward`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(&self.inv, buf);
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(buf.len(), n * n);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        fft.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
    }
}

pub(crate) fn transpose_square<T>(buf: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Circular convolution of two real `n × n` grids through the FFT.
pub(crate) fn circular_convolve(fft: &Fft2, a: &[f64], b_spectrum: &[Complex64]) -> Vec<f64> {
    let n = fft.n;
    let mut buf: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for (x, y) in buf.iter_mut().zip(b_spectrum) {
        *x *= *y;
    }
    fft.inverse(&mut buf);
    let scale = 1.0 / (n * n) as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

pub(crate) fn real_spectrum(fft: &Fft2, a: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    buf
}

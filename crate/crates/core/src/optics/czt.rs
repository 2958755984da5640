//! Chirp-z evaluation of a 1-D Fourier sum on arbitrary uniform grids.
//!
//! Computes `X[m] = Σ_n a[n] · exp(−2πi · scale · x_n · u_m)` for
//! `x_n = x0 + n·dx` and `u_m = u0 + m·du` with three FFTs (Bluestein).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Czt {
    n_in: usize,
    n_out: usize,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

fn cis(phase: f64) -> Complex64 {
    Complex64::new(phase.cos(), phase.sin())
}

impl Czt {
    pub fn new(input: Axis, output: Axis, scale: f64) -> Self {
        let n_in = input.len;
        let n_out = output.len;
        let len = good_fft_len(n_in + n_out - 1);
        let beta = input.step * output.step * scale;

        let pre = (0..n_in)
            .map(|n| {
                let nf = n as f64;
                cis(-2.0 * PI * scale * nf * input.step * output.start - PI * beta * nf * nf)
            })
            .collect();
        let post = (0..n_out)
            .map(|m| {
                let mf = m as f64;
                let u = output.start + mf * output.step;
                cis(-2.0 * PI * scale * input.start * u - PI * beta * mf * mf) / len as f64
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);

        let mut kernel = vec![Complex64::default(); len];
        for (k, slot) in kernel.iter_mut().enumerate().take(n_out) {
            let kf = k as f64;
            *slot = cis(PI * beta * kf * kf);
        }
        for j in 1..n_in {
            let jf = j as f64;
            kernel[len - j] = cis(PI * beta * jf * jf);
        }
        fwd.process(&mut kernel);

        Self { n_in, n_out, len, fwd, inv, pre, post, kernel }
    }

    pub fn scratch_len(&self) -> usize {
        self.len + self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len())
    }

    /// Transform `input` (length `n_in`) into `output` (length `n_out`).
    pub fn apply(&self, input: &[Complex64], output: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.n_in);
        debug_assert_eq!(output.len(), self.n_out);
        let (work, fft_scratch) = scratch.split_at_mut(self.len);
        for (w, (a, p)) in work.iter_mut().zip(input.iter().zip(&self.pre)) {
            *w = a * p;
        }
        for w in work[self.n_in..].iter_mut() {
            *w = Complex64::default();
        }
        self.fwd.process_with_scratch(work, fft_scratch);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w *= k;
        }
        self.inv.process_with_scratch(work, fft_scratch);
        for (o, (w, p)) in output.iter_mut().zip(work.iter().zip(&self.post)) {
            *o = w * p;
        }
    }
}

/// Smallest length ≥ `n` whose only prime factors are 2, 3 and 5.
fn good_fft_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let input = Axis { start: -0.3, step: 0.05, len: 13 };
        let output = Axis { start: -2.0, step: 0.17, len: 29 };
        let scale = 0.9;
        let a: Vec<Complex64> =
            (0..input.len).map(|n| Complex64::new((n as f64 * 0.7).sin(), (n as f64 * 0.3).cos())).collect();
        let czt = Czt::new(input, output, scale);
        let mut out = vec![Complex64::default(); output.len];
        let mut scratch = vec![Complex64::default(); czt.scratch_len()];
        czt.apply(&a, &mut out, &mut scratch);
        for (m, got) in out.iter().enumerate() {
            let u = output.start + m as f64 * output.step;
            let want: Complex64 = a
                .iter()
                .enumerate()
                .map(|(n, v)| v * cis(-2.0 * PI * scale * (input.start + n as f64 * input.step) * u))
                .sum();
            assert!((got - want).norm() < 1e-11, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn fft_lengths() {
        assert_eq!(good_fft_len(2559), 2560);
        assert_eq!(good_fft_len(7), 8);
        assert_eq!(good_fft_len(1), 1);
    }
}

//! Linear (non-periodic) 3D convolution on the velocity grid via FFT.
//!
//! Sources live on the physical `N^3` box and are zero-padded to `(2N)^3`.
//! Kernels are tabulated on lattice offsets `-(N-1)..=N-1` per axis and
//! stored at index `offset mod 2N`, so the circular product restricted to the
//! physical box equals the direct sum `sum_w K(v - w) s(w)` exactly.
//!
//! Every kernel used here is even, `K(-z) = K(z)`, so its spectrum is real and
//! only the real part is kept. With real spectra, two real convolutions can
//! share one complex inverse transform (real and imaginary parts).

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// FFT plans for one grid size.
pub struct Convolver {
    n: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Real spectrum of an even kernel on the padded lattice.
#[derive(Clone)]
pub struct KernelSpectrum(Vec<f64>);

/// Complex spectrum of a zero-padded source.
pub struct SourceSpectrum(Vec<Complex64>);

impl Convolver {
    pub fn new(n: usize) -> Self {
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        Convolver {
            n,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    fn padded_len(&self) -> usize {
        self.m * self.m * self.m
    }

    /// In-place 3D transform: transform the contiguous axis, then rotate the
    /// axes `(i, j, k) -> (k, i, j)`; three rounds restore the layout.
    fn transform(&self, data: &mut Vec<Complex64>, inverse: bool) {
        let m = self.m;
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut rotated = vec![Complex64::new(0.0, 0.0); data.len()];
        for _ in 0..3 {
            data.par_chunks_mut(m * 16).for_each(|chunk| {
                let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
                for line in chunk.chunks_mut(m) {
                    plan.process_with_scratch(line, &mut scratch);
                }
            });
            rotated.par_chunks_mut(m * m).enumerate().for_each(|(k, plane)| {
                for i in 0..m {
                    for j in 0..m {
                        plane[i * m + j] = data[(i * m + j) * m + k];
                    }
                }
            });
            std::mem::swap(data, &mut rotated);
        }
    }

    /// Spectrum of an even kernel given by its values on lattice offsets.
    pub fn kernel_spectrum(&self, table: impl Fn([i64; 3]) -> f64 + Sync) -> KernelSpectrum {
        let (n, m) = (self.n as i64, self.m);
        let wrap = |i: usize| -> Option<i64> {
            let i = i as i64;
            if i < n {
                Some(i)
            } else if i > n {
                Some(i - 2 * n)
            } else {
                None
            }
        };
        let mut data = vec![Complex64::new(0.0, 0.0); self.padded_len()];
        data.par_chunks_mut(m * m).enumerate().for_each(|(i, plane)| {
            let Some(di) = wrap(i) else { return };
            for j in 0..m {
                let Some(dj) = wrap(j) else { continue };
                for k in 0..m {
                    let Some(dk) = wrap(k) else { continue };
                    plane[j * m + k] = Complex64::new(table([di, dj, dk]), 0.0);
                }
            }
        });
        self.transform(&mut data, false);
        KernelSpectrum(data.into_iter().map(|c| c.re).collect())
    }

    /// Spectrum of a real source given on the physical box (length `N^3`).
    pub fn source_spectrum(&self, src: &[f64]) -> SourceSpectrum {
        assert_eq!(src.len(), self.n * self.n * self.n);
        let (n, m) = (self.n, self.m);
        let mut data = vec![Complex64::new(0.0, 0.0); self.padded_len()];
        data.par_chunks_mut(m * m).take(n).enumerate().for_each(|(i, plane)| {
            for j in 0..n {
                let s = (i * n + j) * n;
                for k in 0..n {
                    plane[j * m + k] = Complex64::new(src[s + k], 0.0);
                }
            }
        });
        self.transform(&mut data, false);
        SourceSpectrum(data)
    }

    /// Inverse transform of `sum_t kernel_t * source_t` for two independent
    /// products at once; returns both real outputs cropped to the box.
    ///
    /// `second` may be empty, in which case the second output is all zeros.
    pub fn inverse_pair(
        &self,
        first: &[(&KernelSpectrum, &SourceSpectrum)],
        second: &[(&KernelSpectrum, &SourceSpectrum)],
    ) -> (Vec<f64>, Vec<f64>) {
        let len = self.padded_len();
        let i_unit = Complex64::new(0.0, 1.0);
        let mut data: Vec<Complex64> = (0..len)
            .into_par_iter()
            .map(|p| {
                let mut a = Complex64::new(0.0, 0.0);
                for (k, s) in first {
                    a += s.0[p] * k.0[p];
                }
                let mut b = Complex64::new(0.0, 0.0);
                for (k, s) in second {
                    b += s.0[p] * k.0[p];
                }
                a + i_unit * b
            })
            .collect();
        self.transform(&mut data, true);
        let (n, m) = (self.n, self.m);
        let norm = 1.0 / len as f64;
        let mut re = vec![0.0; n * n * n];
        let mut im = vec![0.0; n * n * n];
        re.par_chunks_mut(n * n)
            .zip(im.par_chunks_mut(n * n))
            .enumerate()
            .for_each(|(i, (pr, pi))| {
                for j in 0..n {
                    for k in 0..n {
                        let c = data[(i * m + j) * m + k];
                        pr[j * n + k] = c.re * norm;
                        pi[j * n + k] = c.im * norm;
                    }
                }
            });
        (re, im)
    }

    /// Single convolution `K * s` on the box.
    pub fn convolve(&self, kernel: &KernelSpectrum, src: &[f64]) -> Vec<f64> {
        let s = self.source_spectrum(src);
        self.inverse_pair(&[(kernel, &s)], &[]).0
    }
}

//! Two-dimensional FFTs on row-major `N×N` grids, with plans cached per size.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transform(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    assert_eq!(data.len(), n * n, "grid is not N×N");
    // rows (second index) are contiguous
    fft.process(data);
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..n {
        for j in 0..n {
            column[j] = data[j * n + l];
        }
        fft.process(&mut column);
        for j in 0..n {
            data[j * n + l] = column[j];
        }
    }
}

/// Unnormalized forward transform `û[m,k] = Σ u[j,l] e^{-2πi(mj + kl)/N}`.
pub fn forward(data: &mut [Complex64], n: usize) {
    transform(data, n, &plan(n).forward);
}

/// Inverse transform including the `1/N²` factor.
pub fn inverse(data: &mut [Complex64], n: usize) {
    transform(data, n, &plan(n).inverse);
    let scale = 1.0 / (n * n) as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Signed frequency of FFT index `j`, in `[−N/2, N/2 − 1]`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// `(∂_s u, ∂_t u)` of periodic grid data in lattice coordinates `(s, t)`,
/// with the Nyquist bins dropped.
pub fn gradient(data: &[Complex64], n: usize) -> [Vec<Complex64>; 2] {
    let mut hat = data.to_vec();
    forward(&mut hat, n);
    let mut ds = hat.clone();
    let mut dt = hat;
    for j in 0..n {
        for l in 0..n {
            let i = j * n + l;
            let (m, k) = (signed_index(j, n), signed_index(l, n));
            let nyquist = -(n as i64) / 2;
            ds[i] *= if m == nyquist { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, 2.0 * PI * m as f64) };
            dt[i] *= if k == nyquist { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, 2.0 * PI * k as f64) };
        }
    }
    inverse(&mut ds, n);
    inverse(&mut dt, n);
    [ds, dt]
}

/// Trigonometric interpolant of several grid functions sharing one mode
/// shift `(a₀, b₀)`: channel `c` is `Σ ĉ[m,k] e^{2πi((m+a₀)s + (k+b₀)t)}`.
/// With zero shift the Nyquist bins are split evenly between `±N/2`, so real
/// data interpolates to real values.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    channels: usize,
    terms: Vec<(f64, f64, Vec<Complex64>)>,
}

impl TrigInterpolant {
    pub fn new(data: &[&[Complex64]], n: usize, shift: [f64; 2]) -> Self {
        let nn = (n * n) as f64;
        let spectra: Vec<Vec<Complex64>> = data
            .iter()
            .map(|d| {
                let mut h = d.to_vec();
                forward(&mut h, n);
                h
            })
            .collect();
        let half = n as f64 / 2.0;
        let mut terms = Vec::new();
        for j in 0..n {
            for l in 0..n {
                let i = j * n + l;
                let coeffs: Vec<Complex64> = spectra.iter().map(|h| h[i] / nn).collect();
                if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
                    continue;
                }
                let a = signed_index(j, n) as f64 + shift[0];
                let b = signed_index(l, n) as f64 + shift[1];
                let a_opts: &[f64] = if a == -half { &[-half, half] } else { &[a] };
                let b_opts: &[f64] = if b == -half { &[-half, half] } else { &[b] };
                let share = 1.0 / (a_opts.len() * b_opts.len()) as f64;
                for &aa in a_opts {
                    for &bb in b_opts {
                        terms.push((aa, bb, coeffs.iter().map(|c| c * share).collect()));
                    }
                }
            }
        }
        Self {
            channels: data.len(),
            terms,
        }
    }

    pub fn value(&self, s: f64, t: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.channels];
        for (a, b, coeffs) in &self.terms {
            let e = Complex64::from_polar(1.0, 2.0 * PI * (a * s + b * t));
            for (o, c) in out.iter_mut().zip(coeffs) {
                *o += c * e;
            }
        }
        out
    }

    /// Values and first derivatives `(u, ∂_s u, ∂_t u)` per channel.
    pub fn jet(&self, s: f64, t: f64) -> [Vec<Complex64>; 3] {
        let zero = vec![Complex64::new(0.0, 0.0); self.channels];
        let mut out = [zero.clone(), zero.clone(), zero];
        for (a, b, coeffs) in &self.terms {
            let e = Complex64::from_polar(1.0, 2.0 * PI * (a * s + b * t));
            let ds = Complex64::new(0.0, 2.0 * PI * a) * e;
            let dt = Complex64::new(0.0, 2.0 * PI * b) * e;
            for (ch, c) in coeffs.iter().enumerate() {
                out[0][ch] += c * e;
                out[1][ch] += c * ds;
                out[2][ch] += c * dt;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (0.3 * i as f64).cos()))
            .collect();
        let mut work = data.clone();
        forward(&mut work, n);
        inverse(&mut work, n);
        for (a, b) in data.iter().zip(&work) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn pure_wave_lands_on_one_bin() {
        let n = 8;
        let (m, k) = (2i64, -3i64);
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let (j, l) = ((i / n) as f64, (i % n) as f64);
                let phase = 2.0 * std::f64::consts::PI * (m as f64 * j + k as f64 * l) / n as f64;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        forward(&mut data, n);
        for (i, z) in data.iter().enumerate() {
            let (j, l) = (i / n, i % n);
            let hit = signed_index(j, n) == m && signed_index(l, n) == k;
            let expect = if hit { (n * n) as f64 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_of_smooth_function() {
        let n = 16;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
                Complex64::new((2.0 * PI * s).sin() * (4.0 * PI * t).cos(), 0.0)
            })
            .collect();
        let [ds, dt] = gradient(&data, n);
        for i in 0..n * n {
            let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
            let es = 2.0 * PI * (2.0 * PI * s).cos() * (4.0 * PI * t).cos();
            let et = -4.0 * PI * (2.0 * PI * s).sin() * (4.0 * PI * t).sin();
            assert!((ds[i].re - es).abs() < 1e-11 && (dt[i].re - et).abs() < 1e-11);
        }
    }

    #[test]
    fn interpolant_reproduces_samples_and_stays_real() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new(((i * 7 + 3) % 11) as f64, 0.0))
            .collect();
        let interp = TrigInterpolant::new(&[&data], n, [0.0, 0.0]);
        for (i, d) in data.iter().enumerate() {
            let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
            assert!((interp.value(s, t)[0] - d).norm() < 1e-12);
        }
        assert!(interp.value(0.123, 0.456)[0].im.abs() < 1e-12);
    }
}

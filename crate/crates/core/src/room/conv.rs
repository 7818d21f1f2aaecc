use num_complex::Complex64;
use rustfft::FftPlanner;

/// Linear convolution `x * h`, truncated to `out_len` samples.
///
/// Kernels whose non-zero support is short are applied directly; longer ones
/// go through an FFT of the full linear-convolution length.
pub fn convolve(x: &[f64], h: &[f64], out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    let Some(first) = h.iter().position(|&v| v != 0.0) else {
        return out;
    };
    let last = h.iter().rposition(|&v| v != 0.0).unwrap_or(first);
    if x.is_empty() {
        return out;
    }
    if last - first < 256 {
        for (k, &hk) in h.iter().enumerate().take(last + 1).skip(first) {
            if hk == 0.0 || k >= out_len {
                continue;
            }
            for (o, &xv) in out[k..].iter_mut().zip(x) {
                *o += hk * xv;
            }
        }
        return out;
    }

    let full = x.len() + h.len() - 1;
    let n = full.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut a: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(n, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    for (o, z) in out.iter_mut().zip(a.iter().take(full)) {
        *o = z.re * scale;
    }
    out
}

//! Multi-dimensional FFT over a row-major `[m; d]` grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place transform along every axis. Forward uses `e(−k·x/m)`; inverse is unnormalized.
pub fn fftn(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::new();
    let mut stride = total;
    for &len in shape {
        stride /= len;
        if len == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let mut line = vec![Complex64::default(); len];
        let block = len * stride;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                for k in 0..len {
                    line[k] = data[start + off + k * stride];
                }
                fft.process(&mut line);
                for k in 0..len {
                    data[start + off + k * stride] = line[k];
                }
            }
        }
    }
}

/// Inverse transform normalized by `1/total`.
pub fn ifftn(data: &mut [Complex64], shape: &[usize]) {
    fftn(data, shape, true);
    let s = 1.0 / data.len() as f64;
    for x in data.iter_mut() {
        *x *= s;
    }
}

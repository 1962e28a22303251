use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized forward transform, `X_k = sum x_m e^{-2 pi i k m / n}`.
pub(crate) fn forward(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place unnormalized inverse transform, `x_m = sum X_k e^{+2 pi i k m / n}`.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_sum() {
        let x: Vec<Complex64> = (0..7)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let mut y = x.clone();
        forward(&mut y);
        for (k, yk) in y.iter().enumerate() {
            let direct: Complex64 = x
                .iter()
                .enumerate()
                .map(|(m, xm)| xm * Complex64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / 7.0))
                .sum();
            assert!((yk - direct).norm() < 1e-12);
        }
        inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / 7.0 - b).norm() < 1e-12);
        }
    }
}

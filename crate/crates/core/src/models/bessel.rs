//! Modified Bessel function of the second kind for real order.
//!
//! Temme's series for `x < 2`, Steed's continued fraction otherwise, then
//! forward recurrence in the order.

use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

fn chebyshev(c: &[f64], x: f64) -> f64 {
    let y2 = 2.0 * x;
    let (mut d, mut dd) = (0.0, 0.0);
    for &cj in c[1..].iter().rev() {
        let sv = d;
        d = y2 * d - dd + cj;
        dd = sv;
    }
    x * d - dd + 0.5 * c[0]
}

/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` for `|mu| <= 1/2`.
fn gamma_terms(mu: f64) -> (f64, f64, f64, f64) {
    const C1: [f64; 7] = [
        -1.142022680371168e0,
        6.5165112670737e-3,
        3.087090173086e-4,
        -3.4706269649e-6,
        6.9437664e-9,
        3.67795e-11,
        -1.356e-13,
    ];
    const C2: [f64; 8] = [
        1.843740587300905e0,
        -7.68528408447867e-2,
        1.2719271366546e-3,
        -4.9717367042e-6,
        -3.31261198e-8,
        2.423096e-10,
        -1.702e-13,
        -1.49e-15,
    ];
    let xx = 8.0 * mu * mu - 1.0;
    let gam1 = chebyshev(&C1, xx);
    let gam2 = chebyshev(&C2, xx);
    (gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1)
}

/// `(e^x K_mu(x), e^x K_{mu+1}(x))` for `|mu| <= 1/2`.
fn base_pair_scaled(mu: f64, x: f64) -> (f64, f64) {
    let xi2 = 2.0 / x;
    if x < 2.0 {
        let mu2 = mu * mu;
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = gamma_terms(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let scale = x.exp();
        (sum * scale, sum1 * xi2 * scale)
    } else {
        let a1 = 0.25 - mu * mu;
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let (mut q1, mut q2) = (0.0, 1.0);
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let kmu = (PI / (2.0 * x)).sqrt() / s;
        (kmu, kmu * (mu + x + 0.5 - h) / x)
    }
}

/// `e^x K_nu(x)` for `nu >= 0`, `x > 0`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0 && nu >= 0.0);
    let nu = nu.abs();
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut k0, mut k1) = base_pair_scaled(mu, x);
    let xi2 = 2.0 / x;
    for i in 1..=(nl as usize) {
        let next = (mu + i as f64) * xi2 * k1 + k0;
        k0 = k1;
        k1 = next;
    }
    k0
}

/// `K_nu(x)` for `nu >= 0`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    /// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` by composite Simpson.
    fn k_by_quadrature(nu: f64, x: f64) -> f64 {
        let upper = (1.0 + 80.0 / x).acosh() + 2.0;
        let m = 200_000;
        let h = upper / m as f64;
        let f = |t: f64| (-x * t.cosh() + x).exp() * (nu * t).cosh();
        let mut s = f(0.0) + f(upper);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 * (-x).exp()
    }

    #[test]
    fn half_integer_orders_are_elementary() {
        for &x in &[1e-3, 0.1, 1.0, 1.999, 2.0, 5.0, 40.0, 300.0] {
            let k12 = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert_relative_eq!(bessel_k(0.5, x), k12, max_relative = 1e-13);
            assert_relative_eq!(bessel_k(1.5, x), k12 * (1.0 + 1.0 / x), max_relative = 1e-13);
            assert_relative_eq!(
                bessel_k(2.5, x),
                k12 * (1.0 + 3.0 / x + 3.0 / (x * x)),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn gamma_terms_match_gamma_function() {
        for &mu in &[-0.5, -0.3, -0.01, 0.0, 0.2, 0.45, 0.5] {
            let (g1, g2, gp, gm) = gamma_terms(mu);
            assert_relative_eq!(gp, 1.0 / gamma(1.0 + mu), max_relative = 1e-14);
            assert_relative_eq!(gm, 1.0 / gamma(1.0 - mu), max_relative = 1e-14);
            assert_relative_eq!(g2, 0.5 * (gm + gp), max_relative = 1e-14);
            if mu.abs() > 0.1 {
                assert_relative_eq!(g1, (gm - gp) / (2.0 * mu), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn agrees_with_integral_representation() {
        for &nu in &[0.0, 0.1, 0.4, 1.0, 1.3, 2.7, 6.2] {
            for &x in &[0.05, 0.5, 1.9, 2.1, 7.5, 30.0] {
                let got = bessel_k(nu, x);
                let want = k_by_quadrature(nu, x);
                assert_relative_eq!(got, want, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn small_argument_limit() {
        // x^nu K_nu(x) -> 2^{nu-1} Gamma(nu), with a relative correction of order x^{2 nu}.
        for &nu in &[0.3, 1.0, 2.2] {
            let x: f64 = 1e-25;
            let lim = 2f64.powf(nu - 1.0) * gamma(nu);
            assert_relative_eq!(x.powf(nu) * bessel_k(nu, x), lim, max_relative = 1e-10);
        }
    }

    #[test]
    fn scaled_form_survives_large_arguments() {
        let x = 2000.0;
        assert_relative_eq!(bessel_k_scaled(0.5, x), (PI / (2.0 * x)).sqrt(), max_relative = 1e-13);
        assert_eq!(bessel_k(0.5, x), 0.0);
    }

    proptest! {
        #[test]
        fn order_recurrence(nu in 1.0f64..8.0, x in 0.01f64..80.0) {
            let lhs = bessel_k(nu + 1.0, x);
            let rhs = bessel_k(nu - 1.0, x) + 2.0 * nu / x * bessel_k(nu, x);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs());
        }

        #[test]
        fn positive_and_decreasing(nu in 0.0f64..5.0, x in 0.01f64..50.0) {
            let a = bessel_k(nu, x);
            prop_assert!(a > 0.0);
            prop_assert!(bessel_k(nu, x * 1.01) < a);
        }
    }
}

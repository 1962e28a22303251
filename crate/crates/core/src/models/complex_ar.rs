use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widely linear AR(1): `Z_t = a Z_{t-1} + b conj(Z_{t-1}) + eps_t` with
/// `a = lambda1 e^{i phi1}`, `b = lambda2 e^{i phi2}`, `E|eps|^2 = sigma2`
/// and `E[eps^2] = relation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexAr {
    pub lambda1: f64,
    pub phi1: f64,
    pub lambda2: f64,
    pub phi2: f64,
    pub sigma2: f64,
    /// Noise relation `E[eps^2]`; `None` aligns it with the `b` coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Complex64>,
}

/// Real state-space form of the recursion on `U_t = (X_t, Y_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealVar1 {
    pub a: [[f64; 2]; 2],
    pub q: [[f64; 2]; 2],
}

impl ComplexAr {
    pub fn a(&self) -> Complex64 {
        Complex64::from_polar(self.lambda1, self.phi1)
    }

    pub fn b(&self) -> Complex64 {
        Complex64::from_polar(self.lambda2, self.phi2)
    }

    /// Noise relation, defaulting to modulus `sigma2 lambda2 / (lambda1 + lambda2)`
    /// at angle `phi2`.
    pub fn noise_relation(&self) -> Complex64 {
        self.relation.unwrap_or_else(|| {
            let total = self.lambda1 + self.lambda2;
            let ratio = if total > 0.0 { self.lambda2 / total } else { 0.0 };
            Complex64::from_polar(self.sigma2 * ratio, self.phi2)
        })
    }

    pub fn is_proper(&self) -> bool {
        self.lambda2 == 0.0 && self.noise_relation().norm() == 0.0
    }

    pub fn real_form(&self) -> RealVar1 {
        let (a, b) = (self.a(), self.b());
        let r = self.noise_relation();
        RealVar1 {
            a: [[a.re + b.re, b.im - a.im], [a.im + b.im, a.re - b.re]],
            q: [
                [(self.sigma2 + r.re) / 2.0, r.im / 2.0],
                [r.im / 2.0, (self.sigma2 - r.re) / 2.0],
            ],
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        let a = self.real_form().a;
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
        } else {
            det.abs().sqrt()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
            return Err(Error::Domain("AR moduli must be nonnegative".into()));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "innovation variance must be positive, got {}",
                self.sigma2
            )));
        }
        if !self.phi1.is_finite() || !self.phi2.is_finite() {
            return Err(Error::Domain("AR phases must be finite".into()));
        }
        if self.noise_relation().norm() >= self.sigma2 {
            return Err(Error::Validity(
                "noise relation modulus must be below the innovation variance".into(),
            ));
        }
        let rho = self.spectral_radius();
        if rho >= 1.0 {
            return Err(Error::Nonstationary(format!(
                "spectral radius {rho} of the real-form transition is not below 1"
            )));
        }
        Ok(())
    }

    /// Stationary covariance `Gamma0 = A Gamma0 A^T + Q`.
    pub fn stationary_covariance(&self) -> Result<[[f64; 2]; 2]> {
        self.validate()?;
        let RealVar1 { a, q } = self.real_form();
        // Unknowns (g00, g01, g11) of the symmetric solution.
        let (a00, a01, a10, a11) = (a[0][0], a[0][1], a[1][0], a[1][1]);
        let m = [
            [1.0 - a00 * a00, -2.0 * a00 * a01, -a01 * a01],
            [-a00 * a10, 1.0 - (a00 * a11 + a01 * a10), -a01 * a11],
            [-a10 * a10, -2.0 * a10 * a11, 1.0 - a11 * a11],
        ];
        let rhs = [q[0][0], q[0][1], q[1][1]];
        let g = solve3(m, rhs).ok_or_else(|| Error::Nonstationary("singular Lyapunov system".into()))?;
        Ok([[g[0], g[1]], [g[1], g[2]]])
    }

    /// `(s_ZZ(k), r_ZZ(k))` for `k = 0..n` (unit lags).
    pub fn moments(&self, n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let g0 = self.stationary_covariance()?;
        let a = self.real_form().a;
        let mut g = g0;
        let mut s = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for _ in 0..n {
            s.push(Complex64::new(g[0][0] + g[1][1], g[1][0] - g[0][1]));
            r.push(Complex64::new(g[0][0] - g[1][1], g[0][1] + g[1][0]));
            g = matmul(a, g);
        }
        Ok((s, r))
    }

    /// Lags needed before the autocovariance falls below `tol` relative to lag 0.
    pub fn decay_length(&self, tol: f64) -> usize {
        let rho = self.spectral_radius().max(1e-3);
        ((tol.ln() / rho.ln()).ceil() as usize + 8).max(16)
    }

    /// Burn-in for recursive simulation.
    pub fn burn_in(&self) -> usize {
        (50.0 / (1.0 - self.spectral_radius())).ceil() as usize
    }

    pub fn wrapped(mut self) -> Self {
        self.phi1 = crate::series::wrap_angle(self.phi1);
        self.phi2 = crate::series::wrap_angle(self.phi2);
        self
    }
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

pub fn complex_ar_moments(spec: &ComplexAr, n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    spec.moments(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn proper_ar_has_geometric_moments() {
        let m = ComplexAr {
            lambda1: 0.6,
            phi1: 0.4,
            lambda2: 0.0,
            phi2: 0.0,
            sigma2: 2.0,
            relation: None,
        };
        let (s, r) = m.moments(6).unwrap();
        let var = 2.0 / (1.0 - 0.36);
        for (k, v) in s.iter().enumerate() {
            let want = Complex64::from_polar(var * 0.6f64.powi(k as i32), 0.4 * k as f64);
            assert!((v - want).norm() < 1e-12, "{v} vs {want}");
        }
        assert!(r.iter().all(|v| v.norm() < 1e-12));
        assert!(m.is_proper());
    }

    #[test]
    fn nonstationary_is_rejected() {
        let m = ComplexAr {
            lambda1: 0.7,
            phi1: 0.0,
            lambda2: 0.5,
            phi2: 0.0,
            sigma2: 1.0,
            relation: None,
        };
        assert!(matches!(m.moments(3), Err(Error::Nonstationary(_))));
    }

    #[test]
    fn aligned_noise_relation() {
        let m = ComplexAr {
            lambda1: 0.6,
            phi1: 0.0,
            lambda2: 0.2,
            phi2: 1.0,
            sigma2: 4.0,
            relation: None,
        };
        let r = m.noise_relation();
        assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.arg(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn moments_match_long_simulation() {
        let m = ComplexAr {
            lambda1: 0.5,
            phi1: 0.7,
            lambda2: 0.3,
            phi2: -0.4,
            sigma2: 1.0,
            relation: Some(Complex64::new(0.2, -0.1)),
        };
        let (s, r) = m.moments(3).unwrap();
        let v = m.real_form();
        let l00 = v.q[0][0].sqrt();
        let l10 = v.q[1][0] / l00;
        let l11 = (v.q[1][1] - l10 * l10).sqrt();
        let (a, b) = (m.a(), m.b());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let mut z = Complex64::new(0.0, 0.0);
        let mut xs = Vec::with_capacity(n);
        for t in 0..n + 200 {
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            let eps = Complex64::new(l00 * e1, l10 * e1 + l11 * e2);
            z = a * z + b * z.conj() + eps;
            if t >= 200 {
                xs.push(z);
            }
        }
        for lag in 0..3 {
            let (mut es, mut er) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for t in 0..n - lag {
                es += xs[t + lag] * xs[t].conj();
                er += xs[t + lag] * xs[t];
            }
            es /= (n - lag) as f64;
            er /= (n - lag) as f64;
            assert!((es - s[lag]).norm() < 0.03, "lag {lag}: {es} vs {}", s[lag]);
            assert!((er - r[lag]).norm() < 0.03, "lag {lag}: {er} vs {}", r[lag]);
        }
    }

    proptest! {
        #[test]
        fn lyapunov_solution_is_fixed_point(l1 in 0.0f64..0.6, p1 in -3.0f64..3.0, l2 in 0.0f64..0.35,
                                            p2 in -3.0f64..3.0, s2 in 0.1f64..5.0) {
            let m = ComplexAr { lambda1: l1, phi1: p1, lambda2: l2, phi2: p2, sigma2: s2, relation: None };
            let g = m.stationary_covariance().unwrap();
            let RealVar1 { a, q } = m.real_form();
            let ag = matmul(a, g);
            let at = [[a[0][0], a[1][0]], [a[0][1], a[1][1]]];
            let agat = matmul(ag, at);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((g[i][j] - agat[i][j] - q[i][j]).abs() < 1e-10 * (1.0 + g[i][j].abs()));
                }
            }
            let (s, r) = m.moments(1).unwrap();
            prop_assert!(s[0].im.abs() < 1e-12);
            prop_assert!(r[0].norm() <= s[0].re + 1e-12);
        }
    }
}

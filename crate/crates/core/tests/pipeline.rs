use num_complex::Complex64;

use whittle::likelihood::{blurred_model_spectrum, ModelSpectra};
use whittle::models::{Coherence, ModelSpec, RotaryMatern};
use whittle::simulate::{lrt_preset, preset, run_benchmark, run_lrt_study, Embedding, Simulator, TABLE2_MATERN};
use whittle::spectral::{make_taper, rotary_cross_estimate, rotary_dft, TaperKind};

#[test]
fn differencing_tames_dynamic_range() {
    let mut plan = preset("table3", 40, 12).unwrap();
    let keep = ["Maximum likelihood", "Standard (pdgm)", "Blurred (pdgm)"];
    plan.methods.retain(|m| keep.contains(&m.label.as_str()));
    let report = run_benchmark(&plan).unwrap();
    let sd = |label: &str| report.row(label).unwrap().parameters[0].sd_pct;
    let ml = sd("Maximum likelihood");
    assert!(sd("Blurred (pdgm)") <= 1.3 * ml, "blurred {} ml {ml}", sd("Blurred (pdgm)"));
    assert!(sd("Standard (pdgm)") > 5.0 * ml, "standard {} ml {ml}", sd("Standard (pdgm)"));
}

#[test]
fn benchmark_rows_satisfy_rmse_identity() {
    let mut plan = preset("table2", 12, 4).unwrap();
    plan.n = 256;
    plan.methods.truncate(3);
    let report = run_benchmark(&plan).unwrap();
    for row in &report.rows {
        assert_eq!(row.failures, 0, "{}", row.label);
        for p in &row.parameters {
            let lhs = p.rmse_pct * p.rmse_pct;
            let rhs = p.bias_pct * p.bias_pct + p.sd_pct * p.sd_pct;
            assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0), "{} {}", row.label, p.name);
        }
    }
}

/// Mean rotary cross-periodogram against the blurred relation spectrum,
/// returning the largest z-score over the real and imaginary parts.
fn cross_spectrum_z(coherence: Coherence, reps: u64) -> (f64, Vec<Complex64>, Vec<f64>) {
    let n = 256;
    let spec = ModelSpec::RotaryMatern(RotaryMatern {
        plus: TABLE2_MATERN,
        minus: TABLE2_MATERN,
        coherence,
    });
    let taper = make_taper(TaperKind::Uniform, n).unwrap();
    let (s, r) = match blurred_model_spectrum(&spec, n, 1.0, &taper).unwrap() {
        ModelSpectra::Complex { s, r } => (s, r),
        ModelSpectra::Real(_) => unreachable!(),
    };
    let sim = Simulator::new(&spec, n, 1.0, 21, Embedding::Circulant).unwrap();
    let mut sum: Vec<Complex64> = Vec::new();
    let mut sum2: Vec<(f64, f64)> = Vec::new();
    let mut indices = Vec::new();
    for rep in 0..reps {
        let est = rotary_cross_estimate(&rotary_dft(&sim.draw(rep), &taper).unwrap());
        if sum.is_empty() {
            sum = vec![Complex64::new(0.0, 0.0); est.s_pm.len()];
            sum2 = vec![(0.0, 0.0); est.s_pm.len()];
            indices = est.grid.indices().to_vec();
        }
        for (k, v) in est.s_pm.iter().enumerate() {
            sum[k] += v;
            sum2[k].0 += v.re * v.re;
            sum2[k].1 += v.im * v.im;
        }
    }
    let m = reps as f64;
    let mut worst: f64 = 0.0;
    let mut expected = Vec::new();
    let mut normalized = Vec::new();
    for (k, &j) in indices.iter().enumerate() {
        let j = j as usize;
        if j == 0 {
            continue;
        }
        let mean = sum[k] / m;
        let var_re = (sum2[k].0 - m * mean.re * mean.re) / (m - 1.0);
        let var_im = (sum2[k].1 - m * mean.im * mean.im) / (m - 1.0);
        let want = r[j % n];
        worst = worst.max((mean.re - want.re).abs() / (var_re / m).sqrt());
        worst = worst.max((mean.im - want.im).abs() / (var_im / m).sqrt());
        expected.push(want);
        normalized.push(want.re / (s[j % n] * s[(n - j) % n]).sqrt());
    }
    (worst, expected, normalized)
}

#[test]
fn proper_simulation_has_no_cross_spectrum() {
    let (worst, expected, _) = cross_spectrum_z(Coherence::None, 3000);
    assert!(expected.iter().all(|r| r.norm() == 0.0));
    // Largest of ~256 z-scores; 4 keeps the familywise rate near 1%.
    assert!(worst < 4.0, "max z {worst}");
}

#[test]
fn linear_aniso_cross_spectrum_tracks_coherence() {
    let n = 256.0;
    let c = n / (40.0 * std::f64::consts::PI);
    let rayleigh = 2.0 * std::f64::consts::PI / n;
    let (worst, _, normalized) = cross_spectrum_z(Coherence::LinearAniso { c }, 3000);
    assert!(worst < 4.0, "max z {worst}");
    for (k, rho) in normalized.iter().enumerate() {
        let omega = (k + 1) as f64 * rayleigh;
        let tri = (1.0 - c * omega).max(0.0);
        // Blurring rounds the kink over a couple of Fourier bins.
        if (omega - 1.0 / c).abs() < 2.0 * rayleigh {
            continue;
        }
        assert!((rho - tri).abs() < 0.05, "omega {omega}: {rho} vs {tri}");
    }
}

#[test]
fn lrt_detects_strong_anisotropy() {
    let study = run_lrt_study(&lrt_preset(true, 4, 13)).unwrap();
    assert_eq!(study.completed, 4);
    assert!(study.statistics.iter().flatten().all(|w| *w >= 0.0));
    assert!(study.rejections >= 3, "{:?}", study.p_values);
}

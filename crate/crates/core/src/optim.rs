//! Derivative-free simplex minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    /// Simplex diameter tolerance (infinity norm, optimizer coordinates).
    pub xtol: f64,
    /// Objective spread tolerance relative to `max(1, |f_best|)`.
    pub ftol: f64,
    /// Evaluation cap per dimension.
    pub max_evals_per_dim: usize,
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            xtol: 1e-8,
            ftol: 1e-10,
            max_evals_per_dim: 2000,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub diameter: f64,
}

/// Minimizes `f`, treating non-finite values as `+inf`. Each restart rebuilds
/// the simplex around the incumbent; the cap applies to all runs together.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let dim = x0.len();
    let cap = opts.max_evals_per_dim * dim.max(1);
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0, &mut evals);
    let mut converged = false;
    let mut diameter = f64::INFINITY;
    for _ in 0..=opts.restarts {
        let (x, fx, conv, diam) = run(&mut eval, &best_x, best_f, opts, cap, &mut evals);
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = conv;
        diameter = diam;
        if evals >= cap {
            converged = false;
            break;
        }
    }
    Minimum {
        x: best_x,
        value: best_f,
        evaluations: evals,
        converged,
        diameter,
    }
}

fn run(
    eval: &mut impl FnMut(&[f64], &mut usize) -> f64,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
    cap: usize,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool, f64) {
    let dim = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    let mut vals = vec![f0];
    for k in 0..dim {
        let mut p = x0.to_vec();
        p[k] += opts.initial_step;
        vals.push(eval(&p, evals));
        pts.push(p);
    }
    let diameter = |pts: &[Vec<f64>]| {
        pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    };
    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let diam = diameter(&pts);
        let spread = vals[dim] - vals[0];
        if diam < opts.xtol && spread <= opts.ftol * vals[0].abs().max(1.0) {
            return (pts[0].clone(), vals[0], true, diam);
        }
        if *evals >= cap {
            return (pts[0].clone(), vals[0], false, diam);
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|k| pts[..dim].iter().map(|p| p[k]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[dim])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = toward(-1.0);
        let fr = eval(&xr, evals);
        if fr < vals[0] {
            let xe = toward(-2.0);
            let fe = eval(&xe, evals);
            if fe < fr {
                pts[dim] = xe;
                vals[dim] = fe;
            } else {
                pts[dim] = xr;
                vals[dim] = fr;
            }
            continue;
        }
        if fr < vals[dim - 1] {
            pts[dim] = xr;
            vals[dim] = fr;
            continue;
        }
        let xc = toward(if fr < vals[dim] { -0.5 } else { 0.5 });
        let fc = eval(&xc, evals);
        if fc < vals[dim].min(fr) {
            pts[dim] = xc;
            vals[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let p: Vec<f64> = pts[i].iter().zip(&pts[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
            vals[i] = eval(&p, evals);
            pts[i] = p;
        }
    }
}

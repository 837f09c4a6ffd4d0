//! Classical optimizers driven one iteration at a time, so callers can record
//! a trace entry per step.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Nelder–Mead settings. Reflection/expansion/contraction/shrink coefficients
/// follow the dimension-adaptive choice of Gao and Han.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadConfig {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig { initial_step: 0.5 }
    }
}

pub struct NelderMead {
    simplex: Vec<(Vec<f64>, f64)>,
    alpha: f64,
    gamma: f64,
    rho: f64,
    sigma: f64,
    evaluations: usize,
}

impl NelderMead {
    pub fn new<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: Vec<f64>, cfg: NelderMeadConfig) -> Self {
        let n = x0.len();
        let nf = n.max(1) as f64;
        let mut simplex = Vec::with_capacity(n + 1);
        let f0 = f(&x0);
        simplex.push((x0.clone(), f0));
        for i in 0..n {
            let mut x = x0.clone();
            x[i] += cfg.initial_step;
            let fx = f(&x);
            simplex.push((x, fx));
        }
        let mut nm = NelderMead {
            simplex,
            alpha: 1.0,
            gamma: 1.0 + 2.0 / nf,
            rho: 0.75 - 1.0 / (2.0 * nf),
            sigma: 1.0 - 1.0 / nf,
            evaluations: n + 1,
        };
        if n == 1 {
            // adaptive coefficients degenerate in one dimension
            nm.gamma = 2.0;
            nm.rho = 0.5;
            nm.sigma = 0.5;
        }
        nm.sort();
        nm
    }

    fn sort(&mut self) {
        self.simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    }

    pub fn best(&self) -> (&[f64], f64) {
        let (x, f) = &self.simplex[0];
        (x, *f)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Spread of function values across the simplex.
    pub fn value_spread(&self) -> f64 {
        self.simplex.last().map_or(0.0, |w| w.1) - self.simplex[0].1
    }

    /// One reflection/expansion/contraction/shrink move.
    pub fn step<F: FnMut(&[f64]) -> f64>(&mut self, f: &mut F) {
        let n = self.simplex.len() - 1;
        if n == 0 {
            return;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| self.simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
            .collect();
        let worst = self.simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let mut eval = |x: &[f64], count: &mut usize| {
            *count += 1;
            f(x)
        };

        let xr = along(self.alpha);
        let fr = eval(&xr, &mut self.evaluations);
        let (best_f, second_worst_f) = (self.simplex[0].1, self.simplex[n - 1].1);

        if fr < best_f {
            let xe = along(self.alpha * self.gamma);
            let fe = eval(&xe, &mut self.evaluations);
            self.simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < second_worst_f {
            self.simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(self.alpha * self.rho);
                let fc = eval(&xc, &mut self.evaluations);
                (xc, fc)
            } else {
                let xc = along(-self.rho);
                let fc = eval(&xc, &mut self.evaluations);
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                self.simplex[n] = (xc, fc);
            } else {
                let x0 = self.simplex[0].0.clone();
                for i in 1..=n {
                    let x: Vec<f64> = x0
                        .iter()
                        .zip(&self.simplex[i].0)
                        .map(|(b, xi)| b + self.sigma * (xi - b))
                        .collect();
                    let fx = eval(&x, &mut self.evaluations);
                    self.simplex[i] = (x, fx);
                }
            }
        }
        self.sort();
    }
}

/// SPSA gain schedule `a_k = a / (k + 1 + A)^α`, `c_k = c / (k + 1)^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    /// Step gain; `None` calibrates it so the first step moves
    /// `target_step` radians on average.
    pub a: Option<f64>,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub stability: f64,
    pub target_step: f64,
    pub calibration_samples: usize,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            a: None,
            c: 0.2,
            alpha: 0.602,
            gamma: 0.101,
            stability: 10.0,
            target_step: 0.2,
            calibration_samples: 10,
        }
    }
}

pub struct Spsa {
    cfg: SpsaConfig,
    a: f64,
    k: usize,
    rng: ChaCha8Rng,
    theta: Vec<f64>,
}

impl Spsa {
    /// `f` is only called here when the step gain needs calibrating.
    pub fn new<F: FnMut(&[f64]) -> f64>(f: &mut F, theta: Vec<f64>, cfg: SpsaConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = match cfg.a {
            Some(a) => a,
            None => {
                let samples = cfg.calibration_samples.max(1);
                let mut mean_grad = 0.0;
                for _ in 0..samples {
                    let delta = rademacher(&mut rng, theta.len());
                    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + cfg.c * d).collect();
                    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - cfg.c * d).collect();
                    mean_grad += ((f(&plus) - f(&minus)) / (2.0 * cfg.c)).abs() / samples as f64;
                }
                if mean_grad > 0.0 && mean_grad.is_finite() {
                    cfg.target_step * (1.0 + cfg.stability).powf(cfg.alpha) / mean_grad
                } else {
                    cfg.target_step
                }
            }
        };
        Spsa { cfg, a, k: 0, rng, theta }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn gain(&self) -> f64 {
        self.a
    }

    /// One simultaneous-perturbation update; returns the two probe values.
    pub fn step<F: FnMut(&[f64]) -> f64>(&mut self, f: &mut F) -> (f64, f64) {
        let k = self.k as f64;
        let ak = self.a / (k + 1.0 + self.cfg.stability).powf(self.cfg.alpha);
        let ck = self.cfg.c / (k + 1.0).powf(self.cfg.gamma);
        let delta = rademacher(&mut self.rng, self.theta.len());
        let plus: Vec<f64> = self.theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
        let minus: Vec<f64> = self.theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
        let (yp, ym) = (f(&plus), f(&minus));
        let diff = (yp - ym) / (2.0 * ck);
        for (t, d) in self.theta.iter_mut().zip(&delta) {
            *t -= ak * diff / d;
        }
        self.k += 1;
        (yp, ym)
    }
}

fn rademacher(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

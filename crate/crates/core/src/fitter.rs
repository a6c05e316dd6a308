//! Least-squares fitting of coupling-matrix entries on a topology mask to a
//! target response, with seeded multistart for global character.

use crate::error::{Error, Result};
use crate::matrix::{CouplingMatrix, TopologyMask};
use crate::optim;
use crate::prototype::CharPoly;
use crate::response::{eval_lowpass_point, linspace, FrequencyPlan, SParamSweep, TwoPort};

/// Per-band residual weights, with an optional boost around target
/// transmission zeros to pin them.
#[derive(Debug, Clone)]
pub struct Weights {
    pub passband: f64,
    pub stopband: f64,
    /// Frequencies (Hz) whose neighborhoods get the boost.
    pub tz_freqs_hz: Vec<f64>,
    pub tz_boost: f64,
    /// Half-width of each boosted window as a fraction of the zero frequency.
    pub tz_window: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            passband: 1.0,
            stopband: 1.0,
            tz_freqs_hz: Vec::new(),
            tz_boost: 10.0,
            tz_window: 0.02,
        }
    }
}

impl Weights {
    fn validate(&self) -> Result<()> {
        let vals = [self.passband, self.stopband, self.tz_boost, self.tz_window];
        if vals.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        if self.passband == 0.0 && self.stopband == 0.0 {
            return Err(Error::InvalidInput("weights must not all be zero".into()));
        }
        Ok(())
    }

    fn at(&self, plan: &FrequencyPlan, f_hz: f64) -> f64 {
        let omega = (plan.f0_hz() / plan.bw_hz()) * (f_hz / plan.f0_hz() - plan.f0_hz() / f_hz);
        let mut w = if omega.abs() <= 1.0 {
            self.passband
        } else {
            self.stopband
        };
        for &fz in &self.tz_freqs_hz {
            if (f_hz - fz).abs() <= self.tz_window * fz {
                w *= self.tz_boost;
            }
        }
        w
    }
}

/// What the fit matches: measured/model data or synthesized polynomials.
#[derive(Debug, Clone)]
pub enum FitTarget {
    Sweep(SParamSweep),
    Polynomials(CharPoly),
}

/// A masked coupling-matrix fitting problem.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub mask: TopologyMask,
    pub initial: CouplingMatrix,
    pub plan: FrequencyPlan,
    pub target: FitTarget,
    pub weights: Weights,
    /// Per-free-entry bounds ordered like `mask.free_positions()`;
    /// `None` means +/-3 in normalized units everywhere.
    pub bounds: Option<Vec<(f64, f64)>>,
}

/// Iteration and multistart controls.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub multistart_count: usize,
    pub seed: u64,
    /// Worker threads for the multistart phase; results are identical for
    /// any value because the reduction is by (cost, start index).
    pub threads: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 5000,
            tol: 1e-10,
            multistart_count: 8,
            seed: 0,
            threads: 1,
        }
    }
}

/// Outcome of `fit_matrix`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub matrix: CouplingMatrix,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best-so-far cost trace, (cumulative iteration, cost), non-increasing.
    pub history: Vec<(usize, f64)>,
    pub seed: u64,
}

/// Weighted mean of |S11_model - S11_target|^2 + |S21_model - S21_target|^2
/// over the target grid. The model is evaluated lossless on that grid.
pub fn response_error(
    m: &CouplingMatrix,
    plan: &FrequencyPlan,
    target: &SParamSweep,
    weights: &Weights,
) -> Result<f64> {
    weights.validate()?;
    if target.is_empty() {
        return Err(Error::InvalidInput("empty target sweep".into()));
    }
    let samples = sweep_samples(plan, target, weights)?;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for s in &samples {
        let pt = eval_lowpass_point(m, s.lambda, 0.0).ok_or(Error::Singular {
            freq: s.lambda,
            unit: "(normalized)",
        })?;
        acc += s.weight * ((pt.s11 - s.target.s11).norm_sqr() + (pt.s21 - s.target.s21).norm_sqr());
        wsum += s.weight;
    }
    Ok(acc / wsum)
}

struct Sample {
    lambda: f64,
    target: TwoPort,
    weight: f64,
}

fn sweep_samples(
    plan: &FrequencyPlan,
    target: &SParamSweep,
    weights: &Weights,
) -> Result<Vec<Sample>> {
    target
        .freqs_hz()
        .iter()
        .zip(target.points().iter())
        .map(|(&f, &pt)| {
            Ok(Sample {
                lambda: plan.normalized_frequency(f)?,
                target: pt,
                weight: weights.at(plan, f),
            })
        })
        .collect()
}

fn poly_samples(cp: &CharPoly, weights: &Weights) -> Vec<Sample> {
    linspace(-3.0, 3.0, 201)
        .into_iter()
        .map(|omega| {
            let mut w = if omega.abs() <= 1.0 {
                weights.passband
            } else {
                weights.stopband
            };
            for &wz in cp.tz_omegas() {
                if (omega - wz).abs() <= weights.tz_window * (1.0 + wz.abs()) {
                    w *= weights.tz_boost;
                }
            }
            Sample {
                lambda: omega,
                target: TwoPort {
                    s11: cp.s11(omega),
                    s21: cp.s21(omega),
                    s12: cp.s21(omega),
                    s22: cp.s11(omega),
                },
                weight: w,
            }
        })
        .collect()
}

/// Fit the mask's free entries to the target response.
///
/// Deterministic for a fixed problem and seed: start 0 is the caller's
/// initial matrix, further starts add seeded jitter, every start runs to
/// completion, and the reduction picks the lowest cost with start-index
/// tie-breaking. Non-convergence is reported in the result, not as an error.
pub fn fit_matrix(problem: &FitProblem, options: &FitOptions) -> Result<FitResult> {
    problem.weights.validate()?;
    let mask = &problem.mask;
    let initial = &problem.initial;
    if mask.order() != initial.order() {
        return Err(Error::InvalidInput(format!(
            "mask order {} does not match initial matrix order {}",
            mask.order(),
            initial.order()
        )));
    }
    if !mask.admits(initial, 1e-8) {
        return Err(Error::InvalidInput(
            "initial matrix carries couplings outside the mask".into(),
        ));
    }
    if !mask.connects_source_to_load() {
        return Err(Error::Infeasible(
            "mask admits no coupling path from source to load".into(),
        ));
    }

    let positions = mask.free_positions();
    let npar = positions.len();
    let bounds: Vec<(f64, f64)> = match &problem.bounds {
        Some(b) => {
            if b.len() != npar {
                return Err(Error::InvalidInput(format!(
                    "expected {npar} bound pairs (one per free entry), got {}",
                    b.len()
                )));
            }
            b.clone()
        }
        None => vec![(-3.0, 3.0); npar],
    };
    let x0: Vec<f64> = positions.iter().map(|&(i, j)| initial.get(i, j)).collect();
    for (v, &(lo, hi)) in x0.iter().zip(bounds.iter()) {
        if *v < lo || *v > hi {
            return Err(Error::InvalidInput(format!(
                "initial entry {v} outside its bounds [{lo}, {hi}]"
            )));
        }
    }

    let samples = match &problem.target {
        FitTarget::Sweep(sweep) => {
            if sweep.is_empty() {
                return Err(Error::InvalidInput("empty target sweep".into()));
            }
            sweep_samples(&problem.plan, sweep, &problem.weights)?
        }
        FitTarget::Polynomials(cp) => poly_samples(cp, &problem.weights),
    };
    let wsum: f64 = samples.iter().map(|s| s.weight).sum();
    let scales: Vec<f64> = samples.iter().map(|s| (s.weight / wsum).sqrt()).collect();

    let base = initial.clone();
    let assemble = |x: &[f64]| -> CouplingMatrix {
        let mut out = base.clone();
        for (k, &(i, j)) in positions.iter().enumerate() {
            out.set(i, j, x[k]);
        }
        out
    };
    let residuals_for = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        let cand = assemble(x);
        for (s, &scale) in samples.iter().zip(scales.iter()) {
            match eval_lowpass_point(&cand, s.lambda, 0.0) {
                Some(pt) => {
                    let d11 = pt.s11 - s.target.s11;
                    let d21 = pt.s21 - s.target.s21;
                    out.push(d11.re * scale);
                    out.push(d11.im * scale);
                    out.push(d21.re * scale);
                    out.push(d21.im * scale);
                }
                None => out.extend_from_slice(&[1e3, 1e3, 1e3, 1e3]),
            }
        }
    };

    // exact initial guess: done before any iteration
    let mut r0 = Vec::new();
    residuals_for(&x0, &mut r0);
    let cost0: f64 = r0.iter().map(|v| v * v).sum();
    if cost0 <= options.tol {
        return Ok(FitResult {
            matrix: assemble(&x0),
            cost: cost0,
            iterations: 0,
            converged: true,
            history: vec![(0, cost0)],
            seed: options.seed,
        });
    }

    // seeded start points
    let nstarts = options.multistart_count.max(1);
    let mut rng = optim::SplitMix64::new(options.seed ^ 0x9E3779B97F4A7C15);
    let starts: Vec<Vec<f64>> = (0..nstarts)
        .map(|k| {
            if k == 0 {
                x0.clone()
            } else {
                x0.iter()
                    .zip(bounds.iter())
                    .map(|(&v, &(lo, hi))| {
                        (v + rng.uniform_in(-1.0, 1.0) * (0.25 * (1.0 + v.abs()))).clamp(lo, hi)
                    })
                    .collect()
            }
        })
        .collect();

    let run_start = |x_start: &[f64]| -> (Vec<f64>, f64, usize) {
        let mut res_fn = |x: &[f64], out: &mut Vec<f64>| residuals_for(x, out);
        let lm = optim::levenberg_marquardt(
            &mut res_fn,
            x_start,
            &bounds,
            options.max_iters,
            options.tol,
        );
        if lm.cost <= options.tol {
            return (lm.x, lm.cost, lm.iterations);
        }
        // simplex rescue, then refine again
        let mut buf = Vec::new();
        let mut cost_fn = |x: &[f64]| -> f64 {
            residuals_for(x, &mut buf);
            buf.iter().map(|v| v * v).sum()
        };
        let x_nm = optim::nelder_mead(&mut cost_fn, &lm.x, &bounds, 200 * npar.max(1));
        let mut res_fn2 = |x: &[f64], out: &mut Vec<f64>| residuals_for(x, out);
        let lm2 = optim::levenberg_marquardt(
            &mut res_fn2,
            &x_nm,
            &bounds,
            options.max_iters,
            options.tol,
        );
        if lm2.cost < lm.cost {
            (lm2.x, lm2.cost, lm.iterations + lm2.iterations)
        } else {
            (lm.x, lm.cost, lm.iterations + lm2.iterations)
        }
    };

    let outcomes: Vec<(Vec<f64>, f64, usize)> = if options.threads > 1 && nstarts > 1 {
        let mut results: Vec<Option<(Vec<f64>, f64, usize)>> = vec![None; nstarts];
        let chunk = nstarts.div_ceil(options.threads);
        std::thread::scope(|scope| {
            for (t, slot_chunk) in results.chunks_mut(chunk).enumerate() {
                let starts = &starts;
                let run = &run_start;
                scope.spawn(move || {
                    for (off, slot) in slot_chunk.iter_mut().enumerate() {
                        *slot = Some(run(&starts[t * chunk + off]));
                    }
                });
            }
        });
        results
            .into_iter()
            .map(|r| r.expect("start completed"))
            .collect()
    } else {
        starts.iter().map(|s| run_start(s)).collect()
    };

    let mut history = vec![(0usize, cost0)];
    let mut best_idx = 0;
    let mut best_cost = f64::INFINITY;
    let mut total_iters = 0usize;
    for (idx, (_, cost, iters)) in outcomes.iter().enumerate() {
        total_iters += iters;
        if *cost < best_cost {
            best_cost = *cost;
            best_idx = idx;
        }
        let running = history.last().expect("seeded").1.min(*cost);
        history.push((total_iters, running));
    }
    let best_x = &outcomes[best_idx].0;

    Ok(FitResult {
        matrix: assemble(best_x),
        cost: best_cost,
        iterations: total_iters,
        converged: best_cost <= options.tol,
        history,
        seed: options.seed,
    })
}

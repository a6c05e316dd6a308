//! Internal optimization kernels: a deterministic PRNG for seeded
//! multistarts, a bounded Nelder-Mead simplex, and a bounded
//! Levenberg-Marquardt least-squares refiner with finite-difference
//! Jacobians. All arithmetic is plain f64 so results are reproducible
//! for a fixed seed.

/// SplitMix64 generator; tiny, portable, and stable across platforms.
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

fn clamp_to(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds.iter()) {
        *v = v.clamp(lo, hi);
    }
}

/// Dense real linear solve by partial-pivot Gaussian elimination.
/// Returns None on a vanishing pivot.
pub(crate) fn solve_real(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let mut p = k;
        let mut best = m[k * n + k].abs();
        for i in (k + 1)..n {
            if m[i * n + k].abs() > best {
                best = m[i * n + k].abs();
                p = i;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        for i in (k + 1)..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            x[i] -= m[i * n + j] * x[j];
        }
        x[i] /= m[i * n + i];
    }
    Some(x)
}

pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// Levenberg-Marquardt on a residual vector, bounds enforced by clamping.
/// `residuals` fills `out` with the residual components at `x`; the cost is
/// their sum of squares.
pub(crate) fn levenberg_marquardt<F>(
    mut residuals: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    max_iters: usize,
    cost_tol: f64,
) -> LmOutcome
where
    F: FnMut(&[f64], &mut Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    clamp_to(&mut x, bounds);

    let mut r = Vec::new();
    residuals(&x, &mut r);
    let m = r.len();
    let mut cost: f64 = r.iter().map(|v| v * v).sum();

    let mut lambda = 1e-3;
    let mut iterations = 0usize;
    let mut jac = vec![0.0; m * n];
    let mut r_probe = Vec::with_capacity(m);

    while iterations < max_iters && cost > cost_tol {
        iterations += 1;

        // forward-difference Jacobian
        for p in 0..n {
            let h = 1e-7 * (1.0 + x[p].abs());
            let mut xh = x.clone();
            xh[p] += h;
            if xh[p] > bounds[p].1 {
                xh[p] = x[p] - h;
            }
            let actual_h = xh[p] - x[p];
            residuals(&xh, &mut r_probe);
            for i in 0..m {
                jac[i * n + p] = (r_probe[i] - r[i]) / actual_h;
            }
        }

        // normal equations
        let mut ata = vec![0.0; n * n];
        let mut atr = vec![0.0; n];
        for i in 0..m {
            for p in 0..n {
                let jip = jac[i * n + p];
                atr[p] += jip * r[i];
                for q in p..n {
                    ata[p * n + q] += jip * jac[i * n + q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                ata[p * n + q] = ata[q * n + p];
            }
        }

        let mut improved = false;
        for _damping in 0..40 {
            let mut lhs = ata.clone();
            for p in 0..n {
                lhs[p * n + p] += lambda * (ata[p * n + p].max(1e-12));
            }
            let neg_g: Vec<f64> = atr.iter().map(|v| -v).collect();
            let Some(step) = solve_real(&lhs, n, &neg_g) else {
                lambda *= 10.0;
                continue;
            };
            let mut x_new = x.clone();
            for p in 0..n {
                x_new[p] += step[p];
            }
            clamp_to(&mut x_new, bounds);
            residuals(&x_new, &mut r_probe);
            let cost_new: f64 = r_probe.iter().map(|v| v * v).sum();
            if cost_new < cost {
                let rel_drop = (cost - cost_new) / cost.max(1e-300);
                x = x_new;
                std::mem::swap(&mut r, &mut r_probe);
                cost = cost_new;
                lambda = (lambda * 0.3).max(1e-14);
                improved = true;
                if rel_drop < 1e-14 {
                    return LmOutcome {
                        x,
                        cost,
                        iterations,
                    };
                }
                break;
            }
            lambda *= 5.0;
            if lambda > 1e14 {
                return LmOutcome {
                    x,
                    cost,
                    iterations,
                };
            }
        }
        if !improved {
            break;
        }
    }
    LmOutcome {
        x,
        cost,
        iterations,
    }
}

/// Bounded Nelder-Mead simplex minimization of a scalar cost.
pub(crate) fn nelder_mead<F>(
    mut cost: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    max_evals: usize,
) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return vec![];
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        cost(x)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp_to(&mut start, bounds);
    simplex.push(start.clone());
    for p in 0..n {
        let mut v = start.clone();
        let step = 0.1 * (1.0 + v[p].abs());
        v[p] = if v[p] + step <= bounds[p].1 {
            v[p] + step
        } else {
            v[p] - step
        };
        clamp_to(&mut v, bounds);
        simplex.push(v);
    }
    let mut f: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    while evals < max_evals {
        // order ascending by cost
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| f[a].partial_cmp(&f[b]).expect("cost NaN"));
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let freo: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
        simplex = reordered;
        f = freo;

        if (f[n] - f[0]).abs() <= 1e-16 * (1.0 + f[0].abs()) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for p in 0..n {
                centroid[p] += v[p] / n as f64;
            }
        }

        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            let mut out: Vec<f64> = a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| x + t * (y - x))
                .collect();
            clamp_to(&mut out, bounds);
            out
        };

        let reflected = blend(&centroid, &simplex[n], -1.0);
        let fr = eval(&reflected, &mut evals);
        if fr < f[0] {
            let expanded = blend(&centroid, &simplex[n], -2.0);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[n] = expanded;
                f[n] = fe;
            } else {
                simplex[n] = reflected;
                f[n] = fr;
            }
        } else if fr < f[n - 1] {
            simplex[n] = reflected;
            f[n] = fr;
        } else {
            let contracted = blend(&centroid, &simplex[n], 0.5);
            let fc = eval(&contracted, &mut evals);
            if fc < f[n] {
                simplex[n] = contracted;
                f[n] = fc;
            } else {
                // shrink toward the best vertex
                for k in 1..=n {
                    simplex[k] = blend(&simplex[0], &simplex[k], 0.5);
                    f[k] = eval(&simplex[k], &mut evals);
                }
            }
        }
    }

    let mut best = 0;
    for k in 1..=n {
        if f[k] < f[best] {
            best = k;
        }
    }
    simplex.swap_remove(best)
}

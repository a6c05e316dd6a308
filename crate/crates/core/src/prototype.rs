//! Lowpass prototype synthesis: characteristic polynomials for equiripple
//! responses with prescribed finite transmission zeros, their canonical
//! transversal coupling-matrix realization, and reconfiguration onto a
//! target coupling topology.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CouplingMatrix, TopologyMask};
use crate::optim;
use crate::poly::Poly;
use crate::response::{eval_lowpass_point, linspace, sweep_lowpass};

const J: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Characteristic polynomials F, P, E in the complex lowpass variable s,
/// with ripple constants eps and eps_r.
///
/// F and E are monic of degree N; P carries one root per finite transmission
/// zero and a unit-magnitude leading coefficient whose phase matches the
/// network convention S21 = -2j [A^-1]_(L,S).
#[derive(Debug, Clone)]
pub struct CharPoly {
    order: usize,
    f: Poly,
    p: Poly,
    e: Poly,
    eps: f64,
    eps_r: f64,
    tz: Vec<f64>,
}

impl CharPoly {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn f(&self) -> &Poly {
        &self.f
    }

    pub fn p(&self) -> &Poly {
        &self.p
    }

    pub fn e(&self) -> &Poly {
        &self.e
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eps_r(&self) -> f64 {
        self.eps_r
    }

    /// Prescribed finite transmission zeros (lowpass positions).
    pub fn tz_omegas(&self) -> &[f64] {
        &self.tz
    }

    /// Reflection coefficient in the network sign convention
    /// S11 = 1 + 2j [A^-1]_(S,S), which realizes -F(s) / (eps_r * E(s)).
    /// Magnitude is convention-free.
    pub fn s11(&self, omega: f64) -> Complex64 {
        let s = J * omega;
        -self.f.eval(s) / (self.eps_r * self.e.eval(s))
    }

    /// Transmission coefficient P(j*omega) / (eps * E(j*omega)).
    pub fn s21(&self, omega: f64) -> Complex64 {
        let s = J * omega;
        self.p.eval(s) / (self.eps * self.e.eval(s))
    }

    /// Relative defect of |F|^2/eps_r^2 + |P|^2/eps^2 = |E|^2 at one point.
    pub fn energy_defect(&self, omega: f64) -> f64 {
        let s = J * omega;
        let lhs = self.f.eval(s).norm_sqr() / (self.eps_r * self.eps_r)
            + self.p.eval(s).norm_sqr() / (self.eps * self.eps);
        let rhs = self.e.eval(s).norm_sqr();
        (lhs - rhs).abs() / rhs
    }

    /// Check degrees, the Hurwitz condition on E, and energy conservation
    /// on a 101-point sample of [-3, 3].
    pub fn validate(&self) -> Result<()> {
        if self.f.degree() != self.order || self.e.degree() != self.order {
            return Err(Error::InvalidInput(
                "F and E must have degree equal to the order".into(),
            ));
        }
        if !self.p.is_zero() && self.p.degree() >= self.order {
            return Err(Error::InvalidInput(
                "P must have fewer finite zeros than the order".into(),
            ));
        }
        for root in self.e.roots() {
            if root.re >= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "E has a root at {root} outside the open left half-plane"
                )));
            }
        }
        for w in linspace(-3.0, 3.0, 101) {
            let defect = self.energy_defect(w);
            if defect > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "energy conservation violated at omega {w}: defect {defect:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Synthesize the equiripple characteristic polynomials for a given order,
/// in-band return loss, and prescribed finite transmission zeros given as
/// normalized lowpass positions with |omega| > 1.
pub fn synthesize_polynomials(order: usize, return_loss_db: f64, tz: &[f64]) -> Result<CharPoly> {
    if order < 1 {
        return Err(Error::InvalidInput("order must be at least 1".into()));
    }
    if !return_loss_db.is_finite() || return_loss_db <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "return loss must be positive, got {return_loss_db}"
        )));
    }
    if tz.len() >= order {
        return Err(Error::InvalidInput(format!(
            "{} finite zeros exceed the limit for order {} (must be fewer)",
            tz.len(),
            order
        )));
    }
    for &z in tz {
        if !z.is_finite() || z.abs() <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "transmission zero at omega {z} lies inside or on the passband edge"
            )));
        }
    }

    // Filtering-function recursion: carry the product over prototype zeros
    // of (omega - 1/omega_n) + omega' * sqrt(1 - 1/omega_n^2), split into
    // the polynomial pair (U, V) with U + V*omega', omega'^2 = omega^2 - 1.
    let mut u = Poly::constant(ONE);
    let mut v = Poly::zero();
    let w2m1 = Poly::from_real(&[-1.0, 0.0, 1.0]);
    let mut factors: Vec<(Poly, f64)> = Vec::with_capacity(order);
    for &z in tz {
        factors.push((
            Poly::from_real(&[-1.0 / z, 1.0]),
            (1.0 - 1.0 / (z * z)).sqrt(),
        ));
    }
    for _ in tz.len()..order {
        factors.push((Poly::from_real(&[0.0, 1.0]), 1.0));
    }
    for (c, d) in &factors {
        let d = Complex64::new(*d, 0.0);
        let u_next = u.mul(c).add(&v.mul(&w2m1).scale(d));
        let v_next = u.scale(d).add(&v.mul(c));
        u = u_next;
        v = v_next;
    }
    let f_omega = u; // degree N, real coefficients
    let f_lead = f_omega.leading().re;

    // map to the s-domain (s = j*omega) and monicize
    let f_s = omega_to_s(&f_omega).monic();
    let p_roots: Vec<Complex64> = tz.iter().map(|&z| J * z).collect();
    let mut p_s = Poly::from_roots(&p_roots);
    if (order - tz.len()).is_multiple_of(2) {
        // preserve realizability of the admittance residues
        p_s = p_s.scale(J);
    }

    // ripple constant from the band-edge reflection level
    let denom = (10f64.powf(return_loss_db / 10.0) - 1.0).sqrt();
    let eps = (p_s.eval(J).norm() / f_s.eval(J).norm()) / denom;
    let eps_r = 1.0;

    // |E(j*omega)|^2 on the real axis as a real polynomial in omega
    let p_omega = real_product_from_zeros(tz);
    let g = f_omega
        .mul(&f_omega)
        .scale(Complex64::new(1.0 / (f_lead * f_lead), 0.0))
        .add(
            &p_omega
                .mul(&p_omega)
                .scale(Complex64::new(1.0 / (eps * eps), 0.0)),
        );
    let mut e_roots = Vec::with_capacity(order);
    for root in g.roots() {
        if root.im > 0.0 {
            e_roots.push(J * root); // maps into the left half s-plane
        }
    }
    if e_roots.len() != order {
        return Err(Error::NoConvergence {
            residual: e_roots.len() as f64,
            threshold: order as f64,
        });
    }
    let e_s = Poly::from_roots(&e_roots);

    let mut cp = CharPoly {
        order,
        f: f_s,
        p: p_s,
        e: e_s,
        eps,
        eps_r,
        tz: tz.to_vec(),
    };

    // Align P's leading phase with the network convention by probing the
    // canonical realization at a regular interior point.
    let m = transversal_matrix(&cp)?;
    let probe = 0.3737;
    let s21_net = eval_lowpass_point(&m, probe, 0.0)
        .expect("probe point is regular")
        .s21;
    let s21_poly = cp.s21(probe);
    let ratio = s21_net / s21_poly;
    if (ratio.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::NoConvergence {
            residual: (ratio.norm() - 1.0).abs(),
            threshold: 1e-6,
        });
    }
    let sign = if (ratio - ONE).norm() < (ratio + ONE).norm() {
        1.0
    } else {
        -1.0
    };
    if (ratio - Complex64::new(sign, 0.0)).norm() > 1e-6 {
        return Err(Error::NoConvergence {
            residual: (ratio - Complex64::new(sign, 0.0)).norm(),
            threshold: 1e-6,
        });
    }
    cp.p = cp.p.scale(Complex64::new(sign, 0.0));

    Ok(cp)
}

fn omega_to_s(p_omega: &Poly) -> Poly {
    // substitute omega = -j*s into a polynomial in omega
    let minus_j = Complex64::new(0.0, -1.0);
    let mut power = ONE;
    let mut out = Vec::with_capacity(p_omega.c.len());
    for &ck in &p_omega.c {
        out.push(ck * power);
        power *= minus_j;
    }
    Poly::new(out)
}

fn real_product_from_zeros(tz: &[f64]) -> Poly {
    let mut p = Poly::constant(ONE);
    for &z in tz {
        p = p.mul(&Poly::from_real(&[-z, 1.0]));
    }
    p
}

/// Canonical transversal realization: every resonator couples to source and
/// load, no inter-resonator couplings, diagonals carry the negated pole
/// frequencies of the admittance partial-fraction expansion.
pub fn transversal_matrix(cp: &CharPoly) -> Result<CouplingMatrix> {
    let n = cp.order;
    let nfz = if cp.p.is_zero() { 0 } else { cp.p.degree() };
    if nfz >= n {
        return Err(Error::InvalidInput(
            "fully canonical transfer functions (as many zeros as poles) are not supported".into(),
        ));
    }

    // split E + F/eps_r into its complex-even and complex-odd parts
    let mut m1 = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut n1 = vec![Complex64::new(0.0, 0.0); n + 1];
    for k in 0..=n {
        let ek = cp.e.c.get(k).copied().unwrap_or_default();
        let fk = cp.f.c.get(k).copied().unwrap_or_default() / cp.eps_r;
        let sum = ek + fk;
        if k % 2 == 0 {
            m1[k] = Complex64::new(sum.re, 0.0);
            n1[k] = Complex64::new(0.0, sum.im);
        } else {
            m1[k] = Complex64::new(0.0, sum.im);
            n1[k] = Complex64::new(sum.re, 0.0);
        }
    }
    let (yd, y22n) = if n.is_multiple_of(2) {
        (Poly::new(m1), Poly::new(n1))
    } else {
        (Poly::new(n1), Poly::new(m1))
    };
    let y21n = cp.p.scale(Complex64::new(1.0 / cp.eps, 0.0));

    if yd.degree() != n {
        return Err(Error::InvalidInput(format!(
            "admittance denominator degree {} does not match order {n}",
            yd.degree()
        )));
    }

    // poles of the admittance: purely imaginary s = j*lambda_k
    let mut poles: Vec<f64> = Vec::with_capacity(n);
    let roots = yd.roots();
    for r in &roots {
        if r.re.abs() > 1e-7 * (1.0 + r.im.abs()) {
            return Err(Error::NoConvergence {
                residual: r.re.abs(),
                threshold: 1e-7,
            });
        }
        poles.push(r.im);
    }
    poles.sort_by(|a, b| a.partial_cmp(b).expect("pole NaN"));

    let ydp = yd.derivative();
    let mut t_source = Vec::with_capacity(n);
    let mut t_load = Vec::with_capacity(n);
    for &lambda in &poles {
        let s = J * lambda;
        let d = ydp.eval(s);
        let r22 = y22n.eval(s) / d;
        let r21 = y21n.eval(s) / d;
        let scale = r22.norm().max(r21.norm()).max(1e-12);
        if r22.im.abs() > 1e-7 * scale || r21.im.abs() > 1e-7 * scale {
            return Err(Error::NoConvergence {
                residual: r22.im.abs().max(r21.im.abs()),
                threshold: 1e-7 * scale,
            });
        }
        if r22.re <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "nonpositive load residue {} at lambda {lambda}",
                r22.re
            )));
        }
        let tl = r22.re.sqrt();
        t_load.push(tl);
        t_source.push(r21.re / tl);
    }

    // fix the source-row sign so the realization is deterministic
    let mut k_star = 0;
    for (k, t) in t_source.iter().enumerate() {
        if t.abs() > t_source[k_star].abs() {
            k_star = k;
        }
    }
    if t_source[k_star] < 0.0 {
        for t in t_source.iter_mut() {
            *t = -*t;
        }
    }

    let mut m = CouplingMatrix::new(n);
    let l = m.l_idx();
    for k in 0..n {
        m.set(0, k + 1, t_source[k]);
        m.set(k + 1, l, t_load[k]);
        m.set(k + 1, k + 1, -poles[k]);
    }
    Ok(m)
}

/// Options controlling `reconfigure`'s seeded multistart refinement.
#[derive(Debug, Clone)]
pub struct ReconfigureOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Acceptance threshold on the response-match deviation in |S11|, |S21|.
    pub match_tol: f64,
}

impl Default for ReconfigureOptions {
    fn default() -> Self {
        ReconfigureOptions {
            starts: 8,
            seed: 0x5EED,
            max_iters: 400,
            match_tol: 1e-6,
        }
    }
}

/// Reconfigure a coupling matrix onto a topology mask while preserving its
/// scattering response.
///
/// The matrix is re-expressed as a least-squares problem over the mask's
/// free entries, seeded from invariants of the input (source/load row norms
/// and the resonator trace) plus seeded jitter; the result is accepted only
/// when its response matches the input's within `match_tol` over a dense
/// lowpass grid. Signs are normalized so couplings are positive along a
/// spanning tree from the source.
pub fn reconfigure(m: &CouplingMatrix, mask: &TopologyMask) -> Result<CouplingMatrix> {
    reconfigure_with(m, mask, &ReconfigureOptions::default())
}

pub fn reconfigure_with(
    m: &CouplingMatrix,
    mask: &TopologyMask,
    opts: &ReconfigureOptions,
) -> Result<CouplingMatrix> {
    if mask.order() != m.order() {
        return Err(Error::InvalidInput(format!(
            "mask order {} does not match matrix order {}",
            mask.order(),
            m.order()
        )));
    }
    if mask.admits(m, 1e-8) {
        return Ok(m.clone());
    }
    if !mask.connects_source_to_load() {
        return Err(Error::Infeasible(
            "mask admits no coupling path from source to load".into(),
        ));
    }

    let omegas = linspace(-3.0, 3.0, 161);
    let target = sweep_lowpass(m, &omegas)?;
    let positions = mask.free_positions();
    let npar = positions.len();
    let order = m.order();
    let norm = 1.0 / (omegas.len() as f64).sqrt();

    let assemble = |x: &[f64]| -> CouplingMatrix {
        let mut out = CouplingMatrix::new(order);
        for (k, &(i, j)) in positions.iter().enumerate() {
            out.set(i, j, x[k]);
        }
        out
    };

    let mut residuals = |x: &[f64], out: &mut Vec<f64>| {
        out.clear();
        let cand = assemble(x);
        for (idx, &w) in omegas.iter().enumerate() {
            match eval_lowpass_point(&cand, w, 0.0) {
                Some(pt) => {
                    let d11 = pt.s11 - target[idx].s11;
                    let d21 = pt.s21 - target[idx].s21;
                    out.push(d11.re * norm);
                    out.push(d11.im * norm);
                    out.push(d21.re * norm);
                    out.push(d21.im * norm);
                }
                None => {
                    // singular trial point; push the optimizer away
                    out.extend_from_slice(&[1e3, 1e3, 1e3, 1e3]);
                }
            }
        }
    };

    // structured seed from similarity invariants of the input
    let s_norm = (1..=order).map(|k| m.get(0, k).powi(2)).sum::<f64>().sqrt();
    let l_norm = (1..=order)
        .map(|k| m.get(k, m.l_idx()).powi(2))
        .sum::<f64>()
        .sqrt();
    let trace = (1..=order).map(|k| m.get(k, k)).sum::<f64>();
    let n_s = positions.iter().filter(|&&(i, _)| i == 0).count().max(1);
    let n_l = positions
        .iter()
        .filter(|&&(_, j)| j == m.l_idx())
        .count()
        .max(1);
    let mut seed0 = vec![0.0; npar];
    for (k, &(i, j)) in positions.iter().enumerate() {
        seed0[k] = if i == 0 && j == m.l_idx() {
            0.0
        } else if i == 0 {
            s_norm / (n_s as f64).sqrt()
        } else if j == m.l_idx() {
            l_norm / (n_l as f64).sqrt()
        } else if i == j {
            trace / order as f64
        } else {
            0.5
        };
    }

    let bounds = vec![(-3.0, 3.0); npar];
    let mut rng = optim::SplitMix64::new(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in 0..opts.starts.max(1) {
        let x0: Vec<f64> = if start == 0 {
            seed0.clone()
        } else {
            seed0
                .iter()
                .map(|&v| v + rng.uniform_in(-1.0, 1.0) * (0.6 + 0.3 * v.abs()))
                .collect()
        };
        let out = optim::levenberg_marquardt(&mut residuals, &x0, &bounds, opts.max_iters, 1e-22);
        if best.as_ref().is_none_or(|(_, c)| out.cost < *c) {
            best = Some((out.x, out.cost));
        }
        if best.as_ref().expect("set above").1 < 1e-20 {
            break;
        }
    }
    let (x, _cost) = best.expect("at least one start");
    let result = canonicalize_labeling(&assemble(&x), mask).normalize_signs();

    // certify by response match on a denser grid
    let dense = linspace(-3.0, 3.0, 641);
    let got = sweep_lowpass(&result, &dense)?;
    let want = sweep_lowpass(m, &dense)?;
    let mut worst = 0.0_f64;
    for (g, w) in got.iter().zip(want.iter()) {
        worst = worst.max((g.s11.norm() - w.s11.norm()).abs());
        worst = worst.max((g.s21.norm() - w.s21.norm()).abs());
    }
    if worst > opts.match_tol {
        return Err(Error::NoConvergence {
            residual: worst,
            threshold: opts.match_tol,
        });
    }
    Ok(result)
}

/// Masks can admit several relabelings of the same realization (the
/// parallel-path pattern, for one, is invariant under swapping its chain and
/// bridge resonators). Pick a canonical one: among all resonator
/// permutations that keep the matrix on the mask, take the lexicographically
/// largest |entry| sequence over the upper triangle.
fn canonicalize_labeling(m: &CouplingMatrix, mask: &TopologyMask) -> CouplingMatrix {
    let n = m.order();
    if n > 8 {
        return m.clone();
    }
    let mut perm: Vec<usize> = (1..=n).collect();
    let mut best_key = upper_abs_key(m);
    let mut best = m.clone();
    permute_all(&mut perm, 0, &mut |p| {
        let cand = apply_resonator_permutation(m, p);
        if !mask.admits(&cand, 1e-8) {
            return;
        }
        let key = upper_abs_key(&cand);
        if lex_greater(&key, &best_key) {
            best_key = key;
            best = cand;
        }
    });
    best
}

fn upper_abs_key(m: &CouplingMatrix) -> Vec<f64> {
    let dim = m.dim();
    let mut key = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            key.push(m.get(i, j).abs());
        }
    }
    key
}

fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() <= 1e-9 {
            continue;
        }
        return x > y;
    }
    false
}

/// Relabel resonators: new index k holds old resonator perm[k-1].
fn apply_resonator_permutation(m: &CouplingMatrix, perm: &[usize]) -> CouplingMatrix {
    let n = m.order();
    let map = |idx: usize| -> usize {
        if idx == 0 || idx == n + 1 {
            idx
        } else {
            perm[idx - 1]
        }
    };
    let mut out = CouplingMatrix::new(n);
    for i in 0..m.dim() {
        for j in i..m.dim() {
            out.set(i, j, m.get(map(i), map(j)));
        }
    }
    out
}

fn permute_all(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute_all(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

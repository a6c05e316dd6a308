//! Dense complex polynomials in one variable, ascending coefficient order,
//! with simultaneous-iteration root finding.

use num_complex::Complex64;

/// Polynomial with complex coefficients, `c[k]` multiplying `x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub c: Vec<Complex64>,
}

impl Poly {
    pub fn new(c: Vec<Complex64>) -> Self {
        let mut p = Poly { c };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { c: vec![] }
    }

    pub fn constant(v: Complex64) -> Self {
        Poly::new(vec![v])
    }

    pub fn from_real(c: &[f64]) -> Self {
        Poly::new(c.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Poly::constant(Complex64::new(1.0, 0.0));
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, Complex64::new(1.0, 0.0)]));
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn leading(&self) -> Complex64 {
        *self
            .c
            .last()
            .expect("leading coefficient of zero polynomial")
    }

    fn trim(&mut self) {
        while let Some(last) = self.c.last() {
            if last.norm() == 0.0 && self.c.len() > 1 {
                self.c.pop();
            } else {
                break;
            }
        }
        if self.c.len() == 1 && self.c[0].norm() == 0.0 {
            self.c.clear();
        }
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &ck in self.c.iter().rev() {
            acc = acc * x + ck;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &ck)| ck * (k as f64))
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.c.len().max(other.c.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, slot) in out.iter_mut().enumerate() {
            if k < self.c.len() {
                *slot += self.c[k];
            }
            if k < other.c.len() {
                *slot += other.c[k];
            }
        }
        Poly::new(out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            for (j, &b) in other.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.c.iter().map(|&ck| ck * s).collect())
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Poly {
        let lead = self.leading();
        self.scale(Complex64::new(1.0, 0.0) / lead)
    }

    /// All complex roots. Uses closed forms for degree <= 2 and
    /// Durand-Kerner iteration with Newton polishing above that.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.monic();
        let n = p.degree();
        match n {
            0 => vec![],
            1 => vec![-p.c[0]],
            2 => {
                let b = p.c[1];
                let c = p.c[0];
                let disc = (b * b - 4.0 * c).sqrt();
                // pick the sign that avoids cancellation
                let q = if (b + disc).norm() >= (b - disc).norm() {
                    -0.5 * (b + disc)
                } else {
                    -0.5 * (b - disc)
                };
                vec![q, c / q]
            }
            _ => p.roots_durand_kerner(),
        }
    }

    fn roots_durand_kerner(&self) -> Vec<Complex64> {
        let n = self.degree();
        let bound = 1.0 + self.c[..n].iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
                Complex64::from_polar(bound, angle)
            })
            .collect();

        for _ in 0..1000 {
            let mut max_step = 0.0_f64;
            for k in 0..n {
                let mut denom = Complex64::new(1.0, 0.0);
                for j in 0..n {
                    if j != k {
                        denom *= z[k] - z[j];
                    }
                }
                if denom.norm() == 0.0 {
                    // collided estimates; nudge apart
                    z[k] += Complex64::new(1e-8 * bound, 1e-8 * bound);
                    continue;
                }
                let step = self.eval(z[k]) / denom;
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
            if max_step < 1e-14 {
                break;
            }
        }

        // Newton polish on the full polynomial
        let dp = self.derivative();
        for zk in z.iter_mut() {
            for _ in 0..8 {
                let f = self.eval(*zk);
                let d = dp.eval(*zk);
                if d.norm() == 0.0 {
                    break;
                }
                let step = f / d;
                *zk -= step;
                if step.norm() < 1e-15 * (1.0 + zk.norm()) {
                    break;
                }
            }
        }
        z
    }
}

//! Two-port scattering responses of coupling matrices under a bandpass
//! frequency plan: the lowpass mapping, the A = lambda*W - jR + M network
//! model, group delay, insertion loss, and the CSV sweep format.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::CouplingMatrix;

/// Center frequency and absolute bandwidth defining the lowpass mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPlan {
    f0_hz: f64,
    bw_hz: f64,
}

impl FrequencyPlan {
    pub fn new(f0_hz: f64, bw_hz: f64) -> Result<Self> {
        if !f0_hz.is_finite() || f0_hz <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "center frequency must be positive, got {f0_hz}"
            )));
        }
        if !bw_hz.is_finite() || bw_hz <= 0.0 || bw_hz >= 2.0 * f0_hz {
            return Err(Error::InvalidInput(format!(
                "bandwidth must satisfy 0 < bw < 2*f0, got {bw_hz}"
            )));
        }
        Ok(FrequencyPlan { f0_hz, bw_hz })
    }

    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    pub fn bw_hz(&self) -> f64 {
        self.bw_hz
    }

    /// Fractional bandwidth bw/f0 (derived, never stored).
    pub fn fbw(&self) -> f64 {
        self.bw_hz / self.f0_hz
    }

    /// Lowpass variable Omega = (f0/bw)(f/f0 - f0/f).
    pub fn normalized_frequency(&self, f_hz: f64) -> Result<f64> {
        if !f_hz.is_finite() || f_hz <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "frequency must be positive, got {f_hz}"
            )));
        }
        Ok((self.f0_hz / self.bw_hz) * (f_hz / self.f0_hz - self.f0_hz / f_hz))
    }

    /// Unique positive frequency mapping to the given Omega; exact inverse of
    /// `normalized_frequency`.
    pub fn denormalize(&self, omega: f64) -> f64 {
        // solve u - 1/u = omega*bw/f0 for u = f/f0 > 0
        let x = omega * self.bw_hz / self.f0_hz;
        let u = 0.5 * (x + (x * x + 4.0).sqrt());
        self.f0_hz * u
    }

    /// Passband edges (Omega = -1, +1); their difference equals bw exactly.
    pub fn band_edges(&self) -> (f64, f64) {
        (self.denormalize(-1.0), self.denormalize(1.0))
    }
}

/// Uniform resonator loss, expressed as an unloaded quality factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    Lossless,
    /// Finite unloaded Q applied to every resonator diagonal.
    QualityFactor(f64),
}

impl LossSpec {
    pub fn quality_factor(qu: f64) -> Result<Self> {
        if !qu.is_finite() || qu <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "unloaded quality factor must be positive, got {qu}"
            )));
        }
        Ok(LossSpec::QualityFactor(qu))
    }

    fn loss_delta(&self, plan: &FrequencyPlan) -> f64 {
        match self {
            LossSpec::Lossless => 0.0,
            LossSpec::QualityFactor(qu) => plan.f0_hz / (plan.bw_hz * qu),
        }
    }
}

/// One grid point of a two-port scattering matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPort {
    pub s11: Complex64,
    pub s21: Complex64,
    pub s12: Complex64,
    pub s22: Complex64,
}

/// Which scattering entry an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SParam {
    S11,
    S21,
    S12,
    S22,
}

impl TwoPort {
    pub fn get(&self, which: SParam) -> Complex64 {
        match which {
            SParam::S11 => self.s11,
            SParam::S21 => self.s21,
            SParam::S12 => self.s12,
            SParam::S22 => self.s22,
        }
    }
}

/// Frequency-ordered two-port scattering data with a reference impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct SParamSweep {
    freqs_hz: Vec<f64>,
    points: Vec<TwoPort>,
    z_ref: f64,
}

impl SParamSweep {
    pub fn new(freqs_hz: Vec<f64>, points: Vec<TwoPort>, z_ref: f64) -> Result<Self> {
        if freqs_hz.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} frequencies but {} data points",
                freqs_hz.len(),
                points.len()
            )));
        }
        if !z_ref.is_finite() || z_ref <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "reference impedance must be positive, got {z_ref}"
            )));
        }
        for w in freqs_hz.windows(2) {
            if w[1] <= w[0] || w[1].is_nan() || w[0].is_nan() {
                return Err(Error::InvalidInput(format!(
                    "frequencies must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&f) = freqs_hz.first() {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "frequencies must be positive, got {f}"
                )));
            }
        }
        for p in &points {
            for s in [p.s11, p.s21, p.s12, p.s22] {
                if !s.re.is_finite() || !s.im.is_finite() {
                    return Err(Error::InvalidInput("non-finite S-parameter".into()));
                }
            }
        }
        Ok(SParamSweep {
            freqs_hz,
            points,
            z_ref,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn points(&self) -> &[TwoPort] {
        &self.points
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    /// Index of the grid point nearest to `f_hz`.
    pub fn nearest_index(&self, f_hz: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &f) in self.freqs_hz.iter().enumerate() {
            let d = (f - f_hz).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Magnitude in dB of the chosen entry at index `i` (floor -400 dB).
    pub fn db(&self, which: SParam, i: usize) -> f64 {
        db_mag(self.points[i].get(which))
    }
}

/// Magnitude in dB with a -400 dB floor for zero values.
pub fn db_mag(s: Complex64) -> f64 {
    let m = s.norm();
    if m <= 1e-20 {
        -400.0
    } else {
        20.0 * m.log10()
    }
}

/// Evaluate the network model at one lowpass point.
///
/// A = lambda*W - jR + M with W the identity zeroed on the port diagonal and
/// R carrying unit terminations at (S,S) and (L,L). `loss_delta` is added as
/// -j*delta on the resonator diagonal.
pub(crate) fn eval_lowpass_point(
    m: &CouplingMatrix,
    lambda: f64,
    loss_delta: f64,
) -> Option<TwoPort> {
    let dim = m.dim();
    let s = m.s_idx();
    let l = m.l_idx();
    let j = Complex64::new(0.0, 1.0);
    let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            a[r * dim + c] = Complex64::new(m.get(r, c), 0.0);
        }
    }
    for k in 1..=m.order() {
        a[k * dim + k] += Complex64::new(lambda, -loss_delta);
    }
    a[s * dim + s] -= j;
    a[l * dim + l] -= j;

    let lu = linalg::lu_factor(&a, dim)?;
    let mut es = vec![Complex64::new(0.0, 0.0); dim];
    es[s] = Complex64::new(1.0, 0.0);
    let mut el = vec![Complex64::new(0.0, 0.0); dim];
    el[l] = Complex64::new(1.0, 0.0);
    let col_s = lu.solve(&es);
    let col_l = lu.solve(&el);

    let s11 = Complex64::new(1.0, 0.0) + 2.0 * j * col_s[s];
    let s21 = -2.0 * j * col_s[l];
    let s22 = Complex64::new(1.0, 0.0) + 2.0 * j * col_l[l];
    Some(TwoPort {
        s11,
        s21,
        s12: s21,
        s22,
    })
}

/// Lowpass-domain sweep used by synthesis verification and fitting.
pub fn sweep_lowpass(m: &CouplingMatrix, omegas: &[f64]) -> Result<Vec<TwoPort>> {
    omegas
        .iter()
        .map(|&w| {
            eval_lowpass_point(m, w, 0.0).ok_or(Error::Singular {
                freq: w,
                unit: "(normalized)",
            })
        })
        .collect()
}

/// Two-port S-parameters of a coupling matrix over a bandpass grid.
///
/// Each grid frequency maps through the plan's lowpass variable; finite
/// `loss` adds -j*f0/(bw*qu) to every resonator diagonal. Reciprocity
/// (S12 = S21) holds exactly for generated sweeps.
pub fn sparams(
    m: &CouplingMatrix,
    plan: &FrequencyPlan,
    grid_hz: &[f64],
    loss: LossSpec,
) -> Result<SParamSweep> {
    if grid_hz.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    let delta = loss.loss_delta(plan);
    let mut points = Vec::with_capacity(grid_hz.len());
    for &f in grid_hz {
        let lambda = plan.normalized_frequency(f)?;
        let p = eval_lowpass_point(m, lambda, delta).ok_or(Error::Singular {
            freq: f,
            unit: "Hz",
        })?;
        points.push(p);
    }
    SParamSweep::new(grid_hz.to_vec(), points, 50.0)
}

/// Default plotting grid: `points` uniform samples over
/// [f0 - 1.5*bw, f0 + 1.5*bw], clamped away from zero.
pub fn default_grid(plan: &FrequencyPlan, points: usize) -> Vec<f64> {
    let lo = (plan.f0_hz() - 1.5 * plan.bw_hz()).max(plan.f0_hz() * 1e-3);
    let hi = plan.f0_hz() + 1.5 * plan.bw_hz();
    linspace(lo, hi, points)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64) / ((n - 1) as f64))
        .collect()
}

/// Group delay in seconds of the chosen entry: -(1/2pi) d(phase)/df with the
/// phase unwrapped, central differences inside and one-sided at the ends.
pub fn group_delay(sweep: &SParamSweep, which: SParam) -> Result<Vec<f64>> {
    let n = sweep.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "group delay needs at least 3 points, got {n}"
        )));
    }
    let mut phase: Vec<f64> = sweep.points().iter().map(|p| p.get(which).arg()).collect();
    unwrap_phase(&mut phase);
    let f = sweep.freqs_hz();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut tau = vec![0.0; n];
    tau[0] = -(phase[1] - phase[0]) / (two_pi * (f[1] - f[0]));
    tau[n - 1] = -(phase[n - 1] - phase[n - 2]) / (two_pi * (f[n - 1] - f[n - 2]));
    for i in 1..(n - 1) {
        tau[i] = -(phase[i + 1] - phase[i - 1]) / (two_pi * (f[i + 1] - f[i - 1]));
    }
    Ok(tau)
}

fn unwrap_phase(phase: &mut [f64]) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut offset = 0.0;
    for i in 1..phase.len() {
        let raw = phase[i] + offset;
        let mut d = raw - phase[i - 1];
        while d > std::f64::consts::PI {
            offset -= two_pi;
            d -= two_pi;
        }
        while d < -std::f64::consts::PI {
            offset += two_pi;
            d += two_pi;
        }
        phase[i] += offset;
    }
}

/// Where the insertion-loss figure is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlMode {
    /// Grid point nearest the plan center.
    Midband,
    /// Mean over points with |Omega| <= 1.
    BandAverage,
}

/// Insertion loss in dB (nonnegative for passive data) at midband or
/// averaged over the passband.
pub fn insertion_loss(sweep: &SParamSweep, plan: &FrequencyPlan, mode: IlMode) -> Result<f64> {
    let f = sweep.freqs_hz();
    if plan.f0_hz() < f[0] || plan.f0_hz() > f[f.len() - 1] {
        return Err(Error::InvalidInput(format!(
            "plan center {} Hz outside sweep range [{}, {}]",
            plan.f0_hz(),
            f[0],
            f[f.len() - 1]
        )));
    }
    match mode {
        IlMode::Midband => {
            let i = sweep.nearest_index(plan.f0_hz());
            Ok(-sweep.db(SParam::S21, i))
        }
        IlMode::BandAverage => {
            let mut acc = 0.0;
            let mut count = 0usize;
            for (i, &fi) in f.iter().enumerate() {
                let w = plan.normalized_frequency(fi)?;
                if w.abs() <= 1.0 {
                    acc += -sweep.db(SParam::S21, i);
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::InvalidInput(
                    "no sweep points inside the passband".into(),
                ));
            }
            Ok(acc / count as f64)
        }
    }
}

/// Midband insertion loss (the default figure of merit).
pub fn midband_insertion_loss(sweep: &SParamSweep, plan: &FrequencyPlan) -> Result<f64> {
    insertion_loss(sweep, plan, IlMode::Midband)
}

/// Format a value with 9 significant digits in plain decimal notation.
pub(crate) fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// CSV emitter: `freq_hz,s11_db,s21_db,s11_deg,s21_deg,gd_s21_ns`, one row
/// per grid point, plain decimal notation, 9 significant digits.
pub fn write_csv(sweep: &SParamSweep) -> Result<String> {
    let gd = group_delay(sweep, SParam::S21)?;
    let mut out = String::from("freq_hz,s11_db,s21_db,s11_deg,s21_deg,gd_s21_ns\n");
    for ((&f, p), &tau) in sweep
        .freqs_hz()
        .iter()
        .zip(sweep.points().iter())
        .zip(gd.iter())
    {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig9(f),
            fmt_sig9(db_mag(p.s11)),
            fmt_sig9(db_mag(p.s21)),
            fmt_sig9(p.s11.arg().to_degrees()),
            fmt_sig9(p.s21.arg().to_degrees()),
            fmt_sig9(tau * 1e9),
        ));
    }
    Ok(out)
}

/// Read a sweep back from the CSV emitter's format. The group-delay column
/// is ignored; phases reconstruct the complex values, S12 = S21.
pub fn read_csv(text: &str) -> Result<SParamSweep> {
    let mut freqs = Vec::new();
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 {
            if !line.starts_with("freq_hz") {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected header starting with freq_hz".into(),
                });
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected at least 5 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad {what}: {s:?}"),
            })
        };
        let f = parse(fields[0], "frequency")?;
        let s11 = Complex64::from_polar(
            10f64.powf(parse(fields[1], "s11_db")? / 20.0),
            parse(fields[3], "s11_deg")?.to_radians(),
        );
        let s21 = Complex64::from_polar(
            10f64.powf(parse(fields[2], "s21_db")? / 20.0),
            parse(fields[4], "s21_deg")?.to_radians(),
        );
        freqs.push(f);
        points.push(TwoPort {
            s11,
            s21,
            s12: s21,
            s22: s11,
        });
    }
    SParamSweep::new(freqs, points, 50.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn plan1() -> FrequencyPlan {
        FrequencyPlan::new(3.26e9, 1.15e9).unwrap()
    }

    #[test]
    fn center_maps_to_zero() {
        let p = plan1();
        assert_eq!(p.normalized_frequency(3.26e9).unwrap(), 0.0);
    }

    #[test]
    fn design1_zero_frequency_maps_near_prescribed_omega() {
        let p = plan1();
        let w = p.normalized_frequency(4.15e9).unwrap();
        assert!((w - 1.3819).abs() < 1e-4, "Omega = {w}");
    }

    #[test]
    fn denormalize_round_trips() {
        let p = FrequencyPlan::new(3.35e9, 1.575e9).unwrap();
        let w = p.normalized_frequency(4.5e9).unwrap();
        let f = p.denormalize(w);
        assert_relative_eq!(f, 4.5e9, max_relative = 1e-12);
        assert_eq!(p.denormalize(0.0), 3.35e9);
    }

    #[test]
    fn band_edges_differ_by_exactly_bw() {
        for (f0, bw) in [(3.26e9, 1.15e9), (3.35e9, 1.575e9), (10.0e9, 0.2e9)] {
            let p = FrequencyPlan::new(f0, bw).unwrap();
            let (lo, hi) = p.band_edges();
            assert_relative_eq!(hi - lo, bw, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_frequency() {
        let p = plan1();
        assert!(p.normalized_frequency(0.0).is_err());
        assert!(p.normalized_frequency(-1.0).is_err());
    }

    #[test]
    fn single_resonator_full_transmission_at_center() {
        // S-1-L with M_S1 = M_1L = 1/sqrt(2): at lambda = 0, S21 = -1
        let mut m = CouplingMatrix::new(1);
        let k = 1.0 / 2.0_f64.sqrt();
        m.set(0, 1, k);
        m.set(1, 2, k);
        let pt = eval_lowpass_point(&m, 0.0, 0.0).unwrap();
        assert!(
            (pt.s21 - Complex64::new(-1.0, 0.0)).norm() < 1e-12,
            "{}",
            pt.s21
        );
        assert!((pt.s21.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lossless_sweeps_are_unitary_and_reciprocal() {
        let mut m = CouplingMatrix::new(2);
        m.set(0, 1, 1.2);
        m.set(1, 2, 1.6);
        m.set(2, 3, 1.2);
        let plan = plan1();
        let grid = default_grid(&plan, 201);
        let sw = sparams(&m, &plan, &grid, LossSpec::Lossless).unwrap();
        for p in sw.points() {
            let power = p.s11.norm_sqr() + p.s21.norm_sqr();
            assert!(
                (power - 1.0).abs() < 1e-10,
                "unitarity defect {}",
                power - 1.0
            );
            assert_eq!(p.s12, p.s21);
        }
    }

    #[test]
    fn loss_reduces_transmission_monotonically() {
        let mut m = CouplingMatrix::new(2);
        m.set(0, 1, 1.2);
        m.set(1, 2, 1.6);
        m.set(2, 3, 1.2);
        let plan = plan1();
        let grid = default_grid(&plan, 101);
        let lossless = sparams(&m, &plan, &grid, LossSpec::Lossless).unwrap();
        let qu_hi = sparams(&m, &plan, &grid, LossSpec::QualityFactor(1000.0)).unwrap();
        let qu_lo = sparams(&m, &plan, &grid, LossSpec::QualityFactor(100.0)).unwrap();
        for (i, &f) in grid.iter().enumerate() {
            let a = lossless.points()[i].s21.norm();
            let b = qu_hi.points()[i].s21.norm();
            let c = qu_lo.points()[i].s21.norm();
            assert!(b <= a + 1e-15 && c <= b + 1e-12, "at {f}: {a} {b} {c}");
        }
        let il0 = midband_insertion_loss(&lossless, &plan).unwrap();
        let il1 = midband_insertion_loss(&qu_hi, &plan).unwrap();
        let il2 = midband_insertion_loss(&qu_lo, &plan).unwrap();
        assert!(il0 < il1 && il1 < il2, "{il0} {il1} {il2}");
    }

    #[test]
    fn lowpass_and_bandpass_evaluations_agree() {
        let mut m = CouplingMatrix::new(2);
        m.set(0, 1, 1.2);
        m.set(1, 2, 1.6);
        m.set(2, 3, 1.2);
        m.set(1, 1, 0.2);
        let plan = plan1();
        let omegas = [-2.5, -1.0, -0.3, 0.0, 0.7, 1.0, 1.9];
        let direct = sweep_lowpass(&m, &omegas).unwrap();
        let grid: Vec<f64> = omegas.iter().map(|&w| plan.denormalize(w)).collect();
        let mapped = sparams(&m, &plan, &grid, LossSpec::Lossless).unwrap();
        for (a, b) in direct.iter().zip(mapped.points().iter()) {
            assert!((a.s11 - b.s11).norm() <= 1e-12, "{} vs {}", a.s11, b.s11);
            assert!((a.s21 - b.s21).norm() <= 1e-12, "{} vs {}", a.s21, b.s21);
        }
    }

    #[test]
    fn band_average_loss_covers_the_ripple() {
        let mut m = CouplingMatrix::new(2);
        m.set(0, 1, 1.2);
        m.set(1, 2, 1.6);
        m.set(2, 3, 1.2);
        let plan = plan1();
        let grid = default_grid(&plan, 401);
        let sw = sparams(&m, &plan, &grid, LossSpec::Lossless).unwrap();
        let avg = insertion_loss(&sw, &plan, IlMode::BandAverage).unwrap();
        assert!(avg > 0.0 && avg < 0.1, "band-average IL = {avg}");
    }

    #[test]
    fn group_delay_of_linear_phase_is_constant() {
        let freqs = linspace(1.0e9, 2.0e9, 401);
        let tau = 1.0e-9;
        let points: Vec<TwoPort> = freqs
            .iter()
            .map(|&f| {
                let s21 = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * tau);
                TwoPort {
                    s11: Complex64::new(0.0, 0.0),
                    s21,
                    s12: s21,
                    s22: Complex64::new(0.0, 0.0),
                }
            })
            .collect();
        let sw = SParamSweep::new(freqs, points, 50.0).unwrap();
        let gd = group_delay(&sw, SParam::S21).unwrap();
        for g in gd {
            assert_relative_eq!(g, tau, max_relative = 1e-3);
        }
    }

    #[test]
    fn group_delay_of_constant_phase_is_zero() {
        let freqs = linspace(1.0e9, 2.0e9, 11);
        let s = Complex64::new(0.4, 0.3);
        let points: Vec<TwoPort> = freqs
            .iter()
            .map(|_| TwoPort {
                s11: s,
                s21: s,
                s12: s,
                s22: s,
            })
            .collect();
        let sw = SParamSweep::new(freqs, points, 50.0).unwrap();
        for g in group_delay(&sw, SParam::S11).unwrap() {
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn group_delay_needs_three_points() {
        let freqs = vec![1.0e9, 2.0e9];
        let p = TwoPort {
            s11: Complex64::new(1.0, 0.0),
            s21: Complex64::new(0.0, 0.0),
            s12: Complex64::new(0.0, 0.0),
            s22: Complex64::new(1.0, 0.0),
        };
        let sw = SParamSweep::new(freqs, vec![p; 2], 50.0).unwrap();
        assert!(group_delay(&sw, SParam::S21).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_magnitude_and_phase() {
        let mut m = CouplingMatrix::new(2);
        m.set(0, 1, 1.1);
        m.set(1, 2, 1.4);
        m.set(2, 3, 1.1);
        let plan = plan1();
        let grid = default_grid(&plan, 51);
        let sw = sparams(&m, &plan, &grid, LossSpec::Lossless).unwrap();
        let text = write_csv(&sw).unwrap();
        assert!(text.starts_with("freq_hz,s11_db,s21_db,s11_deg,s21_deg,gd_s21_ns\n"));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), sw.len());
        for i in 0..sw.len() {
            assert_relative_eq!(back.freqs_hz()[i], sw.freqs_hz()[i], max_relative = 1e-8);
            let a = sw.points()[i].s21;
            let b = back.points()[i].s21;
            assert!((a.norm() - b.norm()).abs() <= 1e-8 * a.norm().max(1e-12));
        }
    }

    #[test]
    fn fmt_sig9_uses_plain_decimal() {
        assert_eq!(fmt_sig9(3.26e9), "3260000000");
        assert_eq!(fmt_sig9(-43.21), "-43.2100000");
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(0.522), "0.522000000");
    }

    #[test]
    fn singular_point_is_reported_with_frequency() {
        // a resonator decoupled from both ports makes A singular at its
        // resonance  (lambda + M_kk = 0)
        let mut m = CouplingMatrix::new(2);
        m.set(0, 1, 1.0);
        m.set(1, 3, 1.0);
        // resonator 2 isolated, resonant at lambda = 0
        let plan = plan1();
        let err = sparams(&m, &plan, &[3.26e9], LossSpec::Lossless).unwrap_err();
        match err {
            Error::Singular { freq, .. } => assert_eq!(freq, 3.26e9),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}

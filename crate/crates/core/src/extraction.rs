//! Parameter extraction from S-parameter data: inter-resonator coupling from
//! even/odd resonance splits, external Q from the reflection group-delay
//! peak, unloaded Q from midband insertion loss, and passband/stopband
//! figures of merit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::CouplingMatrix;
use crate::response::{
    group_delay, midband_insertion_loss, sparams, FrequencyPlan, LossSpec, SParam, SParamSweep,
};

/// Peaks must rise this far (dB) above their surrounding saddles to count.
const PEAK_PROMINENCE_DB: f64 = 6.0;

/// Band edges, bandwidth, in-band match, transmission zeros, and
/// spurious-free range measured from a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BandMetrics {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub bw_hz: f64,
    pub fbw: f64,
    /// Worst in-band return loss in dB.
    pub rl_min_db: f64,
    pub tz_freqs_hz: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_spur_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sfr_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sfr_pct: Option<f64>,
}

/// Extracted quantities; absent fields are omitted from serialized reports.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ExtractionReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_normalized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_ext: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_u: Option<f64>,
    pub diagnostics: String,
}

/// Coupling coefficient from the even/odd resonance split:
/// k = |f_a^2 - f_b^2| / (f_a^2 + f_b^2). Symmetric and scale-invariant.
pub fn extract_k_even_odd(f_a_hz: f64, f_b_hz: f64) -> Result<f64> {
    if !f_a_hz.is_finite() || f_a_hz <= 0.0 || !f_b_hz.is_finite() || f_b_hz <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "resonance frequencies must be positive, got {f_a_hz} and {f_b_hz}"
        )));
    }
    let a2 = f_a_hz * f_a_hz;
    let b2 = f_b_hz * f_b_hz;
    Ok((a2 - b2).abs() / (a2 + b2))
}

/// Normalized coupling M = (f0/bw) * k.
pub fn normalize_coupling(plan: &FrequencyPlan, k: f64) -> f64 {
    k * plan.f0_hz() / plan.bw_hz()
}

/// Inverse of `normalize_coupling`: k = M * bw / f0.
pub fn denormalize_coupling(plan: &FrequencyPlan, m: f64) -> f64 {
    m * plan.bw_hz() / plan.f0_hz()
}

/// Locate the two resonance peaks of a weakly-loaded coupled-resonator test
/// sweep. Returns (f_a, f_b) with f_a < f_b, each refined by a three-point
/// quadratic fit in dB. Exactly two peaks with at least 6 dB prominence must
/// be present.
pub fn find_even_odd_peaks(sweep: &SParamSweep) -> Result<(f64, f64)> {
    let n = sweep.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!(
            "peak search needs at least 5 points, got {n}"
        )));
    }
    let mags: Vec<f64> = (0..n).map(|i| sweep.db(SParam::S21, i)).collect();
    let mut peaks = Vec::new();
    for i in 1..(n - 1) {
        if mags[i] > mags[i - 1]
            && mags[i] >= mags[i + 1]
            && prominence(&mags, i) >= PEAK_PROMINENCE_DB
        {
            peaks.push(i);
        }
    }
    if peaks.len() != 2 {
        return Err(Error::Extraction(format!(
            "expected exactly two resonance peaks with {PEAK_PROMINENCE_DB} dB prominence, found {}",
            peaks.len()
        )));
    }
    let f = sweep.freqs_hz();
    let refine =
        |i: usize| parabola_vertex_x(f[i - 1], mags[i - 1], f[i], mags[i], f[i + 1], mags[i + 1]);
    let fa = refine(peaks[0]);
    let fb = refine(peaks[1]);
    Ok(if fa < fb { (fa, fb) } else { (fb, fa) })
}

/// Topographic prominence of a local maximum in the magnitude trace.
fn prominence(mags: &[f64], i: usize) -> f64 {
    let h = mags[i];
    let saddle = |range: &mut dyn Iterator<Item = usize>| -> f64 {
        let mut low = h;
        for j in range {
            if mags[j] > h {
                return low;
            }
            low = low.min(mags[j]);
        }
        low
    };
    let left = saddle(&mut (0..i).rev());
    let right = saddle(&mut ((i + 1)..mags.len()));
    h - left.max(right)
}

/// Vertex abscissa of the parabola through three points.
fn parabola_vertex_x(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curv = (d1 - d0) / (x2 - x0);
    if curv.abs() < 1e-300 {
        return x1;
    }
    // vertex of y = a(x - xm)^2 + c fitted through the three samples
    0.5 * (x0 + x1) - d0 / (2.0 * curv)
}

/// Vertex ordinate of the parabola through three points.
fn parabola_vertex_y(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let xv = parabola_vertex_x(x0, y0, x1, y1, x2, y2);
    // Lagrange evaluation at the vertex
    let l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
    y0 * l0 + y1 * l1 + y2 * l2
}

/// External quality factor from the singly-terminated reflection group-delay
/// peak: Q_ext = pi * f0 * tau_peak / 2.
pub fn extract_qext_group_delay(sweep: &SParamSweep, f0_hz: f64) -> Result<f64> {
    let tau = group_delay(sweep, SParam::S11)?;
    let n = tau.len();
    let mut i_max = 0;
    for (i, &t) in tau.iter().enumerate() {
        if t > tau[i_max] {
            i_max = i;
        }
    }
    if i_max == 0 || i_max == n - 1 {
        return Err(Error::Extraction(
            "group-delay peak sits on the grid boundary; widen the sweep".into(),
        ));
    }
    let f = sweep.freqs_hz();
    let tau_peak = parabola_vertex_y(
        f[i_max - 1],
        tau[i_max - 1],
        f[i_max],
        tau[i_max],
        f[i_max + 1],
        tau[i_max + 1],
    );
    if tau_peak.is_nan() || tau_peak <= 0.0 {
        return Err(Error::Extraction(
            "no resonant group-delay peak found in the sweep".into(),
        ));
    }
    Ok(std::f64::consts::PI * f0_hz * tau_peak / 2.0)
}

/// External quality factor implied by a source coupling: f0 / (M_S1^2 * bw).
///
/// The square on the coupling is required for consistency with the
/// group-delay extraction and with the design values this toolkit targets.
pub fn qext_from_matrix(plan: &FrequencyPlan, m_s1: f64) -> Result<f64> {
    if m_s1 == 0.0 || !m_s1.is_finite() {
        return Err(Error::InvalidInput(
            "source coupling must be nonzero and finite".into(),
        ));
    }
    Ok(plan.f0_hz() / (m_s1 * m_s1 * plan.bw_hz()))
}

/// Unloaded quality factor that makes the lossy model of `m` reproduce the
/// sweep's midband insertion loss; bisection on log(qu) over [10, 1e7] to
/// 0.1% relative tolerance.
pub fn extract_qu(sweep: &SParamSweep, m: &CouplingMatrix, plan: &FrequencyPlan) -> Result<f64> {
    let target = midband_insertion_loss(sweep, plan)?;
    if target <= 0.0 {
        return Err(Error::Extraction(format!(
            "no finite Q_U: sweep midband insertion loss is {target:.3e} dB"
        )));
    }
    let grid = sweep.freqs_hz().to_vec();
    let il_of = |qu: f64| -> Result<f64> {
        let sw = sparams(m, plan, &grid, LossSpec::QualityFactor(qu))?;
        midband_insertion_loss(&sw, plan)
    };
    let (mut lo, mut hi) = (10.0_f64, 1.0e7_f64);
    let il_lo = il_of(lo)?;
    let il_hi = il_of(hi)?;
    if target > il_lo {
        return Err(Error::Extraction(format!(
            "not bracketed: sweep insertion loss {target:.4} dB exceeds the model's {il_lo:.4} dB at qu = {lo}"
        )));
    }
    if target < il_hi {
        return Err(Error::Extraction(format!(
            "no finite Q_U: sweep insertion loss {target:.4} dB is at or below the model floor {il_hi:.4} dB"
        )));
    }
    while hi / lo > 1.001 {
        let mid = (lo * hi).sqrt();
        if il_of(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Measure band edges, bandwidth, worst in-band return loss, transmission
/// zeros, and the spurious-free range.
///
/// Band edges are the outermost frequencies, inside the contiguous passband
/// around the plan center, where the return loss has degraded `edge_drop_db`
/// from its midband value (linear interpolation between grid points). For
/// the equiripple designs this toolkit produces, the midband return loss
/// sits a few dB above the design return loss, so the default 3 dB drop
/// lands the edges on the equiripple band limits and the measured bandwidth
/// equals the design bandwidth.
///
/// The spurious search starts above the upper edge: the first upward
/// crossing of `spur_threshold_db` in |S21| after the response has fallen
/// below it marks the spurious band.
pub fn band_metrics(
    sweep: &SParamSweep,
    plan: &FrequencyPlan,
    edge_drop_db: f64,
    spur_threshold_db: f64,
) -> Result<BandMetrics> {
    let n = sweep.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!(
            "band metrics need at least 5 points, got {n}"
        )));
    }
    let f = sweep.freqs_hz();
    if plan.f0_hz() < f[0] || plan.f0_hz() > f[n - 1] {
        return Err(Error::InvalidInput(
            "plan center lies outside the sweep".into(),
        ));
    }
    if !edge_drop_db.is_finite() || edge_drop_db <= 0.0 {
        return Err(Error::InvalidInput(
            "edge drop must be a positive dB value".into(),
        ));
    }
    let mid = sweep.nearest_index(plan.f0_hz());
    let s21_db: Vec<f64> = (0..n).map(|i| sweep.db(SParam::S21, i)).collect();
    let rl: Vec<f64> = (0..n).map(|i| -sweep.db(SParam::S11, i)).collect();

    // contiguous coarse band: |S21| within 20 dB of its midband level
    let coarse_floor = s21_db[mid] - 20.0;
    let mut lo_c = mid;
    while lo_c > 0 && s21_db[lo_c - 1] >= coarse_floor {
        lo_c -= 1;
    }
    let mut hi_c = mid;
    while hi_c + 1 < n && s21_db[hi_c + 1] >= coarse_floor {
        hi_c += 1;
    }
    if lo_c == 0 || hi_c == n - 1 {
        return Err(Error::Extraction(
            "band edges not found: passband reaches the sweep boundary".into(),
        ));
    }

    let threshold = rl[mid] - edge_drop_db;
    // outermost downward crossing of the return-loss threshold on each side
    let mut hi_edge = None;
    for i in (mid..hi_c).rev() {
        if rl[i] >= threshold && rl[i + 1] < threshold {
            let t = (rl[i] - threshold) / (rl[i] - rl[i + 1]);
            hi_edge = Some((i, f[i] + t * (f[i + 1] - f[i])));
            break;
        }
    }
    let mut lo_edge = None;
    for i in (lo_c + 1)..=mid {
        if rl[i] >= threshold && rl[i - 1] < threshold {
            let t = (rl[i] - threshold) / (rl[i] - rl[i - 1]);
            lo_edge = Some((i, f[i] - t * (f[i] - f[i - 1])));
            break;
        }
    }
    let (hi_idx, f_hi) = hi_edge
        .ok_or_else(|| Error::Extraction("upper band edge not found within the sweep".into()))?;
    let (lo_idx, f_lo) = lo_edge
        .ok_or_else(|| Error::Extraction("lower band edge not found within the sweep".into()))?;

    let bw = f_hi - f_lo;
    let fbw = bw / plan.f0_hz();
    let rl_min_db = (lo_idx..=hi_idx)
        .map(|i| rl[i])
        .fold(f64::INFINITY, f64::min);

    // transmission zeros: out-of-band |S21| minima below -40 dB
    let mut tz_freqs_hz = Vec::new();
    for i in 1..(n - 1) {
        if f[i] > f_lo && f[i] < f_hi {
            continue;
        }
        if s21_db[i] < -40.0 && s21_db[i] < s21_db[i - 1] && s21_db[i] <= s21_db[i + 1] {
            tz_freqs_hz.push(parabola_vertex_x(
                f[i - 1],
                s21_db[i - 1],
                f[i],
                s21_db[i],
                f[i + 1],
                s21_db[i + 1],
            ));
        }
    }

    // first spurious band: |S21| re-crosses the threshold upward above f_hi
    let mut f_spur_hz = None;
    let mut below = false;
    for i in 0..n {
        if f[i] <= f_hi {
            continue;
        }
        if s21_db[i] < spur_threshold_db {
            below = true;
        } else if below {
            let t = (spur_threshold_db - s21_db[i - 1]) / (s21_db[i] - s21_db[i - 1]);
            f_spur_hz = Some(f[i - 1] + t * (f[i] - f[i - 1]));
            break;
        }
    }
    let sfr_hz = f_spur_hz.map(|fs| fs - f_hi);
    let sfr_pct = sfr_hz.map(|s| s / f_hi);

    Ok(BandMetrics {
        f_lo_hz: f_lo,
        f_hi_hz: f_hi,
        bw_hz: bw,
        fbw,
        rl_min_db,
        tz_freqs_hz,
        f_spur_hz,
        sfr_hz,
        sfr_pct,
    })
}

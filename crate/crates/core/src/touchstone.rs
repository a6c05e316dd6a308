//! Touchstone v1 two-port (.s2p) reading and writing.
//!
//! Grammar accepted: '!' comments anywhere, one case-insensitive '#' option
//! line (frequency unit, parameter type 'S', format RI/MA/DB, 'R' followed
//! by the reference impedance, in any order), and data lines of nine numbers
//! per frequency in the order f, S11, S21, S12, S22. One record per line;
//! continuation lines are not supported. Version-2 files and non-S
//! parameters are rejected.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::response::{SParamSweep, TwoPort};

/// Value encoding of the data pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsFormat {
    /// (real, imaginary)
    Ri,
    /// (linear magnitude, angle in degrees)
    Ma,
    /// (20*log10 magnitude, angle in degrees)
    Db,
}

impl TsFormat {
    fn token(&self) -> &'static str {
        match self {
            TsFormat::Ri => "RI",
            TsFormat::Ma => "MA",
            TsFormat::Db => "DB",
        }
    }

    fn decode(&self, a: f64, b: f64) -> Complex64 {
        match self {
            TsFormat::Ri => Complex64::new(a, b),
            TsFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            TsFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(&self, s: Complex64) -> (f64, f64) {
        match self {
            TsFormat::Ri => (s.re, s.im),
            TsFormat::Ma => (s.norm(), s.arg().to_degrees()),
            TsFormat::Db => {
                let mag = s.norm();
                let db = if mag <= 1e-20 {
                    -400.0
                } else {
                    20.0 * mag.log10()
                };
                (db, s.arg().to_degrees())
            }
        }
    }
}

/// Frequency unit of the option line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FreqUnit {
    fn scale(&self) -> f64 {
        match self {
            FreqUnit::Hz => 1.0,
            FreqUnit::KHz => 1e3,
            FreqUnit::MHz => 1e6,
            FreqUnit::GHz => 1e9,
        }
    }

    fn token(&self) -> &'static str {
        match self {
            FreqUnit::Hz => "Hz",
            FreqUnit::KHz => "kHz",
            FreqUnit::MHz => "MHz",
            FreqUnit::GHz => "GHz",
        }
    }
}

/// Option-line settings; defaults are GHz, S, MA, 50 ohms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchstoneOptions {
    pub freq_unit: FreqUnit,
    pub format: TsFormat,
    pub z_ref: f64,
}

impl Default for TouchstoneOptions {
    fn default() -> Self {
        TouchstoneOptions {
            freq_unit: FreqUnit::GHz,
            format: TsFormat::Ma,
            z_ref: 50.0,
        }
    }
}

/// Parse a Touchstone v1 two-port document.
pub fn parse_touchstone(text: &str) -> Result<SParamSweep> {
    let mut opts: Option<TouchstoneOptions> = None;
    let mut freqs = Vec::new();
    let mut points = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('!') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('[') {
            return Err(Error::Parse {
                line,
                msg: "Touchstone v2 keywords are not supported (v1 two-port only)".into(),
            });
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if opts.is_some() {
                return Err(Error::Parse {
                    line,
                    msg: "multiple option lines".into(),
                });
            }
            if !freqs.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "option line must precede the data".into(),
                });
            }
            opts = Some(parse_option_line(rest, line)?);
            continue;
        }

        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "expected 9 numbers per two-port record, got {}",
                    fields.len()
                ),
            });
        }
        let mut nums = [0.0_f64; 9];
        for (k, field) in fields.iter().enumerate() {
            nums[k] = field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number {field:?}"),
            })?;
        }
        let o = opts.unwrap_or_default();
        let f_hz = nums[0] * o.freq_unit.scale();
        if !f_hz.is_finite() || f_hz <= 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("frequency must be positive and finite, got {f_hz} Hz"),
            });
        }
        if let Some(&last) = freqs.last() {
            if f_hz <= last {
                return Err(Error::Parse {
                    line,
                    msg: format!(
                        "frequencies must be strictly increasing ({last} Hz then {f_hz} Hz)"
                    ),
                });
            }
        }
        let s11 = o.format.decode(nums[1], nums[2]);
        let s21 = o.format.decode(nums[3], nums[4]);
        let s12 = o.format.decode(nums[5], nums[6]);
        let s22 = o.format.decode(nums[7], nums[8]);
        freqs.push(f_hz);
        points.push(TwoPort { s11, s21, s12, s22 });
    }

    let z_ref = opts.unwrap_or_default().z_ref;
    SParamSweep::new(freqs, points, z_ref)
}

fn parse_option_line(rest: &str, line: usize) -> Result<TouchstoneOptions> {
    let mut o = TouchstoneOptions::default();
    let tokens: Vec<String> = rest.split_whitespace().map(|t| t.to_uppercase()).collect();
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i].as_str() {
            "HZ" => o.freq_unit = FreqUnit::Hz,
            "KHZ" => o.freq_unit = FreqUnit::KHz,
            "MHZ" => o.freq_unit = FreqUnit::MHz,
            "GHZ" => o.freq_unit = FreqUnit::GHz,
            "S" => {}
            "Y" | "Z" | "H" | "G" => {
                return Err(Error::Parse {
                    line,
                    msg: format!("parameter type {} not supported, only S", tokens[i]),
                })
            }
            "RI" => o.format = TsFormat::Ri,
            "MA" => o.format = TsFormat::Ma,
            "DB" => o.format = TsFormat::Db,
            "R" => {
                i += 1;
                let z = tokens.get(i).ok_or(Error::Parse {
                    line,
                    msg: "option 'R' must be followed by an impedance".into(),
                })?;
                o.z_ref = z.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad reference impedance {z:?}"),
                })?;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown option token {other:?}"),
                })
            }
        }
        i += 1;
    }
    Ok(o)
}

/// Serialize a sweep as Touchstone v1 with 9 significant digits.
/// `parse_touchstone(write_touchstone(x))` reproduces x to 1e-8 per value.
pub fn write_touchstone(sweep: &SParamSweep, opts: &TouchstoneOptions) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "! {} {} two-port S-parameters\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    ));
    out.push_str(&format!(
        "# {} S {} R {}\n",
        opts.freq_unit.token(),
        opts.format.token(),
        opts.z_ref
    ));
    for (i, &f) in sweep.freqs_hz().iter().enumerate() {
        let p = &sweep.points()[i];
        let mut row = vec![f / opts.freq_unit.scale()];
        for s in [p.s11, p.s21, p.s12, p.s22] {
            let (a, b) = opts.format.encode(s);
            row.push(a);
            row.push(b);
        }
        let cells: Vec<String> = row.iter().map(|&v| fmt9(v)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn fmt9(x: f64) -> String {
    format!("{:.8e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::SParam;

    #[test]
    fn parses_ri_record() {
        let sw = parse_touchstone("# GHz S RI R 50\n3.26 0.01 0 0.99 0 0.99 0 0.01 0").unwrap();
        assert_eq!(sw.len(), 1);
        assert_eq!(sw.freqs_hz()[0], 3.26e9);
        assert_eq!(sw.points()[0].s21, Complex64::new(0.99, 0.0));
        assert_eq!(sw.z_ref(), 50.0);
    }

    #[test]
    fn parses_ma_with_mhz_unit() {
        let sw = parse_touchstone("# MHz S MA R 50\n3260 1 90 0 0 0 0 1 90").unwrap();
        assert_eq!(sw.freqs_hz()[0], 3.26e9);
        let s11 = sw.points()[0].s11;
        assert!((s11 - Complex64::new(0.0, 1.0)).norm() < 1e-12, "{s11}");
    }

    #[test]
    fn parses_db_format() {
        let sw = parse_touchstone("# GHz S DB R 50\n6.0 0 0 -20 0 -20 0 0 0").unwrap();
        assert!((sw.points()[0].s21.norm() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn defaults_when_option_line_missing_fields() {
        // bare option line: defaults GHz / MA / 50
        let sw = parse_touchstone("#\n1.0 1 0 0 0 0 0 1 0").unwrap();
        assert_eq!(sw.freqs_hz()[0], 1.0e9);
        assert_eq!(sw.points()[0].s11, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn option_line_tokens_any_order_any_case() {
        let sw = parse_touchstone("# r 75 db s mhz\n3260 0 0 -6 0 -6 0 0 0").unwrap();
        assert_eq!(sw.z_ref(), 75.0);
        assert_eq!(sw.freqs_hz()[0], 3.26e9);
    }

    #[test]
    fn comments_stripped_anywhere() {
        let text =
            "! header comment\n# GHz S RI R 50 ! trailing\n1.0 1 0 0 0 0 0 1 0 ! data note\n! tail";
        let sw = parse_touchstone(text).unwrap();
        assert_eq!(sw.len(), 1);
    }

    #[test]
    fn rejects_bad_field_count_with_line_number() {
        let err = parse_touchstone("# GHz S RI R 50\n1.0 1 0 0 0 0 0 1").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("9"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_and_decreasing_frequencies() {
        let err =
            parse_touchstone("# Hz S RI R 50\n10 1 0 0 0 0 0 1 0\n10 1 0 0 0 0 0 1 0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err =
            parse_touchstone("# Hz S RI R 50\n10 1 0 0 0 0 0 1 0\n5 1 0 0 0 0 0 1 0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn rejects_non_s_parameters_and_v2() {
        assert!(parse_touchstone("# GHz Y RI R 50\n").is_err());
        assert!(parse_touchstone("[Version] 2.0\n# GHz S RI R 50\n").is_err());
    }

    #[test]
    fn option_line_after_data_is_rejected() {
        let err = parse_touchstone("1.0 1 0 0 0 0 0 1 0\n# GHz S RI R 50").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn nonpositive_frequency_is_rejected_with_line_number() {
        let err = parse_touchstone("# Hz S RI R 50\n-5 1 0 0 0 0 0 1 0").unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("positive"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_sweep_writes_option_line_only() {
        let sw = SParamSweep::new(vec![], vec![], 50.0).unwrap();
        let text = write_touchstone(&sw, &TouchstoneOptions::default());
        let data_lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim_start().starts_with(['!', '#']) && !l.trim().is_empty())
            .collect();
        assert!(data_lines.is_empty());
        let back = parse_touchstone(&text).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn round_trip_all_formats() {
        let freqs = vec![1.0e9, 2.0e9, 3.0e9];
        let points: Vec<TwoPort> = (0..3)
            .map(|i| {
                let a = 0.3 + 0.2 * i as f64;
                TwoPort {
                    s11: Complex64::new(a, -0.4),
                    s21: Complex64::new(-0.2, a),
                    s12: Complex64::new(-0.2, a),
                    s22: Complex64::new(0.1, 0.05 * i as f64),
                }
            })
            .collect();
        let sw = SParamSweep::new(freqs, points, 50.0).unwrap();
        for format in [TsFormat::Ri, TsFormat::Ma, TsFormat::Db] {
            let opts = TouchstoneOptions {
                format,
                ..Default::default()
            };
            let text = write_touchstone(&sw, &opts);
            let back = parse_touchstone(&text).unwrap();
            for i in 0..sw.len() {
                for which in [SParam::S11, SParam::S21, SParam::S12, SParam::S22] {
                    let a = sw.points()[i].get(which);
                    let b = back.points()[i].get(which);
                    assert!(
                        (a - b).norm() <= 1e-8 * a.norm().max(1.0),
                        "{format:?} {which:?}: {a} vs {b}"
                    );
                }
            }
        }
    }
}

//! The ratio-announcement measurement device.
//!
//! A person watches a machine announce "x versus y" and records how
//! surprised they are on a 0..10 scale. The recorded pairs calibrate a
//! curve from announced ratios to surprise degrees on `[0, 1]`, with
//! "1 versus 1" at 0 and "1,000,000,000 versus 1" at 1 fixed.

use std::fmt;

use serde::Serialize;

/// Largest ratio the device can announce; treated as saturation.
pub const MAX_RATIO: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("surprise {lower_surprise} at {lower} versus {higher_surprise} at {higher} decreases as the ratio grows")]
    MonotonicityViolation {
        lower: String,
        lower_surprise: f64,
        higher: String,
        higher_surprise: f64,
    },
    #[error("ratio {x}:{y} exceeds {MAX_RATIO}:1")]
    RatioOutOfRange { x: u64, y: u64 },
    #[error("ratio {x}:{y} is recorded twice")]
    DuplicateRatio { x: u64, y: u64 },
    #[error("ratio terms must be positive, got {x}:{y}")]
    ZeroRatio { x: u64, y: u64 },
    #[error("surprise {0} is outside the 0..10 scale")]
    SurpriseOutOfRange(f64),
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `x:y` reduced and ordered so the first term is the larger.
pub fn normalize_ratio(x: u64, y: u64) -> Result<(u64, u64), CalibrationError> {
    if x == 0 || y == 0 {
        return Err(CalibrationError::ZeroRatio { x, y });
    }
    let g = gcd(x, y);
    let (a, b) = (x / g, y / g);
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    if a as f64 / b as f64 > MAX_RATIO as f64 {
        return Err(CalibrationError::RatioOutOfRange { x, y });
    }
    Ok((a, b))
}

/// One point of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anchor {
    /// Reduced ratio, larger term first.
    pub ratio: (u64, u64),
    pub log_ratio: f64,
    pub surprise: f64,
}

/// Monotone map from announced ratios to surprise on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationCurve {
    anchors: Vec<Anchor>,
}

impl CalibrationCurve {
    /// Builds a curve from `(x, y, surprise on 0..10)` recordings.
    ///
    /// A recording of `1:1` or `10⁹:1` is accepted only if it agrees with
    /// the fixed endpoint.
    pub fn new(entries: &[(u64, u64, f64)]) -> Result<Self, CalibrationError> {
        let endpoint = |ratio: (u64, u64), surprise: f64| Anchor {
            ratio,
            log_ratio: (ratio.0 as f64 / ratio.1 as f64).ln(),
            surprise,
        };
        let mut anchors = vec![endpoint((1, 1), 0.0), endpoint((MAX_RATIO, 1), 1.0)];
        let mut seen = Vec::new();
        for &(x, y, s) in entries {
            if !(0.0..=10.0).contains(&s) {
                return Err(CalibrationError::SurpriseOutOfRange(s));
            }
            let ratio = normalize_ratio(x, y)?;
            if seen.contains(&ratio) {
                return Err(CalibrationError::DuplicateRatio { x, y });
            }
            seen.push(ratio);
            let anchor = endpoint(ratio, s / 10.0);
            match anchors.iter().find(|a| a.ratio == ratio) {
                Some(fixed) if fixed.surprise == anchor.surprise => {}
                Some(fixed) => {
                    let (lower, higher) = if ratio == (1, 1) { (fixed, &anchor) } else { (&anchor, fixed) };
                    return Err(violation(lower, higher));
                }
                None => anchors.push(anchor),
            }
        }
        anchors.sort_by(|a, b| a.log_ratio.total_cmp(&b.log_ratio));
        for pair in anchors.windows(2) {
            if pair[1].surprise < pair[0].surprise {
                return Err(violation(&pair[0], &pair[1]));
            }
        }
        Ok(CalibrationCurve { anchors })
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    /// Surprise at an announcement of `x` versus `y`, interpolated linearly
    /// in the log ratio between the bracketing anchors.
    pub fn to_surprise(&self, x: u64, y: u64) -> Result<f64, CalibrationError> {
        let ratio = normalize_ratio(x, y)?;
        if let Some(a) = self.anchors.iter().find(|a| a.ratio == ratio) {
            return Ok(a.surprise);
        }
        Ok(self.at_log_ratio((ratio.0 as f64 / ratio.1 as f64).ln()))
    }

    /// Curve value at a natural-log ratio, clamped to the endpoints.
    pub fn at_log_ratio(&self, r: f64) -> f64 {
        let first = self.anchors[0];
        let last = self.anchors[self.anchors.len() - 1];
        if r <= first.log_ratio {
            return first.surprise;
        }
        if r >= last.log_ratio {
            return last.surprise;
        }
        let i = self.anchors.partition_point(|a| a.log_ratio <= r);
        let (a, b) = (self.anchors[i - 1], self.anchors[i]);
        if b.log_ratio == a.log_ratio {
            return b.surprise;
        }
        let t = (r - a.log_ratio) / (b.log_ratio - a.log_ratio);
        (a.surprise + t * (b.surprise - a.surprise)).clamp(a.surprise, b.surprise)
    }
}

fn violation(lower: &Anchor, higher: &Anchor) -> CalibrationError {
    let name = |a: &Anchor| format!("{}:{}", a.ratio.0, a.ratio.1);
    CalibrationError::MonotonicityViolation {
        lower: name(lower),
        lower_surprise: lower.surprise,
        higher: name(higher),
        higher_surprise: higher.surprise,
    }
}

/// One anchor per line: `x y log_ratio surprise`.
impl fmt::Display for CalibrationCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.anchors {
            writeln!(f, "{} {} {:.6} {:.6}", a.ratio.0, a.ratio.1, a.log_ratio, a.surprise)?;
        }
        Ok(())
    }
}

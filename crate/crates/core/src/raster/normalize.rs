//! Percentile stretch of a floating-point plane to bytes.

use crate::error::{Error, Result};

/// Result of [`percentile_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPlane {
    pub data: Vec<u8>,
    pub low: f64,
    pub high: f64,
    /// Set when `low == high`; `data` is then all zeros.
    pub degenerate: bool,
}

/// Percentile of sorted finite values using linear interpolation between
/// order statistics at rank `p/100 · (n − 1)`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Stretches `band` so the `p_low` percentile maps to 0 and `p_high` to 255.
///
/// Non-finite values and `nodata` are excluded from the percentile
/// computation and map to 0. Rounding is half-up.
pub fn percentile_normalize(
    band: &[f32],
    p_low: f64,
    p_high: f64,
    nodata: Option<f32>,
) -> Result<NormalizedPlane> {
    if band.is_empty() {
        return Err(Error::InvalidParameter("cannot normalize an empty band".into()));
    }
    if !(0.0..100.0).contains(&p_low) || !(p_low < p_high && p_high <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "percentiles must satisfy 0 <= p_low < p_high <= 100 (got {p_low}, {p_high})"
        )));
    }
    let is_valid = |v: f32| v.is_finite() && Some(v) != nodata;
    let mut values: Vec<f64> = band
        .iter()
        .copied()
        .filter(|&v| is_valid(v))
        .map(f64::from)
        .collect();
    if values.is_empty() {
        return Ok(NormalizedPlane {
            data: vec![0; band.len()],
            low: f64::NAN,
            high: f64::NAN,
            degenerate: true,
        });
    }
    values.sort_unstable_by(f64::total_cmp);
    let low = percentile_sorted(&values, p_low);
    let high = percentile_sorted(&values, p_high);
    if high <= low {
        log::warn!("degenerate band: percentile range collapsed at {low}");
        return Ok(NormalizedPlane {
            data: vec![0; band.len()],
            low,
            high,
            degenerate: true,
        });
    }
    let scale = 255.0 / (high - low);
    let data = band
        .iter()
        .map(|&v| {
            if !is_valid(v) {
                return 0;
            }
            let s = (f64::from(v) - low) * scale;
            (s + 0.5).floor().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(NormalizedPlane {
        data,
        low,
        high,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> Vec<f32> {
        (0..=100).map(|v| v as f32).collect()
    }

    #[test]
    fn ramp_midpoint_rounds_half_up() {
        let out = percentile_normalize(&ramp(), 2.0, 98.0, None).unwrap();
        assert_eq!(out.low, 2.0);
        assert_eq!(out.high, 98.0);
        // 255 * 48 / 96 = 127.5
        assert_eq!(out.data[50], 128);
        assert!(!out.degenerate);
    }

    #[test]
    fn clamps_outside_percentiles() {
        let out = percentile_normalize(&ramp(), 2.0, 98.0, None).unwrap();
        assert!(out.data[..=2].iter().all(|&v| v == 0));
        assert!(out.data[98..].iter().all(|&v| v == 255));
    }

    #[test]
    fn constant_band_is_degenerate() {
        let out = percentile_normalize(&[7.0; 64], 2.0, 98.0, None).unwrap();
        assert!(out.degenerate);
        assert!(out.data.iter().all(|&v| v == 0));
    }

    #[test]
    fn rejects_bad_percentiles() {
        assert!(percentile_normalize(&ramp(), 98.0, 2.0, None).is_err());
        assert!(percentile_normalize(&ramp(), 2.0, 101.0, None).is_err());
        assert!(percentile_normalize(&[], 2.0, 98.0, None).is_err());
    }

    #[test]
    fn nodata_is_ignored() {
        let mut band = ramp();
        band.push(-9999.0);
        let out = percentile_normalize(&band, 2.0, 98.0, Some(-9999.0)).unwrap();
        assert_eq!(out.low, 2.0);
        assert_eq!(*out.data.last().unwrap(), 0);
    }

    proptest! {
        #[test]
        fn normalization_is_monotone(mut values in prop::collection::vec(-1e4f32..1e4, 2..200)) {
            let out = percentile_normalize(&values, 2.0, 98.0, None).unwrap();
            let mut pairs: Vec<(f32, u8)> = values.drain(..).zip(out.data).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pairs.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
        }
    }
}

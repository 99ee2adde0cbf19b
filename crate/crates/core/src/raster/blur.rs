//! Separable Gaussian blur and unsharp edge enhancement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{reflect_index, ByteComposite, Variant};
use crate::error::{Error, Result};

pub const DEFAULT_RADIUS: usize = 11;
pub const DEFAULT_SIGMA: f64 = 10.0;
pub const DEFAULT_WEIGHTING_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceParams {
    pub radius: usize,
    pub sigma: f64,
    pub weighting_factor: f64,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        Self {
            radius: DEFAULT_RADIUS,
            sigma: DEFAULT_SIGMA,
            weighting_factor: DEFAULT_WEIGHTING_FACTOR,
        }
    }
}

/// Normalized `(2·radius + 1)`-tap kernel with taps ∝ exp(−i²/(2σ²)).
pub fn gaussian_kernel(radius: usize, sigma: f64) -> Result<Vec<f64>> {
    if radius < 1 || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blur needs radius >= 1 and sigma > 0 (got {radius}, {sigma})"
        )));
    }
    let r = radius as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Convolves a plane with `kernel` along rows then columns, reflecting at borders.
pub fn blur_plane(plane: &[f32], width: usize, height: usize, kernel: &[f64]) -> Vec<f32> {
    assert_eq!(plane.len(), width * height);
    let r = (kernel.len() / 2) as isize;

    let mut horizontal = vec![0.0f64; width * height];
    horizontal
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, out)| {
            let src = &plane[row * width..(row + 1) * width];
            for (col, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let c = reflect_index(col as isize + k as isize - r, width);
                    acc += w * f64::from(src[c]);
                }
                *o = acc;
            }
        });

    let mut out = vec![0.0f32; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(row, dst)| {
        for (col, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let rr = reflect_index(row as isize + k as isize - r, height);
                acc += w * horizontal[rr * width + col];
            }
            *d = acc as f32;
        }
    });
    out
}

/// Blurs each channel of a byte composite, returning floating-point channels.
pub fn gaussian_blur(image: &ByteComposite, radius: usize, sigma: f64) -> Result<[Vec<f32>; 3]> {
    let kernel = gaussian_kernel(radius, sigma)?;
    let (w, h) = (image.width(), image.height());
    let blur = |c: &Vec<u8>| {
        let f: Vec<f32> = c.iter().map(|&v| f32::from(v)).collect();
        blur_plane(&f, w, h, &kernel)
    };
    let ch = image.channels();
    Ok([blur(&ch[0]), blur(&ch[1]), blur(&ch[2])])
}

/// `img + (img − blurred)·wf`, clamped to [0, 255] and rounded half-up.
pub fn unsharp_plane(img: &[u8], blurred: &[f32], wf: f64) -> Vec<u8> {
    img.iter()
        .zip(blurred)
        .map(|(&v, &b)| {
            let v = f64::from(v);
            let e = v + (v - f64::from(b)) * wf;
            (e + 0.5).floor().clamp(0.0, 255.0) as u8
        })
        .collect()
}

/// Edge-enhanced copy of `image` (variant `edge_enhanced`).
pub fn enhance_edges(image: &ByteComposite, params: &EnhanceParams) -> Result<ByteComposite> {
    if !params.weighting_factor.is_finite() {
        return Err(Error::InvalidParameter("weighting factor must be finite".into()));
    }
    let blurred = gaussian_blur(image, params.radius, params.sigma)?;
    let ch = image.channels();
    let channels = [
        unsharp_plane(&ch[0], &blurred[0], params.weighting_factor),
        unsharp_plane(&ch[1], &blurred[1], params.weighting_factor),
        unsharp_plane(&ch[2], &blurred[2], params.weighting_factor),
    ];
    ByteComposite::new(
        image.width(),
        image.height(),
        channels,
        *image.transform(),
        image.crs_id(),
        Variant::EdgeEnhanced,
        image.date_id.clone(),
    )
}

//! Tie-point affine georectification.
//!
//! Pixel coordinates here use pixel centers at integer positions: pixel
//! `(col, row)` sits at `(col, row)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::{Band, RasterGrid};
use super::pansharpen::{bilinear_clamped, Resampling};
use crate::error::{Error, Result};

/// One correspondence from a source pixel position to a target pixel position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiePoint {
    pub source: [f64; 2],
    pub target: [f64; 2],
}

impl TiePoint {
    pub fn new(source: [f64; 2], target: [f64; 2]) -> Self {
        Self { source, target }
    }
}

/// `(x, y) → (a·x + b·y + c, d·x + e·y + f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineTransform {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 1.0,
        f: 0.0,
    };

    pub fn new(coeffs: [f64; 6]) -> Self {
        let [a, b, c, d, e, f] = coeffs;
        Self { a, b, c, d, e, f }
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.b * y + self.c,
            self.d * x + self.e * y + self.f,
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        let scale = self.a.abs().max(self.b.abs()).max(self.d.abs()).max(self.e.abs());
        if !det.is_finite() || det.abs() <= 1e-12 * scale * scale {
            return Err(Error::InvalidParameter(format!(
                "affine transform is not invertible (determinant {det})"
            )));
        }
        let a = self.e / det;
        let b = -self.b / det;
        let d = -self.d / det;
        let e = self.a / det;
        Ok(Self {
            a,
            b,
            c: -(a * self.c + b * self.f),
            d,
            e,
            f: -(d * self.c + e * self.f),
        })
    }
}

/// Least-squares affine fit plus its root-mean-square target residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub transform: AffineTransform,
    pub rms_residual: f64,
}

/// Fits the affine transform minimizing squared target residuals.
///
/// Points are centered and scaled before solving so the design matrix stays
/// well conditioned at scene-sized pixel coordinates.
pub fn fit_affine(ties: &[TiePoint]) -> Result<AffineFit> {
    if ties.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "affine fit needs at least 3 tie points (got {})",
            ties.len()
        )));
    }
    let n = ties.len() as f64;
    let mx = ties.iter().map(|t| t.source[0]).sum::<f64>() / n;
    let my = ties.iter().map(|t| t.source[1]).sum::<f64>() / n;
    let spread = ties
        .iter()
        .map(|t| (t.source[0] - mx).abs().max((t.source[1] - my).abs()))
        .fold(0.0, f64::max);
    if spread == 0.0 {
        return Err(Error::InvalidParameter("tie points are coincident".into()));
    }

    let design = DMatrix::from_fn(ties.len(), 3, |i, j| match j {
        0 => (ties[i].source[0] - mx) / spread,
        1 => (ties[i].source[1] - my) / spread,
        _ => 1.0,
    });
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= 1e-10 * smax {
        return Err(Error::InvalidParameter("tie points are collinear".into()));
    }
    let tx = DVector::from_iterator(ties.len(), ties.iter().map(|t| t.target[0]));
    let ty = DVector::from_iterator(ties.len(), ties.iter().map(|t| t.target[1]));
    let px = svd
        .solve(&tx, 0.0)
        .map_err(|e| Error::InvalidParameter(format!("affine solve failed: {e}")))?;
    let py = svd
        .solve(&ty, 0.0)
        .map_err(|e| Error::InvalidParameter(format!("affine solve failed: {e}")))?;

    // undo the normalization: u = (x - mx)/s, v = (y - my)/s
    let a = px[0] / spread;
    let b = px[1] / spread;
    let c = px[2] - a * mx - b * my;
    let d = py[0] / spread;
    let e = py[1] / spread;
    let f = py[2] - d * mx - e * my;
    let transform = AffineTransform { a, b, c, d, e, f };

    let sq: f64 = ties
        .iter()
        .map(|t| {
            let (x, y) = transform.apply(t.source[0], t.source[1]);
            (x - t.target[0]).powi(2) + (y - t.target[1]).powi(2)
        })
        .sum();
    Ok(AffineFit {
        transform,
        rms_residual: (sq / n).sqrt(),
    })
}

/// Resamples `raster` into the target frame of `t` (source → target) by
/// inverse mapping. Output keeps the input grid; pixels mapping outside the
/// source get `nodata`.
pub fn warp(raster: &RasterGrid, t: &AffineTransform, method: Resampling, nodata: f32) -> Result<RasterGrid> {
    let inv = t.inverse()?;
    let (w, h) = (raster.width(), raster.height());
    let bands = raster
        .bands()
        .iter()
        .map(|band| {
            let mut data = vec![nodata; w * h];
            for row in 0..h {
                for col in 0..w {
                    let (sx, sy) = inv.apply(col as f64, row as f64);
                    // points within half a pixel of the edge still map to a source pixel
                    if sx < -0.5 || sy < -0.5 || sx >= w as f64 - 0.5 || sy >= h as f64 - 0.5 {
                        continue;
                    }
                    data[row * w + col] = match method {
                        Resampling::Nearest => {
                            let c = ((sx + 0.5).floor() as usize).min(w - 1);
                            let r = ((sy + 0.5).floor() as usize).min(h - 1);
                            band.data[r * w + c]
                        }
                        Resampling::Bilinear => bilinear_clamped(&band.data, w, h, sx, sy),
                    };
                }
            }
            Band {
                name: band.name.clone(),
                data,
            }
        })
        .collect();
    Ok(RasterGrid::new(w, h, bands, *raster.transform(), raster.crs_id())?.with_nodata(Some(nodata)))
}

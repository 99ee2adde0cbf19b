//! Georeferenced rasters and all image preprocessing.

mod affine;
mod blur;
mod composite;
mod grid;
pub mod io;
mod normalize;
mod pansharpen;
mod tiling;

pub use affine::{fit_affine, warp, AffineFit, AffineTransform, TiePoint};
pub use blur::{
    blur_plane, enhance_edges, gaussian_blur, gaussian_kernel, unsharp_plane, EnhanceParams,
    DEFAULT_RADIUS, DEFAULT_SIGMA, DEFAULT_WEIGHTING_FACTOR,
};
pub use composite::{build_composite, CompositeParams, CompositeReport};
pub use grid::{Band, ByteComposite, GeoTransform, RasterGrid, Variant};
pub use normalize::{percentile_normalize, percentile_sorted, NormalizedPlane};
pub use pansharpen::{pansharpen, resample_plane, Pansharpened, Resampling, MS_BANDS};
pub use tiling::{make_tiles, Tile, TileGrid, TileWindow, TILE_SIZES};

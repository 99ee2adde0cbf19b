//! Non-overlapping square tiling with reflect padding at the far edges.

use serde::{Deserialize, Serialize};

use super::grid::{reflect_index, ByteComposite, GeoTransform, Variant};
use crate::error::{Error, Result};

pub const TILE_SIZES: [usize; 4] = [256, 512, 768, 1024];

/// Layout of a square tile grid over a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileGrid {
    pub tile_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub scene_width: usize,
    pub scene_height: usize,
    pub transform: GeoTransform,
}

impl TileGrid {
    /// Grid for any positive tile size; [`make_tiles`] restricts sizes.
    pub fn new(scene_width: usize, scene_height: usize, tile_size: usize, transform: GeoTransform) -> Result<Self> {
        if tile_size == 0 || scene_width == 0 || scene_height == 0 {
            return Err(Error::InvalidParameter("tile grid dimensions must be positive".into()));
        }
        Ok(Self {
            tile_size,
            cols: scene_width.div_ceil(tile_size),
            rows: scene_height.div_ceil(tile_size),
            scene_width,
            scene_height,
            transform,
        })
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tile_index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    pub fn tile_position(&self, index: usize) -> (usize, usize) {
        (index % self.cols, index / self.cols)
    }

    /// Pixel offset and valid extent of tile `index`.
    pub fn window(&self, index: usize) -> TileWindow {
        let (col, row) = self.tile_position(index);
        let offset_x = col * self.tile_size;
        let offset_y = row * self.tile_size;
        TileWindow {
            index,
            col,
            row,
            offset_x,
            offset_y,
            size: self.tile_size,
            valid_width: (self.scene_width - offset_x).min(self.tile_size),
            valid_height: (self.scene_height - offset_y).min(self.tile_size),
        }
    }

    pub fn tile_transform(&self, index: usize) -> GeoTransform {
        let w = self.window(index);
        self.transform.offset(w.offset_x, w.offset_y)
    }

    /// World x of interior vertical tile borders, left to right.
    pub fn vertical_borders(&self) -> Vec<f64> {
        (1..self.cols)
            .map(|c| self.transform.grid_to_world((c * self.tile_size) as f64, 0.0).0)
            .collect()
    }

    /// World y of interior horizontal tile borders, top to bottom.
    pub fn horizontal_borders(&self) -> Vec<f64> {
        (1..self.rows)
            .map(|r| self.transform.grid_to_world(0.0, (r * self.tile_size) as f64).1)
            .collect()
    }
}

/// Placement of one tile within its scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileWindow {
    pub index: usize,
    pub col: usize,
    pub row: usize,
    pub offset_x: usize,
    pub offset_y: usize,
    pub size: usize,
    /// Width of the in-scene part of the tile, starting at the tile's left edge.
    pub valid_width: usize,
    pub valid_height: usize,
}

impl TileWindow {
    pub fn id(&self) -> String {
        format!("r{:03}_c{:03}", self.row, self.col)
    }

    pub fn is_padded(&self) -> bool {
        self.valid_width < self.size || self.valid_height < self.size
    }

    pub fn contains_local(&self, x: usize, y: usize) -> bool {
        x < self.valid_width && y < self.valid_height
    }
}

/// Square tile of 3×8-bit pixel data cut from a [`ByteComposite`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub window: TileWindow,
    pub date_id: String,
    pub variant: Variant,
    pub transform: GeoTransform,
    pub channels: [Vec<u8>; 3],
}

impl Tile {
    pub fn id(&self) -> String {
        self.window.id()
    }

    pub fn size(&self) -> usize {
        self.window.size
    }

    pub fn interleaved(&self) -> Vec<u8> {
        let n = self.window.size * self.window.size;
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            for c in &self.channels {
                out.push(c[i]);
            }
        }
        out
    }
}

/// Cuts `image` into `size × size` tiles, reflect-padding the last row and
/// column when the extent is not a multiple of `size`.
pub fn make_tiles(image: &ByteComposite, size: usize) -> Result<(TileGrid, Vec<Tile>)> {
    if !TILE_SIZES.contains(&size) {
        return Err(Error::InvalidParameter(format!(
            "tile size {size} not in {TILE_SIZES:?}"
        )));
    }
    let grid = TileGrid::new(image.width(), image.height(), size, *image.transform())?;
    let tiles = (0..grid.len()).map(|i| cut_tile(image, &grid, i)).collect();
    Ok((grid, tiles))
}

pub(crate) fn cut_tile(image: &ByteComposite, grid: &TileGrid, index: usize) -> Tile {
    let window = grid.window(index);
    let (w, h) = (image.width(), image.height());
    let size = window.size;
    let mut channels = [vec![0u8; size * size], vec![0u8; size * size], vec![0u8; size * size]];
    for y in 0..size {
        let sy = reflect_index((window.offset_y + y) as isize, h);
        for x in 0..size {
            let sx = reflect_index((window.offset_x + x) as isize, w);
            for (dst, src) in channels.iter_mut().zip(image.channels()) {
                dst[y * size + x] = src[sy * w + sx];
            }
        }
    }
    Tile {
        window,
        date_id: image.date_id.clone(),
        variant: image.variant,
        transform: grid.tile_transform(index),
        channels,
    }
}

//! Binary PGM rasters with one pixel per grid cell.
//!
//! On the flat 2-torus pixel `(row, col)` is cell `(col, n - 1 - row)`, so the
//! second coordinate points up. Sphere grids put chart `z` on the left, chart
//! `w = 1/z` on the right, and the cell at infinity in the top pixel of a final
//! column.

use std::io;
use std::path::Path;

use endohyp::spectral::{BoxGrid, CellSet};
use endohyp::Manifold;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("cannot render a grid on {0:?}; only the 2-torus and the sphere are supported")]
    UnsupportedManifold(Manifold),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Gray level per cell, laid out as a raster.
pub fn raster(grid: &BoxGrid, level: impl Fn(usize) -> u8) -> Result<(usize, usize, Vec<u8>), RenderError> {
    let n = grid.subdivisions();
    match grid.manifold() {
        Manifold::Torus(2) => {
            let mut px = vec![0u8; n * n];
            for row in 0..n {
                for col in 0..n {
                    px[row * n + col] = level(grid.torus_cell(&[col, n - 1 - row]));
                }
            }
            Ok((n, n, px))
        }
        Manifold::Sphere => {
            let w = 2 * n + 1;
            let mut px = vec![0u8; w * n];
            for row in 0..n {
                let j = n - 1 - row;
                for i in 0..n {
                    px[row * w + i] = level(i + n * j);
                    px[row * w + n + i] = level(n * n + i + n * j);
                }
            }
            px[2 * n] = level(2 * n * n);
            Ok((w, n, px))
        }
        m => Err(RenderError::UnsupportedManifold(m)),
    }
}

pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Members white, everything else black.
pub fn cells_pgm(cells: &CellSet, grid: &BoxGrid) -> Result<Vec<u8>, RenderError> {
    let (w, h, px) = raster(grid, |c| if cells.contains(c) { 255 } else { 0 })?;
    Ok(encode_pgm(w, h, &px))
}

pub fn render_cells(cells: &CellSet, grid: &BoxGrid, path: &Path) -> Result<(), RenderError> {
    std::fs::write(path, cells_pgm(cells, grid)?)?;
    Ok(())
}

/// Basin index `i` of `sets` maps to gray `255 (i + 1) / sets`; cells with no
/// limit stay black.
pub fn basins_pgm(basin: &[Option<usize>], sets: usize, grid: &BoxGrid) -> Result<Vec<u8>, RenderError> {
    let levels = sets.max(1);
    let (w, h, px) = raster(grid, |c| match basin[c] {
        Some(i) => (255 * (i + 1) / levels) as u8,
        None => 0,
    })?;
    Ok(encode_pgm(w, h, &px))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_rows_point_up() {
        let grid = BoxGrid::new(Manifold::Torus(2), 4).unwrap();
        let bottom: Vec<usize> = (0..4).map(|i| grid.torus_cell(&[i, 0])).collect();
        let (w, h, px) = raster(&grid, |c| if bottom.contains(&c) { 255 } else { 0 }).unwrap();
        assert_eq!((w, h), (4, 4));
        assert_eq!(&px[12..], &[255; 4]);
        assert!(px[..12].iter().all(|&p| p == 0));
    }

    #[test]
    fn sphere_layout_has_a_pixel_per_cell() {
        let grid = BoxGrid::new(Manifold::Sphere, 3).unwrap();
        let (w, h, px) = raster(&grid, |_| 7).unwrap();
        assert_eq!((w, h), (7, 3));
        assert_eq!(px.iter().filter(|&&p| p == 7).count(), grid.cell_count());
    }

    #[test]
    fn circle_grids_are_rejected() {
        let grid = BoxGrid::new(Manifold::Torus(1), 8).unwrap();
        assert!(matches!(raster(&grid, |_| 0), Err(RenderError::UnsupportedManifold(_))));
    }

    #[test]
    fn header() {
        assert_eq!(encode_pgm(2, 1, &[0, 255]), b"P5\n2 1\n255\n\x00\xff");
    }
}

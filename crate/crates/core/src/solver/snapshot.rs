//! Flat binary snapshots of a state.
//!
//! Layout, all little-endian: `u64 dim`, `u64 points per axis`, `u64 components`,
//! `f64 L`, `f64 time`, then each component's physical samples in row-major order
//! as `f64`. Components are ordered `c⁺, u⁺₁…u⁺_N, c⁻, u⁻₁…u⁻_N`.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::FieldState;
use crate::error::{invalid, Result};
use crate::grid::{Grid, SpectralField};

pub fn write_snapshot(path: &Path, state: &FieldState) -> Result<()> {
    let grid = state.grid();
    let comps = state.physical_components();
    let mut buf = Vec::with_capacity(40 + 8 * comps.len() * grid.len());
    buf.extend_from_slice(&(grid.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_axis() as u64).to_le_bytes());
    buf.extend_from_slice(&(comps.len() as u64).to_le_bytes());
    buf.extend_from_slice(&grid.length().to_le_bytes());
    buf.extend_from_slice(&state.time.to_le_bytes());
    for c in comps {
        for v in c {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<FieldState> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 40 {
        return invalid("snapshot is shorter than its header");
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("eight bytes") };
    let dim = u64::from_le_bytes(word(0)) as usize;
    let points = u64::from_le_bytes(word(1)) as usize;
    let ncomp = u64::from_le_bytes(word(2)) as usize;
    let length = f64::from_le_bytes(word(3));
    let time = f64::from_le_bytes(word(4));
    let grid: Arc<Grid> = Grid::new(dim, points, length)?;
    if ncomp != 2 + 2 * dim {
        return invalid(format!("snapshot holds {ncomp} components, expected {}", 2 + 2 * dim));
    }
    if bytes.len() != 40 + 8 * ncomp * grid.len() {
        return invalid("snapshot payload length does not match its header");
    }
    let mut comps: Vec<Vec<f64>> = (0..ncomp)
        .map(|c| (0..grid.len()).map(|i| f64::from_le_bytes(word(5 + c * grid.len() + i))).collect())
        .collect();
    let um = comps.split_off(dim + 2);
    let cm = comps.pop().expect("component");
    let up = comps.split_off(1);
    let cp = comps.pop().expect("component");
    Ok(FieldState {
        c_plus: SpectralField::from_physical(&grid, vec![cp])?,
        u_plus: SpectralField::from_physical(&grid, up)?,
        c_minus: SpectralField::from_physical(&grid, vec![cm])?,
        u_minus: SpectralField::from_physical(&grid, um)?,
        time,
    })
}

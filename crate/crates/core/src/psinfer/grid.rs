use std::path::Path;

use crate::error::{Error, Result};

const GRID_MAGIC: &[u8; 4] = b"APG1";

/// H × W grid of reals, row-major: `values[y * w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub h: usize,
    pub w: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self { h, w, values: vec![0.0; h * w] }
    }

    pub fn from_values(h: usize, w: usize, values: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::Degenerate("grid dimensions must be positive".into()));
        }
        crate::error::ensure_dim(h * w, values.len())?;
        Ok(Self { h, w, values })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.w + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.w + x] = v;
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Position `(x, y)` of the largest value; ties go to the lowest `(y, x)`.
    pub fn argmax(&self) -> (usize, usize) {
        let k = crate::util::argmax(&self.values).expect("grid is non-empty");
        (k % self.w, k / self.w)
    }
}

/// Per-part likelihood grids sharing one shape.
pub type LikelihoodGrids = Vec<Grid>;

/// Binary layout: magic `APG1`, little-endian u32 part count, H, W, then f64 values part by part.
pub fn grids_to_binary(grids: &[Grid]) -> Result<Vec<u8>> {
    let (h, w) = grids.first().map_or((0, 0), |g| (g.h, g.w));
    let mut out = Vec::with_capacity(16 + 8 * grids.len() * h * w);
    out.extend_from_slice(GRID_MAGIC);
    for v in [grids.len(), h, w] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for g in grids {
        if (g.h, g.w) != (h, w) {
            return Err(Error::DimensionMismatch {
                expected: h * w,
                got: g.h * g.w,
            });
        }
        for v in &g.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn grids_from_binary(bytes: &[u8]) -> Result<Vec<Grid>> {
    let bad = |m: &str| Error::Format(format!("grid file: {m}"));
    if bytes.len() < 16 || &bytes[..4] != GRID_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().expect("4 bytes")) as usize;
    let (parts, h, w) = (word(0), word(1), word(2));
    if bytes.len() != 16 + 8 * parts * h * w {
        return Err(bad("payload size does not match header"));
    }
    let vals: Vec<f64> = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    vals.chunks(h * w).take(parts).map(|c| Grid::from_values(h, w, c.to_vec())).collect()
}

pub fn save_grids(path: &Path, grids: &[Grid]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, grids_to_binary(grids)?).map_err(|e| Error::io(path, e))
}

pub fn load_grids(path: &Path) -> Result<Vec<Grid>> {
    grids_from_binary(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_row_then_column() {
        let g = Grid::from_values(2, 3, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.argmax(), (1, 0));
    }

    #[test]
    fn binary_round_trip() {
        let grids = vec![Grid::from_values(2, 2, vec![0.5, 1.0, 0.0, 2.0]).unwrap(), Grid::zeros(2, 2)];
        let bytes = grids_to_binary(&grids).unwrap();
        assert_eq!(grids_from_binary(&bytes).unwrap(), grids);
        assert!(grids_from_binary(&bytes[..20]).is_err());
        assert!(grids_to_binary(&[Grid::zeros(1, 2), Grid::zeros(2, 1)]).is_err());
    }
}

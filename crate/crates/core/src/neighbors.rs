//! Periodic cell list for the pair search.

use crate::geometry::Vec2;

/// Bins particle indices into square cells no smaller than the cutoff, so
/// every partner within the cutoff sits in the 3x3 block around a particle.
#[derive(Debug, Clone)]
pub struct CellList {
    cells_per_axis: usize,
    cell_width: f64,
    half_width: f64,
    buckets: Vec<Vec<usize>>,
}

impl CellList {
    /// Builds a list over `(index, position)` pairs.
    pub fn build<I>(positions: I, half_width: f64, cutoff: f64) -> Self
    where
        I: IntoIterator<Item = (usize, Vec2)>,
    {
        let width = 2.0 * half_width;
        let cells_per_axis = ((width / cutoff).floor() as usize).max(1);
        let cell_width = width / cells_per_axis as f64;
        let mut list = Self {
            cells_per_axis,
            cell_width,
            half_width,
            buckets: vec![Vec::new(); cells_per_axis * cells_per_axis],
        };
        for (i, p) in positions {
            let c = list.cell_index(p);
            list.buckets[c].push(i);
        }
        list
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    fn axis_cell(&self, coord: f64) -> usize {
        let b = ((coord + self.half_width) / self.cell_width).floor();
        if b <= 0.0 {
            0
        } else {
            (b as usize).min(self.cells_per_axis - 1)
        }
    }

    fn cell_index(&self, p: Vec2) -> usize {
        self.axis_cell(p.x) * self.cells_per_axis + self.axis_cell(p.y)
    }

    /// Candidate partners of a point, ascending and without duplicates.
    /// May include the particle itself.
    pub fn candidates(&self, p: Vec2, out: &mut Vec<usize>) {
        out.clear();
        let n = self.cells_per_axis as isize;
        let cx = self.axis_cell(p.x) as isize;
        let cy = self.axis_cell(p.y) as isize;
        let mut cells: Vec<usize> = Vec::with_capacity(9);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let ix = (cx + dx).rem_euclid(n) as usize;
                let iy = (cy + dy).rem_euclid(n) as usize;
                cells.push(ix * self.cells_per_axis + iy);
            }
        }
        cells.sort_unstable();
        cells.dedup();
        for c in cells {
            out.extend_from_slice(&self.buckets[c]);
        }
        out.sort_unstable();
    }
}

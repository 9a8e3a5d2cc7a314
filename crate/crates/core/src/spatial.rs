//! Uniform bucket grid over the arena for neighbor candidate lookups.
//!
//! Cell size equals the largest query radius (the communication range), so
//! any query with radius up to that only needs the 3x3 cell neighborhood of
//! the query point. Queries yield candidate indices; callers apply the exact
//! distance predicate.

use crate::geometry::Vec2;

pub struct SpatialGrid {
    cell_size: f64,
    /// World coordinate of the grid's lower-left corner.
    origin: f64,
    cells_per_axis: usize,
    cells: Vec<Vec<u32>>,
    occupied: Vec<u32>,
}

impl SpatialGrid {
    /// Grid covering a square of half-extent `half_extent` around the
    /// origin, with cells of at least `max_query_radius`.
    pub fn new(half_extent: f64, max_query_radius: f64) -> Self {
        assert!(half_extent > 0.0 && max_query_radius > 0.0);
        // A margin of one cell absorbs probe points slightly outside the
        // wall; indices are clamped anyway.
        let cells_per_axis = (2.0 * half_extent / max_query_radius).ceil() as usize + 2;
        SpatialGrid {
            cell_size: max_query_radius,
            origin: -half_extent - max_query_radius,
            cells_per_axis,
            cells: vec![Vec::new(); cells_per_axis * cells_per_axis],
            occupied: Vec::new(),
        }
    }

    fn cell_coord(&self, v: f64) -> usize {
        let c = ((v - self.origin) / self.cell_size).floor();
        (c.max(0.0) as usize).min(self.cells_per_axis - 1)
    }

    fn cell_index(&self, p: Vec2) -> usize {
        self.cell_coord(p.y) * self.cells_per_axis + self.cell_coord(p.x)
    }

    /// Clears the previous tick's contents and inserts `positions`.
    pub fn rebuild<I: IntoIterator<Item = Vec2>>(&mut self, positions: I) {
        for &cell in &self.occupied {
            self.cells[cell as usize].clear();
        }
        self.occupied.clear();
        for (i, p) in positions.into_iter().enumerate() {
            let cell = self.cell_index(p);
            if self.cells[cell].is_empty() {
                self.occupied.push(cell as u32);
            }
            self.cells[cell].push(i as u32);
        }
    }

    /// Calls `visit` with every index whose position may lie within
    /// `max_query_radius` of `point` (plus false positives from the cell
    /// neighborhood).
    #[inline]
    pub fn candidates<F: FnMut(usize)>(&self, point: Vec2, mut visit: F) {
        let cx = self.cell_coord(point.x);
        let cy = self.cell_coord(point.y);
        let x0 = cx.saturating_sub(1);
        let y0 = cy.saturating_sub(1);
        let x1 = (cx + 1).min(self.cells_per_axis - 1);
        let y1 = (cy + 1).min(self.cells_per_axis - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &i in &self.cells[y * self.cells_per_axis + x] {
                    visit(i as usize);
                }
            }
        }
    }
}

//! Rectangular grids, the fields that live on them, and discrete balls.
//!
//! Cells are addressed as `(x, y)` with `0 <= x < width`, `0 <= y < height`
//! and stored row-major (`index = y * width + x`). Lengths (radii, distances)
//! are in world units; `spacing` converts cells to world units.

use crate::error::{Error, Result};

pub type Cell = (usize, usize);

/// How windows that stick out of the grid are treated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    /// Windows are intersected with the grid rectangle.
    Clip,
    /// Out-of-grid cells take a fixed value.
    PadConstant(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    width: usize,
    height: usize,
    spacing: f64,
    boundary: Boundary,
}

impl Grid2D {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!("{width}x{height} has no cells")));
        }
        Ok(Grid2D {
            width,
            height,
            spacing: 1.0,
            boundary: Boundary::Clip,
        })
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing {spacing} must be positive"
            )));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Result<Self> {
        if let Boundary::PadConstant(v) = boundary {
            if !v.is_finite() {
                return Err(Error::InvalidGrid("pad value must be finite".into()));
            }
        }
        self.boundary = boundary;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Largest distance between two cell centres; used as the distance cap.
    pub fn diameter(&self) -> f64 {
        self.spacing * ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, index: usize) -> Cell {
        (index % self.width, index / self.width)
    }

    /// Cell at `(x + dx, y + dy)` if it lies inside the grid.
    #[inline]
    pub fn offset(&self, (x, y): Cell, dx: isize, dy: isize) -> Option<Cell> {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
            Some((nx as usize, ny as usize))
        } else {
            None
        }
    }

    /// World coordinates of a cell centre.
    pub fn position(&self, (x, y): Cell) -> [f64; 2] {
        [x as f64 * self.spacing, y as f64 * self.spacing]
    }

    /// 4-neighbours of a cell that lie inside the grid.
    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .filter_map(move |(dx, dy)| self.offset(cell, dx, dy))
    }

    fn same_shape(&self, other: &Grid2D) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Real-valued function sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for y in 0..grid.height {
            for x in 0..grid.width {
                values.push(f(x, y));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, (x, y): Cell) -> f64 {
        self.values[self.grid.index(x, y)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        self.map(|v| lambda * v)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                got: other.grid.len(),
            });
        }
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Largest pointwise difference.
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Cells with `u <= level`.
    pub fn sublevel(&self, level: f64) -> BinarySet {
        BinarySet {
            grid: self.grid,
            mask: self.values.iter().map(|&v| v <= level).collect(),
        }
    }

    /// Cells with `u > level`.
    pub fn strict_superlevel(&self, level: f64) -> BinarySet {
        BinarySet {
            grid: self.grid,
            mask: self.values.iter().map(|&v| v > level).collect(),
        }
    }

    pub fn with_grid(&self, grid: Grid2D) -> Result<Self> {
        if !self.grid.same_shape(&grid) {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: self.values.len(),
            });
        }
        Ok(ScalarField {
            grid,
            values: self.values.clone(),
        })
    }
}

/// A set of cells, stored as a mask.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySet {
    grid: Grid2D,
    mask: Vec<bool>,
}

impl BinarySet {
    pub fn new(grid: Grid2D, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: mask.len(),
            });
        }
        Ok(BinarySet { grid, mask })
    }

    pub fn empty(grid: Grid2D) -> Self {
        BinarySet {
            grid,
            mask: vec![false; grid.len()],
        }
    }

    pub fn full(grid: Grid2D) -> Self {
        BinarySet {
            grid,
            mask: vec![true; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(grid.len());
        for y in 0..grid.height {
            for x in 0..grid.width {
                mask.push(f(x, y));
            }
        }
        BinarySet { grid, mask }
    }

    /// Cells whose centre lies in the closed disk of radius `r` (world units)
    /// around `center` (world coordinates).
    pub fn disk(grid: Grid2D, center: [f64; 2], r: f64) -> Self {
        Self::from_fn(grid, |x, y| {
            let [px, py] = grid.position((x, y));
            let (dx, dy) = (px - center[0], py - center[1]);
            dx * dx + dy * dy <= r * r
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn contains(&self, (x, y): Cell) -> bool {
        self.mask[self.grid.index(x, y)]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }

    pub fn complement(&self) -> Self {
        BinarySet {
            grid: self.grid,
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn union(&self, other: &BinarySet) -> Self {
        BinarySet {
            grid: self.grid,
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &BinarySet) -> Self {
        BinarySet {
            grid: self.grid,
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &BinarySet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    /// Translates the set by an integer offset; cells shifted in from outside are empty.
    pub fn shifted(&self, dx: isize, dy: isize) -> Self {
        Self::from_fn(self.grid, |x, y| match self.grid.offset((x, y), -dx, -dy) {
            Some(c) => self.contains(c),
            None => false,
        })
    }

    /// 0/1 indicator field.
    pub fn to_field(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self
                .mask
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Cells of the set that have a 4-neighbour outside it.
    pub fn boundary_count(&self) -> usize {
        (0..self.grid.len())
            .filter(|&i| {
                self.mask[i] && {
                    let c = self.grid.coords(i);
                    self.grid.neighbors4(c).any(|n| !self.contains(n))
                }
            })
            .count()
    }

    pub fn with_grid(&self, grid: Grid2D) -> Result<Self> {
        if !self.grid.same_shape(&grid) {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: self.mask.len(),
            });
        }
        Ok(BinarySet {
            grid,
            mask: self.mask.clone(),
        })
    }
}

/// Lattice points of the closed disk `i^2 + j^2 <= r^2` (radius in cells).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBall {
    radius: f64,
    offsets: Vec<(isize, isize)>,
}

impl DiscreteBall {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest |i| among the offsets.
    pub fn reach(&self) -> isize {
        self.radius.floor() as isize
    }
}

pub fn make_discrete_ball(rho: f64) -> Result<DiscreteBall> {
    if !(rho.is_finite() && rho >= 1.0) {
        return Err(Error::InvalidRadius(rho));
    }
    let r = rho.floor() as isize;
    let r2 = rho * rho;
    let mut offsets = Vec::new();
    for j in -r..=r {
        for i in -r..=r {
            if ((i * i + j * j) as f64) <= r2 {
                offsets.push((i, j));
            }
        }
    }
    Ok(DiscreteBall {
        radius: rho,
        offsets,
    })
}

/// Cells of `center + ball` that lie inside the grid.
pub fn window_at(grid: &Grid2D, center: Cell, ball: &DiscreteBall) -> Vec<Cell> {
    ball.offsets
        .iter()
        .filter_map(|&(i, j)| grid.offset(center, i, j))
        .collect()
}

/// True when `center + ball` sticks out of the grid.
pub fn window_is_clipped(grid: &Grid2D, (x, y): Cell, ball: &DiscreteBall) -> bool {
    let r = ball.reach() as usize;
    x < r || y < r || x + r >= grid.width() || y + r >= grid.height()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sizes_match_lattice_enumeration() {
        let b1 = make_discrete_ball(1.0).unwrap();
        assert_eq!(b1.len(), 5);
        let mut o = b1.offsets().to_vec();
        o.sort();
        assert_eq!(o, vec![(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]);
        assert_eq!(make_discrete_ball(2.0).unwrap().len(), 13);
        assert_eq!(make_discrete_ball(1.5).unwrap().len(), 9);
    }

    #[test]
    fn ball_below_one_cell_is_rejected() {
        assert!(matches!(
            make_discrete_ball(0.9),
            Err(Error::InvalidRadius(_))
        ));
        assert!(make_discrete_ball(f64::NAN).is_err());
    }

    #[test]
    fn ball_is_symmetric() {
        for &r in &[1.0, 1.5, 2.3, 4.0, 6.0, 8.0] {
            let b = make_discrete_ball(r).unwrap();
            assert_eq!(b.len() % 2, 1);
            assert!(b.offsets().contains(&(0, 0)));
            for &(i, j) in b.offsets() {
                assert!(b.offsets().contains(&(-i, -j)));
                assert!(b.offsets().contains(&(j, i)));
            }
        }
    }

    #[test]
    fn windows_are_clipped_to_the_grid() {
        let g = Grid2D::new(3, 3).unwrap();
        let b = make_discrete_ball(1.0).unwrap();
        let mut w = window_at(&g, (0, 0), &b);
        w.sort();
        assert_eq!(w, vec![(0, 0), (0, 1), (1, 0)]);
        assert_eq!(window_at(&g, (1, 1), &b).len(), 5);
        let g1 = Grid2D::new(1, 1).unwrap();
        assert_eq!(
            window_at(&g1, (0, 0), &make_discrete_ball(3.0).unwrap()),
            vec![(0, 0)]
        );
    }

    #[test]
    fn interior_windows_translate() {
        let g = Grid2D::new(20, 20).unwrap();
        let b = make_discrete_ball(2.5).unwrap();
        let w = window_at(&g, (8, 9), &b);
        let shifted: Vec<Cell> = window_at(&g, (11, 7), &b);
        let moved: Vec<Cell> = w.iter().map(|&(x, y)| (x + 3, y - 2)).collect();
        assert_eq!(moved, shifted);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid2D::new(0, 3).is_err());
        assert!(Grid2D::new(2, 2).unwrap().with_spacing(0.0).is_err());
        assert!(ScalarField::new(Grid2D::new(2, 2).unwrap(), vec![0.0; 3]).is_err());
        assert!(matches!(
            ScalarField::new(Grid2D::new(2, 1).unwrap(), vec![0.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn set_algebra() {
        let g = Grid2D::new(4, 4).unwrap();
        let a = BinarySet::from_fn(g, |x, _| x < 2);
        let b = BinarySet::from_fn(g, |_, y| y < 2);
        assert_eq!(a.union(&b).count(), 12);
        assert_eq!(a.intersection(&b).count(), 4);
        assert!(a.intersection(&b).is_subset(&a));
        assert_eq!(a.complement().count(), 8);
        assert_eq!(a.shifted(1, 0).count(), 8);
        assert!(a.shifted(1, 0).contains((2, 0)));
        assert!(!a.shifted(1, 0).contains((0, 0)));
    }
}

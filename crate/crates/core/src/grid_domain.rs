//! Uniform cell-centered discretization of the rectangle Ω = [0,Lx]×[0,Ly]
//! and the integral/norm primitives used by every diagnostic.
//!
//! A `Field` stores one cell-average value per cell in row-major order
//! (`values[j*nx + i]` is the cell with center `((i+½)hx, (j+½)hy)`).
//! Integrals use the midpoint rule, which is the natural exact pairing for
//! cell averages, accumulated with Neumaier compensated summation so that
//! telescoping identities (conservativity of flux forms) survive in floating
//! point.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::functionals::TestFunction;
use crate::Result;

/// Extents and resolution of the uniform cell-centered grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Domain extent in x.
    pub lx: f64,
    /// Domain extent in y.
    pub ly: f64,
    /// Number of cells in x.
    pub nx: usize,
    /// Number of cells in y.
    pub ny: usize,
}

impl GridSpec {
    /// Creates a grid, requiring at least 4 cells per direction and positive
    /// extents.
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "domain extents must be positive and finite, got Lx = {lx}, Ly = {ly}"
            )));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidInput(alloc::format!(
                "grid needs at least 4 cells per direction, got {nx}×{ny}"
            )));
        }
        Ok(GridSpec { lx, ly, nx, ny })
    }

    /// Cell width in x.
    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    /// Cell width in y.
    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Area of one cell.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Total number of cells.
    #[inline]
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// x-coordinate of the center of cell column `i`.
    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx()
    }

    /// y-coordinate of the center of cell row `j`.
    #[inline]
    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy()
    }
}

/// A grid function: one value per cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Field {
    /// The zero field.
    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: alloc::vec![0.0; grid.num_cells()],
        }
    }

    /// The constant field `c`.
    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Field {
            grid,
            values: alloc::vec![c; grid.num_cells()],
        }
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.num_cells());
        for j in 0..grid.ny {
            let y = grid.y_center(j);
            for i in 0..grid.nx {
                values.push(f(grid.x_center(i), y));
            }
        }
        Field { grid, values }
    }

    /// Flat index of cell `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    /// Value at cell `(i, j)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    /// Maximum value (−∞ for an empty field, which cannot occur).
    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Minimum value.
    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Maximum absolute value, i.e. `‖f‖_∞`.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0_f64, |a, &b| a.max(libm::fabs(b)))
    }

    /// True if every value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Initial datum for `u`: a positive measure given as Dirac atoms plus an
/// optional nonnegative density.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    /// Point masses `(x, y, weight)` with `weight > 0`.
    pub atoms: Vec<(f64, f64, f64)>,
    /// Optional absolutely continuous part (cell averages, ≥ 0).
    pub density: Option<Field>,
}

impl MeasureSpec {
    /// Builds a measure, validating positivity of the weights, nonnegativity
    /// of the density, and positivity of the total mass. Atom positions are
    /// validated against the grid when the measure is mollified, since the
    /// measure itself does not carry domain extents.
    pub fn new(atoms: Vec<(f64, f64, f64)>, density: Option<Field>) -> Result<Self> {
        for &(x, y, w) in &atoms {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(alloc::format!(
                    "atom weights must be positive and finite, got {w} at ({x}, {y})"
                )));
            }
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::InvalidInput(String::from(
                    "atom positions must be finite",
                )));
            }
        }
        if let Some(d) = &density {
            if d.values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(String::from(
                    "measure density must be nonnegative and finite",
                )));
            }
        }
        let m = atoms.iter().map(|a| a.2).sum::<f64>() + density.as_ref().map_or(0.0, integrate);
        if !(m > 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "total mass must be positive, got {m}"
            )));
        }
        Ok(MeasureSpec { atoms, density })
    }

    /// A single Dirac atom of the given weight.
    pub fn dirac(x: f64, y: f64, weight: f64) -> Result<Self> {
        MeasureSpec::new(alloc::vec![(x, y, weight)], None)
    }

    /// Total mass `m = Σ weights + ∫ density`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.2).sum::<f64>() + self.density.as_ref().map_or(0.0, integrate)
    }

    /// Pairing `⟨u₀, φ⟩ = Σ w·φ(x,y) + ∫ density·φ` evaluated exactly on the
    /// atoms and by the midpoint rule on the density.
    pub fn pair(&self, tf: &TestFunction) -> f64 {
        let mut s = CompensatedSum::new();
        for &(x, y, w) in &self.atoms {
            s.add(w * tf.eval(x, y));
        }
        let atoms_part = s.value();
        let density_part = self
            .density
            .as_ref()
            .map_or(0.0, |d| pair_with_test_function(d, tf));
        atoms_part + density_part
    }
}

/// Neumaier's variant of compensated summation: the running error of every
/// addition is kept in a second accumulator, so sums of N terms carry an
/// O(ε)-size error rather than O(N·ε).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn new() -> Self {
        CompensatedSum::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Midpoint-rule integral `∫_Ω f = Σ values · hx·hy`.
pub fn integrate(f: &Field) -> f64 {
    let mut s = CompensatedSum::new();
    for &v in &f.values {
        s.add(v);
    }
    s.value() * f.grid.cell_area()
}

/// `L^p` norm `(∫|f|^p)^{1/p}` for `p ≥ 1`; pass `f64::INFINITY` for the sup
/// norm `max|values|`.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    if p == f64::INFINITY {
        return f.max_abs();
    }
    debug_assert!(p >= 1.0, "lp_norm requires p ≥ 1");
    let mut s = CompensatedSum::new();
    if p == 1.0 {
        for &v in &f.values {
            s.add(libm::fabs(v));
        }
    } else if p == 2.0 {
        for &v in &f.values {
            s.add(v * v);
        }
    } else {
        for &v in &f.values {
            s.add(libm::pow(libm::fabs(v), p));
        }
    }
    let integral = s.value() * f.grid.cell_area();
    if p == 1.0 {
        integral
    } else if p == 2.0 {
        libm::sqrt(integral)
    } else {
        libm::pow(integral, 1.0 / p)
    }
}

/// Midpoint-rule pairing `∫_Ω f·φ` of a field with a test function.
///
/// For the constant test function (indices `(0,0)`, i.e. `φ ≡ 1`) every
/// product `f·φ(x,y)` is exactly `f`, so the pairing agrees bit-for-bit with
/// `integrate`.
pub fn pair_with_test_function(f: &Field, tf: &TestFunction) -> f64 {
    let g = &f.grid;
    let mut s = CompensatedSum::new();
    for j in 0..g.ny {
        let y = g.y_center(j);
        for i in 0..g.nx {
            s.add(f.at(i, j) * tf.eval(g.x_center(i), y));
        }
    }
    s.value() * g.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_tiny_or_degenerate() {
        assert!(GridSpec::new(1.0, 1.0, 3, 8).is_err());
        assert!(GridSpec::new(0.0, 1.0, 8, 8).is_err());
        assert!(GridSpec::new(1.0, -2.0, 8, 8).is_err());
        assert!(GridSpec::new(2.0, 1.0, 8, 4).is_ok());
    }

    #[test]
    fn cell_centers_are_offset_by_half() {
        let g = GridSpec::new(1.0, 2.0, 10, 10).unwrap();
        // 0.5·0.1 and 9.5·0.2 round within one ulp of the decimal values.
        assert!((g.x_center(0) - 0.05).abs() < 1e-16);
        assert!((g.y_center(9) - 1.9).abs() < 1e-15);
    }

    #[test]
    fn integrate_constant_is_exact() {
        let g = GridSpec::new(1.0, 1.0, 64, 64).unwrap();
        let f = Field::constant(g, 3.25);
        assert!((integrate(&f) - 3.25).abs() < 1e-13);
    }

    #[test]
    fn integrate_unit_mass_cell() {
        let g = GridSpec::new(1.0, 1.0, 16, 16).unwrap();
        let mut f = Field::zeros(g);
        let inv_area = 1.0 / g.cell_area();
        let at = f.idx(5, 7);
        f.values[at] = inv_area;
        assert!((integrate(&f) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn measure_rejects_nonpositive_mass() {
        assert!(MeasureSpec::new(vec![(0.5, 0.5, 0.0)], None).is_err());
        assert!(MeasureSpec::new(vec![], None).is_err());
        assert!(MeasureSpec::dirac(0.5, 0.5, 2.0).is_ok());
    }

    #[test]
    fn total_mass_adds_atoms_and_density() {
        let g = GridSpec::new(1.0, 1.0, 8, 8).unwrap();
        let m = MeasureSpec::new(vec![(0.25, 0.5, 1.5)], Some(Field::constant(g, 2.0))).unwrap();
        assert!((m.total_mass() - 3.5).abs() < 1e-13);
    }

    #[test]
    fn lp_norm_sup_of_mixed_signs() {
        let g = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let mut f = Field::zeros(g);
        f.values[0] = -3.0;
        f.values[1] = 2.0;
        assert_eq!(lp_norm(&f, f64::INFINITY), 3.0);
    }
}

//! Rectangular grids and sampled fields shared by the Dirac and
//! immersion modules.

use num_complex::Complex64;

use crate::{Error, Result};

/// Uniform rectangular grid in z = x + iy, spacing `h` in both directions.
/// Samples are stored row-major with x fastest: index = j * nx + i.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(x0: f64, y0: f64, nx: usize, ny: usize, h: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && h.is_finite()) {
            return Err(Error::NonFinite("grid origin or spacing"));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::DegenerateGrid(format!(
                "need at least 3x3 nodes, got {nx}x{ny}"
            )));
        }
        if h <= 0.0 {
            return Err(Error::DegenerateGrid(format!("spacing h = {h} must be > 0")));
        }
        Ok(Grid { x0, y0, nx, ny, h })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }
}

/// Complex-valued samples on a [`Grid`].
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub grid: Grid,
    pub samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        ComplexField {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        let n = grid.len();
        ComplexField {
            grid,
            samples: vec![value; n],
        }
    }

    /// Sample `f(z)` at every grid node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(Complex64) -> Complex64) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = f(grid.z(i, j));
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite("field sample"));
                }
                samples.push(v);
            }
        }
        Ok(ComplexField { grid, samples })
    }

    pub fn from_samples(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("field sample"));
        }
        Ok(ComplexField { grid, samples })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.samples[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.grid.idx(i, j);
        self.samples[k] = v;
    }

    /// Largest |Im| over the field, used for reality checks.
    pub fn max_imag_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Real part, dropping the imaginary component.
    pub fn real_part(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v.re).collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Real-valued samples on a [`Grid`].
#[derive(Debug, Clone)]
pub struct RealField {
    pub grid: Grid,
    pub samples: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        RealField {
            grid,
            samples: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut samples = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                samples.push(f(grid.x(i), grid.y(j)));
            }
        }
        RealField { grid, samples }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.samples[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.samples[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.samples
            .iter()
            .filter(|v| v.is_finite())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// A (psi, phi) spinor pair on a shared grid.
#[derive(Debug, Clone)]
pub struct SpinorPair {
    pub psi: ComplexField,
    pub phi: ComplexField,
}

impl SpinorPair {
    pub fn new(psi: ComplexField, phi: ComplexField) -> Result<Self> {
        if psi.grid != phi.grid {
            return Err(Error::GridMismatch(
                "psi and phi must share a grid".to_string(),
            ));
        }
        Ok(SpinorPair { psi, phi })
    }

    pub fn grid(&self) -> &Grid {
        &self.psi.grid
    }

    pub fn scaled(&self, factor: Complex64) -> SpinorPair {
        SpinorPair {
            psi: self.psi.scaled(factor),
            phi: self.phi.scaled(factor),
        }
    }
}

//! Diagonal permeability (mobility) fields.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Rect;

/// Diagonal 2×2 permeability tensor K(x, y) = diag(kx, ky).
#[derive(Clone)]
pub enum PermeabilityField {
    Identity,
    /// Closed-form diagonal entries.
    Diagonal(Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>),
    /// Piecewise-constant per raster cell over `rect`.
    Raster {
        rect: Rect,
        nx: usize,
        ny: usize,
        kx: Vec<f64>,
        ky: Vec<f64>,
    },
}

impl fmt::Debug for PermeabilityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PermeabilityField::Identity => write!(f, "PermeabilityField::Identity"),
            PermeabilityField::Diagonal(_) => write!(f, "PermeabilityField::Diagonal(..)"),
            PermeabilityField::Raster { nx, ny, .. } => {
                write!(f, "PermeabilityField::Raster({nx}x{ny})")
            }
        }
    }
}

impl PermeabilityField {
    pub fn diagonal(f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        PermeabilityField::Diagonal(Arc::new(f))
    }

    /// Constant isotropic field k·I.
    pub fn scalar(k: f64) -> Self {
        PermeabilityField::diagonal(move |_, _| (k, k))
    }

    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            PermeabilityField::Identity => (1.0, 1.0),
            PermeabilityField::Diagonal(f) => f(x, y),
            PermeabilityField::Raster { rect, nx, ny, kx, ky } => {
                let ix = (((x - rect.x0) / rect.width() * *nx as f64).floor() as isize)
                    .clamp(0, *nx as isize - 1) as usize;
                let iy = (((y - rect.y0) / rect.height() * *ny as f64).floor() as isize)
                    .clamp(0, *ny as isize - 1) as usize;
                let i = ix + nx * iy;
                (kx[i], ky[i])
            }
        }
    }

    /// Entries of K⁻¹ at a point; non-positive K is a data error.
    pub fn inverse(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (kx, ky) = self.eval(x, y);
        if !(kx > 0.0 && ky > 0.0) || !kx.is_finite() || !ky.is_finite() {
            return Err(Error::data(format!(
                "permeability not uniformly positive definite at ({x}, {y}): ({kx}, {ky})"
            )));
        }
        Ok((1.0 / kx, 1.0 / ky))
    }
}

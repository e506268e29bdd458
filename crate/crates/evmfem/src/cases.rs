//! Manufactured solutions driving the numerical studies.
//!
//! Each case fixes an exact pressure p and permeability K; the velocity is
//! u = −K∇p, the source f = ∇·u and the boundary data g = p, all in closed form.
//! `validate_derivatives` cross-checks the hand-derived gradient and source
//! against central finite differences.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::Rect;
use crate::permeability::PermeabilityField;

/// One monomial `coeff · x^px · y^py` of a custom polynomial pressure.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub px: u32,
    pub py: u32,
}

#[derive(Clone, Debug)]
pub enum ManufacturedCase {
    /// p = 1000 x y e^{−10(x²+y²)}, K = I.
    Example1,
    /// p = sin(πx) sin(πy) with the strongly varying isotropic
    /// K = e^{cos(4πx)cos(2πy) + 3 sin(5πx)cos(3πy)} · I.
    Example2,
    /// p = x(x−1) y(y−1), K = I.
    Example3,
    /// p = 1 − x, K = I: representable exactly by the discrete spaces.
    Patch,
    /// Polynomial pressure with constant diagonal permeability.
    CustomPoly {
        terms: Vec<PolyTerm>,
        kx: f64,
        ky: f64,
    },
}

fn example2_exponent(x: f64, y: f64) -> f64 {
    (4.0 * PI * x).cos() * (2.0 * PI * y).cos() + 3.0 * (5.0 * PI * x).sin() * (3.0 * PI * y).cos()
}

fn example2_exponent_grad(x: f64, y: f64) -> (f64, f64) {
    (
        -4.0 * PI * (4.0 * PI * x).sin() * (2.0 * PI * y).cos()
            + 15.0 * PI * (5.0 * PI * x).cos() * (3.0 * PI * y).cos(),
        -2.0 * PI * (4.0 * PI * x).cos() * (2.0 * PI * y).sin()
            - 9.0 * PI * (5.0 * PI * x).sin() * (3.0 * PI * y).sin(),
    )
}

impl ManufacturedCase {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(ManufacturedCase::Example1),
            "example2" => Ok(ManufacturedCase::Example2),
            "example3" => Ok(ManufacturedCase::Example3),
            "patch" => Ok(ManufacturedCase::Patch),
            other => Err(Error::config(format!(
                "unknown case '{other}'; known cases: example1, example2, example3, patch, custom"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManufacturedCase::Example1 => "example1",
            ManufacturedCase::Example2 => "example2",
            ManufacturedCase::Example3 => "example3",
            ManufacturedCase::Patch => "patch",
            ManufacturedCase::CustomPoly { .. } => "custom",
        }
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        match self {
            ManufacturedCase::Example1 => 1000.0 * x * y * (-10.0 * (x * x + y * y)).exp(),
            ManufacturedCase::Example2 => (PI * x).sin() * (PI * y).sin(),
            ManufacturedCase::Example3 => x * (x - 1.0) * y * (y - 1.0),
            ManufacturedCase::Patch => 1.0 - x,
            ManufacturedCase::CustomPoly { terms, .. } => terms
                .iter()
                .map(|t| t.coeff * x.powi(t.px as i32) * y.powi(t.py as i32))
                .sum(),
        }
    }

    pub fn grad_pressure(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            ManufacturedCase::Example1 => {
                let e = (-10.0 * (x * x + y * y)).exp();
                (
                    1000.0 * y * e * (1.0 - 20.0 * x * x),
                    1000.0 * x * e * (1.0 - 20.0 * y * y),
                )
            }
            ManufacturedCase::Example2 => (
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ),
            ManufacturedCase::Example3 => (
                (2.0 * x - 1.0) * y * (y - 1.0),
                x * (x - 1.0) * (2.0 * y - 1.0),
            ),
            ManufacturedCase::Patch => (-1.0, 0.0),
            ManufacturedCase::CustomPoly { terms, .. } => {
                let mut gx = 0.0;
                let mut gy = 0.0;
                for t in terms {
                    if t.px > 0 {
                        gx += t.coeff * t.px as f64 * x.powi(t.px as i32 - 1) * y.powi(t.py as i32);
                    }
                    if t.py > 0 {
                        gy += t.coeff * t.py as f64 * x.powi(t.px as i32) * y.powi(t.py as i32 - 1);
                    }
                }
                (gx, gy)
            }
        }
    }

    pub fn permeability(&self) -> PermeabilityField {
        match self {
            ManufacturedCase::Example2 => PermeabilityField::diagonal(|x, y| {
                let k = example2_exponent(x, y).exp();
                (k, k)
            }),
            ManufacturedCase::CustomPoly { kx, ky, .. } => {
                let (kx, ky) = (*kx, *ky);
                PermeabilityField::diagonal(move |_, _| (kx, ky))
            }
            _ => PermeabilityField::Identity,
        }
    }

    /// Exact Darcy velocity u = −K ∇p.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let (gx, gy) = self.grad_pressure(x, y);
        match self {
            ManufacturedCase::Example2 => {
                let k = example2_exponent(x, y).exp();
                (-k * gx, -k * gy)
            }
            ManufacturedCase::CustomPoly { kx, ky, .. } => (-kx * gx, -ky * gy),
            _ => (-gx, -gy),
        }
    }

    /// Source term f = ∇·u in closed form.
    pub fn source(&self, x: f64, y: f64) -> f64 {
        match self {
            ManufacturedCase::Example1 => {
                // f = −Δp = −20000 x y e^{−10(x²+y²)} (20x² + 20y² − 6)
                let e = (-10.0 * (x * x + y * y)).exp();
                -20000.0 * x * y * e * (20.0 * x * x + 20.0 * y * y - 6.0)
            }
            ManufacturedCase::Example2 => {
                // u = −k∇p with k = e^w: f = −k (∇w·∇p + Δp), Δp = −2π² p
                let k = example2_exponent(x, y).exp();
                let (wx, wy) = example2_exponent_grad(x, y);
                let (px, py) = self.grad_pressure(x, y);
                let p = self.pressure(x, y);
                -k * (wx * px + wy * py) + 2.0 * PI * PI * k * p
            }
            ManufacturedCase::Example3 => {
                -(2.0 * y * (y - 1.0) + 2.0 * x * (x - 1.0))
            }
            ManufacturedCase::Patch => 0.0,
            ManufacturedCase::CustomPoly { terms, kx, ky } => {
                let mut pxx = 0.0;
                let mut pyy = 0.0;
                for t in terms {
                    if t.px > 1 {
                        pxx += t.coeff
                            * (t.px * (t.px - 1)) as f64
                            * x.powi(t.px as i32 - 2)
                            * y.powi(t.py as i32);
                    }
                    if t.py > 1 {
                        pyy += t.coeff
                            * (t.py * (t.py - 1)) as f64
                            * x.powi(t.px as i32)
                            * y.powi(t.py as i32 - 2);
                    }
                }
                -(kx * pxx + ky * pyy)
            }
        }
    }

    /// Boundary data g = p restricted to ∂Ω.
    pub fn boundary(&self, x: f64, y: f64) -> f64 {
        self.pressure(x, y)
    }

    /// Checks ∇p against central differences of p (relative 1e-5) and f against
    /// the finite-difference divergence of u (relative 1e-4) on a deterministic
    /// low-discrepancy point set covering `domain`.
    pub fn validate_derivatives(&self, domain: &Rect, n_points: usize) -> Result<()> {
        let h = 1e-6;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        for k in 0..n_points {
            let t = k as f64;
            let x = domain.x0 + domain.width() * (0.5 + t * 0.618_033_988_749_894_9).fract();
            let y = domain.y0 + domain.height() * (0.5 + t * 0.414_213_562_373_095_1).fract();

            let (gx, gy) = self.grad_pressure(x, y);
            let fdx = (self.pressure(x + h, y) - self.pressure(x - h, y)) / (2.0 * h);
            let fdy = (self.pressure(x, y + h) - self.pressure(x, y - h)) / (2.0 * h);
            if rel(gx, fdx) > 1e-5 || rel(gy, fdy) > 1e-5 {
                return Err(Error::data(format!(
                    "case {}: gradient mismatch at ({x:.6}, {y:.6}): \
                     analytic ({gx:.6e}, {gy:.6e}) vs FD ({fdx:.6e}, {fdy:.6e})",
                    self.name()
                )));
            }

            let f = self.source(x, y);
            let dux = (self.velocity(x + h, y).0 - self.velocity(x - h, y).0) / (2.0 * h);
            let duy = (self.velocity(x, y + h).1 - self.velocity(x, y - h).1) / (2.0 * h);
            if rel(f, dux + duy) > 1e-4 {
                return Err(Error::data(format!(
                    "case {}: source mismatch at ({x:.6}, {y:.6}): \
                     analytic {f:.6e} vs FD divergence {:.6e}",
                    self.name(),
                    dux + duy
                )));
            }
        }
        Ok(())
    }
}

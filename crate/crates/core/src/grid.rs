//! The interval domain, Dirichlet boundary data, density states and the
//! discrete differential operators.
//!
//! Boundary values are imposed with a ghost cell chosen so that the face
//! value of Φ(ρ) equals the boundary datum: Φ_ghost = 2ρ_b − Φ(ρ_edge).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, powf, sqrt};
use crate::nonlinear::{Coefficient, NonlinearTriple};
use crate::{Error, Result};

/// Uniform cell-centred grid on (a, b) with N cells and N + 1 faces.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    dx: f64,
    centers: Vec<f64>,
    faces: Vec<f64>,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::Usage(format!(
                "domain must satisfy a < b, got ({a}, {b})"
            )));
        }
        if n < 4 {
            return Err(Error::Usage(format!(
                "grid needs at least 4 cells, got {n}"
            )));
        }
        let dx = (b - a) / n as f64;
        let centers = (0..n).map(|i| a + (i as f64 + 0.5) * dx).collect();
        let faces = (0..=n).map(|j| a + j as f64 * dx).collect();
        Ok(Self {
            a,
            b,
            n,
            dx,
            centers,
            faces,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Σᵢ fᵢ Δx.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx
    }
}

/// Constant-in-time Dirichlet data, stored both as values of Φ(ρ) on the
/// boundary and as the corresponding densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub rho_b_left: f64,
    pub rho_b_right: f64,
    pub rho_left: f64,
    pub rho_right: f64,
}

impl BoundaryData {
    /// `left` and `right` are the prescribed values of Φ(ρ) at a and b.
    pub fn new(triple: &NonlinearTriple, left: f64, right: f64) -> Result<Self> {
        Ok(Self {
            rho_b_left: left,
            rho_b_right: right,
            rho_left: invert_phi(triple, left)?,
            rho_right: invert_phi(triple, right)?,
        })
    }
}

/// Cell-averaged nonnegative density at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub rho: Vec<f64>,
    pub time: f64,
    /// Mass (Σ clipped·Δx) added by zeroing negative cells so far.
    pub clipped_mass_cum: f64,
}

impl DensityState {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = rho
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::Domain(format!(
                "density must be finite and nonnegative; cell {i} holds {v}"
            )));
        }
        Ok(Self {
            rho,
            time: 0.0,
            clipped_mass_cum: 0.0,
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.centers().iter().map(|&x| f(x)).collect())
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.rho)
    }
}

/// Φ⁻¹(y): closed form for power laws, otherwise bisection on an expanding
/// bracket; either way |Φ(ξ) − y| ≤ 1e−12·max(1, y).
pub fn invert_phi(triple: &NonlinearTriple, y: f64) -> Result<f64> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("cannot invert Phi at {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-12 * y.max(1.0);
    // power laws invert in closed form; an exact root keeps boundary-matched
    // constant states exactly steady
    if let Coefficient::Power { scale, exponent } = triple.phi_coefficient() {
        if *scale > 0.0 && *exponent > 0.0 {
            let base = y / scale;
            let root = if *exponent == 1.0 {
                base
            } else if *exponent == 2.0 {
                sqrt(base)
            } else {
                powf(base, 1.0 / exponent)
            };
            if root.is_finite() && abs(triple.phi(root) - y) <= tol {
                return Ok(root);
            }
        }
    }
    let mut hi = 1.0f64;
    let mut expansions = 0;
    while triple.phi(hi) < y {
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 || !hi.is_finite() {
            return Err(Error::Numeric(format!(
                "could not bracket Phi^-1({y}); Phi({hi}) = {}",
                triple.phi(hi)
            )));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let v = triple.phi(mid);
        if abs(v - y) <= tol {
            return Ok(mid);
        }
        if v < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid <= lo && mid >= hi {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if abs(triple.phi(mid) - y) <= tol {
        Ok(mid)
    } else {
        Err(Error::Numeric(format!(
            "bisection for Phi^-1({y}) stalled at {mid} with residual {}",
            triple.phi(mid) - y
        )))
    }
}

/// Harmonic extension of the boundary values of Φ(ρ): the affine
/// interpolant between ρ_b(a) and ρ_b(b), sampled at cell centres.
pub fn harmonic_extension(bd: &BoundaryData, grid: &Grid) -> Vec<f64> {
    let slope = (bd.rho_b_right - bd.rho_b_left) / grid.width();
    grid.centers()
        .iter()
        .map(|&x| bd.rho_b_left + slope * (x - grid.a()))
        .collect()
}

/// Centred face gradients of a cell field whose face values at the two
/// boundaries are `left` and `right`. Writes N + 1 entries into `out`.
#[inline]
pub fn face_gradients_into(values: &[f64], left: f64, right: f64, dx: f64, out: &mut [f64]) {
    let n = values.len();
    debug_assert_eq!(out.len(), n + 1);
    out[0] = 2.0 * (values[0] - left) / dx;
    for j in 1..n {
        out[j] = (values[j] - values[j - 1]) / dx;
    }
    out[n] = 2.0 * (right - values[n - 1]) / dx;
}

/// (g_{i+1} − g_i)/Δx for a face vector of length N + 1.
pub fn divergence(face_flux: &[f64], dx: f64) -> Vec<f64> {
    let mut out = vec![0.0; face_flux.len().saturating_sub(1)];
    divergence_into(face_flux, dx, &mut out);
    out
}

#[inline]
pub fn divergence_into(face_flux: &[f64], dx: f64, out: &mut [f64]) {
    for (o, w) in out.iter_mut().zip(face_flux.windows(2)) {
        *o = (w[1] - w[0]) / dx;
    }
}

/// Three-point Laplacian of Φ(ρ) with the ghost-cell Dirichlet convention.
pub fn laplacian_phi(
    state: &DensityState,
    triple: &NonlinearTriple,
    bd: &BoundaryData,
    grid: &Grid,
) -> Vec<f64> {
    let phi: Vec<f64> = state.rho.iter().map(|&r| triple.phi(r)).collect();
    let mut grad = vec![0.0; grid.len() + 1];
    face_gradients_into(&phi, bd.rho_b_left, bd.rho_b_right, grid.dx(), &mut grad);
    divergence(&grad, grid.dx())
}

/// Face values of Φ(ρ) at a and b implied by the ghost convention.
pub fn boundary_face_phi(
    state: &DensityState,
    triple: &NonlinearTriple,
    bd: &BoundaryData,
) -> (f64, f64) {
    let first = triple.phi(state.rho[0]);
    let last = triple.phi(state.rho[state.rho.len() - 1]);
    let ghost_l = 2.0 * bd.rho_b_left - first;
    let ghost_r = 2.0 * bd.rho_b_right - last;
    (0.5 * (ghost_l + first), 0.5 * (ghost_r + last))
}

//! Fast evaluation of the cutoff-regularized Stratonovich-to-Itô quantities
//! used by the time stepper:
//!
//! * Ψ_{σ,M,β}(ξ) = ∫₀^ξ (σ')² φ_β ζ_M,
//! * its derivative (σ'(ξ))² φ_β(ξ) ζ_M(ξ),
//! * Σ_{σ,M,β}(ξ) = σ(ξ)σ'(ξ) φ_β(ξ) ζ_M(ξ).
//!
//! Power-law σ uses the exact antiderivative. Expression-valued σ is
//! tabulated once and interpolated with cubic Hermite splines, whose nodal
//! slopes are the exact integrand.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{ceil, floor, ln, powf};
use crate::nonlinear::{Coefficient, CutoffParams, NonlinearTriple};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE};
use crate::{Error, Result};

const EDGE_PANELS: usize = 256;
const GEOMETRIC_RATIO: f64 = 1.005;

#[derive(Debug, Clone)]
pub struct ItoCorrection {
    cut: CutoffParams,
    sigma: Coefficient,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    Zero,
    /// (σ')² = k·ξʳ.
    Power {
        k: f64,
        r: f64,
    },
    Table(PsiTable),
}

impl ItoCorrection {
    pub fn new(triple: &NonlinearTriple, cut: CutoffParams) -> Result<Self> {
        let sigma = triple.sigma_coefficient().clone();
        let repr = match &sigma {
            s if s.is_zero() => Repr::Zero,
            Coefficient::Power { scale, exponent } => {
                if *exponent <= 0.0 {
                    return Err(Error::Config(format!(
                        "sigma exponent must be positive, got {exponent}"
                    )));
                }
                Repr::Power {
                    k: scale * scale * exponent * exponent,
                    r: 2.0 * exponent - 2.0,
                }
            }
            _ => Repr::Table(PsiTable::build(&sigma, &cut)?),
        };
        Ok(Self { cut, sigma, repr })
    }

    pub fn cutoffs(&self) -> &CutoffParams {
        &self.cut
    }

    /// (σ'(ξ))² φ_β(ξ) ζ_M(ξ).
    #[inline]
    pub fn psi_prime(&self, xi: f64) -> f64 {
        let w = self.cut.weight(xi);
        if w == 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Power { k, r } => w * k * pow_r(xi, *r),
            Repr::Table(_) => {
                let d = self.sigma.derivative(xi);
                w * d * d
            }
        }
    }

    /// Ψ_{σ,M,β}(ξ).
    #[inline]
    pub fn psi(&self, xi: f64) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Power { k, r } => power_psi(*k, *r, &self.cut, xi),
            Repr::Table(t) => t.eval(xi),
        }
    }

    /// Σ_{σ,M,β}(ξ) = σσ'·φ_β·ζ_M.
    #[inline]
    pub fn sigma_sigma_prime(&self, xi: f64) -> f64 {
        let w = self.cut.weight(xi);
        if w == 0.0 {
            0.0
        } else {
            w * self.sigma.times_derivative(xi)
        }
    }
}

#[inline]
fn pow_r(x: f64, r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else if r == -1.0 {
        1.0 / x
    } else {
        powf(x, r)
    }
}

/// Antiderivative of sʳ.
#[inline]
fn prim(s: f64, r: f64) -> f64 {
    if r == -1.0 {
        ln(s)
    } else if r == 0.0 {
        s
    } else {
        powf(s, r + 1.0) / (r + 1.0)
    }
}

fn power_psi(k: f64, r: f64, cut: &CutoffParams, xi: f64) -> f64 {
    let beta = cut.beta();
    let half = 0.5 * beta;
    let m = cut.m_cap();
    if xi <= half {
        return 0.0;
    }
    // ∫ k sʳ (2s/β − 1) on [β/2, min(ξ, β)]
    let hi = xi.min(beta);
    let mut total = k
        * ((2.0 / beta) * (prim(hi, r + 1.0) - prim(half, r + 1.0))
            - (prim(hi, r) - prim(half, r)));
    if xi > beta {
        let hi = xi.min(m);
        total += k * (prim(hi, r) - prim(beta, r));
    }
    if xi > m {
        // ∫ k sʳ (M + 1 − s) on [M, min(ξ, M + 1)]
        let hi = xi.min(m + 1.0);
        total +=
            k * ((m + 1.0) * (prim(hi, r) - prim(m, r)) - (prim(hi, r + 1.0) - prim(m, r + 1.0)));
    }
    total
}

/// Ψ tabulated on nodes that put every kink of the cutoffs on a node:
/// uniform on [β/2, β], geometric on [β, M], uniform on [M, M + 1].
#[derive(Debug, Clone)]
struct PsiTable {
    half_beta: f64,
    beta: f64,
    m_cap: f64,
    h_low: f64,
    ln_ratio: f64,
    n_geo: usize,
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PsiTable {
    fn build(sigma: &Coefficient, cut: &CutoffParams) -> Result<Self> {
        let beta = cut.beta();
        let half = 0.5 * beta;
        let m_cap = cut.m_cap();
        let h_low = half / EDGE_PANELS as f64;
        let n_geo = ceil(ln(m_cap / beta) / ln(GEOMETRIC_RATIO)).max(1.0) as usize;
        let ln_ratio = ln(m_cap / beta) / n_geo as f64;

        let mut nodes = Vec::with_capacity(2 * EDGE_PANELS + n_geo + 1);
        for i in 0..EDGE_PANELS {
            nodes.push(half + h_low * i as f64);
        }
        for i in 0..n_geo {
            nodes.push(beta * crate::math::exp(ln_ratio * i as f64));
        }
        for i in 0..=EDGE_PANELS {
            nodes.push(m_cap + i as f64 / EDGE_PANELS as f64);
        }

        let integrand = |s: f64| {
            let w = cut.weight(s);
            if w == 0.0 {
                0.0
            } else {
                let d = sigma.derivative(s);
                w * d * d
            }
        };
        let mut values = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        values.push(0.0);
        for w in nodes.windows(2) {
            acc += adaptive_simpson(&integrand, w[0], w[1], DEFAULT_TOLERANCE, DEFAULT_MAX_DEPTH)?;
            values.push(acc);
        }
        let slopes: Vec<f64> = nodes.iter().map(|&s| integrand(s)).collect();
        if slopes.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "regularized Ito correction is not finite on the cutoff support".into(),
            ));
        }
        Ok(Self {
            half_beta: half,
            beta,
            m_cap,
            h_low,
            ln_ratio,
            n_geo,
            nodes,
            values,
            slopes,
        })
    }

    fn eval(&self, xi: f64) -> f64 {
        if xi <= self.half_beta {
            return 0.0;
        }
        let last = self.nodes.len() - 1;
        if xi >= self.nodes[last] {
            return self.values[last];
        }
        let idx = if xi < self.beta {
            floor((xi - self.half_beta) / self.h_low) as usize
        } else if xi < self.m_cap {
            EDGE_PANELS + floor(ln(xi / self.beta) / self.ln_ratio) as usize
        } else {
            EDGE_PANELS + self.n_geo + floor((xi - self.m_cap) * EDGE_PANELS as f64) as usize
        };
        // rounding in the index formulas can land one panel off
        let mut i = idx.min(last - 1);
        while i > 0 && self.nodes[i] > xi {
            i -= 1;
        }
        while i + 1 < last && self.nodes[i + 1] <= xi {
            i += 1;
        }
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (xi - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }
}

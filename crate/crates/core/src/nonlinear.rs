//! The coefficient triple (Φ, σ, ν), the gap functional 𝒜, the velocity
//! cutoffs, and empirical checks of the structural assumptions.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::math::{abs, powf, sqrt};
use crate::quadrature::integrate_with_breaks;
use crate::{Error, Result};

/// Which family the triple belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Φ(ξ) = ξ, σ(ξ) = √ξ.
    Classical,
    /// Φ(ξ) = ξᵐ, σ(ξ) = ξ^{m/2}, m > 1.
    PorousMedium { m: f64 },
    /// User-supplied coefficients with declared gap constants.
    Custom,
}

/// A scalar coefficient function of the density together with its derivative.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Zero,
    /// `scale · ξ^exponent`.
    Power {
        scale: f64,
        exponent: f64,
    },
    Expr(Arc<Expr>),
}

impl Coefficient {
    pub fn identity() -> Self {
        Self::Power {
            scale: 1.0,
            exponent: 1.0,
        }
    }

    pub fn linear(slope: f64) -> Self {
        Self::Power {
            scale: slope,
            exponent: 1.0,
        }
    }

    pub fn power(exponent: f64) -> Self {
        Self::Power {
            scale: 1.0,
            exponent,
        }
    }

    pub fn parse(source: &str) -> Result<Self> {
        Ok(Self::Expr(Arc::new(Expr::parse(source)?)))
    }

    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Power { scale, exponent } => scale * pow_fast(xi, *exponent),
            Self::Expr(e) => e.eval(xi),
        }
    }

    #[inline]
    pub fn derivative(&self, xi: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Power { scale, exponent } => {
                if *exponent == 1.0 {
                    *scale
                } else {
                    scale * exponent * pow_fast(xi, exponent - 1.0)
                }
            }
            Self::Expr(e) => e.eval_with_derivative(xi).1,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Power { scale, .. } => *scale == 0.0,
            Self::Expr(_) => false,
        }
    }

    /// `f(ξ)·f'(ξ)`, using the closed form for powers so that √ξ gives ½ at 0.
    #[inline]
    pub fn times_derivative(&self, xi: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Power { scale, exponent } => {
                scale * scale * exponent * pow_fast(xi, 2.0 * exponent - 1.0)
            }
            Self::Expr(e) => {
                let (v, d) = e.eval_with_derivative(xi);
                if v == 0.0 {
                    0.0
                } else {
                    v * d
                }
            }
        }
    }
}

#[inline]
fn pow_fast(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p == 0.5 {
        sqrt(x)
    } else if p == 0.0 {
        1.0
    } else if p == -0.5 {
        1.0 / sqrt(x)
    } else {
        powf(x, p)
    }
}

/// Low- and high-velocity cutoff scales (β, M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffParams {
    beta: f64,
    m_cap: f64,
}

impl Default for CutoffParams {
    fn default() -> Self {
        Self {
            beta: 1e-4,
            m_cap: 1e4,
        }
    }
}

impl CutoffParams {
    pub fn new(beta: f64, m_cap: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0 && m_cap >= 1.0 && m_cap.is_finite()) {
            return Err(Error::Usage(format!(
                "cutoffs require 0 < beta < 1 <= M_cap, got beta = {beta}, M_cap = {m_cap}"
            )));
        }
        Ok(Self { beta, m_cap })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m_cap(&self) -> f64 {
        self.m_cap
    }

    /// φ_β(ξ)·ζ_M(ξ).
    #[inline]
    pub fn weight(&self, xi: f64) -> f64 {
        low_velocity_cutoff(self.beta, xi) * high_velocity_cutoff(self.m_cap, xi)
    }

    /// Points where the cutoff product has a kink.
    pub fn breakpoints(&self) -> [f64; 4] {
        [0.5 * self.beta, self.beta, self.m_cap, self.m_cap + 1.0]
    }
}

/// φ_β: 0 below β/2, 1 above β, linear in between.
#[inline]
pub fn low_velocity_cutoff(beta: f64, xi: f64) -> f64 {
    if xi >= beta {
        1.0
    } else if xi <= 0.5 * beta {
        0.0
    } else {
        2.0 * xi / beta - 1.0
    }
}

/// ζ_M: 1 below M, 0 above M + 1, linear in between.
#[inline]
pub fn high_velocity_cutoff(m_cap: f64, xi: f64) -> f64 {
    if xi <= m_cap {
        1.0
    } else if xi >= m_cap + 1.0 {
        0.0
    } else {
        m_cap + 1.0 - xi
    }
}

/// The coefficient bundle (Φ, σ, ν) with the declared gap exponent q₀ and
/// constant c_{q₀} of the lower bound 𝒜(ξ₁, ξ₂) ≥ c_{q₀}|ξ₁ − ξ₂|^{q₀+1}.
#[derive(Debug, Clone)]
pub struct NonlinearTriple {
    regime: Regime,
    phi: Coefficient,
    sigma: Coefficient,
    nu: Coefficient,
    q0: f64,
    c_q0: f64,
}

impl NonlinearTriple {
    pub fn classical(nu: Coefficient) -> Self {
        Self {
            regime: Regime::Classical,
            phi: Coefficient::identity(),
            sigma: Coefficient::power(0.5),
            nu,
            q0: 0.0,
            c_q0: 1.0,
        }
    }

    pub fn porous_medium(m: f64, nu: Coefficient) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::Domain(format!(
                "porous-medium exponent must satisfy m > 1, got {m}"
            )));
        }
        Ok(Self {
            regime: Regime::PorousMedium { m },
            phi: Coefficient::power(m),
            sigma: Coefficient::power(0.5 * m),
            nu,
            q0: m - 1.0,
            c_q0: 1.0,
        })
    }

    /// A user-specified triple. Φ(0) = 0, σ(0) = 0 and strict monotonicity of
    /// Φ on a sample of [0, 10] are enforced; q₀ and c_{q₀} are taken as
    /// declared and only validated empirically by [`Self::check_assumptions`].
    pub fn custom(
        phi: Coefficient,
        sigma: Coefficient,
        nu: Coefficient,
        q0: f64,
        c_q0: f64,
    ) -> Result<Self> {
        if !(q0 >= 0.0 && q0.is_finite()) {
            return Err(Error::Domain(format!("q0 must be >= 0, got {q0}")));
        }
        if !(c_q0 > 0.0 && c_q0.is_finite()) {
            return Err(Error::Domain(format!("c_q0 must be > 0, got {c_q0}")));
        }
        if abs(phi.value(0.0)) > 1e-12 {
            return Err(Error::Config(format!(
                "Phi(0) must vanish, got {}",
                phi.value(0.0)
            )));
        }
        if abs(sigma.value(0.0)) > 1e-12 {
            return Err(Error::Config(format!(
                "sigma(0) must vanish, got {}",
                sigma.value(0.0)
            )));
        }
        let mut prev = phi.value(0.0);
        for i in 1..=200 {
            let xi = 0.05 * i as f64;
            let v = phi.value(xi);
            if !(v > prev) {
                return Err(Error::Config(format!(
                    "Phi must be strictly increasing; fails between {} and {xi}",
                    xi - 0.05
                )));
            }
            prev = v;
        }
        Ok(Self {
            regime: Regime::Custom,
            phi,
            sigma,
            nu,
            q0,
            c_q0,
        })
    }

    /// Keeps Φ, ν and the gap constants but replaces σ. The result is a
    /// [`Regime::Custom`] triple.
    pub fn with_sigma(&self, sigma: Coefficient) -> Result<Self> {
        Self::custom(self.phi.clone(), sigma, self.nu.clone(), self.q0, self.c_q0)
    }

    /// Replaces the declared gap constant c_{q₀}; regime and coefficients
    /// are kept.
    pub fn with_gap_constant(&self, c_q0: f64) -> Result<Self> {
        if !(c_q0 > 0.0 && c_q0.is_finite()) {
            return Err(Error::Domain(format!("c_q0 must be > 0, got {c_q0}")));
        }
        let mut t = self.clone();
        t.c_q0 = c_q0;
        Ok(t)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn c_q0(&self) -> f64 {
        self.c_q0
    }

    pub fn phi_coefficient(&self) -> &Coefficient {
        &self.phi
    }

    pub fn sigma_coefficient(&self) -> &Coefficient {
        &self.sigma
    }

    pub fn nu_coefficient(&self) -> &Coefficient {
        &self.nu
    }

    #[inline]
    pub fn phi(&self, xi: f64) -> f64 {
        self.phi.value(xi)
    }

    #[inline]
    pub fn phi_prime(&self, xi: f64) -> f64 {
        self.phi.derivative(xi)
    }

    #[inline]
    pub fn sigma(&self, xi: f64) -> f64 {
        self.sigma.value(xi)
    }

    #[inline]
    pub fn sigma_prime(&self, xi: f64) -> f64 {
        self.sigma.derivative(xi)
    }

    #[inline]
    pub fn nu(&self, xi: f64) -> f64 {
        self.nu.value(xi)
    }

    #[inline]
    pub fn nu_prime(&self, xi: f64) -> f64 {
        self.nu.derivative(xi)
    }

    /// Exponent m in the growth bound Φ(ξ) ≤ c(1 + ξᵐ).
    pub fn growth_exponent(&self) -> f64 {
        match self.regime {
            Regime::Classical => 1.0,
            Regime::PorousMedium { m } => m,
            Regime::Custom => self.q0 + 1.0,
        }
    }

    /// 𝒜(ξ₁, ξ₂) = |Φ(ξ₁) − Φ(ξ₂)| + |ν(ξ₁) − ν(ξ₂)|.
    pub fn gap_functional(&self, xi1: f64, xi2: f64) -> Result<f64> {
        check_density(xi1)?;
        check_density(xi2)?;
        Ok(self.gap_unchecked(xi1, xi2))
    }

    #[inline]
    pub(crate) fn gap_unchecked(&self, xi1: f64, xi2: f64) -> f64 {
        abs(self.phi(xi1) - self.phi(xi2)) + abs(self.nu(xi1) - self.nu(xi2))
    }

    /// σ(ξ)σ'(ξ); the classical value at ξ = 0 is its constant ½.
    pub fn sigma_sigma_prime(&self, xi: f64) -> Result<f64> {
        check_density(xi)?;
        Ok(self.sigma.times_derivative(xi))
    }

    /// Ψ_{σ,M,β}(ξ) = ∫₀^ξ (σ'(s))² φ_β(s) ζ_M(s) ds by adaptive quadrature.
    pub fn psi_sigma_reg(&self, xi: f64, cut: &CutoffParams) -> Result<f64> {
        check_density(xi)?;
        let integrand = |s: f64| {
            let w = cut.weight(s);
            if w == 0.0 {
                0.0
            } else {
                let d = self.sigma_prime(s);
                d * d * w
            }
        };
        integrate_with_breaks(&integrand, 0.0, xi, &cut.breakpoints())
    }

    /// Θ_{Φ,2}(ξ) = ∫₀^ξ √Φ'(s) ds by adaptive quadrature.
    pub fn theta_phi2(&self, xi: f64) -> Result<f64> {
        check_density(xi)?;
        let integrand = |s: f64| sqrt(self.phi_prime(s).max(0.0));
        integrate_with_breaks(&integrand, 0.0, xi, &[])
    }

    /// Evaluates the structural assumptions on `sample_grid`, reporting the
    /// best empirical constant of each inequality and witnesses of any
    /// violated one.
    pub fn check_assumptions(
        &self,
        sample_grid: &[f64],
        cut: &CutoffParams,
    ) -> Result<AssumptionReport> {
        if sample_grid.is_empty() {
            return Err(Error::Usage(
                "check_assumptions needs a non-empty grid".into(),
            ));
        }
        for w in sample_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Usage(format!(
                    "sample grid must be strictly ascending ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        for &x in sample_grid {
            check_density(x)?;
        }
        let g = sample_grid;
        let n = g.len();
        let phi: Vec<f64> = g.iter().map(|&x| self.phi(x)).collect();
        let sig: Vec<f64> = g.iter().map(|&x| self.sigma(x)).collect();
        let ssp: Vec<f64> = g.iter().map(|&x| self.sigma.times_derivative(x)).collect();
        let nu: Vec<f64> = g.iter().map(|&x| self.nu(x)).collect();
        let psi = g
            .iter()
            .map(|&x| self.psi_sigma_reg(x, cut))
            .collect::<Result<Vec<f64>>>()?;
        let theta = g
            .iter()
            .map(|&x| self.theta_phi2(x))
            .collect::<Result<Vec<f64>>>()?;
        let m = self.growth_exponent();
        let mut checks = Vec::new();

        // Φ(0) = 0 and strict monotonicity.
        let phi0 = self.phi(0.0);
        checks.push(AssumptionCheck::exact(
            "phi_zero_at_zero",
            abs(phi0),
            (abs(phi0) > 1e-12).then(|| Witness::point(0.0, format!("Phi(0) = {phi0}"))),
        ));
        let mut mono = None;
        for i in 1..n {
            if !(phi[i] > phi[i - 1]) {
                mono = Some(Witness::pair(g[i - 1], g[i], "Phi not strictly increasing"));
                break;
            }
        }
        checks.push(AssumptionCheck::exact("phi_strictly_increasing", 0.0, mono));

        // Growth of Φ and Φ'.
        let c = max_ratio(g, |i, x| (phi[i], 1.0 + powf(x, m)));
        checks.push(AssumptionCheck::constant("phi_growth", c));
        let c = max_ratio(g, |i, x| (self.phi_prime(x), 1.0 + phi[i]));
        checks.push(AssumptionCheck::constant("phi_prime_growth", c));

        // |ξ − η|^{m+1} ≤ c|Θ(ξ) − Θ(η)|² and Θ(ξ) ≥ c(ξ^{(m+1)/2} − 1).
        let q = m + 1.0;
        let mut best = 0.0f64;
        let mut bad = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let num = powf(g[j] - g[i], q);
                let den = (theta[j] - theta[i]) * (theta[j] - theta[i]);
                if den == 0.0 {
                    bad = Some(Witness::pair(g[i], g[j], "Theta_Phi,2 is flat"));
                } else {
                    best = best.max(num / den);
                }
            }
        }
        checks.push(AssumptionCheck::with_constant(
            "theta_phi2_coercivity",
            best,
            bad,
        ));
        let mut lower = f64::INFINITY;
        for i in 0..n {
            let base = powf(g[i], 0.5 * q) - 1.0;
            if base > 0.0 {
                lower = lower.min(theta[i] / base);
            }
        }
        checks.push(AssumptionCheck::constant(
            "theta_phi2_lower_growth",
            if lower.is_finite() { lower } else { 0.0 },
        ));

        // σ growth, σ(0) = 0, σ² at zero and oscillation.
        let c = max_ratio(g, |i, x| (abs(sig[i]) + ssp[i] * ssp[i], 1.0 + x + phi[i]));
        checks.push(AssumptionCheck::constant("sigma_growth", c));
        let s0 = self.sigma(0.0);
        checks.push(AssumptionCheck::exact(
            "sigma_zero_at_zero",
            abs(s0),
            (abs(s0) > 1e-12).then(|| Witness::point(0.0, format!("sigma(0) = {s0}"))),
        ));
        let near_zero_cap = g.iter().copied().find(|&x| x > 0.0).unwrap_or(0.0).max(1.0);
        let mut c = 0.0f64;
        for (i, &x) in g.iter().enumerate() {
            if x > 0.0 && x <= near_zero_cap {
                c = c.max(sig[i] * sig[i] / x);
            }
        }
        checks.push(AssumptionCheck::constant("sigma_squared_linear_at_zero", c));
        let mut running = 0.0f64;
        let mut c = 0.0f64;
        for (i, &x) in g.iter().enumerate() {
            running = running.max(sig[i] * sig[i]);
            c = c.max(running / (1.0 + x + sig[i] * sig[i]));
        }
        checks.push(AssumptionCheck::constant("sigma_squared_oscillation", c));
        let delta = g.iter().copied().find(|&x| x > 0.0);
        if let Some(delta) = delta {
            let c = max_ratio(g, |i, x| {
                if x < delta {
                    (0.0, 1.0)
                } else {
                    let d = self.sigma_prime(x);
                    (d * d * d * d / self.phi_prime(x), 1.0 + x + phi[i])
                }
            });
            checks.push(AssumptionCheck::constant("sigma_prime_quartic_growth", c));
        }

        // σσ' non-decreasing and |σσ'(ξ₁) − σσ'(ξ₂)| ≤ c|Ψ_σ(ξ₁) − Ψ_σ(ξ₂)|.
        checks.push(AssumptionCheck::exact(
            "sigma_sigma_prime_monotone",
            0.0,
            first_decrease(g, &ssp, "sigma*sigma' decreases"),
        ));
        checks.push(AssumptionCheck::constant(
            "sigma_sigma_prime_at_zero",
            self.sigma.times_derivative(0.0),
        ));
        let mut best = 0.0f64;
        let mut bad = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let num = abs(ssp[j] - ssp[i]);
                let den = abs(psi[j] - psi[i]);
                if den == 0.0 {
                    if num > 1e-14 * (1.0 + abs(ssp[i])) {
                        bad = Some(Witness::pair(
                            g[i],
                            g[j],
                            "Psi_sigma flat where sigma*sigma' moves",
                        ));
                    }
                } else {
                    best = best.max(num / den);
                }
            }
        }
        checks.push(AssumptionCheck::with_constant(
            "sigma_sigma_prime_lipschitz_link",
            best,
            bad,
        ));

        // ν non-decreasing, growth and oscillation.
        checks.push(AssumptionCheck::exact(
            "nu_monotone",
            0.0,
            first_decrease(g, &nu, "nu decreases"),
        ));
        let c = max_ratio(g, |i, x| (abs(nu[i]), 1.0 + x + phi[i]));
        checks.push(AssumptionCheck::constant("nu_growth", c));
        let mut running = 0.0f64;
        let mut c = 0.0f64;
        for (i, &x) in g.iter().enumerate() {
            running = running.max(abs(nu[i]));
            c = c.max(running / (1.0 + x + abs(nu[i])));
        }
        checks.push(AssumptionCheck::constant("nu_oscillation", c));

        // 𝒜(ξ₁, ξ₂) ≥ c_{q₀}|ξ₁ − ξ₂|^{q₀+1} over all pairs.
        let mut best = f64::INFINITY;
        let mut arg = (0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = abs(phi[j] - phi[i]) + abs(nu[j] - nu[i]);
                let r = gap / powf(g[j] - g[i], self.q0 + 1.0);
                if r < best {
                    best = r;
                    arg = (g[i], g[j]);
                }
            }
        }
        let violated = best < self.c_q0 * (1.0 - 1e-12);
        checks.push(AssumptionCheck::with_constant(
            "gap_lower_bound",
            if best.is_finite() { best } else { self.c_q0 },
            violated.then(|| {
                Witness::pair(
                    arg.0,
                    arg.1,
                    &format!("gap ratio {best} below declared c_q0 = {}", self.c_q0),
                )
            }),
        ));

        Ok(AssumptionReport { checks })
    }
}

fn check_density(xi: f64) -> Result<()> {
    if xi >= 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "density arguments must be finite and nonnegative, got {xi}"
        )))
    }
}

fn max_ratio(g: &[f64], mut f: impl FnMut(usize, f64) -> (f64, f64)) -> f64 {
    let mut c = 0.0f64;
    for (i, &x) in g.iter().enumerate() {
        let (num, den) = f(i, x);
        let r = num / den;
        if r.is_nan() {
            return f64::INFINITY;
        }
        c = c.max(r);
    }
    c
}

fn first_decrease(g: &[f64], values: &[f64], what: &str) -> Option<Witness> {
    for i in 1..g.len() {
        let tol = 1e-12 * (1.0 + abs(values[i - 1]));
        if values[i] < values[i - 1] - tol {
            return Some(Witness::pair(g[i - 1], g[i], what));
        }
    }
    None
}

/// Points where an inequality fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub xi1: f64,
    pub xi2: Option<f64>,
    pub detail: String,
}

impl Witness {
    fn point(xi: f64, detail: String) -> Self {
        Self {
            xi1: xi,
            xi2: None,
            detail,
        }
    }

    fn pair(xi1: f64, xi2: f64, detail: &str) -> Self {
        Self {
            xi1,
            xi2: Some(xi2),
            detail: String::from(detail),
        }
    }
}

/// One line of an [`AssumptionReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    /// Best empirical constant over the grid (or the measured defect for
    /// exact identities).
    pub constant: f64,
    pub violation: Option<Witness>,
}

impl AssumptionCheck {
    fn exact(name: &'static str, defect: f64, violation: Option<Witness>) -> Self {
        Self {
            name,
            constant: defect,
            violation,
        }
    }

    /// An existence-of-constant inequality: passes iff the constant is finite.
    fn constant(name: &'static str, c: f64) -> Self {
        Self::with_constant(name, c, None)
    }

    fn with_constant(name: &'static str, c: f64, violation: Option<Witness>) -> Self {
        let violation = violation.or_else(|| {
            (!c.is_finite()).then(|| Witness {
                xi1: f64::NAN,
                xi2: None,
                detail: format!("no finite constant (got {c})"),
            })
        });
        Self {
            name,
            constant: c,
            violation,
        }
    }

    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AssumptionCheck::passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

//! Run configuration: a TOML document with a fixed schema. Unknown keys are
//! rejected and every error names the offending key.

use std::path::{Path, PathBuf};

use dklab_core::noise::Mode;
use dklab_core::{
    BoundaryData, Coefficient, CutoffParams, DensityState, Dynamics, Grid, NoiseSpec,
    NonlinearTriple, Regime, SolverParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Contraction,
    DecayFit,
    Invariant,
    VerifyWeight,
    CheckAssumptions,
    HeatOracle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Contraction => "contraction",
            Self::DecayFit => "decay_fit",
            Self::Invariant => "invariant",
            Self::VerifyWeight => "verify_weight",
            Self::CheckAssumptions => "check_assumptions",
            Self::HeatOracle => "heat_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub base_seed: u64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub nonlinear: NonlinearConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub invariant: InvariantConfig,
    #[serde(default)]
    pub assumptions: AssumptionsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub rho_b_left: f64,
    #[serde(default)]
    pub rho_b_right: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    #[default]
    Classical,
    PorousMedium,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearConfig {
    #[serde(default)]
    pub regime: RegimeName,
    /// Porous-medium exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Φ as an expression in `xi` (custom regime only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    /// σ as an expression in `xi`; replaces the regime's σ when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(default = "zero_expr")]
    pub nu: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_q0: Option<f64>,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self {
            regime: RegimeName::Classical,
            m: None,
            phi: None,
            sigma: None,
            nu: zero_expr(),
            q0: None,
            c_q0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKindName {
    Constant,
    Sine,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub kind: ModeKindName,
    #[serde(default = "one_u32")]
    pub freq: u32,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeConfig>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            modes: default_modes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_m_cap", rename = "M_cap")]
    pub m_cap: f64,
    #[serde(default = "one")]
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_count: Option<usize>,
    #[serde(default = "yes")]
    pub clip_negative: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: default_cfl(),
            beta: default_beta(),
            m_cap: default_m_cap(),
            t_end: 1.0,
            save_times: None,
            save_count: None,
            clip_negative: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Worker threads; 0 uses one per core.
    #[serde(default)]
    pub parallelism: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            parallelism: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant {
        value: f64,
    },
    /// offset + amplitude·sin(freq·π(x − a)/(b − a)).
    Sine {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_u32")]
        freq: u32,
    },
    Values {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_profiles")]
    pub profiles: Vec<ProfileConfig>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            profiles: default_profiles(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    /// Unset means 0 in the classical regime and the empirical σσ'/Ψ_σ
    /// Lipschitz constant from the assumption checks otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_link: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            c_link: None,
            margin: default_margin(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// [t_lo, t_hi]; defaults to [0.1·t_end, t_end].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    #[serde(default = "one")]
    pub t_burn: f64,
    #[serde(default = "two")]
    pub t_sample: f64,
}

impl Default for InvariantConfig {
    fn default() -> Self {
        Self {
            t_burn: 1.0,
            t_sample: 2.0,
        }
    }
}

/// Sample grid linspace(0, xi_max, samples) for the assumption checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsConfig {
    #[serde(default = "default_xi_max")]
    pub xi_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for AssumptionsConfig {
    fn default() -> Self {
        Self {
            xi_max: default_xi_max(),
            samples: default_samples(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn one_u32() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn zero_expr() -> String {
    "0".into()
}
fn default_cfl() -> f64 {
    0.25
}
fn default_beta() -> f64 {
    1e-4
}
fn default_m_cap() -> f64 {
    1e4
}
fn default_paths() -> usize {
    20
}
fn default_margin() -> f64 {
    0.1
}
fn default_xi_max() -> f64 {
    10.0
}
fn default_samples() -> usize {
    101
}
fn default_save_count() -> usize {
    41
}
fn default_modes() -> Vec<ModeConfig> {
    vec![ModeConfig {
        kind: ModeKindName::Constant,
        freq: 1,
        amplitude: 1.0,
    }]
}
fn default_profiles() -> Vec<ProfileConfig> {
    vec![
        ProfileConfig::Sine {
            offset: 1.0,
            amplitude: 0.5,
            freq: 1,
        },
        ProfileConfig::Constant { value: 1.0 },
    ]
}

/// Parses a TOML document, reporting the dotted path of the first bad key.
pub fn parse_config(text: &str) -> LabResult<RunConfig> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| LabError::config("<document>", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        let key = match missing_field(&message) {
            Some(field) if path == "." || path.is_empty() => field.to_string(),
            Some(field) => format!("{path}.{field}"),
            None if path == "." || path.is_empty() => "<document>".to_string(),
            None => path,
        };
        LabError::config(key, message)
    })
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

pub fn load_config(path: &Path) -> LabResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            LabError::config("<file>", format!("{} not found", path.display()))
        }
        _ => LabError::io(path, e),
    })?;
    parse_config(&text)
}

fn parse_coefficient(key: &str, src: &str) -> LabResult<Coefficient> {
    match src.trim() {
        "0" => Ok(Coefficient::Zero),
        "xi" | "ξ" | "x" => Ok(Coefficient::identity()),
        s => Coefficient::parse(s).map_err(|e| LabError::config(key, e.to_string())),
    }
}

/// Everything a run needs, built and validated from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub grid: Grid,
    pub triple: NonlinearTriple,
    pub noise: NoiseSpec,
    pub noise_enabled: bool,
    pub boundary: BoundaryData,
    pub cut: CutoffParams,
    pub params: SolverParams,
    pub c_link: f64,
    pub initials: Vec<DensityState>,
}

impl Resolved {
    pub fn dynamics(&self) -> LabResult<Dynamics> {
        Ok(Dynamics::new(
            self.grid.clone(),
            self.triple.clone(),
            self.noise_enabled.then_some(&self.noise),
            self.boundary,
            self.cut,
        )?)
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match self.config.fit.window {
            Some([lo, hi]) => (lo, hi),
            None => (0.1 * self.params.t_end, self.params.t_end),
        }
    }
}

impl RunConfig {
    /// Validates every section and freezes defaults (save times become an
    /// explicit list).
    pub fn resolve(&self) -> LabResult<Resolved> {
        let mut config = self.clone();
        let d = &config.domain;
        if d.n < 4 {
            return Err(LabError::config(
                "domain.N",
                format!("need at least 4 cells, got {}", d.n),
            ));
        }
        let grid =
            Grid::new(d.a, d.b, d.n).map_err(|e| LabError::config("domain", e.to_string()))?;

        let triple = build_triple(&config.nonlinear)?;

        let b = &config.boundary;
        for (key, v) in [
            ("boundary.rho_b_left", b.rho_b_left),
            ("boundary.rho_b_right", b.rho_b_right),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(LabError::config(
                    key,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        let boundary = BoundaryData::new(&triple, b.rho_b_left, b.rho_b_right)
            .map_err(|e| LabError::config("boundary", e.to_string()))?;

        let modes = config
            .noise
            .modes
            .iter()
            .map(|m| match m.kind {
                ModeKindName::Constant => Mode::constant(m.amplitude),
                ModeKindName::Sine => Mode::sine(m.freq, m.amplitude),
                ModeKindName::Cosine => Mode::cosine(m.freq, m.amplitude),
            })
            .collect();
        let noise =
            NoiseSpec::new(modes).map_err(|e| LabError::config("noise.modes", e.to_string()))?;
        dklab_core::NoiseField::build(&noise, &grid)
            .map_err(|e| LabError::config("noise.modes", e.to_string()))?;

        let s = &mut config.solver;
        let cut = CutoffParams::new(s.beta, s.m_cap)
            .map_err(|e| LabError::config("solver.beta", e.to_string()))?;
        let save_times = match (&s.save_times, s.save_count) {
            (Some(_), Some(_)) => {
                return Err(LabError::config(
                    "solver.save_times",
                    "give either save_times or save_count, not both",
                ))
            }
            (Some(t), None) => t.clone(),
            (None, count) => {
                SolverParams::uniform_save_times(s.t_end, count.unwrap_or_else(default_save_count))
            }
        };
        s.save_times = Some(save_times.clone());
        s.save_count = None;
        let mut params = SolverParams::new(s.cfl, cut, s.t_end, save_times)
            .map_err(|e| LabError::config("solver", e.to_string()))?;
        params.clip_negative = s.clip_negative;

        let initials = config
            .initial
            .profiles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                build_profile(p, &grid)
                    .map_err(|e| LabError::config(format!("initial.profiles[{i}]"), e))
            })
            .collect::<LabResult<Vec<_>>>()?;

        if config.ensemble.paths == 0 {
            return Err(LabError::config("ensemble.paths", "need at least one path"));
        }
        let a = &config.assumptions;
        if !(a.xi_max > 0.0 && a.xi_max.is_finite()) {
            return Err(LabError::config(
                "assumptions.xi_max",
                format!("must be > 0, got {}", a.xi_max),
            ));
        }
        if a.samples < 2 {
            return Err(LabError::config(
                "assumptions.samples",
                "need at least 2 samples",
            ));
        }
        let c_link = match config.weight.c_link {
            Some(c) => c,
            None if triple.regime() == Regime::Classical => 0.0,
            None => empirical_link_constant(&triple, &config.assumptions, &cut)?,
        };
        if !(c_link >= 0.0 && c_link.is_finite()) {
            return Err(LabError::config(
                "weight.c_link",
                format!("must be >= 0, got {c_link}"),
            ));
        }
        config.weight.c_link = Some(c_link);
        let w = &config.weight;
        if !(w.margin > 0.0 && w.margin.is_finite()) {
            return Err(LabError::config(
                "weight.margin",
                format!("must be > 0, got {}", w.margin),
            ));
        }
        if let Some([lo, hi]) = config.fit.window {
            if !(lo < hi) {
                return Err(LabError::config(
                    "fit.window",
                    format!("need lo < hi, got [{lo}, {hi}]"),
                ));
            }
        }
        let noise_enabled = config.noise.enabled;
        Ok(Resolved {
            config,
            grid,
            triple,
            noise,
            noise_enabled,
            boundary,
            cut,
            params,
            c_link,
            initials,
        })
    }
}

impl AssumptionsConfig {
    pub fn sample_grid(&self) -> Vec<f64> {
        let n = self.samples;
        (0..n)
            .map(|i| self.xi_max * i as f64 / (n - 1) as f64)
            .collect()
    }
}

fn empirical_link_constant(
    triple: &NonlinearTriple,
    a: &AssumptionsConfig,
    cut: &CutoffParams,
) -> LabResult<f64> {
    let report = triple
        .check_assumptions(&a.sample_grid(), cut)
        .map_err(|e| LabError::config("weight.c_link", e.to_string()))?;
    report
        .get("sigma_sigma_prime_lipschitz_link")
        .map(|c| c.constant)
        .ok_or_else(|| {
            LabError::config("weight.c_link", "no link constant in the assumption report")
        })
}

fn build_triple(c: &NonlinearConfig) -> LabResult<NonlinearTriple> {
    let nu = parse_coefficient("nonlinear.nu", &c.nu)?;
    let mut triple = match c.regime {
        RegimeName::Classical => {
            if let Some(q0) = c.q0.filter(|&q| q != 0.0) {
                return Err(LabError::config(
                    "nonlinear.q0",
                    format!("classical regime has q0 = 0, got {q0}"),
                ));
            }
            if c.phi.is_some() {
                return Err(LabError::config(
                    "nonlinear.phi",
                    "phi is fixed by the classical regime",
                ));
            }
            NonlinearTriple::classical(nu)
        }
        RegimeName::PorousMedium => {
            let m =
                c.m.ok_or_else(|| LabError::config("nonlinear.m", "porous_medium regime needs m"))?;
            if let Some(q0) = c.q0.filter(|&q| q != m - 1.0) {
                return Err(LabError::config(
                    "nonlinear.q0",
                    format!("porous regime has q0 = m - 1, got {q0}"),
                ));
            }
            if c.phi.is_some() {
                return Err(LabError::config(
                    "nonlinear.phi",
                    "phi is fixed by the porous_medium regime",
                ));
            }
            NonlinearTriple::porous_medium(m, nu)
                .map_err(|e| LabError::config("nonlinear.m", e.to_string()))?
        }
        RegimeName::Custom => {
            let phi = c
                .phi
                .as_deref()
                .ok_or_else(|| LabError::config("nonlinear.phi", "custom regime needs phi"))?;
            let sigma = c
                .sigma
                .as_deref()
                .ok_or_else(|| LabError::config("nonlinear.sigma", "custom regime needs sigma"))?;
            let q0 =
                c.q0.ok_or_else(|| LabError::config("nonlinear.q0", "custom regime needs q0"))?;
            let c_q0 = c
                .c_q0
                .ok_or_else(|| LabError::config("nonlinear.c_q0", "custom regime needs c_q0"))?;
            return NonlinearTriple::custom(
                parse_coefficient("nonlinear.phi", phi)?,
                parse_coefficient("nonlinear.sigma", sigma)?,
                nu,
                q0,
                c_q0,
            )
            .map_err(|e| LabError::config("nonlinear", e.to_string()));
        }
    };
    if let Some(c_q0) = c.c_q0 {
        triple = triple
            .with_gap_constant(c_q0)
            .map_err(|e| LabError::config("nonlinear.c_q0", e.to_string()))?;
    }
    if let Some(src) = &c.sigma {
        triple = triple
            .with_sigma(parse_coefficient("nonlinear.sigma", src)?)
            .map_err(|e| LabError::config("nonlinear.sigma", e.to_string()))?;
    }
    Ok(triple)
}

fn build_profile(p: &ProfileConfig, grid: &Grid) -> Result<DensityState, String> {
    let state = match p {
        ProfileConfig::Constant { value } => DensityState::new(vec![*value; grid.len()]),
        ProfileConfig::Sine {
            offset,
            amplitude,
            freq,
        } => {
            let (a, len) = (grid.a(), grid.width());
            let k = *freq as f64 * std::f64::consts::PI / len;
            DensityState::from_fn(grid, |x| offset + amplitude * (k * (x - a)).sin())
        }
        ProfileConfig::Values { values } => {
            if values.len() != grid.len() {
                return Err(format!("{} values for {} cells", values.len(), grid.len()));
            }
            DensityState::new(values.clone())
        }
    };
    state.map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[domain]\nN = 16\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.domain.b, 1.0);
        assert_eq!(c.solver.cfl, 0.25);
        let r = c.resolve().unwrap();
        assert_eq!(r.params.save_times.len(), 41);
        assert_eq!(r.initials.len(), 2);
        assert_eq!(r.config.solver.save_times.as_ref().unwrap().len(), 41);
    }

    #[test]
    fn missing_n_points_at_the_key() {
        let err = parse_config("[domain]\na = 0.0\n").unwrap_err();
        match &err {
            LabError::Config { key, .. } => assert_eq!(key, "domain.N"),
            other => panic!("{other:?}"),
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("[domain]\nN = 8\nbogus = 1\n").unwrap_err();
        assert!(
            matches!(&err, LabError::Config { key, .. } if key.starts_with("domain")),
            "{err:?}"
        );
        let err = parse_config("[domain]\nN = 8\n[solver]\ncfl = 0.2\nspeed = 3\n").unwrap_err();
        assert!(
            matches!(&err, LabError::Config { key, .. } if key.starts_with("solver")),
            "{err:?}"
        );
    }

    #[test]
    fn profiles_and_modes_parse() {
        let text = r#"
            [domain]
            N = 8
            [noise]
            modes = [{ kind = "constant" }, { kind = "sine", freq = 1, amplitude = 0.5 }]
            [[initial.profiles]]
            kind = "sine"
            amplitude = 2.0
            [[initial.profiles]]
            kind = "constant"
            value = 0.0
        "#;
        let r = parse_config(text).unwrap().resolve().unwrap();
        assert_eq!(r.noise.len(), 2);
        assert!(
            (r.initials[0].rho[3] - 2.0 * (3.5f64 / 8.0 * std::f64::consts::PI).sin()).abs()
                < 1e-15
        );
    }

    #[test]
    fn porous_regime_requires_m_and_checks_q0() {
        let base = "[domain]\nN = 8\n[nonlinear]\nregime = \"porous_medium\"\n";
        assert!(
            matches!(parse_config(base).unwrap().resolve(), Err(LabError::Config { key, .. }) if key == "nonlinear.m")
        );
        let bad = format!("{base}m = 2.0\nq0 = 3.0\n");
        assert!(parse_config(&bad).unwrap().resolve().is_err());
        let ok = format!("{base}m = 2.0\nq0 = 1.0\nc_q0 = 1.0\nsigma = \"xi^1.5/(1+xi)^0.5\"\n");
        let r = parse_config(&ok).unwrap().resolve().unwrap();
        assert_eq!(r.triple.q0(), 1.0);
    }

    #[test]
    fn link_constant_defaults_by_regime() {
        let r = parse_config(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(r.c_link, 0.0);
        let pm = "[domain]\nN = 8\n[nonlinear]\nregime = \"porous_medium\"\nm = 2.0\n[solver]\nbeta = 1e-12\n";
        let r = parse_config(pm).unwrap().resolve().unwrap();
        // σ = ξ, so σσ' = Ψ_σ = ξ and the link constant is 2(m − 1)/m = 1
        assert!((r.c_link - 1.0).abs() < 1e-6, "{}", r.c_link);
        assert_eq!(r.config.weight.c_link, Some(r.c_link));
        let fixed = format!("{pm}[weight]\nc_link = 3.0\n");
        assert_eq!(parse_config(&fixed).unwrap().resolve().unwrap().c_link, 3.0);
    }

    #[test]
    fn degenerate_noise_is_a_config_error() {
        let text = "[domain]\nN = 8\n[noise]\nmodes = [{ kind = \"sine\" }]\n";
        assert!(
            matches!(parse_config(text).unwrap().resolve(), Err(LabError::Config { key, .. }) if key == "noise.modes")
        );
    }

    #[test]
    fn resolved_config_round_trips() {
        let r = parse_config(MINIMAL).unwrap().resolve().unwrap();
        let text = toml::to_string(&r.config).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(again, r.config);
    }
}

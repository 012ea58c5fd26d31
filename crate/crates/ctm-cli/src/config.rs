//! Run configuration: a single TOML document holding the track list, the
//! discretization, and optional per-command sections. Unknown keys are
//! hard errors, so a typo in a tolerance fails the parse instead of
//! silently running with the default.

use anyhow::{bail, Context, Result};
use ctm_core::grid::{Grid1D, KGrid};
use ctm_core::jost::JostOptions;
use ctm_core::track::{ModelConfig, Profile, ProfileTerm, SolitonTrack};
use ctm_core::verify::SuiteOptions;
use serde::Deserialize;
use std::path::Path;

/// Parsed run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Discretization and tolerances.
    pub numerics: Numerics,
    /// Moving potentials, ordered by decreasing velocity.
    pub tracks: Vec<TrackSpec>,
    /// Separation thresholds of the track configuration.
    #[serde(default)]
    pub model: ModelSection,
    /// Scope of the verify battery.
    #[serde(default)]
    pub verify: VerifySection,
}

/// Grid sizes, time stepping, and solve tolerances.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Left end of the spatial box.
    pub x_min: f64,
    /// Right end of the spatial box.
    pub x_max: f64,
    /// Spatial node count, a power of two.
    pub n_x: usize,
    /// Half-width of the frequency band.
    pub k_max: f64,
    /// Frequency interval count, even.
    pub n_k: usize,
    /// Punctured neighborhood of k = 0 excluded from quadratures.
    #[serde(default = "default_k_floor")]
    pub k_floor: f64,
    /// Split-step size.
    pub dt: f64,
    /// Final time of evolution runs.
    pub t_final: f64,
    /// Absorbing layer at the box ends during evolution.
    #[serde(default)]
    pub sponge: bool,
    /// Maximum allowed deviation of |s|² + |r|² from 1 in scattering tables.
    #[serde(default = "default_tol_unitarity")]
    pub tol_unitarity: f64,
    /// Maximum allowed eigen-equation residual per stored column.
    #[serde(default = "default_tol_residual")]
    pub tol_residual: f64,
}

fn default_k_floor() -> f64 {
    JostOptions::default().k_floor
}

fn default_tol_unitarity() -> f64 {
    JostOptions::default().tol_unitarity
}

fn default_tol_residual() -> f64 {
    JostOptions::default().tol_residual
}

/// Separation thresholds between consecutive tracks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Minimum position gap.
    #[serde(default = "default_l_sep")]
    pub l_sep: f64,
    /// Minimum velocity gap.
    #[serde(default = "default_c_sep")]
    pub c_sep: f64,
}

fn default_l_sep() -> f64 {
    1.0
}

fn default_c_sep() -> f64 {
    0.1
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { l_sep: default_l_sep(), c_sep: default_c_sep() }
    }
}

/// One moving potential.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    /// Spectral parameter ω > 0.
    pub omega: f64,
    /// Translation velocity.
    pub v: f64,
    /// Initial position.
    pub y: f64,
    /// Initial phase.
    #[serde(default)]
    pub gamma: f64,
    /// Terms of the diagonal profile; empty means zero.
    #[serde(default)]
    pub profile_u: Vec<ProfileTermSpec>,
    /// Terms of the off-diagonal profile; empty means zero.
    #[serde(default)]
    pub profile_w: Vec<ProfileTermSpec>,
}

/// One additive profile term, selected by its `kind` key.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileTermSpec {
    /// amplitude · sech²(x / scale).
    Sech2 {
        /// Peak value at x = 0.
        amplitude: f64,
        /// Width parameter.
        scale: f64,
    },
    /// amplitude · e^{−(x/width)²}.
    Gaussian {
        /// Peak value at x = 0.
        amplitude: f64,
        /// Width parameter.
        width: f64,
    },
}

impl ProfileTermSpec {
    fn to_term(self) -> ProfileTerm {
        match self {
            ProfileTermSpec::Sech2 { amplitude, scale } => ProfileTerm::Sech2 { amplitude, scale },
            ProfileTermSpec::Gaussian { amplitude, width } => {
                ProfileTerm::Gaussian { amplitude, width }
            }
        }
    }
}

fn to_profile(terms: &[ProfileTermSpec]) -> Profile {
    Profile { terms: terms.iter().map(|t| t.to_term()).collect() }
}

/// Scope knobs of the verify battery.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Run the evolution-based sections.
    #[serde(default = "default_true")]
    pub dynamics: bool,
    /// Random band-limited inputs per potential in the inversion corpus.
    #[serde(default = "default_random_inputs")]
    pub n_random_inputs: usize,
    /// Horizon of the closeness and special-solution runs.
    #[serde(default = "default_t_close")]
    pub t_close: f64,
    /// Horizon of the dispersive-decay runs.
    #[serde(default = "default_t_decay")]
    pub t_decay: f64,
}

fn default_true() -> bool {
    true
}

fn default_random_inputs() -> usize {
    10
}

fn default_t_close() -> f64 {
    2.0
}

fn default_t_decay() -> f64 {
    80.0
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            dynamics: default_true(),
            n_random_inputs: default_random_inputs(),
            t_close: default_t_close(),
            t_decay: default_t_decay(),
        }
    }
}

impl RunConfig {
    /// Parses and validates the configuration at `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    // fail-fast checks the type system cannot express; grid and model
    // constraints are re-checked by the constructors they belong to
    fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        for (name, v) in [
            ("numerics.k_floor", n.k_floor),
            ("numerics.dt", n.dt),
            ("numerics.tol_unitarity", n.tol_unitarity),
            ("numerics.tol_residual", n.tol_residual),
            ("model.l_sep", self.model.l_sep),
            ("model.c_sep", self.model.c_sep),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bail!("{name} = {v} must be positive and finite");
            }
        }
        if self.tracks.is_empty() {
            bail!("at least one [[tracks]] entry required");
        }
        Ok(())
    }

    /// Spatial grid of the run.
    pub fn grid(&self) -> Result<Grid1D> {
        Ok(Grid1D::new(self.numerics.x_min, self.numerics.x_max, self.numerics.n_x)?)
    }

    /// Frequency grid of the run.
    pub fn kgrid(&self) -> Result<KGrid> {
        Ok(KGrid::new(self.numerics.k_max, self.numerics.n_k)?)
    }

    /// Track configuration, validated against the grid.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let tracks = self
            .tracks
            .iter()
            .map(|t| SolitonTrack {
                omega: t.omega,
                v: t.v,
                y: t.y,
                gamma: t.gamma,
                profile_u: to_profile(&t.profile_u),
                profile_w: to_profile(&t.profile_w),
            })
            .collect();
        let config = ModelConfig {
            tracks,
            l_sep: self.model.l_sep,
            c_sep: self.model.c_sep,
            t_final: self.numerics.t_final,
            dt: self.numerics.dt,
        };
        config.validate(&self.grid()?)?;
        Ok(config)
    }

    /// Scattering-solve options from the tolerance block.
    pub fn jost_options(&self) -> JostOptions {
        JostOptions {
            k_floor: self.numerics.k_floor,
            tol_unitarity: self.numerics.tol_unitarity,
            tol_residual: self.numerics.tol_residual,
            ..JostOptions::default()
        }
    }

    /// Verify-battery options at the configured resolution.
    pub fn suite_options(&self, seed: u64) -> Result<SuiteOptions> {
        // the battery sizes its own stable steps per run, so the evolve
        // step of the numerics block is not forced on it
        let mut opts = SuiteOptions::new(self.grid()?, self.kgrid()?);
        opts.seed = seed;
        opts.dynamics = self.verify.dynamics;
        opts.n_random_inputs = self.verify.n_random_inputs;
        opts.t_close = self.verify.t_close;
        opts.t_decay = self.verify.t_decay;
        Ok(opts)
    }
}

//! Soliton tracks: potential profiles, moving-frame parameters, the matrix
//! potential they generate, and the Galilei boost that conjugates between
//! the moving and the stationary frame.

use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::grid::Grid1D;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One even, exponentially decaying term of a potential profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileTerm {
    /// amplitude · sech²(x / scale).
    Sech2 {
        /// Peak value at x = 0.
        amplitude: f64,
        /// Width parameter; the term decays like e^{−2|x|/scale}.
        scale: f64,
    },
    /// amplitude · e^{−(x/width)²}.
    Gaussian {
        /// Peak value at x = 0.
        amplitude: f64,
        /// Width parameter of the squared exponential.
        width: f64,
    },
}

impl ProfileTerm {
    /// Evaluates the term at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ProfileTerm::Sech2 { amplitude, scale } => {
                let c = (x / scale).cosh();
                amplitude / (c * c)
            }
            ProfileTerm::Gaussian { amplitude, width } => {
                let z = x / width;
                amplitude * (-z * z).exp()
            }
        }
    }

    /// Exponential decay rate γ of the envelope e^{−γ|x|}.
    ///
    /// Gaussians decay faster than any exponential; their reported rate is
    /// the sech² rate they dominate from |x| = width on, a safe lower bound.
    pub fn decay_rate(&self) -> f64 {
        match *self {
            ProfileTerm::Sech2 { scale, .. } => 2.0 / scale.abs(),
            ProfileTerm::Gaussian { width, .. } => 2.0 / width.abs(),
        }
    }

    /// True when the amplitude vanishes.
    pub fn is_zero(&self) -> bool {
        match *self {
            ProfileTerm::Sech2 { amplitude, .. } => amplitude == 0.0,
            ProfileTerm::Gaussian { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Even real potential profile, a sum of [`ProfileTerm`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Profile {
    /// Additive terms of the profile.
    pub terms: Vec<ProfileTerm>,
}

impl Profile {
    /// Profile with no terms, identically zero.
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// Single sech² profile.
    pub fn sech2(amplitude: f64, scale: f64) -> Self {
        Self { terms: vec![ProfileTerm::Sech2 { amplitude, scale }] }
    }

    /// Single Gaussian profile.
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self { terms: vec![ProfileTerm::Gaussian { amplitude, width }] }
    }

    /// Evaluates the profile at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// True when every term vanishes.
    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.is_zero())
    }

    /// Slowest envelope decay rate over the terms; infinite for an empty
    /// profile.
    pub fn decay_rate(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.is_zero())
            .map(|t| t.decay_rate())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute value over the grid nodes, centered at 0.
    pub fn max_abs(&self, grid: &Grid1D) -> f64 {
        (0..grid.n_x)
            .map(|j| self.eval(grid.node(j)).abs())
            .fold(0.0, f64::max)
    }

    /// Half-width X such that |profile(x)| < `tail` for |x| ≥ X, found by
    /// scanning outward on the grid spacing.
    pub fn support_half_width(&self, grid: &Grid1D, tail: f64) -> f64 {
        let mut x = grid.len_x() / 2.0 - grid.h;
        while x > grid.h {
            if self.eval(x).abs() >= tail || self.eval(-x).abs() >= tail {
                return x + grid.h;
            }
            x -= grid.h;
        }
        grid.h
    }
}

/// Parameters of one moving potential: spectral parameter, velocity,
/// initial position, initial phase, and the two even profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonTrack {
    /// Spectral parameter ω > 0 of the stationary operator.
    pub omega: f64,
    /// Translation velocity.
    pub v: f64,
    /// Initial position.
    pub y: f64,
    /// Initial phase (radians).
    pub gamma: f64,
    /// Diagonal profile U.
    pub profile_u: Profile,
    /// Off-diagonal profile W.
    pub profile_w: Profile,
}

impl SolitonTrack {
    /// Stationary track centered at the origin with zero phase.
    pub fn stationary(omega: f64, profile_u: Profile, profile_w: Profile) -> Self {
        Self { omega, v: 0.0, y: 0.0, gamma: 0.0, profile_u, profile_w }
    }

    /// Moving-frame phase θ(t, x) = v·x/2 − v²t/4 + ω·t + γ.
    pub fn theta(&self, t: f64, x: f64) -> f64 {
        0.5 * self.v * x - 0.25 * self.v * self.v * t + self.omega * t + self.gamma
    }

    /// Validates positivity of ω, evenness, and exponential decay of the
    /// profiles on the grid.
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::ConfigError(format!("omega = {} must be positive", self.omega)));
        }
        let rate = self.profile_u.decay_rate().min(self.profile_w.decay_rate());
        if rate <= 0.0 {
            return Err(Error::ConfigError("profile decay rate must be positive".into()));
        }
        // evenness and the exponential envelope, checked nodewise on the
        // symmetric part of the box
        let half = grid.len_x() / 2.0 - grid.h;
        let peak = self.profile_u.max_abs(grid).max(self.profile_w.max_abs(grid)).max(1e-300);
        let envelope_rate = rate.min(40.0 / half);
        let mut x = 0.0;
        while x < half {
            for p in [&self.profile_u, &self.profile_w] {
                if (p.eval(x) - p.eval(-x)).abs() > 1e-12 * peak {
                    return Err(Error::ConfigError("profile is not even".into()));
                }
                // generous constant: the envelope only has to witness decay
                if p.eval(x).abs() > 1e3 * peak * (-envelope_rate * x).exp() {
                    return Err(Error::ConfigError(format!(
                        "profile violates the exponential envelope at x = {x}"
                    )));
                }
            }
            x += 16.0 * grid.h;
        }
        Ok(())
    }
}

/// Evaluates the moving matrix potential of one track at time `t` on the
/// grid: [[U, −e^{2iθ}W], [e^{−2iθ}W, −U]] with the profiles shifted to
/// x − v·t − y. Trace-free at every node.
pub fn moving_potential_eval(track: &SolitonTrack, t: f64, grid: &Grid1D) -> Vec<[[Complex64; 2]; 2]> {
    (0..grid.n_x)
        .map(|j| {
            let x = grid.node(j);
            let z = x - track.v * t - track.y;
            let u = track.profile_u.eval(z);
            let w = track.profile_w.eval(z);
            let phase = Complex64::from_polar(1.0, 2.0 * track.theta(t, x));
            [
                [Complex64::new(u, 0.0), -phase * w],
                [phase.conj() * w, Complex64::new(-u, 0.0)],
            ]
        })
        .collect()
}

/// Galilei boost: returns e^{iσ₃(v·x/2 − t·v²/4 + γ + ω·t)} g(x − v·t − y),
/// with the shift band-limited and the phase applied nodewise.
pub fn galilei_apply(track: &SolitonTrack, g: &SpinorField, t: f64) -> SpinorField {
    let mut out = g.shift(track.v * t + track.y);
    out.map_in_place(|j, v| {
        let x = out_phase(track, t, g.grid.node(j));
        v[0] *= x;
        v[1] *= x.conj();
    });
    out
}

// scalar phase of the upper component of the boost
fn out_phase(track: &SolitonTrack, t: f64, x: f64) -> Complex64 {
    Complex64::from_polar(1.0, track.theta(t, x))
}

/// Ordered multi-track configuration with separation thresholds and run
/// horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Tracks sorted strictly by decreasing velocity and decreasing
    /// position.
    pub tracks: Vec<SolitonTrack>,
    /// Minimum required position gap between consecutive tracks.
    pub l_sep: f64,
    /// Minimum required velocity gap between consecutive tracks.
    pub c_sep: f64,
    /// Final time of the run.
    pub t_final: f64,
    /// Time step of the evolution.
    pub dt: f64,
}

impl ModelConfig {
    /// Validates ordering, separation gaps, per-track hypotheses, and box
    /// coverage over the run.
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if self.tracks.is_empty() {
            return Err(Error::ConfigError("at least one track required".into()));
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(Error::ConfigError("dt must be positive and t_final nonnegative".into()));
        }
        for t in &self.tracks {
            t.validate(grid)?;
        }
        for pair in self.tracks.windows(2) {
            let dv = pair[0].v - pair[1].v;
            let dy = pair[0].y - pair[1].y;
            if dv <= 0.0 || dy <= 0.0 {
                return Err(Error::ConfigError(
                    "tracks must be strictly ordered by decreasing velocity and position".into(),
                ));
            }
            if dv < self.c_sep || dy < self.l_sep {
                return Err(Error::ConfigError(format!(
                    "separation gaps dv = {dv}, dy = {dy} below thresholds \
                     c_sep = {}, l_sep = {}",
                    self.c_sep, self.l_sep
                )));
            }
        }
        let positions: Vec<(f64, f64)> = self.tracks.iter().map(|t| (t.y, t.v)).collect();
        grid.assert_box_covers(&positions, self.t_final, BOX_MARGIN)?;
        Ok(())
    }

    /// Minimum position gap over consecutive tracks (infinite for one track).
    pub fn min_dy(&self) -> f64 {
        self.tracks
            .windows(2)
            .map(|p| p[0].y - p[1].y)
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum velocity gap over consecutive tracks (infinite for one track).
    pub fn min_dv(&self) -> f64 {
        self.tracks
            .windows(2)
            .map(|p| p[0].v - p[1].v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance the potential supports must keep from the periodic boundary
/// throughout a run, in length units. Chosen so an e^{−|x|} envelope is
/// below 2e−9 at the boundary.
pub const BOX_MARGIN: f64 = 20.0;

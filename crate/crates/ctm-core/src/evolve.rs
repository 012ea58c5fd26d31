//! Time evolution of the matrix charge-transfer model.
//!
//! The full propagator is realized by Strang splitting: a half kinetic
//! step applied spectrally, an exact pointwise exponential of the summed
//! trace-free potential matrix evaluated at the step midpoint, and a
//! second half kinetic step. The splitting is second order in the step
//! size and exactly norm-preserving in the kinetic part.
//!
//! On top of the propagator the module builds the two families of special
//! solutions: the scattering solution tracking the free-evolution
//! approximant S(t)φ, and the Galilei-boosted discrete-mode solutions
//! (eigenmodes with their e^{−iλt} factor and the t-linear Jordan
//! combination). Both report the measured deviation from the predicted
//! leading term. A driven-remainder solver accumulates Duhamel sources
//! over the split steps and certifies exponential-weight bounds.

use crate::dft::forward_ghat;
use crate::error::{Error, Result};
use crate::fftutil::{bin_wavenumber, fft_forward, fft_inverse};
use crate::field::{sigma3_pairing, FrequencyPair, SpinorField};
use crate::freeflow::{defect_of_s, eval_s, ProfileFamily};
use crate::grid::Grid1D;
use crate::jost::ScatteringData;
use crate::track::{galilei_apply, moving_potential_eval, ModelConfig, SolitonTrack};
use num_complex::Complex64;

/// Fraction of each box end covered by the absorbing layer.
const SPONGE_FRACTION: f64 = 0.1;

/// Peak absorption rate of the sponge layer.
const SPONGE_STRENGTH: f64 = 5.0;

/// Allowed relative growth of the L² norm before a run is declared
/// unstable.
const STABILITY_SLACK: f64 = 0.1;

/// Step-size controls and boundary treatment for a propagator run.
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Split-step size.
    pub dt: f64,
    /// Absorbing layer at the box ends. Enabled for decay-measurement
    /// runs where outgoing radiation must not wrap around; disabled for
    /// identity checks that rely on the kinetic step being exactly
    /// unitary.
    pub sponge: bool,
    /// Skip the L² stability guard. Only discrete-mode runs with genuinely
    /// growing modes (imaginary eigenvalues) set this.
    pub allow_growth: bool,
}

impl EvolveOptions {
    /// Conservative defaults: no sponge, stability guard on.
    pub fn with_dt(dt: f64) -> Self {
        EvolveOptions { dt, sponge: false, allow_growth: false }
    }
}

/// One logged snapshot of a run.
#[derive(Debug, Clone, Copy)]
pub struct StepLog {
    /// Time of the snapshot.
    pub t: f64,
    /// L² norm at that time.
    pub l2: f64,
    /// Pointwise maximum over components at that time.
    pub linf: f64,
    /// H¹ norm at that time.
    pub h1: f64,
}

/// A propagated field with its step log.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    /// Final time of the run.
    pub t: f64,
    /// Field at the final time.
    pub field: SpinorField,
    /// Track configuration the run used.
    pub config: ModelConfig,
    /// Norm snapshots, one per logged step.
    pub log: Vec<StepLog>,
}

/// Largest admissible step for the splitting on this grid and potential:
/// the step must resolve both the fastest kinetic phase k_nyq²·dt/2 and
/// the potential rotation ‖V‖·dt.
pub fn cfl_bound(grid: &Grid1D, config: &ModelConfig) -> f64 {
    let k_nyq = std::f64::consts::PI / grid.h;
    let vmax = config
        .tracks
        .iter()
        .map(|tr| tr.profile_u.max_abs(grid) + tr.profile_w.max_abs(grid))
        .fold(0.0f64, f64::max);
    0.5 / (k_nyq * k_nyq / 2.0).max(vmax).max(1e-12)
}

// smooth absorption profile: zero on the inner 80% of the box, rising to
// the peak rate over the outer tenth at each end
fn sponge_profile(grid: &Grid1D) -> Vec<f64> {
    let half = 0.5 * (grid.x_max - grid.x_min);
    let center = 0.5 * (grid.x_max + grid.x_min);
    let start = (1.0 - SPONGE_FRACTION) * half;
    (0..grid.n_x)
        .map(|j| {
            let d = (grid.node(j) - center).abs();
            if d <= start {
                0.0
            } else {
                let s = ((d - start) / (half - start)).min(1.0);
                SPONGE_STRENGTH * s * s
            }
        })
        .collect()
}

// half kinetic step: component 1 gains e^{−ik²dt/2}, component 2 the
// conjugate phase, applied in the periodic Fourier basis
fn kinetic_half(field: &mut SpinorField, dt: f64) {
    let n = field.grid.n_x;
    let len = field.grid.x_max - field.grid.x_min;
    let mut buf0: Vec<Complex64> = field.values.iter().map(|v| v[0]).collect();
    let mut buf1: Vec<Complex64> = field.values.iter().map(|v| v[1]).collect();
    fft_forward(&mut buf0);
    fft_forward(&mut buf1);
    for j in 0..n {
        let k = bin_wavenumber(j, n, len);
        let ph = Complex64::from_polar(1.0, -k * k * dt / 2.0);
        buf0[j] *= ph;
        buf1[j] *= ph.conj();
    }
    fft_inverse(&mut buf0);
    fft_inverse(&mut buf1);
    for j in 0..n {
        field.values[j] = [buf0[j], buf1[j]];
    }
}

// full potential step: pointwise ψ ← e^{−i·dt·M(t_mid, x)}ψ with M the
// summed potential matrix; M is trace-free, so with μ² = −det(−i·dt·M)
// the exponential is cosh(μ)·Id + sinh(μ)/μ·(−i·dt·M) in closed form
fn potential_full(field: &mut SpinorField, config: &ModelConfig, t_mid: f64, dt: f64) {
    let grid = field.grid;
    let mut m: Vec<[[Complex64; 2]; 2]> = vec![[[Complex64::default(); 2]; 2]; grid.n_x];
    for tr in &config.tracks {
        let part = moving_potential_eval(tr, t_mid, &grid);
        for j in 0..grid.n_x {
            for a in 0..2 {
                for b in 0..2 {
                    m[j][a][b] += part[j][a][b];
                }
            }
        }
    }
    let idt = Complex64::new(0.0, -dt);
    for j in 0..grid.n_x {
        let a = [[idt * m[j][0][0], idt * m[j][0][1]], [idt * m[j][1][0], idt * m[j][1][1]]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let mu = (-det).sqrt();
        let (ch, sh_over_mu) = if mu.norm() < 1e-8 {
            // series fallback where μ ≈ 0: cosh ≈ 1 + μ²/2, sinh(μ)/μ ≈ 1
            (Complex64::new(1.0, 0.0) + 0.5 * mu * mu, Complex64::new(1.0, 0.0))
        } else {
            (mu.cosh(), mu.sinh() / mu)
        };
        let e = [
            [ch + sh_over_mu * a[0][0], sh_over_mu * a[0][1]],
            [sh_over_mu * a[1][0], ch + sh_over_mu * a[1][1]],
        ];
        let v = field.values[j];
        field.values[j] = [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]];
    }
}

// one full Strang step from `t` over `dt`
fn strang_step(field: &mut SpinorField, config: &ModelConfig, t: f64, dt: f64, sponge: Option<&[f64]>) {
    kinetic_half(field, dt);
    potential_full(field, config, t + dt / 2.0, dt);
    kinetic_half(field, dt);
    if let Some(sp) = sponge {
        for j in 0..field.grid.n_x {
            if sp[j] != 0.0 {
                let damp = (-sp[j] * dt).exp();
                field.values[j][0] *= damp;
                field.values[j][1] *= damp;
            }
        }
    }
}

/// Propagates `psi0` from time `tau` to time `t` by Strang splitting,
/// returning the full run state with norm snapshots.
///
/// Fails with [`Error::CflViolation`] when the requested step exceeds the
/// resolution bound, and with [`Error::UnstableRun`] when the L² norm
/// grows more than 10% above its initial value (the flow is bounded but
/// not unitary; larger growth on scattering data signals instability).
pub fn evolve_u(
    psi0: &SpinorField,
    tau: f64,
    t: f64,
    config: &ModelConfig,
    opts: &EvolveOptions,
) -> Result<EvolutionState> {
    if t < tau {
        return Err(Error::ConfigError(format!("backward run requested: {t} < {tau}")));
    }
    let bound = cfl_bound(&psi0.grid, config);
    if opts.dt > bound {
        return Err(Error::CflViolation { dt: opts.dt, bound });
    }
    let sponge = if opts.sponge { Some(sponge_profile(&psi0.grid)) } else { None };
    let n_steps = ((t - tau) / opts.dt).ceil().max(0.0) as usize;
    let dt = if n_steps > 0 { (t - tau) / n_steps as f64 } else { opts.dt };
    let mut field = psi0.clone();
    let l2_init = field.l2_norm().max(f64::MIN_POSITIVE);
    let mut log = Vec::with_capacity(n_steps + 1);
    log.push(StepLog { t: tau, l2: l2_init, linf: field.linf_norm(), h1: field.h1_norm() });
    for step in 0..n_steps {
        let t_now = tau + step as f64 * dt;
        strang_step(&mut field, config, t_now, dt, sponge.as_deref());
        let l2 = field.l2_norm();
        log.push(StepLog {
            t: t_now + dt,
            l2,
            linf: field.linf_norm(),
            h1: field.h1_norm(),
        });
        if !opts.allow_growth && l2 > (1.0 + STABILITY_SLACK) * l2_init {
            return Err(Error::UnstableRun { ratio: l2 / l2_init, t: t_now + dt });
        }
        if !field.is_finite() {
            return Err(Error::UnstableRun { ratio: f64::INFINITY, t: t_now + dt });
        }
    }
    Ok(EvolutionState { t, field, config: config.clone(), log })
}

/// Exact single-potential flow in the stationary frame:
/// Ĝ_ω(e^{−it(k²+ω)σ₃}u). Composes with [`galilei_apply`] for a moving
/// potential.
pub fn single_potential_flow(u: &FrequencyPair, data: &ScatteringData, t: f64) -> SpinorField {
    let arg = FrequencyPair::from_fn(u.kgrid, |k| {
        let j = ((k + u.kgrid.k_max) / u.kgrid.dk).round() as usize;
        let ph = Complex64::from_polar(1.0, -t * (k * k + data.omega));
        [ph * u.values[j][0], ph.conj() * u.values[j][1]]
    });
    forward_ghat(&arg, data)
}

/// Deviation report of a special-solution run against its predicted
/// leading term.
#[derive(Debug, Clone)]
pub struct TrajectoryReport {
    /// Sample times.
    pub times: Vec<f64>,
    /// Norm of (run − prediction) at each sample time; H¹ for scattering
    /// runs, L² for discrete-mode runs.
    pub deviation: Vec<f64>,
    /// Exponential rate fitted to the deviations by least squares on the
    /// log, negative slope reported as positive decay. Zero when fewer
    /// than two positive samples exist.
    pub beta_fit: f64,
}

fn fit_decay_rate(times: &[f64], dev: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(dev)
        .filter(|(_, d)| **d > 0.0)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return 0.0;
    }
    -(n * sxy - sx * sy) / denom
}

/// Number of source samples used when accumulating the initial-datum
/// correction of [`build_t`].
const CORRECTION_SAMPLES: usize = 32;

/// Relative size below which the initial-datum correction is dropped: a
/// correction at the quadrature noise floor only adds noise to the run.
pub(crate) const CORRECTION_FLOOR_REL: f64 = 1e-5;

/// Builds the scattering solution tracking S(t)φ and reports its H¹
/// deviation per sample time.
///
/// The initial datum is S(0)φ plus a correction r(0) accumulated by a
/// free backward Duhamel pass over the equation defect of S: the exact
/// scattering solution differs from S by exactly the forward-propagated
/// defect, so subtracting its free accumulation at t = 0 starts the run
/// on the exact solution up to interaction tails. The reported deviation
/// ‖ψ(t) − S(t)φ‖_{H¹} must then decay exponentially in t.
pub fn build_t(
    family: &ProfileFamily,
    data: &[ScatteringData],
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<(EvolutionState, TrajectoryReport)> {
    let config = &family.config;
    let t_final = *t_grid.last().ok_or_else(|| Error::ConfigError("empty time grid".into()))?;
    // backward free accumulation of the defect: r(0) = −i·Σ w_j U₀(−t_j) f(t_j)
    let grid = data[0].grid;
    let mut r0 = SpinorField::zeros(grid);
    let dt_src = t_final / CORRECTION_SAMPLES as f64;
    for j in 0..=CORRECTION_SAMPLES {
        let tj = j as f64 * dt_src;
        let f = defect_of_s(family, data, tj)?;
        let back = free_flow(&f, -tj);
        let w = if j == 0 || j == CORRECTION_SAMPLES { 0.5 } else { 1.0 };
        // r(0) = −i ∫ U(0,s) f(s) ds makes the corrected run land on the
        // exact solution that converges to S
        r0.add_scaled(Complex64::new(0.0, -w * dt_src), &back);
    }
    let mut psi = eval_s(family, data, 0.0)?;
    if r0.h1_norm() > CORRECTION_FLOOR_REL * psi.h1_norm() {
        psi.add_scaled(Complex64::new(1.0, 0.0), &r0);
    }
    let mut times = Vec::with_capacity(t_grid.len());
    let mut deviation = Vec::with_capacity(t_grid.len());
    let mut state = EvolutionState {
        t: 0.0,
        field: psi,
        config: config.clone(),
        log: Vec::new(),
    };
    let mut t_prev = 0.0;
    for &t in t_grid {
        if t > t_prev {
            let next = evolve_u(&state.field, t_prev, t, config, opts)?;
            state.log.extend_from_slice(&next.log);
            state.field = next.field;
            state.t = t;
            t_prev = t;
        }
        let s_t = eval_s(family, data, t)?;
        deviation.push(state.field.sub(&s_t).h1_norm());
        times.push(t);
    }
    let beta_fit = fit_decay_rate(&times, &deviation);
    Ok((state, TrajectoryReport { times, deviation, beta_fit }))
}

// exact free flow e^{it·σ₃∂²} in the periodic Fourier basis; negative t
// runs backward
fn free_flow(f: &SpinorField, t: f64) -> SpinorField {
    let n = f.grid.n_x;
    let len = f.grid.x_max - f.grid.x_min;
    let mut buf0: Vec<Complex64> = f.values.iter().map(|v| v[0]).collect();
    let mut buf1: Vec<Complex64> = f.values.iter().map(|v| v[1]).collect();
    fft_forward(&mut buf0);
    fft_forward(&mut buf1);
    for j in 0..n {
        let k = bin_wavenumber(j, n, len);
        let ph = Complex64::from_polar(1.0, -k * k * t);
        buf0[j] *= ph;
        buf1[j] *= ph.conj();
    }
    fft_inverse(&mut buf0);
    fft_inverse(&mut buf1);
    let values = (0..n).map(|j| [buf0[j], buf1[j]]).collect();
    SpinorField { grid: f.grid, values }
}

/// The mode content a discrete-mode run predicts and compares against.
#[derive(Debug, Clone)]
pub enum DiscreteMode {
    /// Eigenvector with its eigenvalue; the predicted solution is
    /// e^{−iλt} times the Galilei-boosted vector.
    Eigen {
        /// Eigenvalue λ.
        lambda: Complex64,
        /// Eigenvector in the stationary frame.
        vector: SpinorField,
    },
    /// Jordan pair at the zero eigenvalue with H z1 = i z0; the predicted
    /// solution is the boosted z1 plus t times the boosted z0.
    Jordan {
        /// Kernel vector.
        z0: SpinorField,
        /// Generalized vector.
        z1: SpinorField,
    },
}

impl DiscreteMode {
    /// Predicted leading term of the solution at time `t` on the given
    /// track.
    pub fn predict(&self, track: &SolitonTrack, t: f64) -> SpinorField {
        match self {
            DiscreteMode::Eigen { lambda, vector } => {
                let mut p = galilei_apply(track, vector, t);
                let amp = (Complex64::new(0.0, -1.0) * lambda * t).exp();
                p.scale(amp);
                p
            }
            DiscreteMode::Jordan { z0, z1 } => {
                let mut p = galilei_apply(track, z1, t);
                p.add_scaled(Complex64::new(t, 0.0), &galilei_apply(track, z0, t));
                p
            }
        }
    }

    /// |e^{−iλt}|, the predicted amplitude factor; 1 for Jordan modes.
    fn amplitude(&self, t: f64) -> f64 {
        match self {
            DiscreteMode::Eigen { lambda, .. } => (lambda.im * t).exp(),
            DiscreteMode::Jordan { .. } => 1.0,
        }
    }
}

/// Evolves the Galilei-boosted discrete mode of track `track_index` under
/// the full multi-potential flow and reports ‖ψ(t) − predicted‖_{L²} per
/// sample, normalized by the predicted amplitude |e^{−iλt}| so growing or
/// decaying modes are compared on equal footing.
pub fn discrete_solution(
    track_index: usize,
    mode: &DiscreteMode,
    config: &ModelConfig,
    grid: &Grid1D,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<(EvolutionState, TrajectoryReport)> {
    let track = config
        .tracks
        .get(track_index)
        .ok_or_else(|| Error::ConfigError(format!("no track {track_index}")))?;
    let psi0 = mode.predict(track, 0.0);
    if psi0.grid != *grid {
        return Err(Error::ConfigError("mode grid mismatch".into()));
    }
    let mut run_opts = *opts;
    run_opts.allow_growth = true;
    let mut state = EvolutionState {
        t: 0.0,
        field: psi0,
        config: config.clone(),
        log: Vec::new(),
    };
    let mut times = Vec::with_capacity(t_grid.len());
    let mut deviation = Vec::with_capacity(t_grid.len());
    let mut t_prev = 0.0;
    for &t in t_grid {
        if t > t_prev {
            let next = evolve_u(&state.field, t_prev, t, config, &run_opts)?;
            state.log.extend_from_slice(&next.log);
            state.field = next.field;
            state.t = t;
            t_prev = t;
        }
        let pred = mode.predict(track, t);
        let dev = state.field.sub(&pred).l2_norm() / mode.amplitude(t).max(f64::MIN_POSITIVE);
        deviation.push(dev);
        times.push(t);
    }
    let beta_fit = fit_decay_rate(&times, &deviation);
    Ok((state, TrajectoryReport { times, deviation, beta_fit }))
}

/// A driven-remainder run: the remainder trajectory and its weighted
/// supremum report.
#[derive(Debug, Clone)]
pub struct RemainderRun {
    /// Sample times.
    pub times: Vec<f64>,
    /// Remainder field at each sample time.
    pub fields: Vec<SpinorField>,
    /// H¹ norm of the remainder at each sample time.
    pub h1: Vec<f64>,
    /// sup over samples of e^{β₁t}·‖r(t)‖_{H¹} at the reporting weight β₁.
    pub weighted_sup: f64,
    /// sup over samples of e^{βt}·‖f(t)‖_{H¹} of the source.
    pub source_weighted_sup: f64,
}

/// Solves the driven equation i∂ₜr + σ₃∂²ₓr − ΣV^{σ_ℓ}r = f(t) with
/// r(0) = r0 by accumulating the Duhamel source inside the split steps
/// (a −i·dt·f(t_mid) kick at each step midpoint).
///
/// `beta` is the decay weight the source is certified at; the remainder
/// is reported at the weight `beta1` (at most `beta`). Fails with
/// [`Error::NoDecay`] when the weighted remainder grows beyond 10× its
/// value over the first sample interval, which signals contamination by
/// an unprojected growing mode.
pub fn driven_remainder(
    source: &dyn Fn(f64) -> SpinorField,
    r0: &SpinorField,
    config: &ModelConfig,
    t_grid: &[f64],
    beta: f64,
    beta1: f64,
    opts: &EvolveOptions,
) -> Result<RemainderRun> {
    let t_final = *t_grid.last().ok_or_else(|| Error::ConfigError("empty time grid".into()))?;
    let bound = cfl_bound(&r0.grid, config);
    if opts.dt > bound {
        return Err(Error::CflViolation { dt: opts.dt, bound });
    }
    let n_steps = (t_final / opts.dt).ceil().max(1.0) as usize;
    let dt = t_final / n_steps as f64;
    let sponge = if opts.sponge { Some(sponge_profile(&r0.grid)) } else { None };
    let mut field = r0.clone();
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let mut h1 = Vec::new();
    let mut weighted_sup = 0.0f64;
    let mut source_weighted_sup = 0.0f64;
    let mut first_weight: Option<f64> = None;
    let mut next_sample = 0usize;
    let record =
        |t: f64, field: &SpinorField, times: &mut Vec<f64>, fields: &mut Vec<SpinorField>, h1: &mut Vec<f64>| {
            times.push(t);
            fields.push(field.clone());
            h1.push(field.h1_norm());
        };
    while next_sample < t_grid.len() && t_grid[next_sample] <= 0.0 {
        record(0.0, &field, &mut times, &mut fields, &mut h1);
        next_sample += 1;
    }
    for step in 0..n_steps {
        let t_now = step as f64 * dt;
        let t_mid = t_now + dt / 2.0;
        // Strang with the source kick at the midpoint keeps second order
        kinetic_half(&mut field, dt);
        potential_full(&mut field, config, t_mid, dt);
        let f_mid = source(t_mid);
        field.add_scaled(Complex64::new(0.0, -dt), &f_mid);
        kinetic_half(&mut field, dt);
        if let Some(sp) = &sponge {
            for j in 0..field.grid.n_x {
                if sp[j] != 0.0 {
                    let damp = (-sp[j] * dt).exp();
                    field.values[j][0] *= damp;
                    field.values[j][1] *= damp;
                }
            }
        }
        let t_next = t_now + dt;
        source_weighted_sup = source_weighted_sup.max((beta * t_mid).exp() * f_mid.h1_norm());
        let w = (beta1 * t_next).exp() * field.h1_norm();
        weighted_sup = weighted_sup.max(w);
        // a weighted remainder far above both its starting level and the
        // weighted source scale signals an unprojected growing mode
        let fw = *first_weight.get_or_insert(w.max(f64::MIN_POSITIVE));
        let scale = fw + source_weighted_sup;
        if w > 10.0 * scale {
            return Err(Error::NoDecay { ratio: w / scale });
        }
        while next_sample < t_grid.len() && t_grid[next_sample] <= t_next + 1e-12 {
            record(t_grid[next_sample], &field, &mut times, &mut fields, &mut h1);
            next_sample += 1;
        }
    }
    Ok(RemainderRun { times, fields, h1, weighted_sup, source_weighted_sup })
}

/// Chooses the initial remainder datum that zeroes the σ₃-pairings of the
/// run against the given boosted modes at the final time, by solving the
/// small Gram system in the mode span.
///
/// Returns the corrected r(0). With no modes this is `r0` unchanged.
pub fn project_out_modes(
    r0: &SpinorField,
    source: &dyn Fn(f64) -> SpinorField,
    modes: &[(usize, DiscreteMode)],
    config: &ModelConfig,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<SpinorField> {
    if modes.is_empty() {
        return Ok(r0.clone());
    }
    let t_grid = [t_final];
    // pairings of the uncorrected run at t_final
    let base = driven_remainder(source, r0, config, &t_grid, 0.0, 0.0, opts)?;
    let r_final = &base.fields[0];
    let boosted_final: Vec<SpinorField> = modes
        .iter()
        .map(|(idx, m)| m.predict(&config.tracks[*idx], t_final))
        .collect();
    let p: Vec<Complex64> =
        boosted_final.iter().map(|b| sigma3_pairing(r_final, b)).collect();
    // response of each mode direction: evolve the boosted mode itself
    let n = modes.len();
    let mut gram = vec![vec![Complex64::default(); n]; n];
    let zero_source = |_t: f64| SpinorField::zeros(r0.grid);
    for (i, (idx, m)) in modes.iter().enumerate() {
        let m0 = m.predict(&config.tracks[*idx], 0.0);
        let run = driven_remainder(&zero_source, &m0, config, &t_grid, 0.0, 0.0, opts)?;
        for (j, b) in boosted_final.iter().enumerate() {
            gram[j][i] = sigma3_pairing(&run.fields[0], b);
        }
    }
    let coeffs = solve_small_system(&gram, &p)?;
    let mut corrected = r0.clone();
    for (c, (idx, m)) in coeffs.iter().zip(modes) {
        corrected.add_scaled(-c, &m.predict(&config.tracks[*idx], 0.0));
    }
    Ok(corrected)
}

// dense Gaussian elimination with partial pivoting for the mode-pairing
// system; the systems here are tiny (one row per tracked mode)
pub(crate) fn solve_small_system(a: &[Vec<Complex64>], b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = b.len();
    let mut m: Vec<Vec<Complex64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        if m[piv][col].norm() < 1e-12 {
            return Err(Error::GramSingular { cond: f64::INFINITY });
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let upper = m[col][k];
                m[row][k] -= f * upper;
            }
            let upper_rhs = rhs[col];
            rhs[row] -= f * upper_rhs;
        }
    }
    let mut x = vec![Complex64::default(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::forward_ghat;
    use crate::field::FrequencyPair;
    use crate::freeflow::recurse_profiles;
    use crate::grid::KGrid;
    use crate::jost::{solve_scattering, JostOptions};
    use crate::spectrum::{discrete_eigens_with, SpectrumOptions};
    use crate::track::Profile;
    use once_cell::sync::Lazy;

    fn grid() -> Grid1D {
        Grid1D::new(-60.0, 60.0, 1024).unwrap()
    }

    fn kgrid() -> KGrid {
        KGrid::new(16.0, 512).unwrap()
    }

    /// Step below the resolution bound of the shared grid.
    const DT: f64 = 1.2e-3;

    fn track(v: f64, y: f64, u: Profile, w: Profile) -> SolitonTrack {
        SolitonTrack { omega: 1.0, v, y, gamma: 0.0, profile_u: u, profile_w: w }
    }

    fn config(tracks: Vec<SolitonTrack>, t_final: f64) -> ModelConfig {
        ModelConfig { tracks, l_sep: 1.0, c_sep: 0.1, t_final, dt: DT }
    }

    fn free_config() -> ModelConfig {
        config(vec![track(0.0, 0.0, Profile::zero(), Profile::zero())], 4.0)
    }

    static RLESS: Lazy<ScatteringData> = Lazy::new(|| {
        let tr = track(0.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero());
        solve_scattering(&tr, &grid(), &kgrid(), &JostOptions::default()).unwrap()
    });

    fn notch(k: f64, c: f64) -> f64 {
        (1.0 - (-(k - c) * (k - c)).exp()).powi(8)
    }

    /// Band-limited profile away from the excluded band, group velocity
    /// about 4.
    fn packet() -> FrequencyPair {
        FrequencyPair::from_fn(kgrid(), |k| {
            let env = notch(k, 0.0) * (-(k - 2.0) * (k - 2.0)).exp();
            let ph = Complex64::from_polar(1.0, 0.4 * k);
            [ph * env, 0.3 * ph.conj() * env]
        })
    }

    /// The free flow of a unit Gaussian first component has peak height
    /// (1 + 4t²)^{−1/4} in closed form.
    #[test]
    fn free_gaussian_dispersion() {
        let g = grid();
        let psi0 = SpinorField::from_fn(g, |x| {
            [Complex64::new((-x * x / 2.0).exp(), 0.0), Complex64::default()]
        });
        let cfg = free_config();
        let opts = EvolveOptions::with_dt(DT);
        let mut state_field = psi0;
        let mut t_prev = 0.0;
        for t in [1.0f64, 2.0, 4.0] {
            let run = evolve_u(&state_field, t_prev, t, &cfg, &opts).unwrap();
            state_field = run.field;
            t_prev = t;
            let expect = (1.0 + 4.0 * t * t).powf(-0.25);
            let got = state_field.linf_norm();
            assert!(
                (got - expect).abs() < 1e-4,
                "peak at t = {t}: {got} vs closed form {expect}"
            );
        }
    }

    /// A step above the resolution bound is rejected before any work.
    #[test]
    fn cfl_violation_is_reported() {
        let g = grid();
        let psi0 = SpinorField::zeros(g);
        let cfg = free_config();
        let opts = EvolveOptions::with_dt(1.0);
        match evolve_u(&psi0, 0.0, 1.0, &cfg, &opts) {
            Err(Error::CflViolation { .. }) => {}
            other => panic!("expected CflViolation, got {other:?}"),
        }
    }

    /// The split-step run through a stationary potential agrees with the
    /// exact distorted-transform propagation.
    #[test]
    fn stationary_potential_matches_distorted_flow() {
        let u = packet();
        let psi0 = single_potential_flow(&u, &RLESS, 0.0);
        let cfg = config(vec![track(0.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero())], 1.0);
        let run = evolve_u(&psi0, 0.0, 1.0, &cfg, &EvolveOptions::with_dt(DT)).unwrap();
        // the run lives in the moving-potential frame, which carries the
        // extra e^{i sigma3 omega t} phase on the stationary flow
        let exact = galilei_apply(&cfg.tracks[0], &single_potential_flow(&u, &RLESS, 1.0), 1.0);
        let diff = run.field.sub(&exact).l2_norm();
        assert!(diff < 1e-4, "split-step vs distorted flow: {diff}");
    }

    /// Halving the step quarters the error against the exact distorted
    /// flow: the splitting is second order.
    #[test]
    fn splitting_is_second_order() {
        let u = packet();
        let psi0 = single_potential_flow(&u, &RLESS, 0.0);
        let cfg = config(vec![track(0.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero())], 0.5);
        let exact = galilei_apply(&cfg.tracks[0], &single_potential_flow(&u, &RLESS, 0.5), 0.5);
        let mut errs = Vec::new();
        for dt in [1e-3, 5e-4] {
            let run = evolve_u(&psi0, 0.0, 0.5, &cfg, &EvolveOptions::with_dt(dt)).unwrap();
            errs.push(run.field.sub(&exact).l2_norm());
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.5..=4.5).contains(&ratio),
            "error ratio {ratio} outside second-order range (errors {errs:?})"
        );
    }

    /// At t = 0 the single-potential flow is the plain distorted
    /// synthesis.
    #[test]
    fn flow_at_zero_is_synthesis() {
        let u = packet();
        let flow0 = single_potential_flow(&u, &RLESS, 0.0);
        let synth = forward_ghat(&u, &RLESS);
        assert!(flow0.sub(&synth).l2_norm() < 1e-12);
    }

    /// L² size of the single-potential flow stays within a fixed factor of
    /// its initial size.
    #[test]
    fn flow_l2_bounded() {
        // slow packet so the mass stays inside the box through t = 10
        let u = FrequencyPair::from_fn(kgrid(), |k| {
            let env = notch(k, 0.0) * (-(k - 1.0) * (k - 1.0) / 0.5).exp();
            [Complex64::new(env, 0.0), Complex64::new(0.4 * env, 0.0)]
        });
        let base = single_potential_flow(&u, &RLESS, 0.0).l2_norm();
        for step in 1..=5 {
            let t = 2.0 * step as f64;
            let ratio = single_potential_flow(&u, &RLESS, t).l2_norm() / base;
            assert!(ratio <= 3.0, "L2 ratio {ratio} at t = {t}");
        }
    }

    /// Supremum decay of the single-potential flow: the fitted exponent of
    /// sup|flow(t)| over t ∈ [5, 80] is −1/2 within tolerance. Run on a
    /// long box with a fine frequency grid so the packet stays inside the
    /// aliasing-free window for the whole fit range.
    #[test]
    fn flow_linf_decays_like_inverse_sqrt_t() {
        let lgrid = Grid1D::new(-200.0, 200.0, 4096).unwrap();
        let lkgrid = KGrid::new(8.0, 1024).unwrap();
        let tr = track(0.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero());
        let data = solve_scattering(&tr, &lgrid, &lkgrid, &JostOptions::default()).unwrap();
        // broad momentum support puts the packet in its dispersive regime
        // well before t = 5
        let u = FrequencyPair::from_fn(lkgrid, |k| {
            let env = notch(k, 0.0) * (-(k - 1.0) * (k - 1.0)).exp();
            [Complex64::new(env, 0.0), Complex64::default()]
        });
        let times = [5.0f64, 10.0, 20.0, 40.0, 80.0];
        let sups: Vec<f64> =
            times.iter().map(|&t| single_potential_flow(&u, &data, t).linf_norm()).collect();
        let n = times.len() as f64;
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            (slope + 0.5).abs() <= 0.07,
            "fitted decay exponent {slope}, sups {sups:?}"
        );
    }

    /// With zero potentials the corrected run reproduces S(t)φ to
    /// quadrature accuracy.
    #[test]
    fn build_t_zero_potential_tracks_s() {
        let cfg = config(
            vec![
                track(1.0, 15.0, Profile::zero(), Profile::zero()),
                track(-1.0, -15.0, Profile::zero(), Profile::zero()),
            ],
            1.0,
        );
        let free_track = track(0.0, 0.0, Profile::zero(), Profile::zero());
        let free = solve_scattering(&free_track, &grid(), &kgrid(), &JostOptions::default()).unwrap();
        let data = vec![free.clone(), free];
        let phi = FrequencyPair::from_fn(kgrid(), |k| {
            let env = notch(k, 0.0) * notch(k, 0.5) * notch(k, -0.5) * (-(k - 3.0) * (k - 3.0)).exp();
            [Complex64::new(env, 0.0), Complex64::new(0.5 * env, 0.0)]
        });
        let fam = recurse_profiles(&phi, &cfg, &data).unwrap();
        let (_, report) = build_t(&fam, &data, &[0.0, 0.5, 1.0], &EvolveOptions::with_dt(DT)).unwrap();
        let worst = report.deviation.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-7, "free run deviates from S by {worst}");
    }

    /// For two interacting tracks the corrected run starts a measurable
    /// distance from S and converges toward it exponentially.
    #[test]
    fn build_t_deviation_decays() {
        let cfg = config(
            vec![
                track(4.0, 1.5, Profile::sech2(-2.0, 1.0), Profile::zero()),
                track(-4.0, -1.5, Profile::sech2(-2.0, 1.0), Profile::zero()),
            ],
            2.0,
        );
        let data = vec![RLESS.clone(), RLESS.clone()];
        let phi = FrequencyPair::from_fn(kgrid(), |k| {
            let env = notch(k, 0.0) * notch(k, 2.0) * notch(k, -2.0) * (-(k - 4.0) * (k - 4.0)).exp();
            [Complex64::new(env, 0.0), Complex64::new(0.5 * env, 0.0)]
        });
        let fam = recurse_profiles(&phi, &cfg, &data).unwrap();
        let (_, report) =
            build_t(&fam, &data, &[0.0, 0.5, 1.0, 1.5, 2.0], &EvolveOptions::with_dt(DT)).unwrap();
        eprintln!("build_t deviations: {:?}, beta {}", report.deviation, report.beta_fit);
        assert!(report.beta_fit > 0.0, "no fitted decay: {:?}", report.deviation);
        let d0 = report.deviation[0];
        let d_end = *report.deviation.last().unwrap();
        assert!(d_end < d0, "deviation grew: {d0} -> {d_end}");
    }

    /// A boosted kernel mode of a single potential is an exact solution;
    /// the run stays on it.
    #[test]
    fn boosted_kernel_mode_is_stationary() {
        let rest = track(0.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero());
        let spec = discrete_eigens_with(
            &rest,
            &grid(),
            &SpectrumOptions { window_half: 30.0, ..SpectrumOptions::default() },
        )
        .unwrap();
        let pair = spec
            .eigenpairs
            .iter()
            .find(|p| p.lambda.norm() < 1e-6)
            .expect("kernel mode expected");
        let mode = DiscreteMode::Eigen { lambda: pair.lambda, vector: pair.vector.clone() };
        let cfg = config(vec![track(1.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero())], 2.0);
        let (_, report) = discrete_solution(
            0,
            &mode,
            &cfg,
            &grid(),
            &[0.0, 1.0, 2.0],
            &EvolveOptions::with_dt(DT),
        )
        .unwrap();
        let worst = report.deviation.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-4, "remainder {worst} for an exact mode");
    }

    /// With a second well-separated potential the mode picks up only an
    /// exponentially small remainder.
    #[test]
    fn boosted_mode_survives_second_potential() {
        let rest = track(0.0, 0.0, Profile::sech2(-2.0, 1.0), Profile::zero());
        let spec = discrete_eigens_with(
            &rest,
            &grid(),
            &SpectrumOptions { window_half: 30.0, ..SpectrumOptions::default() },
        )
        .unwrap();
        let pair = spec.eigenpairs.iter().find(|p| p.lambda.norm() < 1e-6).unwrap();
        let mode = DiscreteMode::Eigen { lambda: pair.lambda, vector: pair.vector.clone() };
        let cfg = config(
            vec![
                track(1.0, 15.0, Profile::sech2(-2.0, 1.0), Profile::zero()),
                track(-1.0, -15.0, Profile::sech2(-2.0, 1.0), Profile::zero()),
            ],
            1.0,
        );
        let (_, report) = discrete_solution(
            0,
            &mode,
            &cfg,
            &grid(),
            &[0.0, 1.0],
            &EvolveOptions::with_dt(DT),
        )
        .unwrap();
        let rel = report.deviation[1] / pair.vector.l2_norm();
        assert!(rel <= 1e-3, "remainder {rel} at separation 30");
    }

    /// The Jordan solution's t-linear coefficient, read off by
    /// σ₃-pairing, grows with slope 1.
    #[test]
    fn jordan_mode_grows_linearly() {
        let rest = track(0.0, 0.0, Profile::sech2(-4.0, 1.0), Profile::sech2(2.0, 1.0));
        let spec = discrete_eigens_with(
            &rest,
            &grid(),
            &SpectrumOptions { window_half: 30.0, ..SpectrumOptions::default() },
        )
        .unwrap();
        let chain = spec.jordan_zero.as_ref().expect("jordan chain expected");
        let mode = DiscreteMode::Jordan { z0: chain.z0.clone(), z1: chain.z1.clone() };
        let cfg = config(vec![track(1.0, 0.0, Profile::sech2(-4.0, 1.0), Profile::sech2(2.0, 1.0))], 2.0);
        let times = [0.0f64, 0.5, 1.0, 1.5, 2.0];
        let (state, _) = {
            // keep the run itself; coefficients are extracted below
            discrete_solution(0, &mode, &cfg, &grid(), &[2.0], &EvolveOptions::with_dt(DT)).unwrap()
        };
        let _ = state;
        // re-run sampling intermediate times for the pairing extraction
        let tr = &cfg.tracks[0];
        let p01 = sigma3_pairing(&galilei_apply(tr, &chain.z0, 0.0), &galilei_apply(tr, &chain.z1, 0.0));
        assert!(p01.norm() > 1e-8, "degenerate jordan pairing");
        let mut field = mode.predict(tr, 0.0);
        let p0 = sigma3_pairing(&field, &galilei_apply(tr, &chain.z1, 0.0));
        let mut cs = Vec::new();
        let mut t_prev = 0.0;
        for &t in &times {
            if t > t_prev {
                let mut opts = EvolveOptions::with_dt(DT);
                opts.allow_growth = true;
                let run = evolve_u(&field, t_prev, t, &cfg, &opts).unwrap();
                field = run.field;
                t_prev = t;
            }
            let p = sigma3_pairing(&field, &galilei_apply(tr, &chain.z1, t));
            cs.push(((p - p0) / p01).re);
        }
        for (t, c) in times.iter().zip(&cs) {
            assert!(
                (c - t).abs() <= 0.05 * t.max(0.5),
                "t-linear coefficient {c} at t = {t} (all: {cs:?})"
            );
        }
    }

    /// Zero source and zero datum stay identically zero.
    #[test]
    fn driven_remainder_zero_is_zero() {
        let cfg = free_config();
        let g = grid();
        let src = |_t: f64| SpinorField::zeros(g);
        let run = driven_remainder(
            &src,
            &SpinorField::zeros(g),
            &cfg,
            &[0.5, 1.0],
            1.0,
            0.5,
            &EvolveOptions::with_dt(DT),
        )
        .unwrap();
        assert!(run.h1.iter().all(|&h| h == 0.0));
        assert_eq!(run.weighted_sup, 0.0);
    }

    /// Free-flow Duhamel oracle: the accumulated remainder matches the
    /// closed-form frequency-space integral of the source.
    #[test]
    fn driven_remainder_matches_free_duhamel() {
        let g = grid();
        let cfg = free_config();
        let bump = SpinorField::from_fn(g, |x| {
            let e = (-x * x).exp();
            [Complex64::new(e, 0.0), Complex64::new(0.5 * e, 0.0)]
        });
        let bump_src = bump.clone();
        let src = move |t: f64| {
            let mut f = bump_src.clone();
            f.scale(Complex64::new((-t).exp(), 0.0));
            f
        };
        let t_final = 1.0;
        let run = driven_remainder(
            &src,
            &SpinorField::zeros(g),
            &cfg,
            &[t_final],
            1.0,
            0.5,
            &EvolveOptions::with_dt(2.0e-4),
        )
        .unwrap();
        // oracle: r̂_c(t,k) = −i ĝ_c(k) (e^{−t} − e^{∓ik²t})/(±ik² − 1)
        let n = g.n_x;
        let len = g.x_max - g.x_min;
        let mut b0: Vec<Complex64> = bump.values.iter().map(|v| v[0]).collect();
        let mut b1: Vec<Complex64> = bump.values.iter().map(|v| v[1]).collect();
        fft_forward(&mut b0);
        fft_forward(&mut b1);
        let mut o0 = vec![Complex64::default(); n];
        let mut o1 = vec![Complex64::default(); n];
        for j in 0..n {
            let k = bin_wavenumber(j, n, len);
            let i = Complex64::new(0.0, 1.0);
            let emt = Complex64::new((-t_final).exp(), 0.0);
            let d0 = i * k * k - 1.0;
            let d1 = -i * k * k - 1.0;
            o0[j] = -i * b0[j] * (emt - (-i * k * k * t_final).exp()) / d0;
            o1[j] = -i * b1[j] * (emt - (i * k * k * t_final).exp()) / d1;
        }
        fft_inverse(&mut o0);
        fft_inverse(&mut o1);
        let oracle = SpinorField {
            grid: g,
            values: (0..n).map(|j| [o0[j], o1[j]]).collect(),
        };
        let diff = run.fields[0].sub(&oracle).l2_norm();
        assert!(diff < 1e-5, "Duhamel oracle mismatch {diff}");
    }

    /// Driving the remainder equation with the defect of S reproduces the
    /// deviation measured by the corrected full run.
    #[test]
    fn driven_remainder_crosschecks_build_t() {
        let cfg = config(
            vec![
                track(1.0, 1.5, Profile::sech2(-2.0, 1.0), Profile::zero()),
                track(-1.0, -1.5, Profile::sech2(-2.0, 1.0), Profile::zero()),
            ],
            1.0,
        );
        let data = vec![RLESS.clone(), RLESS.clone()];
        let phi = FrequencyPair::from_fn(kgrid(), |k| {
            let env = notch(k, 0.0) * notch(k, 0.5) * notch(k, -0.5) * (-(k - 3.0) * (k - 3.0)).exp();
            [Complex64::new(env, 0.0), Complex64::new(0.5 * env, 0.0)]
        });
        let fam = recurse_profiles(&phi, &cfg, &data).unwrap();
        let t_grid = [0.0, 0.3, 0.6];
        let (_, report) = build_t(&fam, &data, &t_grid, &EvolveOptions::with_dt(DT)).unwrap();
        // sample the defect on the same grid build_t's correction uses and
        // interpolate; the source enters the run through midpoint kicks
        let t_cover = *t_grid.last().unwrap();
        let n_src = 32usize;
        let dt_src = t_cover / n_src as f64;
        let samples: Vec<SpinorField> = (0..=n_src)
            .map(|j| defect_of_s(&fam, &data, j as f64 * dt_src).unwrap())
            .collect();
        let g = data[0].grid;
        // same initial correction as build_t: r(0) from the free backward
        // Duhamel pass over the defect
        let mut r0 = SpinorField::zeros(g);
        for j in 0..=n_src {
            let tj = j as f64 * dt_src;
            let back = free_flow(&samples[j], -tj);
            let w = if j == 0 || j == n_src { 0.5 } else { 1.0 };
            r0.add_scaled(Complex64::new(0.0, -w * dt_src), &back);
        }
        let src = move |t: f64| {
            let pos = (t / dt_src).clamp(0.0, n_src as f64);
            let j = (pos.floor() as usize).min(n_src - 1);
            let w = pos - j as f64;
            let mut f = SpinorField::zeros(g);
            f.add_scaled(Complex64::new(-(1.0 - w), 0.0), &samples[j]);
            f.add_scaled(Complex64::new(-w, 0.0), &samples[j + 1]);
            f
        };
        let run = driven_remainder(&src, &r0, &cfg, &t_grid, 0.0, 0.0, &EvolveOptions::with_dt(DT))
            .unwrap();
        for (i, t) in t_grid.iter().enumerate() {
            let dev = report.deviation[i];
            let rh = run.h1[i];
            eprintln!("crosscheck t={t}: build_t {dev:.3e}, remainder {rh:.3e}");
            if dev.max(rh) > 1e-6 {
                let rel = (dev - rh).abs() / dev.max(rh);
                assert!(rel <= 0.2, "constructions disagree by {rel} at t = {t}");
            }
        }
    }

    /// A non-decaying remainder weighted by a positive rate is reported as
    /// NoDecay.
    #[test]
    fn growing_weighted_remainder_is_rejected() {
        let g = grid();
        let cfg = free_config();
        let r0 = SpinorField::from_fn(g, |x| {
            [Complex64::new((-x * x / 2.0).exp(), 0.0), Complex64::default()]
        });
        let src = |_t: f64| SpinorField::zeros(g);
        match driven_remainder(&src, &r0, &cfg, &[2.0], 3.0, 3.0, &EvolveOptions::with_dt(DT)) {
            Err(Error::NoDecay { .. }) => {}
            other => panic!("expected NoDecay, got {:?}", other.map(|r| r.weighted_sup)),
        }
    }
}

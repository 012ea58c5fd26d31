//! Decay-rate fits, mode-orthogonality traces, and the measured estimate
//! suite.
//!
//! [`decay_fit`] extracts power-law exponents and exponential rates from
//! norm time series by least squares on log-transformed data, always
//! reporting the goodness of fit. [`orthogonality_trace`] pairs a sampled
//! trajectory against the boosted discrete modes of every track and
//! applies the scattering acceptance rule. [`estimate_suite`] runs the
//! full measured check battery over a configuration and returns one
//! machine-readable record per check.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decompose::{
    apply_pc, full_decompose, hardy_system, neumann_solve, DecomposeOptions, HardySystemState,
};
use crate::dft::{
    adjoint_fstar, flat_f0, forward_fhat, forward_ghat, inversion_residual, sigma3_field,
};
use crate::error::{Error, Result};
use crate::evolve::{
    cfl_bound, discrete_solution, driven_remainder, evolve_u, DiscreteMode, EvolveOptions,
};
use crate::fftutil::{bin_wavenumber, fft_forward, fft_inverse};
use crate::field::{sigma3_pairing, FrequencyPair, SpinorField};
use crate::freeflow::{eval_s, recurse_profiles, residual_of_s};
use crate::grid::{Grid1D, KGrid};
use crate::hardy::{leakage_estimate, project_plus, Multiplier};
use crate::jost::{solve_scattering, JostOptions};
use crate::spectrum::{
    discrete_eigens_with, projection_pd, projection_pe, resonance_check, DiscreteSpectrum,
    EdgeClass, SpectrumOptions,
};
use crate::track::{galilei_apply, ModelConfig, Profile, SolitonTrack};
use crate::window::cell_window;

/// Default burn-in time excluded from decay fits: the early transient of
/// an evolution run is dominated by the initial datum, not by the decay
/// law being measured.
pub const DEFAULT_T_BURN: f64 = 5.0;

/// Minimum number of usable samples a decay fit requires.
pub const MIN_FIT_SAMPLES: usize = 6;

/// Factor by which a mode pairing must have shrunk at the final time for
/// a trajectory to count as scattering data.
const TRACE_DECAY_FACTOR: f64 = 0.1;

/// Absolute pairing size below which a mode trace counts as zero at both
/// ends, regardless of its ratio.
const TRACE_NOISE_FLOOR: f64 = 1e-6;

/// Which decay law a fit assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayModel {
    /// values ≈ C·t^p; the fit runs on log t.
    PowerLaw,
    /// values ≈ C·e^{−βt}; the fit runs on t directly.
    Exponential,
}

/// Least-squares decay fit of a positive time series.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Sample times retained by the fit window.
    pub times: Vec<f64>,
    /// Series values at the retained times.
    pub values: Vec<f64>,
    /// Decay law the fit assumed.
    pub model: DecayModel,
    /// Power-law exponent p (negative for decay) under
    /// [`DecayModel::PowerLaw`]; decay rate β (positive for decay) under
    /// [`DecayModel::Exponential`].
    pub exponent: f64,
    /// Coefficient of determination of the log-space line.
    pub r_squared: f64,
    /// Fit window (t_min, t_max) the samples were restricted to.
    pub window: (f64, f64),
}

// least-squares line y = intercept + slope·x; r² is 1 for constant data,
// which a line fits exactly
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Fits the decay law to `(times, values)` inside the default window
/// [[`DEFAULT_T_BURN`], ∞).
pub fn decay_fit(times: &[f64], values: &[f64], model: DecayModel) -> Result<DecayFit> {
    decay_fit_windowed(times, values, model, (DEFAULT_T_BURN, f64::INFINITY))
}

/// Fits the decay law to the samples inside `window`.
///
/// Only strictly positive values enter the fit (the log transform drops
/// the rest), and a power-law fit additionally requires positive times.
/// Fails with [`Error::InsufficientSamples`] when fewer than
/// [`MIN_FIT_SAMPLES`] samples survive.
pub fn decay_fit_windowed(
    times: &[f64],
    values: &[f64],
    model: DecayModel,
    window: (f64, f64),
) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::ConfigError(format!(
            "series length mismatch: {} times, {} values",
            times.len(),
            values.len()
        )));
    }
    let mut kept_t = Vec::new();
    let mut kept_v = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        let t_ok = t >= window.0 && t <= window.1 && (model == DecayModel::Exponential || t > 0.0);
        if t_ok && v > 0.0 {
            kept_t.push(t);
            kept_v.push(v);
        }
    }
    if kept_t.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { got: kept_t.len(), need: MIN_FIT_SAMPLES });
    }
    let xs: Vec<f64> = match model {
        DecayModel::PowerLaw => kept_t.iter().map(|t| t.ln()).collect(),
        DecayModel::Exponential => kept_t.clone(),
    };
    let ys: Vec<f64> = kept_v.iter().map(|v| v.ln()).collect();
    let (slope, _, r_squared) = linear_fit(&xs, &ys);
    let exponent = match model {
        DecayModel::PowerLaw => slope,
        DecayModel::Exponential => -slope,
    };
    Ok(DecayFit { times: kept_t, values: kept_v, model, exponent, r_squared, window })
}

/// Pairing series of one discrete mode along a sampled trajectory.
#[derive(Debug, Clone)]
pub struct ModeTrace {
    /// Track the mode belongs to.
    pub track: usize,
    /// Index of the mode in the track's discrete basis.
    pub mode: usize,
    /// ⟨ψ(t), σ₃·(boosted mode)(t)⟩ at each sample time.
    pub series: Vec<Complex64>,
    /// Scattering acceptance: the final pairing shrank below
    /// [`TRACE_DECAY_FACTOR`] times the initial one, or both sit below
    /// [`TRACE_NOISE_FLOOR`].
    pub scattering_pass: bool,
}

/// Pairs a sampled trajectory against the boosted discrete basis of every
/// track: for each mode h of track ℓ, the series
/// t ↦ ⟨ψ(t), σ₃·(boosted h)(t)⟩.
///
/// A trajectory in the scattering space keeps every series decaying; a
/// trajectory carrying a mode keeps that mode's series of constant size.
pub fn orthogonality_trace(
    times: &[f64],
    fields: &[SpinorField],
    config: &ModelConfig,
    spectra: &[DiscreteSpectrum],
) -> Result<Vec<ModeTrace>> {
    if times.len() != fields.len() {
        return Err(Error::ConfigError(format!(
            "trajectory length mismatch: {} times, {} fields",
            times.len(),
            fields.len()
        )));
    }
    if spectra.len() != config.tracks.len() {
        return Err(Error::ConfigError(format!(
            "need one discrete spectrum per track: {} spectra for {} tracks",
            spectra.len(),
            config.tracks.len()
        )));
    }
    if times.is_empty() {
        return Err(Error::ConfigError("empty trajectory".into()));
    }
    let mut traces = Vec::new();
    for (ell, (tr, spec)) in config.tracks.iter().zip(spectra).enumerate() {
        for (m, h) in spec.basis().iter().enumerate() {
            let series: Vec<Complex64> = times
                .iter()
                .zip(fields)
                .map(|(&t, psi)| sigma3_pairing(psi, &galilei_apply(tr, h, t)))
                .collect();
            let first = series.first().map(|z| z.norm()).unwrap_or(0.0);
            let last = series.last().map(|z| z.norm()).unwrap_or(0.0);
            let scattering_pass = last <= TRACE_DECAY_FACTOR * first
                || (first < TRACE_NOISE_FLOOR && last < TRACE_NOISE_FLOOR);
            traces.push(ModeTrace { track: ell, mode: m, series, scattering_pass });
        }
    }
    Ok(traces)
}

/// One measured check of the estimate suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    /// Stable identifier, criterion number plus a letter.
    pub id: String,
    /// What the check measures.
    pub what: String,
    /// Measured value.
    pub measured: f64,
    /// Threshold the measurement was compared against.
    pub threshold: f64,
    /// Whether the measurement met its threshold.
    pub pass: bool,
    /// Skip reasons, fitted constants, and error messages.
    pub note: String,
}

/// Machine-readable result of one estimate-suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    /// One record per executed check.
    pub checks: Vec<CheckRecord>,
    /// Wall-clock duration of the whole run in seconds.
    pub wall_seconds: f64,
}

impl SuiteReport {
    /// Whether every check passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Identifier of the first failing check, if any.
    pub fn first_failure(&self) -> Option<&str> {
        self.checks.iter().find(|c| !c.pass).map(|c| c.id.as_str())
    }

    /// Human-readable one-line-per-check summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "[{status}] {:<4} {} (measured {:.3e}, threshold {:.3e}){}{}\n",
                c.id,
                c.what,
                c.measured,
                c.threshold,
                if c.note.is_empty() { "" } else { " — " },
                c.note
            ));
        }
        let (p, f) = (
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.iter().filter(|c| !c.pass).count(),
        );
        out.push_str(&format!("{p} passed, {f} failed, {:.1} s\n", self.wall_seconds));
        out
    }
}

/// Scale and scope knobs of the estimate suite.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Spatial grid of every solve and run.
    pub grid: Grid1D,
    /// Frequency grid of every scattering table.
    pub kgrid: KGrid,
    /// Seed of the random input corpora.
    pub seed: u64,
    /// Split-step size; defaults to 90% of the stability bound per run.
    pub dt: Option<f64>,
    /// Random band-limited inputs per potential in the inversion corpus.
    pub n_random_inputs: usize,
    /// Horizon of the approximant-closeness and special-solution runs.
    pub t_close: f64,
    /// Horizon of the dispersive-decay runs.
    pub t_decay: f64,
    /// Run the evolution-based sections. Off for quick identity-only
    /// sweeps; the skipped sections are reported as such.
    pub dynamics: bool,
}

impl SuiteOptions {
    /// Full battery at the given resolution.
    pub fn new(grid: Grid1D, kgrid: KGrid) -> Self {
        SuiteOptions {
            grid,
            kgrid,
            seed: 7,
            dt: None,
            n_random_inputs: 10,
            t_close: 2.0,
            t_decay: 80.0,
            dynamics: true,
        }
    }
}

/// Decay rate κ of the reflectionless wide well −2κ²sech²(κx) used by
/// the interaction-tail scenarios: the tail rate 2κ = 0.3 is small
/// enough that doubling the separation moves the approximant residual by
/// a measurable factor while the profile support still fits the solve
/// window.
const WIDE_SCALE: f64 = 0.15;

/// Amplitude of the generic (reflecting) well used by the leakage and
/// contraction scenarios: off the reflectionless family, so both
/// coefficients are active and the essential-spectrum edge is generic.
const GENERIC_AMP: f64 = -1.3;

/// Amplitude of the shallow well used by the leakage fits. Its bound
/// state sits close to the essential spectrum, so the coefficient
/// singularity nearest the real axis is close and the leakage decay per
/// unit translation stays slow.
const LEAKAGE_AMP: f64 = -0.3;

/// Sharply reflecting narrow well used by the small-gap negative test:
/// |r| stays above the stall threshold across the whole frequency band
/// that the smallest velocity gap revisits.
const BARRIER_AMP: f64 = -2400.0;

/// Width of the sharply reflecting narrow well.
const BARRIER_WIDTH: f64 = 0.04;

/// Separation scenario shared by the contraction sweep.
const CONTRACTION_DY: f64 = 30.0;

// frequency notch suppressing the band around c that the quadratures
// exclude; order 8 keeps the transition steep without ringing
fn notch(k: f64, c: f64) -> f64 {
    (1.0 - (-(k - c) * (k - c) / 0.16).exp()).powi(8)
}

// random smooth band-limited pair with no mass near k = 0 or the grid
// edge; transforms of such data stay inside the truncation box
fn smooth_pair(kg: KGrid, rng: &mut ChaCha8Rng) -> FrequencyPair {
    let centers: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            let c = rng.gen_range(3.0..8.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (c, rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.0))
        })
        .collect();
    FrequencyPair::from_fn(kg, |k| {
        let mut v = [Complex64::default(); 2];
        for (c, ph, w) in &centers {
            let env = (-(k - c) * (k - c) / (w * w)).exp();
            let z = Complex64::from_polar(env, ph * k);
            v[0] += z;
            v[1] += 0.5 * z.conj();
        }
        let guard = notch(k, 0.0);
        [v[0] * guard, v[1] * guard]
    })
}

fn stationary(profile: Profile) -> SolitonTrack {
    SolitonTrack::stationary(1.0, profile, Profile::zero())
}

fn moving_track(profile: &Profile, v: f64, y: f64, gamma: f64) -> SolitonTrack {
    SolitonTrack {
        omega: 1.0,
        v,
        y,
        gamma,
        profile_u: profile.clone(),
        profile_w: Profile::zero(),
    }
}

fn scenario_config(tracks: Vec<SolitonTrack>, t_final: f64, dt: f64) -> ModelConfig {
    ModelConfig { tracks, l_sep: 1.0, c_sep: 0.1, t_final, dt }
}

// two tracks at ±y_half with velocities ±v_half, shared profile and phase
fn pair_config(profile: &Profile, v_half: f64, y_half: f64, gamma: f64, dt: f64) -> ModelConfig {
    scenario_config(
        vec![
            moving_track(profile, v_half, y_half, gamma),
            moving_track(profile, -v_half, -y_half, gamma),
        ],
        2.0,
        dt,
    )
}

fn rel_diff(a: &SpinorField, b: &SpinorField) -> f64 {
    a.sub(b).l2_norm() / a.l2_norm().max(1e-300)
}

struct Recorder {
    checks: Vec<CheckRecord>,
}

impl Recorder {
    fn push(
        &mut self,
        id: &str,
        what: &str,
        measured: f64,
        threshold: f64,
        pass: bool,
        note: &str,
    ) {
        self.checks.push(CheckRecord {
            id: id.into(),
            what: what.into(),
            measured,
            threshold,
            pass,
            note: note.into(),
        });
    }

    fn upper(&mut self, id: &str, what: &str, measured: f64, threshold: f64) {
        self.push(id, what, measured, threshold, measured <= threshold, "");
    }

    fn skip(&mut self, id: &str, what: &str, note: &str) {
        self.push(id, what, 0.0, 0.0, true, note);
    }

    fn fail(&mut self, id: &str, what: &str, err: &Error) {
        self.push(id, what, f64::NAN, 0.0, false, &format!("errored: {err}"));
    }
}

// runs one suite section, converting its error into a failing record so
// the rest of the battery still executes
fn section(rec: &mut Recorder, id: &str, what: &str, f: impl FnOnce(&mut Recorder) -> Result<()>) {
    let mut local = Recorder { checks: Vec::new() };
    match f(&mut local) {
        Ok(()) => rec.checks.append(&mut local.checks),
        Err(e) => {
            rec.checks.append(&mut local.checks);
            rec.fail(id, what, &e);
        }
    }
}

/// Runs the measured check battery over `config` at the resolution and
/// scope of `opts`, returning one record per check.
///
/// The battery measures scattering unitarity, zero-potential
/// degeneration, the transform inversion identities, discrete-mode
/// annihilation and completeness, one-sided leakage decay, approximant
/// residual decay and closeness to the propagated solution, the special
/// discrete-mode solutions, dispersive decay, the decomposition round
/// trip with projection idempotency and flow commutation, fixed-point
/// contraction versus velocity gap, windowed-norm coercivity, and the
/// driven-remainder bounds. Infrastructure failures inside a section are
/// reported as failing records of that section, not as an error.
pub fn estimate_suite(config: &ModelConfig, opts: &SuiteOptions) -> Result<SuiteReport> {
    let started = Instant::now();
    let grid = opts.grid;
    let kg = opts.kgrid;
    let jopts = JostOptions::default();
    let mut rec = Recorder { checks: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let base_profile = config.tracks[0].profile_u.clone();
    let base_track = stationary(base_profile.clone());
    let zero_track = stationary(Profile::zero());
    let generic_profile = Profile::sech2(GENERIC_AMP, 1.0);
    let wide_profile = Profile::sech2(-2.0 * WIDE_SCALE * WIDE_SCALE, 1.0 / WIDE_SCALE);

    // shared tables; the zero table doubles as the base one for a free
    // configuration
    let t_solve = Instant::now();
    let data_zero = solve_scattering(&zero_track, &grid, &kg, &jopts)?;
    let data_base = if base_profile.is_zero() {
        data_zero.clone()
    } else {
        solve_scattering(&base_track, &grid, &kg, &jopts)?
    };
    let base_solve_secs = t_solve.elapsed().as_secs_f64();
    let data_generic = solve_scattering(&stationary(generic_profile.clone()), &grid, &kg, &jopts)?;

    let sp_opts = SpectrumOptions { window_half: 30.0, ..SpectrumOptions::default() };
    let spec_base = discrete_eigens_with(&base_track, &grid, &sp_opts)?;

    let dt_for = |cfg: &ModelConfig| opts.dt.unwrap_or_else(|| 0.9 * cfl_bound(&grid, cfg));

    // 1: unitarity and conjugate symmetry over the corpus, with the solve
    // wall clock per potential
    section(&mut rec, "01", "scattering corpus", |r| {
        let mut max_unit = 0.0f64;
        let mut max_conj = 0.0f64;
        let mut max_secs = base_solve_secs;
        let (u0, c0) = data_base.unitarity_report();
        max_unit = max_unit.max(u0);
        max_conj = max_conj.max(c0);
        let (u1, c1) = data_generic.unitarity_report();
        max_unit = max_unit.max(u1);
        max_conj = max_conj.max(c1);
        let mut corpus_rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x626d70);
        for _ in 0..2 {
            let amp = -corpus_rng.gen_range(0.5..1.5);
            let width = corpus_rng.gen_range(0.8..1.5);
            let tr = stationary(Profile::gaussian(amp, width));
            let t1 = Instant::now();
            let data = solve_scattering(&tr, &grid, &kg, &jopts)?;
            max_secs = max_secs.max(t1.elapsed().as_secs_f64());
            let (u, c) = data.unitarity_report();
            max_unit = max_unit.max(u);
            max_conj = max_conj.max(c);
        }
        r.upper("01a", "max ||s|²+|r|²−1| over corpus", max_unit, 1e-6);
        r.upper("01b", "max conjugate-symmetry deviation", max_conj, 1e-8);
        r.upper("01c", "solve seconds per potential", max_secs, 60.0);
        Ok(())
    });

    // 2: zero-potential degeneration of both syntheses, the
    // essential-spectrum projection, the approximant, and the propagator
    section(&mut rec, "02", "zero-potential degeneration", |r| {
        let u = smooth_pair(kg, &mut rng);
        let flat = flat_f0(&u, &grid);
        r.upper("02a", "synthesis (right-normalized) vs flat", rel_diff(&forward_ghat(&u, &data_zero), &flat), 1e-6);
        r.upper("02b", "synthesis (left-normalized) vs flat", rel_diff(&forward_fhat(&u, &data_zero), &flat), 1e-6);
        let pe = projection_pe(&flat, &data_zero);
        r.upper("02c", "essential projection vs identity", rel_diff(&flat, &pe), 1e-6);

        let t = 0.7;
        let u_t = FrequencyPair::from_fn(kg, |k| {
            let j = ((k + kg.k_max) / kg.dk).round() as usize;
            let ph = Complex64::from_polar(1.0, -t * k * k);
            [ph * u.values[j][0], ph.conj() * u.values[j][1]]
        });
        let flat_t = flat_f0(&u_t, &grid);
        let cfg_free = scenario_config(vec![zero_track.clone()], t, 1e-3);
        let family = recurse_profiles(&u, &cfg_free, std::slice::from_ref(&data_zero))?;
        let s_t = eval_s(&family, std::slice::from_ref(&data_zero), t)?;
        r.upper("02d", "approximant vs flat free flow", rel_diff(&flat_t, &s_t), 1e-6);

        let run = evolve_u(&flat, 0.0, t, &cfg_free, &EvolveOptions::with_dt(dt_for(&cfg_free)))?;
        r.upper("02e", "propagator vs flat free flow", rel_diff(&flat_t, &run.field), 1e-6);
        Ok(())
    });

    // 3: inversion identities on the random corpus, for the base and the
    // generic tables
    section(&mut rec, "03", "inversion identities", |r| {
        let mut max_freq = 0.0f64;
        let mut max_phys = 0.0f64;
        for data in [&data_base, &data_generic] {
            for _ in 0..opts.n_random_inputs {
                let u = smooth_pair(kg, &mut rng);
                let f = flat_f0(&u, &grid);
                let pe_f = projection_pe(&f, data);
                let rep = inversion_residual(&u, Some((&f, &pe_f)), data);
                max_freq = max_freq.max(rep.freq_fg).max(rep.freq_gf);
                max_phys = max_phys.max(rep.physical.unwrap_or(0.0));
            }
        }
        r.upper("03a", "frequency-side inversion residual", max_freq, 1e-5);
        r.upper("03b", "physical-side inversion residual", max_phys, 1e-4);
        Ok(())
    });

    // 4: the analysis annihilates discrete modes, and the two projections
    // sum to the identity on mixtures
    section(&mut rec, "04", "mode annihilation and completeness", |r| {
        let basis = spec_base.basis();
        if basis.is_empty() {
            r.skip("04a", "analysis annihilates discrete modes", "no discrete modes");
        } else {
            let mut worst = 0.0f64;
            for h in &basis {
                let a = adjoint_fstar(&sigma3_field(h), &data_base);
                worst = worst.max(a.l2_norm() / h.l2_norm().max(1e-300));
            }
            r.upper("04a", "analysis annihilates discrete modes", worst, 1e-4);
        }
        let mut worst = 0.0f64;
        for _ in 0..4 {
            let u = smooth_pair(kg, &mut rng);
            let mut f = flat_f0(&u, &grid);
            if let Some(h) = spec_base.basis().first() {
                f.add_scaled(Complex64::new(0.5, 0.2), h);
            }
            let mut sum = projection_pe(&f, &data_base);
            sum.add_scaled(Complex64::new(1.0, 0.0), &projection_pd(&f, &spec_base)?);
            worst = worst.max(rel_diff(&f, &sum));
        }
        r.upper("04b", "P_d + P_e vs identity on mixtures", worst, 1e-4);
        Ok(())
    });

    // 5: one-sided leakage of translated, multiplied half-line signals
    // decays exponentially in the translation; a pure phase leaks nothing
    section(&mut rec, "05", "half-line leakage", |r| {
        // shallow reflecting well: the leakage rate equals the distance
        // of the nearest coefficient singularity from the real axis, and
        // a shallow well keeps that rate small enough that the largest
        // translation still sits above the numerical floor
        let data_shallow =
            solve_scattering(&stationary(Profile::sech2(LEAKAGE_AMP, 1.0)), &grid, &kg, &jopts)?;
        // intrinsically one-sided signal: dual support at +7, vanishing
        // at k = 0 where the coefficient tables only extrapolate, so the
        // truncation edge sits orders of magnitude below the decaying
        // leakage being fitted
        let f = FrequencyPair::from_fn(kg, |k| {
            let env = (1.0 - (-k * k).exp()) * (-(k - 3.0) * (k - 3.0)).exp();
            let ph = Complex64::from_polar(1.0, 7.0 * k);
            [ph * env, 0.5 * ph * env]
        });
        let sig = project_plus(&f);
        let y0s = [5.0, 10.0, 20.0];
        let fit_for = |mult: Multiplier| -> (f64, f64) {
            let logs: Vec<f64> = y0s
                .iter()
                .map(|&y0| leakage_estimate(&sig, mult, y0, 0.0).max(1e-300).ln())
                .collect();
            let (slope, _, r2) = linear_fit(&y0s, &logs);
            (slope, r2)
        };
        let (st, r2t) = fit_for(Multiplier::Transmission(&data_shallow));
        r.push("05a", "transmission leakage log-slope fit", r2t, 0.95, st < 0.0 && r2t >= 0.95, &format!("slope {st:.3}"));
        let (sr, r2r) = fit_for(Multiplier::Reflection(&data_shallow));
        r.push("05b", "reflection leakage log-slope fit", r2r, 0.95, sr < 0.0 && r2r >= 0.95, &format!("slope {sr:.3}"));
        let control = leakage_estimate(&sig, Multiplier::One, 10.0, 0.0) / f.l2_norm().max(1e-300);
        r.upper("05c", "pure-phase leakage control", control, 1e-6);
        Ok(())
    });

    // frequency seed shared by the interaction-tail scenarios: away from
    // the excluded band and from its images at ±v/2 for a ±4 velocity
    // pair, which the seed recovery cannot resolve; the second component
    // rides the conjugate channel, so its envelope mirrors the first
    let seed_phi = FrequencyPair::from_fn(kg, |k| {
        let sup = notch(k, 0.0) * notch(k, 2.0) * notch(k, -2.0);
        let env0 = sup * (-(k - 3.5) * (k - 3.5) / 1.5).exp();
        let env1 = sup * (-(k + 3.5) * (k + 3.5) / 1.5).exp();
        [Complex64::new(env0, 0.0), Complex64::new(0.5, 0.1) * env1]
    });

    if opts.dynamics {
        let data_wide = solve_scattering(&stationary(wide_profile.clone()), &grid, &kg, &jopts)?;
        let wide_tables = vec![data_wide.clone(), data_wide.clone()];

        // 6: the approximant defect shrinks by ≥10× when the separation
        // doubles, and decays exponentially in time as the tracks move apart
        section(&mut rec, "06", "approximant defect", |r| {
            let cfg20 = pair_config(&wide_profile, 4.0, 10.0, 0.0, 1e-3);
            let cfg40 = pair_config(&wide_profile, 4.0, 20.0, 0.0, 1e-3);
            let fam20 = recurse_profiles(&seed_phi, &cfg20, &wide_tables)?;
            let fam40 = recurse_profiles(&seed_phi, &cfg40, &wide_tables)?;
            let r20 = residual_of_s(&fam20, &wide_tables, 0.0)?;
            let r40 = residual_of_s(&fam40, &wide_tables, 0.0)?;
            let ratio = r20 / r40.max(1e-300);
            r.push("06a", "defect decrease under doubled separation", ratio, 10.0, ratio >= 10.0, &format!("{r20:.3e} → {r40:.3e}"));
            let ts = [0.0, 0.5, 1.0, 1.5, 2.0];
            let mut vals = Vec::new();
            for &t in &ts {
                vals.push(residual_of_s(&fam20, &wide_tables, t)?);
            }
            let (slope, _, _) = linear_fit(&ts, &vals.iter().map(|v| v.max(1e-300).ln()).collect::<Vec<_>>());
            let beta = -slope;
            r.push("06b", "defect decay rate in time", beta, 0.0, beta > 0.0, "");
            Ok(())
        });

        // 7: the propagated approximant datum stays close to the
        // approximant, and scattering data stays orthogonal to the modes
        section(&mut rec, "07", "approximant closeness", |r| {
            let cfg = pair_config(&wide_profile, 4.0, 15.0, 0.0, dt_for(&pair_config(&wide_profile, 4.0, 15.0, 0.0, 1.0)));
            let fam = recurse_profiles(&seed_phi, &cfg, &wide_tables)?;
            let t_grid: Vec<f64> = (0..=4).map(|i| i as f64 * opts.t_close / 4.0).collect();
            let eopts = EvolveOptions::with_dt(cfg.dt);
            let (_, report) = crate::evolve::build_t(&fam, &wide_tables, &t_grid, &eopts)?;
            let d_end = *report.deviation.last().unwrap();
            let s0_h1 = eval_s(&fam, &wide_tables, 0.0)?.h1_norm();
            // when the initial-datum correction sat below its build floor
            // the run starts exactly on the datum and the start deviation
            // vanishes; the floor then stands in as the smallest start
            // value the construction can distinguish
            let d0 = report.deviation[0]
                .max(crate::evolve::CORRECTION_FLOOR_REL * s0_h1);
            r.push("07a", "deviation at horizon vs start", d_end / d0.max(1e-300), 1.0, d_end < d0, &format!("{d0:.3e} → {d_end:.3e}"));
            r.upper("07b", "deviation at horizon vs datum size", d_end / s0_h1.max(1e-300), 1e-2);

            // trace check on the base potential, which carries the modes
            if spec_base.basis().is_empty() {
                r.skip("07c", "mode traces of scattering data", "no discrete modes");
            } else {
                let cfg_b = pair_config(&base_profile, 4.0, 15.0, 0.0, 0.0);
                let cfg_b = ModelConfig { dt: dt_for(&cfg_b), ..cfg_b };
                let tables_b = vec![data_base.clone(), data_base.clone()];
                let fam_b = recurse_profiles(&seed_phi, &cfg_b, &tables_b)?;
                let mut field = eval_s(&fam_b, &tables_b, 0.0)?;
                let scale = field.l2_norm().max(1e-300);
                field.scale(Complex64::new(1.0 / scale, 0.0));
                let mut fields = vec![field.clone()];
                let eopts_b = EvolveOptions::with_dt(cfg_b.dt);
                let mut t_prev = 0.0;
                for &t in &t_grid[1..] {
                    let run = evolve_u(fields.last().unwrap(), t_prev, t, &cfg_b, &eopts_b)?;
                    fields.push(run.field);
                    t_prev = t;
                }
                let spectra = vec![spec_base.clone(), spec_base.clone()];
                let traces = orthogonality_trace(&t_grid, &fields, &cfg_b, &spectra)?;
                let worst_end = traces
                    .iter()
                    .map(|tr| tr.series.last().unwrap().norm())
                    .fold(0.0f64, f64::max);
                let ok = traces.iter().all(|tr| tr.scattering_pass);
                r.push("07c", "mode traces of scattering data", worst_end, TRACE_NOISE_FLOOR, ok, "");
            }
            Ok(())
        });

        // 8: boosted discrete modes remain solutions, alone and against a
        // second potential, and the degenerate pair grows linearly
        section(&mut rec, "08", "special solutions", |r| {
            match spec_base.eigenpairs.iter().min_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm())) {
                None => {
                    r.skip("08a", "single-potential boosted mode", "no discrete modes");
                    r.skip("08b", "boosted mode against second potential", "no discrete modes");
                }
                Some(pair) => {
                    let mode = DiscreteMode::Eigen { lambda: pair.lambda, vector: pair.vector.clone() };
                    let scale = pair.vector.l2_norm().max(1e-300);
                    let cfg1 = scenario_config(vec![moving_track(&base_profile, 1.0, 0.0, 0.0)], opts.t_close, 0.0);
                    let cfg1 = ModelConfig { dt: dt_for(&cfg1), ..cfg1 };
                    let ts: Vec<f64> = (0..=4).map(|i| i as f64 * opts.t_close / 4.0).collect();
                    let (_, rep) = discrete_solution(0, &mode, &cfg1, &grid, &ts, &EvolveOptions::with_dt(cfg1.dt))?;
                    let worst = rep.deviation.iter().cloned().fold(0.0, f64::max) / scale;
                    r.upper("08a", "single-potential boosted mode", worst, 1e-4);

                    let cfg2 = pair_config(&base_profile, 4.0, 15.0, 0.0, 0.0);
                    let cfg2 = ModelConfig { dt: dt_for(&cfg2), ..cfg2 };
                    let (_, rep2) = discrete_solution(0, &mode, &cfg2, &grid, &[0.0, 1.0], &EvolveOptions::with_dt(cfg2.dt))?;
                    let rel = rep2.deviation[1] / scale;
                    r.upper("08b", "boosted mode against second potential", rel, 1e-3);
                }
            }

            // degenerate pair on its dedicated potential, coefficient read
            // off by pairing against the generalized vector
            let tr_j = SolitonTrack {
                omega: 1.0,
                v: 1.0,
                y: 0.0,
                gamma: 0.0,
                profile_u: Profile::sech2(-4.0, 1.0),
                profile_w: Profile::sech2(2.0, 1.0),
            };
            let spec_j =
                discrete_eigens_with(&SolitonTrack { v: 0.0, ..tr_j.clone() }, &grid, &sp_opts)?;
            match &spec_j.jordan_zero {
                None => r.skip("08c", "degenerate-pair linear growth", "no degenerate pair found"),
                Some(chain) => {
                    let cfg_j = scenario_config(vec![tr_j.clone()], opts.t_close, 0.0);
                    let cfg_j = ModelConfig { dt: dt_for(&cfg_j), ..cfg_j };
                    let mode = DiscreteMode::Jordan { z0: chain.z0.clone(), z1: chain.z1.clone() };
                    let p01 = sigma3_pairing(&galilei_apply(&tr_j, &chain.z0, 0.0), &galilei_apply(&tr_j, &chain.z1, 0.0));
                    let mut field = mode.predict(&tr_j, 0.0);
                    let p0 = sigma3_pairing(&field, &galilei_apply(&tr_j, &chain.z1, 0.0));
                    let ts: Vec<f64> = (0..=4).map(|i| i as f64 * opts.t_close / 4.0).collect();
                    let mut coeffs = Vec::new();
                    let mut t_prev = 0.0;
                    let mut eo = EvolveOptions::with_dt(cfg_j.dt);
                    eo.allow_growth = true;
                    for &t in &ts {
                        if t > t_prev {
                            let run = evolve_u(&field, t_prev, t, &cfg_j, &eo)?;
                            field = run.field;
                            t_prev = t;
                        }
                        let p = sigma3_pairing(&field, &galilei_apply(&tr_j, &chain.z1, t));
                        coeffs.push(((p - p0) / p01).re);
                    }
                    // slope through the origin of coefficient vs time
                    let num: f64 = ts.iter().zip(&coeffs).map(|(t, c)| t * c).sum();
                    let den: f64 = ts.iter().map(|t| t * t).sum();
                    let slope = num / den;
                    r.push("08c", "degenerate-pair linear growth", (slope - 1.0).abs(), 0.05, (slope - 1.0).abs() <= 0.05, &format!("slope {slope:.4}"));
                }
            }
            Ok(())
        });

        // 9: dispersive decay of projected data under the base potential
        section(&mut rec, "09", "dispersive decay", |r| {
            let cfg1 = scenario_config(vec![base_track.clone()], opts.t_decay, 0.0);
            let cfg1 = ModelConfig { dt: dt_for(&cfg1), ..cfg1 };
            let spectra = vec![spec_base.clone()];
            let packet = SpinorField::from_fn(grid, |x| {
                let e = (-x * x / 18.0).exp();
                [Complex64::new(e, 0.0), Complex64::new(0.4 * e, 0.1 * e)]
            });
            let psi0 = apply_pc(&packet, 0.0, &cfg1, &spectra)?;
            let n_seg = 32usize;
            let ts: Vec<f64> = (0..=n_seg).map(|i| i as f64 * opts.t_decay / n_seg as f64).collect();

            // conservative run for the norm bound
            let mut field = psi0.clone();
            let mut max_l2 = field.l2_norm();
            let eopts = EvolveOptions::with_dt(cfg1.dt);
            for w in ts.windows(2) {
                field = evolve_u(&field, w[0], w[1], &cfg1, &eopts)?.field;
                max_l2 = max_l2.max(field.l2_norm());
            }
            r.upper("09a", "norm bound of projected data", max_l2 / psi0.l2_norm().max(1e-300), 3.0);

            // absorbing run for the pointwise and weighted rates
            let mut field = psi0.clone();
            let mut linf = vec![field.linf_norm()];
            let weight_norm = |f: &SpinorField| -> f64 {
                let mut acc = 0.0;
                for (j, v) in f.values.iter().enumerate() {
                    let x = grid.node(j);
                    let w = 1.0 / (1.0 + x * x);
                    acc += (v[0].norm_sqr() + v[1].norm_sqr()) * w * w;
                }
                (acc * grid.h).sqrt()
            };
            let mut weighted = vec![weight_norm(&field)];
            let sopts = EvolveOptions { dt: cfg1.dt, sponge: true, allow_growth: false };
            for w in ts.windows(2) {
                field = evolve_u(&field, w[0], w[1], &cfg1, &sopts)?.field;
                linf.push(field.linf_norm());
                weighted.push(weight_norm(&field));
            }
            let fit = decay_fit(&ts, &linf, DecayModel::PowerLaw)?;
            r.push("09b", "pointwise decay exponent", (fit.exponent + 0.5).abs(), 0.07, (fit.exponent + 0.5).abs() <= 0.07, &format!("p {:.3}, r² {:.3}", fit.exponent, fit.r_squared));
            match resonance_check(&data_base)?.class {
                EdgeClass::Nongeneric => {
                    r.skip("09c", "weighted decay exponent", "skipped: nongeneric essential-spectrum edge");
                }
                EdgeClass::Generic => {
                    let wfit = decay_fit(&ts, &weighted, DecayModel::PowerLaw)?;
                    r.push("09c", "weighted decay exponent", (wfit.exponent + 1.5).abs(), 0.15, (wfit.exponent + 1.5).abs() <= 0.15, &format!("p {:.3}, r² {:.3}", wfit.exponent, wfit.r_squared));
                }
            }
            Ok(())
        });
    } else {
        rec.skip("06", "approximant defect", "skipped: dynamics disabled");
        rec.skip("07", "approximant closeness", "skipped: dynamics disabled");
        rec.skip("08", "special solutions", "skipped: dynamics disabled");
        rec.skip("09", "dispersive decay", "skipped: dynamics disabled");
    }

    // 10: decomposition round trip on a synthesized mixture, projection
    // idempotency, and commutation with the flow
    section(&mut rec, "10", "decomposition round trip", |r| {
        let cfg = pair_config(&base_profile, 4.0, 20.0, 0.3, 1e-3);
        let tables = vec![data_base.clone(), data_base.clone()];
        let spectra = vec![spec_base.clone(), spec_base.clone()];
        let fam = recurse_profiles(&seed_phi, &cfg, &tables)?;
        let mut f = eval_s(&fam, &tables, 0.0)?;
        for (tr, spec) in cfg.tracks.iter().zip(&spectra) {
            if let Some(h) = spec.basis().first() {
                f.add_scaled(Complex64::new(0.3, 0.1), &galilei_apply(tr, h, 0.0));
            }
        }
        let dopts = DecomposeOptions::default();
        let dec = full_decompose(&f, &cfg, &tables, &spectra, &dopts)?;
        r.upper("10a", "round-trip reconstruction residual", dec.residual, 1e-3);

        let p1 = apply_pc(&f, 0.0, &cfg, &spectra)?;
        let p2 = apply_pc(&p1, 0.0, &cfg, &spectra)?;
        r.upper("10b", "projection idempotency", p2.sub(&p1).l2_norm() / f.l2_norm().max(1e-300), 2e-3);

        if opts.dynamics {
            let cfg_run = ModelConfig { dt: dt_for(&cfg), ..cfg.clone() };
            let eopts = EvolveOptions::with_dt(cfg_run.dt);
            let t = 1.0;
            let uf = evolve_u(&f, 0.0, t, &cfg_run, &eopts)?.field;
            let a = apply_pc(&uf, t, &cfg_run, &spectra)?;
            let b = evolve_u(&p1, 0.0, t, &cfg_run, &eopts)?.field;
            r.upper("10c", "projection commutes with the flow", a.sub(&b).l2_norm() / f.l2_norm().max(1e-300), 1e-3);
        } else {
            r.skip("10c", "projection commutes with the flow", "skipped: dynamics disabled");
        }
        Ok(())
    });

    // 11: fixed-point contraction improves with the velocity gap, and a
    // too-small gap is rejected
    section(&mut rec, "11", "fixed-point contraction", |r| {
        let gtables = vec![data_generic.clone(), data_generic.clone()];
        let dopts = DecomposeOptions::default();
        // contraction factor from the early update ratios of the solve;
        // the late updates sit at the numerical floor where ratios are
        // noise
        let early_rho = |state: &HardySystemState| -> f64 {
            let h = &state.residual_history;
            let mut rho = 0.0f64;
            for i in 1..h.len().min(4) {
                if h[i - 1] > 1e-12 {
                    rho = rho.max(h[i] / h[i - 1]);
                }
            }
            rho
        };
        let mut rhos = Vec::new();
        for dv in [4.0_f64, 8.0, 16.0] {
            let v_half = dv / 2.0;
            let cfg = pair_config(&generic_profile, v_half, CONTRACTION_DY / 2.0, 0.0, 1e-3);
            // band-limited seed clear of the excluded band and of its
            // comoving images, with mass at low frequency where the
            // reflection that drives the coupling is strongest
            let phi = FrequencyPair::from_fn(kg, |k| {
                let mut sup = notch(k, 0.0) * notch(k, v_half) * notch(k, -v_half);
                if dv == 4.0 {
                    sup *= notch(k, 4.0) * notch(k, -4.0);
                }
                let env0 = sup * (-(k - 1.2) * (k - 1.2)).exp();
                let env1 = sup * (-(k + 1.2) * (k + 1.2)).exp();
                let ph = Complex64::from_polar(1.0, 0.7 * k);
                [ph * env0, 0.5 * ph.conj() * env1]
            });
            let fam = recurse_profiles(&phi, &cfg, &gtables)?;
            let f = eval_s(&fam, &gtables, 0.0)?;
            let mut state = hardy_system(&f, &cfg, &gtables, &dopts)?;
            neumann_solve(&mut state, &cfg, &gtables, &dopts)?;
            rhos.push(early_rho(&state));
        }
        let monotone = rhos.windows(2).all(|w| w[1] < w[0]);
        r.push("11a", "contraction factor vs velocity gap", rhos[2], rhos[0], monotone, &format!("ρ {rhos:?}"));

        // negative test at a unit velocity gap against a sharply
        // reflecting narrow well: each iteration revisits frequencies
        // half a gap apart, and |r| stays above the stall threshold over
        // that whole path. Only the coefficient tables enter the
        // coupling, so the solve skips the stored-kernel audit (the grid
        // under-resolves the narrow core) and gates on unitarity instead.
        let jopts_b = JostOptions {
            substeps: 4 * jopts.substeps,
            check_residuals: false,
            ..jopts.clone()
        };
        let barrier = Profile::sech2(BARRIER_AMP, BARRIER_WIDTH);
        let data_b = solve_scattering(&stationary(barrier.clone()), &grid, &kg, &jopts_b)?;
        let (udev, _) = data_b.unitarity_report();
        if udev > 1e-6 {
            r.push("11b", "small gap rejected as non-contracting", udev, 1e-6, false, "barrier table failed the unitarity gate");
            return Ok(());
        }
        let y_half = 5.0;
        let cfg_b = pair_config(&barrier, 0.5, y_half, 0.0, 1e-3);
        let fb = SpinorField::from_fn(grid, |x| {
            let b = (-(x - y_half) * (x - y_half) / 144.0).exp()
                + (-(x + y_half) * (x + y_half) / 144.0).exp();
            let ph = Complex64::from_polar(1.0, -x);
            [ph * b, 0.5 * ph.conj() * b]
        });
        let btables = vec![data_b.clone(), data_b.clone()];
        let mut state = hardy_system(&fb, &cfg_b, &btables, &dopts)?;
        match neumann_solve(&mut state, &cfg_b, &btables, &dopts) {
            Err(Error::NotContracting { rho, .. }) => {
                r.push("11b", "small gap rejected as non-contracting", rho, 0.95, true, "");
            }
            Ok(rep) => {
                r.push("11b", "small gap rejected as non-contracting", rep.rho, 0.95, false, "iteration contracted at gap 1");
            }
            Err(e) => return Err(e),
        }
        Ok(())
    });

    // 12: windowed norms retain a stable fraction of the total norm
    section(&mut rec, "12", "windowed-norm coercivity", |r| {
        let cfg = pair_config(&base_profile, 4.0, 15.0, 0.0, 1e-3);
        let bank: Vec<(f64, f64, f64)> = (0..8)
            .map(|_| (rng.gen_range(-40.0..40.0), rng.gen_range(2.0..6.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let coercivity = |g: &Grid1D| -> (f64, f64) {
            let mut c_l2 = f64::INFINITY;
            let mut c_h1 = f64::INFINITY;
            for &(x0, w, ph) in &bank {
                let f = SpinorField::from_fn(*g, |x| {
                    let e = (-(x - x0) * (x - x0) / (w * w)).exp();
                    let z = Complex64::from_polar(e, ph * x);
                    [z, 0.5 * z.conj()]
                });
                let mut sum_l2 = 0.0;
                let mut sum_h1 = 0.0;
                for ell in 0..cfg.tracks.len() {
                    let chi = cell_window(&cfg, ell, 0.0, 1.0, g);
                    let mut fw = f.clone();
                    fw.map_in_place(|j, v| {
                        v[0] *= chi[j];
                        v[1] *= chi[j];
                    });
                    sum_l2 += fw.l2_norm().powi(2);
                    sum_h1 += fw.h1_norm().powi(2);
                }
                c_l2 = c_l2.min(sum_l2 / f.l2_norm().powi(2));
                c_h1 = c_h1.min(sum_h1 / f.h1_norm().powi(2));
            }
            (c_l2, c_h1)
        };
        let (c1, ch1) = coercivity(&grid);
        let fine = Grid1D::new(grid.x_min, grid.x_max, 2 * grid.n_x)?;
        let (c2, _) = coercivity(&fine);
        r.push("12a", "windowed norm-fraction constant", c1, 0.0, c1 > 0.0, "");
        let drift = (c1 - c2).abs() / c1.max(1e-300);
        r.upper("12b", "constant drift under grid doubling", drift, 0.2);
        r.push("12c", "windowed H¹ norm-fraction constant", ch1, 0.0, ch1 > 0.0, "");
        Ok(())
    });

    // 13: driven remainder against the free closed form, and the weighted
    // bound under an exponentially decaying source
    if opts.dynamics {
        section(&mut rec, "13", "driven remainder", |r| {
            let cfg_free = scenario_config(vec![zero_track.clone()], 1.0, 2e-4);
            let bump = SpinorField::from_fn(grid, |x| {
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
                &SpinorField::zeros(grid),
                &cfg_free,
                &[t_final],
                1.0,
                0.5,
                &EvolveOptions::with_dt(2e-4),
            )?;
            // closed form in the periodic basis:
            // r̂_c(t,k) = −i ĝ_c(k) (e^{−t} − e^{∓ik²t}) / (±ik² − 1)
            let n = grid.n_x;
            let len = grid.x_max - grid.x_min;
            let mut b0: Vec<Complex64> = bump.values.iter().map(|v| v[0]).collect();
            let mut b1: Vec<Complex64> = bump.values.iter().map(|v| v[1]).collect();
            fft_forward(&mut b0);
            fft_forward(&mut b1);
            for j in 0..n {
                let k = bin_wavenumber(j, n, len);
                let i = Complex64::new(0.0, 1.0);
                let emt = Complex64::new((-t_final).exp(), 0.0);
                let e0 = b0[j];
                let e1 = b1[j];
                b0[j] = -i * e0 * (emt - (-i * k * k * t_final).exp()) / (i * k * k - 1.0);
                b1[j] = -i * e1 * (emt - (i * k * k * t_final).exp()) / (-i * k * k - 1.0);
            }
            fft_inverse(&mut b0);
            fft_inverse(&mut b1);
            let oracle = SpinorField { grid, values: (0..n).map(|j| [b0[j], b1[j]]).collect() };
            r.upper("13a", "free Duhamel closed form", run.fields[0].sub(&oracle).l2_norm(), 1e-5);

            // weighted bound on the base potential with a projected source
            let cfg1 = scenario_config(vec![base_track.clone()], 4.0, 0.0);
            let cfg1 = ModelConfig { dt: dt_for(&cfg1), ..cfg1 };
            let spectra = vec![spec_base.clone()];
            let g0 = apply_pc(&bump, 0.0, &cfg1, &spectra)?;
            let beta = 0.5;
            let src1 = move |t: f64| {
                let mut f = g0.clone();
                f.scale(Complex64::new((-beta * t).exp(), 0.0));
                f
            };
            let run1 = driven_remainder(
                &src1,
                &SpinorField::zeros(grid),
                &cfg1,
                &[4.0],
                beta,
                beta / 2.0,
                &EvolveOptions::with_dt(cfg1.dt),
            )?;
            let c = run1.weighted_sup / run1.source_weighted_sup.max(1e-300);
            r.push("13b", "weighted remainder bound constant", c, f64::INFINITY, c.is_finite(), &format!("C = {c:.3}"));
            Ok(())
        });
    } else {
        rec.skip("13", "driven remainder", "skipped: dynamics disabled");
    }

    Ok(SuiteReport { checks: rec.checks, wall_seconds: started.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Exact power-law data is fitted to machine accuracy with r² = 1.
    #[test]
    fn power_law_fit_recovers_exponent() {
        let times: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 / t.sqrt()).collect();
        let fit = decay_fit(&times, &values, DecayModel::PowerLaw).unwrap();
        assert_abs_diff_eq!(fit.exponent, -0.5, epsilon = 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(fit.times.iter().all(|&t| t >= DEFAULT_T_BURN));
    }

    /// Exact exponential data under the exponential model yields the rate
    /// with positive sign for decay.
    #[test]
    fn exponential_fit_recovers_rate() {
        let times: Vec<f64> = (0..30).map(|i| 0.5 * i as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| 0.7 * (-2.0 * t).exp()).collect();
        let fit = decay_fit(&times, &values, DecayModel::Exponential).unwrap();
        assert_abs_diff_eq!(fit.exponent, 2.0, epsilon = 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    /// The free Gaussian peak height (1 + 4t²)^{−1/4} fits the late-time
    /// power law −1/2 inside the window [10, 80].
    #[test]
    fn gaussian_peak_series_fits_free_decay() {
        let times: Vec<f64> = (1..=80).map(|i| i as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| (1.0 + 4.0 * t * t).powf(-0.25)).collect();
        let fit = decay_fit_windowed(&times, &values, DecayModel::PowerLaw, (10.0, 80.0)).unwrap();
        assert_abs_diff_eq!(fit.exponent, -0.5, epsilon = 0.02);
    }

    /// Fewer than six usable samples in the window is an error.
    #[test]
    fn fit_requires_six_samples() {
        let times = [6.0, 7.0, 8.0, 9.0, 10.0];
        let values = [1.0, 0.5, 0.33, 0.25, 0.2];
        match decay_fit(&times, &values, DecayModel::PowerLaw) {
            Err(Error::InsufficientSamples { got: 5, need: 6 }) => {}
            other => panic!("expected InsufficientSamples, got {other:?}"),
        }
    }

    /// Samples before the burn-in time do not contaminate the fit.
    #[test]
    fn fit_ignores_burn_in() {
        let mut times: Vec<f64> = vec![0.5, 1.0, 2.0, 4.0];
        let mut values = vec![7.0, 3.0, 9.0, 2.0];
        for i in 1..=20 {
            let t = 5.0 + i as f64;
            times.push(t);
            values.push(2.0 / t);
        }
        let fit = decay_fit(&times, &values, DecayModel::PowerLaw).unwrap();
        assert_abs_diff_eq!(fit.exponent, -1.0, epsilon = 1e-9);
    }

    /// Zero and negative values are dropped rather than breaking the log
    /// transform.
    #[test]
    fn fit_drops_nonpositive_values() {
        let times: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| if t as usize % 5 == 0 { 0.0 } else { 1.0 / t })
            .collect();
        let fit = decay_fit(&times, &values, DecayModel::PowerLaw).unwrap();
        assert_abs_diff_eq!(fit.exponent, -1.0, epsilon = 1e-9);
        assert!(fit.values.iter().all(|&v| v > 0.0));
    }

    /// A trajectory equal to a boosted eigenmode keeps its own pairing
    /// constant and correctly fails the scattering acceptance.
    #[test]
    fn trace_of_boosted_mode_is_constant() {
        let grid = Grid1D::new(-60.0, 60.0, 1024).unwrap();
        let rest = stationary(Profile::sech2(-2.0, 1.0));
        let spec = discrete_eigens_with(
            &rest,
            &grid,
            &SpectrumOptions { window_half: 30.0, ..SpectrumOptions::default() },
        )
        .unwrap();
        let pair = spec
            .eigenpairs
            .iter()
            .find(|p| p.lambda.norm() < 1e-6)
            .expect("kernel mode expected");
        let tr = moving_track(&Profile::sech2(-2.0, 1.0), 1.0, 0.0, 0.2);
        let cfg = scenario_config(vec![tr.clone()], 2.0, 1e-3);
        let mode = DiscreteMode::Eigen { lambda: pair.lambda, vector: pair.vector.clone() };
        let times: Vec<f64> = (0..=4).map(|i| 0.5 * i as f64).collect();
        let fields: Vec<SpinorField> = times.iter().map(|&t| mode.predict(&tr, t)).collect();
        let traces = orthogonality_trace(&times, &fields, &cfg, &[spec.clone()]).unwrap();
        let own = traces
            .iter()
            .find(|t| {
                spec.basis()[t.mode].sub(&pair.vector).l2_norm() < 1e-12
            })
            .expect("own-mode trace expected");
        let first = own.series[0].norm();
        assert!(first > 1e-8, "degenerate self-pairing");
        for z in &own.series {
            let ratio = z.norm() / first;
            assert!((ratio - 1.0).abs() <= 0.05, "pairing drifted to ratio {ratio}");
        }
        assert!(!own.scattering_pass, "a pure mode must fail the scattering test");
    }

    /// A potential without discrete modes yields no traces.
    #[test]
    fn empty_mode_bank_gives_no_traces() {
        let grid = Grid1D::new(-60.0, 60.0, 1024).unwrap();
        let zero = stationary(Profile::zero());
        let spec = discrete_eigens_with(
            &zero,
            &grid,
            &SpectrumOptions { window_half: 30.0, ..SpectrumOptions::default() },
        )
        .unwrap();
        let cfg = scenario_config(vec![zero], 1.0, 1e-3);
        let f = SpinorField::from_fn(grid, |x| {
            [Complex64::new((-x * x).exp(), 0.0), Complex64::default()]
        });
        let traces = orthogonality_trace(&[0.0, 1.0], &[f.clone(), f], &cfg, &[spec]).unwrap();
        assert!(traces.is_empty());
    }

    /// The identity-class sections of the suite pass on a free two-track
    /// configuration at reduced resolution.
    #[test]
    fn suite_identity_sections_pass_on_free_config() {
        let grid = Grid1D::new(-60.0, 60.0, 1024).unwrap();
        let kgrid = KGrid::new(16.0, 1024).unwrap();
        let cfg = pair_config(&Profile::zero(), 2.0, 10.0, 0.0, 1e-3);
        let mut opts = SuiteOptions::new(grid, kgrid);
        opts.dynamics = false;
        opts.n_random_inputs = 3;
        let report = estimate_suite(&cfg, &opts).unwrap();
        assert!(
            report.all_pass(),
            "suite failure at {:?}\n{}",
            report.first_failure(),
            report.summary()
        );
    }
}

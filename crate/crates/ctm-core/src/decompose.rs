//! Decomposition of arbitrary data into a scattering profile plus moving
//! bound states, and the continuous-spectrum projection built from it.
//!
//! Two paths are provided. The fast path pairs the data against the
//! Galilei-boosted discrete bases of all tracks and solves small per-track
//! Gram systems ([`window_project_discrete`], [`apply_pc`]); cross-track
//! pairings are exponentially small in the separations and are neglected
//! but measured. The full path inverts the free-evolution approximant
//! S(0): each track's window is cut out, unwound to the track's comoving
//! frame, and analyzed by the inverse of the distorted synthesis that
//! dominates there ([`assemble_b_maps`]). Because the analysis kernels are
//! plane waves beyond the potential supports, the windowed inversions
//! couple only through reflection-weighted, frequency-flipped tails of the
//! neighboring window's unknown, giving a fixed-point system solved by
//! Neumann iteration ([`neumann_solve`]). The converged unknowns reproduce
//! the synthesis argument of the first track, from which the seed profile
//! is read off by removing its boost phases ([`full_decompose`]).
//!
//! Couplings are derived from the two plane-wave tails of the stationary
//! kernels: the cell of the first track is analyzed in the form that is
//! flat on its interface side, the cell of the last track in the mirrored
//! form, and the tail of one cell's argument is carried into the other
//! cell's frame by a unitary change of comoving frequency and center
//! whose dual translation equals the center separation. The fixed point is
//! implemented for configurations of one or two tracks; wider chains would
//! additionally couple transmission-weighted tails of interior windows.
//! The tracks of a multi-window configuration must share their phase
//! offset: the single flat correction inside the approximant telescopes
//! the interface values only then, and the windowed inversion inherits
//! that requirement.

use crate::dft::{adjoint_fstar, adjoint_gstar, sigma3_field, sigma3_pair};
use crate::error::{Error, Result};
use crate::evolve::solve_small_system;
use crate::fftutil::{fft_forward, fft_inverse};
use crate::field::{sigma3_pairing, FrequencyPair, SpinorField};
use crate::freeflow::{eval_s, recurse_profiles, sample_component, ProfileFamily};
use crate::hardy::{HalfLineSignal, Side};
use crate::jost::ScatteringData;
use crate::spectrum::DiscreteSpectrum;
use crate::track::{galilei_apply, ModelConfig, SolitonTrack};
use crate::window::ramp_up;
use num_complex::Complex64;

/// Options of the decomposition pipeline. The defaults satisfy the
/// crate-wide tolerance contract for well-separated two-track
/// configurations.
#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    /// Half-width of the smooth ramp replacing sharp window indicators.
    pub ramp_eps: f64,
    /// Update-norm tolerance, relative to the data size, at which the
    /// fixed-point iteration stops.
    pub tol_neumann: f64,
    /// Iteration cap of the fixed-point solve.
    pub max_iter: usize,
    /// Update-ratio threshold above which an iteration counts as
    /// non-contracting.
    pub rho_limit: f64,
    /// Number of consecutive non-contracting iterations that aborts the
    /// solve.
    pub rho_window: usize,
    /// Relative reconstruction residual above which a completed
    /// decomposition is rejected.
    pub tol_decomp: f64,
    /// Distance beyond a ramp's saturation kept by the class
    /// re-projection after each iterate, in length units.
    pub reproject_margin: f64,
    /// Transmission magnitude below which recovered seed content is
    /// discarded. The chain recursion divides by the downstream
    /// transmission coefficients, which vanish at zero comoving energy
    /// for generic wells, and inversion noise there would be amplified
    /// past the decomposition tolerance.
    pub recovery_s_floor: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            ramp_eps: 1.0,
            tol_neumann: 1e-8,
            max_iter: 200,
            rho_limit: 0.95,
            rho_window: 5,
            tol_decomp: 1e-3,
            reproject_margin: 6.0,
            recovery_s_floor: 0.2,
        }
    }
}

/// Result of pairing data against the boosted discrete bases.
#[derive(Debug, Clone)]
pub struct DiscreteProjection {
    /// Per track, one coefficient per basis vector of that track's
    /// discrete spectrum, in the basis order of the spectrum.
    pub coefficients: Vec<Vec<Complex64>>,
    /// Largest normalized cross-track pairing magnitude, the size of the
    /// couplings the per-track solve neglects.
    pub cross_coupling: f64,
}

/// State of the windowed-inversion fixed point: the per-interface
/// unknowns, the right-hand side from the windowed analyses of the data,
/// and the update norms of the iterations run so far.
#[derive(Debug, Clone)]
pub struct HardySystemState {
    /// Interface unknowns. Entry 0 carries the first cell's argument cut
    /// to its own side of the interface (dual support below the cut, the
    /// dual image of the spatial window), entry 1 the last cell's argument
    /// cut to the opposite side (dual support above its cut).
    pub unknowns: Vec<HalfLineSignal>,
    /// Windowed, unwound inverse analyses of the data, one per unknown.
    pub rhs: Vec<FrequencyPair>,
    /// Relative update norm after each completed iteration.
    pub residual_history: Vec<f64>,
}

/// Convergence report of the fixed-point solve.
#[derive(Debug, Clone)]
pub struct NeumannReport {
    /// Iterations run until the update dropped below tolerance.
    pub iterations: usize,
    /// Last observed update-norm ratio; the empirical contraction factor.
    pub rho: f64,
    /// Final relative update norm.
    pub final_update: f64,
}

/// A completed decomposition: data = S(0)(seed) + boosted discrete parts,
/// up to the recorded residual.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Profile chain of the recovered seed.
    pub family: ProfileFamily,
    /// Discrete coefficients per track, in spectrum basis order.
    pub discrete_parts: Vec<Vec<Complex64>>,
    /// Relative L² reconstruction residual.
    pub residual: f64,
    /// Measured stability constant: largest per-track profile-plus-mode
    /// size over the input size.
    pub stability: f64,
    /// Empirical contraction factor of the fixed-point solve.
    pub contraction: f64,
}

// undoes the Galilei boost of one track at t = 0: returns
// e^{−iσ₃(v(x+y)/2 + γ)} f(x + y), the left inverse of the boost
fn unwind(track: &SolitonTrack, f: &SpinorField) -> SpinorField {
    let mut out = f.shift(-track.y);
    let grid = f.grid;
    out.map_in_place(|j, v| {
        let ph = Complex64::from_polar(1.0, -track.theta(0.0, grid.node(j) + track.y));
        v[0] *= ph;
        v[1] *= ph.conj();
    });
    out
}

// multiplies a frequency pair by a mask in the dual variable. The dual
// position of e^{iXk} is +X; the flat synthesis sends that component to
// spatial position −X, so a spatial window w(x) on the synthesized field
// acts here as the reflected mask w(−X).
fn dual_multiply(u: &FrequencyPair, mask: impl Fn(f64) -> f64) -> FrequencyPair {
    let kg = u.kgrid;
    let n = kg.n_nodes();
    let half = (n - 1) / 2;
    let dual_step = 2.0 * std::f64::consts::PI / (n as f64 * kg.dk);
    let mut out = FrequencyPair::zeros(kg);
    let mut buf = vec![Complex64::default(); n];
    for c in 0..2 {
        for (j, v) in u.values.iter().enumerate() {
            buf[j] = v[c];
        }
        fft_forward(&mut buf);
        for (m, b) in buf.iter_mut().enumerate() {
            let wrapped = if m <= half { m as f64 } else { m as f64 - n as f64 };
            *b *= mask(wrapped * dual_step);
        }
        fft_inverse(&mut buf);
        for (j, v) in out.values.iter_mut().enumerate() {
            v[c] = buf[j];
        }
    }
    out
}

// sharp dual half-line cut at `cut`, splitting the boundary bin evenly
fn dual_cut(u: &FrequencyPair, cut: f64, keep_above: bool) -> FrequencyPair {
    dual_multiply(u, |x| {
        if (x - cut).abs() < 1e-12 {
            0.5
        } else if (x > cut) == keep_above {
            1.0
        } else {
            0.0
        }
    })
}

// frequency reflection k ↦ −k, componentwise; exact on the symmetric grid
fn flip(u: &FrequencyPair) -> FrequencyPair {
    let kg = u.kgrid;
    let mut out = FrequencyPair::zeros(kg);
    for j in 0..kg.n_nodes() {
        out.values[j] = u.values[kg.negate_index(j)];
    }
    out
}

// reflection coupling: out(k) = r(±k)·g(−k), with r read at −k when
// `at_neg_k` is set; the tails it weights stay on the analysis side of
// their interface because the reflection reverses the dual direction
fn reflect_couple(g: &FrequencyPair, data: &ScatteringData, at_neg_k: bool) -> FrequencyPair {
    let flipped = flip(g);
    let kg = g.kgrid;
    let mut out = FrequencyPair::zeros(kg);
    for j in 0..kg.n_nodes() {
        let k = kg.node(j);
        let arg = if at_neg_k { -k } else { k };
        let (_, r) = data.coeff_eval(arg);
        out.values[j] = [r * flipped.values[j][0], r * flipped.values[j][1]];
    }
    out
}

// carries the synthesis argument of track `a` into the frame of track
// `b`: a unitary change of comoving frequency and center whose dual
// translation is y_b − y_a. The phase offset does not enter: the argument
// entering the neighboring cell keeps the first track's offset, which is
// how consecutive chain profiles relate. `forward` maps a → b, the
// inverse maps back exactly.
fn frame_carry(g: &FrequencyPair, a: &SolitonTrack, b: &SolitonTrack, forward: bool) -> FrequencyPair {
    let dv = b.v - a.v;
    let dy = b.y - a.y;
    let kg = g.kgrid;
    FrequencyPair::from_fn(kg, |k| {
        let mut out = [Complex64::default(); 2];
        for c in 0..2 {
            let sigma = if c == 0 { 1.0 } else { -1.0 };
            let constant = Complex64::from_polar(1.0, -sigma * a.y * dv / 2.0);
            if forward {
                let ph = Complex64::from_polar(1.0, dy * k);
                out[c] = constant * ph * sample_component(g, c, k + sigma * dv / 2.0);
            } else {
                let shifted = k - sigma * dv / 2.0;
                let ph = Complex64::from_polar(1.0, -dy * shifted);
                out[c] = constant.conj() * ph * sample_component(g, c, shifted);
            }
        }
        out
    })
}

// removes the boost phases of one track from its synthesis argument:
// profile_c(κ) = e^{iσγ} e^{−iy(κ − σv/2)} u_c(κ − σv/2), zeroed on the
// excluded band where the coefficient tables never sample
fn argument_to_profile(u: &FrequencyPair, track: &SolitonTrack, k_floor: f64) -> FrequencyPair {
    FrequencyPair::from_fn(u.kgrid, |kappa| {
        if kappa.abs() < k_floor {
            return [Complex64::default(); 2];
        }
        let mut out = [Complex64::default(); 2];
        for c in 0..2 {
            let sigma = if c == 0 { 1.0 } else { -1.0 };
            let shifted = kappa - sigma * track.v / 2.0;
            let ph = Complex64::from_polar(1.0, sigma * track.gamma - track.y * shifted);
            out[c] = ph * sample_component(u, c, shifted);
        }
        out
    })
}

/// Pairs `f` against the Galilei-boosted discrete basis of every track at
/// time `t` and solves the per-track σ₃ Gram systems. Cross-track
/// pairings are neglected and their largest normalized size reported.
pub fn project_discrete_at(
    f: &SpinorField,
    config: &ModelConfig,
    spectra: &[DiscreteSpectrum],
    t: f64,
) -> Result<DiscreteProjection> {
    if spectra.len() != config.tracks.len() {
        return Err(Error::ConfigError(format!(
            "need one discrete spectrum per track: {} spectra for {} tracks",
            spectra.len(),
            config.tracks.len()
        )));
    }
    let mut boosted: Vec<Vec<SpinorField>> = Vec::with_capacity(spectra.len());
    for (tr, spec) in config.tracks.iter().zip(spectra) {
        boosted.push(spec.basis().iter().map(|b| galilei_apply(tr, b, t)).collect());
    }
    let mut coefficients = Vec::with_capacity(boosted.len());
    for bank in &boosted {
        if bank.is_empty() {
            coefficients.push(Vec::new());
            continue;
        }
        let n = bank.len();
        // residual condition: ⟨f − Σ c_l b_l, σ₃ b_m⟩ = 0 for every m
        let mut gram = vec![vec![Complex64::default(); n]; n];
        let mut rhs = vec![Complex64::default(); n];
        for m in 0..n {
            for l in 0..n {
                gram[m][l] = sigma3_pairing(&bank[l], &bank[m]);
            }
            rhs[m] = sigma3_pairing(f, &bank[m]);
        }
        coefficients.push(solve_small_system(&gram, &rhs)?);
    }
    let mut cross = 0.0f64;
    for (li, bi) in boosted.iter().enumerate() {
        for (lj, bj) in boosted.iter().enumerate() {
            if li == lj {
                continue;
            }
            for u in bi {
                for w in bj {
                    let scale = (u.l2_norm() * w.l2_norm()).max(1e-300);
                    cross = cross.max(sigma3_pairing(u, w).norm() / scale);
                }
            }
        }
    }
    Ok(DiscreteProjection { coefficients, cross_coupling: cross })
}

/// Pairs `f` against the boosted discrete bases at t = 0; the fast
/// decomposition path for the discrete part.
pub fn window_project_discrete(
    f: &SpinorField,
    config: &ModelConfig,
    spectra: &[DiscreteSpectrum],
) -> Result<DiscreteProjection> {
    project_discrete_at(f, config, spectra, 0.0)
}

/// Synthesizes the boosted discrete parts at time `t` from per-track
/// coefficients in spectrum basis order.
pub fn discrete_reconstruction(
    coefficients: &[Vec<Complex64>],
    config: &ModelConfig,
    spectra: &[DiscreteSpectrum],
    t: f64,
    grid: crate::grid::Grid1D,
) -> SpinorField {
    let mut out = SpinorField::zeros(grid);
    for ((tr, spec), coeffs) in config.tracks.iter().zip(spectra).zip(coefficients) {
        for (c, b) in coeffs.iter().zip(spec.basis()) {
            out.add_scaled(*c, &galilei_apply(tr, b, t));
        }
    }
    out
}

/// Continuous-spectrum projection by the fast path: removes the boosted
/// discrete parts reconstructed from the per-track Gram solves at time
/// `t`. Idempotent up to the neglected cross-track couplings.
pub fn apply_pc(
    f: &SpinorField,
    t: f64,
    config: &ModelConfig,
    spectra: &[DiscreteSpectrum],
) -> Result<SpinorField> {
    let proj = project_discrete_at(f, config, spectra, t)?;
    let rec = discrete_reconstruction(&proj.coefficients, config, spectra, t, f.grid);
    let mut out = f.clone();
    out.add_scaled(Complex64::new(-1.0, 0.0), &rec);
    Ok(out)
}

// interface cut positions in the comoving frames of the two cells: the
// midpoint of the centers, recentered at each track
fn interface_cuts(config: &ModelConfig) -> (f64, f64) {
    let mid = (config.tracks[0].y + config.tracks[1].y) / 2.0;
    (mid - config.tracks[0].y, mid - config.tracks[1].y)
}

/// Windowed inverse analyses of `f`, one per interface unknown.
///
/// Each cell of the configuration is cut out by a smooth ramp at the
/// center midpoint, unwound to its track's comoving frame, and passed
/// through the inverse of the distorted synthesis that represents S(0)
/// there: the first cell through σ₃F*σ₃ (the form flat on the interface
/// side), the last cell through σ₃G*σ₃. For one track the single analysis
/// is unwindowed.
pub fn assemble_b_maps(
    f: &SpinorField,
    config: &ModelConfig,
    data: &[ScatteringData],
    opts: &DecomposeOptions,
) -> Result<Vec<FrequencyPair>> {
    let m = config.tracks.len();
    if data.len() != m {
        return Err(Error::ConfigError("need one scattering table per track".into()));
    }
    if m == 1 {
        let z = unwind(&config.tracks[0], f);
        return Ok(vec![sigma3_pair(&adjoint_fstar(&sigma3_field(&z), &data[0]))]);
    }
    if m != 2 {
        return Err(Error::ConfigError(format!(
            "windowed inversion supports one or two tracks, got {m}"
        )));
    }
    let grid = f.grid;
    let mid = (config.tracks[0].y + config.tracks[1].y) / 2.0;
    let mut right = f.clone();
    let mut left = f.clone();
    for j in 0..grid.n_x {
        let w = ramp_up(grid.node(j), mid, opts.ramp_eps);
        for c in 0..2 {
            right.values[j][c] *= w;
            left.values[j][c] *= 1.0 - w;
        }
    }
    let z0 = unwind(&config.tracks[0], &right);
    let z1 = unwind(&config.tracks[1], &left);
    Ok(vec![
        sigma3_pair(&adjoint_fstar(&sigma3_field(&z0), &data[0])),
        sigma3_pair(&adjoint_gstar(&sigma3_field(&z1), &data[1])),
    ])
}

/// Assembles the fixed-point state for `f`: right-hand side from
/// [`assemble_b_maps`], unknowns initialized to zero.
pub fn hardy_system(
    f: &SpinorField,
    config: &ModelConfig,
    data: &[ScatteringData],
    opts: &DecomposeOptions,
) -> Result<HardySystemState> {
    let rhs = assemble_b_maps(f, config, data, opts)?;
    let kg = rhs[0].kgrid;
    let unknowns = rhs
        .iter()
        .enumerate()
        .map(|(i, _)| HalfLineSignal {
            pair: FrequencyPair::zeros(kg),
            side: if i == 0 { Side::Minus } else { Side::Plus },
        })
        .collect();
    Ok(HardySystemState { unknowns, rhs, residual_history: Vec::new() })
}

// the coupling map of the two-track system: each unknown, carried into
// the neighboring frame, is the other cell's argument tail beyond its
// interface exactly, because the ramp masks of the two cells are
// complementary after the dual translation of the frame carry; the
// neighbor weights it by its reflection coefficient at the reflected
// frequency
fn coupling(
    p: &FrequencyPair,
    q: &FrequencyPair,
    config: &ModelConfig,
    data: &[ScatteringData],
) -> (FrequencyPair, FrequencyPair) {
    let t0 = &config.tracks[0];
    let t1 = &config.tracks[1];
    let coup_p = reflect_couple(&frame_carry(q, t0, t1, false), &data[0], true);
    let coup_q = reflect_couple(&frame_carry(p, t0, t1, true), &data[1], false);
    (coup_p, coup_q)
}

// sharp class re-projection past the saturated edge of the window ramp:
// the dual cut of unknown 0 sits at −x₀ (keep below), of unknown 1 at
// −x₁ (keep above), offset outward by the margin
fn reproject(u: &FrequencyPair, spatial_cut: f64, side: Side, opts: &DecomposeOptions) -> FrequencyPair {
    match side {
        Side::Plus => dual_cut(u, -spatial_cut - opts.reproject_margin, true),
        Side::Minus => dual_cut(u, -spatial_cut + opts.reproject_margin, false),
    }
}

/// Runs the fixed-point iteration g ← h + M g on the interface unknowns
/// until the relative update norm drops below the tolerance.
///
/// Every iterate is re-projected onto its dual half-line; drift out of
/// the class is a discretization artifact. Fails with
/// [`Error::NotContracting`] when the update ratio stays at or above the
/// configured limit for the configured number of consecutive iterations,
/// or when the iteration cap is reached.
pub fn neumann_solve(
    state: &mut HardySystemState,
    config: &ModelConfig,
    data: &[ScatteringData],
    opts: &DecomposeOptions,
) -> Result<NeumannReport> {
    if config.tracks.len() == 1 {
        state.unknowns[0].pair = state.rhs[0].clone();
        state.residual_history.push(0.0);
        return Ok(NeumannReport { iterations: 1, rho: 0.0, final_update: 0.0 });
    }
    let (x0, x1) = interface_cuts(config);
    let scale = state.rhs.iter().map(|b| b.l2_norm()).fold(0.0f64, f64::max).max(1e-300);
    let mut prev_update = f64::INFINITY;
    let mut rho = 0.0;
    let mut stall = 0usize;
    for iter in 1..=opts.max_iter {
        let p = &state.unknowns[0].pair;
        let q = &state.unknowns[1].pair;
        let (cp, cq) = coupling(p, q, config, data);
        let mut new_p = state.rhs[0].clone();
        new_p.add_scaled(Complex64::new(1.0, 0.0), &cp);
        let new_p = reproject(&new_p, x0, Side::Minus, opts);
        let mut new_q = state.rhs[1].clone();
        new_q.add_scaled(Complex64::new(1.0, 0.0), &cq);
        let new_q = reproject(&new_q, x1, Side::Plus, opts);
        let update = (new_p.sub(p).l2_norm().powi(2) + new_q.sub(q).l2_norm().powi(2)).sqrt() / scale;
        state.unknowns[0].pair = new_p;
        state.unknowns[1].pair = new_q;
        state.residual_history.push(update);
        if update < opts.tol_neumann {
            return Ok(NeumannReport { iterations: iter, rho, final_update: update });
        }
        if prev_update.is_finite() && prev_update > 0.0 {
            rho = update / prev_update;
            if rho >= opts.rho_limit {
                stall += 1;
                if stall >= opts.rho_window {
                    return Err(Error::NotContracting { rho, window: stall });
                }
            } else {
                stall = 0;
            }
        }
        prev_update = update;
    }
    Err(Error::NotContracting { rho, window: opts.rho_window })
}

/// Relative re-substitution residual ‖g − M g − h‖ / ‖h‖ of the current
/// unknowns, without re-projection.
pub fn system_residual(
    state: &HardySystemState,
    config: &ModelConfig,
    data: &[ScatteringData],
) -> f64 {
    let scale = state.rhs.iter().map(|b| b.l2_norm()).fold(0.0f64, f64::max).max(1e-300);
    if config.tracks.len() == 1 {
        return state.unknowns[0].pair.sub(&state.rhs[0]).l2_norm() / scale;
    }
    let p = &state.unknowns[0].pair;
    let q = &state.unknowns[1].pair;
    let (cp, cq) = coupling(p, q, config, data);
    let mut rp = p.sub(&cp);
    rp.add_scaled(Complex64::new(-1.0, 0.0), &state.rhs[0]);
    let mut rq = q.sub(&cq);
    rq.add_scaled(Complex64::new(-1.0, 0.0), &state.rhs[1]);
    (rp.l2_norm().powi(2) + rq.l2_norm().powi(2)).sqrt() / scale
}

// reconstructs the first track's synthesis argument from the converged
// unknowns: its own-side cut plus the complementary tail, which is
// exactly the last cell's unknown carried back into the first frame
fn first_argument(state: &HardySystemState, config: &ModelConfig) -> FrequencyPair {
    if config.tracks.len() == 1 {
        return state.unknowns[0].pair.clone();
    }
    let carried = frame_carry(&state.unknowns[1].pair, &config.tracks[0], &config.tracks[1], false);
    let mut u = state.unknowns[0].pair.clone();
    u.add_scaled(Complex64::new(1.0, 0.0), &carried);
    u
}

/// Decomposes `f` into a scattering profile plus boosted discrete parts:
/// windowed inversion, fixed-point solve, seed recovery, profile
/// recursion, and discrete projection of the remainder.
///
/// Fails with [`Error::DecompositionFailed`] when the relative L²
/// reconstruction residual exceeds the configured tolerance.
pub fn full_decompose(
    f: &SpinorField,
    config: &ModelConfig,
    data: &[ScatteringData],
    spectra: &[DiscreteSpectrum],
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    let mut state = hardy_system(f, config, data, opts)?;
    let report = neumann_solve(&mut state, config, data, opts)?;
    let u0 = first_argument(&state, config);
    let mut phi = argument_to_profile(&u0, &config.tracks[0], data[0].k_floor);
    // discard content the inversion cannot resolve: frequencies where a
    // downstream chain divisor is below the transmission floor, and the
    // images of the analyses' excluded bands, whose stencil fill is noise
    let band = data[0].k_floor + 2.0 * phi.kgrid.dk;
    let v0 = config.tracks[0].v;
    for j in 0..phi.kgrid.n_nodes() {
        let kappa = phi.kgrid.node(j);
        for c in 0..2 {
            let sigma = if c == 0 { 1.0 } else { -1.0 };
            let mut drop = (kappa - sigma * v0 / 2.0).abs() < band;
            for (ell, tr) in config.tracks.iter().enumerate().skip(1) {
                drop |= (kappa - sigma * (v0 + tr.v) / 2.0).abs() < band;
                let (s, _) = data[ell].coeff_eval(kappa - sigma * tr.v / 2.0);
                drop |= s.norm() < opts.recovery_s_floor;
            }
            if drop {
                phi.values[j][c] = Complex64::default();
            }
        }
    }
    let family = recurse_profiles(&phi, config, data)?;
    let s0 = eval_s(&family, data, 0.0)?;
    let mut remainder = f.clone();
    remainder.add_scaled(Complex64::new(-1.0, 0.0), &s0);
    let proj = window_project_discrete(&remainder, config, spectra)?;
    let rec = discrete_reconstruction(&proj.coefficients, config, spectra, 0.0, f.grid);
    let residual_field = remainder.sub(&rec);
    let fnorm = f.l2_norm().max(1e-300);
    let residual = residual_field.l2_norm() / fnorm;
    if residual > opts.tol_decomp {
        return Err(Error::DecompositionFailed { residual, tolerance: opts.tol_decomp });
    }
    let mut stability = 0.0f64;
    for (ell, p) in family.per_ell.iter().enumerate() {
        let mode_norm = if ell < proj.coefficients.len() {
            let mut part = SpinorField::zeros(f.grid);
            for (c, b) in proj.coefficients[ell].iter().zip(spectra[ell].basis()) {
                part.add_scaled(*c, b);
            }
            part.l2_norm()
        } else {
            0.0
        };
        stability = stability.max((p.l2_norm() + mode_norm) / fnorm);
    }
    Ok(Decomposition {
        family,
        discrete_parts: proj.coefficients,
        residual,
        stability,
        contraction: report.rho,
    })
}

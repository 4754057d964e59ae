//! Time integration of the nonlinear system (primitive and perturbation
//! forms), the modified parabolic system, and exact linear evolution via
//! Green symbols, with stability guards and energy diagnostics.
//!
//! The semi-implicit spectral scheme treats the constant-coefficient linear
//! part exactly per mode (the acoustic pair by its 2x2 Green symbol over one
//! step, the phase channel by its damped-heat factor) and the nonlinear
//! terms explicitly with a second-order Heun stage in the integrating-factor
//! frame. This removes the stiffness constraints tied to the damping rate
//! and to xi^2.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid1D, Spectrum};
use crate::model::{
    convert_representation, ModelParams, Representation, StateTriple, TermEvaluator,
};
use crate::spectral::{green_symbol, symbol_matrix, Mat2, SystemKind};

type C64 = Complex64;

/// Time integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    /// Exact integrating factor for the linear part, Heun for the rest.
    SemiImplicitSpectral,
    /// Classic explicit RK4 on the full right side (ablation; stiff).
    ExplicitRk4,
}

/// Pointwise admissibility bounds enforced during a run.
#[derive(Clone, Copy, Debug)]
pub struct GuardBounds {
    pub v_lo: f64,
    pub v_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
}

impl GuardBounds {
    pub fn from_params(params: &ModelParams) -> Self {
        let (v_lo, v_hi) = params.volume_bounds();
        let (phi_lo, phi_hi) = params.phase_bounds();
        Self { v_lo, v_hi, phi_lo, phi_hi }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Absolute time of the initial state (nonzero when resuming).
    pub start_time: f64,
    pub integrator: Integrator,
    /// Steps between norm-record snapshots.
    pub snapshot_stride: usize,
    /// Steps between stored full states; 0 keeps only the final state.
    pub state_stride: usize,
    /// Sobolev order s of the energy functionals.
    pub sobolev_order: usize,
    /// Mixing weight of the Lyapunov cross term.
    pub beta1: f64,
    pub dealias: bool,
    pub floor_correct: bool,
    /// Guard bounds; derived from the model parameters when absent.
    pub guard: Option<GuardBounds>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            t_final: 300.0,
            start_time: 0.0,
            integrator: Integrator::SemiImplicitSpectral,
            snapshot_stride: 25,
            state_stride: 0,
            sobolev_order: 3,
            beta1: 0.05,
            dealias: true,
            floor_correct: true,
            guard: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final > self.start_time) {
            return Err(Error::Parameter("final time must exceed the start time".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Parameter("snapshot stride must be positive".into()));
        }
        if self.sobolev_order == 0 || self.sobolev_order > MAX_SOBOLEV_ORDER {
            return Err(Error::Parameter(format!(
                "sobolev order must lie in 1..={MAX_SOBOLEV_ORDER}"
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::Parameter(format!("beta1 must lie in [0, 1), got {}", self.beta1)));
        }
        let _ = self.steps()?;
        Ok(())
    }

    /// Number of steps; dt * steps must reproduce the span within one step.
    pub fn steps(&self) -> Result<usize> {
        let span = self.t_final - self.start_time;
        let steps = (span / self.dt).round();
        if steps < 1.0 {
            return Err(Error::Parameter("fewer than one step in the requested span".into()));
        }
        if (steps * self.dt - span).abs() > self.dt {
            return Err(Error::Parameter(format!(
                "dt={} does not divide the time span {span} within one step",
                self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// Per-snapshot norm and energy record.
#[derive(Clone, Debug)]
pub struct SnapshotRecord {
    pub time: f64,
    /// ||D^l (n, w)||_{L^2} for l = 0..=s (floor-corrected when enabled).
    pub l2_pair: Vec<f64>,
    /// ||(n, w)||_{H^s}, floor-corrected when enabled.
    pub hs_pair: f64,
    /// ||phi'||_{H^s}.
    pub hs_phase: f64,
    pub l1_pair: f64,
    pub linf_pair: f64,
    pub l1_phase: f64,
    pub linf_phase: f64,
    /// E_l^s for l = 0..=s.
    pub energy: Vec<f64>,
    /// Running time-weighted sup M(t).
    pub m_weighted: f64,
    pub lyapunov: f64,
}

/// Per-step scalar diagnostics (cheap modal sums).
#[derive(Clone, Debug, Default)]
pub struct StepDiagnostics {
    pub times: Vec<f64>,
    pub lyapunov: Vec<f64>,
    /// Cumulative dissipation integral
    /// int (||w_x||_{H^s}^2 + ||phi||_{H^{s+1}}^2 + ||n_x||_{H^{s-1}}^2) dt.
    pub dissipation_integral: Vec<f64>,
}

/// Observed pointwise range of the guarded quantities over a run.
#[derive(Clone, Copy, Debug)]
pub struct GuardRange {
    pub v_min: f64,
    pub v_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl Default for GuardRange {
    fn default() -> Self {
        Self {
            v_min: f64::INFINITY,
            v_max: f64::NEG_INFINITY,
            phi_min: f64::INFINITY,
            phi_max: f64::NEG_INFINITY,
        }
    }
}

impl GuardRange {
    fn absorb(&mut self, other: &GuardRange) {
        self.v_min = self.v_min.min(other.v_min);
        self.v_max = self.v_max.max(other.v_max);
        self.phi_min = self.phi_min.min(other.phi_min);
        self.phi_max = self.phi_max.max(other.phi_max);
    }
}

/// Result of a time-integration run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<SnapshotRecord>,
    pub step: StepDiagnostics,
    /// Sparse full-state snapshots (time, state), per `state_stride`.
    pub snapshots: Vec<(f64, StateTriple)>,
    pub final_state: StateTriple,
    pub final_time: f64,
    pub guard_range: GuardRange,
}

/// Per-snapshot record of the difference between the two systems.
#[derive(Clone, Debug)]
pub struct DiffRecord {
    pub time: f64,
    /// ||D^k (n - n~, w - w~)||_{L^2} for k = 0..=s-1.
    pub l2_pair: Vec<f64>,
    /// E-bar_k^s for k = 0..=s-1.
    pub e_bar: Vec<f64>,
    /// ||phi - phi~||_{H^s}.
    pub hs_phase: f64,
    pub l1_pair: f64,
    pub linf_pair: f64,
    pub l1_phase: f64,
    pub linf_phase: f64,
}

/// Co-evolution of the full and parabolic systems from shared initial data.
#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub full: Trajectory,
    pub parabolic: Trajectory,
    pub diffs: Vec<DiffRecord>,
}

/// Energy record of the spec'd diagnostic operation.
#[derive(Clone, Debug)]
pub struct EnergyRecord {
    pub time: f64,
    /// E_l^s for l = 0..=s.
    pub e_ls: Vec<f64>,
    pub m_t: f64,
    pub lyapunov: f64,
    /// E-bar_k^s for difference trajectories.
    pub e_bar_ks: Option<Vec<f64>>,
}

/// Gaussian-bump initial perturbation family with optional seeded noise.
#[derive(Clone, Copy, Debug)]
pub struct InitialData {
    pub delta0: f64,
    /// Width of the (n, w) bumps.
    pub sigma: f64,
    /// Width of the phase bump.
    pub sigma_phase: f64,
    /// Per-channel amplitude multipliers on delta0.
    pub amp_n: f64,
    pub amp_w: f64,
    pub amp_phi: f64,
    pub center: f64,
    /// Relative amplitude of band-limited seeded noise (0 disables).
    pub noise_amp: f64,
    pub seed: u64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            delta0: 0.01,
            sigma: 2.0,
            sigma_phase: 4.0,
            amp_n: 1.0,
            amp_w: 1.0,
            amp_phi: 1.0,
            center: 0.0,
            noise_amp: 0.0,
            seed: 0,
        }
    }
}

impl InitialData {
    /// Build the perturbation-form initial state on the given grid.
    pub fn build(&self, grid: &Arc<Grid1D>) -> StateTriple {
        use rand::Rng;
        use rand::SeedableRng;
        let mut n = grid::gaussian_bump(grid.clone(), self.center, self.sigma, self.delta0 * self.amp_n);
        let mut w = grid::gaussian_bump(grid.clone(), self.center, self.sigma, self.delta0 * self.amp_w);
        let mut phi =
            grid::gaussian_bump(grid.clone(), self.center, self.sigma_phase, self.delta0 * self.amp_phi);
        if self.noise_amp > 0.0 {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(self.seed);
            let nn = grid.len();
            for (field, sigma) in [(&mut n, self.sigma), (&mut w, self.sigma), (&mut phi, self.sigma_phase)] {
                let mut spec = Spectrum::zeros(grid.clone());
                for m in 1..=(nn / 8) {
                    let xi = grid.wavenumber(m);
                    let envelope = (-0.5 * (xi * sigma).powi(2)).exp();
                    let amp = self.noise_amp * self.delta0 * envelope * rng.gen_range(-1.0..1.0);
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    let z = C64::new(amp * phase.cos(), amp * phase.sin());
                    spec.modes_mut()[m] = z;
                    spec.modes_mut()[nn - m] = z.conj();
                }
                *field = field.add(&grid::inverse(&spec));
            }
        }
        StateTriple::new(n, w, phi, Representation::Perturbation)
    }
}

// ---------------------------------------------------------------------------
// Internal spectral machinery
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct ModeState {
    n: Vec<C64>,
    w: Vec<C64>,
    phi: Vec<C64>,
}

impl ModeState {
    fn zeros(n: usize) -> Self {
        Self { n: vec![C64::default(); n], w: vec![C64::default(); n], phi: vec![C64::default(); n] }
    }
}

/// Preallocated working memory for one run; every per-step buffer lives
/// here so the hot loop never touches the allocator.
struct ForcingScratch {
    work: Vec<C64>,
    fft: Vec<C64>,
    n_phys: Vec<f64>,
    nx_phys: Vec<f64>,
    wx_phys: Vec<f64>,
    phi_phys: Vec<f64>,
    phix_phys: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    m1: Vec<C64>,
    m2: Vec<C64>,
    m3: Vec<C64>,
}

struct StepScratch {
    k1: ModeState,
    k2: ModeState,
    k3: ModeState,
    k4: ModeState,
    ps: ModeState,
    pk1: ModeState,
    stage: ModeState,
}

struct Scratch {
    f: ForcingScratch,
    s: StepScratch,
}

impl Scratch {
    fn new(n: usize, fft_scratch_len: usize) -> Self {
        Self {
            f: ForcingScratch {
                work: vec![C64::default(); n],
                fft: vec![C64::default(); fft_scratch_len],
                n_phys: vec![0.0; n],
                nx_phys: vec![0.0; n],
                wx_phys: vec![0.0; n],
                phi_phys: vec![0.0; n],
                phix_phys: vec![0.0; n],
                g: vec![0.0; n],
                h: vec![0.0; n],
                m1: vec![C64::default(); n],
                m2: vec![C64::default(); n],
                m3: vec![C64::default(); n],
            },
            s: StepScratch {
                k1: ModeState::zeros(n),
                k2: ModeState::zeros(n),
                k3: ModeState::zeros(n),
                k4: ModeState::zeros(n),
                ps: ModeState::zeros(n),
                pk1: ModeState::zeros(n),
                stage: ModeState::zeros(n),
            },
        }
    }
}

fn spectrum_of(grid: &Arc<Grid1D>, modes: &[C64]) -> Spectrum {
    Spectrum::from_modes(grid.clone(), modes.to_vec()).expect("mode count matches grid")
}

fn physical(grid: &Arc<Grid1D>, modes: &[C64]) -> Field {
    grid::inverse(&spectrum_of(grid, modes))
}

fn derivative_physical(grid: &Arc<Grid1D>, modes: &[C64]) -> Field {
    let mut s = spectrum_of(grid, modes);
    s.derivative_in_place(1);
    grid::inverse(&s)
}

/// Shared per-run constants of one system.
struct Engine {
    grid: Arc<Grid1D>,
    params: ModelParams,
    ev: TermEvaluator,
    guard: GuardBounds,
    dealias: bool,
    /// exp(dt * L-hat) per mode for the acoustic pair.
    pair_prop: Vec<Mat2>,
    /// exp(-dt (rate + eps xi^2)) per mode for the phase channel.
    phase_prop: Vec<f64>,
    /// Linear symbols for the explicit integrator.
    pair_symbol: Vec<Mat2>,
    phase_symbol: Vec<f64>,
    /// i * xi per mode.
    ixi: Vec<C64>,
    dealias_keep: Vec<bool>,
}

impl Engine {
    fn new(
        grid: Arc<Grid1D>,
        params: &ModelParams,
        which: SystemKind,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        params.validate()?;
        let n = grid.len();
        let mut pair_prop = Vec::with_capacity(n);
        let mut pair_symbol = Vec::with_capacity(n);
        let mut phase_prop = Vec::with_capacity(n);
        let mut phase_symbol = Vec::with_capacity(n);
        let mut ixi = Vec::with_capacity(n);
        let mut dealias_keep = Vec::with_capacity(n);
        // The phase damping rate differs between the two systems.
        let rate = match which {
            SystemKind::Nsac => params.damping_rate(),
            SystemKind::Parabolic => params.interface_thickness,
        };
        let eps = params.interface_thickness;
        let cut = n as i64 / 3;
        for k in 0..n {
            let xi = grid.wavenumber(k);
            pair_prop.push(green_symbol(xi, cfg.dt, params, which)?.matrix);
            pair_symbol.push(symbol_matrix(xi, params, which)?);
            let lin = rate + eps * xi * xi;
            phase_prop.push((-cfg.dt * lin).exp());
            phase_symbol.push(-lin);
            ixi.push(C64::new(0.0, xi));
            let signed = if (k as i64) < n as i64 / 2 { k as i64 } else { k as i64 - n as i64 };
            dealias_keep.push(signed.abs() <= cut || !cfg.dealias);
        }
        Ok(Self {
            guard: cfg.guard.unwrap_or_else(|| GuardBounds::from_params(params)),
            ev: TermEvaluator::new(params)?,
            grid,
            params: *params,
            dealias: cfg.dealias,
            pair_prop,
            phase_prop,
            pair_symbol,
            phase_symbol,
            ixi,
            dealias_keep,
        })
    }

    fn apply_propagator_into(&self, st: &ModeState, out: &mut ModeState) {
        for k in 0..st.n.len() {
            let [a, b] = self.pair_prop[k].apply([st.n[k], st.w[k]]);
            out.n[k] = a;
            out.w[k] = b;
            out.phi[k] = st.phi[k] * self.phase_prop[k];
        }
    }

    fn forward_modes(&self, f: &Field) -> Vec<C64> {
        grid::forward(f).modes().to_vec()
    }

    /// Physical samples of two hermitian mode vectors with one inverse FFT
    /// (packing the real pair into one complex signal).
    fn inverse_pair_into(
        &self,
        a: &[C64],
        b: &[C64],
        re: &mut [f64],
        im: &mut [f64],
        work: &mut [C64],
        fft: &mut [C64],
    ) {
        let i = C64::new(0.0, 1.0);
        for (k, slot) in work.iter_mut().enumerate() {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            *slot = (a[k] + i * b[k]) * s;
        }
        self.grid.fft_inverse_scratch(work, fft);
        for (k, z) in work.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
    }

    fn inverse_single_into(&self, a: &[C64], re: &mut [f64], work: &mut [C64], fft: &mut [C64]) {
        for (k, slot) in work.iter_mut().enumerate() {
            *slot = if k % 2 == 0 { a[k] } else { -a[k] };
        }
        self.grid.fft_inverse_scratch(work, fft);
        for (k, z) in work.iter().enumerate() {
            re[k] = z.re;
        }
    }

    /// Mode vectors of two real sample arrays with one forward FFT.
    fn forward_pair_into(
        &self,
        f: &[f64],
        g: &[f64],
        fh: &mut [C64],
        gh: &mut [C64],
        work: &mut [C64],
        fft: &mut [C64],
    ) {
        let n = f.len();
        for (k, slot) in work.iter_mut().enumerate() {
            *slot = C64::new(f[k], g[k]);
        }
        self.grid.fft_forward_scratch(work, fft);
        let inv_n = 1.0 / n as f64;
        for k in 0..n {
            let km = if k == 0 { 0 } else { n - k };
            let zk = work[k];
            let zm = work[km].conj();
            let s = if k % 2 == 0 { inv_n } else { -inv_n };
            fh[k] = (zk + zm) * (0.5 * s);
            gh[k] = (zk - zm) * C64::new(0.0, -0.5 * s);
        }
    }

    /// i * xi multiplication with the Nyquist mode zeroed (odd derivative).
    fn derivative_into(&self, a: &[C64], out: &mut [C64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = a[k] * self.ixi[k];
        }
        out[a.len() / 2] = C64::default();
    }

    fn fft_scratch_len(&self) -> usize {
        self.grid.fft_scratch_len()
    }

    fn guard_check(&self, t: f64, n: &[f64], phi: Option<&[f64]>) -> Result<GuardRange> {
        let mut range = GuardRange::default();
        let vbar = self.params.reference_volume;
        for &nv in n {
            if !nv.is_finite() {
                return Err(Error::BlowUp { time: t, channel: "volume" });
            }
            let v = nv + vbar;
            range.v_min = range.v_min.min(v);
            range.v_max = range.v_max.max(v);
            if v < self.guard.v_lo || v > self.guard.v_hi {
                return Err(Error::GuardViolation {
                    time: t,
                    channel: "v",
                    value: v,
                    lo: self.guard.v_lo,
                    hi: self.guard.v_hi,
                });
            }
        }
        if let Some(phi) = phi {
            for &pv in phi {
                if !pv.is_finite() {
                    return Err(Error::BlowUp { time: t, channel: "phase" });
                }
                let p = pv + 1.0;
                range.phi_min = range.phi_min.min(p);
                range.phi_max = range.phi_max.max(p);
                if p < self.guard.phi_lo || p > self.guard.phi_hi {
                    return Err(Error::GuardViolation {
                        time: t,
                        channel: "phi",
                        value: p,
                        lo: self.guard.phi_lo,
                        hi: self.guard.phi_hi,
                    });
                }
            }
        }
        Ok(range)
    }

    fn dealias_modes(&self, modes: &mut [C64]) {
        if !self.dealias {
            return;
        }
        for (m, keep) in modes.iter_mut().zip(&self.dealias_keep) {
            if !keep {
                *m = C64::default();
            }
        }
    }

    /// Nonlinear forcing of the perturbation form: F_w = d/dx (f1+f2+f3),
    /// F_phi = f4 + f5. Also performs the guard check when requested.
    fn perturbation_forcing(
        &self,
        t: f64,
        st: &ModeState,
        check: bool,
        s: &mut ForcingScratch,
        out: &mut ModeState,
    ) -> Result<Option<GuardRange>> {
        let len = self.grid.len();
        self.derivative_into(&st.n, &mut s.m1);
        self.derivative_into(&st.w, &mut s.m2);
        self.derivative_into(&st.phi, &mut s.m3);
        self.inverse_pair_into(&st.n, &s.m1, &mut s.n_phys, &mut s.nx_phys, &mut s.work, &mut s.fft);
        self.inverse_pair_into(&st.phi, &s.m3, &mut s.phi_phys, &mut s.phix_phys, &mut s.work, &mut s.fft);
        self.inverse_single_into(&s.m2, &mut s.wx_phys, &mut s.work, &mut s.fft);
        let range = if check {
            Some(self.guard_check(t, &s.n_phys, Some(&s.phi_phys))?)
        } else {
            None
        };
        for j in 0..len {
            let f = self.ev.eval(s.n_phys[j], s.nx_phys[j], s.wx_phys[j], s.phi_phys[j], s.phix_phys[j]);
            s.g[j] = f[0] + f[1] + f[2];
            s.h[j] = f[3] + f[4];
        }
        self.forward_pair_into(&s.g, &s.h, &mut s.m1, &mut s.m2, &mut s.work, &mut s.fft);
        for k in 0..len {
            out.n[k] = C64::default();
            out.w[k] = self.ixi[k] * s.m1[k];
            out.phi[k] = s.m2[k];
        }
        self.dealias_modes(&mut out.w);
        self.dealias_modes(&mut out.phi);
        Ok(range)
    }

    /// Nonlinear remainder of the primitive form: the full right side of the
    /// Lagrangian system minus the constant-coefficient linear part, an
    /// algebraically independent route to the same forcing. Used for short
    /// cross-validation runs; allocates per call.
    fn primitive_remainder(
        &self,
        t: f64,
        st: &ModeState,
        check: bool,
        out: &mut ModeState,
    ) -> Result<Option<GuardRange>> {
        let grid = &self.grid;
        let params = &self.params;
        let vbar = params.reference_volume;
        let eps = params.interface_thickness;
        let n_phys = physical(grid, &st.n);
        let wx_phys = derivative_physical(grid, &st.w);
        let phi_phys = physical(grid, &st.phi);
        let phix_phys = derivative_physical(grid, &st.phi);
        let range = if check {
            Some(self.guard_check(t, n_phys.values(), Some(phi_phys.values()))?)
        } else {
            None
        };
        let len = grid.len();
        // u-equation flux terms, evaluated on primitive variables.
        let mut p_of_v = vec![0.0; len];
        let mut visc = vec![0.0; len];
        let mut capill = vec![0.0; len];
        let mut phix_over_v = vec![0.0; len];
        for j in 0..len {
            let v = n_phys.values()[j] + vbar;
            let ph = phi_phys.values()[j] + 1.0;
            let px = phix_phys.values()[j];
            p_of_v[j] = params.pressure.value_unchecked(v);
            visc[j] = params.viscosity.value_unchecked(v) * wx_phys.values()[j];
            capill[j] = eps / 8.0 * px * px / (ph * v * v);
            phix_over_v[j] = px / v;
        }
        let p_hat = self.forward_modes(&Field::from_values(grid.clone(), p_of_v)?);
        let visc_hat = self.forward_modes(&Field::from_values(grid.clone(), visc)?);
        let cap_hat = self.forward_modes(&Field::from_values(grid.clone(), capill)?);
        // phi-equation: eps * v * (phi_x / v)_x plus the reaction terms.
        let mut pv_spec = Spectrum::from_modes(
            grid.clone(),
            self.forward_modes(&Field::from_values(grid.clone(), phix_over_v)?),
        )?;
        pv_spec.derivative_in_place(1);
        let pv_x = grid::inverse(&pv_spec);
        let mut phi_rhs = vec![0.0; len];
        for j in 0..len {
            let v = n_phys.values()[j] + vbar;
            let ph = phi_phys.values()[j] + 1.0;
            let px = phix_phys.values()[j];
            phi_rhs[j] = -(2.0 * v / eps) * (ph - 1.0) * ph + eps * v * pv_x.values()[j]
                - eps * px * px / (2.0 * ph);
        }
        let phi_rhs_hat = self.forward_modes(&Field::from_values(grid.clone(), phi_rhs)?);

        let c2 = params.sound_speed()?.powi(2);
        let nu = params.reference_viscosity()?;
        let damping = params.damping_rate();
        for k in 0..len {
            let xi = grid.wavenumber(k);
            let ixi = self.ixi[k];
            // Full RHS_w = d/dx(-p(v) + nu(v) u_x - capillary).
            let rhs_w = ixi * (-p_hat[k] + visc_hat[k] - cap_hat[k]);
            let lin_w = ixi * c2 * st.n[k] - nu * xi * xi * st.w[k];
            out.n[k] = C64::default();
            out.w[k] = rhs_w - lin_w;
            let lin_phi = -(damping + eps * xi * xi) * st.phi[k];
            out.phi[k] = phi_rhs_hat[k] - lin_phi;
        }
        self.dealias_modes(&mut out.w);
        self.dealias_modes(&mut out.phi);
        Ok(range)
    }

    /// Parabolic nonlinear forcing: only d/dx f1~(n~) in the w-equation.
    fn parabolic_forcing(
        &self,
        t: f64,
        st: &ModeState,
        check: bool,
        s: &mut ForcingScratch,
        out: &mut ModeState,
    ) -> Result<Option<GuardRange>> {
        let len = self.grid.len();
        self.inverse_single_into(&st.n, &mut s.n_phys, &mut s.work, &mut s.fft);
        let range = if check { Some(self.guard_check(t, &s.n_phys, None)?) } else { None };
        for j in 0..len {
            s.g[j] = self.ev.eval(s.n_phys[j], 0.0, 0.0, 0.0, 0.0)[0];
            s.h[j] = 0.0;
        }
        self.forward_pair_into(&s.g, &s.h, &mut s.m1, &mut s.m2, &mut s.work, &mut s.fft);
        for k in 0..len {
            out.n[k] = C64::default();
            out.w[k] = self.ixi[k] * s.m1[k];
            out.phi[k] = C64::default();
        }
        self.dealias_modes(&mut out.w);
        Ok(range)
    }
}

/// Which algebraic route evaluates the nonlinear terms of the full system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormRoute {
    Primitive,
    Perturbation,
}

// ---------------------------------------------------------------------------
// Modal diagnostics
// ---------------------------------------------------------------------------

struct ModalDiag {
    e_ls: Vec<f64>,
    hs_n: f64,
    hs_w: f64,
    hs_phi: f64,
    hs_n_floor: f64,
    hs_w_floor: f64,
    cross: f64,
    dissipation: f64,
}

/// Largest supported Sobolev order of the energy functionals.
pub const MAX_SOBOLEV_ORDER: usize = 10;

fn modal_diagnostics(grid: &Grid1D, st: &ModeState, s: usize) -> ModalDiag {
    assert!(s <= MAX_SOBOLEV_ORDER);
    let l = grid.length();
    let mut e_ls = vec![0.0; s + 1];
    let (mut hn, mut hw, mut hp) = (0.0, 0.0, 0.0);
    let (mut hn_f, mut hw_f) = (0.0, 0.0);
    let mut cross = 0.0;
    let mut dissipation = 0.0;
    for k in 0..grid.len() {
        let xi = grid.wavenumber(k);
        let xi2 = xi * xi;
        // weights[m] = sum_{i=0..m} xi^{2i}
        let mut weights = [0.0; MAX_SOBOLEV_ORDER + 2];
        let mut pow = 1.0;
        weights[0] = 1.0;
        for m in 1..=s + 1 {
            pow *= xi2;
            weights[m] = weights[m - 1] + pow;
        }
        let n2 = st.n[k].norm_sqr();
        let w2 = st.w[k].norm_sqr();
        let p2 = st.phi[k].norm_sqr();
        let mut xi2l = 1.0;
        for (lv, e) in e_ls.iter_mut().enumerate() {
            *e += xi2l * weights[s - lv] * (n2 + w2 + p2);
            xi2l *= xi2;
        }
        hn += weights[s] * n2;
        hw += weights[s] * w2;
        hp += weights[s] * p2;
        if k != 0 {
            hn_f += weights[s] * n2;
            hw_f += weights[s] * w2;
        }
        // sum_l beta-weighted cross terms int D^{l-1} w . D^l n dx.
        let im = (st.w[k] * st.n[k].conj()).im;
        let mut xi_odd = xi;
        for _ in 1..=s {
            cross += xi_odd * im;
            xi_odd *= xi2;
        }
        dissipation += xi2 * weights[s] * w2 + weights[s + 1] * p2 + xi2 * weights[s - 1] * n2;
    }
    for e in e_ls.iter_mut() {
        *e *= l;
    }
    ModalDiag {
        e_ls,
        hs_n: (l * hn).sqrt(),
        hs_w: (l * hw).sqrt(),
        hs_phi: (l * hp).sqrt(),
        hs_n_floor: (l * hn_f).sqrt(),
        hs_w_floor: (l * hw_f).sqrt(),
        cross: l * cross,
        dissipation: l * dissipation,
    }
}

fn lyapunov_of(diag: &ModalDiag, beta1: f64) -> f64 {
    diag.hs_n.powi(2) + diag.hs_w.powi(2) + diag.hs_phi.powi(2) - beta1 * diag.cross
}

fn pair_l2_by_order(grid: &Grid1D, n: &[C64], w: &[C64], max_order: usize, floor: bool) -> Vec<f64> {
    let l = grid.length();
    let mut sums = vec![0.0; max_order + 1];
    for k in 0..grid.len() {
        if floor && k == 0 {
            continue;
        }
        let xi2 = grid.wavenumber(k).powi(2);
        let base = n[k].norm_sqr() + w[k].norm_sqr();
        let mut f = 1.0;
        for s in sums.iter_mut() {
            *s += f * base;
            f *= xi2;
        }
    }
    sums.into_iter().map(|v| (l * v).sqrt()).collect()
}

fn hs_norm_modes(grid: &Grid1D, modes: &[C64], s: usize, floor: bool) -> f64 {
    let l = grid.length();
    let mut acc = 0.0;
    for k in 0..grid.len() {
        if floor && k == 0 {
            continue;
        }
        let xi2 = grid.wavenumber(k).powi(2);
        let mut weight = 1.0;
        let mut pow = 1.0;
        for _ in 0..s {
            pow *= xi2;
            weight += pow;
        }
        acc += weight * modes[k].norm_sqr();
    }
    (l * acc).sqrt()
}

fn physical_floor(grid: &Arc<Grid1D>, modes: &[C64], floor: bool) -> Field {
    let mut copy = modes.to_vec();
    if floor {
        copy[0] = C64::default();
    }
    physical(grid, &copy)
}

// ---------------------------------------------------------------------------
// Steppers
// ---------------------------------------------------------------------------

struct Recorder {
    cfg: SolverConfig,
    /// Collect the per-step scalar series (skippable for secondary runs).
    step_diag: bool,
    records: Vec<SnapshotRecord>,
    step: StepDiagnostics,
    snapshots: Vec<(f64, StateTriple)>,
    guard_range: GuardRange,
    m_running: f64,
    dissipation_acc: f64,
    last_integrand: f64,
}

impl Recorder {
    fn new(cfg: &SolverConfig) -> Self {
        Self::with_step_diag(cfg, true)
    }

    fn with_step_diag(cfg: &SolverConfig, step_diag: bool) -> Self {
        Self {
            cfg: *cfg,
            step_diag,
            records: Vec::new(),
            step: StepDiagnostics::default(),
            snapshots: Vec::new(),
            guard_range: GuardRange::default(),
            m_running: 0.0,
            dissipation_acc: 0.0,
            last_integrand: f64::NAN,
        }
    }

    fn on_step(&mut self, grid: &Grid1D, t: f64, st: &ModeState) {
        if !self.step_diag {
            return;
        }
        let s = self.cfg.sobolev_order;
        let diag = modal_diagnostics(grid, st, s);
        // Trapezoid accumulation of the dissipation integral.
        if self.last_integrand.is_nan() {
            self.last_integrand = diag.dissipation;
        } else {
            self.dissipation_acc += 0.5 * self.cfg.dt * (self.last_integrand + diag.dissipation);
            self.last_integrand = diag.dissipation;
        }
        let (hs_n, hs_w) = if self.cfg.floor_correct {
            (diag.hs_n_floor, diag.hs_w_floor)
        } else {
            (diag.hs_n, diag.hs_w)
        };
        self.m_running = self.m_running.max((1.0 + t).powf(0.25) * (hs_n + hs_w));
        self.step.times.push(t);
        self.step.lyapunov.push(lyapunov_of(&diag, self.cfg.beta1));
        self.step.dissipation_integral.push(self.dissipation_acc);
    }

    fn snapshot(&mut self, grid: &Arc<Grid1D>, t: f64, st: &ModeState) {
        let s = self.cfg.sobolev_order;
        let fc = self.cfg.floor_correct;
        let diag = modal_diagnostics(grid, st, s);
        if !self.step_diag {
            // Snapshot-granularity running sup when per-step tracking is off.
            let (hs_n, hs_w) = if fc { (diag.hs_n_floor, diag.hs_w_floor) } else { (diag.hs_n, diag.hs_w) };
            self.m_running = self.m_running.max((1.0 + t).powf(0.25) * (hs_n + hs_w));
        }
        let l2_pair = pair_l2_by_order(grid, &st.n, &st.w, s, fc);
        let hs_pair = {
            let a = hs_norm_modes(grid, &st.n, s, fc);
            let b = hs_norm_modes(grid, &st.w, s, fc);
            (a * a + b * b).sqrt()
        };
        let hs_phase = hs_norm_modes(grid, &st.phi, s, false);
        let n_phys = physical_floor(grid, &st.n, fc);
        let w_phys = physical_floor(grid, &st.w, fc);
        let phi_phys = physical(grid, &st.phi);
        let dx = grid.spacing();
        let l1 = |f: &Field| f.values().iter().map(|v| v.abs()).sum::<f64>() * dx;
        self.records.push(SnapshotRecord {
            time: t,
            l2_pair,
            hs_pair,
            hs_phase,
            l1_pair: l1(&n_phys) + l1(&w_phys),
            linf_pair: n_phys.max_abs().max(w_phys.max_abs()),
            l1_phase: l1(&phi_phys),
            linf_phase: phi_phys.max_abs(),
            energy: diag.e_ls.clone(),
            m_weighted: self.m_running,
            lyapunov: lyapunov_of(&diag, self.cfg.beta1),
        });
    }
}

fn state_to_modes(state: &StateTriple, params: &ModelParams) -> ModeState {
    let pert = match state.repr {
        Representation::Perturbation => state.clone(),
        Representation::Primitive => convert_representation(state, params),
    };
    ModeState {
        n: grid::forward(&pert.volume).modes().to_vec(),
        w: grid::forward(&pert.velocity).modes().to_vec(),
        phi: grid::forward(&pert.phase).modes().to_vec(),
    }
}

fn modes_to_state(
    grid: &Arc<Grid1D>,
    st: &ModeState,
    params: &ModelParams,
    repr: Representation,
) -> StateTriple {
    let pert = StateTriple::new(
        physical(grid, &st.n),
        physical(grid, &st.w),
        physical(grid, &st.phi),
        Representation::Perturbation,
    );
    match repr {
        Representation::Perturbation => pert,
        Representation::Primitive => convert_representation(&pert, params),
    }
}

#[derive(Clone, Copy)]
enum ForcingKind {
    Perturbation,
    Primitive,
    Parabolic,
}

struct Forcing<'a> {
    engine: &'a Engine,
    kind: ForcingKind,
}

impl<'a> Forcing<'a> {
    fn eval(
        &self,
        t: f64,
        st: &ModeState,
        check: bool,
        s: &mut ForcingScratch,
        out: &mut ModeState,
    ) -> Result<Option<GuardRange>> {
        match self.kind {
            ForcingKind::Perturbation => self.engine.perturbation_forcing(t, st, check, s, out),
            ForcingKind::Primitive => self.engine.primitive_remainder(t, st, check, out),
            ForcingKind::Parabolic => self.engine.parabolic_forcing(t, st, check, s, out),
        }
    }
}

/// One Heun step in the integrating-factor frame, updating `st` in place:
/// S_{m+1} = P S_m + (dt/2) (P k1 + k2),  k2 = F(P (S_m + dt k1)).
fn step_semi_implicit(
    forcing: &Forcing,
    t: f64,
    dt: f64,
    st: &mut ModeState,
    sc: &mut Scratch,
) -> Result<GuardRange> {
    let engine = forcing.engine;
    let Scratch { f, s } = sc;
    let range = forcing.eval(t, st, true, f, &mut s.k1)?;
    engine.apply_propagator_into(st, &mut s.ps);
    engine.apply_propagator_into(&s.k1, &mut s.pk1);
    // predictor = P(S + dt k1) = P S + dt P k1 (the propagator is linear).
    for k in 0..st.n.len() {
        s.stage.n[k] = s.ps.n[k] + dt * s.pk1.n[k];
        s.stage.w[k] = s.ps.w[k] + dt * s.pk1.w[k];
        s.stage.phi[k] = s.ps.phi[k] + dt * s.pk1.phi[k];
    }
    forcing.eval(t + dt, &s.stage, false, f, &mut s.k2)?;
    for k in 0..st.n.len() {
        st.n[k] = s.ps.n[k] + 0.5 * dt * (s.pk1.n[k] + s.k2.n[k]);
        st.w[k] = s.ps.w[k] + 0.5 * dt * (s.pk1.w[k] + s.k2.w[k]);
        st.phi[k] = s.ps.phi[k] + 0.5 * dt * (s.pk1.phi[k] + s.k2.phi[k]);
    }
    Ok(range.expect("guard checked on first stage"))
}

/// Classic RK4 on the full right side L S + F(S), updating `st` in place.
fn step_rk4(
    forcing: &Forcing,
    t: f64,
    dt: f64,
    st: &mut ModeState,
    sc: &mut Scratch,
) -> Result<GuardRange> {
    let engine = forcing.engine;
    let Scratch { f, s } = sc;
    let add_linear = |input: &ModeState, out: &mut ModeState| {
        for k in 0..input.n.len() {
            let [a, b] = engine.pair_symbol[k].apply([input.n[k], input.w[k]]);
            out.n[k] += a;
            out.w[k] += b;
            out.phi[k] += input.phi[k] * engine.phase_symbol[k];
        }
    };
    let range = forcing.eval(t, st, true, f, &mut s.k1)?;
    add_linear(st, &mut s.k1);

    fn fill_stage(stage: &mut ModeState, base: &ModeState, coef: f64, prev: &ModeState) {
        for k in 0..base.n.len() {
            stage.n[k] = base.n[k] + coef * prev.n[k];
            stage.w[k] = base.w[k] + coef * prev.w[k];
            stage.phi[k] = base.phi[k] + coef * prev.phi[k];
        }
    }

    fill_stage(&mut s.stage, st, 0.5 * dt, &s.k1);
    forcing.eval(t + 0.5 * dt, &s.stage, false, f, &mut s.k2)?;
    add_linear(&s.stage, &mut s.k2);

    fill_stage(&mut s.stage, st, 0.5 * dt, &s.k2);
    forcing.eval(t + 0.5 * dt, &s.stage, false, f, &mut s.k3)?;
    add_linear(&s.stage, &mut s.k3);

    fill_stage(&mut s.stage, st, dt, &s.k3);
    forcing.eval(t + dt, &s.stage, false, f, &mut s.k4)?;
    add_linear(&s.stage, &mut s.k4);

    let c = dt / 6.0;
    for k in 0..st.n.len() {
        st.n[k] += c * (s.k1.n[k] + 2.0 * s.k2.n[k] + 2.0 * s.k3.n[k] + s.k4.n[k]);
        st.w[k] += c * (s.k1.w[k] + 2.0 * s.k2.w[k] + 2.0 * s.k3.w[k] + s.k4.w[k]);
        st.phi[k] += c * (s.k1.phi[k] + 2.0 * s.k2.phi[k] + 2.0 * s.k3.phi[k] + s.k4.phi[k]);
    }
    Ok(range.expect("guard checked on first stage"))
}

fn finite_check(t: f64, st: &ModeState) -> Result<()> {
    for (modes, channel) in [(&st.n, "volume"), (&st.w, "velocity"), (&st.phi, "phase")] {
        if modes.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
            return Err(Error::BlowUp { time: t, channel });
        }
    }
    Ok(())
}

fn run_loop(
    engine: &Engine,
    forcing: Forcing,
    initial: &StateTriple,
    cfg: &SolverConfig,
    output_repr: Representation,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = engine.grid.clone();
    let mut st = state_to_modes(initial, &engine.params);
    // Degenerate initial data is rejected up front rather than clamped.
    {
        let n_phys = physical(&grid, &st.n);
        let phi_phys = physical(&grid, &st.phi);
        engine.guard_check(cfg.start_time, n_phys.values(), Some(phi_phys.values()))?;
    }
    let steps = cfg.steps()?;
    let mut scratch = Scratch::new(grid.len(), engine.fft_scratch_len());
    let mut rec = Recorder::new(cfg);
    rec.on_step(&grid, cfg.start_time, &st);
    rec.snapshot(&grid, cfg.start_time, &st);
    for i in 1..=steps {
        let t = cfg.start_time + (i - 1) as f64 * cfg.dt;
        let range = match cfg.integrator {
            Integrator::SemiImplicitSpectral => step_semi_implicit(&forcing, t, cfg.dt, &mut st, &mut scratch)?,
            Integrator::ExplicitRk4 => step_rk4(&forcing, t, cfg.dt, &mut st, &mut scratch)?,
        };
        let t_next = cfg.start_time + i as f64 * cfg.dt;
        finite_check(t_next, &st)?;
        rec.guard_range.absorb(&range);
        rec.on_step(&grid, t_next, &st);
        if i % cfg.snapshot_stride == 0 || i == steps {
            rec.snapshot(&grid, t_next, &st);
        }
        if cfg.state_stride > 0 && i % cfg.state_stride == 0 && i != steps {
            rec.snapshots
                .push((t_next, modes_to_state(&grid, &st, &engine.params, output_repr)));
        }
    }
    let final_time = cfg.start_time + steps as f64 * cfg.dt;
    let final_state = modes_to_state(&grid, &st, &engine.params, output_repr);
    rec.snapshots.push((final_time, final_state.clone()));
    Ok(Trajectory {
        records: rec.records,
        step: rec.step,
        snapshots: rec.snapshots,
        final_state,
        final_time,
        guard_range: rec.guard_range,
    })
}

/// Evolve the full nonlinear system. The form selects both the algebraic
/// route for the nonlinear terms and the representation of the output.
pub fn evolve_nonlinear(
    initial: &StateTriple,
    params: &ModelParams,
    cfg: &SolverConfig,
    form: FormRoute,
) -> Result<Trajectory> {
    let engine = Engine::new(initial.grid().clone(), params, SystemKind::Nsac, cfg)?;
    match form {
        FormRoute::Perturbation => run_loop(
            &engine,
            Forcing { engine: &engine, kind: ForcingKind::Perturbation },
            initial,
            cfg,
            Representation::Perturbation,
        ),
        FormRoute::Primitive => run_loop(
            &engine,
            Forcing { engine: &engine, kind: ForcingKind::Primitive },
            initial,
            cfg,
            Representation::Primitive,
        ),
    }
}

/// Evolve the modified parabolic system. The phase channel is linear and is
/// reproduced exactly per mode; the acoustic pair carries the f1~ forcing.
pub fn evolve_parabolic(
    initial: &StateTriple,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let engine = Engine::new(initial.grid().clone(), params, SystemKind::Parabolic, cfg)?;
    run_loop(
        &engine,
        Forcing { engine: &engine, kind: ForcingKind::Parabolic },
        initial,
        cfg,
        Representation::Perturbation,
    )
}

/// Exact linear evolution of the acoustic pair by per-mode symbol products.
pub fn evolve_linear(
    w0: (&Field, &Field),
    t: f64,
    params: &ModelParams,
    which: SystemKind,
) -> Result<(Field, Field)> {
    let n_hat = grid::forward(w0.0);
    let w_hat = grid::forward(w0.1);
    let (n_out, w_out) = linear_modes_at(&n_hat, &w_hat, t, params, which)?;
    Ok((grid::inverse(&n_out), grid::inverse(&w_out)))
}

/// Symbol-space version of `evolve_linear`.
pub fn linear_modes_at(
    n_hat: &Spectrum,
    w_hat: &Spectrum,
    t: f64,
    params: &ModelParams,
    which: SystemKind,
) -> Result<(Spectrum, Spectrum)> {
    let grid = n_hat.grid().clone();
    let mut n_out = Spectrum::zeros(grid.clone());
    let mut w_out = Spectrum::zeros(grid.clone());
    for k in 0..grid.len() {
        let g = green_symbol(grid.wavenumber(k), t, params, which)?.matrix;
        let [a, b] = g.apply([n_hat.modes()[k], w_hat.modes()[k]]);
        n_out.modes_mut()[k] = a;
        w_out.modes_mut()[k] = b;
    }
    Ok((n_out, w_out))
}

/// Co-evolve the full and parabolic systems from shared initial data,
/// recording difference norms at the snapshot cadence.
pub fn evolve_pair(
    initial: &StateTriple,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<PairTrajectory> {
    cfg.validate()?;
    let grid = initial.grid().clone();
    let nsac = Engine::new(grid.clone(), params, SystemKind::Nsac, cfg)?;
    let para = Engine::new(grid.clone(), params, SystemKind::Parabolic, cfg)?;
    let mut st_full = state_to_modes(initial, params);
    let mut st_para = st_full.clone();
    {
        let n_phys = physical(&grid, &st_full.n);
        let phi_phys = physical(&grid, &st_full.phi);
        nsac.guard_check(cfg.start_time, n_phys.values(), Some(phi_phys.values()))?;
    }
    let steps = cfg.steps()?;
    let s = cfg.sobolev_order;
    let mut rec_full = Recorder::new(cfg);
    // The parabolic side needs no per-step Lyapunov/dissipation series.
    let mut rec_para = Recorder::with_step_diag(cfg, false);
    let mut diffs = Vec::new();

    let diff_record = |t: f64, a: &ModeState, b: &ModeState| -> DiffRecord {
        let n = grid.len();
        let mut d = ModeState::zeros(n);
        for k in 0..n {
            d.n[k] = a.n[k] - b.n[k];
            d.w[k] = a.w[k] - b.w[k];
            d.phi[k] = a.phi[k] - b.phi[k];
        }
        let fc = cfg.floor_correct;
        let l2_pair = pair_l2_by_order(&grid, &d.n, &d.w, s - 1, fc);
        let mut e_bar = Vec::with_capacity(s);
        for k_ord in 0..s {
            // ||D^k dn||_{H^{s-1-k}}^2 + ||D^k dw||_{H^{s-1-k}}^2 via mode sums.
            let l = grid.length();
            let mut acc = 0.0;
            for k in 0..n {
                if fc && k == 0 {
                    continue;
                }
                let xi2 = grid.wavenumber(k).powi(2);
                let mut weight = 1.0;
                let mut pow = 1.0;
                for _ in 0..(s - 1 - k_ord) {
                    pow *= xi2;
                    weight += pow;
                }
                acc += xi2.powi(k_ord as i32) * weight * (d.n[k].norm_sqr() + d.w[k].norm_sqr());
            }
            e_bar.push(l * acc);
        }
        let hs_phase = hs_norm_modes(&grid, &d.phi, s, false);
        let n_phys = physical_floor(&grid, &d.n, fc);
        let w_phys = physical_floor(&grid, &d.w, fc);
        let phi_phys = physical(&grid, &d.phi);
        let dx = grid.spacing();
        let l1 = |f: &Field| f.values().iter().map(|v| v.abs()).sum::<f64>() * dx;
        DiffRecord {
            time: t,
            l2_pair,
            e_bar,
            hs_phase,
            l1_pair: l1(&n_phys) + l1(&w_phys),
            linf_pair: n_phys.max_abs().max(w_phys.max_abs()),
            l1_phase: l1(&phi_phys),
            linf_phase: phi_phys.max_abs(),
        }
    };

    rec_full.on_step(&grid, cfg.start_time, &st_full);
    rec_para.on_step(&grid, cfg.start_time, &st_para);
    rec_full.snapshot(&grid, cfg.start_time, &st_full);
    rec_para.snapshot(&grid, cfg.start_time, &st_para);
    diffs.push(diff_record(cfg.start_time, &st_full, &st_para));

    let mut scratch = Scratch::new(grid.len(), nsac.fft_scratch_len());
    for i in 1..=steps {
        let t = cfg.start_time + (i - 1) as f64 * cfg.dt;
        let forcing_full = Forcing { engine: &nsac, kind: ForcingKind::Perturbation };
        let forcing_para = Forcing { engine: &para, kind: ForcingKind::Parabolic };
        let range_full = match cfg.integrator {
            Integrator::SemiImplicitSpectral => step_semi_implicit(&forcing_full, t, cfg.dt, &mut st_full, &mut scratch)?,
            Integrator::ExplicitRk4 => step_rk4(&forcing_full, t, cfg.dt, &mut st_full, &mut scratch)?,
        };
        let range_para = match cfg.integrator {
            Integrator::SemiImplicitSpectral => step_semi_implicit(&forcing_para, t, cfg.dt, &mut st_para, &mut scratch)?,
            Integrator::ExplicitRk4 => step_rk4(&forcing_para, t, cfg.dt, &mut st_para, &mut scratch)?,
        };
        let t_next = cfg.start_time + i as f64 * cfg.dt;
        finite_check(t_next, &st_full)?;
        finite_check(t_next, &st_para)?;
        rec_full.guard_range.absorb(&range_full);
        rec_para.guard_range.absorb(&range_para);
        rec_full.on_step(&grid, t_next, &st_full);
        rec_para.on_step(&grid, t_next, &st_para);
        if i % cfg.snapshot_stride == 0 || i == steps {
            rec_full.snapshot(&grid, t_next, &st_full);
            rec_para.snapshot(&grid, t_next, &st_para);
            diffs.push(diff_record(t_next, &st_full, &st_para));
        }
    }
    let final_time = cfg.start_time + steps as f64 * cfg.dt;
    let full_state = modes_to_state(&grid, &st_full, params, Representation::Perturbation);
    let para_state = modes_to_state(&grid, &st_para, params, Representation::Perturbation);
    rec_full.snapshots.push((final_time, full_state.clone()));
    rec_para.snapshots.push((final_time, para_state.clone()));
    Ok(PairTrajectory {
        full: Trajectory {
            records: rec_full.records,
            step: rec_full.step,
            snapshots: rec_full.snapshots,
            final_state: full_state,
            final_time,
            guard_range: rec_full.guard_range,
        },
        parabolic: Trajectory {
            records: rec_para.records,
            step: rec_para.step,
            snapshots: rec_para.snapshots,
            final_state: para_state,
            final_time,
            guard_range: rec_para.guard_range,
        },
        diffs,
    })
}

/// Recompute the energy functionals E_l^s, M(t), and the Lyapunov
/// combination over a trajectory's stored snapshots.
pub fn energy_diagnostics(
    traj: &Trajectory,
    params: &ModelParams,
    s: usize,
    beta1: f64,
) -> Result<Vec<EnergyRecord>> {
    if s < 3 {
        return Err(Error::Parameter(format!("energy diagnostics require s >= 3, got {s}")));
    }
    if traj.snapshots.is_empty() {
        return Err(Error::Parameter("trajectory holds no snapshots".into()));
    }
    let grid = traj.snapshots[0].1.grid().clone();
    if !grid.max_wavenumber().powi(2 * (s + 1) as i32).is_finite() {
        return Err(Error::Parameter(format!("grid cannot resolve {s} derivatives")));
    }
    let mut out = Vec::with_capacity(traj.snapshots.len());
    let mut m_running = 0.0_f64;
    for (t, state) in &traj.snapshots {
        let st = state_to_modes(state, params);
        let diag = modal_diagnostics(&grid, &st, s);
        m_running = m_running.max((1.0 + t).powf(0.25) * (diag.hs_n_floor + diag.hs_w_floor));
        out.push(EnergyRecord {
            time: *t,
            e_ls: diag.e_ls.clone(),
            m_t: m_running,
            lyapunov: lyapunov_of(&diag, beta1),
            e_bar_ks: None,
        });
    }
    Ok(out)
}

/// Physical-space right side of the Lagrangian system on primitive
/// variables; companion oracle to `rhs_perturbation`.
pub fn rhs_primitive(state: &StateTriple, params: &ModelParams) -> Result<[Field; 3]> {
    assert_eq!(state.repr, Representation::Primitive);
    let grid = state.grid().clone();
    let eps = params.interface_thickness;
    let v = &state.volume;
    let u = &state.velocity;
    let phi = &state.phase;
    for &vv in v.values() {
        if vv <= 0.0 {
            return Err(Error::StateValidity("vacuum in primitive state".into()));
        }
    }
    for &pp in phi.values() {
        if pp <= 0.0 {
            return Err(Error::StateValidity("degenerate phase in primitive state".into()));
        }
    }
    let u_x = grid::spectral_derivative(u, 1);
    let phi_x = grid::spectral_derivative(phi, 1);
    let p_of_v = v.map(|vv| params.pressure.value_unchecked(vv));
    let visc = v.zip(&u_x, |vv, ux| params.viscosity.value_unchecked(vv) * ux);
    let mut capillary = Field::zeros(grid.clone());
    for j in 0..grid.len() {
        let px = phi_x.values()[j];
        capillary.values_mut()[j] =
            eps / 8.0 * px * px / (phi.values()[j] * v.values()[j] * v.values()[j]);
    }
    let flux = p_of_v.scale(-1.0).add(&visc).sub(&capillary);
    let u_t = grid::spectral_derivative(&flux, 1);

    let phix_over_v = phi_x.zip(v, |px, vv| px / vv);
    let pv_x = grid::spectral_derivative(&phix_over_v, 1);
    let mut phi_t = Field::zeros(grid);
    for j in 0..phi_t.len() {
        let vv = v.values()[j];
        let ph = phi.values()[j];
        let px = phi_x.values()[j];
        phi_t.values_mut()[j] =
            -(2.0 * vv / eps) * (ph - 1.0) * ph + eps * vv * pv_x.values()[j] - eps * px * px / (2.0 * ph);
    }
    Ok([u_x, u_t, phi_t])
}

/// Physical-space right side of the perturbation system; companion oracle
/// to `rhs_primitive`.
pub fn rhs_perturbation(state: &StateTriple, params: &ModelParams) -> Result<[Field; 3]> {
    assert_eq!(state.repr, Representation::Perturbation);
    let n = &state.volume;
    let w = &state.velocity;
    let phi = &state.phase;
    let n_x = grid::spectral_derivative(n, 1);
    let w_x = grid::spectral_derivative(w, 1);
    let phi_x = grid::spectral_derivative(phi, 1);
    let terms = crate::model::nonlinear_terms(n, &n_x, &w_x, phi, &phi_x, params)?;
    let c2 = params.sound_speed()?.powi(2);
    let nu = params.reference_viscosity()?;
    let eps = params.interface_thickness;
    let damping = params.damping_rate();

    let n_t = w_x.clone();
    let g = terms.pressure.add(&terms.viscous).add(&terms.capillary);
    let g_x = grid::spectral_derivative(&g, 1);
    let w_xx = grid::spectral_derivative(w, 2);
    let w_t = n_x.scale(c2).add(&w_xx.scale(nu)).add(&g_x);
    let phi_xx = grid::spectral_derivative(phi, 2);
    let phi_t = phi
        .scale(-damping)
        .add(&phi_xx.scale(eps))
        .add(&terms.phase_coupling)
        .add(&terms.phase_self);
    Ok([n_t, w_t, phi_t])
}

//! Constitutive laws, derived constants, the five nonlinear source terms of
//! the perturbation system, and the coordinate/variable transforms connecting
//! the Eulerian, Lagrangian-primitive, and perturbation formulations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};

/// Power-law pressure p(v) = a * v^(-gamma), decreasing and convex for v > 0.
#[derive(Clone, Copy, Debug)]
pub struct PressureLaw {
    amplitude: f64,
    exponent: f64,
    /// Small-integer exponents skip powf in the hot pointwise loops.
    int_exponent: Option<i32>,
}

impl PressureLaw {
    pub fn new(amplitude: f64, exponent: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::Constitutive(format!(
                "pressure amplitude must be positive, got {amplitude}"
            )));
        }
        if !(exponent > 1.0) || !exponent.is_finite() {
            return Err(Error::Constitutive(format!(
                "pressure exponent must exceed 1, got {exponent}"
            )));
        }
        let int_exponent = if exponent.fract() == 0.0 && exponent <= 8.0 {
            Some(exponent as i32)
        } else {
            None
        };
        Ok(Self { amplitude, exponent, int_exponent })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Value and first two derivatives at v.
    pub fn eval(&self, v: f64) -> Result<(f64, f64, f64)> {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("pressure law requires v > 0, got {v}")));
        }
        let (a, g) = (self.amplitude, self.exponent);
        let p = a * v.powf(-g);
        let dp = -g * p / v;
        let ddp = g * (g + 1.0) * p / (v * v);
        Ok((p, dp, ddp))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, v: f64) -> f64 {
        match self.int_exponent {
            Some(g) => self.amplitude * v.powi(-g),
            None => self.amplitude * v.powf(-self.exponent),
        }
    }

    /// Antiderivative of p, used by the pressure potential.
    fn antiderivative(&self, v: f64) -> f64 {
        let (a, g) = (self.amplitude, self.exponent);
        a * v.powf(1.0 - g) / (1.0 - g)
    }
}

/// Viscosity nu(v): constant, or the inverse-volume law nu(v) = mu / v.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ViscosityLaw {
    Constant { mu: f64 },
    InverseVolume { mu: f64 },
}

impl ViscosityLaw {
    pub fn coefficient(&self) -> f64 {
        match *self {
            ViscosityLaw::Constant { mu } | ViscosityLaw::InverseVolume { mu } => mu,
        }
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("viscosity law requires v > 0, got {v}")));
        }
        Ok(match *self {
            ViscosityLaw::Constant { mu } => mu,
            ViscosityLaw::InverseVolume { mu } => mu / v,
        })
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, v: f64) -> f64 {
        match *self {
            ViscosityLaw::Constant { mu } => mu,
            ViscosityLaw::InverseVolume { mu } => mu / v,
        }
    }

    fn validate(&self) -> Result<()> {
        let mu = self.coefficient();
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Constitutive(format!(
                "viscosity coefficient must be positive, got {mu}"
            )));
        }
        Ok(())
    }
}

/// Physical constants of the model together with the constitutive laws.
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    /// Interface thickness epsilon.
    pub interface_thickness: f64,
    /// Reference specific volume v-bar.
    pub reference_volume: f64,
    /// Reference velocity u-bar.
    pub reference_velocity: f64,
    pub pressure: PressureLaw,
    pub viscosity: ViscosityLaw,
}

impl Default for ModelParams {
    /// Defaults chosen so that c-bar = nu-bar = 1, damping rate 2, eta = 1.
    fn default() -> Self {
        Self {
            interface_thickness: 1.0,
            reference_volume: 1.0,
            reference_velocity: 0.0,
            pressure: PressureLaw::new(0.5, 2.0).expect("default pressure law"),
            viscosity: ViscosityLaw::InverseVolume { mu: 1.0 },
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.interface_thickness > 0.0) || !self.interface_thickness.is_finite() {
            return Err(Error::Parameter(format!(
                "interface thickness must be positive, got {}",
                self.interface_thickness
            )));
        }
        if !(self.reference_volume > 0.0) || !self.reference_volume.is_finite() {
            return Err(Error::Parameter(format!(
                "reference volume must be positive, got {}",
                self.reference_volume
            )));
        }
        if !self.reference_velocity.is_finite() {
            return Err(Error::Parameter("reference velocity must be finite".into()));
        }
        self.viscosity.validate()?;
        self.sound_speed()?;
        Ok(())
    }

    /// Sound speed c-bar = sqrt(-p'(v-bar)).
    pub fn sound_speed(&self) -> Result<f64> {
        let (_, dp, _) = self.pressure.eval(self.reference_volume)?;
        if dp >= 0.0 {
            return Err(Error::Constitutive(format!(
                "p'(v-bar) = {dp} is not negative; no real sound speed"
            )));
        }
        Ok((-dp).sqrt())
    }

    /// Reference viscosity nu-bar = nu(v-bar).
    pub fn reference_viscosity(&self) -> Result<f64> {
        self.viscosity.eval(self.reference_volume)
    }

    /// Damping rate 2 v-bar / epsilon of the phase equation.
    pub fn damping_rate(&self) -> f64 {
        2.0 * self.reference_volume / self.interface_thickness
    }

    /// eta = min(2 v-bar / epsilon, epsilon), the linear phase-difference rate floor.
    pub fn phase_rate_floor(&self) -> f64 {
        self.damping_rate().min(self.interface_thickness)
    }

    /// eta-bar(alpha) = min(2 v-bar / epsilon - alpha, epsilon).
    pub fn phase_rate_floor_slack(&self, alpha: f64) -> f64 {
        (self.damping_rate() - alpha).min(self.interface_thickness)
    }

    /// Pointwise admissibility bounds from the small-data a-priori estimate:
    /// v in [v-bar/2, 2 v-bar] and the squared phase in [1/2, 2].
    pub fn volume_bounds(&self) -> (f64, f64) {
        (0.5 * self.reference_volume, 2.0 * self.reference_volume)
    }

    pub fn phase_bounds(&self) -> (f64, f64) {
        (0.5, 2.0)
    }
}

/// Whether a state stores (v, u, phi) or the deviation (n, w, phi - 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Primitive,
    Perturbation,
}

/// Sampled (specific volume, velocity, squared phase) triple.
#[derive(Clone, Debug)]
pub struct StateTriple {
    pub volume: Field,
    pub velocity: Field,
    pub phase: Field,
    pub repr: Representation,
}

impl StateTriple {
    pub fn new(volume: Field, velocity: Field, phase: Field, repr: Representation) -> Self {
        assert_eq!(volume.len(), velocity.len());
        assert_eq!(volume.len(), phase.len());
        Self { volume, velocity, phase, repr }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.volume.grid()
    }

    pub fn zero_perturbation(grid: Arc<Grid1D>) -> Self {
        Self {
            volume: Field::zeros(grid.clone()),
            velocity: Field::zeros(grid.clone()),
            phase: Field::zeros(grid),
            repr: Representation::Perturbation,
        }
    }
}

/// Switch between primitive and perturbation representations; an affine
/// shift by the constant state, so the round trip is the identity.
pub fn convert_representation(state: &StateTriple, params: &ModelParams) -> StateTriple {
    let vb = params.reference_volume;
    let ub = params.reference_velocity;
    match state.repr {
        Representation::Primitive => StateTriple {
            volume: state.volume.map(|v| v - vb),
            velocity: state.velocity.map(|u| u - ub),
            phase: state.phase.map(|p| p - 1.0),
            repr: Representation::Perturbation,
        },
        Representation::Perturbation => StateTriple {
            volume: state.volume.map(|n| n + vb),
            velocity: state.velocity.map(|w| w + ub),
            phase: state.phase.map(|p| p + 1.0),
            repr: Representation::Primitive,
        },
    }
}

/// The five nonlinear source terms of the perturbation system.
#[derive(Clone, Debug)]
pub struct NonlinearTerms {
    /// f1(n): pressure nonlinearity beyond the acoustic linearization.
    pub pressure: Field,
    /// f2(n, w): variable-viscosity correction (nu(v) - nu-bar) w_x.
    pub viscous: Field,
    /// f3(n, phi): capillary stress from the phase gradient.
    pub capillary: Field,
    /// f4(n, phi): volume-phase coupling in the phase equation.
    pub phase_coupling: Field,
    /// f5(phi): phase self-interaction.
    pub phase_self: Field,
}

/// Pointwise evaluator for the five nonlinear terms. Inputs are assumed
/// admissible (no vacuum, no degenerate phase); `nonlinear_terms` validates.
#[derive(Clone, Copy)]
pub struct TermEvaluator {
    eps: f64,
    vbar: f64,
    dp_ref: f64,
    p_ref: f64,
    pressure: PressureLaw,
    viscosity: ViscosityLaw,
    nu_ref: f64,
}

impl TermEvaluator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let (p_ref, dp_ref, _) = params.pressure.eval(params.reference_volume)?;
        Ok(Self {
            eps: params.interface_thickness,
            vbar: params.reference_volume,
            dp_ref,
            p_ref,
            pressure: params.pressure,
            viscosity: params.viscosity,
            nu_ref: params.reference_viscosity()?,
        })
    }

    /// Returns (f1, f2, f3, f4, f5) at one sample.
    #[inline]
    pub fn eval(&self, n: f64, n_x: f64, w_x: f64, phi: f64, phi_x: f64) -> [f64; 5] {
        let v = n + self.vbar;
        let ph = phi + 1.0;
        let f1 = -self.pressure.value_unchecked(v) + self.p_ref + self.dp_ref * n;
        let f2 = (self.viscosity.value_unchecked(v) - self.nu_ref) * w_x;
        let f3 = -self.eps * phi_x * phi_x / (8.0 * ph * v * v);
        let f4 = -self.eps * n_x * phi_x / v - 2.0 * n * (phi * phi + phi) / self.eps;
        let f5 = -self.eps * phi_x * phi_x / (2.0 * ph) - 2.0 * self.vbar * phi * phi / self.eps;
        [f1, f2, f3, f4, f5]
    }
}

/// Evaluate all five nonlinear terms pointwise on sampled fields.
pub fn nonlinear_terms(
    n: &Field,
    n_x: &Field,
    w_x: &Field,
    phi: &Field,
    phi_x: &Field,
    params: &ModelParams,
) -> Result<NonlinearTerms> {
    let ev = TermEvaluator::new(params)?;
    let grid = n.grid().clone();
    let len = n.len();
    let mut out = [
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    ];
    for j in 0..len {
        let nj = n.values()[j];
        let pj = phi.values()[j];
        if nj + params.reference_volume <= 0.0 {
            return Err(Error::StateValidity(format!(
                "vacuum: n + v-bar = {} at sample {j}",
                nj + params.reference_volume
            )));
        }
        if pj + 1.0 <= 0.0 {
            return Err(Error::StateValidity(format!(
                "degenerate phase: phi + 1 = {} at sample {j}",
                pj + 1.0
            )));
        }
        let f = ev.eval(nj, n_x.values()[j], w_x.values()[j], pj, phi_x.values()[j]);
        for (slot, val) in out.iter_mut().zip(f) {
            slot[j] = val;
        }
    }
    let [f1, f2, f3, f4, f5] = out;
    Ok(NonlinearTerms {
        pressure: Field::from_values(grid.clone(), f1)?,
        viscous: Field::from_values(grid.clone(), f2)?,
        capillary: Field::from_values(grid.clone(), f3)?,
        phase_coupling: Field::from_values(grid.clone(), f4)?,
        phase_self: Field::from_values(grid, f5)?,
    })
}

/// Pressure potential A(n) = p(v-bar) n - integral_{v-bar}^{v-bar+n} p(s) ds.
///
/// Nonnegative by convexity of p, with A(n) ~ (c-bar^2 / 2) n^2 near 0.
pub fn pressure_potential(n: f64, params: &ModelParams) -> Result<f64> {
    let vb = params.reference_volume;
    if vb + n <= 0.0 {
        return Err(Error::Domain(format!("vacuum: v-bar + n = {}", vb + n)));
    }
    let (p_ref, _, _) = params.pressure.eval(vb)?;
    let integral = params.pressure.antiderivative(vb + n) - params.pressure.antiderivative(vb);
    Ok(p_ref * n - integral)
}

/// Transform Eulerian initial data (rho, u, chi) to Lagrangian (v, u, phi)
/// on a uniform mass grid.
///
/// The mass coordinate x(y) = integral of rho is accumulated by the
/// trapezoid rule and the fields are resampled by local cubic (4-point
/// Lagrange) interpolation. The mass grid spans the total mass of the box.
pub fn eulerian_to_lagrangian(rho0: &Field, u0: &Field, chi0: &Field) -> Result<StateTriple> {
    let n = rho0.len();
    assert_eq!(u0.len(), n);
    assert_eq!(chi0.len(), n);
    for (j, &r) in rho0.values().iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("non-positive density {r} at sample {j}")));
        }
    }
    let dy = rho0.grid().spacing();
    let rho = rho0.values();

    // Cumulative mass coordinate at Eulerian nodes, plus the total mass.
    let mut x = vec![0.0_f64; n + 1];
    for j in 0..n {
        let next = rho[(j + 1) % n];
        x[j + 1] = x[j] + 0.5 * dy * (rho[j] + next);
    }
    let total_mass = x[n];
    let half = 0.5 * total_mass;
    for xj in x.iter_mut() {
        *xj -= half;
    }

    let mass_grid = Grid1D::new(total_mass, n)?;
    let v_src: Vec<f64> = rho.iter().map(|&r| 1.0 / r).collect();
    let u_src = u0.values().to_vec();
    let phi_src: Vec<f64> = chi0.values().iter().map(|&c| c * c).collect();

    let resample = |src: &[f64]| -> Vec<f64> {
        let node = |i: i64| -> (f64, f64) {
            // Periodic extension: x advances by the total mass per period.
            let wrap = i.rem_euclid(n as i64) as usize;
            let period = (i - wrap as i64) / n as i64;
            (x[wrap] + period as f64 * total_mass, src[wrap])
        };
        let mut out = vec![0.0; n];
        let mut j = 0usize; // x[j] <= target < x[j+1], advanced monotonically
        for (i, slot) in out.iter_mut().enumerate() {
            let target = mass_grid.point(i);
            while j + 1 < n && x[j + 1] <= target {
                j += 1;
            }
            // 4-point Lagrange through nodes j-1 .. j+2.
            let pts: Vec<(f64, f64)> = (-1..=2).map(|o| node(j as i64 + o)).collect();
            let mut acc = 0.0;
            for (a, &(xa, ga)) in pts.iter().enumerate() {
                let mut w = ga;
                for (b, &(xb, _)) in pts.iter().enumerate() {
                    if a != b {
                        w *= (target - xb) / (xa - xb);
                    }
                }
                acc += w;
            }
            *slot = acc;
        }
        out
    };

    let (v_new, u_new, phi_new) = (resample(&v_src), resample(&u_src), resample(&phi_src));
    Ok(StateTriple {
        volume: Field::from_values(mass_grid.clone(), v_new)?,
        velocity: Field::from_values(mass_grid.clone(), u_new)?,
        phase: Field::from_values(mass_grid, phi_new)?,
        repr: Representation::Primitive,
    })
}

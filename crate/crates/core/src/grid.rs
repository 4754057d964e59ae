//! Uniform periodic 1-D grid, spectral differentiation, discrete norms, and
//! the low/high frequency decomposition.
//!
//! The domain is the centered box [-L/2, L/2) with N equispaced points.
//! Fourier coefficients follow the convention f(x) = sum_k fhat_k e^{i xi_k x}
//! with xi_k = 2*pi*m/L for signed mode numbers m in [-N/2, N/2). Under this
//! convention the symbol of d/dx is i*xi and the rectangle rule is spectrally
//! accurate, so `integral |f|^2 dx = L * sum |fhat_k|^2` (Parseval).

use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on [-L/2, L/2) with a power-of-two point count.
pub struct Grid1D {
    length: f64,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid1D")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Arc<Self>> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Parameter(format!("grid length must be positive, got {length}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!("grid point count must be a power of two >= 4, got {n}")));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let wavenumbers = (0..n)
            .map(|k| {
                let m = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
                2.0 * std::f64::consts::PI * m as f64 / length
            })
            .collect();
        Ok(Arc::new(Self { length, n, fwd, inv, wavenumbers }))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Signed wavenumber of mode index k (FFT storage order).
    pub fn wavenumber(&self, k: usize) -> f64 {
        self.wavenumbers[k]
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Physical coordinate of sample j.
    pub fn point(&self, j: usize) -> f64 {
        -0.5 * self.length + self.spacing() * j as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Largest resolved wavenumber magnitude (Nyquist).
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    fn same_grid(&self, other: &Grid1D) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.length == other.length)
    }

    /// Unnormalized in-place transforms for hot paths that fuse their own
    /// normalization and phase handling.
    pub(crate) fn fft_forward_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, scratch);
    }

    pub(crate) fn fft_inverse_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, scratch);
    }

    pub(crate) fn fft_scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }
}

/// Real-valued samples on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
}

/// Fourier coefficients of a real field, FFT storage order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid1D>,
    modes: Vec<Complex64>,
}

impl Field {
    pub fn from_values(grid: Arc<Grid1D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "field has {} samples but grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.point(j))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid1D>, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![c; n] }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(self.grid.same_grid(&other.grid), "fields live on different grids");
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a - b)
    }
}

impl Spectrum {
    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.len();
        Self { grid, modes: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_modes(grid: Arc<Grid1D>, modes: Vec<Complex64>) -> Result<Self> {
        if modes.len() != grid.len() {
            return Err(Error::Parameter("mode count does not match grid".into()));
        }
        Ok(Self { grid, modes })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    /// Multiply each mode by (i xi)^order. Odd orders zero the Nyquist mode,
    /// which keeps derivatives of real fields real.
    pub fn derivative(&self, order: usize) -> Spectrum {
        let mut out = self.clone();
        out.derivative_in_place(order);
        out
    }

    pub fn derivative_in_place(&mut self, order: usize) {
        if order == 0 {
            return;
        }
        let n = self.grid.len();
        for (k, m) in self.modes.iter_mut().enumerate() {
            let xi = self.grid.wavenumbers[k];
            if order % 2 == 1 && k == n / 2 {
                *m = Complex64::new(0.0, 0.0);
                continue;
            }
            let factor = Complex64::new(0.0, xi).powi(order as i32);
            *m *= factor;
        }
    }

    /// Zero every mode with |m| > N/3 (2/3-rule dealiasing filter).
    pub fn dealias_in_place(&mut self) {
        let n = self.grid.len() as i64;
        let cut = n / 3;
        for (k, m) in self.modes.iter_mut().enumerate() {
            let signed = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
            if signed.abs() > cut {
                *m = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// L^2 norm of the order-th derivative straight from the mode sum.
    pub fn l2_derivative(&self, order: usize, drop_zero_mode: bool) -> f64 {
        let l = self.grid.length();
        let mut acc = 0.0;
        for (k, m) in self.modes.iter().enumerate() {
            if drop_zero_mode && k == 0 {
                continue;
            }
            let xi = self.grid.wavenumbers[k];
            acc += xi.powi(2 * order as i32) * m.norm_sqr();
        }
        (l * acc).sqrt()
    }

    /// H^s norm via the Parseval sum, sum_{l=0..s} ||D^l f||_{L^2}^2.
    pub fn sobolev_norm(&self, s: usize, drop_zero_mode: bool) -> f64 {
        let l = self.grid.length();
        let mut acc = 0.0;
        for (k, m) in self.modes.iter().enumerate() {
            if drop_zero_mode && k == 0 {
                continue;
            }
            let xi2 = self.grid.wavenumbers[k].powi(2);
            let mut weight = 1.0;
            let mut pow = 1.0;
            for _ in 0..s {
                pow *= xi2;
                weight += pow;
            }
            acc += weight * m.norm_sqr();
        }
        (l * acc).sqrt()
    }
}

/// Forward transform: fhat_k = (1/N) sum_j f(x_j) e^{-i xi_k x_j}.
pub fn forward(f: &Field) -> Spectrum {
    let grid = f.grid.clone();
    let n = grid.len();
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fwd.process(&mut buf);
    // x_j = -L/2 + j dx shifts each mode by e^{+i pi k}.
    let inv_n = 1.0 / n as f64;
    for (k, m) in buf.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *m *= sign * inv_n;
    }
    Spectrum { grid, modes: buf }
}

/// Inverse transform back to physical samples; imaginary residue is dropped.
pub fn inverse(s: &Spectrum) -> Field {
    let grid = s.grid.clone();
    let mut buf: Vec<Complex64> = s
        .modes
        .iter()
        .enumerate()
        .map(|(k, &m)| if k % 2 == 0 { m } else { -m })
        .collect();
    grid.inv.process(&mut buf);
    Field {
        grid,
        values: buf.into_iter().map(|c| c.re).collect(),
    }
}

/// Exact differentiation of the trigonometric interpolant.
///
/// High orders amplify the top modes by xi^order; beyond the resolution limit
/// the result is meaningless for sampled data, so a diagnostic is logged.
pub fn spectral_derivative(f: &Field, order: usize) -> Field {
    if order > 0 {
        let amp = f.grid.max_wavenumber().powi(order as i32);
        if amp > 1e12 {
            log::warn!(
                "spectral derivative of order {order} amplifies the Nyquist mode by {amp:.2e}; \
                 results are meaningful only for strongly band-limited data"
            );
        }
    }
    let mut s = forward(f);
    s.derivative_in_place(order);
    inverse(&s)
}

/// Discrete norm kinds over the periodic box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    /// L^p with 1 <= p; use `f64::INFINITY` for the sup norm.
    Lp(f64),
    /// Sobolev H^s.
    Hs(usize),
    /// W^{k,1}: sum of L^1 norms of derivatives 0..=k.
    Wk1(usize),
}

impl NormKind {
    pub fn label(&self) -> String {
        match self {
            NormKind::Lp(p) if p.is_infinite() => "Linf".to_string(),
            NormKind::Lp(p) => format!("L{p}"),
            NormKind::Hs(s) => format!("H{s}"),
            NormKind::Wk1(k) => format!("W{k}1"),
        }
    }
}

/// Quadrature by the rectangle rule (spectrally accurate for smooth periodic
/// data); H^s goes through the Parseval mode sum.
pub fn norm(f: &Field, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Lp(p) => {
            if p.is_infinite() {
                return Ok(f.max_abs());
            }
            if p < 1.0 {
                return Err(Error::Parameter(format!("L^p norm requires p >= 1, got {p}")));
            }
            let dx = f.grid.spacing();
            let sum: f64 = f.values.iter().map(|v| v.abs().powf(p)).sum();
            Ok((dx * sum).powf(1.0 / p))
        }
        NormKind::Hs(s) => Ok(forward(f).sobolev_norm(s, false)),
        NormKind::Wk1(k) => {
            let spec = forward(f);
            let mut total = 0.0;
            for l in 0..=k {
                let d = inverse(&spec.derivative(l));
                total += norm(&d, NormKind::Lp(1.0))?;
            }
            Ok(total)
        }
    }
}

/// Smoothness of the frequency cutoff profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffProfile {
    /// C^infinity bump-based transition between the two radii.
    Smooth,
    /// Indicator of |xi| <= inner radius (outer radius unused).
    Sharp,
}

/// Pair of complementary frequency cutoffs chi_low + chi_high = 1.
#[derive(Clone, Copy, Debug)]
pub struct CutoffPair {
    inner: f64,
    outer: f64,
    profile: CutoffProfile,
}

impl CutoffPair {
    pub fn new(inner: f64, outer: f64, profile: CutoffProfile) -> Result<Self> {
        if !(inner > 0.0) || !(outer > inner) {
            return Err(Error::Parameter(format!(
                "cutoff radii must satisfy 0 < r0 < R0, got r0={inner}, R0={outer}"
            )));
        }
        Ok(Self { inner, outer, profile })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn profile(&self) -> CutoffProfile {
        self.profile
    }

    /// chi_low(xi): 1 for |xi| <= r0, 0 for |xi| >= R0, smooth in between.
    pub fn chi_low(&self, xi: f64) -> f64 {
        let a = xi.abs();
        match self.profile {
            CutoffProfile::Sharp => {
                if a <= self.inner {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffProfile::Smooth => {
                if a <= self.inner {
                    1.0
                } else if a >= self.outer {
                    0.0
                } else {
                    let s = (a - self.inner) / (self.outer - self.inner);
                    let g = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
                    g(1.0 - s) / (g(s) + g(1.0 - s))
                }
            }
        }
    }

    pub fn chi_high(&self, xi: f64) -> f64 {
        1.0 - self.chi_low(xi)
    }
}

/// Split into low and high frequency parts. The high part is the pointwise
/// remainder, so f_low + f_high reproduces f exactly.
pub fn freq_split(f: &Field, cutoffs: &CutoffPair) -> (Field, Field) {
    let mut s = forward(f);
    for (k, m) in s.modes_mut().iter_mut().enumerate() {
        let xi = f.grid.wavenumber(k);
        *m *= cutoffs.chi_low(xi);
    }
    let low = inverse(&s);
    let high = f.sub(&low);
    (low, high)
}

/// Gaussian bump amplitude * exp(-d^2 / (2 sigma^2)) with the periodic
/// minimal-image distance d to the center.
pub fn gaussian_bump(grid: Arc<Grid1D>, center: f64, sigma: f64, amplitude: f64) -> Field {
    let l = grid.length();
    Field::from_fn(grid, |x| {
        let mut d = x - center;
        d -= l * (d / l).round();
        amplitude * (-d * d / (2.0 * sigma * sigma)).exp()
    })
}

/// Flat binary layout: u64 little-endian sample count, then f64 LE samples.
pub fn write_field_binary<W: Write>(f: &Field, mut w: W) -> Result<()> {
    w.write_all(&(f.len() as u64).to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(grid: Arc<Grid1D>, mut r: R) -> Result<Field> {
    let mut len_buf = [0u8; 8];
    r.read_exact(&mut len_buf)?;
    let n = u64::from_le_bytes(len_buf) as usize;
    if n != grid.len() {
        return Err(Error::Parameter(format!(
            "stored field has {n} samples but grid has {}",
            grid.len()
        )));
    }
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Field::from_values(grid, values)
}

/// Plain-text two-column dump (x, value) for debugging.
pub fn write_field_text<W: Write>(f: &Field, mut w: W) -> Result<()> {
    for (j, v) in f.values.iter().enumerate() {
        writeln!(w, "{:.17e} {:.17e}", f.grid.point(j), v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> Arc<Grid1D> {
        Grid1D::new(2.0 * PI, n).unwrap()
    }

    /// Random real field with spectral support |m| <= band.
    fn band_limited(grid: &Arc<Grid1D>, band: usize, seed: u64) -> Field {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut spec = Spectrum::zeros(grid.clone());
        let n = grid.len();
        for m in 1..=band {
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            spec.modes_mut()[m] = Complex64::new(re, im);
            spec.modes_mut()[n - m] = Complex64::new(re, -im);
        }
        spec.modes_mut()[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        inverse(&spec)
    }

    #[test]
    fn round_trip_is_identity() {
        let grid = unit_grid(64);
        let f = band_limited(&grid, 20, 7);
        let g = inverse(&forward(&f));
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_sine_is_k_cosine() {
        let grid = unit_grid(256);
        for k in [1.0, 3.0, 7.0] {
            let f = Field::from_fn(grid.clone(), |x| (k * x).sin());
            let df = spectral_derivative(&f, 1);
            let exact = Field::from_fn(grid.clone(), |x| k * (k * x).cos());
            let err = df.sub(&exact).max_abs();
            assert!(err < 1e-10, "k={k}, err={err}");
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let grid = unit_grid(64);
        let f = Field::constant(grid, 4.2);
        for order in 1..=4 {
            assert!(spectral_derivative(&f, order).max_abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_eighth_order_finite_differences() {
        // Independent oracle: 8th-order central differences on a periodic stencil.
        let grid = Grid1D::new(2.0 * PI, 4096).unwrap();
        let f = band_limited(&grid, 40, 11);
        let df = spectral_derivative(&f, 1);
        let v = f.values();
        let n = v.len();
        let dx = grid.spacing();
        let w = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let mut max_err = 0.0_f64;
        for j in 0..n {
            let mut fd = 0.0;
            for (i, wi) in w.iter().enumerate() {
                let s = i + 1;
                fd += wi * (v[(j + s) % n] - v[(j + n - s) % n]);
            }
            fd /= dx;
            max_err = max_err.max((fd - df.values()[j]).abs());
        }
        assert!(max_err <= 1e-6, "max FD mismatch {max_err}");
    }

    #[test]
    fn l2_norm_of_sine() {
        let grid = unit_grid(128);
        let f = Field::from_fn(grid, |x| x.sin());
        let n = norm(&f, NormKind::Lp(2.0)).unwrap();
        assert_relative_eq!(n, PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn h1_norm_of_sine_analytic() {
        // ||sin(kx)||_{H^1}^2 = (L/2)(1 + k^2) on [0, L).
        let l = 10.0;
        let grid = Grid1D::new(l, 256).unwrap();
        let k = 2.0 * PI * 3.0 / l; // on-grid mode
        let f = Field::from_fn(grid, |x| (k * x).sin());
        let n = norm(&f, NormKind::Hs(1)).unwrap();
        assert_relative_eq!(n, (l / 2.0 * (1.0 + k * k)).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let grid = unit_grid(64);
        let f = Field::zeros(grid);
        for kind in [NormKind::Lp(1.0), NormKind::Lp(2.0), NormKind::Lp(f64::INFINITY), NormKind::Hs(3), NormKind::Wk1(2)] {
            assert_eq!(norm(&f, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn lp_below_one_rejected() {
        let grid = unit_grid(64);
        let f = Field::constant(grid, 1.0);
        assert!(matches!(norm(&f, NormKind::Lp(0.5)), Err(Error::Parameter(_))));
    }

    #[test]
    fn wk1_is_sum_of_l1_norms() {
        let grid = unit_grid(128);
        let f = band_limited(&grid, 5, 3);
        let w1 = norm(&f, NormKind::Wk1(1)).unwrap();
        let l1 = norm(&f, NormKind::Lp(1.0)).unwrap();
        let dl1 = norm(&spectral_derivative(&f, 1), NormKind::Lp(1.0)).unwrap();
        assert_relative_eq!(w1, l1 + dl1, max_relative = 1e-12);
    }

    #[test]
    fn parseval_identity() {
        let grid = unit_grid(512);
        for seed in 0..5u64 {
            let f = band_limited(&grid, 100, seed);
            let phys = norm(&f, NormKind::Lp(2.0)).unwrap();
            let modal = forward(&f).l2_derivative(0, false);
            assert_relative_eq!(phys, modal, max_relative = 1e-12);
        }
    }

    #[test]
    fn derivative_norm_matches_weighted_mode_sum() {
        let grid = unit_grid(512);
        let f = band_limited(&grid, 80, 13);
        let phys = norm(&spectral_derivative(&f, 1), NormKind::Lp(2.0)).unwrap();
        let modal = forward(&f).l2_derivative(1, false);
        assert_relative_eq!(phys, modal, max_relative = 1e-12);
    }

    #[test]
    fn cutoff_partition_of_unity() {
        let c = CutoffPair::new(0.5, 4.0, CutoffProfile::Smooth).unwrap();
        for i in 0..1000 {
            let xi = -6.0 + 12.0 * i as f64 / 999.0;
            let lo = c.chi_low(xi);
            assert!((0.0..=1.0).contains(&lo));
            assert_relative_eq!(lo + c.chi_high(xi), 1.0, max_relative = 1e-15);
        }
        assert_eq!(c.chi_low(0.3), 1.0);
        assert_eq!(c.chi_low(5.0), 0.0);
    }

    #[test]
    fn freq_split_reconstructs_exactly() {
        let grid = unit_grid(256);
        let f = band_limited(&grid, 60, 21);
        let c = CutoffPair::new(2.0, 8.0, CutoffProfile::Smooth).unwrap();
        let (lo, hi) = freq_split(&f, &c);
        let err = lo.add(&hi).sub(&f).max_abs();
        assert!(err < 1e-13, "reconstruction must hold to machine precision, err={err}");
    }

    #[test]
    fn freq_split_passes_low_mode_untouched() {
        let grid = unit_grid(256);
        let f = Field::from_fn(grid, |x| (1.0 * x).cos());
        let c = CutoffPair::new(2.0, 8.0, CutoffProfile::Smooth).unwrap();
        let (lo, hi) = freq_split(&f, &c);
        assert!(lo.sub(&f).max_abs() < 1e-13);
        assert!(hi.max_abs() < 1e-13);
    }

    #[test]
    fn sharp_cutoff_splits_l2_energy() {
        let grid = unit_grid(256);
        let f = band_limited(&grid, 60, 5);
        let c = CutoffPair::new(10.5, 11.0, CutoffProfile::Sharp).unwrap();
        let (lo, hi) = freq_split(&f, &c);
        let total = norm(&f, NormKind::Lp(2.0)).unwrap().powi(2);
        let split = norm(&lo, NormKind::Lp(2.0)).unwrap().powi(2)
            + norm(&hi, NormKind::Lp(2.0)).unwrap().powi(2);
        assert_relative_eq!(total, split, max_relative = 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let grid = unit_grid(64);
        let f = band_limited(&grid, 10, 9);
        let mut buf = Vec::new();
        write_field_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 * 64);
        let g = read_field_binary(grid, buf.as_slice()).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn bump_uses_minimal_image() {
        let grid = Grid1D::new(100.0, 128).unwrap();
        let f = gaussian_bump(grid.clone(), 49.0, 2.0, 1.0);
        // Point at x=-49 is 2 units away through the boundary, not 98.
        let j = grid.points().iter().position(|&x| (x + 50.0).abs() < 1e-9).unwrap();
        assert!(f.values()[j] > (-4.0_f64 / 8.0).exp() - 1e-9);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid1D::new(1.0, 100).is_err());
        assert!(Grid1D::new(-1.0, 64).is_err());
        assert!(Grid1D::new(1.0, 2).is_err());
    }
}

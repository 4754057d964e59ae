//! The experiment catalog: each named experiment builds its data, runs the
//! pipeline (solve or evaluate, measure, fit), and writes time-series files
//! plus a manifest with pass/fail records against the theoretical targets.

use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;

use crate::cli::config::ExperimentConfig;
use crate::cli::manifest::{CheckRecord, ManifestBuilder, RunManifest};
use crate::decay::{fit_rate, DecayReport, FitMode, NormSeries};
use crate::error::{Error, Result};
use crate::grid::{self, Field, NormKind};
use crate::model::{Representation, StateTriple};
use crate::solver::{
    evolve_nonlinear, evolve_pair, evolve_parabolic, linear_modes_at, FormRoute, SolverConfig,
    Trajectory,
};
use crate::spectral::{
    expm2, green_difference_field, green_symbol, green_tilde_physical, regime_check, symbol_matrix,
    SystemKind, C64,
};

/// Algebraic decay targets for D^l of the acoustic pair: -(1/4) - l/2.
fn pair_target(l: usize) -> f64 {
    -(0.25 + 0.5 * l as f64)
}

/// Algebraic decay targets for D^k of the pair difference: -(3/4) - k/2.
fn diff_target(k: usize) -> f64 {
    -(0.75 + 0.5 * k as f64)
}

fn series_csv(series: &NormSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(series.len() * 48 + 32);
    out.extend_from_slice(b"t,value,norm_kind,l\n");
    for (t, v) in series.times.iter().zip(&series.values) {
        let _ = writeln!(out, "{t:.17e},{v:.17e},{},{}", series.kind.label(), series.derivative_order);
    }
    out
}

/// Read a series file written by `series_csv`.
pub fn read_series_csv(path: &Path) -> Result<NormSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("t,value") {
        return Err(Error::Usage(format!("{}: not a series file", path.display())));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut kind = NormKind::Lp(2.0);
    let mut order = 0usize;
    for line in lines {
        let mut parts = line.split(',');
        let t: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Usage(format!("bad series row: {line}")))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Usage(format!("bad series row: {line}")))?;
        if let Some(k) = parts.next() {
            kind = match k {
                "L1" => NormKind::Lp(1.0),
                "L2" => NormKind::Lp(2.0),
                "Linf" => NormKind::Lp(f64::INFINITY),
                other => {
                    if let Some(s) = other.strip_prefix('H').and_then(|s| s.parse().ok()) {
                        NormKind::Hs(s)
                    } else {
                        kind
                    }
                }
            };
        }
        if let Some(l) = parts.next().and_then(|s| s.parse().ok()) {
            order = l;
        }
        times.push(t);
        values.push(v);
    }
    NormSeries::new(times, values, kind, order, "file")
}

fn emit_series(mb: &mut ManifestBuilder, name: &str, series: &NormSeries) -> Result<()> {
    mb.emit(name, &series_csv(series))
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

const CHECKPOINT_NAME: &str = "checkpoint.bin";

fn write_checkpoint(dir: &Path, time: f64, state: &StateTriple) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&time.to_le_bytes());
    grid::write_field_binary(&state.volume, &mut bytes)?;
    grid::write_field_binary(&state.velocity, &mut bytes)?;
    grid::write_field_binary(&state.phase, &mut bytes)?;
    std::fs::write(dir.join(CHECKPOINT_NAME), bytes)?;
    Ok(())
}

fn read_checkpoint(dir: &Path, cfg: &ExperimentConfig) -> Result<Option<(f64, StateTriple)>> {
    let path = dir.join(CHECKPOINT_NAME);
    if !path.exists() {
        return Ok(None);
    }
    let bytes = std::fs::read(&path)?;
    let mut cursor = std::io::Cursor::new(&bytes);
    let mut tbuf = [0u8; 8];
    std::io::Read::read_exact(&mut cursor, &mut tbuf)?;
    let time = f64::from_le_bytes(tbuf);
    let g = cfg.grid()?;
    let volume = grid::read_field_binary(g.clone(), &mut cursor)?;
    let velocity = grid::read_field_binary(g.clone(), &mut cursor)?;
    let phase = grid::read_field_binary(g, &mut cursor)?;
    Ok(Some((time, StateTriple::new(volume, velocity, phase, Representation::Perturbation))))
}

// ---------------------------------------------------------------------------
// Shared measurement helpers
// ---------------------------------------------------------------------------

fn pair_series(traj: &Trajectory, l: usize) -> Result<NormSeries> {
    NormSeries::new(
        traj.records.iter().map(|r| r.time).collect(),
        traj.records.iter().map(|r| r.l2_pair[l]).collect(),
        NormKind::Lp(2.0),
        l,
        "nw",
    )
}

fn phase_series(traj: &Trajectory, s: usize) -> Result<NormSeries> {
    NormSeries::new(
        traj.records.iter().map(|r| r.time).collect(),
        traj.records.iter().map(|r| r.hs_phase).collect(),
        NormKind::Hs(s),
        0,
        "phase",
    )
}

/// Fit the three leading derivative orders of the acoustic pair against the
/// (1+t)^{-1/4 - l/2} family and emit series plus reports.
fn pair_decay_reports(
    mb: &mut ManifestBuilder,
    traj: &Trajectory,
    window: (f64, f64),
    hard_upper: bool,
    prefix: &str,
) -> Result<()> {
    let tolerances = [0.10, 0.15, 0.20];
    let hard_slack = 0.05;
    for l in 0..=2 {
        let series = pair_series(traj, l)?;
        emit_series(mb, &format!("{prefix}_l{l}_L2.csv"), &series)?;
        let fit = fit_rate(&series, FitMode::Algebraic, window)?;
        let target = pair_target(l);
        let tol = tolerances[l];
        // The hard one-sided requirement applies to l = 0, 1.
        let report = if hard_upper && l <= 1 {
            DecayReport::with_bounds(
                &series,
                &fit,
                target,
                tol,
                Some(target - tol),
                Some((target + tol).min(target + hard_slack)),
                0.0,
            )
        } else {
            DecayReport::two_sided(&series, &fit, target, tol, 0.0)
        };
        mb.report(report);
    }
    Ok(())
}

fn phase_decay_report(
    mb: &mut ManifestBuilder,
    traj: &Trajectory,
    s: usize,
    window: (f64, f64),
    rate_target: f64,
    name: &str,
) -> Result<()> {
    let series = phase_series(traj, s)?;
    emit_series(mb, &format!("{name}.csv"), &series)?;
    let fit = fit_rate(&series, FitMode::Exponential, window)?;
    // Exponential targets: [target - 0.2, target + 0.05].
    let report = DecayReport::with_bounds(
        &series,
        &fit,
        rate_target,
        0.2,
        Some(rate_target - 0.2),
        Some(rate_target + 0.05),
        0.0,
    );
    mb.report(report);
    Ok(())
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

fn nonlinear_run(cfg: &ExperimentConfig, mb: &ManifestBuilder, t_final: f64) -> Result<Trajectory> {
    let params = cfg.model_params()?;
    let mut scfg = SolverConfig { t_final, ..cfg.solver_config()? };
    let mut init = cfg.initial_state()?;
    if cfg.resume()? {
        if let Some((t0, state)) = read_checkpoint(mb.out_dir(), cfg)? {
            if t0 < t_final {
                scfg.start_time = t0;
                init = state;
            }
        }
    }
    evolve_nonlinear(&init, &params, &scfg, FormRoute::Perturbation)
}

fn nsac_decay(cfg: &ExperimentConfig, mb: &mut ManifestBuilder) -> Result<()> {
    let params = cfg.model_params()?;
    let traj = nonlinear_run(cfg, mb, cfg.solver_config()?.t_final)?;
    pair_decay_reports(mb, &traj, cfg.fit_window()?, true, "nw")?;
    phase_decay_report(
        mb,
        &traj,
        cfg.sobolev_order()?,
        cfg.exp_fit_window()?,
        params.damping_rate(),
        "phase_Hs",
    )?;
    mb.guard(traj.guard_range.into());
    write_checkpoint(mb.out_dir(), traj.final_time, &traj.final_state)?;
    Ok(())
}

fn parabolic_decay(cfg: &ExperimentConfig, mb: &mut ManifestBuilder) -> Result<()> {
    let params = cfg.model_params()?;
    let scfg = cfg.solver_config()?;
    let init = cfg.initial_state()?;
    let traj = evolve_parabolic(&init, &params, &scfg)?;
    pair_decay_reports(mb, &traj, cfg.fit_window()?, false, "nw_tilde")?;
    phase_decay_report(
        mb,
        &traj,
        cfg.sobolev_order()?,
        cfg.exp_fit_window()?,
        params.interface_thickness,
        "phase_tilde_Hs",
    )?;
    mb.guard(traj.guard_range.into());
    Ok(())
}

fn difference_reports(
    cfg: &ExperimentConfig,
    mb: &mut ManifestBuilder,
    lp_norms: bool,
) -> Result<()> {
    let params = cfg.model_params()?;
    let scfg = cfg.solver_config()?;
    let init = cfg.initial_state()?;
    let pair = evolve_pair(&init, &params, &scfg)?;
    let times: Vec<f64> = pair.diffs.iter().map(|d| d.time).collect();
    let alpha = cfg.alpha()?;
    let s = cfg.sobolev_order()?;

    if lp_norms {
        // L^p rates of the pair difference at k=0: target -(1/2)(2 - 1/p) + alpha,
        // one-sided hard bound (the L^1 channel is floor-sensitive).
        let window = cfg.fit_window()?;
        for (label, values, target) in [
            ("L1", pair.diffs.iter().map(|d| d.l1_pair).collect::<Vec<_>>(), -0.5),
            ("Linf", pair.diffs.iter().map(|d| d.linf_pair).collect::<Vec<_>>(), -1.0),
        ] {
            let kind = if label == "L1" { NormKind::Lp(1.0) } else { NormKind::Lp(f64::INFINITY) };
            let series = NormSeries::new(times.clone(), values, kind, 0, "nw-diff")?;
            emit_series(mb, &format!("nw_diff_k0_{label}.csv"), &series)?;
            let fit = fit_rate(&series, FitMode::Algebraic, window)?;
            mb.report(DecayReport::with_bounds(
                &series,
                &fit,
                target,
                0.25,
                None,
                Some(target + 0.25),
                alpha,
            ));
        }
        return Ok(());
    }

    // L^2 rates of D^k(n - n~, w - w~) for k = 0, 1.
    let window = cfg.fit_window()?;
    for k in 0..=1usize {
        let series = NormSeries::new(
            times.clone(),
            pair.diffs.iter().map(|d| d.l2_pair[k]).collect(),
            NormKind::Lp(2.0),
            k,
            "nw-diff",
        )?;
        emit_series(mb, &format!("nw_diff_k{k}_L2.csv"), &series)?;
        let fit = fit_rate(&series, FitMode::Algebraic, window)?;
        let target = diff_target(k);
        let report = if k == 0 {
            // Tolerance [-0.95, -0.55] with the upper end as the hard bound.
            DecayReport::with_bounds(&series, &fit, target, 0.20, Some(-0.95), Some(-0.55), alpha)
        } else {
            DecayReport::two_sided(&series, &fit, target, 0.25, alpha)
        };
        mb.report(report);
    }

    // Exponential approach of the phase channels: rate >= eta-bar(alpha) - 0.1.
    let series = NormSeries::new(
        times,
        pair.diffs.iter().map(|d| d.hs_phase).collect(),
        NormKind::Hs(s),
        0,
        "phase-diff",
    )?;
    emit_series(mb, "phase_diff_Hs.csv", &series)?;
    let fit = fit_rate(&series, FitMode::Exponential, cfg.diff_exp_fit_window()?)?;
    let eta_bar = params.phase_rate_floor_slack(alpha);
    mb.report(DecayReport::with_bounds(
        &series,
        &fit,
        eta_bar,
        0.1,
        Some(eta_bar - 0.1),
        None,
        alpha,
    ));
    mb.guard(pair.full.guard_range.into());
    Ok(())
}

fn linear_decay(cfg: &ExperimentConfig, mb: &mut ManifestBuilder) -> Result<()> {
    let params = cfg.model_params()?;
    let scfg = cfg.solver_config()?;
    let init = cfg.initial_state()?;
    let s = cfg.sobolev_order()?;
    let fc = scfg.floor_correct;
    let n0 = grid::forward(&init.volume);
    let w0 = grid::forward(&init.velocity);
    let stride_t = scfg.dt * scfg.snapshot_stride as f64;
    let count = (scfg.t_final / stride_t).round() as usize;
    let times: Vec<f64> = (0..=count).map(|i| i as f64 * stride_t).collect();

    let mut pair_vals = vec![Vec::with_capacity(times.len()); 3];
    let mut diff_vals = vec![Vec::with_capacity(times.len()); 2];
    for &t in &times {
        let (n_t, w_t) = linear_modes_at(&n0, &w0, t, &params, SystemKind::Nsac)?;
        let (nt_t, wt_t) = linear_modes_at(&n0, &w0, t, &params, SystemKind::Parabolic)?;
        for (l, slot) in pair_vals.iter_mut().enumerate() {
            let a = n_t.l2_derivative(l, fc);
            let b = w_t.l2_derivative(l, fc);
            slot.push((a * a + b * b).sqrt());
        }
        for (k, slot) in diff_vals.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (idx, (m1, m2)) in n_t.modes().iter().zip(nt_t.modes()).enumerate() {
                if fc && idx == 0 {
                    continue;
                }
                let xi2 = n_t.grid().wavenumber(idx).powi(2);
                let dn = m1 - m2;
                let dw = w_t.modes()[idx] - wt_t.modes()[idx];
                acc += xi2.powi(k as i32) * (dn.norm_sqr() + dw.norm_sqr());
            }
            slot.push((n_t.grid().length() * acc).sqrt());
        }
    }

    let window = cfg.fit_window()?;
    let tolerances = [0.10, 0.15, 0.20];
    for (l, vals) in pair_vals.into_iter().enumerate() {
        let series = NormSeries::new(times.clone(), vals, NormKind::Lp(2.0), l, "nw-linear")?;
        emit_series(mb, &format!("linear_nw_l{l}_L2.csv"), &series)?;
        let fit = fit_rate(&series, FitMode::Algebraic, window)?;
        mb.report(DecayReport::two_sided(&series, &fit, pair_target(l), tolerances[l], 0.0));
    }
    for (k, vals) in diff_vals.into_iter().enumerate() {
        let series = NormSeries::new(times.clone(), vals, NormKind::Lp(2.0), k, "nw-linear-diff")?;
        emit_series(mb, &format!("linear_diff_k{k}_L2.csv"), &series)?;
        let fit = fit_rate(&series, FitMode::Algebraic, window)?;
        mb.report(DecayReport::two_sided(&series, &fit, diff_target(k), 0.15, 0.0));
    }
    let _ = s;
    Ok(())
}

fn spectrum_certify(cfg: &ExperimentConfig, mb: &mut ManifestBuilder) -> Result<()> {
    let params = cfg.model_params()?;
    let cutoffs = cfg.cutoffs()?;

    // Lemma-level regime certification over a dense logarithmic sample.
    match regime_check(&params, &cutoffs, cfg.spectrum_samples()?) {
        Ok(bounds) => {
            let mut csv = Vec::new();
            csv.extend_from_slice(b"xi,re_lambda1,re_lambda2,bound,margin\n");
            for row in &bounds.table {
                let _ = writeln!(
                    csv,
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    row.xi, row.re_lambda[0], row.re_lambda[1], row.bound, row.margin
                );
            }
            mb.emit("regime_table.csv", &csv)?;
            mb.check(CheckRecord::ge(
                "regime-certification",
                bounds.worst_margin,
                0.0,
                format!(
                    "nu_hat={}, R1={}, R2={}, {} samples",
                    bounds.nu_hat,
                    bounds.r1,
                    bounds.r2,
                    bounds.table.len()
                ),
            ));
        }
        Err(Error::Certification { xi, regime, re_lambda, bound }) => {
            mb.check(CheckRecord::le(
                "regime-certification",
                re_lambda,
                bound,
                format!("violation at xi={xi} in the {regime} regime"),
            ));
        }
        Err(e) => return Err(e),
    }

    // Green symbol vs the dense matrix exponential on seeded random pairs.
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed()?.wrapping_add(1));
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let xi = 10.0_f64.powf(rng.gen_range(-3.0..1.48))
            * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let t = rng.gen_range(0.0..3.0);
        for which in [SystemKind::Nsac, SystemKind::Parabolic] {
            let g = green_symbol(xi, t, &params, which)?.matrix;
            let e = expm2(&symbol_matrix(xi, &params, which)?.scale(C64::new(t, 0.0)));
            worst = worst.max(g.max_abs_diff(&e) / e.max_abs().max(1.0));
        }
    }
    mb.check(CheckRecord::le(
        "green-symbol-oracle",
        worst,
        1e-10,
        "entrywise agreement with scaling-and-squaring expm on 1000 seeded (xi, t) pairs",
    ));

    // Semigroup property on seeded samples.
    let mut worst_sg = 0.0_f64;
    for _ in 0..200 {
        let xi = 10.0_f64.powf(rng.gen_range(-2.0..1.0));
        let (t1, t2) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        for which in [SystemKind::Nsac, SystemKind::Parabolic] {
            let g12 = green_symbol(xi, t1 + t2, &params, which)?.matrix;
            let comp = green_symbol(xi, t1, &params, which)?
                .matrix
                .mul(&green_symbol(xi, t2, &params, which)?.matrix);
            worst_sg = worst_sg.max(g12.max_abs_diff(&comp) / g12.max_abs().max(1.0));
        }
    }
    mb.check(CheckRecord::le("green-semigroup", worst_sg, 1e-10, "G(t+s) = G(t) G(s) on seeded samples"));

    // Closed-form parabolic Green function against the inverse transform.
    let g = cfg.grid()?;
    let mut worst_gt = 0.0_f64;
    for &t in &[1.0, 10.0, 100.0] {
        let mut spectra = vec![grid::Spectrum::zeros(g.clone()); 4];
        for k in 0..g.len() {
            let m = green_symbol(g.wavenumber(k), t, &params, SystemKind::Parabolic)?.matrix;
            let scale = C64::new(1.0 / g.length(), 0.0);
            for (idx, (r, c)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                spectra[idx].modes_mut()[k] = m.e[*r][*c] * scale;
            }
        }
        let fields: Vec<Field> = spectra.iter().map(grid::inverse).collect();
        for j in 0..g.len() {
            let exact = green_tilde_physical(g.point(j), t, &params)?;
            for (idx, (r, c)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                worst_gt = worst_gt.max((fields[idx].values()[j] - exact[*r][*c]).abs());
            }
        }
    }
    mb.check(CheckRecord::le(
        "green-tilde-inverse-transform",
        worst_gt,
        1e-6,
        "closed-form kernel vs inverse discrete transform at t in {1, 10, 100}",
    ));
    Ok(())
}

fn green_diff(cfg: &ExperimentConfig, mb: &mut ManifestBuilder) -> Result<()> {
    let params = cfg.model_params()?;
    let g = cfg.grid()?;
    let c_env = cfg.envelope_c()?;
    let mut csv = Vec::new();
    csv.extend_from_slice(b"t,envelope_c,sup_ratio,max_abs_outside,window\n");
    for &t in &[1.0, 5.0, 10.0, 50.0] {
        let gd = green_difference_field(t, &g, &params, c_env)?;
        let r = gd.report;
        let _ = writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.t, r.envelope_constant, r.sup_ratio, r.max_abs_outside, r.window
        );
        mb.check(CheckRecord::le(
            format!("envelope-ratio-t{t}"),
            if r.sup_ratio.is_finite() { r.sup_ratio } else { f64::NAN },
            1e9,
            "sup |entry| / Gaussian envelope over the ridge window (recorded; finite required)",
        ));
    }
    mb.emit("envelope.csv", &csv)?;

    // High-frequency tail of the symbol: the (1,1) entry approaches the
    // damped constant symbol as xi grows.
    let t = 1.0;
    let c = params.sound_speed()?;
    let nu = params.reference_viscosity()?;
    let damp = (-c * c * t / nu).exp();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut tail = f64::NAN;
    for &xi in &[20.0, 40.0, 80.0, 160.0] {
        let m = green_symbol(xi, t, &params, SystemKind::Nsac)?.matrix;
        tail = (m.e[0][0] - C64::new(damp, 0.0)).norm();
        if tail >= prev {
            monotone = false;
        }
        prev = tail;
    }
    mb.check(CheckRecord::le(
        "symbol-tail-limit",
        if monotone { tail } else { f64::NAN },
        1e-3,
        "entry (1,1) of G-hat minus the damped constant symbol decays in xi",
    ));
    Ok(())
}

fn energy_lyapunov(cfg: &ExperimentConfig, mb: &mut ManifestBuilder) -> Result<()> {
    let t_final = cfg.solver_config()?.t_final;
    // Run to 2T so boundedness under doubling is observable in one run.
    let traj = nonlinear_run(cfg, mb, 2.0 * t_final)?;
    let lam = &traj.step.lyapunov;
    let lam0 = lam[0];
    let mut max_rise: f64 = 0.0;
    for pair in lam.windows(2) {
        max_rise = max_rise.max(pair[1] - pair[0]);
    }
    mb.check(CheckRecord::le(
        "lyapunov-monotone",
        max_rise / lam0.max(f64::MIN_POSITIVE),
        1e-8,
        "largest per-step rise of the Lyapunov functional relative to its initial value",
    ));

    // Dissipation integral bounded as T doubles.
    let times = &traj.step.times;
    let d_at = |t_query: f64| -> f64 {
        let idx = times
            .iter()
            .position(|&t| t >= t_query)
            .unwrap_or(times.len() - 1);
        traj.step.dissipation_integral[idx]
    };
    let d_half = d_at(t_final);
    let d_full = *traj.step.dissipation_integral.last().unwrap();
    mb.check(CheckRecord::le(
        "dissipation-bounded",
        (d_full - d_half) / d_half.max(f64::MIN_POSITIVE),
        0.10,
        format!("dissipation integral increment from T={t_final} to T={}", 2.0 * t_final),
    ));

    // M(t) nondecreasing and stable under doubling.
    let m_series: Vec<f64> = traj.records.iter().map(|r| r.m_weighted).collect();
    let mut max_drop: f64 = 0.0;
    for pair in m_series.windows(2) {
        max_drop = max_drop.max(pair[0] - pair[1]);
    }
    mb.check(CheckRecord::le("m-nondecreasing", max_drop, 0.0, "running sup never decreases"));
    let m_half = traj
        .records
        .iter()
        .filter(|r| r.time <= t_final)
        .map(|r| r.m_weighted)
        .last()
        .unwrap_or(0.0);
    let m_full = *m_series.last().unwrap();
    mb.check(CheckRecord::le(
        "m-bounded",
        m_full / m_half.max(f64::MIN_POSITIVE),
        1.05,
        format!("M(2T)/M(T); M(2T)/delta0 = {}", m_full / cfg.delta0()?),
    ));

    // Emit the Lyapunov and dissipation series at the snapshot cadence.
    let stride = cfg.solver_config()?.snapshot_stride;
    let mut lam_csv = Vec::new();
    lam_csv.extend_from_slice(b"t,value,norm_kind,l\n");
    let mut dis_csv = Vec::new();
    dis_csv.extend_from_slice(b"t,value,norm_kind,l\n");
    for i in (0..times.len()).step_by(stride) {
        let _ = writeln!(lam_csv, "{:.17e},{:.17e},Lyapunov,0", times[i], lam[i]);
        let _ = writeln!(
            dis_csv,
            "{:.17e},{:.17e},Dissipation,0",
            times[i], traj.step.dissipation_integral[i]
        );
    }
    mb.emit("lyapunov.csv", &lam_csv)?;
    mb.emit("dissipation.csv", &dis_csv)?;
    mb.guard(traj.guard_range.into());
    Ok(())
}

/// Execute an experiment from the catalog; the manifest is always written,
/// marked failed when the run aborts on a guard violation or blow-up.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let name = cfg.experiment().to_string();
    let mut mb = ManifestBuilder::new(&cfg.out_dir(), &name, cfg.seed()?, cfg.echo())?;
    let outcome = match name.as_str() {
        "nsac-decay" => nsac_decay(cfg, &mut mb),
        "parabolic-decay" => parabolic_decay(cfg, &mut mb),
        "difference-decay" => difference_reports(cfg, &mut mb, false),
        "lp-decay" => difference_reports(cfg, &mut mb, true),
        "linear-decay" => linear_decay(cfg, &mut mb),
        "spectrum-certify" => spectrum_certify(cfg, &mut mb),
        "green-diff" => green_diff(cfg, &mut mb),
        "energy-lyapunov" => energy_lyapunov(cfg, &mut mb),
        other => return Err(Error::Usage(format!("unknown experiment '{other}'"))),
    };
    match outcome {
        Ok(()) => {}
        Err(e @ (Error::GuardViolation { .. } | Error::BlowUp { .. })) => mb.fail(e.to_string()),
        Err(e) => return Err(e),
    }
    mb.finish()
}

/// Run every catalog experiment under `out_root/<name>` with a worker budget.
pub fn run_catalog(
    base: &ExperimentConfig,
    out_root: &Path,
    workers: usize,
) -> Result<Vec<(String, RunManifest)>> {
    use std::sync::Mutex;
    let queue: Mutex<Vec<&str>> = Mutex::new(crate::cli::config::CATALOG.to_vec());
    let results: Mutex<Vec<(String, RunManifest)>> = Mutex::new(Vec::new());
    let errors: Mutex<Vec<Error>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let name = {
                    let mut q = queue.lock().unwrap();
                    match q.pop() {
                        Some(n) => n,
                        None => break,
                    }
                };
                let mut cfg = base.clone();
                let dir = out_root.join(name);
                let setup = cfg
                    .set("experiment", name)
                    .and_then(|_| cfg.set("out_dir", dir.to_str().unwrap_or("runs")));
                let run = setup.and_then(|_| run_experiment(&cfg));
                match run {
                    Ok(m) => results.lock().unwrap().push((name.to_string(), m)),
                    Err(e) => errors.lock().unwrap().push(e),
                }
            });
        }
    });
    let errs = errors.into_inner().unwrap();
    if let Some(e) = errs.into_iter().next() {
        return Err(e);
    }
    let mut out = results.into_inner().unwrap();
    out.sort_by_key(|(name, _)| {
        crate::cli::config::CATALOG.iter().position(|c| c == name).unwrap_or(usize::MAX)
    });
    Ok(out)
}

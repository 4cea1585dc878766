use std::f64::consts::PI;

use serde::Serialize;

use super::config::{
    BarrierParams, EquilibrateParams, LifetimeParams, ModesParams, SpinParams, TableOneParams, TransitionScanParams,
    WaistScanParams,
};
use super::table_one::{table_one as compute_table, table_rows, TableOneSettings};
use super::{num, CliError, RunContext, Task};
use crate::barrier::{estimate_barrier, BarrierWalkParams};
use crate::equilibrium::{find_equilibria, EquilibriumResult, Stability};
use crate::lifetime::{heating_report, lifetime_estimate, recoil_heating, BackgroundGas};
use crate::matching::align;
use crate::modes::{label_modes, normal_modes, Partition};
use crate::physics::constants::{joule_to_kelvin, BOLTZMANN};
use crate::physics::{intensity_from_power, stark_shift_per_intensity};
use crate::spin::{beta_sweep, compute_jij, edges, max_mode_frequency, SpinDriveConfig};
use crate::transition::{alpha_tr_scan, fit_power_law, waist_sweep, TransitionPoint};

pub(super) fn dispatch(task: Task, ctx: &mut RunContext) -> Result<(), CliError> {
    match task {
        Task::Equilibrate => equilibrate(ctx),
        Task::Modes => modes(ctx),
        Task::TransitionScan => transition_scan(ctx),
        Task::WaistScan => waist_scan(ctx),
        Task::Barrier => barrier(ctx),
        Task::Spin => spin(ctx),
        Task::Lifetime => lifetime(ctx),
        Task::TableOne => table_one(ctx),
    }
}

fn stability_str(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Metastable => "metastable",
    }
}

fn rings(counts: &[usize]) -> String {
    counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn require_ions(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Validation("n_ions must be at least 1".into()));
    }
    Ok(())
}

fn solve(ctx: &mut RunContext, n: usize, restarts: usize) -> Result<Vec<EquilibriumResult>, CliError> {
    require_ions(n)?;
    if restarts == 0 {
        return Err(CliError::Validation("restarts must be at least 1".into()));
    }
    let eqs = find_equilibria(n, &ctx.trap, &ctx.species, restarts, ctx.seed)?;
    for (k, e) in eqs.iter().enumerate() {
        if e.ring_ambiguous {
            ctx.warnings.push(format!("configuration {k}: ring assignment is ambiguous"));
        }
    }
    Ok(eqs)
}

#[derive(Serialize)]
struct EquilibriumSidecar<'a> {
    config_index: usize,
    positions_file: String,
    energy_j: f64,
    stability: Stability,
    ring_configuration: &'a [usize],
    ring_ambiguous: bool,
    r_max_m: f64,
    d_min_m: Option<f64>,
    n_found_duplicates: usize,
    gradient_norm: f64,
}

fn equilibrate(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: EquilibrateParams = ctx.config.params()?;
    let eqs = solve(ctx, p.n_ions, p.restarts)?;
    let mut summary = Vec::new();
    let mut sidecar = Vec::new();
    for (k, e) in eqs.iter().enumerate() {
        let file = format!("equilibrium_{k}.csv");
        let rows: Vec<Vec<String>> = (0..e.n_ions())
            .map(|i| {
                let r = e.positions.ion(i);
                vec![i.to_string(), num(r[0]), num(r[1])]
            })
            .collect();
        ctx.out.write_csv(&file, &["ion_index", "x_m", "y_m"], &rows)?;
        summary.push(vec![
            k.to_string(),
            num(e.energy),
            stability_str(e.stability).to_string(),
            rings(&e.ring_configuration),
            e.ring_ambiguous.to_string(),
            num(e.r_max),
            e.d_min.map(num).unwrap_or_default(),
            e.n_found_duplicates.to_string(),
        ]);
        sidecar.push(EquilibriumSidecar {
            config_index: k,
            positions_file: file,
            energy_j: e.energy,
            stability: e.stability,
            ring_configuration: &e.ring_configuration,
            ring_ambiguous: e.ring_ambiguous,
            r_max_m: e.r_max,
            d_min_m: e.d_min,
            n_found_duplicates: e.n_found_duplicates,
            gradient_norm: e.gradient_norm,
        });
    }
    ctx.out.write_csv(
        "equilibria.csv",
        &[
            "config_index",
            "energy_j",
            "stability",
            "ring_configuration",
            "ring_ambiguous",
            "r_max_m",
            "d_min_m",
            "n_found_duplicates",
        ],
        &summary,
    )?;
    ctx.out.write_json("equilibria.json", &sidecar)
}

fn modes(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: ModesParams = ctx.config.params()?;
    let eqs = solve(ctx, p.n_ions, p.restarts)?;
    let eq = eqs.get(p.configuration).ok_or_else(|| {
        CliError::Compute(format!(
            "configuration {} requested but only {} found",
            p.configuration,
            eqs.len()
        ))
    })?;
    let mut spectrum = normal_modes(eq, &ctx.trap, &ctx.species)?;
    label_modes(&mut spectrum, eq);
    let rows: Vec<Vec<String>> = (0..spectrum.n_modes())
        .map(|m| {
            vec![
                m.to_string(),
                match spectrum.partition[m] {
                    Partition::OutOfPlane => "out_of_plane",
                    Partition::InPlane => "in_plane",
                }
                .to_string(),
                num(spectrum.frequencies[m] / (2.0 * PI)),
                spectrum.imaginary[m].to_string(),
                spectrum.labels[m].map(|l| l.as_str().to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    if spectrum.imaginary.iter().any(|&b| b) {
        ctx.warnings.push("spectrum has imaginary modes; the configuration is not planar-stable here".into());
    }
    ctx.out
        .write_csv("modes.csv", &["mode_index", "partition", "frequency_hz", "imaginary", "label"], &rows)?;
    let columns: Vec<Vec<f64>> = (0..spectrum.n_modes())
        .map(|m| spectrum.eigenvectors.column(m).iter().copied().collect())
        .collect();
    ctx.out.write_json(
        "eigenvectors.json",
        &serde_json::json!({
            "n_ions": spectrum.n_ions(),
            "coordinate_order": "x1,y1,z1,x2,...",
            "modes": columns,
        }),
    )
}

fn transition_rows(points: &[TransitionPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|t| {
            vec![
                t.n_ions.to_string(),
                num(t.w0),
                num(t.w0_over_rmax),
                num(t.alpha_tr),
                stability_str(t.stability).to_string(),
            ]
        })
        .collect()
}

const TRANSITION_HEADER: [&str; 5] = ["n_ions", "w0_m", "w0_over_rmax", "alpha_tr", "stability"];

fn transition_scan(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: TransitionScanParams = ctx.config.params()?;
    if p.n_values.is_empty() || p.n_values.contains(&0) {
        return Err(CliError::Validation("n_values must be non-empty and positive".into()));
    }
    let mut ok = Vec::new();
    for (n, r) in p.n_values.iter().zip(alpha_tr_scan(&p.n_values, &ctx.trap, &ctx.species, p.restarts, ctx.seed)) {
        match r {
            Ok(t) => ok.push(t),
            Err(e) => ctx.warnings.push(format!("N={n}: {e}")),
        }
    }
    ctx.out.write_csv("transition_scan.csv", &TRANSITION_HEADER, &transition_rows(&ok))?;
    let pts: Vec<(f64, f64)> = ok.iter().filter(|t| t.n_ions > 1).map(|t| (t.n_ions as f64, t.alpha_tr)).collect();
    match fit_power_law(&pts) {
        Ok(fit) => ctx.out.write_json("power_law_fit.json", &fit),
        Err(e) => {
            ctx.warnings.push(format!("power-law fit: {e}"));
            Ok(())
        }
    }
}

fn waist_scan(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: WaistScanParams = ctx.config.params()?;
    require_ions(p.n_ions)?;
    if p.waists_um.is_empty() || p.waists_um.iter().any(|&w| !(w > 0.0)) {
        return Err(CliError::Validation("waists_um must be non-empty and positive".into()));
    }
    let w0s: Vec<f64> = p.waists_um.iter().map(|w| w * 1e-6).collect();
    let mut ok = Vec::new();
    for (w, r) in p.waists_um.iter().zip(waist_sweep(p.n_ions, &ctx.trap, &ctx.species, &w0s, p.restarts, ctx.seed)) {
        match r {
            Ok(t) => ok.push(t),
            Err(e) => ctx.warnings.push(format!("w0={w} um: {e}")),
        }
    }
    ctx.out.write_csv("waist_scan.csv", &TRANSITION_HEADER, &transition_rows(&ok))
}

#[derive(Serialize)]
struct PathSummary {
    path_index: usize,
    file: String,
    converged: bool,
    steps: usize,
    peak_energy_j: f64,
    barrier_mk: f64,
}

fn barrier(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: BarrierParams = ctx.config.params()?;
    if p.from == p.to {
        return Err(CliError::Validation("from and to must differ".into()));
    }
    if !(p.d_fraction > 0.0 && p.d_fraction < 1.0) || !(p.epsilon_over_d > 1.0) || !(p.temperature_mk > 0.0) {
        return Err(CliError::Validation(
            "need 0 < d_fraction < 1, epsilon_over_d > 1 and temperature_mk > 0".into(),
        ));
    }
    let eqs = solve(ctx, p.n_ions, p.restarts)?;
    let (Some(start), Some(end)) = (eqs.get(p.from), eqs.get(p.to)) else {
        return Err(CliError::Compute(format!(
            "only {} planar equilibria found for N={}; no barrier between {} and {}",
            eqs.len(),
            p.n_ions,
            p.from,
            p.to
        )));
    };
    let dist = align(&start.planar(), &end.planar(), ctx.trap.is_rotationally_symmetric(), 360).distance;
    let d = p.d_fraction * dist;
    let params = BarrierWalkParams {
        d,
        epsilon: p.epsilon_over_d * d,
        n_samples: p.n_samples,
        temperature: p.temperature_mk * 1e-3,
        n_paths: p.n_paths,
        max_iterations: 10 * (dist / d).ceil() as usize,
        seed: ctx.seed,
    };
    let est = estimate_barrier(start, end, &ctx.trap, &ctx.species, Some(params), ctx.seed)?;

    let mut summaries = Vec::new();
    for (k, path) in est.paths.iter().enumerate() {
        let e0 = path.energies[0];
        let s = path.path_coordinate();
        let steps = path.points.len();
        let rows: Vec<Vec<String>> = (0..steps)
            .map(|i| {
                let dist_f = path.points[i]
                    .iter()
                    .zip(&est.aligned_target)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                vec![
                    i.to_string(),
                    num(dist_f),
                    num(path.energies[i]),
                    num((path.energies[i] - e0) / BOLTZMANN * 1e3),
                    num(s[i]),
                    num(if steps > 1 { i as f64 / (steps - 1) as f64 } else { 0.0 }),
                ]
            })
            .collect();
        let file = format!("barrier_path_{k}.csv");
        ctx.out.write_csv(
            &file,
            &["step", "distance_to_final_m", "energy_j", "energy_mk", "path_coordinate", "step_coordinate"],
            &rows,
        )?;
        if !path.converged {
            ctx.warnings.push(format!("path {k} did not reach the target"));
        }
        summaries.push(PathSummary {
            path_index: k,
            file,
            converged: path.converged,
            steps,
            peak_energy_j: path.peak_energy,
            barrier_mk: path.barrier_from_start * 1e3,
        });
    }
    ctx.out.write_json(
        "barrier_summary.json",
        &serde_json::json!({
            "n_ions": p.n_ions,
            "from": p.from,
            "to": p.to,
            "start_energy_j": start.energy,
            "target_energy_j": end.energy,
            "aligned_distance_m": dist,
            "barrier_mk": est.barrier * 1e3,
            "reverse_barrier_mk": est.reverse_barrier * 1e3,
            "best_path": est.best_path,
            "params": est.params,
            "paths": summaries,
        }),
    )
}

fn spin(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: SpinParams = ctx.config.params()?;
    if !(p.rabi_khz >= 0.0) || !(p.sdf_wavelength_nm > 0.0) {
        return Err(CliError::Validation("rabi_khz must be >= 0 and sdf_wavelength_nm > 0".into()));
    }
    let eqs = solve(ctx, p.n_ions, p.restarts)?;
    let eq = &eqs[0];
    let spectrum = normal_modes(eq, &ctx.trap, &ctx.species)?;
    let omega_max = max_mode_frequency(&spectrum, p.mode_partition);
    let mu = match p.mu_mhz {
        Some(f) => 2.0 * PI * f * 1e6,
        None => p.mu_over_omega_max * omega_max,
    };
    let (e_rec, _) = recoil_heating(p.sdf_wavelength_nm * 1e-9, &ctx.species, 0.0)?;
    let mut drive = SpinDriveConfig::single(mu, 2.0 * PI * p.rabi_khz * 1e3, p.n_ions, e_rec);
    drive.mode_partition_used = p.mode_partition;
    let graph = compute_jij(&spectrum, eq, &drive)?;

    let n = p.n_ions;
    let mut header = vec!["ion".to_string()];
    header.extend((0..n).map(|i| i.to_string()));
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| std::iter::once(i.to_string()).chain((0..n).map(|j| num(graph.j[(i, j)]))).collect())
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.out.write_csv("jij.csv", &header_refs, &rows)?;
    let edge_rows: Vec<Vec<String>> = edges(&graph, &eq.positions)
        .iter()
        .map(|e| {
            let sign = if e.coupling > 0.0 { "af" } else if e.coupling < 0.0 { "fm" } else { "zero" };
            vec![e.i.to_string(), e.j.to_string(), num(e.r), num(e.coupling), sign.to_string()]
        })
        .collect();
    ctx.out.write_csv("edges.csv", &["i", "j", "r_m", "J_rad_per_s", "sign"], &edge_rows)?;

    if !p.sweep_mu_over_omega_max.is_empty() {
        let mus: Vec<f64> = p.sweep_mu_over_omega_max.iter().map(|r| r * omega_max).collect();
        let pts = beta_sweep(&spectrum, eq, &mus, &drive);
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        let rows: Vec<Vec<String>> = pts
            .iter()
            .map(|s| vec![num(s.mu / (2.0 * PI)), opt(s.beta), opt(s.residual), opt(s.af_fraction)])
            .collect();
        for s in pts.iter().filter(|s| s.error.is_some()) {
            ctx.warnings.push(format!("mu/2pi = {} Hz: {}", s.mu / (2.0 * PI), s.error.as_deref().unwrap_or("")));
        }
        ctx.out.write_csv("beta_sweep.csv", &["mu_hz", "beta", "residual", "af_fraction"], &rows)?;
    }
    ctx.out.write_json(
        "spin_summary.json",
        &serde_json::json!({
            "n_ions": n,
            "mode_partition": p.mode_partition,
            "mu_hz": mu / (2.0 * PI),
            "omega_max_hz": omega_max / (2.0 * PI),
            "recoil_energy_j": e_rec,
            "rabi_hz": p.rabi_khz * 1e3,
            "beta": graph.beta_fit.map(|f| f.beta),
            "beta_residual": graph.beta_fit.map(|f| f.residual),
            "af_fraction": graph.af_fraction,
        }),
    )
}

fn lifetime(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: LifetimeParams = ctx.config.params()?;
    require_ions(p.n_ions)?;
    let opt = &ctx.trap.optical;
    let omega_l = opt.laser_angular_frequency();
    let intensity = match p.intensity_w_per_m2 {
        Some(i) => i,
        None if opt.input_power > 0.0 && opt.finesse > 0.0 && opt.waist.is_finite() => {
            intensity_from_power(opt.input_power, opt.finesse, opt.waist).map_err(CliError::validation)?
        }
        None if opt.depth > 0.0 => opt.depth / stark_shift_per_intensity(&ctx.species, omega_l)?.abs(),
        None => {
            return Err(CliError::Validation(
                "lifetime needs intensity_w_per_m2 or a trap with depth or cavity power".into(),
            ))
        }
    };
    if !(intensity >= 0.0) || !(p.pressure_mbar >= 0.0) || !(p.temperature_k > 0.0) {
        return Err(CliError::Validation("intensity and pressure must be >= 0, temperature > 0".into()));
    }
    let est = lifetime_estimate(&ctx.species, omega_l, intensity, p.n_ions)?;
    let gas = BackgroundGas::from_volume("gas", p.gas_mass(), p.gas_polarizability_a3);
    let heating = heating_report(
        &ctx.species,
        &gas,
        p.pressure_mbar * 100.0,
        p.temperature_k,
        opt.wavelength,
        est.gamma_off,
    )?;
    ctx.out.write_json(
        "lifetime.json",
        &serde_json::json!({
            "intensity_w_per_m2": intensity,
            "wavelength_m": opt.wavelength,
            "lifetime": est,
            "heating": heating,
            "langevin_rate_per_hour": heating.langevin_rate * 3600.0,
            "recoil_energy_mk": joule_to_kelvin(heating.recoil_energy) * 1e3,
        }),
    )
}

fn table_one(ctx: &mut RunContext) -> Result<(), CliError> {
    let p: TableOneParams = ctx.config.params()?;
    if p.n_values.is_empty() || p.n_values.contains(&0) {
        return Err(CliError::Validation("n_values must be non-empty and positive".into()));
    }
    let finesse = p.finesse.or(ctx.config.trap.finesse).unwrap_or(3000.0);
    let settings = TableOneSettings {
        n_values: p.n_values.clone(),
        finesse,
        waists: p.waists_um.as_ref().map(|w| w.iter().map(|v| v * 1e-6).collect()),
        waist_grid: p.waist_grid_um.iter().map(|v| v * 1e-6).collect(),
        asymptote_tolerance: p.asymptote_tolerance,
        restarts: p.restarts,
        seed: ctx.seed,
    };
    let cols = compute_table(&ctx.trap, &ctx.species, &settings).map_err(CliError::validation)?;
    for c in &cols {
        for e in &c.errors {
            ctx.warnings.push(format!("N={}: {e}", c.n_ions));
        }
    }
    let (header, rows) = table_rows(&cols, &ctx.trap, finesse);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.out.write_csv("table1.csv", &header_refs, &rows)?;
    ctx.out.write_json("table1.json", &cols)
}

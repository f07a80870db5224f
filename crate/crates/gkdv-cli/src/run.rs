//! Subcommand orchestration: builds the grid, model, and data from a parsed
//! config, runs the requested computation, and writes deterministic
//! artifacts plus the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gkdv_core::{
    admissibility_check, cazenave_naumkin_data, diagnostic_series, kato_smoothing_norm,
    m_of_alpha, make_cutoff, one_sided_data, operator_identity_residual, persistence_monitor,
    picard_iterate, regularity_experiment, simulate, traveling_wave, tw_residual, ConstantMode,
    Error, Field, FrontParams, ModelParams, SpectralGrid, Trajectory, TravelingWaveSpec,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, DataSpec, PhiSpec, RunConfig};
use crate::manifest::{ErrorRecord, RunManifest};
use crate::out::{write_csv, write_plot_data, write_plot_stub};
use crate::snapshot::{read_snapshot, write_snapshot};

use std::sync::Arc;

pub struct RunOutcome {
    pub exit_code: i32,
}

fn thread_cap() -> usize {
    std::env::var("GKDV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Deterministic order-preserving parallel map (results placed by index).
fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (slot_chunk, item_chunk) in out.chunks_mut(chunk).zip(items.chunks(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (slot, item) in slot_chunk.iter_mut().zip(item_chunk) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("all slots filled")).collect()
}

fn build_data(cfg: &RunConfig, grid: &Arc<SpectralGrid>, params: &ModelParams) -> gkdv_core::Result<Field> {
    match &cfg.data {
        DataSpec::CazenaveNaumkin { lambda, theta, phi } => {
            let phi_field = match phi {
                PhiSpec::None => None,
                PhiSpec::Gaussian { amp, width } => {
                    let (a, w) = (*amp, *width);
                    Some(Field::from_real_fn(grid, move |x| a * (-(x / w) * (x / w)).exp()))
                }
            };
            cazenave_naumkin_data(*lambda, *theta, grid, params.m, phi_field.as_ref())
        }
        DataSpec::TravelingWave { c, constant_mode } => {
            let spec = TravelingWaveSpec::new(*c, cfg.alpha, *constant_mode)?;
            traveling_wave(&spec, grid, 0.0)
        }
        DataSpec::OneSided { x0, s, l } => one_sided_data(*x0, *s, *l, grid, params),
        DataSpec::File { path } => {
            let snap = read_snapshot(Path::new(path))
                .map_err(|e| Error::Config(format!("cannot load snapshot '{path}': {e}")))?;
            if snap.field.grid().as_ref() != grid.as_ref() {
                return Err(Error::Config(format!(
                    "snapshot grid (n = {}, L = {}) differs from config grid",
                    snap.field.grid().len(),
                    snap.field.grid().half_length()
                )));
            }
            Ok(snap.field)
        }
    }
}

const DIAG_HEADER: &[&str] = &[
    "t", "i1_re", "i1_im", "i2", "i3", "winf", "wl2_1", "wl2_2", "wl2_3", "wl2_4", "lower", "hs",
    "deviation_from_u0",
];

fn diagnostics_rows(
    traj: &Trajectory,
    u0: &Field,
    params: &ModelParams,
    threads: usize,
) -> gkdv_core::Result<Vec<Vec<f64>>> {
    // rows are independent per slice; compute in parallel, emit in order
    let indexed: Vec<usize> = (0..traj.slices.len()).collect();
    let results = parallel_map(&indexed, threads, |&i| {
        let single = Trajectory {
            params: traj.params.clone(),
            grid: traj.grid.clone(),
            times: vec![traj.times[i]],
            slices: vec![traj.slices[i].clone()],
            meta: traj.meta.clone(),
        };
        diagnostic_series(&single, u0, params).map(|rows| rows[0])
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let d = r?;
        rows.push(vec![
            d.t,
            d.i1_re,
            d.i1_im,
            d.i2,
            d.i3,
            d.winf,
            d.wl2[0],
            d.wl2[1],
            d.wl2[2],
            d.wl2[3],
            d.lower,
            d.hs,
            d.deviation_from_u0,
        ]);
    }
    Ok(rows)
}

struct Emitter<'a> {
    out_dir: &'a Path,
    manifest: &'a mut RunManifest,
}

impl Emitter<'_> {
    fn emit(&mut self, name: &str, write: impl FnOnce(&Path) -> std::io::Result<()>) -> gkdv_core::Result<PathBuf> {
        let path = self.out_dir.join(name);
        write(&path).map_err(|e| Error::Config(format!("cannot write {name}: {e}")))?;
        self.manifest
            .record_file(self.out_dir, &path)
            .map_err(|e| Error::Config(format!("cannot checksum {name}: {e}")))?;
        Ok(path)
    }
}

fn run_simulate(cfg: &RunConfig, em: &mut Emitter) -> gkdv_core::Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let u0 = build_data(cfg, &grid, &params)?;
    let traj = simulate(&u0, cfg.t_final, cfg.dt, &params, cfg.slices, cfg.scheme)?;

    em.manifest.containment_contaminated = traj.meta.contaminated();
    em.manifest.containment_slices = traj.meta.containment_flags.clone();
    em.manifest.lower_bound_slices = traj.meta.lower_bound_flags.clone();

    let threads = em.manifest.threads;
    let rows = diagnostics_rows(&traj, &u0, &params, threads)?;
    em.emit("diagnostics.csv", |p| write_csv(p, DIAG_HEADER, &rows))?;

    em.emit("u_initial.snap", |p| write_snapshot(p, &u0, 0.0))?;
    em.emit("u_final.snap", |p| {
        write_snapshot(p, traj.slices.last().unwrap(), traj.t_final())
    })?;

    // per-family plot data
    let inv_rows: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[1], r[3], r[4]]).collect();
    let weighted_rows: Vec<Vec<f64>> =
        rows.iter().map(|r| vec![r[0], r[5], r[6], r[7], r[8], r[9], r[10], r[11]]).collect();
    let pers_rows: Vec<Vec<f64>> =
        rows.iter().map(|r| vec![r[0], r[12], params.lambda / 2.0]).collect();
    em.emit("invariants.dat", |p| {
        write_plot_data(p, "conserved quantities per slice", &["t", "i1_re", "i2", "i3"], &inv_rows)
    })?;
    em.emit("weighted.dat", |p| {
        write_plot_data(
            p,
            "weighted norms per slice",
            &["t", "winf", "wl2_1", "wl2_2", "wl2_3", "wl2_4", "lower", "hs"],
            &weighted_rows,
        )
    })?;
    em.emit("persistence.dat", |p| {
        write_plot_data(p, "weighted deviation from u0", &["t", "deviation", "lambda_half"], &pers_rows)
    })?;
    em.emit("plot.gp", |p| {
        write_plot_stub(
            p,
            &[
                ("invariants.dat".into(), "I2".into()),
                ("weighted.dat".into(), "winf".into()),
                ("persistence.dat".into(), "deviation".into()),
            ],
        )
    })?;

    // conservation drift verdicts
    let i2_0 = rows[0][3];
    let drift = rows
        .iter()
        .map(|r| ((r[3] - i2_0) / i2_0).abs())
        .fold(0.0f64, f64::max);
    em.manifest.check("i2_relative_drift", drift.is_finite(), format!("{drift:.3e}"));

    // exact-profile shape error for traveling-wave runs
    if let DataSpec::TravelingWave { c, constant_mode } = &cfg.data {
        let spec = TravelingWaveSpec::new(*c, cfg.alpha, *constant_mode)?;
        let exact = traveling_wave(&spec, &grid, traj.t_final())?;
        let last = traj.slices.last().unwrap();
        let shape = last.sub(&exact).l2_norm() / exact.l2_norm();
        em.manifest.check("shape_error", shape <= 1e-4, format!("{shape:.3e}"));
        let lit = TravelingWaveSpec::new(*c, cfg.alpha, ConstantMode::PaperLiteral)?;
        em.manifest.check(
            "paper_literal_ode_residual",
            true,
            format!("{:.6e}", tw_residual(&lit, &grid)?),
        );
    }

    let pers = persistence_monitor(&traj, &u0, &params)?;
    let max_dev = pers.deviation.iter().cloned().fold(0.0f64, f64::max);
    em.manifest.check(
        "persistence",
        pers.verdict,
        format!("max weighted deviation {max_dev:.3e} vs lambda/2 = {:.3e}", params.lambda / 2.0),
    );
    Ok(())
}

fn run_picard(cfg: &RunConfig, em: &mut Emitter) -> gkdv_core::Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let u0 = build_data(cfg, &grid, &params)?;
    let (traj, report) = picard_iterate(
        &u0,
        cfg.t_final,
        &params,
        cfg.slices,
        cfg.picard_max_iter,
        cfg.picard_tol,
        cfg.picard_force,
    )?;

    let mut rows = Vec::new();
    for (i, d) in report.distances.iter().enumerate() {
        let ratio = if i == 0 { f64::NAN } else { report.ratios[i - 1] };
        rows.push(vec![i as f64 + 1.0, *d, ratio]);
    }
    em.emit("contraction.csv", |p| write_csv(p, &["iteration", "distance", "ratio"], &rows))?;
    em.emit("contraction.dat", |p| {
        write_plot_data(p, "X_T distances per Picard iteration", &["iteration", "distance", "ratio"], &rows)
    })?;

    em.manifest.check("converged", report.converged, format!("{} iterations", report.iterations));
    em.manifest.check(
        "median_ratio",
        report.median_ratio().is_some_and(|m| m < 1.0),
        format!("{:?}", report.median_ratio()),
    );
    em.manifest.check(
        "slice_density",
        report.slice_density_ok,
        format!("{} slices over T = {}", cfg.slices, cfg.t_final),
    );

    let threads = em.manifest.threads;
    let rows = diagnostics_rows(&traj, &u0, &params, threads)?;
    em.emit("diagnostics.csv", |p| write_csv(p, DIAG_HEADER, &rows))?;
    em.emit("u_final.snap", |p| write_snapshot(p, traj.slices.last().unwrap(), traj.t_final()))?;

    if report.diverged {
        return Err(Error::NonContraction(format!(
            "distances expanded 3 times in a row at T = {}; retry with a smaller T",
            cfg.t_final
        )));
    }
    Ok(())
}

fn run_regularity(cfg: &RunConfig, em: &mut Emitter) -> gkdv_core::Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let front = FrontParams::new(cfg.front_x0, cfg.front_v, cfg.front_eps_prime, cfg.front_r, cfg.front_l)?;
    let report = regularity_experiment(&front, &params, &grid, cfg.proxy_s, cfg.t_final, cfg.dt, cfg.slices)?;

    let mut rows = Vec::with_capacity(report.times.len());
    for (i, t) in report.times.iter().enumerate() {
        let mut row = vec![*t];
        for o in &report.orders {
            row.push(o.series[i]);
        }
        rows.push(row);
    }
    let mut header: Vec<String> = vec!["t".to_string()];
    for o in &report.orders {
        header.push(format!("energy_order_{}", o.order));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    em.emit("windowed_energy.csv", |p| write_csv(p, &header_refs, &rows))?;
    em.emit("windowed_energy.dat", |p| {
        write_plot_data(p, "moving-window energies per slice", &header_refs, &rows)
    })?;
    em.emit("plot.gp", |p| {
        write_plot_stub(p, &[("windowed_energy.dat".into(), "windowed energy".into())])
    })?;

    // JSON-structured experiment record
    #[derive(serde::Serialize)]
    struct OrderOut {
        order: u32,
        c_star: f64,
        global_seminorm: f64,
    }
    #[derive(serde::Serialize)]
    struct ReportOut {
        proxy_s: u32,
        model_s: u32,
        window_eps: f64,
        window_b: f64,
        front_x0: f64,
        front_v: f64,
        front_eps_prime: f64,
        front_r: f64,
        orders: Vec<OrderOut>,
        c_star_star: f64,
        c_star_star_refined: f64,
        control_initial: f64,
        control_final: f64,
        series_file: String,
    }
    let out = ReportOut {
        proxy_s: report.proxy_s,
        model_s: params.s,
        window_eps: report.window_eps,
        window_b: report.window_b,
        front_x0: front.x0,
        front_v: front.v,
        front_eps_prime: front.eps_prime,
        front_r: front.r_width,
        orders: report
            .orders
            .iter()
            .map(|o| OrderOut {
                order: o.order,
                c_star: o.c_star,
                global_seminorm: o.global_seminorm,
            })
            .collect(),
        c_star_star: report.c_star_star,
        c_star_star_refined: report.c_star_star_refined,
        control_initial: report.control_initial,
        control_final: report.control_final,
        series_file: "windowed_energy.csv".to_string(),
    };
    let json = serde_json::to_vec_pretty(&out).expect("report serializes");
    em.emit("regularity_report.json", |p| crate::out::write_atomic(p, &json))?;

    for o in &report.orders {
        em.manifest.check(
            &format!("windowed_order_{}", o.order),
            o.c_star.is_finite(),
            format!("c* = {:.4e}, global seminorm = {:.4e}", o.c_star, o.global_seminorm),
        );
    }
    let rel = (report.c_star_star - report.c_star_star_refined).abs() / report.c_star_star_refined.abs().max(1e-300);
    em.manifest.check(
        "local_smoothing_stability",
        rel <= 0.01,
        format!("c** = {:.4e}, slice-doubling change {:.3e}", report.c_star_star, rel),
    );
    em.manifest.check(
        "regularity_influx",
        report.control_final < report.control_initial,
        format!("static left-window energy {:.4e} -> {:.4e}", report.control_initial, report.control_final),
    );
    Ok(())
}

/// Seeded desk-scale validation suite; every check lands in the manifest.
fn run_validate(cfg: &RunConfig, em: &mut Emitter) -> gkdv_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;

    // Parseval + round-trip + dealias contraction on seeded random fields
    let mut worst_parseval = 0.0f64;
    let mut worst_roundtrip = 0.0f64;
    let mut dealias_ok = true;
    for _ in 0..20 {
        let vals: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let f = Field::from_values(&grid, vals, false)?;
        let a = f.l2_norm();
        worst_parseval = worst_parseval.max((a - f.l2_norm_fourier()).abs() / a);
        let back = Field::from_spectrum(&grid, &f.spectrum(), false);
        worst_roundtrip = worst_roundtrip.max(back.sub(&f).l2_norm() / a);
        dealias_ok &= f.dealias().l2_norm() <= a * (1.0 + 1e-12);
    }
    em.manifest.check("parseval", worst_parseval <= 1e-12, format!("{worst_parseval:.3e}"));
    em.manifest.check("fft_round_trip", worst_roundtrip <= 1e-12, format!("{worst_roundtrip:.3e}"));
    em.manifest.check("dealias_contractive", dealias_ok, String::new());

    // Airy unitarity and group law on a band-limited seeded field
    let mut hat = vec![Complex64::default(); grid.len()];
    for j in 0..grid.len() / 8 {
        hat[j] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        if j > 0 {
            hat[grid.len() - j] =
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    let f = Field::from_spectrum(&grid, &hat, false);
    let norm = f.l2_norm();
    let unitarity = (f.airy_propagate(1.0).l2_norm() - norm).abs() / norm;
    let group = f
        .airy_propagate(0.1)
        .airy_propagate(1.0)
        .sub(&f.airy_propagate(1.1))
        .l2_norm()
        / norm;
    em.manifest.check("airy_unitarity", unitarity <= 1e-12, format!("{unitarity:.3e}"));
    em.manifest.check("airy_group_law", group <= 1e-11, format!("{group:.3e}"));

    // m(alpha) rule
    let m_ok = m_of_alpha(0.5)? == 3 && m_of_alpha(0.9)? == 2 && m_of_alpha(1.0 / 3.0)? == 4;
    em.manifest.check("m_of_alpha", m_ok, "m(0.5)=3 m(0.9)=2 m(1/3)=4".to_string());

    // traveling-wave residuals, both constants; c = 0.5 keeps the profile
    // wide enough for coarse validation grids
    let ode = TravelingWaveSpec::new(0.5, cfg.alpha, ConstantMode::OdeDerived)?;
    let lit = TravelingWaveSpec::new(0.5, cfg.alpha, ConstantMode::PaperLiteral)?;
    let r_ode = tw_residual(&ode, &grid)?;
    let r_lit = tw_residual(&lit, &grid)?;
    em.manifest.check("tw_residual_ode_derived", r_ode <= 1e-6, format!("{r_ode:.3e}"));
    em.manifest.check("tw_residual_paper_literal_recorded", true, format!("{r_lit:.3e}"));

    // admissibility of the canonical data
    let u0 = cazenave_naumkin_data(params.lambda, 0.0, &grid, params.m, None)?;
    let verdict = admissibility_check(&u0, &params)?;
    em.manifest.check(
        "cazenave_naumkin_admissible",
        verdict.lambda_pass && verdict.nonmembership.diverging,
        format!(
            "lambda measured {:.3e}, delta measured {:.3e}",
            verdict.measured_lambda, verdict.measured_delta
        ),
    );

    // operator identity sign discrimination (width-3 gaussian stays
    // band-limited on coarse grids)
    let gauss = Field::from_real_fn(&grid, |x| (-(x / 3.0) * (x / 3.0)).exp());
    let rep = operator_identity_residual(&gauss, 0.25)?;
    em.manifest.check(
        "operator_identity",
        rep.consistent_residual() <= 1e-5 && rep.wrong_sign_residual() >= 1e2 * rep.consistent_residual(),
        format!(
            "consistent sign {:+} residual {:.3e}, wrong sign {:.3e}",
            rep.consistent_sign(),
            rep.consistent_residual(),
            rep.wrong_sign_residual()
        ),
    );

    // cutoff family properties at the canonical parameters
    let cut = make_cutoff(0.1, 1.0)?;
    let mut cut_ok = cut.eval(0.0) == 0.0 && cut.eval(1.0) == 1.0;
    let mut min_plateau = f64::INFINITY;
    for i in 0..=10_000 {
        let x = 0.2 + 0.6 * i as f64 / 10_000.0;
        min_plateau = min_plateau.min(cut.d1(x));
        cut_ok &= cut.d1(x) >= 0.0;
    }
    let ratio = min_plateau * (1.0 - 4.0 * 0.1);
    em.manifest.check(
        "cutoff_family",
        cut_ok && ratio >= 0.94,
        format!("plateau ratio {ratio:.4} of 1/(b-4eps)"),
    );

    // kato finite-window bound
    let kg = kato_smoothing_norm(&gauss, 2.0, 512);
    let bound = gauss.l2_norm() / 3.0_f64.sqrt();
    em.manifest.check(
        "kato_bound",
        kg <= bound * 1.05,
        format!("{kg:.6} vs (1/sqrt3)||u0|| = {bound:.6}"),
    );

    if em.manifest.checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        let failed: Vec<&str> = em
            .manifest
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(Error::Config(format!("validation failed: {}", failed.join(", "))))
    }
}

pub fn run(cfg: &RunConfig, out_dir: &Path) -> RunOutcome {
    let start = Instant::now();
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("gkdv: cannot create output directory {}: {e}", out_dir.display());
        return RunOutcome { exit_code: 1 };
    }
    let mut manifest = RunManifest::new(cfg.command.name(), cfg.seed, cfg.to_string(), thread_cap());

    let result = {
        let mut em = Emitter {
            out_dir,
            manifest: &mut manifest,
        };
        match cfg.command {
            Command::Simulate => run_simulate(cfg, &mut em),
            Command::Picard => run_picard(cfg, &mut em),
            Command::Regularity => run_regularity(cfg, &mut em),
            Command::Validate => run_validate(cfg, &mut em),
        }
    };

    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let exit_code = match &result {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            manifest.error = Some(ErrorRecord {
                kind: match e {
                    Error::Config(_) => "config".into(),
                    Error::Blowup { .. } => "blowup".into(),
                    Error::Precision(_) => "precision".into(),
                    Error::Contamination(_) => "contamination".into(),
                    Error::NonContraction(_) => "non-contraction".into(),
                },
                message: e.to_string(),
                exit_code: code,
            });
            eprintln!("gkdv: {e}");
            code
        }
    };
    if let Err(e) = manifest.write(out_dir) {
        eprintln!("gkdv: cannot write manifest: {e}");
        return RunOutcome { exit_code: 1 };
    }
    RunOutcome { exit_code }
}

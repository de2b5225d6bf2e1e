use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use sasa_core::asympt::{hierarchy_residual, u1_profile, validate_sector, PHASE_FLOOR};
use sasa_core::io::{atomic_write, fmt_f64, write_json};
use sasa_core::painleve::{phase_spread, psi_system_check, solve_painleve, PainleveData, PainleveRecord};
use sasa_core::pde::{conserved_l2, evolve_snapshots, one_soliton, WaveField};
use sasa_core::rh::{reconstruct_on, RealLine, RhSolutionRecord};
use sasa_core::scattering::{reflection_coefficient, scatter, InitialDatum, Profile, ScatterConfig, ScatteringRecord};
use sasa_core::{Complex64, Error, UniformGrid};
use serde::Serialize;

use crate::config::{self, AsymptoticsRun, EvolveRun, EvolveStart, PainleveRun, ReconstructRun, ScatterRun};
use crate::manifest::Manifest;
use crate::CliError;

pub struct Ctx<'a> {
    pub out: &'a Path,
    pub tols: &'a BTreeMap<String, f64>,
    pub manifest: &'a mut Manifest,
}

impl Ctx<'_> {
    fn tol(&self, name: &str) -> f64 {
        self.tols[name]
    }

    fn check(&mut self, name: &str, value: f64) -> bool {
        let tol = self.tol(name);
        self.manifest.check(name, value, tol)
    }

    fn path(&mut self, file: &str) -> std::path::PathBuf {
        self.manifest.output(&self.out.join(file))
    }
}

fn sample_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    match n {
        0 => Err(CliError::Config("lattice needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => Ok(UniformGrid::span(lo, hi, n)?.points()),
    }
}

fn datum_on_box(u0: &InitialDatum, box_length: f64, n: usize) -> Result<WaveField, CliError> {
    let grid = *u0.grid();
    let zero = Complex64::new(0.0, 0.0);
    Ok(WaveField::from_fn(box_length, n, 0.0, |x| if grid.contains(x) { u0.eval(x) } else { zero })?)
}

fn record_scatter(ctx: &mut Ctx, record: &ScatteringRecord) {
    let defect = record.det_defect.max(record.unitarity_defect).max(record.swap_defect);
    ctx.check("symmetry", defect);
    ctx.manifest.measure("winding_s33", record.winding_s33);
    ctx.manifest.measure("rho1_at_zero", record.rho1_at_zero());
    if record.winding_s33 != 0 {
        ctx.manifest.warn(format!(
            "s33 winds {} time(s): the datum carries solitons and reconstruction is unsupported",
            record.winding_s33
        ));
    }
}

pub fn scatter_cmd(path: &Path, ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = config::load::<ScatterRun>(path)?;
    let u0 = cfg.run.datum.load(&cfg.base)?;
    let record = scatter(&u0, &cfg.run.scatter)?;
    record.write_csv(&ctx.path("record.csv"))?;
    record.write_sidecar(&ctx.path("record.json"))?;
    record_scatter(ctx, &record);
    Ok(())
}

#[derive(Serialize)]
struct ReconstructSummary {
    points: usize,
    max_residual: f64,
    round_trip_error: Option<f64>,
    max_abs_u: f64,
}

pub fn reconstruct_cmd(path: &Path, ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = config::load::<ReconstructRun>(path)?;
    let run = &cfg.run;
    let record = ScatteringRecord::read_csv(&cfg.base.join(&run.record))?;
    if record.winding_s33 != 0 {
        return Err(Error::SolitonsPresent { count: record.winding_s33 }.into());
    }
    let rho1 = reflection_coefficient(&record)?;
    let xs = sample_grid(run.lattice.x_min, run.lattice.x_max, run.lattice.nx)?;
    if run.lattice.t.is_empty() {
        return Err(CliError::Config("lattice needs at least one time".into()));
    }
    let pairs: Vec<(f64, f64)> = run.lattice.t.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect();
    let line = RealLine::new(run.line.nodes, run.line.scale)?;
    let results: Vec<RhSolutionRecord> = pairs
        .par_iter()
        .map(|&(x, t)| reconstruct_on(&line, &rho1, x, t, &run.line.solver))
        .collect::<Result<_, _>>()?;

    let mut csv = String::from("x,t,re_u,im_u,residual\n");
    for r in &results {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(r.x),
            fmt_f64(r.t),
            fmt_f64(r.u_re),
            fmt_f64(r.u_im),
            fmt_f64(r.residual)
        ));
    }
    atomic_write(&ctx.path("reconstruct.csv"), csv.as_bytes())?;

    let max_residual = results.iter().map(|r| r.residual).fold(0.0, f64::max);
    ctx.check("rh_residual", max_residual);
    let round_trip_error = match &run.compare {
        Some(spec) => {
            let u0 = spec.load(&cfg.base)?;
            let at_zero: Vec<&RhSolutionRecord> = results.iter().filter(|r| r.t == 0.0).collect();
            if at_zero.is_empty() {
                ctx.manifest.warn("compare datum given but the lattice has no t = 0 slice");
                None
            } else {
                let err = at_zero
                    .iter()
                    .map(|r| (Complex64::new(r.u_re, r.u_im) - u0.eval(r.x)).norm())
                    .fold(0.0, f64::max);
                ctx.check("round_trip", err);
                Some(err)
            }
        }
        None => None,
    };
    let summary = ReconstructSummary {
        points: results.len(),
        max_residual,
        round_trip_error,
        max_abs_u: results.iter().map(|r| r.u_re.hypot(r.u_im)).fold(0.0, f64::max),
    };
    write_json(&ctx.path("reconstruct.json"), &summary)?;
    ctx.manifest.measure("reconstruct", &summary);
    Ok(())
}

fn painleve_checks(ctx: &mut Ctx, sol: &sasa_core::painleve::PainleveSolution) -> Result<(), CliError> {
    ctx.check("ode_residual", sol.ode_residual);
    ctx.check("rh_residual", sol.max_solver_residual);
    let psi = psi_system_check(sol)?;
    ctx.check("psi_defect", psi.max_defect());
    ctx.check("phase_flatness", phase_spread(&sol.u_p, PHASE_FLOOR));
    ctx.check("hierarchy", hierarchy_residual(&u1_profile(sol)));
    ctx.manifest.measure("psi", psi);
    ctx.manifest.measure("fd_order", sol.fd_order);
    Ok(())
}

pub fn painleve_cmd(path: &Path, ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = config::load::<PainleveRun>(path)?;
    let run = &cfg.run;
    if !(run.y_step > 0.0) || !(run.y_max > run.y_min) {
        return Err(CliError::Config("need y_max > y_min and y_step > 0".into()));
    }
    let n = ((run.y_max - run.y_min) / run.y_step).round() as usize + 1;
    let grid = UniformGrid::new(run.y_min, run.y_step, n)?;
    let sol = solve_painleve(&PainleveData { s: run.s, y_grid: grid }, &run.contour)?;
    sol.write_csv(&ctx.path("painleve.csv"))?;
    write_json(&ctx.path("painleve.json"), &PainleveRecord::from(&sol))?;
    painleve_checks(ctx, &sol)
}

pub fn evolve_cmd(path: &Path, ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = config::load::<EvolveRun>(path)?;
    let run = &cfg.run;
    let u0 = match &run.start {
        EvolveStart::Soliton { a, phi, x0 } => WaveField::soliton(*a, *phi, *x0, run.box_length, run.n, 0.0)?,
        EvolveStart::Datum(spec) => datum_on_box(&spec.load(&cfg.base)?, run.box_length, run.n)?,
        EvolveStart::Restart(file) => {
            let w = WaveField::read_binary(&cfg.base.join(file))?;
            if w.n() != run.n || w.box_length != run.box_length {
                return Err(CliError::Config(format!(
                    "restart snapshot has L = {}, n = {}; config asks for L = {}, n = {}",
                    w.box_length,
                    w.n(),
                    run.box_length,
                    run.n
                )));
            }
            w
        }
    };
    let t_final = run.evolve.t_final;
    let forward = t_final >= u0.t;
    let mut times = run.snapshots.clone();
    let monotone = times.windows(2).all(|w| if forward { w[1] > w[0] } else { w[1] < w[0] });
    let inside = times.iter().all(|&t| if forward { t > u0.t && t < t_final } else { t < u0.t && t > t_final });
    if !monotone || !inside {
        return Err(CliError::Config("snapshot times must be monotone and lie strictly between start and t_final".into()));
    }
    times.push(t_final);
    let fields = evolve_snapshots(&u0, &run.evolve, &times)?;
    for (i, w) in fields.iter().enumerate() {
        let name = if i + 1 == fields.len() { "final.csv".to_string() } else { format!("snapshot_{i:03}.csv") };
        w.write_csv(&ctx.path(&name))?;
    }
    let last = fields.last().expect("t_final requested");
    last.write_binary(&ctx.path("final.bin"))?;

    let l2_start = conserved_l2(&u0);
    let l2_end = conserved_l2(last);
    ctx.manifest.measure("l2_start", l2_start);
    ctx.manifest.measure("l2_end", l2_end);
    if run.evolve.sponge.is_some() {
        ctx.manifest.warn("absorbing layer active: L2 drift not checked");
    } else {
        ctx.check("l2_drift", (l2_end - l2_start).abs() / l2_start.max(f64::MIN_POSITIVE));
    }
    if let EvolveStart::Soliton { a, phi, x0 } = run.start {
        let err = (0..last.n())
            .map(|j| (last.values[j] - one_soliton(a, phi, x0, last.x(j), last.t)).norm())
            .fold(0.0, f64::max);
        ctx.check("soliton_regression", err);
    }
    Ok(())
}

pub fn asymptotics_cmd(path: &Path, ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = config::load::<AsymptoticsRun>(path)?;
    let u0 = cfg.run.datum.load(&cfg.base)?;
    let report = validate_sector(&u0, &cfg.run.sector)?;
    report.write_json(&ctx.path("asymptotics.json"))?;
    report.write_csv(&ctx.path("asymptotics.csv"))?;
    ctx.check("sector_exponent", report.exponent.unwrap_or(f64::NAN));
    ctx.check("phase_flatness", report.phase_flatness);
    ctx.manifest.measure("s", report.s);
    ctx.manifest.measure("sup_errors", &report.sup_errors);
    ctx.manifest.measure("exponent_right", report.exponent_right);
    ctx.manifest.measure("exponent_left", report.exponent_left);
    if report.exponent_left.is_some() {
        ctx.manifest.warn("left half of the sector: exponent is measured only, with no proven rate to compare");
    }
    if !report.spans_decade {
        ctx.manifest.warn("t_list spans less than a factor of ten");
    }
    Ok(())
}

/// Small end-to-end runs of every stage.
pub fn selftest_cmd(ctx: &mut Ctx) -> Result<(), CliError> {
    let profile = Profile::Sech { amplitude: 0.3, width: 1.0, center: 0.0, phase: 0.4 };
    let u0 = InitialDatum::from_profile(profile, -24.0, 24.0, 2401)?;
    let record = scatter(&u0, &ScatterConfig { k_nodes: 513, ..Default::default() })?;
    record_scatter(ctx, &record);
    let rho1 = reflection_coefficient(&record)?;
    let line = RealLine::new(512, 3.0)?;
    let mut err: f64 = 0.0;
    for x in [-1.0, 0.0, 1.5] {
        let r = reconstruct_on(&line, &rho1, x, 0.0, &Default::default())?;
        err = err.max((Complex64::new(r.u_re, r.u_im) - profile.eval(x)).norm());
    }
    ctx.check("round_trip", err);

    let grid = UniformGrid::span(-1.0, 1.0, 41)?;
    let sol = solve_painleve(&PainleveData { s: Complex64::new(0.5, 0.0), y_grid: grid }, &Default::default())?;
    ctx.check("ode_residual", sol.ode_residual);
    ctx.check("phase_flatness", phase_spread(&sol.u_p, PHASE_FLOOR));

    let (a, phi, x0) = (1.0, 0.3, 0.0);
    let w = WaveField::soliton(a, phi, x0, 40.0, 512, 0.0)?;
    let cfg = sasa_core::pde::EvolveConfig::new(1e-3, 0.25)?;
    let end = evolve_snapshots(&w, &cfg, &[0.25])?.pop().expect("one snapshot");
    let err = (0..end.n()).map(|j| (end.values[j] - one_soliton(a, phi, x0, end.x(j), end.t)).norm()).fold(0.0, f64::max);
    ctx.check("soliton_regression", err);
    ctx.check("l2_drift", (conserved_l2(&end) - conserved_l2(&w)).abs() / conserved_l2(&w));
    Ok(())
}

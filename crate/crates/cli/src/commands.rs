use std::path::PathBuf;

use cusp_core::analysis::{self, RelaxationKind};
use cusp_core::dynamics::{self, Sampling, Termination};
use cusp_core::ising_model::{self, ModelParams};

use crate::config::RunConfig;
use crate::output::{self, num, Plot};
use crate::{CliError, Common, Kind, SimulateArgs};

/// Creates the output directory and records the resolved configuration in it.
pub fn prepare_out(cfg: &RunConfig, common: &Common) -> Result<PathBuf, CliError> {
    output::write_file(&common.out.join("config.toml"), &cfg.to_toml())?;
    Ok(common.out.clone())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Symmetric grid on `[−0.999, 0.999]` with `p(−i) = −p(i)` exactly.
fn p_grid(points: usize) -> Vec<f64> {
    let n = points.max(3);
    let m = (n - 1) as f64;
    (0..n).map(|i| 0.999 * (2.0 * i as f64 - m) / m).collect()
}

fn branch_label(p: f64, q: f64, p_star: f64) -> &'static str {
    if p > p_star {
        if q >= 0.0 {
            "S+"
        } else {
            "M+"
        }
    } else if p < -p_star {
        if q <= 0.0 {
            "S-"
        } else {
            "M-"
        }
    } else {
        "U"
    }
}

fn stability_name(slope: f64) -> &'static str {
    if slope.abs() < ising_model::DEGENERACY_TOLERANCE {
        "degenerate"
    } else if slope < 0.0 {
        "stable"
    } else {
        "unstable"
    }
}

struct CurvePoint {
    p: f64,
    q: f64,
    z: f64,
}

fn curve_points(params: &ModelParams, points: usize) -> Result<Vec<CurvePoint>, CliError> {
    p_grid(points)
        .into_iter()
        .map(|p| {
            let s = ising_model::equilibrium_state(p, params).map_err(runtime)?;
            Ok(CurvePoint { p, q: s.q, z: s.z })
        })
        .collect()
}

pub fn curve(cfg: &RunConfig, common: &Common, points: usize) -> Result<u8, CliError> {
    let params = cfg.params()?;
    let sp = ising_model::spinodal(&params).map_err(runtime)?;
    let out = prepare_out(cfg, common)?;
    let pts = curve_points(&params, points)?;

    let lagrangian = output::csv(&["p", "q"], pts.iter().map(|c| vec![num(c.p), num(c.q)]));
    output::write_file(&out.join("lagrangian.csv"), &lagrangian)?;
    let front = output::csv(
        &["p", "q", "z"],
        pts.iter().map(|c| vec![num(c.p), num(c.q), num(c.z)]),
    );
    output::write_file(&out.join("front.csv"), &front)?;

    let mut rows: Vec<(f64, Vec<String>)> = pts
        .iter()
        .map(|c| {
            let slope = ising_model::glauber_slope(c.p, c.q, &params);
            let label = branch_label(c.p, c.q, sp.p_star);
            (
                c.p,
                vec![
                    num(c.p),
                    num(c.q),
                    num(c.z),
                    label.into(),
                    stability_name(slope).into(),
                    num(slope),
                ],
            )
        })
        .collect();
    for (label, sign) in [("C", 1.0), ("C'", -1.0)] {
        let (p, q) = (sign * sp.p_star, sign * sp.q_star);
        rows.push((
            p,
            vec![
                num(p),
                num(q),
                num(sp.z_star),
                label.into(),
                "degenerate".into(),
                num(0.0),
            ],
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let branches = output::csv(
        &["p", "q", "z", "branch", "stability", "glauber_slope"],
        rows.into_iter().map(|r| r.1),
    );
    output::write_file(&out.join("branches.csv"), &branches)?;

    if common.svg {
        let lag = Plot::new(
            "Lagrangian projection",
            "q",
            "p",
            pts.iter().map(|c| (c.q, c.p)).collect(),
        );
        output::write_file(&out.join("lagrangian.svg"), &lag.to_svg())?;
        let fr = Plot::new("Front", "q", "z", pts.iter().map(|c| (c.q, c.z)).collect());
        output::write_file(&out.join("front.svg"), &fr.to_svg())?;
    }
    println!(
        "cusp C  at (q, z) = ({:.12e}, {:.12e}), p = {:.12e}",
        sp.q_star, sp.z_star, sp.p_star
    );
    println!(
        "cusp C' at (q, z) = ({:.12e}, {:.12e}), p = {:.12e}",
        -sp.q_star, sp.z_star, -sp.p_star
    );
    println!(
        "wrote lagrangian.csv, front.csv, branches.csv to {}",
        out.display()
    );
    Ok(0)
}

pub fn spinodal(cfg: &RunConfig) -> Result<u8, CliError> {
    let sp = ising_model::spinodal(&cfg.params()?).map_err(runtime)?;
    println!("b       = {:.11e}", cfg.model.b);
    println!("beta    = {:.11e}", cfg.model.beta);
    println!("p_star  = {:.11e}", sp.p_star);
    println!("q_star  = {:.11e}", sp.q_star);
    println!("z_star  = {:.11e}", sp.z_star);
    println!("theta   = {:.11e}", sp.theta);
    println!("eta     = {:.11e}", sp.eta);
    Ok(0)
}

fn sampling(args: &SimulateArgs) -> Sampling {
    if args.per_decade == 0 {
        Sampling::Steps(1)
    } else {
        Sampling::Geometric {
            first: (args.t_max * 1e-6).min(1e-2),
            per_decade: args.per_decade,
        }
    }
}

fn finish_run(termination: Termination, path: &std::path::Path) -> Result<u8, CliError> {
    if termination.is_completed() {
        println!("wrote {}", path.display());
        Ok(0)
    } else {
        Err(CliError::Runtime(format!(
            "{termination}; partial trajectory written to {}",
            path.display()
        )))
    }
}

pub fn simulate(cfg: &RunConfig, common: &Common, args: &SimulateArgs) -> Result<u8, CliError> {
    let model = cfg.model()?;
    let icfg = cfg
        .integrator()
        .with_t_max(args.t_max)
        .with_sampling(sampling(args));
    let out = prepare_out(cfg, common)?;
    let path = out.join(match args.kind {
        Kind::Glauber => "trajectory_glauber.csv",
        Kind::Contact => "trajectory_contact.csv",
    });
    match args.kind {
        Kind::Glauber => {
            let q = args.field.unwrap_or(model.spinodal.q_star + args.q_offset);
            let p0 = args.p0.unwrap_or(0.5);
            let traj = dynamics::integrate_glauber(p0, q, &model.params, &icfg)
                .map_err(|e| CliError::Config(e.to_string()))?;
            output::write_file(&path, &traj.to_csv())?;
            if common.svg {
                let plot = Plot::new(
                    "Glauber p(t)",
                    "t",
                    "p",
                    traj.times
                        .iter()
                        .copied()
                        .zip(traj.states.iter().copied())
                        .collect(),
                );
                output::write_file(
                    &out.join("trajectory_glauber.svg"),
                    &Plot {
                        log_x: true,
                        ..plot
                    }
                    .to_svg(),
                )?;
            }
            finish_run(traj.termination, &path)
        }
        Kind::Contact => {
            if args.field.is_some() {
                return Err(CliError::Config(
                    "--field applies to Glauber runs only".into(),
                ));
            }
            let q = args.q_offset;
            let p0 = args.p0.unwrap_or(0.02);
            let h = &model.hamiltonian;
            let traj = dynamics::integrate_contact(args.z0, p0, q, h, &icfg)
                .map_err(|e| CliError::Config(e.to_string()))?;
            output::write_file(&path, &traj.to_csv())?;
            if q == 0.0 && args.z0 > 0.0 {
                let rows = traj
                    .times
                    .iter()
                    .map(|&t| {
                        let (z, p) =
                            dynamics::closed_form_cusp(args.z0, p0, h.a(), t).map_err(runtime)?;
                        Ok(vec![num(t), num(z), num(0.0), num(p)])
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                output::write_file(
                    &out.join("closed_form.csv"),
                    &output::csv(&["t", "Z", "Q", "P"], rows),
                )?;
            }
            if common.svg {
                let pts = traj
                    .times
                    .iter()
                    .zip(&traj.states)
                    .map(|(&t, s)| (t, s.p.abs()))
                    .collect();
                output::write_file(
                    &out.join("trajectory_contact.svg"),
                    &Plot::new("Contact |P(t)|", "t", "|P|", pts)
                        .log_log()
                        .to_svg(),
                )?;
            }
            finish_run(traj.termination, &path)
        }
    }
}

fn grid_for(cfg: &RunConfig, kind: RelaxationKind) -> Vec<f64> {
    match kind {
        RelaxationKind::Glauber => cfg.scan.glauber.values(),
        RelaxationKind::Contact => cfg.scan.contact.values(),
    }
}

pub fn relax_scan(cfg: &RunConfig, common: &Common, kind: RelaxationKind) -> Result<u8, CliError> {
    let model = cfg.model()?;
    let grid = grid_for(cfg, kind);
    let out = prepare_out(cfg, common)?;
    let results = analysis::relaxation_scan(kind, &model, &grid, &cfg.scan_setup());
    let theory = analysis::theory_rates(kind, &model, &grid);
    let rows = grid.iter().zip(&results).enumerate().map(|(i, (&q, r))| {
        let tau_theory = theory.as_ref().map_or(f64::NAN, |t| 1.0 / t[i]);
        match r {
            Ok(r) => vec![
                num(q),
                num(r.tau),
                num(r.tau_theory),
                num(r.rate_measured),
                num(r.fit_r2),
                "ok".into(),
            ],
            Err(e) => vec![
                num(q),
                num(f64::NAN),
                num(tau_theory),
                num(f64::NAN),
                num(f64::NAN),
                e.to_string().replace(',', ";"),
            ],
        }
    });
    let path = out.join(format!("relax_{kind}.csv"));
    output::write_file(
        &path,
        &output::csv(
            &["Q", "tau_measured", "tau_theory", "rate", "r2", "status"],
            rows,
        ),
    )?;

    let ok: Vec<_> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    for (q, r) in grid.iter().zip(&results) {
        if let Err(e) = r {
            eprintln!("Q = {q:e}: {e}");
        }
    }
    if common.svg {
        let pts = ok.iter().map(|r| (r.q, r.tau)).collect();
        output::write_file(
            &out.join(format!("relax_{kind}.svg")),
            &Plot::new("Relaxation time", "Q", "tau", pts)
                .log_log()
                .to_svg(),
        )?;
    }
    let fit = analysis::scaling_exponent(&ok).map_err(runtime)?;
    println!(
        "{kind} tau ~ Q^k: k = {:.6} (r2 = {:.6}, {} points)",
        fit.exponent, fit.r_squared, fit.points
    );
    if let Ok(t) = analysis::theory_scaling_exponent(kind, &model, &grid) {
        println!("{kind} analytic exponent: {:.6}", t.exponent);
    }
    println!("wrote {}", path.display());
    if ok.len() < grid.len() {
        return Err(CliError::Runtime(format!(
            "{} of {} scan points failed",
            grid.len() - ok.len(),
            grid.len()
        )));
    }
    Ok(0)
}

pub fn cusp_powerlaw(
    cfg: &RunConfig,
    common: &Common,
    kind: RelaxationKind,
) -> Result<u8, CliError> {
    let model = cfg.model()?;
    let out = prepare_out(cfg, common)?;
    let law = analysis::cusp_power_law(kind, &model, &cfg.cusp_setup()).map_err(runtime)?;
    let rows = law
        .times
        .iter()
        .zip(&law.deviations)
        .map(|(&t, &d)| vec![num(t), num(d)]);
    let path = out.join(format!("cusp_{kind}.csv"));
    output::write_file(&path, &output::csv(&["t", "deviation"], rows))?;
    if common.svg {
        let pts = law
            .times
            .iter()
            .copied()
            .zip(law.deviations.iter().copied())
            .collect();
        output::write_file(
            &out.join(format!("cusp_{kind}.svg")),
            &Plot::new("Decay at the cusp", "t", "|P|", pts)
                .log_log()
                .to_svg(),
        )?;
    }
    let reference = match kind {
        RelaxationKind::Contact => "a",
        RelaxationKind::Glauber => "1/eta",
    };
    println!(
        "{kind} |P| ~ c t^k on [{:e}, {:e}]: k = {:.6}, c = {:.6} ({reference} = {:.6})",
        law.fit.window.0,
        law.fit.window.1,
        law.fit.exponent,
        law.fit.prefactor,
        law.reference_prefactor
    );
    println!("wrote {}", path.display());
    Ok(0)
}

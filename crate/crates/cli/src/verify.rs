//! The `verify` report: one tab-separated line per check.

use std::fmt;
use std::time::Instant;

use cusp_core::analysis::{self, NoGoGrid, RelaxationKind, RelaxationResult};
use cusp_core::dynamics::{self, IntegratorConfig, Sampling};
use cusp_core::formal_series::TruncatedSeries;
use cusp_core::hamiltonian::{Branch, ContactGenerator, HamiltonianEval};
use cusp_core::CuspModel;

use crate::commands::prepare_out;
use crate::config::RunConfig;
use crate::output;
use crate::{CliError, Common};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    SkippedByConfig,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::SkippedByConfig => "skipped-by-config",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub expected: String,
    pub tolerance: String,
}

impl Check {
    fn within(name: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            status: if (measured - expected).abs() <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            measured,
            expected: format!("{expected}"),
            tolerance: format!("{tolerance}"),
        }
    }

    fn relative(name: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (measured / expected - 1.0).abs() <= tolerance;
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            measured,
            expected: format!("{expected:.6e}"),
            tolerance: format!("rel {tolerance}"),
        }
    }

    fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            status: if measured <= bound {
                Status::Pass
            } else {
                Status::Fail
            },
            measured,
            expected: "0".into(),
            tolerance: format!("<= {bound:e}"),
        }
    }

    fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            status: if measured >= bound {
                Status::Pass
            } else {
                Status::Fail
            },
            measured,
            expected: format!(">= {bound}"),
            tolerance: "-".into(),
        }
    }

    fn flag(name: &str, ok: bool, measured: f64, expected: &str) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            measured,
            expected: expected.into(),
            tolerance: "-".into(),
        }
    }

    fn failed(name: &str, error: impl fmt::Display) -> Self {
        eprintln!("{name}: {error}");
        Self {
            name: name.into(),
            status: Status::Fail,
            measured: f64::NAN,
            expected: "-".into(),
            tolerance: "-".into(),
        }
    }

    fn skipped(name: &str, reason: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::SkippedByConfig,
            measured: f64::NAN,
            expected: reason.into(),
            tolerance: "-".into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}\t{}\t{:.6e}\t{}\t{}",
            self.name, self.status, self.measured, self.expected, self.tolerance
        )
    }
}

fn scan_checks(kind: RelaxationKind, model: &CuspModel, cfg: &RunConfig, out: &mut Vec<Check>) {
    let (grid, expected, tol, analytic_tol, budget, label) = match kind {
        RelaxationKind::Glauber => (cfg.scan.glauber.values(), -0.5, 0.03, 0.01, 10.0, "glauber"),
        RelaxationKind::Contact => (cfg.scan.contact.values(), -1.5, 0.10, 0.02, 30.0, "contact"),
    };
    let start = Instant::now();
    let results = analysis::relaxation_scan(kind, model, &grid, &cfg.scan_setup());
    let ok: Vec<RelaxationResult> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let fit = analysis::scaling_exponent(&ok);
    let elapsed = start.elapsed().as_secs_f64();
    for (q, r) in grid.iter().zip(&results) {
        if let Err(e) = r {
            eprintln!("{label} scan Q = {q:e}: {e}");
        }
    }
    match fit {
        Ok(f) if ok.len() == grid.len() => out.push(Check::within(
            &format!("{label}-scaling-exponent"),
            f.exponent,
            expected,
            tol,
        )),
        Ok(_) => out.push(Check::failed(
            &format!("{label}-scaling-exponent"),
            "some scan points failed",
        )),
        Err(e) => out.push(Check::failed(&format!("{label}-scaling-exponent"), e)),
    }
    match analysis::theory_scaling_exponent(kind, model, &grid) {
        Ok(f) => out.push(Check::within(
            &format!("{label}-analytic-exponent"),
            f.exponent,
            expected,
            analytic_tol,
        )),
        Err(e) => out.push(Check::failed(&format!("{label}-analytic-exponent"), e)),
    }
    out.push(Check::at_most(
        &format!("{label}-scan-runtime-s"),
        elapsed,
        budget,
    ));
    out.push(Check::flag(
        &format!("{label}-tau-monotone"),
        analysis::tau_is_monotone(&ok),
        ok.len() as f64,
        "decreasing in Q",
    ));
    if kind == RelaxationKind::Glauber {
        let worst = ok
            .iter()
            .map(|r| (r.rate_ratio() - 1.0).abs())
            .fold(0.0, f64::max);
        let all = ok.len() == grid.len();
        out.push(Check {
            status: if all && worst <= 0.01 {
                Status::Pass
            } else {
                Status::Fail
            },
            ..Check::at_most("glauber-rate-formula", worst, 0.01)
        });
    }
}

fn rate_theorem(model: &CuspModel, cfg: &RunConfig, out: &mut Vec<Check>) {
    let q = 1e-3;
    let limit = match model.hamiltonian.equilibrium(q, Branch::Metastable) {
        Ok(l) => l,
        Err(e) => return out.push(Check::failed("rate-theorem", e)),
    };
    let starts = [
        ("case-ii", limit.z, limit.p + 1e-4),
        ("case-i-above", 1.5 * limit.z, limit.p + 1e-4),
        ("case-i-below", 0.5 * limit.z, limit.p - 2e-4),
    ];
    for (tag, z0, p0) in starts {
        let name = format!("rate-theorem-{tag}");
        match analysis::measure_contact_rate_from(model, q, z0, p0, &cfg.scan_setup()) {
            Ok(r) => out.push(Check::within(&name, r.rate_ratio(), 1.0, 0.02)),
            Err(e) => out.push(Check::failed(&name, e)),
        }
    }
}

fn cusp_checks(model: &CuspModel, cfg: &RunConfig, out: &mut Vec<Check>) {
    let setup = cfg.cusp_setup();
    let a = model.hamiltonian.a();
    match analysis::cusp_power_law(RelaxationKind::Contact, model, &setup) {
        Ok(law) if a != 0.0 => {
            out.push(Check::within(
                "cusp-contact-exponent",
                law.fit.exponent,
                -1.0,
                0.05,
            ));
            out.push(Check::relative(
                "cusp-contact-prefactor",
                law.fit.prefactor,
                a,
                0.10,
            ));
        }
        Ok(law) => {
            out.push(Check::within(
                "cusp-contact-exponent",
                law.fit.exponent,
                -2.0,
                0.05,
            ));
            out.push(Check::skipped("cusp-contact-prefactor", "needs a != 0"));
        }
        Err(e) => out.push(Check::failed("cusp-contact-exponent", e)),
    }
    match analysis::cusp_power_law(RelaxationKind::Glauber, model, &setup) {
        Ok(law) => {
            out.push(Check::within(
                "cusp-glauber-exponent",
                law.fit.exponent,
                -1.0,
                0.05,
            ));
            out.push(Check::relative(
                "cusp-glauber-prefactor",
                law.fit.prefactor,
                law.reference_prefactor,
                0.10,
            ));
        }
        Err(e) => out.push(Check::failed("cusp-glauber-exponent", e)),
    }
}

fn closed_form(model: &CuspModel, cfg: &RunConfig, out: &mut Vec<Check>) {
    let h = &model.hamiltonian;
    let (z0, p0) = (0.01, 0.02);
    let times = analysis::logspace(1e-2, 1e5, 50);
    let icfg = cfg
        .integrator()
        .with_tolerances(cfg.integrator.rtol, cfg.integrator.atol.min(1e-16))
        .with_t_max(1e5)
        .with_sampling(Sampling::Times(times.clone()));
    let traj = match dynamics::integrate_contact(z0, p0, 0.0, h, &icfg) {
        Ok(t) if t.is_completed() => t,
        Ok(t) => return out.push(Check::failed("closed-form-oracle", t.termination)),
        Err(e) => return out.push(Check::failed("closed-form-oracle", e)),
    };
    let mut worst: f64 = 0.0;
    for (t, s) in traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| times.contains(t))
    {
        match dynamics::closed_form_cusp(z0, p0, h.a(), *t) {
            Ok((z, p)) => worst = worst.max(((s.z - z) / z).abs()).max(((s.p - p) / p).abs()),
            Err(e) => return out.push(Check::failed("closed-form-oracle", e)),
        }
    }
    out.push(Check::at_most("closed-form-oracle", worst, 1e-8));
}

fn front_checks(model: &CuspModel, out: &mut Vec<Check>) {
    let h = &model.hamiltonian;
    let at = model
        .front_residual(1e-2)
        .abs()
        .max(model.front_residual(-1e-2).abs());
    out.push(Check::at_most("front-residual-at-1e-2", at, 1e-8));
    let profile = analysis::front_residual_slope(model, (1e-3, 1e-1), 41);
    match profile.fit {
        Some(f) => out.push(Check::at_least("front-residual-slope", f.exponent, 10.0)),
        None => out.push(Check::failed(
            "front-residual-slope",
            "too few samples above rounding",
        )),
    }

    let worst = analysis::logspace(1e-5, 1e-2, 60)
        .into_iter()
        .flat_map(|p| [p, -p])
        .map(|p| {
            let pt = model.front.point(p);
            let ev = h.evaluate(pt.z, pt.q);
            (p * ev.dh_dz + ev.dh_dq).abs()
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most("equilibrium-identity", worst, 1e-9));

    let report = analysis::no_go_report(h, model, &NoGoGrid::default());
    out.push(Check::at_most(
        "no-go-d2h-dq2",
        report.d2h_dq2.abs(),
        report.tolerance,
    ));
    out.push(Check::at_most(
        "no-go-d2h-dzdq",
        report.d2h_dzdq.abs(),
        report.tolerance,
    ));
    out.push(Check::flag(
        "no-go-bound",
        report.bound_holds && report.front_bounded,
        report.bound_constant,
        "|dH/dZ| <= C(|Z| + Q^2)",
    ));

    let ps = analysis::logspace(1e-4, model.front.p_validity.min(0.1), 50);
    let dz = |p: f64| {
        let pt = model.front.point(p);
        h.contains(pt.z, pt.q).then(|| h.evaluate(pt.z, pt.q).dh_dz)
    };
    let meta = ps
        .iter()
        .filter(|&&p| dz(p).is_some_and(|v| v < 0.0))
        .count();
    let unst = ps
        .iter()
        .filter(|&&p| dz(-p).is_some_and(|v| v > 0.0))
        .count();
    out.push(Check::flag(
        "sign-metastable",
        meta == 50,
        meta as f64,
        "50 negative",
    ));
    out.push(Check::flag(
        "sign-unstable",
        unst == 50,
        unst as f64,
        "50 positive",
    ));
}

fn i_growth(model: &CuspModel, cfg: &RunConfig, out: &mut Vec<Check>) {
    let h = &model.hamiltonian;
    let q = 1e-3;
    let run = || -> Result<f64, Box<dyn std::error::Error>> {
        let limit = h.equilibrium(q, Branch::Metastable)?;
        let gamma = analysis::theory_rates(RelaxationKind::Contact, model, &[q])?[0];
        let window = (2.0 / gamma, 15.0 / gamma);
        let icfg = cfg
            .integrator()
            .with_t_max(window.1)
            .with_sampling(Sampling::Times(analysis::logspace(window.0, window.1, 40)));
        let traj = dynamics::integrate_contact_near(
            1.5 * limit.z,
            limit.p,
            q,
            h,
            &icfg,
            (limit.z, limit.p),
        )?;
        Ok(analysis::i_growth(&traj, h, &limit, window)?.0.exponent)
    };
    match run() {
        Ok(k) => out.push(Check::within("i-growth-exponent", k, 1.0, 0.05)),
        Err(e) => out.push(Check::failed("i-growth-exponent", e)),
    }
}

fn series_residual(coeffs: &[f64]) -> Result<f64, cusp_core::formal_series::SeriesError> {
    let order = coeffs.len() - 1;
    let f = TruncatedSeries::new(coeffs.to_vec())?;
    let mut unit = coeffs.to_vec();
    unit[0] = 1.0;
    let u = TruncatedSeries::new(unit)?;
    let x = TruncatedSeries::variable(order);
    let r = f.revert()?;
    let root = u.sqrt_unit()?;
    let scale = f.max_abs_coeff().max(u.max_abs_coeff());
    let residuals = [
        f.compose(&r)? - x.clone(),
        r.compose(&f)? - x,
        &root * &root - u,
    ];
    Ok(residuals
        .iter()
        .map(|s| s.max_abs_coeff() / scale)
        .fold(0.0, f64::max))
}

fn series_engine(order: usize, out: &mut Vec<Check>) {
    let mut state: u64 = 0x5eed;
    let mut uniform = |lo: f64, hi: f64| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        lo + (hi - lo) * ((state >> 11) as f64 / (1u64 << 53) as f64)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut c: Vec<f64> = (0..=order).map(|_| uniform(-0.25, 0.25)).collect();
        c[0] = 0.0;
        c[1] = uniform(1.0, 2.0) * if uniform(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
        match series_residual(&c) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return out.push(Check::failed("series-identities", e)),
        }
    }
    out.push(Check::at_most("series-identities", worst, 1e-10));
}

/// `H = −Z²` on an unbounded domain.
struct NormalForm;

impl ContactGenerator for NormalForm {
    fn evaluate(&self, z: f64, _q: f64) -> HamiltonianEval {
        HamiltonianEval {
            h: -z * z,
            dh_dz: -2.0 * z,
            dh_dq: 0.0,
        }
    }

    fn domain_radius(&self) -> f64 {
        f64::INFINITY
    }
}

fn rk4_order(out: &mut Vec<Check>) {
    let dts = [0.1, 0.05, 0.025];
    let exact = 1.0 / 11.0;
    let mut logs = Vec::new();
    for dt in dts {
        let cfg = IntegratorConfig::rk4(dt, 10.0).with_sampling(Sampling::Steps(usize::MAX));
        match dynamics::integrate_contact_z(1.0, 0.0, &NormalForm, &cfg) {
            Ok(t) => logs.push((dt.ln(), (t.last().1 - exact).abs().ln())),
            Err(e) => return out.push(Check::failed("rk4-order", e)),
        }
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|l| l.0).sum::<f64>() / n;
    let my = logs.iter().map(|l| l.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    out.push(Check::within("rk4-order", sxy / sxx, 4.0, 0.2));
}

/// Runs every check for the configured parameters.
pub fn checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let model = cfg.model()?;
    let mut out = Vec::new();
    scan_checks(RelaxationKind::Glauber, &model, cfg, &mut out);
    scan_checks(RelaxationKind::Contact, &model, cfg, &mut out);
    rate_theorem(&model, cfg, &mut out);
    cusp_checks(&model, cfg, &mut out);
    closed_form(&model, cfg, &mut out);
    front_checks(&model, &mut out);
    i_growth(&model, cfg, &mut out);
    series_engine(cfg.hamiltonian.order, &mut out);
    rk4_order(&mut out);
    Ok(out)
}

pub fn run(cfg: &RunConfig, common: &Common) -> Result<u8, CliError> {
    let out_dir = prepare_out(cfg, common)?;
    let report = checks(cfg)?;
    let mut text = String::from("name\tstatus\tmeasured\texpected\ttolerance\n");
    for c in &report {
        let line = c.line();
        println!("{line}");
        text.push_str(&line);
        text.push('\n');
    }
    output::write_file(&out_dir.join("verify.tsv"), &text)?;
    let failed = report.iter().filter(|c| c.status == Status::Fail).count();
    let skipped = report
        .iter()
        .filter(|c| c.status == Status::SkippedByConfig)
        .count();
    eprintln!(
        "{} checks: {} failed, {} skipped",
        report.len(),
        failed,
        skipped
    );
    Ok(if failed == 0 { 0 } else { 1 })
}

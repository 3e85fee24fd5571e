//! End-to-end acceptance checks at the reference parameters `b = 1`, `β = 2`, `a = 0.1`, `N = 12`.
//!
//! Each test prints one `criterion <n> ... PASS|FAIL` line before asserting.

use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cusp_core::analysis::{self, CuspSetup, NoGoGrid, RelaxationKind, RelaxationResult, ScanSetup};
use cusp_core::dynamics::{self, IntegratorConfig, Sampling};
use cusp_core::formal_series::TruncatedSeries;
use cusp_core::hamiltonian::{Branch, ContactGenerator, HamiltonianEval};
use cusp_core::CuspModel;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {id:>2} {name:<28} {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn ok_results(
    out: Vec<Result<RelaxationResult, analysis::AnalysisError>>,
) -> Vec<RelaxationResult> {
    out.into_iter()
        .map(|r| r.unwrap_or_else(|e| panic!("scan point failed: {e}")))
        .collect()
}

fn glauber_scaling() {
    let model = CuspModel::reference();
    let grid = analysis::logspace(1e-4, 1e-2, 9);
    let start = Instant::now();
    let results = ok_results(analysis::relaxation_scan(
        RelaxationKind::Glauber,
        &model,
        &grid,
        &ScanSetup::default(),
    ));
    let fit = analysis::scaling_exponent(&results).unwrap();
    let elapsed = start.elapsed();
    let theory = analysis::theory_scaling_exponent(RelaxationKind::Glauber, &model, &grid).unwrap();
    let pass = (fit.exponent + 0.5).abs() <= 0.03
        && (theory.exponent + 0.5).abs() <= 0.01
        && elapsed < Duration::from_secs(10)
        && analysis::tau_is_monotone(&results);
    report(
        1,
        "glauber-scaling",
        pass,
        format!(
            "exponent {:.4} analytic {:.4} runtime {:.2?}",
            fit.exponent, theory.exponent, elapsed
        ),
    );
}

fn contact_scaling() {
    let model = CuspModel::reference();
    let grid = analysis::logspace(1e-4, 3e-3, 7);
    let start = Instant::now();
    let results = ok_results(analysis::relaxation_scan(
        RelaxationKind::Contact,
        &model,
        &grid,
        &ScanSetup::default(),
    ));
    let fit = analysis::scaling_exponent(&results).unwrap();
    let elapsed = start.elapsed();
    let rates = analysis::theory_rates(RelaxationKind::Contact, &model, &grid).unwrap();
    let gamma_fit = analysis::fit_loglog(&grid, &rates, None).unwrap();
    let pass = (fit.exponent + 1.5).abs() <= 0.10
        && (gamma_fit.exponent - 1.5).abs() <= 0.02
        && elapsed < Duration::from_secs(30)
        && analysis::tau_is_monotone(&results);
    report(
        2,
        "contact-scaling",
        pass,
        format!(
            "exponent {:.4} gamma exponent {:.4} runtime {:.2?}",
            fit.exponent, gamma_fit.exponent, elapsed
        ),
    );
}

fn rate_theorem() {
    let model = CuspModel::reference();
    let q = 1e-3;
    let limit = model
        .hamiltonian
        .equilibrium(q, Branch::Metastable)
        .unwrap();
    let setup = ScanSetup::default();
    let starts = [
        (limit.z, limit.p + 1e-4),
        (1.5 * limit.z, limit.p + 1e-4),
        (0.5 * limit.z, limit.p - 2e-4),
    ];
    let ratios: Vec<f64> = starts
        .iter()
        .map(|&(z0, p0)| {
            analysis::measure_contact_rate_from(&model, q, z0, p0, &setup)
                .unwrap_or_else(|e| panic!("start ({z0:e}, {p0:e}): {e}"))
                .rate_ratio()
        })
        .collect();
    let pass = ratios.iter().all(|r| (0.98..=1.02).contains(r));
    report(3, "rate-theorem", pass, format!("ratios {ratios:.5?}"));
}

fn glauber_rate_formula() {
    let model = CuspModel::reference();
    let grid = analysis::logspace(1e-4, 1e-2, 9);
    let results = ok_results(analysis::relaxation_scan(
        RelaxationKind::Glauber,
        &model,
        &grid,
        &ScanSetup::default(),
    ));
    let worst = results
        .iter()
        .map(|r| (r.rate_ratio() - 1.0).abs())
        .fold(0.0, f64::max);
    report(
        4,
        "glauber-rate-formula",
        worst <= 0.01,
        format!("max relative deviation {worst:.3e}"),
    );
}

fn cusp_power_law() {
    let model = CuspModel::reference();
    let setup = CuspSetup::default();
    let contact = analysis::cusp_power_law(RelaxationKind::Contact, &model, &setup).unwrap();
    let glauber = analysis::cusp_power_law(RelaxationKind::Glauber, &model, &setup).unwrap();
    let rel =
        |fit: &analysis::CuspPowerLaw| (fit.fit.prefactor / fit.reference_prefactor - 1.0).abs();
    let pass = (contact.fit.exponent + 1.0).abs() <= 0.05
        && (glauber.fit.exponent + 1.0).abs() <= 0.05
        && rel(&contact) <= 0.10
        && rel(&glauber) <= 0.10;
    report(
        5,
        "cusp-power-law",
        pass,
        format!(
            "contact {:.4} (prefactor {:.4} vs a = {}) glauber {:.4} (prefactor {:.4} vs 1/eta = {:.4})",
            contact.fit.exponent,
            contact.fit.prefactor,
            contact.reference_prefactor,
            glauber.fit.exponent,
            glauber.fit.prefactor,
            glauber.reference_prefactor
        ),
    );
}

fn closed_form_oracle() {
    let model = CuspModel::reference();
    let h = &model.hamiltonian;
    let (z0, p0) = (0.01, 0.02);
    let times = analysis::logspace(1e-2, 1e5, 50);
    let cfg = IntegratorConfig::default()
        .with_tolerances(1e-10, 1e-16)
        .with_t_max(1e5)
        .with_sampling(Sampling::Times(times.clone()));
    let traj = dynamics::integrate_contact(z0, p0, 0.0, h, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    let mut hits = 0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if !times.contains(t) {
            continue;
        }
        hits += 1;
        let (z, p) = dynamics::closed_form_cusp(z0, p0, h.a(), *t).unwrap();
        worst = worst.max(((s.z - z) / z).abs()).max(((s.p - p) / p).abs());
    }
    report(
        6,
        "closed-form-oracle",
        hits == 50 && worst <= 1e-8,
        format!("{hits} samples, max relative error {worst:.3e}"),
    );
}

fn front_vanishing() {
    let model = CuspModel::reference();
    let at = model
        .front_residual(1e-2)
        .abs()
        .max(model.front_residual(-1e-2).abs());
    let profile = analysis::front_residual_slope(&model, (1e-3, 1e-1), 41);
    let slope = profile.fit.map_or(f64::NAN, |f| f.exponent);
    let pass = at < 1e-8 && slope >= 10.0;
    report(
        7,
        "front-vanishing",
        pass,
        format!(
            "|H| at 1e-2 {at:.3e}, slope {slope:.3} over {} of {} samples above rounding",
            profile.resolved_count(),
            profile.samples.len()
        ),
    );
}

fn equilibrium_identity() {
    let model = CuspModel::reference();
    let h = &model.hamiltonian;
    let worst = analysis::logspace(1e-5, 1e-2, 60)
        .into_iter()
        .flat_map(|p| [p, -p])
        .map(|p| {
            let pt = model.front.point(p);
            let ev = h.evaluate(pt.z, pt.q);
            (p * ev.dh_dz + ev.dh_dq).abs()
        })
        .fold(0.0, f64::max);
    report(
        8,
        "equilibrium-identity",
        worst <= 1e-9,
        format!("max |P·H_Z + H_Q| {worst:.3e}"),
    );
}

fn no_go_structure() {
    let model = CuspModel::reference();
    let r = analysis::no_go_report(&model.hamiltonian, &model, &NoGoGrid::default());
    report(
        9,
        "no-go-structure",
        r.passed(),
        format!(
            "H_QQ {:.3e} H_ZQ {:.3e} C {:.4} check {:.4} front {:.4}",
            r.d2h_dq2, r.d2h_dzdq, r.bound_constant, r.check_ratio, r.front_ratio
        ),
    );
}

fn sign_structure() {
    let model = CuspModel::reference();
    let h = &model.hamiltonian;
    let p_max = model.front.p_validity.min(0.1);
    let ps = analysis::logspace(1e-4, p_max, 50);
    let sign_at = |p: f64| {
        let pt = model.front.point(p);
        assert!(h.contains(pt.z, pt.q));
        h.evaluate(pt.z, pt.q).dh_dz
    };
    let meta = ps.iter().filter(|&&p| sign_at(p) < 0.0).count();
    let unst = ps.iter().filter(|&&p| sign_at(-p) > 0.0).count();
    report(
        10,
        "sign-structure",
        meta == 50 && unst == 50,
        format!("metastable {meta}/50 negative, unstable {unst}/50 positive"),
    );
}

fn linear_growth_of_i() {
    let model = CuspModel::reference();
    let h = &model.hamiltonian;
    let q = 1e-3;
    let limit = h.equilibrium(q, Branch::Metastable).unwrap();
    let gamma = analysis::theory_rates(RelaxationKind::Contact, &model, &[q]).unwrap()[0];
    let window = (2.0 / gamma, 15.0 / gamma);
    let cfg = IntegratorConfig::default()
        .with_t_max(window.1)
        .with_sampling(Sampling::Times(analysis::logspace(window.0, window.1, 40)));
    let traj =
        dynamics::integrate_contact_near(1.5 * limit.z, limit.p, q, h, &cfg, (limit.z, limit.p))
            .unwrap();
    let (fit, _) = analysis::i_growth(&traj, h, &limit, window).unwrap();
    report(
        11,
        "linear-growth-of-I",
        (fit.exponent - 1.0).abs() <= 0.05,
        format!("exponent {:.4}", fit.exponent),
    );
}

/// Small deterministic generator for the randomized series.
struct Lcg(u64);

impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

fn series_engine() {
    const N: usize = 12;
    let mut rng = Lcg(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut c: Vec<f64> = (0..=N).map(|_| rng.uniform(-0.25, 0.25)).collect();
        c[0] = 0.0;
        c[1] = rng.uniform(1.0, 2.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        let f = TruncatedSeries::new(c.clone()).unwrap();
        let scale = f.max_abs_coeff();
        let r = f.revert().unwrap();
        let left = f.compose(&r).unwrap() - TruncatedSeries::variable(N);
        let right = r.compose(&f).unwrap() - TruncatedSeries::variable(N);
        c[0] = 1.0;
        let u = TruncatedSeries::new(c).unwrap();
        let root = u.sqrt_unit().unwrap();
        let sq = &root * &root - u.clone();
        for res in [left, right, sq] {
            worst = worst.max(res.max_abs_coeff() / scale.max(u.max_abs_coeff()));
        }
    }
    report(
        12,
        "series-engine",
        worst < 1e-10,
        format!("max relative residual {worst:.3e} over 100 series"),
    );
}

fn integrator_order() {
    let exact = 1.0 / (10.0 + 1.0);
    let dts = [0.1, 0.05, 0.025];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let cfg = IntegratorConfig::rk4(dt, 10.0).with_sampling(Sampling::Steps(usize::MAX));
            let traj = dynamics::integrate_contact_z(1.0, 0.0, &NormalForm, &cfg).unwrap();
            (traj.last().1 - exact).abs()
        })
        .collect();
    let lx: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / 3.0;
    let my = ly.iter().sum::<f64>() / 3.0;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    report(
        13,
        "integrator-order",
        (slope - 4.0).abs() <= 0.2,
        format!("slope {slope:.4} errors {errs:?}"),
    );
}

/// `H = −Z²`, the cusp normal form without the `a` term.
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

fn main() -> ExitCode {
    let criteria: [fn(); 13] = [
        glauber_scaling,
        contact_scaling,
        rate_theorem,
        glauber_rate_formula,
        cusp_power_law,
        closed_form_oracle,
        front_vanishing,
        equilibrium_identity,
        no_go_structure,
        sign_structure,
        linear_growth_of_i,
        series_engine,
        integrator_order,
    ];
    let failed = criteria
        .iter()
        .filter(|c| panic::catch_unwind(**c).is_err())
        .count();
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

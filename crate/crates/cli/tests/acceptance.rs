//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails if any required criterion fails. The strict crossing-time
//! tier under the default energy convention is reported but not required when
//! the fallback tier passes.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiclassical::cubic::{wkb_lifetime, CubicModel};
use semiclassical::gutzwiller::{
    eval_orbit, find_pole, linearized_pole, pole_residual, response_function, sinh_expansion_error, OrbitModel,
    PoleIndex, SemiclassicalContext,
};
use semiclassical::poly::Polynomial;
use semiclassical::trajectory::{reversibility_error, Branch, IntegratorConfig};
use semiclassical_cli::policy::{EnergyPolicy, Start, X0Policy};
use semiclassical_cli::table1::{compute_rows, reference_rows, Table1Row, DEFAULT_COUPLINGS};

struct Report {
    required_failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, required: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        let note = if required || pass { "" } else { " (informational)" };
        println!("criterion {id}: {verdict}{note}  {detail}");
        if required && !pass {
            self.required_failures.push(id.to_string());
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn table1(policy: EnergyPolicy) -> (Vec<Table1Row>, f64) {
    let started = Instant::now();
    let rows = compute_rows(&DEFAULT_COUPLINGS, &policy, &X0Policy::X1, Branch::Positive, &IntegratorConfig::default())
        .expect("table1 pipeline runs");
    (rows, started.elapsed().as_secs_f64())
}

fn fmt_list(values: impl Iterator<Item = String>) -> String {
    values.collect::<Vec<_>>().join(", ")
}

/// Within max(13 time units, 10 %) of every reference crossing time.
fn tier_a(rows: &[Table1Row]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (row, reference) in rows.iter().zip(reference_rows()) {
        let tolerance = (0.1 * reference.t_c).max(13.0);
        let err = row.t_c.map_or(f64::INFINITY, |t| (t - reference.t_c).abs());
        ok &= err <= tolerance;
        parts.push(format!(
            "g={} t_c={:.2} ref={} |err|={:.1}/{:.1}",
            row.g,
            row.t_c.unwrap_or(f64::NAN),
            reference.t_c,
            err,
            tolerance
        ));
    }
    (ok, parts.join("; "))
}

/// Finite, decreasing in g, ratio above 4 everywhere and growing as g shrinks.
fn tier_b(rows: &[Table1Row]) -> (bool, String) {
    let finite = rows.iter().all(|r| r.t_c.is_some());
    let t: Vec<f64> = rows.iter().map(|r| r.t_c.unwrap_or(f64::NAN)).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio().unwrap_or(f64::NAN)).collect();
    let decreasing = t.windows(2).all(|w| w[1] < w[0]);
    let above_four = ratios.iter().all(|&r| r > 4.0);
    let ratio_monotone = ratios.windows(2).all(|w| w[1] < w[0]);
    (
        finite && decreasing && above_four && ratio_monotone,
        format!(
            "finite={finite} t_c decreasing={decreasing} ratios=[{}] (>4: {above_four}, monotone: {ratio_monotone})",
            fmt_list(ratios.iter().map(|r| format!("{r:.2}")))
        ),
    )
}

fn criterion_1(report: &mut Report) {
    let expected = [547, 85, 24, 10];
    let got: Vec<i64> = DEFAULT_COUPLINGS
        .iter()
        .map(|&g| wkb_lifetime(g).unwrap().round() as i64)
        .collect();
    report.line("1", got == expected, true, format!("rounded tau = {got:?}, expected {expected:?}"));
}

struct CrossingRuns {
    default_rows: Vec<Table1Row>,
    default_secs: f64,
    shifted_rows: Vec<Table1Row>,
    shifted_secs: f64,
}

fn criteria_2_3(report: &mut Report, runs: &CrossingRuns) {
    let (default_rows, default_secs) = (&runs.default_rows, runs.default_secs);
    let (shifted_rows, shifted_secs) = (&runs.shifted_rows, runs.shifted_secs);

    let (a_default, detail) = tier_a(default_rows);
    let (b_default, b_detail) = tier_b(default_rows);
    let (a_shifted, a_s_detail) = tier_a(shifted_rows);
    let (b_shifted, b_s_detail) = tier_b(shifted_rows);

    // Tier A is only required if the fallback cannot be met either.
    let fallback = b_default || b_shifted;
    report.line(
        "2 (tier A, E = 1/2 - i/(2 tau), x0 = x1)",
        a_default,
        !fallback,
        format!("{detail}; {default_secs:.1} s"),
    );
    report.line(
        "2 (tier A, Re E = 1/2 - 11g^2/8, x0 = x1)",
        a_shifted,
        false,
        format!("{a_s_detail}; {shifted_secs:.1} s"),
    );
    report.line("3 (tier B, E = 1/2 - i/(2 tau), x0 = x1)", b_default, false, b_detail);
    report.line("3 (tier B, Re E = 1/2 - 11g^2/8, x0 = x1)", b_shifted, !a_default, b_s_detail);
    let tier = match (a_default, b_default, a_shifted, b_shifted) {
        (true, ..) => "tier A with the default energy",
        (false, true, ..) => "tier B with the default energy",
        (false, false, true, true) => "tiers A and B with the shifted energy (the default energy meets neither)",
        (false, false, _, true) => "tier B with the shifted energy",
        _ => "neither tier",
    };
    println!("crossing-time row satisfied by: {tier}");
}

fn criterion_5(report: &mut Report, runs: &CrossingRuns) {
    let (default_rows, shifted_rows) = (&runs.default_rows, &runs.shifted_rows);
    let mut worst = Vec::new();
    let mut ok = true;
    for (label, rows) in [("default", default_rows), ("shifted", shifted_rows)] {
        let longest = rows
            .iter()
            .filter(|r| r.t_c.is_some())
            .max_by(|a, b| a.t_c.partial_cmp(&b.t_c).unwrap())
            .unwrap();
        let start = Start::resolve(
            &CubicModel::new(longest.g).unwrap(),
            &if label == "default" { EnergyPolicy::QuasiBound } else { EnergyPolicy::Shifted },
            &X0Policy::X1,
            Branch::Positive,
        )
        .unwrap();
        let drift = longest.max_energy_drift.unwrap();
        let limit = 1e-8 * start.energy.norm().max(1.0);
        ok &= drift <= limit;
        worst.push(format!("{label}: t_c={:.0} drift={drift:.2e} (limit {limit:.1e})", longest.t_c.unwrap()));
    }
    report.line("5", ok, true, worst.join("; "));
}

fn criterion_4(report: &mut Report) {
    let g = 2.0 / 125f64.sqrt();
    let model = CubicModel::new(g).unwrap();
    let start = Start::resolve(&model, &EnergyPolicy::QuasiBound, &X0Policy::X1, Branch::Positive).unwrap();
    let tp = model.turning_points(start.energy).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    // Stop short of the close pass by the pole at t ≈ 47.5, where double
    // precision can no longer hold the energy.
    let status = Command::new(env!("CARGO_BIN_EXE_semiclassical"))
        .args(["trajectory", "--g", &g.to_string(), "--t-max", "45", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    if !status.status.success() {
        report.line("4", false, true, format!("trajectory command failed: {}", String::from_utf8_lossy(&status.stderr)));
        return;
    }
    let text = std::fs::read_to_string(&out).unwrap();
    let samples: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    let crossed = samples.iter().position(|&(_, x)| x >= tp.x3.re);
    let returned = crossed.and_then(|i| samples[i..].iter().find(|&&(_, x)| x < tp.x2.re));
    report.line(
        "4",
        crossed.is_some() && returned.is_some(),
        true,
        format!(
            "g = 2/sqrt(125): crosses Re x3 = {:.4} at t = {}, back below Re x2 = {:.4} at t = {}",
            tp.x3.re,
            crossed.map_or("never".into(), |i| format!("{:.2}", samples[i].0)),
            tp.x2.re,
            returned.map_or("never".into(), |s| format!("{:.2}", s.0)),
        ),
    );
}

fn criterion_6(report: &mut Report) {
    let cfg = IntegratorConfig::default();
    let harmonic = reversibility_error(&CubicModel::harmonic(), c(0.5, 0.0), c(-1.0, 0.0), c(0.0, 0.0), 2.0 * PI, &cfg).unwrap();
    let model = CubicModel::new(0.1).unwrap();
    let start = Start::resolve(&model, &EnergyPolicy::Explicit(c(0.5, 0.0)), &X0Policy::X1, Branch::Positive).unwrap();
    let cubic = reversibility_error(&model, start.energy, start.x0, start.p0, 50.0, &cfg).unwrap();
    report.line(
        "6",
        harmonic <= 1e-10 && cubic <= 1e-6,
        true,
        format!("harmonic T=2pi: {harmonic:.2e} (<= 1e-10); g=0.1 E=0.5 T=50: {cubic:.2e} (<= 1e-6)"),
    );
}

fn criterion_7(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let g = rng.gen_range(0.05..=0.2);
        let barrier = 1.0 / (54.0 * g * g);
        let e = c(rng.gen_range(0.02..0.9) * barrier, rng.gen_range(-0.1..0.1));
        let [x1, x2, x3] = CubicModel::new(g).unwrap().turning_points(e).unwrap().as_array();
        let sum = ((x1 + x2 + x3) - 1.0 / (2.0 * g)).norm() / (1.0 / (2.0 * g));
        let pair_scale = (x1 * x2).norm() + (x1 * x3).norm() + (x2 * x3).norm();
        let pairs = (x1 * x2 + x1 * x3 + x2 * x3).norm() / pair_scale;
        let product = (x1 * x2 * x3 + e / g).norm() / (e / g).norm();
        worst = worst.max(sum).max(pairs).max(product);
    }
    report.line("7", worst <= 1e-10, true, format!("200 instances, worst relative Vieta residual {worst:.2e} (<= 1e-10)"));
}

fn criterion_8(report: &mut Report) {
    let ctx = SemiclassicalContext::default();
    let w0 = 0.5;
    let linear = OrbitModel::linear("demo", 2.0 * PI, w0, 2).unwrap();
    let mut lattice_err: f64 = 0.0;
    for k in 0..4 {
        for s in 0..4 {
            let pole = find_pole(&ctx, &linear, PoleIndex::new(k, s), None).unwrap();
            let exact = c(0.5 + s as f64, -w0 * (k as f64 + 0.5) / (2.0 * PI));
            lattice_err = lattice_err.max((pole - exact).norm());
        }
    }

    let quadratic = OrbitModel::new(
        "quadratic",
        Polynomial::new(vec![0.0, 2.0 * PI, 0.1]),
        Polynomial::new(vec![0.5, 0.01]),
        Some(Polynomial::new(vec![2.0 * PI, 0.2])),
        2,
    )
    .unwrap();
    let mut grid_err: f64 = 0.0;
    for (k, s) in [(0, 0), (1, 0), (0, 2), (2, 3)] {
        let idx = PoleIndex::new(k, s);
        let newton = find_pole(&ctx, &quadratic, idx, None).unwrap();
        // Zooming grid search for the minimum of |residual| around the linearized guess.
        let guess = linearized_pole(&ctx, &quadratic, idx).unwrap();
        let mut centre = guess;
        let mut half = 1.0;
        for _ in 0..30 {
            let n = 40;
            let mut best = (f64::INFINITY, centre);
            for a in -n..=n {
                for b in -n..=n {
                    let e = centre + c(a as f64, b as f64) * (half / n as f64);
                    let r = pole_residual(&ctx, &quadratic, e, idx).norm();
                    if r < best.0 {
                        best = (r, e);
                    }
                }
            }
            centre = best.1;
            half *= 0.2;
        }
        grid_err = grid_err.max((newton - centre).norm() / newton.norm().max(1.0));
    }
    report.line(
        "8",
        lattice_err <= 1e-12 && grid_err <= 1e-12,
        true,
        format!("4x4 closed-form lattice max error {lattice_err:.2e} (<= 1e-12); quadratic orbit vs grid search {grid_err:.2e} (<= 1e-12)"),
    );
}

fn criterion_9(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 50 {
        let s = Polynomial::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(3.0..7.0), rng.gen_range(-0.2..0.2)]);
        let w = Polynomial::new(vec![rng.gen_range(0.6..2.0), rng.gen_range(-0.05..0.05)]);
        let t = s.derivative();
        let orbit = OrbitModel::new("random", s, w, Some(t), rng.gen_range(0..4)).unwrap();
        let ctx = SemiclassicalContext::new(rng.gen_range(0.5..2.0)).unwrap();
        let e = c(rng.gen_range(-1.0..1.0), rng.gen_range(-0.02..0.05));
        let v = eval_orbit(&orbit, e);
        let i = Complex64::i();
        let phase = v.action / ctx.hbar() - orbit.focal_points() as f64 * PI / 2.0;
        let z0 = (i * phase - 0.5 * v.instability).exp();
        if z0.norm() > 0.8 || (1.0 - z0).norm() < 0.05 {
            continue;
        }
        let resummed = response_function(&ctx, &orbit, e).unwrap();
        let mut total = c(0.0, 0.0);
        for n in 1..=400 {
            let n = n as f64;
            for k in 0..=400 {
                total += 2.0 * (i * n * phase - n * (k as f64 + 0.5) * v.instability).exp();
            }
        }
        let brute = -i * v.period / (2.0 * ctx.hbar()) * total;
        worst = worst.max((resummed - brute).norm() / brute.norm());
        checked += 1;
    }

    let mut bound_ok = true;
    for x in [0.5, 1.0, 2.0] {
        for k in 0..=20u32 {
            let err = sinh_expansion_error(x, k).unwrap();
            let bound = 2.0 * (-(2.0 * k as f64 + 3.0) * x).exp() / (-(-2.0 * x).exp_m1());
            bound_ok &= err <= bound * (1.0 + 1e-12);
        }
    }
    report.line(
        "9",
        worst <= 1e-12 && bound_ok,
        true,
        format!("50 instances, worst relative deviation {worst:.2e} (<= 1e-12); sinh tail bound on x in {{0.5,1,2}}, K in 0..=20: {bound_ok}"),
    );
}

fn criterion_10(report: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_semiclassical"))
            .args(["table1", "--format", "csv", "--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    report.line("10", a == b && !a.is_empty(), true, format!("two table1 CSV runs, {} bytes each, identical: {}", a.len(), a == b));
}

fn main() -> ExitCode {
    let mut report = Report {
        required_failures: Vec::new(),
    };
    criterion_1(&mut report);
    let (default_rows, default_secs) = table1(EnergyPolicy::QuasiBound);
    let (shifted_rows, shifted_secs) = table1(EnergyPolicy::Shifted);
    let runs = CrossingRuns {
        default_rows,
        default_secs,
        shifted_rows,
        shifted_secs,
    };
    criteria_2_3(&mut report, &runs);
    criterion_4(&mut report);
    criterion_5(&mut report, &runs);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    criterion_9(&mut report);
    criterion_10(&mut report);
    if report.required_failures.is_empty() {
        println!("acceptance: all required criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: required criteria failed: {}", report.required_failures.join(", "));
        ExitCode::FAILURE
    }
}

//! Experiment execution: maps parsed config sections onto library calls,
//! writes CSV/SVG artifacts and per-experiment status records.

use crate::config::{Experiment, Kind};
use crate::svg;
use colombeau::algebra::{embed, embed_smooth, embedding_defect, Distribution, Representative};
use colombeau::asymptotics::{
    classify, default_battery, run_sweep, EpsLadder, Mode, SweepOptions, Verdict,
};
use colombeau::diffeo::{moment_degradation_check, Diffeomorphism};
use colombeau::fixtures::run_all_fixtures;
use colombeau::formalism::DomainSpec;
use colombeau::numerics::{moment, BoundingBox, MultiIndex};
use colombeau::testobjects::{make_mollifier_with_resolution, TestObjectFamily};
use colombeau::num_complex::Complex64;
use std::fs;
use std::path::Path;

/// Outcome of one experiment; `pass` drives the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub name: String,
    pub kind: &'static str,
    pub pass: bool,
    pub detail: String,
    pub files: Vec<String>,
}

/// A config-level defect (unknown ids, bad ranges): reported with exit
/// code 2, unlike failed assertions which exit 1.
pub struct ConfigError(pub String);

fn omega() -> DomainSpec {
    DomainSpec::new(BoundingBox::interval(-2.0, 2.0).unwrap())
}

fn representative_by_id(id: &str) -> Result<Representative, ConfigError> {
    Ok(match id {
        "defect-sin" => embedding_defect(|x| Complex64::new(x[0].sin(), 0.0), omega()),
        "sigma-sin" => embed_smooth(|x| Complex64::new(x[0].sin(), 0.0), omega()),
        "iota-delta" => embed(&Distribution::delta_at(&[0.0]), omega())
            .map_err(|e| ConfigError(e.to_string()))?,
        "iota-abs" => embed(
            &Distribution::regular(|p| Complex64::new(p[0].abs(), 0.0)),
            omega(),
        )
        .map_err(|e| ConfigError(e.to_string()))?,
        "first-moment" => colombeau::fixtures::first_moment_representative(omega()),
        other => {
            return Err(ConfigError(format!(
                "unknown rep '{other}' (expected defect-sin, sigma-sin, iota-delta, \
                 iota-abs or first-moment)"
            )))
        }
    })
}

fn battery_by_name(
    name: &str,
    q: u32,
    n: usize,
    exact: bool,
) -> Result<Vec<TestObjectFamily>, ConfigError> {
    let all = default_battery(q, 1.0, 1, n, exact).map_err(|e| ConfigError(e.to_string()))?;
    if name == "default" {
        return Ok(all);
    }
    all.into_iter()
        .filter(|f| f.label == name)
        .map(Ok)
        .next()
        .map(|f| f.map(|x| vec![x]))
        .unwrap_or_else(|| {
            Err(ConfigError(format!(
                "unknown battery '{name}' (expected default, constant, x-modulated or \
                 eps-modulated)"
            )))
        })
}

fn ladder_from(exp: &Experiment) -> Result<EpsLadder, ConfigError> {
    let eps0 = exp.get_f64("eps0", 0.5).map_err(ConfigError)?;
    let factor = exp.get_f64("factor", 0.5).map_err(ConfigError)?;
    let count = exp.get_usize("count", 10).map_err(ConfigError)?;
    EpsLadder::new(eps0, factor, count).map_err(|e| ConfigError(e.to_string()))
}

fn write(out_dir: &Path, name: &str, contents: &str, files: &mut Vec<String>) -> Result<(), String> {
    let path = out_dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("writing {}: {e}", path.display()))?;
    files.push(name.to_string());
    Ok(())
}

/// Execute one experiment, writing its artifacts into `out_dir`.
pub fn run_experiment(
    exp: &Experiment,
    out_dir: &Path,
    seed_battery: Option<&str>,
) -> Result<Outcome, ConfigError> {
    let mut files = Vec::new();
    let (pass, detail) = match exp.kind {
        Kind::Mollifier => {
            let q = exp.get_u32("q", 4).map_err(ConfigError)?;
            let r = exp.get_f64("r", 1.0).map_err(ConfigError)?;
            let s = exp.get_usize("s", 1).map_err(ConfigError)?;
            let n = exp
                .get_usize("n", colombeau::numerics::default_resolution(s))
                .map_err(ConfigError)?;
            let m = make_mollifier_with_resolution(q, r, s, n)
                .map_err(|e| ConfigError(e.to_string()))?;
            write(out_dir, &format!("{}.csv", exp.name), &m.to_csv(), &mut files)
                .map_err(ConfigError)?;
            let mass_dev = (m.integrate() - Complex64::ONE).norm();
            let worst = colombeau::numerics::multi_indices(s, 1, q.max(1))
                .iter()
                .map(|a| moment(&m, a).norm())
                .fold(0.0f64, f64::max);
            (
                worst <= 1e-8 && mass_dev <= 1e-10,
                format!("max|moment| = {worst:.3e}, |mass-1| = {mass_dev:.3e}"),
            )
        }
        Kind::Sweep => {
            let rep = representative_by_id(exp.get_str("rep", "defect-sin"))?;
            let q = exp.get_u32("q", 2).map_err(ConfigError)?;
            let n = exp.get_usize("n", 512).map_err(ConfigError)?;
            let battery_name = exp
                .get("battery")
                .or(seed_battery)
                .unwrap_or("default")
                .to_string();
            let battery = battery_by_name(&battery_name, q, n, true)?;
            let ladder = ladder_from(exp)?;
            let k_lo = exp.get_f64("k_lo", -0.5).map_err(ConfigError)?;
            let k_hi = exp.get_f64("k_hi", 0.5).map_err(ConfigError)?;
            let k_region =
                BoundingBox::interval(k_lo, k_hi).map_err(|e| ConfigError(e.to_string()))?;
            let alpha = exp.get_u32("alpha", 0).map_err(ConfigError)?;
            let min_slope = exp.get_f64("min_slope", f64::NEG_INFINITY).map_err(ConfigError)?;
            let mut all_pass = true;
            let mut lines = Vec::new();
            for fam in &battery {
                let sweep = run_sweep(
                    &rep,
                    fam,
                    &k_region,
                    &MultiIndex(vec![alpha]),
                    &ladder,
                    &SweepOptions::default(),
                )
                .map_err(|e| ConfigError(e.to_string()))?;
                write(
                    out_dir,
                    &format!("{}-{}.csv", exp.name, fam.label),
                    &sweep.to_csv(),
                    &mut files,
                )
                .map_err(ConfigError)?;
                write(
                    out_dir,
                    &format!("{}-{}.svg", exp.name, fam.label),
                    &svg::log_log_plot(
                        &sweep.eps,
                        &sweep.g,
                        sweep.slope,
                        &format!("{} / {}", exp.name, fam.label),
                    ),
                    &mut files,
                )
                .map_err(ConfigError)?;
                all_pass &= sweep.slope >= min_slope;
                lines.push(format!("{}: slope {:.3}", fam.label, sweep.slope));
            }
            (all_pass, lines.join("; "))
        }
        Kind::Classify => {
            let rep = representative_by_id(exp.get_str("rep", "defect-sin"))?;
            let q = exp.get_u32("q", 2).map_err(ConfigError)?;
            let n = exp.get_usize("n", 512).map_err(ConfigError)?;
            let order = exp.get_u32("order", 1).map_err(ConfigError)?;
            let mode_name = exp.get_str("mode", "moderate").to_string();
            let exact = mode_name == "negligible";
            let battery_name = exp
                .get("battery")
                .or(seed_battery)
                .unwrap_or("default")
                .to_string();
            let battery = battery_by_name(&battery_name, q, n, exact)?;
            let mode = match mode_name.as_str() {
                "moderate" => Mode::Moderate,
                "negligible" => Mode::Negligible { n: order, q },
                "four-infty" => Mode::FourInfty {
                    n: order,
                    q,
                    beta_max: 2,
                },
                other => {
                    return Err(ConfigError(format!(
                        "unknown mode '{other}' (expected moderate, negligible or four-infty)"
                    )))
                }
            };
            let ladder = ladder_from(exp)?;
            let k_lo = exp.get_f64("k_lo", -0.5).map_err(ConfigError)?;
            let k_hi = exp.get_f64("k_hi", 0.5).map_err(ConfigError)?;
            let k_region =
                BoundingBox::interval(k_lo, k_hi).map_err(|e| ConfigError(e.to_string()))?;
            let verdict = classify(
                &rep,
                &battery,
                &[k_region],
                &[MultiIndex(vec![0])],
                mode,
                &ladder,
                &SweepOptions::default(),
            )
            .map_err(|e| ConfigError(e.to_string()))?;
            let worst = battery.first().map(|f| f.label.clone()).unwrap_or_default();
            write(
                out_dir,
                &format!("{}.verdict", exp.name),
                &format!("{}\n", verdict.summary_line(&worst)),
                &mut files,
            )
            .map_err(ConfigError)?;
            let expect = exp.get_str("expect", "conclusive");
            let ok = match expect {
                "moderate" => matches!(verdict, Verdict::Moderate(_)),
                "negligible" => matches!(verdict, Verdict::Negligible(_)),
                "inconclusive" => matches!(verdict, Verdict::Inconclusive(_)),
                _ => !matches!(verdict, Verdict::Inconclusive(_)),
            };
            (ok, format!("{verdict:?}"))
        }
        Kind::DiffeoCheck => {
            let source = BoundingBox::interval(-2.0, 2.0).unwrap();
            let map_name = exp.get_str("map", "cubic").to_string();
            let mu = match map_name.as_str() {
                "identity" => Diffeomorphism::identity(source),
                "affine" => Diffeomorphism::affine_1d(1.5, 0.25, source)
                    .map_err(|e| ConfigError(e.to_string()))?,
                "cubic" => Diffeomorphism::cubic_1d(0.2, source)
                    .map_err(|e| ConfigError(e.to_string()))?,
                other => {
                    return Err(ConfigError(format!(
                        "unknown map '{other}' (expected identity, affine or cubic)"
                    )))
                }
            };
            let q = exp.get_u32("q", 4).map_err(ConfigError)?;
            let n = exp.get_usize("n", 1024).map_err(ConfigError)?;
            let k_lo = exp.get_f64("k_lo", -0.5).map_err(ConfigError)?;
            let k_hi = exp.get_f64("k_hi", 0.5).map_err(ConfigError)?;
            let k_tilde =
                BoundingBox::interval(k_lo, k_hi).map_err(|e| ConfigError(e.to_string()))?;
            let count = exp.get_usize("count", 8).map_err(ConfigError)?;
            let ladder =
                EpsLadder::new(0.5, 0.5, count).map_err(|e| ConfigError(e.to_string()))?;
            let report = moment_degradation_check(&mu, q, &k_tilde, 1.0, n, &ladder)
                .map_err(|e| ConfigError(e.to_string()))?;
            let mut lines = Vec::new();
            for s in &report.sweeps {
                write(
                    out_dir,
                    &format!("{}-a{}b{}.csv", exp.name, s.alpha.order(), s.beta.order()),
                    &s.result.to_csv(),
                    &mut files,
                )
                .map_err(ConfigError)?;
                lines.push(format!(
                    "a{}b{}: {}",
                    s.alpha,
                    s.beta,
                    if s.vacuous {
                        "vanished".into()
                    } else {
                        format!("{:.2}", s.result.slope)
                    }
                ));
            }
            (report.certified, lines.join("; "))
        }
        Kind::Fixtures => {
            let reports = run_all_fixtures().map_err(|e| ConfigError(e.to_string()))?;
            let mut all = true;
            let mut lines = Vec::new();
            for rep in &reports {
                write(
                    out_dir,
                    &format!("{}-{}.csv", exp.name, rep.name),
                    &rep.to_csv(),
                    &mut files,
                )
                .map_err(ConfigError)?;
                all &= rep.pass;
                lines.push(rep.summary_line());
            }
            (all, lines.join(" | "))
        }
        Kind::Ode => {
            let f_name = exp.get_str("f", "sin").to_string();
            let c = exp.get_f64("c", 1.0).map_err(ConfigError)?;
            let x0 = exp.get_f64("x0", 0.3).map_err(ConfigError)?;
            let xdot0 = exp.get_f64("xdot0", 0.0).map_err(ConfigError)?;
            let eps = exp.get_f64("eps", 0.00390625).map_err(ConfigError)?;
            let t_end = exp.get_f64("t_end", 1.0).map_err(ConfigError)?;
            let q = exp.get_u32("q", 0).map_err(ConfigError)?;
            let n = exp.get_usize("n", 512).map_err(ConfigError)?;
            let phi = make_mollifier_with_resolution(q, 1.0, 1, n)
                .map_err(|e| ConfigError(e.to_string()))?;
            let f: Box<dyn Fn(f64) -> f64 + Send + Sync> = match f_name.as_str() {
                "zero" => Box::new(|_| 0.0),
                "const" => Box::new(move |_| c),
                "sin" => Box::new(|x: f64| x.sin()),
                other => {
                    return Err(ConfigError(format!(
                        "unknown forcing coefficient '{other}' (expected zero, const or sin)"
                    )))
                }
            };
            let traj = colombeau::apps::solve_delta_ode(
                f,
                x0,
                xdot0,
                &phi,
                eps,
                t_end,
                format!("order-{q}"),
            )
            .map_err(|e| ConfigError(e.to_string()))?;
            write(out_dir, &format!("{}.csv", exp.name), &traj.to_csv(), &mut files)
                .map_err(ConfigError)?;
            let jump = traj.velocity_jump();
            let ok = match f_name.as_str() {
                "const" => (jump - c).abs() <= 1e-6,
                "zero" => jump.abs() <= 1e-12,
                _ => jump.is_finite(),
            };
            (ok, format!("velocity jump = {jump}"))
        }
        Kind::Wave => {
            let dim = exp.get_usize("dim", 1).map_err(ConfigError)?;
            let nx = exp.get_usize("nx", if dim == 1 { 121 } else { 7 }).map_err(ConfigError)?;
            let nt = exp.get_usize("nt", if dim == 1 { 41 } else { 17 }).map_err(ConfigError)?;
            let t_end = exp.get_f64("t_end", 1.0).map_err(ConfigError)?;
            let eta = exp.get_f64("eta", 0.1).map_err(ConfigError)?;
            let lip = exp.get_f64("lip", 0.4).map_err(ConfigError)?;
            let residuals = match dim {
                1 => {
                    let field = colombeau::apps::solve_wave_dalembert_1d(
                        move |u| lip * u,
                        |y, s| {
                            if s > 0.0 && y.abs() < 0.5 {
                                (1.0 - 2.0 * y.abs()).max(0.0)
                            } else {
                                0.0
                            }
                        },
                        BoundingBox::interval(-4.0, 4.0).unwrap(),
                        eta,
                        t_end,
                        nx,
                        nt,
                        20,
                        1e-10,
                    )
                    .map_err(|e| ConfigError(e.to_string()))?;
                    let mut csv = String::from("t,x,u\n");
                    for it in 0..field.nt {
                        let t = field.t0 + it as f64 * field.dt;
                        for ix in 0..field.nx {
                            let x = field.space.lo()[0]
                                + ix as f64 * field.space.side(0) / (field.nx - 1) as f64;
                            csv.push_str(&format!("{t},{x},{}\n", field.values[it * field.nx + ix]));
                        }
                    }
                    write(out_dir, &format!("{}.csv", exp.name), &csv, &mut files)
                        .map_err(ConfigError)?;
                    field.iteration_residuals
                }
                3 => {
                    let config = colombeau::apps::WaveConfig {
                        space: BoundingBox::centered(1.5, 3).unwrap(),
                        eta,
                        t_end,
                        nx,
                        nt,
                        max_iter: 14,
                        tol: 1e-9,
                        eps: 1.0,
                    };
                    let field = colombeau::apps::solve_wave_kirchhoff(
                        move |u| lip * u,
                        |p, s| {
                            let r2: f64 = p.iter().map(|v| v * v).sum::<f64>() / 0.16;
                            let su = (s - 0.1) / 0.15;
                            if r2 < 1.0 && su.abs() < 1.0 {
                                (-1.0 / (1.0 - r2)).exp() * (-1.0 / (1.0 - su * su)).exp()
                            } else {
                                0.0
                            }
                        },
                        &config,
                    )
                    .map_err(|e| ConfigError(e.to_string()))?;
                    write(out_dir, &format!("{}.csv", exp.name), &field.to_csv(), &mut files)
                        .map_err(ConfigError)?;
                    field.iteration_residuals
                }
                other => {
                    return Err(ConfigError(format!(
                        "wave dim must be 1 or 3, got {other}"
                    )))
                }
            };
            let mut csv = String::from("iteration,residual\n");
            for (i, r) in residuals.iter().enumerate() {
                csv.push_str(&format!("{i},{r}\n"));
            }
            write(out_dir, &format!("{}-residuals.csv", exp.name), &csv, &mut files)
                .map_err(ConfigError)?;
            let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
            (
                monotone,
                format!("{} iterations, residuals decreasing = {monotone}", residuals.len()),
            )
        }
    };
    let outcome = Outcome {
        name: exp.name.clone(),
        kind: exp.kind.name(),
        pass,
        detail,
        files,
    };
    let status = format!(
        "{},{},{},{}\n",
        outcome.name,
        outcome.kind,
        if outcome.pass { "pass" } else { "fail" },
        outcome.files.join(";")
    );
    fs::write(out_dir.join(format!("{}.status", outcome.name)), status)
        .map_err(|e| ConfigError(format!("writing status: {e}")))?;
    Ok(outcome)
}

/// Aggregate the status records of a results directory into one summary.
/// Returns (summary text, exit code).
pub fn report_directory(dir: &Path) -> (String, i32) {
    let mut rows: Vec<(String, String, bool, Vec<String>)> = Vec::new();
    let mut entries: Vec<_> = match fs::read_dir(dir) {
        Ok(read) => read.filter_map(|e| e.ok()).collect(),
        Err(e) => return (format!("cannot read {}: {e}\n", dir.display()), 1),
    };
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|s| s.to_str()) != Some("status") {
            continue;
        }
        let Ok(text) = fs::read_to_string(&path) else {
            continue;
        };
        for line in text.lines() {
            let parts: Vec<&str> = line.splitn(4, ',').collect();
            if parts.len() == 4 {
                rows.push((
                    parts[0].to_string(),
                    parts[1].to_string(),
                    parts[2] == "pass",
                    parts[3]
                        .split(';')
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect(),
                ));
            }
        }
    }
    let mut summary = String::from("name,kind,pass,missing_files\n");
    let mut exit = 0;
    if rows.is_empty() {
        return (summary, 1);
    }
    for (name, kind, pass, files) in &rows {
        let missing: Vec<String> = files
            .iter()
            .filter(|f| !dir.join(f).exists())
            .cloned()
            .collect();
        if !missing.is_empty() || !pass {
            exit = 1;
        }
        summary.push_str(&format!(
            "{name},{kind},{},{}\n",
            if *pass { "pass" } else { "fail" },
            missing.join(";")
        ));
    }
    (summary, exit)
}

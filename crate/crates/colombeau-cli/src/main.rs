//! Config-driven experiment runner: executes experiment sections from a
//! plain-text config, writes CSV/SVG artifacts and a machine-readable
//! summary. Exit codes: 0 all assertions passed, 1 an assertion failed,
//! 2 usage or config error.

mod config;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage:
  colombeau run <config> [--out <dir>] [--seed-battery <name>]
  colombeau fixtures [--out <dir>]
  colombeau report <dir>

config format: [experiment] sections of key = value lines; see README.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut positional = Vec::new();
    let mut out_dir: Option<PathBuf> = None;
    let mut seed_battery: Option<String> = None;
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => match it.next() {
                Some(v) => out_dir = Some(PathBuf::from(v)),
                None => return usage_error("--out requires a directory"),
            },
            "--seed-battery" => match it.next() {
                Some(v) => seed_battery = Some(v),
                None => return usage_error("--seed-battery requires a name"),
            },
            "--help" | "-h" => {
                println!("{USAGE}");
                return ExitCode::SUCCESS;
            }
            flag if flag.starts_with("--") => {
                return usage_error(&format!("unknown flag '{flag}'"))
            }
            _ => positional.push(arg),
        }
    }
    let Some(command) = positional.first() else {
        return usage_error("missing command");
    };
    match command.as_str() {
        "run" => {
            let Some(path) = positional.get(1) else {
                return usage_error("run requires a config path");
            };
            cmd_run(PathBuf::from(path), out_dir, seed_battery.as_deref())
        }
        "fixtures" => cmd_fixtures(out_dir),
        "report" => {
            let Some(dir) = positional.get(1) else {
                return usage_error("report requires a results directory");
            };
            cmd_report(PathBuf::from(dir))
        }
        other => usage_error(&format!("unknown command '{other}'")),
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n{USAGE}");
    ExitCode::from(2)
}

fn cmd_run(path: PathBuf, out_dir: Option<PathBuf>, seed_battery: Option<&str>) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let experiments = match config::parse(&text) {
        Ok(exps) => exps,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = out_dir.unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(2);
    }
    let mut summary = String::from("name,kind,pass,detail\n");
    let mut all_pass = true;
    for exp in &experiments {
        match run::run_experiment(exp, &out, seed_battery) {
            Ok(outcome) => {
                println!(
                    "{}: {} ({})",
                    outcome.name,
                    if outcome.pass { "pass" } else { "FAIL" },
                    outcome.detail
                );
                summary.push_str(&format!(
                    "{},{},{},{}\n",
                    outcome.name,
                    outcome.kind,
                    if outcome.pass { "pass" } else { "fail" },
                    outcome.detail.replace(',', ";")
                ));
                all_pass &= outcome.pass;
            }
            Err(run::ConfigError(msg)) => {
                eprintln!("error in experiment '{}': {msg}", exp.name);
                return ExitCode::from(2);
            }
        }
    }
    if let Err(e) = std::fs::write(out.join("run_summary.csv"), &summary) {
        eprintln!("error: cannot write summary: {e}");
        return ExitCode::from(2);
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_fixtures(out_dir: Option<PathBuf>) -> ExitCode {
    let text = "[experiment]\nkind = fixtures\nname = fixtures\n";
    let tmp = std::env::temp_dir().join(format!("fixtures-{}.cfg", std::process::id()));
    if std::fs::write(&tmp, text).is_err() {
        eprintln!("error: cannot stage the fixtures config");
        return ExitCode::from(2);
    }
    let code = cmd_run(tmp.clone(), out_dir, None);
    let _ = std::fs::remove_file(tmp);
    code
}

fn cmd_report(dir: PathBuf) -> ExitCode {
    let (summary, exit) = run::report_directory(&dir);
    let path = dir.join("report.csv");
    if std::fs::write(&path, &summary).is_err() {
        // the directory may not exist; still print what we know
        eprintln!("warning: could not write {}", path.display());
    }
    print!("{summary}");
    if exit == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

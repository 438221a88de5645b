mod commands;
mod config;
mod error;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use commands::Report;
use config::{Cli, ConfigFile, Format, Settings};
use error::{CliError, CHECK_FAILED};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("holochaos: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut file = match &cli.common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(e) = &file.experiment {
        if e != name {
            return Err(CliError::Config(format!(
                "config file is for experiment `{e}` but the subcommand is `{name}`"
            )));
        }
    }
    let settings = Settings::resolve(cli.common, &file);
    let command = cli.command.with_file(&mut file);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", settings.workers)))?;
    let report = pool.install(|| commands::run(command, &settings))?;

    let manifest = manifest(name, &settings, &report);
    write_outputs(&settings, &report, &manifest)?;

    if settings.check {
        let mut failed = false;
        for c in &report.checks {
            eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            failed |= !c.pass;
        }
        if failed {
            return Ok(ExitCode::from(CHECK_FAILED));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// SHA-256 of the canonical JSON of everything that determines the numbers.
/// The worker count is left out since it does not change any estimate.
fn config_hash(experiment: &str, seed: u64, parameters: &Json) -> String {
    let canonical = json!({ "experiment": experiment, "seed": seed, "parameters": parameters });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

fn manifest(experiment: &str, s: &Settings, report: &Report) -> Json {
    json!({
        "tool": "holochaos",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment,
        "seed": s.seed,
        "replicates": "replicate i of a grid point uses split(seed, i), i = 0..samples",
        "workers": s.workers,
        "parameters": report.parameters,
        "config_file": s.config.as_ref().map(|p| p.display().to_string()),
        "config_hash": config_hash(experiment, s.seed, &report.parameters),
        "checks": report.checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail })).collect::<Vec<_>>(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| output_error(path, e))
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_outputs(s: &Settings, report: &Report, manifest: &Json) -> Result<(), CliError> {
    let stdout = Path::new("<stdout>");
    match (&s.out, s.format) {
        (Some(out), Format::Csv) => {
            report.table.write_csv(create(out)?).map_err(|e| output_error(out, e))?;
            let mp = manifest_path(out);
            let mut w = create(&mp)?;
            serde_json::to_writer_pretty(&mut w, manifest).map_err(|e| output_error(&mp, e))?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| output_error(&mp, e))?;
        }
        (None, Format::Csv) => {
            report.table.write_csv(std::io::stdout().lock()).map_err(|e| output_error(stdout, e))?;
        }
        (out, Format::Json) => {
            let doc = report.table.to_json(manifest);
            let text = serde_json::to_string_pretty(&doc).expect("json values serialize");
            match out {
                Some(p) => {
                    let mut w = create(p)?;
                    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| output_error(p, e))?;
                }
                None => println!("{text}"),
            }
        }
    }
    if let Some(p) = &s.plot {
        let (x, y) = report.plot;
        let mut w = create(p)?;
        report.table.write_plot(&mut w, x, y).and_then(|_| w.flush()).map_err(|e| output_error(p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order_and_tracks_values() {
        let a = config_hash("moment", 1, &json!({ "N": [64], "q": [1.0] }));
        let b = config_hash("moment", 1, &json!({ "q": [1.0], "N": [64] }));
        let c = config_hash("moment", 2, &json!({ "N": [64], "q": [1.0] }));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("/tmp/x.csv")), PathBuf::from("/tmp/x.csv.manifest.json"));
    }
}

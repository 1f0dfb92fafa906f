//! Command-line front end: scan, forge, serve, lab and report.

pub mod args;
pub mod pipeline;
pub mod report;

use std::collections::BTreeSet;
use std::io::{Read, Write};

use coffeescan_core::detectors::{Detector, DetectorConfig, UnknownDetector};
use coffeescan_core::forge::{forge, parse_plant_counts, ForgeError, ForgeSpec, Obfuscation};
use coffeescan_core::pkg::PkgError;
use coffeescan_core::scan::ScanOptions;
use coffeescan_keyval::server::{bind, serve_until, MockState};
use coffeescan_keyval::{Flavor, KeyvalError, RatePolicy, SeedFile, ServerConfig};
use coffeescan_protolab::scenario::{run as run_scenario, Scenario, ScenarioError};
use thiserror::Error;

use crate::args::{Cli, Command, ForgeArgs, Format, LabArgs, ReportArgs, ScanArgs, ServeArgs};
use crate::pipeline::ValidateOptions;
use crate::report::ReportSet;

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Package {
        path: String,
        #[source]
        source: PkgError,
    },
    #[error(transparent)]
    Detector(#[from] UnknownDetector),
    #[error("--validate needs --endpoint or COFFEESCAN_ENDPOINT")]
    NoEndpoint,
    #[error(transparent)]
    Keyval(#[from] KeyvalError),
    #[error("{path}: report does not match the schema: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("detector config: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

/// Runs one command, writing results to `out`. Errors are reported on
/// `err` and turn into exit code 2.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match cli.command {
        Command::Scan(a) => cmd_scan(a, out),
        Command::Forge(a) => cmd_forge(a, out),
        Command::Serve(a) => cmd_serve(a, out),
        Command::Lab(a) => cmd_lab(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "coffeescan: {e}");
            EXIT_ERROR
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
}

pub fn scan_options(a: &ScanArgs) -> Result<ScanOptions, CliError> {
    let mut config = match &a.config {
        Some(p) => DetectorConfig::load(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => DetectorConfig::default(),
    };
    if a.baidu {
        let base = DetectorConfig::baidu();
        config.use_alt_secret_regex = base.use_alt_secret_regex;
        config.appid_pattern = base.appid_pattern;
    }
    let detectors = match &a.detectors {
        Some(list) => Some(
            list.iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<Detector>())
                .collect::<Result<BTreeSet<_>, _>>()?,
        ),
        None => None,
    };
    Ok(ScanOptions { config, detectors })
}

fn cmd_scan(a: ScanArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let opts = scan_options(&a)?;
    let inputs = pipeline::discover(&a.paths)?;
    let jobs = a.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut reports = pipeline::scan_all(&inputs, &opts, jobs)?;
    if a.validate {
        let endpoint = a.endpoint.clone().ok_or(CliError::NoEndpoint)?;
        let v = pipeline::validator(&ValidateOptions {
            endpoint,
            flavor: if a.baidu { Flavor::Baidu } else { Flavor::Wechat },
            policy: RatePolicy {
                max_requests: Some(a.rate_limit),
                max_concurrent: a.max_concurrent,
                ..RatePolicy::default()
            },
        })?;
        pipeline::validate_reports(&mut reports, v)?;
    }
    let set = ReportSet::new(reports);
    let text = match a.format {
        Format::Json => set.to_json() + "\n",
        Format::Text => set.render_text(),
    };
    write_out(out, &text)?;
    Ok(if set.finding_count() > 0 { EXIT_FINDINGS } else { EXIT_CLEAN })
}

fn cmd_forge(a: ForgeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let counts = a.plants.as_deref().map(parse_plant_counts).transpose()?;
    let levels = a
        .levels
        .iter()
        .map(|s| s.trim().parse::<Obfuscation>())
        .collect::<Result<Vec<_>, _>>()?;
    let spec = ForgeSpec {
        seed: a.seed,
        clean: a.clean,
        planted: a.planted,
        counts,
        levels,
        ..ForgeSpec::default()
    };
    let corpus = forge(&spec);
    corpus.write_to(&a.out)?;
    write_out(
        out,
        &format!(
            "wrote {} packages ({} plants) to {}\n",
            corpus.packages.len(),
            corpus.manifest.plant_count(),
            a.out.display()
        ),
    )?;
    Ok(EXIT_CLEAN)
}

fn cmd_serve(a: ServeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let seed = match &a.seed {
        Some(p) => SeedFile::load(p)?,
        None => SeedFile::default(),
    };
    let n = seed.registrations.len();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(async {
        let listener = bind(&a.addr).await?;
        let addr = listener.local_addr().map_err(|source| CliError::Io {
            path: a.addr.clone(),
            source,
        })?;
        write_out(out, &format!("coffeescan mock platform listening on http://{addr} ({n} registrations)\n"))?;
        let state = std::sync::Arc::new(MockState::new(ServerConfig::new(seed)));
        serve_until(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| CliError::Io {
            path: addr.to_string(),
            source,
        })?;
        write_out(out, "interrupted; connections drained\n")?;
        Ok(EXIT_CLEAN)
    })
}

fn cmd_lab(a: LabArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (name, text) = match &a.scenario {
        Some(p) => (
            p.display().to_string(),
            std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?,
        ),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|source| CliError::Io {
                path: "<stdin>".into(),
                source,
            })?;
            ("<stdin>".to_string(), s)
        }
    };
    let scenario = Scenario::from_json(&text).map_err(|e| match e {
        ScenarioError::Json(j) => CliError::Runtime(format!("{name}: {j}")),
        other => CliError::Scenario(other),
    })?;
    let t = run_scenario(&scenario);
    write_out(out, &t.jsonl())?;
    Ok(if t.matches(scenario.expect) { EXIT_CLEAN } else { EXIT_FINDINGS })
}

fn cmd_report(a: ReportArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let sets = a
        .files
        .iter()
        .map(|p| report::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let merged = report::merge(sets);
    let text = match a.format {
        Format::Json => merged.to_json() + "\n",
        Format::Text => merged.summary.render_text(),
    };
    write_out(out, &text)?;
    Ok(EXIT_CLEAN)
}

//! Input discovery, parallel scanning and candidate validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use coffeescan_core::detectors::Verdict;
use coffeescan_core::pkg::{Package, EXTENSION};
use coffeescan_core::scan::{scan_package, ScanOptions, ScanReport};
use coffeescan_keyval::{Flavor, RatePolicy, Validator};
use rayon::prelude::*;

use crate::CliError;

/// One package to scan, with the id used in reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Input {
    pub id: String,
    pub path: PathBuf,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .or_else(|| path.file_name())
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Expands each argument: a `.mapkg` file is one package; a directory
/// holding `.mapkg` files is a corpus; any other directory is one
/// unpacked package.
pub fn discover(paths: &[PathBuf]) -> Result<Vec<Input>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        let meta = std::fs::metadata(p).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        })?;
        if !meta.is_dir() {
            out.push(Input { id: stem(p), path: p.clone() });
            continue;
        }
        let rd = std::fs::read_dir(p).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        })?;
        let mut pkgs: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|q| q.is_file() && q.extension().is_some_and(|x| x == EXTENSION))
            .collect();
        if pkgs.is_empty() {
            out.push(Input { id: stem(p), path: p.clone() });
        } else {
            pkgs.sort();
            out.extend(pkgs.into_iter().map(|q| Input { id: stem(&q), path: q }));
        }
    }
    Ok(out)
}

/// Scans every input on a pool of `jobs` threads. Reports come back in
/// input order whatever the thread count.
pub fn scan_all(inputs: &[Input], opts: &ScanOptions, jobs: usize) -> Result<Vec<ScanReport>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| {
        inputs
            .par_iter()
            .map(|input| {
                let pkg = Package::load(&input.path).map_err(|source| CliError::Package {
                    path: input.path.display().to_string(),
                    source,
                })?;
                Ok(scan_package(&input.id, &pkg, opts))
            })
            .collect()
    })
}

pub struct ValidateOptions {
    pub endpoint: String,
    pub flavor: Flavor,
    pub policy: RatePolicy,
}

/// Distinct (package index, app id, candidate) triples in report order.
pub fn candidates(reports: &[ScanReport]) -> Vec<(usize, Option<String>, String)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        for f in &r.findings {
            if let Some(c) = &f.candidate_secret {
                if seen.insert((i, c.clone())) {
                    out.push((i, r.app_id.clone(), c.clone()));
                }
            }
        }
    }
    out
}

fn convert(v: coffeescan_keyval::Verdict) -> Verdict {
    match v {
        coffeescan_keyval::Verdict::Valid { access_token } => Verdict::Valid { access_token },
        coffeescan_keyval::Verdict::Invalid { errcode } => Verdict::Invalid { errcode },
        coffeescan_keyval::Verdict::Indeterminate { reason } => Verdict::Indeterminate { reason },
    }
}

/// Sends each distinct candidate of each package to the validator once
/// and annotates every finding that carries it.
pub fn validate_reports(reports: &mut [ScanReport], v: Arc<Validator>) -> Result<(), CliError> {
    let cands = candidates(reports);
    let (askable, missing): (Vec<_>, Vec<_>) = cands.into_iter().partition(|(_, app, _)| app.is_some());
    let pairs: Vec<(String, String)> = askable
        .iter()
        .map(|(_, app, c)| (app.clone().expect("partitioned"), c.clone()))
        .collect();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let verdicts = rt.block_on(v.validate_all(pairs));

    let mut by_key: BTreeMap<(usize, String), Verdict> = BTreeMap::new();
    for ((i, _, c), verdict) in askable.into_iter().zip(verdicts) {
        by_key.insert((i, c), convert(verdict));
    }
    for (i, _, c) in missing {
        by_key.insert(
            (i, c),
            Verdict::Indeterminate {
                reason: "package has no app id".into(),
            },
        );
    }
    for (i, r) in reports.iter_mut().enumerate() {
        for f in &mut r.findings {
            if let Some(c) = &f.candidate_secret {
                f.verdict = by_key.get(&(i, c.clone())).cloned();
            }
        }
        r.recount();
    }
    Ok(())
}

pub fn validator(opts: &ValidateOptions) -> Result<Arc<Validator>, CliError> {
    Ok(Arc::new(Validator::new(&opts.endpoint, opts.flavor, opts.policy)?))
}

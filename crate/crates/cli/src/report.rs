//! Turns a run directory's CSV ledgers into plot-ready series and tables.
//!
//! Output goes to `<dir>/report/`:
//!
//! * `avg_regret/<algorithm>.csv`: `t,avg_regret`, the seed-mean cumulative
//!   regret divided by `t`,
//! * `timing_ratio.csv`: per-seed median round time of MGD over FMGD,
//! * `summary.csv`: final regret per algorithm averaged over seeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use metaoco::ledger::{median, CSV_HEADER};

use crate::config::ExperimentConfig;
use crate::CliError;

/// One parsed ledger file.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerCsv {
    pub algorithm: String,
    pub cum_loss: Vec<f64>,
    pub cum_regret: Vec<f64>,
    pub avg_regret: Vec<f64>,
    pub wall_ms: Vec<f64>,
}

fn integrity(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Integrity(format!("{}: {msg}", path.display()))
}

/// Parses and validates a ledger written by the runner.
pub fn read_ledger(path: &Path) -> Result<LedgerCsv, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| integrity(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| integrity(path, e))?.iter().map(String::from).collect();
    if header.join(",") != CSV_HEADER {
        return Err(integrity(path, format!("unexpected header {:?}", header.join(","))));
    }
    let mut out = LedgerCsv {
        algorithm: String::new(),
        cum_loss: Vec::new(),
        cum_regret: Vec::new(),
        avg_regret: Vec::new(),
        wall_ms: Vec::new(),
    };
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| integrity(path, e))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i].parse::<f64>().map_err(|e| integrity(path, format!("row {}: column {i}: {e}", row + 1)))
        };
        let t: usize = rec[0].parse().map_err(|e| integrity(path, format!("row {}: t: {e}", row + 1)))?;
        if t != row + 1 {
            return Err(integrity(path, format!("row {} has t = {t}", row + 1)));
        }
        if row == 0 {
            out.algorithm = rec[1].to_string();
        } else if rec[1] != out.algorithm {
            return Err(integrity(path, format!("row {} switches algorithm to {}", row + 1, &rec[1])));
        }
        let (cum, avg) = (num(3)?, num(4)?);
        if (cum / t as f64 - avg).abs() > 1e-12 * (1.0 + avg.abs()) {
            return Err(integrity(path, format!("row {t}: avg_regret is not cum_regret/t")));
        }
        out.cum_loss.push(num(2)?);
        out.cum_regret.push(cum);
        out.avg_regret.push(avg);
        out.wall_ms.push(num(5)?);
    }
    if out.cum_regret.is_empty() {
        return Err(integrity(path, "ledger has no rows"));
    }
    Ok(out)
}

/// Seed directories (`seed-*`) in `dir`, or `dir` itself when it holds CSVs.
fn seed_dirs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| integrity(dir, e))?;
    let mut seeds = Vec::new();
    let mut has_csv = false;
    for entry in entries {
        let path = entry.map_err(|e| integrity(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if path.is_dir() && name.starts_with("seed-") {
            seeds.push(path);
        } else if path.extension().is_some_and(|e| e == "csv") {
            has_csv = true;
        }
    }
    seeds.sort();
    if seeds.is_empty() && has_csv {
        seeds.push(dir.to_path_buf());
    }
    Ok(seeds)
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| integrity(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub seed: String,
    pub mgd_median_ms: f64,
    pub fmgd_median_ms: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub dir: PathBuf,
    /// Seed-mean average-regret series per algorithm.
    pub series: BTreeMap<String, Vec<f64>>,
    pub timing: Vec<TimingRow>,
    /// Median of the per-seed ratios, when timing was recorded.
    pub timing_ratio: Option<f64>,
    pub k: Option<usize>,
}

fn write(path: &Path, text: String) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn report(dir: &Path) -> Result<Report, CliError> {
    if !dir.is_dir() {
        return Err(integrity(dir, "not a directory"));
    }
    let seeds = seed_dirs(dir)?;
    let mut ledgers: BTreeMap<String, Vec<LedgerCsv>> = BTreeMap::new();
    let mut timing = Vec::new();
    for seed_dir in &seeds {
        let mut mgd = None;
        let mut fmgd = None;
        for file in csv_files(seed_dir)? {
            let ledger = read_ledger(&file)?;
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            if stem != ledger.algorithm {
                return Err(integrity(&file, format!("file name does not match algorithm {}", ledger.algorithm)));
            }
            let med = median(&ledger.wall_ms).unwrap_or(0.0);
            if ledger.algorithm.starts_with("mgd-") {
                mgd = Some(med);
            } else if ledger.algorithm.starts_with("fmgd-") {
                fmgd = Some(med);
            }
            ledgers.entry(ledger.algorithm.clone()).or_default().push(ledger);
        }
        if let (Some(m), Some(f)) = (mgd, fmgd) {
            let seed = seed_dir.file_name().and_then(|n| n.to_str()).unwrap_or("").to_string();
            timing.push(TimingRow { seed, mgd_median_ms: m, fmgd_median_ms: f, ratio: m / f });
        }
    }
    if ledgers.is_empty() {
        return Err(integrity(dir, "no ledgers found"));
    }
    let k = match fs::read_to_string(dir.join("config.toml")) {
        Ok(text) => Some(ExperimentConfig::from_toml(&text)?.k()),
        Err(_) => None,
    };

    let out = dir.join("report");
    let mut series = BTreeMap::new();
    let mut table = String::from("algorithm,seeds,mean_final_regret,mean_final_avg_regret\n");
    for (alg, runs) in &ledgers {
        let n = runs[0].cum_regret.len();
        if runs.iter().any(|r| r.cum_regret.len() != n) {
            return Err(integrity(dir, format!("{alg}: seeds have different horizons")));
        }
        let m = runs.len() as f64;
        let avg: Vec<f64> = (0..n)
            .map(|t| runs.iter().map(|r| r.cum_regret[t]).sum::<f64>() / m / (t + 1) as f64)
            .collect();
        let mut text = String::from("t,avg_regret\n");
        for (t, v) in avg.iter().enumerate() {
            text += &format!("{},{v:.16e}\n", t + 1);
        }
        write(&out.join("avg_regret").join(format!("{alg}.csv")), text)?;
        let final_regret = runs.iter().map(|r| r.cum_regret[n - 1]).sum::<f64>() / m;
        table += &format!("{alg},{},{final_regret:.16e},{:.16e}\n", runs.len(), final_regret / n as f64);
        series.insert(alg.clone(), avg);
    }
    write(&out.join("summary.csv"), table)?;

    let valid: Vec<f64> = timing.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let timing_ratio = median(&valid);
    let k_text = k.map(|k| k.to_string()).unwrap_or_default();
    let mut text = String::from("seed,k,mgd_median_ms,fmgd_median_ms,ratio\n");
    for r in &timing {
        text += &format!("{},{k_text},{:.16e},{:.16e},{:.16e}\n", r.seed, r.mgd_median_ms, r.fmgd_median_ms, r.ratio);
    }
    if let Some(r) = timing_ratio {
        text += &format!("median,{k_text},,,{r:.16e}\n");
    }
    write(&out.join("timing_ratio.csv"), text)?;

    Ok(Report { dir: out, series, timing, timing_ratio, k })
}

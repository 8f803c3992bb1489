//! Experiment runs and their files.
//!
//! Every stage computes all of its outputs in memory first. Files are then
//! written to temporaries in the output directory and renamed into place, so a
//! failed or anomalous run leaves no partial output behind.

use crate::config::{Experiment, ExperimentConfig};
use crate::domination::{certify, dset_sweep, DominationCertificate, DominationOptions, DsetRow, SectionOptions};
use crate::error::{CocycleError, Result};
use crate::heisenberg::{self, HeisenbergModel, HeisenbergReport};
use crate::theta::{
    derivatives, sweep, DerivativeReport, IntervalOptions, SeriesOptions, SweepOptions, SweepResult, ThetaOptions,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn theta_options(c: &ExperimentConfig) -> ThetaOptions {
    ThetaOptions {
        n: c.orbit_length.0 as usize,
        samples: c.samples.0 as usize,
        seed: c.seed.0,
        tol: c.tolerances.u_theta.0,
        ..ThetaOptions::default()
    }
}

pub fn domination_options(c: &ExperimentConfig) -> DominationOptions {
    DominationOptions {
        seed: c.seed.0,
        gap_floor: c.tolerances.gap_floor.0,
        section: SectionOptions {
            tol: c.tolerances.section.0,
            ..SectionOptions::default()
        },
        sample_margin: if c.is_heisenberg() { heisenberg::SAMPLE_MARGIN } else { 0.0 },
        ..DominationOptions::default()
    }
}

pub fn series_options(c: &ExperimentConfig) -> SeriesOptions {
    SeriesOptions {
        n: c.orbit_length.0 as usize,
        samples: c.samples.0 as usize,
        seed: c.seed.0,
        k: c.truncation.map(|k| k.0 as usize),
    }
}

pub fn sweep_options(c: &ExperimentConfig) -> SweepOptions {
    SweepOptions {
        theta: theta_options(c),
        domination: domination_options(c),
        direct: true,
        mismatch_tol: c.tolerances.mismatch.0,
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let io = |e: csv::Error| CocycleError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CocycleError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CocycleError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    csv_bytes(
        &[
            "theta",
            "lambda_plus_formula",
            "lambda_plus_direct",
            "lambda_minus",
            "dominated",
            "residual",
            "ddlambda_estimate",
        ],
        result.rows.iter().map(|r| {
            vec![
                fmt_f64(r.theta),
                fmt_opt(r.lambda_plus_formula),
                fmt_opt(r.lambda_plus_direct),
                fmt_opt(r.lambda_minus),
                r.verdict.as_str().to_string(),
                fmt_opt(r.residual),
                fmt_opt(r.ddlambda_estimate),
            ]
        }),
    )
}

/// Two columns `theta, lambda_plus` from the direct estimator, defined on the whole grid.
pub fn plot_csv(result: &SweepResult) -> Result<Vec<u8>> {
    csv_bytes(
        &["theta", "lambda_plus"],
        result.rows.iter().filter_map(|r| {
            r.lambda_plus_direct
                .or(r.lambda_plus_formula)
                .map(|l| vec![fmt_f64(r.theta), fmt_f64(l)])
        }),
    )
}

pub fn dset_csv(rows: &[DsetRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["theta", "verdict", "l", "margin", "gap_rate"],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.theta),
                r.verdict.as_str().to_string(),
                r.l.map(|l| l.to_string()).unwrap_or_default(),
                fmt_f64(r.margin),
                fmt_f64(r.gap_rate),
            ]
        }),
    )
}

pub fn heisenberg_csv(report: &HeisenbergReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["theta", "verdict", "lambda_plus", "lambda_minus", "lambda_s", "in_interval"],
        report.rows.iter().map(|r| {
            vec![
                fmt_f64(r.theta),
                r.verdict.as_str().to_string(),
                fmt_opt(r.lambda_plus),
                fmt_opt(r.lambda_minus),
                fmt_f64(r.lambda_s),
                r.in_interval.to_string(),
            ]
        }),
    )
}

pub fn heisenberg_summary(report: &HeisenbergReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("unstable eigenvalue L      {:.12}\n", report.lam_u));
    s.push_str(&format!("log L                      {:.12}\n", report.log_lam_u));
    s.push_str(&format!("lambda^s (stable bundle)   {:.12}\n", report.lambda_s));
    s.push_str(&format!("lambda^+(0)                {:.12}\n", report.lambda_plus0));
    s.push_str(&format!("lambda^-(0)                {:.12}\n", report.lambda_minus0));
    s.push_str(&format!("d lambda^+/d theta (0)     {:.12}\n", report.dlambda0));
    s.push_str(&format!("d2 lambda^+/d theta2 (0)   {:.12}\n", report.ddlambda0));
    match report.interval {
        Some((lo, hi)) => {
            s.push_str(&format!("hyperbolicity interval     [{lo}, {hi}]\n"));
            if let Some(r) = report.rows.iter().rev().find(|r| r.in_interval && r.theta != 0.0) {
                s.push_str(&format!(
                    "  at theta = {}: lambda^+ = {:.12}, lambda^- = {:.12}\n",
                    r.theta,
                    r.lambda_plus.unwrap_or(f64::NAN),
                    r.lambda_minus.unwrap_or(f64::NAN)
                ));
            }
        }
        None => s.push_str("hyperbolicity interval     none found\n"),
    }
    for d in &report.diagnostics {
        s.push_str(&format!("note: {d}\n"));
    }
    s
}

/// Writes all files or none. Each file goes to a temporary name first.
pub fn write_atomically(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CocycleError::Io(format!("{}: {e}", dir.display())))?;
    let mut temps = Vec::new();
    let cleanup = |temps: &[PathBuf]| {
        for t in temps {
            let _ = std::fs::remove_file(t);
        }
    };
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            cleanup(&temps);
            let _ = std::fs::remove_file(&tmp);
            return Err(CocycleError::Io(format!("{}: {e}", tmp.display())));
        }
        temps.push(tmp);
    }
    let mut out = Vec::new();
    for ((name, _), tmp) in files.iter().zip(&temps) {
        let dest = dir.join(name);
        if let Err(e) = std::fs::rename(tmp, &dest) {
            cleanup(&temps);
            return Err(CocycleError::Io(format!("{}: {e}", dest.display())));
        }
        out.push(dest);
    }
    Ok(out)
}

fn check_anomalies(sweep: Option<&SweepResult>, derivs: Option<&DerivativeReport>) -> Result<()> {
    let mut found: Vec<String> = Vec::new();
    if let Some(s) = sweep {
        found.extend(s.anomalies().map(|(t, a)| format!("theta = {t}: {a}")));
    }
    if let Some(a) = derivs.and_then(|d| d.anomaly.as_ref()) {
        found.push(a.clone());
    }
    if found.is_empty() {
        Ok(())
    } else {
        Err(CocycleError::Anomaly(found.join("; ")))
    }
}

pub struct Outputs {
    pub sweep: Option<SweepResult>,
    pub derivatives: Option<DerivativeReport>,
    pub certificate: Option<DominationCertificate>,
    pub files: Vec<PathBuf>,
}

fn compute_sweep(exp: &Experiment) -> Result<SweepResult> {
    let c = &exp.config;
    log::info!("sweep over {} grid points", c.theta_grid.points().len());
    sweep(&exp.tri, &exp.base, &c.theta_grid.points(), &sweep_options(c))
}

fn compute_certificate(exp: &Experiment) -> Result<DominationCertificate> {
    certify(&exp.direct, &exp.base, &domination_options(&exp.config))
}

/// `sweep.csv`, `derivatives.json`, `certificate.json` and `plotdata.csv`.
pub fn run(config: &ExperimentConfig) -> Result<Outputs> {
    let exp = Experiment::new(config.clone())?;
    let s = compute_sweep(&exp)?;
    let d = derivatives(&exp.tri, &exp.base, &series_options(config))?;
    let cert = compute_certificate(&exp)?;
    check_anomalies(Some(&s), Some(&d))?;
    let files = write_atomically(
        &config.output_dir,
        &[
            ("sweep.csv", sweep_csv(&s)?),
            ("derivatives.json", json_bytes(&d)?),
            ("certificate.json", json_bytes(&cert)?),
            ("plotdata.csv", plot_csv(&s)?),
        ],
    )?;
    Ok(Outputs {
        sweep: Some(s),
        derivatives: Some(d),
        certificate: Some(cert),
        files,
    })
}

/// `sweep.csv` and `plotdata.csv`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Outputs> {
    let exp = Experiment::new(config.clone())?;
    let s = compute_sweep(&exp)?;
    check_anomalies(Some(&s), None)?;
    let files = write_atomically(
        &config.output_dir,
        &[("sweep.csv", sweep_csv(&s)?), ("plotdata.csv", plot_csv(&s)?)],
    )?;
    Ok(Outputs {
        sweep: Some(s),
        derivatives: None,
        certificate: None,
        files,
    })
}

/// `derivatives.json`.
pub fn run_derivatives(config: &ExperimentConfig) -> Result<Outputs> {
    let exp = Experiment::new(config.clone())?;
    let d = derivatives(&exp.tri, &exp.base, &series_options(config))?;
    check_anomalies(None, Some(&d))?;
    let files = write_atomically(&config.output_dir, &[("derivatives.json", json_bytes(&d)?)])?;
    Ok(Outputs {
        sweep: None,
        derivatives: Some(d),
        certificate: None,
        files,
    })
}

/// `certificate.json` for the unrotated cocycle and `dset.csv` over the grid.
///
/// Only needs the cocycle, so it also runs on cocycles without a dominated splitting.
pub fn run_dominate(config: &ExperimentConfig) -> Result<(Outputs, Vec<DsetRow>)> {
    config.validate()?;
    let base = config.build_base()?;
    let cocycle = match config.build_cocycle() {
        Some(c) => c,
        None => Experiment::new(config.clone())?.direct,
    };
    let opts = domination_options(config);
    let cert = certify(&cocycle, &base, &opts)?;
    let rows = dset_sweep(&cocycle, &base, &config.theta_grid.points(), &opts)?;
    let files = write_atomically(
        &config.output_dir,
        &[("certificate.json", json_bytes(&cert)?), ("dset.csv", dset_csv(&rows)?)],
    )?;
    Ok((
        Outputs {
            sweep: None,
            derivatives: None,
            certificate: Some(cert),
            files,
        },
        rows,
    ))
}

/// Grid, orbit length, samples and seed from `config`; the cocycle is always the Heisenberg one.
pub fn heisenberg_options(config: &ExperimentConfig) -> IntervalOptions {
    let mut opts = heisenberg::default_interval_options();
    opts.sweep.theta = theta_options(config);
    opts.sweep.domination = domination_options(config);
    opts.sweep.domination.sample_margin = heisenberg::SAMPLE_MARGIN;
    opts.series = series_options(config);
    opts
}

/// `heisenberg.csv` and `heisenberg_summary.txt`; returns the summary text.
pub fn run_heisenberg(config: &ExperimentConfig) -> Result<(HeisenbergReport, String, Vec<PathBuf>)> {
    config.validate()?;
    let model = HeisenbergModel::new();
    let report = heisenberg::corollary_main_report(&model, &config.theta_grid.points(), &heisenberg_options(config))?;
    if !(report.ddlambda0 < 0.0) {
        return Err(CocycleError::Anomaly(format!(
            "second derivative at 0 is {:e}",
            report.ddlambda0
        )));
    }
    let summary = heisenberg_summary(&report);
    let files = write_atomically(
        &config.output_dir,
        &[
            ("heisenberg.csv", heisenberg_csv(&report)?),
            ("heisenberg_summary.txt", summary.clone().into_bytes()),
        ],
    )?;
    Ok((report, summary, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -2.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn atomic_write_creates_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let files = write_atomically(&out, &[("a.txt", b"1".to_vec()), ("b.txt", b"2".to_vec())]).unwrap();
        assert_eq!(files.len(), 2);
        let names: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2);
        assert_eq!(std::fs::read(out.join("b.txt")).unwrap(), b"2");
    }

    #[test]
    fn dset_csv_layout() {
        let rows = vec![DsetRow {
            theta: 0.0,
            verdict: crate::domination::Verdict::Dominated,
            l: Some(1),
            margin: 0.25,
            gap_rate: 1.5,
        }];
        let text = String::from_utf8(dset_csv(&rows).unwrap()).unwrap();
        assert_eq!(
            text,
            "theta,verdict,l,margin,gap_rate\r\n0.0000000000000000e0,dominated,1,2.5000000000000000e-1,1.5000000000000000e0\r\n"
        );
    }
}

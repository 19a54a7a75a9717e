//! Experiment orchestration: maps each command to the verification
//! machinery, emits CSV artifacts plus a JSON summary, and reports an
//! overall pass flag (the process exit status).

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::coefficient::{SharpCoefficient, SmoothCoefficient};
use crate::config::{ConfigError, ExperimentConfig};
use crate::fields::{barrier_profile, BarrierVariant, Disk};
use crate::geometry::build_geometry;
use crate::output::{
    csv_path, fmt_bool, fmt_float, fmt_usize, read_csv, unix_timestamp, write_csv, write_json,
};
use crate::verify::{
    analytic_family_2d, analytic_family_3d, delta_sweep, identity_residuals_2d,
    identity_residuals_nd, radial_constancy_check, single_disk_oracle, sweep::sweep_row,
    ResidualReport, SweepParams, SweepRow, VerifyError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Sweep,
    Identities,
    Oracle,
    Barrier,
    Report,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::Sweep => "sweep",
            CommandKind::Identities => "identities",
            CommandKind::Oracle => "oracle",
            CommandKind::Barrier => "barrier",
            CommandKind::Report => "report",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Verify(VerifyError),
    Io(std::io::Error),
    Fields(crate::fields::FieldsError),
    Coefficient(crate::coefficient::CoefficientError),
    Geometry(crate::geometry::GeometryError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Verify(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io failure: {e}"),
            CliError::Fields(e) => write!(f, "{e}"),
            CliError::Coefficient(e) => write!(f, "{e}"),
            CliError::Geometry(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Verify(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<crate::fields::FieldsError> for CliError {
    fn from(e: crate::fields::FieldsError) -> Self {
        CliError::Fields(e)
    }
}

impl From<crate::coefficient::CoefficientError> for CliError {
    fn from(e: crate::coefficient::CoefficientError) -> Self {
        CliError::Coefficient(e)
    }
}

impl From<crate::geometry::GeometryError> for CliError {
    fn from(e: crate::geometry::GeometryError) -> Self {
        CliError::Geometry(e)
    }
}

/// What a command produced: the overall pass flag and the artifacts written.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub pass: bool,
    pub csv_paths: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

pub fn run_command(
    kind: CommandKind,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<CommandOutcome, CliError> {
    std::fs::create_dir_all(out_dir)?;
    match kind {
        CommandKind::Solve => run_solve(cfg, out_dir),
        CommandKind::Sweep => run_sweep(cfg, out_dir),
        CommandKind::Identities => run_identities(cfg, out_dir),
        CommandKind::Oracle => run_oracle(cfg, out_dir),
        CommandKind::Barrier => run_barrier(cfg, out_dir),
        CommandKind::Report => run_report(out_dir),
    }
}

const SWEEP_HEADER: [&str; 24] = [
    "delta",
    "h",
    "mode",
    "epsilon",
    "kappa_plus",
    "kappa_minus",
    "sup_grad_omega_mu",
    "sup_grad_s",
    "sup_grad_e",
    "ratio",
    "max_n_wplus",
    "alpha",
    "beta",
    "n_minus_m_max_e",
    "m_interior_max",
    "m_boundary_max",
    "m_margin",
    "m_range",
    "iterations",
    "relative_residual",
    "sup_abs_u",
    "max_principle_ok",
    "subharmonic_ok",
    "pass",
];

fn sweep_row_cells(row: &SweepRow) -> Vec<String> {
    let subharmonic_ok = row.m_margin <= 10.0 * row.h * row.m_range + 1e-14;
    let pass = row.max_principle_ok && subharmonic_ok;
    vec![
        fmt_float(row.delta),
        fmt_float(row.h),
        row.mode.to_string(),
        fmt_float(row.epsilon),
        fmt_float(row.kappa_plus),
        fmt_float(row.kappa_minus),
        fmt_float(row.sup_grad_omega_mu),
        fmt_float(row.sup_grad_s),
        fmt_float(row.sup_grad_e),
        fmt_float(row.ratio),
        fmt_float(row.max_n_wplus),
        fmt_float(row.alpha),
        fmt_float(row.beta),
        fmt_float(row.n_minus_m_max_e),
        fmt_float(row.m_interior_max),
        fmt_float(row.m_boundary_max),
        fmt_float(row.m_margin),
        fmt_float(row.m_range),
        fmt_usize(row.iterations),
        fmt_float(row.relative_residual),
        fmt_float(row.sup_abs_u),
        fmt_bool(row.max_principle_ok),
        fmt_bool(subharmonic_ok),
        fmt_bool(pass),
    ]
}

fn sweep_params_from<'a>(
    cfg: &'a ExperimentConfig,
    deltas: &'a [f64],
    h_levels: &'a [f64],
) -> Result<SweepParams<'a>, CliError> {
    Ok(SweepParams {
        deltas,
        kappa_plus: cfg.coefficient.kappa_plus,
        kappa_minus: cfg.coefficient.kappa_minus,
        phi: cfg.boundary_spec()?,
        h_levels,
        mode: cfg.sweep_mode()?,
        domain: cfg.domain(),
        mu: cfg.geometry.mu,
        k_exponent: cfg.fields.k_exponent,
        c_scale: cfg.fields.c_scale,
        tol: cfg.solver.tol,
        max_iter: if cfg.solver.max_iter > 0 {
            Some(cfg.solver.max_iter)
        } else {
            None
        },
    })
}

fn run_solve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let deltas = [cfg.geometry.delta];
    let h_levels = [cfg.solver.h];
    let params = sweep_params_from(cfg, &deltas, &h_levels)?;
    let row = sweep_row(&params, cfg.geometry.delta, cfg.solver.h)?;
    let cells = sweep_row_cells(&row);
    let pass = cells.last().map(|c| c == "true").unwrap_or(false);
    let path = csv_path(out_dir, "solve", unix_timestamp());
    write_csv(&path, &SWEEP_HEADER, &[cells])?;
    println!(
        "solve: delta={} h={} sup|grad u| over margin region = {:.6}, max principle {}",
        row.delta, row.h, row.sup_grad_omega_mu, row.max_principle_ok
    );
    Ok(CommandOutcome {
        pass,
        csv_paths: vec![path],
        summary: json!({
            "command": "solve",
            "sup_grad_omega_mu": row.sup_grad_omega_mu,
            "max_principle_ok": row.max_principle_ok,
            "pass": pass,
        }),
    })
}

fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let params = sweep_params_from(cfg, &cfg.geometry.deltas, &cfg.solver.h_levels)?;
    let table = delta_sweep(&params)?;
    let rows: Vec<Vec<String>> = table.rows.iter().map(sweep_row_cells).collect();
    let pass = rows
        .iter()
        .all(|r| r.last().map(|c| c == "true").unwrap_or(false));
    let path = csv_path(out_dir, "sweep", unix_timestamp());
    write_csv(&path, &SWEEP_HEADER, &rows)?;
    println!(
        "sweep: {} rows, max principle everywhere: {}",
        table.rows.len(),
        table.all_max_principle_ok()
    );
    Ok(CommandOutcome {
        pass,
        csv_paths: vec![path],
        summary: json!({
            "command": "sweep",
            "rows": table.rows.len(),
            "pass": pass,
        }),
    })
}

const IDENTITIES_HEADER: [&str; 7] = [
    "dimension",
    "p",
    "identity",
    "spacing",
    "linf_residual",
    "fitted_order",
    "pass",
];

fn identity_rows(
    dimension: usize,
    p: f64,
    report: &ResidualReport,
    min_order: f64,
    out: &mut Vec<Vec<String>>,
) -> bool {
    // An exact family must sit at the zero floor; a smooth one must
    // converge at the expected order.
    let pass = if p == 0.0 {
        report.max_residual() <= 1e-12
    } else {
        report.fitted_order.map(|o| o >= min_order).unwrap_or(false)
    };
    for (i, &h) in report.spacings.iter().enumerate() {
        out.push(vec![
            fmt_usize(dimension),
            fmt_float(p),
            report.identity.clone(),
            fmt_float(h),
            fmt_float(report.linf[i]),
            report.fitted_order.map(fmt_float).unwrap_or_default(),
            fmt_bool(pass),
        ]);
    }
    pass
}

fn run_identities(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let spacings = cfg.identity_spacings();
    let mut rows = Vec::new();
    let mut pass = true;
    for &p in &cfg.identities.p_2d {
        let fam = analytic_family_2d(p, 0.5, 2.0);
        for report in identity_residuals_2d(&fam, &spacings, cfg.identities.samples_2d) {
            pass &= identity_rows(2, p, &report, cfg.identities.min_order, &mut rows);
        }
    }
    for &p in &cfg.identities.p_3d {
        let fam = analytic_family_3d(p, 0.5, 2.0);
        for report in identity_residuals_nd(&fam, &spacings, cfg.identities.samples_3d) {
            pass &= identity_rows(3, p, &report, cfg.identities.min_order, &mut rows);
        }
    }
    let path = csv_path(out_dir, "identities", unix_timestamp());
    write_csv(&path, &IDENTITIES_HEADER, &rows)?;
    println!("identities: {} rows, pass: {pass}", rows.len());
    Ok(CommandOutcome {
        pass,
        csv_paths: vec![path],
        summary: json!({"command": "identities", "rows": rows.len(), "pass": pass}),
    })
}

const ORACLE_HEADER: [&str; 9] = [
    "check",
    "kappa",
    "h",
    "u_err",
    "grad_err_omega_mu",
    "deviation",
    "constant",
    "iterations",
    "pass",
];

fn run_oracle(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let mut rows = Vec::new();
    let mut pass = true;
    let ratio = cfg.oracle.max_error_ratio;
    // Error floor where the discretization error meets the solver tolerance;
    // contraction ratios below it are noise.
    let floor = 1e-8;
    for &kappa in &cfg.oracle.kappas {
        let report = single_disk_oracle(kappa, &cfg.oracle.h_levels, cfg.solver.tol)?;
        let mut prev: Option<f64> = None;
        for row in &report.rows {
            let ok = match prev {
                None => true,
                Some(p) => row.u_err <= ratio * p || row.u_err <= floor,
            };
            pass &= ok;
            prev = Some(row.u_err);
            rows.push(vec![
                "single_disk".to_string(),
                fmt_float(kappa),
                fmt_float(row.h),
                fmt_float(row.u_err),
                fmt_float(row.grad_err_omega_mu),
                String::new(),
                String::new(),
                fmt_usize(row.iterations),
                fmt_bool(ok),
            ]);
        }
    }
    for &kappa in &cfg.oracle.radial_kappas {
        let report = radial_constancy_check(kappa, &cfg.oracle.radial_h_levels, cfg.solver.tol)?;
        let mut prev: Option<f64> = None;
        for row in &report.rows {
            let ok = match prev {
                None => true,
                Some(p) => row.deviation <= 0.8 * p || row.deviation <= floor * row.constant.abs(),
            };
            pass &= ok;
            prev = Some(row.deviation);
            rows.push(vec![
                "radial_constancy".to_string(),
                fmt_float(kappa),
                fmt_float(row.h),
                String::new(),
                String::new(),
                fmt_float(row.deviation),
                fmt_float(row.constant),
                fmt_usize(row.iterations),
                fmt_bool(ok),
            ]);
        }
    }
    let path = csv_path(out_dir, "oracle", unix_timestamp());
    write_csv(&path, &ORACLE_HEADER, &rows)?;
    println!("oracle: {} rows, pass: {pass}", rows.len());
    Ok(CommandOutcome {
        pass,
        csv_paths: vec![path],
        summary: json!({"command": "oracle", "rows": rows.len(), "pass": pass}),
    })
}

const BARRIER_HEADER: [&str; 10] = [
    "disk",
    "kappa",
    "k_exponent",
    "variant",
    "index",
    "radius",
    "value",
    "slope",
    "coefficient",
    "pass",
];

fn run_barrier(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let geometry = build_geometry(cfg.geometry.delta, cfg.geometry.mu, cfg.domain())?;
    let sharp = SharpCoefficient::new(
        geometry,
        cfg.coefficient.kappa_plus,
        cfg.coefficient.kappa_minus,
    )?;
    let smooth = SmoothCoefficient::new(sharp, cfg.epsilon_absolute(), cfg.profile()?)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for (disk, name) in [(Disk::Plus, "plus"), (Disk::Minus, "minus")] {
        let profile = barrier_profile(&smooth, cfg.fields.k_exponent, disk)?;
        let bound = profile.value_bound();
        let variant = match profile.variant {
            BarrierVariant::PowerK => "power_k",
            BarrierVariant::PowerNegK => "power_neg_k",
        };
        // Endpoint exactness plus per-sample bounds and slope sign.
        pass &= *profile.values.last().unwrap() == 0.0;
        for i in 0..profile.radii.len() {
            let r = profile.radii[i];
            let v = profile.values[i];
            let s = profile.derivs[i];
            let a = smooth.radial_value(profile.kappa, r);
            let slope_cap = match profile.variant {
                BarrierVariant::PowerK => a.powf(profile.k_exponent),
                BarrierVariant::PowerNegK => a.powf(-profile.k_exponent),
            };
            let ok = v >= 0.0 && v <= bound + 1e-12 && s <= 0.0 && s.abs() <= slope_cap + 1e-12;
            pass &= ok;
            rows.push(vec![
                name.to_string(),
                fmt_float(profile.kappa),
                fmt_float(profile.k_exponent),
                variant.to_string(),
                fmt_usize(i),
                fmt_float(r),
                fmt_float(v),
                fmt_float(s),
                fmt_float(a),
                fmt_bool(ok),
            ]);
        }
    }
    let path = csv_path(out_dir, "barrier", unix_timestamp());
    write_csv(&path, &BARRIER_HEADER, &rows)?;
    println!("barrier: {} rows, pass: {pass}", rows.len());
    Ok(CommandOutcome {
        pass,
        csv_paths: vec![path],
        summary: json!({"command": "barrier", "rows": rows.len(), "pass": pass}),
    })
}

/// Merges every CSV in the output directory into one JSON summary document.
fn run_report(out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let mut files = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(out_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "csv").unwrap_or(false))
        .collect();
    entries.sort();
    let mut all_pass = true;
    for path in &entries {
        let (header, rows) = read_csv(path)?;
        let command = path
            .file_stem()
            .and_then(|s| s.to_str())
            .map(|s| s.split('-').next().unwrap_or(s).to_string())
            .unwrap_or_default();
        let pass_col = header.iter().position(|c| c == "pass");
        let (passes, failures) = match pass_col {
            Some(i) => {
                let p = rows
                    .iter()
                    .filter(|r| r.get(i).map(|c| c == "true").unwrap_or(false))
                    .count();
                (p, rows.len() - p)
            }
            None => (0, 0),
        };
        if pass_col.is_some() && failures > 0 {
            all_pass = false;
        }
        files.push(json!({
            "file": path.file_name().and_then(|s| s.to_str()).unwrap_or(""),
            "command": command,
            "rows": rows.len(),
            "passes": passes,
            "failures": failures,
        }));
    }
    let summary = json!({
        "files": files,
        "all_pass": all_pass,
    });
    write_json(&out_dir.join("summary.json"), &summary)?;
    println!(
        "report: {} csv files merged, all_pass: {all_pass}",
        entries.len()
    );
    Ok(CommandOutcome {
        pass: all_pass,
        csv_paths: Vec::new(),
        summary,
    })
}

/// Machine-readable failure record written next to the artifacts.
pub fn write_failure_record(out_dir: &Path, command: &str, error: &CliError) {
    let record = json!({
        "command": command,
        "error": error.to_string(),
    });
    let _ = std::fs::create_dir_all(out_dir);
    let _ = write_json(&out_dir.join("failure.json"), &record);
}

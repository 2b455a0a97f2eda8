//! One function per subcommand. Each returns the JSON result body and the
//! list of acceptance checks; files are written into the output directory.

use crate::options::{resolve_basis, resolve_law, ConfigError, Opts};
use comwalk::diagnostics::{
    region_integrals, stable_region_integrals, write_region_csv, write_stable_csv, DEFAULT_A, DEFAULT_DELTA,
};
use comwalk::exact::{exact_gn_pmf_with_budget, exact_states, lclt_error_of, write_lclt_csv, DEFAULT_BUDGET};
use comwalk::increments::LatticeLaw;
use comwalk::lattice::{check_minimality, det_bound, verify_support, LatticeBasis, DEFAULT_RHO};
use comwalk::limits::GaussianLimit;
use comwalk::montecarlo::{
    clt_check, escape_exponent, mc_cell_frequencies, recurrence_stats, write_escape_csv, CellSpec, SimConfig,
};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

/// Outcome of one acceptance check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Resolved parameters, result body and checks of one command.
pub struct Outcome {
    pub config: Map<String, Value>,
    pub result: Value,
    pub checks: Vec<Check>,
}

const DEFAULT_ALPHA: f64 = 0.5;
const DEFAULT_SEED: u64 = 7;

struct Setup {
    law: LatticeLaw,
    law_spec: String,
    config: Map<String, Value>,
}

fn setup(opts: &Opts, default_law: &str) -> Result<Setup, ConfigError> {
    let law_spec = opts.law_spec(default_law);
    let law = resolve_law(&law_spec, opts.alpha.unwrap_or(DEFAULT_ALPHA))?;
    let mut config = Map::new();
    config.insert("law_spec".into(), json!(law_spec));
    config.insert("law".into(), serde_json::from_str(&law.to_json()?)?);
    Ok(Setup { law, law_spec, config })
}

fn with_basis(s: &mut Setup, opts: &Opts) -> Result<LatticeBasis, ConfigError> {
    let basis = resolve_basis(opts.basis.as_deref(), &s.law)?;
    s.config.insert("basis_spec".into(), json!(opts.basis.clone().unwrap_or_else(|| "default".into())));
    s.config.insert("basis".into(), serde_json::from_str(&basis.to_json()?)?);
    Ok(basis)
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, ConfigError> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn count(v: u64, what: &str) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| ConfigError(format!("{what} = {v} is too large")))
}

pub fn lattice_verify(opts: &Opts) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "ssrw1")?;
    let basis = with_basis(&mut s, opts)?;
    let rho = opts.rho.unwrap_or(DEFAULT_RHO);
    let grid = opts.grid.unwrap_or(rho / 16.0);
    s.config.insert("rho".into(), json!(rho));
    s.config.insert("grid".into(), json!(grid));
    let support = verify_support(&s.law, &basis);
    let det = if s.law.is_finite() { Some(det_bound(&s.law)?) } else { None };
    let report = check_minimality(&s.law, &basis, rho, grid)?;
    let h = basis.h();
    let checks = vec![
        Check::new("support", support, format!("law {} on the basis lattice: {support}", s.law_spec)),
        Check::new(
            "minimal",
            report.candidate_violations.is_empty(),
            match report.candidate_violations.first() {
                None => format!("no violations, c_rho = {:.6}", report.c_rho),
                Some(t) => format!("{} violations, first at {t:?}", report.candidate_violations.len()),
            },
        ),
        Check::new(
            "det_bound",
            det.is_none_or(|d| d + 1e-9 >= h),
            match det {
                Some(d) => format!("det bound {d} vs h = {h}"),
                None => "not applicable to infinite support".into(),
            },
        ),
    ];
    Ok(Outcome {
        config: s.config,
        result: json!({ "h": h, "det_bound": det, "minimality": report }),
        checks,
    })
}

pub fn lclt(opts: &Opts, out: &Path) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "ssrw1")?;
    let basis = with_basis(&mut s, opts)?;
    let ns = opts.horizons(&[8, 32, 128, 512])?;
    let budget = opts.budget.map_or(DEFAULT_BUDGET, u128::from);
    s.config.insert("n".into(), json!(ns));
    s.config.insert("budget".into(), json!(budget as u64));
    let last = *ns.last().expect("non-empty");
    let states = exact_states(&s.law, last);
    if states > budget {
        return Err(ConfigError(format!(
            "exact engine at n = {last} needs {states} cells, budget is {budget}"
        )));
    }
    let limit = GaussianLimit::from_moments(&s.law.moments()?)?;
    let mut reports = Vec::with_capacity(ns.len());
    for &n in &ns {
        let start = Instant::now();
        let pmf = exact_gn_pmf_with_budget(&s.law, &basis, n, budget)?;
        let mut r = lclt_error_of(&pmf, &limit, basis.h())?;
        r.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        reports.push(r);
    }
    write_lclt_csv(&reports, create(out, "lclt.csv")?)?;
    let e: Vec<f64> = reports.iter().map(|r| r.sup_error).collect();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "n": r.n, "E_n": r.sup_error, "argmax_x": r.argmax, "sup_error_ball": r.sup_error_ball, "guard": r.guard }))
        .collect();
    Ok(Outcome {
        config: s.config,
        result: json!({ "rows": rows }),
        checks: vec![Check::new("decreasing", decreasing, format!("E_n = {e:?}"))],
    })
}

pub fn slclt(opts: &Opts, out: &Path) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "stable")?;
    let basis = with_basis(&mut s, opts)?;
    let ns = opts.horizons(&[16, 64, 256])?;
    let samples = opts.samples.unwrap_or(1_000_000);
    let window = opts.window.unwrap_or(1.0);
    let cell_width = opts.cell_width.unwrap_or(0.05);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let min_hits = 100;
    for (k, v) in [
        ("n", json!(ns)),
        ("samples", json!(samples)),
        ("window", json!(window)),
        ("cell_width", json!(cell_width)),
        ("seed", json!(seed)),
        ("min_hits", json!(min_hits)),
    ] {
        s.config.insert(k.into(), v);
    }
    let mut reports = Vec::with_capacity(ns.len());
    for &n in &ns {
        let spec = CellSpec {
            n,
            samples,
            window,
            cell_width,
            seed,
            min_hits,
        };
        reports.push(mc_cell_frequencies(&s.law, &basis, &spec)?);
    }
    let mut w = csv::Writer::from_writer(create(out, "slclt.csv")?);
    w.write_record(["n", "x", "hits", "empirical", "target", "std_error"])
        .map_err(ConfigError::from)?;
    for r in &reports {
        for c in &r.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:.17e}", c.x),
                c.hits.to_string(),
                format!("{:.17e}", c.empirical),
                format!("{:.17e}", c.target),
                format!("{:.17e}", c.std_error),
            ])
            .map_err(ConfigError::from)?;
        }
    }
    w.flush()?;
    let errs: Vec<f64> = reports.iter().map(|r| r.max_error).collect();
    let last = reports.last().expect("non-empty");
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "n": r.n, "max_error": r.max_error, "std_error_at_max": r.std_error_at_max,
                "x_at_max": r.x_at_max, "max_z": r.max_z, "points_per_cell": r.points_per_cell,
                "window_mass": r.window_mass, "symmetry_z": r.symmetry_z,
            })
        })
        .collect();
    Ok(Outcome {
        config: s.config,
        result: json!({ "rows": summary }),
        checks: vec![
            Check::new("nonincreasing", errs.windows(2).all(|w| w[1] <= w[0]), format!("max errors {errs:?}")),
            Check::new(
                "within_3_se",
                last.max_error <= 3.0 * last.std_error_at_max,
                format!(
                    "n = {}: error {:.4e} vs 3 x SE = {:.4e}",
                    last.n,
                    last.max_error,
                    3.0 * last.std_error_at_max
                ),
            ),
        ],
    })
}

fn sim_config(
    s: &mut Setup,
    opts: &Opts,
    steps: u64,
    runs: u64,
) -> Result<SimConfig, ConfigError> {
    let steps = opts.steps.unwrap_or(steps);
    let runs = opts.runs.unwrap_or(runs);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let mut cfg = SimConfig::new(steps, count(runs, "runs")?, seed);
    if let Some(b) = opts.burn_in {
        cfg.burn_in = b;
    }
    s.config.insert("steps".into(), json!(steps));
    s.config.insert("runs".into(), json!(runs));
    s.config.insert("seed".into(), json!(seed));
    s.config.insert("burn_in".into(), json!(cfg.burn_in));
    Ok(cfg)
}

pub fn escape(opts: &Opts, out: &Path) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "lazy2")?;
    let cfg = sim_config(&mut s, opts, 1_000_000, 200)?;
    let report = escape_exponent(&s.law, &cfg)?;
    s.config.insert("ball".into(), serde_json::to_value(report.ball)?);
    write_escape_csv(&report, create(out, "escape.csv")?)?;
    let m = report.final_median;
    Ok(Outcome {
        config: s.config,
        checks: vec![
            Check::new("median_exponent", (0.42..=0.58).contains(&m), format!("median {m:.5} vs [0.42, 0.58]")),
            Check::new(
                "reentry",
                report.reentry_fraction <= 0.05,
                format!("{} of {} runs re-enter the ball", report.runs_reentering, report.runs),
            ),
        ],
        result: serde_json::to_value(&report)?,
    })
}

pub fn recur(opts: &Opts, out: &Path) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "ssrw1")?;
    let mut cfg = sim_config(&mut s, opts, 100_000, 100)?;
    if opts.burn_in.is_none() {
        cfg.burn_in = 1000.min(cfg.n_steps);
    }
    let report = recurrence_stats(&s.law, &cfg)?;
    s.config.insert("targets".into(), json!(report.targets));
    let mut w = csv::Writer::from_writer(create(out, "recur.csv")?);
    w.write_record(["run", "sign_changes", "target", "min_distance"])
        .map_err(ConfigError::from)?;
    for run in 0..report.runs {
        for (k, t) in report.targets.iter().enumerate() {
            w.write_record([
                run.to_string(),
                report.sign_changes[run].to_string(),
                t.to_string(),
                format!("{:.17e}", report.minima[k][run]),
            ])
            .map_err(ConfigError::from)?;
        }
    }
    w.flush()?;
    let mut checks = vec![Check::new(
        "sign_changes",
        report.runs_with_sign_change == report.runs,
        format!("{} of {} runs change sign", report.runs_with_sign_change, report.runs),
    )];
    for (t, m) in report.targets.iter().zip(&report.median_minima).take(2) {
        checks.push(Check::new(
            &format!("proximity_{t}"),
            *m < report.threshold,
            format!("median min |G_n - {t}| = {m:.4e} vs {}", report.threshold),
        ));
    }
    Ok(Outcome {
        config: s.config,
        result: json!({
            "runs": report.runs,
            "runs_with_sign_change": report.runs_with_sign_change,
            "targets": report.targets,
            "median_minima": report.median_minima,
            "fraction_close": report.fraction_close,
            "threshold": report.threshold,
        }),
        checks,
    })
}

pub fn clt(opts: &Opts) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "ssrw1")?;
    let n = match &opts.n {
        Some(v) if v.len() == 1 => v[0],
        Some(_) => return Err(ConfigError("clt takes a single horizon --n".into())),
        None => opts.steps.unwrap_or(10_000),
    };
    let runs = opts.runs.unwrap_or(10_000);
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let cfg = SimConfig::new(n, count(runs, "runs")?, seed);
    s.config.insert("n".into(), json!(n));
    s.config.insert("runs".into(), json!(runs));
    s.config.insert("seed".into(), json!(seed));
    let report = clt_check(&s.law, &cfg)?;
    let d = s.law.dim();
    let ratios: Vec<f64> = (0..d)
        .map(|i| report.sample_covariance[i][i] / report.limit_covariance[i][i])
        .collect();
    let tol = if d == 1 { 0.05 } else { 0.10 };
    let checks = vec![
        Check::new(
            "variance_ratio",
            ratios.iter().all(|r| (r - 1.0).abs() <= tol),
            format!("sample / limit variance {ratios:?}, tolerance {tol}"),
        ),
        Check::new("ks", report.ks_distance < 0.02, format!("KS distance {:.5} vs 0.02", report.ks_distance)),
    ];
    let mut result = serde_json::to_value(&report)?;
    result["variance_ratio"] = json!(ratios);
    Ok(Outcome {
        config: s.config,
        result,
        checks,
    })
}

pub fn diag(opts: &Opts, out: &Path) -> Result<Outcome, ConfigError> {
    let mut s = setup(opts, "ssrw1")?;
    let a = opts.a.unwrap_or(DEFAULT_A);
    let delta = opts.delta.unwrap_or(DEFAULT_DELTA);
    s.config.insert("A".into(), json!(a));
    s.config.insert("delta".into(), json!(delta));
    if s.law.tail().is_some() {
        let ns = opts.horizons(&[64, 256, 1024])?;
        s.config.insert("n".into(), json!(ns));
        let rows = ns
            .iter()
            .map(|&n| stable_region_integrals(&s.law, n, a, delta))
            .collect::<Result<Vec<_>, _>>()?;
        write_stable_csv(&rows, create(out, "diag_stable.csv")?)?;
        let j1: Vec<f64> = rows.iter().map(|r| r.j1.value).collect();
        return Ok(Outcome {
            config: s.config,
            result: json!({ "rows": rows }),
            checks: vec![Check::new("decreasing", j1.windows(2).all(|w| w[1] < w[0]), format!("J1 = {j1:?}"))],
        });
    }
    let basis = with_basis(&mut s, opts)?;
    let ns = opts.horizons(&[8, 16, 32, 64])?;
    s.config.insert("n".into(), json!(ns));
    let rows = ns
        .iter()
        .map(|&n| region_integrals(&s.law, &basis, n, a, delta))
        .collect::<Result<Vec<_>, _>>()?;
    write_region_csv(&rows, create(out, "diag.csv")?)?;
    let i1: Vec<f64> = rows.iter().map(|r| r.i1.value).collect();
    Ok(Outcome {
        config: s.config,
        result: json!({ "rows": rows }),
        checks: vec![Check::new("decreasing", i1.windows(2).all(|w| w[1] < w[0]), format!("I1 = {i1:?}"))],
    })
}

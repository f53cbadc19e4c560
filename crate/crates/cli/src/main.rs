use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use polyharm::criticality::{self, ScanOptions};
use polyharm::ellipsoid::{self, EllipsoidConfig};
use polyharm::energy::Variant;
use polyharm::stability::{self, StabilityRecord};
use polyharm::warped;
use polyharm::{Bump, TanhSinh, WarpFn};

#[derive(Parser)]
#[command(name = "polyharm", version, about = "Critical angles, stability and rigidity checks for polyharmonic maps")]
struct Cli {
    /// Flat TOML file presetting tolerances and grid sizes; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit a flat CSV table instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan dimensions for constant-profile critical angles.
    Critical(CriticalArgs),
    /// Second variations along destabilizing directions.
    Stability(StabilityArgs),
    /// Existence windows and critical angles for ellipsoid targets.
    Ellipsoid(EllipsoidArgs),
    /// Pole angles, ODE shooting and series checks for warped domains.
    Warped(WarpedArgs),
    /// Integrability constraints for constant profiles.
    Sobolev(SobolevArgs),
    /// The conjectured closed-form angle at n = 2r+1.
    Conjecture(ConjectureArgs),
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long)]
    r: u32,
    #[arg(long, default_value = "std")]
    variant: Variant,
    #[arg(long)]
    n_min: u32,
    #[arg(long)]
    n_max: u32,
    /// Tolerance for agreement with the closed-form references.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct StabilityArgs {
    /// all, or one of the named cases (r3-n7, r4-n9-std, ...).
    #[arg(long, conflicts_with_all = ["r", "n", "a", "bump"])]
    case: Option<String>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    a: Option<f64>,
    /// e.g. `rho^1*(1-rho)^4` or `2*rho^0*(1-rho)^3`.
    #[arg(long)]
    bump: Option<Bump>,
    #[arg(long, default_value = "std")]
    variant: Variant,
}

#[derive(Args)]
struct EllipsoidArgs {
    #[arg(long)]
    order: u32,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Only report the window predicate.
    #[arg(long, conflicts_with = "grid")]
    window: bool,
    /// Tabulate the window predicate against root existence for n..=n_max.
    #[arg(long, requires = "n_max")]
    grid: bool,
    #[arg(long)]
    n_max: Option<u32>,
}

#[derive(Args)]
struct WarpedArgs {
    #[arg(long, default_value_t = 2)]
    order: u32,
    #[arg(long)]
    n: Option<u32>,
    /// Shoot the biharmonic ODE from near the pole (n = 5, 6).
    #[arg(long, requires = "n")]
    ode: bool,
    #[arg(long, default_value_t = 1e-6)]
    rho0: f64,
    #[arg(long, default_value_t = 1e-12)]
    ode_tol: f64,
    /// Include every accepted step in the ODE record.
    #[arg(long, requires = "ode")]
    trajectory: bool,
    /// Exact sign check of the series induction coefficients q(1..=max).
    #[arg(long, conflicts_with = "ode")]
    series: bool,
    #[arg(long, default_value_t = 1_000_000)]
    max: i64,
    /// Expand the n = 7 residual at the pole for a series warping function.
    #[arg(long, conflicts_with_all = ["ode", "series"])]
    pole_series: Option<WarpFn>,
    #[arg(long, default_value_t = 8)]
    terms: usize,
}

#[derive(Args)]
struct SobolevArgs {
    #[arg(long)]
    r: u32,
    #[arg(long)]
    n: u32,
    /// Tabulate n..=n_max.
    #[arg(long)]
    n_max: Option<u32>,
}

#[derive(Args)]
struct ConjectureArgs {
    #[arg(long)]
    r: u32,
    /// Also run the weak-form scan at n = 2r+1.
    #[arg(long)]
    verify: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    grid: Option<usize>,
    lo: Option<f64>,
    hi: Option<f64>,
    xtol: Option<f64>,
    agree_tol: Option<f64>,
    residual_tol: Option<f64>,
    reference_tol: Option<f64>,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    max_level: Option<u32>,
    min_level: Option<u32>,
}

impl Config {
    fn load(path: Option<&PathBuf>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", path.display())).into())
    }

    fn quadrature(&self) -> TanhSinh {
        let d = TanhSinh::default();
        TanhSinh {
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            max_level: self.max_level.unwrap_or(d.max_level),
            min_level: self.min_level.unwrap_or(d.min_level),
        }
    }

    fn scan(&self) -> ScanOptions {
        let d = ScanOptions::default();
        ScanOptions {
            grid: self.grid.unwrap_or(d.grid),
            lo: self.lo.unwrap_or(d.lo),
            hi: self.hi.unwrap_or(d.hi),
            xtol: self.xtol.unwrap_or(d.xtol),
            agree_tol: self.agree_tol.unwrap_or(d.agree_tol),
            residual_tol: self.residual_tol.unwrap_or(d.residual_tol),
            quad: self.quadrature(),
        }
    }
}

/// Invalid combination of flags; exits with the usage code.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Serialize)]
struct RunReport {
    command: String,
    argv: Vec<String>,
    parameters: Value,
    tolerances: Value,
    records: Value,
    wall_time_s: f64,
}

struct Outcome {
    parameters: Value,
    tolerances: Value,
    records: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn cell<T: ToString>(x: T) -> String {
    x.to_string()
}

fn opt_cell<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn critical(args: &CriticalArgs, config: &Config) -> anyhow::Result<Outcome> {
    let mut opts = config.scan();
    if let Some(g) = args.grid {
        opts.grid = g;
    }
    let tol = args.tol.or(config.reference_tol).unwrap_or(1e-8);
    let scans = criticality::dimension_scan(args.r, args.variant, args.n_min, args.n_max, &opts)?;
    let mut rows = Vec::new();
    let records: Vec<Value> = scans
        .iter()
        .map(|s| {
            let roots: Vec<Value> = s
                .roots
                .iter()
                .map(|c| {
                    let worst = c.references.iter().map(|m| m.deviation).fold(0.0, f64::max);
                    let residual = c.first_variation_residuals.iter().map(|b| b.value.abs()).fold(0.0, f64::max);
                    rows.push(vec![
                        c.case.clone(),
                        cell(s.r),
                        cell(s.variant),
                        cell(s.n),
                        format!("{:.17e}", c.a),
                        format!("{residual:e}"),
                        format!("{worst:e}"),
                        cell(c.references.iter().all(|m| m.deviation <= tol)),
                    ]);
                    json!({
                        "record": c,
                        "reference_tolerance": tol,
                        "references_ok": c.references.iter().all(|m| m.deviation <= tol),
                    })
                })
                .collect();
            if s.roots.is_empty() {
                rows.push(vec![String::new(), cell(s.r), cell(s.variant), cell(s.n), String::new(), String::new(), String::new(), String::new()]);
            }
            json!({ "r": s.r, "variant": s.variant, "n": s.n, "sobolev_ok": s.sobolev_ok, "grid_points": s.grid_points, "roots": roots })
        })
        .collect();
    Ok(Outcome {
        parameters: json!({ "r": args.r, "variant": args.variant, "n_min": args.n_min, "n_max": args.n_max }),
        tolerances: json!({ "scan": opts, "reference_tol": tol }),
        records: Value::Array(records),
        header: vec![
            "case",
            "r",
            "variant",
            "n",
            "a",
            "max_first_variation",
            "max_reference_deviation",
            "references_ok",
        ],
        rows,
    })
}

fn stability_rows(records: &[StabilityRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.case.clone(),
                cell(r.r),
                cell(r.variant),
                cell(r.n),
                format!("{:.17e}", r.a),
                r.bump.clone(),
                format!("{:e}", r.first_variation),
                format!("{:.17e}", r.second_variation),
                format!("{:e}", r.second_variation_error),
                opt_cell(r.reference.map(|x| format!("{x:.17e}"))),
                opt_cell(r.relative_deviation.map(|x| format!("{x:e}"))),
                cell(serde_json::to_value(r.verdict).expect("verdict serializes").as_str().unwrap_or_default()),
            ]
        })
        .collect()
}

fn stability(args: &StabilityArgs, config: &Config) -> anyhow::Result<Outcome> {
    let quad = config.quadrature();
    let (parameters, calibration, records) = match &args.case {
        Some(id) => {
            let suite = if id == "all" {
                stability::reference_stability_suite(&quad)?
            } else {
                stability::run_cases(&[*stability::case_by_id(id)?], &quad)?
            };
            (
                json!({ "case": id, "calibration_case": suite.calibration_case }),
                suite.calibration_constant,
                suite.records,
            )
        }
        None => {
            let (Some(r), Some(n), Some(a), Some(bump)) = (args.r, args.n, args.a, args.bump) else {
                bail!(Usage("give --case, or all of --r --n --a --bump".into()));
            };
            let calibration = stability::calibration_constant(&quad)?;
            let record = stability::generic_record(r, args.variant, n, a, &bump, calibration, &quad)?;
            (
                json!({ "r": r, "n": n, "a": a, "bump": bump.to_string(), "variant": args.variant, "calibration_case": stability::CASES[0].id }),
                calibration,
                vec![record],
            )
        }
    };
    let mut parameters = parameters;
    parameters["calibration_constant"] = json!(calibration);
    Ok(Outcome {
        parameters,
        tolerances: json!({ "quadrature": quad, "first_variation_gate": stability::FIRST_VARIATION_GATE }),
        rows: stability_rows(&records),
        records: serde_json::to_value(&records)?,
        header: vec![
            "case",
            "r",
            "variant",
            "n",
            "a",
            "bump",
            "first_variation",
            "second_variation",
            "second_variation_error",
            "reference",
            "relative_deviation",
            "verdict",
        ],
    })
}

fn ellipsoid_cmd(args: &EllipsoidArgs, config: &Config) -> anyhow::Result<Outcome> {
    let quad = config.quadrature();
    if args.grid {
        let n_max = args.n_max.expect("clap enforces --n-max");
        let grid = ellipsoid::window_grid(args.order, args.n, n_max)?;
        let rows = grid
            .iter()
            .map(|s| vec![cell(s.order), cell(s.n), cell(s.b2), cell(s.inside), cell(s.has_root), cell(s.consistent())])
            .collect();
        return Ok(Outcome {
            parameters: json!({ "order": args.order, "n_min": args.n, "n_max": n_max }),
            tolerances: json!({}),
            records: json!({ "samples": grid, "all_consistent": grid.iter().all(|s| s.consistent()) }),
            header: vec!["order", "n", "b2", "inside", "has_root", "consistent"],
            rows,
        });
    }
    let report = ellipsoid::window(args.order, args.n, args.b)?;
    let mut rows = vec![vec![
        "window".to_string(),
        cell(args.order),
        cell(args.n),
        cell(report.b2),
        cell(report.bound),
        cell(report.inside),
        String::new(),
        String::new(),
    ]];
    let mut records = json!({ "window": report });
    if !args.window {
        let angles = match args.order {
            2 => ellipsoid::biharmonic_angles(args.n, args.b),
            _ => ellipsoid::triharmonic_angles(args.n, args.b),
        };
        let config = EllipsoidConfig::new(args.n, args.b)?;
        let bump = Bump::power(args.order);
        let mut list = Vec::new();
        for a in angles {
            let fv = ellipsoid::first_variation(a, &bump, &config, args.order, &quad)?;
            rows.push(vec![
                "root".to_string(),
                cell(args.order),
                cell(args.n),
                cell(report.b2),
                cell(report.bound),
                cell(report.inside),
                format!("{a:.17e}"),
                format!("{:e}", fv.value),
            ]);
            list.push(json!({ "a": a, "bump": bump.to_string(), "first_variation": fv.value, "first_variation_error": fv.error }));
        }
        records["roots"] = Value::Array(list);
        if args.order == 2 {
            records["closed_form"] = json!(ellipsoid::closed_form_angle(args.n, args.b).ok());
        }
    }
    Ok(Outcome {
        parameters: json!({ "order": args.order, "n": args.n, "b": args.b, "window_only": args.window }),
        tolerances: json!({ "quadrature": quad }),
        records,
        header: vec!["kind", "order", "n", "b2", "bound", "inside", "a", "first_variation"],
        rows,
    })
}

fn warped_cmd(args: &WarpedArgs) -> anyhow::Result<Outcome> {
    if let Some(warp) = &args.pole_series {
        let rep = warped::pole_series_check(warp, args.terms)?;
        let rows = rep.coefficients.iter().enumerate().map(|(m, c)| vec![cell(m), format!("{c:e}")]).collect();
        return Ok(Outcome {
            parameters: json!({ "warp": warp.to_string(), "terms": args.terms }),
            tolerances: json!({ "coefficient_tol": 1e-9 }),
            records: serde_json::to_value(rep)?,
            header: vec!["power", "coefficient"],
            rows,
        });
    }
    if args.series {
        let rep = warped::series_induction_check(args.max)?;
        let rows = rep
            .values
            .iter()
            .map(|v| vec![cell(v.j), cell(v.value.rational), cell(v.value.irrational), format!("{:e}", v.approx)])
            .collect();
        return Ok(Outcome {
            parameters: json!({ "max": args.max }),
            tolerances: json!({ "arithmetic": "exact" }),
            records: serde_json::to_value(rep)?,
            header: vec!["j", "rational", "sqrt10", "approx"],
            rows,
        });
    }
    let Some(n) = args.n else {
        bail!(Usage("give --n, --series or --pole-series".into()));
    };
    if args.ode {
        if args.order != 2 {
            bail!(Usage("--ode integrates the order-2 equation".into()));
        }
        let mut rep = warped::shoot_ode(n, args.rho0, args.ode_tol)?;
        let rows = vec![vec![
            cell(n),
            format!("{:e}", rep.max_deviation),
            format!("{:e}", rep.max_residual),
            opt_cell(rep.first_integral_drift.map(|d| format!("{d:e}"))),
            cell(rep.steps),
        ]];
        if !args.trajectory {
            rep.trajectory.clear();
        }
        return Ok(Outcome {
            parameters: json!({ "order": 2, "n": n, "rho0": args.rho0 }),
            tolerances: json!({ "ode_tol": args.ode_tol, "deviation_tol": 1e-8 }),
            records: json!({ "ode": rep, "rigid": rep.max_deviation <= 1e-8 }),
            header: vec!["n", "max_deviation", "max_residual", "first_integral_drift", "steps"],
            rows,
        });
    }
    let a = warped::pole_angle(args.order, n)?;
    Ok(Outcome {
        parameters: json!({ "order": args.order, "n": n }),
        tolerances: json!({}),
        records: json!({ "pole_angle": a }),
        header: vec!["order", "n", "pole_angle"],
        rows: vec![vec![cell(args.order), cell(n), opt_cell(a.map(|x| format!("{x:.17e}")))]],
    })
}

fn sobolev_cmd(args: &SobolevArgs) -> anyhow::Result<Outcome> {
    let n_max = args.n_max.unwrap_or(args.n);
    let reports =
        (args.n..=n_max).map(|n| criticality::sobolev_check(args.r, n)).collect::<polyharm::Result<Vec<_>>>()?;
    let rows = reports.iter().map(|s| vec![cell(s.r), cell(s.n), cell(s.member)]).collect();
    Ok(Outcome {
        parameters: json!({ "r": args.r, "n": args.n, "n_max": n_max }),
        tolerances: json!({}),
        records: serde_json::to_value(reports)?,
        header: vec!["r", "n", "member"],
        rows,
    })
}

fn conjecture_cmd(args: &ConjectureArgs, config: &Config) -> anyhow::Result<Outcome> {
    let (n, a) = criticality::conjecture_angle(args.r)?;
    let tol = config.reference_tol.unwrap_or(1e-7);
    let mut records = json!({ "n": n, "a": a, "cos_2a": criticality::conjecture_argument(args.r) });
    let mut row = vec![cell(args.r), cell(n), format!("{a:.17e}"), String::new(), String::new()];
    if args.verify {
        let opts = config.scan();
        let scan = criticality::find_critical_angles(args.r, Variant::Standard, n, &opts)?;
        let roots: Vec<f64> = scan.roots.iter().map(|c| c.a).collect();
        let ok = roots.len() == 1 && (roots[0] - a).abs() <= tol;
        row[3] = roots.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(";");
        row[4] = cell(ok);
        records["scan_roots"] = json!(roots);
        records["matches"] = json!(ok);
    }
    Ok(Outcome {
        parameters: json!({ "r": args.r, "verify": args.verify }),
        tolerances: json!({ "reference_tol": tol }),
        records,
        header: vec!["r", "n", "a", "scan_roots", "matches"],
        rows: vec![row],
    })
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("POLYHARM_THREADS") {
        let k: usize = v.parse().map_err(|_| Usage(format!("POLYHARM_THREADS={v} is not a thread count")))?;
        if k > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring the thread pool")?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let config = Config::load(cli.config.as_ref())?;
    let start = Instant::now();
    let (name, outcome) = match &cli.command {
        Command::Critical(a) => ("critical", critical(a, &config)?),
        Command::Stability(a) => ("stability", stability(a, &config)?),
        Command::Ellipsoid(a) => ("ellipsoid", ellipsoid_cmd(a, &config)?),
        Command::Warped(a) => ("warped", warped_cmd(a)?),
        Command::Sobolev(a) => ("sobolev", sobolev_cmd(a)?),
        Command::Conjecture(a) => ("conjecture", conjecture_cmd(a, &config)?),
    };
    let wall = start.elapsed().as_secs_f64();

    let bytes = if cli.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&outcome.header)?;
        for row in &outcome.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
    } else {
        let report = RunReport {
            command: name.to_string(),
            argv: std::env::args().skip(1).collect(),
            parameters: outcome.parameters,
            tolerances: outcome.tolerances,
            records: outcome.records,
            wall_time_s: wall,
        };
        let mut s = serde_json::to_vec_pretty(&report)?;
        s.push(b'\n');
        s
    };
    match &cli.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<polyharm::Error>() {
        Some(polyharm::Error::Parse(_)) => 2,
        Some(polyharm::Error::Accuracy { .. }) => 4,
        Some(_) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

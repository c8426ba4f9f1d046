//! Subcommand argument structs, config-file merging, and implementations.
//!
//! Every flag can instead be supplied from a TOML config file under a
//! section named after the subcommand (`[evolve] n = 16`); explicit flags
//! win on conflict. Outputs are assembled in memory and written only when
//! the whole computation succeeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::Args;

use coopchain_core::analysis::{fit_trace, scan_lowest_decay, FitOptions};
use coopchain_core::interaction::{build_coupling_matrix, f_kernel, g_kernel};
use coopchain_core::ode::{ode_oracle, OdeOptions};
use coopchain_core::planner::{
    robustness_report, stark_plan, zeeman_plan, Mechanism, StarkMode,
};
use coopchain_core::spectral::{
    default_grid, diagonalize, evolve_projection, evolve_site, population, weightings,
    TimeGrid, DEFAULT_GRID_POINTS,
};
use coopchain_core::states::AmplitudeVector;
use coopchain_core::ChainGeometry;

use crate::output::{fmt_f64, read_trace_csv, write_text, CsvBuilder, VERSION};

/// Failures split by exit code: 2 for usage, 3 for numerical/runtime.
pub enum CliError {
    Usage(String),
    Numeric(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<coopchain_core::Error> for CliError {
    fn from(e: coopchain_core::Error) -> Self {
        CliError::Numeric(anyhow!(e.to_string()))
    }
}

type CliResult = std::result::Result<(), CliError>;

// ---------------------------------------------------------------------
// config file

pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> std::result::Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                table: toml::Table::new(),
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Ok(Self { table })
    }

    fn value(&self, section: &str, key: &str) -> Option<&toml::Value> {
        self.table.get(section)?.as_table()?.get(key)
    }

    fn f64(&self, section: &str, key: &str) -> std::result::Result<Option<f64>, CliError> {
        match self.value(section, key) {
            None => Ok(None),
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .map(Some)
                .ok_or_else(|| {
                    CliError::usage(format!("config [{section}] {key}: expected a number"))
                }),
        }
    }

    fn usize(&self, section: &str, key: &str) -> std::result::Result<Option<usize>, CliError> {
        match self.value(section, key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|&i| i >= 0)
                .map(|i| Some(i as usize))
                .ok_or_else(|| {
                    CliError::usage(format!(
                        "config [{section}] {key}: expected a non-negative integer"
                    ))
                }),
        }
    }

    fn bool(&self, section: &str, key: &str) -> std::result::Result<Option<bool>, CliError> {
        match self.value(section, key) {
            None => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| {
                CliError::usage(format!("config [{section}] {key}: expected a boolean"))
            }),
        }
    }

    fn string(&self, section: &str, key: &str) -> std::result::Result<Option<String>, CliError> {
        match self.value(section, key) {
            None => Ok(None),
            Some(v) => v.as_str().map(|s| Some(s.to_string())).ok_or_else(|| {
                CliError::usage(format!("config [{section}] {key}: expected a string"))
            }),
        }
    }
}

fn need<T>(
    flag: Option<T>,
    cfg: std::result::Result<Option<T>, CliError>,
    what: &str,
) -> std::result::Result<T, CliError> {
    flag.map(Ok)
        .or_else(|| cfg.transpose())
        .transpose()?
        .ok_or_else(|| CliError::usage(format!("missing required value: {what}")))
}

fn pick<T>(
    flag: Option<T>,
    cfg: std::result::Result<Option<T>, CliError>,
    default: T,
) -> std::result::Result<T, CliError> {
    Ok(flag.map(Ok).or_else(|| cfg.transpose()).transpose()?.unwrap_or(default))
}

// ---------------------------------------------------------------------
// shared geometry flags

#[derive(Args, Debug)]
pub struct GeomArgs {
    /// Number of atoms N
    #[arg(long)]
    pub n: Option<usize>,
    /// Lattice spacing d_s in units of the transition wavelength
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Dipole alignment (d_hat . r_hat)^2 in [0,1]; default 0
    #[arg(long)]
    pub alignment: Option<f64>,
    /// Excitation pulse along the chain axis (true) or transverse (false);
    /// default true
    #[arg(long)]
    pub axial_excitation: Option<bool>,
}

struct ResolvedGeom {
    geom: ChainGeometry<f64>,
    echo: String,
}

impl GeomArgs {
    fn resolve(&self, cfg: &ConfigFile, section: &str) -> std::result::Result<ResolvedGeom, CliError> {
        let n = need(self.n, cfg.usize(section, "n"), "--n")?;
        let spacing = need(self.spacing, cfg.f64(section, "spacing"), "--spacing")?;
        let alignment = pick(self.alignment, cfg.f64(section, "alignment"), 0.0)?;
        let axial = pick(
            self.axial_excitation,
            cfg.bool(section, "axial_excitation"),
            true,
        )?;
        let geom = ChainGeometry::new(n, spacing, alignment, axial)
            .map_err(|e| CliError::usage(e.to_string()))?;
        let echo = format!(
            "n={n} spacing={} alignment={} axial_excitation={axial}",
            fmt_f64(spacing),
            fmt_f64(alignment)
        );
        Ok(ResolvedGeom { geom, echo })
    }
}

fn check_m(m: usize, n: usize) -> std::result::Result<(), CliError> {
    if m == 0 || m > n {
        return Err(CliError::usage(format!("--m {m} out of range 1..={n}")));
    }
    Ok(())
}

fn emit(out: Option<&Path>, payload: &str) -> CliResult {
    match out {
        Some(path) => write_text(path, payload).map_err(CliError::Numeric),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------
// kernel

#[derive(Args, Debug)]
pub struct KernelArgs {
    /// Dimensionless separation xi = |k| r
    #[arg(long)]
    pub xi: Option<f64>,
    /// Dipole alignment in [0,1]
    #[arg(long)]
    pub alignment: Option<f64>,
}

pub fn run_kernel(args: &KernelArgs, cfg: &ConfigFile) -> CliResult {
    let xi = need(args.xi, cfg.f64("kernel", "xi"), "--xi")?;
    let alignment = pick(args.alignment, cfg.f64("kernel", "alignment"), 0.0)?;
    if xi < 0.0 || !(0.0..=1.0).contains(&alignment) {
        return Err(CliError::usage(
            "xi must be >= 0 and alignment must lie in [0,1]",
        ));
    }
    let f = f_kernel(xi, alignment).map_err(|e| CliError::Numeric(anyhow!(e.to_string())))?;
    println!("F(xi={}, alignment={}) = {}", fmt_f64(xi), fmt_f64(alignment), fmt_f64(f));
    let g = g_kernel(xi, alignment).map_err(|e| CliError::Numeric(anyhow!(e.to_string())))?;
    println!("G(xi={}, alignment={}) = {}", fmt_f64(xi), fmt_f64(alignment), fmt_f64(g));
    Ok(())
}

// ---------------------------------------------------------------------
// coupling

#[derive(Args, Debug)]
pub struct CouplingArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// Single state index to evaluate
    #[arg(long, conflicts_with = "scan_m")]
    pub m: Option<usize>,
    /// Evaluate all m in 1..=N
    #[arg(long)]
    pub scan_m: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_coupling(args: &CouplingArgs, cfg: &ConfigFile) -> CliResult {
    let section = "coupling";
    let rg = args.geom.resolve(cfg, section)?;
    let scan = args.scan_m || cfg.bool(section, "scan_m")?.unwrap_or(false);
    let m_single = args.m.map(Ok).or_else(|| cfg.usize(section, "m").transpose()).transpose()?;
    let ms: Vec<usize> = if scan {
        (1..=rg.geom.n_atoms()).collect()
    } else {
        let m = m_single.ok_or_else(|| CliError::usage("need --m <index> or --scan-m"))?;
        check_m(m, rg.geom.n_atoms())?;
        vec![m]
    };
    let matrix = build_coupling_matrix(&rg.geom)?;
    let mut csv = CsvBuilder::new(
        &format!("coupling {} scan_m={scan}", rg.echo),
        "gamma_mm in Gamma",
        &["m", "gamma_mm"],
    );
    for m in ms {
        let g = matrix.dm_coupling_strength(m)?;
        csv.row(&[m.to_string(), fmt_f64(g)]);
    }
    emit(args.out.as_deref(), &csv.finish())
}

// ---------------------------------------------------------------------
// state

#[derive(Args, Debug)]
pub struct StateArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// State family: dm | dicke | mazets | svidzinsky
    #[arg(long)]
    pub family: Option<String>,
    /// State index (unused for dicke)
    #[arg(long)]
    pub m: Option<usize>,
    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_state(args: &StateArgs, cfg: &ConfigFile) -> CliResult {
    let section = "state";
    let rg = args.geom.resolve(cfg, section)?;
    let family = need(
        args.family.clone(),
        cfg.string(section, "family"),
        "--family",
    )?;
    let m_opt = args
        .m
        .map(Ok)
        .or_else(|| cfg.usize(section, "m").transpose())
        .transpose()?;
    let state = match family.as_str() {
        "dicke" => AmplitudeVector::timed_dicke(&rg.geom),
        "dm" | "mazets" | "svidzinsky" => {
            let m = m_opt.ok_or_else(|| CliError::usage("this family needs --m"))?;
            let build = match family.as_str() {
                "dm" => AmplitudeVector::dm_state(&rg.geom, m),
                "mazets" => AmplitudeVector::ns_state_mazets(&rg.geom, m),
                _ => AmplitudeVector::ns_state_svidzinsky(&rg.geom, m),
            };
            build.map_err(|e| CliError::usage(e.to_string()))?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown family `{other}` (expected dm|dicke|mazets|svidzinsky)"
            )))
        }
    };
    // file schema: a bare JSON array of (re, im) pairs
    let mut payload = String::from("[");
    for (k, z) in state.amps().iter().enumerate() {
        if k > 0 {
            payload.push(',');
        }
        let _ = write!(payload, "[{},{}]", fmt_f64(z.re), fmt_f64(z.im));
    }
    payload.push_str("]\n");
    eprintln!(
        "# coopchain v{VERSION} | state {} family={family} m={}",
        rg.echo,
        m_opt.map(|m| m.to_string()).unwrap_or_else(|| "-".into())
    );
    emit(args.out.as_deref(), &payload)
}

// ---------------------------------------------------------------------
// spectrum

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_spectrum(args: &SpectrumArgs, cfg: &ConfigFile) -> CliResult {
    let rg = args.geom.resolve(cfg, "spectrum")?;
    let matrix = build_coupling_matrix(&rg.geom)?;
    let decomp = diagonalize(&matrix)?;
    if decomp.is_ill_conditioned() {
        eprintln!("warning: eigenvector matrix is ill-conditioned; mode data may be inaccurate");
    }
    let mut csv = CsvBuilder::new(
        &format!("spectrum {}", rg.echo),
        "lambda in Gamma, decay_constant = -2 Re(lambda), ascending",
        &["n", "re_lambda", "im_lambda", "decay_constant"],
    );
    for (k, l) in decomp.eigenvalues().iter().enumerate() {
        csv.row(&[
            (k + 1).to_string(),
            fmt_f64(l.re),
            fmt_f64(l.im),
            fmt_f64(-2.0 * l.re),
        ]);
    }
    emit(args.out.as_deref(), &csv.finish())
}

// ---------------------------------------------------------------------
// weights

#[derive(Args, Debug)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// State index
    #[arg(long)]
    pub m: Option<usize>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_weights(args: &WeightsArgs, cfg: &ConfigFile) -> CliResult {
    let section = "weights";
    let rg = args.geom.resolve(cfg, section)?;
    let m = need(args.m, cfg.usize(section, "m"), "--m")?;
    check_m(m, rg.geom.n_atoms())?;
    let matrix = build_coupling_matrix(&rg.geom)?;
    let decomp = diagonalize(&matrix)?;
    let phi = AmplitudeVector::dm_state(&rg.geom, m)?;
    let table = weightings(&decomp, &phi, m)?;
    let mut csv = CsvBuilder::new(
        &format!("weights {} m={m}", rg.echo),
        "modes ascending by decay constant",
        &["n", "v_re", "v_im", "w_re", "w_im", "normalized_weighting"],
    );
    for k in 0..decomp.n() {
        csv.row(&[
            (k + 1).to_string(),
            fmt_f64(table.v()[k].re),
            fmt_f64(table.v()[k].im),
            fmt_f64(table.w()[k].re),
            fmt_f64(table.w()[k].im),
            fmt_f64(table.normalized_weighting()[k]),
        ]);
    }
    emit(args.out.as_deref(), &csv.finish())
}

// ---------------------------------------------------------------------
// evolve

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// State index
    #[arg(long)]
    pub m: Option<usize>,
    /// Grid end in units of 1/Gamma; default min(50, 5/gamma_dominant)
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Grid points; default 2001
    #[arg(long)]
    pub points: Option<usize>,
    /// Cross-check the spectral evolution against the ODE integrator
    #[arg(long)]
    pub verify: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_evolve(args: &EvolveArgs, cfg: &ConfigFile) -> CliResult {
    let section = "evolve";
    let rg = args.geom.resolve(cfg, section)?;
    let m = need(args.m, cfg.usize(section, "m"), "--m")?;
    check_m(m, rg.geom.n_atoms())?;
    let points = pick(args.points, cfg.usize(section, "points"), DEFAULT_GRID_POINTS)?;
    let tmax_flag = args.tmax.map(Ok).or_else(|| cfg.f64(section, "tmax").transpose()).transpose()?;
    let verify = args.verify || cfg.bool(section, "verify")?.unwrap_or(false);

    let matrix = build_coupling_matrix(&rg.geom)?;
    let decomp = diagonalize(&matrix)?;
    let phi = AmplitudeVector::dm_state(&rg.geom, m)?;
    let table = weightings(&decomp, &phi, m)?;
    let tmax = match tmax_flag {
        Some(t) if t > 0.0 => t,
        Some(_) => return Err(CliError::usage("--tmax must be positive")),
        None => {
            let gamma_dom = -2.0 * decomp.eigenvalues()[table.dominant_mode()].re;
            default_grid(gamma_dom).t_max
        }
    };
    let grid = TimeGrid::new(tmax, points).map_err(|e| CliError::usage(e.to_string()))?;
    let times = grid.to_vec();

    let d = evolve_projection(&decomp, &phi, &times)?;
    let site = evolve_site(&decomp, &phi, &times)?;

    if verify {
        let oracle = ode_oracle(&matrix, &phi, &times, &OdeOptions::default())?;
        let mut dev = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..times.len() {
            for mu in 0..rg.geom.n_atoms() {
                dev = dev.max((site[[k, mu]] - oracle[[k, mu]]).norm());
                scale = scale.max(oracle[[k, mu]].norm());
            }
        }
        let rel = dev / scale;
        if rel > 1e-8 {
            return Err(CliError::Numeric(anyhow!(
                "verification failed: spectral vs ODE deviation {rel:.3e} exceeds 1e-8"
            )));
        }
        eprintln!("verify: spectral vs ODE deviation {rel:.3e}");
    }

    let mut csv = CsvBuilder::new(
        &format!(
            "evolve {} m={m} tmax={} points={points} verify={verify}",
            rg.echo,
            fmt_f64(tmax)
        ),
        "t in 1/Gamma; prob = |d_m|^2; population = sum |c_mu|^2",
        &["t", "re_d", "im_d", "prob", "population"],
    );
    for (k, &t) in times.iter().enumerate() {
        csv.row(&[
            fmt_f64(t),
            fmt_f64(d[k].re),
            fmt_f64(d[k].im),
            fmt_f64(d[k].norm_sqr()),
            fmt_f64(population(site.row(k))),
        ]);
    }
    emit(args.out.as_deref(), &csv.finish())
}

// ---------------------------------------------------------------------
// fit

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Trace CSV produced by `evolve` (columns t and prob)
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Restrict the fit to t in [LO,HI]
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub fit_window: Option<Vec<f64>>,
    /// Prominence ratio for envelope maxima; default 2
    #[arg(long)]
    pub prominence: Option<f64>,
    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_fit(args: &FitArgs, cfg: &ConfigFile) -> CliResult {
    let section = "fit";
    let input = need(
        args.input.clone(),
        cfg.string(section, "in").map(|o| o.map(PathBuf::from)),
        "--in",
    )?;
    let prominence = pick(args.prominence, cfg.f64(section, "prominence"), 2.0)?;
    let window = match &args.fit_window {
        Some(v) if v.len() == 2 => Some((v[0], v[1])),
        Some(_) => return Err(CliError::usage("--fit-window needs exactly LO,HI")),
        None => None,
    };
    let series = read_trace_csv(&input, "t", "prob").map_err(CliError::Numeric)?;
    let opts = FitOptions {
        window,
        prominence_ratio: prominence,
    };
    let report = fit_trace(&series, &opts)?;
    let payload = serde_json::json!({
        "version": VERSION,
        "config": {
            "in": input.display().to_string(),
            "fit_window": window.map(|(a, b)| vec![a, b]),
            "prominence": prominence,
        },
        "gamma_f": report.gamma_f,
        "gamma_f_over_2": report.gamma_f / 2.0,
        "spread": report.spread,
        "beat_frequency": report.beat_frequency,
        "dominant_weighting": report.dominant_weighting,
        "m_star": report.m_star,
        "fit_window": [report.fit_window.0, report.fit_window.1],
    });
    let text = serde_json::to_string_pretty(&payload).map_err(|e| CliError::Numeric(e.into()))?;
    emit(args.out.as_deref(), &format!("{text}\n"))
}

// ---------------------------------------------------------------------
// sweep

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Comma-separated atom numbers, e.g. 16,32,64,100
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Comma-separated spacings in wavelength units, e.g. 0.1,0.25
    #[arg(long, value_delimiter = ',')]
    pub spacing_list: Option<Vec<f64>>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_sweep(args: &SweepArgs, cfg: &ConfigFile) -> CliResult {
    let section = "sweep";
    let n_list = match &args.n_list {
        Some(v) => v.clone(),
        None => cfg
            .value(section, "n_list")
            .and_then(|v| v.as_array())
            .map(|a| {
                a.iter()
                    .filter_map(|x| x.as_integer())
                    .map(|i| i as usize)
                    .collect()
            })
            .unwrap_or_default(),
    };
    let spacing_list = match &args.spacing_list {
        Some(v) => v.clone(),
        None => cfg
            .value(section, "spacing_list")
            .and_then(|v| v.as_array())
            .map(|a| {
                a.iter()
                    .filter_map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                    .collect()
            })
            .unwrap_or_default(),
    };
    if n_list.is_empty() || spacing_list.is_empty() {
        return Err(CliError::usage(
            "sweep needs non-empty --n-list and --spacing-list",
        ));
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(format!("--jobs: {e}")))?;
    }
    let rows = scan_lowest_decay(&n_list, &spacing_list)?;
    let mut csv = CsvBuilder::new(
        &format!(
            "sweep n_list={} spacing_list={} jobs={}",
            n_list
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            spacing_list
                .iter()
                .map(|s| fmt_f64(*s))
                .collect::<Vec<_>>()
                .join(";"),
            args.jobs.map(|j| j.to_string()).unwrap_or_else(|| "auto".into())
        ),
        "gamma_f = |d|^2 envelope rate in Gamma",
        &["n", "spacing", "m_star", "gamma_f", "spread"],
    );
    for r in rows {
        csv.row(&[
            r.n_atoms.to_string(),
            fmt_f64(r.spacing),
            r.m_star.to_string(),
            fmt_f64(r.gamma_f),
            fmt_f64(r.spread),
        ]);
    }
    emit(args.out.as_deref(), &csv.finish())
}

// ---------------------------------------------------------------------
// plan

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// zeeman | stark-cw | stark-pulsed
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Target state index
    #[arg(long)]
    pub m: Option<usize>,
    /// Interaction time in seconds
    #[arg(long)]
    pub tau: Option<f64>,
    /// CW detuning in units of Gamma (stark-cw only); default 100
    #[arg(long)]
    pub detuning: Option<f64>,
    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_plan(args: &PlanArgs, cfg: &ConfigFile) -> CliResult {
    let section = "plan";
    let rg = args.geom.resolve(cfg, section)?;
    let mechanism = need(
        args.mechanism.clone(),
        cfg.string(section, "mechanism"),
        "--mechanism",
    )?;
    let m = need(args.m, cfg.usize(section, "m"), "--m")?;
    check_m(m, rg.geom.n_atoms())?;
    let tau = need(args.tau, cfg.f64(section, "tau"), "--tau")?;
    if tau <= 0.0 {
        return Err(CliError::usage("--tau must be positive seconds"));
    }
    let plan = match mechanism.as_str() {
        "zeeman" => zeeman_plan(&rg.geom, m, tau * 1e3, rg.geom.spacing())?,
        "stark-pulsed" => stark_plan(&rg.geom, m, tau, StarkMode::Pulsed)?,
        "stark-cw" => {
            let detuning = pick(args.detuning, cfg.f64(section, "detuning"), 100.0)?;
            if detuning == 0.0 {
                return Err(CliError::usage("--detuning must be nonzero"));
            }
            stark_plan(
                &rg.geom,
                m,
                tau,
                StarkMode::Cw {
                    detuning_in_linewidths: detuning,
                },
            )?
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown mechanism `{other}` (expected zeeman|stark-cw|stark-pulsed)"
            )))
        }
    };
    let units = match plan.mechanism {
        Mechanism::Zeeman => "mG/um",
        _ => "mW/cm^2",
    };
    let payload = serde_json::json!({
        "version": VERSION,
        "config": {
            "geometry": rg.echo,
            "mechanism": mechanism,
            "m": m,
            "tau_seconds": tau,
            "detuning_in_gamma": args.detuning,
        },
        "mechanism": plan.mechanism,
        "gradient_or_intensity": plan.gradient_or_intensity,
        "units": units,
        "interaction_time_seconds": plan.interaction_time,
        "target_m": plan.target_m,
        "adjacent_phase_rad": plan.adjacent_phase,
        "efficiency": plan.efficiency,
    });
    let text = serde_json::to_string_pretty(&payload).map_err(|e| CliError::Numeric(e.into()))?;
    emit(args.out.as_deref(), &format!("{text}\n"))
}

// ---------------------------------------------------------------------
// perturb

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub geom: GeomArgs,
    /// State index
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated phase offsets, radians or multiples of pi
    /// (e.g. 0,0.2pi,0.4pi)
    #[arg(long)]
    pub offsets: Option<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_offsets(spec: &str) -> std::result::Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.is_empty() {
                return Err(CliError::usage("empty offset entry"));
            }
            if let Some(prefix) = tok.strip_suffix("pi") {
                let factor = if prefix.is_empty() {
                    1.0
                } else if prefix == "-" {
                    -1.0
                } else {
                    prefix
                        .parse::<f64>()
                        .map_err(|_| CliError::usage(format!("bad offset `{tok}`")))?
                };
                Ok(factor * std::f64::consts::PI)
            } else {
                tok.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad offset `{tok}`")))
            }
        })
        .collect()
}

pub fn run_perturb(args: &PerturbArgs, cfg: &ConfigFile) -> CliResult {
    let section = "perturb";
    let rg = args.geom.resolve(cfg, section)?;
    let m = need(args.m, cfg.usize(section, "m"), "--m")?;
    check_m(m, rg.geom.n_atoms())?;
    let offsets_spec = need(
        args.offsets.clone(),
        cfg.string(section, "offsets"),
        "--offsets",
    )?;
    let offsets = parse_offsets(&offsets_spec)?;
    if offsets.is_empty() {
        return Err(CliError::usage("--offsets must name at least one value"));
    }
    if rg.geom.n_atoms() == 1 && offsets.iter().any(|&o| o != 0.0) {
        eprintln!("warning: N = 1 has no phase gradient; offsets act as the identity");
    }
    let rows = robustness_report(&rg.geom, m, &offsets)?;
    let mut csv = CsvBuilder::new(
        &format!("perturb {} m={m} offsets={offsets_spec}", rg.echo),
        "offset in rad; projection onto the unperturbed dominant pair; gamma_f in Gamma",
        &["offset", "subset_projection", "gamma_f", "spread", "beat_error"],
    );
    for r in rows {
        csv.row(&[
            fmt_f64(r.offset),
            fmt_f64(r.subset_projection),
            fmt_f64(r.gamma_f),
            fmt_f64(r.spread),
            r.beat_error.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    emit(args.out.as_deref(), &csv.finish())
}

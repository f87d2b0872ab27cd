use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use kgamma_core::analysis::{h2_norm_squared, hinf_norm, in_cstab, in_kgamma, in_lgamma};
use kgamma_core::certify::{bounded_real_certificate, h2_certificate};
use kgamma_core::homotopy::{connect, connect_via_bridge, PathOptions};
use kgamma_core::io::{self, JsonDoc};
use kgamma_core::liftmap::{component_sign, lift, lift_h2, reconstruct};
use kgamma_core::lmi::{gamma_star, synthesize_h2, synthesize_with, SolverOptions};
use kgamma_core::model::{close_loop, Controller, Plant};
use kgamma_core::numerics::{spectral_abscissa, Tolerances};
use kgamma_core::scan::{scan, Axis, ParamRef, ScanSpec, DEFAULT_A_K};
use kgamma_core::{Error, ErrorClass};

#[derive(Debug, Parser)]
#[command(name = "kgamma", version, about = "H∞-constrained output-feedback controller sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Relative tolerance for eigenvalue tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_eig: f64,
    /// Required strict margin on LMIs.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_lmi: f64,
    /// Relative width at which norm bisection stops.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol_bisect: f64,
    /// Margin to the imaginary axis for stability.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_stability: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Restrict to controllers with D_K = 0.
    #[arg(long, global = true)]
    pub strictly_proper: bool,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Global {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            eig_tol: self.tol_eig,
            lmi_margin: self.tol_lmi,
            bisect_tol: self.tol_bisect,
            stability_margin: self.tol_stability,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce the scalar two-controller example.
    Example1,
    /// Membership grid over a two-parameter controller slice.
    Scan(ScanArgs),
    /// Closed-loop H∞ (or H2) norm.
    Norm(PlantController),
    /// Membership in C_stab, K_γ and optionally L_γ.
    Check(CheckArgs),
    /// Bounded-real (or H2) certificate.
    Certify(CheckArgs),
    /// Lift a controller to the convex parameterization.
    Lift(CheckArgs),
    /// Controller of a lifted point.
    Reconstruct(ReconstructArgs),
    /// Controller with closed-loop norm below γ.
    Synthesize(SynthesizeArgs),
    /// Bracket on the optimal H∞ level.
    GammaStar(GammaStarArgs),
    /// Verified path between two controllers.
    Path(PathArgs),
}

#[derive(Debug, Args)]
pub struct PlantController {
    #[arg(long)]
    pub plant: PathBuf,
    #[arg(long)]
    pub controller: PathBuf,
    /// Use the H2 norm instead of H∞.
    #[arg(long)]
    pub h2: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub pc: PlantController,
    #[arg(long)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub plant: PathBuf,
    #[arg(long)]
    pub lifted: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub plant: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    /// Bound the squared H2 norm instead (strictly proper).
    #[arg(long)]
    pub h2: bool,
}

#[derive(Debug, Args)]
pub struct GammaStarArgs {
    #[arg(long)]
    pub plant: PathBuf,
    /// Target ratio hi/lo − 1.
    #[arg(long, default_value_t = 0.01)]
    pub rel_tol: f64,
    /// Maximum number of synthesis attempts.
    #[arg(long, default_value_t = 60)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long)]
    pub plant: PathBuf,
    #[arg(long)]
    pub k0: PathBuf,
    #[arg(long)]
    pub k1: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    /// Number of intervals per segment.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub refine: bool,
    /// Reduced-order controller to augment into a bridge.
    #[arg(long)]
    pub bridge: Option<PathBuf>,
    /// Eigenvalue of the appended bridge state.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub bridge_eig: f64,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Plant file; the scalar example plant when omitted.
    #[arg(long)]
    pub plant: Option<PathBuf>,
    /// State matrix of the scalar example plant.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Horizontal axis as PARAM:MIN:MAX:COUNT.
    #[arg(long, default_value = "B_K:-10:10:201", allow_hyphen_values = true)]
    pub x: String,
    /// Vertical axis as PARAM:MIN:MAX:COUNT.
    #[arg(long, default_value = "C_K:-10:10:201", allow_hyphen_values = true)]
    pub y: String,
    /// Fixed entries as PARAM=VALUE; A_K is −2 unless given.
    #[arg(long = "fix", allow_hyphen_values = true)]
    pub fixed: Vec<String>,
    /// JSON summary path; `<out>.json` by default.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

pub fn parse_axis(s: &str) -> Result<Axis, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidInput(format!("axis '{s}' must be PARAM:MIN:MAX:COUNT"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let param: ParamRef = parts[0].parse()?;
    let min = parts[1].trim().parse().map_err(|_| bad())?;
    let max = parts[2].trim().parse().map_err(|_| bad())?;
    let count = parts[3].trim().parse().map_err(|_| bad())?;
    Axis::new(param, min, max, count)
}

pub fn parse_fixed(s: &str) -> Result<(ParamRef, f64), Error> {
    let (p, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidInput(format!("fixed parameter '{s}' must be PARAM=VALUE")))?;
    let v = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("fixed parameter '{s}': bad value")))?;
    Ok((p.parse()?, v))
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Input => 2,
        ErrorClass::Precondition => 3,
        ErrorClass::Numerical => 4,
    }
}

fn read_doc<T: JsonDoc>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    T::from_json_str(&text).map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: &Option<PathBuf>, v: &Value) -> Result<(), Error> {
    emit(out, &serde_json::to_string_pretty(v).expect("serializing a JSON value cannot fail"))
}

pub fn example_one_controllers() -> (Controller, Controller) {
    (Controller::scalar(0.0, 2.0, -2.0, -2.0), Controller::scalar(0.0, -2.0, 2.0, -2.0))
}

/// Outcome of the example regression.
#[derive(Debug, Clone)]
pub struct Example1Report {
    pub k1_hinf: (f64, f64),
    pub k2_hinf: (f64, f64),
    pub k1_member: bool,
    pub k2_member: bool,
    pub midpoint_abscissa: f64,
    pub midpoint_stable: bool,
}

impl Example1Report {
    pub fn passed(&self) -> bool {
        self.k1_member && self.k2_member && !self.midpoint_stable
    }
}

pub fn example1(tol: &Tolerances) -> Result<Example1Report, Error> {
    let plant = Plant::scalar_example(1.0);
    let (k1, k2) = example_one_controllers();
    let mid = k1.lerp(&k2, 0.5);
    let n1 = hinf_norm(&close_loop(&plant, &k1)?, tol)?;
    let n2 = hinf_norm(&close_loop(&plant, &k2)?, tol)?;
    Ok(Example1Report {
        k1_hinf: (n1.lo, n1.hi),
        k2_hinf: (n2.lo, n2.hi),
        k1_member: in_kgamma(&plant, &k1, 3.33, false, tol)?,
        k2_member: in_kgamma(&plant, &k2, 3.33, false, tol)?,
        midpoint_abscissa: spectral_abscissa(&close_loop(&plant, &mid)?.a)?,
        midpoint_stable: in_cstab(&plant, &mid, tol)?,
    })
}

fn run_example1(g: &Global, tol: &Tolerances) -> Result<i32, Error> {
    let r = example1(tol)?;
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    let text = format!(
        "K1 = [0 2; -2 -2]  hinf in [{:.9}, {:.9}]  in K_3.33: {}\n\
         K2 = [0 -2; 2 -2]  hinf in [{:.9}, {:.9}]  in K_3.33: {}\n\
         midpoint [0 0; 0 -2]  spectral abscissa {:?}  unstable: {}",
        r.k1_hinf.0,
        r.k1_hinf.1,
        mark(r.k1_member),
        r.k2_hinf.0,
        r.k2_hinf.1,
        mark(r.k2_member),
        r.midpoint_abscissa,
        mark(!r.midpoint_stable),
    );
    emit(&g.out, &text)?;
    Ok(if r.passed() { 0 } else { 1 })
}

fn run_scan(g: &Global, a: &ScanArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant = match &a.plant {
        Some(p) => read_doc::<Plant>(p)?,
        None => Plant::scalar_example(a.a),
    };
    let x = parse_axis(&a.x)?;
    let y = parse_axis(&a.y)?;
    let mut fixed = a.fixed.iter().map(|s| parse_fixed(s)).collect::<Result<Vec<_>, _>>()?;
    let a_k = ParamRef::scalar(kgamma_core::scan::ControllerBlock::A);
    if x.param != a_k && y.param != a_k && !fixed.iter().any(|(p, _)| *p == a_k) {
        fixed.push((a_k, DEFAULT_A_K));
    }
    let spec = ScanSpec { x, y, fixed, gamma: a.gamma };
    let grid = scan(&plant, &spec, tol)?;
    emit(&g.out, grid.to_csv()?.trim_end())?;
    let sidecar = serde_json::to_string_pretty(&grid.sidecar()).expect("serializing a JSON value cannot fail");
    match (&a.sidecar, &g.out) {
        (Some(p), _) => fs::write(p, sidecar).map_err(|e| Error::InvalidInput(e.to_string()))?,
        (None, Some(o)) => {
            let mut p = o.clone().into_os_string();
            p.push(".json");
            fs::write(PathBuf::from(p), sidecar).map_err(|e| Error::InvalidInput(e.to_string()))?
        }
        (None, None) => eprintln!("{sidecar}"),
    }
    Ok(0)
}

fn run_norm(g: &Global, a: &PlantController, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.plant)?;
    let k: Controller = read_doc(&a.controller)?;
    let cl = close_loop(&plant, &k)?;
    let v = if a.h2 {
        let sq = h2_norm_squared(&cl, tol)?;
        json!({ "h2_squared": io::real(sq), "value": io::real(sq.sqrt()) })
    } else {
        io::norm_result(&hinf_norm(&cl, tol)?)
    };
    emit_json(&g.out, &v)?;
    Ok(0)
}

fn run_check(g: &Global, a: &CheckArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.pc.plant)?;
    let k: Controller = read_doc(&a.pc.controller)?;
    let mut v = json!({
        "gamma": io::real(a.gamma),
        "in_cstab": in_cstab(&plant, &k, tol)?,
        "in_kgamma": in_kgamma(&plant, &k, a.gamma, g.strictly_proper, tol)?,
        "strictly_proper": g.strictly_proper,
    });
    if a.pc.h2 {
        v["in_lgamma"] = json!(in_lgamma(&plant, &k, a.gamma, tol)?);
    }
    emit_json(&g.out, &v)?;
    Ok(0)
}

fn run_certify(g: &Global, a: &CheckArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.pc.plant)?;
    let k: Controller = read_doc(&a.pc.controller)?;
    let v = if a.pc.h2 {
        h2_certificate(&plant, &k, a.gamma, tol)?.to_json()
    } else {
        bounded_real_certificate(&plant, &k, a.gamma, tol)?.to_json()
    };
    emit_json(&g.out, &v)?;
    Ok(0)
}

fn run_lift(g: &Global, a: &CheckArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.pc.plant)?;
    let k: Controller = read_doc(&a.pc.controller)?;
    let v = if a.pc.h2 {
        let (z, gm) = lift_h2(&plant, &k, a.gamma, g.seed, tol)?;
        let mut v = z.to_json();
        v["Gamma"] = io::mat(&gm);
        v["sign"] = io::component_sign(component_sign(&z, tol)?);
        v
    } else {
        let z = lift(&plant, &k, a.gamma, g.seed, tol)?;
        let mut v = z.to_json();
        v["sign"] = io::component_sign(component_sign(&z, tol)?);
        v
    };
    emit_json(&g.out, &v)?;
    Ok(0)
}

fn run_reconstruct(g: &Global, a: &ReconstructArgs, _tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.plant)?;
    let z = read_doc(&a.lifted)?;
    emit_json(&g.out, &reconstruct(&plant, &z)?.to_json())?;
    Ok(0)
}

fn run_synthesize(g: &Global, a: &SynthesizeArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.plant)?;
    let v = if a.h2 {
        let (k, gm) = synthesize_h2(&plant, a.gamma, g.seed, tol)?;
        json!({ "controller": k.to_json(), "Gamma": io::mat(&gm) })
    } else {
        let s = synthesize_with(&plant, a.gamma, g.strictly_proper, g.seed, &SolverOptions::default(), None, tol)?;
        io::synthesis(&s)
    };
    emit_json(&g.out, &v)?;
    Ok(0)
}

fn run_gamma_star(g: &Global, a: &GammaStarArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.plant)?;
    let r = gamma_star(&plant, a.rel_tol, a.budget, g.strictly_proper, g.seed, tol)?;
    emit_json(&g.out, &io::gamma_star(&r))?;
    Ok(0)
}

fn run_path(g: &Global, a: &PathArgs, tol: &Tolerances) -> Result<i32, Error> {
    let plant: Plant = read_doc(&a.plant)?;
    let k0: Controller = read_doc(&a.k0)?;
    let k1: Controller = read_doc(&a.k1)?;
    let opts = PathOptions { n_samples: a.samples, seed: g.seed, refine: a.refine };
    let r = match &a.bridge {
        Some(b) => {
            let k_red: Controller = read_doc(b)?;
            connect_via_bridge(&plant, &k0, &k1, a.gamma, &k_red, a.bridge_eig, &opts, tol)?
        }
        None => connect(&plant, &k0, &k1, a.gamma, &opts, tol)?,
    };
    emit_json(&g.out, &io::path_result(&r))?;
    Ok(0)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32, Error> {
    let g = &cli.global;
    let tol = g.tolerances();
    match &cli.command {
        Command::Example1 => run_example1(g, &tol),
        Command::Scan(a) => run_scan(g, a, &tol),
        Command::Norm(a) => run_norm(g, a, &tol),
        Command::Check(a) => run_check(g, a, &tol),
        Command::Certify(a) => run_certify(g, a, &tol),
        Command::Lift(a) => run_lift(g, a, &tol),
        Command::Reconstruct(a) => run_reconstruct(g, a, &tol),
        Command::Synthesize(a) => run_synthesize(g, a, &tol),
        Command::GammaStar(a) => run_gamma_star(g, a, &tol),
        Command::Path(a) => run_path(g, a, &tol),
    }
}

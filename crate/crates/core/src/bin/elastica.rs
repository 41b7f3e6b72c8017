use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::Serialize;
use serde_json::json;

use elastica::curve::PlanarCurve;
use elastica::energy::{energy_with_bar, BcKind, BoundaryCondition, EnergyDensity};
use elastica::harness::io::{curve_csv, load_curve, planar_value, suite_csv, to_json, write_curve, CurveFile};
use elastica::harness::{
    hypothesis_tol, instability_certificate, run_suite_c, run_suite_cp, stability_table, CertificateOptions, Scenario, SuiteReport, TableOptions,
};
use elastica::perturb::{
    default_js, flatcore_endpoint_shift, flatcore_loop_swap, global_rotation_competitor, local_rotation_family, pinned_loop_rescale_family,
    pinned_shift_family, spatial_reflection_competitor, spatial_rotation_family, Construction,
};
use elastica::profiles::{detect_well_periodic, fold_index};
use elastica::solver::{
    assemble_flatcore, gradient_flow, make_closed, make_helix, make_pinned_mode, ClosedKind, CriticalPoint, FlatCore, FlatCoreDecomposition,
    FlowOptions, NewtonOptions, PinnedKind, SolverOptions,
};
use elastica::Error;

const SEED_VAR: &str = "ELASTICA_SEED";
const DEFAULT_SEED: u64 = 7;

#[derive(Parser)]
#[command(name = "elastica", version, about = "p-elastica solver, cut-and-paste competitors and stability checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a curve: analytic shapes or solver modes.
    Make(MakeArgs),
    /// Solve for a constrained critical point.
    Solve(SolveArgs),
    /// Build one competitor from a curve.
    Perturb(PerturbArgs),
    /// Run a (C) or (C_p) suite over j, optionally followed by a flow certificate.
    Verify(VerifyArgs),
    /// Projected descent from a curve.
    Flow(FlowArgs),
    /// Stability classification table.
    Table(TableArgs),
    /// Validate, normalize or convert curve files.
    Io(IoArgs),
    /// Profile structure checks.
    Profiles(ProfilesArgs),
}

#[derive(Args)]
struct Output {
    /// Write the curve (or table) JSON here instead of stdout.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Also write a CSV (curve points, or suite rows).
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Circle,
    FigureEight,
    Sine,
    Helix,
}

#[derive(Args)]
struct MakeArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    /// Cover count (circles, figure-eights) or number of periods (sine).
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Sine amplitude.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.0)]
    pitch: f64,
    #[arg(long, default_value_t = 1.0)]
    turns: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BcArg {
    Pinned,
    Clamped,
    Closed,
}

impl From<BcArg> for BcKind {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Pinned => BcKind::Pinned,
            BcArg::Clamped => BcKind::Clamped,
            BcArg::Closed => BcKind::Closed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Arc,
    Loop,
    Circle,
    FigureEight,
    Flatcore,
}

#[derive(Args)]
struct FlatCoreArgs {
    /// Loop orientations, e.g. `+-`.
    #[arg(long, default_value = "+")]
    sigmas: String,
    /// Straight segment lengths L₀,…,L_N (one more than loops).
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    segments: Vec<f64>,
    /// Nodes per loop.
    #[arg(long, default_value_t = 1001)]
    loop_nodes: usize,
}

impl FlatCoreArgs {
    fn build(&self, p: f64) -> anyhow::Result<FlatCore> {
        let sigmas = self
            .sigmas
            .chars()
            .map(|c| match c {
                '+' => Ok(true),
                '-' => Ok(false),
                other => bail!("loop orientation must be + or -, got {other:?}"),
            })
            .collect::<anyhow::Result<Vec<bool>>>()?;
        let dec = FlatCoreDecomposition::new(sigmas, self.segments.clone())?;
        Ok(assemble_flatcore(p, &dec, self.loop_nodes)?)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    bc: BcArg,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Chord ratio for pinned modes.
    #[arg(long, default_value_t = 0.3)]
    r: f64,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Half-wave count (pinned) or cover count (closed).
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Accept exponents outside the conditioned range.
    #[arg(long)]
    force_p: bool,
    #[command(flatten)]
    flatcore: FlatCoreArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long, value_enum)]
    construction: Construction,
    /// Input curve JSON (not used by the flat-core constructions).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Energy density, `p:<exponent>` or a table file; defaults to `p:2`, or `p:<--p>` for flat-cores.
    #[arg(long)]
    density: Option<String>,
    /// Family parameter; the perturbation size is `1/j`.
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
    #[arg(long)]
    s3: Option<f64>,
    /// Reflection plane normal `x,y,z`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    omega: Option<Vec<f64>>,
    /// Rotation angle for spatial-rotate.
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<f64>,
    /// Tolerance for tangent-equality hypotheses; defaults to 1e-6 for p = 2 and 1e-3 otherwise.
    #[arg(long)]
    tol: Option<f64>,
    /// Loop pair index for flatcore-swap.
    #[arg(long)]
    index: Option<usize>,
    /// Exponent used to assemble flat-cores.
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[command(flatten)]
    flatcore: FlatCoreArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    perturb: PerturbArgs,
    /// j values; defaults to {10,20,40,80}/L.
    #[arg(long, value_delimiter = ',')]
    js: Option<Vec<f64>>,
    /// Follow a passing suite with a flow certificate from the largest j.
    #[arg(long)]
    certificate: bool,
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    #[arg(long, default_value_t = 20000)]
    budget: usize,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    bc: BcArg,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    /// Stop once the energy falls below this value.
    #[arg(long)]
    stop_below: Option<f64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.3)]
    r: f64,
    #[arg(long, default_value_t = 2001)]
    grid: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IoAction {
    /// Validate and print the normalized JSON.
    Check,
    /// Convert to point CSV.
    Csv,
}

#[derive(Args)]
struct IoArgs {
    #[arg(value_enum)]
    action: IoAction,
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfilesAction {
    Check,
}

#[derive(Args)]
struct ProfilesArgs {
    #[arg(value_enum)]
    action: ProfilesAction,
    input: PathBuf,
}

/// Seed from `ELASTICA_SEED`, falling back to a fixed default.
fn seed() -> anyhow::Result<u64> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_VAR} must be an unsigned integer, got {v:?}")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_curve(curve: CurveFile, out: &Output, report: Option<serde_json::Value>) -> anyhow::Result<()> {
    if let Some(csv) = &out.csv_out {
        std::fs::write(csv, curve_csv(&curve)?)?;
    }
    match (&out.json_out, report) {
        (Some(path), report) => {
            std::fs::write(path, write_curve(&curve)?)?;
            if let Some(r) = report {
                print!("{}", to_json(&r)?);
            }
        }
        (None, None) => print!("{}", write_curve(&curve)?),
        (None, Some(r)) => {
            let value = match &curve {
                CurveFile::Planar(c) => planar_value(c),
                CurveFile::Space(s) => elastica::harness::io::space_value(s),
            };
            print!("{}", to_json(&json!({ "curve": value, "report": r }))?);
        }
    }
    Ok(())
}

fn planar(path: &Path) -> anyhow::Result<PlanarCurve> {
    match load_curve(path)? {
        CurveFile::Planar(c) => Ok(c),
        CurveFile::Space(_) => bail!("{} holds a space curve; this command needs a planar one", path.display()),
    }
}

fn make(a: MakeArgs) -> anyhow::Result<()> {
    let curve = match a.shape {
        Shape::Circle => CurveFile::Planar(PlanarCurve::circle(a.count, a.length, a.grid)?),
        Shape::FigureEight => {
            let cp = make_closed(a.p, ClosedKind::FigureEight, a.count, a.length, &SolverOptions::with_n(a.grid))?;
            CurveFile::Planar(cp.curve)
        }
        Shape::Sine => {
            let w = 2.0 * std::f64::consts::PI * a.count as f64 / a.length;
            CurveFile::Planar(PlanarCurve::from_fn(a.length, a.grid, |s| a.amplitude * (w * s).sin())?)
        }
        Shape::Helix => CurveFile::Space(make_helix(a.radius, a.pitch, a.turns, a.grid)?),
    };
    emit_curve(curve, &a.out, None)
}

#[derive(Serialize)]
struct SolveReport {
    bc: BcKind,
    p: f64,
    mode: elastica::solver::ModeTag,
    n: usize,
    length: f64,
    energy: f64,
    energy_error_bar: f64,
    stationarity_residual: f64,
    multipliers: [f64; 2],
    seed: u64,
}

fn solve(a: SolveArgs) -> anyhow::Result<()> {
    let opts = SolverOptions { n: a.grid, newton: NewtonOptions { tol: a.tol, max_iter: a.max_iter }, force_p: a.force_p };
    let kind: BcKind = a.bc.into();
    let cp: CriticalPoint = match (a.mode, a.bc) {
        (ModeArg::Arc | ModeArg::Loop, BcArg::Pinned) => {
            let pk = if a.mode == ModeArg::Arc { PinnedKind::Arc } else { PinnedKind::Loop };
            make_pinned_mode(a.p, a.r, a.count, pk, a.length, &opts)?
        }
        (ModeArg::Circle, BcArg::Closed) => make_closed(a.p, ClosedKind::Circle, a.count, a.length, &opts)?,
        (ModeArg::FigureEight, BcArg::Closed) => make_closed(a.p, ClosedKind::FigureEight, a.count, a.length, &opts)?,
        (ModeArg::Flatcore, BcArg::Pinned | BcArg::Clamped) => a.flatcore.build(a.p)?.critical_point(kind)?,
        _ => return Err(Error::HypothesisViolated("mode and boundary condition do not match".into()).into()),
    };
    let bar = energy_with_bar(&cp.curve, &EnergyDensity::power(a.p))?.error_bar;
    let report = SolveReport {
        bc: kind,
        p: a.p,
        mode: cp.mode,
        n: cp.curve.n(),
        length: cp.length(),
        energy: cp.energy,
        energy_error_bar: bar,
        stationarity_residual: cp.residual,
        multipliers: [cp.multipliers.x, cp.multipliers.y],
        seed: seed()?,
    };
    emit_curve(CurveFile::Planar(cp.curve), &a.out, Some(serde_json::to_value(&report)?))
}

fn need<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| anyhow::anyhow!("--{flag} is required for this construction"))
}

impl PerturbArgs {
    fn is_flatcore(&self) -> bool {
        matches!(self.construction, Construction::FlatcoreShift | Construction::FlatcoreSwap)
    }

    fn density(&self) -> elastica::Result<EnergyDensity> {
        match &self.density {
            Some(spec) => EnergyDensity::parse(spec),
            None if self.is_flatcore() => Ok(EnergyDensity::power(self.p)),
            None => Ok(EnergyDensity::power(2.0)),
        }
    }
}

/// Builds the competitor for parameter `j` (ignored by single competitors).
fn competitor(a: &PerturbArgs, j: f64) -> anyhow::Result<(CurveFile, elastica::perturb::PerturbationReport)> {
    let f = a.density()?;
    let c = a.construction;
    let flat = a.is_flatcore();
    let tol = a.tol.unwrap_or_else(|| hypothesis_tol(if flat { a.p } else { f.p().unwrap_or(2.0) }));
    if flat {
        let fc = a.flatcore.build(a.p)?;
        let out = if c == Construction::FlatcoreShift {
            flatcore_endpoint_shift(&fc, j, &f, tol)?
        } else {
            flatcore_loop_swap(&fc, a.index, j, &f, tol)?
        };
        return Ok((CurveFile::Planar(out.curve), out.report));
    }
    let input = need(a.input.as_deref(), "input")?;
    match load_curve(input)? {
        CurveFile::Planar(curve) => {
            let out = match c {
                Construction::GlobalRot => global_rotation_competitor(&curve, need(a.s1, "s1")?, need(a.s2, "s2")?, &f, tol)?,
                Construction::LocalRot => local_rotation_family(&curve, need(a.s1, "s1")?, need(a.s3, "s3")?, j, &f, tol)?,
                Construction::PinnedShift => pinned_shift_family(&curve, j, &f, tol)?,
                Construction::LoopRescale => pinned_loop_rescale_family(&curve, None, j, &f)?,
                _ => bail!("{} needs a space curve", c.name()),
            };
            Ok((CurveFile::Planar(out.curve), out.report))
        }
        CurveFile::Space(curve) => {
            let out = match c {
                Construction::SpatialReflect => {
                    let w = need(a.omega.clone(), "omega")?;
                    if w.len() != 3 {
                        bail!("--omega needs three components");
                    }
                    spatial_reflection_competitor(&curve, need(a.s1, "s1")?, need(a.s2, "s2")?, Vector3::new(w[0], w[1], w[2]), tol)?
                }
                Construction::SpatialRotate => spatial_rotation_family(&curve, need(a.s1, "s1")?, need(a.s2, "s2")?, need(a.angle, "angle")?, tol)?,
                _ => bail!("{} needs a planar curve", c.name()),
            };
            Ok((CurveFile::Space(out.curve), out.report))
        }
    }
}

fn perturb(a: PerturbArgs) -> anyhow::Result<()> {
    let (curve, report) = competitor(&a, a.j.unwrap_or(f64::NAN))?;
    if let Some(path) = &a.report_out {
        std::fs::write(path, to_json(&report)?)?;
        emit_curve(curve, &a.out, None)
    } else {
        emit_curve(curve, &a.out, Some(serde_json::to_value(&report)?))
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    suite: SuiteReport,
    certificate: Option<serde_json::Value>,
}

/// Exit status: 0 when the suite (and certificate, if asked) passes, 3 otherwise.
fn verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let pa = &a.perturb;
    let (original, energy_original, bc) = if pa.is_flatcore() {
        let fc = pa.flatcore.build(pa.p)?;
        let kind = a.bc.map(BcKind::from).unwrap_or(if pa.construction == Construction::FlatcoreShift { BcKind::Pinned } else { BcKind::Clamped });
        let cp = fc.critical_point(kind)?;
        (fc.curve, cp.energy, cp.bc)
    } else {
        let curve = planar(need(pa.input.as_deref(), "input")?)?;
        let kind = a.bc.map(BcKind::from).unwrap_or(match pa.construction {
            Construction::PinnedShift | Construction::LoopRescale => BcKind::Pinned,
            _ => BcKind::Clamped,
        });
        let bc = match kind {
            BcKind::Pinned => BoundaryCondition::pinned_from(&curve)?,
            BcKind::Clamped => BoundaryCondition::clamped_from(&curve)?,
            BcKind::Closed => BoundaryCondition::closed(curve.length(), None)?,
        };
        let e = elastica::energy::bending_energy(&curve, pa.density()?.p().unwrap_or(2.0));
        (curve, e, bc)
    };
    let js = a.js.clone().unwrap_or_else(|| default_js(original.length()));
    let build = |j: f64| -> elastica::Result<elastica::perturb::Competitor<PlanarCurve>> {
        let (curve, report) = competitor(pa, j).map_err(|e| match e.downcast::<Error>() {
            Ok(err) => err,
            Err(other) => Error::HypothesisViolated(other.to_string()),
        })?;
        match curve {
            CurveFile::Planar(curve) => Ok(elastica::perturb::Competitor { curve, report }),
            CurveFile::Space(_) => Err(Error::HypothesisViolated("suites run on planar constructions".into())),
        }
    };
    let cp_kind = matches!(pa.construction, Construction::PinnedShift | Construction::FlatcoreShift);
    let id = pa.construction.name();
    let suite = if cp_kind { run_suite_cp(id, &original, &js, build)? } else { run_suite_c(id, &original, &js, build)? };
    let mut passed = suite.passed;
    let mut certificate = None;
    if a.certificate && suite.passed {
        let j = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = build(j)?;
        let p = pa.density()?.p().unwrap_or(2.0);
        let cert = instability_certificate(&original, energy_original, &start.curve, &bc, p, &CertificateOptions { budget: a.budget });
        certificate = Some(match cert {
            Ok(c) => serde_json::to_value(&c)?,
            Err(e) => {
                passed = false;
                json!({ "error": e.to_string() })
            }
        });
    }
    if let Some(path) = &pa.out.csv_out {
        std::fs::write(path, suite_csv(&suite)?)?;
    }
    emit(pa.out.json_out.as_deref(), &to_json(&VerifyOutput { suite, certificate })?)?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn flow(a: FlowArgs) -> anyhow::Result<()> {
    let curve = planar(&a.input)?;
    let bc = match a.bc {
        BcArg::Pinned => BoundaryCondition::pinned_from(&curve)?,
        BcArg::Clamped => BoundaryCondition::clamped_from(&curve)?,
        BcArg::Closed => BoundaryCondition::closed(curve.length(), None)?,
    };
    let trace = gradient_flow(&curve, &bc, a.p, &FlowOptions { budget: a.budget, stop_below: a.stop_below, ..FlowOptions::default() })?;
    let report = json!({
        "initial_energy": trace.initial_energy(),
        "final_energy": trace.final_direct,
        "steps": trace.step_sizes.len(),
        "stop": trace.stop,
        "max_energy_increase": trace.max_increase(),
        "max_constraint_residual": trace.constraint_residuals.iter().fold(0.0f64, |m, r| m.max(*r)),
    });
    emit_curve(CurveFile::Planar(trace.curve), &a.out, Some(report))
}

fn table(a: TableArgs) -> anyhow::Result<ExitCode> {
    let opts = TableOptions { n: a.grid, r: a.r, seed: seed()?, trials: a.trials, ..TableOptions::default() };
    let t = stability_table(a.scenario, a.p, &opts)?;
    emit(a.json_out.as_deref(), &to_json(&t)?)?;
    Ok(if t.mismatches == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn io(a: IoArgs) -> anyhow::Result<()> {
    let curve = load_curve(&a.input)?;
    match a.action {
        IoAction::Check => emit_curve(curve, &a.out, None),
        IoAction::Csv => emit(a.out.csv_out.as_deref(), &curve_csv(&curve)?),
    }
}

fn profiles(a: ProfilesArgs) -> anyhow::Result<()> {
    let ProfilesAction::Check = a.action;
    let curve = planar(&a.input)?;
    let well = detect_well_periodic(&curve, None).map(|w| serde_json::to_value(w)).map_err(|e| e.to_string());
    let fold = fold_index(&curve, None).map_err(|e| e.to_string());
    let value = json!({
        "well_periodic": match well { Ok(v) => v?, Err(e) => json!({ "error": e }) },
        "fold": match fold { Ok(f) => serde_json::to_value(f)?, Err(e) => json!({ "error": e }) },
    });
    print!("{}", to_json(&value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Make(a) => make(a).map(|_| ExitCode::SUCCESS),
        Command::Solve(a) => solve(a).map(|_| ExitCode::SUCCESS),
        Command::Perturb(a) => perturb(a).map(|_| ExitCode::SUCCESS),
        Command::Verify(a) => verify(a),
        Command::Flow(a) => flow(a).map(|_| ExitCode::SUCCESS),
        Command::Table(a) => table(a),
        Command::Io(a) => io(a).map(|_| ExitCode::SUCCESS),
        Command::Profiles(a) => profiles(a).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

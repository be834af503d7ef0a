//! `weightlab` command-line runner.
//!
//! Exit codes: 0 when every check passes, 1 when a property check fails
//! (each failing item is named on standard error), 2 for usage, config or
//! input errors.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use weightlab::csvio::{self, fmt_f64, Table};
use weightlab::dualspace::{norming_function, tuple_duality_constants, verify_duality_pairing};
use weightlab::extrapolate::{verify_extrapolation_pair, verify_mixed_extrapolation, PairKind};
use weightlab::intops::{theorem_experiment, ExperimentConfig};
use weightlab::kernels::{catalog, in_class_k, Certificate, KernelSpec, MembershipStatus};
use weightlab::lattice::{Grid1D, GridFunction, LatticeFunction, MeasuredAxis, MixedSpace};
use weightlab::maximal::{lattice_maximal, maximal_function};
use weightlab::plot::{render_svg, Series};
use weightlab::sbound::{estimate_ls_bound, rademacher_bound_estimate, OperatorFamily, SearchConfig, SANDWICH_TOL};
use weightlab::suite::{run_suite, summary_table, Size};
use weightlab::weights::{ap_constant, power_weight, Weight};
use weightlab::rng;

pub use config::{experiment_from_ini, experiment_meta};

#[derive(Parser, Debug)]
#[command(name = "weightlab", version, about = "Weighted norm inequalities on finite grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// A_p constant of a weight given as `cell,value` CSV.
    Ap(ApArgs),
    /// Maximal function of a grid function, or fiberwise of a lattice function.
    Maximal(MaximalArgs),
    /// Class-K membership of a catalog kernel.
    KernelCheck(KernelArgs),
    /// ℓ^s (or Rademacher) bound search for a family of matrices.
    Lsbound(LsboundArgs),
    /// Extrapolation verifier on power weights.
    Extrapolate(ExtrapolateArgs),
    /// Integral-operator experiment from an INI configuration.
    Intop(IntopArgs),
    /// Norming witness and tuple duality constants of a mixed space.
    Duality(DualityArgs),
    /// The full property battery.
    Suite(SuiteArgs),
}

#[derive(Args, Debug)]
struct ApArgs {
    #[arg(long)]
    weight: PathBuf,
    #[arg(long)]
    p: String,
}

#[derive(Args, Debug)]
struct MaximalArgs {
    /// Scalar input, `cell,value`.
    #[arg(long, conflicts_with = "fiber_csv")]
    f: Option<PathBuf>,
    /// Lattice input with columns `i0` (grid cell), `i1…` (Ω indices), `value`.
    #[arg(long)]
    fiber_csv: Option<PathBuf>,
    /// Expected Ω shape for `--fiber-csv`, e.g. `3,2`.
    #[arg(long, requires = "fiber_csv")]
    axes: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// gaussian, box, exponential or one_sided_exponential.
    #[arg(long)]
    name: String,
    /// Gaussian variance parameter.
    #[arg(long)]
    t: Option<f64>,
    /// Exponential rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Box half-width in cells.
    #[arg(long)]
    half_width: Option<usize>,
    /// Cells of the grid on [-1, 1].
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Total mass (may exceed 1 to probe refutation).
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long, default_value_t = 256)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kernel table `offset,value`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchFlags {
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
}

impl SearchFlags {
    fn apply(&self, mut cfg: SearchConfig) -> Result<SearchConfig> {
        cfg.n_max = self.n_max.unwrap_or(cfg.n_max);
        cfg.restarts = self.restarts.unwrap_or(cfg.restarts);
        cfg.iterations = self.iterations.unwrap_or(cfg.iterations);
        cfg.step = self.step.unwrap_or(cfg.step);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct LsboundArgs {
    /// Family table `member,row,col,value`.
    #[arg(long)]
    family: PathBuf,
    /// One exponent or a comma-separated sweep; `inf` allowed.
    #[arg(long, default_value = "2")]
    s: String,
    /// Exponent of the counting-measure space the matrices act on.
    #[arg(long, default_value = "2")]
    q: String,
    /// generic, multiplication or weighted_composition.
    #[arg(long, default_value = "generic")]
    structure: String,
    /// Also run the Rademacher search.
    #[arg(long)]
    rademacher: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    search: SearchFlags,
    /// Table `s,lower,upper,certificate_kind`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Witness tuple `s,slot,member,cell,value`.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// SVG of s ↦ lower bound.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtrapolateArgs {
    #[arg(long, default_value = "2")]
    p0: String,
    #[arg(long)]
    p: String,
    #[arg(long, default_value = "power:0,0.3,0.6,0.9")]
    weights: String,
    /// Cells of the grid on [-1, 1].
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 24)]
    samples: usize,
    /// identity, maximal or reversed.
    #[arg(long, default_value = "maximal")]
    pair: String,
    /// Ω shape for the mixed verifier, e.g. `3,2`.
    #[arg(long, requires = "q")]
    axes: Option<String>,
    /// Ω exponents for the mixed verifier.
    #[arg(long, requires = "axes")]
    q: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IntopArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    s: Option<String>,
}

#[derive(Args, Debug)]
struct DualityArgs {
    #[arg(long, default_value = "4,3")]
    axes: String,
    #[arg(long, default_value = "2,3")]
    q: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Tuple length for the X(ℓ^r_N) comparison.
    #[arg(long, default_value_t = 4)]
    tuple: usize,
    #[arg(long, default_value = "2")]
    r: String,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Positional form of `--size`.
    #[arg(value_name = "SIZE", conflicts_with = "size")]
    size_pos: Option<String>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// small or full.
    #[arg(long)]
    size: Option<String>,
    /// Summary CSV path (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Names of failed property checks.
type Failures = Vec<String>;

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            table.write_to(std::io::BufWriter::new(file))?;
        }
        None => table.write_to(std::io::stdout().lock())?,
    }
    Ok(())
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn read_input<T>(path: &Path, read: impl FnOnce(fs::File) -> weightlab::Result<T>) -> Result<T> {
    read(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn with_meta(mut table: Table, meta: &[(&str, String)]) -> Table {
    let mut head: Vec<(String, String)> = meta.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    head.append(&mut table.meta);
    table.meta = head;
    table
}

fn shape(raw: &str, what: &str) -> Result<Vec<usize>> {
    config::size_list(raw, what)
}

fn counting_space(shape: &[usize], qs: &[f64]) -> Result<MixedSpace> {
    if shape.len() != qs.len() {
        bail!("{} axes but {} exponents", shape.len(), qs.len());
    }
    let axes = shape.iter().map(|n| MeasuredAxis::counting(*n)).collect::<weightlab::Result<Vec<_>>>()?;
    Ok(MixedSpace::new(axes, qs.to_vec())?)
}

fn cmd_ap(a: &ApArgs) -> Result<Failures> {
    let p = config::exponent(&a.p, "p", false)?;
    let values = read_input(&a.weight, csvio::read_cell_values)?;
    let w = Weight::new(Grid1D::unit(values.len())?, values)?;
    let rep = ap_constant(&w, p)?;
    println!("{:?}", rep.constant);
    println!("witness cells [{}, {}]", rep.witness.0, rep.witness.1);
    Ok(vec![])
}

fn cmd_maximal(a: &MaximalArgs) -> Result<Failures> {
    let out = a.out.as_deref();
    if let Some(path) = &a.f {
        let values = read_input(path, csvio::read_cell_values)?;
        let f = GridFunction::new(Grid1D::unit(values.len())?, values)?;
        let mf = maximal_function(&f);
        let t = with_meta(csvio::cell_values_table(mf.values()), &[("command", "maximal".into()), ("input", path.display().to_string())]);
        emit(&t, out)?;
        return Ok(vec![]);
    }
    let path = a.fiber_csv.as_ref().ok_or_else(|| anyhow!("one of --f or --fiber-csv is required"))?;
    let (dims, values) = read_input(path, csvio::read_tensor)?;
    if dims.len() < 2 {
        bail!("--fiber-csv needs index columns i0 and at least i1");
    }
    if let Some(axes) = &a.axes {
        let want = shape(axes, "axes")?;
        if want != dims[1..] {
            bail!("--axes {axes} does not match the Ω shape {:?} of the input", &dims[1..]);
        }
    }
    let omega = counting_space(&dims[1..], &vec![2.0; dims.len() - 1])?;
    let lf = LatticeFunction::new(Grid1D::unit(dims[0])?, omega, values)?;
    let mf = lattice_maximal(&lf);
    let t = with_meta(
        csvio::tensor_table(&dims, mf.values()),
        &[("command", "maximal".into()), ("input", path.display().to_string())],
    );
    emit(&t, out)?;
    Ok(vec![])
}

fn cmd_kernel_check(a: &KernelArgs) -> Result<Failures> {
    let param = match a.name.as_str() {
        "gaussian" => a.t.ok_or_else(|| anyhow!("gaussian needs --t"))?,
        "box" => a.half_width.ok_or_else(|| anyhow!("box needs --half-width"))? as f64,
        "exponential" | "one_sided_exponential" => a.lambda.ok_or_else(|| anyhow!("{} needs --lambda", a.name))?,
        other => bail!("unknown kernel name '{other}'"),
    };
    if !(a.mass >= 0.0 && a.mass.is_finite()) {
        bail!("--mass must be a nonnegative number");
    }
    let spec = KernelSpec::parse(&a.name, param)?;
    let grid = Grid1D::spanning(-1.0, 1.0, a.n)?;
    let k = catalog(spec, None, &grid)?.scaled(a.mass);
    let verdict = in_class_k(&k, a.trials, a.seed);
    println!("kernel {}({}) mass {} on {} cells", spec.name(), param, a.mass, a.n);
    println!("status {}", verdict.status.as_str());
    match &verdict.certificate {
        Certificate::Majorant { integral, .. } => println!("certificate majorant integral {integral:?}"),
        Certificate::Counterexample { cell, violation, f } => {
            println!("counterexample cell {cell} violation {violation:?} support {}", f.len())
        }
        Certificate::None { integral } => println!("majorant integral {integral:?}"),
    }
    if let Some(out) = &a.out {
        let t = with_meta(
            csvio::kernel_table(&k),
            &[
                ("command", "kernel-check".into()),
                ("name", spec.name().into()),
                ("param", fmt_f64(param)),
                ("mass", fmt_f64(a.mass)),
                ("n", a.n.to_string()),
                ("seed", a.seed.to_string()),
                ("status", verdict.status.as_str().into()),
            ],
        );
        emit(&t, Some(out))?;
    }
    Ok(match verdict.status {
        MembershipStatus::Certified => vec![],
        other => vec![format!("kernel {} not certified in class K ({})", spec.name(), other.as_str())],
    })
}

fn cmd_lsbound(a: &LsboundArgs) -> Result<Failures> {
    let s_list = config::exponent_list(&a.s, "s", true)?;
    let q = config::exponent(&a.q, "q", true)?;
    let cfg = a.search.apply(SearchConfig::default())?;
    let mats = read_input(&a.family, csvio::read_family)?;
    let space = MixedSpace::sequence(mats[0].nrows(), q)?;
    let family = OperatorFamily::dense(mats, space)?.with_structure_tag(&a.structure)?;
    let meta = [
        ("command", "lsbound".to_string()),
        ("family", a.family.display().to_string()),
        ("structure", a.structure.clone()),
        ("q", fmt_f64(q)),
        ("s", a.s.clone()),
        ("seed", a.seed.to_string()),
        (
            "search",
            format!("n_max={},restarts={},iterations={},step={}", cfg.n_max, cfg.restarts, cfg.iterations, cfg.step),
        ),
    ];
    let mut table = with_meta(Table::new(&["s", "lower", "upper", "certificate_kind"]), &meta);
    let mut witness = with_meta(Table::new(&["s", "slot", "member", "cell", "value"]), &meta);
    let mut failures = vec![];
    let mut points = vec![];
    for &s in &s_list {
        let est = estimate_ls_bound(&family, s, &cfg, a.seed)?;
        let (upper, kind) = match &est.upper {
            Some(c) => (fmt_f64(c.value), c.kind.as_str().to_string()),
            None => (String::new(), String::new()),
        };
        println!("s {} lower {:?} upper {}", fmt_f64(s), est.lower, if upper.is_empty() { "none" } else { &upper });
        if let Some(c) = &est.upper {
            if est.lower > c.value + SANDWICH_TOL {
                failures.push(format!("lower bound {} exceeds certificate {} at s = {s}", est.lower, c.value));
            }
        }
        table.push(vec![fmt_f64(s), fmt_f64(est.lower), upper, kind]);
        for (slot, (member, x)) in est.assignment.iter().zip(&est.tuple).enumerate() {
            for (cell, v) in x.iter().enumerate() {
                witness.push(vec![fmt_f64(s), slot.to_string(), member.to_string(), cell.to_string(), fmt_f64(*v)]);
            }
        }
        points.push((s, est.lower));
    }
    if a.rademacher {
        let est = rademacher_bound_estimate(&family, &cfg, a.seed)?;
        println!("rademacher lower {:?} (exact average {})", est.lower, est.exact_average);
    }
    emit(&table, a.out.as_deref())?;
    if let Some(path) = &a.witness {
        emit(&witness, Some(path))?;
    }
    if let Some(path) = &a.plot {
        let svg = render_svg(&[Series::new("lower bound", points)], "l^s bound search", "s", "lower bound")?;
        fs::write(path, svg).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(failures)
}

fn cmd_extrapolate(a: &ExtrapolateArgs) -> Result<Failures> {
    let p0 = config::exponent(&a.p0, "p0", false)?;
    let ps = config::exponent_list(&a.p, "p", false)?;
    let powers = config::power_weights(&a.weights)?;
    let kind = PairKind::parse(&a.pair)?;
    let grid = Grid1D::spanning(-1.0, 1.0, a.n)?;
    let weights: Vec<Weight> = powers.iter().map(|p| power_weight(*p, &grid)).collect::<weightlab::Result<_>>()?;
    let report = match (&a.axes, &a.q) {
        (Some(axes), Some(q)) => {
            let space = counting_space(&shape(axes, "axes")?, &config::exponent_list(q, "q", true)?)?;
            verify_mixed_extrapolation(kind, p0, &ps, &space, &weights, a.samples, a.seed)?
        }
        _ => verify_extrapolation_pair(kind, p0, &ps, &weights, a.samples, a.seed)?,
    };
    let mut t = with_meta(
        Table::new(&["phase", "p", "ap_constant", "ratio"]),
        &[
            ("command", "extrapolate".into()),
            ("p0", fmt_f64(p0)),
            ("p", a.p.clone()),
            ("weights", a.weights.clone()),
            ("n", a.n.to_string()),
            ("samples", a.samples.to_string()),
            ("pair", kind.name().into()),
            ("axes", a.axes.clone().unwrap_or_default()),
            ("q", a.q.clone().unwrap_or_default()),
            ("seed", a.seed.to_string()),
            ("factor", fmt_f64(report.factor)),
            ("verdict", report.verdict.to_string()),
        ],
    );
    for (phase, p, ap, ratio) in report.rows() {
        t.push(vec![phase.into(), fmt_f64(p), fmt_f64(ap), fmt_f64(ratio)]);
    }
    emit(&t, a.out.as_deref())?;
    if a.out.is_some() {
        println!("factor {} verdict {}", fmt_f64(report.factor), report.verdict);
        for block in &report.conclusions {
            let favored = block.favored.map(|f| f.name()).unwrap_or("none");
            println!("p {} favored form {favored}", fmt_f64(block.p));
        }
    }
    Ok(if report.verdict {
        vec![]
    } else {
        vec![format!("extrapolation verdict failed ({} axes)", report.axes)]
    })
}

fn cmd_intop(a: &IntopArgs) -> Result<Failures> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            experiment_from_ini(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &a.p {
        cfg.p = config::exponent(p, "p", false)?;
    }
    if let Some(q) = &a.q {
        cfg.q = config::exponent(q, "q", false)?;
    }
    if let Some(s) = &a.s {
        cfg.s_list = config::exponent_list(s, "s", true)?;
    }
    let rep = theorem_experiment(&cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let mut meta: Vec<(String, String)> = vec![("command".into(), "intop".into())];
    meta.extend(experiment_meta(&cfg));
    meta.push(("family_label".into(), rep.family_label.clone()));
    let meta_ref: Vec<(&str, String)> = meta.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();

    let mut failures = vec![];
    let mut t = with_meta(Table::new(&["s", "ap_constant", "lower", "upper", "certificate_kind"]), &meta_ref);
    for row in &rep.rows {
        if let Some(u) = row.upper {
            if row.lower > u {
                failures.push(format!("lower {} above certificate {u} at s = {}, power {}", row.lower, row.s, row.power));
            }
        }
        t.push(vec![
            fmt_f64(row.s),
            fmt_f64(row.ap_constant),
            fmt_f64(row.lower),
            row.upper.map(fmt_f64).unwrap_or_default(),
            row.certificate_kind.unwrap_or("").to_string(),
        ]);
    }
    emit(&t, Some(&a.out.join("intop.csv")))?;

    let mut kt = with_meta(Table::new(&["kernel", "param", "status"]), &meta_ref);
    for (name, param, status) in &rep.kernels {
        kt.push(vec![name.clone(), fmt_f64(*param), status.to_string()]);
    }
    emit(&kt, Some(&a.out.join("kernels.csv")))?;

    if !rep.rademacher.is_empty() {
        let mut rt = with_meta(Table::new(&["power", "ap_constant", "budget", "lower"]), &meta_ref);
        for r in &rep.rademacher {
            rt.push(vec![fmt_f64(r.power), fmt_f64(r.ap_constant), r.budget.to_string(), fmt_f64(r.lower)]);
        }
        emit(&rt, Some(&a.out.join("rademacher.csv")))?;
    }
    if !rep.chains.is_empty() {
        let mut ct = with_meta(
            Table::new(&["kernel", "power", "pass", "worst_minkowski", "worst_maximal", "worst_norm_ratio", "rescale"]),
            &meta_ref,
        );
        for (name, power, c) in &rep.chains {
            if !c.pass {
                failures.push(format!("pointwise chain fails for kernel {name} at power {power}"));
            }
            ct.push(vec![
                name.clone(),
                fmt_f64(*power),
                c.pass.to_string(),
                fmt_f64(c.worst_minkowski),
                fmt_f64(c.worst_maximal),
                fmt_f64(c.worst_norm_ratio),
                fmt_f64(c.rescale),
            ]);
        }
        emit(&ct, Some(&a.out.join("chain.csv")))?;
    }
    if !rep.rows.is_empty() {
        let mut series = vec![];
        for power in &cfg.weight_powers {
            let pts: Vec<(f64, f64)> = rep
                .rows
                .iter()
                .filter(|r| r.power == *power && r.s.is_finite())
                .map(|r| (r.s, r.lower))
                .collect();
            series.push(Series::new(format!("|t|^{power}"), pts));
        }
        let svg = render_svg(&series, "integral operator l^s lower bounds", "s", "lower bound")?;
        fs::write(a.out.join("intop.svg"), svg)?;
    }
    println!("family {}; {} rows written to {}", rep.family_label, rep.rows.len(), a.out.display());
    Ok(failures)
}

fn cmd_duality(a: &DualityArgs) -> Result<Failures> {
    let dims = shape(&a.axes, "axes")?;
    let qs = config::exponent_list(&a.q, "q", false)?;
    let r = config::exponent(&a.r, "r", true)?;
    let space = counting_space(&dims, &qs)?;
    let mut g = rng::signed_vec(&mut rng::seeded(a.seed), space.dim());
    if g.iter().all(|v| *v == 0.0) {
        g[0] = 1.0;
    }
    let w = norming_function(&g, &space)?;
    let pairing = verify_duality_pairing(&g, &space, a.trials, a.seed)?;
    let tuples = tuple_duality_constants(&space, a.tuple, r, a.trials, a.seed)?;
    println!("witness gap {:e}", w.holder_gap());
    println!("pairing {:?} dual norm {:?} sampled max {:?}", w.pairing, pairing.dual_norm, pairing.sampled_max);
    println!(
        "tuple N {} r {}: l1/lr identical {:?}, lr/linf identical {:?}, disjoint {}",
        a.tuple,
        fmt_f64(r),
        tuples.identical_one_over_r,
        tuples.identical_r_over_inf,
        tuples.disjoint_r_over_inf.map(fmt_f64).unwrap_or_else(|| "n/a".into())
    );
    let mut failures = vec![];
    if w.holder_gap() > 1e-8 {
        failures.push(format!("norming witness gap {}", w.holder_gap()));
    }
    if !pairing.pass {
        failures.push("duality pairing check".into());
    }
    if !tuples.pass() {
        failures.push("tuple duality chain".into());
    }
    Ok(failures)
}

fn cmd_suite(a: &SuiteArgs) -> Result<Failures> {
    let size = Size::parse(a.size.as_deref().or(a.size_pos.as_deref()).unwrap_or("small"))?;
    let outcomes = run_suite(a.seed, size)?;
    emit(&summary_table(&outcomes, a.seed, size), a.out.as_deref())?;
    Ok(outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("criterion {} {}: {}", o.id, o.name, o.detail))
        .collect())
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("WEIGHTLAB_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| anyhow!("WEIGHTLAB_THREADS must be a positive integer, got `{raw}`"))?;
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Ap(a) => cmd_ap(a),
        Command::Maximal(a) => cmd_maximal(a),
        Command::KernelCheck(a) => cmd_kernel_check(a),
        Command::Lsbound(a) => cmd_lsbound(a),
        Command::Extrapolate(a) => cmd_extrapolate(a),
        Command::Intop(a) => cmd_intop(a),
        Command::Duality(a) => cmd_duality(a),
        Command::Suite(a) => cmd_suite(a),
    });
    let _ = std::io::stdout().flush();
    match result {
        Ok(failures) if failures.is_empty() => 0,
        Ok(failures) => {
            for f in failures {
                eprintln!("check failed: {f}");
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

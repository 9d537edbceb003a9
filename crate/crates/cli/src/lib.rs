//! Command-line front end. Every subcommand emits one `ExperimentReport`,
//! as pretty JSON by default or CSV with `--csv`.
//!
//! Exit codes: 0 success, 1 verdict failure, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use p2dgl_core::dimension::{
    box_dimension_from_counts, s_alpha_defining, s_m_alpha_defining, solve_mbonacci, solve_s_alpha, solve_s_m_alpha,
    uniform_grid,
};
use p2dgl_core::fractal::{
    construct_e_point, count_words, gaps_at_rank, holder_check, limsup_point_check, measure_axioms, write_cylinder_csv,
    SpecialDigitChoice,
};
use p2dgl_core::rng::{parse_seed, seed_from_env};
use p2dgl_core::sampler::{
    bb_experiment, digit_law_test, ln_trajectory, max_digit_experiment, pushforward_uniformity_test,
};
use p2dgl_core::{
    count_cylinders_by_length, cylinder, expand, expand_periodic, s_alpha_curve, sample_stream, ConstructionSpec,
    DigitStream, DigitWord, Error, ExperimentReport, PhiSpec, RationalPoint, Table, DEFAULT_SEED,
};

#[derive(Debug, Parser)]
#[command(
    name = "p2dgl",
    version,
    about = "Experiments on dyadic digit expansions x = Σ 2^-(d1+...+di)"
)]
pub struct Cli {
    /// Emit CSV (the report's table, or its paired statistics) instead of JSON
    #[arg(long, global = true)]
    pub csv: bool,

    /// Master seed, decimal or 0x-hex; overrides P2DGL_SEED
    #[arg(long, global = true, value_parser = seed_arg)]
    pub seed: Option<u64>,

    /// Omit the timestamp so identical runs give byte-identical output
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

fn seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).ok_or_else(|| format!("invalid seed {s:?}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Digits of a rational point under the doubling-type map T x = 2^d x - 1
    Expand(ExpandArgs),
    /// Exact endpoints and length of the cylinder of a digit word
    Cylinder(CylinderArgs),
    /// Digits of a Lebesgue-random point and their running maximum
    Sample(SampleArgs),
    /// Geometric digit law and pairwise independence under Lebesgue measure
    DigitLaw(DigitLawArgs),
    /// Uniformity of the image of uniform points under T
    Pushforward(PushforwardArgs),
    /// Hit counts of dn >= φ(n) per dyadic window against the exact product oracle
    BorelBernstein(BorelBernsteinArgs),
    /// Law of the largest digit among the first N against its exact CDF
    MaxDigit(MaxDigitArgs),
    /// Dimension number s(α), or s_M(α) with --m
    Dimension(DimensionArgs),
    /// The curve α -> s(α) on a uniform grid
    Curve(CurveArgs),
    /// The M-bonacci constant and the dimension of bounded-digit points
    Mbonacci(MbonacciArgs),
    /// Growth rate of admissible cylinder counts by digit sum
    Boxcount(BoxcountArgs),
    /// Deterministic points of the Cantor-type constructions and their trajectories
    Construct(ConstructArgs),
    /// Exact gap bounds between same-rank fundamental intervals
    Gaps(GapsArgs),
    /// Mass distribution axioms and the Hölder-type bound on fundamental intervals
    MeasureCheck(MeasureCheckArgs),
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Point in (0, 1], as p/q, a decimal or an integer
    #[arg(long)]
    pub x: String,
    /// Number of digits
    #[arg(long, default_value_t = 20)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct CylinderArgs {
    /// Comma-separated digits, each >= 1
    #[arg(long, value_delimiter = ',', required = true)]
    pub word: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Stream index under the master seed
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Args)]
pub struct DigitLawArgs {
    /// Number of digits sampled
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Largest digit value tested individually
    #[arg(long, default_value_t = 12)]
    pub kmax: u32,
}

#[derive(Debug, Args)]
pub struct PushforwardArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Points are k / 2^bits with uniform k
    #[arg(long, default_value_t = 30)]
    pub bits: u32,
    /// Number of applications of T
    #[arg(long, default_value_t = 1)]
    pub iterations: u32,
}

#[derive(Debug, Args)]
pub struct BorelBernsteinArgs {
    /// Threshold, e.g. "log2n + log2log n" or "0.5*n^0.5"
    #[arg(long)]
    pub phi: String,
    /// Independent streams
    #[arg(long, default_value_t = 500)]
    pub seeds: u64,
    /// Horizon N
    #[arg(long = "N", default_value_t = 100_000)]
    pub horizon: u64,
    /// Allowed deviation of each window's hit fraction
    #[arg(long, default_value_t = 0.05)]
    pub window_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct MaxDigitArgs {
    #[arg(long, default_value_t = 1000)]
    pub seeds: u64,
    #[arg(long = "N", default_value_t = 1_000_000)]
    pub horizon: u64,
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Restrict free digits to 1..=M
    #[arg(long)]
    pub m: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 10.0)]
    pub max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Also write the alpha,s_alpha columns to this CSV file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MbonacciArgs {
    #[arg(long)]
    pub m: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    F,
    E,
    Bounded,
}

/// A construction, either from a key=value file or from flags.
#[derive(Debug, Args)]
pub struct SpecArgs {
    /// key=value spec file (flavor, M, alpha, nk | K | horizon, r, t)
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub flavor: Option<FlavorArg>,
    /// Digit bound M at free positions
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Number of greedy n_k terms (F flavor)
    #[arg(long)]
    pub terms: Option<usize>,
    /// Exponent r (E flavor)
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Special positions n_k = k^t (E flavor)
    #[arg(long, default_value_t = 4)]
    pub t: u32,
}

impl SpecArgs {
    /// The spec, with enough F-flavor terms to describe positions up to `reach`.
    fn build(&self, default: FlavorArg, reach: u64) -> Result<ConstructionSpec, Error> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            return text.parse();
        }
        match self.flavor.unwrap_or(default) {
            FlavorArg::Bounded => ConstructionSpec::bounded(self.m),
            FlavorArg::E => ConstructionSpec::e_flavor(self.m, self.r, self.alpha, self.t),
            FlavorArg::F => match self.terms {
                Some(k) => ConstructionSpec::f_flavor_greedy(self.m, self.alpha, k),
                None => ConstructionSpec::f_flavor_covering(self.m, self.alpha, reach),
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct BoxcountArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Largest digit sum counted
    #[arg(long, default_value_t = 200)]
    pub j_max: usize,
    /// Expected slope; adds a paired statistic
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChoiceArg {
    Min,
    Max,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Length of the constructed word
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Digit used at every free position
    #[arg(long, default_value_t = 1)]
    pub fill: u32,
    /// Digit taken from each forced range (F flavor)
    #[arg(long, value_enum, default_value_t = ChoiceArg::Max)]
    pub choice: ChoiceArg,
    /// Write every fundamental interval of this rank to --out as CSV
    #[arg(long, requires = "out")]
    pub dump_rank: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct GapsArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Check ranks 0..=rank
    #[arg(long, default_value_t = 12)]
    pub rank: u64,
    /// Largest number of words enumerated at one rank
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct MeasureCheckArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Largest rank; defaults to the largest rank within the budget
    #[arg(long)]
    pub rank: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(message: String) -> Self {
        Outcome {
            code: 2,
            stdout: String::new(),
            stderr: message,
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome::usage(text),
            };
        }
    };
    let seed = cli.seed.or_else(seed_from_env).unwrap_or(DEFAULT_SEED);
    let result = match cli.threads {
        Some(0) => Err(Error::Precondition("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, seed)),
            Err(e) => Err(Error::Io(e.to_string())),
        },
        None => dispatch(&cli.command, seed),
    };
    let mut report = match result {
        Ok(r) => r,
        Err(e) => return Outcome::usage(format!("error: {e}\n")),
    };
    report.seed = seed;
    if !cli.no_timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        report.timestamp = Some(format!("unix:{secs}"));
    }
    let stdout = if cli.csv {
        let mut buf = Vec::new();
        if let Err(e) = report.write_csv(&mut buf) {
            return Outcome::usage(format!("error: {e}\n"));
        }
        String::from_utf8(buf).expect("csv output is utf-8")
    } else {
        report.to_json() + "\n"
    };
    if report.passed() {
        Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    } else {
        Outcome {
            code: 1,
            stdout,
            stderr: format!("verdict: fail ({})\n", report.failures().join(", ")),
        }
    }
}

fn dispatch(cmd: &Command, seed: u64) -> Result<ExperimentReport, Error> {
    match cmd {
        Command::Expand(a) => cmd_expand(a),
        Command::Cylinder(a) => cmd_cylinder(a),
        Command::Sample(a) => cmd_sample(a, seed),
        Command::DigitLaw(a) => {
            let mut r = digit_law_test(seed, a.samples, a.kmax)?;
            r.param("samples", a.samples).param("kmax", a.kmax);
            Ok(r)
        }
        Command::Pushforward(a) => {
            let mut r = pushforward_uniformity_test(seed, a.samples, a.bits, a.iterations)?;
            r.param("samples", a.samples)
                .param("bits", a.bits)
                .param("iterations", a.iterations);
            Ok(r)
        }
        Command::BorelBernstein(a) => {
            let phi: PhiSpec = a.phi.parse()?;
            let mut r = bb_experiment(&phi, a.seeds, a.horizon, seed, a.window_tolerance)?;
            r.param("phi", phi.to_string())
                .param("seeds", a.seeds)
                .param("N", a.horizon)
                .param("window_tolerance", a.window_tolerance);
            Ok(r)
        }
        Command::MaxDigit(a) => {
            let mut r = max_digit_experiment(seed, a.seeds, a.horizon)?;
            r.param("seeds", a.seeds).param("N", a.horizon);
            Ok(r)
        }
        Command::Dimension(a) => cmd_dimension(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Mbonacci(a) => cmd_mbonacci(a),
        Command::Boxcount(a) => cmd_boxcount(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Gaps(a) => cmd_gaps(a),
        Command::MeasureCheck(a) => cmd_measure_check(a),
    }
}

fn cmd_expand(a: &ExpandArgs) -> Result<ExperimentReport, Error> {
    let x: RationalPoint = a.x.parse()?;
    let word = expand(&x, a.n);
    let periodic = expand_periodic(&x);
    let mut r = ExperimentReport::new("expand", 0, 1, a.n as u64);
    r.param("x", x.to_string()).param("n", a.n);
    r.diagnostic("digits", word.digits())
        .diagnostic("preperiod", periodic.preperiod.digits())
        .diagnostic("period", periodic.period.digits())
        .diagnostic("periodic", true);
    let mut t = Table::new(["i", "digit", "cylinder_left", "cylinder_right"]);
    for i in 1..=word.len() {
        let c = cylinder(&DigitWord::new(word.digits()[..i].to_vec())?)?;
        t.push(vec![
            i as f64,
            f64::from(word.digits()[i - 1]),
            c.left.to_f64(),
            c.right.to_f64(),
        ]);
    }
    r.set_table(t);
    Ok(r)
}

fn cmd_cylinder(a: &CylinderArgs) -> Result<ExperimentReport, Error> {
    let word = DigitWord::new(a.word.clone())?;
    let c = cylinder(&word)?;
    let mut r = ExperimentReport::new("cylinder", 0, 1, word.len() as u64);
    r.param("word", word.digits());
    r.diagnostic("left", c.left.to_string())
        .diagnostic("right", c.right.to_string())
        .diagnostic("length", c.length.to_string())
        .diagnostic("length_log2", -(word.digit_sum() as f64))
        .diagnostic("left_f64", c.left.to_f64())
        .diagnostic("right_f64", c.right.to_f64());
    Ok(r)
}

fn cmd_sample(a: &SampleArgs, seed: u64) -> Result<ExperimentReport, Error> {
    let digits = if a.stream == 0 {
        sample_stream(seed).take_vec(a.n)
    } else {
        DigitStream::new(seed, a.stream).take_vec(a.n)
    };
    let l = ln_trajectory(digits.iter().copied(), a.n)?;
    let mut r = ExperimentReport::new("sample", seed, 1, a.n as u64);
    r.param("n", a.n).param("stream", a.stream);
    let mut t = Table::new(["n", "digit", "L_n"]);
    for (i, (&d, &m)) in digits.iter().zip(l.values()).enumerate() {
        t.push(vec![(i + 1) as f64, f64::from(d), f64::from(m)]);
    }
    r.diagnostic("L_N", l.last());
    r.set_table(t);
    Ok(r)
}

const ROOT_TOLERANCE: f64 = 1e-10;

fn cmd_dimension(a: &DimensionArgs) -> Result<ExperimentReport, Error> {
    let mut r = ExperimentReport::new("dimension", 0, 1, 0);
    r.param("alpha", a.alpha);
    let (res, residual) = match a.m {
        Some(m) => {
            r.param("M", m);
            let res = solve_s_m_alpha(m, a.alpha)?;
            (res, s_m_alpha_defining(m, a.alpha, res.root))
        }
        None => {
            let res = solve_s_alpha(a.alpha)?;
            (res, s_alpha_defining(a.alpha, res.root))
        }
    };
    r.diagnostic("s", res.root)
        .diagnostic("bracket", res.bracket)
        .diagnostic("iterations", res.iterations);
    r.bound("defining_residual", residual, -ROOT_TOLERANCE, ROOT_TOLERANCE);
    Ok(r)
}

fn cmd_curve(a: &CurveArgs) -> Result<ExperimentReport, Error> {
    if !(a.step > 0.0 && a.max >= 0.0) {
        return Err(Error::Precondition("need --step > 0 and --max >= 0".into()));
    }
    let curve = s_alpha_curve(&uniform_grid(a.max, a.step))?;
    if let Some(path) = &a.out {
        let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        curve.write_csv(file)?;
    }
    let mut r = ExperimentReport::new("curve", 0, curve.points.len() as u64, 0);
    r.param("max", a.max).param("step", a.step);
    let worst = curve
        .points
        .iter()
        .map(|p| s_alpha_defining(p.alpha, p.s_alpha).abs())
        .fold(0.0, f64::max);
    r.bound("max_defining_residual", worst, 0.0, ROOT_TOLERANCE);
    r.bound(
        "strictly_decreasing",
        f64::from(u8::from(curve.is_strictly_decreasing())),
        1.0,
        1.0,
    );
    let mut t = Table::new(["alpha", "s_alpha"]);
    for p in &curve.points {
        t.push(vec![p.alpha, p.s_alpha]);
    }
    r.set_table(t);
    Ok(r)
}

fn cmd_mbonacci(a: &MbonacciArgs) -> Result<ExperimentReport, Error> {
    let res = solve_mbonacci(a.m)?;
    let mut r = ExperimentReport::new("mbonacci", 0, 1, 0);
    r.param("M", a.m);
    r.diagnostic("s_M", res.result.root)
        .diagnostic("two_minus_s_M", res.gap_to_two)
        .diagnostic("dimension", res.dimension)
        .diagnostic("codimension", res.codimension)
        .diagnostic("iterations", res.result.iterations);
    r.bound(
        "defining_residual",
        res.result.residual,
        -ROOT_TOLERANCE,
        ROOT_TOLERANCE,
    );
    Ok(r)
}

fn cmd_boxcount(a: &BoxcountArgs) -> Result<ExperimentReport, Error> {
    let spec = a.spec.build(FlavorArg::Bounded, a.j_max as u64)?;
    let counts = count_cylinders_by_length(&spec, a.j_max)?;
    let est = box_dimension_from_counts(&counts)?;
    let mut r = ExperimentReport::new("boxcount", 0, counts.len() as u64, a.j_max as u64);
    r.param("spec", spec.to_kv()).param("j_max", a.j_max);
    r.diagnostic("slope", est.slope).diagnostic("fit", &est);
    if let Some(target) = a.target {
        r.pair("slope", target, est.slope, a.tolerance);
    }
    let mut t = Table::new(["j", "log2_count"]);
    for (j, n) in &counts {
        let v = if n.bits() == 0 {
            f64::NEG_INFINITY
        } else {
            p2dgl_core::fractal::count_log2(n)
        };
        t.push(vec![*j as f64, v]);
    }
    r.set_table(t);
    Ok(r)
}

fn cmd_construct(a: &ConstructArgs) -> Result<ExperimentReport, Error> {
    let spec = a.spec.build(FlavorArg::E, a.n.max(a.dump_rank.unwrap_or(0) + 1))?;
    let mut r = ExperimentReport::new("construct", 0, 1, a.n);
    r.param("spec", spec.to_kv()).param("N", a.n).param("fill", a.fill);
    if let (Some(rank), Some(path)) = (a.dump_rank, &a.out) {
        let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        write_cylinder_csv(&spec, rank, a.budget, file)?;
        r.diagnostic("dumped_rank", rank)
            .diagnostic("dumped_intervals", count_words(&spec, rank)?.to_string());
    }
    match spec.kind() {
        p2dgl_core::fractal::Kind::E { r: exp, t } => {
            let p = construct_e_point(*exp, spec.alpha(), spec.m(), *t, a.n, a.fill)?;
            r.diagnostic("last_k", p.last_k)
                .diagnostic("last_nk", p.last_nk)
                .diagnostic("L_N", p.l_n);
            r.bound("abs(L_N/N^r - alpha)", (p.ratio - p.alpha).abs(), 0.0, p.sandwich_bound);
        }
        p2dgl_core::fractal::Kind::F { .. } => {
            let choice = match a.choice {
                ChoiceArg::Min => SpecialDigitChoice::Min,
                ChoiceArg::Max => SpecialDigitChoice::Max,
            };
            let rep = limsup_point_check(&spec, a.n, choice, a.fill)?;
            r.param("choice", format!("{:?}", choice).to_lowercase());
            let mut t = Table::new(["k", "n_k", "digit", "ratio", "upper", "running_max_ratio"]);
            for e in &rep.entries {
                t.push(vec![
                    e.k as f64,
                    e.nk as f64,
                    f64::from(e.digit),
                    e.ratio,
                    e.upper,
                    e.running_max_ratio,
                ]);
                r.bound(
                    format!("d/n_k[k={}]", e.k),
                    e.ratio,
                    spec.alpha() * (1.0 + f64::EPSILON),
                    e.upper,
                );
            }
            r.diagnostic("ratios_decreasing", rep.ratios_decreasing)
                .diagnostic("free_tail_ratio", rep.free_tail_ratio)
                .diagnostic("max_ratio", rep.max_ratio);
            r.set_table(t);
        }
        p2dgl_core::fractal::Kind::Bounded => {
            return Err(Error::InvalidSpec("construct needs the E or F flavor".into()));
        }
    }
    Ok(r)
}

fn cmd_gaps(a: &GapsArgs) -> Result<ExperimentReport, Error> {
    let spec = a.spec.build(FlavorArg::F, a.rank + 1)?;
    let mut r = ExperimentReport::new("gaps", 0, 0, a.rank);
    r.param("spec", spec.to_kv()).param("budget", a.budget);
    let mut t = Table::new([
        "rank",
        "intervals",
        "violations",
        "order_violations",
        "min_gap_log2",
        "min_margin_log2",
    ]);
    let mut total = 0;
    for n in 0..=a.rank {
        let g = gaps_at_rank(&spec, n, a.budget)?;
        total += g.intervals;
        t.push(vec![
            n as f64,
            g.intervals as f64,
            g.violations as f64,
            g.order_violations as f64,
            g.min_gap_log2.unwrap_or(f64::NAN),
            g.min_margin_log2.unwrap_or(f64::NAN),
        ]);
        r.bound(
            format!("violations[rank={n}]"),
            (g.violations + g.order_violations) as f64,
            0.0,
            0.0,
        );
    }
    r.samples = total;
    r.set_table(t);
    Ok(r)
}

fn cmd_measure_check(a: &MeasureCheckArgs) -> Result<ExperimentReport, Error> {
    let spec = a.spec.build(FlavorArg::F, a.rank.unwrap_or(64) + 1)?;
    let rank = match a.rank {
        Some(n) => n,
        None => {
            let mut n = 0;
            while count_words(&spec, n + 1)? <= a.budget.into() {
                n += 1;
            }
            n
        }
    };
    let axioms = measure_axioms(&spec, rank, a.budget)?;
    let holder = holder_check(&spec, rank.max(1), a.epsilon, a.budget)?;
    let mut r = ExperimentReport::new("measure-check", 0, axioms.parents_checked, rank);
    r.param("spec", spec.to_kv())
        .param("epsilon", a.epsilon)
        .param("budget", a.budget);
    r.bound("rank1_total", axioms.rank1_total, 1.0 - 1e-12, 1.0 + 1e-12);
    r.bound("max_additivity_error", axioms.max_additivity_error, 0.0, 1e-12);
    r.bound(
        "log2_C*_upper_minus_lower",
        holder.upper_log2_max - holder.fitted_log2_bound,
        f64::NEG_INFINITY,
        1.0,
    );
    r.diagnostic("s_M(alpha)", holder.exponent / (1.0 - a.epsilon))
        .diagnostic("expected_failure_mode", holder.expected_failure_mode);
    let mut t = Table::new(["rank", "intervals", "log2_c_star"]);
    for h in &holder.ranks {
        t.push(vec![h.rank as f64, h.intervals as f64, h.log2_c_star]);
    }
    r.set_table(t);
    Ok(r)
}

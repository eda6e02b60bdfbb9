mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use negdep::decomp::{binary_multinomial_decompose, orbit_mixture_decompose};
use negdep::depcheck::{check_chain, check_theorem1, Theorem1Verdict, Verdict};
use negdep::mix::{
    construct_na_gaussian_cov, demo_bivariate_zero_corr_not_nod, empirical_corr, jm_cov_n3, sample, CovModel,
    DemoGrid, Family,
};
use negdep::transport::{
    marginals_from_json, solve_jm_feasibility, solve_minimax, verify_thm_opt, CostSpec, UncertaintySpec,
    DEFAULT_VARIABLE_CAP,
};
use negdep::{AnyJoint, Backend, DiscreteJoint, Error, Rational, Result, Scalar};
use report::{emit, Caps, Outcome, RunConfig, Tolerances};
use serde_json::{json, Value};

const MODE_ENV: &str = "NEGDEP_NUM_MODE";

#[derive(Parser, Debug)]
#[command(name = "negdep", version, about = "Negative dependence checks, joint-mix constructions and minimax transport")]
struct Cli {
    /// Number mode; defaults to $NEGDEP_NUM_MODE, then to the input file or float.
    #[arg(long, global = true)]
    mode: Option<Backend>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 10_000_000)]
    grid_cap: u128,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    upper_set_cap: usize,
    #[arg(long, global = true, default_value_t = 4096)]
    nsd_grid_cap: usize,
    #[arg(long, global = true, default_value_t = negdep::lp::EXACT_NONZERO_LIMIT)]
    exact_lp_nonzeros: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_VARIABLE_CAP)]
    var_cap: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    nsd_tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// All dependence notions plus the implication audit.
    Check { dist: PathBuf },
    /// Conditional-structure sufficient condition for NA of a joint mix.
    Theorem1 {
        dist: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// NA Gaussian joint-mix covariance for the given variances.
    ConstructGaussian {
        #[arg(long, value_delimiter = ',', required = true)]
        variances: Vec<String>,
    },
    /// Closed-form joint-mix covariance in dimension three.
    JmCov3 {
        #[arg(long, value_delimiter = ',', required = true)]
        variances: Vec<String>,
    },
    /// Binary multinomial decomposition of a joint mix.
    Decompose { dist: PathBuf },
    /// Orbit-uniform mixture of an exchangeable joint mix.
    OrbitMixture { dist: PathBuf },
    /// Average over all coordinate permutations.
    Symmetrize { dist: PathBuf },
    /// Whether the marginals admit a joint-mix coupling.
    JmFeasible { marginals: PathBuf },
    /// Minimax multi-marginal transport LP.
    OtSolve {
        #[arg(long)]
        marginals: PathBuf,
        /// `all`, `card:k`, inline JSON, or a JSON file.
        #[arg(long, default_value = "all")]
        uncertainty: String,
        /// `quad`, `var` or `harmonic`.
        #[arg(long, default_value = "quad")]
        cost: String,
    },
    /// Compares the minimax optimum for n identical marginals with the equicorrelated value.
    VerifyThmOpt {
        /// JSON `{"support": [..], "probs": [..]}`.
        marginal: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Draws from a Gaussian or elliptical model.
    Sample {
        model: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Orthant-dependence violation of an uncorrelated bivariate Student-t law.
    DemoTNod {
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 3.0)]
        hi: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn parse_list<T: Scalar>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| T::from_json(&Value::String(s.trim().to_string()))).collect()
}

fn negative_if(bad: bool) -> Outcome {
    if bad {
        Outcome::Negative
    } else {
        Outcome::Completed
    }
}

fn load_joint(cfg: &mut RunConfig, path: &Path) -> Result<AnyJoint> {
    let d = AnyJoint::from_json_str(&read(path)?, cfg.requested_mode)?;
    match d.backend() {
        Backend::Float => cfg.tolerances_for::<f64>(),
        Backend::Rational => cfg.tolerances_for::<Rational>(),
    }
    Ok(d)
}

fn with_joint<R>(d: &AnyJoint, f: impl Fn(&dyn JointOps) -> R) -> R {
    match d {
        AnyJoint::Float(d) => f(d),
        AnyJoint::Rational(d) => f(d),
    }
}

/// Backend-erased operations on a loaded distribution.
trait JointOps {
    fn check(&self, cfg: &RunConfig) -> Result<(Outcome, Value)>;
    fn theorem1(&self, cfg: &RunConfig, tol: f64) -> Result<(Outcome, Value)>;
    fn decompose(&self) -> Result<Value>;
    fn orbit_mixture(&self) -> Result<Value>;
    fn symmetrize(&self) -> Value;
}

impl<T: Scalar> JointOps for DiscreteJoint<T> {
    fn check(&self, cfg: &RunConfig) -> Result<(Outcome, Value)> {
        let chain = check_chain(self, &cfg.check_config());
        let bad = !chain.consistent() || chain.report.verdicts.values().any(|c| matches!(c.verdict, Verdict::Fails { .. }));
        Ok((negative_if(bad), serde_json::to_value(&chain)?))
    }

    fn theorem1(&self, cfg: &RunConfig, tol: f64) -> Result<(Outcome, Value)> {
        let tol = if T::BACKEND == Backend::Rational { T::zero() } else { T::from_f64(tol).ok_or(Error::NonFinite)? };
        let v = check_theorem1(self, &tol, &cfg.check_config())?;
        let bad = !matches!(v, Theorem1Verdict::Applies { consistent: true, .. });
        Ok((negative_if(bad), serde_json::to_value(&v)?))
    }

    fn decompose(&self) -> Result<Value> {
        Ok(binary_multinomial_decompose(self)?.to_json())
    }

    fn orbit_mixture(&self) -> Result<Value> {
        Ok(serde_json::to_value(orbit_mixture_decompose(self)?)?)
    }

    fn symmetrize(&self) -> Value {
        self.symmetrize().to_json()
    }
}

fn mode_or_float(cfg: &RunConfig) -> Backend {
    cfg.requested_mode.unwrap_or(Backend::Float)
}

fn construct<T: Scalar>(cfg: &mut RunConfig, variances: &[String]) -> Result<(Outcome, Value)> {
    cfg.tolerances_for::<T>();
    let t = construct_na_gaussian_cov(&parse_list::<T>(variances)?)?;
    Ok((Outcome::Completed, serde_json::to_value(&t)?))
}

fn jm_cov3<T: Scalar>(cfg: &mut RunConfig, variances: &[String]) -> Result<(Outcome, Value)> {
    cfg.tolerances_for::<T>();
    let c = jm_cov_n3(&parse_list::<T>(variances)?)?;
    Ok((negative_if(!c.psd), serde_json::to_value(&c)?))
}

fn jm_feasible<T: Scalar>(cfg: &mut RunConfig, path: &Path) -> Result<(Outcome, Value)> {
    cfg.tolerances_for::<T>();
    let m = marginals_from_json::<T>(&serde_json::from_str(&read(path)?)?)?;
    let f = solve_jm_feasibility(&m, cfg.caps.lp_variables)?;
    Ok((negative_if(!f.jointly_mixable), f.to_json()))
}

fn uncertainty<T: Scalar>(arg: &str, n: usize) -> Result<UncertaintySpec<T>> {
    let path = Path::new(arg);
    if path.is_file() {
        UncertaintySpec::parse(&read(path)?, n)
    } else {
        UncertaintySpec::parse(arg, n)
    }
}

fn ot_solve<T: Scalar>(cfg: &mut RunConfig, path: &Path, unc: &str, cost: &str) -> Result<(Outcome, Value)> {
    cfg.tolerances_for::<T>();
    let m = marginals_from_json::<T>(&serde_json::from_str(&read(path)?)?)?;
    let unc = uncertainty::<T>(unc, m.len())?;
    let s = solve_minimax(&m, &unc, &CostSpec::parse(cost)?, cfg.caps.lp_variables)?;
    Ok((Outcome::Completed, s.to_json()))
}

fn thm_opt<T: Scalar>(cfg: &mut RunConfig, path: &Path, n: usize, k: &[usize], tol: f64) -> Result<(Outcome, Value)> {
    cfg.tolerances_for::<T>();
    let wrapped = json!({ "marginals": [serde_json::from_str::<Value>(&read(path)?)?] });
    let m = marginals_from_json::<T>(&wrapped)?.remove(0);
    let r = verify_thm_opt(&m, n, k, tol)?;
    Ok((negative_if(!r.all_passed), serde_json::to_value(&r)?))
}

fn execute(cli: &Cli, cfg: &mut RunConfig) -> Result<(Outcome, Value)> {
    let rational = mode_or_float(cfg) == Backend::Rational;
    match &cli.command {
        Command::Check { dist } => {
            let d = load_joint(cfg, dist)?;
            with_joint(&d, |d| d.check(cfg))
        }
        Command::Theorem1 { dist, tol } => {
            let d = load_joint(cfg, dist)?;
            with_joint(&d, |d| d.theorem1(cfg, *tol))
        }
        Command::Decompose { dist } => {
            let d = load_joint(cfg, dist)?;
            Ok((Outcome::Completed, with_joint(&d, |d| d.decompose())?))
        }
        Command::OrbitMixture { dist } => {
            let d = load_joint(cfg, dist)?;
            Ok((Outcome::Completed, with_joint(&d, |d| d.orbit_mixture())?))
        }
        Command::Symmetrize { dist } => {
            let d = load_joint(cfg, dist)?;
            Ok((Outcome::Completed, with_joint(&d, |d| d.symmetrize())))
        }
        Command::ConstructGaussian { variances } if rational => construct::<Rational>(cfg, variances),
        Command::ConstructGaussian { variances } => construct::<f64>(cfg, variances),
        Command::JmCov3 { variances } if rational => jm_cov3::<Rational>(cfg, variances),
        Command::JmCov3 { variances } => jm_cov3::<f64>(cfg, variances),
        Command::JmFeasible { marginals } if rational => jm_feasible::<Rational>(cfg, marginals),
        Command::JmFeasible { marginals } => jm_feasible::<f64>(cfg, marginals),
        Command::OtSolve { marginals, uncertainty, cost } if rational => {
            ot_solve::<Rational>(cfg, marginals, uncertainty, cost)
        }
        Command::OtSolve { marginals, uncertainty, cost } => ot_solve::<f64>(cfg, marginals, uncertainty, cost),
        Command::VerifyThmOpt { marginal, n, k, tol } if rational => thm_opt::<Rational>(cfg, marginal, *n, k, *tol),
        Command::VerifyThmOpt { marginal, n, k, tol } => thm_opt::<f64>(cfg, marginal, *n, k, *tol),
        Command::Sample { model, count, seed } => {
            cfg.tolerances_for::<f64>();
            let model = CovModel::from_json_str(&read(model)?)?;
            let draws = sample(&model, *count, *seed)?;
            let corr = empirical_corr(&draws);
            Ok((Outcome::Completed, json!({ "model": model, "samples": draws, "empirical_corr": corr })))
        }
        Command::DemoTNod { nu, lo, hi, step } => {
            cfg.tolerances_for::<f64>();
            let grid = DemoGrid { lo: *lo, hi: *hi, step: *step };
            let base = CovModel::gaussian(vec![0.0; 2], vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
            let t = base.clone().with_family(Family::StudentT { nu: *nu })?;
            let student = demo_bivariate_zero_corr_not_nod(&t, &grid)?;
            let gaussian = demo_bivariate_zero_corr_not_nod(&base, &grid)?;
            Ok((Outcome::Completed, json!({ "grid": grid, "student_t": student, "gaussian_control": gaussian })))
        }
    }
}

fn config_for(cli: &Cli, requested_mode: Option<Backend>) -> RunConfig {
    let mut params = BTreeMap::new();
    let mut inputs = Vec::new();
    let mut seed = None;
    let path = |p: &PathBuf| p.display().to_string();
    let name = match &cli.command {
        Command::Check { dist } | Command::Decompose { dist } | Command::OrbitMixture { dist } | Command::Symmetrize { dist } => {
            inputs.push(path(dist));
            match &cli.command {
                Command::Check { .. } => "check",
                Command::Decompose { .. } => "decompose",
                Command::OrbitMixture { .. } => "orbit-mixture",
                _ => "symmetrize",
            }
        }
        Command::Theorem1 { dist, tol } => {
            inputs.push(path(dist));
            params.insert("tol".into(), json!(tol));
            "theorem1"
        }
        Command::ConstructGaussian { variances } | Command::JmCov3 { variances } => {
            params.insert("variances".into(), json!(variances));
            if matches!(cli.command, Command::JmCov3 { .. }) {
                "jm-cov3"
            } else {
                "construct-gaussian"
            }
        }
        Command::JmFeasible { marginals } => {
            inputs.push(path(marginals));
            "jm-feasible"
        }
        Command::OtSolve { marginals, uncertainty, cost } => {
            inputs.push(path(marginals));
            params.insert("uncertainty".into(), json!(uncertainty));
            params.insert("cost".into(), json!(cost));
            "ot-solve"
        }
        Command::VerifyThmOpt { marginal, n, k, tol } => {
            inputs.push(path(marginal));
            params.insert("n".into(), json!(n));
            params.insert("k".into(), json!(k));
            params.insert("tol".into(), json!(tol));
            "verify-thm-opt"
        }
        Command::Sample { model, count, seed: s } => {
            inputs.push(path(model));
            params.insert("count".into(), json!(count));
            seed = Some(*s);
            "sample"
        }
        Command::DemoTNod { nu, lo, hi, step } => {
            params.insert("nu".into(), json!(nu));
            params.insert("grid".into(), json!([lo, hi, step]));
            "demo-t-nod"
        }
    };
    RunConfig {
        command: name.into(),
        inputs,
        requested_mode,
        number_mode: requested_mode.unwrap_or(Backend::Float),
        tolerances: Tolerances { sign: 0.0, mass: 0.0, lp: 0.0, jm: 0.0, nsd: cli.nsd_tol },
        seed,
        caps: Caps {
            grid: cli.grid_cap,
            upper_sets: cli.upper_set_cap,
            nsd_grid: cli.nsd_grid_cap,
            exact_lp_nonzeros: cli.exact_lp_nonzeros,
            lp_variables: cli.var_cap,
        },
        output: cli.output.clone(),
        params,
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let env_mode = match std::env::var(MODE_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(v.parse::<Backend>()?),
        _ => None,
    };
    let caps_ok = cli.grid_cap > 0 && cli.upper_set_cap > 0 && cli.nsd_grid_cap > 0 && cli.var_cap > 0;
    if !caps_ok {
        return Err(Error::Invalid("caps must be positive".into()));
    }
    let mut cfg = config_for(cli, cli.mode.or(env_mode));
    let (outcome, result) = execute(cli, &mut cfg)?;
    emit(&cfg, outcome, result)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Completed) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

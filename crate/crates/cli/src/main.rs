use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ckm::basiclp::{cost_shares, solve_basic, FractionalSolution};
use ckm::cluster::cluster;
use ckm::configlp::Params;
use ckm::instance::{format_real, gen_gap_instance, gen_random, read_instance, write_instance, Geometry, Instance, RandomSpec};
use ckm::oracle::{audit, exact_opt, exact_opt_hard, Bundle};
use ckm::round::{
    cutting_plane_solve, read_solution, round_basic, round_config, write_solution, ConfigRound,
    IntegralSolution, RoundReport,
};
use ckm::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "ckm", version, about = "LP rounding for capacitated k-median")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance.
    Gen(GenArgs),
    /// Solve the basic LP relaxation and print its value.
    Lp {
        instance: PathBuf,
        /// Also print the fractional solution.
        #[arg(long)]
        trace: bool,
    },
    /// Round the basic LP once.
    Round {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "basic")]
        mode: Mode,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Cutting-plane loop with the configuration rounding.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
    },
    /// Exact optimum by exhaustive search.
    Exact {
        instance: PathBuf,
        /// Replace the instance's k.
        #[arg(long)]
        k: Option<usize>,
        /// Open every facility at most once.
        #[arg(long)]
        hard: bool,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Audit every invariant of a pipeline run, and optionally a solution.
    Check {
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Sweep a seed range of random instances and print a ratio table. The
    /// `opt` column opens every facility at most once; `soft_opt` allows copies.
    Bench {
        #[arg(long, value_parser = parse_triple)]
        random: (usize, usize, usize),
        #[arg(long, default_value_t = 1)]
        from: u64,
        #[arg(long, default_value_t = 10)]
        to: u64,
        #[arg(long, value_parser = parse_pair, default_value = "3,7")]
        caps: (u32, u32),
        #[arg(long, value_enum, default_value = "euclidean")]
        geometry: GeometryArg,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
    },
}

#[derive(Args)]
struct GenArgs {
    /// Gap instance with this many groups.
    #[arg(long, conflicts_with = "random")]
    gap: Option<usize>,
    /// Distance between gap groups.
    #[arg(long = "L", default_value_t = 100.0)]
    spread: f64,
    /// Random instance with nF facilities, nC clients and k.
    #[arg(long, value_parser = parse_triple, required_unless_present = "gap")]
    random: Option<(usize, usize, usize)>,
    #[arg(long, value_parser = parse_pair, default_value = "3,7")]
    caps: (u32, u32),
    #[arg(long, value_enum, default_value = "euclidean")]
    geometry: GeometryArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_retries: usize,
    /// Print per-stage details to stderr.
    #[arg(long)]
    trace: bool,
    /// Solution file; the report goes to stdout.
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Basic,
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Euclidean,
    Clustered,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Euclidean => Geometry::Euclidean,
            GeometryArg::Clustered => Geometry::Clustered,
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, n: usize) -> std::result::Result<Vec<T>, String> {
    let parts: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("invalid number {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(parts)
}

fn parse_triple(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let v = parse_list(s, 3)?;
    Ok((v[0], v[1], v[2]))
}

fn parse_pair(s: &str) -> std::result::Result<(u32, u32), String> {
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

fn load(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    read_instance(&text)
}

fn save(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

fn params(epsilon: f64) -> Result<Params> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 2], got {epsilon}")));
    }
    Params::from_epsilon(epsilon)
}

/// Writes the solution to `-o` when given, otherwise to stdout ahead of the
/// report.
fn emit(run: &RunArgs, inst: &Instance, sol: &IntegralSolution, report: &RoundReport) -> Result<()> {
    let text = write_solution(sol, inst.k());
    match &run.output {
        Some(path) => save(path, &text)?,
        None => print!("{text}"),
    }
    print!("{}", report.to_text());
    Ok(())
}

fn trace_fractional(frac: &FractionalSolution) {
    for (i, &y) in frac.y.iter().enumerate().filter(|(_, &y)| y != 0.0) {
        println!("y {i} {}", format_real(y));
    }
    for (i, row) in frac.x.iter().enumerate() {
        for (j, &x) in row.iter().enumerate().filter(|(_, &x)| x != 0.0) {
            println!("x {i} {j} {}", format_real(x));
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(g) => {
            let inst = match (g.gap, g.random) {
                (Some(u), _) => gen_gap_instance(u, g.spread)?,
                (None, Some((n_facilities, n_clients, k))) => {
                    let spec = RandomSpec { n_facilities, n_clients, k, cap_range: g.caps, geometry: g.geometry.into() };
                    gen_random(&spec, g.seed)?
                }
                (None, None) => return Err(Error::InvalidParameter("need --gap or --random".into())),
            };
            let text = write_instance(&inst);
            match g.output {
                Some(path) => save(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Lp { instance, trace } => {
            let inst = load(&instance)?;
            let frac = solve_basic(&inst, &[])?;
            println!("lp_value {}", format_real(frac.lp_value));
            if trace {
                trace_fractional(&frac);
            }
        }
        Command::Round { instance, mode, run } => {
            let inst = load(&instance)?;
            let params = params(run.epsilon)?;
            let frac = solve_basic(&inst, &[])?;
            let shares = cost_shares(&inst, &frac);
            let clustering = cluster(&inst, &shares);
            match mode {
                Mode::Basic => {
                    let b = round_basic(&inst, &frac, &clustering)?;
                    if run.trace {
                        for (v, m) in clustering.reps.iter().zip(&b.moves) {
                            eprintln!("rep {v} objective {} interior {}", format_real(m.objective), m.interior);
                        }
                    }
                    let report = RoundReport::new(&inst, &b.solution, frac.lp_value, b.moving);
                    emit(&run, &inst, &b.solution, &report)?;
                }
                Mode::Config => {
                    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                    match round_config(&inst, &frac, &shares, &clustering, &params, run.max_retries, &mut rng)? {
                        ConfigRound::Solved(r) => {
                            if run.trace {
                                for g in &r.groups {
                                    eprintln!(
                                        "group center {} demand {} opened_from {} interior {}",
                                        g.center,
                                        format_real(g.demand),
                                        g.facilities.len(),
                                        g.placement.interior
                                    );
                                }
                            }
                            let report = RoundReport::new(&inst, &r.solution, frac.lp_value, r.moving);
                            emit(&run, &inst, &r.solution, &report)?;
                        }
                        ConfigRound::Violated { facilities, cut, .. } => {
                            return Err(Error::Infeasible(format!(
                                "configuration constraints fail for facilities {facilities:?} (violation {}); use `solve`",
                                format_real(cut.eval(&frac))
                            )));
                        }
                    }
                }
            }
        }
        Command::Solve { instance, run, max_iters } => {
            let inst = load(&instance)?;
            let params = params(run.epsilon)?;
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            let res = cutting_plane_solve(&inst, &params, max_iters, run.max_retries, &mut rng)?;
            if run.trace {
                for c in &res.report.cuts {
                    eprintln!(
                        "cut iteration {} facilities {:?} violation {} lp_value {}",
                        c.iteration,
                        c.facilities,
                        format_real(c.violation),
                        format_real(c.lp_value)
                    );
                }
            }
            emit(&run, &inst, &res.solution, &res.report)?;
        }
        Command::Exact { instance, k, hard, output } => {
            let inst = load(&instance)?;
            let res = if hard { exact_opt_hard(&inst, k)? } else { exact_opt(&inst, k)? };
            let sol = IntegralSolution::new(&inst, res.open, res.assignment);
            let text = write_solution(&sol, inst.k());
            match output {
                Some(path) => save(&path, &text)?,
                None => print!("{text}"),
            }
            println!("opt_cost {}", format_real(res.opt_cost));
            println!("opened_total {}", sol.opened_total);
        }
        Command::Check { instance, epsilon, solution } => {
            let inst = load(&instance)?;
            let params = params(epsilon)?;
            let frac = solve_basic(&inst, &[])?;
            let shares = cost_shares(&inst, &frac);
            let clustering = cluster(&inst, &shares);
            let bundle = Bundle { inst: &inst, frac: &frac, shares: &shares, clustering: &clustering, run: None };
            let report = audit(&bundle, params.ell as f64);
            print!("{}", report.to_text());
            let mut ok = report.all_pass();
            if let Some(path) = solution {
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
                let sol = read_solution(&text, &inst)?;
                match sol.validate(&inst) {
                    Ok(()) => println!("solution pass cost {}", format_real(sol.cost)),
                    Err(e) => {
                        println!("solution fail {e}");
                        ok = false;
                    }
                }
            }
            if !ok {
                return Err(Error::Invariant("audit found failures".into()));
            }
        }
        Command::Bench { random: (n_facilities, n_clients, k), from, to, caps, geometry, run, max_iters } => {
            let params = params(run.epsilon)?;
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            println!("seed\tlp_value\topt\tbasic_cost\tconfig_cost\tbasic_opened\tconfig_opened\tsoft_opt");
            for seed in from..=to {
                let spec = RandomSpec { n_facilities, n_clients, k, cap_range: caps, geometry: geometry.into() };
                let inst = gen_random(&spec, seed)?;
                let frac = solve_basic(&inst, &[])?;
                let clustering = cluster(&inst, &cost_shares(&inst, &frac));
                let basic = round_basic(&inst, &frac, &clustering)?;
                // the LP relaxes the one-copy problem, so that optimum is the
                // comparable one; the soft optimum is appended
                let opt = exact_opt_hard(&inst, None)?;
                let soft = exact_opt(&inst, None)?;
                let (config_cost, config_opened) =
                    match cutting_plane_solve(&inst, &params, max_iters, run.max_retries, &mut rng) {
                        Ok(r) => (format_real(r.solution.cost), r.solution.opened_total.to_string()),
                        Err(e) if e.is_input_error() => return Err(e),
                        Err(e) => {
                            eprintln!("seed {seed}: {e}");
                            ("failed".into(), "failed".into())
                        }
                    };
                println!(
                    "{seed}\t{}\t{}\t{}\t{config_cost}\t{}\t{config_opened}\t{}",
                    format_real(frac.lp_value),
                    format_real(opt.opt_cost),
                    format_real(basic.solution.cost),
                    basic.solution.opened_total,
                    format_real(soft.opt_cost)
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

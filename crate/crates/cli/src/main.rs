//! Command-line front end: instances in, CSV reports and manifests out.

mod manifest;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use manifest::ManifestBuilder;
use mtsc_core::inner::{self, AuxSizes};
use mtsc_core::instance::{load_instance_path, ProblemInstance};
use mtsc_core::lab::{
    self, brute_force_achievable, build_code, lemma3_size_audit, prop2_check,
    reverse_markov_check, verify_distortion_constraint, CodeKind, LabCaps,
};
use mtsc_core::outer::{self, residuals_of, OuterCandidate, SolveError};
use mtsc_core::prob::JointPmf;
use mtsc_core::region::{
    blahut_arimoto, sandwich_check, slepian_wolf_region, RateRegion, RegionError,
};
use mtsc_core::solver::{default_directions, dirichlet_row, start_rng, SolverOptions};
use mtsc_core::sweep::trace_both;
use report::{sig, Csv};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_UNCONVERGED: u8 = 4;
const EXIT_CHECK_FAILED: u8 = 5;
const EXIT_RESOURCE_CAP: u8 = 6;

#[derive(Parser)]
#[command(
    name = "mtsc",
    version,
    about = "Rate-region bounds and typicality checks for two-encoder source coding"
)]
struct Cli {
    /// Seed feeding every stochastic component (overrides the instance's).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV reports and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Bound {
    Inner,
    Outer,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Lemma {
    Prop2,
    ReverseMarkov,
    Lemma3,
    Distortion,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodeFamily {
    Singletons,
    OneCell,
    Balls,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PiSource {
    /// Per-letter empirical type of the code.
    Empirical,
    /// Empirical type projected onto the chain constraint.
    ProjectedEmpirical,
    /// The zero-distortion identity candidate.
    Identity,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the requested bound(s) over a weight sweep.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Bound::Both)]
        bound: Bound,
        /// Semicolon-separated weight pairs, e.g. "1,0;1,1;0,1".
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        feasibility_tol: Option<f64>,
        #[arg(long)]
        objective_tol: Option<f64>,
        /// Comma-separated Markov-penalty schedule.
        #[arg(long)]
        beta_schedule: Option<String>,
        #[arg(long)]
        grid_k: Option<usize>,
        /// Auxiliary alphabet sizes for the inner bound.
        #[arg(long)]
        u_size: Option<usize>,
        #[arg(long)]
        v_size: Option<usize>,
        /// Also emit grid-scan brackets (tiny instances only).
        #[arg(long)]
        certified: bool,
    },
    /// Run a structural check and emit its report.
    Verify {
        instance: PathBuf,
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Slack budget in bits for the size audit.
        #[arg(long, default_value_t = 0.0)]
        slack: f64,
        #[arg(long, value_enum, default_value_t = CodeFamily::Balls)]
        code: CodeFamily,
        /// Rates (bits/symbol) bounding the generated code's cell counts.
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 1.0)]
        r2: f64,
        /// Number of random chains for the reverse-Markov suite.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Conditioning alphabet size for the reverse-Markov suite.
        #[arg(long, default_value_t = 2)]
        z_size: usize,
        /// L1 perturbation applied to each chain before checking.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        #[arg(long, value_enum, default_value_t = PiSource::ProjectedEmpirical)]
        pi: PiSource,
        /// Enumeration cap override.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Exhaustively (or by annealing) search codes at fixed rates.
    Bruteforce {
        instance: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long)]
        cap: Option<u64>,
        /// Skip the cross-check against the traced bound regions.
        #[arg(long)]
        no_region_check: bool,
    },
    /// Classical two-terminal baselines: R(D) and the lossless corner rates.
    Baseline {
        instance: PathBuf,
        /// Also emit an R(D) curve with this many extra points per source.
        #[arg(long)]
        curve: Option<usize>,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MTSC_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(e) = std::fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let code = match &cli.command {
        Command::Solve { .. } => cmd_solve(&cli),
        Command::Verify { .. } => cmd_verify(&cli),
        Command::Bruteforce { .. } => cmd_bruteforce(&cli),
        Command::Baseline { .. } => cmd_baseline(&cli),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

enum CliError {
    Validation(String),
    Infeasible(String),
    ResourceCap(String),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::ResourceCap(_) => EXIT_RESOURCE_CAP,
            CliError::Io(_) => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Infeasible(m) => write!(f, "{m}"),
            CliError::ResourceCap(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match &e {
            SolveError::InfeasibleTargets { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match &e {
            RegionError::BelowFloor { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<lab::LabError> for CliError {
    fn from(e: lab::LabError) -> Self {
        match &e {
            lab::LabError::CapExceeded { .. } => CliError::ResourceCap(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ProblemInstance, CliError> {
    load_instance_path(path).map_err(|e| CliError::Validation(format!("{path:?}: {e}")))
}

fn merged_options(inst: &ProblemInstance, cli: &Cli) -> SolverOptions {
    let mut opts = inst.solver.clone();
    if let Some(seed) = cli.seed {
        opts.seed = seed;
    }
    if let Command::Solve {
        starts,
        feasibility_tol,
        objective_tol,
        beta_schedule,
        grid_k,
        ..
    } = &cli.command
    {
        if let Some(s) = starts {
            opts.starts = *s;
        }
        if let Some(t) = feasibility_tol {
            opts.feasibility_tol = *t;
        }
        if let Some(t) = objective_tol {
            opts.objective_tol = *t;
        }
        if let Some(k) = grid_k {
            opts.grid_k = *k;
        }
        if let Some(schedule) = beta_schedule {
            let parsed: Result<Vec<f64>, _> =
                schedule.split(',').map(|s| s.trim().parse::<f64>()).collect();
            if let Ok(parsed) = parsed {
                if !parsed.is_empty() {
                    opts.beta_schedule = parsed;
                }
            }
        }
    }
    opts
}

fn parse_weights(arg: &Option<String>) -> Result<Vec<(f64, f64)>, CliError> {
    match arg {
        None => Ok(default_directions()),
        Some(text) => {
            let mut out = Vec::new();
            for part in text.split(';') {
                let nums: Vec<&str> = part.split(',').map(str::trim).collect();
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Validation(format!("bad weight `{part}`")))
                };
                match nums.as_slice() {
                    [a, b] => out.push((parse(a)?, parse(b)?)),
                    _ => return Err(CliError::Validation(format!("bad weight pair `{part}`"))),
                }
            }
            if out.is_empty() {
                return Err(CliError::Validation("empty weight sweep".into()));
            }
            Ok(out)
        }
    }
}

fn frontier_csv(region: &RateRegion) -> Csv {
    let mut csv = Csv::new(&[
        "mu1",
        "mu2",
        "bound_kind",
        "R1",
        "R2",
        "sum",
        "candidate_id",
        "feasibility_residual",
    ]);
    for e in region.entries() {
        csv.row(&[
            sig(e.mu.0),
            sig(e.mu.1),
            region.kind().to_string(),
            sig(e.support_point.0),
            sig(e.support_point.1),
            sig(e.triple.sum_floor),
            e.candidate_id.clone(),
            sig(e.feasibility_residual),
        ]);
    }
    csv
}

fn cmd_solve(cli: &Cli) -> Result<u8, CliError> {
    let Command::Solve {
        instance,
        bound,
        weights,
        u_size,
        v_size,
        certified,
        ..
    } = &cli.command
    else {
        unreachable!()
    };
    let inst = load(instance)?;
    let opts = merged_options(&inst, cli);
    let sweep = parse_weights(weights)?;
    let mut aux = AuxSizes::defaults_for(&inst);
    if let Some(u) = u_size {
        aux.u = (*u).max(1);
    }
    if let Some(v) = v_size {
        aux.v = (*v).max(1);
    }
    let mut manifest = ManifestBuilder::new(
        "solve",
        instance,
        opts.seed,
        serde_json::json!({
            "bound": match bound { Bound::Inner => "inner", Bound::Outer => "outer", Bound::Both => "both" },
            "weights": sweep,
            "solver": &opts,
            "u_size": aux.u,
            "v_size": aux.v,
        }),
    );

    let mut all_converged_flags: Vec<bool> = Vec::new();
    match bound {
        Bound::Inner => {
            let region = inner::trace_region_inner(&inst, &sweep, &opts, aux)?;
            let path = cli.out_dir.join("frontier_inner.csv");
            frontier_csv(&region).write(&path)?;
            manifest.add_output(&path);
            all_converged_flags.extend(region.entries().iter().map(|e| e.converged));
        }
        Bound::Outer => {
            let region = outer::trace_region(&inst, &sweep, &opts)?;
            let path = cli.out_dir.join("frontier_outer.csv");
            frontier_csv(&region).write(&path)?;
            manifest.add_output(&path);
            all_converged_flags.extend(region.entries().iter().map(|e| e.converged));
        }
        Bound::Both => {
            let both = trace_both(&inst, &sweep, &opts, aux)?;
            let inner_path = cli.out_dir.join("frontier_inner.csv");
            frontier_csv(&both.inner).write(&inner_path)?;
            manifest.add_output(&inner_path);
            let outer_path = cli.out_dir.join("frontier_outer.csv");
            frontier_csv(&both.outer).write(&outer_path)?;
            manifest.add_output(&outer_path);
            let sandwich = sandwich_check(&both.inner, &both.outer, &sweep, 1e-3);
            let mut csv = Csv::new(&[
                "mu1", "mu2", "outer_support", "inner_support", "gap", "ok",
            ]);
            for row in &sandwich.rows {
                csv.row(&[
                    sig(row.mu.0),
                    sig(row.mu.1),
                    sig(row.outer_support),
                    sig(row.inner_support),
                    sig(row.gap),
                    row.ok.to_string(),
                ]);
            }
            let sandwich_path = cli.out_dir.join("sandwich.csv");
            csv.write(&sandwich_path)?;
            manifest.add_output(&sandwich_path);
            let cand_path = cli.out_dir.join("inner_candidates.json");
            let mut text = serde_json::to_string_pretty(&both.inner_candidates)
                .expect("exports serialize");
            text.push('\n');
            std::fs::write(&cand_path, text)?;
            manifest.add_output(&cand_path);
            all_converged_flags.extend(both.inner.entries().iter().map(|e| e.converged));
            all_converged_flags.extend(both.outer.entries().iter().map(|e| e.converged));
        }
    }

    if *certified {
        let mut csv = Csv::new(&[
            "mu1",
            "mu2",
            "lower",
            "upper",
            "grid_value",
            "refined_value",
            "modulus",
            "grid_points",
        ]);
        for &mu in &sweep {
            let bracket = outer::certified_bracket(&inst, mu, &opts)?;
            csv.row(&[
                sig(mu.0),
                sig(mu.1),
                sig(bracket.lower),
                sig(bracket.upper),
                sig(bracket.grid_value),
                sig(bracket.refined_value),
                sig(bracket.modulus),
                bracket.grid_points.to_string(),
            ]);
        }
        let path = cli.out_dir.join("certified.csv");
        csv.write(&path)?;
        manifest.add_output(&path);
    }

    manifest.write(&cli.out_dir)?;
    if !all_converged_flags.is_empty() && all_converged_flags.iter().all(|c| !c) {
        return Ok(EXIT_UNCONVERGED);
    }
    Ok(EXIT_OK)
}

fn lab_caps(cap: &Option<u64>) -> LabCaps {
    let mut caps = LabCaps::default();
    if let Some(c) = cap {
        caps.enumeration_cap = *c;
    }
    caps
}

fn code_kind(family: CodeFamily) -> CodeKind {
    match family {
        CodeFamily::Singletons => CodeKind::Singletons,
        CodeFamily::OneCell => CodeKind::OneCell,
        CodeFamily::Balls => CodeKind::Balls,
    }
}

fn cells_for(n: usize, rate: f64, space: usize) -> usize {
    let raw = (2f64).powf(n as f64 * rate);
    (raw + 1e-9).floor().max(1.0).min(space as f64) as usize
}

fn cmd_verify(cli: &Cli) -> Result<u8, CliError> {
    let Command::Verify {
        instance,
        lemma,
        n,
        epsilon,
        slack,
        code,
        r1,
        r2,
        count,
        z_size,
        perturb,
        pi,
        cap,
    } = &cli.command
    else {
        unreachable!()
    };
    let inst = load(instance)?;
    let caps = lab_caps(cap);
    let seed = cli.seed.unwrap_or(inst.solver.seed);
    let mut manifest = ManifestBuilder::new(
        "verify",
        instance,
        seed,
        serde_json::json!({
            "lemma": match lemma {
                Lemma::Prop2 => "prop2",
                Lemma::ReverseMarkov => "reverse-markov",
                Lemma::Lemma3 => "lemma3",
                Lemma::Distortion => "distortion",
            },
            "n": n, "epsilon": epsilon, "slack": slack, "r1": r1, "r2": r2,
            "count": count, "z_size": z_size, "perturb": perturb,
        }),
    );
    let mut csv = Csv::new(&["check", "n", "epsilon", "pass", "witness"]);
    let mut all_pass = true;

    let x_space = inst.x_alphabet.size().pow(*n as u32);
    let y_space = inst.y_alphabet.size().pow(*n as u32);
    let b1 = cells_for(*n, *r1, x_space);
    let b2 = cells_for(*n, *r2, y_space);

    match lemma {
        Lemma::Prop2 => {
            let code = build_code(&inst, *n, code_kind(*code), b1, b2, *epsilon, &caps)?;
            let outcome = prop2_check(&code, &inst, *epsilon)?;
            all_pass &= outcome.holds;
            csv.row(&[
                "prop2".into(),
                n.to_string(),
                sig(*epsilon),
                outcome.holds.to_string(),
                outcome
                    .witness
                    .map(|w| format!("cell ({};{}) pair ({};{})", w.i, w.j, w.xid, w.yid))
                    .unwrap_or_else(|| "-".into()),
            ]);
        }
        Lemma::Distortion => {
            let code = build_code(&inst, *n, code_kind(*code), b1, b2, *epsilon, &caps)?;
            let verdict = verify_distortion_constraint(&code, &inst, *epsilon)?;
            all_pass &= verdict.pass;
            csv.row(&[
                "distortion".into(),
                n.to_string(),
                sig(*epsilon),
                verdict.pass.to_string(),
                format!("probability {}", sig(verdict.probability)),
            ]);
        }
        Lemma::ReverseMarkov => {
            let mut rng = start_rng(seed, 0);
            let mut witnessed = 0usize;
            for chain_idx in 0..*count {
                let p = random_chain(&mut rng, *z_size, *perturb);
                let report = reverse_markov_check(&p, *n, *epsilon, &caps)?;
                let implication_ok = report.conclusion_holds.unwrap_or(true);
                all_pass &= implication_ok;
                if report.condition_holds {
                    witnessed += 1;
                }
                if !implication_ok || chain_idx < 10 {
                    csv.row(&[
                        "reverse-markov".into(),
                        n.to_string(),
                        sig(*epsilon),
                        implication_ok.to_string(),
                        match &report.witness {
                            Some(zn) => format!(
                                "zn {:?} l1 {}",
                                zn,
                                sig(report.l1_to_markov)
                            ),
                            None => "-".into(),
                        },
                    ]);
                }
            }
            csv.row(&[
                "reverse-markov-summary".into(),
                n.to_string(),
                sig(*epsilon),
                all_pass.to_string(),
                format!("{witnessed} of {count} chains witnessed"),
            ]);
        }
        Lemma::Lemma3 => {
            let code = build_code(&inst, *n, code_kind(*code), b1, b2, *epsilon, &caps)?;
            let candidate = pi_candidate(&inst, &code, *pi, &caps)?;
            let audit = lemma3_size_audit(&code, &inst, &candidate, *epsilon, *slack, &caps)?;
            let mut audit_csv = Csv::new(&["i", "j", "log2_cell_size", "bound_bits", "margin_bits"]);
            for row in &audit.rows {
                audit_csv.row(&[
                    row.i.to_string(),
                    row.j.to_string(),
                    sig(row.log2_cell_size),
                    sig(row.bound_bits),
                    sig(row.margin_bits),
                ]);
            }
            let audit_path = cli.out_dir.join("audit.csv");
            audit_csv.write(&audit_path)?;
            manifest.add_output(&audit_path);
            all_pass &= audit.pass;
            for (name, margin) in [
                ("lemma3-joint", audit.worst_joint_margin),
                ("lemma3-cond-x", audit.worst_cond_x_margin),
                ("lemma3-cond-y", audit.worst_cond_y_margin),
            ] {
                csv.row(&[
                    name.into(),
                    n.to_string(),
                    sig(*epsilon),
                    (margin >= 0.0).to_string(),
                    format!("worst margin {} bits", sig(margin)),
                ]);
            }
        }
    }

    let report_path = cli.out_dir.join("report.csv");
    csv.write(&report_path)?;
    manifest.add_output(&report_path);
    manifest.write(&cli.out_dir)?;
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn random_chain(rng: &mut rand_chacha::ChaCha8Rng, z_size: usize, perturb: f64) -> JointPmf {
    use mtsc_core::prob::Alphabet;
    let b = Alphabet::indexed("s", 2).unwrap();
    let z = Alphabet::indexed("z", z_size.max(1)).unwrap();
    let pz = dirichlet_row(rng, z.size());
    let px: Vec<Vec<f64>> = (0..z.size()).map(|_| dirichlet_row(rng, 2)).collect();
    let py: Vec<Vec<f64>> = (0..z.size()).map(|_| dirichlet_row(rng, 2)).collect();
    let mut mass = vec![0.0; 2 * z.size() * 2];
    for zi in 0..z.size() {
        for x in 0..2 {
            for y in 0..2 {
                mass[x * z.size() * 2 + zi * 2 + y] = pz[zi] * px[zi][x] * py[zi][y];
            }
        }
    }
    if perturb > 0.0 {
        // move perturb/2 mass from the heaviest cell to the lightest
        let hi = mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let lo = mass
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let shift = (perturb / 2.0).min(mass[hi]);
        mass[hi] -= shift;
        mass[lo] += shift;
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    let last = mass.len() - 1;
    let partial: f64 = mass[..last].iter().sum();
    mass[last] = 1.0 - partial;
    JointPmf::new(vec![b.clone(), z, b], mass).unwrap()
}

fn pi_candidate(
    inst: &ProblemInstance,
    code: &lab::DistributedCode,
    source: PiSource,
    _caps: &LabCaps,
) -> Result<OuterCandidate, CliError> {
    let joint = match source {
        PiSource::Empirical => lab::empirical_type(code, inst)?,
        PiSource::ProjectedEmpirical => {
            let raw = lab::empirical_type(code, inst)?;
            raw.markov_projection(&[0], &[2, 3], &[1])
                .map_err(|e| CliError::Validation(e.to_string()))?
        }
        PiSource::Identity => outer::identity_candidate(inst).ok_or_else(|| {
            CliError::Validation(
                "identity candidate needs reconstruction alphabets at least as large as the sources"
                    .into(),
            )
        })?,
    };
    let residuals = residuals_of(&joint, inst)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(OuterCandidate { joint, residuals })
}

fn cmd_bruteforce(cli: &Cli) -> Result<u8, CliError> {
    let Command::Bruteforce {
        instance,
        n,
        r1,
        r2,
        epsilon,
        budget,
        cap,
        no_region_check,
    } = &cli.command
    else {
        unreachable!()
    };
    let inst = load(instance)?;
    let caps = lab_caps(cap);
    let seed = cli.seed.unwrap_or(inst.solver.seed);
    let mut manifest = ManifestBuilder::new(
        "bruteforce",
        instance,
        seed,
        serde_json::json!({
            "n": n, "r1": r1, "r2": r2, "epsilon": epsilon, "budget": budget,
        }),
    );
    let outcome = brute_force_achievable(&inst, *n, *r1, *r2, *epsilon, *budget, seed, &caps)?;

    let (mut inner_contains, mut outer_contains) = (String::from("-"), String::from("-"));
    let mut discrepancy = String::from("-");
    if !no_region_check {
        let aux = AuxSizes::defaults_for(&inst);
        let opts = {
            let mut o = inst.solver.clone();
            o.seed = seed;
            o
        };
        let both = trace_both(&inst, &default_directions(), &opts, aux)?;
        let inside_inner = both.inner.contains_with_slack(*r1, *r2, *epsilon);
        let inside_outer = both.outer.contains_with_slack(*r1, *r2, *epsilon);
        inner_contains = inside_inner.to_string();
        outer_contains = inside_outer.to_string();
        discrepancy = match outcome.certificate {
            Some(true) if !inside_outer => "achievable-point-outside-outer-region".into(),
            Some(false) if inside_inner => "unachievable-point-inside-inner-region".into(),
            _ => "-".into(),
        };
    }

    let mut csv = Csv::new(&[
        "n",
        "R1",
        "R2",
        "epsilon",
        "mode",
        "certificate",
        "best_event_prob",
        "best_expected_d1",
        "best_expected_d2",
        "inner_contains",
        "outer_contains",
        "discrepancy",
    ]);
    csv.row(&[
        n.to_string(),
        sig(*r1),
        sig(*r2),
        sig(*epsilon),
        if outcome.exhaustive {
            "exhaustive".into()
        } else {
            "randomized".into()
        },
        match outcome.certificate {
            Some(true) => "achievable".into(),
            Some(false) => "not-achievable".into(),
            None => "none".into(),
        },
        sig(outcome.best_event_prob),
        sig(outcome.best_expected_distortions.0),
        sig(outcome.best_expected_distortions.1),
        inner_contains,
        outer_contains,
        discrepancy,
    ]);
    let csv_path = cli.out_dir.join("bruteforce.csv");
    csv.write(&csv_path)?;
    manifest.add_output(&csv_path);

    let codes_path = cli.out_dir.join("codes.json");
    let mut text = serde_json::to_string_pretty(&outcome).expect("outcome serializes");
    text.push('\n');
    std::fs::write(&codes_path, text)?;
    manifest.add_output(&codes_path);
    manifest.write(&cli.out_dir)?;
    Ok(EXIT_OK)
}

fn cmd_baseline(cli: &Cli) -> Result<u8, CliError> {
    let Command::Baseline { instance, curve } = &cli.command else {
        unreachable!()
    };
    let inst = load(instance)?;
    let mut manifest = ManifestBuilder::new(
        "baseline",
        instance,
        cli.seed.unwrap_or(inst.solver.seed),
        serde_json::json!({ "curve": curve }),
    );
    let px = inst
        .source
        .marginalize(&[0])
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let py = inst
        .source
        .marginalize(&[1])
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut csv = Csv::new(&["kind", "param", "value"]);
    let r1 = blahut_arimoto(&px, &inst.d1, inst.targets.0)?;
    let r2 = blahut_arimoto(&py, &inst.d2, inst.targets.1)?;
    csv.row(&["rd_x".into(), sig(inst.targets.0), sig(r1)]);
    csv.row(&["rd_y".into(), sig(inst.targets.1), sig(r2)]);
    let sw = slepian_wolf_region(&inst.source)?;
    csv.row(&["sw_r1".into(), "-".into(), sig(sw.r1_floor)]);
    csv.row(&["sw_r2".into(), "-".into(), sig(sw.r2_floor)]);
    csv.row(&["sw_sum".into(), "-".into(), sig(sw.sum_floor)]);
    if let Some(points) = curve {
        let floor = inst.distortion_floor();
        let ceiling = inst.rate_zero_ceiling();
        for k in 0..=*points {
            let t = k as f64 / (*points).max(1) as f64;
            let dx = floor.0 + t * (ceiling.0 - floor.0);
            let dy = floor.1 + t * (ceiling.1 - floor.1);
            csv.row(&["rd_curve_x".into(), sig(dx), sig(blahut_arimoto(&px, &inst.d1, dx)?)]);
            csv.row(&["rd_curve_y".into(), sig(dy), sig(blahut_arimoto(&py, &inst.d2, dy)?)]);
        }
    }
    let path = cli.out_dir.join("baseline.csv");
    csv.write(&path)?;
    manifest.add_output(&path);
    manifest.write(&cli.out_dir)?;
    Ok(EXIT_OK)
}

//! Subcommand implementations.

use std::time::Instant;

use davies_lab::bohr::{adjoint_component_check, bohr_spectrum, decompose, default_cluster_tol};
use davies_lab::evolution::{
    choi_matrix_unchecked, contraction_check, DensityMatrix, Evolver,
};
use davies_lab::generators::{
    assemble_localised, davies_dissipator, davies_distance, davies_limit_reference, dissipativity,
    AssemblyOptions, AssemblyPath, Fault, GeneratorBundle, GeneratorKind,
};
use davies_lab::models::{benchmark, gibbs_state, Model};
use davies_lab::oft::{oft_eval, oft_time_domain};
use davies_lab::operator::{max_abs, random};
use davies_lab::weights::{
    b1_l1_limit, b1_l1_norm, balanced_gamma, kms_gamma, shifted_phi_gamma, Kernels, KmsKind, Phi,
};
use davies_lab::CMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, InitialState, WeightKind};
use crate::export::{export_bundle, BundleExport};
use crate::report::{CheckResult, Environment, Relation, RunReport, Table};
use crate::CliError;

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Restrict to these checks; empty means all.
    pub checks: Vec<String>,
    pub negative_control: bool,
    pub tolerance_scale: Option<f64>,
    pub fault: Option<Fault>,
}

pub const VERIFY_CHECKS: &[&str] = &[
    "stationarity",
    "negative_control",
    "trace_annihilation",
    "hermiticity_preservation",
];

pub const SWEEP_CHECKS: &[&str] = &[
    "stationarity",
    "davies_distance_decreasing",
    "coherent_norm_decreasing",
    "b1_l1_increasing",
    "b1_l1_bounded",
];

pub const EVOLVE_CHECKS: &[&str] = &[
    "trace",
    "positivity",
    "gibbs_distance_monotone",
    "contraction",
    "choi",
];

pub const SELFTEST_CHECKS: &[&str] = &[
    "functional_equation",
    "dual_path",
    "oft_time_domain",
    "adjoint_covariance",
    "stationarity",
    "davies_stationarity",
    "negative_control",
    "trace_annihilation",
    "hermiticity_preservation",
    "dissipativity",
    "contraction",
    "choi",
];

/// Largest Choi matrix built on request.
const CHOI_MAX_DIM: usize = 8;
/// Choi checks run by default up to this dimension.
const CHOI_DEFAULT_DIM: usize = 4;

struct Ctx {
    cfg: ExperimentConfig,
    opts: RunOptions,
    start: Instant,
}

impl Ctx {
    fn new(cfg: &ExperimentConfig, opts: &RunOptions, known: &[&str]) -> Result<Ctx, CliError> {
        let mut cfg = cfg.clone();
        if let Some(seed) = opts.seed {
            cfg.run.seed = seed;
        }
        if let Some(scale) = opts.tolerance_scale {
            cfg.run.tolerances.scale = scale;
        }
        if opts.negative_control {
            cfg.weight.balance_broken = true;
        }
        cfg.validate()?;
        for name in &opts.checks {
            if !known.contains(&name.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown check {name:?}; available: {}",
                    known.join(", ")
                )));
            }
        }
        Ok(Ctx {
            cfg,
            opts: opts.clone(),
            start: Instant::now(),
        })
    }

    fn wants(&self, name: &str) -> bool {
        self.opts.checks.is_empty() || self.opts.checks.iter().any(|c| c == name)
    }

    fn explicitly_wants(&self, name: &str) -> bool {
        self.opts.checks.iter().any(|c| c == name)
    }

    fn tol(&self, base: f64) -> f64 {
        self.cfg.run.tolerances.scaled(base)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.run.seed);
        rng.set_stream(stream);
        rng
    }

    fn assembly(&self, path: AssemblyPath, require_balance: bool) -> AssemblyOptions {
        AssemblyOptions {
            path,
            require_balance,
            fault: self.opts.fault,
            ..AssemblyOptions::default()
        }
    }

    fn bundle(&self, model: &Model, sigma: Option<f64>) -> Result<GeneratorBundle, CliError> {
        let weight = self.cfg.build_weight(sigma)?;
        let opts = self.assembly(self.cfg.generator.path, self.cfg.expects_balance());
        let built = match self.cfg.generator.kind {
            GeneratorKind::Davies => davies_dissipator(model, &weight, &opts),
            GeneratorKind::Localised => {
                let s = sigma.unwrap_or(self.cfg.weight.sigma);
                assemble_localised(model, &weight, s, &opts)
            }
        };
        built.map_err(|e| CliError::Config(format!("assembly: {e}")))
    }

    fn report(self, command: &str, checks: Vec<CheckResult>, data: Option<Table>) -> RunReport {
        let checks = checks.into_iter().filter(|c| self.wants(&c.name)).collect();
        let environment = Environment {
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.cfg.run.seed,
            tolerance_scale: self.cfg.run.tolerances.scale,
            negative_control: self.opts.negative_control,
            fault: self.opts.fault.map(|f| format!("{f:?}")),
        };
        let secs = self.start.elapsed().as_secs_f64();
        RunReport::new(command, self.cfg, checks, environment, secs, data)
    }
}

fn lib(e: davies_lab::Error) -> CliError {
    CliError::Library(e)
}

fn stationarity_tol(ctx: &Ctx, kind: GeneratorKind) -> f64 {
    let t = &ctx.cfg.run.tolerances;
    match kind {
        GeneratorKind::Davies => ctx.tol(t.davies_stationarity),
        GeneratorKind::Localised => ctx.tol(t.stationarity),
    }
}

/// `max ‖𝓛(T†) - 𝓛(T)†‖_F / (‖S‖_F ‖T‖_F)` over a few random `T`.
fn hermiticity_defect(bundle: &GeneratorBundle, rng: &mut ChaCha8Rng) -> f64 {
    let d = bundle.dim;
    let scale = bundle.superoperator.norm().max(f64::MIN_POSITIVE);
    (0..5)
        .map(|_| {
            let t = random::complex_gaussian(rng, d, d);
            let lhs = bundle.apply(&t.adjoint());
            let rhs = bundle.apply(&t).adjoint();
            (lhs - rhs).norm() / (scale * t.norm())
        })
        .fold(0.0, f64::max)
}

pub fn verify_stationarity(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let ctx = Ctx::new(cfg, opts, VERIFY_CHECKS)?;
    let model = ctx.cfg.build_model()?;
    let bundle = ctx.bundle(&model, None)?;
    let rep = bundle.stationarity();
    let tols = &ctx.cfg.run.tolerances;
    let mut checks = Vec::new();
    if ctx.opts.negative_control {
        checks.push(
            CheckResult::new(
                "negative_control",
                rep.residual_fro,
                Relation::AtLeast,
                tols.negative_control,
            )
            .with_detail("balance deliberately broken"),
        );
    } else {
        checks.push(CheckResult::new(
            "stationarity",
            rep.residual_fro,
            Relation::AtMost,
            stationarity_tol(&ctx, bundle.kind),
        ));
    }
    checks.push(CheckResult::new(
        "trace_annihilation",
        bundle.trace_defect,
        Relation::AtMost,
        ctx.tol(tols.trace),
    ));
    let mut rng = ctx.rng(1);
    checks.push(CheckResult::new(
        "hermiticity_preservation",
        hermiticity_defect(&bundle, &mut rng),
        Relation::AtMost,
        ctx.tol(tols.hermiticity),
    ));
    let mut table = Table::new(&[
        "residual_fro",
        "residual_trace_norm",
        "dissipator_only",
        "commutator_only",
        "coherent_balance",
        "recombination_defect",
    ]);
    table.push_nums(&[
        rep.residual_fro,
        rep.residual_trace_norm,
        rep.dissipator_only,
        rep.commutator_only,
        rep.coherent_balance,
        rep.recombination_defect,
    ]);
    table.metadata = vec![
        ("model".into(), model.id.clone()),
        ("weight".into(), bundle.weight.label().to_string()),
        ("generator".into(), format!("{:?}", bundle.kind)),
        ("path".into(), format!("{:?}", bundle.path)),
    ];
    if let Some(s) = bundle.sigma {
        table.metadata.push(("sigma".into(), crate::report::fmt_num(s)));
    }
    Ok(ctx.report("verify-stationarity", checks, Some(table)))
}

/// Largest step `next - prev` along a sequence; negative when strictly decreasing.
fn worst_increase(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

pub fn sweep_sigma(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let ctx = Ctx::new(cfg, opts, SWEEP_CHECKS)?;
    if ctx.cfg.generator.kind != GeneratorKind::Localised
        || ctx.cfg.weight.kind != WeightKind::Balanced
        || ctx.cfg.weight.balance_broken
    {
        return Err(CliError::Config(
            "sweep-sigma needs a localised generator with a balanced weight".into(),
        ));
    }
    let model = ctx.cfg.build_model()?;
    let phi = ctx.cfg.phi();
    let reference = davies_limit_reference(&model, &phi).map_err(lib)?;
    let d = model.dim();
    let p = ctx.cfg.run.p;
    let mut rng = ctx.rng(2);
    let samples: Vec<CMatrix> = (0..ctx.cfg.run.samples.max(1))
        .map(|_| random::complex_gaussian(&mut rng, d, d))
        .collect();
    let dist_col = if p == 1.0 {
        "davies_distance_p1".to_string()
    } else {
        format!("davies_distance_p{p}")
    };
    let mut table = Table::new(&[
        "sigma",
        &dist_col,
        "coherent_norm_B",
        "b1_l1",
        "stationarity_residual",
    ]);
    let mut per_sample: Vec<Vec<f64>> = vec![Vec::new(); samples.len()];
    let mut residuals = Vec::new();
    for &sigma in &ctx.cfg.run.sigmas {
        let bundle = ctx.bundle(&model, Some(sigma))?;
        let mut mean = 0.0;
        for (k, t) in samples.iter().enumerate() {
            let dist = davies_distance(&bundle, &reference, t, p).map_err(lib)?;
            per_sample[k].push(dist);
            mean += dist / samples.len() as f64;
        }
        let res = bundle.stationarity().residual_fro;
        residuals.push(res);
        table.push_nums(&[
            sigma,
            mean,
            bundle.coherent_b.norm(),
            b1_l1_norm(sigma).map_err(lib)?,
            res,
        ]);
    }
    let b1 = table.column("b1_l1").expect("numeric column");
    let b_norm = table.column("coherent_norm_B").expect("numeric column");
    let limit = b1_l1_limit();
    let mut checks = vec![CheckResult::new(
        "stationarity",
        residuals.iter().copied().fold(0.0, f64::max),
        Relation::AtMost,
        ctx.tol(ctx.cfg.run.tolerances.stationarity),
    )];
    if table.rows.len() >= 2 {
        let dist_worst = per_sample
            .iter()
            .map(|xs| worst_increase(xs))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(
            CheckResult::new("davies_distance_decreasing", dist_worst, Relation::Below, 0.0)
                .with_detail(format!("{} test operators", samples.len())),
        );
        // Non-strict: B vanishes identically on some models (e.g. the qubit).
        checks.push(CheckResult::new(
            "coherent_norm_decreasing",
            worst_increase(&b_norm),
            Relation::AtMost,
            0.0,
        ));
        let b1_rev: Vec<f64> = b1.iter().rev().copied().collect();
        checks.push(CheckResult::new(
            "b1_l1_increasing",
            worst_increase(&b1_rev),
            Relation::Below,
            0.0,
        ));
    }
    checks.push(
        CheckResult::new(
            "b1_l1_bounded",
            b1.iter().copied().fold(f64::NEG_INFINITY, f64::max) - limit,
            Relation::AtMost,
            0.0,
        )
        .with_detail(format!("limit {limit:.10}")),
    );
    table.metadata = vec![
        ("model".into(), model.id.clone()),
        ("phi".into(), phi.name().to_string()),
        ("samples".into(), samples.len().to_string()),
        ("b1_l1_limit".into(), crate::report::fmt_num(limit)),
    ];
    Ok(ctx.report("sweep-sigma", checks, Some(table)))
}

fn initial_state(ctx: &Ctx, model: &Model) -> Result<DensityMatrix, CliError> {
    let d = model.dim();
    let projector = |k: usize| {
        let v = model.eigen.vectors.column(k);
        &v * v.adjoint()
    };
    let m = match ctx.cfg.run.initial_state {
        InitialState::Excited => projector(d - 1),
        InitialState::Ground => projector(0),
        InitialState::Gibbs => return gibbs_state(model).map_err(lib),
        InitialState::MaximallyMixed => CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        InitialState::Random => random::density_matrix(&mut ctx.rng(3), d),
    };
    DensityMatrix::new(m).map_err(lib)
}

pub fn evolve(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let ctx = Ctx::new(cfg, opts, EVOLVE_CHECKS)?;
    let model = ctx.cfg.build_model()?;
    let bundle = ctx.bundle(&model, None)?;
    let tols = ctx.cfg.run.tolerances.clone();
    let times = ctx.cfg.run.times.clone();
    let rho0 = initial_state(&ctx, &model)?;
    let mut ev = Evolver::new(&bundle).map_err(lib)?;
    let traj = ev.evolve(&rho0, &times).map_err(lib)?;

    let mut table = Table::new(&["t", "trace", "min_eig", "gibbs_distance", "hermiticity_defect"]);
    for (k, t) in traj.times.iter().enumerate() {
        table.push_nums(&[
            *t,
            traj.states[k].trace().re,
            traj.diagnostics[k].min_eigenvalue,
            traj.gibbs_distance[k],
            traj.diagnostics[k].hermiticity_defect,
        ]);
    }
    let mut worst_trace = traj.worst_trace_defect();
    let mut min_eig = traj.min_eigenvalue();
    let mut checks = Vec::new();
    let d = model.dim();

    if ctx.wants("contraction") && ctx.cfg.run.pairs > 0 {
        let mut rng = ctx.rng(4);
        let mut pairs = Vec::with_capacity(ctx.cfg.run.pairs);
        for _ in 0..ctx.cfg.run.pairs {
            let a = DensityMatrix::new(random::density_matrix(&mut rng, d)).map_err(lib)?;
            let b = DensityMatrix::new(random::density_matrix(&mut rng, d)).map_err(lib)?;
            pairs.push((a, b));
        }
        let rep = contraction_check(&bundle, &pairs, &times).map_err(lib)?;
        worst_trace = worst_trace.max(rep.worst_trace_defect);
        min_eig = min_eig.min(rep.min_eigenvalue);
        let mut c = CheckResult::new(
            "contraction",
            rep.worst_excess,
            Relation::AtMost,
            ctx.tol(tols.contraction),
        )
        .with_detail(format!("{} pairs", pairs.len()));
        if !c.pass {
            if let Some((p, k)) = rep.witness {
                c = c.with_detail(format!("pair {p} at t = {}", times[k]));
            }
        }
        checks.push(c);
    }
    checks.push(CheckResult::new("trace", worst_trace, Relation::AtMost, ctx.tol(tols.trace)));
    checks.push(CheckResult::new(
        "positivity",
        min_eig,
        Relation::AtLeast,
        -ctx.tol(tols.positivity),
    ));
    let gd = worst_increase(&traj.gibbs_distance);
    checks.push(CheckResult::new(
        "gibbs_distance_monotone",
        if gd.is_finite() { gd } else { 0.0 },
        Relation::AtMost,
        ctx.tol(tols.contraction),
    ));
    let run_choi = if ctx.explicitly_wants("choi") {
        if d > CHOI_MAX_DIM {
            return Err(CliError::Config(format!(
                "choi check is limited to dimension {CHOI_MAX_DIM}, model has {d}"
            )));
        }
        true
    } else {
        ctx.wants("choi") && d <= CHOI_DEFAULT_DIM
    };
    if run_choi {
        let mut worst = f64::INFINITY;
        for &t in &ctx.cfg.run.choi_times {
            let c = choi_matrix_unchecked(&bundle, t).map_err(lib)?;
            worst = worst.min(c.min_eigenvalue);
        }
        checks.push(CheckResult::new("choi", worst, Relation::AtLeast, -ctx.tol(tols.choi)));
    }
    table.metadata = vec![
        ("model".into(), model.id.clone()),
        ("weight".into(), bundle.weight.label().to_string()),
        ("initial_state".into(), format!("{:?}", ctx.cfg.run.initial_state)),
        (
            "final_gibbs_distance".into(),
            crate::report::fmt_num(*traj.gibbs_distance.last().expect("nonempty times")),
        ),
    ];
    if !traj.flagged.is_empty() {
        table
            .metadata
            .push(("flagged_states".into(), format!("{:?}", traj.flagged)));
    }
    Ok(ctx.report("evolve", checks, Some(table)))
}

/// Models exercised by the self-test.
const SELFTEST_MODELS: [&str; 3] = ["qubit", "osc4", "random6"];

pub fn selftest(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let ctx = Ctx::new(cfg, opts, SELFTEST_CHECKS)?;
    let tols = ctx.cfg.run.tolerances.clone();
    let models: Vec<Model> = SELFTEST_MODELS
        .iter()
        .map(|n| benchmark(n).map_err(lib))
        .collect::<Result<_, _>>()?;
    let mut checks = Vec::new();

    if ctx.wants("functional_equation") {
        let mut worst = 0.0_f64;
        for s in [0.5, 1.0, 2.0] {
            let k = Kernels::new(balanced_gamma(Phi::Gaussian, s).map_err(lib)?, s).map_err(lib)?;
            for i in 0..9 {
                for j in 0..9 {
                    let r = k
                        .functional_equation_residual(-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64)
                        .map_err(lib)?;
                    worst = worst.max(r);
                }
            }
        }
        checks.push(CheckResult::new(
            "functional_equation",
            worst,
            Relation::AtMost,
            ctx.tol(tols.functional_equation),
        ));
    }

    let bohr_opts = ctx.assembly(AssemblyPath::BohrSum, true);
    let mut localised = Vec::new();
    for m in &models {
        let g = balanced_gamma(Phi::Sech, 1.0).map_err(lib)?;
        localised.push(assemble_localised(m, &g, 1.0, &bohr_opts).map_err(lib)?);
    }

    if ctx.wants("dual_path") {
        let quad = ctx.assembly(AssemblyPath::OmegaQuadrature, true);
        let mut worst = (0.0_f64, String::new());
        for (m, a) in models.iter().zip(&localised) {
            let g = balanced_gamma(Phi::Sech, 1.0).map_err(lib)?;
            let b = assemble_localised(m, &g, 1.0, &quad).map_err(lib)?;
            let rel = (&a.superoperator - &b.superoperator).norm() / a.superoperator.norm();
            if !(rel <= worst.0) {
                worst = (rel, m.id.clone());
            }
        }
        checks.push(
            CheckResult::new("dual_path", worst.0, Relation::AtMost, ctx.tol(tols.dual_path))
                .with_detail(format!("worst on {}", worst.1)),
        );
    }

    if ctx.wants("oft_time_domain") || ctx.wants("adjoint_covariance") {
        let m = &models[1];
        let s = bohr_spectrum(&m.eigen, default_cluster_tol(&m.eigen)).map_err(lib)?;
        let mut rng = ctx.rng(5);
        let a = random::complex_gaussian(&mut rng, m.dim(), m.dim());
        let dec = decompose(&a, &m.eigen, &s).map_err(lib)?;
        let mut oft_worst = 0.0_f64;
        for omega in [-2.0, -0.5, 0.0, 1.0, 2.5] {
            let bohr = oft_eval(&dec, omega, 1.0).map_err(lib)?.matrix;
            let time = oft_time_domain(&m.eigen, &a, omega, 1.0, 4096).map_err(lib)?;
            oft_worst = oft_worst.max((&bohr - time).norm() / bohr.norm());
        }
        checks.push(CheckResult::new(
            "oft_time_domain",
            oft_worst,
            Relation::AtMost,
            ctx.tol(tols.dual_path),
        ));
        let mut adj_worst = 0.0_f64;
        for m in &models {
            let s = bohr_spectrum(&m.eigen, default_cluster_tol(&m.eigen)).map_err(lib)?;
            for op in m.jumps.operators() {
                let da = decompose(op, &m.eigen, &s).map_err(lib)?;
                let ds = decompose(&op.adjoint(), &m.eigen, &s).map_err(lib)?;
                let dev = adjoint_component_check(&da, &ds).map_err(lib)?;
                adj_worst = adj_worst.max(dev / op.norm().max(f64::MIN_POSITIVE));
            }
        }
        checks.push(CheckResult::new(
            "adjoint_covariance",
            adj_worst,
            Relation::AtMost,
            ctx.tol(tols.adjoint),
        ));
    }

    let mut stat = 0.0_f64;
    let mut trace = 0.0_f64;
    let mut herm = 0.0_f64;
    let mut abscissa = f64::NEG_INFINITY;
    let mut rng = ctx.rng(6);
    for b in &localised {
        stat = stat.max(b.stationarity().residual_fro);
        trace = trace.max(b.trace_defect);
        herm = herm.max(hermiticity_defect(b, &mut rng));
        let y = b.effective_generator();
        let r = dissipativity(&y, &[]);
        abscissa = abscissa.max(r.spectral_abscissa / max_abs(&y).max(1.0));
    }
    checks.push(CheckResult::new(
        "stationarity",
        stat,
        Relation::AtMost,
        ctx.tol(tols.stationarity),
    ));
    checks.push(CheckResult::new("trace_annihilation", trace, Relation::AtMost, ctx.tol(tols.trace)));
    checks.push(CheckResult::new(
        "hermiticity_preservation",
        herm,
        Relation::AtMost,
        ctx.tol(tols.hermiticity),
    ));
    checks.push(CheckResult::new(
        "dissipativity",
        abscissa,
        Relation::AtMost,
        ctx.tol(tols.dissipativity),
    ));

    if ctx.wants("davies_stationarity") {
        let mut worst = 0.0_f64;
        for m in &models {
            for kind in [KmsKind::Glauber, KmsKind::Metropolis] {
                let b = davies_dissipator(m, &kms_gamma(kind), &bohr_opts).map_err(lib)?;
                worst = worst.max(b.stationarity().residual_fro);
            }
        }
        checks.push(CheckResult::new(
            "davies_stationarity",
            worst,
            Relation::AtMost,
            ctx.tol(tols.davies_stationarity),
        ));
    }

    if ctx.wants("negative_control") {
        let g = shifted_phi_gamma(Phi::Gaussian, 1.0, 0.0).map_err(lib)?;
        let b = assemble_localised(&models[0], &g, 1.0, &ctx.assembly(AssemblyPath::BohrSum, false))
            .map_err(lib)?;
        checks.push(CheckResult::new(
            "negative_control",
            b.stationarity().residual_fro,
            Relation::AtLeast,
            tols.negative_control,
        ));
    }

    if ctx.wants("contraction") {
        let times: Vec<f64> = (1..=40).map(|k| 0.5 * k as f64).collect();
        let mut rng = ctx.rng(7);
        let mut worst = f64::NEG_INFINITY;
        for (m, b) in models.iter().zip(&localised).take(2) {
            let d = m.dim();
            let pairs = (0..10)
                .map(|_| {
                    Ok((
                        DensityMatrix::new(random::density_matrix(&mut rng, d))?,
                        DensityMatrix::new(random::density_matrix(&mut rng, d))?,
                    ))
                })
                .collect::<Result<Vec<_>, davies_lab::Error>>()
                .map_err(lib)?;
            worst = worst.max(contraction_check(b, &pairs, &times).map_err(lib)?.worst_excess);
        }
        checks.push(CheckResult::new(
            "contraction",
            worst,
            Relation::AtMost,
            ctx.tol(tols.contraction),
        ));
    }

    if ctx.wants("choi") {
        let mut worst = f64::INFINITY;
        for t in [0.1, 1.0, 10.0] {
            worst = worst.min(choi_matrix_unchecked(&localised[0], t).map_err(lib)?.min_eigenvalue);
        }
        checks.push(CheckResult::new("choi", worst, Relation::AtLeast, -ctx.tol(tols.choi)));
    }

    Ok(ctx.report("selftest", checks, None))
}

pub fn export(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<BundleExport, CliError> {
    let ctx = Ctx::new(cfg, opts, &[])?;
    let model = ctx.cfg.build_model()?;
    let bundle = ctx.bundle(&model, None)?;
    Ok(export_bundle(&model, &bundle))
}

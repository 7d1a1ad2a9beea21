//! Scenario-file driver: load spaces, measures, kernels and losses from
//! JSON, run solves and verifications, emit JSON/CSV reports.
//!
//! Exit codes: 0 success, 1 input error, 2 bound violation (verify /
//! kernel-dist), 3 solver non-convergence (train).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{batch_verify_jobs, BatchSummary, BoundReport, Scenario, Theorem};
use crate::error::Error;
use crate::kernels::{
    gaussian_bandwidth_bound, hierarchical_perturbation_bound, sup_distance, Kernel, KernelSpec,
};
use crate::losses::{Loss, PairwiseLoss, ProblemLoss, SmoothedLoss};
use crate::scenariogen::{sample_batch, SampleConfig};
use crate::solver::{solve_rpl, solve_svm, SolveReport, SolverOptions};
use crate::space::{Atom, DiscreteMeasure, GroundSpace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// A CLI failure: message plus process exit code.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn input_err(message: impl Into<String>) -> CliError {
    CliError {
        message: message.into(),
        code: EXIT_INPUT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        input_err(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

/// Ground-space description: explicit points or a regular grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Per-axis [low, high] ranges.
    #[serde(rename = "box")]
    pub bounds: Vec<(f64, f64)>,
    /// Points per axis; the total point count is guarded at 10⁴.
    pub resolution: usize,
}

impl SpaceSpec {
    pub fn build(&self, resolution_override: Option<usize>) -> CliResult<GroundSpace> {
        match (&self.points, &self.grid) {
            (Some(points), None) => Ok(GroundSpace::new(points.clone())?),
            (None, Some(grid)) => {
                let resolution = resolution_override.unwrap_or(grid.resolution);
                Ok(GroundSpace::grid(&grid.bounds, resolution)?)
            }
            _ => Err(input_err("space needs exactly one of `points` or `grid`")),
        }
    }
}

/// A measure over the file's space: atom list plus optional weights
/// (omitted means uniform).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<(usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl MeasureSpec {
    pub fn build(&self, space: &GroundSpace) -> CliResult<DiscreteMeasure> {
        let atoms: Vec<Atom> = self.atoms.iter().map(|&(x, y)| Atom::new(x, y)).collect();
        Ok(match &self.weights {
            Some(w) => DiscreteMeasure::new(space.clone(), atoms, w.clone())?,
            None => DiscreteMeasure::uniform(space.clone(), atoms)?,
        })
    }
}

/// A loss for training: plain classical/pairwise, or an explicitly
/// convolution-smoothed nondifferentiable loss at a fixed δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainLossSpec {
    Smoothed { smooth: SmoothSpec },
    Plain(ProblemLoss),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothSpec {
    pub base: BaseLossSpec,
    pub delta: f64,
}

/// The nondifferentiable base of a smoothed loss: a bare name
/// ("hinge", "abs_rho") or a full loss object.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseLossSpec {
    Name(String),
    Full(ProblemLoss),
}

impl BaseLossSpec {
    fn resolve(&self) -> CliResult<ProblemLoss> {
        match self {
            BaseLossSpec::Full(l) => Ok(l.clone()),
            BaseLossSpec::Name(name) => match name.as_str() {
                "hinge" => Ok(ProblemLoss::Classical(Loss::hinge())),
                "abs_rho" => Ok(ProblemLoss::Pairwise(PairwiseLoss::abs_rho())),
                other => Err(input_err(format!(
                    "unknown smoothing base `{other}`; use a full loss object"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub measure: String,
    pub lambda: f64,
    pub kernel: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub theorem: Theorem,
    pub triple1: TripleSpec,
    pub triple2: TripleSpec,
    /// Overrides the file-level loss for this scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<ProblemLoss>,
}

/// Seeded random batch request; requires `--seed` on the command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBatchSpec {
    pub count: usize,
    pub theorems: Vec<Theorem>,
    #[serde(default)]
    pub losses: Vec<ProblemLoss>,
    #[serde(default)]
    pub config: SampleConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// The `verify` scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureSpec>,
    #[serde(default)]
    pub kernels: BTreeMap<String, Kernel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<ProblemLoss>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_batch: Option<RandomBatchSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

/// The `train` file: one triple, one loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub version: u32,
    pub space: SpaceSpec,
    pub measure: MeasureSpec,
    pub kernel: Kernel,
    pub loss: TrainLossSpec,
    pub lambda: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// The `kernel-dist` file: kernel pairs measured on a grid or point set
/// against their analytic perturbation bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDistFile {
    pub version: u32,
    pub space: SpaceSpec,
    pub pairs: Vec<KernelPairSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelPairSpec {
    pub kernel1: Kernel,
    pub kernel2: Kernel,
    /// Lower bandwidth limit `a` for the Gaussian bound; defaults to
    /// min{γ₁, γ₂}.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        // Render the failing location as a JSON pointer.
        let pointer = e
            .path()
            .to_string()
            .replace('.', "/")
            .replace('[', "/")
            .replace(']', "");
        input_err(format!(
            "{}: schema violation at /{pointer}: {}",
            path.display(),
            e.inner()
        ))
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub reports: Vec<BoundReport>,
    pub summary: BatchSummary,
}

fn resolve_scenarios(file: &ScenarioFile, seed: Option<u64>) -> CliResult<Vec<Scenario>> {
    let mut scenarios = Vec::new();
    if !file.scenarios.is_empty() {
        let space = file
            .space
            .as_ref()
            .ok_or_else(|| input_err("scenario list needs a top-level space"))?
            .build(None)?;
        let mut measures = BTreeMap::new();
        for (name, spec) in &file.measures {
            measures.insert(name.clone(), spec.build(&space)?);
        }
        for (i, spec) in file.scenarios.iter().enumerate() {
            let loss = spec
                .loss
                .clone()
                .or_else(|| file.loss.clone())
                .ok_or_else(|| {
                    input_err(format!(
                        "/scenarios/{i}: no loss given and no file-level loss"
                    ))
                })?;
            let lookup =
                |t: &TripleSpec, which: &str| -> CliResult<(DiscreteMeasure, f64, Kernel)> {
                    let m = measures.get(&t.measure).ok_or_else(|| {
                        input_err(format!(
                            "/scenarios/{i}/{which}: unknown measure `{}`",
                            t.measure
                        ))
                    })?;
                    let k = file.kernels.get(&t.kernel).ok_or_else(|| {
                        input_err(format!(
                            "/scenarios/{i}/{which}: unknown kernel `{}`",
                            t.kernel
                        ))
                    })?;
                    Ok((m.clone(), t.lambda, k.clone()))
                };
            let (measure1, lambda1, kernel1) = lookup(&spec.triple1, "triple1")?;
            let (measure2, lambda2, kernel2) = lookup(&spec.triple2, "triple2")?;
            scenarios.push(Scenario {
                theorem: spec.theorem,
                loss,
                measure1,
                lambda1,
                kernel1,
                measure2,
                lambda2,
                kernel2,
            });
        }
    }
    if let Some(batch) = &file.random_batch {
        let seed = seed.ok_or_else(|| {
            input_err("the file requests a random_batch; pass --seed to generate it")
        })?;
        if batch.theorems.is_empty() {
            return Err(input_err("/random_batch/theorems must be nonempty"));
        }
        let losses: Vec<ProblemLoss> = if batch.losses.is_empty() {
            vec![file
                .loss
                .clone()
                .ok_or_else(|| input_err("/random_batch: no losses and no file-level loss"))?]
        } else {
            batch.losses.clone()
        };
        scenarios.extend(sample_batch(
            seed,
            batch.count,
            &batch.theorems,
            &losses,
            &batch.config,
        )?);
    }
    if scenarios.is_empty() {
        return Err(input_err(
            "no scenarios: give `scenarios` or `random_batch`",
        ));
    }
    Ok(scenarios)
}

/// One CSV row per scenario, '.' decimals, shortest round-trip floats.
pub fn reports_to_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(
        "theorem,lhs,tv_term,lambda_term,kernel_term,rhs_total,margin,precondition_ok\n",
    );
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.theorem.name(),
            cell(r.lhs),
            cell(r.tv_term),
            cell(r.lambda_term),
            cell(r.kernel_term),
            cell(r.rhs_total),
            cell(r.margin),
            r.precondition_ok,
        );
    }
    out
}

/// Runs batch verification for a scenario file. Returns the rendered
/// stdout payload and the exit code.
pub fn cmd_verify(
    path: &Path,
    out: OutFormat,
    seed: Option<u64>,
    jobs: usize,
) -> CliResult<(String, i32)> {
    let file: ScenarioFile = parse_file(path)?;
    let scenarios = resolve_scenarios(&file, seed)?;
    let (reports, summary) = batch_verify_jobs(&scenarios, &file.solver, jobs);
    let violations = summary.violated;
    let output = VerifyOutput { reports, summary };
    let json = serde_json::to_string_pretty(&output).expect("reports serialize");
    let csv = reports_to_csv(&output.reports);
    if let Some(p) = &file.output.json {
        std::fs::write(p, &json).map_err(|e| input_err(format!("write {p}: {e}")))?;
    }
    if let Some(p) = &file.output.csv {
        std::fs::write(p, &csv).map_err(|e| input_err(format!("write {p}: {e}")))?;
    }
    let rendered = match out {
        OutFormat::Json => json,
        OutFormat::Csv => csv,
    };
    let code = if violations > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    };
    Ok((rendered, code))
}

// ---------------------------------------------------------------------------
// kernel-dist
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct KernelDistRow {
    pub measured: f64,
    /// Analytic perturbation bound, when the pair admits one
    /// (Gaussian bandwidth pair or structurally matched hierarchical
    /// pair).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

pub fn cmd_kernel_dist(path: &Path, grid_resolution: Option<usize>) -> CliResult<(String, i32)> {
    let file: KernelDistFile = parse_file(path)?;
    let space = file.space.build(grid_resolution)?;
    let diam = space.diameter();
    let mut rows = Vec::new();
    let mut violated = false;
    for pair in &file.pairs {
        let measured = sup_distance(&pair.kernel1, &pair.kernel2, &space)?;
        let bound = match (pair.kernel1.spec(), pair.kernel2.spec()) {
            (KernelSpec::Gaussian { gamma: g1 }, KernelSpec::Gaussian { gamma: g2 }) => {
                let a = pair.a.unwrap_or_else(|| g1.min(*g2));
                Some(gaussian_bandwidth_bound(*g1, *g2, a, diam)?)
            }
            (KernelSpec::Hierarchical(p1), KernelSpec::Hierarchical(p2))
                if p1.same_structure(p2) =>
            {
                Some(hierarchical_perturbation_bound(p1, p2, diam)?)
            }
            _ => None,
        };
        if let Some(b) = bound {
            if measured > b {
                violated = true;
            }
        }
        let ratio = bound.and_then(|b| (b > 0.0).then(|| measured / b));
        rows.push(KernelDistRow {
            measured,
            bound,
            ratio,
        });
    }
    let rendered = serde_json::to_string_pretty(&rows).expect("rows serialize");
    Ok((rendered, if violated { EXIT_VIOLATION } else { EXIT_OK }))
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn cmd_train(path: &Path) -> CliResult<(String, i32)> {
    let file: TrainFile = parse_file(path)?;
    let space = file.space.build(None)?;
    let measure = file.measure.build(&space)?;
    let mut opts = file.solver.clone();
    let report: crate::error::Result<SolveReport> = match &file.loss {
        TrainLossSpec::Plain(ProblemLoss::Classical(l)) => {
            solve_svm(&measure, file.lambda, &file.kernel, l, &opts)
        }
        TrainLossSpec::Plain(ProblemLoss::Pairwise(p)) => {
            solve_rpl(&measure, file.lambda, &file.kernel, p, &opts)
        }
        TrainLossSpec::Smoothed { smooth } => {
            let base = smooth.base.resolve()?;
            // Validates the base is nondifferentiable and δ ∈ (0, 1].
            SmoothedLoss::new(base.clone(), smooth.delta)?;
            opts.delta_schedule = vec![smooth.delta];
            match base {
                ProblemLoss::Classical(l) => {
                    solve_svm(&measure, file.lambda, &file.kernel, &l, &opts)
                }
                ProblemLoss::Pairwise(p) => {
                    solve_rpl(&measure, file.lambda, &file.kernel, &p, &opts)
                }
            }
        }
    };
    match report {
        Ok(r) => Ok((
            serde_json::to_string_pretty(&r).expect("report serializes"),
            EXIT_OK,
        )),
        Err(e @ Error::NonConvergence { .. }) => Err(CliError {
            message: e.to_string(),
            code: EXIT_NO_CONVERGENCE,
        }),
        Err(e) => Err(e.into()),
    }
}

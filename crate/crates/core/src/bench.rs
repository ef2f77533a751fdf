//! Scenario-driven benchmark harness: runs the three compared solvers on an
//! identical generated instance, normalizes objective curves, and emits
//! machine-readable result tables.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::FrequencySampleSet;
use crate::problems::{
    assemble_problem, gen_sparse_image, sample_frequencies, NoiseSpec, SparseImage,
};
use crate::solvers::{
    run_apgd_with, run_pfw_with, run_vfw_with, LassoProblem, PfwConfig, SolverTrace,
};

/// APGD budget for a scenario. The zero default tolerance runs the solver to
/// its iteration cap, which is what a reference curve wants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApgdParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ApgdParams {
    fn default() -> Self {
        ApgdParams {
            max_iter: 10_000,
            tol: 0.0,
        }
    }
}

/// Vanilla Frank-Wolfe budget for a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VfwParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for VfwParams {
    fn default() -> Self {
        VfwParams {
            max_iter: 10_000,
            tol: 1e-4,
        }
    }
}

/// Per-solver configurations of a scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverGrid {
    pub apgd: ApgdParams,
    pub vfw: VfwParams,
    pub pfw: PfwConfig,
}

/// A reproducible benchmark configuration.
///
/// Serialized as JSON. `seed`, `n`, `k` and `alpha` are required; everything
/// else has defaults. `psnr_db` is 20 dB when the field is absent and
/// noiseless when explicitly `null` (JSON has no infinity literal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Identifier used in output file names and records; derived from the
    /// parameters when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub seed: u64,
    /// Image side length; the image has n^2 pixels.
    pub n: usize,
    /// Number of lit pixels in the ground truth.
    #[serde(alias = "K")]
    pub k: usize,
    /// Measurement budget multiplier: L = alpha * k measurements.
    pub alpha: usize,
    #[serde(default = "default_psnr")]
    pub psnr_db: Option<f64>,
    #[serde(default = "default_lambda_factor")]
    pub lambda_factor: f64,
    /// Wall-time budget in seconds applied to each solver run.
    #[serde(default)]
    pub time_budget_s: Option<f64>,
    #[serde(default)]
    pub solvers: SolverGrid,
}

fn default_psnr() -> Option<f64> {
    Some(20.0)
}

fn default_lambda_factor() -> f64 {
    0.1
}

/// A generated instance plus the pieces needed to describe it.
#[derive(Debug)]
pub struct Instance {
    pub problem: LassoProblem,
    pub truth: SparseImage,
    pub freqs: FrequencySampleSet,
}

impl Scenario {
    /// Measurement count L = alpha * k. The degenerate k = 0 scenario keeps
    /// a single measurement so the operator stays well-formed.
    pub fn measurement_count(&self) -> usize {
        if self.k == 0 {
            1
        } else {
            self.alpha * self.k
        }
    }

    /// Explicit id, or one derived from the generating parameters.
    pub fn resolved_id(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("n{}_k{}_a{}_s{}", self.n, self.k, self.alpha, self.seed))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("constraint violated: n >= 1"));
        }
        if self.alpha == 0 {
            return Err(Error::invalid("constraint violated: alpha >= 1"));
        }
        if self.k > self.n * self.n {
            return Err(Error::invalid(format!(
                "constraint violated: K <= n^2 ({} > {})",
                self.k,
                self.n * self.n
            )));
        }
        if self.measurement_count() > self.n * self.n {
            return Err(Error::invalid(format!(
                "constraint violated: alpha*K <= n^2 ({} > {})",
                self.measurement_count(),
                self.n * self.n
            )));
        }
        if !(self.lambda_factor > 0.0 && self.lambda_factor < 1.0) {
            return Err(Error::invalid(
                "constraint violated: lambda_factor in (0, 1)",
            ));
        }
        if let Some(p) = self.psnr_db {
            if p.is_nan() || p == f64::NEG_INFINITY {
                return Err(Error::invalid("constraint violated: psnr_db must be real"));
            }
        }
        if let Some(b) = self.time_budget_s {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid(
                    "constraint violated: time_budget_s must be positive",
                ));
            }
        }
        if let Some(id) = &self.id {
            let ok = !id.is_empty()
                && id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(Error::invalid(
                    "constraint violated: id must be nonempty [A-Za-z0-9_-]",
                ));
            }
        }
        let g = &self.solvers;
        if g.apgd.max_iter == 0 || g.vfw.max_iter == 0 || g.pfw.max_iter == 0 {
            return Err(Error::invalid("constraint violated: max_iter >= 1"));
        }
        if !(g.apgd.tol >= 0.0 && g.apgd.tol.is_finite())
            || !(g.vfw.tol >= 0.0 && g.vfw.tol.is_finite())
            || !(g.pfw.tol >= 0.0 && g.pfw.tol.is_finite())
        {
            return Err(Error::invalid(
                "constraint violated: solver tolerances must be nonnegative",
            ));
        }
        if !(g.pfw.eps0 > 0.0 && g.pfw.eps0.is_finite()) {
            return Err(Error::invalid("constraint violated: eps0 > 0"));
        }
        if let Some(d) = g.pfw.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid("constraint violated: delta > 0"));
            }
        }
        Ok(())
    }

    /// Generates the instance: ground truth from `seed`, frequencies from
    /// `seed + 1`, noise from `seed + 2`.
    pub fn build_instance(&self) -> Result<Instance> {
        self.validate()?;
        let image = gen_sparse_image(self.n, self.k, self.seed)?;
        let freqs = sample_frequencies(self.n, self.measurement_count(), self.seed.wrapping_add(1))?;
        let noise = NoiseSpec {
            psnr_db: self.psnr_db.unwrap_or(f64::INFINITY),
            seed: self.seed.wrapping_add(2),
        };
        let (problem, truth) = assemble_problem(image, freqs.clone(), &noise, self.lambda_factor)?;
        Ok(Instance {
            problem,
            truth,
            freqs,
        })
    }
}

/// One iterate of one solver run, flattened for tabular output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub scenario_id: String,
    pub solver: String,
    pub iter: u64,
    pub time_s: f64,
    pub objective: f64,
    pub normalized_objective: f64,
    pub forward_count: u64,
    pub adjoint_count: u64,
    pub support_size: u64,
}

/// Flattens a trace into records; normalized objectives are filled in later
/// by [`normalize_traces`].
pub fn trace_records(scenario_id: &str, solver: &str, trace: &SolverTrace) -> Vec<BenchmarkRecord> {
    trace
        .rows
        .iter()
        .map(|row| BenchmarkRecord {
            scenario_id: scenario_id.to_string(),
            solver: solver.to_string(),
            iter: row.iter,
            time_s: row.time_s,
            objective: row.objective,
            normalized_objective: 0.0,
            forward_count: row.forward_count,
            adjoint_count: row.adjoint_count,
            support_size: row.support_size,
        })
        .collect()
}

/// Runs APGD, V-FW and P-FW on the identical generated instance and returns
/// the normalized records of all three traces.
pub fn run_benchmark(scenario: &Scenario) -> Result<Vec<BenchmarkRecord>> {
    let instance = scenario.build_instance()?;
    let id = scenario.resolved_id();
    let budget = scenario.time_budget_s;
    let grid = &scenario.solvers;

    let mut records = Vec::new();
    let apgd = run_apgd_with(&instance.problem, grid.apgd.max_iter, grid.apgd.tol, budget);
    records.extend(trace_records(&id, "apgd", &apgd));
    let vfw = run_vfw_with(&instance.problem, grid.vfw.max_iter, grid.vfw.tol, budget);
    records.extend(trace_records(&id, "vfw", &vfw));
    let pfw = run_pfw_with(&instance.problem, &grid.pfw, budget);
    records.extend(trace_records(&id, "pfw", &pfw));

    normalize_traces(&mut records);
    Ok(records)
}

/// Rescales objectives per scenario to `(L_k - L*) / (L0 - L*)`, where `L0`
/// is the objective at zero and `L*` the best value any solver reached,
/// clipped to [0, 1]. A scenario already optimal at zero normalizes to 0.
pub fn normalize_traces(records: &mut [BenchmarkRecord]) {
    struct Stats {
        l0: Option<f64>,
        lmin: f64,
        lmax: f64,
    }
    let mut stats: HashMap<String, Stats> = HashMap::new();
    for r in records.iter() {
        let s = stats.entry(r.scenario_id.clone()).or_insert(Stats {
            l0: None,
            lmin: f64::INFINITY,
            lmax: f64::NEG_INFINITY,
        });
        if r.iter == 0 && s.l0.is_none() {
            s.l0 = Some(r.objective);
        }
        s.lmin = s.lmin.min(r.objective);
        s.lmax = s.lmax.max(r.objective);
    }
    for r in records.iter_mut() {
        let s = &stats[&r.scenario_id];
        let l0 = s.l0.unwrap_or(s.lmax);
        let denom = l0 - s.lmin;
        r.normalized_objective = if denom > 0.0 {
            ((r.objective - s.lmin) / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
}

/// Output format of the raw record table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Writes records as CSV with a fixed column order. Floats keep full
/// round-trip precision.
pub fn write_csv<W: Write>(records: &[BenchmarkRecord], w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "scenario_id,solver,iter,time_s,objective,normalized_objective,\
         forward_count,adjoint_count,support_size"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.solver,
            r.iter,
            r.time_s,
            r.objective,
            r.normalized_objective,
            r.forward_count,
            r.adjoint_count,
            r.support_size
        )?;
    }
    Ok(())
}

/// Writes the record table to `path` in the requested format.
pub fn emit_results(
    records: &[BenchmarkRecord],
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    match format {
        OutputFormat::Csv => {
            write_csv(records, &mut w).map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, records)
                .map_err(|e| Error::json(path.display().to_string(), e))?;
            w.write_all(b"\n")
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes a sidecar JSON file with the fully resolved scenario and the
/// normalization convention, so every result table can be reproduced.
pub fn emit_meta(scenario: &Scenario, path: &Path) -> Result<()> {
    let meta = serde_json::json!({
        "scenario_id": scenario.resolved_id(),
        "scenario": scenario,
        "measurements": scenario.measurement_count(),
        "normalization":
            "(objective - best) / (objective_at_zero - best), best = min over all solvers, clipped to [0, 1]",
    });
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes one two-column (time, normalized objective) file per solver for
/// external plotting. Returns the written paths.
pub fn emit_plot_data(
    scenario: &Scenario,
    records: &[BenchmarkRecord],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let id = scenario.resolved_id();
    let config = serde_json::to_string(scenario)
        .map_err(|e| Error::json(dir.display().to_string(), e))?;

    let mut solvers: Vec<&str> = Vec::new();
    for r in records {
        if !solvers.contains(&r.solver.as_str()) {
            solvers.push(&r.solver);
        }
    }

    let mut written = Vec::new();
    for solver in solvers {
        let path = dir.join(format!("{id}_{solver}.dat"));
        let file = File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            writeln!(w, "# scenario {id} solver {solver}")?;
            writeln!(w, "# config {config}")?;
            writeln!(w, "# columns: time_s normalized_objective")?;
            for r in records.iter().filter(|r| r.solver == solver) {
                writeln!(w, "{} {}", r.time_s, r.normalized_objective)?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}

//! End-to-end release pipeline.
//!
//! Stages run in order: imputation, attribute triage, tuple distribution,
//! quasi-identifier refinement, PIF threshold, privacy grid, then
//! `ts * tn * t` perturbation instances that are scored and compared.

mod config;
mod export;
mod report;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{validate_config, Application, RunConfig};
pub use export::{write_grid_csv, write_instances_csv, write_pif_csv, write_profile_artifacts, write_release_artifacts};
pub use report::{
    Accounting, DistributionSummary, InputFingerprint, InstanceAccounting, ReleaseReport, RunStatus, RunSummary,
    StageTiming, Timings, TriageSummary,
};

use crate::fis::{generate_grid, privacy_measure, EpsDeltaGrid, FisConfig, FuzzySystem};
use crate::profiler::{
    assess_q, pif_threshold, refine_q, tuple_distribution, CsfTable, KmeansParams, PifSummary, ProfileParams,
    Refinement, TupleDistribution,
};
use crate::risk::{linkable_set, similarity_groups};
use crate::score::{
    effectiveness, select_best, utility_classification, utility_kl, InstanceId, LinkageSummary,
    PerturbationInstance, Selection,
};
use crate::synth::{compose_budget, MechanismStep, SynthRegistry, Synthesizer};
use crate::tabular::{impute_missing, triage_attributes, write_csv, Column, Dataset, ImputePolicy, Role};
use crate::{seed, Error, FieldError, Result};

/// Stage progress for callers polling a long run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub stage: String,
    pub done: usize,
    pub total: usize,
}

pub type ProgressFn<'a> = &'a (dyn Fn(&Progress) + Sync);

/// Profiling results shared by the `profile` command and full runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub refinement: Refinement,
    pub pif: PifSummary,
    pub csf: CsfTable,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: ReleaseReport,
    /// The selected table, `None` on rejection or failure.
    pub released: Option<Dataset>,
}

impl RunOutcome {
    pub fn profile(&self) -> Option<Profile> {
        let r = &self.report;
        Some(Profile {
            refinement: r.refinement.clone()?,
            pif: r.pif.clone()?,
            csf: r.csf.clone()?,
        })
    }
}

pub fn fingerprint(dataset: &Dataset) -> Result<InputFingerprint> {
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf)?;
    Ok(InputFingerprint {
        name: dataset.name.clone(),
        n_rows: dataset.n_rows(),
        n_cols: dataset.n_cols(),
        sha256: hex::encode(Sha256::digest(&buf)),
    })
}

struct Timer {
    start: Instant,
    last: Instant,
    current: &'static str,
    stages: Vec<StageTiming>,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            current: "impute",
            stages: Vec::new(),
        }
    }

    fn enter(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.stages.push(StageTiming {
            stage: self.current.to_string(),
            secs: (now - self.last).as_secs_f64(),
        });
        self.last = now;
        self.current = stage;
    }

    fn finish(mut self, n_rows: usize) -> Timings {
        self.enter("done");
        let total_secs = self.start.elapsed().as_secs_f64();
        Timings {
            stages: self.stages,
            total_secs,
            per_record_secs: total_secs / n_rows.max(1) as f64,
        }
    }
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config(vec![FieldError::new(field, message)])
}

fn label_for(dataset: &Dataset, config: &RunConfig) -> Option<String> {
    config.label.clone().or_else(|| dataset.class_label().map(str::to_string))
}

/// Imputation, label marking and triage.
fn prepare(dataset: &Dataset, config: &RunConfig) -> Result<Dataset> {
    let mut d = impute_missing(dataset, ImputePolicy::default())?;
    if let Some(label) = label_for(dataset, config) {
        d = d.with_class_label(&label)?;
    }
    triage_attributes(&d, &config.gq, config.uniqueness_threshold)
}

fn refine(qs: &Dataset, config: &RunConfig, params: ProfileParams) -> Result<(Refinement, Dataset)> {
    let profiles = if qs.quasi().is_empty() {
        Vec::new()
    } else {
        assess_q(qs, params)?
    };
    let refinement = refine_q(&profiles, config.alpha, config.tau_floor)?;
    let refined = refinement.apply(qs)?;
    Ok((refinement, refined))
}

fn profile_params(config: &RunConfig) -> ProfileParams {
    ProfileParams {
        attr_bins: config.attr_bins,
        pif_bins: config.pif_bins,
    }
}

/// Triage and profiling only.
pub fn profile(dataset: &Dataset, config: &RunConfig) -> Result<Profile> {
    let config = validate_config(config).map_err(Error::Config)?;
    let params = profile_params(&config);
    let qs = prepare(dataset, &config)?;
    let (refinement, refined) = refine(&qs, &config, params)?;
    let (pif, csf) = pif_threshold(&refined, params)?;
    Ok(Profile { refinement, pif, csf })
}

pub fn run(dataset: &Dataset, config: &RunConfig, registry: &SynthRegistry) -> Result<RunOutcome> {
    run_with_progress(dataset, config, registry, None)
}

/// Runs the full pipeline.
///
/// Invalid configuration is returned as an error. Failures inside a stage
/// produce a report with [`RunStatus::Failed`] naming the stage; rejection
/// is a normal outcome with no released table.
pub fn run_with_progress(
    dataset: &Dataset,
    config: &RunConfig,
    registry: &SynthRegistry,
    progress: Option<ProgressFn<'_>>,
) -> Result<RunOutcome> {
    let config = validate_config(config).map_err(Error::Config)?;
    let synth = registry.get(&config.synthesizer)?;
    if config.app == Application::GaussianNb && label_for(dataset, &config).is_none() {
        return Err(config_error("label", "classification utility needs a class label"));
    }
    let n = dataset.n_rows();
    let delta_base = config.delta_base(n.max(1));
    let mut report = ReleaseReport {
        status: RunStatus::Rejected,
        input: fingerprint(dataset)?,
        config: config.clone(),
        metadata: None,
        triage: None,
        tuple_distribution: None,
        refinement: None,
        pif: None,
        csf: None,
        delta_base,
        delta_max: config.delta_max_factor * delta_base,
        grid: None,
        surface: Vec::new(),
        instances: Vec::new(),
        selection: None,
        accounting: None,
        summary: None,
        warnings: Vec::new(),
        timings: None,
    };
    let mut timer = Timer::new();
    let notify = |stage: &str, done: usize, total: usize| {
        if let Some(p) = progress {
            p(&Progress {
                stage: stage.to_string(),
                done,
                total,
            });
        }
    };
    let result = execute(dataset, &config, synth.as_ref(), &mut report, &mut timer, &notify);
    let stage = timer.current;
    report.timings = Some(timer.finish(n));
    let released = match result {
        Ok(released) => released,
        Err(e) => {
            log::error!("run failed during {stage}: {e}");
            report.status = RunStatus::Failed {
                stage: stage.to_string(),
                message: e.to_string(),
            };
            None
        }
    };
    notify("done", 1, 1);
    Ok(RunOutcome { report, released })
}

fn execute(
    dataset: &Dataset,
    config: &RunConfig,
    synth: &dyn Synthesizer,
    report: &mut ReleaseReport,
    timer: &mut Timer,
    notify: &(dyn Fn(&str, usize, usize) + Sync),
) -> Result<Option<Dataset>> {
    let base_seed = config.seed_value();
    let params = profile_params(config);

    notify("triage", 0, 1);
    timer.enter("triage");
    let qs = prepare(dataset, config)?;
    report.metadata = Some(qs.metadata());
    report.triage = Some(TriageSummary {
        quasi: qs.quasi(),
        sensitive: qs.sensitive(),
        dropped: qs.dropped.clone(),
    });

    notify("tuple_distribution", 0, 1);
    timer.enter("tuple_distribution");
    let kmeans = KmeansParams {
        restarts: config.kmeans_restarts,
        seed: seed::derive(base_seed, &[0]),
        ..KmeansParams::default()
    };
    let distribution = tuple_distribution(&qs, config.cn_min..=config.cn_max, kmeans)?;
    report.tuple_distribution = Some(DistributionSummary {
        source: distribution.source,
        k: distribution.k,
        sizes: distribution.sizes(),
        silhouette: distribution.silhouette,
        scores: distribution.scores.clone(),
    });

    notify("refine", 0, 1);
    timer.enter("refine");
    let (refinement, refined) = refine(&qs, config, params)?;
    report.refinement = Some(refinement);

    notify("pif_threshold", 0, 1);
    timer.enter("pif_threshold");
    let (pif, csf) = pif_threshold(&refined, params)?;
    let pif_thresh = pif.pif_thresh;
    report.pif = Some(pif);
    report.csf = Some(csf);

    notify("grid", 0, 1);
    timer.enter("grid");
    let fis = FuzzySystem::new(FisConfig::standard(config.fis_sigma))?;
    let grid = generate_grid(&fis, pif_thresh, config.tn, config.t_eps, report.delta_max)?;
    report.surface = fis.surface(21);
    report.grid = Some(grid.clone());

    timer.enter("perturb_and_score");
    let quasi = refined.quasi();
    let sensitive = refined.sensitive();
    if sensitive.is_empty() {
        return Err(Error::InvalidArgument("no sensitive attributes left to perturb".into()));
    }
    let ctx = InstanceContext {
        config,
        synth,
        refined: &refined,
        original_s: refined.select(&sensitive)?,
        quasi: &quasi,
        sensitive: &sensitive,
        distribution: &distribution,
        label: label_for(dataset, config),
    };
    let ids: Vec<InstanceId> = (0..config.ts)
        .flat_map(|sweep| {
            (0..config.tn).flat_map(move |grid_index| {
                (0..config.t).map(move |replicate| InstanceId {
                    sweep,
                    grid_index,
                    replicate,
                })
            })
        })
        .collect();
    let total = ids.len();
    let done = AtomicUsize::new(0);
    notify("perturb_and_score", 0, total);
    let instances = ids
        .par_iter()
        .map(|&id| {
            let r = ctx.instance(id, &grid);
            notify("perturb_and_score", done.fetch_add(1, Ordering::Relaxed) + 1, total);
            r
        })
        .collect::<Result<Vec<_>>>()?;

    timer.enter("select");
    let selection = select_best(&instances, config.e_t)?;
    let per_instance: Vec<InstanceAccounting> = instances
        .iter()
        .map(|i| {
            let m = privacy_measure(pif_thresh, i.epsilon, i.delta);
            InstanceAccounting {
                id: i.id,
                epsilon: i.epsilon,
                delta: i.delta,
                f: m.f,
                f_d: m.f_d,
            }
        })
        .collect();
    let released_id = selection.released();
    report.accounting = Some(Accounting {
        cumulative_epsilon: per_instance.iter().map(|a| a.epsilon).sum(),
        cumulative_delta: per_instance.iter().map(|a| a.delta).sum(),
        released: per_instance.iter().find(|a| Some(a.id) == released_id).cloned(),
        per_instance,
    });
    let count = instances.len() as f64;
    report.summary = Some(RunSummary {
        instance_count: instances.len(),
        mean_utility: instances.iter().map(|i| i.utility.u_perturbed).sum::<f64>() / count,
        mean_effectiveness: instances.iter().map(|i| i.effectiveness).sum::<f64>() / count,
        best_effectiveness: instances.iter().map(|i| i.effectiveness).fold(f64::NEG_INFINITY, f64::max),
    });
    report.warnings.extend(instances.iter().flat_map(|i| i.warnings.iter().map(move |w| format!("{}: {w}", i.id))));

    let mut instances = instances;
    let released = match &selection {
        Selection::Released { id, .. } => {
            report.status = RunStatus::Released;
            instances.iter_mut().find(|i| i.id == *id).and_then(|i| i.table.take())
        }
        Selection::Rejected { .. } => {
            report.status = RunStatus::Rejected;
            None
        }
    };
    report.selection = Some(selection);
    report.instances = instances;
    for i in &mut report.instances {
        i.table = None;
    }
    Ok(released)
}

struct InstanceContext<'a> {
    config: &'a RunConfig,
    synth: &'a dyn Synthesizer,
    refined: &'a Dataset,
    original_s: Dataset,
    quasi: &'a [String],
    sensitive: &'a [String],
    distribution: &'a TupleDistribution,
    label: Option<String>,
}

impl InstanceContext<'_> {
    fn instance(&self, id: InstanceId, grid: &EpsDeltaGrid) -> Result<PerturbationInstance> {
        let c = self.config;
        let base = c.seed_value();
        let pair = grid.pairs[id.grid_index];
        let budget = compose_budget(
            pair.epsilon,
            pair.delta,
            self.sensitive.len(),
            self.distribution.k,
            c.weight_share,
        )?;
        let inst_seed = seed::derive(base, &[1, id.sweep as u64, id.grid_index as u64, id.replicate as u64]);
        let synthesized = self
            .synth
            .synthesize(&self.original_s, self.distribution, &budget, self.refined.n_rows(), inst_seed)?;
        let released = self.merge(&synthesized.data)?;
        let mut steps = synthesized.steps;
        steps.push(MechanismStep::post_processing("merge_q"));

        let perturbed_s = released.select(self.sensitive)?;
        let groups = similarity_groups(&released, self.quasi)?;
        let linkage = linkable_set(&self.original_s, &perturbed_s, &groups, c.linkage_extreme)?
            .with_residual_leak(pair.epsilon, c.t_eps)?;
        let utility = match c.app {
            Application::KlGeneric => utility_kl(&self.original_s, &perturbed_s, c.utility_bins)?,
            Application::GaussianNb => {
                let label = self.label.as_deref().expect("label checked before the run");
                utility_classification(self.refined, &released, label, c.test_fraction, seed::derive(base, &[2]))?
            }
        };
        let p_n = linkage.p_n.expect("residual leak attached");
        let (e_loss, e) = effectiveness(utility.u_loss, p_n, c.c);
        let mut warnings = synthesized.warnings;
        if linkage.zero_vector_rows > 0 {
            warnings.push(format!("{} rows had a zero sensitive vector", linkage.zero_vector_rows));
        }
        Ok(PerturbationInstance {
            id,
            epsilon: pair.epsilon,
            delta: pair.delta,
            utility,
            linkage: LinkageSummary::from_result(&linkage),
            e_loss,
            effectiveness: e,
            steps,
            warnings,
            table: Some(released),
        })
    }

    /// Refined table with its sensitive columns replaced by synthetic ones.
    fn merge(&self, synthetic: &Dataset) -> Result<Dataset> {
        if synthetic.n_rows() != self.refined.n_rows() {
            return Err(Error::Schema(format!(
                "synthesizer returned {} rows, expected {}",
                synthetic.n_rows(),
                self.refined.n_rows()
            )));
        }
        let cols = self
            .refined
            .columns()
            .iter()
            .map(|col| {
                if col.role == Some(Role::Quasi) {
                    return Ok(col.clone());
                }
                let s = synthetic.column(&col.name)?;
                if s.kind() != col.kind() {
                    return Err(Error::Schema(format!("synthesizer changed the kind of `{}`", col.name)));
                }
                Ok(Column {
                    role: Some(Role::Sensitive),
                    ..s.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.refined.replace_columns(cols)
    }
}

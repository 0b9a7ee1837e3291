//! Training loops: vanilla, single-view self-paced, and the fused three-expert
//! pipeline, with early stopping on validation Q-loss.

mod config;
mod evaluate;
mod prepare;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{ArchitectureKind, CurriculumConfig, ModelConfig, SchedulerKind, TrainConfig};
pub use evaluate::{evaluate, predict, predict_normalized, report_predictions, split_qloss, Predictor};
pub use prepare::{prepare, Prepared, SplitName};

use crate::curriculum::{score_groups, CurriculumMask, DifficultyScores, PaceEvent, PaceState, Scheduler, View};
use crate::data::stratified_batches;
use crate::forecaster::{backward, init_params, MaskWeights, ModelParams, ModelSpec};
use crate::fusion::{expert_losses, train_fusion, FusionParams, FusionSplit};
use crate::loss_metrics::{instance_loss_tensor, MetricsReport};
use crate::numerics::{AdamConfig, AdamState, RandomStream, Tensor};
use crate::{Error, Result, Scalar};

/// Per-epoch losses of one trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct History<S> {
    pub label: String,
    /// Masked training objective (normalized units), averaged over the epoch.
    pub train_loss: Vec<S>,
    /// Mean validation Q-loss in original units.
    pub val_loss: Vec<S>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub warm_start_epochs: usize,
}

impl<S: Scalar> History<S> {
    fn new(label: &str) -> Self {
        Self {
            label: label.to_string(),
            train_loss: Vec::new(),
            val_loss: Vec::new(),
            best_epoch: 0,
            warm_start_epochs: 0,
        }
    }

    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionSummary<S> {
    pub expert_val_loss: [S; 3],
    pub fused_val_loss: S,
    pub best_epoch: usize,
    pub initial_expert: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport<S> {
    pub scheduler: SchedulerKind,
    /// One history per trained model (three for the fused pipeline).
    pub histories: Vec<History<S>>,
    pub pace_trace: Vec<PaceEvent<S>>,
    pub metrics: MetricsReport<S>,
    pub val_qloss: S,
    pub test_qloss: S,
    pub fusion: Option<FusionSummary<S>>,
    pub wall_time_secs: f64,
}

impl<S: Scalar> RunReport<S> {
    pub fn best_epoch(&self) -> usize {
        self.histories.first().map_or(0, |h| h.best_epoch)
    }

    pub const LOSSES_HEADER: &'static str = "model,epoch,train_loss,val_loss";

    /// `model,epoch,train_loss,val_loss` rows for every history.
    pub fn losses_csv(&self) -> String {
        let mut out = String::from(Self::LOSSES_HEADER);
        out.push('\n');
        for h in &self.histories {
            for (e, (tr, va)) in h.train_loss.iter().zip(&h.val_loss).enumerate() {
                out.push_str(&format!("{},{},{},{}\n", h.label, e + 1, tr, va));
            }
        }
        out
    }

    pub fn pace_csv(&self) -> String {
        let mut out = String::from(PaceEvent::<S>::CSV_HEADER);
        out.push('\n');
        for ev in &self.pace_trace {
            out.push_str(&ev.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Model, optimizer and early-stopping state carried across epochs.
#[derive(Clone, Debug)]
pub struct Learner<S> {
    pub params: ModelParams<S>,
    adam: AdamState<S>,
    iteration: u64,
    best: ModelParams<S>,
    best_val: S,
    stall: usize,
    stopped: bool,
    pub history: History<S>,
}

impl<S: Scalar> Learner<S> {
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn best_params(&self) -> &ModelParams<S> {
        &self.best
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }
}

/// Shared model after the full-data warm start, with the `lambda_0` pace.
#[derive(Clone, Debug)]
pub struct WarmStart<S> {
    pub learner: Learner<S>,
    pub scores: DifficultyScores<S>,
    pub pace: PaceState<S>,
}

struct Ctx<'a, S> {
    prep: &'a Prepared<S>,
    config: &'a TrainConfig,
    levels: Vec<S>,
}

impl<'a, S: Scalar> Ctx<'a, S> {
    fn new(prep: &'a Prepared<S>, config: &'a TrainConfig) -> Result<Self> {
        config.validate()?;
        if prep.t_in() != config.model.t_in || prep.t_out() != config.model.t_out {
            return Err(Error::config("model", "T_in/T_out differ from the prepared windows"));
        }
        Ok(Self {
            prep,
            config,
            levels: config.quantile_set::<S>()?.levels().to_vec(),
        })
    }

    fn spec(&self) -> ModelSpec {
        self.config.model.spec(self.levels.len(), self.prep.num_nodes())
    }

    fn new_learner(&self, stream: &RandomStream, label: &str) -> Result<Learner<S>> {
        let params = init_params(&self.spec(), &mut stream.derive("init"))?;
        let adam = AdamState::new(
            params.flat().len(),
            AdamConfig::with_learning_rate(S::lit(self.config.learning_rate)),
        );
        Ok(Learner {
            best: params.clone(),
            params,
            adam,
            iteration: 0,
            best_val: S::infinity(),
            stall: 0,
            stopped: false,
            history: History::new(label),
        })
    }

    /// Group difficulty scores of the current model on the training windows.
    fn score(&self, params: &ModelParams<S>, levels: &[S]) -> Result<DifficultyScores<S>> {
        let preds = predict_normalized(params, self.prep, SplitName::Train)?;
        let losses = instance_loss_tensor(&preds, self.prep.targets(SplitName::Train), levels)?;
        Ok(score_groups(&losses))
    }

    /// Runs epochs until `until` epochs have been recorded or early stopping fires.
    /// Pace updates happen inside the epoch at the scheduler's iteration guard;
    /// the window pool of an epoch is drawn at its start.
    fn run_epochs(
        &self,
        learner: &mut Learner<S>,
        mut scheduler: Option<&mut Scheduler<S>>,
        until: usize,
        stream: &mut RandomStream,
        trace: &mut Vec<PaceEvent<S>>,
    ) -> Result<()> {
        let train = self.prep.anchors(SplitName::Train);
        let full = CurriculumMask::full(self.prep.num_nodes(), train.len(), &self.levels);
        let (t_in, t_out) = (self.prep.t_in(), self.prep.t_out());
        while !learner.stopped && learner.history.epochs() < until {
            let mask = scheduler.as_deref().map_or(&full, Scheduler::mask);
            let batches = stratified_batches(train, self.config.batch_size, mask, stream)?;
            let mut loss_sum = S::zero();
            let mut weight_sum = S::zero();
            for batch in &batches {
                let mask = scheduler.as_deref().map_or(&full, Scheduler::mask);
                let nodes = mask.included_nodes();
                let (x, y) = self.prep.normalized().gather(&batch.anchors, &nodes, t_in, t_out)?;
                let g = backward(
                    &learner.params,
                    &x,
                    &y,
                    &nodes,
                    MaskWeights::PerQuantile(mask.quantile_weights()),
                    mask.levels(),
                    true,
                )?;
                if !g.total_weight.is_zero() {
                    loss_sum = loss_sum + g.loss * g.total_weight;
                    weight_sum = weight_sum + g.total_weight;
                    learner.adam.update(learner.params.flat_mut(), g.grads.values())?;
                }
                learner.iteration += 1;
                if let Some(s) = scheduler.as_deref_mut() {
                    if s.is_due(learner.iteration) {
                        let scores = self.score(&learner.params, s.mask().levels())?;
                        trace.push(s.update(&scores, learner.iteration));
                    }
                }
            }
            let train_loss = if weight_sum.is_zero() { S::zero() } else { loss_sum / weight_sum };
            let val = split_qloss(Predictor::Single(&learner.params), self.prep, SplitName::Val, &self.levels)?;
            let h = &mut learner.history;
            h.train_loss.push(train_loss);
            h.val_loss.push(val);
            let epoch = h.val_loss.len();
            if val < learner.best_val {
                learner.best_val = val;
                learner.best = learner.params.clone();
                h.best_epoch = epoch;
                learner.stall = 0;
            } else if scheduler.as_deref().is_none_or(Scheduler::is_saturated) {
                // Patience only runs down once the curriculum has admitted everything.
                learner.stall += 1;
                if learner.stall >= self.config.patience {
                    learner.stopped = true;
                }
            }
        }
        Ok(())
    }

    fn warm_start(&self, stream: &RandomStream, batches: &mut RandomStream, label: &str) -> Result<WarmStart<S>> {
        let mut learner = self.new_learner(stream, label)?;
        let epochs = self.config.curriculum.warm_start_epochs.min(self.config.max_epochs);
        self.run_epochs(&mut learner, None, epochs, batches, &mut Vec::new())?;
        learner.history.warm_start_epochs = learner.history.epochs();
        let scores = self.score(&learner.params, &self.levels)?;
        let pace = PaceState::initial(&self.config.curriculum.settings(&self.levels), &scores)?;
        Ok(WarmStart { learner, scores, pace })
    }

    /// Continues a warm-started learner under one view's scheduler.
    fn continue_spl(
        &self,
        warm: &WarmStart<S>,
        view: View,
        stream: &mut RandomStream,
        trace: &mut Vec<PaceEvent<S>>,
    ) -> Result<Learner<S>> {
        let mut learner = warm.learner.clone();
        learner.history.label = view.as_str().to_string();
        if !learner.stopped {
            let mut scheduler = Scheduler::new(view, warm.pace.clone(), &warm.scores, &self.levels, learner.iteration, trace);
            self.run_epochs(&mut learner, Some(&mut scheduler), self.config.max_epochs, stream, trace)?;
        }
        learner.params = learner.best.clone();
        Ok(learner)
    }

    fn finish(&self, predictor: Predictor<'_, S>) -> Result<(MetricsReport<S>, S, S)> {
        let q = self.config.quantile_set::<S>()?;
        let metrics = evaluate(predictor, self.prep, SplitName::Test, &q, &self.config.horizons)?;
        let val = split_qloss(predictor, self.prep, SplitName::Val, &self.levels)?;
        let test = split_qloss(predictor, self.prep, SplitName::Test, &self.levels)?;
        Ok((metrics, val, test))
    }
}

fn root_streams(seed: u64) -> (RandomStream, RandomStream) {
    let root = RandomStream::new(seed);
    let batches = root.derive("batches");
    (root, batches)
}

/// Full-data training for `E0` epochs, then group scores and `lambda_0` on the
/// training windows.
pub fn warm_start<S: Scalar>(prep: &Prepared<S>, config: &TrainConfig) -> Result<WarmStart<S>> {
    let ctx = Ctx::new(prep, config)?;
    let (root, mut batches) = root_streams(config.seed);
    ctx.warm_start(&root, &mut batches, "warm_start")
}

/// Unmasked quantile training with early stopping; returns the best-epoch model.
pub fn train_vanilla<S: Scalar>(prep: &Prepared<S>, config: &TrainConfig) -> Result<(ModelParams<S>, RunReport<S>)> {
    let start = Instant::now();
    let ctx = Ctx::new(prep, config)?;
    let (root, mut batches) = root_streams(config.seed);
    let mut learner = ctx.new_learner(&root, "vanilla")?;
    ctx.run_epochs(&mut learner, None, config.max_epochs, &mut batches, &mut Vec::new())?;
    let params = learner.best.clone();
    let (metrics, val_qloss, test_qloss) = ctx.finish(Predictor::Single(&params))?;
    Ok((
        params,
        RunReport {
            scheduler: SchedulerKind::None,
            histories: vec![learner.history],
            pace_trace: Vec::new(),
            metrics,
            val_qloss,
            test_qloss,
            fusion: None,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Warm start followed by self-paced training under one view's scheduler.
///
/// The warm start consumes the same batch stream as [`train_vanilla`], so with a
/// saturated pace (`p0 = 100`, pinned levels) the two runs are bit-identical.
pub fn train_spl<S: Scalar>(
    prep: &Prepared<S>,
    config: &TrainConfig,
    kind: SchedulerKind,
) -> Result<(ModelParams<S>, RunReport<S>)> {
    let start = Instant::now();
    let view = kind
        .view()
        .ok_or_else(|| Error::config("scheduler", "train_spl needs spatial, temporal or quantile"))?;
    let ctx = Ctx::new(prep, config)?;
    let (root, mut batches) = root_streams(config.seed);
    let warm = ctx.warm_start(&root, &mut batches, view.as_str())?;
    let mut trace = Vec::new();
    let learner = ctx.continue_spl(&warm, view, &mut batches, &mut trace)?;
    let (metrics, val_qloss, test_qloss) = ctx.finish(Predictor::Single(&learner.params))?;
    Ok((
        learner.params,
        RunReport {
            scheduler: kind,
            histories: vec![learner.history],
            pace_trace: trace,
            metrics,
            val_qloss,
            test_qloss,
            fusion: None,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

/// The three experts and the fusion layer of a fused run.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble<S> {
    /// Spatial, temporal and quantile experts, in that order.
    pub experts: [ModelParams<S>; 3],
    pub fusion: FusionParams<S>,
}

impl<S: Scalar> Ensemble<S> {
    pub fn predictor(&self) -> Predictor<'_, S> {
        let [a, b, c] = &self.experts;
        Predictor::Ensemble {
            experts: [a, b, c],
            fusion: &self.fusion,
        }
    }
}

/// Shared warm start, one expert per view on its own derived stream, then the
/// fusion layer trained on the frozen experts.
pub fn train_stqcl<S: Scalar>(prep: &Prepared<S>, config: &TrainConfig) -> Result<(Ensemble<S>, RunReport<S>)> {
    let start = Instant::now();
    let ctx = Ctx::new(prep, config)?;
    let (root, mut batches) = root_streams(config.seed);
    let warm = ctx.warm_start(&root, &mut batches, "warm_start")?;
    let mut trace = Vec::new();
    let mut learners = Vec::with_capacity(3);
    for view in View::ALL {
        let mut stream = root.derive(&format!("expert/{view}"));
        learners.push(ctx.continue_spl(&warm, view, &mut stream, &mut trace)?);
    }
    let experts: [ModelParams<S>; 3] = [
        learners[0].params.clone(),
        learners[1].params.clone(),
        learners[2].params.clone(),
    ];
    let outputs = |which| -> Result<[_; 3]> {
        Ok([
            predict_normalized(&experts[0], prep, which)?,
            predict_normalized(&experts[1], prep, which)?,
            predict_normalized(&experts[2], prep, which)?,
        ])
    };
    let train_out = outputs(SplitName::Train)?;
    let val_out = outputs(SplitName::Val)?;
    let split = |out, which| fusion_split(out, prep.targets(which));
    let fit = train_fusion(
        split(&train_out, SplitName::Train),
        split(&val_out, SplitName::Val),
        &ctx.levels,
        &config.fusion,
        &mut root.derive("fusion"),
    )?;
    let expert_val_loss = expert_losses(split(&val_out, SplitName::Val), &ctx.levels)?;
    let fused_val_loss = fit.val_history[fit.best_epoch];
    let ensemble = Ensemble {
        experts,
        fusion: fit.params,
    };
    let (metrics, val_qloss, test_qloss) = ctx.finish(ensemble.predictor())?;
    Ok((
        ensemble,
        RunReport {
            scheduler: SchedulerKind::All,
            histories: learners.into_iter().map(|l| l.history).collect(),
            pace_trace: trace,
            metrics,
            val_qloss,
            test_qloss,
            fusion: Some(FusionSummary {
                expert_val_loss,
                fused_val_loss,
                best_epoch: fit.best_epoch,
                initial_expert: fit.initial_expert,
            }),
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

fn fusion_split<'a, S>(out: &'a [Tensor<S>; 3], targets: &'a Tensor<S>) -> FusionSplit<'a, S> {
    FusionSplit {
        experts: [&out[0], &out[1], &out[2]],
        targets,
    }
}

/// Trained artifacts of any run kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Trained<S> {
    Single(ModelParams<S>),
    Ensemble(Ensemble<S>),
}

/// Dispatches on `config.scheduler`.
pub fn train<S: Scalar>(prep: &Prepared<S>, config: &TrainConfig) -> Result<(Trained<S>, RunReport<S>)> {
    match config.scheduler {
        SchedulerKind::None => train_vanilla(prep, config).map(|(p, r)| (Trained::Single(p), r)),
        SchedulerKind::All => train_stqcl(prep, config).map(|(e, r)| (Trained::Ensemble(e), r)),
        kind => train_spl(prep, config, kind).map(|(p, r)| (Trained::Single(p), r)),
    }
}

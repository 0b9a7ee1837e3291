//! Self-paced curriculum: group difficulty scores, the thresholding rule
//! `v = 1 iff l < lambda`, the spatial / temporal / quantile schedulers and the
//! percentile-driven pace.
//!
//! Spatial and temporal views gate whole node columns and window rows. The quantile
//! view gates heads by their mean loss and moves each head's training level from a
//! start boundary toward its target level as the pace progresses.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::loss_metrics::LossTensor;
use crate::numerics::{nearest_rank_percentile, Tensor};
use crate::{Error, Result, Scalar};

pub use crate::trainer::warm_start;

/// Mean loss per node (over windows and heads), per window (over nodes and heads)
/// and per head (over nodes and windows).
#[derive(Clone, Debug, PartialEq)]
pub struct DifficultyScores<S> {
    pub spatial: Vec<S>,
    pub temporal: Vec<S>,
    pub quantile: Vec<S>,
}

impl<S: Scalar> DifficultyScores<S> {
    pub fn view(&self, view: View) -> &[S] {
        match view {
            View::Spatial => &self.spatial,
            View::Temporal => &self.temporal,
            View::Quantile => &self.quantile,
        }
    }
}

pub fn score_groups<S: Scalar>(losses: &LossTensor<S>) -> DifficultyScores<S> {
    let [n, w, q] = losses.dims();
    let mut spatial = vec![S::zero(); n];
    let mut temporal = vec![S::zero(); w];
    let mut quantile = vec![S::zero(); q];
    for i in 0..n {
        for j in 0..w {
            for k in 0..q {
                let l = losses.get(i, j, k);
                spatial[i] = spatial[i] + l;
                temporal[j] = temporal[j] + l;
                quantile[k] = quantile[k] + l;
            }
        }
    }
    let div = |xs: &mut Vec<S>, count: usize| {
        let c = S::from_usize_lossy(count);
        xs.iter_mut().for_each(|x| *x = *x / c);
    };
    div(&mut spatial, w * q);
    div(&mut temporal, n * q);
    div(&mut quantile, n * w);
    DifficultyScores {
        spatial,
        temporal,
        quantile,
    }
}

/// Instance-level indicator: `v[i, j, k] = 1` iff `l[i, j, k] < lambda`.
pub fn instance_mask<S: Scalar>(losses: &LossTensor<S>, lambda: S) -> Tensor<S> {
    losses
        .tensor()
        .map(|l| if l < lambda { S::one() } else { S::zero() })
}

/// Groups whose score is strictly below `lambda`.
pub fn threshold_groups<S: Scalar>(scores: &[S], lambda: S) -> Vec<usize> {
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < lambda)
        .map(|(i, _)| i)
        .collect()
}

/// Nodes with spatial score below `lambda_s`.
pub fn spatial_mask<S: Scalar>(scores: &[S], lambda_s: S) -> Result<Vec<usize>> {
    let nodes = threshold_groups(scores, lambda_s);
    if nodes.is_empty() {
        return Err(Error::EmptyInclusion { view: "node" });
    }
    Ok(nodes)
}

/// Windows with temporal score below `lambda_t`.
pub fn temporal_mask<S: Scalar>(scores: &[S], lambda_t: S) -> Result<Vec<usize>> {
    let windows = threshold_groups(scores, lambda_t);
    if windows.is_empty() {
        return Err(Error::EmptyInclusion { view: "window" });
    }
    Ok(windows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Spatial,
    Temporal,
    Quantile,
}

impl View {
    pub const ALL: [View; 3] = [View::Spatial, View::Temporal, View::Quantile];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Spatial => "spatial",
            View::Temporal => "temporal",
            View::Quantile => "quantile",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    EasyToHard,
    HardToEasy,
}

/// How the quantile view expresses its indicator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRule {
    /// Binary head weights; the scheduled level enters through the pinball loss.
    #[default]
    LevelSchedule,
    /// Active heads are weighted by their current level, inactive heads by zero.
    LevelWeight,
}

/// Linear interpolation of each head's training level from `start` to `target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileSchedule<S> {
    pub start: Vec<S>,
    pub target: Vec<S>,
    pub progress: S,
}

impl<S: Scalar> QuantileSchedule<S> {
    /// Starts at widened (more extreme) boundaries, e.g. `{0.02, 0.5, 0.98}` for
    /// targets `{0.1, 0.5, 0.9}`.
    pub fn hard_to_easy(target: &[S]) -> Self {
        Self::scaled(target, 1.2)
    }

    /// Starts at narrowed boundaries, e.g. `{0.3, 0.5, 0.7}` for `{0.1, 0.5, 0.9}`.
    pub fn easy_to_hard(target: &[S]) -> Self {
        Self::scaled(target, 0.5)
    }

    pub fn for_direction(direction: Direction, target: &[S]) -> Self {
        match direction {
            Direction::HardToEasy => Self::hard_to_easy(target),
            Direction::EasyToHard => Self::easy_to_hard(target),
        }
    }

    /// Levels fixed at the targets from the start.
    pub fn pinned(target: &[S]) -> Self {
        Self {
            start: target.to_vec(),
            target: target.to_vec(),
            progress: S::one(),
        }
    }

    fn scaled(target: &[S], factor: f64) -> Self {
        let half = S::lit(0.5);
        let lo = S::lit(1e-3);
        let hi = S::lit(1.0 - 1e-3);
        let start = target
            .iter()
            .map(|&a| (half + (a - half) * S::lit(factor)).max(lo).min(hi))
            .collect();
        Self {
            start,
            target: target.to_vec(),
            progress: S::zero(),
        }
    }

    pub fn effective_levels(&self) -> Vec<S> {
        let half = S::lit(0.5);
        self.start
            .iter()
            .zip(&self.target)
            .map(|(&a0, &a1)| {
                if a1 == half {
                    half
                } else if self.progress >= S::one() {
                    a1
                } else {
                    a0 + self.progress * (a1 - a0)
                }
            })
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.progress >= S::one() || self.start == self.target
    }
}

/// Pace of one view: inclusion percentile, age parameter and update period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewPace<S> {
    /// Percentile in `[0, 100]`; 100 means every group is admitted.
    pub percentile: f64,
    /// Age parameter; `+inf` once saturated.
    pub lambda: S,
    /// Update period in optimizer iterations.
    pub step_size: u64,
    pub direction: Direction,
}

impl<S: Scalar> ViewPace<S> {
    pub fn is_saturated(&self) -> bool {
        self.percentile >= 100.0
    }

    /// Scores in the frame the threshold works in: hardest-first directions negate.
    pub fn keyed(&self, scores: &[S]) -> Vec<S> {
        match self.direction {
            Direction::EasyToHard => scores.to_vec(),
            Direction::HardToEasy => scores.iter().map(|&s| -s).collect(),
        }
    }

    fn lambda_for(&self, scores: &[S]) -> S {
        if self.is_saturated() {
            return S::infinity();
        }
        nearest_rank_percentile(&self.keyed(scores), self.percentile).unwrap_or_else(S::infinity)
    }

    fn raise(&mut self, increment: f64, scores: &[S]) {
        self.percentile = (self.percentile + increment).min(100.0);
        let candidate = self.lambda_for(scores);
        if candidate > self.lambda {
            self.lambda = candidate;
        }
    }

    /// Included groups under the current lambda.
    pub fn admitted(&self, scores: &[S]) -> Vec<usize> {
        threshold_groups(&self.keyed(scores), self.lambda)
    }
}

/// Age parameters, step sizes, percentiles and the quantile schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaceState<S> {
    pub spatial: ViewPace<S>,
    pub temporal: ViewPace<S>,
    pub quantile: ViewPace<S>,
    /// Percentile increment per update.
    pub increment: f64,
    /// Quantile percentile at warm start; sets how fast the level schedule advances.
    pub quantile_initial_percentile: f64,
    pub schedule: QuantileSchedule<S>,
    pub rule: QuantileRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaceSettings<S> {
    pub initial_percentile: f64,
    pub increment: f64,
    pub step_sizes: [u64; 3],
    pub directions: [Direction; 3],
    pub schedule: QuantileSchedule<S>,
    pub rule: QuantileRule,
}

impl<S: Scalar> PaceState<S> {
    /// Initial pace with each `lambda_0` at the `initial_percentile` of its view's scores.
    pub fn initial(settings: &PaceSettings<S>, scores: &DifficultyScores<S>) -> Result<Self> {
        if !(0.0..=100.0).contains(&settings.initial_percentile) {
            return Err(Error::config("curriculum.initial_percentile", "must be in [0, 100]"));
        }
        if !(settings.increment > 0.0) {
            return Err(Error::config("curriculum.increment", "must be positive"));
        }
        if settings.step_sizes.contains(&0) {
            return Err(Error::config("curriculum.step_sizes", "must be positive"));
        }
        let make = |view: View| {
            let idx = view as usize;
            let mut pace = ViewPace {
                percentile: settings.initial_percentile,
                lambda: S::neg_infinity(),
                step_size: settings.step_sizes[idx],
                // The quantile direction is carried by the level schedule; head
                // thresholds always admit low-loss heads first.
                direction: if view == View::Quantile {
                    Direction::EasyToHard
                } else {
                    settings.directions[idx]
                },
            };
            pace.lambda = pace.lambda_for(scores.view(view));
            pace
        };
        let mut schedule = settings.schedule.clone();
        if settings.initial_percentile >= 100.0 {
            schedule.progress = S::one();
        }
        Ok(Self {
            spatial: make(View::Spatial),
            temporal: make(View::Temporal),
            quantile: make(View::Quantile),
            increment: settings.increment,
            quantile_initial_percentile: settings.initial_percentile,
            schedule,
            rule: settings.rule,
        })
    }

    pub fn view(&self, view: View) -> &ViewPace<S> {
        match view {
            View::Spatial => &self.spatial,
            View::Temporal => &self.temporal,
            View::Quantile => &self.quantile,
        }
    }

    fn view_mut(&mut self, view: View) -> &mut ViewPace<S> {
        match view {
            View::Spatial => &mut self.spatial,
            View::Temporal => &mut self.temporal,
            View::Quantile => &mut self.quantile,
        }
    }

    /// True when the view's update guard `iteration % step_size == 0` fires.
    pub fn is_due(&self, view: View, iteration: u64) -> bool {
        let mu = self.view(view).step_size;
        iteration > 0 && iteration % mu == 0
    }

    /// Unconditionally raises one view's pace by one increment.
    pub fn raise(&mut self, view: View, scores: &DifficultyScores<S>) {
        let increment = self.increment;
        self.view_mut(view).raise(increment, scores.view(view));
        if view == View::Quantile {
            let span = 100.0 - self.quantile_initial_percentile;
            let step = if span > 0.0 { S::lit(increment / span) } else { S::one() };
            self.schedule.progress = (self.schedule.progress + step).min(S::one());
            if self.quantile.is_saturated() {
                self.schedule.progress = S::one();
            }
        }
    }

    /// Advances `view` if its guard fires at `iteration`; returns whether it did.
    pub fn advance_view(&mut self, view: View, scores: &DifficultyScores<S>, iteration: u64) -> bool {
        if !self.is_due(view, iteration) {
            return false;
        }
        self.raise(view, scores);
        true
    }

    pub fn is_saturated(&self, view: View) -> bool {
        let pace_done = self.view(view).is_saturated();
        match view {
            View::Quantile => pace_done && self.schedule.is_complete(),
            _ => pace_done,
        }
    }
}

/// Value-style pace update of every view whose guard fires at `iteration`.
pub fn advance_pace<S: Scalar>(state: &PaceState<S>, scores: &DifficultyScores<S>, iteration: u64) -> PaceState<S> {
    let mut next = state.clone();
    for view in View::ALL {
        next.advance_view(view, scores, iteration);
    }
    next
}

/// Effective training levels and per-head weights for the quantile view.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileWeights<S> {
    pub levels: Vec<S>,
    pub weights: Vec<S>,
}

pub fn quantile_weights<S: Scalar>(state: &PaceState<S>, scores: &[S]) -> QuantileWeights<S> {
    let levels = state.schedule.effective_levels();
    let lambda = state.quantile.lambda;
    let weights = scores
        .iter()
        .zip(&levels)
        .map(|(&s, &a)| {
            if s < lambda {
                match state.rule {
                    QuantileRule::LevelSchedule => S::one(),
                    QuantileRule::LevelWeight => a,
                }
            } else {
                S::zero()
            }
        })
        .collect();
    QuantileWeights { levels, weights }
}

/// Factored indicator tensor: node set × window set × per-head weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CurriculumMask<S> {
    nodes: Vec<bool>,
    windows: Vec<bool>,
    quantile_weights: Vec<S>,
    levels: Vec<S>,
}

impl<S: Scalar> CurriculumMask<S> {
    /// Everything included with unit head weights at the given levels.
    pub fn full(nodes: usize, windows: usize, levels: &[S]) -> Self {
        Self {
            nodes: vec![true; nodes],
            windows: vec![true; windows],
            quantile_weights: vec![S::one(); levels.len()],
            levels: levels.to_vec(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn set_node(&mut self, node: usize, included: bool) {
        self.nodes[node] = included;
    }

    pub fn set_window(&mut self, window: usize, included: bool) {
        self.windows[window] = included;
    }

    pub fn node_included(&self, node: usize) -> bool {
        self.nodes[node]
    }

    pub fn window_included(&self, window: usize) -> bool {
        self.windows[window]
    }

    pub fn included_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i]).collect()
    }

    pub fn included_windows(&self) -> Vec<usize> {
        (0..self.windows.len()).filter(|&j| self.windows[j]).collect()
    }

    pub fn quantile_weights(&self) -> &[S] {
        &self.quantile_weights
    }

    /// Training level of each head.
    pub fn levels(&self) -> &[S] {
        &self.levels
    }

    pub fn set_quantiles(&mut self, q: QuantileWeights<S>) {
        self.quantile_weights = q.weights;
        self.levels = q.levels;
    }

    /// Restricts inclusion to exactly these groups.
    pub fn restrict(&mut self, view: View, included: &[usize]) {
        let flags = match view {
            View::Spatial => &mut self.nodes,
            View::Temporal => &mut self.windows,
            View::Quantile => return,
        };
        flags.iter_mut().for_each(|f| *f = false);
        for &i in included {
            flags[i] = true;
        }
    }

    /// Adds groups to the inclusion set without removing any.
    pub fn admit(&mut self, view: View, included: &[usize]) {
        let flags = match view {
            View::Spatial => &mut self.nodes,
            View::Temporal => &mut self.windows,
            View::Quantile => return,
        };
        for &i in included {
            flags[i] = true;
        }
    }

    pub fn included_count(&self, view: View) -> usize {
        match view {
            View::Spatial => self.nodes.iter().filter(|&&f| f).count(),
            View::Temporal => self.windows.iter().filter(|&&f| f).count(),
            View::Quantile => self.quantile_weights.iter().filter(|&&w| w > S::zero()).count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.included_count(View::Spatial) == 0
            || self.included_count(View::Temporal) == 0
            || self.included_count(View::Quantile) == 0
    }

    /// Dense `[N, W, Q]` indicator.
    pub fn expand(&self) -> Tensor<S> {
        let (n, w, q) = (self.nodes.len(), self.windows.len(), self.quantile_weights.len());
        let mut v = Vec::with_capacity(n * w * q);
        for i in 0..n {
            for j in 0..w {
                for k in 0..q {
                    v.push(if self.nodes[i] && self.windows[j] {
                        self.quantile_weights[k]
                    } else {
                        S::zero()
                    });
                }
            }
        }
        Tensor::from_vec(&[n, w, q], v).expect("mask weights are finite")
    }
}

/// One row of the pace trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaceEvent<S> {
    pub iteration: u64,
    pub view: View,
    pub percentile: f64,
    pub lambda: S,
    pub included: usize,
    pub levels: Vec<S>,
}

impl<S: Scalar> PaceEvent<S> {
    pub const CSV_HEADER: &'static str = "iteration,view,percentile,lambda,included,levels";

    pub fn csv_row(&self) -> String {
        let levels: Vec<String> = self.levels.iter().map(|a| a.to_string()).collect();
        format!(
            "{},{},{},{},{},{}",
            self.iteration,
            self.view,
            self.percentile,
            self.lambda,
            self.included,
            levels.join(";")
        )
    }
}

/// Pace and mask of a single-view self-paced scheduler.
///
/// Inclusion only grows: groups admitted at one update stay admitted at later ones.
#[derive(Clone, Debug)]
pub struct Scheduler<S> {
    view: View,
    pace: PaceState<S>,
    mask: CurriculumMask<S>,
}

impl<S: Scalar> Scheduler<S> {
    /// Builds the phase-one mask from warm-start scores, raising the pace while it is empty.
    pub fn new(
        view: View,
        pace: PaceState<S>,
        scores: &DifficultyScores<S>,
        target_levels: &[S],
        iteration: u64,
        trace: &mut Vec<PaceEvent<S>>,
    ) -> Self {
        let mut s = Self {
            view,
            pace,
            mask: CurriculumMask::full(scores.spatial.len(), scores.temporal.len(), target_levels),
        };
        if view == View::Quantile {
            s.mask.set_quantiles(quantile_weights(&s.pace, &scores.quantile));
        } else {
            let admitted = s.pace.view(view).admitted(scores.view(view));
            s.mask.restrict(view, &admitted);
        }
        s.fill_empty(scores);
        trace.push(s.event(iteration));
        s
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn pace(&self) -> &PaceState<S> {
        &self.pace
    }

    pub fn mask(&self) -> &CurriculumMask<S> {
        &self.mask
    }

    pub fn is_saturated(&self) -> bool {
        self.pace.is_saturated(self.view)
    }

    pub fn is_due(&self, iteration: u64) -> bool {
        !self.is_saturated() && self.pace.is_due(self.view, iteration)
    }

    /// Applies one pace update with freshly computed scores.
    pub fn update(&mut self, scores: &DifficultyScores<S>, iteration: u64) -> PaceEvent<S> {
        self.pace.raise(self.view, scores);
        self.apply(scores);
        self.fill_empty(scores);
        self.event(iteration)
    }

    fn apply(&mut self, scores: &DifficultyScores<S>) {
        if self.view == View::Quantile {
            self.mask.set_quantiles(quantile_weights(&self.pace, &scores.quantile));
        } else {
            let admitted = self.pace.view(self.view).admitted(scores.view(self.view));
            self.mask.admit(self.view, &admitted);
        }
    }

    fn fill_empty(&mut self, scores: &DifficultyScores<S>) {
        while self.mask.is_empty() {
            self.pace.raise(self.view, scores);
            self.apply(scores);
        }
    }

    fn event(&self, iteration: u64) -> PaceEvent<S> {
        let pace = self.pace.view(self.view);
        PaceEvent {
            iteration,
            view: self.view,
            percentile: pace.percentile,
            lambda: pace.lambda,
            included: self.mask.included_count(self.view),
            levels: self.mask.levels().to_vec(),
        }
    }
}

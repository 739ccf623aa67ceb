//! The cross-sweep optimizer.
//!
//! The objective is treated as an implicit tensor over the grid: entry
//! `(n_1, ..., n_d)` is the objective at the corresponding grid point.
//! The optimizer never materializes that tensor. It keeps small sets of
//! "points of interest" at every interface between modes and alternates
//! right-to-left and left-to-right sweeps; at each mode it evaluates the
//! cross product of the neighboring sets with all positions along the mode,
//! transforms the values so that the current minimum carries the largest
//! magnitude, and re-selects the interface set through a QR factorization
//! followed by rectangular maximal-volume row selection.
//!
//! Two exploitation devices sit on top of the plain sweep, both keeping the
//! interface sets at their capped size:
//! - the incumbent best point is pinned into every refreshed set (its row
//!   replaces the last selected one), so each block re-tests every position
//!   of one mode against the best known context;
//! - once a full sweep passes without improvement, a probe row derived from
//!   the incumbent enters the next-to-last slot: first the grid neighbors
//!   at index distance one (which undo the digit carries a single-mode move
//!   cannot express), then a uniformly drawn index for the dimension owning
//!   the current mode.
//!
//! A run terminates when the evaluation budget is spent or `max_sweeps`
//! full sweeps have completed.

use crate::grid::{GridError, GridSpec};
use crate::linalg::{qr_thin, DenseMatrix};
use crate::maxvol::{maxvol, rect_maxvol_with, MaxvolError, DEFAULT_EPS, DEFAULT_MAX_ITERS};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptError {
    /// The evaluation budget is spent; a normal termination signal.
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    /// The objective returned NaN; the partial result is preserved.
    #[error("objective returned NaN")]
    ObjectiveNan { partial: Box<OptResult> },
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("index {0} out of range in interface update")]
    IndexOutOfRange(usize),
    #[error("initialization failed after retries: {0}")]
    InitFailed(MaxvolError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Maxvol(#[from] MaxvolError),
}

/// Monotone transform mapping function values so that the running minimum
/// carries the largest magnitude: strictly decreasing in `y`, bounded in
/// `(0, pi)`, equal to `pi/2` at `y == y_min`.
#[inline]
pub fn smooth_transform(y: f64, y_min: f64) -> f64 {
    FRAC_PI_2 - (y - y_min).atan()
}

/// Upper bound of the transform's range.
pub const TRANSFORM_SUP: f64 = PI;

// ---------------------------------------------------------------------------
// Objective adapter
// ---------------------------------------------------------------------------

/// Best point found so far.
#[derive(Debug, Clone)]
pub struct BestPoint {
    pub value: f64,
    /// Per-dimension grid indices.
    pub indices: Vec<usize>,
    pub coords: Vec<f64>,
    /// Working multi-index (one entry per tensor mode).
    pub multi: Vec<usize>,
}

/// Batched black-box evaluator with an evaluation counter, budget, and
/// best-so-far tracking.
///
/// The wrapped function receives a matrix of coordinates (one point per
/// row) and must return the values in row order; it may compute the rows
/// concurrently. Budget checks happen before a batch: a batch that crosses
/// the budget is still evaluated in full, so the overshoot is bounded by a
/// single batch.
pub struct ObjectiveAdapter<'a> {
    eval_fn: Box<dyn Fn(&DenseMatrix) -> Vec<f64> + 'a>,
    budget: usize,
    eval_count: usize,
    sign: f64,
    best: Option<BestPoint>,
    duplicates: Option<(HashSet<Vec<usize>>, usize)>,
}

impl<'a> ObjectiveAdapter<'a> {
    pub fn new(budget: usize, eval_fn: impl Fn(&DenseMatrix) -> Vec<f64> + 'a) -> Self {
        Self {
            eval_fn: Box::new(eval_fn),
            budget,
            eval_count: 0,
            sign: 1.0,
            best: None,
            duplicates: None,
        }
    }

    /// Wrap a scalar function of a point.
    pub fn from_scalar(budget: usize, f: impl Fn(&[f64]) -> f64 + 'a) -> Self {
        Self::new(budget, move |pts: &DenseMatrix| {
            (0..pts.rows()).map(|i| f(pts.row(i))).collect()
        })
    }

    /// Count re-requested points (diagnostic; off by default).
    pub fn enable_duplicate_tracking(&mut self) {
        self.duplicates = Some((HashSet::new(), 0));
    }

    pub fn duplicate_evals(&self) -> Option<usize> {
        self.duplicates.as_ref().map(|(_, n)| *n)
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn eval_count(&self) -> usize {
        self.eval_count
    }

    pub fn is_exhausted(&self) -> bool {
        self.eval_count >= self.budget
    }

    /// Best value in the caller's orientation (negation is undone).
    pub fn best_value(&self) -> Option<f64> {
        self.best.as_ref().map(|b| self.sign * b.value)
    }

    pub fn best_point(&self) -> Option<&BestPoint> {
        self.best.as_ref()
    }

    fn set_sign(&mut self, sign: f64) {
        self.sign = sign;
    }

    /// Evaluate a batch; values come back in the internal (sign-applied)
    /// orientation. NaN anywhere in the batch is an objective error.
    fn evaluate_batch(&mut self, coords: &DenseMatrix) -> Result<Vec<f64>, ()> {
        let mut values = (self.eval_fn)(coords);
        debug_assert_eq!(values.len(), coords.rows());
        self.eval_count += values.len();
        if self.sign != 1.0 {
            for v in &mut values {
                *v = self.sign * *v;
            }
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(());
        }
        Ok(values)
    }

    fn offer_best(&mut self, candidate: BestPoint) {
        let better = match &self.best {
            None => true,
            Some(b) => candidate.value < b.value,
        };
        if better {
            self.best = Some(candidate);
        }
    }

    /// Evaluate arbitrary grid points (one row of `indices` per coordinate
    /// row) with counting, NaN detection, and best tracking. The working
    /// multi-index of the best point is taken to be its index row.
    pub fn evaluate_tracked(
        &mut self,
        coords: &DenseMatrix,
        indices: &[Vec<usize>],
    ) -> Result<Vec<f64>, OptError> {
        debug_assert_eq!(coords.rows(), indices.len());
        let values = match self.evaluate_batch(coords) {
            Ok(v) => v,
            Err(()) => {
                return Err(OptError::ObjectiveNan {
                    partial: Box::new(partial_result(self, 0)),
                })
            }
        };
        let mut arg = 0;
        for (p, &v) in values.iter().enumerate() {
            if v < values[arg] {
                arg = p;
            }
        }
        self.offer_best(BestPoint {
            value: values[arg],
            indices: indices[arg].clone(),
            coords: coords.row(arg).to_vec(),
            multi: indices[arg].clone(),
        });
        Ok(values)
    }

    fn note_duplicates(&mut self, rows: impl Iterator<Item = Vec<usize>>) {
        if let Some((seen, count)) = self.duplicates.as_mut() {
            for row in rows {
                if !seen.insert(row) {
                    *count += 1;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Index sets
// ---------------------------------------------------------------------------

/// Which side of the interface a set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Multi-indices over the modes to the left of the interface.
    Left,
    /// Multi-indices over the modes to the right of the interface.
    Right,
}

/// Selected multi-indices at one interface.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    rows: Vec<Vec<usize>>,
    side: Side,
}

impl IndexSet {
    pub fn new(rows: Vec<Vec<usize>>, side: Side) -> Self {
        debug_assert!(!rows.is_empty());
        let w = rows[0].len();
        debug_assert!(rows.iter().all(|r| r.len() == w));
        Self { rows, side }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of modes each row covers.
    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    fn position_of(&self, row: &[usize]) -> Option<usize> {
        self.rows.iter().position(|r| r.as_slice() == row)
    }

    /// Overwrite `slot` with `row` unless the row is already present.
    fn force_row(&mut self, row: Vec<usize>, slot: usize) -> bool {
        if self.position_of(&row).is_some() {
            return false;
        }
        self.rows[slot] = row;
        true
    }
}

fn set_len(set: Option<&IndexSet>) -> usize {
    set.map_or(1, |s| s.len())
}

/// Extend a left-side set across one mode after a left-to-right step.
///
/// Flat candidate `s` decodes as `r = s % rank` (previous-set row, varying
/// fastest) and `n = s / rank` (mode index); the output row is the previous
/// row with `n` appended.
pub fn update_right(
    x_prev: Option<&IndexSet>,
    mode_size: usize,
    rank: usize,
    selected: &[usize],
) -> Result<IndexSet, OptError> {
    debug_assert_eq!(set_len(x_prev), rank);
    let mut rows = Vec::with_capacity(selected.len());
    for &s in selected {
        if s >= rank * mode_size {
            return Err(OptError::IndexOutOfRange(s));
        }
        let (r, n) = (s % rank, s / rank);
        let mut row = match x_prev {
            Some(prev) => prev.row(r).to_vec(),
            None => Vec::with_capacity(1),
        };
        row.push(n);
        rows.push(row);
    }
    Ok(IndexSet::new(rows, Side::Left))
}

/// Extend a right-side set across one mode after a right-to-left step.
///
/// Flat candidate `s` decodes as `n = s % mode_size` (mode index, varying
/// fastest) and `r = s / mode_size` (next-set row); the output row is `n`
/// prepended to the next-set row.
pub fn update_left(
    x_next: Option<&IndexSet>,
    mode_size: usize,
    rank: usize,
    selected: &[usize],
) -> Result<IndexSet, OptError> {
    debug_assert_eq!(set_len(x_next), rank);
    let mut rows = Vec::with_capacity(selected.len());
    for &s in selected {
        if s >= rank * mode_size {
            return Err(OptError::IndexOutOfRange(s));
        }
        let (n, r) = (s % mode_size, s / mode_size);
        let mut row = Vec::with_capacity(1 + x_next.map_or(0, |x| x.width()));
        row.push(n);
        if let Some(next) = x_next {
            row.extend_from_slice(next.row(r));
        }
        rows.push(row);
    }
    Ok(IndexSet::new(rows, Side::Right))
}

// ---------------------------------------------------------------------------
// Configuration and result
// ---------------------------------------------------------------------------

/// Run parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    /// Rank cap shared by all interfaces.
    pub rank: usize,
    /// Evaluation budget `M`.
    pub budget: usize,
    /// Planning floor for the sweep count; used when deriving a rank from
    /// the budget, not as a termination rule (the budget always wins).
    pub min_sweeps: usize,
    /// Hard cap on full sweeps.
    pub max_sweeps: usize,
    /// Dominance threshold of the square maximal-volume stage.
    pub maxvol_eps: f64,
    /// Residual-norm threshold of the rectangular stage.
    pub rect_tau: f64,
    /// Extra rows the rectangular stage may add beyond the current rank.
    pub rect_extra: usize,
    pub seed: u64,
    /// Interpreted by [`optimize`]; the named entry points ignore it.
    pub maximize: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rank: 4,
            budget: 100_000,
            min_sweeps: 5,
            max_sweeps: 1_000_000,
            maxvol_eps: DEFAULT_EPS,
            rect_tau: crate::maxvol::DEFAULT_TAU,
            rect_extra: 0,
            seed: 0,
            maximize: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.rank < 1 {
            return Err(OptError::InvalidConfig("rank must be >= 1".into()));
        }
        if self.budget < 1 {
            return Err(OptError::InvalidConfig("budget must be >= 1".into()));
        }
        if self.maxvol_eps < 1.0 {
            return Err(OptError::InvalidConfig("maxvol eps must be >= 1".into()));
        }
        if self.rect_tau < 0.0 {
            return Err(OptError::InvalidConfig("rect tau must be >= 0".into()));
        }
        if self.max_sweeps < 1 || self.min_sweeps > self.max_sweeps {
            return Err(OptError::InvalidConfig(
                "need 1 <= min_sweeps <= max_sweeps".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptResult {
    pub best_value: f64,
    /// Per-dimension grid indices of the best point.
    pub best_indices: Vec<usize>,
    pub best_coords: Vec<f64>,
    pub evaluations_used: usize,
    pub sweeps_completed: usize,
    /// `(evaluation count, best value)` after every evaluated block; the
    /// value component never worsens.
    pub trace: Vec<(usize, f64)>,
}

// ---------------------------------------------------------------------------
// Rank bookkeeping and initialization
// ---------------------------------------------------------------------------

/// Interface rank caps for a mode-size list: boundary ranks are one, every
/// interior rank is limited by both neighboring unfolding dimensions and by
/// `r_max` (forward pass `R[i+1] <= R[i] * N[i]`, backward pass
/// `R[i] <= N[i] * R[i+1]`).
pub fn effective_ranks(shape: &[usize], r_max: usize) -> Vec<usize> {
    assert!(!shape.is_empty());
    let d = shape.len();
    let mut ranks = vec![r_max.max(1); d + 1];
    ranks[0] = 1;
    ranks[d] = 1;
    for i in 0..d {
        ranks[i + 1] = ranks[i + 1].min(ranks[i].saturating_mul(shape[i]));
    }
    for i in (0..d).rev() {
        ranks[i] = ranks[i].min(shape[i].saturating_mul(ranks[i + 1]));
    }
    ranks
}

/// Draw the initial interface sets: for each interface a standard-normal
/// matrix is orthogonalized and the square maximal-volume rows of its `Q`
/// factor seed the set, chained left to right. Deterministic in `seed`;
/// each interface draws from its own stream so extra dimensions do not
/// reshuffle earlier draws. Rank-deficient draws are retried up to five
/// times with fresh streams.
pub fn init_index_sets(
    shape: &[usize],
    ranks: &[usize],
    seed: u64,
) -> Result<Vec<Option<IndexSet>>, OptError> {
    const RETRIES: u64 = 5;
    let d = shape.len();
    debug_assert_eq!(ranks.len(), d + 1);
    let mut sets: Vec<Option<IndexSet>> = vec![None; d + 1];
    for i in 0..d.saturating_sub(1) {
        let rank_left = set_len(sets[i].as_ref());
        let rows = rank_left * shape[i];
        let cols = ranks[i + 1];
        let mut last_err = None;
        let mut done = false;
        for attempt in 0..RETRIES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + (i as u64) * RETRIES + attempt);
            let g = DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
            let (q, _) = qr_thin(&g);
            match maxvol(&q, DEFAULT_EPS, DEFAULT_MAX_ITERS) {
                Ok(res) => {
                    sets[i + 1] = Some(update_right(
                        sets[i].as_ref(),
                        shape[i],
                        rank_left,
                        &res.row_indices,
                    )?);
                    done = true;
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
        if !done {
            return Err(OptError::InitFailed(
                last_err.unwrap_or(MaxvolError::SingularMatrix),
            ));
        }
    }
    Ok(sets)
}

// ---------------------------------------------------------------------------
// Block evaluation
// ---------------------------------------------------------------------------

/// Per-dimension index offsets contributed by a partial multi-index.
fn accumulate(slots: &[(usize, usize)], dims: usize, modes: &[usize], start: usize) -> Vec<usize> {
    let mut acc = vec![0usize; dims];
    for (off, &digit) in modes.iter().enumerate() {
        let (dim, w) = slots[start + off];
        acc[dim] += digit * w;
    }
    acc
}

/// Evaluate the full cross product `{left rows} x {mode positions} x
/// {right rows}` in one batch, with the left row varying fastest, then the
/// mode, then the right row. The incumbent minimum is updated before the
/// values are transformed by [`smooth_transform`].
pub fn eval_block(
    left: Option<&IndexSet>,
    mode: usize,
    right: Option<&IndexSet>,
    spec: &GridSpec,
    obj: &mut ObjectiveAdapter,
) -> Result<Vec<f64>, OptError> {
    if obj.is_exhausted() {
        return Err(OptError::BudgetExhausted);
    }
    let shape = spec.tensor_shape();
    let slots = spec.mode_slots();
    let dims = spec.dims();
    let n = shape[mode];
    let rl = set_len(left);
    let rr = set_len(right);
    let n_points = rl * n * rr;

    let left_acc: Vec<Vec<usize>> = match left {
        Some(set) => set.rows().iter().map(|r| accumulate(&slots, dims, r, 0)).collect(),
        None => vec![vec![0; dims]],
    };
    let right_acc: Vec<Vec<usize>> = match right {
        Some(set) => set
            .rows()
            .iter()
            .map(|r| accumulate(&slots, dims, r, mode + 1))
            .collect(),
        None => vec![vec![0; dims]],
    };
    let (mode_dim, mode_w) = slots[mode];

    let mut indices = vec![0usize; n_points * dims];
    let mut coords = DenseMatrix::zeros(n_points, dims);
    let mut k = 0;
    for ra in &right_acc {
        for nn in 0..n {
            for la in &left_acc {
                let row = &mut indices[k * dims..(k + 1) * dims];
                for dim in 0..dims {
                    let mut idx = la[dim] + ra[dim];
                    if dim == mode_dim {
                        idx += nn * mode_w;
                    }
                    row[dim] = idx;
                    coords.set(k, dim, spec.point_value(dim, idx));
                }
                k += 1;
            }
        }
    }

    let values = match obj.evaluate_batch(&coords) {
        Ok(v) => v,
        Err(()) => {
            return Err(OptError::ObjectiveNan {
                partial: Box::new(partial_result(obj, 0)),
            })
        }
    };

    if obj.duplicates.is_some() {
        let rows = (0..n_points).map(|p| indices[p * dims..(p + 1) * dims].to_vec());
        obj.note_duplicates(rows);
    }

    // Strictly-less comparison; the first point wins among equals.
    let mut arg = 0;
    for (p, &v) in values.iter().enumerate() {
        if v < values[arg] {
            arg = p;
        }
    }
    let improved = obj.best.as_ref().map_or(true, |b| values[arg] < b.value);
    if improved {
        let r = arg % rl;
        let nn = (arg / rl) % n;
        let rp = arg / (rl * n);
        let mut multi = Vec::with_capacity(shape.len());
        if let Some(set) = left {
            multi.extend_from_slice(set.row(r));
        }
        multi.push(nn);
        if let Some(set) = right {
            multi.extend_from_slice(set.row(rp));
        }
        obj.offer_best(BestPoint {
            value: values[arg],
            indices: indices[arg * dims..(arg + 1) * dims].to_vec(),
            coords: coords.row(arg).to_vec(),
            multi,
        });
    }

    let y_min = obj.best.as_ref().expect("best set after block").value;
    Ok(values.into_iter().map(|y| smooth_transform(y, y_min)).collect())
}

// ---------------------------------------------------------------------------
// The sweep driver
// ---------------------------------------------------------------------------

/// Rank estimate from the evaluation budget: with `T` planned sweeps over
/// `d * q` modes of size `P`, a full run costs about `2 T d q P R^2` calls,
/// so `R <= sqrt(M / (2 T d q P))`, floored and clamped to at least one.
/// Any upper cap is the caller's business.
pub fn suggest_rank(budget: usize, dims: usize, submodes: usize, base: usize, sweeps: usize) -> usize {
    let denom = (2 * sweeps * dims * submodes * base) as f64;
    let r = ((budget as f64) / denom).sqrt().floor() as usize;
    r.max(1)
}

fn partial_result(obj: &ObjectiveAdapter, sweeps: usize) -> OptResult {
    let best = obj.best_point();
    OptResult {
        best_value: best.map_or(f64::INFINITY, |b| obj.sign * b.value),
        best_indices: best.map_or_else(Vec::new, |b| b.indices.clone()),
        best_coords: best.map_or_else(Vec::new, |b| b.coords.clone()),
        evaluations_used: obj.eval_count(),
        sweeps_completed: sweeps,
        trace: Vec::new(),
    }
}

/// Digits of grid index `m` for one dimension, in mode order.
fn dim_digits(spec: &GridSpec, m: usize) -> Vec<usize> {
    match spec.quantization() {
        Some(q) => {
            let mut out = vec![0usize; q.submodes];
            let mut v = m;
            for j in (0..q.submodes).rev() {
                out[j] = v % q.base;
                v /= q.base;
            }
            out
        }
        None => vec![m],
    }
}

struct SweepState<'s> {
    spec: &'s GridSpec,
    shape: Vec<usize>,
    slots: Vec<(usize, usize)>,
    caps: Vec<usize>,
    sets: Vec<Option<IndexSet>>,
    probe_rng: ChaCha8Rng,
    /// Full sweeps since the best last improved.
    stagnant: usize,
}

impl<'s> SweepState<'s> {
    /// Modes covered by a dimension (a contiguous range).
    fn dim_mode_range(&self, dim: usize) -> (usize, usize) {
        match self.spec.quantization() {
            Some(q) => (dim * q.submodes, (dim + 1) * q.submodes),
            None => (dim, dim + 1),
        }
    }

    /// Probe target index for `dim`; the cycle is +1 neighbor, -1 neighbor,
    /// uniformly random, keyed by how long the best has stalled.
    fn probe_target(&mut self, dim: usize, best_index: usize) -> Option<usize> {
        let n = self.spec.mode_sizes()[dim];
        match (self.stagnant - 1) % 3 {
            0 => best_index.checked_add(1).filter(|&m| m < n),
            1 => best_index.checked_sub(1),
            _ => Some(self.probe_rng.gen_range(0..n)),
        }
    }

    /// Best-row tail over modes `i..`, and the probe variant with the
    /// straddling dimension's in-tail digits swapped for the probe target's.
    fn pin_rows_backward(&mut self, i: usize, best: &BestPoint) -> (Vec<usize>, Option<Vec<usize>>) {
        let tail: Vec<usize> = best.multi[i..].to_vec();
        let mut probe = None;
        if self.stagnant > 0 {
            let dim = self.slots[i].0;
            if let Some(m) = self.probe_target(dim, best.indices[dim]) {
                let digits = dim_digits(self.spec, m);
                let (start, end) = self.dim_mode_range(dim);
                let mut t = tail.clone();
                for mode in start.max(i)..end {
                    t[mode - i] = digits[mode - start];
                }
                if t != tail {
                    probe = Some(t);
                }
            }
        }
        (tail, probe)
    }

    /// Best-row head over modes `..=i` (probe variant as above).
    fn pin_rows_forward(&mut self, i: usize, best: &BestPoint) -> (Vec<usize>, Option<Vec<usize>>) {
        let head: Vec<usize> = best.multi[..=i].to_vec();
        let mut probe = None;
        if self.stagnant > 0 {
            let dim = self.slots[i].0;
            if let Some(m) = self.probe_target(dim, best.indices[dim]) {
                let digits = dim_digits(self.spec, m);
                let (start, end) = self.dim_mode_range(dim);
                let mut h = head.clone();
                for mode in start..end.min(i + 1) {
                    h[mode] = digits[mode - start];
                }
                if h != head {
                    probe = Some(h);
                }
            }
        }
        (head, probe)
    }
}

/// Pin a tail row into a right-side set; the portion beyond the first mode
/// must already be a row of the neighboring set.
fn pin_tail(set: &mut IndexSet, context: Option<&IndexSet>, row: Vec<usize>, slot: usize) {
    let representable = match context {
        Some(ctx) => ctx.position_of(&row[1..]).is_some(),
        None => row.len() == 1,
    };
    if representable {
        set.force_row(row, slot);
    }
}

/// Pin a head row into a left-side set; the portion before the last mode
/// must already be a row of the neighboring set.
fn pin_head(set: &mut IndexSet, context: Option<&IndexSet>, row: Vec<usize>, slot: usize) {
    let representable = match context {
        Some(ctx) => ctx.position_of(&row[..row.len() - 1]).is_some(),
        None => row.len() == 1,
    };
    if representable {
        set.force_row(row, slot);
    }
}

fn run(
    obj: &mut ObjectiveAdapter,
    spec: &GridSpec,
    cfg: &OptimizerConfig,
    sign: f64,
) -> Result<(OptResult, Vec<Option<IndexSet>>), OptError> {
    cfg.validate()?;
    obj.set_sign(sign);
    let shape = spec.tensor_shape();
    let d = shape.len();
    let caps = effective_ranks(&shape, cfg.rank);
    let sets = init_index_sets(&shape, &caps, cfg.seed)?;

    let mut probe_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    probe_rng.set_stream(u64::MAX);
    let slots = spec.mode_slots();
    let mut state = SweepState {
        spec,
        shape,
        slots,
        caps,
        sets,
        probe_rng,
        stagnant: 0,
    };

    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut sweeps = 0usize;
    let mut prev_best = f64::INFINITY;

    macro_rules! block {
        ($i:expr) => {
            match eval_block(
                state.sets[$i].as_ref(),
                $i,
                state.sets[$i + 1].as_ref(),
                spec,
                obj,
            ) {
                Ok(z) => Some(z),
                Err(OptError::BudgetExhausted) => None,
                Err(OptError::ObjectiveNan { .. }) => {
                    let mut partial = partial_result(obj, sweeps);
                    partial.trace = trace.clone();
                    return Err(OptError::ObjectiveNan {
                        partial: Box::new(partial),
                    });
                }
                Err(e) => return Err(e),
            }
        };
    }

    'sweeps: while sweeps < cfg.max_sweeps {
        if d == 1 {
            match block!(0) {
                Some(_) => trace.push((obj.eval_count(), obj.best_value().unwrap())),
                None => break 'sweeps,
            }
        } else {
            // Right-to-left pass: refresh the right-side role of every
            // interior interface.
            for i in (1..d).rev() {
                let z = match block!(i) {
                    Some(z) => z,
                    None => break 'sweeps,
                };
                trace.push((obj.eval_count(), obj.best_value().unwrap()));

                let rl = set_len(state.sets[i].as_ref());
                let rr = set_len(state.sets[i + 1].as_ref());
                let n = state.shape[i];
                // Unfolding with rows (mode, right-row), columns left-row.
                let a = DenseMatrix::new(n * rr, rl, z).expect("unfold");
                if a.rows() < a.cols() {
                    return Err(OptError::InvalidConfig(
                        "rect_extra grew a rank past the unfolding height".into(),
                    ));
                }
                let (q, _) = qr_thin(&a);
                let cols = q.cols().min(state.caps[i]);
                let q = if cols < q.cols() { q.left_columns(cols) } else { q };
                let max_rows = (cols + cfg.rect_extra).min(a.rows());
                let sel = rect_maxvol_with(
                    &q,
                    cfg.rect_tau,
                    max_rows,
                    cfg.maxvol_eps,
                    DEFAULT_MAX_ITERS,
                )?;
                let mut next = update_left(state.sets[i + 1].as_ref(), n, rr, &sel.row_indices)?;

                if let Some(best) = obj.best_point().cloned() {
                    let (tail, probe) = state.pin_rows_backward(i, &best);
                    let slot = next.len() - 1;
                    pin_tail(&mut next, state.sets[i + 1].as_ref(), tail, slot);
                    if let Some(p) = probe {
                        if next.len() >= 3 {
                            let slot = next.len() - 2;
                            pin_tail(&mut next, state.sets[i + 1].as_ref(), p, slot);
                        }
                    }
                }
                state.sets[i] = Some(next);
            }

            // Left-to-right pass: refresh the left-side role.
            for i in 0..d - 1 {
                let z = match block!(i) {
                    Some(z) => z,
                    None => break 'sweeps,
                };
                trace.push((obj.eval_count(), obj.best_value().unwrap()));

                let rl = set_len(state.sets[i].as_ref());
                let rr = set_len(state.sets[i + 1].as_ref());
                let n = state.shape[i];
                // Unfolding with rows (left-row, mode), columns right-row.
                let mut data = Vec::with_capacity(rl * n * rr);
                for j in 0..rl * n {
                    for rp in 0..rr {
                        data.push(z[j + rl * n * rp]);
                    }
                }
                let a = DenseMatrix::new(rl * n, rr, data).expect("unfold");
                if a.rows() < a.cols() {
                    return Err(OptError::InvalidConfig(
                        "rect_extra grew a rank past the unfolding height".into(),
                    ));
                }
                let (q, _) = qr_thin(&a);
                let max_rows = (q.cols() + cfg.rect_extra).min(a.rows());
                let sel = rect_maxvol_with(
                    &q,
                    cfg.rect_tau,
                    max_rows,
                    cfg.maxvol_eps,
                    DEFAULT_MAX_ITERS,
                )?;
                let mut next = update_right(state.sets[i].as_ref(), n, rl, &sel.row_indices)?;

                if let Some(best) = obj.best_point().cloned() {
                    let (head, probe) = state.pin_rows_forward(i, &best);
                    let slot = next.len() - 1;
                    pin_head(&mut next, state.sets[i].as_ref(), head, slot);
                    if let Some(p) = probe {
                        if next.len() >= 3 {
                            let slot = next.len() - 2;
                            pin_head(&mut next, state.sets[i].as_ref(), p, slot);
                        }
                    }
                }
                state.sets[i + 1] = Some(next);
            }
        }

        sweeps += 1;
        let best_now = obj.best_point().map_or(f64::INFINITY, |b| b.value);
        if best_now < prev_best {
            state.stagnant = 0;
        } else {
            state.stagnant += 1;
        }
        prev_best = best_now;
    }

    let best = obj
        .best_point()
        .ok_or_else(|| OptError::InvalidConfig("budget admitted no block at all".into()))?;
    let result = OptResult {
        best_value: sign * best.value,
        best_indices: best.indices.clone(),
        best_coords: best.coords.clone(),
        evaluations_used: obj.eval_count(),
        sweeps_completed: sweeps,
        trace,
    };
    Ok((result, state.sets))
}

/// Minimize the objective over the grid.
pub fn minimize(
    obj: &mut ObjectiveAdapter,
    spec: &GridSpec,
    cfg: &OptimizerConfig,
) -> Result<OptResult, OptError> {
    run(obj, spec, cfg, 1.0).map(|(r, _)| r)
}

/// Maximize the objective: minimizes its negation and reports the best
/// value re-negated, at the same point. Trace values are reported in the
/// caller's orientation as well.
pub fn maximize(
    obj: &mut ObjectiveAdapter,
    spec: &GridSpec,
    cfg: &OptimizerConfig,
) -> Result<OptResult, OptError> {
    run(obj, spec, cfg, -1.0).map(|(r, _)| r)
}

/// Dispatch on `cfg.maximize`.
pub fn optimize(
    obj: &mut ObjectiveAdapter,
    spec: &GridSpec,
    cfg: &OptimizerConfig,
) -> Result<OptResult, OptError> {
    if cfg.maximize {
        maximize(obj, spec, cfg)
    } else {
        minimize(obj, spec, cfg)
    }
}

#[cfg(test)]
pub(crate) fn run_with_state(
    obj: &mut ObjectiveAdapter,
    spec: &GridSpec,
    cfg: &OptimizerConfig,
) -> Result<(OptResult, Vec<Option<IndexSet>>), OptError> {
    run(obj, spec, cfg, 1.0)
}

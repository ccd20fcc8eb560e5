//! Grid drivers for state-kind comparisons over fixed and fading channels.
//!
//! Each loss point is paired: its fading model is solved for σ_b, and the
//! fixed channel at that point uses the model's mean transmissivity, so both
//! channels see exactly the same mean loss. Points at or below the fading loss
//! floor have no fading model; their fixed channel uses `10^(−loss/10)`.
//!
//! Rows are evaluated in parallel and returned in canonical order
//! (state, squeezing, ξ, loss, channel).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fading::{
    average_key_rate, loss_floor_db, mean_transmissivity, sigma_for_mean_loss, AveragingOptions,
    FadingModel, DEFAULT_FLOOR_FRACTION, DEFAULT_NODES,
};
use crate::fock::{SourceKind, SqueezingSpec};
use crate::gaussian::{check_xi, raw_key_rate, LinkParams, NoiseParams, Source, SourceMoments};
use crate::numerics::{grid_then_golden, Maximum};

/// Bounds and resolution of the tap-transmissivity search.
pub const T_GRID_LO: f64 = 0.02;
pub const T_GRID_HI: f64 = 0.98;
pub const T_GRID_POINTS: usize = 33;
pub const T_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelKind {
    Fixed,
    Fading,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 2] = [ChannelKind::Fixed, ChannelKind::Fading];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Fixed => "fixed",
            ChannelKind::Fading => "fading",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(ChannelKind::Fixed),
            "fading" => Ok(ChannelKind::Fading),
            other => Err(format!("unknown channel kind `{other}` (expected fixed or fading)")),
        }
    }
}

/// Half-dB grid on [0, 30] with 0.7 dB inserted as the first point above the
/// unit-aperture fading floor.
pub fn default_loss_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=60).map(|i| 0.5 * f64::from(i)).collect();
    grid.insert(2, 0.7);
    grid
}

/// One sweep: every combination of state, squeezing, loss and channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub state_kinds: Vec<SourceKind>,
    pub squeezing_db: Vec<f64>,
    pub xi: f64,
    pub noise: NoiseParams,
    pub channels: Vec<ChannelKind>,
    /// Mean losses in dB, strictly increasing.
    pub loss_grid_db: Vec<f64>,
    pub quadrature_nodes: usize,
    pub clamp_negative: bool,
    /// Aperture ratio (β/W)².
    pub aperture_h: f64,
    /// Tap transmissivity for non-Gaussian kinds; optimized per row when
    /// absent.
    pub tap: Option<f64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            state_kinds: vec![SourceKind::Tmsv],
            squeezing_db: vec![10.0],
            xi: 0.95,
            noise: NoiseParams::default(),
            channels: ChannelKind::ALL.to_vec(),
            loss_grid_db: default_loss_grid(),
            quadrature_nodes: DEFAULT_NODES,
            clamp_negative: true,
            aperture_h: 1.0,
            tap: None,
        }
    }
}

impl ExperimentSpec {
    /// TMSV and PSS at 5, 10 and 16 dB with ξ = 0.95.
    pub fn figure3() -> Self {
        ExperimentSpec {
            state_kinds: vec![SourceKind::Tmsv, SourceKind::Pss],
            squeezing_db: vec![5.0, 10.0, 16.0],
            xi: 0.95,
            ..Default::default()
        }
    }

    /// TMSV, PSS and PSS2 at 5, 10 and 16 dB with ξ = 0.8.
    pub fn figure4() -> Self {
        ExperimentSpec {
            state_kinds: SourceKind::ALL.to_vec(),
            squeezing_db: vec![5.0, 10.0, 16.0],
            xi: 0.8,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_kinds.is_empty() {
            return Err(Error::invalid("state_kinds", 0.0, "at least one state kind is required"));
        }
        if self.channels.is_empty() {
            return Err(Error::invalid("channel", 0.0, "at least one channel kind is required"));
        }
        if self.squeezing_db.is_empty() {
            return Err(Error::invalid("squeezing_db", 0.0, "at least one squeezing value is required"));
        }
        for &s in &self.squeezing_db {
            SqueezingSpec::from_db(s)?;
        }
        check_xi(self.xi)?;
        self.noise.validate()?;
        validate_common(&self.loss_grid_db, self.quadrature_nodes, self.aperture_h)?;
        if let Some(t) = self.tap {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid("T", t, "tap transmissivity must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    fn averaging(&self) -> AveragingOptions {
        averaging(self.quadrature_nodes, self.clamp_negative)
    }
}

fn averaging(nodes: usize, clamp_negative: bool) -> AveragingOptions {
    AveragingOptions {
        nodes,
        clamp_negative,
        check_convergence: true,
        floor_fraction: DEFAULT_FLOOR_FRACTION,
    }
}

fn validate_common(loss_grid_db: &[f64], nodes: usize, h: f64) -> Result<()> {
    if loss_grid_db.is_empty() {
        return Err(Error::invalid("loss_db", 0.0, "loss grid is empty"));
    }
    for &d in loss_grid_db {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::invalid("loss_db", d, "losses must be finite and non-negative"));
        }
    }
    for w in loss_grid_db.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("loss_db", w[1], "loss grid must be strictly increasing"));
        }
    }
    if nodes < 2 {
        return Err(Error::invalid("quadrature_nodes", nodes as f64, "need at least 2 nodes"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("aperture_h", h, "aperture ratio must be finite and positive"));
    }
    Ok(())
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub state: SourceKind,
    pub squeezing_db: f64,
    pub xi: f64,
    pub mean_loss_db: f64,
    pub channel: ChannelKind,
    /// Tap transmissivity; `None` for TMSV.
    pub t_opt: Option<f64>,
    pub creation_probability: f64,
    /// Key rate per created state, averaged over fading where applicable.
    pub key_rate: f64,
    /// `creation_probability · key_rate`.
    pub weighted_rate: f64,
    /// σ_b of the matched fading model, in units of the aperture radius.
    pub sigma_b: Option<f64>,
    /// The T search found no positive weighted rate.
    pub all_negative: bool,
}

/// A grid point that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub state: SourceKind,
    pub squeezing_db: f64,
    pub xi: f64,
    pub mean_loss_db: f64,
    pub channel: ChannelKind,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl SweepTable {
    /// Rows matching the given state, squeezing (exact) and channel, in loss
    /// order.
    pub fn series(
        &self,
        state: SourceKind,
        squeezing_db: f64,
        channel: ChannelKind,
    ) -> impl Iterator<Item = &SweepRow> + '_ {
        self.rows.iter().filter(move |r| {
            r.state == state && r.squeezing_db == squeezing_db && r.channel == channel
        })
    }

    /// True when some failure came from a quadrature or root-finding procedure.
    pub fn has_convergence_failure(&self) -> bool {
        self.failures.iter().any(|f| f.error.is_convergence_failure())
    }
}

/// Maximizes a weighted rate over T on [0.02, 0.98]: 33-point scan, then
/// golden-section refinement of the best bracket to 10⁻⁴.
pub fn optimize_t(objective: impl FnMut(f64) -> Result<f64>) -> Result<Maximum> {
    grid_then_golden(objective, T_GRID_LO, T_GRID_HI, T_GRID_POINTS, T_TOLERANCE)
}

/// The channel realization shared by all rows at one mean loss.
#[derive(Debug, Clone, Copy)]
struct LossPoint {
    loss_db: f64,
    floor_db: f64,
    fixed_tau: f64,
    /// `Ok(None)` when the loss is at or below the fading floor.
    fading: std::result::Result<Option<FadingModel>, ()>,
}

fn loss_points(grid: &[f64], h: f64, nodes: usize) -> Result<Vec<(LossPoint, Option<Error>)>> {
    let floor = loss_floor_db(h)?;
    Ok(grid
        .par_iter()
        .map(|&d| {
            let fallback = 10f64.powf(-d / 10.0);
            if d <= floor {
                let point = LossPoint {
                    loss_db: d,
                    floor_db: floor,
                    fixed_tau: fallback,
                    fading: Ok(None),
                };
                return (point, None);
            }
            let solved = sigma_for_mean_loss(d, h, nodes).and_then(|sigma| {
                let model = FadingModel::new(sigma, h)?;
                Ok((model, mean_transmissivity(&model, nodes)?))
            });
            match solved {
                Ok((model, tau)) => (
                    LossPoint {
                        loss_db: d,
                        floor_db: floor,
                        fixed_tau: tau,
                        fading: Ok(Some(model)),
                    },
                    None,
                ),
                Err(e) => (
                    LossPoint {
                        loss_db: d,
                        floor_db: floor,
                        fixed_tau: fallback,
                        fading: Err(()),
                    },
                    Some(e),
                ),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
struct Task {
    state: SourceKind,
    squeezing_db: f64,
    xi: f64,
    loss: usize,
    channel: ChannelKind,
}

#[derive(Debug, Clone, Copy)]
struct Context {
    noise: NoiseParams,
    opts: AveragingOptions,
    tap: Option<f64>,
}

/// Unweighted key rate of fixed moments over one channel realization.
fn channel_rate(
    m: &SourceMoments,
    point: &LossPoint,
    channel: ChannelKind,
    xi: f64,
    ctx: &Context,
    opts: &AveragingOptions,
) -> Result<f64> {
    match channel {
        ChannelKind::Fixed => raw_key_rate(m, &LinkParams::new(point.fixed_tau, ctx.noise)?, xi),
        ChannelKind::Fading => {
            let model = point
                .fading
                .expect("fading rows are only scheduled for solved points")
                .expect("fading rows are only scheduled above the floor");
            average_key_rate(
                &model,
                |eta| raw_key_rate(m, &LinkParams::new(eta * eta, ctx.noise)?, xi),
                opts,
            )
        }
    }
}

fn evaluate(task: &Task, points: &[(LossPoint, Option<Error>)], ctx: &Context) -> Result<SweepRow> {
    let (point, solve_error) = &points[task.loss];
    if task.channel == ChannelKind::Fading {
        if let Some(e) = solve_error {
            return Err(e.clone());
        }
        if let Ok(None) = point.fading {
            return Err(Error::BelowLossFloor {
                target_db: point.loss_db,
                floor_db: point.floor_db,
            });
        }
    }
    let spec = SqueezingSpec::from_db(task.squeezing_db)?;
    let sigma_b = match point.fading {
        Ok(Some(m)) => Some(m.sigma_b),
        _ => None,
    };

    let (t_opt, all_negative) = if task.state.is_gaussian() {
        (None, false)
    } else if let Some(t) = ctx.tap {
        (Some(t), false)
    } else {
        let coarse = AveragingOptions {
            check_convergence: false,
            ..ctx.opts
        };
        let best = optimize_t(|t| {
            let source = Source::new(task.state, spec, t)?;
            let k = channel_rate(&source.moments(), point, task.channel, task.xi, ctx, &coarse)?;
            Ok(source.creation_probability() * k)
        })?;
        (Some(best.arg), best.all_negative)
    };

    let source = match t_opt {
        Some(t) => Source::new(task.state, spec, t)?,
        None => Source::tmsv(spec),
    };
    let key_rate = channel_rate(&source.moments(), point, task.channel, task.xi, ctx, &ctx.opts)?;
    let pc = source.creation_probability();
    Ok(SweepRow {
        state: task.state,
        squeezing_db: task.squeezing_db,
        xi: task.xi,
        mean_loss_db: point.loss_db,
        channel: task.channel,
        t_opt,
        creation_probability: pc,
        key_rate,
        weighted_rate: pc * key_rate,
        sigma_b,
        all_negative,
    })
}

fn run_tasks(tasks: &[Task], points: &[(LossPoint, Option<Error>)], ctx: &Context) -> SweepTable {
    let results: Vec<Result<SweepRow>> = tasks.par_iter().map(|t| evaluate(t, points, ctx)).collect();
    let mut table = SweepTable::default();
    for (task, res) in tasks.iter().zip(results) {
        match res {
            Ok(row) => table.rows.push(row),
            Err(error) => table.failures.push(SweepFailure {
                state: task.state,
                squeezing_db: task.squeezing_db,
                xi: task.xi,
                mean_loss_db: points[task.loss].0.loss_db,
                channel: task.channel,
                error,
            }),
        }
    }
    table
}

fn sorted_unique<T: Copy + PartialOrd>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("values are not NaN"));
    v.dedup_by(|a, b| a == b);
    v
}

/// Evaluates every grid point of `spec`. Per-row failures are collected in the
/// table; only an invalid spec is an error.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepTable> {
    spec.validate()?;
    let points = loss_points(&spec.loss_grid_db, spec.aperture_h, spec.quadrature_nodes)?;
    let ctx = Context {
        noise: spec.noise,
        opts: spec.averaging(),
        tap: spec.tap,
    };
    let channels = sorted_unique(&spec.channels);
    let mut tasks = Vec::new();
    for state in sorted_unique(&spec.state_kinds) {
        for squeezing_db in sorted_unique(&spec.squeezing_db) {
            for loss in 0..points.len() {
                for &channel in &channels {
                    tasks.push(Task {
                        state,
                        squeezing_db,
                        xi: spec.xi,
                        loss,
                        channel,
                    });
                }
            }
        }
    }
    Ok(run_tasks(&tasks, &points, &ctx))
}

pub fn run_figure3(spec: &ExperimentSpec) -> Result<SweepTable> {
    run_sweep(spec)
}

pub fn run_figure4(spec: &ExperimentSpec) -> Result<SweepTable> {
    run_sweep(spec)
}

/// TMSV key-rate surfaces over the fading channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure5Spec {
    pub loss_grid_db: Vec<f64>,
    /// ξ values of the (loss × ξ) surface.
    pub xi_grid: Vec<f64>,
    /// Squeezing of the (loss × ξ) surface.
    pub xi_surface_squeezing_db: f64,
    /// Squeezing values of the (loss × squeezing) surfaces.
    pub squeezing_grid: Vec<f64>,
    /// ξ of the (loss × squeezing) surface.
    pub squeezing_surface_xi: f64,
    pub noise: NoiseParams,
    pub quadrature_nodes: usize,
    pub clamp_negative: bool,
    pub aperture_h: f64,
}

impl Default for Figure5Spec {
    fn default() -> Self {
        Figure5Spec {
            loss_grid_db: (0..=73).map(|i| 0.8 + 0.4 * f64::from(i)).collect(),
            xi_grid: (0..=20).map(|i| 0.8 + 0.01 * f64::from(i)).collect(),
            xi_surface_squeezing_db: 10.0,
            squeezing_grid: (0..=38).map(|i| 1.0 + 0.5 * f64::from(i)).collect(),
            squeezing_surface_xi: 0.8,
            noise: NoiseParams::default(),
            quadrature_nodes: DEFAULT_NODES,
            clamp_negative: true,
            aperture_h: 1.0,
        }
    }
}

impl Figure5Spec {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.loss_grid_db, self.quadrature_nodes, self.aperture_h)?;
        if self.xi_grid.is_empty() || self.squeezing_grid.is_empty() {
            return Err(Error::invalid("grid", 0.0, "ξ and squeezing grids must be non-empty"));
        }
        for &xi in self.xi_grid.iter().chain([&self.squeezing_surface_xi]) {
            check_xi(xi)?;
        }
        for &s in self.squeezing_grid.iter().chain([&self.xi_surface_squeezing_db]) {
            SqueezingSpec::from_db(s)?;
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure5Tables {
    /// (loss × ξ) at fixed squeezing.
    pub xi_surface: SweepTable,
    /// (loss × squeezing) at fixed ξ.
    pub squeezing_surface: SweepTable,
    /// (loss × squeezing) at ξ = 1.
    pub ideal_xi_slice: SweepTable,
}

pub fn run_figure5(spec: &Figure5Spec) -> Result<Figure5Tables> {
    spec.validate()?;
    let points = loss_points(&spec.loss_grid_db, spec.aperture_h, spec.quadrature_nodes)?;
    let ctx = Context {
        noise: spec.noise,
        opts: averaging(spec.quadrature_nodes, spec.clamp_negative),
        tap: None,
    };
    let task = |squeezing_db, xi, loss| Task {
        state: SourceKind::Tmsv,
        squeezing_db,
        xi,
        loss,
        channel: ChannelKind::Fading,
    };
    let squeezing = sorted_unique(&spec.squeezing_grid);
    let surface_over_squeezing = |xi: f64| -> Vec<Task> {
        squeezing
            .iter()
            .flat_map(|&s| (0..points.len()).map(move |l| task(s, xi, l)))
            .collect()
    };
    let xi_tasks: Vec<Task> = sorted_unique(&spec.xi_grid)
        .into_iter()
        .flat_map(|xi| (0..points.len()).map(move |l| task(spec.xi_surface_squeezing_db, xi, l)))
        .collect();
    Ok(Figure5Tables {
        xi_surface: run_tasks(&xi_tasks, &points, &ctx),
        squeezing_surface: run_tasks(&surface_over_squeezing(spec.squeezing_surface_xi), &points, &ctx),
        ideal_xi_slice: run_tasks(&surface_over_squeezing(1.0), &points, &ctx),
    })
}

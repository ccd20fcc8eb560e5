//! Beam-wander fading channel.
//!
//! The amplitude transmissivity η follows the log-negative Weibull law set by
//! the beam-wander deviation σ_b and the aperture/beam ratio h = (β/W)². All
//! lengths are in units of the aperture radius β.
//!
//! Integrals against p(η) are taken in the exceedance variable
//! `u = P(η′ > η) = 1 − exp(−(L²/2σ_b²)(2 ln(η0/η))^(2/γ))`, in which p(η)dη
//! becomes du on [0, 1). The u-interval is graded toward both ends with a cubic
//! sigmoid before applying Gauss–Legendre, which absorbs the endpoint
//! singularities at η = η0 and η → 0.

use crate::error::{Error, Result};
use crate::numerics::{bessel_i0_scaled, bessel_i1_scaled, brent_root, GaussLegendre};

/// Default number of Gauss–Legendre nodes per integration segment.
pub const DEFAULT_NODES: usize = 256;

/// Lower integration limit as a fraction of η0.
pub const DEFAULT_FLOOR_FRACTION: f64 = 1e-9;

/// Relative N-vs-2N disagreement above which an average is rejected.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Mean-loss root-finding tolerance in dB.
pub const LOSS_TOLERANCE_DB: f64 = 1e-4;

/// Per-realization rates at or below this are treated as non-positive when
/// clamping.
const CLAMP_THRESHOLD: f64 = 1e-12;

const GRADING_POWER: i32 = 3;

/// Log-negative Weibull fading law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    /// Beam-wander standard deviation, units of β.
    pub sigma_b: f64,
    /// (β/W)².
    pub h: f64,
    /// Weibull shape.
    pub gamma_s: f64,
    /// Weibull scale, units of β.
    pub l_over_beta: f64,
    /// Maximum amplitude transmissivity.
    pub eta0: f64,
}

impl FadingModel {
    pub fn new(sigma_b: f64, h: f64) -> Result<Self> {
        if !(sigma_b > 0.0 && sigma_b.is_finite()) {
            return Err(Error::invalid("sigma_b", sigma_b, "must be finite and positive"));
        }
        let (gamma_s, l_over_beta, eta0) = shape_parameters(h)?;
        Ok(FadingModel {
            sigma_b,
            h,
            gamma_s,
            l_over_beta,
            eta0,
        })
    }

    /// Same aperture geometry, different σ_b.
    pub fn with_sigma(&self, sigma_b: f64) -> Result<Self> {
        if !(sigma_b > 0.0 && sigma_b.is_finite()) {
            return Err(Error::invalid("sigma_b", sigma_b, "must be finite and positive"));
        }
        Ok(FadingModel { sigma_b, ..*self })
    }

    pub fn pdf(&self, eta: f64) -> f64 {
        fading_pdf(self, eta)
    }

    /// L²/(2σ_b²).
    fn rate(&self) -> f64 {
        let l = self.l_over_beta;
        l * l / (2.0 * self.sigma_b * self.sigma_b)
    }

    /// Probability that the realized η exceeds `eta`.
    pub fn exceedance(&self, eta: f64) -> f64 {
        if eta >= self.eta0 {
            return 0.0;
        }
        if eta <= 0.0 {
            return 1.0;
        }
        let s = 2.0 * (self.eta0 / eta).ln();
        -(-self.rate() * s.powf(2.0 / self.gamma_s)).exp_m1()
    }

    /// Inverse of [`Self::exceedance`].
    pub fn eta_at_exceedance(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.eta0;
        }
        if u >= 1.0 {
            return 0.0;
        }
        let t = -(-u).ln_1p();
        let s = (t / self.rate()).powf(0.5 * self.gamma_s);
        self.eta0 * (-0.5 * s).exp()
    }
}

/// (γ_s, L/β, η0) from the aperture ratio h.
fn shape_parameters(h: f64) -> Result<(f64, f64, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", h, "aperture ratio must be finite and positive"));
    }
    let eta0_sq = -(-2.0 * h).exp_m1();
    let x = 4.0 * h;
    let i0 = bessel_i0_scaled(x);
    let i1 = bessel_i1_scaled(x);
    let denom = 1.0 - i0;
    let log_term = (2.0 * eta0_sq / denom).ln();
    let gamma_s = 8.0 * h * i1 / denom / log_term;
    let l_over_beta = log_term.powf(-1.0 / gamma_s);
    Ok((gamma_s, l_over_beta, eta0_sq.sqrt()))
}

pub fn fading_model(sigma_b: f64, h: f64) -> Result<FadingModel> {
    FadingModel::new(sigma_b, h)
}

/// p(η); zero outside (0, η0].
pub fn fading_pdf(model: &FadingModel, eta: f64) -> f64 {
    if !(eta > 0.0 && eta <= model.eta0) {
        return 0.0;
    }
    let g = model.gamma_s;
    let s = 2.0 * (model.eta0 / eta).ln();
    let l2 = model.l_over_beta * model.l_over_beta;
    let sig2 = model.sigma_b * model.sigma_b;
    2.0 * l2 / (sig2 * g * eta)
        * s.powf(2.0 / g - 1.0)
        * (-(l2 / (2.0 * sig2)) * s.powf(2.0 / g)).exp()
}

/// Mean loss as σ_b → 0, −10·log10(η0²).
pub fn loss_floor_db(h: f64) -> Result<f64> {
    let (_, _, eta0) = shape_parameters(h)?;
    Ok(-10.0 * (eta0 * eta0).log10())
}

/// Gauss–Legendre nodes on [0, 1] after the cubic sigmoid grading, as
/// (v, dv-weight) pairs.
fn graded_unit_rule(gl: &GaussLegendre) -> impl Iterator<Item = (f64, f64)> + '_ {
    gl.mapped(0.0, 1.0).map(|(v, w)| {
        let p = GRADING_POWER;
        let a = v.powi(p);
        let b = (1.0 - v).powi(p);
        let den = a + b;
        let phi = a / den;
        let dphi = f64::from(p) * v.powi(p - 1) * (1.0 - v).powi(p - 1) / (den * den);
        (phi, w * dphi)
    })
}

/// (u, probability weight) nodes on the exceedance segment [lo, hi].
fn segment_nodes(gl: &GaussLegendre, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let span = hi - lo;
    graded_unit_rule(gl)
        .map(|(phi, w)| (lo + span * phi, span * w))
        .collect()
}

/// Quadrature rule against p(η) over [η_floor, η0].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// η values in [η_floor, η0], descending.
    pub nodes: Vec<f64>,
    /// Probability carried by each node; `Σ masses·f(nodes) ≈ ∫ f p dη`.
    pub masses: Vec<f64>,
    /// Probability mass below η_floor, not covered by the nodes.
    pub tail_mass: f64,
}

impl QuadratureRule {
    pub fn new(model: &FadingModel, nodes: usize, floor_fraction: f64) -> Self {
        let gl = GaussLegendre::new(nodes);
        let eta_floor = floor_fraction * model.eta0;
        let u_max = model.exceedance(eta_floor);
        let (nodes, masses) = segment_nodes(&gl, 0.0, u_max)
            .into_iter()
            .map(|(u, m)| (model.eta_at_exceedance(u).max(eta_floor), m))
            .unzip();
        QuadratureRule {
            nodes,
            masses,
            tail_mass: 1.0 - u_max,
        }
    }

    /// Σ masses + tail mass; 1 up to quadrature error.
    pub fn total_probability(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.tail_mass
    }

    pub fn expectation(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.masses)
            .map(|(&e, &m)| m * f(e))
            .sum()
    }
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes >= 2 {
        Ok(())
    } else {
        Err(Error::invalid("quadrature_nodes", nodes as f64, "need at least 2 nodes"))
    }
}

/// Mean power transmissivity ∫η²p(η)dη.
pub fn mean_transmissivity(model: &FadingModel, nodes: usize) -> Result<f64> {
    check_nodes(nodes)?;
    let once = |n: usize| QuadratureRule::new(model, n, DEFAULT_FLOOR_FRACTION).expectation(|e| e * e);
    let a = once(nodes);
    let b = once(2 * nodes);
    if (a - b).abs() > 1e-9 * b.abs() {
        return Err(Error::NoConvergence {
            what: "mean transmissivity quadrature",
            detail: format!("{nodes} nodes give {a:e}, {} give {b:e}", 2 * nodes),
        });
    }
    Ok(a)
}

/// −10·log10(∫η²p(η)dη).
pub fn mean_loss_db(model: &FadingModel, nodes: usize) -> Result<f64> {
    Ok(-10.0 * mean_transmissivity(model, nodes)?.log10())
}

/// σ_b whose mean loss equals `target_db` within [`LOSS_TOLERANCE_DB`].
pub fn sigma_for_mean_loss(target_db: f64, h: f64, nodes: usize) -> Result<f64> {
    let floor = loss_floor_db(h)?;
    if !target_db.is_finite() || target_db <= floor {
        return Err(Error::BelowLossFloor {
            target_db,
            floor_db: floor,
        });
    }
    let shape = FadingModel::new(1.0, h)?;
    let gap = |sigma: f64| -> Result<f64> {
        Ok(mean_loss_db(&shape.with_sigma(sigma)?, nodes)? - target_db)
    };
    let mut lo = 1e-3;
    while gap(lo)? >= 0.0 {
        lo *= 0.1;
        if lo < 1e-12 {
            return Err(Error::BelowLossFloor {
                target_db,
                floor_db: floor,
            });
        }
    }
    let mut hi = 1.0;
    while gap(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::NoConvergence {
                what: "mean-loss bracketing",
                detail: format!("no σ_b below {hi} reaches {target_db} dB"),
            });
        }
    }
    brent_root(gap, lo, hi, 1e-14, 0.1 * LOSS_TOLERANCE_DB, 200)
}

/// How [`average_key_rate`] integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingOptions {
    /// Gauss–Legendre nodes per segment.
    pub nodes: usize,
    /// Replace negative per-realization rates by zero.
    pub clamp_negative: bool,
    /// Recompute with doubled nodes and reject disagreements above
    /// [`CONVERGENCE_TOLERANCE`].
    pub check_convergence: bool,
    pub floor_fraction: f64,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        AveragingOptions {
            nodes: DEFAULT_NODES,
            clamp_negative: true,
            check_convergence: true,
            floor_fraction: DEFAULT_FLOOR_FRACTION,
        }
    }
}

/// ∫ K(η) p(η) dη over [η_floor·η0, η0], where `rate_fn` maps the amplitude
/// transmissivity η to K (the channel transmissivity is η²).
///
/// With clamping, the exceedance interval is split at the zero crossings of K
/// and only the positive pieces are integrated, so the kink at K = 0 never
/// sits inside a Gauss–Legendre panel.
pub fn average_key_rate(
    model: &FadingModel,
    rate_fn: impl Fn(f64) -> Result<f64>,
    opts: &AveragingOptions,
) -> Result<f64> {
    check_nodes(opts.nodes)?;
    let gl = GaussLegendre::new(opts.nodes);
    let (value, scale) = average_with(model, &rate_fn, &gl, opts)?;
    if opts.check_convergence {
        let gl2 = GaussLegendre::new(2 * opts.nodes);
        let (fine, fine_scale) = average_with(model, &rate_fn, &gl2, opts)?;
        let scale = scale.max(fine_scale);
        if (value - fine).abs() > CONVERGENCE_TOLERANCE * scale {
            return Err(Error::NoConvergence {
                what: "fading average",
                detail: format!(
                    "{} nodes give {value:e}, {} give {fine:e}",
                    opts.nodes,
                    2 * opts.nodes
                ),
            });
        }
    }
    Ok(value)
}

/// Returns the average and ∫|K|p of the unclamped rate, the scale of the
/// convergence test.
fn average_with(
    model: &FadingModel,
    rate_fn: &impl Fn(f64) -> Result<f64>,
    gl: &GaussLegendre,
    opts: &AveragingOptions,
) -> Result<(f64, f64)> {
    let eta_floor = opts.floor_fraction * model.eta0;
    let u_max = model.exceedance(eta_floor);
    let k_at = |u: f64| rate_fn(model.eta_at_exceedance(u).max(eta_floor));
    let nodes = segment_nodes(gl, 0.0, u_max);
    let values = nodes
        .iter()
        .map(|&(u, _)| k_at(u))
        .collect::<Result<Vec<f64>>>()?;

    let abs: f64 = nodes.iter().zip(&values).map(|(&(_, w), &k)| w * k.abs()).sum();
    if !opts.clamp_negative {
        let sum = nodes.iter().zip(&values).map(|(&(_, w), &k)| w * k).sum();
        return Ok((sum, abs));
    }

    let positive = |k: f64| k > CLAMP_THRESHOLD;
    let mut samples = Vec::with_capacity(nodes.len() + 2);
    samples.push((0.0, k_at(0.0)?));
    samples.extend(nodes.iter().map(|&(u, _)| u).zip(values.iter().copied()));
    samples.push((u_max, k_at(u_max)?));

    let mut breaks = vec![0.0];
    for pair in samples.windows(2) {
        let ((ua, ka), (ub, kb)) = (pair[0], pair[1]);
        if positive(ka) != positive(kb) {
            let root = brent_root(
                |u| Ok(k_at(u)? - CLAMP_THRESHOLD),
                ua,
                ub,
                1e-15 * u_max.max(1e-300),
                0.0,
                200,
            )?;
            breaks.push(root);
        }
    }
    breaks.push(u_max);

    if breaks.len() == 2 {
        let sum: f64 = nodes
            .iter()
            .zip(&values)
            .map(|(&(_, w), &k)| if positive(k) { w * k } else { 0.0 })
            .sum();
        return Ok((sum, abs));
    }

    let mut sum = 0.0;
    for seg in breaks.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if hi <= lo || !positive(k_at(0.5 * (lo + hi))?) {
            continue;
        }
        for (u, w) in segment_nodes(gl, lo, hi) {
            sum += w * k_at(u)?.max(0.0);
        }
    }
    Ok((sum, abs))
}

//! Closed-form covariance-matrix propagation and the reverse-reconciliation
//! key rate against collective attacks.
//!
//! Every source considered here has a covariance matrix of the form
//! `[[x·I, z·Z], [z·Z, y·I]]` with `Z = diag(1, −1)`, in shot-noise units. The
//! channel and detector act on the transmitted mode only, so three numbers per
//! stage describe the whole state.

use crate::error::{Error, Result};
use crate::fock::{creation_probability, SourceKind, SqueezingSpec};

/// Slack allowed below 1 on symplectic eigenvalues before a matrix is called
/// unphysical.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;

/// The `(x, y, z)` triple of a symmetric two-mode covariance matrix: `x` for
/// Alice's mode, `y` for the transmitted mode, `z` for the correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceMoments {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SourceMoments {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let tol = 1.0 - EIGENVALUE_TOLERANCE;
        if !(x >= tol) {
            return Err(Error::invalid("x", x, "variance must be at least 1"));
        }
        if !(y >= tol) {
            return Err(Error::invalid("y", y, "variance must be at least 1"));
        }
        if !(z >= 0.0) {
            return Err(Error::invalid("z", z, "correlation must be non-negative"));
        }
        Ok(SourceMoments { x, y, z })
    }

    pub(crate) fn new_unchecked(x: f64, y: f64, z: f64) -> Self {
        SourceMoments { x, y, z }
    }

    /// `y − z²/(x+1)`: Bob's variance conditioned on Alice's heterodyne outcome.
    pub fn conditional_variance(&self) -> f64 {
        self.y - self.z * self.z / (self.x + 1.0)
    }
}

/// Moments of the source before the channel. `t` is the tap transmissivity and
/// is ignored for TMSV.
pub fn source_moments(kind: SourceKind, spec: &SqueezingSpec, t: f64) -> Result<SourceMoments> {
    if !kind.is_gaussian() && !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(
            "T",
            t,
            "tap beam-splitter transmissivity must lie in (0, 1)",
        ));
    }
    Ok(match kind {
        SourceKind::Tmsv => {
            let v = spec.cosh_2r();
            // v² − 1 = sinh²(2r), exact near r = 0
            SourceMoments::new_unchecked(v, v, (2.0 * spec.r()).sinh())
        }
        SourceKind::Pss => {
            let s2 = spec.sinh_sq();
            let vp = (1.0 + (1.0 + t) * s2) / (1.0 + (1.0 - t) * s2);
            SourceMoments::new_unchecked(
                2.0 * vp + 1.0,
                2.0 * vp - 1.0,
                2.0 * (vp * vp - 1.0).max(0.0).sqrt(),
            )
        }
        SourceKind::Pss2 => {
            let a = spec.lambda() * t;
            let a2 = a * a;
            let d = 1.0 - a2 * a2;
            let v = (1.0 + 3.0 * a2 * a2 + 8.0 * a2) / d;
            SourceMoments::new_unchecked(v, v, 4.0 * a * (1.0 + 2.0 * a2) / d)
        }
    })
}

/// A source: kind, squeezing and tap transmissivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub kind: SourceKind,
    pub squeezing: SqueezingSpec,
    /// Tap transmissivity; meaningless for TMSV.
    pub tap: f64,
}

impl Source {
    pub fn new(kind: SourceKind, squeezing: SqueezingSpec, tap: f64) -> Result<Self> {
        let s = Source {
            kind,
            squeezing,
            tap,
        };
        source_moments(kind, &squeezing, tap)?;
        Ok(s)
    }

    pub fn tmsv(squeezing: SqueezingSpec) -> Self {
        Source {
            kind: SourceKind::Tmsv,
            squeezing,
            tap: f64::NAN,
        }
    }

    pub fn moments(&self) -> SourceMoments {
        source_moments(self.kind, &self.squeezing, self.tap).expect("validated at construction")
    }

    pub fn creation_probability(&self) -> f64 {
        creation_probability(self.kind, &self.squeezing, self.tap).expect("validated at construction")
    }
}

/// Preparation excess noise and homodyne imperfections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Excess noise, shot-noise units.
    pub epsilon: f64,
    /// Homodyne efficiency.
    pub mu: f64,
    /// Electronic noise, shot-noise units.
    pub nu_el: f64,
}

impl Default for NoiseParams {
    /// ε = 0.01, μ = 0.526, ν_el = 0.04361.
    fn default() -> Self {
        NoiseParams {
            epsilon: 0.01,
            mu: 0.526,
            nu_el: 0.04361,
        }
    }
}

impl NoiseParams {
    /// No excess noise and a perfect detector.
    pub fn ideal() -> Self {
        NoiseParams {
            epsilon: 0.0,
            mu: 1.0,
            nu_el: 0.0,
        }
    }

    pub fn new(epsilon: f64, mu: f64, nu_el: f64) -> Result<Self> {
        let p = NoiseParams { epsilon, mu, nu_el };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", self.epsilon, "must be finite and non-negative"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::invalid("mu", self.mu, "must lie in (0, 1]"));
        }
        if !(self.nu_el >= 0.0 && self.nu_el.is_finite()) {
            return Err(Error::invalid("nu_el", self.nu_el, "must be finite and non-negative"));
        }
        if self.mu == 1.0 && self.nu_el != 0.0 {
            return Err(Error::invalid(
                "nu_el",
                self.nu_el,
                "must be 0 for a unit-efficiency detector",
            ));
        }
        Ok(())
    }

    /// Variance of the EPR state modelling electronic noise, ν_el/(1−μ) + 1.
    /// Undefined (NaN) at μ = 1.
    pub fn nu_d(&self) -> f64 {
        if self.mu < 1.0 {
            self.nu_el / (1.0 - self.mu) + 1.0
        } else {
            f64::NAN
        }
    }

    /// Detector-added noise referred to the detector input, (1−μ)ν_d/μ; 0 at μ = 1.
    pub fn chi_d(&self) -> f64 {
        if self.mu < 1.0 {
            (1.0 - self.mu) * self.nu_d() / self.mu
        } else {
            0.0
        }
    }
}

/// Channel transmissivity plus noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub tau: f64,
    pub noise: NoiseParams,
}

impl LinkParams {
    pub fn new(tau: f64, noise: NoiseParams) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::invalid("tau", tau, "must lie in (0, 1]"));
        }
        noise.validate()?;
        Ok(LinkParams { tau, noise })
    }

    pub fn nu_d(&self) -> f64 {
        self.noise.nu_d()
    }

    /// Channel-added noise referred to the input, ε + (1−τ)/τ.
    pub fn chi_c(&self) -> f64 {
        self.noise.epsilon + (1.0 - self.tau) / self.tau
    }

    pub fn chi_d(&self) -> f64 {
        self.noise.chi_d()
    }

    /// Total input-referred noise, χ_c + χ_d/τ.
    pub fn chi(&self) -> f64 {
        self.chi_c() + self.chi_d() / self.tau
    }

    /// τ(y + χ_c), evaluated without forming 1/τ.
    fn channel_variance(&self, y: f64) -> f64 {
        self.tau * (y + self.noise.epsilon) + (1.0 - self.tau)
    }
}

/// Symmetric two-mode covariance matrix `[[a·I, c·Z], [c·Z, b·I]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TwoModeCm {
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let TwoModeCm { a, b, c } = *self;
        [
            [a, 0.0, c, 0.0],
            [0.0, a, 0.0, -c],
            [c, 0.0, b, 0.0],
            [0.0, -c, 0.0, b],
        ]
    }

    /// Largest element-wise difference.
    pub fn max_abs_diff(&self, other: &TwoModeCm) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
    }
}

/// State after the channel, before the detector.
pub fn cm_after_channel(src: &SourceMoments, link: &LinkParams) -> TwoModeCm {
    TwoModeCm {
        a: src.x,
        b: link.channel_variance(src.y),
        c: link.tau.sqrt() * src.z,
    }
}

/// State seen by the ideal homodyne behind the lossy, noisy detector.
pub fn cm_after_detector(src: &SourceMoments, link: &LinkParams) -> TwoModeCm {
    let mu = link.noise.mu;
    TwoModeCm {
        a: src.x,
        b: mu * (link.channel_variance(src.y) + link.chi_d()),
        c: (mu * link.tau).sqrt() * src.z,
    }
}

/// `f(ν) = ((ν+1)/2)log₂((ν+1)/2) − ((ν−1)/2)log₂((ν−1)/2)`, the entropy of a
/// thermal mode with symplectic eigenvalue ν; `f(1) = 0`.
pub fn entropy_function(nu: f64) -> f64 {
    let p = 0.5 * (nu + 1.0);
    let m = 0.5 * (nu - 1.0);
    if nu - 1.0 < 1e-12 {
        p * p.log2()
    } else if m < 1.0 {
        p * p.log2() - m * m.log2()
    } else {
        // log₂m + p·log₂(1 + 1/m): no cancellation between two large terms
        m.log2() + p * (1.0 / m).ln_1p() / std::f64::consts::LN_2
    }
}

/// Symplectic eigenvalues of the shared state (ν₁, ν₂) and of the state
/// conditioned on Bob's homodyne outcome (ν₃, ν₄).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticSpectrum {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
}

impl SymplecticSpectrum {
    pub fn min(&self) -> f64 {
        self.nu1.min(self.nu2).min(self.nu3).min(self.nu4)
    }
}

/// Returns (ν₊, ν₋) with ν±² = (Δ ± √disc)/2, where `disc = Δ² − 4Ω` is supplied
/// by the caller in a cancellation-free form.
fn eigenpair(delta: f64, omega: f64, disc: f64) -> Result<(f64, f64)> {
    if disc < -1e-9 * delta * delta {
        return Err(Error::NonPositiveVariance {
            context: "symplectic discriminant",
            value: disc,
        });
    }
    let hi = 0.5 * (delta + disc.max(0.0).sqrt());
    // ν₊²ν₋² = Ω; dividing avoids cancellation in Δ − √(…)
    let lo = if hi > 0.0 { omega / hi } else { 0.0 };
    Ok((hi.sqrt(), lo.sqrt()))
}

pub fn symplectic_spectrum(src: &SourceMoments, link: &LinkParams) -> Result<SymplecticSpectrum> {
    let SourceMoments { x, z, .. } = *src;
    let tau = link.tau;
    let chi_d = link.chi_d();
    let b = link.channel_variance(src.y);
    let b_det = b + chi_d;
    let w = tau * z * z;

    let delta = x * x + b * b - 2.0 * w;
    let sqrt_omega = (x * b - w).abs();
    let omega = sqrt_omega * sqrt_omega;
    // Δ² − 4Ω factors exactly; both pairs are degenerate at pure states, where
    // the expanded forms lose half the digits.
    let split = x - b;
    let disc = split * split * ((x + b) * (x + b) - 4.0 * w);
    let (nu1, nu2) = eigenpair(delta, omega, disc)?;

    let delta_c = (b + x * sqrt_omega + chi_d * delta) / b_det;
    let omega_c = sqrt_omega * (x + chi_d * sqrt_omega) / b_det;
    let q = b * b * x * x - b * b - 3.0 * b * w * x + b * x * x * x - b * x + 2.0 * w * w
        - w * x * x
        + 2.0 * w;
    let r = b * (x * x - 1.0) - w * x;
    let disc_c = (chi_d * chi_d * disc + 2.0 * chi_d * split * q + r * r) / (b_det * b_det);
    let (nu3, nu4) = eigenpair(delta_c, omega_c, disc_c)?;

    let spec = SymplecticSpectrum { nu1, nu2, nu3, nu4 };
    let lowest = spec.min();
    if lowest < 1.0 - EIGENVALUE_TOLERANCE || !lowest.is_finite() {
        return Err(Error::UnphysicalCovariance { value: lowest });
    }
    Ok(spec)
}

/// Mutual information between Alice's heterodyne and Bob's homodyne, in bits.
pub fn mutual_information(src: &SourceMoments, link: &LinkParams) -> Result<f64> {
    let mu = link.noise.mu;
    // μτ(y + χ) and μτ(y − z²/(x+1) + χ)
    let v_b = mu * (link.channel_variance(src.y) + link.chi_d());
    let v_cond = v_b - mu * link.tau * src.z * src.z / (src.x + 1.0);
    if !(v_b > 0.0) {
        return Err(Error::NonPositiveVariance {
            context: "Bob's variance",
            value: v_b,
        });
    }
    if !(v_cond > 0.0) {
        return Err(Error::NonPositiveVariance {
            context: "Bob's conditional variance",
            value: v_cond,
        });
    }
    Ok(0.5 * (v_b / v_cond).log2())
}

/// Holevo bound on Eve's information about Bob's outcome, in bits.
pub fn holevo_quantity(src: &SourceMoments, link: &LinkParams) -> Result<f64> {
    let s = symplectic_spectrum(src, link)?;
    Ok(entropy_function(s.nu1) + entropy_function(s.nu2)
        - entropy_function(s.nu3)
        - entropy_function(s.nu4))
}

/// Per-configuration key-rate breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateBreakdown {
    /// Alice–Bob mutual information, bits.
    pub mutual_info: f64,
    /// Eve's Holevo information, bits.
    pub holevo: f64,
    /// ξ·I − I_E, bits per pulse; may be negative.
    pub key_rate: f64,
    pub creation_probability: f64,
    /// P_c·K.
    pub weighted_rate: f64,
}

pub(crate) fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("xi", xi, "reconciliation efficiency must lie in (0, 1]"))
    }
}

/// Key rate of `source` over a fixed channel.
pub fn key_rate_at_transmissivity(
    source: &Source,
    link: &LinkParams,
    xi: f64,
) -> Result<KeyRateBreakdown> {
    check_xi(xi)?;
    let m = source.moments();
    let mutual_info = mutual_information(&m, link)?;
    let holevo = holevo_quantity(&m, link)?;
    let key_rate = xi * mutual_info - holevo;
    let pc = source.creation_probability();
    Ok(KeyRateBreakdown {
        mutual_info,
        holevo,
        key_rate,
        creation_probability: pc,
        weighted_rate: pc * key_rate,
    })
}

/// Unweighted K for given moments; the hot path of fading averages.
pub(crate) fn raw_key_rate(m: &SourceMoments, link: &LinkParams, xi: f64) -> Result<f64> {
    Ok(xi * mutual_information(m, link)? - holevo_quantity(m, link)?)
}

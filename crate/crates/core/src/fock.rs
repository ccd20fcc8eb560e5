//! Truncated photon-number-basis engine.
//!
//! Source states are built from their Schmidt amplitudes, the transmitted mode
//! is pushed through the pure-loss Kraus channel, and the second moments are
//! read back off the density operator. This is the numerical cross-check of
//! the closed-form covariance path in [`crate::gaussian`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::SourceMoments;

/// Default photon-number cutoff.
pub const DEFAULT_CUTOFF: usize = 80;

/// Default bound on the discarded source tail mass.
pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Entangled source produced from a two-mode squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceKind {
    /// The two-mode squeezed vacuum itself.
    Tmsv,
    /// One photon subtracted from the transmitted mode.
    Pss,
    /// One photon subtracted from each mode, both taps with the same transmissivity.
    Pss2,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [SourceKind::Tmsv, SourceKind::Pss, SourceKind::Pss2];

    pub fn is_gaussian(self) -> bool {
        self == SourceKind::Tmsv
    }

    /// Photon-number offset of Alice's mode relative to the transmitted mode in
    /// the Schmidt decomposition.
    pub fn mode_a_offset(self) -> usize {
        match self {
            SourceKind::Pss => 1,
            SourceKind::Tmsv | SourceKind::Pss2 => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Tmsv => "TMSV",
            SourceKind::Pss => "PSS",
            SourceKind::Pss2 => "PSS2",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TMSV" => Ok(SourceKind::Tmsv),
            "PSS" => Ok(SourceKind::Pss),
            "PSS2" => Ok(SourceKind::Pss2),
            other => Err(format!("unknown state kind `{other}` (expected TMSV, PSS or PSS2)")),
        }
    }
}

/// Two-mode squeezing, held in all three customary parametrizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSpec {
    r: f64,
    lambda: f64,
    squeezing_db: f64,
}

impl SqueezingSpec {
    /// From squeezing in decibels, `exp(2r) = 10^(dB/10)`.
    pub fn from_db(squeezing_db: f64) -> Result<Self> {
        if !(squeezing_db >= 0.0) || !squeezing_db.is_finite() {
            return Err(Error::invalid(
                "squeezing_db",
                squeezing_db,
                "must be finite and non-negative",
            ));
        }
        let r = squeezing_db * std::f64::consts::LN_10 / 20.0;
        Ok(SqueezingSpec {
            r,
            lambda: r.tanh(),
            squeezing_db,
        })
    }

    pub fn from_r(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid("r", r, "must be finite and non-negative"));
        }
        Ok(SqueezingSpec {
            r,
            lambda: r.tanh(),
            squeezing_db: 20.0 * r / std::f64::consts::LN_10,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// λ = tanh r.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn squeezing_db(&self) -> f64 {
        self.squeezing_db
    }

    /// Quadrature variance of each TMSV mode, cosh 2r.
    pub fn cosh_2r(&self) -> f64 {
        (2.0 * self.r).cosh()
    }

    pub fn sinh_sq(&self) -> f64 {
        let s = self.r.sinh();
        s * s
    }
}

/// Shorthand for [`SqueezingSpec::from_db`].
pub fn squeezing_from_db(squeezing_db: f64) -> Result<SqueezingSpec> {
    SqueezingSpec::from_db(squeezing_db)
}

/// Truncated Schmidt amplitudes `q_n` of a source state, together with its
/// heralding probability.
///
/// The state is `Σ q_n |n + k⟩_A |n⟩_B` with `k = kind.mode_a_offset()`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCoefficients {
    pub kind: SourceKind,
    pub q: Vec<f64>,
    pub creation_probability: f64,
    /// Closed-form Σ_{n > cutoff} q_n².
    pub tail_mass: f64,
}

impl StateCoefficients {
    pub fn cutoff(&self) -> usize {
        self.q.len() - 1
    }

    pub fn norm_sq(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum()
    }
}

fn check_tap(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "T",
            t,
            "tap beam-splitter transmissivity must lie in (0, 1)",
        ))
    }
}

/// `q_n = λⁿ √(1 − λ²)`.
pub fn tmsv_coefficients(spec: &SqueezingSpec, cutoff: usize) -> StateCoefficients {
    let lam = spec.lambda();
    let norm = (1.0 - lam * lam).sqrt();
    let q = (0..=cutoff).map(|n| norm * lam.powi(n as i32)).collect();
    StateCoefficients {
        kind: SourceKind::Tmsv,
        q,
        creation_probability: 1.0,
        tail_mass: tail_mass(SourceKind::Tmsv, spec, 0.5, cutoff),
    }
}

/// `q_n = (1 − λ²T)(λ√T)ⁿ √(n+1)`, heralded with probability
/// `λ²(1−λ²)(1−T)/(1−λ²T)²`.
pub fn pss_coefficients(spec: &SqueezingSpec, t: f64, cutoff: usize) -> Result<StateCoefficients> {
    check_tap(t)?;
    let lam = spec.lambda();
    let g = lam * lam * t;
    let base = lam * t.sqrt();
    let q = (0..=cutoff)
        .map(|n| (1.0 - g) * base.powi(n as i32) * ((n + 1) as f64).sqrt())
        .collect();
    Ok(StateCoefficients {
        kind: SourceKind::Pss,
        q,
        creation_probability: creation_probability(SourceKind::Pss, spec, t)?,
        tail_mass: tail_mass(SourceKind::Pss, spec, t, cutoff),
    })
}

/// `q_n = √((1−λ²T²)³/(1+λ²T²)) (λT)ⁿ (n+1)`.
pub fn pss2_coefficients(spec: &SqueezingSpec, t: f64, cutoff: usize) -> Result<StateCoefficients> {
    check_tap(t)?;
    let a = spec.lambda() * t;
    let a2 = a * a;
    let norm = ((1.0 - a2).powi(3) / (1.0 + a2)).sqrt();
    let q = (0..=cutoff)
        .map(|n| norm * a.powi(n as i32) * (n + 1) as f64)
        .collect();
    Ok(StateCoefficients {
        kind: SourceKind::Pss2,
        q,
        creation_probability: creation_probability(SourceKind::Pss2, spec, t)?,
        tail_mass: tail_mass(SourceKind::Pss2, spec, t, cutoff),
    })
}

/// Dispatches to the coefficient builder for `kind`; `t` is ignored for TMSV.
pub fn source_coefficients(
    kind: SourceKind,
    spec: &SqueezingSpec,
    t: f64,
    cutoff: usize,
) -> Result<StateCoefficients> {
    match kind {
        SourceKind::Tmsv => Ok(tmsv_coefficients(spec, cutoff)),
        SourceKind::Pss => pss_coefficients(spec, t, cutoff),
        SourceKind::Pss2 => pss2_coefficients(spec, t, cutoff),
    }
}

/// Heralding probability of the source; 1 for TMSV.
pub fn creation_probability(kind: SourceKind, spec: &SqueezingSpec, t: f64) -> Result<f64> {
    let lam2 = spec.lambda() * spec.lambda();
    match kind {
        SourceKind::Tmsv => Ok(1.0),
        SourceKind::Pss => {
            check_tap(t)?;
            let d = 1.0 - lam2 * t;
            Ok(lam2 * (1.0 - lam2) * (1.0 - t) / (d * d))
        }
        SourceKind::Pss2 => {
            check_tap(t)?;
            let a2 = lam2 * t * t;
            Ok(lam2 * (1.0 - lam2) * (1.0 + a2) * (1.0 - t) * (1.0 - t) / (1.0 - a2).powi(3))
        }
    }
}

/// Closed-form mass Σ_{n > cutoff} q_n² discarded by truncating at `cutoff`.
pub fn tail_mass(kind: SourceKind, spec: &SqueezingSpec, t: f64, cutoff: usize) -> f64 {
    let lam2 = spec.lambda() * spec.lambda();
    let m = (cutoff + 1) as f64;
    let mi = (cutoff + 1) as i32;
    match kind {
        // Σ_{n≥M} (1−g) gⁿ = g^M
        SourceKind::Tmsv => lam2.powi(mi),
        // (1−g)² Σ_{n≥M} (n+1) gⁿ = g^M (M + 1 − M g)
        SourceKind::Pss => {
            let g = lam2 * t;
            g.powi(mi) * (m + 1.0 - m * g)
        }
        // (1−a)³/(1+a) Σ_{n≥M} (n+1)² aⁿ, expanded around (k + 1 + M)²
        SourceKind::Pss2 => {
            let a = lam2 * t * t;
            let om = 1.0 - a;
            let s = (1.0 + a) / om.powi(3) + 2.0 * m / (om * om) + m * m / om;
            a.powi(mi) * s * om.powi(3) / (1.0 + a)
        }
    }
}

/// Smallest cutoff whose discarded tail mass is below `tolerance`.
pub fn cutoff_for_tolerance(
    kind: SourceKind,
    spec: &SqueezingSpec,
    t: f64,
    tolerance: f64,
) -> usize {
    (0..100_000)
        .find(|&n| tail_mass(kind, spec, t, n) < tolerance)
        .unwrap_or(100_000)
}

/// Image of the elementary operator `|m⟩⟨n|` under the pure-loss channel of
/// transmissivity `tau`, as a map `(m − ℓ, n − ℓ) → coefficient`.
pub fn kraus_evolve_elementary(m: usize, n: usize, tau: f64) -> BTreeMap<(usize, usize), f64> {
    let sqrt_tau = tau.sqrt();
    let loss = 1.0 - tau;
    (0..=m.min(n))
        .map(|l| {
            let c = (binomial(m, l) * binomial(n, l)).sqrt()
                * loss.powi(l as i32)
                * sqrt_tau.powi((m + n - 2 * l) as i32);
            ((m - l, n - l), c)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Rows of √C(n, k) for n up to `max_n`.
fn sqrt_binomial_table(max_n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_n + 1);
    for n in 0..=max_n {
        let mut row = vec![1.0; n + 1];
        for k in 1..n {
            let prev = &rows[n - 1];
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows.into_iter()
        .map(|r| r.into_iter().map(f64::sqrt).collect())
        .collect()
}

/// Truncated two-mode density operator `Σ ρ_{abcd} |a⟩⟨c| ⊗ |b⟩⟨d|` with
/// `a − b = c − d` on its support.
///
/// Only entries with `a ≥ c` are stored, keyed by `(a, b, c)`; the rest follow
/// from Hermiticity, `ρ_{abcd} = ρ_{cdab}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockTwoModeState {
    cutoff: usize,
    entries: BTreeMap<(usize, usize, usize), f64>,
    trace_deficit: f64,
    tolerance: f64,
}

impl FockTwoModeState {
    /// Photon-number cutoff of the source amplitudes.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Tail mass 1 − Tr ρ discarded by the truncation.
    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Number of stored (`a ≥ c`) coefficients.
    pub fn stored_len(&self) -> usize {
        self.entries.len()
    }

    /// Stored coefficients as `((a, b, c, d), value)`.
    pub fn stored(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), f64)> + '_ {
        self.entries
            .iter()
            .map(|(&(a, b, c), &v)| ((a, b, c, c + b - a), v))
    }

    /// `ρ_{abcd}`, zero off the support.
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        if a + d != b + c {
            return 0.0;
        }
        let key = if a >= c { (a, b, c) } else { (c, d, a) };
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    /// Tr ρ computed from the stored diagonal.
    pub fn trace(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(&(a, _, c), _)| a == c)
            .map(|(_, v)| v)
            .sum()
    }

    /// Writes one line `a b c d value` per stored coefficient.
    pub fn write_dump(&self, mut out: impl Write) -> io::Result<()> {
        for ((a, b, c, d), v) in self.stored() {
            writeln!(out, "{a} {b} {c} {d} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Sends mode B of the pure source through a pure-loss channel.
///
/// Fails with [`Error::TruncationExceeded`] when the source tail discarded at
/// this cutoff exceeds `tolerance`.
pub fn evolve_through_loss(
    source: &StateCoefficients,
    tau: f64,
    tolerance: f64,
) -> Result<FockTwoModeState> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("tau", tau, "must lie in [0, 1]"));
    }
    let cutoff = source.cutoff();
    if source.tail_mass > tolerance {
        return Err(Error::TruncationExceeded {
            cutoff,
            deficit: source.tail_mass,
            tolerance,
        });
    }
    let offset = source.kind.mode_a_offset();
    let sqrt_binom = sqrt_binomial_table(cutoff);
    let sqrt_tau = tau.sqrt();
    let loss = 1.0 - tau;
    let q = &source.q;

    // Source pair (m, n) with m ≥ n feeds a = m + k, c = n + k and, after ℓ
    // lost photons, b = m − ℓ, d = n − ℓ.
    let entries: BTreeMap<(usize, usize, usize), f64> = (0..=cutoff)
        .into_par_iter()
        .flat_map_iter(|m| {
            let sqrt_binom = &sqrt_binom;
            (0..=m).flat_map(move |n| {
                let qmn = q[m] * q[n];
                (0..=n).map(move |l| {
                    let (b, d) = (m - l, n - l);
                    let v = qmn
                        * sqrt_binom[m][l]
                        * sqrt_binom[n][l]
                        * loss.powi(l as i32)
                        * sqrt_tau.powi((b + d) as i32);
                    ((m + offset, b, n + offset), v)
                })
            })
        })
        .filter(|(_, v)| *v != 0.0)
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    Ok(FockTwoModeState {
        cutoff,
        entries,
        trace_deficit: source.tail_mass,
        tolerance,
    })
}

/// Photon-subtracted state after the pure-loss channel, with the default
/// truncation tolerance.
pub fn evolve_pss_through_loss(
    spec: &SqueezingSpec,
    t: f64,
    tau: f64,
    cutoff: usize,
) -> Result<FockTwoModeState> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid("tau", tau, "must lie in (0, 1]"));
    }
    let src = pss_coefficients(spec, t, cutoff)?;
    evolve_through_loss(&src, tau, DEFAULT_TRUNCATION_TOLERANCE)
}

/// Second moments `(x′, y′, z′)` of a state in shot-noise units.
pub fn covariance_from_density(state: &FockTwoModeState) -> SourceMoments {
    let mut x = 0.0;
    let mut y = 0.0;
    let mut z = 0.0;
    for (&(a, b, c), &v) in &state.entries {
        if a == c {
            x += (2 * a + 1) as f64 * v;
            y += (2 * b + 1) as f64 * v;
        } else if a == c + 1 {
            // The a = c − 1 half of the sum is the Hermitian mirror of this
            // entry and contributes the same √(ab)·ρ.
            z += 2.0 * ((a * b) as f64).sqrt() * v;
        }
    }
    SourceMoments::new_unchecked(x, y, z)
}

//! Built-in oracle suite behind `cvqkd validate`.

use std::fmt;

use cvqkd::fading::{DEFAULT_FLOOR_FRACTION, DEFAULT_NODES};
use cvqkd::fock::DEFAULT_TRUNCATION_TOLERANCE;
use cvqkd::numerics::GaussLegendre;
use cvqkd::{
    covariance_from_density, cm_after_channel, evolve_through_loss, fading_pdf, holevo_quantity,
    mean_loss_db, sigma_for_mean_loss, source_coefficients, source_moments, symplectic_spectrum,
    FadingModel, LinkParams, NoiseParams, QuadratureRule, Source, SourceKind, SqueezingSpec,
};

pub const CM_TOLERANCE: f64 = 1e-9;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
pub const PURE_STATE_TOLERANCE: f64 = 1e-9;
pub const ROUND_TRIP_TOLERANCE_DB: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub cutoff: usize,
    pub aperture_h: f64,
    pub quadrature_nodes: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            cutoff: cvqkd::fock::DEFAULT_CUTOFF,
            aperture_h: 1.0,
            quadrature_nodes: DEFAULT_NODES,
        }
    }
}

fn spec(db: f64) -> SqueezingSpec {
    SqueezingSpec::from_db(db).expect("fixed squeezing grid is valid")
}

/// Fock-space evolution against the closed-form covariance matrix. The state
/// is built even when the truncation tail is too large so the deviation is
/// visible in the report.
fn fock_covariance(cutoff: usize) -> Check {
    let noiseless = NoiseParams::new(0.0, 1.0, 0.0).expect("ideal detector is valid");
    let mut worst = 0.0f64;
    let mut worst_tail = 0.0f64;
    let mut problems = Vec::new();
    for kind in SourceKind::ALL {
        for s in [5.0, 10.0] {
            for t in [0.1, 0.5, 0.9] {
                for tau in [0.1, 0.5, 1.0] {
                    let sq = spec(s);
                    let result = source_coefficients(kind, &sq, t, cutoff).and_then(|c| {
                        worst_tail = worst_tail.max(c.tail_mass);
                        let state = evolve_through_loss(&c, tau, f64::INFINITY)?;
                        let f = covariance_from_density(&state);
                        let m = source_moments(kind, &sq, t)?;
                        let cm = cm_after_channel(&m, &LinkParams::new(tau, noiseless)?);
                        Ok((f.x - cm.a).abs().max((f.y - cm.b).abs()).max((f.z - cm.c).abs()))
                    });
                    match result {
                        Ok(d) if d.is_finite() => worst = worst.max(d),
                        Ok(_) => worst = f64::INFINITY,
                        Err(e) => problems.push(format!("{kind} {s} dB: {e}")),
                    }
                }
            }
        }
    }
    let truncated = worst_tail > DEFAULT_TRUNCATION_TOLERANCE;
    let mut detail = format!("cutoff {cutoff}, max |ΔCM| = {worst:.3e}, max tail mass = {worst_tail:.3e}");
    if truncated {
        detail.push_str(&format!(
            "; cutoff too small: tail exceeds {DEFAULT_TRUNCATION_TOLERANCE:e}"
        ));
    }
    if let Some(p) = problems.first() {
        detail.push_str(&format!("; {p}"));
    }
    Check {
        name: "fock-covariance",
        passed: worst < CM_TOLERANCE && !truncated && problems.is_empty(),
        detail,
    }
}

/// ∫p dη over (0, η0] with η = η0·exp(−w⁴/2), composite Gauss–Legendre in w
/// and closed-form slivers at both ends.
fn substituted_normalization(model: &FadingModel) -> f64 {
    let gl = GaussLegendre::new(20);
    let rate = model.l_over_beta.powi(2) / (2.0 * model.sigma_b.powi(2));
    let s_max = (40.0 / rate).powf(model.gamma_s / 2.0).min(1400.0);
    let s_min: f64 = 1e-6;
    let (w_min, w_max) = (s_min.powf(0.25), s_max.powf(0.25));
    let panels = 400;
    let width = (w_max - w_min) / panels as f64;
    let mut sum = -(-rate * s_min.powf(2.0 / model.gamma_s)).exp_m1();
    for k in 0..panels {
        let a = w_min + width * k as f64;
        sum += gl.integrate(a, a + width, |w| {
            let eta = model.eta0 * (-0.5 * w.powi(4)).exp();
            fading_pdf(model, eta) * eta * 2.0 * w.powi(3)
        });
    }
    sum + (-rate * s_max.powf(2.0 / model.gamma_s)).exp()
}

fn pdf_normalization(h: f64, nodes: usize) -> Check {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for sigma in [0.1, 0.5, 1.0, 2.0, 3.0] {
        match FadingModel::new(sigma, h) {
            Ok(model) => {
                let a = substituted_normalization(&model);
                let b = QuadratureRule::new(&model, nodes, DEFAULT_FLOOR_FRACTION).total_probability();
                let d = (a - 1.0).abs().max((b - 1.0).abs());
                worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
            }
            Err(e) => problems.push(format!("σ_b = {sigma}: {e}")),
        }
    }
    let mut detail = format!("h = {h}, max |∫p − 1| = {worst:.3e} over σ_b ∈ {{0.1, 0.5, 1, 2, 3}}");
    if let Some(p) = problems.first() {
        detail.push_str(&format!("; {p}"));
    }
    Check {
        name: "pdf-normalization",
        passed: worst < NORMALIZATION_TOLERANCE && problems.is_empty(),
        detail,
    }
}

/// A TMSV over a lossless channel to an ideal detector is pure: every
/// symplectic eigenvalue is 1 and Eve learns nothing.
fn pure_state_entropies() -> Check {
    let ideal = NoiseParams::new(0.0, 1.0, 0.0).expect("ideal detector is valid");
    let link = LinkParams::new(1.0, ideal).expect("unit transmissivity is valid");
    let mut worst_nu = 0.0f64;
    let mut worst_chi = 0.0f64;
    let mut problems = Vec::new();
    for s in [1.0, 5.0, 10.0, 16.0, 20.0] {
        let m = Source::tmsv(spec(s)).moments();
        match symplectic_spectrum(&m, &link).and_then(|sp| Ok((sp, holevo_quantity(&m, &link)?))) {
            Ok((sp, chi)) => {
                for nu in [sp.nu1, sp.nu2, sp.nu3, sp.nu4] {
                    worst_nu = worst_nu.max((nu - 1.0).abs());
                }
                worst_chi = worst_chi.max(chi.abs());
            }
            Err(e) => problems.push(format!("{s} dB: {e}")),
        }
    }
    let mut detail = format!("max |ν − 1| = {worst_nu:.3e}, max |I_E| = {worst_chi:.3e}");
    if let Some(p) = problems.first() {
        detail.push_str(&format!("; {p}"));
    }
    Check {
        name: "pure-state-entropies",
        passed: worst_nu < PURE_STATE_TOLERANCE
            && worst_chi < PURE_STATE_TOLERANCE
            && problems.is_empty(),
        detail,
    }
}

fn sigma_round_trip(h: f64, nodes: usize) -> Check {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for target in [1.0, 5.0, 10.0, 20.0, 30.0] {
        let achieved = sigma_for_mean_loss(target, h, nodes)
            .and_then(|s| FadingModel::new(s, h))
            .and_then(|m| mean_loss_db(&m, nodes));
        match achieved {
            Ok(d) => worst = worst.max((d - target).abs()),
            Err(e) => problems.push(format!("{target} dB: {e}")),
        }
    }
    let mut detail = format!("max |Δ loss| = {worst:.3e} dB over targets 1 to 30 dB");
    if let Some(p) = problems.first() {
        detail.push_str(&format!("; {p}"));
    }
    Check {
        name: "sigma-round-trip",
        passed: worst < ROUND_TRIP_TOLERANCE_DB && problems.is_empty(),
        detail,
    }
}

pub fn run_validation(opts: &ValidateOptions) -> Report {
    Report {
        checks: vec![
            fock_covariance(opts.cutoff),
            pdf_normalization(opts.aperture_h, opts.quadrature_nodes),
            pure_state_entropies(),
            sigma_round_trip(opts.aperture_h, opts.quadrature_nodes),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_validation(&ValidateOptions::default());
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn tiny_cutoff_fails_the_covariance_check() {
        let c = fock_covariance(5);
        assert!(!c.passed);
        assert!(c.detail.contains("cutoff too small"), "{}", c.detail);
    }

    #[test]
    fn display_marks_status() {
        let c = Check {
            name: "x",
            passed: false,
            detail: "d".into(),
        };
        assert_eq!(c.to_string(), "FAIL x: d");
    }
}

//! Secret-key rates for entanglement-based continuous-variable QKD.
//!
//! Sources are the two-mode squeezed vacuum and its one- and two-photon
//! subtracted variants. Channels are fixed pure loss with excess noise, or
//! beam-wander fading averaged over the log-negative Weibull law. All
//! variances are in shot-noise units.
//!
//! ```
//! use cvqkd::{key_rate_at_transmissivity, LinkParams, NoiseParams, Source, SqueezingSpec};
//!
//! let source = Source::tmsv(SqueezingSpec::from_db(10.0)?);
//! let link = LinkParams::new(1.0, NoiseParams::ideal())?;
//! let k = key_rate_at_transmissivity(&source, &link, 0.95)?;
//! assert!((k.key_rate - 0.95 * 0.5 * 5.05f64.log2()).abs() < 1e-9);
//! # Ok::<(), cvqkd::Error>(())
//! ```

pub mod error;
pub mod fading;
pub mod fock;
pub mod gaussian;
pub mod numerics;
pub mod sweeps;

pub use error::{Error, Result};
pub use fading::{
    average_key_rate, fading_model, fading_pdf, loss_floor_db, mean_loss_db,
    mean_transmissivity, sigma_for_mean_loss, AveragingOptions, FadingModel, QuadratureRule,
};
pub use fock::{
    covariance_from_density, creation_probability, evolve_pss_through_loss, evolve_through_loss,
    source_coefficients, squeezing_from_db, FockTwoModeState, SourceKind, SqueezingSpec,
    StateCoefficients,
};
pub use gaussian::{
    cm_after_channel, cm_after_detector, entropy_function, holevo_quantity,
    key_rate_at_transmissivity, mutual_information, source_moments, symplectic_spectrum,
    KeyRateBreakdown, LinkParams, NoiseParams, Source, SourceMoments, SymplecticSpectrum,
    TwoModeCm,
};
pub use sweeps::{
    optimize_t, run_figure3, run_figure4, run_figure5, run_sweep, ChannelKind, ExperimentSpec,
    Figure5Spec, Figure5Tables, SweepFailure, SweepRow, SweepTable,
};

use cvqkd::fading::{loss_floor_db, DEFAULT_FLOOR_FRACTION, DEFAULT_NODES};
use cvqkd::numerics::GaussLegendre;
use cvqkd::*;
use proptest::prelude::*;

/// ∫p over (0, η0] in the variable w with η = η0·exp(−w⁴/2), composite
/// Gauss–Legendre, plus closed-form slivers at both ends.
fn independent_normalization(model: &FadingModel) -> f64 {
    let gl = GaussLegendre::new(20);
    let rate = model.l_over_beta.powi(2) / (2.0 * model.sigma_b.powi(2));
    let s_max = (40.0 / rate).powf(model.gamma_s / 2.0).min(1400.0);
    let s_min: f64 = 1e-6;
    let (w_min, w_max) = (s_min.powf(0.25), s_max.powf(0.25));
    let panels = 400;
    let mut sum = -(-rate * s_min.powf(2.0 / model.gamma_s)).exp_m1();
    for k in 0..panels {
        let a = w_min + (w_max - w_min) * k as f64 / panels as f64;
        let b = w_min + (w_max - w_min) * (k + 1) as f64 / panels as f64;
        sum += gl.integrate(a, b, |w| {
            let eta = model.eta0 * (-0.5 * w.powi(4)).exp();
            fading_pdf(model, eta) * eta * 2.0 * w.powi(3)
        });
    }
    sum + (-rate * s_max.powf(2.0 / model.gamma_s)).exp()
}

fn tmsv_rate(s: f64, xi: f64) -> impl Fn(f64) -> Result<f64> {
    let m = Source::tmsv(SqueezingSpec::from_db(s).unwrap()).moments();
    move |eta| {
        let link = LinkParams::new(eta * eta, NoiseParams::default())?;
        Ok(xi * mutual_information(&m, &link)? - holevo_quantity(&m, &link)?)
    }
}

#[test]
fn pdf_normalizes_on_reference_widths() {
    for sigma in [0.1, 0.5, 1.0, 2.0] {
        let model = FadingModel::new(sigma, 1.0).unwrap();
        let total = independent_normalization(&model);
        assert!((total - 1.0).abs() < 1e-10, "σ={sigma}: {total}");
    }
}

#[test]
fn pdf_vanishes_outside_support() {
    let model = FadingModel::new(0.7, 1.0).unwrap();
    for eta in [-1.0, 0.0, model.eta0 * (1.0 + 1e-15), 0.95, 1.0, 2.0] {
        assert_eq!(fading_pdf(&model, eta), 0.0, "η={eta}");
    }
}

#[test]
fn mean_loss_increases_with_beam_wander() {
    let mut last = loss_floor_db(1.0).unwrap();
    for i in 1..=80 {
        let sigma = 0.02 * 1.1f64.powi(i);
        let loss = mean_loss_db(&FadingModel::new(sigma, 1.0).unwrap(), DEFAULT_NODES).unwrap();
        assert!(loss > last, "σ={sigma}: {loss} ≤ {last}");
        last = loss;
    }
}

#[test]
fn larger_target_needs_larger_sigma() {
    let sigmas: Vec<f64> = [1.0, 3.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
        .iter()
        .map(|&d| sigma_for_mean_loss(d, 1.0, DEFAULT_NODES).unwrap())
        .collect();
    assert!(sigmas.windows(2).all(|w| w[1] > w[0]), "{sigmas:?}");
}

#[test]
fn discarded_tail_below_floor_is_negligible() {
    for sigma in [0.5, 3.0, 12.7] {
        let model = FadingModel::new(sigma, 1.0).unwrap();
        let opts = |floor_fraction| AveragingOptions {
            clamp_negative: false,
            floor_fraction,
            ..AveragingOptions::default()
        };
        let k = tmsv_rate(10.0, 0.95);
        let a = average_key_rate(&model, &k, &opts(DEFAULT_FLOOR_FRACTION)).unwrap();
        let b = average_key_rate(&model, &k, &opts(DEFAULT_FLOOR_FRACTION.powi(2))).unwrap();
        assert!((a - b).abs() < 1e-10, "σ={sigma}: {a} vs {b}");
    }
}

#[test]
fn narrow_fading_reduces_to_peak_rate() {
    let model = FadingModel::new(1e-3, 1.0).unwrap();
    let k = tmsv_rate(10.0, 0.95);
    let avg = average_key_rate(&model, &k, &AveragingOptions::default()).unwrap();
    let peak = k(model.eta0).unwrap();
    assert!((avg - peak).abs() < 1e-4 * peak);
}

#[test]
fn averages_are_identical_across_thread_counts() {
    let model = FadingModel::new(2.0, 1.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                average_key_rate(&model, tmsv_rate(16.0, 0.8), &AveragingOptions::default()).unwrap()
            })
    };
    assert_eq!(run(1).to_bits(), run(4).to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization_holds_across_widths(sigma in 0.05f64..3.0) {
        let model = FadingModel::new(sigma, 1.0).unwrap();
        prop_assert!((independent_normalization(&model) - 1.0).abs() < 1e-8);
        let rule = QuadratureRule::new(&model, DEFAULT_NODES, DEFAULT_FLOOR_FRACTION);
        prop_assert!((rule.total_probability() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fading_beats_matched_fixed_channel(sigma in 0.05f64..13.0, s in 3.0f64..18.0, xi in 0.8f64..=1.0) {
        let model = FadingModel::new(sigma, 1.0).unwrap();
        let k = tmsv_rate(s, xi);
        let avg = average_key_rate(&model, &k, &AveragingOptions::default()).unwrap();
        let fixed = k(mean_transmissivity(&model, DEFAULT_NODES).unwrap().sqrt()).unwrap();
        prop_assert!(avg >= fixed - 1e-12 * fixed.abs(), "{} < {}", avg, fixed);
    }
}

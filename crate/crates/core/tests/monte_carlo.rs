use uavris_core::agents::RandomPolicy;
use uavris_core::channel::{
    bs_ris_pathloss, ris_user_pathloss, sample_channels, ChannelParams, PathLossParams,
};
use uavris_core::energy::{incident_rf_power, RenewableSource, SignalCovariance};
use uavris_core::geometry::{GridSpec, Layout, Position3D};
use uavris_core::rng::{stream, Stream};

const DRAWS: usize = 100_000;

fn layout() -> Layout {
    let grid = GridSpec {
        rows: 1,
        cols: 2,
        element_spacing: 0.05,
        uav_altitude: 20.0,
        user_height: 1.5,
    };
    Layout::new(Position3D::origin(), [30.0, 5.0], &[[38.0, -3.0]], grid).unwrap()
}

fn params(zeta: f64) -> ChannelParams {
    ChannelParams {
        pathloss: PathLossParams::default(),
        wavelength: 0.1,
        csi_error_std: zeta,
        csi_error_bs_ris: true,
        csi_error_ris_user: true,
        hi_level: 0.0,
        noise_power: 1e-13,
    }
}

fn within(actual: f64, expected: f64, rel: f64) -> bool {
    ((actual - expected) / expected).abs() <= rel
}

#[test]
fn channel_second_moments_match_pathloss() {
    let lay = layout();
    let p = params(0.01);
    let (mut f, mut e) = (stream(11, Stream::Fading), stream(11, Stream::CsiError));
    let mut g1 = 0.0;
    let mut gru = 0.0;
    let mut err = 0.0;
    for _ in 0..DRAWS {
        let ch = sample_channels(&lay, &p, 1, &mut f, &mut e).unwrap();
        g1 += ch.g1_true.get(0, 0).norm_sqr();
        gru += ch.g_ru_true.get(0, 0).norm_sqr();
        err += (ch.g1_est.get(0, 1) - ch.g1_true.get(0, 1)).norm_sqr();
    }
    let n = DRAWS as f64;
    let pl1 = bs_ris_pathloss(&lay.bs, &lay.ris_elements[0], &p.pathloss).unwrap();
    let pl2 = ris_user_pathloss(&lay.ris_elements[0], &lay.users[0], &p.pathloss).unwrap();
    assert!(within(g1 / n, pl1, 0.02), "{} vs {pl1}", g1 / n);
    // Rician: LoS part has unit modulus, so the mean power is the path gain
    assert!(within(gru / n, pl2, 0.02), "{} vs {pl2}", gru / n);
    assert!(within(err / n, 1e-4, 0.02), "{}", err / n);
}

#[test]
fn incident_power_mean_matches_trace() {
    let lay = layout();
    let p = params(0.0);
    let (mut f, mut e) = (stream(12, Stream::Fading), stream(12, Stream::CsiError));
    let cov = SignalCovariance::isotropic(2, 10.0);
    let mut total = 0.0;
    for _ in 0..DRAWS {
        let ch = sample_channels(&lay, &p, 2, &mut f, &mut e).unwrap();
        total += incident_rf_power(&ch, &cov).unwrap();
    }
    let expected: f64 = lay
        .ris_elements
        .iter()
        .map(|el| bs_ris_pathloss(&lay.bs, el, &p.pathloss).unwrap() * 20.0)
        .sum();
    assert!(
        within(total / DRAWS as f64, expected, 0.01),
        "{} vs {expected}",
        total / DRAWS as f64
    );
}

#[test]
fn renewable_mean_is_half_mu_lambda() {
    let mut src = RenewableSource::new(0.05, 1.5, stream(3, Stream::Renewable));
    let mean = (0..DRAWS).map(|_| src.sample(2.0)).sum::<f64>() / DRAWS as f64;
    assert!(within(mean, 1.5 * 2.0 * 0.05 / 2.0, 0.02), "{mean}");
}

#[test]
fn random_policy_is_centred() {
    let mut pol = RandomPolicy::new(4, 9);
    let mut sums = [0.0; 4];
    for _ in 0..DRAWS {
        for (s, v) in sums.iter_mut().zip(pol.act()) {
            *s += v;
        }
    }
    for s in sums {
        assert!((s / DRAWS as f64).abs() < 0.02);
    }
}

mod common;

use irs_mixgamma::channel::{cascaded_gain, direct_gain, IrsSpec};
use irs_mixgamma::geometry::{Mode, NetworkConfig};
use irs_mixgamma::metrics::{combined_gain, SignalOptions};
use irs_mixgamma::montecarlo::*;
use irs_mixgamma::specfun::gauss_laguerre_rule;
use irs_mixgamma::Error;

fn params(cfg: &NetworkConfig, n: u32) -> ChannelParams {
    ChannelParams {
        geometry: cfg.link_geometry(100.0, 10.0, 95.0),
        m_bu: cfg.fading.m_bu,
        m_bi: cfg.fading.m_bi,
        m_iu: cfg.fading.m_iu,
        irs: IrsSpec { n_elements: n, eps_ref: cfg.irs.eps_ref },
        element_fading: ElementFading::Common,
    }
}

#[test]
fn runs_are_reproducible() {
    let cfg = NetworkConfig::default();
    let opts = SimOptions::for_config(&cfg);
    let a = simulate(&cfg, &opts, 300, 42).unwrap();
    let b = simulate(&cfg, &opts, 300, 42).unwrap();
    assert_eq!(a, b);
    let c = simulate(&cfg, &opts, 300, 43).unwrap();
    assert_ne!(a.samples, c.samples);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("realization,mode,signal_w,interference_w,sinr_db\n"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn single_realization_matches_run() {
    let cfg = NetworkConfig::default();
    let opts = SimOptions::for_config(&cfg);
    let run = simulate(&cfg, &opts, 50, 7).unwrap();
    assert_eq!(sample_realization(&cfg, &opts, 7, 37).unwrap(), run.samples[37]);
    assert!(run.samples.iter().enumerate().all(|(k, r)| r.realization == k as u64));
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = NetworkConfig::default();
    let opts = SimOptions::for_config(&cfg);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&cfg, &opts, 200, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
    let p = params(&cfg, 50);
    let law = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_channel_law(LawKind::Mixture, &p, 20_000, 3).unwrap().samples)
    };
    assert_eq!(law(1), law(3));
}

#[test]
fn association_frequencies_follow_void_probabilities() {
    let cfg = NetworkConfig::default();
    let run = simulate(&cfg, &SimOptions::for_config(&cfg), 20_000, 1).unwrap();
    let f = run.mode_fractions();
    let p = cfg.mode_probabilities();
    for k in 0..3 {
        assert!((f[k] - p[k]).abs() < 0.01, "mode {}: {} vs {}", k + 1, f[k], p[k]);
    }
    assert!(run.samples.iter().filter(|r| r.mode == Mode::Mode3).all(|r| r.cascaded_interference_w == 0.0));
}

#[test]
fn no_irs_means_no_cascades() {
    let mut cfg = NetworkConfig::default();
    cfg.lambda_i = 1e-12;
    let run = simulate(&cfg, &SimOptions::for_config(&cfg), 2000, 2).unwrap();
    assert!(run.samples.iter().all(|r| r.mode == Mode::Mode3 && r.cascaded_interference_w == 0.0));
}

#[test]
fn conditioning_fixes_the_serving_link() {
    let cfg = NetworkConfig::default();
    let opts =
        SimOptions { condition: Some(Conditioning { d_bu0: 80.0, d_iu0: Some(30.0) }), ..SimOptions::for_config(&cfg) };
    let run = simulate(&cfg, &opts, 5000, 4).unwrap();
    assert!(run.samples.iter().all(|r| r.mode == Mode::Mode2));
    // the direct signal alone is Gamma(m, m/(εd^{-α}))
    let (mean, se) = run.mean_powers().0;
    let want = cfg.tx_power.0 * cfg.irs.eps_ref * 80f64.powf(-cfg.path_loss.alpha_bu);
    assert!((mean - want).abs() < 4.0 * se, "{mean}±{se} vs {want}");
    let bad = SimOptions { condition: Some(Conditioning { d_bu0: 1e6, d_iu0: None }), ..opts };
    assert!(matches!(sample_realization(&cfg, &bad, 1, 0), Err(Error::InvalidInput { .. })));
}

#[test]
fn window_must_cover_several_cells() {
    let cfg = NetworkConfig::default();
    let opts = SimOptions { window: 100.0, ..SimOptions::for_config(&cfg) };
    assert!(matches!(simulate(&cfg, &opts, 10, 0), Err(Error::WindowTooSmall { .. })));
}

#[test]
fn sample_size_floors() {
    let cfg = NetworkConfig::default();
    let p = params(&cfg, 10);
    assert!(matches!(estimate_channel_law(LawKind::Direct, &p, 100, 0), Err(Error::TooFewSamples { .. })));
    let opts = SimOptions::for_config(&cfg);
    assert!(matches!(estimate_metrics(&cfg, &opts, 10, 0, &[1.0]), Err(Error::TooFewSamples { .. })));
    assert!(estimate_metrics(&cfg, &opts, 1000, 0, &[1.0, 0.5]).is_err());
}

#[test]
fn direct_law_is_nakagami() {
    let cfg = NetworkConfig::default();
    let p = params(&cfg, 10);
    let est = estimate_channel_law(LawKind::Direct, &p, 1_000_000, 5).unwrap();
    let law = direct_gain(&p.geometry, p.m_bu, &p.irs).unwrap();
    let ks = est.ecdf.ks_distance(|x| law.cdf(x));
    assert!(ks < 0.002, "KS {ks}");
}

#[test]
fn cascaded_and_mixture_laws_match_analytic() {
    let cfg = NetworkConfig::default();
    let p = params(&cfg, 100);
    let rule = gauss_laguerre_rule(20).unwrap();
    let casc = cascaded_gain(&p.geometry, p.m_bi, p.m_iu, &p.irs, &rule).unwrap();
    let est = estimate_channel_law(LawKind::Cascaded, &p, 1_000_000, 6).unwrap();
    let scale = casc.mean();
    let e = common::histogram_mmse(&casc, &est.samples, scale);
    assert!(e <= 1e-4, "cascaded MMSE {e}");

    let direct = direct_gain(&p.geometry, p.m_bu, &p.irs).unwrap();
    let mix = combined_gain(&direct, &casc, &SignalOptions::default()).unwrap();
    let est = estimate_channel_law(LawKind::Mixture, &p, 1_000_000, 7).unwrap();
    let e = common::histogram_mmse(&mix, &est.samples, mix.mean());
    assert!(e <= 1e-3, "mixture MMSE {e}");
}

#[test]
fn metric_estimates_are_consistent() {
    let cfg = NetworkConfig::default();
    let taus = [0.01, 0.1, 1.0, 10.0, 100.0];
    let est = estimate_metrics(&cfg, &SimOptions::for_config(&cfg), 10_000, 8, &taus).unwrap();
    let (se, err) = est.spectral_efficiency;
    assert!(err / se < 0.02, "{se}±{err}");
    assert!(est.outage.windows(2).all(|w| w[1].1 >= w[0].1));
    assert!(est.moments[1].0 >= est.moments[0].0.powi(2));
    assert!((est.mode_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(est.realizations, 10_000);
}

use irs_mixgamma::channel::{cascaded_gain, direct_gain, mixture_gain};
use irs_mixgamma::geometry::{Mode, NetworkConfig, ScatterField};
use irs_mixgamma::interference::{default_outer_radius, InterferenceContext, Population};
use irs_mixgamma::metrics::*;
use irs_mixgamma::montecarlo::{estimate_metrics, Conditioning, SimOptions};
use irs_mixgamma::specfun::{gauss_laguerre_rule, QuadratureRule};
use irs_mixgamma::{Error, MixtureGamma};
use proptest::prelude::*;

fn rule() -> QuadratureRule {
    gauss_laguerre_rule(20).unwrap()
}

fn noise_only(signal: MixtureGamma, noise: f64) -> SinrContext {
    let cfg = NetworkConfig::default();
    SinrContext::new(signal, None, noise, Mode::Mode3, cfg.link_geometry(100.0, 60.0, 100.0)).unwrap()
}

fn conditioned(cfg: &NetworkConfig) -> SinrContext {
    SinrContext::for_geometry(cfg, 100.0, 10.0, false, &rule(), &SignalOptions::default()).unwrap()
}

/// Integral over log-spaced u of f(u)·u, composite Simpson on `n` intervals.
fn log_integral(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi / lo).ln() / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let u = lo * (k as f64 * h).exp();
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f(u) * u;
    }
    acc * h / 3.0
}

#[test]
fn exponential_signal_matches_closed_form() {
    // e^x E₁(x) at x = δ²ξ
    let cases = [(0.1, 2.014642544708451634772), (1.0, 0.596347362323194074341), (10.0, 0.091563333939788081876)];
    for (x, want) in cases {
        let ctx = noise_only(MixtureGamma::gamma(1.0, x / 1e-3).unwrap(), 1e-3);
        let se = spectral_efficiency(&ctx).unwrap();
        assert!((se / want - 1.0).abs() < 1e-5, "x={x}: {se} vs {want}");
    }
}

#[test]
fn non_integer_shape_expectation() {
    // E[ln(1+Z)] for Z ~ Gamma(2.5, rate 1.5)
    let ctx = noise_only(MixtureGamma::gamma(2.5, 1.5).unwrap(), 1.0);
    let se = spectral_efficiency(&ctx).unwrap();
    assert!((se - 0.910267307699836251655).abs() < 1e-6, "{se}");
    let m = sinr_moment(&ctx, 1).unwrap();
    assert!((m - 2.5 / 1.5).abs() < 1e-6);
    let m2 = sinr_moment(&ctx, 2).unwrap();
    assert!((m2 - 2.5 * 3.5 / 2.25).abs() < 1e-5, "{m2}");
}

#[test]
fn functional_is_linear_in_kernel() {
    let ctx = conditioned(&NetworkConfig::default());
    let (a, b) = (0.7, -2.3);
    let g1 = expected_g(&ctx, &se_kernel).unwrap();
    let g2 = expected_g(&ctx, &|be, z| moment_kernel(be, 1, z)).unwrap();
    let both = expected_g(&ctx, &|be, z| a * se_kernel(be, z) + b * moment_kernel(be, 1, z)).unwrap();
    assert!((both - (a * g1 + b * g2)).abs() < 1e-9 * (a * g1).abs().max((b * g2).abs()));
    assert!((g2 / sinr_moment(&ctx, 1).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn spectral_efficiency_matches_independent_quadrature() {
    let cfg = NetworkConfig::default();
    let ctx = conditioned(&cfg);
    let (ic, pop) = ctx.interference.as_ref().unwrap();
    // E ln(1 + S/(I+δ²)) = ∫ (1 − L_S(u)) e^{−δ²u} L_I(u) / u du
    let scale = 1.0 / (ic.mean(*pop) + ctx.noise);
    let brute = log_integral(1e-10 * scale, 1e6 * scale, 20_000, |u| {
        let li = irs_mixgamma::interference::laplace_total(u, ic, *pop).unwrap();
        (1.0 - ctx.signal.laplace_real(u)) * (-ctx.noise * u).exp() * li / u
    });
    let se = spectral_efficiency(&ctx).unwrap();
    assert!((se / brute - 1.0).abs() < 1e-4, "{se} vs {brute}");
}

#[test]
fn monotone_in_noise_and_threshold() {
    let cfg = NetworkConfig::default();
    let base = conditioned(&cfg);
    let (ic, pop) = base.interference.clone().unwrap();
    let mut last_se = f64::INFINITY;
    let mut last_out = 0.0;
    for k in 0..4 {
        let noise = base.noise * 10f64.powi(2 * k);
        let ctx =
            SinrContext::new(base.signal.clone(), Some((ic.clone(), pop)), noise, base.mode, base.geometry).unwrap();
        let se = spectral_efficiency(&ctx).unwrap();
        let out = outage_probability(&ctx, 1.0).unwrap();
        assert!(se < last_se && out >= last_out - 1e-9);
        (last_se, last_out) = (se, out);
    }
    let taus = irs_mixgamma::stats::logspace(1e-3, 1e3, 13);
    let out: Vec<f64> = taus.iter().map(|&t| outage_probability(&base, t).unwrap()).collect();
    for w in out.windows(2) {
        assert!(w[1] >= w[0] - 1e-9);
    }
    assert!(out[0] < 1e-3 && outage_probability(&base, 1e9).unwrap() > 0.999);
    assert_eq!(outage_probability(&base, f64::INFINITY).unwrap(), 1.0);
    assert!(matches!(outage_probability(&base, 0.0), Err(Error::Domain { .. })));
}

#[test]
fn outage_agrees_with_gil_pelaez() {
    let ctx = conditioned(&NetworkConfig::default());
    for tau in [0.1, 1.0, 10.0] {
        let a = outage_probability(&ctx, tau).unwrap();
        let b = outage_probability_gil_pelaez(&ctx, tau).unwrap();
        assert!((a - b).abs() < 1e-3, "τ={tau}: {a} vs {b}");
    }
}

#[test]
fn noise_only_outage_is_signal_cdf() {
    let s = MixtureGamma::gamma(2.0, 2.0).unwrap();
    let ctx = noise_only(s.clone(), 0.5);
    for tau in [0.1, 1.0, 4.0] {
        assert!((outage_probability(&ctx, tau).unwrap() - s.cdf(0.5 * tau)).abs() < 1e-12);
        assert!((outage_probability_gil_pelaez(&ctx, tau).unwrap() - s.cdf(0.5 * tau)).abs() < 1e-4);
    }
}

#[test]
fn jensen_bounds() {
    let ctx = conditioned(&NetworkConfig::default());
    let m1 = sinr_moment(&ctx, 1).unwrap();
    let m2 = sinr_moment(&ctx, 2).unwrap();
    let se = spectral_efficiency(&ctx).unwrap();
    assert!(m2 >= m1 * m1);
    assert!(se <= m1.ln_1p());
    assert!(matches!(sinr_moment(&ctx, 0), Err(Error::InvalidInput { .. })));
}

#[test]
fn weak_signal_has_no_rate() {
    let ctx = noise_only(MixtureGamma::gamma(2.0, 1e12).unwrap(), 1.0);
    assert!(spectral_efficiency(&ctx).unwrap() < 1e-11);
}

#[test]
fn signal_case_mapping() {
    let cfg = NetworkConfig::default();
    let r = rule();
    let opts = SignalOptions::default();
    let geom = cfg.link_geometry(100.0, 10.0, 95.0);
    let direct = direct_gain(&geom, cfg.fading.m_bu, &cfg.irs).unwrap();
    let casc = cascaded_gain(&geom, cfg.fading.m_bi, cfg.fading.m_iu, &cfg.irs, &r).unwrap();
    for mode in [Mode::Mode2, Mode::Mode3] {
        assert_eq!(signal_law(mode, false, &geom, &cfg, &r, &opts).unwrap(), direct);
        assert!(matches!(signal_law(mode, true, &geom, &cfg, &r, &opts), Err(Error::InconsistentCase { .. })));
    }
    assert_eq!(signal_law(Mode::Mode1, true, &geom, &cfg, &r, &opts).unwrap(), casc);
    let both = signal_law(Mode::Mode1, false, &geom, &cfg, &r, &opts).unwrap();
    let want = direct.mean() + casc.mean() + 2.0 * direct.moment(0.5).unwrap() * casc.moment(0.5).unwrap();
    assert!((both.mean() / want - 1.0).abs() < 1e-3);
}

#[test]
fn numeric_combination_matches_series() {
    let x = MixtureGamma::gamma(2.0, 2.0).unwrap();
    let y = MixtureGamma::gamma(3.0, 0.5).unwrap();
    let exact = mixture_gain(&x, &y, 400).unwrap();
    let numeric = combined_gain_numeric(&x, &y).unwrap();
    for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let q = exact.quantile(p);
        assert!((numeric.cdf(q) - p).abs() < 2e-3, "p={p}: {}", numeric.cdf(q));
    }
    assert!((numeric.mean() / exact.mean() - 1.0).abs() < 1e-6);
}

#[test]
fn cascade_assistance_beats_direct_only() {
    let cfg = NetworkConfig::default();
    let r = rule();
    let opts = SignalOptions::default();
    let geom = cfg.link_geometry(100.0, 10.0, 100.0);
    let ic = InterferenceContext::new(&cfg, 100.0, Some(10.0), &r).unwrap();
    let noise = cfg.noise_power.0 / cfg.tx_power.0;
    let se = |mode| {
        let s = signal_law(mode, false, &geom, &cfg, &r, &opts).unwrap();
        let ctx = SinrContext::new(s, Some((ic.clone(), Population::DirectPlusCascaded)), noise, mode, geom).unwrap();
        (spectral_efficiency(&ctx).unwrap(), outage_probability(&ctx, 1.0).unwrap())
    };
    let (se1, out1) = se(Mode::Mode1);
    let (se3, out3) = se(Mode::Mode3);
    assert!(se1 > se3 && out1 < out3, "{se1} {se3} {out1} {out3}");
}

#[test]
fn averaging_nodes_cover_the_distance_laws() {
    let cfg = NetworkConfig::default();
    let opts = AveragingOptions::default();
    let nodes = averaging_nodes(&cfg, &opts).unwrap();
    let total: f64 = nodes.iter().map(|n| n.weight).sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    let p = cfg.mode_probabilities();
    let mode1: f64 = nodes.iter().filter(|n| n.d_iu < cfg.d1).map(|n| n.weight).sum();
    let mode3: f64 = nodes.iter().filter(|n| n.d_iu >= cfg.d2).map(|n| n.weight).sum();
    assert!((mode1 - p[0]).abs() < 1e-6 && (mode3 - p[2]).abs() < 1e-9);
    let constant = unconditional_metric(
        &cfg,
        &AveragingOptions { bu_nodes: 1, mode1_nodes: 1, mode2_nodes: 1, ..opts },
        &rule(),
        &|_| Ok(2.5),
    )
    .unwrap();
    assert!((constant - 2.5).abs() < 1e-12);
}

#[test]
fn conditioned_metrics_match_simulation() {
    let mut cfg = NetworkConfig::default();
    cfg.scattering.field = ScatterField::Poisson;
    let r = rule();
    let sig = SignalOptions { bearing_nodes: 16, ..Default::default() };
    let window = default_outer_radius(cfg.lambda_b);
    let signal = conditional_signal_law(&cfg, Mode::Mode1, false, 100.0, 10.0, &r, &sig).unwrap();
    let ic = InterferenceContext::windowed(&cfg, 100.0, Some(10.0), window, &r).unwrap();
    let noise = cfg.noise_power.0 / cfg.tx_power.0;
    let geom = cfg.link_geometry(100.0, 10.0, 100.0);
    let ctx = SinrContext::new(signal, Some((ic, Population::DirectPlusCascaded)), noise, Mode::Mode1, geom).unwrap();

    let taus = irs_mixgamma::stats::logspace(1e-2, 1e2, 10);
    let opts = SimOptions {
        window,
        condition: Some(Conditioning { d_bu0: 100.0, d_iu0: Some(10.0) }),
        ..SimOptions::for_config(&cfg)
    };
    let mc = estimate_metrics(&cfg, &opts, 10_000, 21, &taus).unwrap();

    let se = spectral_efficiency(&ctx).unwrap();
    assert!((se / mc.spectral_efficiency.0 - 1.0).abs() < 0.03, "SE {se} vs {:?}", mc.spectral_efficiency);
    let m1 = sinr_moment(&ctx, 1).unwrap();
    assert!((m1 / mc.moments[0].0 - 1.0).abs() < 0.03, "E[SINR] {m1} vs {:?}", mc.moments[0]);
    for &(tau, p) in &mc.outage {
        let a = outage_probability(&ctx, tau).unwrap();
        assert!((a - p).abs() < 0.01, "τ={tau}: {a} vs {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gamma_signal_metrics_are_ordered(shape in 0.5f64..6.0, rate in 0.05f64..20.0, noise in 1e-3f64..10.0) {
        let s = MixtureGamma::gamma(shape, rate).unwrap();
        let lo = spectral_efficiency(&noise_only(s.clone(), noise)).unwrap();
        let hi = spectral_efficiency(&noise_only(s.clone(), 2.0 * noise)).unwrap();
        prop_assert!(lo > hi && hi > 0.0);
        prop_assert!(lo <= (shape / rate / noise).ln_1p() + 1e-12);
        let ctx = noise_only(s, noise);
        let mut last = 0.0;
        for tau in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let p = outage_probability(&ctx, tau).unwrap();
            prop_assert!((0.0..=1.0).contains(&p) && p >= last);
            last = p;
        }
    }
}

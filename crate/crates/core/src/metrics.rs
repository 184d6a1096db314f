//! Received-signal laws per operation mode and SINR metrics E[g(SINR)].
//!
//! For a signal term Gamma(β, ξ) with weight ω and interference-plus-noise
//! transform L_Y(u) = e^{−δ²u} L_I(u),
//! `E[g(SINR)] = Σ ω/ξ ∫₀^∞ g_β(u/ξ) L_Y(u) du`, evaluated on a shared
//! logarithmic u-grid.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded_gain, direct_gain, mixture_gain, LinkGeometry};
use crate::error::{domain, invalid, Error, Result};
use crate::geometry::{Mode, NetworkConfig};
use crate::interference::{interference_cdf_with_condition, InterferenceContext, Population};
use crate::mixgamma::{project_tabulated, MixtureGamma};
use crate::specfun::{gauss_laguerre_rule, ln_gamma, QuadratureRule};
use crate::stats::linspace;

/// Numerical settings for building the received-signal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalOptions {
    /// Largest k3 for the exact quadratic-form series before the numeric fallback.
    pub k3_max: usize,
    /// Bearing nodes for averaging over the BS-IRS distance (0 uses d_BI = d_BU).
    pub bearing_nodes: usize,
    /// Largest Σ|ω| accepted from the signed series.
    pub max_abs_mass: f64,
}

impl Default for SignalOptions {
    fn default() -> Self {
        SignalOptions { k3_max: 400, bearing_nodes: 0, max_abs_mass: 1e6 }
    }
}

/// Power law of the received signal for one of the four signal cases.
///
/// Mode2 and Mode3 receive the direct link only; Mode1 receives the direct and
/// cascaded links coherently, or the cascaded link alone when the direct link
/// is blocked.
pub fn signal_law(
    mode: Mode,
    blocked_direct: bool,
    geom: &LinkGeometry,
    cfg: &NetworkConfig,
    rule: &QuadratureRule,
    opts: &SignalOptions,
) -> Result<MixtureGamma> {
    let f = cfg.fading;
    match (mode, blocked_direct) {
        (Mode::Mode1, false) => {
            let direct = direct_gain(geom, f.m_bu, &cfg.irs)?;
            let casc = cascaded_gain(geom, f.m_bi, f.m_iu, &cfg.irs, rule)?;
            combined_gain(&direct, &casc, opts)
        }
        (Mode::Mode1, true) => cascaded_gain(geom, f.m_bi, f.m_iu, &cfg.irs, rule),
        (_, false) => direct_gain(geom, f.m_bu, &cfg.irs),
        (m, true) => Err(Error::InconsistentCase { detail: format!("blocked direct link in {m} has no signal path") }),
    }
}

/// Signal law given d_BU and d_IU, optionally averaged over the BS-IRS bearing.
pub fn conditional_signal_law(
    cfg: &NetworkConfig,
    mode: Mode,
    blocked_direct: bool,
    d_bu: f64,
    d_iu: f64,
    rule: &QuadratureRule,
    opts: &SignalOptions,
) -> Result<MixtureGamma> {
    if mode != Mode::Mode1 || opts.bearing_nodes == 0 {
        let geom = cfg.link_geometry(d_bu, d_iu, d_bu);
        return signal_law(mode, blocked_direct, &geom, cfg, rule, opts);
    }
    let gl = gauss_quad::GaussLegendre::new(opts.bearing_nodes.max(2)).expect("bearing rule");
    let parts = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(t, w)| {
            let theta = 0.5 * PI * (t + 1.0);
            let d_bi = (d_bu * d_bu + d_iu * d_iu - 2.0 * d_bu * d_iu * theta.cos()).sqrt();
            let geom = cfg.link_geometry(d_bu, d_iu, d_bi.max(1e-6 * d_bu));
            Ok((0.5 * w, signal_law(mode, blocked_direct, &geom, cfg, rule, opts)?))
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureGamma::mixture_of(&parts)
}

/// Law of |h_d + h_c|² from the direct and cascaded power laws.
///
/// Uses the exact signed quadratic-form series when it converges within
/// `k3_max` and stays well conditioned; otherwise tabulates the density of the
/// amplitude sum numerically and projects it onto 20 Gamma terms.
pub fn combined_gain(direct: &MixtureGamma, cascaded: &MixtureGamma, opts: &SignalOptions) -> Result<MixtureGamma> {
    let want = direct.mean() + cascaded.mean() + 2.0 * direct.moment(0.5)? * cascaded.moment(0.5)?;
    match mixture_gain(direct, cascaded, opts.k3_max) {
        Ok(s) if s.abs_mass() <= opts.max_abs_mass && ((s.mean() - want) / want).abs() < 1e-6 => Ok(s),
        Ok(_) | Err(Error::TruncationTail { .. }) | Err(Error::NonIntegerShape { .. }) => {
            combined_gain_numeric(direct, cascaded)
        }
        Err(e) => Err(e),
    }
}

const FALLBACK_GRID: usize = 600;

/// Numeric density of (A + B)² for independent amplitudes A = √X, B = √Y.
pub fn combined_gain_numeric(x2: &MixtureGamma, y2: &MixtureGamma) -> Result<MixtureGamma> {
    if x2.is_signed() || y2.is_signed() {
        return Err(Error::SignedMixture { op: "combined_gain_numeric" });
    }
    let mean = x2.mean() + y2.mean() + 2.0 * x2.moment(0.5)? * y2.moment(0.5)?;
    let amp_hi = x2.quantile(1.0 - 1e-10).sqrt() + y2.quantile(1.0 - 1e-10).sqrt();
    let y_hi = amp_hi * amp_hi / mean;
    let gl = gauss_quad::GaussLegendre::new(8).expect("8-point rule");
    let amp_pdf = |m: &MixtureGamma, a: f64| if a > 0.0 { 2.0 * a * m.pdf_at(a * a) } else { 0.0 };
    // ∫₀^{t/2} f(a) g(t − a) da on panels refined geometrically toward a = 0
    let half = |f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64, t: f64| -> f64 {
        let mut acc = 0.0;
        let mut hi = 0.5 * t;
        for _ in 0..40 {
            let lo = 0.5 * hi;
            acc += gl.integrate(lo, hi, |a| f(a) * g(t - a));
            hi = lo;
        }
        acc + gl.integrate(0.0, hi, |a| f(a) * g(t - a))
    };
    let fa = |a: f64| amp_pdf(x2, a);
    let fb = |b: f64| amp_pdf(y2, b);
    let grid: Vec<f64> = linspace(0.0, y_hi, FALLBACK_GRID + 1).into_iter().skip(1).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&y| {
            let t = (y * mean).sqrt();
            let ft = half(&fa, &fb, t) + half(&fb, &fa, t);
            // density of S/mean at y
            mean * ft / (2.0 * t)
        })
        .collect();
    let fit = project_tabulated(&grid, &values, 20)?;
    // match the exact first moment
    fit.scaled(mean / fit.mean())
}

/// SE kernel g_β(z) = (1 − (1+z)^{−β}) / z, extended to real β > 0.
pub fn se_kernel(beta: f64, z: f64) -> f64 {
    if z == 0.0 {
        beta
    } else {
        -(-beta * z.ln_1p()).exp_m1() / z
    }
}

/// Moment kernel Γ(β+l)/(Γ(l)Γ(β)) z^{l−1}.
pub fn moment_kernel(beta: f64, l: u32, z: f64) -> f64 {
    let lf = l as f64;
    (ln_gamma(beta + lf) - ln_gamma(lf) - ln_gamma(beta)).exp() * z.powi(l as i32 - 1)
}

const U_STEP: f64 = 0.1;
const U_TAIL: f64 = 1e-20;

/// Interference-plus-noise transform tabulated on a logarithmic grid.
#[derive(Debug, Clone)]
struct LaplaceTable {
    u: Vec<f64>,
    /// e^{−δ²u} L_I(u)
    v: Vec<f64>,
}

/// Context for SINR metrics at one conditioned geometry.
#[derive(Debug)]
pub struct SinrContext {
    pub signal: MixtureGamma,
    pub interference: Option<(InterferenceContext, Population)>,
    /// Noise power divided by the transmit power (channel-gain units).
    pub noise: f64,
    pub mode: Mode,
    pub geometry: LinkGeometry,
    table: LaplaceTable,
    cdf_table: OnceLock<Result<(Vec<f64>, Vec<f64>)>>,
}

impl SinrContext {
    pub fn new(
        signal: MixtureGamma,
        interference: Option<(InterferenceContext, Population)>,
        noise: f64,
        mode: Mode,
        geometry: LinkGeometry,
    ) -> Result<Self> {
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(invalid("SinrContext", format!("noise {noise} must be positive")));
        }
        if (signal.mass() - 1.0).abs() > 1e-6 {
            return Err(invalid("SinrContext", format!("signal mass {} is not 1", signal.mass())));
        }
        let table = build_table(&signal, interference.as_ref(), noise)?;
        Ok(SinrContext { signal, interference, noise, mode, geometry, table, cdf_table: OnceLock::new() })
    }

    /// Conditioned context for a network configuration.
    ///
    /// The interfering population is direct-only in Mode3 and includes IRS
    /// scattering otherwise.
    pub fn for_geometry(
        cfg: &NetworkConfig,
        d_bu: f64,
        d_iu: f64,
        blocked_direct: bool,
        rule: &QuadratureRule,
        opts: &SignalOptions,
    ) -> Result<Self> {
        let mode = crate::geometry::association_mode(d_iu, cfg);
        let signal = conditional_signal_law(cfg, mode, blocked_direct, d_bu, d_iu, rule, opts)?;
        let ictx = InterferenceContext::new(cfg, d_bu, Some(d_iu), rule)?;
        let pop = if mode == Mode::Mode3 { Population::DirectOnly } else { Population::DirectPlusCascaded };
        let geom = cfg.link_geometry(d_bu, d_iu, d_bu);
        Self::new(signal, Some((ictx, pop)), cfg.noise_power.0 / cfg.tx_power.0, mode, geom)
    }

    fn interference_mean(&self) -> f64 {
        self.interference.as_ref().map_or(0.0, |(c, p)| c.mean(*p))
    }

    /// Interference CDF tabulated on a log grid around its mean.
    fn cdf_table(&self) -> Result<&(Vec<f64>, Vec<f64>)> {
        let t = self.cdf_table.get_or_init(|| {
            let (ctx, pop) = self.interference.as_ref().expect("interference present");
            let m = ctx.mean(*pop);
            let xs = crate::stats::logspace(1e-2 * m, 1e2 * m, 121);
            let fs = xs
                .par_iter()
                .map(|&x| interference_cdf_with_condition(x, ctx, *pop).map(|(v, _)| v))
                .collect::<Result<Vec<f64>>>()?;
            // enforce monotonicity against inversion noise
            let mut run = 0.0f64;
            let fs = fs.into_iter().map(|f| {
                run = run.max(f);
                run
            });
            Ok((xs.clone(), fs.collect()))
        });
        t.as_ref().map_err(|e| e.clone())
    }

    fn interference_cdf_interp(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let (xs, fs) = self.cdf_table()?;
        if x <= xs[0] {
            return Ok(fs[0] * (x / xs[0]));
        }
        if x >= *xs.last().unwrap() {
            return Ok(1.0);
        }
        let k = xs.partition_point(|&v| v < x);
        let (x0, x1) = (xs[k - 1].ln(), xs[k].ln());
        let w = (x.ln() - x0) / (x1 - x0);
        Ok(fs[k - 1] + w * (fs[k] - fs[k - 1]))
    }
}

fn build_table(
    signal: &MixtureGamma,
    interference: Option<&(InterferenceContext, Population)>,
    noise: f64,
) -> Result<LaplaceTable> {
    let eval = |u: f64| -> f64 {
        let li = interference.map_or(1.0, |(c, p)| crate::interference::laplace_total(u, c, *p).unwrap_or(0.0));
        (-noise * u).exp() * li
    };
    let i_mean = interference.map_or(0.0, |(c, p)| c.mean(*p));
    let scale = 1.0 / (i_mean + noise);
    let u_lo = 1e-9 * scale.min(signal.min_rate());
    let mut u_hi = scale;
    while eval(u_hi) * (u_hi / scale).powi(4) > U_TAIL {
        u_hi *= 2.0;
        if u_hi > 1e300 {
            return Err(Error::Quadrature {
                op: "SinrContext",
                detail: "interference transform does not decay".into(),
            });
        }
    }
    let n = ((u_hi / u_lo).ln() / U_STEP).ceil() as usize + 1;
    let u: Vec<f64> = crate::stats::logspace(u_lo, u_hi, n);
    let v: Vec<f64> = u.par_iter().map(|&x| eval(x)).collect();
    Ok(LaplaceTable { u, v })
}

/// Functional Σ ω/ξ ∫ g_β(u/ξ) e^{−δ²u} L_I(u) du for a kernel family g_β.
pub fn expected_g(ctx: &SinrContext, g: &(dyn Fn(f64, f64) -> f64 + Sync)) -> Result<f64> {
    let t = &ctx.table;
    let h = (t.u[1] / t.u[0]).ln();
    let n = t.u.len();
    let parts: Vec<f64> = ctx
        .signal
        .terms()
        .par_iter()
        .map(|term| {
            let mut acc = 0.0;
            for k in 0..n {
                let f = g(term.shape, t.u[k] / term.rate) * t.v[k] * t.u[k];
                acc += if k == 0 || k == n - 1 { 0.5 * f } else { f };
            }
            term.weight / term.rate * acc * h
        })
        .collect();
    let total: f64 = parts.iter().sum();
    if !total.is_finite() {
        return Err(Error::Quadrature { op: "expected_g", detail: "non-finite result".into() });
    }
    Ok(total)
}

/// Spectral efficiency E[ln(1 + SINR)] in nats/s/Hz.
pub fn spectral_efficiency(ctx: &SinrContext) -> Result<f64> {
    expected_g(ctx, &se_kernel)
}

/// E[SINR^l] for a positive integer l.
pub fn sinr_moment(ctx: &SinrContext, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(invalid("sinr_moment", "order must be a positive integer"));
    }
    let t = &ctx.table;
    let last = t.v.len() - 1;
    // the truncated tail must be negligible for this order
    let tail = t.v[last] * t.u[last].powi(l as i32);
    let value = expected_g(ctx, &|b, z| moment_kernel(b, l, z))?;
    let scale = ctx.signal.moment(l as f64)? / Gamma_l(l);
    if !(tail * scale <= 1e-9 * value.abs()) {
        return Err(Error::MomentDivergence {
            order: l as f64,
            detail: "transform tail too heavy for this order".into(),
        });
    }
    Ok(value)
}

#[allow(non_snake_case)]
fn Gamma_l(l: u32) -> f64 {
    ln_gamma(l as f64).exp()
}

/// Outage probability P(SINR < τ) = 1 − E_S[F_I(S/τ − δ²)].
pub fn outage_probability(ctx: &SinrContext, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(domain("outage_probability", format!("threshold {tau} must be positive")));
    }
    if tau.is_infinite() {
        return Ok(1.0);
    }
    let noise = ctx.noise;
    let p = match &ctx.interference {
        None => ctx.signal.cdf(tau * noise),
        Some(_) => {
            ctx.cdf_table()?;
            let mut err = None;
            let cover = ctx.signal.expect(|s| match ctx.interference_cdf_interp(s / tau - noise) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            1.0 - cover
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Outage by Gil-Pelaez inversion of Z = S − τ I at τδ²:
/// `P(Z < c) = 1/2 − (1/π) ∫₀^∞ Im[e^{−itc} φ_S(t) φ_I(−τt)]/t dt`.
pub fn outage_probability_gil_pelaez(ctx: &SinrContext, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(domain("outage_probability_gil_pelaez", format!("threshold {tau} must be positive")));
    }
    let c = tau * ctx.noise;
    let phi = |t: f64| -> Complex64 {
        let ps = ctx.signal.laplace_at(Complex64::new(0.0, -t));
        let pi = ctx
            .interference
            .as_ref()
            .map_or(Complex64::new(1.0, 0.0), |(ic, p)| ic.laplace_complex(Complex64::new(0.0, tau * t), *p));
        ps * pi
    };
    let integrand = |t: f64| (Complex64::new(0.0, -t * c).exp() * phi(t)).im / t;
    let freq = c + tau * ctx.interference_mean() + ctx.signal.mean();
    let gl = gauss_quad::GaussLegendre::new(10).expect("10-point rule");
    let mut t = 1e-9 / freq;
    // small-t part: Im[...]/t → E[S] − τE[I] − c
    let mut total = t * (ctx.signal.mean() - tau * ctx.interference_mean() - c);
    for _ in 0..2_000_000 {
        let step = (0.1 * t).min(0.5 / freq);
        let b = t + step;
        total += gl.integrate(t, b, integrand);
        t = b;
        if phi(t).norm() < 1e-9 {
            return Ok((0.5 - total / PI).clamp(0.0, 1.0));
        }
    }
    Err(Error::Quadrature {
        op: "outage_probability_gil_pelaez",
        detail: "characteristic function decays too slowly".into(),
    })
}

/// Quadrature settings for averaging over the BS and IRS distance laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingOptions {
    pub bu_nodes: usize,
    pub mode1_nodes: usize,
    pub mode2_nodes: usize,
    pub signal: SignalOptions,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        AveragingOptions { bu_nodes: 6, mode1_nodes: 6, mode2_nodes: 3, signal: SignalOptions::default() }
    }
}

/// One conditioned geometry of the averaging rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingNode {
    pub d_bu: f64,
    pub d_iu: f64,
    pub weight: f64,
}

/// Nodes and probabilities covering the nearest-BS and nearest-IRS laws,
/// with the IRS distance split at D1 and D2.
pub fn averaging_nodes(cfg: &NetworkConfig, opts: &AveragingOptions) -> Result<Vec<AveragingNode>> {
    cfg.validate()?;
    if opts.bu_nodes == 0 {
        return Err(invalid("averaging_nodes", "need at least one BS-distance node"));
    }
    // λπd² ~ Exp(1) for the nearest BS
    let bu: Vec<(f64, f64)> = if opts.bu_nodes == 1 {
        vec![(1.0 / (2.0 * cfg.lambda_b.sqrt()), 1.0)]
    } else {
        let r = gauss_laguerre_rule(opts.bu_nodes)?;
        r.nodes.iter().zip(&r.weights).map(|(&v, &w)| ((v / (cfg.lambda_b * PI)).sqrt(), w)).collect()
    };
    let v1 = cfg.lambda_i * PI * cfg.d1 * cfg.d1;
    let v2 = cfg.lambda_i * PI * cfg.d2 * cfg.d2;
    // λ_I πρ² has density e^{−v}; nodes on (a, b) weighted by e^{−v}
    let band = |a: f64, b: f64, n: usize| -> Vec<(f64, f64)> {
        if n == 0 {
            return vec![];
        }
        let gl = gauss_quad::GaussLegendre::new(n.max(2)).expect("band rule");
        gl.as_node_weight_pairs()
            .iter()
            .map(|&(t, w)| {
                let v = a + 0.5 * (b - a) * (t + 1.0);
                ((v / (cfg.lambda_i * PI)).sqrt(), 0.5 * (b - a) * w * (-v).exp())
            })
            .collect()
    };
    let mut rho = band(0.0, v1, opts.mode1_nodes);
    rho.extend(band(v1, v2, opts.mode2_nodes));
    rho.push((cfg.d2, (-v2).exp()));
    let mut out = Vec::new();
    for &(d, wd) in &bu {
        for &(r, wr) in &rho {
            out.push(AveragingNode { d_bu: d, d_iu: r, weight: wd * wr });
        }
    }
    Ok(out)
}

/// Metric averaged over the distance laws; `f` maps a conditioned context to the metric.
pub fn unconditional_metric(
    cfg: &NetworkConfig,
    opts: &AveragingOptions,
    rule: &QuadratureRule,
    f: &(dyn Fn(&SinrContext) -> Result<f64> + Sync),
) -> Result<f64> {
    Ok(unconditional_metrics(cfg, opts, rule, &|c| Ok(vec![f(c)?]))?[0])
}

/// Vector-valued version of [`unconditional_metric`]; every call of `f` must
/// return the same number of values.
pub fn unconditional_metrics(
    cfg: &NetworkConfig,
    opts: &AveragingOptions,
    rule: &QuadratureRule,
    f: &(dyn Fn(&SinrContext) -> Result<Vec<f64>> + Sync),
) -> Result<Vec<f64>> {
    let nodes = averaging_nodes(cfg, opts)?;
    let vals = nodes
        .par_iter()
        .map(|n| {
            let ctx = SinrContext::for_geometry(cfg, n.d_bu, n.d_iu, false, rule, &opts.signal)?;
            f(&ctx)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let wsum: f64 = nodes.iter().map(|n| n.weight).sum();
    let width = vals.first().map_or(0, Vec::len);
    let mut out = vec![0.0; width];
    for (n, v) in nodes.iter().zip(&vals) {
        if v.len() != width {
            return Err(invalid("unconditional_metrics", "metric length varies between nodes"));
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += n.weight * x;
        }
    }
    Ok(out.into_iter().map(|x| x / wsum).collect())
}

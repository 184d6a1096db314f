//! Laplace transforms of the aggregate interference at the typical UE and
//! its CDF by numerical Laplace inversion.
//!
//! Interfering BSs form a PPP of intensity λ_B outside the serving distance
//! d_BU0. Each contributes a direct term ε r^{−α} G and, through a scattering
//! IRS at distance ρ < D2, a scattered term ε² η(r, ρ) ρ^{−α} C, where η is
//! the bearing-averaged BS-IRS path gain and C the cascaded fading law.
//! Scatterers are placed according to [`ScatterField`].

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded_gain_w, random_phase_gain};
use crate::error::{domain, invalid, Error, Result};
use crate::geometry::{
    mean_path_gain, nearest_distance_cdf, nearest_distance_pdf, NetworkConfig, ScatterField, ScatterPhase,
};
use crate::mixgamma::MixtureGamma;
use crate::specfun::{kummer_1f1, ln_gamma, QuadratureRule};

/// Which interferer populations contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Population {
    DirectOnly,
    DirectPlusCascaded,
}

/// Window radius 20/√(λ_B π) used for truncating the BS field.
pub fn default_outer_radius(lambda_b: f64) -> f64 {
    20.0 / (lambda_b * PI).sqrt()
}

/// Bearing-averaged path gain E[l^{−α}] of the BS-IRS distance.
pub fn eta_mean(d: f64, r: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0 && r >= 0.0 && alpha >= 0.0) {
        return Err(invalid("eta_mean", format!("d={d}, r={r}, alpha={alpha}")));
    }
    if r == 0.0 {
        return Ok(d.powf(-alpha));
    }
    let v = mean_path_gain(d, r, alpha);
    if !v.is_finite() {
        return Err(domain("eta_mean", format!("E[l^-{alpha}] diverges for d = r = {d}")));
    }
    Ok(v)
}

/// Composite Gauss-Legendre nodes on `[a, b]` with panels uniform in ln x.
fn log_panels(a: f64, b: f64, max_width: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_quad::GaussLegendre::new(order).expect("Gauss-Legendre order ≥ 2");
    let (la, lb) = (a.ln(), b.ln());
    let panels = (((lb - la) / max_width).ceil() as usize).max(1);
    let h = (lb - la) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = la + h * p as f64;
        for &(t, w) in rule.as_node_weight_pairs() {
            let x = (lo + 0.5 * h * (t + 1.0)).exp();
            xs.push(x);
            ws.push(0.5 * h * w * x);
        }
    }
    (xs, ws)
}

/// Evaluation context for the interference at the typical UE.
#[derive(Debug, Clone)]
pub struct InterferenceContext {
    pub cfg: NetworkConfig,
    /// Serving BS distance; interferers lie beyond it.
    pub d_bu0: f64,
    /// Distance of the nearest IRS, or `None` to average over the IRS field.
    pub d_iu0: Option<f64>,
    pub outer_radius: f64,
    /// Whether the field beyond `outer_radius` is added by its first-order term.
    pub tail: bool,
    direct_law: MixtureGamma,
    cascade_law: MixtureGamma,
    bs_w: Vec<f64>,
    direct_gain: Vec<f64>,
    direct_tail: f64,
    nearest: Option<ScatterRow>,
    field: Vec<(f64, ScatterRow)>,
    field_core: f64,
    /// Field rows enter the exponent linearly (nearest-law averaging) rather
    /// than through the PPP functional.
    linear_field: bool,
}

/// Per-IRS cascade gains at the BS nodes.
#[derive(Debug, Clone)]
struct ScatterRow {
    gain: Vec<f64>,
    tail: f64,
}

const R_PANEL: f64 = 0.4;
const R_ORDER: usize = 10;
const RHO_PANEL: f64 = 0.7;
const RHO_ORDER: usize = 8;
/// Reference distance of the path-loss model; closer scatterers are held here.
const RHO_MIN: f64 = 1.0;

impl InterferenceContext {
    /// Context with the default outer radius and the analytic tail beyond it.
    pub fn new(cfg: &NetworkConfig, d_bu0: f64, d_iu0: Option<f64>, rule: &QuadratureRule) -> Result<Self> {
        Self::build(cfg, d_bu0, d_iu0, default_outer_radius(cfg.lambda_b), true, rule)
    }

    /// Context restricted to a finite window, matching a simulation of that radius.
    pub fn windowed(
        cfg: &NetworkConfig,
        d_bu0: f64,
        d_iu0: Option<f64>,
        window: f64,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        Self::build(cfg, d_bu0, d_iu0, window, false, rule)
    }

    fn build(
        cfg: &NetworkConfig,
        d_bu0: f64,
        d_iu0: Option<f64>,
        outer: f64,
        tail: bool,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(d_bu0 > 0.0 && outer > d_bu0) {
            return Err(invalid("InterferenceContext", format!("need 0 < d_bu0 = {d_bu0} < outer radius {outer}")));
        }
        if let Some(r) = d_iu0 {
            if !(r > 0.0) {
                return Err(invalid("InterferenceContext", format!("d_iu0 = {r} must be positive")));
            }
        }
        let pl = cfg.path_loss;
        if tail && !(pl.alpha_bu > 2.0 && pl.alpha_bi > 2.0) {
            return Err(domain("InterferenceContext", "an infinite field needs path-loss exponents above 2"));
        }
        let eps = cfg.irs.eps_ref;
        let fad = cfg.fading;
        let direct_law = MixtureGamma::gamma(fad.m_bu, fad.m_bu)?;
        let cascade_law = match cfg.scattering.phase {
            ScatterPhase::Coherent => cascaded_gain_w(1.0, fad.m_bi, fad.m_iu, cfg.scatter_elements(), rule)?,
            ScatterPhase::Random => random_phase_gain(fad.m_bi, fad.m_iu, cfg.scatter_elements())?,
        };

        let (bs_r, w) = log_panels(d_bu0, outer, R_PANEL, R_ORDER);
        let bs_w: Vec<f64> = bs_r.iter().zip(&w).map(|(r, w)| 2.0 * PI * cfg.lambda_b * r * w).collect();
        let direct_gain = bs_r.iter().map(|r| eps * r.powf(-pl.alpha_bu)).collect();
        let tail_integral = |alpha: f64| {
            if tail {
                2.0 * PI * cfg.lambda_b * outer.powf(2.0 - alpha) / (alpha - 2.0)
            } else {
                0.0
            }
        };
        let direct_tail = tail_integral(pl.alpha_bu) * eps * direct_law.mean();

        let cascade_mean = cascade_law.mean();
        let row = |rho: f64| -> Result<ScatterRow> {
            let scale = eps * eps * rho.powf(-pl.alpha_iu);
            let gain =
                bs_r.iter().map(|&r| Ok(scale * eta_mean(r, rho, pl.alpha_bi)?)).collect::<Result<Vec<f64>>>()?;
            Ok(ScatterRow { gain, tail: tail_integral(pl.alpha_bi) * scale * cascade_mean })
        };

        let (mut nearest, mut field, mut field_core) = (None, Vec::new(), 0.0);
        let linear_field = cfg.scattering.field == ScatterField::NearestLaw;
        let in_range = d_iu0.map_or(true, |r| r < cfg.d2);
        if linear_field && in_range {
            let lo = RHO_MIN.min(0.5 * cfg.d2);
            field_core = nearest_distance_cdf(cfg.lambda_i, lo);
            let (rhos, ws) = log_panels(lo, cfg.d2, RHO_PANEL, RHO_ORDER);
            for (rho, w) in rhos.into_iter().zip(ws) {
                field.push((nearest_distance_pdf(cfg.lambda_i, rho) * w, row(rho)?));
            }
        } else if in_range {
            let lo = match d_iu0 {
                Some(r) => {
                    nearest = Some(row(r)?);
                    r
                }
                None => {
                    let core = 1e-3 * cfg.d2;
                    field_core = PI * cfg.lambda_i * core * core;
                    core
                }
            };
            let (rhos, ws) = log_panels(lo, cfg.d2, RHO_PANEL, RHO_ORDER);
            for (rho, w) in rhos.into_iter().zip(ws) {
                field.push((2.0 * PI * cfg.lambda_i * rho * w, row(rho)?));
            }
        }
        Ok(InterferenceContext {
            cfg: cfg.clone(),
            d_bu0,
            d_iu0,
            outer_radius: outer,
            tail,
            direct_law,
            cascade_law,
            bs_w,
            direct_gain,
            direct_tail,
            nearest,
            field,
            field_core,
            linear_field,
        })
    }

    /// Unit-mean fading law of the interfering direct links.
    pub fn direct_law(&self) -> &MixtureGamma {
        &self.direct_law
    }

    /// Fading law of the scattered links at unit path loss.
    pub fn cascade_law(&self) -> &MixtureGamma {
        &self.cascade_law
    }

    fn direct_exponent<T: Arg>(&self, s: T) -> T {
        let mut e = s * self.direct_tail;
        for (w, g) in self.bs_w.iter().zip(&self.direct_gain) {
            e = e + (T::one() - T::laplace(&self.direct_law, s * *g)) * *w;
        }
        e
    }

    fn row_exponent<T: Arg>(&self, s: T, row: &ScatterRow) -> T {
        let mut e = s * row.tail;
        for (w, g) in self.bs_w.iter().zip(&row.gain) {
            e = e + (T::one() - T::laplace(&self.cascade_law, s * *g)) * *w;
        }
        e
    }

    fn cascaded_exponent<T: Arg>(&self, s: T) -> T {
        let mut e = T::zero();
        if let Some(row) = &self.nearest {
            e = self.row_exponent(s, row);
        }
        for (k, (w, row)) in self.field.iter().enumerate() {
            let j = self.row_exponent(s, row);
            let f = if self.linear_field { j } else { T::one() - (T::zero() - j).exp() };
            e = e + f * *w;
            if k == 0 && self.field_core > 0.0 {
                // IRSs inside the innermost node are counted at it
                e = e + f * self.field_core;
            }
        }
        e
    }

    fn exponent<T: Arg>(&self, s: T, pop: Population) -> T {
        let e = self.direct_exponent(s);
        match pop {
            Population::DirectOnly => e,
            Population::DirectPlusCascaded => e + self.cascaded_exponent(s),
        }
    }

    /// L(s) = E[e^{−sI}] at a complex argument with Re s ≥ 0.
    pub fn laplace_complex(&self, s: Complex64, pop: Population) -> Complex64 {
        (-self.exponent(s, pop)).exp()
    }

    /// Mean aggregate interference (in channel-gain units).
    pub fn mean(&self, pop: Population) -> f64 {
        let mut m = self.direct_tail;
        for (w, g) in self.bs_w.iter().zip(&self.direct_gain) {
            m += w * g * self.direct_law.mean();
        }
        if pop == Population::DirectPlusCascaded {
            let cm = self.cascade_law.mean();
            let row_mean =
                |row: &ScatterRow| row.tail + self.bs_w.iter().zip(&row.gain).map(|(w, g)| w * g * cm).sum::<f64>();
            if let Some(row) = &self.nearest {
                m += row_mean(row);
            }
            for (k, (w, row)) in self.field.iter().enumerate() {
                m += w * row_mean(row);
                if k == 0 {
                    m += self.field_core * row_mean(row);
                }
            }
        }
        m
    }
}

/// Scalar types the exponent integrals are evaluated over.
trait Arg: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn one() -> Self;
    fn exp(self) -> Self;
    fn laplace(m: &MixtureGamma, z: Self) -> Self;
}

impl Arg for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn laplace(m: &MixtureGamma, z: Self) -> Self {
        m.laplace_real(z)
    }
}

impl Arg for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn laplace(m: &MixtureGamma, z: Self) -> Self {
        m.laplace_at(z)
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(domain("laplace", format!("s = {s} must be finite and nonnegative")));
    }
    Ok(())
}

/// Laplace transform of the direct-link interference from BSs beyond d_BU0.
pub fn laplace_direct_interference(s: f64, ctx: &InterferenceContext) -> Result<f64> {
    check_s(s)?;
    Ok((-ctx.direct_exponent(s)).exp())
}

/// Laplace transform of the interference scattered by IRSs within D2.
pub fn laplace_cascaded_interference(s: f64, ctx: &InterferenceContext) -> Result<f64> {
    check_s(s)?;
    Ok((-ctx.cascaded_exponent(s)).exp())
}

/// Laplace transform of the total interference of a population.
pub fn laplace_total(s: f64, ctx: &InterferenceContext, pop: Population) -> Result<f64> {
    check_s(s)?;
    Ok((-ctx.exponent(s, pop)).exp())
}

const SERIES_MAX_TERMS: usize = 10_000;

/// Power-series evaluation of the direct interference transform for Nakagami-m
/// fading over an unbounded field:
/// `ln L = −πλ d0² Σ_k (−1)^k m^{−1−k} (sε d0^{−α})^{1+k} Γ(1+k+m)/Γ(m) · 2/((k+1)!(α(k+1)−2))`.
///
/// Converges for `s ε d0^{−α} < m`.
pub fn laplace_direct_series(s: f64, ctx: &InterferenceContext) -> Result<f64> {
    check_s(s)?;
    let cfg = &ctx.cfg;
    let (m, alpha, d0) = (cfg.fading.m_bu, cfg.path_loss.alpha_bu, ctx.d_bu0);
    let z = s * cfg.irs.eps_ref * d0.powf(-alpha);
    if z >= m {
        return Err(Error::SeriesDivergence {
            op: "laplace_direct_series",
            detail: format!("s ε d0^-α = {z} is outside the radius {m}"),
        });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let lgm = ln_gamma(m);
    let mut sum = 0.0;
    let mut small = 0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        let lmag = (1.0 + kf) * (z / m).ln() + ln_gamma(1.0 + kf + m) - lgm - ln_gamma(kf + 2.0);
        let term = lmag.exp() * 2.0 / (alpha * (kf + 1.0) - 2.0);
        sum += if k % 2 == 0 { term } else { -term };
        if term <= 1e-17 * sum.abs() {
            small += 1;
            if small >= 3 {
                return Ok((-PI * cfg.lambda_b * d0 * d0 * sum).exp());
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesDivergence {
        op: "laplace_direct_series",
        detail: format!("no convergence in {SERIES_MAX_TERMS} terms"),
    })
}

/// Closed form of the direct transform over an unbounded field via
/// `∫_{d0}^∞ (1 − e^{−c r^{−α}}) 2r dr = d0² [₁F₁(−δ; 1−δ; −c d0^{−α}) − 1]`, δ = 2/α,
/// averaged over the fading law.
pub fn laplace_direct_closed_form(s: f64, ctx: &InterferenceContext) -> Result<f64> {
    check_s(s)?;
    let cfg = &ctx.cfg;
    let (alpha, d0) = (cfg.path_loss.alpha_bu, ctx.d_bu0);
    let delta = 2.0 / alpha;
    if !(alpha > 2.0) {
        return Err(domain("laplace_direct_closed_form", "needs α > 2"));
    }
    let c = s * cfg.irs.eps_ref * d0.powf(-alpha);
    let mut failure = None;
    let e = ctx.direct_law.expect(|g| match kummer_1f1(-delta, 1.0 - delta, Complex64::new(-c * g, 0.0)) {
        Ok(v) => v.re - 1.0,
        Err(err) => {
            failure.get_or_insert(err);
            0.0
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    Ok((-PI * cfg.lambda_b * d0 * d0 * e).exp())
}

const EULER_M: usize = 25;
/// Condition estimate beyond which the inversion is flagged as inaccurate.
pub const EULER_CONDITION_LIMIT: f64 = 1e6;

fn euler_coefficients() -> &'static [f64] {
    static COEF: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    COEF.get_or_init(|| {
        let m = EULER_M;
        let mut xi = vec![1.0; 2 * m + 1];
        xi[0] = 0.5;
        let p = 0.5f64.powi(m as i32);
        xi[2 * m] = p;
        let mut binom = 1.0;
        for k in 1..m {
            binom = binom * (m - k + 1) as f64 / k as f64;
            xi[2 * m - k] = xi[2 * m - k + 1] + p * binom;
        }
        xi.iter().enumerate().map(|(k, x)| if k % 2 == 0 { *x } else { -x }).collect()
    })
}

/// Euler-summation inversion of a Laplace transform at t > 0.
///
/// Returns the value and the condition estimate Σ|terms| / |value|.
pub fn euler_inverse(f: impl Fn(Complex64) -> Complex64, t: f64) -> (f64, f64) {
    let m = EULER_M as f64;
    let a = m * std::f64::consts::LN_10 / 3.0;
    let scale = 10f64.powf(m / 3.0) / t;
    let (mut sum, mut abs) = (0.0, 0.0);
    for (k, eta) in euler_coefficients().iter().enumerate() {
        let v = eta * f(Complex64::new(a, PI * k as f64) / t).re;
        sum += v;
        abs += v.abs();
    }
    let value = scale * sum;
    (value, scale * abs / value.abs().max(f64::MIN_POSITIVE))
}

/// CDF of the aggregate interference at x together with its condition estimate.
pub fn interference_cdf_with_condition(x: f64, ctx: &InterferenceContext, pop: Population) -> Result<(f64, f64)> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(domain("interference_cdf", format!("x = {x} must be nonnegative")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 1.0));
    }
    let (v, cond) = euler_inverse(|s| ctx.laplace_complex(s, pop) / s, x);
    Ok((v.clamp(0.0, 1.0), cond))
}

/// CDF of the aggregate interference by numerical Laplace inversion, clamped to [0, 1].
pub fn interference_cdf(x: f64, ctx: &InterferenceContext, pop: Population) -> Result<f64> {
    interference_cdf_with_condition(x, ctx, pop).map(|(v, _)| v)
}

/// Gil-Pelaez inversion `F(x) = 1/2 − (1/π) ∫₀^∞ Im[e^{−itx} φ(t)]/t dt` with φ(t) = L(−it).
pub fn interference_cdf_gil_pelaez(x: f64, ctx: &InterferenceContext, pop: Population) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain("interference_cdf_gil_pelaez", format!("x = {x} must be positive")));
    }
    let rule = gauss_quad::GaussLegendre::new(16).expect("16-point rule");
    let integrand = |v: f64| {
        let t = v / x;
        let phi = ctx.laplace_complex(Complex64::new(0.0, -t), pop);
        (Complex64::new(0.0, -v).exp() * phi).im / v
    };
    // panels of width π/2 in v = t x, until the characteristic function has decayed
    let mut total = 0.0;
    let width = 0.5 * PI;
    for p in 0..20_000 {
        let a = width * p as f64;
        let b = a + width;
        let part = rule.integrate(a, b, &integrand);
        total += part;
        let decay = ctx.laplace_complex(Complex64::new(0.0, -b / x), pop).norm();
        if decay < 1e-12 && p > 4 {
            return Ok((0.5 - total / PI).clamp(0.0, 1.0));
        }
    }
    Err(Error::Quadrature {
        op: "interference_cdf_gil_pelaez",
        detail: "characteristic function decays too slowly".into(),
    })
}

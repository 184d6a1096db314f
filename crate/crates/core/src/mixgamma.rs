//! Finite (possibly signed) mixtures of Gamma densities.
//!
//! A mixture is stored as weights `ω_i`, shapes `β_i` and rates `ξ_i`, so that
//! `f(x) = Σ ω_i Gamma(x; β_i, ξ_i)`. The conventional coefficient
//! `ε_i = ω_i ξ_i^{β_i} / Γ(β_i)` is derived on demand; it overflows `f64` for
//! path-loss-scaled channels, which is why it is not the stored quantity.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::specfun::{gamma_p, ln_gamma};
use crate::stats::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureKind {
    NonnegativeWeights,
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTerm {
    pub weight: f64,
    pub shape: f64,
    pub rate: f64,
}

impl GammaTerm {
    pub fn new(weight: f64, shape: f64, rate: f64) -> Self {
        GammaTerm { weight, shape, rate }
    }

    /// Term from the `(ε, β, ξ)` parametrization.
    pub fn from_epsilon(epsilon: f64, shape: f64, rate: f64) -> Self {
        let log_abs = epsilon.abs().ln() + ln_gamma(shape) - shape * rate.ln();
        GammaTerm { weight: epsilon.signum() * log_abs.exp(), shape, rate }
    }

    pub fn epsilon(&self) -> f64 {
        self.weight * (self.shape * self.rate.ln() - ln_gamma(self.shape)).exp()
    }
}

#[derive(Clone, PartialEq)]
pub struct MixtureGamma {
    kind: MixtureKind,
    terms: Vec<GammaTerm>,
    log_norm: Vec<f64>,
}

impl fmt::Debug for MixtureGamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixtureGamma").field("kind", &self.kind).field("terms", &self.terms).finish()
    }
}

/// Structured text form `{kind, terms: [[ε, β, ξ], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub kind: MixtureKind,
    pub terms: Vec<[f64; 3]>,
}

impl MixtureGamma {
    pub fn new(kind: MixtureKind, terms: Vec<GammaTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("MixtureGamma::new", "no terms"));
        }
        for t in &terms {
            if !(t.shape > 0.0 && t.rate > 0.0 && t.shape.is_finite() && t.rate.is_finite() && t.weight.is_finite()) {
                return Err(invalid("MixtureGamma::new", format!("bad term {t:?}")));
            }
            if kind == MixtureKind::NonnegativeWeights && t.weight < 0.0 {
                return Err(invalid(
                    "MixtureGamma::new",
                    format!("negative weight {} in nonnegative mixture", t.weight),
                ));
            }
        }
        let log_norm = terms.iter().map(|t| t.shape * t.rate.ln() - ln_gamma(t.shape)).collect();
        Ok(MixtureGamma { kind, terms, log_norm })
    }

    /// Single Gamma law with the given shape and rate.
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(MixtureKind::NonnegativeWeights, vec![GammaTerm::new(1.0, shape, rate)])
    }

    pub fn from_epsilons(kind: MixtureKind, terms: &[(f64, f64, f64)]) -> Result<Self> {
        for &(_, b, x) in terms {
            if !(b > 0.0 && x > 0.0) {
                return Err(invalid("MixtureGamma::from_epsilons", format!("shape {b} and rate {x} must be positive")));
            }
        }
        Self::new(kind, terms.iter().map(|&(e, b, x)| GammaTerm::from_epsilon(e, b, x)).collect())
    }

    pub fn kind(&self) -> MixtureKind {
        self.kind
    }

    pub fn terms(&self) -> &[GammaTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_signed(&self) -> bool {
        self.kind == MixtureKind::Signed
    }

    /// Σ ω_i.
    pub fn mass(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Σ |ω_i|, the cancellation scale of a signed mixture.
    pub fn abs_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).sum()
    }

    pub fn min_shape(&self) -> f64 {
        self.terms.iter().map(|t| t.shape).fold(f64::INFINITY, f64::min)
    }

    pub fn min_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate).fold(f64::INFINITY, f64::min)
    }

    pub fn max_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.rate).fold(0.0, f64::max)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(domain("pdf", format!("x = {x} must be positive")));
        }
        Ok(self.pdf_at(x))
    }

    pub(crate) fn pdf_at(&self, x: f64) -> f64 {
        let lx = x.ln();
        self.terms
            .iter()
            .zip(&self.log_norm)
            .map(|(t, c)| t.weight * (c + (t.shape - 1.0) * lx - t.rate * x).exp())
            .sum()
    }

    /// Raw (unclamped) CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        self.terms.iter().map(|t| t.weight * gamma_p(t.shape, t.rate * x).unwrap_or(1.0)).sum()
    }

    pub fn moment(&self, l: f64) -> Result<f64> {
        if !(l > -self.min_shape()) {
            return Err(domain("moment", format!("order {l} ≤ −min shape {}", self.min_shape())));
        }
        Ok(self
            .terms
            .iter()
            .map(|t| t.weight * (ln_gamma(t.shape + l) - ln_gamma(t.shape) - l * t.rate.ln()).exp())
            .sum())
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().map(|t| t.weight * t.shape / t.rate).sum()
    }

    pub fn laplace(&self, s: Complex64) -> Result<Complex64> {
        if !(s.re > -self.min_rate()) {
            return Err(domain("laplace", format!("Re(s) = {} at or beyond the pole −{}", s.re, self.min_rate())));
        }
        Ok(self.laplace_at(s))
    }

    pub(crate) fn laplace_at(&self, s: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let q = Complex64::new(t.rate, 0.0) / (s + t.rate);
                t.weight * pow_shape(q, t.shape)
            })
            .sum()
    }

    /// Laplace transform at a real argument s > −min ξ.
    pub fn laplace_real(&self, s: f64) -> f64 {
        self.terms.iter().map(|t| t.weight * pow_shape_real(t.rate / (t.rate + s), t.shape)).sum()
    }

    /// Scales all weights by 1/mass and drops terms with |ω| < 1e-14.
    pub fn renormalize(&self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(invalid("renormalize", format!("total mass {mass} is not positive")));
        }
        let kept: Vec<GammaTerm> = self
            .terms
            .iter()
            .map(|t| GammaTerm { weight: t.weight / mass, ..*t })
            .filter(|t| t.weight.abs() >= 1e-14)
            .collect();
        let kept_mass: f64 = kept.iter().map(|t| t.weight).sum();
        let kept = kept.into_iter().map(|t| GammaTerm { weight: t.weight / kept_mass, ..t }).collect();
        Self::new(self.kind, kept)
    }

    /// Law of `c·X` for c > 0.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("scaled", format!("factor {c} must be positive")));
        }
        Self::new(self.kind, self.terms.iter().map(|t| GammaTerm { rate: t.rate / c, ..*t }).collect())
    }

    /// Quantile by bisection on the raw CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut hi = self.mean().abs().max(f64::MIN_POSITIVE);
        while self.cdf(hi) < p && hi < 1e300 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Mean squared pdf difference against a tabulated reference.
    pub fn mmse_against(&self, grid: &[f64], reference: &[f64]) -> Result<f64> {
        if grid.len() < 100 || grid.len() != reference.len() {
            return Err(Error::GridTooSmall {
                detail: format!(
                    "{} grid points for {} reference values (need ≥ 100, equal)",
                    grid.len(),
                    reference.len()
                ),
            });
        }
        let sum: f64 = grid.iter().zip(reference).map(|(&x, &r)| (self.pdf_at(x) - r).powi(2)).sum();
        Ok(sum / grid.len() as f64)
    }

    /// Smallest pdf value relative to the peak on a log-spaced 1000-point probe over `[q0.001, q0.999]`.
    pub fn min_relative_pdf(&self) -> f64 {
        let lo = self.quantile(1e-3);
        let hi = self.quantile(0.999);
        let probe = crate::stats::logspace(lo, hi, 1000);
        let vals: Vec<f64> = probe.iter().map(|&x| self.pdf_at(x)).collect();
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        vals.iter().cloned().fold(f64::INFINITY, f64::min) / peak
    }

    /// E[h(X)], term by term with a trapezoid rule in ln x.
    ///
    /// `h` should be bounded and smooth on the scale of each term.
    pub fn expect(&self, mut h: impl FnMut(f64) -> f64) -> f64 {
        self.terms.iter().map(|t| t.weight * gamma_expect(t.shape, |w| h(w / t.rate))).sum()
    }

    /// The law that picks component k with probability `p_k`.
    pub fn mixture_of(parts: &[(f64, MixtureGamma)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(invalid("mixture_of", "no components"));
        }
        let kind = if parts.iter().any(|(_, m)| m.is_signed()) {
            MixtureKind::Signed
        } else {
            MixtureKind::NonnegativeWeights
        };
        let terms = parts
            .iter()
            .flat_map(|(p, m)| m.terms.iter().map(move |t| GammaTerm { weight: p * t.weight, ..*t }))
            .collect();
        Self::new(kind, terms)?.renormalize()
    }

    pub fn to_record(&self) -> Result<MixtureRecord> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let e = t.epsilon();
            if !e.is_finite() {
                return Err(invalid("to_record", format!("ε overflows for term {t:?}")));
            }
            terms.push([e, t.shape, t.rate]);
        }
        Ok(MixtureRecord { kind: self.kind, terms })
    }

    pub fn from_record(rec: &MixtureRecord) -> Result<Self> {
        let triples: Vec<(f64, f64, f64)> = rec.terms.iter().map(|t| (t[0], t[1], t[2])).collect();
        Self::from_epsilons(rec.kind, &triples)
    }
}

const EXPECT_NODES: usize = 400;

/// E[h(W)] for W ~ Gamma(β, 1).
pub(crate) fn gamma_expect(beta: f64, mut h: impl FnMut(f64) -> f64) -> f64 {
    let sd = beta.sqrt();
    let w_hi = beta + 14.0 * sd + 40.0;
    let w_lo = if beta > 400.0 {
        beta - 14.0 * sd
    } else {
        // below this point the density integrates to less than ~1e-18
        ((-41.4 + ln_gamma(beta + 1.0)) / beta).exp().min(0.5 * beta)
    };
    let (a, b) = (w_lo.ln(), w_hi.ln());
    let step = (b - a) / (EXPECT_NODES - 1) as f64;
    let lg = ln_gamma(beta);
    let mut sum = 0.0;
    for k in 0..EXPECT_NODES {
        let t = a + step * k as f64;
        let w = t.exp();
        let f = (beta * t - w - lg).exp() * h(w);
        sum += if k == 0 || k == EXPECT_NODES - 1 { 0.5 * f } else { f };
    }
    sum * step
}

fn pow_shape(q: Complex64, beta: f64) -> Complex64 {
    if beta.fract() == 0.0 && beta <= 64.0 {
        q.powi(beta as i32)
    } else {
        (q.ln() * beta).exp()
    }
}

fn pow_shape_real(q: f64, beta: f64) -> f64 {
    if beta.fract() == 0.0 && beta <= 64.0 {
        q.powi(beta as i32)
    } else {
        q.powf(beta)
    }
}

pub type PdfFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Small-scale fading power law of one link.
#[derive(Clone)]
pub enum FadingSpec {
    Nakagami { m: f64, omega: f64 },
    Rayleigh { omega: f64 },
    Generic { pdf: PdfFn },
}

impl fmt::Debug for FadingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingSpec::Nakagami { m, omega } => write!(f, "Nakagami {{ m: {m}, omega: {omega} }}"),
            FadingSpec::Rayleigh { omega } => write!(f, "Rayleigh {{ omega: {omega} }}"),
            FadingSpec::Generic { .. } => write!(f, "Generic {{ .. }}"),
        }
    }
}

impl FadingSpec {
    pub fn nakagami(m: f64, omega: f64) -> Self {
        FadingSpec::Nakagami { m, omega }
    }

    pub fn generic(pdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        FadingSpec::Generic { pdf: Arc::new(pdf) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingSpec::Nakagami { m, omega } if !(m >= 0.5) || !(omega > 0.0) => {
                Err(invalid("FadingSpec", format!("nakagami needs m ≥ 0.5 and omega > 0, got m={m} omega={omega}")))
            }
            FadingSpec::Rayleigh { omega } if !(omega > 0.0) => Err(invalid("FadingSpec", "omega must be positive")),
            _ => Ok(()),
        }
    }

    /// Density of the fading power.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            FadingSpec::Nakagami { m, omega } => gamma_pdf(x, *m, m / omega),
            FadingSpec::Rayleigh { omega } => gamma_pdf(x, 1.0, 1.0 / omega),
            FadingSpec::Generic { pdf } => pdf(x),
        }
    }
}

pub fn gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match shape {
            s if s < 1.0 => f64::INFINITY,
            s if s == 1.0 => rate,
            _ => 0.0,
        };
    }
    (shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x).exp()
}

/// Unit-mean κ-μ power density, as a Poisson(μκ) mixture of Gamma(μ+j, μ(1+κ)).
pub fn kappa_mu_pdf(kappa: f64, mu: f64, x: f64) -> f64 {
    let rate = mu * (1.0 + kappa);
    let lam = mu * kappa;
    let mut total = 0.0;
    let mut cum = 0.0;
    for j in 0..2000 {
        let jf = j as f64;
        let pj = if lam > 0.0 {
            (-lam + jf * lam.ln() - ln_gamma(jf + 1.0)).exp()
        } else if j == 0 {
            1.0
        } else {
            0.0
        };
        total += pj * gamma_pdf(x, mu + jf, rate);
        cum += pj;
        if 1.0 - cum < 1e-17 && jf > lam {
            break;
        }
    }
    total
}

/// Probe of a target density: total mass, and a quantile table.
struct TargetProbe {
    mass: f64,
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TargetProbe {
    fn new(pdf: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<Self> {
        let f = |t: f64| {
            let x = t / (1.0 - t);
            let v = pdf(x) / ((1.0 - t) * (1.0 - t));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let mass = quadrature::double_exponential::integrate(f, 0.0, 1.0, 1e-12).integral;
        let mean = quadrature::double_exponential::integrate(
            |t: f64| {
                let x = t / (1.0 - t);
                let v = x * pdf(x) / ((1.0 - t) * (1.0 - t));
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            1e-12,
        )
        .integral;
        if !(mass.is_finite() && mean.is_finite() && mean > 0.0) {
            return Err(invalid("from_pdf", "target pdf has no finite positive mean"));
        }
        let n = 40_000;
        let xs = linspace(0.0, 80.0 * mean / mass.max(1e-300), n);
        let mut cdf = vec![0.0; n];
        let mut prev = finite_or_zero(pdf(xs[1] * 1e-6));
        for i in 1..n {
            let cur = finite_or_zero(pdf(xs[i]));
            let mid = finite_or_zero(pdf(0.5 * (xs[i - 1] + xs[i])));
            cdf[i] = cdf[i - 1] + (xs[i] - xs[i - 1]) * (prev + 4.0 * mid + cur) / 6.0;
            prev = cur;
        }
        Ok(TargetProbe { mass, xs, cdf })
    }

    fn quantile(&self, p: f64) -> f64 {
        let total = *self.cdf.last().unwrap();
        let k = self.cdf.partition_point(|&c| c < p * total).min(self.xs.len() - 1);
        self.xs[k]
    }
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Uniform 1000-point reference grid over the target's `[q0.001, q0.999]`.
pub fn reference_grid(pdf: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<Vec<f64>> {
    let probe = TargetProbe::new(pdf)?;
    Ok(linspace(probe.quantile(1e-3), probe.quantile(0.999), 1000))
}

fn check_target(spec: &FadingSpec) -> Result<TargetProbe> {
    spec.validate()?;
    let pdf = |x: f64| spec.pdf(x);
    let probe = TargetProbe::new(&pdf)?;
    if (probe.mass - 1.0).abs() > 1e-3 {
        return Err(invalid("from_pdf", format!("target integrates to {} (not 1 within 1e-3)", probe.mass)));
    }
    Ok(probe)
}

/// Mixture from samples of the target density on the lattice `(i−1)/u`.
///
/// Term i has shape i, rate u and weight `f((i−1)/u)/u`; trailing terms whose
/// cumulative weight is below 1e-8 are dropped, then the mixture is renormalized.
pub fn from_pdf(target: &FadingSpec, u: f64, max_terms: usize) -> Result<MixtureGamma> {
    if !(u > 0.0) || max_terms == 0 {
        return Err(invalid("from_pdf", format!("u = {u} and max_terms = {max_terms} must be positive")));
    }
    check_target(target)?;
    let mut terms: Vec<GammaTerm> = (1..=max_terms)
        .map(|i| {
            let w = target.pdf((i - 1) as f64 / u) / u;
            GammaTerm::new(w, i as f64, u)
        })
        .collect();
    if terms.iter().any(|t| !t.weight.is_finite() || t.weight < 0.0) {
        return Err(invalid("from_pdf", "target pdf is not finite and nonnegative on the lattice"));
    }
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    let mut tail = 0.0;
    while terms.len() > 1 {
        let w = terms.last().unwrap().weight;
        if tail + w >= 1e-8 * total {
            break;
        }
        tail += w;
        terms.pop();
    }
    terms.retain(|t| t.weight > 0.0);
    MixtureGamma::new(MixtureKind::NonnegativeWeights, terms)?.renormalize()
}

/// Least-squares projection of a target density onto `{Gamma(i, u) : i = 1..max_terms}`
/// with nonnegative weights, scanning the common rate `u`.
pub fn project_pdf(target: &FadingSpec, max_terms: usize) -> Result<MixtureGamma> {
    if max_terms == 0 {
        return Err(invalid("project_pdf", "max_terms must be positive"));
    }
    let probe = check_target(target)?;
    let hi = probe.quantile(0.9999);
    let grid = linspace(0.0, hi, 2001).into_iter().skip(1).collect::<Vec<_>>();
    let y: Vec<f64> = grid.iter().map(|&x| target.pdf(x)).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("project_pdf", "target pdf is not finite on the fit grid"));
    }
    project_on_grid(&grid, &y, probe.cdf_at(hi), max_terms, 41, 30)
}

/// [`project_pdf`] for a density tabulated on a uniform grid over `(0, hi]`.
///
/// The mass below `hi` is estimated from the table by the trapezoid rule.
pub fn project_tabulated(grid: &[f64], values: &[f64], max_terms: usize) -> Result<MixtureGamma> {
    if grid.len() < 100 || grid.len() != values.len() {
        return Err(Error::GridTooSmall { detail: format!("{} grid points for {} values", grid.len(), values.len()) });
    }
    if max_terms == 0 || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("project_tabulated", "values must be finite and nonnegative, max_terms positive"));
    }
    let mut mass = 0.5 * grid[0] * values[0];
    for k in 1..grid.len() {
        mass += 0.5 * (grid[k] - grid[k - 1]) * (values[k] + values[k - 1]);
    }
    project_on_grid(grid, values, mass, max_terms, 17, 20)
}

fn project_on_grid(
    grid: &[f64],
    y: &[f64],
    mass_below_hi: f64,
    max_terms: usize,
    scan_points: usize,
    refine_iters: usize,
) -> Result<MixtureGamma> {
    let hi = *grid.last().unwrap();
    let n = max_terms as f64;
    let peak = y.iter().cloned().fold(0.0, f64::max);
    let fit = |ln_u: f64| -> Option<(f64, Vec<f64>)> {
        let u = ln_u.exp();
        let rows = grid.len() + 1;
        let mut a = DMatrix::<f64>::zeros(rows, max_terms);
        for (r, &x) in grid.iter().enumerate() {
            for i in 0..max_terms {
                a[(r, i)] = gamma_pdf(x, (i + 1) as f64, u);
            }
        }
        // soft unit-mass constraint, scaled to the pdf magnitude
        let mass_row = rows - 1;
        let w_mass = peak * (grid.len() as f64).sqrt();
        for i in 0..max_terms {
            a[(mass_row, i)] = w_mass * gamma_p((i + 1) as f64, u * hi).unwrap_or(1.0);
        }
        let mut b = DVector::from_iterator(rows, y.iter().cloned().chain(std::iter::once(0.0)));
        b[mass_row] = w_mass * mass_below_hi;
        let w = nnls(&a, &b)?;
        let resid = (&a * &w - &b).rows(0, grid.len()).norm_squared() / grid.len() as f64;
        Some((resid, w.iter().cloned().collect()))
    };
    let lo = (0.25 * n / hi).ln();
    let up = (4.0 * n / hi).ln();
    let scan = linspace(lo, up, scan_points);
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for &lu in &scan {
        if let Some((r, w)) = fit(lu) {
            if best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, lu, w));
            }
        }
    }
    let (mut best_r, mut best_lu, mut best_w) =
        best.ok_or_else(|| Error::NonConvergence { op: "project_pdf", detail: "no feasible fit".into() })?;
    // golden-section refinement around the scan optimum
    let step = scan[1] - scan[0];
    let (mut a, mut b) = (best_lu - step, best_lu + step);
    let gr = 0.618_033_988_749_895;
    for _ in 0..refine_iters {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        let fc = fit(c);
        let fd = fit(d);
        let rc = fc.as_ref().map_or(f64::INFINITY, |v| v.0);
        let rd = fd.as_ref().map_or(f64::INFINITY, |v| v.0);
        if rc < rd {
            b = d;
            if rc < best_r {
                best_r = rc;
                best_lu = c;
                best_w = fc.unwrap().1;
            }
        } else {
            a = c;
            if rd < best_r {
                best_r = rd;
                best_lu = d;
                best_w = fd.unwrap().1;
            }
        }
    }
    let u = best_lu.exp();
    let terms: Vec<GammaTerm> = best_w
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| GammaTerm::new(w, (i + 1) as f64, u))
        .collect();
    MixtureGamma::new(MixtureKind::NonnegativeWeights, terms)?.renormalize()
}

impl TargetProbe {
    fn cdf_at(&self, x: f64) -> f64 {
        let total = *self.cdf.last().unwrap();
        let k = self.xs.partition_point(|&v| v < x).min(self.xs.len() - 1);
        self.cdf[k] / total * self.mass
    }
}

/// Lawson-Hanson nonnegative least squares.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm() * b.norm().max(1e-300);
    let solve = |passive: &[bool]| -> Option<DVector<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&idx);
        let svd = sub.svd(true, true);
        let z = svd.solve(b, 1e-14).ok()?;
        let mut full = DVector::zeros(n);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = z[k];
        }
        Some(full)
    };
    for _outer in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else {
            return Some(x);
        };
        passive[j] = true;
        for _inner in 0..(3 * n + 10) {
            let z = solve(&passive)?;
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            x = &x + (&z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= 1e-300 {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    Some(x)
}

/// Default mixture representation of a fading law.
///
/// Nakagami and Rayleigh laws are single Gamma terms. Generic densities are
/// projected onto 20 integer-shape terms sharing one rate.
pub fn fit_fading(spec: &FadingSpec) -> Result<MixtureGamma> {
    spec.validate()?;
    match *spec {
        FadingSpec::Nakagami { m, omega } => MixtureGamma::gamma(m, m / omega),
        FadingSpec::Rayleigh { omega } => MixtureGamma::gamma(1.0, 1.0 / omega),
        FadingSpec::Generic { .. } => project_pdf(spec, 20),
    }
}

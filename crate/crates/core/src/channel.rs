//! Products, cascades and quadratic forms of mixture-Gamma laws, and the
//! direct / cascaded / combined link-gain constructors.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixgamma::{GammaTerm, MixtureGamma, MixtureKind};
use crate::specfun::{bessel_k, generalized_binomial, ln_gamma, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub d_bu: f64,
    pub d_iu: f64,
    pub d_bi: f64,
    pub alpha_bu: f64,
    pub alpha_bi: f64,
    pub alpha_iu: f64,
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        let ds = [self.d_bu, self.d_iu, self.d_bi];
        let alphas = [self.alpha_bu, self.alpha_bi, self.alpha_iu];
        if ds.iter().any(|d| !(*d > 0.0)) || alphas.iter().any(|a| !(*a >= 2.0)) {
            return Err(invalid("LinkGeometry", format!("{self:?}: distances must be > 0 and exponents ≥ 2")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrsSpec {
    pub n_elements: u32,
    pub eps_ref: f64,
}

impl IrsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 || !(self.eps_ref > 0.0) {
            return Err(invalid("IrsSpec", format!("{self:?}: need N ≥ 1 and eps_ref > 0")));
        }
        Ok(())
    }
}

fn require_nonnegative(op: &'static str, m: &MixtureGamma) -> Result<()> {
    if m.is_signed() {
        return Err(Error::SignedMixture { op });
    }
    Ok(())
}

fn product_terms(x: &MixtureGamma, y: &MixtureGamma, rule: &QuadratureRule) -> Vec<GammaTerm> {
    let mut out = Vec::with_capacity(x.len() * y.len() * rule.order);
    for a in x.terms() {
        for b in y.terms() {
            let lg = ln_gamma(b.shape);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let weight = a.weight * b.weight * w * ((b.shape - 1.0) * t.ln() - lg).exp();
                out.push(GammaTerm::new(weight, a.shape, a.rate * b.rate / t));
            }
        }
    }
    out
}

/// Law of the product of two independent mixture-Gamma variables.
///
/// Conditioning on the second factor and integrating it out with Gauss-Laguerre
/// gives one Gamma term per (term of x, term of y, node), with x's shape and rate
/// `ξ_x ξ_y / t_i`.
pub fn product_pair(x: &MixtureGamma, y: &MixtureGamma, rule: &QuadratureRule) -> Result<MixtureGamma> {
    require_nonnegative("product_pair", x)?;
    require_nonnegative("product_pair", y)?;
    MixtureGamma::new(MixtureKind::NonnegativeWeights, product_terms(x, y, rule))?.renormalize()
}

pub const DEFAULT_TERM_CAP: usize = 100_000;

/// Left fold of [`product_pair`] over K links, pruning |ω| < `prune` after each step.
pub fn cascade_k(links: &[MixtureGamma], rule: &QuadratureRule, prune: f64, cap: usize) -> Result<MixtureGamma> {
    if links.len() < 2 {
        return Err(invalid("cascade_k", "need at least two links"));
    }
    for l in links {
        require_nonnegative("cascade_k", l)?;
    }
    let mut acc = links[0].clone();
    for link in &links[1..] {
        let terms: Vec<GammaTerm> = product_terms(&acc, link, rule);
        let mass: f64 = terms.iter().map(|t| t.weight).sum();
        let kept: Vec<GammaTerm> = terms.into_iter().filter(|t| t.weight.abs() / mass >= prune).collect();
        if kept.len() > cap {
            return Err(Error::TermExplosion { count: kept.len(), cap });
        }
        acc = MixtureGamma::new(MixtureKind::NonnegativeWeights, kept)?.renormalize()?;
    }
    Ok(acc)
}

pub const DEFAULT_K3_MAX: usize = 40;
const K3_TAIL_TOL: f64 = 1e-8;

fn integer_shape(op: &'static str, beta: f64) -> Result<u32> {
    let r = beta.round();
    if (beta - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::NonIntegerShape { op, beta });
    }
    Ok(r as u32)
}

/// Coefficients of one (X-term, Y-term) pair, keyed by (rate, shape).
fn quadratic_pair(
    xi_term: &GammaTerm,
    yj_term: &GammaTerm,
    bi: u32,
    bj: u32,
    k3_max: usize,
    tail_abs: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    let (xi, xj) = (xi_term.rate, yj_term.rate);
    let c = xi + xj;
    let (lxi, lxj, lc) = (xi.ln(), xj.ln(), c.ln());
    let log_eps = |t: &GammaTerm| t.weight.abs().ln() + t.shape * t.rate.ln() - ln_gamma(t.shape);
    let le0 = log_eps(xi_term) + log_eps(yj_term);
    let sign0 = xi_term.weight.signum() * yj_term.weight.signum();
    let (bif, bjf) = (bi as f64, bj as f64);

    // k3-independent part of ln|χ| with its sign, for every (k1, k2)
    let mut base = Vec::new();
    for k1 in 0..(2 * bj) {
        let c1 = generalized_binomial((2 * bj - 1) as f64, k1);
        for k2 in 0..(2 * bi + k1) {
            let c2 = generalized_binomial((2 * bi - 1 + k1) as f64, k2);
            let s = (k2 as f64 + 1.0) / 2.0;
            let l = le0 + c1.ln() + c2.ln() + (2.0 * bif + k1 as f64 - k2 as f64 - 1.0) * lxj + ln_gamma(s)
                - (2.0 * bif + k1 as f64) * lc;
            let sg = sign0 * if k1 % 2 == 0 { 1.0 } else { -1.0 };
            let sg_j = sg * if k2 % 2 == 0 { 1.0 } else { -1.0 };
            base.push((l, s, k2 as f64, sg_j, sg));
        }
    }

    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut small_run = 0;
    let mut prev_mag = f64::INFINITY;
    for k3 in 0..=k3_max {
        let kf = k3 as f64;
        let shape = bif + bjf + kf;
        let lgb = ln_gamma(shape);
        let (mut wj, mut wi) = (0.0, 0.0);
        for &(l, s, k2, sg_j, sg_i) in &base {
            let lchi = l - kf * lc - ln_gamma(s + kf + 1.0);
            // ω = ε Γ(B) / rate^B with ε = χ rate^{k2+2k3+1}
            wj += sg_j * (lchi + (k2 + 2.0 * kf + 1.0) * lxj + lgb - shape * lxj).exp();
            wi += sg_i * (lchi + (k2 + 2.0 * kf + 1.0) * lxi + lgb - shape * lxi).exp();
        }
        out.push((wj, shape, xj));
        out.push((wi, shape, xi));
        acc += wj + wi;
        let mag = wj.abs() + wi.abs();
        if mag <= tail_abs.max(K3_TAIL_TOL * acc.abs()) && mag <= prev_mag {
            small_run += 1;
            if small_run >= 3 {
                return Ok(out);
            }
        } else {
            small_run = 0;
        }
        prev_mag = mag;
        if k3 == k3_max {
            return Err(Error::TruncationTail { k3_max, tail: mag, mass: acc });
        }
    }
    unreachable!()
}

/// Law of S = (X + Y)² from the laws of X² and Y² (integer shapes only).
///
/// The result is a signed mixture: each (X-term, Y-term) pair contributes
/// Gamma terms at the two input rates with shapes `β_i + β_j + k3`. The k3
/// series is summed until three consecutive terms fall below 1e-8 of the
/// accumulated mass, up to `k3_max`. Terms sharing a (shape, rate) are merged.
pub fn quadratic_form(x2: &MixtureGamma, y2: &MixtureGamma, k3_max: usize) -> Result<MixtureGamma> {
    require_nonnegative("quadratic_form", x2)?;
    require_nonnegative("quadratic_form", y2)?;
    let xs: Vec<(GammaTerm, u32)> =
        x2.terms().iter().map(|t| integer_shape("quadratic_form", t.shape).map(|b| (*t, b))).collect::<Result<_>>()?;
    let ys: Vec<(GammaTerm, u32)> =
        y2.terms().iter().map(|t| integer_shape("quadratic_form", t.shape).map(|b| (*t, b))).collect::<Result<_>>()?;
    let tail_abs = K3_TAIL_TOL * x2.mass() * y2.mass();
    let pairs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).collect();
    let blocks: Vec<Vec<(f64, f64, f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| quadratic_pair(&xs[i].0, &ys[j].0, xs[i].1, ys[j].1, k3_max, tail_abs))
        .collect::<Result<_>>()?;
    let mut merged: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for block in &blocks {
        for &(w, shape, rate) in block {
            *merged.entry((rate.to_bits(), shape.to_bits())).or_insert(0.0) += w;
        }
    }
    let terms: Vec<GammaTerm> = merged
        .into_iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|((r, b), w)| GammaTerm::new(w, f64::from_bits(b), f64::from_bits(r)))
        .collect();
    MixtureGamma::new(MixtureKind::Signed, terms)?.renormalize()
}

/// Direct-link power gain ε_ref d^{−α} |g|² with Nakagami-m fading: Gamma(m, m d^α / ε_ref).
pub fn direct_gain(geom: &LinkGeometry, m_bu: f64, irs: &IrsSpec) -> Result<MixtureGamma> {
    geom.validate()?;
    irs.validate()?;
    if !(m_bu >= 0.5) {
        return Err(invalid("direct_gain", format!("Nakagami shape {m_bu} < 0.5")));
    }
    MixtureGamma::gamma(m_bu, m_bu * geom.d_bu.powf(geom.alpha_bu) / irs.eps_ref)
}

/// Path-loss product W = d_BI^α d_IU^α / ε_ref².
pub fn cascade_path_loss(geom: &LinkGeometry, irs: &IrsSpec) -> f64 {
    geom.d_bi.powf(geom.alpha_bi) * geom.d_iu.powf(geom.alpha_iu) / (irs.eps_ref * irs.eps_ref)
}

/// Cascaded (BS → IRS → UE) power gain with N coherently combined elements.
///
/// Term i has shape m_BI and rate `m_BI m_IU W / (t_i N²)`, with weight
/// `ϖ_i t_i^{m_IU−1} / Γ(m_IU)`. The mean is N²/W.
pub fn cascaded_gain(
    geom: &LinkGeometry,
    m_bi: f64,
    m_iu: f64,
    irs: &IrsSpec,
    rule: &QuadratureRule,
) -> Result<MixtureGamma> {
    geom.validate()?;
    irs.validate()?;
    if !(m_bi >= 0.5 && m_iu >= 0.5) {
        return Err(invalid("cascaded_gain", format!("Nakagami shapes m_bi={m_bi}, m_iu={m_iu} must be ≥ 0.5")));
    }
    cascaded_gain_w(cascade_path_loss(geom, irs), m_bi, m_iu, irs.n_elements, rule)
}

/// Unit-path-loss power of N reflections with common amplitudes and independent
/// uniform phases, Y·|Σ e^{jφ_n}|² with Y = |g|²|h|², taking the phase sum as
/// Exp(N). Conditioned on Y the power is exponential, so the law is a mixture of
/// exponentials over the exact double-Nakagami density of Y, discretized by the
/// trapezoid rule in ln Y.
pub fn random_phase_gain(m_bi: f64, m_iu: f64, n: u32) -> Result<MixtureGamma> {
    if n == 0 || !(m_bi >= 0.5 && m_iu >= 0.5) {
        return Err(invalid("random_phase_gain", format!("N={n}, m_bi={m_bi}, m_iu={m_iu}")));
    }
    let mm = m_bi * m_iu;
    let ln_c = std::f64::consts::LN_2 + 0.5 * (m_bi + m_iu) * mm.ln() - ln_gamma(m_bi) - ln_gamma(m_iu);
    // y·f_Y(y)
    let weight = |y: f64| -> Result<f64> {
        let k = bessel_k((m_bi - m_iu).abs(), 2.0 * (mm * y).sqrt())?;
        Ok((ln_c + 0.5 * (m_bi + m_iu) * y.ln()).exp() * k)
    };
    const H: f64 = 0.5;
    let mut hi = 1.0;
    while weight(hi)? > 1e-16 {
        hi *= 2.0;
    }
    let lo = 1e-9f64;
    let steps = ((hi / lo).ln() / H).ceil() as usize;
    let mut terms = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let y = lo * (H * k as f64).exp();
        let w = weight(y)? * H;
        if w > 0.0 {
            terms.push(GammaTerm::new(w, 1.0, 1.0 / (n as f64 * y)));
        }
    }
    MixtureGamma::new(MixtureKind::NonnegativeWeights, terms)?.renormalize()
}

/// [`cascaded_gain`] parametrized directly by the path-loss product W.
pub fn cascaded_gain_w(w: f64, m_bi: f64, m_iu: f64, n: u32, rule: &QuadratureRule) -> Result<MixtureGamma> {
    let n2 = (n as f64) * (n as f64);
    let lg = ln_gamma(m_iu);
    let terms = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &wt)| GammaTerm::new(wt * ((m_iu - 1.0) * t.ln() - lg).exp(), m_bi, m_bi * m_iu * w / (t * n2)))
        .collect();
    MixtureGamma::new(MixtureKind::NonnegativeWeights, terms)?.renormalize()
}

/// Combined direct-plus-cascaded power gain |h_BU + h_BIU|².
///
/// Applies [`quadratic_form`] with the cascaded law as X² and the direct law as Y²,
/// so that k1 ≤ 2m_BU − 1 and k2 ≤ 2m_BI + k1 − 1.
pub fn mixture_gain(direct: &MixtureGamma, cascaded: &MixtureGamma, k3_max: usize) -> Result<MixtureGamma> {
    quadratic_form(cascaded, direct, k3_max)
}

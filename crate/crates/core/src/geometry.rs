//! Network configuration, nearest-neighbour distance laws, association modes
//! and the BS-IRS distance law given the BS-UE and IRS-UE distances.

use std::f64::consts::PI;
use std::fmt;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{IrsSpec, LinkGeometry};
use crate::error::{invalid, Result};

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// A power in watts that deserializes from a number (watts) or a string with a unit
/// suffix such as `"-147 dBm"`, `"1 W"` or `"30 dBm"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power(pub f64);

impl Power {
    pub fn parse(s: &str) -> Result<Power> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let (num, unit) = if let Some(n) = lower.strip_suffix("dbm") {
            (n, "dbm")
        } else if let Some(n) = lower.strip_suffix("mw") {
            (n, "mw")
        } else if let Some(n) = lower.strip_suffix('w') {
            (n, "w")
        } else {
            (lower.as_str(), "w")
        };
        let v: f64 = num
            .trim()
            .replace('\u{2212}', "-")
            .parse()
            .map_err(|_| invalid("Power::parse", format!("cannot parse power '{s}'")))?;
        Ok(Power(match unit {
            "dbm" => dbm_to_watts(v),
            "mw" => v * 1e-3,
            _ => v,
        }))
    }
}

impl Serialize for Power {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Power {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Power;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a power in watts or a string like \"-147 dBm\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Power, E> {
                Ok(Power(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Power, E> {
                Ok(Power(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Power, E> {
                Ok(Power(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Power, E> {
                Power::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Nakagami-m shapes of the three link types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFading {
    pub m_bu: f64,
    pub m_bi: f64,
    pub m_iu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub alpha_bu: f64,
    pub alpha_bi: f64,
    pub alpha_iu: f64,
}

/// How IRSs that are not serving the UE are placed in the interference model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatterField {
    /// One scatterer whose distance follows the nearest-IRS law on (0, D2],
    /// averaged inside the exponent.
    #[default]
    NearestLaw,
    /// Every IRS of the PPP within D2 scatters; the nearest one sits at the
    /// conditioning distance when given.
    Poisson,
}

/// Phase profile of an IRS towards a UE it does not serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatterPhase {
    /// Reflections add in amplitude as for the serving IRS (mean N²).
    #[default]
    Coherent,
    /// Reflections carry independent uniform phases (mean N).
    Random,
}

/// Interference model for scattering IRSs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scattering {
    pub field: ScatterField,
    pub phase: ScatterPhase,
    /// Element count used for the scattered-link law; `None` uses the IRS size.
    pub elements: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// BS density per m².
    pub lambda_b: f64,
    /// IRS density per m².
    pub lambda_i: f64,
    /// UE density per m²; not used by the analysis.
    pub lambda_u: f64,
    /// Serving radius (m).
    pub d1: f64,
    /// Interference radius (m).
    pub d2: f64,
    pub irs: IrsSpec,
    pub fading: LinkFading,
    pub path_loss: PathLoss,
    pub noise_power: Power,
    pub tx_power: Power,
    #[serde(default)]
    pub scattering: Scattering,
}

impl Default for NetworkConfig {
    /// Evaluation setup with the IRS size reduced from 500 to 100 elements.
    fn default() -> Self {
        NetworkConfig {
            lambda_b: 1e-5,
            lambda_i: 1e-4,
            lambda_u: 1e-4,
            d1: 25.0,
            d2: 50.0,
            irs: IrsSpec { n_elements: 100, eps_ref: 1e-3 },
            fading: LinkFading { m_bu: 2.0, m_bi: 2.0, m_iu: 2.0 },
            path_loss: PathLoss { alpha_bu: 3.0, alpha_bi: 3.0, alpha_iu: 3.0 },
            noise_power: Power(dbm_to_watts(-147.0)),
            tx_power: Power(1.0),
            scattering: Scattering::default(),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let op = "NetworkConfig";
        if !(self.lambda_b > 0.0 && self.lambda_i > 0.0 && self.lambda_u >= 0.0) {
            return Err(invalid(op, "densities must be positive"));
        }
        if !(0.0 < self.d1 && self.d1 < self.d2) {
            return Err(invalid(op, format!("need 0 < d1 < d2, got d1={} d2={}", self.d1, self.d2)));
        }
        if !(self.noise_power.0 > 0.0 && self.tx_power.0 > 0.0) {
            return Err(invalid(op, "noise and transmit power must be positive"));
        }
        let f = self.fading;
        if !(f.m_bu >= 0.5 && f.m_bi >= 0.5 && f.m_iu >= 0.5) {
            return Err(invalid(op, "Nakagami shapes must be ≥ 0.5"));
        }
        let p = self.path_loss;
        if !(p.alpha_bu >= 2.0 && p.alpha_bi >= 2.0 && p.alpha_iu >= 2.0) {
            return Err(invalid(op, "path-loss exponents must be ≥ 2"));
        }
        if self.scattering.elements == Some(0) {
            return Err(invalid(op, "scattering element count must be positive"));
        }
        self.irs.validate()
    }

    /// Element count of the scattered-link law.
    pub fn scatter_elements(&self) -> u32 {
        self.scattering.elements.unwrap_or(self.irs.n_elements)
    }

    pub fn link_geometry(&self, d_bu: f64, d_iu: f64, d_bi: f64) -> LinkGeometry {
        LinkGeometry {
            d_bu,
            d_iu,
            d_bi,
            alpha_bu: self.path_loss.alpha_bu,
            alpha_bi: self.path_loss.alpha_bi,
            alpha_iu: self.path_loss.alpha_iu,
        }
    }

    /// Probabilities of Mode1, Mode2 and Mode3 for the typical UE.
    pub fn mode_probabilities(&self) -> [f64; 3] {
        let v1 = (-self.lambda_i * PI * self.d1 * self.d1).exp();
        let v2 = (-self.lambda_i * PI * self.d2 * self.d2).exp();
        [1.0 - v1, v1 - v2, v2]
    }
}

/// Density of the distance to the nearest point of a PPP of the given intensity.
pub fn nearest_distance_pdf(density: f64, d: f64) -> f64 {
    if d < 0.0 {
        return 0.0;
    }
    2.0 * PI * density * d * (-density * PI * d * d).exp()
}

pub fn nearest_distance_cdf(density: f64, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    1.0 - (-density * PI * d * d).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Mode1,
    Mode2,
    Mode3,
}

impl Mode {
    pub fn index(self) -> u8 {
        match self {
            Mode::Mode1 => 1,
            Mode::Mode2 => 2,
            Mode::Mode3 => 3,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode{}", self.index())
    }
}

/// Operation mode from the distance to the nearest IRS.
pub fn association_mode(d_nearest_irs: f64, cfg: &NetworkConfig) -> Mode {
    if d_nearest_irs < cfg.d1 {
        Mode::Mode1
    } else if d_nearest_irs < cfg.d2 {
        Mode::Mode2
    } else {
        Mode::Mode3
    }
}

/// Law of the BS-IRS distance l when the BS is at distance d and the IRS at
/// distance r from the UE, with independent uniform bearings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalDistance {
    pub d: f64,
    pub r: f64,
}

pub fn conditional_link_distance(d: f64, r: f64) -> Result<ConditionalDistance> {
    if !(d > 0.0 && r > 0.0) {
        return Err(invalid("conditional_link_distance", format!("d={d} and r={r} must be positive")));
    }
    Ok(ConditionalDistance { d, r })
}

impl ConditionalDistance {
    pub fn support(&self) -> (f64, f64) {
        ((self.d - self.r).abs(), self.d + self.r)
    }

    fn arg(&self, l: f64) -> f64 {
        (l * l - self.r * self.r - self.d * self.d) / (2.0 * self.d * self.r)
    }

    pub fn cdf(&self, l: f64) -> f64 {
        let (lo, hi) = self.support();
        if l <= lo {
            0.0
        } else if l >= hi {
            1.0
        } else {
            (self.arg(l).clamp(-1.0, 1.0).asin() / PI + 0.5).clamp(0.0, 1.0)
        }
    }

    pub fn pdf(&self, l: f64) -> f64 {
        let (lo, hi) = self.support();
        if l <= lo || l >= hi {
            return 0.0;
        }
        // 4d²r²(1 − a²) = (hi² − l²)(l² − lo²), factored to avoid cancellation at the edges
        let q = (hi - l) * (hi + l) * (l - lo) * (l + lo);
        2.0 * l / (PI * q.sqrt())
    }

    /// E[l²] = d² + r².
    pub fn mean_l2(&self) -> f64 {
        self.d * self.d + self.r * self.r
    }

    /// E[h(l)] by Gauss-Legendre over the relative bearing θ ∈ (0, π).
    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        bearing_rule().integrate(0.0, PI, |th| {
            let l2 = self.d * self.d + self.r * self.r + 2.0 * self.d * self.r * th.cos();
            h(l2.max(0.0).sqrt())
        }) / PI
    }

    pub fn mean_l(&self) -> f64 {
        self.expect(|l| l)
    }
}

/// E[l^{−α}] for the BS-IRS distance l given d and r.
///
/// Uses ∫₀^π (a + b cos θ)^{−ν} dθ = π (a² − b²)^{−ν/2} P_{ν−1}(x), x = a/√(a² − b²),
/// with Laplace's integral for the Legendre function, whose integrand is bounded.
pub fn mean_path_gain(d: f64, r: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let a = d * d + r * r;
    let disc = (d - r).abs() * (d + r);
    if disc == 0.0 {
        return f64::INFINITY;
    }
    let x = a / disc;
    let sq = ((x - 1.0) * (x + 1.0)).sqrt();
    let mu = alpha / 2.0 - 1.0;
    let gl = legendre_rule();
    let integral = gl.integrate(0.0, PI, |phi| {
        // (x − √(x²−1)) + √(x²−1)(1 + cos φ), cancellation-free
        let base = 1.0 / (x + sq) + sq * (1.0 + phi.cos());
        base.powf(mu)
    }) / PI;
    disc.powf(-alpha / 2.0) * integral
}

fn bearing_rule() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(96).expect("96-point Gauss-Legendre rule"))
}

fn legendre_rule() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64).expect("64-point Gauss-Legendre rule"))
}

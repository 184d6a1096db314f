//! Brute-force Monte-Carlo oracle.
//!
//! Each realization draws BS and IRS positions from their PPPs, Nakagami-m
//! amplitudes for every link and composes the received signal and the
//! aggregate interference at a UE at the origin. Realization `k` of a run
//! with seed `s` uses its own ChaCha8 stream `(s, k)`, so results do not
//! depend on the number of worker threads.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{IrsSpec, LinkGeometry};
use crate::error::{invalid, Error, Result};
use crate::geometry::{association_mode, Mode, NetworkConfig, ScatterPhase};
use crate::interference::default_outer_radius;
use crate::stats::{histogram_fd, mean_and_se, Ecdf, Histogram};

/// Fading of the individual IRS elements within one cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementFading {
    /// All elements of an IRS share one BS-IRS and one IRS-UE amplitude.
    #[default]
    Common,
    /// Every element draws its own pair of amplitudes.
    Independent,
}

/// Fixed serving-link distances for conditional simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// Serving BS distance; other BSs form a PPP beyond it.
    pub d_bu0: f64,
    /// Nearest IRS distance; other IRSs form a PPP beyond it. `None` keeps the IRS PPP unconditioned.
    pub d_iu0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Radius of the simulated BS disc (m).
    pub window: f64,
    pub element_fading: ElementFading,
    pub condition: Option<Conditioning>,
    /// Whether the serving IRS also scatters the signals of interfering BSs.
    pub serving_irs_scatters: bool,
}

impl SimOptions {
    pub fn for_config(cfg: &NetworkConfig) -> Self {
        SimOptions {
            window: default_outer_radius(cfg.lambda_b),
            element_fading: ElementFading::Common,
            condition: None,
            serving_irs_scatters: true,
        }
    }
}

/// One simulated network realization seen by the UE at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub realization: u64,
    pub mode: Mode,
    /// Received signal power (W).
    pub signal_w: f64,
    /// Interference through direct BS-UE links (W).
    pub direct_interference_w: f64,
    /// Interference scattered by IRSs (W).
    pub cascaded_interference_w: f64,
    pub sinr: f64,
}

impl Record {
    pub fn interference_w(&self) -> f64 {
        self.direct_interference_w + self.cascaded_interference_w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub seed: u64,
    pub realizations: u64,
    pub samples: Vec<Record>,
}

struct Point {
    r: f64,
    theta: f64,
}

fn distance(a: &Point, b: &Point) -> f64 {
    (a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * (a.theta - b.theta).cos()).max(0.0).sqrt()
}

/// Poisson number of uniform points in the annulus (lo, hi).
fn ppp_annulus(rng: &mut ChaCha8Rng, density: f64, lo: f64, hi: f64) -> Vec<Point> {
    let mean = density * PI * (hi * hi - lo * lo);
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            Point { r: (lo * lo + u * (hi * hi - lo * lo)).sqrt(), theta: 2.0 * PI * rng.random::<f64>() }
        })
        .collect()
}

/// Power of a unit-mean Nakagami-m amplitude.
fn nakagami_power(rng: &mut ChaCha8Rng, m: f64) -> f64 {
    Gamma::new(m, 1.0 / m).expect("valid Nakagami shape").sample(rng)
}

/// Sum of the N per-element amplitude products |g_n||h_n|.
fn element_sum(rng: &mut ChaCha8Rng, m_bi: f64, m_iu: f64, n: u32, fading: ElementFading) -> f64 {
    match fading {
        ElementFading::Common => n as f64 * (nakagami_power(rng, m_bi) * nakagami_power(rng, m_iu)).sqrt(),
        ElementFading::Independent => {
            (0..n).map(|_| (nakagami_power(rng, m_bi) * nakagami_power(rng, m_iu)).sqrt()).sum()
        }
    }
}

/// |Σ_n a_n e^{jφ_n}|² with independent uniform phases.
fn random_phase_power(rng: &mut ChaCha8Rng, m_bi: f64, m_iu: f64, n: u32, fading: ElementFading) -> f64 {
    let common = match fading {
        ElementFading::Common => Some((nakagami_power(rng, m_bi) * nakagami_power(rng, m_iu)).sqrt()),
        ElementFading::Independent => None,
    };
    let (mut re, mut im) = (0.0, 0.0);
    for _ in 0..n {
        let a = common.unwrap_or_else(|| (nakagami_power(rng, m_bi) * nakagami_power(rng, m_iu)).sqrt());
        let (s, c) = (2.0 * PI * rng.random::<f64>()).sin_cos();
        re += a * c;
        im += a * s;
    }
    re * re + im * im
}

fn check_window(cfg: &NetworkConfig, window: f64) -> Result<()> {
    let min = 5.0 / (cfg.lambda_b * PI).sqrt();
    if !(window >= min) {
        return Err(Error::WindowTooSmall { window, min });
    }
    Ok(())
}

/// Draws realization `index` of the run seeded by `seed`.
pub fn sample_realization(cfg: &NetworkConfig, opts: &SimOptions, seed: u64, index: u64) -> Result<Record> {
    cfg.validate()?;
    check_window(cfg, opts.window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let rng = &mut rng;

    let (serving, others) = match opts.condition {
        Some(c) => {
            if !(c.d_bu0 > 0.0 && c.d_bu0 < opts.window) {
                return Err(invalid("sample_realization", format!("d_bu0 = {} outside the window", c.d_bu0)));
            }
            let s = Point { r: c.d_bu0, theta: 2.0 * PI * rng.random::<f64>() };
            (s, ppp_annulus(rng, cfg.lambda_b, c.d_bu0, opts.window))
        }
        None => {
            let mut bs = ppp_annulus(rng, cfg.lambda_b, 0.0, opts.window);
            if bs.is_empty() {
                return Err(invalid("sample_realization", "no BS inside the window"));
            }
            let k = (0..bs.len()).min_by(|&a, &b| bs[a].r.total_cmp(&bs[b].r)).expect("nonempty");
            let s = bs.swap_remove(k);
            (s, bs)
        }
    };

    // only IRSs within D2 affect the UE
    let mut irs = match opts.condition.and_then(|c| c.d_iu0) {
        Some(r) if r < cfg.d2 => {
            let mut v = vec![Point { r, theta: 2.0 * PI * rng.random::<f64>() }];
            v.extend(ppp_annulus(rng, cfg.lambda_i, r, cfg.d2));
            v
        }
        Some(_) => Vec::new(),
        None => ppp_annulus(rng, cfg.lambda_i, 0.0, cfg.d2),
    };
    if let Some(k) = (0..irs.len()).min_by(|&a, &b| irs[a].r.total_cmp(&irs[b].r)) {
        irs.swap(0, k);
    }
    let nearest = irs.first().map_or(f64::INFINITY, |p| p.r);
    let mode = match opts.condition.and_then(|c| c.d_iu0) {
        Some(r) => association_mode(r, cfg),
        None => association_mode(nearest, cfg),
    };

    let IrsSpec { n_elements, eps_ref: eps } = cfg.irs;
    let (f, pl) = (cfg.fading, cfg.path_loss);

    let direct_amp = (eps * serving.r.powf(-pl.alpha_bu) * nakagami_power(rng, f.m_bu)).sqrt();
    let signal = if mode == Mode::Mode1 {
        let s = &irs[0];
        let d_bi = distance(&serving, s).max(1e-9);
        let casc_amp = eps
            * (d_bi.powf(-pl.alpha_bi) * s.r.powf(-pl.alpha_iu)).sqrt()
            * element_sum(rng, f.m_bi, f.m_iu, n_elements, opts.element_fading);
        (direct_amp + casc_amp).powi(2)
    } else {
        direct_amp * direct_amp
    };

    let mut direct_i = 0.0;
    for b in &others {
        direct_i += eps * b.r.powf(-pl.alpha_bu) * nakagami_power(rng, f.m_bu);
    }
    let mut casc_i = 0.0;
    if mode != Mode::Mode3 {
        let n_s = cfg.scatter_elements();
        let skip = usize::from(mode == Mode::Mode1 && !opts.serving_irs_scatters);
        for s in irs.iter().skip(skip) {
            let near = s.r.powf(-pl.alpha_iu);
            for b in &others {
                let d_bi = distance(b, s).max(1e-9);
                let power = match cfg.scattering.phase {
                    ScatterPhase::Coherent => element_sum(rng, f.m_bi, f.m_iu, n_s, opts.element_fading).powi(2),
                    ScatterPhase::Random => random_phase_power(rng, f.m_bi, f.m_iu, n_s, opts.element_fading),
                };
                casc_i += eps * eps * d_bi.powf(-pl.alpha_bi) * near * power;
            }
        }
    }
    let p_t = cfg.tx_power.0;
    let noise = cfg.noise_power.0;
    let (signal_w, direct_w, casc_w) = (p_t * signal, p_t * direct_i, p_t * casc_i);
    Ok(Record {
        realization: index,
        mode,
        signal_w,
        direct_interference_w: direct_w,
        cascaded_interference_w: casc_w,
        sinr: signal_w / (direct_w + casc_w + noise),
    })
}

/// Runs `realizations` independent realizations in parallel; records are in index order.
pub fn simulate(cfg: &NetworkConfig, opts: &SimOptions, realizations: u64, seed: u64) -> Result<SimulationResult> {
    cfg.validate()?;
    check_window(cfg, opts.window)?;
    let samples = (0..realizations)
        .into_par_iter()
        .map(|k| sample_realization(cfg, opts, seed, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationResult { seed, realizations, samples })
}

impl SimulationResult {
    pub fn sinr_ecdf(&self) -> Ecdf {
        Ecdf::new(&self.samples.iter().map(|r| r.sinr).collect::<Vec<_>>())
    }

    pub fn interference_ecdf(&self) -> Ecdf {
        Ecdf::new(&self.samples.iter().map(Record::interference_w).collect::<Vec<_>>())
    }

    /// Mean and standard error of the signal and interference powers.
    pub fn mean_powers(&self) -> ((f64, f64), (f64, f64)) {
        let s: Vec<f64> = self.samples.iter().map(|r| r.signal_w).collect();
        let i: Vec<f64> = self.samples.iter().map(Record::interference_w).collect();
        (mean_and_se(&s), mean_and_se(&i))
    }

    /// Empirical E[e^{−sI}] with its standard error, I in channel-gain units
    /// (received power over transmit power).
    pub fn laplace_estimate(&self, s: f64, include_cascaded: bool, tx_power: f64) -> (f64, f64) {
        let v: Vec<f64> = self
            .samples
            .iter()
            .map(|r| {
                let i = r.direct_interference_w + if include_cascaded { r.cascaded_interference_w } else { 0.0 };
                (-s * i / tx_power).exp()
            })
            .collect();
        mean_and_se(&v)
    }

    /// Fractions of realizations in Mode1, Mode2 and Mode3.
    pub fn mode_fractions(&self) -> [f64; 3] {
        let mut c = [0usize; 3];
        for r in &self.samples {
            c[(r.mode.index() - 1) as usize] += 1;
        }
        let n = self.samples.len().max(1) as f64;
        c.map(|k| k as f64 / n)
    }

    /// Writes the raw samples as CSV with columns
    /// `realization, mode, signal_w, interference_w, sinr_db`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["realization", "mode", "signal_w", "interference_w", "sinr_db"])?;
        for r in &self.samples {
            w.write_record(&[
                r.realization.to_string(),
                r.mode.index().to_string(),
                format!("{:e}", r.signal_w),
                format!("{:e}", r.interference_w()),
                format!("{:.6}", 10.0 * r.sinr.log10()),
            ])?;
        }
        w.flush()
    }
}

/// Channel law to sample in [`estimate_channel_law`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    Direct,
    Cascaded,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub geometry: LinkGeometry,
    pub m_bu: f64,
    pub m_bi: f64,
    pub m_iu: f64,
    pub irs: IrsSpec,
    pub element_fading: ElementFading,
}

#[derive(Debug, Clone)]
pub struct ChannelLawEstimate {
    pub samples: Vec<f64>,
    pub ecdf: Ecdf,
    pub histogram: Histogram,
}

/// Samples the physical channel power |h_BU|², |h_BIU|² or (|h_BU| + |h_BIU|)².
pub fn estimate_channel_law(
    kind: LawKind,
    p: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<ChannelLawEstimate> {
    const MIN: usize = 10_000;
    if n_samples < MIN {
        return Err(Error::TooFewSamples { op: "estimate_channel_law", min: MIN, got: n_samples });
    }
    p.geometry.validate()?;
    p.irs.validate()?;
    let g = p.geometry;
    let eps = p.irs.eps_ref;
    let direct_scale = eps * g.d_bu.powf(-g.alpha_bu);
    let casc_scale = eps * eps * g.d_bi.powf(-g.alpha_bi) * g.d_iu.powf(-g.alpha_iu);
    const CHUNK: usize = 4096;
    let samples: Vec<f64> = (0..n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            (0..len)
                .map(|_| match kind {
                    LawKind::Direct => direct_scale * nakagami_power(&mut rng, p.m_bu),
                    LawKind::Cascaded => {
                        let a = element_sum(&mut rng, p.m_bi, p.m_iu, p.irs.n_elements, p.element_fading);
                        casc_scale * a * a
                    }
                    LawKind::Mixture => {
                        let a = (direct_scale * nakagami_power(&mut rng, p.m_bu)).sqrt();
                        let b = casc_scale.sqrt()
                            * element_sum(&mut rng, p.m_bi, p.m_iu, p.irs.n_elements, p.element_fading);
                        (a + b) * (a + b)
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let ecdf = Ecdf::new(&samples);
    let histogram = histogram_fd(&samples, ecdf.quantile(0.001), ecdf.quantile(0.999))?;
    Ok(ChannelLawEstimate { samples, ecdf, histogram })
}

/// Empirical SINR metrics with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimates {
    pub realizations: u64,
    /// E[ln(1 + SINR)] and its standard error (nats/s/Hz).
    pub spectral_efficiency: (f64, f64),
    /// (τ, outage frequency), made nondecreasing in τ.
    pub outage: Vec<(f64, f64)>,
    /// E[SINR^l] and its standard error for l = 1, 2.
    pub moments: Vec<(f64, f64)>,
    pub mode_fractions: [f64; 3],
}

/// Simulates and summarizes SINR metrics; `taus` must be increasing.
pub fn estimate_metrics(
    cfg: &NetworkConfig,
    opts: &SimOptions,
    realizations: u64,
    seed: u64,
    taus: &[f64],
) -> Result<MetricEstimates> {
    const MIN: u64 = 1000;
    if realizations < MIN {
        return Err(Error::TooFewSamples { op: "estimate_metrics", min: MIN as usize, got: realizations as usize });
    }
    if taus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("estimate_metrics", "thresholds must be increasing"));
    }
    let run = simulate(cfg, opts, realizations, seed)?;
    Ok(summarize(&run, taus))
}

/// Metric summary of an existing run.
pub fn summarize(run: &SimulationResult, taus: &[f64]) -> MetricEstimates {
    let sinr: Vec<f64> = run.samples.iter().map(|r| r.sinr).collect();
    let se: Vec<f64> = sinr.iter().map(|s| s.ln_1p()).collect();
    let ecdf = Ecdf::new(&sinr);
    let mut outage: Vec<(f64, f64)> = taus.iter().map(|&t| (t, ecdf.eval_below(t))).collect();
    for k in 1..outage.len() {
        outage[k].1 = outage[k].1.max(outage[k - 1].1);
    }
    let moments = (1..=2).map(|l| mean_and_se(&sinr.iter().map(|s| s.powi(l)).collect::<Vec<_>>())).collect();
    MetricEstimates {
        realizations: run.realizations,
        spectral_efficiency: mean_and_se(&se),
        outage,
        moments,
        mode_fractions: run.mode_fractions(),
    }
}

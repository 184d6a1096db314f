use clap::{Args, ValueEnum};
use serde_json::{json, Value as Json};

use irs_mixgamma::channel::cascaded_gain;
use irs_mixgamma::geometry::{Mode, NetworkConfig, ScatterField};
use irs_mixgamma::interference::{
    default_outer_radius, interference_cdf, laplace_direct_interference, laplace_total, InterferenceContext, Population,
};
use irs_mixgamma::metrics::{
    combined_gain, conditional_signal_law, outage_probability, sinr_moment, spectral_efficiency, unconditional_metrics,
    AveragingOptions, SignalOptions, SinrContext,
};
use irs_mixgamma::mixgamma::{from_pdf, kappa_mu_pdf, project_pdf, reference_grid, FadingSpec};
use irs_mixgamma::montecarlo::{
    estimate_channel_law, simulate as run_simulation, summarize, ChannelParams, Conditioning, ElementFading, LawKind,
    SimOptions,
};
use irs_mixgamma::specfun::gauss_laguerre_rule;
use irs_mixgamma::stats::{linspace, logspace};
use irs_mixgamma::{MixtureGamma, QuadratureRule};

use crate::config::{parse_value, ConfigTree};
use crate::error::CliError;
use crate::output::{col, num, Artifacts};
use crate::GlobalArgs;

pub struct Context {
    tree: ConfigTree,
    cfg: NetworkConfig,
    seed: u64,
    mc: u64,
    rule: QuadratureRule,
    out: Artifacts,
    params: serde_json::Map<String, Json>,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> Result<Self, CliError> {
        let tree = ConfigTree::load(g.config.as_deref(), &g.sets)?;
        let cfg = tree.resolve()?;
        let rule = gauss_laguerre_rule(g.quad_order)?;
        let out = Artifacts::create(&g.out)?;
        let mut params = serde_json::Map::new();
        params.insert("quad_order".into(), json!(g.quad_order));
        params.insert("mc_realizations".into(), json!(g.mc_realizations));
        params.insert("overrides".into(), json!(g.sets));
        Ok(Context { tree, cfg, seed: g.seed, mc: g.mc_realizations, rule, out, params })
    }

    fn param(&mut self, key: &str, value: Json) {
        self.params.insert(key.into(), value);
    }

    fn finish(self, command: &str) -> Result<(), CliError> {
        let config = self.tree.canonical()?;
        self.out.finish(command, self.seed, &config, &Json::Object(self.params))
    }
}

fn mixture_json(m: &MixtureGamma) -> Result<Json, CliError> {
    Ok(json!({
        "record": m.to_record()?,
        "terms": m.len(),
        "mean": m.mean(),
        "signed": m.is_signed(),
    }))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Nakagami,
    Rayleigh,
    KappaMu,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value = "nakagami")]
    family: Family,
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    /// Mean power of Nakagami and Rayleigh targets.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 2.0)]
    mu: f64,
    #[arg(long, default_value_t = 20)]
    terms: usize,
    /// Sample the target on the lattice (i−1)/u instead of least-squares projection.
    #[arg(long)]
    lattice_rate: Option<f64>,
}

pub fn fit(mut ctx: Context, a: &FitArgs) -> Result<(), CliError> {
    let spec = match a.family {
        Family::Nakagami => FadingSpec::nakagami(a.m, a.omega),
        Family::Rayleigh => FadingSpec::Rayleigh { omega: a.omega },
        Family::KappaMu => {
            let (k, mu) = (a.kappa, a.mu);
            if !(k >= 0.0 && mu > 0.0) {
                return Err(CliError::Config(format!("κ-μ needs κ ≥ 0 and μ > 0, got κ={k} μ={mu}")));
            }
            FadingSpec::generic(move |x| kappa_mu_pdf(k, mu, x))
        }
    };
    let fit = match a.lattice_rate {
        Some(u) => from_pdf(&spec, u, a.terms)?,
        None => project_pdf(&spec, a.terms)?,
    };
    let pdf = |x: f64| spec.pdf(x);
    let grid = reference_grid(&pdf)?;
    let reference: Vec<f64> = grid.iter().map(|&x| pdf(x)).collect();
    let mmse = fit.mmse_against(&grid, &reference)?;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&reference)
        .map(|(&x, &t)| Ok(vec![num(x), num(t), num(fit.pdf(x)?)]))
        .collect::<Result<_, CliError>>()?;
    ctx.out.csv(
        "fit_pdf.csv",
        &[col("x", "power"), col("target pdf", "1/power"), col("mixture pdf", "1/power")],
        &rows,
    )?;
    let mut report = mixture_json(&fit)?;
    report["mmse"] = json!(mmse);
    report["grid_points"] = json!(grid.len());
    ctx.out.json("fit.json", &report)?;
    println!("fit: {} terms, MMSE {mmse:.3e}", fit.len());
    ctx.param("family", json!(format!("{:?}", a.family)));
    ctx.param("target", json!({"m": a.m, "omega": a.omega, "kappa": a.kappa, "mu": a.mu}));
    ctx.param("terms", json!(a.terms));
    ctx.param("lattice_rate", json!(a.lattice_rate));
    ctx.finish("fit")
}

#[derive(Args, Debug)]
pub struct LinkArgs {
    /// BS-UE distance (m).
    #[arg(long, default_value_t = 100.0)]
    d_bu: f64,
    /// IRS-UE distance (m).
    #[arg(long, default_value_t = 10.0)]
    d_iu: f64,
    /// BS-IRS distance (m); defaults to the BS-UE distance.
    #[arg(long)]
    d_bi: Option<f64>,
    #[arg(long, default_value_t = 200)]
    points: usize,
}

pub fn link(mut ctx: Context, a: &LinkArgs, combined: bool) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let geom = cfg.link_geometry(a.d_bu, a.d_iu, a.d_bi.unwrap_or(a.d_bu));
    let f = cfg.fading;
    let casc = cascaded_gain(&geom, f.m_bi, f.m_iu, &cfg.irs, &ctx.rule)?;
    let (name, law) = if combined {
        let direct = irs_mixgamma::channel::direct_gain(&geom, f.m_bu, &cfg.irs)?;
        ("mixture", combined_gain(&direct, &casc, &SignalOptions::default())?)
    } else {
        ("cascade", casc)
    };
    if a.points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    let xs: Vec<f64> = linspace(0.0, law.quantile(0.999), a.points + 1).into_iter().skip(1).collect();
    let rows: Vec<Vec<String>> =
        xs.iter().map(|&x| Ok(vec![num(x), num(law.pdf(x)?), num(law.cdf(x))])).collect::<Result<_, CliError>>()?;
    ctx.out.csv(&format!("{name}_pdf.csv"), &[col("x", "gain"), col("pdf", "1/gain"), col("cdf", "1")], &rows)?;
    ctx.out.json(&format!("{name}.json"), &mixture_json(&law)?)?;
    println!("{name}: {} terms, mean gain {:.4e}", law.len(), law.mean());
    ctx.param("geometry", json!(geom));
    ctx.finish(name)
}

#[derive(Args, Debug)]
pub struct InterferenceArgs {
    /// Serving BS distance (m).
    #[arg(long, default_value_t = 100.0)]
    d_bu: f64,
    /// Nearest-IRS distance (m); omitted averages over the IRS field.
    #[arg(long)]
    d_iu: Option<f64>,
    #[arg(long, default_value_t = 40)]
    points: usize,
}

pub fn interference(mut ctx: Context, a: &InterferenceArgs) -> Result<(), CliError> {
    let ic = InterferenceContext::new(&ctx.cfg, a.d_bu, a.d_iu, &ctx.rule)?;
    let (md, mt) = (ic.mean(Population::DirectOnly), ic.mean(Population::DirectPlusCascaded));
    let mut rows = Vec::new();
    for s in logspace(0.01 / mt, 10.0 / mt, a.points.max(2)) {
        rows.push(vec![
            num(s),
            num(laplace_direct_interference(s, &ic)?),
            num(laplace_total(s, &ic, Population::DirectPlusCascaded)?),
        ]);
    }
    ctx.out.csv("laplace.csv", &[col("s", "1/gain"), col("L direct", "1"), col("L total", "1")], &rows)?;
    let mut rows = Vec::new();
    for x in logspace(0.05 * md, 20.0 * mt, a.points.max(2)) {
        rows.push(vec![
            num(x),
            num(interference_cdf(x, &ic, Population::DirectOnly)?),
            num(interference_cdf(x, &ic, Population::DirectPlusCascaded)?),
        ]);
    }
    ctx.out.csv("cdf.csv", &[col("x", "gain"), col("F direct", "1"), col("F total", "1")], &rows)?;
    ctx.out
        .json("interference.json", &json!({"mean_direct": md, "mean_total": mt, "outer_radius_m": ic.outer_radius}))?;
    println!("interference: mean direct {md:.4e}, total {mt:.4e} (channel-gain units)");
    ctx.param("d_bu", json!(a.d_bu));
    ctx.param("d_iu", json!(a.d_iu));
    ctx.finish("interference")
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Swept key and values, e.g. `lambda_ratio=1,10,100,500` or `irs.n_elements=500,3000`.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    sweep: Option<String>,
    /// Outage thresholds (linear SINR).
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    /// Also report E[SINR].
    #[arg(long)]
    moments: bool,
    /// Condition on the serving BS distance (m); requires --d-iu.
    #[arg(long, requires = "d_iu")]
    d_bu: Option<f64>,
    /// Condition on the nearest-IRS distance (m); requires --d-bu.
    #[arg(long, requires = "d_bu")]
    d_iu: Option<f64>,
}

fn metric_row(ctx: &SinrContext, a: &MetricsArgs) -> irs_mixgamma::Result<Vec<f64>> {
    let mut v = vec![spectral_efficiency(ctx)?];
    if a.moments {
        v.push(sinr_moment(ctx, 1)?);
    }
    for &t in &a.taus {
        v.push(outage_probability(ctx, t)?);
    }
    Ok(v)
}

pub fn metrics(mut ctx: Context, a: &MetricsArgs) -> Result<(), CliError> {
    if a.taus.iter().any(|t| !(*t > 0.0)) {
        return Err(CliError::Config("outage thresholds must be positive".into()));
    }
    let (key, values) = match &a.sweep {
        None => (None, vec![Json::Null]),
        Some(s) => {
            let (k, vs) =
                s.split_once('=').ok_or_else(|| CliError::Config(format!("sweep '{s}' is not KEY=V1,V2,...")))?;
            let vals: Vec<Json> = vs.split(',').map(|v| toml_to_json(parse_value(v.trim()))).collect();
            (Some(k.trim().to_string()), vals)
        }
    };
    let mut labels = vec![col("spectral efficiency", "nats/s/Hz")];
    if a.moments {
        labels.push(col("E[SINR]", "1"));
    }
    labels.extend(a.taus.iter().map(|t| col(&format!("outage tau={t}"), "1")));

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (k, v) in values.iter().enumerate() {
        let cfg = match &key {
            None => ctx.cfg.clone(),
            Some(key) => sweep_config(&ctx.tree, key, v)?,
        };
        let vals = match (a.d_bu, a.d_iu) {
            (Some(d), Some(r)) => {
                let c = SinrContext::for_geometry(&cfg, d, r, false, &ctx.rule, &SignalOptions::default())?;
                metric_row(&c, a)?
            }
            _ => unconditional_metrics(&cfg, &AveragingOptions::default(), &ctx.rule, &|c| metric_row(c, a))?,
        };
        let x = if v.is_null() { k.to_string() } else { v.to_string() };
        for (label, y) in labels.iter().zip(&vals) {
            series.push(vec![x.clone(), num(*y), label.clone()]);
        }
        let mut row = vec![x];
        row.extend(vals.iter().map(|&y| num(y)));
        eprintln!("metrics: {}", row.join(", "));
        rows.push(row);
    }
    let mut header = vec![col(key.as_deref().unwrap_or("run"), "config")];
    header.extend(labels);
    ctx.out.csv("metrics.csv", &header, &rows)?;
    ctx.out.csv("series.csv", &[col("x", "config"), col("y", "metric"), col("label", "-")], &series)?;
    ctx.param("sweep", json!(a.sweep));
    ctx.param("taus", json!(a.taus));
    ctx.param("moments", json!(a.moments));
    ctx.param("conditioning", json!({"d_bu": a.d_bu, "d_iu": a.d_iu}));
    ctx.finish("metrics")
}

fn toml_to_json(v: toml::Value) -> Json {
    serde_json::to_value(v).unwrap_or(Json::Null)
}

fn sweep_config(tree: &ConfigTree, key: &str, v: &Json) -> Result<NetworkConfig, CliError> {
    let value: toml::Value = serde_json::from_value(v.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let mut t = tree.clone();
    if key == "lambda_ratio" {
        let ratio = value.as_float().or_else(|| value.as_integer().map(|i| i as f64));
        let ratio = ratio.ok_or_else(|| CliError::Config(format!("lambda_ratio value {v} is not a number")))?;
        let lambda_b = tree.resolve()?.lambda_b;
        t.set("lambda_i", toml::Value::Float(ratio * lambda_b))?;
    } else {
        if tree.get(key).is_none() {
            return Err(CliError::Config(format!("unknown sweep key '{key}'")));
        }
        t.set(key, value)?;
    }
    t.resolve()
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Serving BS distance (m); requires --d-iu.
    #[arg(long, requires = "d_iu")]
    d_bu: Option<f64>,
    /// Nearest-IRS distance (m).
    #[arg(long)]
    d_iu: Option<f64>,
    /// Simulation window radius (m); defaults to 20/√(λ_B π).
    #[arg(long)]
    window: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100")]
    taus: Vec<f64>,
}

pub fn simulate(mut ctx: Context, a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let mut opts = SimOptions::for_config(cfg);
    if let Some(w) = a.window {
        opts.window = w;
    }
    opts.condition = a.d_bu.map(|d| Conditioning { d_bu0: d, d_iu0: a.d_iu });
    if a.taus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CliError::Config("thresholds must be increasing".into()));
    }
    let run = run_simulation(cfg, &opts, ctx.mc, ctx.seed)?;
    let rows: Vec<Vec<String>> = run
        .samples
        .iter()
        .map(|r| {
            vec![
                r.realization.to_string(),
                r.mode.index().to_string(),
                num(r.signal_w),
                num(r.direct_interference_w),
                num(r.cascaded_interference_w),
                num(10.0 * r.sinr.log10()),
            ]
        })
        .collect();
    let header = [
        col("realization", "index"),
        col("mode", "1-3"),
        col("signal", "W"),
        col("direct interference", "W"),
        col("cascaded interference", "W"),
        col("sinr", "dB"),
    ];
    ctx.out.csv("samples.csv", &header, &rows)?;
    let summary = summarize(&run, &a.taus);
    ctx.out.json("summary.json", &summary)?;
    println!(
        "simulate: {} realizations, spectral efficiency {:.4} ± {:.4} nats/s/Hz",
        summary.realizations, summary.spectral_efficiency.0, summary.spectral_efficiency.1
    );
    ctx.param("options", json!(opts));
    ctx.param("taus", json!(a.taus));
    ctx.finish("simulate")
}

struct Check {
    name: String,
    analytic: f64,
    monte_carlo: f64,
    error: f64,
    tolerance: f64,
}

pub fn validate(mut ctx: Context) -> Result<(), CliError> {
    let cfg = ctx.cfg.clone();
    let n = ctx.mc;
    let seed = ctx.seed;
    let rule = ctx.rule.clone();
    let mut checks: Vec<Check> = Vec::new();

    // link laws at a Mode1 geometry
    let geom = cfg.link_geometry(100.0, 10.0, 100.0);
    let f = cfg.fading;
    let params = ChannelParams {
        geometry: geom,
        m_bu: f.m_bu,
        m_bi: f.m_bi,
        m_iu: f.m_iu,
        irs: cfg.irs,
        element_fading: ElementFading::Common,
    };
    let samples = (10 * n as usize).max(10_000);
    let direct = irs_mixgamma::channel::direct_gain(&geom, f.m_bu, &cfg.irs)?;
    let casc = cascaded_gain(&geom, f.m_bi, f.m_iu, &cfg.irs, &rule)?;
    let mix = combined_gain(&direct, &casc, &SignalOptions::default())?;
    for (k, (kind, law)) in
        [(LawKind::Direct, &direct), (LawKind::Cascaded, &casc), (LawKind::Mixture, &mix)].into_iter().enumerate()
    {
        let est = estimate_channel_law(kind, &params, samples, seed.wrapping_add(k as u64))?;
        let ks = est.ecdf.ks_distance(|x| law.cdf(x));
        checks.push(Check {
            name: format!("{kind:?} law KS distance"),
            analytic: law.mean(),
            monte_carlo: est.ecdf.sorted().iter().sum::<f64>() / samples as f64,
            error: ks,
            tolerance: 0.01,
        });
    }

    // interference and SINR metrics against a simulated PPP of scatterers
    let mut pcfg = cfg.clone();
    pcfg.scattering.field = ScatterField::Poisson;
    let window = default_outer_radius(pcfg.lambda_b);
    let (d_bu, d_iu) = (100.0, 10.0);
    let ic = InterferenceContext::windowed(&pcfg, d_bu, Some(d_iu), window, &rule)?;
    let opts = SimOptions {
        window,
        condition: Some(Conditioning { d_bu0: d_bu, d_iu0: Some(d_iu) }),
        ..SimOptions::for_config(&pcfg)
    };
    let run = run_simulation(&pcfg, &opts, n, seed)?;
    for (pop, tol) in [(Population::DirectOnly, 0.02), (Population::DirectPlusCascaded, 0.03)] {
        let mean = ic.mean(pop);
        for s in [0.1 / mean, 1.0 / mean] {
            let a = laplace_total(s, &ic, pop)?;
            let (m, _) = run.laplace_estimate(s, pop == Population::DirectPlusCascaded, pcfg.tx_power.0);
            checks.push(Check {
                name: format!("{pop:?} Laplace transform at s·E[I]={:.1}", s * mean),
                analytic: a,
                monte_carlo: m,
                error: (a / m - 1.0).abs(),
                tolerance: tol,
            });
        }
    }
    let sig = SignalOptions { bearing_nodes: 16, ..Default::default() };
    let signal = conditional_signal_law(&pcfg, Mode::Mode1, false, d_bu, d_iu, &rule, &sig)?;
    let noise = pcfg.noise_power.0 / pcfg.tx_power.0;
    let sctx = SinrContext::new(
        signal,
        Some((ic, Population::DirectPlusCascaded)),
        noise,
        Mode::Mode1,
        pcfg.link_geometry(d_bu, d_iu, d_bu),
    )?;
    let taus = [0.1, 1.0, 10.0];
    let est = summarize(&run, &taus);
    let se = spectral_efficiency(&sctx)?;
    checks.push(Check {
        name: "spectral efficiency".into(),
        analytic: se,
        monte_carlo: est.spectral_efficiency.0,
        error: (se / est.spectral_efficiency.0 - 1.0).abs(),
        tolerance: 0.03,
    });
    let m1 = sinr_moment(&sctx, 1)?;
    checks.push(Check {
        name: "E[SINR]".into(),
        analytic: m1,
        monte_carlo: est.moments[0].0,
        error: (m1 / est.moments[0].0 - 1.0).abs(),
        tolerance: 0.03,
    });
    for &(t, p) in &est.outage {
        let a = outage_probability(&sctx, t)?;
        checks.push(Check {
            name: format!("outage at tau={t}"),
            analytic: a,
            monte_carlo: p,
            error: (a - p).abs(),
            tolerance: 0.01,
        });
    }

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                num(c.analytic),
                num(c.monte_carlo),
                num(c.error),
                num(c.tolerance),
                (c.error <= c.tolerance).to_string(),
            ]
        })
        .collect();
    for r in &rows {
        println!("{:<44} error {} tolerance {} pass {}", r[0], r[3], r[4], r[5]);
    }
    let header = [
        col("check", "-"),
        col("analytic", "metric"),
        col("monte carlo", "metric"),
        col("error", "abs or rel"),
        col("tolerance", "abs or rel"),
        col("pass", "bool"),
    ];
    ctx.out.csv("validate.csv", &header, &rows)?;
    let failed: Vec<String> = checks.iter().filter(|c| !(c.error <= c.tolerance)).map(|c| c.name.clone()).collect();
    ctx.param("geometry", json!({"d_bu": d_bu, "d_iu": d_iu}));
    ctx.finish("validate")?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join("; ")))
    }
}

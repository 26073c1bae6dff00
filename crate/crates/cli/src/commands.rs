use rayon::prelude::*;
use serde::Serialize;

use friable::diophantine::derive_params;
use friable::dispersion::{bilinear_b, sigma_qr, type1_report, type2_report, DispersionParams, SumReport};
use friable::expsums::{kl_smooth_average_above, kloos_bound_rhs, optimal_z, KloostermanParams};
use friable::search::{cmd_search, SearchConfig, SearchResult};
use friable::smooth::{dickman_rho, doubling_factor, psi, saddle_alpha};

use crate::config::{Command, Format, RunConfig, SumKind};
use crate::Failure;

/// Rendered output and whether it holds any rows.
pub struct Output {
    pub text: String,
    pub empty: bool,
}

fn render<T: Serialize, R: Serialize>(json: &T, rows: &[R], format: Format) -> Result<Output, Failure> {
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json).map_err(|e| Failure::Other(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Failure::Other(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Other(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Failure::Other(e.to_string()))?
        }
    };
    Ok(Output { text, empty: rows.is_empty() })
}

fn table<R: Serialize>(rows: Vec<R>, format: Format) -> Result<Output, Failure> {
    render(&rows, &rows, format)
}

pub fn run(cfg: &RunConfig) -> Result<Output, Failure> {
    match cfg.command {
        Command::Search => search(cfg),
        Command::Psi => psi_grid(cfg),
        Command::Rho => rho_grid(cfg),
        Command::Alpha => alpha_grid(cfg),
        Command::Kloosterman => kloosterman(cfg),
        Command::Dispersion => dispersion(cfg),
    }
}

fn pairs(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect()
}

fn check_budget(cfg: &RunConfig, needed: u128) -> Result<(), Failure> {
    if needed > cfg.budget {
        return Err(friable::Error::Budget { needed, limit: cfg.budget }.into());
    }
    Ok(())
}

#[derive(Serialize)]
struct MemberRow {
    q: u64,
    a: i64,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "Y")]
    y: f64,
    n: u64,
    dist: f64,
    n_pow_theta: f64,
    lpf: u64,
    within_bound: bool,
    strong: bool,
}

fn search(cfg: &RunConfig) -> Result<Output, Failure> {
    let theta = cfg.theta()?;
    let search = SearchConfig {
        alpha: cfg.alpha()?,
        theta,
        c: cfg.real("C", Some(10.0))?,
        y: cfg.opt_real("Y")?,
        q_min: cfg.int("qmin", Some(1))?,
        q_max: cfg.int("qmax", None)?,
        budget: cfg.budget,
    };
    let results: Vec<SearchResult> = cmd_search(&search)?;
    let rows: Vec<MemberRow> = results
        .iter()
        .flat_map(|r| {
            r.members.iter().map(|m| MemberRow {
                q: r.q,
                a: r.a,
                x: r.x,
                r: r.r,
                y: r.y,
                n: m.n,
                dist: m.dist,
                n_pow_theta: m.n_pow,
                lpf: m.lpf,
                within_bound: m.within_bound,
                strong: m.strong,
            })
        })
        .collect();
    let mut out = render(&results, &rows, cfg.format)?;
    out.empty = results.is_empty();
    Ok(out)
}

#[derive(Serialize)]
struct PsiRow {
    x: f64,
    y: f64,
    psi: u64,
}

fn psi_grid(cfg: &RunConfig) -> Result<Output, Failure> {
    let grid = pairs(&cfg.grid("x")?, &cfg.grid("y")?);
    check_budget(cfg, grid.iter().map(|&(x, _)| x.max(0.0) as u128).sum())?;
    let rows = grid
        .par_iter()
        .map(|&(x, y)| Ok(PsiRow { x, y, psi: psi(x, y)? }))
        .collect::<Result<Vec<_>, friable::Error>>()?;
    table(rows, cfg.format)
}

#[derive(Serialize)]
struct RhoRow {
    u: f64,
    rho: f64,
}

fn rho_grid(cfg: &RunConfig) -> Result<Output, Failure> {
    let rows = cfg
        .grid("u")?
        .into_iter()
        .map(|u| Ok(RhoRow { u, rho: dickman_rho(u, 1e-10)? }))
        .collect::<Result<Vec<_>, friable::Error>>()?;
    table(rows, cfg.format)
}

#[derive(Serialize)]
struct AlphaRow {
    x: f64,
    y: f64,
    alpha: f64,
    residual: f64,
    iterations: u32,
    doubling: f64,
}

fn alpha_grid(cfg: &RunConfig) -> Result<Output, Failure> {
    let grid = pairs(&cfg.grid("x")?, &cfg.grid("y")?);
    let rows = grid
        .par_iter()
        .map(|&(x, y)| {
            let s = saddle_alpha(x, y)?;
            Ok(AlphaRow {
                x,
                y,
                alpha: s.alpha,
                residual: s.residual,
                iterations: s.iterations,
                doubling: doubling_factor(x, y)?,
            })
        })
        .collect::<Result<Vec<_>, friable::Error>>()?;
    table(rows, cfg.format)
}

#[derive(Serialize)]
struct KloostermanRow {
    #[serde(rename = "M")]
    m: f64,
    x: f64,
    a: i64,
    q: u64,
    y: f64,
    z: f64,
    eta: f64,
    kl: f64,
    bound: f64,
    ratio: f64,
}

fn kloosterman(cfg: &RunConfig) -> Result<Output, Failure> {
    let a: i64 = cfg.int("a", Some(1))?;
    let q: u64 = cfg.int("q", Some(1))?;
    let y = cfg.real("Y", None)?;
    let eta = cfg.real("eta", Some(0.05))?;
    let z_fixed = cfg.opt_real("z")?;
    let grid = pairs(&cfg.grid("M")?, &cfg.grid("x")?);
    let mut rows = Vec::with_capacity(grid.len());
    for (m, x) in grid {
        let z = match z_fixed {
            Some(z) => z,
            None => optimal_z(x, y)?,
        };
        let kl = kl_smooth_average_above(m, x, a, q, y, 0.0, cfg.budget)?;
        let bound = kloos_bound_rhs(&KloostermanParams::new(m, x, a, q, y, z, eta)?);
        rows.push(KloostermanRow { m, x, a, q, y, z, eta, kl, bound, ratio: kl / bound });
    }
    table(rows, cfg.format)
}

#[derive(Serialize)]
struct KindReport {
    kind: &'static str,
    #[serde(flatten)]
    report: SumReport,
}

#[derive(Serialize)]
struct SumRow {
    kind: &'static str,
    q: u64,
    a: i64,
    #[serde(rename = "N")]
    n: f64,
    value: f64,
    main_term: f64,
    ratio: Option<f64>,
    truncation_error: f64,
    runtime_ms: f64,
}

fn dispersion(cfg: &RunConfig) -> Result<Output, Failure> {
    let kind = cfg.kind()?;
    let q: u64 = cfg.int("q", None)?;
    let a: i64 = cfg.int("a", None)?;
    let theta = cfg.theta()?;
    let mut params = derive_params(q, theta, cfg.real("C", Some(10.0))?)?;
    if let Some(y) = cfg.opt_real("Y")? {
        params = params.with_y(y);
    }
    let eta = cfg.real("eta", Some(0.05))?;
    let delta = cfg.real("delta", Some(0.1))?;
    let ns = if kind == SumKind::Sigma { vec![f64::NAN] } else { cfg.grid("N")? };
    let mut reports = Vec::with_capacity(ns.len());
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let (name, mut report) = if kind == SumKind::Sigma {
            ("sigma", sigma_qr(&params, a)?)
        } else {
            let p = DispersionParams::new((params.x / n).floor(), n, q, a, params.r, params.y)?
                .with_eta_delta(eta, delta)
                .with_budget(cfg.budget);
            match kind {
                SumKind::Bilinear => ("bilinear", bilinear_b(&p)?),
                SumKind::Type1 => ("type1", type1_report(&p)?),
                SumKind::Type2 => ("type2", type2_report(&p)?.report),
                SumKind::Sigma => unreachable!(),
            }
        };
        if !cfg.timings {
            report.runtime_ms = 0.0;
        }
        rows.push(SumRow {
            kind: name,
            q,
            a,
            n,
            value: report.value,
            main_term: report.main_term,
            ratio: report.ratio,
            truncation_error: report.truncation_error,
            runtime_ms: report.runtime_ms,
        });
        reports.push(KindReport { kind: name, report });
    }
    render(&reports, &rows, cfg.format)
}

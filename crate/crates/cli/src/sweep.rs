//! Parameter sweeps driven by a flat key=value config file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use sixvertex::bethe_discrete::{self, SolverOptions};
use sixvertex::model_params::{from_aux, ModelParams};
use sixvertex::{free_energy, Error};

use crate::commands::{self, CliError, EXIT_DOMAIN};
use crate::table::{format_real, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// 𝐦, Diff and the dominance margin per (Δ, N).
    Diagnostics,
    /// f − f_N^(n) against the predicted deficit per (Δ, N, n).
    Correction,
    FreeEnergy,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: Kind,
    pub deltas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub theta: f64,
    pub r: f64,
    /// n/N for diagnostics; 0.5 is half filling.
    pub filling: f64,
    /// Filling window and step for correction sweeps, as n/N.
    pub fill_lo: f64,
    pub fill_hi: f64,
    pub n_step: usize,
    pub timing: bool,
    pub raw: BTreeMap<String, String>,
}

fn config_error(msg: String) -> CliError {
    CliError { code: EXIT_DOMAIN, message: msg, detail: None }
}

fn parse_real(key: &str, v: &str) -> Result<f64, CliError> {
    let v = v.trim();
    if let Some(rest) = v.strip_prefix("pi/") {
        let d: f64 = rest.parse().map_err(|_| config_error(format!("bad value for {key}: {v}")))?;
        return Ok(PI / d);
    }
    match v {
        "pi" => Ok(PI),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => v.parse().map_err(|_| config_error(format!("bad value for {key}: {v}"))),
    }
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| f(key, s)).collect()
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.trim().parse().map_err(|_| config_error(format!("bad integer for {key}: {v}")))
}

pub fn parse_config(text: &str) -> Result<SweepConfig, CliError> {
    let mut raw = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("line {}: expected key=value", lineno + 1)))?;
        raw.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| raw.get(k).map(String::as_str);
    let kind = match get("kind").unwrap_or("diagnostics") {
        "diagnostics" | "interlacement" | "dominance" => Kind::Diagnostics,
        "correction" => Kind::Correction,
        "free-energy" => Kind::FreeEnergy,
        other => return Err(config_error(format!("unknown sweep kind {other}"))),
    };
    const KNOWN: [&str; 10] = ["kind", "deltas", "sizes", "theta", "r", "filling", "fill_lo", "fill_hi", "n_step", "timing"];
    if let Some(k) = raw.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(config_error(format!("unknown config key {k}")));
    }
    let deltas = parse_list("deltas", get("deltas").unwrap_or("0.5,0,-0.5,-0.9"), parse_real)?;
    let sizes = parse_list("sizes", get("sizes").unwrap_or("8,16,32,64,128"), parse_usize)?;
    let real_or = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_real(k, v));
    let cfg = SweepConfig {
        kind,
        deltas,
        sizes,
        theta: real_or("theta", PI / 2.0)?,
        r: real_or("r", 1.0)?,
        filling: real_or("filling", 0.5)?,
        fill_lo: real_or("fill_lo", 0.35)?,
        fill_hi: real_or("fill_hi", 0.47)?,
        n_step: get("n_step").map_or(Ok(1), |v| parse_usize("n_step", v))?.max(1),
        timing: matches!(get("timing"), Some("true" | "1" | "yes")),
        raw,
    };
    if !(cfg.filling > 0.0 && cfg.filling <= 0.5) || !(cfg.fill_lo > 0.0 && cfg.fill_lo <= cfg.fill_hi && cfg.fill_hi <= 0.5) {
        return Err(config_error("fillings must lie in (0, 1/2]".into()));
    }
    Ok(cfg)
}

/// Weights with the given Δ, r and θ.
pub fn params_at(delta: f64, r: f64, theta: f64) -> Result<ModelParams, Error> {
    let base = ModelParams::symmetric(delta)?;
    if base.regime == sixvertex::Regime::MinusInfinity {
        return Ok(base);
    }
    from_aux(r, base.zeta, theta, base.regime)
}

#[derive(Debug, Clone, Copy)]
struct Point {
    delta: f64,
    n_sites: usize,
    n: usize,
}

fn points(cfg: &SweepConfig) -> Vec<Point> {
    let mut out = Vec::new();
    for &delta in &cfg.deltas {
        match cfg.kind {
            Kind::FreeEnergy => out.push(Point { delta, n_sites: 0, n: 0 }),
            Kind::Diagnostics => {
                for &nn in &cfg.sizes {
                    let n = ((cfg.filling * nn as f64).floor() as usize).min(nn / 2);
                    out.push(Point { delta, n_sites: nn, n });
                }
            }
            Kind::Correction => {
                for &nn in &cfg.sizes {
                    let lo = (cfg.fill_lo * nn as f64).ceil() as usize;
                    let hi = ((cfg.fill_hi * nn as f64).floor() as usize).min(nn / 2);
                    out.extend((lo..=hi).step_by(cfg.n_step).map(|n| Point { delta, n_sites: nn, n }));
                }
            }
        }
    }
    out
}

fn header(cfg: &SweepConfig) -> Vec<&'static str> {
    let mut h = match cfg.kind {
        Kind::Diagnostics => vec!["delta", "theta", "N", "n", "m_interlacement", "diff_max", "margin", "residual_norm", "iterations"],
        Kind::Correction => vec!["delta", "theta", "N", "n", "x", "f", "f_N", "deficit", "prediction", "ratio", "residual_norm"],
        Kind::FreeEnergy => vec!["delta", "theta", "a", "b", "c", "f", "method"],
    };
    if cfg.timing {
        h.push("wall_time_s");
    }
    h
}

fn evaluate(cfg: &SweepConfig, pt: Point, opts: &SolverOptions) -> Result<Vec<Cell>, Error> {
    let start = Instant::now();
    let p = params_at(pt.delta, cfg.r, cfg.theta)?;
    let mut row = vec![Cell::from(pt.delta), Cell::from(cfg.theta)];
    match cfg.kind {
        Kind::FreeEnergy => {
            let r = free_energy::free_energy_closed(&p)?;
            row.extend([Cell::from(p.a), Cell::from(p.b), Cell::from(p.c), Cell::from(r.f_infinite), Cell::from(r.method.name())]);
        }
        Kind::Diagnostics => {
            let s = bethe_discrete::solve(pt.n_sites, pt.n, &p, opts)?;
            let d = commands::diagnostics(&s, opts.nodes)?;
            row.extend([
                Cell::from(pt.n_sites),
                Cell::from(pt.n),
                Cell::from(d.m),
                Cell::from(d.diff_max),
                Cell::from(d.margin),
                Cell::from(s.residual_norm),
                Cell::from(s.iterations),
            ]);
        }
        Kind::Correction => {
            let s = bethe_discrete::solve(pt.n_sites, pt.n, &p, opts)?;
            let f_n = free_energy::finite_size_f(&s, opts.nodes)?.f_n;
            let f = free_energy::free_energy_closed(&p)?.f_infinite;
            let pred = free_energy::quantitative_correction(&p, pt.n, pt.n_sites).unwrap_or(f64::NAN);
            row.extend([
                Cell::from(pt.n_sites),
                Cell::from(pt.n),
                Cell::from(1.0 - 2.0 * pt.n as f64 / pt.n_sites as f64),
                Cell::from(f),
                Cell::from(f_n),
                Cell::from(f - f_n),
                Cell::from(pred),
                Cell::from((f - f_n) / pred),
                Cell::from(s.residual_norm),
            ]);
        }
    }
    if cfg.timing {
        row.push(Cell::from(start.elapsed().as_secs_f64()));
    }
    Ok(row)
}

/// Runs the sweep on a pool of `jobs` workers (0 picks the default); rows keep input order.
pub fn run(cfg: &SweepConfig, opts: &SolverOptions, jobs: usize) -> Result<Table, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| config_error(format!("cannot start worker pool: {e}")))?;
    let pts = points(cfg);
    let rows: Vec<Result<Vec<Cell>, Error>> = pool.install(|| pts.par_iter().map(|&pt| evaluate(cfg, pt, opts)).collect());
    let mut t = Table::new(&header(cfg));
    t.meta("command", "sweep");
    for (k, v) in &cfg.raw {
        t.meta(k, v);
    }
    t.meta("tol", format_real(opts.tol));
    t.meta("nodes", opts.nodes);
    t.meta("max_iter", opts.max_iter);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

use serde_json::{json, Value};
use sixvertex::bethe_discrete::{self, BetheState, SolverOptions};
use sixvertex::model_params::{self, ModelParams};
use sixvertex::{free_energy, transfer_oracle, Error};

use crate::table::{Cell, Table};

/// Tolerances used by `oracle` to decide pass or fail.
pub const ORACLE_REL_TOL: f64 = 1e-9;
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-8;

pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug)]
pub enum Output {
    Json(Value),
    Table(Table),
    /// Emitted, then the process exits with the code.
    Failed(Value, i32),
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
    pub detail: Option<Value>,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_convergence() { EXIT_CONVERGENCE } else { EXIT_DOMAIN };
        let detail = match &e {
            Error::NewtonFailed {
                iterations,
                residual,
                last_iterate,
            } => Some(json!({
                "iterations": iterations,
                "residual": residual,
                "last_iterate": last_iterate,
            })),
            _ => None,
        };
        CliError {
            code,
            message: e.to_string(),
            detail,
        }
    }
}

pub type CmdResult = Result<Output, CliError>;

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn params_json(p: &ModelParams) -> Value {
    json!({
        "a": num(p.a), "b": num(p.b), "c": num(p.c),
        "delta": num(p.delta), "regime": p.regime.name(),
        "r": num(p.r), "zeta": num(p.zeta), "theta": num(p.theta),
    })
}

pub fn regime(a: f64, b: f64, c: f64) -> CmdResult {
    let p = model_params::to_aux(a, b, c)?;
    Ok(Output::Json(params_json(&p)))
}

pub struct Diagnostics {
    pub m: f64,
    pub diff_max: f64,
    pub margin: f64,
}

pub fn diagnostics(state: &BetheState, nodes: usize) -> Result<Diagnostics, Error> {
    if state.n == 0 {
        return Ok(Diagnostics { m: 0.0, diff_max: 0.0, margin: f64::NAN });
    }
    let density = state.density(nodes)?;
    let m = bethe_discrete::interlacement_m(state, &density);
    let (_, diff_max) = bethe_discrete::diff_diagnostic(state, &density);
    let margin = bethe_discrete::diag_dominance_margin(state, &density);
    Ok(Diagnostics { m, diff_max, margin })
}

pub fn solve(n_sites: usize, n: usize, a: f64, b: f64, c: f64, opts: &SolverOptions) -> CmdResult {
    let p = model_params::to_aux(a, b, c)?;
    let state = bethe_discrete::solve(n_sites, n, &p, opts)?;
    let k = state.kernels();
    let res = bethe_discrete::residual_t(&state.roots, n_sites, &k);
    let d = diagnostics(&state, opts.nodes)?;
    let mut t = Table::new(&["index", "I", "lambda", "residual"]);
    t.meta("command", "solve");
    t.meta("N", n_sites);
    t.meta("n", n);
    t.meta("delta", crate::table::format_real(p.delta));
    t.meta("regime", p.regime.name());
    t.meta("tol", crate::table::format_real(opts.tol));
    t.meta("nodes", opts.nodes);
    t.meta("iterations", state.iterations);
    t.meta("residual_norm", crate::table::format_real(state.residual_norm));
    t.meta("q", crate::table::format_real(state.q_frak));
    t.meta("m_interlacement", crate::table::format_real(d.m));
    t.meta("diff_max", crate::table::format_real(d.diff_max));
    t.meta("margin", crate::table::format_real(d.margin));
    for (i, ((l, r), ii)) in state.roots.iter().zip(&res).zip(bethe_discrete::ground_integers(n)).enumerate() {
        t.push(vec![Cell::from(i + 1), Cell::from(ii), Cell::from(*l), Cell::from(*r)]);
    }
    Ok(Output::Table(t))
}

pub fn free_energy_cmd(a: f64, b: f64, c: f64) -> CmdResult {
    let p = model_params::to_aux(a, b, c)?;
    let r = free_energy::free_energy_closed(&p)?;
    Ok(Output::Json(json!({
        "params": params_json(&p),
        "f": num(r.f_infinite),
        "method": r.method.name(),
        "error_estimate": num(r.error_estimate),
    })))
}

pub fn finite_size(n_sites: usize, n: usize, a: f64, b: f64, c: f64, opts: &SolverOptions) -> CmdResult {
    let p = model_params::to_aux(a, b, c)?;
    let state = bethe_discrete::solve(n_sites, n, &p, opts)?;
    let r = free_energy::finite_size_f(&state, opts.nodes)?;
    let f = free_energy::free_energy_closed(&p)?.f_infinite;
    Ok(Output::Json(json!({
        "N": n_sites, "n": n,
        "params": params_json(&p),
        "log_lambda": num(r.log_lambda),
        "f_N": num(r.f_n),
        "branch": r.branch.name(),
        "condensed": num(r.condensed),
        "gap": num(r.gap),
        "f_infinite": num(f),
        "correction_prediction": r.correction_prediction.map_or(Value::Null, num),
        "residual_norm": num(state.residual_norm),
    })))
}

pub fn correction(n_sites: usize, n: usize, a: f64, b: f64, c: f64, opts: &SolverOptions) -> CmdResult {
    let p = model_params::to_aux(a, b, c)?;
    let state = bethe_discrete::solve(n_sites, n, &p, opts)?;
    let f_n = free_energy::finite_size_f(&state, opts.nodes)?.f_n;
    let f = free_energy::free_energy_closed(&p)?.f_infinite;
    let measured = f - f_n;
    let (prediction, window) = match free_energy::quantitative_correction(&p, n, n_sites) {
        Ok(v) => (num(v), Value::Null),
        Err(e @ Error::Range(_)) => (Value::Null, Value::from(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let ratio = prediction.as_f64().map_or(Value::Null, |v| num(measured / v));
    Ok(Output::Json(json!({
        "N": n_sites, "n": n,
        "params": params_json(&p),
        "x": num(1.0 - 2.0 * n as f64 / n_sites as f64),
        "measured": num(measured),
        "prediction": prediction,
        "ratio": ratio,
        "coefficient": num(free_energy::correction_coefficient(&p)?),
        "outside_window": window,
    })))
}

pub fn oracle(n_sites: usize, n: usize, a: f64, b: f64, c: f64, opts: &SolverOptions) -> CmdResult {
    let p = model_params::to_aux(a, b, c)?;
    let state = bethe_discrete::solve(n_sites, n, &p, opts)?;
    let block = transfer_oracle::build_block(n_sites, n, p.a, p.b, p.c)?;
    let pf = transfer_oracle::largest_eigenvalue(&block)?;
    let (log_l, branch) = free_energy::log_eigenvalue(&state)?;
    let lambda = log_l.exp();
    let rel = ((lambda - pf.value) / pf.value).abs();
    let pf_positive = pf.vector.iter().all(|&x| x > 0.0);
    let mut pass = rel < ORACLE_REL_TOL && pf_positive;
    let mut report = json!({
        "N": n_sites, "n": n,
        "params": params_json(&p),
        "lambda_bethe": num(lambda),
        "lambda_dense": num(pf.value),
        "relative_error": num(rel),
        "branch": branch.name(),
        "spectral_gap": num(pf.gap),
        "pf_positive": pf_positive,
    });
    if n <= transfer_oracle::MAX_BETHE_VECTOR_ROOTS {
        let chk = transfer_oracle::verify_eigenrelation(&block, &state)?;
        pass &= chk.residual < ORACLE_RESIDUAL_TOL && chk.min_entry > 0.0;
        report["residual"] = num(chk.residual);
        report["overlap"] = num(chk.overlap);
        report["bethe_vector_positive"] = Value::from(chk.min_entry > 0.0);
    }
    report["pass"] = Value::from(pass);
    Ok(if pass { Output::Json(report) } else { Output::Failed(report, EXIT_VERIFY) })
}

//! Command implementations. Each returns the JSON report to print and
//! whether the run should count as a failure.

use std::fs;
use std::path::Path;

use nogo_core::channels::GaussianChannel;
use nogo_core::choi::lemma1_check;
use nogo_core::entanglement::{entanglement_degradation, finite_r_degradation, ExtendedReal};
use nogo_core::gecc::{effective_channel, GECCode};
use nogo_core::search::{search, SearchConfig, SearchMethod, DEFAULT_R_MAX, VIOLATION_TOL};
use nogo_core::sweep::{sweep_report, Family, SweepConfig};
use serde_json::{json, Value};

use crate::output::{envelope, resolve_output, sweep_csv, write_text};
use crate::spec::ChannelSpec;
use crate::CliError;

pub struct Report {
    pub json: Value,
    /// A code lowered D, or a stage failed.
    pub failed: bool,
}

/// `{"M": .., "N": ..}` of a channel.
fn matrices(ch: &GaussianChannel) -> Value {
    serde_json::to_value(ch).expect("channels serialize")
}

fn channel_json(spec: &ChannelSpec) -> Value {
    let mut v = matrices(spec.channel());
    v["spec"] = spec.text().into();
    v
}

fn extended(v: ExtendedReal) -> Value {
    serde_json::to_value(v).expect("extended reals serialize")
}

fn core_err(e: nogo_core::Error) -> CliError {
    match e {
        nogo_core::Error::InvalidSearch(msg) | nogo_core::Error::Parse(msg) => CliError::Usage(msg),
        other => CliError::Failure(other.to_string()),
    }
}

fn check_r(r: f64) -> Result<(), CliError> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--r must be a finite squeezing >= 0, got {r}")))
    }
}

pub fn degradation(spec: &ChannelSpec) -> Result<Report, CliError> {
    let rep = entanglement_degradation(spec.channel()).map_err(core_err)?;
    let mut body = serde_json::to_value(rep).expect("degradation reports serialize");
    body["capacity_upper_bound"] = extended(rep.capacity_upper_bound());
    body["channel"] = channel_json(spec);
    Ok(Report {
        json: envelope("degradation", body),
        failed: false,
    })
}

/// Runs one stage, turning its error into a tagged JSON entry.
fn stage(result: Result<Value, nogo_core::Error>, failed: &mut Vec<&'static str>, name: &'static str) -> Value {
    match result {
        Ok(mut v) => {
            v["ok"] = true.into();
            v
        }
        Err(e) => {
            failed.push(name);
            json!({ "ok": false, "error": e.to_string() })
        }
    }
}

pub struct VerifyArgs {
    pub r: f64,
    pub n: usize,
    pub budget: usize,
    pub seed: u64,
    pub method: SearchMethod,
}

pub fn verify(spec: &ChannelSpec, a: &VerifyArgs) -> Result<Report, CliError> {
    check_r(a.r)?;
    let ch: &GaussianChannel = spec.channel();
    let mut failed = Vec::new();

    let closed = entanglement_degradation(ch);
    let closed_d = closed.as_ref().ok().map(|c| c.d);
    let closed_json = stage(
        closed.map(|c| {
            let mut v = serde_json::to_value(c).expect("degradation reports serialize");
            v["capacity_upper_bound"] = extended(c.capacity_upper_bound());
            v
        }),
        &mut failed,
        "closed_form",
    );

    let finite_json = stage(
        finite_r_degradation(ch, a.r).map(|nu2| {
            let d = nu2.min(1.0);
            json!({
                "r": a.r,
                "nu_minus_sq": nu2,
                "D": d,
                "convergence_residual": closed_d.map(|c| (d - c).abs()),
            })
        }),
        &mut failed,
        "finite_r",
    );

    let lemma_json = stage(
        lemma1_check(ch, a.r).map(|l| {
            json!({
                "r": l.r,
                "lemma1_residual": l.residual,
                "m_residual": l.m_residual,
                "n_residual": l.n_residual,
                "M_tel": l.teleported.m_tel,
                "N_tel": l.teleported.n_tel,
            })
        }),
        &mut failed,
        "lemma1",
    );

    let cfg = SearchConfig::new(a.n, a.budget, a.seed, a.method);
    let found = search(ch, &cfg);
    if let Err(nogo_core::Error::InvalidSearch(msg)) = &found {
        return Err(CliError::Usage(msg.clone()));
    }
    let violated = found.as_ref().map(|r| r.violated).unwrap_or(false);
    let search_json = stage(
        found.map(|r| {
            json!({
                "best_D": r.best_d,
                "baseline_D": r.baseline_d,
                "violated": r.violated,
                "evaluations": r.evaluations,
                "skipped": r.skipped,
                "best_det_N_GC": r.best_det_n_gc,
                "best_M_GC": r.best_m_gc,
                "best_N_GC": r.best_n_gc,
            })
        }),
        &mut failed,
        "search",
    );

    let body = json!({
        "channel": channel_json(spec),
        "parameters": {
            "r": a.r, "n": a.n, "budget": a.budget, "seed": a.seed,
            "method": a.method.to_string(), "r_max": DEFAULT_R_MAX, "violation_tol": VIOLATION_TOL,
        },
        "entanglement_breaking": nogo_core::channels::is_entanglement_breaking(ch),
        "stages": {
            "closed_form": closed_json,
            "finite_r": finite_json,
            "lemma1": lemma_json,
            "search": search_json,
        },
        "failed_stages": failed,
        "violated": violated,
    });
    Ok(Report {
        failed: violated || !failed.is_empty(),
        json: envelope("verify", body),
    })
}

pub fn lemma1(spec: &ChannelSpec, r: f64) -> Result<Report, CliError> {
    check_r(r)?;
    let l = lemma1_check(spec.channel(), r).map_err(core_err)?;
    let body = json!({
        "channel": channel_json(spec),
        "r": r,
        "lemma1_residual": l.residual,
        "m_residual": l.m_residual,
        "n_residual": l.n_residual,
        "M_tel": l.teleported.m_tel,
        "N_tel": l.teleported.n_tel,
    });
    Ok(Report {
        json: envelope("lemma1-check", body),
        failed: false,
    })
}

pub fn gecc_eval(code_path: &Path, spec: &ChannelSpec) -> Result<Report, CliError> {
    let text = fs::read_to_string(code_path).map_err(|e| CliError::io(code_path, e))?;
    let code: GECCode = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", code_path.display())))?;
    let eff = effective_channel(&code, spec.channel()).map_err(core_err)?;
    let d_gc = entanglement_degradation(&eff).map_err(core_err)?;
    let base = entanglement_degradation(spec.channel()).map_err(core_err)?;
    let violated = d_gc.d < base.d - VIOLATION_TOL;
    let eff_json = matrices(&eff);
    let body = json!({
        "channel": channel_json(spec),
        "code": { "path": code_path.display().to_string(), "n": code.n() },
        "M_GC": eff_json["M"],
        "N_GC": eff_json["N"],
        "det_N_GC": eff.det_n(),
        "D_GC": d_gc.d,
        "baseline_D": base.d,
        "violated": violated,
    });
    Ok(Report {
        json: envelope("gecc-eval", body),
        failed: violated,
    })
}

pub struct SearchArgs<'a> {
    pub n: usize,
    pub budget: usize,
    pub seed: u64,
    pub method: SearchMethod,
    pub out: Option<&'a Path>,
}

pub fn nogo_search(spec: &ChannelSpec, a: &SearchArgs) -> Result<Report, CliError> {
    let cfg = SearchConfig::new(a.n, a.budget, a.seed, a.method);
    let res = search(spec.channel(), &cfg).map_err(core_err)?;
    let mut body = serde_json::to_value(&res).expect("search results serialize");
    body["channel"] = channel_json(spec);
    body["budget"] = a.budget.into();
    body["r_max"] = cfg.r_max.into();
    body["violation_tol"] = VIOLATION_TOL.into();
    body["skipped_fraction"] = res.skipped_fraction().into();
    let json = envelope("nogo-search", body);
    let target = a.out.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(crate::output::OUT_DIR_ENV)
            .map(|_| resolve_output(None, &format!("nogo-search-seed{}.json", a.seed)))
    });
    if let Some(path) = target {
        write_text(&path, &(crate::output::to_pretty(&json) + "\n"))?;
    }
    Ok(Report {
        failed: res.violated,
        json,
    })
}

pub struct SweepArgs<'a> {
    pub family: Family,
    pub grid: &'a [f64],
    pub out: Option<&'a Path>,
    pub config: SweepConfig,
}

pub fn sweep(a: &SweepArgs) -> Result<Report, CliError> {
    let rows = sweep_report(a.family, a.grid, &a.config).map_err(core_err)?;
    let path = resolve_output(a.out, &format!("sweep-{}.csv", a.family));
    write_text(&path, &sweep_csv(&rows, a.config.r)?)?;
    let violated = rows.iter().any(|r| r.violated == Some(true));
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    let body = json!({
        "family": a.family.to_string(),
        "rows": rows.len(),
        "row_errors": errors,
        "violated": violated,
        "out": path.display().to_string(),
        "parameters": {
            "n": a.config.n, "budget": a.config.budget, "seed": a.config.seed,
            "method": a.config.method.to_string(), "r": a.config.r,
        },
    });
    Ok(Report {
        json: envelope("sweep", body),
        failed: violated,
    })
}

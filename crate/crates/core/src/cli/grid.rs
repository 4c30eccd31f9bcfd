//! Parallel sweeps over grids of initial data.

use rayon::prelude::*;

use crate::model::{CriticalTime, ModelParams};
use crate::ode::IntegratorConfig;

use super::config::{ConfigError, MethodChoice};
use super::eval::{asymptotic, bound_pair, error_tag, evaluate};
use super::output::GridRow;

/// Evaluate one node; failures are recorded in `status`, never propagated.
pub fn evaluate_row(
    p: &ModelParams,
    which: CriticalTime,
    method: MethodChoice,
    x: f64,
    y: f64,
    cfg: &IntegratorConfig,
) -> GridRow {
    let mut row = GridRow {
        x,
        y,
        value: None,
        method: None,
        err_estimate: None,
        lower: None,
        upper: None,
        asymptotic: None,
        status: String::new(),
    };
    match evaluate(p, which, method, x, y, cfg) {
        Ok(e) => {
            row.value = Some(e.primary.value);
            row.method = Some(e.primary.method.as_str().to_string());
            row.err_estimate = Some(e.primary.err_estimate);
            row.asymptotic = asymptotic(p, which, x, y);
            row.status = match bound_pair(p, which, x, y) {
                Some(Ok((lo, hi))) => {
                    row.lower = Some(lo);
                    row.upper = Some(hi);
                    "ok".into()
                }
                Some(Err(e)) => format!("ok:bounds-{}", error_tag(&e)),
                None => "ok".into(),
            };
        }
        Err(e) => row.status = format!("error:{}", error_tag(&e)),
    }
    row
}

/// Evaluate every node on a pool of `threads` workers (all cores when `None`).
/// Row `k` always corresponds to `nodes[k]`.
pub fn sweep(
    p: &ModelParams,
    which: CriticalTime,
    method: MethodChoice,
    nodes: &[(f64, f64)],
    cfg: &IntegratorConfig,
    threads: Option<usize>,
) -> Result<Vec<GridRow>, ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| ConfigError(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        nodes
            .par_iter()
            .map(|&(x, y)| evaluate_row(p, which, method, x, y, cfg))
            .collect()
    }))
}

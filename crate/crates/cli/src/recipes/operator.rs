use std::f64::consts::FRAC_PI_2;

use fraclap_core::spaces::slope;
use fraclap_core::{apply_fractional_laplacian, build_grid, Profile, Region};

use super::{invalid, params, RunResult};
use crate::config::Config;
use crate::oracle::window_correction;
use crate::output::{num, row, Artifact, CheckOutcome, Manifest, RunOutput};

/// `(-Δ)^s` of a windowed `cos(kx)` at the window center, against `|k|^{2s}`
/// and against the symbol corrected for the window.
pub fn symbol(config: &Config) -> RunResult {
    if config.dim() != 1 {
        return Err(invalid("the symbol check runs in one dimension".into()));
    }
    let s_values = config.s_values(&[0.3, 0.5, 0.7]);
    let ks = config.symbol.k.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let levels = config.levels(&[1025, 2049, 4097, 8193]);
    let flat = config.symbol.flat.unwrap_or(3.0);
    let support = config.symbol.support.unwrap_or(11.0);
    let extent = config.symbol.extent.unwrap_or(24.0);
    if !(0.0 < flat && flat < support && support < 0.5 * extent) {
        return Err(invalid(format!(
            "symbol window needs 0 < flat < support < extent/2, got {flat}, {support}, {extent}"
        )));
    }
    if let Some(&n) = levels.iter().find(|&&n| n % 2 == 0) {
        return Err(invalid(format!("symbol levels need an odd node count for a center node, got {n}")));
    }
    let omega = Region::interval(-0.5 * extent, 0.5 * extent);
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    let mut checks = Vec::new();
    for &s in &s_values {
        let p = params(1, s)?;
        for &k in &ks {
            let symbol = k.abs().powf(2.0 * s);
            let reference = symbol + window_correction(s, k, flat, support);
            let wave = Profile::Wave { k, phase: FRAC_PI_2, flat, support };
            let mut errors = Vec::new();
            let mut finest_rel = f64::NAN;
            for &n in &levels {
                let g = build_grid(1, &[[-extent, extent]], n, omega.clone())?;
                let value = apply_fractional_laplacian(&wave.sample_on_omega(&g), &p)?.values()[n / 2];
                let rel = (value - symbol).abs() / symbol;
                let err = (value - reference).abs();
                rows.push(row(&[
                    num(s),
                    num(k),
                    n.to_string(),
                    num(g.h()),
                    num(value),
                    num(symbol),
                    num(rel),
                    num(reference),
                    num(err),
                ]));
                errors.push(err);
                finest_rel = rel;
            }
            let logs: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).log2()).collect();
            let order = if logs.len() >= 2 { -slope(&logs) } else { f64::NAN };
            orders.push(row(&[num(s), num(k), num(order)]));
            checks.push(CheckOutcome::at_most(
                Some(2),
                format!("symbol s={s} k={k} relative error"),
                finest_rel,
                0.01,
                format!("center node vs |k|^(2s) at n={}", levels.last().copied().unwrap_or(0)),
            ));
            checks.push(CheckOutcome::at_least(
                Some(2),
                format!("symbol s={s} k={k} order"),
                order,
                1.5,
                "least-squares order against the window-corrected symbol",
            ));
        }
    }
    let artifacts = vec![
        Artifact::csv("symbol.csv", "s,k,n,h,value,symbol,rel_error,reference,reference_error", rows),
        Artifact::csv("orders.csv", "s,k,order", orders),
    ];
    let mut manifest = Manifest::new(&config.experiment, config.seed, 1).region("omega", &omega);
    manifest.s = s_values;
    manifest.n = levels;
    manifest.source = Some(format!("wave: cos(kx) window flat={flat} support={support}"));
    Ok(RunOutput::new(manifest, artifacts, checks))
}

//! Tabular output: long-format CSV for sweep data, JSON run summaries, and
//! the reproducibility manifest. All formatting is deterministic so identical
//! runs produce byte-identical files.

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::{
    BufferSweepResult, HistoryResult, LandscapeResult, RamzCurve, RamzVariant, SensitivityResult,
    TierPoint,
};
use crate::pulse::Waveform;
use crate::rb::RbPoint;
use crate::units::rad_to_deg;

/// Fixed-format float for CSV cells.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.10e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.into()
    }
}

/// Render a header and rows as RFC-4180-style CSV with LF line endings.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_text(path, &csv_string(header, rows))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Reproducibility record written next to every output. Deliberately free of
/// timestamps so identical runs produce identical manifests.
pub fn manifest(command: &str, config_hash: &str, seed: u64) -> Value {
    json!({
        "format_version": 1,
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "package": {
            "name": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
        },
    })
}

pub const WAVEFORM_HEADER: [&str; 3] = ["t_ns", "flux_ideal_phi0", "flux_seen_phi0"];

/// Sample table of a waveform, optionally next to its distorted image.
pub fn waveform_rows(ideal: &Waveform, seen: Option<&Waveform>) -> Vec<Vec<String>> {
    (0..ideal.len())
        .map(|k| {
            let t = ideal.t0 + k as f64 * ideal.dt;
            vec![
                num(t * 1e9),
                num(ideal.samples[k]),
                seen.map_or_else(|| "nan".into(), |w| num(w.value_at(t))),
            ]
        })
        .collect()
}

pub const LANDSCAPE_HEADER: [&str; 6] =
    ["theta_f_deg", "lambda_2", "phi_2q_deg", "l1", "eps", "error"];

pub fn landscape_rows(result: &LandscapeResult) -> Vec<Vec<String>> {
    result
        .points
        .iter()
        .map(|p| {
            vec![
                num(rad_to_deg(p.theta_f)),
                num(p.lambda_2),
                num(rad_to_deg(p.phi_2q)),
                num(p.l1),
                num(p.eps),
                p.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

pub const BUFFER_HEADER: [&str; 3] = ["buffer_ns", "l1", "phi_2q_deg"];

pub fn buffer_rows(result: &BufferSweepResult) -> Vec<Vec<String>> {
    result
        .points
        .iter()
        .map(|p| vec![num(p.buffer * 1e9), num(p.l1), num(rad_to_deg(p.phi_2q))])
        .collect()
}

pub const SENSITIVITY_HEADER: [&str; 3] = ["variant", "offset_uphi0", "phi_2q_deg"];

pub fn sensitivity_rows(curves: &[(&str, &SensitivityResult)]) -> Vec<Vec<String>> {
    curves
        .iter()
        .flat_map(|(label, r)| {
            r.points.iter().map(|&(offset, phi)| {
                vec![label.to_string(), num(offset * 1e6), num(rad_to_deg(phi))]
            })
        })
        .collect()
}

pub const HISTORY_HEADER: [&str; 3] = ["scenario", "t_sep_ns", "phi_01_deg"];

pub fn history_rows(results: &[(&str, &HistoryResult)]) -> Vec<Vec<String>> {
    results
        .iter()
        .flat_map(|(label, r)| {
            r.points.iter().map(|&(t_sep, phi)| {
                vec![label.to_string(), num(t_sep * 1e9), num(rad_to_deg(phi))]
            })
        })
        .collect()
}

pub const RAMZ_HEADER: [&str; 4] = ["sigma_uphi0", "variant", "duration_ns", "coherence"];

pub fn ramz_rows(curves: &[(f64, &RamzCurve)]) -> Vec<Vec<String>> {
    curves
        .iter()
        .flat_map(|&(sigma, curve)| {
            let variant = match curve.variant {
                RamzVariant::Ramsey => "ramz",
                RamzVariant::Echo => "echoz",
            };
            curve.points.iter().map(move |p| {
                vec![
                    num(sigma * 1e6),
                    variant.to_string(),
                    num(p.duration * 1e9),
                    num(p.coherence),
                ]
            })
        })
        .collect()
}

pub const RB_HEADER: [&str; 5] = ["variant", "n_cliffords", "seed", "m0", "p_x1"];

pub fn rb_rows(points: &[(&str, &[RbPoint])]) -> Vec<Vec<String>> {
    points
        .iter()
        .flat_map(|(variant, batch)| {
            batch.iter().map(|p| {
                vec![
                    variant.to_string(),
                    p.n_cliffords.to_string(),
                    p.seed_index.to_string(),
                    num(p.m0),
                    num(p.p_x1),
                ]
            })
        })
        .collect()
}

pub const MZ_HEADER: [&str; 3] = ["phi_tilde_deg", "l1", "phi_2q_deg"];

pub fn mz_rows(points: &[(f64, f64, f64)]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|&(phi_tilde, l1, phi_2q)| {
            vec![num(rad_to_deg(phi_tilde)), num(l1), num(rad_to_deg(phi_2q))]
        })
        .collect()
}

pub const ABLATION_HEADER: [&str; 4] = ["tier", "eps", "l1", "phi_2q_deg"];

pub fn ablation_rows(points: &[TierPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                p.tier.name().to_string(),
                num(p.eps),
                num(p.l1),
                num(rad_to_deg(p.phi_2q)),
            ]
        })
        .collect()
}

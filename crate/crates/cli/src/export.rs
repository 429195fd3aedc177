//! Output serialization: CSV tables, JSON documents, and run manifests.
//!
//! Every file export is accompanied by a `<out>.manifest.json` recording
//! SHA-256 digests of the config and the produced bytes.  A rerun that
//! would change an already-manifested output refuses to overwrite unless
//! forced, so figure data cannot drift silently under an unchanged name.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// One row of a spectrum-style table.  Optional cells export as empty CSV
/// fields and JSON nulls.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub delta: f64,
    pub time: f64,
    pub alpha_s: f64,
    pub alpha_fwm: Option<f64>,
    pub delta_alpha: Option<f64>,
}

/// Fully rendered output of one mode, ready to serialize either way.
pub struct Rendered {
    pub csv: String,
    pub json: serde_json::Value,
}

pub const SPECTRUM_HEADER: &str = "delta,time,alpha_S,alpha_FWM,delta_alpha";

fn sig(v: f64) -> String {
    format!("{v:.11e}")
}

fn opt_sig(v: Option<f64>) -> String {
    v.map(sig).unwrap_or_default()
}

/// Renders spectrum rows with the shared header.  When `gamma_mhz` is set,
/// physical-unit columns are appended: the detuning in MHz and the time in
/// microseconds (time is in units of 1/gamma, so t_us = t / (2 pi f_MHz)).
pub fn render_spectrum(
    rows: &[SpectrumRow],
    gamma_mhz: Option<f64>,
    extra_json: serde_json::Value,
) -> Rendered {
    let mut csv = String::from(SPECTRUM_HEADER);
    if gamma_mhz.is_some() {
        csv.push_str(",delta_mhz,time_us");
    }
    csv.push('\n');
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}",
            sig(r.delta),
            sig(r.time),
            sig(r.alpha_s),
            opt_sig(r.alpha_fwm),
            opt_sig(r.delta_alpha),
        ));
        if let Some(f) = gamma_mhz {
            csv.push_str(&format!(
                ",{},{}",
                sig(r.delta * f),
                sig(r.time / (2.0 * std::f64::consts::PI * f)),
            ));
        }
        csv.push('\n');
    }
    let json = serde_json::json!({ "rows": rows, "details": extra_json });
    Rendered { csv, json }
}

/// Renders a plain numeric table with a caller-chosen header.
pub fn render_table(
    header: &str,
    rows: &[Vec<Option<f64>>],
    extra_json: serde_json::Value,
) -> Rendered {
    let mut csv = String::from(header);
    csv.push('\n');
    let mut json_rows = Vec::with_capacity(rows.len());
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| opt_sig(*v)).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
        json_rows.push(serde_json::json!(r));
    }
    let json = serde_json::json!({
        "columns": header.split(',').collect::<Vec<_>>(),
        "rows": json_rows,
        "details": extra_json,
    });
    Rendered { csv, json }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub mode: String,
    pub format: String,
    pub config_path: String,
    pub config_sha256: String,
    pub output_path: String,
    pub output_sha256: String,
    pub tool_version: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes the rendered output to `out` (or stdout when `None`) and, for
/// file targets, a manifest next to it.
pub fn write_output(
    rendered: &Rendered,
    format: crate::Format,
    out: Option<&Path>,
    mode: &str,
    config_path: &Path,
    force: bool,
) -> Result<(), CliError> {
    let body = match format {
        crate::Format::Csv => rendered.csv.clone(),
        crate::Format::Json => {
            let mut s = serde_json::to_string_pretty(&rendered.json)
                .map_err(|e| CliError::Io(format!("JSON encoding failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    let Some(out) = out else {
        print!("{body}");
        std::io::stdout()
            .flush()
            .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        return Ok(());
    };

    let new_digest = sha256_hex(body.as_bytes());
    let mpath = manifest_path(out);
    if mpath.exists() && !force {
        let text = std::fs::read_to_string(&mpath)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", mpath.display())))?;
        let previous: RunManifest = serde_json::from_str(&text).map_err(|e| {
            CliError::Io(format!(
                "{} is not a readable manifest ({e}); pass --force to replace it",
                mpath.display()
            ))
        })?;
        if previous.output_sha256 != new_digest {
            return Err(CliError::Io(format!(
                "{} already describes different data for {}; pass --force to overwrite",
                mpath.display(),
                out.display()
            )));
        }
    }

    std::fs::write(out, &body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    let config_bytes = std::fs::read(config_path)
        .map_err(|e| CliError::Io(format!("cannot reread {}: {e}", config_path.display())))?;
    let manifest = RunManifest {
        mode: mode.to_string(),
        format: format.name().to_string(),
        config_path: config_path.display().to_string(),
        config_sha256: sha256_hex(&config_bytes),
        output_path: out.display().to_string(),
        output_sha256: new_digest,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("manifest encoding failed: {e}")))?;
    manifest_text.push('\n');
    std::fs::write(&mpath, manifest_text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", mpath.display())))?;
    Ok(())
}

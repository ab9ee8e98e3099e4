//! Result persistence: a schema-versioned JSON document plus flat CSV tables
//! (comma-separated, LF line endings, header row, 17 significant digits).

use super::run::{HarnessError, Payload, ResultRecord};
use crate::torus::grid_points;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Formats a float for tabular output with full roundtrip precision.
fn cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| HarnessError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn norm_header(exponents: &[f64]) -> String {
    let mut header = String::from("t");
    for r in exponents {
        let _ = write!(header, ",norm_h{r}");
    }
    header
}

fn norms_csv(times: &[f64], series: &[&[f64]], exponents: &[f64]) -> String {
    let mut out = norm_header(exponents);
    out.push('\n');
    for (k, &t) in times.iter().enumerate() {
        out.push_str(&cell(t));
        for s in series {
            out.push(',');
            out.push_str(&cell(s[k]));
        }
        out.push('\n');
    }
    out
}

/// Writes `result.json` and the payload's tabular files into `dir`, creating
/// it if needed. Returns the written paths. Byte-reproducible across reruns of
/// the same configuration, except for the duration field in the JSON.
pub fn emit(record: &ResultRecord, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    let mut json = serde_json::to_string_pretty(record)?;
    json.push('\n');
    written.push(write_file(dir, "result.json", &json)?);

    match &record.payload {
        Payload::Spectrum(p) => {
            let mut csv =
                String::from("index,wavenumber,analytic,numeric_re,numeric_im,relative_error\n");
            for (k, row) in p.rows.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{k},{},{},{},{},{}",
                    row.wavenumber,
                    cell(row.analytic),
                    cell(row.numeric_re),
                    cell(row.numeric_im),
                    cell(row.relative_error),
                );
            }
            written.push(write_file(dir, "spectrum.csv", &csv)?);
        }
        Payload::Evolve(p) => {
            let series: Vec<&[f64]> = p.norms.iter().map(|s| s.as_slice()).collect();
            written.push(write_file(
                dir,
                "norms.csv",
                &norms_csv(&p.times, &series, &p.norm_exponents),
            )?);
            let mut state = String::from("x,f\n");
            for (x, &v) in grid_points(p.final_state.len()).zip(&p.final_state) {
                let _ = writeln!(state, "{},{}", cell(x), cell(v));
            }
            written.push(write_file(dir, "final_state.csv", &state)?);
        }
        Payload::Decay(p) => {
            written.push(write_file(
                dir,
                "norms.csv",
                &norms_csv(&p.times, &[&p.norms], &[p.norm_exponent]),
            )?);
        }
        Payload::Instability(p) => {
            let mut csv = String::from("amplitude,predicted_time,escape_time,relative_gap\n");
            for s in &p.samples {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    cell(s.amplitude),
                    cell(s.predicted_time),
                    optional_cell(s.escape_time),
                    optional_cell(s.relative_gap),
                );
            }
            written.push(write_file(dir, "escapes.csv", &csv)?);
        }
        Payload::Picard(p) => {
            let mut csv = String::from("run,iteration,defect,contraction_factor\n");
            let mut push_run = |name: &str, run: &super::run::PicardRunPayload| {
                for (k, &d) in run.defects.iter().enumerate() {
                    let factor = (k > 0).then(|| run.contraction_factors.get(k - 1).copied()).flatten();
                    let _ = writeln!(csv, "{name},{},{},{}", k + 1, cell(d), optional_cell(factor));
                }
            };
            push_run("full", &p.full);
            if let Some(halved) = &p.halved {
                push_run("halved", halved);
            }
            written.push(write_file(dir, "defects.csv", &csv)?);
        }
        Payload::Semiflow(p) => {
            let csv = format!(
                "s,t,dt,norm_exponent,defect,halving_estimate,defect_over_estimate,aligned\n{},{},{},{},{},{},{},{}\n",
                cell(p.split_s),
                cell(p.split_t),
                cell(p.dt),
                cell(p.norm_exponent),
                cell(p.defect),
                cell(p.halving_estimate),
                optional_cell(p.defect_over_estimate),
                p.aligned,
            );
            written.push(write_file(dir, "semiflow.csv", &csv)?);
        }
    }

    Ok(written)
}

/// One-line human summary of a result, for CLI output.
pub fn summary(record: &ResultRecord) -> String {
    match &record.payload {
        Payload::Spectrum(p) => format!(
            "spectrum: dimension {}, bound {:.6e}, verdict {}, max relative error {:.3e}",
            p.dimension, p.spectral_bound, p.verdict, p.max_relative_error
        ),
        Payload::Evolve(p) => format!(
            "evolve: {} records to t = {:.3}, final sup {:.6e}, mean drift {:.3e}",
            p.times.len(),
            p.times.last().copied().unwrap_or(0.0),
            p.final_sup_norm,
            p.mean_drift
        ),
        Payload::Decay(p) => format!(
            "decay: fitted rate {:.6} vs reference {:.6} (relative error {:.3e}, r² {:.6})",
            p.fit.slope, p.reference_rate, p.relative_rate_error, p.fit.r_squared
        ),
        Payload::Instability(p) => {
            let escaped = p.samples.iter().filter(|s| s.escape_time.is_some()).count();
            format!(
                "instability: {}/{} seeds escaped radius {:.3e}, growth rate {:.4}, conclusive: {}",
                escaped,
                p.samples.len(),
                p.escape_radius,
                p.growth_rate,
                p.conclusive
            )
        }
        Payload::Picard(p) => {
            let first = p
                .full
                .first_contraction
                .map_or_else(|| "n/a".to_string(), |c| format!("{c:.3e}"));
            let improves = p
                .contraction_improves
                .map_or_else(|| "n/a".to_string(), |b| b.to_string());
            format!(
                "picard: {} iterations (converged: {}), first contraction {first}, halved improves: {improves}",
                p.full.iterations, p.full.converged
            )
        }
        Payload::Semiflow(p) => format!(
            "semiflow: defect {:.3e}, halving estimate {:.3e}, aligned: {}",
            p.defect, p.halving_estimate, p.aligned
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::ExperimentConfig;
    use super::super::run::run;
    use super::*;

    const DECAY_SMALL: &str = r#"
        schema_version = 1

        [problem]
        kind = "pe1"
        permeability = 1.0
        viscosity = 1.0
        delta_rho = 2.0

        [grid]
        n = 32
        quadrature_m = 32

        [time]
        scheme = "rk4"
        dt = 1e-2
        t_end = 0.2
        record_every = 5

        [initial]
        modes = [{ mode = 1, cos = 0.01 }]

        [experiment]
        kind = "decay"
        norm_exponent = 1.0
    "#;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("muskat-emit-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn emit_writes_json_and_csv() {
        let config = ExperimentConfig::from_toml_str(DECAY_SMALL, &[]).unwrap();
        let record = run(&config).unwrap();
        let dir = temp_dir("decay");
        let written = emit(&record, &dir).unwrap();
        let names: Vec<_> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["result.json", "norms.csv"]);

        let json = std::fs::read_to_string(&written[0]).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["experiment"], "decay");
        assert!(doc["payload"]["fit"]["slope"].is_f64());

        let csv = std::fs::read_to_string(&written[1]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,norm_h1"));
        let first = lines.next().unwrap();
        let fields: Vec<_> = first.split(',').collect();
        assert_eq!(fields.len(), 2);
        // 17 significant digits in scientific notation.
        assert!(fields[1].contains('e') && fields[1].contains('.'));
        assert_eq!(csv.lines().count(), 1 + record_len(&record));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    fn record_len(record: &crate::harness::run::ResultRecord) -> usize {
        match &record.payload {
            Payload::Decay(p) => p.times.len(),
            _ => panic!("decay payload expected"),
        }
    }

    #[test]
    fn tabular_output_is_byte_reproducible() {
        let config = ExperimentConfig::from_toml_str(DECAY_SMALL, &[]).unwrap();
        let dir_a = temp_dir("repro-a");
        let dir_b = temp_dir("repro-b");
        emit(&run(&config).unwrap(), &dir_a).unwrap();
        emit(&run(&config).unwrap(), &dir_b).unwrap();
        let a = std::fs::read(dir_a.join("norms.csv")).unwrap();
        let b = std::fs::read(dir_b.join("norms.csv")).unwrap();
        assert_eq!(a, b);
        // The JSON differs only in the duration field.
        let ja: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir_a.join("result.json")).unwrap())
                .unwrap();
        let jb: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir_b.join("result.json")).unwrap())
                .unwrap();
        assert_eq!(ja["payload"], jb["payload"]);
        assert_eq!(ja["config"], jb["config"]);
        std::fs::remove_dir_all(&dir_a).unwrap();
        std::fs::remove_dir_all(&dir_b).unwrap();
    }
}

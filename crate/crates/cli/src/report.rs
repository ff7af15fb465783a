//! Plot-data assembly across result directories.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::ExperimentKind;
use crate::run::{fmt_q, ResultRecord, RunError};

fn load_records(dir: &Path) -> Result<Vec<ResultRecord>, RunError> {
    let path = dir.join("records.json");
    let text = std::fs::read_to_string(&path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text).map_err(crate::config::ConfigError::Parse)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.12e}"))
}

/// Merge run directories into plot-ready tables under `out_dir`.
///
/// All records must come from compatible experiment kinds: memory and
/// oracle-check records feed the Q and zeta tables, transduce and contour
/// records feed the contour table; mixing the two families is an error.
pub fn emit_report(dirs: &[&Path], out_dir: &Path) -> Result<(), RunError> {
    if dirs.is_empty() {
        return Err(RunError::Report("no input record directories".into()));
    }
    let mut records = Vec::new();
    for dir in dirs {
        records.extend(load_records(dir)?);
    }
    if records.is_empty() {
        return Err(RunError::Report("input directories hold no records".into()));
    }
    let memory_like = |k: ExperimentKind| {
        matches!(k, ExperimentKind::Memory | ExperimentKind::OracleCheck)
    };
    let all_memory = records.iter().all(|r| memory_like(r.kind));
    let all_transduce = records.iter().all(|r| !memory_like(r.kind));
    if !(all_memory || all_transduce) {
        return Err(RunError::Report(
            "mixed experiment kinds: memory-family and transduction-family records \
             cannot share a report"
            .into(),
        ));
    }

    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let write = |name: &str, contents: &str| -> Result<(), RunError> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        })
    };

    let mut summary = String::new();
    let _ = writeln!(summary, "report over {} records", records.len());
    let _ = writeln!(summary, "# units: times in 1/omega_m, rates in omega_m");

    if all_memory {
        let mut by_q = records.clone();
        by_q.sort_by(|a, b| a.q_m.0.partial_cmp(&b.q_m.0).unwrap());
        let mut out = String::from("# units: times in 1/omega_m, rates in omega_m\n");
        out.push_str("q_m,nbar,delta_t,mean,median,q05,q95,iqr,fidelity_of_mean,analytic\n");
        for r in &by_q {
            let _ = writeln!(
                out,
                "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                fmt_q(r.q_m.0),
                r.nbar,
                r.delta_t,
                r.mean_fidelity,
                r.median_fidelity,
                r.q05,
                r.q95,
                r.iqr,
                r.fidelity_of_mean,
                opt(r.analytic_fidelity),
            );
        }
        write("fidelity_vs_q.csv", &out)?;

        let mut with_zeta: Vec<&ResultRecord> =
            records.iter().filter(|r| r.zeta.is_some()).collect();
        with_zeta.sort_by(|a, b| a.zeta.partial_cmp(&b.zeta).unwrap());
        let mut out = String::from("# units: times in 1/omega_m, rates in omega_m\n");
        out.push_str("zeta,zeta_o,nbar,q_m,mean,median,q05,q95,iqr\n");
        for r in &with_zeta {
            let _ = writeln!(
                out,
                "{:.12e},{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.zeta.unwrap(),
                r.zeta_o.unwrap(),
                r.nbar,
                fmt_q(r.q_m.0),
                r.mean_fidelity,
                r.median_fidelity,
                r.q05,
                r.q95,
                r.iqr,
            );
        }
        write("fidelity_vs_zeta.csv", &out)?;
        let _ = writeln!(
            summary,
            "memory family: {} records -> fidelity_vs_q.csv, fidelity_vs_zeta.csv ({} zeta rows)",
            records.len(),
            with_zeta.len()
        );
    } else {
        let mut grid = records.clone();
        grid.sort_by(|a, b| {
            (a.area_pi, a.separation_pct)
                .partial_cmp(&(b.area_pi, b.separation_pct))
                .unwrap()
        });
        let mut out = String::from("# units: times in 1/omega_m, rates in omega_m\n");
        out.push_str("area_pi,separation_pct,nbar,q_m,mean,median,fidelity_of_mean\n");
        for r in &grid {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.12e},{:.12e},{:.12e}",
                opt(r.area_pi),
                opt(r.separation_pct),
                r.nbar,
                fmt_q(r.q_m.0),
                r.mean_fidelity,
                r.median_fidelity,
                r.fidelity_of_mean,
            );
        }
        write("contour.csv", &out)?;
        let _ = writeln!(
            summary,
            "transduction family: {} records -> contour.csv",
            records.len()
        );
    }

    for r in &records {
        let _ = writeln!(
            summary,
            "  {} Q_m={} nbar={}: mean {:.6}, median {:.6}",
            r.kind,
            fmt_q(r.q_m.0),
            r.nbar,
            r.mean_fidelity,
            r.median_fidelity
        );
    }
    write("summary.txt", &summary)
}

//! Cartesian sweep expansion with order-independent per-point seeding.

use serde::{Deserialize, Serialize};

use crate::config::{point_seed, ExperimentConfig, ExperimentKind, TransductionParams};
use crate::run::{run_point, PointOutput, RunError};
use eomsim_core::TransductionKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

const AXIS_NAMES: &[&str] = &[
    "q_m",
    "nbar",
    "delta_t",
    "omega_mu",
    "area_pi",
    "separation_pct",
];

fn apply_axis(config: &mut ExperimentConfig, name: &str, value: f64) -> Result<(), RunError> {
    match name {
        "q_m" => config.physics.q_m = crate::config::Quality(value),
        "nbar" => config.physics.nbar = value,
        "delta_t" => config.protocol.delta_t = value,
        "omega_mu" => config.protocol.omega_mu = value,
        "area_pi" | "separation_pct" => {
            let t = config.protocol.transduction.get_or_insert(TransductionParams {
                kind: TransductionKind::Overlapping,
                area_pi: 1.0,
                separation_pct: 0.0,
            });
            if name == "area_pi" {
                t.area_pi = value;
            } else {
                t.separation_pct = value;
            }
        }
        other => {
            return Err(RunError::Report(format!(
                "unknown sweep axis {other:?} (known: {})",
                AXIS_NAMES.join(", ")
            )))
        }
    }
    Ok(())
}

/// Expand axes into the Cartesian product of coordinate assignments.
pub fn cartesian(axes: &[SweepAxis]) -> Result<Vec<Vec<(String, f64)>>, RunError> {
    for axis in axes {
        if axis.values.is_empty() {
            return Err(RunError::Report(format!("sweep axis {:?} is empty", axis.name)));
        }
    }
    let mut points: Vec<Vec<(String, f64)>> = vec![vec![]];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for base in &points {
            for &v in &axis.values {
                let mut p = base.clone();
                p.push((axis.name.clone(), v));
                next.push(p);
            }
        }
        points = next;
    }
    Ok(points)
}

fn axes_for(config: &ExperimentConfig) -> Result<Vec<SweepAxis>, RunError> {
    match config.kind {
        ExperimentKind::Contour => {
            let grid = config
                .contour
                .as_ref()
                .ok_or_else(|| RunError::Report("contour grid missing".into()))?;
            Ok(vec![
                SweepAxis {
                    name: "area_pi".into(),
                    values: grid.areas_pi.clone(),
                },
                SweepAxis {
                    name: "separation_pct".into(),
                    values: grid.separations_pct.clone(),
                },
            ])
        }
        _ => Ok(Vec::new()),
    }
}

/// Run every sweep point of the config. A config without sweep axes is a
/// single point seeded directly by the master seed.
pub fn execute(config: &ExperimentConfig) -> Result<Vec<PointOutput>, RunError> {
    let axes = axes_for(config)?;
    let points = cartesian(&axes)?;
    let mut outputs = Vec::with_capacity(points.len());
    for coords in &points {
        let mut point_config = config.clone();
        for (name, value) in coords {
            apply_axis(&mut point_config, name, *value)?;
        }
        point_config.validate()?;
        let seed = if coords.is_empty() {
            config.numerics.master_seed
        } else {
            let borrowed: Vec<(&str, f64)> =
                coords.iter().map(|(n, v)| (n.as_str(), *v)).collect();
            point_seed(config.numerics.master_seed, &borrowed)
        };
        let transduction = point_config.protocol.transduction.clone();
        let out = run_point(&point_config, transduction.as_ref(), coords, seed)?;
        outputs.push(out);
    }
    Ok(outputs)
}

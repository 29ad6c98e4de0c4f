use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::io_err;
use crate::fis::write_surface_csv;
use crate::tabular::write_csv;
use crate::Result;

use super::{Profile, ReleaseReport, RunOutcome};

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(io_err(path))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(io_err(path))
}

/// Per-instance utility and effectiveness, one row per instance.
pub fn write_instances_csv<W: Write>(report: &ReleaseReport, writer: W) -> Result<()> {
    let released = report.released_id();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "id", "sweep", "grid_index", "replicate", "epsilon", "delta", "u_original", "u_perturbed", "u_loss",
        "leak_fraction", "p_n", "e_loss", "effectiveness", "released",
    ])?;
    for i in &report.instances {
        w.write_record([
            i.id.to_string(),
            i.id.sweep.to_string(),
            i.id.grid_index.to_string(),
            i.id.replicate.to_string(),
            i.epsilon.to_string(),
            i.delta.to_string(),
            i.utility.u_original.to_string(),
            i.utility.u_perturbed.to_string(),
            i.utility.u_loss.to_string(),
            i.linkage.leak_fraction.to_string(),
            i.linkage.p_n.map_or(String::new(), |p| p.to_string()),
            i.e_loss.to_string(),
            i.effectiveness.to_string(),
            (Some(i.id) == released).to_string(),
        ])?;
    }
    w.flush().map_err(io_err("<instances csv>"))?;
    Ok(())
}

pub fn write_grid_csv<W: Write>(report: &ReleaseReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "eps_norm", "delta_norm", "epsilon", "delta", "inferred_pif"])?;
    for (k, p) in report.grid.iter().flat_map(|g| g.pairs.iter()).enumerate() {
        w.write_record([
            k.to_string(),
            p.eps_norm.to_string(),
            p.delta_norm.to_string(),
            p.epsilon.to_string(),
            p.delta.to_string(),
            p.inferred_pif.to_string(),
        ])?;
    }
    w.flush().map_err(io_err("<grid csv>"))?;
    Ok(())
}

/// PIF per attribute with its role after refinement.
pub fn write_pif_csv<W: Write>(profile: &Profile, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["attribute", "pif", "role"])?;
    for (a, p) in &profile.pif.per_attribute {
        let role = if profile.refinement.quasi.contains(a) { "quasi" } else { "sensitive" };
        w.write_record([a.as_str(), &p.to_string(), role])?;
    }
    w.flush().map_err(io_err("<pif csv>"))?;
    Ok(())
}

/// `csf.csv`, `pif.json` and `refinement.json`.
pub fn write_profile_artifacts(profile: &Profile, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csf = dir.join("csf.csv");
    profile.csf.write_csv(create(&csf)?)?;
    let pif = dir.join("pif.json");
    write_json(&pif, &profile.pif)?;
    let refinement = dir.join("refinement.json");
    write_json(&refinement, &profile.refinement)?;
    Ok(vec![csf, pif, refinement])
}

/// The report, the released table when there is one, and CSV exports of
/// the CSF heatmap, PIF bars, instance scores, grid and rule surface.
pub fn write_release_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let report = &outcome.report;
    let mut written = Vec::new();

    let path = dir.join("report.json");
    write_json(&path, report)?;
    written.push(path);

    if let Some(released) = &outcome.released {
        let path = dir.join("released.csv");
        write_csv(released, create(&path)?)?;
        written.push(path);
    }
    if let Some(profile) = outcome.profile() {
        let path = dir.join("csf.csv");
        profile.csf.write_csv(create(&path)?)?;
        written.push(path);
        let path = dir.join("pif.csv");
        write_pif_csv(&profile, create(&path)?)?;
        written.push(path);
    }
    let path = dir.join("instances.csv");
    write_instances_csv(report, create(&path)?)?;
    written.push(path);

    let path = dir.join("grid.csv");
    write_grid_csv(report, create(&path)?)?;
    written.push(path);

    let path = dir.join("surface.csv");
    write_surface_csv(&report.surface, create(&path)?)?;
    written.push(path);
    Ok(written)
}

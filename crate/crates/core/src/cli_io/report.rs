//! CSV rows for the per-slice diagnostics.

use crate::diagnostics::SliceReport;
use crate::error::Result;
use crate::integrator::MonitorRow;
use std::io::Write;
use std::path::Path;

pub const NORMS_HEADER: &str = "tau,s_eta,s_jinv2,s_top,s_vort,s_vort_top,s_norm,s_gamma,sobolev_eta_h3,sobolev_v_h3,weighted_F_ring_1,weighted_F_ring_2,p_max";
pub const ENERGY_HEADER: &str = "tau,E_0,E_1,E_2,E_3,E_4,total,positive,min_integrand";
pub const VORTICITY_HEADER: &str = "tau,vort_sv_norm,identity44_residual";

fn g(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn norms_row(r: &SliceReport) -> String {
    let n = &r.norms;
    let b = r.blocks.as_array();
    let mut cols = vec![g(r.tau)];
    cols.extend(b.iter().map(|x| g(*x)));
    cols.push(g(n.s_norm));
    cols.push(n.s_gamma.map(g).unwrap_or_default());
    for key in [("eta", 3usize), ("v", 3)] {
        cols.push(g(n.sobolev[&(key.0.to_string(), key.1)]));
    }
    for k in [1u32, 2] {
        cols.push(g(n.weighted[&("F_ring".to_string(), k)]));
    }
    cols.push(n.p_max_used.to_string());
    cols.join(",")
}

pub fn energy_row(r: &SliceReport) -> String {
    let e = &r.energy;
    let mut cols = vec![g(r.tau)];
    cols.extend(e.e_p.iter().map(|x| x.map(g).unwrap_or_default()));
    cols.push(g(e.total));
    cols.push(e.positive.to_string());
    cols.push(g(e.min_integrand));
    cols.join(",")
}

pub fn vorticity_row(r: &SliceReport) -> String {
    format!("{},{},{}", g(r.tau), g(r.vorticity.vort_sv_norm), g(r.vorticity.identity44_residual))
}

pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_monitor(path: &Path, rows: &[MonitorRow]) -> Result<()> {
    write_csv(path, MonitorRow::HEADER, rows.iter().map(MonitorRow::csv))
}

/// All three report files for a series of slices under `dir`.
pub fn write_slice_reports(dir: &Path, reports: &[SliceReport]) -> Result<()> {
    write_csv(&dir.join("norms.csv"), NORMS_HEADER, reports.iter().map(norms_row))?;
    write_csv(&dir.join("energy.csv"), ENERGY_HEADER, reports.iter().map(energy_row))?;
    write_csv(&dir.join("vorticity.csv"), VORTICITY_HEADER, reports.iter().map(vorticity_row))
}

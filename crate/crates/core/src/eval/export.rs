use std::io::{self, Write};

use super::SessionReport;
use crate::mesh::TetMesh;

pub fn write_trials_csv(report: &SessionReport, mut w: impl Write) -> io::Result<()> {
    writeln!(
        w,
        "repeat,fold,seed,n_train,n_test,rmse_mm,rmse_pct,mean_lpe_mm,mean_max_lpe_mm,mean_max_lpe_pct,updates,final_cost"
    )?;
    for t in &report.trials {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.repeat,
            t.fold,
            t.seed,
            t.n_train,
            t.n_test,
            t.rmse_mm,
            t.rmse_pct,
            t.mean_lpe_mm,
            t.mean_max_lpe_mm,
            t.mean_max_lpe_pct,
            t.updates,
            t.final_cost
        )?;
    }
    w.flush()
}

pub fn write_samples_csv(report: &SessionReport, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "repeat,fold,sample,mean_lpe_mm,max_lpe_mm,max_vertex,max_vertex_displacement_mm")?;
    for s in &report.samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.repeat, s.fold, s.sample, s.mean_mm, s.max_mm, s.max_vertex, s.max_vertex_displacement_mm
        )?;
    }
    w.flush()
}

/// Per-trial curves followed by the trial mean (`repeat` and `fold` = `mean`).
pub fn write_curve_csv(report: &SessionReport, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "repeat,fold,iteration,test_rmse_mm")?;
    for t in &report.trials {
        for (i, v) in &t.curve {
            writeln!(w, "{},{},{i},{v}", t.repeat, t.fold)?;
        }
    }
    for (i, v) in &report.mean_curve {
        writeln!(w, "mean,mean,{i},{v}")?;
    }
    w.flush()
}

/// Legacy ASCII VTK unstructured grid of the deformed mesh.
///
/// `free_disp` holds `3N` free-vertex displacements (fixed vertices stay in
/// place); each scalar field has one value per free vertex and is written as
/// zero on fixed vertices.
pub fn write_vtk(
    mesh: &TetMesh,
    free_disp: &[f64],
    scalars: &[(&str, &[f64])],
    title: &str,
    mut w: impl Write,
) -> io::Result<()> {
    let n = mesh.free_count();
    let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidInput, m);
    if free_disp.len() != 3 * n {
        return Err(invalid(format!("expected {} displacement values, got {}", 3 * n, free_disp.len())));
    }
    if let Some((name, _)) = scalars.iter().find(|(_, v)| v.len() != n) {
        return Err(invalid(format!("scalar field {name} must have {n} values")));
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertex_count())?;
    for (v, p) in mesh.vertices().iter().enumerate() {
        let d = mesh.free_index(v).map(|f| &free_disp[3 * f..3 * f + 3]).unwrap_or(&[0.0; 3]);
        writeln!(w, "{} {} {}", p.x + d[0], p.y + d[1], p.z + d[2])?;
    }
    let nt = mesh.tets().len();
    writeln!(w, "CELLS {nt} {}", 5 * nt)?;
    for t in mesh.tets() {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "10")?;
    }
    if !scalars.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.vertex_count())?;
        for (name, values) in scalars {
            writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for v in 0..mesh.vertex_count() {
                writeln!(w, "{}", mesh.free_index(v).map_or(0.0, |f| values[f]))?;
            }
        }
    }
    w.flush()
}

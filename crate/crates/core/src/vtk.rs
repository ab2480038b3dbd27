//! Legacy ASCII VTK output of the discrete fields, for visual inspection.

use crate::assembly::DofMap;
use crate::basis::{self, ElementBases};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::quadrature::tet_rule;
use nalgebra::{DVector, Vector3};
use std::io::Write;
use std::path::Path;

/// Write an unstructured-grid file with the displacement sampled at mesh
/// vertices (averaged over incident cells) and cellwise stress invariants
/// (mean trace and von Mises).
pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    u: Option<(&ElementBases, &DofMap, &DVector<f64>)>,
    sigma: Option<(&ElementBases, &DofMap, &DVector<f64>)>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "tdnns fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    writeln!(out, "CELLS {} {}", mesh.n_cells(), 5 * mesh.n_cells())?;
    for cell in &mesh.cells {
        writeln!(out, "4 {} {} {} {}", cell[0], cell[1], cell[2], cell[3])?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in 0..mesh.n_cells() {
        writeln!(out, "10")?;
    }

    if let Some((bases, map, coeffs)) = u {
        // vertex values averaged over incident cells (the field is only
        // tangentially continuous)
        let mut acc = vec![(Vector3::<f64>::zeros(), 0usize); mesh.n_vertices()];
        for c in 0..mesh.n_cells() {
            for (lv, &gv) in mesh.cells[c].iter().enumerate() {
                let p = Vector3::from_row_slice(&crate::mesh::REF_VERTS[lv]);
                let val = basis::eval_v_fe(bases, &map.cell_dofs[c], coeffs, c, &p);
                acc[gv].0 += val;
                acc[gv].1 += 1;
            }
        }
        writeln!(out, "POINT_DATA {}", mesh.n_vertices())?;
        writeln!(out, "VECTORS displacement double")?;
        for (sum, count) in acc {
            let v = sum / count.max(1) as f64;
            writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
        }
    }

    if let Some((bases, map, coeffs)) = sigma {
        let rule = tet_rule(2)?;
        let pts: Vec<Vector3<f64>> = (0..rule.len()).map(|q| rule.point_xyz(q)).collect();
        writeln!(out, "CELL_DATA {}", mesh.n_cells())?;
        writeln!(out, "SCALARS stress_trace double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        let mut mises = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            let tables = basis::sigma_tables(bases, c, &pts);
            let mut mean = crate::reference::SymTensor3::ZERO;
            for q in 0..pts.len() {
                let mut val = crate::reference::SymTensor3::ZERO;
                for (j, &g) in map.cell_dofs[c].iter().enumerate() {
                    val += tables[j * pts.len() + q] * coeffs[g];
                }
                mean += val * (rule.weights[q] * 6.0);
            }
            let tr = mean.trace();
            let dev = {
                let mut d = mean;
                d.0[0] -= tr / 3.0;
                d.0[1] -= tr / 3.0;
                d.0[2] -= tr / 3.0;
                d
            };
            mises.push((1.5 * dev.frob_dot(&dev)).sqrt());
            writeln!(out, "{tr}")?;
        }
        writeln!(out, "SCALARS von_mises double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for m in mises {
            writeln!(out, "{m}")?;
        }
    }
    Ok(())
}

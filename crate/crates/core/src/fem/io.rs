use std::fmt::Write as _;
use std::path::Path;

use super::mesh::TriMesh;
use crate::error::{HotsError, Result};

/// Write nodal columns as CSV: `node_id,x1,x2,<names...>`.
pub fn write_nodal_csv(path: &Path, mesh: &TriMesh, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut s = String::from("node_id,x1,x2");
    for (name, col) in columns {
        if col.len() != mesh.n_nodes() {
            return Err(HotsError::Io(format!("column {name} has {} values for {} nodes", col.len(), mesh.n_nodes())));
        }
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = write!(s, "{i},{},{}", p[0], p[1]);
        for (_, col) in columns {
            let _ = write!(s, ",{}", col[i]);
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Read the value columns of a nodal CSV written by [`write_nodal_csv`].
pub fn read_nodal_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| HotsError::Io(format!("{} is empty", path.display())))?;
    let names: Vec<String> = header.split(',').skip(3).map(str::to_string).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() + 3 {
            return Err(HotsError::Io(format!("{}:{}: wrong column count", path.display(), ln + 2)));
        }
        for (c, f) in fields[3..].iter().enumerate() {
            cols[c].push(f.parse().map_err(|e| HotsError::Io(format!("{}:{}: {e}", path.display(), ln + 2)))?);
        }
    }
    Ok((names, cols))
}

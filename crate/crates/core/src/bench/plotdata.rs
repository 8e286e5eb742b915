use std::io::Write;

use super::io::TreeDump;
use super::BenchError;
use crate::hybrid::SolutionPair;

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Format(format!("csv: {e}"))
}

/// Writes the state trace of a plan as `t,j,x1,...,xn`, one row per sample.
pub fn write_trace<W: Write>(psi: &SolutionPair, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "j".to_string()];
    header.extend((1..=psi.state().dim()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (time, x) in psi.state().samples() {
        let mut row = vec![time.t.to_string(), time.j.to_string()];
        row.extend(x.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Format(e.to_string()))
}

/// Writes one `x,y,parent_x,parent_y` row per tree edge, projecting states on
/// their first two coordinates (a one-dimensional state uses `y = 0`).
pub fn write_segments<W: Write>(dump: &TreeDump, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "parent_x", "parent_y"])
        .map_err(csv_err)?;
    let xy = |s: &[f64]| (s[0], s.get(1).copied().unwrap_or(0.0));
    for v in &dump.vertices {
        let Some(p) = v.parent else { continue };
        let parent =
            dump.vertices.iter().find(|u| u.id == p).ok_or_else(|| {
                BenchError::Format(format!("vertex {} has missing parent {p}", v.id))
            })?;
        let (x, y) = xy(&v.state);
        let (px, py) = xy(&parent.state);
        w.write_record([x, y, px, py].map(|c| c.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| BenchError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Vertex;

    #[test]
    fn empty_tree_has_header_only() {
        let mut buf = Vec::new();
        write_segments(&TreeDump::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,parent_x,parent_y\n");
    }

    #[test]
    fn one_edge() {
        let v = |id, parent, state: Vec<f64>| Vertex {
            id,
            state,
            cost: 0.0,
            parent,
            active: true,
        };
        let dump = TreeDump {
            vertices: vec![v(0, None, vec![1.0, 2.0]), v(3, Some(0), vec![1.5, -1.0])],
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_segments(&dump, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,parent_x,parent_y\n1.5,-1,1,2\n"
        );
    }
}

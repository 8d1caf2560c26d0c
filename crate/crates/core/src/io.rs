//! Text container for grid functions and measure sequences.
//!
//! The first line is a JSON header naming the grid; the rest is CSV with
//! one row per node:
//!
//! ```text
//! {"format":"steinweiss-grid-function","version":1,"grid":{...},"frames":2}
//! node,frame_0,frame_1
//! 0,0.125,0.0
//! ...
//! ```
//!
//! Nodes are listed shell by shell from the inside out, in the grid's own
//! order; values are written in shortest round-trip form.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDescriptor, GridFunction, QuadratureGrid};

pub const FORMAT: &str = "steinweiss-grid-function";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerHeader {
    pub format: String,
    pub version: u32,
    pub grid: GridDescriptor,
    pub frames: usize,
}

pub fn write_frames<W: Write>(mut out: W, frames: &[GridFunction]) -> Result<()> {
    let Some(first) = frames.first() else {
        return Err(Error::Format("nothing to write".into()));
    };
    let grid = first.grid();
    if frames.iter().any(|f| f.grid().descriptor() != grid.descriptor()) {
        return Err(Error::Format("frames live on different grids".into()));
    }
    let header = ContainerHeader { format: FORMAT.into(), version: VERSION, grid: grid.descriptor(), frames: frames.len() };
    let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(out, "{json}")?;
    let mut csv = csv::Writer::from_writer(out);
    let mut names = vec!["node".to_string()];
    names.extend((0..frames.len()).map(|k| format!("frame_{k}")));
    csv.write_record(&names).map_err(csv_error)?;
    for i in 0..grid.node_count() {
        let mut row = vec![i.to_string()];
        row.extend(frames.iter().map(|f| f.values()[i].to_string()));
        csv.write_record(&row).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_frames<R: BufRead>(mut input: R) -> Result<Vec<GridFunction>> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: ContainerHeader = serde_json::from_str(line.trim()).map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Format(format!("unsupported container {} v{}", header.format, header.version)));
    }
    let grid: Arc<QuadratureGrid> = header.grid.build()?;
    let mut values = vec![Vec::with_capacity(grid.node_count()); header.frames];
    let mut csv = csv::Reader::from_reader(input);
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() != header.frames + 1 {
            return Err(Error::Format(format!("row {i} has {} fields, expected {}", record.len(), header.frames + 1)));
        }
        let node: usize = record[0].parse().map_err(|_| Error::Format(format!("row {i}: bad node index")))?;
        if node != i {
            return Err(Error::Format(format!("row {i} lists node {node}")));
        }
        for (k, column) in values.iter_mut().enumerate() {
            let v: f64 = record[k + 1].parse().map_err(|_| Error::Format(format!("row {i}: bad value {:?}", &record[k + 1])))?;
            column.push(v);
        }
    }
    values.into_iter().map(|v| GridFunction::new(grid.clone(), v)).collect()
}

pub fn save_frames(path: &Path, frames: &[GridFunction]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_frames(std::io::BufWriter::new(file), frames)
}

pub fn load_frames(path: &Path) -> Result<Vec<GridFunction>> {
    let file = std::fs::File::open(path)?;
    read_frames(std::io::BufReader::new(file))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpaceSpec;
    use crate::grid::build_grid;

    #[test]
    fn round_trip_is_exact() {
        let grid = build_grid(SpaceSpec::heisenberg(1), 4, 4, 0.5, 2.0).unwrap();
        let a = GridFunction::from_fn(grid.clone(), |u| (-u.iter().map(|x| x * x).sum::<f64>()).exp()).unwrap();
        let b = a.scaled(1.0 / 3.0);
        let mut buf = Vec::new();
        write_frames(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_frames(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].values(), a.values());
        assert_eq!(back[1].values(), b.values());
    }

    #[test]
    fn rejects_wrong_format() {
        let text = "{\"format\":\"other\",\"version\":1,\"grid\":{\"spec\":{\"kind\":{\"kind\":\"euclidean\",\"n\":1},\"weight_kind\":\"full_norm\"},\"radial_levels\":4,\"angular_resolution\":4,\"r_min\":0.5,\"r_max\":2.0},\"frames\":1}\nnode,frame_0\n";
        assert!(matches!(read_frames(text.as_bytes()), Err(Error::Format(_))));
    }
}

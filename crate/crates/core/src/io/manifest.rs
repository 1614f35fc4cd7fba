//! Tile manifest CSV: `tile_id,x0,y0,cols,rows,gsd,image_path`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::Tile;

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<Tile>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<Tile>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut tiles = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for (i, rec) in rdr.deserialize::<Tile>().enumerate() {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message: format!("row {}: {message}", i + 1),
        };
        let mut t = rec.map_err(|e| bad(e.to_string()))?;
        if t.cols == 0 || t.rows == 0 || !(t.gsd > 0.0) || !t.x0.is_finite() || !t.y0.is_finite() {
            return Err(bad(format!("tile {} has an empty or invalid footprint", t.tile_id)));
        }
        if !ids.insert(t.tile_id.clone()) {
            return Err(bad(format!("duplicate tile_id {:?}", t.tile_id)));
        }
        // image paths are relative to the manifest
        if let (Some(p), Some(dir)) = (&t.image_path, path.parent()) {
            if p.is_relative() && !dir.as_os_str().is_empty() {
                t.image_path = Some(dir.join(p));
            }
        }
        tiles.push(t);
    }
    Ok(tiles)
}

pub fn format_manifest(tiles: &[Tile]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in tiles {
        w.serialize(t)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

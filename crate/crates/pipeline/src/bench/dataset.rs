//! Samples and the JSONL manifest format.
//!
//! Each manifest line is `{"id", "image_path", "query", "mask_path", "gt_box"?}`;
//! relative paths resolve against the manifest's directory and masks are
//! 8-bit PNGs with 255 as foreground.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pinpoint_core::io::{read_image, read_mask, write_image, write_mask};
use pinpoint_core::{BBox, Image, Mask};

use super::output::write_jsonl;
use super::{BenchError, Scene};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: Image,
    pub query: String,
    pub gt: Mask,
    pub gt_box: Option<BBox>,
    /// Known look-alike masks (synthetic scenes only).
    pub distractors: Vec<Mask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: String,
    pub query: String,
    pub mask_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_box: Option<BBox>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, BenchError> {
    let f = std::fs::File::open(path)
        .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: ManifestEntry = serde_json::from_str(&line).map_err(|e| BenchError::Manifest {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(e);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), BenchError> {
    write_jsonl(path, entries)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads every sample of a manifest; an empty manifest is an error.
pub fn load_dataset(manifest: &Path) -> Result<Vec<Sample>, BenchError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let err = |m: String| BenchError::Manifest {
                line: i + 1,
                message: m,
            };
            let image =
                read_image(&resolve(base, &e.image_path)).map_err(|x| err(x.to_string()))?;
            let gt = read_mask(&resolve(base, &e.mask_path)).map_err(|x| err(x.to_string()))?;
            if gt.height() != image.height() || gt.width() != image.width() {
                return Err(err("mask and image sizes differ".into()));
            }
            Ok(Sample {
                id: e.id,
                image,
                query: e.query,
                gt_box: e.gt_box.or_else(|| gt.bounding_box()),
                gt,
                distractors: Vec::new(),
            })
        })
        .collect()
}

/// Writes images, masks and `manifest.jsonl` under `dir`; returns the manifest path.
pub fn write_suite(dir: &Path, scenes: &[Scene]) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(dir.join("images"))?;
    std::fs::create_dir_all(dir.join("masks"))?;
    let mut entries = Vec::with_capacity(scenes.len());
    for s in scenes {
        let image_path = format!("images/{}.png", s.id);
        let mask_path = format!("masks/{}.png", s.id);
        write_image(&s.image, &dir.join(&image_path)).map_err(|e| BenchError::Io(e.to_string()))?;
        write_mask(&s.target, &dir.join(&mask_path)).map_err(|e| BenchError::Io(e.to_string()))?;
        entries.push(ManifestEntry {
            id: s.id.clone(),
            image_path,
            query: s.query.clone(),
            mask_path,
            gt_box: s.target.bounding_box(),
        });
    }
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}

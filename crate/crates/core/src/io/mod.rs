//! File interchange: PFM and PNG grids, multi-plane stacks, atomic writes.
//!
//! Volumes and feature maps travel as stacks of grayscale PFMs with indexed
//! names (`{prefix}_000.pfm`, `{prefix}_001.pfm`, ...). Every writer goes
//! through [`atomic_write`]: the bytes land in a temp file in the target
//! directory which is then renamed over the destination, so readers never
//! observe a partial file.

pub mod pfm;
pub mod png;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::grid::{FloatMap, Image};

pub use pfm::PfmData;

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` via a unique temp file in the same directory
/// followed by a rename.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tag = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp_name = format!(
        ".{}.tmp-{}-{}",
        file_name.to_string_lossy(),
        std::process::id(),
        tag
    );
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp_path, bytes).map_err(|e| Error::io(&tmp_path, e))?;
    std::fs::rename(&tmp_path, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp_path);
        Error::io(path, e)
    })
}

fn extension_of(path: &Path) -> Result<String> {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .ok_or_else(|| {
            Error::InvalidParameter(format!("path {} has no extension", path.display()))
        })
}

/// Loads an image from PNG or PFM, picked by extension.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    match extension_of(path)?.as_str() {
        "png" => png::load_png(path),
        "pfm" => match pfm::load_pfm(path)? {
            PfmData::Color(img) => Ok(img),
            PfmData::Gray(map) => {
                let (h, w) = (map.height(), map.width());
                Image::new(h, w, 1, map.data().to_vec())
            }
        },
        other => Err(Error::InvalidParameter(format!(
            "unsupported image extension .{other} (use .png or .pfm)"
        ))),
    }
}

/// Saves an image as PNG (8-bit) or PFM, picked by extension.
pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    match extension_of(path)?.as_str() {
        "png" => png::save_png(path, img),
        "pfm" => pfm::store_image(path, img),
        other => Err(Error::InvalidParameter(format!(
            "unsupported image extension .{other} (use .png or .pfm)"
        ))),
    }
}

/// Loads a single-channel PFM map.
pub fn load_floatmap(path: impl AsRef<Path>) -> Result<FloatMap> {
    pfm::load_map(path)
}

/// Stores a single-channel PFM map atomically.
pub fn save_floatmap(path: impl AsRef<Path>, map: &FloatMap) -> Result<()> {
    pfm::store_map(path, map)
}

/// Path of plane `idx` in a stack: `{prefix}_{idx:03}.pfm`.
pub fn plane_path(prefix: impl AsRef<Path>, idx: usize) -> PathBuf {
    let prefix = prefix.as_ref();
    let stem = prefix
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = format!("{stem}_{idx:03}.pfm");
    match prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

/// Writes `planes` as an indexed PFM stack under `prefix`.
pub fn save_plane_stack<'a>(
    prefix: impl AsRef<Path>,
    planes: impl IntoIterator<Item = &'a FloatMap>,
) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (idx, plane) in planes.into_iter().enumerate() {
        let path = plane_path(prefix.as_ref(), idx);
        pfm::store_map(&path, plane)?;
        paths.push(path);
    }
    if paths.is_empty() {
        return Err(Error::InvalidParameter(
            "plane stack must contain at least one plane".to_string(),
        ));
    }
    Ok(paths)
}

/// Reads consecutive `{prefix}_{idx:03}.pfm` planes starting at index 0.
///
/// All planes must share one shape; at least one plane must exist.
pub fn load_plane_stack(prefix: impl AsRef<Path>) -> Result<Vec<FloatMap>> {
    let prefix = prefix.as_ref();
    let mut planes = Vec::new();
    loop {
        let path = plane_path(prefix, planes.len());
        if !path.exists() {
            break;
        }
        let plane = pfm::load_map(&path)?;
        if let Some(first) = planes.first() {
            if !plane.same_shape(first) {
                return Err(Error::ShapeMismatch(format!(
                    "plane {} is {}x{}, stack is {}x{}",
                    planes.len(),
                    plane.height(),
                    plane.width(),
                    first.height(),
                    first.width()
                )));
            }
        }
        planes.push(plane);
    }
    if planes.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no planes found for stack prefix {} (expected {})",
            prefix.display(),
            plane_path(prefix, 0).display()
        )));
    }
    Ok(planes)
}

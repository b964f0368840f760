//! Closed-form distillation of disparity maps and the consistency masks
//! that gate the distilled supervision.
//!
//! A [`StereoSample`] bundles a rectified pair with per-view disparity.
//! [`distill_sample`] refines both disparity maps through the matting
//! solver (guided by the corresponding image), restores their local scale,
//! and computes per-view masks marking pixels where the refined map beats
//! the initial one under both a photometric and a left-right check.
//! [`generate_matted_dataset`] runs the whole thing over a manifest of
//! samples with skip/resume semantics.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{BitMask, FloatMap, Image};
use crate::io::{load_floatmap, load_image, save_floatmap};
use crate::matting::{build_laplacian, local_mean_scale, solve_matted, MattingParams};
use crate::warp::{warp_image, warp_map, WarpSign};

/// Rectified stereo pair with one disparity map per view.
///
/// Both disparity maps use the same convention: non-negative horizontal
/// offsets, with the left map warping right-view content left and vice
/// versa.
#[derive(Clone, Debug)]
pub struct StereoSample {
    pub img_left: Image,
    pub img_right: Image,
    pub disp_left: FloatMap,
    pub disp_right: FloatMap,
}

impl StereoSample {
    pub fn new(
        img_left: Image,
        img_right: Image,
        disp_left: FloatMap,
        disp_right: FloatMap,
    ) -> Result<Self> {
        if !img_left.same_shape(&img_right) {
            return Err(Error::ShapeMismatch(format!(
                "stereo images disagree: {}x{}x{} vs {}x{}x{}",
                img_left.height(),
                img_left.width(),
                img_left.channels(),
                img_right.height(),
                img_right.width(),
                img_right.channels()
            )));
        }
        for (name, d) in [("left", &disp_left), ("right", &disp_right)] {
            if d.height() != img_left.height() || d.width() != img_left.width() {
                return Err(Error::ShapeMismatch(format!(
                    "{name} disparity is {}x{}, images are {}x{}",
                    d.height(),
                    d.width(),
                    img_left.height(),
                    img_left.width()
                )));
            }
            if d.data().iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidData(format!(
                    "{name} disparity contains negative values"
                )));
            }
        }
        Ok(StereoSample {
            img_left,
            img_right,
            disp_left,
            disp_right,
        })
    }

    pub fn height(&self) -> usize {
        self.img_left.height()
    }

    pub fn width(&self) -> usize {
        self.img_left.width()
    }
}

/// Refined maps and their supervision masks, one per view.
#[derive(Clone, Debug)]
pub struct DistillOutput {
    pub matted_left: FloatMap,
    pub matted_right: FloatMap,
    pub mask_left: BitMask,
    pub mask_right: BitMask,
}

fn check_matted(sample: &StereoSample, matted: &FloatMap, name: &str) -> Result<()> {
    if matted.height() != sample.height() || matted.width() != sample.width() {
        return Err(Error::ShapeMismatch(format!(
            "{name} matted map is {}x{}, sample is {}x{}",
            matted.height(),
            matted.width(),
            sample.height(),
            sample.width()
        )));
    }
    Ok(())
}

/// Mean absolute difference over channels at one pixel, in f64.
fn photometric_error(a: &Image, b: &Image, y: usize, x: usize) -> f64 {
    let c = a.channels();
    let mut acc = 0.0;
    for ch in 0..c {
        acc += (a.get(y, x, ch) as f64 - b.get(y, x, ch) as f64).abs();
    }
    acc / c as f64
}

/// Per-view consistency mask. `img_self`/`disp_self`/`matted_self` belong
/// to the view the mask is computed for; the `other` inputs are warped
/// into it with `sign`.
#[allow(clippy::too_many_arguments)]
fn consistency_mask(
    img_self: &Image,
    img_other: &Image,
    disp_self: &FloatMap,
    disp_other: &FloatMap,
    matted_self: &FloatMap,
    matted_other: &FloatMap,
    sign: WarpSign,
) -> Result<BitMask> {
    let (recon_m, valid_rm) = warp_image(img_other, matted_self, sign)?;
    let (recon_d, valid_rd) = warp_image(img_other, disp_self, sign)?;
    let (proj_m, valid_pm) = warp_map(matted_other, matted_self, sign)?;
    let (proj_d, valid_pd) = warp_map(disp_other, disp_self, sign)?;

    let (h, w) = (img_self.height(), img_self.width());
    let mut bits = vec![0u8; h * w];
    for y in 0..h {
        for x in 0..w {
            let valid = valid_rm.get(y, x)
                && valid_rd.get(y, x)
                && valid_pm.get(y, x)
                && valid_pd.get(y, x);
            if !valid {
                continue;
            }
            let photo_m = photometric_error(img_self, &recon_m, y, x);
            let photo_d = photometric_error(img_self, &recon_d, y, x);
            let lr_m = (matted_self.get(y, x) as f64 - proj_m.get(y, x) as f64).abs();
            let lr_d = (disp_self.get(y, x) as f64 - proj_d.get(y, x) as f64).abs();
            if photo_m < photo_d && lr_m < lr_d {
                bits[y * w + x] = 1;
            }
        }
    }
    BitMask::new(h, w, bits)
}

/// Left-view supervision mask: 1 where the matted left map reconstructs
/// the left image strictly better than the initial map *and* is strictly
/// more left-right consistent. Both inequalities are strict, so ties (and
/// out-of-bounds warps) give 0.
pub fn distillation_mask(
    sample: &StereoSample,
    matted_left: &FloatMap,
    matted_right: &FloatMap,
) -> Result<BitMask> {
    check_matted(sample, matted_left, "left")?;
    check_matted(sample, matted_right, "right")?;
    consistency_mask(
        &sample.img_left,
        &sample.img_right,
        &sample.disp_left,
        &sample.disp_right,
        matted_left,
        matted_right,
        WarpSign::Left,
    )
}

/// Right-view counterpart of [`distillation_mask`].
pub fn distillation_mask_right(
    sample: &StereoSample,
    matted_left: &FloatMap,
    matted_right: &FloatMap,
) -> Result<BitMask> {
    check_matted(sample, matted_left, "left")?;
    check_matted(sample, matted_right, "right")?;
    consistency_mask(
        &sample.img_right,
        &sample.img_left,
        &sample.disp_right,
        &sample.disp_left,
        matted_right,
        matted_left,
        WarpSign::Right,
    )
}

fn mat_one_view(img: &Image, disp: &FloatMap, params: &MattingParams) -> Result<FloatMap> {
    let peak = disp.max_value();
    if !(peak > 0.0) {
        return Err(Error::InvalidData(
            "disparity map needs a positive value to normalize against".into(),
        ));
    }
    let target = FloatMap::new(
        disp.height(),
        disp.width(),
        disp.data().iter().map(|&v| v / peak).collect(),
    )?;
    let confidence = FloatMap::constant(disp.height(), disp.width(), 1.0)?;
    let laplacian = build_laplacian(img, params)?;
    let solved = solve_matted(&laplacian, &target, &confidence, params)?;
    let matted = FloatMap::new(
        disp.height(),
        disp.width(),
        solved
            .data()
            .iter()
            .map(|&v| (v as f64 * peak as f64) as f32)
            .collect(),
    )?;
    local_mean_scale(&matted, disp)
}

/// Runs closed-form matting on both disparity maps (each guided by its own
/// image), restores local scale against the initial maps, and derives the
/// two supervision masks.
pub fn distill_sample(sample: &StereoSample, params: &MattingParams) -> Result<DistillOutput> {
    params.validate()?;
    let matted_left = mat_one_view(&sample.img_left, &sample.disp_left, params)?;
    let matted_right = mat_one_view(&sample.img_right, &sample.disp_right, params)?;
    let mask_left = distillation_mask(sample, &matted_left, &matted_right)?;
    let mask_right = distillation_mask_right(sample, &matted_left, &matted_right)?;
    Ok(DistillOutput {
        matted_left,
        matted_right,
        mask_left,
        mask_right,
    })
}

/// One dataset sample: paths to the two images and two disparity maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub img_left: PathBuf,
    pub img_right: PathBuf,
    pub disp_left: PathBuf,
    pub disp_right: PathBuf,
}

impl ManifestEntry {
    pub fn load(&self) -> Result<StereoSample> {
        StereoSample::new(
            load_image(&self.img_left)?,
            load_image(&self.img_right)?,
            load_floatmap(&self.disp_left)?,
            load_floatmap(&self.disp_right)?,
        )
    }
}

/// Reads a dataset manifest: one sample per non-empty line, four
/// tab-separated paths (left image, right image, left disparity, right
/// disparity). Relative paths are resolved against the manifest's
/// directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |field: &str| -> PathBuf {
        let p = Path::new(field);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format(
                path,
                format!(
                    "line {}: expected 4 tab-separated paths, found {}",
                    lineno + 1,
                    fields.len()
                ),
            ));
        }
        entries.push(ManifestEntry {
            img_left: resolve(fields[0]),
            img_right: resolve(fields[1]),
            disp_left: resolve(fields[2]),
            disp_right: resolve(fields[3]),
        });
    }
    Ok(entries)
}

/// What happened to one manifest entry during dataset generation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleStatus {
    /// All four outputs were computed and written.
    Written,
    /// All four outputs already existed; nothing was recomputed.
    Skipped,
    /// The sample failed to load or solve; outputs were not produced.
    Failed(String),
}

/// Result of [`generate_matted_dataset`], in manifest order.
#[derive(Debug)]
pub struct DatasetSummary {
    pub statuses: Vec<SampleStatus>,
    /// Path of the output manifest listing the four files of every
    /// non-failed sample.
    pub manifest_path: PathBuf,
}

impl DatasetSummary {
    pub fn written(&self) -> usize {
        self.statuses
            .iter()
            .filter(|s| matches!(s, SampleStatus::Written))
            .count()
    }

    pub fn skipped(&self) -> usize {
        self.statuses
            .iter()
            .filter(|s| matches!(s, SampleStatus::Skipped))
            .count()
    }

    pub fn failed(&self) -> usize {
        self.statuses
            .iter()
            .filter(|s| matches!(s, SampleStatus::Failed(_)))
            .count()
    }
}

fn sample_file_names(index: usize) -> [String; 4] {
    [
        format!("sample_{index:05}_matted_left.pfm"),
        format!("sample_{index:05}_matted_right.pfm"),
        format!("sample_{index:05}_mask_left.pfm"),
        format!("sample_{index:05}_mask_right.pfm"),
    ]
}

fn process_entry(
    index: usize,
    entry: &ManifestEntry,
    out_dir: &Path,
    params: &MattingParams,
) -> SampleStatus {
    let names = sample_file_names(index);
    if names.iter().all(|n| out_dir.join(n).is_file()) {
        return SampleStatus::Skipped;
    }
    let run = || -> Result<()> {
        let sample = entry.load()?;
        let out = distill_sample(&sample, params)?;
        save_floatmap(&out_dir.join(&names[0]), &out.matted_left)?;
        save_floatmap(&out_dir.join(&names[1]), &out.matted_right)?;
        save_floatmap(&out_dir.join(&names[2]), &out.mask_left.to_float_map())?;
        save_floatmap(&out_dir.join(&names[3]), &out.mask_right.to_float_map())?;
        Ok(())
    };
    match run() {
        Ok(()) => SampleStatus::Written,
        Err(e) => {
            log::warn!("sample {index} failed: {e}");
            SampleStatus::Failed(e.to_string())
        }
    }
}

#[cfg(feature = "parallel")]
fn process_all(
    entries: &[ManifestEntry],
    out_dir: &Path,
    params: &MattingParams,
    jobs: usize,
) -> Result<Vec<SampleStatus>> {
    use rayon::prelude::*;
    if jobs <= 1 {
        return Ok(entries
            .iter()
            .enumerate()
            .map(|(i, e)| process_entry(i, e, out_dir, params))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build {jobs}-thread pool: {e}")))?;
    Ok(pool.install(|| {
        entries
            .par_iter()
            .enumerate()
            .map(|(i, e)| process_entry(i, e, out_dir, params))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn process_all(
    entries: &[ManifestEntry],
    out_dir: &Path,
    params: &MattingParams,
    _jobs: usize,
) -> Result<Vec<SampleStatus>> {
    Ok(entries
        .iter()
        .enumerate()
        .map(|(i, e)| process_entry(i, e, out_dir, params))
        .collect())
}

/// Distills every manifest entry into `out_dir`, writing four PFM files
/// per sample plus a `matted_manifest.tsv` listing them.
///
/// Samples whose four outputs already exist are skipped, so interrupted
/// runs resume where they left off. A sample that fails to load or solve
/// is logged and recorded as [`SampleStatus::Failed`]; processing
/// continues, and the failed sample is left out of the output manifest.
/// `jobs > 1` distributes samples over that many threads (builds without
/// the `parallel` feature run sequentially regardless).
pub fn generate_matted_dataset(
    entries: &[ManifestEntry],
    out_dir: &Path,
    params: &MattingParams,
    jobs: usize,
) -> Result<DatasetSummary> {
    params.validate()?;
    if jobs == 0 {
        return Err(Error::InvalidParameter("jobs must be at least 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let statuses = process_all(entries, out_dir, params, jobs)?;

    let mut manifest = String::new();
    for (i, status) in statuses.iter().enumerate() {
        if matches!(status, SampleStatus::Failed(_)) {
            continue;
        }
        manifest.push_str(&sample_file_names(i).join("\t"));
        manifest.push('\n');
    }
    let manifest_path = out_dir.join("matted_manifest.tsv");
    crate::io::atomic_write(&manifest_path, manifest.as_bytes())?;
    Ok(DatasetSummary {
        statuses,
        manifest_path,
    })
}

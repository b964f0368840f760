//! `stereokit` — command-line front end for the disparity toolkit.
//!
//! Exit codes: 0 success, 1 domain error (the message names the violated
//! precondition), 2 usage error. All numeric stdout uses 9 significant
//! digits, tab separated; file outputs are written atomically.

mod config;
mod viz;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Config;
use stereokit_core::dispvol::{
    extract_disparity, postprocess_flip, project_logits_to_right, softmax_volume,
    synthesize_right, DisparityVolume, QuantSchedule, VolumeKind,
};
use stereokit_core::distill::{generate_matted_dataset, read_manifest, SampleStatus};
use stereokit_core::grid::{BitMask, FloatMap, Image};
use stereokit_core::io::{
    load_floatmap, load_image, load_plane_stack, save_floatmap, save_image, save_plane_stack,
};
use stereokit_core::losses::{
    combine_views, loss_deep_corr, loss_distilled_matting, loss_l1, loss_perceptual,
    loss_smoothness, stage1_total, stage2_total, ConvExtractor, FeatureMap,
};
use stereokit_core::matting::{build_laplacian, solve_matted};
use stereokit_core::metrics::eval_depth;
use stereokit_core::npe::{npe_forward, npe_jacobian_check, NpeParams, PatchOrigin};
use stereokit_core::warp::{warp_image, warp_map, WarpSign};

#[derive(Parser)]
#[command(name = "stereokit", version, about = "Disparity-volume stereo toolkit")]
struct Cli {
    /// Key=value config file; defaults to $STEREOKIT_CONFIG when set.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exponential disparity quantization schedule.
    Quantize(QuantizeArgs),
    /// Backward-warp an image (or float map) by a disparity map.
    Warp(WarpArgs),
    /// Synthesize the right view from a left image and a logit volume.
    Synth(SynthArgs),
    /// Extract the expected disparity from a probability or logit volume.
    Extract(ExtractArgs),
    /// Solve the matting system for a target map over a guide image.
    Mat(MatArgs),
    /// Distill every manifest sample into matted maps and masks.
    Distill(DistillArgs),
    /// Evaluate loss terms on explicit inputs.
    Losses(LossesArgs),
    /// Evaluate or gradient-check the neural positional encoding.
    Npe(NpeArgs),
    /// Depth metrics between a prediction and ground truth.
    Metrics(MetricsArgs),
    /// Distillation plus per-sample loss summary lines.
    Pipeline(PipelineArgs),
    /// Render a float map as an 8-bit PNG.
    Viz(VizArgs),
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    /// Number of quantization intervals (the schedule has n+1 planes).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    /// Sample the source at x - d (reconstructs the view the disparity
    /// belongs to from the other view).
    Left,
    /// Sample the source at x + d.
    Right,
}

impl From<SignArg> for WarpSign {
    fn from(s: SignArg) -> WarpSign {
        match s {
            SignArg::Left => WarpSign::Left,
            SignArg::Right => WarpSign::Right,
        }
    }
}

#[derive(Args)]
struct WarpArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    disp: PathBuf,
    #[arg(long, value_enum, default_value = "left")]
    sign: SignArg,
    #[arg(long)]
    out: PathBuf,
    /// Also write the validity mask (as a 0/1 PFM).
    #[arg(long)]
    mask_out: Option<PathBuf>,
    /// Treat the source as a float map instead of an image.
    #[arg(long)]
    map: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    left: PathBuf,
    /// Logit volume prefix ({prefix}_000.pfm, ...); plane count fixes n.
    #[arg(long)]
    logits: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Logit volume prefix (softmax is applied first).
    #[arg(long, conflicts_with = "probs")]
    logits: Option<PathBuf>,
    /// Probability volume prefix (used as-is).
    #[arg(long)]
    probs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Merge with a second disparity map (flip post-processing mean).
    #[arg(long)]
    merge_with: Option<PathBuf>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
}

#[derive(Args, Clone)]
struct MattingFlags {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    window_radius: Option<usize>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    cg_max_iter: Option<usize>,
}

impl MattingFlags {
    fn apply(&self, cfg: &mut Config) {
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.window_radius {
            cfg.window_radius = v;
        }
        if let Some(v) = self.cg_tol {
            cfg.cg_tol = v;
        }
        if let Some(v) = self.cg_max_iter {
            cfg.cg_max_iter = v;
        }
    }
}

#[derive(Args)]
struct MatArgs {
    #[arg(long)]
    guide: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Per-pixel confidence map; defaults to all ones.
    #[arg(long)]
    confidence: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    matting: MattingFlags,
}

#[derive(Args)]
struct DistillArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for matted maps, masks, and the result manifest.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads over samples.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    matting: MattingFlags,
}

#[derive(Args)]
struct LossesArgs {
    /// Prediction image (enables l1 against --target).
    #[arg(long, requires = "target")]
    pred: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    /// Validity mask for l1; defaults to all valid.
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Adds the perceptual term via the built-in seeded extractor.
    #[arg(long, requires = "pred")]
    perceptual: bool,
    /// Disparity map (enables smoothness against --guide).
    #[arg(long)]
    disp: Option<PathBuf>,
    #[arg(long, requires = "disp")]
    guide: Option<PathBuf>,
    /// Adds the deep-correlation term (needs --disp and --guide).
    #[arg(long, requires = "guide")]
    deep_corr: bool,
    /// Matted map (enables the distilled-matting term with --mask).
    #[arg(long, requires = "disp")]
    matted: Option<PathBuf>,
    #[arg(long, requires = "matted")]
    mask: Option<PathBuf>,
    /// External mirror-loss value for the stage-2 total.
    #[arg(long, default_value_t = 0.0)]
    lm: f64,
    #[arg(long)]
    alpha_p: Option<f64>,
    #[arg(long)]
    alpha_ds: Option<f64>,
    #[arg(long)]
    alpha_dm: Option<f64>,
    #[arg(long)]
    alpha_dc: Option<f64>,
    #[arg(long)]
    corr_window: Option<usize>,
    #[arg(long)]
    feat_seed: Option<u64>,
}

#[derive(Args)]
struct NpeArgs {
    /// Load parameters from a PFM (+ .hdr) file instead of seeding them.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    out_ch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    x0: usize,
    #[arg(long, default_value_t = 0)]
    y0: usize,
    /// Patch size; defaults to the full image.
    #[arg(long)]
    patch_h: Option<usize>,
    #[arg(long)]
    patch_w: Option<usize>,
    #[arg(long)]
    full_h: usize,
    #[arg(long)]
    full_w: usize,
    /// Write the encoded features as a PFM plane stack.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    /// Run the Jacobian check with this many probe pixels.
    #[arg(long)]
    check: Option<usize>,
    /// Save the (seeded) parameters for reuse.
    #[arg(long)]
    save_params: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long)]
    median_scale: Option<bool>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for matted maps, masks, and the result manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    matting: MattingFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColormapArg {
    Turbo,
    Gray,
}

#[derive(Args)]
struct VizArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "turbo")]
    colormap: ColormapArg,
}

enum CliError {
    Domain(String),
    Usage(String),
}

impl From<stereokit_core::Error> for CliError {
    fn from(e: stereokit_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

/// 9 significant digits.
fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

fn effective_config(cli_path: &Option<PathBuf>) -> Result<Config, CliError> {
    let path = cli_path.clone().or_else(|| {
        std::env::var("STEREOKIT_CONFIG")
            .ok()
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
    });
    match path {
        Some(p) => Config::load(&p).map_err(CliError::Domain),
        None => Ok(Config::default()),
    }
}

fn schedule(cfg: &Config, n_planes_from_stack: Option<usize>) -> Result<QuantSchedule, CliError> {
    let n = match n_planes_from_stack {
        Some(planes) if planes < 2 => {
            return Err(CliError::Domain(format!(
                "volume needs at least 2 planes, found {planes}"
            )))
        }
        Some(planes) => planes - 1,
        None => cfg.n_planes,
    };
    Ok(QuantSchedule::new(cfg.d_min, cfg.d_max, n)?)
}

fn run_quantize(args: &QuantizeArgs, mut cfg: Config) -> CliResult {
    if let Some(v) = args.d_min {
        cfg.d_min = v;
    }
    if let Some(v) = args.d_max {
        cfg.d_max = v;
    }
    if let Some(v) = args.n {
        cfg.n_planes = v;
    }
    let sched = schedule(&cfg, None)?;
    let mut out = String::new();
    for (i, d) in sched.disparities().iter().enumerate() {
        out.push_str(&format!("{i}\t{}\n", sig9(*d)));
    }
    print!("{out}");
    Ok(())
}

fn run_warp(args: &WarpArgs) -> CliResult {
    let disp = load_floatmap(&args.disp)?;
    let mask = if args.map {
        let src = load_floatmap(&args.src)?;
        let (out, mask) = warp_map(&src, &disp, args.sign.into())?;
        save_floatmap(&args.out, &out)?;
        mask
    } else {
        let src = load_image(&args.src)?;
        let (out, mask) = warp_image(&src, &disp, args.sign.into())?;
        save_image(&args.out, &out)?;
        mask
    };
    if let Some(path) = &args.mask_out {
        save_floatmap(path, &mask.to_float_map())?;
    }
    Ok(())
}

fn load_volume(prefix: &Path, kind: VolumeKind) -> Result<DisparityVolume, CliError> {
    let planes = load_plane_stack(prefix)?;
    Ok(DisparityVolume::from_planes(kind, &planes)?)
}

fn run_synth(args: &SynthArgs, mut cfg: Config) -> CliResult {
    if let Some(v) = args.d_min {
        cfg.d_min = v;
    }
    if let Some(v) = args.d_max {
        cfg.d_max = v;
    }
    let left = load_image(&args.left)?;
    let logits = load_volume(&args.logits, VolumeKind::Logits)?;
    let sched = schedule(&cfg, Some(logits.n_planes()))?;
    let probs_right = project_logits_to_right(&logits, &sched)?;
    let synth = synthesize_right(&left, &probs_right, &sched)?;
    save_image(&args.out, &synth)?;
    Ok(())
}

fn run_extract(args: &ExtractArgs, mut cfg: Config) -> CliResult {
    if let Some(v) = args.d_min {
        cfg.d_min = v;
    }
    if let Some(v) = args.d_max {
        cfg.d_max = v;
    }
    let probs = match (&args.logits, &args.probs) {
        (Some(prefix), None) => softmax_volume(&load_volume(prefix, VolumeKind::Logits)?)?,
        (None, Some(prefix)) => load_volume(prefix, VolumeKind::Probabilities)?,
        _ => {
            return Err(CliError::Usage(
                "extract needs exactly one of --logits or --probs".into(),
            ))
        }
    };
    let sched = schedule(&cfg, Some(probs.n_planes()))?;
    let mut disp = extract_disparity(&probs, &sched)?;
    if let Some(other) = &args.merge_with {
        disp = postprocess_flip(&disp, &load_floatmap(other)?)?;
    }
    save_floatmap(&args.out, &disp)?;
    Ok(())
}

fn run_mat(args: &MatArgs, mut cfg: Config) -> CliResult {
    args.matting.apply(&mut cfg);
    let params = cfg.matting_params();
    let guide = load_image(&args.guide)?;
    let target = load_floatmap(&args.target)?;
    let confidence = match &args.confidence {
        Some(p) => load_floatmap(p)?,
        None => FloatMap::constant(target.height(), target.width(), 1.0)?,
    };
    let laplacian = build_laplacian(&guide, &params)?;
    let solved = solve_matted(&laplacian, &target, &confidence, &params)?;
    save_floatmap(&args.out, &solved)?;
    Ok(())
}

fn status_line(i: usize, status: &SampleStatus) -> String {
    match status {
        SampleStatus::Written => format!("sample_{i:05}\twritten"),
        SampleStatus::Skipped => format!("sample_{i:05}\tskipped"),
        SampleStatus::Failed(msg) => format!("sample_{i:05}\tfailed\t{msg}"),
    }
}

fn run_distill(args: &DistillArgs, mut cfg: Config) -> CliResult {
    args.matting.apply(&mut cfg);
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    let entries = read_manifest(&args.manifest)?;
    let summary =
        generate_matted_dataset(&entries, &args.out, &cfg.matting_params(), cfg.jobs)?;
    let mut out = String::new();
    for (i, status) in summary.statuses.iter().enumerate() {
        out.push_str(&status_line(i, status));
        out.push('\n');
    }
    out.push_str(&format!(
        "written\t{}\tskipped\t{}\tfailed\t{}\n",
        summary.written(),
        summary.skipped(),
        summary.failed()
    ));
    print!("{out}");
    Ok(())
}

/// Features for the deep-correlation term: the coarsest level of the
/// built-in extractor, run on the map normalized by its peak (so it fits
/// the image value range).
fn corr_features(map: &FloatMap, seed: u64) -> Result<FeatureMap, CliError> {
    let peak = map.max_value();
    let scale = if peak > 0.0 { peak } else { 1.0 };
    let img = Image::new(
        map.height(),
        map.width(),
        1,
        map.data().iter().map(|&v| (v / scale).max(0.0)).collect(),
    )?;
    let levels = ConvExtractor::seeded(1, seed)?.run(&img)?;
    Ok(levels.into_iter().last().expect("extractor has levels"))
}

fn image_features(img: &Image, seed: u64) -> Result<Vec<FeatureMap>, CliError> {
    Ok(ConvExtractor::seeded(img.channels(), seed)?.run(img)?)
}

fn run_losses(args: &LossesArgs, mut cfg: Config) -> CliResult {
    if let Some(v) = args.alpha_p {
        cfg.alpha_p = v;
    }
    if let Some(v) = args.alpha_ds {
        cfg.alpha_ds = v;
    }
    if let Some(v) = args.alpha_dm {
        cfg.alpha_dm = v;
    }
    if let Some(v) = args.alpha_dc {
        cfg.alpha_dc = v;
    }
    if let Some(v) = args.corr_window {
        cfg.corr_window = v;
    }
    if let Some(v) = args.feat_seed {
        cfg.feat_seed = v;
    }
    let weights = cfg.loss_weights();
    weights
        .validate()
        .map_err(|e| CliError::Domain(e.to_string()))?;

    let mut lines: Vec<String> = Vec::new();
    let mut l1 = None;
    let mut lp = None;
    let mut lds = None;
    let mut ldm = None;
    let mut ldc = None;

    if let (Some(pred_path), Some(target_path)) = (&args.pred, &args.target) {
        let pred = load_image(pred_path)?;
        let target = load_image(target_path)?;
        let valid = match &args.valid {
            Some(p) => BitMask::from_float_map(&load_floatmap(p)?)?,
            None => BitMask::ones(pred.height(), pred.width())?,
        };
        let v = loss_l1(&pred, &target, &valid)?;
        lines.push(format!("l1\t{}", sig9(v)));
        l1 = Some(v);
        if args.perceptual {
            let v = loss_perceptual(
                &image_features(&pred, cfg.feat_seed)?,
                &image_features(&target, cfg.feat_seed)?,
            )?;
            lines.push(format!("lp\t{}", sig9(v)));
            lp = Some(v);
        }
    }

    if let Some(disp_path) = &args.disp {
        let disp = load_floatmap(disp_path)?;
        if let Some(guide_path) = &args.guide {
            let guide = load_image(guide_path)?;
            let v = loss_smoothness(&disp, &guide)?;
            lines.push(format!("lds\t{}", sig9(v)));
            lds = Some(v);
            if args.deep_corr {
                let fd = corr_features(&disp, cfg.feat_seed)?;
                let fi = corr_features(&guide_mean(&guide)?, cfg.feat_seed)?;
                let v = loss_deep_corr(&fd, &fi, cfg.corr_window)?;
                lines.push(format!("ldc\t{}", sig9(v)));
                ldc = Some(v);
            }
        }
        if let (Some(matted_path), Some(mask_path)) = (&args.matted, &args.mask) {
            let matted = load_floatmap(matted_path)?;
            let mask = BitMask::from_float_map(&load_floatmap(mask_path)?)?;
            let v = loss_distilled_matting(&disp, &matted, &mask)?;
            lines.push(format!("ldm\t{}", sig9(v)));
            ldm = Some(v);
        }
    }

    if lines.is_empty() {
        return Err(CliError::Usage(
            "losses: no computable term; pass --pred/--target, --disp/--guide, or --disp/--matted/--mask".into(),
        ));
    }

    if let (Some(l1), Some(lp), Some(lds)) = (l1, lp, lds) {
        let ls1 = stage1_total(l1, lp, lds, &weights);
        lines.push(format!("ls1\t{}", sig9(ls1)));
        if let (Some(ldm), Some(ldc)) = (ldm, ldc) {
            let ls2 = stage2_total(ls1, args.lm, ldm, ldc, &weights);
            lines.push(format!("ls2\t{}", sig9(ls2)));
        }
    }
    let mut out = String::new();
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

/// Channel-mean view of a guide image as a single-channel map.
fn guide_mean(img: &Image) -> Result<FloatMap, CliError> {
    Ok(FloatMap::from_fn(img.height(), img.width(), |y, x| {
        let mut acc = 0.0f32;
        for c in 0..img.channels() {
            acc += img.get(y, x, c);
        }
        acc / img.channels() as f32
    })?)
}

fn run_npe(args: &NpeArgs, mut cfg: Config) -> CliResult {
    if let Some(v) = args.hidden {
        cfg.npe_hidden = v;
    }
    if let Some(v) = args.out_ch {
        cfg.npe_out = v;
    }
    if let Some(v) = args.seed {
        cfg.npe_seed = v;
    }
    let params = match &args.params {
        Some(path) => NpeParams::load(path)?,
        None => NpeParams::seeded(cfg.npe_hidden, cfg.npe_out, cfg.npe_seed)?,
    };
    let origin = PatchOrigin::new(
        args.x0,
        args.y0,
        args.patch_h.unwrap_or(args.full_h),
        args.patch_w.unwrap_or(args.full_w),
        args.full_h,
        args.full_w,
    )?;
    let mut acted = false;
    if let Some(path) = &args.save_params {
        params.save(path)?;
        acted = true;
    }
    if let Some(prefix) = &args.out_prefix {
        let feats = npe_forward(&params, &origin)?;
        let planes: Vec<FloatMap> = (0..feats.channels())
            .map(|c| FloatMap::new(feats.height(), feats.width(), feats.plane(c).to_vec()))
            .collect::<stereokit_core::Result<_>>()?;
        save_plane_stack(prefix, planes.iter())?;
        acted = true;
    }
    if let Some(probes) = args.check {
        let rep = npe_jacobian_check(&params, &origin, probes, cfg.npe_seed)?;
        println!(
            "max_rel_err\t{}\tprobes\t{}\tcomparisons\t{}",
            sig9(rep.max_rel_err),
            rep.probes,
            rep.comparisons
        );
        acted = true;
    }
    if !acted {
        return Err(CliError::Usage(
            "npe: pass at least one of --out-prefix, --check, --save-params".into(),
        ));
    }
    Ok(())
}

fn run_metrics(args: &MetricsArgs, mut cfg: Config) -> CliResult {
    if let Some(v) = args.cap {
        cfg.cap = v;
    }
    if let Some(v) = args.median_scale {
        cfg.median_scale = v;
    }
    let pred = load_floatmap(&args.pred)?;
    let gt = load_floatmap(&args.gt)?;
    let report = eval_depth(&pred, &gt, cfg.cap, cfg.median_scale)?;
    let cells: Vec<String> = report
        .fields()
        .iter()
        .map(|(_, v)| sig9(*v))
        .chain(std::iter::once(report.n_valid.to_string()))
        .collect();
    println!("{}", cells.join("\t"));
    Ok(())
}

fn run_pipeline(args: &PipelineArgs, mut cfg: Config) -> CliResult {
    args.matting.apply(&mut cfg);
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    let entries = read_manifest(&args.manifest)?;
    let summary =
        generate_matted_dataset(&entries, &args.out, &cfg.matting_params(), cfg.jobs)?;

    // Per-sample summary: distilled-matting losses and mask densities,
    // recomputed from the files just written (works for resumed runs too).
    let mut out = String::new();
    for (i, status) in summary.statuses.iter().enumerate() {
        if matches!(status, SampleStatus::Failed(_)) {
            out.push_str(&status_line(i, status));
            out.push('\n');
            continue;
        }
        let entry = &entries[i];
        let sample = entry.load()?;
        let dir = &args.out;
        let matted_l = load_floatmap(&dir.join(format!("sample_{i:05}_matted_left.pfm")))?;
        let matted_r = load_floatmap(&dir.join(format!("sample_{i:05}_matted_right.pfm")))?;
        let mask_l =
            BitMask::from_float_map(&load_floatmap(&dir.join(format!("sample_{i:05}_mask_left.pfm")))?)?;
        let mask_r = BitMask::from_float_map(&load_floatmap(
            &dir.join(format!("sample_{i:05}_mask_right.pfm")),
        )?)?;
        let ldm_l = loss_distilled_matting(&sample.disp_left, &matted_l, &mask_l)?;
        let ldm_r = loss_distilled_matting(&sample.disp_right, &matted_r, &mask_r)?;
        let total = (sample.height() * sample.width()) as f64;
        out.push_str(&format!(
            "sample_{i:05}\tldm\t{}\tldm_left\t{}\tldm_right\t{}\tmask_density_left\t{}\tmask_density_right\t{}\n",
            sig9(combine_views(ldm_l, ldm_r)),
            sig9(ldm_l),
            sig9(ldm_r),
            sig9(mask_l.count_ones() as f64 / total),
            sig9(mask_r.count_ones() as f64 / total),
        ));
    }
    out.push_str(&format!(
        "written\t{}\tskipped\t{}\tfailed\t{}\n",
        summary.written(),
        summary.skipped(),
        summary.failed()
    ));
    print!("{out}");
    Ok(())
}

fn run_viz(args: &VizArgs) -> CliResult {
    let map = load_floatmap(&args.input)?;
    let cmap = match args.colormap {
        ColormapArg::Turbo => viz::Colormap::Turbo,
        ColormapArg::Gray => viz::Colormap::Gray,
    };
    viz::emit_visualization_with(&map, &args.out, cmap)?;
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    let cfg = effective_config(&cli.config)?;
    match &cli.command {
        Command::Quantize(a) => run_quantize(a, cfg),
        Command::Warp(a) => run_warp(a),
        Command::Synth(a) => run_synth(a, cfg),
        Command::Extract(a) => run_extract(a, cfg),
        Command::Mat(a) => run_mat(a, cfg),
        Command::Distill(a) => run_distill(a, cfg),
        Command::Losses(a) => run_losses(a, cfg),
        Command::Npe(a) => run_npe(a, cfg),
        Command::Metrics(a) => run_metrics(a, cfg),
        Command::Pipeline(a) => run_pipeline(a, cfg),
        Command::Viz(a) => run_viz(a),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

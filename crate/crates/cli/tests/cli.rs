//! Black-box tests of the `stereokit` binary: exit codes, config
//! precedence, and that subcommands compose exactly like the library.

use std::path::Path;
use std::process::{Command, Output};

use stereokit_core::dispvol::{
    extract_disparity, softmax_volume, DisparityVolume, QuantSchedule, VolumeKind,
};
use stereokit_core::distill::distill_sample;
use stereokit_core::fixtures::{constant_disparity_sample, perturbed_map, random_map, smooth_image};
use stereokit_core::grid::FloatMap;
use stereokit_core::io::{load_floatmap, save_floatmap, save_image, save_plane_stack};
use stereokit_core::matting::MattingParams;
use stereokit_core::npe::NpeParams;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stereokit"));
    cmd.env_remove("STEREOKIT_CONFIG");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_noisy_stereo(root: &Path, seed: u64) {
    let sample = constant_disparity_sample(10, 16, 3.0, seed);
    let truth = FloatMap::constant(10, 16, 3.0).unwrap();
    save_image(root.join("img_left.pfm"), &sample.img_left).unwrap();
    save_image(root.join("img_right.pfm"), &sample.img_right).unwrap();
    save_floatmap(root.join("disp_left.pfm"), &perturbed_map(&truth, 0.8, seed + 1)).unwrap();
    save_floatmap(root.join("disp_right.pfm"), &perturbed_map(&truth, 0.8, seed + 2)).unwrap();
}

const MANIFEST_LINE: &str = "img_left.pfm\timg_right.pfm\tdisp_left.pfm\tdisp_right.pfm";

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(bin().args(["quantize", "--frob"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--frob"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = run(bin().arg("transmogrify"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_is_success() {
    let out = run(bin().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("quantize"));
}

#[test]
fn quantize_defaults_and_flag_override() {
    let out = run(bin().arg("quantize"));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 49);
    assert_eq!(lines[0], "0\t2.00000000e0");
    assert_eq!(lines[48], "48\t3.00000000e2");

    let out = run(bin().args(["quantize", "--n", "2"]));
    assert_eq!(stdout_of(&out).lines().count(), 3);
}

#[test]
fn quantize_invalid_parameters_are_domain_errors() {
    let out = run(bin().args(["quantize", "--n", "0"]));
    assert_eq!(out.status.code(), Some(1));
    // d_min >= d_max violates the schedule's precondition.
    let out = run(bin().args(["quantize", "--d-min", "300", "--d-max", "2"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(!stderr_of(&out).is_empty());
}

#[test]
fn config_file_applies_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.conf");
    std::fs::write(&cfg, "# schedule\nn_planes = 4\n").unwrap();

    let out = run(bin().arg("--config").arg(&cfg).arg("quantize"));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out).lines().count(), 5);

    let out = run(bin().arg("--config").arg(&cfg).args(["quantize", "--n", "2"]));
    assert_eq!(stdout_of(&out).lines().count(), 3);
}

#[test]
fn config_env_var_applies_and_flag_config_wins() {
    let dir = tempfile::tempdir().unwrap();
    let env_cfg = dir.path().join("env.conf");
    let flag_cfg = dir.path().join("flag.conf");
    std::fs::write(&env_cfg, "n_planes = 3\n").unwrap();
    std::fs::write(&flag_cfg, "n_planes = 2\n").unwrap();

    let out = run(bin().env("STEREOKIT_CONFIG", &env_cfg).arg("quantize"));
    assert_eq!(stdout_of(&out).lines().count(), 4);

    let out = run(bin()
        .env("STEREOKIT_CONFIG", &env_cfg)
        .arg("--config")
        .arg(&flag_cfg)
        .arg("quantize"));
    assert_eq!(stdout_of(&out).lines().count(), 3);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "lambada = 1.0\n").unwrap();
    let out = run(bin().arg("--config").arg(&cfg).arg("quantize"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("unknown config key"));
}

#[test]
fn metrics_shape_mismatch_names_the_shape() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pfm");
    let b = dir.path().join("b.pfm");
    save_floatmap(&a, &FloatMap::constant(4, 4, 10.0).unwrap()).unwrap();
    save_floatmap(&b, &FloatMap::constant(4, 5, 10.0).unwrap()).unwrap();
    let out = run(bin().args(["metrics", "--pred"]).arg(&a).arg("--gt").arg(&b));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("shape"));
}

#[test]
fn metrics_prints_one_value_row() {
    let dir = tempfile::tempdir().unwrap();
    let gt = FloatMap::from_fn(3, 3, |y, x| [2.5f32, 5.0, 10.0][(y + x) % 3]).unwrap();
    let pred = FloatMap::from_fn(3, 3, |y, x| 1.2 * gt.get(y, x)).unwrap();
    let (pa, ga) = (dir.path().join("p.pfm"), dir.path().join("g.pfm"));
    save_floatmap(&pa, &pred).unwrap();
    save_floatmap(&ga, &gt).unwrap();
    let out = run(bin().args(["metrics", "--pred"]).arg(&pa).arg("--gt").arg(&ga));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let cells: Vec<&str> = text.trim_end().split('\t').collect();
    assert_eq!(cells.len(), 8, "7 metrics plus n_valid: {text:?}");
    assert_eq!(cells[0], "2.00000000e-1");
    assert_eq!(cells[4], "1.00000000e0");
    assert_eq!(cells[7], "9");
}

#[test]
fn warp_with_zero_disparity_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let src = random_map(6, 8, 0.0, 1.0, 5);
    let zero = FloatMap::constant(6, 8, 0.0).unwrap();
    let (sp, dp) = (dir.path().join("src.pfm"), dir.path().join("disp.pfm"));
    let (op, mp) = (dir.path().join("out.pfm"), dir.path().join("mask.pfm"));
    save_floatmap(&sp, &src).unwrap();
    save_floatmap(&dp, &zero).unwrap();
    let out = run(bin()
        .args(["warp", "--map", "--src"])
        .arg(&sp)
        .arg("--disp")
        .arg(&dp)
        .arg("--out")
        .arg(&op)
        .arg("--mask-out")
        .arg(&mp));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let loaded = load_floatmap(&op).unwrap();
    assert_eq!(loaded.data(), src.data());
    assert!(load_floatmap(&mp).unwrap().data().iter().all(|&v| v == 1.0));
}

#[test]
fn mat_keeps_constant_target_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let guide = smooth_image(8, 9, 3, 21);
    let target = FloatMap::constant(8, 9, 0.6).unwrap();
    let (gp, tp, op) = (
        dir.path().join("g.pfm"),
        dir.path().join("t.pfm"),
        dir.path().join("o.pfm"),
    );
    save_image(&gp, &guide).unwrap();
    save_floatmap(&tp, &target).unwrap();
    let out = run(bin()
        .args(["mat", "--guide"])
        .arg(&gp)
        .arg("--target")
        .arg(&tp)
        .arg("--out")
        .arg(&op));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    // Constants are in the matting Laplacian's null space, so the solve
    // returns the target untouched (up to cg tolerance).
    for &v in load_floatmap(&op).unwrap().data() {
        assert!((v - 0.6).abs() < 1e-5, "got {v}");
    }
}

#[test]
fn distill_writes_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_noisy_stereo(root, 31);
    std::fs::write(
        root.join("manifest.tsv"),
        format!("{MANIFEST_LINE}\n{MANIFEST_LINE}\n"),
    )
    .unwrap();

    let args = |cmd: &mut Command| {
        cmd.arg("distill")
            .arg("--manifest")
            .arg(root.join("manifest.tsv"))
            .arg("--out")
            .arg(root.join("out"))
            .args(["--lambda", "2.0"]);
    };
    let mut first = bin();
    args(&mut first);
    let out = run(&mut first);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("sample_00000\twritten"));
    assert!(text.contains("sample_00001\twritten"));
    assert!(text.contains("written\t2\tskipped\t0\tfailed\t0"));
    for i in 0..2 {
        for kind in ["matted", "mask"] {
            for side in ["left", "right"] {
                assert!(root.join(format!("out/sample_{i:05}_{kind}_{side}.pfm")).exists());
            }
        }
    }
    let manifest = std::fs::read_to_string(root.join("out/matted_manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 2);

    let before = std::fs::read(root.join("out/sample_00000_matted_left.pfm")).unwrap();
    let mut second = bin();
    args(&mut second);
    let out = run(&mut second);
    assert!(stdout_of(&out).contains("written\t0\tskipped\t2\tfailed\t0"));
    let after = std::fs::read(root.join("out/sample_00000_matted_left.pfm")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn distill_reports_failed_samples_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_noisy_stereo(root, 47);
    std::fs::write(
        root.join("manifest.tsv"),
        format!("{MANIFEST_LINE}\nmissing.pfm\timg_right.pfm\tdisp_left.pfm\tdisp_right.pfm\n"),
    )
    .unwrap();
    let out = run(bin()
        .arg("distill")
        .arg("--manifest")
        .arg(root.join("manifest.tsv"))
        .arg("--out")
        .arg(root.join("out"))
        .args(["--lambda", "2.0"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("sample_00001\tfailed"));
    assert!(text.contains("written\t1\tskipped\t0\tfailed\t1"));
    // The failed sample must not appear in the output manifest.
    let manifest = std::fs::read_to_string(root.join("out/matted_manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
}

#[test]
fn pipeline_composes_like_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_noisy_stereo(root, 53);
    std::fs::write(root.join("manifest.tsv"), format!("{MANIFEST_LINE}\n")).unwrap();
    std::fs::write(root.join("cfg"), "lambda = 2.0\n").unwrap();

    let out = run(bin()
        .arg("--config")
        .arg(root.join("cfg"))
        .arg("pipeline")
        .arg("--manifest")
        .arg(root.join("manifest.tsv"))
        .arg("--out")
        .arg(root.join("out")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("sample_00000\tldm\t"));
    assert!(text.contains("mask_density_left"));

    // The files on disk must match an in-process distillation run with the
    // same parameters bit for bit.
    let params = MattingParams {
        lambda: 2.0,
        ..MattingParams::default()
    };
    let entries = stereokit_core::distill::read_manifest(&root.join("manifest.tsv")).unwrap();
    let want = distill_sample(&entries[0].load().unwrap(), &params).unwrap();
    let got_matted = load_floatmap(root.join("out/sample_00000_matted_left.pfm")).unwrap();
    let bits = |m: &FloatMap| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&got_matted), bits(&want.matted_left));
    let got_mask = load_floatmap(root.join("out/sample_00000_mask_left.pfm")).unwrap();
    let mask_f: Vec<f32> = want.mask_left.data().iter().map(|&b| b as f32).collect();
    assert_eq!(got_mask.data(), mask_f.as_slice());
}

#[test]
fn extract_composes_like_the_library_and_rejects_double_volume() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let planes: Vec<FloatMap> = (0..5)
        .map(|n| random_map(6, 7, -1.0, 1.0, 60 + n))
        .collect();
    save_plane_stack(root.join("logits"), planes.iter()).unwrap();

    let out = run(bin()
        .arg("extract")
        .arg("--logits")
        .arg(root.join("logits"))
        .arg("--out")
        .arg(root.join("disp.pfm"))
        .args(["--d-min", "1.0", "--d-max", "16.0"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));

    let sched = QuantSchedule::new(1.0, 16.0, 4).unwrap();
    let vol = DisparityVolume::from_planes(VolumeKind::Logits, &planes).unwrap();
    let want = extract_disparity(&softmax_volume(&vol).unwrap(), &sched).unwrap();
    let got = load_floatmap(root.join("disp.pfm")).unwrap();
    assert_eq!(got.data(), want.data());

    let out = run(bin()
        .arg("extract")
        .arg("--logits")
        .arg(root.join("logits"))
        .arg("--probs")
        .arg(root.join("logits"))
        .arg("--out")
        .arg(root.join("d2.pfm")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn losses_without_inputs_is_usage_error() {
    let out = run(bin().arg("losses"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("losses"));
}

#[test]
fn losses_l1_line_matches_hand_value() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pfm");
    let b = dir.path().join("b.pfm");
    save_image(&a, &stereokit_core::grid::Image::new(2, 2, 1, vec![0.25; 4]).unwrap()).unwrap();
    save_image(&b, &stereokit_core::grid::Image::new(2, 2, 1, vec![0.75; 4]).unwrap()).unwrap();
    let out = run(bin().args(["losses", "--pred"]).arg(&a).arg("--target").arg(&b));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "l1\t5.00000000e-1\n");
}

#[test]
fn losses_full_stage2_prints_all_terms() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let pred = smooth_image(12, 12, 3, 71);
    let target = smooth_image(12, 12, 3, 72);
    let disp = random_map(12, 12, 1.0, 5.0, 73);
    let matted = perturbed_map(&disp, 0.3, 74);
    let mask = FloatMap::from_fn(12, 12, |y, x| ((y + x) % 2) as f32).unwrap();
    save_image(root.join("p.pfm"), &pred).unwrap();
    save_image(root.join("t.pfm"), &target).unwrap();
    save_floatmap(root.join("d.pfm"), &disp).unwrap();
    save_floatmap(root.join("m.pfm"), &matted).unwrap();
    save_floatmap(root.join("k.pfm"), &mask).unwrap();

    let out = run(bin()
        .arg("losses")
        .arg("--pred")
        .arg(root.join("p.pfm"))
        .arg("--target")
        .arg(root.join("t.pfm"))
        .arg("--perceptual")
        .arg("--disp")
        .arg(root.join("d.pfm"))
        .arg("--guide")
        .arg(root.join("t.pfm"))
        .arg("--deep-corr")
        .arg("--matted")
        .arg(root.join("m.pfm"))
        .arg("--mask")
        .arg(root.join("k.pfm")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    for term in ["l1", "lp", "lds", "ldc", "ldm", "ls1", "ls2"] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{term}\t"))),
            "missing {term} in {text:?}"
        );
    }
}

#[test]
fn npe_params_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let saved = root.join("params.pfm");

    let out = run(bin()
        .arg("npe")
        .args(["--hidden", "5", "--out-ch", "3", "--seed", "9"])
        .args(["--full-h", "6", "--full-w", "6"])
        .arg("--save-params")
        .arg(&saved)
        .arg("--out-prefix")
        .arg(root.join("feat"))
        .args(["--check", "2"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let err: f64 = text
        .split('\t')
        .nth(1)
        .and_then(|v| v.parse().ok())
        .expect("max_rel_err cell");
    assert!(err < 1e-4, "{text}");
    assert!(root.join("feat_000.pfm").exists());
    assert!(root.join("feat_002.pfm").exists());

    // Reloading the saved params must reproduce the same features.
    let loaded = NpeParams::load(&saved).unwrap();
    assert_eq!((loaded.hidden(), loaded.out()), (5, 3));
    let out = run(bin()
        .arg("npe")
        .arg("--params")
        .arg(&saved)
        .args(["--full-h", "6", "--full-w", "6"])
        .arg("--out-prefix")
        .arg(root.join("feat2")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert_eq!(
        std::fs::read(root.join("feat_000.pfm")).unwrap(),
        std::fs::read(root.join("feat2_000.pfm")).unwrap()
    );
}

#[test]
fn npe_without_action_is_usage_error() {
    let out = run(bin().arg("npe").args(["--full-h", "4", "--full-w", "4"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn viz_writes_deterministic_png() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    save_floatmap(root.join("m.pfm"), &random_map(7, 9, 0.0, 6.0, 81)).unwrap();
    for (out_name, cmap) in [("a.png", "turbo"), ("b.png", "turbo"), ("g.png", "gray")] {
        let out = run(bin()
            .arg("viz")
            .arg("--input")
            .arg(root.join("m.pfm"))
            .arg("--out")
            .arg(root.join(out_name))
            .args(["--colormap", cmap]));
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    }
    assert_eq!(
        std::fs::read(root.join("a.png")).unwrap(),
        std::fs::read(root.join("b.png")).unwrap()
    );
    assert_ne!(
        std::fs::read(root.join("a.png")).unwrap(),
        std::fs::read(root.join("g.png")).unwrap()
    );
}

#[test]
fn synth_runs_on_logit_stack() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let img = smooth_image(8, 10, 3, 91);
    save_image(root.join("left.pfm"), &img).unwrap();
    let planes: Vec<FloatMap> = (0..4)
        .map(|n| random_map(8, 10, -0.5, 0.5, 90 + n))
        .collect();
    save_plane_stack(root.join("logits"), planes.iter()).unwrap();
    let out = run(bin()
        .arg("synth")
        .arg("--left")
        .arg(root.join("left.pfm"))
        .arg("--logits")
        .arg(root.join("logits"))
        .arg("--out")
        .arg(root.join("synth.pfm"))
        .args(["--d-min", "0.5", "--d-max", "3.0"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let synth = stereokit_core::io::load_image(root.join("synth.pfm")).unwrap();
    assert_eq!((synth.height(), synth.width(), synth.channels()), (8, 10, 3));
}

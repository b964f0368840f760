//! Acceptance checks for the toolkit's pinned numerical contracts.
//!
//! Each criterion is one test that prints exactly one
//! `acceptance <n> <PASS|FAIL> ...` line (visible with `--nocapture`, or on
//! failure). Oracles here are written independently from the library
//! kernels: dense linear algebra via nalgebra, scalar re-evaluation for the
//! warp-based masks.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stereokit_core::dispvol::{synthesize_right, DisparityVolume, QuantSchedule, VolumeKind};
use stereokit_core::distill::{distillation_mask, distillation_mask_right, StereoSample};
use stereokit_core::fixtures::{
    constant_disparity_sample, perturbed_map, random_image, random_map, smooth_image,
};
use stereokit_core::grid::{FloatMap, Image};
use stereokit_core::io::{load_floatmap, save_floatmap, save_image};
use stereokit_core::losses::{stage1_total, stage2_total, LossWeights};
use stereokit_core::matting::{build_laplacian, solve_matted, MattingParams};
use stereokit_core::metrics::eval_depth;
use stereokit_core::npe::{npe_jacobian_check, NpeParams, PatchOrigin};
use stereokit_core::warp::{warp_image, WarpSign};

fn report(n: usize, pass: bool, detail: &str, elapsed: Duration) {
    println!(
        "acceptance {n} {} {detail} ({:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(pass, "acceptance {n}: {detail}");
}

#[test]
fn acceptance_1_quantization() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for n in [1usize, 8, 48] {
        let d = QuantSchedule::new(2.0, 300.0, n).unwrap();
        let d = d.disparities();
        assert_eq!(d.len(), n + 1);
        worst = worst.max((d[0] - 2.0).abs()).max((d[n] - 300.0).abs());
        let r0 = d[1] / d[0];
        for i in 0..n {
            worst = worst.max((d[i + 1] / d[i] - r0).abs());
        }
    }
    let elapsed = t0.elapsed();
    report(
        1,
        worst <= 1e-9 && elapsed < Duration::from_secs(1),
        &format!("exponential quantization endpoints and ratio constancy, worst dev {worst:.2e} (tol 1e-9) for N in {{1, 8, 48}}"),
        elapsed,
    );
}

#[test]
fn acceptance_2_matting_vs_dense_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1902);
    let mut max_rel = 0.0f64;
    let mut max_row_sum = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for case in 0..25u64 {
        let h = rng.gen_range(3..=10);
        let w = rng.gen_range(3..=10);
        let guide = if case % 3 == 0 {
            random_image(h, w, 3, 10 + case)
        } else {
            smooth_image(h, w, 3, 10 + case)
        };
        let target = random_map(h, w, 0.0, 1.0, 100 + case);
        let conf = random_map(h, w, 0.25, 1.0, 200 + case);
        let params = MattingParams {
            window_radius: 1,
            eps: [1e-7, 1e-5, 1e-3][(case % 3) as usize],
            lambda: 10f64.powf(rng.gen_range(0.0..2.0)),
            cg_tol: 1e-12,
            cg_max_iter: 50_000,
        };
        let sys = build_laplacian(&guide, &params).unwrap();
        let n = sys.dim();

        let mut dense = DMatrix::<f64>::zeros(n, n);
        for (r, c, v) in sys.triplets() {
            dense[(r, c)] = v;
        }
        for i in 0..n {
            max_row_sum = max_row_sum.max(dense.row(i).sum().abs());
        }
        min_eig = min_eig.min(
            SymmetricEigen::new(dense.clone())
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min),
        );

        let mut a = dense;
        let mut b = DVector::zeros(n);
        for i in 0..n {
            let lc = params.lambda * conf.data()[i] as f64;
            a[(i, i)] += lc;
            b[i] = lc * target.data()[i] as f64;
        }
        let direct = a.lu().solve(&b).expect("regularized system is invertible");
        let cg = solve_matted(&sys, &target, &conf, &params).unwrap();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            num += (cg.data()[i] as f64 - direct[i]).powi(2);
            den += direct[i].powi(2);
        }
        max_rel = max_rel.max((num / den).sqrt());
    }
    let elapsed = t0.elapsed();
    let pass = max_rel <= 1e-6
        && max_row_sum < 1e-8
        && min_eig > -1e-8
        && elapsed < Duration::from_secs(30);
    report(
        2,
        pass,
        &format!(
            "25 random mattings vs dense direct solve: rel err {max_rel:.2e} (tol 1e-6), \
             laplacian row sums {max_row_sum:.2e} (< 1e-8), min eigenvalue {min_eig:.2e} (> -1e-8)"
        ),
        elapsed,
    );
}

// --- scalar re-evaluation of the distillation mask -----------------------
//
// Mirrors the documented warp contract: source position x -+ d, valid only
// inside [0, w - 1], interpolation (1 - a) * v0 + a * v1 in f64 stored as
// f32 (exact v0 when a == 0), photometric error channel-meaned in f64, and
// both inequalities strict.

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn source_x(x: usize, d: f64, side: Side) -> f64 {
    match side {
        Side::Left => x as f64 - d,
        Side::Right => x as f64 + d,
    }
}

fn sample_map(map: &FloatMap, y: usize, xs: f64) -> Option<f32> {
    if !(0.0..=(map.width() - 1) as f64).contains(&xs) {
        return None;
    }
    let x0 = xs.floor() as usize;
    let a = xs - x0 as f64;
    let v0 = map.get(y, x0) as f64;
    let v = if a == 0.0 {
        v0
    } else {
        (1.0 - a) * v0 + a * map.get(y, x0 + 1) as f64
    };
    Some(v as f32)
}

fn sample_image(img: &Image, y: usize, xs: f64, c: usize) -> Option<f32> {
    if !(0.0..=(img.width() - 1) as f64).contains(&xs) {
        return None;
    }
    let x0 = xs.floor() as usize;
    let a = xs - x0 as f64;
    let v0 = img.get(y, x0, c) as f64;
    let v = if a == 0.0 {
        v0
    } else {
        (1.0 - a) * v0 + a * img.get(y, x0 + 1, c) as f64
    };
    Some(v as f32)
}

#[allow(clippy::too_many_arguments)]
fn oracle_mask(
    img_self: &Image,
    img_other: &Image,
    disp_self: &FloatMap,
    disp_other: &FloatMap,
    matted_self: &FloatMap,
    matted_other: &FloatMap,
    side: Side,
) -> Vec<u8> {
    let (h, w, ch) = (img_self.height(), img_self.width(), img_self.channels());
    let mut bits = vec![0u8; h * w];
    for y in 0..h {
        for x in 0..w {
            let xm = source_x(x, matted_self.get(y, x) as f64, side);
            let xd = source_x(x, disp_self.get(y, x) as f64, side);
            let mut photo_m = 0.0f64;
            let mut photo_d = 0.0f64;
            let mut ok = true;
            for c in 0..ch {
                match (
                    sample_image(img_other, y, xm, c),
                    sample_image(img_other, y, xd, c),
                ) {
                    (Some(vm), Some(vd)) => {
                        photo_m += (img_self.get(y, x, c) as f64 - vm as f64).abs();
                        photo_d += (img_self.get(y, x, c) as f64 - vd as f64).abs();
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            let (pm, pd) = (
                sample_map(matted_other, y, xm),
                sample_map(disp_other, y, xd),
            );
            if let (true, Some(pm), Some(pd)) = (ok, pm, pd) {
                let photo_m = photo_m / ch as f64;
                let photo_d = photo_d / ch as f64;
                let lr_m = (matted_self.get(y, x) as f64 - pm as f64).abs();
                let lr_d = (disp_self.get(y, x) as f64 - pd as f64).abs();
                if photo_m < photo_d && lr_m < lr_d {
                    bits[y * w + x] = 1;
                }
            }
        }
    }
    bits
}

#[test]
fn acceptance_3_distillation_mask_bit_identical() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut mismatches = 0usize;
    let mut ones = 0usize;
    for i in 0..50u64 {
        let amp = rng.gen_range(2.0f32..20.0);
        let disp_l = random_map(16, 16, 0.0, amp, 1000 + i);
        let disp_r = random_map(16, 16, 0.0, amp, 2000 + i);
        let img_l = smooth_image(16, 16, 3, 3000 + i);
        let img_r = smooth_image(16, 16, 3, 4000 + i);
        let matted_l = perturbed_map(&disp_l, amp * 0.15, 5000 + i);
        let matted_r = perturbed_map(&disp_r, amp * 0.15, 6000 + i);
        let sample =
            StereoSample::new(img_l, img_r, disp_l, disp_r).unwrap();

        let got_l = distillation_mask(&sample, &matted_l, &matted_r).unwrap();
        let got_r = distillation_mask_right(&sample, &matted_l, &matted_r).unwrap();
        let want_l = oracle_mask(
            &sample.img_left,
            &sample.img_right,
            &sample.disp_left,
            &sample.disp_right,
            &matted_l,
            &matted_r,
            Side::Left,
        );
        let want_r = oracle_mask(
            &sample.img_right,
            &sample.img_left,
            &sample.disp_right,
            &sample.disp_left,
            &matted_r,
            &matted_l,
            Side::Right,
        );
        if got_l.data() != want_l.as_slice() || got_r.data() != want_r.as_slice() {
            mismatches += 1;
        }
        ones += got_l.count_ones() + got_r.count_ones();
    }
    let elapsed = t0.elapsed();
    let pass = mismatches == 0 && ones > 0 && elapsed < Duration::from_secs(10);
    report(
        3,
        pass,
        &format!(
            "50 random 16x16 distillation masks bit-identical to scalar oracle \
             ({mismatches} mismatching fixtures, {ones} set bits total)"
        ),
        elapsed,
    );
}

#[test]
fn acceptance_4_one_hot_synthesis_equals_warp() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let sched = QuantSchedule::new(0.5, 4.0, 4).unwrap();
    let np = sched.disparities().len();
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let img = smooth_image(16, 16, 3, 40 + i);
        let pick: Vec<usize> = (0..16 * 16).map(|_| rng.gen_range(0..np)).collect();
        let planes: Vec<FloatMap> = (0..np)
            .map(|n| {
                FloatMap::from_fn(16, 16, |y, x| (pick[y * 16 + x] == n) as u8 as f32).unwrap()
            })
            .collect();
        let probs = DisparityVolume::from_planes(VolumeKind::Probabilities, &planes).unwrap();
        let dmap = FloatMap::from_fn(16, 16, |y, x| {
            sched.disparities()[pick[y * 16 + x]] as f32
        })
        .unwrap();

        let synth = synthesize_right(&img, &probs, &sched).unwrap();
        let (warped, _) = warp_image(&img, &dmap, WarpSign::Right).unwrap();
        for (a, b) in synth.data().iter().zip(warped.data()) {
            worst = worst.max((*a as f64 - *b as f64).abs());
        }
    }

    // Zero displacement must reproduce the input bit for bit, full mask.
    let img = smooth_image(9, 13, 3, 77);
    let zero = FloatMap::constant(9, 13, 0.0).unwrap();
    let mut identity = true;
    for sign in [WarpSign::Left, WarpSign::Right] {
        let (out, mask) = warp_image(&img, &zero, sign).unwrap();
        identity &= out.data() == img.data() && mask.count_ones() == 9 * 13;
    }

    let elapsed = t0.elapsed();
    let pass = worst <= 1e-6 && identity && elapsed < Duration::from_secs(10);
    report(
        4,
        pass,
        &format!(
            "20 one-hot volumes: synthesized view vs direct warp, max abs diff {worst:.2e} \
             (tol 1e-6); zero-disparity warp exact identity: {identity}"
        ),
        elapsed,
    );
}

#[test]
fn acceptance_5_npe_jacobian_check() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = rng.gen_range(1..=6);
        let out = rng.gen_range(1..=4);
        let h = rng.gen_range(4..=9);
        let w = rng.gen_range(4..=9);
        let params = NpeParams::seeded(hidden, out, seed).unwrap();
        let origin = PatchOrigin::full(h, w).unwrap();
        let rep = npe_jacobian_check(&params, &origin, 3, seed ^ 0x5a5a).unwrap();
        worst = worst.max(rep.max_rel_err);
    }
    let elapsed = t0.elapsed();
    let pass = worst < 1e-4 && elapsed < Duration::from_secs(5);
    report(
        5,
        pass,
        &format!(
            "100 random parameter draws: analytic Jacobian vs central differences (h = 1e-5), \
             max rel err {worst:.2e} (tol 1e-4)"
        ),
        elapsed,
    );
}

#[test]
fn acceptance_6_weighted_sums_exact() {
    let t0 = Instant::now();
    let w = LossWeights::default();
    let pass = stage1_total(0.0, 1.0, 1.0, &w) == 0.0104
        && stage1_total(1.0, 1.0, 1.0, &w) == 1.0104
        && stage2_total(0.0, 0.0, 1.0, 1.0, &w) == 0.26
        && stage2_total(1.0, 1.0, 1.0, 1.0, &w) == 2.26;
    let elapsed = t0.elapsed();
    report(
        6,
        pass,
        "stage-1/stage-2 weighted sums exact in f64 on symbolic unit inputs \
         (0.0104, 1.0104, 0.26, 2.26)",
        elapsed,
    );
}

#[test]
fn acceptance_7_metrics_fixture_and_scale_invariance() {
    let t0 = Instant::now();
    // 1.2x these ground-truth depths is exact in f32, so abs_rel is exactly
    // 0.2 up to the f64 mean.
    let vals = [2.5f32, 5.0, 10.0, 20.0, 40.0];
    let gt = FloatMap::from_fn(5, 5, |y, x| vals[(y * 5 + x) % 5]).unwrap();
    let pred = FloatMap::from_fn(5, 5, |y, x| 1.2 * vals[(y * 5 + x) % 5]).unwrap();
    let plain = eval_depth(&pred, &gt, 80.0, false).unwrap();
    let abs_rel_dev = (plain.abs_rel - 0.2).abs();
    let delta1_ok = plain.delta1 == 1.0;

    // Median scaling must cancel any global prediction rescale; x4 keeps
    // every intermediate exact so the two reports agree bitwise.
    let scaled_pred = FloatMap::from_fn(5, 5, |y, x| 4.0 * pred.get(y, x)).unwrap();
    let r1 = eval_depth(&pred, &gt, 80.0, true).unwrap();
    let r2 = eval_depth(&scaled_pred, &gt, 80.0, true).unwrap();
    let invariance_dev = r1
        .fields()
        .iter()
        .zip(r2.fields().iter())
        .map(|((_, a), (_, b))| (a - b).abs())
        .fold(0.0f64, f64::max);

    let elapsed = t0.elapsed();
    let pass = abs_rel_dev <= 1e-9 && delta1_ok && invariance_dev <= 1e-9;
    report(
        7,
        pass,
        &format!(
            "abs_rel dev {abs_rel_dev:.2e} from 0.2 (tol 1e-9), delta1 == 1: {delta1_ok}, \
             median-scale invariance dev {invariance_dev:.2e} (tol 1e-9)"
        ),
        elapsed,
    );
}

#[test]
fn acceptance_8_pipeline_end_to_end() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let sample = constant_disparity_sample(14, 22, 4.0, 88);
    let disp_true = FloatMap::constant(14, 22, 4.0).unwrap();
    let noisy_l = perturbed_map(&disp_true, 1.2, 11);
    let noisy_r = perturbed_map(&disp_true, 1.2, 12);
    save_image(root.join("img_left.pfm"), &sample.img_left).unwrap();
    save_image(root.join("img_right.pfm"), &sample.img_right).unwrap();
    save_floatmap(root.join("disp_left.pfm"), &noisy_l).unwrap();
    save_floatmap(root.join("disp_right.pfm"), &noisy_r).unwrap();
    std::fs::write(
        root.join("manifest.tsv"),
        "img_left.pfm\timg_right.pfm\tdisp_left.pfm\tdisp_right.pfm\n",
    )
    .unwrap();
    std::fs::write(root.join("stereokit.conf"), "lambda = 2.0\njobs = 2\n").unwrap();

    let run = |out: &str| {
        let output = Command::new(env!("CARGO_BIN_EXE_stereokit"))
            .env_remove("STEREOKIT_CONFIG")
            .arg("--config")
            .arg(root.join("stereokit.conf"))
            .arg("pipeline")
            .arg("--manifest")
            .arg(root.join("manifest.tsv"))
            .arg("--out")
            .arg(root.join(out))
            .output()
            .unwrap();
        assert!(output.status.success(), "pipeline run failed: {output:?}");
        output.stdout
    };
    let stdout1 = run("out1");
    let stdout2 = run("out2");

    let mad = |map: &FloatMap| -> f64 {
        map.data().iter().map(|&v| (v as f64 - 4.0).abs()).sum::<f64>() / map.data().len() as f64
    };
    let matted_l = load_floatmap(root.join("out1/sample_00000_matted_left.pfm")).unwrap();
    let matted_r = load_floatmap(root.join("out1/sample_00000_matted_right.pfm")).unwrap();
    let improves = mad(&matted_l) <= mad(&noisy_l) && mad(&matted_r) <= mad(&noisy_r);

    let mut deterministic = stdout1 == stdout2;
    for name in [
        "sample_00000_matted_left.pfm",
        "sample_00000_matted_right.pfm",
        "sample_00000_mask_left.pfm",
        "sample_00000_mask_right.pfm",
        "matted_manifest.tsv",
    ] {
        deterministic &= std::fs::read(root.join("out1").join(name)).unwrap()
            == std::fs::read(root.join("out2").join(name)).unwrap();
    }

    let elapsed = t0.elapsed();
    let pass = improves && deterministic && elapsed < Duration::from_secs(60);
    report(
        8,
        pass,
        &format!(
            "end-to-end pipeline on constant-disparity fixture: matted MAD {:.4} <= noisy MAD {:.4} \
             (right {:.4} <= {:.4}), byte-identical across runs: {deterministic}",
            mad(&matted_l),
            mad(&noisy_l),
            mad(&matted_r),
            mad(&noisy_r)
        ),
        elapsed,
    );
}

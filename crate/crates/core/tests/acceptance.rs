//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//!
//! Criterion 7 runs on the first 50 entries of the dataset under `PISA_ASD_DIR` when
//! that variable is set (optional `PISA_ASD_IMAGES`, `PISA_ASD_MASKS` subdirectories
//! and `PISA_ASD_MASK_SUFFIX`). Otherwise it runs on a generated proxy set and says so.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pisa::cross::{build_cross_field, support_region_size};
use pisa::eval::{
    adaptive_threshold, average_precision, evaluate_dataset, evaluate_map, f_measure, load_dataset, mae,
    mean_abs_difference, pr_curve, precision_recall_at, DatasetEntry, DatasetLayout, PrPoint, BETA_SQ,
};
use pisa::imaging::{load_rgb, save_gray_png, ColorSpace};
use pisa::prior::{modulate_prior, raw_prior_of, PriorFrame, SpatialPriorParams};
use pisa::solver::{filter_cost_volume, CostVolume};
use pisa::{detect, RgbImage, RunConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- image helpers

/// A few flat rectangles over a random base color, plus uniform noise.
fn blocky_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    let mut data = vec![0u8; w * h * 3];
    let base: [u8; 3] = rng.gen();
    for px in data.chunks_exact_mut(3) {
        px.copy_from_slice(&base);
    }
    for _ in 0..rng.gen_range(2..6) {
        let color: [u8; 3] = rng.gen();
        let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let (x1, y1) = (rng.gen_range(x0..w) + 1, rng.gen_range(y0..h) + 1);
        for y in y0..y1 {
            for x in x0..x1 {
                data[(y * w + x) * 3..][..3].copy_from_slice(&color);
            }
        }
    }
    let amp: i32 = rng.gen_range(0..30);
    for v in data.iter_mut() {
        *v = (*v as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8;
    }
    RgbImage::from_rgb(w, h, data).unwrap()
}

fn bands(w: usize, h: usize, columns: &[(usize, [u8; 3])]) -> RgbImage {
    let mut data = Vec::with_capacity(w * h * 3);
    for _ in 0..h {
        for x in 0..w {
            let color = columns.iter().rev().find(|&&(start, _)| x >= start).unwrap().1;
            data.extend_from_slice(&color);
        }
    }
    RgbImage::from_rgb(w, h, data).unwrap()
}

// ---------------------------------------------------------------- brute-force support regions

fn similar(img: &RgbImage, p: (usize, usize), q: (usize, usize), tau: u8) -> bool {
    let (a, b) = (img.pixel(p.0, p.1), img.pixel(q.0, q.1));
    (0..3).all(|c| (a[c] as i32 - b[c] as i32).abs() <= tau as i32)
}

/// Arm lengths (left, right, up, down) by walking outward from the anchor.
fn brute_arms(img: &RgbImage, x: usize, y: usize, tau: u8, max_arm: usize) -> [usize; 4] {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut arms = [0; 4];
    for (k, (dx, dy)) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)].into_iter().enumerate() {
        let mut len = 0;
        loop {
            if len == max_arm {
                break;
            }
            let (qx, qy) = (
                x as isize + dx * (len as isize + 1),
                y as isize + dy * (len as isize + 1),
            );
            if qx < 0 || qy < 0 || qx >= w || qy >= h {
                break;
            }
            if !similar(img, (x, y), (qx as usize, qy as usize), tau) {
                break;
            }
            len += 1;
        }
        arms[k] = len;
    }
    arms
}

/// Support region of every pixel: union over the vertical arm of each spine pixel's
/// horizontal segment.
fn brute_regions(img: &RgbImage, tau: u8, max_arm: usize) -> Vec<BTreeSet<(usize, usize)>> {
    let (w, h) = (img.width(), img.height());
    let arms: Vec<[usize; 4]> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| brute_arms(img, x, y, tau, max_arm))
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let a = arms[y * w + x];
            let mut set = BTreeSet::new();
            for qy in y - a[2]..=y + a[3] {
                let b = arms[qy * w + x];
                for qx in x - b[0]..=x + b[1] {
                    set.insert((qx, qy));
                }
            }
            out.push(set);
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut members = 0usize;
    for _ in 0..50 {
        let img = blocky_image(&mut rng, 24, 24);
        let tau = rng.gen_range(0..=80u8);
        let max_arm = rng.gen_range(0..=12usize);
        let cross = build_cross_field(&img, tau, max_arm);
        let oracle = brute_regions(&img, tau, max_arm);
        for y in 0..24 {
            for x in 0..24 {
                let got: BTreeSet<(usize, usize)> = cross.region(x, y).members().collect();
                members += got.len();
                if got != oracle[y * 24 + x] {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 5.0,
        format!("50 images, {mismatches} region mismatches over {members} members, {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let levels = 24;
    let (w, h) = (32, 32);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let img = blocky_image(&mut rng, w, h);
        let tau = rng.gen_range(10..=80u8);
        let max_arm = rng.gen_range(1..=10usize);
        let cross = build_cross_field(&img, tau, max_arm);
        let regions = brute_regions(&img, tau, max_arm);
        let data: Vec<f64> = (0..w * h * levels).map(|_| rng.gen_range(0.0..600.0)).collect();
        let volume = CostVolume::from_data(w, h, levels, data.clone());
        let filtered = filter_cost_volume(&volume, &cross, &support_region_size(&cross)).unwrap();
        let size = |x: usize, y: usize| regions[y * w + x].len() as f64;
        for p in 0..w * h {
            let norm: f64 = regions[p].iter().map(|&(x, y)| size(x, y)).sum();
            for s in 0..levels {
                let num: f64 = regions[p]
                    .iter()
                    .map(|&(x, y)| size(x, y) * data[s * w * h + y * w + x])
                    .sum();
                worst = worst.max((num / norm - filtered.get(p, s)).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs < 10.0,
        format!("20 volumes of 32x32x24, max abs error {worst:.3e}, {secs:.2} s"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = RunConfig {
        max_arm: 0,
        ..RunConfig::pisa()
    };
    let mut bad = 0;
    for _ in 0..10 {
        let (w, h) = (rng.gen_range(8..48), rng.gen_range(8..48));
        let img = blocky_image(&mut rng, w, h);
        let d = detect(&img, &cfg).unwrap();
        let same = d.labels == d.normalized
            && d.saliency
                .values
                .iter()
                .zip(&d.normalized.levels)
                .all(|(&s, &f)| s == f as f64);
        bad += usize::from(!same);
    }
    outcome(
        bad == 0,
        format!("10 images with zero-length arms, {bad} differ from their normalized levels"),
    )
}

// ---------------------------------------------------------------- contrast oracle

fn lab_of(rgb: [u8; 3]) -> [f64; 3] {
    let lin = |v: u8| {
        let c = v as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let (r, g, b) = (lin(rgb[0]), lin(rgb[1]), lin(rgb[2]));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    let f = |t: f64| {
        if t > 216.0 / 24389.0 {
            t.cbrt()
        } else {
            (24389.0 / 27.0 * t + 16.0) / 116.0
        }
    };
    [116.0 * f(y) - 16.0, 500.0 * (f(x) - f(y)), 200.0 * (f(y) - f(z))]
}

/// The three occupied bins (12 per channel) of a flat color.
fn color_bins(rgb: [u8; 3]) -> [usize; 3] {
    let lab = lab_of(rgb);
    let ranges = [(0.0, 100.0), (-128.0, 127.0), (-128.0, 127.0)];
    let mut out = [0; 3];
    for c in 0..3 {
        let (lo, hi) = ranges[c];
        out[c] = c * 12 + (((lab[c] - lo) / (hi - lo) * 12.0).floor() as usize).min(11);
    }
    out
}

fn one_hot(dim: usize, bins: &[usize], mass: f64) -> Vec<f64> {
    let mut h = vec![0.0; dim];
    for &b in bins {
        h[b] += mass;
    }
    h
}

/// `U_k = sum_i n_i ||h_i - h_k||` over the given classes.
fn hand_contrast(classes: &[(Vec<f64>, usize)]) -> Vec<f64> {
    classes
        .iter()
        .map(|(hk, _)| {
            classes
                .iter()
                .map(|(hi, n)| {
                    let d2: f64 = hi.iter().zip(hk).map(|(a, b)| (a - b) * (a - b)).sum();
                    *n as f64 * d2.sqrt()
                })
                .sum()
        })
        .collect()
}

/// Compares per-pixel raw and smoothed contrast of one cue against per-class values.
fn check_cue(
    cue: Option<&pisa::solver::CueMaps>,
    class_of: &[usize],
    expected: &[f64],
    worst: &mut f64,
) -> Result<(), String> {
    let cue = cue.ok_or("cue missing")?;
    if cue.model.num_clusters() != expected.len() {
        return Err(format!(
            "{} clusters, expected {}",
            cue.model.num_clusters(),
            expected.len()
        ));
    }
    for values in [&cue.raw_contrast, &cue.contrast.values] {
        let per_pixel = cue.model.broadcast(values);
        for (p, &c) in class_of.iter().enumerate() {
            let e = expected[c];
            *worst = worst.max((per_pixel[p] - e).abs() / e.max(1.0));
        }
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let (w, h) = (20, 12);
    let cfg = RunConfig {
        max_arm: 0,
        ..RunConfig::pisa()
    };
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();

    // Two tones: a red block on the left, blue on the right.
    let (red, blue) = ([200u8, 40, 40], [40u8, 60, 200]);
    let split = 6;
    let img = bands(w, h, &[(0, red), (split, blue)]);
    let d = detect(&img, &cfg).unwrap();
    let color_class: Vec<usize> = (0..w * h).map(|p| usize::from(p % w >= split)).collect();
    let color = hand_contrast(&[
        (one_hot(36, &color_bins(red), 1.0 / 3.0), split * h),
        (one_hot(36, &color_bins(blue), 1.0 / 3.0), (w - split) * h),
    ]);
    // Central differences put the step on the two columns either side of it.
    let edge = |x: usize| x + 1 == split || x == split;
    let om_class: Vec<usize> = (0..w * h).map(|p| usize::from(edge(p % w))).collect();
    let structure = hand_contrast(&[
        (one_hot(16, &[0, 8], 0.5), (w - 2) * h),
        (one_hot(16, &[0, 15], 0.5), 2 * h),
    ]);
    if let Err(e) = check_cue(d.color.as_ref(), &color_class, &color, &mut worst) {
        notes.push(format!("two-tone color: {e}"));
    }
    if let Err(e) = check_cue(d.structure.as_ref(), &om_class, &structure, &mut worst) {
        notes.push(format!("two-tone structure: {e}"));
    }

    // Three gray bands; steps of 100 and 60 land in magnitude bins 7 and 4.
    let (g0, g1, g2) = ([40u8; 3], [140u8; 3], [200u8; 3]);
    let img = bands(w, h, &[(0, g0), (7, g1), (14, g2)]);
    let d = detect(&img, &cfg).unwrap();
    let band = |x: usize| usize::from(x >= 7) + usize::from(x >= 14);
    let color_class: Vec<usize> = (0..w * h).map(|p| band(p % w)).collect();
    let color = hand_contrast(&[
        (one_hot(36, &color_bins(g0), 1.0 / 3.0), 7 * h),
        (one_hot(36, &color_bins(g1), 1.0 / 3.0), 7 * h),
        (one_hot(36, &color_bins(g2), 1.0 / 3.0), 6 * h),
    ]);
    let om_class: Vec<usize> = (0..w * h)
        .map(|p| match p % w {
            6 | 7 => 1,
            13 | 14 => 2,
            _ => 0,
        })
        .collect();
    let structure = hand_contrast(&[
        (one_hot(16, &[0, 8], 0.5), (w - 4) * h),
        (one_hot(16, &[0, 15], 0.5), 2 * h),
        (one_hot(16, &[0, 12], 0.5), 2 * h),
    ]);
    if let Err(e) = check_cue(d.color.as_ref(), &color_class, &color, &mut worst) {
        notes.push(format!("three-band color: {e}"));
    }
    if let Err(e) = check_cue(d.structure.as_ref(), &om_class, &structure, &mut worst) {
        notes.push(format!("three-band structure: {e}"));
    }

    // One cluster per cue: both contrast maps and the confidence vanish.
    let mut zero = true;
    for cfg in [RunConfig::pisa(), RunConfig::fpisa()] {
        let img = RgbImage::filled(w, h, ColorSpace::Rgb, &[90, 160, 30]);
        let d = detect(&img, &cfg).unwrap();
        for cue in [d.color.as_ref(), d.structure.as_ref()].into_iter().flatten() {
            zero &= cue.model.num_clusters() == 1;
            zero &= cue.raw_contrast.iter().chain(&cue.contrast.values).all(|&u| u == 0.0);
        }
        zero &= d.confidence.iter().all(|&f| f == 0.0);
        zero &= d.saliency.to_gray().iter().all(|&g| g == 0);
    }
    if !zero {
        notes.push("single-cluster image has nonzero contrast".into());
    }

    let pass = notes.is_empty() && worst <= 1e-12;
    let detail = if notes.is_empty() {
        format!("two- and three-cluster cues match hand sums (max rel error {worst:.1e}); single cluster is zero")
    } else {
        notes.join("; ")
    };
    outcome(pass, detail)
}

// ---------------------------------------------------------------- priors

fn random_cluster(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<(usize, usize)> {
    let n = rng.gen_range(1..=120usize);
    let (cx, cy) = (rng.gen_range(0..w), rng.gen_range(0..h));
    let spread = rng.gen_range(1..=w.max(h));
    let mut set = BTreeSet::new();
    for _ in 0..n {
        let x = (cx as isize + rng.gen_range(-(spread as isize)..=spread as isize)).clamp(0, w as isize - 1);
        let y = (cy as isize + rng.gen_range(-(spread as isize)..=spread as isize)).clamp(0, h as isize - 1);
        set.insert((x as usize, y as usize));
    }
    set.into_iter().collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut border_bad, mut full_bad, mut full_checked, mut unrestricted_drops) = (0, 0, 0, 0);
    let (mut shift_bad, mut shifts, mut cutoff_bad) = (0, 0, 0);
    for _ in 0..1000 {
        let (w, h) = (rng.gen_range(24..240), rng.gen_range(24..240));
        let frame = PriorFrame::dense(w, h, rng.gen_range(1..=10));
        let params = SpatialPriorParams {
            lambda: rng.gen_range(0.0..5e4),
            kappa: rng.gen_range(0.001..0.05),
            cutoff: rng.gen_range(5.0..60.0),
            border_width: frame.border_width,
            center_preference: true,
            boundary_exclusion: true,
        };
        let cluster = random_cluster(&mut rng, w, h);

        // Add one border pixel not yet in the cluster.
        let added = loop {
            let p = (rng.gen_range(0..w), rng.gen_range(0..h));
            if frame.in_border(p.0, p.1) && !cluster.contains(&p) {
                break p;
            }
        };
        let mut grown = cluster.clone();
        grown.push(added);
        let border_only = SpatialPriorParams {
            center_preference: false,
            ..params
        };
        if raw_prior_of(&grown, &frame, &border_only) < raw_prior_of(&cluster, &frame, &border_only) {
            border_bad += 1;
        }
        let (before, after) = (
            raw_prior_of(&cluster, &frame, &params),
            raw_prior_of(&grown, &frame, &params),
        );
        if frame.center_term(&[added]) >= frame.center_term(&cluster) {
            full_checked += 1;
            if after < before - 1e-9 * before.abs() {
                full_bad += 1;
            }
        } else if after < before {
            unrestricted_drops += 1;
        }

        // Integer shift of the whole cluster that brings its mean closer to the center.
        let n = cluster.len() as f64;
        let (mx, my) = cluster
            .iter()
            .fold((0.0, 0.0), |a, &(x, y)| (a.0 + x as f64 / n, a.1 + y as f64 / n));
        let (cx, cy) = frame.center();
        let alpha = rng.gen_range(0.0..=1.0);
        let (tx, ty) = (
            ((cx - mx) * alpha).round() as isize,
            ((cy - my) * alpha).round() as isize,
        );
        let moved: Option<Vec<(usize, usize)>> = cluster
            .iter()
            .map(|&(x, y)| {
                let (nx, ny) = (x as isize + tx, y as isize + ty);
                (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then_some((nx as usize, ny as usize))
            })
            .collect();
        let closer = (mx + tx as f64 - cx).hypot(my + ty as f64 - cy) <= (mx - cx).hypot(my - cy);
        if let (Some(moved), true) = (moved, closer) {
            shifts += 1;
            let (old, new) = (frame.center_term(&cluster), frame.center_term(&moved));
            if new > old + 1e-9 * old.max(1.0) {
                shift_bad += 1;
            }
        }

        // Past the cut-off the prior vanishes.
        let raws = [
            before,
            after,
            params.cutoff * rng.gen_range(1.0..3.0),
            rng.gen_range(0.0..2.0 * params.cutoff),
        ];
        for (&r, &dv) in raws.iter().zip(&modulate_prior(&raws, &params)) {
            if r > params.cutoff && dv != 0.0 {
                cutoff_bad += 1;
            }
        }
    }
    let pass = border_bad == 0 && full_bad == 0 && shift_bad == 0 && cutoff_bad == 0;
    outcome(
        pass,
        format!(
            "1000 cases: border term drops {border_bad}, full raw prior drops {full_bad}/{full_checked} \
             (added pixel no closer than the cluster mean; {unrestricted_drops} drops otherwise), \
             center term rises {shift_bad}/{shifts} shifts, nonzero past cut-off {cutoff_bad}"
        ),
    )
}

// ---------------------------------------------------------------- metrics

fn criterion_6() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    let map = [255u8, 128, 64, 0];
    let mask = [true, true, false, false];
    let pr = pr_curve(&map, &mask).unwrap();
    check(
        "2x2 pr at 100",
        close(pr[100].precision, 1.0) && close(pr[100].recall, 1.0),
    );
    check("2x2 pr at 0", close(pr[0].precision, 0.5) && close(pr[0].recall, 1.0));
    check("2x2 threshold", close(adaptive_threshold(&[0, 100, 100, 200]), 200.0));
    check("f measure", close(f_measure(0.8, 0.5, BETA_SQ), 0.52 / 0.74));
    check("f measure zero recall", f_measure(1.0, 0.0, BETA_SQ) == 0.0);
    check("2x2 mae", close(mae(&[1.0, 0.5, 0.0, 0.0], &mask).unwrap(), 0.125));

    // 4x4 ramp 0, 16, .., 240 with mask {96} plus everything from 160 up.
    let map: Vec<u8> = (0..16).map(|i| (16 * i) as u8).collect();
    let mask: Vec<bool> = map.iter().map(|&v| v == 96 || v >= 160).collect();
    let t = adaptive_threshold(&map);
    check("4x4 threshold", close(t, 240.0));
    let at_t = precision_recall_at(&map, &mask, t).unwrap();
    check(
        "4x4 pr at threshold",
        close(at_t.precision, 1.0) && close(at_t.recall, 1.0 / 7.0),
    );
    check(
        "4x4 f",
        close(f_measure(at_t.precision, at_t.recall, BETA_SQ), 1.3 / 3.1),
    );
    let pr = pr_curve(&map, &mask).unwrap();
    check(
        "4x4 pr at 100",
        close(pr[100].precision, 6.0 / 9.0) && close(pr[100].recall, 6.0 / 7.0),
    );
    let unit: Vec<f64> = map.iter().map(|&v| v as f64 / 255.0).collect();
    check("4x4 mae", close(mae(&unit, &mask).unwrap(), 1113.0 / 4080.0));
    let two_segment = [
        PrPoint {
            precision: 1.0,
            recall: 0.5,
        },
        PrPoint {
            precision: 0.5,
            recall: 1.0,
        },
    ];
    check("two-segment ap", close(average_precision(&two_segment), 0.875));

    let mask: Vec<bool> = (0..64)
        .map(|i| (2..6).contains(&(i % 8)) && (3..7).contains(&(i / 8)))
        .collect();
    let perfect: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    let r = evaluate_map("perfect", 8, 8, &perfect, &mask).unwrap();
    check(
        "perfect detector",
        r.f_measure == 1.0 && r.mae == 0.0 && close(r.average_precision, 1.0),
    );

    let pass = failed.is_empty();
    let detail = if pass {
        "2x2 and 4x4 fixtures within 1e-9; perfect detector F = 1, MAE = 0, AP = 1".to_string()
    } else {
        format!("failed: {}", failed.join(", "))
    };
    outcome(pass, detail)
}

// ---------------------------------------------------------------- datasets

/// Smooth random background, one elliptical object that differs in color (kind 0),
/// in texture (kind 1) or in both (kind 2), plus mild noise.
fn proxy_image(seed: u64, kind: usize, w: usize, h: usize) -> (RgbImage, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = w as f64 / 160.0;
    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(40.0..215.0));
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(25.0..60.0) * scale,
                std::array::from_fn(|_| rng.gen_range(-35.0..35.0)),
            )
        })
        .collect();
    let (a, b) = (rng.gen_range(18.0..35.0) * scale, rng.gen_range(14.0..28.0) * scale);
    let cx = w as f64 / 2.0 + rng.gen_range(-25.0..25.0) * scale;
    let cy = h as f64 / 2.0 + rng.gen_range(-18.0..18.0) * scale;
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let color = loop {
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..255.0));
        if c.iter().zip(&base).map(|(u, v)| (u - v).abs()).sum::<f64>() >= 150.0 {
            break c;
        }
    };
    let freq = rng.gen_range(0.5..1.2) / scale;
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let stripe_amp = rng.gen_range(30.0..50.0);
    let noise = Normal::new(0.0, 4.0).unwrap();

    let mut data = Vec::with_capacity(w * h * 3);
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let mut px = base;
            for &(bx, by, s, amp) in &blobs {
                let g = (-((xf - bx).powi(2) + (yf - by).powi(2)) / (2.0 * s * s)).exp();
                for c in 0..3 {
                    px[c] += amp[c] * g;
                }
            }
            let u = (xf - cx) * theta.cos() + (yf - cy) * theta.sin();
            let v = -(xf - cx) * theta.sin() + (yf - cy) * theta.cos();
            let inside = (u / a).powi(2) + (v / b).powi(2) <= 1.0;
            if inside {
                if kind != 1 {
                    px = color;
                }
                if kind != 0 {
                    let s = (freq * (xf * angle.cos() + yf * angle.sin())).sin().signum() * stripe_amp;
                    for c in px.iter_mut() {
                        *c += s;
                    }
                }
            }
            for c in px {
                data.push((c + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8);
            }
            mask.push(inside);
        }
    }
    (RgbImage::from_rgb(w, h, data).unwrap(), mask)
}

fn write_proxy_dataset(dir: &Path, count: usize, w: usize, h: usize) {
    for i in 0..count {
        let (img, mask) = proxy_image(700 + i as u64, i % 3, w, h);
        let buf = image::RgbImage::from_raw(w as u32, h as u32, img.data().to_vec()).unwrap();
        buf.save(dir.join(format!("p{i:02}.bmp"))).unwrap();
        let gray: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        save_gray_png(dir.join(format!("p{i:02}.png")), w, h, &gray).unwrap();
    }
}

fn external_dataset() -> Option<Vec<DatasetEntry>> {
    let root = PathBuf::from(std::env::var_os("PISA_ASD_DIR")?);
    let mut layout = DatasetLayout::default();
    if let Some(d) = std::env::var_os("PISA_ASD_IMAGES") {
        layout.image_dir = d.into();
    }
    if let Some(d) = std::env::var_os("PISA_ASD_MASKS") {
        layout.mask_dir = d.into();
    }
    if let Ok(s) = std::env::var("PISA_ASD_MASK_SUFFIX") {
        layout.mask_suffix = s;
    }
    let mut entries = load_dataset(&root, &layout).ok()?;
    entries.truncate(50);
    Some(entries)
}

fn gray_map(entry: &DatasetEntry, cfg: &RunConfig) -> pisa::Result<Vec<u8>> {
    Ok(detect(&load_rgb(&entry.image_path)?, cfg)?.saliency.to_gray())
}

fn criterion_7(proxy: &[DatasetEntry]) -> Outcome {
    let (entries, source) = match external_dataset() {
        Some(e) => (e, "PISA_ASD_DIR".to_string()),
        None => (
            proxy.to_vec(),
            "generated proxy set, no public dataset available".to_string(),
        ),
    };
    let mut scores = Vec::new();
    for (label, cc, sc) in [("full", true, true), ("cc", true, false), ("sc", false, true)] {
        let cfg = RunConfig {
            color_contrast: cc,
            structure_contrast: sc,
            ..RunConfig::pisa()
        };
        let report = evaluate_dataset(label, &entries, |e| gray_map(e, &cfg));
        scores.push(report.aggregate.mean_f_measure);
    }
    let (full, cc, sc) = (scores[0], scores[1], scores[2]);
    outcome(
        full >= cc && full >= sc,
        format!(
            "{} images ({source}): mean F0.3 full {full:.4}, cc {cc:.4}, sc {sc:.4}",
            entries.len()
        ),
    )
}

fn centered_disk(w: usize, h: usize) -> RgbImage {
    let (cx, cy, r) = (w as f64 / 2.0, h as f64 / 2.0, h as f64 / 5.0);
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let inside = (x as f64 - cx).hypot(y as f64 - cy) <= r;
            data.extend_from_slice(if inside { &[220, 40, 30] } else { &[60, 120, 170] });
        }
    }
    RgbImage::from_rgb(w, h, data).unwrap()
}

fn criterion_8() -> Outcome {
    let (w, h) = (400, 300);
    let mut images: Vec<RgbImage> = (0..3).map(|k| proxy_image(800 + k as u64, k, w, h).0).collect();
    images.push(centered_disk(w, h));
    let (pisa_cfg, fast_cfg) = (RunConfig::pisa(), RunConfig::fpisa());
    let (mut slow, mut fast) = (Duration::ZERO, Duration::ZERO);
    let mut diffs = Vec::new();
    let repeats = 2;
    for img in &images {
        let a = detect(img, &pisa_cfg).unwrap();
        let b = detect(img, &fast_cfg).unwrap();
        diffs.push(mean_abs_difference(&a.saliency.to_unit(), &b.saliency.to_unit()).unwrap());
        for _ in 0..repeats {
            let t = Instant::now();
            detect(img, &pisa_cfg).unwrap();
            slow += t.elapsed();
            let t = Instant::now();
            detect(img, &fast_cfg).unwrap();
            fast += t.elapsed();
        }
    }
    let runs = (images.len() * repeats) as f64;
    let (slow_s, fast_s) = (slow.as_secs_f64() / runs, fast.as_secs_f64() / runs);
    let ratio = slow_s / fast_s;
    let mean_diff = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let per_image: Vec<String> = diffs.iter().map(|d| format!("{d:.3}")).collect();
    outcome(
        ratio >= 5.0 && mean_diff <= 0.15,
        format!(
            "400x300: pisa {slow_s:.3} s, fpisa {fast_s:.3} s, ratio {ratio:.2}; map MAE {mean_diff:.4} [{}]",
            per_image.join(", ")
        ),
    )
}

fn criterion_9(entries: &[DatasetEntry], dir: &Path) -> Outcome {
    let cfg = RunConfig::pisa();
    let mut csvs = Vec::new();
    for run in 0..2 {
        let report = evaluate_dataset("determinism", entries, |e| gray_map(e, &cfg));
        let (csv, pr) = (
            dir.join(format!("metrics-{run}.csv")),
            dir.join(format!("pr-{run}.csv")),
        );
        report.write_csv(&csv).unwrap();
        report.write_pr_csv(&pr).unwrap();
        csvs.push((std::fs::read(csv).unwrap(), std::fs::read(pr).unwrap()));
    }
    let same = csvs[0] == csvs[1];
    outcome(
        same,
        format!(
            "{} images, two runs with seed {}: metrics.csv {} bytes and pr.csv {} bytes, {}",
            entries.len(),
            cfg.seed,
            csvs[0].0.len(),
            csvs[0].1.len(),
            if same { "identical" } else { "different" }
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("proxy");
    std::fs::create_dir(&data_dir).unwrap();
    write_proxy_dataset(&data_dir, 50, 400, 300);
    let proxy = load_dataset(&data_dir, &DatasetLayout::default()).unwrap();

    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(|| criterion_7(&proxy))),
        (8, Box::new(criterion_8)),
        (9, Box::new(|| criterion_9(&proxy[..12], dir.path()))),
    ];
    let mut failures = 0;
    for (n, run) in criteria {
        let start = Instant::now();
        let o = run();
        failures += usize::from(!o.pass);
        println!(
            "criterion {n} [{}] {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

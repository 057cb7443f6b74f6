mod common;

use common::oracle::*;

use greenstore::metrics::{compression_percentage, mse, psnr, render_table, ssim, Psnr, QualityReport, TableRow, SSIM_C1};
use greenstore::{Error, RasterImage};
use proptest::prelude::*;
use rand::Rng;

fn gray_pixels(values: &[u8]) -> RasterImage {
    let data = values.iter().flat_map(|&v| [v, v, v]).collect();
    RasterImage::new(values.len() as u32, 1, 3, data).unwrap()
}

fn rgb_pixels(pixels: &[[u8; 3]], width: u32) -> RasterImage {
    let data = pixels.iter().flatten().copied().collect();
    RasterImage::new(width, pixels.len() as u32 / width, 3, data).unwrap()
}

#[test]
fn psnr_hand_computed_pairs() {
    let cases: Vec<(RasterImage, RasterImage, f64)> = vec![
        // full-scale error everywhere: MSE 65025
        (gray_pixels(&[255]), gray_pixels(&[0]), 0.0),
        // one of two pixels off by 4 on every channel: MSE 8
        (gray_pixels(&[10, 20]), gray_pixels(&[10, 24]), 39.099903738759664),
        // one channel off by 3: MSE 3
        (rgb_pixels(&[[0, 0, 0]], 1), rgb_pixels(&[[3, 0, 0]], 1), 43.35959106148248),
        // every sample off by one: MSE 1
        (
            rgb_pixels(&[[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]], 2),
            rgb_pixels(&[[2, 1, 4], [3, 6, 5], [8, 7, 10], [9, 12, 11]], 2),
            48.1308036086791,
        ),
        // a single saturated sample among six: MSE 65025 / 6
        (rgb_pixels(&[[0, 0, 0], [0, 0, 0]], 2), rgb_pixels(&[[255, 0, 0], [0, 0, 0]], 2), 7.781512503836437),
    ];
    for (i, (a, b, hand)) in cases.iter().enumerate() {
        let ours = psnr(a, b).unwrap();
        assert!((ours - brute_psnr(a, b)).abs() <= 1e-9, "pair {i}: {ours} vs oracle");
        assert!((ours - hand).abs() <= 1e-9, "pair {i}: {ours} vs hand value {hand}");
    }
    assert_eq!(mse(&gray_pixels(&[10, 20]), &gray_pixels(&[10, 24])).unwrap(), 8.0);
}

#[test]
fn psnr_matches_oracle_on_random_pairs() {
    let mut rng = common::rng(30);
    for _ in 0..50 {
        let a = common::random_image(&mut rng, 20, 20);
        let data = a.data().iter().map(|&v| v.saturating_add(rng.gen_range(0..4))).collect();
        let b = RasterImage::new(a.width(), a.height(), 3, data).unwrap();
        if a == b {
            continue;
        }
        assert!((psnr(&a, &b).unwrap() - brute_psnr(&a, &b)).abs() <= 1e-9);
    }
}

#[test]
fn psnr_of_identical_images_is_infinite() {
    let img = common::natural_image(12, 11, 1);
    assert_eq!(psnr(&img, &img).unwrap(), f64::INFINITY);
    let report = QualityReport::new(&img, &img, 10, 5).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["psnr_db"], "inf");
    assert_eq!(serde_json::from_value::<QualityReport>(json).unwrap(), report);
}

#[test]
fn shape_mismatch_is_reported() {
    let a = RasterImage::filled(12, 12, &[0, 0, 0]).unwrap();
    let b = RasterImage::filled(12, 13, &[0, 0, 0]).unwrap();
    assert!(matches!(psnr(&a, &b), Err(Error::ShapeMismatch(_))));
    assert!(matches!(ssim(&a, &b), Err(Error::ShapeMismatch(_))));
    let small = RasterImage::filled(10, 30, &[0, 0, 0]).unwrap();
    assert!(matches!(ssim(&small, &small), Err(Error::TooSmall { .. })));
}

#[test]
fn ssim_of_image_with_itself_is_exactly_one() {
    let mut rng = common::rng(31);
    for i in 0..20 {
        let (w, h) = (rng.gen_range(11..48), rng.gen_range(11..48));
        let img = RasterImage::new(w, h, 3, (0..w * h * 3).map(|_| rng.gen()).collect()).unwrap();
        assert_eq!(ssim(&img, &img).unwrap(), 1.0, "image {i}");
    }
}

#[test]
fn ssim_constant_black_vs_white_matches_closed_form() {
    let black = RasterImage::filled(16, 16, &[0, 0, 0]).unwrap();
    let white = RasterImage::filled(16, 16, &[255, 255, 255]).unwrap();
    let expected = SSIM_C1 / (65025.0 + SSIM_C1);
    assert!((ssim(&black, &white).unwrap() - expected).abs() <= 1e-9);
    assert!((expected - 9.999000099990003e-05).abs() <= 1e-15);
}

#[test]
fn ssim_matches_direct_window_oracle() {
    let mut rng = common::rng(32);
    for i in 0..10 {
        let (w, h) = (rng.gen_range(11..30), rng.gen_range(11..30));
        let a = common::natural_image(w, h, i);
        let data = a.data().iter().map(|&v| v.wrapping_add(rng.gen_range(0..40))).collect();
        let b = RasterImage::new(w, h, 3, data).unwrap();
        let (ours, oracle) = (ssim(&a, &b).unwrap(), ssim_oracle(&a, &b));
        assert!((ours - oracle).abs() <= 1e-9, "case {i}: {ours} vs {oracle}");
    }
}

#[test]
fn compression_percentage_examples() {
    assert!((compression_percentage(428.0, 38.7).unwrap() - 90.9579).abs() < 5e-5);
    assert!((compression_percentage(0.81, 0.0913).unwrap() - 88.7284).abs() <= 1e-4);
    assert_eq!(compression_percentage(7.0, 7.0).unwrap(), 0.0);
    assert!(matches!(compression_percentage(0.0, 1.0), Err(Error::DivideByZero(_))));
}

#[test]
fn table_mirrors_expected_columns() {
    let rows = vec![TableRow {
        dataset: "DIV2K".into(),
        dither: 1.0,
        psnr_db: Psnr(26.87),
        ssim: 0.77033,
        original_bytes: 428 * 1024 * 1024,
        stored_bytes: 38_700 * 1024 * 1024 / 1000,
        compression_pct: 90.96,
    }];
    let table = render_table(&rows);
    let header = table.lines().next().unwrap();
    let names = ["Dataset", "Dither", "PSNR", "SSIM", "Stored size", "Compression percentage"];
    let mut last = 0;
    for name in names {
        let at = header.find(name).unwrap_or_else(|| panic!("missing column {name}"));
        assert!(at >= last);
        last = at;
    }
    assert!(table.contains("26.87 db"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psnr_and_ssim_are_symmetric(w in 11u32..24, h in 11u32..24, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = RasterImage::new(w, h, 3, (0..w * h * 3).map(|_| rng.gen()).collect()).unwrap();
        let b = RasterImage::new(w, h, 3, (0..w * h * 3).map(|_| rng.gen()).collect()).unwrap();
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
    }

    #[test]
    fn larger_single_sample_error_lowers_psnr(len in 1usize..40, seed in any::<u64>(), at in any::<usize>(), base in 0u8..=250, step in 1u8..5) {
        let mut rng = common::rng(seed);
        let a: Vec<u8> = (0..len * 3).map(|_| rng.gen_range(0..=250)).collect();
        let mut b = a.clone();
        let i = at % b.len();
        b[i] = a[i].saturating_add(base.min(255 - a[i]).saturating_sub(step));
        let mut c = b.clone();
        c[i] = b[i] + step;
        let img = |d: Vec<u8>| RasterImage::new(len as u32, 1, 3, d).unwrap();
        let (a, b, c) = (img(a), img(b), img(c));
        prop_assert!(psnr(&a, &c).unwrap() < psnr(&a, &b).unwrap());
    }

    #[test]
    fn compression_percentage_decreases_with_stored_size(orig in 1.0f64..1e9, s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
        prop_assume!(s1 != s2);
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        prop_assume!(orig * lo != orig * hi);
        prop_assert!(compression_percentage(orig, orig * hi).unwrap() < compression_percentage(orig, orig * lo).unwrap());
    }
}

use proptest::prelude::*;
use weakseg_core::backend::{decode_psg, encode_psg, PatchScoreGrid};
use weakseg_core::eval::{confusion_at, curve_threshold, macro_f1};
use weakseg_core::filters::{bilateral_filter, close, dilate, erode, BilateralParams, StructuringElement};
use weakseg_core::grid::make_patch_grid;
use weakseg_core::pipeline::fuse;
use weakseg_core::raster::{mirror_pad, reflect_index, BinaryMask, Raster};
use weakseg_core::resize::lanczos_resize;
use weakseg_core::scoremap::{decode_scoremap, encode_scoremap};
use weakseg_core::threshold::{
    fuse_patch_votes, otsu3, patch_thresholds, Histogram256, OtsuMode,
};
use weakseg_core::PipelineConfig;

fn raster(max_w: usize, max_h: usize) -> impl Strategy<Value = Raster> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0f32..=1.0, w * h).prop_map(move |d| Raster::new(w, h, d).unwrap())
    })
}

fn dyadic_raster(max_w: usize, max_h: usize) -> impl Strategy<Value = Raster> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u16..=256, w * h)
            .prop_map(move |d| Raster::new(w, h, d.iter().map(|&v| v as f32 / 256.0).collect()).unwrap())
    })
}

fn mask_like(r: &Raster, bits: &[bool]) -> BinaryMask {
    BinaryMask::new(
        r.width(),
        r.height(),
        (0..r.data().len()).map(|i| u8::from(bits[i % bits.len()])).collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pad_then_crop_is_identity(r in raster(12, 12), l in 0usize..12, rt in 0usize..12, t in 0usize..12, b in 0usize..12) {
        let (w, h) = r.dims();
        let (l, rt) = if w > 1 { (l % w, rt % w) } else { (0, 0) };
        let (t, b) = if h > 1 { (t % h, b % h) } else { (0, 0) };
        let p = mirror_pad(&r, l, rt, t, b).unwrap();
        prop_assert_eq!(p.dims(), (w + l + rt, h + t + b));
        prop_assert_eq!(p.crop(l, t, w, h).unwrap(), r);
    }

    #[test]
    fn reflect_index_stays_in_range(i in -200isize..200, n in 1usize..20) {
        let j = reflect_index(i, n);
        prop_assert!(j < n);
        if (0..n as isize).contains(&i) {
            prop_assert_eq!(j, i as usize);
        }
    }

    #[test]
    fn grid_coverage_matches_enumeration(w in 1usize..150, h in 1usize..150, patch in 1usize..40, s in 1usize..40) {
        let stride = s.min(patch);
        let g = make_patch_grid(w, h, patch, stride).unwrap();
        let origins: Vec<_> = g.origins().collect();
        prop_assert_eq!(origins.len(), g.len());
        let bound = patch.div_ceil(stride).pow(2);
        for y in (0..h).step_by(7) {
            for x in (0..w).step_by(5) {
                let brute = origins
                    .iter()
                    .filter(|&&(ox, oy)| ox <= x && x < ox + patch && oy <= y && y < oy + patch)
                    .count();
                prop_assert_eq!(g.coverage(x, y), brute);
                prop_assert!(brute >= 1 && brute <= bound);
            }
        }
    }

    #[test]
    fn resize_of_constant_is_constant(c in 0.0f32..=1.0, w in 1usize..20, h in 1usize..20, ow in 1usize..60, oh in 1usize..60) {
        let r = Raster::filled(w, h, c).unwrap();
        let out = lanczos_resize(&r, ow, oh).unwrap();
        prop_assert_eq!(out.dims(), (ow, oh));
        for v in out.data() {
            prop_assert!((v - c).abs() < 1e-5);
        }
    }

    #[test]
    fn resize_stays_in_unit_range(r in raster(10, 10), ow in 1usize..30, oh in 1usize..30) {
        let out = lanczos_resize(&r, ow, oh).unwrap();
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn scoremap_round_trip_is_bit_exact(r in raster(20, 20)) {
        let back = decode_scoremap(&encode_scoremap(&r)).unwrap();
        let a: Vec<u32> = r.data().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn psg_round_trip(w in 1usize..100, h in 1usize..100, seed in any::<u32>()) {
        let g = PatchScoreGrid::from_fn(w, h, 32, 16, |x, y| {
            ((x as u32 * 31 + y as u32 * 17) ^ seed) as f32 / u32::MAX as f32
        }).unwrap();
        prop_assert_eq!(decode_psg(&encode_psg(&g)).unwrap(), g);
    }

    #[test]
    fn bilateral_is_bounded(r in raster(16, 16), ss in 0.5f64..200.0, sr in 0.01f64..2.0, d in 1usize..4) {
        let p = BilateralParams::new(ss, sr, d).unwrap();
        let (lo, hi) = r.min_max();
        let out = bilateral_filter(&r, &p);
        for &v in out.data() {
            prop_assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
        }
    }

    #[test]
    fn morphology_laws(r in raster(16, 16), half in 0usize..3, iters in 1usize..3) {
        let se = StructuringElement::square(2 * half + 1, iters).unwrap();
        let e = erode(&r, &se);
        let d = dilate(&r, &se);
        for i in 0..r.data().len() {
            prop_assert!(e.data()[i] <= r.data()[i]);
            prop_assert!(d.data()[i] >= r.data()[i]);
        }
        let c = close(&r, &se);
        prop_assert_eq!(close(&c, &se), c);
    }

    #[test]
    fn erode_dilate_duality(r in dyadic_raster(16, 16), w in 1usize..6, h in 1usize..6, iters in 1usize..3) {
        let se = StructuringElement::new(w, h, iters).unwrap();
        let inv = r.map(|v| 1.0 - v);
        prop_assert_eq!(erode(&r, &se), dilate(&inv, &se).map(|v| 1.0 - v));
    }

    #[test]
    fn otsu3_is_scale_invariant(counts in prop::collection::vec(0u64..50, 256), factor in 2u64..1000) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let a: [u64; 256] = counts.clone().try_into().unwrap();
        let b: [u64; 256] = counts.iter().map(|c| c * factor).collect::<Vec<_>>().try_into().unwrap();
        let ra = otsu3(&Histogram256::from_counts(a)).unwrap();
        let rb = otsu3(&Histogram256::from_counts(b)).unwrap();
        prop_assert_eq!((ra.k1, ra.k2), (rb.k1, rb.k2));
    }

    #[test]
    fn removing_a_patch_never_clears_pixels(r in raster(48, 48), pick in any::<prop::sample::Index>(), two in any::<bool>()) {
        let mode = if two { OtsuMode::Two } else { OtsuMode::Three };
        let grid = make_patch_grid(r.width(), r.height(), 16, 8).unwrap();
        let mut t = patch_thresholds(&r, &grid, mode).unwrap();
        let before = fuse_patch_votes(&r, &grid, &t).unwrap();
        // a patch accepting every bin is the same as no patch under a conjunction
        t[pick.index(grid.len())] = Some(255);
        let after = fuse_patch_votes(&r, &grid, &t).unwrap();
        for (a, b) in before.data().iter().zip(after.data()) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn fuse_is_monotone_in_localisation(r in raster(16, 16), bump in 0.0f32..=1.0, bits in prop::collection::vec(any::<bool>(), 1..40)) {
        let cfg = PipelineConfig { enable_bilateral: false, enable_closing: false, ..PipelineConfig::default() };
        let seg = mask_like(&r, &bits);
        let higher = r.map(|v| (v + bump).min(1.0));
        let a = fuse(&r, &seg, &cfg).unwrap();
        let b = fuse(&higher, &seg, &cfg).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn confusion_partitions_ground_truth(pred in raster(12, 12), bits in prop::collection::vec(any::<bool>(), 1..30), ti in 0usize..101) {
        let gt = mask_like(&pred, &bits);
        let c = confusion_at(&pred, &gt, curve_threshold(ti)).unwrap();
        prop_assert_eq!(c.tp + c.fn_, gt.count_ones() as u64);
        prop_assert!(c.tp + c.fp + c.fn_ <= pred.data().len() as u64);
    }

    #[test]
    fn macro_f1_bounded_and_recall_non_increasing(preds in prop::collection::vec(raster(10, 10), 1..4), bits in prop::collection::vec(any::<bool>(), 1..30)) {
        let gts: Vec<BinaryMask> = preds.iter().map(|p| mask_like(p, &bits)).collect();
        let (f1, best_t, curve) = macro_f1(&preds, &gts).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!((0.0..=1.0).contains(&best_t));
        prop_assert_eq!(curve.points.len(), 101);
        for w in curve.points.windows(2) {
            prop_assert!(w[1].r <= w[0].r);
        }
    }

    #[test]
    fn binarizable_predictions_score_one(bits in prop::collection::vec(any::<bool>(), 2..30), w in 2usize..10, h in 2usize..10, hi in 0.5f32..=1.0, lo in 0.0f32..0.5) {
        let gt = BinaryMask::new(w, h, (0..w * h).map(|i| u8::from(bits[i % bits.len()] || i == 0)).collect()).unwrap();
        let pred = Raster::new(w, h, gt.data().iter().map(|&g| if g == 1 { hi } else { lo }).collect()).unwrap();
        let (f1, _, _) = macro_f1(&[pred], &[gt]).unwrap();
        prop_assert_eq!(f1, 1.0);
    }
}

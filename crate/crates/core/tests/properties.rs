use proptest::prelude::*;
use rdsc_core::metaimage::{read_metaimage, write_metaimage, ElementType};
use rdsc_core::metrics::{bce, confusion, dice, focal_bce, tversky, FocalParams, TverskyParams};
use rdsc_core::sliding::{coverage_counts, window_offsets, WindowSpec};
use rdsc_core::{Geometry, Mask3, Spacing3, Volume3};

fn geometry() -> impl Strategy<Value = Geometry> {
    (
        prop::array::uniform3(1usize..9),
        prop::array::uniform3(0.1f64..5.0),
        prop::array::uniform3(-100.0f64..100.0),
    )
        .prop_map(|(d, s, o)| Geometry::new(d, Spacing3::try_from(s).unwrap(), o).unwrap())
}

fn mask_pair() -> impl Strategy<Value = (Mask3, Mask3)> {
    geometry().prop_flat_map(|g| {
        let n = g.len();
        (
            prop::collection::vec(0u8..=1, n),
            prop::collection::vec(0u8..=1, n),
        )
            .prop_map(move |(a, b)| (Mask3::new(g, a).unwrap(), Mask3::new(g, b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dice_and_tversky_identities((a, b) in mask_pair()) {
        let d = dice(&a, &b).unwrap();
        prop_assert_eq!(d, dice(&b, &a).unwrap());
        let ti = tversky(&a, &b, TverskyParams::dice_equivalent()).unwrap();
        prop_assert!((ti - d).abs() <= 1e-12);
        let c = confusion(&a, &b).unwrap();
        let union = c.tp + c.fp + c.fn_;
        let jaccard = if union == 0 { 1.0 } else { c.tp as f64 / union as f64 };
        let j = tversky(&a, &b, TverskyParams::new(1.0, 1.0).unwrap()).unwrap();
        prop_assert_eq!(j, jaccard);
        prop_assert!((2.0 * j / (1.0 + j) - d).abs() <= 1e-12);
        if c.tp + c.fp + c.fn_ == 0 {
            prop_assert_eq!(d, 1.0);
            prop_assert_eq!(ti, 1.0);
        }
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn focal_without_focusing_is_half_bce(g in geometry(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let prob = Volume3::from_fn(g, |_| rng.random_range(0.0..=1.0)).unwrap();
        let y = Mask3::from_fn(g, |_| rng.random_bool(0.5));
        let f = FocalParams::new(0.0, 0.5, 1e-7).unwrap();
        let want = 0.5 * bce(&prob, &y, 1e-7).unwrap();
        prop_assert!((focal_bce(&prob, &y, &f).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn every_voxel_is_covered(
        dims in prop::array::uniform3(1usize..60),
        window in prop::array::uniform3(1usize..24),
        frac in prop::array::uniform3(0.01f64..1.0),
    ) {
        let stride: [usize; 3] = std::array::from_fn(|a| ((window[a] as f64 * frac[a]).ceil() as usize).clamp(1, window[a]));
        let spec = WindowSpec::new(window, stride).unwrap();
        let counts = coverage_counts(dims, &spec).unwrap();
        prop_assert_eq!(counts.len(), dims.iter().product::<usize>());
        prop_assert!(counts.iter().all(|&c| c >= 1));
    }

    #[test]
    fn offset_count_rule(n in 1usize..300, w in 1usize..64, s_frac in 0.01f64..1.0) {
        prop_assume!(w <= n);
        let s = ((w as f64 * s_frac).ceil() as usize).clamp(1, w);
        let spec = WindowSpec::new([w, 1, 1], [s, 1, 1]).unwrap();
        let offsets = window_offsets([n, 1, 1], &spec).unwrap();
        let regular = (n - w) / s + 1;
        let extra = usize::from((n - w) % s != 0);
        prop_assert_eq!(offsets.len(), regular + extra);
        prop_assert_eq!(offsets.last().unwrap()[0], n - w);
    }

    #[test]
    fn metaimage_integer_round_trip(g in geometry(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dir = tempfile::tempdir().unwrap();
        for (ty, lo, hi) in [
            (ElementType::UChar, 0i64, 255i64),
            (ElementType::Char, -128, 127),
            (ElementType::Short, -32768, 32767),
            (ElementType::UShort, 0, 65535),
            (ElementType::Int, -16_000_000, 16_000_000),
        ] {
            let v = Volume3::from_fn(g, |_| rng.random_range(lo..=hi) as f32).unwrap();
            let path = dir.path().join("v.mhd");
            write_metaimage(&v, &path, ty).unwrap();
            let back = read_metaimage(&path).unwrap();
            prop_assert_eq!(back.voxels(), v.voxels());
            prop_assert_eq!(back.dims(), v.dims());
            for a in 0..3 {
                prop_assert!((back.spacing().as_array()[a] - v.spacing().as_array()[a]).abs() <= 1e-6);
                prop_assert!((back.origin()[a] - v.origin()[a]).abs() <= 1e-6);
            }
        }
    }
}

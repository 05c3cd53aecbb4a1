mod support;

use corebox::labeling::connected_components;
use corebox::GrayMask;
use proptest::prelude::*;

#[test]
fn random_masks_match_brute_force() {
    let bad: Vec<String> = (0..1200).flat_map(support::check_oracle_case).collect();
    assert!(bad.is_empty(), "{} mismatches, first: {:?}", bad.len(), &bad[..bad.len().min(5)]);
}

#[test]
fn summaries_match_naive_aggregates() {
    for seed in 0..40 {
        let n = 1 + (seed as usize % 11);
        let bad = support::check_summary_case(seed, n);
        assert!(bad.is_empty(), "{bad:?}");
    }
}

proptest! {
    #[test]
    fn components_partition_the_class(w in 1u32..40, h in 1u32..40, seed in any::<u64>()) {
        let mut rng = support::case_rng(seed);
        let mask = support::random_mask(&mut rng, w, h, &[255]);
        let segs = connected_components(&mask, 255);
        let total: u64 = segs.iter().map(|s| s.pixel_count()).sum();
        prop_assert_eq!(total, mask.count(255) as u64);
        for s in &segs {
            prop_assert!(s.bbox.fits_within(w, h));
            prop_assert!(s.pixels().all(|(x, y)| mask.get(x, y) == 255 && s.bbox.contains(x, y)));
        }
    }

    #[test]
    fn single_filled_rectangle_is_one_component(w in 1u32..30, h in 1u32..30, x in 0u32..10, y in 0u32..10) {
        let mask = GrayMask::from_fn(w + x + 3, h + y + 3, |px, py| {
            if (x..x + w).contains(&px) && (y..y + h).contains(&py) { 255 } else { 0 }
        });
        let segs = connected_components(&mask, 255);
        prop_assert_eq!(segs.len(), 1);
        prop_assert_eq!((segs[0].bbox.x, segs[0].bbox.y, segs[0].bbox.w, segs[0].bbox.h), (x, y, w, h));
    }
}

use eotrack::color::{quantize, HsvImage, BINS_PER_CHANNEL};
use eotrack::feature::{
    bhattacharyya_distance, compute_histogram, BoundingBox, FeatureError, KernelHistogram,
    HISTOGRAM_LEN,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight transcription: visit every pixel, test its center against the
/// box, weight by the Epanechnikov profile, normalize each channel to 1/3.
fn naive(image: &HsvImage, bbox: &BoundingBox) -> Option<Vec<f64>> {
    let (cx, cy) = (bbox.x + bbox.width / 2.0, bbox.y + bbox.height / 2.0);
    let mut bins = vec![0.0; 3 * BINS_PER_CHANNEL];
    let mut total = 0.0;
    for py in 0..image.height() {
        for px in 0..image.width() {
            let (sx, sy) = (px as f64 + 0.5, py as f64 + 0.5);
            if sx < bbox.x || sx >= bbox.x + bbox.width || sy < bbox.y || sy >= bbox.y + bbox.height
            {
                continue;
            }
            let dx = (sx - cx) / (bbox.width / 2.0);
            let dy = (sy - cy) / (bbox.height / 2.0);
            let z = dx * dx + dy * dy;
            let k = if z <= 1.0 { 1.0 - z } else { 0.0 };
            if k <= 0.0 {
                continue;
            }
            let hsv = image.pixel(px, py);
            for (c, v) in hsv.iter().enumerate() {
                bins[c * BINS_PER_CHANNEL + quantize(*v)] += k;
            }
            total += k;
        }
    }
    (total > 0.0).then(|| bins.iter().map(|b| b / (3.0 * total)).collect())
}

fn random_image(rng: &mut ChaCha8Rng) -> HsvImage {
    let w = rng.random_range(1..=8);
    let h = rng.random_range(1..=8);
    let pixels = (0..w * h)
        .map(|_| {
            let mut p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            // exercise the top edge of the quantizer
            if rng.random_bool(0.1) {
                p[rng.random_range(0..3)] = 1.0;
            }
            p
        })
        .collect();
    HsvImage::from_hsv(w, h, pixels).unwrap()
}

#[test]
fn matches_naive_reference_on_random_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 50 {
        let image = random_image(&mut rng);
        let bbox = BoundingBox::new(
            rng.random_range(-3.0..image.width() as f64),
            rng.random_range(-3.0..image.height() as f64),
            rng.random_range(0.5..10.0),
            rng.random_range(0.5..10.0),
        )
        .unwrap();
        let expected = naive(&image, &bbox);
        match (compute_histogram(&image, &bbox), expected) {
            (Ok(hist), Some(reference)) => {
                let dev = hist
                    .bins()
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(dev < 1e-12, "deviation {dev} for {bbox:?}");
                assert!((hist.sum() - 1.0).abs() < 1e-9);
                checked += 1;
            }
            (Err(FeatureError::NoOverlap { .. } | FeatureError::EmptyKernelSupport), None) => {}
            (got, want) => panic!("mismatch for {bbox:?}: {got:?} vs {want:?}"),
        }
    }
}

fn normalized(raw: Vec<f64>) -> KernelHistogram {
    let total: f64 = raw.iter().sum();
    KernelHistogram::from_bins(raw.into_iter().map(|v| v / total).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn bhattacharyya_is_a_bounded_symmetric_distance(
        a in prop::collection::vec(0.001..1.0f64, HISTOGRAM_LEN),
        b in prop::collection::vec(0.001..1.0f64, HISTOGRAM_LEN),
    ) {
        let (ha, hb) = (normalized(a), normalized(b));
        let dab = bhattacharyya_distance(&ha, &hb).unwrap();
        prop_assert_eq!(dab, bhattacharyya_distance(&hb, &ha).unwrap());
        prop_assert!((0.0..=1.0).contains(&dab));
        prop_assert!(bhattacharyya_distance(&ha, &ha).unwrap() < 1e-12);
    }
}

#[test]
fn bhattacharyya_hand_case() {
    let a = KernelHistogram::from_bins(vec![1.0, 0.0]);
    let b = KernelHistogram::from_bins(vec![0.5, 0.5]);
    let d = bhattacharyya_distance(&a, &b).unwrap();
    assert!((d - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
}

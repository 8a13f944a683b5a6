use std::collections::BTreeMap;

use onscreen_core::detection_io::{BBox, FaceDetection, FrameDetections, Gender};
use onscreen_core::metrics::{
    bin_tones, thirds_cell, thirds_matrices, CombinationDistribution, FfrHistogram, FramingAccumulator, Moments,
};
use proptest::prelude::*;

fn arb_frame() -> impl Strategy<Value = FrameDetections> {
    let face = (prop::sample::select(Gender::ALL.to_vec()), 0.0f64..0.8, 0.0f64..0.8, 0.01f64..0.2, 0.01f64..0.2);
    (0u64..100, prop::collection::vec(face, 0..5)).prop_map(|(ts, faces)| FrameDetections {
        movie_id: "m".into(),
        frame_ts_ms: ts * 2000,
        faces: faces
            .into_iter()
            .map(|(gender, x, y, w, h)| FaceDetection {
                movie_id: "m".into(),
                frame_ts_ms: ts * 2000,
                bbox: BBox { x, y, w, h },
                gender,
                confidence: None,
            })
            .collect(),
    })
}

fn accumulate(frames: &[FrameDetections]) -> FramingAccumulator {
    let mut acc = FramingAccumulator::default();
    frames.iter().for_each(|f| acc.add_frame(f));
    acc
}

#[test]
fn histogram_edges_and_extremes() {
    let mut h = FfrHistogram::new(5).unwrap();
    assert_eq!(h.bins.len(), 20);
    assert_eq!(h.edges()[19], 95);
    assert_eq!(h.bin_of(0.0), 0);
    assert_eq!(h.bin_of(1.0), 19);
    assert_eq!(h.bin_of(0.15), 3);
    assert_eq!(h.bin_of(0.1499), 2);
    h.add(1.0);
    assert_eq!(h.total(), 1);
    assert!(FfrHistogram::new(0).is_err());
    assert!(FfrHistogram::new(101).is_err());
}

#[test]
fn moments_use_the_population_deviation() {
    let m = Moments::of(&[0.2, 0.4, 0.6, 0.8]);
    assert_eq!(m.n, 4);
    assert!((m.mean.unwrap() - 0.5).abs() < 1e-15);
    assert!((m.sd.unwrap() - 0.05f64.sqrt()).abs() < 1e-15);
    assert_eq!(Moments::of(&[]).mean, None);
}

proptest! {
    #[test]
    fn histogram_counts_every_value(values in prop::collection::vec(0.0f64..=1.0, 0..300), width in prop::sample::select(vec![1u32, 2, 5, 10, 25, 30])) {
        let mut h = FfrHistogram::new(width).unwrap();
        values.iter().for_each(|&v| h.add(v));
        prop_assert_eq!(h.total(), values.len() as u64);
        for &v in &values {
            let b = h.bin_of(v);
            let lo = f64::from(h.edges()[b]);
            prop_assert!(lo <= v * 100.0 + 1e-6);
            prop_assert!(b + 1 == h.bins.len() || v * 100.0 < lo + f64::from(width) + 1e-6);
        }
    }

    #[test]
    fn five_point_shift_moves_one_bin(pct in 0u32..95) {
        let h = FfrHistogram::new(5).unwrap();
        let v = f64::from(pct) / 100.0;
        prop_assert_eq!(h.bin_of(v + 0.05), h.bin_of(v) + 1);
        prop_assert_eq!(h.bin_of(v), (pct / 5) as usize);
    }

    #[test]
    fn tones_ignore_monotone_transforms(
        members in prop::collection::vec((0usize..6, prop::option::of(-50.0f64..50.0)), 1..60)
    ) {
        let base = bin_tones(&members, 6);
        let mapped: Vec<(usize, Option<f64>)> = members.iter().map(|&(b, v)| (b, v.map(|v| v.powi(3) + 7.0))).collect();
        prop_assert_eq!(&base, &bin_tones(&mapped, 6));
        match base {
            None => prop_assert!(members.iter().all(|m| m.1.is_none())),
            Some(tones) => {
                prop_assert_eq!(tones.len(), 6);
                for (b, t) in tones.iter().enumerate() {
                    let ranked = members.iter().any(|m| m.0 == b && m.1.is_some());
                    prop_assert_eq!(t.is_some(), ranked);
                    if let Some(t) = t {
                        prop_assert!((0.0..=1.0).contains(t));
                    }
                }
            }
        }
    }

    #[test]
    fn coverage_is_monotone_and_truncation_is_minimal(
        counts in prop::collection::btree_map((0u32..5, 0u32..5), 0u64..50, 0..20),
        target in 0.05f64..=1.0,
    ) {
        let d = CombinationDistribution::from_counts(counts);
        prop_assume!(d.total > 0);
        let mut last = 0.0;
        for k in 0..=d.counts.len() {
            let c = d.coverage(k);
            prop_assert!(c + 1e-15 >= last);
            last = c;
        }
        prop_assert!((last - 1.0).abs() < 1e-12);
        let ranked = d.ranked();
        prop_assert!(ranked.windows(2).all(|w| w[0].frames >= w[1].frames));
        let t = d.truncated(target);
        prop_assert!(t.last().unwrap().cumulative + 1e-9 >= target);
        if t.len() > 1 {
            prop_assert!(t[t.len() - 2].cumulative + 1e-9 < target);
        }
        prop_assert!((d.coverage(t.len()) - t.last().unwrap().cumulative).abs() < 1e-12);
    }

    #[test]
    fn accumulator_merge_matches_single_pass(
        a in prop::collection::vec(arb_frame(), 0..30),
        b in prop::collection::vec(arb_frame(), 0..30),
        c in prop::collection::vec(arb_frame(), 0..30),
    ) {
        let all: Vec<FrameDetections> = a.iter().chain(&b).chain(&c).cloned().collect();
        let whole = accumulate(&all);
        let mut left = accumulate(&a);
        left.merge(&accumulate(&b));
        left.merge(&accumulate(&c));
        let mut bc = accumulate(&b);
        bc.merge(&accumulate(&c));
        let mut right = accumulate(&a);
        right.merge(&bc);
        prop_assert_eq!(&left, &whole);
        prop_assert_eq!(&right, &whole);
    }

    #[test]
    fn thirds_cells_conserve_faces(frames in prop::collection::vec(arb_frame(), 0..40)) {
        let acc = accumulate(&frames);
        let matrices = thirds_matrices(&acc);
        let faces: u64 = matrices.iter().map(|m| m.faces(Gender::Female) + m.faces(Gender::Male)).sum();
        prop_assert_eq!(faces, acc.faces);
        prop_assert_eq!(acc.faces, frames.iter().map(|f| f.faces.len() as u64).sum::<u64>());
        let mut frames_by_key: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for f in frames.iter().filter(|f| !f.faces.is_empty()) {
            *frames_by_key.entry((f.count(Gender::Female), f.count(Gender::Male))).or_insert(0) += 1;
        }
        for m in &matrices {
            let n = frames_by_key[&(m.n_female, m.n_male)];
            prop_assert_eq!(m.faces(Gender::Female), n * u64::from(m.n_female));
            prop_assert_eq!(m.faces(Gender::Male), n * u64::from(m.n_male));
            for g in Gender::ALL {
                if let Some(p) = m.percentages(g) {
                    prop_assert!((p.iter().sum::<f64>() - 100.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn thirds_cell_contains_the_centre(x in 0.0f64..0.9, y in 0.0f64..0.9, w in 0.0f64..0.1, h in 0.0f64..0.1) {
        let bbox = BBox { x, y, w, h };
        let (r, c) = thirds_cell(&bbox);
        let (cx, cy) = bbox.center();
        prop_assert!(r < 3 && c < 3);
        prop_assert!(cy >= r as f64 / 3.0 - 1e-12 && cy < (r + 1) as f64 / 3.0 + 1e-12);
        prop_assert!(cx >= c as f64 / 3.0 - 1e-12 && cx < (c + 1) as f64 / 3.0 + 1e-12);
    }
}

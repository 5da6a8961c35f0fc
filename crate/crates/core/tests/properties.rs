use arseg::decorrelate::DecorrelatedSeries;
use arseg::robust_scale::QnConfig;
use arseg::segment::{dp_segment, dp_segment_values, CostMatrix, SegConstraints};
use arseg::series::RealSeries;
use arseg::{beta_select, hausdorff_parts, mbic, qn, rho_tilde};
use proptest::prelude::*;

fn values(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ss_is_nonincreasing_in_m(w in values(4..40)) {
        let m_max = (w.len() - 1).min(8);
        let fits = dp_segment_values(&w, &SegConstraints::new(m_max, 1)).unwrap();
        for pair in fits.windows(2) {
            prop_assert!(pair[1].ss <= pair[0].ss + 1e-9);
        }
    }

    #[test]
    fn every_segment_respects_min_length(w in values(6..50), delta in 1usize..5) {
        let m_max = (w.len() / delta).saturating_sub(1).min(6);
        let fits = dp_segment_values(&w, &SegConstraints::new(m_max, delta)).unwrap();
        for fit in &fits {
            prop_assert!(fit.segment_lengths().iter().all(|&l| l >= delta));
            prop_assert!(fit.t.windows(2).all(|p| p[0] < p[1]));
            prop_assert!(fit.ss >= 0.0);
        }
    }

    #[test]
    fn levels_are_segment_means(w in values(4..30)) {
        let fits = dp_segment_values(&w, &SegConstraints::new(3.min(w.len() - 1), 1)).unwrap();
        for fit in &fits {
            let mut start = 0;
            for (k, end) in fit.t.iter().copied().chain([w.len()]).enumerate() {
                let seg = &w[start..end];
                let mean = seg.iter().sum::<f64>() / seg.len() as f64;
                prop_assert!((fit.delta[k] - mean).abs() < 1e-9);
                start = end;
            }
        }
    }

    #[test]
    fn reported_indices_shift_by_offset(w in values(4..30), offset in 0usize..20) {
        let c = SegConstraints::new(3.min(w.len() - 1), 1);
        let plain = dp_segment_values(&w, &c).unwrap();
        let shifted = dp_segment(
            &DecorrelatedSeries { w: w.clone(), offset, phi: vec![0.0; offset] },
            &c,
        ).unwrap();
        for (a, b) in plain.iter().zip(&shifted) {
            let moved: Vec<usize> = a.t.iter().map(|t| t + offset).collect();
            prop_assert_eq!(&moved, &b.t);
            prop_assert_eq!(a.ss, b.ss);
        }
    }

    #[test]
    fn cost_matrix_invariants(w in values(1..40)) {
        let c = CostMatrix::new(&w);
        for i in 1..=w.len() {
            prop_assert_eq!(c.cost(i, i).unwrap(), 0.0);
            let mut prev = 0.0;
            for j in i..=w.len() {
                let v = c.cost(i, j).unwrap();
                prop_assert!(v >= 0.0);
                prop_assert!(v + 1e-9 >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn selection_is_shift_invariant(w in values(8..40), shift in -1e3f64..1e3) {
        // Shifting the series adds nothing to SS_m, so every criterion is
        // unchanged and in particular the argmax is.
        let shifted: Vec<f64> = w.iter().map(|v| v + shift).collect();
        let c = SegConstraints::new(4, 1);
        let a = dp_segment_values(&w, &c).unwrap();
        let b = dp_segment_values(&shifted, &c).unwrap();
        prop_assert_eq!(mbic(&a, w.len()).unwrap().m_hat, mbic(&b, w.len()).unwrap().m_hat);
        prop_assert_eq!(
            beta_select(&a, w.len(), 0.3).unwrap().m_hat,
            beta_select(&b, w.len(), 0.3).unwrap().m_hat
        );
    }

    #[test]
    fn mbic_argmax_attains_the_maximum(w in values(8..40)) {
        let fits = dp_segment_values(&w, &SegConstraints::new(5, 1)).unwrap();
        let path = mbic(&fits, w.len()).unwrap();
        if !path.degenerate {
            let best = path.values[path.m_hat];
            prop_assert!(path.values.iter().all(|v| *v <= best));
            prop_assert!(path.values[..path.m_hat].iter().all(|v| *v < best));
        }
    }

    #[test]
    fn hausdorff_is_symmetric(
        a in prop::collection::vec(0.0f64..1.0, 1..8),
        b in prop::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let ab = hausdorff_parts(&a, &b);
        let ba = hausdorff_parts(&b, &a);
        prop_assert_eq!(ab.d1, ba.d2);
        prop_assert_eq!(ab.hausdorff, ba.hausdorff);
        prop_assert_eq!(ab.hausdorff, ab.d1.max(ab.d2));
        let aa = hausdorff_parts(&a, &a);
        prop_assert_eq!((aa.d1, aa.d2), (0.0, 0.0));
    }

    #[test]
    fn qn_is_location_free_and_scale_equivariant(
        z in prop::collection::vec(-100.0f64..100.0, 2..60),
        shift in -50.0f64..50.0,
        scale in 0.1f64..10.0,
    ) {
        let cfg = QnConfig::default();
        let base = qn(&z, &cfg).unwrap();
        let moved: Vec<f64> = z.iter().map(|v| scale * (v + shift)).collect();
        let q = qn(&moved, &cfg).unwrap();
        prop_assert!((q - scale * base).abs() <= 1e-9 * (1.0 + q.abs()));
    }

    #[test]
    fn rho_tilde_is_affine_invariant(
        v in prop::collection::vec(-5.0f64..5.0, 8..60),
        a in 0.5f64..4.0,
        b in -10.0f64..10.0,
    ) {
        let y = RealSeries::from_values(v.clone()).unwrap();
        let z = RealSeries::from_values(v.iter().map(|x| a * x + b).collect()).unwrap();
        if let (Ok(r1), Ok(r2)) = (rho_tilde(&y), rho_tilde(&z)) {
            prop_assert!((r1.value - r2.value).abs() < 1e-9);
        }
    }
}

#[test]
fn f32_pipeline_compiles_and_runs() {
    let v: Vec<f32> = (0..60).map(|i| if i < 30 { 0.0 } else { 3.0 }).collect();
    let fits = dp_segment_values(&v, &SegConstraints::new(2, 1)).unwrap();
    assert_eq!(fits[1].t, vec![30]);
}

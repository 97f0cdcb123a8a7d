use super::*;
use crate::cells::{CellParams, LinearClassifier, ModelKind, VanillaParams};
use crate::constructions::{choose_a, GruK1Construction};
use crate::process::FlagEncoding;
use crate::verification::exact_error;
use proptest::prelude::*;

fn vanilla_k1(u: f64, w1: f64, w2: f64) -> ModelSetup {
    ModelSetup {
        params: CellParams::Vanilla(VanillaParams::scalar(u, w1, w2)),
        s0: CellState::hidden(vec![0.0]),
        encoding: FlagEncoding::Symmetric,
        classifier: LinearClassifier::new(vec![1.0], 0.0),
    }
}

#[test]
fn histogram_edges_and_clamping() {
    let mut h = Histogram::new(DEFAULT_BINS, -1.05, 1.05).unwrap();
    assert_eq!(h.bin_edges.len(), 62);
    assert_eq!(h.bin_edges[61], 1.05);
    assert_eq!(h.bin_of(-5.0), 0);
    assert_eq!(h.bin_of(5.0), 60);
    assert_eq!(h.bin_of(1.05), 60);
    assert_eq!(h.bin_of(0.0), 30);
    h.add(1, 2.0);
    h.add(-1, -2.0);
    assert_eq!((h.total_pos(), h.total_neg()), (1, 1));
    assert!(Histogram::new(0, -1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn every_value_lands_in_its_bin(x in -1.05f64..1.05) {
        let h = Histogram::new(DEFAULT_BINS, -1.05, 1.05).unwrap();
        let b = h.bin_of(x);
        prop_assert!(h.bin_edges[b] <= x + 1e-12 && x <= h.bin_edges[b + 1] + 1e-12);
    }
}

#[test]
fn mass_is_conserved_per_snapshot() {
    let setup = GruK1Construction::new(4.0, 1.0).gru_setup().unwrap();
    let s = mc_distributions(&setup, 12, FlagPlacement::Fixed(5), 300, 3, &[0, 5, 12], DEFAULT_BINS).unwrap();
    for snap in &s.snapshots {
        for h in &snap.histograms {
            assert_eq!(h.total_pos(), 300);
            assert_eq!(h.total_neg(), 300);
        }
    }
    assert!(s.scatter.is_none());
}

#[test]
fn conditioned_paths_carry_their_label() {
    for i in 0..200 {
        for label in [1i8, -1] {
            let p = sample_conditioned(15, class_path_seed(9, label, i), FlagPlacement::Random, Some(label)).unwrap();
            assert_eq!(p.label(), label);
        }
    }
}

#[test]
fn empty_class_gives_empty_histograms() {
    let s = mc_distributions(&vanilla_k1(0.8, 0.9, 0.1), 5, FlagPlacement::Random, 0, 1, &[5], 10).unwrap();
    assert_eq!(s.snapshots[0].histograms[0].total_pos(), 0);
    assert_eq!(s.snapshots[0].threshold_errors, vec![None]);
    assert_eq!(s.snapshots[0].moments, vec![None]);
}

#[test]
fn invalid_requests() {
    let setup = vanilla_k1(0.8, 0.9, 0.1);
    assert!(mc_distributions(&setup, 5, FlagPlacement::Random, 10, 1, &[6], 10).is_err());
    assert!(mc_distributions(&setup, 5, FlagPlacement::Fixed(0), 10, 1, &[5], 10).is_err());
    assert!(mc_distributions(&setup, 5, FlagPlacement::Random, 10, 1, &[5], 0).is_err());
    assert!(mc_error(&setup, 5, 0, 1).is_err());
}

#[test]
fn worker_count_does_not_change_results() {
    let setup = GruK1Construction::new(2.0, 1.0).lstm_setup().unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let d = mc_distributions(&setup, 10, FlagPlacement::Random, 500, 17, &[3, 10], 21).unwrap();
            let e = mc_error(&setup, 10, 2000, 17).unwrap();
            (serde_json::to_string(&d).unwrap(), e)
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn two_dimensional_series_has_scatter_and_linear_error() {
    let setup = crate::constructions::vanilla_k2_params(&crate::constructions::VanillaK2Construction::new(0.5, 0.5, -2.0)).unwrap();
    let s = mc_distributions(&setup, 10, FlagPlacement::Random, 400, 5, &[4], 61).unwrap();
    let sc = s.scatter.as_ref().unwrap();
    assert_eq!((sc.t, sc.pos.len(), sc.neg.len()), (10, 400, 400));
    assert!(scatter_separable(sc));
    assert_eq!(s.snapshot_times, vec![4]);
}

#[test]
fn wilson_interval_properties() {
    let (lo, hi) = wilson_interval(0, 100_000);
    assert_eq!(lo, 0.0);
    assert!(hi < 1e-4);
    let (lo, hi) = wilson_interval(50, 100);
    assert!(lo < 0.5 && hi > 0.5);
    assert!((lo + hi - 1.0).abs() < 1e-12);
}

#[test]
fn constant_classifier_estimate_near_half() {
    let mut setup = vanilla_k1(0.3, 0.2, 0.1);
    setup.classifier = LinearClassifier::new(vec![0.0], 0.0);
    let e = mc_error(&setup, 10, 20_000, 4).unwrap();
    assert!(e.ci_lo < 0.5 && 0.5 < e.ci_hi);
}

#[test]
fn certified_gru_has_no_sampled_errors() {
    let n = 100;
    let setup = GruK1Construction::new(choose_a(n, 0.1).unwrap(), 1.0).gru_setup().unwrap();
    let e = mc_error(&setup, n, 100_000, 8).unwrap();
    assert_eq!(e.errors, 0);
    assert!(e.ci_hi < 1e-4);
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let n = 10;
    let mut inside = 0;
    for k in 0..20u64 {
        let kind = [ModelKind::Vanilla, ModelKind::Lstm, ModelKind::Gru, ModelKind::Pru][k as usize % 4];
        let params = CellParams::random(kind, 2, 2.0, 100 + k);
        let mut rng = crate::rng::CounterRng::new(500 + k);
        let setup = ModelSetup {
            s0: CellState::zeros(kind, 2),
            params,
            encoding: FlagEncoding::Symmetric,
            classifier: LinearClassifier::new(vec![rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)], rng.uniform(-0.1, 0.1)),
        };
        let exact = exact_error(&setup, n).unwrap().error_probability;
        let mc = mc_error(&setup, n, 20_000, k).unwrap();
        if mc.ci_lo <= exact && exact <= mc.ci_hi {
            inside += 1;
        }
    }
    assert!(inside >= 18, "{inside}/20 intervals cover the exact error");
}

#[test]
fn sweep_covers_grid_in_order() {
    let grid = SweepGrid::cube(-0.4, 0.4, 0.4).unwrap();
    assert_eq!(grid.u, vec![-0.4, 0.0, 0.4]);
    let r = sweep_vanilla_k1(&grid, 8, 200, 2).unwrap();
    assert_eq!(r.points.len(), 27);
    assert_eq!((r.points[1].u, r.points[1].w1, r.points[1].w2), (-0.4, -0.4, 0.0));
    for p in &r.points {
        assert!((0.0..=0.5).contains(&p.error));
        assert!(p.ci_lo <= p.error && p.error <= p.ci_hi);
    }
    assert!(sweep_vanilla_k1(&SweepGrid { u: vec![], w1: vec![1.0], w2: vec![1.0] }, 8, 10, 1).is_err());
}

#[test]
fn sweep_point_matches_cell_simulation() {
    // the fast scalar loop and the generic cell must agree on the final state
    let (u, w1, w2) = (0.8, 0.9, 0.1);
    let setup = vanilla_k1(u, w1, w2);
    for i in 0..50 {
        let p = sample_conditioned(20, class_path_seed(3, 1, i), FlagPlacement::Random, Some(1)).unwrap();
        let a = crate::cells::final_state(&setup.params, &setup.s0, &p, setup.encoding).unwrap().readout()[0];
        let b = sweep::final_value(u, w1, w2, &p);
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn export_schemas() {
    let setup = vanilla_k1(0.8, 0.9, 0.1);
    let s = mc_distributions(&setup, 4, FlagPlacement::Fixed(2), 20, 1, &[2, 4], 5).unwrap();
    let mut buf = Vec::new();
    export_histograms(&s, ExportFormat::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,coord,bin_left,bin_right,count_pos,count_neg");
    assert_eq!(lines.count(), 10);

    let empty = DistributionSeries { snapshots: vec![], ..s.clone() };
    let mut buf = Vec::new();
    export_histograms(&empty, ExportFormat::Csv, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "t,coord,bin_left,bin_right,count_pos,count_neg\n");

    let r = sweep_vanilla_k1(&SweepGrid::single(0.8, 0.9, 0.1), 6, 50, 1).unwrap();
    let mut buf = Vec::new();
    export_sweep(&r, ExportFormat::Csv, &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("U,W1,W2,err,ci_lo,ci_hi\n0.8,0.9,0.1,"));
    let mut buf = Vec::new();
    export_sweep(&r, ExportFormat::Json, &mut buf).unwrap();
    let rows: Vec<SweepRow> = serde_json::from_slice(&buf).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].u, 0.8);
}

#[test]
fn sample_moments_by_hand() {
    let (m, v, m4) = sample_moments(&[1.0, -1.0, 3.0, 1.0]).unwrap();
    assert_eq!((m, v, m4), (1.0, 2.0, 8.0));
    assert!(sample_moments(&[]).is_none());
}

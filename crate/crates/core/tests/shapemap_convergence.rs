use headforge_core::shapemap::{rasterize_shape_map, UnwrapResult, UvSource};
use headforge_core::Execution;
use headforge_testkit::fixtures::{bbox_diagonal, round_trip_error, synthetic_heads};

#[test]
fn errors_shrink_with_resolution() {
    for (h, m) in synthetic_heads(21, 20).iter().enumerate() {
        let errs: Vec<f64> = [128, 256, 512, 1024]
            .iter()
            .map(|&r| round_trip_error(m, r).unwrap())
            .collect();
        assert!(errs[1] <= 2.0 * bbox_diagonal(m) / 256.0, "head {h}: {errs:?}");
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "head {h}: {errs:?}");
    }
}

#[test]
fn fine_maps_are_much_more_accurate() {
    let m = &synthetic_heads(4, 1)[0];
    let coarse = round_trip_error(m, 256).unwrap();
    let fine = round_trip_error(m, 4096).unwrap();
    assert!(fine * 8.0 <= coarse, "256: {coarse:e}, 4096: {fine:e}");
}

#[test]
fn coverage_depends_only_on_the_layout() {
    let heads = synthetic_heads(8, 20);
    let counts: Vec<usize> = heads
        .iter()
        .map(|m| {
            let layout = UnwrapResult::from_uvs(m.uvs().unwrap().to_vec(), m.faces());
            rasterize_shape_map(m, UvSource::Cylindrical(&layout), 256, Execution::Parallel)
                .unwrap()
                .valid_count()
        })
        .collect();
    assert!(counts.iter().all(|&c| c == counts[0]), "{counts:?}");
    assert!(counts[0] > 0);
}

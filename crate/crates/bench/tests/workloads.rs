use ice_bench::synthetic;

#[test]
fn workloads_are_valid_and_stable() {
    for (q, r) in [(100, 5), (300, 8), (400, 5)] {
        let ds = synthetic(q, r);
        assert_eq!((ds.len(), ds.dim()), (q, r));
        let pos = ds.y.iter().filter(|&&v| v == 1).count();
        assert!(pos > q / 5 && pos < 4 * q / 5, "q={q}: {pos} positives");
        assert_eq!(synthetic(q, r), ds);
    }
}

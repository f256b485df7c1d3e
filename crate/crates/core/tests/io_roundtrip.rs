use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;

use fchlab::io::{
    read_manifest, read_run_snapshots, read_snapshot, verify_manifest, write_snapshot, RunDir, Snapshot,
    SweepConfig,
};
use fchlab::spectral::{random_field, GridSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snapshot_bytes_are_lossless(
        n in prop::sample::select(vec![16usize, 32, 64, 256]),
        length in 0.1f64..200.0,
        seed in 0u64..1000,
        t in -1e3f64..1e3,
        nu in 1.0f64..4.0,
    ) {
        let g = GridSpec::new(length, n).unwrap();
        let snap = Snapshot::new(random_field(g, 0.7, seed, 0), t, nu);
        let back = Snapshot::from_bytes(&snap.to_bytes()).unwrap();
        prop_assert_eq!(back.t, t);
        prop_assert_eq!(back.nu, nu);
        prop_assert_eq!(back.field.grid().length(), length);
        prop_assert_eq!(back.field.values(), snap.field.values());
    }

    #[test]
    fn corrupted_snapshots_are_rejected(cut in 0usize..36, seed in 0u64..100) {
        let g = GridSpec::new(2.0 * PI, 16).unwrap();
        let bytes = Snapshot::new(random_field(g, 1.0, seed, 0), 0.0, 1.4).to_bytes();
        prop_assert!(Snapshot::from_bytes(&bytes[..cut]).is_err());
        prop_assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn sweep_cells_are_the_cartesian_product(a in 1usize..4, b in 0usize..4, fixed in "[a-z]{1,6}") {
        let mut text = format!("command = simulate\nfixed = {fixed}\n");
        for i in 0..a {
            text.push_str(&format!("nu = {}\n", 1.0 + i as f64));
        }
        if b == 0 {
            text.push_str("n =\n");
        }
        for i in 0..b {
            text.push_str(&format!("n = {}\n", 16 << i));
        }
        let cfg = SweepConfig::parse(&text).unwrap();
        let cells = cfg.cells();
        prop_assert_eq!(cells.len(), a * b);
        let mut seen: Vec<String> = cells.iter().map(|c| format!("{c:?}")).collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), a * b);
        prop_assert!(cells.iter().all(|c| c.iter().any(|(k, v)| k == "fixed" && *v == fixed)));
    }
}

#[test]
fn snapshot_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::new(3.0, 32).unwrap();
    let snap = Snapshot::new(random_field(g, 1.0, 3, 0), 0.25, 1.4);
    let path = dir.path().join("u.bin");
    write_snapshot(&path, &snap).unwrap();
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back.field.values(), snap.field.values());
    assert!(read_snapshot(&dir.path().join("missing.bin")).is_err());
}

#[test]
fn manifest_lists_every_output_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("run");
    let g = GridSpec::new(2.0 * PI, 16).unwrap();
    let mut flags = BTreeMap::new();
    flags.insert("nu".to_string(), "1.4".to_string());
    let mut run = RunDir::create(&root, "simulate", flags).unwrap();
    run.set_grid(&g);
    run.set_seed(7);
    for i in 0..3 {
        let snap = Snapshot::new(random_field(g, 1.0, 1, i), i as f64, 1.4);
        run.write_snapshot(&format!("snap_{i:05}.bin"), &snap).unwrap();
    }
    run.write("nested/norms.csv", b"t,l2\n0,1\n").unwrap();
    assert!(run.write("run.json", b"{}").is_err());
    let manifest = run.finish().unwrap();
    assert_eq!(manifest.outputs.len(), 4);
    assert_eq!(read_manifest(&root).unwrap(), manifest);
    assert!(verify_manifest(&root).unwrap().is_empty());

    let mut listed: Vec<String> = manifest.outputs.iter().map(|o| o.path.clone()).collect();
    listed.sort();
    assert_eq!(listed, ["nested/norms.csv", "snap_00000.bin", "snap_00001.bin", "snap_00002.bin"]);
    let snaps = read_run_snapshots(&root).unwrap();
    assert_eq!(snaps.iter().map(|s| s.t).collect::<Vec<_>>(), [0.0, 1.0, 2.0]);

    fs::write(root.join("snap_00001.bin"), b"tampered").unwrap();
    fs::remove_file(root.join("nested/norms.csv")).unwrap();
    let mut bad = verify_manifest(&root).unwrap();
    bad.sort();
    assert_eq!(bad, ["nested/norms.csv", "snap_00001.bin"]);

    let mut again = RunDir::append(&root).unwrap();
    again.write("extra.csv", b"x\n").unwrap();
    assert_eq!(again.finish().unwrap().outputs.len(), 5);
}

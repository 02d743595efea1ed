use volprt::cache::{sidecar_path, RECORD_LAYOUT};
use volprt::transport::sample_probe_points;
use volprt::{fixtures, Error, QuadratureSpec, TransferBaker, TransferCache};

fn baked() -> (volprt::VolumeScene<f64>, TransferCache<f64>) {
    let scene = fixtures::sphere::<f64>();
    let pts: Vec<_> = sample_probe_points(&scene, 40, 2).unwrap().into_iter().map(|p| p.point).collect();
    let baker = TransferBaker::with_grid(QuadratureSpec::gauss_legendre(16, 32), 3).unwrap();
    let cache = TransferCache::bake(&scene, &pts, &baker).unwrap();
    (scene, cache)
}

#[test]
fn cache_round_trips_through_disk() {
    let (scene, cache) = baked();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    cache.write(&path, "abc123").unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 40 * (6 + 16) * 8);

    let (back, side) = TransferCache::read(&path, &scene).unwrap();
    assert_eq!((side.degree, side.count), (3, 40));
    assert_eq!(side.scene_hash, "abc123");
    assert_eq!(side.record_layout, RECORD_LAYOUT);
    assert_eq!(back.len(), cache.len());
    for (a, b) in back.records().iter().zip(cache.records()) {
        assert_eq!(a.transfer, b.transfer);
        assert_eq!(a.point.position, b.point.position);
        assert_eq!(a.point.albedo, b.point.albedo);
    }
    assert_eq!(back.encode(), cache.encode());
}

#[test]
fn nearest_record_of_a_cached_point_is_itself() {
    let (_, cache) = baked();
    for r in cache.records() {
        assert_eq!(cache.nearest(r.point.position).point.position, r.point.position);
    }
}

#[test]
fn truncated_or_missing_files_are_errors() {
    let (scene, cache) = baked();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    cache.write(&path, "h").unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 8);
    std::fs::write(&path, bytes).unwrap();
    let err = TransferCache::read(&path, &scene).unwrap_err();
    assert!(matches!(err, Error::Format { .. }), "{err}");

    std::fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(matches!(TransferCache::read(&path, &scene), Err(Error::Io { .. })));
}

#[test]
fn empty_cache_is_rejected() {
    assert!(matches!(TransferCache::<f64>::new(4, Vec::new()), Err(Error::NoSurfacePoints)));
}

mod common;

use std::fs;

use videomap_core::projection::TsneConfig;
use videomap_core::store::{load_project, save_project, MANIFEST};
use videomap_core::Error;

fn saved_project(dir: &std::path::Path) -> videomap_core::project::MapProject {
    let mut rng = common::rng(12);
    let mut p = common::random_project(&mut rng, &[9, 12, 7], "shape", 64);
    let extra = common::random_project(&mut rng, &[9, 12, 7], "color", 512);
    p.set_vectors(
        extra.lens("color").unwrap().id.clone(),
        extra.lens("color").unwrap().vectors.clone(),
    )
    .unwrap();
    p.build_map("shape", &TsneConfig::with_seed(7)).unwrap();
    save_project(&mut p, dir).unwrap();
    p
}

fn lexical(path: &std::path::Path) -> std::path::PathBuf {
    let mut out = std::path::PathBuf::new();
    for c in path.components() {
        match c {
            std::path::Component::ParentDir => {
                out.pop();
            }
            std::path::Component::CurDir => {}
            c => out.push(c),
        }
    }
    out
}

fn vmap_files(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir.join("vectors")).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = saved_project(dir.path());
    let q = load_project(dir.path()).unwrap();
    assert_eq!(p, q);
    for (name, data) in &p.lenses {
        let bits = |m: &videomap_core::vectors::LensMatrix| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&data.vectors), bits(&q.lens(name).unwrap().vectors));
    }
    let layout = &q.lens("shape").unwrap().layout;
    assert_eq!(layout.len(), 28);

    let manifest = fs::read(dir.path().join(MANIFEST)).unwrap();
    let sidecars: Vec<Vec<u8>> = vmap_files(dir.path()).iter().map(|f| fs::read(f).unwrap()).collect();
    let mut q = q;
    save_project(&mut q, dir.path()).unwrap();
    assert_eq!(fs::read(dir.path().join(MANIFEST)).unwrap(), manifest);
    assert_eq!(vmap_files(dir.path()).iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>(), sidecars);

    // Saving elsewhere rebases asset paths onto the new directory.
    let other = tempfile::tempdir().unwrap();
    let mut r = load_project(dir.path()).unwrap();
    save_project(&mut r, other.path()).unwrap();
    let moved = load_project(other.path()).unwrap();
    for (a, b) in p.catalog.assets.iter().zip(&moved.catalog.assets) {
        assert_eq!(
            lexical(&fs::canonicalize(other.path()).unwrap().join(&b.path)),
            lexical(&fs::canonicalize(dir.path()).unwrap().join(&a.path))
        );
    }
    assert_eq!(moved.lenses, p.lenses);
    assert!(!dir.path().join(".lock").exists());
}

#[test]
fn corrupted_sidecars_are_typed_errors() {
    let dir = tempfile::tempdir().unwrap();
    saved_project(dir.path());
    let files = vmap_files(dir.path());
    assert_eq!(files.len(), 2);
    let original = fs::read(&files[0]).unwrap();

    let mut bad = original.clone();
    bad[..4].copy_from_slice(b"NOPE");
    fs::write(&files[0], &bad).unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::MagicMismatch(_))));

    fs::write(&files[0], &original[..original.len() - 3]).unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::TruncatedSidecar(_))));

    let mut bad = original.clone();
    bad[4] = 7;
    fs::write(&files[0], &bad).unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::UnsupportedVersion(7))));

    fs::remove_file(&files[0]).unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::CorruptManifest(_))));
}

#[test]
fn bad_manifests() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::CorruptManifest(_))));
    saved_project(dir.path());
    let path = dir.path().join(MANIFEST);
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replace("\"schema_version\": 1", "\"schema_version\": 99")).unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::UnsupportedVersion(99))));
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_project(dir.path()), Err(Error::CorruptManifest(_))));
}

#[test]
fn second_writer_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = saved_project(dir.path());
    fs::write(dir.path().join(".lock"), "1").unwrap();
    assert!(matches!(save_project(&mut p, dir.path()), Err(Error::ProjectLocked(_))));
    // The completed save is still readable.
    assert_eq!(load_project(dir.path()).unwrap(), p);
}

use std::fs;
use std::path::Path;

use cif::checkpoint::{Checkpoint, SeedLineage, MAGIC};
use cif::cloud_io::{format_cloud, load_cloud, parse_cloud, save_cloud};
use cif::dataset::{gen_dataset, gen_synthetic, load_dir, normalize_cloud, split_dataset, Family, ShapeParams};
use cif::pipeline::{initial_models, sample_clouds};
use cif::report::{format_eval, loss_line, parse_eval_summary, parse_loss_log};
use cif::Error;
use cif_core::chamfer::pairwise_cd_matrix;
use cif_core::cloud::PointCloud;
use cif_core::mds::classical_mds;
use cif_core::metrics::evaluate;
use cif_core::rng;
use cif_core::train::{AdamState, EpochReport, TrainConfig};
use rand::Rng as _;

fn random_cloud(id: &str, n: usize, seed: u64) -> PointCloud {
    let mut r = rng::seeded(seed);
    let pts =
        (0..n).map(|_| [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]).collect();
    PointCloud::new(id, pts).unwrap()
}

#[test]
fn parses_comments_and_blank_lines() {
    let text = "# header\n0 0 0\n\n  1.5 -2 3e-1  \n# trailing\n";
    let c = parse_cloud(text, "c", Path::new("c.xyz")).unwrap();
    assert_eq!(c.points(), &[[0.0, 0.0, 0.0], [1.5, -2.0, 0.3]]);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let p = Path::new("bad.xyz");
    for (text, line) in [("0 0 0\n1 2\n", 2), ("0 0 0\n\n1 2 x\n", 3), ("1 2 3 4\n", 1), ("nan 0 0\n", 1)] {
        match parse_cloud(text, "bad", p) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    assert!(matches!(parse_cloud("# only comments\n", "e", p), Err(Error::NoPoints { .. })));
}

#[test]
fn cloud_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let c = random_cloud("rt", 1000, 5);
    let path = dir.path().join("rt.xyz");
    save_cloud(&c, &path).unwrap();
    let back = load_cloud(&path).unwrap();
    assert_eq!(back, c);
    assert_eq!(format_cloud(&back), fs::read_to_string(&path).unwrap());
}

#[test]
fn normalization_fixed_points() {
    let c = PointCloud::new("c", vec![[1.0, 1.0, 1.0], [3.0, 1.0, 1.0]]).unwrap();
    let (n, rec) = normalize_cloud(&c);
    assert_eq!(n.points(), &[[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    assert_eq!(rec.centroid, [2.0, 1.0, 1.0]);
    assert_eq!(rec.scale, 1.0);

    let single = PointCloud::new("s", vec![[4.0, -2.0, 7.0]; 3]).unwrap();
    let (n, rec) = normalize_cloud(&single);
    assert_eq!(rec.scale, 1.0);
    assert!(n.points().iter().all(|p| *p == [0.0; 3]));
}

#[test]
fn normalization_round_trip() {
    let c = random_cloud("c", 300, 9);
    let (n, rec) = normalize_cloud(&c);
    let max_r = n.points().iter().map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).fold(0.0, f64::max);
    assert!((max_r - 1.0).abs() < 1e-12);
    let back = rec.denormalize(&n);
    for (a, b) in back.points().iter().zip(c.points()) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn split_sizes_and_determinism() {
    let clouds: Vec<_> = (0..10).map(|i| random_cloud(&format!("c{i}"), 4, i)).collect();
    let (tr, te) = split_dataset(&clouds, 0.9, 3).unwrap();
    assert_eq!((tr.len(), te.len()), (9, 1));
    let (tr2, te2) = split_dataset(&clouds, 0.9, 3).unwrap();
    assert_eq!((tr.clone(), te.clone()), (tr2, te2));
    let (tr3, _) = split_dataset(&clouds, 0.9, 4).unwrap();
    assert_ne!(tr, tr3);

    let thirty: Vec<_> = (0..30).map(|i| random_cloud(&format!("c{i}"), 2, i)).collect();
    let (tr, te) = split_dataset(&thirty, 0.9, 0).unwrap();
    assert_eq!((tr.len(), te.len()), (27, 3));

    assert!(split_dataset(&clouds, 1.0, 0).is_err());
    assert!(split_dataset(&clouds, 0.0, 0).is_err());
    assert!(split_dataset(&clouds, 0.99, 0).is_err());
    assert!(split_dataset(&clouds[..1], 0.5, 0).is_err());
}

#[test]
fn synthetic_surfaces() {
    let s = gen_synthetic(ShapeParams::Sphere { radius: 1.0 }, 500, 1, "s").unwrap();
    for p in s.points() {
        assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-12);
    }
    let b = gen_synthetic(ShapeParams::Box { edges: [1.0, 1.0, 1.0] }, 500, 1, "b").unwrap();
    for p in b.points() {
        let m = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((m - 0.5).abs() < 1e-12);
    }
    let c = gen_synthetic(ShapeParams::Cylinder { radius: 0.5, height: 2.0 }, 500, 1, "c").unwrap();
    for p in c.points() {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let on_side = (r - 0.5).abs() < 1e-12 && p[2].abs() <= 1.0 + 1e-12;
        let on_cap = (p[2].abs() - 1.0).abs() < 1e-12 && r <= 0.5 + 1e-12;
        assert!(on_side || on_cap, "{p:?}");
    }
    let other = gen_synthetic(ShapeParams::Sphere { radius: 1.0 }, 500, 2, "s").unwrap();
    assert_ne!(s.points(), other.points());
    assert!(gen_synthetic(ShapeParams::Sphere { radius: -1.0 }, 5, 0, "s").is_err());
}

#[test]
fn dataset_names_and_determinism() {
    let fams = [Family::Sphere, Family::Box, Family::Cylinder];
    let a = gen_dataset(&fams, 2, 16, 11).unwrap();
    let ids: Vec<_> = a.iter().map(|c| c.id().to_string()).collect();
    assert_eq!(ids, ["sphere_000", "sphere_001", "box_000", "box_001", "cylinder_000", "cylinder_001"]);
    assert_eq!(a, gen_dataset(&fams, 2, 16, 11).unwrap());
    assert!(Family::parse("torus").is_err());

    let dir = tempfile::tempdir().unwrap();
    for c in &a {
        save_cloud(c, dir.path().join(format!("{}.xyz", c.id()))).unwrap();
    }
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let loaded = load_dir(dir.path()).unwrap();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(loaded.iter().map(|c| c.id().to_string()).collect::<Vec<_>>(), sorted);
}

fn small_checkpoint() -> Checkpoint {
    let (f, g) = initial_models(8, 8, 1).unwrap();
    let clouds: Vec<_> = (0..4).map(|i| random_cloud(&format!("c{i}"), 6, i)).collect();
    let descriptors = classical_mds(&pairwise_cd_matrix(&clouds).unwrap(), 64).unwrap();
    let normalization = clouds.iter().map(|c| normalize_cloud(c).1).collect();
    Checkpoint {
        f,
        g,
        descriptors,
        config: TrainConfig { epochs: 3, seed: 42, ..TrainConfig::default() },
        normalization,
        seeds: SeedLineage::from_run(7),
        epochs_done: 0,
        adam: AdamState::new(),
    }
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let ck = small_checkpoint();
    let bytes = ck.to_bytes().unwrap();
    assert_eq!(&bytes[..8], MAGIC);
    let back = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.to_bytes().unwrap(), bytes);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.ckpt");
    ck.save(&p).unwrap();
    let loaded = Checkpoint::load(&p).unwrap();
    let a = sample_clouds(&ck.f, 2, 50, 3).unwrap();
    let b = sample_clouds(&loaded.f, 2, 50, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn checkpoint_after_training_round_trips() {
    use cif_core::train::{train, TrainData};
    let mut ck = small_checkpoint();
    let clouds: Vec<_> = (0..4).map(|i| random_cloud(&format!("c{i}"), 6, i)).collect();
    let data = TrainData::new(&clouds, &ck.descriptors).unwrap();
    let out = train::<cif_core::Error>(&data, ck.config, ck.f.clone(), ck.g.clone(), |_, _| Ok(())).unwrap();
    ck.f = out.f;
    ck.g = out.g;
    ck.adam = out.adam;
    ck.epochs_done = 3;
    let bytes = ck.to_bytes().unwrap();
    let back = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.to_bytes().unwrap(), bytes);
}

#[test]
fn checkpoint_corruption_is_reported() {
    let bytes = small_checkpoint().to_bytes().unwrap();

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::BadMagic)));

    for cut in [4, 12, 40, bytes.len() - 1] {
        assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Truncated(_))), "cut at {cut}");
    }

    let at = bytes.windows(9).position(|w| w == b"version 1").unwrap();
    let mut v2 = bytes.clone();
    v2[at + 8] = b'2';
    assert!(matches!(Checkpoint::from_bytes(&v2), Err(Error::UnknownVersion(_))));
}

#[test]
fn checkpoint_rejects_ids_with_whitespace() {
    let mut ck = small_checkpoint();
    ck.normalization[0].id = "has space".into();
    assert!(ck.to_bytes().is_err());
}

#[test]
fn loss_log_round_trip() {
    let reports = [
        EpochReport { epoch: 1, lr: 1e-4, nll: 3.25, steps: 4 },
        EpochReport { epoch: 2, lr: 8e-5, nll: 0.1 + 0.2, steps: 4 },
    ];
    let text: String = reports.iter().map(|r| loss_line(r) + "\n").collect();
    assert_eq!(text.lines().next().unwrap(), "epoch 1 lr 0.0001 nll 3.25");
    let parsed = parse_loss_log(&text).unwrap();
    assert_eq!(parsed, vec![(1, 1e-4, 3.25), (2, 8e-5, 0.1 + 0.2)]);
    assert!(parse_loss_log("epoch x lr 1 nll 2\n").is_err());
}

#[test]
fn eval_report_text() {
    let refs: Vec<_> = (0..3).map(|i| random_cloud(&format!("r{i}"), 10, i)).collect();
    let gen: Vec<_> = (0..2).map(|i| random_cloud(&format!("g{i}"), 10, 100 + i)).collect();
    let report = evaluate(&gen, &refs).unwrap();
    let ids: Vec<_> = refs.iter().map(|c| c.id().to_string()).collect();
    let text = format_eval(&report, &ids);
    assert_eq!(parse_eval_summary(&text), Some((report.mmd_cd, report.cov_cd)));
    for id in &ids {
        assert!(text.lines().any(|l| l.starts_with(id.as_str())));
    }
}

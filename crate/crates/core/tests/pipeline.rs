//! End-to-end checks of warp, metric and optimizer against independent
//! re-implementations.

use nalgebra::{Matrix3, Vector3};
use unirig::geometry::{read_rig, write_rig, Camera, Intrinsics, Pose, Rig};
use unirig::metric::{scene_error, total_error, MetricOptions, RigFamily};
use unirig::optimizer::{minimize, OptConfig};
use unirig::presets::{all_presets, preset};
use unirig::scenegen::{generate_scene, render_test_pattern, SceneSpec};
use unirig::warp::{build_warp_map, warp_and_blend, DepthAssumption, Sampling};

fn small(rig: &Rig, width: u32, height: u32) -> Rig {
    let cams = rig
        .iter()
        .map(|(n, c)| {
            let fov = c.intrinsics.fov_deg();
            (n.to_string(), Camera::new(Intrinsics::from_fov(fov, width, height).unwrap(), c.pose))
        })
        .collect();
    Rig::new(rig.label.clone(), cams).unwrap()
}

/// Raw-matrix projection: `None` behind the camera or outside the image.
fn naive_project(r: &Matrix3<f64>, c: &Vector3<f64>, k: &Intrinsics, x: &Vector3<f64>) -> Option<(f64, f64)> {
    let p = r.transpose() * (x - c);
    if p.z <= 1e-3 {
        return None;
    }
    let u = k.fx * p.x / p.z + k.cx;
    let v = k.fy * p.y / p.z + k.cy;
    (u >= 0.0 && u < k.width as f64 && v >= 0.0 && v < k.height as f64).then_some((u, v))
}

#[test]
fn warp_map_matches_naive_double_loop() {
    let virt_rig = small(&preset("6x80a").unwrap(), 64, 36);
    let source = small(&preset("5x70+110").unwrap(), 64, 36);
    let (h, d0, p) = (1.6, 50.0, 4.0);
    let assumption = DepthAssumption::new(h, d0).unwrap();
    for v in virt_rig.cameras() {
        let map = build_warp_map(v, &source, &assumption, p).unwrap();
        let (rv, cv) = (*v.pose.rotation(), v.pose.translation());
        let kv = &v.intrinsics;
        for y in 0..36u32 {
            for x in 0..64u32 {
                let (pu, pv) = (x as f64 + 0.5, y as f64 + 0.5);
                let d = Vector3::new((pu - kv.cx) / kv.fx, (pv - kv.cy) / kv.fy, 1.0);
                let mut local = d * (d0 / d.norm());
                if (pv - kv.cy) > 1e-6 {
                    let g = d * (h / d.y);
                    if g.norm() < d0 {
                        local = g;
                    }
                }
                let world = rv * local + cv;
                let ray = rv * d.normalize();
                let mut expect = Vec::new();
                for (j, s) in source.cameras().iter().enumerate() {
                    let axis = s.pose.rotation() * Vector3::z();
                    let w = ray.dot(&axis).max(0.0).powf(p);
                    if let Some(px) = naive_project(s.pose.rotation(), s.pose.translation(), &s.intrinsics, &world) {
                        if w > 0.0 {
                            expect.push((j as u16, px, w));
                        }
                    }
                }
                let got = map.entries_at(x, y);
                assert_eq!(got.len(), expect.len(), "pixel ({x},{y})");
                for (g, e) in got.iter().zip(&expect) {
                    assert_eq!(g.camera, e.0);
                    assert!((g.coord.u - e.1 .0).abs() < 1e-9 && (g.coord.v - e.1 .1).abs() < 1e-9);
                    assert!((g.weight - e.2).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn identity_warp_of_rendered_images() {
    let rig = small(&preset("6x60").unwrap(), 160, 90);
    let scene = generate_scene(&SceneSpec::new(9, 25)).unwrap();
    let images: Vec<_> = rig.cameras().iter().map(|c| render_test_pattern(c, &scene)).collect();
    // each virtual camera warped from its own source alone
    let assumption = DepthAssumption::new(1.6, 50.0).unwrap();
    for (cam, img) in rig.cameras().iter().zip(&images) {
        let single = Rig::from_cameras("one", vec![*cam]).unwrap();
        let map = build_warp_map(cam, &single, &assumption, 4.0).unwrap();
        let out = warp_and_blend(&map, std::slice::from_ref(img), Sampling::Bilinear).unwrap();
        for (a, b) in out.samples().iter().zip(img.samples()) {
            assert!(a.abs_diff(*b) <= 1);
        }
        assert!(out.mask().iter().all(|&m| m));
    }
}

#[test]
fn uncovered_regions_masked() {
    // a narrow front camera cannot fill a wide virtual view
    let src = Rig::from_cameras(
        "narrow",
        vec![Camera::new(
            Intrinsics::from_fov(40.0, 160, 90).unwrap(),
            Pose::from_mount(Vector3::new(0.0, 1.6, 0.0), 0.0, 0.0, 0.0),
        )],
    )
    .unwrap();
    let virt = Camera::new(Intrinsics::from_fov(100.0, 160, 90).unwrap(), src.cameras()[0].pose);
    let img = render_test_pattern(&src.cameras()[0], &unirig::metric::Scene::new("e", 0, vec![]));
    let map = build_warp_map(&virt, &src, &DepthAssumption::new(1.6, 50.0).unwrap(), 4.0).unwrap();
    let out = warp_and_blend(&map, &[img], Sampling::Bilinear).unwrap();
    assert!(!out.is_valid(0, 45) && !out.is_valid(159, 45));
    assert!(out.is_valid(80, 45));
    assert_eq!(out.get(0, 45), [0, 0, 0]);
}

#[test]
fn preset_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("unirig-presets-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for rig in all_presets() {
        let path = dir.join(format!("{}.toml", rig.label));
        write_rig(&path, &rig).unwrap();
        let back = read_rig(&path).unwrap();
        assert_eq!(back.names(), rig.names());
        for (a, b) in back.cameras().iter().zip(rig.cameras()) {
            assert!((a.pose.to_matrix() - b.pose.to_matrix()).amax() < 1e-9);
            assert!((a.intrinsics.fx - b.intrinsics.fx).abs() < 1e-6);
        }
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

/// Corner error recomputed from scratch for every visible pair.
fn brute_force(virt: &Rig, src: &Rig, scene: &unirig::metric::Scene, h: f64, d0: f64) -> f64 {
    let angles = |k: &Intrinsics, u: f64, v: f64| (((v - k.cy) / k.fy).atan(), ((u - k.cx) / k.fx).atan());
    let mut total = 0.0;
    for b in &scene.boxes {
        for corner in b.corners() {
            for v in virt.cameras() {
                let vc = *v.pose.translation();
                let rv = *v.pose.rotation();
                let kv = &v.intrinsics;
                let pv = rv.transpose() * (corner.0 - vc);
                if pv.z <= 1e-3 {
                    continue;
                }
                let direct = angles(kv, kv.fx * pv.x / pv.z + kv.cx, kv.fy * pv.y / pv.z + kv.cy);
                for s in src.cameras() {
                    let sc = *s.pose.translation();
                    if naive_project(s.pose.rotation(), &sc, &s.intrinsics, &corner.0).is_none() {
                        continue;
                    }
                    let dir = (corner.0 - sc).normalize();
                    let ground_y = vc.y - h;
                    let mut hit = None;
                    if dir.y < 0.0 {
                        let t = (ground_y - sc.y) / dir.y;
                        let g = sc + dir * t;
                        if t > 0.0 && (g - vc).norm() < d0 {
                            hit = Some(g);
                        }
                    }
                    let hit = hit.unwrap_or_else(|| {
                        let oc = sc - vc;
                        let bq = oc.dot(&dir);
                        let t = -bq + (bq * bq - oc.norm_squared() + d0 * d0).sqrt();
                        sc + dir * t
                    });
                    let Some((u, vv)) = naive_project(&rv, &vc, kv, &hit) else { continue };
                    let warped = angles(kv, u, vv);
                    let dist = (corner.0 - vc).norm();
                    total += dist * ((warped.0 - direct.0).abs() + (warped.1 - direct.1).abs());
                }
            }
        }
    }
    total
}

#[test]
fn scene_error_matches_brute_force() {
    let virt = preset("6x80a").unwrap();
    let src = preset("5x75").unwrap();
    let scene = generate_scene(&SceneSpec::new(21, 10)).unwrap();
    let got = scene_error(&virt, &src, &scene, &MetricOptions::default()).unwrap().total;
    let want = brute_force(&virt, &src, &scene, 1.6, 50.0);
    assert!(want > 0.0);
    assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");

    let fam1 = RigFamily::new(vec![src.clone()]).unwrap();
    let fam2 = RigFamily::new(vec![src.clone(), src]).unwrap();
    let scenes = [scene];
    let e1 = total_error(&fam1, &scenes, &virt, &MetricOptions::default()).unwrap();
    let e2 = total_error(&fam2, &scenes, &virt, &MetricOptions::default()).unwrap();
    assert!((e2 - 2.0 * e1).abs() <= 1e-12 * e1);
}

#[test]
fn grounded_corners_have_zero_error() {
    // bottom corners lie on the ground, which is exactly the assumed surface
    let virt = preset("6x80a").unwrap();
    let src = preset("4x95").unwrap();
    let scene = generate_scene(&SceneSpec { r_max: 30.0, ..SceneSpec::new(4, 20) }).unwrap();
    let report = scene_error(&virt, &src, &scene, &MetricOptions::default()).unwrap();
    assert!(report.counted > 0);
    for corners in &report.per_corner {
        for m in [0, 1, 4, 5] {
            assert!(corners[m].abs() < 1e-9, "{corners:?}");
        }
    }
}

#[test]
fn quadratic_converges_across_seeds() {
    let n = 10;
    let target: Vec<f64> = (0..n).map(|i| -1.0 + 0.2 * i as f64).collect();
    for seed in 0..3 {
        let mut cfg = OptConfig::standard(vec![0.0; n], 1.0, vec![-5.0; n], vec![5.0; n], vec![0.1; n]).unwrap();
        cfg.set_population(16, 8).unwrap();
        cfg.seed = seed;
        cfg.max_iterations = 5000 / cfg.population - 1;
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let out = minimize(f, &cfg).unwrap();
        assert!(out.evaluations <= 5000);
        assert!(out.best_error < 1e-8, "seed {seed}: {}", out.best_error);
    }
}

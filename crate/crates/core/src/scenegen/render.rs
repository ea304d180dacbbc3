//! Flat-shaded test-pattern renderer: checkerboard ground, plain sky, opaque
//! boxes drawn far to near by center distance.

use nalgebra::{Matrix3, Vector3};

use crate::geometry::{rot_y, Camera, PixelCoord};
use crate::image::ImageBuffer;
use crate::metric::{Box3, BoxClass, Scene};

pub const SKY_COLOR: [u8; 3] = [135, 190, 235];
const CHECK_LIGHT: [u8; 3] = [200, 200, 200];
const CHECK_DARK: [u8; 3] = [70, 70, 70];
const CHECK_SIZE: f64 = 1.0;

pub fn class_color(class: BoxClass) -> [u8; 3] {
    match class {
        BoxClass::Car => [220, 40, 40],
        BoxClass::Bus => [240, 200, 30],
        BoxClass::Truck => [240, 120, 20],
        BoxClass::Pedestrian => [200, 50, 200],
        BoxClass::Motorcycle => [30, 200, 210],
        BoxClass::Bicycle => [40, 180, 60],
    }
}

struct Prepared {
    rotation: Matrix3<f64>,
    center: Vector3<f64>,
    half: Vector3<f64>,
    color: [u8; 3],
}

impl Prepared {
    fn new(b: &Box3) -> Self {
        let s = b.size();
        Self {
            rotation: rot_y(b.yaw()),
            center: b.center().0,
            half: Vector3::new(s.length, s.height, s.width) / 2.0,
            color: class_color(b.class()),
        }
    }

    /// Entry distance and world normal of the face hit first.
    fn hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        let o = self.rotation.transpose() * (origin - self.center);
        let d = self.rotation.transpose() * dir;
        let (mut t_near, mut t_far) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut axis = 0;
        for i in 0..3 {
            if d[i].abs() < 1e-15 {
                if o[i].abs() > self.half[i] {
                    return None;
                }
                continue;
            }
            let a = (-self.half[i] - o[i]) / d[i];
            let b = (self.half[i] - o[i]) / d[i];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo > t_near {
                t_near = lo;
                axis = i;
            }
            t_far = t_far.min(hi);
        }
        if t_near > t_far || t_near <= 0.0 {
            return None;
        }
        let mut n = Vector3::zeros();
        n[axis] = -d[axis].signum();
        Some((t_near, self.rotation * n))
    }
}

fn shade(color: [u8; 3], normal: &Vector3<f64>) -> [u8; 3] {
    let light = Vector3::new(0.3, 0.85, -0.4).normalize();
    let k = 0.45 + 0.55 * normal.dot(&light).abs();
    color.map(|c| (c as f64 * k).round() as u8)
}

fn background(origin: &Vector3<f64>, dir: &Vector3<f64>) -> [u8; 3] {
    if dir.y < 0.0 && origin.y > 0.0 {
        let t = -origin.y / dir.y;
        let p = origin + dir * t;
        let parity = ((p.x / CHECK_SIZE).floor() as i64 + (p.z / CHECK_SIZE).floor() as i64).rem_euclid(2);
        if parity == 0 {
            CHECK_LIGHT
        } else {
            CHECK_DARK
        }
    } else {
        SKY_COLOR
    }
}

/// Renders `scene` as seen by `camera`. Boxes do not intersect-test against
/// each other: a nearer box (by center distance) simply paints over a farther
/// one.
pub fn render_test_pattern(camera: &Camera, scene: &Scene) -> ImageBuffer {
    let k = camera.intrinsics;
    let origin = camera.center().0;
    let mut boxes: Vec<(f64, Prepared)> =
        scene.boxes.iter().map(|b| ((b.center().0 - origin).norm(), Prepared::new(b))).collect();
    boxes.sort_by(|a, b| b.0.total_cmp(&a.0));

    let row = |y: u32| -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * k.width as usize);
        for x in 0..k.width {
            let dir = camera.unproject_ray(PixelCoord::center_of(x, y)).direction;
            let mut color = background(&origin, &dir);
            for (_, b) in &boxes {
                if let Some((_, n)) = b.hit(&origin, &dir) {
                    color = shade(b.color, &n);
                }
            }
            out.extend_from_slice(&color);
        }
        out
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<u8>> = {
        use rayon::prelude::*;
        (0..k.height).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<u8>> = (0..k.height).map(row).collect();

    ImageBuffer::from_samples(k.width, k.height, rows.concat()).expect("sizes match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Intrinsics, Pose, WorldPoint};
    use crate::metric::BoxSize;

    fn front_cam() -> Camera {
        Camera::new(
            Intrinsics::from_fov(90.0, 160, 90).unwrap(),
            Pose::from_mount(Vector3::new(0.0, 1.6, 0.0), 0.0, 0.0, 0.0),
        )
    }

    fn cube(center: WorldPoint, side: f64, class: BoxClass) -> Box3 {
        Box3::new(center, BoxSize { length: side, width: side, height: side }, 0.0, class).unwrap()
    }

    #[test]
    fn horizon_splits_ground_and_sky() {
        let img = render_test_pattern(&front_cam(), &Scene::new("e", 0, vec![]));
        for x in 0..160 {
            for y in 0..45 {
                assert_eq!(img.get(x, y), SKY_COLOR);
            }
            for y in 45..90 {
                let c = img.get(x, y);
                assert!(c == CHECK_LIGHT || c == CHECK_DARK);
            }
        }
    }

    #[test]
    fn on_axis_box_is_centered() {
        let b = cube(WorldPoint::new(0.0, 1.6, 10.0), 2.0, BoxClass::Car);
        let img = render_test_pattern(&front_cam(), &Scene::new("b", 0, vec![b]));
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for y in 0..90 {
            for x in 0..160 {
                let c = img.get(x, y);
                if c != SKY_COLOR && c != CHECK_LIGHT && c != CHECK_DARK {
                    xs.push(x as f64 + 0.5);
                    ys.push(y as f64 + 0.5);
                }
            }
        }
        assert!(!xs.is_empty());
        let mid =
            |v: &[f64]| (v.iter().cloned().fold(f64::INFINITY, f64::min) + v.iter().cloned().fold(0.0, f64::max)) / 2.0;
        // silhouette bounds are symmetric about the principal point
        assert!((mid(&xs) - 80.0).abs() <= 0.5 + 1e-9);
        assert!((mid(&ys) - 45.0).abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn nearer_box_paints_over_farther() {
        let near = cube(WorldPoint::new(0.0, 1.6, 8.0), 1.0, BoxClass::Bicycle);
        let far = cube(WorldPoint::new(0.3, 1.6, 15.0), 4.0, BoxClass::Bus);
        for boxes in [vec![near, far], vec![far, near]] {
            let img = render_test_pattern(&front_cam(), &Scene::new("o", 0, boxes));
            let c = img.get(80, 45);
            // front face of the near box, normal facing the camera
            assert_eq!(c, shade(class_color(BoxClass::Bicycle), &Vector3::new(0.0, 0.0, -1.0)));
            let edge = img.get(80 - 10, 45);
            assert_eq!(edge, shade(class_color(BoxClass::Bus), &Vector3::new(0.0, 0.0, -1.0)));
        }
    }

    #[test]
    fn render_is_deterministic() {
        let scene = crate::scenegen::generate_scene(&crate::scenegen::SceneSpec::new(2, 20)).unwrap();
        let a = render_test_pattern(&front_cam(), &scene);
        let b = render_test_pattern(&front_cam(), &scene);
        assert_eq!(a, b);
    }
}

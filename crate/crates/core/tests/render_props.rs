mod common;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use proptest::prelude::*;

use photo3d::camera::{Camera, DepthModel};
use photo3d::geom::Grid;
use photo3d::mesh::ldi_to_mesh;
use photo3d::preprocess::{detect_discontinuities, link_depth_edges};
use photo3d::render::{naive_warp, render_trajectory, render_view, CameraPath, Trajectory};
use photo3d::scenes::{hole_margin, layer_shift, two_layer_naive_holes, Rect, Scene};

fn shifted(cam: &Camera, x: f64, y: f64, z: f64) -> Camera {
    cam.with_pose(cam.pose * Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity()))
}

fn scene() -> impl Strategy<Value = (usize, usize, Vec<f32>)> {
    (2..12usize, 2..12usize).prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(0.0f32..=1.0, w * h)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn zbuffer_matches_brute_force((w, h, v) in scene(), tx in -0.3f64..0.3, ty in -0.3f64..0.3, tz in -0.5f64..0.5) {
        let (mut ldi, d) = common::lift(&Grid::new(w, h, [10, 20, 30]), &Grid::from_vec(w, h, v));
        let disc = detect_discontinuities(&d, 0.2).unwrap();
        for e in link_depth_edges(&disc, &ldi, 1).unwrap() {
            ldi.cut_edge(&e).unwrap();
        }
        let cam = Camera::default_for(w, h);
        let mesh = ldi_to_mesh(&ldi, &cam, DepthModel::default());
        prop_assert_eq!(mesh.vertex_count(), ldi.len());
        prop_assert_eq!(mesh.triangle_count(), 2 * common::linked_cell_oracle(&ldi));

        let view = shifted(&cam, tx, ty, tz);
        let out = render_view(&mesh, &view, w, h);
        let want = common::zbuffer_oracle(&mesh, &view, w, h);
        for (i, z) in want.iter().enumerate() {
            prop_assert_eq!(out.coverage.data[i], z.is_finite(), "pixel {}", i);
            if z.is_finite() {
                prop_assert!((out.depth.data[i] as f64 - z).abs() <= 1e-5 * z, "{} vs {}", out.depth.data[i], z);
            } else {
                prop_assert_eq!(out.depth.data[i], f32::INFINITY);
            }
        }
    }

    #[test]
    fn identity_view_reproduces_the_image((w, h, v) in scene(), seed in any::<u64>()) {
        let color = Grid::from_vec(w, h, (0..w * h).map(|i| {
            let k = seed.wrapping_mul(i as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15);
            [(k >> 8) as u8, (k >> 16) as u8, (k >> 24) as u8]
        }).collect());
        let (ldi, _) = common::lift(&color, &Grid::from_vec(w, h, v));
        let cam = Camera::default_for(w, h);
        let out = render_view(&ldi_to_mesh(&ldi, &cam, DepthModel::default()), &cam, w, h);
        for (i, c) in out.color.data.iter().enumerate() {
            if out.coverage.data[i] {
                for k in 0..3 {
                    prop_assert!((c[k] as i32 - color.data[i][k] as i32).abs() <= 1);
                }
            }
        }
        prop_assert_eq!(out.holes_within(1), 0);
    }

    #[test]
    fn naive_warp_without_motion_has_no_holes((w, h, v) in scene()) {
        let (_, d) = common::lift(&Grid::new(w, h, [0, 0, 0]), &Grid::from_vec(w, h, v));
        let color = Grid::new(w, h, [7, 8, 9]);
        let cam = Camera::default_for(w, h);
        let out = naive_warp(&color, &d, DepthModel::default(), &cam, &cam).unwrap();
        prop_assert_eq!(out.hole_count(), 0);
        prop_assert_eq!(out.color.data, color.data);
    }
}

#[test]
fn naive_holes_grow_with_baseline() {
    // background shifts stay clear of half pixels under this model
    let model = DepthModel { a: 0.81, b: 0.19 };
    let (w, h) = (96, 64);
    let square = Rect { x0: 30, y0: 20, x1: 60, y1: 44 };
    let s = Scene::two_layer(w, h, square);
    let (_, d) = common::lift(&s.color, &s.disparity);
    let cam = Camera::default_for(w, h);
    let mut last = 0;
    for px in 1..=12 {
        let t = px as f64 / layer_shift(1.0, model, cam.fx, 1.0);
        let margin = hole_margin(px as f64);
        let out = naive_warp(&s.color, &d, model, &cam, &shifted(&cam, t, 0.0, 0.0)).unwrap();
        let holes = out.holes_within(margin);
        assert_eq!(holes, two_layer_naive_holes(w, h, square, model, cam.fx, t, margin));
        assert!(holes >= last, "baseline {px}: {holes} < {last}");
        last = holes;
    }
    assert!(last > 0);
}

#[test]
fn trajectories() {
    let (w, h) = (24, 16);
    let (ldi, _) = common::lift(&Grid::new(w, h, [90, 90, 90]), &Grid::new(w, h, 0.4));
    let cam = Camera::default_for(w, h);
    let mesh = ldi_to_mesh(&ldi, &cam, DepthModel::default());

    let empty = Trajectory { frames: 0, path: CameraPath::Lateral { amplitude: 0.1 }, width: None, height: None, intrinsics: None };
    assert!(render_trajectory(&mesh, &cam, w, h, &empty).unwrap().is_empty());

    let lateral = Trajectory { frames: 2, ..empty.clone() };
    let frames = render_trajectory(&mesh, &cam, w, h, &lateral).unwrap();
    for (f, x) in frames.iter().zip([-0.1, 0.1]) {
        let direct = render_view(&mesh, &shifted(&cam, x, 0.0, 0.0), w, h);
        assert_eq!(f.color.data, direct.color.data);
        assert_eq!(f.depth.data, direct.depth.data);
    }

    let orbit = Trajectory::from_json(r#"{"frames": 30, "path": {"kind": "orbit", "radius": 0.02, "focus_depth": 1.5}, "width": 12, "height": 8}"#).unwrap();
    let frames = render_trajectory(&mesh, &cam, w, h, &orbit).unwrap();
    assert_eq!(frames.len(), 30);
    assert!(frames.iter().all(|f| f.color.width == 12 && f.color.height == 8));
    assert!(frames.iter().all(|f| f.coverage.data.iter().any(|c| *c)));

    let bad = r#"{"frames": 2, "path": {"kind": "poses", "poses": [{"translation": [0,0,0], "rotation": [0,0,0]}]}}"#;
    assert_eq!(Trajectory::from_json(bad).unwrap_err().exit_code(), 2);
    assert!(Trajectory::from_json(r#"{"frames": 1, "path": {"kind": "spin"}}"#).is_err());
}

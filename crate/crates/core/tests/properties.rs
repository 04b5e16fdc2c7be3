//! Randomized checks of the library's invariants.

use std::path::Path;

use deformnet::geometry::{icosphere, knn, sample_mesh_surface, sample_sphere};
use deformnet::io::{parse_checkpoint, parse_obj, parse_xyz, render_checkpoint, render_obj, render_xyz, Checkpoint};
use deformnet::loss::{chamfer, chamfer_distance, deform_loss, total_loss, DeformLossForm, LossInputs};
use deformnet::metrics::{coverage, d2f};
use deformnet::model::{self, cloud_tensor, Direction, LatentCode};
use deformnet::training::TrainState;
use deformnet::{Graph, ModelConfig, ModelParams, PointCloud, Tensor, TrainConfig, Vec3};
use proptest::prelude::*;

fn small_config(conditioned: bool) -> ModelConfig {
    ModelConfig {
        latent_dim: 6,
        blocks: 2,
        point_widths: vec![5, 7],
        pool_hidden: 8,
        block_hidden: 6,
        backward_conditioned: conditioned,
    }
}

/// Small model whose deformation output layers are non-zero, so the blocks
/// actually move points.
fn active_model(seed: u64) -> ModelParams {
    let mut params = ModelParams::init(&small_config(true), seed).unwrap();
    let names: Vec<String> = params.names().to_vec();
    for (i, name) in names.iter().enumerate() {
        if name.ends_with(".2.weight") || name.ends_with(".2.bias") {
            let t = &mut params.tensors_mut()[i];
            for (j, v) in t.data_mut().iter_mut().enumerate() {
                *v = ((j as f64 + 1.0) * 0.37 + seed as f64).sin() * 0.3;
            }
        }
    }
    params
}

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn cloud(min: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec((coord(), coord(), coord()), min..=max)
        .prop_map(|v| PointCloud::new(v.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect()).unwrap())
}

fn permuted(c: &PointCloud, perm: &[usize]) -> PointCloud {
    PointCloud::new(perm.iter().map(|&i| c.points()[i]).collect()).unwrap()
}

fn rotation(axis: Vec3, angle: f64) -> impl Fn(Vec3) -> Vec3 {
    let k = axis.normalized();
    let (s, c) = angle.sin_cos();
    move |v: Vec3| v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c))
}

fn cloud_and_perm(min: usize, max: usize) -> impl Strategy<Value = (PointCloud, Vec<usize>)> {
    cloud(min, max).prop_flat_map(|c| {
        let n = c.len();
        (Just(c), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn encoder_is_permutation_invariant((c, perm) in cloud_and_perm(1, 40), seed in 0u64..1000) {
        let params = active_model(seed);
        prop_assert_eq!(model::encode(&c, &params).unwrap(), model::encode(&permuted(&c, &perm), &params).unwrap());
    }

    #[test]
    fn deform_is_permutation_equivariant((c, perm) in cloud_and_perm(1, 40), seed in 0u64..1000) {
        let params = active_model(seed);
        let code = LatentCode((0..6).map(|i| (i as f64 + seed as f64).cos()).collect());
        for dir in [Direction::Forward, Direction::Backward] {
            let out = model::deform(&c, &code, &params, dir).unwrap();
            let out_perm = model::deform(&permuted(&c, &perm), &code, &params, dir).unwrap();
            prop_assert_eq!(permuted(&out, &perm), out_perm);
        }
    }

    #[test]
    fn duplicated_points_leave_the_code_unchanged(c in cloud(1, 30), seed in 0u64..1000) {
        let params = active_model(seed);
        let doubled = PointCloud::new(c.points().iter().chain(c.points()).copied().collect()).unwrap();
        prop_assert_eq!(model::encode(&c, &params).unwrap(), model::encode(&doubled, &params).unwrap());
    }

    #[test]
    fn identity_at_init(target in cloud(2, 40), n in 2usize..40, seed in 0u64..1000) {
        let params = ModelParams::init(&small_config(seed % 2 == 0), seed).unwrap();
        let sphere = sample_sphere(n, seed).unwrap();
        let (fwd, bwd) = model::reconstruct(&target, &sphere, &params).unwrap();
        prop_assert_eq!(fwd, sphere);
        prop_assert_eq!(bwd, target);
    }

    #[test]
    fn total_loss_vanishes_on_sphere_targets_at_init(n in 3usize..40, seed in 0u64..1000) {
        let params = ModelParams::init(&small_config(true), seed).unwrap();
        let sphere = sample_sphere(n, seed).unwrap();
        let nbrs = knn(&sphere, 2).unwrap();
        let mut g = Graph::new();
        let bound = params.bind(&mut g).unwrap();
        let s = g.constant(cloud_tensor(&sphere)).unwrap();
        let t = g.constant(cloud_tensor(&sphere)).unwrap();
        let (_, fwd, bwd) = bound.reconstruct(&mut g, t, s).unwrap();
        let inputs = LossInputs { target: t, sphere: s, forward_out: fwd, backward_out: bwd, sphere_nbrs: &nbrs, target_nbrs: &nbrs };
        let terms = total_loss(&mut g, inputs, &Default::default(), DeformLossForm::Squared).unwrap();
        prop_assert!(g.value(terms.total).item().unwrap().abs() < 1e-12);
    }

    #[test]
    fn chamfer_is_symmetric(a in cloud(1, 50), b in cloud(1, 50)) {
        prop_assert_eq!(chamfer_distance(&a, &b).to_bits(), chamfer_distance(&b, &a).to_bits());
        let mut g = Graph::new();
        let x = g.constant(cloud_tensor(&a)).unwrap();
        let y = g.constant(cloud_tensor(&b)).unwrap();
        let ab = chamfer(&mut g, x, y).unwrap();
        let ba = chamfer(&mut g, y, x).unwrap();
        prop_assert_eq!(g.value(ab).item().unwrap().to_bits(), g.value(ba).item().unwrap().to_bits());
        prop_assert!(chamfer_distance(&a, &a) == 0.0);
    }

    #[test]
    fn deform_loss_is_rigid_motion_invariant(
        src in cloud(4, 30),
        axis in (coord(), coord(), coord()).prop_filter("nonzero axis", |(x, y, z)| x * x + y * y + z * z > 0.01),
        angle in -3.2..3.2f64,
        shift in (coord(), coord(), coord()),
        noise in 0u64..1000,
    ) {
        let nbrs = knn(&src, 3).unwrap();
        let deformed: Vec<Vec3> = src
            .points()
            .iter()
            .enumerate()
            .map(|(i, &p)| p * 1.1 + Vec3::new(((i as u64 + noise) as f64).sin() * 0.1, 0.05, -0.02))
            .collect();
        let rot = rotation(Vec3::new(axis.0, axis.1, axis.2), angle);
        let moved: Vec<Vec3> = deformed.iter().map(|&p| rot(p) + Vec3::new(shift.0, shift.1, shift.2)).collect();
        for form in [DeformLossForm::Squared, DeformLossForm::Absolute] {
            let value = |pts: &[Vec3]| {
                let mut g = Graph::new();
                let s = g.constant(cloud_tensor(&src)).unwrap();
                let d = g.constant(cloud_tensor(&PointCloud::new(pts.to_vec()).unwrap())).unwrap();
                let l = deform_loss(&mut g, s, d, &nbrs, form).unwrap();
                g.value(l).item().unwrap()
            };
            prop_assert!((value(&deformed) - value(&moved)).abs() < 1e-9);
        }
    }

    #[test]
    fn knn_lists_are_sorted_and_exclude_self(c in cloud(2, 40), k_frac in 0.0..1.0f64) {
        let k = (1 + (k_frac * (c.len() - 1) as f64) as usize).min(c.len() - 1);
        let nb = knn(&c, k).unwrap();
        for i in 0..c.len() {
            let list = nb.neighbors(i);
            prop_assert_eq!(list.len(), k);
            prop_assert!(!list.contains(&i));
            let d: Vec<f64> = list.iter().map(|&j| c.points()[i].distance_squared(c.points()[j])).collect();
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn d2f_is_rigid_motion_invariant(c in cloud(1, 20), angle in -3.2..3.2f64, shift in (coord(), coord(), coord())) {
        let mesh = icosphere(1).unwrap();
        let rot = rotation(Vec3::new(0.3, -0.5, 0.8), angle);
        let t = Vec3::new(shift.0, shift.1, shift.2);
        let moved_mesh = mesh.with_vertices(mesh.vertices().iter().map(|&v| rot(v) + t).collect()).unwrap();
        let moved = PointCloud::new(c.points().iter().map(|&p| rot(p) + t).collect()).unwrap();
        prop_assert!((d2f(&c, &mesh).unwrap() - d2f(&moved, &moved_mesh).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn coverage_never_decreases_when_points_are_added(a in cloud(1, 20), b in cloud(1, 20)) {
        let mesh = icosphere(1).unwrap();
        let both = PointCloud::new(a.points().iter().chain(b.points()).copied().collect()).unwrap();
        let ca = coverage(&a, &mesh).unwrap();
        prop_assert!((0.0..=1.0).contains(&ca));
        prop_assert!(coverage(&both, &mesh).unwrap() >= ca);
    }

    #[test]
    fn surface_samples_lie_on_the_mesh(n in 1usize..200, seed in 0u64..1000) {
        let mesh = icosphere(2).unwrap();
        let pts = sample_mesh_surface(&mesh, n, seed).unwrap();
        prop_assert_eq!(pts.len(), n);
        prop_assert!(d2f(&pts, &mesh).unwrap() < 1e-12);
        prop_assert_eq!(pts, sample_mesh_surface(&mesh, n, seed).unwrap());
        let sphere = sample_sphere(n, seed).unwrap();
        prop_assert!(sphere.points().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn xyz_round_trip(c in cloud(1, 50)) {
        let back = parse_xyz(&render_xyz(&c), Path::new("mem")).unwrap();
        prop_assert_eq!(back.len(), c.len());
        for (p, q) in c.points().iter().zip(back.points()) {
            for i in 0..3 {
                prop_assert!((p[i] - q[i]).abs() <= 1e-8 * p[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn obj_round_trip(level in 0u32..3, scale in 0.1..10.0f64) {
        let base = icosphere(level).unwrap();
        let mesh = base.with_vertices(base.vertices().iter().map(|&v| v * scale).collect()).unwrap();
        let back = parse_obj(&render_obj(&mesh), Path::new("mem")).unwrap();
        prop_assert_eq!(back.faces(), mesh.faces());
        for (p, q) in mesh.vertices().iter().zip(back.vertices()) {
            prop_assert!((*p - *q).norm() < 1e-9);
        }
    }

    #[test]
    fn icosphere_is_a_closed_genus_zero_surface(level in 0u32..5) {
        let m = icosphere(level).unwrap();
        prop_assert_eq!(m.euler_characteristic(), 2);
        prop_assert!(m.is_edge_manifold());
        prop_assert_eq!(m.faces().len(), 20 * 4usize.pow(level));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn checkpoint_serialization_is_canonical(seed in 0u64..1_000_000, step in 0u64..10_000, conditioned in any::<bool>()) {
        let config = TrainConfig { seed, model: small_config(conditioned), ..TrainConfig::default() };
        let mut state = TrainState::init(&config).unwrap();
        state.optimizer.step = step;
        for (i, m) in state.optimizer.first_moment.iter_mut().enumerate() {
            let shape = m.shape().to_vec();
            let n = m.numel();
            *m = Tensor::new(shape, (0..n).map(|j| ((i * 7 + j) as f64 + seed as f64).sin() * 1e-3).collect()).unwrap();
        }
        let ckpt = Checkpoint { config, state };
        let text = render_checkpoint(&ckpt);
        let back = parse_checkpoint(&text).unwrap();
        prop_assert_eq!(&back, &ckpt);
        prop_assert_eq!(render_checkpoint(&back), text);
    }
}

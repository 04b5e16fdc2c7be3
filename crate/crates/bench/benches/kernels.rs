use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use deformnet::geometry::{icosphere, knn, point_triangle_distance, sample_sphere};
use deformnet::loss::chamfer_distance;
use deformnet::model::{cloud_tensor, ModelConfig, ModelParams};
use deformnet::{Graph, Tensor, Vec3};

fn geometry(c: &mut Criterion) {
    let a = sample_sphere(256, 1).unwrap();
    let b = sample_sphere(256, 2).unwrap();
    c.bench_function("knn_256_k8", |bench| bench.iter(|| knn(black_box(&a), 8).unwrap()));
    c.bench_function("chamfer_256x256", |bench| bench.iter(|| chamfer_distance(black_box(&a), black_box(&b))));
    let tri = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.2, 0.9, 0.0)];
    let probes: Vec<Vec3> = b.points().iter().map(|&p| p * 2.0).collect();
    c.bench_function("point_triangle_distance_x256", |bench| {
        bench.iter(|| probes.iter().map(|&p| point_triangle_distance(black_box(p), &tri)).sum::<f64>())
    });
    c.bench_function("icosphere_4", |bench| bench.iter(|| icosphere(black_box(4)).unwrap()));
}

fn autodiff(c: &mut Criterion) {
    let x = Tensor::new(vec![256, 128], (0..256 * 128).map(|i| (i as f64 * 0.01).sin()).collect()).unwrap();
    let w = Tensor::new(vec![128, 128], (0..128 * 128).map(|i| (i as f64 * 0.02).cos()).collect()).unwrap();
    c.bench_function("matmul_256x128x128_fwd_bwd", |bench| {
        bench.iter(|| {
            let mut g = Graph::new();
            let xv = g.param(x.clone()).unwrap();
            let wv = g.param(w.clone()).unwrap();
            let y = g.matmul(xv, wv).unwrap();
            let s = g.reduce_sum(y, None).unwrap();
            g.backward(s).unwrap()
        })
    });

    let params = ModelParams::init(&ModelConfig::default(), 0).unwrap();
    let target = cloud_tensor(&sample_sphere(256, 3).unwrap());
    let sphere = cloud_tensor(&sample_sphere(256, 4).unwrap());
    let mut group = c.benchmark_group("model");
    group.sample_size(10);
    group.bench_function("reconstruct_default_256_fwd_bwd", |bench| {
        bench.iter(|| {
            let mut g = Graph::new();
            let bound = params.bind(&mut g).unwrap();
            let t = g.constant(target.clone()).unwrap();
            let s = g.constant(sphere.clone()).unwrap();
            let (_, fwd, bwd) = bound.reconstruct(&mut g, t, s).unwrap();
            let a = g.reduce_sum(fwd, None).unwrap();
            let b = g.reduce_sum(bwd, None).unwrap();
            let total = g.add(a, b).unwrap();
            g.backward(total).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, geometry, autodiff);
criterion_main!(benches);

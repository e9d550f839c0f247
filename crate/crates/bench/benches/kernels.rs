use criterion::{black_box, criterion_group, criterion_main, Criterion};
use locint::density::DEFAULT_BUDGET;
use locint::intersect::combinatorial_on_ball;
use locint::*;

fn quadform(c: &mut Criterion) {
    let t = random_unimodular_conjugate(&SymMatrix3::diag(3, [1, 18, 243]).unwrap(), 7);
    c.bench_function("diagonalize conjugate of diag(1,18,243)", |b| b.iter(|| diagonalize(black_box(&t)).unwrap()));
}

fn formulas(c: &mut Criterion) {
    let inv = TInvariants::from_exponents(5, [3, 5, 7], [1, 1, -1]).unwrap();
    c.bench_function("closed intersection (3,5,7) at p=5", |b| b.iter(|| closed_intersection(black_box(&inv)).unwrap()));
    c.bench_function("density derivative route (3,5,7) at p=5", |b| b.iter(|| relation_check(black_box(&inv)).unwrap()));
    c.bench_function("case-table reassembly (3,5,7) at p=5", |b| {
        b.iter(|| reassemble_from_cases(5, black_box([3, 5, 7]), [1, 1, -1]).unwrap())
    });
}

fn density(c: &mut Criterion) {
    let s1 = extend_s_r(&GramMatrix::standard_s(3).unwrap(), 1);
    let u = GramMatrix::diag(3, &[1, 2, 3]).unwrap();
    c.bench_function("counting oracle S_1 vs diag(1,2,3) at t=2", |b| {
        b.iter(|| brute_density(black_box(&s1), &u, 2, DEFAULT_BUDGET).unwrap())
    });
}

fn tree(c: &mut Criterion) {
    c.bench_function("ball of radius 3 at p=3", |b| b.iter(|| TreeBall::build(3, black_box(3), 20).unwrap()));
    let ball = TreeBall::build(3, 4, 30).unwrap();
    let inv = TInvariants::from_exponents(3, [1, 3, 3], [1, 1, 1]).unwrap();
    c.bench_function("tree route (1,3,3) at p=3", |b| b.iter(|| combinatorial_on_ball(black_box(&inv), 1, &ball).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = quadform, formulas, density, tree
}
criterion_main!(kernels);

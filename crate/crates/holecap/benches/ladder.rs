//! Parallel against sequential dispatch on a short capacity ladder.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holecap::capacity::{convergence_to_zero, Data};
use holecap::discrete::HRule;
use holecap::geometry::{concentrating_family, Domain, Template};
use holecap::par::{set_mode, Mode};

fn ladder(c: &mut Criterion) {
    let domain = Domain::rectangle(1.0, 0.8).unwrap();
    let family = concentrating_family(&domain, &Template::Segment { angle: 0.3 }, &[0.16, 0.12, 0.08]).unwrap();
    let x1 = |p: [f64; 2]| p[0] + 0.5;
    let mut group = c.benchmark_group("capacity-ladder");
    group.sample_size(10);
    for (name, mode) in [("parallel", Mode::Parallel), ("sequential", Mode::Sequential)] {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            set_mode(mode);
            b.iter(|| convergence_to_zero(&domain, &family, Data::Function(&x1), HRule::default()).unwrap())
        });
    }
    set_mode(Mode::Parallel);
    group.finish();
}

criterion_group!(benches, ladder);
criterion_main!(benches);

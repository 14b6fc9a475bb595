use drlab::dist::{survival, LawIter, ModelSpec, StarLaw, TruncationPolicy};
use drlab::open_paths::{
    mc_estimate, transform_init, transform_mc_check, transform_step, CoupledSampler, McSettings,
    DEFAULT_NODE_BUDGET,
};
use proptest::prelude::*;

fn two(p: f64) -> ModelSpec {
    ModelSpec::new(2, StarLaw::constant(2).unwrap(), p).unwrap()
}

#[test]
fn transform_agrees_with_samples() {
    let mc = McSettings {
        count: 50_000,
        seed: 31,
        ..McSettings::default()
    };
    for n in [5, 10] {
        for c in transform_mc_check(
            &two(0.2),
            n,
            &[0.0, 0.5, 1.0],
            &mc,
            &TruncationPolicy::default(),
        )
        .unwrap()
        {
            assert!(c.z <= 4.0, "n = {n}: {c:?}");
        }
    }
}

#[test]
fn theta_one_is_the_plain_iteration() {
    let spec = two(0.2);
    let policy = TruncationPolicy::default();
    let mut t = transform_init(&spec, 1.0, &policy).unwrap();
    let laws = LawIter::new(spec.initial_law(), 2, policy);
    for (n, law) in laws.take(300).enumerate() {
        let law = law.unwrap();
        assert!((t.positive() - survival(&law)).abs() <= 1e-10, "n = {n}");
        t = transform_step(&t).unwrap();
    }
}

#[test]
fn coupled_survival_matches_exact_subcritical_law() {
    let spec = two(0.15);
    let sampler = CoupledSampler::new(&spec, 10, DEFAULT_NODE_BUDGET).unwrap();
    let est = mc_estimate(
        |rng| {
            let s = sampler.sample(rng);
            assert!(s.x <= s.y);
            Ok(s)
        },
        |s| f64::from(u8::from(s.x >= 1)),
        100_000,
        4,
        2,
    )
    .unwrap();
    let exact = LawIter::new(spec.initial_law(), 2, TruncationPolicy::default())
        .nth(10)
        .unwrap()
        .unwrap();
    assert!(
        est.agrees_with(survival(&exact), 4.0),
        "{est:?} vs {}",
        survival(&exact)
    );
}

#[test]
fn coupled_marginal_at_generation_zero() {
    let spec = two(0.1);
    let sampler = CoupledSampler::new(&spec, 0, DEFAULT_NODE_BUDGET).unwrap();
    let est = mc_estimate(|rng| Ok(sampler.sample(rng)), |s| s.x as f64, 40_000, 9, 1).unwrap();
    assert!(est.agrees_with(0.2, 4.0), "{est:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_monotone_and_dominated(t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0, star_hi in 2u32..5) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let star = StarLaw::uniform(1, star_hi).unwrap();
        let spec = ModelSpec::new(2, star.clone(), drlab::analytics::critical_p(&star, 2)).unwrap();
        let policy = TruncationPolicy::default();
        let mut a = transform_init(&spec, lo, &policy).unwrap();
        let mut b = transform_init(&spec, hi, &policy).unwrap();
        for _ in 0..60 {
            a = transform_step(&a).unwrap();
            b = transform_step(&b).unwrap();
            prop_assert!(a.positive() <= b.positive() * (1.0 + 1e-12) + 1e-300);
            prop_assert!(a.domination_excess() <= 1e-9);
            prop_assert!(b.total() <= 1.0 + 1e-12);
        }
    }
}

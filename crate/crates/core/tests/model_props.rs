use flowpack::model::{format_rational, normalize_instance, parse_rational, rat, Instance, Job, Rational};
use num_bigint::BigInt;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (any::<i64>(), 1..=i64::MAX).prop_map(|(n, d)| Rational::new(BigInt::from(n), BigInt::from(d)))
}

fn raw_instance() -> impl Strategy<Value = Instance> {
    (1..=3usize, prop::collection::vec((0..=30i64, 0..=30i64, 0..=50i64), 0..=10), 1..=20i64).prop_map(|(m, raw, bound)| {
        let jobs = raw
            .into_iter()
            .enumerate()
            .map(|(i, (a, b, p))| Job::new(3 * i as u64 + 2, rat(a, 10), rat(b, 10), rat(p, 1)))
            .collect();
        Instance::new(m, jobs, rat(bound, 10)).unwrap()
    })
}

proptest! {
    #[test]
    fn rational_text_round_trips(r in rational()) {
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn decimals_parse_exactly(whole in 0..1000i64, frac in 0..1000i64) {
        let text = format!("{whole}.{frac:03}");
        prop_assert_eq!(parse_rational(&text).unwrap(), rat(whole * 1000 + frac, 1000));
    }

    #[test]
    fn normalization_is_idempotent(inst in raw_instance()) {
        let once = normalize_instance(&inst).unwrap();
        let twice = normalize_instance(&once.instance).unwrap();
        prop_assert_eq!(&twice.instance, &once.instance);
        prop_assert!(twice.dropped.is_empty());
        prop_assert_eq!(once.instance.jobs.len() + once.dropped.len(), inst.jobs.len());
        for job in &once.instance.jobs {
            prop_assert!(job.load() <= rat(1, 1));
        }
    }
}

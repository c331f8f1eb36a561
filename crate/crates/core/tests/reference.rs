mod support;

use proptest::prelude::*;
use support::{gen_provider, parse, run_engine, Gen, Reference};

fn check(seed: u64) {
    let text = Gen::new(seed).program();
    let program = parse(&text);
    let want = Reference::run(&program, "main", vec![], gen_provider(seed));
    let got = run_engine(&text, "main", vec![], gen_provider(seed));
    assert_eq!(got.ending, want.ending, "ending differs for\n{text}");
    assert_eq!(got.score, want.score, "score differs for\n{text}");
    assert_eq!(got.costs, want.costs, "costs differ for\n{text}");
    assert_eq!(got.log, want.log, "transcript differs for\n{text}");
    if matches!(want.ending, support::Ending::Returned(_)) {
        assert_eq!(got.locals, want.locals, "final frame differs for\n{text}");
    }
}

#[test]
fn first_hundred_seeds_match_reference() {
    for seed in 0..100 {
        check(seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_matches_reference(seed in any::<u64>()) {
        check(seed);
    }
}

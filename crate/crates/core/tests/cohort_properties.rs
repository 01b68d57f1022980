//! Property tests for cohort selection against the literal reference
//! implementation and under event-order permutation.

use palscreen::cohort::{select_point, CohortConfig};
use palscreen_testkit::{cohort_check, histories};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    // Selection must not care about the order events arrive in.
    #[test]
    fn selection_invariant_under_event_permutation(seed in 0u64..500, shuffle_seed in 0u64..500) {
        let config = CohortConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = histories::random_patient(&mut rng, 0);
        let mut shuffled = p.clone();
        shuffled
            .events
            .shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        prop_assert_eq!(select_point(&p, &config), select_point(&shuffled, &config));
    }

    // The emitted point must agree with a literal re-derivation, and an
    // excluded patient must have no valid point at all.
    #[test]
    fn selection_agrees_with_reference(seed in 0u64..2000) {
        let config = CohortConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = histories::random_patient(&mut rng, 0);
        let reference = cohort_check::reference_point(&p, &config);
        prop_assert_eq!(select_point(&p, &config), reference);
    }

    // Non-default interval constraints must flow through selection too.
    #[test]
    fn selection_agrees_with_reference_off_default_config(seed in 0u64..500) {
        let config = CohortConfig {
            lead_min_days: 30,
            lead_max_days: 200,
            history_min_days: 120,
            followup_min_days: 250,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = histories::random_patient(&mut rng, 0);
        let reference = cohort_check::reference_point(&p, &config);
        prop_assert_eq!(select_point(&p, &config), reference);
    }
}

mod common;

use common::*;
use dfsep::tune::{find_mu, sweep_gamma, HyperParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scripted_search_follows_the_rules(seed in 0u64..1_000_000, l in 2usize..5, exhaustive in any::<bool>()) {
        let hp = HyperParams::default();
        let script = random_script(&mut rng(seed), &hp);
        let (gamma, steps) = sweep_gamma(&script, &hp).unwrap();
        prop_assert_eq!(gamma, hp.gamma_grid()[ref_first_argmax(&script.re)]);
        prop_assert_eq!(steps.len(), hp.gamma_grid().len());

        let search = find_mu(&script, gamma, l, &hp, exhaustive).unwrap();
        let (k, exhausted) = ref_mu_stop(&script.rs, &script.rn, l, hp.rs_min);
        prop_assert_eq!(search.stop_index, k);
        prop_assert_eq!(search.mu, hp.mu_set[k]);
        prop_assert_eq!(search.exhausted, exhausted);
        prop_assert_eq!(search.steps.len(), if exhaustive { hp.mu_set.len() } else { k + 1 });
        for (i, s) in search.steps.iter().enumerate() {
            prop_assert_eq!(s.mu, hp.mu_set[i]);
        }
    }
}

#[test]
fn ties_go_to_the_smallest_gamma() {
    let hp = HyperParams::default();
    let script = ScriptedTrainer {
        re: vec![1.0, 3.0, 2.0, 3.0, 3.0],
        rs: vec![1.0; 6],
        rn: vec![1.0; 6],
    };
    assert_eq!(sweep_gamma(&script, &hp).unwrap().0, 0.2);
}

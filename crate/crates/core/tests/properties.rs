use proptest::prelude::*;
use proptest::sample::Index;

use iietlab::address::{first_increasable, shift_oracle, vershik};
use iietlab::iet::{approximant_piece_count, build_approximant, exact_step};
use iietlab::numfmt::g17;
use iietlab::partition::{enumerate_addresses, enumerate_dual_orders};
use iietlab::subst::DEFAULT_WORD_CAP;
use iietlab::{Address, Label, PhiConfig, SubstitutionRule, System};

/// Random primitive rules on two or three letters with images of length ≤ 4.
fn primitive_rule() -> impl Strategy<Value = SubstitutionRule> {
    (2usize..=3)
        .prop_flat_map(|s| prop::collection::vec(prop::collection::vec(0..s, 1..=4), s))
        .prop_filter_map("not primitive", |images| {
            let alphabet: Vec<char> = ('A'..).take(images.len()).collect();
            let rule = SubstitutionRule::new(alphabet, images).ok()?;
            System::new(rule.clone(), false).ok().map(|_| rule)
        })
}

/// A rule together with a dual order and initial order drawn from all choices.
fn random_config() -> impl Strategy<Value = PhiConfig> {
    (primitive_rule(), any::<Index>(), any::<Index>()).prop_filter_map(
        "too many dual orders",
        |(rule, di, ii)| {
            let system = System::new(rule.clone(), false).ok()?;
            let (count, duals) = enumerate_dual_orders(&rule, 100_000).ok()?;
            let dual = duals.into_iter().nth(di.index(count as usize))?;
            let mut initial: Vec<usize> = rule.letters().collect();
            let k = ii.index(initial.len());
            initial.rotate_left(k);
            PhiConfig::new(system, Some(initial), Some(dual)).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vershik_matches_shift_oracle(rule in primitive_rule(), n in 1usize..=4) {
        for p in enumerate_addresses(&rule, n, 100_000).unwrap() {
            if first_increasable(&rule, &p).is_none() {
                prop_assert!(vershik(&rule, &p).is_err());
                continue;
            }
            let v = vershik(&rule, &p).unwrap();
            let o = shift_oracle(&rule, &p, DEFAULT_WORD_CAP).unwrap();
            prop_assert_eq!(v, o);
        }
    }

    #[test]
    fn level_intervals_tile_unit_interval(c in random_config(), n in 1usize..=4) {
        let mut ivs = c.intervals(n, 100_000).unwrap();
        ivs.sort_by(|a, b| a.left.total_cmp(&b.left));
        prop_assert!(ivs[0].left.abs() < 1e-12);
        for w in ivs.windows(2) {
            prop_assert!((w[0].right() - w[1].left).abs() < 1e-12);
        }
        prop_assert!((ivs.last().unwrap().right() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn children_nest_and_fill_parent(c in random_config(), n in 1usize..=3) {
        let rule = c.rule().clone();
        for p in enumerate_addresses(&rule, n, 100_000).unwrap() {
            let parent = c.interval_of(&p).unwrap();
            let mut total = 0.0;
            for &b in c.children(p.type_letter()) {
                let child = c.interval_of(&p.extended(b)).unwrap();
                prop_assert!(child.left >= parent.left - 1e-12);
                prop_assert!(child.right() <= parent.right() + 1e-12);
                total += child.length;
            }
            prop_assert!((total - parent.length).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_inverts_phi(c in random_config(), n in 1usize..=4) {
        let rule = c.rule().clone();
        for p in enumerate_addresses(&rule, n, 100_000).unwrap() {
            let iv = c.interval_of(&p).unwrap();
            prop_assert_eq!(c.locate(iv.left + iv.length / 2.0, n), p);
        }
    }

    #[test]
    fn interval_lengths_are_cylinder_measures(c in random_config(), n in 1usize..=4) {
        let rule = c.rule().clone();
        let perron = c.perron().clone();
        for p in enumerate_addresses(&rule, n, 100_000).unwrap() {
            let iv = c.interval_of(&p).unwrap();
            let want = perron.cylinder_measure(p.type_letter(), n);
            prop_assert!((iv.length - want).abs() < 1e-12);
        }
    }

    #[test]
    fn approximants_are_exchanges(c in random_config(), n in 1usize..=8) {
        let f = build_approximant(&c, n);
        prop_assert_eq!(f.len(), approximant_piece_count(c.rule(), n));
        let (dom, ran) = f.tiling_defects();
        prop_assert!(dom < 1e-10 && ran < 1e-10);
    }

    #[test]
    fn exact_step_agrees_with_approximant(c in random_config(), x in 0.0f64..1.0) {
        let f = build_approximant(&c, 10);
        if let Ok(step) = exact_step(&c, x, 10) {
            prop_assert!((step.value - f.evaluate(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn power_matches_iteration(c in random_config(), j in 1u64..=9, xs in prop::collection::vec(0.0f64..1.0, 16)) {
        let f = build_approximant(&c, 6);
        let fj = f.power(j, 1_000_000).unwrap();
        prop_assert!(fj.is_exchange(1e-10));
        for x in xs {
            let mut y = x;
            for _ in 0..j {
                y = f.evaluate(y);
            }
            // Points within rounding of a breakpoint may land on either side.
            let cuts = fj.breakpoints();
            if cuts.iter().any(|&b| (b - x).abs() < 1e-9) {
                continue;
            }
            prop_assert!((fj.evaluate(x) - y).abs() < 1e-9, "x={} j={}", x, j);
        }
    }

    #[test]
    fn address_text_round_trips(c in random_config(), n in 1usize..=4, pick in any::<Index>()) {
        let rule = c.rule().clone();
        let all = enumerate_addresses(&rule, n, 100_000).unwrap();
        let p = &all[pick.index(all.len())];
        prop_assert_eq!(&Address::parse(&rule, &p.display(&rule)).unwrap(), p);
        for &d in p.digits() {
            prop_assert_eq!(Label::parse(&rule, &d.display(&rule)).unwrap(), d);
        }
    }

    #[test]
    fn g17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(g17(x).parse::<f64>().unwrap(), x);
    }
}

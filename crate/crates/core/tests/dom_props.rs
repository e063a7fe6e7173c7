mod common;

use proptest::prelude::*;
use webrelate::dom::{parse_dom_json, to_dom_json, Axis};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let t = common::random_tree(&mut common::rng(seed), 15);
        let back = parse_dom_json(&to_dom_json(&t).to_string()).unwrap();
        prop_assert_eq!(back.nodes.len(), t.nodes.len());
        for (a, b) in t.nodes.iter().zip(&back.nodes) {
            prop_assert_eq!(&a.tag, &b.tag);
            prop_assert_eq!(&a.attrs, &b.attrs);
            prop_assert_eq!(a.parent, b.parent);
            prop_assert_eq!(&a.children, &b.children);
        }
        prop_assert!(t.validate().is_ok());
    }

    #[test]
    fn axes_match_links(seed in any::<u64>()) {
        let t = common::random_tree(&mut common::rng(seed), 15);
        for n in t.all_nodes() {
            for axis in Axis::ALL {
                let got = t.neighbors(n, axis);
                prop_assert_eq!(&got, &common::naive_neighbors(&t, n, axis));
                prop_assert_eq!(t.neighbor_count(n, axis), got.len());
                for (i, &m) in got.iter().enumerate() {
                    prop_assert_eq!(t.neighbor_at(n, axis, i + 1), Some(m));
                    // siblings see each other at the same distance
                    if matches!(axis, Axis::Left | Axis::Right) {
                        prop_assert_eq!(t.neighbor_at(m, axis.inverse(), i + 1), Some(n));
                    }
                }
                prop_assert_eq!(t.neighbor_at(n, axis, 0), None);
            }
        }
    }

    #[test]
    fn text_content_collects_leaves(seed in any::<u64>()) {
        let t = common::random_tree(&mut common::rng(seed), 15);
        let texts: Vec<&str> = t.nodes.iter().filter(|n| n.is_text()).filter_map(|n| n.attr("text")).collect();
        prop_assert_eq!(t.text_content(t.root), texts.join(" "));
    }
}

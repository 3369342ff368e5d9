mod common;

use common::*;
use kbmc::bn::{bn_to_sentences, from_text, sentences_to_bn, to_dot, to_text, BnError, Factor};
use kbmc::logic::Rational;
use kbmc::{parse_kb, pretty_print, BayesNet};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAP: u128 = 1 << 16;

fn refs<'a>(
    query: &'a [String],
    evidence: &'a [(String, String)],
) -> (Vec<&'a str>, Vec<(&'a str, &'a str)>) {
    (
        query.iter().map(String::as_str).collect(),
        evidence
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect(),
    )
}

fn hidden(net: &BayesNet, query: &[&str], evidence: &[(&str, &str)]) -> Vec<String> {
    net.nodes()
        .iter()
        .map(|n| n.name.clone())
        .filter(|n| !query.contains(&n.as_str()) && !evidence.iter().any(|(e, _)| e == n))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn elimination_matches_the_full_joint(seed in any::<u64>(), zeros in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 6, 3, zeros);
        let (q, e) = random_request(&mut rng, &net);
        let (q, e) = refs(&q, &e);
        match (net.eliminate(&q, &e), net.brute_force_query(&q, &e, CAP)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(BnError::ZeroProbabilityEvidence), Err(BnError::ZeroProbabilityEvidence)) => {}
            (a, b) => prop_assert!(false, "elimination {:?} vs brute force {:?}", a, b),
        }
    }

    #[test]
    fn elimination_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 6, 3, false);
        let (q, e) = random_request(&mut rng, &net);
        let (q, e) = refs(&q, &e);
        let mut order = hidden(&net, &q, &e);
        order.shuffle(&mut rng);
        let order: Vec<&str> = order.iter().map(String::as_str).collect();
        prop_assert_eq!(net.eliminate_with_order(&q, &e, &order).unwrap(), net.eliminate(&q, &e).unwrap());
        let partial = &order[..order.len() / 2];
        prop_assert_eq!(net.eliminate_with_order(&q, &e, partial).unwrap(), net.eliminate(&q, &e).unwrap());
    }

    #[test]
    fn joint_is_a_distribution_with_matching_marginals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 5, 3, true);
        let joint = net.joint_brute_force(CAP).unwrap();
        prop_assert_eq!(joint.table.iter().sum::<Rational>(), Rational::one());
        prop_assert!(joint.table.iter().all(|x| *x >= Rational::zero()));
        let cards = &joint.cards;
        for (i, node) in net.nodes().iter().enumerate() {
            let post = net.eliminate(&[node.name.as_str()], &[]).unwrap();
            prop_assert_eq!(&post.evidence_probability, &Rational::one());
            let mut want = vec![Rational::zero(); cards[i]];
            for (a, x) in kbmc::bn::configurations(cards).iter().zip(&joint.table) {
                want[a[i]] += x;
            }
            let got: Vec<Rational> = post.marginal(&node.name).unwrap().into_iter().map(|(_, p)| p).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn evidence_probability_is_a_product_of_conditionals(seed in any::<u64>()) {
        // P(a, b) = P(a) P(b | a) for two evidence nodes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 5, 3, false);
        prop_assume!(net.len() >= 3);
        let n = net.nodes();
        let (a, b, q) = (&n[0], &n[1], &n[2]);
        let (va, vb) = (a.range[0].as_str(), b.range[1].as_str());
        let both = net.eliminate(&[q.name.as_str()], &[(a.name.as_str(), va), (b.name.as_str(), vb)]).unwrap();
        let pa = net.eliminate(&[a.name.as_str()], &[]).unwrap();
        let pb = net.eliminate(&[b.name.as_str()], &[(a.name.as_str(), va)]).unwrap();
        prop_assert_eq!(both.evidence_probability, pa.prob(&[va]).unwrap() * pb.prob(&[vb]).unwrap());
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 7, 4, true);
        let spaced = net.nodes().iter().any(|n| std::iter::once(&n.name).chain(&n.range).any(|t| t.contains(' ')));
        if spaced {
            prop_assert!(to_text(&net).is_err());
            return Ok(());
        }
        let text = to_text(&net).unwrap();
        let back = from_text(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(to_text(&back).unwrap(), text);
    }

    #[test]
    fn sentences_round_trip_through_the_printer(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = if seed % 2 == 0 { random_net(&mut rng, 5, 3, true) } else { random_binary_net(&mut rng, 6) };
        let tr = bn_to_sentences(&net).unwrap();
        let kb = parse_kb(&pretty_print(&tr.kb)).unwrap();
        prop_assert_eq!(&kb, &tr.kb);
        let back = sentences_to_bn(&kb).unwrap();
        prop_assert_eq!(tr.restore(&back).unwrap(), net);
    }

    #[test]
    fn reordering_keeps_the_distribution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 6, 3, false);
        let mut perm: Vec<usize> = (0..net.len()).collect();
        perm.shuffle(&mut rng);
        let other = net.reordered(&perm).unwrap();
        prop_assert_eq!(other.edge_names().len(), net.edge_names().len());
        for n in net.nodes() {
            let name = n.name.as_str();
            prop_assert_eq!(net.eliminate(&[name], &[]).unwrap(), other.eliminate(&[name], &[]).unwrap());
        }
    }
}

#[test]
fn factor_operations_preserve_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let net = random_net(&mut rng, 5, 3, false);
        let mut all = Factor::unit();
        for i in 0..net.len() {
            all = all.product(&Factor::from_cpt(&net, i));
        }
        assert_eq!(all.total(), Rational::one());
        let mut f = all.clone();
        for i in 0..net.len() {
            assert!(f.mentions(i));
            f = f.sum_out(i);
            assert!(!f.mentions(i));
        }
        assert_eq!(f.total(), Rational::one());
        let reduced: Rational = (0..net.nodes()[0].range.len())
            .map(|k| all.reduce(0, k).total())
            .sum();
        assert_eq!(reduced, Rational::one());
    }
}

#[test]
fn dot_lists_every_node_and_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let net = random_net(&mut rng, 6, 3, false);
        let dot = to_dot(&net);
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches(" -> ").count(), net.edges().len());
    }
}

#[test]
fn malformed_text_is_rejected() {
    for bad in [
        "node A : t f\nrow : 1/2 1/2\nend\n",
        "kbmc-bn 1\nnode A : t f\nrow : 1/2 3/5\nend\n",
        "kbmc-bn 1\nnode A : t f\nrow : 1/2 1/2\n",
        "kbmc-bn 1\nnode A : t f\nparents A\nrow t : 1 0\nrow f : 0 1\nend\n",
        "kbmc-bn 1\nnode A : t f\nrow : half 1/2\nend\n",
        "kbmc-bn 1\nnode A : t f\nend\n",
    ] {
        assert!(from_text(bad).is_err(), "{bad}");
    }
}

#[test]
fn contradictory_evidence_has_zero_probability() {
    let net = from_text("kbmc-bn 1\nnode A : t f\nrow : 1/2 1/2\nend\nnode B : t f\nparents A\nrow t : 1 0\nrow f : 0 1\nend\n").unwrap();
    assert_eq!(
        net.eliminate(&["A"], &[("B", "t"), ("B", "f")])
            .unwrap_err(),
        BnError::ZeroProbabilityEvidence
    );
    let certain = net.eliminate(&["A"], &[("B", "t")]).unwrap();
    assert_eq!(certain.prob(&["t"]), Some(&Rational::one()));
    assert_eq!(
        net.eliminate(&["B"], &[("B", "t")]).unwrap_err(),
        BnError::QueryEvidenceOverlap("B".into())
    );
}

use kbmc::eval::{check_sentence, eval_formula, eval_proportion, Assignment, FiniteModel};
use kbmc::logic::{Formula, Proportion, Rational};
use kbmc::parser::parse_formula;
use kbmc::{parse_kb, Sentence, Signature};
use proptest::prelude::*;

const DECLS: &str = "sort S; pred P(S); pred Q(S); pred R(S, S); const a : S;";

fn signature() -> Signature {
    parse_kb(DECLS).unwrap().signature
}

/// Individuals `d0..`, with `a` among them, and random extensions.
#[derive(Clone, Debug)]
struct World {
    n: usize,
    p: Vec<bool>,
    q: Vec<bool>,
    r: Vec<Vec<bool>>,
}

fn world() -> impl Strategy<Value = World> {
    (1usize..=5).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(prop::collection::vec(any::<bool>(), n), n),
        )
            .prop_map(|(n, p, q, r)| World { n, p, q, r })
    })
}

fn name(i: usize) -> String {
    if i == 0 {
        "a".into()
    } else {
        format!("d{i}")
    }
}

fn model(w: &World) -> FiniteModel {
    let mut m = FiniteModel::new(&signature());
    for i in 0..w.n {
        m.add_individual("S", &name(i));
    }
    for i in 0..w.n {
        m.set_pred("P", &[&name(i)], w.p[i]);
        m.set_pred("Q", &[&name(i)], w.q[i]);
        for j in 0..w.n {
            m.set_pred("R", &[&name(i), &name(j)], w.r[i][j]);
        }
    }
    m
}

fn f(text: &str) -> Formula {
    parse_formula(text, &signature()).unwrap()
}

fn prop_of(text: &str) -> Proportion {
    match f(&format!("{text} = 0")) {
        Formula::Compare(kbmc::logic::NumExpr::Prop(p), _, _) => p,
        other => panic!("{other:?}"),
    }
}

proptest! {
    #[test]
    fn conditional_proportion_times_class_size_is_joint_count(w in world()) {
        let m = model(&w);
        let both = (0..w.n).filter(|&i| w.p[i] && w.q[i]).count() as i64;
        let class = (0..w.n).filter(|&i| w.q[i]).count() as i64;
        let got = eval_proportion(&m, &prop_of("[P(x) | Q(x)]_x"), &Assignment::new());
        if class == 0 {
            prop_assert!(got.is_err());
        } else {
            let v = got.unwrap();
            prop_assert!(v >= Rational::from_integer(0.into()) && v <= Rational::from_integer(1.into()));
            prop_assert_eq!(v * Rational::from_integer(class.into()), Rational::from_integer(both.into()));
        }
    }

    #[test]
    fn pair_proportion_counts_pairs(w in world()) {
        let m = model(&w);
        let hits = (0..w.n).flat_map(|i| (0..w.n).map(move |j| (i, j))).filter(|&(i, j)| w.r[i][j] && w.p[j]).count() as i64;
        let got = eval_proportion(&m, &prop_of("[R(x, y) & P(y)]_{x, y}"), &Assignment::new()).unwrap();
        prop_assert_eq!(got, Rational::new(hits.into(), ((w.n * w.n) as i64).into()));
    }

    #[test]
    fn adding_a_joint_witness_never_lowers_the_proportion(w in world(), k in 0usize..5) {
        let k = k % w.n;
        let p = prop_of("[P(x) | Q(x)]_x");
        let mut w2 = w.clone();
        w2.p[k] = true;
        w2.q[k] = true;
        let after = eval_proportion(&model(&w2), &p, &Assignment::new()).unwrap();
        if let Ok(before) = eval_proportion(&model(&w), &p, &Assignment::new()) {
            prop_assert!(after >= before);
        }
    }

    #[test]
    fn forall_checks_every_individual(w in world()) {
        let m = model(&w);
        let every = (0..w.n).all(|i| !w.p[i] || w.q[i]);
        prop_assert_eq!(check_sentence(&m, &Sentence::new(f("all x. P(x) -> Q(x)"))).unwrap(), every);
        let some = (0..w.n).any(|i| w.r[i][i]);
        prop_assert_eq!(check_sentence(&m, &Sentence::new(f("ex x. R(x, x)"))).unwrap(), some);
    }

    #[test]
    fn closed_formulas_ignore_the_assignment(w in world(), j in 0usize..5) {
        let m = model(&w);
        let closed = f("all x. P(x) | ~R(a, x)");
        let mut b = Assignment::new();
        b.insert("x".into(), name(j % w.n));
        prop_assert_eq!(eval_formula(&m, &closed, &b).unwrap(), eval_formula(&m, &closed, &Assignment::new()).unwrap());
        let open = f("R(x, a)");
        prop_assert_eq!(eval_formula(&m, &open, &b).unwrap(), w.r[j % w.n][0]);
    }
}

#![allow(dead_code)]

use kbmc::bn::BayesNet;
use kbmc::cli::{run, Console};
use kbmc::logic::Rational;
use rand::seq::SliceRandom;
use rand::Rng;

pub const EXAMPLE1: &str = include_str!("../../data/example1.kb");
pub const ABDOMINAL: &str = include_str!("../../data/abdominal.kb");
pub const HOLMES: &str = include_str!("../../data/holmes.kb");
pub const HOLMES_JOINT: &str = include_str!("../../data/holmes_joint.kb");
pub const WATSON: &str = include_str!("../../data/watson.kb");
pub const MONITOR: &str = include_str!("../../data/monitor.kb");
pub const HOLMES_FULL: &str = include_str!("../../data/holmes_full.kb");
pub const CONFLICT: &str = include_str!("../../data/conflict.kb");
pub const CYCLE: &str = include_str!("../../data/cycle.kb");
pub const COINS: &str = include_str!("../../data/coins.model");

pub const REQ_E001: &str = include_str!("../../data/e001.req");
pub const REQ_E002: &str = include_str!("../../data/e002_watson.req");
pub const REQ_ALARM_WATSON: &str = include_str!("../../data/e002_alarm_watson.req");
pub const REQ_ALARM_GIBBONS: &str = include_str!("../../data/e002_alarm_gibbons.req");
pub const REQ_INTEREST: &str = include_str!("../../data/e002_interest.req");
pub const REQ_E003: &str = include_str!("../../data/e003_monitor.req");
pub const REQ_E005: &str = include_str!("../../data/e005.req");
pub const REQ_ANN: &str = include_str!("../../data/e1_ann.req");

pub fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Runs the command line on `args` and returns (status, stdout, stderr).
pub fn kbmc(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut c = Console {
        out: &mut out,
        err: &mut err,
        color: false,
    };
    let mut all = vec!["kbmc"];
    all.extend_from_slice(args);
    let code = run(all, &mut c);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn random_row<R: Rng>(rng: &mut R, card: usize, allow_zero: bool) -> Vec<Rational> {
    loop {
        let lo = if allow_zero { 0 } else { 1 };
        let w: Vec<i64> = (0..card).map(|_| rng.gen_range(lo..=9)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w
                .iter()
                .map(|&x| Rational::new(x.into(), total.into()))
                .collect();
        }
    }
}

const NAMES: &[&str] = &[
    "Rain",
    "wet grass",
    "X(1)",
    "3rd",
    "all",
    "e",
    "z1",
    "Sprinkler",
    "a-b",
    "Thing",
];
const VALUES: &[&str] = &[
    "true", "false", "lo", "hi", "0", "1", "e", "z2", "x y", "all",
];

/// A random network (ranges of 2 to `max_card` values) whose node `i` may
/// only have parents among earlier nodes. Names are deliberately awkward.
pub fn random_net<R: Rng>(
    rng: &mut R,
    max_nodes: usize,
    max_card: usize,
    allow_zero: bool,
) -> BayesNet {
    let n = rng.gen_range(1..=max_nodes);
    let mut names: Vec<String> = NAMES.iter().map(|s| s.to_string()).collect();
    names.shuffle(rng);
    let mut net = BayesNet::new();
    let mut ranges: Vec<Vec<String>> = Vec::new();
    for i in 0..n {
        let card = rng.gen_range(2..=max_card.max(2));
        let mut vals: Vec<String> = VALUES.iter().map(|s| s.to_string()).collect();
        vals.shuffle(rng);
        vals.truncate(card);
        let parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.4)).take(3).collect();
        let rows: usize = parents.iter().map(|&p| ranges[p].len()).product();
        let cpt = (0..rows)
            .map(|_| random_row(rng, card, allow_zero))
            .collect();
        let pnames: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
        let vrefs: Vec<&str> = vals.iter().map(String::as_str).collect();
        net.add_node(&names[i], &vrefs, &pnames, cpt).unwrap();
        ranges.push(vals);
    }
    net
}

/// A random network of binary nodes named `N0..`.
pub fn random_binary_net<R: Rng>(rng: &mut R, max_nodes: usize) -> BayesNet {
    let n = rng.gen_range(1..=max_nodes);
    let mut net = BayesNet::new();
    for i in 0..n {
        let parents: Vec<String> = (0..i)
            .filter(|_| rng.gen_bool(0.35))
            .take(4)
            .map(|p| format!("N{p}"))
            .collect();
        let rows = 1 << parents.len();
        let cpt = (0..rows).map(|_| random_row(rng, 2, true)).collect();
        let prefs: Vec<&str> = parents.iter().map(String::as_str).collect();
        net.add_node(&format!("N{i}"), &["t", "f"], &prefs, cpt)
            .unwrap();
    }
    net
}

/// A random query (one or two nodes) and evidence on other nodes.
pub fn random_request<R: Rng>(rng: &mut R, net: &BayesNet) -> (Vec<String>, Vec<(String, String)>) {
    let mut idx: Vec<usize> = (0..net.len()).collect();
    idx.shuffle(rng);
    let q = rng.gen_range(1..=idx.len().min(2));
    let query = idx[..q]
        .iter()
        .map(|&i| net.nodes()[i].name.clone())
        .collect();
    let mut evidence = Vec::new();
    for &i in &idx[q..] {
        if rng.gen_bool(0.4) {
            let n = &net.nodes()[i];
            evidence.push((n.name.clone(), n.range.choose(rng).unwrap().clone()));
        }
    }
    (query, evidence)
}

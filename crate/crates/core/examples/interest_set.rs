//! Widen a query with an interest set; the alarm joins as an intermediate
//! node and noisy-OR combines its two causes.

use kbmc::{build_network, parse_request, KnowledgeBase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kb = KnowledgeBase::parse(include_str!("../data/holmes_full.kb"))?;
    let req = parse_request(include_str!("../data/e002_interest.req"), &kb.signature)?;
    let (net, report) = build_network(&kb, &req)?;
    print!("{report}");

    let ev = [
        ("ReportsAlarm(E002,Watson,MyHouse)", "true"),
        ("RadioReport(E002)", "true"),
    ];
    let post = net.eliminate(&["Burglary(E002,MyHouse)", "Earthquake(E002)"], &ev)?;
    for (node, _) in ev {
        println!("given {node}");
    }
    for var in &post.vars {
        println!("  P({var}) = {}", post.marginal(var).unwrap()[0].1);
    }
    Ok(())
}

//! Chain a report back to a burglary through the alarm.

use kbmc::{build_network, parse_request, KnowledgeBase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kb = KnowledgeBase::parse(include_str!("../data/holmes.kb"))?;
    let req = parse_request(include_str!("../data/e002_watson.req"), &kb.signature)?;
    let (net, report) = build_network(&kb, &req)?;
    print!("{report}");

    let post = net.eliminate(
        &["Burglary(E002,MyHouse)"],
        &[("ReportsAlarm(E002,Watson,MyHouse)", "true")],
    )?;
    for (value, p) in post.marginal("Burglary(E002,MyHouse)").unwrap() {
        println!("Burglary = {value}: {p}");
    }
    Ok(())
}

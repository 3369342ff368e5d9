//! A monitoring company's report links straight to the burglary node, with
//! no alarm node in between.

use kbmc::{build_network, parse_request, KnowledgeBase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kb = KnowledgeBase::parse(include_str!("../data/monitor.kb"))?;
    let req = parse_request(include_str!("../data/e003_monitor.req"), &kb.signature)?;
    let (net, report) = build_network(&kb, &req)?;
    for (p, c) in net.edge_names() {
        println!("{p} -> {c}");
    }
    print!("{report}");
    Ok(())
}

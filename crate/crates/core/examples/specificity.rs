//! Watson's reports use his own false-alarm rate; Gibbons's fall back to the
//! neighbourhood rates.

use kbmc::{build_network, parse_request, KnowledgeBase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kb = KnowledgeBase::parse(include_str!("../data/watson.kb"))?;
    for (who, req) in [
        ("Watson", include_str!("../data/e002_alarm_watson.req")),
        ("Gibbons", include_str!("../data/e002_alarm_gibbons.req")),
    ] {
        let (net, report) = build_network(&kb, &parse_request(req, &kb.signature)?)?;
        let node = format!("ReportsAlarm(E002,{who},MyHouse)");
        let cpt = &net.node(&node).unwrap().cpt;
        println!(
            "{who}: P(report | alarm) = {}, P(report | no alarm) = {}",
            cpt[0][0], cpt[1][0]
        );
        println!("  cites {:?}", report.cited_labels(&node));
    }
    Ok(())
}

//! Pick the pregnancy template for E001 and instantiate it.

use kbmc::bn::to_text;
use kbmc::{build_network, parse_request, KnowledgeBase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kb = KnowledgeBase::parse(include_str!("../data/abdominal.kb"))?;
    let req = parse_request(include_str!("../data/e001.req"), &kb.signature)?;
    let (net, report) = build_network(&kb, &req)?;
    print!("{report}");
    print!("{}", to_text(&net)?);

    let post = net.eliminate(&["Y1(E001)"], &[("Y3(E001)", "yes")])?;
    println!("P(Y1 = yes | Y3 = yes) = {}", post.prob(&["yes"]).unwrap());
    Ok(())
}

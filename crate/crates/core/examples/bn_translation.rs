//! A network as statistical sentences, and back.

use kbmc::bn::{bn_to_sentences, sentences_to_bn};
use kbmc::logic::rational;
use kbmc::{pretty_print, BayesNet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut net = BayesNet::new();
    net.add_node(
        "Rain",
        &["yes", "no"],
        &[],
        vec![vec![rational(1, 5), rational(4, 5)]],
    )?;
    net.add_node(
        "Grass",
        &["wet", "dry"],
        &["Rain"],
        vec![
            vec![rational(9, 10), rational(1, 10)],
            vec![rational(1, 5), rational(4, 5)],
        ],
    )?;

    let tr = bn_to_sentences(&net)?;
    print!("{}", pretty_print(&tr.kb));

    let back = tr.restore(&sentences_to_bn(&tr.kb)?)?;
    println!("round trip equal: {}", back == net);
    Ok(())
}

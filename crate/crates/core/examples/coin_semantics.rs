//! Check the coin sentences in a finite model of 20 coins tossed 20 times.

use kbmc::eval::{check_sentence, eval_proportion, parse_model, Assignment};
use kbmc::logic::{Formula, NumExpr};
use kbmc::parse_kb;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kb = parse_kb(include_str!("../data/example1.kb"))?;
    let model = parse_model(include_str!("../data/coins.model"), &kb.signature)?;
    for st in &kb.statements {
        println!(
            "@{}: {}",
            st.label.as_deref().unwrap_or("?"),
            check_sentence(&model, &st.sentence)?
        );
    }

    // the share of coins that are near-fair
    let nested = &kb.statement("ex1_3").unwrap().sentence.formula;
    if let Formula::Compare(NumExpr::Prop(p), _, _) = nested {
        println!(
            "nested proportion = {}",
            eval_proportion(&model, p, &Assignment::new())?
        );
    }
    Ok(())
}

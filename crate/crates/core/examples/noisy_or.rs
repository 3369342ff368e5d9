//! Complete a CPT from per-cause probabilities with a leaky noisy-OR.

use kbmc::construct::complete_cpt_noisy_or;
use kbmc::logic::{format_rational, rational};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let causes = [rational(3, 4), rational(3, 10)];
    let leak = rational(1, 100);
    let rows = complete_cpt_noisy_or(&causes, &leak)?;
    for (row, label) in rows
        .iter()
        .zip(["burglary, quake", "burglary", "quake", "neither"])
    {
        println!("{label:>16}: P(alarm) = {}", format_rational(&row[0]));
    }
    Ok(())
}

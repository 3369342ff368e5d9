use num_traits::{One, Zero};
use thiserror::Error;

use crate::bn::configurations;
use crate::logic::{format_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoisyOrError {
    #[error("leak {0} must lie in [0, 1)")]
    Leak(String),
    #[error("cause {index} has probability {p}, below the leak {leak}")]
    BelowLeak {
        index: usize,
        p: String,
        leak: String,
    },
}

fn check(per_cause: &[Rational], leak: &Rational) -> Result<(), NoisyOrError> {
    if *leak < Rational::zero() || *leak >= Rational::one() {
        return Err(NoisyOrError::Leak(format_rational(leak)));
    }
    for (index, p) in per_cause.iter().enumerate() {
        if p < leak || *p > Rational::one() {
            return Err(NoisyOrError::BelowLeak {
                index,
                p: format_rational(p),
                leak: format_rational(leak),
            });
        }
    }
    Ok(())
}

/// `P(effect | active causes)` under a leaky noisy-OR, where `per_cause[i]`
/// is the probability of the effect when cause `i` alone is present:
/// `1 - (1 - leak) * Π_active (1 - p_i) / (1 - leak)`.
pub fn noisy_or(
    per_cause: &[Rational],
    leak: &Rational,
    active: &[bool],
) -> Result<Rational, NoisyOrError> {
    check(per_cause, leak)?;
    let one = Rational::one();
    let spare = &one - leak;
    let mut off = spare.clone();
    for (p, &on) in per_cause.iter().zip(active) {
        if on {
            off *= (&one - p) / &spare;
        }
    }
    Ok(one - off)
}

/// Full CPT for a binary effect with binary causes, ranges ordered
/// `[true, false]`. Rows follow parent configurations with the last parent
/// fastest; each row is `[P(true), P(false)]`.
pub fn complete_cpt_noisy_or(
    per_cause: &[Rational],
    leak: &Rational,
) -> Result<Vec<Vec<Rational>>, NoisyOrError> {
    configurations(&vec![2; per_cause.len()])
        .into_iter()
        .map(|c| {
            let active: Vec<bool> = c.iter().map(|&k| k == 0).collect();
            let p = noisy_or(per_cause, leak, &active)?;
            Ok(vec![p.clone(), Rational::one() - p])
        })
        .collect()
}

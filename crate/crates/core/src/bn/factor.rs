use num_traits::{One, Zero};

use super::{configurations, BayesNet};
use crate::logic::Rational;

/// A table over a list of variables, row-major with the last variable
/// fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub table: Vec<Rational>,
}

impl Factor {
    pub fn unit() -> Factor {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            table: vec![Rational::one()],
        }
    }

    /// `P(node | parents)` over `parents ++ [node]`.
    pub fn from_cpt(net: &BayesNet, node: usize) -> Factor {
        let n = &net.nodes()[node];
        let mut vars = n.parents.clone();
        vars.push(node);
        let cards = vars.iter().map(|&v| net.nodes()[v].range.len()).collect();
        let table = n.cpt.iter().flatten().cloned().collect();
        Factor { vars, cards, table }
    }

    fn offset(&self, values: &[usize]) -> usize {
        values
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (v, c)| acc * c + v)
    }

    pub fn get(&self, values: &[usize]) -> &Rational {
        &self.table[self.offset(values)]
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(v) {
                vars.push(*v);
                cards.push(*c);
            }
        }
        let pick = |f: &Factor, assign: &[usize]| -> Vec<usize> {
            f.vars
                .iter()
                .map(|v| assign[vars.iter().position(|x| x == v).unwrap()])
                .collect()
        };
        let table = configurations(&cards)
            .iter()
            .map(|a| self.get(&pick(self, a)) * other.get(&pick(other, a)))
            .collect();
        Factor { vars, cards, table }
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(k) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        cards.remove(k);
        let mut table = vec![Rational::zero(); cards.iter().product()];
        for (a, x) in configurations(&self.cards).iter().zip(&self.table) {
            let mut rest = a.clone();
            rest.remove(k);
            let off = rest.iter().zip(&cards).fold(0, |acc, (v, c)| acc * c + v);
            table[off] += x;
        }
        Factor { vars, cards, table }
    }

    /// Fixes `var` to `value` and drops it.
    pub fn reduce(&self, var: usize, value: usize) -> Factor {
        let Some(k) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        cards.remove(k);
        let table = configurations(&self.cards)
            .iter()
            .zip(&self.table)
            .filter(|(a, _)| a[k] == value)
            .map(|(_, x)| x.clone())
            .collect();
        Factor { vars, cards, table }
    }

    pub fn total(&self) -> Rational {
        self.table.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::rational;

    fn f(vars: &[usize], cards: &[usize], vals: &[(i64, i64)]) -> Factor {
        Factor {
            vars: vars.to_vec(),
            cards: cards.to_vec(),
            table: vals.iter().map(|&(n, d)| rational(n, d)).collect(),
        }
    }

    #[test]
    fn product_then_sum_out() {
        let a = f(&[0], &[2], &[(1, 4), (3, 4)]);
        let b = f(&[0, 1], &[2, 2], &[(1, 2), (1, 2), (1, 3), (2, 3)]);
        let ab = a.product(&b);
        assert_eq!(ab.vars, vec![0, 1]);
        assert_eq!(ab.get(&[1, 1]), &rational(1, 2));
        let m = ab.sum_out(0);
        assert_eq!(
            m.table,
            vec![
                rational(1, 8) + rational(1, 4),
                rational(1, 8) + rational(1, 2)
            ]
        );
        assert_eq!(m.total(), rational(1, 1));
    }

    #[test]
    fn reduce_keeps_matching_rows() {
        let b = f(&[0, 1], &[2, 2], &[(1, 2), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(b.reduce(0, 1).table, vec![rational(1, 3), rational(2, 3)]);
        assert_eq!(b.reduce(1, 0).table, vec![rational(1, 2), rational(1, 3)]);
        assert_eq!(b.reduce(7, 0), b);
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::term::{format_monomial, Monomial, Scalar};
use super::PolyhomSymbol;

/// Behaviour under `ξ ↦ -ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    fn of(m: &Monomial) -> Self {
        if m.alpha.iter().sum::<u32>() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn join(self, o: Parity) -> Parity {
        if self == o {
            self
        } else {
            Parity::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityTerm {
    pub row: usize,
    pub col: usize,
    pub term: String,
    pub degree: i32,
    pub parity: Parity,
    /// Whether the term can be nonzero at `ξ = 0`.
    pub survives: bool,
    /// Symbolic value at `ξ = 0`, e.g. `2·R^-1·f`.
    pub value_at_zero: String,
    /// Numerical value at `ξ = 0`, `R = 1.3`, all scalars `1.7`.
    pub probe_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub terms: Vec<ParityTerm>,
    /// Parity of each degree group, over all entries.
    pub degrees: BTreeMap<i32, Parity>,
    /// Every odd term evaluated to exactly zero at `ξ = 0`.
    pub odd_terms_vanish: bool,
}

impl ParityReport {
    /// Whether every term of the given degree vanishes at `ξ = 0`.
    pub fn degree_vanishes_at_zero(&self, degree: i32) -> bool {
        self.terms
            .iter()
            .filter(|t| t.degree == degree)
            .all(|t| !t.survives)
    }
}

/// Classifies terms under `ξ ↦ -ξ` and evaluates them at `ξ = 0`.
pub fn parity_vanishing_check(sym: &PolyhomSymbol) -> ParityReport {
    let zero = vec![0.0; sym.dim()];
    let probe = |_: &Scalar| Some(1.7);
    let mut degrees: BTreeMap<i32, Parity> = BTreeMap::new();
    let terms: Vec<ParityTerm> = sym
        .terms()
        .map(|(row, col, t)| {
            let parity = Parity::of(&t.monomial);
            degrees
                .entry(t.degree)
                .and_modify(|p| *p = p.join(parity))
                .or_insert(parity);
            let survives = t.monomial.alpha.iter().all(|&a| a == 0);
            let value_at_zero = if survives {
                let mut m = t.monomial.clone();
                // ρ = R at ξ = 0
                m.p += m.k as i32;
                m.k = 0;
                let r_part = match m.p {
                    0 => String::new(),
                    1 => "·R".into(),
                    p => format!("·R^{p}"),
                };
                m.p = 0;
                let rest = format_monomial(&m);
                let rest = if rest == "1" { String::new() } else { format!("·{rest}") };
                format!("{}{r_part}{rest}", t.coeff)
            } else {
                "0".into()
            };
            let probe_value = (t.coeff.to_complex() * t.monomial.eval(&zero, 1.3, &probe).unwrap_or(f64::NAN)).norm();
            ParityTerm {
                row,
                col,
                term: t.display(),
                degree: t.degree,
                parity,
                survives,
                value_at_zero,
                probe_value,
            }
        })
        .collect();
    let odd_terms_vanish = terms
        .iter()
        .filter(|t| t.parity == Parity::Odd)
        .all(|t| t.probe_value == 0.0);
    ParityReport {
        terms,
        degrees,
        odd_terms_vanish,
    }
}

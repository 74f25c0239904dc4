//! Composition algebra: formula parsing, weight/atomic conversion and the
//! helper constructions used to write down compositions the way papers report them.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::elements::Element;
use crate::quantities::Decimal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("empty composition")]
    EmptyFormula,
    #[error("malformed subscript in `{0}`")]
    MalformedSubscript(String),
    #[error("amount for {0} must be positive")]
    NonPositiveWeight(String),
    #[error("additions sum to {0} wt%, leaving no balance")]
    AdditionsExceedBalance(f64),
    #[error("balance element {0} also listed among additions")]
    BalanceElementInAdditions(String),
    #[error("addition fraction must be positive, got {0}")]
    NonPositiveFraction(f64),
    #[error("addition fraction {0} is not a decimal fraction below 1 (pass 0.05 for 5 wt%)")]
    FractionNotDecimal(f64),
}

/// How a composition was written down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Formula,
    AtomicMap,
    WeightDict,
    Balance,
    WeightAddition,
}

/// Atomic fractions keyed by element. Fractions are positive and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    fractions: BTreeMap<Element, f64>,
    provenance: Provenance,
}

impl Composition {
    /// Normalize positive amounts (moles, or any proportional count) into fractions.
    /// Repeated elements accumulate.
    pub fn from_amounts<I>(amounts: I, provenance: Provenance) -> Result<Self, CompositionError>
    where
        I: IntoIterator<Item = (Element, f64)>,
    {
        let mut acc: BTreeMap<Element, f64> = BTreeMap::new();
        for (el, amount) in amounts {
            if !(amount > 0.0 && amount.is_finite()) {
                return Err(CompositionError::NonPositiveWeight(el.symbol().to_string()));
            }
            *acc.entry(el).or_default() += amount;
        }
        if acc.is_empty() {
            return Err(CompositionError::EmptyFormula);
        }
        let total: f64 = acc.values().sum();
        for v in acc.values_mut() {
            *v /= total;
        }
        Ok(Composition {
            fractions: acc,
            provenance,
        })
    }

    pub fn fractions(&self) -> &BTreeMap<Element, f64> {
        &self.fractions
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Atomic fraction of `el`, zero when absent.
    pub fn fraction(&self, el: Element) -> f64 {
        self.fractions.get(&el).copied().unwrap_or(0.0)
    }

    pub fn fraction_of(&self, symbol: &str) -> f64 {
        Element::from_symbol(symbol).map_or(0.0, |e| self.fraction(e))
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.fractions.keys().copied()
    }

    /// Mass of one mole of formula units with these fractions.
    pub fn molar_mass(&self) -> f64 {
        self.fractions.iter().map(|(e, x)| e.molar_mass() * x).sum()
    }

    /// Weight percent of each element.
    pub fn to_weight_dict(&self) -> BTreeMap<Element, f64> {
        let mass = self.molar_mass();
        self.fractions
            .iter()
            .map(|(e, x)| (*e, 100.0 * e.molar_mass() * x / mass))
            .collect()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (e, x) in &self.fractions {
            write!(f, "{}{}", e, x)?;
        }
        Ok(())
    }
}

fn element(symbol: &str) -> Result<Element, CompositionError> {
    Element::from_symbol(symbol).ok_or_else(|| CompositionError::UnknownElement(symbol.to_string()))
}

/// Parse an atomic-ratio formula such as `Al0.5CoCrFeNi`. Subscripts default to 1.
pub fn parse_formula(formula: &str) -> Result<Composition, CompositionError> {
    let chars: Vec<char> = formula.chars().collect();
    let mut amounts = Vec::new();
    let mut i = 0;
    let malformed = || CompositionError::MalformedSubscript(formula.to_string());

    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        if !chars[i].is_ascii_uppercase() {
            if chars[i].is_ascii_digit() || chars[i] == '.' {
                return Err(malformed());
            }
            return Err(CompositionError::UnknownElement(
                chars[i..].iter().collect(),
            ));
        }
        let start = i;
        i += 1;
        while i < chars.len() && chars[i].is_ascii_lowercase() {
            i += 1;
        }
        let symbol: String = chars[start..i].iter().collect();
        let el = element(&symbol)?;

        let num_start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
            i += 1;
        }
        let amount = if num_start == i {
            1.0
        } else {
            let text: String = chars[num_start..i].iter().collect();
            let ok_shape =
                text.matches('.').count() <= 1 && !text.starts_with('.') && !text.ends_with('.');
            let value: f64 = if ok_shape {
                text.parse().map_err(|_| malformed())?
            } else {
                return Err(malformed());
            };
            if value <= 0.0 {
                return Err(malformed());
            }
            value
        };
        amounts.push((el, amount));
    }
    if amounts.is_empty() {
        return Err(CompositionError::EmptyFormula);
    }
    Composition::from_amounts(amounts, Provenance::Formula)
}

fn weights_to_moles<'a, I>(weights: I) -> Result<Vec<(Element, f64)>, CompositionError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    weights
        .into_iter()
        .map(|(symbol, w)| {
            let el = element(symbol)?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(CompositionError::NonPositiveWeight(symbol.to_string()));
            }
            Ok((el, w / el.molar_mass()))
        })
        .collect()
}

/// Composition from weight percentages: the atomic fraction of each element is
/// proportional to its weight divided by its molar mass.
pub fn from_weight_dict<'a, I>(weights: I) -> Result<Composition, CompositionError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let moles = weights_to_moles(weights)?;
    Composition::from_amounts(moles, Provenance::WeightDict)
}

/// Composition from element → atomic amount (percent or fraction; only ratios matter).
pub fn from_atomic_map<'a, I>(amounts: I) -> Result<Composition, CompositionError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let parsed = amounts
        .into_iter()
        .map(|(symbol, x)| Ok((element(symbol)?, x)))
        .collect::<Result<Vec<_>, CompositionError>>()?;
    Composition::from_amounts(parsed, Provenance::AtomicMap)
}

/// Balance notation (`Ti-6Al-4V`): `main` makes up whatever weight percent the
/// additions leave.
pub fn balance_composition<'a, I>(main: &str, additions: I) -> Result<Composition, CompositionError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let main_el = element(main)?;
    let additions: Vec<(&str, f64)> = additions.into_iter().collect();
    if additions.iter().any(|(s, _)| *s == main) {
        return Err(CompositionError::BalanceElementInAdditions(
            main.to_string(),
        ));
    }
    let total: f64 = additions.iter().map(|(_, w)| w).sum();
    if total >= 100.0 {
        return Err(CompositionError::AdditionsExceedBalance(total));
    }
    let mut moles = weights_to_moles(additions)?;
    moles.push((main_el, (100.0 - total) / main_el.molar_mass()));
    Composition::from_amounts(moles, Provenance::Balance)
}

/// Add `addition_wt_frac` of the base alloy's mass as an additive whose element
/// ratio is given by `additions`.
///
/// One mole-unit of the base has mass `M_base`; the additive contributes
/// `addition_wt_frac * M_base` grams, split across its elements by their weight
/// fractions, and converted back to moles before renormalizing.
pub fn with_weight_additions(
    base: &Composition,
    additions: &Composition,
    addition_wt_frac: f64,
) -> Result<Composition, CompositionError> {
    if addition_wt_frac.is_nan() || addition_wt_frac <= 0.0 {
        return Err(CompositionError::NonPositiveFraction(addition_wt_frac));
    }
    if addition_wt_frac >= 1.0 {
        return Err(CompositionError::FractionNotDecimal(addition_wt_frac));
    }
    let base_mass = base.molar_mass();
    let additive_mass = addition_wt_frac * base_mass;
    let mut moles: Vec<(Element, f64)> = base.fractions.iter().map(|(e, x)| (*e, *x)).collect();
    for (el, wt_pct) in additions.to_weight_dict() {
        let mass = additive_mass * wt_pct / 100.0;
        moles.push((el, mass / el.molar_mass()));
    }
    Composition::from_amounts(moles, Provenance::WeightAddition)
}

/// L∞ distance between atomic fractions; absent elements count as zero.
pub fn distance(a: &Composition, b: &Composition) -> f64 {
    let mut d: f64 = 0.0;
    for (e, x) in &a.fractions {
        d = d.max((x - b.fraction(*e)).abs());
    }
    for (e, x) in &b.fractions {
        if !a.fractions.contains_key(e) {
            d = d.max(*x);
        }
    }
    d
}

/// L∞ threshold under which two compositions are treated as the same.
pub const SAME_COMPOSITION_THRESHOLD: f64 = 0.005;

/// A composition exactly as written in an extraction document.
#[derive(Debug, Clone, PartialEq)]
pub enum CompositionInput {
    Formula(String),
    AtomicMap(IndexMap<String, Decimal>),
    WeightDict(IndexMap<String, Decimal>),
    Balance {
        main_element: String,
        additions: IndexMap<String, Decimal>,
    },
    WeightAdditions {
        base: Box<CompositionInput>,
        additions_weights: IndexMap<String, Decimal>,
        fraction: Decimal,
    },
}

fn pairs(map: &IndexMap<String, Decimal>) -> impl Iterator<Item = (&str, f64)> {
    map.iter().map(|(k, v)| (k.as_str(), v.value()))
}

impl CompositionInput {
    pub fn resolve(&self) -> Result<Composition, CompositionError> {
        match self {
            CompositionInput::Formula(f) => parse_formula(f),
            CompositionInput::AtomicMap(m) => from_atomic_map(pairs(m)),
            CompositionInput::WeightDict(m) => from_weight_dict(pairs(m)),
            CompositionInput::Balance {
                main_element,
                additions,
            } => balance_composition(main_element, pairs(additions)),
            CompositionInput::WeightAdditions {
                base,
                additions_weights,
                fraction,
            } => {
                let base = base.resolve()?;
                let additions = from_weight_dict(pairs(additions_weights))?;
                with_weight_additions(&base, &additions, fraction.value())
            }
        }
    }

    /// Sum of the written amounts for inputs whose values are meant to total
    /// 100 (or 1). Formula-style and constructed inputs return `None`.
    pub fn written_total(&self) -> Option<f64> {
        match self {
            CompositionInput::AtomicMap(m) | CompositionInput::WeightDict(m) => {
                Some(m.values().map(Decimal::value).sum())
            }
            _ => None,
        }
    }
}

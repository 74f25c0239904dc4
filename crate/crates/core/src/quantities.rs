//! Numbers, units, physical quantities and qualified values.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantityError {
    #[error("malformed value `{0}`")]
    MalformedValue(String),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("cannot convert {from} ({from_dim}) to {to} ({to_dim})")]
    DimensionMismatch {
        from: &'static str,
        from_dim: Dimension,
        to: &'static str,
        to_dim: Dimension,
    },
}

/// A finite decimal number that remembers the text it was written as.
///
/// Equality compares numeric value, so `50` and `50.0` are equal, but encoding
/// writes back the original digits.
#[derive(Clone)]
pub struct Decimal {
    value: f64,
    repr: String,
}

impl Decimal {
    pub fn from_f64(value: f64) -> Self {
        assert!(value.is_finite(), "decimal must be finite");
        Decimal {
            value,
            repr: format_f64(value),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// The textual form, always valid JSON number syntax.
    pub fn as_str(&self) -> &str {
        &self.repr
    }
}

fn format_f64(v: f64) -> String {
    // Shortest round-trip representation; add ".0" so integers keep float texture.
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// JSON number grammar: `-? (0 | [1-9][0-9]*) (. [0-9]+)? ([eE] [+-]? [0-9]+)?`
fn is_json_number(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if b.get(i) == Some(&b'-') {
        i += 1;
    }
    match b.get(i) {
        Some(b'0') => i += 1,
        Some(c) if c.is_ascii_digit() => {
            while b.get(i).is_some_and(u8::is_ascii_digit) {
                i += 1;
            }
        }
        _ => return false,
    }
    if b.get(i) == Some(&b'.') {
        i += 1;
        let start = i;
        while b.get(i).is_some_and(u8::is_ascii_digit) {
            i += 1;
        }
        if i == start {
            return false;
        }
    }
    if matches!(b.get(i), Some(b'e' | b'E')) {
        i += 1;
        if matches!(b.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        let start = i;
        while b.get(i).is_some_and(u8::is_ascii_digit) {
            i += 1;
        }
        if i == start {
            return false;
        }
    }
    i == b.len()
}

impl FromStr for Decimal {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if !is_json_number(t) {
            return Err(QuantityError::MalformedValue(s.to_string()));
        }
        let value: f64 = t
            .parse()
            .map_err(|_| QuantityError::MalformedValue(s.to_string()))?;
        if !value.is_finite() {
            return Err(QuantityError::MalformedValue(s.to_string()));
        }
        Ok(Decimal {
            value,
            repr: t.to_string(),
        })
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr)
    }
}

impl From<f64> for Decimal {
    fn from(v: f64) -> Self {
        Decimal::from_f64(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Pressure,
    Length,
    Density,
    Fraction,
    Dimensionless,
    Temperature,
    Time,
    Energy,
    Toughness,
    Other,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Pressure => "pressure",
            Dimension::Length => "length",
            Dimension::Density => "density",
            Dimension::Fraction => "fraction",
            Dimension::Dimensionless => "dimensionless",
            Dimension::Temperature => "temperature",
            Dimension::Time => "time",
            Dimension::Energy => "energy",
            Dimension::Toughness => "toughness",
            Dimension::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Debug, PartialEq)]
pub struct UnitDef {
    pub token: &'static str,
    pub dimension: Dimension,
    /// canonical = value * scale + offset
    pub scale: f64,
    pub offset: f64,
}

macro_rules! units {
    ($( $token:literal => $dim:ident, $scale:expr $(, $offset:expr)? ; )+) => {
        static UNITS: &[UnitDef] = &[
            $( UnitDef {
                token: $token,
                dimension: Dimension::$dim,
                scale: $scale,
                offset: units!(@offset $($offset)?),
            }, )+
        ];
    };
    (@offset) => { 0.0 };
    (@offset $o:expr) => { $o };
}

// Canonical units: MPa, m, g/cm^3, percent, K, s, J, MPa*m^0.5.
units! {
    "MegaPascal" => Pressure, 1.0;
    "MPa" => Pressure, 1.0;
    "megapascal" => Pressure, 1.0;
    "GigaPascal" => Pressure, 1000.0;
    "GPa" => Pressure, 1000.0;
    "gigapascal" => Pressure, 1000.0;
    "kPa" => Pressure, 1e-3;
    "Pa" => Pressure, 1e-6;
    "pascal" => Pressure, 1e-6;
    "HV" => Pressure, 9.807;
    "atm" => Pressure, 0.101325;
    "Atm" => Pressure, 0.101325;
    "bar" => Pressure, 0.1;
    "meter" => Length, 1.0;
    "m" => Length, 1.0;
    "cm" => Length, 1e-2;
    "millimeter" => Length, 1e-3;
    "mm" => Length, 1e-3;
    "micrometer" => Length, 1e-6;
    "Micrometer" => Length, 1e-6;
    "um" => Length, 1e-6;
    "nanometer" => Length, 1e-9;
    "Nanometer" => Length, 1e-9;
    "nm" => Length, 1e-9;
    "angstrom" => Length, 1e-10;
    "gram_per_cm3" => Density, 1.0;
    "g/cm3" => Density, 1.0;
    "g/cm^3" => Density, 1.0;
    "kg/m3" => Density, 1e-3;
    "percent" => Fraction, 1.0;
    "%" => Fraction, 1.0;
    "dimensionless" => Dimensionless, 1.0;
    "kelvin" => Temperature, 1.0;
    "Kelvin" => Temperature, 1.0;
    "K" => Temperature, 1.0;
    "celsius" => Temperature, 1.0, 273.15;
    "Celsius" => Temperature, 1.0, 273.15;
    "degC" => Temperature, 1.0, 273.15;
    "second" => Time, 1.0;
    "s" => Time, 1.0;
    "minute" => Time, 60.0;
    "min" => Time, 60.0;
    "hour" => Time, 3600.0;
    "h" => Time, 3600.0;
    "day" => Time, 86400.0;
    "joule" => Energy, 1.0;
    "J" => Energy, 1.0;
    "kJ" => Energy, 1000.0;
    "MPa*m^0.5" => Toughness, 1.0;
    "MPa m^0.5" => Toughness, 1.0;
    "MPa·m^0.5" => Toughness, 1.0;
}

/// A registered unit token. Two units are equal when their tokens are equal;
/// use [`Unit::same_dimension`] and conversion to compare across aliases.
#[derive(Clone, Copy)]
pub struct Unit(&'static UnitDef);

impl Unit {
    pub fn lookup(token: &str) -> Result<Unit, QuantityError> {
        UNITS
            .iter()
            .find(|u| u.token == token)
            .map(Unit)
            .ok_or_else(|| QuantityError::UnknownUnit(token.to_string()))
    }

    pub fn all() -> impl Iterator<Item = Unit> {
        UNITS.iter().map(Unit)
    }

    pub fn token(self) -> &'static str {
        self.0.token
    }

    pub fn dimension(self) -> Dimension {
        self.0.dimension
    }

    pub fn def(self) -> &'static UnitDef {
        self.0
    }

    pub fn same_dimension(self, other: Unit) -> bool {
        self.0.dimension == other.0.dimension
    }

    pub fn to_canonical(self, value: f64) -> f64 {
        value * self.0.scale + self.0.offset
    }

    pub fn from_canonical(self, value: f64) -> f64 {
        (value - self.0.offset) / self.0.scale
    }

    /// Convert a difference (e.g. an uncertainty) into the canonical unit: no offset.
    pub fn scale_to_canonical(self, delta: f64) -> f64 {
        delta * self.0.scale
    }
}

impl PartialEq for Unit {
    fn eq(&self, other: &Self) -> bool {
        self.0.token == other.0.token
    }
}

impl Eq for Unit {}

impl fmt::Debug for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Unit({})", self.0.token)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.token)
    }
}

impl FromStr for Unit {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::lookup(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: Decimal,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: impl Into<Decimal>, unit: Unit) -> Self {
        Quantity {
            value: value.into(),
            unit,
        }
    }

    pub fn canonical_value(&self) -> f64 {
        self.unit.to_canonical(self.value.value())
    }

    pub fn convert(&self, target: Unit) -> Result<Quantity, QuantityError> {
        convert(self, target)
    }

    /// Same dimension and canonical magnitudes equal within `rel_tol`.
    pub fn approx_eq(&self, other: &Quantity, rel_tol: f64) -> bool {
        self.unit.same_dimension(other.unit)
            && rel_close(self.canonical_value(), other.canonical_value(), rel_tol)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

pub fn convert(q: &Quantity, target: Unit) -> Result<Quantity, QuantityError> {
    if !q.unit.same_dimension(target) {
        return Err(QuantityError::DimensionMismatch {
            from: q.unit.token(),
            from_dim: q.unit.dimension(),
            to: target.token(),
            to_dim: target.dimension(),
        });
    }
    if q.unit == target {
        return Ok(q.clone());
    }
    let canonical = q.unit.to_canonical(q.value.value());
    Ok(Quantity {
        value: Decimal::from_f64(target.from_canonical(canonical)),
        unit: target,
    })
}

/// `|a - b| <= rel_tol * max(|a|, |b|)`.
pub fn rel_close(a: f64, b: f64, rel_tol: f64) -> bool {
    a == b || (a - b).abs() <= rel_tol * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueQualifier {
    Exact,
    Approx,
    Gt,
    Lt,
    Ge,
    Le,
    MuchGt,
    MuchLt,
}

impl ValueQualifier {
    pub const ALL: &'static [ValueQualifier] = &[
        ValueQualifier::Exact,
        ValueQualifier::Approx,
        ValueQualifier::Gt,
        ValueQualifier::Lt,
        ValueQualifier::Ge,
        ValueQualifier::Le,
        ValueQualifier::MuchGt,
        ValueQualifier::MuchLt,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            ValueQualifier::Exact => "",
            ValueQualifier::Approx => "~",
            ValueQualifier::Gt => ">",
            ValueQualifier::Lt => "<",
            ValueQualifier::Ge => ">=",
            ValueQualifier::Le => "<=",
            ValueQualifier::MuchGt => ">>",
            ValueQualifier::MuchLt => "<<",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualifiedValue {
    pub qualifier: ValueQualifier,
    pub magnitude: Decimal,
}

impl QualifiedValue {
    pub fn exact(magnitude: impl Into<Decimal>) -> Self {
        QualifiedValue {
            qualifier: ValueQualifier::Exact,
            magnitude: magnitude.into(),
        }
    }

    pub fn new(qualifier: ValueQualifier, magnitude: impl Into<Decimal>) -> Self {
        QualifiedValue {
            qualifier,
            magnitude: magnitude.into(),
        }
    }
}

impl fmt::Display for QualifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.qualifier.prefix(), self.magnitude)
    }
}

impl FromStr for QualifiedValue {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_qualified(s)
    }
}

/// Parse `"~50"`, `">=50"`, `"<<0.1"` or a bare number. Two-character prefixes
/// are tried before one-character ones.
pub fn parse_qualified(token: &str) -> Result<QualifiedValue, QuantityError> {
    const ORDER: [ValueQualifier; 7] = [
        ValueQualifier::Ge,
        ValueQualifier::Le,
        ValueQualifier::MuchGt,
        ValueQualifier::MuchLt,
        ValueQualifier::Approx,
        ValueQualifier::Gt,
        ValueQualifier::Lt,
    ];
    let t = token.trim();
    let (qualifier, rest) = ORDER
        .iter()
        .find_map(|&q| t.strip_prefix(q.prefix()).map(|rest| (q, rest)))
        .unwrap_or((ValueQualifier::Exact, t));
    let magnitude = rest
        .trim()
        .parse::<Decimal>()
        .map_err(|_| QuantityError::MalformedValue(token.to_string()))?;
    Ok(QualifiedValue {
        qualifier,
        magnitude,
    })
}

/// Core-value equality used by scoring. Qualifiers are deliberately ignored.
pub fn values_match(a: (&QualifiedValue, Unit), b: (&QualifiedValue, Unit), rel_tol: f64) -> bool {
    let (va, ua) = a;
    let (vb, ub) = b;
    ua.same_dimension(ub)
        && rel_close(
            ua.to_canonical(va.magnitude.value()),
            ub.to_canonical(vb.magnitude.value()),
            rel_tol,
        )
}

pub const DEFAULT_REL_TOL: f64 = 1e-6;

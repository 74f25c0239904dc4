//! Canonical categorical vocabularies.
//!
//! Every categorical field in an extraction document is drawn from one of the
//! closed, flat enumerations below. Tokens are matched case-sensitively and
//! render back to exactly the token they were parsed from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("`{token}` is not a member of {family}")]
    UnknownMember { family: EnumFamily, token: String },
    #[error("unknown enum family `{0}`")]
    UnknownFamily(String),
}

macro_rules! canonical_enum {
    (
        $(#[$meta:meta])*
        $name:ident : $family:ident {
            $( $variant:ident => $token:literal ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $( $variant ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[ $( $name::$variant ),+ ];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( $name::$variant => $token ),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = OntologyError;

            fn from_str(token: &str) -> Result<Self, Self::Err> {
                match token {
                    $( $token => Ok($name::$variant), )+
                    _ => Err(OntologyError::UnknownMember {
                        family: EnumFamily::$family,
                        token: token.to_string(),
                    }),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let token = String::deserialize(d)?;
                token.parse().map_err(serde::de::Error::custom)
            }
        }

        impl From<$name> for CanonicalValue {
            fn from(v: $name) -> Self {
                CanonicalValue::$family(v)
            }
        }
    };
}

canonical_enum! {
    /// Material-level property kinds.
    AlloyMeasurementKind: AlloyMeasurementKind {
        VickersHardness => "vickers_hardness",
        BerkovichHardness => "berkovich_hardness",
        PughDuctilityRatio => "pugh_ductility_ratio",
        Density => "density",
        YieldStrengthTension => "yield_strength_tension",
        UltimateStrainTension => "ultimate_strain_tension",
        UltimateTensileStrength => "ultimate_tensile_strength",
        FractureStrainTension => "fracture_strain_tension",
        FractureStrengthTension => "fracture_strength_tension",
        StrainHardeningExponentTension => "strain_hardening_exponent_tension",
        PoissonsRatioTension => "poissons_ratio_tension",
        FractureEnergyTension => "fracture_energy_tension",
        TrueStressTension => "true_stress_tension",
        YieldStrengthCompression => "yield_strength_compression",
        UltimateStrainCompression => "ultimate_strain_compression",
        UltimateCompressiveStrength => "ultimate_compressive_strength",
        FractureStrainCompression => "fracture_strain_compression",
        FractureStrengthCompression => "fracture_strength_compression",
        StrainHardeningExponentCompression => "strain_hardening_exponent_compression",
        PoissonsRatioCompression => "poissons_ratio_compression",
        FractureEnergyCompression => "fracture_energy_compression",
        TrueStressCompression => "true_stress_compression",
        ElasticLimitCompression => "elastic_limit_compression",
        ElasticLimitTension => "elastic_limit_tension",
        YoungsModulus => "youngs_modulus",
        FractureToughness => "fracture_toughness",
        WorkOfFracture => "work_of_fracture",
        CrystalliteSize => "crystallite_size",
        LatticeStrain => "lattice_strain",
        MeltingPoint => "melting_point",
        Solidus => "solidus",
        Liquidus => "liquidus",
    }
}

canonical_enum! {
    /// Kinds measured on a microstructural feature rather than the bulk.
    PhaseMeasurementKind: PhaseMeasurementKind {
        VolumeFraction => "volume_fraction",
        Length => "length",
        GrainSize => "grain_size",
        PhaseSize => "phase_size",
    }
}

canonical_enum! {
    ProcessKind: ProcessKind {
        Mixing => "Mixing",
        MechanicalAlloying => "MechanicalAlloying",
        PlanetaryMilling => "PlanetaryMilling",
        GasAtomization => "GasAtomization",
        ArcMelting => "ArcMelting",
        InductionMelting => "InductionMelting",
        CastingUnspecified => "CastingUnspecified",
        AsCast => "AsCast",
        GravityCasting => "GravityCasting",
        DropCasting => "DropCasting",
        SuctionCasting => "SuctionCasting",
        DirectionalSolidification => "DirectionalSolidification",
        SparkPlasmaSintering => "SparkPlasmaSintering",
        HotPressingSintering => "HotPressingSintering",
        VacuumFurnace => "VacuumFurnace",
        Homogenization => "Homogenization",
        Annealing => "Annealing",
        NonIsothermalAnnealing => "NonIsothermalAnnealing",
        IsothermalHolding => "IsothermalHolding",
        WaterQuenching => "WaterQuenching",
        SolutionHeatTreatment => "SolutionHeatTreatment",
        HotExtrusion => "HotExtrusion",
        HotRolling => "HotRolling",
        ColdRolling => "ColdRolling",
        CrossRolling => "CrossRolling",
        ColdForging => "ColdForging",
        Press => "Press",
        FrictionStirProcessing => "FrictionStirProcessing",
        ElectricalDischargeMachining => "ElectricalDischargeMachining",
        Cut => "Cut",
        Grinding => "Grinding",
        Polishing => "Polishing",
        Etching => "Etching",
        AquaRegia => "AquaRegia",
        SandBlasting => "SandBlasting",
        Degreased => "Degreased",
        UltrasonicBath => "UltrasonicBath",
        AirDrying => "AirDrying",
    }
}

impl ProcessKind {
    pub fn is_melting(self) -> bool {
        matches!(
            self,
            ProcessKind::ArcMelting | ProcessKind::InductionMelting
        )
    }

    pub fn is_casting(self) -> bool {
        matches!(
            self,
            ProcessKind::CastingUnspecified
                | ProcessKind::AsCast
                | ProcessKind::GravityCasting
                | ProcessKind::DropCasting
                | ProcessKind::SuctionCasting
                | ProcessKind::DirectionalSolidification
        )
    }
}

canonical_enum! {
    CrysStruct: CrysStruct {
        Fcc => "FCC",
        Bcc => "BCC",
        Hcp => "HCP",
        Dhcp => "DHCP",
        Diamond => "Diamond",
        L12 => "L12",
        L10 => "L10",
        B2 => "B2",
        D019 => "D019",
        D03 => "D03",
        Heusler => "Heusler",
        Rocksalt => "Rocksalt",
        Zincblende => "Zincblende",
        C14 => "C14",
        C15 => "C15",
        Perovskite => "Perovskite",
        Amorphous => "Amorphous",
        Unknown => "Unknown",
    }
}

canonical_enum! {
    ConfigTag: ConfigTag {
        Dendrite => "Dendrite",
        Interdendritic => "Interdendritic",
        Equiaxed => "Equiaxed",
        Columnar => "Columnar",
        Eutectic => "Eutectic",
        Coring => "Coring",
        Lath => "Lath",
        Martensite => "Martensite",
        Acicular => "Acicular",
        Lamellar => "Lamellar",
        Widmanstatten => "Widmanstatten",
        Matrix => "Matrix",
        Precipitate => "Precipitate",
        Intragranular => "Intragranular",
        Intergranular => "Intergranular",
        Segregation => "Segregation",
        Twin => "Twin",
        Subgrain => "Subgrain",
        Structure => "Structure",
        Unknown => "Unknown",
    }
}

canonical_enum! {
    RawMaterialKind: RawMaterialKind {
        Ingot => "Ingot",
        Powder => "Powder",
        Plate => "Plate",
        Unspecified => "Unspecified",
        Other => "Other",
    }
}

canonical_enum! {
    MeasurementMethod: MeasurementMethod {
        Xrd => "XRD",
        Dsc => "DSC",
        TensileTest => "TensileTest",
        CompressionTest => "CompressionTest",
        VickersHardnessTest => "VickersHardnessTest",
        NanoindentTest => "NanoindentTest",
        ArchimedesMethod => "ArchimedesMethod",
        OpticalMicroscope => "OpticalMicroscope",
        Sem => "SEM",
        Tem => "TEM",
        Stem => "STEM",
        Ebsd => "EBSD",
        UniversalTestingMachine => "UniversalTestingMachine",
        ResonanceUltrasoundSpectroscopy => "ResonanceUltrasoundSpectroscopy",
        FractureToughnessTest => "FractureToughnessTest",
        Balance => "Balance",
        Eds => "EDS",
        TemEds => "TEM_EDS",
        Wds => "WDS",
        Epma => "EPMA",
        Libs => "LIBS",
        EdXrf => "ED_XRF",
        WdXrf => "WD_XRF",
        SparkOes => "Spark_OES",
        IcpOes => "ICP_OES",
        IcpMs => "ICP_MS",
        Unspecified => "Unspecified",
    }
}

canonical_enum! {
    MeasurementStatistic: MeasurementStatistic {
        Mean => "mean",
        Median => "median",
        Lower => "lower",
        Upper => "upper",
        Percentile => "percentile",
    }
}

/// Names of the enumerations, used for error reporting and `parse_enum`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnumFamily {
    AlloyMeasurementKind,
    PhaseMeasurementKind,
    ProcessKind,
    CrysStruct,
    ConfigTag,
    RawMaterialKind,
    MeasurementMethod,
    MeasurementStatistic,
}

impl EnumFamily {
    pub const ALL: &'static [EnumFamily] = &[
        EnumFamily::AlloyMeasurementKind,
        EnumFamily::PhaseMeasurementKind,
        EnumFamily::ProcessKind,
        EnumFamily::CrysStruct,
        EnumFamily::ConfigTag,
        EnumFamily::RawMaterialKind,
        EnumFamily::MeasurementMethod,
        EnumFamily::MeasurementStatistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnumFamily::AlloyMeasurementKind => "AlloyMeasurementKind",
            EnumFamily::PhaseMeasurementKind => "PhaseMeasurementKind",
            EnumFamily::ProcessKind => "ProcessKind",
            EnumFamily::CrysStruct => "CrysStruct",
            EnumFamily::ConfigTag => "ConfigTag",
            EnumFamily::RawMaterialKind => "RawMaterialKind",
            EnumFamily::MeasurementMethod => "MeasurementMethod",
            EnumFamily::MeasurementStatistic => "MeasurementStatistic",
        }
    }

    /// Every member of this family, in declaration order.
    pub fn members(self) -> Vec<CanonicalValue> {
        fn all<T: Copy + Into<CanonicalValue>>(xs: &[T]) -> Vec<CanonicalValue> {
            xs.iter().map(|&x| x.into()).collect()
        }
        match self {
            EnumFamily::AlloyMeasurementKind => all(AlloyMeasurementKind::ALL),
            EnumFamily::PhaseMeasurementKind => all(PhaseMeasurementKind::ALL),
            EnumFamily::ProcessKind => all(ProcessKind::ALL),
            EnumFamily::CrysStruct => all(CrysStruct::ALL),
            EnumFamily::ConfigTag => all(ConfigTag::ALL),
            EnumFamily::RawMaterialKind => all(RawMaterialKind::ALL),
            EnumFamily::MeasurementMethod => all(MeasurementMethod::ALL),
            EnumFamily::MeasurementStatistic => all(MeasurementStatistic::ALL),
        }
    }
}

impl fmt::Display for EnumFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnumFamily {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnumFamily::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| OntologyError::UnknownFamily(s.to_string()))
    }
}

/// A member of any canonical enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalValue {
    AlloyMeasurementKind(AlloyMeasurementKind),
    PhaseMeasurementKind(PhaseMeasurementKind),
    ProcessKind(ProcessKind),
    CrysStruct(CrysStruct),
    ConfigTag(ConfigTag),
    RawMaterialKind(RawMaterialKind),
    MeasurementMethod(MeasurementMethod),
    MeasurementStatistic(MeasurementStatistic),
}

impl CanonicalValue {
    pub fn family(&self) -> EnumFamily {
        match self {
            CanonicalValue::AlloyMeasurementKind(_) => EnumFamily::AlloyMeasurementKind,
            CanonicalValue::PhaseMeasurementKind(_) => EnumFamily::PhaseMeasurementKind,
            CanonicalValue::ProcessKind(_) => EnumFamily::ProcessKind,
            CanonicalValue::CrysStruct(_) => EnumFamily::CrysStruct,
            CanonicalValue::ConfigTag(_) => EnumFamily::ConfigTag,
            CanonicalValue::RawMaterialKind(_) => EnumFamily::RawMaterialKind,
            CanonicalValue::MeasurementMethod(_) => EnumFamily::MeasurementMethod,
            CanonicalValue::MeasurementStatistic(_) => EnumFamily::MeasurementStatistic,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CanonicalValue::AlloyMeasurementKind(v) => v.as_str(),
            CanonicalValue::PhaseMeasurementKind(v) => v.as_str(),
            CanonicalValue::ProcessKind(v) => v.as_str(),
            CanonicalValue::CrysStruct(v) => v.as_str(),
            CanonicalValue::ConfigTag(v) => v.as_str(),
            CanonicalValue::RawMaterialKind(v) => v.as_str(),
            CanonicalValue::MeasurementMethod(v) => v.as_str(),
            CanonicalValue::MeasurementStatistic(v) => v.as_str(),
        }
    }

    /// Resolve a token against several families, first match wins.
    pub fn parse_any(token: &str, families: &[EnumFamily]) -> Option<CanonicalValue> {
        families.iter().find_map(|&f| parse_enum(f, token).ok())
    }
}

impl fmt::Display for CanonicalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Look up `token` in the named enumeration. Matching is exact and case-sensitive.
pub fn parse_enum(family: EnumFamily, token: &str) -> Result<CanonicalValue, OntologyError> {
    Ok(match family {
        EnumFamily::AlloyMeasurementKind => token.parse::<AlloyMeasurementKind>()?.into(),
        EnumFamily::PhaseMeasurementKind => token.parse::<PhaseMeasurementKind>()?.into(),
        EnumFamily::ProcessKind => token.parse::<ProcessKind>()?.into(),
        EnumFamily::CrysStruct => token.parse::<CrysStruct>()?.into(),
        EnumFamily::ConfigTag => token.parse::<ConfigTag>()?.into(),
        EnumFamily::RawMaterialKind => token.parse::<RawMaterialKind>()?.into(),
        EnumFamily::MeasurementMethod => token.parse::<MeasurementMethod>()?.into(),
        EnumFamily::MeasurementStatistic => token.parse::<MeasurementStatistic>()?.into(),
    })
}

/// One entry of the terminology audit trail: the paper called `canonical` by `paper_term`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationRecord {
    pub canonical: CanonicalValue,
    pub paper_term: String,
    pub source: Option<String>,
    /// The paper term is already the canonical rendering; the call documents nothing.
    pub redundant: bool,
}

/// Record that the paper's `paper_term` denotes `canonical`. The value itself is
/// returned unchanged.
pub fn normalize<V: Into<CanonicalValue> + Copy>(
    canonical: V,
    paper_term: &str,
    source: Option<&str>,
) -> (V, NormalizationRecord) {
    let value: CanonicalValue = canonical.into();
    let record = NormalizationRecord {
        canonical: value,
        paper_term: paper_term.to_string(),
        source: source.map(str::to_string),
        redundant: paper_term == value.as_str(),
    };
    (canonical, record)
}

/// Append-only collection of normalization records for one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditTrail {
    records: Vec<NormalizationRecord>,
}

impl AuditTrail {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn normalize<V: Into<CanonicalValue> + Copy>(
        &mut self,
        canonical: V,
        paper_term: &str,
        source: Option<&str>,
    ) -> V {
        let (v, record) = normalize(canonical, paper_term, source);
        self.records.push(record);
        v
    }

    pub fn push(&mut self, record: NormalizationRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[NormalizationRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn redundant(&self) -> impl Iterator<Item = &NormalizationRecord> {
        self.records.iter().filter(|r| r.redundant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_enum(EnumFamily::ProcessKind, "ArcMelting").unwrap(),
            CanonicalValue::ProcessKind(ProcessKind::ArcMelting)
        );
        assert_eq!(
            parse_enum(EnumFamily::CrysStruct, "FCC").unwrap(),
            CanonicalValue::CrysStruct(CrysStruct::Fcc)
        );
        assert_eq!(
            parse_enum(EnumFamily::AlloyMeasurementKind, "hardness"),
            Err(OntologyError::UnknownMember {
                family: EnumFamily::AlloyMeasurementKind,
                token: "hardness".into()
            })
        );
    }

    #[test]
    fn matching_is_case_sensitive() {
        assert!(parse_enum(EnumFamily::CrysStruct, "fcc").is_err());
        assert!(parse_enum(EnumFamily::ProcessKind, "arcmelting").is_err());
        assert!(parse_enum(EnumFamily::MeasurementStatistic, "Mean").is_err());
    }

    #[test]
    fn member_counts_match_vocabulary() {
        assert_eq!(AlloyMeasurementKind::ALL.len(), 32);
        assert_eq!(PhaseMeasurementKind::ALL.len(), 4);
        assert_eq!(ProcessKind::ALL.len(), 38);
        assert_eq!(CrysStruct::ALL.len(), 18);
        assert_eq!(ConfigTag::ALL.len(), 20);
        assert_eq!(RawMaterialKind::ALL.len(), 5);
        assert_eq!(MeasurementMethod::ALL.len(), 27);
        assert_eq!(MeasurementStatistic::ALL.len(), 5);
    }

    #[test]
    fn every_member_round_trips() {
        for &family in EnumFamily::ALL {
            for member in family.members() {
                assert_eq!(member.family(), family);
                assert_eq!(parse_enum(family, member.as_str()).unwrap(), member);
            }
        }
    }

    #[test]
    fn melting_and_casting_are_disjoint() {
        let melting: Vec<_> = ProcessKind::ALL.iter().filter(|k| k.is_melting()).collect();
        let casting: Vec<_> = ProcessKind::ALL.iter().filter(|k| k.is_casting()).collect();
        assert_eq!(melting.len(), 2);
        assert_eq!(casting.len(), 6);
        for k in ProcessKind::ALL {
            assert!(!(k.is_melting() && k.is_casting()), "{k}");
        }
    }

    #[test]
    fn normalize_returns_value_unchanged() {
        let (v, rec) = normalize(
            AlloyMeasurementKind::YieldStrengthCompression,
            "Yield Strength",
            None,
        );
        assert_eq!(v, AlloyMeasurementKind::YieldStrengthCompression);
        assert_eq!(rec.paper_term, "Yield Strength");
        assert!(!rec.redundant);

        let mut trail = AuditTrail::new();
        let k = trail.normalize(
            ProcessKind::ArcMelting,
            "Vacuum Arc Melting",
            Some("Sec. 2"),
        );
        assert_eq!(k, ProcessKind::ArcMelting);
        let fcc = trail.normalize(CrysStruct::Fcc, "FCC", None);
        assert_eq!(fcc, CrysStruct::Fcc);
        assert_eq!(trail.records().len(), 2);
        assert_eq!(trail.records()[0].source.as_deref(), Some("Sec. 2"));
        assert_eq!(trail.redundant().count(), 1);
    }

    #[test]
    fn serde_uses_tokens() {
        let json = serde_json::to_string(&MeasurementMethod::TemEds).unwrap();
        assert_eq!(json, "\"TEM_EDS\"");
        let back: MeasurementMethod = serde_json::from_str(&json).unwrap();
        assert_eq!(back, MeasurementMethod::TemEds);
        assert!(serde_json::from_str::<MeasurementMethod>("\"tem_eds\"").is_err());
    }
}

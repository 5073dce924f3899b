//! The closed DeFi intent label universe.
//!
//! Twenty-one secondary codes (`A1`..`A21`) grouped under eight axial
//! categories (`B1`..`B8`) and three core categories. The table is compiled
//! into the binary; [`Taxonomy::from_json`] exists as an override hook for
//! relabelled taxonomies but nothing loads one unless configured to.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown intent label {0:?}")]
    UnknownIntent(String),
    #[error("invalid taxonomy definition: {0}")]
    InvalidDefinition(String),
}

macro_rules! intent_codes {
    ($($variant:ident),+ $(,)?) => {
        /// Secondary intent code.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum IntentCode { $($variant),+ }

        impl IntentCode {
            pub const ALL: [IntentCode; 21] = [$(IntentCode::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $(IntentCode::$variant => stringify!($variant)),+ }
            }
        }
    };
}

intent_codes!(
    A1, A2, A3, A4, A5, A6, A7, A8, A9, A10, A11, A12, A13, A14, A15, A16, A17, A18, A19, A20, A21
);

impl IntentCode {
    /// 1-based ordinal, `A7` -> 7.
    pub fn ordinal(self) -> usize {
        self as usize + 1
    }

    fn from_code_str(text: &str) -> Option<Self> {
        let digits = text.strip_prefix(['A', 'a'])?;
        if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let n: usize = digits.parse().ok()?;
        (1..=21).contains(&n).then(|| Self::ALL[n - 1])
    }
}

impl fmt::Display for IntentCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntentCode {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_code_str(s.trim()).ok_or_else(|| TaxonomyError::UnknownIntent(s.to_string()))
    }
}

impl Serialize for IntentCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for IntentCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AxialCategory {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
}

impl AxialCategory {
    pub const ALL: [AxialCategory; 8] = [
        Self::B1,
        Self::B2,
        Self::B3,
        Self::B4,
        Self::B5,
        Self::B6,
        Self::B7,
        Self::B8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::B1 => "Trading Strategies",
            Self::B2 => "Liquidity Mining and Yield Farming",
            Self::B3 => "Staking",
            Self::B4 => "Early Project Participation",
            Self::B5 => "Asset Security Assurance",
            Self::B6 => "Investment Risk Management",
            Self::B7 => "Direct Governance",
            Self::B8 => "Indirect Governance",
        }
    }

    pub fn core(self) -> CoreCategory {
        match self {
            Self::B1 | Self::B2 | Self::B3 | Self::B4 => CoreCategory::ProfitSeeking,
            Self::B5 | Self::B6 => CoreCategory::RiskControl,
            Self::B7 | Self::B8 => CoreCategory::Governance,
        }
    }
}

impl fmt::Display for AxialCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}", self, self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CoreCategory {
    ProfitSeeking,
    RiskControl,
    Governance,
}

impl CoreCategory {
    pub fn name(self) -> &'static str {
        match self {
            Self::ProfitSeeking => "Investment or Speculative Profit-seeking",
            Self::RiskControl => "Personal Risk Control and Management",
            Self::Governance => "Project Participation and Ecosystem Governance",
        }
    }
}

impl fmt::Display for CoreCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentLabel {
    pub code: IntentCode,
    pub name: String,
    pub axial: AxialCategory,
    pub core: CoreCategory,
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.code, self.name)
    }
}

const BUILTIN: [(IntentCode, &str, AxialCategory); 21] = {
    use AxialCategory::*;
    use IntentCode::*;
    [
        (A1, "Spot Trading Profit", B1),
        (A2, "Leveraged Trading Profit", B1),
        (A3, "Long-term Holding", B1),
        (A4, "Arbitrage", B1),
        (A5, "Provide/Create Liquidity Pool", B2),
        (A6, "Participating in Lending", B2),
        (A7, "Yield Aggregation", B2),
        (A8, "ETH Liquid Staking", B3),
        (A9, "DeFi Governance Token Staking", B3),
        (A10, "Compound Liquid Staking", B3),
        (A11, "Participating in Airdrops", B4),
        (A12, "Participating in Presales/Initial Offerings", B4),
        (A13, "Using Secure Wallets", B5),
        (A14, "Permission Management", B5),
        (A15, "Purchasing Insurance", B5),
        (A16, "Stop-loss Strategies", B6),
        (A17, "Hedging Strategies", B6),
        (A18, "Voting", B7),
        (A19, "Proposals", B7),
        (A20, "Delegating Voting Rights", B8),
        (A21, "Vulnerability Reporting", B8),
    ]
};

/// Immutable label universe, indexed by code ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    labels: Vec<IntentLabel>,
}

/// One row of the JSON export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub code: IntentCode,
    pub name: String,
    pub axial: AxialCategory,
    pub axial_name: String,
    pub core: CoreCategory,
    pub core_name: String,
}

/// The compiled-in taxonomy.
pub fn load_taxonomy() -> &'static Taxonomy {
    static BUILTIN_TAXONOMY: OnceLock<Taxonomy> = OnceLock::new();
    BUILTIN_TAXONOMY.get_or_init(Taxonomy::builtin)
}

impl Taxonomy {
    pub fn builtin() -> Self {
        let labels = BUILTIN
            .iter()
            .map(|&(code, name, axial)| IntentLabel {
                code,
                name: name.to_string(),
                axial,
                core: axial.core(),
            })
            .collect();
        Self { labels }
    }

    /// Loads a replacement taxonomy from the JSON export format. Every code
    /// must appear exactly once; names must be unique and non-empty.
    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let mut records: Vec<LabelRecord> =
            serde_json::from_str(text).map_err(|e| TaxonomyError::InvalidDefinition(e.to_string()))?;
        records.sort_by_key(|r| r.code);
        if records.len() != IntentCode::ALL.len()
            || records.iter().zip(IntentCode::ALL).any(|(r, c)| r.code != c)
        {
            return Err(TaxonomyError::InvalidDefinition(
                "every code A1..A21 must appear exactly once".into(),
            ));
        }
        let mut names = BTreeSet::new();
        for r in &records {
            let key = r.name.trim().to_lowercase();
            if key.is_empty() || !names.insert(key) {
                return Err(TaxonomyError::InvalidDefinition(format!(
                    "empty or duplicate name for {}",
                    r.code
                )));
            }
            if r.axial.core() != r.core {
                return Err(TaxonomyError::InvalidDefinition(format!(
                    "{} places {:?} under the wrong core category",
                    r.code, r.axial
                )));
            }
        }
        let labels = records
            .into_iter()
            .map(|r| IntentLabel {
                code: r.code,
                name: r.name.trim().to_string(),
                axial: r.axial,
                core: r.core,
            })
            .collect();
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[IntentLabel] {
        &self.labels
    }

    pub fn label(&self, code: IntentCode) -> &IntentLabel {
        &self.labels[code as usize]
    }

    pub fn lookup(&self, code: &str) -> Option<&IntentLabel> {
        IntentCode::from_code_str(code.trim()).map(|c| self.label(c))
    }

    /// Resolves a code (`"A4"`, `"a4"`) or a full label name (`"Arbitrage"`),
    /// ignoring case and surrounding whitespace. No fuzzy matching.
    pub fn parse_intent_code(&self, text: &str) -> Result<&IntentLabel, TaxonomyError> {
        let trimmed = text.trim();
        if let Some(label) = self.lookup(trimmed) {
            return Ok(label);
        }
        self.labels
            .iter()
            .find(|l| l.name.eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| TaxonomyError::UnknownIntent(text.to_string()))
    }

    pub fn parse_intent_set<S: AsRef<str>>(&self, items: &[S]) -> Result<IntentSet, TaxonomyError> {
        items
            .iter()
            .map(|s| self.parse_intent_code(s.as_ref()).map(|l| l.code))
            .collect()
    }

    pub fn by_axial(&self, axial: AxialCategory) -> impl Iterator<Item = &IntentLabel> {
        self.labels.iter().filter(move |l| l.axial == axial)
    }

    pub fn export(&self) -> Vec<LabelRecord> {
        self.labels
            .iter()
            .map(|l| LabelRecord {
                code: l.code,
                name: l.name.clone(),
                axial: l.axial,
                axial_name: l.axial.name().to_string(),
                core: l.core,
                core_name: l.core.name().to_string(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.export()).expect("taxonomy export serializes")
    }

    /// Human-readable table grouped by core and axial category, one label per line.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let mut core = None;
        for axial in AxialCategory::ALL {
            if core != Some(axial.core()) {
                core = Some(axial.core());
                out.push_str(&format!("{}\n", axial.core().name()));
            }
            out.push_str(&format!("  {axial}\n"));
            for label in self.by_axial(axial) {
                out.push_str(&format!("    {label}\n"));
            }
        }
        out
    }

    /// Compact catalog used inside prompts.
    pub fn render_prompt_catalog(&self) -> String {
        self.labels
            .iter()
            .map(|l| format!("{}: {} ({})", l.code, l.name, l.axial.name()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Deduplicated set of intent codes; iteration is in code order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntentSet(BTreeSet<IntentCode>);

impl IntentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, code: IntentCode) -> bool {
        self.0.insert(code)
    }

    pub fn contains(&self, code: IntentCode) -> bool {
        self.0.contains(&code)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = IntentCode> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &IntentSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<IntentCode> for IntentSet {
    fn from_iter<T: IntoIterator<Item = IntentCode>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for IntentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<_> = self.0.iter().map(|c| c.as_str()).collect();
        f.write_str(&codes.join(", "))
    }
}

pub fn parse_intent_code(text: &str) -> Result<&'static IntentLabel, TaxonomyError> {
    load_taxonomy().parse_intent_code(text)
}

pub fn parse_intent_set<S: AsRef<str>>(items: &[S]) -> Result<IntentSet, TaxonomyError> {
    load_taxonomy().parse_intent_set(items)
}

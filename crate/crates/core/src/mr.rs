use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The twelve metamorphic relations, declared in their canonical listing
/// order. `Ord` follows that order, so sorted maps and reports line up with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MrTag {
    #[serde(rename = "PI")]
    PrefixInsertion,
    #[serde(rename = "PR")]
    PrefixRemoval,
    #[serde(rename = "PS")]
    PrefixSubstitution,
    #[serde(rename = "SS")]
    SynonymSubstitution,
    #[serde(rename = "NO")]
    Normalization,
    #[serde(rename = "FL")]
    Flattening,
    #[serde(rename = "OK")]
    OpaqueKey,
    #[serde(rename = "TS")]
    TableShuffle,
    #[serde(rename = "CS")]
    ColumnShuffle,
    #[serde(rename = "CRm")]
    ColumnRemoval,
    #[serde(rename = "CRn")]
    ColumnRenaming,
    #[serde(rename = "CI")]
    ColumnInsertion,
}

impl MrTag {
    pub const ALL: [MrTag; 12] = [
        MrTag::PrefixInsertion,
        MrTag::PrefixRemoval,
        MrTag::PrefixSubstitution,
        MrTag::SynonymSubstitution,
        MrTag::Normalization,
        MrTag::Flattening,
        MrTag::OpaqueKey,
        MrTag::TableShuffle,
        MrTag::ColumnShuffle,
        MrTag::ColumnRemoval,
        MrTag::ColumnRenaming,
        MrTag::ColumnInsertion,
    ];

    pub fn code(self) -> &'static str {
        match self {
            MrTag::PrefixInsertion => "PI",
            MrTag::PrefixRemoval => "PR",
            MrTag::PrefixSubstitution => "PS",
            MrTag::SynonymSubstitution => "SS",
            MrTag::Normalization => "NO",
            MrTag::Flattening => "FL",
            MrTag::OpaqueKey => "OK",
            MrTag::TableShuffle => "TS",
            MrTag::ColumnShuffle => "CS",
            MrTag::ColumnRemoval => "CRm",
            MrTag::ColumnRenaming => "CRn",
            MrTag::ColumnInsertion => "CI",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            MrTag::PrefixInsertion => "Prefix Insertion",
            MrTag::PrefixRemoval => "Prefix Removal",
            MrTag::PrefixSubstitution => "Prefix Substitution",
            MrTag::SynonymSubstitution => "Synonym Substitution",
            MrTag::Normalization => "Normalization",
            MrTag::Flattening => "Flattening",
            MrTag::OpaqueKey => "Opaque Key",
            MrTag::TableShuffle => "Table Shuffle",
            MrTag::ColumnShuffle => "Column Shuffle",
            MrTag::ColumnRemoval => "Column Removal",
            MrTag::ColumnRenaming => "Column Renaming",
            MrTag::ColumnInsertion => "Column Insertion",
        }
    }

    /// Utterance relations leave the schema untouched; the rest leave the
    /// utterance untouched.
    pub fn is_utterance(self) -> bool {
        matches!(
            self,
            MrTag::PrefixInsertion
                | MrTag::PrefixRemoval
                | MrTag::PrefixSubstitution
                | MrTag::SynonymSubstitution
        )
    }
}

impl fmt::Display for MrTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metamorphic relation `{0}`")]
pub struct UnknownMr(pub String);

impl FromStr for MrTag {
    type Err = UnknownMr;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        MrTag::ALL
            .iter()
            .copied()
            .find(|m| {
                m.code().eq_ignore_ascii_case(key)
                    || m.display_name().eq_ignore_ascii_case(key)
                    || m.display_name().replace(' ', "_").eq_ignore_ascii_case(key)
            })
            .ok_or_else(|| UnknownMr(s.to_string()))
    }
}

use std::fmt;
use std::str::FromStr;

/// The four semantic groups used throughout the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemanticGroup {
    /// Chemical entities and drugs.
    Ched,
    /// Genes and proteins.
    Prge,
    /// Diseases and disorders.
    Diso,
    /// Species.
    Spe,
}

impl SemanticGroup {
    pub const ALL: [SemanticGroup; 4] = [
        SemanticGroup::Ched,
        SemanticGroup::Prge,
        SemanticGroup::Diso,
        SemanticGroup::Spe,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SemanticGroup::Ched => "CHED",
            SemanticGroup::Prge => "PRGE",
            SemanticGroup::Diso => "DISO",
            SemanticGroup::Spe => "SPE",
        }
    }
}

impl fmt::Display for SemanticGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown semantic group `{0}` (expected CHED, PRGE, DISO or SPE)")]
pub struct UnknownGroup(pub String);

impl FromStr for SemanticGroup {
    type Err = UnknownGroup;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CHED" => Ok(SemanticGroup::Ched),
            "PRGE" => Ok(SemanticGroup::Prge),
            "DISO" => Ok(SemanticGroup::Diso),
            "SPE" => Ok(SemanticGroup::Spe),
            other => Err(UnknownGroup(other.to_string())),
        }
    }
}

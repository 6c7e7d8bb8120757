//! Three-letter metric classification: modeled variable, nature, temporal
//! scope.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    NonSocial,
    Social,
    AllEncompassing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nature {
    HandCrafted,
    Learned,
    Questionnaire,
    Sensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    Step,
    Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaxonomyCode {
    pub variable: Variable,
    pub nature: Nature,
    pub scope: Scope,
}

impl TaxonomyCode {
    /// Non-social, hand-crafted, task-wise.
    pub const NHT: TaxonomyCode = TaxonomyCode {
        variable: Variable::NonSocial,
        nature: Nature::HandCrafted,
        scope: Scope::Task,
    };
    /// Social, hand-crafted, task-wise.
    pub const SHT: TaxonomyCode = TaxonomyCode {
        variable: Variable::Social,
        nature: Nature::HandCrafted,
        scope: Scope::Task,
    };

    pub fn with_scope(self, scope: Scope) -> Self {
        Self { scope, ..self }
    }
}

impl fmt::Display for TaxonomyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.variable {
            Variable::NonSocial => 'N',
            Variable::Social => 'S',
            Variable::AllEncompassing => 'A',
        };
        let n = match self.nature {
            Nature::HandCrafted => 'H',
            Nature::Learned => 'L',
            Nature::Questionnaire => 'Q',
            Nature::Sensor => 'S',
        };
        let s = match self.scope {
            Scope::Step => 'S',
            Scope::Task => 'T',
        };
        write!(f, "{v}{n}{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a taxonomy code of the form [NSA][HLQS][ST]")]
pub struct BadCode(pub String);

impl FromStr for TaxonomyCode {
    type Err = BadCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadCode(s.to_string());
        let mut chars = s.chars();
        let (Some(a), Some(b), Some(c), None) =
            (chars.next(), chars.next(), chars.next(), chars.next())
        else {
            return Err(bad());
        };
        let variable = match a {
            'N' => Variable::NonSocial,
            'S' => Variable::Social,
            'A' => Variable::AllEncompassing,
            _ => return Err(bad()),
        };
        let nature = match b {
            'H' => Nature::HandCrafted,
            'L' => Nature::Learned,
            'Q' => Nature::Questionnaire,
            'S' => Nature::Sensor,
            _ => return Err(bad()),
        };
        let scope = match c {
            'S' => Scope::Step,
            'T' => Scope::Task,
            _ => return Err(bad()),
        };
        Ok(TaxonomyCode {
            variable,
            nature,
            scope,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse_agree() {
        for code in ["NHT", "SHT", "SSS", "AQT", "NLS"] {
            assert_eq!(code.parse::<TaxonomyCode>().unwrap().to_string(), code);
        }
        assert!("XHT".parse::<TaxonomyCode>().is_err());
        assert!("NHTT".parse::<TaxonomyCode>().is_err());
        assert!("NH".parse::<TaxonomyCode>().is_err());
    }

    #[test]
    fn step_variant() {
        assert_eq!(TaxonomyCode::SHT.with_scope(Scope::Step).to_string(), "SHS");
    }
}

//! Scenario files shipped in the crate's `examples/` directory.

use crate::{CliError, Scenario};

pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
}

impl Example {
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario::parse(self.source, &format!("examples/{}.toml", self.name))
    }
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(Example {
            name: $name,
            source: include_str!(concat!("../examples/", $name, ".toml")),
        }),*]
    };
}

/// Figures first, in order, then the remaining kinds.
pub const ALL: &[Example] = bundled![
    "fig1-shortfall",
    "fig2-spread-capture",
    "fig3-total-cost",
    "fig4-mc-peg",
    "fig5-det-cost",
    "fig6-stoch-power",
    "fig7-stoch-exp",
    "oltt-instantaneous",
    "pt-moments",
    "pwt-alpha",
    "allocation",
];

pub fn find(name: &str) -> Option<&'static Example> {
    ALL.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_parses_under_its_own_name() {
        for ex in ALL {
            let s = ex.scenario().unwrap();
            assert_eq!(s.name, ex.name);
            assert!(s.description.is_some(), "{}", ex.name);
        }
    }
}

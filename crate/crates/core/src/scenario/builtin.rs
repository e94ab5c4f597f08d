//! Built-in scenarios, embedded at compile time so they can be run by name
//! and exported verbatim for diffing or modification.

use super::Scenario;

const BUILTINS: &[(&str, &str)] = &[
    ("fig3_2photon", include_str!("../../scenarios/fig3_2photon.toml")),
    ("fig3_1photon", include_str!("../../scenarios/fig3_1photon.toml")),
    ("fig4a", include_str!("../../scenarios/fig4a.toml")),
    ("fig4b", include_str!("../../scenarios/fig4b.toml")),
    ("fig4c", include_str!("../../scenarios/fig4c.toml")),
    ("fig5", include_str!("../../scenarios/fig5.toml")),
    ("fig5_inset_a", include_str!("../../scenarios/fig5_inset_a.toml")),
    ("fig5_inset_b", include_str!("../../scenarios/fig5_inset_b.toml")),
    ("figs4", include_str!("../../scenarios/figs4.toml")),
];

/// Names of all built-in scenarios, in a stable order.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(name, _)| *name).collect()
}

/// The embedded TOML text of a built-in scenario, byte-for-byte as shipped.
pub fn builtin_toml(name: &str) -> Option<&'static str> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Parse a built-in scenario by name.
pub fn builtin(name: &str) -> Option<Scenario> {
    builtin_toml(name).map(|text| Scenario::parse(text).expect("embedded scenario parses"))
}

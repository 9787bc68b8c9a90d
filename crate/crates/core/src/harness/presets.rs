//! Scenario documents shipped with the crate.

pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig1-grid25",
        include_str!("../../presets/fig1-grid25.toml"),
    ),
    (
        "fig2-path25",
        include_str!("../../presets/fig2-path25.toml"),
    ),
    (
        "fig3-hetero-tau",
        include_str!("../../presets/fig3-hetero-tau.toml"),
    ),
    (
        "fig5-directed-n10",
        include_str!("../../presets/fig5-directed-n10.toml"),
    ),
    (
        "fig5-directed-n20",
        include_str!("../../presets/fig5-directed-n20.toml"),
    ),
    (
        "fig5-directed-n30",
        include_str!("../../presets/fig5-directed-n30.toml"),
    ),
    (
        "fig5-directed-n40",
        include_str!("../../presets/fig5-directed-n40.toml"),
    ),
    (
        "biau-equivalence",
        include_str!("../../presets/biau-equivalence.toml"),
    ),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

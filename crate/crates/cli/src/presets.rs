//! Built-in training configurations, one per hyperparameter table column.

pub const PRESETS: &[(&str, &str)] = &[
    ("hierarchy", include_str!("../presets/hierarchy.json")),
    ("flat", include_str!("../presets/flat.json")),
    ("composed_town", include_str!("../presets/composed_town.json")),
    ("composed_house", include_str!("../presets/composed_house.json")),
    ("house", include_str!("../presets/house.json")),
    ("garden", include_str!("../presets/garden.json")),
    ("town", include_str!("../presets/town.json")),
    ("city", include_str!("../presets/city.json")),
    ("town_and_city", include_str!("../presets/town_and_city.json")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

//! Bundled example models, embedded from `scenarios/`.

use crate::model::StateSpace;
use crate::model_file::{ModelFile, ModelFileError, TableResolver};

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name)))),*]
    };
}

static ROOT: &[(&str, &str)] = bundle!["first_order.json", "mimo.json"];

static SATELLITE: &[(&str, &str)] = bundle![
    "satellite/spacecraft.json",
    "satellite/pd_nominal.json",
    "satellite/pd_slow.json",
    "satellite/wheels.json",
    "satellite/tracker.json",
    "satellite/filter_f1.json",
    "satellite/filter_f2.json",
    "satellite/sensitivity_nominal.json",
    "satellite/sensitivity_slow.json",
    "satellite/nominal_f1.json",
    "satellite/nominal_f2.json",
    "satellite/slow_f1.json",
    "satellite/slow_f2.json",
];

/// Same files keyed by their name inside `satellite/`, for `{"file": ..}` lookups.
static SATELLITE_LOCAL: std::sync::LazyLock<Vec<(&'static str, &'static str)>> =
    std::sync::LazyLock::new(|| {
        SATELLITE
            .iter()
            .map(|(name, text)| (name.trim_start_matches("satellite/"), *text))
            .collect()
    });

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Controller {
    /// Table gains.
    Nominal,
    /// Quarter-bandwidth scaling of the nominal gains.
    Slow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    /// Low pass at 1260 rad/s.
    F1,
    /// Low pass plus a peak at 1.1 rad/s.
    F2,
}

/// Names accepted by [`load_bundled`].
pub fn bundled_names() -> Vec<&'static str> {
    ROOT.iter()
        .chain(SATELLITE.iter())
        .map(|(n, _)| *n)
        .collect()
}

/// Loads a bundled file by its path under `scenarios/`, with or without `.json`.
pub fn load_bundled(name: &str) -> Result<ModelFile, ModelFileError> {
    let key = if name.ends_with(".json") {
        name.to_string()
    } else {
        format!("{name}.json")
    };
    if let Some((_, text)) = ROOT.iter().find(|(n, _)| *n == key) {
        return ModelFile::from_text(&key, text, &TableResolver(ROOT));
    }
    let local: &'static [(&'static str, &'static str)] = SATELLITE_LOCAL.as_slice();
    if let Some((_, text)) = SATELLITE.iter().find(|(n, _)| *n == key) {
        return ModelFile::from_text(&key, text, &TableResolver(local));
    }
    Err(ModelFileError::Schema {
        origin: name.to_string(),
        message: format!(
            "no bundled scenario; available: {}",
            bundled_names().join(", ")
        ),
    })
}

fn bundled_model(name: &str) -> StateSpace {
    load_bundled(name)
        .unwrap_or_else(|e| panic!("bundled scenario {name} is broken: {e}"))
        .model
}

/// `ẋ = −x + √2 u`, `p = x`.
pub fn first_order() -> StateSpace {
    bundled_model("first_order")
}

/// The 2×2 grid of second-order entries, 8 states.
pub fn mimo() -> StateSpace {
    bundled_model("mimo")
}

/// The 18-state spacecraft, torques to attitude angles.
pub fn spacecraft() -> StateSpace {
    bundled_model("satellite/spacecraft")
}

/// Closed loop from the three disturbance inputs to `p = (Φ, Ψ)`.
pub fn satellite(controller: Controller, filter: Filter) -> StateSpace {
    let c = match controller {
        Controller::Nominal => "nominal",
        Controller::Slow => "slow",
    };
    let f = match filter {
        Filter::F1 => "f1",
        Filter::F2 => "f2",
    };
    bundled_model(&format!("satellite/{c}_{f}"))
}

/// Sensitivity from a disturbance at the attitude output to the attitude, 3×3.
pub fn satellite_sensitivity(controller: Controller) -> StateSpace {
    bundled_model(match controller {
        Controller::Nominal => "satellite/sensitivity_nominal",
        Controller::Slow => "satellite/sensitivity_slow",
    })
}

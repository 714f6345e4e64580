//! Seeded synthetic inputs: occupancy scenes with controllable
//! displacement, the head-selection regret scenario, event tables and
//! station series. Every generator is a pure function of its config and
//! seed.

mod events;
mod regret;
mod scene;
mod stations;

pub use events::{generate_event_table, generate_event_table_with, EventTableConfig, LinearRegressor};
pub use regret::{
    generate_regret_scenario, generate_regret_scenario_with, regret_contract, regret_train_config, RegretScenario,
    RegretScenarioConfig, REGRET_CHANNELS,
};
pub use scene::{
    generate_occupancy_scene, Scene, SceneConfig, DISC_BODY, DISC_PEAK, FALSE_ALARM_RANGE, SCENE_CHANNELS,
};
pub use stations::{generate_station_series, generate_station_series_with, StationConfig, StationKind};

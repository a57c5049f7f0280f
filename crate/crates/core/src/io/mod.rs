//! Model configuration files and trajectory CSV.

mod config;
mod trajectory;

pub use config::{
    load_config, parse_config, parse_document, ConditionSpec, ConfigDocument, ConfigError,
    ModelConfig, Options, ScheduleSpec, MAX_CONFIG_LENGTH,
};
pub use trajectory::{
    parse_trajectories, read_trajectories, schedule_file_name, trajectories_to_csv,
    write_atomic, write_trajectories, CsvError, COMBINED_FILE,
};

//! `saescope`: train sparse autoencoders on activation shards and analyse
//! the learned features.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 data format,
//! 4 numerical divergence, 1 anything else.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};
use saescope_core::Error;

use config::{keys_for, read_config_file, Command, ConfigError, RunConfig};

fn cli() -> ClapCommand {
    let mut app = ClapCommand::new("saescope")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Sparse-autoencoder dictionary learning and feature analysis")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help("Each subcommand reads `key = value` lines from --config; flags override file keys.");
    for cmd in Command::ALL {
        let mut sub = ClapCommand::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("configuration file of `key = value` lines"),
        );
        let mut keys = String::from("Config keys:\n");
        for key in keys_for(cmd) {
            sub = sub.arg(
                Arg::new(key.name)
                    .long(key.name)
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(key.help),
            );
            keys.push_str(&format!("  {}\n", key.name));
        }
        app = app.subcommand(sub.after_help(keys));
    }
    app
}

fn resolve(cmd: Command, m: &ArgMatches) -> Result<RunConfig, ConfigError> {
    let mut values: BTreeMap<String, String> = match m.get_one::<PathBuf>("config") {
        Some(path) => read_config_file(path, cmd)?,
        None => BTreeMap::new(),
    };
    for key in keys_for(cmd) {
        if let Some(v) = m.get_one::<String>(key.name) {
            values.insert(key.name.to_string(), v.clone());
        }
    }
    Ok(RunConfig::new(cmd, values))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Format(_) | Error::Dimension(_) | Error::Io(_)) => 3,
        Some(Error::Divergence { .. } | Error::NonFinite(_) | Error::Singularity { .. }) => 4,
        Some(
            Error::Parameter(_) | Error::Range { .. } | Error::DegenerateGrid | Error::DegenerateBaseline { .. },
        ) => 2,
        _ => 1,
    }
}

fn run(cmd: Command, cfg: &RunConfig) -> anyhow::Result<()> {
    if cfg.get_or("threads", 1usize)? == 0 {
        anyhow::bail!(ConfigError("threads must be >= 1".into()));
    }
    match cmd {
        Command::Train => commands::cmd_train(cfg),
        Command::Profile => commands::cmd_profile(cfg),
        Command::Tune => commands::cmd_tune(cfg),
        Command::Sweep => commands::cmd_sweep(cfg),
        Command::Toy => commands::cmd_toy(cfg),
        Command::Branch => commands::cmd_branch(cfg),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == name)
        .expect("registered subcommand");
    let result = resolve(cmd, sub)
        .map_err(anyhow::Error::from)
        .and_then(|cfg| run(cmd, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

mod bench;
mod data;
mod modeling;
mod stream;
mod vitals;

use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::args::{Cli, Command};
use crate::output::Done;

/// Invalid invocation detected after argument parsing; exits with 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub(crate) fn require_out(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().ok_or_else(|| usage("this command needs --out"))
}

pub(crate) fn out_or(cli: &Cli, default: impl Into<PathBuf>) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| default.into())
}

pub fn dispatch(cli: &Cli) -> Result<Done> {
    match &cli.command {
        Command::Synth(a) => data::synth(cli, a),
        Command::Ingest(a) => data::ingest(cli, a),
        Command::Features(a) => data::features(cli, a),
        Command::AnnotateStats(a) => data::annotate_stats(cli, a),
        Command::Train(a) => modeling::train(cli, a),
        Command::Eval(a) => modeling::eval(cli, a),
        Command::Vitals(a) => vitals::vitals(cli, a),
        Command::Bench(a) => bench::bench(cli, a),
        Command::Stream(a) => stream::stream(cli, a),
    }
}

//! Command-line front end for transbench.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;
use transbench_core::codegen::CodegenError;
use transbench_core::executor::ExecutorError;
use transbench_core::model::ModelError;
use transbench_core::problem::ProblemError;
use transbench_core::prompting::PromptError;
use transbench_core::report::ReportError;
use transbench_core::selftrain::SelftrainError;
use transbench_core::translate::TranslateError;

use crate::args::{Cli, Command};
use crate::commands::Summary;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURES: u8 = 1;
pub const EXIT_ENVIRONMENT: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Bad flags or inputs supplied by the caller.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn dispatch(cli: &Cli) -> anyhow::Result<Summary> {
    match &cli.command {
        Command::GenTests(a) => commands::gen_tests(a),
        Command::Translate(a) => commands::translate(a),
        Command::Intermediary(a) => commands::intermediary(a),
        Command::Selftrain(a) => commands::selftrain(a),
        Command::Report(a) => commands::report(a),
        Command::Replay(a) => commands::replay(a),
    }
}

/// Exit code for a command that could not complete.
pub fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<ProblemError>() || cause.is::<ReportError>() || cause.is::<PromptError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<TranslateError>() {
            return match e {
                e if e.is_environment() => EXIT_ENVIRONMENT,
                TranslateError::InvalidMode(_) | TranslateError::UnknownProblem(_) | TranslateError::Prompt(_) => EXIT_USAGE,
                _ => EXIT_FAILURES,
            };
        }
        if let Some(e) = cause.downcast_ref::<SelftrainError>() {
            return match e {
                e if e.is_environment() => EXIT_ENVIRONMENT,
                SelftrainError::EmptyApiList
                | SelftrainError::DuplicateApi(_)
                | SelftrainError::MalformedApiList { .. }
                | SelftrainError::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_FAILURES,
            };
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return match e {
                ModelError::InvalidParams(_) => EXIT_USAGE,
                _ => EXIT_ENVIRONMENT,
            };
        }
        if let Some(e) = cause.downcast_ref::<CodegenError>() {
            return match e {
                CodegenError::UnknownProfile(_) | CodegenError::InvalidProfile(_) => EXIT_USAGE,
                _ => EXIT_FAILURES,
            };
        }
        if cause.is::<ExecutorError>() || cause.is::<std::io::Error>() {
            return EXIT_ENVIRONMENT;
        }
    }
    EXIT_FAILURES
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(summary) => summary.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            classify(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kinds() {
        assert_eq!(classify(&UsageError("x".into()).into()), EXIT_USAGE);
        assert_eq!(classify(&ModelError::EndpointUnreachable("down".into()).into()), EXIT_ENVIRONMENT);
        assert_eq!(classify(&TranslateError::InvalidMode("go".into()).into()), EXIT_USAGE);
        assert_eq!(classify(&TranslateError::EmptyOutcomeSet.into()), EXIT_FAILURES);
        assert_eq!(classify(&SelftrainError::EmptyCorpus.into()), EXIT_FAILURES);
        let wrapped = anyhow::Error::from(ModelError::ReplayMiss { key: "k".into() }).context("translating");
        assert_eq!(classify(&wrapped), EXIT_ENVIRONMENT);
    }

    #[test]
    fn help_and_bad_flags() {
        assert_eq!(run(["transbench", "--help"]), EXIT_OK);
        assert_eq!(run(["transbench", "translate", "--nope"]), EXIT_USAGE);
        assert_eq!(run(["transbench"]), EXIT_USAGE);
    }

    #[test]
    fn summary_codes() {
        assert_eq!(Summary::default().exit_code(), EXIT_OK);
        assert_eq!(Summary { failures: 2, environment: false }.exit_code(), EXIT_FAILURES);
        assert_eq!(Summary { failures: 1, environment: true }.exit_code(), EXIT_ENVIRONMENT);
    }
}

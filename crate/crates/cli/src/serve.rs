//! Wire adapter front end: one fresh simulation per session.

use std::fs;
use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::Path;
use std::thread;

use anyhow::Context;
use rdmsim::wire::{serve_session, SessionReport, SessionStatus};
use rdmsim::Config;

use crate::experiment::RunArtifacts;
use crate::{CliError, OutputFormat, ServeArgs};

fn session_config(args: &ServeArgs) -> Result<Config, CliError> {
    let mut config = args.experiment.base_config()?;
    if let Some(&scenario) = args.experiment.scenario.first() {
        config.properties.scenario = scenario;
    }
    if let Some(&seed) = args.experiment.seeds(&config).first() {
        config.properties.seed = seed;
    }
    config.validate().map_err(CliError::config)?;
    Ok(config)
}

fn record(config: &Config, session: usize, report: &SessionReport, out: Option<&Path>) -> anyhow::Result<()> {
    match &report.status {
        SessionStatus::Completed => eprintln!("session {session}: completed {} timesteps", report.trace.len()),
        SessionStatus::Disconnected => eprintln!("session {session}: client disconnected after {} timesteps", report.trace.len()),
        SessionStatus::ProtocolViolation(why) => eprintln!("session {session}: closed, {why}"),
    }
    let Some(dir) = out else { return Ok(()) };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = &config.properties;
    let suffix = if report.is_complete() { "" } else { ".incomplete" };
    RunArtifacts {
        stem: format!("session{session}_{}_seed{}{suffix}", p.scenario, p.seed),
        config,
        manager: "remote",
        trace: &report.trace,
        log: &report.log,
        summary: report.summary,
        complete: report.is_complete(),
    }
    .write(dir, &[OutputFormat::Csv, OutputFormat::Json])
}

pub fn run(args: &ServeArgs) -> Result<(), CliError> {
    let config = session_config(args)?;
    let out = args.out.as_deref();

    if args.stdio {
        let report = serve_session(&config, io::stdin().lock(), io::stdout().lock());
        return record(&config, 0, &report, out).map_err(CliError::io);
    }

    let addr = args.listen.as_deref().expect("clap requires --listen without --stdio");
    let listener = TcpListener::bind(addr)
        .with_context(|| format!("binding {addr}"))
        .map_err(CliError::io)?;
    let local = listener.local_addr().map_err(CliError::io)?;
    eprintln!("listening on {local}");

    let mut handles = Vec::new();
    for (session, stream) in listener.incoming().enumerate() {
        let stream = stream.map_err(CliError::io)?;
        stream.set_nodelay(true).map_err(CliError::io)?;
        let config = config.clone();
        let out = out.map(Path::to_path_buf);
        handles.push(thread::spawn(move || -> anyhow::Result<()> {
            let reader = BufReader::new(stream.try_clone()?);
            let report = serve_session(&config, reader, stream);
            record(&config, session, &report, out.as_deref())
        }));
        if args.sessions.is_some_and(|n| session + 1 >= n) {
            break;
        }
    }
    for handle in handles {
        handle
            .join()
            .map_err(|_| CliError::io(anyhow::anyhow!("session thread panicked")))?
            .map_err(CliError::io)?;
    }
    Ok(())
}

use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;

use crate::config::Config;
use crate::management::{CommandLog, Effector, InterfaceError, Probe};
use crate::satisfaction::SatisfactionSummary;
use crate::simulation::Simulation;
use crate::trace::TraceRecord;

use super::{ClientMessage, ErrorCode, Request, ServerBody, ServerMessage, SessionInfo, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub enum SessionStatus {
    Completed,
    /// The client went away before the final step.
    Disconnected,
    ProtocolViolation(String),
}

/// Outcome of one session. The trace is partial unless the status is `Completed`.
#[derive(Debug, Clone)]
pub struct SessionReport {
    pub status: SessionStatus,
    pub trace: Vec<TraceRecord>,
    pub log: CommandLog,
    pub summary: Option<SatisfactionSummary>,
}

impl SessionReport {
    pub fn is_complete(&self) -> bool {
        self.status == SessionStatus::Completed
    }
}

struct Session<W> {
    writer: W,
    seq: u64,
    last_client_seq: Option<u64>,
}

impl<W: Write> Session<W> {
    fn send(&mut self, body: ServerBody) -> io::Result<()> {
        self.seq += 1;
        let msg = ServerMessage { seq: self.seq, body };
        let line = serde_json::to_string(&msg).map_err(io::Error::other)?;
        writeln!(self.writer, "{line}")?;
        self.writer.flush()
    }

    fn error(&mut self, re: Option<u64>, code: ErrorCode, detail: impl ToString) -> io::Result<()> {
        self.send(ServerBody::Error {
            re,
            code,
            detail: detail.to_string(),
        })
    }
}

fn rejection(e: &InterfaceError) -> ErrorCode {
    match e {
        InterfaceError::RunFinished => ErrorCode::RunFinished,
        _ => ErrorCode::Rejected,
    }
}

/// Runs one session over an already-connected transport. Returns when the run completes, the
/// client disconnects, or the client violates the protocol.
pub fn serve_session<R: BufRead, W: Write>(config: &Config, reader: R, writer: W) -> SessionReport {
    let mut sim = Simulation::new(config);
    let mut session = Session {
        writer,
        seq: 0,
        last_client_seq: None,
    };
    let status = drive(&mut sim, &mut session, reader, config).unwrap_or(SessionStatus::Disconnected);
    SessionReport {
        status,
        summary: sim.summary(),
        trace: sim.trace().to_vec(),
        log: sim.command_log().clone(),
    }
}

fn drive<R: BufRead, W: Write>(
    sim: &mut Simulation,
    session: &mut Session<W>,
    reader: R,
    config: &Config,
) -> io::Result<SessionStatus> {
    session.send(ServerBody::Hello {
        protocol: PROTOCOL_VERSION,
        session: SessionInfo::from_config(config),
    })?;
    session.send(ServerBody::StepStart { timestep: 0 })?;

    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: ClientMessage = match serde_json::from_str(&line) {
            Ok(msg) => msg,
            Err(e) => {
                session.error(None, ErrorCode::Malformed, &e)?;
                return Ok(SessionStatus::ProtocolViolation(format!("malformed message: {e}")));
            }
        };
        let re = msg.seq;
        if session.last_client_seq.is_some_and(|last| re <= last) {
            let detail = format!("seq {re} does not follow {}", session.last_client_seq.unwrap_or(0));
            session.error(Some(re), ErrorCode::BadSequence, &detail)?;
            return Ok(SessionStatus::ProtocolViolation(detail));
        }
        session.last_client_seq = Some(re);

        let ack = |result: Result<(), InterfaceError>| match result {
            Ok(()) => ServerBody::Ack { re },
            Err(e) => ServerBody::Error {
                re: Some(re),
                code: rejection(&e),
                detail: e.to_string(),
            },
        };
        // In-process probes cannot fail.
        let reply = match msg.request {
            Request::GetCurrentTopology => ServerBody::Topology {
                re,
                topology: sim.get_current_topology().expect("infallible"),
            },
            Request::GetActiveLinks => ServerBody::Value {
                re,
                value: u64::from(sim.get_active_links().expect("infallible")),
            },
            Request::GetBandwidthConsumption => ServerBody::Value {
                re,
                value: sim.get_bandwidth_consumption().expect("infallible"),
            },
            Request::GetTimeToWrite => ServerBody::Value {
                re,
                value: sim.get_time_to_write().expect("infallible"),
            },
            Request::GetMonitorables => ServerBody::Monitorables {
                re,
                monitorables: sim.get_monitorables().expect("infallible"),
            },
            Request::SetNetworkTopology { timestep, topology } => ack(sim.set_network_topology(timestep, topology)),
            Request::SetActiveLinks { value } => ack(sim.set_active_links(value)),
            Request::SetTimeToWrite { value } => ack(sim.set_time_to_write(value)),
            Request::SetBandwidthConsumption { value } => ack(sim.set_bandwidth_consumption(value)),
            Request::SetCurrentTopology { topology } => ack(sim.set_current_topology(topology)),
            Request::Step => match sim.step() {
                Ok(record) => ServerBody::StepComplete {
                    re,
                    timestep: record.timestep,
                    record: *record,
                },
                Err(e) => ServerBody::Error {
                    re: Some(re),
                    code: ErrorCode::RunFinished,
                    detail: e.to_string(),
                },
            },
        };
        let stepped = matches!(reply, ServerBody::StepComplete { .. });
        session.send(reply)?;
        if stepped {
            if sim.is_finished() {
                session.send(ServerBody::RunComplete {
                    timesteps: sim.timesteps(),
                    summary: sim.summary().expect("finished run has records"),
                })?;
                return Ok(SessionStatus::Completed);
            }
            session.send(ServerBody::StepStart {
                timestep: sim.next_timestep(),
            })?;
        }
    }
    Ok(SessionStatus::Disconnected)
}

/// Accepts one connection on `listener` and serves a session on it.
pub fn serve_tcp(config: &Config, listener: &TcpListener) -> io::Result<SessionReport> {
    let (stream, _) = listener.accept()?;
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    Ok(serve_session(config, reader, stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn replies(config: &Config, input: &str) -> (SessionReport, Vec<ServerMessage>) {
        let mut out = Vec::new();
        let report = serve_session(config, input.as_bytes(), &mut out);
        let msgs = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        (report, msgs)
    }

    #[test]
    fn malformed_message_closes_session() {
        let (report, msgs) = replies(&Config::default(), "{\"seq\":1,\"type\":\"get_monitorables\"}\nhello?\n{\"seq\":3,\"type\":\"step\"}\n");
        assert!(matches!(report.status, SessionStatus::ProtocolViolation(_)));
        assert!(report.trace.is_empty());
        let last = msgs.last().unwrap();
        assert!(matches!(
            last.body,
            ServerBody::Error {
                re: None,
                code: ErrorCode::Malformed,
                ..
            }
        ));
    }

    #[test]
    fn sequence_must_increase() {
        let (report, msgs) = replies(
            &Config::default(),
            "{\"seq\":5,\"type\":\"step\"}\n{\"seq\":5,\"type\":\"step\"}\n",
        );
        assert!(matches!(report.status, SessionStatus::ProtocolViolation(_)));
        assert_eq!(report.trace.len(), 1);
        assert!(matches!(
            msgs.last().unwrap().body,
            ServerBody::Error {
                code: ErrorCode::BadSequence,
                ..
            }
        ));
    }

    #[test]
    fn rejected_effector_keeps_session() {
        let mut config = Config::default();
        config.properties.timesteps = 2;
        let (report, msgs) = replies(
            &config,
            "{\"seq\":1,\"type\":\"set_bandwidth_consumption\",\"value\":-1}\n{\"seq\":2,\"type\":\"step\"}\n{\"seq\":3,\"type\":\"step\"}\n",
        );
        assert_eq!(report.status, SessionStatus::Completed);
        assert_eq!(report.trace.len(), 2);
        assert!(matches!(
            msgs[2].body,
            ServerBody::Error {
                re: Some(1),
                code: ErrorCode::Rejected,
                ..
            }
        ));
        assert!(matches!(msgs.last().unwrap().body, ServerBody::RunComplete { timesteps: 2, .. }));
        let seqs: Vec<u64> = msgs.iter().map(|m| m.seq).collect();
        assert!(seqs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn disconnect_leaves_partial_trace() {
        let (report, _) = replies(&Config::default(), "{\"seq\":1,\"type\":\"step\"}\n{\"seq\":2,\"type\":\"step\"}\n");
        assert_eq!(report.status, SessionStatus::Disconnected);
        assert!(!report.is_complete());
        assert_eq!(report.trace.len(), 2);
    }
}

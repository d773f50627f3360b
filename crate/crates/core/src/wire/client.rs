use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use crate::management::{Effector, InterfaceError, Probe};
use crate::managers::{AdaptationManager, ManagerError};
use crate::network::{Monitorables, Topology};
use crate::satisfaction::SatisfactionSummary;
use crate::trace::TraceRecord;

use super::{ClientMessage, Request, ServerBody, ServerMessage, SessionInfo, PROTOCOL_VERSION};

/// Client side of a session. Implements [`Probe`] and [`Effector`] by round-tripping each call
/// to the server, so any [`AdaptationManager`] can drive a remote simulation.
pub struct RemoteSystem<R, W> {
    reader: R,
    writer: W,
    seq: u64,
    info: SessionInfo,
    next_timestep: Option<u32>,
    summary: Option<SatisfactionSummary>,
}

#[derive(Debug, Clone)]
pub struct RemoteRun {
    pub trace: Vec<TraceRecord>,
    pub summary: SatisfactionSummary,
}

fn transport(e: impl ToString) -> InterfaceError {
    InterfaceError::Transport(e.to_string())
}

fn unexpected(body: &ServerBody) -> InterfaceError {
    InterfaceError::Transport(format!("unexpected server message {body:?}"))
}

impl RemoteSystem<BufReader<TcpStream>, TcpStream> {
    pub fn connect_tcp(addr: impl ToSocketAddrs) -> Result<Self, InterfaceError> {
        let stream = TcpStream::connect(addr).map_err(transport)?;
        stream.set_nodelay(true).map_err(transport)?;
        let reader = BufReader::new(stream.try_clone().map_err(transport)?);
        RemoteSystem::connect(reader, stream)
    }
}

impl<R: BufRead, W: Write> RemoteSystem<R, W> {
    /// Reads the server's `hello` and first `step_start`.
    pub fn connect(reader: R, writer: W) -> Result<Self, InterfaceError> {
        let mut remote = RemoteSystem {
            reader,
            writer,
            seq: 0,
            info: SessionInfo::from_config(&crate::Config::default()),
            next_timestep: None,
            summary: None,
        };
        match remote.receive()? {
            ServerBody::Hello { protocol, session } if protocol == PROTOCOL_VERSION => remote.info = session,
            ServerBody::Hello { protocol, .. } => {
                return Err(transport(format!("unsupported protocol version {protocol}")))
            }
            other => return Err(unexpected(&other)),
        }
        remote.await_step_start()?;
        Ok(remote)
    }

    pub fn info(&self) -> &SessionInfo {
        &self.info
    }

    /// Timestep the server is waiting to execute, or `None` once the run is complete.
    pub fn next_timestep(&self) -> Option<u32> {
        self.next_timestep
    }

    pub fn summary(&self) -> Option<&SatisfactionSummary> {
        self.summary.as_ref()
    }

    fn receive(&mut self) -> Result<ServerBody, InterfaceError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line).map_err(transport)? == 0 {
            return Err(transport("server closed the session"));
        }
        let msg: ServerMessage = serde_json::from_str(&line).map_err(transport)?;
        Ok(msg.body)
    }

    fn await_step_start(&mut self) -> Result<(), InterfaceError> {
        match self.receive()? {
            ServerBody::StepStart { timestep } => {
                self.next_timestep = Some(timestep);
                Ok(())
            }
            ServerBody::RunComplete { summary, .. } => {
                self.next_timestep = None;
                self.summary = Some(summary);
                Ok(())
            }
            other => Err(unexpected(&other)),
        }
    }

    /// Sends one request and returns its reply. Error replies become `InterfaceError::Remote`.
    pub fn request(&mut self, request: Request) -> Result<ServerBody, InterfaceError> {
        self.seq += 1;
        let line = serde_json::to_string(&ClientMessage {
            seq: self.seq,
            request,
        })
        .map_err(transport)?;
        writeln!(self.writer, "{line}").map_err(transport)?;
        self.writer.flush().map_err(transport)?;
        match self.receive()? {
            ServerBody::Error { code, detail, .. } => Err(InterfaceError::Remote {
                code: code.as_str().to_owned(),
                detail,
            }),
            reply => Ok(reply),
        }
    }

    fn ack(&mut self, request: Request) -> Result<(), InterfaceError> {
        match self.request(request)? {
            ServerBody::Ack { .. } => Ok(()),
            other => Err(unexpected(&other)),
        }
    }

    fn value(&mut self, request: Request) -> Result<u64, InterfaceError> {
        match self.request(request)? {
            ServerBody::Value { value, .. } => Ok(value),
            other => Err(unexpected(&other)),
        }
    }

    /// Asks the server to execute the current timestep.
    pub fn step(&mut self) -> Result<TraceRecord, InterfaceError> {
        match self.request(Request::Step)? {
            ServerBody::StepComplete { record, .. } => {
                self.await_step_start()?;
                Ok(record)
            }
            other => Err(unexpected(&other)),
        }
    }

    /// Runs `manager` against the remote simulation until the run completes.
    pub fn drive(&mut self, manager: &mut dyn AdaptationManager) -> Result<RemoteRun, ManagerError> {
        let mut trace = Vec::new();
        while let Some(t) = self.next_timestep {
            manager.adapt(t, self)?;
            trace.push(self.step()?);
        }
        let summary = self
            .summary
            .ok_or_else(|| transport("run ended without a summary"))?;
        Ok(RemoteRun { trace, summary })
    }
}

impl<R: BufRead, W: Write> Probe for RemoteSystem<R, W> {
    fn get_current_topology(&mut self) -> Result<Topology, InterfaceError> {
        match self.request(Request::GetCurrentTopology)? {
            ServerBody::Topology { topology, .. } => Ok(topology),
            other => Err(unexpected(&other)),
        }
    }

    fn get_bandwidth_consumption(&mut self) -> Result<u64, InterfaceError> {
        self.value(Request::GetBandwidthConsumption)
    }

    fn get_active_links(&mut self) -> Result<u32, InterfaceError> {
        let v = self.value(Request::GetActiveLinks)?;
        u32::try_from(v).map_err(transport)
    }

    fn get_time_to_write(&mut self) -> Result<u64, InterfaceError> {
        self.value(Request::GetTimeToWrite)
    }

    fn get_monitorables(&mut self) -> Result<Monitorables, InterfaceError> {
        match self.request(Request::GetMonitorables)? {
            ServerBody::Monitorables { monitorables, .. } => Ok(monitorables),
            other => Err(unexpected(&other)),
        }
    }
}

impl<R: BufRead, W: Write> Effector for RemoteSystem<R, W> {
    fn set_network_topology(&mut self, timestep: u32, topology: Topology) -> Result<(), InterfaceError> {
        self.ack(Request::SetNetworkTopology { timestep, topology })
    }

    fn set_active_links(&mut self, active_links: i64) -> Result<(), InterfaceError> {
        self.ack(Request::SetActiveLinks { value: active_links })
    }

    fn set_time_to_write(&mut self, time_to_write: f64) -> Result<(), InterfaceError> {
        self.ack(Request::SetTimeToWrite { value: time_to_write })
    }

    fn set_bandwidth_consumption(&mut self, bandwidth_consumption: f64) -> Result<(), InterfaceError> {
        self.ack(Request::SetBandwidthConsumption {
            value: bandwidth_consumption,
        })
    }

    fn set_current_topology(&mut self, topology: Topology) -> Result<(), InterfaceError> {
        self.ack(Request::SetCurrentTopology { topology })
    }
}

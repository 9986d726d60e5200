//! Minimal remote agent endpoint.

use std::net::{SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

use super::packet::{CommandPacket, StatePacket};
use super::NetError;
use crate::physics::Team;

pub struct Client {
    socket: UdpSocket,
    server: SocketAddr,
}

impl Client {
    /// Bind an ephemeral local socket talking to the server's command address.
    pub fn connect(server: SocketAddr) -> Result<Self, NetError> {
        let local: SocketAddr = if server.is_ipv4() { "127.0.0.1:0" } else { "[::1]:0" }.parse().expect("literal address");
        let socket = UdpSocket::bind(local).map_err(NetError::Bind)?;
        Ok(Self { socket, server })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, NetError> {
        Ok(self.socket.local_addr()?)
    }

    /// An empty command packet: subscribes this socket to state packets.
    pub fn register(&self, team: Team) -> Result<(), NetError> {
        self.send(&CommandPacket::new(team, Vec::new()))
    }

    pub fn send(&self, packet: &CommandPacket) -> Result<(), NetError> {
        self.send_raw(&packet.encode())
    }

    pub fn send_raw(&self, bytes: &[u8]) -> Result<(), NetError> {
        self.socket.send_to(bytes, self.server)?;
        Ok(())
    }

    /// Next well-formed state packet, or `None` after `timeout`.
    pub fn recv_state(&self, timeout: Duration) -> Result<Option<StatePacket>, NetError> {
        let deadline = Instant::now() + timeout;
        let mut buf = vec![0u8; 65536];
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Ok(None);
            }
            self.socket.set_read_timeout(Some(left))?;
            match self.socket.recv_from(&mut buf) {
                Ok((n, _)) => {
                    if let Ok(p) = StatePacket::decode(&buf[..n]) {
                        return Ok(Some(p));
                    }
                }
                Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => return Ok(None),
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// First state packet whose frame is at least `frame`.
    pub fn wait_for_frame(&self, frame: u32, timeout: Duration) -> Result<Option<StatePacket>, NetError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.recv_state(left)? {
                Some(p) if p.frame >= frame => return Ok(Some(p)),
                Some(_) => {}
                None => return Ok(None),
            }
        }
    }
}

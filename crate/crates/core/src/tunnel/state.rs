use std::fmt;

use serde::Serialize;

use super::TunnelError;
use crate::attest::AttestationBundle;
use crate::clock::SimTime;
use crate::dht::NodeAddr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Phase {
    Idle,
    TempTunnel,
    LookupPending,
    Splicing,
    AwaitingProof,
    Authorized,
    Interrupted,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Idle,
        Phase::TempTunnel,
        Phase::LookupPending,
        Phase::Splicing,
        Phase::AwaitingProof,
        Phase::Authorized,
        Phase::Interrupted,
    ];

    /// Forward edges of the chain, plus interruption from any phase between
    /// opening the temporary tunnel and the gate decision.
    pub fn can_move_to(self, next: Phase) -> bool {
        use Phase::*;
        matches!(
            (self, next),
            (Idle, TempTunnel)
                | (TempTunnel, LookupPending)
                | (LookupPending, Splicing)
                | (Splicing, AwaitingProof)
                | (AwaitingProof, Authorized)
                | (TempTunnel | LookupPending | Splicing | AwaitingProof, Interrupted)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Authorized | Phase::Interrupted)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InterruptReason {
    WindowExpired,
    ExitUnavailable,
    UntrustedRelay,
    ProofRejected,
    Malformed,
    ProofFailed,
}

/// Per-session state of one S→X→A chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub session_id: u64,
    phase: Phase,
    pub client: NodeAddr,
    pub relay: NodeAddr,
    pub exit: Option<NodeAddr>,
    pub destination: NodeAddr,
    pub window_deadline: Option<SimTime>,
    pub attestation: Option<AttestationBundle>,
    pub interrupt_reason: Option<InterruptReason>,
    history: Vec<(SimTime, Phase)>,
}

/// What the relay does with not-yet-authorized traffic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowDecision {
    Forward,
    Drop,
}

impl ChainState {
    pub fn new(session_id: u64, client: NodeAddr, relay: NodeAddr, destination: NodeAddr) -> Self {
        ChainState {
            session_id,
            phase: Phase::Idle,
            client,
            relay,
            exit: None,
            destination,
            window_deadline: None,
            attestation: None,
            interrupt_reason: None,
            history: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Every phase entered so far, with the time it was entered.
    pub fn history(&self) -> &[(SimTime, Phase)] {
        &self.history
    }

    /// Moves along a forward edge. Interruption needs a reason and goes
    /// through [`ChainState::interrupt`] instead.
    pub fn transition(&mut self, next: Phase, now: SimTime) -> Result<(), TunnelError> {
        if next == Phase::Interrupted {
            return Err(TunnelError::Precondition("interruption needs a reason"));
        }
        self.step(next, now)
    }

    fn step(&mut self, next: Phase, now: SimTime) -> Result<(), TunnelError> {
        if !self.phase.can_move_to(next) {
            return Err(TunnelError::IllegalTransition { from: self.phase, to: next });
        }
        self.phase = next;
        self.history.push((now, next));
        Ok(())
    }

    /// Opens the temporary tunnel through the relay and starts the window.
    pub fn open(&mut self, now: SimTime, window: SimTime) -> Result<(), TunnelError> {
        self.transition(Phase::TempTunnel, now)?;
        self.window_deadline = Some(now + window);
        Ok(())
    }

    /// Records the provider found by the lookup and enters `Splicing`.
    pub fn splice(&mut self, exit: NodeAddr, now: SimTime) -> Result<(), TunnelError> {
        if self.phase != Phase::LookupPending {
            return Err(TunnelError::Precondition("splice needs a completed lookup"));
        }
        self.transition(Phase::Splicing, now)?;
        self.exit = Some(exit);
        Ok(())
    }

    pub fn interrupt(&mut self, reason: InterruptReason, now: SimTime) -> Result<(), TunnelError> {
        self.step(Phase::Interrupted, now)?;
        self.interrupt_reason = Some(reason);
        Ok(())
    }

    /// Relay-side check on unauthorized traffic. Past the deadline the
    /// session is interrupted and everything is dropped from then on.
    pub fn enforce_window(&mut self, now: SimTime) -> WindowDecision {
        match self.phase {
            Phase::Authorized => WindowDecision::Forward,
            Phase::Interrupted | Phase::Idle => WindowDecision::Drop,
            _ => match self.window_deadline {
                Some(deadline) if now < deadline => WindowDecision::Forward,
                _ => {
                    self.interrupt(InterruptReason::WindowExpired, now).expect("non-terminal phase can be interrupted");
                    WindowDecision::Drop
                }
            },
        }
    }
}

/// Opens a session. Fails without side effects when the relay is unreachable.
pub fn start_session(
    session_id: u64,
    client: NodeAddr,
    relay: NodeAddr,
    destination: NodeAddr,
    relay_reachable: bool,
    now: SimTime,
    window: SimTime,
) -> Result<ChainState, TunnelError> {
    if !relay_reachable {
        return Err(TunnelError::Unreachable(relay));
    }
    let mut state = ChainState::new(session_id, client, relay, destination);
    state.open(now, window)?;
    Ok(state)
}

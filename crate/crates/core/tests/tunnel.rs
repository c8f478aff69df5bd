//! Model check of the chain state machine: every operation sequence up to
//! length 5 over a small alphabet, then 10^5 random longer traces, each
//! replayed against an independent edge list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vpn0_core::clock::SimTime;
use vpn0_core::dht::NodeAddr;
use vpn0_core::tunnel::{ChainState, InterruptReason, Phase, WindowDecision};

const WINDOW: SimTime = SimTime::from_secs(30);

// Legal edges, written out by hand.
const EDGES: [(Phase, Phase); 9] = [
    (Phase::Idle, Phase::TempTunnel),
    (Phase::TempTunnel, Phase::LookupPending),
    (Phase::LookupPending, Phase::Splicing),
    (Phase::Splicing, Phase::AwaitingProof),
    (Phase::AwaitingProof, Phase::Authorized),
    (Phase::TempTunnel, Phase::Interrupted),
    (Phase::LookupPending, Phase::Interrupted),
    (Phase::Splicing, Phase::Interrupted),
    (Phase::AwaitingProof, Phase::Interrupted),
];

fn legal(from: Phase, to: Phase) -> bool {
    EDGES.contains(&(from, to))
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Move(Phase),
    Open,
    Splice,
    Interrupt,
    EnforceEarly,
    EnforceLate,
}

fn alphabet() -> Vec<Op> {
    let mut ops: Vec<Op> = Phase::ALL.iter().map(|&p| Op::Move(p)).collect();
    ops.extend([Op::Open, Op::Splice, Op::Interrupt, Op::EnforceEarly, Op::EnforceLate]);
    ops
}

/// Applies `ops` to a fresh chain, checking each step against the edge list
/// and the absorbing rules. Panics with the trace on the first violation.
fn replay(ops: &[Op]) {
    let mut chain = ChainState::new(1, NodeAddr(0), NodeAddr(1), NodeAddr(2));
    let mut now = SimTime::ZERO;
    for (step, &op) in ops.iter().enumerate() {
        now = now + SimTime::from_millis(10);
        let before = chain.phase();
        let expected = match op {
            Op::Move(p) => (p != Phase::Interrupted && legal(before, p)).then_some(p),
            Op::Open => legal(before, Phase::TempTunnel).then_some(Phase::TempTunnel),
            Op::Splice => (before == Phase::LookupPending).then_some(Phase::Splicing),
            Op::Interrupt => legal(before, Phase::Interrupted).then_some(Phase::Interrupted),
            Op::EnforceEarly | Op::EnforceLate => None,
        };
        match op {
            Op::Move(p) => assert_eq!(chain.transition(p, now).is_ok(), expected.is_some(), "{ops:?} @{step}"),
            Op::Open => assert_eq!(chain.open(now, WINDOW).is_ok(), expected.is_some(), "{ops:?} @{step}"),
            Op::Splice => assert_eq!(chain.splice(NodeAddr(3), now).is_ok(), expected.is_some(), "{ops:?} @{step}"),
            Op::Interrupt => {
                assert_eq!(chain.interrupt(InterruptReason::ProofRejected, now).is_ok(), expected.is_some(), "{ops:?} @{step}")
            }
            Op::EnforceEarly | Op::EnforceLate => {
                let at = match (op, chain.window_deadline) {
                    (Op::EnforceLate, Some(d)) => d + SimTime::from_secs(1),
                    (_, Some(d)) => d.saturating_sub(SimTime::from_secs(1)),
                    (_, None) => now,
                };
                let decision = chain.enforce_window(at);
                let want = match before {
                    Phase::Authorized => WindowDecision::Forward,
                    Phase::Interrupted | Phase::Idle => WindowDecision::Drop,
                    _ if matches!(op, Op::EnforceEarly) && chain.window_deadline.is_some() => WindowDecision::Forward,
                    _ => WindowDecision::Drop,
                };
                assert_eq!(decision, want, "{ops:?} @{step}");
                if want == WindowDecision::Drop && !matches!(before, Phase::Authorized | Phase::Interrupted | Phase::Idle) {
                    assert_eq!(chain.phase(), Phase::Interrupted);
                    assert_eq!(chain.interrupt_reason, Some(InterruptReason::WindowExpired));
                    continue;
                }
            }
        }
        assert_eq!(chain.phase(), expected.unwrap_or(before), "{ops:?} @{step}");
    }
    let mut prev = Phase::Idle;
    for &(_, p) in chain.history() {
        assert!(legal(prev, p), "{ops:?}: {prev} -> {p}");
        prev = p;
    }
    if chain.phase() == Phase::Interrupted {
        assert!(chain.interrupt_reason.is_some());
    }
}

#[test]
fn all_short_traces_are_legal() {
    let ops = alphabet();
    let mut trace = Vec::new();
    let mut count = 0usize;
    fn walk(ops: &[Op], trace: &mut Vec<Op>, depth: usize, count: &mut usize) {
        replay(trace);
        *count += 1;
        if depth == 0 {
            return;
        }
        for &op in ops {
            trace.push(op);
            walk(ops, trace, depth - 1, count);
            trace.pop();
        }
    }
    walk(&ops, &mut trace, 5, &mut count);
    let n = ops.len();
    assert_eq!(count, (0..=5).map(|d| n.pow(d)).sum::<usize>());
}

#[test]
fn random_traces_are_legal() {
    let ops = alphabet();
    let mut rng = ChaCha20Rng::seed_from_u64(0x7e57);
    for _ in 0..100_000 {
        let len = rng.gen_range(1..=24);
        // bias toward the honest path so deep phases are reached often
        let trace: Vec<Op> = (0..len)
            .map(|i| match rng.gen_range(0..3) {
                0 => [Op::Open, Op::Move(Phase::LookupPending), Op::Splice, Op::Move(Phase::AwaitingProof), Op::Move(Phase::Authorized)]
                    [i % 5],
                _ => ops[rng.gen_range(0..ops.len())],
            })
            .collect();
        replay(&trace);
    }
}

#[test]
fn interrupted_sessions_never_leave_interrupted() {
    let mut chain = ChainState::new(1, NodeAddr(0), NodeAddr(1), NodeAddr(2));
    chain.open(SimTime::ZERO, WINDOW).unwrap();
    chain.interrupt(InterruptReason::WindowExpired, SimTime::from_secs(1)).unwrap();
    for p in Phase::ALL {
        assert!(chain.transition(p, SimTime::from_secs(2)).is_err());
    }
    assert_eq!(chain.enforce_window(SimTime::from_secs(2)), WindowDecision::Drop);
}

"""Physical-plane models.

* heralded link generation on the attempt grid of an abstracted
  midpoint-source link layer, gated by per-link-side memory capacity,
* the ground-truth entanglement registry owning every pair's Bell-diagonal
  state, with lazy per-qubit dephasing and storage cutoff,
* classical channels with fixed per-hop propagation delay.

The registry is the single owner of quantum state: protocol nodes only hold
endpoint ids, and every gate, swap, purification and delivery funnels through
registry operations which first apply the dephasing accumulated since each
qubit's previous interaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import belldiag
from .belldiag import BellCoeffs, NoiseParams, PauliFrame, PHI_PLUS
from .engine import EventEngine, RandomStreams, geometric_failures


@dataclass(frozen=True)
class LinkGenParams:
    """Abstracted midpoint-source link layer parameters."""

    attempt_period: float = 1e-5     # seconds between generation attempts
    success_prob: float = 0.1        # heralded success probability per attempt
    modes: int = 16                  # max stored pairs per link side
    herald_delay: float = 3.75e-5    # midpoint-to-node notification delay

    def __post_init__(self):
        if self.attempt_period <= 0.0:
            raise ValueError("attempt_period must be > 0")
        if not 0.0 < self.success_prob <= 1.0:
            raise ValueError("success_prob must be in (0, 1]")
        if self.modes < 1:
            raise ValueError("modes must be >= 1")
        if self.herald_delay < 0.0:
            raise ValueError("herald_delay must be >= 0")


class DeadPairError(Exception):
    """A registry operation referenced a retired pair."""


@dataclass(slots=True)
class Qubit:
    """One stored qubit: its memory slot and storage-time bookkeeping."""

    node: int
    link_index: int     # index of the link whose memory slot it occupies
    side: int           # 0 = slot at the link's downstream node, 1 = upstream
    birth: float
    last_touch: float
    consumed: bool


@dataclass
class RegistryEntry:
    """Ground truth for one live entangled pair.

    ``endpoints`` maps each side to the (node, local pair id) the protocol
    uses; ``outcome_xor`` accumulates every swap outcome folded into this
    pair, for checking delivered Pauli frames.
    """

    entry_id: int
    state: BellCoeffs
    qubits: tuple[Qubit, Qubit]
    endpoints: tuple[tuple[int, int], tuple[int, int]]
    outcome_xor: PauliFrame
    alive: bool = True
    cause: Optional[str] = None

    def endpoint_for(self, node: int) -> tuple[int, int]:
        for ep in self.endpoints:
            if ep[0] == node:
                return ep
        raise KeyError(f"node {node} holds no end of entry {self.entry_id}")


RETIRE_CAUSES = ("delivered", "swapped", "ancilla", "failure", "cutoff")


class Registry:
    """Owns all live pairs; every state mutation passes through here."""

    def __init__(self, noise: NoiseParams, streams: RandomStreams):
        self.noise = noise
        self.streams = streams
        self.entries: dict[int, RegistryEntry] = {}
        self.by_endpoint: dict[tuple[int, int], int] = {}
        self._next_id = 0
        self.retired: dict[str, int] = {cause: 0 for cause in RETIRE_CAUSES}
        self.created = 0

    # -- lookup ------------------------------------------------------------

    def entry(self, entry_id: int) -> RegistryEntry:
        e = self.entries.get(entry_id)
        if e is None or not e.alive:
            raise DeadPairError(f"entry {entry_id} is not alive")
        return e

    def entry_by_endpoint(self, node: int, pair_id: int) -> RegistryEntry:
        entry_id = self.by_endpoint.get((node, pair_id))
        if entry_id is None:
            raise DeadPairError(f"no live pair for endpoint ({node}, {pair_id})")
        return self.entry(entry_id)

    def find_endpoint(self, node: int, pair_id: int) -> Optional[RegistryEntry]:
        entry_id = self.by_endpoint.get((node, pair_id))
        return self.entries[entry_id] if entry_id is not None else None

    # -- lifecycle ---------------------------------------------------------

    def create_link_pair(self, link_index: int, nodes: tuple[int, int],
                         pair_ids: tuple[int, int], herald_time: float) -> RegistryEntry:
        """Register a freshly heralded link pair, both sides depolarized."""
        state = belldiag.depolarize_one_side(PHI_PLUS, self.noise.p0_depol)
        state = belldiag.depolarize_one_side(state, self.noise.p0_depol)
        qubits = (
            Qubit(nodes[0], link_index, 0, herald_time, herald_time, False),
            Qubit(nodes[1], link_index, 1, herald_time, herald_time, False),
        )
        entry = RegistryEntry(
            entry_id=self._next_id, state=state, qubits=qubits,
            endpoints=((nodes[0], pair_ids[0]), (nodes[1], pair_ids[1])),
            outcome_xor=belldiag.FRAME_I)
        self._next_id += 1
        self.created += 1
        self.entries[entry.entry_id] = entry
        for ep in entry.endpoints:
            self.by_endpoint[ep] = entry.entry_id
        return entry

    def _retire(self, entry: RegistryEntry, cause: str,
                keep_qubits: tuple[Qubit, ...] = ()) -> None:
        entry.alive = False
        entry.cause = cause
        self.retired[cause] += 1
        for ep in entry.endpoints:
            self.by_endpoint.pop(ep, None)
        for q in entry.qubits:
            if q not in keep_qubits:
                q.consumed = True

    # -- quantum operations ------------------------------------------------

    def touch(self, entry: RegistryEntry, now: float) -> None:
        """Apply each qubit's dephasing for its interval since last touch.

        Called before any gate, swap, purification or delivery involving the
        pair; zero-elapsed touches leave the state unchanged.
        """
        if not entry.alive:
            raise DeadPairError(f"entry {entry.entry_id} is not alive")
        rate = self.noise.dephase_rate
        for q in entry.qubits:
            dt = now - q.last_touch
            if dt > 0.0:
                if rate > 0.0:
                    entry.state = belldiag.dephase(entry.state, dt, rate)
                q.last_touch = now

    def swap(self, node: int, pair_a: int, pair_b: int,
             now: float) -> tuple[RegistryEntry, PauliFrame]:
        """Entanglement swap at ``node`` between its two named endpoints.

        Gate noise: one depolarization per middle qubit for the two-qubit
        gate, one more per middle qubit for its measurement. The Bell
        measurement outcome is drawn uniformly; the composed state is
        post-correction and outcome independent.
        """
        entry_a = self.entry_by_endpoint(node, pair_a)
        entry_b = self.entry_by_endpoint(node, pair_b)
        if entry_a is entry_b:
            raise DeadPairError("cannot swap a pair with itself")
        self.touch(entry_a, now)
        self.touch(entry_b, now)
        p_err = self.noise.gate_depol
        state_a = entry_a.state
        state_b = entry_b.state
        for _ in range(2):  # gate, then measurement, on each middle qubit
            state_a = belldiag.depolarize_one_side(state_a, p_err)
            state_b = belldiag.depolarize_one_side(state_b, p_err)
        rng = self.streams.get(f"swap.{node}")
        outcome = PauliFrame.from_index(rng.randrange(4))
        state, _ = belldiag.swap_compose(state_a, state_b, outcome)

        far_a = next(q for q in entry_a.qubits if q.node != node)
        far_b = next(q for q in entry_b.qubits if q.node != node)
        ep_a = next(ep for ep in entry_a.endpoints if ep[0] != node)
        ep_b = next(ep for ep in entry_b.endpoints if ep[0] != node)
        self._retire(entry_a, "swapped", keep_qubits=(far_a,))
        self._retire(entry_b, "swapped", keep_qubits=(far_b,))
        entry = RegistryEntry(
            entry_id=self._next_id, state=state, qubits=(far_a, far_b),
            endpoints=(ep_a, ep_b),
            outcome_xor=entry_a.outcome_xor ^ entry_b.outcome_xor ^ outcome)
        self._next_id += 1
        self.created += 1
        self.entries[entry.entry_id] = entry
        for ep in entry.endpoints:
            self.by_endpoint[ep] = entry.entry_id
        return entry, outcome

    def purify(self, kept: RegistryEntry, ancilla: RegistryEntry,
               node: int, now: float) -> tuple[bool, float]:
        """Resolve one purification round; retires the ancilla always.

        Gate noise: one depolarization per qubit of both pairs for the local
        gates, plus one more per measured ancilla qubit. On success the kept
        state becomes the post-selected output; on failure the kept pair is
        retired (both endpoints are then released by the protocol).
        """
        self.touch(kept, now)
        self.touch(ancilla, now)
        p_err = self.noise.gate_depol
        kept_state = belldiag.depolarize_one_side(
            belldiag.depolarize_one_side(kept.state, p_err), p_err)
        anc_state = ancilla.state
        for _ in range(4):  # gate per side, then measurement per side
            anc_state = belldiag.depolarize_one_side(anc_state, p_err)
        p_succ, post = belldiag.dejmps(kept_state, anc_state)
        rng = self.streams.get(f"purif.{node}")
        ok = p_succ > 0.0 and rng.random() < p_succ
        self._retire(ancilla, "ancilla")
        if ok:
            kept.state = post
        else:
            self._retire(kept, "failure")
        return ok, p_succ

    def deliver(self, entry: RegistryEntry, now: float) -> float:
        """Consume an end-to-end pair; returns its delivered fidelity."""
        self.touch(entry, now)
        fidelity = entry.state.fidelity
        self._retire(entry, "delivered")
        return fidelity

    def cut(self, entry: RegistryEntry) -> None:
        self._retire(entry, "cutoff")

    def release_failure(self, entry: RegistryEntry) -> None:
        self._retire(entry, "failure")

    def live_count(self) -> int:
        return sum(1 for e in self.entries.values() if e.alive)


def attempt_link_generation(rng, success_prob: float,
                            capacity_free: bool) -> Optional[bool]:
    """One Bernoulli generation attempt on the attempt grid.

    Returns None when skipped for capacity, else whether the attempt
    heralded a pair. The production scheduler consumes the same process in
    geometric jumps (identical distribution, one event per success).
    """
    if not capacity_free:
        return None
    return rng.random() < success_prob


class LinkScheduler:
    """Drives one link's generation attempts, gated by side capacities.

    Attempts sit on the grid ``start + j*period``. Instead of dispatching one
    event per attempt, the scheduler samples the number of failures before the
    next success geometrically and schedules that success directly; attempts
    skipped while a side is at capacity are counted arithmetically.
    """

    def __init__(self, link_index: int, nodes: tuple[int, int],
                 params: LinkGenParams, engine: EventEngine,
                 streams: RandomStreams,
                 on_success: Callable[[int, float], None]):
        self.link_index = link_index
        self.nodes = nodes
        self.params = params
        self.engine = engine
        self.rng = streams.get(f"linkgen.{link_index}")
        self.on_success = on_success
        self.start_time: Optional[float] = None
        self.next_attempt = 0          # index on the attempt grid
        self.stalled = False
        self.stall_from: Optional[int] = None
        self.occupancy = [0, 0]        # live + in-flight pairs per side
        self.attempts_failed = 0
        self.attempts_skipped = 0
        self.closed = False

    def start(self, now: float) -> None:
        if self.start_time is not None:
            return
        self.start_time = now
        self._schedule_next_success()

    def close(self) -> None:
        self.closed = True

    def _attempt_time(self, j: int) -> float:
        return self.start_time + j * self.params.attempt_period

    def _schedule_next_success(self) -> None:
        if self.closed:
            return
        if max(self.occupancy) >= self.params.modes:
            if not self.stalled:
                self.stalled = True
                self.stall_from = self.next_attempt
            return
        failures = geometric_failures(self.rng, self.params.success_prob)
        self.attempts_failed += failures
        j = self.next_attempt + failures
        self.next_attempt = j + 1
        self.occupancy[0] += 1
        self.occupancy[1] += 1
        self.engine.schedule(self._attempt_time(j), "AttemptTick",
                             lambda j=j: self._succeed(j))

    def _succeed(self, j: int) -> None:
        if self.closed:
            self.occupancy[0] -= 1
            self.occupancy[1] -= 1
            return
        herald_time = self._attempt_time(j) + self.params.herald_delay
        self.engine.schedule(herald_time, "LinkHeralded",
                             lambda: self.on_success(self.link_index, self.engine.now))
        self._schedule_next_success()

    def slot_freed(self, side: int) -> None:
        """A stored qubit on ``side`` was consumed or released."""
        self.occupancy[side] -= 1
        if self.stalled and max(self.occupancy) < self.params.modes:
            self.stalled = False
            now = self.engine.now
            if self.start_time is None:
                return
            resume = max(self.next_attempt,
                         math.ceil((now - self.start_time) / self.params.attempt_period))
            self.attempts_skipped += resume - self.stall_from
            self.next_attempt = resume
            self.stall_from = None
            self._schedule_next_success()


@dataclass(frozen=True)
class ClassicalChannel:
    """One hop of the classical control plane; FIFO per direction."""

    nodes: tuple[int, int]
    latency: float


def hop_latency(link_length_m: float, signal_speed: float) -> float:
    return link_length_m / signal_speed

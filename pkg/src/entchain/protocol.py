"""Control plane: tunnel configuration, ranks, the endpoint FSM and the
swap/purification orchestration that drives a chain of nodes.

Rank semantics
--------------
Each node on the path carries an integer rank. Rank-0 nodes swap as soon as
both their pairs are ready; a node of rank r swaps a segment only once it
knows the segment's far end sits on a node of rank >= r, which it learns
either at herald time (adjacent neighbor ranks are static) or by consuming a
SWAP_UPDATE. The end nodes share the maximum rank so that they only hear
about a segment when it spans the whole chain.

From the static rank vector every node derives its swapping destinations
(nearest node per direction with *strictly higher* rank) and swapping
neighbors (nearest per direction with *equal or higher* rank). A node
originates the upstream-traveling SWAP_UPDATE after its own swap exactly when
its downstream swapping neighbor coincides with its downstream destination
(no update will ever arrive from below to extend), and mirror for the
downstream-traveling one.

Update routing and Pauli frames
-------------------------------
A SWAP_UPDATE names a fixed end (node, pair) and a moving end (node, pair) of
the segment it describes, travels hop by hop toward the moving end, and
carries the XOR of the swap outcomes that the moving end's holder does not yet
know. At each hop:

* holder of the moving endpoint with rank > origin rank: CONSUME -- rebind the
  endpoint to the fixed end, fold the carried frame into the endpoint frame,
  re-evaluate readiness;
* holder of the moving endpoint at origin rank: HOLD until the local swap
  retires that endpoint, then merge;
* the moving endpoint already sits in a local swap record: MERGE -- XOR in the
  record's outcome and the consumed endpoint's frame-at-swap, advance the
  moving end to the record's other side, forward;
* otherwise: pure relay.

With this rule an endpoint's accumulated frame always equals the XOR of every
swap outcome interior to its segment; at delivery both end frames equal the
registry's ground-truth outcome XOR (checked in strict mode).

Purification
------------
The lower-ranked holder of a segment initiates (ties broken downstream), and
consumes one same-stage ancilla pair per round: an endpoint of the same
segment span whose round counter matches the kept pair's. The solicited side
executes the round on SOLICIT receipt and answers OK/FAIL; equal-rank
solicited endpoints advance their counter with the initiator, higher-ranked
ones stay in WAIT and never count (their own rank's rounds come later).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .belldiag import FRAME_I, PauliFrame


class ConfigError(ValueError):
    """Tunnel configuration violates a structural invariant."""


class ProtocolError(Exception):
    """A node received a message it cannot reconcile with its state."""


# ---------------------------------------------------------------------------
# rank vector generators


def ranks_parallel(n: int) -> list[int]:
    """All repeaters swap concurrently: [1, 0, ..., 0, 1]."""
    if n < 3:
        raise ConfigError(f"chain needs at least 3 nodes, got {n}")
    return [1] + [0] * (n - 2) + [1]


def ranks_consecutive(n: int) -> list[int]:
    """Swaps ripple upstream one node at a time: [n-2, 0, 1, ..., n-3, n-2]."""
    if n < 3:
        raise ConfigError(f"chain needs at least 3 nodes, got {n}")
    return [n - 2] + list(range(n - 2)) + [n - 2]


def ranks_nested(n: int) -> list[int]:
    """Recursive doubling order; requires n = 2^k + 1 nodes.

    R_i = max r in {0..k} with i divisible by 2^r (R_0 = R_{n-1} = k).
    """
    if n < 3:
        raise ConfigError(f"chain needs at least 3 nodes, got {n}")
    k = (n - 1).bit_length() - 1
    if 2 ** k + 1 != n:
        raise ConfigError(
            f"nested ranks require a node count of the form 2^k + 1, got {n}")
    ranks = []
    for i in range(n):
        r = k
        while i % (2 ** r) != 0:
            r -= 1
        ranks.append(r)
    return ranks


RANK_GENERATORS = {
    "parallel": ranks_parallel,
    "consecutive": ranks_consecutive,
    "nested": ranks_nested,
}


# ---------------------------------------------------------------------------
# tunnel configuration and per-node plans


@dataclass(frozen=True)
class TunnelConfig:
    """The (path, ranks, purification rounds, pair budget) tuple of a tunnel."""

    nodes: tuple[int, ...]          # node identifiers in path order
    ranks: tuple[int, ...]
    purif_rounds: tuple[int, ...]   # rounds per rank, length max(ranks)+1
    pairs_target: int               # end-to-end pairs to deliver (K)

    @classmethod
    def build(cls, ranks: list[int], purif_rounds: list[int],
              pairs_target: int) -> "TunnelConfig":
        return cls(tuple(range(len(ranks))), tuple(ranks),
                   tuple(purif_rounds), pairs_target)


@dataclass(frozen=True)
class NodePlan:
    """One node's static view of the rank vector.

    ``swap_dest``/``swap_neighbor`` hold (downstream, upstream) node indices,
    None where no qualifying node exists (end nodes have one-sided plans).
    """

    index: int
    rank: int
    swap_dest: tuple[Optional[int], Optional[int]]
    swap_neighbor: tuple[Optional[int], Optional[int]]
    generates_downstream_update: bool
    generates_upstream_update: bool
    is_end: bool


def _nearest(ranks: tuple[int, ...], i: int, step: int, minimum: int,
             strict: bool) -> Optional[int]:
    j = i + step
    while 0 <= j < len(ranks):
        if ranks[j] > minimum or (not strict and ranks[j] == minimum):
            return j
        j += step
    return None


def validate_config(config: TunnelConfig) -> list[NodePlan]:
    """Check structural invariants and compute every node's plan.

    Each violated invariant is reported by name; all violations are collected
    into a single error.
    """
    ranks = config.ranks
    n = len(config.nodes)
    problems = []
    if n < 3:
        problems.append(f"path too short: {n} nodes, need >= 3")
    if len(ranks) != n:
        problems.append(f"rank vector length {len(ranks)} != path length {n}")
    if any(r < 0 for r in ranks):
        problems.append(f"negative rank in {list(ranks)}")
    if config.pairs_target < 1:
        problems.append(f"pair budget must be >= 1, got {config.pairs_target}")
    if problems:
        raise ConfigError("; ".join(problems))

    r_max = max(ranks)
    if ranks[0] != r_max or ranks[-1] != r_max:
        problems.append(
            f"end nodes must share the maximum rank {r_max}, got "
            f"{ranks[0]} and {ranks[-1]}")
    for i in range(1, n - 1):
        if ranks[i] == r_max:
            problems.append(
                f"interior node {i} has maximal rank {r_max}, leaving its "
                f"swapping destinations undefined")
    if len(config.purif_rounds) != r_max + 1:
        problems.append(
            f"purification vector length {len(config.purif_rounds)} != "
            f"max rank + 1 = {r_max + 1}")
    if any(p < 0 for p in config.purif_rounds):
        problems.append(f"negative purification count in {list(config.purif_rounds)}")
    if problems:
        raise ConfigError("; ".join(problems))

    plans = []
    for i, rank in enumerate(ranks):
        sd = (_nearest(ranks, i, -1, rank, strict=True),
              _nearest(ranks, i, +1, rank, strict=True))
        sn = (_nearest(ranks, i, -1, rank, strict=False),
              _nearest(ranks, i, +1, rank, strict=False))
        is_end = i == 0 or i == n - 1
        plans.append(NodePlan(
            index=i, rank=rank, swap_dest=sd, swap_neighbor=sn,
            generates_upstream_update=(not is_end and sn[0] == sd[0]),
            generates_downstream_update=(not is_end and sn[1] == sd[1]),
            is_end=is_end,
        ))
    return plans


# ---------------------------------------------------------------------------
# endpoint finite state machine


class EndpointState(Enum):
    WAIT = "WAIT"
    PURIF = "PURIF"
    PENDING = "PENDING"
    RELEASE = "RELEASE"
    ELIGIBLE = "ELIGIBLE"


# Forward-progress edges plus forced releases. Endpoints awaiting a higher
# rank's notification sit in WAIT while still subject to ancilla use,
# purification failure of their segment, and storage cutoff, so WAIT can fall
# directly to RELEASE; the same forced releases can hit any non-terminal
# state. RELEASE is terminal.
ALLOWED_TRANSITIONS = frozenset({
    (EndpointState.WAIT, EndpointState.PURIF),
    (EndpointState.PURIF, EndpointState.PENDING),
    (EndpointState.PENDING, EndpointState.PURIF),
    (EndpointState.PURIF, EndpointState.ELIGIBLE),
    (EndpointState.WAIT, EndpointState.RELEASE),
    (EndpointState.PURIF, EndpointState.RELEASE),
    (EndpointState.PENDING, EndpointState.RELEASE),
    (EndpointState.ELIGIBLE, EndpointState.RELEASE),
})

DOWNSTREAM = 0  # toward node 0
UPSTREAM = 1    # toward node n-1


@dataclass
class EndpointRecord:
    """One node's view of one entangled-pair endpoint."""

    pair_id: int
    side: int                     # DOWNSTREAM or UPSTREAM relative to holder
    far_node: int
    far_pair: int
    state: EndpointState
    purif_counter: int = 0
    frame: PauliFrame = FRAME_I
    created_at: float = 0.0
    last_touched: float = 0.0
    eligible_seq: int = -1
    history: Optional[list] = None  # transition log when auditing

    def transition(self, new_state: EndpointState, now: float) -> None:
        if (self.state, new_state) not in ALLOWED_TRANSITIONS:
            raise ProtocolError(
                f"illegal endpoint transition {self.state.value} -> "
                f"{new_state.value} (pair {self.pair_id})")
        if self.history is not None:
            self.history.append(new_state)
        self.state = new_state
        self.last_touched = now


def endpoint_ready_rank(endpoint: EndpointRecord, own_rank: int,
                        far_rank: int) -> bool:
    """WAIT -> PURIF trigger: the far end sits on a node of rank >= ours.

    Covers both the notified case (a consumed update placed the far end on an
    equal-or-higher-ranked node) and raw links whose adjacent far end already
    outranks the holder; the strictly higher-ranked side of a segment stays in
    WAIT until its own rank's notification arrives.
    """
    return endpoint.state is EndpointState.WAIT and far_rank >= own_rank


def purification_roles(down_rank: int, up_rank: int) -> tuple[int, int]:
    """(initiator side, solicited side) for one segment's two holders.

    The lowest ranked node initiates; on a tie the downstream node does.
    Returns DOWNSTREAM/UPSTREAM constants viewed from the segment.
    """
    if up_rank < down_rank:
        return UPSTREAM, DOWNSTREAM
    return DOWNSTREAM, UPSTREAM


# ---------------------------------------------------------------------------
# control messages


@dataclass
class NewTun:
    config: TunnelConfig


@dataclass
class SwapUpdate:
    origin_node: int
    origin_rank: int
    direction: int                       # travel direction, DOWNSTREAM/UPSTREAM
    fixed_node: int
    fixed_pair: int
    moving_node: int
    moving_pair: int
    frame: PauliFrame


@dataclass
class PurifSolicit:
    initiator_node: int
    solicited_node: int
    kept_local: int        # pair id at the initiator
    kept_far: int          # pair id at the solicited node
    ancilla_local: int
    ancilla_far: int
    initiator_rank: int
    outcome_bit: int


@dataclass
class PurifResponse:
    solicited_node: int
    initiator_node: int
    kept_local: int        # pair id at the solicited node
    kept_far: int          # pair id at the initiator (piggybacked)
    ancilla_far: int
    ok: bool


Message = NewTun | SwapUpdate | PurifSolicit | PurifResponse


@dataclass
class SwapRecordSide:
    pair_id: int
    far_node: int
    far_pair: int
    frame: PauliFrame


@dataclass
class SwapRecord:
    """Saved result of a completed local swap, kept for update merging."""

    down: SwapRecordSide
    up: SwapRecordSide
    outcome: PauliFrame

    def side_of(self, pair_id: int) -> tuple[SwapRecordSide, SwapRecordSide]:
        """(consumed side, surviving side) for the named endpoint."""
        if pair_id == self.down.pair_id:
            return self.down, self.up
        if pair_id == self.up.pair_id:
            return self.up, self.down
        raise KeyError(pair_id)


@dataclass
class ReleasedInfo:
    cause: str


@dataclass
class NodeState:
    """Mutable protocol state of one node; driven by the simulation run."""

    plan: NodePlan
    endpoints: dict[int, EndpointRecord] = field(default_factory=dict)
    swap_records: dict[int, SwapRecord] = field(default_factory=dict)
    held_updates: dict[int, list[SwapUpdate]] = field(default_factory=dict)
    released: dict[int, ReleasedInfo] = field(default_factory=dict)
    next_pair_id: int = 0

    def mint_pair_id(self) -> int:
        pid = self.next_pair_id
        self.next_pair_id += 1
        return pid

    def knows_pair(self, pair_id: int) -> bool:
        return (pair_id in self.endpoints or pair_id in self.swap_records
                or pair_id in self.released)

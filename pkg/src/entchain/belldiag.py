"""Exact algebra of two-qubit Bell-diagonal states.

Every entangled pair in the simulator is tracked as a probability vector over
the four Bell states, ordered

    index 0: (x=0, z=0)  Phi+
    index 1: (x=1, z=0)  Psi+
    index 2: (x=0, z=1)  Phi-
    index 3: (x=1, z=1)  Psi-

where the label (x, z) means the Pauli X^x Z^z applied to one half of Phi+.
With labels packed as ``x + 2*z``, the label group operation (component-wise
XOR) is plain integer XOR on indices, which makes entanglement swapping a
4-point XOR convolution.

All channels used here (one-sided depolarization, one-sided dephasing, swap
composition, the Deutsch/DEJMPS post-selection map) send Bell-diagonal states
to Bell-diagonal states, so this vector is a complete description. The
density-matrix brute-force counterparts live in :mod:`entchain.oracle` and are
used only to verify these closed forms.

All functions are pure; no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

ATOL = 1e-12


class PauliFrame(NamedTuple):
    """Two-bit Pauli correction (X^x Z^z) pending on one end of a pair.

    Frames compose by component-wise XOR.
    """

    x: int
    z: int

    def __xor__(self, other: "PauliFrame") -> "PauliFrame":
        return PauliFrame(self.x ^ other.x, self.z ^ other.z)

    def to_index(self) -> int:
        return self.x + 2 * self.z

    @classmethod
    def from_index(cls, idx: int) -> "PauliFrame":
        return cls(idx & 1, (idx >> 1) & 1)


FRAME_I = PauliFrame(0, 0)


class BellCoeffs(NamedTuple):
    """Probability vector over (Phi+, Psi+, Phi-, Psi-)."""

    phi_plus: float
    psi_plus: float
    phi_minus: float
    psi_minus: float

    @property
    def fidelity(self) -> float:
        """Fidelity with respect to Phi+ (component (0,0))."""
        return self.phi_plus


PHI_PLUS = BellCoeffs(1.0, 0.0, 0.0, 0.0)
MAXIMALLY_MIXED = BellCoeffs(0.25, 0.25, 0.25, 0.25)


@dataclass(frozen=True)
class NoiseParams:
    """Noise model parameters shared by the physical-plane models.

    p0_depol:       depolarization probability applied to each endpoint of a
                    newly generated link.
    dephase_rate:   exponential memory dephasing rate (1/s).
    coherence_time: time after which the dephasing probability reaches 5%;
                    also the storage cutoff threshold.
    gate_depol:     depolarization probability applied right before each
                    measurement and quantum gate.
    """

    p0_depol: float = 0.0
    dephase_rate: float = 0.0
    coherence_time: float = math.inf
    gate_depol: float = 0.0

    def __post_init__(self):
        for name in ("p0_depol", "gate_depol"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.dephase_rate < 0.0:
            raise ValueError(f"dephase_rate must be >= 0, got {self.dephase_rate}")
        if self.coherence_time <= 0.0:
            raise ValueError(f"coherence_time must be > 0, got {self.coherence_time}")

    @classmethod
    def from_coherence_time(cls, p0_depol: float, coherence_time: float,
                            gate_depol: float) -> "NoiseParams":
        return cls(p0_depol=p0_depol,
                   dephase_rate=rate_from_tc(coherence_time),
                   coherence_time=coherence_time,
                   gate_depol=gate_depol)


def validate(s: BellCoeffs, atol: float = ATOL) -> BellCoeffs:
    """Check that ``s`` is a probability vector; returns it unchanged."""
    if min(s) < -atol or max(s) > 1.0 + atol:
        raise ValueError(f"Bell coefficients out of [0, 1]: {s}")
    total = s[0] + s[1] + s[2] + s[3]
    if abs(total - 1.0) > atol:
        raise ValueError(f"Bell coefficients sum to {total}, expected 1")
    return s


def make_werner(fidelity: float) -> BellCoeffs:
    """Werner state: target fidelity on Phi+, remainder spread evenly."""
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must be in [0, 1], got {fidelity}")
    rest = (1.0 - fidelity) / 3.0
    return BellCoeffs(fidelity, rest, rest, rest)


def depolarize_one_side(s: BellCoeffs, p: float) -> BellCoeffs:
    """Single-qubit depolarization on one half of the pair.

    With probability ``p`` the qubit is replaced by the maximally mixed state;
    since the reduced state of either half of a Bell-diagonal pair is I/2,
    this sends each component p_k to (1-p)*p_k + p/4.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarization probability must be in [0, 1], got {p}")
    keep = 1.0 - p
    quarter = p * 0.25
    return BellCoeffs(keep * s[0] + quarter, keep * s[1] + quarter,
                      keep * s[2] + quarter, keep * s[3] + quarter)


def dephase(s: BellCoeffs, dt: float, r_d: float) -> BellCoeffs:
    """One-sided exponential memory dephasing over a storage interval.

    rho' = exp(-r_d*dt) rho + (1 - exp(-r_d*dt)) Z rho Z, applied to one
    qubit. Z on either half flips the z label, so with q = 1 - exp(-r_d*dt):

        p(x, z) -> (1-q) p(x, z) + q p(x, z^1)

    The map is not divisible (two applications over dt1, dt2 differ from one
    over dt1+dt2), so callers apply it exactly once per continuous storage
    interval per qubit, with the full elapsed dt.
    """
    if dt < 0.0:
        raise ValueError(f"storage interval must be >= 0, got {dt}")
    q = -math.expm1(-r_d * dt)
    keep = 1.0 - q
    return BellCoeffs(keep * s[0] + q * s[2], keep * s[1] + q * s[3],
                      keep * s[2] + q * s[0], keep * s[3] + q * s[1])


def rate_from_tc(tc: float) -> float:
    """Dephasing rate such that the dephasing probability at ``tc`` is 5%.

    Solves 1 - exp(-r*tc) = 0.05, i.e. r = -ln(0.95)/tc.
    """
    if not tc > 0.0:
        raise ValueError(f"coherence time must be > 0, got {tc}")
    if math.isinf(tc):
        return 0.0
    return -math.log(0.95) / tc


def convolve(a: BellCoeffs, b: BellCoeffs) -> BellCoeffs:
    """XOR convolution over 2-bit Pauli labels: c_u = sum_{v^w=u} a_v b_w.

    This is the post-correction state of an entanglement swap; it is
    commutative and associative.
    """
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return BellCoeffs(
        a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 + a3 * b2,
        a0 * b2 + a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 + a2 * b1 + a3 * b0,
    )


def swap_compose(a: BellCoeffs, b: BellCoeffs, outcome: PauliFrame,
                 frame_a: PauliFrame = FRAME_I,
                 frame_b: PauliFrame = FRAME_I) -> tuple[BellCoeffs, PauliFrame]:
    """Entanglement swap of two pairs sharing a node.

    Returns the post-correction state (independent of the Bell-measurement
    ``outcome``) and the accumulated correction for the new pair: the input
    pairs' frames XORed with the measurement outcome.
    """
    return convolve(a, b), frame_a ^ frame_b ^ outcome


def dejmps(kept: BellCoeffs, ancilla: BellCoeffs) -> tuple[float, BellCoeffs]:
    """Deutsch et al. recurrence purification step (DEJMPS), exact map.

    One side rotates both its qubits by exp(-i pi X/4), the other by
    exp(+i pi X/4); each side applies CNOT from the kept qubit to the ancilla
    qubit and measures the ancilla in the computational basis, keeping the
    pair when the outcomes agree. On Bell labels the bilateral rotation is the
    relabeling (x, z) -> (x^z, z) and the bilateral CNOT sends the kept label
    z to z1^z2 while the outcomes agree iff the rotated x labels match.

    Returns (success probability, renormalized kept state on success).
    A zero success probability signals a degenerate input on which
    purification is impossible; the state returned with it is meaningless and
    callers treat the round as a failure.

    Gate and measurement noise is applied by the caller to the input states
    before invoking this map.
    """
    a1, b1, c1, d1 = kept
    a2, b2, c2, d2 = ancilla
    p_succ = (a1 + d1) * (a2 + d2) + (b1 + c1) * (b2 + c2)
    if p_succ <= 0.0:
        return 0.0, kept
    inv = 1.0 / p_succ
    return p_succ, BellCoeffs(
        (a1 * a2 + d1 * d2) * inv,
        (b1 * b2 + c1 * c2) * inv,
        (a1 * d2 + d1 * a2) * inv,
        (b1 * c2 + c1 * b2) * inv,
    )

"""Brute-force density-matrix checks for the Bell-diagonal closed forms.

These build explicit 16x16 two-pair density matrices and push them through the
literal circuits (rotations, CNOTs, projective measurements, Bell-state
measurement with corrections). They exist purely to verify
:func:`entchain.belldiag.dejmps` and :func:`entchain.belldiag.convolve`;
nothing on the simulation path calls them.
"""

from __future__ import annotations

import math

import numpy as np

from .belldiag import BellCoeffs

RESIDUE_ATOL = 1e-10

_KET0 = np.array([1.0, 0.0], dtype=complex)
_KET1 = np.array([0.0, 1.0], dtype=complex)
_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# exp(-i pi X / 4) and its conjugate: the bilateral pre-rotation of DEJMPS.
_SQRT_MINUS_IX = (_I2 - 1j * _X) / math.sqrt(2)
_SQRT_PLUS_IX = (_I2 + 1j * _X) / math.sqrt(2)


def _kron(*ops: np.ndarray) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def bell_ket(x: int, z: int) -> np.ndarray:
    """|B_xz> = (X^x Z^z otimes I)|Phi+>."""
    phi_plus = (_kron(_KET0, _KET0) + _kron(_KET1, _KET1)) / math.sqrt(2)
    pauli = _X if x else _I2
    if z:
        pauli = pauli @ _Z
    return _kron(pauli, _I2) @ phi_plus


_BELL_KETS = [bell_ket(0, 0), bell_ket(1, 0), bell_ket(0, 1), bell_ket(1, 1)]


def bell_diagonal_dm(s: BellCoeffs) -> np.ndarray:
    """4x4 density matrix of a Bell-diagonal state."""
    rho = np.zeros((4, 4), dtype=complex)
    for p, ket in zip(s, _BELL_KETS):
        rho += p * np.outer(ket, ket.conj())
    return rho


def decompose_bell_diagonal(rho: np.ndarray, atol: float = RESIDUE_ATOL) -> BellCoeffs:
    """Bell-basis diagonal of a two-qubit density matrix.

    Raises if the off-diagonal (non-Bell-diagonal) residue exceeds ``atol`` --
    all maps checked here must preserve Bell-diagonal form.
    """
    coeffs = [float(np.real(ket.conj() @ rho @ ket)) for ket in _BELL_KETS]
    residue = rho - bell_diagonal_dm(BellCoeffs(*coeffs))
    worst = float(np.max(np.abs(residue)))
    if worst > atol:
        raise ValueError(f"state is not Bell-diagonal (residue {worst:.3e})")
    return BellCoeffs(*coeffs)


def _embed_one(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    ops = [_I2] * n
    ops[qubit] = op
    return _kron(*ops)


def _embed_cnot(control: int, target: int, n: int) -> np.ndarray:
    """CNOT on two of n qubits, big-endian qubit order."""
    dim = 2 ** n
    mat = np.zeros((dim, dim), dtype=complex)
    for basis in range(dim):
        c = (basis >> (n - 1 - control)) & 1
        out = basis ^ (c << (n - 1 - target))
        mat[out, basis] = 1.0
    return mat


def oracle_dejmps(kept: BellCoeffs, ancilla: BellCoeffs) -> tuple[float, BellCoeffs]:
    """Literal DEJMPS circuit on the 16x16 two-pair density matrix.

    Qubit order: (kept@initiator, kept@solicited, anc@initiator,
    anc@solicited). The initiator side applies exp(-i pi X/4) to each of its
    qubits, the solicited side exp(+i pi X/4); both sides apply CNOT from the
    kept qubit to the ancilla qubit; the ancilla qubits are projected onto
    equal computational outcomes (00 or 11).
    """
    rho = np.kron(bell_diagonal_dm(kept), bell_diagonal_dm(ancilla))
    u = (_embed_one(_SQRT_MINUS_IX, 0, 4) @ _embed_one(_SQRT_PLUS_IX, 1, 4)
         @ _embed_one(_SQRT_MINUS_IX, 2, 4) @ _embed_one(_SQRT_PLUS_IX, 3, 4))
    u = _embed_cnot(0, 2, 4) @ _embed_cnot(1, 3, 4) @ u
    rho = u @ rho @ u.conj().T

    post = np.zeros((4, 4), dtype=complex)
    p_succ = 0.0
    for bit in (0, 1):
        ket = _KET1 if bit else _KET0
        proj = _kron(np.eye(4, dtype=complex), np.outer(ket, ket.conj()),
                     np.outer(ket, ket.conj()))
        projected = proj @ rho @ proj
        p_succ += float(np.real(np.trace(projected)))
        # partial trace over the ancilla qubits (2, 3)
        t = projected.reshape(4, 4, 4, 4)
        post += np.einsum("ikjk->ij", t)
    if p_succ <= 0.0:
        return 0.0, kept
    return p_succ, decompose_bell_diagonal(post / p_succ)


def _derive_swap_corrections() -> list[np.ndarray]:
    """Per-outcome correction Pauli on the surviving right-hand qubit.

    Derived once from the Phi+ x Phi+ case: the correction for outcome (u, v)
    is the single-qubit Pauli that maps that outcome's post-measurement state
    back to Phi+.
    """
    paulis = [_I2, _X, _Z, _X @ _Z]
    rho = np.kron(bell_diagonal_dm(BellCoeffs(1, 0, 0, 0)),
                  bell_diagonal_dm(BellCoeffs(1, 0, 0, 0)))
    corrections = []
    for ket in _BELL_KETS:
        proj = _kron(_I2, np.outer(ket, ket.conj()), _I2)
        projected = proj @ rho @ proj
        t = projected.reshape(2, 4, 2, 2, 4, 2)
        outer = np.einsum("ikjlkm->ijlm", t).reshape(4, 4)
        outer /= np.trace(outer)
        target = np.outer(_BELL_KETS[0], _BELL_KETS[0].conj())
        for pauli in paulis:
            c = _kron(_I2, pauli)
            if np.allclose(c @ outer @ c.conj().T, target, atol=1e-9):
                corrections.append(pauli)
                break
        else:  # pragma: no cover - convention bug guard
            raise AssertionError("no Pauli correction found for swap outcome")
    return corrections


_SWAP_CORRECTIONS = _derive_swap_corrections()


def oracle_swap(a: BellCoeffs, b: BellCoeffs) -> BellCoeffs:
    """Bell-state measurement on the middle qubits, averaged over outcomes.

    Qubit order: (left@a, middle@a, middle@b, right@b). Projects the middle
    qubits onto each Bell state, applies the per-outcome correction to the
    surviving right qubit, and averages; must equal the XOR convolution.
    """
    rho = np.kron(bell_diagonal_dm(a), bell_diagonal_dm(b))
    out = np.zeros((4, 4), dtype=complex)
    for ket, pauli in zip(_BELL_KETS, _SWAP_CORRECTIONS):
        proj = _kron(_I2, np.outer(ket, ket.conj()), _I2)
        projected = proj @ rho @ proj
        t = projected.reshape(2, 4, 2, 2, 4, 2)
        outer = np.einsum("ikjlkm->ijlm", t).reshape(4, 4)
        c = _kron(_I2, pauli)
        out += c @ outer @ c.conj().T
    return decompose_bell_diagonal(out)

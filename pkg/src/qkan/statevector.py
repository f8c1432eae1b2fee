"""Single-qubit statevector primitives.

States are length-2 complex128 arrays, gates are 2x2 complex128 unitaries.
Batched evaluation uses a (B, N, M, 2) array layout: batch, post-node,
pre-node, amplitude, stored row-major so per-edge slices are contiguous.
Global phase is not tracked; only expectation values are contract-bearing.
All arithmetic is in 64-bit precision.
"""

from __future__ import annotations

import numpy as np

SQRT1_2 = 1.0 / np.sqrt(2.0)


def _require_finite(name: str, *angles) -> None:
    for a in angles:
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name}: angle must be finite, got {a!r}")


def zero_state() -> np.ndarray:
    """|0> as a complex amplitude pair."""
    return np.array([1.0, 0.0], dtype=np.complex128)


def hadamard() -> np.ndarray:
    """(1/sqrt(2)) [[1, 1], [1, -1]]."""
    return np.array([[SQRT1_2, SQRT1_2], [SQRT1_2, -SQRT1_2]], dtype=np.complex128)


def rz(angle: float) -> np.ndarray:
    """Z rotation diag(e^{-i a/2}, e^{+i a/2})."""
    _require_finite("rz", angle)
    half = 0.5 * angle
    return np.array(
        [[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]], dtype=np.complex128
    )


def ry(angle: float) -> np.ndarray:
    """Y rotation [[cos a/2, -sin a/2], [sin a/2, cos a/2]]."""
    _require_finite("ry", angle)
    half = 0.5 * angle
    c, s = np.cos(half), np.sin(half)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def euler_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """rz(gamma) @ ry(beta) @ rz(alpha); universal for SU(2) up to phase.

    All-zero angles give the identity, which layer extension relies on.
    """
    _require_finite("euler_unitary", alpha, beta, gamma)
    return rz(gamma) @ ry(beta) @ rz(alpha)


def euler_unitaries(angles: np.ndarray) -> np.ndarray:
    """Batched euler_unitary: angles (..., 3) -> unitaries (..., 2, 2)."""
    angles = np.asarray(angles, dtype=np.float64)
    _require_finite("euler_unitaries", angles)
    ha = 0.5 * angles[..., 0]
    hb = 0.5 * angles[..., 1]
    hg = 0.5 * angles[..., 2]
    c, s = np.cos(hb), np.sin(hb)
    out = np.empty(angles.shape[:-1] + (2, 2), dtype=np.complex128)
    # rz(gamma) ry(beta) rz(alpha), written out entrywise
    out[..., 0, 0] = np.exp(-1j * (ha + hg)) * c
    out[..., 0, 1] = -np.exp(1j * (ha - hg)) * s
    out[..., 1, 0] = np.exp(-1j * (ha - hg)) * s
    out[..., 1, 1] = np.exp(1j * (ha + hg)) * c
    return out


def apply(state: np.ndarray, gate: np.ndarray) -> np.ndarray:
    """Matrix-vector product; preserves the norm for unitary gates."""
    return gate @ state


def expect_z(state: np.ndarray) -> float:
    """|amp0|^2 - |amp1|^2, in [-1, 1] for normalized states."""
    a = np.asarray(state)
    return float((a[..., 0].real ** 2 + a[..., 0].imag ** 2)
                 - (a[..., 1].real ** 2 + a[..., 1].imag ** 2))


def state_batch(b: int, n: int, m: int) -> np.ndarray:
    """(B, N, M, 2) batch of |+> states (Hadamard applied to |0>)."""
    out = np.full((b, n, m, 2), SQRT1_2, dtype=np.complex128)
    return out


def apply_batch(states: np.ndarray, gates: np.ndarray) -> np.ndarray:
    """Apply per-edge gates (N, M, 2, 2) to a (B, N, M, 2) state batch."""
    return np.einsum("nmij,bnmj->bnmi", gates, states)


def expect_z_batch(states: np.ndarray) -> np.ndarray:
    """Pauli-Z expectations of a (B, N, M, 2) batch, shape (B, N, M)."""
    p0 = states[..., 0].real ** 2 + states[..., 0].imag ** 2
    p1 = states[..., 1].real ** 2 + states[..., 1].imag ** 2
    return p0 - p1

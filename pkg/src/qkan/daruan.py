"""One trainable activation edge: weighted data re-uploading circuit.

The circuit applied to the Hadamard-initialized state is

    W^(r+1) . S(u_r) W^(r) ... S(u_1) W^(1),   u_l = w_l x + b_l,

with S(u) = rz(u) (generator sigma_z / 2) and each trainable unitary a
rz(gamma) ry(beta) rz(alpha) Euler triple, so zero angles give the
identity. The edge output is

    phi(x) = w_base * silu(x) + w_quant * <Z> + out_bias.

Gradients are computed exactly by an adjoint sweep over the flat gate
sequence; every gate is a rotation whose generator has eigenvalues
+-1/2, which also makes the parameter-shift rule exact.

Batched routines operate on stacked edge parameters with shape
(N, M, ...) and inputs (B, M), producing (B, N, M) outputs; the scalar
API wraps them with B = N = M = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import state_batch


def silu(x):
    """x * sigmoid(x)."""
    return x / (1.0 + np.exp(-x))


def silu_grad(x):
    """d/dx silu(x) = sigmoid(x) * (1 + x * (1 - sigmoid(x)))."""
    s = 1.0 / (1.0 + np.exp(-x))
    return s * (1.0 + x * (1.0 - s))


@dataclass
class DaruanParams:
    """All trainable scalars of one activation edge."""

    enc_w: np.ndarray          # (r,) data pre-processing weights
    enc_b: np.ndarray          # (r,) data pre-processing biases
    angles: np.ndarray         # (r+1, 3) Euler angles of W^(1)..W^(r+1)
    w_base: float = 1.0
    w_quant: float = 1.0
    out_bias: float = 0.0

    def __post_init__(self):
        self.enc_w = np.asarray(self.enc_w, dtype=np.float64)
        self.enc_b = np.asarray(self.enc_b, dtype=np.float64)
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.enc_w.ndim != 1 or self.enc_w.size < 1:
            raise ValueError("enc_w must be a nonempty 1-D array")
        r = self.enc_w.size
        if self.enc_b.shape != (r,):
            raise ValueError(f"enc_b must have shape ({r},)")
        if self.angles.shape != (r + 1, 3):
            raise ValueError(f"angles must have shape ({r + 1}, 3)")
        for name, v in (("enc_w", self.enc_w), ("enc_b", self.enc_b),
                        ("angles", self.angles)):
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains non-finite values")
        for name, v in (("w_base", self.w_base), ("w_quant", self.w_quant),
                        ("out_bias", self.out_bias)):
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")

    @property
    def r(self) -> int:
        return self.enc_w.size

    def copy(self) -> "DaruanParams":
        return DaruanParams(
            enc_w=self.enc_w.copy(),
            enc_b=self.enc_b.copy(),
            angles=self.angles.copy(),
            w_base=self.w_base,
            w_quant=self.w_quant,
            out_bias=self.out_bias,
        )


@dataclass
class DaruanGrad:
    """Gradient mirror of DaruanParams plus the input derivative."""

    enc_w: np.ndarray
    enc_b: np.ndarray
    angles: np.ndarray
    w_base: float
    w_quant: float
    out_bias: float
    d_input: float


def init_daruan(r: int, rng: np.random.Generator, angle_scale: float = 0.1,
                geometric: bool = True) -> DaruanParams:
    """Default initialization: small random angles, geometric encoding
    weights w_l = 2^(l-1) (unit weights when geometric=False)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if geometric:
        enc_w = 2.0 ** np.arange(r, dtype=np.float64)
    else:
        enc_w = np.ones(r, dtype=np.float64)
    return DaruanParams(
        enc_w=enc_w,
        enc_b=np.zeros(r),
        angles=rng.uniform(-angle_scale, angle_scale, size=(r + 1, 3)),
        w_base=1.0,
        w_quant=1.0,
        out_bias=0.0,
    )


# --- batched circuit core ---------------------------------------------------
#
# Flat gate sequence (4r + 3 gates): for each block l = 0..r-1 the three
# Euler rotations rz(alpha_l), ry(beta_l), rz(gamma_l) followed by the
# encoding gate rz(u_l); then the final Euler triple.


def _apply_rz_half(states, half):
    """In-place diagonal rotation by phase exp(-+ i*half) on (..., 2)."""
    states[..., 0] *= np.exp(-1j * half)
    states[..., 1] *= np.exp(1j * half)


def _apply_ry_half(states, c, s):
    a0 = states[..., 0].copy()
    states[..., 0] = c * a0 - s * states[..., 1]
    states[..., 1] = s * a0 + c * states[..., 1]


def circuit_forward(enc_w, enc_b, angles, x, keep_states=False):
    """Run the batched circuit.

    enc_w, enc_b: (N, M, r); angles: (N, M, r+1, 3); x: (B, M).
    Returns (expectations (B, N, M), states or None). When keep_states
    is set, states is the list of (B, N, M, 2) arrays after every gate,
    as needed by the adjoint sweep.
    """
    n, m, r = enc_w.shape
    b = x.shape[0]
    u = enc_w[None, :, :, :] * x[:, None, :, None] + enc_b[None, :, :, :]  # (B,N,M,r)
    ha = 0.5 * angles[..., 0]          # (N, M, r+1)
    hbc = np.cos(0.5 * angles[..., 1])
    hbs = np.sin(0.5 * angles[..., 1])
    hg = 0.5 * angles[..., 2]

    s = state_batch(b, n, m)
    states = []

    def record():
        if keep_states:
            states.append(s.copy())

    for l in range(r + 1):
        _apply_rz_half(s, ha[None, :, :, l])
        record()
        _apply_ry_half(s, hbc[None, :, :, l], hbs[None, :, :, l])
        record()
        _apply_rz_half(s, hg[None, :, :, l])
        record()
        if l < r:
            _apply_rz_half(s, 0.5 * u[..., l])
            record()

    p0 = s[..., 0].real ** 2 + s[..., 0].imag ** 2
    p1 = s[..., 1].real ** 2 + s[..., 1].imag ** 2
    return p0 - p1, (states if keep_states else None)


def circuit_expectation(enc_w, enc_b, angles, x):
    """Batched <Z> of the circuit, shape (B, N, M)."""
    f, _ = circuit_forward(enc_w, enc_b, angles, x)
    return f


def circuit_gradients(enc_w, enc_b, angles, x):
    """Adjoint sweep: exact per-sample derivatives of <Z>.

    Returns (f, g_enc, g_ang) with f (B, N, M), g_enc (B, N, M, r) the
    derivative with respect to each encoding gate's total rotation
    angle u_l, and g_ang (B, N, M, r+1, 3) the Euler-angle derivatives.
    """
    n, m, r = enc_w.shape
    b = x.shape[0]
    f, states = circuit_forward(enc_w, enc_b, angles, x, keep_states=True)

    u = enc_w[None, :, :, :] * x[:, None, :, None] + enc_b[None, :, :, :]
    ha = 0.5 * angles[..., 0]
    hbc = np.cos(0.5 * angles[..., 1])
    hbs = np.sin(0.5 * angles[..., 1])
    hg = 0.5 * angles[..., 2]

    final = states[-1]
    lam = final.copy()
    lam[..., 1] = -lam[..., 1]          # Z |psi>

    g_enc = np.empty((b, n, m, r))
    g_ang = np.empty((b, n, m, r + 1, 3))

    def grad_z(sk):
        return (np.imag(np.conj(lam[..., 0]) * sk[..., 0])
                - np.imag(np.conj(lam[..., 1]) * sk[..., 1]))

    def grad_y(sk):
        return (np.real(np.conj(lam[..., 1]) * sk[..., 0])
                - np.real(np.conj(lam[..., 0]) * sk[..., 1]))

    def pull_rz(half):
        lam[..., 0] *= np.exp(1j * half)
        lam[..., 1] *= np.exp(-1j * half)

    def pull_ry(c, s):
        l0 = lam[..., 0].copy()
        lam[..., 0] = c * l0 + s * lam[..., 1]
        lam[..., 1] = -s * l0 + c * lam[..., 1]

    # Walk the gate list backwards; states[k] is the post-state of gate k.
    k = len(states) - 1
    for l in range(r, -1, -1):
        if l < r:
            sk = states[k]
            g_enc[..., l] = grad_z(sk)
            pull_rz(0.5 * u[..., l])
            k -= 1
        sk = states[k]
        g_ang[..., l, 2] = grad_z(sk)
        pull_rz(hg[None, :, :, l])
        k -= 1
        sk = states[k]
        g_ang[..., l, 1] = grad_y(sk)
        pull_ry(hbc[None, :, :, l], hbs[None, :, :, l])
        k -= 1
        sk = states[k]
        g_ang[..., l, 0] = grad_z(sk)
        pull_rz(ha[None, :, :, l])
        k -= 1

    return f, g_enc, g_ang


# --- scalar edge API --------------------------------------------------------


def _stacked(p: DaruanParams):
    return (p.enc_w[None, None, :], p.enc_b[None, None, :],
            p.angles[None, None, :, :])


def raw_expectation(p: DaruanParams, x: float) -> float:
    """Pauli-Z expectation of the circuit on the Hadamard-initialized
    state; always in [-1, 1]."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    ew, eb, ang = _stacked(p)
    return float(circuit_expectation(ew, eb, ang, np.array([[x]]))[0, 0, 0])


def forward(p: DaruanParams, x: float) -> float:
    """w_base * silu(x) + w_quant * raw_expectation + out_bias."""
    return p.w_base * float(silu(x)) + p.w_quant * raw_expectation(p, x) + p.out_bias


def backward(p: DaruanParams, x: float, upstream: float = 1.0) -> DaruanGrad:
    """Exact derivatives of upstream * forward(p, x) for every field of
    p and for x."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    ew, eb, ang = _stacked(p)
    f, g_enc, g_ang = circuit_gradients(ew, eb, ang, np.array([[x]]))
    f = float(f[0, 0, 0])
    g_enc = g_enc[0, 0, 0]              # (r,)
    g_ang = g_ang[0, 0, 0]              # (r+1, 3)
    wq = p.w_quant * upstream
    d_input = upstream * (p.w_base * float(silu_grad(x))
                          + p.w_quant * float(np.dot(p.enc_w, g_enc)))
    return DaruanGrad(
        enc_w=wq * x * g_enc,
        enc_b=wq * g_enc,
        angles=wq * g_ang,
        w_base=upstream * float(silu(x)),
        w_quant=upstream * f,
        out_bias=upstream,
        d_input=d_input,
    )


def parameter_shift_grad(p: DaruanParams, x: float, which) -> float:
    """Parameter-shift oracle for rotation-generated parameters.

    `which` addresses one parameter: ("angle", l, k) with l in 0..r and
    k in {0, 1, 2}, ("enc_b", l), or ("enc_w", l). Returns
    [f(+pi/2 shift) - f(-pi/2 shift)] / 2 applied to the addressed
    rotation argument; for enc_w the result carries the chain factor x.
    w_base, w_quant and out_bias are not rotation-generated and are
    rejected.
    """
    kind = which[0]
    if kind not in ("angle", "enc_b", "enc_w"):
        raise ValueError(f"parameter {which!r} is not rotation-generated")

    def shifted(delta: float) -> float:
        q = p.copy()
        if kind == "angle":
            _, l, k = which
            q.angles[l, k] += delta
        else:
            l = which[1]
            q.enc_b[l] += delta   # shifts the rotation argument u_l
        return forward(q, x)

    g = 0.5 * (shifted(np.pi / 2) - shifted(-np.pi / 2))
    if kind == "enc_w":
        g *= x
    return g


def extend(p: DaruanParams, new_r: int) -> DaruanParams:
    """Append identity-initialized encoding blocks and unitaries.

    New angles, enc_b and enc_w are all zero, so the appended gates act
    trivially and forward(extend(p), x) == forward(p, x) exactly.
    """
    if new_r <= p.r:
        raise ValueError(f"new_r must exceed current r={p.r}, got {new_r}")
    extra = new_r - p.r
    return DaruanParams(
        enc_w=np.concatenate([p.enc_w, np.zeros(extra)]),
        enc_b=np.concatenate([p.enc_b, np.zeros(extra)]),
        angles=np.concatenate([p.angles, np.zeros((extra, 3))], axis=0),
        w_base=p.w_base,
        w_quant=p.w_quant,
        out_bias=p.out_bias,
    )

"""Losses, optimizers and the full-batch training loop.

L-BFGS uses the two-loop recursion with a strong-Wolfe line search
(c1 = 1e-4, c2 = 0.9); one "epoch" is one accepted quasi-Newton step on
the full batch. Curvature pairs with s.y <= 1e-12 are rejected, falling
back to steepest descent when no history remains. Adam is the standard
bias-corrected update. Runs are deterministic given (seed, config).
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import NumericalError
from .network import QkanNetwork

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9
CURVATURE_MIN = 1e-12
MAX_LINE_SEARCH_TRIALS = 25


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def rmse(pred, target) -> float:
    return float(np.sqrt(mse_loss(pred, target)))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, n_params: int, lr: float = 1e-3) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), lr=lr)


def adam_step(state: AdamState, params: np.ndarray,
              grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter vector."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("parameter/gradient/state shapes must match")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads ** 2
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def _wolfe_search(fg, x, d, f0, g0, events: list | None = None):
    """Strong-Wolfe line search along d (Nocedal-style bracket + zoom).

    Returns (alpha, f_new, g_new). On failure after
    MAX_LINE_SEARCH_TRIALS evaluations, records the event, halves the
    last trial step and accepts it.
    """
    dg0 = float(d @ g0)
    evals = 0

    def phi(alpha):
        nonlocal evals
        evals += 1
        f, g = fg(x + alpha * d)
        return f, g, float(d @ g)

    def zoom(a_lo, a_hi, f_lo, dg_lo):
        for _ in range(MAX_LINE_SEARCH_TRIALS):
            if evals >= MAX_LINE_SEARCH_TRIALS:
                break
            a = 0.5 * (a_lo + a_hi)
            f, g, dg = phi(a)
            if f > f0 + WOLFE_C1 * a * dg0 or f >= f_lo:
                a_hi = a
            else:
                if abs(dg) <= -WOLFE_C2 * dg0:
                    return a, f, g
                if dg * (a_hi - a_lo) >= 0:
                    a_hi = a_lo
                a_lo, f_lo, dg_lo = a, f, dg
        return None

    a_prev, f_prev, dg_prev = 0.0, f0, dg0
    a = 1.0
    g_prev = g0
    for _ in range(MAX_LINE_SEARCH_TRIALS):
        f, g, dg = phi(a)
        if f > f0 + WOLFE_C1 * a * dg0 or (evals > 1 and f >= f_prev):
            res = zoom(a_prev, a, f_prev, dg_prev)
            if res is not None:
                return res
            break
        if abs(dg) <= -WOLFE_C2 * dg0:
            return a, f, g
        if dg >= 0:
            res = zoom(a, a_prev, f, dg)
            if res is not None:
                return res
            break
        a_prev, f_prev, dg_prev, g_prev = a, f, dg, g
        a = 2.0 * a
        if evals >= MAX_LINE_SEARCH_TRIALS:
            break

    if events is not None:
        events.append(f"line-search failure after {evals} trials; "
                      f"halving step to {0.5 * a:.3e}")
    a = 0.5 * a
    f, g, _ = phi(a)
    return a, f, g


def lbfgs_minimize(fg, x0: np.ndarray, max_iter: int, history: int = 10,
                   grad_tol: float = 1e-12, callback=None):
    """Two-loop-recursion L-BFGS. fg(x) -> (loss, grad).

    Returns (x, trace of per-iteration losses, events).
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fg(x)
    s_hist: deque = deque(maxlen=history)
    y_hist: deque = deque(maxlen=history)
    losses = []
    events: list = []
    for it in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in reversed(list(zip(s_hist, y_hist))):
            rho = 1.0 / float(y @ s)
            a = rho * float(s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if y_hist:
            s_last, y_last = s_hist[-1], y_hist[-1]
            q *= float(s_last @ y_last) / float(y_last @ y_last)
        for a, rho, s, y in reversed(alphas):
            b = rho * float(y @ q)
            q += (a - b) * s
        d = -q
        if float(d @ g) >= 0:
            d = -g   # not a descent direction; fall back
        alpha, f_new, g_new = _wolfe_search(fg, x, d, f, g, events)
        s = alpha * d
        y = g_new - g
        if float(s @ y) > CURVATURE_MIN:
            s_hist.append(s)
            y_hist.append(y)
        x = x + s
        f, g = f_new, g_new
        losses.append(f)
        if callback is not None:
            callback(it, x, f)
        if float(np.linalg.norm(s)) <= 1e-15 * max(1.0, float(np.linalg.norm(x))):
            break
    return x, losses, events


@dataclass
class TrainConfig:
    optimizer: str = "lbfgs"     # "lbfgs" or "adam"
    epochs: int = 200
    lr: float = 1e-3             # adam only
    history: int = 10            # lbfgs only
    seed: int = 0                # provenance; initialization happens upstream

    def __post_init__(self):
        if self.optimizer not in ("lbfgs", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")


@dataclass
class TrainResult:
    trace: list                  # rows: epoch, train_rmse, test_rmse, elapsed_ms
    best_params: np.ndarray
    best_epoch: int
    best_test_rmse: float
    events: list = field(default_factory=list)


def _loss_closure(net: QkanNetwork, dataset: Dataset):
    x, y = dataset.inputs, dataset.targets
    scale = 2.0 / y.size

    def fg(params: np.ndarray):
        net.set_param_vector(params)
        pred = net.forward(x)
        loss = float(np.mean((pred - y) ** 2))
        grads = net.backward(x, scale * (pred - y))
        return loss, net.grad_vector(grads)

    return fg


def train(net: QkanNetwork, train_ds: Dataset, test_ds: Dataset,
          config: TrainConfig) -> TrainResult:
    """Full-batch training; keeps the best-by-test-RMSE parameters.

    The network is left at its final-epoch parameters; use
    `result.best_params` for the selected checkpoint. Raises
    NumericalError on NaN loss.
    """
    fg = _loss_closure(net, train_ds)
    params = net.param_vector()
    trace: list = []
    best = {"epoch": -1, "rmse": np.inf, "params": params.copy()}
    t0 = time.perf_counter()

    def record(epoch: int, params_now: np.ndarray, loss: float):
        if not np.isfinite(loss):
            raise NumericalError(
                f"NaN/inf loss at epoch {epoch} "
                f"(parameter norm {np.linalg.norm(params_now):.3e})")
        net.set_param_vector(params_now)
        train_rmse = float(np.sqrt(loss))
        test_rmse = rmse(net.forward(test_ds.inputs), test_ds.targets)
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        trace.append({"epoch": epoch, "train_rmse": train_rmse,
                      "test_rmse": test_rmse, "elapsed_ms": elapsed_ms})
        if test_rmse < best["rmse"]:
            best.update(epoch=epoch, rmse=test_rmse, params=params_now.copy())

    events: list = []
    if config.epochs == 0:
        pass
    elif config.optimizer == "lbfgs":
        params, _, events = lbfgs_minimize(
            fg, params, max_iter=config.epochs, history=config.history,
            callback=record)
    else:
        state = AdamState.init(params.size, lr=config.lr)
        for epoch in range(config.epochs):
            loss, grads = fg(params)
            params = adam_step(state, params, grads)
            record(epoch, params, loss)
    net.set_param_vector(params)
    if best["epoch"] < 0:
        best.update(epoch=0, rmse=float("nan"), params=params.copy())
    return TrainResult(trace=trace, best_params=best["params"],
                       best_epoch=best["epoch"], best_test_rmse=best["rmse"],
                       events=events)


def lbfgs_fit(net: QkanNetwork, train_ds: Dataset, test_ds: Dataset,
              epochs: int, history: int = 10) -> TrainResult:
    """Convenience wrapper: L-BFGS training with the default settings."""
    return train(net, train_ds, test_ds,
                 TrainConfig(optimizer="lbfgs", epochs=epochs, history=history))


def trace_to_csv(trace: list) -> str:
    lines = ["epoch,train_rmse,test_rmse,elapsed_ms"]
    for row in trace:
        lines.append(f"{row['epoch']},{row['train_rmse']:.17g},"
                     f"{row['test_rmse']:.17g},{row['elapsed_ms']:.3f}")
    return "\n".join(lines) + "\n"

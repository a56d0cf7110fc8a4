"""Embedded Runge-Kutta 5(4) integrator with dense output.

Dormand-Prince pair: six effective stages, fifth-order propagation, FSAL,
fourth-order error estimate, and the standard quartic interpolant for dense
output.  The solver works on real first-order systems of any dimension and
in either time direction; a fixed-step mode (no rejection, no controller)
backs the convergence-order studies.

References: Dormand & Prince (1980), J. Comp. Appl. Math. 6; Shampine
(1986), Math. Comp. 46 for the interpolant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StepFailure, ToleranceUnachievable

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    ]
)
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# quartic dense-output weights (theta, theta^2, theta^3, theta^4 columns)
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

MAX_FACTOR = 10.0
MIN_FACTOR = 0.2
SAFETY = 0.9
ORDER_EXPONENT = -1.0 / 5.0


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(field_fn, t0, y0, f0, direction, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = field_fn(t0 + h0 * direction, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


@dataclass
class IvpSolution:
    """Accepted step sequence plus the interpolation data to evaluate the
    solution and its time derivative anywhere in the integration span."""

    t_start: float
    t_end: float
    t_nodes: np.ndarray          # accepted node times, integration order
    y_nodes: np.ndarray          # states at the nodes, shape (m+1, dim)
    step_q: np.ndarray           # per-step dense weights, shape (m, dim, 4)
    nfev: int
    naccept: int
    nreject: int
    stats: dict = field(default_factory=dict)

    @property
    def direction(self) -> float:
        return 1.0 if self.t_end >= self.t_start else -1.0

    @property
    def y_end(self) -> np.ndarray:
        return self.y_nodes[-1]

    def _locate(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.direction
        sig = d * self.t_nodes
        st = np.clip(d * np.asarray(t, dtype=float), sig[0], sig[-1])
        idx = np.clip(np.searchsorted(sig, st, side="right") - 1, 0, len(sig) - 2)
        h = self.t_nodes[idx + 1] - self.t_nodes[idx]
        theta = (d * st - self.t_nodes[idx]) / h
        return idx, np.clip(theta, 0.0, 1.0)

    def eval(self, t) -> np.ndarray:
        """Dense solution values; shape (len(t), dim)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx, theta = self._locate(t)
        powers = np.stack([theta, theta**2, theta**3, theta**4], axis=-1)
        h = (self.t_nodes[idx + 1] - self.t_nodes[idx])[:, None]
        q = self.step_q[idx]
        return self.y_nodes[idx] + h * np.einsum("sdk,sk->sd", q, powers)

    def eval_derivative(self, t) -> np.ndarray:
        """Time derivative of the interpolant; shape (len(t), dim)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx, theta = self._locate(t)
        powers = np.stack([np.ones_like(theta), 2 * theta, 3 * theta**2, 4 * theta**3], axis=-1)
        q = self.step_q[idx]
        return np.einsum("sdk,sk->sd", q, powers)


def solve_dp54(
    field_fn,
    t0: float,
    t1: float,
    y0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    fixed_step: float | None = None,
    max_steps: int = 1_000_000,
) -> IvpSolution:
    """Integrate y' = field_fn(t, y) from t0 to t1 (either direction).

    Raises ToleranceUnachievable when the controller hits the step floor
    with the error estimate still above one, and StepFailure when the state
    goes non-finite at the smallest representable step.
    """
    y0 = np.asarray(y0, dtype=float)
    span = abs(t1 - t0)
    if span == 0.0:
        raise ValueError("empty integration span")
    direction = 1.0 if t1 >= t0 else -1.0
    dim = y0.size

    f0 = np.asarray(field_fn(t0, y0), dtype=float)
    nfev = 1
    if fixed_step is not None:
        h_abs = float(fixed_step)
        adaptive = False
    else:
        h_abs = _initial_step(field_fn, t0, y0, f0, direction, rtol, atol, span)
        nfev += 1
        adaptive = True
    h_floor = 16.0 * np.finfo(float).eps * max(abs(t0), abs(t1), span)

    t_nodes = [t0]
    y_nodes = [y0.copy()]
    q_store = []
    k = np.empty((7, dim))
    k[0] = f0
    t = t0
    y = y0
    naccept = nreject = 0

    while direction * (t1 - t) > 0:
        if naccept + nreject > max_steps:
            raise StepFailure(t, f"step budget exceeded at t = {t:.6g}")
        final = abs(t1 - t) <= h_abs
        if final:
            h = t1 - t
            h_abs = abs(h)
        else:
            h = direction * h_abs

        # overflow in a trial step is handled below via the finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(1, 6):
                k[i] = field_fn(t + _C[i] * h, y + h * (_A[i, :i] @ k[:i]))
            y_new = y + h * (_B @ k[:6])
            k[6] = field_fn(t + h, y_new)
        nfev += 6

        if not np.all(np.isfinite(y_new)):
            if not adaptive or h_abs <= h_floor:
                raise StepFailure(t)
            h_abs = max(h_abs * MIN_FACTOR, h_floor)
            nreject += 1
            continue

        if adaptive:
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms((h * (_E @ k)) / scale)
            if not np.isfinite(err) or err > 1.0:
                if h_abs <= h_floor:
                    raise ToleranceUnachievable(t)
                factor = max(MIN_FACTOR, SAFETY * err**ORDER_EXPONENT)
                h_abs = max(h_abs * factor, h_floor)
                nreject += 1
                continue
            factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err**ORDER_EXPONENT)
            next_h = h_abs * max(MIN_FACTOR, factor)
        else:
            next_h = h_abs

        q_store.append(k.T @ _P)
        t = t1 if final else t + h
        y = y_new
        t_nodes.append(t)
        y_nodes.append(y.copy())
        k[0] = k[6]  # FSAL
        naccept += 1
        h_abs = next_h

    return IvpSolution(
        t_start=t0,
        t_end=t1,
        t_nodes=np.asarray(t_nodes),
        y_nodes=np.asarray(y_nodes),
        step_q=np.asarray(q_store),
        nfev=nfev,
        naccept=naccept,
        nreject=nreject,
        stats={"rtol": rtol, "atol": atol, "fixed_step": fixed_step},
    )

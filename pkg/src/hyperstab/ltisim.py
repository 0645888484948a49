"""State-space realization, impulse response and forced simulation.

Realizations use the controllable canonical form. Time stepping is the exact
zero-order-hold discretization (the matrix exponential of the augmented
``[[A, B], [0, 0]]`` block), so the only discretization error in a simulation
comes from holding the input constant over each step, never from the
integrator itself. The Dirac part of a relative-degree-zero impulse response
is carried symbolically as ``direct_delta_weight`` - a sampled spike would
corrupt every convolution and positivity check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.signal import fftconvolve

from .errors import DimensionMismatch, GridMismatch, ImproperTransferFunction
from .ratfun import RationalFunction
from .signals import Signal


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, 1) if n else np.zeros((0, 1))
        C = np.asarray(self.C, dtype=float).reshape(1, n) if n else np.zeros((1, 0))
        if n == 0:
            A = np.zeros((0, 0))
        for name, arr in (("A", A), ("B", B), ("C", C)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "D", float(self.D))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def transfer_at(self, s: complex) -> complex:
        """C (sI - A)^-1 B + D, for reconstruction checks."""
        n = self.order
        if n == 0:
            return complex(self.D)
        resolvent = np.linalg.solve(s * np.eye(n) - self.A, self.B)
        return complex((self.C @ resolvent)[0, 0] + self.D)


@dataclass(frozen=True)
class ImpulseResponse:
    g: Signal
    direct_delta_weight: float


def realize(g: RationalFunction) -> StateSpace:
    """Controllable canonical realization of a proper rational function."""
    num = np.asarray(g.num.coeffs, dtype=float)
    den = np.asarray(g.den.coeffs, dtype=float)  # monic by construction
    n = den.size - 1
    if num.size - 1 > n:
        raise ImproperTransferFunction("cannot realize an improper function")
    padded = np.zeros(n + 1)
    padded[: num.size] = num
    D = float(padded[n])
    rem = padded[:n] - D * den[:n]
    if n == 0:
        return StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), D)
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    return StateSpace(A, B, rem, D)


def zoh_pair(ss: StateSpace, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact discrete (Ad, Bd) for a zero-order-hold input of step dt."""
    n = ss.order
    if n == 0:
        return np.zeros((0, 0)), np.zeros((0, 1))
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = ss.A * dt
    aug[:n, n:] = ss.B * dt
    phi = expm(aug)
    return phi[:n, :n], phi[:n, n:]


def impulse_response(g: RationalFunction, T: float, dt: float) -> ImpulseResponse:
    """Sampled C exp(A t) B on [0, T] plus the Dirac weight D.

    The states exp(A k dt) B are generated by doubling: once the first m
    samples exist, the next m are one matrix product away, so the whole record
    costs O(log N) small matmuls instead of N sequential steps.
    """
    if dt <= 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    ss = realize(g)
    n_samp = int(round(T / dt)) + 1
    if ss.order == 0:
        samples = np.zeros(n_samp)
    else:
        states = np.empty((n_samp, ss.order))
        states[0] = ss.B.ravel()
        power = expm(ss.A * dt)
        m = 1
        while m < n_samp:
            take = min(m, n_samp - m)
            states[m : m + take] = states[:take] @ power.T
            if 2 * m < n_samp:
                power = power @ power
            m *= 2
        samples = states @ ss.C.ravel()
    return ImpulseResponse(g=Signal(dt, samples), direct_delta_weight=ss.D)


def simulate_forced(ss: StateSpace, u: Signal, x0) -> Signal:
    """Exact ZOH propagation of the state, y_k = C x_k + D u_k."""
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != ss.order:
        raise DimensionMismatch(
            f"x0 has {x.size} entries, realization has order {ss.order}"
        )
    n_samp = len(u)
    y = np.empty(n_samp)
    if ss.order == 0:
        return Signal(u.dt, ss.D * u.values)
    ad, bd = zoh_pair(ss, u.dt)
    c = ss.C.reshape(-1)
    bd = bd.reshape(-1)
    for k in range(n_samp):
        y[k] = c @ x + ss.D * u.values[k]
        if k < n_samp - 1:
            x = ad @ x + bd * u.values[k]
    return Signal(u.dt, y)


def convolve(ir: ImpulseResponse, u: Signal) -> Signal:
    """Trapezoidal convolution of the sampled kernel with u, plus the Dirac part."""
    if abs(ir.g.dt - u.dt) > 1e-9 * u.dt:
        raise GridMismatch("impulse response and input use different steps")
    n = len(u)
    if len(ir.g) < n:
        raise GridMismatch("impulse response record shorter than the input")
    g = ir.g.values[:n]
    full = fftconvolve(g, u.values)[:n]
    y = u.dt * (full - 0.5 * (g * u.values[0] + g[0] * u.values))
    return Signal(u.dt, y + ir.direct_delta_weight * u.values)


class ImpulseSignClass:
    STRICTLY_POSITIVE = "StrictlyPositive"
    NONNEGATIVE = "Nonnegative"
    SIGN_CHANGING = "SignChanging"


@dataclass(frozen=True)
class ImpulsePositivityReport:
    classification: str
    max_abs: float
    decays_to_zero: bool


def impulse_positivity_check(
    ir: ImpulseResponse, tol: float = 1e-9
) -> ImpulsePositivityReport:
    """Sign pattern of g(t) for t > 0, boundedness and decay at the horizon."""
    g = ir.g.values
    interior = g[1:]
    max_abs = float(np.max(np.abs(g)))
    if bool(np.all(interior > tol)):
        cls = ImpulseSignClass.STRICTLY_POSITIVE
    elif bool(np.all(interior >= -tol)):
        cls = ImpulseSignClass.NONNEGATIVE
    else:
        cls = ImpulseSignClass.SIGN_CHANGING
    tail = np.max(np.abs(g[-max(2, g.size // 20):]))
    return ImpulsePositivityReport(
        classification=cls,
        max_abs=max_abs,
        decays_to_zero=bool(tail <= 1e-6 * max(1.0, max_abs)),
    )

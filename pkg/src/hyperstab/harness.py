"""Closed-loop runner and bound-chain auditor for negative feedback loops.

The loop is ``u = e - F(y)`` around a realized plant, stepped with the exact
zero-order-hold discretization. Plants of relative degree zero have direct
feedthrough, so each step solves the scalar algebraic loop
``y = C x + D (e - F(y))`` by safeguarded Newton with a bisection fallback;
for monotone devices and ``D >= 0`` the residual is strictly increasing in y,
which makes the root unique.

Energy bookkeeping. The trace energy ``E_io(t) = <u, y>_t`` uses the recorded
output and is what the serialized CSV reproduces. The bound chains, however,
are statements about the plant as a convolution operator: they are audited on
the zero-state energy ``E_op(t) = <u, g*u>_t``, which coincides with E_io
whenever the initial state is zero. With a nonzero initial state the
discharge of the stored energy rides on the feedback leg: the equivalent
feedback signal seen by the convolution operator is ``-u``, and the tightest
finite-horizon Popov constant of that leg is ``gamma0^2 = max(0, sup_t
E_op(t))``. The physical device's own declaration is audited separately on
its (v, y) pair.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .devices import (
    DeviceKind,
    DevicePopovStatus,
    DeviceSpec,
    PopovDeclaration,
    apply_device,
    device_popov_audit,
)
from .errors import (
    AlgebraicLoopNoConvergence,
    DimensionMismatch,
    GradeUnsupported,
    NonPopovDeviceWarning,
    SchemaError,
)
from .ltisim import convolve, impulse_response, realize, zoh_pair
from .ratfun import RationalFunction, inverse
from .realness import (
    DEFAULT_GRID,
    Grade,
    PRClassification,
    classify_pr,
    real_part_margin,
)
from .signals import EnergyTrace, Signal, _cumtrapz, energy_trace, write_trace_csv

CONV_TOL = 1e-3
BOUND_FACTOR = 10.0
OVERFLOW_GUARD = 1e9
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12
VIOLATION_CAP = 10_000


class Verdict(str, enum.Enum):
    ASYMPTOTIC = "AsymptoticallyHyperstableEvidence"
    HYPERSTABLE = "HyperstableEvidence"
    DIVERGED = "Diverged"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Excitation:
    amplitude: float
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise SchemaError("excitation duration must be positive")


@dataclass(frozen=True)
class Scenario:
    plant: RationalFunction
    device: DeviceSpec
    x0: tuple[float, ...] = ()
    excitation: Excitation | None = None
    dt: float = 1e-3
    horizon: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if self.dt <= 0:
            raise SchemaError("dt must be positive")
        if self.horizon < 100 * self.dt:
            raise SchemaError("horizon must cover at least 100 steps")
        if not any(v != 0.0 for v in self.x0) and self.excitation is None:
            raise SchemaError(
                "need a nonzero initial state or an excitation pulse: "
                "the identically-zero run carries no information"
            )

    def to_json_dict(self) -> dict:
        return {
            "plant": {
                "num": list(self.plant.num.coeffs),
                "den": list(self.plant.den.coeffs),
            },
            "device": self.device.to_json_dict(),
            "x0": list(self.x0),
            "excitation": (
                {"amplitude": self.excitation.amplitude,
                 "duration": self.excitation.duration}
                if self.excitation else None
            ),
            "dt": self.dt,
            "horizon": self.horizon,
        }


def scenario_from_json_dict(data: dict) -> Scenario:
    """Validate and build a Scenario from its JSON form."""
    try:
        plant_spec = data["plant"]
        g = RationalFunction(plant_spec["num"], plant_spec["den"])
    except KeyError as exc:
        raise SchemaError(f"scenario missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad plant coefficients: {exc}") from None
    try:
        dev_spec = data["device"]
        device = DeviceSpec(kind=dev_spec["kind"], params=dev_spec.get("params", {}))
    except KeyError as exc:
        raise SchemaError(f"device missing field {exc}") from None
    except ValueError as exc:
        raise SchemaError(f"unknown device kind: {exc}") from None
    exc_spec = data.get("excitation")
    excitation = None
    if exc_spec is not None:
        try:
            excitation = Excitation(
                amplitude=float(exc_spec["amplitude"]),
                duration=float(exc_spec["duration"]),
            )
        except KeyError as missing:
            raise SchemaError(f"excitation missing field {missing}") from None
    try:
        return Scenario(
            plant=g,
            device=device,
            x0=tuple(data.get("x0", ())),
            excitation=excitation,
            dt=float(data.get("dt", 1e-3)),
            horizon=float(data.get("horizon", 50.0)),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None


@dataclass(frozen=True)
class Violation:
    t: float
    inequality: str
    lhs: float
    rhs: float

    def to_json_dict(self) -> dict:
        return {"t": self.t, "inequality": self.inequality,
                "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class BoundChainAudit:
    """Finite-horizon audit of the supplied-energy bound chains.

    Every *_lower trace is nondecreasing (nonnegative integrands); the chain
    compares the zero-state energy trace against them pointwise with slack
    ``tol_bound``, which covers quadrature error only.
    """

    gamma0_sq: float
    energy_op: np.ndarray
    times: np.ndarray
    tol_bound: float
    d_lower: np.ndarray | None = None
    d_inv_lower: np.ndarray | None = None
    d0_lower: np.ndarray | None = None
    d1_lower: np.ndarray | None = None
    violations: tuple[Violation, ...] = ()
    violation_count: int = 0
    note: str = ""

    def to_report(self) -> dict:
        chains = {}
        for name in ("d_lower", "d_inv_lower", "d0_lower", "d1_lower"):
            trace = getattr(self, name)
            if trace is not None:
                chains[name + "_final"] = float(trace[-1])
        return {
            "gamma0_sq": self.gamma0_sq,
            "operator_energy_final": float(self.energy_op[-1]),
            "tol_bound": self.tol_bound,
            "chains": chains,
            "violation_count": self.violation_count,
            "violations": [v.to_json_dict() for v in self.violations[:50]],
            "note": self.note,
        }


@dataclass(frozen=True)
class SimulationRun:
    scenario: Scenario
    u: Signal
    y: Signal
    v: Signal
    e: Signal
    E: EnergyTrace
    classification: PRClassification
    device_status: DevicePopovStatus
    bound_audit: BoundChainAudit | None
    verdict: Verdict
    diverged_at: float | None = None


def _compile_device(spec: DeviceSpec) -> Callable[[float, float], float]:
    """Bind device parameters into a fast scalar map equivalent to apply_device."""
    kind, p = spec.kind, spec.params
    if kind is DeviceKind.STATIC_SECTOR:
        k1 = float(p.get("k1", 0.0))
        k2 = float(p.get("k2", k1))
        k = min(max(float(p.get("gain", 0.5 * (k1 + k2))), k1), k2)
        return lambda y, t: k * y
    if kind is DeviceKind.CUBIC_ODD_POWER:
        exp = int(p.get("p", 3))
        return lambda y, t: y ** exp
    if kind is DeviceKind.TIME_VARYING_GAIN:
        samples = tuple(float(s) for s in p["samples"])
        sdt = float(p["sample_dt"])
        last = len(samples) - 1
        return lambda y, t: samples[min(int(t / sdt), last)] * y
    if kind is DeviceKind.RELAY:
        a = float(p["amplitude"])
        return lambda y, t: a if y > 0.0 else (-a if y < 0.0 else 0.0)
    if kind is DeviceKind.DEADZONE_SECTOR:
        dz = float(p.get("deadzone", 0.0))
        k1 = float(p.get("k1", 0.0))
        k2 = float(p.get("k2", k1))
        k = min(max(float(p.get("gain", 0.5 * (k1 + k2))), k1), k2)
        return lambda y, t: 0.0 if abs(y) <= dz else k * y
    if kind is DeviceKind.REGENERATIVE_PULSE:
        t0, t1 = float(p["t_start"]), float(p["t_end"])
        rate = float(p["rate"])
        return lambda y, t: -rate if t0 <= t < t1 else 0.0
    return lambda y, t: apply_device(spec, y, t)[0]


def _compile_affine(spec: DeviceSpec):
    """(gain(t), offset(t)) for devices with F(y, t) = gain*y + offset, else None.

    Affine devices admit an exact algebraic-loop solve, which avoids Newton on
    every step of long runs.
    """
    kind, p = spec.kind, spec.params
    if kind is DeviceKind.STATIC_SECTOR:
        k1 = float(p.get("k1", 0.0))
        k2 = float(p.get("k2", k1))
        k = min(max(float(p.get("gain", 0.5 * (k1 + k2))), k1), k2)
        return (lambda t: k), (lambda t: 0.0)
    if kind is DeviceKind.TIME_VARYING_GAIN:
        samples = tuple(float(s) for s in p["samples"])
        sdt = float(p["sample_dt"])
        last = len(samples) - 1
        return (lambda t: samples[min(int(t / sdt), last)]), (lambda t: 0.0)
    if kind is DeviceKind.REGENERATIVE_PULSE:
        t0, t1 = float(p["t_start"]), float(p["t_end"])
        rate = float(p["rate"])
        return (lambda t: 0.0), (lambda t: -rate if t0 <= t < t1 else 0.0)
    return None


def _solve_output(c: float, D: float, e: float, f: Callable[[float], float],
                  step_index: int) -> float:
    """Root of phi(y) = y - c - D*(e - f(y)), increasing for monotone f, D >= 0."""

    def phi(yv: float) -> float:
        return yv - c - D * (e - f(yv))

    y = c + D * e
    r = phi(y)
    scale = 1.0 + abs(c) + abs(D * e)
    if abs(r) <= NEWTON_TOL * scale:
        return y
    step = 1.0 + abs(y)
    if r > 0.0:
        hi, fhi = y, r
        lo = y - step
        flo = phi(lo)
        guard = 0
        while flo > 0.0:
            hi, fhi = lo, flo
            step *= 2.0
            lo -= step
            flo = phi(lo)
            guard += 1
            if guard > 200:
                raise AlgebraicLoopNoConvergence(
                    f"no bracket at step {step_index}, residual {flo}"
                )
    else:
        lo, flo = y, r
        hi = y + step
        fhi = phi(hi)
        guard = 0
        while fhi < 0.0:
            lo, flo = hi, fhi
            step *= 2.0
            hi += step
            fhi = phi(hi)
            guard += 1
            if guard > 200:
                raise AlgebraicLoopNoConvergence(
                    f"no bracket at step {step_index}, residual {fhi}"
                )
    y = 0.5 * (lo + hi)
    for _ in range(NEWTON_MAX_ITER):
        r = phi(y)
        if abs(r) <= NEWTON_TOL * scale:
            return y
        if r > 0.0:
            hi = y
        else:
            lo = y
        h = 1e-7 * (1.0 + abs(y))
        slope = (phi(y + h) - phi(y - h)) / (2.0 * h)
        if slope > 0.0:
            candidate = y - r / slope
        else:
            candidate = y
        if lo < candidate < hi:
            y = candidate
        else:
            y = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * (1.0 + abs(y)):
            break
    r = phi(y)
    if abs(r) <= 1e-9 * scale:
        return y
    # a collapsed bracket with a large residual means the device response
    # jumps across the loop equation: no consistent output exists
    raise AlgebraicLoopNoConvergence(
        f"algebraic loop has no solution at step {step_index}: "
        f"residual {r} at y = {y}"
    )


def _simulate(sc: Scenario):
    """Step the loop; returns raw trace arrays and the divergence time, if any."""
    ss = realize(sc.plant)
    n = ss.order
    x = np.asarray(sc.x0, dtype=float)
    if x.size != n:
        raise DimensionMismatch(
            f"x0 has {x.size} entries, plant realization has order {n}"
        )
    n_steps = int(round(sc.horizon / sc.dt))
    dt = sc.dt
    amp = sc.excitation.amplitude if sc.excitation else 0.0
    dur = sc.excitation.duration if sc.excitation else -1.0
    f = _compile_device(sc.device)
    affine = _compile_affine(sc.device)
    D = ss.D
    guard = OVERFLOW_GUARD

    u_list: list[float] = []
    y_list: list[float] = []
    v_list: list[float] = []
    e_list: list[float] = []
    push_u, push_y = u_list.append, y_list.append
    push_v, push_e = v_list.append, e_list.append
    diverged_at = None

    def _output(c_val: float, e_val: float, t: float, k: int) -> float:
        if D == 0.0:
            return c_val
        if affine is not None:
            gain, offset = affine
            denom = 1.0 + D * gain(t)
            if abs(denom) < 1e-12:
                raise AlgebraicLoopNoConvergence(
                    f"degenerate affine loop at step {k}: 1 + D*k = {denom}"
                )
            return (c_val + D * (e_val - offset(t))) / denom
        return _solve_output(c_val, D, e_val, lambda yy: f(yy, t), k)

    if n == 1:
        ad, bd = zoh_pair(ss, dt)
        a11, b1, c1 = float(ad[0, 0]), float(bd[0, 0]), float(ss.C[0, 0])
        xs = float(x[0])
        for k in range(n_steps + 1):
            t = k * dt
            e = amp if t < dur else 0.0
            yk = _output(c1 * xs, e, t, k) if D != 0.0 else c1 * xs
            if yk > guard or yk < -guard or yk != yk:
                diverged_at = t
                break
            vk = f(yk, t)
            uk = e - vk
            push_u(uk)
            push_y(yk)
            push_v(vk)
            push_e(e)
            xs = a11 * xs + b1 * uk
    elif n == 0:
        for k in range(n_steps + 1):
            t = k * dt
            e = amp if t < dur else 0.0
            yk = _output(0.0, e, t, k)
            vk = f(yk, t)
            push_u(e - vk)
            push_y(yk)
            push_v(vk)
            push_e(e)
    else:
        ad, bd = zoh_pair(ss, dt)
        bd = bd.reshape(-1)
        c_row = ss.C.reshape(-1)
        for k in range(n_steps + 1):
            t = k * dt
            e = amp if t < dur else 0.0
            yk = _output(float(c_row @ x), e, t, k)
            if yk > guard or yk < -guard or yk != yk:
                diverged_at = t
                break
            vk = f(yk, t)
            uk = e - vk
            push_u(uk)
            push_y(yk)
            push_v(vk)
            push_e(e)
            x = ad @ x + bd * uk
    if len(u_list) < 2:
        raise AlgebraicLoopNoConvergence(
            "trajectory left the overflow guard within the first step"
        )
    return (
        np.asarray(u_list), np.asarray(y_list), np.asarray(v_list),
        np.asarray(e_list), diverged_at,
    )


def _bound_chain_audit(
    sc: Scenario,
    classification: PRClassification,
    u: Signal,
) -> BoundChainAudit:
    """Audit the grade's energy bound chain on the zero-state plant leg."""
    n = len(u)
    ir = impulse_response(sc.plant, T=(n - 1) * sc.dt, dt=sc.dt)
    y_zs = convolve(ir, u)
    e_op = _cumtrapz(u.values * y_zs.values, sc.dt)
    times = sc.dt * np.arange(n)
    gamma0_sq = max(0.0, float(np.max(e_op)))
    tol_bound = 1e-6 * (1.0 + abs(float(e_op[-1])))

    violations: list[Violation] = []
    count = 0

    def _check(name: str, lower: np.ndarray) -> None:
        nonlocal count
        bad = np.nonzero(e_op < lower - tol_bound)[0]
        count += bad.size
        for idx in bad[: max(0, VIOLATION_CAP - len(violations))]:
            violations.append(
                Violation(float(times[idx]), name, float(e_op[idx]), float(lower[idx]))
            )

    grade = classification.grade
    d_lower = d_inv_lower = d0_lower = d1_lower = None
    note = ""
    if grade is Grade.NOT_PR:
        raise GradeUnsupported("no bound chain is defined for a NotPR plant")
    if grade is Grade.SSPR:
        d_lower = classification.d * _cumtrapz(u.values * u.values, sc.dt)
        _check("E >= d*int(u^2)", d_lower)
        d_inv = real_part_margin(inverse(sc.plant), DEFAULT_GRID)
        d_inv_lower = d_inv * _cumtrapz(y_zs.values * y_zs.values, sc.dt)
        _check("E >= d_inv*int(y^2)", d_inv_lower)
    elif grade is Grade.WSPR:
        delta = _cumtrapz(u.values, sc.dt)
        d0_lower = classification.d0 * _cumtrapz(delta * delta, sc.dt)
        _check("E >= d0*int(delta^2)", d0_lower)
    elif grade is Grade.PR and classification.single_pole_at_origin \
            and classification.g1_grade is Grade.SSPR:
        delta_abs = _cumtrapz(np.abs(u.values), sc.dt)
        d1_lower = classification.d1 * _cumtrapz(delta_abs * np.abs(u.values), sc.dt)
        _check("E >= d1*int(delta_abs*|u|)", d1_lower)
    else:
        note = f"no lower bound chain defined for grade {grade.value}"

    # upper side: the measured constant dominates the energy by construction;
    # recorded for completeness so report consumers see the full chain
    _check_upper = np.nonzero(e_op > gamma0_sq + tol_bound)[0]
    count += _check_upper.size

    return BoundChainAudit(
        gamma0_sq=gamma0_sq,
        energy_op=e_op,
        times=times,
        tol_bound=tol_bound,
        d_lower=d_lower,
        d_inv_lower=d_inv_lower,
        d0_lower=d0_lower,
        d1_lower=d1_lower,
        violations=tuple(violations),
        violation_count=count,
        note=note,
    )


def verify_bound_chain(run: SimulationRun) -> BoundChainAudit:
    """Recompute the bound-chain audit for a completed run."""
    if run.verdict is Verdict.DIVERGED:
        raise GradeUnsupported("bound chains are not audited on diverged runs")
    return _bound_chain_audit(run.scenario, run.classification, run.u)


def convergence_verdict(run: SimulationRun) -> Verdict:
    """Re-derive the evidence verdict from a completed run."""
    return _verdict(
        run.scenario, run.u, run.y, run.diverged_at, run.bound_audit,
        run.device_status,
    )


def _verdict(
    sc: Scenario,
    u: Signal,
    y: Signal,
    diverged_at: float | None,
    audit: BoundChainAudit | None,
    device_status: DevicePopovStatus,
) -> Verdict:
    """Decide the evidence level from the recorded traces."""
    if diverged_at is not None:
        return Verdict.DIVERGED
    peak0 = max(abs(u.values[0]), abs(y.values[0]))
    if sc.excitation is not None:
        peak0 = max(peak0, abs(sc.excitation.amplitude))
    peak0 = max(peak0, 1e-300)
    peak = max(float(np.max(np.abs(u.values))), float(np.max(np.abs(y.values))))
    tail_start = int(0.95 * len(u))
    tail = max(
        float(np.max(np.abs(u.values[tail_start:]))),
        float(np.max(np.abs(y.values[tail_start:]))),
    )
    device_ok = device_status.declared is not PopovDeclaration.MAY_VIOLATE
    if not device_ok:
        warnings.warn(
            "device carries no usable Popov declaration; verdict capped",
            NonPopovDeviceWarning,
        )
        return Verdict.INCONCLUSIVE
    chain_ok = audit is not None and audit.violation_count == 0
    if tail <= CONV_TOL * peak0 and chain_ok:
        return Verdict.ASYMPTOTIC
    if peak <= BOUND_FACTOR * peak0:
        return Verdict.HYPERSTABLE
    return Verdict.INCONCLUSIVE


def run_closed_loop(sc: Scenario) -> SimulationRun:
    """Run the loop, audit both legs, and attach the evidence verdict."""
    u_arr, y_arr, v_arr, e_arr, diverged_at = _simulate(sc)
    u = Signal(sc.dt, u_arr)
    y = Signal(sc.dt, y_arr)
    v = Signal(sc.dt, v_arr)
    e = Signal(sc.dt, e_arr)
    trace = energy_trace(u, y)
    classification = classify_pr(sc.plant)
    device_status = device_popov_audit(sc.device, v, y)
    audit = None
    if diverged_at is None and classification.grade is not Grade.NOT_PR:
        audit = _bound_chain_audit(sc, classification, u)
    verdict = _verdict(sc, u, y, diverged_at, audit, device_status)
    return SimulationRun(
        scenario=sc,
        u=u, y=y, v=v, e=e,
        E=trace,
        classification=classification,
        device_status=device_status,
        bound_audit=audit,
        verdict=verdict,
        diverged_at=diverged_at,
    )


def batch_run(scenarios: list[Scenario]) -> list[SimulationRun | Exception]:
    """Run scenarios in order; per-scenario failures are collected, not raised."""
    results: list[SimulationRun | Exception] = []
    for sc in scenarios:
        try:
            results.append(run_closed_loop(sc))
        except Exception as exc:  # noqa: BLE001 - aggregation is the contract
            results.append(exc)
    return results


def run_report(run: SimulationRun) -> dict:
    """JSON-ready report for a completed run."""
    e_io = run.E.E
    gamma_trace = max(0.0, -float(np.min(e_io)))
    return {
        "classification": run.classification.to_report(),
        "gamma0_sq": run.bound_audit.gamma0_sq if run.bound_audit else None,
        "gamma0_sq_trace": gamma_trace,
        "bound_violations": (
            [v.to_json_dict() for v in run.bound_audit.violations[:50]]
            if run.bound_audit else []
        ),
        "bound_violation_count": (
            run.bound_audit.violation_count if run.bound_audit else None
        ),
        "verdict": run.verdict.value,
        "diverged_at": run.diverged_at,
        "device": run.device_status.to_report(),
        "energy": {
            "final_io": float(e_io[-1]),
            "final_operator": (
                float(run.bound_audit.energy_op[-1]) if run.bound_audit else None
            ),
        },
        "bound_chain": run.bound_audit.to_report() if run.bound_audit else None,
    }


def write_run_artifacts(run: SimulationRun, out_dir) -> tuple[str, str]:
    """Write traces.csv and report.json; returns their paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    traces_path = os.path.join(out_dir, "traces.csv")
    report_path = os.path.join(out_dir, "report.json")
    write_trace_csv(
        traces_path,
        {
            "t": run.u.times(),
            "u": run.u.values,
            "y": run.y.values,
            "v": run.v.values,
            "E": run.E.E,
        },
    )
    with open(report_path, "w") as fh:
        json.dump(run_report(run), fh, indent=2)
        fh.write("\n")
    return traces_path, report_path

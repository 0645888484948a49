"""Feedback devices for the negative-feedback loop, with Popov declarations.

Every device maps the plant output y to its own output v. The quadrant
devices (static sector, odd power, time-varying gain, deadzone, relay)
guarantee v*y >= 0 pointwise, hence a zero Popov constant. The regenerative
pulse is the designated counter-agent: on its configured interval it injects
energy regardless of y, which makes its running input/output integral go
negative while staying bounded, so a finite Popov constant still exists.

Devices are memoryless in this version; the state slot is threaded through
``apply_device`` for future stateful kinds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DeclarationViolated, InvalidParams
from .signals import Signal, energy_trace, popov_audit

QUADRANT_GAMMA_TOL = 1e-12


class DeviceKind(str, enum.Enum):
    STATIC_SECTOR = "StaticSector"
    CUBIC_ODD_POWER = "CubicOddPower"
    TIME_VARYING_GAIN = "TimeVaryingGain"
    RELAY = "Relay"
    REGENERATIVE_PULSE = "RegenerativePulse"
    DEADZONE_SECTOR = "DeadzoneSector"


class PopovDeclaration(str, enum.Enum):
    ALWAYS_ZERO_GAMMA = "AlwaysPopovWithZeroGamma"
    FINITE_GAMMA = "PopovWithFiniteGamma"
    MAY_VIOLATE = "MayViolate"


_QUADRANT_KINDS = frozenset(
    {
        DeviceKind.STATIC_SECTOR,
        DeviceKind.CUBIC_ODD_POWER,
        DeviceKind.TIME_VARYING_GAIN,
        DeviceKind.DEADZONE_SECTOR,
        DeviceKind.RELAY,
    }
)


@dataclass(frozen=True)
class DeviceSpec:
    kind: DeviceKind
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", DeviceKind(self.kind))
        _validate_params(self.kind, self.params)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind.value, "params": dict(self.params)}


def _validate_params(kind: DeviceKind, params: dict) -> None:
    if kind in (DeviceKind.STATIC_SECTOR, DeviceKind.DEADZONE_SECTOR):
        k1 = float(params.get("k1", 0.0))
        k2 = float(params.get("k2", k1))
        if not (0.0 <= k1 <= k2 < np.inf):
            raise InvalidParams(f"sector slopes need 0 <= k1 <= k2, got {k1}, {k2}")
        if "gain" in params:
            gain = float(params["gain"])
            if not (k1 <= gain <= k2):
                raise InvalidParams("nominal gain must lie inside [k1, k2]")
        if kind is DeviceKind.DEADZONE_SECTOR:
            dz = float(params.get("deadzone", 0.0))
            if dz < 0:
                raise InvalidParams("deadzone width must be nonnegative")
            if dz > 0 and k1 > 0:
                raise InvalidParams(
                    "a deadzone forces v*y = 0 near the origin, so k1 must be 0"
                )
    elif kind is DeviceKind.CUBIC_ODD_POWER:
        p = params.get("p", 3)
        if int(p) != p or p < 1 or p % 2 == 0:
            raise InvalidParams(f"exponent must be an odd integer >= 1, got {p}")
    elif kind is DeviceKind.TIME_VARYING_GAIN:
        samples = np.asarray(params.get("samples", ()), dtype=float)
        sample_dt = float(params.get("sample_dt", 0.0))
        if samples.size < 1 or sample_dt <= 0:
            raise InvalidParams("time-varying gain needs samples and sample_dt > 0")
        if np.any(samples < 0):
            raise InvalidParams("gain samples must be nonnegative")
    elif kind is DeviceKind.RELAY:
        if float(params.get("amplitude", 0.0)) <= 0:
            raise InvalidParams("relay amplitude must be positive")
    elif kind is DeviceKind.REGENERATIVE_PULSE:
        t0 = float(params.get("t_start", 0.0))
        t1 = float(params.get("t_end", 0.0))
        rate = float(params.get("rate", 0.0))
        if not (t1 > t0 >= 0.0):
            raise InvalidParams("pulse interval needs t_end > t_start >= 0")
        if rate <= 0:
            raise InvalidParams("injection rate must be positive")


def sampled_gain(fn, duration: float, sample_dt: float) -> dict:
    """Helper: tabulate a gain function k(t) into TimeVaryingGain params."""
    ts = np.arange(0.0, duration + sample_dt, sample_dt)
    return {"samples": [float(fn(t)) for t in ts], "sample_dt": sample_dt}


def apply_device(
    spec: DeviceSpec, y: float, t: float, state: Any = None
) -> tuple[float, Any]:
    """Evaluate v = F(y, t); returns (v, state') with state threaded through."""
    kind, p = spec.kind, spec.params
    if kind is DeviceKind.STATIC_SECTOR:
        k1 = float(p.get("k1", 0.0))
        k2 = float(p.get("k2", k1))
        gain = float(p.get("gain", 0.5 * (k1 + k2)))
        return min(max(gain, k1), k2) * y, state
    if kind is DeviceKind.CUBIC_ODD_POWER:
        return y ** int(p.get("p", 3)), state
    if kind is DeviceKind.TIME_VARYING_GAIN:
        samples = p["samples"]
        idx = min(int(t / float(p["sample_dt"])), len(samples) - 1)
        return float(samples[idx]) * y, state
    if kind is DeviceKind.RELAY:
        a = float(p["amplitude"])
        return (a if y > 0 else -a if y < 0 else 0.0), state
    if kind is DeviceKind.DEADZONE_SECTOR:
        # sector response applies to y itself outside the zone, so the map
        # jumps at |y| = deadzone; pair with strictly proper plants (D = 0)
        # when loop well-posedness matters
        dz = float(p.get("deadzone", 0.0))
        if abs(y) <= dz:
            return 0.0, state
        k1 = float(p.get("k1", 0.0))
        k2 = float(p.get("k2", k1))
        gain = float(p.get("gain", 0.5 * (k1 + k2)))
        return min(max(gain, k1), k2) * y, state
    if kind is DeviceKind.REGENERATIVE_PULSE:
        if float(p["t_start"]) <= t < float(p["t_end"]):
            return -float(p["rate"]), state
        return 0.0, state
    raise InvalidParams(f"unknown device kind {kind}")


def declared_popov_status(spec: DeviceSpec) -> PopovDeclaration:
    """A-priori Popov declaration implied by the device class."""
    if spec.kind in _QUADRANT_KINDS:
        return PopovDeclaration.ALWAYS_ZERO_GAMMA
    # The pulse injects a bounded amount of energy by construction, so a
    # finite constant always exists.
    return PopovDeclaration.FINITE_GAMMA


@dataclass(frozen=True)
class DevicePopovStatus:
    declared: PopovDeclaration
    measured_gamma0_sq: float
    injection_energy_negative: bool | None = None

    def to_report(self) -> dict:
        return {
            "declared": self.declared.value,
            "measured_gamma0_sq": self.measured_gamma0_sq,
            "injection_energy_negative": self.injection_energy_negative,
        }


def device_popov_audit(spec: DeviceSpec, v: Signal, y: Signal) -> DevicePopovStatus:
    """Cross-check run traces against the device's Popov declaration.

    Quadrant devices must measure a zero constant - anything else signals an
    implementation bug and raises. For the regenerative pulse the audit
    additionally verifies that the running integral <v, y>_t goes strictly
    negative during the injection interval whenever the pulse opposed the
    output there.
    """
    declared = declared_popov_status(spec)
    audit = popov_audit(v, y)
    injection_negative: bool | None = None
    if declared is PopovDeclaration.ALWAYS_ZERO_GAMMA:
        if audit.gamma0_sq > QUADRANT_GAMMA_TOL:
            raise DeclarationViolated(
                f"{spec.kind.value} measured gamma0^2 = {audit.gamma0_sq}, "
                "expected 0 for a first/third-quadrant device"
            )
    if spec.kind is DeviceKind.REGENERATIVE_PULSE:
        t0 = float(spec.params["t_start"])
        t1 = float(spec.params["t_end"])
        ts = v.times()
        window = (ts > t0) & (ts <= t1)
        if np.any(window):
            prod = v.values[: ts.size] * y.values[: ts.size]
            opposed = bool(np.all(prod[window] <= 0.0) and np.any(prod[window] < 0.0))
            trace = energy_trace(v, y)
            injection_negative = bool(
                opposed and np.min(trace.E[window]) < 0.0
            )
    return DevicePopovStatus(
        declared=declared,
        measured_gamma0_sq=audit.gamma0_sq,
        injection_energy_negative=injection_negative,
    )

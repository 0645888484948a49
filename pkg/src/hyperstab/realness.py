"""Positive-realness grading of rational transfer functions.

The classifier is frequency-sweep based: it tests the real part of g(jw) on a
logarithmic grid plus exact w=0 and w->inf limits obtained from the
coefficients. For rational functions, nonnegativity of the real part on the
imaginary axis together with stability is equivalent (maximum principle) to
nonnegativity of Re g on the whole closed right half-plane, so the axis sweep
is the implemented contract.

Grades, from weakest to strongest:

* ``NotPR``  - fails stability, residue or real-part requirements.
* ``PR``     - Re g(jw) >= 0 everywhere, at most simple axis poles with
  real nonnegative residues.
* ``WSPR``   - strictly stable, Re g(jw) > 0 at all finite w, Re g -> 0 at
  infinity with w^2 * Re g(jw) -> d0 > 0 (relative degree one).
* ``SSPR``   - strictly stable, relative degree zero, Re g(jw) >= d > 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import PoleOnGrid, PreconditionNotPR
from .ratfun import (
    TOL_AXIS,
    RationalFunction,
    StabilityClass,
    freq_response_array,
    imaginary_axis_residues,
    stability_class,
    times_s,
)
from .errors import ImproperTransferFunction, RepeatedAxisPole

# Margins below this are indistinguishable from zero.
TOL_MARGIN = 1e-9
# Grid points closer than this (rad/s) to an axis-pole frequency are skipped.
POLE_EXCLUSION_RADIUS = 1e-6


class Grade(str, enum.Enum):
    NOT_PR = "NotPR"
    PR = "PR"
    WSPR = "WSPR"
    SSPR = "SSPR"


@dataclass(frozen=True)
class FrequencyGrid:
    """Logarithmic frequency sweep used by all realness checks."""

    omega_min: float = 1e-4
    omega_max: float = 1e6
    points: int = 4096

    def __post_init__(self):
        if not (self.omega_min > 0 and self.omega_min < self.omega_max):
            raise ValueError("need 0 < omega_min < omega_max")
        if self.points < 64:
            raise ValueError("grid needs at least 64 points")

    def omegas(self) -> np.ndarray:
        return np.geomspace(self.omega_min, self.omega_max, self.points)


DEFAULT_GRID = FrequencyGrid()


@dataclass(frozen=True)
class PRClassification:
    grade: Grade
    d: float = 0.0
    d0: float = 0.0
    d1: float = 0.0
    single_pole_at_origin: bool = False
    g1_grade: Grade | None = None
    phase_deviation_deg: float | None = None
    quadrant_ok: bool | None = None
    diagnostics: tuple[str, ...] = ()

    def to_report(self) -> dict:
        return {
            "grade": self.grade.value,
            "d": self.d,
            "d0": self.d0,
            "d1": self.d1,
            "single_pole_at_origin": self.single_pole_at_origin,
            "g1_grade": self.g1_grade.value if self.g1_grade else None,
            "phase_deviation_deg": self.phase_deviation_deg,
            "quadrant_ok": self.quadrant_ok,
            "diagnostics": list(self.diagnostics),
        }


def _real_part_even_rational(g: RationalFunction) -> tuple[np.ndarray, np.ndarray]:
    """Re g(jw) = R(w^2) / Q(w^2); returns coefficient arrays of R and Q in x = w^2.

    With P(s) = num(s) * den(-s), the real part of P(jw) keeps only even powers
    with alternating signs, and |den(jw)|^2 follows the same rule applied to
    den(s) * den(-s).
    """
    n = np.asarray(g.num.coeffs)
    d = np.asarray(g.den.coeffs)
    d_neg = d * [(-1.0) ** k for k in range(d.size)]
    p = np.convolve(n, d_neg)
    q = np.convolve(d, d_neg)
    r_x = np.array([p[k] * (-1.0) ** (k // 2) for k in range(0, p.size, 2)])
    q_x = np.array([q[k] * (-1.0) ** (k // 2) for k in range(0, q.size, 2)])
    return np.trim_zeros(r_x, "b"), np.trim_zeros(q_x, "b")


def _re_limit_at_infinity(g: RationalFunction) -> float:
    """Exact limit of Re g(jw) as w -> inf (leading-coefficient ratio)."""
    if g.relative_degree > 0:
        return 0.0
    return g.num.leading / g.den.leading


def _omega_sq_re_limit(g: RationalFunction) -> float:
    """Exact limit of w^2 * Re g(jw) as w -> inf; +inf if unbounded."""
    r_x, q_x = _real_part_even_rational(g)
    if r_x.size == 0:
        return 0.0
    deg_r, deg_q = r_x.size - 1, q_x.size - 1
    if deg_r + 1 < deg_q:
        return 0.0
    if deg_r + 1 == deg_q:
        return float(r_x[-1] / q_x[-1])
    return math.inf


def _axis_pole_omegas(g: RationalFunction) -> np.ndarray:
    return np.array(
        [abs(p.imag) for p in g.poles() if abs(p.real) <= TOL_AXIS], dtype=float
    )


def _sweep_omegas(g: RationalFunction, grid: FrequencyGrid) -> np.ndarray:
    omegas = grid.omegas()
    for wp in _axis_pole_omegas(g):
        omegas = omegas[np.abs(omegas - wp) > POLE_EXCLUSION_RADIUS]
    if not any(abs(wp) <= POLE_EXCLUSION_RADIUS for wp in _axis_pole_omegas(g)):
        omegas = np.concatenate(([0.0], omegas))
    return omegas


def _golden_min(f, a: float, b: float, iters: int = 80) -> tuple[float, float]:
    """Golden-section minimum of f on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - (b - a) * invphi
    d = a + (b - a) * invphi
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * invphi
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * invphi
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def real_part_margin(
    g: RationalFunction,
    grid: FrequencyGrid = DEFAULT_GRID,
    exclude_axis_poles: bool = True,
) -> float:
    """Minimum of Re g(jw) over the sweep, w=0, and the w->inf limit.

    The grid minimum is refined by golden-section search on its bracketing
    interval. Frequencies within ``POLE_EXCLUSION_RADIUS`` of an axis pole are
    skipped when ``exclude_axis_poles`` is set; otherwise an in-range axis pole
    raises ``PoleOnGrid``.
    """
    if not exclude_axis_poles:
        for wp in _axis_pole_omegas(g):
            if grid.omega_min <= wp <= grid.omega_max:
                raise PoleOnGrid(f"axis pole at omega={wp}")
    omegas = _sweep_omegas(g, grid)
    if omegas.size == 0:
        raise PoleOnGrid("no usable sweep frequencies remain")
    re = freq_response_array(g, omegas).real
    finite = np.isfinite(re)
    omegas, re = omegas[finite], re[finite]
    k = int(np.argmin(re))
    best = float(re[k])
    lo = omegas[max(k - 1, 0)]
    hi = omegas[min(k + 1, omegas.size - 1)]
    if hi > lo:
        lo = max(lo, 1e-300)

        def f(logw: float) -> float:
            w = math.exp(logw)
            val = freq_response_array(g, np.array([w])).real[0]
            return float(val) if np.isfinite(val) else math.inf

        _, refined = _golden_min(f, math.log(max(lo, 1e-12)), math.log(hi))
        best = min(best, refined)
    return min(best, _re_limit_at_infinity(g))


def phase_deviation(g: RationalFunction, grid: FrequencyGrid = DEFAULT_GRID) -> float:
    """Largest |arg g(jw)| over the grid, in degrees."""
    for wp in _axis_pole_omegas(g):
        if grid.omega_min <= wp <= grid.omega_max:
            raise PoleOnGrid(f"axis pole at omega={wp} inside the grid range")
    vals = freq_response_array(g, grid.omegas())
    return float(np.max(np.abs(np.degrees(np.angle(vals)))))


@dataclass(frozen=True)
class QuadrantReport:
    ok: bool
    min_real: float
    first_tangency_omega: float | None
    first_violation_omega: float | None


def hodograph_quadrant_check(
    g: RationalFunction, grid: FrequencyGrid = DEFAULT_GRID
) -> QuadrantReport:
    """First/third-quadrant confinement of the hodograph for w >= 0.

    Conjugate symmetry extends the verdict to negative frequencies. Tangency
    with the imaginary axis (Re within TOL_MARGIN of zero) is reported, since
    it rules the strongest grade out.
    """
    for wp in _axis_pole_omegas(g):
        if grid.omega_min <= wp <= grid.omega_max:
            raise PoleOnGrid(f"axis pole at omega={wp} inside the grid range")
    omegas = grid.omegas()
    re = freq_response_array(g, omegas).real
    ok = bool(np.all(re >= -TOL_MARGIN))
    viol = np.nonzero(re < -TOL_MARGIN)[0]
    tang = np.nonzero(np.abs(re) <= TOL_MARGIN)[0]
    return QuadrantReport(
        ok=ok,
        min_real=float(np.min(re)),
        first_tangency_omega=float(omegas[tang[0]]) if tang.size else None,
        first_violation_omega=float(omegas[viol[0]]) if viol.size else None,
    )


def _origin_pole_count(g: RationalFunction) -> int:
    return sum(1 for p in g.poles() if abs(p) <= TOL_AXIS)


def classify_pr(
    g: RationalFunction, grid: FrequencyGrid = DEFAULT_GRID
) -> PRClassification:
    """Grade a transfer function and compute the margins d, d0, d1."""
    diagnostics: list[str] = []

    def _ancillary() -> tuple[float | None, bool | None]:
        try:
            pdeg = phase_deviation(g, grid)
        except PoleOnGrid:
            pdeg = None
            diagnostics.append("phase sweep skipped: axis pole inside grid range")
        try:
            quad = hodograph_quadrant_check(g, grid).ok
        except PoleOnGrid:
            quad = None
        return pdeg, quad

    stability = stability_class(g)
    if stability is StabilityClass.UNSTABLE:
        diagnostics.append("denominator has a pole with positive real part "
                           "or a repeated axis pole")
        pdeg, quad = _ancillary()
        return PRClassification(
            Grade.NOT_PR, phase_deviation_deg=pdeg, quadrant_ok=quad,
            diagnostics=tuple(diagnostics),
        )

    try:
        axis_poles = imaginary_axis_residues(g)
    except RepeatedAxisPole as exc:
        return PRClassification(Grade.NOT_PR, diagnostics=(str(exc),))
    for info in axis_poles:
        res = info.residue
        scale = 1.0 + abs(res)
        if abs(res.imag) > TOL_MARGIN * scale or res.real < -TOL_MARGIN * scale:
            diagnostics.append(
                f"axis pole at {info.location} has residue {res}, "
                "which is not real and nonnegative"
            )
            pdeg, quad = _ancillary()
            return PRClassification(
                Grade.NOT_PR, phase_deviation_deg=pdeg, quadrant_ok=quad,
                diagnostics=tuple(diagnostics),
            )

    margin = real_part_margin(g, grid)
    pdeg, quad = _ancillary()
    strictly_stable = stability is StabilityClass.STRICTLY_STABLE

    if strictly_stable and g.relative_degree == 0 and margin > TOL_MARGIN:
        return PRClassification(
            Grade.SSPR, d=margin, phase_deviation_deg=pdeg, quadrant_ok=quad,
        )

    if strictly_stable and g.relative_degree == 1:
        omegas = _sweep_omegas(g, grid)
        sweep = freq_response_array(g, omegas).real
        d0 = _omega_sq_re_limit(g)
        # the coefficient limit must agree with the sweep's top decade,
        # otherwise the limit is an artifact of ill-conditioned coefficients
        top = omegas >= grid.omega_max / 10.0
        top_vals = omegas[top] ** 2 * sweep[top]
        consistent = top_vals.size > 0 and math.isfinite(d0) and bool(
            np.all(np.abs(top_vals - d0) <= 1e-2 * max(abs(d0), TOL_MARGIN))
        )
        if np.all(sweep > 0.0) and consistent and d0 > TOL_MARGIN:
            return PRClassification(
                Grade.WSPR, d=0.0, d0=d0,
                phase_deviation_deg=pdeg, quadrant_ok=quad,
            )
        if np.all(sweep > 0.0) and not consistent and math.isfinite(d0):
            diagnostics.append(
                "squared-frequency limit disagrees with the top-decade sweep; "
                "graded PR at best"
            )

    if margin >= -TOL_MARGIN:
        if g.relative_degree >= 2 and strictly_stable:
            diagnostics.append(
                "relative degree >= 2: w^2 * Re g(jw) tends to zero or below, "
                "so no strict grade applies"
            )
        single = _origin_pole_count(g) == 1
        g1_grade: Grade | None = None
        d1 = 0.0
        if single:
            try:
                g1 = times_s(g)
                sub = classify_pr(g1, grid)
                g1_grade = sub.grade
                if sub.grade is Grade.SSPR:
                    d1 = sub.d
            except ImproperTransferFunction:
                diagnostics.append("s*g(s) is improper; no derived-function margin")
        return PRClassification(
            Grade.PR, d=max(0.0, margin), single_pole_at_origin=single,
            g1_grade=g1_grade, d1=d1,
            phase_deviation_deg=pdeg, quadrant_ok=quad,
            diagnostics=tuple(diagnostics),
        )

    diagnostics.append(f"real part drops to {margin:.6g} on the sweep")
    return PRClassification(
        Grade.NOT_PR, phase_deviation_deg=pdeg, quadrant_ok=quad,
        diagnostics=tuple(diagnostics),
    )


@dataclass(frozen=True)
class CrossRelationReport:
    """Residuals of the real/imaginary cross-identities between g and s*g."""

    max_identity_residual: float
    identity_violations: tuple[tuple[float, str, float], ...]
    sign_violations: tuple[tuple[float, str, float], ...]

    @property
    def identities_hold(self) -> bool:
        return not self.identity_violations


def spc_cross_relations(
    g: RationalFunction,
    grid: FrequencyGrid = DEFAULT_GRID,
    rel_tol: float = 1e-9,
) -> CrossRelationReport:
    """Check Re g = Im g1 / w and Re g1 = -w Im g for g1(s) = s g(s).

    Requires g to be PR with a single simple origin pole. The auxiliary sign
    conditions Im g <= 0 and Im g1 <= 0 are checked as well and every failure
    is reported rather than raised; the second one fails for legitimate
    members of this class, so it is diagnostic only.
    """
    cls = classify_pr(g, grid)
    if cls.grade not in (Grade.PR, Grade.WSPR, Grade.SSPR) or not cls.single_pole_at_origin:
        raise PreconditionNotPR(
            "cross relations need a PR function with a single simple origin pole"
        )
    g1 = times_s(g)
    omegas = _sweep_omegas(g, grid)
    omegas = omegas[omegas > 0.0]
    gv = freq_response_array(g, omegas)
    g1v = freq_response_array(g1, omegas)

    identity_violations: list[tuple[float, str, float]] = []
    sign_violations: list[tuple[float, str, float]] = []
    res1 = np.abs(gv.real - g1v.imag / omegas)
    res2 = np.abs(g1v.real + omegas * gv.imag)
    scale1 = 1.0 + np.abs(gv.real)
    scale2 = 1.0 + np.abs(g1v.real)
    for w, r, s in zip(omegas, res1, scale1):
        if r > rel_tol * s:
            identity_violations.append((float(w), "Re g != Im g1 / w", float(r)))
    for w, r, s in zip(omegas, res2, scale2):
        if r > rel_tol * s:
            identity_violations.append((float(w), "Re g1 != -w Im g", float(r)))
    for w, v in zip(omegas, gv.imag):
        if v > TOL_MARGIN:
            sign_violations.append((float(w), "Im g > 0", float(v)))
    for w, v in zip(omegas, g1v.imag):
        if v > TOL_MARGIN:
            sign_violations.append((float(w), "Im g1 > 0", float(v)))
    max_res = float(max(np.max(res1 / scale1), np.max(res2 / scale2)))
    return CrossRelationReport(
        max_identity_residual=max_res,
        identity_violations=tuple(identity_violations),
        sign_violations=tuple(sign_violations),
    )

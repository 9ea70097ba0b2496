"""Closed-form bounds with their inputs recorded, so every value can be re-derived.

Where a bound is only known up to a constant, the constant used here is pinned by
composing the explicit steps of its derivation and reported with the value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

from .errors import UsageError

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
SQRT6 = math.sqrt(6.0)

# reference values from the exponential lower-bound regime, reported but not evaluated
L2_FLOOR = 1 / (50 * math.e ** 2 * math.pi ** 2)
LOSS_FLOOR = 1e-4
SAWTOOTH_POLY_FLOOR = 1 / (5 * math.e * math.pi)


def _estimation_constant() -> float:
    """Constant ``C`` in ``gap <= C M^3 sqrt(log(1/delta)/m)`` for ``M >= 1`` and ``delta <= 1/e``.

    The explicit bound is ``8U(R + 1/sqrt m) + U^2 sqrt(log(2/delta)/(2m))`` with
    ``U = 1 + sqrt3 (M + 2/3)^{3/2}`` and ``R = 4 sqrt6 (M + 2/3)^{3/2}/sqrt m``. For
    ``M >= 1``, ``(M + 2/3)^{3/2} <= k M^{3/2}`` with ``k = (5/3)^{3/2}``, and
    ``log(2/delta) <= (1 + log 2) log(1/delta)``.
    """
    k = (5 / 3) ** 1.5
    u = 1 + SQRT3 * k
    r = 4 * SQRT6 * k
    return 8 * u * (r + 1) + u * u * math.sqrt((1 + math.log(2)) / 2)


ESTIMATION_C = _estimation_constant()
# two estimation events at confidence delta/2, the cheaper one at accuracy eps/(4 alpha),
# and interpolant cost at most 100 sqrt2 (d + m2^p)
M3_C0 = 16 * (1 + math.log(2)) * ESTIMATION_C ** 2 * (100 * SQRT2) ** 6


def _check_prob(delta, upper_inclusive=False):
    ok = 0 < delta <= 1 if upper_inclusive else 0 < delta < 1
    if not ok:
        raise UsageError(f"delta must lie in (0, 1), got {delta!r}")


def _check_nonneg(name, v):
    if not v >= 0:
        raise UsageError(f"{name} must be nonnegative, got {v!r}")


def _check_count(name, v, low=1):
    if int(v) != v or v < low:
        raise UsageError(f"{name} must be an integer >= {low}, got {v!r}")


def rademacher_bound(M: float, m: int) -> float:
    """``4 sqrt6 (M + 2/3)^{3/2} / sqrt m`` for depth-3 nets of cost at most ``M``."""
    _check_nonneg("M", M)
    _check_count("m", m)
    return 4 * SQRT6 * (M + 2 / 3) ** 1.5 / math.sqrt(m)


def sup_norm_bound(M: float) -> float:
    """``1 + sqrt3 (M + 2/3)^{3/2}``: bound on ``|f - h|`` over X_d for targets in [-1, 1]."""
    _check_nonneg("M", M)
    return 1 + SQRT3 * (M + 2 / 3) ** 1.5


def estimation_error_explicit(M: float, m: int, delta: float) -> float:
    """Two-sided uniform deviation bound before simplification; valid for all ``M >= 0``."""
    _check_nonneg("M", M)
    _check_count("m", m)
    _check_prob(delta)
    U = sup_norm_bound(M)
    R = rademacher_bound(M, m)
    return 8 * U * (R + 1 / math.sqrt(m)) + U * U * math.sqrt(math.log(2 / delta) / (2 * m))


def estimation_error_bound(M: float, m: int, delta: float) -> float:
    """``C M^3 sqrt(log(1/delta)/m)`` with the pinned ``C = ESTIMATION_C``.

    Dominates :func:`estimation_error_explicit` whenever ``M >= 1`` and ``delta <= 1/e``.
    """
    _check_nonneg("M", M)
    _check_count("m", m)
    _check_prob(delta)
    return ESTIMATION_C * M ** 3 * math.sqrt(math.log(1 / delta) / m)


def interpolant_cost_bound(m: int, d: int, delta: float) -> float:
    """``16 sqrt2 m^{(d+3)/(d-1)} delta^{-2/(d-1)}``; holds with probability ``1 - delta``."""
    _check_count("m", m)
    if d < 3:
        raise UsageError("the interpolant cost bound needs d >= 3")
    _check_prob(delta)
    return 16 * SQRT2 * m ** ((d + 3) / (d - 1)) * delta ** (-2 / (d - 1))


def m3_sample_complexity(eps: float, delta: float, d: int, m2_value: float, alpha: float = 1.0) -> float:
    """``C0 alpha^6 (d + m2^{(d+3)/(d-1)})^6 log(1/delta) / eps^2`` with ``C0 = M3_C0``."""
    if not eps > 0:
        raise UsageError("eps must be positive")
    _check_prob(delta)
    if d < 2:
        raise UsageError("d must be at least 2")
    if not m2_value > 0:
        raise UsageError("m2_value must be positive")
    if not alpha >= 1:
        raise UsageError("alpha must be at least 1")
    p = (d + 3) / (d - 1)
    return M3_C0 * alpha ** 6 * (d + m2_value ** p) ** 6 * math.log(1 / delta) / eps ** 2


def depth3_sample_complexity(eps: float, delta: float, d: int, exponent: float = 15.0) -> float:
    """``d^exponent log(1/delta) / eps^2``; the exponent is a parameter, not a claim of tightness."""
    if not eps > 0:
        raise UsageError("eps must be positive")
    _check_prob(delta)
    return d ** exponent * math.log(1 / delta) / eps ** 2


def separation_tail(m: int, eta: float, d: int) -> float:
    _check_count("m", m)
    _check_nonneg("eta", eta)
    return m * m * eta ** (d - 1)


# ------------------------------------------------------------------ reports

_REGISTRY = {
    "rademacher": (rademacher_bound, ("M", "m"), "4*sqrt(6)*(M+2/3)^(3/2)/sqrt(m)", None),
    "estimation": (estimation_error_bound, ("M", "m", "delta"),
                   "C*M^3*sqrt(log(1/delta)/m)", ESTIMATION_C),
    "estimation_explicit": (estimation_error_explicit, ("M", "m", "delta"),
                            "8U(R+1/sqrt(m)) + U^2 sqrt(log(2/delta)/(2m)), U=1+sqrt(3)(M+2/3)^(3/2)",
                            None),
    "tent": (interpolant_cost_bound, ("m", "d", "delta"),
             "16*sqrt(2)*m^((d+3)/(d-1))*delta^(-2/(d-1))", None),
    "m3": (m3_sample_complexity, ("eps", "delta", "d", "m2_value", "alpha"),
           "C0*alpha^6*(d+m2^((d+3)/(d-1)))^6*log(1/delta)/eps^2", M3_C0),
    "depth3": (depth3_sample_complexity, ("eps", "delta", "d", "exponent"),
               "d^exponent*log(1/delta)/eps^2", None),
    "separation": (separation_tail, ("m", "eta", "d"), "m^2*eta^(d-1)", None),
}

BOUND_IDS = tuple(_REGISTRY)
INTEGER_INPUTS = frozenset({"m", "d"})


def bound_inputs(bound_id: str) -> tuple:
    try:
        return _REGISTRY[bound_id][1]
    except KeyError:
        raise UsageError(f"unknown bound {bound_id!r}; choose from {', '.join(BOUND_IDS)}") from None


@dataclass(frozen=True)
class BoundReport:
    bound_id: str
    inputs: MappingProxyType
    value: float
    formula: str
    constant: float | None = None

    def recompute(self) -> float:
        return _REGISTRY[self.bound_id][0](**self.inputs)

    def as_record(self) -> dict:
        rec = {"bound": self.bound_id, **self.inputs, "value": self.value, "formula": self.formula}
        if self.constant is not None:
            rec["constant"] = self.constant
        return rec


def evaluate_bound(bound_id: str, **inputs) -> BoundReport:
    names = bound_inputs(bound_id)
    fn, _, formula, const = _REGISTRY[bound_id]
    unknown = set(inputs) - set(names)
    if unknown:
        raise UsageError(f"unexpected inputs for {bound_id}: {sorted(unknown)}")
    clean = {}
    for k, v in inputs.items():
        clean[k] = int(v) if k in INTEGER_INPUTS and float(v) == int(v) else float(v)
    try:
        value = fn(**clean)
    except TypeError as exc:
        raise UsageError(f"{bound_id} needs inputs {', '.join(names)}: {exc}") from None
    return BoundReport(bound_id, MappingProxyType(clean), value, formula, const)

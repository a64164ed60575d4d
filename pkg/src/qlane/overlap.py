"""Angle-encoded state overlap and the centroid training recursion.

A raw feature value v (for example an 8-bit intensity) is encoded as the
rotation angle theta = v * pi / 180. Two encoded values are compared by
preparing Ry(-theta2) Ry(theta1) |0> and measuring: the probability of |0>
is cos^2((theta1 - theta2) / 2), so the state overlap is its square root.

The classifier's reference angle (the centroid) is trained by a Newton
recursion on the trace of the product of the two rotation matrices:
    D(theta)       = 2 cos(tau),    tau = theta - x
    dD/dtheta      = -2 sin(tau)
    theta_next     = theta - (D - 2) / (-2 sin(tau))  ==  theta - tan(tau/2)
One pass evaluates every data point and applies the averaged step, repeated
until the epoch update falls below tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quantum import PureState, apply_gate, measure, ry

DEG_TO_RAD = math.pi / 180.0

#: Updates are skipped when |sin(tau)| falls below this (Newton step singular).
SIN_GUARD = 1e-9

#: Per-step clamp keeping training stable on dispersed data.
STEP_CLAMP = math.pi / 4.0


@dataclass(frozen=True)
class AngleFeature:
    """A raw feature value and its angle encoding in radians."""

    value: float
    theta: float


@dataclass(frozen=True)
class OverlapResult:
    """State overlap derived from the probability of measuring |0>."""

    inner_product: float
    p_zero: float
    shots: int  # 0 means analytic


@dataclass(frozen=True)
class Centroid:
    theta: float
    trained_on: str = "shadow"
    iterations: int = 0


@dataclass(frozen=True)
class TraceStep:
    """One recorded training evaluation: angle, product-matrix angle, trace."""

    theta: float
    tau: float
    trace_value: float
    delta: float  # trace_value - 2, the residual driven to zero


@dataclass
class TrainingTrace:
    steps: list[TraceStep] = field(default_factory=list)

    def record(self, theta: float, tau: float) -> None:
        d = 2.0 * math.cos(tau)
        self.steps.append(TraceStep(theta=theta, tau=tau, trace_value=d, delta=d - 2.0))


def encode(value: float) -> AngleFeature:
    """Encode a raw feature value as theta = value * pi / 180."""
    if not math.isfinite(value):
        raise ValueError(f"feature value must be finite, got {value}")
    return AngleFeature(value=value, theta=value * DEG_TO_RAD)


def overlap(
    theta1: float,
    theta2: float,
    shots: int = 0,
    seed: int | None = None,
) -> OverlapResult:
    """Overlap of the states encoding theta1 and theta2.

    Prepares Ry(-theta2) Ry(theta1) |0> and reads P(|0>); the overlap is
    sqrt(P(|0>)). With shots = 0 the probability is exact; otherwise it is
    the sampled frequency of outcome 0.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    state = apply_gate(PureState.zero(1), ry(theta1))
    state = apply_gate(state, ry(-theta2))
    result = measure(state, shots=shots, seed=seed)
    p0 = float(result.probabilities[0]) if shots == 0 else result.frequency(0)
    return OverlapResult(inner_product=math.sqrt(p0), p_zero=p0, shots=shots)


def overlap_analytic(theta1: float, theta2: float) -> float:
    """Closed form |cos((theta1 - theta2) / 2)|."""
    return abs(math.cos((theta1 - theta2) / 2.0))


def classify(
    value: float,
    centroid: Centroid,
    threshold: float,
    shots: int = 0,
    seed: int | None = None,
) -> str:
    """Label a feature value "shadow" when its centroid overlap meets the threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    result = overlap(encode(value).theta, centroid.theta, shots=shots, seed=seed)
    return "shadow" if result.inner_product >= threshold else "shadowless"


def newton_step(theta: float, x: float) -> float:
    """Single Newton update driving the product-matrix trace to 2.

    Contracts |theta - x| with factor ~1/2 near the fixed point; the step is
    skipped (theta returned unchanged) when sin(tau) is too small to divide by.
    """
    tau = theta - x
    if abs(math.sin(tau)) < SIN_GUARD:
        return theta
    step = math.tan(tau / 2.0)
    return theta - max(-STEP_CLAMP, min(STEP_CLAMP, step))


def train_centroid(
    values: list[float],
    theta0: float | None = None,
    max_iters: int = 50,
    trained_on: str = "shadow",
    tol: float = 1e-6,
    raw_step: bool = False,
) -> tuple[Centroid, TrainingTrace]:
    """Train the reference angle on raw feature values.

    Each epoch evaluates tau = theta - x for every point, records the trace
    entry, and moves theta by the averaged, clamped Newton step. Training
    stops when the epoch update drops below `tol` or after `max_iters`
    epochs. theta0 defaults to the arithmetic mean of the encoded angles.

    raw_step=True flips the update to the uncorrected +tan(tau/2) form,
    which diverges from the data; it exists only for studying the recursion.
    """
    if not values:
        raise ValueError("cannot train a centroid on an empty value list")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    angles = [encode(v).theta for v in values]
    theta = float(np.mean(angles)) if theta0 is None else float(theta0)
    sign = 1.0 if raw_step else -1.0

    trace = TrainingTrace()
    epochs = 0
    for _ in range(max_iters):
        epochs += 1
        steps = []
        for x in angles:
            tau = theta - x
            trace.record(theta, tau)
            if abs(math.sin(tau)) < SIN_GUARD:
                continue
            steps.append(math.tan(tau / 2.0))
        if not steps:
            break
        delta = sign * float(np.mean(steps))
        delta = max(-STEP_CLAMP, min(STEP_CLAMP, delta))
        theta = theta + delta
        if abs(delta) < tol:
            break
    return Centroid(theta=theta, trained_on=trained_on, iterations=epochs), trace


def save_centroid(centroid: Centroid, path: str | Path) -> None:
    """Write the centroid as a small key=value text record."""
    text = (
        f"theta = {centroid.theta!r}\n"
        f"trained_on = {centroid.trained_on}\n"
        f"iterations = {centroid.iterations}\n"
    )
    Path(path).write_text(text)


def load_centroid(path: str | Path) -> Centroid:
    fields: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return Centroid(
            theta=float(fields["theta"]),
            trained_on=fields.get("trained_on", "shadow"),
            iterations=int(fields.get("iterations", "0")),
        )
    except KeyError as exc:
        raise ValueError(f"centroid file {path} is missing field {exc}") from exc

"""Decision heads mapping a slope pair to a driving direction.

Two heads are provided. The overlap rule compares the |0> probabilities of
two single-qubit circuits (one per slope, each against a reference angle):
a gap below 0.2 means straight, a larger first probability means right,
otherwise left. The variational head is a fixed 2-qubit, 4-parameter
circuit trained against a mean-squared-error objective with a
derivative-free optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .quantum import PureState, apply_gate, cz, ry

STRAIGHT_GAP = 0.2
DEFAULT_REFERENCE_THETA = math.pi / 2.0

FEATURE_MAP_VERSION = "ry-atan-cz-v1"
ANSATZ_VERSION = "ry-cz-ry-v1"
CLASS_MAP_VERSION = "p00-straight-split11-v1"


class Direction(str, Enum):
    STRAIGHT = "straight"
    RIGHT = "right"
    LEFT = "left"


#: Fixed class order used for score vectors and argmax tie-breaking.
CLASS_ORDER = (Direction.STRAIGHT, Direction.RIGHT, Direction.LEFT)


@dataclass(frozen=True)
class VqcModel:
    """2-qubit variational classifier with four trainable rotation angles."""

    params: tuple
    feature_map: str = FEATURE_MAP_VERSION
    ansatz: str = ANSATZ_VERSION
    class_map: str = CLASS_MAP_VERSION

    def __post_init__(self):
        if len(self.params) != 4:
            raise ValueError(f"expected 4 parameters, got {len(self.params)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def num_qubits(self) -> int:
        return 2


@dataclass
class ObjectiveTrace:
    """(evaluation index, objective value) per optimizer evaluation."""

    entries: list[tuple[int, float]] = field(default_factory=list)

    def record(self, value: float) -> None:
        self.entries.append((len(self.entries), float(value)))

    def running_best(self) -> list[float]:
        best, out = math.inf, []
        for _, v in self.entries:
            best = min(best, v)
            out.append(best)
        return out


@dataclass(frozen=True)
class TrainingSet:
    features: tuple  # of (slope, slope) pairs
    labels: tuple  # of Direction

    def __post_init__(self):
        feats = tuple(tuple(float(s) for s in pair) for pair in self.features)
        labels = tuple(Direction(l) for l in self.labels)
        if len(feats) != len(labels):
            raise ValueError("features and labels must have equal length")
        if not feats:
            raise ValueError("training set is empty")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.features)


def slope_to_angle(slope: float) -> float:
    """Line inclination atan(s) + pi/2, bounded to (0, pi)."""
    return math.atan(slope) + math.pi / 2.0


def circuit_probability(theta: float, reference_theta: float, shots: int = 0,
                        seed: int | None = None) -> float:
    """P(|0>) of Ry(-reference) Ry(theta) |0>."""
    state = apply_gate(PureState.zero(1), ry(theta))
    state = apply_gate(state, ry(-reference_theta))
    p0 = float(state.probabilities()[0])
    if shots == 0:
        return p0
    rng = np.random.default_rng(seed)
    return rng.binomial(shots, p0) / shots


def direction_from_probabilities(p1: float, p2: float) -> Direction:
    """Decision rule on the two circuit probabilities.

    The boundary |p1 - p2| == 0.2 falls to the sign branch, so the three
    regions partition probability space exactly."""
    if abs(p1 - p2) < STRAIGHT_GAP:
        return Direction.STRAIGHT
    return Direction.RIGHT if p1 > p2 else Direction.LEFT


def overlap_decision(
    pair,
    reference_theta: float = DEFAULT_REFERENCE_THETA,
    shots: int = 0,
    seed: int | None = None,
) -> Direction:
    """Overlap decision head; p1 belongs to the smaller slope."""
    s1, s2 = sorted(float(s) for s in pair)
    if not (math.isfinite(s1) and math.isfinite(s2)):
        raise ValueError("slopes must be finite")
    p1 = circuit_probability(slope_to_angle(s1), reference_theta, shots, seed)
    p2 = circuit_probability(slope_to_angle(s2), reference_theta, shots,
                             None if seed is None else seed + 1)
    return direction_from_probabilities(p1, p2)


def _vqc_state(model: VqcModel, pair) -> PureState:
    s1, s2 = (float(s) for s in pair)
    p = model.params
    state = PureState.zero(2)
    state = apply_gate(state, ry(math.atan(s1)), target=0)
    state = apply_gate(state, ry(math.atan(s2)), target=1)
    state = apply_gate(state, cz())
    state = apply_gate(state, ry(p[0]), target=0)
    state = apply_gate(state, ry(p[1]), target=1)
    state = apply_gate(state, cz())
    state = apply_gate(state, ry(p[2]), target=0)
    state = apply_gate(state, ry(p[3]), target=1)
    return state


def scores_from_outcome_probs(probs: np.ndarray) -> np.ndarray:
    """Map 2-qubit outcome probabilities to (straight, right, left) scores.

    P(00) backs straight, P(10) right, P(01) left; P(11) splits evenly
    between right and left, so the scores sum to one."""
    return np.array([
        probs[0],
        probs[2] + probs[3] / 2.0,
        probs[1] + probs[3] / 2.0,
    ])


def vqc_forward(model: VqcModel, pair) -> np.ndarray:
    """Per-class score vector in CLASS_ORDER, summing to one."""
    return scores_from_outcome_probs(_vqc_state(model, pair).probabilities())


def vqc_decide(model: VqcModel, pair) -> Direction:
    return CLASS_ORDER[int(np.argmax(vqc_forward(model, pair)))]


def _one_hot(label: Direction) -> np.ndarray:
    out = np.zeros(len(CLASS_ORDER))
    out[CLASS_ORDER.index(label)] = 1.0
    return out


def vqc_mse(params, data: TrainingSet) -> float:
    """Mean squared error between one-hot labels and score vectors."""
    model = VqcModel(params=tuple(params))
    total = 0.0
    for pair, label in zip(data.features, data.labels):
        diff = vqc_forward(model, pair) - _one_hot(label)
        total += float(np.dot(diff, diff))
    return total / len(data)


def _compass_search(objective, x0: np.ndarray, budget: int) -> None:
    """Deterministic pattern search fallback: coordinate steps, halving on
    failure, stopping at the evaluation budget (spent via `objective`)."""
    spent = [0]

    def f(x):
        spent[0] += 1
        return objective(x)

    x = np.array(x0, dtype=np.float64)
    fx = f(x)
    step = math.pi / 4.0
    while spent[0] < budget:
        improved = False
        for i in range(len(x)):
            for sign in (1.0, -1.0):
                if spent[0] >= budget:
                    return
                cand = x.copy()
                cand[i] += sign * step
                fc = f(cand)
                if fc < fx:
                    x, fx = cand, fc
                    improved = True
                    break
            if improved:
                break
        if not improved:
            step /= 2.0


def vqc_train(
    data: TrainingSet,
    maxiter: int = 30,
    seed: int | None = None,
    optimizer: str = "cobyla",
) -> tuple[VqcModel, ObjectiveTrace]:
    """Fit the classifier under a hard objective-evaluation budget.

    Every objective evaluation is recorded in the trace; the returned model
    carries the best parameters seen, so the result never degrades with
    extra evaluations. Deterministic for a fixed seed."""
    if maxiter < 1:
        raise ValueError("maxiter must be >= 1")
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-math.pi, math.pi, size=4)

    trace = ObjectiveTrace()
    best = {"value": math.inf, "params": tuple(x0)}

    def objective(params):
        if len(trace.entries) >= maxiter:
            # budget exhausted: keep reporting without recording
            return vqc_mse(params, data)
        value = vqc_mse(params, data)
        trace.record(value)
        if value < best["value"]:
            best["value"] = value
            best["params"] = tuple(float(p) for p in params)
        return value

    if optimizer == "cobyla":
        minimize(objective, x0, method="COBYLA", options={"maxiter": maxiter})
    elif optimizer == "compass":
        _compass_search(objective, x0, maxiter)
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    return VqcModel(params=best["params"]), trace


def vqc_score(model: VqcModel, data: TrainingSet) -> float:
    """Fraction of samples whose argmax score matches the label."""
    hits = sum(
        1
        for pair, label in zip(data.features, data.labels)
        if vqc_decide(model, pair) is label
    )
    return hits / len(data)


def save_vqc(model: VqcModel, path: str | Path) -> None:
    lines = [f"param{i} = {p!r}" for i, p in enumerate(model.params)]
    lines += [
        f"feature_map = {model.feature_map}",
        f"ansatz = {model.ansatz}",
        f"class_map = {model.class_map}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_vqc(path: str | Path) -> VqcModel:
    fields: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        params = tuple(float(fields[f"param{i}"]) for i in range(4))
    except KeyError as exc:
        raise ValueError(f"model file {path} is missing field {exc}") from exc
    return VqcModel(
        params=params,
        feature_map=fields.get("feature_map", FEATURE_MAP_VERSION),
        ansatz=fields.get("ansatz", ANSATZ_VERSION),
        class_map=fields.get("class_map", CLASS_MAP_VERSION),
    )

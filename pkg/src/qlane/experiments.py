"""Noise-robustness sweeps, accuracy evaluation, and the timing harness."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import imaging, shadow
from .decision import (
    CLASS_ORDER,
    DEFAULT_REFERENCE_THETA,
    Direction,
    TrainingSet,
    VqcModel,
    direction_from_probabilities,
    overlap_decision,
    scores_from_outcome_probs,
    slope_to_angle,
    vqc_decide,
    vqc_train,
)
from .overlap import Centroid, encode
from .quantum import (
    CHANNEL_KINDS,
    DensityMatrix,
    KrausChannel,
    apply_channel,
    apply_gate_density,
    cz,
    make_channel,
    ry,
)

#: Reported sweep sample points.
DEFAULT_P_GRID = tuple(round(0.11 * i, 2) for i in range(10))

SWEEP_METHODS = ("overlap", "vqc")


@dataclass(frozen=True)
class NoiseSweepRow:
    method: str
    channel: str
    p: float
    accuracy: float
    n_samples: int
    seed: int | None


@dataclass(frozen=True)
class BenchRow:
    stage: str
    width: int
    height: int
    wall_time_s: float
    repetitions: int


def _noisy_circuit_probability(theta: float, reference_theta: float,
                               channel: KrausChannel) -> float:
    """P(|0>) with the channel applied after each of the two gates."""
    rho = DensityMatrix.zero(1)
    rho = apply_gate_density(rho, ry(theta))
    rho = apply_channel(rho, channel)
    rho = apply_gate_density(rho, ry(-reference_theta))
    rho = apply_channel(rho, channel)
    return float(rho.probabilities()[0])


def _noisy_vqc_scores(model: VqcModel, pair, channel: KrausChannel) -> np.ndarray:
    s1, s2 = (float(s) for s in pair)
    p = model.params
    rho = DensityMatrix.zero(2)
    gates = [
        (ry(math.atan(s1)), (0,)),
        (ry(math.atan(s2)), (1,)),
        (cz(), (0, 1)),
        (ry(p[0]), (0,)),
        (ry(p[1]), (1,)),
        (cz(), (0, 1)),
        (ry(p[2]), (0,)),
        (ry(p[3]), (1,)),
    ]
    for gate, touched in gates:
        rho = apply_gate_density(rho, gate, target=touched[0] if gate.arity == 1 else 0)
        for q in touched:
            rho = apply_channel(rho, channel, target=q)
    return scores_from_outcome_probs(rho.probabilities())


def noisy_decide(
    pair,
    reference_theta: float = DEFAULT_REFERENCE_THETA,
    channel: KrausChannel | None = None,
    method: str = "overlap",
    model: VqcModel | None = None,
) -> Direction:
    """Direction under a noise channel applied after every gate.

    Strength 0 short-circuits to the noiseless path: the written form of the
    phase-damping operators is a Z conjugation at p = 0, and sweeps must
    reproduce noiseless results exactly there.
    """
    if method not in SWEEP_METHODS:
        raise ValueError(f"method must be one of {SWEEP_METHODS}, got {method!r}")
    noiseless = channel is None or channel.p == 0.0
    if method == "overlap":
        if noiseless:
            return overlap_decision(pair, reference_theta)
        s1, s2 = sorted(float(s) for s in pair)
        p1 = _noisy_circuit_probability(slope_to_angle(s1), reference_theta, channel)
        p2 = _noisy_circuit_probability(slope_to_angle(s2), reference_theta, channel)
        return direction_from_probabilities(p1, p2)
    if model is None:
        raise ValueError("the vqc method needs a trained model")
    if noiseless:
        return vqc_decide(model, pair)
    return CLASS_ORDER[int(np.argmax(_noisy_vqc_scores(model, pair, channel)))]


def evaluate(predictions: list[Direction], labels: list[Direction]) -> float:
    """Fraction of matching entries."""
    if len(predictions) != len(labels):
        raise ValueError(f"length mismatch: {len(predictions)} vs {len(labels)}")
    if not predictions:
        raise ValueError("nothing to evaluate")
    hits = sum(1 for p, l in zip(predictions, labels) if Direction(p) is Direction(l))
    return hits / len(predictions)


def sweep(
    methods=SWEEP_METHODS,
    channels=CHANNEL_KINDS,
    p_grid=DEFAULT_P_GRID,
    dataset=None,
    seed: int | None = None,
    reference_theta: float = DEFAULT_REFERENCE_THETA,
    vqc_maxiter: int = 30,
) -> list[NoiseSweepRow]:
    """Accuracy per (method, channel, strength) over a labelled slope dataset.

    `dataset` is a sequence of (pair, direction) items. The variational
    model is trained once, noiselessly, on the dataset before sweeping.
    Row order and per-row derived seeds are deterministic for a fixed seed.
    """
    if not dataset:
        raise ValueError("sweep needs a non-empty dataset")
    if not methods or not channels or len(p_grid) == 0:
        raise ValueError("methods, channels, and p_grid must be non-empty")
    pairs = [tuple(float(s) for s in pair) for pair, _ in dataset]
    labels = [Direction(label) for _, label in dataset]

    model = None
    if "vqc" in methods:
        training = TrainingSet(features=tuple(pairs), labels=tuple(labels))
        model, _ = vqc_train(training, maxiter=vqc_maxiter, seed=seed)

    rows = []
    row_index = 0
    for method in methods:
        for kind in channels:
            for p in p_grid:
                channel = make_channel(kind, p)
                predictions = [
                    noisy_decide(pair, reference_theta, channel, method=method, model=model)
                    for pair in pairs
                ]
                rows.append(
                    NoiseSweepRow(
                        method=method,
                        channel=kind,
                        p=float(p),
                        accuracy=evaluate(predictions, labels),
                        n_samples=len(pairs),
                        seed=None if seed is None else seed ^ row_index,
                    )
                )
                row_index += 1
    return rows


def sweep_csv(rows: list[NoiseSweepRow]) -> str:
    lines = ["method,channel,p,accuracy,n,seed"]
    for r in rows:
        seed = "" if r.seed is None else str(r.seed)
        lines.append(f"{r.method},{r.channel},{r.p:.2f},{r.accuracy:.6f},{r.n_samples},{seed}")
    return "\n".join(lines) + "\n"


def _bench_shadow_detect(img: np.ndarray) -> None:
    small = imaging.downsample(img, 4)
    centroid = Centroid(theta=encode(40.0).theta)
    shadow.detect(small, centroid, threshold=0.75, grid_n=79)


STAGE_RUNNERS = {
    "shadow-detect": _bench_shadow_detect,
    "median-filter": lambda img: imaging.median_filter(img, iterations=30),
    "gaussian-blur": lambda img: imaging.gaussian_blur(img),
    "canny": lambda img: imaging.canny(img),
    "hough": lambda img: imaging.hough_segments(imaging.canny(img), seed=0),
}


def bench(stage: str, image: np.ndarray, repetitions: int = 3, runner=None) -> BenchRow:
    """Median wall time of a stage over `repetitions` runs after one warm-up."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if runner is None:
        try:
            runner = STAGE_RUNNERS[stage]
        except KeyError:
            raise ValueError(f"unknown stage {stage!r}; expected one of {sorted(STAGE_RUNNERS)}")
    runner(image)  # warm-up
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        runner(image)
        times.append(time.perf_counter() - start)
    h, w = image.shape[:2]
    return BenchRow(
        stage=stage,
        width=w,
        height=h,
        wall_time_s=float(np.median(times)),
        repetitions=repetitions,
    )


def bench_csv(rows: list[BenchRow]) -> str:
    lines = ["stage,width,height,wall_time_s,reps"]
    for r in rows:
        lines.append(f"{r.stage},{r.width},{r.height},{r.wall_time_s:.6f},{r.repetitions}")
    return "\n".join(lines) + "\n"

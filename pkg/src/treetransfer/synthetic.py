"""Synthetic source-to-target transfer challenges over the unit cube.

Each challenge is a binary concept on the source domain plus a transformation
of it into the target domain. Most concepts start from a "standard random
box": an axis-aligned box inside [0, 1]^3 with volume 0.25.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .data import Dataset, Schema
from .forest import derive_rng

CHALLENGES = (
    "mixture",
    "inversion",
    "moving",
    "expanding",
    "shrinking",
    "axis_swap",
    "noisy_target",
    "noisy_source",
    "rotated",
    "fisheye",
    "refined_sine",
)

BOX_VOLUME = 0.25
NOISE_RATE = 0.25
SCHEMA = Schema.numeric(3, 2)

# stream tag separating challenge sampling from forest induction seeds
_SYNTH_STREAM = 2


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2

    def contains(self, X: np.ndarray) -> np.ndarray:
        return np.all((X >= self.lo) & (X <= self.hi), axis=1)

    def inside_unit_cube(self) -> bool:
        return bool(np.all(self.lo >= 0) and np.all(self.hi <= 1))

    def scaled(self, factor: float) -> Box:
        half = self.sides * factor / 2
        return Box(self.center - half, self.center + half)

    def describe(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


def sample_standard_box(rng: np.random.Generator, volume: float = BOX_VOLUME) -> Box:
    """Sides uniform on [0.3, 1], rescaled to ``volume``, placed uniformly inside the cube."""
    while True:
        sides = rng.uniform(0.3, 1.0, size=3)
        sides *= (volume / np.prod(sides)) ** (1 / 3)
        if np.all(sides <= 1.0):
            lo = rng.uniform(0.0, 1.0 - sides)
            return Box(lo, lo + sides)


def rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    K = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def swap_axes(X: np.ndarray, i: int, j: int) -> np.ndarray:
    out = X.copy()
    out[:, [i, j]] = out[:, [j, i]]
    return out


def sine_boundary(X: np.ndarray, amplitude: float, period: float) -> np.ndarray:
    """Positive iff 0.5 + a*sin(2*pi/period * (x0 + x1)) < x2."""
    return 0.5 + amplitude * np.sin(2 * np.pi / period * (X[:, 0] + X[:, 1])) < X[:, 2]


def fisheye_exit_radius(X: np.ndarray) -> np.ndarray:
    """Distance from the origin to the cube boundary along the ray through each point."""
    r = np.linalg.norm(X, axis=1)
    u_max = X.max(axis=1) / np.where(r > 0, r, 1)
    return 1.0 / np.where(u_max > 0, u_max, 1)


def fisheye_forward(X: np.ndarray) -> np.ndarray:
    """Source point -> target point: same angles, radius divided by the exit radius."""
    return X / fisheye_exit_radius(X)[:, None]


def spherical_angles(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(azimuth in the x0-x1 plane, polar angle from the x2 axis)."""
    r = np.linalg.norm(X, axis=1)
    theta = np.arctan2(X[:, 1], X[:, 0])
    phi = np.arccos(np.clip(X[:, 2] / np.where(r > 0, r, 1), -1, 1))
    return theta, phi


@dataclass(frozen=True)
class ChallengeSpec:
    name: str
    target_size: int = 64
    source_size: int | None = None
    test_size: int = 10_000
    trials: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in CHALLENGES:
            raise ValueError(f"unknown challenge {self.name!r}; choose from {', '.join(CHALLENGES)}")
        if self.source_size is None:
            object.__setattr__(self, "source_size", 5 * self.target_size)
        if min(self.source_size, self.target_size, self.test_size, self.trials) < 1:
            raise ValueError("all sizes must be >= 1")


@dataclass
class ChallengeInstance:
    source_train: Dataset
    target_train: Dataset
    target_test: Dataset
    concept: dict = field(default_factory=dict)


Sampler = Callable[[np.random.Generator, int], np.ndarray]
Labeler = Callable[[np.ndarray], np.ndarray]


def _uniform_cube(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.random((n, 3))


def _rejection(accept: Callable[[np.ndarray], np.ndarray]) -> Sampler:
    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty((0, 3))
        while len(out) < n:
            X = rng.random((2 * (n - len(out)) + 16, 3))
            out = np.vstack([out, X[accept(X)]])
        return out[:n]

    return sample


def _flip(rng: np.random.Generator, labels: np.ndarray, rate: float) -> np.ndarray:
    return labels ^ (rng.random(len(labels)) < rate)


def _concepts(name: str, rng: np.random.Generator):
    """(source labeler, target labeler, source sampler, target sampler, descriptor, noise)."""
    src_sampler: Sampler = _uniform_cube
    tgt_sampler: Sampler = _uniform_cube
    noise = None

    if name == "mixture":
        a, b = sample_standard_box(rng), sample_standard_box(rng)
        pick = int(rng.integers(2))
        chosen = (a, b)[pick]

        def src(X, rng=rng):
            # each source point is labeled by one of the two boxes, chosen by a fair coin
            coin = rng.random(len(X)) < 0.5
            return np.where(coin, a.contains(X), b.contains(X))

        return src, chosen.contains, src_sampler, tgt_sampler, {"boxes": [a.describe(), b.describe()], "target_box": pick}, noise

    if name == "rotated":
        box = sample_standard_box(rng)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = float(rng.uniform(0.0, math.pi))
        R = rotation_matrix(axis, angle)
        c = box.center

        def tgt(X):
            return box.contains((X - c) @ R + c)  # row-vector form of R^T (x - c)

        return box.contains, tgt, src_sampler, tgt_sampler, {"box": box.describe(), "axis": axis.tolist(), "angle": angle}, noise

    if name == "refined_sine":
        amplitude = float(rng.uniform(0.0, 0.5))
        period = float(rng.uniform(0.25, 0.5))
        return (
            lambda X: sine_boundary(X, 0.05, 0.5),
            lambda X: sine_boundary(X, amplitude, period),
            src_sampler,
            tgt_sampler,
            {"amplitude": amplitude, "period": period},
            noise,
        )

    if name == "expanding":
        while True:
            box = sample_standard_box(rng)
            moved = box.scaled(2 ** (1 / 3))
            if moved.inside_unit_cube():
                break
    else:
        box = sample_standard_box(rng)
    desc = {"box": box.describe()}

    if name == "inversion":
        return box.contains, lambda X: ~box.contains(X), src_sampler, tgt_sampler, desc, noise
    if name == "moving":
        lo = rng.uniform(0.0, 1.0 - box.sides)
        moved = Box(lo, lo + box.sides)
        desc["target_box"] = moved.describe()
        return box.contains, moved.contains, src_sampler, tgt_sampler, desc, noise
    if name == "expanding":
        desc["target_box"] = moved.describe()
        return box.contains, moved.contains, src_sampler, tgt_sampler, desc, noise
    if name == "shrinking":
        moved = box.scaled(2 ** (-1 / 3))
        desc["target_box"] = moved.describe()
        return box.contains, moved.contains, src_sampler, tgt_sampler, desc, noise
    if name == "axis_swap":
        i, j = (int(k) for k in rng.choice(3, size=2, replace=False))
        desc["swap"] = [i, j]
        return box.contains, lambda X: box.contains(swap_axes(X, i, j)), src_sampler, tgt_sampler, desc, noise
    if name in ("noisy_target", "noisy_source"):
        return box.contains, box.contains, src_sampler, tgt_sampler, desc, name
    if name == "fisheye":
        # azimuth in [0, pi/4] (x1 <= x0); the polar angle spans the whole quadrant
        src_sampler = _rejection(lambda X: X[:, 1] <= X[:, 0])
        tgt_sampler = _rejection(lambda X: (X[:, 1] <= X[:, 0]) & (np.linalg.norm(X, axis=1) <= 1.0))

        def tgt(X):
            return box.contains(X * fisheye_exit_radius(X)[:, None])

        return box.contains, tgt, src_sampler, tgt_sampler, desc, noise
    raise ValueError(f"unknown challenge {name!r}")


def generate(spec: ChallengeSpec, trial: int) -> ChallengeInstance:
    rng = derive_rng(spec.seed, _SYNTH_STREAM, trial)
    src, tgt, src_sampler, tgt_sampler, desc, noise = _concepts(spec.name, rng)

    Xs = src_sampler(rng, spec.source_size)
    ys = src(Xs)
    Xt = tgt_sampler(rng, spec.target_size)
    yt = tgt(Xt)
    Xtest = tgt_sampler(rng, spec.test_size)
    ytest = tgt(Xtest)
    # label noise corrupts training samples only; test labels stay clean
    if noise == "noisy_source":
        ys = _flip(rng, ys, NOISE_RATE)
    elif noise == "noisy_target":
        yt = _flip(rng, yt, NOISE_RATE)

    def ds(X, y):
        return Dataset(SCHEMA, X, np.asarray(y, dtype=np.int64))

    return ChallengeInstance(ds(Xs, ys), ds(Xt, yt), ds(Xtest, ytest), {"name": spec.name, **desc})


def write_instance_csv(instance: ChallengeInstance, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for part in ("source_train", "target_train", "target_test"):
        data: Dataset = getattr(instance, part)
        with open(directory / f"{part}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x0", "x1", "x2", "label"])
            for x, y in zip(data.X, data.y):
                w.writerow([repr(float(v)) for v in x] + [int(y)])

"""Benchmark objective functions with per-instance random transformations.

Five functions in the CEC 2005 style are built in: F1 (shifted sphere),
F9 (shifted Rastrigin), F12 (Schwefel's problem 2.13), F13 (shifted expanded
Griewank plus Rosenbrock) and F14 (shifted expanded Schaffer F6). All are
minimisation problems reported as error values, so the global minimum has
error 0 by construction. Shift vectors and F12 matrices are generated from a
named seed rather than loaded from data files.

Additional functions can be plugged in through ``register_function``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .rng import stream

SUPPORTED_FUNCTIONS = ("F1", "F9", "F12", "F13", "F14")


@dataclass(frozen=True)
class BenchmarkFunction:
    """A benchmark objective over a hyper-cubic domain.

    ``evaluate`` returns the error f(x) - f(x*), which is 0 at the shift
    point. Instances are immutable and safe for concurrent evaluation.
    """

    id: str
    dim: int
    lower: float
    upper: float
    shift: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def bounds(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    def evaluate(self, point: np.ndarray) -> float:
        if len(point) != self.dim:
            raise ValueError(f"point has length {len(point)}, expected {self.dim}")
        return _EVALUATORS[self.id](self, np.asarray(point, dtype=float))


# Evaluators and builders live in module-level registries so functions stay
# picklable for parallel workers.
_EVALUATORS: dict = {}
_BUILDERS: dict = {}


def register_function(fid: str, builder, evaluator) -> None:
    """Register an externally supplied benchmark function.

    ``builder(dim, seed, bounds)`` must return a BenchmarkFunction with
    ``id == fid``; ``evaluator(function, point)`` must return the error at
    ``point``.
    """
    _BUILDERS[fid] = builder
    _EVALUATORS[fid] = evaluator


def supported_functions() -> tuple:
    return tuple(_BUILDERS)


def make_function(fid: str, dim: int, seed: int, bounds: tuple = None) -> BenchmarkFunction:
    """Build a function instance, deterministic in (id, dim, seed)."""
    if fid not in _BUILDERS:
        raise ValueError(
            f"unsupported function id: {fid} (supported: {', '.join(_BUILDERS)})"
        )
    if dim < 1:
        raise ValueError("dimensionality must be >= 1")
    return _BUILDERS[fid](dim, seed, bounds)


def _shift_within(lower, upper, dim, rng, margin=0.1):
    # Keep the optimum away from the boundary so transformed instances stay
    # well-posed after translation clamping.
    span = upper - lower
    return rng.uniform(lower + margin * span, upper - margin * span, dim)


def _builder(fid, default_bounds):
    def build(dim, seed, bounds=None):
        lower, upper = bounds if bounds is not None else default_bounds
        rng = stream(seed, "function", fid, dim)
        params = {}
        if fid == "F12":
            # The optimum is the angle vector itself, which may sit anywhere
            # in the domain; the integer matrices define the landscape.
            a = rng.integers(-100, 101, (dim, dim))
            b = rng.integers(-100, 101, (dim, dim))
            shift = rng.uniform(lower, upper, dim)
            params = {"a": a, "b": b, "target": a @ np.sin(shift) + b @ np.cos(shift)}
        else:
            shift = _shift_within(lower, upper, dim, rng)
        if fid == "F14":
            # Unrotated by default; an orthogonal matrix may be supplied.
            params = {"rotation": None}
        return BenchmarkFunction(fid, dim, float(lower), float(upper), shift, params)

    return build


def _eval_f1(fn, x):
    z = x - fn.shift
    return float(z @ z)


def _eval_f9(fn, x):
    z = x - fn.shift
    return float(np.sum(z * z - 10.0 * np.cos(2.0 * math.pi * z) + 10.0))


def _eval_f12(fn, x):
    b = fn.params["a"] @ np.sin(x) + fn.params["b"] @ np.cos(x)
    d = fn.params["target"] - b
    return float(d @ d)


def _eval_f13(fn, x):
    z = x - fn.shift + 1.0
    u = z
    v = np.roll(z, -1)
    t = 100.0 * (u * u - v) ** 2 + (u - 1.0) ** 2
    return float(np.sum(t * t / 4000.0 - np.cos(t) + 1.0))


def _eval_f14(fn, x):
    z = x - fn.shift
    rotation = fn.params.get("rotation")
    if rotation is not None:
        z = rotation @ z
    u = z
    v = np.roll(z, -1)
    s = u * u + v * v
    return float(np.sum(0.5 + (np.sin(np.sqrt(s)) ** 2 - 0.5) / (1.0 + 0.001 * s) ** 2))


register_function("F1", _builder("F1", (-100.0, 100.0)), _eval_f1)
register_function("F9", _builder("F9", (-5.0, 5.0)), _eval_f9)
register_function("F12", _builder("F12", (-math.pi, math.pi)), _eval_f12)
register_function("F13", _builder("F13", (-3.0, 1.0)), _eval_f13)
register_function("F14", _builder("F14", (-100.0, 100.0)), _eval_f14)


# ---------------------------------------------------------------------------
# Instance transformations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransformRanges:
    """Sampling ranges for instance transforms.

    ``translate_frac`` is the maximum translation as a fraction of the
    half-range of each axis.
    """

    translate_frac: float = 0.5
    scale: tuple[float, float] = (0.5, 2.0)
    flip_prob: float = 0.5


DEFAULT_TRANSFORM_RANGES = TransformRanges()


@dataclass(frozen=True)
class Transform:
    """Per-axis translation, scaling and axis flips of a function instance."""

    translation: np.ndarray
    scale: np.ndarray
    flip: np.ndarray

    @classmethod
    def identity(cls, dim: int) -> "Transform":
        return cls(np.zeros(dim), np.ones(dim), np.ones(dim))

    def is_identity(self) -> bool:
        return (
            not self.translation.any()
            and (self.scale == 1.0).all()
            and (self.flip == 1.0).all()
        )


def sample_transform(
    bounds: tuple[float, float],
    dim: int,
    rng: np.random.Generator,
    optimum: np.ndarray = None,
    ranges: TransformRanges = DEFAULT_TRANSFORM_RANGES,
) -> Transform:
    """Draw a random instance transform.

    Translations are clamped per axis so that the pre-image of ``optimum``
    (when given) stays inside the bounds.
    """
    lower, upper = bounds
    centre = (lower + upper) / 2.0
    half = (upper - lower) / 2.0
    t_max = ranges.translate_frac * half
    translation = rng.uniform(-t_max, t_max, dim)
    scale = rng.uniform(ranges.scale[0], ranges.scale[1], dim)
    flip = np.where(rng.random(dim) < ranges.flip_prob, -1.0, 1.0)
    if optimum is not None:
        offset = optimum - centre
        translation = np.clip(translation, offset - scale * half, offset + scale * half)
    return Transform(translation, scale, flip)


@dataclass(frozen=True)
class Problem:
    """A benchmark function composed with an instance transform.

    Evaluation applies the per-axis map flip -> scale -> translate in
    function space and is a pure function of the point.
    """

    function: BenchmarkFunction
    transform: Transform

    @classmethod
    def plain(cls, function: BenchmarkFunction) -> "Problem":
        return cls(function, Transform.identity(function.dim))

    @property
    def dim(self) -> int:
        return self.function.dim

    @property
    def bounds(self) -> tuple[float, float]:
        return self.function.bounds

    @cached_property
    def _is_identity(self) -> bool:
        return self.transform.is_identity()

    def map_point(self, point: np.ndarray) -> np.ndarray:
        if self._is_identity:
            return point
        centre = (self.function.lower + self.function.upper) / 2.0
        return (
            self.transform.flip * self.transform.scale * (point - centre)
            + centre
            + self.transform.translation
        )

    def evaluate(self, point: np.ndarray) -> float:
        if len(point) != self.dim:
            raise ValueError(f"point has length {len(point)}, expected {self.dim}")
        return self.function.evaluate(self.map_point(point))

    def transformed_optimum(self) -> np.ndarray:
        """The point whose image under the transform is the function shift."""
        centre = (self.function.lower + self.function.upper) / 2.0
        offset = self.function.shift - centre - self.transform.translation
        return centre + offset / (self.transform.flip * self.transform.scale)


@dataclass(frozen=True)
class ProblemFamily:
    """A source of problem instances for repeated optimisation runs."""

    function: BenchmarkFunction
    randomize: bool = True
    ranges: TransformRanges = DEFAULT_TRANSFORM_RANGES
    fixed_transform: Transform = None

    def instance(self, rng: np.random.Generator) -> Problem:
        if self.fixed_transform is not None:
            return Problem(self.function, self.fixed_transform)
        if not self.randomize:
            return Problem.plain(self.function)
        transform = sample_transform(
            self.function.bounds,
            self.function.dim,
            rng,
            optimum=self.function.shift,
            ranges=self.ranges,
        )
        return Problem(self.function, transform)


# ---------------------------------------------------------------------------
# Problem descriptor files
# ---------------------------------------------------------------------------

_DESCRIPTOR_KEYS = {"id", "D", "seed", "transform", "bounds_override"}


def load_problem_descriptor(path) -> ProblemFamily:
    """Load a problem descriptor: {id, D, seed, transform, bounds_override}.

    ``transform`` is "random" (default), "identity", or an explicit object
    with per-axis ``translation``, ``scale`` and ``flip`` lists.
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return problem_family_from_descriptor(raw)


def problem_family_from_descriptor(raw: dict) -> ProblemFamily:
    unknown = set(raw) - _DESCRIPTOR_KEYS
    if unknown:
        raise ValueError(f"unknown descriptor keys: {', '.join(sorted(unknown))}")
    for key in ("id", "D"):
        if key not in raw:
            raise ValueError(f"descriptor missing required key: {key}")
    bounds = raw.get("bounds_override")
    function = make_function(
        raw["id"], int(raw["D"]), int(raw.get("seed", 0)),
        bounds=tuple(bounds) if bounds else None,
    )
    transform = raw.get("transform", "random")
    if transform == "random":
        return ProblemFamily(function, randomize=True)
    if transform == "identity":
        return ProblemFamily(function, randomize=False)
    if isinstance(transform, dict):
        explicit = Transform(
            np.asarray(transform["translation"], dtype=float),
            np.asarray(transform["scale"], dtype=float),
            np.asarray(transform["flip"], dtype=float),
        )
        return ProblemFamily(function, fixed_transform=explicit)
    raise ValueError(f"bad transform value: {transform!r}")

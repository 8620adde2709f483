"""Perturbation tools: translations, localized bumps, Markov search.

Translations move every piece by one rational vector and are the only
perturbation used by the randomized searches; bumps are surgical local
perturbations kept for verifying fixed-point displacement bounds.  All
randomness is derived from explicit integer seeds so that reports are
reproducible byte for byte; per-trial generators are independent of
execution order and thread count.
"""

from __future__ import annotations

import hashlib
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .geometry import Point, RatLike, as_point, as_rat
from .dynamics import DiagonalAffineMap, PiecewiseContraction
from .ifs import IFS, Word, replace_map
from .refinement import MarkovReport, detect_markov, refine_levels

TOOL_VERSION = "0.1.0"

# Sampled offsets live on the grid epsilon * k / GRID_DENOMINATOR so every
# trial is exactly representable and the whole pipeline stays rational.
GRID_DENOMINATOR = 2 ** 20


class RadiusTooLargeError(ValueError):
    """Bump radius incompatible with the slope bound (needs a*delta^2 < 1)."""


class NotContractingError(ValueError):
    """A composed map's Lipschitz certificate reached 1."""


def translate(f: PiecewiseContraction,
              delta: Union[RatLike, Sequence[RatLike]]) -> PiecewiseContraction:
    """Shift every piece by the same vector and re-validate.

    The partition is untouched.  Raises ValidationError when some shifted
    image leaves the domain interior.
    """
    d = _as_vector(delta, f.dim)
    return f.with_pieces(p.translate(d) for p in f.pieces).require_valid()


def _as_vector(delta: Union[RatLike, Sequence[RatLike]], dim: int) -> Point:
    if isinstance(delta, (tuple, list)):
        v = as_point(delta)
    else:
        v = (as_rat(delta),) * dim
    if len(v) != dim:
        raise ValueError(f"translation vector has dimension {len(v)}, map has {dim}")
    return v


def strong_contraction_exponent(f: PiecewiseContraction,
                                p_max: int) -> Optional[int]:
    """Least p <= p_max with lambda^p * (cell count at depth p) < 1/2."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    lam = f.contraction_factor
    for refined in refine_levels(f, p_max):
        if lam ** refined.depth * refined.m_n < Fraction(1, 2):
            return refined.depth
    return None


def derive_rng(seed: int, index: int) -> random.Random:
    """Independent per-trial generator, stable across platforms and
    execution order."""
    digest = hashlib.sha256(f"{seed}:{index}".encode("ascii")).digest()
    return random.Random(int.from_bytes(digest, "big"))


def sample_delta(epsilon: Fraction, dim: int, seed: int, index: int) -> Point:
    """Trial offset: zero for trial 0, else a grid point of the sup-ball.

    Trying the unperturbed map first makes already-Markov inputs succeed
    immediately and keeps trial numbering aligned between search and sweep.
    """
    if index == 0:
        return (Fraction(0),) * dim
    rng = derive_rng(seed, index)
    return tuple(epsilon * rng.randrange(-GRID_DENOMINATOR, GRID_DENOMINATOR + 1)
                 / GRID_DENOMINATOR for _ in range(dim))


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    delta: Point
    report: MarkovReport

    @property
    def stabilised(self) -> bool:
        return self.report.stabilised


@dataclass(frozen=True)
class MonteCarloReport:
    """Seeded sweep over translated copies of one map.

    ``fraction`` is exact; identical (map, epsilon, n_max, seed, trials)
    give identical reports regardless of thread count.
    """

    trials: int
    markov_count: int
    fraction: Fraction
    per_trial: tuple[TrialOutcome, ...]
    rng_seed: int
    epsilon: Fraction
    n_max: int
    grid_denominator: int = GRID_DENOMINATOR
    tool_version: str = TOOL_VERSION


@dataclass(frozen=True)
class MarkovifyResult:
    """First stabilising translation found, or the full failed sweep."""

    found: bool
    delta: Optional[Point]
    report: Optional[MarkovReport]
    sweep: MonteCarloReport


def _check_epsilon(f: PiecewiseContraction, epsilon: Fraction) -> None:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    margin = f.validation_margin()
    if epsilon >= margin:
        raise ValueError(
            f"epsilon {epsilon} is not below the validation margin {margin}; "
            "translated maps could escape the domain")


def _run_trial(f: PiecewiseContraction, epsilon: Fraction, n_max: int,
               seed: int, index: int) -> TrialOutcome:
    delta = sample_delta(epsilon, f.dim, seed, index)
    return TrialOutcome(index, delta, detect_markov(translate(f, delta), n_max))


def _summarize(trials: Sequence[TrialOutcome], seed: int, epsilon: Fraction,
               n_max: int) -> MonteCarloReport:
    hits = sum(1 for t in trials if t.stabilised)
    n = len(trials)
    fraction = Fraction(hits, n) if n else Fraction(0)
    return MonteCarloReport(n, hits, fraction, tuple(trials), seed, epsilon, n_max)


def markovify_search(f: PiecewiseContraction, epsilon: RatLike,
                     n_max: int = 30, trials: int = 100,
                     seed: int = 0) -> MarkovifyResult:
    """Scan seeded translations until one stabilises.

    Deterministic: trials run in index order (trial 0 is always delta = 0)
    and the first stabilising translation wins.  Failure returns the whole
    sweep as a value, never an exception.
    """
    f.require_valid()
    eps = as_rat(epsilon)
    _check_epsilon(f, eps)
    done: list[TrialOutcome] = []
    for index in range(trials):
        outcome = _run_trial(f, eps, n_max, seed, index)
        done.append(outcome)
        if outcome.stabilised:
            return MarkovifyResult(True, outcome.delta, outcome.report,
                                   _summarize(done, seed, eps, n_max))
    return MarkovifyResult(False, None, None, _summarize(done, seed, eps, n_max))


def genericity_sweep(f: PiecewiseContraction, epsilon: RatLike,
                     n_max: int = 30, samples: int = 500, seed: int = 0,
                     max_workers: Optional[int] = None) -> MonteCarloReport:
    """Run every trial and report the stabilising fraction.

    ``max_workers`` only changes wall-clock behavior; per-trial seeds are
    derived from (seed, index), so the report is identical either way.
    """
    f.require_valid()
    eps = as_rat(epsilon)
    _check_epsilon(f, eps)
    indices = range(samples)
    if max_workers is not None and max_workers > 1 and samples > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(
                lambda i: _run_trial(f, eps, n_max, seed, i), indices))
    else:
        outcomes = [_run_trial(f, eps, n_max, seed, i) for i in indices]
    outcomes.sort(key=lambda t: t.index)
    return _summarize(outcomes, seed, eps, n_max)


def _profile(y):
    """C^2 bump profile: 0 for y <= 0, rises along the cubic smoothstep and
    holds 1 from y = 1/2 on.  Max slope 3, attained at y = 1/4."""
    if y <= 0:
        return y * 0  # zero of the same numeric type
    if 2 * y >= 1:
        return y ** 0
    t = 2 * y
    return 3 * t * t - 2 * t * t * t


@dataclass(frozen=True)
class BumpMap:
    """A piece precomposed with a radial displacement inside one ball.

    h moves x by delta^3 * g(1 - |x - center|/delta) * direction, so no
    point moves farther than delta^3 and h is the identity outside the
    closed sup-norm ball of radius delta.  The slope bound a certifies
    Lip(h) <= 1 + a*delta^2 (the profile's slope is 3 < a), hence the
    composition contracts with factor at most lam(base) * (1 + a*delta^2).
    Evaluation is exact on rational points and works on floats too.
    """

    base: DiagonalAffineMap
    center: Point
    radius: Fraction
    direction: Point
    slope_bound: Fraction = Fraction(4)

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "radius", as_rat(self.radius))
        object.__setattr__(self, "direction", as_point(self.direction))
        object.__setattr__(self, "slope_bound", as_rat(self.slope_bound))
        if len(self.center) != self.base.dim or len(self.direction) != self.base.dim:
            raise ValueError("center/direction dimension mismatch")
        if self.slope_bound <= 2:
            raise ValueError("slope bound must exceed 2")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.slope_bound * self.radius ** 2 >= 1:
            raise RadiusTooLargeError(
                f"radius {self.radius} needs radius^2 < 1/{self.slope_bound}")
        if max(abs(v) for v in self.direction) > 1:
            raise ValueError("direction must have sup-norm at most 1")
        if self.lipschitz_bound >= 1:
            raise NotContractingError(
                f"certificate {self.lipschitz_bound} >= 1 for the bumped piece")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def lipschitz_bound(self) -> Fraction:
        return self.base.contraction_factor * (1 + self.slope_bound * self.radius ** 2)

    def displace(self, point):
        """The inner map h alone."""
        r = max(abs(x - c) for x, c in zip(point, self.center))
        if r >= self.radius:
            return tuple(point)
        factor = self.radius ** 3 * _profile(1 - r / self.radius)
        return tuple(x + factor * v for x, v in zip(point, self.direction))

    def apply(self, point):
        return self.base.apply(self.displace(point))


def bump(ifs: IFS, map_index: int, center: Sequence[RatLike],
         radius: RatLike, direction: Sequence[RatLike],
         slope_bound: RatLike = Fraction(4)) -> IFS:
    """Replace one map of the system with its bumped version.

    The inner displacement stays within delta^3 of the identity, so
    invariance of Y is certified by checking the base image of the
    delta^3-fattened Y; a breach raises rather than returning a system
    whose invariant-box contract is broken.
    """
    base = ifs.map_for(map_index)
    if not isinstance(base, DiagonalAffineMap):
        raise TypeError("only an affine map can be bumped")
    bumped = BumpMap(base, as_point(center), as_rat(radius),
                     as_point(direction), as_rat(slope_bound))
    fat = ifs.Y.fatten(bumped.radius ** 3)
    image = base.apply_box(fat)
    if not all(ylo <= ilo and ihi <= yhi for ylo, yhi, ilo, ihi
               in zip(ifs.Y.lo, ifs.Y.hi, image.lo, image.hi)):
        raise ValueError("bumped map no longer preserves the invariant box")
    return replace_map(ifs, map_index, bumped)


@dataclass(frozen=True)
class IteratedFixedPoint:
    """Float fixed-point approximation with a certified error radius."""

    point: tuple[float, ...]
    error_bound: float
    steps: int
    lipschitz_bound: float


def bump_fixed_point(ifs: IFS, word: Word,
                     tolerance: float = 1e-12) -> IteratedFixedPoint:
    """Fixed point of a composed word by contraction iteration.

    Works for words through bumped (non-affine) maps where the closed-form
    solve is unavailable.  Iterates from the center of Y until the step
    drops below tolerance * (1 - L) for the composed certificate L; the
    a-posteriori bound step * L / (1 - L) bounds the distance to the fixed
    point of the float-evaluated map, and a rounding allowance proportional
    to machine epsilon covers its drift from the exact one.
    """
    if not word:
        raise ValueError("word must be nonempty")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    maps = [ifs.map_for(letter) for letter in word]
    lip = Fraction(1)
    for m in maps:
        lip *= m.lipschitz_bound
    if lip >= 1:
        raise NotContractingError(f"word certificate {lip} >= 1")
    lam = float(lip)
    x = tuple(float(c) for c in ifs.Y.center())
    threshold = tolerance * (1 - lam)
    # evaluating len(word) maps in floats perturbs each image by roughly
    # len(word) * eps * |Y|; the perturbed fixed point moves by at most
    # that over 1 - L
    eps = sys.float_info.epsilon
    rounding = 8 * len(maps) * eps * max(1.0, float(ifs.Y.diameter)) / (1 - lam)
    for step_count in range(1, 100000):
        y = x
        for m in reversed(maps):
            y = tuple(float(v) for v in m.apply(y))
        step = sup_dist_float(x, y)
        x = y
        if step < threshold:
            return IteratedFixedPoint(x, step * lam / (1 - lam) + rounding,
                                      step_count, lam)
    raise RuntimeError("contraction iteration failed to converge")


def sup_dist_float(a: Sequence[float], b: Sequence[float]) -> float:
    return max(abs(x - y) for x, y in zip(a, b))

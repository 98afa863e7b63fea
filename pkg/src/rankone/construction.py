"""Cutting-and-stacking parameter sets and their generators.

A construction is determined by the base tower height ``h1`` and, for each
stage j, the number of columns ``r_j`` and the spacer counts
``s_j(1..r_j)`` placed on top of the columns before restacking.  Heights
follow the recurrence ``h_{j+1} = h_j * r_j + sum(s_j)`` exactly; all
integers are arbitrary precision.

Besides the hand-written example families, the module provides randomized
constructions whose spacers are i.i.d. draws from the coefficient
distribution of an admissible series, with two kinds of deterministic
overrides:

* indices that are multiples of the stage number are rewritten with a
  rapidly growing ("Sidon-scale") chain, so that sums of spacers involving
  an overridden column leave the small-lag range entirely;
* when the series has total mass c < 1, the trailing (1-c) fraction of
  indices is rewritten the same way, continuing one ascending chain.

The column count at each stage is grown adaptively until the sampled
spacers pass an exact window-sum frequency check against the powers of the
series, which is what makes the shifted-tower correlations track the
series coefficients at later stages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .series import AdmissibleSeries, make_admissible

__all__ = [
    "ColumnGrowthPolicy",
    "ConstructionParams",
    "FrequencyReport",
    "GenerationError",
    "LevelOccupancy",
    "SidonPolicy",
    "SidonResult",
    "StageParams",
    "apply_sidon",
    "expand_occupancy",
    "gen_example",
    "gen_p_construction",
    "heights",
    "params_from_json",
    "params_to_json",
    "sample_spacers",
    "truncate_admissible",
    "validate_params",
    "verify_frequencies",
]

# Positions are kept in numpy int64 while every coordinate stays below this;
# beyond it the code switches to exact Python integers.
_INT64_SAFE_WINDOW = 1 << 62
_JSON_INT_LIMIT = 1 << 53
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class StageParams:
    """One cutting stage: r columns, one spacer count per column."""

    r: int
    spacers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "spacers", tuple(int(s) for s in self.spacers))


@dataclass(frozen=True)
class ConstructionParams:
    """Full parameter set (h1 plus one StageParams per stage).

    ``meta`` carries provenance (generator, seed, policies, per-stage
    records); it is excluded from equality.
    """

    h1: int
    stages: tuple[StageParams, ...]
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def heights(self) -> list[int]:
        return heights(self)


def validate_params(params: ConstructionParams) -> list[str]:
    """Every invariant violation, with stage index; empty list iff valid."""
    violations = []
    if not isinstance(params.h1, int) or params.h1 < 1:
        violations.append(f"h1 = {params.h1!r}: must be a positive integer")
    for idx, st in enumerate(params.stages, start=1):
        if st.r < 2:
            violations.append(f"stage {idx}: r = {st.r}, but r >= 2 is required")
        if len(st.spacers) != st.r:
            violations.append(
                f"stage {idx}: {len(st.spacers)} spacer entries for r = {st.r}")
        for i, s in enumerate(st.spacers, start=1):
            if s < 0:
                violations.append(f"stage {idx}: spacer s({i}) = {s} is negative")
    return violations


def heights(params: ConstructionParams) -> list[int]:
    """[h_1, ..., h_J] by the exact recurrence h_{j+1} = h_j*r_j + sum(s_j)."""
    violations = validate_params(params)
    if violations:
        raise ValueError("invalid parameters: " + "; ".join(violations))
    hs = [params.h1]
    for st in params.stages:
        hs.append(hs[-1] * st.r + sum(st.spacers))
    return hs


# ---------------------------------------------------------------------------
# Occupancy: where the base-stage levels sit inside a taller tower
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelOccupancy:
    """Sparse labeling of the stage-J tower by stage-j0 levels.

    Every copy of the stage-j0 tower occupies ``base_height`` consecutive
    positions starting at one of ``copy_starts``; label b therefore sits at
    ``copy_starts + b``.  Positions not covered by any copy are spacers.
    ``copy_starts`` is strictly increasing with gaps >= base_height, which
    keeps the per-label position lists sorted and disjoint.
    """

    base_stage: int
    top_stage: int
    base_height: int
    window: int
    copy_starts: object  # np.ndarray (int64 path) or tuple[int, ...]
    _pair_cache: dict = field(default_factory=dict, compare=False, repr=False)
    _aux: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def uses_int64(self) -> bool:
        return isinstance(self.copy_starts, np.ndarray)

    @property
    def n_copies(self) -> int:
        return len(self.copy_starts)

    def positions(self, label: int):
        """Strictly increasing positions of base label ``label``."""
        if not 0 <= label < self.base_height:
            raise ValueError(f"label {label} outside [0, {self.base_height})")
        if self.uses_int64:
            return self.copy_starts + label
        return tuple(s + label for s in self.copy_starts)

    def measure(self, labels: Sequence[int]) -> int:
        """Total number of positions carrying any label in ``labels``."""
        return len(set(labels)) * self.n_copies

    # -- structural pair counts -------------------------------------------
    #
    # The number of copy-start pairs (s, s') with s' - s = k determines every
    # level correlation: positions of label b are copy_starts + b, so
    # |positions(b) ∩ (positions(a) + d)| = pair_shift_count(b - a - d) ... the
    # callers in weaktop assemble those. Counting is exact on both paths.

    def pair_shift_count(self, k: int) -> int:
        if k == 0:
            return self.n_copies
        if abs(k) >= self.window:
            return 0
        cached = self._pair_cache.get(k)
        if cached is not None:
            return cached
        count = self._count_pairs(k)
        self._pair_cache[k] = count
        return count

    def _count_pairs(self, k: int) -> int:
        if self.uses_int64:
            starts = self.copy_starts
            shifted = starts + np.int64(k)  # |k| < window < 2^62: no overflow
            idx = np.searchsorted(starts, shifted)
            valid = idx < starts.size
            return int(np.count_nonzero(starts[idx[valid]] == shifted[valid]))
        return self._count_pairs_bigint(k)

    def warm_shift_window(self, center: int, radius: int) -> None:
        """Precompute pair counts for every k in [center-radius, center+radius].

        One batched pass (two sorted searches plus a ragged gather) fills the
        cache for the whole window, including zero counts, so scans that probe
        many nearby shifts touch the position array once per window.  No-op on
        the exact-integer path, where counts stay per-shift.
        """
        if not self.uses_int64 or radius < 0:
            return
        center = int(center)
        lo, hi = center - radius, center + radius
        if lo > self.window or hi < -self.window:
            for k in range(lo, hi + 1):
                self._pair_cache.setdefault(k, 0)
            return
        starts = self.copy_starts
        counts = np.zeros(2 * radius + 1, dtype=np.int64)
        i_lo = np.searchsorted(starts, starts + np.int64(lo))
        i_hi = np.searchsorted(starts, starts + np.int64(hi), side="right")
        lens = i_hi - i_lo
        mask = lens > 0
        if mask.any():
            lens = lens[mask]
            total = int(lens.sum())
            # ragged gather: for source copy s, matched targets starts[i_lo:i_hi]
            flat = np.repeat(i_lo[mask], lens) + (
                np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens))
            offsets = starts[flat] - np.repeat(starts[mask], lens) - np.int64(center)
            counts = np.bincount(offsets + radius, minlength=2 * radius + 1)
        for d in range(-radius, radius + 1):
            k = center + d
            if k == 0:
                continue
            self._pair_cache.setdefault(k, int(counts[d + radius]))

    def _count_pairs_bigint(self, k: int) -> int:
        aux = self._aux
        if "fp" not in aux:
            fp = np.array([s & _U64 for s in self.copy_starts], dtype=np.uint64)
            aux["fp"] = fp
            aux["fp_injective"] = bool(np.unique(fp).size == fp.size)
            aux["start_set"] = frozenset(self.copy_starts)
        start_set = aux["start_set"]
        if not aux["fp_injective"]:
            # pathological 64-bit collision between copy starts: count exactly
            return sum(1 for s in self.copy_starts if s + k in start_set)
        fp = aux["fp"]
        shifted = fp + np.uint64(k & _U64)  # wraps mod 2^64, as intended
        mask = np.isin(shifted, fp)
        if not mask.any():
            return 0
        # verify candidates exactly (the fingerprint can alias across 2^64)
        starts = self.copy_starts
        return sum(1 for i in np.nonzero(mask)[0] if starts[int(i)] + k in start_set)


def expand_occupancy(params: ConstructionParams, base_stage: int,
                     top_stage: int) -> LevelOccupancy:
    """Compose per-stage copy offsets from base_stage up to top_stage.

    Within one stage j -> j+1, copy i of the stage-j tower starts at O_i with
    O_1 = 0 and O_{i+1} = O_i + h_j + s_j(i); composing those offset maps
    across stages gives every copy start of the base tower inside the top
    tower.  The result has exactly prod(r_j, j = base..top-1) copies.
    """
    n = len(params.stages)
    if not (1 <= base_stage <= top_stage <= n + 1):
        raise ValueError(
            f"stage indices out of range: need 1 <= {base_stage} <= {top_stage} <= {n + 1}")
    hs = heights(params)
    window = hs[top_stage - 1]
    base_height = hs[base_stage - 1]

    if window < _INT64_SAFE_WINDOW:
        starts = np.zeros(1, dtype=np.int64)
        for j in range(base_stage, top_stage):
            st = params.stages[j - 1]
            offs = np.empty(st.r, dtype=np.int64)
            acc = 0
            for i in range(st.r):
                offs[i] = acc
                acc += hs[j - 1] + st.spacers[i]
            # offset-major order keeps the result sorted: gaps between
            # consecutive offsets are >= h_j while starts stay below h_j
            starts = (offs[:, None] + starts[None, :]).ravel()
        return LevelOccupancy(base_stage, top_stage, base_height, window, starts)

    starts = [0]
    for j in range(base_stage, top_stage):
        st = params.stages[j - 1]
        offs = []
        acc = 0
        for i in range(st.r):
            offs.append(acc)
            acc += hs[j - 1] + st.spacers[i]
        starts = [o + s for o in offs for s in starts]
    return LevelOccupancy(base_stage, top_stage, base_height, window, tuple(starts))


# ---------------------------------------------------------------------------
# Example families
# ---------------------------------------------------------------------------

def gen_example(kind: str, J: int, h1: int | None = None,
                r_schedule: Sequence[int] | None = None) -> ConstructionParams:
    """Named example constructions.

    * ``mix-identity``: s_j(i) = h_j for every column; r_j from ``r_schedule``
      (default j+2, strictly increasing).  Shifting by h_j lands every level
      on a spacer, and shifting by 2*h_j realigns all but one column.
    * ``two-column``: r_j = 2, spacers (0, j*h_j).
    * ``all-limits``: r_j = 3, spacers (h_j, h_j + isqrt(j), h_j).
    """
    if J < 2:
        raise ValueError("J >= 2 required")
    stages = []
    if kind == "mix-identity":
        h = 2 if h1 is None else h1
        base = h
        schedule = tuple(r_schedule) if r_schedule is not None else tuple(
            j + 2 for j in range(1, J))
        if len(schedule) != J - 1:
            raise ValueError(f"r_schedule needs {J - 1} entries, got {len(schedule)}")
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ValueError("r_schedule must be strictly increasing")
        for r in schedule:
            stages.append(StageParams(r, (h,) * r))
            h = h * r + r * h
    elif kind == "two-column":
        h = 1 if h1 is None else h1
        base = h
        for j in range(1, J):
            stages.append(StageParams(2, (0, j * h)))
            h = 2 * h + j * h
    elif kind == "all-limits":
        h = 1 if h1 is None else h1
        base = h
        for j in range(1, J):
            sp = (h, h + math.isqrt(j), h)
            stages.append(StageParams(3, sp))
            h = 3 * h + sum(sp)
    else:
        raise ValueError(f"unknown example kind: {kind!r}")
    meta = {"generator": "example", "kind": kind, "h1": base}
    return ConstructionParams(base, tuple(stages), meta)


# ---------------------------------------------------------------------------
# Randomized spacers and the frequency gate
# ---------------------------------------------------------------------------

def sample_spacers(P: AdmissibleSeries, r: int, rng_seed) -> list[int]:
    """r i.i.d. draws from the distribution (c_k); deterministic in the seed.

    ``P`` must have total mass exactly 1.  Sampling is inverse-CDF over the
    exact cumulative distribution (uniforms from a counter-based Philox
    generator), so the draw is reproducible across platforms.  ``rng_seed``
    is an integer or a sequence of integers.
    """
    if P.declared_mass != 1:
        raise ValueError(f"sampling needs total mass 1, got {P.declared_mass}")
    if r < 1:
        raise ValueError("r >= 1 required")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(rng_seed)))
    support = [k for k, _ in P.coeffs]
    cum = np.cumsum([float(v) for _, v in P.coeffs])
    idx = np.searchsorted(cum, rng.random(r), side="right")
    idx = np.minimum(idx, len(support) - 1)  # guard the fp roundoff edge
    return [support[int(i)] for i in idx]


@dataclass(frozen=True)
class FrequencyRow:
    m: int
    k: int
    expected: Fraction
    observed: Fraction

    @property
    def relative_deviation(self) -> Fraction:
        return abs(self.expected - self.observed) / self.expected


@dataclass(frozen=True)
class FrequencyReport:
    passed: bool
    max_m: int
    eps: Fraction
    rows: tuple[FrequencyRow, ...]

    def failures(self) -> list[FrequencyRow]:
        return [row for row in self.rows if row.relative_deviation >= self.eps]

    def summary(self) -> str:
        worst = max(self.rows, key=lambda r: r.relative_deviation)
        return (f"{'pass' if self.passed else 'FAIL'}: "
                f"{len(self.rows)} (m,k) cells, eps={self.eps}, "
                f"worst m={worst.m} k={worst.k} dev={float(worst.relative_deviation):.4f}")


def _series_power_coeffs(P: AdmissibleSeries, m: int) -> dict[int, Fraction]:
    out = {0: Fraction(1)}
    for _ in range(m):
        nxt: dict[int, Fraction] = {}
        for u, x in out.items():
            for v, y in P.coeffs:
                nxt[u + v] = nxt.get(u + v, Fraction(0)) + x * y
        out = nxt
    return out


def verify_frequencies(spacers: Sequence[int], P: AdmissibleSeries,
                       max_m: int, eps) -> FrequencyReport:
    """Exact window-sum frequency check against the powers of ``P``.

    For every m = 1..max_m, the sums of the r-m+1 length-m windows of
    ``spacers`` are tallied, and for every k in the support of P^m the
    empirical frequency (denominator r-m+1, windows i = 1..r-m+1 inclusive)
    must satisfy |c_k - freq_k| < eps * c_k.  All arithmetic is rational, so
    the verdict has no floating-point fuzz.
    """
    if P.declared_mass != 1:
        raise ValueError("frequency check is against a mass-1 distribution; "
                         "renormalize first")
    r = len(spacers)
    if max_m < 1 or max_m >= r:
        raise ValueError(f"need 1 <= max_m < len(spacers), got max_m={max_m}, r={r}")
    eps = Fraction(eps) if not isinstance(eps, float) else Fraction(eps).limit_denominator(10**9)
    rows = []
    passed = True
    values = [int(s) for s in spacers]
    for m in range(1, max_m + 1):
        sums: dict[int, int] = {}
        window = sum(values[:m])
        sums[window] = 1
        for i in range(1, r - m + 1):
            window += values[i + m - 1] - values[i - 1]
            sums[window] = sums.get(window, 0) + 1
        denom = r - m + 1
        for k, c in sorted(_series_power_coeffs(P, m).items()):
            if c <= 0:
                continue
            observed = Fraction(sums.get(k, 0), denom)
            row = FrequencyRow(m, k, c, observed)
            rows.append(row)
            if row.relative_deviation >= eps:
                passed = False
    return FrequencyReport(passed, max_m, eps, tuple(rows))


# ---------------------------------------------------------------------------
# Sidon-scale overrides
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SidonPolicy:
    """Growth policy for overridden spacer values.

    ``base_multiplier`` is a function of the stage (default: the stage number
    itself); the chain starts at multiplier*h_j + increment and each later
    value is multiplier*previous + increment.  A ``cap`` clamps values for
    desk-scale builds; clamped results are flagged non-conforming.
    """

    base_multiplier: Callable[[int], int] | int | None = None
    increment: int = 1
    cap: int | None = None

    def multiplier(self, stage_j: int) -> int:
        if self.base_multiplier is None:
            return stage_j
        if callable(self.base_multiplier):
            return int(self.base_multiplier(stage_j))
        return int(self.base_multiplier)


@dataclass(frozen=True)
class SidonResult:
    spacers: tuple[int, ...]
    indices: tuple[int, ...]  # 1-based positions that were overridden
    conforming: bool


def _sidon_chain(n_values: int, stage_j: int, h_j: int,
                 policy: SidonPolicy) -> tuple[list[int], bool]:
    mult = policy.multiplier(stage_j)
    inc = policy.increment
    if mult < 1 or inc < 1:
        raise ValueError("sidon multiplier and increment must be >= 1")
    values = []
    conforming = True
    v = mult * h_j + inc
    for _ in range(n_values):
        if policy.cap is not None and v > policy.cap:
            v = policy.cap
            conforming = False
        values.append(v)
        v = mult * v + inc
    return values, conforming


def apply_sidon(spacers: Sequence[int], stage_j: int, h_j: int,
                policy: SidonPolicy | None = None) -> SidonResult:
    """Override entries at 1-based indices j, 2j, 3j, ... with a growth chain.

    The chain values are the minimal ones keeping each overridden entry more
    than ``multiplier`` times the previous scale (first value past
    multiplier*h_j, then multiplier*previous + increment), so sums involving
    an overridden column are separated from all small spacer sums.
    """
    if stage_j < 1:
        raise ValueError("stage_j >= 1 required")
    policy = policy or SidonPolicy()
    out = [int(s) for s in spacers]
    indices = list(range(stage_j, len(out) + 1, stage_j))
    values, conforming = _sidon_chain(len(indices), stage_j, h_j, policy)
    for i, v in zip(indices, values):
        out[i - 1] = v
    return SidonResult(tuple(out), tuple(indices), conforming)


# ---------------------------------------------------------------------------
# Randomized construction generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnGrowthPolicy:
    """How the column count r_j grows until the frequency gate passes."""

    start: Callable[[int], int] | None = None  # default max(2j, 16)
    max_doublings: int = 14
    max_m_cap: int = 4

    def start_columns(self, stage_j: int) -> int:
        if self.start is None:
            return max(2 * stage_j, 16)
        return int(self.start(stage_j))


class GenerationError(RuntimeError):
    """Column growth exhausted without passing the frequency gate."""

    def __init__(self, stage_j: int, r_final: int, report: FrequencyReport):
        super().__init__(
            f"stage {stage_j}: frequency gate failed up to r={r_final} ({report.summary()})")
        self.stage_j = stage_j
        self.r_final = r_final
        self.report = report


def _default_eps(stage_j: int) -> Fraction:
    return Fraction(1, stage_j + 1)


def gen_p_construction(P_list: Sequence[AdmissibleSeries], J: int, seed: int,
                       eps_schedule: Callable[[int], object] | None = None,
                       r_policy: ColumnGrowthPolicy | None = None,
                       sidon_policy: SidonPolicy | None = None,
                       h1: int = 4) -> ConstructionParams:
    """Generate a randomized construction from one or more admissible series.

    Stage j uses the series of index j mod k.  Spacers are sampled from the
    renormalized distribution; the column count starts at max(2j, 16) and
    doubles (with a fresh draw) until :func:`verify_frequencies` passes at
    tolerance ``eps_schedule(j)`` (default 1/(j+1)) with window order
    min(j, max_m_cap).  Afterwards, if the series mass c is below 1, all
    indices i > floor(c * r_j) are overridden, and indices that are
    multiples of j always are; one ascending growth chain covers the sorted
    union of both index sets.  Deterministic given ``seed``: stage j,
    attempt t draws from the seed sequence (seed, j, t).

    The pre-override draws at overridden indices are recorded per stage in
    ``meta`` so the frequency gate can be re-checked from the artifact.
    """
    if J < 2:
        raise ValueError("J >= 2 required")
    if not P_list:
        raise ValueError("at least one admissible series required")
    eps_schedule = eps_schedule or _default_eps
    r_policy = r_policy or ColumnGrowthPolicy()
    sidon_policy = sidon_policy or SidonPolicy()
    k = len(P_list)

    stages: list[StageParams] = []
    stage_meta: list[dict] = []
    h = h1
    for j in range(1, J):
        q = j % k
        P = P_list[q]
        c = P.declared_mass
        P_norm = P.renormalized()
        eps = eps_schedule(j)
        max_m = min(j, r_policy.max_m_cap)
        r = r_policy.start_columns(j)
        report = None
        for attempt in range(r_policy.max_doublings + 1):
            draws = sample_spacers(P_norm, r, [seed, j, attempt])
            report = verify_frequencies(draws, P_norm, max_m, eps)
            if report.passed:
                break
            r *= 2
        else:
            raise GenerationError(j, r // 2, report)

        # override index set: multiples of j, plus the tail when mass < 1
        override = set(range(j, r + 1, j))
        tail_from = None
        if c < 1:
            tail_from = math.floor(c * r) + 1
            override.update(range(tail_from, r + 1))
        indices = sorted(override)
        values, conforming = _sidon_chain(len(indices), j, h, sidon_policy)
        spacers = list(draws)
        pre_override = [draws[i - 1] for i in indices]
        for i, v in zip(indices, values):
            spacers[i - 1] = v

        stages.append(StageParams(r, tuple(spacers)))
        stage_meta.append({
            "j": j, "q": q, "r": r, "attempts": attempt + 1, "eps": str(eps),
            "max_m": max_m, "sidon_indices": indices, "pre_sidon": pre_override,
            "tail_from": tail_from, "conforming": conforming,
        })
        h = h * r + sum(spacers)

    cap = sidon_policy.cap
    meta = {
        "generator": "p-construction",
        "seed": seed,
        "h1": h1,
        "k": k,
        "series": [[[kk, v.numerator, v.denominator] for kk, v in P.coeffs]
                   for P in P_list],
        "rng": "numpy-philox4x64 inverse-cdf; stream (seed, stage, attempt)",
        "sidon_policy": {
            "base_multiplier": "stage" if sidon_policy.base_multiplier is None
                               else repr(sidon_policy.base_multiplier),
            "increment": sidon_policy.increment,
            "cap": cap,
        },
        "stages": stage_meta,
    }
    return ConstructionParams(h1, tuple(stages), meta)


def generator_series(params: ConstructionParams) -> list[AdmissibleSeries]:
    """Reconstruct the admissible series recorded in a generated params meta."""
    blobs = params.meta.get("series")
    if not blobs:
        raise ValueError("params carry no generator series metadata")
    return [make_admissible({kk: Fraction(num, den) for kk, num, den in blob})
            for blob in blobs]


# ---------------------------------------------------------------------------
# Truncation of infinite admissible series
# ---------------------------------------------------------------------------

def truncate_admissible(pairs: Iterable[tuple[int, object]], declared_mass,
                        tail_tol=Fraction(1, 10**6)) -> AdmissibleSeries:
    """Finite-support approximation of a (possibly infinite) series.

    Consumes (exponent, coefficient) pairs in ascending exponent order until
    the remaining tail mass drops below ``tail_tol``; the leftover mass is
    added to the largest retained coefficient so the declared mass is kept
    exactly.
    """
    declared_mass = Fraction(declared_mass)
    retained: dict[int, Fraction] = {}
    acc = Fraction(0)
    for kk, v in pairs:
        v = Fraction(v)
        retained[int(kk)] = retained.get(int(kk), Fraction(0)) + v
        acc += v
        if declared_mass - acc < tail_tol:
            break
    else:
        if declared_mass - acc >= tail_tol:
            raise ValueError("series exhausted before reaching the declared mass")
    residue = declared_mass - acc
    if residue:
        largest = max(retained, key=lambda kk: (retained[kk], -kk))
        retained[largest] += residue
    return make_admissible(retained)


# ---------------------------------------------------------------------------
# Serialization (decimal strings for integers beyond 2^53)
# ---------------------------------------------------------------------------

def _enc_int(x: int):
    return x if abs(x) <= _JSON_INT_LIMIT else str(x)


def _dec_int(x) -> int:
    return int(x)


def _enc_meta(obj):
    if isinstance(obj, dict):
        return {k: _enc_meta(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_enc_meta(v) for v in obj]
    if isinstance(obj, int) and not isinstance(obj, bool):
        return _enc_int(obj)
    return obj


def params_to_json(params: ConstructionParams, indent: int | None = 2) -> str:
    doc = {
        "h1": _enc_int(params.h1),
        "stages": [{"r": st.r, "spacers": [_enc_int(s) for s in st.spacers]}
                   for st in params.stages],
        "meta": _enc_meta(params.meta),
    }
    return json.dumps(doc, indent=indent)


def _dec_meta(obj):
    if isinstance(obj, dict):
        return {k: _dec_meta(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_dec_meta(v) for v in obj]
    if isinstance(obj, str) and (obj.lstrip("-").isdigit() and len(obj) > 15):
        return int(obj)
    return obj


def params_from_json(text: str) -> ConstructionParams:
    doc = json.loads(text)
    stages = tuple(
        StageParams(int(st["r"]), tuple(_dec_int(s) for s in st["spacers"]))
        for st in doc["stages"])
    meta = _dec_meta(doc.get("meta", {}))
    return ConstructionParams(_dec_int(doc["h1"]), stages, meta)

"""Orientation environments: which way each horizontal line points.

An environment maps an ordinate ``y`` to ``+1`` (line oriented to the right)
or ``-1`` (to the left). Deterministic kinds are pure formulas; the random
kind hashes ``(seed, y)`` through a keyed splitmix64 mixer, so its signs are a
fixed function of the seed and never depend on the order of queries.
"""

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from numpy.typing import ArrayLike, NDArray

from walkops.errors import DomainError, EnvironmentSpecError, OrdinateRangeError
from walkops.streams import GOLDEN_GAMMA, MASK64, derive_seed, mix64

ORDINATE_BOUND = 1 << 62

_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(GOLDEN_GAMMA)


class Kind(str, Enum):
    ALTERNATE = "alternate"
    HALFPLANE = "halfplane"
    STRIP = "strip"
    RANDOM = "random"
    EXPLICIT = "explicit"
    FLIPPED = "flip"


def check_ordinate(y: int) -> int:
    if not -ORDINATE_BOUND < y < ORDINATE_BOUND:
        raise OrdinateRangeError(f"|y| must stay below 2^62, got {y}")
    return y


def check_ordinates(ys: NDArray[np.int64]) -> None:
    if ys.size and int(np.max(np.abs(ys))) >= ORDINATE_BOUND:
        raise OrdinateRangeError("an ordinate reached 2^62")


def _keyed_parity(
    keys: Union[np.uint64, NDArray[np.uint64]], ys: NDArray[np.int64]
) -> NDArray[np.int64]:
    with np.errstate(over="ignore"):
        z = ys.astype(np.uint64) * _GAMMA + keys
        z ^= z >> np.uint64(30)
        z *= _C1
        z ^= z >> np.uint64(27)
        z *= _C2
        z ^= z >> np.uint64(31)
    return np.int64(1) - np.int64(2) * (z & np.uint64(1)).astype(np.int64)


@dataclass(frozen=True)
class OrientationEnvironment:
    kind: Kind
    width: int = 1
    seed: int = 0
    table: Tuple[Tuple[int, int], ...] = ()
    flips: FrozenSet[int] = frozenset()
    base: Optional["OrientationEnvironment"] = None
    _cache: Dict[int, int] = field(
        default_factory=dict, compare=False, repr=False, hash=False
    )

    def __post_init__(self) -> None:
        if self.kind is Kind.STRIP and self.width < 1:
            raise EnvironmentSpecError(f"strip width must be >= 1, got {self.width}")
        if self.kind is Kind.RANDOM and self.seed < 0:
            raise EnvironmentSpecError("random environment seed must be >= 0")
        if self.kind is Kind.EXPLICIT:
            if not self.table:
                raise EnvironmentSpecError("explicit table is empty")
            bad = [y for y, s in self.table if s not in (-1, 1)]
            if bad:
                raise EnvironmentSpecError(f"explicit signs must be +1/-1 at {bad[:5]}")
        if self.kind is Kind.FLIPPED and self.base is None:
            raise EnvironmentSpecError("flip needs a base environment")

    @cached_property
    def key(self) -> int:
        return derive_seed(self.seed)

    @cached_property
    def _dense(self) -> Tuple[int, NDArray[np.int64]]:
        lo = min(y for y, _ in self.table)
        hi = max(y for y, _ in self.table)
        dense = np.zeros(hi - lo + 1, dtype=np.int64)
        for y, s in self.table:
            dense[y - lo] = s
        return lo, dense

    @property
    def cached_signs(self) -> Mapping[int, int]:
        return MappingProxyType(self._cache)

    def epsilon(self, y: int) -> int:
        check_ordinate(y)
        if self.kind is Kind.ALTERNATE:
            return 1 if y % 2 == 0 else -1
        if self.kind is Kind.HALFPLANE:
            return 1 if y >= 0 else -1
        if self.kind is Kind.STRIP:
            return 1 if (y // self.width) % 2 == 0 else -1
        if self.kind is Kind.RANDOM:
            cached = self._cache.get(y)
            if cached is None:
                z = mix64(((y & MASK64) * GOLDEN_GAMMA + self.key) & MASK64)
                cached = 1 - 2 * (z & 1)
                self._cache[y] = cached
            return cached
        if self.kind is Kind.EXPLICIT:
            return int(self.signs(np.array([y], dtype=np.int64))[0])
        assert self.base is not None
        sign = self.base.epsilon(y)
        return -sign if y in self.flips else sign

    def signs(self, ys: ArrayLike) -> NDArray[np.int64]:
        """Vectorized epsilon, same shape as ``ys``."""
        arr = np.asarray(ys, dtype=np.int64)
        check_ordinates(arr)
        if self.kind is Kind.ALTERNATE:
            return np.int64(1) - np.int64(2) * (arr & 1)
        if self.kind is Kind.HALFPLANE:
            return np.where(arr >= 0, 1, -1).astype(np.int64)
        if self.kind is Kind.STRIP:
            band = np.floor_divide(arr, self.width)
            return np.int64(1) - np.int64(2) * (band & 1)
        if self.kind is Kind.RANDOM:
            return _keyed_parity(np.uint64(self.key), arr)
        if self.kind is Kind.EXPLICIT:
            lo, dense = self._dense
            idx = arr - lo
            outside = (idx < 0) | (idx >= dense.size)
            if np.any(outside):
                missing = int(arr[outside].flat[0])
                raise DomainError(f"ordinate {missing} is not in the explicit table")
            out = dense[idx]
            if np.any(out == 0):
                missing = int(arr[out == 0].flat[0])
                raise DomainError(f"ordinate {missing} is not in the explicit table")
            return out
        assert self.base is not None
        flipped = np.isin(arr, np.fromiter(self.flips, dtype=np.int64))
        return np.where(flipped, -1, 1) * self.base.signs(arr)

    def describe(self) -> str:
        if self.kind is Kind.STRIP:
            return f"strip:{self.width}"
        if self.kind is Kind.RANDOM:
            return f"random:{self.seed}"
        if self.kind is Kind.EXPLICIT:
            return "explicit:" + json.dumps({str(y): s for y, s in self.table})
        if self.kind is Kind.FLIPPED:
            assert self.base is not None
            ys = ",".join(str(y) for y in sorted(self.flips))
            return f"flip:{ys}:{self.base.describe()}"
        return self.kind.value


# =========================
# Constructors
# =========================


def alternate() -> OrientationEnvironment:
    return OrientationEnvironment(Kind.ALTERNATE)


def halfplane() -> OrientationEnvironment:
    return OrientationEnvironment(Kind.HALFPLANE)


def strip(width: int) -> OrientationEnvironment:
    return OrientationEnvironment(Kind.STRIP, width=width)


def random_iid(seed: int) -> OrientationEnvironment:
    return OrientationEnvironment(Kind.RANDOM, seed=seed)


def explicit(table: Mapping[int, int]) -> OrientationEnvironment:
    return OrientationEnvironment(
        Kind.EXPLICIT, table=tuple(sorted((int(y), int(s)) for y, s in table.items()))
    )


def flipped(
    base: OrientationEnvironment, ordinates: Iterable[int]
) -> OrientationEnvironment:
    return OrientationEnvironment(Kind.FLIPPED, flips=frozenset(ordinates), base=base)


def epsilon(env: OrientationEnvironment, y: int) -> int:
    return env.epsilon(y)


def balance_statistic(env: OrientationEnvironment, n: int) -> Fraction:
    """(1/N) * sum of epsilon over -N..N."""
    if n < 1:
        raise DomainError(f"balance window must be >= 1, got {n}")
    total = int(env.signs(np.arange(-n, n + 1, dtype=np.int64)).sum())
    return Fraction(total, n)


def ensemble(env: OrientationEnvironment, count: int) -> List[OrientationEnvironment]:
    """``count`` environments drawn around ``env``.

    A single member is ``env`` itself; random members get derived seeds.
    """
    if count < 1:
        raise DomainError("ensemble size must be >= 1")
    if count == 1 or env.kind is not Kind.RANDOM:
        return [env] * count
    return [random_iid(derive_seed(env.seed, k) >> 1) for k in range(count)]


def signs_rows(
    envs: Sequence[OrientationEnvironment], ys: NDArray[np.int64]
) -> NDArray[np.int64]:
    """Row ``k`` of ``ys`` read in environment ``envs[k]``."""
    if len(envs) != ys.shape[0]:
        raise ValueError("one environment per row is required")
    first = envs[0]
    if all(e is first for e in envs):
        return first.signs(ys)
    if all(e.kind is Kind.RANDOM for e in envs):
        check_ordinates(ys)
        keys = np.array([e.key for e in envs], dtype=np.uint64).reshape(-1, 1)
        return _keyed_parity(keys, ys)
    return np.stack([e.signs(row) for e, row in zip(envs, ys)])


# =========================
# Parsing
# =========================


def load_explicit_table(path: Path) -> Dict[int, int]:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
        return {int(k): int(v) for k, v in raw.items()}
    table: Dict[int, int] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line[0].isalpha():
            continue
        y, s = re.split(r"[,\s]+", line)[:2]
        table[int(y)] = int(s)
    return table


def parse_environment(spec: str) -> OrientationEnvironment:
    """Parse ``alternate``, ``halfplane``, ``strip:<l>``, ``random:<seed>``,
    ``explicit:<json or path>`` or ``flip:<y1,y2,...>:<base spec>``."""
    text = (spec or "").strip()
    name, _, rest = text.partition(":")
    name = name.lower()
    try:
        if name in {"alternate", "l"} and not rest:
            return alternate()
        if name in {"halfplane", "h"} and not rest:
            return halfplane()
        if name == "strip":
            return strip(int(rest))
        if name in {"random", "o"}:
            return random_iid(int(rest or 0))
        if name == "explicit":
            if rest.lstrip().startswith("{"):
                raw = json.loads(rest)
                return explicit({int(k): int(v) for k, v in raw.items()})
            return explicit(load_explicit_table(Path(rest).expanduser()))
        if name == "flip":
            ys, _, base = rest.partition(":")
            ordinates = [int(y) for y in ys.split(",") if y.strip()]
            return flipped(parse_environment(base), ordinates)
    except (ValueError, OSError) as e:
        if isinstance(e, EnvironmentSpecError):
            raise
        raise EnvironmentSpecError(f"cannot parse {spec!r}: {e}") from e
    raise EnvironmentSpecError(f"unknown lattice {spec!r}")

"""Subshifts of finite type: words, admissibility, the shift metric,
Bowen-ball separation predicates, and bridging words.

Conventions fixed here and used everywhere else:

* one-sided shifts over the alphabet {0, ..., m-1};
* metric d(x, y) = 2**(-t) with t the first index of disagreement, so a
  statement "(n, 2**(-k))-separated" is exactly "distinct prefixes of
  length n + k - 1";
* bridging words are the lexicographically smallest admissible choice.
"""
from __future__ import annotations

import json
import threading
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import GapTooSmall, NotPrimitive, WordsTooShort

_WIELANDT = lambda m: (m - 1) ** 2 + 1  # noqa: E731  classical primitivity horizon


# --------------------------- words ---------------------------


class Word:
    """An immutable finite symbol sequence.

    Admissibility against a transition matrix is checked when words are
    created through :meth:`SftSpace.word`; slicing preserves it for free.
    """

    __slots__ = ("symbols",)

    def __init__(self, symbols: Iterable[int]):
        object.__setattr__(self, "symbols", tuple(int(s) for s in symbols))

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        if isinstance(i, slice):
            if i.step not in (None, 1):
                raise ValueError("only contiguous slices keep admissibility")
            return Word(self.symbols[i])
        return self.symbols[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and self.symbols == other.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.symbols + tuple(other))

    def __repr__(self) -> str:
        return f"Word({self.to_text()!r})"

    def to_text(self) -> str:
        """One character per symbol for alphabets up to 10, else comma-separated."""
        if all(s < 10 for s in self.symbols):
            return "".join(str(s) for s in self.symbols)
        return ",".join(str(s) for s in self.symbols)

    @staticmethod
    def from_text(text: str) -> "Word":
        if "," in text:
            return Word(int(p) for p in text.split(",") if p != "")
        return Word(int(c) for c in text)


# --------------------------- the ambient space ---------------------------


class SftSpace:
    """Alphabet size m plus a 0/1 transition matrix.

    ``primitivity_index`` is the smallest t with ``transition**t`` entrywise
    positive (None when the matrix is not primitive).
    """

    def __init__(self, transition: Sequence[Sequence[int]]):
        A = np.array(transition, dtype=np.int64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.isin(A, (0, 1)).all():
            raise ValueError("transition entries must be 0 or 1")
        if (A.sum(axis=1) == 0).any() or (A.sum(axis=0) == 0).any():
            raise ValueError("every symbol needs a successor and a predecessor")
        self.m = int(A.shape[0])
        self.transition = A
        self.transition.setflags(write=False)
        self.primitivity_index = self._compute_primitivity_index(A)
        self._reach_cache: dict[int, np.ndarray] = {0: np.eye(self.m, dtype=bool)}
        self._succ = [tuple(np.flatnonzero(A[i]).tolist()) for i in range(self.m)]

    @staticmethod
    def _compute_primitivity_index(A: np.ndarray) -> Optional[int]:
        m = A.shape[0]
        P = A.astype(bool)
        power = P.copy()
        for t in range(1, _WIELANDT(m) + 1):
            if power.all():
                return t
            power = power @ P
        return None

    # -- constructors --

    @classmethod
    def full_shift(cls, m: int) -> "SftSpace":
        return cls(np.ones((m, m), dtype=np.int64))

    @classmethod
    def golden_mean(cls) -> "SftSpace":
        """Two symbols, the word 11 forbidden."""
        return cls([[1, 1], [1, 0]])

    # -- predicates and enumeration --

    @property
    def is_full_shift(self) -> bool:
        return bool(self.transition.all())

    def allowed(self, a: int, b: int) -> bool:
        return bool(self.transition[a, b])

    def successors(self, a: int) -> tuple[int, ...]:
        return self._succ[a]

    def is_admissible(self, symbols: Sequence[int]) -> bool:
        s = list(symbols)
        if any(not (0 <= x < self.m) for x in s):
            return False
        return all(self.transition[s[i], s[i + 1]] for i in range(len(s) - 1))

    def word(self, symbols: Iterable[int]) -> Word:
        w = Word(symbols)
        if not self.is_admissible(w.symbols):
            raise ValueError(f"word {w.to_text()!r} is not admissible")
        return w

    def parse(self, text: str) -> Word:
        return self.word(Word.from_text(text).symbols)

    def words(self, length: int) -> Iterator[Word]:
        """All admissible words of the given length, lexicographic order."""
        if length == 0:
            yield Word(())
            return
        stack: list[tuple[int, ...]] = [(a,) for a in range(self.m - 1, -1, -1)]
        while stack:
            w = stack.pop()
            if len(w) == length:
                yield Word(w)
                continue
            for b in reversed(self._succ[w[-1]]):
                stack.append(w + (b,))

    def count_words(self, length: int) -> int:
        if length == 0:
            return 1
        v = np.ones(self.m, dtype=object)
        for _ in range(length - 1):
            v = self.transition.astype(object) @ v
        return int(v.sum())

    def reach(self, t: int) -> np.ndarray:
        """Boolean matrix: is there a path of exactly t edges from i to j."""
        if t not in self._reach_cache:
            self._reach_cache[t] = self.reach(t - 1) @ self.transition.astype(bool)
        return self._reach_cache[t]

    # -- serialization --

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "transition": self.transition.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "SftSpace":
        data = json.loads(text)
        space = cls(data["transition"])
        if space.m != data["m"]:
            raise ValueError("inconsistent alphabet size in JSON")
        return space

    def __eq__(self, other) -> bool:
        return isinstance(other, SftSpace) and np.array_equal(
            self.transition, other.transition
        )

    def __hash__(self) -> int:
        return hash(self.transition.tobytes())

    def __repr__(self) -> str:
        return f"SftSpace(m={self.m}, full={self.is_full_shift})"


# --------------------------- metric and separation ---------------------------


def dist(x: Word, y: Word) -> float:
    """d = 2**(-t), t the first disagreement; 0 for equal words.

    Words agreeing on the shorter length but of different lengths are at
    distance 2**(-min length): the missing symbols count as unknown.
    """
    n = min(len(x), len(y))
    xs, ys = x.symbols, y.symbols
    for t in range(n):
        if xs[t] != ys[t]:
            return 2.0 ** (-t)
    if len(x) == len(y):
        return 0.0
    return 2.0 ** (-n)


def separated_count(points: Iterable[Word], n: int, k: int) -> int:
    """Exact maximal (n, 2**(-k))-separated cardinality of a word set.

    Under the metric convention this is the number of distinct prefixes of
    length max(n + k - 1, 1); the ultrametric makes the greedy maximum exact.
    """
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    L = max(n + k - 1, 1)
    prefixes = set()
    for w in points:
        if len(w) < L:
            raise WordsTooShort(f"word of length {len(w)} < prefix length {L}")
        prefixes.add(w.symbols[:L])
    return len(prefixes)


def hamming(x: Word, y: Word, n: int) -> int:
    if len(x) < n or len(y) < n:
        raise WordsTooShort(f"need length >= {n}")
    xs, ys = x.symbols, y.symbols
    return sum(1 for j in range(n) if xs[j] != ys[j])


def delta_separated(x: Word, y: Word, n: int, delta: float) -> bool:
    """Normalized Hamming distance >= delta on the first n coordinates.

    This is (delta, n, eps)-separation at eps = 1/2: under the metric,
    d(sigma^j x, sigma^j y) > 1/2 happens exactly at mismatched coordinates.
    """
    return hamming(x, y, n) >= delta * n


# --------------------------- bridging words ---------------------------


def connector(space: SftSpace, a: int, b: int, gap: int) -> Word:
    """Lexicographically smallest word w of length gap-1 with a.w.b admissible.

    Requires a primitive space and gap >= primitivity index, which guarantees
    a bridge of every such length exists between any two symbols.
    """
    if space.primitivity_index is None:
        raise NotPrimitive("connector needs a primitive transition matrix")
    if gap < space.primitivity_index:
        raise GapTooSmall(f"gap {gap} < primitivity index {space.primitivity_index}")
    if not (0 <= a < space.m and 0 <= b < space.m):
        raise ValueError("symbols out of range")
    out = []
    cur = a
    for i in range(gap - 1):
        remaining = gap - 1 - i  # edges still needed from the chosen symbol to b
        for s in space.successors(cur):
            if space.reach(remaining)[s, b]:
                out.append(s)
                cur = s
                break
        else:  # pragma: no cover - impossible when gap >= primitivity index
            raise GapTooSmall(f"no bridge of length {gap} from {a} to {b}")
    if gap - 1 == 0 and not space.allowed(a, b):  # pragma: no cover - guarded above
        raise GapTooSmall(f"direct transition {a}->{b} not allowed")
    return Word(out)


# --------------------------- symbol streams ---------------------------


class SymbolStream:
    """Deterministic resumable symbol source.

    ``materialize(H)`` returns the first H symbols as a Word; longer calls
    extend the same underlying sequence, so shorter materializations are
    always prefixes of longer ones.
    """

    def __init__(self, space: SftSpace, factory: Callable[[], Iterator[int]],
                 label: str = ""):
        self.space = space
        self.label = label
        self._factory = factory
        self._iter: Optional[Iterator[int]] = None
        self._buf: list[int] = []
        self._lock = threading.Lock()

    def materialize(self, horizon: int) -> Word:
        with self._lock:
            if self._iter is None:
                self._iter = self._factory()
            while len(self._buf) < horizon:
                try:
                    s = next(self._iter)
                except StopIteration:  # pragma: no cover - streams are infinite
                    raise WordsTooShort(
                        f"stream {self.label!r} exhausted at {len(self._buf)}"
                    )
                if self._buf and not self.space.allowed(self._buf[-1], s):
                    raise ValueError(
                        f"stream {self.label!r} emitted a forbidden transition "
                        f"{self._buf[-1]}->{s} at position {len(self._buf)}"
                    )
                self._buf.append(int(s))
            return Word(self._buf[:horizon])

    def __repr__(self) -> str:
        return f"SymbolStream({self.label!r}, buffered={len(self._buf)})"

import numpy as np
import pytest

from sftlab.errors import GapTooSmall, NotPrimitive, WordsTooShort
from sftlab.shift import (SftSpace, SymbolStream, Word, connector,
                          delta_separated, dist, separated_count)


FULL2 = SftSpace.full_shift(2)
GOLDEN = SftSpace.golden_mean()


def brute_force_connectors(space, a, b, gap):
    """All admissible bridges of length gap-1 between a and b."""
    out = []
    if gap == 1:
        return [Word(())] if space.allowed(a, b) else []
    for w in space.words(gap - 1):
        if space.allowed(a, w[0]) and space.allowed(w[len(w) - 1], b) \
                and space.is_admissible(w.symbols):
            out.append(w)
    return out


class TestSftSpace:
    def test_full_shift_primitivity(self):
        assert FULL2.primitivity_index == 1
        assert FULL2.is_full_shift

    def test_golden_mean_primitivity(self):
        # A^2 = [[2,1],[1,1]] is the first positive power
        assert GOLDEN.primitivity_index == 2

    def test_non_primitive_has_no_index(self):
        flip = SftSpace([[0, 1], [1, 0]])  # period-2, never primitive
        assert flip.primitivity_index is None

    def test_stranded_symbol_rejected(self):
        with pytest.raises(ValueError):
            SftSpace([[1, 1], [0, 0]])

    def test_word_admissibility(self):
        GOLDEN.word([0, 1, 0, 0, 1])
        with pytest.raises(ValueError):
            GOLDEN.word([1, 1])

    def test_word_enumeration_counts(self):
        # golden mean word counts follow the Fibonacci recursion
        counts = [GOLDEN.count_words(n) for n in range(1, 8)]
        assert counts == [2, 3, 5, 8, 13, 21, 34]
        assert len(list(GOLDEN.words(5))) == 13

    def test_json_round_trip(self):
        again = SftSpace.from_json(GOLDEN.to_json())
        assert again == GOLDEN


class TestDist:
    def test_equal_words(self):
        w = FULL2.word([0, 1, 0])
        assert dist(w, w) == 0.0

    def test_first_disagreement_at_three(self):
        assert dist(Word("0000"), Word("0001")) == 2.0 ** -3

    def test_disagree_at_zero(self):
        assert dist(Word("10"), Word("00")) == 1.0

    def test_ultrametric_on_random_triples(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            x, y, z = (Word(rng.integers(0, 2, 12).tolist()) for _ in range(3))
            assert dist(x, z) <= max(dist(x, y), dist(y, z)) + 1e-15


class TestSeparation:
    def test_identical_prefixes_collapse(self):
        pts = [Word("0000000"), Word("0001000")]
        # prefix length n+k-1 = 2: both start "00"
        assert separated_count(pts, 2, 1) == 1

    def test_spec_prefix_length(self):
        pts = list(FULL2.words(5))
        assert separated_count(pts, 5, 0) == 16  # distinct 4-prefixes

    def test_singleton(self):
        assert separated_count([Word("00000")], 3, 2) == 1

    def test_too_short(self):
        with pytest.raises(WordsTooShort):
            separated_count([Word("0")], 3, 1)

    def test_counting_identity_against_metric_greedy(self):
        # greedy maximal selection under pairwise d_n comparisons is exact
        # for an ultrametric; k >= 1 keeps the two formulations equivalent
        rng = np.random.default_rng(11)
        for trial in range(50):
            n = int(rng.integers(2, 6))
            k = int(rng.integers(1, 4))
            L = n + k - 1
            pts = [Word(rng.integers(0, 2, L + 3).tolist())
                   for _ in range(int(rng.integers(1, 25)))]

            def d_n(x, y):
                return max(dist(x[j:], y[j:]) for j in range(n))

            eps = 2.0 ** -k
            kept = []
            for w in pts:
                if all(d_n(w, v) > eps for v in kept):
                    kept.append(w)
            assert separated_count(pts, n, k) == len(kept)

    def test_delta_separated_examples(self):
        assert delta_separated(Word("0101"), Word("1010"), 4, 1.0)
        w = Word("0101")
        assert not delta_separated(w, w, 4, 0.01)
        assert delta_separated(Word("0011"), Word("0000"), 4, 0.5)


class TestConnector:
    def test_full_shift_direct(self):
        assert connector(FULL2, 0, 1, 1) == Word(())

    def test_golden_mean_one_one(self):
        # the only admissible length-1 bridge between two 1s
        assert brute_force_connectors(GOLDEN, 1, 1, 2) == [Word("0")]
        assert connector(GOLDEN, 1, 1, 2) == Word("0")

    def test_golden_mean_zero_zero_lex_min(self):
        bridges = brute_force_connectors(GOLDEN, 0, 0, 2)
        assert connector(GOLDEN, 0, 0, 2) == min(bridges, key=lambda w: w.symbols)
        assert connector(GOLDEN, 0, 0, 2) == Word("0")

    def test_lex_minimality_against_brute_force(self):
        for gap in (2, 3, 4):
            for a in range(2):
                for b in range(2):
                    bridges = brute_force_connectors(GOLDEN, a, b, gap)
                    assert bridges, (a, b, gap)
                    assert connector(GOLDEN, a, b, gap) == min(
                        bridges, key=lambda w: w.symbols)

    def test_splice_property(self):
        rng = np.random.default_rng(3)
        words = [w for w in GOLDEN.words(5)]
        for _ in range(100):
            u = words[rng.integers(len(words))]
            v = words[rng.integers(len(words))]
            gap = int(rng.integers(2, 5))
            w = connector(GOLDEN, u[len(u) - 1], v[0], gap)
            glued = u.symbols + w.symbols + v.symbols
            assert GOLDEN.is_admissible(glued)

    def test_errors(self):
        flip = SftSpace([[0, 1], [1, 0]])
        with pytest.raises(NotPrimitive):
            connector(flip, 0, 1, 3)
        with pytest.raises(GapTooSmall):
            connector(GOLDEN, 0, 0, 1)


class TestSymbolStream:
    def test_prefix_property(self):
        def factory():
            a = 0
            while True:
                yield a
                a = 1 - a

        stream = SymbolStream(FULL2, factory, label="alt")
        short = stream.materialize(5)
        long = stream.materialize(11)
        assert long.symbols[:5] == short.symbols
        assert short == Word("01010")

    def test_admissibility_enforced(self):
        def bad():
            yield 1
            yield 1

        stream = SymbolStream(GOLDEN, bad)
        with pytest.raises(ValueError):
            stream.materialize(2)

    def test_concurrent_materialization(self):
        import itertools
        from concurrent.futures import ThreadPoolExecutor

        stream = SymbolStream(FULL2, lambda: itertools.cycle([0, 1, 1]))
        with ThreadPoolExecutor(max_workers=8) as pool:
            words = list(pool.map(stream.materialize,
                                  [50, 200, 10, 400, 100, 33, 380, 77]))
        longest = stream.materialize(400)
        for w in words:
            assert longest.symbols[:len(w)] == w.symbols

"""The gluing engine: validated block schedules and the constructed points
they emit: saturated-set generic points, separated stream families,
branching trees with counting measures, and chaotic two-orbit families.

On a mixing SFT the shadowing in all of these constructions is exact word
concatenation with fixed-length bridging words, so every tracking claim
reduces to checkable arithmetic on segment lengths:

* blocks sampled from a measure are redrawn until their own cylinder
  empirical sits within the stage radius zeta of the source measure;
* the tracking bound charges those blocks zeta + eps (eps absorbing the
  window straddle at block edges) and everything else (anchors, bridges,
  tours, family slots) the full diameter;
* tours are covering words on the block-word graph: an Eulerian circuit when
  that graph is balanced, otherwise a concatenation of all block words with
  bridges.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

from .analysis import empirical
from .errors import (FamilyNotSeparated, InfeasibleParams, NotPrimitive,
                     OrbitsNotDisjoint, WordsTooShort)
from .measures import (EmpiricalMeasure, MarkovMeasure, MeasurePath,
                       ks_entropy, refine_path, sample_word,
                       typical_separated_family, weak_star_dist)
from .shift import SftSpace, SymbolStream, Word, connector, dist

# --------------------------- covering tours ---------------------------


def _eulerian_circuit(n_nodes: int, edges: list[tuple[int, int, int]]
                      ) -> Optional[list[int]]:
    """Edge ids of an Eulerian circuit (Hierholzer), or None when the graph
    is unbalanced or not connected.  Edges are consumed in sorted order, so
    the circuit is deterministic."""
    out_deg = [0] * n_nodes
    in_deg = [0] * n_nodes
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for u, v, eid in edges:
        out_deg[u] += 1
        in_deg[v] += 1
        adj[u].append((v, eid))
    if out_deg != in_deg:
        return None
    for lst in adj:
        lst.sort()
    ptr = [0] * n_nodes
    start = min(u for u, _, _ in edges)
    stack = [start]
    edge_stack: list[int] = []
    edge_path: list[int] = []
    while stack:
        v = stack[-1]
        if ptr[v] < len(adj[v]):
            nxt, eid = adj[v][ptr[v]]
            ptr[v] += 1
            stack.append(nxt)
            edge_stack.append(eid)
        else:
            stack.pop()
            if edge_stack:
                edge_path.append(edge_stack.pop())
    if len(edge_path) != len(edges):
        return None  # the edge graph is not connected
    edge_path.reverse()
    return edge_path


def dense_tour(space: SftSpace, depth: int) -> Word:
    """A word containing every admissible depth-word as a subword.

    Depth >= 2 uses an Eulerian circuit on the (depth-1)-word graph whenever
    that graph is balanced (a de Bruijn word, the shortest certificate);
    otherwise, and for depth 1, the depth-words are concatenated with
    bridging words.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if space.primitivity_index is None:
        raise NotPrimitive("tours need a primitive space")
    gap = space.primitivity_index
    targets = [w.symbols for w in space.words(depth)]
    if depth >= 2:
        nodes = {w.symbols: i for i, w in enumerate(space.words(depth - 1))}
        edges = [(nodes[t[:-1]], nodes[t[1:]], eid)
                 for eid, t in enumerate(targets)]
        circuit = _eulerian_circuit(len(nodes), edges)
        if circuit is not None:
            syms = list(targets[circuit[0]])
            for eid in circuit[1:]:
                syms.append(targets[eid][-1])
            return space.word(syms)
    syms = list(targets[0])
    for t in targets[1:]:
        syms += connector(space, syms[-1], t[0], gap).symbols
        syms += list(t)
    return space.word(syms)


def contains_all_words(space: SftSpace, tour: Word, depth: int) -> bool:
    subs = {tour.symbols[i:i + depth] for i in range(len(tour) - depth + 1)}
    return all(w.symbols in subs for w in space.words(depth))


# --------------------------- schedules ---------------------------


@dataclass(frozen=True)
class Stage:
    """One gluing stage: reps typical blocks from alpha, then a covering tour."""
    alpha: MarkovMeasure
    n: int
    reps: int
    tour: Optional[Word]
    zeta: float
    eps: float
    depth: int

    def tour_len(self) -> int:
        return 0 if self.tour is None else len(self.tour)


@dataclass(frozen=True)
class Segment:
    kind: str                 # anchor | family | connector | block | tour
    length: int
    stage: Optional[int]      # 1-based; continuation keeps counting upward
    rep: Optional[int] = None


@dataclass
class GluingSchedule:
    space: SftSpace
    stages: list[Stage]
    anchor: Optional[Word] = None
    family_len: int = 0
    family_entropy: Optional[float] = None
    family_eta: Optional[float] = None
    check_depth: int = 2
    gap: Optional[int] = None
    block_attempts: int = 500

    def __post_init__(self):
        if self.space.primitivity_index is None:
            raise NotPrimitive("schedules need a primitive space")
        if self.gap is None:
            self.gap = self.space.primitivity_index
        if self.gap < self.space.primitivity_index:
            raise ValueError("gap below the primitivity index")
        for st in self.stages:
            if st.n < self.check_depth:
                raise ValueError("block length below the checking depth")

    # -- static segment plan (lengths only; contents live in emission) --

    def _stage_at(self, k: int) -> Stage:
        """Stage parameters for 1-based index k; beyond the built stages the
        last stage's pattern repeats (finite-horizon continuation)."""
        return self.stages[min(k, len(self.stages)) - 1]

    def iter_segments(self, include_family: bool = True) -> Iterator[Segment]:
        conn = self.gap - 1
        first = True

        def bridge() -> Iterator[Segment]:
            nonlocal first
            if not first and conn > 0:
                yield Segment("connector", conn, None)
            first = False

        if self.anchor is not None and len(self.anchor):
            yield from bridge()
            yield Segment("anchor", len(self.anchor), None)
        if include_family and self.family_len > 0:
            yield from bridge()
            yield Segment("family", self.family_len, None)
        k = 1
        while True:
            st = self._stage_at(k)
            for rep in range(st.reps):
                yield from bridge()
                yield Segment("block", st.n, k, rep)
            if st.tour_len() > 0:
                yield from bridge()
                yield Segment("tour", st.tour_len(), k)
            k += 1

    def prologue_len(self, include_family: bool = True) -> int:
        total = 0
        for seg in self.iter_segments(include_family):
            if seg.kind in ("block", "tour"):
                break
            total += seg.length
        return total

    def stage_ends(self, upto: Optional[int] = None) -> list[int]:
        """Cumulative length at the end of each built stage (after its tour,
        or after its last block when the stage has no tour)."""
        upto = len(self.stages) if upto is None else upto
        ends: list[int] = []
        total = 0
        for seg in self.iter_segments():
            if seg.stage is not None and seg.stage > upto:
                break
            total += seg.length
            if seg.stage is not None:
                st = self._stage_at(seg.stage)
                is_last = (seg.kind == "tour") or (
                    st.tour_len() == 0 and seg.kind == "block"
                    and seg.rep == st.reps - 1)
                if is_last:
                    while len(ends) < seg.stage:
                        ends.append(total)
                    ends[seg.stage - 1] = total
        return ends

    def stretched_alpha(self, n: int) -> MarkovMeasure:
        """The stretched tracking target at horizon n: the source measure of
        the stage whose span contains n (prologue positions use stage 1)."""
        total = 0
        stage_of_n = 1
        for seg in self.iter_segments():
            total += seg.length
            if seg.stage is not None:
                stage_of_n = seg.stage
            if total >= n:
                break
        return self._stage_at(stage_of_n).alpha

    # -- serialization --

    def to_json(self) -> str:
        blocks = []
        if self.anchor is not None:
            blocks.append({"kind": "anchor", "word": self.anchor.to_text()})
        if self.family_len:
            blocks.append({"kind": "family", "length": self.family_len,
                           "entropy": self.family_entropy, "eta": self.family_eta})
        for st in self.stages:
            blocks.append({"kind": "measure", "n": st.n, "reps": st.reps,
                           "measure": json.loads(st.alpha.to_json())})
            blocks.append({"kind": "tour", "depth": st.depth,
                           "word": None if st.tour is None else st.tour.to_text()})
        return json.dumps({
            "space": json.loads(self.space.to_json()),
            "gap": self.gap,
            "check_depth": self.check_depth,
            "blocks": blocks,
            "params": {
                "zeta": [st.zeta for st in self.stages],
                "eps": [st.eps for st in self.stages],
                "n": [st.n for st in self.stages],
                "reps": [st.reps for st in self.stages],
                "tour_len": [st.tour_len() for st in self.stages],
            },
        })

    @classmethod
    def from_json(cls, text: str) -> "GluingSchedule":
        data = json.loads(text)
        space = SftSpace(data["space"]["transition"])
        anchor = None
        family_len = 0
        family_entropy = family_eta = None
        stages: list[Stage] = []
        pending: Optional[dict] = None
        params = data["params"]
        idx = 0
        for blk in data["blocks"]:
            if blk["kind"] == "anchor":
                anchor = space.parse(blk["word"])
            elif blk["kind"] == "family":
                family_len = blk["length"]
                family_entropy = blk.get("entropy")
                family_eta = blk.get("eta")
            elif blk["kind"] == "measure":
                pending = blk
            elif blk["kind"] == "tour":
                assert pending is not None, "tour block without its measure block"
                mu = MarkovMeasure(space, pending["measure"]["stochastic"],
                                   pending["measure"]["stationary"])
                tour = None if blk["word"] is None else space.parse(blk["word"])
                stages.append(Stage(
                    alpha=mu, n=pending["n"], reps=pending["reps"], tour=tour,
                    zeta=params["zeta"][idx], eps=params["eps"][idx],
                    depth=blk["depth"]))
                idx += 1
                pending = None
        return cls(space=space, stages=stages, anchor=anchor,
                   family_len=family_len, family_entropy=family_entropy,
                   family_eta=family_eta, check_depth=data["check_depth"],
                   gap=data["gap"])


# --------------------------- validation ---------------------------


@dataclass(frozen=True)
class CheckEntry:
    name: str
    stage: Optional[int]
    lhs: float
    rhs: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class ValidationReport:
    entries: tuple[CheckEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[CheckEntry]:
        return [e for e in self.entries if not e.passed]

    def entry(self, name: str, stage: Optional[int] = None) -> CheckEntry:
        for e in self.entries:
            if e.name == name and (stage is None or e.stage == stage):
                return e
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps([e.__dict__ for e in self.entries])


def validate_schedule(s: GluingSchedule) -> ValidationReport:
    """Evaluate the schedule inequality families, reporting both sides.

    stage_ratio: tour length against block length (per-stage dilution);
    window_slack: block-edge windows short against eps (bound soundness);
    next_stage: the following stage's fixed overhead small against the
    running length; prefix_domination: each stage dwarfs its whole past;
    family_margin: the family size survives the anchor burn-in;
    gn_blowup: mismatch density, identically zero under exact concatenation.
    """
    entries: list[CheckEntry] = []
    if not s.stages and s.anchor is None and not s.family_len:
        return ValidationReport(())
    ends = s.stage_ends()
    prologue = s.prologue_len()
    L = s.check_depth
    entries.append(CheckEntry(
        "gn_blowup", None, 0.0, 1e-9, True,
        "exact concatenation: mismatch density identically zero"))
    for k, st in enumerate(s.stages, start=1):
        entries.append(CheckEntry(
            "stage_ratio", k, st.tour_len() / st.n, st.zeta,
            st.tour_len() / st.n <= st.zeta + 1e-12))
        entries.append(CheckEntry(
            "window_slack", k, (L - 1) / st.n, st.eps,
            (L - 1) / st.n <= st.eps + 1e-12))
        m_prev = ends[k - 2] if k >= 2 else prologue
        m_k = ends[k - 1]
        entries.append(CheckEntry(
            "prefix_domination", k, float(m_prev), st.zeta * m_k,
            m_prev <= st.zeta * m_k + 1e-9))
        if k < len(s.stages):
            nxt = s.stages[k]
            overhead = nxt.n + nxt.tour_len()
            entries.append(CheckEntry(
                "next_stage", k, float(overhead), st.zeta * m_k,
                overhead <= st.zeta * m_k + 1e-9))
    if len(s.stages) >= 2:
        reps = [st.reps for st in s.stages]
        entries.append(CheckEntry(
            "reps_increasing", None, 0.0, 1.0,
            all(a < b for a, b in zip(reps, reps[1:])), f"reps={reps}"))
    if (s.family_len and s.family_entropy is not None
            and s.family_eta is not None and s.anchor is not None):
        a_len = len(s.anchor)
        h, eta, N = s.family_entropy, s.family_eta, s.family_len
        lhs = N * (h - eta) - math.log(a_len)
        rhs = (a_len + N) * (h - 2 * eta)
        entries.append(CheckEntry(
            "family_margin", None, lhs, rhs, lhs > rhs,
            "log family size after anchor burn-in beats the slowed rate"))
    return ValidationReport(tuple(entries))


# --------------------------- emission ---------------------------


def _mix(*parts: int) -> int:
    out = 0
    for p in parts:
        out = (out * 1_000_003 + int(p) + 1) % 2**61
    return out


def _draw_block(s: GluingSchedule, st: Stage, stage_idx: int, rep: int,
                seed: int) -> Word:
    """Sample a block from the stage measure, redrawing until its own
    empirical measure is within zeta of the source at the checking depth."""
    L = s.check_depth
    best_d = math.inf
    for attempt in range(s.block_attempts):
        w = sample_word(st.alpha, st.n, seed=_mix(seed, stage_idx, rep, attempt))
        d = weak_star_dist(empirical(s.space, w, st.n - L + 1, L), st.alpha, L)
        if d <= st.zeta:
            return w
        best_d = min(best_d, d)
    raise InfeasibleParams(
        f"stage {stage_idx}: no draw within zeta={st.zeta} after "
        f"{s.block_attempts} attempts (best {best_d:.4f}); increase the "
        f"block length or zeta")


def _stage_symbol_iter(s: GluingSchedule, seed: int) -> Iterator[int]:
    """Symbols of the stage part (blocks and tours, no prologue), infinite
    and deterministic in seed.  The first symbol carries no bridge."""
    prev: Optional[int] = None
    k = 1
    while True:
        st = s._stage_at(k)
        for rep in range(st.reps):
            w = _draw_block(s, st, k, rep, seed)
            if prev is not None:
                yield from connector(s.space, prev, w[0], s.gap).symbols
            yield from w.symbols
            prev = w[len(w) - 1]
        if st.tour_len() > 0:
            if prev is not None:
                yield from connector(s.space, prev, st.tour[0], s.gap).symbols
            yield from st.tour.symbols
            prev = st.tour[st.tour_len() - 1]
        k += 1


def emit_point(s: GluingSchedule, seed: int,
               family_word: Optional[Word] = None) -> SymbolStream:
    """The constructed point of a schedule as a resumable stream: anchor,
    optional family slot, then stage blocks and tours, joined by bridges.
    Deterministic in (schedule, seed, family word)."""
    if (family_word is not None and s.family_len
            and len(family_word) != s.family_len):
        raise ValueError(
            f"family word length {len(family_word)} != slot {s.family_len}")

    def factory() -> Iterator[int]:
        prev: Optional[int] = None
        for w in (s.anchor, family_word):
            if w is None or len(w) == 0:
                continue
            if prev is not None:
                yield from connector(s.space, prev, w[0], s.gap).symbols
            yield from w.symbols
            prev = w[len(w) - 1]
        tail = _stage_symbol_iter(s, seed)
        first = next(tail)
        if prev is not None:
            yield from connector(s.space, prev, first, s.gap).symbols
        yield first
        yield from tail

    return SymbolStream(s.space, factory, label=f"gk-point(seed={seed})")


# --------------------------- tracking ---------------------------


def tracking_bound(s: GluingSchedule, n: int) -> float:
    """Right-hand side of the empirical-tracking estimate at horizon n.

    Complete measure blocks inside [0, n) are charged zeta + eps plus their
    source's distance to the stretched target; everything else (anchor,
    family slot, tours, bridges, cut segments) is charged the diameter.
    """
    if n < 1:
        raise ValueError("n must be positive")
    target = s.stretched_alpha(n)
    bound = 0.0
    cum = 0
    for seg in s.iter_segments():
        if cum >= n:
            break
        take = min(seg.length, n - cum)
        frac = take / n
        if seg.kind == "block" and take == seg.length:
            st = s._stage_at(seg.stage)
            drift = weak_star_dist(st.alpha, target, s.check_depth)
            bound += frac * min(1.0, st.zeta + st.eps + drift)
        else:
            bound += frac
        cum += take
    return bound


@dataclass(frozen=True)
class TrackingRow:
    n: int
    observed: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.observed <= self.bound + 1e-12


def tracking_report(s: GluingSchedule, seed: int,
                    checkpoints: Optional[Sequence[int]] = None,
                    family_word: Optional[Word] = None) -> list[TrackingRow]:
    """Observed weak* distance of the emitted point's empirical measure to
    the stretched target, against the tracking bound, per checkpoint."""
    cps = sorted(checkpoints) if checkpoints is not None else s.stage_ends()
    stream = emit_point(s, seed, family_word=family_word)
    L = s.check_depth
    rows = []
    for n in cps:
        w = stream.materialize(n + L - 1)
        obs = weak_star_dist(empirical(s.space, w, n, L),
                             s.stretched_alpha(n), L)
        rows.append(TrackingRow(n=n, observed=obs, bound=tracking_bound(s, n)))
    return rows


# --------------------------- separated families ---------------------------


def member_prefix_len(s: GluingSchedule) -> int:
    """Length of the member-specific prefix (anchor, bridges, family slot);
    emitted family streams agree from this position on."""
    p = s.prologue_len(include_family=True)
    return p + (s.gap - 1 if p else 0)


def emit_separated_family(s: GluingSchedule, family: Sequence[Word],
                          horizon: int, seed: int) -> list[Word]:
    """One stream prefix per family element, all sharing the schedule's tail
    plan.  Distinct family words force distinct prefixes, so the output is
    exactly (prefix-length, 1/2)-separated with full cardinality."""
    fam = list(family)
    if not fam:
        return []
    if len({w.symbols for w in fam}) != len(fam):
        raise FamilyNotSeparated("family contains duplicate words")
    if s.family_len and any(len(w) != s.family_len for w in fam):
        raise ValueError("family word length disagrees with the schedule slot")
    need = (len(s.anchor) if s.anchor else 0) + len(fam[0])
    if horizon < need:
        raise WordsTooShort(f"horizon {horizon} below prefix length {need}")
    return [emit_point(s, seed, family_word=w).materialize(horizon) for w in fam]


@dataclass(frozen=True)
class FamilyTrackingReport:
    checkpoints: tuple[int, ...]
    bounds: tuple[float, ...]
    observed_max: tuple[float, ...]       # per checkpoint, max over members
    rows: tuple[tuple[float, ...], ...]   # per member, per checkpoint

    @property
    def all_ok(self) -> bool:
        return all(o <= b + 1e-12
                   for o, b in zip(self.observed_max, self.bounds))


def family_tracking_report(s: GluingSchedule, family: Sequence[Word],
                           seed: int,
                           checkpoints: Optional[Sequence[int]] = None
                           ) -> FamilyTrackingReport:
    """Tracking check for every family member at every checkpoint.

    Members share their tail, so the shared window counts accumulate once
    and only each member's short prefix is rescanned; the numbers equal the
    direct per-member empirical computation exactly.
    """
    fam = list(family)
    if not fam:
        raise ValueError("empty family")
    if len({w.symbols for w in fam}) != len(fam):
        raise FamilyNotSeparated("family contains duplicate words")
    cps = sorted(checkpoints) if checkpoints is not None else s.stage_ends()
    L = s.check_depth
    space = s.space
    gap = s.gap

    tail_iter = _stage_symbol_iter(s, seed)
    tail = [next(tail_iter) for _ in range(cps[-1] + L)]
    anchor_syms = list(s.anchor.symbols) if s.anchor is not None else []

    def member_prefix(w: Word) -> list[int]:
        syms = list(anchor_syms)
        if syms:
            syms += connector(space, syms[-1], w[0], gap).symbols
        syms += list(w.symbols)
        syms += connector(space, syms[-1], tail[0], gap).symbols
        return syms

    p = len(member_prefix(fam[0]))
    tail_counts: list[Counter] = []
    counter: Counter = Counter()
    pos = 0
    for n in cps:
        while pos < n - p:
            counter[tuple(tail[pos:pos + L])] += 1
            pos += 1
        tail_counts.append(counter.copy())

    bounds = tuple(tracking_bound(s, n) for n in cps)
    targets = [s.stretched_alpha(n) for n in cps]
    rows = []
    for w in fam:
        pre = member_prefix(w)
        if len(pre) != p:
            raise ValueError("family words must share one slot length")
        head = pre + tail[:L - 1]
        pre_counts: Counter = Counter()
        for i in range(p):
            pre_counts[tuple(head[i:i + L])] += 1
        row = []
        for tc, target in zip(tail_counts, targets):
            emp = EmpiricalMeasure(space, L, dict(pre_counts + tc))
            row.append(weak_star_dist(emp, target, L))
        rows.append(tuple(row))
    observed_max = tuple(max(r[i] for r in rows) for i in range(len(cps)))
    return FamilyTrackingReport(checkpoints=tuple(cps), bounds=bounds,
                                observed_max=observed_max, rows=tuple(rows))


# --------------------------- schedule builder ---------------------------


def build_gk_schedule(space: SftSpace, K: Union[MeasurePath, MarkovMeasure],
                      anchor: Optional[Word] = None, stages: int = 3,
                      seed: int = 0, *, check_depth: int = 2,
                      family_len: int = 0,
                      family_entropy: Optional[float] = None,
                      family_eta: Optional[float] = None,
                      zetas: Optional[Sequence[float]] = None,
                      epsilons: Optional[Sequence[float]] = None,
                      min_block_len: int = 8) -> GluingSchedule:
    """Build a validated schedule whose emitted points are generic for the
    target set K, visit every cylinder over and over (tours), and start in
    the anchor cylinder when one is given.

    Block lengths absorb the stage tours; repetition counts are the smallest
    satisfying the domination inequalities; the visiting order of K follows
    the forward-and-back mesh refinement of the path.
    """
    if space.primitivity_index is None:
        raise NotPrimitive("build_gk_schedule needs a primitive space")
    if stages < 1:
        raise ValueError("need at least one stage")
    path = K if isinstance(K, MeasurePath) else MeasurePath([K])
    gap = space.primitivity_index
    conn = gap - 1

    alphas: list[MarkovMeasure] = []
    mesh = 1
    while len(alphas) < stages:
        alphas.extend(refine_path(path, mesh))
        mesh += 1
    alphas = alphas[:stages]

    zs = (list(zetas) if zetas is not None
          else [2.0 ** -(k + 1) for k in range(stages)])
    es = (list(epsilons) if epsilons is not None
          else [2.0 ** -(k + 1) for k in range(stages)])
    if len(zs) != stages or len(es) != stages:
        raise ValueError("zeta/eps sequences must match the stage count")

    tours = [dense_tour(space, k + 1) for k in range(stages)]
    ns = [max(gap, min_block_len, check_depth,
              math.ceil(len(tours[k]) / zs[k]),
              math.ceil((check_depth - 1) / es[k]),
              math.ceil(1.0 / zs[k] ** 2))
          for k in range(stages)]

    # exact length bookkeeping: every item after the very first one is
    # preceded by a bridge of conn symbols
    items_before = int(anchor is not None) + int(family_len > 0)
    prologue = 0
    if anchor is not None:
        prologue += len(anchor)
    if family_len:
        prologue += (conn if anchor is not None else 0) + family_len

    built: list[Stage] = []
    m_prev = prologue
    reps_prev = 0
    for k in range(stages):
        first_item_here = (items_before == 0 and k == 0)
        tour_term = conn + len(tours[k])
        per_rep = ns[k] + conn

        def m_of(reps: int) -> int:
            return (m_prev + reps * per_rep + tour_term
                    - (conn if first_item_here else 0))

        need = m_prev / zs[k]
        if k + 1 < stages:
            need = max(need, (ns[k + 1] + len(tours[k + 1])) / zs[k])
        N = max(1, reps_prev + 1)
        while m_of(N) < need:
            N = max(N + 1, math.ceil((need - (m_of(0))) / per_rep))
            if N > 10 ** 9:
                raise InfeasibleParams("repetition count exploded")
        built.append(Stage(alpha=alphas[k], n=ns[k], reps=N, tour=tours[k],
                           zeta=zs[k], eps=es[k], depth=k + 1))
        m_prev = m_of(N)
        reps_prev = N

    sched = GluingSchedule(
        space=space, stages=built, anchor=anchor, family_len=family_len,
        family_entropy=family_entropy, family_eta=family_eta,
        check_depth=check_depth, gap=gap)
    report = validate_schedule(sched)
    fixable = {"prefix_domination", "next_stage", "reps_increasing"}
    for _ in range(64):
        if report.passed:
            return sched
        worst = report.failures()[0]
        if worst.name not in fixable:
            # independent of repetition counts: the caller's parameters are
            # genuinely infeasible (e.g. the family margin needs a longer
            # family slot or a larger eta relative to the anchor)
            raise InfeasibleParams(f"{worst.name}: lhs={worst.lhs} rhs={worst.rhs}")
        k = (worst.stage or len(sched.stages)) - 1
        st = sched.stages[k]
        sched.stages[k] = Stage(st.alpha, st.n, st.reps + 1, st.tour,
                                st.zeta, st.eps, st.depth)
        for j in range(k + 1, len(sched.stages)):
            prev, cur = sched.stages[j - 1], sched.stages[j]
            if cur.reps <= prev.reps:
                sched.stages[j] = Stage(cur.alpha, cur.n, prev.reps + 1,
                                        cur.tour, cur.zeta, cur.eps, cur.depth)
        report = validate_schedule(sched)
    raise InfeasibleParams(f"validator still failing: {report.failures()[:3]}")


# --------------------------- branching trees ---------------------------


@dataclass(frozen=True)
class TreeComponent:
    weight: Fraction
    measure: MarkovMeasure
    words: tuple[Word, ...]


@dataclass(frozen=True)
class TreeStage:
    n: int
    zeta: float
    components: tuple[TreeComponent, ...]
    options: tuple[Word, ...]   # per-repetition branch words (with bridges)


@dataclass(frozen=True)
class BranchTree:
    """Product-family branching tree carrying its uniform counting measure."""
    space: SftSpace
    gap: int
    eta: float
    h_star: float
    stages: tuple[TreeStage, ...]

    def option_counts(self) -> list[int]:
        return [len(st.options) for st in self.stages]

    def leaf_count(self, depth: Optional[int] = None) -> int:
        depth = len(self.stages) if depth is None else depth
        out = 1
        for st in self.stages[:depth]:
            out *= len(st.options)
        return out

    def leaf_weight(self) -> Fraction:
        return Fraction(1, self.leaf_count())

    def prefix_ends(self) -> list[int]:
        """Cumulative leaf length at each stage end (bridges included)."""
        ends = []
        total = 0
        for i, st in enumerate(self.stages):
            if i > 0:
                total += self.gap - 1
            total += len(st.options[0])
            ends.append(total)
        return ends

    def leaves(self) -> Iterator[tuple[tuple[int, ...], Word]]:
        option_words = [st.options for st in self.stages]
        for label in itertools.product(*(range(len(o)) for o in option_words)):
            syms: list[int] = []
            for i, choice in enumerate(label):
                w = option_words[i][choice]
                if syms:
                    syms += connector(self.space, syms[-1], w[0], self.gap).symbols
                syms += list(w.symbols)
            yield label, Word(syms)

    def prefix_distinct_report(self) -> list[CheckEntry]:
        """Distinct labels give distinct stage-end prefixes (set check)."""
        ends = self.prefix_ends()
        leaves = list(self.leaves())
        out = []
        for s_idx, end in enumerate(ends, start=1):
            expected = self.leaf_count(s_idx)
            got = len({w.symbols[:end] for _, w in leaves})
            out.append(CheckEntry("prefix_distinct", s_idx, float(got),
                                  float(expected), got == expected))
        return out

    def mass_bound_report(self) -> list[CheckEntry]:
        """Exact-counting Bowen-ball mass bound: the counting measure of the
        leaves sharing a stage-end prefix never exceeds
        exp(-M_s (H* - 2 eta - zeta_s))."""
        ends = self.prefix_ends()
        total = self.leaf_count()
        leaves = list(self.leaves())
        out = []
        for s_idx, (end, st) in enumerate(zip(ends, self.stages), start=1):
            groups: dict[tuple[int, ...], int] = {}
            for _, w in leaves:
                key = w.symbols[:end]
                groups[key] = groups.get(key, 0) + 1
            max_mass = Fraction(max(groups.values()), total)
            lhs = math.log(max_mass.numerator) - math.log(max_mass.denominator)
            rhs = -end * (self.h_star - 2 * self.eta - st.zeta)
            out.append(CheckEntry(
                "ac_mass", s_idx, lhs, rhs, lhs <= rhs + 1e-12,
                f"max ball mass {max_mass} at prefix {end}"))
        return out


def build_branch_tree(space: SftSpace, K: MeasurePath, eta: float, depth: int,
                      seed: int, *, stage_len: int = 12, delta: float = 0.05,
                      weights: Optional[Sequence[Fraction]] = None,
                      size_margin: float = 1.2,
                      max_leaves: int = 200_000) -> BranchTree:
    """Branching tree whose per-stage options are products of component
    separated families, sized so the exact counting-measure mass bound holds
    at every stage.

    Components are the path's checkpoints mixed with rational weights (the
    honest convex combination); per-component family targets come from the
    worst-stage mass threshold with a safety margin.  ShortFamily from the
    component construction propagates.
    """
    if space.primitivity_index is None:
        raise NotPrimitive("build_branch_tree needs a primitive space")
    if depth < 1 or eta <= 0:
        raise ValueError("need depth >= 1 and eta > 0")
    comps = K.checkpoints
    for mu in comps:
        if not mu.is_ergodic:
            raise ValueError("branch-tree components must be ergodic")
    p = len(comps)
    ws = list(weights) if weights is not None else [Fraction(1, p)] * p
    if sum(ws) != 1:
        raise ValueError("component weights must sum to 1")
    gap = space.primitivity_index
    conn = gap - 1

    h_sup = max(ks_entropy(mu) for mu in comps)
    h_star = h_sup - eta
    zetas = [eta * (0.75 ** s) for s in range(1, depth + 1)]

    lens = [int(w * stage_len) for w in ws]
    lens[-1] = stage_len - sum(lens[:-1])
    if any(l < max(gap, 2) for l in lens):
        raise InfeasibleParams("stage_len too small for the component split")
    stage_total = stage_len + conn * (p - 1)

    rate_req = max(h_star - 2 * eta - z for z in zetas)
    product_target = math.exp((stage_total + conn) * max(rate_req, 0.0)
                              * size_margin)

    stages: list[TreeStage] = []
    for s_idx in range(depth):
        comps_built = []
        option_parts: list[list[Word]] = []
        for c_idx, (mu, a, l) in enumerate(zip(comps, ws, lens)):
            t_i = max(2, math.ceil(product_target ** float(a)))
            h_i = ks_entropy(mu)
            eta_i = h_i - math.log(t_i) / l
            if eta_i <= 0:
                raise InfeasibleParams(
                    f"component target {t_i} unreachable at length {l}; "
                    f"increase stage_len")
            fam = typical_separated_family(
                mu, l, delta, eta_i, seed=_mix(seed, s_idx, c_idx),
                typical_tol=max(eta_i, 0.2))
            fam = fam[:t_i]
            comps_built.append(TreeComponent(a, mu, tuple(fam)))
            option_parts.append(fam)
        options = []
        for combo in itertools.product(*option_parts):
            syms: list[int] = []
            for w in combo:
                if syms:
                    syms += connector(space, syms[-1], w[0], gap).symbols
                syms += list(w.symbols)
            options.append(Word(syms))
        stages.append(TreeStage(n=stage_len, zeta=zetas[s_idx],
                                components=tuple(comps_built),
                                options=tuple(options)))
    tree = BranchTree(space=space, gap=gap, eta=eta, h_star=h_star,
                      stages=tuple(stages))
    if tree.leaf_count() > max_leaves:
        raise InfeasibleParams(
            f"{tree.leaf_count()} leaves exceed the cap {max_leaves}")
    report = tree.mass_bound_report()
    if not all(e.passed for e in report):
        raise InfeasibleParams(
            f"mass bound violated: {[e for e in report if not e.passed]}")
    return tree


# --------------------------- chaotic families ---------------------------


def _orbit_gap(space: SftSpace, lam1: Word, lam2: Word) -> float:
    """min over rotations of the distance between two periodic orbits."""
    p1, p2 = len(lam1), len(lam2)
    horizon = 2 * (p1 * p2) // math.gcd(p1, p2) + max(p1, p2) + 4
    worst = 1.0
    for i in range(p1):
        xi = Word([lam1[(i + t) % p1] for t in range(horizon)])
        for j in range(p2):
            yj = Word([lam2[(j + t) % p2] for t in range(horizon)])
            d = dist(xi, yj)
            if d == 0.0:
                raise OrbitsNotDisjoint(
                    f"orbits of {lam1.to_text()} and {lam2.to_text()} meet")
            worst = min(worst, d)
    return worst


@dataclass(frozen=True)
class ChaosStage:
    n: int
    reps: int
    ntilde: int
    tour: Word
    zeta: float
    eps: float


@dataclass(frozen=True)
class ChaoticFamily:
    space: SftSpace
    members: dict
    eps_star: float
    stages: tuple[ChaosStage, ...]
    stage_ends: tuple[int, ...]
    mu0_run_ends: tuple[int, ...]
    excursion_spans: tuple[tuple[tuple[int, int, int], ...], ...]
    horizon: int
    validation: ValidationReport


def emit_chaotic_family(space: SftSpace, mu0: MarkovMeasure, lambda1: Word,
                        lambda2: Word, xis: Sequence[Sequence[int]],
                        horizon: int, seed: int, *,
                        anchor: Optional[Word] = None,
                        check_depth: int = 2, min_block_len: int = 8,
                        max_tour_depth: int = 6) -> ChaoticFamily:
    """One stream per {1,2}-sequence prefix: long runs tracking mu0, brief
    excursions to the two disjoint periodic orbits selected by the sequence,
    and covering tours; every mu0 block and tour is shared across members.

    Sequences differing at index u force a window of distance >= eps*/2 in
    every stage from u on, while the mu0 runs dominate in length so the
    closeness density climbs toward one.
    """
    if space.primitivity_index is None:
        raise NotPrimitive("emit_chaotic_family needs a primitive space")
    for lam in (lambda1, lambda2):
        if not space.is_admissible(lam.symbols + lam.symbols):
            raise ValueError("orbit generators must be periodically admissible")
    eps_star = _orbit_gap(space, lambda1, lambda2)
    gap = space.primitivity_index
    conn = gap - 1
    L = check_depth

    xi_list = [tuple(int(v) for v in xi) for xi in xis]
    if len(set(xi_list)) != len(xi_list):
        raise ValueError("xi prefixes must be distinct")
    if any(v not in (1, 2) for xi in xi_list for v in xi):
        raise ValueError("xi entries must be 1 or 2")

    lam_words = {1: lambda1, 2: lambda2}
    maxp = max(len(lambda1), len(lambda2))
    anchor_len = len(anchor) if anchor is not None else 0

    # static per-stage parameters, independent of repetition counts
    params = []
    for k in range(1, 33):
        zeta = 2.0 ** -(k + 1)
        eps = min(2.0 ** -(k + 1), eps_star / 2 ** (k + 2))
        ntilde = max(6, gap, 2 * maxp)
        tour = dense_tour(space, min(k, max_tour_depth))
        n_k = max(gap, min_block_len, L,
                  math.ceil((len(tour) + k * ntilde) / zeta),
                  math.ceil((L - 1) / max(eps, 1e-9)),
                  math.ceil(1.0 / zeta ** 2))
        params.append((zeta, eps, ntilde, tour, n_k))

    def simulate(count: int):
        sim_stages: list[ChaosStage] = []
        sim_ends: list[int] = []
        sim_runs: list[int] = []
        m_prev = anchor_len
        for k in range(1, count + 1):
            zeta, eps, ntilde, tour, n_k = params[k - 1]
            first_item_here = (anchor is None and k == 1)
            fixed = k * (ntilde + conn) + len(tour) + conn

            def m_of(reps: int) -> int:
                return (m_prev + reps * (n_k + conn) + fixed
                        - (conn if first_item_here else 0))

            N = max(sim_stages[-1].reps + 1 if sim_stages else 1,
                    math.ceil(max(m_prev, 1) / (zeta * n_k)))
            if k < count:
                z2, e2, nt2, tr2, n2 = params[k]
                overhead = n2 + (k + 1) * nt2 + len(tr2)
                while m_of(N) < overhead / zeta:
                    N = max(N + 1,
                            math.ceil((overhead / zeta - m_of(0)) / (n_k + conn)))
            sim_stages.append(ChaosStage(n=n_k, reps=N, ntilde=ntilde,
                                         tour=tour, zeta=zeta, eps=eps))
            sim_runs.append(m_prev + N * (n_k + conn)
                            - (conn if first_item_here else 0))
            m_prev = m_of(N)
            sim_ends.append(m_prev)
        return sim_stages, sim_ends, sim_runs

    chosen = None
    for count in range(1, 33):
        trial = simulate(count)
        if trial[1][-1] > horizon:
            break
        chosen = trial
    if chosen is None:
        raise InfeasibleParams(
            f"horizon {horizon} too short for one stage")
    stages, ends, run_ends = ([*chosen[0]], [*chosen[1]], [*chosen[2]])

    held = GluingSchedule(space=space, stages=[
        Stage(alpha=mu0, n=st.n, reps=st.reps, tour=st.tour, zeta=st.zeta,
              eps=st.eps, depth=min(i + 1, max_tour_depth))
        for i, st in enumerate(stages)], check_depth=check_depth, gap=gap)

    block_cache: dict[tuple[int, int], Word] = {}

    def mu0_block(k_idx: int, rep: int) -> Word:
        key = (k_idx, rep)
        if key not in block_cache:
            block_cache[key] = _draw_block(held, held.stages[k_idx - 1],
                                           k_idx, rep, seed)
        return block_cache[key]

    def excursion_word(which: int, ntilde: int) -> Word:
        base = lam_words[which].symbols
        return Word((base * math.ceil(ntilde / len(base)))[:ntilde])

    members: dict = {}
    spans: list[tuple[tuple[int, int, int], ...]] = []
    for xi in xi_list:
        if len(xi) < len(stages):
            raise ValueError(
                f"xi prefix length {len(xi)} < stage count {len(stages)}")
        syms: list[int] = list(anchor.symbols) if anchor is not None else []
        spans_this: list[list[tuple[int, int, int]]] = [[] for _ in stages]

        def append_word(w: Word):
            nonlocal syms
            if syms:
                syms += connector(space, syms[-1], w[0], gap).symbols
            syms += list(w.symbols)

        for k_idx, st in enumerate(stages, start=1):
            for rep in range(st.reps):
                append_word(mu0_block(k_idx, rep))
            for q in range(1, k_idx + 1):
                w = excursion_word(xi[q - 1], st.ntilde)
                start = len(syms) + (conn if syms else 0)
                append_word(w)
                spans_this[k_idx - 1].append((q, start, len(syms)))
            append_word(st.tour)
        members[xi] = Word(syms[:horizon])
        spans = [tuple(sp) for sp in spans_this]  # identical across members

    validation = _validate_chaos(stages, anchor_len, L, ends)
    return ChaoticFamily(
        space=space, members=members, eps_star=eps_star,
        stages=tuple(stages), stage_ends=tuple(ends),
        mu0_run_ends=tuple(run_ends),
        excursion_spans=tuple(spans), horizon=horizon, validation=validation)


@dataclass(frozen=True)
class Dc1Family:
    """Alternating-domination variant: shared runs and selected-orbit runs
    take turns dwarfing the whole past, so pairs separate with density near
    one at some scales and agree with density near one at every scale."""
    space: SftSpace
    members: dict
    eps_star: float
    stage_ends: tuple[int, ...]      # checkpoint after each dominating run
    stage_kinds: tuple[str, ...]     # "shared" | "selected"
    horizon: int
    validation: ValidationReport


def emit_dc1_family(space: SftSpace, mu0: MarkovMeasure, lambda1: Word,
                    lambda2: Word, xis: Sequence[Sequence[int]],
                    horizon: int, seed: int, *,
                    check_depth: int = 2, zeta0: float = 0.05,
                    min_block_len: int = 16) -> Dc1Family:
    """Distributional-chaos witnesses for a periodic (non-fixed-point)
    tracking measure: odd stages emit one shared mu0-sampled run, even
    stages a run of the orbit the sequence selects, each run at least
    1/zeta_k times longer than everything before it (zeta_k halving from
    zeta0 on).

    At a checkpoint ending a selected run past the first disagreement the
    pair is eps*-separated on all but a zeta fraction of indices; at a
    checkpoint ending a shared run it is 0-close on all but a zeta
    fraction, which is exactly the DC1 statistics pattern.
    """
    if space.primitivity_index is None:
        raise NotPrimitive("emit_dc1_family needs a primitive space")
    for lam in (lambda1, lambda2):
        if not space.is_admissible(lam.symbols + lam.symbols):
            raise ValueError("orbit generators must be periodically admissible")
    eps_star = _orbit_gap(space, lambda1, lambda2)
    gap = space.primitivity_index
    conn = gap - 1
    xi_list = [tuple(int(v) for v in xi) for xi in xis]
    if len(set(xi_list)) != len(xi_list):
        raise ValueError("xi prefixes must be distinct")
    if any(v not in (1, 2) for xi in xi_list for v in xi):
        raise ValueError("xi entries must be 1 or 2")
    lam_words = {1: lambda1, 2: lambda2}

    # run lengths: each run dwarfs the whole preceding prefix
    lengths: list[int] = []
    kinds: list[str] = []
    ends: list[int] = []
    zetas: list[float] = []
    total = 0
    k = 1
    while True:
        zeta = zeta0 * 2.0 ** -(k - 1)
        run = max(min_block_len, math.ceil(max(total, 1) / zeta)) + conn
        if total + run > horizon and lengths:
            break
        if total + run > horizon:
            raise InfeasibleParams(f"horizon {horizon} too short for one run")
        lengths.append(run - conn)
        kinds.append("shared" if k % 2 == 1 else "selected")
        zetas.append(zeta)
        total += run
        ends.append(total)
        k += 1

    holder = GluingSchedule(space=space, stages=[], check_depth=check_depth,
                            gap=gap)
    shared_cache: dict[int, Word] = {}

    def shared_run(idx: int, n_len: int) -> Word:
        if idx not in shared_cache:
            shared_cache[idx] = _draw_block(
                holder, Stage(alpha=mu0, n=n_len, reps=1, tour=None,
                              zeta=0.25, eps=0.25, depth=1),
                idx + 1, 0, seed)
        return shared_cache[idx]

    def orbit_run(which: int, n_len: int) -> Word:
        base = lam_words[which].symbols
        return Word((base * math.ceil(n_len / len(base)))[:n_len])

    members: dict = {}
    for xi in xi_list:
        syms: list[int] = []
        sel_count = 0
        for i, (n_len, kind) in enumerate(zip(lengths, kinds)):
            if kind == "shared":
                w = shared_run(i, n_len)
            else:
                if sel_count >= len(xi):
                    raise ValueError(
                        f"xi prefix length {len(xi)} < selected runs needed")
                w = orbit_run(xi[sel_count], n_len)
                sel_count += 1
            if syms:
                syms += connector(space, syms[-1], w[0], gap).symbols
            syms += list(w.symbols)
        members[xi] = Word(syms[:horizon])

    entries = [CheckEntry(
        "gn_blowup", None, 0.0, 1e-9, True,
        "exact concatenation: mismatch density identically zero")]
    run_start = 0
    for i, end in enumerate(ends):
        entries.append(CheckEntry(
            "prefix_domination", i + 1, float(run_start), zetas[i] * end,
            run_start <= zetas[i] * end + 1e-9, kinds[i]))
        run_start = end
    return Dc1Family(space=space, members=members, eps_star=eps_star,
                     stage_ends=tuple(ends), stage_kinds=tuple(kinds),
                     horizon=horizon,
                     validation=ValidationReport(tuple(entries)))


def _validate_chaos(stages: Sequence[ChaosStage], anchor_len: int,
                    L: int, ends: Sequence[int]) -> ValidationReport:
    """Chaotic-schedule counterparts of the inequality families: excursion
    and tour dilution per stage, next-stage overhead, and domination of the
    past by each stage's tracking run."""
    entries: list[CheckEntry] = []
    entries.append(CheckEntry(
        "gn_blowup", None, 0.0, 1e-9, True,
        "exact concatenation: mismatch density identically zero"))
    for k, st in enumerate(stages, start=1):
        lhs = (len(st.tour) + k * st.ntilde) / st.n
        entries.append(CheckEntry("stage_ratio", k, lhs, st.zeta,
                                  lhs <= st.zeta + 1e-12))
        entries.append(CheckEntry(
            "window_slack", k, (L - 1) / st.n, st.eps,
            (L - 1) / st.n <= st.eps + 1e-12))
        m_prev = ends[k - 2] if k >= 2 else anchor_len
        entries.append(CheckEntry(
            "prefix_domination", k, float(m_prev),
            st.zeta * st.n * st.reps,
            m_prev <= st.zeta * st.n * st.reps + 1e-9))
        if k < len(stages):
            nxt = stages[k]
            overhead = nxt.n + (k + 1) * nxt.ntilde + len(nxt.tour)
            entries.append(CheckEntry(
                "next_stage", k, float(overhead), st.zeta * ends[k - 1],
                overhead <= st.zeta * ends[k - 1] + 1e-9))
    reps = [st.reps for st in stages]
    if len(reps) >= 2:
        entries.append(CheckEntry(
            "reps_increasing", None, 0.0, 1.0,
            all(a < b for a, b in zip(reps, reps[1:])), f"reps={reps}"))
    return ValidationReport(tuple(entries))

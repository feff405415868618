"""Brute-force searches: monochromatic lines and subspaces, exact
partition numbers on desk-scale instances.

Every search is deterministic: candidates are probed in the canonical
enumeration order and the first hit wins regardless of the worker
count (workers probe chunks; the reducer keeps the least index).  Any
returned object is re-verified by direct point enumeration before it
is handed back.  Budgets are explicit candidate caps with
machine-readable "budget" results, never silent truncation.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional

from .model import SET, EngineError, IndexModel, Vocabulary
from .space import (
    Alphabets, Colouring, Line, Space, Subspace, enumerate_lines,
    enumerate_subspaces, line_points, line_types, min_support, mix64, pt_line,
    subspace_point_set, subspace_points,
)

_CHUNK = 64


def _scan_first(candidates: Iterator, probe: Callable, budget: Optional[int],
                jobs: int):
    """First candidate (in order) whose probe returns a payload.

    Returns (hit_or_None, examined, more_remaining) where ``hit`` is
    (candidate, payload).  Examines at most ``budget`` candidates.
    """
    examined = 0
    it = iter(candidates)
    if jobs <= 1:
        for cand in it:
            if budget is not None and examined >= budget:
                return None, examined, True
            examined += 1
            payload = probe(cand)
            if payload is not None:
                return (cand, payload), examined, False
        return None, examined, False

    def probe_chunk(chunk):
        for offset, cand in enumerate(chunk):
            payload = probe(cand)
            if payload is not None:
                return offset, cand, payload
        return None

    extracted = 0

    def next_chunk():
        nonlocal extracted
        chunk = []
        while len(chunk) < _CHUNK:
            if budget is not None and extracted >= budget:
                break
            try:
                chunk.append(next(it))
            except StopIteration:
                break
            extracted += 1
        return chunk

    with ThreadPoolExecutor(max_workers=jobs) as ex:
        window: list = []
        while True:
            while len(window) < jobs:
                start = extracted
                chunk = next_chunk()
                if not chunk:
                    break
                window.append((start, ex.submit(probe_chunk, chunk)))
            if not window:
                break
            start, fut = window.pop(0)
            hit = fut.result()
            if hit is not None:
                offset, cand, payload = hit
                for _, pending in window:
                    pending.cancel()
                # report the hit's ordinal, matching the sequential path
                return (cand, payload), start + offset + 1, False
    if budget is not None and extracted >= budget:
        try:
            next(it)
            return None, extracted, True
        except StopIteration:
            return None, extracted, False
    return None, extracted, False


@dataclass
class SearchResult:
    status: str                       # "found" | "none" | "budget"
    line: Optional[Line] = None
    subspace: Optional[Subspace] = None
    colour: object = None
    examined: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


def _type_groups(space: Space, types, pairs):
    """Partition the realized types into groups whose colours must agree.

    ``pairs`` is None (all types in one group: plain monochromaticity),
    the string "high-arity" (types grouped by their letters on symbols
    of arity > 1), or explicit (p, q) type pairs (grouped by the
    components of the induced relation).
    """
    tps = list(types)
    if pairs is None:
        return [list(range(len(tps)))]
    if pairs == "high-arity":
        high = [i for i, s in enumerate(space.vocab.symbols) if s.arity > 1]
        groups: dict = {}
        for idx, p in enumerate(tps):
            groups.setdefault(tuple(p[i] for i in high), []).append(idx)
        return [groups[k] for k in sorted(groups)]
    parent = list(range(len(tps)))
    where = {p: i for i, p in enumerate(tps)}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p, q in pairs:
        if p not in where or q not in where:
            raise EngineError("pair mentions a type outside the type set")
        parent[find(where[p])] = find(where[q])
    groups = {}
    for i in range(len(tps)):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def _line_probe(space: Space, d, pairs):
    def probe(line: Line):
        tps = line_types(space, line)
        groups = _type_groups(space, tps, pairs)
        for group in groups:
            colour = None
            for idx in group:
                c = d(pt_line(space, line, tps[idx]))
                if colour is None:
                    colour = c
                elif c != colour:
                    return None
        if pairs is None:
            return d(pt_line(space, line, tps[0]))
        return True
    return probe


def verify_line_mono(space: Space, d, line: Line):
    """Independent check: enumerate the realized points and insist on a
    single colour.  Returns it."""
    colours = {d(pt) for pt in line_points(space, line)}
    if len(colours) != 1:
        raise EngineError("line is not monochromatic: colours %r" % (sorted(map(repr, colours)),))
    return colours.pop()


def verify_line_pairs(space: Space, d, line: Line, pairs) -> bool:
    tps = line_types(space, line)
    for group in _type_groups(space, tps, pairs):
        colours = {d(pt_line(space, line, tps[i])) for i in group}
        if len(colours) != 1:
            raise EngineError("line violates the required colour agreements")
    return True


def find_mono_line(space: Space, d, types=None, pairs=None,
                   budget: Optional[int] = None, jobs: int = 1) -> SearchResult:
    """First line (canonical order) constant on each required type group.

    With ``pairs=None`` this is the plain monochromatic-line search; the
    returned line is re-verified by direct enumeration.
    """
    hit, examined, more = _scan_first(
        enumerate_lines(space, types), _line_probe(space, d, pairs), budget, jobs)
    if hit is not None:
        line, payload = hit
        if pairs is None:
            colour = verify_line_mono(space, d, line)
            return SearchResult("found", line=line, colour=colour, examined=examined)
        verify_line_pairs(space, d, line, pairs)
        return SearchResult("found", line=line, examined=examined)
    return SearchResult("budget" if more else "none", examined=examined)


def verify_subspace_mono(space: Space, d, sub: Subspace):
    colours = {d(pt) for pt in subspace_points(space, sub)}
    if len(colours) != 1:
        raise EngineError("subspace is not monochromatic")
    return colours.pop()


def find_mono_subspace(space: Space, d, m: int, convex: bool = True,
                       budget: Optional[int] = None, jobs: int = 1) -> SearchResult:
    if m < 1:
        raise EngineError("subspace dimension must be >= 1")

    def probe(sub: Subspace):
        colour = None
        for pt in subspace_points(space, sub):
            c = d(pt)
            if colour is None:
                colour = c
            elif c != colour:
                return None
        return (colour,)

    hit, examined, more = _scan_first(
        enumerate_subspaces(space, m, convex), probe, budget, jobs)
    if hit is not None:
        sub, payload = hit
        colour = verify_subspace_mono(space, d, sub)
        return SearchResult("found", subspace=sub, colour=colour, examined=examined)
    return SearchResult("budget" if more else "none", examined=examined)


def seeded_subspace_colouring(space: Space, c: int, seed: int):
    """Deterministic pseudo-random colouring of subspaces: the canonical
    structural serialization is folded through mix64."""

    def d_sub(sub: Subspace):
        h = mix64(seed, 0)
        for block in sub.blocks:
            h = mix64(h, 1)
            for p in block:
                h = mix64(h, p + 2)
        for coord in sub.coords:
            h = mix64(h, coord + 2)
        for letter in sub.fixed:
            h = mix64(h, letter + 2)
        return h % c

    return d_sub


def find_mono_subspace_colouring(space: Space, d_sub, t: int, ell: int,
                                 convex: bool = True, budget: Optional[int] = None,
                                 jobs: int = 1) -> SearchResult:
    """t-dimensional subspace all of whose contained ell-subspaces share
    one colour under a colouring of subspaces.

    0-subspaces are the space points (empty block list), so ell=0
    reduces to the monochromatic-subspace search.
    """
    if not 0 <= ell < t:
        raise EngineError("need 0 <= ell < t")
    if ell == 0:
        small = [(frozenset([pt]), pt) for pt in space.points()]

        def colour_of(entry):
            sub = Subspace((), tuple(entry[1]), ())
            return d_sub(sub)
    else:
        small = [(subspace_point_set(space, s), s)
                 for s in enumerate_subspaces(space, ell, convex)]

        def colour_of(entry):
            return d_sub(entry[1])

    small_coloured = [(entry[0], colour_of(entry)) for entry in small]

    def probe(sub: Subspace):
        big = subspace_point_set(space, sub)
        colour = None
        for pts, col in small_coloured:
            if pts <= big:
                if colour is None:
                    colour = col
                elif col != colour:
                    return None
        return (colour,)

    hit, examined, more = _scan_first(
        enumerate_subspaces(space, t, convex), probe, budget, jobs)
    if hit is not None:
        sub, payload = hit
        return SearchResult("found", subspace=sub, colour=payload[0], examined=examined)
    return SearchResult("budget" if more else "none", examined=examined)


# ---------------------------------------------------------------------------
# Exact partition numbers

@dataclass
class ExactResult:
    status: str          # "exact" | "atleast" | "budget"
    value: int           # the number, or a lower bound for it
    decided: int         # largest dimension fully decided
    examined: int = 0    # colourings probed in total


def canonical_colourings(size: int, c: int) -> Iterator[tuple]:
    """Colour tables in first-occurrence canonical form: the first point
    gets colour 0 and each later entry is at most one above the maximum
    used so far.  Exactly one representative per colour permutation."""
    if size == 0:
        yield ()
        return

    def rec(prefix: tuple, used: int):
        if len(prefix) == size:
            yield prefix
            return
        for col in range(min(used + 1, c - 1) + 1):
            yield from rec(prefix + (col,), max(used, col))

    yield from rec((0,), 0)


def exact_partition_number(vocab: Vocabulary, alphabets_sizes, types_spec, c: int,
                           mode: str = SET, k_max: int = 6,
                           budget: Optional[int] = None, jobs: int = 1) -> ExactResult:
    """Smallest dimension at which every c-colouring admits a
    monochromatic line, found by exhaustive search over colourings up to
    colour-permutation symmetry.

    ``alphabets_sizes`` is an Alphabets or a constant size;
    ``types_spec`` is None for the full type set.  Dimensions are tried
    upward from the minimum line support; a dimension fails as soon as
    a witness colouring (no monochromatic line) appears.
    """
    if c < 1:
        raise EngineError("colour count must be >= 1")
    examined_total = 0
    start = max(min_support(IndexModel(vocab, 0, mode)), 1)
    for k in range(start, k_max + 1):
        model = IndexModel(vocab, k, mode)
        alphabets = (alphabets_sizes if isinstance(alphabets_sizes, Alphabets)
                     else Alphabets.constant(vocab, alphabets_sizes))
        space = Space(model, alphabets)

        def probe(table):
            d = Colouring.table(space, list(table), c)
            res = find_mono_line(space, d, types=types_spec)
            return True if res.status == "none" else None

        remaining = None if budget is None else budget - examined_total
        if remaining is not None and remaining <= 0:
            return ExactResult("budget", k, k - 1, examined_total)
        hit, examined, more = _scan_first(
            canonical_colourings(space.size, c), probe, remaining, jobs)
        examined_total += examined
        if more:
            return ExactResult("budget", k, k - 1, examined_total)
        if hit is None:
            return ExactResult("exact", k, k, examined_total)
    return ExactResult("atleast", k_max + 1, k_max, examined_total)

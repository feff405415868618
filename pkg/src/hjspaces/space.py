"""Spaces of letter assignments over an index model.

A space point assigns one letter to every element of the model, drawn
from a per-symbol alphabet.  Lines vary uniformly (one letter per
symbol) on the closure of a support point set and are frozen elsewhere;
subspaces generalize this to m disjoint coordinate blocks collapsed
onto an m-dimensional model.

Space points are flat letter tuples in the model's canonical element
order; that order is part of the on-disk colouring format.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .model import (
    ID, MULTISET, SET, EngineError, IndexModel, Symbol, Vocabulary, extend_hom,
)

MASK64 = (1 << 64) - 1


def mix64(seed: int, index: int) -> int:
    """splitmix64-style mixing of (seed, index); fixed bit-exactly.

    z = (seed + (index+1) * 0x9E3779B97F4A7C15) mod 2^64, then
    z ^= z >> 30;  z = z * 0xBF58476D1CE4E5B9 mod 2^64;
    z ^= z >> 27;  z = z * 0x94D049BB133111EB mod 2^64;
    z ^= z >> 31.
    Seeded colourings are this value reduced mod the colour count, so
    results reproduce across implementations.
    """
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


@dataclass(frozen=True)
class Alphabets:
    """Nonempty finite alphabet per symbol; letters are 0..size-1."""

    vocab: Vocabulary
    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.sizes) != len(self.vocab.symbols):
            raise EngineError("need one alphabet per symbol")
        if any(n < 1 for n in self.sizes):
            raise EngineError("alphabets must be nonempty")

    @staticmethod
    def constant(vocab: Vocabulary, n: int) -> "Alphabets":
        return Alphabets(vocab, (n,) * len(vocab.symbols))

    @staticmethod
    def of(vocab: Vocabulary, by_name: dict) -> "Alphabets":
        return Alphabets(vocab, tuple(by_name[s.name] for s in vocab.symbols))

    @staticmethod
    def from_spec(vocab: Vocabulary, spec: str) -> "Alphabets":
        """Either a single integer (constant) or ``name=size`` pairs
        separated by commas, e.g. ``id=2,F2=3``."""
        spec = spec.strip()
        if spec.isdigit():
            return Alphabets.constant(vocab, int(spec))
        by_name = {}
        for part in spec.split(","):
            if "=" not in part:
                raise EngineError("bad alphabet spec %r" % (part,))
            name, _, size = part.partition("=")
            by_name[name.strip()] = int(size)
        missing = [s.name for s in vocab.symbols if s.name not in by_name]
        if missing:
            raise EngineError("alphabet spec misses symbols %r" % (missing,))
        return Alphabets.of(vocab, by_name)

    def size_of(self, name: str) -> int:
        return self.sizes[self.vocab.index_of(name)]


# A space point is a tuple of letters aligned with model.elements.
SpacePoint = tuple
# A type picks one letter per symbol (aligned with vocab.symbols).
LambdaType = tuple
Colour = object


@dataclass(frozen=True)
class Space:
    """All letter assignments on a model's elements."""

    model: IndexModel
    alphabets: Alphabets

    def __post_init__(self):
        if self.alphabets.vocab != self.model.vocab:
            raise EngineError("alphabets are for a different vocabulary")

    @property
    def vocab(self) -> Vocabulary:
        return self.model.vocab

    def letters(self, e) -> range:
        return range(self.alphabets.sizes[self.model.symbol_index(e)])

    @property
    def radices(self) -> tuple[int, ...]:
        return tuple(self.alphabets.sizes[self.model.symbol_index(e)]
                     for e in self.model.elements)

    @property
    def size(self) -> int:
        n = 1
        for r in self.radices:
            n *= r
        return n

    def points(self) -> Iterator[SpacePoint]:
        """Lexicographic enumeration (first element varies slowest)."""
        return itertools.product(*(range(r) for r in self.radices))

    def point_at(self, index: int) -> SpacePoint:
        digits = []
        for r in reversed(self.radices):
            digits.append(index % r)
            index //= r
        if index:
            raise EngineError("point index out of range")
        return tuple(reversed(digits))

    def index_of_point(self, point: SpacePoint) -> int:
        idx = 0
        for letter, r in zip(point, self.radices):
            if not 0 <= letter < r:
                raise EngineError("letter out of alphabet range")
            idx = idx * r + letter
        return idx

    def assignments(self, elems: Iterable) -> Iterator[dict]:
        """All letter assignments on a subset of elements, in canonical order."""
        elems = sorted(elems, key=self.model.index_of)
        for combo in itertools.product(*(self.letters(e) for e in elems)):
            yield dict(zip(elems, combo))

    def point_from(self, assignment: dict) -> SpacePoint:
        return tuple(assignment[e] for e in self.model.elements)

    def full_types(self) -> tuple[LambdaType, ...]:
        return tuple(itertools.product(*(range(n) for n in self.alphabets.sizes)))


def space_size(model: IndexModel, alphabets: Alphabets) -> int:
    return Space(model, alphabets).size


def min_support(model: IndexModel) -> int:
    """Smallest admissible line support: arity(tau) in set mode (so every
    symbol is realized inside the support), 1 in multiset mode."""
    return model.vocab.arity if model.mode == SET else 1


@dataclass(frozen=True)
class Line:
    """Combinatorial line: support points, frozen letters elsewhere, and
    the set of types it realizes (None means all types)."""

    supp_points: tuple[int, ...]
    fixed: tuple[int, ...]          # letters on the non-support elements, canonical order
    types: Optional[tuple[LambdaType, ...]] = None


def make_line(space: Space, supp_points: Iterable[int], fixed,
              types: Optional[Iterable[LambdaType]] = None) -> Line:
    """Validate and build a line.  ``fixed`` is a mapping element->letter
    or a letter tuple over the non-support elements in canonical order."""
    m = space.model
    supp = tuple(sorted(set(supp_points)))
    if not supp or not set(supp) <= set(m.points):
        raise EngineError("support must be a nonempty subset of the points")
    if len(supp) < min_support(m):
        raise EngineError("support needs at least %d points in %s mode"
                          % (min_support(m), m.mode))
    outside = [e for e in m.elements if e not in m.closure(supp)]
    if isinstance(fixed, dict):
        fixed_letters = tuple(fixed[e] for e in outside)
    else:
        fixed_letters = tuple(fixed)
    if len(fixed_letters) != len(outside):
        raise EngineError("fixed part must cover exactly the non-support elements")
    for e, letter in zip(outside, fixed_letters):
        if letter not in space.letters(e):
            raise EngineError("fixed letter out of range at %s" % m.element_name(e))
    tps = None if types is None else tuple(types)
    if tps is not None and not tps:
        raise EngineError("type set must be nonempty")
    return Line(supp, fixed_letters, tps)


def line_types(space: Space, line: Line) -> tuple[LambdaType, ...]:
    return line.types if line.types is not None else space.full_types()


def line_support(space: Space, line: Line) -> frozenset:
    return space.model.closure(line.supp_points)


def pt_line(space: Space, line: Line, p: LambdaType) -> SpacePoint:
    """The unique line point realizing a type: type letters on the support
    closure, the frozen letters elsewhere."""
    if p not in line_types(space, line):
        raise EngineError("type %r is not in the line's type set" % (p,))
    m = space.model
    supp = line_support(space, line)
    fixed_iter = iter(line.fixed)
    out = []
    for e in m.elements:
        if e in supp:
            out.append(p[m.symbol_index(e)])
        else:
            out.append(next(fixed_iter))
    return tuple(out)


def line_points(space: Space, line: Line) -> list[SpacePoint]:
    """Realized points in type order, without duplicates."""
    seen = set()
    out = []
    for p in line_types(space, line):
        pt = pt_line(space, line, p)
        if pt not in seen:
            seen.add(pt)
            out.append(pt)
    return out


def enumerate_lines(space: Space, types: Optional[tuple] = None) -> Iterator[Line]:
    """Every line exactly once: supports by (size, lex), then the frozen
    letters lexicographically over the non-support elements."""
    m = space.model
    lo = min_support(m)
    pts = list(m.points)
    for size in range(lo, len(pts) + 1):
        for supp in itertools.combinations(pts, size):
            outside = [e for e in m.elements if e not in m.closure(supp)]
            for fixed in itertools.product(*(space.letters(e) for e in outside)):
                yield Line(supp, fixed, types)


def count_lines(space: Space) -> int:
    m = space.model
    total = 0
    for size in range(min_support(m), m.dim + 1):
        for supp in itertools.combinations(m.points, size):
            n = 1
            for e in m.elements:
                if e not in m.closure(supp):
                    n *= len(space.letters(e))
            total += n
    return total


@dataclass(frozen=True)
class Subspace:
    """m disjoint coordinate blocks, frozen letters off their closure.

    ``coords`` maps block position to a point of the m-dimensional
    collapse model; the identity makes an order-preserving collapse.
    """

    blocks: tuple[tuple[int, ...], ...]
    fixed: tuple[int, ...]
    coords: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.blocks)

    def is_convex(self) -> bool:
        for (w1, c1), (w2, c2) in itertools.combinations(zip(self.blocks, self.coords), 2):
            if (max(w1) < min(w2)) != (c1 < c2):
                return False
        return True


def make_subspace(space: Space, blocks, fixed, coords=None) -> Subspace:
    m = space.model
    blocks = tuple(tuple(sorted(b)) for b in blocks)
    flat = [p for b in blocks for p in b]
    if any(not b for b in blocks):
        raise EngineError("blocks must be nonempty")
    if len(set(flat)) != len(flat):
        raise EngineError("blocks must be pairwise disjoint")
    if not set(flat) <= set(m.points):
        raise EngineError("blocks must consist of points")
    if coords is None:
        coords = tuple(range(1, len(blocks) + 1))
    else:
        coords = tuple(coords)
        if sorted(coords) != list(range(1, len(blocks) + 1)):
            raise EngineError("coords must be a bijection onto 1..m")
    if m.mode == SET and m.vocab.arity > 1 and any(len(b) > 1 for b in blocks):
        raise EngineError("set-mode collapse of a multi-point block is inadmissible; "
                          "use multiset mode")
    zone = m.closure(flat)
    outside = [e for e in m.elements if e not in zone]
    if isinstance(fixed, dict):
        fixed_letters = tuple(fixed[e] for e in outside)
    else:
        fixed_letters = tuple(fixed)
    if len(fixed_letters) != len(outside):
        raise EngineError("fixed part must cover exactly the off-block elements")
    return Subspace(blocks, fixed_letters, coords)


def collapse_model(space: Space, sub: Subspace) -> IndexModel:
    return IndexModel(space.vocab, sub.dim, space.model.mode)


def _collapse_map(space: Space, sub: Subspace, target: IndexModel) -> dict:
    m = space.model
    g0 = {}
    for block, coord in zip(sub.blocks, sub.coords):
        for p in block:
            g0[p] = coord
    zone = m.closure([p for b in sub.blocks for p in b])
    out = {}
    for e in zone:
        if isinstance(e, int):
            out[e] = g0[e]
            continue
        image = tuple(sorted(g0[a] for a in e[1]))
        if target.mode == SET and len(set(image)) != len(image):
            raise EngineError("set-mode collapse of %s repeats coordinates"
                              % m.element_name(e))
        sym = m.vocab.symbols[e[0]]
        out[e] = image[0] if sym.name == ID else (e[0], image)
    return out


def pt_subspace(space: Space, sub: Subspace, rho: SpacePoint) -> SpacePoint:
    """The subspace point patterned by a point of the collapse space."""
    m = space.model
    target = collapse_model(space, sub)
    if len(rho) != target.size:
        raise EngineError("pattern has wrong length for the collapse space")
    gmap = _collapse_map(space, sub, target)
    fixed_iter = iter(sub.fixed)
    out = []
    for e in m.elements:
        if e in gmap:
            out.append(rho[target.index_of(gmap[e])])
        else:
            out.append(next(fixed_iter))
    return tuple(out)


def subspace_points(space: Space, sub: Subspace) -> Iterator[SpacePoint]:
    target = collapse_model(space, sub)
    kspace = Space(target, Alphabets(target.vocab, space.alphabets.sizes))
    for rho in kspace.points():
        yield pt_subspace(space, sub, rho)


def subspace_point_set(space: Space, sub: Subspace) -> frozenset:
    return frozenset(subspace_points(space, sub))


def enumerate_subspaces(space: Space, m: int, convex: bool = True) -> Iterator[Subspace]:
    """All m-dimensional subspaces; convex ones keep blocks order-separated
    with the identity coordinate map.  In set mode with arity > 1 only
    singleton blocks are admissible."""
    model = space.model
    pts = list(model.points)
    singletons_only = model.mode == SET and model.vocab.arity > 1

    def nonempty_subsets(avail: tuple) -> Iterator[tuple]:
        for size in range(1, len(avail) + 1):
            if singletons_only and size > 1:
                return
            for combo in itertools.combinations(avail, size):
                yield combo

    def convex_seqs(avail: tuple, depth: int) -> Iterator[tuple]:
        if depth == 0:
            yield ()
            return
        for b in nonempty_subsets(avail):
            rest = tuple(p for p in avail if p > max(b))
            for tail in convex_seqs(rest, depth - 1):
                yield (b,) + tail

    def free_seqs(avail: tuple, depth: int) -> Iterator[tuple]:
        if depth == 0:
            yield ()
            return
        for b in nonempty_subsets(avail):
            rest = tuple(p for p in avail if p not in b)
            for tail in free_seqs(rest, depth - 1):
                yield (b,) + tail

    seqs = convex_seqs(tuple(pts), m) if convex else free_seqs(tuple(pts), m)
    for blocks in seqs:
        zone = model.closure([p for b in blocks for p in b])
        outside = [e for e in model.elements if e not in zone]
        for fixed in itertools.product(*(space.letters(e) for e in outside)):
            yield Subspace(blocks, fixed, tuple(range(1, m + 1)))


# ---------------------------------------------------------------------------
# Colourings

class Colouring:
    """Deterministic total colouring of a space.

    Three kinds: an explicit table (colour per point index), a seeded
    pseudo-random colouring (mix64(seed, index) mod c), or a pure
    callback.  Instances are callables on space points.
    """

    def __init__(self, space: Space, fn: Callable[[SpacePoint], Colour],
                 c: Optional[int], kind: str, detail: str = ""):
        self.space = space
        self._fn = fn
        self.c = c
        self.kind = kind
        self.detail = detail

    def __call__(self, point: SpacePoint) -> Colour:
        return self._fn(point)

    @staticmethod
    def table(space: Space, colours, c: Optional[int] = None) -> "Colouring":
        colours = list(colours)
        if len(colours) != space.size:
            raise EngineError("table has %d entries; space has %d points"
                              % (len(colours), space.size))
        if c is None:
            c = max(colours) + 1 if colours else 1
        return Colouring(space, lambda pt: colours[space.index_of_point(pt)],
                         c, "table")

    @staticmethod
    def seeded(space: Space, c: int, seed: int) -> "Colouring":
        if c < 1:
            raise EngineError("colour count must be >= 1")
        return Colouring(space, lambda pt: mix64(seed, space.index_of_point(pt)) % c,
                         c, "seeded", "seed=%d" % seed)

    @staticmethod
    def constant(space: Space, value: int = 0, c: int = 1) -> "Colouring":
        return Colouring(space, lambda pt: value, c, "constant")

    @staticmethod
    def from_callback(space: Space, fn: Callable[[SpacePoint], Colour],
                      c: Optional[int] = None) -> "Colouring":
        return Colouring(space, fn, c, "callback")

    def to_table(self) -> list:
        return [self(pt) for pt in self.space.points()]


def write_colouring(space: Space, d: Colouring, fh) -> None:
    """Format: header ``colouring c=<int> n=<space size>`` then one colour
    per line in canonical point order."""
    fh.write("colouring c=%d n=%d\n" % (d.c, space.size))
    for pt in space.points():
        fh.write("%d\n" % d(pt))


def read_colouring(space: Space, fh) -> Colouring:
    header = fh.readline().split()
    if len(header) != 3 or header[0] != "colouring":
        raise EngineError("line 1: expected 'colouring c=<int> n=<int>'")
    try:
        c = int(header[1].split("=")[1])
        n = int(header[2].split("=")[1])
    except (IndexError, ValueError):
        raise EngineError("line 1: malformed colouring header")
    if n != space.size:
        raise EngineError("colouring is for a space of size %d, not %d" % (n, space.size))
    colours = []
    for lineno in range(2, n + 2):
        ln = fh.readline().strip()
        if not ln.lstrip("-").isdigit():
            raise EngineError("line %d: expected a colour" % lineno)
        v = int(ln)
        if not 0 <= v < c:
            raise EngineError("line %d: colour %d out of range [0,%d)" % (lineno, v, c))
        colours.append(v)
    return Colouring.table(space, colours, c)


def repeated_core(model: IndexModel) -> list:
    """Elements whose base tuple repeats every one of its points (at least
    twice each).  Colourings that factor through these coordinates are
    base-invariant at every pivot."""
    out = []
    for e in model.elements:
        if isinstance(e, int):
            continue
        tup = model.base_tuple(e)
        if all(tup.count(a) >= 2 for a in set(tup)):
            out.append(e)
    return out


def base_invariant_colouring(space: Space, c: int, seed: int) -> Colouring:
    """Seeded colouring depending only on the repeated-core coordinates;
    (ell,1)-base-invariant for every ell by construction."""
    core = repeated_core(space.model)
    positions = [space.model.index_of(e) for e in core]
    radices = [space.radices[i] for i in positions]

    def fn(pt: SpacePoint):
        packed = 0
        for i, r in zip(positions, radices):
            packed = packed * r + pt[i]
        return mix64(seed, packed) % c

    return Colouring(space, fn, c, "base-invariant", "seed=%d" % seed)


def letter_invariant_colouring(space: Space, h_name: str, core_letters,
                               alpha_star: int, ell: int, c: int, seed: int) -> Colouring:
    """Seeded colouring that is (N, core_letters, H)-invariant for N = the
    whole model and (ell, alpha_star, H)-invariant, by construction: a
    coordinate is blanked out whenever some point of its base carries a
    triggering pinned letter on its pure H-element."""
    m = space.model
    core = frozenset(core_letters)
    h_idx = m.vocab.index_of(h_name)
    pure = {}
    for a in m.points:
        es = [e for e in m.elements if not isinstance(e, int)
              and e[0] == h_idx and m.base_set(e) == {a}]
        pure[a] = es[0] if es else None
    last = set(range(m.dim - ell + 1, m.dim + 1))

    def triggers(pt: SpacePoint, a: int) -> bool:
        e = pure[a]
        if e is None:
            return False
        letter = pt[m.index_of(e)]
        if letter in core:
            return True
        return a in last and letter == alpha_star

    def fn(pt: SpacePoint):
        packed = 0
        for i, e in enumerate(m.elements):
            blanked = any(triggers(pt, a) for a in m.base_set(e))
            packed = packed * (len(space.letters(e)) + 1)
            if not blanked:
                packed += pt[i] + 1
        return mix64(seed, packed) % c

    return Colouring(space, fn, c, "letter-invariant", "seed=%d" % seed)


def embed_set_colouring(space: Space, d: Callable[[SpacePoint], Colour]):
    """Lift a set-mode space colouring to the multiset-mode space over the
    same vocabulary and dimension (pullback along element restriction).
    Returns the multiset space and the lifted colouring."""
    m = space.model
    if m.mode != SET:
        raise EngineError("embedding starts from a set-mode space")
    big = IndexModel(m.vocab, m.dim, MULTISET)
    big_space = Space(big, Alphabets(big.vocab, space.alphabets.sizes))
    keep = [big.index_of(e) for e in m.elements]

    def lifted(pt: SpacePoint) -> Colour:
        return d(tuple(pt[i] for i in keep))

    return big_space, lifted


# ---------------------------------------------------------------------------
# Invariance predicates

def _grouped_constant(space: Space, d, key_positions, candidates) -> tuple[bool, Optional[tuple]]:
    buckets: dict = {}
    for pt in candidates:
        key = tuple(pt[i] for i in key_positions)
        col = d(pt)
        if key in buckets:
            first_pt, first_col = buckets[key]
            if col != first_col:
                return False, (first_pt, pt)
        else:
            buckets[key] = (pt, col)
    return True, None


def check_alpha_invariant(space: Space, d, n_points: Iterable[int],
                          alpha: int, h_name: str) -> tuple[bool, Optional[tuple]]:
    """Is the colouring insensitive, for each pivot in ``n_points``, to
    all coordinates touching the pivot once its pure H-elements carry the
    pinned letter?  Returns (holds, witness pair or None)."""
    m = space.model
    h_idx = m.vocab.index_of(h_name)
    if alpha not in range(space.alphabets.sizes[h_idx]):
        raise EngineError("letter %d is not in the alphabet of %s" % (alpha, h_name))
    for a in sorted(set(n_points)):
        stable = m.closure(set(m.points) - {a})
        pinned = [e for e in m.elements if m.base_set(e) == {a}
                  and m.symbol_index(e) == h_idx]
        pinned_pos = [m.index_of(e) for e in pinned]
        key_positions = [m.index_of(e) for e in stable]
        candidates = (pt for pt in space.points()
                      if all(pt[i] == alpha for i in pinned_pos))
        ok, witness = _grouped_constant(space, d, sorted(key_positions), candidates)
        if not ok:
            return False, witness
    return True, None


def check_base_invariant(space: Space, d, ell: int, r: int) -> tuple[bool, Optional[tuple]]:
    """Base invariance at the last ``ell`` points: agreement off the pivot
    and on every element where the pivot appears at most r times must
    force equal colours."""
    m = space.model
    if not 0 <= ell <= m.dim:
        raise EngineError("ell must lie in 0..dim")
    if r < 1:
        raise EngineError("r must be >= 1")
    for a in range(m.dim - ell + 1, m.dim + 1):
        key_positions = [m.index_of(e) for e in m.elements
                         if m.multiplicity(e, a) <= r]
        ok, witness = _grouped_constant(space, d, key_positions, space.points())
        if not ok:
            return False, witness
    return True, None

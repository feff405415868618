"""Index models: vocabularies, elements, closure and homomorphisms.

An index model of dimension k over a vocabulary of symmetric function
symbols has the points 1..k as its ordered base, plus one element per
admissible (symbol, point-tuple) pair.  The distinguished unary symbol
``id`` acts as the identity, so its elements coincide with the points.
Two tuple disciplines are supported:

* ``set`` mode: symbols of arity r apply to strictly increasing
  r-tuples only (elements correspond to r-subsets of the points);
* ``multiset`` mode: all nondecreasing r-tuples are admissible, so
  repeated arguments name genuine elements.

Everything here is immutable after construction and safe to share
across workers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Iterator, Union

SET = "set"
MULTISET = "multiset"
MODES = (SET, MULTISET)

ID = "id"

# A point is a plain int (1..k); every other element is (symbol_index, base_tuple).
Element = Union[int, tuple]


class EngineError(Exception):
    """Base error for invalid engine inputs."""


class HomomorphismError(EngineError):
    """A point map does not extend to the target model.

    Carries the offending source element so callers can report which
    collapse failed (set-mode targets reject repeated base tuples).
    """

    def __init__(self, element, message):
        super().__init__(message)
        self.element = element


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int


@dataclass(frozen=True)
class Vocabulary:
    """Finite list of symmetric function symbols; must contain unary ``id``."""

    symbols: tuple[Symbol, ...]

    def __post_init__(self):
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise EngineError("duplicate symbol names: %r" % (names,))
        for s in self.symbols:
            if s.arity < 1:
                raise EngineError("symbol %s has arity %d; arities must be >= 1" % (s.name, s.arity))
            if not s.name or any(ch.isspace() for ch in s.name):
                raise EngineError("bad symbol name %r" % (s.name,))
        if ID not in names:
            raise EngineError("vocabulary must contain the unary symbol 'id'")
        if self.symbols[self.index_of(ID)].arity != 1:
            raise EngineError("'id' must be unary")

    @staticmethod
    def of(*pairs) -> "Vocabulary":
        return Vocabulary(tuple(Symbol(n, a) for n, a in pairs))

    @staticmethod
    def canonical(t: int) -> "Vocabulary":
        """One symbol per arity 1..t, with the unary one being ``id``."""
        if t < 1:
            raise EngineError("canonical vocabulary needs t >= 1")
        syms = [Symbol(ID, 1)] + [Symbol("F%d" % s, s) for s in range(2, t + 1)]
        return Vocabulary(tuple(syms))

    @staticmethod
    def unary() -> "Vocabulary":
        return Vocabulary.of((ID, 1))

    def index_of(self, name: str) -> int:
        for i, s in enumerate(self.symbols):
            if s.name == name:
                return i
        raise EngineError("no symbol %r" % (name,))

    @property
    def id_index(self) -> int:
        return self.index_of(ID)

    @property
    def arity(self) -> int:
        return max(s.arity for s in self.symbols)

    def signature(self) -> dict[int, int]:
        """Count of symbols per arity."""
        sig: dict[int, int] = {}
        for s in self.symbols:
            sig[s.arity] = sig.get(s.arity, 0) + 1
        return sig

    def monic(self) -> bool:
        """Exactly one symbol attains the maximal arity."""
        top = self.arity
        return sum(1 for s in self.symbols if s.arity == top) == 1

    def max_symbol(self) -> Symbol:
        top = self.arity
        for s in self.symbols:
            if s.arity == top:
                return s
        raise AssertionError

    def without(self, name: str) -> "Vocabulary":
        return Vocabulary(tuple(s for s in self.symbols if s.name != name))

    def to_text(self) -> str:
        return "\n".join("%s %d" % (s.name, s.arity) for s in self.symbols)

    @staticmethod
    def from_text(text: str) -> "Vocabulary":
        """Parse the one-symbol-per-line format ``name arity``.

        The line ``id 1`` is implicit.  The shorthand ``canonical t``
        expands to the canonical vocabulary with arities 1..t.
        """
        pairs: list[tuple[str, int]] = []
        lines = [ln.strip() for ln in text.replace(";", "\n").splitlines()]
        for lineno, ln in enumerate(lines, 1):
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split()
            if parts[0] == "canonical":
                if len(parts) != 2 or not parts[1].isdigit():
                    raise EngineError("line %d: expected 'canonical t'" % lineno)
                return Vocabulary.canonical(int(parts[1]))
            if len(parts) != 2 or not parts[1].isdigit():
                raise EngineError("line %d: expected 'name arity', got %r" % (lineno, ln))
            pairs.append((parts[0], int(parts[1])))
        if ID not in [p[0] for p in pairs]:
            pairs.insert(0, (ID, 1))
        return Vocabulary.of(*pairs)


def admissible_tuples(k: int, arity: int, mode: str) -> Iterator[tuple]:
    """Canonical base tuples over points 1..k for one symbol."""
    points = range(1, k + 1)
    if mode == SET:
        return itertools.combinations(points, arity)
    if mode == MULTISET:
        return itertools.combinations_with_replacement(points, arity)
    raise EngineError("unknown mode %r" % (mode,))


def tuple_count(k: int, arity: int, mode: str) -> int:
    if mode == SET:
        return comb(k, arity)
    if mode == MULTISET:
        return comb(k + arity - 1, arity)
    raise EngineError("unknown mode %r" % (mode,))


def closure_size(vocab: Vocabulary, x: int, mode: str = SET) -> int:
    """Size of the closure of any x-point subset; depends only on the signature."""
    if x < 0:
        raise EngineError("x must be >= 0")
    total = x
    for s in vocab.symbols:
        if s.name == ID:
            continue
        total += tuple_count(x, s.arity, mode)
    return total


@dataclass(frozen=True)
class IndexModel:
    """Freely generated index model of a given dimension.

    Elements are the points 1..dim plus every admissible (symbol,
    base-tuple) pair; distinct pairs are distinct elements.  Dimension 0
    is allowed (empty model; the associated space has a single point).
    """

    vocab: Vocabulary
    dim: int
    mode: str = SET
    _elements: tuple = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 0:
            raise EngineError("dimension must be >= 0")
        if self.mode not in MODES:
            raise EngineError("unknown mode %r" % (self.mode,))
        elems: list[Element] = list(range(1, self.dim + 1))
        for i, s in enumerate(self.vocab.symbols):
            if s.name == ID:
                continue
            for tup in admissible_tuples(self.dim, s.arity, self.mode):
                elems.append((i, tup))
        object.__setattr__(self, "_elements", tuple(elems))
        object.__setattr__(self, "_index", {e: j for j, e in enumerate(elems)})

    @property
    def points(self) -> range:
        return range(1, self.dim + 1)

    @property
    def elements(self) -> tuple:
        """All elements in canonical order: points ascending, then
        non-points by (symbol index, base tuple)."""
        return self._elements

    @property
    def size(self) -> int:
        return len(self._elements)

    def index_of(self, e: Element) -> int:
        return self._index[e]

    def __contains__(self, e: Element) -> bool:
        return e in self._index

    def symbol_index(self, e: Element) -> int:
        return self.vocab.id_index if isinstance(e, int) else e[0]

    def symbol_of(self, e: Element) -> Symbol:
        return self.vocab.symbols[self.symbol_index(e)]

    def base_tuple(self, e: Element) -> tuple:
        return (e,) if isinstance(e, int) else e[1]

    def base_set(self, e: Element) -> frozenset:
        return frozenset(self.base_tuple(e))

    def base_at(self, e: Element, i: int) -> int:
        """i-th entry (1-based) of the canonical base tuple."""
        return self.base_tuple(e)[i - 1]

    def multiplicity(self, e: Element, a: int) -> int:
        return self.base_tuple(e).count(a)

    def element(self, symbol_name: str, tup: Iterable[int]) -> Element:
        """Element named by a symbol applied to a point tuple (any order)."""
        tup = tuple(sorted(tup))
        s = self.vocab.index_of(symbol_name)
        if symbol_name == ID:
            if len(tup) != 1:
                raise EngineError("id takes one argument")
            e: Element = tup[0]
        else:
            e = (s, tup)
        if e not in self._index:
            raise EngineError("no element %s%r in this model" % (symbol_name, tup))
        return e

    def element_name(self, e: Element) -> str:
        if isinstance(e, int):
            return str(e)
        s = self.vocab.symbols[e[0]]
        return "%s(%s)" % (s.name, ",".join(str(a) for a in e[1]))

    def closure(self, points: Iterable[int]) -> frozenset:
        """Closure of a point set: the points plus every element whose base
        lies inside it.  A closure operator (idempotent, monotone)."""
        aset = frozenset(points)
        if not aset <= set(self.points):
            raise EngineError("closure argument must be a subset of the points")
        out = set(aset)
        for e in self._elements:
            if not isinstance(e, int) and self.base_set(e) <= aset:
                out.add(e)
        return frozenset(out)

    def closed(self, elems: Iterable[Element]) -> bool:
        eset = frozenset(elems)
        pts = {e for e in eset if isinstance(e, int)}
        return eset == self.closure(pts)


def extend_hom(f: dict, source: IndexModel, target: IndexModel,
               order_preserving: bool = True) -> dict:
    """The unique element map extending a point map.

    ``f`` maps every point of ``source`` to a point of ``target``; the
    extension sends a (symbol, tuple) element to the symbol applied to
    the image tuple (re-sorted, by symmetry).  With ``order_preserving``
    the map must be strictly monotone.  Collapsing maps into a set-mode
    target fail on the first element whose image tuple repeats.
    """
    if source.vocab != target.vocab:
        raise EngineError("extend_hom needs identical vocabularies")
    for p in source.points:
        if p not in f:
            raise EngineError("point map not total: missing %d" % p)
        if f[p] not in target._index or not isinstance(f[p], int):
            raise EngineError("point map leaves the target points at %d" % p)
    if order_preserving:
        for p, q in itertools.combinations(source.points, 2):
            if not f[p] < f[q]:
                raise EngineError("point map is not order preserving at (%d,%d)" % (p, q))
    out: dict = {}
    for e in source.elements:
        if isinstance(e, int):
            out[e] = f[e]
            continue
        image = tuple(sorted(f[a] for a in e[1]))
        sym = source.vocab.symbols[e[0]]
        if target.mode == SET and len(set(image)) != len(image):
            raise HomomorphismError(
                e, "image tuple of %s repeats %r; collapsing maps need a multiset-mode target"
                % (source.element_name(e), image))
        if sym.name == ID:
            out[e] = image[0]
        else:
            out[e] = (e[0], image)
        if out[e] not in target._index:
            raise HomomorphismError(e, "image of %s falls outside the target model"
                                    % source.element_name(e))
    return out


@dataclass(frozen=True)
class Piece:
    """A partially applied symbol in a derived vocabulary.

    ``prefix`` is a tuple over the low parameter block, ``suffix`` over
    the high one; the remaining arity is the base arity minus both
    lengths.  The empty piece is identified with the base symbol.
    """

    base: str
    prefix: tuple
    suffix: tuple


@dataclass(frozen=True)
class DerivedVocabulary:
    """Vocabulary of partially applied symbols over two parameter blocks."""

    base: Vocabulary
    k0: int
    k1: int
    mode: str
    vocabulary: Vocabulary
    pieces: tuple[Piece, ...]  # aligned with vocabulary.symbols

    def piece_of(self, name: str) -> Piece:
        return self.pieces[self.vocabulary.index_of(name)]


def piece_name(base: str, prefix: tuple, suffix: tuple) -> str:
    if not prefix and not suffix:
        return base
    return "%s[%s;%s]" % (base, ",".join(map(str, prefix)), ",".join(map(str, suffix)))


def derive_vocabulary(vocab: Vocabulary, k0: int, k1: int, mode: str = SET) -> DerivedVocabulary:
    """All partial applications of the symbols to parameter tuples.

    Parameters come from two point blocks: the first ``k0`` points
    (labelled 1..k0) and the last ``k1`` points (labelled k0+1..k0+k1)
    of a dimension-(k0+k1) model.  A symbol of arity r yields one piece
    per pair of admissible parameter tuples whose lengths sum to < r;
    empty parameters reproduce the symbol itself, so the result extends
    the base vocabulary.
    """
    if k0 < 0 or k1 < 0:
        raise EngineError("parameter block sizes must be >= 0")
    if mode not in MODES:
        raise EngineError("unknown mode %r" % (mode,))
    low = list(range(1, k0 + 1))
    high = list(range(k0 + 1, k0 + k1 + 1))

    def tuples(block, length):
        if mode == SET:
            return itertools.combinations(block, length)
        return itertools.combinations_with_replacement(block, length)

    symbols: list[Symbol] = []
    pieces: list[Piece] = []
    for s in vocab.symbols:
        symbols.append(s)
        pieces.append(Piece(s.name, (), ()))
    for i, s in enumerate(vocab.symbols):
        proper = []
        for taken in range(1, s.arity):
            for n1 in range(taken + 1):
                n2 = taken - n1
                for pre in tuples(low, n1):
                    for suf in tuples(high, n2):
                        proper.append(Piece(s.name, pre, suf))
        proper.sort(key=lambda p: (len(p.prefix) + len(p.suffix), p.prefix, p.suffix))
        for p in proper:
            symbols.append(Symbol(piece_name(p.base, p.prefix, p.suffix),
                                  s.arity - len(p.prefix) - len(p.suffix)))
            pieces.append(p)
    return DerivedVocabulary(vocab, k0, k1, mode, Vocabulary(tuple(symbols)), tuple(pieces))

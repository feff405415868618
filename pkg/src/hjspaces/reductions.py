"""Constructive reductions with verified lifts of monochromatic lines.

Three reductions are implemented, each shrinking the search problem and
carrying monochromatic lines back to the original space:

* arity reduction: every symbol of arity > 1 is replaced by one symbol
  per convex merge pattern of its argument slots (all merged groups of
  size >= 2); colourings that are base-invariant at every pivot factor
  through the repeated-core coordinates, and lines lift exactly;
* the collapse step: a middle block of points is merged into a single
  pivot point, the outer closure becomes a context that multiplies the
  colour count, and a line found in the collapsed space induces an
  embedded full-dimension subspace whose pull-back colouring is
  base-invariant one level deeper;
* unary fixing: all non-unary coordinates are frozen to a chosen type,
  embedding the unary reduct's space.

The collapse step requires multiset mode (the merge creates repeated
arguments); set-mode colourings can first be pulled back with
``space.embed_set_colouring``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .model import (
    ID, MULTISET, EngineError, IndexModel, Symbol, Vocabulary,
    derive_vocabulary, extend_hom,
)
from .search import find_mono_line
from .space import (
    Alphabets, Line, Space, Subspace, line_types, make_line, make_subspace,
    pt_line,
)


def compositions_min2(total: int):
    """Ordered splits of ``total`` into parts >= 2 (convex merge patterns)."""
    if total == 0:
        yield ()
        return
    for first in range(2, total + 1):
        if total - first == 1:
            continue
        for rest in compositions_min2(total - first):
            yield (first,) + rest


def merge_symbol_name(base: str, parts: tuple) -> str:
    return "%s/%s" % (base, "+".join(map(str, parts)))


@dataclass(frozen=True)
class ArityReduction:
    """Source and target vocabularies of the arity-halving step, plus the
    partial element map between the spaces."""

    source: Alphabets
    target: Alphabets
    merges: tuple                       # (base symbol name, parts) per target symbol
    identified_base: str                # source symbol whose full merge became id

    @property
    def source_vocab(self) -> Vocabulary:
        return self.source.vocab

    @property
    def target_vocab(self) -> Vocabulary:
        return self.target.vocab

    def reduced_model(self, dim: int) -> IndexModel:
        return IndexModel(self.target_vocab, dim, MULTISET)

    def type_for(self, p: tuple) -> tuple:
        """Target type induced by a source type (same letter per merge)."""
        out = []
        for base, _parts in self.merges:
            out.append(p[self.source_vocab.index_of(base)])
        return tuple(out)

    def g_map(self, model: IndexModel) -> dict:
        """Partial element map: defined exactly on the elements whose base
        tuple repeats every point at least twice; such an element maps to
        the merge symbol of its repetition pattern applied to the distinct
        points."""
        if model.vocab != self.source_vocab:
            raise EngineError("model is over a different vocabulary")
        if model.mode != MULTISET:
            raise EngineError("arity reduction works on multiset-mode models")
        star = self.reduced_model(model.dim)
        name_by_merge = {m: s.name for m, s in zip(self.merges, self.target_vocab.symbols)}
        out = {}
        for e in model.elements:
            if isinstance(e, int):
                continue
            tup = model.base_tuple(e)
            values = sorted(set(tup))
            counts = tuple(tup.count(v) for v in values)
            if any(cnt < 2 for cnt in counts):
                continue
            base = model.symbol_of(e).name
            tname = name_by_merge[(base, counts)]
            out[e] = star.element(tname, values)
        return out

    def reduce_colouring(self, space: Space, d) -> tuple[Space, Callable]:
        """Induced colouring on the reduced space: pull a reduced point back
        through the canonical completion (letter 0 off the map's domain).
        Well-defined as a reduction whenever d is base-invariant at every
        pivot (check with check_base_invariant(..., ell=dim, r=1))."""
        model = space.model
        gmap = self.g_map(model)
        star_model = self.reduced_model(model.dim)
        star_space = Space(star_model, self.target)

        def d_star(nu: tuple):
            letters = []
            for e in model.elements:
                if e in gmap:
                    letters.append(nu[star_model.index_of(gmap[e])])
                else:
                    letters.append(0)
            return d(tuple(letters))

        return star_space, d_star


def arity_reduce(alphabets: Alphabets, c: Optional[int] = None) -> ArityReduction:
    """Build the merge vocabulary: one symbol per (source symbol of arity
    > 1, convex repetition pattern with groups >= 2); the full merge of
    the first maximal-arity symbol is identified with ``id``.  Alphabets
    carry over from the base symbols.  ``c`` is accepted for interface
    symmetry with the bound recursions and is not used here."""
    vocab = alphabets.vocab
    if vocab.arity <= 1:
        raise EngineError("arity reduction needs a symbol of arity > 1")
    top = vocab.max_symbol()
    merges = [((top.name, (top.arity,)), Symbol(ID, 1))]
    for s in vocab.symbols:
        if s.arity <= 1:
            continue
        for parts in compositions_min2(s.arity):
            if s.name == top.name and parts == (top.arity,):
                continue
            merges.append(((s.name, parts), Symbol(merge_symbol_name(s.name, parts), len(parts))))
    target_vocab = Vocabulary(tuple(sym for _, sym in merges))
    sizes = tuple(alphabets.size_of(m[0]) for m, _ in merges)
    return ArityReduction(alphabets, Alphabets(target_vocab, sizes),
                          tuple(m for m, _ in merges), top.name)


def lift_reduced_line(space: Space, reduction: ArityReduction, line_star: Line) -> Line:
    """Line of the original space induced by a full-type line of the
    reduced space: same support points, and the frozen part reads the
    reduced line's frozen letters through the element map (letter 0 off
    its domain).  For base-invariant colourings each original line point
    gets the colour of the corresponding reduced point."""
    model = space.model
    gmap = reduction.g_map(model)
    star_model = reduction.reduced_model(model.dim)
    star_space = Space(star_model, reduction.target)
    supp = tuple(sorted(line_star.supp_points))
    star_outside = [e for e in star_model.elements if e not in star_model.closure(supp)]
    star_fixed = dict(zip(star_outside, line_star.fixed))
    fixed = {}
    for e in model.elements:
        if e in model.closure(supp):
            continue
        if e in gmap:
            fixed[e] = star_fixed[gmap[e]]
        else:
            fixed[e] = 0
    return make_line(space, supp, fixed)


# ---------------------------------------------------------------------------
# Collapse step

@dataclass
class CollapseStep:
    """Everything the collapse produces: the collapsed model and its
    induced colouring, the inner line, the embedding of the full
    k0-dimensional block space, and the double-lift."""

    space: Space
    d: Callable
    ell: int
    k0: int
    k1: int
    lo: tuple
    mid: tuple
    hi: tuple
    excluded: Optional[tuple]           # (H name, alpha*) or None
    tau_star: Vocabulary
    alph_star: Alphabets
    n_model: IndexModel
    n_space: Space
    d_star: Callable
    context_size: int                   # |Space(K)|; the colour count gets raised to it
    found: bool = False
    line_star: Optional[Line] = None
    k_plus: Optional[IndexModel] = None
    h: Optional[Callable] = None
    d_circ: Optional[Callable] = None
    embedded: Optional[Subspace] = None
    _lift: Optional[Callable] = None

    def lift(self, line_circ: Line) -> Line:
        if self._lift is None:
            raise EngineError("collapse step found no inner line; nothing to lift")
        return self._lift(line_circ)


def collapse_step(space: Space, d, ell: int, k0: int,
                  excluded: Optional[tuple] = None,
                  budget: Optional[int] = None, jobs: int = 1) -> CollapseStep:
    """Merge the middle point block onto one pivot.

    The model splits into lo (first k0-ell-1 points), mid (next
    k1 = dim-k0+1 points) and hi (last ell points).  The collapsed model
    N lives on mid over the vocabulary of partial applications with
    parameters in lo/hi; its induced colouring d* maps a point to the
    function "context assignment on cl(lo+hi) -> original colour".  An
    inner line is searched for (agreement within full-type groups
    sharing the letters on symbols of arity > 1; with ``excluded`` the
    line must be plainly monochromatic and the excluded symbol's pure
    mid elements are frozen to alpha*).  From it, the k0-dimensional
    block space embeds into the original space via ``h``, and a
    monochromatic line of the embedded space lifts to one of the
    original space.
    """
    model = space.model
    vocab = model.vocab
    if model.mode != MULTISET:
        raise EngineError("the collapse step needs a multiset-mode model "
                          "(see space.embed_set_colouring)")
    k = model.dim
    k1 = k - k0 + 1
    if k1 < 1:
        raise EngineError("dimension %d is too small for k0=%d" % (k, k0))
    if not 0 <= ell < k0:
        raise EngineError("need 0 <= ell < k0")
    if excluded is not None:
        h_name, alpha_star = excluded
        if not vocab.monic() or vocab.max_symbol().name != h_name:
            raise EngineError("the excluded symbol must be the unique maximal-arity symbol")
        if alpha_star not in range(space.alphabets.size_of(h_name)):
            raise EngineError("alpha* is outside the excluded symbol's alphabet")

    lo = tuple(range(1, k0 - ell))
    mid = tuple(range(k0 - ell, k0 - ell + k1))
    hi = tuple(range(k - ell + 1, k + 1))
    pivot = mid[0]

    derived = derive_vocabulary(vocab, len(lo), len(hi), MULTISET)
    keep = list(range(len(derived.vocabulary.symbols)))
    if excluded is not None:
        h_idx = derived.vocabulary.index_of(excluded[0])
        keep = [i for i in keep if i != h_idx]
    tau_star = Vocabulary(tuple(derived.vocabulary.symbols[i] for i in keep))
    pieces = [derived.pieces[i] for i in keep]
    alph_star = Alphabets(tau_star, tuple(
        space.alphabets.size_of(p.base) for p in pieces))

    n_model = IndexModel(tau_star, k1, MULTISET)
    n_space = Space(n_model, alph_star)

    def suffix_to_m(label: int) -> int:
        # derived suffix labels len(lo)+1..len(lo)+len(hi) name the hi points
        return (k - ell) + (label - len(lo))

    def mid_to_m(j: int) -> int:
        return mid[j - 1]

    n2m = {}
    for e in n_model.elements:
        if isinstance(e, int):
            n2m[e] = mid_to_m(e)
            continue
        piece = pieces[e[0]]
        base_idx = vocab.index_of(piece.base)
        full = tuple(sorted(piece.prefix
                            + tuple(mid_to_m(j) for j in e[1])
                            + tuple(suffix_to_m(s) for s in piece.suffix)))
        if piece.base == ID:
            n2m[e] = full[0]
        else:
            n2m[e] = (base_idx, full)
    m2n = {v: k_ for k_, v in n2m.items()}

    k_elems = sorted(model.closure(lo + hi), key=model.index_of)
    a_star = []
    if excluded is not None:
        h_src = vocab.index_of(excluded[0])
        a_star = [e for e in model.elements if not isinstance(e, int)
                  and e[0] == h_src and model.base_set(e) <= set(mid)]
    a_star_set = frozenset(a_star)

    context = list(space.assignments(k_elems))
    context_size = len(context)

    def combine(nu_star: tuple, kappa: dict) -> tuple:
        letters = []
        for e in model.elements:
            if e in kappa:
                letters.append(kappa[e])
            elif e in a_star_set:
                letters.append(excluded[1])
            else:
                letters.append(nu_star[n_model.index_of(m2n[e])])
        return tuple(letters)

    def d_star(nu_star: tuple):
        return tuple(d(combine(nu_star, kappa)) for kappa in context)

    step = CollapseStep(space, d, ell, k0, k1, lo, mid, hi, excluded,
                        tau_star, alph_star, n_model, n_space, d_star,
                        context_size)

    pairs = None if excluded is not None else "high-arity"
    res = find_mono_line(n_space, d_star, pairs=pairs, budget=budget, jobs=jobs)
    if not res.found:
        return step
    line_star = res.line
    step.found = True
    step.line_star = line_star

    wstar_n = tuple(sorted(line_star.supp_points))
    wstar_m = tuple(mid_to_m(j) for j in wstar_n)
    supp_star = n_model.closure(wstar_n)
    star_outside = [e for e in n_model.elements if e not in supp_star]
    star_fixed = dict(zip(star_outside, line_star.fixed))

    k_plus = IndexModel(vocab, k0, MULTISET)
    emb_points = {j: p for j, p in enumerate(sorted(lo + (pivot,) + hi), start=1)}
    emb = extend_hom(emb_points, k_plus, model)
    emb_inv = {v: k_ for k_, v in emb.items()}
    g_points = {}
    for p in model.points:
        if p in lo:
            g_points[p] = emb_inv[p]
        elif p in mid:
            g_points[p] = emb_inv[pivot]
        else:
            g_points[p] = emb_inv[p]
    ghat = extend_hom(g_points, model, k_plus, order_preserving=False)

    def h(rho: tuple) -> tuple:
        letters = []
        for e in model.elements:
            if e in emb_inv and model.base_set(e) <= set(lo) | set(hi):
                letters.append(rho[k_plus.index_of(emb_inv[e])])
            elif e in a_star_set:
                if model.base_set(e) <= set(wstar_m):
                    letters.append(rho[k_plus.index_of(ghat[e])])
                else:
                    letters.append(excluded[1])
            else:
                ne = m2n[e]
                if ne in supp_star:
                    letters.append(rho[k_plus.index_of(ghat[e])])
                else:
                    letters.append(star_fixed[ne])
        return tuple(letters)

    def d_circ(rho: tuple):
        return d(h(rho))

    k_space = Space(k_plus, Alphabets(vocab, space.alphabets.sizes))
    probe = h(next(k_space.points()))
    blocks = [(p,) for p in lo] + [wstar_m] + [(p,) for p in hi]
    zone = model.closure(lo + wstar_m + hi)
    sub_fixed = {e: probe[model.index_of(e)] for e in model.elements if e not in zone}
    embedded = make_subspace(space, blocks, sub_fixed)

    def lift(line_circ: Line) -> Line:
        supp_v = []
        for j in line_circ.supp_points:
            p = emb[j]
            if p == pivot:
                supp_v.extend(wstar_m)
            else:
                supp_v.append(p)
        supp_v = tuple(sorted(supp_v))
        rho0 = pt_line(k_space, line_circ, line_types(k_space, line_circ)[0])
        nu0 = h(rho0)
        fixed = {e: nu0[model.index_of(e)] for e in model.elements
                 if e not in model.closure(supp_v)}
        return make_line(space, supp_v, fixed)

    step.k_plus = k_plus
    step.h = h
    step.d_circ = d_circ
    step.embedded = embedded
    step._lift = lift
    return step


# ---------------------------------------------------------------------------
# Unary fixing

@dataclass
class UnaryFixing:
    """Embedding of the unary reduct's space by freezing every non-unary
    coordinate to the letters of a chosen type."""

    space: Space
    p_star: tuple
    reduct_model: IndexModel
    reduct_space: Space
    _to_m: dict

    def h(self, nu: tuple) -> tuple:
        m = self.space.model
        letters = []
        for e in m.elements:
            if m.symbol_of(e).arity == 1:
                letters.append(nu[self.reduct_model.index_of(self._from_m(e))])
            else:
                letters.append(self.p_star[m.symbol_index(e)])
        return tuple(letters)

    def _from_m(self, e):
        if isinstance(e, int):
            return e
        name = self.space.model.symbol_of(e).name
        return (self.reduct_model.vocab.index_of(name), e[1])

    def reduce_colouring(self, d) -> Callable:
        return lambda nu: d(self.h(nu))

    def agreeing_types(self) -> tuple:
        """Full types that agree with p* on every symbol of arity > 1."""
        out = []
        for p in self.space.full_types():
            if all(p[i] == self.p_star[i]
                   for i, s in enumerate(self.space.vocab.symbols) if s.arity > 1):
                out.append(p)
        return tuple(out)

    def induced_line(self, tilde_line: Line) -> Line:
        """Line of the big space realizing exactly the types that agree
        with p* off the unary symbols; its points are the h-images of the
        reduct line's points."""
        m = self.space.model
        supp = tuple(sorted(tilde_line.supp_points))
        outside_r = [e for e in self.reduct_model.elements
                     if e not in self.reduct_model.closure(supp)]
        tilde_fixed = dict(zip(outside_r, tilde_line.fixed))
        fixed = {}
        for e in m.elements:
            if e in m.closure(supp):
                continue
            if m.symbol_of(e).arity == 1:
                fixed[e] = tilde_fixed[self._from_m(e)]
            else:
                fixed[e] = self.p_star[m.symbol_index(e)]
        return make_line(self.space, supp, fixed, self.agreeing_types())

    def induced_subspace(self, tilde_sub: Subspace) -> Subspace:
        """Subspace of the big space over the same blocks, frozen to the
        reduct subspace's letters on unary elements and to p* elsewhere
        outside the varying zone."""
        m = self.space.model
        blocks = tilde_sub.blocks
        zone_r = self.reduct_model.closure([p for b in blocks for p in b])
        outside_r = [e for e in self.reduct_model.elements if e not in zone_r]
        tilde_fixed = dict(zip(outside_r, tilde_sub.fixed))
        zone = m.closure([p for b in blocks for p in b])
        fixed = {}
        for e in m.elements:
            if e in zone:
                continue
            if m.symbol_of(e).arity == 1:
                fixed[e] = tilde_fixed[self._from_m(e)]
            else:
                fixed[e] = self.p_star[m.symbol_index(e)]
        return make_subspace(self.space, blocks, fixed, tilde_sub.coords)


def fix_unary_step(space: Space, p_star: tuple) -> UnaryFixing:
    """Restrict to the unary symbols and freeze everything else to the
    letters of ``p_star``.  When every symbol is unary this is the
    identity embedding."""
    vocab = space.vocab
    if len(p_star) != len(vocab.symbols):
        raise EngineError("p* must pick one letter per symbol")
    for letter, size in zip(p_star, space.alphabets.sizes):
        if not 0 <= letter < size:
            raise EngineError("p* letter out of range")
    unary = tuple(s for s in vocab.symbols if s.arity == 1)
    reduct_vocab = Vocabulary(unary)
    sizes = tuple(space.alphabets.size_of(s.name) for s in unary)
    reduct_model = IndexModel(reduct_vocab, space.model.dim, space.model.mode)
    reduct_space = Space(reduct_model, Alphabets(reduct_vocab, sizes))
    to_m = {}
    return UnaryFixing(space, tuple(p_star), reduct_model, reduct_space, to_m)

"""Exact sparse trilinear forms and the Coppersmith-Winograd tensor family.

A trilinear form is stored as a finite map (x, y, z) -> rational coefficient,
where x, y, z are index tuples of equal length d (the power of the form) with
entries in {0, ..., q+1}.  All arithmetic is exact over the rationals; the
decomposition identities checked here are coefficient identities over Z, so
no approximation layer is needed.

The module provides

* construction of F_q and of tensor products / powers,
* the block decomposition of a power by index type,
* the level-4 and level-8 block components T_ijk,
* a structural recognizer mapping a form to <m,n,p> when it is isomorphic
  (by independent relabeling of the x, y, z variables) to a matrix product,
* the four-way split of the level-4 component T_211.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Optional

IndexTuple = tuple[int, ...]
MonomialKey = tuple[IndexTuple, IndexTuple, IndexTuple]

#: Hard cap on monomial counts produced by tensor products/powers.
DEFAULT_MONOMIAL_BUDGET = 10**7


class BudgetExceededError(Exception):
    """A symbolic operation would exceed the configured monomial budget."""


class MatMulShape(NamedTuple):
    """The matrix-product tensor <m,n,p> (an m x n by n x p product)."""

    m: int
    n: int
    p: int


def index_type(entry: int, q: int) -> int:
    """Classify a variable index: 0 -> 0, 1..q -> 1, q+1 -> 2."""
    if not 0 <= entry <= q + 1:
        raise ValueError(f"index {entry} out of range 0..{q + 1}")
    if entry == 0:
        return 0
    if entry == q + 1:
        return 2
    return 1


def tuple_type(indices: IndexTuple, q: int) -> int:
    """Sum of per-entry types along an index tuple."""
    return sum(index_type(e, q) for e in indices)


class TrilinearForm:
    """Immutable sparse trilinear form with exact rational coefficients.

    Monomials are keyed by the triple of index tuples; no duplicate keys and
    no zero coefficients are stored.  Instances compare equal iff they have
    the same q, power and coefficient map.
    """

    __slots__ = ("q", "power", "_monomials")

    def __init__(self, q: int, power: int,
                 monomials: Mapping[MonomialKey, Fraction] | Iterable[tuple[MonomialKey, Fraction]]):
        if q < 1:
            raise ValueError("q must be a positive integer")
        if power < 1:
            raise ValueError("power must be a positive integer")
        items = monomials.items() if isinstance(monomials, Mapping) else monomials
        store: dict[MonomialKey, Fraction] = {}
        for (x, y, z), c in items:
            c = Fraction(c)
            if c == 0:
                continue
            if len(x) != power or len(y) != power or len(z) != power:
                raise ValueError(f"index tuples must have length {power}: {(x, y, z)}")
            for t in (x, y, z):
                for e in t:
                    if not 0 <= e <= q + 1:
                        raise ValueError(f"index {e} out of range for q={q}")
            if (x, y, z) in store:
                raise ValueError(f"duplicate monomial key {(x, y, z)}")
            store[x, y, z] = c
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "power", power)
        object.__setattr__(self, "_monomials", store)

    def __setattr__(self, name, value):
        raise AttributeError("TrilinearForm is immutable")

    @property
    def monomials(self) -> dict[MonomialKey, Fraction]:
        """Copy of the coefficient map."""
        return dict(self._monomials)

    def items(self):
        return self._monomials.items()

    def coeff(self, key: MonomialKey) -> Fraction:
        return self._monomials.get(key, Fraction(0))

    def __len__(self) -> int:
        return len(self._monomials)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TrilinearForm) and self.q == other.q
                and self.power == other.power and self._monomials == other._monomials)

    def __hash__(self):
        return hash((self.q, self.power, frozenset(self._monomials.items())))

    def __repr__(self) -> str:
        return f"TrilinearForm(q={self.q}, power={self.power}, monomials={len(self)})"

    def dump(self) -> str:
        """Canonical text dump, one monomial per line, lexicographic order."""
        lines = []
        for (x, y, z) in sorted(self._monomials):
            c = self._monomials[x, y, z]
            lines.append(f"{c} x={list(x)} y={list(y)} z={list(z)}")
        return "\n".join(lines)


def cw_tensor(q: int) -> TrilinearForm:
    """The Coppersmith-Winograd tensor F_q: 3q+3 monomials, power 1."""
    if q < 1:
        raise ValueError("q must be >= 1 (q = 0 is degenerate)")
    mono: dict[MonomialKey, Fraction] = {}
    one = Fraction(1)
    for i in range(1, q + 1):
        mono[(0,), (i,), (i,)] = one
        mono[(i,), (0,), (i,)] = one
        mono[(i,), (i,), (0,)] = one
    mono[(0,), (0,), (q + 1,)] = one
    mono[(0,), (q + 1,), (0,)] = one
    mono[(q + 1,), (0,), (0,)] = one
    return TrilinearForm(q, 1, mono)


def tensor_product(s: TrilinearForm, t: TrilinearForm,
                   budget: int = DEFAULT_MONOMIAL_BUDGET) -> TrilinearForm:
    """Tensor product: index tuples concatenate, coefficients multiply."""
    if s.q != t.q:
        raise ValueError(f"mismatched q: {s.q} != {t.q}")
    if len(s) * len(t) > budget:
        raise BudgetExceededError(
            f"product would have {len(s) * len(t)} monomials (budget {budget})")
    mono: dict[MonomialKey, Fraction] = {}
    for (x1, y1, z1), c1 in s.items():
        for (x2, y2, z2), c2 in t.items():
            mono[x1 + x2, y1 + y2, z1 + z2] = c1 * c2
    return TrilinearForm(s.q, s.power + t.power, mono)


def tensor_power(t: TrilinearForm, n: int,
                 budget: int = DEFAULT_MONOMIAL_BUDGET) -> TrilinearForm:
    """n-fold iterated tensor product of t with itself."""
    if n < 1:
        raise ValueError("power must be >= 1")
    if len(t) ** n > budget:
        raise BudgetExceededError(
            f"power would have {len(t) ** n} monomials (budget {budget})")
    out = t
    for _ in range(n - 1):
        out = tensor_product(out, t, budget=budget)
    return out


TypeTriple = tuple[int, int, int]


def block_decompose(t: TrilinearForm) -> dict[TypeTriple, TrilinearForm]:
    """Partition a form into blocks keyed by (type(x), type(y), type(z)).

    Every key (i,j,k) satisfies i+j+k = 2*power; the blocks partition the
    form exactly.
    """
    buckets: dict[TypeTriple, dict[MonomialKey, Fraction]] = {}
    q = t.q
    for (x, y, z), c in t.items():
        key = (tuple_type(x, q), tuple_type(y, q), tuple_type(z, q))
        buckets.setdefault(key, {})[x, y, z] = c
    return {key: TrilinearForm(q, t.power, mono) for key, mono in sorted(buckets.items())}


@functools.lru_cache(maxsize=4)
def pair_splits(level: int) -> dict[TypeTriple, list[tuple[TypeTriple, TypeTriple]]]:
    """For each (i,j,k) in S_{2*level//... } the list of S_4 x S_4 pair splits.

    Only used at level 8: S_ijk = {((u,v,w),(u',v',w')) in S_4^2 with
    componentwise sums (i,j,k)}.
    """
    s4 = [(u, v, w) for u in range(5) for v in range(5) for w in range(5) if u + v + w == 4]
    out: dict[TypeTriple, list[tuple[TypeTriple, TypeTriple]]] = {}
    for a, b in itertools.product(s4, repeat=2):
        key = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
        out.setdefault(key, []).append((a, b))
    return out


def _add_into(acc: dict[MonomialKey, Fraction], form: TrilinearForm) -> None:
    for key, c in form.items():
        prev = acc.get(key)
        acc[key] = c if prev is None else prev + c


@functools.lru_cache(maxsize=16)
def _level4_blocks(q: int) -> dict[TypeTriple, TrilinearForm]:
    return block_decompose(tensor_power(cw_tensor(q), 2))


def component(level: int, triple: TypeTriple, q: int) -> TrilinearForm:
    """The block component T_ijk of F_q^(x)2 (level 4) or F_q^(x)4 (level 8).

    Level-4 components come from the block decomposition of the square;
    level-8 components are assembled as the pair sum over S_ijk of
    T_uvw (x) T_u'v'w', which equals the corresponding block of the fourth
    power (verified coefficient-wise in the test suite).
    """
    i, j, k = triple
    if level == 4:
        if i + j + k != 4 or min(triple) < 0:
            raise ValueError(f"{triple} is not in S_4")
        blocks = _level4_blocks(q)
        if triple not in blocks:
            raise ValueError(f"component {triple} is empty at level 4")
        return blocks[triple]
    if level == 8:
        if i + j + k != 8 or min(triple) < 0:
            raise ValueError(f"{triple} is not in S_8")
        blocks = _level4_blocks(q)
        acc: dict[MonomialKey, Fraction] = {}
        for (a, b) in pair_splits(8).get(triple, []):
            if a in blocks and b in blocks:
                _add_into(acc, tensor_product(blocks[a], blocks[b]))
        if not acc:
            raise ValueError(f"component {triple} is empty at level 8")
        return TrilinearForm(q, 4, acc)
    raise ValueError("level must be 4 or 8")


@dataclass(frozen=True)
class DiffReport:
    """First differing monomial found when comparing two forms."""

    key: MonomialKey
    expected: Fraction
    actual: Fraction

    def __str__(self) -> str:
        x, y, z = self.key
        return (f"monomial x={list(x)} y={list(y)} z={list(z)}: "
                f"expected {self.expected}, got {self.actual}")


def coefficientwise_diff(expected: TrilinearForm, actual: TrilinearForm) -> Optional[DiffReport]:
    """First differing monomial in canonical order, or None when equal."""
    keys = sorted(set(expected._monomials) | set(actual._monomials))
    for key in keys:
        ce, ca = expected.coeff(key), actual.coeff(key)
        if ce != ca:
            return DiffReport(key, ce, ca)
    return None


def verify_power_identity(level: int, q: int,
                          budget: int = DEFAULT_MONOMIAL_BUDGET) -> tuple[bool, Optional[DiffReport]]:
    """Check that the components of S_{level} sum to the full power tensor.

    Returns (True, None) on exact coefficient-wise equality, otherwise
    (False, first differing monomial).
    """
    if level not in (4, 8):
        raise ValueError("level must be 4 or 8")
    full = tensor_power(cw_tensor(q), level // 2, budget=budget)
    acc: dict[MonomialKey, Fraction] = {}
    if level == 4:
        for form in _level4_blocks(q).values():
            _add_into(acc, form)
    else:
        blocks = _level4_blocks(q)
        for (a, b) in itertools.product(blocks, repeat=2):
            _add_into(acc, tensor_product(blocks[a], blocks[b], budget=budget))
    summed = TrilinearForm(q, level // 2, acc)
    diff = coefficientwise_diff(full, summed)
    return diff is None, diff


def t_split_211(q: int) -> dict[TypeTriple, TrilinearForm]:
    """The four-way split T_211 = t_011 + t_101 + t_110 + t_200.

    The sub-forms have q, q^2, q^2 and q monomials respectively and sum
    exactly to component(4, (2,1,1), q).
    """
    one = Fraction(1)
    qp = q + 1
    t011 = {((0, qp), (i, 0), (i, 0)): one for i in range(1, q + 1)}
    t101 = {((i, k), (0, k), (i, 0)): one
            for i in range(1, q + 1) for k in range(1, q + 1)}
    t110 = {((i, k), (i, 0), (0, k)): one
            for i in range(1, q + 1) for k in range(1, q + 1)}
    t200 = {((qp, 0), (0, k), (0, k)): one for k in range(1, q + 1)}
    return {
        (0, 1, 1): TrilinearForm(q, 2, t011),
        (1, 0, 1): TrilinearForm(q, 2, t101),
        (1, 1, 0): TrilinearForm(q, 2, t110),
        (2, 0, 0): TrilinearForm(q, 2, t200),
    }


# ---------------------------------------------------------------------------
# Structural recognition of matrix-product tensors
# ---------------------------------------------------------------------------

def _cooccurrence_classes(left: list, right: list, pairs: set[tuple]) -> Optional[list[set]]:
    """Connected components of the bipartite co-occurrence graph.

    Vertices are left + right elements; edges are the given pairs.  Returns
    the components (as sets of vertices tagged ('L', v) / ('R', v)), in a
    deterministic order.
    """
    adj: dict[tuple, set[tuple]] = {}
    for a in left:
        adj[("L", a)] = set()
    for b in right:
        adj[("R", b)] = set()
    for a, b in pairs:
        adj[("L", a)].add(("R", b))
        adj[("R", b)].add(("L", a))
    seen: set[tuple] = set()
    components: list[set] = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        components.append(comp)
    return components


def recognize_matmul(t: TrilinearForm) -> Optional[MatMulShape]:
    """Return <m,n,p> iff t is isomorphic to a matrix-product tensor.

    The algorithm is structural and certifying: all coefficients must be 1;
    each (x,y), (y,z) and (x,z) pair may appear in at most one monomial; the
    tripartite support must factor through row/column/inner labelings
    discovered by connected-component traversal; and the full m*n*p monomial
    grid must be present under the discovered labeling.  Returns None when
    any step fails ("not a matmul").
    """
    if len(t) == 0:
        raise ValueError("form is empty")
    if any(c != 1 for _, c in t.items()):
        return None
    keys = list(t._monomials)
    xs = sorted({x for x, _, _ in keys})
    ys = sorted({y for _, y, _ in keys})
    zs = sorted({z for _, _, z in keys})
    nmono = len(keys)
    xy = {(x, y) for x, y, _ in keys}
    yz = {(y, z) for _, y, z in keys}
    xz = {(x, z) for x, _, z in keys}
    if len(xy) != nmono or len(yz) != nmono or len(xz) != nmono:
        return None
    # In <m,n,p>: |X| = mn, |Y| = np, |Z| = mp, nmono = mnp.
    if (nmono % len(ys) or nmono % len(zs) or nmono % len(xs)):
        return None
    m = nmono // len(ys)
    n = nmono // len(zs)
    p = nmono // len(xs)
    if m * n != len(xs) or n * p != len(ys) or m * p != len(zs):
        return None

    # Row classes (r): x and z co-occur iff they share a row.
    r_classes = _cooccurrence_classes(xs, zs, xz)
    # Column classes (s): x and y co-occur iff they share an inner index.
    s_classes = _cooccurrence_classes(xs, ys, xy)
    # Inner classes (t): y and z co-occur iff they share a column.
    t_classes = _cooccurrence_classes(ys, zs, yz)
    if len(r_classes) != m or len(s_classes) != n or len(t_classes) != p:
        return None

    r_of: dict[tuple, int] = {}
    for idx, comp in enumerate(r_classes):
        for v in comp:
            r_of[v] = idx
    s_of: dict[tuple, int] = {}
    for idx, comp in enumerate(s_classes):
        for v in comp:
            s_of[v] = idx
    t_of: dict[tuple, int] = {}
    for idx, comp in enumerate(t_classes):
        for v in comp:
            t_of[v] = idx

    x_by_label: dict[tuple[int, int], IndexTuple] = {}
    for x in xs:
        label = (r_of[("L", x)], s_of[("L", x)])
        if label in x_by_label:
            return None
        x_by_label[label] = x
    y_by_label: dict[tuple[int, int], IndexTuple] = {}
    for y in ys:
        label = (s_of[("R", y)], t_of[("L", y)])
        if label in y_by_label:
            return None
        y_by_label[label] = y
    z_by_label: dict[tuple[int, int], IndexTuple] = {}
    for z in zs:
        label = (r_of[("R", z)], t_of[("R", z)])
        if label in z_by_label:
            return None
        z_by_label[label] = z

    for r in range(m):
        for s in range(n):
            for u in range(p):
                key = (x_by_label[r, s], y_by_label[s, u], z_by_label[r, u])
                if key not in t._monomials:
                    return None
    return MatMulShape(m, n, p)

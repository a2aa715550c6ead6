"""Index sets and hard-coded constraint tables for the level-4/level-8 analysis.

Everything here is pure combinatorics on integer triples:

* S_t = {(i,j,k) in N^3 : i+j+k = t} for t in {4, 8};
* the interior set Sbar_8 (all coordinates positive, 21 triples) and
  S'_8 = Sbar_8 minus the (2,3,3) permutation family (18 triples);
* for each interior (u,v,w) the local support
  Sbar_uvw = {(x,y,z) in S_4 : (u-x, v-y, w-z) in S_4};
* the ten log-linear stationarity equations on the global distribution
  (two of which are textually identical in the source system and are kept
  verbatim, deduplicated only in reporting) and the three local ones for
  the (2,3,3) family.

Each equation is stored as a list of (sign, triple) terms; its residual on a
distribution d is sum(sign * ln d(triple)).
"""

from __future__ import annotations

import functools

Triple = tuple[int, int, int]


def simplex(total: int) -> list[Triple]:
    """All (i,j,k) with nonnegative entries summing to total, lex order."""
    return [(i, j, total - i - j)
            for i in range(total + 1) for j in range(total - i + 1)]


S4: list[Triple] = simplex(4)
S8: list[Triple] = simplex(8)

#: Interior level-8 triples (no zero coordinate); |SBAR8| = 21.
SBAR8: list[Triple] = [t for t in S8 if min(t) > 0]

#: The three level-8 triples needing the nontrivial local fiber analysis.
T233_FAMILY: list[Triple] = [(2, 3, 3), (3, 2, 3), (3, 3, 2)]

#: Interior triples with a trivial local fiber; |SPRIME8| = 18.
SPRIME8: list[Triple] = [t for t in SBAR8 if t not in T233_FAMILY]

#: Level-4 triples that are not matrix products (the hat-term family).
SBAR4: list[Triple] = [(1, 1, 2), (1, 2, 1), (2, 1, 1)]

#: Level-4 matrix-product triples.
S4_MATMUL: list[Triple] = [t for t in S4 if t not in SBAR4]

#: Level-8 boundary triples (at least one zero coordinate); 24 of them.
S8_BOUNDARY: list[Triple] = [t for t in S8 if min(t) == 0]


@functools.lru_cache(maxsize=64)
def local_support(u: int, v: int, w: int) -> tuple[Triple, ...]:
    """Sbar_uvw: the S_4 triples whose complement within (u,v,w) is in S_4."""
    if (u, v, w) not in SBAR8:
        raise ValueError(f"{(u, v, w)} is not an interior S_8 triple")
    return tuple((x, y, z) for (x, y, z) in S4
                 if 0 <= u - x <= 4 and 0 <= v - y <= 4 and 0 <= w - z <= 4)


def swap_partner(t: Triple) -> Triple:
    """The triple with the last two coordinates exchanged."""
    return (t[0], t[2], t[1])


#: Canonical representative of each {(u,v,w),(u,w,v)} orbit: v <= w.
LOCAL_ORBIT_REPS: list[Triple] = [t for t in SBAR8 if t[1] <= t[2]]


SignedTerm = tuple[int, Triple]

#: The ten stationarity equations for the global distribution, as displayed
#: in the source system.  Equations 8 and 9 are verbatim duplicates (see
#: C2_DUPLICATES); they are evaluated independently and collapsed only when
#: reporting.
C2_EQUATIONS: list[list[SignedTerm]] = [
    [(-1, (0, 1, 7)), (1, (0, 2, 6)), (1, (1, 0, 7)),
     (-1, (1, 2, 5)), (-1, (2, 0, 6)), (1, (2, 1, 5))],
    [(-1, (0, 1, 7)), (1, (0, 2, 6)), (1, (1, 0, 7)),
     (-1, (1, 1, 6)), (-1, (6, 0, 2)), (1, (6, 1, 1))],
    [(-1, (0, 1, 7)), (1, (0, 3, 5)), (1, (1, 0, 7)),
     (-1, (1, 3, 4)), (-1, (3, 0, 5)), (1, (3, 1, 4))],
    [(-1, (0, 1, 7)), (1, (0, 4, 4)), (1, (1, 0, 7)),
     (-1, (1, 3, 4)), (-1, (4, 0, 4)), (1, (4, 1, 3))],
    [(-1, (0, 1, 7)), (1, (0, 3, 5)), (1, (1, 0, 7)),
     (-1, (1, 2, 5)), (-1, (5, 0, 3)), (1, (5, 1, 2))],
    [(-1, (0, 1, 7)), (1, (0, 3, 5)), (1, (1, 0, 7)), (1, (1, 1, 6)),
     (-1, (1, 2, 5)), (-1, (1, 3, 4)), (-1, (2, 0, 6)), (1, (2, 2, 4))],
    [(-1, (0, 1, 7)), (1, (0, 4, 4)), (1, (1, 0, 7)), (1, (1, 1, 6)),
     (-1, (1, 3, 4)), (-1, (1, 3, 4)), (-1, (2, 0, 6)), (1, (2, 3, 3))],
    [(-1, (0, 1, 7)), (-1, (0, 2, 6)), (1, (0, 3, 5)), (1, (0, 4, 4)),
     (1, (1, 0, 7)), (1, (1, 1, 6)), (-1, (1, 3, 4)), (-1, (1, 3, 4)),
     (-1, (3, 0, 5)), (1, (3, 2, 3))],
    [(-1, (0, 1, 7)), (-1, (0, 2, 6)), (1, (0, 4, 4)), (1, (0, 3, 5)),
     (1, (1, 0, 7)), (1, (1, 1, 6)), (-1, (1, 3, 4)), (-1, (1, 3, 4)),
     (-1, (3, 0, 5)), (1, (3, 2, 3))],
    [(-1, (0, 1, 7)), (-1, (0, 2, 6)), (1, (0, 4, 4)), (1, (0, 3, 5)),
     (1, (1, 0, 7)), (1, (1, 1, 6)), (-1, (1, 3, 4)), (-1, (1, 2, 5)),
     (-1, (4, 0, 4)), (1, (4, 2, 2))],
]

#: (i, j) pairs of equations of C2_EQUATIONS that are term-multiset equal.
C2_DUPLICATES: list[tuple[int, int]] = [
    (i, j)
    for i in range(len(C2_EQUATIONS))
    for j in range(i + 1, len(C2_EQUATIONS))
    if sorted(C2_EQUATIONS[i]) == sorted(C2_EQUATIONS[j])
]

#: Per-local stationarity equations for the (2,3,3) family.
D2_EQUATIONS: dict[Triple, list[SignedTerm]] = {
    (2, 3, 3): [(2, (2, 1, 1)), (1, (1, 3, 0)), (-1, (2, 0, 2)),
                (-1, (2, 2, 0)), (-1, (1, 1, 2))],
    (3, 2, 3): [(2, (1, 2, 1)), (1, (3, 1, 0)), (-1, (0, 2, 2)),
                (-1, (2, 2, 0)), (-1, (1, 1, 2))],
    (3, 3, 2): [(2, (1, 1, 2)), (1, (0, 3, 1)), (-1, (2, 0, 2)),
                (-1, (0, 2, 2)), (-1, (2, 1, 1))],
}


def equation_residual(equation: list[SignedTerm], log_weight) -> float:
    """sum(sign * log_weight(triple)) for one stored equation."""
    return sum(sign * log_weight(triple) for sign, triple in equation)


def marginal_rows(support: list[Triple] | tuple[Triple, ...]) -> list[list[int]]:
    """0/1 rows of the fixed-projections linear system over the support.

    One row per attained value of each of the three coordinates; column
    order follows the support order.  The nullspace of this matrix is the
    space of signed perturbations that leave all three projections fixed.
    """
    rows: list[list[int]] = []
    for axis in range(3):
        values = sorted({t[axis] for t in support})
        for val in values:
            rows.append([1 if t[axis] == val else 0 for t in support])
    return rows

"""Parameter vectors for the bound theorem and their constraint checks.

A full parameter point consists of

* q (the CW tensor parameter),
* a global distribution ``a`` on S_8,
* one local distribution ``a_uvw`` on Sbar_uvw per interior triple,
* two scalars b, b_tilde in (0,1).

All weights are exact rationals; symmetry constraints (C1, D1) are checked
exactly, while the log-linear stationarity systems (C2, D2) and the
inequality constraints (C3, D3, E3) are checked in natural-log space with
explicit residuals and tolerances.  A report entry passes when

* equality families:  max |residual| <= tolerance,
* inequality families: residual >= -tolerance   (residual = lhs - rhs in
  log space).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .indexsets import (
    C2_DUPLICATES,
    C2_EQUATIONS,
    D2_EQUATIONS,
    S4,
    S8,
    SBAR8,
    T233_FAMILY,
    Triple,
    equation_residual,
    local_support,
    swap_partner,
)

# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


class Distribution:
    """Strictly interior rational probability distribution on triples.

    Weights must be rational, strictly between 0 and 1, and sum to 1
    exactly.  Instances are immutable.
    """

    __slots__ = ("_weights",)

    def __init__(self, weights: Mapping[Triple, Fraction]):
        w = {t: Fraction(v) for t, v in weights.items()}
        total = Fraction(0)
        for t, v in w.items():
            if not (0 < v < 1):
                raise ValueError(f"weight {v} at {t} is not strictly inside (0,1)")
            total += v
        if total != 1:
            raise ValueError(f"weights sum to {total}, expected exactly 1")
        object.__setattr__(self, "_weights", w)

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    @property
    def support(self) -> frozenset[Triple]:
        return frozenset(self._weights)

    def __getitem__(self, t: Triple) -> Fraction:
        return self._weights[t]

    def get(self, t: Triple, default: Fraction = Fraction(0)) -> Fraction:
        return self._weights.get(t, default)

    def items(self):
        return self._weights.items()

    def __len__(self):
        return len(self._weights)

    def __eq__(self, other):
        return isinstance(other, Distribution) and self._weights == other._weights

    def __hash__(self):
        return hash(frozenset(self._weights.items()))

    def __repr__(self):
        return f"Distribution({len(self)} points)"

    def projections(self) -> tuple[dict[int, Fraction], dict[int, Fraction], dict[int, Fraction]]:
        """Exact marginals (A, B, C) along the three coordinates."""
        A: dict[int, Fraction] = {}
        B: dict[int, Fraction] = {}
        C: dict[int, Fraction] = {}
        for (i, j, k), v in sorted(self._weights.items()):
            A[i] = A.get(i, Fraction(0)) + v
            B[j] = B.get(j, Fraction(0)) + v
            C[k] = C.get(k, Fraction(0)) + v
        return A, B, C

    def log_weight(self, t: Triple) -> float:
        v = self._weights.get(t)
        if v is None or v <= 0:
            raise ValueError(f"log of zero weight at {t}")
        return math.log(v)


def uniform_distribution(support: Iterable[Triple]) -> Distribution:
    pts = list(support)
    w = Fraction(1, len(pts))
    return Distribution({t: w for t in pts})


def symmetrized(d: Mapping[Triple, Fraction], maps: list[Callable[[Triple], Triple]]) -> dict[Triple, Fraction]:
    """Average a weight map over a group of support bijections (exact)."""
    out: dict[Triple, Fraction] = {}
    n = Fraction(len(maps))
    for t in d:
        out[t] = sum((Fraction(d[m(t)]) for m in maps), Fraction(0)) / n
    return out


def entropy_nats(weights: Iterable[Fraction]) -> float:
    """Shannon entropy -sum w ln w in nats (float)."""
    return -sum(float(w) * math.log(w) for w in weights if w > 0)


# ---------------------------------------------------------------------------
# Parameter sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamSet:
    """Full parameter vector: q, a on S_8, locals on Sbar_uvw, b, b_tilde."""

    q: int
    a: Distribution
    locals: dict[Triple, Distribution]
    b: Fraction
    b_tilde: Fraction

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.a.support != frozenset(S8):
            raise ValueError("a must be strictly positive on all of S_8")
        if set(self.locals) != set(SBAR8):
            missing = set(SBAR8) - set(self.locals)
            raise ValueError(f"locals must cover Sbar_8 exactly (missing {sorted(missing)})")
        for t, d in self.locals.items():
            if d.support != frozenset(local_support(*t)):
                raise ValueError(f"local distribution at {t} has wrong support")
        for name in ("b", "b_tilde"):
            v = getattr(self, name)
            if not isinstance(v, Fraction) or not (0 < v < 1):
                raise ValueError(f"{name} must be a rational strictly inside (0,1)")


def alpha_weights(a: Distribution, locals_: Mapping[Triple, Distribution]) -> dict[Triple, Fraction]:
    """Occurrence weights of each S_4 triple across all local factors.

    Each local point (x,y,z) of a_uvw contributes a(uvw)*a_uvw(xyz) once as
    a left factor at (x,y,z) and once as a right factor at the complement
    (u-x, v-y, w-z); hence sum(alpha) = 2 * sum of a over Sbar_8 exactly.
    """
    alpha: dict[Triple, Fraction] = {t: Fraction(0) for t in S4}
    for (u, v, w) in SBAR8:
        au = a[u, v, w]
        for (x, y, z), lw in sorted(locals_[u, v, w].items()):
            alpha[x, y, z] += au * lw
            alpha[u - x, v - y, w - z] += au * lw
    return alpha


# ---------------------------------------------------------------------------
# Constraint reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    """Residual tolerances: equalities bounded by eq, inequalities by -ineq."""

    eq: float = 1e-7
    ineq: float = 1e-10
    exact: float = 0.0  # symmetry families C1/D1 are exact-rational checks


#: Defaults for accepting an optimizer iterate.
OPTIMIZER_TOLERANCES = Tolerances(eq=1e-7)
#: Stricter defaults applied when a certificate is emitted or rechecked.
CERTIFICATE_TOLERANCES = Tolerances(eq=1e-8)


@dataclass(frozen=True)
class ConstraintEntry:
    """Residual record for one constraint family."""

    cid: str
    residual: float
    tolerance: float
    passed: bool
    kind: str = "eq"  # "eq" | "ineq"
    details: tuple[float, ...] = ()
    note: str = ""

    def to_json_dict(self) -> dict:
        d = {
            "id": self.cid,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "kind": self.kind,
        }
        if self.details:
            d["details"] = list(self.details)
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class ConstraintReport:
    entries: tuple[ConstraintEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, cid: str) -> ConstraintEntry:
        for e in self.entries:
            if e.cid == cid:
                return e
        raise KeyError(cid)

    def failures(self) -> list[ConstraintEntry]:
        return [e for e in self.entries if not e.passed]

    def to_json_dict(self) -> dict:
        return {"pass": self.passed, "entries": [e.to_json_dict() for e in self.entries]}

    def __str__(self) -> str:
        lines = []
        for e in self.entries:
            status = "ok  " if e.passed else "FAIL"
            lines.append(f"{status} {e.cid:3s} residual={e.residual: .3e} tol={e.tolerance:.1e}"
                         + (f"  [{e.note}]" if e.note else ""))
        return "\n".join(lines)


def _eq_entry(cid: str, residuals: list[float], tol: float, note: str = "") -> ConstraintEntry:
    worst = max(residuals, key=abs) if residuals else 0.0
    passed = all(abs(r) <= tol for r in residuals)
    return ConstraintEntry(cid, worst, tol, passed, "eq", tuple(residuals), note)


def _ineq_entry(cid: str, residual: float, tol: float, note: str = "") -> ConstraintEntry:
    return ConstraintEntry(cid, residual, tol, residual >= -tol, "ineq", (), note)


# ---------------------------------------------------------------------------
# Individual constraint checks
# ---------------------------------------------------------------------------


def check_C1(a: Distribution, tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """Symmetry a(ijk) = a(ikj); exact rational check."""
    worst = Fraction(0)
    for t in S8:
        d = abs(a[t] - a[swap_partner(t)])
        if d > worst:
            worst = d
    return ConstraintEntry("C1", float(worst), tol.exact, worst == 0, "eq")


def check_C2(a: Distribution, tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """The ten log-linear stationarity residuals on a (duplicates kept)."""
    logs = {t: a.log_weight(t) for t in S8}
    residuals = [equation_residual(eq, logs.__getitem__) for eq in C2_EQUATIONS]
    dup = ", ".join(f"eq{i + 1}=eq{j + 1}" for i, j in C2_DUPLICATES)
    return _eq_entry("C2", residuals, tol.eq,
                     note=f"verbatim duplicates: {dup}" if dup else "")


def check_C3(a: Distribution, tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """prod A(i)^A(i) >= prod B(j)^B(j), as sum A ln A - sum B ln B >= 0."""
    A, B, _ = a.projections()
    lhs = sum(float(v) * math.log(v) for v in A.values())
    rhs = sum(float(v) * math.log(v) for v in B.values())
    return _ineq_entry("C3", lhs - rhs, tol.ineq)


def check_D1(locals_: Mapping[Triple, Distribution],
             tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """Central and swap symmetries of every local distribution; exact."""
    worst = Fraction(0)
    for (u, v, w) in SBAR8:
        d = locals_.get((u, v, w))
        dsw = locals_.get(swap_partner((u, v, w)))
        if d is None or dsw is None:
            raise ValueError(f"missing local distribution at {(u, v, w)}")
        for (x, y, z), val in d.items():
            central = abs(val - d.get((u - x, v - y, w - z)))
            swapped = abs(val - dsw.get((x, z, y)))
            worst = max(worst, central, swapped)
    return ConstraintEntry("D1", float(worst), tol.exact, worst == 0, "eq")


def check_D2(locals_: Mapping[Triple, Distribution],
             tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """The three local stationarity residuals for the (2,3,3) family."""
    residuals = []
    for t in T233_FAMILY:
        d = locals_[t]
        residuals.append(equation_residual(D2_EQUATIONS[t], d.log_weight))
    return _eq_entry("D2", residuals, tol.eq)


def check_D3(a: Distribution, locals_: Mapping[Triple, Distribution],
             tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """Aggregated x-side vs y-side projection-entropy inequality."""
    resid = 0.0
    for t in SBAR8:
        A, B, _ = locals_[t].projections()
        lhs = sum(float(v) * math.log(v) for v in A.values())
        rhs = sum(float(v) * math.log(v) for v in B.values())
        resid += float(a[t]) * (lhs - rhs)
    return _ineq_entry("D3", resid, tol.ineq)


def check_E3(alpha112: float, alpha211: float, b: Fraction, b_tilde: Fraction,
             tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintEntry:
    """Balance condition between the two hat-term type parameters.

    Log-space residual of
        (2^bt)^a211 / (b^b (1-b)^(1-b))^a112
            >= (2^b)^a112 / (bt^bt (1-bt)^(1-bt))^a211.
    """
    for name, v in (("b", b), ("b_tilde", b_tilde)):
        if not 0 < v < 1:
            raise ValueError(f"{name} must lie strictly inside (0,1)")
    bf, btf = float(b), float(b_tilde)
    hb = bf * math.log(bf) + (1 - bf) * math.log(1 - bf)
    hbt = btf * math.log(btf) + (1 - btf) * math.log(1 - btf)
    lhs = alpha211 * btf * math.log(2) - alpha112 * hb
    rhs = alpha112 * bf * math.log(2) - alpha211 * hbt
    return _ineq_entry("E3", lhs - rhs, tol.ineq)


def check_all(p: ParamSet, tol: Tolerances = OPTIMIZER_TOLERANCES) -> ConstraintReport:
    """Aggregate report over all seven constraint families."""
    alpha = alpha_weights(p.a, p.locals)
    entries = (
        check_C1(p.a, tol),
        check_C2(p.a, tol),
        check_C3(p.a, tol),
        check_D1(p.locals, tol),
        check_D2(p.locals, tol),
        check_D3(p.a, p.locals, tol),
        check_E3(float(alpha[1, 1, 2]), float(alpha[2, 1, 1]), p.b, p.b_tilde, tol),
    )
    return ConstraintReport(entries)


# ---------------------------------------------------------------------------
# Serialization (lossless rational JSON)
# ---------------------------------------------------------------------------


def _frac_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _parse_frac(s: str) -> Fraction:
    num, _, den = s.partition("/")
    return Fraction(int(num), int(den) if den else 1)


def _triple_key(t: Triple) -> str:
    return ",".join(str(c) for c in t)


def _parse_triple(s: str) -> Triple:
    parts = tuple(int(c) for c in s.split(","))
    if len(parts) != 3:
        raise ValueError(f"bad triple key {s!r}")
    return parts  # type: ignore[return-value]


def paramset_to_json_dict(p: ParamSet) -> dict:
    return {
        "q": p.q,
        "a": {_triple_key(t): _frac_str(v) for t, v in sorted(p.a.items())},
        "locals": {
            _triple_key(t): {_triple_key(s): _frac_str(v)
                             for s, v in sorted(p.locals[t].items())}
            for t in sorted(p.locals)
        },
        "b": _frac_str(p.b),
        "b_tilde": _frac_str(p.b_tilde),
    }


def paramset_from_json_dict(doc: Mapping) -> ParamSet:
    try:
        q = int(doc["q"])
        a = Distribution({_parse_triple(k): _parse_frac(v) for k, v in doc["a"].items()})
        locals_ = {
            _parse_triple(k): Distribution({_parse_triple(s): _parse_frac(v)
                                            for s, v in sub.items()})
            for k, sub in doc["locals"].items()
        }
        b = _parse_frac(doc["b"])
        bt = _parse_frac(doc["b_tilde"])
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed parameter document: {exc}") from exc
    return ParamSet(q=q, a=a, locals=locals_, b=b, b_tilde=bt)


def paramset_dumps(p: ParamSet) -> str:
    return json.dumps(paramset_to_json_dict(p), indent=2, sort_keys=True)


def paramset_loads(text: str) -> ParamSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed parameter document: {exc}") from exc
    return paramset_from_json_dict(doc)

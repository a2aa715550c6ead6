"""From a feasible parameter point to the bound omega(k) <= nu.

The extracted product has the balanced shape <Q^N, Q^N, R^N>; its per-N block
count has limit M.  Together with the border-rank constant (q+2)^4 this gives

    M * Q^omega(ln R / ln Q) <= (q+2)^4,

so with k = ln R / ln Q every feasible point certifies
omega(k) <= nu = (4 ln(q+2) - ln M) / ln Q, provided Q > 1.

The boundary components entering Q and R are matrix products; their
nontrivial dimensions are closed forms in q, and the placement within
<m, n, p> is decided by which coordinate of the type triple vanishes
(i=0 -> p, j=0 -> m, k=0 -> n).  This matches the symbolically constructed
components for small q, which the test suite asserts via the structural
recognizer.  The expanded Q/R formulas below are the reconstruction of the
balanced form; the m-route and n-route evaluations of ln Q must agree to
1e-10, which is checked on every call.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from . import __version__
from .forms import MatMulShape
from .indexsets import S4, S4_MATMUL, S8, S8_BOUNDARY, SBAR4, SBAR8, Triple
from .params import (
    CERTIFICATE_TOLERANCES,
    ConstraintReport,
    ParamSet,
    Tolerances,
    alpha_weights,
    check_all,
    paramset_from_json_dict,
    paramset_to_json_dict,
)

#: Relative agreement required between the two routes computing ln Q.
QR_CROSSCHECK_TOL = 1e-10


class NotAMatMulComponentError(ValueError):
    """Requested a table shape for a component that is not a matrix product."""


class InfeasibleParamError(ValueError):
    """Parameter point unusable for a bound (constraint failure or Q <= 1)."""


def level4_value(pair: tuple[int, int], q: int) -> int:
    """Nontrivial dimension of a level-4 boundary component T with nonzero
    coordinates {j,k}: 1, 2q, q^2+2 for {0,4}, {1,3}, {2,2}."""
    j, k = pair
    if j + k != 4 or min(j, k) < 0:
        raise ValueError(f"pair {pair} does not split 4")
    table = {0: 1, 1: 2 * q, 2: q * q + 2, 3: 2 * q, 4: 1}
    return table[j]


def level8_value_convolution(pair: tuple[int, int], q: int) -> int:
    """Nontrivial dimension of a level-8 boundary component, by convolution.

    The level-8 component with nonzero coordinates {j,k} (j+k = 8) is the
    pair-sum of level-4 components, so its dimension is
    sum_v c_v * c_{j-v} over valid splits, with c = (1, 2q, q^2+2, 2q, 1).
    """
    j, k = pair
    if j + k != 8 or min(j, k) < 0:
        raise ValueError(f"pair {pair} does not split 8")
    c = [1, 2 * q, q * q + 2, 2 * q, 1]
    return sum(c[v] * c[j - v] for v in range(max(0, j - 4), min(4, j) + 1))


def _place(value: int, triple: Triple) -> MatMulShape:
    """Place the nontrivial dimension according to the zero coordinate:
    i = 0 -> p, j = 0 -> m, k = 0 -> n."""
    i, j, k = triple
    if i == 0:
        return MatMulShape(1, 1, value)
    if j == 0:
        return MatMulShape(value, 1, 1)
    if k == 0:
        return MatMulShape(1, value, 1)
    raise NotAMatMulComponentError(f"component {triple} is not a matrix product")


def shape_of(level: int, triple: Triple, q: int) -> MatMulShape:
    """Table shape of a boundary component (raises for non-matmul triples)."""
    i, j, k = triple
    if level == 4:
        if triple not in S4:
            raise ValueError(f"{triple} not in S_4")
        if triple in SBAR4:
            raise NotAMatMulComponentError(f"level-4 component {triple} is not a matrix product")
        nz = tuple(c for c in triple if c != 0)
        value = 1 if len(nz) < 2 else level4_value((nz[0], nz[1]), q)
        return _place(value, triple)
    if level == 8:
        if triple not in S8:
            raise ValueError(f"{triple} not in S_8")
        if min(triple) > 0:
            raise NotAMatMulComponentError(f"level-8 component {triple} is not in the table")
        nz = tuple(c for c in triple if c != 0)
        value = 1 if len(nz) < 2 else level8_value_convolution((nz[0], nz[1]), q)
        return _place(value, triple)
    raise ValueError("level must be 4 or 8")


@dataclass(frozen=True)
class ShapeTable:
    """All boundary component shapes for a given q."""

    q: int
    level4: dict[Triple, MatMulShape] = field(default_factory=dict)
    level8: dict[Triple, MatMulShape] = field(default_factory=dict)


def shape_table(q: int) -> ShapeTable:
    return ShapeTable(
        q=q,
        level4={t: shape_of(4, t, q) for t in S4_MATMUL},
        level8={t: shape_of(8, t, q) for t in S8_BOUNDARY},
    )


# ---------------------------------------------------------------------------
# Q, R, M
# ---------------------------------------------------------------------------


def hat_shape(alpha112: float, alpha211: float, b: float, b_tilde: float,
              q: int) -> tuple[float, float, float]:
    """Log-dimensions (per N, natural log) of the joint hat component.

    <q^(a112 + a211*bt), q^(a112 + a211*bt), q^(2*a112*b + a211*(1-bt))>.
    At q = 1 all three exponents vanish (the hat term is trivial).
    """
    if alpha112 < 0 or alpha211 < 0:
        raise ValueError("alpha weights must be nonnegative")
    if not (0 < b < 1 and 0 < b_tilde < 1):
        raise ValueError("b and b_tilde must lie strictly inside (0,1)")
    lnq = math.log(q)
    mexp = (alpha112 + alpha211 * b_tilde) * lnq
    pexp = (2 * alpha112 * b + alpha211 * (1 - b_tilde)) * lnq
    return mexp, mexp, pexp


def _boundary_log_sums(a, q: int) -> tuple[float, float, float]:
    """(m, n, p) log contributions of the level-8 boundary mass."""
    sm = sn = sp = 0.0
    for t in S8_BOUNDARY:
        i, j, k = t
        w = float(a[t])
        if i == 0:
            sp += w * math.log(level8_value_convolution((j, k), q))
        elif j == 0:
            sm += w * math.log(level8_value_convolution((i, k), q))
        else:  # k == 0
            sn += w * math.log(level8_value_convolution((i, j), q))
    return sm, sn, sp


def _level4_log_sums(alpha: Mapping[Triple, Fraction], q: int) -> tuple[float, float, float]:
    """(m, n, p) log contributions of the alpha-weighted level-4 products."""
    sm = sn = sp = 0.0
    for t in S4_MATMUL:
        i, j, k = t
        w = float(alpha[t])
        nz = tuple(c for c in t if c != 0)
        value = 1 if len(nz) < 2 else level4_value((nz[0], nz[1]), q)
        lv = math.log(value)
        if i == 0:
            sp += w * lv
        elif j == 0:
            sm += w * lv
        else:
            sn += w * lv
    return sm, sn, sp


def compute_QR(p: ParamSet,
               alpha: Optional[Mapping[Triple, Fraction]] = None) -> tuple[float, float]:
    """(ln Q, ln R) of the extracted <Q^N, Q^N, R^N> product.

    ln Q is evaluated along both the m-dimensions and the n-dimensions; under
    the symmetry constraints the two routes agree, and a mismatch beyond
    1e-10 raises (it indicates a parameter point violating C1/D1).
    """
    if alpha is None:
        alpha = alpha_weights(p.a, p.locals)
    q = p.q
    lnq = math.log(q)
    b, bt = float(p.b), float(p.b_tilde)
    a112, a121, a211 = float(alpha[1, 1, 2]), float(alpha[1, 2, 1]), float(alpha[2, 1, 1])

    bm, bn, bp = _boundary_log_sums(p.a, q)
    lm, ln_, lp = _level4_log_sums(alpha, q)
    lnQ_m = bm + lm + (a112 + a211 * bt) * lnq
    lnQ_n = bn + ln_ + (a121 + a211 * bt) * lnq
    lnR = bp + lp + ((a112 + a121) * b + a211 * (1 - bt)) * lnq

    scale = max(abs(lnQ_m), abs(lnQ_n), 1.0)
    if abs(lnQ_m - lnQ_n) > QR_CROSSCHECK_TOL * scale:
        raise InfeasibleParamError(
            f"m-route and n-route disagree on ln Q ({lnQ_m} vs {lnQ_n}); "
            "the parameter point does not have the balanced <Q,Q,R> form")
    return lnQ_m, lnR


def compute_M(p: ParamSet,
              alpha: Optional[Mapping[Triple, Fraction]] = None) -> float:
    """ln M: the per-N log block count of the full extraction.

    ln M = H(A) + sum_{interior} a(ijk) * H(A_ijk)
         + (2*a112 + a211) ln 2 - a211 * (bt ln(2 bt) + (1-bt) ln(1-bt)),

    with H the Shannon entropy of the x-side projections.  The polynomial
    and epsilon factors of the extraction counts vanish in the N-th-root
    limit and are intentionally absent.
    """
    if alpha is None:
        alpha = alpha_weights(p.a, p.locals)
    A, _, _ = p.a.projections()
    lnM = -sum(float(v) * math.log(v) for v in A.values())
    for t in SBAR8:
        At, _, _ = p.locals[t].projections()
        lnM -= float(p.a[t]) * sum(float(v) * math.log(v) for v in At.values())
    a112, a121, a211 = float(alpha[1, 1, 2]), float(alpha[1, 2, 1]), float(alpha[2, 1, 1])
    bt = float(p.b_tilde)
    lnM += (a112 + a121 + a211) * math.log(2)
    lnM -= a211 * (bt * math.log(2 * bt) + (1 - bt) * math.log(1 - bt))
    return lnM


@dataclass(frozen=True)
class BoundResult:
    """Derived quantities of a feasible point: <Q,Q,R>, M, k and nu."""

    q: int
    lnQ: float
    lnR: float
    lnM: float
    k: float
    nu: float

    @property
    def Q(self) -> float:
        return math.exp(self.lnQ)

    @property
    def R(self) -> float:
        return math.exp(self.lnR)

    @property
    def M(self) -> float:
        return math.exp(self.lnM)

    def to_json_dict(self) -> dict:
        return {"q": self.q, "lnQ": self.lnQ, "lnR": self.lnR, "lnM": self.lnM,
                "k": self.k, "nu": self.nu}

    @staticmethod
    def from_json_dict(doc: Mapping) -> "BoundResult":
        return BoundResult(q=int(doc["q"]), lnQ=float(doc["lnQ"]), lnR=float(doc["lnR"]),
                           lnM=float(doc["lnM"]), k=float(doc["k"]), nu=float(doc["nu"]))


def evaluate_bound(p: ParamSet) -> BoundResult:
    """Compute (k, nu) without constraint gating (report-only mode)."""
    alpha = alpha_weights(p.a, p.locals)
    lnQ, lnR = compute_QR(p, alpha)
    if lnQ <= 0:
        raise InfeasibleParamError("Q <= 1: parameter point carries no usable dimension")
    lnM = compute_M(p, alpha)
    k = lnR / lnQ
    nu = (4 * math.log(p.q + 2) - lnM) / lnQ
    return BoundResult(q=p.q, lnQ=lnQ, lnR=lnR, lnM=lnM, k=k, nu=nu)


def bound(p: ParamSet, tol: Tolerances = CERTIFICATE_TOLERANCES) -> BoundResult:
    """Constraint-gated bound: omega(k) <= nu holds for the returned values."""
    report = check_all(p, tol)
    if not report.passed:
        failed = ", ".join(e.cid for e in report.failures())
        raise InfeasibleParamError(f"constraints failed: {failed}")
    return evaluate_bound(p)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCertificate:
    """A parameter point plus its derived bound, re-checkable independently."""

    params: ParamSet
    result: BoundResult
    report: ConstraintReport
    meta: dict

    def to_json_dict(self) -> dict:
        return {
            "format": "cwlaser-certificate-v1",
            "params": paramset_to_json_dict(self.params),
            "result": self.result.to_json_dict(),
            "report": self.report.to_json_dict(),
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def make_certificate(p: ParamSet, meta: Optional[dict] = None,
                     tol: Tolerances = CERTIFICATE_TOLERANCES) -> BoundCertificate:
    report = check_all(p, tol)
    if not report.passed:
        failed = ", ".join(e.cid for e in report.failures())
        raise InfeasibleParamError(f"refusing to certify: constraints failed: {failed}")
    result = evaluate_bound(p)
    base_meta = {"tool": "cwlaser", "version": __version__,
                 "tolerances": {"eq": tol.eq, "ineq": tol.ineq}}
    if meta:
        base_meta.update(meta)
    return BoundCertificate(params=p, result=result, report=report, meta=base_meta)


def certificate_from_json_dict(doc: Mapping) -> BoundCertificate:
    try:
        params = paramset_from_json_dict(doc["params"])
        result = BoundResult.from_json_dict(doc["result"])
        meta = dict(doc.get("meta", {}))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed certificate: {exc}") from exc
    # The embedded report is advisory; verification recomputes it.
    report = check_all(params, _cert_tolerances(meta))
    return BoundCertificate(params=params, result=result, report=report, meta=meta)


def _cert_tolerances(meta: Mapping) -> Tolerances:
    tols = meta.get("tolerances", {})
    return Tolerances(eq=float(tols.get("eq", CERTIFICATE_TOLERANCES.eq)),
                      ineq=float(tols.get("ineq", CERTIFICATE_TOLERANCES.ineq)))


@dataclass(frozen=True)
class Verdict:
    """Outcome of re-checking a certificate from its stored parameters."""

    passed: bool
    issues: tuple[str, ...]
    report: Optional[ConstraintReport] = None
    recomputed: Optional[BoundResult] = None

    def __str__(self) -> str:
        if self.passed:
            return "certificate verifies"
        return "certificate REJECTED:\n" + "\n".join(f"  - {s}" for s in self.issues)


#: Relative tolerance for stored-vs-recomputed (k, nu).
RESULT_MATCH_RTOL = 1e-10


def check_certificate(doc: Mapping) -> Verdict:
    """Re-derive everything from the stored parameters alone.

    The verdict passes iff all constraints pass at the certificate
    tolerances and the recomputed (k, nu) match the stored values to 1e-10
    relative.  This path never touches optimizer code.
    """
    issues: list[str] = []
    try:
        params = paramset_from_json_dict(doc["params"])
        stored = BoundResult.from_json_dict(doc["result"])
    except (KeyError, TypeError, ValueError) as exc:
        return Verdict(False, (f"parse error: {exc}",))
    tol = _cert_tolerances(doc.get("meta", {}))
    report = check_all(params, tol)
    for e in report.failures():
        issues.append(f"constraint {e.cid} failed: residual {e.residual:.6e} "
                      f"(tolerance {e.tolerance:.1e})")
    recomputed = None
    try:
        recomputed = evaluate_bound(params)
    except (InfeasibleParamError, ValueError) as exc:
        issues.append(f"bound evaluation failed: {exc}")
    if recomputed is not None:
        if params.q != stored.q:
            issues.append(f"stored q {stored.q} != parameter q {params.q}")
        for name in ("k", "nu", "lnQ", "lnR", "lnM"):
            sv, rv = getattr(stored, name), getattr(recomputed, name)
            scale = max(abs(sv), abs(rv), 1e-300)
            if abs(sv - rv) > RESULT_MATCH_RTOL * scale:
                issues.append(f"stored {name} {sv!r} differs from recomputed {rv!r} "
                              f"by {abs(sv - rv):.3e} (rtol {RESULT_MATCH_RTOL})")
    return Verdict(not issues, tuple(issues), report, recomputed)


def check_certificate_highprec(doc: Mapping, digits: int = 50) -> Verdict:
    """Optional high-precision recheck of the stored (k, nu) via mpmath.

    Recomputes ln Q, ln R, ln M from the exact rational parameters with the
    requested working precision and compares against the stored values at a
    tolerance matching double precision (1e-12 relative).
    """
    import mpmath

    base = check_certificate(doc)
    params = paramset_from_json_dict(doc["params"])
    stored = BoundResult.from_json_dict(doc["result"])
    issues = list(base.issues)
    with mpmath.workdps(digits):
        alpha = alpha_weights(params.a, params.locals)
        q = params.q
        lnq = mpmath.log(q)

        def mpf(fr: Fraction):
            return mpmath.mpf(fr.numerator) / mpmath.mpf(fr.denominator)

        def ent(values):
            return -mpmath.fsum(mpf(v) * mpmath.log(mpf(v)) for v in values)

        sm = sn = sp = mpmath.mpf(0)
        for t in S8_BOUNDARY:
            i, j, k = t
            w = mpf(params.a[t])
            if i == 0:
                sp += w * mpmath.log(level8_value_convolution((j, k), q))
            elif j == 0:
                sm += w * mpmath.log(level8_value_convolution((i, k), q))
            else:
                sn += w * mpmath.log(level8_value_convolution((i, j), q))
        for t in S4_MATMUL:
            i, j, k = t
            nz = tuple(c for c in t if c != 0)
            value = 1 if len(nz) < 2 else level4_value((nz[0], nz[1]), q)
            w = mpf(alpha[t]) * mpmath.log(value)
            if i == 0:
                sp += w
            elif j == 0:
                sm += w
            else:
                sn += w
        a112, a121, a211 = mpf(alpha[1, 1, 2]), mpf(alpha[1, 2, 1]), mpf(alpha[2, 1, 1])
        b, bt = mpf(params.b), mpf(params.b_tilde)
        lnQ = sm + (a112 + a211 * bt) * lnq
        lnR = sp + ((a112 + a121) * b + a211 * (1 - bt)) * lnq
        A, _, _ = params.a.projections()
        lnM = ent(A.values())
        for t in SBAR8:
            At, _, _ = params.locals[t].projections()
            lnM += mpf(params.a[t]) * ent(At.values())
        lnM += (a112 + a121 + a211) * mpmath.log(2)
        lnM -= a211 * (bt * mpmath.log(2 * bt) + (1 - bt) * mpmath.log(1 - bt))
        k_hp = lnR / lnQ
        nu_hp = (4 * mpmath.log(q + 2) - lnM) / lnQ
        for name, hp in (("k", k_hp), ("nu", nu_hp)):
            sv = getattr(stored, name)
            if abs(sv - float(hp)) > 1e-12 * max(abs(sv), 1.0):
                issues.append(f"high-precision {name} {mpmath.nstr(hp, 17)} differs "
                              f"from stored {sv!r}")
    return Verdict(not issues, tuple(issues), base.report, base.recomputed)

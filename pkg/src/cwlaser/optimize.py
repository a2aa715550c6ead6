"""Numerical search for the best bound at a target k.

Parametrization.  Feasible points are generated from unconstrained real
potentials:

* the global distribution is a softmax of logits lam_i + (mu_j + mu_k),
  which enforces the j/k exchange symmetry bitwise and makes the ten
  log-linear stationarity residuals vanish identically (the distribution is
  the entropy maximizer of its own marginals);
* each local distribution is a softmax of per-coordinate potentials whose
  logits are averaged over the central/swap symmetry orbits, so the local
  symmetry family holds exactly and the local stationarity residuals vanish;
* b and b_tilde live in logit form.

This eliminates all equality constraint families except the k-target; the
remaining smooth problem (minimize nu subject to ln R = k ln Q and the three
inequality families held with a tiny interior margin) is solved by SLSQP
with exact gradients from jax, under a multi-start schedule.  Every
candidate is converted to exact rationals, re-checked by the independent
verification path, and only then admitted; the returned certificate is
byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from jax import config as _jax_config

_jax_config.update("jax_enable_x64", True)

import jax
import jax.numpy as jnp
from jax.scipy.special import xlogy
from scipy.optimize import minimize

from .indexsets import LOCAL_ORBIT_REPS, S4, S8, SBAR8, Triple, local_support, swap_partner
from .params import (
    CERTIFICATE_TOLERANCES,
    Distribution,
    ParamSet,
    check_all,
)
from .value import BoundCertificate, InfeasibleParamError, evaluate_bound, make_certificate

LN2 = math.log(2.0)

# ---------------------------------------------------------------------------
# Static combinatorial structure shared by all searches
# ---------------------------------------------------------------------------


class _Structure:
    """Precomputed index arrays mapping potentials to distributions and
    distributions to the bound quantities."""

    def __init__(self) -> None:
        s8 = np.array(S8, dtype=np.int64)
        self.i8, self.j8, self.k8 = s8[:, 0], s8[:, 1], s8[:, 2]
        self.s8_index = {t: n for n, t in enumerate(S8)}
        self.s4_index = {t: n for n, t in enumerate(S4)}
        self.sbar8_in_s8 = np.array([self.s8_index[t] for t in SBAR8], dtype=np.int64)

        # Flattened local supports: one entry per (triple, point).
        entries: list[tuple[Triple, Triple]] = []
        for t in SBAR8:
            for pt in local_support(*t):
                entries.append((t, pt))
        self.entries = entries
        flat_index = {e: n for n, e in enumerate(entries)}
        L = len(entries)
        self.ent_t = np.array([SBAR8.index(t) for t, _ in entries], dtype=np.int64)

        # Potential slots: one (px, py, pz) block per swap-orbit representative.
        self.reps = LOCAL_ORBIT_REPS
        rep_of: dict[Triple, Triple] = {}
        for t in SBAR8:
            sw = swap_partner(t)
            rep_of[t] = t if t in self.reps else sw
        self.rep_of = rep_of

        def axis_range(c: int) -> range:
            return range(max(0, c - 4), min(4, c) + 1)

        slot = 0
        xoff: dict[Triple, tuple[int, int]] = {}
        yoff: dict[Triple, tuple[int, int]] = {}
        zoff: dict[Triple, tuple[int, int]] = {}
        for rep in self.reps:
            u, v, w = rep
            xoff[rep] = (slot, axis_range(u).start); slot += len(axis_range(u))
            yoff[rep] = (slot, axis_range(v).start); slot += len(axis_range(v))
            zoff[rep] = (slot, axis_range(w).start); slot += len(axis_range(w))
        self.n_local_pots = slot

        pix = np.zeros(L, dtype=np.int64)
        piy = np.zeros(L, dtype=np.int64)
        piz = np.zeros(L, dtype=np.int64)
        for n, (t, (x, y, z)) in enumerate(entries):
            rep = rep_of[t]
            ex, ey, ez = (x, y, z) if t == rep else (x, z, y)
            pix[n] = xoff[rep][0] + (ex - xoff[rep][1])
            piy[n] = yoff[rep][0] + (ey - yoff[rep][1])
            piz[n] = zoff[rep][0] + (ez - zoff[rep][1])
        self.pix, self.piy, self.piz = pix, piy, piz

        # Symmetry orbits of support points under {id, central, swap, both}.
        orbit_id = np.zeros(L, dtype=np.int64)
        seen: dict[int, int] = {}
        n_orbits = 0
        for n, (t, (x, y, z)) in enumerate(entries):
            u, v, w = t
            sw = swap_partner(t)
            members = [
                flat_index[t, (x, y, z)],
                flat_index[t, (u - x, v - y, w - z)],
                flat_index[sw, (x, z, y)],
                flat_index[sw, (u - x, w - z, v - y)],
            ]
            canon = min(members)
            if canon not in seen:
                seen[canon] = n_orbits
                n_orbits += 1
            orbit_id[n] = seen[canon]
        self.orbit_id = orbit_id
        self.n_orbits = n_orbits
        counts = np.zeros(n_orbits)
        np.add.at(counts, orbit_id, 1.0)
        self.orbit_counts = counts

        # Marginal accumulation slots for the x- and y-side projections.
        xslot: dict[tuple[int, int], int] = {}
        x_owner: list[int] = []
        yslot: dict[tuple[int, int], int] = {}
        y_owner: list[int] = []
        for ti, t in enumerate(SBAR8):
            for x in axis_range(t[0]):
                xslot[ti, x] = len(x_owner)
                x_owner.append(ti)
            for y in axis_range(t[1]):
                yslot[ti, y] = len(y_owner)
                y_owner.append(ti)
        self.xseg = np.array([xslot[SBAR8.index(t), pt[0]] for t, pt in entries], dtype=np.int64)
        self.yseg = np.array([yslot[SBAR8.index(t), pt[1]] for t, pt in entries], dtype=np.int64)
        self.x_owner = np.array(x_owner, dtype=np.int64)
        self.y_owner = np.array(y_owner, dtype=np.int64)
        self.n_xslots = len(x_owner)
        self.n_yslots = len(y_owner)

        # Occurrence maps for the alpha weights (left factor and complement).
        self.al_left = np.array([self.s4_index[pt] for _, pt in entries], dtype=np.int64)
        self.al_right = np.array(
            [self.s4_index[(t[0] - pt[0], t[1] - pt[1], t[2] - pt[2])] for t, pt in entries],
            dtype=np.int64)
        self.idx112 = self.s4_index[1, 1, 2]
        self.idx121 = self.s4_index[1, 2, 1]
        self.idx211 = self.s4_index[2, 1, 1]

        # Parameter vector layout.
        self.n_params = 9 + 9 + self.n_local_pots + 2
        self.lam_sl = slice(0, 9)
        self.mu_sl = slice(9, 18)
        self.pot_sl = slice(18, 18 + self.n_local_pots)

        self.entries_by_rep = {
            rep: [(n, pt) for n, (t, pt) in enumerate(entries) if t == rep]
            for rep in self.reps
        }
        self._jitted = None

    # -- weight tables ------------------------------------------------------

    def consts_for_q(self, q: int) -> dict:
        from .value import level4_value, level8_value_convolution

        w8m = np.zeros(len(S8))
        w8n = np.zeros(len(S8))
        w8p = np.zeros(len(S8))
        for n, (i, j, k) in enumerate(S8):
            if i == 0:
                w8p[n] = math.log(level8_value_convolution((j, k), q))
            elif j == 0:
                w8m[n] = math.log(level8_value_convolution((i, k), q))
            elif k == 0:
                w8n[n] = math.log(level8_value_convolution((i, j), q))
        w4m = np.zeros(len(S4))
        w4n = np.zeros(len(S4))
        w4p = np.zeros(len(S4))
        for n, (i, j, k) in enumerate(S4):
            if min(i, j, k) > 0:
                continue
            nz = tuple(c for c in (i, j, k) if c != 0)
            value = 1 if len(nz) < 2 else level4_value((nz[0], nz[1]), q)
            if i == 0:
                w4p[n] = math.log(value)
            elif j == 0:
                w4m[n] = math.log(value)
            else:
                w4n[n] = math.log(value)
        return {
            "w8m": jnp.array(w8m), "w8n": jnp.array(w8n), "w8p": jnp.array(w8p),
            "w4m": jnp.array(w4m), "w4n": jnp.array(w4n), "w4p": jnp.array(w4p),
            "lnq": jnp.array(math.log(q)),
            "lnq2": jnp.array(math.log(q + 2)),
        }

    # -- differentiable evaluation -------------------------------------------

    def _weights(self, theta):
        """Map raw parameters to (a, locw, b, bt)."""
        lam = theta[self.lam_sl]
        mu = theta[self.mu_sl]
        pots = theta[self.pot_sl]
        logits8 = lam[self.i8] + (mu[self.j8] + mu[self.k8])
        a = jax.nn.softmax(logits8)
        raw = pots[self.pix] + pots[self.piy] + pots[self.piz]
        osum = jax.ops.segment_sum(raw, self.orbit_id, self.n_orbits)
        sym = (osum / jnp.asarray(self.orbit_counts))[self.orbit_id]
        smax = jax.ops.segment_max(sym, self.ent_t, len(SBAR8))
        ex = jnp.exp(sym - smax[self.ent_t])
        denom = jax.ops.segment_sum(ex, self.ent_t, len(SBAR8))
        locw = ex / denom[self.ent_t]
        b = jax.nn.sigmoid(theta[-2])
        bt = jax.nn.sigmoid(theta[-1])
        return a, locw, b, bt

    def _quantities(self, theta, consts):
        """All bound quantities: nu, lnQ (two routes), lnR, lnM, C3/D3/E3."""
        a, locw, b, bt = self._weights(theta)
        A = jax.ops.segment_sum(a, self.i8, 9)
        B = jax.ops.segment_sum(a, self.j8, 9)
        SAlnA = jnp.sum(xlogy(A, A))
        SBlnB = jnp.sum(xlogy(B, B))
        c3 = SAlnA - SBlnB

        a8 = a[self.sbar8_in_s8]
        mx = jax.ops.segment_sum(locw, self.xseg, self.n_xslots)
        ex_t = jax.ops.segment_sum(xlogy(mx, mx), self.x_owner, len(SBAR8))
        my = jax.ops.segment_sum(locw, self.yseg, self.n_yslots)
        ey_t = jax.ops.segment_sum(xlogy(my, my), self.y_owner, len(SBAR8))
        d3 = jnp.dot(a8, ex_t - ey_t)

        aw = a8[self.ent_t] * locw
        alpha = (jax.ops.segment_sum(aw, self.al_left, len(S4))
                 + jax.ops.segment_sum(aw, self.al_right, len(S4)))
        a112 = alpha[self.idx112]
        a121 = alpha[self.idx121]
        a211 = alpha[self.idx211]

        lnq = consts["lnq"]
        lnQ = jnp.dot(a, consts["w8m"]) + jnp.dot(alpha, consts["w4m"]) \
            + (a112 + a211 * bt) * lnq
        lnQn = jnp.dot(a, consts["w8n"]) + jnp.dot(alpha, consts["w4n"]) \
            + (a121 + a211 * bt) * lnq
        lnR = jnp.dot(a, consts["w8p"]) + jnp.dot(alpha, consts["w4p"]) \
            + ((a112 + a121) * b + a211 * (1.0 - bt)) * lnq

        hb = xlogy(b, b) + xlogy(1.0 - b, 1.0 - b)
        hbt = xlogy(bt, bt) + xlogy(1.0 - bt, 1.0 - bt)
        e3 = (a211 * bt * LN2 - a112 * hb) - (a112 * b * LN2 - a211 * hbt)

        lnM = -SAlnA - jnp.dot(a8, ex_t) + (a112 + a121 + a211) * LN2 \
            - a211 * (bt * (LN2 + jnp.log(bt)) + xlogy(1.0 - bt, 1.0 - bt))
        nu = (4.0 * consts["lnq2"] - lnM) / lnQ
        return {"nu": nu, "lnQ": lnQ, "lnQn": lnQn, "lnR": lnR, "lnM": lnM,
                "c3": c3, "d3": d3, "e3": e3, "a": a, "locw": locw, "b": b, "bt": bt,
                "alpha": alpha}

    def jitted(self):
        """(valjac, diag): jitted evaluation helpers."""
        if self._jitted is None:
            def core(theta, consts, k_target):
                qt = self._quantities(theta, consts)
                eq = qt["lnR"] - k_target * qt["lnQ"]
                return jnp.stack([qt["nu"], eq, qt["c3"], qt["d3"], qt["e3"]])

            valjac = jax.jit(lambda th, c, k: (core(th, c, k), jax.jacrev(core)(th, c, k)))
            diag = jax.jit(self._quantities)
            self._jitted = (valjac, diag)
        return self._jitted


_STRUCTURE: Optional[_Structure] = None


def structure() -> _Structure:
    global _STRUCTURE
    if _STRUCTURE is None:
        _STRUCTURE = _Structure()
    return _STRUCTURE


# ---------------------------------------------------------------------------
# Potential parametrization (public view)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialParametrization:
    """Unconstrained potentials inducing a feasible-by-construction point.

    ``lam`` and ``mu`` are the global potentials (mu is shared by the second
    and third coordinate, which yields the j/k exchange symmetry); ``local``
    holds one per-coordinate potential block per swap-orbit representative;
    b and b_tilde are stored in logit form.
    """

    theta: np.ndarray

    def to_paramset(self, q: int) -> ParamSet:
        return rationalize(np.asarray(self.theta, dtype=float), q)


def rationalize(theta: np.ndarray, q: int) -> ParamSet:
    """Exact-rational snapshot of the point induced by raw parameters.

    Weights are taken as exact binary rationals of their double values, the
    j/k mirror and the local symmetry copies are assigned (not re-derived),
    and each distribution is renormalized by its exact total, so C1/D1 hold
    exactly and the log-space residuals are preserved to rounding.
    """
    st = structure()
    _, diag = st.jitted()
    consts = st.consts_for_q(q)
    out = diag(jnp.asarray(theta), consts)
    a_np = np.asarray(out["a"])
    locw_np = np.asarray(out["locw"])
    b = float(out["b"])
    bt = float(out["bt"])

    a_frac: dict[Triple, Fraction] = {}
    for t in S8:
        i, j, k = t
        canon = (i, min(j, k), max(j, k))
        a_frac[t] = Fraction(float(a_np[st.s8_index[canon]]))
    total = sum(a_frac.values())
    a_dist = Distribution({t: v / total for t, v in a_frac.items()})

    locals_: dict[Triple, Distribution] = {}
    for rep in st.reps:
        w = {pt: Fraction(float(locw_np[n])) for n, pt in st.entries_by_rep[rep]}
        tot = sum(w.values())
        rep_dist = Distribution({pt: v / tot for pt, v in w.items()})
        locals_[rep] = rep_dist
        partner = swap_partner(rep)
        if partner != rep:
            locals_[partner] = Distribution(
                {(x, z, y): v for (x, y, z), v in rep_dist.items()})

    eps = 1e-9
    b = min(max(b, eps), 1 - eps)
    bt = min(max(bt, eps), 1 - eps)
    return ParamSet(q=q, a=a_dist, locals=locals_, b=Fraction(b), b_tilde=Fraction(bt))


# ---------------------------------------------------------------------------
# Search configuration
# ---------------------------------------------------------------------------


def default_threads() -> int:
    env = os.environ.get("CWLASER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SearchConfig:
    """Deterministic search schedule for one target."""

    qs: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8, 9, 10)
    restarts: int = 32
    seed: int = 0
    maxiter: int = 600
    margin: float = 1e-7          # interior margin on the inequality families
    k_tol: float = 1e-6           # |lnR/lnQ - k| acceptance
    sigma_ladder: tuple[float, ...] = (0.05, 0.15, 0.35, 0.7, 1.2)
    min_weight: float = 1e-12     # strict-interior floor; smaller is rejected
    threads: Optional[int] = None
    prune_after: int = 4          # coarse restarts before dropping weak q
    prune_slack: float = 0.05
    continuation: bool = True     # ramp k from 1.0 for far-away targets
    continuation_step: float = 0.5

    def resolved_threads(self) -> int:
        return self.threads if self.threads else default_threads()

    def to_json_dict(self) -> dict:
        return {
            "qs": list(self.qs), "restarts": self.restarts, "seed": self.seed,
            "maxiter": self.maxiter, "margin": self.margin, "k_tol": self.k_tol,
            "sigma_ladder": list(self.sigma_ladder), "min_weight": self.min_weight,
            "threads": self.threads, "prune_after": self.prune_after,
            "prune_slack": self.prune_slack, "continuation": self.continuation,
            "continuation_step": self.continuation_step,
        }


def searchconfig_from_json_dict(doc: Mapping) -> SearchConfig:
    kwargs = dict(doc)
    for key in ("qs", "sigma_ladder"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    unknown = set(kwargs) - {f.name for f in fields(SearchConfig)}
    if unknown:
        raise ValueError(f"unknown search-config fields: {sorted(unknown)}")
    return SearchConfig(**kwargs)


@dataclass(frozen=True)
class Candidate:
    """One verified local solution (per_q holds the per-q winners of a search)."""

    nu: float
    k: float
    q: int
    theta: np.ndarray
    certificate: BoundCertificate
    per_q: Optional[dict[int, "Candidate"]] = None


class SearchFailure(RuntimeError):
    """No feasible verified point was found for a target."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# Local solves
# ---------------------------------------------------------------------------


class _Evaluator:
    """Caches the jitted (values, jacobian) evaluation at the current x."""

    def __init__(self, q: int, k_target: float):
        st = structure()
        self._valjac, _ = st.jitted()
        self._consts = st.consts_for_q(q)
        self._k = k_target
        self._key: Optional[bytes] = None
        self._vals: Optional[np.ndarray] = None
        self._jac: Optional[np.ndarray] = None
        self.calls = 0

    def at(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        key = x.tobytes()
        if key != self._key:
            vals, jac = self._valjac(jnp.asarray(x), self._consts, self._k)
            self._vals = np.asarray(vals)
            self._jac = np.asarray(jac)
            self._key = key
            self.calls += 1
        return self._vals, self._jac


def _slsqp(ev: _Evaluator, x0: np.ndarray, margin: float, maxiter: int,
           bound_pot: float = 14.0) -> np.ndarray:
    def obj(x):
        v, j = ev.at(x)
        return v[0], j[0]

    def eq_f(x):
        return ev.at(x)[0][1]

    def eq_j(x):
        return ev.at(x)[1][1]

    def ineq_f(x):
        return ev.at(x)[0][2:5] - margin

    def ineq_j(x):
        return ev.at(x)[1][2:5]

    bounds = [(-bound_pot, bound_pot)] * len(x0)
    with warnings.catch_warnings():
        # SLSQP briefly steps outside the box bounds and scipy warns while
        # clipping; the clipped iterates are exactly what we want.
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            obj, x0, jac=True, method="SLSQP", bounds=bounds,
            constraints=[
                {"type": "eq", "fun": eq_f, "jac": eq_j},
                {"type": "ineq", "fun": ineq_f, "jac": ineq_j},
            ],
            options={"maxiter": maxiter, "ftol": 1e-12},
        )
    return np.asarray(res.x, dtype=float)


def _polish_equality(ev: _Evaluator, x: np.ndarray, tol: float, iters: int = 25) -> np.ndarray:
    """Newton steps along the constraint gradient to pin ln R = k ln Q.

    This is the scalar reweighting between boundary-heavy and interior-heavy
    mass: the minimum-norm step on the single equality, leaving the objective
    unchanged to second order.
    """
    for _ in range(iters):
        vals, jac = ev.at(x)
        eq = vals[1]
        if abs(eq) <= tol:
            break
        g = jac[1]
        gg = float(np.dot(g, g))
        if gg <= 0:
            break
        x = x - (eq / gg) * g
    return x


def _verify_candidate(st: _Structure, x: np.ndarray, q: int, k_target: float,
                      cfg: SearchConfig, meta: dict) -> Optional[Candidate]:
    """Rationalize, re-check independently, and wrap into a certificate."""
    _, diag = st.jitted()
    out = diag(jnp.asarray(x), st.consts_for_q(q))
    wmin = min(float(np.min(np.asarray(out["a"]))), float(np.min(np.asarray(out["locw"]))))
    if wmin < cfg.min_weight:
        return None
    try:
        pset = rationalize(x, q)
        report = check_all(pset, CERTIFICATE_TOLERANCES)
        if not report.passed:
            return None
        result = evaluate_bound(pset)
        if abs(result.k - k_target) > cfg.k_tol:
            return None
        cert = make_certificate(pset, meta=meta)
    except (InfeasibleParamError, ValueError):
        return None
    return Candidate(nu=cert.result.nu, k=cert.result.k, q=q,
                     theta=np.array(x), certificate=cert)


def _starts_for(st: _Structure, cfg: SearchConfig, q: int,
                warm: Sequence[np.ndarray]) -> list[np.ndarray]:
    n = st.n_params
    starts: list[np.ndarray] = [np.asarray(w, dtype=float) for w in warm]
    starts.append(np.zeros(n))
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(q,))
    rng = np.random.Generator(np.random.PCG64(ss))
    i = 0
    while len(starts) < cfg.restarts:
        sigma = cfg.sigma_ladder[i % len(cfg.sigma_ladder)]
        x = rng.normal(0.0, sigma, n)
        x[-2:] = rng.normal(0.0, 0.5, 2)
        starts.append(x)
        i += 1
    return starts[: max(cfg.restarts, len(warm) + 1)]


def _attempt(ev: _Evaluator, st: _Structure, x0: np.ndarray, q: int, k_target: float,
             cfg: SearchConfig, meta: dict) -> Optional[Candidate]:
    """One local solve; on verification rejection, retry warm with a larger
    budget (rescues runs truncated by maxiter with constraints near-missed)."""
    x = np.asarray(x0, dtype=float)
    maxiter = cfg.maxiter
    for _ in range(3):
        x = _slsqp(ev, x, cfg.margin, maxiter)
        x = _polish_equality(ev, x, tol=0.1 * cfg.k_tol)
        cand = _verify_candidate(st, x, q, k_target, cfg, meta)
        if cand is not None:
            return cand
        maxiter *= 2
    return None


def _search_single_q(q: int, k_target: float, cfg: SearchConfig,
                     warm: Sequence[np.ndarray], meta: dict) -> Optional[Candidate]:
    st = structure()
    ev = _Evaluator(q, k_target)
    best: Optional[Candidate] = None
    for x0 in _starts_for(st, cfg, q, warm):
        cand = _attempt(ev, st, x0, q, k_target, cfg, meta)
        if cand and (best is None or cand.nu < best.nu):
            best = cand
    if best is not None:
        # Final polish from the incumbent with a longer budget.
        cand = _attempt(ev, st, best.theta, q, k_target,
                        replace(cfg, maxiter=2 * cfg.maxiter), meta)
        if cand and cand.nu < best.nu:
            best = cand
    return best


def optimize_omega_candidate(k_target: float, cfg: SearchConfig = SearchConfig(),
                             warm: Optional[Mapping[int, Sequence[np.ndarray]]] = None
                             ) -> Candidate:
    """Best verified candidate with ln R / ln Q = k_target.

    Cold targets far from k = 1 are reached by a deterministic continuation
    ramp (light solves stepping k from 1.0, warm-chained per q) before the
    full multi-start at the target; this keeps distant targets (e.g. k = 3)
    out of poor local basins.  Raises SearchFailure when no feasible
    verified point exists.
    """
    if k_target <= 0:
        raise ValueError("k_target must be positive")
    if not warm and cfg.continuation and abs(k_target - 1.0) > cfg.continuation_step:
        ramp: list[float] = []
        k = 1.0
        step = math.copysign(cfg.continuation_step, k_target - 1.0)
        while abs(k_target - k) > cfg.continuation_step:
            ramp.append(k)
            k += step
        light = replace(cfg, restarts=max(3, cfg.restarts // 8), continuation=False)
        chain: dict[int, list[np.ndarray]] = {}
        for kk in ramp:
            try:
                cand = _solve_at_k(kk, light, chain)
            except SearchFailure:
                continue
            per_q = cand.per_q or {cand.q: cand}
            for q, c in per_q.items():
                chain.setdefault(q, [])
                chain[q] = [np.array(c.theta)] + chain[q][:1]
            # Narrow the remaining ramp to the competitive q values; the
            # final solve still covers the full configured range.
            keep = tuple(sorted(q for q, c in per_q.items()
                                if c.nu <= cand.nu + cfg.prune_slack))
            if keep:
                light = replace(light, qs=keep)
        return _solve_at_k(k_target, cfg, chain)
    return _solve_at_k(k_target, cfg, warm or {})


def _solve_at_k(k_target: float, cfg: SearchConfig,
                warm: Mapping[int, Sequence[np.ndarray]]) -> Candidate:
    """Multi-start search at one k (no continuation)."""
    meta = {"k_target": k_target, "seed": cfg.seed, "restarts": cfg.restarts,
            "qs": list(cfg.qs)}
    results: dict[int, Optional[Candidate]] = {}

    def run(qs: Iterable[int], c: SearchConfig,
            extra_warm: Optional[Mapping[int, Sequence[np.ndarray]]] = None
            ) -> dict[int, Optional[Candidate]]:
        qs = list(qs)
        out: dict[int, Optional[Candidate]] = {}

        def warm_for(q: int) -> list[np.ndarray]:
            ws = list(warm.get(q, ()))
            if extra_warm and q in extra_warm:
                ws = list(extra_warm[q]) + ws
            return ws

        threads = min(c.resolved_threads(), len(qs))
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futs = {q: pool.submit(_search_single_q, q, k_target, c,
                                       warm_for(q), meta) for q in qs}
                for q in qs:
                    out[q] = futs[q].result()
        else:
            for q in qs:
                out[q] = _search_single_q(q, k_target, c, warm_for(q), meta)
        return out

    if cfg.restarts > cfg.prune_after and len(cfg.qs) > 1:
        coarse = run(cfg.qs, replace(cfg, restarts=min(cfg.prune_after, cfg.restarts)))
        feasible = {q: c for q, c in coarse.items() if c is not None}
        if feasible:
            best_nu = min(c.nu for c in feasible.values())
            keep = [q for q, c in feasible.items() if c.nu <= best_nu + cfg.prune_slack]
        else:
            keep = list(cfg.qs)
        results.update(coarse)
        fine = run(keep, cfg,
                   extra_warm={q: [coarse[q].theta] for q in keep if coarse.get(q)})
        for q, c in fine.items():
            prev = results.get(q)
            if c is not None and (prev is None or c.nu < prev.nu):
                results[q] = c
    else:
        results = run(cfg.qs, cfg)

    candidates = [c for c in results.values() if c is not None]
    if not candidates:
        raise SearchFailure(
            f"no feasible point found for k={k_target} over q in {cfg.qs}",
            diagnostics={"k_target": k_target})
    best = min(candidates, key=lambda c: (c.nu, c.q))
    return replace(best, per_q={q: c for q, c in results.items() if c is not None})


def optimize_omega(k_target: float, cfg: SearchConfig = SearchConfig(),
                   warm: Optional[Mapping[int, Sequence[np.ndarray]]] = None
                   ) -> BoundCertificate:
    """Certificate wrapper around optimize_omega_candidate."""
    return optimize_omega_candidate(k_target, cfg, warm).certificate


# ---------------------------------------------------------------------------
# Derived searches
# ---------------------------------------------------------------------------


def optimize_alpha(cfg: SearchConfig = SearchConfig(),
                   k_lo: float = 0.30, k_hi: float = 0.35,
                   nu_accept: float = 2.0 + 1e-4,
                   k_resolution: float = 1e-4) -> BoundCertificate:
    """Largest k with optimized nu <= nu_accept, by bisection over k.

    Returns the witnessing certificate at the best accepted k.
    """
    searcher = _BisectionSearcher(cfg)
    lo_cert = searcher.solve(k_lo)
    if lo_cert.result.nu > nu_accept:
        raise SearchFailure(f"nu({k_lo}) = {lo_cert.result.nu:.6f} > {nu_accept}; "
                            "no bracket for the dual exponent")
    best = lo_cert
    hi_cert = searcher.solve(k_hi)
    if hi_cert.result.nu <= nu_accept:
        return hi_cert  # bracket too small; report the best point seen
    lo, hi = k_lo, k_hi
    while hi - lo > k_resolution:
        mid = 0.5 * (lo + hi)
        cert = searcher.solve(mid)
        if cert.result.nu <= nu_accept:
            best, lo = cert, mid
        else:
            hi = mid
    return best


def solve_mu(cfg: SearchConfig = SearchConfig(),
             k_lo: float = 0.50, k_hi: float = 0.56,
             k_resolution: float = 1e-4) -> tuple[float, BoundCertificate]:
    """Upper bound on the solution of omega(mu) = 1 + 2 mu.

    Bisects f(k) = nu(k) - (1 + 2k); f is positive at k_lo and negative at
    k_hi, and the returned k is the certified (f <= 0) end of the final
    bracket, together with its certificate.
    """
    searcher = _BisectionSearcher(cfg)

    def f(cert: BoundCertificate) -> float:
        return cert.result.nu - (1.0 + 2.0 * cert.result.k)

    lo_cert = searcher.solve(k_lo)
    if f(lo_cert) <= 0:
        return k_lo, lo_cert
    hi_cert = searcher.solve(k_hi)
    if f(hi_cert) > 0:
        raise SearchFailure(f"f({k_hi}) = {f(hi_cert):.6f} > 0; no sign change in bracket")
    lo, hi = k_lo, k_hi
    best = hi_cert
    while hi - lo > k_resolution:
        mid = 0.5 * (lo + hi)
        cert = searcher.solve(mid)
        if f(cert) <= 0:
            best, hi = cert, mid
        else:
            lo = mid
    return hi, best


class _BisectionSearcher:
    """optimize_omega driver with warm-start continuation across k values."""

    def __init__(self, cfg: SearchConfig):
        self.cfg = cfg
        self.warm: dict[int, list[np.ndarray]] = {}
        self.solved: dict[float, BoundCertificate] = {}

    def solve(self, k: float) -> BoundCertificate:
        if k in self.solved:
            return self.solved[k]
        cfg = self.cfg
        if self.warm:
            # Continuation: fewer fresh restarts, focused on promising q.
            qs = tuple(sorted(self.warm))
            cfg = replace(cfg, restarts=max(4, cfg.restarts // 4), qs=qs or cfg.qs)
        cand = optimize_omega_candidate(k, cfg, warm=self.warm)
        per_q = cand.per_q or {cand.q: cand}
        if not self.warm:
            # Fix the continuation q set to the competitive values found on
            # the first (full-range) solve.
            keep = {q for q, c in per_q.items()
                    if c.nu <= cand.nu + self.cfg.prune_slack}
        else:
            keep = set(per_q)
        for q in sorted(keep):
            self.warm.setdefault(q, [])
            self.warm[q] = [np.array(per_q[q].theta)] + self.warm[q][:1]
        self.solved[k] = cand.certificate
        return cand.certificate


def sweep_table(ks: Sequence[float], cfg: SearchConfig = SearchConfig()
                ) -> list[tuple[float, Optional[BoundCertificate], Optional[str]]]:
    """optimize_omega per k with continuation; failures recorded, not raised."""
    searcher = _BisectionSearcher(cfg)
    rows: list[tuple[float, Optional[BoundCertificate], Optional[str]]] = []
    for k in ks:
        try:
            rows.append((k, searcher.solve(k), None))
        except (SearchFailure, ValueError) as exc:
            rows.append((k, None, str(exc)))
    return rows

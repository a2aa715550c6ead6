"""Value engine: shape tables, Q/R/M, bound results, certificates."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from cwlaser.forms import MatMulShape, component, recognize_matmul
from cwlaser.indexsets import SBAR4, SBAR8
from cwlaser.params import alpha_weights, check_all
from cwlaser.value import (
    InfeasibleParamError,
    NotAMatMulComponentError,
    bound,
    check_certificate,
    check_certificate_highprec,
    compute_M,
    compute_QR,
    evaluate_bound,
    hat_shape,
    level8_value_convolution,
    make_certificate,
    shape_of,
    shape_table,
)

from conftest import random_potential_paramset


class TestConvolution:
    def test_44_q2(self):
        assert level8_value_convolution((4, 4), 2) == 70
        assert 70 == 2**4 + 12 * 2**2 + 6

    def test_35_q1(self):
        assert level8_value_convolution((3, 5), 1) == 16

    def test_08(self):
        for q in range(1, 11):
            assert level8_value_convolution((0, 8), q) == 1

    @pytest.mark.parametrize("q", range(1, 11))
    def test_closed_forms_all_q(self, q):
        assert level8_value_convolution((1, 7), q) == 4 * q
        assert level8_value_convolution((2, 6), q) == 6 * q * q + 4
        assert level8_value_convolution((3, 5), q) == 4 * q**3 + 12 * q
        assert level8_value_convolution((4, 4), q) == q**4 + 12 * q**2 + 6

    def test_symmetric_in_pair(self):
        assert level8_value_convolution((5, 3), 4) == level8_value_convolution((3, 5), 4)


class TestShapeOf:
    def test_examples(self):
        assert shape_of(8, (1, 0, 7), 2) == MatMulShape(8, 1, 1)
        assert shape_of(4, (2, 2, 0), 3) == MatMulShape(1, 11, 1)
        assert shape_of(8, (0, 3, 5), 1) == MatMulShape(1, 1, 16)

    def test_non_matmul_rejected(self):
        with pytest.raises(NotAMatMulComponentError):
            shape_of(4, (1, 1, 2), 2)
        with pytest.raises(NotAMatMulComponentError):
            shape_of(8, (2, 3, 3), 2)

    @pytest.mark.parametrize("q", [1, 2, 3])
    def test_table_matches_symbolic_ground_truth(self, q):
        """Every table entry equals the structural recognition of the
        symbolically constructed component (both levels)."""
        table = shape_table(q)
        assert len(table.level4) == 12 and len(table.level8) == 24
        for triple, shape in table.level4.items():
            assert recognize_matmul(component(4, triple, q)) == shape, triple
        for triple, shape in table.level8.items():
            assert recognize_matmul(component(8, triple, q)) == shape, triple
        for triple in SBAR4:
            assert recognize_matmul(component(4, triple, q)) is None

    def test_level8_family_count(self):
        table = shape_table(2)
        # 13 isomorphism families among the 24 boundary components
        families = {}
        for triple, shape in table.level8.items():
            families.setdefault(shape, []).append(triple)
        assert len(families) == 13


class TestHatShape:
    def test_zero_alphas(self):
        assert hat_shape(0.0, 0.0, 0.5, 0.5, 3) == (0.0, 0.0, 0.0)

    def test_balanced_substitution(self):
        s = 0.4
        m, n, p = hat_shape(s, s, 0.5, 0.5, 3)
        assert m == n == pytest.approx(1.5 * s * math.log(3))
        assert p == pytest.approx(1.5 * s * math.log(3))

    def test_single_tensor_case(self):
        # alpha112 = 0, alpha211 = 2m/N reproduces the single-tensor product
        # <q^(2bm), q^(2bm), q^(2(1-b)m)> per unit N
        q, b = 4, 0.3
        m_exp, n_exp, p_exp = hat_shape(0.0, 2.0, b, b, q)
        assert m_exp == n_exp == pytest.approx(2 * b * math.log(q))
        assert p_exp == pytest.approx(2 * (1 - b) * math.log(q))

    def test_q1_trivial(self):
        assert hat_shape(0.5, 0.5, 0.5, 0.5, 1) == (0.0, 0.0, 0.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            hat_shape(0.1, 0.1, 0.0, 0.5, 2)
        with pytest.raises(ValueError):
            hat_shape(-0.1, 0.1, 0.5, 0.5, 2)


class TestComputeQR:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_dual_route_crosscheck(self, seed):
        p = random_potential_paramset(seed, q=3)
        lnQ, lnR = compute_QR(p)  # raises if the two routes disagree
        assert lnQ > 0 and lnR > 0

    def test_symmetric_point_is_square(self):
        p = random_potential_paramset(99, q=2)
        # enforce full exchange symmetry of the raw potentials: lam == mu
        from cwlaser import optimize as op
        st = op.structure()
        theta = np.zeros(st.n_params)
        p0 = op.rationalize(theta, 5)
        lnQ, lnR = compute_QR(p0)
        assert lnR == pytest.approx(lnQ, rel=1e-12)


class TestComputeM:
    def test_entropy_factor_uniform_projection(self):
        p = random_potential_paramset(4, q=2)
        alpha = alpha_weights(p.a, p.locals)
        lnM = compute_M(p, alpha)
        A, _, _ = p.a.projections()
        ha = -sum(float(v) * math.log(v) for v in A.values())
        assert lnM >= ha - 1e-12  # local entropies and hat factor add

    def test_positive_at_feasible_points(self):
        for seed in range(6):
            p = random_potential_paramset(seed, q=2)
            assert compute_M(p) > 0

    def test_hat_terms_vanish_when_alpha_zero(self):
        # with alpha112 = alpha211 = 0 the last two terms vanish; emulate by
        # comparing against the explicit two-entropy formula
        p = random_potential_paramset(8, q=2)
        alpha = alpha_weights(p.a, p.locals)
        lnM = compute_M(p, alpha)
        A, _, _ = p.a.projections()
        base = -sum(float(v) * math.log(v) for v in A.values())
        for t in SBAR8:
            At, _, _ = p.locals[t].projections()
            base -= float(p.a[t]) * sum(float(v) * math.log(v) for v in At.values())
        a112, a121, a211 = (float(alpha[1, 1, 2]), float(alpha[1, 2, 1]),
                            float(alpha[2, 1, 1]))
        bt = float(p.b_tilde)
        hat = (a112 + a121 + a211) * math.log(2) \
            - a211 * (bt * math.log(2 * bt) + (1 - bt) * math.log(1 - bt))
        assert lnM == pytest.approx(base + hat, rel=1e-14)


class TestBound:
    def test_definitional_identity(self):
        for seed in (0, 5):
            p = random_potential_paramset(seed, q=4)
            r = evaluate_bound(p)
            assert r.lnM + r.nu * r.lnQ == pytest.approx(4 * math.log(p.q + 2), rel=1e-12)
            assert r.M * r.Q**r.nu == pytest.approx(float((p.q + 2) ** 4), rel=1e-9)

    def test_synthetic_nu2_identity(self):
        p = random_potential_paramset(2, q=3)
        r = evaluate_bound(p)
        # if lnM were exactly 4 ln(q+2) - 2 lnQ the bound would be nu = 2
        nu_from = (4 * math.log(p.q + 2) - (4 * math.log(p.q + 2) - 2 * r.lnQ)) / r.lnQ
        assert nu_from == pytest.approx(2.0)

    def test_bound_gates_on_constraints(self, uniform_cert_paramset):
        r = bound(uniform_cert_paramset)
        assert r.nu > 2


@pytest.fixture(scope="module")
def uniform_cert_paramset():
    from cwlaser import optimize as op
    st = op.structure()
    return op.rationalize(np.zeros(st.n_params), 5)


@pytest.fixture(scope="module")
def uniform_certificate(uniform_cert_paramset):
    return make_certificate(uniform_cert_paramset, meta={"seed": 0})


class TestCertificates:
    def test_fresh_certificate_verifies(self, uniform_certificate):
        doc = json.loads(uniform_certificate.dumps())
        verdict = check_certificate(doc)
        assert verdict.passed, verdict.issues

    def test_dumps_deterministic(self, uniform_certificate):
        assert uniform_certificate.dumps() == uniform_certificate.dumps()

    def test_weight_perturbation_fails_itemized(self, uniform_certificate):
        doc = json.loads(uniform_certificate.dumps())
        # multiply one global weight by (1 + 1e-3) and renormalize exactly
        key = "1,3,4"
        w = {k: Fraction(int(v.split("/")[0]), int(v.split("/")[1]))
             for k, v in doc["params"]["a"].items()}
        w[key] *= Fraction(1001, 1000)
        total = sum(w.values())
        doc["params"]["a"] = {k: f"{(v / total).numerator}/{(v / total).denominator}"
                              for k, v in w.items()}
        verdict = check_certificate(doc)
        assert not verdict.passed
        assert any("C1" in s or "C2" in s for s in verdict.issues)

    def test_btilde_perturbation_fails(self, uniform_certificate):
        doc = json.loads(uniform_certificate.dumps())
        doc["params"]["b_tilde"] = "501/1000"
        verdict = check_certificate(doc)
        assert not verdict.passed
        assert any("differs from recomputed" in s for s in verdict.issues)

    def test_claiming_better_nu_fails(self, uniform_certificate):
        doc = json.loads(uniform_certificate.dumps())
        doc["result"]["nu"] = doc["result"]["nu"] - 1e-3
        verdict = check_certificate(doc)
        assert not verdict.passed
        assert any("nu" in s for s in verdict.issues)

    def test_parse_error_verdict(self):
        verdict = check_certificate({"nonsense": True})
        assert not verdict.passed
        assert "parse error" in verdict.issues[0]

    def test_highprec_recheck(self, uniform_certificate):
        doc = json.loads(uniform_certificate.dumps())
        verdict = check_certificate_highprec(doc, digits=50)
        assert verdict.passed, verdict.issues

    def test_infeasible_point_refused(self):
        p = _c3_violating_paramset()
        with pytest.raises(InfeasibleParamError):
            make_certificate(p)


def _c3_violating_paramset():
    """A structurally valid point with prod A^A < prod B^B."""
    from cwlaser.indexsets import S8, local_support
    from cwlaser.params import Distribution, ParamSet, uniform_distribution

    w = {t: Fraction(1, 10_000) for t in S8}
    for t in S8:
        if t[0] == 0:  # spread A, concentrate B/C mass on j=0 wing
            w[t] += Fraction(1, 100)
    for t in S8:
        if t[1] == 0:
            w[t] += Fraction(1, 10)
        if t[2] == 0:
            w[t] += Fraction(1, 10)
    # keep C1: symmetrize over j/k
    sym = {t: (w[t] + w[(t[0], t[2], t[1])]) / 2 for t in S8}
    total = sum(sym.values())
    a = Distribution({t: v / total for t, v in sym.items()})
    locals_ = {t: uniform_distribution(local_support(*t)) for t in SBAR8}
    return ParamSet(q=3, a=a, locals=locals_, b=Fraction(1, 2), b_tilde=Fraction(1, 2))


class TestConstraintGate:
    def test_c3_violation_detected(self):
        p = _c3_violating_paramset()
        report = check_all(p)
        assert not report.entry("C3").passed
        with pytest.raises(InfeasibleParamError):
            bound(p)

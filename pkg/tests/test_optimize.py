"""Optimizer: parametrization soundness, determinism, search/verify split."""

import json

import numpy as np
import pytest

from cwlaser import optimize as op
from cwlaser.indexsets import SBAR8
from cwlaser.params import CERTIFICATE_TOLERANCES, check_all, check_C1, check_C2, check_D1, check_D2
from cwlaser.value import check_certificate, evaluate_bound


@pytest.fixture(scope="module")
def tiny_cfg():
    return op.SearchConfig(qs=(5,), restarts=2, maxiter=300, threads=1, seed=7)


@pytest.fixture(scope="module")
def k1_candidate(tiny_cfg):
    return op.optimize_omega_candidate(1.0, tiny_cfg)


class TestParametrizationSoundness:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_symmetries_and_stationarity_by_construction(self, seed):
        st = op.structure()
        rng = np.random.Generator(np.random.PCG64(seed))
        theta = rng.normal(0.0, 1.0, st.n_params)
        p = op.rationalize(theta, 2)
        assert check_C1(p.a).residual == 0.0
        assert check_D1(p.locals).residual == 0.0
        assert max(abs(r) for r in check_C2(p.a).details) <= 1e-9
        assert max(abs(r) for r in check_D2(p.locals).details) <= 1e-9

    def test_rationalize_sums_exact(self):
        st = op.structure()
        p = op.rationalize(np.full(st.n_params, 0.3), 3)
        assert sum(v for _, v in p.a.items()) == 1
        for t in SBAR8:
            assert sum(v for _, v in p.locals[t].items()) == 1

    def test_potential_parametrization_wrapper(self):
        st = op.structure()
        pp = op.PotentialParametrization(np.zeros(st.n_params))
        p = pp.to_paramset(2)
        assert p.q == 2 and check_all(p).passed


class TestOptimizeOmega:
    def test_k_target_hit(self, k1_candidate):
        assert abs(k1_candidate.k - 1.0) <= 1e-6

    def test_reaches_known_square_value(self, k1_candidate):
        # the q=5 analysis of the fourth power gives 2.372927 at k=1
        assert k1_candidate.nu <= 2.37293

    def test_never_worse_than_uniform_seed(self, k1_candidate, tiny_cfg):
        st = op.structure()
        seed_point = op.rationalize(np.zeros(st.n_params), 5)
        seed_nu = evaluate_bound(seed_point).nu
        assert k1_candidate.nu <= seed_nu + 1e-9

    def test_certificate_verifies_independently(self, k1_candidate):
        doc = json.loads(k1_candidate.certificate.dumps())
        verdict = check_certificate(doc)
        assert verdict.passed, verdict.issues

    def test_inequalities_hold_at_certificate_tolerance(self, k1_candidate):
        report = check_all(k1_candidate.certificate.params, CERTIFICATE_TOLERANCES)
        assert report.passed, str(report)

    def test_deterministic_bytes(self, tiny_cfg, k1_candidate):
        again = op.optimize_omega(1.0, tiny_cfg)
        assert again.dumps() == k1_candidate.certificate.dumps()

    def test_warm_start_accepted(self, tiny_cfg, k1_candidate):
        cfg = op.SearchConfig(qs=(5,), restarts=1, maxiter=200, threads=1, seed=7)
        cert = op.optimize_omega(1.02, cfg, warm={5: [k1_candidate.theta]})
        assert abs(cert.result.k - 1.02) <= 1e-6
        assert cert.result.nu < 2.3901  # close to the k=1 level

    def test_invalid_k(self, tiny_cfg):
        with pytest.raises(ValueError):
            op.optimize_omega(-0.5, tiny_cfg)

    def test_search_failure_when_floor_unreachable(self):
        cfg = op.SearchConfig(qs=(5,), restarts=1, maxiter=40, threads=1,
                              min_weight=0.5)  # impossible interior floor
        with pytest.raises(op.SearchFailure):
            op.optimize_omega(1.0, cfg)


class TestSweep:
    def test_rows_and_failures_recorded(self, tiny_cfg):
        cfg = op.SearchConfig(qs=(5,), restarts=1, maxiter=250, threads=1, seed=7)
        rows = op.sweep_table([1.0, -1.0], cfg)
        assert len(rows) == 2
        k0, cert0, err0 = rows[0]
        assert cert0 is not None and err0 is None
        # invalid target recorded as a failure, sweep continues
        k1, cert1, err1 = rows[1]
        assert cert1 is None and err1 is not None


class TestThreadedDeterminism:
    def test_threads_do_not_change_result(self):
        cfg1 = op.SearchConfig(qs=(4, 5), restarts=2, maxiter=200, threads=1, seed=3)
        cfg2 = op.SearchConfig(qs=(4, 5), restarts=2, maxiter=200, threads=2, seed=3)
        a = op.optimize_omega(1.0, cfg1)
        b = op.optimize_omega(1.0, cfg2)
        assert a.dumps() == b.dumps()

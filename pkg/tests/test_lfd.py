import math

import numpy as np
import pytest
from scipy.integrate import quad

from meanchange.distributions import BetaDistribution, EmpiricalDistribution, RngStream, cgf_prime
from meanchange.exceptions import (
    DegenerateDistributionError,
    DomainError,
    InfeasibleError,
    NoTiltNeededError,
    ParameterError,
)
from meanchange.lfd import (
    MeanChangeParams,
    TiltedLfd,
    kl_lfd,
    kl_small_delta,
    lambda_star_small_delta,
    solve_lambda_star,
    tilted_llr,
)

P0 = BetaDistribution(4, 16)

# brentq on scipy.integrate.quad tilted means (independent of the Jacobi rule)
ORACLE_LAMBDA = {0.21: 1.2679042983235882, 0.25: 5.639124634802675, 0.3: 10.10866093402624}
ORACLE_KL = {0.21: 0.006411916543689888, 0.25: 0.1477587669185081, 0.3: 0.5447709040126818}


def bisection_oracle(dist, eta, lo=0.0, hi=50.0):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cgf_prime(dist, mid) < eta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestSolveLambdaStar:
    def test_eta_equal_mu0(self):
        with pytest.raises(NoTiltNeededError):
            solve_lambda_star(P0, 0.2)

    def test_eta_below_mu0(self):
        with pytest.raises(NoTiltNeededError):
            solve_lambda_star(P0, 0.1)

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            solve_lambda_star(EmpiricalDistribution([0.1, 0.4]), 0.4)

    @pytest.mark.parametrize("eta", [0.21, 0.25, 0.3])
    def test_matches_independent_oracle(self, eta):
        lfd = solve_lambda_star(P0, eta)
        assert lfd.lam == pytest.approx(ORACLE_LAMBDA[eta], abs=1e-9)
        assert lfd.kl == pytest.approx(ORACLE_KL[eta], abs=1e-11)
        assert abs(cgf_prime(P0, lfd.lam) - eta) <= 1e-10
        assert lfd.lam == pytest.approx(bisection_oracle(P0, eta), abs=1e-10)

    def test_small_delta_ratio(self):
        lfd = solve_lambda_star(P0, 0.21)
        assert 0.95 <= lfd.lam * P0.var / (2 * 0.005) <= 1.05

    def test_bernoulli_closed_form(self):
        lfd = solve_lambda_star(EmpiricalDistribution([0.0, 1.0]), 0.9)
        assert lfd.lam == pytest.approx(math.log(9), abs=1e-10)

    def test_monotone_in_eta(self):
        lams = [solve_lambda_star(P0, eta).lam for eta in np.linspace(0.205, 0.6, 12)]
        assert np.all(np.diff(lams) > 0)


class TestTiltedLaw:
    @pytest.mark.parametrize("eta", [0.21, 0.25, 0.3])
    def test_normalisation_and_mean(self, eta):
        lfd = solve_lambda_star(P0, eta)
        dens = lambda x: math.exp(lfd.logpdf(x))
        mass = quad(dens, 0, 1, epsabs=1e-13, limit=200)[0]
        mean = quad(lambda x: x * dens(x), 0, 1, epsabs=1e-13, limit=200)[0]
        assert mass == pytest.approx(1.0, abs=1e-8)
        assert mean == pytest.approx(eta, abs=1e-8)

    def test_kl_chain(self):
        lfd = solve_lambda_star(P0, 0.25)
        direct = quad(lambda x: math.exp(lfd.logpdf(x)) * lfd.llr(x), 0, 1, epsabs=1e-13, limit=200)[0]
        assert kl_lfd(lfd) == pytest.approx(lfd.lam * lfd.eta - lfd.kappa, abs=1e-12)
        assert direct == pytest.approx(kl_lfd(lfd), abs=1e-9)

    def test_llr_monte_carlo_mean(self):
        lfd = solve_lambda_star(P0, 0.21)
        xs = lfd.distribution().sample(RngStream(8), 10 ** 6)
        z = lfd.llr(xs)
        assert abs(z.mean() - lfd.kl) < 3 * z.std() / math.sqrt(z.size)

    def test_sampling_law_mean(self):
        lfd = solve_lambda_star(P0, 0.21)
        assert lfd.distribution().mean == pytest.approx(0.21, abs=1e-6)


class TestTiltedLlr:
    def test_zero_crossing(self):
        lfd = solve_lambda_star(P0, 0.25)
        assert tilted_llr(lfd, lfd.kappa / lfd.lam) == pytest.approx(0.0, abs=1e-14)

    def test_degenerate_tilt(self):
        lfd = TiltedLfd(lam=0.0, kappa=0.0, eta=0.2, kl=0.0)
        assert all(tilted_llr(lfd, x) == 0 for x in (0.0, 0.3, 1.0))
        assert kl_lfd(lfd) == 0

    def test_domain(self):
        with pytest.raises(DomainError):
            tilted_llr(solve_lambda_star(P0, 0.25), 1.5)


class TestKl:
    def test_small_delta_within_ten_percent(self):
        kl = solve_lambda_star(P0, 0.21).kl
        approx = kl_small_delta(MeanChangeParams(0.2, P0.var, 0.21))
        assert approx == pytest.approx(0.0065625, abs=1e-7)
        assert kl == pytest.approx(approx, rel=0.10)

    def test_bernoulli_kl(self):
        kl = solve_lambda_star(EmpiricalDistribution([0.0, 1.0]), 0.9).kl
        oracle = 0.9 * math.log(0.9 / 0.5) + 0.1 * math.log(0.1 / 0.5)
        assert kl == pytest.approx(oracle, abs=1e-12)
        assert kl == pytest.approx(0.9 * math.log(9) - math.log(5), abs=1e-12)
        assert kl == pytest.approx(0.3681, abs=1e-4)

    def test_positive(self):
        for eta in (0.2001, 0.22, 0.5):
            assert solve_lambda_star(P0, eta).kl > 0


class TestSmallDelta:
    def test_arithmetic(self):
        p = MeanChangeParams(0.2, 0.0076190, 0.21)
        assert lambda_star_small_delta(p) == pytest.approx(0.01 / 0.0076190, rel=1e-14)
        assert lambda_star_small_delta(p) == pytest.approx(1.3125, abs=1e-4)

    def test_zero_gap(self):
        assert lambda_star_small_delta(MeanChangeParams(0.2, 0.0076190, 0.2)) == 0.0

    def test_zero_variance(self):
        with pytest.raises(DegenerateDistributionError):
            MeanChangeParams(0.2, 0.0, 0.21)

    def test_convergence_sweep(self):
        errs = []
        for delta in (1e-2, 1e-3, 1e-4):
            p = MeanChangeParams(0.2, P0.var, 0.2 + 2 * delta)
            exact = solve_lambda_star(P0, p.eta).lam
            errs.append(abs(exact - lambda_star_small_delta(p)) / exact)
        assert errs[0] > errs[1] > errs[2]


class TestParams:
    def test_delta_exact(self):
        p = MeanChangeParams(0.2, 0.0076190, 0.21)
        assert p.delta == (0.21 - 0.2) / 2
        assert p.center == pytest.approx(0.205)

    def test_variance_cap(self):
        with pytest.raises(ParameterError):
            MeanChangeParams(0.2, 0.17, 0.3)

    def test_eta_below(self):
        with pytest.raises(NoTiltNeededError):
            MeanChangeParams(0.2, 0.01, 0.1)

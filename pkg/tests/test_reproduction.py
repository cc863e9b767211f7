import math

import numpy as np
import pytest

from sdppp import (
    BinaryDeterministic,
    BinaryGaussian,
    PoissonGaussian,
    classify,
    kappa,
    kappa_d1,
    kappa_d2,
    sample_offspring,
    solve_critical_alpha,
)
from sdppp.errors import NoCriticalRootError

LN2 = math.log(2.0)
BOUNDARY_LAW = BinaryGaussian(mu=-math.sqrt(2 * LN2), sigma=1.0)
REGULAR_LAW = BinaryGaussian(mu=-(LN2 + 0.5), sigma=1.0)
LATTICE_LAW = BinaryDeterministic(-LN2, -LN2)


def test_parameter_validation():
    with pytest.raises(ValueError):
        BinaryGaussian(mu=0.0, sigma=0.0)
    with pytest.raises(ValueError):
        PoissonGaussian(m=1.0, mu=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        BinaryDeterministic(a=math.inf, b=0.0)


def test_offspring_counts():
    rng = np.random.default_rng(0)
    m = sample_offspring(LATTICE_LAW, rng)
    assert m.atoms.tolist() == [-LN2, -LN2]
    for _ in range(5):
        assert len(sample_offspring(REGULAR_LAW, rng)) == 2


def test_poisson_gaussian_mean_count():
    rng = np.random.default_rng(1)
    law = PoissonGaussian(m=2.0, mu=0.0, sigma=1.0)
    counts = np.array([len(sample_offspring(law, rng)) for _ in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 2.0) < 3 * se


def test_kappa_closed_forms():
    theta = 0.8
    assert kappa(REGULAR_LAW, theta) == pytest.approx(
        LN2 + theta * REGULAR_LAW.mu + 0.5 * theta**2
    )
    alpha = math.sqrt(2 * LN2)
    assert kappa(BOUNDARY_LAW, alpha) == pytest.approx(0.0, abs=1e-12)
    assert kappa(LATTICE_LAW, 1.0) == pytest.approx(0.0, abs=1e-12)
    law = PoissonGaussian(m=3.0, mu=-1.0, sigma=0.5)
    assert kappa(law, theta) == pytest.approx(
        math.log(3.0) - theta + 0.5 * theta**2 * 0.25
    )


@pytest.mark.parametrize(
    "law",
    [REGULAR_LAW, BOUNDARY_LAW, LATTICE_LAW,
     PoissonGaussian(m=2.0, mu=-1.4, sigma=0.8),
     BinaryDeterministic(-1.0, -0.2)],
)
def test_kappa_d1_matches_finite_differences(law):
    for theta in (0.3, 0.9, 1.7, 2.5):
        h = 1e-5
        fd = (kappa(law, theta + h) - kappa(law, theta - h)) / (2 * h)
        assert abs(kappa_d1(law, theta) - fd) < 1e-6
        fd2 = (kappa(law, theta + h) - 2 * kappa(law, theta)
               + kappa(law, theta - h)) / h**2
        assert abs(kappa_d2(law, theta) - fd2) < 1e-4


def test_solve_critical_alpha_examples():
    assert solve_critical_alpha(BOUNDARY_LAW) == pytest.approx(
        math.sqrt(2 * LN2), abs=1e-9
    )
    assert solve_critical_alpha(REGULAR_LAW) == pytest.approx(1.0, abs=1e-9)
    # the other quadratic root is 2 ln 2; the smallest must be returned
    assert solve_critical_alpha(REGULAR_LAW) < 2 * LN2
    assert solve_critical_alpha(LATTICE_LAW) == pytest.approx(1.0, abs=1e-12)


def test_solve_critical_alpha_no_root():
    with pytest.raises(NoCriticalRootError):
        solve_critical_alpha(BinaryGaussian(mu=-0.5, sigma=1.0))  # disc < 0
    with pytest.raises(NoCriticalRootError):
        solve_critical_alpha(BinaryDeterministic(0.5, -0.2))


def test_solve_critical_alpha_bisection_family():
    law = BinaryDeterministic(-1.3, -0.4)
    alpha = solve_critical_alpha(law)
    assert alpha > 0
    assert abs(kappa(law, alpha)) < 1e-10
    assert kappa_d1(law, alpha) <= 0


def test_classify_examples():
    rep = classify(BOUNDARY_LAW, math.sqrt(2 * LN2))
    assert rep.case == "boundary"
    assert rep.first_moment == pytest.approx(0.0, abs=1e-9)
    assert rep.a1_ok and rep.a3_ok and rep.xlogx_moments_ok

    rep = classify(REGULAR_LAW, 1.0)
    assert rep.case == "regular"
    assert rep.first_moment == pytest.approx(0.5 - LN2, abs=1e-9)

    rep = classify(LATTICE_LAW, 1.0)
    assert not rep.a3_ok

    rep = classify(REGULAR_LAW, 0.5)  # kappa(0.5) != 0
    assert rep.case == "invalid"


def test_smallest_root_never_supercritical():
    laws = [REGULAR_LAW, BOUNDARY_LAW, LATTICE_LAW,
            PoissonGaussian(m=2.0, mu=-1.6, sigma=1.0),
            BinaryDeterministic(-2.0, -0.1)]
    for law in laws:
        rep = classify(law, solve_critical_alpha(law))
        assert rep.case in ("regular", "boundary")


def test_mc_kappa_consistency_small():
    # light version of the law-of-large-numbers consistency check
    rng = np.random.default_rng(7)
    laws = [REGULAR_LAW, PoissonGaussian(m=2.0, mu=-1.0, sigma=0.7), LATTICE_LAW]
    for law in laws:
        for theta in (0.5, 1.2):
            sums = []
            for _ in range(20_000):
                atoms = sample_offspring(law, rng).atoms
                sums.append(float(np.exp(theta * atoms).sum()))
            sums = np.array(sums)
            se = sums.std(ddof=1) / math.sqrt(sums.size)
            assert abs(sums.mean() - math.exp(kappa(law, theta))) < 4 * se

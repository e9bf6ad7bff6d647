import numpy as np
import pytest

from stokeslame.errors import CertificationError, ConfigError, DomainError
from stokeslame.laws import (DiffusionLaw, FluidParams, SolidParams,
                             certify_constants, eval_law, eval_law_jacobian,
                             linear_law, make_law, saturating_law,
                             time_modulated_law)


def test_params_validation():
    with pytest.raises(ConfigError):
        SolidParams(mu=-1.0)
    with pytest.raises(ConfigError):
        FluidParams(linear_law(), nu=2.0)
    with pytest.raises(ConfigError):
        linear_law(0.0)
    with pytest.raises(ConfigError):
        saturating_law(1.0, -1.0)
    with pytest.raises(ConfigError):
        time_modulated_law(2.0, 1.0)
    with pytest.raises(ConfigError):
        make_law("nope")


def test_zero_at_origin():
    for law in (linear_law(2.0), saturating_law(1.0, 1.0),
                time_modulated_law(1.0, 3.0, beta=0.5)):
        out = eval_law(law, 0.3, np.zeros(2))
        assert np.all(out == 0.0)


def test_linear_law_exact(rng):
    law = linear_law(1.7)
    xi = rng.standard_normal((5, 2))
    assert np.allclose(eval_law(law, 0.5, xi), 1.7 * xi, atol=1e-15)


def test_saturating_law_values():
    law = saturating_law(1.0, 1.0)
    xi = np.array([3.0, 4.0])  # |xi| = 5
    expect = xi + xi / 6.0
    assert np.allclose(eval_law(law, 0.0, xi), expect, atol=1e-14)


def test_time_domain_checked():
    law = linear_law(1.0, t_final=1.0)
    with pytest.raises(DomainError):
        eval_law(law, 1.5, np.zeros(2))
    with pytest.raises(DomainError):
        eval_law(law, -0.1, np.zeros(2))


def test_time_modulation_bounds():
    law = time_modulated_law(1.0, 3.0, beta=0.0, t_final=2.0)
    ts = np.linspace(0.0, 2.0, 101)
    xi = np.array([1.0, 0.0])
    vals = np.array([eval_law(law, t, xi)[0] for t in ts])
    assert vals.min() >= 1.0 - 1e-12 and vals.max() <= 3.0 + 1e-12
    assert vals.max() > 2.9  # the sweep actually reaches the bounds
    assert vals.min() < 1.1


def test_jacobian_matches_finite_differences(rng):
    h = 1e-6
    for law in (saturating_law(1.0, 1.0), time_modulated_law(1.0, 3.0, beta=0.7)):
        xi = rng.standard_normal((8, 2)) * rng.uniform(0.1, 10, (8, 1))
        J = eval_law_jacobian(law, 0.4, xi)
        for d in range(2):
            e = np.zeros(2)
            e[d] = h
            fd = (eval_law(law, 0.4, xi + e) - eval_law(law, 0.4, xi - e)) / (2 * h)
            assert np.abs(J[..., :, d] - fd).max() < 1e-6


def test_jacobian_symmetric_gradient_field(rng):
    # the saturating law is a gradient field, so its Jacobian is symmetric
    law = saturating_law(1.0, 2.0)
    xi = rng.standard_normal((20, 2)) * 3
    J = eval_law_jacobian(law, 0.0, xi)
    assert np.abs(J - np.swapaxes(J, -1, -2)).max() < 1e-14


def test_certify_linear():
    c, L = certify_constants(linear_law(2.0), seed=3)
    assert abs(c - 2.0) < 1e-9 and abs(L - 2.0) < 1e-9


def test_certify_saturating_brackets():
    c, L = certify_constants(saturating_law(1.0, 1.0), seed=0)
    assert 1.0 - 1e-9 <= c <= 1.0 + 1e-3
    assert 2.0 - 1e-3 <= L <= 2.0 + 1e-9


def test_certify_time_modulated():
    law = time_modulated_law(1.0, 3.0, beta=0.0)
    c, L = certify_constants(law, seed=0)
    assert abs(c - 1.0) < 1e-2
    assert abs(L - 3.0) < 1e-2


def test_certify_rejects_uncertifiable_law():
    # claim a stronger monotonicity constant than the law possesses
    bogus = DiffusionLaw("saturating", kappa=1.0, beta=1.0, c_m=1.5, lip=2.0)
    with pytest.raises(CertificationError):
        certify_constants(bogus, seed=0)
    # negative beta breaks monotonicity of the certified pair
    broken = DiffusionLaw("saturating", kappa=1.0, beta=-0.5, c_m=1.0, lip=2.0)
    with pytest.raises(CertificationError):
        certify_constants(broken, seed=0)


def test_certify_sample_floor():
    with pytest.raises(ConfigError):
        certify_constants(linear_law(), samples=100)

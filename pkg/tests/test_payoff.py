import math

import numpy as np
import pytest

from bnsprice import capped_call, custom, put
from bnsprice.errors import DomainError


def test_put_values():
    p = put(1.0)
    assert p(math.log(1.0)) == 0.0
    assert p(math.log(0.5)) == pytest.approx(0.5)
    assert p(2.0) == 0.0
    assert p(np.array([-10.0]))[0] == pytest.approx(1.0, abs=1e-4)


def test_put_lipschitz_certificate():
    p = put(1.5)
    assert p.lipschitz_k == 1.5
    assert p.check_lipschitz(-3.0, 3.0)


def test_capped_call():
    c = capped_call(1.0, 0.5)
    assert c(0.0) == 0.0
    assert c(math.log(1.25)) == pytest.approx(0.25)
    assert c(5.0) == 0.5  # capped
    assert c.check_lipschitz(-3.0, 3.0)


def test_custom_payoff():
    xs = np.array([-1.0, 0.0, 1.0])
    hs = np.array([1.0, 0.0, 0.0])
    p = custom(xs, hs)
    assert p(-0.5) == pytest.approx(0.5)
    assert p.lipschitz_k == pytest.approx(1.0)
    assert p(5.0) == 0.0  # clamped beyond the table


def test_custom_payoff_validation():
    with pytest.raises(DomainError):
        custom(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError):
        custom(np.array([0.0, 1.0]), np.array([-1.0, 1.0]))
    with pytest.raises(DomainError):
        put(-2.0)
    with pytest.raises(DomainError):
        capped_call(1.0, 0.0)

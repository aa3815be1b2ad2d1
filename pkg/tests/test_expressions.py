import math

import numpy as np
import pytest

from rigidity.errors import ConfigError
from rigidity.expressions import Expression


def test_variables_and_functions():
    pts = np.array([[3.0, 4.0], [0.0, 1.0]])
    np.testing.assert_allclose(Expression("r", 2)(pts), [5.0, 1.0])
    np.testing.assert_allclose(Expression("u1 * u2 + cos(pi * u2)", 2)(pts), [13.0, -1.0])
    np.testing.assert_allclose(Expression("where(r <= 1, 1.0, 0.0)", 2)(pts), [0.0, 1.0])


def test_one_dimensional_alias():
    pts = np.array([[0.5], [-2.0]])
    np.testing.assert_allclose(Expression("u**2 + abs(u1)", 1)(pts), [0.75, 6.0])


def test_kernel_prefix():
    pts = np.array([[1.0, 0.0]])
    val = Expression("exp(-pi * (x1**2 + x2**2) / 2)", 2, prefix="x")(pts)
    assert val[0] == pytest.approx(math.exp(-math.pi / 2))


def test_constant_broadcasts():
    out = Expression("2", 2)(np.zeros((3, 2)))
    assert np.shape(out) == (3,) and np.all(out == 2.0)


@pytest.mark.parametrize("source", [
    "__import__('os')", "u1.real", "open('x')", "u3", "lambda: 1", "[u1]", "u1 if u1 else 0",
    "(", "foo(u1)",
])
def test_rejects_unsafe_or_unknown(source):
    with pytest.raises(ConfigError):
        Expression(source, 2)

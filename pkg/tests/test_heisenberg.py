import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwave.errors import PoleError, SingularityError
from hwave.heisenberg import (
    HPoint,
    SpherePoint,
    cayley,
    cayley_inv,
    cayley_jacobian,
    distance,
    gauge,
    group_inv,
    group_mul,
    m_beta,
)

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def rand_point(rng, scale=3.0):
    return HPoint(*(scale * rng.standard_normal(3)))


class TestGroup:
    def test_identity(self):
        assert group_mul(HPoint(1, 0, 0), HPoint(0, 0, 0)) == HPoint(1, 0, 0)

    def test_twist(self):
        assert group_mul(HPoint(1, 0, 0), HPoint(0, 1, 0)) == HPoint(1, 1, -2)

    def test_inverse(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rand_point(rng)
            e = group_mul(a, group_inv(a))
            assert max(abs(e.x), abs(e.y), abs(e.s)) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(*(coord,) * 9)
    def test_associativity(self, x1, y1, s1, x2, y2, s2, x3, y3, s3):
        a, b, c = HPoint(x1, y1, s1), HPoint(x2, y2, s2), HPoint(x3, y3, s3)
        lhs = group_mul(group_mul(a, b), c)
        rhs = group_mul(a, group_mul(b, c))
        scale = 1 + max(abs(lhs.x), abs(lhs.y), abs(lhs.s))
        assert abs(lhs.x - rhs.x) + abs(lhs.y - rhs.y) + abs(lhs.s - rhs.s) < 1e-12 * scale


class TestGauge:
    def test_unit_points(self):
        assert gauge(HPoint(1, 0, 0)) == 1.0
        assert gauge(HPoint(0, 0, 1)) == 1.0

    def test_distance_self(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rand_point(rng)
            assert distance(a, a) == 0.0

    def test_homogeneity(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a = rand_point(rng)
            lam = rng.uniform(0.1, 4.0)
            scaled = HPoint(lam * a.x, lam * a.y, lam ** 2 * a.s)
            assert abs(gauge(scaled) - lam * gauge(a)) < 1e-12 * (1 + gauge(scaled))


class TestCayley:
    def test_origin(self):
        q = cayley(HPoint(0, 0, 0))
        assert abs(q.zeta1) < 1e-15 and abs(q.zeta2 - 1.0) < 1e-15

    def test_unit_x(self):
        q = cayley(HPoint(1, 0, 0))
        assert abs(q.zeta1 - 1.0) < 1e-15 and abs(q.zeta2) < 1e-15

    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            p = rand_point(rng)
            back = cayley_inv(cayley(p))
            err = abs(back.x - p.x) + abs(back.y - p.y) + abs(back.s - p.s)
            assert err < 1e-12 * (1 + gauge(p) ** 2)

    def test_on_sphere(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            q = cayley(rand_point(rng))
            assert abs(abs(q.zeta1) ** 2 + abs(q.zeta2) ** 2 - 1.0) < 1e-12

    def test_pole(self):
        with pytest.raises(PoleError):
            cayley_inv(SpherePoint(0.0, -1.0))

    def test_jacobian_values(self):
        assert abs(cayley_jacobian(HPoint(0, 0, 0)) - 8.0) < 1e-15
        assert abs(cayley_jacobian(HPoint(1, 0, 0)) - 0.5) < 1e-15

    def test_jacobian_ground_state_identity(self):
        # |J(p)| = 2 |Q(p)|^4 with Q = i sqrt(2)/(s + i(x^2+y^2) + i)
        rng = np.random.default_rng(5)
        for _ in range(100):
            p = rand_point(rng)
            q = p.x ** 2 + p.y ** 2
            Q = 1j * math.sqrt(2) / (p.s + 1j * q + 1j)
            assert abs(cayley_jacobian(p) - 2 * abs(Q) ** 4) < 1e-12 * cayley_jacobian(p)


class TestFundamentalSolution:
    def test_beta0_unit_x(self):
        val = m_beta(0.0, HPoint(1, 0, 0))
        assert abs(val + 1.0 / (2 * math.pi)) < 1e-14

    def test_beta0_axis_modulus(self):
        val = m_beta(0.0, HPoint(0, 0, 1))
        assert abs(abs(val) - 1.0 / (2 * math.pi)) < 1e-14

    def test_parabolic_scaling(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            p = rand_point(rng)
            beta = rng.uniform(-0.9, 0.9)
            lam = rng.uniform(0.3, 3.0)
            ps = HPoint(lam * p.x, lam * p.y, lam ** 2 * p.s)
            assert abs(m_beta(beta, ps) - m_beta(beta, p) / lam ** 2) < 1e-12 * abs(m_beta(beta, p))

    def test_continuity_in_beta(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            p = rand_point(rng)
            beta = rng.uniform(-0.9, 0.9)
            a = m_beta(beta, p)
            b = m_beta(beta + 1e-6, p)
            assert abs(a - b) <= 1e-4 * abs(a)

    def test_origin_raises(self):
        with pytest.raises(SingularityError):
            m_beta(0.3, HPoint(0, 0, 0))

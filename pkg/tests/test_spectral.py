import math
import warnings

import numpy as np
import pytest

from hwave.errors import AliasError, DomainError, NonConvergence, TruncationWarning
from hwave.spectral import (
    BandField,
    GridField,
    SigmaProfile,
    analyze,
    default_sigma_grid,
    hermite_function,
    hk_norm,
    l4_norm_grid,
    l4_norm_v0,
    make_grid,
    profile_from_json,
    profile_to_json,
    project_v0plus,
    quad_form_beta,
    radial_band,
    synthesize,
)
from hwave.variational import qplus_profile

PI = math.pi


def bump_profile(seed=0, width=3):
    """Smooth band-limited-ish profile vanishing to high order at both ends."""
    rng = np.random.default_rng(seed)
    sig = default_sigma_grid()
    f = np.zeros_like(sig, dtype=complex)
    for _ in range(width):
        a = rng.uniform(0.8, 2.5)
        p = rng.integers(1, 4)
        f += (rng.standard_normal() + 1j * rng.standard_normal()) * sig ** p * np.exp(-a * sig)
    return SigmaProfile(sig, f)


class TestProfiles:
    def test_validation(self):
        with pytest.raises(DomainError):
            SigmaProfile([1.0], [1.0])
        with pytest.raises(DomainError):
            SigmaProfile([0.0, 1.0], [1.0, 1.0])
        with pytest.raises(DomainError):
            SigmaProfile([1.0, 2.0], [1.0, np.inf])

    def test_closed_form_consistency(self):
        sig = default_sigma_grid(64)
        with pytest.raises(DomainError):
            SigmaProfile(sig, np.exp(-sig) * 1.001, closed_form=(1.0, 1.0))

    def test_json_roundtrip(self):
        p = SigmaProfile.from_exponential(2.0 - 1.0j, 1.5, default_sigma_grid(32))
        q = profile_from_json(profile_to_json(p))
        assert np.allclose(q.values, p.values)
        assert q.closed_form == p.closed_form


class TestBases:
    def test_hermite_ground_value(self):
        assert abs(hermite_function(0, 0.0) - PI ** -0.25) < 1e-15

    def test_hermite_orthonormal(self):
        x = np.linspace(-12, 12, 8001)
        H = [hermite_function(m, x) for m in range(7)]
        for m in range(7):
            for p in range(m, 7):
                ip = float(np.trapezoid(H[m] * H[p], x))
                assert abs(ip - (1.0 if m == p else 0.0)) < 1e-7

    def test_radial_band_origin(self):
        assert abs(radial_band(0, 1.0, 0.0) - 1.0 / math.sqrt(PI)) < 1e-15

    def test_radial_band_orthogonality(self):
        # L^2(R^2) inner products: pi * int R_j R_k dq = delta_jk / (2 sigma)
        sigma = 0.7
        q = np.linspace(0, 80, 80001)
        for j in range(4):
            for k in range(j, 4):
                ip = PI * float(np.trapezoid(radial_band(j, sigma, q) * radial_band(k, sigma, q), q))
                want = 1.0 / (2 * sigma) if j == k else 0.0
                assert abs(ip - want) < 1e-6


class TestNorms:
    def test_h1_of_ground_state(self):
        assert abs(hk_norm(qplus_profile(), 1) - PI) < 1e-10

    def test_l2_of_ground_state_diverges(self):
        with pytest.raises(NonConvergence):
            hk_norm(qplus_profile(), 0)

    def test_zero_field(self):
        assert hk_norm(SigmaProfile.zero(), 1) == 0.0

    def test_quad_form_examples(self):
        qp = qplus_profile()
        for beta in (0.0, 0.3, 0.9):
            want = (1 - beta) * PI ** 2
            assert abs(quad_form_beta(qp, beta) - want) < 1e-9

    def test_quad_form_is_h1_at_zero(self):
        u = bump_profile(1)
        assert abs(quad_form_beta(u, 0.0) - hk_norm(u, 1) ** 2) < 1e-13

    def test_sandwich(self):
        rng = np.random.default_rng(2)
        for seed in range(4):
            u = BandField(
                [
                    (0, 1, bump_profile(seed)),
                    (1, -1, bump_profile(seed + 10)),
                    (2, 1, bump_profile(seed + 20)),
                ]
            )
            beta = rng.uniform(-0.95, 0.95)
            qf = quad_form_beta(u, beta)
            h1 = hk_norm(u, 1) ** 2
            assert (1 - abs(beta)) * h1 - 1e-12 <= qf <= (1 + abs(beta)) * h1 + 1e-12


class TestL4:
    def test_ground_state(self):
        assert abs(l4_norm_v0(qplus_profile()) - PI ** 0.5) < 1e-6

    def test_exponential_family(self):
        rng = np.random.default_rng(3)
        for _ in range(4):
            K = rng.standard_normal() + 1j * rng.standard_normal()
            a = rng.uniform(0.5, 2.5)
            p = SigmaProfile.from_exponential(K, a)
            want = (abs(K) ** 4 / (16 * PI ** 2 * a ** 2)) ** 0.25
            assert abs(l4_norm_v0(p) - want) < 1e-6 * want

    def test_phase_invariance(self):
        p = bump_profile(4)
        q = p.scaled(np.exp(0.7j))
        assert abs(l4_norm_v0(p) - l4_norm_v0(q)) < 1e-13


class TestSynthesis:
    def test_ground_state_pointwise(self):
        g = synthesize(qplus_profile(), make_grid())
        q = g.r2_nodes[:, None]
        s = g.s_nodes[None, :]
        exact = 1j * math.sqrt(2) / (s + 1j * q + 1j)
        rel = np.abs(g.samples - exact) / np.abs(exact)
        assert rel.max() < 1e-6

    def test_zero_field(self):
        g = synthesize(BandField([]), make_grid(ls=50, ns=256))
        assert np.all(g.samples == 0)

    def test_linearity(self):
        grid = make_grid(ls=100.0, ns=2048)
        u1 = BandField([(0, 1, bump_profile(5)), (1, 1, bump_profile(6))])
        u2 = BandField([(0, 1, bump_profile(7)), (1, 1, bump_profile(8))])
        both = BandField(
            [
                (0, 1, u1.get(0, 1).plus(u2.get(0, 1))),
                (1, 1, u1.get(1, 1).plus(u2.get(1, 1))),
            ]
        )
        ga = synthesize(u1, grid, rel_tol=1e-7)
        gb = synthesize(u2, grid, rel_tol=1e-7)
        gc = synthesize(both, grid, rel_tol=1e-7)
        assert np.allclose(gc.samples, ga.samples + gb.samples, atol=1e-12)

    def test_alias_error(self):
        grid = make_grid(ls=200.0, ns=128)  # Nyquist ~ 2
        with pytest.raises(AliasError):
            synthesize(qplus_profile(), grid)

    def test_l4_grid_ground_state(self):
        g = synthesize(qplus_profile(), make_grid(), rel_tol=1e-7)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            val = l4_norm_grid(g)
        assert abs(val - PI ** 0.5) < 1e-3

    def test_l4_grid_zero(self):
        g = make_grid(ls=50, ns=128)
        assert l4_norm_grid(g) == 0.0

    def test_l4_routes_agree(self):
        for seed in (11, 12, 13):
            p = bump_profile(seed)
            g = synthesize(p, make_grid(), rel_tol=1e-7)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                grid_val = l4_norm_grid(g)
            v0_val = l4_norm_v0(p)
            assert abs(grid_val - v0_val) < 1e-3 * v0_val

    def test_truncation_warning(self):
        g = synthesize(qplus_profile(), make_grid(), rel_tol=1e-6)
        with pytest.warns(TruncationWarning):
            l4_norm_grid(g)  # 1/s tails do not reach 1e-6 at the box edge

    def test_analyze_roundtrip(self):
        u = BandField(
            [
                (0, 1, bump_profile(21)),
                (1, 1, bump_profile(22)),
                (2, -1, bump_profile(23)),
            ]
        )
        grid = make_grid(ls=200.0, ns=4096)
        g = synthesize(u, grid, rel_tol=1e-8)
        back = analyze(g, kmax=3, sigma_max=41.0)
        for k, sign, prof in u.bands:
            rec = back.get(k, sign)
            want = prof.eval(rec.sigma)
            scale = np.max(np.abs(want))
            assert np.max(np.abs(rec.values - want)) < 1e-8 * scale
        # bands that were absent stay small
        empty = back.get(3, 1)
        assert np.max(np.abs(empty.values)) < 1e-8


class TestProjection:
    def test_pure_lowest_band(self):
        u = BandField.from_v0(bump_profile(31))
        part, rest = project_v0plus(u)
        assert part is u.get(0, 1)
        assert not rest.bands

    def test_pythagoras(self):
        u = BandField(
            [(0, 1, bump_profile(41)), (1, 1, bump_profile(42)), (0, -1, bump_profile(43))]
        )
        part, rest = project_v0plus(u)
        total = hk_norm(u, 1) ** 2
        split = hk_norm(part, 1) ** 2 + hk_norm(rest, 1) ** 2
        assert abs(total - split) < 1e-12 * total

    def test_remainder_norm_bound(self):
        # fields with no (0, +) band: ||u||_H1^2 <= 2 quad_form_beta(u, beta)
        rng = np.random.default_rng(44)
        for seed in range(3):
            u = BandField(
                [(0, -1, bump_profile(seed + 50)), (1, 1, bump_profile(seed + 60)), (2, -1, bump_profile(seed + 70))]
            )
            h1 = hk_norm(u, 1) ** 2
            for beta in (0.0, 0.5, 0.99, rng.uniform(0, 1)):
                assert h1 <= 2 * quad_form_beta(u, beta) + 1e-12


class TestParseval:
    def test_l2_matches_plane_norm(self):
        # ||h||_{L^2}^2 = pi ||F_h||_{L^2(C+)}^2 for decaying-at-zero profiles
        from hwave.bergman import plane_norm_weighted

        p = SigmaProfile.from_callable(lambda s: s * np.exp(-s) + 0.0j)
        l2_sq = hk_norm(p, 0) ** 2
        # ||h||^2 = pi ||F_h||^2 and F_h = (Paley-Wiener synthesis)/sqrt(pi)
        plane = plane_norm_weighted(p, 0.0)
        assert abs(l2_sq - plane) < 1e-6 * l2_sq

import numpy as np
import pytest

from kakeyalab.directions import explicit, gen_separated
from kakeyalab.freqdecomp import make_profile, make_smooth_profile, project_S_k
from kakeyalab.grid import (
    Field,
    cosine_mode_field,
    inverse_transform,
    make_grid,
    mode_field,
    norm,
    random_band_limited,
    transform,
)
from kakeyalab.maxop import (
    apply_M0,
    apply_M0_raw,
    apply_M0_restricted,
    apply_M2,
    apply_M_star,
    apply_M_starstar_2d,
    apply_nikodym,
    apply_O,
    apply_T_v,
    nikodym_frame,
    t_v_line_oracle,
)

# rational directions for the lattice-line reference path
RATIONAL_DIRS = [
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, -1, 0),
    (1, 1, 1), (1, -1, 1), (-1, 1, 1),
    (2, 1, 0), (2, 0, 1), (0, 2, 1), (2, -1, 0),
    (2, 1, 1), (2, -1, 1), (1, 2, 2),
    (3, 1, 1), (2, 2, 1), (3, 2, 1),
]


class TestApplyTv:
    def test_constant_field_fixed(self, grid16, fejer):
        s = transform(Field(grid16, np.full(grid16.shape, 2.5)))
        out = apply_T_v(s, np.array([0.0, 0.0, 1.0]), fejer)
        assert np.allclose(out.samples, 2.5, atol=1e-12)

    def test_pure_mode_scaled_by_multiplier(self, grid16, fejer):
        v = np.array([0.0, 0.0, 1.0])
        f0 = mode_field(grid16, (3, 0, 1))
        fvec = 2 * np.pi * np.array([3, 0, 1]) / grid16.domain_length
        expected = fejer.psi_hat(fvec @ v)
        out = apply_T_v(transform(f0), v, fejer)
        assert np.allclose(out.samples, expected * f0.samples, atol=1e-12)

    def test_mode_beyond_support_killed(self, grid16, fejer):
        v = np.array([0.0, 0.0, 1.0])
        f0 = mode_field(grid16, (0, 0, 2))  # f.v = 4 pi / 8 * 2 = pi/2... scale below
        fvec = 2 * np.pi * np.array([0, 0, 2]) / grid16.domain_length
        assert abs(fvec @ v) >= 1.0
        out = apply_T_v(transform(f0), v, fejer)
        assert np.abs(out.samples).max() < 1e-12

    def test_rejects_non_unit(self, grid16, fejer):
        s = transform(Field(grid16, np.ones(grid16.shape)))
        with pytest.raises(ValueError, match="unit"):
            apply_T_v(s, np.array([1.0, 1.0, 0.0]), fejer)


class TestLineOracle:
    def test_matches_spectral_path(self, grid32, fejer):
        rng = np.random.default_rng(17)
        worst = 0.0
        for i, abc in enumerate(RATIONAL_DIRS[:6]):
            F = random_band_limited(grid32, 4.0, rng)
            ref, v = t_v_line_oracle(F, abc, fejer, max_mode_norm=6.0)
            out = apply_T_v(transform(F), v, fejer)
            err = norm(Field(grid32, out.samples - ref.samples), 2) / norm(F, 2)
            worst = max(worst, err)
        assert worst < 1e-5

    def test_works_for_smooth_profile(self, grid32):
        prof = make_smooth_profile()
        rng = np.random.default_rng(18)
        F = random_band_limited(grid32, 4.0, rng)
        ref, v = t_v_line_oracle(F, (2, 1, 0), prof, max_mode_norm=6.0)
        out = apply_T_v(transform(F), v, prof)
        err = norm(Field(grid32, out.samples - ref.samples), 2) / norm(F, 2)
        assert err < 1e-6

    def test_periodization_forms_agree(self, fejer):
        # Poisson form vs direct time-domain summation, both profiles
        from kakeyalab.maxop import _periodized_psi
        P = 8.0 * np.sqrt(5.0)
        t = np.array([0.0, 1.3, 7.7])
        direct_j = np.arange(-15, 16)

        smooth = make_smooth_profile()
        poisson = _periodized_psi(smooth, P, t)
        direct = np.array([smooth.psi(ti + direct_j * P).sum() for ti in t])
        assert np.abs(poisson - direct).max() < 5e-6  # ~3e-7 tail beyond 15 periods

        kmax = int(np.floor(P / (2 * np.pi)))
        ks = np.arange(-kmax, kmax + 1)
        fejer_poisson = (np.exp(2j * np.pi * np.outer(t, ks) / P)
                         @ fejer.psi_hat(2 * np.pi * ks / P)).real / P
        fejer_direct = _periodized_psi(fejer, P, t, terms=200000)
        assert np.abs(fejer_poisson - fejer_direct).max() < 1e-8

    def test_alias_guard_raises(self, grid16, fejer):
        rng = np.random.default_rng(19)
        F = random_band_limited(grid16, 6.0, rng)
        with pytest.raises(ValueError, match="alias"):
            t_v_line_oracle(F, (5, 4, 3), fejer, max_mode_norm=8.0)


class TestApplyM0:
    def test_single_direction_is_abs_Tv(self, grid16, fejer):
        rng = np.random.default_rng(20)
        F = random_band_limited(grid16, 3.0, rng)
        ds = explicit(np.array([[0.0, 0.0, 1.0]]))
        m0 = apply_M0(F, ds, fejer)
        tv = apply_T_v(transform(F), np.array([0.0, 0.0, 1.0]), fejer)
        assert np.allclose(m0.samples, np.abs(tv.samples), atol=1e-12)

    def test_constant_field_stays_one(self, grid16, fejer):
        F = Field(grid16, np.ones(grid16.shape))
        out = apply_M0(F, gen_separated(8), fejer)
        assert np.allclose(out.samples, 1.0, atol=1e-12)

    def test_sublinear_pointwise(self, grid16, fejer):
        rng = np.random.default_rng(21)
        F = random_band_limited(grid16, 3.0, rng)
        G = random_band_limited(grid16, 4.0, rng)
        ds = gen_separated(6)
        both = apply_M0(Field(grid16, F.samples + G.samples), ds, fejer)
        sep = apply_M0(F, ds, fejer).samples + apply_M0(G, ds, fejer).samples
        assert (both.samples <= sep + 1e-12).all()

    def test_positive_homogeneity_exact_for_pow2(self, grid16, fejer):
        rng = np.random.default_rng(22)
        F = random_band_limited(grid16, 3.0, rng)
        ds = gen_separated(5)
        a = apply_M0(Field(grid16, -4.0 * F.samples), ds, fejer)
        b = apply_M0(F, ds, fejer)
        assert np.array_equal(a.samples, 4.0 * b.samples)

    def test_empty_directions_rejected(self, grid16, fejer):
        F = Field(grid16, np.ones(grid16.shape))
        with pytest.raises(ValueError):
            apply_M0(F, explicit(np.empty((0, 3))), fejer)

    def test_float32_path_close_to_float64(self, grid16, fejer):
        rng = np.random.default_rng(23)
        F = random_band_limited(grid16, 3.0, rng)
        ds = gen_separated(7)
        a = apply_M0(F, ds, fejer)
        b = apply_M0(Field(grid16, F.samples.astype(np.float32)), ds, fejer)
        assert b.samples.dtype == np.float32
        assert np.abs(a.samples - b.samples).max() < 1e-5


class TestApplyM0Raw:
    def test_constant_is_one(self, grid16):
        F = Field(grid16, np.ones(grid16.shape))
        out = apply_M0_raw(F, gen_separated(4))
        assert np.allclose(out.samples, 1.0, atol=1e-12)

    def test_invariant_axis_returns_field(self, grid16):
        rng = np.random.default_rng(24)
        plane = rng.standard_normal((16, 16))
        F = Field(grid16, np.repeat(plane[:, :, None], 16, axis=2))
        ds = explicit(np.array([[0.0, 0.0, 1.0]]))
        out = apply_M0_raw(F, ds)
        assert np.allclose(out.samples, np.abs(F.samples), atol=1e-12)

    def test_refinement_convergence(self, grid16):
        rng = np.random.default_rng(25)
        F = random_band_limited(grid16, 2.0, rng)
        ds = gen_separated(3)
        coarse = apply_M0_raw(F, ds, nodes=129)
        fine = apply_M0_raw(F, ds, nodes=1281)
        assert np.abs(coarse.samples - fine.samples).max() < 1e-6


class TestHardyLittlewood:
    def test_constants_fixed(self, grid16):
        F = Field(grid16, np.ones(grid16.shape))
        for op in (apply_M_star, apply_M2, apply_O):
            assert np.allclose(op(F).samples, 1.0, atol=1e-12)

    def test_dominates_abs(self, grid16):
        rng = np.random.default_rng(26)
        F = Field(grid16, rng.standard_normal(grid16.shape))
        assert (apply_M_star(F).samples >= np.abs(F.samples) - 1e-15).all()

    def test_spike_matches_bruteforce(self):
        g = make_grid(3, 16, 8.0)
        spike = np.zeros(g.shape)
        spike[3, 5, 7] = 1.0
        got = apply_M_star(Field(g, spike))
        # brute force over all dyadic cubes, same centered odd windows
        n = g.points_per_axis
        best = np.abs(spike).copy()
        for s in (3, 5, 9):
            acc = np.zeros_like(spike)
            for dx in range(-(s // 2), s // 2 + 1):
                for dy in range(-(s // 2), s // 2 + 1):
                    for dz in range(-(s // 2), s // 2 + 1):
                        acc += np.roll(spike, (dx, dy, dz), axis=(0, 1, 2))
            best = np.maximum(best, acc / s**3)
        assert np.allclose(got.samples, best, atol=1e-12)

    def test_O_bounded_on_l2(self, grid16):
        rng = np.random.default_rng(27)
        worst = 0.0
        for _ in range(5):
            F = random_band_limited(grid16, rng.uniform(2, 6), rng)
            worst = max(worst, norm(apply_O(F), 2) / norm(F, 2))
        assert 1.0 <= worst <= 20.0


class TestMStarStar2D:
    def test_constant_gives_one(self, fejer):
        g = make_grid(2, 32, 8.0)
        F = Field(g, np.ones(g.shape))
        ds = gen_separated(8, dim=2)
        out = apply_M_starstar_2d(F, ds, k=3, profile=fejer)
        assert np.allclose(out.samples, 1.0, atol=1e-12)

    def test_large_k_reduces_to_Tv(self, fejer):
        g = make_grid(2, 32, 8.0)
        rng = np.random.default_rng(28)
        F = random_band_limited(g, 3.0, rng)
        v = np.array([1.0, 0.0])
        ds = explicit(v[None, :])
        out = apply_M_starstar_2d(F, ds, k=40, profile=fejer)  # 2^{-k} below resolution
        tv = apply_T_v(transform(F), v, fejer)
        assert np.abs(out.samples - np.abs(tv.samples)).max() < 1e-10

    def test_log_bound_over_random_fields(self, fejer):
        g = make_grid(2, 64, 8.0)
        rng = np.random.default_rng(29)
        ds = gen_separated(64, dim=2)
        worst = 0.0
        for _ in range(20):
            F = random_band_limited(g, 12.0, rng)
            sk = project_S_k(transform(F), 3)
            G = inverse_transform(sk)
            base = norm(G, 2)
            if base < 1e-12:
                continue
            out = apply_M_starstar_2d(Field(g, np.asarray(G.samples.real)), ds, 3, fejer)
            worst = max(worst, norm(out, 2) / base)
        assert worst <= 10.0 * np.sqrt(np.log(64))

    def test_dimension_mismatch(self, grid16, fejer):
        F = Field(grid16, np.ones(grid16.shape))
        with pytest.raises(ValueError, match="2D"):
            apply_M_starstar_2d(F, gen_separated(4, dim=2), 2, fejer)


class TestNikodym:
    def test_frame_orthonormal(self):
        rng = np.random.default_rng(30)
        for _ in range(50):
            v = rng.standard_normal(3)
            v /= np.linalg.norm(v)
            p, q = nikodym_frame(v)
            M = np.stack([v, p, q])
            assert np.allclose(M @ M.T, np.eye(3), atol=1e-12)

    def test_constant_gives_one(self, grid16, fejer):
        F = Field(grid16, np.ones(grid16.shape))
        ds = gen_separated(16)
        out = apply_nikodym(F, 0.25, ds, fejer)
        assert np.allclose(out.samples, 1.0, atol=1e-12)

    def test_high_mode_exactly_killed(self, fejer):
        # |f| = 20/delta with delta = 1/4 -> need Nyquist above 80
        g = make_grid(3, 128, np.pi)
        delta = 0.25
        target = 20.0 / delta
        m = (0, 0, 40)  # |f| = 2 m / ... lattice spacing 2: |f| = 80 = 20/delta
        F = cosine_mode_field(g, m)
        fnorm = 2 * np.pi * np.linalg.norm(m) / g.domain_length
        assert fnorm >= 10.0 / delta
        out = apply_nikodym(F, delta, gen_separated(16), fejer)
        assert np.abs(out.samples).max() < 1e-12
        assert fnorm == pytest.approx(target)

    def test_rejects_bad_delta_and_count(self, grid16, fejer):
        F = Field(grid16, np.ones(grid16.shape))
        with pytest.raises(ValueError, match="delta"):
            apply_nikodym(F, 0.75, gen_separated(16), fejer)
        with pytest.raises(ValueError, match="delta"):
            apply_nikodym(F, 0.25, gen_separated(512), fejer)


class TestSingleTubeBound:
    def test_lemma3_constant(self, grid64_pi, tube_systems, fejer):
        # directions restricted to one tube's strip: M0 stays bounded
        rng = np.random.default_rng(31)
        ds = gen_separated(64)
        worst = 0.0
        for k in (2, 3):
            ts = tube_systems(k)
            from kakeyalab.combinat import incidences
            table = incidences(ds, ts)
            counts = table.counts
            for tube in np.argsort(counts)[-2:]:
                if counts[tube] == 0 or ts.owned_count(int(tube)) == 0:
                    continue
                strip_dirs = ds.vectors[table.membership[:, int(tube)]]
                for _ in range(3):
                    F = random_band_limited(grid64_pi, 2.0 ** (k + 1), rng)
                    piece = None
                    from kakeyalab.freqdecomp import project_tube
                    piece = project_tube(project_S_k(transform(F), k), ts, int(tube))
                    base = np.sqrt(np.sum(np.abs(piece.coefficients) ** 2)
                                   * grid64_pi.domain_length**3)
                    if base < 1e-12:
                        continue
                    out = apply_M0_restricted(piece, strip_dirs, fejer)
                    worst = max(worst, norm(out, 2) / base)
        assert 0.0 < worst <= 20.0

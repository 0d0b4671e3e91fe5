import numpy as np
import pytest
from scipy import integrate

from kakeyalab.freqdecomp import (
    annulus_weight,
    make_profile,
    make_smooth_profile,
    make_tube_system,
    project_S_k,
    project_tube,
    relevant_scales,
    smooth_step,
    split_regimes,
    strip_membership,
)
from kakeyalab.grid import (
    Field,
    frequency_norm,
    inverse_transform,
    make_grid,
    mode_field,
    norm,
    random_band_limited,
    spectrum_l2_norm,
    transform,
)


class TestProfile:
    def test_triangle_values(self, fejer):
        assert fejer.psi_hat(0.0) == 1.0
        assert fejer.psi_hat(1.0) == 0.0
        assert fejer.psi_hat(-1.0) == 0.0
        assert fejer.psi_hat(0.5) == 0.5
        assert fejer.psi_hat(2.3) == 0.0

    def test_psi_at_zero(self, fejer):
        assert np.isclose(fejer.psi(np.array([0.0]))[0], 1.0 / (2 * np.pi))

    def test_psi_nonnegative(self, fejer):
        t = np.linspace(-50, 50, 10001)
        assert fejer.psi(t).min() >= 0.0

    def test_unit_mass_by_quadrature(self, fejer):
        t = np.linspace(-2000.0, 2000.0, 800001)
        mass = np.trapezoid(fejer.psi(t), t)
        assert abs(mass - 1.0) < 1e-3  # t^{-2} tail beyond the window
        # the missing mass at a shorter window matches the analytic tail size
        t2 = np.linspace(-200.0, 200.0, 400001)
        short = np.trapezoid(fejer.psi(t2), t2)
        assert abs((1.0 - short) - 2.0 / (np.pi * 200.0)) < 2e-4

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    def test_fourier_pair_consistency(self, fejer):
        # int psi(t) cos(tau t) dt should reproduce the triangle; the tail
        # is handled by scipy's oscillatory-weight quadrature.
        for tau in (0.0, 0.3, 0.7, 0.95):
            val, _ = integrate.quad(fejer.psi, 0, 60.0, weight="cos", wvar=tau, limit=400)
            tail, _ = integrate.quad(fejer.psi, 60.0, 5e4, weight="cos", wvar=tau, limit=4000)
            assert abs(2 * (val + tail) - fejer.psi_hat(tau)) < 1e-4


class TestSmoothProfile:
    def test_basic_properties(self):
        p = make_smooth_profile()
        assert np.isclose(p.psi_hat(0.0), 1.0)
        assert p.psi_hat(1.0) == 0.0
        assert p.psi_hat(1.5) == 0.0
        t = np.linspace(-30, 30, 2001)
        vals = p.psi(t)
        assert vals.min() >= 0.0
        mass = np.trapezoid(vals, t)
        assert abs(mass - 1.0) < 2e-2

    def test_even(self):
        p = make_smooth_profile()
        tau = np.linspace(0, 1, 101)
        assert np.allclose(p.psi_hat(tau), p.psi_hat(-tau))


class TestAnnulusPartition:
    def test_step_endpoints(self):
        assert smooth_step(0.5) == 0.0
        assert smooth_step(1.0) == 1.0
        assert smooth_step(0.75) == pytest.approx(0.5)

    def test_support(self):
        r = np.array([0.49, 0.5, 2.0, 2.01, 10.0])
        w = annulus_weight(r, 0)
        assert w[0] == 0.0 and w[1] == 0.0
        assert w[2] == 0.0 and w[3] == 0.0 and w[4] == 0.0
        assert annulus_weight(np.array([1.0]), 0)[0] > 0.99

    def test_partition_of_unity_on_grid(self, grid16):
        fn = frequency_norm(grid16)
        nz = fn[fn > 0]
        total = sum(annulus_weight(nz, k) for k in relevant_scales(grid16))
        assert np.abs(total - 1.0).max() < 1e-10


class TestProjectSk:
    def test_adjacent_scales_sum_to_identity_on_shell_mode(self, grid16):
        # |f| = 2^k exactly: only mu_k and mu_{k+1} are active there
        f = mode_field(grid16, (0, 0, 4))  # |f| = pi = 2^1.65... use exact dyadic below
        g = make_grid(3, 16, 2 * np.pi)    # spacing makes |f| = m exactly
        f = mode_field(g, (0, 0, 2))       # |f| = 2 = 2^1
        s = transform(f)
        s1 = project_S_k(s, 1).coefficients + project_S_k(s, 2).coefficients
        assert np.allclose(s1, s.coefficients, atol=1e-12)

    def test_telescoping_sum_recovers_mean_free_part(self, grid16):
        rng = np.random.default_rng(7)
        f = random_band_limited(grid16, 5.0, rng)
        s = transform(f)
        acc = np.zeros(grid16.shape, dtype=complex)
        for k in relevant_scales(grid16):
            acc += project_S_k(s, k).coefficients
        expect = s.coefficients.copy()
        expect[0, 0, 0] = 0.0
        err = np.abs(acc - expect).max() / np.abs(s.coefficients).max()
        assert err < 1e-9

    def test_beyond_nyquist_gives_zero(self, grid16):
        rng = np.random.default_rng(8)
        s = transform(random_band_limited(grid16, 5.0, rng))
        k_big = max(relevant_scales(grid16)) + 2
        out = project_S_k(s, k_big)
        assert np.abs(out.coefficients).max() == 0.0


class TestTubeSystem:
    def test_k0_small_system_owns_all_annulus_freqs(self, grid16):
        ts = make_tube_system(0, grid16)
        assert 1 <= ts.cap_count <= 8
        fn = frequency_norm(grid16)
        in_annulus = int(((fn >= 0.5) & (fn <= 2.0)).sum())
        assert ts.owned_offsets[-1] == in_annulus

    def test_k3_count_and_areas(self, grid64_pi):
        ts = make_tube_system(3, grid64_pi)
        assert 2**6 / 8 <= ts.cap_count <= 8 * 2**6
        total = 4 * np.pi * 2.0 ** (2 * (3 - 1))
        assert abs(ts.areas.sum() - total) / total < 1e-6

    def test_partition_of_annulus_frequencies(self, tube_systems, grid64_pi):
        ts = tube_systems(2)
        fn = frequency_norm(grid64_pi)
        count = int(((fn >= 2.0) & (fn <= 8.0)).sum())
        flat = ts.owned_flat
        assert len(flat) == count
        assert len(np.unique(flat)) == len(flat)

    def test_cap_membership_is_partition(self, tube_systems):
        ts = tube_systems(3)
        rng = np.random.default_rng(9)
        u = rng.standard_normal((2000, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        idx = ts.cap_index(u)
        assert idx.min() >= 0 and idx.max() < ts.cap_count
        # each cap's own center maps back to itself
        centers = ts.centers / ts.radius
        back = ts.cap_index(centers)
        assert np.array_equal(back, np.arange(ts.cap_count))

    def test_each_cap_in_unit_geodesic_disk(self, tube_systems):
        ts = tube_systems(4)
        for t in range(0, ts.cap_count, 17):
            samples = ts.strip_samples(t)
            c = ts.centers[t] / ts.radius
            geo = np.arccos(np.clip(samples @ c, -1, 1)).max()
            assert ts.radius * geo <= 1.0 + 1e-6

    def test_rejects_bad_args(self, grid16):
        with pytest.raises(ValueError, match="k >= 0"):
            make_tube_system(-1, grid16)
        with pytest.raises(ValueError, match="3D"):
            make_tube_system(1, make_grid(2, 16, 8.0))


class TestProjectTube:
    def test_reconstruction_and_orthogonality(self, tube_systems, grid64_pi):
        rng = np.random.default_rng(10)
        ts = tube_systems(2)
        f = random_band_limited(grid64_pi, 8.0, rng)
        sk = project_S_k(transform(f), 2)
        total = np.zeros(grid64_pi.shape, dtype=complex)
        sq = 0.0
        for t in range(ts.cap_count):
            piece = project_tube(sk, ts, t)
            total += piece.coefficients
            sq += spectrum_l2_norm(piece) ** 2
        assert np.abs(total - sk.coefficients).max() <= 1e-12 * np.abs(sk.coefficients).max()
        nsk = spectrum_l2_norm(sk) ** 2
        assert abs(sq - nsk) / nsk < 1e-10

    def test_single_cap_support(self, tube_systems, grid64_pi):
        ts = tube_systems(2)
        counts = np.diff(ts.owned_offsets)
        tube = int(np.flatnonzero(counts > 0)[0])
        coeffs = np.zeros(grid64_pi.shape, dtype=complex)
        coeffs.ravel()[ts.tube_flat_indices(tube)] = 1.0
        from kakeyalab.grid import Spectrum
        s = Spectrum(grid64_pi, coeffs)
        own = project_tube(s, ts, tube)
        assert np.array_equal(own.coefficients, coeffs)
        other = int(np.flatnonzero(counts > 0)[1])
        assert np.abs(project_tube(s, ts, other).coefficients).max() == 0.0

    def test_grid_mismatch_rejected(self, tube_systems, grid16):
        ts = tube_systems(2)
        with pytest.raises(ValueError, match="grid"):
            project_tube(transform(Field(grid16, np.ones(grid16.shape))), ts, 0)


class TestStripMembership:
    def test_perpendicular_is_member(self, tube_systems):
        ts = tube_systems(3)
        c = ts.centers[5] / ts.radius
        e = np.zeros(3)
        e[np.argmin(np.abs(c))] = 1.0
        w = np.cross(c, e)
        w /= np.linalg.norm(w)
        assert strip_membership(ts, 5, w)

    def test_radial_is_not_member_high_k(self, grid64_pi):
        ts = make_tube_system(5, grid64_pi)
        c = ts.centers[7] / ts.radius
        assert not strip_membership(ts, 7, c)

    def test_rejects_non_unit(self, tube_systems):
        ts = tube_systems(2)
        with pytest.raises(ValueError, match="unit"):
            strip_membership(ts, 0, np.array([1.0, 1.0, 0.0]))

    def test_owned_frequency_check_never_lost(self, tube_systems):
        # every membership witnessed by an owned grid frequency is found
        ts = tube_systems(3)
        rng = np.random.default_rng(11)
        for _ in range(1000):
            t = int(rng.integers(ts.cap_count))
            w = rng.standard_normal(3)
            w /= np.linalg.norm(w)
            freqs = ts.tube_frequencies(t)
            if freqs.size and np.abs(freqs @ w).min() <= 1.0:
                assert strip_membership(ts, t, w)

    def test_against_dense_sampling_oracle(self, tube_systems):
        # the working resolution (0.1 * 2^{-k}) decides as a 2x denser
        # exhaustive sampling does, except within the angular margin band
        k = 3
        ts = tube_systems(k)
        rng = np.random.default_rng(211)
        margin = 0.1 * 2.0 ** (-k)
        disagreements = 0
        for _ in range(1000):
            t = int(rng.integers(ts.cap_count))
            w = rng.standard_normal(3)
            w /= np.linalg.norm(w)
            got = strip_membership(ts, t, w)
            cell = ts.cells[t]
            th = np.linspace(cell.theta1, cell.theta2, 41)
            ph = np.linspace(cell.phi1, cell.phi2, 41)
            TH, PH = np.meshgrid(th, ph, indexing="ij")
            dense = np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH),
                              np.cos(TH)], axis=-1).reshape(-1, 3)
            dense_min = float(np.abs(dense @ w).min()) * ts.radius
            freqs = ts.tube_frequencies(t)
            if freqs.size:
                dense_min = min(dense_min, float(np.abs(freqs @ w).min()))
            oracle = dense_min <= 1.0
            if got != oracle:
                disagreements += 1
                # only near-threshold pairs may flip
                assert abs(dense_min - 1.0) <= margin * ts.radius * 2.0
        assert disagreements <= 20

    def test_strip_width_near_great_circle(self, tube_systems):
        # members w stay within |w.c| <= 2*2^{-k} + cap-diameter correction
        for k in (2, 3, 4):
            ts = tube_systems(k)
            rng = np.random.default_rng(100 + k)
            w = rng.standard_normal((10000, 3))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            for tube in rng.integers(ts.cap_count, size=3):
                samples = ts.strip_samples(int(tube))
                member = np.abs(samples @ w.T).min(axis=0) * ts.radius <= 1.0
                if not member.any():
                    continue
                c = ts.centers[int(tube)] / ts.radius
                bound = 2.0 * 2.0**-k + 2.0 / ts.radius  # width + diameter correction
                assert np.abs(w[member] @ c).max() <= bound


class TestSplitRegimes:
    def test_sum_is_exact(self, grid16):
        rng = np.random.default_rng(12)
        s = transform(random_band_limited(grid16, 6.0, rng))
        low, mid, high = split_regimes(s, 4)
        total = low.coefficients + mid.coefficients + high.coefficients
        assert np.abs(total - s.coefficients).max() <= 1e-12 * np.abs(s.coefficients).max()

    def test_low_mode_goes_low(self, grid16):
        g = make_grid(3, 16, 32.0)  # spacing gives |f| ~ 0.196 m
        s = transform(mode_field(g, (0, 0, 1)))  # |f| ~ 0.196 < 1
        low, mid, high = split_regimes(s, 4)
        assert np.abs(mid.coefficients).max() < 1e-14  # fft roundoff only
        assert np.abs(high.coefficients).max() < 1e-14
        assert np.isclose(low.coefficients[0, 0, 1], 1.0)

    def test_high_mode_goes_high_entirely(self):
        # N=2: threshold 2 N^3 = 16; a mode at |f| >= 16 is entirely high
        g = make_grid(3, 64, 8.0)
        s = transform(mode_field(g, (20, 4, 0)))  # |f| = 16.017
        low, mid, high = split_regimes(s, 2)
        assert np.abs(low.coefficients).max() < 1e-14  # fft roundoff only
        assert np.abs(mid.coefficients).max() < 1e-14
        assert np.isclose(high.coefficients[20, 4, 0], 1.0)
        # and it sits in a single annulus with k > 3 log2 N = 3
        assert annulus_weight(16.017, 4) > 0.999

    def test_threshold_multipliers_for_N4(self):
        # at |f| = 2 N^3 = 2^{K+1} (K = 3 log2 4 = 6) the high multiplier saturates
        assert smooth_step(2 * 4.0**3 / 2.0 ** (6 + 1)) == 1.0

    def test_rejects_small_N(self, grid16):
        s = transform(Field(grid16, np.ones(grid16.shape)))
        with pytest.raises(ValueError, match="N"):
            split_regimes(s, 1)


def test_mean_mode_assigned_to_low(grid16):
    f = Field(grid16, np.full(grid16.shape, 3.0))
    low, mid, high = split_regimes(transform(f), 4)
    assert np.isclose(low.coefficients[0, 0, 0], 3.0)
    assert np.abs(mid.coefficients).max() == 0.0


def test_inverse_of_projected_spectrum_is_real(grid64_pi):
    rng = np.random.default_rng(13)
    f = random_band_limited(grid64_pi, 8.0, rng)
    g = inverse_transform(project_S_k(transform(f), 2))
    assert not np.iscomplexobj(g.samples)
    assert norm(g, 2) > 0

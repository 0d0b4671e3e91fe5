"""Experiment drivers: sharpness reproduction, scaling sweeps, per-annulus
bounds, incidence combinatorics, good-lambda checks, Nikodym comparison,
and the three-regime instrumentation.  Every run is deterministic given
(config, seed); CSV output is bit-identical across reruns except for the
trailing seconds column.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from . import combinat, martingale
from .directions import DirectionSet, gen_clustered, gen_random, gen_separated
from .families import (
    FAMILY_ID,
    annulus_family,
    sharpness_analytic_l2,
    sharpness_field,
    sharpness_grid_n,
    sweep_family,
)
from .freqdecomp import (
    Profile,
    make_profile,
    make_tube_system,
    project_S_k,
    split_regimes,
)
from .grid import (
    Field,
    Spectrum,
    inverse_transform,
    make_grid,
    norm,
    random_band_limited,
    transform,
)
from .maxop import apply_M0, apply_nikodym, apply_O, apply_T_v


def _real_field(spectrum: Spectrum, dtype=np.float64) -> Field:
    """Inverse transform of a conjugate-symmetric spectrum as a real field."""
    f = inverse_transform(spectrum)
    samples = f.samples.real if np.iscomplexobj(f.samples) else f.samples
    return Field(spectrum.spec, np.asarray(samples, dtype=dtype))

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "run_experiment",
    "run_sharpness",
    "run_sweep",
    "run_annulus",
    "run_combinatorics",
    "run_cww",
    "run_nikodym",
    "run_regimes",
    "fit_power_law",
    "write_csv",
]

SCHEMA_VERSION = "1"

EXPERIMENTS = ("sharpness", "sweep", "annulus", "combinatorics", "cww", "nikodym", "regimes")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid_n: int = 64
    domain_length: float = 8.0
    dirs: str = "fibonacci"           # fibonacci | random | clustered
    num_dirs: tuple[int, ...] = (16,)
    k_list: tuple[int, ...] = (1, 2, 3)
    cluster_width: float = 0.01
    delta: float = 0.25
    seed: int = 0
    out: str | None = None
    threads: int = 1
    dtype: str = "float64"            # float64 | float32 (measurement-only runs)
    family: str = FAMILY_ID
    c1: float = 1.0                   # good-lambda constant for cww / regimes

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.dirs not in ("fibonacci", "random", "clustered"):
            raise ValueError(f"unknown direction kind {self.dirs!r}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"dtype must be float64 or float32, got {self.dtype!r}")
        object.__setattr__(self, "num_dirs", tuple(int(n) for n in self.num_dirs))
        object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    def make_directions(self, N: int, dim: int = 3) -> DirectionSet:
        if self.dirs == "fibonacci":
            return gen_separated(N, dim=dim)
        if self.dirs == "random":
            return gen_random(N, seed=self.seed, dim=dim)
        return gen_clustered(N, cluster_width=self.cluster_width, seed=self.seed)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)  # csv module emits RFC-4180 quoting
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _base(cfg: ExperimentConfig) -> list:
    return [SCHEMA_VERSION, cfg.experiment, cfg.family, cfg.dtype, cfg.dirs, cfg.seed]


_BASE_HEADER = ["schema_version", "experiment", "family", "dtype", "dir_kind", "seed"]


def fit_power_law(Ns, values) -> float:
    """Least-squares slope of log(value) against log(N)."""
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(Ns) < 2:
        raise ValueError("need at least two points to fit a slope")
    x = np.log(Ns)
    y = np.log(values)
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))


def _fixed_exponent_residual(Ns, values, exponent: float, log_factor_power: float = 0.0) -> float:
    """RMS residual of log(value) against the best c * N^exponent * (log N)^p."""
    Ns = np.asarray(Ns, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    model = exponent * np.log(Ns) + log_factor_power * np.log(np.log(Ns))
    c = float(np.mean(y - model))
    return float(np.sqrt(np.mean((y - model - c) ** 2)))


# ---------------------------------------------------------------------------
# sharpness
# ---------------------------------------------------------------------------

SHARPNESS_HEADER = _BASE_HEADER + [
    "N", "grid_n", "domain_length", "norm_F", "norm_F_times_N14",
    "analytic_norm_F", "norm_M0F", "ratio", "seconds",
]


def run_sharpness(cfg: ExperimentConfig, profile: Profile | None = None) -> list[list]:
    """The known extremal example at fixed grid: reports |F|_2, |M0 F|_2."""
    profile = profile or make_profile()
    grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    rows = []
    for N in cfg.num_dirs:
        t0 = time.perf_counter()
        F = sharpness_field(N, grid, dtype=cfg.np_dtype)
        ds = cfg.make_directions(N)
        out = apply_M0(F, ds, profile, workers=cfg.threads)
        nf, nm = norm(F, 2), norm(out, 2)
        rows.append(_base(cfg) + [N, cfg.grid_n, cfg.domain_length, nf, nf * N**0.25,
                                  sharpness_analytic_l2(N), nm, nm / nf,
                                  time.perf_counter() - t0])
    return rows


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_HEADER = _BASE_HEADER + [
    "N", "member", "grid_n", "norm_in", "norm_out", "ratio",
    "slope", "residual_quarter", "residual_quarter_sqrtlog", "seconds",
]


def run_sweep(cfg: ExperimentConfig, profile: Profile | None = None) -> list[list]:
    """Max ratio |M0 F|_2/|F|_2 over the test family per N, plus a summary
    row with the fitted exponent of the max ratio against N."""
    profile = profile or make_profile()
    base_grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    rows = []
    max_ratios = []
    for N in sorted(cfg.num_dirs):
        ds = cfg.make_directions(N)
        best = 0.0
        t_start = time.perf_counter()
        members = sweep_family(base_grid, ds, seed=cfg.seed)
        for name, F in members:
            t0 = time.perf_counter()
            Fd = Field(base_grid, np.asarray(F.samples, dtype=cfg.np_dtype))
            out = apply_M0(Fd, ds, profile, workers=cfg.threads)
            nf, nm = norm(Fd, 2), norm(out, 2)
            ratio = nm / nf
            best = max(best, ratio)
            rows.append(_base(cfg) + [N, name, base_grid.points_per_axis, nf, nm, ratio,
                                      "", "", "", time.perf_counter() - t0])
        # the sharpness member runs on its own resolving grid
        t0 = time.perf_counter()
        n_sharp = sharpness_grid_n(N, cfg.domain_length, minimum=cfg.grid_n)
        sharp_grid = make_grid(3, n_sharp, cfg.domain_length)
        F = sharpness_field(N, sharp_grid, dtype=cfg.np_dtype)
        out = apply_M0(F, ds, profile, workers=cfg.threads)
        nf, nm = norm(F, 2), norm(out, 2)
        ratio = nm / nf
        best = max(best, ratio)
        rows.append(_base(cfg) + [N, "sharpness", n_sharp, nf, nm, ratio,
                                  "", "", "", time.perf_counter() - t0])
        max_ratios.append(best)
        rows.append(_base(cfg) + [N, "__max__", "", "", "", best, "", "", "",
                                  time.perf_counter() - t_start])
    Ns = sorted(cfg.num_dirs)
    if len(Ns) >= 2:
        slope = fit_power_law(Ns, max_ratios)
        r14 = _fixed_exponent_residual(Ns, max_ratios, 0.25)
        r14log = _fixed_exponent_residual(Ns, max_ratios, 0.25, log_factor_power=0.5)
        rows.append(_base(cfg) + ["", "__summary__", "", "", "", "", slope, r14, r14log, 0.0])
    else:
        rows.append(_base(cfg) + ["", "__summary__", "", "", "", "", "NA", "NA", "NA", 0.0])
    return rows


# ---------------------------------------------------------------------------
# annulus
# ---------------------------------------------------------------------------

ANNULUS_HEADER = _BASE_HEADER + [
    "N", "k", "member", "norm_in", "norm_out", "ratio",
    "envelope_2k2", "envelope_count", "bound_20min", "within_bound", "seconds",
]


def annulus_envelopes(N: int, k: int) -> tuple[float, float]:
    """The two per-annulus envelopes: 2^{k/2} and sqrt(max(N 2^{-k}, sqrt N))."""
    return 2.0 ** (k / 2.0), float(np.sqrt(max(N * 2.0**-k, np.sqrt(N))))


def run_annulus(cfg: ExperimentConfig, profile: Profile | None = None) -> list[list]:
    """Measure |M0 S_k F|_2 / |S_k F|_2 over the family against both
    theoretical envelopes."""
    profile = profile or make_profile()
    grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    rows = []
    for k in cfg.k_list:
        if 2.0 ** (k + 1) > grid.nyquist:
            raise ValueError(f"annulus k={k} extends beyond Nyquist {grid.nyquist:.1f}")
    for N in cfg.num_dirs:
        ds = cfg.make_directions(N)
        for k in cfg.k_list:
            env1, env2 = annulus_envelopes(N, k)
            bound = 20.0 * min(env1, env2)
            for name, F in annulus_family(grid, k, ds, seed=cfg.seed):
                t0 = time.perf_counter()
                G = _real_field(project_S_k(transform(F), k), dtype=cfg.np_dtype)
                ni = norm(G, 2)
                if ni < 1e-12:
                    continue
                out = apply_M0(G, ds, profile, workers=cfg.threads)
                no = norm(out, 2)
                ratio = no / ni
                rows.append(_base(cfg) + [N, k, name, ni, no, ratio, env1, env2, bound,
                                          int(ratio <= bound), time.perf_counter() - t0])
    return rows


# ---------------------------------------------------------------------------
# combinatorics
# ---------------------------------------------------------------------------

COMBINATORICS_HEADER = _BASE_HEADER + [
    "N", "k", "tube_count", "max_count", "bad_tube_count", "L", "sqrt_N",
    "max_residual_count", "count_bound_8max", "within_count_bound",
    "invariants_ok", "seconds",
]


def run_combinatorics(cfg: ExperimentConfig, verbose: bool = False) -> list[list]:
    """Incidence counts and greedy selection summaries per (N, k)."""
    grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    rows = []
    for N in cfg.num_dirs:
        ds = cfg.make_directions(N)
        for k in cfg.k_list:
            t0 = time.perf_counter()
            system = make_tube_system(k, grid)
            table = combinat.incidences(ds, system)
            bad = combinat.bad_tubes(table, N)
            sel = combinat.greedy_select(ds, system, table=table)
            ok = True
            try:
                combinat.check_selection(sel, table)
            except AssertionError:
                ok = False
            counts = table.counts
            residual_mask = np.zeros(N, dtype=bool)
            if sel.residual:
                residual_mask[list(sel.residual)] = True
            max_resid = int((table.membership & residual_mask[:, None]).sum(axis=0).max())
            count_bound = 8.0 * max(N * 2.0**-k, np.sqrt(N))
            within = int(counts.max() <= count_bound) if cfg.dirs == "fibonacci" else ""
            rows.append(_base(cfg) + [N, k, system.cap_count, int(counts.max()), len(bad),
                                      sel.L, np.sqrt(N), max_resid, count_bound, within,
                                      int(ok), time.perf_counter() - t0])
            if verbose:
                print(f"N={N} k={k}: L={sel.L}, sqrt(N)={np.sqrt(N):.2f}, "
                      f"max residual count={max_resid}")
    return rows


# ---------------------------------------------------------------------------
# cww
# ---------------------------------------------------------------------------

CWW_HEADER = _BASE_HEADER + [
    "field", "lambda", "epsilon", "lhs_measure", "rhs_measure", "c1", "implied_c2",
    "fitted_c2", "seconds",
]


def run_cww(cfg: ExperimentConfig, n_fields: int = 50,
            epsilons=(0.1, 0.3, 0.5, 0.7, 0.9)) -> list[list]:
    """Empirical good-lambda envelope: the largest implied c2 over fields,
    a lambda grid, and an epsilon grid, for the supplied c1."""
    grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    fitted = 0.0
    t_all = time.perf_counter()
    for i in range(n_fields):
        band = rng.uniform(2.0, 0.6 * grid.nyquist)
        F = random_band_limited(grid, band, rng)
        spread = norm(F, np.inf)
        for lam in np.array([0.05, 0.1, 0.2, 0.4, 0.8]) * spread:
            for eps in epsilons:
                rep = martingale.cww_check(F, lam, eps, c1=cfg.c1)
                if np.isfinite(rep.implied_c2):
                    fitted = max(fitted, rep.implied_c2)
                rows.append(_base(cfg) + [f"random-{i}", rep.lam, rep.epsilon,
                                          rep.lhs_measure, rep.rhs_measure, rep.c1,
                                          rep.implied_c2, "", 0.0])
    rows.append(_base(cfg) + ["__summary__", "", "", "", "", cfg.c1, "", fitted,
                              time.perf_counter() - t_all])
    return rows


# ---------------------------------------------------------------------------
# nikodym
# ---------------------------------------------------------------------------

NIKODYM_HEADER = _BASE_HEADER + [
    "delta", "field", "norm_F", "norm_Nstar", "ratio_Nstar", "norm_M0_sum",
    "domination_constant", "dominated_by_8", "seconds",
]


def run_nikodym(cfg: ExperimentConfig, profile: Profile | None = None,
                n_fields: int = 10) -> list[list]:
    """Pointwise domination of the smooth Nikodym maximal function by the
    directional maximal pieces: N*(F) <= C (M0 F^s + sum_k M0 S_k F)."""
    profile = profile or make_profile()
    delta = cfg.delta
    grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    N_delta = round(delta**-2)
    ds = gen_separated(N_delta)
    k_max = int(np.floor(np.log2(1.0 / delta)))
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(n_fields):
        t0 = time.perf_counter()
        F = random_band_limited(grid, 0.7 * grid.nyquist, rng, dtype=cfg.np_dtype)
        nstar = apply_nikodym(F, delta, ds, profile, workers=cfg.threads)
        spec = transform(F)
        low, _, _ = split_regimes(spec, max(2, N_delta))  # F^s: |f| < 1 incl. the mean
        Fs = _real_field(low, dtype=cfg.np_dtype)
        rhs = apply_M0(Fs, ds, profile, workers=cfg.threads).samples.astype(np.float64)
        for k in range(0, k_max + 1):
            Gk_field = _real_field(project_S_k(spec, k), dtype=cfg.np_dtype)
            rhs = rhs + apply_M0(Gk_field, ds, profile, workers=cfg.threads).samples
        lhs = nstar.samples.astype(np.float64)
        denom_floor = 1e-12 * max(float(lhs.max()), 1e-300)
        mask = rhs > denom_floor
        const = float((lhs[mask] / rhs[mask]).max()) if mask.any() else 0.0
        nf = norm(F, 2)
        rows.append(_base(cfg) + [delta, f"random-{i}", nf, norm(nstar, 2),
                                  norm(nstar, 2) / nf,
                                  float(np.sqrt(np.sum(rhs**2) * grid.cell_volume)),
                                  const, int(const <= 8.0), time.perf_counter() - t0])
    return rows


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------

REGIMES_HEADER = _BASE_HEADER + [
    "N", "regime", "detail", "value1", "value2", "value3", "seconds",
]


def run_regimes(cfg: ExperimentConfig, profile: Profile | None = None,
                n_lambda: int = 12) -> list[list]:
    """Instrument the three-regime decomposition of the operator for small N:
    the small-regime ratio, the per-annulus intermediate bounds, and the
    good-lambda set measures of the large regime."""
    profile = profile or make_profile()
    N = cfg.num_dirs[0]
    grid = make_grid(3, cfg.grid_n, cfg.domain_length)
    if N**3 >= grid.nyquist:
        raise ValueError(f"need N^3 < Nyquist for a nontrivial high regime; "
                         f"N={N}, Nyquist={grid.nyquist:.1f}")
    ds = cfg.make_directions(N)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    t0 = time.perf_counter()
    F = random_band_limited(grid, 0.9 * np.sqrt(3) * grid.nyquist, rng)
    spec = transform(F)
    low, mid, high = split_regimes(spec, N)
    K = int(np.floor(3 * np.log2(N)))

    # small regime
    Fs = _real_field(low)
    ns = norm(Fs, 2)
    if ns > 0:
        ratio_s = norm(apply_M0(Fs, ds, profile, workers=cfg.threads), 2) / ns
        rows.append(_base(cfg) + [N, "small", "ratio_M0", ratio_s, "", "",
                                  time.perf_counter() - t0])

    # intermediate regime: per-annulus ratios and their triangle-inequality sum
    t0 = time.perf_counter()
    total = 0.0
    nmid = float(np.sqrt(np.sum(np.abs(mid.coefficients)**2)
                         * grid.domain_length**3))
    for k in range(0, K + 1):
        Gf = _real_field(project_S_k(spec, k))
        nk = norm(Gf, 2)
        if nk < 1e-14:
            continue
        rk = norm(apply_M0(Gf, ds, profile, workers=cfg.threads), 2)
        total += rk
        rows.append(_base(cfg) + [N, "intermediate", f"k={k}", nk, rk, rk / nk, 0.0])
    if nmid > 0:
        rows.append(_base(cfg) + [N, "intermediate", "sum_bound", total, nmid,
                                  total / nmid, time.perf_counter() - t0])

    # large regime: G(F), the three exceptional sets over a lambda grid
    t0 = time.perf_counter()
    eps_N = 1.0 / np.sqrt(cfg.c1 * np.log(N))
    Fl = _real_field(high)
    nl = norm(Fl, 2)
    G_sq = np.zeros(grid.shape)
    for k in range(K + 1, K + 16):
        if 2.0 ** (k - 1) > np.sqrt(3) * grid.nyquist:
            break
        Gk = project_S_k(spec, k)
        if not np.any(Gk.coefficients):
            continue
        Gf = _real_field(Gk)
        piece = apply_O(apply_M0(Gf, ds, profile, workers=cfg.threads))
        G_sq += piece.samples**2
    G = np.sqrt(G_sq)
    rows.append(_base(cfg) + [N, "large", "norm_G_over_norm_Fl",
                              float(np.sqrt(np.sum(G_sq) * grid.cell_volume)), nl,
                              (np.sqrt(np.sum(G_sq) * grid.cell_volume) / nl if nl > 0 else ""),
                              time.perf_counter() - t0])

    t0 = time.perf_counter()
    centered_max = np.zeros(grid.shape)
    e0_max = np.zeros(grid.shape)
    full_max = np.zeros(grid.shape)
    for v in ds.vectors:
        Tv = apply_T_v(high, v, profile).samples
        Tv = np.asarray(Tv.real if np.iscomplexobj(Tv) else Tv)
        mean = Tv.mean()
        np.maximum(centered_max, np.abs(Tv - mean), out=centered_max)
        e0_max = np.maximum(e0_max, abs(mean))
        np.maximum(full_max, np.abs(Tv), out=full_max)
    vol = grid.cell_volume
    peak = float(full_max.max())
    c3 = 1.0
    ints = np.zeros(3)
    lam_grid = np.linspace(0.05, 1.0, n_lambda) * max(peak / 4.0, 1e-12)
    for lam in lam_grid:
        E1 = float(np.count_nonzero((centered_max > 2 * lam) & (G <= eps_N * lam / c3)) * vol)
        E2 = float(np.count_nonzero(G > eps_N * lam / c3) * vol)
        E3 = float(np.count_nonzero(e0_max > 2 * lam) * vol)
        rows.append(_base(cfg) + [N, "large", f"lambda={lam:.6g}", E1, E2, E3, 0.0])
        w = lam * (lam_grid[1] - lam_grid[0])
        ints += w * np.array([E1, E2, E3])
    rows.append(_base(cfg) + [N, "large", "lambda_integrals", ints[0], ints[1], ints[2],
                              time.perf_counter() - t0])
    return rows


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_RUNNERS = {
    "sharpness": (run_sharpness, SHARPNESS_HEADER),
    "sweep": (run_sweep, SWEEP_HEADER),
    "annulus": (run_annulus, ANNULUS_HEADER),
    "combinatorics": (run_combinatorics, COMBINATORICS_HEADER),
    "cww": (run_cww, CWW_HEADER),
    "nikodym": (run_nikodym, NIKODYM_HEADER),
    "regimes": (run_regimes, REGIMES_HEADER),
}


def run_experiment(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    runner, header = _RUNNERS[cfg.experiment]
    rows = runner(cfg)
    if cfg.out:
        write_csv(cfg.out, header, rows)
    return header, rows

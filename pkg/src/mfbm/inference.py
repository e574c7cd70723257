"""Parameter recovery, asymptotic covariance of the log-spectrum, FGLS,
and the chi-square goodness-of-fit test with recursive selection of the
number of frequency changes.

Per segment, the log-spectrum values at m regression frequencies g_1..g_m
follow a line in log frequency with slope -(2H+1) and intercept
log sigma^2 + log K_H. Their asymptotic covariance (after the sqrt(n delta)
scaling) has entries

    s_kl = pref * (g_k g_l)^(2H) / K_H^2
           * int ( int profile(xi/g_k) profile(xi/g_l) |xi|^-(2H+1)
                   e^(-i u xi) d xi )^2 du

with pref = 2 / (1 - 2r) by default ("limit" convention; the "plain"
convention drops the 1/(1-2r) factor and is exposed for comparison).
Entries vanish exactly when g_l / g_k >= beta / alpha (disjoint bands).
The weighted distance between the refine-point values and their FGLS line,
scaled by n delta, is asymptotically chi-square with (K+1)(m-2) degrees
of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammainc, gammaincc

from .changepoint import FrequencyGrid, Segmentation, build_grid, minimize_q, omega_hat, refine_points
from .errors import AnalysisError, MfbmError, NumericError
from .model import SampledPath
from .wavelet import BandWavelet, WaveletSpectrum, k_const, spectrum

__all__ = [
    "SegmentEstimate",
    "FitResult",
    "ols_estimate",
    "sigma_matrix",
    "fgls_estimate",
    "test_statistic",
    "chi2_upper_tail",
    "chi2_cdf",
    "fit_fixed_k",
    "select_k",
]

H_CLAMP = (0.05, 0.95)
SIGMA_CONVENTIONS = ("limit", "plain")
_COND_GUARD = 1e12


@dataclass(frozen=True)
class SegmentEstimate:
    """Per-segment parameter estimates from a regression on m refine points.

    lambda_cov, when present, is the asymptotic covariance of the
    (slope, intercept) vector under the sqrt(n delta) scaling: the sandwich
    form for the OLS flavor, (X' Sigma^-1 X)^-1 for the FGLS flavor.
    """

    hurst: float
    sigma2: float
    slope: float
    intercept: float
    points: np.ndarray
    freqs: np.ndarray
    flavor: str
    clamped: bool
    sigma: np.ndarray | None = field(default=None, repr=False)
    regularized: bool = False
    lambda_cov: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self):
        out = {
            "H": self.hurst,
            "sigma2": self.sigma2,
            "slope": self.slope,
            "intercept": self.intercept,
            "points": [int(p) for p in self.points],
            "flavor": self.flavor,
            "clamped": self.clamped,
            "regularized": self.regularized,
        }
        if self.lambda_cov is not None:
            out["lambda_cov"] = [[float(v) for v in row] for row in self.lambda_cov]
        return out


@dataclass(frozen=True)
class FitResult:
    """Outcome of fitting a k-change model to one spectrum."""

    k: int
    segmentation: Segmentation
    omegas: np.ndarray
    segments: tuple          # FGLS estimates, one per segment
    segments_ols: tuple      # the refine-point OLS estimates they started from
    t_stat: float
    dof: int
    p_value: float
    accepted: bool
    level: float
    r: float
    sigma_convention: str

    def to_dict(self):
        return {
            "K": self.k,
            "breakpoints": [int(t) for t in self.segmentation.t],
            "omegas": [float(w) for w in self.omegas],
            "segments": [s.to_dict() for s in self.segments],
            "segments_ols": [s.to_dict() for s in self.segments_ols],
            "T_stat": self.t_stat,
            "dof": self.dof,
            "p_value": self.p_value,
            "accepted": self.accepted,
            "level": self.level,
            "r": self.r,
            "sigma_convention": self.sigma_convention,
        }


def chi2_upper_tail(x: float, dof: int) -> float:
    """P(chi2_dof > x), via the regularized upper incomplete gamma function."""
    if x < 0:
        raise ValueError("statistic must be nonnegative")
    if dof < 1:
        raise ValueError("need at least one degree of freedom")
    return float(gammaincc(dof / 2.0, x / 2.0))


def chi2_cdf(x, dof: int):
    """P(chi2_dof <= x), vectorized."""
    if dof < 1:
        raise ValueError("need at least one degree of freedom")
    return gammainc(dof / 2.0, np.maximum(np.asarray(x, dtype=float), 0.0) / 2.0)


def _recover(slope: float, intercept: float, w: BandWavelet):
    """Invert (slope, intercept) -> (H, sigma^2); H clamped into H_CLAMP."""
    h_raw = -(slope + 1.0) / 2.0
    h = min(max(h_raw, H_CLAMP[0]), H_CLAMP[1])
    clamped = h != h_raw
    sigma2 = float(np.exp(intercept - np.log(k_const(w, h))))
    return h, sigma2, clamped


def ols_estimate(y: np.ndarray, grid: FrequencyGrid, points, w: BandWavelet) -> SegmentEstimate:
    """Ordinary least squares line through (log f_i, y_i) at the given grid
    indices, inverted to (H, sigma^2)."""
    points = np.asarray(points, dtype=int)
    if points.size < 3:
        raise ValueError("need at least three regression points")
    x = grid.log_f[points]
    if np.ptp(x) == 0.0:
        raise ValueError("regression design has zero variance")
    yv = np.asarray(y, dtype=float)[points]
    slope, intercept = np.polyfit(x, yv, 1)
    h, sigma2, clamped = _recover(float(slope), float(intercept), w)
    return SegmentEstimate(
        hurst=h, sigma2=sigma2, slope=float(slope), intercept=float(intercept),
        points=points, freqs=grid.f[points], flavor="ols", clamped=clamped,
    )


# --- asymptotic covariance of the log-spectrum ------------------------------

_GL16_NODES, _GL16_WEIGHTS = leggauss(16)


def _gl_panels(lo: float, hi: float, n_panels: int):
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _GL16_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL16_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _sigma_entry(h: float, g_lo: float, g_hi: float, w: BandWavelet) -> float:
    """integral over the line of F(u)^2 du, where F is the inverse-Fourier-type
    transform of W(xi) = profile(xi/g_lo) profile(xi/g_hi) |xi|^(-2H-1)
    (W even, so F is real and even).

    Plancherel turns the double integral into a single smooth one:
    int F(u)^2 du = 2 pi int W(xi)^2 dxi = 4 pi int_band W^2, with the band
    [alpha g_hi, beta g_lo] (empty when the frequency ratio reaches
    beta/alpha, making the entry exactly zero).
    """
    xi_lo = w.alpha * g_hi
    xi_hi = w.beta * g_lo
    if xi_hi <= xi_lo:
        return 0.0
    val, err = quad(
        lambda xi: (w.profile_values(xi / g_lo) * w.profile_values(xi / g_hi)) ** 2
        * xi ** (-2.0 * (2.0 * h + 1.0)),
        xi_lo, xi_hi, epsabs=0.0, epsrel=1e-11, limit=200,
    )
    if not np.isfinite(val) or (val > 0 and err > 1e-8 * val):
        raise NumericError(
            f"covariance kernel quadrature at frequencies ({g_lo:.4g}, {g_hi:.4g}) "
            f"reached only {err:.2e} absolute error"
        )
    return 4.0 * np.pi * val


def _sigma_entry_oscillatory(h: float, g_lo: float, g_hi: float, w: BandWavelet) -> float:
    """Same integral computed the long way: the inner oscillatory transform on
    Gauss-Legendre panels (at least 8 nodes per period of e^(-i u xi)), the
    outer u-integral truncated where the modulus envelope falls below 1e-8 of
    its u = 0 value and integrated at matching node density, doubling the
    density until the value settles. Slow; kept as an independent check of
    the Plancherel route.
    """
    xi_lo = w.alpha * g_hi
    xi_hi = w.beta * g_lo
    if xi_hi <= xi_lo:
        return 0.0

    def weight_fn(xi):
        return (w.profile_values(xi / g_lo) * w.profile_values(xi / g_hi)
                * xi ** (-2.0 * h - 1.0))

    # envelope scan for the truncation point; the xi-rule is re-densified with
    # the scanned u-range so the phase e^(-i u xi) stays resolved
    width = xi_hi - xi_lo
    du = 0.25 * (2.0 * np.pi) / width
    u_max = None
    u_hi = 32.0 / width
    f0 = None
    while u_max is None:
        n_env = max(64, int(np.ceil(8.0 * width * u_hi / (2.0 * np.pi))))
        xi_env, wt_env = _gl_panels(xi_lo, xi_hi, max(1, -(-n_env // 16)))
        wf_env = weight_fn(xi_env) * wt_env
        f0 = float(np.sum(wf_env))
        if f0 <= 0.0:
            return 0.0
        us = np.arange(0.0, u_hi, du)
        env = np.empty(us.size)
        chunk = max(1, int(4e6) // xi_env.size)
        for i in range(0, us.size, chunk):
            env[i : i + chunk] = np.abs(np.exp(-1j * np.outer(us[i : i + chunk], xi_env)) @ wf_env)
        quiet = env < 1e-8 * f0
        if np.all(quiet[us > 0.5 * u_hi]):
            over = us[~quiet]
            u_max = float(over[-1]) + 2.0 * du if over.size else 2.0 * du
        else:
            u_hi *= 2.0
            if u_hi * xi_hi > 5e7:
                raise NumericError(
                    f"covariance kernel at frequencies ({g_lo:.4g}, {g_hi:.4g}) decays too slowly"
                )

    # inner xi-rule dense enough for the fastest phase e^(-i u_max xi)
    n_xi = max(n_env, int(np.ceil(8.0 * width * u_max / (2.0 * np.pi))))
    xi_nodes, xi_wts = _gl_panels(xi_lo, xi_hi, max(1, int(np.ceil(n_xi / 16))))
    wf = weight_fn(xi_nodes) * xi_wts

    def outer(density):
        n_u = max(64, int(np.ceil(density * u_max * xi_hi / np.pi)))
        u_nodes, u_wts = _gl_panels(0.0, u_max, max(1, int(np.ceil(n_u / 16))))
        total = 0.0
        chunk = max(1, int(4e6) // xi_nodes.size)
        for i in range(0, u_nodes.size, chunk):
            block = u_nodes[i : i + chunk]
            f_vals = 2.0 * (np.cos(np.outer(block, xi_nodes)) @ wf)
            total += float(u_wts[i : i + chunk] @ (f_vals * f_vals))
        return 2.0 * total  # even in u

    val = outer(8.0)
    refined = outer(12.0)
    if abs(refined - val) > 1e-6 * max(abs(refined), 1e-300):
        val = refined
        refined = outer(24.0)
        if abs(refined - val) > 1e-5 * max(abs(refined), 1e-300):
            raise NumericError(
                f"u-quadrature for the covariance kernel did not settle "
                f"(last refinement moved the value by {abs(refined - val):.2e})"
            )
    return refined


def sigma_matrix(hurst: float, freqs, w: BandWavelet, r: float,
                 convention: str = "limit") -> np.ndarray:
    """Asymptotic covariance matrix of the scaled log-spectrum at the given
    regression frequencies, for a regime with the given Hurst exponent.

    convention="limit" includes the 1/(1-2r) trimming factor; "plain" drops it.
    Entries for frequency pairs with ratio >= beta/alpha are exactly zero.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError("Hurst exponent must lie in (0, 1)")
    if convention not in SIGMA_CONVENTIONS:
        raise ValueError(f"unknown sigma convention {convention!r}")
    g = np.asarray(freqs, dtype=float)
    if g.ndim != 1 or g.size < 1:
        raise ValueError("need a one-dimensional list of frequencies")
    if np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise ValueError("frequencies must be ascending and positive")
    m = g.size
    kh = k_const(w, hurst)
    pref = 2.0 / kh**2
    if convention == "limit":
        pref /= 1.0 - 2.0 * r
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            if g[j] / g[i] >= w.ratio:
                continue
            core = _sigma_entry(hurst, g[i], g[j], w)
            out[i, j] = out[j, i] = pref * (g[i] * g[j]) ** (2.0 * hurst) * core
    return out


def fgls_estimate(y: np.ndarray, grid: FrequencyGrid, points, sigma: np.ndarray,
                  w: BandWavelet) -> SegmentEstimate:
    """Generalized least squares line with weight matrix sigma^(-1), inverted
    to (H, sigma^2).

    If sigma's condition number exceeds 1e12 a small ridge (1e-10 trace/m) is
    added and the estimate is flagged as regularized.
    """
    points = np.asarray(points, dtype=int)
    if points.size < 3:
        raise ValueError("need at least three regression points")
    sigma = np.asarray(sigma, dtype=float)
    m = points.size
    if sigma.shape != (m, m):
        raise ValueError(f"covariance must be {m} x {m}")
    sigma_used, regularized = _guard_condition(sigma)
    x = np.column_stack([grid.log_f[points], np.ones(m)])
    yv = np.asarray(y, dtype=float)[points]
    factor = cho_factor(sigma_used, lower=True)
    xtw = x.T @ cho_solve(factor, x)
    beta = np.linalg.solve(xtw, x.T @ cho_solve(factor, yv))
    slope, intercept = float(beta[0]), float(beta[1])
    h, sigma2, clamped = _recover(slope, intercept, w)
    return SegmentEstimate(
        hurst=h, sigma2=sigma2, slope=slope, intercept=intercept,
        points=points, freqs=grid.f[points], flavor="fgls", clamped=clamped,
        sigma=sigma_used, regularized=regularized,
    )


def _guard_condition(sigma: np.ndarray):
    eigs = np.linalg.eigvalsh(sigma)
    if eigs[0] > 0 and eigs[-1] / eigs[0] < _COND_GUARD:
        return sigma, False
    eps = 1e-10 * np.trace(sigma) / sigma.shape[0]
    if eps <= 0:
        raise NumericError(
            f"covariance is not usable even with ridge regularization "
            f"(eigenvalue range [{eigs[0]:.3e}, {eigs[-1]:.3e}])"
        )
    return sigma + eps * np.eye(sigma.shape[0]), True


def test_statistic(residuals, sigmas, n: int, delta: float):
    """(T, dof): T = n delta * sum_j r_j' sigma_j^(-1) r_j over segments,
    dof = (#segments)(m - 2)."""
    residuals = [np.asarray(r, dtype=float) for r in residuals]
    sigmas = list(sigmas)
    if not residuals or len(residuals) != len(sigmas):
        raise ValueError("need one covariance per residual vector")
    m = residuals[0].size
    if m < 3:
        raise ValueError("need at least three points per segment for a testable fit")
    total = 0.0
    for r_j, s_j in zip(residuals, sigmas):
        if r_j.size != m:
            raise ValueError("all segments must use the same number of points")
        factor = cho_factor(np.asarray(s_j, dtype=float), lower=True)
        total += float(r_j @ cho_solve(factor, r_j))
    dof = len(residuals) * (m - 2)
    return n * delta * total, dof


def _lambda_covariances(log_f: np.ndarray, sigma: np.ndarray):
    """Asymptotic covariances of (slope, intercept): the OLS sandwich and the
    generalized-least-squares form, both under the sqrt(n delta) scaling."""
    x = np.column_stack([log_f, np.ones(log_f.size)])
    xtx_inv = np.linalg.inv(x.T @ x)
    gamma1 = xtx_inv @ x.T @ sigma @ x @ xtx_inv
    gamma2 = np.linalg.inv(x.T @ np.linalg.solve(sigma, x))
    return gamma1, gamma2


def _check_segment_separation(points, grid: FrequencyGrid, ratio: float):
    """Refine points of different segments must sit at frequency ratio >= beta/alpha."""
    for prev, nxt in zip(points, points[1:]):
        if grid.f[nxt[0]] / grid.f[prev[-1]] < ratio:
            raise AnalysisError(
                "refine points of adjacent segments are closer than the wavelet "
                "band ratio; transition handling is inconsistent"
            )


def fit_fixed_k(spec: WaveletSpectrum, w: BandWavelet, k: int, m: int = 5,
                level: float = 0.05, sigma_convention: str = "limit") -> FitResult:
    """Full fit of a k-change model to one spectrum: segmentation, refine-point
    OLS, covariance, FGLS and the goodness-of-fit statistic."""
    grid = spec.grid
    seg = minimize_q(spec.y, grid, k)
    omegas = omega_hat(grid, seg.t)
    points = refine_points(seg.t, grid, m)
    _check_segment_separation(points, grid, w.ratio)

    ols_list, fgls_list, residuals, sigmas = [], [], [], []
    for pts in points:
        est = ols_estimate(spec.y, grid, pts, w)
        sig = sigma_matrix(est.hurst, grid.f[pts], w, spec.r, convention=sigma_convention)
        fin = fgls_estimate(spec.y, grid, pts, sig, w)
        gamma1, gamma2 = _lambda_covariances(grid.log_f[pts], fin.sigma)
        ols_list.append(replace(est, lambda_cov=gamma1))
        fgls_list.append(replace(fin, lambda_cov=gamma2))
        resid = spec.y[pts] - (fin.slope * grid.log_f[pts] + fin.intercept)
        residuals.append(resid)
        sigmas.append(fin.sigma)
    t_stat, dof = test_statistic(residuals, sigmas, grid.n, grid.delta)
    p = chi2_upper_tail(t_stat, dof)
    return FitResult(
        k=k, segmentation=seg, omegas=omegas, segments=tuple(fgls_list),
        segments_ols=tuple(ols_list), t_stat=float(t_stat), dof=dof,
        p_value=p, accepted=p >= level, level=level, r=spec.r,
        sigma_convention=sigma_convention,
    )


def select_k(path: SampledPath, w: BandWavelet, f_min: float, f_max: float,
             m: int = 5, r: float = 0.1, level: float = 0.05, k_max: int = 2,
             sigma_convention: str = "limit", engine: str = "czt") -> FitResult:
    """Recursive model-order selection: fit k = 0, 1, ... and stop at the first
    k whose goodness-of-fit test accepts at the given level.

    Returns the first accepted fit, or the k_max fit flagged as not accepted.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    grid = build_grid(path.n, path.delta, f_min, f_max, w)
    try:
        spec = spectrum(path, w, grid, r=r, engine=engine)
    except MfbmError as e:
        raise type(e)(f"[spectrum] {e}") from e
    result = None
    for k in range(k_max + 1):
        try:
            result = fit_fixed_k(spec, w, k, m=m, level=level, sigma_convention=sigma_convention)
        except MfbmError as e:
            raise type(e)(f"[K={k}] {e}") from e
        if result.accepted:
            return result
    return result

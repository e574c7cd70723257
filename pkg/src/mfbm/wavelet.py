"""Band-limited analyzing wavelets and the wavelet log-variance spectrum.

The analyzing function psi has an even, real, nonnegative Fourier profile
supported on [alpha, beta] in |xi|. All moments of psi vanish, and the
variance of its coefficients at scale a is an exact power law in a inside
a single spectral regime; that identity is what the whole estimation
pipeline regresses on.

Time-domain evaluation uses a precomputed table (psi is the cosine
transform of the profile, sampled finely and interpolated cubically).
The spectrum engine evaluates the same Riemann sums through a chirp-z
transform: sampling the Fourier profile on a uniform grid of spacing
d_xi makes the effective time-domain kernel the 2*pi/d_xi-periodization
of psi, so choosing d_xi small enough keeps the wrap-around images below
the same tail tolerance the table uses, at a small fraction of the cost.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.signal import czt

from .changepoint import FrequencyGrid
from .errors import AnalysisError, DegeneratePathError, NumericError
from .model import ModelSpec, SampledPath

__all__ = [
    "BandWavelet",
    "WaveletSpectrum",
    "psi_hat",
    "psi_time",
    "k_const",
    "theoretical_variance",
    "empirical_coeff",
    "spectrum",
]

_TAIL_TOL = 1e-10
_REACH_CAP = 8192.0
_TABLE_NODES_PER_PERIOD = 64


def _meyer_nu(x):
    """Smooth 0 -> 1 ramp with three vanishing derivatives at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 - 84.0 * x + 70.0 * x**2 - 20.0 * x**3)


class BandWavelet:
    """Analyzing wavelet with Fourier profile supported on [alpha, beta] in |xi|.

    Construct via the classmethods: bump() for the exponential bump profile,
    meyer_shifted() for the ramp/window profile on [pi, 2*pi], from_table()
    or from_table_file() for a tabulated profile, from_profile() for any
    callable.
    """

    def __init__(self, alpha: float, beta: float, profile, kind: str = "custom"):
        if not 0 < alpha < beta:
            raise ValueError("need 0 < alpha < beta")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.kind = kind
        self._profile = profile
        self._lock = threading.Lock()
        self._psi0 = None
        self._reach = None
        self._table = None
        self._table_step = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def bump(cls, alpha: float = 5.0, beta: float = 10.0) -> "BandWavelet":
        """Profile exp(-1 / ((|xi| - alpha) (beta - |xi|))) on alpha < |xi| < beta."""

        def profile(x, _a=float(alpha), _b=float(beta)):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            inside = (x > _a) & (x < _b)
            xi = x[inside]
            out[inside] = np.exp(-1.0 / ((xi - _a) * (_b - xi)))
            return out

        return cls(alpha, beta, profile, kind="bump")

    @classmethod
    def meyer_shifted(cls) -> "BandWavelet":
        """Window profile on [pi, 2*pi] (band ratio 2) built from the standard
        quartic ramp: sine quarter-wave up on [pi, 3*pi/2], cosine down after.
        """
        a, b = np.pi, 2.0 * np.pi
        mid = 1.5 * np.pi
        half = 0.5 * np.pi

        def profile(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            up = (x >= a) & (x <= mid)
            down = (x > mid) & (x <= b)
            out[up] = np.sin(0.5 * np.pi * _meyer_nu((x[up] - a) / half))
            out[down] = np.cos(0.5 * np.pi * _meyer_nu((x[down] - mid) / half))
            return out

        return cls(a, b, profile, kind="meyer-shifted")

    @classmethod
    def from_table(cls, xi, values, alpha: float, beta: float) -> "BandWavelet":
        """Tabulated profile; sample abscissae must lie strictly inside (alpha, beta).

        The profile is linearly interpolated and pinned to zero at both band
        edges.
        """
        xi = np.asarray(xi, dtype=float)
        values = np.asarray(values, dtype=float)
        if xi.ndim != 1 or xi.shape != values.shape or xi.size < 2:
            raise ValueError("need matching 1-d abscissa/value columns with at least two rows")
        if np.any(np.diff(xi) <= 0):
            raise ValueError("profile abscissae must be strictly increasing")
        if xi[0] <= alpha or xi[-1] >= beta:
            raise ValueError("profile samples must lie strictly inside (alpha, beta)")
        if np.any(values < 0):
            raise ValueError("profile values must be nonnegative")
        grid = np.concatenate(([alpha], xi, [beta]))
        vals = np.concatenate(([0.0], values, [0.0]))

        def profile(x):
            x = np.asarray(x, dtype=float)
            return np.interp(x, grid, vals, left=0.0, right=0.0)

        return cls(alpha, beta, profile, kind="custom-table")

    @classmethod
    def from_table_file(cls, path, alpha: float, beta: float) -> "BandWavelet":
        """Load a two-column text file (xi, profile value)."""
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError("profile file must have exactly two columns")
        return cls.from_table(data[:, 0], data[:, 1], alpha, beta)

    @classmethod
    def from_profile(cls, func, alpha: float, beta: float, kind: str = "custom") -> "BandWavelet":
        return cls(alpha, beta, func, kind=kind)

    # -- Fourier side --------------------------------------------------------

    @property
    def ratio(self) -> float:
        return self.beta / self.alpha

    def profile_values(self, xi):
        """Profile at |xi| (even extension), vectorized, zero outside the band."""
        x = np.abs(np.asarray(xi, dtype=float))
        scalar = x.ndim == 0
        vals = np.asarray(self._profile(np.atleast_1d(x)), dtype=float)
        return float(vals[0]) if scalar else vals

    @property
    def psi0(self) -> float:
        """psi(0) = (1/pi) * integral of the profile; also max |psi|."""
        if self._psi0 is None:
            val, _ = quad(self.profile_values, self.alpha, self.beta,
                          epsabs=1e-14, epsrel=1e-12, limit=200)
            with self._lock:
                self._psi0 = val / np.pi
        return self._psi0

    # -- time-domain machinery ----------------------------------------------

    def _fourier_sum(self, ts, guard):
        """(1/pi) * integral of profile * exp(-i t xi), anti-aliased out to guard.

        Uses a trapezoid sum over the band; spacing is chosen so the implied
        periodization images sit at least `guard` away from every |t| queried.
        """
        ts = np.asarray(ts, dtype=float)
        width = self.beta - self.alpha
        n_seg = max(128, int(np.ceil(width * guard / (2.0 * np.pi))) + 1)
        xi = np.linspace(self.alpha, self.beta, n_seg + 1)
        wts = np.full(n_seg + 1, xi[1] - xi[0])
        wts[0] *= 0.5
        wts[-1] *= 0.5
        coef = wts * self.profile_values(xi)
        out = np.empty(ts.size, dtype=complex)
        chunk = max(1, int(4e6) // (n_seg + 1))
        for i in range(0, ts.size, chunk):
            block = ts[i : i + chunk]
            out[i : i + chunk] = np.exp(-1j * np.outer(block, xi)) @ coef
        return out / np.pi

    def decay_reach(self, tol: float = _TAIL_TOL) -> float:
        """Smallest R with |psi(t)| < tol * max|psi| for all |t| > R (estimated
        from the smooth modulus envelope of the analytic signal)."""
        if self._reach is not None:
            return self._reach
        step = 0.5 * np.pi / (self.beta - self.alpha)
        threshold = tol * self.psi0
        last_exceed = 0.0
        t_lo, t_hi = 0.0, 256.0
        while t_hi <= _REACH_CAP:
            ts = np.arange(t_lo, t_hi, step)
            env = np.abs(self._fourier_sum(ts, guard=2.0 * t_hi + 128.0))
            over = env >= threshold
            if np.any(over):
                last_exceed = float(ts[over][-1])
            elif t_hi >= 2.0 * max(last_exceed, 128.0):
                break
            t_lo, t_hi = t_hi, 2.0 * t_hi
        else:
            raise NumericError(
                f"wavelet tail does not fall below {tol} * max|psi| within |t| <= {_REACH_CAP}; "
                "the profile is too rough for time-domain evaluation"
            )
        reach = last_exceed + 2.0 * step
        with self._lock:
            self._reach = reach
        return reach

    def build_table(self, step: float | None = None) -> None:
        """Precompute psi on a uniform grid out to the decay reach."""
        default = 2.0 * np.pi / (_TABLE_NODES_PER_PERIOD * self.beta)
        step = default if step is None else min(step, default)
        if self._table is not None and self._table_step <= step:
            return
        reach = self.decay_reach()
        ts = np.arange(0.0, reach + 4.0 * step, step)
        vals = np.real(self._fourier_sum(ts, guard=ts[-1] + reach + 64.0))
        with self._lock:
            self._table = vals
            self._table_step = step

    def psi_time(self, t):
        """psi(t), from the table with cubic interpolation; zero beyond the reach."""
        if self._table is None:
            self.build_table()
        x = np.abs(np.asarray(t, dtype=float))
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        table, h = self._table, self._table_step
        out = np.zeros_like(x)
        inside = x < (table.size - 2) * h
        xi = x[inside] / h
        i = xi.astype(np.int64)
        u = xi - i
        # Catmull-Rom weights on the uniform grid, even extension at t = 0
        im1 = np.abs(i - 1)
        y0 = table[im1]
        y1 = table[i]
        y2 = table[i + 1]
        y3 = table[np.minimum(i + 2, table.size - 1)]
        u2 = u * u
        u3 = u2 * u
        out[inside] = (
            y0 * (-0.5 * u + u2 - 0.5 * u3)
            + y1 * (1.0 - 2.5 * u2 + 1.5 * u3)
            + y2 * (0.5 * u + 2.0 * u2 - 1.5 * u3)
            + y3 * (-0.5 * u2 + 0.5 * u3)
        )
        return float(out[0]) if scalar else out


def psi_hat(w: BandWavelet, xi):
    """Fourier profile of the wavelet at xi (even, zero outside the band)."""
    return w.profile_values(xi)


def psi_time(w: BandWavelet, t):
    """Time-domain wavelet value psi(t)."""
    return w.psi_time(t)


def k_const(w: BandWavelet, hurst: float) -> float:
    """Normalizing constant: integral of |profile(u)|^2 / |u|^(2H+1) over the line,
    i.e. twice the integral over the positive band."""
    if not 0.0 < hurst < 1.0:
        raise ValueError("Hurst exponent must lie in (0, 1)")
    val, err = quad(
        lambda u: float(w.profile_values(u)) ** 2 * u ** (-2.0 * hurst - 1.0),
        w.alpha, w.beta, epsabs=0.0, epsrel=1e-12, limit=200,
    )
    if not np.isfinite(val) or (val > 0 and err / val > 1e-8):
        raise NumericError(f"normalizing-constant quadrature reached only {err:.2e} absolute error")
    return 2.0 * val


def theoretical_variance(model: ModelSpec, w: BandWavelet, a: float) -> float:
    """Variance of the wavelet coefficient at scale a:
    a * integral |profile(a u)|^2 * weight(u) du.

    Inside a single regime this equals a^(2H+1) sigma^2 K_H exactly.
    """
    if not a > 0:
        raise ValueError("scale must be positive")
    edges = model.band_edges
    total = 0.0
    for j in range(model.k + 1):
        lo = max(w.alpha, a * edges[j])
        hi = min(w.beta, a * edges[j + 1]) if np.isfinite(edges[j + 1]) else w.beta
        if hi <= lo:
            continue
        h = model.hurst[j]
        val, err = quad(
            lambda v: float(w.profile_values(v)) ** 2 * v ** (-2.0 * h - 1.0),
            lo, hi, epsabs=0.0, epsrel=1e-12, limit=200,
        )
        if not np.isfinite(val):
            raise NumericError("wavelet variance quadrature failed")
        total += 2.0 * model.sigma[j] ** 2 * a ** (2.0 * h + 1.0) * val
    return total


def empirical_coeff(path: SampledPath, w: BandWavelet, a: float, k: int) -> float:
    """Riemann-sum wavelet coefficient at scale a and shift index k:
    (delta / sqrt(a)) * sum_p psi(p delta / a - k delta) X(p delta).

    The sum is restricted to the samples where the tabulated psi is nonzero.
    Sample p = 0 carries X(0) = 0 and never contributes.
    """
    if not a > 0:
        raise ValueError("scale must be positive")
    if k < 0:
        raise ValueError("shift index must be nonnegative")
    delta = path.delta
    n = path.n
    reach = w.decay_reach()
    # |p delta / a - k delta| <= reach  <=>  |p - a k| <= a * reach / delta
    center = a * k
    half = a * reach / delta
    p_lo = max(1, int(np.ceil(center - half)))
    p_hi = min(n - 1, int(np.floor(center + half)))
    if p_hi < p_lo:
        return 0.0
    p = np.arange(p_lo, p_hi + 1)
    args = (p * delta) / a - k * delta
    weights = w.psi_time(args)
    return float(delta / np.sqrt(a) * (weights @ path.values[p - 1]))


@dataclass(frozen=True)
class WaveletSpectrum:
    """Log empirical wavelet variances on a frequency grid."""

    grid: FrequencyGrid
    y: np.ndarray
    r: float
    counts: np.ndarray

    @property
    def log_f(self) -> np.ndarray:
        return np.log(self.grid.f)


def _shift_range(n: int, a: float, r: float):
    """Retained shift indices at scale a: floor(r n / a) .. floor((1-r) n / a)."""
    m0 = int(np.floor(r * n / a))
    m1 = int(np.floor((1.0 - r) * n / a))
    return m0, m1


def _scale_coeffs_czt(path: SampledPath, w: BandWavelet, a: float, m0: int, m1: int,
                      reach: float) -> np.ndarray:
    """All coefficients e(a, k delta), k = m0..m1, via two chirp-z transforms.

    Equivalent to the windowed table sum: the profile is sampled on a grid
    fine enough that the periodized kernel's images stay below the table's
    tail tolerance over every argument the sum visits.
    """
    delta = path.delta
    n = path.n
    alpha, beta = w.alpha, w.beta
    t_max = n * delta / a
    n_seg = max(128, int(np.ceil((beta - alpha) * (t_max + reach + 16.0) / (2.0 * np.pi))) + 1)
    xi = np.linspace(alpha, beta, n_seg + 1)
    d_xi = xi[1] - xi[0]
    wts = np.full(n_seg + 1, d_xi)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    coef = wts * w.profile_values(xi)

    # D_q = sum_{p=0}^{n-1} X(p delta) exp(-i xi_q p delta / a); X(0) = 0 occupies slot 0
    step = delta / a
    xs = np.zeros(n, dtype=complex)
    xs[1:] = path.values[: n - 1] * np.exp(-1j * alpha * step * np.arange(1, n))
    d = czt(xs, m=n_seg + 1, w=np.exp(-1j * d_xi * step), a=1.0 + 0.0j)
    # e_k = (delta / (pi sqrt(a))) Re[ exp(i alpha k delta) * sum_q c_q D_q exp(i q d_xi k delta) ]
    inner = czt(coef * d, m=m1 - m0 + 1,
                w=np.exp(1j * d_xi * delta), a=np.exp(-1j * d_xi * delta * m0))
    k = np.arange(m0, m1 + 1)
    e = (delta / (np.pi * np.sqrt(a))) * np.real(np.exp(1j * alpha * k * delta) * inner)
    return e


def spectrum(path: SampledPath, w: BandWavelet, grid: FrequencyGrid, r: float = 0.1,
             engine: str = "czt") -> WaveletSpectrum:
    """Log empirical wavelet variance at every grid frequency.

    At each f the coefficients e(1/f, k delta) are averaged over the retained
    shift range (trimming fraction r on both sides) and the log is taken.
    engine="direct" recomputes every coefficient through the time-domain
    table; it is the slow reference for the default chirp-z engine.
    """
    if not 0.0 < r < 1.0 / 3.0:
        raise ValueError("trimming fraction must lie in (0, 1/3)")
    if engine not in ("czt", "direct"):
        raise ValueError(f"unknown engine {engine!r}")
    n = path.n
    reach = w.decay_reach()
    y = np.empty(grid.f.size)
    counts = np.empty(grid.f.size, dtype=int)
    for i, f in enumerate(grid.f):
        a = 1.0 / f
        m0, m1 = _shift_range(n, a, r)
        if m1 < m0:
            raise AnalysisError(
                f"no usable shifts at frequency {f:.6g} (scale {a:.6g}); "
                f"need n * f_min / beta >= 10, got {n * grid.f_min / grid.beta:.3g}"
            )
        if engine == "czt":
            e = _scale_coeffs_czt(path, w, a, m0, m1, reach)
        else:
            e = np.array([empirical_coeff(path, w, a, k) for k in range(m0, m1 + 1)])
        j = float(np.mean(e * e))
        counts[i] = m1 - m0 + 1
        if not np.isfinite(j) or j <= 0.0:
            raise DegeneratePathError(
                f"zero wavelet energy at frequency {f:.6g}; the path carries no signal there"
            )
        y[i] = np.log(j)
    return WaveletSpectrum(grid=grid, y=y, r=r, counts=counts)

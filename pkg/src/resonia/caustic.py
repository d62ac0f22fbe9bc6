"""Crossing the caustic: Lagrangian chart, complex critical points and the Airy-type integral.

Near a point x1 of Gamma, in the boundary frame (x', x_n) with x_n the outward
normal coordinate, the outgoing Lagrangian manifold is

    x_n = -dg/dxi_n (x', xi_n),    xi' = dg/dx' (x', xi_n).

Writing z = xi_n - xi_c with d^2g/dxi_n^2 = 0 at xi_c,

    dg/dxi_n = b + nu1 z^2,    g = a + b z + nu0 z^3 / 3,

and the WKB solution continues across C = {x_n + b = 0} as

    I[c](x, h) = h^{-1/2} int exp(-(x_n xi_n + g(x', xi_n))/h) c(x', xi_n) dxi_n.

The chart polynomial is entire, so it serves as its own holomorphic extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as PP

from .eikonal import GeodesicPath, geodesic_fan
from .errors import (BandViolation, ChartFitFailed, ContourFailure, DegenerateSamples,
                     InnerStripUnavailable, OutsideChart)
from .potential import BoundaryFrame, PotentialSpec, boundary_frame

# ---------------------------------------------------------------------------
# truncated power series (coefficient arrays, lowest order first)
# ---------------------------------------------------------------------------


def ser_mul(a, b, K):
    return np.convolve(a, b)[:K]


def ser_pow(a, alpha, K):
    """(sum a_k t^k)^alpha to K terms, a_0 != 0 (J.C.P. Miller recurrence)."""
    a = np.asarray(a, complex)
    a = np.concatenate([a, np.zeros(max(0, K - len(a)), complex)])
    g = np.zeros(K, complex)
    g[0] = a[0] ** alpha
    for k in range(1, K):
        s = 0.0
        for j in range(1, k + 1):
            s += ((alpha + 1) * j - k) * a[j] * g[k - j]
        g[k] = s / (k * a[0])
    return g


def ser_revert(phi, K):
    """Coefficients of Y(w) solving w = Y / phi(Y) (Lagrange inversion), Y_0 = 0."""
    Y = np.zeros(K, complex)
    for k in range(1, K):
        pk = ser_pow(phi, k, k)
        Y[k] = pk[k - 1] / k
    return Y


def ser_compose(outer, inner, K):
    """outer(inner(t)) with inner(0) = 0."""
    res = np.zeros(K, complex)
    p = np.zeros(K, complex)
    p[0] = 1.0
    inner = np.concatenate([np.asarray(inner, complex), np.zeros(max(0, K - len(inner)))])[:K]
    for c in outer[:K]:
        res += c * p
        p = ser_mul(p, inner, K)
    return res


def taylor(poly, x0, K):
    """Taylor coefficients of a numpy polynomial-like object at x0."""
    out = np.zeros(K, complex)
    q = poly
    f = 1.0
    for k in range(K):
        out[k] = q(x0) / f
        q = q.deriv()
        f *= k + 1
    return out


# ---------------------------------------------------------------------------
# holomorphic approximation
# ---------------------------------------------------------------------------


def _bump(t):
    """Smooth cutoff: 1 on |t|<=1/2, 0 on |t|>=1."""
    t = np.abs(t)
    out = np.zeros_like(t, dtype=float)
    out[t <= 0.5] = 1.0
    mid = (t > 0.5) & (t < 1.0)
    u = (t[mid] - 0.5) / 0.5
    e1 = np.exp(-1.0 / (1.0 - u))
    e0 = np.exp(-1.0 / u)
    out[mid] = e1 / (e1 + e0)
    return out


@dataclass(frozen=True)
class HoloApprox:
    """Complex-callable extension of a real function on an interval."""

    cheb: Chebyshev
    mode: str
    bound: float
    order: int = 6
    eps: tuple = ()

    def __call__(self, z):
        z = np.asarray(z, complex)
        if self.mode == "A":
            return self.cheb(z)
        x, y = z.real, z.imag
        out = np.zeros(z.shape, complex)
        d = self.cheb
        fact = 1.0
        for k in range(self.order + 1):
            if k:
                fact *= k
            out += d(x) * (1j * y) ** k / fact * _bump(y / self.eps[k])
            d = d.deriv()
        return out


def holomorphic_approx(f, delta: float, interval, mode: str = "A", nodes: int = 40,
                       order: int = 6) -> HoloApprox:
    """Holomorphic (mode A, Chebyshev) or almost-analytic (mode B, Taylor) extension.

    ``f`` is a callable on the interval or a pair of sample arrays (x, y).
    ``delta`` is the strip half-width where the extension is used; it sets the
    largest cutoff radius of mode B.
    """
    lo, hi = map(float, interval)
    if callable(f):
        cheb = Chebyshev.interpolate(f, nodes - 1, domain=[lo, hi])
        xs = np.linspace(lo, hi, 4 * nodes)
        ys = f(xs)
    else:
        xs, ys = (np.asarray(v, float) for v in f)
        if len(xs) < 3 or np.ptp(xs) == 0:
            raise DegenerateSamples("need at least three distinct samples")
        cheb = Chebyshev.fit(xs, ys, min(nodes - 1, len(xs) - 1), domain=[lo, hi])
    bound = float(np.max(np.abs(cheb(xs) - ys)))
    eps = []
    d = cheb
    grid = np.linspace(lo, hi, 200)
    for k in range(order + 1):
        M = float(np.max(np.abs(d(grid)))) + 1e-300
        eps.append(min(delta, (math.factorial(k) / M) ** (1.0 / max(k, 1))) if k else delta)
        d = d.deriv()
    return HoloApprox(cheb, mode, bound, order, tuple(eps))


# ---------------------------------------------------------------------------
# charts
#
# Every chart exposes g, P = dg/dxi_n and dP at complex xi_n, Taylor
# coefficients of g, the fold data (xi_c, a, b), Taylor coefficients of nu1
# and nu0 at xi_c, and the admissible range of s = x_n + b.
# ---------------------------------------------------------------------------


def _cheb_basis(u, deg):
    V = C.chebvander(u, deg)
    dV = np.stack([C.chebval(u, C.chebder(np.eye(deg + 1)[j])) if j else 0 * u
                   for j in range(deg + 1)], -1)
    return V, dV


@dataclass(frozen=True)
class ChartSamples:
    yp: np.ndarray  # (N, n-1) tangential frame coordinates
    yn: np.ndarray  # (N,)
    etap: np.ndarray  # (N, n-1)
    etan: np.ndarray  # (N,)
    x: np.ndarray  # (N, n) physical points
    t: np.ndarray  # time from ray start
    Jc: np.ndarray  # det d(x', xi_n)/d(t, alpha)
    ray: np.ndarray  # ray index


class _ChartBase:
    def d2g(self, xi, xp: float = 0.0):
        return self.dP(xi, xp)

    def check_s(self, s: float):
        lo, hi = self.s_range
        if not lo <= s <= hi:
            raise OutsideChart(f"x_n + b = {s:.4g} outside chart range [{lo:.4g}, {hi:.4g}]")


@dataclass(frozen=True)
class LagrangianChart(_ChartBase):
    """Polynomial generating function g(x', xi_n) fitted to real flow samples.

    ``coef[j, k]`` multiplies T_j(x'/xp_radius) T_k(xi_n/xi_radius).
    """

    frame: BoundaryFrame | None
    coef: np.ndarray
    xi_radius: float
    xp_radius: float
    residual: float
    strip_bound: float = 0.3
    samples: ChartSamples | None = field(default=None, repr=False)

    @property
    def fit_radius(self) -> float:
        return self.xi_radius

    @property
    def dim(self) -> int:
        return 1 if self.coef.shape[0] == 1 else 2

    @property
    def s_range(self):
        return (-self.strip_bound, self.strip_bound)

    def g_xi(self, xp: float = 0.0) -> Polynomial:
        u = xp / self.xp_radius if self.xp_radius else 0.0
        ch = Chebyshev(C.chebval(u, self.coef), domain=[-self.xi_radius, self.xi_radius])
        return ch.convert(kind=Polynomial, domain=[-self.xi_radius, self.xi_radius])

    def g(self, xi, xp: float = 0.0):
        return self.g_xi(xp)(xi)

    def P(self, xi, xp: float = 0.0):
        return self.g_xi(xp).deriv()(xi)

    def dP(self, xi, xp: float = 0.0):
        return self.g_xi(xp).deriv(2)(xi)

    def taylor_g(self, z0, K, xp: float = 0.0):
        return taylor(self.g_xi(xp), z0, K)

    def xi_c(self, xp: float = 0.0) -> float:
        r = self.g_xi(xp).deriv(2).roots()
        r = r[np.abs(r.imag) < 1e-9].real
        if len(r) == 0:
            raise ChartFitFailed("no inflection point of g in xi_n")
        return float(r[np.argmin(np.abs(r))])

    def a_fn(self, xp: float = 0.0) -> float:
        return float(self.g_xi(xp)(self.xi_c(xp)))

    def b_fn(self, xp: float = 0.0) -> float:
        return float(self.g_xi(xp).deriv()(self.xi_c(xp)))

    def _divided(self, xp, kind):
        g = self.g_xi(xp)
        xc = self.xi_c(xp)
        rho = self.xi_radius
        vc = xc / rho
        if kind == 1:
            num = g.deriv() - self.b_fn(xp)
            den = PP.polypow([-vc, 1.0], 2) * rho**2
            scale = 1.0
        else:
            a, b = self.a_fn(xp), self.b_fn(xp)
            num = g - a - b * Polynomial([-xc, 1.0], domain=g.domain, window=g.window)
            den = PP.polypow([-vc, 1.0], 3) * rho**3
            scale = 3.0
        q, _ = PP.polydiv(num.coef, den)
        return Polynomial(scale * q, domain=g.domain, window=g.window)

    def nu1_taylor(self, K, xp: float = 0.0):
        return taylor(self._divided(xp, 1), self.xi_c(xp), K)

    def nu0_taylor(self, K, xp: float = 0.0):
        return taylor(self._divided(xp, 0), self.xi_c(xp), K)


def fold_chart(C0: float, xi_radius: float = 1.0) -> LagrangianChart:
    """Exact chart of the fold normal form V = E0 - C0 x_n: g = xi^3/(3 C0)."""
    ch = Polynomial([0, 0, 0, 1.0 / (3 * C0)]).convert(kind=Chebyshev, domain=[-xi_radius, xi_radius])
    coef = np.zeros((1, 4))
    coef[0, : len(ch.coef)] = ch.coef
    return LagrangianChart(None, coef, xi_radius, 0.0, 0.0, strip_bound=np.inf)


def _ser_even(cheb, z0, K):
    """Taylor coefficients of xi -> cheb(xi^2) at z0."""
    return ser_compose(taylor(cheb, z0 * z0, K), np.array([0, 2 * z0, 1], complex), K)


@dataclass(frozen=True)
class EvenChart1D(_ChartBase):
    """One-dimensional chart written in sigma = xi_n^2.

    In 1D the manifold is {xi^2 = V - E0}, so x_n = -F(xi^2) and g = xi H(xi^2).
    F is fitted on real momenta (sigma > 0) together with the real continuation
    into the sea (sigma = V - E0 < 0), which is where the complex critical
    point xi^{-i} = -i sqrt(-sigma) lives.
    """

    frame: BoundaryFrame | None
    F: Chebyshev
    H: Chebyshev
    xi_radius: float
    sigma_sea: float
    residual: float
    samples: ChartSamples | None = field(default=None, repr=False)

    dim = 1
    xp_radius = 0.0

    @property
    def fit_radius(self) -> float:
        return self.xi_radius

    @property
    def s_range(self):
        b = self.b_fn()
        return (b - float(self.F(self.xi_radius**2)), b - float(self.F(-self.sigma_sea)))

    def g(self, xi, xp: float = 0.0):
        return xi * self.H(xi * xi)

    def P(self, xi, xp: float = 0.0):
        return self.F(xi * xi)

    def dP(self, xi, xp: float = 0.0):
        return 2 * xi * self.F.deriv()(xi * xi)

    def taylor_g(self, z0, K, xp: float = 0.0):
        return ser_mul(np.array([z0, 1], complex), _ser_even(self.H, z0, K), K)

    def xi_c(self, xp: float = 0.0) -> float:
        return 0.0

    def a_fn(self, xp: float = 0.0) -> float:
        return 0.0

    def b_fn(self, xp: float = 0.0) -> float:
        return float(self.F(0.0))

    def _quot(self, f):
        ident = Chebyshev.identity(domain=f.domain)
        return (f - f(0.0)) // ident

    def nu1_taylor(self, K, xp: float = 0.0):
        return _ser_even(self._quot(self.F), 0.0, K)

    def nu0_taylor(self, K, xp: float = 0.0):
        return _ser_even(3 * self._quot(self.H), 0.0, K)

    def x_of_sigma(self, sigma):
        """Physical point with xi_n^2 = sigma on the chart's manifold."""
        yn = -self.F(np.asarray(sigma, float))
        return self.frame.x1[0] + yn * self.frame.normal[0]


def _frame_samples(paths, frame, alphas, r_start, n):
    R = frame.R
    rows = {k: [] for k in ("yp", "yn", "etap", "etan", "x", "t", "Jc", "ray")}
    for i, p in enumerate(paths):
        y = (p.x - frame.x1) @ R
        eta = p.xi @ R
        xdot = 2 * p.xi @ R
        xidot = frame.spec.grad(p.x) @ R
        if n == 1:
            Jc = xidot[:, 0]
        else:
            a = alphas[i]
            v = r_start * np.array([-np.sin(a), np.cos(a)])
            dx = np.einsum("tij,j->ti", p.dX, v) @ R
            dxi = np.einsum("tij,j->ti", p.dXi, v) @ R
            Jc = xdot[:, 0] * dxi[:, 1] - dx[:, 0] * xidot[:, 1]
        rows["yp"].append(y[:, :-1])
        rows["yn"].append(y[:, -1])
        rows["etap"].append(eta[:, :-1])
        rows["etan"].append(eta[:, -1])
        rows["x"].append(p.x)
        rows["t"].append(p.times - p.times[0])
        rows["Jc"].append(Jc)
        rows["ray"].append(np.full(len(p.times), i))
    return {k: np.concatenate(v) for k, v in rows.items()}


def _even_chart(spec, frame, s, xi_radius, sigma_sea, degree, tol):
    from scipy.optimize import brentq

    E0 = frame.E0
    n0 = frame.normal[0]
    Vy = lambda y: float(np.ravel(spec.V(np.array([frame.x1[0] + y * n0])))[0]) - E0
    y_hi = 0.05
    while Vy(y_hi) > -sigma_sea:
        y_hi *= 1.5
        if y_hi > 1e3:
            raise ChartFitFailed("potential does not fall to E0 - sigma_sea beyond x1")
    y_sea = brentq(lambda y: Vy(y) + sigma_sea, 0.0, y_hi, xtol=1e-14)
    ys = np.linspace(0.0, y_sea, 600)[1:]
    sig_sea = np.array([Vy(y) for y in ys])
    sig = np.concatenate([s["etan"] ** 2, sig_sea])
    data = np.concatenate([-s["yn"], -ys])
    F = Chebyshev.fit(sig, data, degree, domain=[-sigma_sea, xi_radius**2])
    resid = float(np.max(np.abs(F(sig) - data)) / np.max(np.abs(data)))
    if resid > tol:
        raise ChartFitFailed(f"chart residual {resid:.2e} exceeds {tol:.0e}")
    u, w = np.polynomial.legendre.leggauss(degree + 2)
    u, w = 0.5 * (u + 1), 0.5 * w
    H = Chebyshev.interpolate(lambda q: np.array([np.sum(w * F(u * u * qq)) for qq in np.atleast_1d(q)]),
                              degree, domain=F.domain)
    return F, H, resid


def fit_chart(
    spec: PotentialSpec,
    x1,
    paths: list[GeodesicPath] | None = None,
    xi_radius: float = 0.25,
    xp_radius: float = 0.15,
    degree: int | None = None,
    xp_degree: int = 4,
    t_extra: float = 3.0,
    rays: int = 21,
    strip_bound: float = 0.3,
    tol: float = 1e-3,
    r_start: float = 1e-4,
    even: bool | None = None,
    sigma_sea: float = 0.25,
):
    """Fit the generating function from forward flow samples through the turning point.

    In 1D (``even`` defaults to True) the fit is in sigma = xi_n^2 and includes
    the real sea continuation; otherwise a tensor Chebyshev polynomial in
    (x', xi_n) is fitted by least squares to x_n = -dg/dxi_n and xi' = dg/dx'.
    """
    frame = boundary_frame(spec, x1)
    n = spec.dim
    even = (n == 1) if even is None else even
    if even and n != 1:
        raise ValueError("the sigma chart is one-dimensional")
    if degree is None:
        degree = 24 if even else 11
    u1 = frame.x1 - spec.well
    r1 = np.linalg.norm(u1)
    if n == 1:
        alphas = np.array([0.0])
        dirs = np.sign(u1).reshape(1, 1)
    else:
        a1 = np.arctan2(u1[1], u1[0])
        span = 1.5 * xp_radius / r1
        alphas = a1 + np.linspace(-span, span, rays)
        dirs = np.stack([np.cos(alphas), np.sin(alphas)], 1)
    if paths is None:
        paths = geodesic_fan(spec, dirs, r_start=r_start, t_extra=t_extra, samples=20001)
    s = _frame_samples(paths, frame, alphas, r_start, n)
    keep = (np.abs(s["etan"]) <= xi_radius) & (np.abs(s["yn"]) <= 2.0 * xi_radius**2 / frame.C0)
    if n == 2:
        keep &= np.abs(s["yp"][:, 0]) <= xp_radius
    if keep.sum() < 3 * (degree + 1) and not even:
        raise ChartFitFailed("too few flow samples inside the chart radius")
    if keep.sum() < 10:
        raise ChartFitFailed("too few flow samples inside the chart radius")
    s = {k: v[keep] for k, v in s.items()}
    samples = ChartSamples(s["yp"], s["yn"], s["etap"], s["etan"], s["x"], s["t"], s["Jc"], s["ray"])
    if even:
        F, H, resid = _even_chart(spec, frame, s, xi_radius, sigma_sea, degree, tol)
        return EvenChart1D(frame, F, H, xi_radius, sigma_sea, resid, samples)
    v = s["etan"] / xi_radius
    Vv, dVv = _cheb_basis(v, degree)
    if n == 1:
        Dx = 0
        Vu, dVu = np.ones((len(v), 1)), np.zeros((len(v), 1))
    else:
        Dx = xp_degree
        Vu, dVu = _cheb_basis(s["yp"][:, 0] / xp_radius, Dx)
    cols, idx = [], []
    for j in range(Dx + 1):
        for k in range(degree + 1):
            if j == 0 and k == 0:
                continue
            idx.append((j, k))
            cols.append(np.concatenate([Vu[:, j] * dVv[:, k] / xi_radius,
                                        dVu[:, j] * Vv[:, k] / xp_radius if n == 2 else []]))
    M = np.stack(cols, 1)
    rhs = np.concatenate([-s["yn"], s["etap"][:, 0] if n == 2 else []])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    resid = float(np.max(np.abs(M @ sol - rhs)) / np.max(np.abs(rhs)))
    if resid > tol:
        raise ChartFitFailed(f"chart residual {resid:.2e} exceeds {tol:.0e}")
    coef = np.zeros((Dx + 1, degree + 1))
    for (j, k), c in zip(idx, sol):
        coef[j, k] = c
    coef[0, 0] = -C.chebval2d(0.0, 0.0, coef)
    return LagrangianChart(frame, coef, xi_radius, xp_radius if n == 2 else 0.0, resid,
                           strip_bound, samples)


# ---------------------------------------------------------------------------
# critical points and phase
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoints:
    s: float  # x_n + b
    z: complex
    xi_c: float
    roots: tuple  # (outgoing or inner, other)
    series_guess: tuple
    real: bool

    @property
    def xi_minus_i(self) -> complex:
        return self.roots[0]

    @property
    def xi_plus(self) -> float:
        return float(np.real(self.roots[0]))


def _split(x):
    x = np.atleast_1d(np.asarray(x, float))
    return (float(x[0]) if len(x) == 2 else 0.0), float(x[-1]), x


def _y_series(chart, xp, K):
    nu = chart.nu1_taylor(K + 1, xp)
    return ser_revert(ser_pow(nu, -0.5, K + 1), K + 1), chart.xi_c(xp)


def critical_points(chart, x, K: int = 8) -> CriticalPoints:
    """Roots of x_n + dg/dxi_n = 0 by Lagrange inversion, Newton-polished.

    Outside (x_n + b > 0) the pair is complex and the outgoing root (Im < 0)
    comes first.  Inside, the inner root xi^+ > xi_c comes first.
    """
    xp, xn, _ = _split(x)
    s = xn + chart.b_fn(xp)
    chart.check_s(s)
    Y, xc = _y_series(chart, xp, K)
    zs = (-1j * np.sqrt(s), 1j * np.sqrt(s)) if s > 0 else (np.sqrt(-s) + 0j, -np.sqrt(-s) + 0j)
    guesses, roots = [], []
    for z in zs:
        g = xc + np.polyval(Y[::-1], z)
        guesses.append(g)
        r = g
        for _ in range(60):
            step = (xn + chart.P(r, xp)) / chart.dP(r, xp)
            r = r - step
            if abs(step) < 1e-15 * max(1.0, abs(r)):
                break
        if abs(xn + chart.P(r, xp)) > 1e-10 * max(1.0, abs(xn)) or abs(r - g) > 0.5 * abs(g - xc) + 1e-12:
            raise OutsideChart("Newton polish left the critical-point branch")
        roots.append(complex(r) if s > 0 else complex(np.real(r), 0.0))
    return CriticalPoints(s, complex(zs[0]), xc, tuple(roots), tuple(guesses), s <= 0)


@dataclass(frozen=True)
class ComplexPhasePoint:
    x: np.ndarray
    xi_minus_i: complex
    phi_tilde: complex
    r_tilde: complex
    phi_series: complex = 0j

    @property
    def grad_n(self) -> complex:
        """d phi~/dx_n = xi^{-i}."""
        return self.xi_minus_i


def nu_tilde_series(chart, xp: float = 0.0, K: int = 8) -> np.ndarray:
    """Coefficients of nu~(z), critical value = x_n xi_c + a - nu~(z) z^3."""
    M = K + 4
    Y, _ = _y_series(chart, xp, M)
    Yc = Y[:M]
    nu0 = chart.nu0_taylor(M, xp)
    Y3 = np.concatenate([[0, 0, 0], ser_pow(Yc[1:], 3, M - 3)])[:M]
    Phi = -np.concatenate([[0, 0], Yc])[:M] + ser_mul(ser_compose(nu0, Yc, M), Y3, M) / 3.0
    return -Phi[3:K + 3]


def phase_phi_tilde(chart, x, K: int = 8) -> ComplexPhasePoint:
    """phi~ = x_n xi + g(x', xi) at the relevant critical point (xi^{-i} outside)."""
    xp, xn, x = _split(x)
    cp = critical_points(chart, x, K)
    xi = cp.roots[0]
    phi = xn * xi + chart.g(xi, xp)
    r = 0.5 * chart.dP(xi, xp)
    nt = nu_tilde_series(chart, xp, K)
    ser = xn * cp.xi_c + chart.a_fn(xp) - np.polyval(nt[::-1], cp.z) * cp.z**3
    return ComplexPhasePoint(x, complex(xi), complex(phi), complex(r), complex(ser))


# ---------------------------------------------------------------------------
# symbol c0
# ---------------------------------------------------------------------------


class _C0Base:
    def holo(self, xp: float = 0.0, mode: str = "A", delta: float = 0.5):
        if mode == "A":
            return lambda z, xp=xp: self(z, xp)
        ch = self.real_cheb(xp)
        return holomorphic_approx(ch, delta, ch.domain, mode="B", nodes=len(ch.coef))

    def taylor(self, z0, K, xp: float = 0.0, mode: str = "A"):
        if mode == "A":
            return self._taylor_exact(z0, K, xp)
        return _taylor_cauchy(self.holo(xp, "B"), z0, K)

    def at_xi_c(self, chart, xp: float = 0.0) -> float:
        return float(np.real(self(chart.xi_c(xp), xp)))


def _taylor_cauchy(fn, z0, K, rad=1e-2, m=64):
    zs = z0 + rad * np.exp(2j * np.pi * np.arange(m) / m)
    c = np.fft.fft(fn(zs)) / m
    return c[:K] / rad ** np.arange(K)


@dataclass(frozen=True)
class C0Fit(_C0Base):
    """c0 on a polynomial chart: coef[j, k] on T_j(x'/xp_radius) T_k(xi/xi_radius)."""

    coef: np.ndarray
    xi_radius: float
    xp_radius: float
    kappa: np.ndarray  # per-ray matching constants
    match_spread: float
    smoothness: float  # one-sided quadratic mismatch at xi_c

    def c0_xi(self, xp: float = 0.0) -> Chebyshev:
        u = xp / self.xp_radius if self.xp_radius else 0.0
        return Chebyshev(C.chebval(u, self.coef), domain=[-self.xi_radius, self.xi_radius])

    real_cheb = c0_xi

    def __call__(self, xi, xp: float = 0.0):
        return self.c0_xi(xp)(xi)

    def _taylor_exact(self, z0, K, xp):
        return taylor(self.c0_xi(xp), z0, K)


def constant_c0(value: float = 1.0, xi_radius: float = 1.0) -> C0Fit:
    return C0Fit(np.array([[value]]), xi_radius, 0.0, np.array([1.0]), 0.0, 0.0)


def _ser_exp(a, K):
    a = np.concatenate([np.asarray(a, complex), np.zeros(max(0, K - len(a)))])[:K]
    out = np.zeros(K, complex)
    out[0] = np.exp(a[0])
    for k in range(1, K):
        out[k] = sum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k
    return out


@dataclass(frozen=True)
class EvenC0(_C0Base):
    """c0 = kappa W(xi^2) exp(E1 xi T(xi^2)) on an EvenChart1D.

    W = |dV/dx_n|^{-1/2} and xi T(xi^2) is the flow time from the turning
    point; both are analytic in sigma = xi^2 and fitted on the chart's sigma range.
    """

    kappa: float
    W: Chebyshev
    T: Chebyshev
    E1: float
    xi_radius: float
    match_spread: float
    smoothness: float

    def __call__(self, xi, xp: float = 0.0):
        xi = np.asarray(xi)
        s = xi * xi
        return self.kappa * self.W(s) * np.exp(self.E1 * xi * self.T(s))

    def real_cheb(self, xp: float = 0.0) -> Chebyshev:
        return Chebyshev.interpolate(lambda q: np.real(self(q)), 30, domain=[-self.xi_radius, self.xi_radius])

    def _taylor_exact(self, z0, K, xp):
        w = _ser_even(self.W, z0, K)
        e = self.E1 * ser_mul(np.array([z0, 1], complex), _ser_even(self.T, z0, K), K)
        return self.kappa * ser_mul(w, _ser_exp(e, K), K)


def _smoothness(xi, c0, xc, w):
    lo = (xi < xc) & (xi > xc - w)
    hi = (xi > xc) & (xi < xc + w)
    if lo.sum() <= 3 or hi.sum() <= 3:
        return float("nan")
    pl = np.polyfit(xi[lo] - xc, c0[lo], 2)
    ph = np.polyfit(xi[hi] - xc, c0[hi], 2)
    return float(max(abs(pl[2] - ph[2]), abs(pl[1] - ph[1]) * w) / abs(ph[2]))


def _inner_a0(chart, wkb, inner_min):
    s = chart.samples
    if s is None:
        raise InnerStripUnavailable("chart carries no flow samples")
    xp = s.yp[:, 0] if chart.dim == 2 else np.zeros(len(s.yn))
    b = np.array([chart.b_fn(v) for v in xp]) if chart.dim == 2 else np.full(len(s.yn), chart.b_fn())
    xc = np.array([chart.xi_c(v) for v in xp]) if chart.dim == 2 else np.full(len(s.yn), chart.xi_c())
    inner_min = 3 * wkb.phase.spacing if inner_min is None else inner_min
    inner = (s.etan > xc) & (s.yn + b < -inner_min)
    if chart.dim == 1:
        a0 = wkb.evaluate_1d(s.x[:, 0])[1]
    else:
        a0 = wkb.amplitude0.interpolate(s.x)
    inner &= np.isfinite(a0)
    if not inner.any():
        raise InnerStripUnavailable("no inner-strip samples inside the WKB domain")
    r = np.array([0.5 * chart.dP(e, v) for v, e in zip(xp, s.etan)])
    return s, xp, xc, inner, np.sqrt(np.abs(r) / np.pi) * a0


def _match_even(chart: EvenChart1D, wkb, inner_min):
    s, _, xc, inner, cm = _inner_a0(chart, wkb, inner_min)
    E1 = wkb.germ.E1
    spec, frame = chart.frame.spec, chart.frame
    n0 = frame.normal[0]
    Vn = lambda sig: spec.grad(np.atleast_1d(chart.x_of_sigma(sig)))[:, 0] * n0
    deg = len(chart.F.coef) - 1
    dom = chart.F.domain
    W = Chebyshev.interpolate(lambda q: np.abs(Vn(q)) ** -0.5, deg, domain=dom)
    u, w = np.polynomial.legendre.leggauss(40)
    u, w = 0.5 * (u + 1), 0.5 * w
    T = Chebyshev.interpolate(lambda q: np.array([np.sum(w / Vn(u * u * qq)) for qq in np.atleast_1d(q)]),
                              deg, domain=dom)
    base = EvenC0(1.0, W, T, E1, chart.xi_radius, 0.0, 0.0)
    q = cm[inner] / np.real(base(s.etan[inner]))
    kappa = float(np.median(q))
    spread = float(np.ptp(q) / kappa)
    # flow-transport values along the sampled ray for the smoothness check
    trans = np.exp(E1 * s.t) * np.abs(s.Jc) ** -0.5
    k2 = np.median(cm[inner] / trans[inner])
    sm = _smoothness(s.etan, k2 * trans, 0.0, 0.3 * chart.xi_radius)
    return EvenC0(kappa, W, T, E1, chart.xi_radius, spread, sm)


def match_symbol_c(chart, wkb, degree: int = 10, xp_degree: int = 4, inner_min: float | None = None):
    """c0 = sqrt(r/pi) a0 on the inner branch, continued across xi_c by the flow.

    Along each ray c0 = kappa e^{E1 t} |J_c|^{-1/2}, J_c = det d(x', xi_n)/d(t, alpha),
    which stays smooth through the turning point; kappa is matched on the inner side.
    """
    if isinstance(chart, EvenChart1D):
        return _match_even(chart, wkb, inner_min)
    s, xp, xc, inner, cm = _inner_a0(chart, wkb, inner_min)
    E1 = wkb.germ.E1
    T = np.exp(E1 * s.t) * np.abs(s.Jc) ** -0.5
    kappa = np.zeros(int(s.ray.max()) + 1)
    spread = 0.0
    for rr in np.unique(s.ray):
        sel = inner & (s.ray == rr)
        if not sel.any():
            raise InnerStripUnavailable(f"ray {rr} has no inner-strip samples")
        q = cm[sel] / T[sel]
        kappa[rr] = np.median(q)
        spread = max(spread, float(np.ptp(q) / np.median(q)))
    c0 = kappa[s.ray] * T
    if chart.dim == 1:
        coef = Chebyshev.fit(s.etan, c0, degree, domain=[-chart.xi_radius, chart.xi_radius]).coef[None, :]
    else:
        Vv = C.chebvander(s.etan / chart.xi_radius, degree)
        Vu = C.chebvander(xp / chart.xp_radius, xp_degree)
        M = (Vu[:, :, None] * Vv[:, None, :]).reshape(len(c0), -1)
        sol, *_ = np.linalg.lstsq(M, c0, rcond=None)
        coef = sol.reshape(xp_degree + 1, degree + 1)
    sel0 = np.abs(xp) <= (0.1 * chart.xp_radius if chart.dim == 2 else 1.0)
    sm = _smoothness(s.etan[sel0], c0[sel0], chart.xi_c(0.0), 0.3 * chart.xi_radius)
    return C0Fit(coef, chart.xi_radius, chart.xp_radius, kappa, spread, sm)


def beta0_prime(chart, c0, xp: float = 0.0) -> float:
    """Closed-form flux density pi c0(xi_c)^2 / nu1(xi_c)."""
    nu1 = float(np.real(chart.nu1_taylor(1, xp)[0]))
    return float(np.pi * c0.at_xi_c(chart, xp) ** 2 / nu1)


# ---------------------------------------------------------------------------
# Airy-type integral
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _trace(f, df, start, direction, f_star, gain, step0, h, max_steps=20000):
    pts = [start, start + step0 * direction]
    z = pts[-1]
    for _ in range(max_steps):
        if (f(z) - f_star).real >= gain:
            return np.array(pts)
        g = np.conj(df(z))
        ag = abs(g)
        if ag == 0:
            raise ContourFailure("ascent path hit a critical point")
        ds = min(step0, 0.5 * h / ag)
        zm = z + 0.5 * ds * g / ag
        gm = np.conj(df(zm))
        z = z + ds * gm / abs(gm)
        pts.append(z)
    raise ContourFailure("ascent path did not reach the required phase gain")


def _line_integral(F, pts):
    a, b = pts[:-1], pts[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return np.sum(F(nodes) * _GL_W[None, :] * half[:, None])


@dataclass(frozen=True)
class AiryResult:
    value: complex
    xi_star: complex
    f_star: complex
    r_tilde: complex
    contour: tuple  # (left points, right points)


def airy_eval(chart, c0, x, h: float, mode: str = "A", gain_factor: float = 10.0,
              tilt: float = np.pi / 8, K: int = 8) -> AiryResult:
    """h^{-1/2} int exp(-(x_n xi + g~)/h) c~ dxi along a traced steepest-ascent contour."""
    xp, xn, x = _split(x)
    cfun = c0.holo(xp, mode)
    f = lambda z: xn * z + chart.g(z, xp)
    df = lambda z: xn + chart.P(z, xp)
    xs = critical_points(chart, x, K).roots[0]
    fs = f(xs)
    r = 0.5 * chart.dP(xs, xp)
    if abs(r) < 1e-12:
        raise ContourFailure("second derivative of the phase vanishes at the critical point")
    alpha = -np.angle(r) / 2
    if alpha <= -np.pi / 2:
        alpha += np.pi
    elif alpha > np.pi / 2:
        alpha -= np.pi
    gain = gain_factor * h * np.log(1 / h)
    step0 = 0.25 * np.sqrt(h / abs(r))
    right = _trace(f, df, xs, np.exp(1j * (alpha - tilt)), fs, gain, step0, h)
    left = _trace(f, df, xs, np.exp(1j * (alpha + np.pi + tilt)), fs, gain, step0, h)
    F = lambda z: np.exp(-(f(z) - fs) / h) * cfun(z)
    val = _line_integral(F, right) - _line_integral(F, left)
    return AiryResult(complex(h**-0.5 * np.exp(-fs / h) * val), complex(xs), complex(fs), complex(r),
                      (left, right))


def fold_airy_closed_form(C0: float, xn, h: float):
    """I[1] for g = xi^3/(3 C0): -2 pi i w a h^{-1/2} Ai(-w a x_n / h), a = (C0 h)^{1/3}, w = e^{2 pi i/3}."""
    from scipy.special import airy

    w = np.exp(2j * np.pi / 3)
    a = (C0 * h) ** (1.0 / 3.0)
    return -2j * np.pi * w * a * h**-0.5 * airy(-w * a * np.asarray(xn) / h)[0]


# ---------------------------------------------------------------------------
# steepest-descent expansion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SteepestResult:
    value: complex
    betas: np.ndarray
    a_tilde: np.ndarray  # a~_j = beta_j / (sqrt(r~) r~^{3j})
    phi_tilde: complex
    r_tilde: complex
    xi_star: complex
    error_estimate: float


def steepest_expand(chart, c0, x, h: float, L: int = 2, mode: str = "A",
                    band: tuple | None = None, K: int = 8) -> SteepestResult:
    """e^{-phi~/h} r~^{-1/2} sum_m beta_m (h/r~^3)^m about the relevant critical point."""
    xp, xn, x = _split(x)
    cp = critical_points(chart, x, K)
    if band is not None and not (band[0] <= cp.s <= band[1]):
        raise BandViolation(f"x_n + b = {cp.s:.4g} outside band {band}")
    xs = cp.roots[0]
    M = 2 * L + 4
    gt = chart.taylor_g(xs, M + 2, xp)
    fs = xn * xs + gt[0]
    r = gt[2]
    q = gt[2:M + 2] / r
    eta = ser_revert(ser_pow(ser_pow(q, 0.5, M), -1.0, M), M)
    comp = ser_compose(c0.taylor(xs, M, xp, mode), eta, M)
    deta = np.array([(k + 1) * eta[k + 1] for k in range(M - 1)] + [0])
    G = ser_mul(comp, deta, M)
    betas = np.array([G[2 * m] * math.gamma(m + 0.5) * r ** (2 * m) for m in range(L + 1)])
    sr = np.sqrt(r)
    terms = betas * (h / r**3) ** np.arange(L + 1)
    val = np.exp(-fs / h) / sr * np.sum(terms)
    a_t = betas / (sr * r ** (3 * np.arange(L + 1)))
    nxt = abs(G[2 * L + 2] * math.gamma(L + 1.5) * r ** (2 * L + 2) * (h / r**3) ** (L + 1))
    err = nxt / max(abs(np.sum(terms)), 1e-300)
    return SteepestResult(complex(val), betas, a_t, complex(fs), complex(r), complex(xs), float(err))


def outward_wkb(chart, c0, xs, h: float, S: float = 0.0, L: int = 1, n: int = 1,
                mode: str = "A") -> np.ndarray:
    """w = h^{-n/4} e^{-(S + phi~)/h} (a~_0 + h a~_1 + ...) at frame points ``xs``."""
    out = []
    for x in np.atleast_2d(np.asarray(xs, float)):
        r = steepest_expand(chart, c0, x, h, L=L, mode=mode)
        a = np.sum(r.a_tilde * h ** np.arange(L + 1))
        out.append(h ** (-n / 4) * np.exp(-(S + r.phi_tilde) / h) * a)
    return np.array(out)


# ---------------------------------------------------------------------------
# entire extension of a sigma chart
# ---------------------------------------------------------------------------


def entire_extension(chart: EvenChart1D, c0: EvenC0, degree_g: int = 5, degree_c: int = 6,
                     samples: int = 200):
    """Low-degree polynomial (g~, c~) matching the sigma chart on the cross
    [-rho, rho] U i[-q, q], q = sqrt(sigma_sea).

    The sigma chart is singular at the barrier top and at infinity in the sea,
    so contours that leave its domain need an entire stand-in.  Returns a
    (LagrangianChart, C0Fit) pair with real coefficients.
    """
    rho, q = chart.xi_radius, np.sqrt(chart.sigma_sea)
    R = max(rho, q)
    t = np.linspace(0.0, 1.0, samples + 1)[1:]
    pts = np.concatenate([rho * np.linspace(-1, 1, 2 * samples + 1), -1j * q * t, 1j * q * t])

    def fit(vals, D, parity=None):
        V = C.chebvander(pts / R, D)
        cols = np.arange(D + 1) if parity is None else np.arange(parity, D + 1, 2)
        A = np.vstack([V[:, cols].real, V[:, cols].imag])
        sol, *_ = np.linalg.lstsq(A, np.concatenate([vals.real, vals.imag]), rcond=None)
        coef = np.zeros(D + 1)
        coef[cols] = sol
        return coef, float(np.max(np.abs(C.chebval(pts / R, coef) - vals)) / np.max(np.abs(vals)))

    cg, rg = fit(np.asarray(chart.g(pts), complex), degree_g, parity=1)
    cc, rc = fit(np.asarray(c0(pts), complex), degree_c)
    s_hi = chart.s_range[1]
    g_chart = LagrangianChart(chart.frame, cg[None, :], R, 0.0, max(rg, rc), strip_bound=s_hi,
                              samples=chart.samples)
    c_fit = C0Fit(cc[None, :], R, 0.0, np.array([c0.kappa]), c0.match_spread, c0.smoothness)
    return g_chart, c_fit

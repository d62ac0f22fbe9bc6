"""WKB quasimode h^{-n/4} a0 e^{-d/h} in the island.

Inserting w into (P - E0 - E1 h) w and collecting powers of h gives the
eikonal equation |grad d|^2 = V - E0 and, at order h, the transport equation

    2 grad d . grad a0 + (Laplacian d - E1) a0 = 0.

Along x' = 2 grad d this reads a0' = (E1 - Laplacian d) a0.  Liouville's
formula turns the Laplacian into the Jacobian of the Lagrangian family,
d/dt ln J = 2 Laplacian d, so a0 = a0(x0) J^{-1/2} e^{E1 t}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, LinearNDInterpolator

from .eikonal import GeodesicPath, ScalarField, geodesic_fan
from .errors import CoverageGap, PhaseLaplacianUnstable
from .potential import IslandBoundary, PotentialSpec, harmonic_data, harmonic_matrix, island_boundary

NORMALIZATION = "L2: ||u_D||=1; a0(x0)=c_norm*det(Hess/2)^(1/8)*pi^(-n/4)"


@dataclass(frozen=True)
class WkbGerm:
    """Harmonic-oscillator ground state data at the well."""

    x0: np.ndarray
    A: np.ndarray  # Hessian of d at x0
    E1: float
    a0_x0: float
    c_norm: float = 1.0

    def phase(self, x) -> np.ndarray:
        s = np.asarray(x, float).reshape(-1, len(self.x0)) - self.x0
        return 0.5 * np.einsum("ki,ij,kj->k", s, self.A, s)

    def amplitude(self, x) -> np.ndarray:
        return np.full(np.asarray(x, float).reshape(-1, len(self.x0)).shape[0], self.a0_x0)


def wkb_init_well(spec: PotentialSpec, E1: float | None = None, c_norm: float = 1.0) -> WkbGerm:
    A = harmonic_matrix(spec)
    n = spec.dim
    if E1 is None:
        E1 = harmonic_data(spec)
    # det(Hess/2)^(1/8) = det(A)^(1/4)
    a0 = c_norm * np.linalg.det(A) ** 0.25 * np.pi ** (-n / 4)
    return WkbGerm(spec.well, A, float(E1), float(a0), c_norm)


def transport_solve(path: GeodesicPath, germ: WkbGerm, mode: str = "liouville",
                    laplacian=None, osc_frac: float = 0.1) -> np.ndarray:
    """a0 along a path starting at the germ.

    ``mode='liouville'`` uses the path Jacobian.  ``mode='stencil'`` integrates
    a0' = (E1 - lap d) a0 with ``laplacian`` a callable (e.g. a grid stencil
    interpolant) evaluated along the path; if more than ``osc_frac`` of its
    second differences flip sign, the stencil is deemed to oscillate.
    """
    t = path.times - path.times[0]
    if mode == "liouville":
        J = path.jacobian_det / path.jacobian_det[0]
        return germ.a0_x0 * np.abs(J) ** -0.5 * np.exp(germ.E1 * t)
    if mode != "stencil":
        raise ValueError(f"unknown transport mode {mode!r}")
    if laplacian is None:
        raise ValueError("stencil mode needs a Laplacian callable")
    lap = np.asarray(laplacian(path.x), float)
    if not np.all(np.isfinite(lap)):
        raise PhaseLaplacianUnstable("Laplacian of the phase is not finite along the path")
    d2 = np.diff(lap, 2)
    big = np.abs(d2) > 1e-9 * (np.max(np.abs(lap)) + 1e-300)
    flips = np.sum((np.sign(d2[1:]) != np.sign(d2[:-1])) & big[1:] & big[:-1])
    if len(d2) > 10 and flips > osc_frac * len(d2):
        raise PhaseLaplacianUnstable("Laplacian of the phase oscillates along the path")
    rate = germ.E1 - lap
    logs = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))])
    return germ.a0_x0 * np.exp(logs)


def grid_laplacian(field_: ScalarField):
    """Second-order stencil Laplacian of a field, as a linear interpolant."""
    g = np.gradient(field_.values, field_.spacing)
    g = g if isinstance(g, (list, tuple)) else [g]
    lap = sum(np.gradient(gk, field_.spacing, axis=k) for k, gk in enumerate(g))
    lf = ScalarField(field_.origin, field_.spacing, lap, field_.mask)
    return lambda x: lf.interpolate(x)


@dataclass(frozen=True)
class WkbState:
    phase: ScalarField
    amplitude0: ScalarField
    domain_mask: np.ndarray
    order: int
    germ: WkbGerm
    bundle: list = field(repr=False, default_factory=list)
    normalization: str = NORMALIZATION
    _splines: tuple = field(repr=False, default=())

    def evaluate_1d(self, x, deriv: int = 0):
        """(d, a0) from ray splines at 1D points; germ inside the start radius."""
        x = np.asarray(x, float)
        d = np.empty_like(x)
        a = np.empty_like(x)
        (lo_d, lo_a, lo_r), (hi_d, hi_a, hi_r) = self._splines
        x0 = self.germ.x0[0]
        right = x >= x0
        for sel, sd, sa, r in ((right, hi_d, hi_a, hi_r), (~right, lo_d, lo_a, lo_r)):
            d[sel] = sd(x[sel], deriv)
            a[sel] = sa(x[sel], deriv)
            core = sel & (np.abs(x - x0) < r)
            if deriv == 0:
                d[core] = 0.5 * self.germ.A[0, 0] * (x[core] - x0) ** 2
                a[core] = self.germ.a0_x0
        return d, a

    def w(self, x, h: float) -> np.ndarray:
        """h^{-n/4} a0 e^{-d/h} (1D)."""
        d, a = self.evaluate_1d(x)
        return h ** -0.25 * a * np.exp(-d / h)


def _ray_splines(rays, germ, limit):
    out = []
    for p in rays:
        a0 = transport_solve(p, germ)
        r = np.abs(p.x[:, 0] - germ.x0[0])
        keep = r <= limit
        xs = p.x[keep, 0]
        order = np.argsort(xs)
        xs = xs[order]
        uniq = np.concatenate([[True], np.diff(xs) > 0])
        xs = xs[uniq]
        out.append((CubicSpline(xs, p.action[keep][order][uniq]),
                    CubicSpline(xs, a0[keep][order][uniq]), float(r[0])))
    return out


def extend_to_Omega(spec: PotentialSpec, field_: ScalarField, bundle: list | None = None,
                    germ: WkbGerm | None = None, boundary: IslandBoundary | None = None,
                    tube_cells: float = 3.0, rays: int = 256, samples: int = 4001) -> WkbState:
    """Interpolate phase and a0 from Lagrangian rays onto the grid of ``field_``."""
    germ = germ or wkb_init_well(spec)
    boundary = boundary or island_boundary(spec)
    n = spec.dim
    x0 = spec.well
    if bundle is None:
        if n == 1:
            dirs = np.array([[-1.0], [1.0]])
        else:
            ang = np.linspace(0, 2 * np.pi, rays, endpoint=False)
            dirs = np.stack([np.cos(ang), np.sin(ang)], 1)
        bundle = geodesic_fan(spec, dirs, samples=samples)
    P = field_.points()
    flat = P.reshape(-1, n)
    h = field_.spacing
    dmin = np.min(np.linalg.norm(flat[:, None, :] - boundary.points[None], axis=-1), axis=1)
    if n == 1:
        inside = (flat[:, 0] > boundary.points[0, 0]) & (flat[:, 0] < boundary.points[1, 0])
    else:
        from matplotlib.path import Path

        inside = Path(boundary.points).contains_points(flat)
    target = inside & (dmin > tube_cells * h)
    d_vals = np.full(len(flat), np.nan)
    a_vals = np.full(len(flat), np.nan)
    splines = ()
    if n == 1:
        lim = boundary.radius - 0.5 * tube_cells * h
        splines = tuple(_ray_splines(bundle, germ, lim))
        tmp = WkbState(field_, field_, np.zeros(1, bool), 0, germ, [], NORMALIZATION, splines)
        d_vals[target], a_vals[target] = tmp.evaluate_1d(flat[target, 0])
    else:
        xs, ds, As = [flat[[np.argmin(np.linalg.norm(flat - x0, axis=1))]]], [[0.0]], [[germ.a0_x0]]
        for p in bundle:
            a0 = transport_solve(p, germ)
            good = np.abs(p.jacobian_det) > 1e-3
            xs.append(p.x[good])
            ds.append(p.action[good])
            As.append(a0[good])
        X = np.vstack(xs)
        d_vals[target] = LinearNDInterpolator(X, np.concatenate(ds))(flat[target])
        a_vals[target] = LinearNDInterpolator(X, np.concatenate(As))(flat[target])
    ok = target & np.isfinite(a_vals)
    if target.sum() and (target & ~ok).sum() > 0.05 * target.sum():
        raise CoverageGap(f"{(target & ~ok).sum()} of {target.sum()} island nodes unreachable")
    mask = ok.reshape(field_.dims)
    phase = ScalarField(field_.origin, h, np.where(mask, d_vals.reshape(field_.dims), field_.values), mask)
    amp = ScalarField(field_.origin, h, np.where(mask, a_vals.reshape(field_.dims), np.nan), mask)
    return WkbState(phase, amp, mask, 0, germ, bundle, NORMALIZATION, splines)


def quasimode_residual_1d(state: WkbState, spec: PotentialSpec, h: float, interval,
                          dx: float = 5e-4) -> float:
    """sup |e^{d/h}(P - E0 - E1 h)(a0 e^{-d/h})| on ``interval`` (discrete P)."""
    a, b = interval
    x = np.arange(a - dx, b + 1.5 * dx, dx)
    d, a0 = state.evaluate_1d(x)
    E = spec.well_energy + state.germ.E1 * h
    i = np.arange(1, len(x) - 1)
    lap = (a0[i + 1] * np.exp(-(d[i + 1] - d[i]) / h) - 2 * a0[i]
           + a0[i - 1] * np.exp(-(d[i - 1] - d[i]) / h)) / dx**2
    r = -h * h * lap + (spec.V(x[i]) - E) * a0[i]
    return float(np.max(np.abs(r)))

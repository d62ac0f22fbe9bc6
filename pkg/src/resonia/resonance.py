"""Numerical ground truth: Dirichlet ground state, exterior complex scaling, resonance.

The scaled operator uses the contour z(x) = x + (e^{i theta} - 1) F(x), with
F = 0 on |x| <= R0 and F' ramping to 1 on [R0, 1.5 R0] through a C^3
smoothstep.  Far out z = e^{i theta} x + const, so the continuum rotates to
e^{-2 i theta} R_+.  With M = diag z'(x_i) the discretization

    A = -h^2 M^{-1/2} K M^{-1/2} + diag V(z),   K_{i,i+1} = 1 / (z'_{i+1/2} dx^2)

is complex symmetric and reduces to the standard real three-point scheme at
theta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy.linalg import eig, eigh_tridiagonal

from .eikonal import agmon_distance_1d
from .errors import (ConfigError, DidNotConverge, NoBoundary, NoIsolatedResonance, NoWellFound,
                     ResolutionError, ScalingInsideIsland)
from .potential import PotentialSpec, island_boundary


def ramp(r, R0: float, R1: float):
    """G(r) with G' = smoothstep on [R0, R1]; G = 0 below R0, G = r - const above R1."""
    r = np.asarray(r, float)
    t = np.clip((r - R0) / (R1 - R0), 0.0, 1.0)
    inner = (R1 - R0) * (t**6 - 3 * t**5 + 2.5 * t**4)
    return np.where(r >= R1, r - R1 + 0.5 * (R1 - R0), inner)


def ramp_deriv(r, R0: float, R1: float):
    t = np.clip((np.asarray(r, float) - R0) / (R1 - R0), 0.0, 1.0)
    return 6 * t**5 - 15 * t**4 + 10 * t**3


@dataclass(frozen=True)
class DiscretizedOperator:
    matrix: sp.csc_matrix
    x: np.ndarray  # real grid nodes (r for the radial problem)
    z: np.ndarray  # complex nodes
    h: float
    theta: float
    R0: float
    box: float
    radial: bool = False

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def nodes(self) -> int:
        return len(self.x)

    def unscaled(self) -> np.ndarray:
        return np.abs(self.x) <= self.R0

    def grid(self) -> dict:
        return {"nodes": self.nodes, "spacing": self.spacing, "R0": self.R0, "box": self.box,
                "radial": self.radial}


def complex_scaled_operator(spec: PotentialSpec, h: float, theta: float = 0.3, R0: float = 4.0,
                            box: float = 12.0, nodes: int = 8000, radial: bool = False) -> DiscretizedOperator:
    """Exterior-scaled -h^2 d^2 + V on (-box, box), or the m = 0 radial problem on (0, box).

    The radial problem is the finite-volume form of -h^2 r^{-1}(r u')' + V on
    cell centres r_i = (i + 1/2) dr (no flux through r = 0), symmetrized by the
    weight z z', so the unknown is v = sqrt(z z') u, i.e. sqrt(r) u where unscaled.
    """
    if box < 3 * R0:
        raise ConfigError(f"box {box} must be at least 3 R0 = {3 * R0}")
    try:
        r_island = island_boundary(spec).radius
    except (NoBoundary, NoWellFound):  # free or constant potentials: nothing to protect
        r_island = 0.0
    if R0 <= r_island:
        raise ScalingInsideIsland(f"R0 = {R0} does not clear the island")
    if radial:
        dx = box / (nodes + 0.5)
        x = (np.arange(nodes) + 0.5) * dx
        xm = np.arange(nodes + 1) * dx
    else:
        x = np.linspace(-box, box, nodes + 2)[1:-1]
        dx = x[1] - x[0]
        xm = np.concatenate([[x[0] - dx / 2], x + dx / 2])
    R1 = 1.5 * R0
    if theta == 0.0:
        z, zm = x.astype(float), xm.astype(float)
        zp = np.ones_like(x)
        zpm = np.ones_like(xm)
    else:
        c = np.exp(1j * theta) - 1
        z = x + c * np.sign(x) * ramp(np.abs(x), R0, R1)
        zm = xm + c * np.sign(xm) * ramp(np.abs(xm), R0, R1)
        zp = 1 + c * ramp_deriv(np.abs(x), R0, R1)
        zpm = 1 + c * ramp_deriv(np.abs(xm), R0, R1)
    if radial:
        flux = zm / zpm  # r / z' at cell faces; zero at r = 0
        wgt = z * zp
    else:
        flux = 1.0 / zpm
        wgt = zp
    off = flux[1:-1] / (dx * dx)
    diag = -(flux[:-1] + flux[1:]) / dx**2
    K = sp.diags([off, diag, off], [-1, 0, 1])
    Mi = sp.diags(wgt**-0.5)
    if radial:
        Vz = spec.V(np.stack([z, np.zeros_like(z)], 1))
    else:
        Vz = spec.V(z.reshape(-1, 1)) if spec.dim == 1 else None
    A = -h * h * (Mi @ K @ Mi) + sp.diags(np.ravel(Vz))
    return DiscretizedOperator(A.tocsc(), x, z, h, theta, R0, box, radial)


def real_operator(spec, h, **kw) -> DiscretizedOperator:
    return complex_scaled_operator(spec, h, theta=0.0, **kw)


# ---------------------------------------------------------------------------
# Dirichlet ground state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletResult:
    lam: float
    x: np.ndarray
    u: np.ndarray  # L2-normalized, positive at the well
    interval: tuple
    eta: float
    S: float

    def interpolate(self, x):
        return np.interp(x, self.x, self.u, left=0.0, right=0.0)


def well_action(spec: PotentialSpec) -> float:
    """S = d(x0, boundary of the island), 1D."""
    b = island_boundary(spec).points[:, 0]
    return float(np.max(agmon_distance_1d(spec, b)))


def dirichlet_ground(spec: PotentialSpec, h: float, eta: float | None = None, S: float | None = None,
                     dx: float | None = None, eta_frac: float = 0.2,
                     interval: tuple | None = None) -> DirichletResult:
    """Lowest Dirichlet eigenpair on {d(x0, x) < S - eta} (1D)."""
    from scipy.optimize import brentq

    x0 = float(spec.well[0])
    if interval is None:
        S = well_action(spec) if S is None else S
        eta = eta_frac * S if eta is None else eta
        target = S - eta
        b = island_boundary(spec).points[:, 0]
        f = lambda x: float(agmon_distance_1d(spec, np.array([x]))[0]) - target
        lo = brentq(f, b.min(), x0 - 1e-9, xtol=1e-13)
        hi = brentq(f, x0 + 1e-9, b.max(), xtol=1e-13)
    else:
        lo, hi = interval
        S = S if S is not None else float("nan")
        eta = eta if eta is not None else float("nan")
    grid_probe = np.linspace(lo, hi, 2001)
    vmax = float(np.max(np.abs(spec.V(grid_probe.reshape(-1, 1)))))
    limit = h / (10 * np.sqrt(max(vmax, 1e-300)))
    if dx is None:
        dx = 0.5 * limit
    if dx > limit:
        raise ResolutionError(f"spacing {dx:.3g} exceeds h/(10 sqrt(max V)) = {limit:.3g}")
    n = int(np.ceil((hi - lo) / dx)) - 1
    x = np.linspace(lo, hi, n + 2)[1:-1]
    d = x[1] - x[0]
    diag = 2 * h * h / d**2 + np.ravel(spec.V(x.reshape(-1, 1)))
    off = np.full(n - 1, -h * h / d**2)
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    u = v[:, 0] / np.sqrt(np.sum(v[:, 0] ** 2) * d)
    if u[np.argmin(np.abs(x - x0))] < 0:
        u = -u
    return DirichletResult(float(w[0]), x, u, (float(lo), float(hi)), float(eta), float(S))


# ---------------------------------------------------------------------------
# resonance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResonanceResult:
    rho: complex
    lambda_D: float
    h: float
    theta: float
    grid: dict
    x: np.ndarray  # unscaled-region nodes
    u: np.ndarray  # resonant state there, normalized by <u, u_D> = 1
    residual: float
    audit: dict = field(default_factory=dict)
    dirichlet: DirichletResult | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"h": self.h, "theta": self.theta, "lambda_D": self.lambda_D, "re_rho": self.rho.real,
                "im_rho": self.rho.imag, "residual": self.residual, "grid": self.grid,
                "audit": self.audit}


def inverse_iteration(A, sigma, maxit: int = 60, tol: float = 1e-15):
    n = A.shape[0]
    lu = spl.splu((A - sigma * sp.identity(n, format="csc")).tocsc())
    u = np.ones(n, complex)
    lam = sigma
    for _ in range(maxit):
        u = lu.solve(u)
        u /= np.sqrt(u @ u)
        new = u @ (A @ u)
        if abs(new - lam) <= tol * abs(new):
            return new, u
        lam = new
    res = np.linalg.norm(A @ u - lam * u) / np.linalg.norm(u)
    if res > 1e-6:
        raise DidNotConverge(f"inverse iteration stalled, residual {res:.2e}")
    return lam, u


def _neighbors(A, rho, k=6):
    if A.shape[0] < 4000:
        w = eig(A.toarray(), right=False)
    else:
        w = spl.eigs(A, k=k, sigma=rho, which="LM", return_eigenvectors=False)
    return np.asarray(w)


def resonance_near(op: DiscretizedOperator, dirichlet: DirichletResult | float, S: float | None = None,
                   audit: bool = True) -> ResonanceResult:
    """Eigenvalue of the scaled operator nearest lambda_D, with uniqueness audit."""
    lamD = dirichlet.lam if isinstance(dirichlet, DirichletResult) else float(dirichlet)
    h = op.h
    sigma = lamD - 1j * (np.exp(-2 * S / h) if S else 0.0)
    rho, v = inverse_iteration(op.matrix, sigma)
    res = float(np.linalg.norm(op.matrix @ v - rho * v) / np.linalg.norm(v))
    info = {}
    if audit:
        w = _neighbors(op.matrix, rho)
        dist = np.sort(np.abs(w - rho))
        others = dist[dist > 1e-9 * max(1.0, abs(rho))]
        nearest = float(others[0]) if len(others) else float("inf")
        info = {"nearest_other": nearest, "window": h / 4}
        if nearest < h / 4:
            raise NoIsolatedResonance(f"second eigenvalue {nearest:.2e} from rho, inside h/4")
        th = 2 * op.theta
        ray = np.exp(-1j * th)
        proj = max(0.0, (rho * np.conj(ray)).real)
        info["continuum_distance"] = float(abs(rho - proj * ray))
    keep = op.unscaled()
    x, u = op.x[keep], v[keep]
    if isinstance(dirichlet, DirichletResult):
        dx = op.spacing
        ov = np.sum(u * dirichlet.interpolate(x)) * dx
        u = u / ov
    else:
        i0 = np.argmax(np.abs(u))
        u = u / (u[i0] / abs(u[i0]))
    return ResonanceResult(complex(rho), lamD, h, op.theta, op.grid(), x, u, res, info,
                           dirichlet if isinstance(dirichlet, DirichletResult) else None)


def state_overlap(res: ResonanceResult) -> float:
    """|<u, u_D>| / (||u|| ||u_D||) on the Dirichlet interval."""
    D = res.dirichlet
    sel = (res.x > D.interval[0]) & (res.x < D.interval[1])
    x, u = res.x[sel], res.u[sel]
    uD = D.interpolate(x)
    return float(abs(np.sum(u * uD)) / np.sqrt(np.sum(np.abs(u) ** 2) * np.sum(uD**2)))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AgmonCheck:
    lhs: float
    rhs: float
    residual: float  # exact discrete identity
    naive_residual: float  # with the centered |phi'|^2 term


def agmon_identity_check(spec: PotentialSpec, h: float, x, f, phi, E: float) -> AgmonCheck:
    """Two sides of Re<e^{phi/h}(P - E) f, e^{phi/h} f> on a uniform 1D grid.

    ``f`` vanishes at both ends (Dirichlet).  The exact discrete right side is
    h^2 ||D g||^2 + <(V - E) g, g> - sum_edges 2 h^2 (cosh(dphi/h) - 1)/dx^2 g_i g_{i+1},
    g = e^{phi/h} f; the naive one replaces the edge sum by <|phi'|^2 g, g>.
    """
    x = np.asarray(x, float)
    f = np.asarray(f, float)
    phi = np.asarray(phi, float)
    dx = x[1] - x[0]
    V = np.ravel(spec.V(x.reshape(-1, 1)))
    Pf = np.zeros_like(f)
    Pf[1:-1] = -h * h * (f[2:] - 2 * f[1:-1] + f[:-2]) / dx**2 + (V[1:-1] - E) * f[1:-1]
    g = np.exp(phi / h) * f
    lhs = float(np.sum(Pf[1:-1] * np.exp(2 * phi[1:-1] / h) * f[1:-1]) * dx)
    dg = np.diff(g) / dx
    dphi = np.diff(phi)
    kin = h * h * np.sum(dg**2) * dx
    pot = np.sum((V[1:-1] - E) * g[1:-1] ** 2) * dx
    edge = np.sum(2 * h * h * (np.cosh(dphi / h) - 1) / dx**2 * g[:-1] * g[1:]) * dx
    rhs = float(kin + pot - edge)
    grad2 = np.gradient(phi, dx) ** 2
    naive = float(kin + pot - np.sum(grad2[1:-1] * g[1:-1] ** 2) * dx)
    scale = max(abs(lhs), kin, abs(pot), 1e-300)
    return AgmonCheck(lhs, rhs, abs(lhs - rhs) / scale, abs(lhs - naive) / scale)


def fbi_transform(u, x, h: float, xs, xis, mu: float = 1.0) -> np.ndarray:
    """T u(x, xi) = c_mu int exp(i xi (x - y)/h - mu (x - y)^2 / (2h)) u(y) dy (1D).

    c_mu = mu^{1/4} 2^{-1/2} (pi h)^{-3/4} makes T an isometry into L^2(dx dxi).
    """
    x = np.asarray(x, float)
    u = np.asarray(u, complex)
    dx = x[1] - x[0]
    c = mu**0.25 * 2**-0.5 * (np.pi * h) ** -0.75
    X = np.asarray(xs, float)[:, None, None]
    XI = np.asarray(xis, float)[None, :, None]
    y = x[None, None, :]
    K = np.exp(1j * XI * (X - y) / h - mu * (X - y) ** 2 / (2 * h))
    return c * np.sum(K * u[None, None, :], axis=-1) * dx

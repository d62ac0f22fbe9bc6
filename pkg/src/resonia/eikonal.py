"""Agmon distance, minimal geodesics, interaction set and caustics.

The Agmon metric is (V - E0)_+ dx^2.  Its distance from the well solves the
eikonal equation |grad d|^2 = (V - E0)_+, and minimal geodesics are projections
of integral curves of the Hamilton field of q = xi^2 - V:

    x' = 2 xi,    xi' = grad V.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import RegularGridInterpolator

from .errors import AmbiguousGamma, DidNotConverge, GridTooCoarse, NoCausticFound
from .potential import IslandBoundary, PotentialSpec, _pts, harmonic_matrix, island_boundary


@dataclass(frozen=True)
class ScalarField:
    """Uniform-grid samples. ``values`` has shape ``dims``."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def dims(self) -> tuple:
        return self.values.shape

    @property
    def dim(self) -> int:
        return self.values.ndim

    def axes(self) -> list:
        return [self.origin[k] + self.spacing * np.arange(m) for k, m in enumerate(self.dims)]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), -1)

    def interpolate(self, x, method: str = "linear"):
        x = _pts(x, self.dim)
        f = RegularGridInterpolator(self.axes(), self.values, method=method,
                                    bounds_error=False, fill_value=np.nan)
        return f(x.reshape(-1, self.dim)).reshape(x.shape[:-1])

    def gradient(self) -> np.ndarray:
        g = np.gradient(self.values, self.spacing)
        return np.stack(g if isinstance(g, (list, tuple)) else [g], -1)


# ---------------------------------------------------------------------------
# fast marching
# ---------------------------------------------------------------------------


def _neighbors(idx, dims):
    for ax in range(len(dims)):
        for step in (-1, 1):
            j = list(idx)
            j[ax] += step
            if 0 <= j[ax] < dims[ax]:
                yield tuple(j)


def _fm_update(idx, d, accepted, F, h, dims):
    a = []
    for ax in range(len(dims)):
        best = np.inf
        for step in (-1, 1):
            j = list(idx)
            j[ax] += step
            if 0 <= j[ax] < dims[ax] and accepted[tuple(j)]:
                best = min(best, d[tuple(j)])
        if np.isfinite(best):
            a.append(best)
    a.sort()
    f = F[idx] * h
    val = a[0] + f
    if len(a) == 2 and val > a[1]:
        diff = a[0] - a[1]
        disc = 2 * f * f - diff * diff
        if disc >= 0:
            val = 0.5 * (a[0] + a[1] + np.sqrt(disc))
    return val


def agmon_fast_march(
    spec: PotentialSpec,
    nodes: int = 201,
    extent: float | None = None,
    seed_cells: int = 4,
    speed_floor: float = 1e-9,
) -> ScalarField:
    """First-order fast marching for |grad d| = sqrt((V - E0)_+), seeded at the well.

    Nodes within ``seed_cells`` cells of x0 take the harmonic value
    d = <A s, s>/2, A = sqrt(Hess V / 2).
    """
    if seed_cells < 3:
        raise GridTooCoarse("harmonic seed ball must span at least 3 cells")
    n = spec.dim
    x0 = spec.well
    E0 = spec.well_energy
    bd = island_boundary(spec)
    if extent is None:
        extent = 1.5 * bd.radius
    if nodes % 2 == 0:
        nodes += 1
    h = 2 * extent / (nodes - 1)
    if seed_cells * h > 0.3 * bd.radius:
        raise GridTooCoarse("seed ball exceeds the harmonic region; refine the grid")
    origin = x0 - extent
    dims = (nodes,) * n
    fld = ScalarField(origin, h, np.zeros(dims), np.ones(dims, bool))
    P = fld.points()
    F = np.maximum(np.sqrt(np.maximum(spec.V(P) - E0, 0.0)), speed_floor)
    A = harmonic_matrix(spec)
    s = P - x0
    quad_d = 0.5 * np.einsum("...i,ij,...j->...", s, A, s)
    dist = np.linalg.norm(s, axis=-1)

    d = np.full(dims, np.inf)
    accepted = np.zeros(dims, bool)
    seed = dist <= seed_cells * h * (1 + 1e-12)
    d[seed] = quad_d[seed]
    accepted[seed] = True
    heap: list = []
    for idx in zip(*np.nonzero(seed)):
        for j in _neighbors(idx, dims):
            if not accepted[j]:
                v = _fm_update(j, d, accepted, F, h, dims)
                if v < d[j]:
                    d[j] = v
                    heapq.heappush(heap, (v, j))
    while heap:
        v, idx = heapq.heappop(heap)
        if accepted[idx] or v > d[idx]:
            continue
        accepted[idx] = True
        for j in _neighbors(idx, dims):
            if not accepted[j]:
                w = _fm_update(j, d, accepted, F, h, dims)
                if w < d[j]:
                    d[j] = w
                    heapq.heappush(heap, (w, j))
    return ScalarField(origin, h, d, np.isfinite(d))


def agmon_distance_1d(spec: PotentialSpec, x) -> np.ndarray:
    """Adaptive quadrature of sqrt((V-E0)_+) from the well (1D reference)."""
    x0 = float(spec.well[0])
    E0 = spec.well_energy
    p = lambda s: np.sqrt(max(float(spec.V(s)) - E0, 0.0))
    xs = np.atleast_1d(np.asarray(x, float))
    out = np.array([quad(p, x0, xi, epsabs=1e-14, epsrel=1e-13, limit=200)[0] for xi in xs])
    return np.abs(out).reshape(np.shape(x))


def eikonal_residual(field_: ScalarField, spec: PotentialSpec, boundary: IslandBoundary,
                     skip_center: int = 5, skip_caustic: int = 2) -> float:
    """Median | |grad d|^2 - (V-E0)_+ | away from the well and the boundary."""
    P = field_.points()
    g = field_.gradient()
    res = np.abs(np.sum(g * g, -1) - np.maximum(spec.V(P) - spec.well_energy, 0.0))
    h = field_.spacing
    keep = field_.mask & (np.linalg.norm(P - spec.well, axis=-1) > skip_center * h)
    flat = P.reshape(-1, field_.dim)
    dmin = np.min(np.linalg.norm(flat[:, None, :] - boundary.points[None], axis=-1), axis=1)
    keep &= (dmin > skip_caustic * h).reshape(keep.shape)
    return float(np.median(res[keep]))


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeodesicPath:
    """Samples of the Hamilton flow of q with Agmon action and Jacobian.

    ``jacobian_det`` is det dX/dX(start) for the Lagrangian family through the
    well germ; it equals 1 at ``times[0]``.
    """

    times: np.ndarray
    states: np.ndarray  # (T, 2n)
    action: np.ndarray
    jacobian_det: np.ndarray | None
    dim: int
    terminated_by: str = ""
    dX: np.ndarray | None = field(default=None, repr=False)
    dXi: np.ndarray | None = field(default=None, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.dim]

    @property
    def xi(self) -> np.ndarray:
        return self.states[:, self.dim:]

    def energy_defect(self, spec: PotentialSpec) -> np.ndarray:
        return np.sum(self.xi**2, axis=1) - spec.V(self.x) + spec.well_energy


def _flow_rhs(spec, n):
    def rhs(t, y):
        return np.concatenate([2 * y[n:2 * n], spec.grad(y[:n]), [2 * np.dot(y[n:2 * n], y[n:2 * n])]])
    return rhs


def _variational(spec, n, xfun, A, times):
    """Integrate dX' = 2 dXi, dXi' = Hess V(x(t)) dX from times[0]."""

    def rhs(t, y):
        X = y[: n * n].reshape(n, n)
        Xi = y[n * n:].reshape(n, n)
        H = spec.hess(xfun(t))
        return np.concatenate([(2 * Xi).ravel(), (H @ X).ravel()])

    y0 = np.concatenate([np.eye(n).ravel(), A.ravel()])
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, t_eval=times, method="DOP853",
                    rtol=1e-11, atol=1e-13)
    X = sol.y[: n * n].T.reshape(-1, n, n)
    Xi = sol.y[n * n:].T.reshape(-1, n, n)
    return X, Xi


def geodesic_shoot(
    spec: PotentialSpec,
    x1,
    t_min: float = -80.0,
    r_stop: float = 1e-4,
    samples: int = 2001,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> GeodesicPath:
    """Backward flow from (x1, 0) to the well; returned in increasing time, t=0 at x1."""
    n = spec.dim
    x0 = spec.well
    E0 = spec.well_energy
    x1 = np.asarray(x1, float).reshape(n)

    def near(t, y):
        return np.linalg.norm(y[:n] - x0) - r_stop

    near.terminal = True

    def exits(t, y):
        return float(spec.V(y[:n])) - E0 + 1e-9

    exits.terminal = True
    exits.direction = -1
    y0 = np.concatenate([x1, np.zeros(n), [0.0]])
    sol = solve_ivp(_flow_rhs(spec, n), (0.0, t_min), y0, method="DOP853", rtol=rtol, atol=atol,
                    events=[near, exits], dense_output=True)
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise DidNotConverge("backward flow from x1 did not reach the well")
    t_stop = sol.t_events[0][0]
    times = t_stop * (1 - np.linspace(0, 1, samples)) ** 3
    times[-1] = 0.0
    Y = sol.sol(times)
    states = Y[: 2 * n].T
    A = harmonic_matrix(spec)
    s = states[0, :n] - x0
    d_stop = 0.5 * s @ A @ s
    action = d_stop + Y[2 * n] - Y[2 * n][0]
    X, Xi = _variational(spec, n, lambda t: sol.sol(t)[:n], A, times)
    J = np.linalg.det(X)
    return GeodesicPath(times, states, action, J, n, "well", X, Xi)


def geodesic_fan(
    spec: PotentialSpec,
    directions,
    r_start: float = 1e-4,
    t_max: float = 40.0,
    stop: str = "caustic",
    t_extra: float = 0.0,
    samples: int = 1001,
) -> list[GeodesicPath]:
    """Forward rays of the Lagrangian manifold from the harmonic germ.

    Each ray starts at x0 + r_start u with xi = A (x - x0).  ``stop='caustic'``
    ends it where det dX first vanishes (plus ``t_extra``); ``stop='none'``
    integrates to ``t_max``.
    """
    n = spec.dim
    x0 = spec.well
    A = harmonic_matrix(spec)
    dirs = np.atleast_2d(np.asarray(directions, float)).reshape(-1, n)
    nn = n * n

    def rhs(t, y):
        x, xi = y[:n], y[n:2 * n]
        X = y[2 * n + 1:2 * n + 1 + nn].reshape(n, n)
        Xi = y[2 * n + 1 + nn:].reshape(n, n)
        H = spec.hess(x)
        return np.concatenate([2 * xi, spec.grad(x), [2 * xi @ xi], (2 * Xi).ravel(), (H @ X).ravel()])

    def jac0(t, y):
        return np.linalg.det(y[2 * n + 1:2 * n + 1 + nn].reshape(n, n))

    jac0.terminal = stop == "caustic" and t_extra == 0.0
    jac0.direction = -1
    out = []
    for u in dirs:
        u = u / np.linalg.norm(u)
        xs = x0 + r_start * u
        s = xs - x0
        y0 = np.concatenate([xs, A @ s, [0.5 * s @ A @ s], np.eye(n).ravel(), A.ravel()])
        sol = solve_ivp(rhs, (0.0, t_max), y0, method="DOP853", rtol=1e-11, atol=1e-13,
                        events=jac0 if stop == "caustic" else None, dense_output=True)
        t_end = sol.t[-1]
        reason = "t_max"
        if stop == "caustic" and sol.t_events is not None and len(sol.t_events[0]):
            t_c = sol.t_events[0][0]
            reason = "caustic"
            if t_extra > 0:
                sol2 = solve_ivp(rhs, (0.0, t_c + t_extra), y0, method="DOP853", rtol=1e-11,
                                 atol=1e-13, dense_output=True)
                sol = sol2
                t_end = t_c + t_extra
            else:
                t_end = t_c
        times = np.linspace(0.0, t_end, samples)
        Y = sol.sol(times)
        X = Y[2 * n + 1:2 * n + 1 + nn].T.reshape(-1, n, n)
        Xi = Y[2 * n + 1 + nn:].T.reshape(-1, n, n)
        out.append(GeodesicPath(times, Y[: 2 * n].T, Y[2 * n], np.linalg.det(X), n, reason, X, Xi))
    return out


# ---------------------------------------------------------------------------
# interaction set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionSet:
    S: float
    gamma_points: np.ndarray  # (k, n)
    n_gamma: int
    transverse_hessian: list
    clusters: list = field(default_factory=list)  # index arrays into boundary samples

    def to_dict(self) -> dict:
        return {
            "S": self.S,
            "n_gamma": self.n_gamma,
            "points": self.gamma_points.tolist(),
            "transverse_hessian": [None if h is None else float(h) for h in self.transverse_hessian],
        }


def _runs(flags):
    """Contiguous True runs on a cyclic index set."""
    m = len(flags)
    if flags.all():
        return [np.arange(m)]
    start = int(np.argmin(flags))  # a False entry
    runs, cur = [], []
    for k in range(1, m + 1):
        i = (start + k) % m
        if flags[i]:
            cur.append(i)
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    return runs


def interaction_set(field_: ScalarField, boundary: IslandBoundary, cluster_tol: float = 0.02,
                    inset_cells: float = 3.0) -> InteractionSet:
    """Locate Gamma from the field sampled on and just inside the boundary.

    d is flat along the boundary itself (the metric vanishes there), so the
    clustering uses d sampled at the inset curve x - inset * normal, where the
    minimum singles out the points reached by smooth minimal geodesics.
    """
    pts = boundary.points
    d_b = field_.interpolate(pts)
    S = float(np.nanmin(d_b))
    if boundary.dim == 1:
        return InteractionSet(S, pts.copy(), 0, [None] * len(pts),
                              [np.array([0]), np.array([1])])
    delta = inset_cells * field_.spacing
    d_in = field_.interpolate(pts - delta * boundary.normals)
    m = np.nanmin(d_in)
    flags = d_in <= m + cluster_tol * S
    runs = _runs(flags)
    s = boundary.arclength()
    L = s[-1]
    seg = np.diff(s)
    if len(runs) == 1 and len(runs[0]) == len(pts):
        return InteractionSet(S, pts.copy(), 1, [0.0], runs)
    gam, hess = [], []
    for r in runs:
        half = 0.5 * np.sum(seg[r])
        c = r[np.argmin(d_in[r])]
        w = max(len(r), 5)
        idx = np.arange(c - 2 * w, c + 2 * w + 1) % len(pts)
        t = (np.arange(-2 * w, 2 * w + 1)) * (L / len(pts))
        cf = np.polyfit(t, d_in[idx], 2)
        H = 2 * cf[0]
        if H > 0:
            pred = np.sqrt(2 * cluster_tol * S / H)
            if pred / 3 <= max(half, L / len(pts)) <= 3 * pred:
                t_star = -cf[1] / (2 * cf[0])
                k = int(round(t_star / (L / len(pts))))
                gam.append(pts[(c + k) % len(pts)])
                hess.append(float(H))
                continue
        raise AmbiguousGamma(f"cluster of {len(r)} samples is neither point-like nor a full arc")
    return InteractionSet(S, np.array(gam), 0, hess, runs)


# ---------------------------------------------------------------------------
# caustics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CausticSet:
    points: np.ndarray  # (k, n)
    times: np.ndarray
    path_index: np.ndarray
    phi: np.ndarray  # d - S at the caustic points
    excess: np.ndarray  # V - E0 at the caustic points
    interior: np.ndarray  # bool: strictly inside the island
    C_lem: float | None
    boundary_only: bool


def caustic_detect(bundle: list[GeodesicPath], spec: PotentialSpec, S: float,
                   j_tol: float = 1e-6, interior_tol: float = 1e-6) -> CausticSet:
    """First zero of the Jacobian along each path, with the phi >= C (V-E0) check."""
    E0 = spec.well_energy
    pts, ts, idx = [], [], []
    phis = []
    for k, p in enumerate(bundle):
        J = p.jacobian_det
        if J is None:
            continue
        jmax = np.max(np.abs(J))
        hit = np.nonzero((np.sign(J[1:]) != np.sign(J[:-1])) | (np.abs(J[1:]) < j_tol * jmax))[0]
        if len(hit) == 0:
            continue
        i = hit[0]
        if J[i] != J[i + 1] and np.sign(J[i]) != np.sign(J[i + 1]):
            lam = J[i] / (J[i] - J[i + 1])
        else:
            lam = 1.0
        x = p.x[i] + lam * (p.x[i + 1] - p.x[i])
        pts.append(x)
        ts.append(p.times[i] + lam * (p.times[i + 1] - p.times[i]))
        phis.append(p.action[i] + lam * (p.action[i + 1] - p.action[i]) - S)
        idx.append(k)
    if not pts:
        raise NoCausticFound("no Jacobian zero along any path")
    pts = np.array(pts)
    exc = spec.V(pts) - E0
    phis = np.array(phis)
    interior = exc > interior_tol
    C_lem = float(np.min(phis[interior] / exc[interior])) if interior.any() else None
    return CausticSet(pts, np.array(ts), np.array(idx), phis, exc, interior, C_lem,
                      bool(not interior.any()))

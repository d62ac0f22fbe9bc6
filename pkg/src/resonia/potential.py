"""Potential families, well location, island boundary and local boundary frame.

All families are entire functions written with numpy primitives, so the same
code evaluates on real points and on complex-scaled points.  Points are arrays
with a trailing axis of length ``dim``; in 1D a bare array of abscissae is also
accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import sqrtm
from scipy.optimize import brentq

from .errors import DegenerateBoundary, NoBoundary, NoWellFound

FAMILIES = ("gauss_well", "gaussian_sum", "poly_gauss", "harmonic", "constant", "free")


def _pts(x, dim: int) -> np.ndarray:
    x = np.asarray(x)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


def _center(params: Mapping[str, Any], dim: int) -> np.ndarray:
    c = params.get("center")
    return np.zeros(dim) if c is None else np.asarray(c, dtype=float).reshape(dim)


# ---------------------------------------------------------------------------
# families: each returns (value, gradient, hessian) for points s = x - center
# ---------------------------------------------------------------------------


def _gauss_well(p, s, order):
    E0, kap, alp = p.get("E0", 0.5), p.get("kappa", 1.0), p.get("alpha", 1.0)
    r2 = np.sum(s * s, axis=-1)
    e = np.exp(-alp * r2)
    v = (E0 + kap * r2) * e
    out = [v]
    eps = p.get("tilt", 0.0)
    if eps:
        et = np.exp(-r2)
        out[0] = v + eps * s[..., 0] * et
    if order >= 1:
        q = kap - alp * (E0 + kap * r2)
        g = 2.0 * (q * e)[..., None] * s
        if eps:
            e1 = np.zeros(s.shape[-1])
            e1[0] = 1.0
            g = g + eps * et[..., None] * (e1 - 2.0 * s[..., 0, None] * s)
        out.append(g)
    if order >= 2:
        n = s.shape[-1]
        I = np.eye(n)
        ss = s[..., :, None] * s[..., None, :]
        H = (2 * q * e)[..., None, None] * I - (4 * alp * e * (kap + q))[..., None, None] * ss
        if eps:
            s1 = s[..., 0]
            e1 = np.zeros(n)
            e1[0] = 1.0
            t1 = -2 * (e1[:, None] * s[..., None, :] + s[..., :, None] * e1[None, :])
            t2 = -2 * s1[..., None, None] * I + 4 * s1[..., None, None] * ss
            H = H + eps * et[..., None, None] * (t1 + t2)
        out.append(H)
    return out


def _gaussian_sum(p, s, order):
    terms = p.get("terms") or [
        {"amp": 1.0, "width": 1.0},
        {"amp": -0.5, "width": 0.5},
    ]
    n = s.shape[-1]
    v = 0.0
    g = 0.0
    H = 0.0
    for t in terms:
        c = np.zeros(n) if t.get("center") is None else np.asarray(t["center"], float)
        w2 = float(t.get("width", 1.0)) ** 2
        y = s - c
        e = float(t["amp"]) * np.exp(-np.sum(y * y, axis=-1) / w2)
        v = v + e
        if order >= 1:
            g = g + (-2.0 / w2) * e[..., None] * y
        if order >= 2:
            yy = y[..., :, None] * y[..., None, :]
            H = H + e[..., None, None] * (4.0 / w2**2 * yy - 2.0 / w2 * np.eye(n))
    return [v, g, H][: order + 1]


def _poly_terms(p, n):
    # {"coeffs": {"2": 1.0, "0": 0.5}} in 1D, {"2,0": 1.0} in 2D
    out = []
    for k, c in p.get("coeffs", {"0": 0.5, "2": 1.0}).items():
        ex = tuple(int(e) for e in str(k).split(","))
        if len(ex) != n:
            raise ValueError(f"poly exponent {k!r} does not match dim {n}")
        out.append((ex, float(c)))
    return out


def _mono(s, ex, d):
    """Derivative multi-index d of the monomial s**ex."""
    val = 1.0
    for i, (e, di) in enumerate(zip(ex, d)):
        if di > e:
            return 0.0 * s[..., 0]
        coef = 1.0
        for j in range(di):
            coef *= e - j
        val = val * coef * s[..., i] ** (e - di)
    return val


def _poly_gauss(p, s, order):
    n = s.shape[-1]
    alp = p.get("alpha", 1.0)
    terms = _poly_terms(p, n)
    z = np.zeros(n, int)
    P = sum(c * _mono(s, ex, z) for ex, c in terms)
    e = np.exp(-alp * np.sum(s * s, axis=-1))
    out = [P * e]
    if order >= 1:
        unit = np.eye(n, dtype=int)
        dP = np.stack([sum(c * _mono(s, ex, unit[i]) for ex, c in terms) for i in range(n)], -1)
        out.append((dP - 2 * alp * s * P[..., None]) * e[..., None])
    if order >= 2:
        HP = np.empty(s.shape[:-1] + (n, n), dtype=np.result_type(s, float))
        for i in range(n):
            for j in range(n):
                HP[..., i, j] = sum(c * _mono(s, ex, unit[i] + unit[j]) for ex, c in terms)
        sdp = s[..., :, None] * dP[..., None, :]
        H = (
            HP
            - 2 * alp * (sdp + np.swapaxes(sdp, -1, -2))
            - 2 * alp * P[..., None, None] * np.eye(n)
            + 4 * alp**2 * P[..., None, None] * (s[..., :, None] * s[..., None, :])
        )
        out.append(H * e[..., None, None])
    return out


def _harmonic(p, s, order):
    E0, k = p.get("E0", 0.5), p.get("k", 1.0)
    out = [E0 + k * np.sum(s * s, axis=-1)]
    if order >= 1:
        out.append(2 * k * s)
    if order >= 2:
        n = s.shape[-1]
        out.append(np.broadcast_to(2 * k * np.eye(n), s.shape[:-1] + (n, n)).copy())
    return out


def _constant(p, s, order):
    n = s.shape[-1]
    v = p.get("value", 0.0) + 0.0 * s[..., 0]
    return [v, 0.0 * s, np.zeros(s.shape[:-1] + (n, n), dtype=s.dtype)][: order + 1]


_IMPL: dict[str, Callable] = {
    "gauss_well": _gauss_well,
    "gaussian_sum": _gaussian_sum,
    "poly_gauss": _poly_gauss,
    "harmonic": _harmonic,
    "constant": _constant,
    "free": lambda p, s, o: _constant({"value": 0.0}, s, o),
}


@dataclass(frozen=True)
class PotentialSpec:
    """A potential from a built-in analytic family.

    ``x0`` and ``E0`` are filled by :func:`find_well` (see ``with_well``).
    """

    family: str
    params: Mapping[str, Any] = field(default_factory=dict)
    dim: int = 1
    x0: tuple | None = None
    E0: float | None = None

    def __post_init__(self):
        if self.family not in _IMPL:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")

    def _eval(self, x, order):
        x = _pts(x, self.dim)
        s = x - _center(self.params, self.dim)
        return _IMPL[self.family](self.params, s, order)

    def V(self, x):
        return self._eval(x, 0)[0]

    def grad(self, x):
        return self._eval(x, 1)[1]

    def hess(self, x):
        return self._eval(x, 2)[2]

    def with_well(self) -> "PotentialSpec":
        x0, E0, _ = find_well(self)
        return PotentialSpec(self.family, dict(self.params), self.dim, tuple(x0), float(E0))

    @property
    def well(self) -> np.ndarray:
        if self.x0 is None:
            return find_well(self)[0]
        return np.asarray(self.x0, float)

    @property
    def well_energy(self) -> float:
        if self.E0 is None:
            return find_well(self)[1]
        return float(self.E0)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "dim": self.dim}


def gauss_well(E0=0.5, kappa=1.0, alpha=1.0, dim=1, center=None, tilt=0.0) -> PotentialSpec:
    p = {"E0": E0, "kappa": kappa, "alpha": alpha}
    if center is not None:
        p["center"] = list(center)
    if tilt:
        p["tilt"] = tilt
    return PotentialSpec("gauss_well", p, dim)


# ---------------------------------------------------------------------------


def find_well(spec: PotentialSpec, guess=None, tol: float = 1e-12, maxit: int = 100):
    """Newton iteration on grad V. Returns (x0, E0, hessian)."""
    n = spec.dim
    if guess is None:
        guess = _center(spec.params, n)
    x = np.asarray(guess, float).reshape(n).copy()
    for _ in range(maxit):
        g = spec.grad(x)
        if np.linalg.norm(g) <= tol:
            break
        H = spec.hess(x)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError as exc:
            raise NoWellFound("singular Hessian during Newton iteration") from exc
        lam = 1.0
        while lam > 1e-6:
            xn = x - lam * step
            if np.linalg.norm(spec.grad(xn)) < np.linalg.norm(g):
                break
            lam *= 0.5
        x = xn
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e6:
            raise NoWellFound("Newton iteration diverged")
    else:
        raise NoWellFound("Newton iteration did not converge")
    H = spec.hess(x)
    H = 0.5 * (H + H.T)
    if np.min(np.linalg.eigvalsh(H)) <= 0:
        raise NoWellFound("Hessian at critical point is not positive definite")
    E0 = float(spec.V(x))
    if E0 <= 0:
        raise NoWellFound("well energy is not positive")
    return x, E0, H


def harmonic_data(spec: PotentialSpec) -> float:
    """E1 = tr sqrt(Hess V(x0) / 2)."""
    _, _, H = find_well(spec, spec.x0)
    return float(np.sum(np.sqrt(np.linalg.eigvalsh(0.5 * H))))


def harmonic_matrix(spec: PotentialSpec) -> np.ndarray:
    """A = sqrt(Hess V(x0)/2): Hessian of the Agmon distance at the well."""
    _, _, H = find_well(spec, spec.x0)
    return np.real(sqrtm(0.5 * H))


# ---------------------------------------------------------------------------
# island boundary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IslandBoundary:
    points: np.ndarray  # (M, dim)
    normals: np.ndarray  # (M, dim) outward, V decreasing
    x0: np.ndarray
    normal_sign: float  # outward = normal_sign * grad V / |grad V|

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def radius(self) -> float:
        return float(np.max(np.linalg.norm(self.points - self.x0, axis=1)))

    def arclength(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(np.vstack([self.points, self.points[:1]]), axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])


def _ray_root(spec, x0, E0, u, rmax=50.0, step=0.01):
    f = lambda r: float(spec.V(x0 + r * u)) - E0
    r = step
    while r < rmax:
        if f(r) < 0:
            return brentq(f, r - step, r, xtol=1e-14, rtol=1e-15)
        r += step
    return None


def island_boundary(spec: PotentialSpec, vertices: int = 512) -> IslandBoundary:
    x0 = spec.well
    E0 = spec.well_energy
    if spec.dim == 1:
        roots = []
        for u in (-1.0, 1.0):
            r = _ray_root(spec, x0, E0, np.array([u]))
            if r is None:
                raise NoBoundary("V stays above E0 on one side of the well")
            roots.append(x0 + r * u)
        pts = np.array(roots).reshape(2, 1)
        g = spec.grad(pts)
        for gi in g:
            if np.linalg.norm(gi) < 1e-8:
                raise DegenerateBoundary("|grad V| vanishes on the boundary")
        normals = np.array([[-1.0], [1.0]])
        return IslandBoundary(pts, normals, x0, _normal_sign(spec, pts, normals, E0))
    return _island_2d(spec, x0, E0, vertices)


def _normal_sign(spec, pts, normals, E0):
    g = spec.grad(pts)
    sgn = np.sign(np.sum(g * normals, axis=1))
    vout = spec.V(pts + 1e-3 * normals)
    if np.any(vout >= E0):
        raise DegenerateBoundary("outward normal does not point to decreasing V")
    if not np.all(sgn == sgn[0]):
        raise DegenerateBoundary("inconsistent normal orientation")
    return float(sgn[0])


def _island_2d(spec, x0, E0, vertices):
    from matplotlib.path import Path
    from skimage.measure import find_contours

    ang = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    radii = []
    for a in ang:
        r = _ray_root(spec, x0, E0, np.array([np.cos(a), np.sin(a)]))
        if r is None:
            raise NoBoundary("no level set V=E0 along a ray from the well")
        radii.append(r)
    R = 1.3 * max(radii)
    m = 401
    ax = np.linspace(-R, R, m)
    X, Y = np.meshgrid(x0[0] + ax, x0[1] + ax, indexing="ij")
    F = spec.V(np.stack([X, Y], -1)) - E0
    best = None
    for c in find_contours(F, 0.0):
        if np.linalg.norm(c[0] - c[-1]) > 1e-6:
            continue
        xy = x0 + (-R + c * (ax[1] - ax[0]))
        if Path(xy).contains_point(x0):
            if best is None or len(xy) > len(best):
                best = xy
    if best is None:
        raise NoBoundary("no closed level set encloses the well")
    # uniform arclength resampling
    seg = np.linalg.norm(np.diff(best, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.linspace(0, s[-1], vertices, endpoint=False)
    pts = np.stack([np.interp(t, s, best[:, 0]), np.interp(t, s, best[:, 1])], 1)
    for _ in range(30):
        f = spec.V(pts) - E0
        g = spec.grad(pts)
        gn = np.sum(g * g, axis=1)
        if np.any(np.sqrt(gn) < 1e-8):
            raise DegenerateBoundary("|grad V| vanishes on the boundary")
        pts = pts - (f / gn)[:, None] * g
        if np.max(np.abs(f)) <= 1e-13:
            break
    g = spec.grad(pts)
    normals = -g / np.linalg.norm(g, axis=1)[:, None]
    # counter-clockwise orientation
    area = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    if area < 0:
        pts, normals = pts[::-1].copy(), normals[::-1].copy()
    return IslandBoundary(pts, normals, x0, _normal_sign(spec, pts, normals, E0))


# ---------------------------------------------------------------------------
# local frame at a boundary point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryFrame:
    """Orthonormal frame at x1: columns of ``R`` are tangents then outward normal."""

    x1: np.ndarray
    normal: np.ndarray
    tangent_basis: np.ndarray  # (n-1, n)
    C0: float
    E0: float
    spec: PotentialSpec = field(repr=False)

    @property
    def R(self) -> np.ndarray:
        return np.vstack([self.tangent_basis, self.normal]).T

    def to_frame(self, x) -> np.ndarray:
        x = _pts(x, len(self.x1))
        return (x - self.x1) @ self.R

    def from_frame(self, y) -> np.ndarray:
        y = _pts(y, len(self.x1))
        return self.x1 + y @ self.R.T

    def W_residual(self, y):
        """W(y) = V - E0 + C0 y_n in frame coordinates."""
        y = _pts(y, len(self.x1))
        return self.spec.V(self.from_frame(y)) - self.E0 + self.C0 * y[..., -1]


def boundary_frame(spec: PotentialSpec, x1, tol: float = 1e-8) -> BoundaryFrame:
    n = spec.dim
    x1 = np.asarray(x1, float).reshape(n)
    E0 = spec.well_energy
    if abs(float(spec.V(x1)) - E0) > tol:
        raise ValueError("x1 is not on the island boundary")
    g = spec.grad(x1)
    C0 = float(np.linalg.norm(g))
    if C0 < 1e-8:
        raise DegenerateBoundary("|grad V| vanishes at x1")
    normal = -g / C0
    if n == 1:
        tang = np.zeros((0, 1))
    else:
        tang = np.array([[-normal[1], normal[0]]])
    return BoundaryFrame(x1, normal, tang, C0, E0, spec)


# ---------------------------------------------------------------------------
# assumption report
# ---------------------------------------------------------------------------


@dataclass
class AssumptionBudget:
    samples: int = 64
    escape_radius: float = 10.0
    time: float = 200.0
    seed: int = 0
    decay_radii: Sequence[float] = (3.0, 4.0, 5.0, 6.0, 8.0)


@dataclass
class AssumptionReport:
    entries: dict

    @property
    def passed(self) -> bool:
        return all(e["pass"] for e in self.entries.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "assumptions": self.entries}


def _escapes(spec, x, xi, sign, R, T):
    from scipy.integrate import solve_ivp

    n = spec.dim

    def rhs(t, y):
        return np.concatenate([2 * y[n:], -spec.grad(y[:n])])

    def out(t, y):
        return np.linalg.norm(y[:n]) - R

    out.terminal = True
    sol = solve_ivp(rhs, (0, sign * T), np.concatenate([x, xi]), events=out, rtol=1e-8, atol=1e-10)
    return sol.status == 1


def validate_assumptions(spec: PotentialSpec, budget: AssumptionBudget | None = None) -> AssumptionReport:
    budget = budget or AssumptionBudget()
    rng = np.random.default_rng(budget.seed)
    n = spec.dim
    E: dict = {}
    # A2
    try:
        x0, E0, H = find_well(spec, spec.x0)
        E["A2"] = {"pass": True, "evidence": {"x0": x0.tolist(), "E0": E0,
                                              "hessian_eigs": np.linalg.eigvalsh(H).tolist()}}
    except NoWellFound as exc:
        E["A2"] = {"pass": False, "evidence": str(exc)}
        x0, E0 = np.zeros(n), None
    # A1: real-axis decay exponent
    rs = np.asarray(budget.decay_radii, float)
    dirs = rng.normal(size=(16, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    M = np.array([np.max(np.abs(spec.V(x0 + r * dirs))) for r in rs])
    if np.all(M < 1e-300):
        sigma = float("inf")
    else:
        ok = M > 1e-300
        sigma = -float(np.polyfit(np.log(rs[ok]), np.log(M[ok]), 1)[0]) if ok.sum() >= 2 else float("inf")
    E["A1"] = {"pass": bool(sigma > 0), "evidence": {"decay_exponent": sigma}}
    if E0 is None:
        E["A3"] = {"pass": False, "evidence": "no well"}
        E["A4"] = {"pass": False, "evidence": "no well"}
        return AssumptionReport(E)
    # A3: escape of sea trajectories on the energy shell
    spec_w = PotentialSpec(spec.family, dict(spec.params), n, tuple(x0), E0)
    try:
        bd = island_boundary(spec_w)
    except (NoBoundary, DegenerateBoundary) as exc:
        E["A3"] = {"pass": False, "evidence": str(exc)}
        E["A4"] = {"pass": False, "evidence": str(exc)}
        return AssumptionReport(E)
    rb = bd.radius
    fails = 0
    tried = 0
    for _ in range(budget.samples):
        for _k in range(50):
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            x = x0 + rng.uniform(1.01 * rb, 3.0 * rb) * u
            if spec.V(x) < E0:
                break
        v = rng.normal(size=n)
        xi = v / np.linalg.norm(v) * np.sqrt(E0 - float(spec.V(x)))
        tried += 1
        for sgn in (1.0, -1.0):
            if not _escapes(spec, x, xi, sgn, budget.escape_radius, budget.time):
                fails += 1
                break
    E["A3"] = {"pass": fails == 0, "evidence": {"samples": tried, "trapped": fails,
                                                "escape_radius": budget.escape_radius,
                                                "time": budget.time}}
    # A4: interaction set is a submanifold with contact order 2
    if n == 1:
        E["A4"] = {"pass": True, "evidence": {"n_gamma": 0, "gamma": bd.points.ravel().tolist()}}
    else:
        from .eikonal import AmbiguousGamma, agmon_fast_march, interaction_set

        try:
            fld = agmon_fast_march(spec_w, nodes=161)
            gs = interaction_set(fld, bd)
            E["A4"] = {"pass": True, "evidence": {"n_gamma": gs.n_gamma, "S": gs.S}}
        except AmbiguousGamma as exc:
            E["A4"] = {"pass": False, "evidence": str(exc)}
    return AssumptionReport(E)

"""Resonance width: Green's formula, the stationary-phase prefactor and the h-ladder fit.

For a resonant state u, Green's formula on a region W containing the island gives

    Im rho = -(h^2 / ||u||_W^2) Im sum_{dW} (du/dn) conj(u),

and the asymptotic law reads Im rho = -h^{(1 - n_Gamma)/2} f(h) e^{-2S/h}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadLadder, DegenerateTransverseHessian, SurfaceTooClose

# one-sided fourth-order first derivative, nodes i, i-1, ..., i-4
_ONE_SIDED = np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / 12.0


def _deriv_inward(u, i, dx, direction):
    """du/dx at node i using nodes on the side ``direction`` (-1: left, +1: right)."""
    idx = i + direction * np.arange(5)
    return -direction * np.dot(_ONE_SIDED, u[idx]) / dx


def green_width(x, u, h: float, W: tuple, sides=("left", "right"), boundary: tuple | None = None,
                min_cells: float = 3.0) -> float:
    """Im rho from the flux through the surface points of W = [a, b] (1D or radial v).

    Surface points snap to the nearest grid nodes.  ``boundary`` is the island
    interval; surfaces closer than ``min_cells`` grid cells raise SurfaceTooClose.
    """
    x = np.asarray(x, float)
    u = np.asarray(u, complex)
    dx = x[1] - x[0]
    a, b = W
    ia = int(np.argmin(np.abs(x - a)))
    ib = int(np.argmin(np.abs(x - b)))
    if boundary is not None:
        lo, hi = boundary
        if ("left" in sides and abs(x[ia] - lo) < min_cells * dx) or \
                ("right" in sides and abs(x[ib] - hi) < min_cells * dx):
            raise SurfaceTooClose("surface within three grid cells of the island boundary")
    flux = 0.0
    if "right" in sides:
        flux += _deriv_inward(u, ib, dx, -1) * np.conj(u[ib])
    if "left" in sides:
        flux += -_deriv_inward(u, ia, dx, +1) * np.conj(u[ia])
    seg = np.abs(u[ia:ib + 1]) ** 2
    norm = float(np.trapezoid(seg, dx=dx))
    return float(-h * h * np.imag(flux) / norm)


def green_width_resonance(res, offset: float, r_b: float, x0: float = 0.0) -> float:
    """green_width on W = {|x - x0| <= offset r_b}, both sides (1D) or the outer radius (radial)."""
    R = offset * r_b
    if R >= res.x.max() or R >= res.grid["R0"]:
        raise SurfaceTooClose("surface lies in the scaled region")
    if res.grid.get("radial"):
        return green_width(res.x, res.u, res.h, (res.x[0], R), sides=("right",),
                           boundary=(-np.inf, r_b))
    return green_width(res.x, res.u, res.h, (x0 - R, x0 + R), boundary=(x0 - r_b, x0 + r_b))


# ---------------------------------------------------------------------------
# prefactor
# ---------------------------------------------------------------------------


def beta0_density(chart, c0, s: float = 1e-3, xp: float = 0.0) -> dict:
    """beta'_0 at x_n + b = s from the complex phase, and its closed boundary form."""
    from .caustic import beta0_prime, critical_points

    xn = s - chart.b_fn(xp)
    x = np.array([xp, xn]) if chart.dim == 2 else np.array([xn])
    cp = critical_points(chart, x)
    xi = cp.roots[0]
    r = 0.5 * chart.dP(xi, xp)
    a0sq = np.pi * abs(c0(xi, xp)) ** 2 / abs(r)
    direct = float(-np.imag(xi) * a0sq)
    closed = beta0_prime(chart, c0, xp)
    if not (direct > 0 and closed > 0):
        raise DegenerateTransverseHessian("non-positive flux density")
    return {"direct": direct, "closed": closed, "rel_diff": abs(direct - closed) / closed, "s": s}


def fold_flux(C0: float, h: float, x):
    """-h^2 Im(w' conj w) for w = h^{-1/4} I[1] of the fold normal form at x_n = x."""
    from scipy.special import airy

    w = np.exp(2j * np.pi / 3)
    a = (C0 * h) ** (1.0 / 3.0)
    z = -w * a * np.asarray(x, float) / h
    ai, aip, _, _ = airy(z)
    pre = -2j * np.pi * w * a * h**-0.5 * h**-0.25
    u = pre * ai
    du = pre * aip * (-w * a / h)
    return -h * h * np.imag(du * np.conj(u))


def calibrate_fold_constant(C0: float = 1.0, h: float = 0.02, xs=(0.5, 1.0, 2.0)) -> dict:
    """Universal constant K = Airy flux / (h^{1/2} pi C0 c0^2) with c0 = 1."""
    F = fold_flux(C0, h, xs)
    K = -F / (np.sqrt(h) * np.pi * C0)  # outgoing flux is negative
    return {"K": float(np.mean(K)), "spread": float(np.ptp(K)), "C0": C0, "h": h}


def stationary_phase_f0(densities, n: int = 1, n_gamma: int = 0, hessians=None, lengths=None,
                        K: float = 1.0) -> float:
    """f0_pred from beta'_0 on the Gamma components.

    1D: sum of beta'_0.  2D isolated points: beta'_0 sqrt(pi/H) with
    phi|_C ~ H y^2/2.  2D closed curve (n_Gamma = 1): beta'_0 times its length.
    """
    dens = np.atleast_1d(np.asarray(densities, float))
    if n == 1:
        return float(K * dens.sum())
    if n_gamma == 1:
        if lengths is None:
            raise ValueError("curve lengths required for n_Gamma = 1")
        return float(K * np.sum(dens * np.atleast_1d(lengths)))
    H = np.atleast_1d(np.asarray(hessians, float))
    if np.any(H <= 0):
        raise DegenerateTransverseHessian("transverse Hessian of phi on C is not positive")
    return float(K * np.sum(dens * np.sqrt(np.pi / H)))


def predict_f0_1d(spec, wkb, K: float = 1.0, **chart_kw) -> dict:
    """Charts at both exits of a 1D island and the resulting f0_pred."""
    from .caustic import beta0_prime, fit_chart, match_symbol_c
    from .potential import island_boundary

    pts = island_boundary(spec).points
    dens = []
    for p in pts:
        ch = fit_chart(spec, p, **chart_kw)
        c0 = match_symbol_c(ch, wkb)
        dens.append(beta0_prime(ch, c0))
    return {"points": pts[:, 0].tolist(), "beta0": dens, "f0_pred": stationary_phase_f0(dens, K=K)}


# ---------------------------------------------------------------------------
# ladder regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitRecord:
    S_fit: float
    p_fit: float
    f0_fit: float
    residuals: np.ndarray
    loo: dict
    n: int

    def to_dict(self) -> dict:
        return {"S_fit": self.S_fit, "p_fit": self.p_fit, "f0_fit": self.f0_fit,
                "residuals": self.residuals.tolist(), "loo": self.loo, "n": self.n}


def _solve(h, y):
    X = np.stack([1 / h, np.log(h), np.ones_like(h)], 1)
    c, *_ = np.linalg.lstsq(X, y, rcond=None)
    return c, y - X @ c


def asymptotic_fit(hs, im_rho, min_points: int = 4) -> FitRecord:
    """ln(-Im rho) = a/h + p ln h + c  ->  S_fit = -a/2, p_fit = p, f0_fit = e^c."""
    h = np.asarray(hs, float)
    im = np.asarray(im_rho, float)
    if len(h) < min_points:
        raise BadLadder(f"ladder has {len(h)} points, need {min_points}")
    if np.any(im >= 0):
        raise BadLadder("Im rho must be negative on the whole ladder")
    y = np.log(-im)
    c, res = _solve(h, y)
    S_l, p_l = [], []
    for k in range(len(h)):
        m = np.arange(len(h)) != k
        ck, _ = _solve(h[m], y[m])
        S_l.append(-ck[0] / 2)
        p_l.append(ck[1])
    loo = {"S_range": [float(min(S_l)), float(max(S_l))], "p_range": [float(min(p_l)), float(max(p_l))]}
    return FitRecord(float(-c[0] / 2), float(c[1]), float(np.exp(c[2])), res, loo, len(h))


@dataclass
class WidthReport:
    records: list
    S_used: float
    n_gamma: int
    f0_pred: float | None = None
    fit: FitRecord | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"records": self.records, "S_used": self.S_used, "n_gamma": self.n_gamma,
                "f0_pred": self.f0_pred, "fit": self.fit.to_dict() if self.fit else None,
                "meta": self.meta}


def ladder_point(spec, h: float, S: float, r_b: float, theta: float = 0.3, R0: float = 4.0,
                 box: float = 12.0, nodes: int = 8000, eta_frac: float = 0.05,
                 offsets=(1.10, 1.15, 1.20), radial: bool = False) -> dict:
    from .resonance import complex_scaled_operator, dirichlet_ground, resonance_near

    op = complex_scaled_operator(spec, h, theta, R0, box, nodes, radial=radial)
    if radial:
        res = resonance_near(op, _radial_dirichlet(spec, h, op, S, eta_frac), S=S)
    else:
        D = dirichlet_ground(spec, h, eta=eta_frac * S, S=S, dx=op.spacing)
        res = resonance_near(op, D, S=S)
    greens = [green_width_resonance(res, o, r_b, 0.0) for o in offsets]
    return {"h": h, "re_rho": res.rho.real, "im_rho_eig": res.rho.imag,
            "im_rho_green": greens[0], "green_offsets": list(offsets), "im_rho_green_all": greens,
            "lambda_D": res.lambda_D, "residual": res.residual}


def _radial_dirichlet(spec, h, op, S, eta_frac):
    """Lowest eigenvalue of the real radial problem on r < R_eta (sets the shift)."""
    from scipy.linalg import eigh_tridiagonal
    from scipy.optimize import brentq
    from scipy.integrate import quad

    x0 = spec.well
    E0 = spec.well_energy
    p = lambda r: np.sqrt(max(float(spec.V(np.array([[r, 0.0]]))[0]) - E0, 0.0))
    rb = brentq(lambda r: float(spec.V(np.array([[r, 0.0]]))[0]) - E0, 1e-6, 50.0)
    target = S - eta_frac * S
    Ra = brentq(lambda R: quad(p, 0, R, epsabs=1e-13)[0] - target, 1e-6, rb)
    r = op.x[op.x < Ra]
    dx = op.spacing
    faces = np.concatenate([r - dx / 2, [r[-1] + dx / 2]])
    V = np.ravel(spec.V(np.stack([r, 0 * r], 1)))
    diag = h * h * (faces[:-1] + faces[1:]) / (r * dx * dx) + V
    off = -h * h * faces[1:-1] / (dx * dx * np.sqrt(r[:-1] * r[1:]))
    w, _ = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    return float(w[0])


def run_ladder(spec, hs, S: float, r_b: float, n_gamma: int = 0, f0_pred: float | None = None,
               radial: bool = False, workers: int = 1, **kw) -> WidthReport:
    hs = sorted(hs, reverse=True)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            recs = list(ex.map(lambda h: ladder_point(spec, h, S, r_b, radial=radial, **kw), hs))
    else:
        recs = [ladder_point(spec, h, S, r_b, radial=radial, **kw) for h in hs]
    fit = None
    if len(recs) >= 4:
        fit = asymptotic_fit([r["h"] for r in recs], [r["im_rho_eig"] for r in recs])
    return WidthReport(recs, S, n_gamma, f0_pred, fit)

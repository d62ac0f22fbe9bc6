"""The acceptance suite: ten numbered checks, each returning {name, measured, tolerance, pass}.

Stages that several checks share (the island, the WKB state, the boundary
chart, the resonance ladder) are computed once per :class:`Context`.
"""

from __future__ import annotations

import os
from functools import cached_property

import numpy as np

from .config import RunConfig
from .errors import ResoniaError

NAMES = {
    1: "eikonal residual and action",
    2: "Dirichlet asymptotics",
    3: "WKB quasimode",
    4: "Airy oracle",
    5: "caustic-crossing laws",
    6: "resonance ground truth",
    7: "Green's formula route",
    8: "width law at desk scale",
    9: "Agmon identity",
    10: "radial reduction (flagged)",
}

INSUFFICIENT = "insufficient ladder"


def thread_budget(default: int = 1) -> int:
    v = os.environ.get("RESONIA_THREADS")
    if not v:
        return default
    try:
        return max(1, int(v))
    except ValueError:
        return default


def _entry(k, measured, tolerance, ok, **extra):
    return {"id": k, "name": NAMES[k], "measured": measured, "tolerance": tolerance, "pass": bool(ok),
            **extra}


class Context:
    def __init__(self, cfg: RunConfig, workers: int | None = None):
        self.cfg = cfg
        self.tol = cfg.tolerances
        self.workers = thread_budget() if workers is None else workers

    # shared stages ---------------------------------------------------------

    @cached_property
    def spec(self):
        return self.cfg.potential()

    @cached_property
    def boundary(self):
        from .potential import island_boundary

        return island_boundary(self.spec)

    @cached_property
    def S(self) -> float:
        from .resonance import well_action

        return well_action(self.spec)

    @cached_property
    def field(self):
        from .eikonal import agmon_fast_march

        return agmon_fast_march(self.spec, nodes=self.cfg.grid.agmon_nodes)

    @cached_property
    def wkb(self):
        from .wkb import extend_to_Omega

        return extend_to_Omega(self.spec, self.field)

    @cached_property
    def chart(self):
        from .caustic import fit_chart, match_symbol_c

        x1 = self.boundary.points[int(np.argmax(self.boundary.points[:, 0]))]
        ch = fit_chart(self.spec, x1)
        return ch, match_symbol_c(ch, self.wkb)

    @cached_property
    def fold_K(self) -> float:
        from .width import calibrate_fold_constant

        return calibrate_fold_constant()["K"]

    @cached_property
    def ladder(self):
        from .width import run_ladder

        c = self.cfg
        return run_ladder(self.spec, c.ladder, self.S, self.boundary.radius, n_gamma=0,
                          workers=self.workers, theta=c.theta, R0=c.R0, box=c.grid.box,
                          nodes=c.grid.nodes, eta_frac=c.eta_resonance_frac, offsets=tuple(c.offsets))

    @cached_property
    def radial_ladder(self):
        from .potential import PotentialSpec
        from .width import run_ladder

        c = self.cfg
        spec2 = PotentialSpec(c.family, dict(c.params), 2).with_well()
        return run_ladder(spec2, c.ladder, self.S, self.boundary.radius, n_gamma=1, radial=True,
                          workers=self.workers, theta=c.theta, R0=c.R0, box=c.grid.box,
                          nodes=c.radial.nodes, eta_frac=c.eta_resonance_frac,
                          offsets=tuple(c.offsets))


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1(ctx: Context) -> dict:
    from .eikonal import eikonal_residual, geodesic_shoot

    fld, spec, bd = ctx.field, ctx.spec, ctx.boundary
    res = eikonal_residual(fld, spec, bd)
    P = fld.points()
    gmax = float(np.max(np.linalg.norm(spec.grad(P.reshape(-1, spec.dim)), axis=-1)))
    bound = ctx.tol["eikonal_factor"] * fld.spacing * gmax
    x1 = bd.points[int(np.argmax(fld.interpolate(bd.points)))]
    S_fm = float(fld.interpolate(x1[None])[0])
    S_geo = float(geodesic_shoot(spec, x1).action[-1])
    rel = abs(S_fm / S_geo - 1)
    ok = res <= bound and rel <= ctx.tol["action_rel"]
    return _entry(1, {"median_residual": res, "action_rel": rel, "S_fast_march": S_fm, "S_geodesic": S_geo},
                  {"median_residual": bound, "action_rel": ctx.tol["action_rel"]}, ok)


def criterion_2(ctx: Context) -> dict:
    from .potential import PotentialSpec, harmonic_data
    from .resonance import dirichlet_ground

    hs = np.asarray(ctx.cfg.ladder, float)
    E1 = harmonic_data(ctx.spec)
    harm = PotentialSpec("harmonic", {"E0": 0.5, "k": 1.0}, 1).with_well()
    dev = abs(dirichlet_ground(harm, 0.05, interval=(-4.0, 4.0)).lam - 0.5 - 0.05)
    tol = {"E1_rel": ctx.tol["E1_rel"], "harmonic_abs": ctx.tol["harmonic_abs"]}
    if len(hs) < 3:
        return _entry(2, {"harmonic_abs": dev}, tol, False, note=INSUFFICIENT)
    lam = np.array([dirichlet_ground(ctx.spec, h, eta_frac=ctx.cfg.eta_frac, S=ctx.S).lam for h in hs])
    X = np.stack([np.ones_like(hs), hs, hs * hs], 1)
    c, *_ = np.linalg.lstsq(X, lam, rcond=None)
    rel = abs(c[1] / E1 - 1)
    ok = rel <= tol["E1_rel"] and dev <= tol["harmonic_abs"]
    return _entry(2, {"E1_fit": float(c[1]), "E1": E1, "E0_fit": float(c[0]), "E1_rel": rel,
                      "harmonic_abs": dev, "lambda_D": lam.tolist()}, tol, ok)


def criterion_3(ctx: Context) -> dict:
    from .resonance import dirichlet_ground
    from .wkb import quasimode_residual_1d

    h = float(ctx.cfg.ladder[0])
    D = dirichlet_ground(ctx.spec, h, eta_frac=ctx.cfg.eta_frac, S=ctx.S)
    r1 = quasimode_residual_1d(ctx.wkb, ctx.spec, h, D.interval)
    r2 = quasimode_residual_1d(ctx.wkb, ctx.spec, h / 2, D.interval)
    ratio = r1 / r2
    w = ctx.wkb.w(D.x, h)
    ov = float(np.sum(w * D.u) / np.sqrt(np.sum(w * w) * np.sum(D.u**2)))
    lo, hi = ctx.tol["qm_ratio_lo"], ctx.tol["qm_ratio_hi"]
    ok = lo <= ratio <= hi and ov >= ctx.tol["overlap"]
    return _entry(3, {"halving_ratio": ratio, "residuals": [r1, r2], "overlap": ov, "h": h},
                  {"halving_ratio": [lo, hi], "overlap": ctx.tol["overlap"]}, ok)


def criterion_4(ctx: Context) -> dict:
    from .caustic import (airy_eval, constant_c0, entire_extension, fold_airy_closed_form, fold_chart,
                          steepest_expand)

    h = ctx.cfg.h_caustic
    ch, c0 = ctx.chart
    C0 = float(ch.frame.C0)
    fc, one = fold_chart(C0), constant_c0()
    fold = []
    for s in (-0.1, -0.05, 0.05, 0.1, 0.2):
        I = fold_airy_closed_form(C0, s, h)
        fold.append(abs(airy_eval(fc, one, [s], h).value / I - 1))
    g, c = entire_extension(ch, c0)
    lo, hi = ctx.cfg.band
    band = np.linspace(lo, hi, 3) * ch.fit_radius
    steep = []
    for s in band:
        x = [s - g.b_fn()]
        a = airy_eval(g, c, x, h).value
        steep.append(abs(steepest_expand(g, c, x, h, L=2).value / a - 1))
    ok = max(fold) <= ctx.tol["fold_rel"] and max(steep) <= ctx.tol["steepest_rel"]
    return _entry(4, {"fold_rel": max(fold), "steepest_rel": max(steep), "band_s": band.tolist(),
                      "steepest_each": steep, "h": h},
                  {"fold_rel": ctx.tol["fold_rel"], "steepest_rel": ctx.tol["steepest_rel"]}, ok)


def criterion_5(ctx: Context) -> dict:
    from .caustic import nu_tilde_series, phase_phi_tilde

    ch, _ = ctx.chart
    nu1 = float(np.real(ch.nu1_taylor(1)[0]))
    s_hi = min(0.5 * ch.s_range[1], 0.1)
    ss = np.geomspace(1e-4, s_hi, 12)
    re_phi = [float(phase_phi_tilde(ch, [s - ch.b_fn()]).phi_tilde.real) for s in ss]
    s0 = 1e-3
    p = phase_phi_tilde(ch, [s0 - ch.b_fn()])
    coef = -float(p.grad_n.imag) / np.sqrt(s0)
    target = 1.0 / np.sqrt(nu1)
    imrel = abs(coef / target - 1)
    nt0 = float(np.real(nu_tilde_series(ch)[0]))
    nu_dev = abs(nt0 - 2.0 / (3.0 * np.sqrt(nu1)))
    tol = {"re_phi_floor": -ctx.tol["re_phi_floor"], "imphi_rel": ctx.tol["imphi_rel"],
           "nu_tilde_abs": ctx.tol["nu_tilde_abs"]}
    ok = min(re_phi) >= -ctx.tol["re_phi_floor"] and imrel <= tol["imphi_rel"] and nu_dev <= tol["nu_tilde_abs"]
    return _entry(5, {"min_re_phi": min(re_phi), "imphi_coef": coef, "imphi_target": target,
                      "imphi_rel": imrel, "nu_tilde0": nt0, "nu_tilde_abs": nu_dev}, tol, ok)


def _pick_h(ladder, target=0.035):
    return float(min(ladder, key=lambda h: abs(h - target)))


def criterion_6(ctx: Context) -> dict:
    from .resonance import complex_scaled_operator, dirichlet_ground, resonance_near

    c, spec, S = ctx.cfg, ctx.spec, ctx.S
    h = _pick_h(c.ladder)
    kw = dict(R0=c.R0, box=c.grid.box)
    op = complex_scaled_operator(spec, h, c.theta, nodes=c.grid.nodes, **kw)
    D = dirichlet_ground(spec, h, eta=c.eta_resonance_frac * S, S=S, dx=op.spacing)
    r = resonance_near(op, D, S=S)
    r_alt = resonance_near(complex_scaled_operator(spec, h, c.theta_alt, nodes=c.grid.nodes, **kw), D, S=S,
                           audit=False)
    r_half = resonance_near(complex_scaled_operator(spec, h, c.theta, nodes=c.grid.nodes // 2, **kw),
                            D.lam, S=S, audit=False)
    im = r.rho.imag
    theta_dev = abs(r.rho - r_alt.rho) / abs(im)
    grid_dev = abs(r_half.rho.imag / im - 1)
    ratio = abs(r.rho.real - D.lam) / abs(im)
    tol = {"theta_rel": ctx.tol["theta_rel"], "grid_rel": ctx.tol["grid_rel"],
           "shift_ratio": ctx.tol["shift_ratio"], "im_rho": "< 0"}
    ok = (theta_dev <= tol["theta_rel"] and grid_dev <= tol["grid_rel"] and im < 0
          and ratio <= tol["shift_ratio"])
    return _entry(6, {"h": h, "rho": r.rho, "lambda_D": D.lam, "theta_rel": theta_dev, "grid_rel": grid_dev,
                      "shift_ratio": ratio, "im_rho": im, "nearest_other": r.audit.get("nearest_other")},
                  tol, ok)


def criterion_7(ctx: Context) -> dict:
    recs = ctx.ladder.records
    green = [abs(r["im_rho_green"] / r["im_rho_eig"] - 1) for r in recs]
    spread = [float(np.ptp(r["im_rho_green_all"]) / abs(np.mean(r["im_rho_green_all"]))) for r in recs]
    ok = max(green) <= ctx.tol["green_rel"] and max(spread) <= ctx.tol["offset_rel"]
    return _entry(7, {"green_rel": max(green), "offset_rel": max(spread), "green_each": green,
                      "offset_each": spread},
                  {"green_rel": ctx.tol["green_rel"], "offset_rel": ctx.tol["offset_rel"]}, ok)


def _fixed_S_diagnostic(hs, im, S):
    """ln(-Im rho) + 2S/h = p ln h + c + f1 h, with the action held at S."""
    h = np.asarray(hs, float)
    y = np.log(-np.asarray(im, float)) + 2 * S / h
    X = np.stack([np.log(h), np.ones_like(h), h], 1)
    c, *_ = np.linalg.lstsq(X, y, rcond=None)
    return {"p": float(c[0]), "f0": float(np.exp(c[1])), "f1": float(c[2])}


def criterion_8(ctx: Context) -> dict:
    from .width import predict_f0_1d

    tol = {"S_rel": ctx.tol["S_rel"], "p": [0.5 - ctx.tol["p_abs"], 0.5 + ctx.tol["p_abs"]],
           "f0_rel": ctx.tol["f0_rel"]}
    if len(ctx.cfg.ladder) < 4:
        return _entry(8, None, tol, False, note=INSUFFICIENT)
    fit = ctx.ladder.fit
    f0_pred = predict_f0_1d(ctx.spec, ctx.wkb, K=ctx.fold_K)["f0_pred"]
    S_rel = abs(fit.S_fit / ctx.S - 1)
    f0_rel = abs(fit.f0_fit / f0_pred - 1)
    ok = (S_rel <= tol["S_rel"] and abs(fit.p_fit - 0.5) <= ctx.tol["p_abs"] and fit.f0_fit > 0
          and f0_rel <= tol["f0_rel"])
    recs = ctx.ladder.records
    diag = _fixed_S_diagnostic([r["h"] for r in recs], [r["im_rho_eig"] for r in recs], ctx.S)
    return _entry(8, {"S_fit": fit.S_fit, "S": ctx.S, "S_rel": S_rel, "p_fit": fit.p_fit, "f0_fit": fit.f0_fit,
                      "f0_pred": f0_pred, "f0_rel": f0_rel, "fold_K": ctx.fold_K, "loo": fit.loo,
                      "fixed_S_diagnostic": diag}, tol, ok)


def criterion_9(ctx: Context) -> dict:
    from scipy.interpolate import CubicSpline

    from .eikonal import agmon_distance_1d
    from .resonance import agmon_identity_check, dirichlet_ground

    spec, h = ctx.spec, float(ctx.cfg.ladder[0])
    D = dirichlet_ground(spec, h, eta_frac=ctx.cfg.eta_frac, S=ctx.S)
    lo, hi = D.interval
    xd = np.linspace(lo, hi, 801)
    dsp = CubicSpline(xd, agmon_distance_1d(spec, xd))
    usp = CubicSpline(np.concatenate([[lo], D.x, [hi]]), np.concatenate([[0.0], D.u, [0.0]]))
    zero_res, naive = [], []
    for n in (1000, 2000, 4000):
        x = np.linspace(lo, hi, n + 1)
        f = usp(x)
        f[0] = f[-1] = 0.0
        zero_res.append(agmon_identity_check(spec, h, x, f, np.zeros_like(x), D.lam).residual)
        naive.append(agmon_identity_check(spec, h, x, f, dsp(x), D.lam).naive_residual)
    orders = np.log2(np.array(naive[:-1]) / np.array(naive[1:]))
    lo_o, hi_o = ctx.tol["agmon_order_lo"], ctx.tol["agmon_order_hi"]
    ok = max(zero_res) <= ctx.tol["agmon_abs"] and np.all((orders >= lo_o) & (orders <= hi_o))
    return _entry(9, {"zero_phase_residual": max(zero_res), "orders": orders.tolist(), "naive": naive},
                  {"zero_phase_residual": ctx.tol["agmon_abs"], "order": [lo_o, hi_o]}, ok)


def criterion_10(ctx: Context) -> dict:
    tol = {"p": [-ctx.tol["radial_p_abs"], ctx.tol["radial_p_abs"]]}
    required = bool(ctx.cfg.radial.enabled)
    if len(ctx.cfg.ladder) < 4:
        return _entry(10, None, tol, False, note=INSUFFICIENT, required=required)
    rep = ctx.radial_ladder
    fit = rep.fit
    recs = rep.records
    diag = _fixed_S_diagnostic([r["h"] for r in recs], [r["im_rho_eig"] for r in recs], ctx.S)
    ok = abs(fit.p_fit) <= ctx.tol["radial_p_abs"]
    return _entry(10, {"p_fit": fit.p_fit, "S_fit": fit.S_fit, "f0_fit": fit.f0_fit,
                       "im_rho": [r["im_rho_eig"] for r in recs], "fixed_S_diagnostic": diag},
                  tol, ok, required=required)


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


def run_criterion(ctx: Context, k: int) -> dict:
    try:
        out = CRITERIA[k](ctx)
    except ResoniaError as exc:
        out = _entry(k, None, None, False, error=f"{type(exc).__name__}: {exc}", exit_code=exc.exit_code)
    out.setdefault("required", True)
    return out


def run_all(cfg: RunConfig, which=None, workers: int | None = None) -> list:
    ctx = Context(cfg, workers)
    return [run_criterion(ctx, k) for k in (which or range(1, 11))]


def exit_code(entries) -> int:
    req = [e for e in entries if e.get("required", True)]
    if any("error" in e and e.get("exit_code") == 3 for e in req):
        return 3
    return 0 if all(e["pass"] for e in req) else 1


def summary_line(e: dict) -> str:
    tag = "PASS" if e["pass"] else "FAIL"
    flag = "" if e.get("required", True) else " [flagged, not required]"
    extra = f" ({e['note']})" if "note" in e else (f" ({e['error']})" if "error" in e else "")
    return f"{tag} criterion {e['id']}: {e['name']}{flag}{extra}"

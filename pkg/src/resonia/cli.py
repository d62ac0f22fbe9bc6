"""Command-line entry point: ``resonia <subcommand> --config FILE ...``.

Exit codes: 0 pass, 1 criteria failure, 2 configuration error, 3 numerical failure.
``RESONIA_THREADS`` caps the number of worker threads.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import exit_code, run_all, summary_line, thread_budget
from .config import config_hash, parse_config
from .errors import ConfigError, ResoniaError
from .io import write_csv, write_json

log = logging.getLogger("resonia")


def _out(args, cfg, default: str) -> Path:
    return Path(args.out) if args.out else Path(cfg.output_dir) / default


def _axes(points, dim):
    names = ["x", "y"][:dim]
    return {n: points[:, i] for i, n in enumerate(names)}


def cmd_validate(args, cfg, h):
    from .potential import AssumptionBudget, validate_assumptions

    rep = validate_assumptions(cfg.potential(), AssumptionBudget(seed=cfg.seed))
    write_json(_out(args, cfg, "validate.json"), rep.to_dict(), h)
    return 0 if rep.passed else 1


def cmd_agmon(args, cfg, h):
    from .eikonal import agmon_fast_march

    spec = cfg.potential()
    fld = agmon_fast_march(spec, nodes=args.grid or cfg.grid.agmon_nodes)
    P = fld.points().reshape(-1, spec.dim)
    cols = _axes(P, spec.dim)
    cols["d"] = np.where(fld.mask.ravel(), fld.values.ravel(), np.nan)
    cols["V"] = np.ravel(spec.V(P))
    cols["mask"] = fld.mask.ravel().astype(int)
    write_csv(_out(args, cfg, "field.csv"), cols, h)
    return 0


def cmd_gamma(args, cfg, h):
    from .eikonal import agmon_fast_march, interaction_set
    from .potential import island_boundary

    spec = cfg.potential()
    fld = agmon_fast_march(spec, nodes=cfg.grid.agmon_nodes)
    gs = interaction_set(fld, island_boundary(spec))
    write_json(_out(args, cfg, "gamma.json"), gs.to_dict(), h)
    return 0


def cmd_wkb(args, cfg, h):
    from .eikonal import agmon_fast_march
    from .wkb import extend_to_Omega

    spec = cfg.potential()
    st = extend_to_Omega(spec, agmon_fast_march(spec, nodes=cfg.grid.agmon_nodes))
    P = st.phase.points().reshape(-1, spec.dim)
    m = st.domain_mask.ravel()
    cols = _axes(P, spec.dim)
    cols["d"] = np.where(m, st.phase.values.ravel(), np.nan)
    cols["a0"] = np.where(m, st.amplitude0.values.ravel(), np.nan)
    cols["mask"] = m.astype(int)
    write_csv(_out(args, cfg, "wkb.csv"), cols, h)
    return 0


def cmd_caustic(args, cfg, h):
    from .caustic import fit_chart, match_symbol_c, phase_phi_tilde, steepest_expand
    from .eikonal import agmon_fast_march
    from .errors import NumericalError
    from .potential import island_boundary
    from .resonance import well_action
    from .wkb import extend_to_Omega

    spec = cfg.potential()
    bd = island_boundary(spec)
    if not 0 <= args.x1_index < len(bd.points):
        raise ConfigError(f"--x1-index must lie in [0, {len(bd.points) - 1}]")
    ch = fit_chart(spec, bd.points[args.x1_index])
    c0 = match_symbol_c(ch, extend_to_Omega(spec, agmon_fast_march(spec, nodes=cfg.grid.agmon_nodes)))
    S = well_action(spec) if spec.dim == 1 else 0.0
    lo, hi = ch.s_range
    rows = {k: [] for k in ("xn_plus_b", "re_phi", "im_phi", "re_w", "im_w", "a0_tilde_abs")}
    for s in np.linspace(0.8 * lo, 0.8 * hi, 41):
        if abs(s) < 1e-4:
            continue
        x = [s - ch.b_fn()] if ch.dim == 1 else [0.0, s - ch.b_fn()]
        try:
            ph = phase_phi_tilde(ch, x)
            r = steepest_expand(ch, c0, x, args.h, L=1)
        except NumericalError as exc:
            log.warning("skipping x_n + b = %.4g: %s", s, exc)
            continue
        w = args.h ** (-spec.dim / 4) * np.exp(-(S + r.phi_tilde) / args.h) * np.sum(
            r.a_tilde * args.h ** np.arange(len(r.a_tilde)))
        for k, v in zip(rows, (s, ph.phi_tilde.real, ph.phi_tilde.imag, w.real, w.imag, abs(r.a_tilde[0]))):
            rows[k].append(v)
    write_csv(_out(args, cfg, "strip.csv"), rows, h)
    return 0


def cmd_resonance(args, cfg, h):
    from .resonance import complex_scaled_operator, dirichlet_ground, resonance_near, well_action

    spec = cfg.potential()
    if spec.dim != 1:
        raise ConfigError("the resonance subcommand works on 1D potentials; use width with radial.enabled")
    S = well_action(spec)
    op = complex_scaled_operator(spec, args.h, args.theta if args.theta is not None else cfg.theta,
                                 args.R0 if args.R0 is not None else cfg.R0,
                                 args.box if args.box is not None else cfg.grid.box,
                                 args.nodes or cfg.grid.nodes)
    D = dirichlet_ground(spec, args.h, eta=cfg.eta_resonance_frac * S, S=S, dx=op.spacing)
    res = resonance_near(op, D, S=S)
    write_json(_out(args, cfg, "res.json"), res.to_dict(), h)
    return 0


def cmd_width(args, cfg, h):
    from .acceptance import Context
    from .width import predict_f0_1d, run_ladder

    ladder = [float(v) for v in args.h_ladder.split(",")] if args.h_ladder else list(cfg.ladder)
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("--h-ladder must be strictly decreasing")
    cfg.ladder = ladder
    ctx = Context(cfg, thread_budget())
    if cfg.radial.enabled:
        rep = ctx.radial_ladder
    else:
        rep = run_ladder(ctx.spec, ladder, ctx.S, ctx.boundary.radius, n_gamma=0, workers=ctx.workers,
                         theta=cfg.theta, R0=cfg.R0, box=cfg.grid.box, nodes=cfg.grid.nodes,
                         eta_frac=cfg.eta_resonance_frac, offsets=tuple(cfg.offsets))
        rep.f0_pred = predict_f0_1d(ctx.spec, ctx.wkb, K=ctx.fold_K)["f0_pred"]
    out = rep.to_dict()
    if rep.fit is None:
        out["note"] = "insufficient ladder"
    write_json(_out(args, cfg, "width.json"), out, h)
    return 0 if rep.fit is not None else 1


def cmd_verify(args, cfg, h):
    from .acceptance import Context, run_criterion

    outdir = Path(args.out_dir or cfg.output_dir)
    ctx = Context(cfg, thread_budget())
    entries = []
    for k in range(1, 11):
        e = run_criterion(ctx, k)
        print(summary_line(e), flush=True)
        entries.append(e)
    code = exit_code(entries)
    write_json(outdir / "report.json", {"criteria": entries, "exit_code": code}, h)
    if "ladder" in ctx.__dict__:
        recs = ctx.ladder.records
        write_csv(outdir / "lnIm_vs_invh.csv", {
            "inv_h": [1 / r["h"] for r in recs],
            "ln_neg_im_rho_eig": [np.log(-r["im_rho_eig"]) for r in recs],
            "ln_neg_im_rho_green": [np.log(-r["im_rho_green"]) for r in recs],
        }, h)
    return code


COMMANDS = {
    "validate": cmd_validate, "agmon": cmd_agmon, "gamma": cmd_gamma, "wkb": cmd_wkb,
    "caustic": cmd_caustic, "resonance": cmd_resonance, "width": cmd_width, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resonia", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True)
        if name != "verify":
            sp.add_argument("--out")
        return sp

    add("validate", "check the structural assumptions on the potential")
    add("agmon", "Agmon distance on a grid (CSV)").add_argument("--grid", type=int)
    add("gamma", "action S and the points of interaction (JSON)")
    add("wkb", "WKB phase and amplitude (CSV)").add_argument("--h", type=float, required=True)
    c = add("caustic", "complex phase and outgoing WKB across the caustic (CSV)")
    c.add_argument("--h", type=float, required=True)
    c.add_argument("--x1-index", type=int, default=0)
    r = add("resonance", "complex-scaled resonance near the Dirichlet eigenvalue (JSON)")
    r.add_argument("--h", type=float, required=True)
    r.add_argument("--theta", type=float)
    r.add_argument("--R0", type=float)
    r.add_argument("--box", type=float)
    r.add_argument("--nodes", type=int)
    add("width", "resonance widths on an h-ladder and the asymptotic fit (JSON)").add_argument("--h-ladder")
    add("verify", "run the acceptance suite").add_argument("--out-dir")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        return COMMANDS[args.command](args, cfg, config_hash(cfg))
    except ResoniaError as exc:
        print(f"resonia: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

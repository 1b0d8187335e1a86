"""Command-line driver: identity suites, matrix builders, Hamiltonian export.

Configuration is a single JSON document; complex numbers are [re, im] pairs
and spins are "k/2" strings, so half-integers never pass through floats.
Every verification suite also runs one wired-in negative control (a
deliberately broken case that must exceed the failure threshold).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .intertwiners import check_fusion_relations
from .kmatrix import (BoundaryParams, dual_reflection_check, intertwining_check,
                      k_fused, reduction_check, reflection_check)
from .laurent import PolyMatrix
from .rmatrix import crossing_check, r_fused, r_half_j, ybe_check
from .spinchain import (ChainConfig, aq_relations_check, quantum_det_image,
                        truncation_check, tt_check, tsys_ysys_check)
from .symmetry import (blob_check, exchange_check, hamiltonian_symmetry_check,
                       transfer_symmetry_check, xxx_check)
from .conserved import (charge_commutation_check, delta_series, delta2_closed_form,
                        h_via_charges_check, hamiltonian, qonsager_reconstruct)

DEFAULT_Q = 0.83 * np.exp(0.41j)
NEGATIVE_FLOOR = 1e-4

SUITE_TOLERANCES = {
    "ybe": 1e-9,
    "re": 1e-9,
    "dual-re": 1e-9,
    "fusion-maps": 1e-10,
    "tt": 1e-8,
    "tsys": 1e-7,
    "qdet": 1e-9,
    "aq-relations": 1e-9,
    "hamiltonian-i": 1e-8,
    "qonsager": 1e-8,
    "symmetry": 1e-8,
    "xxx": 1e-10,
    "blob": 1e-9,
}


class ConfigError(ValueError):
    pass


def _cx(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    raise ConfigError(f"expected a number or [re, im] pair, got {v!r}")


def parse_spin(s) -> int:
    """A spin as 'k/2', 'k' or a number; returned as twoj."""
    if isinstance(s, str):
        if "/" in s:
            num, den = s.split("/")
            if int(den) != 2:
                raise ConfigError(f"spin denominators must be 2: {s!r}")
            return int(num)
        return 2 * int(s)
    if isinstance(s, (int, float)) and float(2 * s).is_integer():
        return int(round(2 * s))
    raise ConfigError(f"bad spin entry {s!r}")


def load_config(path: str | None) -> ChainConfig:
    if path is None:
        return default_config()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> ChainConfig:
    try:
        q = _cx(doc.get("q", [DEFAULT_Q.real, DEFAULT_Q.imag]))
        spins = tuple(parse_spin(s) for s in doc["spins"])
        inhoms = tuple(_cx(v) for v in doc.get("inhoms", [[1.0, 0.0]] * len(spins)))
        bnd = doc.get("boundary", {})
        params = BoundaryParams(
            *(_cx(bnd.get(name, [0.0, 0.0])) for name in (
                "eps_plus", "eps_minus", "k_plus", "k_minus",
                "epsbar_plus", "epsbar_minus", "kbar_plus", "kbar_minus")))
        n = doc.get("N")
        if n is not None and int(n) != len(spins):
            raise ConfigError(f"N={n} does not match {len(spins)} spins")
        return ChainConfig(spins, inhoms, params, q)
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc))


def default_config(n: int = 2) -> ChainConfig:
    rng = np.random.default_rng(2024)

    def rc():
        return complex(rng.uniform(-1, 1), rng.uniform(-1, 1))

    params = BoundaryParams(rc(), rc(), rc(), rc(), rc(), rc(), rc(), rc())
    spins = (1, 2)[:n] if n <= 2 else (1,) * n
    inhoms = tuple(rng.uniform(0.9, 1.1) * np.exp(1j * rng.uniform(-0.5, 0.5))
                   for _ in spins)
    return ChainConfig(spins, inhoms, params, DEFAULT_Q)


# -- suite runners ------------------------------------------------------------


def _case(name, residual, tol, expect_fail=False):
    ok = residual > NEGATIVE_FLOOR if expect_fail else residual <= tol
    return {"case": name, "residual": float(residual), "tolerance": tol,
            "negative_control": expect_fail, "pass": bool(ok)}


def run_suite(suite: str, cfg: ChainConfig, tol: float | None, seed: int,
              max_twoj: int = 3) -> list:
    q = cfg.q
    tol = tol if tol is not None else SUITE_TOLERANCES[suite]
    rng = np.random.default_rng(seed)
    cases = []

    if suite == "ybe":
        spins = [tj for tj in range(1, max_twoj + 1)]
        for a in spins:
            for b in spins:
                for c in spins:
                    r = ybe_check(a, b, c, q, n_samples=5, rng=rng)
                    cases.append(_case(r["case"], r["residual"], tol))
        bad = ybe_check(1, 1, 1, 1.0001 * q, n_samples=1,
                        rng=np.random.default_rng(seed))
        # negative control: mismatched deformation in the outer factors
        r12 = r_fused(1, 1, q)
        r13 = r_fused(1, 1, 1.02 * q)
        u1, u2 = 1.1, 0.9 * np.exp(0.4j)
        a = np.kron(r12.eval(u1 / u2), np.eye(2))
        b = np.kron(np.eye(2), r13.eval(u2))
        c = np.kron(r12.eval(u1), np.eye(2))
        resid = np.linalg.norm(a @ c @ b - b @ c @ a) / np.linalg.norm(a @ c @ b)
        cases.append(_case("ybe-negative(mixed-q)", resid, tol, expect_fail=True))

    elif suite == "re":
        p = cfg.boundary
        for a in range(1, max_twoj + 1):
            for b in range(a, max_twoj + 1):
                r = reflection_check(a, b, p, q, rng=rng)
                cases.append(_case(r["case"], r["residual"], tol))
        diag = replace(p, k_plus=0.0, k_minus=0.0)
        r = reflection_check(1, 2, diag, q, rng=rng)
        cases.append(_case("re(diagonal k=0)", r["residual"], tol))
        for a in (1, 2, 3):
            r = intertwining_check(a, p, q)
            cases.append(_case(r["case"], r["residual"], tol))
        for a in (2, 3):
            r = reduction_check(a, p, q)
            cases.append(_case(r["case"], r["residual"], tol))
        kp = k_fused(1, p, q)
        kbad = kp + PolyMatrix(2, 2, {0: np.diag([1e-3, 0.0])})
        r1 = intertwining_check(1, p, q, kmat=kbad)
        cases.append(_case("intertwining-negative", r1["residual"], tol, expect_fail=True))

    elif suite == "dual-re":
        p = cfg.boundary
        for a in range(1, max_twoj + 1):
            for b in range(a, max_twoj + 1):
                r = dual_reflection_check(a, b, p, q, rng=rng)
                cases.append(_case(r["case"], r["residual"], tol))
        diag = replace(p, kbar_plus=0.0, kbar_minus=0.0)
        r = dual_reflection_check(1, 2, diag, q, rng=rng)
        cases.append(_case("dual-re(diagonal kbar=0)", r["residual"], tol))
        bad = replace(p, epsbar_plus=p.epsbar_plus + 1e-3)
        from .kmatrix import k_dual
        na = k_dual(1, p, q).num
        nb = k_dual(1, bad, q).num
        resid = na.residual(nb)
        cases.append(_case("dual-re-negative(perturbed)", resid, tol, expect_fail=True))

    elif suite == "fusion-maps":
        def provider(t2, pt):
            return r_half_j(t2, q).eval(pt) if t2 > 0 else np.eye(2, dtype=complex)

        for tj in range(1, max_twoj + 2):
            rep = check_fusion_relations(tj, q, provider)
            worst = max(v for k, v in rep.items() if k != "pass")
            cases.append(_case(f"fusion-maps(2j={tj})", worst, tol))
        rep = check_fusion_relations(2, 1.005 * q, provider)
        worst = max(v for k, v in rep.items() if k != "pass")
        cases.append(_case("fusion-maps-negative(mixed-q)", worst, tol, expect_fail=True))

    elif suite == "tt":
        for twoja in (2, 3, 4):
            r = tt_check(twoja, cfg, rng=rng)
            cases.append(_case(r["case"], r["residual"], tol))
        bad = replace(cfg.boundary, eps_plus=cfg.boundary.eps_plus * (1 + 1e-3))
        bad_cfg = ChainConfig(cfg.spins, cfg.inhoms, bad, q)
        ta = tt_check(2, cfg, n_samples=1, rng=np.random.default_rng(seed))
        from .spinchain import transfer_eval
        u0 = 1.05 * np.exp(0.2j)
        mixed = (transfer_eval(2, cfg, u0)
                 - transfer_eval(2, bad_cfg, u0))
        resid = np.linalg.norm(mixed) / np.linalg.norm(transfer_eval(2, cfg, u0))
        cases.append(_case("tt-negative(perturbed-boundary)", resid, tol, expect_fail=True))

    elif suite == "tsys":
        for twoja in (1, 2):
            r = tsys_ysys_check(twoja, cfg, rng=rng)
            cases.append(_case(r["case"] + "[T]", r["t_residual"], tol))
            cases.append(_case(r["case"] + "[Y]", r["y_residual"], tol))
        from .spinchain import qdet_site_factor, _tau_eval, _g_scalar
        from .kmatrix import gamma_plus_poly, gamma_minus_poly
        gn = qdet_site_factor(cfg) * gamma_minus_poly(cfg.boundary, q)
        gp = gamma_plus_poly(cfg.boundary, q)
        u0 = 1.04 * np.exp(0.31j)
        lhs = _tau_eval(1, cfg, u0 * q**-0.5) @ _tau_eval(1, cfg, u0 * q**0.5)
        rhs = _tau_eval(2, cfg, u0) + 1.5 * _g_scalar(1, cfg, u0, gn, gp) * np.eye(cfg.quantum_dim)
        resid = np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs)
        cases.append(_case("tsys-negative(scaled-g)", resid, tol, expect_fail=True))

    elif suite == "qdet":
        from .spinchain import FactorizationFailure
        try:
            quantum_det_image(cfg, check_tol=tol)
            cases.append(_case(f"qdet(N={cfg.n_sites})", 0.0, tol))
        except FactorizationFailure as exc:
            cases.append(_case(f"qdet(N={cfg.n_sites})", 1.0, tol))
        bad = replace(cfg.boundary, k_plus=cfg.boundary.k_plus * (1 + 1e-3))
        bad_cfg = ChainConfig(cfg.spins, cfg.inhoms, bad, q)
        try:
            quantum_det_image(bad_cfg, check_tol=tol)
            # factor uses its own params, so this should never pass silently
            mism = 0.0
        except FactorizationFailure:
            mism = 1.0
        from .spinchain import qdet_site_factor
        from .kmatrix import gamma_minus_poly
        good = qdet_site_factor(cfg) * gamma_minus_poly(cfg.boundary, q)
        wrong = qdet_site_factor(cfg) * gamma_minus_poly(bad, q)
        resid = (good - wrong).max_abs() / good.max_abs()
        cases.append(_case("qdet-negative(perturbed)", resid, tol, expect_fail=True))

    elif suite == "aq-relations":
        r = aq_relations_check(cfg)
        cases.append(_case(f"aq-relations(N={cfg.n_sites})", r["residual"], tol))
        r = truncation_check(cfg)
        cases.append(_case(f"truncation(N={cfg.n_sites})", r["residual"], tol))
        from .spinchain import alternating_ops
        ops = alternating_ops(cfg, k_max=1)
        w0 = ops.w_minus[0]
        g1bad = ops.g[0] + 1e-3 * np.eye(cfg.quantum_dim)
        rho = cfg.boundary.rho(q)
        lhs = q * (w0 @ g1bad) - (1.0 / q) * (g1bad @ w0)
        rhs = rho * (ops.w_minus[1] - ops.w_plus[0])
        resid = np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1.0)
        cases.append(_case("aq-negative(perturbed-G1)", resid, tol, expect_fail=True))

    elif suite == "hamiltonian-i":
        for n in range(1, cfg.n_sites + 1):
            r = h_via_charges_check(n, cfg.boundary, q)
            cases.append(_case(r["case"], r["residual"], tol))
        r = charge_commutation_check(min(cfg.n_sites, 3), cfg.boundary, q)
        cases.append(_case(r["case"], r["residual"], tol))
        bad = replace(cfg.boundary, kbar_minus=cfg.boundary.kbar_minus * (1 + 1e-2))
        h_good = hamiltonian(1, 1, 2, cfg.boundary, q).matrix
        h_bad = hamiltonian(1, 1, 2, bad, q).matrix
        resid = np.linalg.norm(h_good - h_bad) / np.linalg.norm(h_good)
        cases.append(_case("hamiltonian-negative(perturbed)", resid, tol, expect_fail=True))

    elif suite == "qonsager":
        ds = delta_series(cfg, max(2, cfg.n_sites))
        cases.append(_case(f"delta1(N={cfg.n_sites})", abs(ds.deltas[0]), tol))
        if cfg.n_sites <= 2:
            ref = delta2_closed_form(cfg)
            cases.append(_case(f"delta2(N={cfg.n_sites})",
                               abs(ds.deltas[1] - ref) / max(abs(ref), 1.0), tol))
        r = qonsager_reconstruct(cfg)
        for key in ("G1", "Gt1", "W-1", "W2", "G2", "W-2"):
            cases.append(_case(f"qonsager-{key}(N={cfg.n_sites})", r[key], tol))
        bad = qonsager_reconstruct(cfg, deltas=[0.5, ds.deltas[1]])
        cases.append(_case("qonsager-negative(wrong-delta)", bad["residual"],
                           tol, expect_fail=True))

    elif suite == "symmetry":
        for case in ("w0", "w1", "mixed"):
            r = exchange_check(cfg, case)
            cases.append(_case(r["case"], r["residual"], tol))
        r = exchange_check(cfg, "w0", perturb=1e-3)
        cases.append(_case("exchange-negative(perturbed)", r["residual"],
                           tol, expect_fail=True))
        for twoj, n in ((1, min(cfg.n_sites + 1, 3)), (2, 2)):
            r = hamiltonian_symmetry_check(twoj, n, cfg.boundary, q)
            cases.append(_case(r["case"], r["residual"], tol))
        r = hamiltonian_symmetry_check(1, 2, cfg.boundary, q, perturb=1e-3)
        cases.append(_case("hamiltonian-symmetry-negative", r["residual"],
                           tol, expect_fail=True))
        r = transfer_symmetry_check(cfg, rng=rng)
        cases.append(_case(r["case"], r["residual"], tol))

    elif suite == "xxx":
        rngl = np.random.default_rng(seed + 1)

        def rc():
            return complex(rngl.uniform(-1, 1), rngl.uniform(-1, 1))

        hp, hm, bhm = rc(), rc(), rc()
        bhp = bhm * hp / hm
        for n in range(2, 5):
            r = xxx_check(n, hp, hm, bhp, bhm)
            cases.append(_case(r["case"], r["residual"], tol))
        r = xxx_check(3, hp, hm, bhp + 0.05, bhm, enforce=False)
        cases.append(_case("xxx-negative(broken-ratio)", r["commutator"],
                           tol, expect_fail=True))

    elif suite == "blob":
        r = blob_check(3, cfg.boundary, q)
        for key in ("delta_dev", "e_sq", "tl", "w0_e", "b_idempotent", "w0_b", "e1be1"):
            cases.append(_case(f"blob-{key}(N=3)", r[key], tol))
        from .symmetry import tl_density
        from .repspace import SiteLayout
        layout = SiteLayout.from_spins([1, 1, 1])
        e1 = tl_density(1, layout, q)
        e1 = e1 + 1e-3 * np.eye(8)
        resid = np.linalg.norm(e1 @ e1 - (q + 1.0 / q) * e1) / np.linalg.norm(e1)
        cases.append(_case("blob-negative(shifted-density)", resid, tol, expect_fail=True))

    else:
        raise ConfigError(f"unknown suite {suite!r}")
    return sorted(cases, key=lambda c: c["case"])


ALL_SUITES = ["ybe", "re", "dual-re", "fusion-maps", "tt", "tsys", "qdet",
              "aq-relations", "hamiltonian-i", "qonsager", "symmetry", "xxx", "blob"]


# -- commands ------------------------------------------------------------------


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    suites = ALL_SUITES if args.suite == "all" else [args.suite]
    report = {"suite": args.suite, "seed": args.seed, "cases": []}
    for suite in suites:
        max_twoj = parse_spin(args.max_spin) if args.max_spin else 3
        report["cases"] += run_suite(suite, cfg, args.tol, args.seed, max_twoj)
    report["cases"].sort(key=lambda c: c["case"])
    n_fail = sum(not c["pass"] for c in report["cases"])
    report["passed"] = n_fail == 0
    for c in report["cases"]:
        flag = "PASS" if c["pass"] else "FAIL"
        kind = " [negative control]" if c["negative_control"] else ""
        print(f"{flag}  {c['case']:<42s} residual {c['residual']:.3e}{kind}")
    print(f"{len(report['cases']) - n_fail}/{len(report['cases'])} cases passed")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
    return 0 if report["passed"] else 1


def cmd_build(args) -> int:
    q = DEFAULT_Q
    if args.what == "r":
        mat = r_fused(parse_spin(args.j1), parse_spin(args.j2), q)
        payload = mat.to_json()
    elif args.what == "k":
        if args.params:
            cfg = load_config(args.params)
            params, q = cfg.boundary, cfg.q
        else:
            cfg = default_config()
            params = cfg.boundary
        payload = k_fused(parse_spin(args.j), params, q).to_json()
    else:
        raise ConfigError("build target must be r or k")
    text = json.dumps(payload, indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def cmd_hamiltonian(args) -> int:
    if args.params:
        cfgfile = load_config(args.params)
        params, q = cfgfile.boundary, cfgfile.q
    else:
        params, q = default_config().boundary, DEFAULT_Q
    h = hamiltonian(args.order, parse_spin(args.spin), args.N, params, q)
    payload = {
        "order": h.order, "twoj": h.twoj, "n_sites": h.n_sites,
        "re": h.matrix.real.tolist(), "im": h.matrix.imag.tolist(),
    }
    if args.spectrum:
        ev = np.linalg.eigvals(h.matrix)
        ev = sorted(ev, key=lambda z: (round(z.real, 10), round(z.imag, 10)))
        payload["spectrum"] = [[z.real, z.imag] for z in ev]
    text = json.dumps(payload, indent=1, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtt", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run an identity suite")
    v.add_argument("suite", choices=ALL_SUITES + ["all"])
    v.add_argument("--config", default=None)
    v.add_argument("--tol", type=float, default=None)
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--max-spin", default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("build", help="emit an R- or K-matrix as JSON")
    b.add_argument("what", choices=["r", "k"])
    b.add_argument("--j1", default="1/2")
    b.add_argument("--j2", default="1/2")
    b.add_argument("--j", default="1/2")
    b.add_argument("--params", default=None)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_build)

    h = sub.add_parser("hamiltonian", help="emit a conserved charge as JSON")
    h.add_argument("--order", type=int, default=1)
    h.add_argument("--spin", default="1/2")
    h.add_argument("--N", type=int, required=True)
    h.add_argument("--params", default=None)
    h.add_argument("--spectrum", action="store_true")
    h.add_argument("--out", default=None)
    h.set_defaults(func=cmd_hamiltonian)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

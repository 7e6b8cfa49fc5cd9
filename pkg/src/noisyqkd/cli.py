"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional

from . import analytic, collective, optimize, sweep, validation
from .analytic import ProtocolParams
from .gaussian import DomainError
from .sweep import ConfigError, SweepSpec

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _param_args(p: argparse.ArgumentParser, need_v: bool = True) -> None:
    g = p.add_argument_group("protocol parameters")
    g.add_argument("-V", type=float, required=need_v, help="source variance (shot-noise units)")
    g.add_argument("--eta", type=float, required=True, help="channel transmittivity")
    g.add_argument("--dV", type=float, default=0.0, help="preparation noise")
    g.add_argument("--T", type=float, default=1.0, help="purifying attenuation")
    g.add_argument("--chi", type=float, default=0.0, help="trusted detection noise")
    g.add_argument("--eps", type=float, default=0.0, help="channel excess noise")


def _attack_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--attack", choices=("individual", "collective"), default="collective")
    p.add_argument("--method", choices=("direct", "purification"), default=None, help="Holevo construction for collective attacks")


def _io_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: number of cores)")


def _params(ns) -> ProtocolParams:
    return ProtocolParams(V=ns.V, eta=ns.eta, dV=ns.dV, T=ns.T, chi=ns.chi, eps=ns.eps)


def _rate(p: ProtocolParams, attack: str, method: Optional[str]):
    if attack == "individual":
        return analytic.individual_rate(p)
    return collective.collective_rate(p, method or collective.default_method(p))


def _record_csv(rec: dict) -> str:
    return sweep.to_csv([rec], list(rec))


def cmd_rate(ns) -> int:
    p = _params(ns)
    res = _rate(p, ns.attack, ns.method)
    rec = dict(attack=ns.attack, V=p.V, dV=p.dV, T=p.T, chi=p.chi, eta=p.eta, eps=p.eps, i_ab=res.i_ab, eve_info=res.eve_info, rate=res.rate)
    _write(_record_csv(rec), ns.out)
    return EXIT_OK


def cmd_optimize(ns) -> int:
    p = _params(ns)
    opt = optimize.maximize_rate_over_T(lambda t: _rate(p.with_(T=t), ns.attack, ns.method).rate)
    res = _rate(p.with_(T=opt.T), ns.attack, ns.method)
    rec = dict(attack=ns.attack, V=p.V, dV=p.dV, chi=p.chi, eta=p.eta, eps=p.eps, T_star=opt.T, i_ab=res.i_ab, eve_info=res.eve_info, rate=res.rate, unimodal=opt.unimodal)
    _write(_record_csv(rec), ns.out)
    return EXIT_OK


def cmd_threshold(ns) -> int:
    if ns.kind == "dv":
        r = optimize.dv_max(ns.attack, ns.V, ns.eta, eps=ns.eps, chi=ns.chi, purified=ns.purified, method=ns.method)
    else:
        r = optimize.eps_max(ns.V, ns.dV, ns.eta, purified=ns.purified)
    rec = {"kind": f"{ns.kind}_max", "V": ns.V, "eta": ns.eta, "purified": ns.purified, "value": r.value, "achieved_rate": r.achieved_rate, "converged": r.converged}
    _write(_record_csv(rec), ns.out)
    return EXIT_OK


def _parse_fixed(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--fixed expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--fixed {name}: not a number: {value!r}") from None
    return out


def parse_axis(text: str) -> dict:
    """``name=min:max:steps[:log]`` or ``name=v1,v2,...``."""
    name, sep, body = text.partition("=")
    if not sep or not body:
        raise ConfigError(f"--axis expects name=min:max:steps[:scale] or name=v1,v2,..., got {text!r}")
    try:
        if ":" in body:
            parts = body.split(":")
            if len(parts) not in (3, 4):
                raise ConfigError(f"--axis {name}: expected min:max:steps[:scale]")
            ax = {"name": name, "min": float(parts[0]), "max": float(parts[1]), "steps": int(parts[2])}
            if len(parts) == 4:
                ax["scale"] = parts[3]
            return ax
        return {"name": name, "values": [float(v) for v in body.split(",")]}
    except ValueError as exc:
        raise ConfigError(f"--axis {name}: {exc}") from None


def _apply_overrides(spec: SweepSpec, ns) -> SweepSpec:
    d = spec.to_dict()
    if ns.quantity is not None:
        d["quantity"] = ns.quantity
    d["fixed"] = {**d["fixed"], **_parse_fixed(ns.fixed)}
    if ns.axis:
        d["axes"] = [parse_axis(a) for a in ns.axis]
    for key in ("attack", "method", "purified", "optimize_T", "cap", "db", "beta_table"):
        val = getattr(ns, key, None)
        if val is not None:
            d[key] = val
    return SweepSpec.from_dict(d)


def _emit_sweep(spec: SweepSpec, ns) -> int:
    spec.validate()
    records = sweep.run_sweep(spec, jobs=ns.jobs)
    _write(sweep.to_csv(records, spec.columns()), ns.out or spec.out)
    return EXIT_OK


def cmd_sweep(ns) -> int:
    if ns.spec:
        try:
            spec = SweepSpec.load(ns.spec)
        except OSError as exc:
            raise ConfigError(f"cannot read spec file: {exc}") from None
    else:
        if ns.quantity is None:
            raise ConfigError("sweep needs --spec or --quantity")
        spec = SweepSpec(quantity=ns.quantity)
    return _emit_sweep(_apply_overrides(spec, ns), ns)


def cmd_figure(ns) -> int:
    spec = sweep.figure_preset(ns.name, steps=ns.steps)
    if ns.db:
        spec.db = True
    if ns.beta_table:
        if spec.quantity != "snr_surface":
            raise ConfigError("--beta-table applies to the fig7 and fig8 presets")
        spec.beta_table = ns.beta_table
        spec.axes = [a for a in spec.axes if a.name != "beta"]
    return _emit_sweep(spec, ns)


def cmd_validate(ns) -> int:
    names = ns.suites or list(validation.SUITES)
    unknown = [n for n in names if n not in validation.SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(validation.SUITES)}")
    lines, ok = [], True
    for name in names:
        t0 = time.perf_counter()
        checks = validation.run_suite(name, jobs=ns.jobs)
        lines.append(f"[{name}] {time.perf_counter() - t0:.1f} s")
        for c in checks:
            lines.append("  " + c.line())
            ok &= c.passed
    lines.append("OK" if ok else "FAILED")
    _write("\n".join(lines) + "\n", ns.out)
    return EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisyqkd", description="Key rates, thresholds and parameter sweeps for noisy coherent-state CV-QKD.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="key rate at one parameter point")
    _param_args(p)
    _attack_args(p)
    _io_args(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("optimize", help="maximise the key rate over the attenuation T")
    _param_args(p)
    _attack_args(p)
    _io_args(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("threshold", help="maximal tolerable preparation noise (dv) or channel noise (eps)")
    p.add_argument("kind", choices=("dv", "eps"))
    _param_args(p)
    _attack_args(p)
    p.add_argument("--purified", action="store_true", help="optimise T at every probe")
    _io_args(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("sweep", help="evaluate a quantity over a parameter grid, emit CSV")
    p.add_argument("--spec", help="JSON sweep file; flags below override its fields")
    p.add_argument("--quantity", choices=sweep.QUANTITIES)
    p.add_argument("--fixed", action="append", metavar="NAME=VALUE", help="fixed parameter (repeatable)")
    p.add_argument("--axis", action="append", metavar="AXIS", help="name=min:max:steps[:log] or name=v1,v2,... (repeatable; replaces file axes)")
    p.add_argument("--attack", choices=("individual", "collective"), default=None)
    p.add_argument("--method", choices=("direct", "purification"), default=None)
    p.add_argument("--purified", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--optimize-T", dest="optimize_T", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--cap", type=float, default=None, help="display cap for snr_surface thresholds")
    p.add_argument("--db", action=argparse.BooleanOptionalAction, default=None, help="add a dB column to dv_max output")
    p.add_argument("--beta-table", dest="beta_table", default=None, help="two-column snr,beta CSV replacing the beta axis")
    _io_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="emit the data grid of a figure preset")
    p.add_argument("name", choices=sweep.FIGURES)
    p.add_argument("--steps", type=int, default=sweep.DEFAULT_STEPS, help="points per axis")
    p.add_argument("--db", action="store_true", help="add a dB column to dv_max output")
    p.add_argument("--beta-table", dest="beta_table", default=None, help="project a snr,beta table onto fig7/fig8")
    _io_args(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("validate", help="run cross-method validation suites")
    p.add_argument("suites", nargs="*", metavar="SUITE", help=f"any of {', '.join(validation.SUITES)} (default: all)")
    _io_args(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Parameter sweeps, figure presets and CSV emission."""

from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import analytic, collective, optimize, reconciliation
from .analytic import ProtocolParams
from .gaussian import DomainError

AXIS_NAMES = ("V", "dV", "T", "chi", "eta", "eps", "beta", "snr")
QUANTITIES = ("individual_rate", "collective_rate", "holevo", "dv_max", "eps_max", "t_opt", "snr_surface", "i_eff")
DEFAULTS = {"dV": 0.0, "T": 1.0, "chi": 0.0, "eps": 0.0}

REQUIRED = {
    "individual_rate": ("V", "eta"),
    "collective_rate": ("V", "eta"),
    "holevo": ("V", "eta"),
    "dv_max": ("V", "eta"),
    "eps_max": ("V", "eta"),
    "t_opt": ("V", "eta"),
    "snr_surface": ("beta", "snr", "eta"),
    "i_eff": ("beta", "V", "eta"),
}

OUTPUTS = {
    "individual_rate": ("T_star", "i_ab", "eve_info", "rate"),
    "collective_rate": ("T_star", "i_ab", "eve_info", "rate"),
    "holevo": ("eve_info",),
    "dv_max": ("dv_max", "dv_max_db", "achieved_rate", "converged"),
    "eps_max": ("eps_max", "achieved_rate", "converged"),
    "t_opt": ("T_star", "rate", "t_opt_analytic"),
    "snr_surface": ("dv_max", "dv_max_capped", "converged"),
    "i_eff": ("snr", "i_ab", "eve_info", "i_eff"),
}

DEFAULT_STEPS = 41


class ConfigError(ValueError):
    """Invalid sweep definition."""


@dataclass
class Axis:
    name: str
    min: Optional[float] = None
    max: Optional[float] = None
    steps: int = DEFAULT_STEPS
    scale: str = "linear"
    values: Optional[list] = None

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.steps)
        return np.linspace(self.min, self.max, self.steps)

    def validate(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"unknown axis {self.name!r}; choose from {', '.join(AXIS_NAMES)}")
        if self.values is not None:
            if len(self.values) < 1:
                raise ConfigError(f"axis {self.name}: empty value list")
            return
        if self.min is None or self.max is None:
            raise ConfigError(f"axis {self.name}: needs min and max (or values)")
        if self.steps < 2:
            raise ConfigError(f"axis {self.name}: steps must be >= 2")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.name}: scale must be 'linear' or 'log'")
        if self.scale == "log" and (self.min <= 0 or self.max <= 0):
            raise ConfigError(f"axis {self.name}: log scale needs positive bounds")


@dataclass
class SweepSpec:
    """A grid of parameter points and the quantity to evaluate at each.

    ``series`` optionally lists override dicts (fixed values and selectors);
    the grid is evaluated once per series entry and a ``series`` index column
    is emitted.
    """

    quantity: str
    fixed: dict = field(default_factory=dict)
    axes: list = field(default_factory=list)
    attack: str = "collective"
    method: Optional[str] = None
    purified: bool = False
    optimize_T: bool = False
    cap: Optional[float] = None
    series: list = field(default_factory=list)
    db: bool = False
    beta_table: Optional[str] = None
    out: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown spec fields: {', '.join(sorted(unknown))}")
        try:
            d["axes"] = [a if isinstance(a, Axis) else Axis(**a) for a in d.get("axes", [])]
        except TypeError as exc:
            raise ConfigError(f"bad axis definition: {exc}") from None
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None

    def _series(self) -> list:
        return self.series or [{}]

    def validate(self) -> "SweepSpec":
        if self.quantity not in QUANTITIES:
            raise ConfigError(f"unknown quantity {self.quantity!r}; choose from {', '.join(QUANTITIES)}")
        if not 1 <= len(self.axes) <= 3:
            raise ConfigError("a sweep needs 1 to 3 axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError("axis names must be unique")
        for a in self.axes:
            a.validate()
        clash = set(names) & set(self.fixed)
        if clash:
            raise ConfigError(f"parameters both fixed and swept: {', '.join(sorted(clash))}")
        for k, val in self.fixed.items():
            if k not in AXIS_NAMES:
                raise ConfigError(f"unknown fixed parameter {k!r}")
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"fixed parameter {k} must be a number, got {val!r}")
        if self.attack not in ("individual", "collective"):
            raise ConfigError(f"attack must be 'individual' or 'collective', got {self.attack!r}")
        if self.method not in (None, "direct", "purification"):
            raise ConfigError(f"method must be 'direct' or 'purification', got {self.method!r}")
        if self.beta_table is not None:
            if "beta" in names or "beta" in self.fixed:
                raise ConfigError("beta comes from the beta table; do not also fix or sweep it")
            if "snr" not in names:
                raise ConfigError("a beta table needs an snr axis")
            try:
                reconciliation.load_beta_table(self.beta_table)
            except (OSError, DomainError) as exc:
                raise ConfigError(f"beta table {self.beta_table}: {exc}") from None
        for s in self._series():
            present = set(names) | set(self.fixed) | {k for k in s if k in AXIS_NAMES}
            if self.beta_table is not None:
                present.add("beta")
            required = set(REQUIRED[self.quantity])
            purified = s.get("purified", self.purified)
            if self.quantity == "snr_surface" and purified:
                required.add("V")
            missing = required - present
            if missing:
                raise ConfigError(f"{self.quantity} needs {', '.join(sorted(missing))} (fixed or as an axis)")
            bad = set(s) - set(AXIS_NAMES) - {"attack", "method", "purified", "optimize_T", "cap"}
            if bad:
                raise ConfigError(f"unknown series keys: {', '.join(sorted(bad))}")
        return self

    def columns(self) -> list:
        cols = [a.name for a in self.axes]
        if self.series:
            cols = ["series"] + sorted({k for s in self.series for k in s}) + cols
        if self.beta_table is not None:
            cols.append("beta")
        outs = [c for c in OUTPUTS[self.quantity] if self.db or c != "dv_max_db"]
        if self.quantity in ("individual_rate", "collective_rate") and not (
            self.optimize_T or any(s.get("optimize_T") for s in self.series)
        ):
            outs.remove("T_star")
        return cols + outs

    def points(self) -> list:
        """Evaluation points in row-major order (series, then first axis slowest)."""
        grids = [a.grid() for a in self.axes]
        beta_of = reconciliation.load_beta_table(self.beta_table) if self.beta_table else None
        pts = []
        for si, s in enumerate(self._series()):
            for combo in itertools.product(*grids):
                vals = dict(DEFAULTS)
                vals.update(self.fixed)
                vals.update({k: v for k, v in s.items() if k in AXIS_NAMES})
                vals.update({a.name: float(v) for a, v in zip(self.axes, combo)})
                sel = {
                    "attack": s.get("attack", self.attack),
                    "method": s.get("method", self.method),
                    "purified": s.get("purified", self.purified),
                    "optimize_T": s.get("optimize_T", self.optimize_T),
                    "cap": s.get("cap", self.cap),
                }
                echo = {a.name: float(v) for a, v in zip(self.axes, combo)}
                if beta_of is not None:
                    try:
                        vals["beta"] = echo["beta"] = beta_of(vals["snr"])
                    except DomainError:
                        vals["beta"] = None  # outside the table: infeasible cell
                if self.series:
                    echo = {"series": si, **s, **echo}
                pts.append((self.quantity, vals, sel, echo))
        return pts


def _params(v: dict) -> ProtocolParams:
    return ProtocolParams(V=v["V"], eta=v["eta"], dV=v["dV"], T=v["T"], chi=v["chi"], eps=v["eps"])


def _rate_record(quantity, v, sel):
    attack = "individual" if quantity == "individual_rate" else sel["attack"]
    p = _params(v)
    rec = {}
    if attack == "individual":
        full = lambda q: analytic.individual_rate(q)
    else:
        method = sel["method"] or collective.default_method(p)
        full = lambda q: collective.collective_rate(q, method)
    if sel["optimize_T"]:
        opt = optimize.maximize_rate_over_T(lambda t: full(p.with_(T=t)).rate)
        p = p.with_(T=opt.T)
        rec["T_star"] = opt.T
    res = full(p)
    rec.update(i_ab=res.i_ab, eve_info=res.eve_info, rate=res.rate)
    return rec


def evaluate_point(point) -> dict:
    """Evaluate one sweep point; the result holds axis echoes plus output columns."""
    quantity, v, sel, echo = point
    out = dict(echo)
    if any(x is None for x in v.values()):
        return out
    try:
        if quantity in ("individual_rate", "collective_rate"):
            out.update(_rate_record(quantity, v, sel))
        elif quantity == "holevo":
            out["eve_info"] = _rate_record("collective_rate", v, sel)["eve_info"]
        elif quantity == "dv_max":
            r = optimize.dv_max(sel["attack"], v["V"], v["eta"], eps=v["eps"], chi=v["chi"], purified=sel["purified"], method=sel["method"])
            out.update(dv_max=r.value, achieved_rate=r.achieved_rate, converged=r.converged)
            out["dv_max_db"] = 10.0 * math.log10(r.value) if 0.0 < r.value < math.inf else None
        elif quantity == "eps_max":
            r = optimize.eps_max(v["V"], v["dV"], v["eta"], purified=sel["purified"])
            out.update(eps_max=r.value, achieved_rate=r.achieved_rate, converged=r.converged)
        elif quantity == "t_opt":
            p = _params(v)
            opt = optimize.maximize_rate_over_T(lambda t: analytic.individual_rate(p.with_(T=t)).rate)
            out.update(T_star=opt.T, rate=opt.rate)
            try:
                out["t_opt_analytic"] = analytic.t_opt_analytic(v["V"], v["dV"], v["eta"], v["eps"])
            except DomainError:
                out["t_opt_analytic"] = None
        elif quantity == "snr_surface":
            if sel["purified"]:
                r = reconciliation.dv_max_purified(v["beta"], v["snr"], v["V"], v["eta"])
            else:
                r = reconciliation.dv_max_unpurified(v["beta"], v["snr"], v["eta"])
            if r is None:
                out.update(dv_max=None, dv_max_capped=None, converged=None)
            else:
                cap = sel["cap"]
                out.update(dv_max=r.value, converged=r.converged)
                out["dv_max_capped"] = min(r.value, cap) if cap is not None else r.value
        elif quantity == "i_eff":
            p = _params(v)
            i_ab = collective.mutual_information_ab(p.V, p.dV, p.T, 0.0, p.eta)
            eve = collective.holevo_direct(p.V, p.dV, p.T, 0.0, p.eta)
            out.update(
                snr=reconciliation.snr(p.V, p.dV, p.T, p.eta),
                i_ab=i_ab,
                eve_info=eve,
                i_eff=reconciliation.effective_rate(v["beta"], i_ab, eve),
            )
    except DomainError:
        # outside the physical domain for this point: leave outputs empty
        pass
    return out


def run_sweep(spec: SweepSpec, jobs: Optional[int] = None) -> list:
    """Validate ``spec`` and evaluate every grid point, preserving grid order."""
    spec.validate()
    return optimize.parallel_map(evaluate_point, spec.points(), jobs)


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def to_csv(records: list, columns: list) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for rec in records:
        buf.write(",".join(format_value(rec.get(c)) for c in columns) + "\n")
    return buf.getvalue()


# --- figure presets -----------------------------------------------------------


def _ax(name, lo, hi, steps, scale="linear"):
    return {"name": name, "min": lo, "max": hi, "steps": steps, "scale": scale}


FIGURES = ("fig2", "fig3", "fig4", "fig5a", "fig5b", "fig6", "fig7", "fig8")


def figure_preset(name: str, steps: int = DEFAULT_STEPS) -> SweepSpec:
    """Sweep definition for one of the named figure presets.

    Fixed parameters are pinned per preset; axis ranges and the grid
    resolution are presentation choices.
    """
    n = steps
    presets = {
        "fig2": dict(
            quantity="collective_rate",
            fixed={"V": 20.0, "eta": 0.01, "eps": 0.0, "T": 1.0},
            axes=[_ax("chi", 0.0, 1.0, n), _ax("dV", 0.0, 2.0, n)],
            method="direct",
        ),
        "fig3": dict(
            quantity="collective_rate",
            fixed={"V": 20.0, "eta": 0.01, "eps": 0.0},
            axes=[_ax("chi", 0.0, 1.0, n), _ax("dV", 0.0, 12.0, n)],
            method="direct",
            optimize_T=True,
        ),
        "fig4": dict(
            quantity="eps_max",
            fixed={"eta": 0.01},
            axes=[_ax("dV", 0.0, 5.0, n)],
            series=[
                {"V": 10.0, "purified": False},
                {"V": 10.0, "purified": True},
                {"V": 1e5, "purified": False},
                {"V": 1e5, "purified": True},
            ],
        ),
        "fig5a": dict(
            quantity="collective_rate",
            fixed={"V": 10.0, "eta": 0.01},
            axes=[_ax("eps", 0.0, 0.12, n), _ax("dV", 0.0, 10.0, n)],
            method="purification",
            optimize_T=True,
        ),
        "fig5b": dict(
            quantity="collective_rate",
            fixed={"V": 100.0, "eta": 0.01},
            axes=[_ax("eps", 0.0, 0.12, n), _ax("dV", 0.0, 10.0, n)],
            method="purification",
            optimize_T=True,
        ),
        "fig6": dict(
            quantity="dv_max",
            fixed={"V": 100.0},
            axes=[_ax("eta", 0.01, 0.1, n), _ax("eps", 0.01, 0.1, n)],
            attack="collective",
            purified=True,
        ),
        "fig7": dict(
            quantity="snr_surface",
            fixed={"eta": 0.1},
            axes=[_ax("beta", 0.5, 1.0, n), _ax("snr", 0.01, 1.8, n, "log")],
            purified=False,
        ),
        "fig8": dict(
            quantity="snr_surface",
            fixed={"V": 20.0, "eta": 0.1},
            axes=[_ax("beta", 0.5, 1.0, n), _ax("snr", 0.01, 1.8, n, "log")],
            purified=True,
            cap=10.0,
        ),
    }
    if name not in presets:
        raise ConfigError(f"unknown figure {name!r}; valid presets: {', '.join(FIGURES)}")
    return SweepSpec.from_dict(presets[name]).validate()

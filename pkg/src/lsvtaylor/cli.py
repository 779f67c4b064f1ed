"""Command-line front end: ``lsvtaylor {price,smile,yield,validate,expand} --model FILE ...``.

Output is CSV with a header row and 17 significant digits, written in grid order,
so identical arguments give byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expansion import bond_yield, build_Ln, price_expansion, price_with_default_floor
from .impliedvol import iv_expand
from .kernel import NumericError
from .model import MAX_ORDER, CapabilityError, ModelError, ModelSpec, PayoffSpec, load_model
from .validate import DomainError, MCConfig, mc_price

SUBCOMMANDS = ("price", "smile", "yield", "validate", "expand")
PAYOFFS = ("call", "put", "otm", "bond")


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str
    order: int | None = None
    payoff: str = "call"
    strikes: tuple[float, ...] = (0.0,)
    maturities: tuple[float, ...] = (0.25,)
    t: float = 0.0
    paths: int = 100_000
    seed: int = 2024
    steps_per_year: int = 250
    workers: int = 1
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.command!r}")
        if self.order is not None and self.order > MAX_ORDER:
            raise CapabilityError(
                f"order {self.order} requested; the explicit correction operators are feasible "
                f"only for n <= {MAX_ORDER}")
        if self.order is not None and self.order < 0:
            raise ValueError("order must be >= 0")
        if self.payoff not in PAYOFFS:
            raise ValueError(f"payoff must be one of {PAYOFFS}")
        if not self.strikes or not self.maturities:
            raise ValueError("strike and maturity grids must be non-empty")
        if not all(np.isfinite(self.strikes)) or not all(np.isfinite(self.maturities)):
            raise ValueError("grid values must be finite")
        if any(T <= self.t for T in self.maturities):
            raise ValueError("every maturity must exceed --t")


def parse_grid(text: str) -> tuple[float, ...]:
    """``"a,b,c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"range must be start:stop:step with step > 0, got {text!r}")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 12)) for i in range(max(n, 0)))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "nan"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % v


def _payoff(kind: str, k: float, x: float) -> PayoffSpec:
    if kind == "bond":
        return PayoffSpec.bond()
    if kind == "otm":
        kind = "put" if k < x else "call"
    return PayoffSpec.call(k) if kind == "call" else PayoffSpec.put(k)


def _grid_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))    # map preserves grid order
    return [fn(i) for i in items]


def _order(cfg: RunConfig, model: ModelSpec) -> int:
    N = model.order if cfg.order is None else cfg.order
    if N > model.order:
        raise ValueError(f"order {N} exceeds the model file's order {model.order}")
    return N


def _points(cfg: RunConfig, model: ModelSpec):
    if cfg.payoff == "bond":
        return [(T, None) for T in cfg.maturities]
    return [(T, off) for T in cfg.maturities for off in cfg.strikes]


def cmd_price(cfg: RunConfig, model: ModelSpec) -> list[list]:
    N = _order(cfg, model)
    x = model.xbar

    def row(pt):
        T, off = pt
        k = 0.0 if off is None else x + off
        pay = _payoff(cfg.payoff, k, x)
        exp = price_expansion(model, pay, cfg.t, T, order=N)
        return [T, "" if off is None else off, *exp.values, price_with_default_floor(exp)]

    header = ["T", "k_minus_x", *[f"u_{n}" for n in range(N + 1)], "total"]
    return [header] + _grid_map(row, _points(cfg, model), cfg.workers)


def cmd_smile(cfg: RunConfig, model: ModelSpec) -> list[list]:
    if cfg.payoff == "bond":
        raise CapabilityError("implied volatility is defined for call and put payoffs only")
    N = _order(cfg, model)
    x = model.xbar

    def row(pt):
        T, off = pt
        exp = price_expansion(model, _payoff(cfg.payoff, x + off, x), cfg.t, T, order=N)
        iv = iv_expand(exp)
        return [T, off, *iv.terms, iv.total]

    header = ["T", "k_minus_x", *[f"sigma_{n}" for n in range(N + 1)], "total"]
    return [header] + _grid_map(row, _points(cfg, model), cfg.workers)


def cmd_yield(cfg: RunConfig, model: ModelSpec) -> list[list]:
    N = _order(cfg, model)

    def row(T):
        exp = price_expansion(model, PayoffSpec.bond(), cfg.t, T, order=N)
        return [T, *(bond_yield(exp, n) for n in range(N + 1))]

    header = ["T", *[f"yield_{n}" for n in range(N + 1)]]
    return [header] + _grid_map(row, list(cfg.maturities), cfg.workers)


def cmd_validate(cfg: RunConfig, model: ModelSpec) -> list[list]:
    N = _order(cfg, model)
    x, y = model.xbar, model.ybar
    mc = MCConfig(paths=cfg.paths, seed=cfg.seed, steps_per_year=cfg.steps_per_year,
                  workers=cfg.workers, batch_size=min(20_000, cfg.paths + cfg.paths % 2))
    if cfg.payoff == "bond":
        header = ["T", "mc_price", "mc_stderr", f"approx_price_order_{N}"]
        rows = [header]
        for T in cfg.maturities:
            r = mc_price(model, PayoffSpec.bond(), cfg.t, T, x, y, mc)
            exp = price_expansion(model, PayoffSpec.bond(), cfg.t, T, order=N)
            rows.append([T, r.price_mean, r.std_error, price_with_default_floor(exp)])
        return rows
    if model.has_default:
        raise CapabilityError(
            "implied volatility needs gamma = 0 (no default); use --payoff bond or the price command")
    header = ["T", "strike_offset", "mc_iv", "mc_stderr", f"approx_iv_order_{N}"]
    rows = [header]
    for T, off in _points(cfg, model):
        pay = _payoff(cfg.payoff, x + off, x)
        r = mc_price(model, pay, cfg.t, T, x, y, mc)
        iv = iv_expand(price_expansion(model, pay, cfg.t, T, order=N))
        rows.append([T, off, r.implied_vol, r.iv_std_error, iv.total])
    return rows


def cmd_expand(cfg: RunConfig, model: ModelSpec) -> str:
    N = _order(cfg, model)
    if N < 1:
        raise ValueError("expand needs --order >= 1")
    return build_Ln(model, N).dump()


COMMANDS = {"price": cmd_price, "smile": cmd_smile, "yield": cmd_yield,
            "validate": cmd_validate, "expand": cmd_expand}


def to_csv(rows: list[list]) -> str:
    return "".join(",".join(c if isinstance(c, str) else _fmt(c) for c in r) + "\n" for r in rows)


def run(cfg: RunConfig) -> str:
    model = load_model(cfg.model)
    out = COMMANDS[cfg.command](cfg, model)
    return out if isinstance(out, str) else to_csv(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lsvtaylor", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--model", required=True, help="model file (key = value)")
    p.add_argument("--order", type=int, help="expansion order N (default: the model file's)")
    p.add_argument("--payoff", choices=PAYOFFS, default="call",
                   help="otm picks a put below the spot and a call at or above it")
    p.add_argument("--strikes", type=parse_grid, default=(0.0,),
                   help="log-strike offsets k - x: 'a,b,c' or 'start:stop:step'")
    p.add_argument("--maturities", type=parse_grid, default=(0.25,), help="maturities T")
    p.add_argument("--t", type=float, default=0.0, help="valuation time")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--steps-per-year", type=int, default=250)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output file (default stdout)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.model, args.order, args.payoff, tuple(args.strikes),
                        tuple(args.maturities), args.t, args.paths, args.seed, args.steps_per_year,
                        args.workers, args.out)
        text = run(cfg)
    except CapabilityError as e:
        print(f"lsvtaylor: capability limit: {e}", file=sys.stderr)
        return 3
    except (ModelError, NumericError, DomainError, ValueError, OSError) as e:
        print(f"lsvtaylor: error: {e}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

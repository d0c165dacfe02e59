"""``jumphedge`` command line.

Exit codes: 0 success, 1 failed verification, 2 invalid input (one line on
stderr), 64 usage error.  Output goes to ``--out``, else the config's
``[output] path``, else ``$JUMPHEDGE_OUTPUT_DIR/<command>.csv``, else stdout.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
from typing import Optional

import numpy as np

from ..errors import JumpHedgeError
from ..hedging import HedgeCurve, delta_hedge, marginal_optimal_hedge, minimal_variance_hedge
from ..invest import Amount
from ..measure import hedge_weights, market_price_of_risk_alpha
from ..oracle.montecarlo import McSpec
from ..oracle.report import all_passed, run_verification, write_report_stream
from ..pricing import GridSpec, implied_vol, solve_pide
from ..pricing.strikes import implied_vols, prices_across_strikes
from .config import METHODS, RunConfig, load_config
from .figures import FIGURES, reproduce_figure

OUTPUT_ENV = "JUMPHEDGE_OUTPUT_DIR"
EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_USAGE = 0, 1, 2, 64
SIGNED_WARNING = "warning: minimal-variance measure is signed (negative adjusted intensity); values may be negative"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _range(text: str) -> np.ndarray:
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise UsageError(f"empty range {text!r}")
    return a + step * np.arange(int(np.floor((b - a) / step + 1e-9)) + 1)


def _destination(args, cfg: Optional[RunConfig], default_name: str) -> Optional[str]:
    if getattr(args, "out", None):
        return args.out
    if cfg is not None and cfg.output:
        return cfg.output
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return os.path.join(env, default_name)
    return None


@contextlib.contextmanager
def _open_out(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        yield fh


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _warn_if_signed(measure) -> None:
    if measure.signed:
        print(SIGNED_WARNING, file=sys.stderr)


def cmd_invest(args) -> int:
    cfg = load_config(args.config)
    market = cfg.market()
    inv = cfg.investment()
    rows = [("mu", market.mu), ("mu_tilde", market.mu_tilde)]
    if isinstance(inv, Amount):
        rows += [("pi_bar", inv.pi_bar), ("amount", inv.amount)]
    else:
        rows.append(("pi_tilde", inv.pi_tilde))
    rows.append(("alpha_minvar", market_price_of_risk_alpha(market)))
    with _open_out(_destination(args, cfg, "invest.csv")) as fh:
        w = _writer(fh)
        w.writerow(["quantity", "value"])
        for k, v in rows:
            w.writerow([k, repr(float(v))])
    return EXIT_OK


def cmd_price(args) -> int:
    cfg = load_config(args.config)
    method = args.method or cfg.method
    market = cfg.market()
    measure = cfg.measure(method)
    _warn_if_signed(measure)
    spot = args.spot if args.spot is not None else cfg.spot
    strikes = _range(args.strikes) if args.strikes else np.array([cfg.strike])
    prices = prices_across_strikes(measure, market, cfg.claim_kind, strikes, spot, cfg.maturity, cfg.grid)
    vols = implied_vols(prices, spot, strikes, market.rate, cfg.maturity, cfg.claim_kind)
    with _open_out(_destination(args, cfg, "price.csv")) as fh:
        w = _writer(fh)
        w.writerow(["strike", "moneyness_k_over_s", "moneyness_s_over_k", "price", "implied_vol"])
        for k, p, v in zip(strikes, prices, vols):
            w.writerow([repr(float(k)), repr(float(k / spot)), repr(float(spot / k)), repr(float(p)), repr(float(v))])
    return EXIT_OK


def cmd_hedge(args) -> int:
    cfg = load_config(args.config)
    method = args.method or cfg.method
    market = cfg.market()
    claim = cfg.claim()
    measure = cfg.measure(method)
    _warn_if_signed(measure)
    grid = GridSpec.default(claim, market.jumps.z, **cfg.grid)
    sol = solve_pide(measure, claim, market, grid)
    if method == "merton":
        curve = delta_hedge(sol)
    elif method == "minvar":
        curve = minimal_variance_hedge(sol, market)
    else:
        curve = marginal_optimal_hedge(sol, market, hedge_weights(market, cfg.pricing_method(method)))
    s = _range(args.s_range) if args.s_range else cfg.strike * np.linspace(0.5, 2.0, 31)
    sampled = HedgeCurve.from_units(s, curve.at(s), curve.label)
    with _open_out(_destination(args, cfg, "hedge.csv")) as fh:
        _write_hedge_rows([sampled], fh)
    return EXIT_OK


def _write_hedge_rows(curves, fh) -> None:
    w = _writer(fh)
    w.writerow(["s", "units_of_asset", "wealth_in_asset", "label"])
    for c in curves:
        for s, u, x in zip(c.s, c.units_of_asset, c.wealth_in_asset):
            w.writerow([repr(float(s)), repr(float(u)), repr(float(x)), c.label])


def cmd_implied_vol(args) -> int:
    vol = implied_vol(args.price, args.spot, args.strike, args.rate, args.maturity, args.kind)
    with _open_out(_destination(args, None, "implied_vol.csv")) as fh:
        w = _writer(fh)
        w.writerow(["price", "spot", "strike", "maturity", "rate", "kind", "implied_vol"])
        w.writerow([repr(args.price), repr(args.spot), repr(args.strike), repr(args.maturity), repr(args.rate), args.kind, repr(vol)])
    return EXIT_OK


def cmd_verify(args) -> int:
    mc = McSpec(n_paths=args.paths, seed=args.seed)
    checks = run_verification(include_lattice=not args.quick, mc=mc)
    with _open_out(_destination(args, None, "verify.csv")) as fh:
        write_report_stream(checks, fh)
    for c in checks:
        if not c.passed:
            print(f"check failed: {c.check}", file=sys.stderr)
    return EXIT_OK if all_passed(checks) else EXIT_FAILED


def cmd_figures(args) -> int:
    names = list(FIGURES) if args.name == "all" else [args.name]
    base = os.environ.get(OUTPUT_ENV, ".")
    for name in names:
        if args.name == "all":
            path = os.path.join(args.out or base, f"{name}.csv")
        else:
            path = args.out or os.path.join(base, f"{name}.csv")
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        reproduce_figure(name, path)
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jumphedge", description="Price and hedge European claims on a jump-diffusion asset.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("invest", help="optimal investment for the configured market and utility")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_invest)

    p = sub.add_parser("price", help="prices and implied vols across strikes")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--strikes", help="start:stop:step")
    p.add_argument("--spot", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("hedge", help="hedge curve in units of the asset")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--s-range", dest="s_range", help="start:stop:step")
    p.add_argument("--out")
    p.set_defaults(func=cmd_hedge)

    p = sub.add_parser("implied-vol", help="Black-Scholes implied volatility of a price")
    p.add_argument("--price", type=float, required=True)
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--kind", choices=("put", "call"), default="put")
    p.add_argument("--out")
    p.set_defaults(func=cmd_implied_vol)

    p = sub.add_parser("verify", help="cross-check pricers against the oracles")
    p.add_argument("--quick", action="store_true", help="skip the lattice check")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=McSpec().seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figures", help="write the data behind a figure")
    p.add_argument("--name", required=True, choices=list(FIGURES) + ["all"])
    p.add_argument("--out", help="CSV path (a directory with --name all)")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"jumphedge {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (JumpHedgeError, ValueError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

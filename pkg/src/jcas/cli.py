"""Command-line entry point: ``jcas {region,exponents,rates,verify,simulate}``."""

from __future__ import annotations

import argparse
import configparser
import io
import json
import sys
import time
from typing import Any, Sequence

from .errors import CapabilityError, DomainError, NumericalDomainError

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

CSV_HEADER = "lambda,n_s,n_m,rate_nats,exponent_nats,frontier"

DEFAULTS: dict[str, Any] = {
    "eta": 0.99,
    "n_th": 1e4,
    "n": 10.0,
    "n_s": None,
    "n_m": None,
    "lam": None,
    "lambda_grid": 101,
    "split_grid": 51,
    "ea_mode": "closed",
    "ua_mode": "bound",
    "dims": None,
    "copies": None,
    "trials": 100000,
    "seed": 0,
    "out": None,
    "baseline_out": None,
    "tail_eps": None,
    "suite": "all",
    "hypotheses": "position",
    "means": None,
    "m": 3,
}

# config keys and how to parse them; every command flag except --config
CONFIG_TYPES: dict[str, Any] = {
    "eta": float,
    "n_th": float,
    "n": float,
    "n_s": float,
    "n_m": float,
    "lam": float,
    "lambda_grid": int,
    "split_grid": int,
    "ea_mode": str,
    "ua_mode": str,
    "dims": str,
    "copies": str,
    "trials": int,
    "seed": int,
    "out": str,
    "baseline_out": str,
    "tail_eps": float,
    "suite": str,
    "hypotheses": str,
    "means": str,
    "m": int,
}
CONFIG_ALIASES = {"lambda": "lam"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _add_channel(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, help="transmissivity in (0, 1]")
    p.add_argument("--n-th", dest="n_th", type=float, help="received thermal photon number")
    p.add_argument("--n", type=float, help="photon budget N")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--tail-eps", dest="tail_eps", type=float, help="photon-number tail tolerance for Fock computations")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jcas", description="Rate/exponent trade-offs for joint communication and sensing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("region", help="sweep lambda and the power split; write the point set as CSV")
    _add_channel(p)
    _add_common(p)
    p.add_argument("--lambda-grid", dest="lambda_grid", type=int)
    p.add_argument("--split-grid", dest="split_grid", type=int)
    p.add_argument("--ea-mode", dest="ea_mode", choices=["closed", "fock"])
    p.add_argument("--ua-mode", dest="ua_mode", choices=["bound", "fock"])
    p.add_argument("--baseline-out", dest="baseline_out", help="also write the time-sharing baseline CSV")

    for name, text in (("exponents", "sensing exponents, exact and approximate"), ("rates", "communication rates")):
        p = sub.add_parser(name, help=text)
        _add_channel(p)
        _add_common(p)
        p.add_argument("--n-s", dest="n_s", type=float, help="TMSV photons of the sensing split (default N - n_m)")
        p.add_argument("--n-m", dest="n_m", type=float, help="displacement power of the sensing split (default 0)")
        p.add_argument("--lambda", dest="lam", type=float, help="also report the combined operating point")
        p.add_argument("--ea-mode", dest="ea_mode", choices=["closed", "fock"])
        p.add_argument("--ua-mode", dest="ua_mode", choices=["bound", "fock"])
        if name == "rates":
            p.add_argument("--dims", help="receiver,idler,environment cutoffs for --ea-mode fock")

    p = sub.add_parser("verify", help="run oracle suites; nonzero exit on any breach")
    p.add_argument("--suite", choices=["chernoff", "fock", "gaussian", "region", "all"])
    p.add_argument("--config")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte-Carlo MAP discrimination and exponent fit")
    _add_channel(p)
    _add_common(p)
    p.add_argument("--hypotheses", choices=["position", "pair"], help="position problem from the channel, or a thermal pair")
    p.add_argument("--means", help="two thermal means for --hypotheses pair, e.g. 0.1,1")
    p.add_argument("--m", type=int, help="number of positions")
    p.add_argument("--copies", help="comma-separated copy counts (default: chosen from the analytic exponent)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    return parser


def _read_config(path: str) -> dict[str, Any]:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        # the [run] header is optional
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        cp.read_string(text, source=path)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path!r}: {exc}") from exc
    extra = [name for name in cp.sections() if name != "run"]
    if extra:
        raise UsageError(f"unknown config section {extra[0]!r} in {path}; use [run]")
    out: dict[str, Any] = {}
    for raw_key, raw in cp["run"].items():
        key = raw_key.strip().replace("-", "_")
        key = CONFIG_ALIASES.get(key, key)
        if key not in CONFIG_TYPES:
            raise UsageError(f"unknown config key {raw_key!r} in {path}")
        try:
            out[key] = CONFIG_TYPES[key](raw.strip())
        except ValueError as exc:
            raise UsageError(f"config key {raw_key!r}: cannot parse {raw!r}") from exc
    return out


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge flags over config-file values over defaults."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    known = set(vars(args))
    for key in cfg:
        if key not in known:
            raise UsageError(f"config key {key!r} does not apply to '{args.command}'")
    opts = dict(DEFAULTS)
    opts.update(cfg)
    opts.update({k: v for k, v in vars(args).items() if v is not None and k in DEFAULTS})
    opts["command"] = args.command
    return opts


def _int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"{flag}: expected comma-separated integers, got {text!r}") from exc
    if not vals:
        raise UsageError(f"{flag}: empty list")
    return vals


def _channel(opts: dict[str, Any]):
    from .scenario import ChannelParams

    try:
        return ChannelParams(opts["eta"], opts["n_th"], opts["n"])
    except DomainError as exc:
        raise UsageError(f"--eta/--n-th/--n: {exc}") from exc


def _split(opts: dict[str, Any], params):
    from .scenario import ResourceSplit

    n_m = 0.0 if opts["n_m"] is None else opts["n_m"]
    n_s = max(params.n_total - n_m, 0.0) if opts["n_s"] is None else opts["n_s"]
    lam = 0.0 if opts["lam"] is None else opts["lam"]
    try:
        split = ResourceSplit(lam, n_s, n_m)
        split.check(params)
    except DomainError as exc:
        raise UsageError(f"--lambda/--n-s/--n-m: {exc}") from exc
    return split


def _record(name: str, value: float, units: str, params: dict[str, Any]) -> dict[str, Any]:
    return {"name": name, "value": float(value), "units": units, "params": params}


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json(records: list[dict[str, Any]]) -> str:
    return json.dumps(records, indent=2, sort_keys=True) + "\n"


def _channel_dict(params) -> dict[str, Any]:
    return {"eta": params.eta, "n_th": params.n_th, "n": params.n_total}


def points_csv(points, frontier_indices=()) -> str:
    flags = set(frontier_indices)
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for i, p in enumerate(points):
        row = [_fmt(p.lam), _fmt(p.n_s), _fmt(p.n_m), _fmt(p.rate), _fmt(p.exponent), "1" if i in flags else "0"]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def cmd_region(opts: dict[str, Any]) -> int:
    from .region import build_region, dominance_report, time_sharing_baseline

    params = _channel(opts)
    if opts["lambda_grid"] < 2 or opts["split_grid"] < 2:
        raise UsageError("--lambda-grid and --split-grid must be >= 2")
    t0 = time.perf_counter()
    points, frontier = build_region(
        params, opts["lambda_grid"], opts["split_grid"], opts["ea_mode"], opts["ua_mode"], opts["tail_eps"]
    )
    _emit(points_csv(points, frontier.indices), opts["out"])
    baseline = time_sharing_baseline(params, opts["lambda_grid"], opts["ea_mode"], opts["ua_mode"])
    if opts["baseline_out"]:
        _emit(points_csv(baseline, range(len(baseline))), opts["baseline_out"])
    rep = dominance_report(frontier, baseline)
    print(
        f"{len(points)} points, {len(frontier.points)} on the frontier, "
        f"{time.perf_counter() - t0:.1f} s; margin over time-sharing {rep.max_margin:.6g} nats"
        + (" (partial exponent overlap)" if rep.partial_overlap else ""),
        file=sys.stderr,
    )
    if rep.witness is not None:
        w = rep.witness
        print(f"witness lambda={w.lam:.6g} n_s={w.n_s:.6g} n_m={w.n_m:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_exponents(opts: dict[str, Any]) -> int:
    from .scenario import ScenarioContext, e_nqi, e_qi_d

    params = _channel(opts)
    split = _split(opts, params)
    base = _channel_dict(params)
    sp = dict(base, n_s=split.n_s, n_m=split.n_m)
    recs = [
        _record("e_nqi_exact", e_nqi(params, "exact"), "nats/copy", base),
        _record("e_nqi_approx", e_nqi(params, "approx"), "nats/copy", base),
        _record("e_qi_d_exact", e_qi_d(params, split, "exact"), "nats/copy", sp),
        _record("e_qi_d_approx", e_qi_d(params, split, "approx"), "nats/copy", sp),
    ]
    if opts["lam"] is not None:
        pt = ScenarioContext(params, opts["ea_mode"], opts["ua_mode"], opts["tail_eps"]).profile(split.n_s, split.n_m).point(split.lam)
        recs.append(_record("combined_exponent", pt.exponent, "nats/copy", dict(sp, **{"lambda": split.lam})))
    _emit(_json(recs), opts["out"])
    return EXIT_OK


def cmd_rates(opts: dict[str, Any]) -> int:
    from .fock import ea_psk_holevo, ua_psk_holevo
    from .scenario import ScenarioContext, c_ea, r_ua

    params = _channel(opts)
    split = _split(opts, params)
    base = _channel_dict(params)
    sp = dict(base, n_s=split.n_s, n_m=split.n_m)
    tail = {} if opts["tail_eps"] is None else {"tail_eps": opts["tail_eps"]}
    recs = [
        _record("c_ea", c_ea(params), "nats/mode", base),
        _record("r_ua", r_ua(params, split), "nats/mode", sp),
        _record("chi_ua_exact", ua_psk_holevo(params.eta, split.n_s, split.n_m, params.n_th, **tail), "nats/mode", sp),
    ]
    if opts["ea_mode"] == "fock":
        dims = None
        if opts["dims"]:
            d = _int_list(opts["dims"], "--dims")
            if len(d) != 3:
                raise UsageError("--dims: expected receiver,idler,environment cutoffs")
            dims = tuple(d)
        chi = ea_psk_holevo(params.eta, params.n_total, params.n_th, dims=dims, **tail)
        recs.append(_record("chi_ea_exact", chi, "nats/mode", base))
    if opts["lam"] is not None:
        pt = ScenarioContext(params, opts["ea_mode"], opts["ua_mode"], opts["tail_eps"]).profile(split.n_s, split.n_m).point(split.lam)
        recs.append(_record("combined_rate", pt.rate, "nats/mode", dict(sp, **{"lambda": split.lam})))
    _emit(_json(recs), opts["out"])
    return EXIT_OK


def cmd_verify(opts: dict[str, Any]) -> int:
    from .checks import run_suites

    results = run_suites(opts["suite"])
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} [{r.suite}] {r.name}: {r.value:.3e} (tol {r.tolerance:.1e})")
    _emit("\n".join(lines) + "\n", opts["out"])
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def cmd_simulate(opts: dict[str, Any]) -> int:
    from .chernoff import log_qs_thermal_closed, mary_exponent, optimize_exponent
    from .fock import thermal_pmf, thermal_tail_dim
    from .gaussian import make_thermal, tensor
    from .region import thread_count
    from .verify import copies_grid, mc_discrimination, position_hypotheses, slope_fit

    if opts["trials"] < 1:
        raise UsageError("--trials must be >= 1")
    if opts["hypotheses"] == "pair":
        if not opts["means"]:
            raise UsageError("--means is required with --hypotheses pair")
        try:
            a, b = (float(x) for x in opts["means"].split(","))
        except ValueError as exc:
            raise UsageError(f"--means: expected two comma-separated numbers, got {opts['means']!r}") from exc
        if a < 0 or b < 0:
            raise UsageError("--means: thermal means must be >= 0")
        dim = thermal_tail_dim(max(a, b), 1e-13) + 1
        pa, pb = thermal_pmf(a, dim), thermal_pmf(b, dim)
        hyps = [pa / pa.sum(), pb / pb.sum()]
        analytic = optimize_exponent(lambda s: log_qs_thermal_closed(a, b, s), log_domain=True).exponent
        setup: dict[str, Any] = {"hypotheses": "pair", "means": [a, b]}
    else:
        params = _channel(opts)
        if opts["m"] < 2:
            raise UsageError("--m must be >= 2")
        n_target = (1.0 - params.eta) * params.n_total + params.n_th
        hyps = position_hypotheses(n_target, params.n_th, opts["m"])
        # all position pairs share the same exponent; any pair gives the m-ary value
        pair = [tensor(make_thermal(n_target), make_thermal(params.n_th)), tensor(make_thermal(params.n_th), make_thermal(n_target))]
        analytic = mary_exponent(pair)[1]
        setup = dict(_channel_dict(params), hypotheses="position", m=opts["m"])
    if analytic <= 0:
        raise UsageError("hypotheses are identical; nothing to simulate")
    copies = _int_list(opts["copies"], "--copies") if opts["copies"] else copies_grid(analytic, opts["trials"])
    if any(c < 1 for c in copies):
        raise UsageError("--copies: counts must be >= 1")
    threads = thread_count()
    ests = [mc_discrimination(hyps, n, opts["trials"], opts["seed"], threads) for n in copies]
    setup.update(trials=opts["trials"], seed=opts["seed"], copies=copies)
    recs = [
        _record(f"map_error_n{e.copies}", e.error_rate, "probability", dict(setup, half_width=e.half_width, copies=e.copies))
        for e in ests
    ]
    recs.append(_record("analytic_exponent", analytic, "nats/copy", setup))
    try:
        fit = slope_fit(ests)
        recs.append(_record("fitted_exponent", fit.slope, "nats/copy", dict(setup, stderr=fit.stderr, points=fit.points)))
        rel = abs(fit.slope - analytic) / analytic
        print(f"fitted {fit.slope:.6g} +- {fit.stderr:.2g} vs analytic {analytic:.6g} ({100 * rel:.1f}%)", file=sys.stderr)
    except DomainError as exc:
        print(f"slope fit skipped: {exc}", file=sys.stderr)
    _emit(_json(recs), opts["out"])
    return EXIT_OK


COMMANDS = {
    "region": cmd_region,
    "exponents": cmd_exponents,
    "rates": cmd_rates,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = resolve(args)
        return COMMANDS[opts["command"]](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (CapabilityError, NumericalDomainError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``qdisc verify`` and ``qdisc compute``.

Elements are given as JSON.  A bare list ``[[j, k, "c"], ...]`` is the
normal-ordered polynomial ``sum c z^j z*^k``; an object
``{"order": "normal" | "anti_normal" | "mixed", "terms": [...]}`` selects the
ordering, with mixed terms ``[j, n, k, "c"]`` for ``c z^j f_n z*^k``.
All numbers in reports are exact ``"p/q"`` strings.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .bergman import WeightedSpace, gram
from .berezin import berezin, p_poly
from .checks import SUITES, RunConfig, run_verify
from .discrep import ANTI_NORMAL, NORMAL, ConventionSet, MixedElement, OrderedElement
from .errors import ConfigInvalid, QDiscError, TruncationTooSmall
from .qscalar import exact, fmt
from .starprod import c_series, star_operator_route

FIELDS = ("q", "t", "nt", "m", "nf", "s", "convention", "suites", "seed")


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        unknown = set(data) - set(FIELDS)
        if unknown:
            raise ConfigInvalid(f"unknown config fields: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "suites" in data and isinstance(data["suites"], str):
        data["suites"] = [data["suites"]]
    cfg = RunConfig(**{k: (tuple(v) if k == "suites" else v) for k, v in data.items()})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        q = exact(cfg.q)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"q is not a rational: {cfg.q!r}") from exc
    if not 0 < q < 1:
        raise ConfigInvalid("q must lie in (0, 1)")
    if cfg.t != "formal":
        try:
            t = exact(cfg.t)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"t is not a rational: {cfg.t!r}") from exc
        if not 0 < t < 1:
            raise ConfigInvalid("t must lie in (0, 1)")
    for name in ("nt", "m", "nf", "s"):
        if int(getattr(cfg, name)) < 1:
            raise ConfigInvalid(f"{name} must be >= 1")
    for s in cfg.suites:
        if s != "all" and s not in SUITES:
            raise ConfigInvalid(f"unknown suite {s!r}; choose from {sorted(SUITES)} or 'all'")
    if cfg.convention != "calibrate":
        try:
            ConventionSet.parse(cfg.convention)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from exc


def parse_element(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"element is not valid JSON: {exc}") from exc
    order, terms = NORMAL, data
    if isinstance(data, dict):
        order, terms = data.get("order", NORMAL), data.get("terms", [])
    try:
        if order == "mixed":
            return MixedElement({(int(j), int(n), int(k)): exact(str(c)) for j, n, k, c in terms})
        if order not in (NORMAL, ANTI_NORMAL):
            raise ConfigInvalid(f"unknown order {order!r}")
        return OrderedElement({(int(j), int(k)): exact(str(c)) for j, k, c in terms}, order)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"malformed terms: {exc}") from exc


def render(e) -> dict:
    if isinstance(e, MixedElement):
        return {
            "order": "mixed",
            "exact_columns": None if e.n_max is None else e.n_max + 1,
            "terms": [[j, n, k, fmt(v)] for (j, n, k), v in sorted(e.terms.items())],
        }
    return {
        "order": e.order,
        "exact_below": e.exact_below,
        "terms": [[j, k, fmt(v)] for (j, k), v in sorted(e.coeffs.items())],
    }


def _space(cfg: RunConfig) -> WeightedSpace:
    if cfg.t == "formal":
        return WeightedSpace.formal(cfg.q, cfg.nt, cfg.m)
    return WeightedSpace(cfg.q, exact(cfg.t), cfg.m)


def compute(cfg: RunConfig, what: str, args) -> dict:
    q = exact(cfg.q)
    if what == "star":
        f1, f2 = parse_element(args.f1), parse_element(args.f2)
        payload = render(star_operator_route(f1, f2, q, cfg.nt))
    elif what == "berezin":
        f = parse_element(args.f)
        payload = render(berezin(f, _space(cfg), "trace", n_max=cfg.nf))
    elif what == "table":
        lo, hi = args.lo, args.hi
        if args.table == "c-series":
            cs = c_series(hi, q, cfg.nt)
            payload = {str(k): fmt(cs[k]) for k in range(lo, hi + 1)}
        elif args.table == "p-poly":
            payload = {str(j): [fmt(c) for c in p_poly(j, q).coeffs] for j in range(lo, hi + 1)}
        else:
            sp = _space(cfg)
            payload = {str(m): fmt(gram(m, sp)) for m in range(lo, hi + 1)}
    else:
        raise ConfigInvalid(f"unknown computation {what!r}")
    return {"version": __version__, "config": cfg.as_dict(), "what": what, "payload": payload}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdisc", description="Exact quantization computations on the quantum disc.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with run configuration")
        p.add_argument("--q", help="deformation parameter, e.g. 7/10")
        p.add_argument("--t", help="weight parameter t in (0,1) or 'formal'")
        p.add_argument("--nt", type=int, help="series order in t")
        p.add_argument("--m", type=int, help="matrix truncation (exact columns)")
        p.add_argument("--nf", type=int, help="radial truncation of symbol expansions")
        p.add_argument("--s", type=int, help="kernel expansion bound")
        p.add_argument("--convention", help="'calibrate' or e.g. right/mirror/after")
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    v = sub.add_parser("verify", help="run verification suites")
    common(v)
    v.add_argument("--suite", action="append", dest="suites", help=f"one of {sorted(SUITES)} or 'all' (repeatable)")

    c = sub.add_parser("compute", help="compute a star product, Berezin transform or table")
    csub = c.add_subparsers(dest="what", required=True)
    st = csub.add_parser("star", help="operator-route star product f1 * f2")
    common(st)
    st.add_argument("--f1", required=True)
    st.add_argument("--f2", required=True)
    bz = csub.add_parser("berezin", help="Berezin transform of a finite or polynomial symbol")
    common(bz)
    bz.add_argument("--f", required=True)
    tb = csub.add_parser("table", help="coefficient tables")
    common(tb)
    tb.add_argument("table", choices=("c-series", "p-poly", "gram"))
    tb.add_argument("--lo", type=int, default=0)
    tb.add_argument("--hi", type=int, default=5)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in FIELDS}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "verify":
            report = run_verify(cfg)
            status = 1 if report["summary"]["failed"] else 0
        else:
            report = compute(cfg, args.what, args)
            status = 0
    except ConfigInvalid as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except TruncationTooSmall as exc:
        print(f"truncation too small (needs {exc.needed}): {exc}", file=sys.stderr)
        return 3
    except QDiscError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 1 mathematical violation, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import serialize
from .martingale import (
    C_DEC,
    atomic_decompose,
    decomposition_to_json,
    dyadic_from_json,
    h1_delta_norm,
    is_atom,
)
from .symbols import (
    IdemSet2D,
    SymbolError,
    build_K_hat,
    build_mu_eps,
    idem_to_json,
    lacunary_check,
    stein_constant,
    system_to_json,
)
from .verify import CHECKS, ESTIMATES, ConfigError, make_config, run_check

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_value(text: str):
    """``--set`` value: JSON if it parses, else a comma list, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [parse_value(part) for part in text.split(",")]
    return text


def parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def parse_signs(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part in ("+", "+1", "1"):
            out.append(1)
        elif part in ("-", "-1"):
            out.append(-1)
        else:
            raise UsageError(f"invalid sign {part!r}")
    return out


def _overrides(args) -> tuple[dict, int | None]:
    over: dict = {}
    seed = None
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        seed = doc.pop("seed", None)
        over.update(doc)
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        over[key.strip()] = parse_value(value)
    if args.seed is not None:
        seed = args.seed
    return over, seed


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(rep, args) -> int:
    text = rep.to_csv() if args.format == "csv" else serialize.dumps(rep.to_json(args.timing))
    _emit(text, args.out)
    status = "PASS" if rep.passed else "FAIL"
    print(f"{rep.lemma}: {status} instances={rep.instances} violations={rep.violations} "
          f"worst_ratio={rep.worst_ratio} estimated_constant={rep.estimated_constant}",
          file=sys.stderr)
    for msg in rep.failures:
        print(f"  {msg}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_check(args) -> int:
    over, seed = _overrides(args)
    cfg = make_config(args.lemma, seed, over, args.jobs)
    return _report(run_check(cfg), args)


def cmd_estimate(args) -> int:
    over, seed = _overrides(args)
    for flag, key, conv in (("d", "d", parse_ints), ("N", "N", parse_ints),
                            ("signs", "signs", parse_signs)):
        value = getattr(args, flag)
        if value is not None:
            over[key] = conv(value)
    for key in ("s", "beta", "K"):
        value = getattr(args, key)
        if value is not None:
            over[key] = value
    cfg = make_config(args.target, seed, over, args.jobs)
    return _report(run_check(cfg, estimate=True), args)


def cmd_build(args) -> int:
    if args.d is None:
        raise UsageError("--d is required")
    d = parse_ints(args.d)
    if args.object == "idem-set":
        if args.N is None:
            raise UsageError("--N is required for idem-set")
        A = IdemSet2D(tuple(d), tuple(parse_ints(args.N)))
        doc = idem_to_json(A)
        if args.contains:
            n1, n2 = parse_ints(args.contains)
            doc["query"] = [n1, n2]
            doc["contains"] = A.contains(n1, n2)
            print("true" if doc["contains"] else "false")
            if args.out:
                _emit(serialize.dumps(doc), args.out)
        else:
            _emit(serialize.dumps(doc), args.out)
        return EXIT_OK
    sys_ = lacunary_check(d)
    if args.object == "mu-eps":
        if args.signs is None:
            raise UsageError("--signs is required for mu-eps")
        mu = build_mu_eps(sys_, parse_signs(args.signs))
    else:
        mu = build_K_hat(sys_)
    doc = system_to_json(sys_, mu)
    doc["object"] = args.object
    doc["stein_constant"] = str(stein_constant(mu))
    _emit(serialize.dumps(doc), args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            f = dyadic_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"cannot read a dyadic function from {args.file}: {exc}") from exc
    dec = atomic_decompose(f)
    err = float(max(abs(a - b) for a, b in zip(dec.reconstruct().values, f.values)))
    total, norm = dec.coefficient_sum(), h1_delta_norm(f)
    doc = decomposition_to_json(dec)
    doc["coefficient_sum"] = total
    doc["h1_norm"] = norm
    doc["ratio"] = total / norm if norm > 0 else None
    doc["C_dec"] = C_DEC
    doc["reconstruction_error"] = err
    doc["atoms_valid"] = all(is_atom(a) for a in dec.atoms)
    _emit(serialize.dumps(doc), args.out)
    stream = sys.stdout if args.out else sys.stderr
    print(f"atoms: {len(dec.atoms)}", file=stream)
    print(f"sum|c_k|: {total:.17g}", file=stream)
    print(f"H1 norm: {norm:.17g}", file=stream)
    print(f"ratio: {doc['ratio'] if doc['ratio'] is None else format(doc['ratio'], '.17g')}",
          file=stream)
    ok = doc["atoms_valid"] and err <= 1e-10 * max(1.0, float(abs(f.values).max()))
    if norm > 0:
        ok = ok and total <= C_DEC * norm * (1 + 1e-12)
    return EXIT_OK if ok else EXIT_VIOLATION


def _common(p: argparse.ArgumentParser, randomized: bool = True) -> None:
    p.add_argument("--out", help="write the result here instead of stdout")
    if not randomized:
        return
    p.add_argument("--config", help="JSON file with parameter overrides (and optionally seed)")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one parameter; repeatable")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timing", action="store_true", help="record runtime_ms in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardymult", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run a verification check")
    p.add_argument("lemma", choices=sorted(CHECKS))
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("estimate", help="estimate an implied constant")
    p.add_argument("target", choices=sorted(ESTIMATES))
    p.add_argument("--d", help="comma-separated sequence d_k")
    p.add_argument("--N", help="comma-separated sequence N_k")
    p.add_argument("--signs", help="comma-separated signs for the stein probe")
    p.add_argument("--s", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--K", type=int)
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("build", help="build a symbol or the idempotent set")
    p.add_argument("object", choices=("mu-eps", "k-hat", "idem-set"))
    p.add_argument("--d", help="comma-separated sequence d_k")
    p.add_argument("--N", help="comma-separated sequence N_k (idem-set)")
    p.add_argument("--signs", help="comma-separated +/- signs (mu-eps)")
    p.add_argument("--contains", metavar="N1,N2", help="membership query (idem-set)")
    _common(p, randomized=False)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("decompose", help="atomic decomposition of a dyadic function")
    p.add_argument("file", help="JSON document {depth, values}")
    _common(p, randomized=False)
    p.set_defaults(func=cmd_decompose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, SymbolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line front end.

A thin client over the service operations: every subcommand builds a request
model, runs the matching handler (in process by default, over HTTP when
--server is given), and prints the response as JSON.  Exit codes: 0 success,
1 invalid input, 2 numerical tolerance failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from pydantic import ValidationError

from .errors import DomainError, ToleranceError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TOLERANCE = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _parse_coeffs(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise DomainError(f"expected three comma-separated coefficients, got {text!r}")
    try:
        a, b, c = (float(p) for p in parts)
    except ValueError:
        raise DomainError(f"non-numeric coefficient in {text!r}") from None
    return {"a": a, "b": b, "c": c}


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("TORIC_KSTAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"TORIC_KSTAB_THREADS must be an integer, got {env!r}") from None
    return 1


# ---------------------------------------------------------------------------
# dispatch: in-process handlers or the HTTP service


def _call(args, op: str, payload: dict | None) -> dict:
    if args.server:
        return _call_http(args.server, op, payload)
    from .service import models, ops

    table = {
        "alpha": (None, lambda _: ops.alpha()),
        "polytope_info": (models.PolytopeInfoRequest, ops.polytope_info),
        "futaki": (models.FutakiRequest, ops.futaki_report),
        "critical": (models.CriticalRaysRequest, ops.critical_rays),
        "df_scan": (models.DfScanRequest, ops.df_scan_report),
        "verify": (models.VerifyRequest, ops.verify),
    }
    model_cls, handler = table[op]
    req = None if model_cls is None else model_cls(**payload)
    return handler(req).model_dump(mode="json")


_ROUTES = {
    "alpha": ("GET", "/alpha"),
    "polytope_info": ("POST", "/polytope/info"),
    "futaki": ("POST", "/functionals/futaki"),
    "critical": ("POST", "/critical-rays"),
    "df_scan": ("POST", "/df-scan"),
    "verify": ("POST", "/verify"),
}


def _call_http(server: str, op: str, payload: dict | None) -> dict:
    import httpx

    method, route = _ROUTES[op]
    url = server.rstrip("/") + route
    try:
        if method == "GET":
            resp = httpx.get(url, timeout=600.0)
        else:
            resp = httpx.post(url, json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach {url}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO) from None
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        body = {}
    kind = body.get("kind", "")
    message = body.get("message", resp.text)
    print(f"error: {message}", file=sys.stderr)
    if kind == "tolerance":
        raise SystemExit(EXIT_TOLERANCE)
    if kind == "domain" or resp.status_code in (400, 422):
        raise SystemExit(EXIT_INVALID)
    raise SystemExit(EXIT_IO)


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_alpha(args) -> int:
    resp = _call(args, "alpha", None)
    # timing fields stay in the service payload but not in the printed JSON,
    # which is required to be byte-identical across reruns
    resp.pop("runtime_ms", None)
    _print_json(resp)
    return EXIT_OK


def _cmd_delta_p_critical(args) -> int:
    payload = {"p": args.p, "n": args.n, "multistart": args.multistart}
    resp = _call(args, "critical", payload)
    resp.pop("runtime_s", None)
    _print_json(resp)
    return EXIT_OK


def _cmd_delta_p_df_scan(args) -> int:
    payload = {
        "polytope": {"p": args.p},
        "n": args.n,
        "grid": args.grid,
        "threads": _threads(args),
    }
    if args.f is not None:
        payload["f"] = _parse_coeffs(args.f)
    else:
        payload["branch"] = args.branch
    resp = _call(args, "df_scan", payload)
    with open(args.out, "w", newline="") as fh:
        fh.write(resp["csv"])
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(resp["report"], fh, indent=2)
            fh.write("\n")
    report = resp["report"]
    summary = {
        "verdict": report["verdict"],
        "message": report["message"],
        "minimum": report["minimum"],
        "csv": args.out,
        "rows": sum(t["grid"] ** 2 for t in report["cases"]),
    }
    _print_json(summary if args.report else {**summary, "report": report})
    return EXIT_OK


def _cmd_polytope_futaki(args) -> int:
    try:
        with open(args.file) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"error: {args.file}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not isinstance(data, dict) or "vertices" not in data:
        print(f"error: {args.file}: expected an object with a 'vertices' key", file=sys.stderr)
        return EXIT_INVALID
    payload = {
        "polytope": {"vertices": data["vertices"]},
        "f": _parse_coeffs(args.f),
        "n": args.n,
        "sigma": args.sigma,
    }
    _print_json(_call(args, "futaki", payload))
    return EXIT_OK


def _cmd_verify(args) -> int:
    resp = _call(args, "verify", {"suite": args.suite})
    for check in resp["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        extra = f"  ({check['detail']})" if check["detail"] else ""
        print(
            f"[{status}] {check['name']}: worst {check['worst']:.3e} "
            f"vs tol {check['tol']:.1e}{extra}"
        )
    if resp["all_passed"]:
        print(f"suite {args.suite}: all {len(resp['checks'])} checks passed")
        return EXIT_OK
    failed = sum(1 for c in resp["checks"] if not c["passed"])
    print(f"suite {args.suite}: {failed} of {len(resp['checks'])} checks FAILED")
    return EXIT_TOLERANCE


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("toric_kstab.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="toric-kstab", description=__doc__)
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    parser.add_argument(
        "--threads",
        type=int,
        help="worker threads for scans (default: TORIC_KSTAB_THREADS or 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("alpha", help="print the quartic root bounding the case (c) family")

    dp = sub.add_parser("delta-p", help="operations on the one-parameter quadrilateral")
    dp.add_argument("--p", type=float, required=True, help="blow-up parameter in (0, 1)")
    dp_sub = dp.add_subparsers(dest="dp_command", required=True)
    crit = dp_sub.add_parser("critical", help="find all critical rays by multistart search")
    crit.add_argument("--n", type=float, default=4.0)
    crit.add_argument("--multistart", type=int, default=200)
    scan = dp_sub.add_parser("df-scan", help="six-case DF scan and stability verdict")
    group = scan.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--branch",
        choices=["a", "b_plus", "b_minus", "c_plus", "c_minus"],
        help="closed-form critical family for the potential",
    )
    group.add_argument("--f", help="explicit potential coefficients a,b,c")
    scan.add_argument("--n", type=float, default=4.0)
    scan.add_argument("--grid", type=int, default=33)
    scan.add_argument("--out", required=True, help="CSV output path")
    scan.add_argument("--report", help="JSON report output path")

    poly = sub.add_parser("polytope", help="operations on an explicit polytope")
    poly.add_argument("--file", required=True, help='JSON file {"vertices": [[x,y], ...]}')
    poly_sub = poly.add_subparsers(dest="poly_command", required=True)
    fut = poly_sub.add_parser("futaki", help="Futaki invariant, constants, and EH value")
    fut.add_argument("--f", required=True, help="potential coefficients a,b,c")
    fut.add_argument("--n", type=float, default=4.0)
    fut.add_argument(
        "--sigma",
        choices=["lattice", "euclidean"],
        default="lattice",
        help="boundary measure (default: lattice)",
    )

    ver = sub.add_parser("verify", help="run a cross-checking suite")
    ver.add_argument("--suite", required=True, choices=["identities", "abreu", "slice"])

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "alpha":
            return _cmd_alpha(args)
        if args.command == "delta-p":
            if args.dp_command == "critical":
                return _cmd_delta_p_critical(args)
            return _cmd_delta_p_df_scan(args)
        if args.command == "polytope":
            return _cmd_polytope_futaki(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "serve":
            return _cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except (DomainError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ToleranceError as exc:
        print(f"error: numerical tolerance not reached: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

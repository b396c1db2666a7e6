"""Command-line front end.

Every subcommand talks to the HTTP service; by default an in-process
client is used so no server needs to be running, and --server points the
same calls at a remote instance.  Exit codes: 0 success, 1 a verification
check failed, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette warns about its own httpx pin on import; not actionable
        # from here and it would print on every in-process invocation
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _fail(resp) -> int:
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        detail = resp.text
    print(f"error: {detail}", file=sys.stderr)
    return 2


def _read_config(path: str) -> str:
    return Path(path).read_text()


def _cmd_run(args) -> int:
    try:
        text = _read_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    with _make_client(args.server) as client:
        if args.only is not None:
            sections = [args.only]
        else:
            # section discovery happens client-side; the server re-parses,
            # which keeps the endpoint stateless
            from .harness import ConfigError, parse_config_text

            try:
                sections = [c.name for c in parse_config_text(text)]
            except ConfigError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2

        def run_one(name: str):
            return client.post("/run", json={"config": text, "only": name})

        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                responses = list(pool.map(run_one, sections))
        else:
            responses = [run_one(name) for name in sections]

    for resp in responses:
        if resp.status_code != 200:
            return _fail(resp)
        for result in resp.json()["results"]:
            path = out_dir / f"{result['experiment']}.csv"
            path.write_text(result["csv"])
            print(f"wrote {path} ({len(result['rows'])} rows)")
    return 0


def _cmd_verify(args) -> int:
    with _make_client(args.server) as client:
        resp = client.post("/verify", json={"suite": args.suite})
    if resp.status_code != 200:
        return _fail(resp)
    report = resp.json()
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for c in report["checks"]:
            flag = "PASS" if c["passed"] else "FAIL"
            print(f"{flag} {c['suite']}:{c['name']} "
                  f"measured={c['measured']:.6g} "
                  f"threshold={c['threshold']:.6g}  {c['detail']}")
        n_fail = sum(not c["passed"] for c in report["checks"])
        print(f"{len(report['checks'])} checks, {n_fail} failed")
    return 0 if report["passed"] else 1


def _cmd_list(args) -> int:
    with _make_client(args.server) as client:
        resp = client.get(f"/list/{args.kind}")
    if resp.status_code != 200:
        return _fail(resp)
    for item in resp.json()["items"]:
        print(item)
    return 0


def _cmd_er_constants(args) -> int:
    try:
        text = _read_config(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    with _make_client(args.server) as client:
        resp = client.post("/er-constants", json={"config": text})
    if resp.status_code != 200:
        return _fail(resp)
    for row in resp.json()["results"]:
        print(f"{row['experiment']}: delta={row['delta']:.10g} "
              f"sigma_star_sq={row['sigma_star_sq']:.10g}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egvip",
        description="variational-inequality experiment harness",
    )
    parser.add_argument("--server", default=None, metavar="URL",
                        help="send requests to a running server instead of "
                             "executing in process")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute config sections, write CSVs")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--only", default=None,
                       help="run a single named section")
    p_run.set_defaults(fn=_cmd_run)

    p_verify = sub.add_parser("verify", help="run theory checks")
    p_verify.add_argument("--suite", default="all")
    p_verify.add_argument("--json", action="store_true")
    p_verify.set_defaults(fn=_cmd_verify)

    p_list = sub.add_parser("list", help="enumerate a registry")
    p_list.add_argument("kind",
                        choices=("problems", "algorithms", "policies"))
    p_list.set_defaults(fn=_cmd_list)

    p_er = sub.add_parser("er-constants",
                          help="closed-form sampling constants per section")
    p_er.add_argument("--config", required=True)
    p_er.set_defaults(fn=_cmd_er_constants)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

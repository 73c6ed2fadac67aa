"""Command-line entry point: ``leaktwin <command>``.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading
from pathlib import Path

from . import _backend
from .calibration import BOUNDS, CalibrationError, Targets, calibrate
from .config import ConfigError, default_document, load_config
from .simkernel import OVERRIDE_KEYS, run, sweep, write_events, write_summary
from .telemetry.client import MqttClient
from .telemetry.server import IngestServer
from .telemetry.stats import stats
from .telemetry.transport import parse_address

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
DATA_DIR_ENV = "LEAKTWIN_DATA_DIR"

log = logging.getLogger("leaktwin")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fail(code: int, message: str) -> int:
    print(f"leaktwin: {message}", file=sys.stderr)
    return code


def _write_json(obj, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args) -> int:
    params, scenario = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trace_every is not None:
        changes["trace_every"] = args.trace_every
    scenario = scenario.replace(**changes)
    try:
        result = run(scenario, params, args.backend)
    except FloatingPointError as exc:
        return _fail(EXIT_RUNTIME, f"run aborted: {exc}")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.trace.write_csv(out / "trace.csv")
    write_events(result.events, out / "events.jsonl")
    write_summary(result.summary, out / "summary.json")
    s = result.summary
    print(
        f"threshold after {s.t_first_threshold} s, beacons per cycle {s.beacons_per_cycle}, "
        f"brownouts {s.brownouts} -> {out}"
    )

    if args.publish:
        try:
            client = MqttClient.tcp(args.publish, scenario.device_id)
            with client:
                for payload in result.beacon_payloads():
                    client.publish_beacon(scenario.device_id, payload)
        except (OSError, ValueError) as exc:
            return _fail(EXIT_RUNTIME, f"publish to {args.publish} failed: {exc}")
        print(f"published {s.total_beacons} beacons to {args.publish}")

    if s.brownouts:
        return _fail(EXIT_RUNTIME, f"{s.brownouts} brownout(s) during the run")
    return EXIT_OK


def _parse_value(text: str):
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"cannot parse value {text!r}") from None
    if isinstance(value, list):
        return tuple(tuple(p) if isinstance(p, list) else p for p in value)
    return value


def _split_values(text: str) -> list:
    text = text.strip()
    if text.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--values: {exc}") from None
        return [_parse_value(json.dumps(v)) for v in items]
    return [_parse_value(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    if args.param not in OVERRIDE_KEYS:
        raise UsageError(
            f"unknown parameter {args.param!r}; valid names: {', '.join(sorted(OVERRIDE_KEYS))}"
        )
    values = _split_values(args.values)
    params, scenario = load_config(args.config)
    try:
        summaries = sweep(scenario, args.param, values, params, args.backend)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid value for {args.param}: {exc}") from None
    except FloatingPointError as exc:
        return _fail(EXIT_RUNTIME, f"run aborted: {exc}")
    doc = [{"param": args.param, "value": v, **s.to_json()} for v, s in zip(values, summaries)]
    _write_json(doc, args.out)
    for row in doc:
        print(f"{args.param}={row['value']}: beacons {row['beacons_per_cycle']}, "
              f"threshold {row['t_first_threshold']} s")
    return EXIT_OK


def _parse_targets(text: str) -> Targets:
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in ("t", "b") or key in fields:
            raise UsageError(f"malformed --targets {text!r}; expected t=<seconds>,b=<beacons>")
        try:
            fields[key] = float(value) if key == "t" else int(value)
        except ValueError:
            raise UsageError(f"malformed --targets {text!r}; bad number {value!r}") from None
    if set(fields) != {"t", "b"}:
        raise UsageError(f"--targets needs both t and b, got {text!r}")
    try:
        return Targets(fields["t"], fields["b"])
    except ValueError as exc:
        raise UsageError(f"--targets: {exc}") from None


def cmd_calibrate(args) -> int:
    targets = _parse_targets(args.targets)
    free = [p.strip() for p in args.free.split(",") if p.strip()]
    if not free:
        raise UsageError("--free needs at least one parameter")
    unknown = [p for p in free if p not in BOUNDS]
    if unknown:
        raise UsageError(f"cannot calibrate {unknown}; choose from {', '.join(sorted(BOUNDS))}")
    params, scenario = load_config(args.config)
    try:
        result = calibrate(targets, free, scenario, params, ceiling=args.ceiling, backend=args.backend)
        code = EXIT_OK
    except CalibrationError as exc:
        result = exc.best
        code = EXIT_RUNTIME
        print(f"leaktwin: calibration failed: {exc}", file=sys.stderr)
    doc = {**result.to_json(), "targets": {"t_threshold": targets.t_threshold,
                                           "beacons_first_cycle": targets.beacons_first_cycle},
           "converged": code == EXIT_OK}
    _write_json(doc, args.out)
    print(f"residual {result.residual:.3g} with {result.params} -> {args.out}")
    return code


def _data_dir(args) -> str:
    data_dir = args.data_dir or os.environ.get(DATA_DIR_ENV)
    if not data_dir:
        raise UsageError(f"--data-dir is required (or set {DATA_DIR_ENV})")
    return data_dir


def cmd_serve(args) -> int:
    data_dir = _data_dir(args)
    try:
        address = parse_address(args.listen)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        server = IngestServer(address, data_dir)
    except OSError as exc:
        return _fail(EXIT_RUNTIME, f"cannot listen on {args.listen}: {exc}")
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    server.start()
    host, port = server.address
    print(f"listening on {host}:{port}, journal {server.journal.path}", flush=True)
    try:
        stop.wait()
    finally:
        server.stop()
    print(f"stopped after {server.journal.count} beacons", flush=True)
    return EXIT_OK


def cmd_stats(args) -> int:
    result = stats(_data_dir(args), device_id=args.device, since=args.since, clock=args.clock)
    print(json.dumps(result.to_json(), indent=2))
    return EXIT_OK


def cmd_defaults(args) -> int:
    print(json.dumps(default_document(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leaktwin", description="Simulate a battery-free leak sensor and ingest its beacons.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    backends = sorted(_backend.BACKENDS)

    p = sub.add_parser("simulate", help="run one scenario and write trace/events/summary")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--publish", metavar="HOST:PORT", help="also send beacons to an ingestion service")
    p.add_argument("--trace-every", type=float, metavar="S")
    p.add_argument("--backend", choices=backends)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="one run per value of a parameter")
    p.add_argument("--config")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma list or JSON array")
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=backends)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit gap parameters to charge time and beacon count")
    p.add_argument("--config")
    p.add_argument("--targets", default="t=1380,b=8")
    p.add_argument("--free", required=True, help="comma list, e.g. k_derate,i_idle")
    p.add_argument("--out", required=True)
    p.add_argument("--ceiling", type=float, default=0.02)
    p.add_argument("--backend", choices=backends)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("serve", help="run the ingestion service")
    p.add_argument("--listen", default="127.0.0.1:1883")
    p.add_argument("--data-dir")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("stats", help="summarize the ingestion journal")
    p.add_argument("--data-dir")
    p.add_argument("--device")
    p.add_argument("--since", type=float)
    p.add_argument("--clock", choices=("device", "server"), default="device")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("defaults", help="print the default config document")
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        return _fail(EXIT_USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())

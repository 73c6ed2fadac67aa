"""Subprocess helpers for driving the installed command line."""

import contextlib
import re
import signal
import subprocess
import sys


def leaktwin(*args, **kw) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "leaktwin", *map(str, args)],
        capture_output=True,
        text=True,
        timeout=kw.pop("timeout", 120),
        **kw,
    )


@contextlib.contextmanager
def serving(data_dir):
    """Run ``leaktwin serve`` on an ephemeral loopback port; yield "host:port"."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "leaktwin", "serve", "--listen", "127.0.0.1:0", "--data-dir", str(data_dir)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        m = re.search(r"listening on (\S+?):(\d+),", line)
        if not m:
            raise RuntimeError(f"server did not start: {line!r} {proc.stderr.read()}")
        yield f"{m.group(1)}:{m.group(2)}"
    finally:
        proc.send_signal(signal.SIGTERM)
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        proc.stdout.close()
        proc.stderr.close()

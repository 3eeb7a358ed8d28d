"""Command line entry point: calibrate | bake | analyze | serve.

Exit codes: 0 success, 1 input/usage error, 2 processing error (input
was readable but could not be analyzed). Output files are written via a
temp file and atomic rename so a running server never sees a partial
asset.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import os
import socket
import sys
import tempfile
from pathlib import Path

from .audio import parse_wav, resample_linear
from .classify import (
    calibrate,
    classify_stream,
    deserialize_profile,
    serialize_profile,
)
from .errors import InsufficientVoicedFrames, LipSyncError
from .mfcc import MfccConfig, compute_mfcc
from .track import bake, serialize_track


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; our contract reserves 2 for processing."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="lipsync",
                     description="Calibrate, bake and stream viseme tracks.")
    parser.add_argument("--config", metavar="JSON",
                        help="analysis parameter overrides for calibrate "
                             "(bake/analyze take them from the profile)")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="build a phoneme profile from labeled WAVs")
    cal.add_argument("pairs", nargs="+", metavar="LABEL=WAV")
    cal.add_argument("-o", "--output", required=True, metavar="PROFILE")

    bk = sub.add_parser("bake", help="pre-bake a WAV into a .viseme.json track")
    bk.add_argument("audio", metavar="WAV")
    bk.add_argument("profile", metavar="PROFILE")
    bk.add_argument("-o", "--output", required=True, metavar="TRACK")

    an = sub.add_parser("analyze", help="per-frame classification report")
    an.add_argument("audio", metavar="WAV")
    an.add_argument("profile", metavar="PROFILE")
    an.add_argument("--format", choices=("json", "table"), default="table")

    srv = sub.add_parser("serve", help="run the streaming service")
    srv.add_argument("--listen", default=os.environ.get("LIPSYNC_LISTEN", "127.0.0.1:8787"),
                     metavar="HOST:PORT")
    srv.add_argument("--profile-dir", default=os.environ.get("LIPSYNC_PROFILE_DIR"))
    srv.add_argument("--viewer-dir", default=os.environ.get("LIPSYNC_VIEWER_DIR"))
    srv.add_argument("--max-sessions", type=int,
                     default=int(os.environ.get("LIPSYNC_MAX_SESSIONS", "32")))
    return parser


def _write_atomic(path: str, data: bytes) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=target.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _load_config(path: str | None) -> MfccConfig:
    config = MfccConfig()
    if path is None:
        return config
    overrides = json.loads(Path(path).read_text())
    if not isinstance(overrides, dict):
        raise ValueError("--config must contain a JSON object")
    known = {f.name for f in dataclasses.fields(MfccConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown config key(s): {sorted(unknown)}")
    return dataclasses.replace(config, **overrides)


def cmd_calibrate(args) -> int:
    pairs = []
    for item in args.pairs:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            print(f"error: expected LABEL=WAV, got {item!r}", file=sys.stderr)
            return 1
        pairs.append((label, path))
    if len(pairs) < 2:
        print("usage: lipsync calibrate LABEL=WAV LABEL=WAV [...] -o PROFILE",
              file=sys.stderr)
        print("error: calibration needs at least two labeled clips", file=sys.stderr)
        return 1
    config = _load_config(args.config)
    clips = [(label, parse_wav(Path(path).read_bytes())) for label, path in pairs]
    profile = calibrate(clips, config)
    _write_atomic(args.output, serialize_profile(profile))
    for template in profile.templates:
        print(f"{template.label}: {template.sample_count} voiced frames")
    return 0


def cmd_bake(args) -> int:
    profile = deserialize_profile(Path(args.profile).read_bytes())
    track = bake(Path(args.audio).read_bytes(), profile)
    _write_atomic(args.output, serialize_track(track))
    print(f"{len(track.frames)} frames, {track.duration_seconds:.3f} s")
    return 0


def cmd_analyze(args) -> int:
    profile = deserialize_profile(Path(args.profile).read_bytes())
    clip = parse_wav(Path(args.audio).read_bytes())
    clip = resample_linear(clip, profile.mfcc_config.sample_rate)
    frames = compute_mfcc(clip, profile.mfcc_config)
    weights = classify_stream(frames, profile)
    labels = profile.labels
    rows = []
    for frame, wv in zip(frames, weights):
        top = max(labels, key=lambda l: wv.weights[l]) if any(wv.weights.values()) else "-"
        rows.append({
            "t": round(frame.timestamp, 6),
            "rms": round(frame.rms, 6),
            "top": top,
            "weights": {l: round(wv.weights[l], 6) for l in labels},
        })
    if args.format == "json":
        print(json.dumps(rows, sort_keys=True))
    else:
        header = f"{'t':>8} {'rms':>8} {'top':>4} " + " ".join(f"{l:>8}" for l in labels)
        print(header)
        for row in rows:
            cells = " ".join(f"{row['weights'][l]:8.4f}" for l in labels)
            print(f"{row['t']:8.3f} {row['rms']:8.4f} {row['top']:>4} {cells}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, create_app

    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        print(f"error: --listen must be HOST:PORT, got {args.listen!r}", file=sys.stderr)
        return 1
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, int(port_text)))
        sock.listen(128)
    except OSError as e:
        sock.close()
        print(f"error: cannot bind {args.listen}: {e}", file=sys.stderr)
        return 1
    app = create_app(ServiceSettings(
        profile_dir=args.profile_dir,
        viewer_dir=args.viewer_dir,
        max_sessions=args.max_sessions,
    ))
    print(f"listening on {args.listen}", flush=True)
    server = uvicorn.Server(uvicorn.Config(
        app, log_level="info" if args.verbose else "warning"))
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        # uvicorn re-raises the interrupt after draining; that is the
        # normal shutdown path, not an error
        pass
    return 0


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "bake": cmd_bake,
    "analyze": cmd_analyze,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # usage errors mapped to exit 1 by _Parser
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except InsufficientVoicedFrames as e:
        print(f"error: no voiced frames for label {e.label!r}", file=sys.stderr)
        return 2
    except (LipSyncError, OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points.

Commands: ``serve`` (run the annotation service), ``eval`` (score a
prediction set against ground truth), ``convert`` (session archive <->
KITTI labels), ``stats`` (operation counts from a session archive).

Every flag can also be set through an environment variable with the
``FLAVA_`` prefix (``--data-root`` -> ``FLAVA_DATA_ROOT``); explicit flags
win. Exit codes: 0 success, 1 environment failure, 2 input failure.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from dataclasses import dataclass
from pathlib import Path

from . import archive as archive_mod
from .engine import AnnotationSession, OperationKind
from .errors import FlavaError
from .evaluation import evaluate, render_report
from .geometry import Box3D, Calibration
from .kitti_io import (
    box_from_label,
    label_from_box,
    load_calibration,
    read_labels,
    scan_data_root,
    write_labels,
)

EXIT_OK = 0
EXIT_ENV = 1
EXIT_INPUT = 2


@dataclass
class CliConfig:
    data_root: Path
    port: int
    autosave_secs: float
    percentile_clip: tuple[float, float]
    anchor_table_path: Path | None

    def __post_init__(self):
        if not (1 <= self.port <= 65535):
            raise ValueError(f"port must be in [1, 65535], got {self.port}")
        low, high = self.percentile_clip
        if not (0.0 <= low < high <= 100.0):
            raise ValueError(f"percentile clip must satisfy 0 <= low < high <= 100, "
                             f"got ({low}, {high})")


def _env(name: str, default):
    return os.environ.get(f"FLAVA_{name}", default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flava",
                                     description="LiDAR annotation suite")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the annotation HTTP service")
    serve.add_argument("--data-root", default=_env("DATA_ROOT", None), required=False)
    serve.add_argument("--port", type=int, default=int(_env("PORT", 8000)))
    serve.add_argument("--autosave-secs", type=float,
                       default=float(_env("AUTOSAVE_SECS", 30)))
    serve.add_argument("--clip-low", type=float, default=float(_env("CLIP_LOW", 0)))
    serve.add_argument("--clip-high", type=float, default=float(_env("CLIP_HIGH", 100)))
    serve.add_argument("--anchors", default=_env("ANCHORS", None),
                       help="JSON file mapping category to [length, width, height]")
    serve.add_argument("--frontend-dir", default=_env("FRONTEND_DIR", None))

    ev = sub.add_parser("eval", help="score annotations against ground truth")
    ev.add_argument("pred", help="prediction session archive (.json) or KITTI label file")
    ev.add_argument("gt", help="ground-truth KITTI label file")
    ev.add_argument("--calib", default=None,
                    help="calibration file for converting labels (optional)")
    ev.add_argument("--format", choices=("text", "json"), default="text")
    ev.add_argument("--out", default=None, help="also write the report to this path")

    conv = sub.add_parser("convert", help="convert session archive <-> KITTI labels")
    direction = conv.add_mutually_exclusive_group(required=True)
    direction.add_argument("--to-kitti", action="store_true")
    direction.add_argument("--to-session", action="store_true")
    conv.add_argument("input")
    conv.add_argument("output")
    conv.add_argument("--calib", default=None,
                      help="calibration file (otherwise embedded or nominal axes)")

    st = sub.add_parser("stats", help="operation counts from a session archive")
    st.add_argument("archive")
    st.add_argument("--format", choices=("text", "json"), default="text")
    st.add_argument("--out", default=None)
    return parser


# -- serve ---------------------------------------------------------------------


def cmd_serve(args) -> int:
    if not args.data_root:
        print("error: --data-root (or FLAVA_DATA_ROOT) is required", file=sys.stderr)
        return EXIT_ENV
    try:
        config = CliConfig(
            data_root=Path(args.data_root),
            port=args.port,
            autosave_secs=args.autosave_secs,
            percentile_clip=(args.clip_low, args.clip_high),
            anchor_table_path=Path(args.anchors) if args.anchors else None,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        sequences, skipped = scan_data_root(config.data_root)
    except FlavaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV

    anchors = None
    if config.anchor_table_path is not None:
        try:
            anchors = load_anchor_table(config.anchor_table_path)
        except (OSError, ValueError, FlavaError) as exc:
            print(f"error: bad anchor table: {exc}", file=sys.stderr)
            return EXIT_INPUT

    print(f"flava service: {len(sequences)} sequence(s) under {config.data_root}",
          flush=True)
    for seq in sequences:
        print(f"  {seq.sequence_id}: {seq.frame_count} frame(s)")
    for name, reason in skipped:
        print(f"  skipped {name}: {reason}")
    sys.stdout.flush()

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind(("0.0.0.0", config.port))
    except OSError:
        print(f"error: port {config.port} is already in use", file=sys.stderr)
        return EXIT_ENV
    finally:
        probe.close()

    from .service import ServiceConfig, create_app

    app = create_app(ServiceConfig(
        data_root=config.data_root,
        autosave_secs=config.autosave_secs,
        clip_percentiles=config.percentile_clip,
        anchors=anchors,
        frontend_dir=Path(args.frontend_dir) if args.frontend_dir else None,
    ))
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="info")
    return EXIT_OK


def load_anchor_table(path: Path) -> dict:
    from .geometry import Category

    raw = json.loads(Path(path).read_text())
    table = {}
    for key, size in raw.items():
        l, w, h = (float(v) for v in size)
        if min(l, w, h) <= 0:
            raise ValueError(f"anchor for {key!r} must be positive, got {size}")
        table[Category(key)] = (l, w, h)
    return table


# -- eval ------------------------------------------------------------------------


def _load_boxes_by_frame(path: Path, calib: Calibration | None) -> dict[int, list[Box3D]]:
    """A prediction/ground-truth source is either a session archive or a
    KITTI label file; sniff by content."""
    text_head = path.read_text(errors="replace").lstrip()[:1]
    if text_head == "{":
        session = archive_mod.import_session(path)
        return {f: list(bs) for f, bs in session.boxes.items()}
    records = read_labels(path)
    boxes: dict[int, list[Box3D]] = {}
    for rec in records:
        boxes.setdefault(rec.frame, []).append(box_from_label(rec, calib))
    return boxes


def cmd_eval(args) -> int:
    calib = None
    if args.calib:
        try:
            calib = load_calibration(args.calib)
        except FlavaError as exc:
            print(f"error: {args.calib}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        preds = _load_boxes_by_frame(Path(args.pred), calib)
    except (FlavaError, OSError, ValueError) as exc:
        print(f"error: {args.pred}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        gts = _load_boxes_by_frame(Path(args.gt), calib)
    except (FlavaError, OSError, ValueError) as exc:
        print(f"error: {args.gt}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        report = evaluate(preds, gts)
    except FlavaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.format == "json":
        rendered = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    else:
        rendered = render_report(report)
    sys.stdout.write(rendered)
    if args.out:
        Path(args.out).write_text(rendered)
    return EXIT_OK


# -- convert -----------------------------------------------------------------------


def cmd_convert(args) -> int:
    calib = None
    if args.calib:
        try:
            calib = load_calibration(args.calib)
        except FlavaError as exc:
            print(f"error: {args.calib}: {exc}", file=sys.stderr)
            return EXIT_INPUT

    if args.to_kitti:
        try:
            session = archive_mod.import_session(Path(args.input))
        except (FlavaError, OSError) as exc:
            print(f"error: {args.input}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        if calib is None and session.sequence is not None:
            calib = session.sequence.calibration
        if calib is None:
            print("note: no calibration available; labels use nominal camera axes",
                  file=sys.stderr)
        records = []
        for frame in sorted(session.boxes):
            for box in session.boxes[frame]:
                records.append(label_from_box(box, frame, calib))
        write_labels(records, args.output)
        print(f"wrote {len(records)} label(s) to {args.output}")
        return EXIT_OK

    try:
        records = read_labels(Path(args.input))
    except (FlavaError, OSError) as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if calib is None:
        print("note: no calibration available; labels assumed on nominal camera axes",
              file=sys.stderr)
    session = AnnotationSession()
    for rec in records:
        box = box_from_label(rec, calib)
        session._insert(rec.frame, box)
    try:
        archive_mod.export_session(session, args.output)
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
        return EXIT_ENV
    print(f"wrote session with {sum(len(v) for v in session.boxes.values())} "
          f"box(es) to {args.output}")
    return EXIT_OK


# -- stats --------------------------------------------------------------------------


def render_stats(session: AnnotationSession) -> str:
    stats = session.operation_stats()
    lines = ["Operation counts by kind:"]
    for kind in OperationKind:
        lines.append(f"  {kind.value:<16}{stats.by_kind[kind]:>8}")
    n_total = len(stats.per_instance)
    n_transferred = len(stats.transferred_instances)
    lines.append("")
    lines.append(f"Instances: {n_total} total, {n_transferred} via transfer, "
                 f"{n_total - n_transferred} annotated directly")

    def _fmt(v):
        return "n/a" if v is None else f"{v:.3f}"

    lines.append(f"Mean operations per instance:      {_fmt(stats.mean_ops_per_instance)}")
    lines.append(f"  transferred instances:           {_fmt(stats.mean_ops_transferred)}")
    lines.append(f"  directly annotated instances:    {_fmt(stats.mean_ops_untransferred)}")
    lines.append("")
    lines.append("Per-kind counts, transferred vs direct instances:")
    header = f"  {'Kind':<16}{'transferred':>12}{'direct':>10}"
    lines.append(header)
    lines.append("  " + "-" * (len(header) - 2))
    transferred = set(stats.transferred_instances)
    for kind in OperationKind:
        t_count = sum(stats.per_instance[k][kind] for k in transferred)
        d_count = sum(counts[kind] for k, counts in stats.per_instance.items()
                      if k not in transferred)
        lines.append(f"  {kind.value:<16}{t_count:>12}{d_count:>10}")
    return "\n".join(lines) + "\n"


def stats_as_dict(session: AnnotationSession) -> dict:
    stats = session.operation_stats()
    transferred = set(stats.transferred_instances)
    per_kind_split = {}
    for kind in OperationKind:
        per_kind_split[kind.value] = {
            "total": stats.by_kind[kind],
            "transferred_instances": sum(stats.per_instance[k][kind] for k in transferred),
            "direct_instances": sum(c[kind] for k, c in stats.per_instance.items()
                                    if k not in transferred),
        }
    return {
        "by_kind": per_kind_split,
        "instances": len(stats.per_instance),
        "transferred_instances": sorted(list(k) for k in transferred),
        "mean_ops_per_instance": stats.mean_ops_per_instance,
        "mean_ops_transferred": stats.mean_ops_transferred,
        "mean_ops_untransferred": stats.mean_ops_untransferred,
    }


def cmd_stats(args) -> int:
    try:
        session = archive_mod.import_session(Path(args.archive))
    except (FlavaError, OSError) as exc:
        print(f"error: {args.archive}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.format == "json":
        rendered = json.dumps(stats_as_dict(session), indent=2, sort_keys=True) + "\n"
    else:
        rendered = render_stats(session)
    sys.stdout.write(rendered)
    if args.out:
        Path(args.out).write_text(rendered)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "serve": cmd_serve,
        "eval": cmd_eval,
        "convert": cmd_convert,
        "stats": cmd_stats,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

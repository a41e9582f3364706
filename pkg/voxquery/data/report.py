"""
Line-oriented ``key: value`` run reports.

Keys come in a fixed order: loss components, occupancy metrics, per-class IoU
in table order, then invariant results. Floats are written with ``repr`` so
they parse back exactly; undefined metrics are written as ``undefined``.
"""

from pathlib import Path
from typing import Any, Iterator, Optional

import toolz as tz
import toolz.curried as curried
from fn import _
from loguru import logger

from ..validation import LossReport, MetricReport

UNDEFINED = "undefined"
HEADER = "# voxquery report"


def _value(x: Any) -> str:
    match x:
        case None:
            return UNDEFINED
        case bool():
            return "pass" if x else "fail"
        case int() | float():
            return repr(float(x))
        case _:
            return str(x)


def _loss_lines(losses: LossReport) -> Iterator[tuple[str, Any]]:
    for key in ("total", "scal_geo", "scal_sem", "ce"):
        yield f"loss.{key}", losses[key]
    for i, aux in enumerate(losses["aux"]):
        yield f"loss.aux.{i}", aux


def _metric_lines(metrics: MetricReport) -> Iterator[tuple[str, Any]]:
    for key in ("iou", "miou", "precision", "recall"):
        yield f"metric.{key}", metrics[key]
    for name, iou in metrics["per_class_iou"].items():
        yield f"class_iou.{name}", iou


def format_report(
    losses: Optional[LossReport] = None,
    metrics: Optional[MetricReport] = None,
    invariants: Optional[dict[str, bool]] = None,
    info: Optional[dict[str, Any]] = None,
) -> str:
    """
    Render a report as text; see ``emit_report``.
    """
    entries = [
        ((f"info.{k}", v) for k, v in (info or {}).items()),
        _loss_lines(losses) if losses is not None else (),
        _metric_lines(metrics) if metrics is not None else (),
        ((f"invariant.{k}", bool(v)) for k, v in (invariants or {}).items()),
    ]
    return tz.pipe(
        entries,
        tz.concat,
        curried.map(lambda kv: f"{kv[0]}: {_value(kv[1])}"),
        curried.cons(HEADER),
        "\n".join,
    ) + "\n"


def emit_report(
    losses: Optional[LossReport],
    metrics: Optional[MetricReport],
    invariants: Optional[dict[str, bool]],
    path: str | Path,
    info: Optional[dict[str, Any]] = None,
) -> Path:
    """
    Write a structured text report.

    Parameters
    ----------
    losses : LossReport | None
        Loss components, written as ``loss.*`` (the gradient is never written)
    metrics : MetricReport | None
        Written as ``metric.*`` and ``class_iou.<class>``
    invariants : dict[str, bool] | None
        Pass/fail per property, written as ``invariant.<name>: pass|fail``
    path : str | Path
        Destination, parent directories are created
    info : dict | None
        Run facts (seed, shapes) written first as ``info.*``

    Returns
    -------
    Path
        The written file

    Raises
    ------
    OSError
        If ``path`` cannot be written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_report(losses, metrics, invariants, info))
    logger.info(f"Wrote report to {path}")
    return path


def _parse_value(text: str) -> Any:
    match text:
        case "undefined":
            return None
        case "pass":
            return True
        case "fail":
            return False
    try:
        return float(text)
    except ValueError:
        return text


def _split(line: str) -> tuple[str, Any]:
    key, sep, value = line.partition(": ")
    if not sep:
        raise ValueError(f"Malformed report line {line!r}")
    return key, _parse_value(value)


def parse_report(path: str | Path) -> dict[str, Any]:
    """
    Read a report back into an ordered ``{key: value}`` dictionary.

    Numbers come back as ``float``, ``undefined`` as ``None``, ``pass``/``fail``
    as ``bool`` and everything else as ``str``.
    """
    return tz.pipe(
        Path(path).read_text().splitlines(),
        curried.map(_.call("strip")),
        curried.filter(_ != ""),
        curried.filter(lambda line: not line.startswith("#")),
        curried.map(_split),
        dict,
    )

"""Plot-job files: the same flat key-value grammar as mbmlink spec files.

    kind = rate_curves            # or: region
    input_csv = fig2_single_user.csv
    output = fig2.png
    title = Achievable rate, M = 256
    xlabel = SNR (dB)
    ylabel = Rate (bits/s/Hz)
    xlim = -5, 30                 # optional
    ylim = 0, 9                   # optional

Relative input/output paths resolve against the job file's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

KINDS = ("rate_curves", "region")


class JobError(ValueError):
    pass


@dataclass(frozen=True)
class PlotJob:
    kind: str
    input_csv: str
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlim: tuple | None = None
    ylim: tuple | None = None
    dpi: int = 150


def parse_kv(text: str) -> dict:
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise JobError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def _pair(raw: str, key: str) -> tuple:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise JobError(f"{key}: expected 'low, high', got {raw!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise JobError(f"{key}: cannot parse {raw!r}") from None


def load_job(path: str) -> PlotJob:
    with open(path, "r", encoding="utf-8") as fh:
        mapping = parse_kv(fh.read())

    for key in ("kind", "input_csv", "output"):
        if key not in mapping:
            raise JobError(f"{key}: required field missing")
    kind = mapping["kind"]
    if kind not in KINDS:
        raise JobError(f"kind: must be one of {', '.join(KINDS)}; got {kind!r}")

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    dpi = int(mapping.get("dpi", "150"))
    if dpi <= 0:
        raise JobError("dpi: must be positive")
    return PlotJob(
        kind=kind,
        input_csv=resolve(mapping["input_csv"]),
        output=resolve(mapping["output"]),
        title=mapping.get("title", ""),
        xlabel=mapping.get("xlabel", ""),
        ylabel=mapping.get("ylabel", ""),
        xlim=_pair(mapping["xlim"], "xlim") if "xlim" in mapping else None,
        ylim=_pair(mapping["ylim"], "ylim") if "ylim" in mapping else None,
        dpi=dpi,
    )

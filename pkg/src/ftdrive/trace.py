"""Simulation trace container with a fixed CSV column contract.

Floats are written with repr() (shortest round-trip decimal), so identical
runs produce byte-identical files and reading a trace back loses nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TRACE_COLUMNS = (
    "t", "ia", "ib", "ic", "i_mid", "v_dc1", "v_dc2",
    "psis_alpha", "psis_beta", "psis_est_alpha", "psis_est_beta",
    "te", "te_ref", "omega_m", "omega_ref", "vector_index", "mode", "health",
)

_INT_COLUMNS = {"vector_index"}
_STR_COLUMNS = {"mode", "health"}


class TraceFormatError(ValueError):
    """Raised when a trace file does not match the column contract."""


@dataclass
class Trace:
    columns: dict = field(
        default_factory=lambda: {c: [] for c in TRACE_COLUMNS})

    def __len__(self) -> int:
        return len(self.columns["t"])

    def append(self, row: dict) -> None:
        cols = self.columns
        for c in TRACE_COLUMNS:
            cols[c].append(row[c])

    def __getitem__(self, column: str) -> list:
        return self.columns[column]

    def window(self, t0: float, t1: float) -> "Trace":
        """Sub-trace with t0 <= t <= t1."""
        ts = self.columns["t"]
        idx = [k for k, t in enumerate(ts) if t0 <= t <= t1]
        out = Trace()
        for c in TRACE_COLUMNS:
            src = self.columns[c]
            out.columns[c] = [src[k] for k in idx]
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            cols = [self.columns[c] for c in TRACE_COLUMNS]
            kinds = [("s" if c in _STR_COLUMNS else
                      "i" if c in _INT_COLUMNS else "f")
                     for c in TRACE_COLUMNS]
            for row in zip(*cols):
                fields = [v if k == "s" else repr(v) if k == "f" else str(v)
                          for v, k in zip(row, kinds)]
                fh.write(",".join(fields) + "\n")


def read_trace(path) -> Trace:
    tr = Trace()
    cols = tr.columns
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header.split(",") != list(TRACE_COLUMNS):
            raise TraceFormatError(f"unexpected trace header: {header!r}")
        for ln, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(TRACE_COLUMNS):
                raise TraceFormatError(f"line {ln}: wrong field count")
            try:
                for c, v in zip(TRACE_COLUMNS, parts):
                    if c in _STR_COLUMNS:
                        cols[c].append(v)
                    elif c in _INT_COLUMNS:
                        cols[c].append(int(v))
                    else:
                        cols[c].append(float(v))
            except ValueError as e:
                raise TraceFormatError(f"line {ln}: {e}") from None
    ts = cols["t"]
    if any(ts[k] >= ts[k + 1] for k in range(len(ts) - 1)):
        raise TraceFormatError("time column is not strictly increasing")
    return tr

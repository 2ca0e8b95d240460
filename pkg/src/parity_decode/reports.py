"""Report containers and file formats.

A BenchmarkReport is a config echo plus homogeneous rows of scalars. It
serializes to JSON (full fidelity) and to CSV whose first line embeds
the config as a JSON comment; individual cells are JSON-encoded scalars
so parsing an emitted file reproduces the report exactly, floats
included. File names embed a short config hash and the master seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field


@dataclass
class BenchmarkReport:
    kind: str
    config: dict
    rows: list[dict] = field(default_factory=list)

    def config_hash(self) -> str:
        blob = json.dumps({"kind": self.kind, "config": self.config}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:10]

    def default_stem(self) -> str:
        seed = self.config.get("seed", "noseed")
        return f"{self.kind}_{self.config_hash()}_s{seed}"

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(
                {"kind": self.kind, "config": self.config, "rows": self.rows},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "BenchmarkReport":
        with open(path) as fh:
            data = json.load(fh)
        return cls(kind=data["kind"], config=data["config"], rows=data["rows"])

    def to_csv(self, path) -> None:
        header = sorted({k for row in self.rows for k in row})
        with open(path, "w") as fh:
            fh.write(
                "# "
                + json.dumps({"kind": self.kind, "config": self.config}, sort_keys=True)
                + "\n"
            )
            fh.write(",".join(header) + "\n")
            for row in self.rows:
                fh.write(",".join(_cell(row.get(k)) for k in header) + "\n")

    @classmethod
    def from_csv(cls, path) -> "BenchmarkReport":
        with open(path) as fh:
            meta_line = fh.readline()
            if not meta_line.startswith("# "):
                raise ValueError("missing config comment line")
            meta = json.loads(meta_line[2:])
            header_line = fh.readline().rstrip("\n")
            header = header_line.split(",") if header_line else []
            rows = []
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                cells = _split_csv(line)
                rows.append({k: json.loads(c) for k, c in zip(header, cells) if c != ""})
        return cls(kind=meta["kind"], config=meta["config"], rows=rows)


def _cell(value) -> str:
    if value is None:
        return ""
    text = json.dumps(value)
    if "," in text or '"' in text:
        return '"' + text.replace('"', '""') + '"'
    return text


def _split_csv(line: str) -> list[str]:
    # minimal CSV splitter matching _cell quoting
    out, cur, quoted = [], [], False
    i = 0
    while i < len(line):
        ch = line[i]
        if quoted:
            if ch == '"':
                if i + 1 < len(line) and line[i + 1] == '"':
                    cur.append('"')
                    i += 1
                else:
                    quoted = False
            else:
                cur.append(ch)
        else:
            if ch == '"':
                quoted = True
            elif ch == ",":
                out.append("".join(cur))
                cur = []
            else:
                cur.append(ch)
        i += 1
    out.append("".join(cur))
    return out


@dataclass
class TrajectoryDump:
    """Per-iteration snapshots of a decode, with error counts against a
    known target. CSV form: one block per iteration, each block headed
    by '# iteration=<n> errors=<m>' followed by the K rows."""

    meta: dict
    snapshots: list
    error_counts: list

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(self.meta, sort_keys=True) + "\n")
            for n, (snap, errs) in enumerate(zip(self.snapshots, self.error_counts)):
                fh.write(f"# iteration={n} errors={errs}\n")
                for row in snap:
                    fh.write(",".join(str(int(v)) for v in row) + "\n")
                fh.write("\n")

    @classmethod
    def read_csv(cls, path) -> "TrajectoryDump":
        import numpy as np

        meta = {}
        snapshots: list = []
        error_counts: list = []
        block: list = []
        with open(path) as fh:
            first = fh.readline()
            if first.startswith("# ") and "iteration=" not in first:
                meta = json.loads(first[2:])
            else:
                fh.seek(0)
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    if block:
                        snapshots.append(np.array(block, dtype=np.int8))
                        block = []
                    error_counts.append(int(line.split("errors=")[1]))
                elif line:
                    block.append([int(v) for v in line.split(",")])
            if block:
                snapshots.append(np.array(block, dtype=np.int8))
        return cls(meta=meta, snapshots=snapshots, error_counts=error_counts)

"""Result records: JSON-lines persistence, CSV series, schema validation."""
import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np

from . import __version__

RECORD_VERSION = 1


def _schema():
    with resources.files(__package__).joinpath("record_schema.json").open(encoding="utf-8") as fh:
        return json.load(fh)


SCHEMA = _schema()


def clean(x):
    """JSON-safe copy: numpy scalars to Python, Fractions to floats, non-finite to None."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, bytes):
        return x.hex()
    return x


def scalar(value, se=None, ci=None):
    out = {"value": float(value) if isinstance(value, Fraction) else value}
    if isinstance(value, Fraction):
        out["exact"] = str(value)
    if se is not None:
        out["se"] = float(se)
    if ci is not None:
        out["ci"] = [float(ci[0]), float(ci[1])]
    return out


def from_estimate(est):
    return scalar(est.value, est.se, (est.low, est.high))


@dataclass
class ResultRecord:
    config: dict
    scalars: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    ok: bool = True
    wall_time: float = 0.0

    def to_dict(self):
        return clean({
            "record_version": RECORD_VERSION,
            "library_version": __version__,
            "config": self.config,
            "scalars": self.scalars,
            "series": self.series,
            "verdicts": self.verdicts,
            "details": self.details,
            "ok": self.ok,
            "wall_time": self.wall_time,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)

    def numeric_fields(self):
        """Everything except the wall time (the replay contract)."""
        d = self.to_dict()
        d.pop("wall_time")
        return json.dumps(d, sort_keys=True)


def validate_record(rec):
    data = rec.to_dict() if isinstance(rec, ResultRecord) else rec
    jsonschema.validate(data, SCHEMA)
    return True


def append_jsonl(path, rec):
    validate_record(rec)
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(rec.to_json() + "\n")


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_series_csv(path, series):
    """Per-n series as columns ``n, name1, name2, ...`` (shorter ones padded)."""
    if not series:
        return False
    names = sorted(series)
    length = max(len(series[k]) for k in names)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", *names])
        for i in range(length):
            row = [i]
            for k in names:
                col = series[k]
                row.append("" if i >= len(col) or col[i] is None else repr(float(col[i])))
            w.writerow(row)
    return True

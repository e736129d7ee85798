"""File formats: CSV datasets, JSON mixture configs, policies and reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .model import (
    BroadcastPolicy,
    DesignError,
    GaussianMixtureSpec,
    SampleMatrix,
    UnicastPolicy,
    broadcast_layout,
    pair_slot,
    validate_sample_matrix,
)

SCHEMA_VERSION = 1


class ConfigError(DesignError):
    """Malformed or semantically invalid configuration/policy file."""


class DataFormatError(DesignError):
    """Dataset file that cannot be parsed as a numeric table."""


def write_dataset(data: SampleMatrix, path) -> None:
    buf = io.StringIO()
    n = data.n_sensors
    buf.write(",".join(f"x{i + 1}" for i in range(n)) + "\n")
    for row in data.data:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_dataset(path) -> SampleMatrix:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    expected = [f"x{i + 1}" for i in range(len(header))]
    if [h.strip() for h in header] != expected:
        raise DataFormatError(f"{path}: header must be {','.join(expected)}")
    if any(len(r) != len(header) for r in body):
        raise DataFormatError(f"{path}: ragged rows")
    try:
        table = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    return validate_sample_matrix(table)


def mixture_to_dict(spec: GaussianMixtureSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "components": [
            {"weight": c.weight, "mean": c.mean.tolist(), "covariance": c.covariance.tolist()}
            for c in spec.components
        ],
    }


def mixture_from_dict(d: dict) -> GaussianMixtureSpec:
    try:
        comps = d["components"]
        return GaussianMixtureSpec.from_lists(
            [c["weight"] for c in comps],
            [c["mean"] for c in comps],
            [c["covariance"] for c in comps],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad mixture config: {exc!r}") from None
    except DesignError as exc:
        raise ConfigError(f"bad mixture config: {exc}") from None


def read_mixture(path) -> GaussianMixtureSpec:
    return mixture_from_dict(read_json(path))


def policy_to_dict(policy) -> dict:
    if isinstance(policy, UnicastPolicy):
        return {"schema_version": SCHEMA_VERSION, "mode": "unicast", "n": policy.n, "xhat": policy.xhat.tolist()}
    n = policy.n
    layout = []
    for i, j in broadcast_layout(n):
        s = pair_slot(i, j, n)
        layout.append({"receiver": i + 1, "side_information": j + 1, "w_index": 2 * s, "b_index": 2 * s + 1})
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "broadcast",
        "n": n,
        "theta": policy.theta.tolist(),
        "layout": layout,
    }


def policy_from_dict(d: dict):
    """Accepts a policy object or any report carrying one under ``"policy"``."""
    if "policy" in d and isinstance(d["policy"], dict):
        d = d["policy"]
    try:
        mode, n = d["mode"], int(d["n"])
        if mode == "unicast":
            p = UnicastPolicy(d["xhat"])
        elif mode == "broadcast":
            p = BroadcastPolicy(d["theta"])
        else:
            raise ConfigError(f"unknown policy mode {mode!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad policy file: {exc!r}") from None
    except ConfigError:
        raise
    except DesignError as exc:
        raise ConfigError(f"bad policy file: {exc}") from None
    if p.n != n:
        raise ConfigError(f"policy declares n={n} but carries n={p.n}")
    return p


def read_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8", newline="\n")


def digest(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_values_csv(values, path, header: str = "j_test") -> None:
    lines = [header] + [f"{v:.17g}" for v in values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")

"""Run directories under ``runs/<exp>/``: config, reward log, weights, evaluation output.

Weight files are JSON envelopes::

    {"schema_version": 1, "agent_kind": "classical" | "quantum",
     "shape": {...}, "flat_params": ["<repr of float>", ...]}

``flat_params`` holds ``repr`` strings, which round-trip float64 exactly.
For the MLP, ``shape`` is ``{"hidden": h}`` and the flat order is
W1, b1, W2, b2, W3, b3 (row-major).  For the VQC it carries ``n_qubits``,
``depth``, ``embed_scale``, ``embed_axis`` and ``s_max``; the flat order is
the row-major ``[layer, qubit, axis]`` angle tensor.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from hybrid_pg.policies import MlpParams, MlpPolicy, NormalizationSpec, VqcPolicy
from hybrid_pg.quantum import MeasurementNoiseModel, VqcParams

WEIGHTS_SCHEMA_VERSION = 1
REWARD_LOG_HEADER = ["episode", "return", "loss", "grad_norm", "lr"]
_SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class RunStoreError(RuntimeError):
    pass


class WeightsError(RunStoreError):
    pass


@dataclass(frozen=True)
class RunConfig:
    agent: str = "classical"
    episodes: int = 400
    lr: float = 0.005
    hidden: int = 64
    exp: str = "run"
    noise: float = 0.0
    seed: int = 42
    gamma: float = 0.99
    entropy_weight: float = 5e-3
    l2_weight: float = 1e-4
    clip_threshold: float = 1.0
    lr_decay: float = 0.995
    baseline_decay: float = 0.95
    batch_episodes: int = 1
    optimizer: str = "adam"
    standardize_advantages: bool = False
    n_qubits: int = 4
    depth: int = 3
    kappa: float = 1.0
    embed_axis: str = "X"
    sigma_z: float = 0.0

    def __post_init__(self):
        if self.agent not in ("classical", "quantum"):
            raise ValueError(f"agent must be 'classical' or 'quantum', got {self.agent!r}")
        if not _SAFE_NAME.match(self.exp):
            raise ValueError(f"experiment name {self.exp!r} is not filesystem-safe")
        if self.episodes < 1:
            raise ValueError("episodes must be positive")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def run_dir(runs_root, exp: str) -> Path:
    return Path(runs_root) / exp


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def create_run_dir(runs_root, exp: str, overwrite: bool = False) -> Path:
    path = run_dir(runs_root, exp)
    if path.exists() and not overwrite:
        raise RunStoreError(f"run directory {path} already exists (pass --overwrite to replace)")
    try:
        path.mkdir(parents=True, exist_ok=overwrite)
    except OSError as exc:
        raise RunStoreError(f"cannot create {path}: {exc}") from exc
    return path


def weights_filename(agent_kind: str) -> str:
    return f"policy_{agent_kind}.json"


def weights_to_json(policy) -> str:
    payload = {
        "schema_version": WEIGHTS_SCHEMA_VERSION,
        "agent_kind": policy.kind,
        "shape": policy.shape(),
        "flat_params": [repr(float(v)) for v in policy.flat()],
    }
    return json.dumps(payload, indent=1)


def weights_from_json(text: str, sigma_z: float = 0.0):
    expected = f"schema_version {WEIGHTS_SCHEMA_VERSION}"
    try:
        payload = json.loads(text)
        if payload.get("schema_version") != WEIGHTS_SCHEMA_VERSION:
            raise WeightsError(f"unsupported weights schema {payload.get('schema_version')!r}; expected {expected}")
        flat = [float(v) for v in payload["flat_params"]]
        shape = payload["shape"]
        if payload["agent_kind"] == "classical":
            return MlpPolicy(MlpParams.from_flat(flat, int(shape["hidden"])))
        if payload["agent_kind"] == "quantum":
            template = VqcParams.zeros(int(shape["n_qubits"]), int(shape["depth"]),
                                       embed_scale=float(shape["embed_scale"]),
                                       embed_axis=shape["embed_axis"])
            norm = NormalizationSpec(tuple(shape["s_max"]), float(shape["embed_scale"]))
            return VqcPolicy(template.with_flat(flat), norm, MeasurementNoiseModel(sigma_z))
        raise WeightsError(f"unknown agent_kind {payload['agent_kind']!r}")
    except WeightsError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise WeightsError(f"corrupt weights file ({expected} JSON envelope expected): {exc}") from exc


def save_weights(path, policy) -> None:
    atomic_write(Path(path), weights_to_json(policy))


def load_weights(path, sigma_z: float = 0.0):
    path = Path(path)
    if not path.exists():
        raise WeightsError(f"weights file {path} not found (schema_version {WEIGHTS_SCHEMA_VERSION} expected)")
    return weights_from_json(path.read_text(), sigma_z)


def reward_log_csv(log) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REWARD_LOG_HEADER)
    for r in log:
        writer.writerow([r.episode, repr(r.episode_return), repr(r.loss), repr(r.grad_norm_pre_clip), repr(r.lr_used)])
    return buf.getvalue()


def read_csv(path, header):
    """Strict reader: exact header, every row the same width, numeric cells."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, strict=True))
    if not rows or rows[0] != list(header):
        raise RunStoreError(f"{path}: header {rows[:1]} does not match {header}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RunStoreError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        out.append([float(cell) for cell in row])
    return out


@dataclass
class RunArtifacts:
    directory: Path
    files: dict = field(default_factory=dict)

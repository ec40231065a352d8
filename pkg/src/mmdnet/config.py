"""Declarative experiment configs (TOML) and the built-in presets.

Schema (every table but ``[data]`` and ``[generator]`` is optional)::

    seed = 7                      # required; no wall-clock default
    output_dir = "runs/name"      # relative to the config file

    [data]
    source = "gaussian" | "idx" | "csv"
    path = "..."                  # idx/csv, relative to the config file
    has_header = false            # csv
    subsample = 0                 # idx/csv: use this many rows (0 = all)
    n = 200                       # gaussian: training rows
    mean = [0.0]                  # gaussian
    std = [1.0]                   # gaussian
    n_probe = 200                 # gaussian: independent probe draw (0 = none)
    n_validation = 200            # gaussian: KDE validation draw
    n_test = 200                  # gaussian: KDE test draw
    [data.split]                  # idx/csv: all fractions summing to 1, or all counts
    train = 0.7
    probe = 0.1
    validation = 0.1
    test = 0.1

    [generator]
    kind = "affine" | "mlp"
    mu = [2.5]                    # affine
    sigma = [0.1]                 # affine
    noise_dim = 10                # mlp
    hidden = [64, 32, 64]         # mlp

    [kernel]
    family = "rbf" | "laplace" | "rq"
    bandwidth = "median" | 1.0
    rq_alpha = 1.0
    median_max_pairs = 100000
    median_source = "data" | "pooled"

    [train]                       # TrainConfig fields except seed
    checkpoint_every = 0          # 0: final checkpoint only

    [eval]
    enabled = true
    n_generated = 500
    bandwidth = "select" | 0.2
    bandwidth_grid = [...]
    bootstrap = 1000
    uniform_baseline = false      # also score a U[0,1]^D generator

    [output]
    timing = false                # fill the elapsed_ms CSV column
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .evaluation import DEFAULT_GRID, KdeConfig
from .kernels import Family
from .trainer import TrainConfig

REPO_ROOT = Path(__file__).resolve().parents[2]


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    source: str
    path: Path | None = None
    has_header: bool = False
    subsample: int = 0
    n: int = 200
    mean: list[float] = field(default_factory=lambda: [0.0])
    std: list[float] = field(default_factory=lambda: [1.0])
    n_probe: int = 0
    n_validation: int = 0
    n_test: int = 0
    split: dict[str, float] | None = None


@dataclass
class GeneratorConfig:
    kind: str
    mu: list[float] = field(default_factory=lambda: [0.0])
    sigma: list[float] = field(default_factory=lambda: [1.0])
    noise_dim: int = 10
    hidden: list[int] = field(default_factory=lambda: [64, 32, 64])


@dataclass
class KernelConfig:
    family: Family = Family.RBF
    bandwidth: float | str = "median"
    rq_alpha: float = 1.0
    median_max_pairs: int = 100_000
    median_source: str = "data"


@dataclass
class EvalConfig:
    enabled: bool = True
    n_generated: int = 500
    kde: KdeConfig = field(default_factory=KdeConfig)
    bootstrap: int = 1000
    uniform_baseline: bool = False


@dataclass
class ExperimentConfig:
    seed: int
    output_dir: Path
    data: DataConfig
    generator: GeneratorConfig
    kernel: KernelConfig
    train: TrainConfig
    checkpoint_every: int = 0
    eval: EvalConfig = field(default_factory=EvalConfig)
    timing: bool = False


def _take(table: dict, where: str, spec: dict):
    """Pop known keys with type checks; reject unknown keys."""
    unknown = set(table) - set(spec)
    if unknown:
        raise ConfigError(f"[{where}] unknown keys: {', '.join(sorted(unknown))}")
    out = {}
    for key, types in spec.items():
        if key in table:
            v = table[key]
            if not isinstance(v, types) or (isinstance(v, bool) and bool not in _astuple(types)):
                raise ConfigError(f"[{where}] {key} has wrong type {type(v).__name__}")
            out[key] = v
    return out


def _astuple(t):
    return t if isinstance(t, tuple) else (t,)


NUM = (int, float)
_LIST = list


def _resolve(base: Path, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() else (base / path)


def parse_config(text: str, base_dir: Path | str = ".", check_paths: bool = True) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"TOML syntax error: {e}") from None
    base = Path(base_dir)
    top = _take(raw, "top", {
        "seed": int, "output_dir": str, "data": dict, "generator": dict,
        "kernel": dict, "train": dict, "eval": dict, "output": dict,
    })
    if "seed" not in top:
        raise ConfigError("seed is required")
    if not 0 <= top["seed"] < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    for req in ("data", "generator"):
        if req not in top:
            raise ConfigError(f"[{req}] table is required")

    d = _take(top["data"], "data", {
        "source": str, "path": str, "has_header": bool, "subsample": int, "n": int,
        "mean": _LIST, "std": _LIST, "n_probe": int, "n_validation": int, "n_test": int,
        "split": dict,
    })
    if d.get("source") not in ("gaussian", "idx", "csv"):
        raise ConfigError("[data] source must be 'gaussian', 'idx' or 'csv'")
    if d["source"] != "gaussian":
        if "path" not in d:
            raise ConfigError("[data] path is required for file sources")
        d["path"] = _resolve(base, d["path"])
        if check_paths and not d["path"].exists():
            raise ConfigError(f"[data] path does not exist: {d['path']}")
    if "split" in d:
        sp = _take(d["split"], "data.split", {k: NUM for k in ("train", "probe", "validation", "test")})
        if set(sp) != {"train", "probe", "validation", "test"}:
            raise ConfigError("[data.split] needs train, probe, validation and test")
        d["split"] = sp
    data = DataConfig(**d)
    if data.source == "gaussian" and len(data.mean) != len(data.std):
        raise ConfigError("[data] mean and std lengths differ")

    g = _take(top["generator"], "generator", {
        "kind": str, "mu": _LIST, "sigma": _LIST, "noise_dim": int, "hidden": _LIST,
    })
    if g.get("kind") not in ("affine", "mlp"):
        raise ConfigError("[generator] kind must be 'affine' or 'mlp'")
    gen = GeneratorConfig(**g)

    k = _take(top.get("kernel", {}), "kernel", {
        "family": str, "bandwidth": (str, int, float), "rq_alpha": NUM,
        "median_max_pairs": int, "median_source": str,
    })
    try:
        if "family" in k:
            k["family"] = Family.parse(k["family"])
    except ValueError as e:
        raise ConfigError(f"[kernel] {e}") from None
    if isinstance(k.get("bandwidth"), str) and k["bandwidth"] != "median":
        raise ConfigError("[kernel] bandwidth must be a number or 'median'")
    if k.get("median_source", "data") not in ("data", "pooled"):
        raise ConfigError("[kernel] median_source must be 'data' or 'pooled'")
    kernel = KernelConfig(**k)

    tfields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    tspec = {name: NUM if name in ("base_lr", "rmsprop_decay", "rmsprop_eps") else (str if name == "optimizer" else int)
             for name in tfields if name != "seed"}
    tspec["checkpoint_every"] = int
    t = _take(top.get("train", {}), "train", tspec)
    checkpoint_every = t.pop("checkpoint_every", 0)
    if t.get("resample_interval", 1) == 0:
        t["resample_interval"] = None
    train = TrainConfig(seed=top["seed"], **t)
    try:
        train.validate()
    except ValueError as e:
        raise ConfigError(f"[train] {e}") from None

    e = _take(top.get("eval", {}), "eval", {
        "enabled": bool, "n_generated": int, "bandwidth": (str, int, float),
        "bandwidth_grid": _LIST, "bootstrap": int, "uniform_baseline": bool,
        "validation_fraction": NUM,
    })
    try:
        kde = KdeConfig(
            bandwidth=e.pop("bandwidth", "select"),
            bandwidth_grid=tuple(e.pop("bandwidth_grid", DEFAULT_GRID)),
            validation_fraction=e.pop("validation_fraction", 0.5),
        )
    except ValueError as err:
        raise ConfigError(f"[eval] {err}") from None
    ev = EvalConfig(kde=kde, **e)
    if ev.n_generated < 1:
        raise ConfigError("[eval] n_generated must be >= 1")

    out = _take(top.get("output", {}), "output", {"timing": bool})
    return ExperimentConfig(
        seed=top["seed"],
        output_dir=_resolve(base, top.get("output_dir", "runs/experiment")),
        data=data, generator=gen, kernel=kernel, train=train,
        checkpoint_every=checkpoint_every, eval=ev, timing=out.get("timing", False),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), path.parent)


PRESETS = {
    "gaussian1d": """
seed = 20150603
output_dir = "runs/gaussian1d"

[data]
source = "gaussian"
n = 200
mean = [0.0]
std = [1.0]
n_probe = 200
n_validation = 200
n_test = 200

[generator]
kind = "affine"
mu = [2.5]
sigma = [0.1]

[kernel]
family = "rbf"
bandwidth = "median"

[train]
m_generated = 50
minibatch_size = 200
iterations = 250
base_lr = 0.5
optimizer = "sgd"
snapshot_every = 10

[eval]
n_generated = 200
bandwidth_grid = [0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0]
""",
    "gaussian2d": """
seed = 20150604
output_dir = "runs/gaussian2d"

[data]
source = "gaussian"
n = 200
mean = [1.0, -1.0]
std = [0.5, 2.0]
n_probe = 200
n_validation = 200
n_test = 200

[generator]
kind = "affine"
mu = [-2.0, 2.0]
sigma = [0.1, 0.1]

[kernel]
family = "rbf"
bandwidth = "median"

[train]
m_generated = 50
minibatch_size = 200
iterations = 500
base_lr = 0.5
optimizer = "sgd"
snapshot_every = 10

[eval]
n_generated = 200
bandwidth_grid = [0.1, 0.2, 0.3, 0.5, 0.75, 1.0]
""",
    "mnist-desk": """
seed = 20150605
output_dir = "runs/mnist-desk"

[data]
source = "idx"
path = "data/mnist5k-images-idx3-ubyte.gz"
subsample = 2100

[data.split]
train = 1000
probe = 100
validation = 500
test = 500

[generator]
kind = "mlp"
noise_dim = 10
hidden = [64, 32, 64]

[kernel]
family = "rbf"
bandwidth = "median"

[train]
m_generated = 100
minibatch_size = 100
resample_interval = 300
iterations = 5000
base_lr = 0.001
optimizer = "rmsprop"
snapshot_every = 100
checkpoint_every = 1000

[eval]
n_generated = 500
uniform_baseline = true
""",
}

BOUNDS_DEMO = {
    "p1": 1, "gamma1": 2.0, "p2": 1, "gamma2": 2.0, "delta": 0.05,
    "m_grid": [50, 200, 800], "eps_grid": [0.1, 0.2, 0.4], "trials": 1000, "seed": 20150606,
}


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return parse_config(PRESETS[name], REPO_ROOT)

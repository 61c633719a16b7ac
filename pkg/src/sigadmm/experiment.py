"""Grid x trials experiment runner with seeded trials and aggregated result tables."""

from __future__ import annotations

import ast
import csv
import hashlib
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .admm import HyperParams, theory_params, train
from .bench import TargetFunction, make_dataset, metrics
from .init import InitScheme, init_weights, normalized_init
from .net import RELU, SIGMOID, predict
from .sgd import SGDConfig, train_sgd

log = logging.getLogger(__name__)

OPTIMIZERS = ("admm", "sgd_sigmoid", "sgd_relu")
GRID_KEYS = ("depths", "widths", "inits", "lams", "betas")


@dataclass
class ExperimentConfig:
    """One sweep: the product of the grid lists, each point run ``trials`` times.

    ``depths`` counts hidden layers. ``lams``/``betas`` are only swept for
    ADMM; SGD runs use the scalar ``lr0``/``decay``/... fields.
    """

    task: str = "square"
    optimizer: str = "admm"
    depths: List[int] = field(default_factory=lambda: [2])
    widths: List[int] = field(default_factory=lambda: [100])
    inits: List[str] = field(default_factory=lambda: ["msra:8"])
    lams: List[float] = field(default_factory=lambda: [1e-6])
    betas: List[float] = field(default_factory=lambda: [1.0])
    epochs: int = 2000
    n_train: int = 2000
    n_test: int = 1000
    noise_std: float = 0.0
    bias_row: bool = False
    trials: int = 20
    seed: int = 0
    mode: str = "practical"
    kkt_tol: float = 0.0
    lr0: float = 0.1
    decay: float = 0.95
    decay_every: int = 10
    batch_size: int = 50
    reg: float = 0.0
    workers: int = 1
    diagnostics: bool = True

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        for key in GRID_KEYS:
            if not list(getattr(self, key)):
                raise ValueError(f"grid {key!r} is empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for s in self.inits:
            InitScheme.parse(s)

    def grid(self) -> List[Dict[str, Any]]:
        """Grid points in deterministic (lexicographic) order."""
        lams = self.lams if self.optimizer == "admm" else [None]
        betas = self.betas if self.optimizer == "admm" else [None]
        pts = itertools.product(self.depths, self.widths, self.inits, lams, betas)
        return [dict(depth=d, width=w, init=i, lam=l, beta=b) for d, w, i, l, b in pts]

    def config_hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k not in ("workers",)}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _coerce(name: str, raw: str, kind):
    text = raw.strip()
    if name in GRID_KEYS:
        if text.startswith("["):
            items = ast.literal_eval(text)
        else:
            items = [t.strip() for t in text.split(",") if t.strip()]
        conv = {"depths": int, "widths": int, "inits": str, "lams": float, "betas": float}[name]
        return [conv(x) for x in items]
    if kind is bool or kind == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: not a boolean: {raw!r}")
    if kind in (int, "int"):
        return int(float(text))
    if kind in (float, "float"):
        return float(text)
    return text.strip("\"'")


def parse_config_text(text: str, origin: str = "<config>") -> Dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment; lists as ``[a, b]`` or ``a, b``."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    out: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"{origin}:{lineno}: expected 'key = value'")
        if key not in types:
            raise ValueError(f"{origin}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value, types[key])
        except (ValueError, SyntaxError) as exc:
            raise ValueError(f"{origin}:{lineno}: {exc}") from None
    return out


def load_config(path, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(), str(path)) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def trial_seed(master: int, point: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, point, trial]).generate_state(1)[0])


def data_seed(master: int, trial: int) -> int:
    # shared by all grid points of a trial so they see the same data
    return int(np.random.SeedSequence([master, 2**31, trial]).generate_state(1)[0])


@dataclass
class TrialResult:
    point: int
    trial: int
    seed: int
    metric: float
    num_params: int
    ok: bool
    error: str = ""
    trace: Optional[Any] = None


def run_trial(cfg: ExperimentConfig, point: int, trial: int) -> TrialResult:
    coords = cfg.grid()[point]
    seed = trial_seed(cfg.seed, point, trial)
    try:
        ds = make_dataset(cfg.task, cfg.n_train, cfg.n_test, cfg.noise_std, data_seed(cfg.seed, trial),
                          bias_row=cfg.bias_row)
        dims = [ds.X_train.shape[0]] + [coords["width"]] * coords["depth"] + [1]
        act = RELU if cfg.optimizer == "sgd_relu" else SIGMOID
        if cfg.optimizer == "admm":
            if cfg.mode == "theory":
                net0 = normalized_init(dims, seed)
                hp = theory_params(net0, ds.X_train, ds.Y_train, epochs=cfg.epochs)
            else:
                net0 = init_weights(dims, coords["init"], seed)
                hp = HyperParams(lam=coords["lam"], beta=coords["beta"], mode="practical",
                                 epochs=cfg.epochs, kkt_tol=cfg.kkt_tol)
            net, trace = train(net0, ds.X_train, ds.Y_train, hp, diagnostics=cfg.diagnostics)
        else:
            net0 = init_weights(dims, coords["init"], seed, act=act)
            sc = SGDConfig(cfg.lr0, cfg.decay, cfg.decay_every, cfg.batch_size, cfg.epochs, cfg.reg)
            net, trace = train_sgd(net0, ds, sc, seed)
        metric = metrics(predict(net, ds.X_test), ds.Y_test)["mse"]
        ok = math.isfinite(metric)
        return TrialResult(point, trial, seed, metric, net0.num_params, ok,
                           "" if ok else "non-finite metric", trace)
    except Exception as exc:  # a failed trial is recorded, not fatal
        log.warning("trial %d of point %d failed: %s", trial, point, exc)
        return TrialResult(point, trial, seed, float("nan"), 0, False, f"{type(exc).__name__}: {exc}")


def _run_trial_args(args):
    return run_trial(*args)


@dataclass
class ResultRow:
    depth: int
    width: int
    init: str
    lam: Optional[float]
    beta: Optional[float]
    num_params: int
    mean: float
    std: float
    median: float
    n_ok: int
    n_failed: int
    best: bool = False

    COLUMNS = ("depth", "width", "init", "lam", "beta", "num_params", "mean", "std",
               "median", "n_ok", "n_failed", "best")


@dataclass
class ResultTable:
    config: ExperimentConfig
    rows: List[ResultRow]
    trials: List[TrialResult]

    @property
    def best(self) -> Optional[ResultRow]:
        return next((r for r in self.rows if r.best), None)


def aggregate(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean, population std and median."""
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std()), float(np.median(v))


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    grid = cfg.grid()
    jobs = [(cfg, p, t) for p in range(len(grid)) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_trial_args, jobs))
    else:
        results = [run_trial(*j) for j in jobs]

    rows = []
    for p, coords in enumerate(grid):
        mine = [r for r in results if r.point == p]
        good = [r.metric for r in mine if r.ok]
        dims = [TargetFunction(cfg.task).dim + int(cfg.bias_row)] + [coords["width"]] * coords["depth"] + [1]
        n_params = next((r.num_params for r in mine if r.ok), sum(a * b for a, b in zip(dims[:-1], dims[1:])))
        mean, std, med = aggregate(good) if good else (float("nan"),) * 3
        rows.append(ResultRow(coords["depth"], coords["width"], coords["init"], coords["lam"], coords["beta"],
                              n_params, mean, std, med, len(good), len(mine) - len(good)))
    ranked = [r for r in rows if r.n_ok > 0]
    if ranked:
        # mean, then fewer parameters, then grid order
        best = min(ranked, key=lambda r: (r.mean, r.num_params, rows.index(r)))
        best.best = True
    return ResultTable(cfg, rows, results)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(table: ResultTable, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ResultRow.COLUMNS)
        for r in table.rows:
            w.writerow([_fmt(getattr(r, c)) for c in ResultRow.COLUMNS])


def read_results_csv(path) -> List[ResultRow]:
    conv = {"depth": int, "width": int, "init": str, "num_params": int, "n_ok": int, "n_failed": int,
            "mean": float, "std": float, "median": float}
    rows = []
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for c in ResultRow.COLUMNS:
                v = rec[c]
                if c in ("lam", "beta"):
                    kw[c] = float(v) if v else None
                elif c == "best":
                    kw[c] = v == "1"
                else:
                    kw[c] = conv[c](v)
            rows.append(ResultRow(**kw))
    return rows


def emit_outputs(table: ResultTable, out_dir) -> Dict[str, Path]:
    """Write ``results.csv``, ``summary.json`` and ``traces/<point>_<trial>.csv``."""
    out = Path(out_dir)
    traces = out / "traces"
    try:
        traces.mkdir(parents=True, exist_ok=True)
        write_results_csv(table, out / "results.csv")
        for r in table.trials:
            if r.trace is not None:
                r.trace.to_csv(traces / f"p{r.point:03d}_t{r.trial:03d}.csv")
        best = table.best
        summary = {
            "config": asdict(table.config),
            "config_hash": table.config.config_hash(),
            "best": asdict(best) if best else None,
            "rows": [asdict(r) for r in table.rows],
            "failures": [{"point": r.point, "trial": r.trial, "error": r.error} for r in table.trials if not r.ok],
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default, allow_nan=True))
    except OSError as exc:
        raise OSError(f"could not write outputs under {out}: {exc}") from exc
    return {"results": out / "results.csv", "summary": out / "summary.json", "traces": traces}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")

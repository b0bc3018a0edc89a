"""Experiment orchestration: config parsing, deterministic parallel trials,
and CSV/JSON persistence.

Config files are flat ``key = value`` text ('#' starts a comment); unknown
keys are rejected.  A grid is either the cartesian product of comma lists
for n, q, s, or a comma list ``nqs`` with scalar n and s (q is derived as
nqs/(n*s)).  Modes:

- ``pistar-good``: draw an instance, test whether the planted permutation is
  good (scales to large n),
- ``search-small`` / ``map-small``: run the exhaustive algorithms (n <= 10
  unless force_large) and record the overlap with the planted permutation,
- ``sweep``: like pistar-good over the grid, summarized per point.

Every trial owns a seed derived from (base_seed, point index, trial index)
through splitmix64 mixing, touches no shared state, and is therefore safe
to farm out to a process pool.  Results are sorted by (point, trial) before
writing, so the CSV is byte-identical for any worker count.  Wall-clock
times are kept on the in-memory records only; they never enter the CSV.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, ParameterError
from .model import ModelParams, generate
from .perms import overlap
from .recovery import MAX_EXHAUSTIVE_N, find_good, is_good, map_estimate
from .theory import TheoryReport, theory_report

MODES = ("pistar-good", "search-small", "map-small", "sweep")

CSV_VERSION_LINE = "# align-lab csv v1"
CSV_COLUMNS = (
    "n",
    "q",
    "s",
    "alpha",
    "point_index",
    "trial_index",
    "seed",
    "pistar_good",
    "found_good",
    "overlap",
    "perms_tested",
    "kl",
    "fano_clamped",
    "cond_mean_degree",
    "cond_correlation",
    "cond_sparsity_beta",
    "cond_sparsity_gamma",
    "nqs",
)

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, point_index: int, trial_index: int) -> int:
    """Stable 64-bit trial seed: s = M(M(M(base) + point) + trial).

    M is the splitmix64 finalizer; all additions are mod 2^64.  For a fixed
    (base, point) the map is injective in the trial index, so trial seeds
    never collide within a point.
    """
    h = _splitmix64(base_seed & _MASK64)
    h = _splitmix64((h + point_index) & _MASK64)
    return _splitmix64((h + trial_index) & _MASK64)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    points: tuple[tuple[int, float, float], ...]
    alpha: float
    beta: float | None
    gamma: float | None
    trials: int
    base_seed: int
    workers: int
    output: Path
    force_large: bool = False
    limit: int | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "points": [list(p) for p in self.points],
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "workers": self.workers,
            "output": str(self.output),
            "force_large": self.force_large,
            "limit": self.limit,
        }


_SCALAR_KEYS = {
    "mode": str,
    "alpha": float,
    "beta": float,
    "gamma": float,
    "trials": int,
    "base_seed": int,
    "workers": int,
    "output": str,
    "force_large": None,  # boolean, parsed specially
    "limit": int,
}
_LIST_KEYS = {"n": int, "q": float, "s": float, "nqs": float}


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key} must be true/false, got {raw!r}")


def parse_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a flat key=value config file."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCALAR_KEYS and key not in _LIST_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    def parsed(key: str, default=None):
        if key not in raw:
            return default
        caster = _SCALAR_KEYS[key]
        if caster is None:
            return _parse_bool(raw[key], key)
        try:
            return caster(raw[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc

    def parsed_list(key: str) -> list | None:
        if key not in raw:
            return None
        caster = _LIST_KEYS[key]
        try:
            return [caster(tok.strip()) for tok in raw[key].split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc

    mode = parsed("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if "output" not in raw:
        raise ConfigError("output is required")
    trials = parsed("trials", 0)
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")

    ns = parsed_list("n")
    qs = parsed_list("q")
    ss = parsed_list("s")
    nqs_list = parsed_list("nqs")
    if not ns or not ss:
        raise ConfigError("n and s are required")
    if (qs is None) == (nqs_list is None):
        raise ConfigError("exactly one of q or nqs must be given")
    points: list[tuple[int, float, float]] = []
    if nqs_list is not None:
        if len(ns) != 1 or len(ss) != 1:
            raise ConfigError("an nqs grid needs scalar n and s")
        n, s = ns[0], ss[0]
        points = [(n, target / (n * s), s) for target in nqs_list]
    else:
        points = [(n, q, s) for n in ns for q in qs for s in ss]

    alpha = parsed("alpha")
    if alpha is None:
        raise ConfigError("alpha is required")
    beta, gamma = parsed("beta"), parsed("gamma")
    if (beta is None) != (gamma is None):
        raise ConfigError("beta and gamma must be given together")
    force_large = parsed("force_large", False)

    for n, q, s in points:
        try:
            ModelParams(n, q, s)
        except ParameterError as exc:
            raise ConfigError(f"grid point (n={n}, q={q}, s={s}) is invalid: {exc}") from exc
        if q <= 0.0:
            raise ConfigError(f"grid point (n={n}, q={q}, s={s}) needs q > 0 to simulate")
        if mode in ("search-small", "map-small") and n > MAX_EXHAUSTIVE_N and not force_large:
            raise ConfigError(f"mode {mode} needs n <= {MAX_EXHAUSTIVE_N} (or force_large)")

    return ExperimentConfig(
        mode=mode,
        points=tuple(points),
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        trials=trials,
        base_seed=parsed("base_seed", 0),
        workers=max(1, parsed("workers", 1)),
        output=Path(parsed("output")),
        force_large=force_large,
        limit=parsed("limit", None),
    )


@dataclass(frozen=True)
class TrialRecord:
    n: int
    q: float
    s: float
    alpha: float
    point_index: int
    trial_index: int
    seed: int
    pistar_good: bool
    found_good: bool | None
    overlap: float | None
    perms_tested: int | None
    wall_time_ms: float
    kl: float
    fano_clamped: float
    cond_mean_degree: bool | None
    cond_correlation: bool | None
    cond_sparsity_beta: bool | None
    cond_sparsity_gamma: bool | None
    nqs: float

    def csv_row(self) -> list[str]:
        return [_format_cell(getattr(self, col)) for col in CSV_COLUMNS]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class _TrialTask:
    mode: str
    n: int
    q: float
    s: float
    alpha: float
    point_index: int
    trial_index: int
    seed: int
    force_large: bool
    limit: int | None


@dataclass(frozen=True)
class _TrialOutcome:
    point_index: int
    trial_index: int
    seed: int
    pistar_good: bool
    found_good: bool | None
    overlap: float | None
    perms_tested: int | None
    wall_time_ms: float


def _execute_trial(task: _TrialTask) -> _TrialOutcome:
    start = time.perf_counter()
    params = ModelParams(task.n, task.q, task.s)
    inst = generate(params, task.seed)
    pistar_good = is_good(inst.g_a, inst.g_b, inst.pi_star, params, task.alpha).is_good
    found_good: bool | None = None
    beta_overlap: float | None = None
    perms_tested: int | None = None
    if task.mode == "search-small":
        res = find_good(
            inst.g_a, inst.g_b, params, task.alpha,
            limit=task.limit, force_large=task.force_large,
        )
        found_good = res.permutation is not None
        perms_tested = res.tested
        if res.permutation is not None:
            beta_overlap = overlap(res.permutation, inst.pi_star)
    elif task.mode == "map-small":
        pi_hat = map_estimate(inst.g_a, inst.g_b, force_large=task.force_large)
        beta_overlap = overlap(pi_hat, inst.pi_star)
        perms_tested = math.factorial(task.n)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return _TrialOutcome(
        point_index=task.point_index,
        trial_index=task.trial_index,
        seed=task.seed,
        pistar_good=pistar_good,
        found_good=found_good,
        overlap=beta_overlap,
        perms_tested=perms_tested,
        wall_time_ms=wall_ms,
    )


@dataclass(frozen=True)
class PointSummary:
    point_index: int
    n: int
    q: float
    s: float
    nqs: float
    trials: int
    success_count: int

    @property
    def success_fraction(self) -> float:
        return self.success_count / self.trials


@dataclass(frozen=True)
class RunResult:
    csv_path: Path
    sidecar_path: Path
    records: tuple[TrialRecord, ...]
    summaries: tuple[PointSummary, ...]


def run(config: ExperimentConfig) -> RunResult:
    """Execute all trials of a config and persist the results.

    Output is a CSV with the fixed CSV_COLUMNS order (version header
    comment first) plus a JSON sidecar of the resolved config at
    ``<output>.json``.  Identical configs produce byte-identical CSVs,
    independent of the worker count.
    """
    tasks = [
        _TrialTask(
            mode=config.mode,
            n=n,
            q=q,
            s=s,
            alpha=config.alpha,
            point_index=pi,
            trial_index=ti,
            seed=derive_seed(config.base_seed, pi, ti),
            force_large=config.force_large,
            limit=config.limit,
        )
        for pi, (n, q, s) in enumerate(config.points)
        for ti in range(config.trials)
    ]

    if config.workers <= 1:
        outcomes = [_execute_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunk = max(1, len(tasks) // (config.workers * 4))
            outcomes = list(pool.map(_execute_trial, tasks, chunksize=chunk))
    outcomes.sort(key=lambda o: (o.point_index, o.trial_index))

    reports: dict[int, TheoryReport] = {
        pi: theory_report(n, q, s, config.alpha, config.beta, config.gamma)
        for pi, (n, q, s) in enumerate(config.points)
    }
    records = []
    for out in outcomes:
        n, q, s = config.points[out.point_index]
        rep = reports[out.point_index]
        conds = rep.conditions
        records.append(
            TrialRecord(
                n=n,
                q=q,
                s=s,
                alpha=config.alpha,
                point_index=out.point_index,
                trial_index=out.trial_index,
                seed=out.seed,
                pistar_good=out.pistar_good,
                found_good=out.found_good,
                overlap=out.overlap,
                perms_tested=out.perms_tested,
                wall_time_ms=out.wall_time_ms,
                kl=rep.kl,
                fano_clamped=rep.fano_clamped,
                cond_mean_degree=conds.cond_mean_degree if conds else None,
                cond_correlation=conds.cond_correlation if conds else None,
                cond_sparsity_beta=conds.cond_sparsity_beta if conds else None,
                cond_sparsity_gamma=conds.cond_sparsity_gamma if conds else None,
                nqs=rep.nqs,
            )
        )

    summaries = []
    for pi, (n, q, s) in enumerate(config.points):
        point_records = [r for r in records if r.point_index == pi]
        summaries.append(
            PointSummary(
                point_index=pi,
                n=n,
                q=q,
                s=s,
                nqs=n * q * s,
                trials=len(point_records),
                success_count=sum(1 for r in point_records if r.pistar_good),
            )
        )

    csv_path = config.output
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_VERSION_LINE, ",".join(CSV_COLUMNS)]
    lines.extend(",".join(r.csv_row()) for r in records)
    csv_path.write_text("\n".join(lines) + "\n")

    sidecar_path = Path(str(csv_path) + ".json")
    sidecar_path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")

    return RunResult(
        csv_path=csv_path,
        sidecar_path=sidecar_path,
        records=tuple(records),
        summaries=tuple(summaries),
    )


def with_workers(config: ExperimentConfig, workers: int) -> ExperimentConfig:
    """Copy of the config with the worker count replaced (env override hook)."""
    return replace(config, workers=max(1, workers))

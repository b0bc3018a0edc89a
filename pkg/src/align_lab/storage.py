"""On-disk formats (all text, all 0-indexed).

Graph file: first line ``n m``, then m lines ``u v`` with 0 <= u < v < n,
sorted lexicographically.  Permutation file: one line of n whitespace-
separated images.  Instance bundle: a directory holding ``ga.edges``,
``gb.edges``, ``pistar.perm`` and ``meta.json`` (params plus seed).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .model import CorrelatedInstance, Graph, ModelParams
from .perms import Permutation

GA_FILE = "ga.edges"
GB_FILE = "gb.edges"
PISTAR_FILE = "pistar.perm"
META_FILE = "meta.json"


def write_graph(g: Graph, path: str | Path) -> None:
    e = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.num_edges}\n")
        fh.writelines(f"{u} {v}\n" for u, v in e)


def read_graph(path: str | Path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParameterError(f"{path}: first line must be 'n m'")
        n, m = int(header[0]), int(header[1])
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.empty((0, 2), np.int64)
    if data.shape != (m, 2):
        raise ParameterError(f"{path}: expected {m} edge lines, found shape {data.shape}")
    if m and not np.all(data[:, 0] < data[:, 1]):
        raise ParameterError(f"{path}: edges must satisfy u < v")
    keys = data[:, 0] * n + data[:, 1]
    if m and not np.all(keys[1:] > keys[:-1]):
        raise ParameterError(f"{path}: edges must be sorted lexicographically")
    return Graph.from_edges(n, data)


def write_permutation(pi: Permutation, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(" ".join(str(x) for x in pi.image) + "\n")


def read_permutation(path: str | Path) -> Permutation:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ParameterError(f"{path}: empty permutation file")
    return Permutation([int(t) for t in tokens])


def write_instance(inst: CorrelatedInstance, directory: str | Path) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_graph(inst.g_a, d / GA_FILE)
    write_graph(inst.g_b, d / GB_FILE)
    write_permutation(inst.pi_star, d / PISTAR_FILE)
    meta = {"n": inst.params.n, "q": inst.params.q, "s": inst.params.s, "seed": inst.seed}
    (d / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return d


def read_instance(directory: str | Path) -> CorrelatedInstance:
    d = Path(directory)
    try:
        meta = json.loads((d / META_FILE).read_text())
    except FileNotFoundError as exc:
        raise ParameterError(f"{d}: not an instance bundle ({exc})") from exc
    params = ModelParams(n=int(meta["n"]), q=float(meta["q"]), s=float(meta["s"]))
    return CorrelatedInstance(
        g_a=read_graph(d / GA_FILE),
        g_b=read_graph(d / GB_FILE),
        pi_star=read_permutation(d / PISTAR_FILE),
        params=params,
        seed=int(meta["seed"]),
    )

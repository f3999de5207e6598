"""Reading, writing, generating and importing instances.

Instance JSON (``format_version`` 1)::

    {
      "format_version": 1,
      "name": "toy",
      "n_clients": N, "n_candidates": M, "n_substations": T,
      "n_stations": Ms,
      "max_client_dist": 1500.0 | "unbounded",
      "max_substation_dist": "unbounded",
      "users": [N floats > 0],
      "mp": [T ints >= 0],

      # either explicit matrices
      "dc": [[M floats] x N], "de": [[M floats] x T]

      # or coordinates, converted at load time
      "distance": "euclidean" | "haversine",
      "clients": [[x, y] x N], "candidates": [[x, y] x M],
      "substations": [[x, y] x T]
    }

Coordinates are planar metres for ``euclidean`` and ``[lon, lat]`` degrees for
``haversine``. A solution file is a JSON list of open candidate indices.

City CSV headers (exact, case-sensitive)::

    clients.csv      id,lon,lat,population
    candidates.csv   id,lon,lat
    substations.csv  id,lon,lat,capacity
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from evcsl.model import UNBOUNDED, Instance, InstanceError, Solution, SolutionError

FORMAT_VERSION = 1
EARTH_RADIUS_M = 6_371_000.0

CLIENT_HEADER = ["id", "lon", "lat", "population"]
CANDIDATE_HEADER = ["id", "lon", "lat"]
SUBSTATION_HEADER = ["id", "lon", "lat", "capacity"]


# --------------------------------------------------------------------------
# distances
# --------------------------------------------------------------------------


def euclidean_matrix(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    return np.sqrt(dx * dx + dy * dy)


def haversine_matrix(a, b, radius=EARTH_RADIUS_M) -> np.ndarray:
    """Great-circle distances in metres between [lon, lat] degree rows."""
    a = np.radians(np.asarray(a, dtype=np.float64))
    b = np.radians(np.asarray(b, dtype=np.float64))
    lon1, lat1 = a[:, None, 0], a[:, None, 1]
    lon2, lat2 = b[None, :, 0], b[None, :, 1]
    h = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * radius * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


METRICS = {"euclidean": euclidean_matrix, "haversine": haversine_matrix}


def instance_from_coords(clients, candidates, substations, users, mp, n_stations,
                         metric="euclidean", max_client_dist=UNBOUNDED,
                         max_substation_dist=UNBOUNDED, name="instance") -> Instance:
    if metric not in METRICS:
        raise InstanceError(f"distance: unknown metric {metric!r}")
    clients = _coords("clients", clients)
    candidates = _coords("candidates", candidates)
    substations = _coords("substations", substations)
    fn = METRICS[metric]
    return Instance(
        users=users, dc=fn(clients, candidates), de=fn(substations, candidates),
        substation_capacity=mp, n_stations=n_stations,
        max_client_dist=max_client_dist, max_substation_dist=max_substation_dist,
        name=name, metric=metric, client_coords=clients,
        candidate_coords=candidates, substation_coords=substations)


def _coords(label, pts):
    a = np.asarray(pts, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] == 0:
        raise InstanceError(f"{label}: expected a non-empty list of [x, y] pairs")
    if not np.all(np.isfinite(a)):
        raise InstanceError(f"{label}: coordinates must be finite")
    return a


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def _limit_from_json(label, v):
    if v is None or v == "unbounded":
        return UNBOUNDED
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InstanceError(f"{label}: expected a number or \"unbounded\"")
    return float(v)


def _limit_to_json(v):
    return "unbounded" if math.isinf(v) else v


def instance_from_dict(d: dict) -> Instance:
    version = d.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise InstanceError(f"format_version: unsupported version {version!r}")
    for key in ("n_stations", "users", "mp"):
        if key not in d:
            raise InstanceError(f"{key}: missing")
    common = dict(
        users=d["users"], mp=d["mp"], n_stations=d["n_stations"],
        max_client_dist=_limit_from_json("max_client_dist", d.get("max_client_dist")),
        max_substation_dist=_limit_from_json("max_substation_dist",
                                             d.get("max_substation_dist")),
        name=d.get("name", "instance"))
    if "dc" in d or "de" in d:
        for key in ("dc", "de"):
            if key not in d:
                raise InstanceError(f"{key}: missing (matrix form needs both dc and de)")
        inst = Instance(users=common["users"], dc=d["dc"], de=d["de"],
                        substation_capacity=common["mp"], n_stations=common["n_stations"],
                        max_client_dist=common["max_client_dist"],
                        max_substation_dist=common["max_substation_dist"],
                        name=common["name"])
    else:
        for key in ("distance", "clients", "candidates", "substations"):
            if key not in d:
                raise InstanceError(f"{key}: missing (need dc/de or coordinates)")
        inst = instance_from_coords(d["clients"], d["candidates"], d["substations"],
                                    metric=d["distance"], **common)
    for key, actual in (("n_clients", inst.n_clients), ("n_candidates", inst.n_candidates),
                        ("n_substations", inst.n_substations)):
        if key in d and d[key] != actual:
            raise InstanceError(f"{key}: declared {d[key]} but data has {actual}")
    return inst


def instance_to_dict(inst: Instance, matrices: Optional[bool] = None) -> dict:
    """Serialise; coordinate form is used when coordinates exist unless
    ``matrices`` is true."""
    d = {
        "format_version": FORMAT_VERSION,
        "name": inst.name,
        "n_clients": inst.n_clients,
        "n_candidates": inst.n_candidates,
        "n_substations": inst.n_substations,
        "n_stations": inst.n_stations,
        "max_client_dist": _limit_to_json(inst.max_client_dist),
        "max_substation_dist": _limit_to_json(inst.max_substation_dist),
        "users": inst.users.tolist(),
        "mp": inst.substation_capacity.tolist(),
    }
    if matrices is None:
        matrices = inst.metric is None
    if matrices:
        d["dc"] = inst.dc.tolist()
        d["de"] = inst.de.tolist()
    else:
        d["distance"] = inst.metric
        d["clients"] = inst.client_coords.tolist()
        d["candidates"] = inst.candidate_coords.tolist()
        d["substations"] = inst.substation_coords.tolist()
    return d


def load_instance(path: Union[str, Path]) -> Instance:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise InstanceError(f"{path}: top level must be an object")
    return instance_from_dict(d)


def save_instance(inst: Instance, path: Union[str, Path], matrices: Optional[bool] = None):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst, matrices), fh)


def save_solution(solution: Solution, path: Union[str, Path]):
    with open(path, "w") as fh:
        json.dump(list(solution.open), fh)
        fh.write("\n")


def load_solution(path: Union[str, Path], instance: Optional[Instance] = None) -> Solution:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in data):
        raise SolutionError(f"{path}: expected a JSON list of integer indices")
    sol = Solution(tuple(data))
    if instance is not None:
        sol.validate(instance)
    return sol


# --------------------------------------------------------------------------
# synthetic generator
# --------------------------------------------------------------------------


@dataclass
class SyntheticSpec:
    n_clients: int
    n_candidates: int
    n_substations: int
    n_stations: int
    geometry: str = "uniform"          # "uniform" | "clustered"
    side: float = 10_000.0             # square side, metres
    n_hotspots: int = 8
    hotspot_stddev: float = 1_000.0    # metres
    population: tuple = (100, 3000)    # u_c drawn uniformly in [lo, hi]
    capacity: tuple = (2, 6)           # mp_e drawn uniformly in [lo, hi]
    max_client_dist: float = UNBOUNDED
    max_substation_dist: float = UNBOUNDED
    seed: int = 0
    name: Optional[str] = None


MALAGA_LIKE = SyntheticSpec(
    n_clients=363, n_candidates=33_550, n_substations=14, n_stations=45,
    geometry="clustered", side=14_000.0, n_hotspots=12, hotspot_stddev=1_600.0,
    population=(400, 2730), capacity=(4, 8), max_substation_dist=7_000.0,
    seed=2021, name="malaga-like")

SYNTHETIC_PRESETS = {"malaga-like": MALAGA_LIKE}


def _points(rng, n, spec, centers):
    if spec.geometry == "uniform":
        return rng.uniform(0.0, spec.side, size=(n, 2))
    which = rng.integers(0, len(centers), size=n)
    pts = centers[which] + rng.normal(0.0, spec.hotspot_stddev, size=(n, 2))
    return np.clip(pts, 0.0, spec.side)


def generate_synthetic(spec: SyntheticSpec) -> Instance:
    """Deterministic planar instance for a given spec (Euclidean metres)."""
    for label in ("n_clients", "n_candidates", "n_substations", "n_stations"):
        if getattr(spec, label) < 1:
            raise InstanceError(f"{label}: must be positive")
    if spec.geometry not in ("uniform", "clustered"):
        raise InstanceError(f"geometry: unknown {spec.geometry!r}")
    if spec.n_stations > spec.n_candidates:
        raise InstanceError("n_stations: exceeds n_candidates")
    lo, hi = spec.population
    if lo <= 0 or hi < lo:
        raise InstanceError("population: need 0 < lo <= hi")
    clo, chi = spec.capacity
    if clo < 0 or chi < clo:
        raise InstanceError("capacity: need 0 <= lo <= hi")
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(0.15 * spec.side, 0.85 * spec.side, size=(max(spec.n_hotspots, 1), 2))
    clients = _points(rng, spec.n_clients, spec, centers)
    candidates = _points(rng, spec.n_candidates, spec, centers)
    substations = _points(rng, spec.n_substations, spec, centers)
    users = rng.uniform(lo, hi, size=spec.n_clients).round()
    users = np.maximum(users, 1.0)
    mp = rng.integers(clo, chi + 1, size=spec.n_substations)
    t = 0
    while mp.sum() < spec.n_stations:
        mp[t % spec.n_substations] += 1
        t += 1
    name = spec.name or f"synthetic-{spec.geometry}-{spec.seed}"
    return instance_from_coords(
        clients, candidates, substations, users, mp, spec.n_stations,
        metric="euclidean", max_client_dist=spec.max_client_dist,
        max_substation_dist=spec.max_substation_dist, name=name)


# --------------------------------------------------------------------------
# CSV import
# --------------------------------------------------------------------------


def _read_table(path, header):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise InstanceError(f"{path}: empty file") from None
        if got != header:
            raise InstanceError(f"{path}: header must be {','.join(header)}, got {','.join(got)}")
        ids, rows = [], []
        seen = set()
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise InstanceError(f"{path}:{lineno}: expected {len(header)} fields")
            rid = rec[0].strip()
            if not rid:
                raise InstanceError(f"{path}:{lineno}: missing id")
            if rid in seen:
                raise InstanceError(f"{path}:{lineno}: duplicate id {rid!r}")
            seen.add(rid)
            vals = []
            for name, raw in zip(header[1:], rec[1:]):
                try:
                    v = float(raw)
                except ValueError:
                    raise InstanceError(f"{path}:{lineno}: {name} is missing or not a number") from None
                if not math.isfinite(v):
                    raise InstanceError(f"{path}:{lineno}: {name} is not finite")
                vals.append(v)
            ids.append(rid)
            rows.append(vals)
    if not rows:
        raise InstanceError(f"{path}: no data rows")
    return ids, np.array(rows, dtype=np.float64)


def import_city(clients_csv, candidates_csv, substations_csv, n_stations: int,
                max_client_dist=UNBOUNDED, max_substation_dist=UNBOUNDED,
                name="city") -> Instance:
    """Build a haversine instance from pre-extracted city tables."""
    _, cl = _read_table(clients_csv, CLIENT_HEADER)
    _, ca = _read_table(candidates_csv, CANDIDATE_HEADER)
    _, su = _read_table(substations_csv, SUBSTATION_HEADER)
    for lineno, pop in enumerate(cl[:, 2], start=2):
        if pop <= 0:
            raise InstanceError(f"{clients_csv}:{lineno}: population must be > 0")
    caps = su[:, 2]
    for lineno, cap in enumerate(caps, start=2):
        if cap < 0 or cap != int(cap):
            raise InstanceError(f"{substations_csv}:{lineno}: capacity must be a non-negative integer")
    return instance_from_coords(
        cl[:, :2], ca[:, :2], su[:, :2], cl[:, 2], caps.astype(np.int64), n_stations,
        metric="haversine", max_client_dist=max_client_dist,
        max_substation_dist=max_substation_dist, name=name)

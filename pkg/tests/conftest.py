import itertools
import math

import numpy as np
import pytest

import evcsl
import evcsl.ga
import evcsl.solvers
import evcsl.vns
from evcsl.instance_io import SyntheticSpec, generate_synthetic
from evcsl.model import Instance


def make_instance(dc, users=None, de=None, mp=None, n_stations=1, dc_max=math.inf,
                  de_max=math.inf):
    dc = np.asarray(dc, dtype=float)
    n, m = dc.shape
    if users is None:
        users = np.ones(n)
    if de is None:
        de = np.zeros((1, m))
    if mp is None:
        mp = [max(n_stations, 1)] * np.asarray(de).shape[0]
    return Instance(users=users, dc=dc, de=de, substation_capacity=mp,
                    n_stations=n_stations, max_client_dist=dc_max, max_substation_dist=de_max)


def random_matrix_instance(rng, n=None, m=None, t=None, ms=None, ties=False,
                           bounded=True):
    """Small random instance; integer distances when ``ties`` to force equal keys."""
    n = n or int(rng.integers(2, 10))
    m = m or int(rng.integers(4, 12))
    t = t or int(rng.integers(1, 4))
    ms = ms or int(rng.integers(1, min(m, 5) + 1))
    if ties:
        dc = rng.integers(0, 6, size=(n, m)).astype(float)
        de = rng.integers(0, 6, size=(t, m)).astype(float)
    else:
        dc = rng.uniform(0, 1000, size=(n, m))
        de = rng.uniform(0, 1000, size=(t, m))
    mp = rng.integers(0, ms + 1, size=t)
    while mp.sum() < ms:
        mp[rng.integers(0, t)] += 1
    dc_max = math.inf
    de_max = math.inf
    if bounded and rng.random() < 0.5:
        dc_max = float(np.quantile(dc, 0.6))
    if bounded and rng.random() < 0.7:
        de_max = float(np.quantile(de, 0.5))
    users = rng.integers(1, 50, size=n).astype(float)
    return Instance(users=users, dc=dc, de=de, substation_capacity=mp, n_stations=ms,
                    max_client_dist=dc_max, max_substation_dist=de_max)


def tiny_synthetic(seed):
    """The seeded tiny instances used by the oracle-optimality checks."""
    rng = np.random.default_rng(10_000 + seed)
    spec = SyntheticSpec(
        n_clients=int(rng.integers(4, 11)), n_candidates=int(rng.integers(6, 13)),
        n_substations=int(rng.integers(1, 4)), n_stations=int(rng.integers(2, 5)),
        geometry="uniform", side=5_000.0, capacity=(1, 3),
        max_substation_dist=float(rng.choice([math.inf, 2_500.0, 3_500.0])),
        max_client_dist=float(rng.choice([math.inf, math.inf, 2_000.0])), seed=seed)
    return generate_synthetic(spec)


# --------------------------------------------------------------------------
# independent oracles (plain Python, no kernels)
# --------------------------------------------------------------------------


def feasible_by_enumeration(instance, open_set):
    """Try every station -> substation map."""
    t = instance.n_substations
    for combo in itertools.product(range(t), repeat=len(open_set)):
        load = [0] * t
        ok = True
        for s, e in zip(open_set, combo):
            if instance.de[e, s] > instance.max_substation_dist:
                ok = False
                break
            load[e] += 1
            if load[e] > instance.substation_capacity[e]:
                ok = False
                break
        if ok:
            return True
    return False


def naive_key(instance, open_set):
    total = 0.0
    viol = 0
    for c in range(instance.n_clients):
        d = min(float(instance.dc[c, s]) for s in open_set)
        total += float(instance.users[c]) * d
        if d > instance.max_client_dist:
            viol += 1
    if not feasible_by_enumeration(instance, open_set):
        viol += 1
    return viol, total


def naive_optimum(instance):
    best = None
    best_key = None
    for combo in itertools.combinations(range(instance.n_candidates), instance.n_stations):
        key = naive_key(instance, combo)
        if best_key is None or key < best_key:
            best, best_key = combo, key
    return best, best_key


# --------------------------------------------------------------------------
# trajectory recording for the monotone-trajectory acceptance criterion
# --------------------------------------------------------------------------

RECORDED_TRAJECTORIES = []


def _recording(fn):
    def wrapper(*args, **kwargs):
        result = fn(*args, **kwargs)
        RECORDED_TRAJECTORIES.append(
            (f"{result.algorithm}/{result.preset}/seed={result.seed}", result.trajectory,
             result.best.key))
        return result
    wrapper.__wrapped__ = fn
    return wrapper


@pytest.fixture(autouse=True, scope="session")
def record_trajectories():
    mp = pytest.MonkeyPatch()
    ga_rec = _recording(evcsl.ga.run_ga)
    vns_rec = _recording(evcsl.vns.run_vns)
    for mod in (evcsl.ga, evcsl.solvers, evcsl):
        mp.setattr(mod, "run_ga", ga_rec)
    for mod in (evcsl.vns, evcsl.solvers, evcsl):
        mp.setattr(mod, "run_vns", vns_rec)
    yield RECORDED_TRAJECTORIES
    mp.undo()


def pytest_collection_modifyitems(session, config, items):
    # the trajectory audit must see every run made by the rest of the suite
    last = [it for it in items if "test_monotone_trajectories" in it.name]
    rest = [it for it in items if it not in last]
    items[:] = rest + last


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

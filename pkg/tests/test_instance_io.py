import json
import math

import numpy as np
import pytest

from evcsl.instance_io import (MALAGA_LIKE, SyntheticSpec, euclidean_matrix,
                               generate_synthetic, haversine_matrix, import_city,
                               instance_from_dict, instance_to_dict, load_instance,
                               load_solution, save_instance, save_solution)
from evcsl.model import InstanceError, Solution, SolutionError, evaluate

from conftest import random_matrix_instance


def test_pythagorean_triangle():
    assert euclidean_matrix([[0, 0]], [[3, 4]])[0, 0] == 5.0


def test_one_degree_at_the_equator():
    d = haversine_matrix([[0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])[0]
    assert d == pytest.approx([111_195.0, 111_195.0], rel=0.005)


def test_haversine_is_symmetric_and_zero_on_diagonal():
    rng = np.random.default_rng(0)
    pts = np.column_stack((rng.uniform(-180, 180, 20), rng.uniform(-80, 80, 20)))
    d = haversine_matrix(pts, pts)
    assert np.allclose(d, d.T)
    assert np.allclose(np.diag(d), 0.0)
    assert d.max() <= math.pi * 6_371_000.0 + 1e-6


def test_matrix_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    inst = random_matrix_instance(rng)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert np.array_equal(back.dc, inst.dc) and np.array_equal(back.de, inst.de)
    assert np.array_equal(back.users, inst.users)
    assert np.array_equal(back.substation_capacity, inst.substation_capacity)
    assert back.max_client_dist == inst.max_client_dist
    assert back.max_substation_dist == inst.max_substation_dist
    assert back.n_stations == inst.n_stations


def test_coordinate_roundtrip_recomputes_the_same_distances(tmp_path):
    inst = generate_synthetic(SyntheticSpec(20, 30, 3, 4, max_client_dist=3000.0, seed=5))
    d = instance_to_dict(inst)
    assert d["distance"] == "euclidean" and "dc" not in d
    assert d["max_substation_dist"] == "unbounded"
    save_instance(inst, tmp_path / "a.json")
    back = load_instance(tmp_path / "a.json")
    assert np.array_equal(back.dc, inst.dc)
    assert back.max_client_dist == 3000.0
    sol = Solution((0, 1, 2, 3))
    assert evaluate(back, sol).objective == evaluate(inst, sol).objective
    assert "dc" in instance_to_dict(inst, matrices=True)


def test_unbounded_sentinel_and_missing_limits():
    d = {"n_stations": 1, "users": [1], "mp": [1], "dc": [[1, 2]], "de": [[0, 0]],
         "max_client_dist": "unbounded"}
    inst = instance_from_dict(d)
    assert math.isinf(inst.max_client_dist) and math.isinf(inst.max_substation_dist)
    with pytest.raises(InstanceError, match="max_client_dist"):
        instance_from_dict({**d, "max_client_dist": "far"})


@pytest.mark.parametrize("patch,field", [
    ({"format_version": 2}, "format_version"),
    ({"n_clients": 3}, "n_clients"),
    ({"users": [0]}, "users"),
    ({"dc": [[1, 2, 3]]}, "de"),
])
def test_dict_errors_name_the_field(patch, field):
    d = {"n_stations": 1, "users": [1], "mp": [1], "dc": [[1, 2]], "de": [[0, 0]]}
    with pytest.raises(InstanceError, match=field):
        instance_from_dict({**d, **patch})


def test_missing_keys():
    with pytest.raises(InstanceError, match="mp"):
        instance_from_dict({"n_stations": 1, "users": [1]})
    with pytest.raises(InstanceError, match="de"):
        instance_from_dict({"n_stations": 1, "users": [1], "mp": [1], "dc": [[1]]})
    with pytest.raises(InstanceError, match="distance"):
        instance_from_dict({"n_stations": 1, "users": [1], "mp": [1], "clients": [[0, 0]]})


def test_bad_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InstanceError, match="not valid JSON"):
        load_instance(p)
    p.write_text("[1, 2]")
    with pytest.raises(InstanceError, match="object"):
        load_instance(p)


def test_solution_files(tmp_path):
    inst = random_matrix_instance(np.random.default_rng(2), m=8, ms=3)
    p = tmp_path / "sol.json"
    save_solution(Solution((5, 1, 2)), p)
    assert p.read_text() == "[1, 2, 5]\n"
    assert load_solution(p, inst).open == (1, 2, 5)
    p.write_text(json.dumps([1, 2]))
    with pytest.raises(SolutionError, match="expected 3"):
        load_solution(p, inst)
    p.write_text(json.dumps([1, 2.5, 3]))
    with pytest.raises(SolutionError, match="integer"):
        load_solution(p)


def test_generator_is_deterministic():
    spec = SyntheticSpec(50, 200, 5, 10, geometry="clustered", seed=42)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    assert np.array_equal(a.dc, b.dc) and np.array_equal(a.users, b.users)
    c = generate_synthetic(SyntheticSpec(50, 200, 5, 10, geometry="clustered", seed=43))
    assert not np.array_equal(a.dc, c.dc)


def test_generator_tops_up_capacity():
    inst = generate_synthetic(SyntheticSpec(5, 40, 3, 30, capacity=(0, 1), seed=0))
    assert inst.substation_capacity.sum() >= 30


def test_generator_rejects_bad_specs():
    with pytest.raises(InstanceError, match="geometry"):
        generate_synthetic(SyntheticSpec(5, 10, 1, 2, geometry="ring"))
    with pytest.raises(InstanceError, match="n_stations"):
        generate_synthetic(SyntheticSpec(5, 10, 1, 20))
    with pytest.raises(InstanceError, match="population"):
        generate_synthetic(SyntheticSpec(5, 10, 1, 2, population=(0, 5)))


def test_malaga_like_dimensions():
    assert (MALAGA_LIKE.n_clients, MALAGA_LIKE.n_candidates, MALAGA_LIKE.n_substations,
            MALAGA_LIKE.n_stations) == (363, 33_550, 14, 45)


# --------------------------------------------------------------------------
# CSV import
# --------------------------------------------------------------------------


@pytest.fixture
def city(tmp_path):
    files = {
        "clients.csv": "id,lon,lat,population\nc1,-4.42,36.72,1200\nc2,-4.40,36.71,800\n",
        "candidates.csv": "id,lon,lat\nk1,-4.421,36.721\nk2,-4.401,36.709\nk3,-4.41,36.70\n",
        "substations.csv": "id,lon,lat,capacity\ns1,-4.41,36.715,2\n",
    }
    for name, text in files.items():
        (tmp_path / name).write_text(text)
    return tmp_path


def paths(d):
    return d / "clients.csv", d / "candidates.csv", d / "substations.csv"


def test_import_city(city):
    inst = import_city(*paths(city), n_stations=2, max_substation_dist=5000.0, name="mini")
    assert (inst.n_clients, inst.n_candidates, inst.n_substations) == (2, 3, 1)
    assert inst.metric == "haversine"
    assert inst.users.tolist() == [1200, 800]
    # about 140 m between c1 and k1
    assert 100 < inst.dc[0, 0] < 200
    ev = evaluate(inst, [0, 1])
    assert ev.nearest.tolist() == [0, 1] and ev.feasible


@pytest.mark.parametrize("file,text,msg", [
    ("clients.csv", "id,lat,lon,population\nc1,1,1,1\n", "header must be"),
    ("clients.csv", "id,lon,lat,population\nc1,1,1,1\nc1,2,2,1\n", ":3: duplicate id"),
    ("clients.csv", "id,lon,lat,population\nc1,1,1,0\n", ":2: population"),
    ("clients.csv", "id,lon,lat,population\nc1,1,,5\n", ":2: lat"),
    ("clients.csv", "id,lon,lat,population\nc1,nan,1,5\n", "not finite"),
    ("candidates.csv", "", "empty file"),
    ("candidates.csv", "id,lon,lat\n", "no data rows"),
    ("candidates.csv", "id,lon,lat\nk1,1\n", "expected 3 fields"),
    ("substations.csv", "id,lon,lat,capacity\ns1,1,1,1.5\n", "capacity"),
])
def test_import_errors(city, file, text, msg):
    (city / file).write_text(text)
    with pytest.raises(InstanceError, match=msg):
        import_city(*paths(city), n_stations=1)

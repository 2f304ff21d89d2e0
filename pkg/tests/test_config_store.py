import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmgeo.config import ConfigError, EngineConfig, dump_config, load_config, parse_config
from lmgeo.geo import GeoCoordinate
from lmgeo.geolocate import Landmark
from lmgeo.store import HEADER, StoreError, format_db, parse_db, read_db, write_db


def test_defaults():
    c = EngineConfig()
    assert c.factor == pytest.approx(4 / 9)
    assert (c.alpha_delay, c.beta_topo) == (0.5, 0.5)
    assert (c.k_probes, c.k_candidates) == (200, 1000)
    assert (c.encoder_hidden, c.decoder_hidden, c.alpha_distinguish) == (256, 512, 64.0)
    assert (c.batch_size, c.learning_rate, c.merge_km) == (64, 0.05, 1.0)
    assert c.train_config().dims.encoder_hidden == 256
    assert c.geolocate_config().k_candidates == 1000
    assert c.mining_config().consts.factor == c.factor


def test_factor_above_bound_rejected():
    with pytest.raises(ConfigError, match="factor"):
        parse_config("factor = 0.7\n")


@pytest.mark.parametrize("line,key", [("k_probes = 0", "k_probes"), ("learning_rate = -1", "learning_rate"),
                                      ("max_weight = 0.5", "max_weight")])
def test_invalid_values_name_the_key(line, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(line)


def test_parse_errors():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("speed = 3\n")
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_config("k_probes 3\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("k_probes = many\n")


def test_comments_and_round_trip(tmp_path):
    c = parse_config("# engine\nseed = 7  # fixed\nalpha_delay = 0.25\nsim_config = sim.cfg\n")
    assert (c.seed, c.alpha_delay, c.sim_config) == (7, 0.25, "sim.cfg")
    path = tmp_path / "engine.cfg"
    path.write_text(dump_config(c))
    assert load_config(path) == c
    assert dump_config(load_config(path)) == dump_config(c)


def test_override():
    c = EngineConfig().override(seed=3, k_probes=None)
    assert c.seed == 3 and c.k_probes == 200
    with pytest.raises(ConfigError):
        EngineConfig().override(bogus=1)


def random_db(n, seed):
    rng = random.Random(seed)
    sources = ["manual", "full-address", "org-name+region", "org-name+selection"]
    return [Landmark(f"10.{i // 65536}.{(i // 256) % 256}.{i % 256}",
                     GeoCoordinate(rng.uniform(-90, 90), rng.uniform(-180, 180)), rng.choice(sources))
            for i in range(n)]


def test_db_round_trip_large(tmp_path):
    db = random_db(10_000, 0)
    path = tmp_path / "db.tsv"
    write_db(path, reversed(db))
    assert read_db(path) == db
    assert format_db(read_db(path)) == path.read_text()


@given(st.lists(st.tuples(st.floats(-90, 90), st.floats(-180, 179.999)), max_size=30))
@settings(max_examples=50)
def test_db_round_trip_exact(coords):
    db = [Landmark(f"10.0.0.{i}", GeoCoordinate(a, b)) for i, (a, b) in enumerate(coords)]
    assert parse_db(format_db(db)) == sorted(db, key=lambda lm: int(lm.ip.split(".")[-1]))


def test_empty_db():
    text = format_db([])
    assert text.splitlines()[0] == HEADER
    assert parse_db(text) == []


def test_db_errors():
    lm = Landmark("10.0.0.1", GeoCoordinate(1, 2))
    with pytest.raises(StoreError, match="duplicate"):
        format_db([lm, lm])
    good = format_db([lm])
    with pytest.raises(StoreError, match="duplicate"):
        parse_db(good + good.splitlines()[-1] + "\n")
    with pytest.raises(StoreError, match="header"):
        parse_db("ip\tlat\n")
    with pytest.raises(StoreError, match=":3:"):
        parse_db(good.replace("\t2.0\t", "\tnorth\t"))
    with pytest.raises(StoreError, match="fields"):
        parse_db(HEADER + "\n10.0.0.1\t1.0\n")

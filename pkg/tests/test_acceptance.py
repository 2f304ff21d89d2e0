"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import math
import random
import time

import numpy as np
import pytest

from conftest import PIPELINE_OUTPUTS, record_criterion, run_cli_pipeline
from lmgeo.bench import MedConfig, run_med
from lmgeo.cbg import CandidateCoordinate, build_circles, filter_candidates
from lmgeo.geo import GeoCoordinate, great_circle_distance, offset_coordinate
from lmgeo.mining import selection_landmarks
from lmgeo.netsim import DelayModel, SimConfig, generate, snapshot
from lmgeo.orgdict import build_dictionary, match_organizations
from lmgeo.selection import DelayVector, delay_scores, redistribute, select_coordinate, topology_scores
from lmgeo.tagger.corpus import split_corpus, synthetic_corpus
from lmgeo.tagger.model import TaggerDims, TaggerParams
from lmgeo.tagger.scheme import N_TAGS, decode_bieso, encode_bieso
from lmgeo.tagger.train import TrainConfig, train, update_weights
from test_cbg import ORIGIN
from test_orgdict import WORDS, brute_force
from test_tagger_model import finite_difference_check
from test_tagger_scheme import ADDRESS_TAGS, ADDRESS_TOKENS, random_labeling


def test_criterion_01_gradient_check():
    start = time.perf_counter()
    params = TaggerParams.initialize(TaggerDims(4, 4, 4), ["a", "b", "c"], seed=0)
    ids = np.array([[0], [1], [2]])
    gold = np.array([[3], [0], [12]])
    weights = np.exp(np.random.default_rng(0).normal(0, 0.5, N_TAGS))
    worst = finite_difference_check(params, ids, params.tensors["embed"][ids], gold, weights, eps=1e-4)
    elapsed = time.perf_counter() - start
    err = max(worst.values())
    ok = err < 1e-3 and elapsed < 10
    record_criterion(1, "gradient check", ok, f"max relative error {err:.2e} over {len(worst)} tensors, "
                     f"{elapsed:.1f} s")
    assert ok


def test_criterion_02_adaptive_weights():
    w = update_weights([0.99, 0.97, 0.95], 64.0)
    uniform = update_weights([0.9] * N_TAGS, 64.0)
    ok = np.allclose(w, [0.2780, 1.0, 3.5966], atol=1e-3) and bool(np.all(uniform == 1.0))
    record_criterion(2, "adaptive weights", ok, f"weights {np.round(w, 4).tolist()}, uniform all one: "
                     f"{bool(np.all(uniform == 1.0))}")
    assert ok


@pytest.mark.slow
def test_criterion_03_adaptive_vs_baseline():
    start = time.perf_counter()
    tr, va = split_corpus(synthetic_corpus(2000, seed=0), 0.2, seed=0)
    best = {}
    for alpha in (0.0, 64.0):
        config = TrainConfig(epochs=30, batch_size=16, alpha=alpha, seed=0, dims=TaggerDims(16, 16, 16))
        result = train(tr, va, config)
        best[alpha] = result.history[result.best_epoch - 1].metrics
    elapsed = time.perf_counter() - start
    base, ada = best[0.0], best[64.0]
    det_base, det_ada = base.per_type["detailed"].f1, ada.per_type["detailed"].f1
    ok = ada.full_info >= base.full_info and det_ada >= det_base - 0.005 and elapsed < 900
    record_criterion(3, "adaptive vs baseline tagger", ok,
                     f"full-info {ada.full_info:.4f} vs {base.full_info:.4f}, detailed F1 {det_ada:.4f} "
                     f"vs {det_base:.4f}, {elapsed:.0f} s")
    assert ok


def test_criterion_04_bieso():
    got = {(e.entity_type, e.text) for e in decode_bieso(ADDRESS_TOKENS, ADDRESS_TAGS)}
    example_ok = got == {("detailed", "800 Avenue O"), ("city", "Ely"), ("state", "NV"), ("zip", "89301")}
    rng = random.Random(2024)
    round_trips = 0
    for _ in range(1000):
        tokens, ents = random_labeling(rng, rng.randint(1, 30))
        round_trips += decode_bieso(tokens, encode_bieso(ents, len(tokens))) == ents
    ok = example_ok and round_trips == 1000
    record_criterion(4, "BIESO decode", ok, f"example exact: {example_ok}, round trips {round_trips}/1000")
    assert ok


def test_criterion_05_orgdict_oracle():
    rng = random.Random(5)
    names = set()
    while len(names) < 1000:
        names.add(" ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 5))))
    names = sorted(names)
    d = build_dictionary(names)
    equal = 0
    for _ in range(500):
        tokens = [rng.choice(WORDS + ["the", "and", ",", "."]) for _ in range(rng.randint(1, 60))]
        equal += [(e.start, e.end) for e in match_organizations(d, tokens)] == brute_force(names, tokens)
    ok = equal == 500
    record_criterion(5, "orgdict oracle", ok, f"{equal}/500 pages identical to brute force")
    assert ok


def test_criterion_06_cbg_soundness():
    cfg = SimConfig(region_km=500, n_routers=400, n_probes=50, n_landmarks=0, n_targets=1)
    survived = matched = 0
    for seed in range(100):
        topo = generate(cfg, seed)
        target = topo.hosts_of("target")[0]
        snap = snapshot(topo, hosts=[target.ip])
        vec = snap.delay_vector(target.ip)
        probes = sorted(vec.rtts, key=lambda p: (vec[p], p))
        circles = build_circles([snap.probe_position(p) for p in probes], [vec[p] for p in probes])
        rng = np.random.default_rng(seed)
        others = [offset_coordinate(ORIGIN, float(x), float(y)) for x, y in rng.uniform(-250, 250, (200, 2))]
        cands = [CandidateCoordinate(target.position, "truth")] + [CandidateCoordinate(p) for p in others]
        kept = filter_candidates(circles, cands)
        brute = [c for c in cands
                 if all(great_circle_distance(k.center, c.position) <= k.radius for k in circles)]
        survived += any(c.label == "truth" for c in kept)
        matched += kept == brute
    ok = survived == 100 and matched == 100
    record_criterion(6, "CBG soundness", ok, f"truth survived {survived}/100, oracle equal {matched}/100")
    assert ok


def test_criterion_07_score_identities():
    worst = 0.0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 40))
        probes = [f"p{i}" for i in range(8)]
        t = DelayVector(dict(zip(probes, rng.uniform(1, 100, 8))))
        vecs = {f"l{i}": DelayVector(dict(zip(probes, rng.uniform(1, 100, 8)))) for i in range(n)}
        s_d = delay_scores(vecs, t)
        worst = max(worst, abs(math.fsum(s_d.values()) - 1))
        s_t = topology_scores(dict(zip(vecs, rng.uniform(0, 200, n).tolist())))
        worst = max(worst, abs(math.fsum(s_t.values()) - (n - 1)))
        pos = {k: GeoCoordinate(float(a), float(b))
               for k, a, b in zip(vecs, rng.uniform(-60, 60, n), rng.uniform(-180, 180, n))}
        cands = [CandidateCoordinate(GeoCoordinate(float(a), float(b)))
                 for a, b in zip(rng.uniform(-60, 60, 4), rng.uniform(-180, 180, 4))]
        for cs in redistribute(cands, pos, {k: 1.0 for k in vecs}):
            worst = max(worst, abs(math.fsum(cs.gates.values()) - (n - 1)))
    ok = worst <= 1e-9
    record_criterion(7, "score identities", ok, f"largest deviation {worst:.1e} over 200 instances")
    assert ok


def selection_trial(seed: int, model: DelayModel) -> bool:
    """True site plus two decoys placed uniformly over the region, at least 10 km apart."""
    cfg = SimConfig(region_km=500, n_routers=400, n_probes=50, n_landmarks=1000, n_targets=1)
    topo = generate(cfg, seed)
    target = topo.hosts_of("target")[0]
    rng = random.Random(seed)
    center = GeoCoordinate(cfg.center_lat, cfg.center_lon)
    sites = [target.position]
    while len(sites) < 3:
        p = offset_coordinate(center, rng.uniform(-250, 250), rng.uniform(-250, 250))
        if all(great_circle_distance(p, s) >= 10 for s in sites):
            sites.append(p)
    cands = [CandidateCoordinate(p, f"site{k}") for k, p in enumerate(sites)]
    reference = {h.ip: h.position for h in topo.hosts_of("landmark")}
    snap = snapshot(topo, model, hosts=[target.ip] + sorted(reference))
    nearby = selection_landmarks(target.ip, cands, snap, reference)
    result = select_coordinate(cands, nearby, target.ip, snap)
    return result.best.label == "site0"


@pytest.mark.slow
def test_criterion_08_selection_accuracy():
    routed = sum(selection_trial(seed, DelayModel()) for seed in range(200))
    fallback = sum(selection_trial(seed, DelayModel(nonresponse_prob=1.0)) for seed in range(200))
    ok = routed >= 190 and fallback >= 180
    record_criterion(8, "selection accuracy", ok,
                     f"with routes {routed}/200 ({routed / 2:.1f}%, need 95%), "
                     f"delay-only fallback {fallback}/200 ({fallback / 2:.1f}%, need 90%)")
    assert ok


@pytest.mark.slow
def test_criterion_09_landmark_boosting():
    start = time.perf_counter()
    result = run_med(MedConfig(landmark_counts=(10, 100, 1000), trials=30, region_km=500))
    elapsed = time.perf_counter() - start
    meds = [result.med(n) for n in (10, 100, 1000)]
    bound = 3 * result.nearest_median
    ok = meds[0] > meds[1] > meds[2] and meds[2] <= bound and elapsed < 300
    record_criterion(9, "landmark boosting", ok,
                     f"MED {meds[0]:.1f} / {meds[1]:.1f} / {meds[2]:.1f} km for 10 / 100 / 1000 landmarks, "
                     f"bound {bound:.1f} km, {elapsed:.0f} s")
    assert ok


def test_criterion_10_determinism(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = run_cli_pipeline(tmp_path / "a")
    second = run_cli_pipeline(tmp_path / "b")
    differing = [name for name in PIPELINE_OUTPUTS if first[name] != second[name]]
    ok = not differing
    record_criterion(10, "determinism", ok, f"{len(PIPELINE_OUTPUTS) - len(differing)}/{len(PIPELINE_OUTPUTS)} "
                     f"outputs byte-identical" + (f", differing: {differing}" if differing else ""))
    assert ok

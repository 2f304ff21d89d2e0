import numpy as np
import pytest

from lmgeo.geo import GeoCoordinate


def haversine_oracle(lat1, lon1, lat2, lon2, radius=6371.0088):
    """Independent spherical-law-of-cosines distance, scalar math only."""
    import math
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    c = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return radius * math.acos(max(-1.0, min(1.0, c)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_coords(rng, n, lat=(-80, 80), lon=(-180, 180)):
    return [GeoCoordinate(float(a), float(b))
            for a, b in zip(rng.uniform(*lat, n), rng.uniform(*lon, n))]


@pytest.fixture(scope="session")
def trained_tagger():
    """A small tagger trained once per session on the synthetic corpus."""
    from lmgeo.tagger.corpus import split_corpus, synthetic_corpus
    from lmgeo.tagger.model import TaggerDims
    from lmgeo.tagger.train import TrainConfig, train
    tr, va = split_corpus(synthetic_corpus(1500, seed=1), 0.2, seed=0)
    config = TrainConfig(epochs=20, batch_size=16, alpha=64.0, seed=0, dims=TaggerDims(16, 16, 16))
    return train(tr, va, config).params


PIPELINE_OUTPUTS = ("corpus.txt", "model.ckpt", "history.tsv", "eval.tsv", "tags.tsv", "dict.txt",
                    "match.tsv", "topo.json", "landmarks.tsv", "snapshot.jsonl", "geolocate.json",
                    "audit.tsv", "select.tsv", "mined.tsv", "report.tsv", "med.tsv")


def run_cli_pipeline(workdir):
    """Run every CLI pipeline into ``workdir``; returns output name -> bytes."""
    from lmgeo.cli import main

    w = workdir
    (w / "page.txt").write_text("Visit Pioneer Dental Clinic at 800 Avenue O , Ely , NV 89301 .\n")
    (w / "names.txt").write_text("Pioneer Dental Clinic\nSummit Law Group\nAcme\n")
    (w / "sim.cfg").write_text("region_km = 200\nn_routers = 60\nn_probes = 8\nn_landmarks = 40\n"
                               "n_targets = 3\n")
    (w / "candidates.tsv").write_text("39.1\t-98.2\ta\n38.9\t-97.8\tb\n39.3\t-98.1\tc\n")
    pages = w / "pages"
    pages.mkdir()
    (pages / "10.2.0.0_home.txt").write_text("Pioneer Dental Clinic , welcome .\n")
    (pages / "10.2.0.1_contact.txt").write_text("Visit Summit Law Group at 12 Main St , Ely , NV 89301 .\n")
    (pages / "10.2.0.2_home.txt").write_text("Acme hosting .\n")
    (w / "geocoder.tsv").write_text("Pioneer Dental Clinic\tPDC north\t39.2\t-98.0\tKansas\n"
                                    "Pioneer Dental Clinic\tPDC south\t38.8\t-98.1\tKansas\n"
                                    "12 Main St, Ely, NV, 89301\tSLG\t39.25\t-114.9\tEly NV\n")
    (w / "whois.tsv").write_text("10.2.0.2\tCloudHost\n")
    (w / "blacklist.txt").write_text("cloudhost\n")

    def run(*args):
        code = main([str(a) for a in args])
        assert code == 0, args

    run("tagger", "synth", "--n", 300, "--seed", 1, "--out", w / "corpus.txt")
    run("tagger", "train", "--corpus", w / "corpus.txt", "--out", w / "model.ckpt", "--history",
        w / "history.tsv", "--epochs", 2, "--embed-dim", 8, "--encoder-hidden", 8,
        "--decoder-hidden", 8, "--batch-size", 16)
    run("tagger", "eval", "--model", w / "model.ckpt", "--corpus", w / "corpus.txt", "--out", w / "eval.tsv")
    run("tagger", "tag", "--model", w / "model.ckpt", "--text", w / "page.txt", "--out", w / "tags.tsv")
    run("orgdict", "build", w / "names.txt", w / "dict.txt")
    run("orgdict", "match", w / "dict.txt", w / "page.txt", "--out", w / "match.tsv")
    run("sim", "generate", "--sim-config", w / "sim.cfg", "--seed", 3, "--out", w / "topo.json",
        "--landmarks-db", w / "landmarks.tsv")
    run("sim", "snapshot", "--topology", w / "topo.json", "--out", w / "snapshot.jsonl")
    run("geolocate", "10.2.0.0", "--db", w / "landmarks.tsv", "--measurements", w / "snapshot.jsonl",
        "--out", w / "geolocate.json", "--audit", w / "audit.tsv")
    run("select-coord", "--target", "10.2.0.0", "--candidates", w / "candidates.tsv", "--db",
        w / "landmarks.tsv", "--measurements", w / "snapshot.jsonl", "--out", w / "select.tsv")
    run("mine", "--pages", pages, "--geocoder", w / "geocoder.tsv", "--model", w / "model.ckpt",
        "--dict", w / "dict.txt", "--measurements", w / "snapshot.jsonl", "--whois", w / "whois.tsv",
        "--blacklist", w / "blacklist.txt", "--reference", w / "landmarks.tsv", "--out",
        w / "mined.tsv", "--report", w / "report.tsv")
    run("bench", "med", "--landmarks", "5,20", "--trials", 2, "--region-km", 200, "--seed", 4,
        "--out", w / "med.tsv")
    return {name: (w / name).read_bytes() for name in PIPELINE_OUTPUTS}


ACCEPTANCE_RESULTS: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    """Remember one acceptance verdict for the end-of-run summary."""
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_RESULTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])

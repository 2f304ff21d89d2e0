"""Command-line entry point: ``lmgeo <command> [<subcommand>] ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from lmgeo.config import ConfigError, EngineConfig, load_config


def _engine_config(args) -> EngineConfig:
    config = load_config(args.config) if args.config else EngineConfig()
    overrides = {}
    for key in ("seed", "k_probes", "k_candidates", "alpha_delay", "beta_topo", "epochs",
                "alpha_distinguish", "batch_size", "learning_rate", "embed_dim", "encoder_hidden",
                "decoder_hidden", "max_weight"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    return config.override(**overrides)


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_measurements(spec: str, config: EngineConfig):
    """A snapshot file, a topology file, or a sim config (generated with the engine seed)."""
    from lmgeo import netsim
    path = Path(spec)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    try:
        head = json.loads(first)
    except json.JSONDecodeError:
        head = None
    if isinstance(head, dict) and head.get("format") == netsim.SNAPSHOT_FORMAT:
        return netsim.Snapshot.load(path)
    if isinstance(head, dict) and head.get("format") == netsim.TOPOLOGY_FORMAT:
        topo = netsim.SimTopology.from_json(path.read_text(encoding="utf-8"))
        return netsim.SimulatorSource(topo)
    topo = netsim.generate(netsim.load_sim_config(path), config.seed)
    return netsim.SimulatorSource(topo)


# -- tagger ----------------------------------------------------------------------

def cmd_tagger_synth(args, config):
    from lmgeo.tagger.corpus import synthetic_corpus, write_corpus
    write_corpus(synthetic_corpus(args.n, config.seed), args.out)


def cmd_tagger_train(args, config):
    from lmgeo.tagger import read_corpus, save_params
    from lmgeo.tagger.corpus import split_corpus
    from lmgeo.tagger.train import train
    pages = read_corpus(args.corpus)
    if args.val:
        train_pages, val_pages = pages, read_corpus(args.val)
    else:
        train_pages, val_pages = split_corpus(pages, args.val_fraction, config.seed)
    result = train(train_pages, val_pages, config.train_config())
    save_params(result.params, args.out)
    rows = ["epoch\tloss\tall_f1\tdetailed_f1\tfull_info\tmin_weight\tmax_weight"]
    for rep in result.history:
        m = rep.metrics
        full = "-" if m.full_info is None else f"{m.full_info:.4f}"
        rows.append(f"{rep.epoch}\t{rep.loss:.6f}\t{m.all_types.f1:.4f}\t{m.per_type['detailed'].f1:.4f}"
                    f"\t{full}\t{rep.weights.min():.4f}\t{rep.weights.max():.4f}")
    rows.append(f"# best epoch {result.best_epoch}")
    _write(args.history, "\n".join(rows) + "\n")


def cmd_tagger_eval(args, config):
    from lmgeo.tagger import load_params, read_corpus
    from lmgeo.tagger.train import evaluate
    metrics, _ = evaluate(load_params(args.model), read_corpus(args.corpus))
    _write(args.out, metrics.table())


def cmd_tagger_tag(args, config):
    from lmgeo.tagger import TokenizedPage, load_params, tag_page, tokenize
    params = load_params(args.model)
    tokens = tokenize(Path(args.text).read_text(encoding="utf-8"))
    if not tokens:
        raise ValueError(f"{args.text}: no tokens")
    rows = ["start\tend\ttype\ttext"]
    for ent in tag_page(params, TokenizedPage(tuple(tokens), args.text)):
        rows.append(f"{ent.start}\t{ent.end}\t{ent.entity_type}\t{ent.text}")
    _write(args.out, "\n".join(rows) + "\n")


# -- orgdict -----------------------------------------------------------------------

def cmd_orgdict_build(args, config):
    from lmgeo.orgdict import OrgDictionary
    OrgDictionary.load(args.names).save(args.out)


def cmd_orgdict_match(args, config):
    from lmgeo.orgdict import OrgDictionary, match_organizations
    from lmgeo.tagger.scheme import tokenize
    d = OrgDictionary.load(args.dict)
    tokens = tokenize(Path(args.page).read_text(encoding="utf-8"))
    rows = ["start\tend\tlow_confidence\ttext"]
    for ent in match_organizations(d, tokens):
        rows.append(f"{ent.start}\t{ent.end}\t{int(ent.low_confidence)}\t{ent.text}")
    _write(args.out, "\n".join(rows) + "\n")


# -- mining and geolocation --------------------------------------------------------

def cmd_mine(args, config):
    from lmgeo import mining, store
    from lmgeo.orgdict import OrgDictionary
    from lmgeo.tagger import load_params
    pages, rejects = mining.load_pages(args.pages)
    reference = {lm.ip: lm.position for lm in store.read_db(args.reference)} if args.reference else {}
    deps = mining.MiningDeps(
        geocoder=mining.GeocoderStub.load(args.geocoder),
        tagger_params=load_params(args.model) if args.model else None,
        dictionary=OrgDictionary.load(args.dict) if args.dict else None,
        source=_load_measurements(args.measurements, config) if args.measurements else None,
        whois=mining.load_whois(args.whois) if args.whois else {},
        blacklist=tuple(mining.load_blacklist(args.blacklist)) if args.blacklist else (),
        reference=reference,
    )
    db, report = mining.build_database(pages, deps, config.mining_config(), rejects)
    store.write_db(args.out, db)
    _write(args.report, report.to_text())


def _read_candidates(path):
    from lmgeo.cbg import CandidateCoordinate
    from lmgeo.geo import GeoCoordinate
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        try:
            label = parts[2] if len(parts) > 2 and parts[2] else None
            out.append(CandidateCoordinate(GeoCoordinate(float(parts[0]), float(parts[1])), label))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def cmd_select_coord(args, config):
    from lmgeo import store
    from lmgeo.cbg import merge_close
    from lmgeo.mining import selection_landmarks
    from lmgeo.selection import score_report, select_coordinate
    candidates = merge_close(_read_candidates(args.candidates), config.merge_km)
    source = _load_measurements(args.measurements, config)
    reference = {lm.ip: lm.position for lm in store.read_db(args.db)}
    landmarks = selection_landmarks(args.target, candidates, source, reference, config.mining_config())
    result = select_coordinate(candidates, landmarks, args.target, source,
                               config.alpha_delay, config.beta_topo)
    best = result.best
    head = f"best\t{best.position.lat!r}\t{best.position.lon!r}\t{best.label or '-'}\n"
    _write(args.out, head + score_report(result))


def cmd_geolocate(args, config):
    from lmgeo import store
    from lmgeo.geolocate import audit_table, geolocate_target
    db = store.read_db(args.db)
    source = _load_measurements(args.measurements, config)
    result = geolocate_target(args.target, db, source, config.geolocate_config())
    _write(args.out, json.dumps(result.record(), sort_keys=True) + "\n")
    if args.audit:
        _write(args.audit, audit_table(result))


# -- simulator and bench -----------------------------------------------------------

def cmd_sim_generate(args, config):
    from lmgeo import netsim
    sim = netsim.load_sim_config(args.sim_config) if args.sim_config else netsim.SimConfig()
    topo = netsim.generate(sim, config.seed)
    _write(args.out, topo.to_json())
    if args.landmarks_db:
        from lmgeo import store
        from lmgeo.geolocate import Landmark
        store.write_db(args.landmarks_db,
                       [Landmark(h.ip, h.position) for h in topo.hosts_of("landmark")])


def cmd_sim_snapshot(args, config):
    from lmgeo import netsim
    topo = netsim.SimTopology.from_json(Path(args.topology).read_text(encoding="utf-8"))
    hosts = None
    if args.kinds:
        kinds = set(args.kinds.split(","))
        hosts = [h.ip for h in topo.hosts if h.kind in kinds]
    netsim.snapshot(topo, hosts=hosts).save(args.out)


def cmd_bench_med(args, config):
    from lmgeo.bench import MedConfig, med_table, run_med
    counts = tuple(int(x) for x in args.landmarks.split(","))
    med = MedConfig(landmark_counts=counts, trials=args.trials, region_km=args.region_km,
                    alpha_delay=config.alpha_delay, beta_topo=config.beta_topo,
                    k_candidates=config.k_candidates, seed=config.seed)
    _write(args.out, med_table(run_med(med)))


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="engine config file (key = value)")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="lmgeo", description="Landmark-based IP geolocation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    top = parser.add_subparsers(dest="command", metavar="command")

    tagger = top.add_parser("tagger", help="train and apply the clue tagger")
    tsub = tagger.add_subparsers(dest="action", metavar="action")
    p = tsub.add_parser("synth", parents=[common], help="write a synthetic labeled corpus")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tagger_synth)
    p = tsub.add_parser("train", parents=[common], help="train a tagger checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--val", help="validation corpus (default: split off the training corpus)")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="per-epoch table (default stdout)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--alpha", dest="alpha_distinguish", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--max-weight", type=float)
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--encoder-hidden", type=int)
    p.add_argument("--decoder-hidden", type=int)
    p.set_defaults(func=cmd_tagger_train)
    p = tsub.add_parser("eval", parents=[common], help="score a checkpoint on a labeled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tagger_eval)
    p = tsub.add_parser("tag", parents=[common], help="extract entities from a text file")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tagger_tag)

    orgdict = top.add_parser("orgdict", help="organization-name dictionary")
    osub = orgdict.add_subparsers(dest="action", metavar="action")
    p = osub.add_parser("build", parents=[common], help="index a names file")
    p.add_argument("names")
    p.add_argument("out")
    p.set_defaults(func=cmd_orgdict_build)
    p = osub.add_parser("match", parents=[common], help="find organization names in a page")
    p.add_argument("dict")
    p.add_argument("page")
    p.add_argument("--out")
    p.set_defaults(func=cmd_orgdict_match)

    p = top.add_parser("mine", parents=[common], help="mine a landmark database from pages")
    p.add_argument("--pages", required=True, help="directory of <ip>_<kind>.txt files")
    p.add_argument("--geocoder", required=True, help="geocoder table (tab-separated)")
    p.add_argument("--model", help="tagger checkpoint")
    p.add_argument("--dict", help="organization dictionary")
    p.add_argument("--measurements", help="snapshot, topology or sim config")
    p.add_argument("--whois", help="ip<TAB>organization table")
    p.add_argument("--blacklist", help="proxy providers, one per line")
    p.add_argument("--reference", help="landmark db used as selection references")
    p.add_argument("--out", required=True, help="landmark db to write")
    p.add_argument("--report", help="mining report (default stdout)")
    p.set_defaults(func=cmd_mine)

    p = top.add_parser("select-coord", parents=[common], help="pick one of several candidate sites")
    p.add_argument("--target", required=True)
    p.add_argument("--candidates", required=True, help="lat<TAB>lon[<TAB>label] per line")
    p.add_argument("--db", required=True)
    p.add_argument("--measurements", required=True)
    p.add_argument("--alpha-delay", type=float)
    p.add_argument("--beta-topo", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_select_coord)

    p = top.add_parser("geolocate", parents=[common], help="geolocate one target ip")
    p.add_argument("target")
    p.add_argument("--db", required=True)
    p.add_argument("--measurements", required=True)
    p.add_argument("--k-probes", type=int)
    p.add_argument("--k-candidates", type=int)
    p.add_argument("--alpha-delay", type=float)
    p.add_argument("--beta-topo", type=float)
    p.add_argument("--out")
    p.add_argument("--audit", help="write the landmark score table here")
    p.set_defaults(func=cmd_geolocate)

    sim = top.add_parser("sim", help="synthetic network")
    ssub = sim.add_subparsers(dest="action", metavar="action")
    p = ssub.add_parser("generate", parents=[common], help="generate a topology")
    p.add_argument("--sim-config", help="sim config file (key = value)")
    p.add_argument("--out", required=True)
    p.add_argument("--landmarks-db", help="also write the landmark hosts as a landmark db")
    p.set_defaults(func=cmd_sim_generate)
    p = ssub.add_parser("snapshot", parents=[common], help="measure a topology")
    p.add_argument("--topology", required=True)
    p.add_argument("--kinds", help="comma-separated host kinds to include (default all)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sim_snapshot)

    bench = top.add_parser("bench", help="experiments")
    bsub = bench.add_subparsers(dest="action", metavar="action")
    p = bsub.add_parser("med", parents=[common], help="error distance versus landmark count")
    p.add_argument("--landmarks", default="10,100,1000")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--region-km", type=float, default=500.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench_med)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _engine_config(args)
        args.func(args, config)
    except (ConfigError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"lmgeo: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

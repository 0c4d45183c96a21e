"""``cmm`` command line: train, parse, eval, inspect-lattice.

Exit status is 0 on success, 1 for usage errors and 2 for data errors.
Settings come from flags, then an optional JSON ``--config`` file, then
the defaults of :class:`RunConfig`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

from . import corpus, model
from ._logmath import close
from .cascade import FORMATS, ParseError, parse_sentence, render
from .decoder import Accumulator, best_path, forward, prune
from .evaluation import cross_validate, format_report
from .lattice import expand_layer, pos_lattice
from .oracle import DEFAULT_LIMIT, best_by_enumeration, count_paths

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    layers: int = 9
    theta: float = 5.0
    beta: float = 1.0
    labeled: bool = False
    open_class_threshold: int = 50
    strip_functions: str | None = None
    seed: int = 0
    repetitions: int = 10
    format: str = "brackets"
    corpus: str | None = None
    model: str | None = None
    input: str | None = None
    output: str | None = None
    strict: bool = False
    oracle_check: bool = False

    def validate(self):
        if self.layers < 1:
            raise UsageError(f"--layers must be >= 1, got {self.layers}")
        if not self.theta >= 1:
            raise UsageError(f"--theta must be >= 1, got {self.theta}")
        if not self.beta > 0:
            raise UsageError(f"--beta must be > 0, got {self.beta}")
        if self.open_class_threshold < 0:
            raise UsageError("--open-class-threshold must be >= 0")
        if self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}; expected one of {', '.join(FORMATS)}")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="cmm", description="Cascaded Markov Model chunker")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file with default settings")
        sp.add_argument("--layers", type=int)
        sp.add_argument("--output", "--out", dest="output")

    t = sub.add_parser("train", help="estimate a model from a bracketed treebank")
    common(t)
    t.add_argument("--corpus", required=True)
    t.add_argument("--open-class-threshold", type=int)
    t.add_argument("--strip-functions", metavar="DELIM")

    ps = sub.add_parser("parse", help="chunk pre-tokenized sentences, one per line")
    common(ps)
    ps.add_argument("--model", required=True)
    ps.add_argument("--input")
    ps.add_argument("--theta", type=float)
    ps.add_argument("--format", choices=FORMATS)
    ps.add_argument("--strict", action="store_true", default=None)
    ps.add_argument("--oracle-check", action="store_true", default=None)

    e = sub.add_parser("eval", help="cross-validated recall/precision per number of layers")
    common(e)
    e.add_argument("--corpus", required=True)
    e.add_argument("--theta", type=float)
    e.add_argument("--beta", type=float)
    e.add_argument("--labeled", action="store_true", default=None)
    e.add_argument("--seed", type=int)
    e.add_argument("--repetitions", type=int)
    e.add_argument("--open-class-threshold", type=int)
    e.add_argument("--strip-functions", metavar="DELIM")

    i = sub.add_parser("inspect-lattice", help="dump the lattice of every layer for one sentence")
    common(i)
    i.add_argument("--model", required=True)
    i.add_argument("--sentence", required=True)
    i.add_argument("--theta", type=float)
    i.add_argument("--accumulators", action="store_true")
    i.add_argument("--oracle-check", action="store_true", default=None)
    return p


def _config(args) -> RunConfig:
    base = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        base = replace(base, **data)
    flags = {f.name: getattr(args, f.name) for f in fields(RunConfig) if getattr(args, f.name, None) is not None}
    return replace(base, **flags).validate()


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="\n")


def _read_corpus(cfg):
    with open(cfg.corpus, encoding="utf-8") as fh:
        return corpus.read_treebank(fh, cfg.strip_functions)


def cmd_train(cfg: RunConfig) -> int:
    trees = _read_corpus(cfg)
    bundle = model.train(trees, cfg.layers, model.TrainConfig(open_class_threshold=cfg.open_class_threshold))
    if cfg.output in (None, "-"):
        model.save(bundle, sys.stdout)
    else:
        model.save(bundle, cfg.output)
    err = sys.stderr
    print(f"sentences\t{bundle.metadata['sentences']}", file=err)
    print(f"tokens\t{bundle.metadata['tokens']}", file=err)
    print(f"phrase_rules\t{len(bundle.scfg.rules)}", file=err)
    print(f"open_tags\t{len(bundle.scfg.open_tags)}", file=err)
    for cm in bundle.context_models:
        lam = " ".join(f"{x:.4f}" for x in cm.lambdas)
        print(f"layer {cm.layer}\tcategories={len(cm.inventory)}\tlambdas={lam}", file=err)
    return EXIT_OK


_worker_bundle = None


def _init_worker(bundle):
    global _worker_bundle
    _worker_bundle = bundle


def _parse_one(job):
    words, theta, layers, fmt = job
    try:
        return True, render(parse_sentence(words, _worker_bundle, theta, layers), fmt)
    except ParseError as exc:
        return False, str(exc)


def _oracle_mismatches(words, bundle, theta, layers):
    """Layers where the decoder and brute-force enumeration disagree (small lattices only)."""
    bad = []
    lattice = pos_lattice(words, bundle.scfg)
    for layer in range(layers + 1):
        if layer:
            lattice = expand_layer(lattice, bundle.scfg, layer)
        cm = bundle.context_models[layer]
        if count_paths(lattice) <= DEFAULT_LIMIT:
            fast, slow = best_path(lattice, cm), best_by_enumeration(lattice, cm)
            same = [e.key for e in fast.edges] == [e.key for e in slow.edges]
            if not (same and close(fast.log_prob, slow.log_prob)):
                bad.append(layer)
        if layer < layers:
            lattice = prune(lattice, cm, theta)
    return bad


def _threads():
    try:
        return max(1, int(os.environ.get("CMM_THREADS", "1")))
    except ValueError:
        raise UsageError("CMM_THREADS must be an integer") from None


def cmd_parse(cfg: RunConfig) -> int:
    bundle = model.load(cfg.model)
    layers = min(cfg.layers, bundle.max_layer)
    src = sys.stdin if cfg.input in (None, "-") else open(cfg.input, encoding="utf-8")
    with src:
        sentences = [line.split() for line in src]
    jobs = [(words, cfg.theta, layers, cfg.format) for words in sentences if words]
    threads = _threads()
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(bundle,)) as pool:
            results = list(pool.map(_parse_one, jobs, chunksize=16))
    else:
        _init_worker(bundle)
        results = [_parse_one(job) for job in jobs]
    failures = 0
    out = _open_out(cfg.output)
    try:
        for (ok, text), job in zip(results, jobs):
            if ok:
                out.write(text if text.endswith("\n") else text + "\n")
            else:
                failures += 1
                out.write(f"# error: {text}\n")
            if cfg.format == "tsv":
                out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if cfg.oracle_check:
        mismatched = 0
        for words, *_ in jobs:
            try:
                bad = _oracle_mismatches(words, bundle, cfg.theta, layers)
            except ValueError:  # unparseable sentences are reported above
                continue
            if bad:
                mismatched += 1
                print(f"oracle mismatch on layers {bad}: {' '.join(words)}", file=sys.stderr)
        print(f"oracle check: {len(jobs) - mismatched}/{len(jobs)} sentences agree", file=sys.stderr)
        if mismatched:
            return EXIT_DATA
    if failures:
        print(f"{failures} sentence(s) could not be parsed", file=sys.stderr)
        if cfg.strict:
            return EXIT_DATA
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    trees = _read_corpus(cfg)
    rows = cross_validate(
        trees, cfg.layers, theta=cfg.theta, repetitions=cfg.repetitions, seed=cfg.seed,
        labeled=cfg.labeled, beta=cfg.beta,
        config=model.TrainConfig(open_class_threshold=cfg.open_class_threshold),
    )
    out = _open_out(cfg.output)
    try:
        out.write(format_report(rows))
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_inspect(cfg: RunConfig, sentence: str, accumulators: bool) -> int:
    bundle = model.load(cfg.model)
    layers = min(cfg.layers, bundle.max_layer)
    words = sentence.split()
    parse = parse_sentence(words, bundle, cfg.theta, layers)
    out = _open_out(cfg.output)
    try:
        out.write(render(parse, "lattice-dump"))
        if accumulators:
            for layer, lattice in enumerate(parse.lattices):
                acc: Accumulator = forward(lattice, bundle.context_models[layer])
                out.write(f"# accumulators layer {layer}\n{acc.dump(lattice)}\n")
        if cfg.oracle_check:
            bad = _oracle_mismatches(words, bundle, cfg.theta, layers)
            out.write(f"# oracle check: {'mismatch on layers ' + str(bad) if bad else 'agree'}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_DATA if cfg.oracle_check and bad else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "parse":
            return cmd_parse(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        return cmd_inspect(cfg, args.sentence, args.accumulators)
    except UsageError as exc:
        print(f"cmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"cmm: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

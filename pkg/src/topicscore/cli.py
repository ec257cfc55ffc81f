"""Command line front end.

    topic-score fit --corpus docword.txt --k 5 --out results/
    topic-score synth --variant basic --p 1000 --n 1000 --big-n 2000 --k 5 --reps 20 --out mc/
    topic-score oracle-check --p 100 --n 100 --k 3 --m-p 5 --delta-p 0.01 --m-n 5 --out oracle/

Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 numerical
failure.  Failures print a JSON object ``{"error": ..., "message": ...}`` on
stderr (and to ``error.json`` in the output directory when possible).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import export
from .corpus import load_bag_of_words, preprocess
from .errors import ConfigError, NumericalError, TopicScoreError
from .estimator import fit, fit_frequencies
from .synth import VARIANTS, SynthConfig, generate_model, l1_loss, run_monte_carlo

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
ORACLE_TOL = 1e-6


class UsageError(ConfigError):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("usage", message)


def _threshold(text):
    text = text.strip().lower()
    if text in ("inf", "infinity"):
        return math.inf
    if text == "2logn":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--t must be a positive number, 'inf' or '2logn', got {text!r}")
    return value


def _clusters(text):
    if text == "all":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--l must be an integer or 'all', got {text!r}")


def _add_estimator_args(p, default_l="10k"):
    p.add_argument("--k", type=int, required=True, help="number of topics")
    p.add_argument("--t", type=_threshold, default=math.inf,
                   help="eigen-ratio threshold: a number, 'inf' (default) or '2logn'")
    p.add_argument("--l", type=_clusters, default=None,
                   help=f"number of k-means clusters, or 'all' (default: {default_l})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10, help="k-means restarts")
    p.add_argument("--max-iter", type=int, default=300, help="Lloyd iterations per restart")
    p.add_argument("--out", type=Path, required=True, help="output directory")


def _add_synth_args(p):
    d = SynthConfig()
    p.add_argument("--variant", choices=VARIANTS, default=d.variant)
    p.add_argument("--p", type=int, default=d.p, help="vocabulary size")
    p.add_argument("--n", type=int, default=d.n, help="number of documents")
    p.add_argument("--big-n", type=int, default=d.big_n, help="document length N")
    p.add_argument("--m-p", type=int, default=d.m_p, help="anchor words per topic")
    p.add_argument("--delta-p", type=float, default=d.delta_p, help="anchor separability")
    p.add_argument("--m-n", type=int, default=d.m_n, help="pure documents per topic")
    p.add_argument("--p-s", type=float, default=d.p_s, help="Zipf offset")
    p.add_argument("--p-d", type=float, default=d.p_d, help="near-anchor leakage")
    p.add_argument("--h-max", type=float, default=d.h_max, help="two-scale upper frequency")


def build_parser():
    parser = _Parser(prog="topic-score", allow_abbrev=False,
                     description="Topic-SCORE spectral topic estimation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", allow_abbrev=False, help="estimate topics from a corpus file")
    p_fit.add_argument("--corpus", type=Path, required=True)
    p_fit.add_argument("--format", choices=("uci", "csv"), default="uci")
    p_fit.add_argument("--vocab", type=Path, default=None, help="vocabulary file, one word per line")
    p_fit.add_argument("--stopwords", type=Path, default=None, help="stop-word file, one word per line")
    p_fit.add_argument("--keep-top-words", type=int, default=None)
    p_fit.add_argument("--drop-short-docs-fraction", type=float, default=0.0)
    _add_estimator_args(p_fit)

    p_syn = sub.add_parser("synth", allow_abbrev=False, help="Monte Carlo on synthetic corpora")
    _add_synth_args(p_syn)
    p_syn.add_argument("--reps", type=int, default=10)
    _add_estimator_args(p_syn)

    p_orc = sub.add_parser("oracle-check", allow_abbrev=False,
                           help="fit the noiseless D0 = AW and check exact recovery")
    _add_synth_args(p_orc)
    _add_estimator_args(p_orc, default_l="all")
    return parser


def _resolve_t(t, n):
    return 2.0 * math.log(n) if t == "2logn" else t


def _check_common(args):
    if args.k < 1:
        raise UsageError("invalid_k", f"--k must be a positive integer, got {args.k}")
    if isinstance(args.t, float) and not args.t > 0:
        raise UsageError("invalid_t", f"--t must be positive, got {args.t}")
    if isinstance(args.l, int) and args.l < args.k:
        raise UsageError("invalid_l", f"--l must be at least --k, got {args.l}")
    if args.restarts < 1 or args.max_iter < 1:
        raise UsageError("invalid_kmeans", "--restarts and --max-iter must be positive")
    args.out.mkdir(parents=True, exist_ok=True)
    if not os.access(args.out, os.W_OK):
        raise UsageError("output_not_writable", f"cannot write to {args.out}")


def _synth_config(args):
    return SynthConfig(p=args.p, n=args.n, big_n=args.big_n, k=args.k, m_p=args.m_p,
                       delta_p=args.delta_p, m_n=args.m_n, variant=args.variant, p_s=args.p_s,
                       p_d=args.p_d, h_max=args.h_max, seed=args.seed).validate()


def _read_words(path):
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


def cmd_fit(args):
    _check_common(args)
    start = time.perf_counter()
    corpus = load_bag_of_words(args.corpus, format=args.format, vocab_path=args.vocab)
    stop = _read_words(args.stopwords) if args.stopwords else ()
    clean, report = preprocess(corpus, stopwords=stop, keep_top_words=args.keep_top_words,
                               drop_short_docs_fraction=args.drop_short_docs_fraction)
    t = _resolve_t(args.t, clean.n)
    est = fit(clean, args.k, t=t, l=args.l, seed=args.seed, restarts=args.restarts,
              max_iter=args.max_iter)

    a_full = np.zeros((corpus.p, args.k))
    pi_full = np.zeros((corpus.p, args.k))
    a_full[report.row_index_map] = est.a_hat
    pi_full[report.row_index_map] = est.pi_hat
    export.write_matrix_csv(a_full, args.out / "A_hat.csv")
    export.write_matrix_csv(pi_full, args.out / "pi_hat.csv")
    export.write_spectral_csv(est.spectral, args.out / "singular_vectors.csv")
    export.write_json(report.to_dict(), args.out / "preprocess_report.json")
    export.write_json(
        export.diagnostics(
            est,
            t=t,
            l=args.l if args.l is not None else 10 * args.k,
            seed=args.seed,
            p=clean.p,
            n=clean.n,
            zero_rows_original=report.row_index_map[est.zero_rows],
            wall_time_s=time.perf_counter() - start,
        ),
        args.out / "diagnostics.json",
    )
    return EXIT_OK


def cmd_synth(args):
    _check_common(args)
    if args.reps < 1:
        raise UsageError("invalid_reps", f"--reps must be at least 1, got {args.reps}")
    cfg = _synth_config(args)
    opts = {"t": _resolve_t(args.t, cfg.n), "l": args.l, "restarts": args.restarts,
            "max_iter": args.max_iter}
    mc = run_monte_carlo(cfg, args.reps, estimator_opts=opts)
    export.write_results_csv(mc.rows, args.out / "results.csv")
    # the summary is computed from the table exactly as written
    rows = export.read_results_csv(args.out / "results.csv")
    losses = np.array([r["loss"] for r in rows])
    summary = mc.summary()
    summary["mean_loss"] = float(losses.mean())
    summary["stderr"] = float(losses.std(ddof=1) / math.sqrt(len(losses))) if len(losses) > 1 else 0.0
    export.write_json(summary, args.out / "summary.json")
    return EXIT_OK


def cmd_oracle_check(args):
    _check_common(args)
    cfg = _synth_config(args)
    model = generate_model(cfg)
    l = "all" if args.l is None else args.l
    est = fit_frequencies(model.d0, cfg.k, t=_resolve_t(args.t, cfg.n), l=l, seed=args.seed,
                          restarts=args.restarts, max_iter=args.max_iter)
    rep = l1_loss(est.a_hat, model.a)
    passed = rep.loss <= ORACLE_TOL

    anchor = np.zeros(cfg.p, dtype=int)
    for rows in model.anchor_rows:
        anchor[list(rows)] = 1
    if est.ratios is not None:
        cloud = np.full((cfg.p, cfg.k - 1), np.nan)
        cloud[est.kept_rows] = est.ratios
        export.write_points_csv(cloud, args.out / "pointcloud.csv", flags=anchor)
        export.write_points_csv(est.vh.vertices, args.out / "vertices.csv")
    export.write_json(
        {
            "loss": rep.loss,
            "tolerance": ORACLE_TOL,
            "passed": passed,
            "permutation": list(rep.permutation),
            "per_topic": rep.per_topic,
            "config": asdict(cfg),
            "diagnostics": export.diagnostics(est, l=l, seed=args.seed),
        },
        args.out / "oracle.json",
    )
    return EXIT_OK if passed else EXIT_CHECK


COMMANDS = {"fit": cmd_fit, "synth": cmd_synth, "oracle-check": cmd_oracle_check}


def _fail(code, message, exit_code, out=None):
    payload = {"error": code, "message": message}
    print(json.dumps(payload), file=sys.stderr)
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            export.write_json(payload, Path(out) / "error.json")
        except OSError:
            pass
    return exit_code


def main(argv=None):
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        return _fail(exc.code, str(exc), EXIT_NUMERIC, getattr(args, "out", None))
    except TopicScoreError as exc:
        return _fail(exc.code, str(exc), EXIT_USAGE, getattr(args, "out", None))
    except OSError as exc:
        return _fail("io_error", str(exc), EXIT_USAGE, getattr(args, "out", None))


if __name__ == "__main__":
    sys.exit(main())

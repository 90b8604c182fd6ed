"""Command-line front end for the whole experiment loop.

One subcommand per stage.  Every run writes ``<output>.manifest.json``
recording the resolved configuration, its hash, seeds, and sha256 hashes
of all inputs, so any result can be reproduced bit for bit.

Each subcommand also accepts ``--config file.json`` holding the same
keys as its flags (dashes become underscores); explicit flags win over
the file, unknown keys are rejected.  Exit codes: 0 success, 1 when an
experiment fails, 2 for configuration problems.

The environment variable CHARPROBE_CACHE names a directory used to cache
tokenized corpora keyed by the scheme, sampling parameters, and input
hash; repeated `tokenize` runs then reuse the cached ids file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analyzer import analyze_corpus, load_dictionary, read_corpus_files
from .bpe import (
    bpe_encode,
    count_words,
    learn_merges,
    load_scheme,
    save_scheme,
    variable_tokenize,
    write_id_lines,
)
from .cbow import CbowConfig, load_id_corpus, train_cbow
from .embeddings import load_embeddings, make_control, save_embeddings
from .errors import CharprobeError, ConfigError, UnencodableByte
from .experiment import (
    load_report,
    run_char_experiment,
    run_substring_experiment,
    save_report,
)
from .nn.train import DEFAULT_LR_GRID, TrainConfig
from .syntax import (
    build_feature_table,
    default_syntax_config,
    load_tags,
    read_conll,
    run_syntax_experiment,
    save_tags,
    tagger_config,
    train_tagger,
)
from .vocab import Alphabet, derive_alphabet, english_alphabet, load_vocab, save_vocab

SCHEMA_VERSION = 1

_ALPHABET_KEYS = ("case_sensitive", "alphabet_file", "derive_min_tokens")
_TRAIN_KEYS = ("epochs", "batch_size", "learning_rate", "dropout", "lr_grid", "tune")

# Resolved-option defaults per subcommand; also the schema for rejecting
# unknown config-file keys.  None marks "no value given".
DEFAULTS: dict[str, dict] = {
    "probe-chars": dict(
        embeddings=None, vocab=None, out=None, seeds="3", jobs=1, chars=None,
        top_k=10, case_sensitive=False, alphabet_file=None, derive_min_tokens=None,
        epochs=None, batch_size=None, learning_rate=None, dropout=None,
        lr_grid=None, tune=False,
    ),
    "probe-substring": dict(
        embeddings=None, vocab=None, out=None, seeds="3",
        case_sensitive=False, alphabet_file=None, derive_min_tokens=None,
        epochs=None, batch_size=None, learning_rate=None, dropout=None,
        lr_grid=None, tune=False,
    ),
    "probe-syntax": dict(
        tags=None, vocab=None, out=None, seeds="3", chars=None, one_hot=False,
        case_sensitive=False, alphabet_file=None, derive_min_tokens=None,
        epochs=None, batch_size=None, learning_rate=None, dropout=None,
        lr_grid=None, tune=False,
    ),
    "tag-train": dict(
        embeddings=None, vocab=None, merges=None, token_map=None,
        train=None, dev=None, test=None, features="pos,ner", out=None,
        epochs=None, batch_size=None, learning_rate=None,
    ),
    "tokenize": dict(
        merges=None, token_map=None, corpus=None, out=None, rho=0.0, seed=0,
    ),
    "cbow-train": dict(
        corpus=None, out=None, vocab_out=None, token_map=None,
        dim=None, window=None, negatives=None, epochs=None, learning_rate=None,
        min_count=None, subsample=None, seed=None, workers=None,
    ),
    "analyze-corpus": dict(
        merges=None, token_map=None, targets=None, dictionary=None,
        corpus=None, out=None, jobs=1, no_dedupe=False,
    ),
    "derive-alphabet": dict(vocab=None, min_tokens=None, out=None),
    "make-control": dict(vocab_size=None, dim=None, seed=0, like=None, out=None),
    "report": dict(runs=None, out=None),
    "bpe-train": dict(
        corpus=None, n_merges=None, merges_out=None, token_map_out=None,
    ),
}


# ---- option plumbing ----

def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults <- config file <- explicit flags, rejecting unknown keys."""
    given = vars(args).copy()
    given.pop("_handler", None)
    given.pop("command", None)
    config_path = given.pop("config", None)
    merged = dict(DEFAULTS[command])
    if config_path is not None:
        file_cfg = _load_config_file(config_path)
        schema = file_cfg.pop("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"{config_path}: unsupported schema {schema!r}")
        for key, value in file_cfg.items():
            if key not in merged:
                raise ConfigError(f"{config_path}: unknown key {key!r} for {command}")
            merged[key] = value
    merged.update(given)
    return merged


def _need(ns: dict, command: str, *keys: str) -> None:
    for key in keys:
        if ns.get(key) is None:
            flag = key.replace("_", "-")
            raise ConfigError(f"{command}: missing required option --{flag}")


def _require_files(*paths) -> None:
    for path in paths:
        if path is None:
            continue
        if not Path(path).is_file():
            raise ConfigError(f"input file not found: {path}")


def _parse_seeds(value) -> tuple[int, ...]:
    """A count N means seeds 0..N-1; a comma list is taken verbatim."""
    if isinstance(value, int):
        return tuple(range(value))
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    text = str(value).strip()
    try:
        if "," in text:
            return tuple(int(p) for p in text.split(",") if p.strip())
        return tuple(range(int(text)))
    except ValueError:
        raise ConfigError(f"bad --seeds value {value!r}") from None


def _parse_floats(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(p) for p in str(value).split(",") if p.strip())


def _train_config(ns: dict, base: TrainConfig | None = None) -> TrainConfig | None:
    overrides: dict = {}
    for key in ("epochs", "batch_size"):
        if ns.get(key) is not None:
            overrides[key] = int(ns[key])
    for key in ("learning_rate", "dropout"):
        if ns.get(key) is not None:
            overrides[key] = float(ns[key])
    if ns.get("lr_grid") is not None:
        overrides["lr_grid"] = _parse_floats(ns["lr_grid"])
    elif ns.get("tune"):
        overrides["lr_grid"] = DEFAULT_LR_GRID
    if not overrides and base is None:
        return None
    return replace(base or TrainConfig(), **overrides)


def _load_alphabet_file(path) -> Alphabet:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - {"characters", "script_name", "case_sensitive"}
    if unknown:
        raise ConfigError(f"{path}: unknown alphabet keys {sorted(unknown)}")
    if "characters" not in data:
        raise ConfigError(f"{path}: alphabet file needs a 'characters' list")
    return Alphabet(
        tuple(data["characters"]),
        data.get("script_name", ""),
        bool(data.get("case_sensitive", False)),
    )


def _choose_alphabet(ns: dict, vocab) -> Alphabet:
    if ns.get("alphabet_file") and ns.get("derive_min_tokens"):
        raise ConfigError("--alphabet-file and --derive-min-tokens are exclusive")
    if ns.get("alphabet_file"):
        return _load_alphabet_file(ns["alphabet_file"])
    if ns.get("derive_min_tokens"):
        return derive_alphabet(vocab, int(ns["derive_min_tokens"]))
    return english_alphabet(case_sensitive=bool(ns.get("case_sensitive")))


def _check_ids(vocab, table) -> None:
    top = max((e.id for e in vocab), default=-1)
    if top >= table.vocab_size:
        raise ConfigError(
            f"vocab id {top} out of range for {table.vocab_size} embedding rows"
        )


# ---- manifests ----

def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def _write_manifest(ns, command, inputs, outputs, seeds=None, extra=None) -> str:
    config = {k: _jsonable(v) for k, v in sorted(ns.items())}
    payload = json.dumps(config, sort_keys=True, ensure_ascii=False)
    manifest = {
        "schema": SCHEMA_VERSION,
        "tool": f"charprobe {__version__}",
        "command": command,
        "config": config,
        "config_sha256": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
        "inputs": {str(p): _sha256_file(p) for p in inputs if p is not None},
        "outputs": [str(o) for o in outputs],
    }
    if seeds is not None:
        manifest["seeds"] = [int(s) for s in seeds]
    if extra:
        manifest.update(extra)
    path = f"{outputs[0]}.manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---- subcommands ----

def _cmd_probe_chars(ns: dict) -> int:
    _need(ns, "probe-chars", "embeddings", "vocab", "out")
    _require_files(ns["embeddings"], ns["vocab"], ns.get("alphabet_file"))
    table = load_embeddings(ns["embeddings"])
    vocab = load_vocab(ns["vocab"])
    _check_ids(vocab, table)
    alphabet = _choose_alphabet(ns, vocab)
    seeds = _parse_seeds(ns["seeds"])
    chars = list(ns["chars"]) if ns.get("chars") else None
    report = run_char_experiment(
        table, vocab, alphabet,
        seeds=seeds,
        config=_train_config(ns),
        jobs=int(ns["jobs"]),
        chars=chars,
        top_k=int(ns["top_k"]),
    )
    save_report(report, ns["out"])
    _write_manifest(
        ns, "probe-chars",
        inputs=[ns["embeddings"], ns["vocab"], ns.get("alphabet_file")],
        outputs=[ns["out"]], seeds=seeds,
    )
    failed = [row["char"] for row in report["per_char"] if row.get("error")]
    if failed:
        print(f"probe-chars: failed characters: {' '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_probe_substring(ns: dict) -> int:
    _need(ns, "probe-substring", "embeddings", "vocab", "out")
    _require_files(ns["embeddings"], ns["vocab"], ns.get("alphabet_file"))
    table = load_embeddings(ns["embeddings"])
    vocab = load_vocab(ns["vocab"])
    _check_ids(vocab, table)
    alphabet = _choose_alphabet(ns, vocab)
    seeds = _parse_seeds(ns["seeds"])
    report = run_substring_experiment(
        table, vocab, alphabet, seeds=seeds, config=_train_config(ns)
    )
    save_report(report, ns["out"])
    _write_manifest(
        ns, "probe-substring",
        inputs=[ns["embeddings"], ns["vocab"], ns.get("alphabet_file")],
        outputs=[ns["out"]], seeds=seeds,
    )
    return 0


def _cmd_probe_syntax(ns: dict) -> int:
    _need(ns, "probe-syntax", "tags", "vocab", "out")
    _require_files(ns["tags"], ns["vocab"], ns.get("alphabet_file"))
    table = load_tags(ns["tags"])
    vocab = load_vocab(ns["vocab"])
    alphabet = _choose_alphabet(ns, vocab)
    seeds = _parse_seeds(ns["seeds"])
    one_hot = bool(ns.get("one_hot"))
    chars = list(ns["chars"]) if ns.get("chars") else None
    report = run_syntax_experiment(
        table, vocab, alphabet,
        seeds=seeds,
        config=_train_config(ns, base=default_syntax_config(one_hot)),
        one_hot=one_hot,
        chars=chars,
    )
    save_report(report, ns["out"])
    _write_manifest(
        ns, "probe-syntax",
        inputs=[ns["tags"], ns["vocab"], ns.get("alphabet_file")],
        outputs=[ns["out"]], seeds=seeds,
    )
    failed = [row["char"] for row in report["per_char"] if row.get("error")]
    if failed:
        print(f"probe-syntax: failed characters: {' '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_tag_train(ns: dict) -> int:
    _need(ns, "tag-train", "embeddings", "vocab", "merges", "token_map", "train", "out")
    _require_files(
        ns["embeddings"], ns["vocab"], ns["merges"], ns["token_map"],
        ns["train"], ns.get("dev"), ns.get("test"),
    )
    table = load_embeddings(ns["embeddings"])
    vocab = load_vocab(ns["vocab"])
    _check_ids(vocab, table)
    scheme = load_scheme(ns["merges"], ns["token_map"])
    top = max(scheme.token_to_id.values(), default=-1)
    if top >= table.vocab_size:
        raise ConfigError(
            f"token map id {top} out of range for {table.vocab_size} embedding rows"
        )
    features = [f.strip() for f in str(ns["features"]).split(",") if f.strip()]
    for feature in features:
        if feature not in ("pos", "ner"):
            raise ConfigError(f"unknown feature {feature!r} (expected pos or ner)")

    train_sents = read_conll(ns["train"])
    dev_sents = read_conll(ns["dev"]) if ns.get("dev") else None
    test_sents = read_conll(ns["test"]) if ns.get("test") else None

    def tokenize(text: str):
        return bpe_encode(scheme, text)

    taggers, scores = {}, {}
    for feature in features:
        config = _train_config(ns, base=tagger_config(feature))
        model, report = train_tagger(
            table.rows, tokenize, train_sents, feature,
            config=config, dev_sentences=dev_sents, test_sentences=test_sents,
        )
        taggers[feature] = model
        scores[feature] = report

    ids = sorted(e.id for e in vocab)
    feature_table = build_feature_table(taggers, table.rows, ids)
    save_tags(feature_table, ns["out"])
    scores_path = f"{ns['out']}.scores.json"
    save_report(scores, scores_path)
    _write_manifest(
        ns, "tag-train",
        inputs=[ns["embeddings"], ns["vocab"], ns["merges"], ns["token_map"],
                ns["train"], ns.get("dev"), ns.get("test")],
        outputs=[ns["out"], scores_path],
    )
    return 0


def _cmd_tokenize(ns: dict) -> int:
    _need(ns, "tokenize", "merges", "token_map", "corpus", "out")
    _require_files(ns["merges"], ns["token_map"], ns["corpus"])
    rho = float(ns["rho"])
    seed = int(ns["seed"])
    scheme = load_scheme(ns["merges"], ns["token_map"], rho=rho, seed=seed)

    cache_dir = os.environ.get("CHARPROBE_CACHE")
    cached = None
    status = "off"
    if cache_dir:
        key = hashlib.sha256(
            json.dumps(
                [
                    _sha256_file(ns["merges"]),
                    _sha256_file(ns["token_map"]),
                    _sha256_file(ns["corpus"]),
                    rho,
                    seed,
                ]
            ).encode("ascii")
        ).hexdigest()
        cached = Path(cache_dir) / f"{key}.ids"
        status = "hit" if cached.is_file() else "miss"

    if status == "hit":
        shutil.copyfile(cached, ns["out"])
    else:
        with open(ns["corpus"], encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
        rng = np.random.default_rng(seed)
        encoded = []
        for lineno, line in enumerate(lines, start=1):
            try:
                encoded.append(variable_tokenize(scheme, line, rng))
            except UnencodableByte as exc:
                raise UnencodableByte(f"{ns['corpus']}:{lineno}: {exc}") from None
        write_id_lines(ns["out"], encoded)
        if cached is not None:
            cached.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(ns["out"], cached)

    _write_manifest(
        ns, "tokenize",
        inputs=[ns["merges"], ns["token_map"], ns["corpus"]],
        outputs=[ns["out"]], seeds=[seed],
        extra={"cache": status},
    )
    return 0


def _cmd_cbow_train(ns: dict) -> int:
    _need(ns, "cbow-train", "corpus", "out", "vocab_out")
    _require_files(ns["corpus"], ns.get("token_map"))
    corpus = load_id_corpus(ns["corpus"])

    kwargs: dict = {}
    for key in ("dim", "window", "negatives", "epochs", "min_count", "seed", "workers"):
        if ns.get(key) is not None:
            kwargs[key] = int(ns[key])
    for key in ("learning_rate", "subsample"):
        if ns.get(key) is not None:
            kwargs[key] = float(ns[key])
    config = CbowConfig(**kwargs)

    surfaces = None
    if ns.get("token_map"):
        with open(ns["token_map"], encoding="utf-8") as fh:
            token_to_id = json.load(fh)
        surfaces = {int(i): tok for tok, i in token_to_id.items()}

    result = train_cbow(corpus, config, surfaces=surfaces)
    save_embeddings(result.table, ns["out"])
    save_vocab(result.vocab, ns["vocab_out"])
    _write_manifest(
        ns, "cbow-train",
        inputs=[ns["corpus"], ns.get("token_map")],
        outputs=[ns["out"], ns["vocab_out"]],
        seeds=[config.seed],
        extra={"losses": [float(v) for v in result.losses]},
    )
    return 0


def _cmd_analyze_corpus(ns: dict) -> int:
    _need(ns, "analyze-corpus", "merges", "token_map", "targets", "dictionary", "corpus", "out")
    corpus_paths = ns["corpus"] if isinstance(ns["corpus"], (list, tuple)) else [ns["corpus"]]
    _require_files(ns["merges"], ns["token_map"], ns["targets"], ns["dictionary"], *corpus_paths)
    scheme = load_scheme(ns["merges"], ns["token_map"])
    with open(ns["targets"], encoding="utf-8") as fh:
        targets = [line.strip() for line in fh if line.strip()]
    dictionary = load_dictionary(ns["dictionary"])
    lines = read_corpus_files(corpus_paths)
    report = analyze_corpus(
        scheme, targets, lines, dictionary,
        jobs=int(ns["jobs"]),
        dedupe=not bool(ns.get("no_dedupe")),
    )
    save_report(report, ns["out"])
    _write_manifest(
        ns, "analyze-corpus",
        inputs=[ns["merges"], ns["token_map"], ns["targets"], ns["dictionary"], *corpus_paths],
        outputs=[ns["out"]],
    )
    return 0


def _cmd_derive_alphabet(ns: dict) -> int:
    _need(ns, "derive-alphabet", "vocab", "min_tokens", "out")
    _require_files(ns["vocab"])
    vocab = load_vocab(ns["vocab"])
    alphabet = derive_alphabet(vocab, int(ns["min_tokens"]))
    with open(ns["out"], "w", encoding="utf-8") as fh:
        json.dump(
            {
                "characters": list(alphabet.characters),
                "script_name": alphabet.script_name,
                "case_sensitive": alphabet.case_sensitive,
            },
            fh, ensure_ascii=False, indent=2,
        )
        fh.write("\n")
    _write_manifest(ns, "derive-alphabet", inputs=[ns["vocab"]], outputs=[ns["out"]])
    return 0


def _cmd_make_control(ns: dict) -> int:
    _need(ns, "make-control", "out")
    if ns.get("like"):
        if ns.get("vocab_size") or ns.get("dim"):
            raise ConfigError("--like and --vocab-size/--dim are exclusive")
        _require_files(ns["like"])
        template = load_embeddings(ns["like"])
        vocab_size, dim = template.vocab_size, template.dim
    else:
        _need(ns, "make-control", "vocab_size", "dim")
        vocab_size, dim = int(ns["vocab_size"]), int(ns["dim"])
    seed = int(ns["seed"])
    table = make_control(vocab_size, dim, seed)
    save_embeddings(table, ns["out"])
    _write_manifest(
        ns, "make-control",
        inputs=[ns.get("like")], outputs=[ns["out"]], seeds=[seed],
    )
    return 0


def _pool_stats(values: list[float]):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _cmd_report(ns: dict) -> int:
    _need(ns, "report", "runs", "out")
    runs = ns["runs"] if isinstance(ns["runs"], (list, tuple)) else [ns["runs"]]
    if not runs:
        raise ConfigError("report: no run files given")
    _require_files(*runs)
    reports = [load_report(p) for p in runs]
    tasks = {r.get("task") for r in reports}
    if len(tasks) != 1:
        raise ConfigError(f"cannot merge runs of different tasks: {sorted(map(str, tasks))}")
    task = tasks.pop()

    merged: dict = {"task": task, "n_runs": len(reports), "runs": [str(p) for p in runs]}
    if task in ("char", "syntax"):
        chars = [row["char"] for row in reports[0]["per_char"]]
        for rep in reports[1:]:
            if [row["char"] for row in rep["per_char"]] != chars:
                raise ConfigError("runs disagree on the probed characters")
        rows = []
        for i, char in enumerate(chars):
            f1, control, failures = [], [], 0
            for rep in reports:
                row = rep["per_char"][i]
                if row.get("error"):
                    failures += 1
                    continue
                f1.extend(row["f1_per_seed"])
                control.extend(row["control_f1_per_seed"])
            f1_mean, f1_std = _pool_stats(f1)
            control_mean, control_std = _pool_stats(control)
            rows.append({
                "char": char,
                "n_values": len(f1),
                "n_failed_runs": failures,
                "f1_mean": f1_mean,
                "f1_std": f1_std,
                "control_f1_mean": control_mean,
                "control_f1_std": control_std,
            })
        merged["per_char"] = rows
        scored = [r for r in rows if r["n_values"] > 0]
        merged["overall"] = {
            "f1_mean": _pool_stats([r["f1_mean"] for r in scored])[0],
            "control_f1_mean": _pool_stats([r["control_f1_mean"] for r in scored])[0],
            "n_chars_scored": len(scored),
        }
    elif task == "substring":
        f1 = [v for rep in reports for v in rep["f1_per_seed"]]
        control = [v for rep in reports for v in rep["control_f1_per_seed"]]
        f1_mean, f1_std = _pool_stats(f1)
        control_mean, control_std = _pool_stats(control)
        merged.update({
            "n_values": len(f1),
            "f1_mean": f1_mean, "f1_std": f1_std,
            "control_f1_mean": control_mean, "control_f1_std": control_std,
        })
    else:
        raise ConfigError(f"cannot merge reports for task {task!r}")

    save_report(merged, ns["out"])
    _write_manifest(ns, "report", inputs=list(runs), outputs=[ns["out"]])
    return 0


def _cmd_bpe_train(ns: dict) -> int:
    _need(ns, "bpe-train", "corpus", "n_merges", "merges_out", "token_map_out")
    _require_files(ns["corpus"])
    with open(ns["corpus"], encoding="utf-8") as fh:
        counts = count_words(line.rstrip("\n") for line in fh)
    scheme = learn_merges(counts, int(ns["n_merges"]))
    save_scheme(scheme, ns["merges_out"], ns["token_map_out"])
    _write_manifest(
        ns, "bpe-train",
        inputs=[ns["corpus"]],
        outputs=[ns["merges_out"], ns["token_map_out"]],
    )
    return 0


# ---- parser ----

def _add_config_opt(p):
    p.add_argument("--config", help="JSON file providing defaults for this command")


def _add_alphabet_opts(p):
    p.add_argument("--case-sensitive", action="store_true",
                   help="probe upper and lower case separately")
    p.add_argument("--alphabet-file", help="JSON alphabet from derive-alphabet")
    p.add_argument("--derive-min-tokens",
                   help="derive the alphabet from the vocab at this threshold")


def _add_train_opts(p, with_dropout=True):
    p.add_argument("--epochs")
    p.add_argument("--batch-size")
    p.add_argument("--learning-rate")
    if with_dropout:
        p.add_argument("--dropout")
        p.add_argument("--lr-grid", help="comma list of rates to tune over")
        p.add_argument("--tune", action="store_true",
                       help="tune the rate over the built-in grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charprobe",
        description="Probe subword embeddings for character-level information.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        p.set_defaults(_handler=handler, command=name)
        _add_config_opt(p)
        return p

    p = add("probe-chars", _cmd_probe_chars,
            "train per-character probes against random controls")
    p.add_argument("--embeddings")
    p.add_argument("--vocab")
    p.add_argument("--out")
    p.add_argument("--seeds", help="count N (seeds 0..N-1) or comma list")
    p.add_argument("--jobs")
    p.add_argument("--chars", help="probe only these characters")
    p.add_argument("--top-k")
    _add_alphabet_opts(p)
    _add_train_opts(p)

    p = add("probe-substring", _cmd_probe_substring,
            "probe whether one token is a substring of another")
    p.add_argument("--embeddings")
    p.add_argument("--vocab")
    p.add_argument("--out")
    p.add_argument("--seeds")
    _add_alphabet_opts(p)
    _add_train_opts(p)

    p = add("probe-syntax", _cmd_probe_syntax,
            "probe characters from tag distributions instead of embeddings")
    p.add_argument("--tags")
    p.add_argument("--vocab")
    p.add_argument("--out")
    p.add_argument("--seeds")
    p.add_argument("--chars")
    p.add_argument("--one-hot", action="store_true",
                   help="use argmax one-hot tags instead of distributions")
    _add_alphabet_opts(p)
    _add_train_opts(p)

    p = add("tag-train", _cmd_tag_train,
            "train subword taggers and emit a tag-distribution table")
    p.add_argument("--embeddings")
    p.add_argument("--vocab")
    p.add_argument("--merges")
    p.add_argument("--token-map")
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--test")
    p.add_argument("--features", help="comma list from: pos, ner")
    p.add_argument("--out")
    _add_train_opts(p, with_dropout=False)

    p = add("tokenize", _cmd_tokenize, "encode a text corpus into token-id lines")
    p.add_argument("--merges")
    p.add_argument("--token-map")
    p.add_argument("--rho", help="per-word probability of sampling a two-way split")
    p.add_argument("--seed")
    p.add_argument("--out")
    p.add_argument("corpus", nargs="?", help="input text file")

    p = add("cbow-train", _cmd_cbow_train, "train CBOW embeddings over token ids")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--vocab-out")
    p.add_argument("--token-map", help="token map JSON used for surfaces")
    p.add_argument("--dim")
    p.add_argument("--window")
    p.add_argument("--negatives")
    p.add_argument("--epochs")
    p.add_argument("--learning-rate")
    p.add_argument("--min-count")
    p.add_argument("--subsample")
    p.add_argument("--seed")
    p.add_argument("--workers")

    p = add("analyze-corpus", _cmd_analyze_corpus,
            "count fuzzy occurrences and distinct tokenizations of targets")
    p.add_argument("--merges")
    p.add_argument("--token-map")
    p.add_argument("--targets", help="one target word per line")
    p.add_argument("--dictionary", help="word list for pseudo-word filtering")
    p.add_argument("--out")
    p.add_argument("--jobs")
    p.add_argument("--no-dedupe", action="store_true",
                   help="keep targets within one edit of each other")
    p.add_argument("corpus", nargs="*", help="corpus text files")

    p = add("derive-alphabet", _cmd_derive_alphabet,
            "derive the probed alphabet from vocabulary surfaces")
    p.add_argument("--vocab")
    p.add_argument("--min-tokens")
    p.add_argument("--out")

    p = add("make-control", _cmd_make_control,
            "write a random-normal control embedding table")
    p.add_argument("--vocab-size")
    p.add_argument("--dim")
    p.add_argument("--seed")
    p.add_argument("--like", help="copy the shape of an existing table")
    p.add_argument("--out")

    p = add("report", _cmd_report, "merge run reports into mean/std tables")
    p.add_argument("--out")
    p.add_argument("runs", nargs="*", help="report JSON files to merge")

    p = add("bpe-train", _cmd_bpe_train, "learn a merge table from raw text")
    p.add_argument("--corpus")
    p.add_argument("--n-merges")
    p.add_argument("--merges-out")
    p.add_argument("--token-map-out")

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handler = getattr(args, "_handler", None)
    if handler is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        ns = _resolve(args.command, args)
        return handler(ns)
    except ConfigError as exc:
        print(f"charprobe: config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"charprobe: config error: {exc}", file=sys.stderr)
        return 2
    except CharprobeError as exc:
        print(f"charprobe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

"""Measure character-level information carried by subword token embeddings.

The package covers the full loop: tokenize a corpus with a controllable
amount of segmentation variability, train CBOW embeddings over the ids,
probe the embeddings for spelling (per-character and substring tasks)
against random and syntax baselines, and quantify how often alternative
tokenizations of the same word actually occur in a corpus.
"""

from .bpe import (
    TokenizationScheme,
    bpe_encode,
    count_words,
    detokenize,
    learn_merges,
    load_scheme,
    read_id_lines,
    save_scheme,
    two_way_splits,
    variable_tokenize,
    write_id_lines,
)
from .cbow import CbowConfig, CbowResult, cbow_pair_gradients, load_id_corpus, train_cbow
from .datasets import build_char_dataset, build_substring_dataset, split_grouped
from .embeddings import EmbeddingTable, load_embeddings, make_control, save_embeddings
from .errors import CharprobeError, ConfigError
from .experiment import (
    load_report,
    run_char_experiment,
    run_substring_experiment,
    save_report,
)
from .nn.train import TrainConfig, train_binary_probe, tune_learning_rate
from .syntax import (
    FeatureTable,
    build_feature_table,
    load_tags,
    read_conll,
    run_syntax_experiment,
    save_tags,
    train_tagger,
)
from .vocab import (
    Alphabet,
    Vocabulary,
    derive_alphabet,
    english_alphabet,
    filter_alphabetic,
    load_vocab,
    save_vocab,
)
from .analyzer import analyze_corpus, analyze_target, load_dictionary, read_corpus_files

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "CbowConfig",
    "CbowResult",
    "CharprobeError",
    "ConfigError",
    "EmbeddingTable",
    "FeatureTable",
    "TokenizationScheme",
    "TrainConfig",
    "Vocabulary",
    "analyze_corpus",
    "analyze_target",
    "bpe_encode",
    "build_char_dataset",
    "build_feature_table",
    "build_substring_dataset",
    "cbow_pair_gradients",
    "count_words",
    "detokenize",
    "derive_alphabet",
    "english_alphabet",
    "filter_alphabetic",
    "learn_merges",
    "load_dictionary",
    "load_embeddings",
    "load_id_corpus",
    "load_report",
    "load_scheme",
    "load_tags",
    "load_vocab",
    "make_control",
    "read_conll",
    "read_corpus_files",
    "read_id_lines",
    "run_char_experiment",
    "run_substring_experiment",
    "run_syntax_experiment",
    "save_embeddings",
    "save_report",
    "save_scheme",
    "save_tags",
    "save_vocab",
    "split_grouped",
    "train_binary_probe",
    "train_cbow",
    "train_tagger",
    "tune_learning_rate",
    "two_way_splits",
    "variable_tokenize",
    "write_id_lines",
    "__version__",
]

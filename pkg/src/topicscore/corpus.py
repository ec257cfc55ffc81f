"""Document-term matrices: loading, validation and preprocessing.

Counts are stored as a ``p x n`` sparse matrix (words in rows, documents in
columns).  All indices exposed by the Python API are 0-based; the on-disk
formats (UCI bag-of-words, triplet CSV) are 1-based.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, CorpusFormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DocTermMatrix:
    """Word counts of ``n`` documents over a vocabulary of ``p`` words.

    Parameters
    ----------
    counts : sparse or dense (p, n) array of nonnegative integers
    vocab : sequence of str, optional
        Word strings, one per row.  May be empty.
    """

    counts: sp.csc_matrix
    vocab: tuple = ()
    doc_lengths: np.ndarray = field(init=False)

    def __post_init__(self):
        counts = sp.csc_matrix(self.counts)
        if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 1:
            raise ConfigError(f"counts must be a non-empty 2-D matrix, got shape {counts.shape}")
        if counts.nnz and (counts.data < 0).any():
            raise ConfigError("counts must be nonnegative")
        if counts.nnz and not np.array_equal(counts.data, np.round(counts.data)):
            raise ConfigError("counts must be integers")
        counts = counts.astype(np.int64)
        counts.sum_duplicates()
        counts.eliminate_zeros()
        counts.sort_indices()
        vocab = tuple(self.vocab)
        if vocab and len(vocab) != counts.shape[0]:
            raise ConfigError(f"vocab has {len(vocab)} entries but counts has {counts.shape[0]} rows")
        lengths = np.asarray(counts.sum(axis=0)).ravel().astype(np.int64)
        lengths.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "doc_lengths", lengths)

    @property
    def p(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return self.counts.shape[1]

    @property
    def word_totals(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=1)).ravel()

    def __repr__(self):
        return f"DocTermMatrix(p={self.p}, n={self.n}, nnz={self.counts.nnz})"


def frequencies(d: DocTermMatrix) -> sp.csc_matrix:
    """Column-normalize the counts: ``D[j, i] = counts[j, i] / N_i``."""
    if (d.doc_lengths <= 0).any():
        bad = np.flatnonzero(d.doc_lengths <= 0)
        raise ConfigError(f"zero-length documents at columns {bad[:10].tolist()}")
    return sp.csc_matrix(d.counts @ sp.diags(1.0 / d.doc_lengths))


# --------------------------------------------------------------------------
# file formats


def _read_vocab(path):
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip())


def _assemble(rows, cols, vals, p, n, vocab):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.int64)
    if vals.sum() == 0:
        raise CorpusFormatError("empty corpus: no positive counts")
    # coo -> csc sums duplicate (doc, word) pairs
    counts = sp.coo_matrix((vals, (rows, cols)), shape=(p, n)).tocsc()
    return DocTermMatrix(counts, vocab=vocab or ())


def _parse_int(token, lineno, what):
    try:
        return int(token)
    except ValueError:
        raise CorpusFormatError(f"{what} is not an integer: {token!r}", lineno) from None


def _load_uci(path, vocab):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = []
    pos = 0
    while len(header) < 3:
        if pos >= len(lines):
            raise CorpusFormatError("truncated header: expected three lines n, p, nnz", pos or None)
        text = lines[pos].strip()
        pos += 1
        if not text:
            continue
        header.append(_parse_int(text, pos, "header value"))
    n, p, nnz = header
    if n < 1 or p < 1:
        raise CorpusFormatError(f"header declares n={n}, p={p}; both must be positive")

    rows, cols, vals = [], [], []
    for lineno, raw in enumerate(lines[pos:], start=pos + 1):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise CorpusFormatError(f"expected 'docID wordID count', got {raw.strip()!r}", lineno)
        doc, word, count = (_parse_int(t, lineno, name) for t, name in zip(parts, ("docID", "wordID", "count")))
        if not 1 <= doc <= n:
            raise CorpusFormatError(f"index-out-of-range: docID {doc} not in 1..{n}", lineno)
        if not 1 <= word <= p:
            raise CorpusFormatError(f"index-out-of-range: wordID {word} not in 1..{p}", lineno)
        if count < 0:
            raise CorpusFormatError(f"negative count {count}", lineno)
        rows.append(word - 1)
        cols.append(doc - 1)
        vals.append(count)
    if len(vals) != nnz:
        logger.warning("%s: header declares nnz=%d but %d entries were read", path, nnz, len(vals))
    return _assemble(rows, cols, vals, p, n, vocab)


def _load_triplet_csv(path, vocab):
    rows, cols, vals = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["doc", "word", "count"]:
            raise CorpusFormatError("expected header 'doc,word,count'", 1)
        for rec in reader:
            lineno = reader.line_num
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 3:
                raise CorpusFormatError(f"expected 3 fields, got {len(rec)}", lineno)
            doc, word, count = (_parse_int(t.strip(), lineno, name) for t, name in zip(rec, ("doc", "word", "count")))
            if doc < 1 or word < 1:
                raise CorpusFormatError("index-out-of-range: indices are 1-based", lineno)
            if count < 0:
                raise CorpusFormatError(f"negative count {count}", lineno)
            rows.append(word - 1)
            cols.append(doc - 1)
            vals.append(count)
    if not vals:
        raise CorpusFormatError("empty corpus: no data rows")
    p = max(rows) + 1
    if vocab:
        if p > len(vocab):
            raise CorpusFormatError(f"index-out-of-range: word {p} exceeds vocabulary size {len(vocab)}")
        p = len(vocab)
    return _assemble(rows, cols, vals, p, max(cols) + 1, vocab)


def load_bag_of_words(path, format="uci", vocab_path=None) -> DocTermMatrix:
    """Read a corpus from disk.

    ``format`` is ``"uci"`` (header lines n, p, nnz followed by
    ``docID wordID count`` records) or ``"csv"``/``"triplet-csv"`` (header
    ``doc,word,count``).  Duplicate (doc, word) records are summed.  A
    vocabulary file with one word per line may be supplied.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusFormatError(f"no such file: {path}")
    vocab = _read_vocab(vocab_path) if vocab_path else ()
    if format == "uci":
        d = _load_uci(path, vocab)
    elif format in ("csv", "triplet-csv"):
        d = _load_triplet_csv(path, vocab)
    else:
        raise ConfigError(f"unknown corpus format {format!r}")
    return d


def write_uci(d: DocTermMatrix, path):
    """Write ``d`` in UCI bag-of-words format (1-based, doc-major order)."""
    coo = d.counts.tocsc().tocoo()
    order = np.lexsort((coo.row, coo.col))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{d.n}\n{d.p}\n{coo.nnz}\n")
        for i in order:
            fh.write(f"{coo.col[i] + 1} {coo.row[i] + 1} {coo.data[i]}\n")


# --------------------------------------------------------------------------
# preprocessing


@dataclass
class PreprocessReport:
    """What ``preprocess`` removed, in original (0-based) indices."""

    removed_words: list  # [(index, reason)]
    removed_docs: list  # [(index, reason)]
    row_index_map: np.ndarray  # surviving row -> original row
    col_index_map: np.ndarray  # surviving column -> original column
    p_original: int
    n_original: int

    def to_dict(self):
        return {
            "p_original": self.p_original,
            "n_original": self.n_original,
            "removed_words": [{"index": int(i), "reason": r} for i, r in self.removed_words],
            "removed_docs": [{"index": int(i), "reason": r} for i, r in self.removed_docs],
            "row_index_map": self.row_index_map.tolist(),
            "col_index_map": self.col_index_map.tolist(),
        }


def preprocess(d: DocTermMatrix, stopwords=(), keep_top_words=None, drop_short_docs_fraction=0.0):
    """Filter words and documents before estimation.

    Steps, in order: drop stop words; keep the ``keep_top_words`` words with
    the largest total count (ties to the lower index); drop the
    ``floor(fraction * n)`` shortest documents (ties to the lower index);
    finally drop words left with zero count and documents left empty.

    Returns
    -------
    (DocTermMatrix, PreprocessReport)
    """
    if not 0.0 <= drop_short_docs_fraction < 1.0:
        raise ConfigError("drop_short_docs_fraction must lie in [0, 1)")
    if keep_top_words is not None and keep_top_words < 1:
        raise ConfigError("keep_top_words must be positive")
    stopwords = set(stopwords)
    if stopwords and not d.vocab:
        raise ConfigError("stop words given but the corpus has no vocabulary")

    counts = d.counts
    rows = np.arange(d.p)
    removed_words = []

    if stopwords:
        is_stop = np.array([w in stopwords for w in d.vocab], dtype=bool)
        removed_words += [(int(j), "stopword") for j in rows[is_stop]]
        rows = rows[~is_stop]

    if keep_top_words is not None and len(rows) > keep_top_words:
        totals = d.word_totals[rows]
        # stable sort on -total keeps lower indices first among ties
        order = np.argsort(-totals, kind="stable")
        keep = np.sort(order[:keep_top_words])
        dropped = np.setdiff1d(np.arange(len(rows)), keep)
        removed_words += [(int(rows[j]), "low-frequency") for j in dropped]
        rows = rows[keep]

    sub = counts[rows, :]
    cols = np.arange(d.n)
    removed_docs = []
    n_drop = int(np.floor(drop_short_docs_fraction * d.n))
    if n_drop:
        lengths = np.asarray(sub.sum(axis=0)).ravel()
        shortest = np.argsort(lengths, kind="stable")[:n_drop]
        removed_docs += [(int(i), "short") for i in np.sort(shortest)]
        cols = np.setdiff1d(cols, shortest)
        sub = sub[:, cols]

    totals = np.asarray(sub.sum(axis=1)).ravel()
    zero = totals == 0
    removed_words += [(int(j), "zero-count") for j in rows[zero]]
    rows = rows[~zero]
    sub = sub[~zero, :]

    lengths = np.asarray(sub.sum(axis=0)).ravel()
    empty = lengths == 0
    removed_docs += [(int(i), "empty") for i in cols[empty]]
    cols = cols[~empty]
    sub = sub[:, ~empty]

    if sub.shape[0] < 1 or sub.shape[1] < 1:
        raise ConfigError("preprocessing removed every word or every document")

    removed_words.sort()
    removed_docs.sort()
    vocab = tuple(d.vocab[j] for j in rows) if d.vocab else ()
    report = PreprocessReport(
        removed_words=removed_words,
        removed_docs=removed_docs,
        row_index_map=rows,
        col_index_map=cols,
        p_original=d.p,
        n_original=d.n,
    )
    return DocTermMatrix(sub, vocab=vocab), report

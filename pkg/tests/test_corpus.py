import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from topicscore.corpus import DocTermMatrix, frequencies, load_bag_of_words, preprocess, write_uci
from topicscore.errors import ConfigError, CorpusFormatError


def _write(tmp_path, text, name="docword.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadUci:
    def test_small_example(self, tmp_path):
        path = _write(tmp_path, "3\n2\n4\n1 1 2\n1 2 1\n2 2 4\n3 1 5\n")
        d = load_bag_of_words(path)
        assert (d.p, d.n) == (2, 3)
        np.testing.assert_array_equal(d.doc_lengths, [3, 4, 5])
        np.testing.assert_array_equal(d.counts.toarray(), [[2, 0, 5], [1, 4, 0]])

    def test_zero_index_rejected_with_line_number(self, tmp_path):
        path = _write(tmp_path, "3\n2\n1\n1 0 3\n")
        with pytest.raises(CorpusFormatError, match="index-out-of-range") as info:
            load_bag_of_words(path)
        assert info.value.lineno == 4
        assert "line 4" in str(info.value)

    def test_doc_index_too_large(self, tmp_path):
        path = _write(tmp_path, "3\n2\n1\n4 1 3\n")
        with pytest.raises(CorpusFormatError, match="index-out-of-range"):
            load_bag_of_words(path)

    def test_duplicates_are_summed(self, tmp_path):
        path = _write(tmp_path, "1\n1\n2\n1 1 2\n1 1 3\n")
        d = load_bag_of_words(path)
        assert d.counts[0, 0] == 5

    def test_nnz_mismatch_is_tolerated(self, tmp_path):
        path = _write(tmp_path, "1\n2\n7\n1 1 2\n1 2 3\n")
        assert load_bag_of_words(path).counts.sum() == 5

    @pytest.mark.parametrize("text", ["", "3\n2\n", "x\n2\n1\n1 1 1\n", "1\n1\n1\n1 1\n", "1\n1\n1\n1 1 -2\n"])
    def test_malformed(self, tmp_path, text):
        with pytest.raises(CorpusFormatError):
            load_bag_of_words(_write(tmp_path, text))

    def test_empty_corpus(self, tmp_path):
        with pytest.raises(CorpusFormatError):
            load_bag_of_words(_write(tmp_path, "2\n2\n0\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusFormatError):
            load_bag_of_words(tmp_path / "nope.txt")

    def test_vocab_attached(self, tmp_path):
        path = _write(tmp_path, "2\n2\n2\n1 1 1\n2 2 1\n")
        vocab = _write(tmp_path, "alpha\nbeta\n", "vocab.txt")
        assert load_bag_of_words(path, vocab_path=vocab).vocab == ("alpha", "beta")

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        counts = rng.poisson(1.0, size=(7, 5))
        counts[:, counts.sum(axis=0) == 0] = 1
        d = DocTermMatrix(sp.csc_matrix(counts))
        write_uci(d, tmp_path / "out.txt")
        back = load_bag_of_words(tmp_path / "out.txt")
        np.testing.assert_array_equal(back.counts.toarray(), counts)

    def test_same_bytes_same_matrix(self, tmp_path):
        path = _write(tmp_path, "3\n2\n4\n1 1 2\n1 2 1\n2 2 4\n3 1 5\n")
        a, b = load_bag_of_words(path), load_bag_of_words(path)
        assert (frequencies(a) != frequencies(b)).nnz == 0


class TestLoadCsv:
    def test_triplets(self, tmp_path):
        path = _write(tmp_path, "doc,word,count\n1,1,2\n1,2,1\n2,2,4\n3,1,5\n", "c.csv")
        d = load_bag_of_words(path, format="csv")
        np.testing.assert_array_equal(d.doc_lengths, [3, 4, 5])

    def test_bad_header(self, tmp_path):
        path = _write(tmp_path, "a,b,c\n1,1,2\n", "c.csv")
        with pytest.raises(CorpusFormatError):
            load_bag_of_words(path, format="csv")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigError):
            load_bag_of_words(_write(tmp_path, "1\n1\n1\n1 1 1\n"), format="xml")


class TestDocTermMatrix:
    def test_rejects_negative(self):
        with pytest.raises(ConfigError):
            DocTermMatrix(sp.csc_matrix(np.array([[1, -1]])))

    def test_vocab_length_checked(self):
        with pytest.raises(ConfigError):
            DocTermMatrix(sp.csc_matrix(np.eye(2, dtype=int)), vocab=("a",))

    def test_doc_lengths_are_column_sums(self):
        c = np.array([[1, 0, 2], [3, 4, 0]])
        d = DocTermMatrix(sp.csc_matrix(c))
        np.testing.assert_array_equal(d.doc_lengths, c.sum(axis=0))


class TestFrequencies:
    def test_division(self):
        f = frequencies(DocTermMatrix(sp.csc_matrix(np.array([[2], [1]]))))
        np.testing.assert_allclose(f.toarray().ravel(), [2 / 3, 1 / 3], rtol=0, atol=1e-15)

    def test_single_count_docs(self):
        f = frequencies(DocTermMatrix(sp.csc_matrix(np.eye(4, dtype=int))))
        np.testing.assert_array_equal(f.toarray(), np.eye(4))

    def test_random_columns_sum_to_one(self):
        rng = np.random.default_rng(0)
        counts = rng.integers(1, 9, size=(5, 4))
        f = frequencies(DocTermMatrix(sp.csc_matrix(counts)))
        np.testing.assert_allclose(np.asarray(f.sum(axis=0)).ravel(), 1.0, atol=1e-12)

    def test_empty_document_rejected(self):
        with pytest.raises(ConfigError):
            frequencies(DocTermMatrix(sp.csc_matrix(np.array([[1, 0], [1, 0]]))))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_nonnegative_and_stochastic(self, p, n, seed):
        rng = np.random.default_rng(seed)
        counts = rng.integers(0, 5, size=(p, n))
        counts[0] += 1
        f = frequencies(DocTermMatrix(sp.csc_matrix(counts))).toarray()
        assert (f >= 0).all()
        np.testing.assert_allclose(f.sum(axis=0), 1.0, atol=1e-12)


class TestPreprocess:
    def _corpus(self, p=10, n=100, seed=0, vocab=True):
        rng = np.random.default_rng(seed)
        counts = rng.integers(1, 6, size=(p, n))
        v = tuple(f"w{j}" for j in range(p)) if vocab else ()
        return DocTermMatrix(sp.csc_matrix(counts), vocab=v)

    def test_drop_five_percent_shortest(self):
        d = self._corpus()
        clean, rep = preprocess(d, drop_short_docs_fraction=0.05)
        assert clean.n == 95
        expected = np.sort(np.argsort(d.doc_lengths, kind="stable")[:5])
        assert [i for i, _ in rep.removed_docs] == expected.tolist()
        assert all(r == "short" for _, r in rep.removed_docs)

    def test_ties_go_to_lower_index(self):
        counts = np.array([[1, 1, 1, 2, 2], [1, 1, 1, 2, 2]])
        _, rep = preprocess(DocTermMatrix(sp.csc_matrix(counts)), drop_short_docs_fraction=0.4)
        assert [i for i, _ in rep.removed_docs] == [0, 1]

    def test_identity_when_nothing_requested(self):
        d = self._corpus(p=6, n=8)
        clean, rep = preprocess(d, keep_top_words=d.p)
        np.testing.assert_array_equal(clean.counts.toarray(), d.counts.toarray())
        assert rep.removed_words == [] and rep.removed_docs == []

    def test_zero_count_row_removed(self):
        counts = np.ones((5, 4), dtype=int)
        counts[3] = 0
        clean, rep = preprocess(DocTermMatrix(sp.csc_matrix(counts)))
        assert rep.removed_words == [(3, "zero-count")]
        np.testing.assert_array_equal(rep.row_index_map, [0, 1, 2, 4])
        assert clean.p == 4

    def test_stopwords_then_top_words(self):
        counts = np.array([[9, 9], [1, 1], [5, 5], [3, 3]])
        d = DocTermMatrix(sp.csc_matrix(counts), vocab=("the", "a", "b", "c"))
        clean, rep = preprocess(d, stopwords={"the"}, keep_top_words=2)
        assert clean.vocab == ("b", "c")
        assert dict(rep.removed_words) == {0: "stopword", 1: "low-frequency"}

    def test_top_word_ties_keep_lower_index(self):
        counts = np.array([[2, 2], [2, 2], [2, 2]])
        clean, rep = preprocess(DocTermMatrix(sp.csc_matrix(counts)), keep_top_words=2)
        np.testing.assert_array_equal(rep.row_index_map, [0, 1])

    def test_documents_emptied_by_word_filter(self):
        counts = np.array([[3, 0, 1], [0, 2, 1]])
        d = DocTermMatrix(sp.csc_matrix(counts), vocab=("x", "y"))
        clean, rep = preprocess(d, stopwords={"y"})
        assert rep.removed_docs == [(1, "empty")]
        np.testing.assert_array_equal(rep.col_index_map, [0, 2])

    def test_stopwords_need_vocab(self):
        with pytest.raises(ConfigError):
            preprocess(self._corpus(vocab=False), stopwords={"w1"})

    def test_everything_removed(self):
        d = DocTermMatrix(sp.csc_matrix(np.array([[1]])), vocab=("x",))
        with pytest.raises(ConfigError):
            preprocess(d, stopwords={"x"})

    @pytest.mark.parametrize("frac", [-0.1, 1.0])
    def test_fraction_range(self, frac):
        with pytest.raises(ConfigError):
            preprocess(self._corpus(), drop_short_docs_fraction=frac)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 12))
    def test_idempotent_and_maps_consistent(self, seed, top):
        rng = np.random.default_rng(seed)
        counts = rng.poisson(0.7, size=(12, 15))
        counts[0, :] += 1
        d = DocTermMatrix(sp.csc_matrix(counts))
        once, rep = preprocess(d, keep_top_words=top)
        twice, rep2 = preprocess(once, keep_top_words=top)
        np.testing.assert_array_equal(once.counts.toarray(), twice.counts.toarray())
        assert rep2.removed_words == [] and rep2.removed_docs == []
        np.testing.assert_array_equal(
            once.counts.toarray(), counts[np.ix_(rep.row_index_map, rep.col_index_map)]
        )
        assert (once.doc_lengths > 0).all() and (once.word_totals > 0).all()

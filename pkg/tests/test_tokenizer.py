import numpy as np
import pytest

from slicevuln import Vocab, build_vocab, encode, normalize
from slicevuln.synth import pattern_corpus
from slicevuln.tokenizer import EncodedDataset


def test_normalize_simple_declaration():
    assert normalize("int count = 0;") == "int VAR1 = 0 ;"


def test_normalize_preserves_api_names():
    assert normalize("strcpy(dst, src);") == "strcpy ( VAR1 , VAR2 ) ;"


def test_normalize_user_function_names():
    assert normalize("x = helper(a, b);") == "VAR1 = FUN1 ( VAR2 , VAR3 ) ;"


def test_normalize_string_and_long_number():
    assert normalize('printf("hi %s", name, 123456);') == "printf ( STR , VAR1 , NUM ) ;"


def test_normalize_short_numbers_kept():
    assert normalize("x = 1024 + 7;") == "VAR1 = 1024 + 7 ;"


def test_normalize_drops_comments_and_directives():
    out = normalize("#include <stdio.h>\nint a; // trailing\n/* block */ int b;")
    assert out == "int VAR1 ; int VAR2 ;"


def test_normalize_alpha_equivalence():
    a = normalize("int total = base + offset;\nbuf[total] = 0;")
    b = normalize("int sum = left + right;\narr[sum] = 0;")
    assert a == b


def test_normalize_idempotent_on_samples():
    corpus = pattern_corpus(seed=11)
    for s in corpus.samples[:200]:
        once = normalize(s.code)
        assert normalize(once) == once


def test_normalize_existing_placeholders_not_captured():
    out = normalize("int VAR1 = a;")
    assert out == "int VAR1 = VAR2 ;"
    assert normalize(out) == out


def test_build_vocab_empty_corpus():
    v = build_vocab([], max_size=16)
    assert len(v) == 3
    assert v.lookup("anything") == Vocab.UNK


def test_build_vocab_frequency_order():
    v = build_vocab(["a a b"], max_size=5)
    assert len(v) == 5
    assert v.lookup("a") == 3
    assert v.lookup("b") == 4


def test_build_vocab_tie_breaks_lexicographically():
    v = build_vocab(["b a"], max_size=5)
    assert v.lookup("a") == 3
    assert v.lookup("b") == 4


def test_build_vocab_respects_max_size():
    texts = [f"tok{i}" for i in range(100)]
    v = build_vocab(texts, max_size=10)
    assert len(v) == 10


def test_build_vocab_min_size():
    with pytest.raises(ValueError):
        build_vocab(["a"], max_size=3)


def test_encode_empty_text():
    v = build_vocab(["a b"], max_size=8)
    enc = encode("", v, max_len=6)
    assert enc.ids.tolist() == [Vocab.CLS, 0, 0, 0, 0, 0]
    assert enc.attention_mask.tolist() == [1, 0, 0, 0, 0, 0]


def test_encode_truncates():
    v = build_vocab(["a"], max_size=8)
    enc = encode(" ".join(["a"] * 600), v, max_len=512)
    assert enc.ids.shape == (512,)
    assert enc.attention_mask.sum() == 512


def test_encode_unknown_token():
    v = build_vocab(["a"], max_size=8)
    enc = encode("zzz", v, max_len=4)
    assert enc.ids[1] == Vocab.UNK


def test_encode_mask_iff_pad():
    v = build_vocab(["a b c"], max_size=16)
    enc = encode("a b zzz c", v, max_len=10)
    assert np.array_equal(enc.attention_mask == 0, enc.ids == Vocab.PAD)


def test_encode_mask_count_formula():
    v = build_vocab(["a b"], max_size=16)
    rng = np.random.default_rng(0)
    for _ in range(100):
        n_tokens = int(rng.integers(0, 30))
        max_len = int(rng.integers(2, 24))
        enc = encode(" ".join(["a"] * n_tokens), v, max_len)
        assert enc.attention_mask.sum() == min(n_tokens + 1, max_len)


def test_encode_reserved_literal_maps_to_unk():
    v = build_vocab(["a"], max_size=8)
    enc = encode("[PAD] a", v, max_len=5)
    assert enc.ids[1] == Vocab.UNK  # literal "[PAD]" is not the PAD id
    assert enc.attention_mask.tolist() == [1, 1, 1, 0, 0]


def test_encode_min_len():
    v = build_vocab([], max_size=8)
    with pytest.raises(ValueError):
        encode("a", v, max_len=1)


def test_vocab_save_load_round_trip(tmp_path):
    v = build_vocab(["alpha beta beta gamma"], max_size=10)
    path = v.save(tmp_path / "vocab.txt")
    text = path.read_text()
    assert text.startswith("[PAD]\t0\n[UNK]\t1\n[CLS]\t2\n")
    back = Vocab.load(path)
    assert back.content_hash() == v.content_hash()
    assert back.lookup("beta") == v.lookup("beta")


def test_encoded_dataset_shapes():
    v = build_vocab(["a b"], max_size=8)
    encs = [encode("a", v, 6), encode("b a", v, 6)]
    data = EncodedDataset.from_encodings(encs, [0, 1])
    assert data.ids.shape == (2, 6)
    assert data.labels.tolist() == [0, 1]
    with pytest.raises(ValueError):
        EncodedDataset.from_encodings(encs, [0])

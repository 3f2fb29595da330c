import string

import numpy as np
import pytest

from slicevuln import (
    Kind,
    LexError,
    SliceConfig,
    TokenClass,
    build_slice,
    extract_candidates,
    lex,
    load_api_list,
)
from golden_corpus import GOLDEN


def test_lex_empty():
    assert lex("") == []


def test_lex_arrow():
    toks = [t for t in lex("a->b") if t.cls is not TokenClass.WHITESPACE]
    assert [(t.text, t.cls) for t in toks] == [
        ("a", TokenClass.IDENTIFIER),
        ("->", TokenClass.OPERATOR),
        ("b", TokenClass.IDENTIFIER),
    ]


def test_lex_round_trip_function():
    src = (
        "/* copy helper */\n"
        "static int copy_all(char *dst, const char *src, size_t n) {\n"
        "    size_t i;\n"
        "    if (!dst || !src) return -1;\n"
        "    for (i = 0; i < n; i++) {\n"
        "        dst[i] = src[i];  // byte copy\n"
        "    }\n"
        '    dst[n] = \'\\0\';\n'
        "    printf(\"copied %zu\\n\", n);\n"
        "    return 0;\n"
        "}\n"
    )
    assert "".join(t.text for t in lex(src)) == src


def test_lex_positions_are_one_based():
    toks = lex("ab\n cd")
    assert (toks[0].line, toks[0].column) == (1, 1)
    cd = [t for t in toks if t.text == "cd"][0]
    assert (cd.line, cd.column) == (2, 2)


def test_lex_unterminated_block_comment():
    with pytest.raises(LexError, match="line 2"):
        lex("int x;\n/* never closed")


def test_lex_unterminated_string():
    with pytest.raises(LexError, match="line 1"):
        lex('char *s = "oops')


def test_lex_directive_single_token():
    toks = lex("#include <stdio.h>\nint x;")
    assert toks[0].cls is TokenClass.DIRECTIVE
    assert toks[0].text == "#include <stdio.h>"


def test_lex_directive_with_continuation():
    src = "#define ADD(a, b) \\\n    ((a) + (b))\nint y;"
    toks = lex(src)
    assert toks[0].cls is TokenClass.DIRECTIVE
    assert "((a) + (b))" in toks[0].text
    assert "".join(t.text for t in lex(src)) == src


def test_lex_round_trip_random_printable():
    rng = np.random.default_rng(1234)
    alphabet = string.ascii_letters + string.digits + " \t\n+-*/%<>=!&|;,(){}[]._"
    checked = 0
    for _ in range(300):
        n = int(rng.integers(1, 60))
        s = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=n))
        try:
            toks = lex(s)
        except LexError:
            continue
        assert "".join(t.text for t in toks) == s
        checked += 1
    assert checked > 100


@pytest.mark.parametrize("name,src,expected", GOLDEN, ids=[g[0] for g in GOLDEN])
def test_golden_candidates_exact(name, src, expected):
    got = [(c.kind, c.focus, c.line) for c in extract_candidates(src)]
    assert got == expected
    assert "".join(t.text for t in lex(src)) == src


def test_candidates_deterministic():
    src = GOLDEN[17][1]
    assert extract_candidates(src) == extract_candidates(src)


def test_candidate_focus_on_line():
    for _, src, _ in GOLDEN:
        for cand in extract_candidates(src):
            line_text = src.split("\n")[cand.line - 1]
            assert cand.focus in line_text


def test_api_call_span_covers_multiline_call():
    src = "memcpy(dst,\n        src,\n        n);"
    (cand,) = extract_candidates(src)
    assert cand.kind == Kind.API
    assert cand.span == (1, 3)


def test_custom_api_list():
    cfg = SliceConfig(api_list=frozenset({"my_alloc"}))
    cands = extract_candidates("p = my_alloc(10); strcpy(a, b);", cfg)
    api = [c for c in cands if c.kind == Kind.API]
    assert [c.focus for c in api] == ["my_alloc"]


def test_load_api_list(tmp_path):
    path = tmp_path / "apis.txt"
    path.write_text("# risky\nstrcpy\n  gets  # classic\n\nmemcpy\n")
    assert load_api_list(path) == {"strcpy", "gets", "memcpy"}


def test_double_star_collapses_to_one_candidate():
    cands = extract_candidates("**pp = 0;")
    assert [(c.kind, c.focus) for c in cands] == [(Kind.PU, "pp")]


def test_build_slice_single_line():
    src = "strcpy(a, b);"
    (cand,) = extract_candidates(src)
    assert build_slice(src, cand) == src


def test_build_slice_def_use_example():
    src = "int n = 10;\nchar b[8];\nmemcpy(b, s, n);"
    cand = [c for c in extract_candidates(src) if c.kind == Kind.API][0]
    cfg = SliceConfig(def_use_hops=1)
    assert build_slice(src, cand, cfg) == src


def test_build_slice_excludes_unrelated_lines():
    src = "int n = 10;\nint other = 5;\nmemcpy(b, s, n);"
    cand = [c for c in extract_candidates(src) if c.kind == Kind.API][0]
    out = build_slice(src, cand, SliceConfig(def_use_hops=1))
    assert "other" not in out
    assert "memcpy" in out and "int n = 10;" in out


def test_build_slice_truncates_to_max_lines():
    body = "\n".join(f"    x = x + {i};" for i in range(100))
    src = f"void f(int x) {{\n{body}\n}}"
    cands = extract_candidates(src)
    cand = cands[len(cands) // 2]
    out = build_slice(src, cand, SliceConfig(max_slice_lines=30))
    lines = out.split("\n")
    assert len(lines) <= 30
    assert src.split("\n")[cand.line - 1] in lines


def test_build_slice_stays_inside_function():
    src = (
        "int helper(int q) {\n"
        "    return q + 1;\n"
        "}\n"
        "void main_op(char *s) {\n"
        "    char buf[16];\n"
        "    strcpy(buf, s);\n"
        "}\n"
    )
    cand = [c for c in extract_candidates(src) if c.kind == Kind.API][0]
    out = build_slice(src, cand)
    assert "helper" not in out
    assert "strcpy(buf, s);" in out


def test_function_regions_ignore_call_brace_patterns_in_bodies():
    from slicevuln.slicer import _function_regions, lex as lex_fn

    src = (
        "int outer(int n) {\n"
        "    point p = (point){1, 2};\n"
        "    if (n) { n = n - 1; }\n"
        "    return n;\n"
        "}\n"
        "void second(char *s) {\n"
        "    strcpy(buf, s);\n"
        "}"
    )
    assert _function_regions(lex_fn(src)) == [(1, 5), (6, 8)]


def test_build_slice_focus_always_present():
    for _, src, _ in GOLDEN:
        for cand in extract_candidates(src):
            assert cand.focus in build_slice(src, cand)


def test_build_slice_line_out_of_range():
    src = "strcpy(a, b);"
    (cand,) = extract_candidates(src)
    bad = type(cand)(kind=cand.kind, line=99, focus=cand.focus, span=(99, 99))
    with pytest.raises(ValueError, match="out of range"):
        build_slice(src, bad)


def test_slice_config_validation():
    with pytest.raises(ValueError):
        SliceConfig(max_slice_lines=0)
    with pytest.raises(ValueError):
        SliceConfig(def_use_hops=-1)

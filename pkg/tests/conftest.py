import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # golden_corpus import

from slicevuln.tokenizer import EncodedDataset, Encoding


def random_batch(cfg, n, seed):
    """Random encodings for a given ModelConfig: CLS + tokens + PAD tail."""
    rng = np.random.default_rng(seed)
    encodings = []
    for _ in range(n):
        length = int(rng.integers(2, cfg.max_len))
        ids = np.zeros(cfg.max_len, dtype=np.int64)
        ids[0] = 2  # CLS
        ids[1:length] = rng.integers(3, cfg.vocab_size, size=length - 1)
        mask = (np.arange(cfg.max_len) < length).astype(np.int64)
        encodings.append(Encoding(ids=ids, attention_mask=mask))
    labels = rng.integers(0, 2, size=n)
    return encodings, labels


def random_dataset(cfg, n, seed):
    encodings, labels = random_batch(cfg, n, seed)
    return EncodedDataset.from_encodings(encodings, labels)


@pytest.fixture
def tiny_cfg():
    from slicevuln import ModelConfig

    return ModelConfig(num_layers=1, hidden_dim=8, num_heads=2, ff_dim=16,
                       max_len=16, vocab_size=32, dropout=0.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.split("::")[-1]
            if "test_acceptance" in rep.nodeid and name.startswith("test_criterion"):
                rows.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if rows:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, verdict in sorted(rows):
            terminalreporter.write_line(f"  {verdict}  {name}")

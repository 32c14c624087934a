"""Shared fixtures: a tiny rendered corpus and a small architecture that keep
the heavier integration tests fast while exercising every code path."""

from __future__ import annotations

import hashlib
import sys
from pathlib import Path

import pytest

from phosc.model import ArchParams
from phosc.signature import PhocConfig, PhosConfig
from phosc.synthdata import build_corpus

MICRO_SEEN = [
    "an", "at", "be", "cat", "dog", "ink", "on", "pen", "sun", "toe",
]
MICRO_UNSEEN = ["fog", "hut", "mix", "yak"]


@pytest.fixture(scope="session")
def micro_corpus(tmp_path_factory) -> Path:
    """A 10-seen / 4-unseen corpus (1 style, 3 train copies per word)."""
    out = tmp_path_factory.mktemp("corpus") / "micro"
    build_corpus(out, MICRO_SEEN, MICRO_UNSEEN, seed=7, num_styles=1, train_copies=3)
    return out


@pytest.fixture(scope="session")
def tiny_arch() -> ArchParams:
    return ArchParams(
        conv_channels=(2, 3, 4),
        spp_levels=(1, 2),
        head_hidden=8,
        lstm_hidden=5,
        lstm_layers=1,
    )


@pytest.fixture(scope="session")
def phoc_cfg() -> PhocConfig:
    return PhocConfig()


@pytest.fixture(scope="session")
def phos_cfg() -> PhosConfig:
    return PhosConfig()


def tree_digest(root: Path) -> str:
    """SHA-256 over every file (relative path + contents) under root."""
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(b"\x00")
            h.update(p.read_bytes())
            h.update(b"\x01")
    return h.hexdigest()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Reprint the acceptance verdict lines, which output capture would
    otherwise hide for passing criteria."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None) if mod is not None else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

from spectra.model import Language, TestCase
from spectra.provider.templates import PromptLibrary
from spectra.sandbox import RunLimits, Sandbox

sys.path.insert(0, str(Path(__file__).parent))

TestCase.__test__ = False  # dataclass, not a test class, despite the name

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def library() -> PromptLibrary:
    return PromptLibrary.default()


@pytest.fixture(scope="session")
def sandbox() -> Sandbox:
    return Sandbox(limits=RunLimits(wall_timeout=10.0, compile_timeout=120.0))


@pytest.fixture(scope="session")
def require_c(sandbox):
    if not sandbox.probe(Language.C):
        pytest.skip("no C toolchain")


@pytest.fixture(scope="session")
def require_rust(sandbox):
    if not sandbox.probe(Language.RUST):
        pytest.skip("no Rust toolchain")


@pytest.fixture(scope="session")
def require_node(sandbox):
    if not sandbox.probe(Language.JAVASCRIPT):
        pytest.skip("no node runtime")


@pytest.fixture(scope="session")
def require_ts(sandbox):
    if not sandbox.probe(Language.TYPESCRIPT):
        pytest.skip("no TypeScript toolchain")

import socket
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpora import contracts_collection, resumes_collection  # noqa: E402

from docforager import LocalHashEmbedder, MockBackend, build_index
from docforager.gateway import LlmGateway

_real_connect = socket.socket.connect


@pytest.fixture(autouse=True, scope="session")
def forbid_remote_network():
    """Mock closure: the whole suite must complete with zero network calls.

    Loopback stays allowed (nothing in the suite uses it either, but unix
    sockets and test plumbing should not trip the guard).
    """

    def guarded(self, address, *args, **kwargs):
        if isinstance(address, tuple) and isinstance(address[0], str):
            host = address[0]
            if host not in ("127.0.0.1", "::1", "localhost"):
                raise AssertionError(f"test suite attempted a network call to {address!r}")
        return _real_connect(self, address, *args, **kwargs)

    socket.socket.connect = guarded
    yield
    socket.socket.connect = _real_connect


@pytest.fixture(scope="session")
def contracts():
    return contracts_collection()


@pytest.fixture(scope="session")
def resumes():
    return resumes_collection()


@pytest.fixture(scope="session")
def embedder():
    return LocalHashEmbedder()


@pytest.fixture(scope="session")
def contracts_index(contracts, embedder):
    return build_index(contracts, embedder)


@pytest.fixture(scope="session")
def resumes_index(resumes, embedder):
    return build_index(resumes, embedder)


@pytest.fixture
def mock_backend():
    return MockBackend()


@pytest.fixture
def gateway(mock_backend):
    return LlmGateway(mock_backend)

import sys
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from token_embed_service.app import create_app
from token_embed_service.tinymodel import build_tiny_encoder

# the primary engine's test directory holds the reusable gateway contract
PRIMARY_TESTS = Path(__file__).resolve().parents[2] / "tests"
sys.path.insert(0, str(PRIMARY_TESTS))


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "tiny-encoder"
    build_tiny_encoder(str(path), seed=0)
    return str(path)


class _ServerHandle:
    def __init__(self, server, thread, port):
        self.server = server
        self.thread = thread
        self.url = f"http://127.0.0.1:{port}"


def _start_server(app):
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 30
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("service did not start")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]
    return _ServerHandle(server, thread, port)


@pytest.fixture(scope="session")
def service(tiny_model_dir):
    handle = _start_server(create_app(model_path=tiny_model_dir,
                                      max_text_chars=2000))
    yield handle
    handle.server.should_exit = True
    handle.thread.join(timeout=10)


@pytest.fixture(scope="session")
def unloaded_service(tmp_path_factory):
    missing = str(tmp_path_factory.mktemp("nomodel") / "does-not-exist")
    handle = _start_server(create_app(model_path=missing))
    yield handle
    handle.server.should_exit = True
    handle.thread.join(timeout=10)

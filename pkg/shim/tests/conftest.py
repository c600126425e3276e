import threading
import time

import pytest
import uvicorn

from qax_shim.app import create_app
from qax_shim.config import ShimConfig


class LiveServer:
    """uvicorn in a daemon thread on an ephemeral port."""

    def __init__(self, app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.port = None

    def start(self):
        self.thread.start()
        deadline = time.time() + 15
        while time.time() < deadline:
            if self.server.started and self.server.servers:
                self.port = self.server.servers[0].sockets[0].getsockname()[1]
                return self
            time.sleep(0.02)
        raise RuntimeError("shim server did not start in time")

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture(scope="session")
def live_shim_url():
    app = create_app(ShimConfig(encoder_model="hash:256", translation_backend="identity"))
    server = LiveServer(app).start()
    yield f"http://127.0.0.1:{server.port}"
    server.stop()

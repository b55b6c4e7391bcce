import os
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

HERE = os.path.dirname(__file__)
sys.path.insert(0, os.path.abspath(os.path.join(HERE, os.pardir, "src")))
PRIMARY_SRC = os.path.abspath(os.path.join(HERE, os.pardir, os.pardir, "src"))


def run_primary(*argv):
    """Invoke the consumer toolkit through its CLI only."""
    env = dict(os.environ)
    env["PYTHONPATH"] = PRIMARY_SRC + os.pathsep + env.get("PYTHONPATH", "")
    return subprocess.run(
        [sys.executable, "-m", "imprintlab", *argv],
        capture_output=True, text=True, env=env,
    )


@pytest.fixture(scope="session")
def image_root(tmp_path_factory):
    """Three labeled classes of small deterministic PNG images."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(99)
    for cls in ("apple", "boat", "cat"):
        cdir = root / cls
        cdir.mkdir()
        for i in range(4):
            pixels = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
            Image.fromarray(pixels, "RGB").save(cdir / f"img_{i}.png")
    return root

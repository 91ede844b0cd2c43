import math

import numpy as np
import pytest
from hypothesis import settings
from PIL import Image, ImageDraw

from gaitgender.pipeline import PipelineParams, train_pipeline
from gaitgender.synth import synthetic_sequences

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE = []  # one line per acceptance criterion, filled by test_acceptance.py


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def star_polygon(rng, cx, cy, r_min, r_max, n=16, max_step=6.0):
    """Random polygon, star-shaped around (cx, cy), with a bounded radial slope.

    Neighbouring vertex radii differ by at most ``max_step``: near-radial
    spikes make pixel-centre binning and ray sampling disagree by more than
    rasterization error, which is not what the oracle comparison is about.
    """
    ang = (np.arange(n) + rng.uniform(-0.3, 0.3, n)) * (2 * math.pi / n)
    rad = [rng.uniform(r_min, r_max)]
    for _ in range(n - 1):
        rad.append(float(np.clip(rad[-1] + rng.uniform(-max_step, max_step), r_min, r_max)))
    rad[-1] = float(np.clip(rad[-1], rad[0] - max_step, rad[0] + max_step))
    return [(cx + r * math.cos(a), cy - r * math.sin(a)) for a, r in zip(ang, rad)]


def rasterize(poly, shape):
    img = Image.new("1", (shape[1], shape[0]), 0)
    ImageDraw.Draw(img).polygon(poly, fill=1)
    return np.array(img, dtype=bool)


def march(mask, c, theta_deg, step=0.25):
    """Brute ray march: distance to the last foreground pixel met along the ray."""
    h, w = mask.shape
    t = math.radians(theta_deg)
    r = np.arange(0.0, math.hypot(h, w), step)
    xs = np.floor(c.x + r * math.cos(t) + 0.5).astype(int)
    ys = np.floor(c.y - r * math.sin(t) + 0.5).astype(int)
    ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    hits = np.flatnonzero(ok)[mask[ys[ok], xs[ok]]]
    if hits.size == 0:
        return None
    x, y = xs[hits[-1]], ys[hits[-1]]
    return math.hypot(x - c.x, y - c.y)


def iou(a, b):
    a, b = np.asarray(a, bool), np.asarray(b, bool)
    union = (a | b).sum()
    return 1.0 if union == 0 else (a & b).sum() / union


@pytest.fixture(scope="session")
def small_params():
    return PipelineParams()


@pytest.fixture(scope="session")
def small_model(small_params):
    """Model trained on 2 synthetic subjects per gender, 16 frames per view."""
    return train_pipeline(synthetic_sequences(2, frames=16, seed=0), small_params)

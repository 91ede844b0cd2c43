"""Parametric synthetic walkers for desk-scale testing.

A walker is a head disc, a tapered elliptic torso and two swinging legs with
feet, rendered into a raw canvas. Body parts are 3-D ellipses/boxes with a
lateral and a forward (walking-direction) half-extent; a camera view angle
``a`` projects a point ``(lateral, forward)`` to image ``x = lateral*cos(a) +
forward*sin(a)``. Walkers always move towards +x, so the back faces -x.

All lengths in :class:`SubjectParams` are fractions of the body height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import GaitSequence
from .viewpoint import DEFAULT_VIEWS

CANVAS = (240, 320)
GAIT_PERIOD = 15  # frames per stride cycle
TORSO_END = 0.52
HIP_LATERAL = 0.045
STRIDE = 0.18
LIFT = 0.035
THIGH_HALF = 0.05
ANKLE_HALF = 0.024
FOOT_HEIGHT = 0.045
# a camera above the ground sees nearer feet lower in the image: row shift per
# unit of depth towards the camera (body heights), for a ~1 m high camera ~4.5 m away
PERSPECTIVE = 0.2

# gender -> (mean, sd) for each trait
_TRAITS = {
    1: {
        "shoulder": (0.128, 0.006),
        "hip": (0.092, 0.005),
        "chest": (0.080, 0.004),
        "seat": (0.066, 0.004),
        "head": (0.058, 0.002),
    },
    -1: {
        "shoulder": (0.110, 0.006),
        "hip": (0.108, 0.005),
        "chest": (0.070, 0.004),
        "seat": (0.076, 0.004),
        "head": (0.064, 0.002),
    },
}

BAG_ROWS = (0.19, 0.40)
BAG_LATERAL = 0.075
BAG_DEPTH = 0.085
COAT_SCALE = 1.18
COAT_END = 0.66


@dataclass(frozen=True)
class SubjectParams:
    gender: int
    shoulder: float  # lateral half-widths
    hip: float
    chest: float  # forward half-depths at shoulder and hip level
    seat: float
    head: float  # head radius
    phase: float  # stride phase offset in cycles
    height_px: float  # rendered body height in pixels


def make_subject(gender: int, subject: int = 0, seed: int = 0) -> SubjectParams:
    """Deterministic subject drawn from the gender's trait distribution."""
    if gender not in (1, -1):
        raise ValueError("gender must be +1 (male) or -1 (female)")
    rng = np.random.default_rng([seed, subject, 1 if gender > 0 else 0])
    traits = {k: float(rng.normal(m, s)) for k, (m, s) in _TRAITS[gender].items()}
    return SubjectParams(
        gender=gender,
        phase=float(rng.uniform()),
        height_px=float(rng.uniform(160, 190)),
        **traits,
    )


def _project(lateral, forward, a):
    return math.hypot(lateral * math.cos(a), forward * math.sin(a))


def _render(p: SubjectParams, view: float, t: int, attachment, canvas, top, cx):
    a = math.radians(view)
    ca, sa = math.cos(a), math.sin(a)
    h, w = canvas
    hp = p.height_px
    rows = (np.arange(h) - top) / hp  # u: 0 at head top, 1 at the feet
    cols = (np.arange(w) - cx) / hp
    u = rows[:, None]
    v = cols[None, :]
    body = np.zeros(canvas, dtype=bool)

    # head and neck
    body |= (v**2 + (u - p.head) ** 2) <= p.head**2
    torso_start = 2 * p.head + 0.012
    body |= (np.abs(v) <= 0.03) & (u >= 2 * p.head - 0.02) & (u <= torso_start + 0.03)

    # torso: ellipse cross-section projected, tapering from shoulders to hips
    shoulder = _project(p.shoulder, p.chest, a)
    hip = _project(p.hip, p.seat, a)
    end = TORSO_END
    if attachment == "coat":
        shoulder *= COAT_SCALE
        hip *= COAT_SCALE
        end = COAT_END
    s = np.clip((rows - torso_start) / (end - torso_start), 0.0, 1.0)
    half = shoulder + (hip - shoulder) * np.clip(s * (end - torso_start) / (TORSO_END - torso_start), 0, 1)
    round_top = np.sqrt(np.clip(1.0 - (1.0 - np.minimum(s / 0.15, 1.0)) ** 2, 0.0, 1.0))
    half = half * round_top
    in_rows = (rows >= torso_start) & (rows <= end)
    body |= in_rows[:, None] & (np.abs(v) <= half[:, None])

    # legs: slabs from the hip joint to the ankle, then a trapezoid foot
    for i, side in enumerate((1.0, -1.0)):
        phi = 2 * math.pi * (t / GAIT_PERIOD + p.phase) + i * math.pi
        forward = STRIDE * math.sin(phi)
        lift = LIFT * max(0.0, math.cos(phi)) ** 2
        hip_x = side * HIP_LATERAL * ca
        ankle_x = hip_x + forward * sa
        depth = forward * ca - side * HIP_LATERAL * sa  # towards the camera
        ankle_u = 1.0 - FOOT_HEIGHT - lift + PERSPECTIVE * depth
        hip_u = TORSO_END - 0.04
        s_leg = (rows - hip_u) / (ankle_u - hip_u)
        ok = (s_leg >= 0) & (s_leg <= 1)
        centre = hip_x + (ankle_x - hip_x) * s_leg
        half_leg = THIGH_HALF + (ANKLE_HALF - THIGH_HALF) * s_leg
        body |= ok[:, None] & (np.abs(v - centre[:, None]) <= half_leg[:, None])

        # toes point forward (+x); seen from the front the toes splay wider,
        # seen from behind only the narrow heel shows
        toe_shift = 0.025 * sa
        sole = 0.022 + 0.02 * max(ca, 0.0) + 0.03 * sa
        s_foot = (rows - ankle_u) / FOOT_HEIGHT
        ok = (s_foot >= 0) & (s_foot <= 1)
        centre = ankle_x + toe_shift * s_foot
        half_foot = ANKLE_HALF + (sole - ANKLE_HALF) * s_foot
        body |= ok[:, None] & (np.abs(v - centre[:, None]) <= half_foot[:, None])

    if attachment == "bag":
        back = -p.chest
        xs = [lat * ca + fwd * sa for lat in (-BAG_LATERAL, BAG_LATERAL)
              for fwd in (back - BAG_DEPTH, back + 0.03)]
        body |= ((rows >= BAG_ROWS[0]) & (rows <= BAG_ROWS[1]))[:, None] & (
            (v >= min(xs)) & (v <= max(xs))
        )
    return body


def generate_synthetic_walker(
    gender: int,
    view: float,
    t: int,
    *,
    subject: int = 0,
    attachment: str | None = None,
    noise: float = 0.0,
    seed: int = 0,
    canvas=CANVAS,
    height_px: float | None = None,
    origin: tuple | None = None,
) -> np.ndarray:
    """Raw binary silhouette of a synthetic walker at frame ``t``.

    ``attachment`` is ``None``, ``"bag"`` (a box on the upper back) or
    ``"coat"`` (bulkier torso covering the thighs). ``noise`` is the fraction
    of canvas pixels flipped. ``origin`` overrides the ``(top_row,
    centre_col)`` of the body; ``height_px`` overrides the subject's size.
    """
    if attachment not in (None, "bag", "coat"):
        raise ValueError(f"unknown attachment {attachment!r}")
    p = make_subject(gender, subject, seed)
    if height_px is not None:
        p = replace(p, height_px=float(height_px))
    if origin is None:
        top = 0.5 * (canvas[0] - p.height_px)
        drift = ((t % 20) - 10) * 1.5 * math.sin(math.radians(view))
        cx = canvas[1] / 2 + drift
    else:
        top, cx = origin
    mask = _render(p, view, t, attachment, tuple(canvas), top, cx)
    if noise > 0:
        rng = np.random.default_rng([seed, subject, 1 if gender > 0 else 0, int(view), t, 7])
        n = int(round(noise * mask.size))
        idx = rng.choice(mask.size, size=n, replace=False)
        flat = mask.ravel()
        flat[idx] = ~flat[idx]
    return mask


def subject_id(gender: int, subject: int) -> str:
    return f"{'m' if gender > 0 else 'f'}{subject:03d}"


def synthetic_sequences(
    n_per_gender: int = 8,
    views=DEFAULT_VIEWS,
    conditions=("normal",),
    sequences_per_condition: int = 1,
    frames: int = 20,
    noise: float = 0.0,
    seed: int = 0,
    start_frame: int = 0,
) -> list:
    """Lazily generated sequences for ``n_per_gender`` subjects of each gender."""
    attach = {"normal": None, "bag": "bag", "coat": "coat"}
    out = []
    for gender in (-1, 1):
        for subj in range(n_per_gender):
            for cond in conditions:
                for k in range(1, sequences_per_condition + 1):
                    for view in views:
                        t0 = start_frame + (k - 1) * frames

                        def load(g=gender, s=subj, c=cond, v=view, t0=t0):
                            return [
                                generate_synthetic_walker(
                                    g, v, t, subject=s, attachment=attach[c], noise=noise, seed=seed
                                )
                                for t in range(t0, t0 + frames)
                            ]

                        out.append(GaitSequence(subject_id(gender, subj), gender, cond, int(view), k, load))
    return out

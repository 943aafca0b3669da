"""Presence features: how a court coordinate turns into five region beliefs.

Run: python demos/01_presence_features.py
"""
import numpy as np

from microtactics.court import CHANNEL_NAMES
from microtactics.fuzzy import DEFAULT_X, DEFAULT_Y, KernelBank, fuzzify, fuzzy_channel_names, tri_membership

# One coordinate against every x triangle. Neighbouring triangles overlap,
# so a point between two peaks gets partial belief in both.
for x in (0.0, 10.0, 47.0, 85.0):
    beliefs = [tri_membership(x, tri) for tri in DEFAULT_X]
    print(f"x={x:5.1f} ->", " ".join(f"{b:.3f}" for b in beliefs))

# A whole micro-event: 22 coordinate channels over 25 frames.
rng = np.random.default_rng(0)
micro = np.empty((22, 25))
micro[0::2] = np.linspace(20, 80, 25) + rng.normal(0, 1, (11, 25))
micro[1::2] = 25 + rng.normal(0, 3, (11, 25))
fz = fuzzify(micro, KernelBank())
names = fuzzy_channel_names()
print("\nraw", micro.shape, "-> fuzzy", fz.shape)
print("first raw channel:", CHANNEL_NAMES[0], "| its fuzzy channels:", names[:5])

# The ball drifts from x=20 to x=80, so belief moves across regions.
ball_x = fz[:5]
print("dominant x region of the ball per frame:", ball_x.argmax(axis=0))

# The y triangles cover the court width the same way.
print("y=25 ->", " ".join(f"{tri_membership(25.0, t):.3f}" for t in DEFAULT_Y))

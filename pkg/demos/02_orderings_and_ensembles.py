# coding: utf-8

# # Scan orderings and combining information maps
#
# The eight rotations and flips of the square give eight scan orders. A model is
# applied to the rotated image, and its map is rotated back.

# In[1]:

import math

import numpy as np

from argus_forge.ensemble import combine_information
from argus_forge.orderings import ORDERINGS, apply_transform, compose, invert_transform, inverse


# Ids are 4*flip + rotation. Each ordering has an inverse in the group.

# In[2]:

x = np.arange(12).reshape(3, 4)
for o in ORDERINGS:
    back = invert_transform(o, apply_transform(o, x))
    print(o, "inverse", inverse(o), "compose(o, inverse) =", compose(o, inverse(o)), "roundtrip ok", np.array_equal(back, x))


# # Averaging likelihoods, not surprises
#
# Each member k reports per-pixel information I_k = -log p_k. The ensemble
# averages the probabilities: I = log K - logsumexp(-I_k). The result lies
# between the smallest member surprise and the mean surprise.

# In[3]:

pair = combine_information([np.array([[-math.log(0.5)]]), np.array([[-math.log(0.25)]])])
print("p = 0.5 and 0.25 ->", pair[0, 0], "=", -math.log(0.375))

rng = np.random.default_rng(2)
maps = [rng.gamma(2.0, 3.0, size=(4, 4)) for _ in range(8)]
combined = combine_information(maps)
stack = np.stack(maps)
print("min <= combined:", bool(np.all(stack.min(0) <= combined + 1e-12)))
print("combined <= mean:", bool(np.all(combined <= stack.mean(0) + 1e-12)))


# Note that a single confident member pulls the combined surprise down. Only
# pixels that every member finds unlikely stay bright.

# coding: utf-8

# # Masked convolutions and autoregressive likelihoods
#
# A PixelCNN predicts each pixel from the pixels above it and to its left.
# Channels are ordered R, G, B inside a pixel. The masks below enforce this, and
# this demo checks it numerically.

# In[1]:

import itertools

import numpy as np
from scipy.special import softmax

from argus_forge import Image, ModelConfig, forward_logits, init_parameters, pixel_log_likelihood
from argus_forge.masked_models import MaskSpec, build_mask


# A 5x5 type-A mask with three channel groups. The centre tap of output group g
# only sees input groups strictly below g. Type B also lets a group see itself.

# In[2]:

mask_a = build_mask(MaskSpec("A", 5, 5, 3, 3, 3, 3))
mask_b = build_mask(MaskSpec("B", 5, 5, 3, 3, 3, 3))
print("spatial support of type A, output R, input R:")
print(mask_a[0, 0].astype(int))
print("centre taps, rows = output channel, cols = input channel")
print("A:\n", mask_a[:, :, 2, 2].astype(int))
print("B:\n", mask_b[:, :, 2, 2].astype(int))


# # Causality, numerically
#
# Perturb everything from raster position k onwards. The logits before k must
# not move.

# In[3]:

rng = np.random.default_rng(0)
params = init_parameters(ModelConfig(family="gated", block_count=3, hidden_width=24), seed=0)
# perturb the weights so the zero-initialized head is not trivially causal
weights = {n: w + rng.normal(scale=0.1, size=w.shape).astype(w.dtype) for n, w in params.weights.items()}
params = type(params)(params.config, weights, params.epoch_tag)

im = Image(rng.integers(0, 256, size=(10, 10, 3)))
k = 47
px = im.pixels.reshape(-1, 3).astype(np.int64).copy()
px[k:] = rng.integers(0, 256, size=px[k:].shape)
before = forward_logits(params, im).reshape(100, 3, -1)
after = forward_logits(params, im.with_pixels(px.reshape(10, 10, 3))).reshape(100, 3, -1)
print("max change before k:", np.abs(before[:k] - after[:k]).max())
print("max change from k on:", np.abs(before[k:] - after[k:]).max())


# # The model is a real distribution
#
# On a 1x2 single-channel image with 4 grey levels there are only 16 images.
# Their probabilities sum to one.

# In[4]:

tiny = init_parameters(ModelConfig(family="pixelcnn", block_count=2, hidden_width=6,
                                   channel_count=1, bitdepth=2, input_kernel=3), seed=1)
total = sum(np.exp(pixel_log_likelihood(tiny, Image(np.array([[[a], [b]]]), 2)).sum())
            for a, b in itertools.product(range(4), repeat=2))
print("sum over all 16 images:", total)

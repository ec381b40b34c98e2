# coding: utf-8

# # Localizing splices end to end
#
# Train a small Gated PixelCNN on pristine synthetic images, then flag pixels
# of spliced test images that the model finds surprising. This is a shrunk
# version of the acceptance experiment: a few minutes on one CPU core.

# In[1]:

import tempfile
from pathlib import Path

import numpy as np

from argus_forge import ModelConfig
from argus_forge.dataset import DatasetConfig, build_dataset
from argus_forge.ensemble import build_default_ensemble, ensemble_information_map, write_heatmap_png
from argus_forge.evaluation import ensemble_map_fn, evaluate_by_size
from argus_forge.training import TrainConfig, train

root = Path(tempfile.mkdtemp(prefix="argus_demo_"))
print("writing to", root)


# # Data
#
# Pristine images are smooth tinted textures. Test images have one pasted
# object each, drawn from a different texture family.

# In[2]:

manifest = build_dataset(DatasetConfig(train_count=12, test_count=16, image_size=48, sizes=(8, 16), seed=1),
                         root / "data")
print(len(manifest.train), "train,", len(manifest.test), "test")


# # Training
#
# Checkpoints are stored every two epochs. Later they double as ensemble members.

# In[3]:

store = train(TrainConfig(epochs=40, crop_size=48, seed=1), manifest.train_images(),
              ModelConfig(family="gated"), root / "store")
print("loss per epoch:", np.round(store.loss_history, 2))


# # Detection
#
# Eight members from late checkpoints, each with a random scan ordering.

# In[4]:

spec = build_default_ensemble(store, 8, seed=0, first_epoch=4)
entry = manifest.test[0]
info = ensemble_information_map(spec, manifest.load_image(entry))
write_heatmap_png(root / "heatmap.png", info)
gt = manifest.load_mask(entry)
print("mean information inside splice %.2f, outside %.2f nats" % (info[gt].mean(), info[~gt].mean()))


# # Evaluation
#
# Precision-recall AUC pooled per splice size. Compare with the prevalence,
# which is what a constant score would get. Forty epochs leave the model far
# from converged; longer training mostly sharpens the small strata.

# In[5]:

report = evaluate_by_size(manifest, ensemble_map_fn(spec), label="Gated ensemble")
print(report.to_table())
print("prevalence:", {s: round(p, 4) for s, p in report.prevalence.items()})
report.write(root / "report")

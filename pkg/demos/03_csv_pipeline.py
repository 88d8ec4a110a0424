# Reduce -> choose dimension -> regress on the leading direction,
# starting from a CSV file on disk.
import json
import tempfile
from pathlib import Path

import numpy as np

from modal_sdr import Dataset, LmopgConfig, ingest_csv, real_data_pipeline, write_csv

rng = np.random.default_rng(1)
X = rng.standard_normal((1500, 5)) * [1, 3, 0.5, 2, 1] + 10
beta = np.array([0.2, -0.1, 0.0, 0.4, 0.0])
y = 5 * X @ beta + 3 + 0.1 * rng.standard_normal(1500)

path = Path(tempfile.mkdtemp()) / "plant.csv"
write_csv(path, Dataset(X, y), names=["a", "b", "c", "d", "e"], response_name="out")

train = ingest_csv(path, "out", row_range=(0, 1000))
test = ingest_csv(path, "out", row_range=(1000, 1500))
rep = real_data_pipeline(train, test, LmopgConfig(d=1))

print("eigenvalue proportions:", np.round(rep.eigen_proportions, 4))
print("chosen d:", rep.chosen_d)
print("direction:", np.round(rep.basis, 4))
print("true direction:", np.round(beta / np.linalg.norm(beta), 4))
print(json.dumps({k: v for k, v in rep.to_dict().items() if k.startswith(("test", "train"))}, indent=1))

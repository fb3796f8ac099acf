# Regenerates model_oracle.json with scikit-learn reference outputs.
import json
import sys

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier
from sklearn.svm import SVC

rng = np.random.RandomState(7)
x = rng.normal(size=(80, 4))
y = ((x[:, 0] * x[:, 1] + 0.5 * x[:, 2] + 0.3 * rng.normal(size=80)) > 0).astype(int)
xt = rng.normal(size=(25, 4))

out = {"x": x.tolist(), "y": y.tolist(), "x_test": xt.tolist()}
for name, gamma in [("svm_sota", 0.0186), ("svm_def", "auto"), ("svm_wide", 0.5)]:
    m = SVC(kernel="rbf", C=1.0, gamma=gamma).fit(x, y)
    out[name + "_decision"] = m.decision_function(xt).tolist()
    out[name + "_n_support"] = int(m.support_.size)
# Later stages contain equal-gain splits that the reference breaks by a
# random feature order; the first five stages have none.
g = GradientBoostingClassifier(n_estimators=5, max_depth=3, learning_rate=0.1, random_state=0).fit(x, y)
out["gbm5_train_proba"] = g.predict_proba(x)[:, 1].tolist()
json.dump(out, sys.stdout, indent=1)

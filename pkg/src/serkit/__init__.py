"""serkit: deploy binary valence/arousal speech emotion recognition on a new corpus.

Subpackages map onto the pipeline stages: acoustic feature extraction
(``audio_features``), corpus and label handling (``corpus``), a minimal
feed-forward network engine (``nn``), medoid-based active learning (``mal``),
Wasserstein adversarial domain adaptation (``wda``), an RBF-kernel SVM
(``svm``), evaluation metrics (``metrics``), and the experiment CLI plus
annotation HTTP service (``cli``, ``api``).
"""

__version__ = "0.1.0"

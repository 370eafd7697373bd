"""levembed: neural sequence embeddings approximating Levenshtein distance.

A library and CLI that learns fixed-dimension vector embeddings of
symbol sequences such that a scaled squared Euclidean distance between
embeddings approximates the exact edit distance, trained with a
Poisson-regression objective, plus a covariance-spectrum procedure for
choosing the embedding dimension and a suite of statistical diagnostics.
"""

from .datagen import (
    Cluster,
    DatasetSplit,
    EditChannelConfig,
    PairSample,
    build_clusters,
    estimate_mean_distance,
    load_clusters,
    load_pairs,
    make_pairs,
    mutate,
    save_clusters,
    save_pairs,
    split_by_cluster,
    split_clusters,
)
from .errors import DataError, LevembedError, NumericError, UsageError
from .esd import (
    EsdDetection,
    EsdReport,
    Spectrum,
    detect_esd,
    diff_covariance,
    esd_scan,
    sym_eigen,
)
from .seqcore import (
    DNA,
    Alphabet,
    Sequence,
    SequenceError,
    levenshtein,
    levenshtein_banded,
    one_hot,
    pad,
)
from .siamese import (
    ArchitectureSpec,
    EmbeddingModel,
    TrainConfig,
    init_scale,
    loss_and_grad,
    predict_distance,
    predict_distances,
    train,
    train_step,
)

__version__ = "0.1.0"

"""Self-supervised node embeddings by contrasting perturbed neighborhood views.

The library trains a shared mean-pooling GNN so that two stochastically
perturbed views of each node's neighborhood map to nearby points, using a
temperature-scaled contrastive loss over in-batch negatives. Embedding quality
is measured with a linear probe on frozen embeddings.
"""

from .contrastive import (
    BatchEmbeddings,
    LossConfig,
    batch_loss,
    cosine_similarity,
    mi_lower_bound,
    pair_loss,
)
from .datasets import LabeledDataset, Split, load_dataset, save_dataset
from .encoder import (
    EmbeddingMatrix,
    EncoderParams,
    elu,
    encode,
    glorot_init,
    init_params,
    mean_pool_layer,
)
from .graph import FeatureMatrix, Graph, NormalizedAdjacency, normalize_adjacency
from .optim import AdamState, adam_step
from .perturb import PerturbConfig, drop_edges, make_views, mask_features
from .probe import LinearProbe, accuracy, fit_probe, micro_f1, probe_report
from .sampling import FanoutConfig, Subgraph, l_hop_subgraph, minibatches, sample_fanout_subgraph
from .synth import SbmSpec, generate
from .training import (
    EpochRecord,
    TrainConfig,
    embed,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BatchEmbeddings",
    "LossConfig",
    "batch_loss",
    "cosine_similarity",
    "mi_lower_bound",
    "pair_loss",
    "LabeledDataset",
    "Split",
    "load_dataset",
    "save_dataset",
    "EmbeddingMatrix",
    "EncoderParams",
    "elu",
    "encode",
    "glorot_init",
    "init_params",
    "mean_pool_layer",
    "FeatureMatrix",
    "Graph",
    "NormalizedAdjacency",
    "normalize_adjacency",
    "AdamState",
    "adam_step",
    "PerturbConfig",
    "drop_edges",
    "make_views",
    "mask_features",
    "LinearProbe",
    "accuracy",
    "fit_probe",
    "micro_f1",
    "probe_report",
    "FanoutConfig",
    "Subgraph",
    "l_hop_subgraph",
    "minibatches",
    "sample_fanout_subgraph",
    "SbmSpec",
    "generate",
    "EpochRecord",
    "TrainConfig",
    "embed",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "__version__",
]

"""Forward and backward tree-line principal component analysis."""
from .tree_core import (
    ROOT,
    DataSet,
    LabeledTree,
    NodeId,
    Record,
    TreeError,
    TreePath,
    distance,
    enumerate_paths,
    intersection,
    support,
    validate,
)
from .pca import (
    Decomposition,
    TreeLine,
    backward_step,
    backward_weights,
    decompose,
    forward_step,
    forward_weights,
    project,
    project_union,
    residual,
    verify_equivalence,
)

__version__ = "0.1.0"

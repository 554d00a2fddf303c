"""Incomplete multi-view clustering with shared heredity and per-view variation."""

from .clustering import kmeans, labels_from_H
from .dataset import (IncompleteDataset, IndexMatrix, MultiViewDataset, apply_missing,
                      build_index_matrix, generate_synthetic, load_dataset, save_dataset)
from .metrics import accuracy, evaluate, nmi, purity
from .solver import FitResult, Hyperparams, SolverState, fit

__version__ = "0.1.0"

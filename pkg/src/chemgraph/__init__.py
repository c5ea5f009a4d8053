"""Graph tensors for chemical systems, with classical and graph-neural learners.

scikit-learn wrappers live in :mod:`chemgraph.estimators`.
"""

from .baselines import gp_fit, gp_predict, linreg_fit, linreg_predict, mean_squared_error, r2_score
from .encode import (build_graph, build_graph_sequence, build_molecule_graph, build_process_graph,
                     build_protein_graph, build_reaction_graph)
from .exceptions import (CheckpointError, ChemGraphError, ConfigError, EmptyAggregationError, EncodingError,
                         GraphFileError, GraphValidationError, NonFiniteError, NumericalError, ParseError,
                         ShapeError, TrainingError, UndefinedMetricError)
from .featurize import (SubgraphPattern, count_substructure, fingerprint, graph_statistics,
                        has_substructure)
from .gnn import (Dataset, GraphBatch, TrainConfig, gcn_layer, graphnets_layer, init_gcn_model,
                  init_graphnets_model, predict, train)
from .graph import (Connectivity, GraphTensor, adjacency_list, adjacency_matrix, check_graph,
                    contact_adjacency, permute_nodes, validate)
from .io import load_graph
from .nn import init_mlp, mlp_forward, mlp_gradients, mse_loss, sgd_step
from .tensor import aggregate, as_tensor, concat_cols, concat_rows, matmul

__version__ = "0.1.0"

__all__ = [
    "ChemGraphError", "CheckpointError", "ConfigError", "EmptyAggregationError", "EncodingError",
    "GraphFileError", "GraphValidationError", "NonFiniteError", "NumericalError", "ParseError",
    "ShapeError", "TrainingError", "UndefinedMetricError",
    "Connectivity", "GraphTensor", "adjacency_list", "adjacency_matrix", "check_graph",
    "contact_adjacency", "permute_nodes", "validate",
    "aggregate", "as_tensor", "concat_cols", "concat_rows", "matmul",
    "build_graph", "build_graph_sequence", "build_molecule_graph", "build_process_graph",
    "build_protein_graph", "build_reaction_graph", "load_graph",
    "SubgraphPattern", "count_substructure", "fingerprint", "graph_statistics", "has_substructure",
    "gp_fit", "gp_predict", "linreg_fit", "linreg_predict", "mean_squared_error", "r2_score",
    "init_mlp", "mlp_forward", "mlp_gradients", "mse_loss", "sgd_step",
    "Dataset", "GraphBatch", "TrainConfig", "gcn_layer", "graphnets_layer", "init_gcn_model",
    "init_graphnets_model", "predict", "train",
]

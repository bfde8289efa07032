"""Graph constructions and ensembles."""
from .canopy import (
    CanopyTree,
    EpsilonSequence,
    ReinforcedTree,
    RootDepthLaw,
    canopy_tree,
    eps,
    epsilon_sequence,
    reinforce_edges,
    reinforced_edge_total,
    root_depth_distribution,
    xi,
)
from .ensembles import (
    AGWEnsemble,
    BiasedEnsemble,
    DegreeCapExceeded,
    ENSEMBLE_KINDS,
    Ensemble,
    FiniteGraphEnsemble,
    FixedGraphEnsemble,
    LRPEnsemble,
    augmented_galton_watson,
    bias_by_degree,
    complete_graph,
    cycle_graph,
    finite_graph_ensemble,
    make_ensemble,
    path_graph,
    star_graph,
    unbias_by_degree,
)
from .galton_watson import AugmentedGW, normalise_offspring, offspring_mean
from .percolation import PercolationGraph, cluster_of_origin, edge_probability, long_range_percolation
from .structured import GrandfatherGraph, Lattice, RegularTree, grandfather_graph, lattice, regular_tree

"""Stochastic entropy production for exchanges of noncommuting conserved charges.

Computes Kirkwood-Dirac quasiprobabilities over measurement trajectories,
evaluates the charge, surprisal, and trajectory entropy-production formulae,
and verifies their fluctuation theorems, averages, and contextuality
witnesses on small bipartite systems.
"""

from .charges import (
    Charge,
    ChargeSet,
    ProductIndex,
    build_charge_set,
    charge_set_from_preset,
    check_conservation,
    global_charge,
    product_projector,
    random_commuting_block_unitary,
    random_conserving_unitary,
)
from .errors import NasepError
from .instance import Instance
from .linalg import (
    HermitianEigensystem,
    herm_eig,
    herm_exp,
    herm_log,
    partial_trace,
    tensor_product,
)
from .quasiprob import (
    QuasiDistribution,
    Trajectory,
    enumerate_trajectories,
    forward_kdq,
    is_conserving,
    quasi_average,
    reverse_kdq,
    single_index_marginal,
    symmetrized_kdq,
)
from .sep import (
    FluctuationReport,
    SepSample,
    WeakValuePair,
    avg_sigma_chrg,
    avg_sigma_surp,
    avg_sigma_traj,
    contextuality_witness,
    ft_chrg,
    ft_surp,
    ft_traj,
    kappa,
    sigma_chrg,
    sigma_surp,
    sigma_surp_degenerate_demo,
    sigma_traj,
    symmetrized_seps,
    weak_values,
)
from .thermal import (
    DensityOperator,
    GgeSpec,
    coherent_difference,
    dephase,
    gge_state,
    initial_product_state,
    relative_entropy,
    von_neumann_entropy,
)
from .pointer import PointerProtocol, estimate_weak_value, pointer_run

__version__ = "0.1.0"

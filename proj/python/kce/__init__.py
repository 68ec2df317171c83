"""Kernelized concept erasure: Python bindings to the C++ core."""

from ._kce import (
    ErasureResult,
    GameSolution,
    InvalidArgument,
    IoError,
    KernelSpec,
    NumericalError,
    NystromMap,
    PreimageNet,
    SolverConfig,
    config_hash,
    config_keys,
    cross_gram,
    expand_kernel_grid,
    fantope_project,
    fit_nystrom,
    gram,
    init_preimage_net,
    kernel_adversary_accuracy,
    linear_probe,
    load_erasure,
    mlp_adversary_accuracy,
    poly2_oracle_check,
    preimage_loss,
    solve_game,
    spearman,
    synth_radial,
    weat_effect,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Projection-based two-sample tests for mesoscale network structure.

Indices are 0-based. Network stacks are sequences of n x n numpy arrays.
"""

from ._mesonet import (
    ArgumentError,
    DataFormatError,
    DegenerateSignalError,
    HeldOutViolation,
    HypothesisSet,
    MesonetError,
    NumericalError,
    ProjectionPair,
    TwoSampleData,
    __version__,
    apply_statistic,
    basic_gaussian_f_test,
    basic_proportion_test,
    block_projection,
    degree_correct,
    density_correct,
    f_cdf,
    f_quantile,
    generate,
    learn_projections_impute,
    learn_projections_rect,
    ncp_psi,
    noncentral_f_cdf,
    power_oracle_GP,
    projector_distance,
    random_projection,
    read_stack,
    run_experiment,
    stat_E,
    stat_EUD,
    stat_G,
    stat_GP,
    write_stack,
)


def two_sample_test(sample1, sample2, rows, cols, *, d=2, family="gaussian", stat="auto",
                    learn="rect", correction="none", alpha=0.05):
    """Learn a projection from held-out edges, then test equality on rows x cols."""
    data = TwoSampleData(list(sample1), list(sample2), family)
    s = HypothesisSet.rectangle(list(rows), list(cols))
    learner = learn_projections_rect if learn == "rect" else learn_projections_impute
    p = learner(data, s, d)
    if correction == "density":
        p = density_correct(p)
    elif correction == "degree":
        p = degree_correct(p, s)
    elif correction != "none":
        raise ValueError(f"unknown correction {correction!r}")
    return apply_statistic(stat, data, s, p, alpha)

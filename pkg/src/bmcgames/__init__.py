"""Mismatched decoding and universal metric games for binary memoryless channels."""
from .channels import (
    UNIFORM,
    BinaryChannel,
    ChannelClass,
    DegenerateMarginal,
    InputDistribution,
    JointDistribution,
    Metric,
    MetricBank,
    aposteriori_metric,
    binary_entropy,
    capacity,
    class_of,
    joint,
    kl_divergence,
    likelihood_bank,
    likelihood_metric,
    mutual_information,
    product_marginal,
    reverse,
    z_channel_capacity,
)
from .mismatch import MismatchResult, i_mis, i_mis_oracle, i_mis_single, marginal_segment, threshold

__version__ = "0.1.0"

from .zalcman import (
    FamilyMember,
    MetricField,
    Polydisk,
    RankComparison,
    RescalingSequence,
    SampledFamily,
    affine_rescaling,
    ball_sample,
    divergence_witness,
    fs_derivative,
    image_rank,
    metric_lemma_search,
    rank_comparison,
    rescaled_eval,
    zalcman_extract,
)

"""Large-system analysis of the reduced-state turbo detector."""
from .moments import (VirtualChannelParams, closed_form_moments, desired_power,
                      effective_noise, interference_moment)
from .efficiency import (EfficiencySolution, FeedbackDistribution, combine_efficiency,
                         efficiency_rhs, gauss_normal_rule, pic_efficiency, solve_efficiency)
from .transfer import (DecoderTransfer, FeedbackSummary, build_transfer_table,
                       default_transfer, simulate_transfer_point)
from .evolution import (EvolutionTrace, LsaConfig, channel_energy_samples, evolve_iterations,
                        predict_ber)

__all__ = [
    "VirtualChannelParams", "closed_form_moments", "desired_power", "effective_noise",
    "interference_moment", "EfficiencySolution", "FeedbackDistribution",
    "combine_efficiency", "efficiency_rhs", "gauss_normal_rule", "pic_efficiency",
    "solve_efficiency", "DecoderTransfer", "FeedbackSummary", "build_transfer_table",
    "default_transfer", "simulate_transfer_point", "EvolutionTrace", "LsaConfig",
    "channel_energy_samples", "evolve_iterations", "predict_ber",
]

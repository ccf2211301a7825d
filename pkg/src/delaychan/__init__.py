"""delaychan: discrete-time simulation and capacity analysis of channels
with variable delay and noise."""

from .channel import (CHANNELS, ChannelKind, CompositionOrder, ConfigError,
                      Discretization, FixedDelaySource, TransmitResult,
                      apply_delay, apply_noise, as_bits, as_delays,
                      delivered_total, parse_channel, transmit)
from .stochastic import (DelayConvention, DelayModel, NoiseModel, QueueTrace,
                         as_fraction, departure_probability_bounds,
                         heavy_interval_fraction, queue_trace, sample_delay,
                         sample_noise)
from .adversaries import (BatchReleaseDelaySource, BernoulliNoiseSource,
                          BurstNoiseSource, DelayAdversaryState,
                          DelayAwareNoiseSource, GeometricDelaySource,
                          NoiseAdversaryState, RandomBudgetNoiseSource,
                          batch_release_delay, burst_noise, canonicalize,
                          delay_adversary_params, delay_aware_noise,
                          flip_budget, noise_adversary_params,
                          random_budget_noise, signature_vector)
from .capacity import (CapacityReport, EmptyChannelError, EntropyBoundReport,
                       SvnChannelSpec, blahut_arimoto, channel_capacity,
                       entropy_bits, entropy_bound_checks, enumerate_inputs,
                       fano_style_lower_bound, mutual_information,
                       transition_matrix, transition_row)
from .codec import (BlockDiagnostics, CodecParams, OuterCode, block_decode,
                    block_encode, build_outer_code, classify_blocks,
                    demodulate, encode_message, interval_sum, outer_decode)
from .harness import (ExperimentConfig, ResultsSummary, TrialRecord,
                      capacity_report, records_to_csv, results_to_json,
                      run_monte_carlo, sweep, validate_config)
from .stats import two_sample_chisquare, wilson_interval

__version__ = "0.1.0"

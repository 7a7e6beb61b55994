"""Monte Carlo simulation of ANC noise and outage in multiuser AF relay networks."""

__version__ = "0.1.0"

from .errors import AncError, ConfigError, DomainError, ValidationError
from .topology import (NetworkTopology, SweepConfig, amplitude_attenuation,
                       build_symmetric_sweep, reference_sweep)
from .channel import (ChannelRealization, CorrelationSpec, channel_count, sample_channels,
                      uniform_gamma)
from .power import NoisePowers, PowerAllocation, allocate, amplification_factor, thermal_noise_power
from .anc_core import (NoiseDecomposition, SlotSignals, decompose, noise_variance,
                       noise_variance_terms, reconstruct, simulate_cycle, variance_statistic)
from .outage import (OutageResult, SnrPair, estimate_outage, relay_power_oracle,
                     residual_variance_oracle, sample_ensemble,
                     snr_pair)
from .kernels import BACKEND

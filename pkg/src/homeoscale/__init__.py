"""Behavioral simulator of a synaptic-scaling homeostatic gain-control loop.

A current-mode first-order synaptic filter drives an integrate-and-fire
neuron; a bang-bang comparator steers an ultra-low-leakage voltage ramp
that rescales the shared synaptic gain, holding the filter output (and
therefore the firing rate) at a set point over timescales from seconds to
hundreds of kiloseconds. The event-driven engine advances every state in
closed form, so the longest experiments run in seconds of wall clock.
"""

__version__ = "0.1.0"

from .agc import (AgcRefs, AgcState, apply_sw, chatter_period, comparator,
                  predict_recovery_time, reset, select_vds, slope_for_recovery)
from .device import (DeviceParams, Diagnostics, LeakageCalibration,
                     LeakageCellParams, default_leakage_calibration,
                     electrons_per_second, fit_leakage_calibration, gain_current,
                     llc_slope, v_g_for_slope)
from .dpi import (DpiParams, DpiState, SynapseBank, dpi_crossing_time, dpi_evolve,
                  dpi_steady_state, dpi_time_constant, total_weight_current,
                  v_syn_from_current)
from .engine import (EngineTolerances, Event, Trace, derive_seed, poisson_train,
                     run, segment_bound)
from .errors import CalibrationError, DomainError, SimulationError, ValidationError
from .experiments import (Experiment, PROTOCOLS, RunMetrics, SystemParams,
                          build_learning_protocol, build_long_timescale,
                          build_slope_sweep, build_step_response,
                          default_neuron_params, extract_metrics,
                          measure_ramp_slopes, run_protocol)
from .neuron import (NeuronParams, NeuronState, calibrate_neuron, current_for_rate,
                     next_spike_time, rate_from_current, update_rate_estimate)

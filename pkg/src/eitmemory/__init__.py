"""EIT cold-atom quantum memory: storage and retrieval of single-photon
temporal waveforms, time-reversal waveform optimization, and heralded
photon-counting statistics."""

from .config import (SCENARIOS, SCHEMA_VERSION, ConfigError, RunConfig,
                     load_config, resolve_defaults, validate_config)
from .medium import (GAMMA13_DEFAULT, DephasingFit, FitConvergenceError,
                     MediumParams, Spectrum, eit_bandwidth, fit_dephasing,
                     fit_grid, group_delay, phase_shift, susceptibility,
                     transmission, transmission_spectrum)
from .optimizer import (IterationRecord, OptimizationTrace,
                        efficiency_bound_scan, iterate_optimal, seed_waveform)
from .photonstats import (CLASSICAL_GBAR_THRESHOLD, BudgetReport,
                          CoincidenceHistogram, CountsRun, CountSummary,
                          DetectorConfig, GbarPrediction, LossBudget,
                          SourceConfig, cauchy_schwarz, conditional_g2,
                          events_to_csv, g2_cross, gbar, gc2_from_gbar,
                          histogram, loss_budget,
                          pairing_efficiency_from_success, simulate_counts)
from .propagation import (AuditReport, MediumState, NumericsError,
                          energy_audit, peak_delay, propagate,
                          spectral_oracle, spinwave_energy)
from .protocol import (DEFAULT_RAMP, StorageResult, StorageSchedule,
                       apply_mask, design_grid, fit_lifetime, likeness,
                       lifetime_scan, make_schedule, shape_overlap,
                       storage_efficiency, store_retrieve,
                       waveform_from_histogram)
from .waveforms import (ControlProfile, SwitchEvent, TimeGrid, Waveform,
                        gaussian_pulse, square_pulse)

__version__ = "0.1.0"
